//! Persistence, configuration, report emission and self-checks behind the
//! `orthoflow` command line.

mod config;
mod report;
mod snapshot;
mod verify;

pub use config::{auto_grid, ExperimentConfig, GridPolicy, OutputPaths};
pub use report::{
    default_norm_specs, largeness_table, norm_table, num, write_condition_csv, write_decomposition_csv, write_json,
    write_largeness_csv, write_norms_csv, write_scan_csv, write_trace_csv, LargenessTable, NormRow, CONDITION_HEADER,
    DECOMPOSED_HEADER, LARGENESS_HEADER, NORMS_HEADER, SCAN_HEADER, TRACE_HEADER,
};
pub use snapshot::{load_field, save_field, FieldSnapshot};
pub use verify::{besov_corpus, besov_equivalence_ratios, random_field, run_suite, Check, Suite, VerifyReport};
