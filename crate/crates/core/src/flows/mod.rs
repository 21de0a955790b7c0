//! Heat flows of the data, the interaction forcing, its time integrals and
//! the smallness condition.

mod bilinear;
mod forcing;

pub use bilinear::{advection, bilinear_q, bilinear_q_with, symmetric_flux_divergence, Dealias, Samples, Stress};
pub use forcing::{forcing_f, forcing_from_flows, forcing_grid, heat_flows, vstar};

mod l1l3;
pub use l1l3::{
    forcing_l1l3, forcing_l1l3_with, forcing_l3, forcing_scan, integrate_channels, predicted_exponent, product_l3,
    quadrature_anchor, scan_row, term_norms, ForcingQuadrature, L3Mode, QuadraturePolicy, ScanReport, ScanRow,
    TermEval, TimeIntegral, TERMS,
};

mod condition;
pub use condition::{cg_condition, condition_scan, crossover, ConditionOptions, ConditionReport, ConditionScan};
