use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use orthoflow::datagen::{validate_hypotheses, ConstructionParams, L2Budget, OrthogonalData};
use orthoflow::flows::{condition_scan, forcing_scan, ConditionOptions, L3Mode, QuadraturePolicy};
use orthoflow::harness::{self, GridPolicy};
use orthoflow::norms::{BesovMethod, BesovSpec};
use orthoflow::solver::{decomposition_check, solve_full_ns, solve_residual, EvolutionConfig};
use orthoflow::{FourierGrid, PlaneField};

#[derive(Parser)]
#[command(name = "orthoflow", version, about = "Spectral laboratory for frequency-orthogonal Navier-Stokes data on the 3-torus")]
struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Budget {
    Construction,
    Hypothesis,
}

impl From<Budget> for L2Budget {
    fn from(b: Budget) -> Self {
        match b {
            Budget::Construction => L2Budget::Construction,
            Budget::Hypothesis => L2Budget::Hypothesis,
        }
    }
}

#[derive(clap::Args, Clone)]
struct ParamArgs {
    #[arg(long)]
    eps: f64,
    /// Smallness parameter; defaults to min(eps/8, 0.05).
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    #[arg(long, value_enum, default_value = "construction")]
    budget: Budget,
    /// Accept touching or overlapping frequency bands.
    #[arg(long)]
    allow_overlap: bool,
}

impl ParamArgs {
    fn params(&self, n: u64) -> Result<ConstructionParams> {
        let p = ConstructionParams {
            n,
            eps: self.eps,
            delta: self.delta.unwrap_or((self.eps / 8.0).min(0.05)),
            c: self.c,
            budget: self.budget.into(),
            allow_band_overlap: self.allow_overlap,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScanMode {
    PerTerm,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolveMode {
    Full,
    Residual,
    Decomposed,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Invariants,
    Oracles,
    All,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the initial data, write a snapshot and a validation report.
    Gen {
        #[arg(long = "N")]
        n: u64,
        #[command(flatten)]
        params: ParamArgs,
        /// Grid dims d0,d1,d2; default is the smallest grid holding the data.
        #[arg(long, value_delimiter = ',')]
        dims: Option<Vec<usize>>,
        #[arg(long)]
        out: PathBuf,
        /// Report path; defaults to the snapshot path with a .json extension.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Per-component norm table of a snapshot.
    Norms {
        #[arg(long = "in")]
        input: PathBuf,
        /// Besov request method:s:p:q, e.g. heat:-1:inf:2 (repeatable).
        #[arg(long = "spec")]
        specs: Vec<String>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// B^-1_{inf,inf} of each component over a list of N.
    Largeness {
        #[arg(long = "N", value_delimiter = ',', required = true)]
        ns: Vec<u64>,
        #[command(flatten)]
        params: ParamArgs,
        /// Report the smallest N whose first component exceeds this value.
        #[arg(long = "M")]
        threshold: Option<f64>,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Time-integrated L3 norm of the interaction forcing over a list of N.
    Scan {
        #[arg(long)]
        eps: f64,
        #[arg(long = "N", value_delimiter = ',', required = true)]
        ns: Vec<u64>,
        #[arg(long, value_enum, default_value = "per-term")]
        mode: ScanMode,
        #[arg(long, default_value_t = 32)]
        per_decade: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Evaluate the global-existence condition over a list of N.
    Condition {
        #[arg(long = "N", value_delimiter = ',', required = true)]
        ns: Vec<u64>,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 4.0)]
        p: f64,
        #[arg(long = "C0", default_value_t = 1.0)]
        c0: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Evolve a snapshot.
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        mode: SolveMode,
        #[arg(long = "T")]
        t_final: f64,
        #[arg(long)]
        dt: f64,
        /// Steps between trace rows.
        #[arg(long, default_value_t = 10)]
        stride: usize,
        /// Residual modes only: drop the residual self-interaction.
        #[arg(long)]
        linear: bool,
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Snapshot of the final state (velocity, or residual in residual mode).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in property and oracle suites.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        #[arg(long, default_value_t = 0x0F10)]
        seed: u64,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Print the resolved form of an experiment config.
    Config {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn csv_out(path: &Option<PathBuf>) -> Result<Option<BufWriter<File>>> {
    path.as_ref()
        .map(|p| File::create(p).map(BufWriter::new).with_context(|| format!("creating {}", p.display())))
        .transpose()
}

fn json_out<T: serde::Serialize>(path: &Option<PathBuf>, value: &T) -> Result<()> {
    if let Some(p) = path {
        harness::write_json(p, value).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn parse_exponent(s: &str) -> Result<f64> {
    Ok(match s {
        "inf" | "infinity" => f64::INFINITY,
        _ => s.parse().with_context(|| format!("bad exponent {s:?}"))?,
    })
}

fn parse_spec(s: &str) -> Result<BesovSpec> {
    let parts: Vec<&str> = s.split(':').collect();
    let [method, sv, p, q] = parts[..] else {
        bail!("norm spec {s:?} must look like method:s:p:q");
    };
    let method = match method {
        "heat" => BesovMethod::Heat,
        "dyadic" => BesovMethod::Dyadic,
        m => bail!("unknown method {m:?}; expected heat or dyadic"),
    };
    let sv: f64 = sv.parse().with_context(|| format!("bad smoothness {sv:?}"))?;
    Ok(BesovSpec::new(sv, parse_exponent(p)?, parse_exponent(q)?, method)?)
}

fn sidecar(input: &Path) -> PathBuf {
    input.with_extension("json")
}

/// Rebuilds the planar components from a snapshot; parameters come from the
/// report written next to it by `gen`, when there is one.
fn data_from_snapshot(input: &Path, f: &orthoflow::SpectralVectorField) -> Result<OrthogonalData> {
    let comps = [0, 1, 2].map(|c| PlaneField::extract(f, c));
    let [Some(a), Some(b), Some(c)] = comps else {
        bail!("{}: a component depends on all three coordinates; residual modes need planar data", input.display());
    };
    let params = match std::fs::read_to_string(sidecar(input)) {
        Ok(text) => {
            let v: serde_json::Value = serde_json::from_str(&text)?;
            serde_json::from_value(v["params"].clone()).context("reading params from the report")?
        }
        Err(_) => {
            eprintln!("note: no report next to {}; parameters are placeholders", input.display());
            ConstructionParams::relaxed(2, 0.5)?
        }
    };
    Ok(OrthogonalData::from_components(params, [a, b, c]))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Gen { n, params, dims, out, report } => {
            let p = params.params(n)?;
            let data = OrthogonalData::build(&p)?;
            let grid = match dims {
                Some(d) => {
                    let Ok(d) = <[usize; 3]>::try_from(d.as_slice()) else {
                        bail!("--dims needs three sizes, got {}", d.len());
                    };
                    GridPolicy::Dims(d).resolve(&data)?
                }
                None => data.natural_grid()?,
            };
            harness::save_field(&out, &data.total(&grid)?)?;
            let v = validate_hypotheses(&data)?;
            for c in &v.checks {
                println!("({}) {:<26} {}  {}", c.id, c.name, if c.passed { "pass" } else { "FAIL" }, c.detail);
            }
            let report = report.unwrap_or_else(|| sidecar(&out));
            let body = json!({
                "params": p,
                "dims": grid.dims(),
                "snapshot": out,
                "all_passed": v.all_passed(),
                "checks": v.checks,
            });
            harness::write_json(&report, &body)?;
            println!("wrote {} and {}", out.display(), report.display());
            Ok(true)
        }
        Cmd::Norms { input, specs, csv, json } => {
            let f = harness::load_field(&input).with_context(|| format!("reading {}", input.display()))?;
            let specs = if specs.is_empty() {
                harness::default_norm_specs()
            } else {
                specs.iter().map(|s| parse_spec(s)).collect::<Result<_>>()?
            };
            let rows = harness::norm_table(&f, &specs)?;
            harness::write_norms_csv(std::io::stdout().lock(), &rows)?;
            if let Some(w) = csv_out(&csv)? {
                harness::write_norms_csv(w, &rows)?;
            }
            json_out(&json, &rows)?;
            Ok(true)
        }
        Cmd::Largeness { ns, params, threshold, csv, json } => {
            let first = *ns.iter().min().expect("required");
            let t = harness::largeness_table(&ns, &params.params(first)?, threshold)?;
            harness::write_largeness_csv(std::io::stdout().lock(), &t)?;
            if let Some(w) = csv_out(&csv)? {
                harness::write_largeness_csv(w, &t)?;
            }
            println!("alpha = {}  fit residual = {}  monotone = {}", t.alpha, t.fit_residual, t.monotone);
            if let Some(m) = threshold {
                match t.crossover {
                    Some(n) => println!("smallest N above M = {m}: {n}"),
                    None => println!("no tabulated N exceeds M = {m}"),
                }
            }
            json_out(&json, &t)?;
            Ok(true)
        }
        Cmd::Scan { eps, ns, mode, per_decade, csv, json } => {
            let mode = match mode {
                ScanMode::PerTerm => L3Mode::PerTerm,
                ScanMode::Full => L3Mode::Full,
            };
            let policy = QuadraturePolicy { per_decade, ..Default::default() };
            let r = forcing_scan(&ns, eps, mode, &policy)?;
            harness::write_scan_csv(std::io::stdout().lock(), &r)?;
            if let Some(w) = csv_out(&csv)? {
                harness::write_scan_csv(w, &r)?;
            }
            match r.slope {
                Some(s) => println!("slope = {s}  (bound {})  ratio spread = {}", orthoflow::flows::ScanReport::SLOPE_BOUND, r.ratio_spread()),
                None => println!("single N: no slope"),
            }
            json_out(&json, &r)?;
            Ok(true)
        }
        Cmd::Condition { ns, params, p, c0, csv, json } => {
            let first = *ns.iter().min().expect("required");
            let opts = ConditionOptions { p, c0, ..Default::default() };
            let s = condition_scan(&ns, &params.params(first)?, &opts)?;
            harness::write_condition_csv(std::io::stdout().lock(), &s)?;
            if let Some(w) = csv_out(&csv)? {
                harness::write_condition_csv(w, &s)?;
            }
            match s.crossover {
                Some(n) => println!("crossover N* = {n}"),
                None => println!("no crossover in the table"),
            }
            json_out(&json, &s)?;
            Ok(true)
        }
        Cmd::Solve { input, mode, t_final, dt, stride, linear, csv, json, out } => {
            let f = harness::load_field(&input).with_context(|| format!("reading {}", input.display()))?;
            let mut cfg = EvolutionConfig::new(t_final, dt)?.with_stride(stride);
            if linear {
                cfg = cfg.linearized();
            }
            let grid: FourierGrid = f.grid().clone();
            let mut csv = csv_out(&csv)?;
            match mode {
                SolveMode::Full => {
                    let (trace, state) = solve_full_ns(&f, &cfg)?;
                    if let Some(w) = csv.as_mut() {
                        harness::write_trace_csv(w, &trace)?;
                    }
                    if let Some(o) = &out {
                        harness::save_field(o, &state)?;
                    }
                    println!("sup L3 = {}  max divergence = {:e}", trace.sup_l3(), trace.max_divergence());
                    json_out(&json, &trace)?;
                }
                SolveMode::Residual => {
                    let data = data_from_snapshot(&input, &f)?;
                    let (trace, state) = solve_residual(&data, &grid, &cfg)?;
                    if let Some(w) = csv.as_mut() {
                        harness::write_trace_csv(w, &trace)?;
                    }
                    if let Some(o) = &out {
                        harness::save_field(o, &state)?;
                    }
                    println!("sup |R|_3 = {}", trace.sup_l3());
                    json_out(&json, &trace)?;
                }
                SolveMode::Decomposed => {
                    let data = data_from_snapshot(&input, &f)?;
                    let d = decomposition_check(&data, &grid, &cfg)?;
                    if let Some(w) = csv.as_mut() {
                        harness::write_decomposition_csv(w, &d)?;
                    }
                    println!("sup defect = {:e}", d.sup_defect);
                    json_out(&json, &d)?;
                }
            }
            if let Some(mut w) = csv {
                w.flush()?;
            }
            Ok(true)
        }
        Cmd::Verify { suite, seed, json } => {
            let suite = match suite {
                SuiteArg::Invariants => harness::Suite::Invariants,
                SuiteArg::Oracles => harness::Suite::Oracles,
                SuiteArg::All => harness::Suite::All,
            };
            let r = harness::run_suite(suite, seed)?;
            for c in &r.checks {
                println!(
                    "{:<4} {:<11} {:<34} {:e} (tol {:e})",
                    if c.passed { "ok" } else { "FAIL" },
                    c.suite,
                    c.name,
                    c.measured,
                    c.tolerance
                );
            }
            println!("seed {seed}: {}", if r.passed() { "all passed" } else { "failures" });
            json_out(&json, &r)?;
            Ok(r.passed())
        }
        Cmd::Config { input } => {
            let c = harness::ExperimentConfig::load(&input)?;
            c.validate()?;
            println!("{}", c.to_json()?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global() {
            eprintln!("error: worker pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
