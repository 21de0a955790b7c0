//! CSV tables and JSON summaries.
//!
//! Numbers are written with Rust's float formatting, which never consults
//! the locale: `.` as decimal point, no grouping, shortest round-trip digits.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::datagen::{largeness_row, ConstructionParams, LargenessRow};
use crate::error::Result;
use crate::field::SpectralVectorField;
use crate::flows::{ConditionScan, ScanReport};
use crate::norms::{besov_norm, BesovMethod, lp_norm, BesovSpec, NormTarget};
use crate::plane::PlaneField;
use crate::solver::{DecompositionReport, TrajectoryTrace};
use crate::stats::proportional_fit;

pub const SCAN_HEADER: [&str; 6] = ["N", "F_l1l3", "u1_l3", "u2_l3", "u3_l3", "ratio"];
pub const TRACE_HEADER: [&str; 6] = ["t", "l2", "grad_l2", "l3", "divergence", "energy_defect"];
pub const DECOMPOSED_HEADER: [&str; 9] =
    ["t", "l2", "grad_l2", "l3", "divergence", "energy_defect", "residual_l2", "residual_l3", "defect"];
pub const LARGENESS_HEADER: [&str; 5] = ["N", "u1_besov", "u2_besov", "u3_besov", "lower_bound"];
pub const CONDITION_HEADER: [&str; 9] =
    ["N", "lhs", "vstar_norm", "rhs", "satisfied", "besov_sum_sq", "chain_holds", "forcing_l1l3", "c2"];
pub const NORMS_HEADER: [&str; 4] = ["component", "norm", "method", "value"];

/// Shortest round-trip form; switches to exponent notation for very large
/// or small magnitudes.
pub fn num(v: f64) -> String {
    // no negative zero
    format!("{:?}", v + 0.0)
}

fn table<W: Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.write_record(&r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_scan_csv<W: Write>(w: W, r: &ScanReport) -> Result<()> {
    table(
        w,
        &SCAN_HEADER,
        r.rows.iter().map(|row| {
            vec![row.n.to_string(), num(row.f_l1l3), num(row.u_l3[0]), num(row.u_l3[1]), num(row.u_l3[2]), num(row.ratio)]
        }),
    )
}

pub fn write_trace_csv<W: Write>(w: W, tr: &TrajectoryTrace) -> Result<()> {
    table(
        w,
        &TRACE_HEADER,
        tr.samples
            .iter()
            .map(|s| vec![num(s.t), num(s.l2), num(s.grad_l2), num(s.l3), num(s.divergence), num(s.energy_defect)]),
    )
}

/// Full-solution columns, then the residual's size and the splitting defect.
pub fn write_decomposition_csv<W: Write>(w: W, d: &DecompositionReport) -> Result<()> {
    let rows = d.times.iter().enumerate().map(|(i, &t)| {
        let u = &d.full.samples[i];
        let r = &d.residual.samples[i];
        vec![
            num(t),
            num(u.l2),
            num(u.grad_l2),
            num(u.l3),
            num(u.divergence),
            num(u.energy_defect),
            num(r.l2),
            num(r.l3),
            num(d.defect[i]),
        ]
    });
    table(w, &DECOMPOSED_HEADER, rows)
}

pub fn write_condition_csv<W: Write>(w: W, s: &ConditionScan) -> Result<()> {
    table(
        w,
        &CONDITION_HEADER,
        s.reports.iter().map(|r| {
            vec![
                r.n.to_string(),
                num(r.lhs),
                num(r.vstar_norm),
                num(r.rhs),
                r.satisfied.to_string(),
                num(r.besov_sum_sq),
                r.chain_holds.to_string(),
                num(r.forcing_l1l3),
                num(r.c2),
            ]
        }),
    )
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

/// `B⁻¹_{∞,∞}` per component over a list of N.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LargenessTable {
    pub template: ConstructionParams,
    pub rows: Vec<LargenessRow>,
    /// Least-squares `α` in `column₁ ≈ α (ln N)^{1/2}`.
    pub alpha: f64,
    /// Largest relative deviation from that fit.
    pub fit_residual: f64,
    /// Component 1 strictly increasing in N.
    pub monotone: bool,
    /// Component 1 above `e^{−8}(C⁻¹ ln N)^{1/2}` at every N.
    pub above_lower_bound: bool,
    pub threshold: Option<f64>,
    /// Smallest tabulated N whose component-1 value exceeds `threshold`.
    pub crossover: Option<u64>,
}

pub fn largeness_table(ns: &[u64], template: &ConstructionParams, threshold: Option<f64>) -> Result<LargenessTable> {
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let rows: Vec<LargenessRow> = ns
        .par_iter()
        .map(|&n| {
            let p = ConstructionParams { n, ..*template };
            p.validate()?;
            largeness_row(&p)
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln().sqrt()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.besov[0]).collect();
    let (alpha, fit_residual) = proportional_fit(&xs, &ys);
    let monotone = ys.windows(2).all(|w| w[1] > w[0]);
    let above_lower_bound = rows.iter().all(|r| r.besov[0] >= r.lower_bound);
    let crossover = threshold.and_then(|m| rows.iter().find(|r| r.besov[0] > m).map(|r| r.n));
    Ok(LargenessTable { template: *template, rows, alpha, fit_residual, monotone, above_lower_bound, threshold, crossover })
}

pub fn write_largeness_csv<W: Write>(w: W, t: &LargenessTable) -> Result<()> {
    table(
        w,
        &LARGENESS_HEADER,
        t.rows.iter().map(|r| {
            vec![r.n.to_string(), num(r.besov[0]), num(r.besov[1]), num(r.besov[2]), num(r.lower_bound)]
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormRow {
    /// 1-based velocity index.
    pub component: usize,
    pub norm: String,
    pub method: String,
    pub value: f64,
}

/// Requests used when none are given: `B⁻¹_{∞,∞}` and `B⁻¹_{∞,2}` by the
/// heat method and the critical `B^{−1/4}_{4,2}` dyadically.
pub fn default_norm_specs() -> Vec<BesovSpec> {
    vec![
        BesovSpec::heat(-1.0, f64::INFINITY, f64::INFINITY).expect("valid"),
        BesovSpec::heat(-1.0, f64::INFINITY, 2.0).expect("valid"),
        BesovSpec::dyadic(-0.25, 4.0, 2.0).expect("valid"),
    ]
}

fn component_norms<F: NormTarget>(
    comp: usize,
    f: &F,
    l2: f64,
    l3: impl FnOnce() -> Result<f64>,
    specs: &[BesovSpec],
) -> Result<Vec<NormRow>> {
    let row = |norm: String, method: &str, value| NormRow { component: comp + 1, norm, method: method.into(), value };
    let mut out = vec![row("L2".into(), "parseval", l2), row("L3".into(), "quadrature", l3()?)];
    for s in specs {
        let method = match s.method {
            BesovMethod::Dyadic => "dyadic",
            BesovMethod::Heat => "heat",
        };
        out.push(row(s.label(), method, besov_norm(f, s, None)?.value));
    }
    Ok(out)
}

/// Per-component norm table. Components that depend on two coordinates are
/// evaluated on their plane, which is much cheaper than the 3D grid.
pub fn norm_table(f: &SpectralVectorField, specs: &[BesovSpec]) -> Result<Vec<NormRow>> {
    let mut rows = Vec::new();
    for c in 0..3 {
        match PlaneField::extract(f, c) {
            Some(p) => rows.extend(component_norms(c, &p, p.l2_norm(), || p.lp_norm(3.0, 4), specs)?),
            None => {
                let mut comps: [Vec<_>; 3] = Default::default();
                for (a, slot) in comps.iter_mut().enumerate() {
                    *slot = if a == c { f.component(c).to_vec() } else { vec![Default::default(); f.grid().len()] };
                }
                let single = SpectralVectorField::from_components(f.grid(), comps, f.is_mean_zero())?;
                rows.extend(component_norms(c, &single, single.l2_norm(), || lp_norm(&single, 3.0, 4), specs)?);
            }
        }
    }
    Ok(rows)
}

pub fn write_norms_csv<W: Write>(w: W, rows: &[NormRow]) -> Result<()> {
    table(
        w,
        &NORMS_HEADER,
        rows.iter().map(|r| vec![r.component.to_string(), r.norm.clone(), r.method.clone(), num(r.value)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FourierGrid;
    use num_complex::Complex64;

    fn csv_text(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn numbers_are_locale_free() {
        assert_eq!(num(1234567.5), "1234567.5");
        assert_eq!(num(-0.25), "-0.25");
        assert_eq!(num(1e-9), "1e-9");
        assert_eq!(num(0.1).parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn zero_field_norms_vanish() {
        let f = SpectralVectorField::zeros(&FourierGrid::cube(8).unwrap());
        let rows = norm_table(&f, &default_norm_specs()).unwrap();
        assert_eq!(rows.len(), 3 * 5);
        assert!(rows.iter().all(|r| r.value == 0.0));
        let text = csv_text(|b| write_norms_csv(b, &rows));
        assert!(text.starts_with("component,norm,method,value\n1,L2,parseval,0.0\n"), "{text}");
    }

    #[test]
    fn single_mode_norm_closed_form() {
        // cos(x₀ + x₁) in component 3: sup_t t^{1/2} e^{−2t} = e^{−1/2}/2
        let mut f = SpectralVectorField::zeros(&FourierGrid::cube(8).unwrap());
        f.add_real_mode(2, [1, 1, 0], Complex64::new(0.5, 0.0)).unwrap();
        let rows = norm_table(&f, &default_norm_specs()[..1]).unwrap();
        let b = rows.iter().find(|r| r.component == 3 && r.norm.starts_with("B")).unwrap();
        assert!((b.value - 0.5 * (-0.5f64).exp()).abs() < 1e-6, "{}", b.value);
        let l2 = rows.iter().find(|r| r.component == 3 && r.norm == "L2").unwrap();
        assert!((l2.value - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn largeness_crossover_definition() {
        let t = largeness_table(&[16, 64, 256], &ConstructionParams::new(16, 0.5, 0.05, 1.0).unwrap(), Some(0.0)).unwrap();
        assert_eq!(t.crossover, Some(16));
        let m = t.rows[1].besov[0] - 1e-9;
        let t2 = largeness_table(&[16, 64, 256], &t.template, Some(m)).unwrap();
        assert_eq!(t2.crossover, Some(64));
        assert!(t2.rows[0].besov[0] <= m);
    }
}
