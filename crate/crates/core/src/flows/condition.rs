use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{ConstructionParams, OrthogonalData};
use crate::error::{Error, Result};
use crate::norms::{besov_norm, lp_norm, BesovSpec, TimeGrid};
use crate::plane::PlaneField;

use super::bilinear::Dealias;
use super::forcing::{forcing_f, forcing_grid, vstar};
use super::l1l3::{full_tail, integrate_channels, predicted_exponent, quadrature_anchor, ForcingQuadrature, QuadraturePolicy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionOptions {
    /// Integrability of the critical Besov space, in `(3, ∞)`.
    pub p: f64,
    pub c0: f64,
    /// Time quadrature for the forcing integrals. Each point costs one
    /// forcing evaluation plus a dyadic norm, so it is coarser than the scan.
    pub quadrature: QuadraturePolicy,
    /// Points per decade for `∫‖v★‖²_∞`, which is cheap.
    pub vstar_per_decade: usize,
}

impl Default for ConditionOptions {
    fn default() -> Self {
        ConditionOptions {
            p: 4.0,
            c0: 1.0,
            quadrature: QuadraturePolicy { per_decade: 8, oversample: 2, ..Default::default() },
            vstar_per_decade: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub n: u64,
    pub p: f64,
    pub c0: f64,
    /// `∫₀^∞ ‖F(t)‖_{B^{−1+3/p}_{p,2}} dt`
    pub lhs: f64,
    /// `‖v★‖_{L²(ℝ₊;L^∞)}`
    pub vstar_norm: f64,
    /// `C₀⁻¹ exp(−C₀ vstar_norm²)`
    pub rhs: f64,
    pub satisfied: bool,
    /// `Σᵢ ‖u₀ⁱ‖²_{B⁻¹_{∞,2}}`, which bounds `vstar_norm²`.
    pub besov_sum_sq: f64,
    pub chain_holds: bool,
    /// `N^{−δ(1+ε)}`, the lower bound claimed for `exp(−C₀ vstar_norm²)`.
    pub n_power: f64,
    /// `∫₀^∞ ‖F(t)‖_{L³} dt` of the projected forcing.
    pub forcing_l1l3: f64,
    /// Measured `lhs / forcing_l1l3`.
    pub c2: f64,
    /// Measured `forcing_l1l3 / (‖u₀¹‖_{L³}‖u₀²‖_{L³} N^{−2/3−2ε/3})`.
    pub c1: f64,
    pub quadrature: ForcingQuadrature,
}

/// Relative slack allowed when comparing two quadratures of the same integral.
const CHAIN_SLACK: f64 = 1e-2;

fn k2_min(f: &PlaneField) -> f64 {
    f.k2_range().map_or(f64::INFINITY, |r| r.0)
}

/// `∫₀^∞ ‖v★(t)‖²_∞ dt`. Data with nonnegative real coefficients peak at the
/// origin in every component, so the sup is `Σ_c g_c(0, t)²` exactly.
fn vstar_sq(data: &OrthogonalData, per_decade: usize) -> Result<(f64, ForcingQuadrature)> {
    let policy = QuadraturePolicy { per_decade, ..Default::default() };
    let anchor = quadrature_anchor(&data.params);
    let comps = &data.components;
    let tails = |t: f64| -> Result<Vec<f64>> {
        comps
            .iter()
            .map(|c| {
                let l1 = c.heat(t)?.coefficient_l1();
                Ok(if l1 == 0.0 { 0.0 } else { l1 * l1 / (2.0 * k2_min(c)) })
            })
            .collect()
    };
    let r = if comps.iter().all(|c| c.has_nonnegative_coefficients()) {
        integrate_channels(
            |t| comps.iter().map(|c| Ok(c.heat(t)?.value_at_origin().powi(2))).collect(),
            tails,
            anchor,
            &policy,
        )?
    } else {
        let grid = data.natural_grid()?;
        let kmin = comps.iter().map(k2_min).fold(f64::INFINITY, f64::min);
        integrate_channels(
            |t| Ok(vec![lp_norm(&vstar(data, t, &grid)?, f64::INFINITY, 4)?.powi(2)]),
            |t| {
                let l1: f64 = comps.iter().map(|c| c.heat(t).map(|h| h.coefficient_l1())).sum::<Result<f64>>()?;
                Ok(vec![if l1 == 0.0 { 0.0 } else { l1 * l1 / (2.0 * kmin) }])
            },
            anchor,
            &policy,
        )?
    };
    Ok((r.value, r.quadrature))
}

/// `Σᵢ ‖u₀ⁱ‖²_{B⁻¹_{∞,2}}` by the heat characterization.
fn besov_sum_sq(data: &OrthogonalData) -> Result<f64> {
    let spec = BesovSpec::heat(-1.0, f64::INFINITY, 2.0)?;
    let mut total = 0.0;
    for c in &data.components {
        let Some((lo, hi)) = c.k2_range() else { continue };
        let g = TimeGrid::for_support(lo, hi, 32)?;
        total += besov_norm(c, &spec, Some(&g))?.value.powi(2);
    }
    Ok(total)
}

/// Evaluates the smallness condition with zero initial residual.
pub fn cg_condition(data: &OrthogonalData, opts: &ConditionOptions) -> Result<ConditionReport> {
    let p = opts.p;
    if !(p > 3.0 && p.is_finite()) {
        return Err(Error::InvalidParams(format!("condition exponent p must lie in (3, inf), got {p}")));
    }
    if !(opts.c0 > 0.0 && opts.c0.is_finite()) {
        return Err(Error::InvalidParams(format!("C0 must be positive, got {}", opts.c0)));
    }
    let s = -1.0 + 3.0 / p;
    let spec = BesovSpec::dyadic(s, p, 2.0)?;
    let grid = forcing_grid(data)?;
    let os = opts.quadrature.oversample;
    let anchor = quadrature_anchor(&data.params);
    let integral = integrate_channels(
        |t| {
            let f = forcing_f(data, t, &grid, Dealias::Strict)?;
            let b = besov_norm(&f, &spec, None)?.value;
            let l3 = lp_norm(&f.compacted()?, 3.0, os)?;
            Ok(vec![b, l3])
        },
        |t| {
            // ‖·‖_{B^s_{p,2}} ≤ 2^{−s} Σ_k |F̂(k)| for s < 0
            let w = full_tail(data, t)?[0];
            Ok(vec![2f64.powf(-s) * w, w])
        },
        anchor,
        &opts.quadrature,
    )?;
    let (lhs, l1l3) = (integral.parts[0], integral.parts[1]);

    let (vsq, _) = vstar_sq(data, opts.vstar_per_decade)?;
    let bsq = besov_sum_sq(data)?;
    let rhs = (-opts.c0 * vsq).exp() / opts.c0;
    let prm = &data.params;
    let n = prm.n as f64;
    let u1 = data.components[0].lp_norm(3.0, 4)?;
    let u2 = data.components[1].lp_norm(3.0, 4)?;
    let scale = u1 * u2 * n.powf(predicted_exponent(prm.eps));
    Ok(ConditionReport {
        n: prm.n,
        p,
        c0: opts.c0,
        lhs,
        vstar_norm: vsq.sqrt(),
        rhs,
        satisfied: lhs <= rhs,
        besov_sum_sq: bsq,
        chain_holds: vsq <= bsq * (1.0 + CHAIN_SLACK),
        n_power: n.powf(-prm.delta * (1.0 + prm.eps)),
        forcing_l1l3: l1l3,
        c2: if l1l3 > 0.0 { lhs / l1l3 } else { 0.0 },
        c1: if scale > 0.0 { l1l3 / scale } else { 0.0 },
        quadrature: integral.quadrature,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionScan {
    pub reports: Vec<ConditionReport>,
    /// Smallest tabulated N from which the condition holds at every larger N.
    pub crossover: Option<u64>,
}

/// Smallest N in the (ascending) table from which every row is satisfied.
pub fn crossover(reports: &[ConditionReport]) -> Option<u64> {
    let mut out = None;
    for r in reports.iter().rev() {
        if !r.satisfied {
            break;
        }
        out = Some(r.n);
    }
    out
}

/// Runs the condition for each N, keeping every other field of `template`.
pub fn condition_scan(ns: &[u64], template: &ConstructionParams, opts: &ConditionOptions) -> Result<ConditionScan> {
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let reports: Vec<ConditionReport> = ns
        .par_iter()
        .map(|&n| {
            let prm = ConstructionParams { n, ..*template };
            prm.validate()?;
            cg_condition(&OrthogonalData::build(&prm)?, opts)
        })
        .collect::<Result<_>>()?;
    Ok(ConditionScan { crossover: crossover(&reports), reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::L2Budget;

    fn small() -> ConstructionParams {
        ConstructionParams::relaxed(3, 0.5).unwrap().with_budget(L2Budget::Hypothesis)
    }

    #[test]
    fn zero_data_is_satisfied() {
        let z = OrthogonalData::from_components(
            small(),
            [PlaneField::zero([1, 2]), PlaneField::zero([0, 2]), PlaneField::zero([0, 1])],
        );
        let opts = ConditionOptions { c0: 2.0, ..Default::default() };
        let r = cg_condition(&z, &opts).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.rhs, 0.5);
        assert!(r.satisfied);
    }

    #[test]
    fn rejects_exponents_at_or_below_three() {
        let d = OrthogonalData::build(&small()).unwrap();
        for p in [3.0, 2.0, f64::INFINITY] {
            let opts = ConditionOptions { p, ..Default::default() };
            assert!(matches!(cg_condition(&d, &opts), Err(Error::InvalidParams(_))));
        }
    }

    #[test]
    fn vstar_matches_its_besov_bound() {
        let d = OrthogonalData::build(&small()).unwrap();
        let r = cg_condition(&d, &ConditionOptions::default()).unwrap();
        // the two are quadratures of the same time integral for positive data
        assert!(r.chain_holds);
        let rel = (r.vstar_norm.powi(2) - r.besov_sum_sq).abs() / r.besov_sum_sq;
        assert!(rel < 1e-3, "{rel}");
        assert!(r.lhs > 0.0 && r.forcing_l1l3 > 0.0 && r.c2 > 0.0);
        assert!(r.rhs == (-r.vstar_norm.powi(2)).exp());
    }

    #[test]
    fn vstar_of_single_mode_is_closed_form() {
        // cos(x₁ + x₂) e₃ has sup e^{−2t}, so ∫ sup² = 1/4
        let d = OrthogonalData::build(&small()).unwrap();
        let only = OrthogonalData::from_components(
            small(),
            [PlaneField::zero([1, 2]), PlaneField::zero([0, 2]), d.components[2].scaled(1.0 / d.components[2].value_at_origin())],
        );
        let (v, _) = vstar_sq(&only, 32).unwrap();
        assert!(v >= 0.25 * (1.0 - 1e-4) && v <= 0.25 * 1.011, "{v}");
    }

    #[test]
    fn crossover_needs_a_satisfied_suffix() {
        let row = |n, ok| ConditionReport {
            n,
            p: 4.0,
            c0: 1.0,
            lhs: 0.0,
            vstar_norm: 0.0,
            rhs: 1.0,
            satisfied: ok,
            besov_sum_sq: 0.0,
            chain_holds: true,
            n_power: 1.0,
            forcing_l1l3: 0.0,
            c2: 0.0,
            c1: 0.0,
            quadrature: ForcingQuadrature { anchor: 1.0, t_min: 1.0, t_max: 1.0, per_decade: 1, points: 1, tail_bound: 0.0 },
        };
        assert_eq!(crossover(&[row(2, false), row(4, true), row(8, false), row(16, true), row(32, true)]), Some(16));
        assert_eq!(crossover(&[row(2, true), row(4, false)]), None);
        assert_eq!(crossover(&[row(2, true), row(4, true)]), Some(2));
    }
}
