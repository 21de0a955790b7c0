use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{ConstructionParams, OrthogonalData};
use crate::error::{Error, Result};
use crate::grid::{axis_len_for, FourierGrid};
use crate::norms::lp_of_samples;
use crate::plane::PlaneField;
use crate::stats::{least_squares, neumaier_sum};

use super::bilinear::Dealias;
use super::forcing::{forcing_f, forcing_grid};

/// Ordered pairs `(i, j)`, `i ≠ j`, each naming the term `gᵢ ∂ᵢ gʲ`, which is
/// the `j`-th component of `div(vⁱ⊗vʲ + vʲ⊗vⁱ)` before projection.
pub const TERMS: [(usize, usize); 6] = [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)];

/// How `‖F(t)‖_{L³}` is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum L3Mode {
    /// Sum over the six product terms, each evaluated separably. Scales to large N.
    PerTerm,
    /// The projected forcing sampled on its exact grid.
    Full,
}

/// How a single product term is sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermEval {
    /// Factorized through the shared axis, two planar transforms.
    Separable,
    /// Both factors embedded on one volume grid and multiplied.
    Volume,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraturePolicy {
    pub per_decade: usize,
    /// `t_min` as a fraction of the anchor; `[0, t_min]` is a single trapezoid.
    pub small_t_fraction: f64,
    /// Initial `t_max` in decades above the anchor.
    pub initial_decades: usize,
    /// Accepted ratio of tail bound to integral.
    pub tail_tolerance: f64,
    pub max_extensions: usize,
    /// Sampling refinement for the L³ quadrature.
    pub oversample: usize,
}

impl Default for QuadraturePolicy {
    fn default() -> Self {
        QuadraturePolicy {
            per_decade: 32,
            small_t_fraction: 1e-3,
            initial_decades: 1,
            tail_tolerance: 0.01,
            max_extensions: 40,
            oversample: 4,
        }
    }
}

/// Where and how a time integral was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForcingQuadrature {
    pub anchor: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub per_decade: usize,
    pub points: usize,
    /// Rigorous bound on the integral over `[t_max, ∞)`, included in the value.
    pub tail_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeIntegral {
    pub value: f64,
    /// Per-channel integrals (tails included) when the integrand is split.
    pub parts: Vec<f64>,
    pub quadrature: ForcingQuadrature,
}

/// `∫₀^∞ Σ_c f_c(t) dt` for nonnegative decaying channels.
///
/// The lattice `anchor·10^{k/per_decade}` contains the anchor; `[0, t_min]`
/// uses the trapezoid with `f(0)`, the rest is trapezoidal in `ln t`.
/// `t_max` grows by decades until `Σ tail(t_max) ≤ tolerance · integral`.
pub fn integrate_channels(
    f: impl Fn(f64) -> Result<Vec<f64>>,
    tail: impl Fn(f64) -> Result<Vec<f64>>,
    anchor: f64,
    policy: &QuadraturePolicy,
) -> Result<TimeIntegral> {
    if !(anchor > 0.0 && anchor.is_finite()) || policy.per_decade == 0 {
        return Err(Error::InvalidParams(format!("bad quadrature anchor {anchor}")));
    }
    let ppd = policy.per_decade as i64;
    let k_lo = (policy.small_t_fraction.log10() * ppd as f64).round() as i64;
    let t_at = |k: i64| anchor * 10f64.powf(k as f64 / ppd as f64);
    let h = std::f64::consts::LN_10 / ppd as f64;

    let f0 = f(0.0)?;
    let nch = f0.len();
    let t_min = t_at(k_lo);
    let first = f(t_min)?;
    // Σ t·f(t) over interior points, per channel, plus the endpoint values
    let mut interior: Vec<Vec<f64>> = vec![Vec::new(); nch];
    let mut last = first.clone();
    let mut k_hi = k_lo;
    let mut evals = 1usize;
    let target = policy.initial_decades as i64 * ppd;
    let mut extensions = 0usize;
    loop {
        while k_hi < target + extensions as i64 * ppd {
            for c in 0..nch {
                if k_hi > k_lo {
                    interior[c].push(t_at(k_hi) * last[c]);
                }
            }
            k_hi += 1;
            last = f(t_at(k_hi))?;
            evals += 1;
        }
        let t_max = t_at(k_hi);
        let parts: Vec<f64> = (0..nch)
            .map(|c| {
                let small = 0.5 * t_min * (f0[c] + first[c]);
                let body = h * (neumaier_sum(interior[c].iter().copied()) + 0.5 * (t_min * first[c] + t_max * last[c]));
                small + body
            })
            .collect();
        let tails = tail(t_max)?;
        let integral = neumaier_sum(parts.iter().copied());
        let tail_sum = neumaier_sum(tails.iter().copied());
        if tail_sum <= policy.tail_tolerance * integral || integral == 0.0 && tail_sum == 0.0 {
            let parts: Vec<f64> = parts.iter().zip(&tails).map(|(p, t)| p + t).collect();
            return Ok(TimeIntegral {
                value: integral + tail_sum,
                parts,
                quadrature: ForcingQuadrature {
                    anchor,
                    t_min,
                    t_max,
                    per_decade: policy.per_decade,
                    points: evals,
                    tail_bound: tail_sum,
                },
            });
        }
        if extensions >= policy.max_extensions {
            return Err(Error::TailTooLarge { tail: tail_sum, integral });
        }
        extensions += 1;
    }
}

/// `Σ |k|·|û(k)|`, the Wiener-algebra norm of the gradient.
fn gradient_l1(f: &PlaneField) -> f64 {
    f.map_radial(|k2| k2.sqrt()).coefficient_l1()
}

fn k2_min(f: &PlaneField) -> f64 {
    f.k2_range().map_or(f64::INFINITY, |r| r.0)
}

/// Per-axis band-limit of a plane field lifted to the torus.
fn torus_band(f: &PlaneField) -> [i64; 3] {
    let mut b = [0; 3];
    if !f.is_zero() {
        let p = f.band_limit();
        b[f.axes()[0]] = p[0];
        b[f.axes()[1]] = p[1];
    }
    b
}

/// Samples of `f` with `dims[axis]` points on each torus axis, returned as the
/// cubed-magnitude mean over the in-plane axis other than `shared`.
fn cubed_profile(f: &PlaneField, shared: usize, dims: [usize; 3]) -> Result<Vec<f64>> {
    let ax = f.axes();
    let s = f.sample([dims[ax[0]], dims[ax[1]]])?;
    let (n0, n1) = (dims[ax[0]], dims[ax[1]]);
    let cube = |x: f64| x.abs().powi(3);
    Ok(if ax[0] == shared {
        (0..n0).map(|a| neumaier_sum((0..n1).map(|b| cube(s[a * n1 + b]))) / n1 as f64).collect()
    } else {
        (0..n1).map(|b| neumaier_sum((0..n0).map(|a| cube(s[a * n1 + b]))) / n0 as f64).collect()
    })
}

/// Sample counts per torus axis shared by both factors of a product.
fn product_dims(g: &PlaneField, h: &PlaneField, oversample: usize) -> [usize; 3] {
    let (bg, bh) = (torus_band(g), torus_band(h));
    [0, 1, 2].map(|a| axis_len_for(bg[a].max(bh[a]) as usize) * oversample.max(1))
}

/// `‖g·h‖_{L³}` for `g` independent of `x_i`, `h` independent of `x_j`.
pub fn product_l3(g: &PlaneField, h: &PlaneField, eval: TermEval, oversample: usize) -> Result<f64> {
    if g.is_zero() || h.is_zero() {
        return Ok(0.0);
    }
    let dims = product_dims(g, h, oversample);
    match eval {
        TermEval::Separable => {
            let shared = 3 - g.normal_axis() - h.normal_axis();
            if g.normal_axis() == h.normal_axis() {
                return Err(Error::pre("separable product needs factors in different planes"));
            }
            let pg = cubed_profile(g, shared, dims)?;
            let ph = cubed_profile(h, shared, dims)?;
            let m = neumaier_sum(pg.iter().zip(&ph).map(|(a, b)| a * b)) / pg.len() as f64;
            Ok(m.cbrt())
        }
        TermEval::Volume => {
            let grid = FourierGrid::new(dims.map(|d| d / oversample.max(1)))?;
            let sg = g.to_scalar(&grid)?.evaluate_physical(oversample)?;
            let sh = h.to_scalar(&grid)?.evaluate_physical(oversample)?;
            let prod: Vec<f64> = sg.iter().zip(&sh).map(|(a, b)| a * b).collect();
            Ok(lp_of_samples(&prod, 3.0))
        }
    }
}

/// The six term norms `‖gᵢ ∂ᵢ gⱼ‖_{L³}` at time `t`, in [`TERMS`] order.
pub fn term_norms(data: &OrthogonalData, t: f64, eval: TermEval, oversample: usize) -> Result<[f64; 6]> {
    let g: Vec<PlaneField> = data.components.iter().map(|c| c.heat(t)).collect::<Result<_>>()?;
    let mut out = [0.0; 6];
    for (slot, &(i, j)) in TERMS.iter().enumerate() {
        out[slot] = product_l3(&g[i], &g[j].derivative(i), eval, oversample)?;
    }
    Ok(out)
}

/// Upper bounds for `∫_T^∞` of each term, from `‖gh‖_{L³} ≤ ‖ĝ‖_{ℓ¹}‖ĥ‖_{ℓ¹}`
/// and the slowest decay rate of the pair.
fn term_tails(data: &OrthogonalData, t: f64) -> Result<Vec<f64>> {
    let g: Vec<PlaneField> = data.components.iter().map(|c| c.heat(t)).collect::<Result<_>>()?;
    Ok(TERMS
        .iter()
        .map(|&(i, j)| {
            let rate = k2_min(&g[i]) + k2_min(&g[j]);
            let bound = g[i].coefficient_l1() * g[j].derivative(i).coefficient_l1();
            if bound == 0.0 {
                0.0
            } else {
                bound / rate
            }
        })
        .collect())
}

/// Bound for `∫_T^∞ ‖F‖_{L³}`: the projection is a contraction on each
/// Fourier mode, so `‖F‖_∞ ≤ Σ_{i<j} (‖∇gᵢ‖_A‖gⱼ‖_A + ‖gᵢ‖_A‖∇gⱼ‖_A)`.
pub(crate) fn full_tail(data: &OrthogonalData, t: f64) -> Result<Vec<f64>> {
    let g: Vec<PlaneField> = data.components.iter().map(|c| c.heat(t)).collect::<Result<_>>()?;
    let mut total = 0.0;
    for i in 0..3 {
        for j in i + 1..3 {
            let b = gradient_l1(&g[i]) * g[j].coefficient_l1() + g[i].coefficient_l1() * gradient_l1(&g[j]);
            if b > 0.0 {
                total += b / (k2_min(&g[i]) + k2_min(&g[j]));
            }
        }
    }
    Ok(vec![total])
}

/// `‖F(t)‖_{L³}` of the projected forcing on its exact grid.
pub fn forcing_l3(data: &OrthogonalData, t: f64, oversample: usize) -> Result<f64> {
    let grid = forcing_grid(data)?;
    let f = forcing_f(data, t, &grid, Dealias::Strict)?;
    Ok(lp_of_samples(&f.evaluate_physical(oversample)?.magnitude(), 3.0))
}

/// The time scale at which the highest block has decayed by `e⁻¹`.
pub fn quadrature_anchor(params: &ConstructionParams) -> f64 {
    (params.n as f64).powf(-2.0 * (1.0 + params.eps))
}

/// `∫₀^∞ ‖F(t)‖_{L³} dt`. In per-term mode the six term integrals are
/// returned as parts, in [`TERMS`] order.
pub fn forcing_l1l3(data: &OrthogonalData, mode: L3Mode, policy: &QuadraturePolicy) -> Result<TimeIntegral> {
    forcing_l1l3_with(data, mode, TermEval::Separable, policy)
}

pub fn forcing_l1l3_with(
    data: &OrthogonalData,
    mode: L3Mode,
    eval: TermEval,
    policy: &QuadraturePolicy,
) -> Result<TimeIntegral> {
    let anchor = quadrature_anchor(&data.params);
    match mode {
        L3Mode::PerTerm => integrate_channels(
            |t| term_norms(data, t, eval, policy.oversample).map(|v| v.to_vec()),
            |t| term_tails(data, t),
            anchor,
            policy,
        ),
        L3Mode::Full => {
            integrate_channels(|t| Ok(vec![forcing_l3(data, t, policy.oversample)?]), |t| full_tail(data, t), anchor, policy)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub n: u64,
    pub f_l1l3: f64,
    /// `‖u₀ⁱ‖_{L³}` per component.
    pub u_l3: [f64; 3],
    /// `f_l1l3 / (‖u₀¹‖‖u₀²‖ N^{−2/3−2ε/3})`
    pub ratio: f64,
    /// Contribution of the two high blocks' mutual terms.
    pub pair12: f64,
    /// Per-term integrals in [`TERMS`] order (empty in full mode).
    pub terms: Vec<f64>,
    pub quadrature: ForcingQuadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub eps: f64,
    pub mode: L3Mode,
    pub rows: Vec<ScanRow>,
    /// Least-squares slope of `ln(f/(‖u₀¹‖‖u₀²‖))` against `ln N`; absent
    /// for a single N.
    pub slope: Option<f64>,
    /// The same fit restricted to the high-block terms.
    pub pair12_slope: Option<f64>,
    /// `−2/3 − 2ε/3`
    pub predicted_slope: f64,
}

impl ScanReport {
    /// Acceptance bound on the normalized slope, `−2/3 + 0.1`.
    pub const SLOPE_BOUND: f64 = -2.0 / 3.0 + 0.1;

    pub fn slope_ok(&self) -> Option<bool> {
        self.slope.map(|s| s <= Self::SLOPE_BOUND)
    }

    /// Largest over smallest `ratio` across the sweep.
    pub fn ratio_spread(&self) -> f64 {
        let (lo, hi) = self.rows.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.ratio), hi.max(r.ratio)));
        hi / lo
    }
}

pub fn predicted_exponent(eps: f64) -> f64 {
    -2.0 / 3.0 - 2.0 * eps / 3.0
}

/// One row of the N-scan for the given data.
pub fn scan_row(data: &OrthogonalData, mode: L3Mode, policy: &QuadraturePolicy) -> Result<ScanRow> {
    let n = data.params.n;
    let integral = forcing_l1l3(data, mode, policy)?;
    let mut u_l3 = [0.0; 3];
    for (c, f) in data.components.iter().enumerate() {
        u_l3[c] = f.lp_norm(3.0, policy.oversample)?;
    }
    let pair12 = match mode {
        L3Mode::PerTerm => integral.parts[0] + integral.parts[1],
        L3Mode::Full => {
            let only = OrthogonalData::from_components(
                data.params,
                [data.components[0].clone(), data.components[1].clone(), PlaneField::zero(data.components[2].axes())],
            );
            forcing_l1l3(&only, mode, policy)?.value
        }
    };
    let scale = u_l3[0] * u_l3[1] * (n as f64).powf(predicted_exponent(data.params.eps));
    Ok(ScanRow {
        n,
        f_l1l3: integral.value,
        u_l3,
        ratio: integral.value / scale,
        pair12,
        terms: if mode == L3Mode::PerTerm { integral.parts.clone() } else { Vec::new() },
        quadrature: integral.quadrature,
    })
}

/// Scans `∫‖F‖_{L³}` over `ns` for the constructed data at `eps`. Bands may
/// overlap at small N; supports stay disjoint.
pub fn forcing_scan(ns: &[u64], eps: f64, mode: L3Mode, policy: &QuadraturePolicy) -> Result<ScanReport> {
    if ns.is_empty() {
        return Err(Error::InvalidParams("a scan needs at least one value of N".into()));
    }
    // rows are independent; collect keeps them in N order
    let rows: Vec<ScanRow> = ns
        .par_iter()
        .map(|&n| {
            let data = OrthogonalData::build(&ConstructionParams::relaxed(n, eps)?)?;
            scan_row(&data, mode, policy)
        })
        .collect::<Result<_>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| (r.n as f64).ln()).collect();
    let fit = |num: &dyn Fn(&ScanRow) -> f64| {
        let ys: Vec<f64> = rows.iter().map(|r| (num(r) / (r.u_l3[0] * r.u_l3[1])).ln()).collect();
        least_squares(&xs, &ys).map(|(slope, _)| slope)
    };
    Ok(ScanReport {
        eps,
        mode,
        slope: fit(&|r| r.f_l1l3),
        pair12_slope: fit(&|r| r.pair12),
        predicted_slope: predicted_exponent(eps),
        rows,
    })
}
