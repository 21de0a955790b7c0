//! Frequency-orthogonal initial data: two equalized high-frequency blocks
//! and one low single mode, each a function of two coordinates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{axis_len_for, check_alloc, FourierGrid};
use crate::norms::{besov_norm, BesovSpec, TimeGrid};
use crate::plane::{hermitian_modes, PlaneField};
use crate::stats::golden_max;
use crate::SpectralVectorField;

/// How the L² budget is split between the three components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum L2Budget {
    /// Squared norms `C⁻¹ln N`, `C⁻¹(1+ε)ln N`, `C⁻¹δ(1+ε)ln N`: the budgets
    /// of the explicit construction, which make the first two components large.
    #[default]
    Construction,
    /// Every component gets `C⁻¹δ(1+ε)ln N`, the smallness hypothesis.
    Hypothesis,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstructionParams {
    pub n: u64,
    pub eps: f64,
    pub delta: f64,
    pub c: f64,
    #[serde(default)]
    pub budget: L2Budget,
    /// Accept `2N ≥ ⌈N^{1+ε}⌉`. Supports stay disjoint through the plane
    /// constraints; only the scale separation is lost. Used by desk-scale sweeps.
    #[serde(default)]
    pub allow_band_overlap: bool,
}

impl ConstructionParams {
    pub fn new(n: u64, eps: f64, delta: f64, c: f64) -> Result<Self> {
        let p = ConstructionParams { n, eps, delta, c, budget: L2Budget::Construction, allow_band_overlap: false };
        p.validate()?;
        Ok(p)
    }

    /// `δ = min(ε/8, 0.05)`, `C = 1`.
    pub fn with_defaults(n: u64, eps: f64) -> Result<Self> {
        Self::new(n, eps, (eps / 8.0).min(0.05), 1.0)
    }

    /// Default `δ`, `C`, with overlapping bands accepted.
    pub fn relaxed(n: u64, eps: f64) -> Result<Self> {
        let p = ConstructionParams {
            n,
            eps,
            delta: (eps / 8.0).min(0.05),
            c: 1.0,
            budget: L2Budget::Construction,
            allow_band_overlap: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_budget(mut self, budget: L2Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn allowing_overlap(mut self) -> Self {
        self.allow_band_overlap = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParams(format!("N must be >= 2, got {}", self.n)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParams(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidParams(format!("C must be positive, got {}", self.c)));
        }
        if !(self.delta > 0.0 && self.delta < self.eps / 4.0) {
            return Err(Error::InvalidParams(format!(
                "delta must satisfy 0 < delta < eps/4 = {}, got {}",
                self.eps / 4.0,
                self.delta
            )));
        }
        let m = self.high_scale();
        if !self.allow_band_overlap && 2 * self.n >= m {
            return Err(Error::InvalidParams(format!(
                "bands [{n}, {}] and [{m}, {}] overlap (2N = {} >= ceil(N^(1+eps)) = {m})",
                2 * self.n,
                2 * m,
                2 * self.n,
                n = self.n
            )));
        }
        Ok(())
    }

    /// `M = ⌈N^{1+ε}⌉`, treating values within round-off of an integer as that integer.
    pub fn high_scale(&self) -> u64 {
        let x = (self.n as f64).powf(1.0 + self.eps);
        let r = x.round();
        if (x - r).abs() <= 1e-9 * x {
            r as u64
        } else {
            x.ceil() as u64
        }
    }

    /// `ln N^{1+ε}`.
    pub fn log_high(&self) -> f64 {
        (1.0 + self.eps) * (self.n as f64).ln()
    }

    /// Squared L² targets of the three components.
    pub fn l2_targets_sq(&self) -> [f64; 3] {
        let ln = (self.n as f64).ln();
        let small = self.delta * self.log_high() / self.c;
        match self.budget {
            L2Budget::Construction => [ln / self.c, self.log_high() / self.c, small],
            L2Budget::Hypothesis => [small; 3],
        }
    }

    pub fn l2_targets(&self) -> [f64; 3] {
        self.l2_targets_sq().map(f64::sqrt)
    }

    /// Bound on the L² norm of every component: `(C⁻¹δ ln N^{1+ε})^{1/2}`.
    pub fn l2_bound(&self) -> f64 {
        (self.delta * self.log_high() / self.c).sqrt()
    }

    /// Bound on the L³ norm of the low mode: `C⁻¹ N^{1/3−δ(1+ε)} (ln N^{1+ε})^{−1/2}`.
    pub fn low_mode_l3_bound(&self) -> f64 {
        (self.n as f64).powf(1.0 / 3.0 - self.delta * (1.0 + self.eps)) / (self.c * self.log_high().sqrt())
    }

    /// Per-axis band `[lo, hi]` of component `i` (0 or 1).
    pub fn band(&self, i: usize) -> [u64; 2] {
        let s = if i == 0 { self.n } else { self.high_scale() };
        [s, 2 * s]
    }

    /// Time at which the heated coefficients of component `i` (0 or 1) are equal.
    pub fn equalization_time(&self, i: usize) -> f64 {
        let n = self.n as f64;
        if i == 0 {
            n.powi(-2)
        } else {
            n.powf(-2.0 * (1.0 + self.eps))
        }
    }
}

/// Plane (ascending axes) that velocity component `comp` depends on.
pub fn plane_axes(comp: usize) -> [usize; 2] {
    match comp {
        0 => [1, 2],
        1 => [0, 2],
        _ => [0, 1],
    }
}

/// The low mode's wavevector.
pub const LOW_MODE: [i64; 3] = [1, 1, 0];

/// One of the two high-frequency blocks: amplitudes `A e^{|m|² t*}` on the
/// square `[lo, hi]²` of its plane, before Hermitian symmetrization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandBlock {
    pub comp: usize,
    pub lo: u64,
    pub hi: u64,
    pub t_star: f64,
    /// Equalized amplitude `A`: heated amplitudes at `t*` all equal `A`.
    pub amplitude: f64,
}

impl BandBlock {
    pub fn new(comp: usize, params: &ConstructionParams) -> Result<Self> {
        if comp > 1 {
            return Err(Error::pre(format!("band blocks are components 0 and 1, got {comp}")));
        }
        params.validate()?;
        let [lo, hi] = params.band(comp);
        let t_star = params.equalization_time(comp);
        // Σ_m e^{2|m|²t*} over the square factorizes
        let s: f64 = (lo..=hi).map(|m| (2.0 * t_star * (m * m) as f64).exp()).sum();
        let amplitude = params.l2_targets()[comp] / s;
        if !amplitude.is_finite() {
            return Err(Error::pre("equalized amplitude is not finite"));
        }
        Ok(BandBlock { comp, lo, hi, t_star, amplitude })
    }

    pub fn mode_count(&self) -> u64 {
        let w = self.hi - self.lo + 1;
        2 * w * w
    }

    /// Coefficient amplitude `a_m = A e^{|m|²t*}` (each of `±m` carries `a_m/√2`).
    pub fn a(&self, m: [u64; 2]) -> f64 {
        self.amplitude * (self.t_star * (m[0] * m[0] + m[1] * m[1]) as f64).exp()
    }

    /// Materializes the block as a sparse plane field.
    pub fn to_plane(&self) -> Result<PlaneField> {
        check_alloc(32.0 * self.mode_count() as f64)?;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut half = Vec::with_capacity((self.mode_count() / 2) as usize);
        for m0 in self.lo..=self.hi {
            for m1 in self.lo..=self.hi {
                half.push(([m0 as i64, m1 as i64], Complex64::new(self.a([m0, m1]) * r, 0.0)));
            }
        }
        PlaneField::new(plane_axes(self.comp), hermitian_modes(half))
    }

    /// `Σ_{m=lo}^{hi} e^{(t* − t) m²}`: one axis of the separable heat sum.
    fn axis_sum(&self, t: f64) -> f64 {
        (self.lo..=self.hi).map(|m| ((self.t_star - t) * (m * m) as f64).exp()).sum()
    }

    /// `‖e^{tΔ}u‖_∞`, attained at the origin because all coefficients are positive.
    pub fn heat_sup(&self, t: f64) -> f64 {
        let s = self.axis_sum(t);
        std::f64::consts::SQRT_2 * self.amplitude * s * s
    }

    /// `sup_t t^{1/2}‖e^{tΔ}u‖_∞` by golden-section search in `ln t`; the
    /// separable form keeps this cheap at scales where the block has tens of
    /// millions of modes.
    pub fn besov_inf_inf(&self) -> f64 {
        let k2min = 2.0 * (self.lo * self.lo) as f64;
        let k2max = 2.0 * (self.hi * self.hi) as f64;
        let (lo, hi) = ((0.01 / k2max).ln(), (100.0 / k2min).ln());
        // coarse scan then refine around the best point
        let n = 400;
        let f = |x: f64| x.exp().sqrt() * self.heat_sup(x.exp());
        let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let best = (0..=n).max_by(|&a, &b| f(xs[a]).total_cmp(&f(xs[b]))).unwrap();
        let a = xs[best.saturating_sub(1)];
        let b = xs[(best + 1).min(n)];
        golden_max(f, a, b, 80).1.max(f(xs[best]))
    }
}

/// The low mode `√2 a cos(x₁ + x₂)` in the third velocity component.
pub fn build_component3(params: &ConstructionParams) -> Result<PlaneField> {
    params.validate()?;
    let a = params.l2_targets()[2];
    let c = Complex64::new(a * std::f64::consts::FRAC_1_SQRT_2, 0.0);
    PlaneField::new(plane_axes(2), hermitian_modes([([LOW_MODE[0], LOW_MODE[1]], c)]))
}

/// Component `comp` (0 or 1) with its equalized amplitude.
pub fn build_component(comp: usize, params: &ConstructionParams) -> Result<(PlaneField, f64)> {
    let b = BandBlock::new(comp, params)?;
    Ok((b.to_plane()?, b.amplitude))
}

/// A certified initial datum: velocity component `i` is the scalar field
/// `components[i]`, independent of coordinate `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthogonalData {
    pub params: ConstructionParams,
    pub components: [PlaneField; 3],
    /// Equalized amplitudes `A`, `B` of the two high blocks (0 when not built by construction).
    pub equalized: [f64; 2],
}

impl OrthogonalData {
    pub fn build(params: &ConstructionParams) -> Result<Self> {
        let (c0, a) = build_component(0, params)?;
        let (c1, b) = build_component(1, params)?;
        let c2 = build_component3(params)?;
        Ok(OrthogonalData { params: *params, components: [c0, c1, c2], equalized: [a, b] })
    }

    /// Wraps arbitrary components (validation is left to [`validate_hypotheses`]).
    pub fn from_components(params: ConstructionParams, components: [PlaneField; 3]) -> Self {
        OrthogonalData { params, components, equalized: [0.0; 2] }
    }

    /// Largest |k| per torus axis over all components.
    pub fn band_limit(&self) -> [i64; 3] {
        let mut b = [0i64; 3];
        for f in &self.components {
            let bl = f.band_limit();
            let ax = f.axes();
            b[ax[0]] = b[ax[0]].max(bl[0]);
            b[ax[1]] = b[ax[1]].max(bl[1]);
        }
        b
    }

    /// Smallest grid representing every component.
    pub fn natural_grid(&self) -> Result<FourierGrid> {
        FourierGrid::new(self.band_limit().map(|m| axis_len_for(m as usize)))
    }

    /// The three components embedded as separate vector fields on `grid`.
    pub fn embed(&self, grid: &FourierGrid) -> Result<[SpectralVectorField; 3]> {
        Ok([
            self.components[0].to_vector(0, grid)?,
            self.components[1].to_vector(1, grid)?,
            self.components[2].to_vector(2, grid)?,
        ])
    }

    /// `u₀ = u₀¹ + u₀² + u₀³` on `grid`.
    pub fn total(&self, grid: &FourierGrid) -> Result<SpectralVectorField> {
        let [a, b, c] = self.embed(grid)?;
        a.axpy(1.0, &b)?.axpy(1.0, &c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub id: char,
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub bound: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub params: ConstructionParams,
    pub checks: Vec<HypothesisCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, id: char) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
}

/// Checks the hypotheses on the datum; failures are entries, not errors.
pub fn validate_hypotheses(data: &OrthogonalData) -> Result<ValidationReport> {
    use std::collections::HashSet;
    let p = &data.params;
    let mut checks = Vec::new();
    let mut push = |id, name: &str, passed, measured, bound, detail: String| {
        checks.push(HypothesisCheck { id, name: name.to_string(), passed, measured, bound, detail })
    };

    // (a) pairwise disjoint supports
    let sets: Vec<HashSet<[i64; 3]>> =
        data.components.iter().map(|f| f.modes().iter().map(|(k, _)| f.lift(*k)).collect()).collect();
    let mut shared = 0usize;
    for i in 0..3 {
        for j in i + 1..3 {
            shared += sets[i].intersection(&sets[j]).count();
        }
    }
    push('a', "disjoint supports", shared == 0, shared as f64, 0.0, format!("{shared} shared wavevectors"));

    // (b) band containment and scale separation
    let mut outside = 0usize;
    for comp in 0..2 {
        let [lo, hi] = p.band(comp).map(|x| x as i64);
        outside += data.components[comp]
            .modes()
            .iter()
            .filter(|(k, _)| !(lo..=hi).contains(&k[0].abs()) || !(lo..=hi).contains(&k[1].abs()))
            .count();
    }
    let m = p.high_scale();
    let separated = 2 * p.n < m;
    push(
        'b',
        "band containment",
        outside == 0 && separated,
        outside as f64,
        0.0,
        format!("{outside} modes outside [N,2N] / [M,2M]; 2N = {} {} M = {m}", 2 * p.n, if separated { "<" } else { ">=" }),
    );

    // (c) component i independent of x_i, i.e. in the plane normal to axis i
    let planar = (0..3).all(|i| data.components[i].normal_axis() == i);
    push('c', "plane constraints k_i = 0", planar, if planar { 0.0 } else { 1.0 }, 0.0, String::new());

    // (d) mean zero
    let mean_zero = data.components.iter().all(|f| f.is_mean_zero());
    push('d', "mean zero", mean_zero, if mean_zero { 0.0 } else { 1.0 }, 0.0, String::new());

    // (e) L² budgets
    let bound = p.l2_bound();
    let norms: Vec<f64> = data.components.iter().map(|f| f.l2_norm()).collect();
    let worst = norms.iter().cloned().fold(0.0, f64::max);
    let violated: Vec<String> = norms
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > bound * (1.0 + 1e-12))
        .map(|(i, v)| format!("||u{}||_2 = {v:.6} > {bound:.6}", i + 1))
        .collect();
    push('e', "L2 budgets", violated.is_empty(), worst, bound, violated.join("; "));

    // (f) L³ bound on the low mode
    let l3 = data.components[2].lp_norm(3.0, 4)?;
    let b3 = p.low_mode_l3_bound();
    push('f', "low-mode L3 bound", l3 <= b3, l3, b3, format!("||u3||_3 = {l3:.6} vs {b3:.6}"));

    Ok(ValidationReport { params: *p, checks })
}

/// Largeness of one datum: `B⁻¹_{∞,∞}` (heat method) per component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LargenessRow {
    pub n: u64,
    pub besov: [f64; 3],
    /// `e^{−8} (C⁻¹ ln N)^{1/2}`
    pub lower_bound: f64,
}

/// Component 0 goes through the generic heat-method norm on the materialized
/// field; component 1 uses the separable closed form (it has `~N^{2+2ε}` modes).
pub fn largeness_row(params: &ConstructionParams) -> Result<LargenessRow> {
    let spec = BesovSpec::heat(-1.0, f64::INFINITY, f64::INFINITY)?;
    let (c0, _) = build_component(0, params)?;
    let (k2min, k2max) = c0.k2_range().expect("nonempty block");
    let g = TimeGrid::for_support(k2min, k2max, 32)?;
    let b0 = besov_norm(&c0, &spec, Some(&g))?.value;
    let b1 = BandBlock::new(1, params)?.besov_inf_inf();
    let c2 = build_component3(params)?;
    let g3 = TimeGrid::for_support(2.0, 2.0, 32)?;
    let b2 = besov_norm(&c2, &spec, Some(&g3))?.value;
    let lower_bound = (-8.0f64).exp() * ((params.n as f64).ln() / params.c).sqrt();
    Ok(LargenessRow { n: params.n, besov: [b0, b1, b2], lower_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_overlap_rejected() {
        // 2N = 8 >= ceil(4^1.1) = 5
        let e = ConstructionParams::new(4, 0.1, 0.02, 1.0).unwrap_err().to_string();
        assert!(e.contains("overlap") && e.contains("[4, 8]") && e.contains("[5, 10]"), "{e}");
    }

    #[test]
    fn delta_constraint() {
        let e = ConstructionParams::new(64, 0.5, 0.2, 1.0).unwrap_err().to_string();
        assert!(e.contains("delta"), "{e}");
    }

    #[test]
    fn high_scale_is_round_off_tolerant() {
        let p = ConstructionParams::new(16, 0.25, 0.03, 1.0);
        // 16^1.25 = 32 exactly: bands [16,32], [32,64] touch
        assert!(p.is_err());
        let p = ConstructionParams { n: 16, eps: 0.25, delta: 0.03, c: 1.0, budget: L2Budget::Construction, allow_band_overlap: true };
        assert_eq!(p.high_scale(), 32);
    }

    #[test]
    fn n2_block_by_direct_summation() {
        let p = ConstructionParams::new(2, 1.5, 0.1, 1.0).unwrap();
        let (f, a) = build_component(0, &p).unwrap();
        assert_eq!(f.modes().len(), 18);
        let mut s = 0.0;
        for m2 in 2..=4u64 {
            for m3 in 2..=4u64 {
                s += (2.0 * (m2 * m2 + m3 * m3) as f64 / 4.0).exp();
            }
        }
        let want = (2f64.ln() / s).sqrt();
        assert!((a - want).abs() < 1e-14 * want);
        let heated = f.heat(0.25).unwrap();
        let amps: Vec<f64> = heated.modes().iter().map(|(_, c)| c.re).collect();
        let (lo, hi) = amps.iter().fold((f64::MAX, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
        assert!(hi / lo - 1.0 <= 1e-12);
        assert!((f.l2_norm() - 2f64.ln().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn low_mode_norm() {
        let p = ConstructionParams { n: 16, eps: 0.25, delta: 0.05, c: 1.0, budget: L2Budget::Construction, allow_band_overlap: true };
        let f = build_component3(&p).unwrap();
        assert!((f.l2_norm() - 0.41628).abs() < 1e-5);
        let support: Vec<[i64; 3]> = f.modes().iter().map(|(k, _)| f.lift(*k)).collect();
        assert_eq!(support.len(), 2);
        assert!(support.contains(&[1, 1, 0]) && support.contains(&[-1, -1, 0]));
    }

    #[test]
    fn constructed_data_passes_structural_checks() {
        let p = ConstructionParams::with_defaults(24, 0.5).unwrap();
        let d = OrthogonalData::build(&p).unwrap();
        let r = validate_hypotheses(&d).unwrap();
        for id in ['a', 'b', 'c', 'd', 'f'] {
            assert!(r.get(id).unwrap().passed, "{id}: {:?}", r.get(id));
        }
        // construction budgets of the high blocks exceed the smallness bound
        assert!(!r.get('e').unwrap().passed);
        let d = OrthogonalData::build(&p.with_budget(L2Budget::Hypothesis)).unwrap();
        assert!(validate_hypotheses(&d).unwrap().all_passed());
    }

    #[test]
    fn overlapping_supports_fail_a() {
        let p = ConstructionParams::with_defaults(24, 0.5).unwrap();
        let d = OrthogonalData::build(&p).unwrap();
        let mut comps = d.components.clone();
        // component 3 moved onto a wavevector of component 2's plane and band
        let m = p.high_scale() as i64;
        comps[2] = PlaneField::new([0, 1], hermitian_modes([([m, 0], Complex64::new(0.1, 0.0))])).unwrap();
        comps[1] = PlaneField::new([0, 2], hermitian_modes([([m, 0], Complex64::new(0.1, 0.0))])).unwrap();
        let r = validate_hypotheses(&OrthogonalData::from_components(p, comps)).unwrap();
        assert!(!r.get('a').unwrap().passed);
    }

    #[test]
    fn separable_sup_matches_generic() {
        let p = ConstructionParams::with_defaults(12, 0.5).unwrap();
        let b = BandBlock::new(1, &p).unwrap();
        let f = b.to_plane().unwrap();
        let (lo, hi) = f.k2_range().unwrap();
        let g = TimeGrid::for_support(lo, hi, 32).unwrap();
        let spec = BesovSpec::heat(-1.0, f64::INFINITY, f64::INFINITY).unwrap();
        let generic = besov_norm(&f, &spec, Some(&g)).unwrap().value;
        assert!((b.besov_inf_inf() - generic).abs() < 1e-8 * generic);
        assert!((b.heat_sup(0.01) - f.heat(0.01).unwrap().value_at_origin()).abs() < 1e-10 * b.heat_sup(0.01));
    }
}
