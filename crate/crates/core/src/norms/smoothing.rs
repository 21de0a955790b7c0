use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::lp_norm;
use crate::error::{Error, Result};
use crate::field::SpectralVectorField;
use crate::grid::FourierGrid;
use crate::stats::log_log_slope;

/// Parameters of an empirical heat-smoothing fit.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingRequest {
    /// Frequency band `kmin ≤ |k| ≤ kmax` of the trial fields.
    pub band: [f64; 2],
    /// Order of the fractional derivative `|∇|^s`.
    pub s: f64,
    pub p: f64,
    pub q: f64,
    /// Number of trial fields.
    pub trials: usize,
    pub seed: u64,
    /// Time samples in the fitting window.
    pub samples: usize,
}

impl SmoothingRequest {
    pub fn new(s: f64, p: f64, q: f64) -> Self {
        SmoothingRequest { band: [1.0, 30.0], s, p, q, trials: 24, seed: 0x5EED, samples: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothingFit {
    pub slope: f64,
    pub expected: f64,
    pub times: Vec<f64>,
    /// `max_trials ‖|∇|^s e^{tΔ}u‖_q / ‖u‖_p` at each time.
    pub ratios: Vec<f64>,
}

/// The standard exponent `−s/2 − (3/2)(1/p − 1/q)` of the `Lᵖ → L^q` heat bound.
pub fn standard_smoothing_exponent(s: f64, p: f64, q: f64) -> f64 {
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    -s / 2.0 - 1.5 * (inv(p) - inv(q))
}

fn norm(f: &SpectralVectorField, p: f64) -> Result<f64> {
    if p == 2.0 {
        Ok(f.l2_norm())
    } else {
        lp_norm(f, p, if p.is_infinite() { 4 } else { 2 })
    }
}

/// Fits the algebraic decay of `sup_u ‖|∇|^s e^{tΔ}u‖_q / ‖u‖_p` in `t`.
///
/// Trial fields are smoothed spikes `Σ e^{−τ|k|²}(1 + ξ_k/4) cos(k·x)` over
/// the band, with `τ` log-spaced across the band's time scales and `ξ_k`
/// uniform in `[−1, 1]`. Their coefficients are positive, so they are the
/// near-extremizers of the smoothing estimate. The fit window
/// `[4/kmax², 0.05/kmin²]` stays clear of both the band-limit plateau and
/// the exponential cutoff.
pub fn heat_smoothing_fit(req: &SmoothingRequest) -> Result<SmoothingFit> {
    let [kmin, kmax] = req.band;
    if !(req.q >= req.p && req.p >= 1.0) {
        return Err(Error::pre(format!("smoothing fit needs 1 <= p <= q, got p={}, q={}", req.p, req.q)));
    }
    if !(kmin >= 1.0 && kmax > kmin) || req.s < 0.0 || req.trials == 0 || req.samples < 2 {
        return Err(Error::InvalidParams("smoothing fit needs 1 <= kmin < kmax, s >= 0, trials >= 1, samples >= 2".into()));
    }
    let (t0, t1) = (4.0 / (kmax * kmax), 0.05 / (kmin * kmin));
    if t1 <= t0 {
        return Err(Error::InvalidParams(format!("band [{kmin}, {kmax}] too narrow for an algebraic window")));
    }
    let m = kmax.floor() as usize;
    let grid = FourierGrid::cube(2 * (m + 2))?;
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let mut base = SpectralVectorField::zeros(&grid);
    let mi = m as i64;
    for a in -mi..=mi {
        for b in -mi..=mi {
            for c in -mi..=mi {
                let k = [a, b, c];
                // one representative per ±k pair
                if k <= [0, 0, 0] {
                    continue;
                }
                let r = ((a * a + b * b + c * c) as f64).sqrt();
                if r < kmin || r > kmax {
                    continue;
                }
                let xi: f64 = rng.gen_range(-1.0..=1.0);
                base.add_real_mode(0, k, Complex64::new(1.0 + 0.25 * xi, 0.0))?;
            }
        }
    }
    let (tau0, tau1) = (0.25 / (kmax * kmax), 4.0 / (kmin * kmin));
    let taus: Vec<f64> = (0..req.trials)
        .map(|i| {
            let x = if req.trials == 1 { 0.0 } else { i as f64 / (req.trials - 1) as f64 };
            tau0 * (tau1 / tau0).powf(x)
        })
        .collect();
    let times: Vec<f64> =
        (0..req.samples).map(|i| t0 * (t1 / t0).powf(i as f64 / (req.samples - 1) as f64)).collect();
    let mut ratios = vec![0.0f64; times.len()];
    for &tau in &taus {
        let u = base.heat(tau)?;
        let up = norm(&u, req.p)?;
        let du = u.fractional_laplacian(req.s)?;
        for (i, &t) in times.iter().enumerate() {
            let r = norm(&du.heat(t)?, req.q)? / up;
            ratios[i] = ratios[i].max(r);
        }
    }
    let slope = log_log_slope(&times, &ratios).expect("at least two samples");
    Ok(SmoothingFit { slope, expected: standard_smoothing_exponent(req.s, req.p, req.q), times, ratios })
}
