//! Lᵖ, Littlewood–Paley and Besov norms on the normalized torus measure.

mod bernstein;
mod besov;
mod profile;
mod smoothing;

pub use bernstein::{bernstein_check, BernsteinReport};
pub use besov::{besov_norm, littlewood_paley, BesovMethod, BesovSpec, BesovValue, TimeGrid};
pub use profile::DyadicProfile;
pub use smoothing::{heat_smoothing_fit, standard_smoothing_exponent, SmoothingFit, SmoothingRequest};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralVectorField;
use crate::plane::PlaneField;
use crate::stats::neumaier_sum;

/// Fields on which the norm machinery operates: anything that admits radial
/// Fourier multipliers and an Lᵖ quadrature.
pub trait NormTarget: Sized {
    /// Applies the multiplier `m(|k|²)` to every mode.
    fn map_radial(&self, m: &dyn Fn(f64) -> f64) -> Self;
    fn lp(&self, p: f64, oversample: usize) -> Result<f64>;
    /// Range of |k|² over the nonzero modes.
    fn k2_range(&self) -> Option<(f64, f64)>;
    /// True when the k = 0 coefficient vanishes.
    fn has_zero_mean(&self) -> bool;
    /// Σ|û(k)| over all components; bounds the sup norm.
    fn coefficient_l1(&self) -> f64;
    /// |k| of every nonzero mode (with multiplicity across components).
    fn mode_magnitudes(&self) -> Vec<f64>;
}

impl NormTarget for SpectralVectorField {
    fn map_radial(&self, m: &dyn Fn(f64) -> f64) -> Self {
        self.map_modes(|k, c| c * m((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64))
    }

    fn lp(&self, p: f64, oversample: usize) -> Result<f64> {
        // even integer exponents are integrated exactly on any adequate
        // lattice, so sample on the smallest one; the sup is sampled at a
        // density set by the band-limit rather than by the storage grid
        if p.is_infinite() || (p % 2.0 == 0.0 && oversample as f64 >= p / 2.0) {
            lp_norm(&self.compacted()?, p, oversample)
        } else {
            lp_norm(self, p, oversample)
        }
    }

    fn k2_range(&self) -> Option<(f64, f64)> {
        let mut r: Option<(f64, f64)> = None;
        for c in 0..3 {
            for (i, v) in self.component(c).iter().enumerate() {
                if v.norm() != 0.0 {
                    let k = self.grid().wavevector(i);
                    let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
                    r = Some(r.map_or((k2, k2), |(lo, hi)| (lo.min(k2), hi.max(k2))));
                }
            }
        }
        r
    }

    fn has_zero_mean(&self) -> bool {
        (0..3).all(|c| self.component(c)[0].norm() == 0.0)
    }

    fn coefficient_l1(&self) -> f64 {
        (0..3).map(|c| self.component(c).iter().map(|v| v.norm()).sum::<f64>()).sum()
    }

    fn mode_magnitudes(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for c in 0..3 {
            for (i, v) in self.component(c).iter().enumerate() {
                if v.norm() != 0.0 {
                    let k = self.grid().wavevector(i);
                    out.push(((k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64).sqrt());
                }
            }
        }
        out
    }
}

impl NormTarget for PlaneField {
    fn map_radial(&self, m: &dyn Fn(f64) -> f64) -> Self {
        PlaneField::map_radial(self, m)
    }

    fn lp(&self, p: f64, oversample: usize) -> Result<f64> {
        self.lp_norm(p, oversample)
    }

    fn k2_range(&self) -> Option<(f64, f64)> {
        PlaneField::k2_range(self)
    }

    fn has_zero_mean(&self) -> bool {
        self.is_mean_zero()
    }

    fn coefficient_l1(&self) -> f64 {
        PlaneField::coefficient_l1(self)
    }

    fn mode_magnitudes(&self) -> Vec<f64> {
        self.modes().iter().map(|(k, _)| ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt()).collect()
    }
}

fn nonnegative(v: &[Complex64]) -> bool {
    v.iter().all(|c| c.im == 0.0 && c.re >= 0.0)
}

/// Normalized-measure Lᵖ norm of the pointwise Euclidean magnitude |u(x)|.
///
/// Finite `p` uses trapezoid quadrature on the grid refined by `oversample`
/// (exact for even integer `p` once `oversample·n > p·K`). `p = ∞` takes the
/// sample maximum, except that fields with real nonnegative coefficients are
/// evaluated exactly at the origin, where every mode peaks.
pub fn lp_norm(f: &SpectralVectorField, p: f64, oversample: usize) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::pre(format!("Lp exponent must be >= 1, got {p}")));
    }
    if f.max_abs() == 0.0 {
        return Ok(0.0);
    }
    if p.is_infinite() && (0..3).all(|c| nonnegative(f.component(c))) {
        let s: f64 = (0..3).map(|c| f.component(c).iter().map(|v| v.re).sum::<f64>().powi(2)).sum();
        return Ok(s.sqrt());
    }
    let phys = f.evaluate_physical(oversample)?;
    Ok(lp_of_samples(&phys.magnitude(), p))
}

/// `(mean |x|ᵖ)^{1/p}`, or `max |x|` for `p = ∞`.
pub fn lp_of_samples(samples: &[f64], p: f64) -> f64 {
    let m = samples.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if p.is_infinite() || m == 0.0 {
        return m;
    }
    let mean = neumaier_sum(samples.iter().map(|x| (x.abs() / m).powf(p))) / samples.len() as f64;
    m * mean.powf(1.0 / p)
}
