//! Real scalar fields that depend on two of the three torus coordinates.
//!
//! A `PlaneField` stores its nonzero Fourier modes sparsely, indexed by the
//! two in-plane wavenumbers. Every constructed datum of this crate has this
//! shape, and so does its heat flow, which keeps large-N work two-dimensional.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{ScalarField, SpectralVectorField};
use crate::grid::{axis_len_for, check_alloc, storage_index, FourierGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct PlaneField {
    /// The two torus axes (0-based, ascending) the field depends on.
    axes: [usize; 2],
    /// Nonzero modes `(k_a, k_b)` with their amplitudes; Hermitian-closed.
    modes: Vec<([i64; 2], Complex64)>,
}

impl PlaneField {
    pub fn new(axes: [usize; 2], modes: Vec<([i64; 2], Complex64)>) -> Result<Self> {
        if !(axes[0] < axes[1] && axes[1] < 3) {
            return Err(Error::pre(format!("plane axes {axes:?} must be ascending and < 3")));
        }
        let f = PlaneField { axes, modes: modes.into_iter().filter(|(_, c)| c.norm() != 0.0).collect() };
        f.check_hermitian()?;
        Ok(f)
    }

    pub fn zero(axes: [usize; 2]) -> Self {
        PlaneField { axes, modes: Vec::new() }
    }

    pub fn axes(&self) -> [usize; 2] {
        self.axes
    }

    /// The torus axis this field does not depend on.
    pub fn normal_axis(&self) -> usize {
        3 - self.axes[0] - self.axes[1]
    }

    pub fn modes(&self) -> &[([i64; 2], Complex64)] {
        &self.modes
    }

    pub fn is_zero(&self) -> bool {
        self.modes.is_empty()
    }

    /// Lifts a plane wavenumber pair to a 3D wavevector.
    pub fn lift(&self, k: [i64; 2]) -> [i64; 3] {
        let mut out = [0i64; 3];
        out[self.axes[0]] = k[0];
        out[self.axes[1]] = k[1];
        out
    }

    pub fn is_mean_zero(&self) -> bool {
        self.modes.iter().all(|(k, _)| *k != [0, 0])
    }

    pub fn l2_norm(&self) -> f64 {
        self.modes.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max |k| per in-plane axis.
    pub fn band_limit(&self) -> [i64; 2] {
        self.modes.iter().fold([0, 0], |b, (k, _)| [b[0].max(k[0].abs()), b[1].max(k[1].abs())])
    }

    /// Range of |k|² over the support, `None` for the zero field.
    pub fn k2_range(&self) -> Option<(f64, f64)> {
        self.modes.iter().fold(None, |acc, (k, _)| {
            let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
            Some(match acc {
                None => (k2, k2),
                Some((lo, hi)) => (lo.min(k2), hi.max(k2)),
            })
        })
    }

    /// Applies a multiplier that depends on the in-plane wavevector.
    pub fn map_modes(&self, f: impl Fn([i64; 2], Complex64) -> Complex64) -> Self {
        let modes = self.modes.iter().map(|&(k, c)| (k, f(k, c))).filter(|(_, c)| c.norm() != 0.0).collect();
        PlaneField { axes: self.axes, modes }
    }

    /// Radial multiplier `m(|k|²)`.
    pub fn map_radial(&self, m: impl Fn(f64) -> f64) -> Self {
        self.map_modes(|k, c| c * m((k[0] * k[0] + k[1] * k[1]) as f64))
    }

    pub fn heat(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0) {
            return Err(Error::pre(format!("heat semigroup needs t >= 0, got {t}")));
        }
        Ok(self.map_radial(|k2| (-t * k2).exp()))
    }

    /// ∂ along torus axis `axis`; zero when the field does not depend on it.
    pub fn derivative(&self, axis: usize) -> Self {
        match self.axes.iter().position(|&a| a == axis) {
            None => PlaneField::zero(self.axes),
            Some(p) => self.map_modes(|k, c| Complex64::new(-c.im, c.re) * k[p] as f64),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map_modes(|_, c| c * s)
    }

    /// True when every amplitude is real and nonnegative; then the field
    /// attains its sup norm at the origin.
    pub fn has_nonnegative_coefficients(&self) -> bool {
        self.modes.iter().all(|(_, c)| c.im == 0.0 && c.re >= 0.0)
    }

    /// Value at the origin, `Σ û(k)`.
    pub fn value_at_origin(&self) -> f64 {
        self.modes.iter().map(|(_, c)| c.re).sum()
    }

    /// Sum of |û(k)|, an upper bound for the sup norm.
    pub fn coefficient_l1(&self) -> f64 {
        self.modes.iter().map(|(_, c)| c.norm()).sum()
    }

    /// Smallest sample counts per in-plane axis that represent the field.
    pub fn natural_dims(&self) -> [usize; 2] {
        let b = self.band_limit();
        [axis_len_for(b[0] as usize), axis_len_for(b[1] as usize)]
    }

    /// Real samples on a uniform `dims[0] × dims[1]` grid (row-major, first
    /// plane axis slowest). Each dim must represent the band-limit.
    pub fn sample(&self, dims: [usize; 2]) -> Result<Vec<f64>> {
        let b = self.band_limit();
        for p in 0..2 {
            if dims[p] % 2 != 0 || (b[p] as usize) >= dims[p] / 2 {
                return Err(Error::pre(format!("sample dims {dims:?} cannot represent band-limit {b:?}")));
            }
        }
        let n = dims[0] * dims[1];
        check_alloc(16.0 * n as f64)?;
        let mut buf = vec![Complex64::default(); n];
        for &(k, c) in &self.modes {
            let i = storage_index(dims[0], k[0]).expect("checked band-limit");
            let j = storage_index(dims[1], k[1]).expect("checked band-limit");
            buf[i * dims[1] + j] += c;
        }
        fft::fft_nd(&mut buf, &dims, fft::Direction::Inverse);
        Ok(buf.into_iter().map(|z| z.re).collect())
    }

    /// Normalized-measure Lᵖ norm by quadrature on `oversample × natural_dims`.
    /// `p = ∞` uses the origin value when coefficients are nonnegative.
    pub fn lp_norm(&self, p: f64, oversample: usize) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::pre(format!("Lp exponent must be >= 1, got {p}")));
        }
        if self.is_zero() {
            return Ok(0.0);
        }
        if p.is_infinite() && self.has_nonnegative_coefficients() {
            return Ok(self.value_at_origin());
        }
        let nd = self.natural_dims();
        let s = self.sample([nd[0] * oversample.max(1), nd[1] * oversample.max(1)])?;
        Ok(crate::norms::lp_of_samples(&s, p))
    }

    /// Embeds the field as a 3D scalar on `grid`.
    pub fn to_scalar(&self, grid: &FourierGrid) -> Result<ScalarField> {
        let mut v = vec![Complex64::default(); grid.len()];
        for &(k, c) in &self.modes {
            let k3 = self.lift(k);
            let i = grid
                .index_of(k3)
                .ok_or_else(|| Error::pre(format!("mode {k3:?} not representable on {:?}", grid.dims())))?;
            v[i] += c;
        }
        ScalarField::from_coeffs(grid, v)
    }

    /// Embeds the field as velocity component `comp` of a vector field.
    pub fn to_vector(&self, comp: usize, grid: &FourierGrid) -> Result<SpectralVectorField> {
        Ok(SpectralVectorField::from_scalar(comp, &self.to_scalar(grid)?))
    }

    /// Extracts component `comp` of `f` when it is independent of one axis.
    /// Prefers the normal axis `comp` (the divergence-free configuration).
    pub fn extract(f: &SpectralVectorField, comp: usize) -> Option<PlaneField> {
        let grid = f.grid();
        let v = f.component(comp);
        let nz: Vec<(usize, [i64; 3])> =
            v.iter().enumerate().filter(|(_, c)| c.norm() != 0.0).map(|(i, _)| (i, grid.wavevector(i))).collect();
        let mut candidates = vec![comp];
        candidates.extend((0..3).filter(|&a| a != comp));
        for normal in candidates {
            if nz.iter().all(|(_, k)| k[normal] == 0) {
                let axes = match normal {
                    0 => [1, 2],
                    1 => [0, 2],
                    _ => [0, 1],
                };
                let modes = nz.iter().map(|&(i, k)| ([k[axes[0]], k[axes[1]]], v[i])).collect();
                return Some(PlaneField { axes, modes });
            }
        }
        None
    }

    fn check_hermitian(&self) -> Result<()> {
        use std::collections::HashMap;
        let scale = self.modes.iter().fold(0.0f64, |m, (_, c)| m.max(c.norm()));
        let map: HashMap<[i64; 2], Complex64> = self.modes.iter().copied().collect();
        if map.len() != self.modes.len() {
            return Err(Error::pre("duplicate plane modes"));
        }
        for (k, c) in &self.modes {
            let partner = map.get(&[-k[0], -k[1]]).copied().unwrap_or_default();
            if (partner - c.conj()).norm() > 1e-12 * scale {
                return Err(Error::pre(format!("plane field not Hermitian at k = {k:?}")));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::pre("non-finite plane amplitude"));
            }
        }
        Ok(())
    }
}

/// Builds a Hermitian-closed mode list from amplitudes on a half-set:
/// each `(k, c)` contributes `c` at `k` and `conj(c)` at `-k`.
pub fn hermitian_modes(half: impl IntoIterator<Item = ([i64; 2], Complex64)>) -> Vec<([i64; 2], Complex64)> {
    let mut out = Vec::new();
    for (k, c) in half {
        out.push((k, c));
        out.push(([-k[0], -k[1]], c.conj()));
    }
    out
}
