//! Spectral scalar and vector fields on a [`FourierGrid`] and the exact
//! linear operators acting on them.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{check_alloc, dealias_len_for, FourierGrid};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Relative tolerance for the Hermitian-symmetry check on construction.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Real scalar field stored as Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: FourierGrid,
    coeffs: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: &FourierGrid) -> Self {
        ScalarField { grid: grid.clone(), coeffs: vec![ZERO; grid.len()] }
    }

    pub fn from_coeffs(grid: &FourierGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::pre("coefficient count does not match grid"));
        }
        check_coeffs(grid, &coeffs, "scalar")?;
        Ok(ScalarField { grid: grid.clone(), coeffs })
    }

    /// Adds `c e^{ik·x} + conj(c) e^{-ik·x}`; for `k = 0` adds `Re c`.
    pub fn add_real_mode(&mut self, k: [i64; 3], c: Complex64) -> Result<()> {
        add_real_mode(&self.grid, &mut self.coeffs, k, c)
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, k: [i64; 3]) -> Complex64 {
        self.grid.index_of(k).map_or(ZERO, |i| self.coeffs[i])
    }

    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Per-axis max |kₐ| over modes with nonzero amplitude.
    pub fn band_limit(&self) -> [i64; 3] {
        band_limit(&self.grid, &self.coeffs)
    }

    /// Real samples on the grid scaled by `oversample` per axis.
    pub fn evaluate_physical(&self, oversample: usize) -> Result<Vec<f64>> {
        let dims = oversampled_dims(&self.grid, oversample)?;
        let s = fft::synthesize(&self.coeffs, &self.grid.dims(), &dims);
        Ok(s.into_iter().map(|z| z.re).collect())
    }
}

/// Three-component velocity field stored as Fourier coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVectorField {
    grid: FourierGrid,
    comps: [Vec<Complex64>; 3],
    mean_zero: bool,
}

impl SpectralVectorField {
    pub fn zeros(grid: &FourierGrid) -> Self {
        SpectralVectorField {
            grid: grid.clone(),
            comps: [vec![ZERO; grid.len()], vec![ZERO; grid.len()], vec![ZERO; grid.len()]],
            mean_zero: true,
        }
    }

    /// Validates Hermitian symmetry, finiteness, Nyquist emptiness and the
    /// mean-zero flag.
    pub fn from_components(grid: &FourierGrid, comps: [Vec<Complex64>; 3], mean_zero: bool) -> Result<Self> {
        for (c, v) in comps.iter().enumerate() {
            if v.len() != grid.len() {
                return Err(Error::pre(format!("component {c}: coefficient count does not match grid")));
            }
            check_coeffs(grid, v, &format!("component {c}"))?;
            if mean_zero && v[0].norm() != 0.0 {
                return Err(Error::pre(format!("component {c}: nonzero mean on a mean-zero field")));
            }
        }
        Ok(SpectralVectorField { grid: grid.clone(), comps, mean_zero })
    }

    pub(crate) fn from_parts_unchecked(grid: &FourierGrid, comps: [Vec<Complex64>; 3], mean_zero: bool) -> Self {
        SpectralVectorField { grid: grid.clone(), comps, mean_zero }
    }

    /// Single-component field from a scalar, placed in component `comp`.
    pub fn from_scalar(comp: usize, s: &ScalarField) -> Self {
        let mut f = Self::zeros(s.grid());
        f.comps[comp] = s.coeffs.clone();
        f.mean_zero = s.coeffs[0].norm() == 0.0;
        f
    }

    /// Adds `c e^{ik·x} + conj(c) e^{-ik·x}` to component `comp`.
    pub fn add_real_mode(&mut self, comp: usize, k: [i64; 3], c: Complex64) -> Result<()> {
        if k == [0, 0, 0] && c.re != 0.0 {
            self.mean_zero = false;
        }
        add_real_mode(&self.grid, &mut self.comps[comp], k, c)
    }

    pub fn grid(&self) -> &FourierGrid {
        &self.grid
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn into_components(self) -> [Vec<Complex64>; 3] {
        self.comps
    }

    pub fn scalar(&self, c: usize) -> ScalarField {
        ScalarField { grid: self.grid.clone(), coeffs: self.comps[c].clone() }
    }

    pub fn coeff(&self, c: usize, k: [i64; 3]) -> Complex64 {
        self.grid.index_of(k).map_or(ZERO, |i| self.comps[c][i])
    }

    pub fn is_mean_zero(&self) -> bool {
        self.mean_zero
    }

    /// Coefficient ℓ² norm; equals the normalized-measure L² norm (Parseval).
    pub fn l2_norm(&self) -> f64 {
        self.comps.iter().flat_map(|v| v.iter()).map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ‖∇u‖_{L²} via Parseval.
    pub fn gradient_l2_norm(&self) -> f64 {
        let k2 = self.grid.k_squared();
        self.comps
            .iter()
            .map(|v| v.iter().zip(&k2).map(|(c, k)| c.norm_sqr() * k).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }

    /// `(‖u‖², ‖∇u‖²)` in one pass, given `|k|²` per mode.
    pub fn energy_and_dissipation(&self, k2: &[f64]) -> (f64, f64) {
        let mut e = 0.0;
        let mut d = 0.0;
        for v in &self.comps {
            for (c, k) in v.iter().zip(k2) {
                let a = c.norm_sqr();
                e += a;
                d += a * k;
            }
        }
        (e, d)
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flat_map(|v| v.iter()).fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flat_map(|v| v.iter()).all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Divergence `i k·û` as a scalar field.
    pub fn divergence(&self) -> ScalarField {
        let kk = [0, 1, 2].map(|a| self.grid.axis_wavenumbers(a));
        let mut out = vec![ZERO; self.grid.len()];
        for (idx, o) in out.iter_mut().enumerate() {
            let i = self.grid.split(idx);
            let s = self.comps[0][idx] * kk[0][i[0]] + self.comps[1][idx] * kk[1][i[1]] + self.comps[2][idx] * kk[2][i[2]];
            *o = Complex64::new(-s.im, s.re);
        }
        ScalarField { grid: self.grid.clone(), coeffs: out }
    }

    /// max_k |k·û(k)|.
    pub fn divergence_residual(&self) -> f64 {
        self.divergence().coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Wavevectors where component `c` has amplitude above `tol`.
    pub fn support(&self, c: usize, tol: f64) -> Vec<[i64; 3]> {
        self.comps[c]
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > tol)
            .map(|(i, _)| self.grid.wavevector(i))
            .collect()
    }

    /// Per-axis max |kₐ| over all components.
    pub fn band_limit(&self) -> [i64; 3] {
        let mut b = [0i64; 3];
        for v in &self.comps {
            let l = band_limit(&self.grid, v);
            for a in 0..3 {
                b[a] = b[a].max(l[a]);
            }
        }
        b
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map_modes(|_, c| c * s)
    }

    /// Linear combination `self + s·other` on the same grid.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::pre("fields live on different grids"));
        }
        let comps = [0, 1, 2].map(|c| self.comps[c].iter().zip(&other.comps[c]).map(|(a, b)| a + b * s).collect());
        Ok(SpectralVectorField { grid: self.grid.clone(), comps, mean_zero: self.mean_zero && other.mean_zero })
    }

    /// Coefficientwise max |a - b| relative to nothing; useful for identity checks.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let mut m: f64 = 0.0;
        for c in 0..3 {
            for (a, b) in self.comps[c].iter().zip(&other.comps[c]) {
                m = m.max((a - b).norm());
            }
        }
        m
    }

    /// ℓ² distance between coefficient arrays.
    pub fn l2_distance(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for c in 0..3 {
            for (a, b) in self.comps[c].iter().zip(&other.comps[c]) {
                s += (a - b).norm_sqr();
            }
        }
        s.sqrt()
    }

    /// Applies a scalar multiplier depending on the wavevector of each mode.
    pub fn map_modes(&self, f: impl Fn([i64; 3], Complex64) -> Complex64) -> Self {
        let comps = [0, 1, 2].map(|c| {
            self.comps[c]
                .iter()
                .enumerate()
                .map(|(i, &v)| if v == ZERO { ZERO } else { f(self.grid.wavevector(i), v) })
                .collect()
        });
        SpectralVectorField { grid: self.grid.clone(), comps, mean_zero: self.mean_zero }
    }

    /// ∂ along `axis` (0-based): multiplier `i kₐ`.
    pub fn derivative(&self, axis: usize) -> Self {
        assert!(axis < 3, "axis must be 0, 1 or 2");
        let mut out = self.map_modes(|k, c| Complex64::new(-c.im, c.re) * k[axis] as f64);
        out.mean_zero = true;
        out
    }

    /// Multiplier `|k|^s`. The zero mode maps to zero for `s > 0`, is kept for
    /// `s = 0`, and must already vanish for `s < 0`.
    pub fn fractional_laplacian(&self, s: f64) -> Result<Self> {
        if s < 0.0 && self.comps.iter().any(|v| v[0].norm() != 0.0) {
            return Err(Error::pre(format!("fractional power s = {s} < 0 requires a mean-zero field")));
        }
        if s == 0.0 {
            return Ok(self.clone());
        }
        let mut out = self.map_modes(|k, c| {
            let k2 = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64;
            if k2 == 0.0 {
                ZERO
            } else {
                c * k2.powf(0.5 * s)
            }
        });
        out.mean_zero = true;
        Ok(out)
    }

    /// Leray projection `(I - k kᵀ/|k|²) û(k)`; the zero mode passes through.
    pub fn leray_project(&self) -> Self {
        let mut out = self.clone();
        let kk = [0, 1, 2].map(|a| self.grid.axis_wavenumbers(a));
        let [n0, n1, n2] = self.grid.dims();
        let mut idx = 0;
        for k0 in &kk[0][..n0] {
            for k1 in &kk[1][..n1] {
                for k2 in &kk[2][..n2] {
                    let k = [*k0, *k1, *k2];
                    let kn = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                    if kn != 0.0 {
                        let u = [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]];
                        let dot = (u[0] * k[0] + u[1] * k[1] + u[2] * k[2]) / kn;
                        for c in 0..3 {
                            out.comps[c][idx] = u[c] - dot * k[c];
                        }
                    }
                    idx += 1;
                }
            }
        }
        out
    }

    /// Heat semigroup `e^{tΔ}`: multiplier `e^{-t|k|²}`.
    pub fn heat(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0) {
            return Err(Error::pre(format!("heat semigroup needs t >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(self.clone());
        }
        let k2 = self.grid.k_squared();
        let comps = [0, 1, 2].map(|c| self.comps[c].iter().zip(&k2).map(|(v, k)| v * (-t * k).exp()).collect());
        Ok(SpectralVectorField { grid: self.grid.clone(), comps, mean_zero: self.mean_zero })
    }

    /// Multiplies mode `idx` of every component by `m[idx]`.
    pub fn multiplied(&self, m: &[f64]) -> Self {
        let comps = [0, 1, 2].map(|c| self.comps[c].iter().zip(m).map(|(v, k)| v * k).collect());
        SpectralVectorField { grid: self.grid.clone(), comps, mean_zero: self.mean_zero }
    }

    /// The same field on the smallest grid holding its band-limit (never larger
    /// than the current grid).
    pub fn compacted(&self) -> Result<Self> {
        let bl = self.band_limit();
        let have = self.grid.dims();
        let dims = [0, 1, 2].map(|a| crate::grid::axis_len_for(bl[a] as usize).min(have[a]));
        if dims == have {
            return Ok(self.clone());
        }
        let grid = FourierGrid::new(dims)?;
        let comps = self.comps.clone().map(|c| fft::resample_modes(&c, &have, &dims));
        Ok(SpectralVectorField { grid, comps, mean_zero: self.mean_zero })
    }

    /// Real samples of all three components on the grid scaled by `oversample`.
    pub fn evaluate_physical(&self, oversample: usize) -> Result<PhysicalField> {
        let dims = oversampled_dims(&self.grid, oversample)?;
        let n: usize = dims.iter().product();
        check_alloc(3.0 * 24.0 * n as f64)?;
        let mut max_imag: f64 = 0.0;
        let mut scale: f64 = 0.0;
        let mut data: [Vec<f64>; 3] = Default::default();
        for c in 0..3 {
            if self.comps[c].iter().all(|v| *v == ZERO) {
                data[c] = vec![0.0; n];
                continue;
            }
            let s = fft::synthesize(&self.comps[c], &self.grid.dims(), &dims);
            for z in &s {
                max_imag = max_imag.max(z.im.abs());
                scale = scale.max(z.re.abs());
            }
            data[c] = s.into_iter().map(|z| z.re).collect();
        }
        Ok(PhysicalField { dims, data, max_imag_residue: max_imag, amplitude_scale: scale })
    }

    /// Rebuilds a field from real physical samples on `grid` (no oversampling).
    pub fn from_physical(grid: &FourierGrid, data: &[Vec<f64>; 3], mean_zero: bool) -> Result<Self> {
        let dims = grid.dims();
        let comps = [0, 1, 2].map(|c| {
            let s: Vec<Complex64> = data[c].iter().map(|&x| Complex64::new(x, 0.0)).collect();
            let mut v = fft::analyze(s, &dims, &dims);
            if mean_zero {
                v[0] = ZERO;
            }
            v
        });
        Self::from_components(grid, comps, mean_zero)
    }
}

/// Real samples of a vector field on a uniform grid.
#[derive(Debug, Clone)]
pub struct PhysicalField {
    pub dims: [usize; 3],
    pub data: [Vec<f64>; 3],
    /// Largest imaginary part discarded by the synthesis.
    pub max_imag_residue: f64,
    pub amplitude_scale: f64,
}

impl PhysicalField {
    /// Pointwise Euclidean magnitude |u(x)|.
    pub fn magnitude(&self) -> Vec<f64> {
        (0..self.data[0].len())
            .map(|i| (self.data[0][i].powi(2) + self.data[1][i].powi(2) + self.data[2][i].powi(2)).sqrt())
            .collect()
    }
}

/// Exact product of two band-limited scalar fields. The combined per-axis
/// band-limit must fit the 2/3-rule cutoff `n/3`, in which case no alias
/// reaches a retained mode; modes above the cutoff are zeroed.
pub fn dealiased_product(a: &ScalarField, b: &ScalarField) -> Result<ScalarField> {
    if a.grid != b.grid {
        return Err(Error::pre("fields live on different grids"));
    }
    let grid = &a.grid;
    let (la, lb) = (a.band_limit(), b.band_limit());
    let need = [0, 1, 2].map(|ax| (la[ax] + lb[ax]) as usize);
    if (0..3).any(|ax| need[ax] as i64 > grid.dealias_cutoff(ax)) {
        let required = need.map(dealias_len_for);
        return Err(Error::BandOverflow { required, have: grid.dims() });
    }
    let dims = grid.dims();
    let pa = fft::synthesize(&a.coeffs, &dims, &dims);
    let pb = fft::synthesize(&b.coeffs, &dims, &dims);
    let prod: Vec<Complex64> = pa.iter().zip(&pb).map(|(x, y)| Complex64::new(x.re * y.re, 0.0)).collect();
    let mut out = fft::analyze(prod, &dims, &dims);
    truncate_dealias(grid, &mut out);
    Ok(ScalarField { grid: grid.clone(), coeffs: out })
}

/// Zeroes modes outside the 2/3-rule cutoff.
pub(crate) fn truncate_dealias(grid: &FourierGrid, v: &mut [Complex64]) {
    let cut = [0, 1, 2].map(|a| grid.dealias_cutoff(a));
    for (idx, c) in v.iter_mut().enumerate() {
        let k = grid.wavevector(idx);
        if (0..3).any(|a| k[a].abs() > cut[a]) {
            *c = ZERO;
        }
    }
}

pub(crate) fn oversampled_dims(grid: &FourierGrid, oversample: usize) -> Result<[usize; 3]> {
    if oversample == 0 {
        return Err(Error::pre("oversample must be >= 1"));
    }
    let dims = grid.dims().map(|n| n * oversample);
    let n: f64 = dims.iter().map(|&d| d as f64).product();
    check_alloc(16.0 * n)?;
    Ok(dims)
}

fn band_limit(grid: &FourierGrid, v: &[Complex64]) -> [i64; 3] {
    let mut b = [0i64; 3];
    for (idx, c) in v.iter().enumerate() {
        if *c != ZERO {
            let k = grid.wavevector(idx);
            for a in 0..3 {
                b[a] = b[a].max(k[a].abs());
            }
        }
    }
    b
}

fn add_real_mode(grid: &FourierGrid, v: &mut [Complex64], k: [i64; 3], c: Complex64) -> Result<()> {
    let i = grid.index_of(k).ok_or_else(|| Error::pre(format!("mode {k:?} not representable on {:?}", grid.dims())))?;
    if k == [0, 0, 0] {
        v[i] += Complex64::new(c.re, 0.0);
        return Ok(());
    }
    let j = grid.index_of([-k[0], -k[1], -k[2]]).expect("negated mode representable");
    v[i] += c;
    v[j] += c.conj();
    Ok(())
}

fn check_coeffs(grid: &FourierGrid, v: &[Complex64], what: &str) -> Result<()> {
    let mut scale: f64 = 0.0;
    for c in v {
        if !(c.re.is_finite() && c.im.is_finite()) {
            return Err(Error::pre(format!("{what}: non-finite amplitude")));
        }
        scale = scale.max(c.norm());
    }
    let tol = HERMITIAN_TOL * scale.max(f64::MIN_POSITIVE);
    for idx in 0..grid.len() {
        if grid.is_nyquist(idx) {
            if v[idx] != ZERO {
                return Err(Error::pre(format!("{what}: Nyquist mode {:?} carries content", grid.wavevector(idx))));
            }
            continue;
        }
        let j = grid.conjugate_index(idx);
        if (v[idx] - v[j].conj()).norm() > tol {
            return Err(Error::pre(format!(
                "{what}: Hermitian symmetry violated at k = {:?}",
                grid.wavevector(idx)
            )));
        }
    }
    Ok(())
}
