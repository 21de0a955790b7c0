use serde::Serialize;

use super::{besov::default_oversample, NormTarget};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BernsteinReport {
    pub lp: f64,
    pub lq: f64,
    /// `kmax^{d(1/p − 1/q)}`
    pub factor: f64,
    /// `‖f‖_q / (factor · ‖f‖_p)`
    pub ratio: f64,
}

/// Measures how far `f` is from saturating the Bernstein inequality
/// `‖f‖_q ≲ kmax^{d(1/p−1/q)} ‖f‖_p` for a field supported in
/// `kmin ≤ |k| ≤ kmax`, with `d` the number of coordinates `f` depends on.
pub fn bernstein_check<F: NormTarget>(f: &F, band: [f64; 2], p: f64, q: f64, effective_dim: u32) -> Result<BernsteinReport> {
    if !(p >= 1.0 && q >= p) {
        return Err(Error::pre(format!("Bernstein check needs 1 <= p <= q, got p={p}, q={q}")));
    }
    if !(effective_dim == 2 || effective_dim == 3) {
        return Err(Error::pre(format!("effective dimension must be 2 or 3, got {effective_dim}")));
    }
    let [kmin, kmax] = band;
    let tol = 1e-12 * kmax;
    if let Some(k) = f.mode_magnitudes().into_iter().find(|&k| k < kmin - tol || k > kmax + tol) {
        return Err(Error::pre(format!("mode with |k| = {k} lies outside the band [{kmin}, {kmax}]")));
    }
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    let factor = kmax.powf(effective_dim as f64 * (inv(p) - inv(q)));
    let lp = f.lp(p, default_oversample(p))?;
    let lq = if q == p { lp } else { f.lp(q, default_oversample(q))? };
    let ratio = if lp == 0.0 { 0.0 } else { lq / (factor * lp) };
    Ok(BernsteinReport { lp, lq, factor, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plane::{hermitian_modes, PlaneField};
    use num_complex::Complex64;

    #[test]
    fn single_mode_closed_form() {
        let f = PlaneField::new([1, 2], hermitian_modes([([3, 4], Complex64::new(0.5, 0.0))])).unwrap();
        let r = bernstein_check(&f, [5.0, 5.0], 2.0, 3.0, 2).unwrap();
        let l3 = (4.0 / (3.0 * std::f64::consts::PI)).cbrt();
        let want = l3 / (5f64.powf(1.0 / 3.0) * 0.5f64.sqrt());
        assert!((r.ratio - want).abs() < 1e-6, "{} vs {want}", r.ratio);
    }

    #[test]
    fn equal_exponents_give_one() {
        let f = PlaneField::new([0, 1], hermitian_modes([([2, 1], Complex64::new(0.3, 0.1)), ([1, 2], Complex64::new(0.2, 0.0))]))
            .unwrap();
        let r = bernstein_check(&f, [2.0, 3.0], 3.0, 3.0, 2).unwrap();
        assert_eq!(r.ratio, 1.0);
    }

    #[test]
    fn support_outside_band_rejected() {
        let f = PlaneField::new([1, 2], hermitian_modes([([3, 4], Complex64::new(0.5, 0.0))])).unwrap();
        assert!(bernstein_check(&f, [1.0, 4.0], 2.0, 3.0, 2).is_err());
    }
}
