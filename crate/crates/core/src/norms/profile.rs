/// Smooth dyadic bump `χ` supported on `1/2 ≤ r ≤ 2`.
///
/// Built as `χ(r) = φ(r) − φ(2r)` from the cutoff `φ = 1` on `[0, 1]`,
/// `φ = 0` on `[2, ∞)`, whose transition is the standard `exp(−1/x)`
/// smooth step. The dyadic sum telescopes, so `Σⱼ χ(r/2ʲ) = 1` for every
/// `r > 0` up to round-off. Besov values computed with the dyadic method
/// depend on this exact profile.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DyadicProfile;

fn mollifier(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        (-1.0 / x).exp()
    }
}

/// Smooth step from 0 (x ≤ 0) to 1 (x ≥ 1).
fn smooth_step(x: f64) -> f64 {
    let a = mollifier(x);
    let b = mollifier(1.0 - x);
    a / (a + b)
}

impl DyadicProfile {
    pub fn standard() -> Self {
        DyadicProfile
    }

    /// Low-pass cutoff φ(r).
    pub fn cutoff(&self, r: f64) -> f64 {
        1.0 - smooth_step(r - 1.0)
    }

    /// χ(r) for r = |ξ| ≥ 0.
    pub fn chi(&self, r: f64) -> f64 {
        (self.cutoff(r) - self.cutoff(2.0 * r)).max(0.0)
    }

    /// Weight of shell `j` at frequency magnitude `r`: χ(r / 2ʲ).
    pub fn shell_weight(&self, j: i32, r: f64) -> f64 {
        self.chi(r / 2f64.powi(j))
    }

    /// Shells that can be nonzero for magnitudes in `[rmin, rmax]`, `rmin > 0`.
    pub fn shells(&self, rmin: f64, rmax: f64) -> std::ops::RangeInclusive<i32> {
        let lo = rmin.log2().floor() as i32 - 1;
        let hi = rmax.log2().ceil() as i32 + 1;
        lo..=hi
    }
}
