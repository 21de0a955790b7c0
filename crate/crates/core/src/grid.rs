//! Discretization of the torus [0, 2π)³ with integer wavevectors.
//!
//! Storage is axis-major with k₁ slowest: `idx = (i1 * n2 + i2) * n3 + i3`.
//! Storage index `i` on an axis of length `n` carries wavenumber `i` for
//! `i < n/2` and `i - n` otherwise. The Nyquist index `n/2` is never
//! representable content and is kept at zero by every operation.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const MEM_CAP_ENV: &str = "ORTHOFLOW_MEM_CAP_MB";
const DEFAULT_MEM_CAP_MB: u64 = 4096;

/// Memory cap in megabytes, read once from `ORTHOFLOW_MEM_CAP_MB`.
pub fn mem_cap_mb() -> u64 {
    static CAP: OnceLock<u64> = OnceLock::new();
    *CAP.get_or_init(|| {
        std::env::var(MEM_CAP_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .unwrap_or(DEFAULT_MEM_CAP_MB)
    })
}

/// Fails when `bytes` would exceed the configured cap.
pub fn check_alloc(bytes: f64) -> Result<()> {
    let cap = mem_cap_mb();
    let mb = bytes / (1024.0 * 1024.0);
    if mb > cap as f64 {
        return Err(Error::MemoryCap { requested_mb: mb, cap_mb: cap });
    }
    Ok(())
}

/// Wavenumber carried by storage index `i` on an axis of length `n`.
#[inline]
pub fn wavenumber(n: usize, i: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Storage index of wavenumber `k` on an axis of length `n`, if representable.
#[inline]
pub fn storage_index(n: usize, k: i64) -> Option<usize> {
    let half = (n / 2) as i64;
    if k.abs() >= half {
        return None;
    }
    Some(if k >= 0 { k as usize } else { (k + n as i64) as usize })
}

/// Smallest even axis length whose representable range covers `|k| <= max_mode`.
pub fn axis_len_for(max_mode: usize) -> usize {
    (2 * max_mode + 2).max(4)
}

/// Smallest even axis length whose 2/3-rule cutoff `n/3` covers `max_mode`.
pub fn dealias_len_for(max_mode: usize) -> usize {
    let n = (3 * max_mode).max(4);
    let n = if n % 2 == 0 { n } else { n + 1 };
    // n/3 (floor) must reach max_mode
    if n / 3 >= max_mode {
        n
    } else {
        n + 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FourierGrid {
    dims: [usize; 3],
}

impl FourierGrid {
    pub fn new(dims: [usize; 3]) -> Result<Self> {
        for (axis, &n) in dims.iter().enumerate() {
            if n % 2 != 0 {
                return Err(Error::InvalidGrid { axis, reason: "odd".into() });
            }
            if n < 4 {
                return Err(Error::InvalidGrid { axis, reason: format!("too small ({n} < 4)") });
            }
        }
        let grid = FourierGrid { dims };
        // three complex components
        check_alloc(3.0 * 16.0 * grid.len() as f64)?;
        Ok(grid)
    }

    pub fn cube(n: usize) -> Result<Self> {
        Self::new([n, n, n])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest representable |k| along `axis` (Nyquist excluded).
    pub fn max_mode(&self, axis: usize) -> i64 {
        self.dims[axis] as i64 / 2 - 1
    }

    /// 2/3-rule cutoff along `axis`: modes with |k| > n/3 are dropped from products.
    pub fn dealias_cutoff(&self, axis: usize) -> i64 {
        (self.dims[axis] / 3) as i64
    }

    /// Largest `c` with `3c < n`: products of fields truncated at `c` alias
    /// only onto modes beyond `c`, so truncating the product again is exact.
    pub fn alias_free_cutoff(&self, axis: usize) -> i64 {
        ((self.dims[axis] - 1) / 3) as i64
    }

    #[inline]
    pub fn index(&self, i: [usize; 3]) -> usize {
        (i[0] * self.dims[1] + i[1]) * self.dims[2] + i[2]
    }

    #[inline]
    pub fn split(&self, idx: usize) -> [usize; 3] {
        let i3 = idx % self.dims[2];
        let r = idx / self.dims[2];
        [r / self.dims[1], r % self.dims[1], i3]
    }

    #[inline]
    pub fn wavevector(&self, idx: usize) -> [i64; 3] {
        let i = self.split(idx);
        [
            wavenumber(self.dims[0], i[0]),
            wavenumber(self.dims[1], i[1]),
            wavenumber(self.dims[2], i[2]),
        ]
    }

    pub fn index_of(&self, k: [i64; 3]) -> Option<usize> {
        Some(self.index([
            storage_index(self.dims[0], k[0])?,
            storage_index(self.dims[1], k[1])?,
            storage_index(self.dims[2], k[2])?,
        ]))
    }

    /// True when any axis of `idx` sits on the Nyquist index.
    #[inline]
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let i = self.split(idx);
        (0..3).any(|a| i[a] == self.dims[a] / 2)
    }

    /// Index of the wavevector `-k` for the storage index `idx`.
    #[inline]
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let i = self.split(idx);
        let neg = |a: usize| (self.dims[a] - i[a]) % self.dims[a];
        self.index([neg(0), neg(1), neg(2)])
    }

    /// Per-axis wavenumbers in storage order, as floats. Nyquist entries are zero.
    pub fn axis_wavenumbers(&self, axis: usize) -> Vec<f64> {
        let n = self.dims[axis];
        (0..n)
            .map(|i| if i == n / 2 { 0.0 } else { wavenumber(n, i) as f64 })
            .collect()
    }

    /// |k|² for every storage index (Nyquist entries set to zero).
    pub fn k_squared(&self) -> Vec<f64> {
        let [k1, k2, k3] = [0, 1, 2].map(|a| self.axis_wavenumbers(a));
        let mut out = Vec::with_capacity(self.len());
        for a in &k1 {
            for b in &k2 {
                for c in &k3 {
                    out.push(a * a + b * b + c * c);
                }
            }
        }
        out
    }

    /// True when `k` survives the 2/3 rule on every axis.
    #[inline]
    pub fn within_dealias(&self, k: [i64; 3]) -> bool {
        (0..3).all(|a| k[a].abs() <= self.dealias_cutoff(a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_cubed_modes() {
        let g = FourierGrid::cube(8).unwrap();
        assert_eq!(g.max_mode(0), 3);
        let mut seen = std::collections::HashSet::new();
        for idx in 0..g.len() {
            if g.is_nyquist(idx) {
                continue;
            }
            let k = g.wavevector(idx);
            assert!(k.iter().all(|c| (-3..=3).contains(c)));
            assert_eq!(g.index_of(k), Some(idx));
            seen.insert(k);
        }
        assert_eq!(seen.len(), 7 * 7 * 7);
    }

    #[test]
    fn rejects_odd_and_small_axes() {
        let err = FourierGrid::new([7, 8, 8]).unwrap_err().to_string();
        assert_eq!(err, "axis 0 odd");
        let err = FourierGrid::new([8, 2, 8]).unwrap_err().to_string();
        assert!(err.starts_with("axis 1 too small"), "{err}");
    }

    #[test]
    fn conjugate_index_negates() {
        let g = FourierGrid::new([8, 6, 10]).unwrap();
        for idx in 0..g.len() {
            if g.is_nyquist(idx) {
                continue;
            }
            let k = g.wavevector(idx);
            let c = g.wavevector(g.conjugate_index(idx));
            assert_eq!(c, [-k[0], -k[1], -k[2]]);
        }
    }

    #[test]
    fn dealias_lengths() {
        assert_eq!(dealias_len_for(20), 60);
        assert_eq!(FourierGrid::cube(64).unwrap().dealias_cutoff(0), 21);
        assert!(dealias_len_for(21) / 3 >= 21);
        assert_eq!(axis_len_for(3), 8);
    }
}
