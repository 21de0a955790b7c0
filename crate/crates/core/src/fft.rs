//! Multi-dimensional complex FFTs over row-major buffers.
//!
//! Transforms are unnormalized; callers divide by the point count on the
//! forward leg so that coefficients are means against `e^{-ik·x}`.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match dir {
            Direction::Forward => p.plan_fft_forward(n),
            Direction::Inverse => p.plan_fft_inverse(n),
        }
    })
}

/// In-place unnormalized FFT of a row-major array with shape `dims`.
pub fn fft_nd(data: &mut [Complex64], dims: &[usize], dir: Direction) {
    let total: usize = dims.iter().product();
    assert_eq!(data.len(), total, "buffer does not match dims");
    for axis in 0..dims.len() {
        transform_axis(data, dims, axis, dir);
    }
}

fn transform_axis(data: &mut [Complex64], dims: &[usize], axis: usize, dir: Direction) {
    let n = dims[axis];
    if n == 1 {
        return;
    }
    let inner: usize = dims[axis + 1..].iter().product();
    let fft = plan(n, dir);
    if inner == 1 {
        // contiguous lines
        let chunk = n * (4096 / n).max(1);
        data.par_chunks_mut(chunk).for_each(|lines| {
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(lines, &mut scratch);
        });
        return;
    }
    data.par_chunks_mut(n * inner).for_each(|blk| strided_lines(blk, n, inner, &*fft));
}

/// Transforms the `inner` interleaved lines of a block of `n × inner` values.
fn strided_lines(blk: &mut [Complex64], n: usize, inner: usize, fft: &dyn Fft<f64>) {
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    // gather lines in batches of `batch` columns
    let batch = inner.min((8192 / n).max(1));
    let mut buf = vec![Complex64::default(); n * batch];
    let mut r0 = 0;
    while r0 < inner {
        let nb = batch.min(inner - r0);
        let buf = &mut buf[..n * nb];
        for j in 0..n {
            let row = &blk[j * inner + r0..j * inner + r0 + nb];
            for (b, v) in row.iter().enumerate() {
                buf[b * n + j] = *v;
            }
        }
        fft.process_with_scratch(buf, &mut scratch);
        for j in 0..n {
            let row = &mut blk[j * inner + r0..j * inner + r0 + nb];
            for (b, v) in row.iter_mut().enumerate() {
                *v = buf[b * n + j];
            }
        }
        r0 += nb;
    }
}

/// 3D transform for band-limited data. `keep[a][i]` marks the storage
/// indices of axis `a` inside the band. An inverse transform assumes the
/// input vanishes outside the band; a forward transform only produces the
/// entries inside it and leaves the rest unspecified. Lines that cannot
/// affect the result are skipped.
pub fn fft_3d_banded(data: &mut [Complex64], dims: [usize; 3], dir: Direction, keep: &[Vec<bool>; 3]) {
    assert_eq!(data.len(), dims.iter().product::<usize>(), "buffer does not match dims");
    let [_, n1, n2] = dims;
    let order = match dir {
        Direction::Inverse => [2, 1, 0],
        Direction::Forward => [0, 1, 2],
    };
    for axis in order {
        if dims[axis] == 1 {
            continue;
        }
        let fft = plan(dims[axis], dir);
        match axis {
            0 => strided_lines(data, dims[0], n1 * n2, &*fft),
            1 => data
                .par_chunks_mut(n1 * n2)
                .enumerate()
                .filter(|(i0, _)| keep[0][*i0])
                .for_each(|(_, blk)| strided_lines(blk, n1, n2, &*fft)),
            _ => data
                .par_chunks_mut(n2)
                .enumerate()
                .filter(|(r, _)| keep[0][r / n1] && keep[1][r % n1])
                .for_each_init(
                    || vec![Complex64::default(); fft.get_inplace_scratch_len()],
                    |scratch, (_, line)| fft.process_with_scratch(line, scratch),
                ),
        }
    }
}

/// Copies every mode representable on `src_dims` into a zeroed buffer of
/// shape `dst_dims`, matching wavevectors (zero-padding or truncation).
pub fn resample_modes(src: &[Complex64], src_dims: &[usize], dst_dims: &[usize]) -> Vec<Complex64> {
    use crate::grid::{storage_index, wavenumber};
    let d = src_dims.len();
    assert_eq!(d, dst_dims.len());
    let total: usize = dst_dims.iter().product();
    let mut out = vec![Complex64::default(); total];
    // per-axis map from source index to destination index (None if dropped)
    let maps: Vec<Vec<Option<usize>>> = (0..d)
        .map(|a| {
            (0..src_dims[a])
                .map(|i| {
                    if i == src_dims[a] / 2 {
                        None
                    } else {
                        storage_index(dst_dims[a], wavenumber(src_dims[a], i))
                    }
                })
                .collect()
        })
        .collect();
    let mut idx = vec![0usize; d];
    for v in src.iter() {
        let mut dst = 0usize;
        let mut ok = true;
        for a in 0..d {
            match maps[a][idx[a]] {
                Some(j) => dst = dst * dst_dims[a] + j,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            out[dst] = *v;
        }
        // advance multi-index
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < src_dims[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    out
}

/// Samples `Σ c(k) e^{ik·x}` on a uniform grid of shape `phys_dims`.
pub fn synthesize(coeffs: &[Complex64], spec_dims: &[usize], phys_dims: &[usize]) -> Vec<Complex64> {
    let mut buf = if spec_dims == phys_dims {
        let mut b = coeffs.to_vec();
        zero_nyquist(&mut b, spec_dims);
        b
    } else {
        resample_modes(coeffs, spec_dims, phys_dims)
    };
    fft_nd(&mut buf, phys_dims, Direction::Inverse);
    buf
}

/// Mean-normalized coefficients of samples on `phys_dims`, restricted to `spec_dims`.
pub fn analyze(samples: Vec<Complex64>, phys_dims: &[usize], spec_dims: &[usize]) -> Vec<Complex64> {
    let mut buf = samples;
    fft_nd(&mut buf, phys_dims, Direction::Forward);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    let mut out = if spec_dims == phys_dims { buf } else { resample_modes(&buf, phys_dims, spec_dims) };
    zero_nyquist(&mut out, spec_dims);
    out
}

/// Zeroes every entry sitting on a Nyquist index of any axis.
pub fn zero_nyquist(buf: &mut [Complex64], dims: &[usize]) {
    let d = dims.len();
    let mut idx = vec![0usize; d];
    for v in buf.iter_mut() {
        if (0..d).any(|a| idx[a] == dims[a] / 2) {
            *v = Complex64::default();
        }
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < dims[a] {
                break;
            }
            idx[a] = 0;
        }
    }
}

/// Splits `ifft(F + iG)` for Hermitian `F`, `G` into the two real fields.
pub fn unpack_pair(samples: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    samples.iter().map(|z| (z.re, z.im)).unzip()
}

/// Recovers the spectra of two real fields from `fft(f + i g)` (already
/// mean-normalized), using `F(k) = (H(k) + conj H(-k))/2`.
pub fn split_pair_spectrum(h: &[Complex64], dims: &[usize]) -> (Vec<Complex64>, Vec<Complex64>) {
    let d = dims.len();
    let mut f = vec![Complex64::default(); h.len()];
    let mut g = vec![Complex64::default(); h.len()];
    let mut idx = vec![0usize; d];
    for p in 0..h.len() {
        let mut q = 0usize;
        for a in 0..d {
            q = q * dims[a] + (dims[a] - idx[a]) % dims[a];
        }
        let a = h[p];
        let b = h[q].conj();
        f[p] = (a + b) * 0.5;
        g[p] = (a - b) * Complex64::new(0.0, -0.5);
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < dims[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    (f, g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_3d() {
        let dims = [6, 8, 10];
        let n: usize = dims.iter().product();
        let orig: Vec<Complex64> = (0..n).map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let mut buf = orig.clone();
        fft_nd(&mut buf, &dims, Direction::Forward);
        fft_nd(&mut buf, &dims, Direction::Inverse);
        for (a, b) in orig.iter().zip(&buf) {
            assert!((a - b / n as f64).norm() < 1e-12);
        }
    }

    #[test]
    fn banded_matches_full_inside_the_band() {
        let dims = [12, 10, 8];
        let keep = [0, 1, 2].map(|a| (0..dims[a]).map(|i| crate::grid::wavenumber(dims[a], i).abs() <= 2).collect::<Vec<_>>());
        let inside = |p: usize| keep[0][p / 80] && keep[1][(p / 8) % 10] && keep[2][p % 8];
        let n = 960;
        let spec: Vec<Complex64> = (0..n)
            .map(|p| if inside(p) { Complex64::new((p as f64).sin(), (p as f64 * 0.3).cos()) } else { Complex64::default() })
            .collect();
        let (mut full, mut banded) = (spec.clone(), spec);
        fft_nd(&mut full, &dims, Direction::Inverse);
        fft_3d_banded(&mut banded, dims, Direction::Inverse, &keep);
        assert!(full.iter().zip(&banded).all(|(a, b)| (a - b).norm() < 1e-12));
        fft_nd(&mut full, &dims, Direction::Forward);
        fft_3d_banded(&mut banded, dims, Direction::Forward, &keep);
        assert!((0..n).filter(|&p| inside(p)).all(|p| (full[p] - banded[p]).norm() < 1e-9));
    }

    #[test]
    fn single_mode_synthesis_2d() {
        // c(k=(1,-2)) = 1 -> e^{i(x - 2y)}
        let dims = [8, 8];
        let mut c = vec![Complex64::default(); 64];
        c[8 + 6] = Complex64::new(1.0, 0.0);
        let s = synthesize(&c, &dims, &[16, 16]);
        let h = std::f64::consts::TAU / 16.0;
        for i in 0..16 {
            for j in 0..16 {
                let phase = i as f64 * h - 2.0 * j as f64 * h;
                let want = Complex64::new(phase.cos(), phase.sin());
                assert!((s[i * 16 + j] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pair_packing_recovers_both() {
        let dims = [8, 8];
        let f: Vec<f64> = (0..64).map(|i| (i as f64 * 0.7).sin()).collect();
        let g: Vec<f64> = (0..64).map(|i| (i as f64 * 0.2).cos()).collect();
        let packed: Vec<Complex64> = f.iter().zip(&g).map(|(a, b)| Complex64::new(*a, *b)).collect();
        let mut h = packed;
        fft_nd(&mut h, &dims, Direction::Forward);
        h.iter_mut().for_each(|v| *v /= 64.0);
        let (fs, gs) = split_pair_spectrum(&h, &dims);
        let mut fr = fs;
        fft_nd(&mut fr, &dims, Direction::Inverse);
        let mut gr = gs;
        fft_nd(&mut gr, &dims, Direction::Inverse);
        for i in 0..64 {
            assert!((fr[i].re - f[i]).abs() < 1e-12 && fr[i].im.abs() < 1e-12);
            assert!((gr[i].re - g[i]).abs() < 1e-12 && gr[i].im.abs() < 1e-12);
        }
    }
}
