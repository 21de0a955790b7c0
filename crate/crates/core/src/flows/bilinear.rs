use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{self, Direction};
use crate::field::SpectralVectorField;
use crate::grid::{dealias_len_for, wavenumber, FourierGrid};
use crate::plane::PlaneField;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// How quadratic terms treat frequencies beyond the grid's capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dealias {
    /// Inputs must have a combined band-limit within `n/3`; the product is
    /// exact on every mode, and overflow is an error naming the needed grid.
    Strict,
    /// Inputs are cut to `(n−1)/3` and so is the output. Retained modes are
    /// exact for the truncated inputs. This is what a time stepper uses.
    Truncate,
}

impl Dealias {
    fn cutoff(self, grid: &FourierGrid) -> [i64; 3] {
        match self {
            Dealias::Strict => [0, 1, 2].map(|ax| grid.dealias_cutoff(ax)),
            Dealias::Truncate => [0, 1, 2].map(|ax| grid.alias_free_cutoff(ax)),
        }
    }
}

fn is_zero(v: &[Complex64]) -> bool {
    v.iter().all(|c| *c == ZERO)
}

fn band_limit(grid: &FourierGrid, comps: &[&[Complex64]]) -> [i64; 3] {
    let mut b = [0i64; 3];
    for v in comps {
        for (idx, c) in v.iter().enumerate() {
            if *c != ZERO {
                let k = grid.wavevector(idx);
                for a in 0..3 {
                    b[a] = b[a].max(k[a].abs());
                }
            }
        }
    }
    b
}

/// Per-axis flags: index `i` survives the cutoff.
fn keep_mask(grid: &FourierGrid, c: [i64; 3]) -> [Vec<bool>; 3] {
    let dims = grid.dims();
    [0, 1, 2].map(|a| (0..dims[a]).map(|i| i != dims[a] / 2 && wavenumber(dims[a], i).abs() <= c[a]).collect())
}

/// Zeroes every mode beyond the cutoff, and the Nyquist entries.
fn cut(grid: &FourierGrid, v: &mut [Complex64], keep: &[Vec<bool>; 3]) {
    let [_, n1, n2] = grid.dims();
    for (r, row) in v.chunks_mut(n2).enumerate() {
        if !(keep[0][r / n1] && keep[1][r % n1]) {
            row.fill(ZERO);
            continue;
        }
        for (x, &k) in row.iter_mut().zip(&keep[2]) {
            if !k {
                *x = ZERO;
            }
        }
    }
}

/// Real samples of the components of a vector field; `None` marks a
/// component that is identically zero.
pub struct Samples {
    comps: [Option<Vec<f64>>; 3],
}

impl Samples {
    /// Samples on the field's own grid. `Truncate` cuts the input to the
    /// alias-free band first; `Strict` leaves it as is.
    pub fn of(f: &SpectralVectorField, mode: Dealias) -> Samples {
        let grid = f.grid();
        let keep = keep_mask(grid, Dealias::Truncate.cutoff(grid));
        let nz: Vec<usize> = (0..3).filter(|&c| !is_zero(f.component(c))).collect();
        let mut comps: [Option<Vec<f64>>; 3] = Default::default();
        let dims = grid.dims();
        // two real components per complex transform
        for pair in nz.chunks(2) {
            let mut buf: Vec<Complex64> = match *pair {
                [a, b] => f.component(a).iter().zip(f.component(b)).map(|(x, y)| x + Complex64::i() * y).collect(),
                [a] => f.component(a).to_vec(),
                _ => unreachable!(),
            };
            if mode == Dealias::Truncate {
                cut(grid, &mut buf, &keep);
                fft::fft_3d_banded(&mut buf, dims, Direction::Inverse, &keep);
            } else {
                fft::zero_nyquist(&mut buf, &dims);
                fft::fft_nd(&mut buf, &dims, Direction::Inverse);
            }
            comps[pair[0]] = Some(buf.iter().map(|z| z.re).collect());
            if let [_, b] = *pair {
                comps[b] = Some(buf.iter().map(|z| z.im).collect());
            }
        }
        Samples { comps }
    }

    /// Samples of `Σ_c p_c e_c` on `grid`, where `planes[c]` depends on two
    /// coordinates: each is sampled on its plane and repeated along the
    /// normal axis, which costs 2D transforms only.
    pub fn from_planes(grid: &FourierGrid, planes: [&PlaneField; 3], mode: Dealias) -> Result<Samples> {
        let dims = grid.dims();
        let c = mode.cutoff(grid);
        let mut comps: [Option<Vec<f64>>; 3] = Default::default();
        for (slot, p) in comps.iter_mut().zip(planes) {
            if p.is_zero() {
                continue;
            }
            let ax = p.axes();
            let kept = match mode {
                Dealias::Truncate => {
                    PlaneField::new(ax, p.modes().iter().copied().filter(|(k, _)| (0..2).all(|q| k[q].abs() <= c[ax[q]])).collect())?
                }
                Dealias::Strict => p.clone(),
            };
            let plane = kept.sample([dims[ax[0]], dims[ax[1]]])?;
            let n = dims[ax[1]];
            let mut out = vec![0.0; grid.len()];
            for (idx, v) in out.iter_mut().enumerate() {
                let i = grid.split(idx);
                *v = plane[i[ax[0]] * n + i[ax[1]]];
            }
            *slot = Some(out);
        }
        Ok(Samples { comps })
    }

    fn get(&self, c: usize) -> Option<&[f64]> {
        self.comps[c].as_deref()
    }
}

/// Upper triangle `(i ≤ j)` of a symmetric tensor field in physical space.
pub struct Stress {
    grid: FourierGrid,
    entries: Vec<((usize, usize), Vec<f64>)>,
}

impl Stress {
    pub fn new(grid: &FourierGrid) -> Stress {
        Stress { grid: grid.clone(), entries: Vec::new() }
    }

    fn entry(&mut self, i: usize, j: usize) -> &mut Vec<f64> {
        let pos = match self.entries.iter().position(|(ij, _)| *ij == (i, j)) {
            Some(p) => p,
            None => {
                self.entries.push(((i, j), vec![0.0; self.grid.len()]));
                self.entries.len() - 1
            }
        };
        &mut self.entries[pos].1
    }

    /// Adds `w (a⊗b + b⊗a)`. Each entry gets `w (a_i b_j + b_i a_j)`, which
    /// is bitwise unchanged when `a` and `b` trade places.
    pub fn add_symmetric(&mut self, a: &Samples, b: &Samples, w: f64) {
        for i in 0..3 {
            for j in i..3 {
                let t1 = a.get(i).zip(b.get(j));
                let t2 = b.get(i).zip(a.get(j));
                if t1.is_none() && t2.is_none() {
                    continue;
                }
                let s = self.entry(i, j);
                let prod = |p: Option<(&[f64], &[f64])>, k: usize| p.map_or(0.0, |(x, y)| x[k] * y[k]);
                for (k, v) in s.iter_mut().enumerate() {
                    *v += w * (prod(t1, k) + prod(t2, k));
                }
            }
        }
    }

    /// Adds `w Σ_{i<j} vⁱ⊗vʲ + vʲ⊗vⁱ` where `vⁱ = v_i e_i`: the cross terms
    /// of a sum of single-component fields, without its diagonal.
    pub fn add_component_pairs(&mut self, v: &Samples, w: f64) {
        for i in 0..3 {
            for j in i + 1..3 {
                if let (Some(x), Some(y)) = (v.get(i), v.get(j)) {
                    let s = self.entry(i, j);
                    for (k, e) in s.iter_mut().enumerate() {
                        *e += w * (x[k] * y[k]);
                    }
                }
            }
        }
    }

    /// `div S` in Fourier space, unprojected: component `i` is `Σ_j ∂_j S_ij`.
    pub fn divergence(self, mode: Dealias) -> SpectralVectorField {
        let grid = &self.grid;
        let dims = grid.dims();
        let [_, n1, n2] = dims;
        let scale = 1.0 / grid.len() as f64;
        let kk = [0, 1, 2].map(|ax| grid.axis_wavenumbers(ax));
        let keep = keep_mask(grid, mode.cutoff(grid));
        let mut out: [Vec<Complex64>; 3] = Default::default();
        for v in out.iter_mut() {
            *v = vec![ZERO; grid.len()];
        }
        for group in self.entries.chunks(2) {
            let mut buf: Vec<Complex64> = match group {
                [(_, a), (_, b)] => a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect(),
                [(_, a)] => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
                _ => unreachable!(),
            };
            fft::fft_3d_banded(&mut buf, dims, Direction::Forward, &keep);
            // unpack F(k) = (H(k) + conj H(−k))/2, G(k) = (H(k) − conj H(−k))/(2i),
            // differentiate and accumulate, on retained modes only
            for r in 0..dims[0] * n1 {
                let (i0, i1) = (r / n1, r % n1);
                if !(keep[0][i0] && keep[1][i1]) {
                    continue;
                }
                let rm = ((dims[0] - i0) % dims[0]) * n1 + (n1 - i1) % n1;
                for i2 in 0..n2 {
                    if !keep[2][i2] {
                        continue;
                    }
                    let p = r * n2 + i2;
                    let h = buf[p] * scale;
                    let hm = buf[rm * n2 + (n2 - i2) % n2].conj() * scale;
                    let k = [kk[0][i0], kk[1][i1], kk[2][i2]];
                    let vals = [(h + hm) * 0.5, (h - hm) * Complex64::new(0.0, -0.5)];
                    for (((i, j), _), sv) in group.iter().zip(vals) {
                        // ∂_j S_ij into component i, and ∂_i S_ji into component j
                        out[*i][p] += Complex64::new(0.0, k[*j]) * sv;
                        if i != j {
                            out[*j][p] += Complex64::new(0.0, k[*i]) * sv;
                        }
                    }
                }
            }
        }
        out.iter_mut().for_each(|v| v[0] = ZERO);
        SpectralVectorField::from_parts_unchecked(grid, out, true)
    }
}

/// `div(a⊗b + b⊗a)`, unprojected: component `i` is `Σ_j ∂_j(a_i b_j + b_i a_j)`.
pub fn symmetric_flux_divergence(a: &SpectralVectorField, b: &SpectralVectorField, mode: Dealias) -> Result<SpectralVectorField> {
    let grid = a.grid();
    if grid != b.grid() {
        return Err(Error::pre("fields live on different grids"));
    }
    if mode == Dealias::Strict {
        let limit = |f: &SpectralVectorField| band_limit(grid, &[f.component(0), f.component(1), f.component(2)]);
        let (la, lb) = (limit(a), limit(b));
        let need = [0, 1, 2].map(|ax| (la[ax] + lb[ax]) as usize);
        if (0..3).any(|ax| need[ax] as i64 > grid.dealias_cutoff(ax)) {
            return Err(Error::BandOverflow { required: need.map(dealias_len_for), have: grid.dims() });
        }
    }
    let sa = Samples::of(a, mode);
    let mut stress = Stress::new(grid);
    if std::ptr::eq(a, b) {
        stress.add_symmetric(&sa, &sa, 1.0);
    } else {
        stress.add_symmetric(&sa, &Samples::of(b, mode), 1.0);
    }
    Ok(stress.divergence(mode))
}

/// `Q(a, b) = P div(a⊗b + b⊗a)` with exact (strict) dealiasing. Both
/// inputs must be divergence-free.
pub fn bilinear_q(a: &SpectralVectorField, b: &SpectralVectorField) -> Result<SpectralVectorField> {
    for (name, f) in [("a", a), ("b", b)] {
        let r = f.divergence_residual();
        if r > 1e-10 * f.max_abs().max(f64::MIN_POSITIVE) {
            return Err(Error::pre(format!("Q input {name} is not divergence-free (residual {r:e})")));
        }
    }
    bilinear_q_with(a, b, Dealias::Strict)
}

/// `Q(a, b)` without the divergence check, under the given dealiasing mode.
pub fn bilinear_q_with(a: &SpectralVectorField, b: &SpectralVectorField, mode: Dealias) -> Result<SpectralVectorField> {
    Ok(symmetric_flux_divergence(a, b, mode)?.leray_project())
}

/// The Navier–Stokes nonlinearity `−P div(u⊗u) = −½ Q(u, u)`.
pub fn advection(u: &SpectralVectorField, mode: Dealias) -> Result<SpectralVectorField> {
    let su = Samples::of(u, mode);
    let mut stress = Stress::new(u.grid());
    stress.add_symmetric(&su, &su, -0.5);
    Ok(stress.divergence(mode).leray_project())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(grid: &FourierGrid, comp: usize, k: [i64; 3], amp: f64) -> SpectralVectorField {
        let mut f = SpectralVectorField::zeros(grid);
        f.add_real_mode(comp, k, Complex64::new(amp / 2.0, 0.0)).unwrap();
        f
    }

    #[test]
    fn hand_computed_pair() {
        // a = cos(3x₂)e₁, b = cos(5x₁)e₂:
        // div(a⊗b+b⊗a) = −3cos(5x₁)sin(3x₂)e₁ − 5cos(3x₂)sin(5x₁)e₂
        let g = FourierGrid::cube(32).unwrap();
        let a = single(&g, 0, [0, 3, 0], 1.0);
        let b = single(&g, 1, [5, 0, 0], 1.0);
        let d = symmetric_flux_divergence(&a, &b, Dealias::Strict).unwrap();
        let mut comps = SpectralVectorField::zeros(&g).into_components();
        for (s1, s2) in [(1i64, 1i64), (1, -1), (-1, 1), (-1, -1)] {
            let idx = g.index_of([5 * s1, 3 * s2, 0]).unwrap();
            // cos(5x₁)sin(3x₂) has coefficient (1/2)(s2/(2i)) = −i s2/4 at (5s1, 3s2)
            comps[0][idx] += Complex64::new(0.0, -(s2 as f64) / 4.0) * -3.0;
            comps[1][idx] += Complex64::new(0.0, -(s1 as f64) / 4.0) * -5.0;
        }
        let want = SpectralVectorField::from_components(&g, comps, true).unwrap();
        assert!(d.max_diff(&want) < 1e-14, "{}", d.max_diff(&want));
        let q = bilinear_q(&a, &b).unwrap();
        assert!(q.divergence_residual() < 1e-14);
        let support: Vec<[i64; 3]> = (0..3).flat_map(|c| q.support(c, 1e-14)).collect();
        assert!(support.iter().all(|k| k[0].abs() == 5 && k[1].abs() == 3 && k[2] == 0));
        assert!(!support.is_empty());
    }

    #[test]
    fn self_interaction_is_twice_advection() {
        use crate::field::dealiased_product;
        let g = FourierGrid::cube(24).unwrap();
        let a = single(&g, 0, [0, 2, 3], 0.7)
            .axpy(1.0, &single(&g, 2, [1, 1, 0], 0.3))
            .unwrap()
            .axpy(1.0, &single(&g, 1, [2, 0, -1], 0.4))
            .unwrap()
            .leray_project();
        // (a·∇a)_i = Σ_j a_j ∂_j a_i, from scalar products
        let mut comps = SpectralVectorField::zeros(&g).into_components();
        for i in 0..3 {
            for j in 0..3 {
                let p = dealiased_product(&a.scalar(j), &a.derivative(j).scalar(i)).unwrap();
                comps[i].iter_mut().zip(p.coeffs()).for_each(|(x, y)| *x += y);
            }
        }
        let adv = SpectralVectorField::from_components(&g, comps, false).unwrap().leray_project();
        let q = bilinear_q(&a, &a).unwrap();
        assert!(q.max_diff(&adv.scaled(2.0)) < 1e-12, "{}", q.max_diff(&adv.scaled(2.0)));
    }

    #[test]
    fn symmetric_in_arguments() {
        let g = FourierGrid::cube(24).unwrap();
        let a = single(&g, 0, [0, 2, 3], 0.7).axpy(1.0, &single(&g, 2, [1, 1, 0], 0.3)).unwrap();
        let b = single(&g, 1, [4, 0, 1], 1.1);
        let ab = bilinear_q(&a, &b).unwrap();
        let ba = bilinear_q(&b, &a).unwrap();
        assert_eq!(ab.max_diff(&ba), 0.0);
    }

    #[test]
    fn overflow_names_grid() {
        let g = FourierGrid::cube(16).unwrap();
        let a = single(&g, 0, [0, 6, 0], 1.0);
        let b = single(&g, 1, [6, 0, 0], 1.0);
        match bilinear_q(&a, &b) {
            Err(Error::BandOverflow { required, .. }) => assert_eq!(required, [18, 18, 4]),
            other => panic!("expected overflow, got {:?}", other.map(|f| f.max_abs())),
        }
    }

    #[test]
    fn zero_input_gives_zero() {
        let g = FourierGrid::cube(16).unwrap();
        let a = single(&g, 0, [0, 2, 1], 1.0);
        let z = SpectralVectorField::zeros(&g);
        assert_eq!(bilinear_q(&a, &z).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn single_component_flow_has_no_self_interaction() {
        let g = FourierGrid::cube(16).unwrap();
        let u = single(&g, 0, [0, 2, 1], 1.0).axpy(1.0, &single(&g, 0, [0, 1, -3], 0.5)).unwrap();
        assert!(advection(&u, Dealias::Truncate).unwrap().max_abs() < 1e-15);
    }
}
