use crate::datagen::OrthogonalData;
use crate::error::{Error, Result};
use crate::field::SpectralVectorField;
use crate::grid::{dealias_len_for, FourierGrid};

use super::bilinear::{symmetric_flux_divergence, Dealias};

/// Smallest grid on which every pairwise product of the heat flows is
/// alias-free under the 2/3 rule, so `F` is exact.
pub fn forcing_grid(data: &OrthogonalData) -> Result<FourierGrid> {
    let bl: Vec<[i64; 3]> = data
        .components
        .iter()
        .map(|f| {
            let mut b = [0i64; 3];
            if !f.is_zero() {
                let p = f.band_limit();
                b[f.axes()[0]] = p[0];
                b[f.axes()[1]] = p[1];
            }
            b
        })
        .collect();
    let mut need = [0usize; 3];
    for i in 0..3 {
        for j in i + 1..3 {
            for ax in 0..3 {
                need[ax] = need[ax].max((bl[i][ax] + bl[j][ax]) as usize);
            }
        }
    }
    FourierGrid::new(need.map(dealias_len_for))
}

/// Heat flows `vⁱ(t) = e^{tΔ}u₀ⁱ` embedded on `grid`.
pub fn heat_flows(data: &OrthogonalData, t: f64, grid: &FourierGrid) -> Result<[SpectralVectorField; 3]> {
    Ok([
        data.components[0].heat(t)?.to_vector(0, grid)?,
        data.components[1].heat(t)?.to_vector(1, grid)?,
        data.components[2].heat(t)?.to_vector(2, grid)?,
    ])
}

/// `v★(t) = Σ vⁱ(t)` on `grid`.
pub fn vstar(data: &OrthogonalData, t: f64, grid: &FourierGrid) -> Result<SpectralVectorField> {
    let [a, b, c] = heat_flows(data, t, grid)?;
    a.axpy(1.0, &b)?.axpy(1.0, &c)
}

/// `F = −Σ_{i<j} Q(vⁱ, vʲ)` from already heated flows.
pub fn forcing_from_flows(v: &[SpectralVectorField; 3], mode: Dealias) -> Result<SpectralVectorField> {
    let mut acc = SpectralVectorField::zeros(v[0].grid());
    for i in 0..3 {
        for j in i + 1..3 {
            if v[i].max_abs() == 0.0 || v[j].max_abs() == 0.0 {
                continue;
            }
            acc = acc.axpy(1.0, &symmetric_flux_divergence(&v[i], &v[j], mode)?)?;
        }
    }
    // the projection is linear, so it is applied once to the sum
    Ok(acc.leray_project().scaled(-1.0))
}

/// `F(t)` on `grid`. `Strict` fails with the adequate grid size when the
/// pairwise products do not fit; `Truncate` keeps the modes the grid resolves.
pub fn forcing_f(data: &OrthogonalData, t: f64, grid: &FourierGrid, mode: Dealias) -> Result<SpectralVectorField> {
    if mode == Dealias::Strict {
        let need = forcing_grid(data)?.dims();
        let have = grid.dims();
        if (0..3).any(|a| have[a] < need[a]) {
            return Err(Error::BandOverflow { required: need, have });
        }
    }
    forcing_from_flows(&heat_flows(data, t, grid)?, mode)
}
