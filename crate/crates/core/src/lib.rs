//! Spectral laboratory for frequency-orthogonal initial data of the 3D
//! Navier–Stokes equations on the torus 𝕋³ = [0, 2π)³.

pub mod datagen;
pub mod error;
pub mod fft;
pub mod field;
pub mod flows;
pub mod grid;
pub mod harness;
pub mod norms;
pub mod plane;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
pub use field::{dealiased_product, PhysicalField, ScalarField, SpectralVectorField};
pub use grid::FourierGrid;
pub use plane::PlaneField;
