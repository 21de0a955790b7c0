//! `.onsf` field snapshots.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "ONSF" | version u8 = 1 | dims 3 × u32 | components u8 | mean_zero u8
//! | per component, axis-major (k₁ slowest): (re f64, im f64) ...
//! | FNV-1a u64 over everything before it
//! ```

use std::hash::Hasher;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralVectorField;
use crate::grid::{check_alloc, FourierGrid};

const MAGIC: &[u8; 4] = b"ONSF";
const VERSION: u8 = 1;
const HEADER: usize = 4 + 1 + 12 + 1 + 1;

/// Relative tolerance of the Hermitian check on load.
const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub grid: FourierGrid,
    pub mean_zero: bool,
    pub components: Vec<Vec<Complex64>>,
}

fn checksum(bytes: &[u8]) -> u64 {
    let mut h = fnv::FnvHasher::default();
    h.write(bytes);
    h.finish()
}

impl FieldSnapshot {
    pub fn from_field(f: &SpectralVectorField) -> Self {
        FieldSnapshot {
            grid: f.grid().clone(),
            mean_zero: f.is_mean_zero(),
            components: (0..3).map(|c| f.component(c).to_vec()).collect(),
        }
    }

    pub fn to_field(&self) -> Result<SpectralVectorField> {
        if self.components.len() != 3 {
            return Err(Error::Format(format!("expected 3 components, found {}", self.components.len())));
        }
        let comps = [self.components[0].clone(), self.components[1].clone(), self.components[2].clone()];
        SpectralVectorField::from_components(&self.grid, comps, self.mean_zero)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.grid.len();
        let mut out = Vec::with_capacity(HEADER + self.components.len() * n * 16 + 8);
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        for d in self.grid.dims() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        out.push(self.components.len() as u8);
        out.push(self.mean_zero as u8);
        for comp in &self.components {
            for v in comp {
                out.extend_from_slice(&v.re.to_le_bytes());
                out.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        let sum = checksum(&out);
        out.extend_from_slice(&sum.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER + 8 {
            return Err(Error::Format("file too short for a snapshot header".into()));
        }
        if &bytes[..4] != MAGIC {
            return Err(Error::Format("bad magic, not an ONSF snapshot".into()));
        }
        if bytes[4] != VERSION {
            return Err(Error::Format(format!("unsupported snapshot version {}", bytes[4])));
        }
        let (payload, tail) = bytes.split_at(bytes.len() - 8);
        let stored = u64::from_le_bytes(tail.try_into().expect("8 bytes"));
        if stored != checksum(payload) {
            return Err(Error::Format("checksum mismatch".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
        let dims = [u32_at(5), u32_at(9), u32_at(13)];
        let grid = FourierGrid::new(dims)?;
        let ncomp = bytes[17] as usize;
        let mean_zero = match bytes[18] {
            0 => false,
            1 => true,
            b => return Err(Error::Format(format!("bad mean-zero flag {b}"))),
        };
        let n = grid.len();
        let need = HEADER + ncomp * n * 16;
        if payload.len() != need {
            return Err(Error::Format(format!("payload is {} bytes, header implies {need}", payload.len())));
        }
        check_alloc((ncomp * n * 16) as f64)?;
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
        let components: Vec<Vec<Complex64>> = (0..ncomp)
            .map(|c| {
                let base = HEADER + c * n * 16;
                (0..n).map(|i| Complex64::new(f64_at(base + 16 * i), f64_at(base + 16 * i + 8))).collect()
            })
            .collect();
        let snap = FieldSnapshot { grid, mean_zero, components };
        snap.check_hermitian()?;
        Ok(snap)
    }

    /// Real fields have `c(−k) = conj c(k)` and nothing on Nyquist indices.
    fn check_hermitian(&self) -> Result<()> {
        for (c, comp) in self.components.iter().enumerate() {
            let scale = comp.iter().fold(0.0f64, |m, v| m.max(v.norm()));
            for (i, v) in comp.iter().enumerate() {
                if self.grid.is_nyquist(i) {
                    if *v != Complex64::default() {
                        return Err(Error::Format(format!("component {c} has a nonzero Nyquist coefficient")));
                    }
                    continue;
                }
                let w = comp[self.grid.conjugate_index(i)];
                if (v - w.conj()).norm() > HERMITIAN_TOL * scale {
                    return Err(Error::Format(format!(
                        "component {c} is not Hermitian at k = {:?}",
                        self.grid.wavevector(i)
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}

pub fn save_field(path: &Path, f: &SpectralVectorField) -> Result<()> {
    std::fs::write(path, FieldSnapshot::from_field(f).to_bytes())?;
    Ok(())
}

pub fn load_field(path: &Path) -> Result<SpectralVectorField> {
    FieldSnapshot::from_bytes(&std::fs::read(path)?)?.to_field()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SpectralVectorField {
        let g = FourierGrid::new([8, 6, 4]).unwrap();
        let mut f = SpectralVectorField::zeros(&g);
        f.add_real_mode(0, [0, 1, 1], Complex64::new(0.25, -0.5)).unwrap();
        f.add_real_mode(1, [3, 0, -1], Complex64::new(1.0, 2.0)).unwrap();
        f.add_real_mode(2, [1, 2, 0], Complex64::new(-0.125, 0.0)).unwrap();
        f.leray_project()
    }

    #[test]
    fn header_layout() {
        let b = FieldSnapshot::from_field(&sample()).to_bytes();
        assert_eq!(&b[..5], b"ONSF\x01");
        assert_eq!(&b[5..17], &[8, 0, 0, 0, 6, 0, 0, 0, 4, 0, 0, 0]);
        assert_eq!(b[17], 3);
        assert_eq!(b[18], 1);
        assert_eq!(b.len(), 19 + 3 * 192 * 16 + 8);
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let b = FieldSnapshot::from_field(&sample()).to_bytes();
        let f = FieldSnapshot::from_bytes(&b).unwrap().to_field().unwrap();
        assert_eq!(f, sample());
        assert_eq!(FieldSnapshot::from_field(&f).to_bytes(), b);
    }

    #[test]
    fn corruption_is_detected() {
        let mut b = FieldSnapshot::from_field(&sample()).to_bytes();
        b[40] ^= 1;
        assert!(matches!(FieldSnapshot::from_bytes(&b), Err(Error::Format(m)) if m.contains("checksum")));
        let mut c = FieldSnapshot::from_field(&sample()).to_bytes();
        c[0] = b'X';
        assert!(FieldSnapshot::from_bytes(&c).is_err());
    }

    #[test]
    fn non_hermitian_payload_is_rejected() {
        let mut s = FieldSnapshot::from_field(&sample());
        let i = s.grid.index_of([0, 1, 1]).unwrap();
        s.components[0][i] += Complex64::new(0.0, 1e-3);
        let err = FieldSnapshot::from_bytes(&s.to_bytes()).unwrap_err();
        assert!(err.to_string().contains("Hermitian"), "{err}");
    }
}
