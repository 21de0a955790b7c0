use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::{ConstructionParams, OrthogonalData};
use crate::error::{Error, Result};
use crate::flows::QuadraturePolicy;
use crate::grid::{check_alloc, dealias_len_for, FourierGrid};
use crate::norms::BesovSpec;
use crate::solver::EvolutionConfig;

/// Either explicit dims or `"auto"`: per axis, the smallest even size that
/// keeps every quadratic product of the data alias-free.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub enum GridPolicy {
    #[default]
    Auto,
    Dims([usize; 3]),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum GridRepr {
    Word(String),
    Dims([usize; 3]),
}

impl TryFrom<GridRepr> for GridPolicy {
    type Error = String;

    fn try_from(r: GridRepr) -> std::result::Result<Self, String> {
        match r {
            GridRepr::Word(w) if w == "auto" => Ok(GridPolicy::Auto),
            GridRepr::Word(w) => Err(format!("grid must be \"auto\" or [d0, d1, d2], got \"{w}\"")),
            GridRepr::Dims(d) => Ok(GridPolicy::Dims(d)),
        }
    }
}

impl From<GridPolicy> for GridRepr {
    fn from(g: GridPolicy) -> Self {
        match g {
            GridPolicy::Auto => GridRepr::Word("auto".into()),
            GridPolicy::Dims(d) => GridRepr::Dims(d),
        }
    }
}

impl GridPolicy {
    pub fn resolve(&self, data: &OrthogonalData) -> Result<FourierGrid> {
        let grid = match *self {
            GridPolicy::Dims(d) => FourierGrid::new(d)?,
            GridPolicy::Auto => auto_grid(data)?,
        };
        // a vector field plus a few work arrays
        check_alloc(grid.len() as f64 * 16.0 * 3.0 * 4.0)?;
        Ok(grid)
    }
}

/// `u ⊗ u` reaches twice the band limit on every axis.
pub fn auto_grid(data: &OrthogonalData) -> Result<FourierGrid> {
    FourierGrid::new(data.band_limit().map(|b| dealias_len_for(2 * b as usize)))
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
}

impl OutputPaths {
    pub fn iter(&self) -> impl Iterator<Item = &Path> {
        [&self.snapshot, &self.csv, &self.json].into_iter().flatten().map(|p| p.as_path())
    }
}

/// Everything one experiment needs, as a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: ConstructionParams,
    #[serde(default)]
    pub grid: GridPolicy,
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub quadrature: QuadraturePolicy,
    #[serde(default)]
    pub norms: Vec<BesovSpec>,
    #[serde(default)]
    pub outputs: OutputPaths,
    /// 0 lets the pool pick.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(params: ConstructionParams, evolution: EvolutionConfig) -> Self {
        ExperimentConfig {
            params,
            grid: GridPolicy::Auto,
            evolution,
            quadrature: QuadraturePolicy::default(),
            norms: Vec::new(),
            outputs: OutputPaths::default(),
            workers: 0,
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.params.validate()?;
        c.evolution.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Checks that every output path can be written and the grid fits in
    /// the memory cap.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.evolution.validate()?;
        for p in self.outputs.iter() {
            check_writable(p)?;
        }
        self.grid.resolve(&OrthogonalData::build(&self.params)?)?;
        Ok(())
    }
}

fn check_writable(path: &Path) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let meta = std::fs::metadata(dir)
        .map_err(|e| Error::InvalidParams(format!("output directory {} is unusable: {e}", dir.display())))?;
    if !meta.is_dir() || meta.permissions().readonly() {
        return Err(Error::InvalidParams(format!("output directory {} is not writable", dir.display())));
    }
    if path.is_dir() {
        return Err(Error::InvalidParams(format!("output path {} is a directory", path.display())));
    }
    Ok(())
}
