//! Self-checks runnable from the command line. Every random draw comes from
//! the one seed recorded in the report.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::datagen::{ConstructionParams, L2Budget, OrthogonalData};
use crate::error::{Error, Result};
use crate::field::SpectralVectorField;
use crate::flows::{bilinear_q, forcing_f, forcing_grid, heat_flows, Dealias};
use crate::grid::FourierGrid;
use crate::norms::{besov_norm, lp_of_samples, BesovSpec, DyadicProfile, TimeGrid};
use crate::plane::{hermitian_modes, PlaneField};
use crate::solver::{solve_full_ns, EvolutionConfig};

use super::config::ExperimentConfig;
use super::snapshot::FieldSnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Invariants,
    Oracles,
    All,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "invariants" => Ok(Suite::Invariants),
            "oracles" => Ok(Suite::Oracles),
            "all" => Ok(Suite::All),
            _ => Err(Error::InvalidParams(format!("unknown suite {s:?}; expected invariants, oracles or all"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Random real, mean-zero field with Gaussian coefficients on the shell
/// `1 ≤ |k|_∞ ≤ kmax`, weighted by `|k|^{−decay}`.
pub fn random_field(grid: &FourierGrid, kmax: i64, decay: f64, rng: &mut impl Rng) -> Result<SpectralVectorField> {
    let mut f = SpectralVectorField::zeros(grid);
    let lim = (0..3).map(|a| grid.max_mode(a)).min().unwrap_or(0).min(kmax);
    for k0 in 0..=lim {
        for k1 in -lim..=lim {
            for k2 in -lim..=lim {
                let k = [k0, k1, k2];
                // one representative of each ±k pair
                if k0 == 0 && (k1 < 0 || (k1 == 0 && k2 <= 0)) {
                    continue;
                }
                let r = ((k0 * k0 + k1 * k1 + k2 * k2) as f64).sqrt();
                let w = r.powf(-decay);
                for c in 0..3 {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    f.add_real_mode(c, k, Complex64::new(re, im) * w)?;
                }
            }
        }
    }
    Ok(f)
}

/// The frozen corpus: `count` solenoidal fields on 16³ with varied band and
/// spectral slope, all drawn from `seed`.
pub fn besov_corpus(seed: u64, count: usize) -> Result<Vec<SpectralVectorField>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = FourierGrid::cube(16)?;
    (0..count)
        .map(|_| {
            let kmax = rng.gen_range(1..=5);
            let decay = rng.gen_range(0.0..3.0);
            Ok(random_field(&g, kmax, decay, &mut rng)?.leray_project())
        })
        .collect()
}

/// Dyadic over heat `B⁻¹_{∞,∞}` for each corpus field.
pub fn besov_equivalence_ratios(corpus: &[SpectralVectorField]) -> Result<Vec<f64>> {
    let d = BesovSpec::dyadic(-1.0, f64::INFINITY, f64::INFINITY)?;
    let h = BesovSpec::heat(-1.0, f64::INFINITY, f64::INFINITY)?;
    corpus.iter().map(|f| Ok(besov_norm(f, &d, None)?.value / besov_norm(f, &h, None)?.value)).collect()
}

struct Runner {
    suite: &'static str,
    checks: Vec<Check>,
}

impl Runner {
    fn at_most(&mut self, name: &'static str, measured: f64, tolerance: f64) {
        let passed = measured <= tolerance;
        self.checks.push(Check { suite: self.suite, name, passed, measured, tolerance });
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }
}

fn invariants(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = Runner { suite: "invariants", checks: Vec::new() };
    let g = FourierGrid::new([16, 12, 8])?;
    let u = random_field(&g, 4, 1.0, &mut rng)?;
    let scale = u.max_abs();

    let p = u.leray_project();
    r.at_most("leray idempotence", p.leray_project().max_diff(&p) / scale, 1e-12);
    r.at_most("divergence annihilation", p.divergence_residual() / scale, 1e-10);

    let (s, t) = (rng.gen_range(0.0..0.2), rng.gen_range(0.0..0.2));
    let lhs = u.heat(s)?.heat(t)?;
    r.at_most("heat semigroup", lhs.max_diff(&u.heat(s + t)?) / scale, 1e-12);

    let prof = DyadicProfile::standard();
    let worst = (0..200)
        .map(|_| {
            let x: f64 = 10f64.powf(rng.gen_range(-3.0..4.0));
            let sum: f64 = prof.shells(x, x).map(|j| prof.shell_weight(j, x)).sum();
            (sum - 1.0).abs()
        })
        .fold(0.0, f64::max);
    r.at_most("partition of unity", worst, 1e-12);

    let phys = u.evaluate_physical(1)?;
    let quad = lp_of_samples(&phys.magnitude(), 2.0);
    r.at_most("parseval", rel(quad, u.l2_norm()), 1e-10);

    let gq = FourierGrid::cube(12)?;
    let a = random_field(&gq, 2, 0.5, &mut rng)?.leray_project();
    let b = random_field(&gq, 2, 0.5, &mut rng)?.leray_project();
    let sym = bilinear_q(&a, &b)?.max_diff(&bilinear_q(&b, &a)?);
    r.at_most("bilinear symmetry", sym, 0.0);

    let snap = FieldSnapshot::from_field(&p).to_bytes();
    let again = FieldSnapshot::from_field(&FieldSnapshot::from_bytes(&snap)?.to_field()?).to_bytes();
    r.at_most("snapshot round trip", if again == snap { 0.0 } else { 1.0 }, 0.0);

    let cfg = ExperimentConfig::new(ConstructionParams::relaxed(4, 0.5)?, EvolutionConfig::new(0.1, 1e-3)?);
    let once = cfg.to_json()?;
    let twice = ExperimentConfig::from_json(&once)?.to_json()?;
    r.at_most("config round trip", if once == twice { 0.0 } else { 1.0 }, 0.0);

    Ok(r.checks)
}

fn oracles(seed: u64) -> Result<Vec<Check>> {
    let mut r = Runner { suite: "oracles", checks: Vec::new() };

    // cos(x₀ + x₁): sup_t t^{1/2} e^{−2t} = e^{−1/2}/2, ∫ e^{−4t} dt = 1/4
    let pl = PlaneField::new([0, 1], hermitian_modes([([1, 1], Complex64::new(0.5, 0.0))]))?;
    let g2 = TimeGrid::for_support(2.0, 2.0, 32)?;
    let sup = besov_norm(&pl, &BesovSpec::heat(-1.0, f64::INFINITY, f64::INFINITY)?, Some(&g2))?.value;
    r.at_most("single-mode B^-1_inf,inf", rel(sup, 0.5 * (-0.5f64).exp()), 1e-6);
    let g6 = TimeGrid::geometric(1e-6, 50.0, 32, None)?;
    let l2t = besov_norm(&pl, &BesovSpec::heat(-1.0, f64::INFINITY, 2.0)?, Some(&g6))?.value;
    r.at_most("single-mode B^-1_inf,2", rel(l2t, 0.5), 1e-6);

    // one planar component under full Navier–Stokes is a heat flow
    let data = OrthogonalData::build(&ConstructionParams::relaxed(3, 0.5)?.with_budget(L2Budget::Hypothesis))?;
    let g = FourierGrid::cube(24)?;
    let u0 = data.components[0].to_vector(0, &g)?;
    let (_, u) = solve_full_ns(&u0, &EvolutionConfig::new(0.02, 1e-3)?)?;
    r.at_most("single component is a heat flow", u.l2_distance(&u0.heat(0.02)?) / u0.l2_norm(), 1e-10);

    // cos 3x₁ ⊥ cos 5x₀: F(t) = e^{−34t} F(0)
    let pair = OrthogonalData::from_components(
        data.params,
        [
            PlaneField::new([1, 2], hermitian_modes([([3, 0], Complex64::new(0.5, 0.0))]))?,
            PlaneField::new([0, 2], hermitian_modes([([5, 0], Complex64::new(0.5, 0.0))]))?,
            PlaneField::zero([0, 1]),
        ],
    );
    let gp = forcing_grid(&pair)?;
    let v = heat_flows(&pair, 0.0, &gp)?;
    let f0 = bilinear_q(&v[0], &v[1])?;
    let f = forcing_f(&pair, 0.05, &gp, Dealias::Strict)?;
    r.at_most("pair forcing decay", f.max_diff(&f0.scaled(-(-34.0f64 * 0.05).exp())) / f0.max_abs(), 1e-13);

    // dyadic and heat characterizations agree up to a bounded factor
    let ratios = besov_equivalence_ratios(&besov_corpus(seed, 20)?)?;
    let worst = ratios.iter().map(|q| q.max(1.0 / q)).fold(0.0, f64::max);
    r.at_most("besov equivalence bracket", worst, 10.0);

    Ok(r.checks)
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    if matches!(suite, Suite::Invariants | Suite::All) {
        checks.extend(invariants(seed)?);
    }
    if matches!(suite, Suite::Oracles | Suite::All) {
        checks.extend(oracles(seed)?);
    }
    Ok(VerifyReport { seed, checks })
}
