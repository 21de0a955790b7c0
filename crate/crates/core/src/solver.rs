//! Integrating-factor time stepping for the full equations, the residual
//! system driven by the heat-flow interaction, and the splitting check.

use std::cell::RefCell;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use crate::datagen::OrthogonalData;
use crate::error::{Error, Result};
use crate::field::SpectralVectorField;
use crate::flows::{advection, vstar, Dealias, Samples, Stress};
use crate::grid::FourierGrid;
use crate::norms::lp_norm;
use crate::stats::neumaier_sum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub t_final: f64,
    pub dt: f64,
    /// Steps between trace samples.
    pub trace_stride: usize,
    /// Residual runs only: drop the self-interaction `P(R·∇R)`.
    #[serde(default)]
    pub linear: bool,
}

impl EvolutionConfig {
    pub fn new(t_final: f64, dt: f64) -> Result<Self> {
        let c = EvolutionConfig { t_final, dt, trace_stride: 10, linear: false };
        c.validate()?;
        Ok(c)
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.trace_stride = stride.max(1);
        self
    }

    pub fn linearized(mut self) -> Self {
        self.linear = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite() && self.t_final >= self.dt && self.t_final.is_finite()) {
            return Err(Error::InvalidParams(format!("need 0 < dt <= T, got dt={} T={}", self.dt, self.t_final)));
        }
        if self.trace_stride == 0 {
            return Err(Error::InvalidParams("trace stride must be >= 1".into()));
        }
        let n = self.t_final / self.dt;
        if (n - n.round()).abs() > 1e-9 * n {
            return Err(Error::InvalidParams(format!("T={} is not a multiple of dt={}", self.t_final, self.dt)));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSample {
    pub t: f64,
    pub l2: f64,
    pub grad_l2: f64,
    pub l3: f64,
    pub divergence: f64,
    /// Largest |energy-balance defect| over the steps since the previous sample.
    pub energy_defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    /// State is the velocity `u`.
    Full,
    /// State is the residual `R`.
    Residual,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryTrace {
    pub kind: TraceKind,
    pub dt: f64,
    pub samples: Vec<TraceSample>,
    /// `dt · max|u₀| · k_max`, advisory only.
    pub cfl: f64,
    /// `∫ |energy-balance defect| dt` over the run.
    pub integrated_defect: f64,
    /// Largest single-step growth of `‖state‖_{L²}`.
    pub max_l2_increase: f64,
}

impl TrajectoryTrace {
    pub fn sup_l3(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.l3))
    }

    pub fn max_divergence(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.divergence))
    }
}

/// Real inner product on the normalized measure.
fn inner(a: &SpectralVectorField, b: &SpectralVectorField) -> f64 {
    neumaier_sum((0..3).flat_map(|c| a.component(c).iter().zip(b.component(c)).map(|(x, y)| (x.conj() * y).re)))
}

fn sup_magnitude_bound(u: &SpectralVectorField) -> f64 {
    (0..3).map(|c| u.component(c).iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

enum Dynamics<'a> {
    Full,
    Residual { data: &'a OrthogonalData, linear: bool, flows: RefCell<Option<(f64, Rc<Samples>)>> },
}

impl Dynamics<'_> {
    fn rhs(&self, t: f64, s: &SpectralVectorField) -> Result<SpectralVectorField> {
        match self {
            Dynamics::Full => advection(s, Dealias::Truncate),
            Dynamics::Residual { data, linear, flows } => {
                let grid = s.grid();
                let v = {
                    let mut slot = flows.borrow_mut();
                    match slot.as_ref() {
                        Some((ft, v)) if *ft == t => v.clone(),
                        _ => {
                            let heated = [0, 1, 2].map(|i| data.components[i].heat(t));
                            let [a, b, c] = heated;
                            let v = Rc::new(Samples::from_planes(grid, [&a?, &b?, &c?], Dealias::Truncate)?);
                            *slot = Some((t, v.clone()));
                            v
                        }
                    }
                };
                // F − Q(v★, R) − P(R·∇R) = P div S, with S the negated sum of
                // the heat flows' cross terms, v★⊗R + R⊗v★ and R⊗R
                let mut stress = Stress::new(grid);
                stress.add_component_pairs(&v, -1.0);
                if s.max_abs() != 0.0 {
                    let r = Samples::of(s, Dealias::Truncate);
                    stress.add_symmetric(&v, &r, -1.0);
                    if !linear {
                        stress.add_symmetric(&r, &r, -0.5);
                    }
                }
                Ok(stress.divergence(Dealias::Truncate).leray_project())
            }
        }
    }
}

/// A running integration with its diagnostics.
struct Integrator<'a> {
    dynamics: Dynamics<'a>,
    state: SpectralVectorField,
    t: f64,
    dt: f64,
    k2: Vec<f64>,
    /// `e^{−dt|k|²}` per mode.
    decay: Vec<f64>,
    /// `(‖s‖², ‖∇s‖²)` of the current state.
    energy: (f64, f64),
    stride: usize,
    steps_done: usize,
    window_defect: f64,
    trace: TrajectoryTrace,
}

impl<'a> Integrator<'a> {
    fn new(dynamics: Dynamics<'a>, state: SpectralVectorField, cfg: &EvolutionConfig, kind: TraceKind) -> Result<Self> {
        cfg.validate()?;
        let g = state.grid();
        let kmax = (0..3).map(|a| g.alias_free_cutoff(a)).max().unwrap_or(0) as f64;
        let cfl = cfg.dt * sup_magnitude_bound(&state) * kmax;
        let k2 = g.k_squared();
        let decay = k2.iter().map(|k| (-cfg.dt * k).exp()).collect();
        let energy = state.energy_and_dissipation(&k2);
        let mut it = Integrator {
            dynamics,
            state,
            t: 0.0,
            dt: cfg.dt,
            k2,
            decay,
            energy,
            stride: cfg.trace_stride,
            steps_done: 0,
            window_defect: 0.0,
            trace: TrajectoryTrace {
                kind,
                dt: cfg.dt,
                samples: Vec::new(),
                cfl,
                integrated_defect: 0.0,
                max_l2_increase: 0.0,
            },
        };
        it.sample()?;
        Ok(it)
    }

    fn sample(&mut self) -> Result<()> {
        let s = &self.state;
        let l3 = if s.max_abs() == 0.0 { 0.0 } else { lp_norm(&s.compacted()?, 3.0, 2)? };
        self.trace.samples.push(TraceSample {
            t: self.t,
            l2: s.l2_norm(),
            grad_l2: s.gradient_l2_norm(),
            l3,
            divergence: s.divergence_residual(),
            energy_defect: self.window_defect,
        });
        self.window_defect = 0.0;
        Ok(())
    }

    /// One integrating-factor Heun step:
    /// `s⁺ = E s + dt/2 (E G(t, s) + G(t+dt, E s + dt E G(t, s)))`, `E = e^{dtΔ}`.
    fn step(&mut self) -> Result<()> {
        let (t, dt) = (self.t, self.dt);
        let t_next = dt * (self.steps_done + 1) as f64;
        let s = &self.state;
        let g0 = self.dynamics.rhs(t, s)?;
        let es = s.multiplied(&self.decay);
        let eg0 = g0.multiplied(&self.decay);
        let pred = es.axpy(dt, &eg0)?;
        let g1 = self.dynamics.rhs(t_next, &pred)?;
        let next = es.axpy(0.5 * dt, &eg0)?.axpy(0.5 * dt, &g1)?;
        let (e0, d0) = self.energy;
        let (e1, d1) = next.energy_and_dissipation(&self.k2);
        // the energy sum is finite exactly when every coefficient is (short of overflow)
        if !e1.is_finite() {
            return Err(Error::BlowUp { time: t_next });
        }
        // trapezoidal energy balance d‖s‖² + 2‖∇s‖² dt = 2⟨G, s⟩ dt, with the
        // stage values standing in for the end-point power
        let power = inner(&g0, s) + inner(&g1, &pred);
        let defect = (e1 - e0) / dt + d0 + d1 - power;
        self.window_defect = self.window_defect.max(defect.abs());
        self.trace.integrated_defect += defect.abs() * dt;
        self.trace.max_l2_increase = self.trace.max_l2_increase.max(e1.sqrt() - e0.sqrt());
        self.energy = (e1, d1);
        self.state = next;
        self.t = t_next;
        self.steps_done += 1;
        if self.steps_done % self.stride == 0 {
            self.sample()?;
        }
        Ok(())
    }

    fn finish(mut self, total: usize) -> Result<(TrajectoryTrace, SpectralVectorField)> {
        if total % self.stride != 0 {
            self.sample()?;
        }
        Ok((self.trace, self.state))
    }
}

fn check_solenoidal(u: &SpectralVectorField) -> Result<()> {
    let r = u.divergence_residual();
    if r > 1e-10 * u.max_abs().max(1e-300) {
        return Err(Error::pre(format!("state is not divergence-free (residual {r:.3e})")));
    }
    Ok(())
}

/// One step of the full equations `u_t = Δu − P(u·∇u)`.
pub fn step_full_ns(u: &SpectralVectorField, dt: f64) -> Result<SpectralVectorField> {
    check_solenoidal(u)?;
    let mut it = Integrator::new(Dynamics::Full, u.clone(), &EvolutionConfig::new(dt, dt)?, TraceKind::Full)?;
    it.step()?;
    Ok(it.state)
}

pub fn solve_full_ns(u0: &SpectralVectorField, cfg: &EvolutionConfig) -> Result<(TrajectoryTrace, SpectralVectorField)> {
    check_solenoidal(u0)?;
    let mut it = Integrator::new(Dynamics::Full, u0.clone(), cfg, TraceKind::Full)?;
    for _ in 0..cfg.steps() {
        it.step()?;
    }
    it.finish(cfg.steps())
}

fn residual_dynamics(data: &OrthogonalData, linear: bool) -> Dynamics<'_> {
    Dynamics::Residual { data, linear, flows: RefCell::new(None) }
}

/// `R_t = ΔR + F − Q(v★, R) − P(R·∇R)`, `R(0) = 0`, with `F` and `v★` taken
/// from the exact heat flows at every stage time.
pub fn solve_residual(
    data: &OrthogonalData,
    grid: &FourierGrid,
    cfg: &EvolutionConfig,
) -> Result<(TrajectoryTrace, SpectralVectorField)> {
    let r0 = SpectralVectorField::zeros(grid);
    let mut it = Integrator::new(residual_dynamics(data, cfg.linear), r0, cfg, TraceKind::Residual)?;
    for _ in 0..cfg.steps() {
        it.step()?;
    }
    it.finish(cfg.steps())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub times: Vec<f64>,
    /// `‖u − v★ − R‖_{L²} / ‖u₀‖_{L²}` at each sample.
    pub defect: Vec<f64>,
    pub sup_defect: f64,
    pub full: TrajectoryTrace,
    pub residual: TrajectoryTrace,
}

/// Runs both solvers in lockstep and measures the splitting `u = Σvⁱ + R`.
pub fn decomposition_check(
    data: &OrthogonalData,
    grid: &FourierGrid,
    cfg: &EvolutionConfig,
) -> Result<DecompositionReport> {
    let u0 = data.total(grid)?;
    let norm0 = u0.l2_norm();
    let mut full = Integrator::new(Dynamics::Full, u0, cfg, TraceKind::Full)?;
    let mut res = Integrator::new(
        residual_dynamics(data, cfg.linear),
        SpectralVectorField::zeros(grid),
        cfg,
        TraceKind::Residual,
    )?;
    let measure = |t: f64, u: &SpectralVectorField, r: &SpectralVectorField| -> Result<f64> {
        let split = vstar(data, t, grid)?.axpy(1.0, r)?;
        Ok(if norm0 == 0.0 { 0.0 } else { u.l2_distance(&split) / norm0 })
    };
    let mut times = vec![0.0];
    let mut defect = vec![measure(0.0, &full.state, &res.state)?];
    let steps = cfg.steps();
    for n in 1..=steps {
        full.step()?;
        res.step()?;
        if n % cfg.trace_stride == 0 || n == steps {
            times.push(full.t);
            defect.push(measure(full.t, &full.state, &res.state)?);
        }
    }
    let sup_defect = defect.iter().fold(0.0, |m: f64, d| m.max(*d));
    Ok(DecompositionReport {
        times,
        defect,
        sup_defect,
        full: full.finish(steps)?.0,
        residual: res.finish(steps)?.0,
    })
}
