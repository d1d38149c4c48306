//! Time-dependent Schrödinger propagation `i dpsi/dt = H(t/T) psi` from the
//! uniform superposition (hbar = 1).
//!
//! Two integrators share the midpoint convention: every step of length `h`
//! freezes the Hamiltonian at `s = (t + h/2) / T`.
//!
//! - Split-step: half-step problem phase, full-step driver phase applied in
//!   the Walsh basis (two Walsh–Hadamard transforms), half-step problem
//!   phase. Exactly unitary up to rounding; adjacent half-steps are fused.
//! - RK4: classical fourth-order Runge–Kutta on the matrix-free `H`. Kept as
//!   an independent cross-check; its norm drift is a useful error meter.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::fwht::fwht;
use crate::hamiltonian::{DriverParams, Hamiltonian, LevelDiagonal, Schedule, StateVector};
use crate::partition::{CostSpectrum, Problem, ResidueTable};
use crate::{spectral, Error, Result};

/// Default base time step.
pub const DEFAULT_DT: f64 = 1e-2;

/// `dt * energy_scale` may not exceed this.
pub const STABILITY_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SplitStep,
    Rk4,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub dt: f64,
    /// Renormalize after every step. Off by default so norm drift stays an
    /// honest error estimate.
    pub renormalize: bool,
    /// Times `t` at which to snapshot the sorted probability profile.
    pub record_profile_at: Vec<f64>,
    /// Times `t` at which to record `|<Psi_0(t/T)|psi(t)>|^2`; needs a dense
    /// eigensolve per sample.
    pub record_overlap_at: Vec<f64>,
}

impl IntegratorConfig {
    pub fn new(method: Method, dt: f64) -> Self {
        IntegratorConfig {
            method,
            dt,
            renormalize: false,
            record_profile_at: Vec::new(),
            record_overlap_at: Vec::new(),
        }
    }

    /// Split-step with [`DEFAULT_DT`], reduced when needed to satisfy the
    /// stability guard for `ham`.
    pub fn guarded(method: Method, ham: &Hamiltonian<'_>) -> Self {
        Self::new(method, DEFAULT_DT.min(max_stable_dt(ham)))
    }
}

/// Largest time step allowed by the stability guard.
pub fn max_stable_dt(ham: &Hamiltonian<'_>) -> f64 {
    STABILITY_LIMIT / ham.energy_scale().max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSnapshot {
    pub t: f64,
    pub profile: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapSample {
    pub t: f64,
    pub s: f64,
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionResult {
    /// Total duration `T`.
    pub duration: f64,
    pub method: Method,
    pub steps: usize,
    /// Step actually used, `T / steps <= dt`.
    pub step: f64,
    /// Probability of the cost-0 level at `t = T`.
    pub p0: f64,
    /// `|psi_z(T)|^2` in residue-sorted order.
    pub profile: Vec<f64>,
    /// `| ||psi(T)|| - 1 |`.
    pub norm_drift: f64,
    pub adiabatic_overlap: Vec<OverlapSample>,
    pub snapshots: Vec<ProfileSnapshot>,
    #[serde(skip)]
    pub final_state: StateVector,
}

/// `sum_{z in ground set} |psi_z|^2`.
pub fn ground_probability(psi: &StateVector, costs: &CostSpectrum) -> f64 {
    costs.ground_set().iter().map(|&z| psi.amplitudes()[z as usize].norm_sqr()).sum()
}

/// `|psi_z|^2` reordered by increasing `|residue|`; entry 0 is the smallest
/// residue.
pub fn probability_profile(psi: &StateVector, table: &ResidueTable) -> Vec<f64> {
    table.sorted_order().iter().map(|&z| psi.amplitudes()[z as usize].norm_sqr()).collect()
}

/// `|<ground|psi>|^2`.
pub fn adiabatic_overlap(psi: &StateVector, ground: &StateVector) -> Result<f64> {
    Ok(ground.inner(psi)?.norm_sqr())
}

/// Reusable propagation engine for one problem and driver. Construction
/// precomputes the diagonal level tables; each [`Propagator::run`] is
/// independent.
#[derive(Debug, Clone)]
pub struct Propagator<'a> {
    problem: &'a Problem,
    ham: Hamiltonian<'a>,
    driver_levels: LevelDiagonal,
    problem_levels: LevelDiagonal,
}

impl<'a> Propagator<'a> {
    pub fn new(problem: &'a Problem, params: &'a DriverParams, schedule: Schedule) -> Result<Self> {
        let ham = Hamiltonian::new(params, problem.costs(), schedule)?;
        Ok(Propagator {
            problem,
            ham,
            driver_levels: LevelDiagonal::driver(params),
            problem_levels: LevelDiagonal::problem(problem.costs(), schedule.energy_shift()),
        })
    }

    pub fn hamiltonian(&self) -> &Hamiltonian<'a> {
        &self.ham
    }

    pub fn problem(&self) -> &Problem {
        self.problem
    }

    /// Default step for this Hamiltonian: [`DEFAULT_DT`] capped by the guard.
    pub fn default_config(&self, method: Method) -> IntegratorConfig {
        IntegratorConfig::guarded(method, &self.ham)
    }

    pub fn run(&self, duration: f64, cfg: &IntegratorConfig) -> Result<EvolutionResult> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::invalid(format!("duration must be positive, got {duration}")));
        }
        if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {}", cfg.dt)));
        }
        let scale = self.ham.energy_scale();
        if cfg.dt * scale > STABILITY_LIMIT * (1.0 + 1e-12) {
            return Err(Error::StabilityGuard { dt: cfg.dt, max_energy: scale });
        }

        let steps = libm::ceil(duration / cfg.dt).max(1.0) as usize;
        let h = duration / steps as f64;
        let mut events = Events::new(duration, h, steps, cfg);
        let mut psi = StateVector::symmetric(self.ham.n());
        match cfg.method {
            Method::SplitStep => self.split_step(&mut psi, steps, h, cfg.renormalize, &mut events)?,
            Method::Rk4 => self.rk4(&mut psi, steps, h, cfg.renormalize, &mut events)?,
        }

        let norm = psi.norm();
        if !norm.is_finite() {
            return Err(Error::Numerical(format!("state norm is {norm} at t = T")));
        }
        Ok(EvolutionResult {
            duration,
            method: cfg.method,
            steps,
            step: h,
            p0: ground_probability(&psi, self.problem.costs()),
            profile: probability_profile(&psi, self.problem.table()),
            norm_drift: (norm - 1.0).abs(),
            adiabatic_overlap: events.overlaps,
            snapshots: events.snapshots,
            final_state: psi,
        })
    }

    fn split_step(
        &self,
        psi: &mut StateVector,
        steps: usize,
        h: f64,
        renormalize: bool,
        events: &mut Events,
    ) -> Result<()> {
        let sched = self.ham.schedule();
        let inv_dim = 1.0 / psi.dim() as f64;
        let mut table = Vec::new();
        // Problem-phase coefficient owed from the previous half-step.
        let mut pending = 0.0;
        events.observe(0, psi, self)?;
        for k in 0..steps {
            let s = (k as f64 + 0.5) / steps as f64;
            let half = 0.5 * h * sched.beta(s);
            let amps = psi.amplitudes_mut();
            self.problem_levels.apply_phase(pending + half, 1.0, amps, &mut table);
            fwht(amps);
            self.driver_levels.apply_phase(h * sched.alpha(s), inv_dim, amps, &mut table);
            fwht(amps);
            pending = half;

            if renormalize || events.due(k + 1) || k + 1 == steps {
                self.problem_levels.apply_phase(pending, 1.0, psi.amplitudes_mut(), &mut table);
                pending = 0.0;
                if renormalize {
                    psi.normalize();
                }
                events.observe(k + 1, psi, self)?;
            }
            check_finite(psi, k)?;
        }
        Ok(())
    }

    fn rk4(
        &self,
        psi: &mut StateVector,
        steps: usize,
        h: f64,
        renormalize: bool,
        events: &mut Events,
    ) -> Result<()> {
        let dim = psi.dim();
        let zero = Complex64::new(0.0, 0.0);
        let minus_i = Complex64::new(0.0, -1.0);
        let mut k = vec![zero; dim];
        let mut stage = vec![zero; dim];
        let mut acc = vec![zero; dim];
        events.observe(0, psi, self)?;
        for step in 0..steps {
            let s = (step as f64 + 0.5) / steps as f64;
            let y = psi.amplitudes_mut();
            acc.copy_from_slice(y);
            // k1 = -i H y
            self.ham.apply_into(s, y, &mut k)?;
            for ((a, st), (kv, yv)) in acc.iter_mut().zip(stage.iter_mut()).zip(k.iter_mut().zip(y.iter())) {
                *kv *= minus_i;
                *a += *kv * (h / 6.0);
                *st = *yv + *kv * (0.5 * h);
            }
            // k2, k3
            for (weight, next) in [(h / 3.0, 0.5 * h), (h / 3.0, h)] {
                self.ham.apply_into(s, &stage, &mut k)?;
                for ((a, st), (kv, yv)) in acc.iter_mut().zip(stage.iter_mut()).zip(k.iter_mut().zip(y.iter())) {
                    *kv *= minus_i;
                    *a += *kv * weight;
                    *st = *yv + *kv * next;
                }
            }
            // k4
            self.ham.apply_into(s, &stage, &mut k)?;
            for ((yv, a), kv) in y.iter_mut().zip(&acc).zip(&k) {
                *yv = *a + *kv * minus_i * (h / 6.0);
            }
            if renormalize {
                psi.normalize();
            }
            if events.due(step + 1) {
                events.observe(step + 1, psi, self)?;
            }
            check_finite(psi, step)?;
        }
        Ok(())
    }
}

fn check_finite(psi: &StateVector, step: usize) -> Result<()> {
    // Probe one amplitude each step and the whole vector now and then; any
    // NaN spreads through the transforms within a step anyway.
    let probe = psi.amplitudes()[0];
    let bad = !(probe.re.is_finite() && probe.im.is_finite())
        || (step % 256 == 255 && !psi.norm_sqr().is_finite());
    if bad {
        return Err(Error::Numerical(format!("non-finite amplitude after step {}", step + 1)));
    }
    Ok(())
}

/// Pending profile snapshots and overlap samples, as step indices.
struct Events {
    duration: f64,
    h: f64,
    profile_steps: Vec<usize>,
    overlap_steps: Vec<usize>,
    snapshots: Vec<ProfileSnapshot>,
    overlaps: Vec<OverlapSample>,
}

impl Events {
    fn new(duration: f64, h: f64, steps: usize, cfg: &IntegratorConfig) -> Self {
        // First step boundary at or after each requested time.
        let to_steps = |ts: &[f64]| {
            let mut v: Vec<usize> = ts
                .iter()
                .filter(|t| t.is_finite())
                .map(|&t| (libm::ceil(t / h - 1e-9).max(0.0) as usize).min(steps))
                .collect();
            v.sort_unstable();
            v
        };
        Events {
            duration,
            h,
            profile_steps: to_steps(&cfg.record_profile_at),
            overlap_steps: to_steps(&cfg.record_overlap_at),
            snapshots: Vec::new(),
            overlaps: Vec::new(),
        }
    }

    fn due(&self, step: usize) -> bool {
        self.profile_steps.contains(&step) || self.overlap_steps.contains(&step)
    }

    fn observe(&mut self, step: usize, psi: &StateVector, prop: &Propagator<'_>) -> Result<()> {
        let t = (step as f64 * self.h).min(self.duration);
        for _ in self.profile_steps.iter().filter(|&&k| k == step) {
            self.snapshots.push(ProfileSnapshot { t, profile: probability_profile(psi, prop.problem.table()) });
        }
        let count = self.overlap_steps.iter().filter(|&&k| k == step).count();
        if count > 0 {
            let s = t / self.duration;
            let ground = spectral::ground_state(&prop.ham, s)?;
            let overlap = adiabatic_overlap(psi, &ground)?;
            for _ in 0..count {
                self.overlaps.push(OverlapSample { t, s, overlap });
            }
        }
        Ok(())
    }
}

/// Propagates the uniform superposition over `[0, duration]`.
pub fn propagate(
    problem: &Problem,
    params: &DriverParams,
    schedule: &Schedule,
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<EvolutionResult> {
    Propagator::new(problem, params, *schedule)?.run(duration, cfg)
}
