//! The complexity metric `C(T) = (T + 1) d_0 / p_0(T)`, its minimization over
//! the run time `T`, and sweeps of the minimal complexity over problem sizes.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::evolution::{IntegratorConfig, Method, Propagator};
use crate::hamiltonian::{DriverParams, Schedule};
use crate::math;
use crate::partition::{Problem, SppInstance};
use crate::{Error, Result};

/// Expected total run time to reach success with probability close to one by
/// repeating a run of length `duration`. Zero success probability gives
/// `f64::INFINITY`.
pub fn complexity(duration: f64, p0: f64, d0: u64) -> f64 {
    if p0 <= 0.0 || !p0.is_finite() {
        return f64::INFINITY;
    }
    (duration + 1.0) * d0 as f64 / p0
}

/// Search range and budget for [`minimize_complexity`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TSearch {
    pub t_min: f64,
    pub t_max: f64,
    /// Points of the coarse geometric grid.
    pub grid_points: usize,
    /// Golden-section refinement stops once the bracket is narrower than
    /// this fraction of its centre.
    pub rel_tol: f64,
    /// Maximum number of propagations.
    pub budget: usize,
}

impl TSearch {
    /// `[0.25, 20 * 2^(0.4 n)]`, 16 grid points, 5 % tolerance.
    pub fn for_size(n: usize) -> Self {
        TSearch {
            t_min: 0.25,
            t_max: 20.0 * libm::exp2(0.4 * n as f64),
            grid_points: 16,
            rel_tol: 0.05,
            budget: 64,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_max > self.t_min && self.t_max.is_finite()) {
            return Err(Error::invalid(format!("need 0 < t_min < t_max, got [{}, {}]", self.t_min, self.t_max)));
        }
        if self.grid_points < 3 {
            return Err(Error::invalid("the coarse grid needs at least 3 points"));
        }
        if self.budget < 8 || self.budget < self.grid_points {
            return Err(Error::invalid(format!(
                "budget {} must be at least 8 and cover the {} grid points",
                self.budget, self.grid_points
            )));
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(Error::invalid("rel_tol must be positive"));
        }
        Ok(())
    }

    /// Geometric grid over `[t_min, t_max]`.
    pub fn grid(&self) -> Vec<f64> {
        let (lo, hi) = (math::log(self.t_min), math::log(self.t_max));
        let last = (self.grid_points - 1) as f64;
        (0..self.grid_points).map(|i| math::exp(lo + (hi - lo) * i as f64 / last)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t: f64,
    pub p0: f64,
    pub complexity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplexityCurve {
    /// Every evaluated point, sorted by `t`.
    pub points: Vec<CurvePoint>,
    pub d0: u64,
    pub t_star: f64,
    pub c_star: f64,
    pub p0_star: f64,
    /// The best coarse-grid point sat on the edge of the search range.
    pub unbracketed: bool,
}

impl ComplexityCurve {
    fn from_points(mut points: Vec<CurvePoint>, d0: u64, unbracketed: bool) -> Self {
        points.sort_by(|a, b| a.t.total_cmp(&b.t));
        let best = points
            .iter()
            .copied()
            .min_by(|a, b| a.complexity.total_cmp(&b.complexity))
            .unwrap_or(CurvePoint { t: f64::NAN, p0: 0.0, complexity: f64::INFINITY });
        ComplexityCurve { points, d0, t_star: best.t, c_star: best.complexity, p0_star: best.p0, unbracketed }
    }
}

/// Evaluates `C(T)` at each of `ts` with `p0_of(T)`.
pub fn complexity_curve<F>(ts: &[f64], d0: u64, mut p0_of: F) -> Result<ComplexityCurve>
where
    F: FnMut(f64) -> Result<f64>,
{
    let points = ts
        .iter()
        .map(|&t| {
            let p0 = p0_of(t)?;
            Ok(CurvePoint { t, p0, complexity: complexity(t, p0, d0) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComplexityCurve::from_points(points, d0, false))
}

/// Coarse geometric grid followed by golden-section refinement in `ln T`
/// around the best grid point. `C(T)` is assumed unimodal near the optimum;
/// the full set of evaluations is returned so violations stay visible.
pub fn minimize_with<F>(search: &TSearch, d0: u64, mut p0_of: F) -> Result<ComplexityCurve>
where
    F: FnMut(f64) -> Result<f64>,
{
    minimize_batched(search, d0, |ts| ts.iter().map(|&t| p0_of(t)).collect())
}

/// As [`minimize_with`], but the coarse grid is handed to `p0_batch` in one
/// call so the caller may evaluate it in parallel. `p0_batch` must return
/// one probability per input time, in order.
pub fn minimize_batched<F>(search: &TSearch, d0: u64, mut p0_batch: F) -> Result<ComplexityCurve>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    search.validate()?;
    let grid = search.grid();
    let p0s = p0_batch(&grid)?;
    if p0s.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), found: p0s.len() });
    }
    let mut points: Vec<CurvePoint> = grid
        .iter()
        .zip(&p0s)
        .map(|(&t, &p0)| CurvePoint { t, p0, complexity: complexity(t, p0, d0) })
        .collect();
    let mut eval = |t: f64, points: &mut Vec<CurvePoint>| -> Result<f64> {
        let p0 = match p0_batch(&[t])?.as_slice() {
            [p] => *p,
            other => return Err(Error::DimensionMismatch { expected: 1, found: other.len() }),
        };
        let c = complexity(t, p0, d0);
        points.push(CurvePoint { t, p0, complexity: c });
        Ok(c)
    };

    let best = (0..grid.len())
        .min_by(|&a, &b| points[a].complexity.total_cmp(&points[b].complexity))
        .unwrap_or(0);
    let unbracketed = best == 0 || best == grid.len() - 1;

    let mut a = math::log(grid[best.saturating_sub(1)]);
    let mut b = math::log(grid[(best + 1).min(grid.len() - 1)]);
    let phi = 0.5 * (libm::sqrt(5.0) - 1.0);
    let width = |a: f64, b: f64| {
        let (ta, tb) = (math::exp(a), math::exp(b));
        (tb - ta) / (0.5 * (ta + tb))
    };
    if width(a, b) > search.rel_tol && points.len() + 2 <= search.budget {
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let mut f1 = eval(math::exp(x1), &mut points)?;
        let mut f2 = eval(math::exp(x2), &mut points)?;
        while width(a, b) > search.rel_tol && points.len() < search.budget {
            if f1 <= f2 {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = eval(math::exp(x1), &mut points)?;
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = eval(math::exp(x2), &mut points)?;
            }
        }
    }
    Ok(ComplexityCurve::from_points(points, d0, unbracketed))
}

/// Minimizes `C(T)` for one problem by full propagations.
pub fn minimize_complexity(
    problem: &Problem,
    params: &DriverParams,
    schedule: &Schedule,
    cfg: &IntegratorConfig,
    search: &TSearch,
) -> Result<ComplexityCurve> {
    let prop = Propagator::new(problem, params, *schedule)?;
    minimize_with(search, problem.costs().d0(), |t| Ok(prop.run(t, cfg)?.p0))
}

/// Parameters of a sweep over problem sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    pub instances_per_n: usize,
    pub b: u32,
    pub k_multiplier: f64,
    pub base_seed: u64,
    pub method: Method,
    /// Time step; `None` uses the guarded default for each instance.
    pub dt: Option<f64>,
    /// Search range; `None` uses [`TSearch::for_size`].
    pub search: Option<TSearch>,
    /// Inclusive range of `n` used for the exponential fit.
    pub fit_window: (usize, usize),
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(Error::invalid("the n range is empty"));
        }
        if self.instances_per_n < 5 {
            return Err(Error::invalid(format!(
                "at least 5 instances per n are needed for stable medians, got {}",
                self.instances_per_n
            )));
        }
        Ok(())
    }
}

/// Seed of instance `index` at size `n`, derived from `base` by SplitMix64.
pub fn instance_seed(base: u64, n: usize, index: usize) -> u64 {
    let mut x = base ^ ((n as u64) << 32) ^ index as u64;
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceOutcome {
    pub n: usize,
    pub index: usize,
    pub seed: u64,
    pub d0: u64,
    pub t_star: f64,
    pub p0_star: f64,
    pub c_star: f64,
    pub unbracketed: bool,
    pub error: Option<String>,
}

/// Generates instance `index` at size `n` and minimizes its complexity.
/// Failures are recorded in the outcome rather than returned.
pub fn run_instance(cfg: &SweepConfig, n: usize, index: usize, params: &DriverParams) -> InstanceOutcome {
    let seed = instance_seed(cfg.base_seed, n, index);
    let mut outcome = InstanceOutcome {
        n,
        index,
        seed,
        d0: 0,
        t_star: f64::NAN,
        p0_star: 0.0,
        c_star: f64::INFINITY,
        unbracketed: false,
        error: None,
    };
    let attempt = || -> Result<ComplexityCurve> {
        let problem = Problem::new(SppInstance::generate(n, cfg.b, seed)?, cfg.k_multiplier)?;
        let schedule = Schedule::linear();
        let prop = Propagator::new(&problem, params, schedule)?;
        let mut integrator = prop.default_config(cfg.method);
        if let Some(dt) = cfg.dt {
            integrator.dt = dt;
        }
        let search = cfg.search.unwrap_or_else(|| TSearch::for_size(n));
        minimize_with(&search, problem.costs().d0(), |t| Ok(prop.run(t, &integrator)?.p0))
    };
    match attempt() {
        Ok(curve) => {
            outcome.d0 = curve.d0;
            outcome.t_star = curve.t_star;
            outcome.p0_star = curve.p0_star;
            outcome.c_star = curve.c_star;
            outcome.unbracketed = curve.unbracketed;
            if !curve.c_star.is_finite() {
                outcome.error = Some("ground level never populated (d0 = 0?)".to_string());
            }
        }
        Err(e) => outcome.error = Some(e.to_string()),
    }
    outcome
}

/// Lower median: for even counts the smaller of the two middle values.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(v[(v.len() - 1) / 2])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeSummary {
    pub n: usize,
    pub c_stars: Vec<f64>,
    pub median_c_star: f64,
    pub mean_d0: f64,
    pub median_p0_star: f64,
    pub failures: usize,
    pub unbracketed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    /// Slope of `ln(median C*)` against `n`.
    pub slope: f64,
    pub intercept: f64,
    /// `(n, observed - fitted)` over the fit window.
    pub residuals: Vec<(usize, f64)>,
    pub window: (usize, usize),
}

impl ScalingFit {
    /// The slope converted to a base-2 exponent, `C* ~ 2^(x n)`.
    pub fn base2_exponent(&self) -> f64 {
        self.slope / core::f64::consts::LN_2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub per_n: Vec<SizeSummary>,
    pub fit: Option<ScalingFit>,
    pub outcomes: Vec<InstanceOutcome>,
}

/// Groups outcomes by `n` (in `cfg.n_values` order), takes medians over the
/// successful ones and fits `ln(median C*)` against `n` over the window.
pub fn assemble_report(cfg: &SweepConfig, mut outcomes: Vec<InstanceOutcome>) -> ScalingReport {
    outcomes.sort_by_key(|o| (o.n, o.index));
    let per_n: Vec<SizeSummary> = cfg
        .n_values
        .iter()
        .map(|&n| {
            let group: Vec<&InstanceOutcome> = outcomes.iter().filter(|o| o.n == n).collect();
            let ok: Vec<&InstanceOutcome> = group.iter().copied().filter(|o| o.error.is_none()).collect();
            let c_stars: Vec<f64> = ok.iter().map(|o| o.c_star).collect();
            let p0s: Vec<f64> = ok.iter().map(|o| o.p0_star).collect();
            let mean_d0 = if group.is_empty() {
                0.0
            } else {
                group.iter().map(|o| o.d0 as f64).sum::<f64>() / group.len() as f64
            };
            SizeSummary {
                n,
                median_c_star: lower_median(&c_stars).unwrap_or(f64::NAN),
                median_p0_star: lower_median(&p0s).unwrap_or(f64::NAN),
                c_stars,
                mean_d0,
                failures: group.len() - ok.len(),
                unbracketed: ok.iter().filter(|o| o.unbracketed).count(),
            }
        })
        .collect();

    let (lo, hi) = cfg.fit_window;
    let fitted: Vec<&SizeSummary> = per_n
        .iter()
        .filter(|s| (lo..=hi).contains(&s.n) && s.median_c_star.is_finite() && s.median_c_star > 0.0)
        .collect();
    let xs: Vec<f64> = fitted.iter().map(|s| s.n as f64).collect();
    let ys: Vec<f64> = fitted.iter().map(|s| math::log(s.median_c_star)).collect();
    let fit = math::linear_fit(&xs, &ys).map(|(slope, intercept)| ScalingFit {
        slope,
        intercept,
        residuals: fitted.iter().zip(&ys).map(|(s, y)| (s.n, y - (slope * s.n as f64 + intercept))).collect(),
        window: cfg.fit_window,
    });
    ScalingReport { per_n, fit, outcomes }
}

/// Sequential sweep: every instance of every size, then the report.
pub fn scaling_sweep(cfg: &SweepConfig) -> Result<ScalingReport> {
    cfg.validate()?;
    let mut outcomes = Vec::new();
    for &n in &cfg.n_values {
        let params = DriverParams::uniform(n);
        for index in 0..cfg.instances_per_n {
            outcomes.push(run_instance(cfg, n, index, &params));
        }
    }
    Ok(assemble_report(cfg, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn complexity_examples() {
        // T = 0 with the uniform ground probability gives 2^n.
        let d0 = 22;
        assert!((complexity(0.0, d0 as f64 / 1024.0, d0) - 1024.0).abs() < 1e-9);
        let c = complexity(22.67, 0.15, 22);
        assert!((c - 23.67 * 22.0 / 0.15).abs() < 1e-9);
        assert!((c - 3471.5).abs() < 0.5, "{c}");
        assert_eq!(complexity(7.0, 1.0, 1), 8.0);
        assert_eq!(complexity(7.0, 0.0, 4), f64::INFINITY);
    }

    #[test]
    fn medians_are_lower() {
        assert_eq!(lower_median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(lower_median(&[4.0, 1.0, 3.0, 2.0]), Some(2.0));
        assert_eq!(lower_median(&[]), None);
    }

    #[test]
    fn golden_section_finds_analytic_minimum() {
        // p0(T) = 1 - exp(-T / 5): C = (T + 1) / p0 has an interior minimum.
        let search = TSearch { t_min: 0.1, t_max: 1000.0, grid_points: 16, rel_tol: 0.05, budget: 64 };
        let curve = minimize_with(&search, 1, |t| Ok(1.0 - libm::exp(-t / 5.0))).unwrap();
        // Dense oracle.
        let dense: f64 = (1..20000)
            .map(|i| i as f64 * 0.005)
            .map(|t| complexity(t, 1.0 - libm::exp(-t / 5.0), 1))
            .fold(f64::INFINITY, f64::min);
        assert!(!curve.unbracketed);
        assert!((curve.c_star - dense) / dense < 0.01);
        assert!(curve.points.len() <= 64);
        assert!(curve.points.iter().all(|p| p.complexity >= curve.c_star));
        assert!(curve.points.windows(2).all(|w| w[0].t <= w[1].t));
    }

    #[test]
    fn boundary_optimum_is_flagged() {
        let search = TSearch { t_min: 1.0, t_max: 100.0, grid_points: 8, rel_tol: 0.05, budget: 32 };
        // Monotone increasing C: best at t_min.
        let curve = minimize_with(&search, 1, |_| Ok(1.0)).unwrap();
        assert!(curve.unbracketed);
        assert!((curve.t_star - 1.0).abs() < 0.2);
    }

    #[test]
    fn search_validation() {
        let ok = TSearch::for_size(8);
        assert!(ok.validate().is_ok());
        assert!((ok.t_max - 20.0 * libm::exp2(3.2)).abs() < 1e-9);
        let mut bad = ok;
        bad.budget = 7;
        assert!(minimize_with(&bad, 1, |_| Ok(0.5)).is_err());
        let mut bad = ok;
        bad.t_min = 0.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a = instance_seed(1, 8, 0);
        assert_eq!(a, instance_seed(1, 8, 0));
        assert_ne!(a, instance_seed(1, 8, 1));
        assert_ne!(a, instance_seed(1, 9, 0));
        assert_ne!(a, instance_seed(2, 8, 0));
    }

    #[test]
    fn report_fit_and_failures() {
        let cfg = SweepConfig {
            n_values: vec![4, 5, 6],
            instances_per_n: 5,
            b: 20,
            k_multiplier: 4.0,
            base_seed: 0,
            method: Method::SplitStep,
            dt: None,
            search: None,
            fit_window: (4, 6),
        };
        let mut outcomes = Vec::new();
        for n in [4usize, 5, 6] {
            for i in 0..5 {
                outcomes.push(InstanceOutcome {
                    n,
                    index: i,
                    seed: 0,
                    d0: 2,
                    t_star: 1.0,
                    p0_star: 0.5,
                    c_star: libm::exp(0.5 * n as f64 + i as f64 * 0.01),
                    unbracketed: false,
                    error: if n == 6 && i == 4 { Some("boom".into()) } else { None },
                });
            }
        }
        let report = assemble_report(&cfg, outcomes);
        let fit = report.fit.unwrap();
        assert!((fit.slope - 0.5).abs() < 0.01);
        assert_eq!(report.per_n[2].failures, 1);
        assert_eq!(report.per_n[2].c_stars.len(), 4);
        assert!(fit.residuals.iter().all(|(_, r)| r.abs() < 0.05));
        assert!((fit.base2_exponent() - fit.slope / core::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn small_sweep_is_deterministic_with_positive_slope() {
        let cfg = SweepConfig {
            n_values: vec![4, 5, 6],
            instances_per_n: 5,
            b: 25,
            k_multiplier: 4.0,
            base_seed: 42,
            method: Method::SplitStep,
            dt: Some(1e-2),
            search: Some(TSearch { t_min: 0.25, t_max: 60.0, grid_points: 10, rel_tol: 0.05, budget: 32 }),
            fit_window: (4, 6),
        };
        let a = scaling_sweep(&cfg).unwrap();
        let b = scaling_sweep(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.fit.as_ref().unwrap().slope > 0.0, "{:?}", a.per_n);
        let mut bad = cfg.clone();
        bad.n_values.clear();
        assert!(scaling_sweep(&bad).is_err());
        bad = cfg;
        bad.instances_per_n = 4;
        assert!(scaling_sweep(&bad).is_err());
    }

    #[test]
    fn tiny_instance_matches_dense_grid() {
        let problem = Problem::new(SppInstance::generate(4, 25, 3).unwrap(), 4.0).unwrap();
        let params = DriverParams::uniform(4);
        let prop = Propagator::new(&problem, &params, Schedule::linear()).unwrap();
        let cfg = IntegratorConfig::new(Method::SplitStep, 1e-2);
        let d0 = problem.costs().d0();
        assert!(d0 > 0);
        let search = TSearch { t_min: 0.25, t_max: 40.0, grid_points: 16, rel_tol: 0.05, budget: 64 };
        let curve = minimize_with(&search, d0, |t| Ok(prop.run(t, &cfg)?.p0)).unwrap();
        let ts: Vec<f64> = (1..=1000).map(|i| 0.25 + (40.0 - 0.25) * i as f64 / 1000.0).collect();
        let dense = complexity_curve(&ts, d0, |t| Ok(prop.run(t, &cfg)?.p0)).unwrap();
        let rel = (curve.c_star - dense.c_star) / dense.c_star;
        assert!(rel.abs() < 0.05, "golden {} vs grid {}", curve.c_star, dense.c_star);
        // Left edge anchored near 2^n.
        let left = complexity(0.01, prop.run(0.01, &cfg).unwrap().p0, d0);
        assert!((0.9 * 16.0..=1.2 * 16.0).contains(&left));
    }
}
