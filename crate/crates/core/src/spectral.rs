//! Stationary analysis of `H(s)`: the lowest adiabatic eigenvalues along `s`,
//! which of them end on the final ground level, the minimum gap to the levels
//! that do not, driver matrix elements and the perturbative nonadiabatic sum.
//!
//! Eigenpairs come from a dense solve, so `n <= 12`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::eigen::{symmetric_eigen, SymmetricEigen};
use crate::hamiltonian::{dense_hamiltonian, driver_into, DriverParams, Hamiltonian, Schedule, StateVector};
use crate::partition::Problem;
use crate::{Error, Result};

/// Default number of uniform `s` points.
pub const DEFAULT_S_POINTS: usize = 101;

/// Factor by which [`SpectralResult::refine`] subdivides the window around
/// the coarse gap minimum.
pub const DEFAULT_REFINEMENT: usize = 10;

/// Overlaps closer than this make a continuity match ambiguous.
const AMBIGUITY: f64 = 1e-6;

/// `points` uniform values covering `[0, 1]`.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..points).map(|i| i as f64 / (points - 1) as f64).collect(),
    }
}

/// Ground eigenvector of the dense `H(s)`.
pub fn ground_state(ham: &Hamiltonian<'_>, s: f64) -> Result<StateVector> {
    let m = dense_hamiltonian(s, ham.schedule(), ham.params(), ham.costs())?;
    let eig = symmetric_eigen(m.data(), m.dim())?;
    StateVector::from_real(ham.n(), eig.vector(0))
}

/// Eigendata at one `s`.
#[derive(Debug, Clone)]
struct Point {
    s: f64,
    eig: SymmetricEigen,
    /// `<Psi_0|V|Psi_k>` for the retained levels.
    v0k: Vec<f64>,
}

/// A continuation step whose two best overlaps were nearly equal but led to
/// different classifications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationWarning {
    pub s: f64,
    pub level: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimumGap {
    pub gap: f64,
    pub s_star: f64,
    /// Level index (in ascending order at `s_star`) of the closest
    /// non-merging level.
    pub level: usize,
}

/// Truncated perturbative estimate of the nonadiabatic probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonadiabaticEstimate {
    pub probability: f64,
    /// Contribution of the highest computed level; a large value relative to
    /// `probability` means the truncation at `m` levels matters.
    pub last_term: f64,
    pub terms: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralResult {
    pub s_grid: Vec<f64>,
    /// `eigenvalues[i][k]`: `k`-th lowest eigenvalue at `s_grid[i]`.
    pub eigenvalues: Vec<Vec<f64>>,
    /// `merging[i][k]`: level `k` at `s_grid[i]` ends on the ground level.
    pub merging: Vec<Vec<bool>>,
    /// `v0k[i][k] = <Psi_0|V|Psi_k>` at `s_grid[i]`.
    pub v0k: Vec<Vec<f64>>,
    pub min_gap: Option<MinimumGap>,
    pub warnings: Vec<ClassificationWarning>,
    pub levels: usize,
    #[serde(skip)]
    points: Vec<Point>,
    #[serde(skip)]
    params: DriverParams,
    #[serde(skip)]
    schedule: Schedule,
    #[serde(skip)]
    problem: Problem,
}

/// Computes the `m` lowest eigenpairs of `H(s)` on `s_grid`, classifies the
/// levels and locates the minimum gap.
pub fn adiabatic_spectrum(
    problem: &Problem,
    params: &DriverParams,
    schedule: &Schedule,
    s_grid: &[f64],
    m: usize,
) -> Result<SpectralResult> {
    let n = problem.n();
    if n > crate::hamiltonian::MAX_DENSE_N {
        return Err(Error::Capacity { what: "adiabatic spectrum", n, max: crate::hamiltonian::MAX_DENSE_N });
    }
    if m == 0 || m > 1 << n {
        return Err(Error::invalid(format!("level count m = {m} must lie in [1, 2^{n}]")));
    }
    if s_grid.is_empty() || s_grid.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::invalid("s grid must be non-empty and inside [0, 1]"));
    }
    let mut res = SpectralResult {
        s_grid: Vec::new(),
        eigenvalues: Vec::new(),
        merging: Vec::new(),
        v0k: Vec::new(),
        min_gap: None,
        warnings: Vec::new(),
        levels: m,
        points: Vec::new(),
        params: params.clone(),
        schedule: *schedule,
        problem: problem.clone(),
    };
    res.add_points(s_grid)?;
    res.analyze()?;
    Ok(res)
}

/// Flags level `k` as merging when more than half of its weight lies on
/// cost-0 bitstrings.
pub fn classify_levels(eigvecs: &[&[f64]], ground_set: &[u32]) -> Vec<bool> {
    eigvecs.iter().map(|v| ground_weight(v, ground_set) > 0.5).collect()
}

fn ground_weight(v: &[f64], ground_set: &[u32]) -> f64 {
    ground_set.iter().map(|&z| v[z as usize] * v[z as usize]).sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl SpectralResult {
    fn compute_point(&self, s: f64) -> Result<Point> {
        let m = dense_hamiltonian(s, &self.schedule, &self.params, self.problem.costs())?;
        let mut eig = symmetric_eigen(m.data(), m.dim())?;
        eig.truncate(self.levels);
        let dim = eig.dim();
        let to_complex = |v: &[f64]| v.iter().map(|&x| num_complex::Complex64::new(x, 0.0)).collect::<Vec<_>>();
        let mut v_ground = vec![num_complex::Complex64::new(0.0, 0.0); dim];
        driver_into(&self.params, &to_complex(eig.vector(0)), &mut v_ground)?;
        let v_ground: Vec<f64> = v_ground.iter().map(|c| c.re).collect();
        let v0k = (0..eig.values().len()).map(|k| dot(&v_ground, eig.vector(k))).collect();
        Ok(Point { s, eig, v0k })
    }

    fn add_points(&mut self, grid: &[f64]) -> Result<()> {
        for &s in grid {
            if self.points.iter().any(|p| p.s == s) {
                continue;
            }
            let point = self.compute_point(s)?;
            self.points.push(point);
        }
        self.points.sort_by(|a, b| a.s.total_cmp(&b.s));
        Ok(())
    }

    /// Classification at the last grid point, continued backward by maximal
    /// eigenvector overlap, followed by the gap search.
    fn analyze(&mut self) -> Result<()> {
        let count = self.points.len();
        let mut merging: Vec<Vec<bool>> = vec![Vec::new(); count];
        let mut warnings = Vec::new();
        let last = &self.points[count - 1];
        let levels = last.eig.values().len();
        let vecs: Vec<&[f64]> = (0..levels).map(|k| last.eig.vector(k)).collect();
        merging[count - 1] = classify_levels(&vecs, self.problem.costs().ground_set());
        if last.s < 0.9 {
            warnings.push(ClassificationWarning {
                s: last.s,
                level: 0,
                message: format!("classification anchored at s = {} < 0.9", last.s),
            });
        }
        for i in (0..count - 1).rev() {
            let (here, next) = (&self.points[i], &self.points[i + 1]);
            let next_flags = &merging[i + 1];
            let flags: Vec<bool> = (0..here.eig.values().len())
                .map(|k| {
                    let v = here.eig.vector(k);
                    let mut best = (0usize, -1.0f64);
                    let mut second = -1.0f64;
                    for l in 0..next.eig.values().len() {
                        let o = dot(v, next.eig.vector(l)).abs();
                        if o > best.1 {
                            second = best.1;
                            best = (l, o);
                        } else if o > second {
                            second = o;
                        }
                    }
                    let flag = next_flags[best.0];
                    if best.1 - second < AMBIGUITY {
                        let rival = (0..next.eig.values().len())
                            .filter(|&l| l != best.0)
                            .find(|&l| (dot(v, next.eig.vector(l)).abs() - best.1).abs() < AMBIGUITY);
                        if let Some(r) = rival {
                            if next_flags[r] != flag {
                                warnings.push(ClassificationWarning {
                                    s: here.s,
                                    level: k,
                                    message: format!(
                                        "ambiguous continuation: overlaps {:.3e} and {:.3e} disagree",
                                        best.1, second
                                    ),
                                });
                            }
                        }
                    }
                    flag
                })
                .collect();
            merging[i] = flags;
        }

        self.s_grid = self.points.iter().map(|p| p.s).collect();
        self.eigenvalues = self.points.iter().map(|p| p.eig.values().to_vec()).collect();
        self.v0k = self.points.iter().map(|p| p.v0k.clone()).collect();
        self.merging = merging;
        self.warnings = warnings;
        self.min_gap = self.search_gap();
        Ok(())
    }

    fn search_gap(&self) -> Option<MinimumGap> {
        let mut best: Option<MinimumGap> = None;
        for (i, (values, flags)) in self.eigenvalues.iter().zip(&self.merging).enumerate() {
            if let Some(k) = flags.iter().skip(1).position(|&m| !m).map(|k| k + 1) {
                let gap = values[k] - values[0];
                if best.is_none_or(|b| gap < b.gap) {
                    best = Some(MinimumGap { gap, s_star: self.s_grid[i], level: k });
                }
            }
        }
        best
    }

    /// Minimum over `s` of (lowest non-merging level) minus ground level.
    pub fn minimum_gap(&self) -> Result<MinimumGap> {
        self.min_gap.ok_or(Error::AllLevelsMerging)
    }

    /// Adds `factor` subdivisions of each interval neighbouring the current
    /// gap minimum and reanalyzes. The reported gap never increases.
    pub fn refine(&mut self, factor: usize) -> Result<MinimumGap> {
        let gap = self.minimum_gap()?;
        let i = self.s_grid.iter().position(|&s| s == gap.s_star).unwrap_or(0);
        let lo = self.s_grid[i.saturating_sub(1)];
        let hi = self.s_grid[(i + 1).min(self.s_grid.len() - 1)];
        let steps = 2 * factor.max(1);
        let extra: Vec<f64> = (1..steps).map(|j| lo + (hi - lo) * j as f64 / steps as f64).collect();
        self.add_points(&extra)?;
        self.analyze()?;
        self.minimum_gap()
    }

    /// Eigenvector of level `k` at grid index `i`.
    pub fn eigenvector(&self, i: usize, k: usize) -> &[f64] {
        self.points[i].eig.vector(k)
    }

    /// Number of levels flagged as merging at grid index `i`.
    pub fn merging_count(&self, i: usize) -> usize {
        self.merging[i].iter().filter(|&&m| m).count()
    }

    /// Adiabaticity parameter `V~ / (T gap^2)` with `V~ = max_{k>=1} |V_0k|`
    /// at the gap location.
    pub fn eta(&self, duration: f64) -> Result<f64> {
        let gap = self.minimum_gap()?;
        let i = self.s_grid.iter().position(|&s| s == gap.s_star).unwrap_or(0);
        let v_tilde = self.v0k[i].iter().skip(1).map(|v| v.abs()).fold(0.0, f64::max);
        Ok(v_tilde / (duration * gap.gap * gap.gap))
    }

    /// Characteristic driver scale used by [`SpectralResult::eta`].
    pub fn v_tilde(&self) -> Result<f64> {
        let gap = self.minimum_gap()?;
        let i = self.s_grid.iter().position(|&s| s == gap.s_star).unwrap_or(0);
        Ok(self.v0k[i].iter().skip(1).map(|v| v.abs()).fold(0.0, f64::max))
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }
}

/// Perturbative probability of having left the instantaneous ground state at
/// time `t` of a run of length `duration` with the linear schedule:
/// `(1/t^2) sum_{k>=1} |V_0k|^2 / (g_k - g_0)^4`, truncated at the computed
/// levels. `t / duration` must be on the grid.
pub fn nonadiabatic_sum(res: &SpectralResult, t: f64, duration: f64) -> Result<NonadiabaticEstimate> {
    if t.is_nan() || t <= 0.0 || duration.is_nan() || duration < t {
        return Err(Error::invalid(format!("need 0 < t <= T, got t = {t}, T = {duration}")));
    }
    let s = t / duration;
    let i = res
        .s_grid
        .iter()
        .position(|&g| (g - s).abs() <= 1e-12)
        .ok_or_else(|| Error::invalid(format!("s = {s} is not on the spectral grid")))?;
    let values = &res.eigenvalues[i];
    let scale = values.iter().map(|g| g.abs()).fold(1.0, f64::max);
    let mut sum = 0.0;
    let mut last_term = 0.0;
    let mut terms = 0;
    for k in 1..values.len() {
        let gap = values[k] - values[0];
        if gap.abs() <= 1e-12 * scale {
            if res.merging[i][k] {
                continue;
            }
            return Err(Error::Numerical(format!("level {k} is degenerate with the ground level at s = {s}")));
        }
        let term = res.v0k[i][k] * res.v0k[i][k] / (gap * gap * gap * gap);
        sum += term;
        last_term = term;
        terms += 1;
    }
    Ok(NonadiabaticEstimate { probability: sum / (t * t), last_term: last_term / (t * t), terms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{propagate, IntegratorConfig, Method};
    use crate::math::binomial;
    use crate::partition::SppInstance;

    fn problem(n: usize, seed: u64, k: f64) -> Problem {
        Problem::new(SppInstance::generate(n, 25, seed).unwrap(), k).unwrap()
    }

    #[test]
    fn driver_endpoint_multiplicities() {
        for n in [4usize, 6, 8] {
            let p = problem(n, 1, 4.0);
            let res = adiabatic_spectrum(&p, &DriverParams::uniform(n), &Schedule::linear(), &[0.0], 1 << n).unwrap();
            let mut k = 0;
            for m in 0..=n as u32 {
                for _ in 0..binomial(n as u32, m) {
                    let want = -(n as f64) + 2.0 * m as f64;
                    assert!((res.eigenvalues[0][k] - want).abs() < 1e-10);
                    k += 1;
                }
            }
        }
    }

    #[test]
    fn problem_endpoint_is_cost_spectrum() {
        let p = problem(6, 2, 4.0);
        let res = adiabatic_spectrum(&p, &DriverParams::uniform(6), &Schedule::linear(), &[1.0], 64).unwrap();
        let mut costs: Vec<f64> = p.costs().costs().iter().map(|&c| c as f64).collect();
        costs.sort_by(f64::total_cmp);
        for (g, c) in res.eigenvalues[0].iter().zip(&costs) {
            assert!((g - c).abs() < 1e-12);
        }
        // At s = 1 exactly the cost-0 levels are the merging ones.
        for (g, &m) in res.eigenvalues[0].iter().zip(&res.merging[0]) {
            assert_eq!(m, g.abs() < 1e-12);
        }
        assert_eq!(res.merging_count(0) as u64, p.costs().d0());
    }

    #[test]
    fn classification_matches_exhaustive_inspection() {
        let p = problem(4, 3, 4.0);
        let params = DriverParams::uniform(4);
        let grid = uniform_grid(41);
        let res = adiabatic_spectrum(&p, &params, &Schedule::linear(), &grid, 16).unwrap();
        let d0 = p.costs().d0() as usize;
        // Near s = 1 the lowest d0 levels carry essentially all ground weight.
        let i = grid.len() - 2;
        for k in 0..16 {
            let w = ground_weight(res.eigenvector(i, k), p.costs().ground_set());
            assert_eq!(res.merging[i][k], w > 0.5, "level {k} weight {w}");
            assert_eq!(res.merging[i][k], k < d0);
        }
        assert_eq!(res.merging_count(i), d0);
        // The adiabatic ground state always ends on the ground level.
        assert!(res.merging.iter().all(|f| f[0]));
    }

    #[test]
    fn diagonal_schedule_has_unit_gap() {
        let p = problem(5, 4, 12.0);
        assert!(p.costs().d0() > 0);
        let sched = Schedule::custom(|_| 0.0, |_| 1.0);
        let res = adiabatic_spectrum(&p, &DriverParams::uniform(5), &sched, &uniform_grid(5), 32).unwrap();
        let gap = res.minimum_gap().unwrap();
        let first_excited = p.costs().costs().iter().copied().filter(|&c| c > 0).min().unwrap();
        assert!((gap.gap - first_excited as f64).abs() < 1e-12);
        // A driver without fields has vanishing matrix elements.
        let silent = DriverParams::new(vec![0.0; 5], vec![0.0; 25]).unwrap();
        let res = adiabatic_spectrum(&p, &silent, &Schedule::linear(), &uniform_grid(5), 32).unwrap();
        assert!(res.v0k.iter().all(|row| row.iter().all(|v| *v == 0.0)));
        let est = nonadiabatic_sum(&res, 0.5, 1.0).unwrap();
        assert_eq!(est.probability, 0.0);
    }

    #[test]
    fn refinement_never_raises_gap() {
        let p = problem(6, 5, 6.0);
        let mut res =
            adiabatic_spectrum(&p, &DriverParams::uniform(6), &Schedule::linear(), &uniform_grid(21), 12).unwrap();
        let coarse = res.minimum_gap().unwrap();
        let fine = res.refine(DEFAULT_REFINEMENT).unwrap();
        assert!(fine.gap <= coarse.gap);
        assert!(res.s_grid.len() > 21);
        assert!(res.s_grid.windows(2).all(|w| w[0] < w[1]));
        assert!(res.eta(100.0).unwrap() > 0.0);
    }

    #[test]
    fn residuals_continuity_and_shift_independence() {
        let n = 5;
        let p = problem(n, 6, 4.0);
        let params = DriverParams::uniform(n);
        let grid = uniform_grid(51);
        let plain = adiabatic_spectrum(&p, &params, &Schedule::linear(), &grid, 8).unwrap();
        let shifted = adiabatic_spectrum(&p, &params, &Schedule::linear().with_shift(-(n as f64)), &grid, 8).unwrap();
        let ham_costs = p.costs();
        for (i, &s) in grid.iter().enumerate() {
            let m = dense_hamiltonian(s, &Schedule::linear(), &params, ham_costs).unwrap();
            for k in 0..8 {
                let v = plain.eigenvector(i, k);
                let g = plain.eigenvalues[i][k];
                let r: f64 = (0..32)
                    .map(|row| {
                        let hv: f64 = (0..32).map(|c| m.get(row, c) * v[c]).sum();
                        (hv - g * v[row]).powi(2)
                    })
                    .sum::<f64>()
                    .sqrt();
                assert!(r < 1e-8);
            }
        }
        // Spectral diameter is at most 2 max(n, L).
        let diameter = 2.0 * (n as f64).max(ham_costs.levels() as f64);
        for i in 0..grid.len() - 1 {
            for k in 0..8 {
                let jump = (plain.eigenvalues[i][k] - plain.eigenvalues[i + 1][k]).abs();
                assert!(jump < 10.0 * (grid[i + 1] - grid[i]) * diameter);
            }
        }
        let a = plain.minimum_gap().unwrap();
        let b = shifted.minimum_gap().unwrap();
        assert!((a.gap - b.gap).abs() < 1e-10);
    }

    #[test]
    fn nonadiabatic_sum_scales_with_time() {
        let p = problem(5, 7, 4.0);
        let grid = uniform_grid(11);
        let res = adiabatic_spectrum(&p, &DriverParams::uniform(5), &Schedule::linear(), &grid, 32).unwrap();
        let a = nonadiabatic_sum(&res, 5.0, 10.0).unwrap();
        let b = nonadiabatic_sum(&res, 10.0, 20.0).unwrap();
        assert!((a.probability / b.probability - 4.0).abs() < 1e-12);
        assert!(a.terms > 0 && a.last_term <= a.probability);
        assert!(nonadiabatic_sum(&res, 0.0, 10.0).is_err());
        assert!(nonadiabatic_sum(&res, 3.3, 10.0).is_err());
    }

    #[test]
    fn nonadiabatic_sum_tracks_measured_leakage() {
        let n = 6;
        let p = problem(n, 8, 4.0);
        let params = DriverParams::uniform(n);
        let sched = Schedule::linear();
        let res = adiabatic_spectrum(&p, &params, &sched, &[0.5], 1 << n).unwrap();
        let duration = 200.0;
        let t = 100.0;
        let estimate = nonadiabatic_sum(&res, t, duration).unwrap().probability;
        let mut cfg = IntegratorConfig::new(Method::SplitStep, 1e-2);
        cfg.record_overlap_at = vec![t];
        let run = propagate(&p, &params, &sched, duration, &cfg).unwrap();
        let measured = 1.0 - run.adiabatic_overlap[0].overlap;
        let ratio = estimate / measured;
        assert!((1.0 / 3.0..=3.0).contains(&ratio), "estimate {estimate:e}, measured {measured:e}");
    }

    #[test]
    fn input_validation() {
        let p = problem(4, 0, 4.0);
        let params = DriverParams::uniform(4);
        let sched = Schedule::linear();
        assert!(adiabatic_spectrum(&p, &params, &sched, &[0.5], 0).is_err());
        assert!(adiabatic_spectrum(&p, &params, &sched, &[0.5], 17).is_err());
        assert!(adiabatic_spectrum(&p, &params, &sched, &[1.5], 4).is_err());
        assert!(adiabatic_spectrum(&p, &params, &sched, &[], 4).is_err());
        let big = problem(13, 0, 4.0);
        assert!(matches!(
            adiabatic_spectrum(&big, &DriverParams::uniform(13), &sched, &[0.5], 4),
            Err(Error::Capacity { n: 13, .. })
        ));
        // Only the ground level tracked: everything merges.
        let res = adiabatic_spectrum(&p, &params, &sched, &uniform_grid(5), 1).unwrap();
        assert_eq!(res.minimum_gap().unwrap_err(), Error::AllLevelsMerging);
    }
}
