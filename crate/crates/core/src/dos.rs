//! Density of states of the signed residues: coarse-grained histogram,
//! Gaussian prediction, the characteristic function `I(w) = prod cos(a_j w)`
//! and a scan for approximate common divisors of the `a_j`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::Serialize;

use crate::math;
use crate::partition::{ResidueTable, SppInstance};
use crate::{Error, Result};

/// Largest number of histogram bins.
pub const MAX_BINS: usize = 1 << 24;

/// Legal window range `[10 sqrt(n) 2^-n, sqrt(n) / 10]`, in units of `a`.
pub fn window_bounds(n: usize) -> (f64, f64) {
    let root = math::sqrt(n as f64);
    (10.0 * root * math::ldexp(1.0, -(n as i32)), root / 10.0)
}

/// `1000 sqrt(n) 2^-n`, or the geometric mean of the legal bounds when that
/// exceeds the upper bound (n <= 13).
pub fn default_window(n: usize) -> f64 {
    let (lo, hi) = window_bounds(n);
    let w = 100.0 * lo;
    if w <= hi {
        w
    } else {
        math::sqrt(lo * hi)
    }
}

/// `sigma^2 = (1/n) sum a_j^2`.
pub fn sigma2(inst: &SppInstance) -> f64 {
    let squares: Vec<f64> = inst.a_values().iter().map(|a| a * a).collect();
    math::pairwise_sum(&squares) / inst.n() as f64
}

/// Gaussian density `2^n / sqrt(2 pi n sigma2) exp(-omega^2 / (2 n sigma2))`.
pub fn gaussian_dos(omega: f64, n: usize, sigma2: f64) -> f64 {
    let var = n as f64 * sigma2;
    math::ldexp(1.0, n as i32) / math::sqrt(2.0 * PI * var) * math::exp(-omega * omega / (2.0 * var))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DosHistogram {
    pub window: f64,
    pub bin_centers: Vec<f64>,
    /// Bin counts divided by the window.
    pub counts_per_unit: Vec<f64>,
    pub sigma2: f64,
    pub n: usize,
}

impl DosHistogram {
    pub fn gaussian(&self, omega: f64) -> f64 {
        gaussian_dos(omega, self.n, self.sigma2)
    }

    /// `sum counts * window`, equal to `2^n` up to rounding.
    pub fn total_mass(&self) -> f64 {
        math::pairwise_sum(&self.counts_per_unit) * self.window
    }

    /// `sqrt(n sigma2)`, the predicted standard deviation of the residues.
    pub fn width(&self) -> f64 {
        math::sqrt(self.n as f64 * self.sigma2)
    }

    /// Value at the bin containing `omega`, zero outside the histogram.
    pub fn at(&self, omega: f64) -> f64 {
        let Some(&first) = self.bin_centers.first() else {
            return 0.0;
        };
        let k = math::floor((omega - first) / self.window + 0.5);
        if k < 0.0 || k as usize >= self.bin_centers.len() {
            0.0
        } else {
            self.counts_per_unit[k as usize]
        }
    }

    /// Mean of `|rho - gaussian| / gaussian` over bins with `|centre| <= radius`.
    pub fn mean_relative_error(&self, radius: f64) -> Option<f64> {
        let errs: Vec<f64> = self
            .bin_centers
            .iter()
            .zip(&self.counts_per_unit)
            .filter(|(c, _)| c.abs() <= radius)
            .map(|(&c, &rho)| {
                let g = self.gaussian(c);
                (rho - g).abs() / g
            })
            .collect();
        (!errs.is_empty()).then(|| math::pairwise_sum(&errs) / errs.len() as f64)
    }
}

/// Histogram of all `2^n` signed residues with bins of width `window`
/// centred on integer multiples of the window.
pub fn coarse_grained_dos(inst: &SppInstance, table: &ResidueTable, window: f64) -> Result<DosHistogram> {
    let n = inst.n();
    if table.len() != inst.dim() {
        return Err(Error::DimensionMismatch { expected: inst.dim(), found: table.len() });
    }
    let (lo, hi) = window_bounds(n);
    if !(window >= lo && window <= hi) {
        return Err(Error::invalid(format!(
            "window {window} outside [{lo:e}, {hi}] for n = {n}; the histogram needs 10 sqrt(n) 2^-n <= window <= sqrt(n)/10"
        )));
    }
    let bin = |r: i64| math::floor(inst.to_unit(r) / window + 0.5) as i64;
    let (mut kmin, mut kmax) = (i64::MAX, i64::MIN);
    for &r in table.residues() {
        let k = bin(r);
        kmin = kmin.min(k);
        kmax = kmax.max(k);
    }
    let bins = (kmax - kmin + 1) as usize;
    if bins > MAX_BINS {
        return Err(Error::Capacity { what: "histogram bins", n: bins, max: MAX_BINS });
    }
    let mut counts = vec![0u64; bins];
    for &r in table.residues() {
        counts[(bin(r) - kmin) as usize] += 1;
    }
    Ok(DosHistogram {
        window,
        bin_centers: (0..bins).map(|i| (kmin + i as i64) as f64 * window).collect(),
        counts_per_unit: counts.iter().map(|&c| c as f64 / window).collect(),
        sigma2: sigma2(inst),
        n,
    })
}

// Error-free product: a * b == hi + lo exactly.
fn two_product(a: f64, b: f64) -> (f64, f64) {
    let hi = a * b;
    (hi, libm::fma(a, b, -hi))
}

/// `I(w) = prod_j cos(a_j w)`, accumulated with a compensated product.
pub fn characteristic_function(inst: &SppInstance, w: f64) -> f64 {
    // a_j w = alpha_j (w 2^-b); the scaling by 2^-b is exact.
    let w_scaled = math::ldexp(w, -(inst.b() as i32));
    let (mut p, mut err) = (1.0f64, 0.0f64);
    for &alpha in inst.alphas() {
        let c = math::cos(alpha as f64 * w_scaled);
        let (hi, lo) = two_product(p, c);
        err = libm::fma(err, c, lo);
        p = hi;
    }
    p + err
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResonanceReport {
    pub q: f64,
    /// Distance of each `a_j` from the nearest integer multiple of `q`.
    pub residues: Vec<f64>,
    /// `(pi^2 / 2) sum (r_j / q)^2`.
    pub strength: f64,
    pub passes: bool,
}

/// Checks each candidate `q` as an approximate common divisor of the `a_j`.
pub fn approximate_gcd_scan(inst: &SppInstance, q_candidates: &[f64]) -> Result<Vec<ResonanceReport>> {
    let a = inst.a_values();
    q_candidates
        .iter()
        .map(|&q| {
            if !(q > 0.0 && q.is_finite()) {
                return Err(Error::invalid(format!("candidate divisor {q} must be positive and finite")));
            }
            let residues: Vec<f64> = a
                .iter()
                .map(|&x| {
                    let f = libm::round(x / q);
                    libm::fma(-f, q, x).abs().min(q / 2.0)
                })
                .collect();
            let scaled: Vec<f64> = residues.iter().map(|r| (r / q) * (r / q)).collect();
            let strength = 0.5 * PI * PI * math::pairwise_sum(&scaled);
            Ok(ResonanceReport { q, residues, strength, passes: strength <= 1.0 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(n: usize, seed: u64, window: f64) -> DosHistogram {
        let inst = SppInstance::generate(n, 25, seed).unwrap();
        let table = ResidueTable::enumerate(&inst).unwrap();
        coarse_grained_dos(&inst, &table, window).unwrap()
    }

    #[test]
    fn window_defaults() {
        for n in 7..=26 {
            let (lo, hi) = window_bounds(n);
            let w = default_window(n);
            assert!(lo <= w && w <= hi, "n = {n}");
        }
        assert!((default_window(18) - 1000.0 * libm::sqrt(18.0) * libm::exp2(-18.0)).abs() < 1e-15);
    }

    #[test]
    fn mass_and_symmetry() {
        let h = hist(16, 3, default_window(16));
        assert!((h.total_mass() - 65536.0).abs() < 1e-6);
        // Mirror bins pair up: centre c and -c.
        let m = h.bin_centers.len();
        let mut asym = 0.0;
        let mut total = 0.0;
        for i in 0..m {
            let c = h.bin_centers[i];
            asym += (h.counts_per_unit[i] - h.at(-c)).abs();
            total += h.counts_per_unit[i];
        }
        assert!(asym / total < 0.02, "{}", asym / total);
    }

    #[test]
    fn gaussian_examples() {
        let (n, s2) = (10, 0.3);
        let peak = gaussian_dos(0.0, n, s2);
        assert!((peak - 1024.0 / libm::sqrt(2.0 * PI * 3.0)).abs() < 1e-9);
        let omega = libm::sqrt(2.0 * n as f64 * s2);
        assert!((gaussian_dos(omega, n, s2) - peak / core::f64::consts::E).abs() < 1e-9);
    }

    #[test]
    fn n18_matches_gaussian() {
        for seed in [0, 1, 2] {
            let h = hist(18, seed, default_window(18));
            let err = h.mean_relative_error(h.width()).unwrap();
            assert!(err < 0.1, "seed {seed}: {err}");
        }
        // Seed 3 carries fine structure at the default window that a wider
        // one averages away.
        let h = hist(18, 3, 0.1);
        assert!(h.mean_relative_error(h.width()).unwrap() < 0.05);
    }

    #[test]
    fn sigma2_self_averages() {
        let mut values: Vec<f64> =
            (0..50).map(|seed| sigma2(&SppInstance::generate(20, 25, 1000 + seed).unwrap())).collect();
        values.sort_by(f64::total_cmp);
        let median = values[24];
        assert!((0.28..=0.39).contains(&median), "{median}");
    }

    #[test]
    fn window_doubling_is_stable() {
        let inst = SppInstance::generate(16, 25, 5).unwrap();
        let table = ResidueTable::enumerate(&inst).unwrap();
        let fine = coarse_grained_dos(&inst, &table, 0.1).unwrap();
        let coarse = coarse_grained_dos(&inst, &table, 0.2).unwrap();
        let radius = fine.width();
        let diffs: Vec<f64> = coarse
            .bin_centers
            .iter()
            .zip(&coarse.counts_per_unit)
            .filter(|(c, _)| c.abs() <= radius)
            .map(|(&c, &rho)| {
                // The coarse bin is covered by the fine bin at c plus halves of its neighbours.
                let f = 0.5 * fine.at(c) + 0.25 * (fine.at(c - 0.1) + fine.at(c + 0.1));
                (rho - f).abs() / rho
            })
            .collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        assert!(mean < 0.05, "{mean}");
    }

    #[test]
    fn agreement_improves_with_n() {
        let mean_err = |n: usize| {
            let errs: Vec<f64> = (0..20)
                .map(|seed| {
                    let h = hist(n, 500 + seed, default_window(n));
                    h.mean_relative_error(h.width()).unwrap()
                })
                .collect();
            errs.iter().sum::<f64>() / errs.len() as f64
        };
        let (e12, e20) = (mean_err(12), mean_err(20));
        assert!(e20 < e12, "n=12: {e12}, n=20: {e20}");
    }

    #[test]
    fn window_validation() {
        let inst = SppInstance::generate(10, 25, 1).unwrap();
        let table = ResidueTable::enumerate(&inst).unwrap();
        let (lo, hi) = window_bounds(10);
        assert!(coarse_grained_dos(&inst, &table, lo * 0.5).is_err());
        assert!(coarse_grained_dos(&inst, &table, hi * 2.0).is_err());
        assert!(coarse_grained_dos(&inst, &table, hi).is_ok());
    }

    #[test]
    fn characteristic_function_identities() {
        let inst = SppInstance::generate(12, 20, 7).unwrap();
        assert_eq!(characteristic_function(&inst, 0.0), 1.0);
        for w in [0.3, 1.7, 12.5, 400.0] {
            assert_eq!(characteristic_function(&inst, w), characteristic_function(&inst, -w));
        }
        // All alpha_j odd: I(pi k 2^b) = (-1)^(k n') with every cosine (-1)^k.
        let odd: Vec<u64> = inst.alphas().iter().map(|a| a | 1).collect();
        let odd = SppInstance::from_alphas(20, odd, 0).unwrap();
        let base = PI * libm::exp2(20.0);
        for k in 1..=3i32 {
            let expected = if (k * odd.n() as i32) % 2 == 0 { 1.0 } else { -1.0 };
            assert!((characteristic_function(&odd, k as f64 * base) - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn characteristic_function_matches_fourier_sum() {
        // I(w) = 2^-n sum_z cos(Omega_z w).
        let inst = SppInstance::generate(10, 16, 2).unwrap();
        let table = ResidueTable::enumerate(&inst).unwrap();
        for w in [0.1, 0.9, 3.3] {
            let direct: f64 = table.residues().iter().map(|&r| libm::cos(inst.to_unit(r) * w)).sum::<f64>() / 1024.0;
            assert!((direct - characteristic_function(&inst, w)).abs() < 1e-12);
        }
    }

    #[test]
    fn gcd_scan() {
        let inst = SppInstance::generate(8, 12, 3).unwrap();
        let reports = approximate_gcd_scan(&inst, &[libm::exp2(-12.0), 0.137]).unwrap();
        assert_eq!(reports[0].strength, 0.0);
        assert!(reports[0].passes);
        for r in &reports {
            assert!(r.strength >= 0.0);
            assert!(r.residues.iter().all(|&x| (0.0..=r.q / 2.0).contains(&x)));
        }
        assert!(approximate_gcd_scan(&inst, &[0.0]).is_err());

        // Positive control: a_j = j q plus noise far below q.
        let b = 30;
        let q_units = 1u64 << 22;
        let alphas: Vec<u64> = (1..=10u64).map(|j| j * q_units + (j * 37) % 200).collect();
        let control = SppInstance::from_alphas(b, alphas, 0).unwrap();
        let q = libm::ldexp(q_units as f64, -(b as i32));
        let r = approximate_gcd_scan(&control, &[q, q * 0.77]).unwrap();
        assert!(r[0].passes && r[0].strength < 1e-3);
        assert!(!r[1].passes);
        // Resonance shows in I: near-full magnitude at w = 2 pi / q.
        assert!(characteristic_function(&control, 2.0 * PI / q).abs() > 0.99);
    }
}
