//! Set partition instances, exact residues and the logarithmic cost spectrum.
//!
//! Numbers are kept as integers `alpha_j` in `[1, 2^b]`; the unit-interval
//! values are `a_j = alpha_j * 2^-b`. Signed residues are therefore exact
//! integers in units of `2^-b`, and floating point only enters at the band
//! edges of the cost function.
//!
//! Bit `j` of a bitstring index `z` is `z_j`; the corresponding sign is
//! `s_j = 1 - 2 z_j`.

use alloc::format;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::math;
use crate::{Error, Result};

/// Largest `n` for which residue tables are enumerated.
pub const MAX_ENUMERATION_N: usize = 26;

/// Default ground-window multiplier `K`.
pub const DEFAULT_K: f64 = 20.0;

/// One problem instance: `n` integers of `b`-bit precision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct SppInstance {
    n: usize,
    b: u32,
    alphas: Vec<u64>,
    seed: u64,
}

#[derive(Deserialize)]
struct RawInstance {
    n: usize,
    b: u32,
    alphas: Vec<u64>,
    #[serde(default)]
    seed: u64,
}

impl TryFrom<RawInstance> for SppInstance {
    type Error = Error;

    fn try_from(raw: RawInstance) -> Result<Self> {
        if raw.alphas.len() != raw.n {
            return Err(Error::invalid(format!(
                "instance declares n = {} but lists {} numbers",
                raw.n,
                raw.alphas.len()
            )));
        }
        SppInstance::from_alphas(raw.b, raw.alphas, raw.seed)
    }
}

fn check_size(n: usize, b: u32) -> Result<()> {
    if !(1..=30).contains(&n) {
        return Err(Error::invalid(format!("n must lie in [1, 30], got {n}")));
    }
    if !(1..=62).contains(&b) {
        return Err(Error::invalid(format!("b must lie in [1, 62], got {b}")));
    }
    // Every residue is bounded by n * 2^b and must fit an i64 with room to spare.
    if (n as u128) << b >= 1u128 << 62 {
        return Err(Error::invalid(format!(
            "n * 2^b = {n} * 2^{b} overflows the residue range (must be < 2^62)"
        )));
    }
    Ok(())
}

impl SppInstance {
    /// Draws `n` integers uniformly from `[1, 2^b]` with a ChaCha8 stream
    /// seeded by `seed`.
    pub fn generate(n: usize, b: u32, seed: u64) -> Result<Self> {
        check_size(n, b)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let top = 1u64 << b;
        let alphas = (0..n).map(|_| rng.random_range(1..=top)).collect();
        Ok(SppInstance { n, b, alphas, seed })
    }

    /// Wraps explicit integers. `seed` is informational only.
    pub fn from_alphas(b: u32, alphas: Vec<u64>, seed: u64) -> Result<Self> {
        let n = alphas.len();
        check_size(n, b)?;
        let top = 1u64 << b;
        if let Some((j, &a)) = alphas.iter().enumerate().find(|(_, &a)| a == 0 || a > top) {
            return Err(Error::invalid(format!("alpha[{j}] = {a} is outside [1, 2^{b}]")));
        }
        Ok(SppInstance { n, b, alphas, seed })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn alphas(&self) -> &[u64] {
        &self.alphas
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Size of the state space, `2^n`.
    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    /// `a_j = alpha_j * 2^-b`.
    pub fn a(&self, j: usize) -> f64 {
        math::ldexp(self.alphas[j] as f64, -(self.b as i32))
    }

    pub fn a_values(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.a(j)).collect()
    }

    /// `sum_j alpha_j`, the residue of the all-zero bitstring.
    pub fn alpha_sum(&self) -> u64 {
        self.alphas.iter().sum()
    }

    /// Converts an integer residue to unit-interval scale.
    pub fn to_unit(&self, residue: i64) -> f64 {
        math::ldexp(residue as f64, -(self.b as i32))
    }

    /// Signed integer residue `sum_j (1 - 2 z_j) alpha_j`.
    pub fn residue(&self, z: usize) -> i64 {
        self.alphas
            .iter()
            .enumerate()
            .map(|(j, &a)| if z >> j & 1 == 0 { a as i64 } else { -(a as i64) })
            .sum()
    }

    /// Bitstring with every bit flipped.
    pub fn complement(&self, z: usize) -> usize {
        !z & (self.dim() - 1)
    }
}

fn check_enumerable(n: usize) -> Result<()> {
    if n > MAX_ENUMERATION_N {
        return Err(Error::Capacity { what: "residue enumeration", n, max: MAX_ENUMERATION_N });
    }
    Ok(())
}

/// Residues of every bitstring and the bitstrings sorted by `|residue|`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidueTable {
    residues: Vec<i64>,
    sorted_order: Vec<u32>,
}

impl ResidueTable {
    /// Enumerates all `2^n` residues. Each entry differs from an earlier one by
    /// a single sign flip, so the whole table costs `O(2^n)`.
    pub fn enumerate(inst: &SppInstance) -> Result<Self> {
        check_enumerable(inst.n())?;
        let dim = inst.dim();
        let mut residues = alloc::vec![0i64; dim];
        residues[0] = inst.alpha_sum() as i64;
        for z in 1..dim {
            let j = z.trailing_zeros() as usize;
            residues[z] = residues[z ^ (1 << j)] - 2 * inst.alphas()[j] as i64;
        }
        let mut sorted_order: Vec<u32> = (0..dim as u32).collect();
        sorted_order.sort_unstable_by_key(|&z| (residues[z as usize].unsigned_abs(), z));
        Ok(ResidueTable { residues, sorted_order })
    }

    pub fn residues(&self) -> &[i64] {
        &self.residues
    }

    pub fn residue(&self, z: usize) -> i64 {
        self.residues[z]
    }

    /// Bitstrings by increasing `|residue|`, ties by increasing index.
    pub fn sorted_order(&self) -> &[u32] {
        &self.sorted_order
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }
}

/// Convenience: enumerates the residue table of `inst`.
pub fn enumerate_residues(inst: &SppInstance) -> Result<ResidueTable> {
    ResidueTable::enumerate(inst)
}

/// Logarithmic cost levels of every bitstring.
///
/// Level 0 holds residues with `|Omega| < Delta`; level `k >= 1` holds
/// `2^(k-1) <= |Omega| / Delta < 2^k`. A ratio landing exactly on `2^(k-1)`
/// belongs to level `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostSpectrum {
    delta: f64,
    k_multiplier: f64,
    levels: u32,
    total: f64,
    #[serde(skip)]
    thresholds: Vec<u64>,
    #[serde(skip)]
    costs: Vec<u8>,
    degeneracies: Vec<u64>,
    #[serde(skip)]
    ground_set: Vec<u32>,
    degenerate: bool,
}

impl CostSpectrum {
    /// Builds the spectrum with `Delta = sqrt(n) 2^-n K`.
    pub fn build(inst: &SppInstance, table: &ResidueTable, k_multiplier: f64) -> Result<Self> {
        if !(k_multiplier > 0.0 && k_multiplier.is_finite()) {
            return Err(Error::invalid(format!("K must be positive and finite, got {k_multiplier}")));
        }
        let n = inst.n();
        let delta = math::ldexp(math::sqrt(n as f64) * k_multiplier, -(n as i32));
        Self::with_delta(inst, table, delta, k_multiplier)
    }

    /// Builds the spectrum for an explicit ground window `delta` (unit scale).
    pub fn with_delta(
        inst: &SppInstance,
        table: &ResidueTable,
        delta: f64,
        k_multiplier: f64,
    ) -> Result<Self> {
        if table.len() != inst.dim() {
            return Err(Error::DimensionMismatch { expected: inst.dim(), found: table.len() });
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid(format!("Delta must be positive and finite, got {delta}")));
        }
        // Delta in residue units. Scaling by a power of two is exact, so the
        // only rounding is in sqrt(n) * K and in the ceilings below.
        let scaled = math::ldexp(delta, inst.b() as i32);
        let max_residue = inst.alpha_sum();

        // thresholds[k - 1] = smallest integer >= scaled * 2^(k-1); an integer
        // residue x is in level >= k exactly when x >= thresholds[k - 1].
        let mut thresholds = Vec::new();
        loop {
            let edge = math::ldexp(scaled, thresholds.len() as i32);
            let t = libm::ceil(edge);
            if t > max_residue as f64 || t >= u64::MAX as f64 {
                break;
            }
            let t = (t as u64).max(1);
            if t > max_residue {
                break;
            }
            thresholds.push(t);
            if thresholds.len() > u8::MAX as usize {
                return Err(Error::invalid(format!(
                    "Delta = {delta:e} yields more than {} cost levels",
                    u8::MAX
                )));
            }
        }
        let levels = thresholds.len() as u32;

        let mut degeneracies = alloc::vec![0u64; levels as usize + 1];
        let mut ground_set = Vec::new();
        let costs: Vec<u8> = table
            .residues()
            .iter()
            .enumerate()
            .map(|(z, &r)| {
                let c = thresholds.partition_point(|&t| t <= r.unsigned_abs()) as u8;
                degeneracies[c as usize] += 1;
                if c == 0 {
                    ground_set.push(z as u32);
                }
                c
            })
            .collect();

        Ok(CostSpectrum {
            delta,
            k_multiplier,
            levels,
            total: inst.to_unit(max_residue as i64),
            thresholds,
            costs,
            degeneracies,
            ground_set,
            degenerate: levels == 0,
        })
    }

    /// Ground window `Delta` on the unit-interval scale.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn k_multiplier(&self) -> f64 {
        self.k_multiplier
    }

    /// Number of nonzero cost levels `L`; costs range over `0..=L`.
    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// `A = sum_j a_j`.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn costs(&self) -> &[u8] {
        &self.costs
    }

    pub fn cost(&self, z: usize) -> u8 {
        self.costs[z]
    }

    /// Cost level of an arbitrary integer residue.
    pub fn level_of(&self, residue: i64) -> u8 {
        self.thresholds.partition_point(|&t| t <= residue.unsigned_abs()) as u8
    }

    /// `d_k` for `k = 0..=L`.
    pub fn degeneracies(&self) -> &[u64] {
        &self.degeneracies
    }

    /// Bitstrings with cost 0, in increasing order.
    pub fn ground_set(&self) -> &[u32] {
        &self.ground_set
    }

    pub fn d0(&self) -> u64 {
        self.degeneracies[0]
    }

    pub fn dim(&self) -> usize {
        self.costs.len()
    }

    /// True when every bitstring has cost 0 (the window swallows every residue).
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }
}

/// An instance together with its residue table and cost spectrum.
#[derive(Debug, Clone)]
pub struct Problem {
    instance: SppInstance,
    table: ResidueTable,
    costs: CostSpectrum,
}

impl Problem {
    /// Enumerates residues and builds the cost spectrum with multiplier `k`.
    pub fn new(instance: SppInstance, k_multiplier: f64) -> Result<Self> {
        let table = ResidueTable::enumerate(&instance)?;
        let costs = CostSpectrum::build(&instance, &table, k_multiplier)?;
        Ok(Problem { instance, table, costs })
    }

    pub fn from_parts(instance: SppInstance, table: ResidueTable, costs: CostSpectrum) -> Result<Self> {
        if table.len() != instance.dim() || costs.dim() != instance.dim() {
            return Err(Error::DimensionMismatch { expected: instance.dim(), found: costs.dim() });
        }
        Ok(Problem { instance, table, costs })
    }

    pub fn instance(&self) -> &SppInstance {
        &self.instance
    }

    pub fn table(&self) -> &ResidueTable {
        &self.table
    }

    pub fn costs(&self) -> &CostSpectrum {
        &self.costs
    }

    pub fn n(&self) -> usize {
        self.instance.n()
    }
}

/// Exhaustive classical optimum: the smallest `|residue|` and every bitstring
/// attaining it (complement pairs included).
pub fn brute_force_min_residue(inst: &SppInstance) -> Result<(u64, Vec<usize>)> {
    let table = ResidueTable::enumerate(inst)?;
    let best = table.residues().iter().map(|r| r.unsigned_abs()).min().unwrap_or(0);
    let optimal = table
        .residues()
        .iter()
        .enumerate()
        .filter(|(_, r)| r.unsigned_abs() == best)
        .map(|(z, _)| z)
        .collect();
    Ok((best, optimal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn inst(b: u32, alphas: &[u64]) -> SppInstance {
        SppInstance::from_alphas(b, alphas.to_vec(), 0).unwrap()
    }

    #[test]
    fn generation_is_deterministic_and_in_range() {
        let a = SppInstance::generate(15, 25, 7).unwrap();
        let b = SppInstance::generate(15, 25, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.alphas().len(), 15);
        assert!(a.alphas().iter().all(|&x| (1..=1 << 25).contains(&x)));
        assert_ne!(a, SppInstance::generate(15, 25, 8).unwrap());

        for seed in 0..32 {
            let tiny = SppInstance::generate(1, 1, seed).unwrap();
            assert!(tiny.alphas() == [1] || tiny.alphas() == [2]);
        }
    }

    #[test]
    fn size_validation() {
        assert!(SppInstance::generate(0, 10, 0).is_err());
        assert!(SppInstance::generate(31, 10, 0).is_err());
        assert!(SppInstance::generate(4, 0, 0).is_err());
        assert!(SppInstance::generate(4, 63, 0).is_err());
        // 4 * 2^60 = 2^62 overflows, 3 * 2^60 does not.
        assert!(SppInstance::generate(4, 60, 0).is_err());
        assert!(SppInstance::generate(3, 60, 0).is_ok());
        assert!(SppInstance::from_alphas(2, vec![0, 1], 0).is_err());
        assert!(SppInstance::from_alphas(2, vec![5, 1], 0).is_err());
        assert!(SppInstance::from_alphas(2, vec![4, 1], 0).is_ok());
    }

    #[test]
    fn residue_examples() {
        let i = inst(3, &[3, 5]);
        assert_eq!(i.residue(0b00), 8);
        // z = 01 in the order z_0 z_1: z_0 = 0, z_1 = 1.
        assert_eq!(i.residue(0b10), -2);
        assert_eq!(i.residue(0b01), 2);
        assert_eq!(i.residue(0b11), -8);
    }

    #[test]
    fn enumeration_matches_direct_evaluation() {
        let i = inst(3, &[3, 5]);
        let t = ResidueTable::enumerate(&i).unwrap();
        assert_eq!(t.residues(), &[8, 2, -2, -8]);
        assert_eq!(t.sorted_order(), &[1, 2, 0, 3]);

        let i = SppInstance::generate(10, 20, 3).unwrap();
        let t = ResidueTable::enumerate(&i).unwrap();
        for z in 0..i.dim() {
            assert_eq!(t.residue(z), i.residue(z));
        }
        let first = t.sorted_order()[0] as usize;
        let min = t.residues().iter().map(|r| r.unsigned_abs()).min().unwrap();
        assert_eq!(t.residue(first).unsigned_abs(), min);
        let mut multiset: Vec<i64> = t.residues().to_vec();
        let mut negated: Vec<i64> = multiset.iter().map(|r| -r).collect();
        multiset.sort_unstable();
        negated.sort_unstable();
        assert_eq!(multiset, negated);
    }

    #[test]
    fn enumeration_capacity_guard() {
        let i = SppInstance::generate(27, 30, 0).unwrap();
        assert!(matches!(
            ResidueTable::enumerate(&i),
            Err(Error::Capacity { n: 27, max: 26, .. })
        ));
    }

    #[test]
    fn sort_ties_break_by_index() {
        let i = inst(2, &[1, 1]);
        let t = ResidueTable::enumerate(&i).unwrap();
        // residues: [2, 0, 0, -2]
        assert_eq!(t.sorted_order(), &[1, 2, 0, 3]);
    }

    #[test]
    fn band_edges() {
        // With b = 0 scale irrelevant: use b = 1 and Delta = 1 in residue units
        // (delta = 0.5 on the unit scale).
        let i = inst(1, &[2, 2, 2, 2, 2, 2]);
        let t = ResidueTable::enumerate(&i).unwrap();
        let c = CostSpectrum::with_delta(&i, &t, 0.5, 1.0).unwrap();
        assert_eq!(c.level_of(0), 0);
        assert_eq!(c.level_of(1), 1); // ratio 1 = 2^0 belongs to level 1
        assert_eq!(c.level_of(2), 2);
        assert_eq!(c.level_of(3), 2); // 2 <= 3 < 4
        assert_eq!(c.level_of(4), 3);
        assert_eq!(c.level_of(7), 3);
        assert_eq!(c.level_of(8), 4);
        // A = 12 residue units: 2^3 <= 12 < 2^4 so L = 4.
        assert_eq!(c.levels(), 4);
        assert_eq!(c.level_of(-3), 2);
    }

    #[test]
    fn fractional_window_levels() {
        // Delta = 0.3 residue units: ratio 1 / 0.3 = 3.33 sits in level 2.
        let i = inst(4, &[1, 1, 1]);
        let t = ResidueTable::enumerate(&i).unwrap();
        let c = CostSpectrum::with_delta(&i, &t, 0.3 / 16.0, 1.0).unwrap();
        assert_eq!(c.level_of(1), 2);
        assert_eq!(c.level_of(3), 4); // 3 / 0.3 = 10, 8 <= 10 < 16
        assert_eq!(c.levels(), 4);
    }

    #[test]
    fn degenerate_window_flags_instead_of_failing() {
        let i = inst(4, &[1, 2, 3]);
        let t = ResidueTable::enumerate(&i).unwrap();
        let c = CostSpectrum::with_delta(&i, &t, 1.0, 1.0).unwrap();
        assert!(c.is_degenerate());
        assert_eq!(c.levels(), 0);
        assert_eq!(c.d0(), 8);
        assert!(CostSpectrum::build(&i, &t, 0.0).is_err());
        assert!(CostSpectrum::build(&i, &t, f64::NAN).is_err());
    }

    #[test]
    fn n15_instance_has_few_dozen_ground_states() {
        let i = SppInstance::generate(15, 25, 1).unwrap();
        let t = ResidueTable::enumerate(&i).unwrap();
        let c = CostSpectrum::build(&i, &t, DEFAULT_K).unwrap();
        assert!((4..=80).contains(&c.d0()), "d0 = {}", c.d0());
        assert_eq!(c.degeneracies().iter().sum::<u64>(), 1 << 15);
        assert_eq!(c.ground_set().len() as u64, c.d0());
        let a = c.total() / c.delta();
        let l = c.levels() as i32;
        assert!(math::ldexp(1.0, l - 1) <= a && a < math::ldexp(1.0, l));
    }

    #[test]
    fn degeneracies_roughly_double_per_level() {
        for seed in 0..4 {
            let i = SppInstance::generate(14, 25, seed).unwrap();
            let t = ResidueTable::enumerate(&i).unwrap();
            let c = CostSpectrum::build(&i, &t, DEFAULT_K).unwrap();
            let d = c.degeneracies();
            let l = c.levels() as usize;
            let mut ratios: Vec<f64> = (2..=l - 4).map(|k| d[k + 1] as f64 / d[k] as f64).collect();
            ratios.sort_by(f64::total_cmp);
            let median = ratios[(ratios.len() - 1) / 2];
            assert!((1.5..=2.6).contains(&median), "seed {seed}: median ratio {median}");
        }
    }

    #[test]
    fn brute_force_examples() {
        let (m, opt) = brute_force_min_residue(&inst(4, &[3, 5, 8])).unwrap();
        assert_eq!(m, 0);
        // signs (+,+,-): z = 100 in z_0 z_1 z_2 order, index 0b100.
        assert!(opt.contains(&0b100) && opt.contains(&0b011));
        assert_eq!(brute_force_min_residue(&inst(1, &[1, 1])).unwrap().0, 0);
        assert_eq!(brute_force_min_residue(&inst(5, &[32])).unwrap(), (32, vec![0, 1]));
    }

    proptest! {
        #[test]
        fn residue_invariants(seed in any::<u64>(), n in 1usize..12, b in 1u32..40) {
            let i = SppInstance::generate(n, b, seed).unwrap();
            let t = ResidueTable::enumerate(&i).unwrap();
            let c = CostSpectrum::build(&i, &t, 3.0).unwrap();
            let total = i.alpha_sum() as i64;
            prop_assert_eq!(c.degeneracies().iter().sum::<u64>(), 1u64 << n);
            prop_assert_eq!(c.d0() % 2, 0);
            for z in 0..i.dim() {
                let zc = i.complement(z);
                prop_assert_eq!(t.residue(zc), -t.residue(z));
                prop_assert!(t.residue(z).abs() <= total);
                prop_assert_eq!(c.cost(z), c.cost(zc));
                prop_assert!(c.cost(z) as u32 <= c.levels());
            }
            // Quadratic spin-glass form of the squared residue.
            let z = (seed as usize) & (i.dim() - 1);
            let s: Vec<i128> = (0..n).map(|j| 1 - 2 * ((z >> j) & 1) as i128).collect();
            let quad: i128 = (0..n)
                .flat_map(|p| (0..n).map(move |q| (p, q)))
                .map(|(p, q)| i.alphas()[p] as i128 * i.alphas()[q] as i128 * s[p] * s[q])
                .sum();
            prop_assert_eq!((t.residue(z) as i128).pow(2), quad);
            // Costs are monotone in |residue|.
            let ordered: Vec<u8> = t.sorted_order().iter().map(|&z| c.cost(z as usize)).collect();
            prop_assert!(ordered.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
