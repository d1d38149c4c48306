//! State vectors and matrix-free Hamiltonians.
//!
//! `H(s) = alpha(s) V + beta(s) (H_P + shift)` where
//! `V = -sum_i B_i X_i - sum_{i<j} J_ij X_i X_j` is the transverse-field
//! driver and `H_P` is diagonal with the cost level of each bitstring.
//! Index bit `j` is qubit `j`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::math;
use crate::partition::CostSpectrum;
use crate::{Error, Result};

/// Largest `n` for which [`dense_hamiltonian`] builds a matrix.
pub const MAX_DENSE_N: usize = 12;

/// `2^n` complex amplitudes indexed by bitstring.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1 << n {
            return Err(Error::DimensionMismatch { expected: 1 << n, found: amps.len() });
        }
        Ok(StateVector { n, amps })
    }

    pub fn zeros(n: usize) -> Self {
        StateVector { n, amps: vec![Complex64::new(0.0, 0.0); 1 << n] }
    }

    /// Uniform superposition `2^{-n/2} sum_z |z>`, the ground state of the
    /// driver for non-negative fields and couplings.
    pub fn symmetric(n: usize) -> Self {
        let amp = math::ldexp(1.0, -(n as i32)).sqrt();
        StateVector { n, amps: vec![Complex64::new(amp, 0.0); 1 << n] }
    }

    /// Computational basis state `|z>`.
    pub fn basis(n: usize, z: usize) -> Self {
        let mut s = Self::zeros(n);
        s.amps[z] = Complex64::new(1.0, 0.0);
        s
    }

    /// Real vector lifted to complex amplitudes.
    pub fn from_real(n: usize, xs: &[f64]) -> Result<Self> {
        Self::new(n, xs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        math::pairwise_sum_by(self.amps.len(), &|i| self.amps[i].norm_sqr())
    }

    pub fn norm(&self) -> f64 {
        math::sqrt(self.norm_sqr())
    }

    pub fn normalize(&mut self) {
        let inv = 1.0 / self.norm();
        for a in &mut self.amps {
            *a *= inv;
        }
    }

    /// `<self|other>`, conjugating `self`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        check_dim(self.dim(), other.dim())?;
        let re = math::pairwise_sum_by(self.dim(), &|i| (self.amps[i].conj() * other.amps[i]).re);
        let im = math::pairwise_sum_by(self.dim(), &|i| (self.amps[i].conj() * other.amps[i]).im);
        Ok(Complex64::new(re, im))
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Largest `|self_z - other_z|`.
    pub fn max_abs_diff(&self, other: &StateVector) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// Flat checkpoint encoding: `(re, im)` pairs of little-endian `f64`.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.dim() * 16);
        for a in &self.amps {
            out.extend_from_slice(&a.re.to_le_bytes());
            out.extend_from_slice(&a.im.to_le_bytes());
        }
        out
    }

    /// Inverse of [`StateVector::to_le_bytes`]; `n` is inferred from the length.
    pub fn from_le_bytes(bytes: &[u8]) -> Result<Self> {
        let count = bytes.len() / 16;
        if !bytes.len().is_multiple_of(16) || !count.is_power_of_two() {
            return Err(Error::invalid(format!(
                "state checkpoint of {} bytes is not 16 * 2^n",
                bytes.len()
            )));
        }
        let word = |i: usize| {
            let mut buf = [0u8; 8];
            buf.copy_from_slice(&bytes[i * 8..i * 8 + 8]);
            f64::from_le_bytes(buf)
        };
        let amps = (0..count).map(|k| Complex64::new(word(2 * k), word(2 * k + 1))).collect();
        Ok(StateVector { n: count.trailing_zeros() as usize, amps })
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Local fields `B_i` and symmetric couplings `J_ij` of the driver.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DriverParams {
    fields: Vec<f64>,
    /// Row-major `n x n`; the diagonal is ignored.
    couplings: Vec<f64>,
}

impl DriverParams {
    /// `B_i = 1`, `J_ij = 0`.
    pub fn uniform(n: usize) -> Self {
        DriverParams { fields: vec![1.0; n], couplings: vec![0.0; n * n] }
    }

    pub fn new(fields: Vec<f64>, couplings: Vec<f64>) -> Result<Self> {
        let n = fields.len();
        check_dim(n * n, couplings.len())?;
        for i in 0..n {
            for j in 0..i {
                if couplings[i * n + j] != couplings[j * n + i] {
                    return Err(Error::invalid(format!("J is not symmetric at ({i}, {j})")));
                }
            }
        }
        if fields.iter().chain(&couplings).any(|x| !x.is_finite()) {
            return Err(Error::invalid("driver parameters must be finite"));
        }
        Ok(DriverParams { fields, couplings })
    }

    pub fn n(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i * self.n() + j]
    }

    pub fn has_couplings(&self) -> bool {
        let n = self.n();
        (0..n).any(|i| (0..i).any(|j| self.coupling(i, j) != 0.0))
    }

    /// Whether the uniform superposition is a driver ground state.
    pub fn is_nonnegative(&self) -> bool {
        self.fields.iter().all(|&b| b >= 0.0) && self.couplings.iter().all(|&j| j >= 0.0)
    }

    /// Eigenvalue of `V` on the Hadamard-transformed basis state `H^n |w>`,
    /// where `X_i` acts as `(-1)^{w_i}`.
    pub fn walsh_eigenvalue(&self, w: usize) -> f64 {
        let n = self.n();
        let x = |i: usize| if w >> i & 1 == 0 { 1.0 } else { -1.0 };
        let mut acc = 0.0;
        for i in 0..n {
            acc -= self.fields[i] * x(i);
            for j in 0..i {
                let jij = self.couplings[i * n + j];
                if jij != 0.0 {
                    acc -= jij * x(i) * x(j);
                }
            }
        }
        acc
    }

    /// Largest `|eigenvalue|` of `V`.
    pub fn spectral_radius(&self) -> f64 {
        if !self.has_couplings() {
            return self.fields.iter().map(|b| b.abs()).sum();
        }
        (0..1usize << self.n()).map(|w| self.walsh_eigenvalue(w).abs()).fold(0.0, f64::max)
    }
}

/// A diagonal operator stored as a small table of distinct values plus a
/// per-index level, so phase factors cost one `sincos` per level per step.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelDiagonal {
    values: Vec<f64>,
    index: Vec<u32>,
}

impl LevelDiagonal {
    pub fn from_values(xs: &[f64]) -> Self {
        let mut values: Vec<f64> = xs.to_vec();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let index = xs
            .iter()
            .map(|x| values.binary_search_by(|v| v.total_cmp(x)).unwrap_or(0) as u32)
            .collect();
        LevelDiagonal { values, index }
    }

    /// Driver eigenvalues in the Walsh basis. With `B_i = B`, `J = 0` there are
    /// only `n + 1` distinct values, `-(n - 2 popcount(w)) B`.
    pub fn driver(params: &DriverParams) -> Self {
        let dim = 1usize << params.n();
        let b0 = params.fields().first().copied().unwrap_or(0.0);
        if !params.has_couplings() && params.fields().iter().all(|&b| b == b0) {
            let n = params.n() as f64;
            let values = (0..=params.n()).map(|m| -(n - 2.0 * m as f64) * b0).collect();
            let index = (0..dim).map(|w| w.count_ones()).collect();
            // Zero fields collapse every level onto one value.
            let mut d = LevelDiagonal { values, index };
            if b0 == 0.0 {
                d = LevelDiagonal { values: vec![0.0], index: vec![0; dim] };
            }
            return d;
        }
        let xs: Vec<f64> = (0..dim).map(|w| params.walsh_eigenvalue(w)).collect();
        Self::from_values(&xs)
    }

    /// Problem Hamiltonian diagonal `E_z + shift`.
    pub fn problem(costs: &CostSpectrum, shift: f64) -> Self {
        let values = (0..=costs.levels()).map(|k| k as f64 + shift).collect();
        let index = costs.costs().iter().map(|&c| c as u32).collect();
        LevelDiagonal { values, index }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index(&self) -> &[u32] {
        &self.index
    }

    pub fn value(&self, i: usize) -> f64 {
        self.values[self.index[i] as usize]
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// `data[i] *= exp(-i * coeff * value(i)) * scale`.
    pub fn apply_phase(&self, coeff: f64, scale: f64, data: &mut [Complex64], table: &mut Vec<Complex64>) {
        table.clear();
        table.extend(self.values.iter().map(|&v| {
            let theta = -coeff * v;
            Complex64::new(scale * math::cos(theta), scale * math::sin(theta))
        }));
        for (x, &k) in data.iter_mut().zip(&self.index) {
            *x *= table[k as usize];
        }
    }
}

/// Interpolation coefficients `alpha(s)`, `beta(s)` and a constant energy
/// offset added to the problem Hamiltonian.
#[derive(Clone, Copy)]
pub struct Schedule {
    alpha: fn(f64) -> f64,
    beta: fn(f64) -> f64,
    energy_shift: f64,
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Schedule")
            .field("alpha(0.5)", &(self.alpha)(0.5))
            .field("beta(0.5)", &(self.beta)(0.5))
            .field("energy_shift", &self.energy_shift)
            .finish()
    }
}

impl Default for Schedule {
    fn default() -> Self {
        Self::linear()
    }
}

impl Schedule {
    /// `alpha(s) = 1 - s`, `beta(s) = s`.
    pub fn linear() -> Self {
        Schedule { alpha: |s| 1.0 - s, beta: |s| s, energy_shift: 0.0 }
    }

    /// Arbitrary coefficient functions. Endpoint conditions are not enforced
    /// here; see [`Schedule::has_standard_endpoints`].
    pub fn custom(alpha: fn(f64) -> f64, beta: fn(f64) -> f64) -> Self {
        Schedule { alpha, beta, energy_shift: 0.0 }
    }

    pub fn with_shift(mut self, energy_shift: f64) -> Self {
        self.energy_shift = energy_shift;
        self
    }

    pub fn alpha(&self, s: f64) -> f64 {
        (self.alpha)(s)
    }

    pub fn beta(&self, s: f64) -> f64 {
        (self.beta)(s)
    }

    pub fn energy_shift(&self) -> f64 {
        self.energy_shift
    }

    /// `H(0) = V` and `H(1) = H_P`.
    pub fn has_standard_endpoints(&self) -> bool {
        self.alpha(0.0) == 1.0 && self.beta(0.0) == 0.0 && self.alpha(1.0) == 0.0 && self.beta(1.0) == 1.0
    }
}

/// `out = V psi`, bit-flip form of the driver.
pub fn driver_into(params: &DriverParams, psi: &[Complex64], out: &mut [Complex64]) -> Result<()> {
    let n = params.n();
    check_dim(1 << n, psi.len())?;
    check_dim(1 << n, out.len())?;
    let couplings = params.has_couplings();
    for (z, o) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &b) in params.fields().iter().enumerate() {
            acc -= psi[z ^ (1 << i)] * b;
        }
        if couplings {
            for i in 0..n {
                for j in 0..i {
                    let jij = params.coupling(i, j);
                    if jij != 0.0 {
                        acc -= psi[z ^ (1 << i) ^ (1 << j)] * jij;
                    }
                }
            }
        }
        *o = acc;
    }
    Ok(())
}

/// `V psi`.
pub fn apply_driver(params: &DriverParams, psi: &StateVector) -> Result<StateVector> {
    let mut out = StateVector::zeros(psi.n());
    driver_into(params, psi.amplitudes(), out.amplitudes_mut())?;
    Ok(out)
}

/// `(H_P + shift) psi`.
pub fn apply_problem(costs: &CostSpectrum, shift: f64, psi: &StateVector) -> Result<StateVector> {
    check_dim(costs.dim(), psi.dim())?;
    let amps = psi
        .amplitudes()
        .iter()
        .zip(costs.costs())
        .map(|(&a, &c)| a * (c as f64 + shift))
        .collect();
    StateVector::new(psi.n(), amps)
}

/// The interpolated Hamiltonian `H(s)` for one instance.
#[derive(Debug, Clone)]
pub struct Hamiltonian<'a> {
    params: &'a DriverParams,
    costs: &'a CostSpectrum,
    schedule: Schedule,
}

impl<'a> Hamiltonian<'a> {
    pub fn new(params: &'a DriverParams, costs: &'a CostSpectrum, schedule: Schedule) -> Result<Self> {
        check_dim(1 << params.n(), costs.dim())?;
        Ok(Hamiltonian { params, costs, schedule })
    }

    pub fn n(&self) -> usize {
        self.params.n()
    }

    pub fn params(&self) -> &DriverParams {
        self.params
    }

    pub fn costs(&self) -> &CostSpectrum {
        self.costs
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    /// `out = H(s) psi`.
    pub fn apply_into(&self, s: f64, psi: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        driver_into(self.params, psi, out)?;
        let a = self.schedule.alpha(s);
        let b = self.schedule.beta(s);
        let shift = self.schedule.energy_shift();
        for ((o, &p), &c) in out.iter_mut().zip(psi).zip(self.costs.costs()) {
            *o = *o * a + p * (b * (c as f64 + shift));
        }
        Ok(())
    }

    pub fn apply(&self, s: f64, psi: &StateVector) -> Result<StateVector> {
        let mut out = StateVector::zeros(psi.n());
        self.apply_into(s, psi.amplitudes(), out.amplitudes_mut())?;
        Ok(out)
    }

    /// Upper bound on `|H(s)|` over `s` in `[0, 1]` for the standard schedule:
    /// `max(|V|, max |E_z + shift|)`.
    pub fn energy_scale(&self) -> f64 {
        let shift = self.schedule.energy_shift();
        let top = self.costs.levels() as f64 + shift;
        self.params.spectral_radius().max(shift.abs()).max(top.abs())
    }
}

/// `H(s) psi = alpha(s) V psi + beta(s) (H_P + shift) psi`.
pub fn apply_hamiltonian(
    s: f64,
    schedule: &Schedule,
    params: &DriverParams,
    costs: &CostSpectrum,
    psi: &StateVector,
) -> Result<StateVector> {
    Hamiltonian::new(params, costs, *schedule)?.apply(s, psi)
}

/// Dense real symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.dim + c]
    }

    /// Exact symmetry, which for real entries is Hermiticity.
    pub fn is_symmetric(&self) -> bool {
        (0..self.dim).all(|r| (0..r).all(|c| self.get(r, c) == self.get(c, r)))
    }

    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.data
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(x).map(|(&h, &v)| v * h).sum())
            .collect()
    }
}

/// Explicit matrix of `H(s)`; an oracle for tests and the spectral module.
pub fn dense_hamiltonian(
    s: f64,
    schedule: &Schedule,
    params: &DriverParams,
    costs: &CostSpectrum,
) -> Result<DenseMatrix> {
    let n = params.n();
    if n > MAX_DENSE_N {
        return Err(Error::Capacity { what: "dense Hamiltonian", n, max: MAX_DENSE_N });
    }
    check_dim(1 << n, costs.dim())?;
    let dim = 1usize << n;
    let a = schedule.alpha(s);
    let b = schedule.beta(s);
    let shift = schedule.energy_shift();
    let mut data = vec![0.0; dim * dim];
    for z in 0..dim {
        data[z * dim + z] = b * (costs.cost(z) as f64 + shift);
        for i in 0..n {
            data[z * dim + (z ^ (1 << i))] -= a * params.fields()[i];
            for j in 0..i {
                let jij = params.coupling(i, j);
                if jij != 0.0 {
                    data[z * dim + (z ^ (1 << i) ^ (1 << j))] -= a * jij;
                }
            }
        }
    }
    Ok(DenseMatrix { dim, data })
}
