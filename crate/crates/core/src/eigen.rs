//! Dense real symmetric eigensolver: Householder tridiagonalization followed
//! by the implicit QL algorithm with Wilkinson-style shifts.
//!
//! Every Hamiltonian in this crate has real matrix elements in the
//! computational basis, so the Hermitian problem is a real symmetric one.
//! Eigenvectors are stored row-wise so both phases sweep contiguous memory.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

const MAX_SWEEPS: usize = 64;

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    dim: usize,
    values: Vec<f64>,
    vectors: Vec<f64>,
}

impl SymmetricEigen {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Eigenvector belonging to `values()[k]`.
    pub fn vector(&self, k: usize) -> &[f64] {
        &self.vectors[k * self.dim..(k + 1) * self.dim]
    }

    /// Keeps only the `m` lowest eigenpairs.
    pub fn truncate(&mut self, m: usize) {
        let m = m.min(self.dim);
        self.values.truncate(m);
        self.vectors.truncate(m * self.dim);
    }
}

/// Diagonalizes the symmetric `dim x dim` row-major matrix `matrix`. Only the
/// lower triangle is read.
pub fn symmetric_eigen(matrix: &[f64], dim: usize) -> Result<SymmetricEigen> {
    if matrix.len() != dim * dim {
        return Err(Error::DimensionMismatch { expected: dim * dim, found: matrix.len() });
    }
    if dim == 0 {
        return Ok(SymmetricEigen { dim, values: Vec::new(), vectors: Vec::new() });
    }
    // w[c * dim + r] holds V[r][c]; for symmetric input the transpose is free.
    let mut w = matrix.to_vec();
    for r in 0..dim {
        for c in 0..r {
            w[r * dim + c] = matrix[r * dim + c];
            w[c * dim + r] = matrix[r * dim + c];
        }
    }
    let mut d = vec![0.0; dim];
    let mut e = vec![0.0; dim];
    tridiagonalize(&mut w, &mut d, &mut e, dim);
    ql_implicit(&mut w, &mut d, &mut e, dim)?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&k| d[k]).collect();
    let mut vectors = Vec::with_capacity(dim * dim);
    for &k in &order {
        vectors.extend_from_slice(&w[k * dim..(k + 1) * dim]);
    }
    Ok(SymmetricEigen { dim, values, vectors })
}

/// Householder reduction to tridiagonal form with accumulated transforms.
/// On return `d` holds the diagonal, `e[1..]` the subdiagonal, and the rows of
/// `w` the orthogonal transformation.
fn tridiagonalize(w: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) {
    macro_rules! v {
        ($r:expr, $c:expr) => {
            w[($c) * n + ($r)]
        };
    }

    for j in 0..n {
        d[j] = v!(n - 1, j);
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for x in &d[..i] {
            scale += x.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v!(i - 1, j);
                v!(i, j) = 0.0;
                v!(j, i) = 0.0;
            }
        } else {
            for x in &mut d[..i] {
                *x /= scale;
                h += *x * *x;
            }
            let f = d[i - 1];
            let mut g = libm::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }

            for j in 0..i {
                let f = d[j];
                v!(j, i) = f;
                let mut g = e[j] + v!(j, j) * f;
                let col = &w[j * n..j * n + i];
                for k in j + 1..i {
                    g += col[k] * d[k];
                    e[k] += col[k] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                let col = &mut w[j * n..j * n + i];
                for k in j..i {
                    col[k] -= f * e[k] + g * d[k];
                }
                d[j] = v!(i - 1, j);
                v!(i, j) = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v!(n - 1, i) = v!(i, i);
        v!(i, i) = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v!(k, i + 1) / h;
            }
            for j in 0..=i {
                let (head, tail) = w.split_at_mut((i + 1) * n);
                let next = &tail[..=i];
                let col = &mut head[j * n..j * n + i + 1];
                let g: f64 = next.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                for k in 0..=i {
                    col[k] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v!(k, i + 1) = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v!(n - 1, j);
        v!(n - 1, j) = 0.0;
    }
    v!(n - 1, n - 1) = 1.0;
    e[0] = 0.0;
}

/// Implicit QL iterations on the tridiagonal matrix, rotating the rows of `w`.
fn ql_implicit(w: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }

        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS {
                    return Err(Error::NoConvergence { index: l });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (lo, hi) = w.split_at_mut((i + 1) * n);
                    let row_i = &mut lo[i * n..];
                    let row_next = &mut hi[..n];
                    for (a, b) in row_i.iter_mut().zip(row_next.iter_mut()) {
                        let h = *b;
                        *b = s * *a + c * h;
                        *a = c * *a - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
