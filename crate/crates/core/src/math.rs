//! Floating point helpers that work without `std`.

pub use libm::{cos, exp, fabs, floor, log, log2, sin, sqrt};

/// `x * 2^e`, exact unless it under- or overflows.
#[inline]
pub fn ldexp(x: f64, e: i32) -> f64 {
    libm::scalbn(x, e)
}

/// Pairwise summation. The result depends only on the order of `xs`, so it
/// is reproducible bit for bit.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if xs.len() <= BLOCK {
        let mut acc = 0.0;
        for &x in xs {
            acc += x;
        }
        acc
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

/// Pairwise sum of `f(i)` for `i in 0..len`.
pub fn pairwise_sum_by(len: usize, f: &impl Fn(usize) -> f64) -> f64 {
    fn go(lo: usize, hi: usize, f: &impl Fn(usize) -> f64) -> f64 {
        if hi - lo <= 64 {
            let mut acc = 0.0;
            for i in lo..hi {
                acc += f(i);
            }
            acc
        } else {
            let mid = lo + (hi - lo) / 2;
            go(lo, mid, f) + go(mid, hi, f)
        }
    }
    go(0, len, f)
}

/// Binomial coefficient as `u64` (exact for the sizes used here).
pub fn binomial(n: u32, k: u32) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k) as u64;
    let n = n as u64;
    let mut acc = 1u64;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Ordinary least squares fit `y = slope * x + intercept`.
///
/// Returns `None` for fewer than two points or a degenerate abscissa.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let m = xs.len() as f64;
    let mx = pairwise_sum(xs) / m;
    let my = pairwise_sum(ys) / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}
