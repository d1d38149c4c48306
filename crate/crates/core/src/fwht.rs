//! In-place fast Walsh–Hadamard transform over complex amplitudes.
//!
//! The transform is unnormalized: applying it twice multiplies by `len`.

use num_complex::Complex64;

/// Unnormalized Walsh–Hadamard transform. `data.len()` must be a power of two.
pub fn fwht(data: &mut [Complex64]) {
    let len = data.len();
    assert!(len.is_power_of_two(), "fwht length {len} is not a power of two");
    let mut half = 1;
    // Two butterfly layers per pass while possible.
    while half * 4 <= len {
        for block in data.chunks_exact_mut(half * 4) {
            let (lo, hi) = block.split_at_mut(half * 2);
            let (q0, q1) = lo.split_at_mut(half);
            let (q2, q3) = hi.split_at_mut(half);
            for i in 0..half {
                let (a, b, c, d) = (q0[i], q1[i], q2[i], q3[i]);
                let (s0, d0) = (a + b, a - b);
                let (s1, d1) = (c + d, c - d);
                q0[i] = s0 + s1;
                q1[i] = d0 + d1;
                q2[i] = s0 - s1;
                q3[i] = d0 - d1;
            }
        }
        half *= 4;
    }
    if half * 2 <= len {
        for block in data.chunks_exact_mut(half * 2) {
            let (lo, hi) = block.split_at_mut(half);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
    }
}

/// Orthonormal transform (`2^{-n/2}` scaling); it is its own inverse.
pub fn fwht_normalized(data: &mut [Complex64]) {
    fwht(data);
    let scale = 1.0 / libm::sqrt(data.len() as f64);
    for x in data.iter_mut() {
        *x *= scale;
    }
}
