//! In-place fast Walsh-Hadamard transform in the Sylvester ordering,
//! `H_1 = [1]`, `H_{2s} = [[H_s, H_s], [H_s, -H_s]]`, so
//! `H[i, j] = (-1)^{popcount(i & j)}`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Replaces `v` by `H_s v` where `s = v.len()` must be a power of two.
/// Entries of `H_s` are unnormalized (+-1).
pub fn fwht<T: Scalar>(v: &mut [T]) -> Result<()> {
    let s = v.len();
    if !s.is_power_of_two() {
        return Err(Error::argument(format!(
            "Hadamard transform needs a power-of-two length, got {s}"
        )));
    }
    let mut h = 1;
    while h < s {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for i in 0..h {
                let a = lo[i];
                let b = hi[i];
                lo[i] = a + b;
                hi[i] = a - b;
            }
        }
        h *= 2;
    }
    Ok(())
}

/// `H[i, j]` of the Sylvester-ordered Hadamard matrix.
pub fn hadamard_entry(i: usize, j: usize) -> f64 {
    if (i & j).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}
