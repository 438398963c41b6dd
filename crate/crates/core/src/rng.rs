//! Counter-based random number generation.
//!
//! Every random quantity in the crate is a pure function of
//! `(seed, stream, counter)`, so any matrix entry or column can be
//! regenerated in isolation and a k x n random matrix is the leading
//! block of the (k' > k) x n matrix drawn with the same seed.

/// Distinct stream constants keep independent uses of one seed decorrelated.
pub mod streams {
    pub const GAUSS_A: u64 = 0x01;
    pub const GAUSS_B: u64 = 0x02;
    pub const SIGN: u64 = 0x03;
    pub const PERMUTE: u64 = 0x04;
    pub const PARAM: u64 = 0x05;
    pub const SUBSPACE: u64 = 0x06;
}

const GOLDEN: u64 = 0x9E3779B97F4A7C15;
const CTR_MIX: u64 = 0xD1B54A32D192ED03;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// 64 uniform bits for `(seed, stream, counter)`.
#[inline]
pub fn bits(seed: u64, stream: u64, ctr: u64) -> u64 {
    let keyed = mix(seed ^ GOLDEN.wrapping_mul(stream.wrapping_add(1)));
    mix(keyed ^ ctr.wrapping_mul(CTR_MIX).wrapping_add(GOLDEN))
}

/// Uniform draw in (0, 1], 53-bit resolution. Never returns 0, so it is
/// safe under a logarithm.
#[inline]
pub fn uniform_open01(seed: u64, stream: u64, ctr: u64) -> f64 {
    (((bits(seed, stream, ctr) >> 11) + 1) as f64) * (1.0 / 9007199254740992.0)
}

/// Standard normal deviate addressed by counter (Box-Muller, cosine leg).
#[inline]
pub fn standard_normal(seed: u64, ctr: u64) -> f64 {
    let u1 = uniform_open01(seed, streams::GAUSS_A, ctr);
    let u2 = uniform_open01(seed, streams::GAUSS_B, ctr);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Random sign in {-1.0, +1.0} addressed by counter.
#[inline]
pub fn sign(seed: u64, ctr: u64) -> f64 {
    if bits(seed, streams::SIGN, ctr) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Counter for the (row, col) entry of a random matrix. Using the column
/// in the high half makes columns independently addressable and rows
/// nested: growing the row count extends each column's counter range
/// without touching existing entries.
#[inline]
pub fn entry_ctr(row: usize, col: usize) -> u64 {
    debug_assert!(row < (1 << 32) && col < (1 << 32));
    ((col as u64) << 32) | row as u64
}

/// Sequential uniform integer in [0, bound) (rejection sampled); used where
/// a stateful stream is acceptable, e.g. shuffles.
pub struct SeqRng {
    seed: u64,
    stream: u64,
    ctr: u64,
}

impl SeqRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        SeqRng { seed, stream, ctr: 0 }
    }

    #[inline]
    pub fn next_bits(&mut self) -> u64 {
        let v = bits(self.seed, self.stream, self.ctr);
        self.ctr += 1;
        v
    }

    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0);
        // Rejection zone keeps the draw exactly uniform.
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let v = self.next_bits();
            if v < zone {
                return v % bound;
            }
        }
    }

    pub fn uniform_open01(&mut self) -> f64 {
        (((self.next_bits() >> 11) + 1) as f64) * (1.0 / 9007199254740992.0)
    }
}

/// First `take` entries of a uniformly random permutation of `0..len`
/// (partial Fisher-Yates driven by the seeded stream).
pub fn permutation_prefix(seed: u64, len: usize, take: usize) -> Vec<u32> {
    assert!(take <= len);
    let mut items: Vec<u32> = (0..len as u32).collect();
    let mut rng = SeqRng::new(seed, streams::PERMUTE);
    for i in 0..take {
        let j = i + rng.below((len - i) as u64) as usize;
        items.swap(i, j);
    }
    items.truncate(take);
    items
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_stream_separated() {
        assert_eq!(bits(7, 1, 42), bits(7, 1, 42));
        assert_ne!(bits(7, 1, 42), bits(7, 2, 42));
        assert_ne!(bits(7, 1, 42), bits(8, 1, 42));
    }

    #[test]
    fn normal_moments() {
        let n = 200_000;
        let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let x = standard_normal(123, i);
            s1 += x;
            s2 += x * x;
            s4 += x * x * x * x;
        }
        let m = n as f64;
        assert!((s1 / m).abs() < 0.01);
        assert!((s2 / m - 1.0).abs() < 0.02);
        assert!((s4 / m - 3.0).abs() < 0.1);
    }

    #[test]
    fn signs_balanced() {
        let n = 100_000;
        let sum: f64 = (0..n).map(|i| sign(99, i)).sum();
        assert!(sum.abs() / (n as f64) < 0.02);
    }

    #[test]
    fn permutation_prefix_is_prefix_of_full() {
        let full = permutation_prefix(5, 64, 64);
        let part = permutation_prefix(5, 64, 16);
        assert_eq!(&full[..16], &part[..]);
        let mut sorted = full.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..64).collect::<Vec<u32>>());
    }

    #[test]
    fn below_is_unbiased_roughly() {
        let mut rng = SeqRng::new(3, 9);
        let mut cnt = [0usize; 7];
        for _ in 0..70_000 {
            cnt[rng.below(7) as usize] += 1;
        }
        for c in cnt {
            assert!((c as f64 - 10_000.0).abs() < 500.0);
        }
    }
}
