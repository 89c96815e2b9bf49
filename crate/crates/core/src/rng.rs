//! Deterministic random number generation.
//!
//! Every stochastic component in this crate draws from [`DetRng`], a
//! xoshiro256++ generator seeded through SplitMix64. Independent streams are
//! derived from a `(seed, stream)` pair, which makes per-user and
//! per-simulation results a pure function of their indices: workers can run
//! in any order and still reproduce the sequential output bit for bit.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

const SPLITMIX_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer; also used to decorrelate stream ids.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn splitmix_next(state: &mut u64) -> u64 {
    *state = state.wrapping_add(SPLITMIX_GAMMA);
    mix(*state)
}

/// Derives a child seed from a parent seed and a stream index.
#[inline]
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    mix(seed ^ mix(stream.wrapping_add(1).wrapping_mul(SPLITMIX_GAMMA)))
}

/// Deterministic xoshiro256++ generator.
#[derive(Clone, Debug)]
pub struct DetRng {
    s: [u64; 4],
    gauss_spare: Option<f64>,
}

impl DetRng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let mut s = [0u64; 4];
        for slot in s.iter_mut() {
            *slot = splitmix_next(&mut sm);
        }
        // xoshiro state must not be all zero; splitmix cannot produce that
        // from four consecutive outputs, but guard anyway.
        if s == [0, 0, 0, 0] {
            s[0] = SPLITMIX_GAMMA;
        }
        DetRng {
            s,
            gauss_spare: None,
        }
    }

    /// Generator for stream `stream` of `seed`; distinct streams are
    /// statistically independent.
    pub fn from_seed_stream(seed: u64, stream: u64) -> Self {
        DetRng::new(derive_seed(seed, stream))
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n). Rejection-sampled, unbiased.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0) is undefined");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Standard normal draw (Marsaglia polar method, spare cached).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.gauss_spare.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let f = math::sqrt(-2.0 * math::ln(s) / s);
                self.gauss_spare = Some(v * f);
                return u * f;
            }
        }
    }

    /// Uniform draw from the unit sphere in `dim` dimensions.
    pub fn unit_vector(&mut self, dim: usize) -> Vec<f64> {
        assert!(dim > 0);
        loop {
            let mut v: Vec<f64> = (0..dim).map(|_| self.normal()).collect();
            if math::normalize(&mut v) {
                return v;
            }
        }
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }

    /// Samples `count` distinct values from [0, n) without replacement.
    /// Order is the draw order, not sorted.
    pub fn sample_distinct(&mut self, n: usize, count: usize) -> Vec<usize> {
        assert!(count <= n, "cannot sample {count} distinct from {n}");
        // Floyd's algorithm: O(count) draws, no O(n) allocation.
        let mut chosen = vec![false; n];
        let mut out = Vec::with_capacity(count);
        for j in (n - count)..n {
            let t = self.below(j + 1);
            let pick = if chosen[t] { j } else { t };
            chosen[pick] = true;
            out.push(pick);
        }
        out
    }
}
