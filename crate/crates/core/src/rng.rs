//! Splittable counter-based random streams.
//!
//! Every stream is identified by a [`Seed`]: a master seed plus a purpose
//! label and a trial index. The stream key is
//!
//! ```text
//! key = fmix(fmix(fmix(master) ^ purpose) ^ trial)
//! fmix(x) = splitmix64_finalizer(x + 0x9E3779B97F4A7C15)
//! ```
//!
//! and the `c`-th output (counting from 0) is
//! `splitmix64_finalizer(key + (c + 1) * 0x9E3779B97F4A7C15)`, all arithmetic
//! wrapping modulo 2^64. This is SplitMix64 started from `key`, but because
//! the state is a pure function of the counter any position can be read
//! directly. Purpose strings are hashed with 64-bit FNV-1a.
//!
//! Uniform reals use the top 52 bits `k` of an output and return
//! `(k + 0.5) / 2^52`, which lies strictly inside `(0, 1)`.

use serde::{Deserialize, Serialize};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const TWO_POW_52: f64 = 4_503_599_627_370_496.0;

#[inline]
fn splitmix_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[inline]
fn fmix(x: u64) -> u64 {
    splitmix_finalize(x.wrapping_add(GOLDEN_GAMMA))
}

/// 64-bit FNV-1a hash of a purpose label.
pub fn purpose_id(tag: &str) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in tag.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Combines a purpose id with an extra label (for example a vertex count).
pub fn sub_purpose(purpose: u64, label: u64) -> u64 {
    fmix(purpose ^ fmix(label))
}

/// Identifies one independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Seed {
    pub master: u64,
    pub purpose: u64,
    pub trial: u64,
}

impl Seed {
    pub fn new(master: u64, purpose: &str, trial: u64) -> Self {
        Self {
            master,
            purpose: purpose_id(purpose),
            trial,
        }
    }

    pub fn with_purpose_id(master: u64, purpose: u64, trial: u64) -> Self {
        Self {
            master,
            purpose,
            trial,
        }
    }

    /// Same master and purpose, different trial.
    pub fn trial(self, trial: u64) -> Self {
        Self { trial, ..self }
    }

    pub fn key(&self) -> u64 {
        fmix(fmix(fmix(self.master) ^ self.purpose) ^ self.trial)
    }

    pub fn stream(&self) -> Stream {
        Stream::from_key(self.key())
    }
}

/// A position-addressable random stream.
#[derive(Debug, Clone)]
pub struct Stream {
    key: u64,
    counter: u64,
}

impl Stream {
    pub fn from_key(key: u64) -> Self {
        Self { key, counter: 0 }
    }

    /// Output at absolute position `counter`, without moving the cursor.
    #[inline]
    pub fn u64_at(&self, counter: u64) -> u64 {
        splitmix_finalize(
            self.key
                .wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)),
        )
    }

    #[inline]
    pub fn uniform_at(&self, counter: u64) -> f64 {
        to_open_unit(self.u64_at(counter))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let x = self.u64_at(self.counter);
        self.counter = self.counter.wrapping_add(1);
        x
    }

    /// Uniform in (0, 1).
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        to_open_unit(self.next_u64())
    }

    /// Exp(rate) by inverse CDF.
    #[inline]
    pub fn next_exp(&mut self, rate: f64) -> f64 {
        crate::instance::exp_quantile(self.next_uniform()) / rate
    }

    /// Uniform integer in `0..bound` (Lemire's multiply-shift with rejection).
    pub fn next_below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "bound must be positive");
        let threshold = bound.wrapping_neg() % bound;
        loop {
            let m = u128::from(self.next_u64()) * u128::from(bound);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }

    pub fn position(&self) -> u64 {
        self.counter
    }
}

#[inline]
fn to_open_unit(x: u64) -> f64 {
    ((x >> 12) as f64 + 0.5) / TWO_POW_52
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Seed::new(7, "instance", 3).stream();
        let mut b = Seed::new(7, "instance", 3).stream();
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn labels_separate_streams() {
        let base = Seed::new(7, "instance", 3);
        let others = [
            Seed::new(8, "instance", 3),
            Seed::new(7, "instances", 3),
            Seed::new(7, "instance", 4),
        ];
        let head: Vec<u64> = {
            let mut s = base.stream();
            (0..8).map(|_| s.next_u64()).collect()
        };
        for o in others {
            assert_ne!(o.key(), base.key());
            let mut s = o.stream();
            let other: Vec<u64> = (0..8).map(|_| s.next_u64()).collect();
            assert_ne!(head, other);
        }
    }

    #[test]
    fn random_access_matches_sequential() {
        let seed = Seed::new(1, "x", 0);
        let mut s = seed.stream();
        let r = seed.stream();
        for c in 0..50 {
            assert_eq!(s.next_u64(), r.u64_at(c));
        }
    }

    #[test]
    fn uniforms_stay_inside_open_interval() {
        assert!(to_open_unit(0) > 0.0);
        assert!(to_open_unit(u64::MAX) < 1.0);
    }

    #[test]
    fn next_below_in_range() {
        let mut s = Seed::new(3, "below", 0).stream();
        let mut seen = [0usize; 5];
        for _ in 0..5000 {
            seen[s.next_below(5) as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800));
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(purpose_id(""), 0xCBF2_9CE4_8422_2325);
        assert_eq!(purpose_id("a"), 0xAF63_DC4C_8601_EC8C);
    }
}
