//! Complete graphs with i.i.d. Exp(1) edge weights.
//!
//! Vertices are `0..n`. The weight of edge `{i, j}` with `i < j` is stored at
//! position `i * (2n - i - 1) / 2 + (j - i - 1)` of a dense array, i.e. the
//! strict upper triangle in row-major order. A generated instance draws edge
//! number `e` of that order from position `e` of its seed's stream, so
//! [`LazyInstance`] can evaluate any single weight without building the array.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Seed;

/// Default cap on the memory taken by a dense weight array (2 GiB).
pub const DEFAULT_MAX_WEIGHT_BYTES: u128 = 2 << 30;

/// Inverse CDF of Exp(1), without the domain check.
#[inline]
pub fn exp_quantile(u: f64) -> f64 {
    -(-u).ln_1p()
}

/// Maps a uniform `u` in `[0, 1)` to an Exp(1) variate, `-ln(1 - u)`.
pub fn sample_exp(u: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::Domain(format!("uniform {u} is outside [0, 1)")));
    }
    Ok(exp_quantile(u))
}

#[inline]
pub(crate) fn edge_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

pub fn edge_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Read access to the weights of a complete graph.
pub trait EdgeWeights: Sync {
    fn n(&self) -> usize;

    /// Weight of edge `{i, j}`; `i != j`, both below `n`. Not range checked in
    /// release builds.
    fn w(&self, i: usize, j: usize) -> f64;
}

/// A realized complete graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    n: usize,
    weights: Vec<f64>,
    seed: Option<Seed>,
}

impl Instance {
    /// Builds an instance from an upper-triangular, row-major weight array.
    pub fn from_weights(n: usize, weights: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("n = {n}, need n >= 2")));
        }
        if weights.len() != edge_count(n) {
            return Err(Error::InvalidArgument(format!(
                "expected {} weights for n = {n}, got {}",
                edge_count(n),
                weights.len()
            )));
        }
        if let Some(bad) = weights.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "weight #{bad} = {} is not positive and finite",
                weights[bad]
            )));
        }
        Ok(Self {
            n,
            weights,
            seed: None,
        })
    }

    /// Builds an instance by evaluating `f(i, j)` for every `i < j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut weights = Vec::with_capacity(edge_count(n));
        for i in 0..n {
            for j in i + 1..n {
                weights.push(f(i, j));
            }
        }
        Self::from_weights(n, weights)
    }

    /// Weight of edge `{i, j}` with range and self-loop checks.
    pub fn edge_weight(&self, i: usize, j: usize) -> Result<f64> {
        if i >= self.n || j >= self.n {
            return Err(Error::Domain(format!(
                "vertex out of range: ({i}, {j}) with n = {}",
                self.n
            )));
        }
        if i == j {
            return Err(Error::Domain(format!("no self loop at vertex {i}")));
        }
        Ok(self.w(i, j))
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn seed(&self) -> Option<Seed> {
        self.seed
    }

    /// Replaces the weights, keeping `n`. Used by weight couplings.
    pub(crate) fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        let mut out = Self::from_weights(self.n, weights)?;
        out.seed = self.seed;
        Ok(out)
    }
}

impl EdgeWeights for Instance {
    #[inline]
    fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn w(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.weights[edge_index(self.n, a, b)]
    }
}

fn check_size(n: usize, max_bytes: u128) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n = {n}, need n >= 2")));
    }
    let bytes = edge_count(n) as u128 * std::mem::size_of::<f64>() as u128;
    if bytes > max_bytes {
        return Err(Error::Resource {
            n,
            bytes,
            cap: max_bytes,
        });
    }
    Ok(())
}

/// Generates an instance under the default memory cap.
pub fn gen_instance(n: usize, seed: Seed) -> Result<Instance> {
    gen_instance_capped(n, seed, DEFAULT_MAX_WEIGHT_BYTES)
}

pub fn gen_instance_capped(n: usize, seed: Seed, max_bytes: u128) -> Result<Instance> {
    check_size(n, max_bytes)?;
    let stream = seed.stream();
    let weights = (0..edge_count(n) as u64)
        .map(|e| exp_quantile(stream.uniform_at(e)))
        .collect();
    Ok(Instance {
        n,
        weights,
        seed: Some(seed),
    })
}

/// An instance whose weights are recomputed from the seed on every access.
///
/// Reads agree bit-for-bit with [`gen_instance`] for the same `(n, seed)`.
#[derive(Debug, Clone)]
pub struct LazyInstance {
    n: usize,
    seed: Seed,
    stream: crate::rng::Stream,
}

impl LazyInstance {
    pub fn new(n: usize, seed: Seed) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("n = {n}, need n >= 2")));
        }
        Ok(Self {
            n,
            seed,
            stream: seed.stream(),
        })
    }

    pub fn materialize(&self) -> Result<Instance> {
        gen_instance(self.n, self.seed)
    }
}

impl EdgeWeights for LazyInstance {
    #[inline]
    fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn w(&self, i: usize, j: usize) -> f64 {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        exp_quantile(self.stream.uniform_at(edge_index(self.n, a, b) as u64))
    }
}
