//! Worst-case Steiner weights `W(k, l)`.
//!
//! The first `k` vertices `0..k` are fixed terminals; `l` further terminals
//! are chosen among the remaining vertices to maximize the Steiner weight.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::EdgeWeights;
use crate::steiner::{shortest_paths_all, steiner_exact_with, SteinerDp, SteinerOptions};

/// Default cap on the number of candidate terminal sets examined.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaximalOptions {
    pub steiner: SteinerOptions,
    pub budget: u64,
}

impl Default for MaximalOptions {
    fn default() -> Self {
        Self {
            steiner: SteinerOptions::default(),
            budget: DEFAULT_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalResult {
    pub weight: f64,
    /// The `l` free terminals of a maximizing set, sorted; the lexicographically
    /// smallest among maximizers.
    pub witness: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaximalQuery {
    pub k: usize,
    pub l: usize,
}

impl MaximalQuery {
    pub fn validate(&self, n: usize) -> Result<()> {
        let MaximalQuery { k, l } = *self;
        if k + l == 0 {
            return Err(Error::InvalidArgument("k + l must be at least 1".into()));
        }
        if k + l > n {
            return Err(Error::InvalidArgument(format!(
                "k + l = {} exceeds n = {n}",
                k + l
            )));
        }
        Ok(())
    }
}

struct Best {
    weight: f64,
    witness: Vec<usize>,
}

impl Best {
    fn new() -> Self {
        Self {
            weight: f64::NEG_INFINITY,
            witness: Vec::new(),
        }
    }

    fn offer(&mut self, weight: f64, witness: impl FnOnce() -> Vec<usize>) {
        if weight > self.weight {
            self.weight = weight;
            self.witness = witness();
        } else if weight == self.weight {
            let w = witness();
            if w < self.witness {
                self.witness = w;
            }
        }
    }

    fn finish(self) -> MaximalResult {
        MaximalResult {
            weight: self.weight,
            witness: self.witness,
        }
    }
}

fn binomial(n: u64, r: u64) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc.saturating_mul(u128::from(n - i)) / u128::from(i + 1);
    }
    acc
}

pub fn w_max<W: EdgeWeights + ?Sized>(inst: &W, k: usize, l: usize) -> Result<MaximalResult> {
    w_max_with(inst, k, l, MaximalOptions::default())
}

/// Exact `W(k, l)` together with a maximizing choice of the free terminals.
pub fn w_max_with<W: EdgeWeights + ?Sized>(
    inst: &W,
    k: usize,
    l: usize,
    opts: MaximalOptions,
) -> Result<MaximalResult> {
    let n = inst.n();
    MaximalQuery { k, l }.validate(n)?;
    if k + l > opts.steiner.k_max {
        return Err(Error::Capability(format!(
            "k + l = {} exceeds the Steiner solver limit k_max = {}",
            k + l,
            opts.steiner.k_max
        )));
    }
    let fixed: Vec<usize> = (0..k).collect();
    match (k, l) {
        (0, 1) => Ok(MaximalResult {
            weight: 0.0,
            witness: vec![0],
        }),
        (_, 0) => Ok(MaximalResult {
            weight: steiner_exact_with(inst, &fixed, opts.steiner)?.weight,
            witness: Vec::new(),
        }),
        (1, 1) => {
            let (weight, v) = eccentricity_witness(inst, 0)?;
            Ok(MaximalResult {
                weight,
                witness: vec![v],
            })
        }
        (0, 2) => {
            let (weight, (a, b)) = diameter_witness(inst);
            Ok(MaximalResult {
                weight,
                witness: vec![a, b],
            })
        }
        (_, 1) => {
            let dp = SteinerDp::solve(inst, &fixed, opts.steiner)?;
            let mut best = Best::new();
            for v in k..n {
                best.offer(dp.weight_with(v), || vec![v]);
            }
            Ok(best.finish())
        }
        _ => enumerate(inst, &fixed, l, opts),
    }
}

/// Enumerates `(l-1)`-subsets of the free vertices and scores the last free
/// terminal for every vertex at once from the filled DP table.
fn enumerate<W: EdgeWeights + ?Sized>(
    inst: &W,
    fixed: &[usize],
    l: usize,
    opts: MaximalOptions,
) -> Result<MaximalResult> {
    let n = inst.n();
    let k = fixed.len();
    let candidates = binomial((n - k) as u64, l as u64);
    if candidates > u128::from(opts.budget) {
        return Err(Error::Capability(format!(
            "C({}, {l}) = {candidates} candidate sets exceed the enumeration budget of {}",
            n - k,
            opts.budget
        )));
    }
    let mut best = Best::new();
    for head in (k..n).combinations(l - 1) {
        let mut terminals = fixed.to_vec();
        terminals.extend_from_slice(&head);
        let dp = SteinerDp::solve(inst, &terminals, opts.steiner)?;
        let last = *head.last().expect("l >= 2");
        for v in last + 1..n {
            best.offer(dp.weight_with(v), || {
                let mut w = head.clone();
                w.push(v);
                w
            });
        }
    }
    Ok(best.finish())
}

pub fn eccentricity<W: EdgeWeights + ?Sized>(inst: &W, v: usize) -> Result<f64> {
    Ok(eccentricity_witness(inst, v)?.0)
}

/// Largest distance from `v` and the lowest vertex attaining it.
pub fn eccentricity_witness<W: EdgeWeights + ?Sized>(inst: &W, v: usize) -> Result<(f64, usize)> {
    if v >= inst.n() {
        return Err(Error::Domain(format!("vertex {v} out of range")));
    }
    let (far, d) = shortest_paths_all(inst, v)?.farthest();
    Ok((d, far))
}

/// Largest shortest-path distance over all pairs.
pub fn diameter<W: EdgeWeights + ?Sized>(inst: &W) -> f64 {
    diameter_witness(inst).0
}

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Diameter and its lexicographically smallest realizing pair.
///
/// All-pairs distances are computed on the subgraph of edges no heavier than a
/// threshold `tau`. If every pair ends up within `tau`, every shortest path of
/// the full graph uses only such edges and the distances are exact; otherwise
/// `tau` doubles and the pass repeats.
pub fn diameter_witness<W: EdgeWeights + ?Sized>(inst: &W) -> (f64, (usize, usize)) {
    let n = inst.n();
    let nf = n as f64;
    let mut tau = if n > 2 { 4.0 * nf.ln() / nf } else { f64::INFINITY };
    loop {
        if let Some(res) = sparse_all_pairs_max(inst, tau) {
            return res;
        }
        tau *= 2.0;
    }
}

fn sparse_all_pairs_max<W: EdgeWeights + ?Sized>(inst: &W, tau: f64) -> Option<(f64, (usize, usize))> {
    let n = inst.n();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            let w = inst.w(i, j);
            if w <= tau {
                adj[i].push((j, w));
                adj[j].push((i, w));
            }
        }
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut best = (f64::NEG_INFINITY, (0, 0));
    for s in 0..n {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        done.iter_mut().for_each(|d| *d = false);
        heap.clear();
        dist[s] = 0.0;
        heap.push(Reverse(Entry(0.0, s)));
        let mut settled = 0;
        let mut far = (0.0, s);
        while let Some(Reverse(Entry(d, u))) = heap.pop() {
            if done[u] {
                continue;
            }
            if d > tau {
                return None;
            }
            done[u] = true;
            settled += 1;
            if d > far.0 {
                far = (d, u);
            }
            for &(v, w) in &adj[u] {
                let c = d + w;
                if !done[v] && c < dist[v] {
                    dist[v] = c;
                    heap.push(Reverse(Entry(c, v)));
                }
            }
        }
        if settled < n {
            return None;
        }
        let pair = (s.min(far.1), s.max(far.1));
        if far.0 > best.0 || (far.0 == best.0 && pair < best.1) {
            best = (far.0, pair);
        }
    }
    Some(best)
}
