//! Shortest paths, exact minimum Steiner trees and a brute-force oracle.
//!
//! The exact solver is the Dreyfus–Wagner dynamic program in its
//! "merge, then grow" form: for every nonempty subset `D` of the terminals
//! and every vertex `v`, `dp[D][v]` is the weight of a minimum tree spanning
//! `D ∪ {v}`. Singletons are seeded with 0 at their terminal; larger subsets
//! first merge two complementary halves at a common vertex and then run one
//! Dijkstra pass over the complete graph starting from those merged values.
//! Cost is `O(3^k n + 2^k n^2)` for `k` terminals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::EdgeWeights;

/// Default bound on the number of terminals accepted by [`steiner_exact`].
pub const DEFAULT_K_MAX: usize = 8;

/// Largest graph accepted by [`steiner_bruteforce`].
pub const BRUTEFORCE_MAX_N: usize = 12;

/// Single-source shortest paths restricted to a vertex subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMap {
    pub source: usize,
    /// `f64::INFINITY` for vertices outside the allowed set.
    pub dist: Vec<f64>,
    pub parent: Vec<Option<usize>>,
}

impl DistanceMap {
    pub fn get(&self, v: usize) -> Option<f64> {
        self.dist.get(v).copied().filter(|d| d.is_finite())
    }

    /// Vertices from `source` to `v`, or `None` when `v` was not reached.
    pub fn path_to(&self, v: usize) -> Option<Vec<usize>> {
        self.get(v)?;
        let mut path = vec![v];
        let mut cur = v;
        while let Some(p) = self.parent[cur] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }

    /// Largest finite distance and the lowest vertex attaining it.
    pub fn farthest(&self) -> (usize, f64) {
        let mut best = (self.source, 0.0);
        for (v, &d) in self.dist.iter().enumerate() {
            if d.is_finite() && d > best.1 {
                best = (v, d);
            }
        }
        best
    }
}

/// Dense Dijkstra over `verts`, starting from the values already in `dist`.
///
/// Vertices not listed in `verts` are never touched. Settles in order of
/// `(dist, vertex)`; relaxations use strict improvement.
pub(crate) fn settle_from_potentials<W: EdgeWeights + ?Sized>(
    inst: &W,
    verts: &[usize],
    dist: &mut [f64],
    parent: &mut [Option<usize>],
) {
    let mut open: Vec<usize> = verts.to_vec();
    while !open.is_empty() {
        let mut best_pos = 0;
        for pos in 1..open.len() {
            let (v, b) = (open[pos], open[best_pos]);
            if dist[v] < dist[b] || (dist[v] == dist[b] && v < b) {
                best_pos = pos;
            }
        }
        let u = open.swap_remove(best_pos);
        let du = dist[u];
        if !du.is_finite() {
            break;
        }
        for &v in &open {
            let cand = du + inst.w(u, v);
            if cand < dist[v] {
                dist[v] = cand;
                parent[v] = Some(u);
            }
        }
    }
}

fn sorted_unique(vs: &[usize], n: usize, what: &str) -> Result<Vec<usize>> {
    let mut out = vs.to_vec();
    out.sort_unstable();
    out.dedup();
    if let Some(&v) = out.iter().find(|&&v| v >= n) {
        return Err(Error::InvalidArgument(format!(
            "{what} contains vertex {v}, but n = {n}"
        )));
    }
    Ok(out)
}

/// Exact shortest-path distances from `source` in the subgraph induced by
/// `allowed`.
pub fn shortest_paths<W: EdgeWeights + ?Sized>(
    inst: &W,
    source: usize,
    allowed: &[usize],
) -> Result<DistanceMap> {
    let n = inst.n();
    let allowed = sorted_unique(allowed, n, "allowed set")?;
    if allowed.binary_search(&source).is_err() {
        return Err(Error::InvalidArgument(format!(
            "source {source} is not in the allowed set"
        )));
    }
    let mut dist = vec![f64::INFINITY; n];
    let mut parent = vec![None; n];
    dist[source] = 0.0;
    settle_from_potentials(inst, &allowed, &mut dist, &mut parent);
    Ok(DistanceMap {
        source,
        dist,
        parent,
    })
}

/// Shortest paths from `source` over the whole graph.
pub fn shortest_paths_all<W: EdgeWeights + ?Sized>(inst: &W, source: usize) -> Result<DistanceMap> {
    let all: Vec<usize> = (0..inst.n()).collect();
    shortest_paths(inst, source, &all)
}

/// An exact minimum Steiner tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteinerResult {
    pub terminals: Vec<usize>,
    pub weight: f64,
    /// Sorted `(i, j)` pairs with `i < j`.
    pub edges: Vec<(usize, usize)>,
}

impl SteinerResult {
    pub fn edge_sum<W: EdgeWeights + ?Sized>(&self, inst: &W) -> f64 {
        self.edges.iter().map(|&(i, j)| inst.w(i, j)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SteinerOptions {
    pub k_max: usize,
}

impl Default for SteinerOptions {
    fn default() -> Self {
        Self {
            k_max: DEFAULT_K_MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    /// Singleton seed at its own terminal, or unreachable.
    Seed,
    Edge(usize),
    Merge(usize),
}

/// Filled Dreyfus–Wagner tables for one terminal set.
#[derive(Debug, Clone)]
pub struct SteinerDp {
    n: usize,
    terminals: Vec<usize>,
    dp: Vec<f64>,
    step: Vec<Step>,
}

impl SteinerDp {
    pub fn solve<W: EdgeWeights + ?Sized>(
        inst: &W,
        terminals: &[usize],
        opts: SteinerOptions,
    ) -> Result<Self> {
        let n = inst.n();
        let terminals = sorted_unique(terminals, n, "terminal set")?;
        if terminals.is_empty() {
            return Err(Error::InvalidArgument("terminal set is empty".into()));
        }
        if terminals.len() > opts.k_max {
            return Err(Error::Capability(format!(
                "{} terminals exceed k_max = {}; the exact solver is exponential in the terminal count",
                terminals.len(),
                opts.k_max
            )));
        }
        let k = terminals.len();
        let masks = 1usize << k;
        let mut dp = vec![f64::INFINITY; masks * n];
        let mut step = vec![Step::Seed; masks * n];
        let all: Vec<usize> = (0..n).collect();
        let mut parent = vec![None; n];

        for mask in 1..masks {
            let row = mask * n;
            if mask.is_power_of_two() {
                let t = terminals[mask.trailing_zeros() as usize];
                dp[row + t] = 0.0;
            } else {
                let low = mask & mask.wrapping_neg();
                let rest = mask ^ low;
                // Proper submasks that contain the lowest bit, each split once.
                let mut sub = rest;
                loop {
                    let a = sub | low;
                    if a != mask {
                        let b = mask ^ a;
                        for v in 0..n {
                            let c = dp[a * n + v] + dp[b * n + v];
                            if c < dp[row + v] {
                                dp[row + v] = c;
                                step[row + v] = Step::Merge(a);
                            }
                        }
                    }
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & rest;
                }
            }
            parent.iter_mut().for_each(|p| *p = None);
            settle_from_potentials(inst, &all, &mut dp[row..row + n], &mut parent);
            for (v, p) in parent.iter().enumerate() {
                if let Some(u) = p {
                    step[row + v] = Step::Edge(*u);
                }
            }
        }
        Ok(Self {
            n,
            terminals,
            dp,
            step,
        })
    }

    pub fn terminals(&self) -> &[usize] {
        &self.terminals
    }

    fn full(&self) -> usize {
        (1usize << self.terminals.len()) - 1
    }

    /// Minimum weight of a tree spanning all terminals.
    pub fn weight(&self) -> f64 {
        self.dp[self.full() * self.n + self.terminals[0]]
    }

    /// Minimum weight of a tree spanning the terminals and `v`.
    pub fn weight_with(&self, v: usize) -> f64 {
        self.dp[self.full() * self.n + v]
    }

    /// Edges of the tree realizing [`SteinerDp::weight`].
    pub fn tree<W: EdgeWeights + ?Sized>(&self, inst: &W) -> Vec<(usize, usize)> {
        self.tree_with(inst, self.terminals[0])
    }

    /// Edges of the tree realizing [`SteinerDp::weight_with`].
    pub fn tree_with<W: EdgeWeights + ?Sized>(&self, inst: &W, v: usize) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        let mut work = vec![(self.full(), v)];
        while let Some((mask, mut v)) = work.pop() {
            loop {
                match self.step[mask * self.n + v] {
                    Step::Seed => break,
                    Step::Edge(u) => {
                        edges.push((u.min(v), u.max(v)));
                        v = u;
                    }
                    Step::Merge(a) => {
                        work.push((a, v));
                        work.push((mask ^ a, v));
                        break;
                    }
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut keep: Vec<usize> = self.terminals.clone();
        keep.push(v);
        finish_tree(inst, edges, &keep)
    }
}

/// Reduces an edge set to a forest (heaviest cycle edges dropped) and strips
/// leaves that are not in `keep`.
pub(crate) fn finish_tree<W: EdgeWeights + ?Sized>(
    inst: &W,
    edges: Vec<(usize, usize)>,
    keep: &[usize],
) -> Vec<(usize, usize)> {
    let mut verts: Vec<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    verts.sort_unstable();
    verts.dedup();
    let mut edges = if !verts.is_empty() && edges.len() + 1 != verts.len() {
        spanning_forest(inst, &edges)
    } else {
        edges
    };
    loop {
        let mut degree = std::collections::BTreeMap::<usize, usize>::new();
        for &(a, b) in &edges {
            *degree.entry(a).or_default() += 1;
            *degree.entry(b).or_default() += 1;
        }
        let before = edges.len();
        edges.retain(|&(a, b)| {
            let leaf = |x: usize| degree[&x] == 1 && !keep.contains(&x);
            !(leaf(a) || leaf(b))
        });
        if edges.len() == before {
            break;
        }
    }
    edges.sort_unstable();
    edges
}

/// Kruskal over the given edges: a minimum spanning forest of their union.
pub(crate) fn spanning_forest<W: EdgeWeights + ?Sized>(
    inst: &W,
    edges: &[(usize, usize)],
) -> Vec<(usize, usize)> {
    let mut sorted: Vec<(usize, usize)> = edges.to_vec();
    sorted.sort_by(|x, y| {
        inst.w(x.0, x.1)
            .total_cmp(&inst.w(y.0, y.1))
            .then_with(|| x.cmp(y))
    });
    let mut uf: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    fn find(uf: &mut std::collections::HashMap<usize, usize>, x: usize) -> usize {
        let p = *uf.entry(x).or_insert(x);
        if p == x {
            return x;
        }
        let r = find(uf, p);
        uf.insert(x, r);
        r
    }
    let mut out = Vec::new();
    for (a, b) in sorted {
        let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
        if ra != rb {
            uf.insert(ra, rb);
            out.push((a, b));
        }
    }
    out.sort_unstable();
    out
}

/// Minimum Steiner tree for `terminals` with the default options.
pub fn steiner_exact<W: EdgeWeights + ?Sized>(inst: &W, terminals: &[usize]) -> Result<SteinerResult> {
    steiner_exact_with(inst, terminals, SteinerOptions::default())
}

pub fn steiner_exact_with<W: EdgeWeights + ?Sized>(
    inst: &W,
    terminals: &[usize],
    opts: SteinerOptions,
) -> Result<SteinerResult> {
    let dp = SteinerDp::solve(inst, terminals, opts)?;
    let edges = dp.tree(inst);
    Ok(SteinerResult {
        terminals: dp.terminals().to_vec(),
        weight: dp.weight(),
        edges,
    })
}

/// Minimum spanning tree weight of the complete subgraph induced by `xs`.
pub fn mst<W: EdgeWeights + ?Sized>(inst: &W, xs: &[usize]) -> Result<f64> {
    let xs = sorted_unique(xs, inst.n(), "vertex subset")?;
    if xs.is_empty() {
        return Err(Error::InvalidArgument("vertex subset is empty".into()));
    }
    Ok(prim(xs.len(), |a, b| inst.w(xs[a], xs[b])))
}

/// Prim's algorithm on a dense graph of `m` vertices.
fn prim(m: usize, w: impl Fn(usize, usize) -> f64) -> f64 {
    let mut best = vec![f64::INFINITY; m];
    let mut done = vec![false; m];
    let mut total = 0.0;
    let mut cur = 0;
    done[0] = true;
    for _ in 1..m {
        let mut next = usize::MAX;
        for v in 0..m {
            if done[v] {
                continue;
            }
            let c = w(cur, v);
            if c < best[v] {
                best[v] = c;
            }
            if next == usize::MAX || best[v] < best[next] {
                next = v;
            }
        }
        total += best[next];
        done[next] = true;
        cur = next;
    }
    total
}

/// MST weight of the metric closure on `terminals`: an upper bound on the
/// Steiner weight.
pub fn metric_closure_mst<W: EdgeWeights + ?Sized>(inst: &W, terminals: &[usize]) -> Result<f64> {
    let ts = sorted_unique(terminals, inst.n(), "terminal set")?;
    if ts.is_empty() {
        return Err(Error::InvalidArgument("terminal set is empty".into()));
    }
    let maps = ts
        .iter()
        .map(|&t| shortest_paths_all(inst, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(prim(ts.len(), |a, b| maps[a].dist[ts[b]]))
}

/// Steiner weight by enumerating every vertex superset of the terminals and
/// taking the cheapest induced MST. Independent of [`SteinerDp`].
pub fn steiner_bruteforce<W: EdgeWeights + ?Sized>(inst: &W, terminals: &[usize]) -> Result<f64> {
    let n = inst.n();
    if n > BRUTEFORCE_MAX_N {
        return Err(Error::Capability(format!(
            "brute force enumerates vertex supersets; n = {n} exceeds {BRUTEFORCE_MAX_N}"
        )));
    }
    let ts = sorted_unique(terminals, n, "terminal set")?;
    if ts.is_empty() {
        return Err(Error::InvalidArgument("terminal set is empty".into()));
    }
    let base: u32 = ts.iter().map(|&t| 1u32 << t).sum();
    let others = ((1u32 << n) - 1) & !base;
    let mut best = f64::INFINITY;
    let mut sub = others;
    loop {
        let set = base | sub;
        let xs: Vec<usize> = (0..n).filter(|&v| set & (1 << v) != 0).collect();
        let w = prim(xs.len(), |a, b| inst.w(xs[a], xs[b]));
        if w < best {
            best = w;
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & others;
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_instance, Instance};
    use crate::rng::Seed;

    // v1..v3 -> 0..2 with T12 = 1, T13 = 2, T23 = 4.
    fn triangle_a() -> Instance {
        Instance::from_weights(3, vec![1.0, 2.0, 4.0]).unwrap()
    }

    // T12 = 5, T13 = 1, T23 = 1.
    fn triangle_b() -> Instance {
        Instance::from_weights(3, vec![5.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn paths_on_singleton_domain() {
        let inst = triangle_a();
        let d = shortest_paths(&inst, 1, &[1]).unwrap();
        assert_eq!(d.get(1), Some(0.0));
        assert_eq!(d.get(0), None);
        assert_eq!(d.get(2), None);
    }

    #[test]
    fn paths_hand_example() {
        let d = shortest_paths_all(&triangle_a(), 1).unwrap();
        assert_eq!(d.dist, vec![1.0, 0.0, 3.0]);
        assert_eq!(d.path_to(2).unwrap(), vec![1, 0, 2]);
    }

    #[test]
    fn source_outside_allowed() {
        assert!(matches!(
            shortest_paths(&triangle_a(), 0, &[1, 2]),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn one_hop_upper_bound() {
        let inst = gen_instance(30, Seed::new(1, "sp", 0)).unwrap();
        for s in 0..30 {
            let d = shortest_paths_all(&inst, s).unwrap();
            for v in 0..30 {
                if v != s {
                    assert!(d.dist[v] <= inst.w(s, v));
                }
            }
        }
    }

    #[test]
    fn single_terminal() {
        let r = steiner_exact(&triangle_a(), &[2]).unwrap();
        assert_eq!(r.weight, 0.0);
        assert!(r.edges.is_empty());
    }

    #[test]
    fn steiner_triangle() {
        let inst = triangle_b();
        let r = steiner_exact(&inst, &[0, 1]).unwrap();
        assert_eq!(r.weight, 2.0);
        assert_eq!(r.edges, vec![(0, 2), (1, 2)]);
        assert_eq!(steiner_bruteforce(&inst, &[0, 1]).unwrap(), 2.0);
    }

    #[test]
    fn too_many_terminals() {
        let inst = gen_instance(12, Seed::new(1, "kmax", 0)).unwrap();
        let ts: Vec<usize> = (0..9).collect();
        assert!(matches!(steiner_exact(&inst, &ts), Err(Error::Capability(_))));
        let opts = SteinerOptions { k_max: 9 };
        assert!(steiner_exact_with(&inst, &ts, opts).is_ok());
    }

    #[test]
    fn all_vertices_is_mst() {
        let inst = gen_instance(8, Seed::new(2, "mst", 0)).unwrap();
        let all: Vec<usize> = (0..8).collect();
        let r = steiner_exact(&inst, &all).unwrap();
        let m = mst(&inst, &all).unwrap();
        assert!((r.weight - m).abs() <= 1e-12 * m);
        assert!((steiner_bruteforce(&inst, &all).unwrap() - m).abs() <= 1e-12 * m);
        assert_eq!(r.edges.len(), 7);
    }

    #[test]
    fn mst_small_subsets() {
        let inst = triangle_a();
        assert_eq!(mst(&inst, &[1]).unwrap(), 0.0);
        assert_eq!(mst(&inst, &[1, 2]).unwrap(), 4.0);
        assert!(mst(&inst, &[]).is_err());
    }

    #[test]
    fn two_terminals_is_geodesic() {
        let inst = gen_instance(10, Seed::new(3, "geo", 0)).unwrap();
        let d = shortest_paths_all(&inst, 2).unwrap();
        let b = steiner_bruteforce(&inst, &[2, 7]).unwrap();
        assert!((b - d.dist[7]).abs() < 1e-12);
    }

    #[test]
    fn bruteforce_capability() {
        let inst = gen_instance(13, Seed::new(3, "bf", 0)).unwrap();
        assert!(matches!(
            steiner_bruteforce(&inst, &[0, 1]),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn weight_with_matches_fresh_solve() {
        let inst = gen_instance(15, Seed::new(4, "ext", 0)).unwrap();
        let dp = SteinerDp::solve(&inst, &[0, 3, 9], SteinerOptions::default()).unwrap();
        for v in 0..15 {
            let fresh = steiner_exact(&inst, &[0, 3, 9, v]).unwrap().weight;
            assert!((dp.weight_with(v) - fresh).abs() <= 1e-12);
        }
    }

    #[test]
    fn forest_drops_heaviest_cycle_edge() {
        let inst = Instance::from_weights(3, vec![1.0, 2.0, 3.0]).unwrap();
        let f = spanning_forest(&inst, &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(f, vec![(0, 1), (0, 2)]);
    }
}
