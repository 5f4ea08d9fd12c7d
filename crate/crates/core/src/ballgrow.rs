//! Staged ball growth: an explicit spanning tree for the terminals `0..k`.
//!
//! Stage 1 grows, for each root in turn, the `m` nearest vertices inside a
//! domain that excludes later roots and every earlier ball. Stage 2 attaches
//! to each ball the `m` vertices outside all balls that are cheapest to reach
//! by a single edge from it. When the stage-2 annuli share a vertex `w`, the
//! union of the root-to-`w` paths is a tree connecting the roots whose weight
//! is at most the summed stage durations.
//!
//! On a fixed instance all of this is deterministic. The stage durations of
//! the random model are also available directly, as sums of independent
//! exponentials, through [`simulate_stage_times`] and [`mgf_exact`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::EdgeWeights;
use crate::rng::Stream;
use crate::steiner::finish_tree;

/// Ball size threshold `n^((k-1)/k) * ((k+1) ln n)^(1/k)`.
pub fn c_kn(n: usize, k: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("c_kn needs n >= 2, got {n}")));
    }
    if k < 1 {
        return Err(Error::Domain("c_kn needs k >= 1".into()));
    }
    let (nf, kf) = (n as f64, k as f64);
    Ok(nf.powf((kf - 1.0) / kf) * ((kf + 1.0) * nf.ln()).powf(1.0 / kf))
}

/// `ceil(c_kn(n, k))`, the integer ball size used by the construction.
pub fn ball_size(n: usize, k: usize) -> Result<usize> {
    Ok(c_kn(n, k)?.ceil() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallMember {
    pub vertex: usize,
    pub arrival: f64,
    pub parent: Option<usize>,
}

/// Stage-1 ball, members in arrival order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub root: usize,
    pub members: Vec<BallMember>,
    /// Arrival time of the last member.
    pub duration: f64,
}

impl Ball {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn member(&self, v: usize) -> Option<&BallMember> {
        self.members.iter().find(|m| m.vertex == v)
    }

    pub fn contains(&self, v: usize) -> bool {
        self.member(v).is_some()
    }

    /// Edges from `v` back to the root along parent pointers.
    pub fn chain_to_root(&self, v: usize) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        let mut cur = v;
        while let Some(p) = self.member(cur).and_then(|m| m.parent) {
            edges.push((p.min(cur), p.max(cur)));
            cur = p;
        }
        edges
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusMember {
    pub vertex: usize,
    pub arrival: f64,
    /// Ball vertex the single hop starts from.
    pub parent: usize,
}

/// Stage-2 annulus, members in arrival order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub members: Vec<AnnulusMember>,
    /// Stage-1 duration of the ball it grows from.
    pub start: f64,
    /// Last arrival minus `start`.
    pub duration: f64,
}

impl Annulus {
    pub fn member(&self, v: usize) -> Option<&AnnulusMember> {
        self.members.iter().find(|m| m.vertex == v)
    }
}

fn sorted_domain(vs: &[usize], n: usize) -> Result<Vec<usize>> {
    let mut out = vs.to_vec();
    out.sort_unstable();
    out.dedup();
    if let Some(&v) = out.iter().find(|&&v| v >= n) {
        return Err(Error::InvalidArgument(format!("vertex {v} out of range")));
    }
    Ok(out)
}

/// The `m` vertices of `domain` closest to `root` inside the subgraph induced
/// by `domain`, with their arrival times.
pub fn grow_ball<W: EdgeWeights + ?Sized>(
    inst: &W,
    root: usize,
    domain: &[usize],
    m: usize,
) -> Result<Ball> {
    let domain = sorted_domain(domain, inst.n())?;
    if domain.binary_search(&root).is_err() {
        return Err(Error::InvalidArgument(format!(
            "root {root} is not in the growth domain"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("ball size must be positive".into()));
    }
    if m > domain.len() {
        return Err(Error::InfeasibleSize(format!(
            "ball of {m} vertices requested from a domain of {}",
            domain.len()
        )));
    }
    // Parallel arrays over the still-unreached part of the domain.
    let mut open: Vec<usize> = domain.iter().copied().filter(|&v| v != root).collect();
    let mut dist = vec![f64::INFINITY; open.len()];
    let mut parent: Vec<Option<usize>> = vec![None; open.len()];
    let mut members = Vec::with_capacity(m);
    let (mut u, mut du, mut pu) = (root, 0.0, None);
    loop {
        members.push(BallMember {
            vertex: u,
            arrival: du,
            parent: pu,
        });
        if members.len() == m {
            break;
        }
        let mut best = 0;
        for pos in 0..open.len() {
            let v = open[pos];
            let c = du + inst.w(u, v);
            if c < dist[pos] {
                dist[pos] = c;
                parent[pos] = Some(u);
            }
            if dist[pos] < dist[best] || (dist[pos] == dist[best] && v < open[best]) {
                best = pos;
            }
        }
        u = open.swap_remove(best);
        du = dist.swap_remove(best);
        pu = parent.swap_remove(best);
    }
    Ok(Ball {
        root,
        duration: du,
        members,
    })
}

/// The `m` vertices of `eligible` with the smallest single-hop arrival
/// `min over u in ball of (arrival(u) + T(u, v))`.
pub fn grow_annulus<W: EdgeWeights + ?Sized>(
    inst: &W,
    ball: &Ball,
    eligible: &[usize],
    m: usize,
) -> Result<Annulus> {
    let eligible = sorted_domain(eligible, inst.n())?;
    if let Some(&v) = eligible.iter().find(|&&v| ball.contains(v)) {
        return Err(Error::InvalidArgument(format!(
            "eligible vertex {v} lies inside the ball"
        )));
    }
    if m > eligible.len() {
        return Err(Error::InfeasibleSize(format!(
            "annulus of {m} vertices requested from {} eligible vertices",
            eligible.len()
        )));
    }
    let mut reach: Vec<AnnulusMember> = eligible
        .iter()
        .map(|&v| {
            let mut best = AnnulusMember {
                vertex: v,
                arrival: f64::INFINITY,
                parent: ball.root,
            };
            for b in &ball.members {
                let a = b.arrival + inst.w(b.vertex, v);
                if a < best.arrival {
                    best.arrival = a;
                    best.parent = b.vertex;
                }
            }
            best
        })
        .collect();
    reach.sort_by(|x, y| {
        x.arrival
            .total_cmp(&y.arrival)
            .then(x.vertex.cmp(&y.vertex))
    });
    reach.truncate(m);
    let start = ball.duration;
    if let Some(bad) = reach.iter().find(|a| a.arrival < start) {
        return Err(Error::Invariant(format!(
            "vertex {} reached at {} before the ball finished at {start}",
            bad.vertex, bad.arrival
        )));
    }
    let end = reach.last().map_or(start, |a| a.arrival);
    Ok(Annulus {
        members: reach,
        start,
        duration: end - start,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeetingRule {
    /// Lowest-index vertex of the annulus intersection.
    #[default]
    LowestIndex,
    /// Intersection vertex minimizing the summed path lengths.
    MinPathSum,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BallGrowthOptions {
    pub m_override: Option<usize>,
    pub meeting: MeetingRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootTrace {
    pub root: usize,
    /// Stage-1 domain size.
    pub domain_size: usize,
    pub ball: Ball,
    pub annulus: Annulus,
    pub z1: f64,
    pub z2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallGrowthTrace {
    pub m: usize,
    pub roots: Vec<RootTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Success,
    FailedIntersection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallGrowthOutcome {
    pub status: Status,
    pub meeting: Option<usize>,
    pub edges: Vec<(usize, usize)>,
    /// Sum over the distinct tree edges; 0 on failure.
    pub weight: f64,
    /// Length of the path from each root to the meeting vertex.
    pub path_lengths: Vec<f64>,
    /// Sum over roots of both stage durations.
    pub certificate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallGrowthRun {
    pub outcome: BallGrowthOutcome,
    pub trace: BallGrowthTrace,
}

/// Runs both stages for roots `0..k` and assembles the tree.
pub fn ball_growth_tree<W: EdgeWeights + ?Sized>(
    inst: &W,
    k: usize,
    opts: BallGrowthOptions,
) -> Result<BallGrowthRun> {
    let n = inst.n();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    let m = match opts.m_override {
        Some(m) => m,
        None => ball_size(n, k)?,
    };
    if m == 0 {
        return Err(Error::InvalidArgument("ball size must be positive".into()));
    }
    if 2 * k * m > n {
        return Err(Error::InfeasibleSize(format!(
            "2km = {} exceeds n = {n}; balls and annuli cannot fit",
            2 * k * m
        )));
    }

    // Stage 1.i domains: start without the later roots, then alternately add
    // the next root and remove the previous ball.
    let mut domain = vec![true; n];
    domain[1..k].iter_mut().for_each(|d| *d = false);
    let mut in_ball = vec![false; n];
    let mut balls: Vec<(Ball, usize)> = Vec::with_capacity(k);
    for root in 0..k {
        if let Some((prev, _)) = balls.last() {
            domain[root] = true;
            for mb in &prev.members {
                domain[mb.vertex] = false;
            }
        }
        let dom: Vec<usize> = (0..n).filter(|&v| domain[v]).collect();
        let ball = grow_ball(inst, root, &dom, m)?;
        for mb in &ball.members {
            in_ball[mb.vertex] = true;
        }
        balls.push((ball, dom.len()));
    }

    let eligible: Vec<usize> = (0..n).filter(|&v| !in_ball[v]).collect();
    let mut roots = Vec::with_capacity(k);
    for (root, (ball, domain_size)) in balls.into_iter().enumerate() {
        let annulus = grow_annulus(inst, &ball, &eligible, m)?;
        roots.push(RootTrace {
            root,
            domain_size,
            z1: ball.duration,
            z2: annulus.duration,
            ball,
            annulus,
        });
    }
    let certificate: f64 = roots.iter().map(|r| r.z1 + r.z2).sum();
    let trace = BallGrowthTrace { m, roots };

    if k == 1 {
        return Ok(BallGrowthRun {
            outcome: BallGrowthOutcome {
                status: Status::Success,
                meeting: None,
                edges: Vec::new(),
                weight: 0.0,
                path_lengths: vec![0.0],
                certificate,
            },
            trace,
        });
    }

    let mut hits = vec![0usize; n];
    for r in &trace.roots {
        for a in &r.annulus.members {
            hits[a.vertex] += 1;
        }
    }
    let common: Vec<usize> = (0..n).filter(|&v| hits[v] == k).collect();
    let path_lengths_at = |w: usize| -> Vec<f64> {
        trace
            .roots
            .iter()
            .map(|r| r.annulus.member(w).expect("w in every annulus").arrival)
            .collect()
    };
    let meeting = match opts.meeting {
        MeetingRule::LowestIndex => common.first().copied(),
        MeetingRule::MinPathSum => common
            .iter()
            .map(|&w| (path_lengths_at(w).iter().sum::<f64>(), w))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, w)| w),
    };
    let Some(w) = meeting else {
        return Ok(BallGrowthRun {
            outcome: BallGrowthOutcome {
                status: Status::FailedIntersection,
                meeting: None,
                edges: Vec::new(),
                weight: 0.0,
                path_lengths: Vec::new(),
                certificate,
            },
            trace,
        });
    };

    let mut edges = Vec::new();
    for r in &trace.roots {
        let hop = r.annulus.member(w).expect("w in every annulus");
        edges.push((hop.parent.min(w), hop.parent.max(w)));
        edges.extend(r.ball.chain_to_root(hop.parent));
    }
    edges.sort_unstable();
    edges.dedup();
    let terminals: Vec<usize> = (0..k).collect();
    let edges = finish_tree(inst, edges, &terminals);
    let weight = edges.iter().map(|&(a, b)| inst.w(a, b)).sum();
    Ok(BallGrowthRun {
        outcome: BallGrowthOutcome {
            status: Status::Success,
            meeting: Some(w),
            edges,
            weight,
            path_lengths: path_lengths_at(w),
            certificate,
        },
        trace,
    })
}

/// Sizes and exponential rates of the two stages for root 1 in the
/// independent-exponential description of the growth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageModel {
    pub n: usize,
    pub k: usize,
    /// `n - k + 1`, the stage-1 domain size of the first root.
    pub n_prime: usize,
    /// Integer ball size `ceil(c_kn)`.
    pub c: usize,
}

impl StageModel {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        let c = ball_size(n, k)?;
        if k > n {
            return Err(Error::InvalidArgument(format!("k = {k} exceeds n = {n}")));
        }
        let n_prime = n - k + 1;
        let model = Self { n, k, n_prime, c };
        // Stage-2 rates are smallest at i = c: (n' - kc - c + 1) c.
        if n_prime <= c || (n_prime + 1) as i64 - ((k + 1) * c) as i64 <= 0 {
            return Err(Error::InfeasibleSize(format!(
                "nonpositive stage rate: n' = {n_prime}, c = {c}, k = {k}"
            )));
        }
        Ok(model)
    }

    /// Rates of the `c - 1` stage-1 waiting times, `i (n' - i)`.
    pub fn stage1_rates(&self) -> impl Iterator<Item = f64> + '_ {
        let np = self.n_prime as f64;
        (1..self.c).map(move |i| i as f64 * (np - i as f64))
    }

    /// Rates of the `c` stage-2 waiting times, `(n' - kc - i + 1) c`.
    pub fn stage2_rates(&self) -> impl Iterator<Item = f64> + '_ {
        let (np, c, k) = (self.n_prime as f64, self.c as f64, self.k as f64);
        (1..=self.c).map(move |i| (np - k * c - i as f64 + 1.0) * c)
    }

    pub fn mean_z1(&self) -> f64 {
        self.stage1_rates().map(|r| 1.0 / r).sum()
    }

    pub fn var_z1(&self) -> f64 {
        self.stage1_rates().map(|r| 1.0 / (r * r)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub z1: f64,
    pub z2: f64,
}

/// Draws `(Z1, Z2)` for the first root as sums of independent exponentials.
pub fn simulate_stage_times(n: usize, k: usize, rng: &mut Stream) -> Result<StageTimes> {
    let model = StageModel::new(n, k)?;
    let z1 = model.stage1_rates().map(|r| rng.next_exp(r)).sum();
    let z2 = model.stage2_rates().map(|r| rng.next_exp(r)).sum();
    Ok(StageTimes { z1, z2 })
}

/// `E[exp(n t (Z1 + Z2))]` for the first root, as the exact product over the
/// exponential waiting times.
pub fn mgf_exact(n: usize, k: usize, t: f64) -> Result<f64> {
    let model = StageModel::new(n, k)?;
    let nt = n as f64 * t;
    let mut log = 0.0;
    let min_rate = model
        .stage1_rates()
        .chain(model.stage2_rates())
        .fold(f64::INFINITY, f64::min);
    if nt >= min_rate {
        return Err(Error::Divergence { nt, rate: min_rate });
    }
    for r in model.stage1_rates().chain(model.stage2_rates()) {
        log -= (-nt / r).ln_1p();
    }
    Ok(log.exp())
}
