//! Finite-n checks of the probabilistic ingredients behind the bounds:
//! random subset intersections, the truncating transform `f`, the block
//! partition with its minima `U_i`, and the weight coupling `T -> T'`.
//!
//! Exponential parameters are spelled out at every interface: `mean` for
//! `Exp(mean)` draws, `rate` where a rate is meant. `U_i` has rate `n_B`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{exp_quantile, EdgeWeights, Instance, LazyInstance};
use crate::rng::{sub_purpose, Seed, Stream};
use crate::stats::{binomial_se, dkw_bound, ks_one_sample, ks_two_sample};
use crate::steiner::steiner_exact;

/// Upper bound `exp(-m^k n^(1-k))` on the probability that `k` independent
/// uniform `m`-subsets of `{0..n}` have empty intersection.
pub fn lemma2_bound(n: usize, m: usize, k: usize) -> Result<f64> {
    if m < 1 || m > n {
        return Err(Error::Domain(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    if k < 1 {
        return Err(Error::Domain("need k >= 1".into()));
    }
    let (nf, mf, kf) = (n as f64, m as f64, k as f64);
    Ok((-(kf * mf.ln() + (1.0 - kf) * nf.ln()).exp()).exp())
}

/// Fraction of `trials` in which `k` independent uniform `m`-subsets of
/// `{0..n}` have empty intersection. Subsets come from a partial
/// Fisher–Yates shuffle.
pub fn subset_intersection_empty_freq(
    n: usize,
    m: usize,
    k: usize,
    trials: usize,
    rng: &mut Stream,
) -> Result<f64> {
    if m > n || k == 0 || trials == 0 {
        return Err(Error::InvalidArgument(format!(
            "need m <= n, k >= 1, trials >= 1 (n = {n}, m = {m}, k = {k}, trials = {trials})"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut hits = vec![0usize; n];
    let mut empty = 0usize;
    for _ in 0..trials {
        hits.iter_mut().for_each(|h| *h = 0);
        for _ in 0..k {
            for i in 0..m {
                let j = i + rng.next_below((n - i) as u64) as usize;
                perm.swap(i, j);
                hits[perm[i]] += 1;
            }
        }
        if !hits.contains(&k) {
            empty += 1;
        }
    }
    Ok(empty as f64 / trials as f64)
}

/// `f(x) = -mu ln(e^(-b/mu) + (1 - e^(-b/mu)) e^(-x/mu))`.
///
/// Maps `[0, inf)` increasingly onto `[0, b)`; if `X ~ Exp(mean mu)` then
/// `f(X)` has the law of `X` conditioned on `X <= b`.
pub fn f_transform(x: f64, mu: f64, b: f64) -> f64 {
    let p = -(-b / mu).exp_m1();
    let q = -(-x / mu).exp_m1();
    -mu * (-p * q).ln_1p()
}

/// CDF of `X | X <= b` for `X ~ Exp(mean mu)`, on `[0, b]`.
pub fn conditional_cdf(t: f64, mu: f64, b: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= b {
        1.0
    } else {
        (-t / mu).exp_m1() / (-b / mu).exp_m1()
    }
}

/// Sup distance between the empirical law of `f(X)` and the law of
/// `X | X <= b`, from `samples` draws of `X ~ Exp(mean mu)`.
pub fn check_f_conditional_law(mu: f64, b: f64, samples: usize, rng: &mut Stream) -> Result<f64> {
    if samples < 1000 {
        return Err(Error::Precondition(format!(
            "need at least 1000 samples, got {samples}"
        )));
    }
    if !(mu > 0.0 && b > 0.0) {
        return Err(Error::InvalidArgument("mu and b must be positive".into()));
    }
    let fx: Vec<f64> = (0..samples)
        .map(|_| f_transform(mu * exp_quantile(rng.next_uniform()), mu, b))
        .collect();
    Ok(ks_one_sample(&fx, |t| conditional_cdf(t, mu, b)))
}

/// Smallest `b / mu` for which `f(x) >= alpha x` holds on `[0, b/alpha - mu]`.
pub fn f_tail_threshold(alpha: f64) -> f64 {
    alpha * (1.0 - alpha.ln()) / (1.0 - alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FTail {
    /// Empirical `P(f(X) <= alpha X)`, over draws with `X > 0`.
    pub freq: f64,
    /// `e^(1 - b / (alpha mu))`.
    pub bound: f64,
    /// Binomial standard error at `p = bound`.
    pub se: f64,
}

impl FTail {
    pub fn holds(&self) -> bool {
        self.freq <= self.bound + 3.0 * self.se
    }
}

pub fn check_f_tail_bound(
    mu: f64,
    b: f64,
    alpha: f64,
    samples: usize,
    rng: &mut Stream,
) -> Result<FTail> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Precondition(format!("alpha = {alpha} is not in (0, 1)")));
    }
    let need = f_tail_threshold(alpha);
    if b / mu < need {
        return Err(Error::Precondition(format!(
            "b/mu = {} is below the required alpha(1 - ln alpha)/(1 - alpha) = {need}",
            b / mu
        )));
    }
    if samples < 10_000 {
        return Err(Error::Precondition(format!(
            "need at least 10000 samples, got {samples}"
        )));
    }
    let mut hits = 0usize;
    let mut counted = 0usize;
    for _ in 0..samples {
        let x = mu * exp_quantile(rng.next_uniform());
        if x > 0.0 {
            counted += 1;
            if f_transform(x, mu, b) <= alpha * x {
                hits += 1;
            }
        }
    }
    let bound = (1.0 - b / (alpha * mu)).exp();
    Ok(FTail {
        freq: hits as f64 / counted as f64,
        bound,
        se: binomial_se(bound.min(1.0), counted),
    })
}

/// `ceil(n^(1 - eps))`, snapping values within 1e-9 of an integer.
fn block_size(n: usize, epsilon: f64) -> usize {
    let x = (n as f64).powf(1.0 - epsilon);
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// Blocks `A_1..A_k` of `n_A = ceil(n^(1-eps))` consecutive vertices followed
/// by the remainder `B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub n: usize,
    pub k: usize,
    pub epsilon: f64,
    pub n_a: usize,
    pub n_b: usize,
}

impl Partition {
    pub fn new(n: usize, k: usize, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::Construction(format!("epsilon = {epsilon} is not in (0, 1)")));
        }
        if k == 0 {
            return Err(Error::Construction("need k >= 1 blocks".into()));
        }
        let n_a = block_size(n, epsilon);
        if k * n_a >= n {
            return Err(Error::Construction(format!(
                "k n_A = {} leaves no vertices for B (n = {n})",
                k * n_a
            )));
        }
        Ok(Self {
            n,
            k,
            epsilon,
            n_a,
            n_b: n - k * n_a,
        })
    }

    /// Vertices of block `j` (0-based).
    pub fn block(&self, j: usize) -> std::ops::Range<usize> {
        j * self.n_a..(j + 1) * self.n_a
    }

    pub fn a_len(&self) -> usize {
        self.k * self.n_a
    }

    pub fn b_range(&self) -> std::ops::Range<usize> {
        self.a_len()..self.n
    }

    pub fn in_b(&self, v: usize) -> bool {
        v >= self.a_len()
    }

    pub fn block_of(&self, v: usize) -> Option<usize> {
        (v < self.a_len()).then(|| v / self.n_a)
    }
}

/// Partition plus one chosen vertex per block and the coupling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub partition: Partition,
    pub chosen: Vec<usize>,
    /// Threshold `b`.
    pub b: f64,
    /// Mean `1/n_B` of each `U_i`.
    pub mu: f64,
}

impl CouplingSpec {
    /// Uses `b = (1 - 2 eps) ln n / n`.
    pub fn new(partition: Partition, chosen: Vec<usize>) -> Result<Self> {
        let nf = partition.n as f64;
        let b = (1.0 - 2.0 * partition.epsilon) * nf.ln() / nf;
        Self::with_b(partition, chosen, b)
    }

    pub fn with_b(partition: Partition, chosen: Vec<usize>, b: f64) -> Result<Self> {
        if !(b > 0.0 && b.is_finite()) {
            return Err(Error::Construction(format!(
                "threshold b = {b} must be positive (b = (1 - 2 eps) ln n / n needs eps < 1/2)"
            )));
        }
        if chosen.len() != partition.k {
            return Err(Error::Construction(format!(
                "{} chosen vertices for {} blocks",
                chosen.len(),
                partition.k
            )));
        }
        for (j, &l) in chosen.iter().enumerate() {
            if !partition.block(j).contains(&l) {
                return Err(Error::Construction(format!(
                    "chosen vertex {l} is not in block {j}"
                )));
            }
        }
        Ok(Self {
            mu: 1.0 / partition.n_b as f64,
            partition,
            chosen,
            b,
        })
    }

    /// `U'_i`: `f(U_i)` before the chosen vertex of its block, `U_i + b` at it,
    /// `U_i` after it.
    pub fn u_prime(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(i, &ui)| {
                let l = self.chosen[self.partition.block_of(i).expect("i in A")];
                match i.cmp(&l) {
                    std::cmp::Ordering::Less => f_transform(ui, self.mu, self.b),
                    std::cmp::Ordering::Equal => ui + self.b,
                    std::cmp::Ordering::Greater => ui,
                }
            })
            .collect()
    }

    /// Whether `U` lies in the event: `U_l > b` at each chosen `l` and
    /// `U_i <= b` for the earlier vertices of its block.
    pub fn event_holds(&self, u: &[f64]) -> bool {
        self.chosen.iter().enumerate().all(|(j, &l)| {
            let start = self.partition.block(j).start;
            u[l] > self.b && u[start..l].iter().all(|&x| x <= self.b)
        })
    }

    /// Exact probability of the event when `U_i ~ Exp(rate n_B)`.
    pub fn event_probability(&self) -> f64 {
        let tail = (-(self.b / self.mu)).exp();
        self.chosen
            .iter()
            .enumerate()
            .map(|(j, &l)| (1.0 - tail).powi((l - self.partition.block(j).start) as i32) * tail)
            .product()
    }
}

/// `U_i = min over v in B of T(i, v)` for every `i` in the blocks.
pub fn u_minima<W: EdgeWeights + ?Sized>(inst: &W, part: &Partition) -> Result<Vec<f64>> {
    if inst.n() != part.n {
        return Err(Error::InvalidArgument(format!(
            "partition is for n = {}, instance has n = {}",
            part.n,
            inst.n()
        )));
    }
    Ok((0..part.a_len())
        .map(|i| part.b_range().map(|v| inst.w(i, v)).fold(f64::INFINITY, f64::min))
        .collect())
}

/// Coupled weights: `T'(i, m) = T(i, m) - U_i + U'_i` for `i` outside `B` and
/// `m` in `B`, every other weight unchanged. At a chosen vertex this is
/// evaluated as `T + b`.
pub fn apply_coupling(inst: &Instance, spec: &CouplingSpec) -> Result<Instance> {
    let part = &spec.partition;
    let u = u_minima(inst, part)?;
    let up = spec.u_prime(&u);
    let n = part.n;
    let mut weights = inst.weights().to_vec();
    for i in 0..part.a_len() {
        let l = spec.chosen[i / part.n_a];
        if i > l {
            continue;
        }
        for m in part.b_range() {
            let e = crate::instance::edge_index(n, i, m);
            let t = weights[e];
            let t2 = if i == l { t + spec.b } else { (t - u[i]) + up[i] };
            if t2.is_nan() || t2 < 0.0 {
                return Err(Error::Invariant(format!(
                    "coupled weight T'({i}, {m}) = {t2} is negative"
                )));
            }
            weights[e] = t2;
        }
    }
    inst.with_weights(weights)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionReport {
    /// `U'_i >= (1 - 2 eps) U_i` for every `i` in the blocks.
    pub scaled_minima: bool,
    /// `T(i, l_j) >= (2k - 1) ln n / n` for every block vertex `i != l_j`.
    pub chosen_isolated: bool,
    /// `w(S) > (k - 1 - eps) ln n / n` for `S` the chosen vertices.
    pub steiner_large: bool,
}

impl ConditionReport {
    pub fn all(&self) -> bool {
        self.scaled_minima && self.chosen_isolated && self.steiner_large
    }
}

/// Evaluates the three sufficient conditions of the lower-bound argument on
/// an instance.
pub fn evaluate_conditions(inst: &Instance, spec: &CouplingSpec) -> Result<ConditionReport> {
    let part = &spec.partition;
    let u = u_minima(inst, part)?;
    let up = spec.u_prime(&u);
    let eps = part.epsilon;
    let (nf, kf) = (part.n as f64, part.k as f64);
    let scale = nf.ln() / nf;
    let scaled_minima = u.iter().zip(&up).all(|(&x, &y)| y >= (1.0 - 2.0 * eps) * x);
    let chosen_isolated = spec.chosen.iter().all(|&l| {
        (0..part.a_len())
            .filter(|&i| i != l)
            .all(|i| inst.w(i, l) >= (2.0 * kf - 1.0) * scale)
    });
    let w = steiner_exact(inst, &spec.chosen)?.weight;
    Ok(ConditionReport {
        scaled_minima,
        chosen_isolated,
        steiner_large: w > (kf - 1.0 - eps) * scale,
    })
}

/// Smallest event probability for which rejection sampling is attempted.
pub const MIN_ACCEPTANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LawCheckConfig {
    pub n: usize,
    pub epsilon: f64,
    pub k: usize,
    /// Sample size of each pipeline.
    pub accepted: usize,
    /// Threshold override; `None` uses `(1 - 2 eps) ln n / n`.
    pub b: Option<f64>,
    /// Position of the chosen vertex inside each block.
    pub chosen_offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawCheck {
    /// Largest two-sample sup distance over the summaries.
    pub statistic: f64,
    /// `2 * DKW(accepted, 0.01)`.
    pub threshold: f64,
    pub accepted: usize,
    pub attempts: usize,
    pub summaries: Vec<(String, f64)>,
}

impl LawCheck {
    pub fn passes(&self) -> bool {
        self.statistic <= self.threshold
    }
}

/// Compares the coupled weights on unconditioned instances with instances
/// rejection-sampled on the event, through scalar summaries: every `U'_i` of
/// the blocks against `U_i`, and the Steiner weight of the chosen vertices
/// plus the last vertex of `B`.
pub fn coupling_law_check(cfg: &LawCheckConfig, seed: Seed) -> Result<LawCheck> {
    let part = Partition::new(cfg.n, cfg.k, cfg.epsilon)?;
    if cfg.chosen_offset >= part.n_a {
        return Err(Error::InvalidArgument(format!(
            "chosen offset {} is outside blocks of size {}",
            cfg.chosen_offset, part.n_a
        )));
    }
    if cfg.accepted == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let chosen: Vec<usize> = (0..cfg.k)
        .map(|j| part.block(j).start + cfg.chosen_offset)
        .collect();
    let spec = match cfg.b {
        Some(b) => CouplingSpec::with_b(part, chosen, b)?,
        None => CouplingSpec::new(part, chosen)?,
    };
    let p = spec.event_probability();
    if p < MIN_ACCEPTANCE {
        return Err(Error::Capability(format!(
            "event probability {p:.3e} is below the rejection-sampling floor {MIN_ACCEPTANCE:e}"
        )));
    }
    let mut summary_terms = spec.chosen.clone();
    summary_terms.push(cfg.n - 1);
    let a_len = part.a_len();

    let coupled_seed = |t: u64| Seed::with_purpose_id(seed.master, sub_purpose(seed.purpose, 1), t);
    let conditioned_seed = |t: u64| Seed::with_purpose_id(seed.master, sub_purpose(seed.purpose, 2), t);

    let mut coupled: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.accepted); a_len + 1];
    for t in 0..cfg.accepted {
        let inst = crate::instance::gen_instance(cfg.n, coupled_seed(t as u64))?;
        let u = u_minima(&inst, &part)?;
        let up = spec.u_prime(&u);
        let tp = apply_coupling(&inst, &spec)?;
        for (i, v) in up.into_iter().enumerate() {
            coupled[i].push(v);
        }
        coupled[a_len].push(steiner_exact(&tp, &summary_terms)?.weight);
    }

    let max_attempts = (cfg.accepted as f64 / MIN_ACCEPTANCE).ceil() as usize;
    let mut conditioned: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.accepted); a_len + 1];
    let mut attempts = 0usize;
    while conditioned[a_len].len() < cfg.accepted {
        if attempts >= max_attempts {
            return Err(Error::Capability(format!(
                "acceptance fell below {MIN_ACCEPTANCE:e} after {attempts} attempts"
            )));
        }
        let seed = conditioned_seed(attempts as u64);
        attempts += 1;
        let lazy = LazyInstance::new(cfg.n, seed)?;
        let u = u_minima(&lazy, &part)?;
        if !spec.event_holds(&u) {
            continue;
        }
        let inst = lazy.materialize()?;
        for (i, v) in u.into_iter().enumerate() {
            conditioned[i].push(v);
        }
        conditioned[a_len].push(steiner_exact(&inst, &summary_terms)?.weight);
    }

    let mut summaries = Vec::with_capacity(a_len + 1);
    for i in 0..a_len {
        summaries.push((format!("U'[{i}]"), ks_two_sample(&coupled[i], &conditioned[i])));
    }
    summaries.push((
        "steiner(chosen + last)".to_string(),
        ks_two_sample(&coupled[a_len], &conditioned[a_len]),
    ));
    let statistic = summaries.iter().map(|s| s.1).fold(0.0, f64::max);
    Ok(LawCheck {
        statistic,
        threshold: 2.0 * dkw_bound(cfg.accepted, 0.01),
        accepted: cfg.accepted,
        attempts,
        summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::gen_instance;
    use crate::steiner::shortest_paths_all;

    fn binom(n: usize, r: usize) -> f64 {
        if r > n {
            return 0.0;
        }
        (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    /// Inclusion–exclusion over the elements forced into the intersection.
    fn empty_intersection_exact(n: usize, m: usize, k: usize) -> f64 {
        (0..=m)
            .map(|j| {
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * binom(n, j) * (binom(n - j, m - j) / binom(n, m)).powi(k as i32)
            })
            .sum()
    }

    #[test]
    fn lemma2_values() {
        assert!((lemma2_bound(2, 1, 2).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        assert!((lemma2_bound(10, 10, 3).unwrap() - (-10.0f64).exp()).abs() < 1e-15);
        assert!((lemma2_bound(7, 3, 1).unwrap() - (-3.0f64).exp()).abs() < 1e-15);
        assert!(matches!(lemma2_bound(5, 6, 2), Err(Error::Domain(_))));
        assert!((empty_intersection_exact(2, 1, 2) - 0.5).abs() < 1e-15);
        assert!(empty_intersection_exact(5, 5, 3).abs() < 1e-15);
    }

    #[test]
    fn lemma2_bound_dominates_exact() {
        for n in 2..14 {
            for m in 1..=n {
                for k in 1..5 {
                    let exact = empty_intersection_exact(n, m, k);
                    assert!(exact <= lemma2_bound(n, m, k).unwrap() + 1e-12, "{n} {m} {k}");
                }
            }
        }
    }

    #[test]
    fn full_subsets_never_empty() {
        let mut rng = Seed::new(1, "l2", 0).stream();
        assert_eq!(subset_intersection_empty_freq(9, 9, 3, 100, &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn f_values() {
        assert_eq!(f_transform(0.0, 1.0, 1.0), 0.0);
        let expect = -((-1.0f64).exp() + (1.0 - (-1.0f64).exp()) * (-1.0f64).exp()).ln();
        assert!((f_transform(1.0, 1.0, 1.0) - expect).abs() < 1e-15);
        assert!((f_transform(1.0, 1.0, 1.0) - 0.510_119_874_355_25).abs() < 1e-12);
        assert!((f_transform(1000.0, 1.0, 1.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn f_monotone_and_bounded() {
        for &(mu, b) in &[(1.0, 1.0), (0.005, 0.03), (2.0, 0.5)] {
            let mut prev = -1.0;
            for i in 0..1000 {
                let x = i as f64 * mu / 50.0;
                let y = f_transform(x, mu, b);
                assert!(y > prev && y < b, "mu={mu} b={b} x={x}");
                assert!(y <= x);
                prev = y;
            }
        }
    }

    #[test]
    fn f_homogeneous() {
        for &(mu, b) in &[(0.3, 0.7), (0.005, 0.03), (4.0, 1.0)] {
            for i in 0..100 {
                let x = i as f64 * 0.05 * mu;
                let lhs = f_transform(x, mu, b);
                let rhs = mu * f_transform(x / mu, 1.0, b / mu);
                assert!((lhs - rhs).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn f_above_alpha_line_on_interval() {
        for &alpha in &[0.1, 0.3, 0.5, 0.8, 0.95] {
            for &extra in &[1.0, 1.5, 4.0] {
                let mu = 0.7;
                let b = f_tail_threshold(alpha) * mu * extra;
                let top = b / alpha - mu;
                for i in 0..=1000 {
                    let x = top * i as f64 / 1000.0;
                    assert!(f_transform(x, mu, b) >= alpha * x - 1e-12, "alpha={alpha} x={x}");
                }
            }
        }
    }

    #[test]
    fn f_tail_precondition() {
        let mut rng = Seed::new(1, "ft", 0).stream();
        let err = check_f_tail_bound(1.0, 0.1, 0.5, 100_000, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Precondition(ref m) if m.contains("1.69")));
        // Exponential tail identity at the interval end.
        let (mu, b, alpha): (f64, f64, f64) = (1.0, 3.0, 0.5);
        let tail = (-(b / alpha - mu) / mu).exp();
        assert!((tail - (1.0 - b / (alpha * mu)).exp()).abs() < 1e-15);
    }

    #[test]
    fn partition_layout() {
        let p = Partition::new(100, 2, 0.5).unwrap();
        assert_eq!((p.n_a, p.n_b), (10, 80));
        assert_eq!(p.block(1), 10..20);
        assert_eq!(p.b_range(), 20..100);
        assert_eq!(p.block_of(15), Some(1));
        assert_eq!(p.block_of(20), None);
        assert!(Partition::new(10, 4, 0.5).is_err());
        assert!(Partition::new(10, 1, 1.0).is_err());
    }

    #[test]
    fn spec_validation() {
        let p = Partition::new(100, 2, 0.25).unwrap();
        assert!(CouplingSpec::new(p, vec![0, p.n_a]).is_ok());
        assert!(CouplingSpec::new(p, vec![0, 0]).is_err());
        let half = Partition::new(100, 2, 0.5).unwrap();
        assert!(CouplingSpec::new(half, vec![0, 10]).is_err());
        assert!(CouplingSpec::with_b(half, vec![0, 10], 0.01).is_ok());
    }

    #[test]
    fn single_b_vertex() {
        // n = 3, k = 1, eps chosen so n_A = 2 and B = {2}.
        let inst = gen_instance(3, Seed::new(2, "ub", 0)).unwrap();
        let p = Partition::new(3, 1, 1.0 - 2f64.ln() / 3f64.ln()).unwrap();
        assert_eq!(p.n_b, 1);
        let u = u_minima(&inst, &p).unwrap();
        assert_eq!(u, vec![inst.w(0, 2), inst.w(1, 2)]);
    }

    #[test]
    fn minima_dominate_distance_to_b() {
        let inst = gen_instance(80, Seed::new(3, "ub", 0)).unwrap();
        let p = Partition::new(80, 2, 0.4).unwrap();
        let u = u_minima(&inst, &p).unwrap();
        for (i, &ui) in u.iter().enumerate() {
            let d = shortest_paths_all(&inst, i).unwrap();
            let to_b = p.b_range().map(|v| d.dist[v]).fold(f64::INFINITY, f64::min);
            assert!(ui >= to_b);
        }
    }

    #[test]
    fn coupling_edits_only_a_to_b() {
        let inst = gen_instance(120, Seed::new(4, "cp", 0)).unwrap();
        let p = Partition::new(120, 2, 0.3).unwrap();
        let spec = CouplingSpec::new(p, vec![3, p.n_a + 5]).unwrap();
        let tp = apply_coupling(&inst, &spec).unwrap();
        for i in 0..120 {
            for m in i + 1..120 {
                let (a, b) = (inst.w(i, m), tp.w(i, m));
                let cross = !p.in_b(i) && p.in_b(m);
                if !cross {
                    assert_eq!(a.to_bits(), b.to_bits());
                }
                let l = spec.chosen[p.block_of(i).unwrap_or(0)];
                if cross && i > l {
                    assert_eq!(a.to_bits(), b.to_bits());
                }
                if cross && i == l {
                    assert_eq!(b, a + spec.b);
                }
            }
        }
    }

    #[test]
    fn degenerate_coupling_is_identity() {
        let inst = gen_instance(50, Seed::new(5, "cp", 0)).unwrap();
        let p = Partition::new(50, 1, 0.5).unwrap();
        let spec = CouplingSpec::with_b(p, vec![0], f64::MIN_POSITIVE).unwrap();
        let tp = apply_coupling(&inst, &spec).unwrap();
        assert_eq!(tp.weights(), inst.weights());
    }

    #[test]
    fn event_probability_matches_definition() {
        let p = Partition::new(60, 1, 0.5).unwrap();
        let spec = CouplingSpec::with_b(p, vec![2], 0.03).unwrap();
        let tail = (-0.03 * p.n_b as f64).exp();
        assert!((spec.event_probability() - (1.0 - tail).powi(2) * tail).abs() < 1e-15);
        let mut u = vec![0.0; p.n_a];
        u[2] = 0.05;
        assert!(spec.event_holds(&u));
        u[1] = 0.04;
        assert!(!spec.event_holds(&u));
    }

    #[test]
    fn conditions_evaluate() {
        let inst = gen_instance(400, Seed::new(6, "cond", 0)).unwrap();
        let p = Partition::new(400, 2, 0.25).unwrap();
        let spec = CouplingSpec::new(p, vec![0, p.n_a]).unwrap();
        let r = evaluate_conditions(&inst, &spec).unwrap();
        let scale = 400f64.ln() / 400.0;
        let mut isolated = true;
        for &l in &spec.chosen {
            for i in 0..p.a_len() {
                if i != l && inst.w(i, l) < 3.0 * scale {
                    isolated = false;
                }
            }
        }
        assert_eq!(r.chosen_isolated, isolated);
        let w = steiner_exact(&inst, &spec.chosen).unwrap().weight;
        assert_eq!(r.steiner_large, w > 0.75 * scale);
        let u = u_minima(&inst, &p).unwrap();
        let scaled = u.iter().zip(spec.u_prime(&u)).all(|(&x, y)| y >= 0.5 * x);
        assert_eq!(r.scaled_minima, scaled);
    }

    #[test]
    fn rare_event_is_refused() {
        let cfg = LawCheckConfig {
            n: 60,
            epsilon: 0.5,
            k: 1,
            accepted: 10,
            b: Some(0.5),
            chosen_offset: 0,
        };
        assert!(matches!(
            coupling_law_check(&cfg, Seed::new(1, "law", 0)),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn memoryless_first_vertex() {
        let cfg = LawCheckConfig {
            n: 40,
            epsilon: 0.5,
            k: 1,
            accepted: 2000,
            b: Some(0.03),
            chosen_offset: 0,
        };
        let res = coupling_law_check(&cfg, Seed::new(7, "law", 0)).unwrap();
        assert!(res.passes(), "{res:?}");
        // i > l coordinates are the untouched minima.
        assert!(res.summaries[1].1 <= res.threshold);
    }
}
