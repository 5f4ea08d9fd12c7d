use mfsteiner::ballgrow::{ball_growth_tree, ball_size, grow_ball, simulate_stage_times, Status};
use mfsteiner::instance::sample_exp;
use mfsteiner::stats::{dkw_bound, ks_one_sample, ks_two_sample, Summary};
use mfsteiner::theory::{check_f_conditional_law, coupling_law_check, u_minima, LawCheckConfig, Partition};
use mfsteiner::{gen_instance, LazyInstance, Seed};

#[test]
fn exp_draws_mean_and_tails() {
    let mut rng = Seed::new(1, "dist-exp", 0).stream();
    let n = 1_000_000;
    let xs: Vec<f64> = (0..n).map(|_| sample_exp(rng.next_uniform()).unwrap()).collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    assert!((mean - 1.0).abs() <= 5.0 / 1000.0, "mean {mean}");
    for &t in &[0.5f64, 1.0, 2.0] {
        let p = (-t).exp();
        let freq = xs.iter().filter(|&&x| x > t).count() as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((freq - p).abs() <= 5.0 * se, "t = {t}: {freq} vs {p}");
    }
}

#[test]
fn block_minima_are_exponential() {
    let (n, k) = (200, 2);
    let part = Partition::new(n, k, 0.5).unwrap();
    let mut pool = Vec::new();
    for t in 0..400 {
        let lazy = LazyInstance::new(n, Seed::new(2, "dist-u", t)).unwrap();
        pool.extend(u_minima(&lazy, &part).unwrap());
    }
    let rate = part.n_b as f64;
    let d = ks_one_sample(&pool, |x| -(-rate * x).exp_m1());
    assert!(d <= dkw_bound(pool.len(), 0.01), "sup distance {d} over {}", pool.len());
}

#[test]
fn single_root_stage_time_matches_graph() {
    let (n, k, draws) = (500usize, 1usize, 10_000u64);
    let m = ball_size(n, k).unwrap();
    let mut rng = Seed::new(3, "dist-z1-sim", 0).stream();
    let sim: Vec<f64> = (0..draws)
        .map(|_| simulate_stage_times(n, k, &mut rng).unwrap().z1)
        .collect();
    let domain: Vec<usize> = (0..n).collect();
    let graph: Vec<f64> = (0..draws)
        .map(|t| {
            let lazy = LazyInstance::new(n, Seed::new(3, "dist-z1-graph", t)).unwrap();
            grow_ball(&lazy, 0, &domain, m).unwrap().duration
        })
        .collect();
    let d = ks_two_sample(&sim, &graph);
    assert!(d <= 2.0 * dkw_bound(draws as usize, 0.01), "sup distance {d}");
}

#[test]
fn normalized_tree_weight_mostly_below_four() {
    let (n, k) = (2000, 2);
    let scale = n as f64 / (n as f64).ln();
    let mut below = 0;
    for t in 0..200 {
        let inst = gen_instance(n, Seed::new(4, "dist-bg", t)).unwrap();
        let run = ball_growth_tree(&inst, k, Default::default()).unwrap();
        if run.outcome.status == Status::Success && run.outcome.weight * scale < 4.0 {
            below += 1;
        }
    }
    assert!(below >= 190, "{below} of 200 below 4");
}

#[test]
fn f_law_with_large_threshold() {
    let mut rng = Seed::new(5, "dist-f", 0).stream();
    let d = check_f_conditional_law(0.02, 1.0, 100_000, &mut rng).unwrap();
    assert!(d <= dkw_bound(100_000, 0.01), "sup distance {d}");
}

#[test]
fn memoryless_first_vertex_coupling() {
    let cfg = LawCheckConfig {
        n: 60,
        epsilon: 0.5,
        k: 1,
        accepted: 5_000,
        b: Some(60f64.ln() / 120.0),
        chosen_offset: 0,
    };
    let res = coupling_law_check(&cfg, Seed::new(6, "dist-law", 0)).unwrap();
    assert!(res.passes(), "{res:?}");
    // The chosen coordinate follows b + Exp(rate n_B) in both pipelines; the
    // summary statistic covers it through the U'[0] entry.
    assert!(res.summaries[0].1 <= res.threshold);
    let s = Summary::of(&res.summaries.iter().map(|s| s.1).collect::<Vec<_>>()).unwrap();
    assert!(s.max <= res.threshold);
}
