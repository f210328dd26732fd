use approx::assert_relative_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use symbol_planner::bandit::{ts_choose, ucb1_choose, ArmStats, Bandit, NormalGammaParams};

fn prior() -> NormalGammaParams {
    NormalGammaParams::new(0.0, 0.01, 1.0, 100.0).unwrap()
}

proptest! {
    #[test]
    fn incremental_stats_match_two_pass(xs in prop::collection::vec(-1000.0f64..1000.0, 1..200)) {
        let mut s = ArmStats::new(8);
        for &x in &xs {
            s.update(x);
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        prop_assert_eq!(s.count(), xs.len() as u64);
        prop_assert!((s.mean() - mean).abs() < 1e-9);
        prop_assert!((s.var() - var).abs() <= 1e-9 * var.max(1.0));
        prop_assert!(s.var() >= 0.0);
        prop_assert!(s.deltas().len() <= 8);
    }

    #[test]
    fn posterior_grows_with_data(
        mu0 in -10.0f64..10.0,
        lambda in 0.001f64..10.0,
        alpha in 1.0f64..5.0,
        beta in 0.0f64..1000.0,
        xs in prop::collection::vec(-50.0f64..50.0, 0..40),
    ) {
        let p = NormalGammaParams::new(mu0, lambda, alpha, beta).unwrap();
        let mut s = ArmStats::new(0);
        prop_assert_eq!(p.posterior(&s), p);
        let mut prev = p;
        for &x in &xs {
            s.update(x);
            let post = p.posterior(&s);
            prop_assert!(post.lambda > prev.lambda);
            prop_assert!(post.alpha > prev.alpha);
            prop_assert!(post.beta >= p.beta);
            prev = post;
        }
    }

    #[test]
    fn selections_stay_in_the_legal_set(
        mask in 1u32..(1 << 12),
        counts in prop::collection::vec(0u64..20, 12),
        seed in any::<u64>(),
    ) {
        let legal: Vec<usize> = (0..12).filter(|a| mask >> a & 1 == 1).collect();
        let arms: Vec<ArmStats> = counts
            .iter()
            .enumerate()
            .map(|(a, &n)| ArmStats::from_summary(n, a as f64, 1.0, 0))
            .collect();
        let stats = |a: usize| Some(&arms[a]).filter(|s| s.count() > 0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            prop_assert!(legal.contains(&ts_choose(&legal, &prior(), &mut rng, stats)));
            prop_assert!(legal.contains(&ucb1_choose(&legal, 2.0, &mut rng, stats)));
        }
    }
}

#[test]
fn thompson_over_dataless_arms_is_uniform() {
    let bandit = Bandit::new(5, prior(), 8);
    let legal = [0, 1, 2, 3, 4];
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut counts = [0f64; 5];
    let n = 100_000;
    for _ in 0..n {
        counts[bandit.ts_select(&legal, &mut rng)] += 1.0;
    }
    let expected = n as f64 / 5.0;
    let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(4.0).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi2 = {chi2}, p = {p}");
}

#[test]
fn selection_sequences_are_reproducible() {
    let mut bandit = Bandit::new(4, prior(), 8);
    bandit.update_arm(1, 3.0);
    bandit.update_arm(2, 2.5);
    let run = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..100)
            .map(|_| (bandit.ts_select(&[0, 1, 2, 3], &mut rng), bandit.ucb1_select(&[0, 1, 2, 3], 1.0, &mut rng)))
            .collect::<Vec<_>>()
    };
    assert_eq!(run(5), run(5));
}

#[test]
fn converged_arm_reports_its_window_mean() {
    let mut bandit = Bandit::new(2, prior(), 3);
    for g in [1.0, 1.0, 1.0, 1.0] {
        bandit.update_arm(0, g);
    }
    let arm = bandit.arm(0).unwrap();
    assert_relative_eq!(arm.deltas().recent_mean(3).unwrap(), 0.0);
    assert!(bandit.action_converged(0, 3, 0.1));
    assert!(!bandit.action_converged(1, 3, 0.1));
}
