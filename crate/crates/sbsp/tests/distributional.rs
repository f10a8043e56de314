//! Cross-module distributional checks that tie the simulators to the
//! closed-form laws on moderately sized Monte Carlo runs.

mod common;

use std::collections::BTreeMap;

use common::chi_square_p_value;
use sbsp::{
    build_posterior, expected_unseen, log_beta, posterior_interval_dm, sample_dm,
    simulate_followup, HorizonConfig, HyperParams, Model, SearchHorizon, SufficientStats,
};

fn single_user_stats(model: Model, d0: u32, stat: u64) -> SufficientStats {
    SufficientStats {
        model,
        d0,
        n_users: 1,
        per_user: BTreeMap::from([(stat, 1)]),
        daily_counts: BTreeMap::new(),
        total_triggers: Some(stat),
    }
}

/// A seen binary user's follow-up activity marginalizes its beta posterior
/// into a beta-binomial day count.
#[test]
fn followup_seen_user_is_beta_binomial() {
    let hyper = HyperParams::with_unit_dispersion(0.5, 1.0, 1.0).unwrap();
    let (d0, d1) = (5u32, 6u32);
    let m = 3u64;
    let stats = single_user_stats(Model::Be, d0, m);
    let post = build_posterior(&stats, &hyper).unwrap();

    let reps = 4000usize;
    let mut counts = vec![0.0f64; d1 as usize + 1];
    for rep in 0..reps {
        let sim = simulate_followup(&post, d1, 0x5bb5_9000 + rep as u64).unwrap();
        let active = sim.seen_counts[0].iter().filter(|&&c| c > 0).count();
        counts[active] += 1.0;
    }

    // BetaBinomial(d1, m - alpha, d0 - m + 1) pmf via the beta function.
    let (a, b) = (m as f64 - hyper.alpha, (d0 as u64 - m + 1) as f64);
    let ln_choose = |n: f64, k: f64| -> f64 {
        -log_beta(n - k + 1.0, k + 1.0) - (n + 1.0).ln()
    };
    let expected: Vec<f64> = (0..=d1 as usize)
        .map(|k| {
            let kf = k as f64;
            let mass = (ln_choose(d1 as f64, kf) + log_beta(a + kf, b + d1 as f64 - kf)
                - log_beta(a, b))
            .exp();
            mass * reps as f64
        })
        .collect();
    let p = chi_square_p_value(&counts, &expected, 5.0);
    assert!(p > 0.01, "beta-binomial fit rejected, p = {p:.4}");
}

/// Follow-up arrivals average to the closed-form unseen-user expectation,
/// day by day.
#[test]
fn followup_arrivals_match_expected_increments() {
    let hyper = HyperParams::with_unit_dispersion(0.4, 3.0, 0.8).unwrap();
    let stats = single_user_stats(Model::Be, 6, 2);
    let post = build_posterior(&stats, &hyper).unwrap();
    let d1 = 8u32;

    let reps = 3000usize;
    let mut day_sums = vec![0.0f64; d1 as usize];
    for rep in 0..reps {
        let sim = simulate_followup(&post, d1, 0x5bb5_9100 + rep as u64).unwrap();
        for arrival in &sim.new_users {
            day_sums[arrival.day as usize - 1] += 1.0;
        }
    }

    for t in 1..=d1 {
        let expected = expected_unseen(&post, t) - expected_unseen(&post, t - 1);
        let observed = day_sums[t as usize - 1] / reps as f64;
        // Per-day arrival variance is below NegBin variance of the total;
        // five sigma of a conservative bound keeps this stable.
        let se = (expected * 2.0 / reps as f64).sqrt();
        assert!(
            (observed - expected).abs() <= 5.0 * se.max(1e-3),
            "day {t}: observed {observed:.4}, expected {expected:.4}"
        );
    }
}

/// The reported target-day interval is insensitive to the simulation
/// horizon once censoring is negligible: doubling it moves nearest-rank
/// endpoints by at most one day.
#[test]
fn target_day_interval_robust_to_horizon() {
    let hyper = HyperParams::with_unit_dispersion(0.5, 4.0, 1.0).unwrap();
    let stats = SufficientStats {
        model: Model::Be,
        d0: 10,
        n_users: 20,
        per_user: BTreeMap::from([(2u64, 12), (5, 6), (8, 2)]),
        daily_counts: BTreeMap::new(),
        total_triggers: Some(2 * 12 + 5 * 6 + 8 * 2),
    };
    let post = build_posterior(&stats, &hyper).unwrap();

    let mut cfg = HorizonConfig::new(post.n_users + 10);
    cfg.draws = 4000;
    cfg.seed = 0x5bb5_9200;

    cfg.horizon = SearchHorizon::Fixed(60);
    let narrow = sample_dm(&post, &cfg).unwrap();
    cfg.horizon = SearchHorizon::Fixed(120);
    let wide = sample_dm(&post, &cfg).unwrap();
    assert!(narrow.censor_fraction() < 0.001);
    assert!(wide.censor_fraction() < 0.001);

    let i_narrow = posterior_interval_dm(&narrow, 0.9).unwrap();
    let i_wide = posterior_interval_dm(&wide, 0.9).unwrap();
    assert!(!i_narrow.hi_open && !i_wide.hi_open);
    assert!(
        (i_narrow.lo as i64 - i_wide.lo as i64).abs() <= 1,
        "lower endpoint moved: {} vs {}",
        i_narrow.lo,
        i_wide.lo
    );
    assert!(
        (i_narrow.hi as i64 - i_wide.hi as i64).abs() <= 1,
        "upper endpoint moved: {} vs {}",
        i_narrow.hi,
        i_wide.hi
    );
}
