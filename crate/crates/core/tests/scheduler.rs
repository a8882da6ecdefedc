mod common;

use approx::assert_abs_diff_eq;
use mtrack::scheduler::{
    distribution_from_scores, sample_clips, ClipStats, Observation, SchedulerConfig, SchedulerState,
};
use proptest::prelude::*;

/// Probabilities written out directly: `(r + ε)^(γ/T)` normalized, mixed
/// with the uniform floor.
fn oracle(stats: &[ClipStats<f64>], cfg: &SchedulerConfig<f64>) -> Vec<f64> {
    let r: Vec<f64> = stats
        .iter()
        .map(|s| {
            let err = (s.error / cfg.c).min(1.0);
            let fail = 1.0 - s.success / (s.success + s.failure + cfg.eps_num);
            (1.0 - cfg.w) * err + cfg.w * fail
        })
        .collect();
    let pow: Vec<f64> = r
        .iter()
        .map(|x| (x + cfg.eps_num).powf(cfg.gamma / cfg.temperature))
        .collect();
    let z: f64 = pow.iter().sum();
    let n = stats.len() as f64;
    pow.iter()
        .map(|p| (1.0 - cfg.eps_explore) * p / z + cfg.eps_explore / n)
        .collect()
}

fn config() -> impl Strategy<Value = SchedulerConfig<f64>> {
    (
        0.0..=1.0f64,
        0.05..2.0f64,
        0.1..3.0f64,
        0.2..5.0f64,
        0.0..=1.0f64,
    )
        .prop_map(|(w, c, gamma, t, eps)| SchedulerConfig {
            w,
            c,
            gamma,
            temperature: t,
            eps_explore: eps,
            ..SchedulerConfig::default()
        })
}

fn stats() -> impl Strategy<Value = Vec<ClipStats<f64>>> {
    prop::collection::vec(
        (0.0..3.0f64, 0.0..1.0f64, 0.0..1.0f64).prop_map(|(error, success, failure)| ClipStats {
            error,
            success,
            failure,
            initialized: true,
        }),
        1..40,
    )
}

fn state_with(stats: &[ClipStats<f64>]) -> SchedulerState<f64> {
    let names = (0..stats.len()).map(|i| format!("c{i}")).collect();
    let mut s = SchedulerState::new(names).unwrap();
    s.stats_mut().copy_from_slice(stats);
    s
}

proptest! {
    #[test]
    fn distribution_properties(st in stats(), cfg in config()) {
        let state = state_with(&st);
        for r in state.difficulty_scores(&cfg) {
            prop_assert!((0.0..=1.0).contains(&r));
        }
        let p = state.sampling_distribution(&cfg);
        let total: f64 = p.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        let floor = cfg.eps_explore / st.len() as f64;
        for (pi, qi) in p.iter().zip(oracle(&st, &cfg)) {
            prop_assert!(*pi >= floor - 1e-12);
            prop_assert!((pi - qi).abs() < 1e-9);
        }
    }

    #[test]
    fn extreme_gamma_stays_finite(scores in prop::collection::vec(0.0..=1.0f64, 1..20), gamma in 50.0..400.0f64) {
        let cfg = SchedulerConfig { gamma, temperature: 0.05, ..SchedulerConfig::default() };
        let p = distribution_from_scores(&scores, &cfg);
        prop_assert!(p.iter().all(|x| x.is_finite()));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ema_error_stays_between(prev in 0.0..2.0f64, obs in 0.0..2.0f64, alpha in 0.0..=1.0f64) {
        let s = ClipStats { error: prev, initialized: true, ..ClipStats::default() };
        let e = s.update_error(obs, alpha).unwrap().error;
        prop_assert!(e >= prev.min(obs) - 1e-15 && e <= prev.max(obs) + 1e-15);
    }

    #[test]
    fn outcome_emas_stay_in_unit_interval(events in prop::collection::vec(any::<bool>(), 0..200), beta in 0.0..=1.0f64) {
        let mut s = ClipStats::<f64>::default();
        for ok in events {
            s = s.update_outcome(ok, beta);
            prop_assert!((0.0..=1.0).contains(&s.success));
            prop_assert!((0.0..=1.0).contains(&s.failure));
        }
    }

    #[test]
    fn checkpoint_round_trip(st in stats()) {
        let state = state_with(&st);
        let back = SchedulerState::<f64>::restore(&state.checkpoint()).unwrap();
        prop_assert_eq!(back, state);
    }
}

#[test]
fn fresh_state_is_uniform() {
    let cfg = SchedulerConfig::default();
    let state = SchedulerState::<f64>::new((0..7).map(|i| i.to_string()).collect()).unwrap();
    for p in state.sampling_distribution(&cfg) {
        assert_abs_diff_eq!(p, 1.0 / 7.0, epsilon = 1e-15);
    }
}

#[test]
fn batch_pools_repeated_clips() {
    let cfg = SchedulerConfig::default();
    let mut a = SchedulerState::<f64>::new(vec!["a".into(), "b".into()]).unwrap();
    a.apply_batch(
        &[Observation {
            clip: 0,
            error: 0.4,
            success: true,
        }],
        &cfg,
    )
    .unwrap();
    let mut pooled = a.clone();
    pooled
        .apply_batch(
            &[
                Observation {
                    clip: 0,
                    error: 0.1,
                    success: true,
                },
                Observation {
                    clip: 1,
                    error: 0.3,
                    success: false,
                },
                Observation {
                    clip: 0,
                    error: 0.3,
                    success: false,
                },
            ],
            &cfg,
        )
        .unwrap();
    let s = pooled.stats()[0];
    assert_abs_diff_eq!(s.error, 0.9 * 0.4 + 0.1 * 0.2, epsilon = 1e-15);
    let before = a.stats()[0];
    assert_abs_diff_eq!(
        s.success,
        0.95 * before.success + 0.05 * 0.5,
        epsilon = 1e-15
    );
    assert_abs_diff_eq!(
        s.failure,
        0.95 * before.failure + 0.05 * 0.5,
        epsilon = 1e-15
    );
    assert_eq!(pooled.stats()[1].error, 0.3);
}

#[test]
fn seeded_sampling_repeats() {
    let cfg = SchedulerConfig::default();
    let state = SchedulerState::<f64>::new((0..5).map(|i| i.to_string()).collect()).unwrap();
    assert_eq!(
        sample_clips(&state, &cfg, 64, 9).unwrap(),
        sample_clips(&state, &cfg, 64, 9).unwrap()
    );
}

#[test]
fn f32_matches_f64_loosely() {
    let cfg64 = SchedulerConfig::<f64>::default();
    let cfg32 = SchedulerConfig::<f32>::default();
    let scores = [0.1, 0.5, 0.9, 0.0];
    let p64 = distribution_from_scores(&scores, &cfg64);
    let p32 = distribution_from_scores(&scores.map(|x| x as f32), &cfg32);
    for (a, b) in p64.iter().zip(&p32) {
        assert!((a - f64::from(*b)).abs() < 1e-5);
    }
}
