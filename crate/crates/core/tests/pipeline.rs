//! Library-level pipelines checked against plain recomputation.

use proptest::prelude::*;

use spde_lab::experiments::{estimate_strong_error, estimate_weak_error, functional, McConfig, Threads};
use spde_lab::models::{build_anderson, build_chc};
use spde_lab::noise::{derive_seed, NoiseBundle};
use spde_lab::schemes::{simulate_path, SchemeKind};
use spde_lab::spectral::CoeffState;

// Recompute weak and strong estimates from explicit bundles, one sample at a time.
fn by_hand(model: &spde_lab::models::ModelSpec, kind: SchemeKind, n: usize, n_ref: usize, samples: usize, seed: u64) -> (f64, f64) {
    let phi = functional("exp_neg_sq_norm").unwrap();
    let mut weak = Vec::new();
    let mut strong = Vec::new();
    for s in 0..samples {
        let fine = NoiseBundle::sample(model.modes(), n_ref, model.t_end(), derive_seed(seed, s as u64)).unwrap();
        let r = simulate_path(model, kind, &fine).unwrap();
        let c = simulate_path(model, kind, &fine.coarsen(n_ref / n).unwrap()).unwrap();
        weak.push((phi.eval)(&r) - (phi.eval)(&c));
        strong.push(r.iter().zip(c.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>());
    }
    let k = samples as f64;
    (weak.iter().sum::<f64>() / k, (strong.iter().sum::<f64>() / k).sqrt())
}

#[test]
fn coupled_estimators_match_explicit_bundles() {
    let anderson = build_anderson(6, 0.1, 0.5, CoeffState::unit(6, 0), 1.0).unwrap();
    let chc = build_chc(5, 0.5, CoeffState::unit(5, 0), 1.0).unwrap();
    let phi = functional("exp_neg_sq_norm").unwrap();
    for (model, kind) in [(&anderson, SchemeKind::ExponentialEuler), (&chc, SchemeKind::LinearImplicitEuler)] {
        let mc = McConfig::new(40, 3).with_threads(Threads::Fixed(2));
        let w = estimate_weak_error(model, kind, &phi, 8, 64, &mc).unwrap();
        let s = estimate_strong_error(model, kind, 8, 64, &mc).unwrap();
        let (w_hand, s_hand) = by_hand(model, kind, 8, 64, 40, 3);
        assert!((w.estimate - w_hand).abs() <= 1e-15 * w_hand.abs().max(1e-300), "{} vs {w_hand}", w.estimate);
        assert!((s.estimate - s_hand).abs() <= 1e-14 * s_hand, "{} vs {s_hand}", s.estimate);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn bundle_file_round_trip(m in 1usize..6, log_n in 0u32..7, seed in any::<u64>()) {
        let b = NoiseBundle::sample(m, 1 << log_n, 0.5, seed).unwrap();
        let mut bytes = Vec::new();
        b.write_to(&mut bytes).unwrap();
        prop_assert_eq!(NoiseBundle::read_from(bytes.as_slice()).unwrap(), b);
    }

    #[test]
    fn coarsening_composes(m in 1usize..4, seed in any::<u64>(), a in 0u32..4, b in 0u32..4) {
        let fine = NoiseBundle::sample(m, 64, 1.0, seed).unwrap();
        let two_step = fine.coarsen(1 << a).unwrap().coarsen(1 << b).unwrap();
        let one_step = fine.coarsen(1 << (a + b)).unwrap();
        prop_assert_eq!(two_step.increments(), one_step.increments());
    }

    #[test]
    fn noiseless_paths_ignore_seed(seed in any::<u64>(), n_log in 1u32..6) {
        let model = build_anderson(4, 0.2, 0.0, CoeffState::unit(4, 1), 1.0).unwrap();
        let n = 1 << n_log;
        let a = simulate_path(&model, SchemeKind::LinearImplicitEuler, &NoiseBundle::sample(4, n, 1.0, seed).unwrap()).unwrap();
        let b = simulate_path(&model, SchemeKind::LinearImplicitEuler, &NoiseBundle::sample(4, n, 1.0, 0).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }
}
