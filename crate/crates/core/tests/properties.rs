mod common;

use std::sync::{Arc, OnceLock};

use anyonic::mach_zehnder::{
    averaged_state, charge_classes, fixed_state, n_probe_posterior, single_probe_update, Outcome,
};
use anyonic::model_file::{export_model, import_model};
use anyonic::model_library::{z_n, Level};
use anyonic::state_space::PairDensityMatrix;
use anyonic::{AnyonError, AnyonModel};
use common::{random_case, random_state};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn models() -> &'static [Arc<AnyonModel>] {
    static POOL: OnceLock<Vec<Arc<AnyonModel>>> = OnceLock::new();
    POOL.get_or_init(common::model_pool)
}

fn zero_ok<T>(r: Result<T, AnyonError>) -> Option<T> {
    match r {
        Ok(v) => Some(v),
        Err(AnyonError::ZeroProbability(_)) => None,
        Err(e) => panic!("{e}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: std::env::var("ANYONIC_PROP_CASES").ok().and_then(|v| v.parse().ok()).unwrap_or(200), failure_persistence: None, rng_seed: RngSeed::Fixed(0x616e_796f), ..ProptestConfig::default() })]

    #[test]
    fn outcome_order_does_not_matter(idx in 0..6usize, seed in any::<u64>()) {
        let case = random_case(models(), idx, seed);
        let ru = zero_ok(single_probe_update(&case.rho, &case.p, Outcome::Right))
            .and_then(|(p1, s)| zero_ok(single_probe_update(&s, &case.p, Outcome::Up)).map(|(p2, s)| (p1 * p2, s)));
        let ur = zero_ok(single_probe_update(&case.rho, &case.p, Outcome::Up))
            .and_then(|(p1, s)| zero_ok(single_probe_update(&s, &case.p, Outcome::Right)).map(|(p2, s)| (p1 * p2, s)));
        if let (Some((pa, a)), Some((pb, b))) = (ru, ur) {
            prop_assume!(pa > 1e-8);
            prop_assert!((pa - pb).abs() < 1e-12, "{}: {pa} vs {pb}", case.label);
            prop_assert!(a.distance(&b) < 1e-8, "{}", case.label);
            let (pr, post) = n_probe_posterior(&case.rho, &case.p, 2, 1).unwrap();
            prop_assert!((2.0 * pa - pr).abs() < 1e-12, "{}: 2 x {pa} vs {pr}", case.label);
            prop_assert!(post.distance(&a) < 1e-8, "{}", case.label);
        }
    }

    #[test]
    fn averaged_state_is_the_outcome_average(idx in 0..6usize, seed in any::<u64>(), n_total in 1..8u64) {
        let case = random_case(models(), idx, seed);
        let avg = averaged_state(&case.rho, &case.p, n_total).unwrap();
        let mut acc: Option<PairDensityMatrix> = None;
        for n in 0..=n_total {
            if let Some((pr, post)) = zero_ok(n_probe_posterior(&case.rho, &case.p, n_total, n)) {
                let term = post.scaled(pr);
                acc = Some(match acc { None => term, Some(x) => x.plus(&term) });
            }
        }
        prop_assert!(avg.distance(&acc.unwrap()) < 1e-9, "{}", case.label);
    }

    #[test]
    fn fixed_states_are_invariant(idx in 0..6usize, seed in any::<u64>()) {
        let case = random_case(models(), idx, seed);
        let model = case.rho.model();
        // Weak tunneling leaves distinct charges within CLASS_TOL of each other; only exact classes are invariant.
        let part = charge_classes(model, &case.p, 1e-12);
        let probs = part.class_probabilities(&case.rho);
        for (k, pr) in probs.iter().enumerate() {
            if *pr < 1e-6 {
                continue;
            }
            let (_, fixed) = fixed_state(&case.rho, &case.p, &part, k).unwrap();
            for s in [Outcome::Right, Outcome::Up] {
                if let Some((_, next)) = zero_ok(single_probe_update(&fixed, &case.p, s)) {
                    prop_assert!(next.distance(&fixed) < 1e-7, "{} class {k} {s:?}", case.label);
                }
            }
        }
    }

    #[test]
    fn averaging_is_linear(idx in 0..6usize, seed in any::<u64>(), w in 0.0..1.0f64) {
        let case = random_case(models(), idx, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let other = random_state(case.rho.model(), case.rho.superselection().is_some(), &mut rng);
        let mix = case.rho.scaled(w).plus(&other.scaled(1.0 - w));
        let lhs = averaged_state(&mix, &case.p, 3).unwrap();
        let rhs = averaged_state(&case.rho, &case.p, 3).unwrap().scaled(w).plus(&averaged_state(&other, &case.p, 3).unwrap().scaled(1.0 - w));
        prop_assert!(lhs.distance(&rhs) < 1e-10, "{}", case.label);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, rng_seed: RngSeed::Fixed(0x616e_796f), ..ProptestConfig::default() })]

    #[test]
    fn abelian_models_round_trip(n in 2..9usize, k in 0..9i64, half in any::<bool>()) {
        let level = if half && n % 2 == 0 { Level::Half(2 * k + 1) } else { Level::Integer(k) };
        let m = z_n(n, level).unwrap();
        prop_assert!(m.verify_model().passed());
        let text = export_model(&m);
        let back = import_model(&text).unwrap();
        prop_assert_eq!(export_model(&back), text);
    }
}
