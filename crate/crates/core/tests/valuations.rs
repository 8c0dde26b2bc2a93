//! Valuation oracles, the submodularity checker and the multilinear
//! extension: fixed values plus randomized invariants.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use santa_alloc::instance::{Assignment, Instance, SubmodularVerdict, ValuationOracle, check_submodular};
use santa_alloc::oracle::brute_opt;
use santa_alloc::sep::{multilinear_estimate, multilinear_exact};

#[test]
fn fixed_values() {
    let add = ValuationOracle::additive(vec![1.0, 0.5]).unwrap();
    assert_eq!(add.value(&[0, 1]), 1.5);
    assert_eq!(add.value(&[]), 0.0);
    assert_eq!(add.marginal(&[], 0).unwrap(), 1.0);

    let trunc = ValuationOracle::truncated_additive(vec![0.8, 0.8], 1.0).unwrap();
    assert_eq!(trunc.value(&[0, 1]), 1.0);
    assert!((trunc.marginal(&[0], 1).unwrap() - 0.2).abs() < 1e-12);

    let cov = ValuationOracle::weighted_coverage(vec![vec![0], vec![0]], vec![1.0]).unwrap();
    assert_eq!(cov.marginal(&[0], 1).unwrap(), 0.0);
}

#[test]
fn named_evaluation_through_instance() {
    let inst =
        Instance::new(vec!["r1".into(), "r2".into()], vec!["p".into()], vec![ValuationOracle::additive(vec![1.0, 0.5]).unwrap()])
            .unwrap();
    assert_eq!(inst.evaluate(0, &["r1", "r2"]).unwrap(), 1.5);
    assert!(inst.evaluate(0, &["r9"]).is_err());
}

#[test]
fn checker_verdicts() {
    let add = ValuationOracle::additive(vec![0.3, 0.1, 0.7]).unwrap();
    assert_eq!(check_submodular(&add).unwrap(), SubmodularVerdict::Ok);

    let trunc = ValuationOracle::truncated_additive(vec![0.4; 4], 1.0).unwrap();
    assert_eq!(check_submodular(&trunc).unwrap(), SubmodularVerdict::Ok);

    // f(a) = f(b) = 0, f(ab) = 1: strictly supermodular.
    let table = ValuationOracle::explicit_table_unchecked(2, vec![0, 1], vec![0.0, 0.0, 0.0, 1.0]).unwrap();
    assert_eq!(check_submodular(&table).unwrap(), SubmodularVerdict::Counterexample { a: vec![], b: vec![1], r: 0 });
    assert!(ValuationOracle::explicit_table(2, vec![0, 1], vec![0.0, 0.0, 0.0, 1.0]).is_err());
}

#[test]
fn truncated_multilinear_value() {
    // Outcomes ∅, {1}, {2}, {1,2} each with probability 1/4: (0 + 0.8 + 0.8 + 1) / 4.
    let f = ValuationOracle::truncated_additive(vec![0.8, 0.8], 1.0).unwrap();
    let v = multilinear_exact(|s| f.value(s), &[0.5, 0.5]).unwrap();
    assert!((v - 0.65).abs() < 1e-12, "{v}");
}

#[test]
fn multilinear_corners_and_additive() {
    let f = ValuationOracle::additive(vec![0.25, 0.5, 1.0]).unwrap();
    assert_eq!(multilinear_exact(|s| f.value(s), &[0.0; 3]).unwrap(), 0.0);
    assert_eq!(multilinear_exact(|s| f.value(s), &[1.0; 3]).unwrap(), 1.75);
    let x = [0.2, 0.6, 0.9];
    let v = multilinear_exact(|s| f.value(s), &x).unwrap();
    assert!((v - (0.05 + 0.3 + 0.9)).abs() < 1e-12);
    assert!(multilinear_exact(|s| f.value(s), &[1.5, 0.0, 0.0]).is_err());
}

#[test]
fn brute_force_small_cases() {
    let diag = Instance::from_valuations(vec![
        ValuationOracle::additive(vec![1.0, 0.0]).unwrap(),
        ValuationOracle::additive(vec![0.0, 1.0]).unwrap(),
    ])
    .unwrap();
    assert_eq!(brute_opt(&diag).unwrap().0, 1.0);
    let scarce = Instance::from_valuations(vec![
        ValuationOracle::additive(vec![1.0]).unwrap(),
        ValuationOracle::additive(vec![1.0]).unwrap(),
    ])
    .unwrap();
    assert_eq!(brute_opt(&scarce).unwrap().0, 0.0);
}

/// Independent optimum by recursive search over resource owners.
fn recursive_opt(inst: &Instance) -> f64 {
    fn go(inst: &Instance, r: usize, owner: &mut Vec<Option<usize>>) -> f64 {
        if r == inst.num_resources() {
            return inst.min_value(&Assignment { owner: owner.clone() });
        }
        let mut best = f64::NEG_INFINITY;
        for p in 0..inst.num_players() {
            owner[r] = Some(p);
            best = best.max(go(inst, r + 1, owner));
        }
        best
    }
    go(inst, 0, &mut vec![None; inst.num_resources()])
}

#[test]
fn brute_force_matches_recursive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for seed in 0..50 {
        let inst = common::random_instance(3, 4, &mut rng);
        let (opt, a) = brute_opt(&inst).unwrap();
        assert!((opt - recursive_opt(&inst)).abs() < 1e-12, "seed {seed}");
        assert!((inst.min_value(&a) - opt).abs() < 1e-12, "seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fixture_oracles_are_monotone_submodular(kind in 0usize..4, seed in any::<u64>(), k in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ground: Vec<usize> = (0..k).collect();
        let f = common::random_oracle(kind, k + 1, &ground, &mut rng);
        prop_assert_eq!(check_submodular(&f).unwrap(), SubmodularVerdict::Ok);
        prop_assert_eq!(f.value(&[k]), 0.0);
    }

    #[test]
    fn marginal_is_value_difference(kind in 0usize..4, seed in any::<u64>(), mask in 0usize..32, r in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ground: Vec<usize> = (0..5).collect();
        let f = common::random_oracle(kind, 5, &ground, &mut rng);
        let base: Vec<usize> = (0..5).filter(|j| mask >> j & 1 == 1 && *j != r).collect();
        let mut with = base.clone();
        with.push(r);
        with.sort_unstable();
        let m = f.marginal(&base, r).unwrap();
        prop_assert!((m - (f.value(&with) - f.value(&base))).abs() < 1e-12);
        prop_assert!(m >= -1e-12);
    }

    #[test]
    fn multilinear_is_between_corners(kind in 0usize..4, seed in any::<u64>(), x in proptest::collection::vec(0.0f64..=1.0, 4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ground: Vec<usize> = (0..4).collect();
        let f = common::random_oracle(kind, 4, &ground, &mut rng);
        let v = multilinear_exact(|s| f.value(s), &x).unwrap();
        prop_assert!(v >= -1e-12 && v <= f.value(&ground) + 1e-12);
        let est = multilinear_estimate(|s| f.value(s), &x, 4000, &mut rng).unwrap();
        prop_assert!((est - v).abs() <= 0.1 * f.value(&ground) + 1e-9, "estimate {} exact {}", est, v);
    }

    #[test]
    fn scaling_scales_values(seed in any::<u64>(), eta in 0.1f64..10.0, mask in 0usize..16) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_instance(2, 4, &mut rng);
        let scaled = inst.scaled(eta);
        let bundle: Vec<usize> = (0..4).filter(|j| mask >> j & 1 == 1).collect();
        for p in 0..2 {
            let a = inst.valuation(p).value(&bundle);
            let b = scaled.valuation(p).value(&bundle);
            prop_assert!((b * eta - a).abs() < 1e-9 * (1.0 + a));
        }
    }
}
