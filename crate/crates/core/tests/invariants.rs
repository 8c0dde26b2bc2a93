//! Randomized invariants of the flow primitives, the canonical reduction and
//! the augmentation graph.

mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use santa_alloc::auggraph::{AugSolution, build_aug_instance, check_feasible, sigma_bar};
use santa_alloc::flowcore::{Edge, check_conservation, decompose, decompose_unit, max_flow_integral, recompose};
use santa_alloc::instance::Assignment;
use santa_alloc::reduction::{canonicalize, lift_assignment};
use santa_alloc::rounding::gamma_schedule;

/// Random DAG on `n` vertices (edges go from lower to higher ids) and an
/// integral flow made of random paths from vertex 0 to vertex `n - 1`.
fn dag_flow(rng: &mut ChaCha8Rng, n: usize) -> (Vec<Edge>, Vec<u32>) {
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if v == u + 1 || rng.gen_bool(0.3) {
                edges.push(Edge { tail: u, head: v });
            }
        }
    }
    let mut flow = vec![0u32; edges.len()];
    for _ in 0..rng.gen_range(0..5) {
        let mut v = 0;
        while v != n - 1 {
            let out: Vec<usize> = (0..edges.len()).filter(|&e| edges[e].tail == v).collect();
            let e = out[rng.gen_range(0..out.len())];
            flow[e] += 1;
            v = edges[e].head;
        }
    }
    (edges, flow)
}

fn terminals(n: usize) -> Vec<bool> {
    (0..n).map(|v| v == 0 || v == n - 1).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn decomposition_recomposes_exactly(seed in any::<u64>(), n in 2usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (edges, flow) = dag_flow(&mut rng, n);
        let term = terminals(n);
        let paths = decompose(n, &edges, &flow, &term).unwrap();
        prop_assert_eq!(recompose(edges.len(), &paths), flow.clone());
        for p in &paths {
            prop_assert!(p.weight > 0);
            prop_assert_eq!(edges[p.edges[0]].tail, 0);
            prop_assert_eq!(edges[*p.edges.last().unwrap()].head, n - 1);
            for w in p.edges.windows(2) {
                prop_assert_eq!(edges[w[0]].head, edges[w[1]].tail);
            }
        }
        let units = decompose_unit(n, &edges, &flow, &term).unwrap();
        let out_of_source: u32 = (0..edges.len()).filter(|&e| edges[e].tail == 0).map(|e| flow[e]).sum();
        prop_assert_eq!(units.len() as u32, out_of_source);
    }

    #[test]
    fn max_flow_respects_capacities_and_cuts(seed in any::<u64>(), n in 2usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (edges, _) = dag_flow(&mut rng, n);
        let cap: Vec<i64> = edges.iter().map(|_| rng.gen_range(0..3)).collect();
        let supply = rng.gen_range(0..6);
        let (value, f) = max_flow_integral(n, &edges, &[(0, supply)], n - 1, &cap).unwrap();
        prop_assert!(value <= supply);
        let into_sink: i64 = (0..edges.len()).filter(|&e| edges[e].head == n - 1).map(|e| cap[e]).sum();
        prop_assert!(value <= into_sink);
        prop_assert!(f.iter().zip(&cap).all(|(x, c)| *x >= 0 && x <= c));
        check_conservation(n, &edges, &f, &terminals(n)).unwrap();
        let delivered: i64 = (0..edges.len()).filter(|&e| edges[e].head == n - 1).map(|e| f[e]).sum();
        prop_assert_eq!(delivered, value);
    }

    #[test]
    fn gamma_schedule_grows_geometrically(g0 in 1.0f64..1e3, n in 2usize..1000, h in 1usize..6) {
        let s = gamma_schedule(g0, n, h);
        prop_assert_eq!(s.len(), h);
        prop_assert_eq!(s[0], g0);
        for w in s.windows(2) {
            prop_assert!(w[1] > w[0]);
            prop_assert!((w[1] / w[0] - (1.0 + 1.0 / (n as f64).log2())).abs() < 1e-9);
        }
    }

    #[test]
    fn canonical_lift_covers_every_basic_player(seed in any::<u64>(), gamma in prop_oneof![Just(1.0), Just(2.0), Just(8.0)]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_instance(2, 4, &mut rng);
        let canon = canonicalize(&inst, gamma).unwrap();
        prop_assert_eq!(canon.num_basic(), 2);
        let sigma = Assignment { owner: (0..4).map(|_| Some(rng.gen_range(0..2))).collect() };
        let lifted = lift_assignment(&canon, &sigma);
        prop_assert!(canon.uncovered_basic(&lifted).is_empty());
    }

    #[test]
    fn aug_instance_from_any_assignment_is_well_formed(seed in any::<u64>(), h in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = common::random_instance(3, 4, &mut rng);
        let canon = canonicalize(&inst, 4.0).unwrap();
        let m = canon.instance.num_resources();
        let q = canon.instance.num_players();
        let sigma = Assignment { owner: (0..m).map(|_| rng.gen_bool(0.6).then(|| rng.gen_range(0..q))).collect() };
        let bar = sigma_bar(&canon, &sigma);
        prop_assert_eq!(sigma_bar(&canon, &bar), bar.clone());
        let aug = build_aug_instance(&canon, &sigma, h).unwrap();
        prop_assert_eq!(aug.depth(), h);
        let zero = AugSolution::zero(&aug);
        prop_assert!(check_feasible(&aug, &zero, &[], 1.0, 1).is_ok());
        prop_assert_eq!(zero.congestion(), 0);
    }
}
