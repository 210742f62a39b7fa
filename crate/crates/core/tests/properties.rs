mod common;

use proptest::prelude::*;
use qeu::bench::{bench_instance, KernelChoice};
use qeu::fixtures::Instance;
use qeu::model::EstimatorConfig;
use qeu::oracle::{grid_distribution, grid_utility, qu_optimistic, OracleOptions};
use qeu::{Estimator, PossibilityModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn seeded(seed: u64, n: usize, kernels: KernelChoice) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    common::instance(&mut rng, n, 6, kernels)
}

fn kernels() -> impl Strategy<Value = KernelChoice> {
    prop_oneof![
        Just(KernelChoice::Linear),
        Just(KernelChoice::Exponential),
        Just(KernelChoice::Mixed)
    ]
}

/// Brute-force `max_y min(π(y), u(y))` on a lattice, evaluated point by point.
fn lattice_qu(inst: &Instance, g: usize) -> f64 {
    let pol = inst.polarities();
    let model = PossibilityModel::new(&inst.case_base, &inst.query, &pol).unwrap();
    common::lattice(g, inst.case_base.outcome_dim())
        .iter()
        .map(|y| model.distribution(y).min(common::utility(inst, y)))
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // h(α) ≥ α exactly when some point of the α-cut has utility ≥ α
    #[test]
    fn frontier_score_decides_level(seed in any::<u64>(), n in 1usize..=3, k in kernels(), alpha in 0.01f64..=1.0) {
        let inst = seeded(seed, n, k);
        let pol = inst.polarities();
        let est = Estimator::new(&inst.case_base, &inst.query, &pol, &inst.utility).unwrap();
        let model = est.model();
        let h = est.score(alpha);
        let g = 41;
        let dense = common::lattice(g, n)
            .into_iter()
            .filter(|y| model.distribution(y) >= alpha)
            .map(|y| common::utility(&inst, &y))
            .fold(f64::NEG_INFINITY, f64::max);
        match h {
            None => prop_assert!(dense == f64::NEG_INFINITY),
            Some(h) => {
                prop_assert!(h >= dense - 1e-12);
                // lattice points lie within one spacing of every vertex
                prop_assert!(h <= dense + 1.0 / (g - 1) as f64 + 1e-12);
            }
        }
    }

    #[test]
    fn predicted_outcomes_are_optimal(seed in any::<u64>(), n in 1usize..=2, k in kernels()) {
        let inst = seeded(seed, n, k);
        let pol = inst.polarities();
        let est = Estimator::new(&inst.case_base, &inst.query, &pol, &inst.utility).unwrap();
        let r = est.estimate(&EstimatorConfig::default()).unwrap();
        let model = est.model();
        let g = 101;
        let tol = inst.case_base.max_outcome_lipschitz() * n as f64 / (g - 1) as f64 + 1e-6;
        let grid = lattice_qu(&inst, g);
        prop_assert!(!r.outcomes.is_empty());
        for o in &r.outcomes {
            let u = common::utility(&inst, &o.coords);
            prop_assert!((u - o.utility).abs() <= 1e-12);
            prop_assert!(model.distribution(&o.coords) >= r.alpha0 - 1e-9);
            prop_assert!(u >= r.alpha0 - 1e-9);
            prop_assert!(u.min(model.distribution(&o.coords)) >= grid - tol);
        }
        prop_assert!((r.alpha0 - grid).abs() <= tol + 1e-6);
    }

    // the G lattice is a subset of the 2G−1 lattice
    #[test]
    fn refining_the_grid_never_lowers_the_value(seed in any::<u64>(), n in 1usize..=2, k in kernels(), g in 3usize..=21) {
        let inst = seeded(seed, n, k);
        prop_assert!(lattice_qu(&inst, 2 * g - 1) >= lattice_qu(&inst, g) - 1e-15);
    }

    #[test]
    fn oracle_value_bounds_every_lattice_point(seed in any::<u64>(), n in 1usize..=3, k in kernels()) {
        let inst = seeded(seed, n, k);
        let pol = inst.polarities();
        let model = PossibilityModel::new(&inst.case_base, &inst.query, &pol).unwrap();
        let g = 11;
        let opts = OracleOptions::default();
        let pi = grid_distribution(&model, g, &opts).unwrap();
        let u = grid_utility(&inst.utility, &pol, g, &opts).unwrap();
        let (qu, argmax) = qu_optimistic(&pi, &u).unwrap();
        let pts = common::lattice(g, n);
        for y in &pts {
            prop_assert!(qu >= model.distribution(y).min(common::utility(&inst, y)) - 1e-15);
        }
        prop_assert!((qu - lattice_qu(&inst, g)).abs() <= 1e-12);
        for j in argmax {
            let y = &pts[j];
            prop_assert!((model.distribution(y).min(common::utility(&inst, y)) - qu).abs() <= 1e-12);
        }
    }

    #[test]
    fn higher_cuts_are_nested(seed in any::<u64>(), n in 1usize..=3, k in kernels(), a in 0.01f64..=1.0, b in 0.01f64..=1.0) {
        let inst = seeded(seed, n, k);
        let pol = inst.polarities();
        let model = PossibilityModel::new(&inst.case_base, &inst.query, &pol).unwrap();
        let (lo, hi) = (a.min(b), a.max(b));
        let outer = model.distribution_cut(lo);
        for c in model.distribution_cut(hi).cuboids {
            let corners = [
                c.intervals.iter().map(|iv| iv[0]).collect::<Vec<_>>(),
                c.intervals.iter().map(|iv| iv[1]).collect::<Vec<_>>(),
            ];
            for y in corners {
                prop_assert!(outer.contains(&y, 1e-12));
            }
        }
    }

    #[test]
    fn estimate_is_deterministic(seed in any::<u64>(), n in 1usize..=4) {
        let inst = seeded(seed, n, KernelChoice::Mixed);
        let pol = inst.polarities();
        let est = Estimator::new(&inst.case_base, &inst.query, &pol, &inst.utility).unwrap();
        let config = EstimatorConfig::default();
        prop_assert_eq!(est.estimate(&config).unwrap(), est.estimate(&config).unwrap());
    }
}

#[test]
fn bench_instances_are_seed_determined() {
    for n in 1..=5 {
        let a = bench_instance(42, 5, n, 30).unwrap();
        let b = bench_instance(42, 5, n, 30).unwrap();
        assert_eq!(a.case_base, b.case_base);
        assert_eq!(a.utility, b.utility);
        let e = |i: &Instance| {
            let pol = i.polarities();
            Estimator::new(&i.case_base, &i.query, &pol, &i.utility)
                .unwrap()
                .estimate(&EstimatorConfig::default())
                .unwrap()
                .alpha0
        };
        assert_eq!(e(&a), e(&b));
    }
}
