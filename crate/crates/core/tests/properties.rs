mod common;

use nalgebra::DVector;
use proptest::prelude::*;
use robust_recon_core::oracle::feasible_sampler;
use robust_recon_core::{solve, EigenInterval, SolveOptions, UncertaintySpec};

fn spec_strategy(n: usize) -> impl Strategy<Value = UncertaintySpec> {
    let center = prop::collection::vec(-3.0f64..3.0, n).prop_map(DVector::from_vec);
    (center, prop::collection::vec(0.0f64..1.5, n), 0usize..5).prop_map(move |(c, w, kind)| match kind {
        0 => UncertaintySpec::point(c),
        1 => UncertaintySpec::boxed(c, DVector::from_vec(w)),
        2 => UncertaintySpec::l2_ball(c, w[0] * 2.0),
        3 => UncertaintySpec::l1_ball(c, w[0] * 2.0),
        _ => UncertaintySpec::eigen_box(c, w.iter().map(|&d| EigenInterval { lo: -d, hi: 0.5 * d }).collect()),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_lands_in_set_and_is_idempotent(seed in 0u64..1000, spec in spec_strategy(5), v in prop::collection::vec(-6.0f64..6.0, 5)) {
        let g = common::random_spd(&mut common::rng(seed), 5);
        let v = DVector::from_vec(v);
        let p = spec.project(&g, &v);
        prop_assert!(spec.violation(&g, &p) <= 1e-9);
        let pp = spec.project(&g, &p);
        prop_assert!((&pp - &p).amax() <= 1e-9 * (1.0 + p.amax()));
    }

    #[test]
    fn linear_min_bounds_every_sample(seed in 0u64..1000, spec in spec_strategy(4), c in prop::collection::vec(-2.0f64..2.0, 4)) {
        let g = common::random_spd(&mut common::rng(seed), 4);
        let c = DVector::from_vec(c);
        let lo = spec.linear_min(&g, &c);
        for x in feasible_sampler(&g, &spec, 50, seed).unwrap() {
            prop_assert!(c.dot(&x) >= lo - 1e-9 * (1.0 + lo.abs()));
        }
    }

    #[test]
    fn solution_is_feasible_and_at_most_the_center_norm(seed in 0u64..1000, spec in spec_strategy(6)) {
        let g = common::random_spd(&mut common::rng(seed), 6);
        let sol = solve(&g, &spec, &SolveOptions::default()).unwrap();
        prop_assert!(spec.violation(&g, &sol.x_hat) <= 1e-9);
        let center_norm = spec.center.dot(&g.solve(&spec.center));
        prop_assert!(sol.norm_sq <= center_norm * (1.0 + 1e-12) + 1e-12);
        prop_assert!(sol.report.gap <= 1e-8 * sol.norm_sq.max(1.0));
    }
}
