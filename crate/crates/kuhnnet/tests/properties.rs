use kuhnnet::analysis::{empirical_lipschitz, Domain};
use kuhnnet::builder::{build_approximator, build_approximator_shaped, build_global, encode_values};
use kuhnnet::gadgets::{build_median_net, build_memorizer_deep, build_memorizer_sqrt, deep_capacity, net_to_pwl, Samples1D};
use kuhnnet::kuhn::{cpwl_eval, cpwl_eval_hat, exact_lipschitz_l1, hat_value};
use kuhnnet::modulus::min_concave_from_grid;
use kuhnnet::{ReluNet, SampleGrid};
use proptest::prelude::*;

fn grid_strategy(max_d: usize, max_n: usize) -> impl Strategy<Value = SampleGrid> {
    (1..=max_d, 1..=max_n).prop_flat_map(|(d, n)| {
        let len = (n + 1).pow(d as u32);
        prop::collection::vec(-4.0f64..4.0, len).prop_map(move |v| encode_values(v, d, n).unwrap())
    })
}

fn grid_and_points(max_d: usize, max_n: usize) -> impl Strategy<Value = (SampleGrid, Vec<Vec<f64>>)> {
    grid_strategy(max_d, max_n).prop_flat_map(|g| {
        let d = g.d();
        (Just(g), prop::collection::vec(prop::collection::vec(0.0f64..=1.0, d), 1..40))
    })
}

fn samples_strategy(max_k: usize) -> impl Strategy<Value = Samples1D> {
    prop::collection::btree_set(0u32..2000, 1..=max_k).prop_flat_map(|xs| {
        let k = xs.len();
        (Just(xs), prop::collection::vec(-3.0f64..3.0, k)).prop_map(|(xs, ys)| {
            Samples1D::from_xy(xs.into_iter().map(|x| x as f64 / 2000.0).collect(), ys).unwrap()
        })
    })
}

fn json_round_trip(net: &ReluNet) -> ReluNet {
    ReluNet::deserialize(&net.serialize()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn net_hits_every_lattice_value(g in grid_strategy(3, 4)) {
        let net = build_approximator(&g).unwrap().net;
        for idx in g.indices() {
            prop_assert!((net.eval1(&g.point(&idx)) - g.value(&idx)).abs() <= 1e-9);
        }
    }

    #[test]
    fn net_matches_both_oracles((g, pts) in grid_and_points(3, 4)) {
        let net = build_approximator(&g).unwrap().net;
        for x in &pts {
            let a = cpwl_eval(&g, x).unwrap();
            prop_assert!((a - cpwl_eval_hat(&g, x).unwrap()).abs() <= 1e-9);
            prop_assert!((a - net.eval1(x)).abs() <= 1e-9);
        }
    }

    #[test]
    fn hats_sum_to_one((g, pts) in grid_and_points(3, 3)) {
        let n = g.n() as f64;
        for x in &pts {
            let scaled: Vec<f64> = x.iter().map(|v| v * n).collect();
            let total: f64 = g.indices().map(|y| hat_value(&y, &scaled)).sum();
            prop_assert!((total - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn empirical_slope_never_beats_exact(g in grid_strategy(3, 3), seed in 0u64..1000) {
        let net = build_approximator(&g).unwrap().net;
        let emp = empirical_lipschitz(&net, &Domain::unit(g.d()), 2000, seed, Some(g.n()));
        prop_assert!(emp <= exact_lipschitz_l1(&g) * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn grid_modulus_dominates_pairs((g, pts) in grid_and_points(2, 4)) {
        let m = min_concave_from_grid(&g);
        let net = build_approximator(&g).unwrap().net;
        for w in pts.windows(2) {
            let t: f64 = w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).sum();
            let gap = (net.eval1(&w[0]) - net.eval1(&w[1])).abs();
            prop_assert!(gap <= m.eval(t).unwrap() + 1e-9);
        }
    }

    #[test]
    fn global_agrees_on_cube_and_clamps_outside((g, pts) in grid_and_points(2, 3)) {
        let flat = build_approximator(&g).unwrap().net;
        let global = build_global(&g).unwrap().net;
        for x in &pts {
            prop_assert!((flat.eval1(x) - global.eval1(x)).abs() <= 1e-9);
            let far: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
            let clamped: Vec<f64> = far.iter().map(|v| v.clamp(0.0, 1.0)).collect();
            prop_assert!((global.eval1(&far) - flat.eval1(&clamped)).abs() <= 1e-9);
        }
    }

    #[test]
    fn shaped_build_equals_flat((g, pts) in grid_and_points(2, 3), cut in 1usize..8) {
        let len = g.len();
        let first = cut.min(len - 1).max(1);
        let shape = if len > 1 { vec![first, len - first] } else { vec![1] };
        let shaped = build_approximator_shaped(&g, &shape).unwrap().net;
        let flat = build_approximator(&g).unwrap().net;
        for x in &pts {
            prop_assert!((shaped.eval1(x) - flat.eval1(x)).abs() <= 1e-9);
        }
    }

    #[test]
    fn serialization_round_trips(g in grid_strategy(2, 3)) {
        let net = build_approximator(&g).unwrap().net;
        prop_assert_eq!(json_round_trip(&net), net);
        let back = SampleGrid::from_json(&g.to_json(), 1_000_000).unwrap();
        prop_assert_eq!(back.values(), g.values());
        let back = SampleGrid::from_csv(&g.to_csv(), 1_000_000).unwrap();
        prop_assert_eq!(back.values(), g.values());
    }

    #[test]
    fn median_ignores_order(d in 1usize..=3, mut v in prop::collection::vec(0.0f64..100.0, 7)) {
        v.truncate(2 * d + 1);
        let net = build_median_net(d);
        let out = net.eval1(&v);
        let mut rev = v.clone();
        rev.reverse();
        prop_assert!((net.eval1(&rev) - out).abs() <= 1e-9);
        v.sort_by(f64::total_cmp);
        prop_assert!((out - v[d]).abs() <= 1e-9);
    }

    #[test]
    fn sqrt_memorizer_is_the_linear_interpolant(smp in samples_strategy(60)) {
        let net = build_memorizer_sqrt(&smp).unwrap();
        let k = smp.len();
        let s = (1..).find(|s: &usize| s * s >= k).unwrap();
        prop_assert!(net.width() <= 2 * s);
        prop_assert!(net.count_nonzero_params(0.0) <= 2 * k + 8 * s);
        for i in 0..k {
            prop_assert!((net.eval1(&[smp.xs()[i]]) - smp.ys()[i]).abs() <= 1e-9);
        }
        for w in smp.xs().windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            prop_assert!((net.eval1(&[mid]) - smp.interpolate(mid)).abs() <= 1e-9);
        }
        let lip = net_to_pwl(&net).unwrap().lipschitz();
        prop_assert!((lip - smp.max_slope()).abs() <= 1e-9 * smp.max_slope().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn deep_memorizer_fits_its_profile(
        widths in prop::collection::vec(12usize..28, 3..5),
        seed in prop::collection::vec(-3.0f64..3.0, 200),
    ) {
        let cap = deep_capacity(&widths);
        prop_assume!(cap >= 1);
        let k = (cap as usize).min(seed.len());
        let xs: Vec<f64> = (0..k).map(|i| i as f64 / k as f64).collect();
        let smp = Samples1D::from_xy(xs, seed[..k].to_vec()).unwrap();
        let net = build_memorizer_deep(&smp, &widths).unwrap();
        for (w, c) in net.widthvec().iter().zip(widths.iter().chain([&8])) {
            prop_assert!(w <= c, "{:?} vs {:?}", net.widthvec(), widths);
        }
        for i in 0..k {
            prop_assert!((net.eval1(&[smp.xs()[i]]) - smp.ys()[i]).abs() <= 1e-7);
        }
        let sum: i64 = widths.iter().map(|&w| w as i64).sum();
        let bound = 2 * k as i64 + 23 * sum - 121 * widths.len() as i64;
        prop_assert!(net.count_nonzero_params(0.0) as i64 <= bound);
    }
}
