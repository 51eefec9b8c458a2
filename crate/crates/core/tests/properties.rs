use multifar::laplace::laplace_hit_3far_for;
use multifar::{
    array_gain, asymptotic_gain, build_uca, fusion_error_probs, hp_numeric, ilt, laplace_hit_recursive,
    laplace_hit_vector, local_error_probs, pbar_laplace, pbar_time, run_particle_sim, AutoModel, Complex, FusionRule,
    IltConfig, SeriesControl, SimConfig, System,
};
use proptest::prelude::*;

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn point() -> impl Strategy<Value = [f64; 3]> {
    (
        prop::array::uniform3(-1.0f64..1.0).prop_filter("away from zero", |v| norm(*v) > 0.1),
        6.0f64..40.0,
    )
        .prop_map(|(v, r)| {
            let n = norm(v);
            [v[0] / n * r, v[1] / n * r, v[2] / n * r]
        })
}

/// Valid systems only; overlapping draws are rejected.
fn system(max_n: usize) -> impl Strategy<Value = System> {
    (prop::collection::vec(point(), 1..=max_n), 1.0f64..4.0, 20.0f64..200.0)
        .prop_filter_map("overlapping or enclosing", |(pos, a, d)| System::new(pos, a, d).ok())
}

fn ring() -> impl Strategy<Value = (usize, f64, f64, f64, f64)> {
    (2usize..=8, 8.0f64..30.0, -20.0f64..20.0, 1.0f64..4.0, 50.0f64..200.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pairwise_r_is_distance_from_closest_point(sys in system(5)) {
        for i in 0..sys.len() {
            let x = sys.positions()[i];
            let scale = 1.0 - sys.radius() / norm(x);
            let c = [x[0] * scale, x[1] * scale, x[2] * scale];
            for j in (0..sys.len()).filter(|&j| j != i) {
                let y = sys.positions()[j];
                let want = norm([y[0] - c[0], y[1] - c[1], y[2] - c[2]]);
                let got = sys.pairwise_r(i, j).unwrap();
                prop_assert!((got - want).abs() <= 1e-9 * want);
            }
        }
    }

    #[test]
    fn ring_distances_are_symmetric_and_ordered((n, d, w, a, dc) in ring()) {
        let Ok((sys, uca)) = build_uca(n, d, w, a, dc) else { return Ok(()) };
        prop_assert_eq!(uca.neighbor_distances.len(), (n - 1).div_ceil(2));
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let rij = sys.pairwise_r(i, j).unwrap();
                prop_assert!((rij - sys.pairwise_r(j, i).unwrap()).abs() <= 1e-9 * rij);
                let m = (j + n - i) % n;
                let class = m.min(n - m);
                prop_assert!((rij - uca.neighbor_distances[class - 1]).abs() <= 1e-9 * rij);
            }
        }
        for pair in uca.neighbor_distances.windows(2) {
            prop_assert!(pair[0] < pair[1]);
        }
    }

    #[test]
    fn laplace_methods_agree_and_stay_bounded(sys in system(6), log_s in -2.0f64..2.0) {
        let s = Complex::new(10f64.powf(log_s), 0.0);
        let m = laplace_hit_vector(s, &sys).unwrap().values;
        for (i, &mi) in m.iter().enumerate() {
            let r = sys.distances()[i];
            let scale = mi.norm().max(1e-300);
            prop_assert!(mi.im.abs() <= 1e-12 * scale.max(1.0));
            prop_assert!(mi.re > 0.0 && mi.re < sys.radius() / (s.re * r));
            prop_assert!(mi.re <= pbar_laplace(s, r, sys.radius(), sys.diffusion()).unwrap().re);
            let rec = laplace_hit_recursive(s, i, &sys).unwrap();
            prop_assert!((mi - rec).norm() <= 1e-10 * scale);
            if sys.len() == 3 {
                prop_assert!((mi - laplace_hit_3far_for(s, &sys, i).unwrap()).norm() <= 1e-10 * scale);
            }
        }
    }

    #[test]
    fn final_value_matches_asymptotic_gain((n, d, w, a, dc) in ring()) {
        let Ok((sys, uca)) = build_uca(n, d, w, a, dc) else { return Ok(()) };
        let s = Complex::new(1e-12, 0.0);
        let limit = (s * laplace_hit_vector(s, &sys).unwrap().values[0]).re;
        let want = asymptotic_gain(&uca) / n as f64 * a / uca.distance;
        prop_assert!((limit - want).abs() <= 1e-5 * want);
    }

    #[test]
    fn inversion_reproduces_isolated_closed_form(
        x_minus_a in 1.0f64..40.0, a in 1.0f64..5.0, d in 10.0f64..300.0, z in 0.05f64..5.0,
    ) {
        // Pick t so that (x - a)/sqrt(4 D t) = z, then keep it in [0.01, 100].
        let t = (x_minus_a / z).powi(2) / (4.0 * d);
        prop_assume!((1e-2..=1e2).contains(&t));
        let x = x_minus_a + a;
        let inv = ilt(|s| pbar_laplace(s, x, a, d), t, &IltConfig::default()).unwrap();
        prop_assert!((inv - pbar_time(t, x, a, d).unwrap()).abs() <= 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn curves_are_monotone_dominated_and_conserving(sys in system(4)) {
        let times: Vec<f64> = (0..12).map(|k| 0.05 * 1.6f64.powi(k)).collect();
        let curve = hp_numeric(&times, &sys, &IltConfig::default()).unwrap();
        let v = curve.violations(&sys, 1e-7);
        prop_assert!(v.is_empty(), "{:?}", v);
    }

    #[test]
    fn ring_gain_does_not_grow((n, d, w, a, dc) in ring()) {
        let Ok((sys, uca)) = build_uca(n, d, w, a, dc) else { return Ok(()) };
        let model = AutoModel::new(sys, uca, SeriesControl::default(), IltConfig::default());
        let mut last = f64::INFINITY;
        for k in 0..20 {
            let t = 0.01 * 10f64.powf(k as f64 * 4.0 / 19.0);
            let g = array_gain(t, &model).unwrap();
            prop_assert!(g <= last * (1.0 + 1e-9), "g rose to {} at t = {}", g, t);
            last = g;
        }
    }

    #[test]
    fn simulation_counts_are_exclusive_and_reproducible(seed in any::<u64>(), trials in 1u64..400) {
        let sys = System::new(vec![[6.0, 0.0, 0.0], [-7.0, 2.0, 0.0]], 2.0, 100.0).unwrap();
        let mut cfg = SimConfig::new(0.2, trials, seed);
        cfg.record_stride = 100;
        let a = run_particle_sim(&sys, &cfg).unwrap();
        prop_assert_eq!(&a, &run_particle_sim(&sys, &cfg).unwrap());
        for k in 0..a.times.len() {
            prop_assert!(a.counts.iter().map(|c| c[k]).sum::<u64>() <= trials);
            if k > 0 {
                prop_assert!(a.counts.iter().all(|c| c[k] >= c[k - 1]));
            }
        }
    }
}

proptest! {
    #[test]
    fn local_errors_trade_off_in_threshold(l0 in 0.0f64..30.0, extra in 0.0f64..30.0, eta in 0u64..80) {
        let (pm0, pf0) = local_error_probs(l0, l0 + extra, eta);
        let (pm1, pf1) = local_error_probs(l0, l0 + extra, eta + 1);
        prop_assert!(pm1 >= pm0 - 1e-15);
        prop_assert!(pf1 <= pf0 + 1e-15);
    }

    #[test]
    fn fused_errors_trade_off_in_k(pm in 0.0f64..=1.0, pf in 0.0f64..=1.0, n in 1usize..=12) {
        let mut last = (0.0, 1.0);
        for k in 1..=n {
            let (qm, qf) = fusion_error_probs(pm, pf, FusionRule::new(k, n).unwrap());
            prop_assert!(qm >= last.0 - 1e-15 && qf <= last.1 + 1e-15);
            last = (qm, qf);
        }
    }

    #[test]
    fn or_and_are_the_extreme_k(pm in 0.0f64..=1.0, pf in 0.0f64..=1.0, n in 1usize..=10) {
        let ni = n as i32;
        let or = fusion_error_probs(pm, pf, FusionRule::or(n).unwrap());
        let and = fusion_error_probs(pm, pf, FusionRule::and(n).unwrap());
        prop_assert!((or.0 - pm.powi(ni)).abs() <= 1e-14);
        prop_assert!((or.1 - (1.0 - (1.0 - pf).powi(ni))).abs() <= 1e-14);
        prop_assert!((and.0 - (1.0 - (1.0 - pm).powi(ni))).abs() <= 1e-14);
        prop_assert!((and.1 - pf.powi(ni)).abs() <= 1e-14);
    }
}
