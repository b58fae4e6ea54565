//! Property tests for the structural invariants: alias identities, the
//! two-step equivalence, rate-estimator algebra, and format round-trips.

use momlab_core::*;
use proptest::prelude::*;

fn lambda_strategy() -> impl Strategy<Value = f64> {
    (0.05f64..0.95).prop_map(|x| (x * 100.0).round() / 100.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alias_identities_bitwise(lambda in lambda_strategy(), kexp in 3u32..8, seed in 0u64..1000) {
        let h = 2f64.powi(-(kexp as i32));
        let mut rng = rng::CounterRng::new(seed);
        let u0 = [rng.uniform_in(-2.0, 2.0), rng.uniform_in(-2.0, 2.0)];
        let obj = make_quadratic(5.0, 2).unwrap();
        let hb = run_hb(&obj, lambda, h, &u0, 60).unwrap();
        let gen0 = run_general(&obj, &MomentumParams::new(lambda, 0.0, h).unwrap(), &u0, 60).unwrap();
        prop_assert_eq!(&hb.points, &gen0.points);
        let nag = run_nag(&obj, lambda, h, &u0, 60).unwrap();
        let genl = run_general(&obj, &MomentumParams::new(lambda, lambda, h).unwrap(), &u0, 60).unwrap();
        prop_assert_eq!(&nag.points, &genl.points);
    }

    #[test]
    fn two_form_velocities_are_difference_quotients(
        lambda in lambda_strategy(),
        a_frac in 0.0f64..1.5,
        kexp in 3u32..9,
    ) {
        let h = 2f64.powi(-(kexp as i32));
        let obj = make_trigonometric(2, &[1.0, 2.0]).unwrap();
        let p = MomentumParams::new(lambda, a_frac * lambda, h).unwrap();
        let t = run_two_form(&obj, &p, &[0.9, -0.4], &[0.0, 0.0], 200).unwrap();
        let vs = t.velocities.as_ref().unwrap();
        for n in 1..t.points.len() {
            for i in 0..2 {
                let dq = (t.points[n][i] - t.points[n - 1][i]) / h;
                prop_assert!((dq - vs[n][i]).abs() <= 1e-12 * (1.0 + vs[n][i].abs()));
            }
        }
        // and the u-sequence is bitwise the general iteration
        let g = run_general(&obj, &p, &[0.9, -0.4], 200).unwrap();
        prop_assert_eq!(&g.points, &t.points);
    }

    #[test]
    fn rate_delta_antisymmetric(a in 1e-9f64..1e3, b in 1e-9f64..1e3) {
        let ab = rate_delta(a, b).unwrap();
        let ba = rate_delta(b, a).unwrap();
        prop_assert!((ab + ba).abs() < 1e-12);
        prop_assert!(rate_delta(a, a).unwrap().abs() < 1e-12);
    }

    #[test]
    fn fitted_order_recovers_power_law(p in 0.25f64..3.5, c in 0.1f64..10.0) {
        let hs: Vec<f64> = (2..9).map(|k| 2f64.powi(-k)).collect();
        let errs: Vec<f64> = hs.iter().map(|h| c * h.powf(p)).collect();
        let f = fit_order(&hs, &errs).unwrap();
        prop_assert!((f - p).abs() < 1e-10);
    }

    #[test]
    fn csv_floats_round_trip(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        let s = csvio::fmt_f64(x);
        let back: f64 = s.parse().unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn counter_rng_streams_disjoint_prefixes(seed in any::<u64>()) {
        let root = rng::CounterRng::new(seed);
        let mut a = root.split(1);
        let mut b = root.split(2);
        let pa: Vec<u64> = (0..4).map(|_| a.next_u64()).collect();
        let pb: Vec<u64> = (0..4).map(|_| b.next_u64()).collect();
        prop_assert_ne!(pa, pb);
    }
}

#[test]
fn modified_grad_zero_h_is_plain_gradient() {
    let obj = make_composite(3.0, 2, &[0.5, 1.0]).unwrap();
    let mut rng = rng::CounterRng::new(5);
    for _ in 0..50 {
        let u = [rng.uniform_in(-2.0, 2.0), rng.uniform_in(-2.0, 2.0)];
        assert_eq!(modified_grad(&obj, 17.0, 0.0, &u), obj.grad(&u));
    }
}
