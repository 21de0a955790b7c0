use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use orthoflow::datagen::{ConstructionParams, L2Budget};
use orthoflow::flows::bilinear_q;
use orthoflow::harness::{num, random_field, ExperimentConfig, FieldSnapshot, GridPolicy};
use orthoflow::norms::{lp_of_samples, BesovSpec, DyadicProfile};
use orthoflow::solver::EvolutionConfig;
use orthoflow::{FourierGrid, SpectralVectorField};

fn even(lo: usize, hi: usize) -> impl Strategy<Value = usize> {
    (lo / 2..=hi / 2).prop_map(|h| 2 * h)
}

fn field(dims: [usize; 3], kmax: i64, decay: f64, seed: u64) -> SpectralVectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_field(&FourierGrid::new(dims).unwrap(), kmax, decay, &mut rng).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn leray_is_an_idempotent_divergence_free_projection(
        d0 in even(4, 12), d1 in even(4, 12), d2 in even(4, 12), seed in any::<u64>(), decay in 0.0..2.0f64,
    ) {
        let u = field([d0, d1, d2], 5, decay, seed);
        let p = u.leray_project();
        let scale = u.max_abs();
        prop_assert!(p.leray_project().max_diff(&p) <= 1e-12 * scale);
        prop_assert!(p.divergence_residual() <= 1e-10 * scale);
        // orthogonal projection: never increases energy
        prop_assert!(p.l2_norm() <= u.l2_norm() * (1.0 + 1e-14));
    }

    #[test]
    fn heat_flow_is_a_semigroup(seed in any::<u64>(), s in 0.0..0.5f64, t in 0.0..0.5f64) {
        let u = field([8, 8, 8], 3, 0.5, seed);
        let lhs = u.heat(s).unwrap().heat(t).unwrap();
        prop_assert!(lhs.max_diff(&u.heat(s + t).unwrap()) <= 1e-12 * u.max_abs());
        prop_assert!(u.heat(t).unwrap().l2_norm() <= u.l2_norm());
    }

    #[test]
    fn parseval_holds_on_the_grid(seed in any::<u64>(), d in even(6, 12)) {
        let u = field([d, d, 8], 2, 1.0, seed);
        let phys = u.evaluate_physical(1).unwrap();
        let quad = lp_of_samples(&phys.magnitude(), 2.0);
        prop_assert!((quad - u.l2_norm()).abs() <= 1e-10 * u.l2_norm());
    }

    #[test]
    fn bilinear_form_is_bitwise_symmetric(a in any::<u64>(), b in any::<u64>()) {
        let g = [12, 12, 12];
        let u = field(g, 2, 0.5, a).leray_project();
        let v = field(g, 2, 0.5, b).leray_project();
        let uv = bilinear_q(&u, &v).unwrap();
        prop_assert_eq!(&uv, &bilinear_q(&v, &u).unwrap());
        prop_assert!(uv.divergence_residual() <= 1e-10 * uv.max_abs().max(1e-300));
    }

    #[test]
    fn dyadic_shells_partition_unity(r in 1e-3..1e5f64) {
        let p = DyadicProfile::standard();
        let sum: f64 = p.shells(r, r).map(|j| p.shell_weight(j, r)).sum();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn snapshot_round_trip_is_byte_identical(
        d0 in even(4, 10), d1 in even(4, 10), d2 in even(4, 10), seed in any::<u64>(), project in any::<bool>(),
    ) {
        let mut u = field([d0, d1, d2], 4, 0.0, seed);
        if project {
            u = u.leray_project();
        }
        let bytes = FieldSnapshot::from_field(&u).to_bytes();
        let back = FieldSnapshot::from_bytes(&bytes).unwrap().to_field().unwrap();
        prop_assert_eq!(&back, &u);
        prop_assert_eq!(FieldSnapshot::from_field(&back).to_bytes(), bytes);
    }

    #[test]
    fn config_parse_serialize_is_a_fixed_point(
        n in 2u64..5000, eps in 0.01..2.0f64, frac in 0.01..0.99f64, c in 0.1..10.0f64,
        steps in 1usize..1000, dt in 1e-5..1e-2f64, stride in 1usize..50, hyp in any::<bool>(),
        dims in proptest::option::of((even(4, 64), even(4, 64), even(4, 64))),
        seed in any::<u64>(), workers in 0usize..16,
    ) {
        let params = ConstructionParams {
            n,
            eps,
            delta: frac * eps / 4.0,
            c,
            budget: if hyp { L2Budget::Hypothesis } else { L2Budget::Construction },
            allow_band_overlap: true,
        };
        let evo = EvolutionConfig { t_final: steps as f64 * dt, dt, trace_stride: stride, linear: hyp };
        let mut cfg = ExperimentConfig::new(params, evo);
        cfg.grid = dims.map_or(GridPolicy::Auto, |(a, b, c)| GridPolicy::Dims([a, b, c]));
        cfg.norms = vec![BesovSpec::heat(-1.0, f64::INFINITY, 2.0).unwrap(), BesovSpec::dyadic(-0.25, 4.0, 2.0).unwrap()];
        cfg.seed = seed;
        cfg.workers = workers;
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn csv_numbers_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let s = num(x);
        prop_assert!(!s.contains(','));
        prop_assert_eq!(s.parse::<f64>().unwrap(), x + 0.0);
    }
}
