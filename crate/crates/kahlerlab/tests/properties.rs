mod common;

use common::Bumps;
use kahlerlab::config::{perturbation_terms, RunConfig, Shape};
use kahlerlab::constants::{epsilon0_dim, StabilityBudget};
use kahlerlab::flow::SeriesRecord;
use kahlerlab::functionals::{pinching, EnergyContext};
use kahlerlab::geometry::{uniform_nodes, RadialProfile};
use kahlerlab::io;
use proptest::prelude::*;

fn any_value() -> impl Strategy<Value = f64> {
    prop_oneof![
        8 => any::<f64>().prop_filter("finite", |v| v.is_finite()),
        1 => Just(f64::NAN),
        1 => -1e-300f64..1e-300,
    ]
}

fn config_text(t_end: f64, seed: u64, amplitude: f64) -> String {
    format!(
        r#"{{"manifold": {{"n": 1}}, "grid": {{"L": 10.0, "nodes": 64}},
  "initial": {{"kind": "fs_plus_perturbation", "amplitude": {amplitude}, "shape": "bumps", "seed": {seed}}},
  "flow": {{"t_end": {t_end}, "cadence": 0.1}}, "budget": {{"delta": 0.5, "Lambda": 2.0}},
  "output": {{"directory": "out"}}}}"#
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn series_rows_round_trip(rows in prop::collection::vec(prop::array::uniform11(any_value()), 0..6)) {
        let records: Vec<SeriesRecord> = rows.iter().map(SeriesRecord::from_values).collect();
        let back = io::series_from_str(&io::series_to_string(&records)).unwrap();
        prop_assert_eq!(back.len(), records.len());
        for (a, b) in records.iter().zip(&back) {
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
            }
        }
    }

    #[test]
    fn snapshots_round_trip(seed in any::<u64>(), amp in 0.0f64..0.2, n in 1usize..4, t in any::<f64>()) {
        let p = Bumps::random(seed, amp).profile(n, 10.0, 80);
        let t = t.is_finite().then_some(t);
        let (back, bt) = io::snapshot_from_str(&io::snapshot_to_string(&p, t).unwrap()).unwrap();
        prop_assert_eq!(bt.map(f64::to_bits), t.map(f64::to_bits));
        prop_assert!(p.f.iter().zip(&back.f).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn version_gate(major in 0u32..50, minor in 0u32..50) {
        let ok = io::check_version(&format!("{major}.{minor}")).is_ok();
        prop_assert_eq!(ok, major == 1);
    }

    #[test]
    fn eps0_is_the_maximum(n in 1usize..8, big_n in 2.0f64..64.0) {
        let m = 2 * n;
        let value = (big_n - 2.0) / (8.0 * 2f64.powi(m as i32 - 1) * big_n.powi(m as i32));
        prop_assert!(value <= epsilon0_dim(m) * (1.0 + 1e-14));
    }

    #[test]
    fn budget_is_monotone_in_lambda(n in 1usize..5, delta in 0.01f64..0.99, l1 in 0.1f64..10.0, f in 1.0f64..4.0) {
        let a = StabilityBudget::new(n, delta, l1, 8.0).unwrap();
        let b = StabilityBudget::new(n, delta, l1 * f, 8.0).unwrap();
        prop_assert!(b.t <= a.t && b.eps <= a.eps && a.eps > 0.0);
    }

    #[test]
    fn perturbation_scales_linearly(seed in any::<u64>(), amp in 1e-6f64..1.0) {
        let unit = perturbation_terms(1.0, Shape::Bumps, seed);
        let scaled = perturbation_terms(amp, Shape::Bumps, seed);
        prop_assert_eq!(unit.len(), scaled.len());
        for ((a1, c1), (a2, c2)) in unit.iter().zip(&scaled) {
            prop_assert_eq!(c1, c2);
            prop_assert!((a1 * amp - a2).abs() <= 1e-15 * amp);
            prop_assert!(a1.abs() <= 1.0 && c1.abs() <= 2.0);
        }
    }

    #[test]
    fn trajectory_hash_ignores_t_end_only(t1 in 0.1f64..5.0, t2 in 0.1f64..5.0, seed in 0u64..1000) {
        let a = RunConfig::from_json(&config_text(t1, seed, 0.01)).unwrap();
        let b = RunConfig::from_json(&config_text(t2, seed, 0.01)).unwrap();
        let c = RunConfig::from_json(&config_text(t1, seed + 1, 0.01)).unwrap();
        prop_assert_eq!(a.trajectory_hash(), b.trajectory_hash());
        prop_assert_ne!(a.trajectory_hash(), c.trajectory_hash());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn round_metric_is_fixed(n in 1usize..5, half_width in 8.0f64..14.0, nodes in 64usize..200) {
        let grid = uniform_nodes(half_width, nodes).unwrap();
        let fs = RadialProfile::fubini_study(n, &grid).unwrap();
        let geo = fs.geometry().unwrap();
        for l in &geo.local {
            prop_assert!((l.ric_radial - 1.0).abs() < 1e-9 && (l.ric_transverse - 1.0).abs() < 1e-9);
        }
        let ctx = EnergyContext::new(&fs).unwrap();
        let zero = vec![0.0; grid.len()];
        for k in 0..=n {
            prop_assert!(ctx.ek0(&zero, k).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn canonical_identity_on_random_profiles(seed in any::<u64>(), amp in 0.0f64..0.15, n in 1usize..3) {
        let p = Bumps::random(seed, amp).profile(n, 12.0, 1024);
        let pin = pinching(&p.geometry().unwrap());
        prop_assert!(pin.identity_ok, "{:?}", pin);
        prop_assert!((pin.l2_ric0 - pin.l2_scalar).abs() <= 1e-6 * pin.l2_ric0.max(pin.l2_scalar) + 1e-12);
    }
}
