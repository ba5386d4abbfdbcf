mod common;

use common::{potential_jet, Bumps};
use kahlerlab::geometry::{uniform_nodes, RadialProfile};
use kahlerlab::segment::{segment_inequality_check, SegmentConfig, Surface};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn round_sphere() -> Surface {
    let geo = RadialProfile::fubini_study(1, &uniform_nodes(12.0, 256).unwrap()).unwrap().geometry().unwrap();
    Surface::new(&geo).unwrap()
}

#[test]
fn great_circles_on_round_sphere() {
    let surf = round_sphere();
    assert!((surf.total_length() - PI).abs() < 1e-9);
    assert!((surf.total_area() - 4.0 * PI).abs() < 1e-8);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let a: f64 = rng.gen_range(0.05..3.0);
        let b: f64 = rng.gen_range(0.05..3.0);
        let (w1, w2) = (a.min(b), a.max(b) + 0.01);
        let dt: f64 = rng.gen_range(-PI..PI);
        let g = surf.geodesic(w1, w2, dt).expect("geodesic found");
        let want = (w1.cos() * w2.cos() + w1.sin() * w2.sin() * dt.cos()).clamp(-1.0, 1.0).acos();
        assert!((g.length - want).abs() < 1e-8, "({w1}, {w2}, {dt}): {} vs {want}", g.length);
        assert!(g.f_integral.abs() < 1e-9);
    }
}

/// Meridian length between moment values x1 < x2, by Simpson in s.
fn meridian(b: &Bumps, x1: f64, x2: f64) -> f64 {
    let s1 = (x1 / (1.0 - x1)).ln();
    let s2 = (x2 / (1.0 - x2)).ln();
    let m = 20_000;
    let h = (s2 - s1) / m as f64;
    let f = |s: f64| (0.5 * potential_jet(1, b, s)[1]).sqrt();
    let mut acc = f(s1) + f(s2);
    for i in 1..m {
        acc += f(s1 + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn meridians_and_triangle_bounds_on_perturbed_surface() {
    let b = Bumps::random(2, 0.1);
    let geo = b.profile(1, 12.0, 512).geometry().unwrap();
    let surf = Surface::new(&geo).unwrap();
    let half = |w: f64| (0.5 * w).sin().powi(2);
    for (w1, w2) in [(0.4, 1.2), (0.9, 2.6), (1.5, 1.7)] {
        let g = surf.geodesic(w1, w2, 0.0).unwrap();
        let want = meridian(&b, half(w1), half(w2));
        assert!((g.length - want).abs() < 1e-6, "{} vs {want}", g.length);
        let g = surf.geodesic(w1, w2, 2.0).unwrap();
        assert!(g.length >= want - 1e-9);
        let via_south = meridian(&b, 1e-12, half(w1)) + meridian(&b, 1e-12, half(w2));
        assert!(g.length <= via_south + 1e-6);
    }
}

#[test]
fn inequality_on_round_sphere_is_trivial() {
    let geo = RadialProfile::fubini_study(1, &uniform_nodes(12.0, 256).unwrap()).unwrap().geometry().unwrap();
    let r = segment_inequality_check(&geo, &SegmentConfig { pairs: 50, ..Default::default() }).unwrap();
    assert_eq!(r.skipped, 0);
    assert!(r.lhs.abs() < 1e-9 && r.holds);
    let cap = 2.0 * PI * (1.0 - 0.2f64.cos());
    assert!((r.vol_a1 - cap).abs() < 1e-8 && (r.vol_a2 - cap).abs() < 1e-8);
}

#[test]
fn report_is_independent_of_worker_count() {
    let geo = Bumps::random(3, 0.05).profile(1, 12.0, 256).geometry().unwrap();
    let cfg = SegmentConfig { pairs: 60, seed: 9, ..Default::default() };
    let run = |k| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .unwrap()
            .install(|| segment_inequality_check(&geo, &cfg).unwrap())
    };
    assert_eq!(run(1).to_text(), run(3).to_text());
}

#[test]
fn rejects_bad_inputs() {
    let geo = RadialProfile::fubini_study(1, &uniform_nodes(12.0, 128).unwrap()).unwrap().geometry().unwrap();
    assert!(segment_inequality_check(&geo, &SegmentConfig { cap_radius: 2.0, ..Default::default() }).is_err());
    assert!(segment_inequality_check(&geo, &SegmentConfig { pairs: 0, ..Default::default() }).is_err());
    let cp2 = RadialProfile::fubini_study(2, &uniform_nodes(12.0, 128).unwrap()).unwrap().geometry().unwrap();
    assert!(Surface::new(&cp2).is_err());
}
