mod common;

use common::{oracle_lambda, potential_jet, Bumps};
use kahlerlab::analysis::{diameter, digest, lambda1, li_yau_bound, sobolev_proxy, sprouse_check};
use kahlerlab::geometry::{uniform_nodes, RadialProfile};

#[test]
fn invariant_eigenvalue_matches_sturm_liouville_oracle() {
    for n in 1..=3 {
        for seed in [0, 6] {
            let b = Bumps::random(seed, 0.15);
            let spec = lambda1(&b.profile(n, 12.0, 512).geometry().unwrap()).unwrap();
            let want = oracle_lambda(n, &b, false);
            assert!((spec.invariant - want).abs() < 1e-4 * want, "n={n} seed={seed}: {} vs {want}", spec.invariant);
        }
    }
}

#[test]
fn angular_sector_matches_oracle_on_cp1() {
    for seed in [1, 2] {
        let b = Bumps::random(seed, 0.15);
        let spec = lambda1(&b.profile(1, 12.0, 512).geometry().unwrap()).unwrap();
        let want = oracle_lambda(1, &b, true);
        let got = spec.angular.unwrap();
        assert!((got - want).abs() < 1e-4 * want, "seed={seed}: {got} vs {want}");
        assert_eq!(spec.lambda1, spec.invariant.min(got));
    }
}

#[test]
fn fubini_study_spectrum_and_diameter() {
    for n in 1..=3 {
        let geo = RadialProfile::fubini_study(n, &uniform_nodes(12.0, 256).unwrap()).unwrap().geometry().unwrap();
        let spec = lambda1(&geo).unwrap();
        assert!((spec.lambda1 - 2.0).abs() < 1e-8, "n={n}: {}", spec.lambda1);
        let d = diameter(&geo);
        let want = std::f64::consts::PI * ((n as f64 + 1.0) / 2.0).sqrt();
        assert!((d.radial - want).abs() < 1e-6, "n={n}: {}", d.radial);
    }
}

#[test]
fn pole_distance_matches_quadrature() {
    for seed in 0..3 {
        let b = Bumps::random(seed, 0.2);
        let d = diameter(&b.profile(1, 12.0, 512).geometry().unwrap());
        // ds-length density sqrt(F''/2), integrated by Simpson on [-40, 40].
        let m = 80_000;
        let h = 80.0 / m as f64;
        let f = |s: f64| (0.5 * potential_jet(1, &b, s)[1]).max(0.0).sqrt();
        let mut acc = f(-40.0) + f(40.0);
        for i in 1..m {
            acc += f(-40.0 + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let want = acc * h / 3.0;
        assert!((d.radial - want).abs() < 1e-6, "seed={seed}: {} vs {want}", d.radial);
    }
}

#[test]
fn li_yau_holds_for_nonnegative_ricci() {
    let mut checked = 0;
    for n in 1..=2 {
        for seed in 0..8 {
            let geo = Bumps::random(seed, 0.08).profile(n, 12.0, 256).geometry().unwrap();
            if geo.ricci_lower_bound() < 0.0 {
                continue;
            }
            let g = digest(&geo).unwrap();
            assert!(g.liyau_ok, "n={n} seed={seed}: lambda1 {} < {}", g.lambda1, li_yau_bound(g.diameter));
            checked += 1;
        }
    }
    assert!(checked >= 8);
}

#[test]
fn sobolev_and_diameter_criterion_on_round_metric() {
    let geo = RadialProfile::fubini_study(2, &uniform_nodes(12.0, 256).unwrap()).unwrap().geometry().unwrap();
    let v = kahlerlab::functionals::volume(2);
    assert!((sobolev_proxy(&geo) - v.powf(-0.5)).abs() < 1e-3);
    let cp1 = RadialProfile::fubini_study(1, &uniform_nodes(12.0, 256).unwrap()).unwrap().geometry().unwrap();
    let sp = sprouse_check(&cp1, 0.5);
    assert!(sp.integral.abs() < 1e-10);
    assert_eq!(sp.diameter_below_bound, Some(true));
}
