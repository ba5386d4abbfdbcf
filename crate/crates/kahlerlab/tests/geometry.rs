mod common;

use common::{ambient_curvature_n2, exact_curvature, Bumps};
use kahlerlab::geometry::{class_volume, fs_riem_norm, uniform_nodes, RadialProfile};
use kahlerlab::momentum::{from_momentum, to_momentum};
use kahlerlab::LabError;

fn max_frame_error(n: usize, b: &Bumps, nodes: usize, window: f64) -> f64 {
    let p = b.profile(n, 12.0, nodes);
    let geo = p.geometry().unwrap();
    let mut worst: f64 = 0.0;
    for (i, &s) in p.grid.iter().enumerate() {
        if s.abs() > window {
            continue;
        }
        let l = &geo.local[i];
        let e = exact_curvature(n, b, s);
        for (got, want) in [l.a, l.b, l.d, l.ric_radial, l.ric_transverse].iter().zip(e) {
            worst = worst.max((got - want).abs());
        }
    }
    worst
}

#[test]
fn node_curvature_matches_closed_form() {
    for n in 1..=3 {
        for seed in 0..3 {
            let b = Bumps::random(seed, 0.2);
            let err = max_frame_error(n, &b, 1024, 8.0);
            assert!(err < 2e-5, "n={n} seed={seed} err={err}");
        }
    }
}

#[test]
fn curvature_error_falls_with_refinement() {
    let b = Bumps::random(7, 0.2);
    let errs: Vec<f64> = [128, 256, 512].iter().map(|&m| max_frame_error(2, &b, m, 8.0)).collect();
    assert!(errs[1] < errs[0] / 8.0 && errs[2] < errs[1] / 8.0, "{errs:?}");
}

#[test]
fn ambient_brute_force_n2() {
    let b = Bumps::random(3, 0.2);
    let p = b.profile(2, 12.0, 1024);
    for s in [-2.0, -0.5, 0.0, 1.0, 2.5] {
        let frame = kahlerlab::geometry::curvature_at(&p, s).unwrap();
        let brute = ambient_curvature_n2(&b, s);
        let got = [frame.r4.radial_radial, frame.r4.radial_transverse, frame.r4.transverse_same, frame.r4.cross_term];
        for (g, w) in got.iter().zip(brute) {
            assert!((g - w).abs() < 1e-5 * (1.0 + w.abs()), "s={s}: {got:?} vs {brute:?}");
        }
    }
}

#[test]
fn fubini_study_is_space_form() {
    for n in 1..=4 {
        let grid = uniform_nodes(12.0, 128).unwrap();
        let geo = RadialProfile::fubini_study(n, &grid).unwrap().geometry().unwrap();
        let k = 2.0 / (n as f64 + 1.0);
        for l in &geo.local {
            assert!((l.a - k).abs() < 1e-10);
            assert!((l.ric_radial - 1.0).abs() < 1e-10);
            assert!((l.ric_transverse - 1.0).abs() < 1e-10);
        }
        assert!(geo.ric0_sup() < 1e-10);
        assert!(geo.q0_sup() < 1e-10);
        assert!((geo.riem_sup_norm() - fs_riem_norm(n)).abs() < 1e-10);
        let vol: f64 = geo.mu.iter().sum();
        assert!((vol - 1.0).abs() < 1e-10, "n={n} normalized volume {vol}");
        assert!(class_volume(n) > 0.0);
    }
}

#[test]
fn rejects_nonconvex_and_bad_boundary() {
    let grid = uniform_nodes(12.0, 128).unwrap();
    let r: Vec<f64> = grid.iter().map(|&s| -3.0 / s.cosh()).collect();
    let p = RadialProfile::from_residual(1, &grid, &r).unwrap();
    assert!(p.validate().is_err());

    let r: Vec<f64> = grid.iter().map(|&s| 0.5 * s.exp().ln_1p()).collect();
    let p = RadialProfile::from_residual(1, &grid, &r).unwrap();
    assert!(matches!(p.validate(), Err(LabError::Boundary(_)) | Err(LabError::Positivity { .. }) | Err(LabError::Convexity(_))));

    let mut p = RadialProfile::fubini_study(1, &grid).unwrap();
    p.f[10] = f64::NAN;
    assert!(p.validate().is_err());
}

#[test]
fn momentum_round_trip() {
    let b = Bumps::random(11, 0.1);
    let p = b.profile(2, 12.0, 512);
    let m = to_momentum(&p).unwrap();
    m.validate().unwrap();
    let back = from_momentum(&m).unwrap();
    let worst = p
        .grid
        .iter()
        .enumerate()
        .filter(|(_, s)| s.abs() < 6.0)
        .map(|(i, _)| (back.f[i] - p.f[i]).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6);
}
