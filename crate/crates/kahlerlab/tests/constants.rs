use kahlerlab::constants::{
    admissibility_certificate, condition_star, condition_star_scaled, epsilon0, epsilon0_dim, epsilon0_numeric,
    epsilon0_optimizer, epsilon_bounds, time_budget, StabilityBudget,
};
use kahlerlab::geometry::{uniform_nodes, RadialProfile};
use num_rational::Ratio;

#[test]
fn eps0_closed_form_and_optimizer() {
    assert_eq!(epsilon0(1), 1.0 / 128.0);
    // m = 4: N* = 8/3 and eps0 = (2/3) / (8 * 8 * (8/3)^4) = 81 / 393216.
    assert!((epsilon0(2) - 81.0 / 393216.0).abs() < 1e-15 * epsilon0(2));
    for n in 1..=6 {
        let (arg, val) = epsilon0_numeric(n);
        assert!((arg - epsilon0_optimizer(2 * n)).abs() < 1e-6, "n={n}: {arg}");
        assert!((val - epsilon0(n)).abs() <= 1e-12 * epsilon0(n), "n={n}");
        // The closed form is a maximum: nearby N give smaller values.
        assert!(epsilon0_dim(2 * n) >= val * (1.0 - 1e-15));
    }
}

#[test]
fn budget_matches_direct_substitution() {
    let (delta, lambda, c, n) = (0.5, 2.0, 8.0, 1);
    let e0 = 1.0 / 128.0;
    let six_t = 0.5 / ((0.5 + 16.0) * 2.0);
    let six_t_alt = 0.5 * e0 * e0 / 4.0;
    let (t1, t2) = time_budget(delta, lambda, c, n).unwrap();
    assert!((6.0 * t1 - six_t).abs() < 1e-17);
    assert!((6.0 * t2 - six_t_alt).abs() < 1e-20);
    let (b1, b2) = epsilon_bounds(delta, lambda, c, n).unwrap();
    assert!((b1 - six_t_alt).abs() < 1e-20);
    assert!((b2 - 0.5 * e0 * e0 * six_t).abs() < 1e-20);
    let b = StabilityBudget::new(n, delta, lambda, c).unwrap();
    assert_eq!(b.eps, b1.min(b2));
    assert_eq!(b.t, t1.min(t2));
    assert!(b.checks.positive && b.checks.eps_within_first && b.checks.eps_within_second);
    assert!(b.table().lines().count() >= 10);
}

#[test]
fn budget_rejects_bad_inputs() {
    for (d, l, c) in [(0.0, 1.0, 8.0), (1.5, 1.0, 8.0), (0.5, 0.0, 8.0), (0.5, f64::NAN, 8.0), (0.5, 1.0, -1.0)] {
        assert!(StabilityBudget::new(1, d, l, c).is_err(), "({d}, {l}, {c})");
    }
    assert!(StabilityBudget::new(0, 0.5, 1.0, 8.0).is_err());
}

#[test]
fn condition_star_exact() {
    for n in 2..=6 {
        assert_eq!(condition_star(n).unwrap(), Ratio::from_integer(0));
        assert!(condition_star_scaled(n, Ratio::new(3, 2)).unwrap() < Ratio::from_integer(0));
    }
    assert!(condition_star(1).is_err());
    assert!(condition_star(25).is_err());
}

#[test]
fn certificate_on_round_metric() {
    let geo = RadialProfile::fubini_study(1, &uniform_nodes(12.0, 128).unwrap()).unwrap().geometry().unwrap();
    let ok = admissibility_certificate(&geo, 0.0, &StabilityBudget::new(1, 0.5, 2.0, 8.0).unwrap(), 0.0);
    assert!(ok.pass);
    let tight = admissibility_certificate(&geo, 0.0, &StabilityBudget::new(1, 0.5, 0.5, 8.0).unwrap(), 0.0);
    assert!(!tight.riem_ok && !tight.pass);
    let energetic = admissibility_certificate(&geo, 1.0, &StabilityBudget::new(1, 0.5, 2.0, 8.0).unwrap(), 0.0);
    assert!(!energetic.energy_ok);
}
