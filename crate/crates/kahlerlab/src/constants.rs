//! Explicit constants of the stability theorem and admissibility checks.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::ProfileGeometry;

/// Default universal constant c(n).
pub const DEFAULT_C_N: f64 = 8.0;

/// Sphere-area ratio C(m) = 2^{m-1} for real dimension m.
pub fn area_ratio(m: usize) -> f64 {
    2f64.powi(m as i32 - 1)
}

fn eps0_objective(m: usize, big_n: f64) -> f64 {
    (big_n - 2.0) / (8.0 * area_ratio(m) * big_n.powi(m as i32))
}

/// Maximizer N* = 2m/(m-1) of (N-2)/(8 C(m) N^m).
pub fn epsilon0_optimizer(m: usize) -> f64 {
    2.0 * m as f64 / (m as f64 - 1.0)
}

/// Threshold for real dimension m.
pub fn epsilon0_dim(m: usize) -> f64 {
    eps0_objective(m, epsilon0_optimizer(m))
}

/// epsilon_0(n) for complex dimension n.
pub fn epsilon0(n: usize) -> f64 {
    epsilon0_dim(2 * n)
}

/// Threshold in the integral diameter criterion, for real dimension m.
pub fn sprouse_threshold(m: usize) -> f64 {
    epsilon0_dim(m)
}

/// Golden-section maximization of the epsilon_0 objective over N in (2, 64].
pub fn epsilon0_numeric(n: usize) -> (f64, f64) {
    let m = 2 * n;
    let f = |t: f64| eps0_objective(m, t);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (2.0, 64.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-14 * b {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

fn check_inputs(delta: f64, lambda: f64, c_n: f64, n: usize) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(LabError::Config(format!("delta must lie in (0, 1], got {delta}")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(LabError::Config(format!("Lambda must be positive, got {lambda}")));
    }
    if !(c_n > 0.0) {
        return Err(LabError::Config(format!("c(n) must be positive, got {c_n}")));
    }
    if n == 0 {
        return Err(LabError::Config("n must be at least 1".into()));
    }
    Ok(())
}

/// Window lengths (T, T') from 6T = delta/((delta + Lambda c_n) Lambda) and
/// 6T' = Lambda^{-2n} delta eps0^2.
pub fn time_budget(delta: f64, lambda: f64, c_n: f64, n: usize) -> Result<(f64, f64)> {
    check_inputs(delta, lambda, c_n, n)?;
    let six_t = delta / ((delta + lambda * c_n) * lambda);
    let e0 = epsilon0(n);
    let six_t_alt = lambda.powi(-2 * n as i32) * delta * e0 * e0;
    Ok((six_t / 6.0, six_t_alt / 6.0))
}

/// The two bounds on the energy slack; the budget is their minimum.
pub fn epsilon_bounds(delta: f64, lambda: f64, c_n: f64, n: usize) -> Result<(f64, f64)> {
    check_inputs(delta, lambda, c_n, n)?;
    let e0 = epsilon0(n);
    let first = lambda.powi(-2 * n as i32) * delta * e0 * e0;
    let second = 0.5 * e0 * e0 * delta / ((delta + lambda * c_n) * lambda);
    Ok((first, second))
}

pub fn epsilon_budget(delta: f64, lambda: f64, c_n: f64, n: usize) -> Result<f64> {
    let (a, b) = epsilon_bounds(delta, lambda, c_n, n)?;
    Ok(a.min(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetChecks {
    pub eps_within_first: bool,
    pub eps_within_second: bool,
    pub positive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityBudget {
    pub n: usize,
    pub delta: f64,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    pub c_n: f64,
    /// C(m) used inside eps0.
    pub c_m: f64,
    pub eps0: f64,
    pub six_t: f64,
    pub six_t_alt: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub eps: f64,
    pub checks: BudgetChecks,
}

impl StabilityBudget {
    pub fn new(n: usize, delta: f64, lambda: f64, c_n: f64) -> Result<Self> {
        let (t1, t2) = time_budget(delta, lambda, c_n, n)?;
        let (b1, b2) = epsilon_bounds(delta, lambda, c_n, n)?;
        let eps = b1.min(b2);
        Ok(StabilityBudget {
            n,
            delta,
            lambda,
            c_n,
            c_m: area_ratio(2 * n),
            eps0: epsilon0(n),
            six_t: 6.0 * t1,
            six_t_alt: 6.0 * t2,
            t: t1.min(t2),
            eps,
            checks: BudgetChecks { eps_within_first: eps <= b1, eps_within_second: eps <= b2, positive: eps > 0.0 && t1 > 0.0 },
        })
    }

    /// Plain-text table.
    pub fn table(&self) -> String {
        let rows = [
            ("n", self.n.to_string()),
            ("delta", fmt(self.delta)),
            ("Lambda", fmt(self.lambda)),
            ("c(n)", fmt(self.c_n)),
            ("C(m)", fmt(self.c_m)),
            ("eps0", fmt(self.eps0)),
            ("6T", fmt(self.six_t)),
            ("6T'", fmt(self.six_t_alt)),
            ("T", fmt(self.t)),
            ("eps", fmt(self.eps)),
        ];
        rows.iter().map(|(k, v)| format!("{k:<8} {v}\n")).collect()
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// (c1^2 - 2(n+1)/n c2) c1^{n-2} on CP^n, in units of the hyperplane class,
/// with c2 multiplied by `c2_scale`.
pub fn condition_star_scaled(n: usize, c2_scale: Ratio<i128>) -> Result<Ratio<i128>> {
    if n < 2 {
        return Err(LabError::Domain(format!("pairing needs n >= 2, got {n}")));
    }
    if n > 24 {
        return Err(LabError::Domain(format!("n = {n} exceeds exact-arithmetic range")));
    }
    let k = (n + 1) as i128;
    let ni = n as i128;
    let c1_sq = Ratio::from_integer(k * k);
    let c2 = Ratio::new(ni * k, 2) * c2_scale;
    let coeff = Ratio::new(2 * k, ni);
    let c1_pow = Ratio::from_integer(k.pow(n as u32 - 2));
    Ok((c1_sq - coeff * c2) * c1_pow)
}

pub fn condition_star(n: usize) -> Result<Ratio<i128>> {
    condition_star_scaled(n, Ratio::from_integer(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub ric_min: f64,
    pub riem_sup: f64,
    pub e1: f64,
    /// min Ric - (-1 + delta).
    pub ric_margin: f64,
    /// Lambda - sup |Rm|.
    pub riem_margin: f64,
    /// E1_ref + eps - E1.
    pub energy_margin: f64,
    pub ric_ok: bool,
    pub riem_ok: bool,
    pub energy_ok: bool,
    pub pass: bool,
}

/// Membership test for the admissible set, given E1 of the profile.
pub fn admissibility_certificate(geo: &ProfileGeometry, e1: f64, budget: &StabilityBudget, e1_ref: f64) -> Admissibility {
    let ric_min = geo.ricci_lower_bound();
    let riem_sup = geo.riem_sup_norm();
    let ric_margin = ric_min - (-1.0 + budget.delta);
    let riem_margin = budget.lambda - riem_sup;
    let energy_margin = e1_ref + budget.eps - e1;
    let (ric_ok, riem_ok, energy_ok) = (ric_margin > 0.0, riem_margin > 0.0, energy_margin >= 0.0);
    Admissibility {
        ric_min,
        riem_sup,
        e1,
        ric_margin,
        riem_margin,
        energy_margin,
        ric_ok,
        riem_ok,
        energy_ok,
        pass: ric_ok && riem_ok && energy_ok,
    }
}

/// Upper bound on the beta invariant within the symmetric family: the
/// infimum over a run of sup |Ric - omega|.
pub fn beta_invariant_estimate<I: IntoIterator<Item = f64>>(sup_ric0: I) -> f64 {
    sup_ric0.into_iter().fold(f64::INFINITY, f64::min)
}
