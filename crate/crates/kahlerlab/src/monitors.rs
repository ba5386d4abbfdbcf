//! Verdicts computed from a sampled flow series.

use serde::{Deserialize, Serialize};

use crate::constants::StabilityBudget;
use crate::error::{LabError, Result};
use crate::flow::{Flow, FlowState, Sample};

/// Relative slack when comparing sample times with window ends.
const TIME_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoublingVerdict {
    pub lambda: f64,
    pub precondition_ok: bool,
    /// Largest (1/Lambda - 1/|Rm|(t)) / t over the early samples.
    pub c_fit: f64,
    /// Time up to which |Rm| <= 2 Lambda is checked.
    pub horizon: f64,
    pub first_violation: Option<f64>,
    pub pass: bool,
}

/// |Rm(t)| <= 2 Lambda for t <= 1/(2 c_fit Lambda), with c_fit fitted to
/// 1/|Rm| >= 1/Lambda - c t on samples before the nominal doubling time.
pub fn doubling_time_monitor(series: &[Sample], lambda: f64) -> Result<DoublingVerdict> {
    if series.is_empty() {
        return Err(LabError::Coverage("empty series".into()));
    }
    if !(lambda > 0.0) {
        return Err(LabError::Config(format!("Lambda must be positive, got {lambda}")));
    }
    let t0 = series[0].record.t;
    let r0 = series[0].record.riem_sup;
    if r0 > lambda {
        return Ok(DoublingVerdict {
            lambda,
            precondition_ok: false,
            c_fit: f64::NAN,
            horizon: 0.0,
            first_violation: Some(t0),
            pass: false,
        });
    }
    let nominal = 1.0 / (2.0 * lambda);
    let mut early: Vec<&Sample> = series[1..].iter().filter(|s| s.record.t - t0 <= nominal).collect();
    if early.is_empty() && series.len() > 1 {
        early.push(&series[1]);
    }
    let c_fit = early
        .iter()
        .map(|s| (1.0 / lambda - 1.0 / s.record.riem_sup) / (s.record.t - t0))
        .fold(0.0, f64::max);
    let horizon = if c_fit > 0.0 { t0 + 1.0 / (2.0 * c_fit * lambda) } else { f64::INFINITY };
    let first_violation = series
        .iter()
        .filter(|s| s.record.t <= horizon)
        .find(|s| s.record.riem_sup > 2.0 * lambda)
        .map(|s| s.record.t);
    Ok(DoublingVerdict {
        lambda,
        precondition_ok: true,
        c_fit,
        horizon,
        first_violation,
        pass: first_violation.is_none(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinchingVerdict {
    #[serde(rename = "T")]
    pub t_window: f64,
    /// Whether E1(0) <= E1_ref + eps, the hypothesis of check (a).
    pub energy_hypothesis: bool,
    /// (1/6T) int_0^{6T} (1/V) int |Ric - omega|^2 dt.
    pub spacetime_l2: f64,
    pub spacetime_bound: f64,
    pub a_ok: bool,
    /// max over [2T, 6T] of sup |Ric - omega|.
    pub pointwise_max: f64,
    pub eps_n: f64,
    pub b_ok: bool,
    /// Empirical Moser ratio sup |Ric - omega|^2 / space-time mean.
    pub moser_ratio: f64,
    /// max over [3T, 4T] of sup |Q0|.
    pub q0_max: f64,
    pub q0_threshold: f64,
    pub c_ok: bool,
    pub failed_windows: Vec<String>,
    pub pass: bool,
}

fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum()
}

/// Windowed pinching checks over [0, 6T] with T taken from the budget.
pub fn pinching_window_check(
    series: &[Sample],
    budget: &StabilityBudget,
    e1_ref: f64,
    eps_n: f64,
    q0_threshold: f64,
) -> Result<PinchingVerdict> {
    let t = budget.t;
    let six = 6.0 * t;
    let end = series.last().map(|s| s.record.t).unwrap_or(f64::NEG_INFINITY);
    if series.len() < 7 || series[0].record.t != 0.0 || end < six * (1.0 - TIME_SLACK) {
        return Err(LabError::Coverage(format!(
            "series must start at 0 and reach 6T = {six:.6e} with at least 7 samples (ends at {end:.6e})"
        )));
    }
    let within = |a: f64, b: f64| {
        let lo = a - TIME_SLACK * six;
        let hi = b + TIME_SLACK * six;
        series.iter().filter(move |s| s.record.t >= lo && s.record.t <= hi)
    };
    let pts: Vec<(f64, f64)> = within(0.0, six).map(|s| (s.record.t, s.record.l2_ric0)).collect();
    let spacetime_l2 = trapezoid(&pts) / pts.last().map_or(six, |p| p.0).max(f64::MIN_POSITIVE);
    let spacetime_bound = 0.5 * budget.eps0 * budget.eps0;
    let energy_hypothesis = series[0].record.e1 <= e1_ref + budget.eps;
    let a_ok = !energy_hypothesis || spacetime_l2 <= spacetime_bound;
    let pointwise_max = within(2.0 * t, six).map(|s| s.ric0_sup).fold(0.0, f64::max);
    let b_ok = pointwise_max <= eps_n;
    let moser_ratio = if spacetime_l2 > 0.0 { pointwise_max * pointwise_max / spacetime_l2 } else { 0.0 };
    let q0_max = within(3.0 * t, 4.0 * t).map(|s| s.q0_sup).fold(0.0, f64::max);
    let c_ok = q0_max <= q0_threshold;
    let mut failed_windows = Vec::new();
    if !a_ok {
        failed_windows.push("[0, 6T] space-time L2 pinching".to_string());
    }
    if !b_ok {
        failed_windows.push("[2T, 6T] pointwise Ricci pinching".to_string());
    }
    if !c_ok {
        failed_windows.push("[3T, 4T] Q0 bound".to_string());
    }
    Ok(PinchingVerdict {
        t_window: t,
        energy_hypothesis,
        spacetime_l2,
        spacetime_bound,
        a_ok,
        pointwise_max,
        eps_n,
        b_ok,
        moser_ratio,
        q0_max,
        q0_threshold,
        c_ok,
        pass: failed_windows.is_empty(),
        failed_windows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceKind {
    /// Exponential decay with a good log-linear fit.
    Converged,
    /// Already at the KE point within tolerance.
    Degenerate,
    Inconclusive,
    NotConverging,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceVerdict {
    pub kind: ConvergenceKind,
    /// Decay rate -slope of log sup |Ric - omega|.
    pub rate: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceOptions {
    pub rate_min: f64,
    pub min_samples: usize,
    /// Values below this are treated as the discretization floor.
    pub floor: f64,
    /// Fraction of the run, counted from the end, that forms the tail.
    pub tail_fraction: f64,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        ConvergenceOptions { rate_min: 0.1, min_samples: 50, floor: 1e-9, tail_fraction: 0.5 }
    }
}

/// Least-squares (slope, R^2) of y against x.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, r2)
}

/// Log-linear fit of sup |Ric - omega| on the tail of a series given as
/// (t, sup |Ric - omega|) pairs.
pub fn convergence_detector(points: &[(f64, f64)], opts: &ConvergenceOptions) -> ConvergenceVerdict {
    let verdict = |kind, rate, r_squared, window, samples| ConvergenceVerdict { kind, rate, r_squared, window, samples };
    if points.is_empty() {
        return verdict(ConvergenceKind::Inconclusive, f64::NAN, f64::NAN, (f64::NAN, f64::NAN), 0);
    }
    let (t0, t1) = (points[0].0, points[points.len() - 1].0);
    if points.iter().all(|p| p.1 < opts.floor) {
        return verdict(ConvergenceKind::Degenerate, f64::INFINITY, 1.0, (t0, t1), points.len());
    }
    let start = t1 - opts.tail_fraction * (t1 - t0);
    let tail: Vec<(f64, f64)> = points.iter().cloned().filter(|p| p.0 >= start && p.1 >= opts.floor).collect();
    if tail.len() < opts.min_samples {
        return verdict(ConvergenceKind::Inconclusive, f64::NAN, f64::NAN, (start, t1), tail.len());
    }
    let window = (tail[0].0, tail[tail.len() - 1].0);
    let x: Vec<f64> = tail.iter().map(|p| p.0).collect();
    let y: Vec<f64> = tail.iter().map(|p| p.1.ln()).collect();
    let (slope, r2) = linear_fit(&x, &y);
    let monotone = tail.windows(2).all(|w| w[1].1 <= w[0].1);
    let kind = if !monotone {
        ConvergenceKind::Inconclusive
    } else if slope < -opts.rate_min && r2 >= 0.99 {
        ConvergenceKind::Converged
    } else {
        ConvergenceKind::NotConverging
    };
    verdict(kind, -slope, r2, window, tail.len())
}

pub fn ric0_points(series: &[Sample]) -> Vec<(f64, f64)> {
    series.iter().map(|s| (s.record.t, s.ric0_sup)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    /// Pinching width eps(n): windows need 1 - eps_n < Ric < 1 + eps_n.
    pub eps_n: f64,
    /// Window extension eps_1.
    pub step: f64,
    /// Allowed growth of the L^p curvature norm over its value at the start.
    pub lp_factor: f64,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions { eps_n: 0.1, step: 0.5, lp_factor: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationFailure {
    pub inequality: String,
    pub t: f64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationVerdict {
    /// First time the pinching holds; windows start here.
    pub start: Option<f64>,
    pub reached: f64,
    pub windows: usize,
    pub lp_bound: f64,
    pub failure: Option<ContinuationFailure>,
    /// (t, sup |Ric - omega|) from the start on.
    pub tail: Vec<(f64, f64)>,
    pub tail_monotone: bool,
    pub pass: bool,
}

/// Open-closed continuation over a computed series: windows of length
/// `step` are accepted while the Ricci pinching and the L^p curvature bound
/// hold on every sample inside them.
pub fn continuation_scan(series: &[Sample], opts: &ContinuationOptions) -> ContinuationVerdict {
    let end = series.last().map_or(0.0, |s| s.record.t);
    let Some(i0) = series.iter().position(|s| s.ric0_sup < opts.eps_n) else {
        let worst = series.iter().map(|s| s.ric0_sup).fold(f64::INFINITY, f64::min);
        return ContinuationVerdict {
            start: None,
            reached: series.first().map_or(0.0, |s| s.record.t),
            windows: 0,
            lp_bound: f64::NAN,
            failure: Some(ContinuationFailure {
                inequality: "Ricci pinching |Ric - omega| < eps(n) never reached".into(),
                t: end,
                value: worst,
                bound: opts.eps_n,
            }),
            tail: vec![],
            tail_monotone: false,
            pass: false,
        };
    };
    let start = series[i0].record.t;
    let lp_bound = opts.lp_factor * series[i0].riem_lp;
    let mut reached = start;
    let mut windows = 0;
    let mut failure = None;
    'outer: while reached < end * (1.0 - TIME_SLACK) {
        let hi = (reached + opts.step).min(end);
        for s in series[i0..].iter().filter(|s| s.record.t > reached && s.record.t <= hi * (1.0 + TIME_SLACK)) {
            if s.ric0_sup >= opts.eps_n {
                failure = Some(ContinuationFailure {
                    inequality: "Ricci pinching |Ric - omega| < eps(n)".into(),
                    t: s.record.t,
                    value: s.ric0_sup,
                    bound: opts.eps_n,
                });
                break 'outer;
            }
            if s.riem_lp > lp_bound {
                failure = Some(ContinuationFailure {
                    inequality: "L^p curvature bound".into(),
                    t: s.record.t,
                    value: s.riem_lp,
                    bound: lp_bound,
                });
                break 'outer;
            }
        }
        reached = hi;
        windows += 1;
    }
    let tail: Vec<(f64, f64)> = series[i0..].iter().map(|s| (s.record.t, s.ric0_sup)).collect();
    let tail_monotone = tail.windows(2).all(|w| w[1].1 <= w[0].1);
    ContinuationVerdict { start: Some(start), reached, windows, lp_bound, pass: failure.is_none(), failure, tail, tail_monotone }
}

/// Runs the flow from `state` and scans the resulting series.
pub fn continuation_driver(
    flow: &Flow,
    state: FlowState,
    opts: &ContinuationOptions,
) -> Result<(ContinuationVerdict, Vec<Sample>)> {
    let out = flow.run(state, true, &mut |_, _| Ok(()))?;
    Ok((continuation_scan(&out.samples, opts), out.samples))
}
