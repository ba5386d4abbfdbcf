//! Normalized Kähler-Ricci flow on radial potentials.
//!
//! The potential flow is d(phi)/dt = log(omega_phi^n / omega^n) + phi - h
//! against the Fubini-Study reference on the same grid. The constant mode of
//! phi grows like e^t without affecting the metric, so each right side is
//! projected to zero mean under omega_phi.

use serde::{Deserialize, Serialize};

use crate::analysis::{diameter, lambda1, sobolev_proxy};
use crate::error::{LabError, Result};
use crate::functionals::{EnergyContext, PathSpec};
use crate::geometry::{jets_of, Grid, Local, ProfileGeometry, RadialProfile};

use std::sync::Arc;

/// Real-axis stability limit of classical RK4.
const RK4_REAL_LIMIT: f64 = 2.785;
const MAX_HALVINGS: u32 = 20;
const POWER_ITERATIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DtPolicy {
    Fixed { dt: f64 },
    Adaptive {
        cfl: f64,
        #[serde(default)]
        dt_max: Option<f64>,
    },
}

impl Default for DtPolicy {
    fn default() -> Self {
        DtPolicy::Adaptive { cfl: 0.8, dt_max: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    #[serde(default)]
    pub dt_policy: DtPolicy,
    pub t_end: f64,
    /// Sampling interval in flow time.
    pub cadence: f64,
    /// Stop once sup |Ric - omega| falls below this value.
    #[serde(default)]
    pub stop_tol: Option<f64>,
    /// Steps between spectral-radius estimates.
    #[serde(default = "default_rho_every")]
    pub rho_every: u64,
    /// Curvature bound used for the state flags.
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Skip the eigenvalue and diameter columns to save time.
    #[serde(default)]
    pub light: bool,
}

fn default_rho_every() -> u64 {
    25
}

impl FlowConfig {
    pub fn new(t_end: f64, cadence: f64) -> Self {
        FlowConfig {
            dt_policy: DtPolicy::default(),
            t_end,
            cadence,
            stop_tol: None,
            rho_every: default_rho_every(),
            lambda: None,
            light: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.dt_policy {
            DtPolicy::Fixed { dt } if !(dt > 0.0) => {
                return Err(LabError::Config(format!("fixed dt must be positive, got {dt}")))
            }
            DtPolicy::Adaptive { cfl, dt_max } => {
                if !(cfl > 0.0 && cfl <= 1.0) {
                    return Err(LabError::Config(format!("CFL factor must lie in (0, 1], got {cfl}")));
                }
                if let Some(m) = dt_max {
                    if !(m > 0.0) {
                        return Err(LabError::Config(format!("dt_max must be positive, got {m}")));
                    }
                }
            }
            _ => {}
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(LabError::Config(format!("t_end must be finite and nonnegative, got {}", self.t_end)));
        }
        if !(self.cadence > 0.0) {
            return Err(LabError::Config(format!("cadence must be positive, got {}", self.cadence)));
        }
        if self.rho_every == 0 {
            return Err(LabError::Config("rho_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateFlags {
    pub ric_above_minus1: bool,
    pub riem_below_2lambda: bool,
}

/// Flow state; `geo` is the geometry of omega_phi and is rebuilt with phi.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub t: f64,
    pub phi: Vec<f64>,
    pub step: u64,
    /// Last spectral-radius estimate of the linearized right side.
    pub rho: f64,
    pub geo: ProfileGeometry,
    pub flags: StateFlags,
}

/// One row of the series CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub t: f64,
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "E1")]
    pub e1: f64,
    #[serde(rename = "dE1_formula")]
    pub de1_formula: f64,
    pub l2_ric0: f64,
    pub l2_scalar: f64,
    #[serde(rename = "l2_Q0")]
    pub l2_q0: f64,
    pub ric_min: f64,
    pub riem_sup: f64,
    #[serde(deserialize_with = "crate::io::null_as_nan")]
    pub diameter: f64,
    #[serde(deserialize_with = "crate::io::null_as_nan")]
    pub lambda1: f64,
}

pub const SERIES_COLUMNS: [&str; 11] =
    ["t", "E0", "E1", "dE1_formula", "l2_ric0", "l2_scalar", "l2_Q0", "ric_min", "riem_sup", "diameter", "lambda1"];

impl SeriesRecord {
    pub fn values(&self) -> [f64; 11] {
        [
            self.t,
            self.e0,
            self.e1,
            self.de1_formula,
            self.l2_ric0,
            self.l2_scalar,
            self.l2_q0,
            self.ric_min,
            self.riem_sup,
            self.diameter,
            self.lambda1,
        ]
    }

    pub fn from_values(v: &[f64; 11]) -> Self {
        SeriesRecord {
            t: v[0],
            e0: v[1],
            e1: v[2],
            de1_formula: v[3],
            l2_ric0: v[4],
            l2_scalar: v[5],
            l2_q0: v[6],
            ric_min: v[7],
            riem_sup: v[8],
            diameter: v[9],
            lambda1: v[10],
        }
    }
}

/// A series row plus quantities used by the monitors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub record: SeriesRecord,
    /// sup |Ric - omega| as an operator norm.
    pub ric0_sup: f64,
    pub q0_sup: f64,
    pub phi_sup: f64,
    pub de0_formula: f64,
    pub de1_split: Option<(f64, f64)>,
    #[serde(deserialize_with = "crate::io::null_as_nan")]
    pub sobolev_proxy: f64,
    /// ((1/V) int |Rm|^p)^{1/p} with p = n + 2.
    pub riem_lp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EndTime,
    Converged,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub samples: Vec<Sample>,
    pub state: FlowState,
    pub stop: StopReason,
}

/// Potential-level integrator with its reference data.
#[derive(Debug, Clone)]
pub struct Flow {
    pub ctx: EnergyContext,
    pub cfg: FlowConfig,
    path: PathSpec,
}

impl Flow {
    /// Builds the integrator and the initial state phi = F_0 - F_FS.
    pub fn new(initial: &RadialProfile, cfg: FlowConfig) -> Result<(Flow, FlowState)> {
        cfg.validate()?;
        initial.validate()?;
        let reference = RadialProfile::fubini_study(initial.n, &initial.grid)?;
        let ctx = EnergyContext::new(&reference)?;
        let flow = Flow { ctx, cfg, path: PathSpec::default() };
        let state = flow.state_at(0.0, initial.residual(), 0, f64::NAN)?;
        let rho = flow.spectral_radius(&state.geo);
        Ok((flow, FlowState { rho, ..state }))
    }

    pub fn n(&self) -> usize {
        self.ctx.n
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.ctx.grid
    }

    /// Rebuilds a state from stored data, as after a checkpoint.
    pub fn state_at(&self, t: f64, phi: Vec<f64>, step: u64, rho: f64) -> Result<FlowState> {
        let geo = self.ctx.geometry_of(&phi)?;
        let flags = self.flags(&geo);
        Ok(FlowState { t, phi, step, rho, geo, flags })
    }

    fn flags(&self, geo: &ProfileGeometry) -> StateFlags {
        StateFlags {
            ric_above_minus1: geo.ricci_lower_bound_nodes() > -1.0,
            riem_below_2lambda: self.cfg.lambda.is_none_or(|l| geo.riem_sup_nodes() <= 2.0 * l),
        }
    }

    pub fn profile(&self, state: &FlowState) -> Result<RadialProfile> {
        RadialProfile::from_residual(self.n(), &self.grid().s, &state.phi)
    }

    /// Gauge-projected right side at the geometry of phi.
    pub fn rhs_with(&self, geo: &ProfileGeometry) -> Vec<f64> {
        let nf = self.n() as f64;
        // phi enters through its stencil interpolant: nodes off the stencil
        // skeleton would otherwise carry an undamped e^t mode.
        let reference = &self.ctx.reference;
        let raw: Vec<f64> = (0..geo.len())
            .map(|i| {
                let (l, r) = (&geo.local[i], &reference.local[i]);
                let p = geo.jets[i][0] - reference.jets[i][0];
                (l.p / r.p).ln() + (nf - 1.0) * (l.t / r.t).ln() + p - self.ctx.h[i]
            })
            .collect();
        let mean = geo.average(&raw);
        raw.iter().map(|v| v - mean).collect()
    }

    pub fn rhs(&self, phi: &[f64]) -> Result<Vec<f64>> {
        let geo = self.ctx.geometry_of(phi)?;
        Ok(self.rhs_with(&geo))
    }

    /// Linearization of the right side at `geo` applied to v, without the
    /// gauge projection.
    fn jvp(&self, geo: &ProfileGeometry, v: &[f64]) -> Vec<f64> {
        let nf = self.n() as f64;
        let dv = jets_of(&geo.grid, v);
        geo.local
            .iter()
            .zip(&dv)
            .map(|(l, d)| {
                let dt = l.y * d[1];
                let dtx = -d[1] + l.y * d[2];
                (dt + l.x * dtx) / l.p + (nf - 1.0) * dt / l.t + d[0]
            })
            .collect()
    }

    /// Power-iteration estimate of the spectral radius of the linearized
    /// right side, from a fixed start vector so that it is reproducible.
    pub fn spectral_radius(&self, geo: &ProfileGeometry) -> f64 {
        let m = geo.len();
        let mut v: Vec<f64> = (0..m).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } * (1.0 + 0.5 * (i as f64).sin())).collect();
        let norm = |u: &[f64]| u.iter().map(|a| a * a).sum::<f64>().sqrt();
        let mut rho = 0.0;
        for _ in 0..POWER_ITERATIONS {
            let nv = norm(&v);
            v.iter_mut().for_each(|a| *a /= nv);
            let w = self.jvp(geo, &v);
            rho = norm(&w);
            v = w;
        }
        rho
    }

    /// Step size the policy asks for at this state.
    pub fn policy_dt(&self, state: &FlowState) -> f64 {
        match self.cfg.dt_policy {
            DtPolicy::Fixed { dt } => dt,
            DtPolicy::Adaptive { cfl, dt_max } => {
                let stab = cfl * RK4_REAL_LIMIT / (1.1 * state.rho.max(1e-12));
                let curv = 1.0 / state.geo.riem_sup_nodes().max(1e-12);
                let dt = stab.min(curv);
                dt_max.map_or(dt, |m| dt.min(m))
            }
        }
    }

    /// One classical RK4 step without step-size control.
    pub fn step_potential(&self, state: &FlowState, dt: f64) -> Result<FlowState> {
        let phi = &state.phi;
        let axpy = |a: f64, k: &[f64]| -> Vec<f64> { phi.iter().zip(k).map(|(p, q)| p + a * q).collect() };
        let k1 = self.rhs_with(&state.geo);
        let k2 = self.rhs(&axpy(0.5 * dt, &k1))?;
        let k3 = self.rhs(&axpy(0.5 * dt, &k2))?;
        let k4 = self.rhs(&axpy(dt, &k3))?;
        let next: Vec<f64> =
            (0..phi.len()).map(|i| phi[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
        if next.iter().any(|v| !v.is_finite()) {
            return Err(LabError::Numerical(format!("non-finite potential after step at t = {}", state.t)));
        }
        let mut out = self.state_at(state.t + dt, next, state.step + 1, state.rho)?;
        if out.step % self.cfg.rho_every == 0 {
            out.rho = self.spectral_radius(&out.geo);
        }
        Ok(out)
    }

    /// RK4 step with halving on positivity failure. Returns the new state
    /// and the step actually taken.
    pub fn advance(&self, state: &FlowState, dt: f64) -> Result<(FlowState, f64)> {
        let mut h = dt;
        for _ in 0..=MAX_HALVINGS {
            match self.step_potential(state, h) {
                Ok(s) => return Ok((s, h)),
                Err(LabError::Domain(_)) | Err(LabError::Positivity { .. }) | Err(LabError::Numerical(_)) => h *= 0.5,
                Err(e) => return Err(e),
            }
        }
        Err(LabError::Stiffness { t: state.t, dt: h })
    }

    /// Diagnostics at one state.
    pub fn sample(&self, state: &FlowState) -> Result<Sample> {
        let geo = &state.geo;
        let n = self.n();
        let report = self.ctx.report(&state.phi, &self.path)?;
        let phidot = self.rhs_with(geo);
        let de1 = (n >= 1).then(|| self.ctx.dek_dt_with(geo, &phidot, 1));
        let de0 = self.ctx.dek_dt_with(geo, &phidot, 0).value;
        let (diam, lam, sob) = if self.cfg.light {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            (diameter(geo).diameter, lambda1(geo)?.lambda1, sobolev_proxy(geo))
        };
        let record = SeriesRecord {
            t: state.t,
            e0: report.e0,
            e1: report.e1,
            de1_formula: de1.map_or(0.0, |d| d.value),
            l2_ric0: report.l2_ric0,
            l2_scalar: report.l2_scalar,
            l2_q0: report.l2_q0,
            ric_min: geo.ricci_lower_bound(),
            riem_sup: geo.riem_sup_norm(),
            diameter: diam,
            lambda1: lam,
        };
        Ok(Sample {
            record,
            ric0_sup: geo.ric0_sup(),
            q0_sup: geo.q0_sup(),
            phi_sup: state.phi.iter().fold(0.0, |m, v| m.max(v.abs())),
            de0_formula: de0,
            de1_split: de1.and_then(|d| d.split),
            sobolev_proxy: sob,
            riem_lp: riem_lp(geo),
        })
    }

    /// Integrates to t_end, sampling at every multiple of the cadence.
    /// `observer` sees each sampled state, e.g. to write checkpoints.
    /// With `include_initial` false the starting state is not sampled, as
    /// when resuming from a checkpoint that was itself a sample.
    pub fn run(
        &self,
        mut state: FlowState,
        include_initial: bool,
        observer: &mut dyn FnMut(&FlowState, &Sample) -> Result<()>,
    ) -> Result<RunOutcome> {
        let cadence = self.cfg.cadence;
        let t_end = self.cfg.t_end;
        let mut samples = Vec::new();
        let mut tick = (state.t / cadence).round() as u64;
        let mut take = |state: &FlowState, samples: &mut Vec<Sample>| -> Result<Sample> {
            let s = self.sample(state)?;
            observer(state, &s)?;
            samples.push(s);
            Ok(s)
        };
        let mut last_sup = if include_initial { take(&state, &mut samples)?.ric0_sup } else { state.geo.ric0_sup() };
        loop {
            if self.cfg.stop_tol.is_some_and(|tol| last_sup < tol) {
                return Ok(RunOutcome { samples, state, stop: StopReason::Converged });
            }
            if state.t >= t_end {
                return Ok(RunOutcome { samples, state, stop: StopReason::EndTime });
            }
            let target = ((tick + 1) as f64 * cadence).min(t_end);
            while state.t < target {
                let want = self.policy_dt(&state);
                let remaining = target - state.t;
                let landing = want >= remaining * (1.0 - 1e-12);
                let dt = if landing { remaining } else { want.min(remaining) };
                let (mut next, taken) = self.advance(&state, dt)?;
                if landing && taken == dt {
                    next.t = target;
                }
                state = next;
            }
            tick += 1;
            last_sup = take(&state, &mut samples)?.ric0_sup;
        }
    }
}

/// L^p norm of the curvature tensor for the exponent p = n + 2 > n + 1.
pub fn riem_lp(geo: &ProfileGeometry) -> f64 {
    let n = geo.n;
    let p = n as f64 + 2.0;
    geo.average_with(|l| l.riem_sq(n).powf(0.5 * p)).powf(1.0 / p)
}

/// Local data of the metric whose residual has x-derivative q.
pub fn metric_locals(grid: &Grid, n: usize, q: &[f64]) -> Result<Vec<Local>> {
    let dq = jets_of(grid, q);
    let mut out = Vec::with_capacity(q.len());
    for i in 0..q.len() {
        let l = Local::new(n, grid.x[i], grid.y[i], &[0.0, dq[i][0], dq[i][1], dq[i][2], dq[i][3]]);
        if !(l.t > 0.0 && l.p > 0.0) {
            return Err(LabError::Positivity { s: grid.s[i], what: format!("metric eigenvalues T = {}, P = {}", l.t, l.p) });
        }
        out.push(l);
    }
    Ok(out)
}

/// Metric-level state: q = d(F - F_FS)/dx at the nodes. The normalized flow
/// moves the Kähler form by -i dd-bar H, so dq/dt = -H_x.
#[derive(Debug, Clone)]
pub struct MetricState {
    pub t: f64,
    pub q: Vec<f64>,
}

impl MetricState {
    pub fn from_profile(p: &RadialProfile) -> Result<Self> {
        let grid = Grid::new(&p.grid)?;
        let q = jets_of(&grid, &p.residual()).iter().map(|d| d[1]).collect();
        Ok(MetricState { t: 0.0, q })
    }

    pub fn scalar(&self, grid: &Grid, n: usize) -> Result<Vec<f64>> {
        Ok(metric_locals(grid, n, &self.q)?.iter().map(|l| l.scalar(n)).collect())
    }
}

fn metric_rhs(grid: &Grid, n: usize, q: &[f64]) -> Result<Vec<f64>> {
    Ok(metric_locals(grid, n, q)?.iter().map(|l| -l.hx).collect())
}

/// One RK4 step of the metric-level flow.
pub fn step_metric_direct(grid: &Grid, n: usize, state: &MetricState, dt: f64) -> Result<MetricState> {
    let q = &state.q;
    let axpy = |a: f64, k: &[f64]| -> Vec<f64> { q.iter().zip(k).map(|(p, r)| p + a * r).collect() };
    let k1 = metric_rhs(grid, n, q)?;
    let k2 = metric_rhs(grid, n, &axpy(0.5 * dt, &k1))?;
    let k3 = metric_rhs(grid, n, &axpy(0.5 * dt, &k2))?;
    let k4 = metric_rhs(grid, n, &axpy(dt, &k3))?;
    let next = (0..q.len()).map(|i| q[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
    Ok(MetricState { t: state.t + dt, q: next })
}

/// Integrates the metric-level flow to `t_end` with steps of at most `dt`.
pub fn run_metric_direct(grid: &Grid, n: usize, mut state: MetricState, t_end: f64, dt: f64) -> Result<MetricState> {
    let steps = ((t_end - state.t) / dt).ceil().max(0.0) as u64;
    if steps == 0 {
        return Ok(state);
    }
    let h = (t_end - state.t) / steps as f64;
    let t0 = state.t;
    for k in 0..steps {
        state = step_metric_direct(grid, n, &state, h)?;
        state.t = t0 + (k + 1) as f64 * h;
    }
    Ok(state)
}
