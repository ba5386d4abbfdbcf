//! Configured flow runs with checkpointing, monitors and output files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{Format, Monitor, RunConfig};
use crate::constants::{admissibility_certificate, Admissibility, StabilityBudget};
use crate::error::{LabError, Result};
use crate::flow::{Flow, Sample, SeriesRecord, StopReason};
use crate::functionals::PathSpec;
use crate::io::{self, Checkpoint, Manifest};
use crate::monitors::{
    continuation_scan, convergence_detector, doubling_time_monitor, pinching_window_check, ric0_points,
    ContinuationVerdict, ConvergenceKind, ConvergenceVerdict, DoublingVerdict, PinchingVerdict,
};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const SERIES_CSV: &str = "series.csv";
pub const SERIES_JSON: &str = "series.json";
pub const VERDICTS_FILE: &str = "verdicts.json";
pub const INITIAL_FILE: &str = "initial.json";
pub const FINAL_FILE: &str = "final.json";

/// Exit status for a completed run whose monitors reported a failure.
pub const EXIT_MONITOR_FAILURE: i32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub format_version: String,
    pub kind: String,
    pub budget: StabilityBudget,
    pub stop: StopReason,
    pub t_final: f64,
    pub steps: u64,
    pub certificate: Option<Admissibility>,
    pub doubling: Option<DoublingVerdict>,
    pub pinching: Option<PinchingVerdict>,
    pub convergence: Option<ConvergenceVerdict>,
    pub continuation: Option<ContinuationVerdict>,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct FlowReport {
    pub samples: Vec<Sample>,
    pub verdicts: Verdicts,
    pub exit_code: i32,
}

#[derive(Serialize)]
struct SeriesDoc<'a> {
    format_version: &'a str,
    kind: &'a str,
    columns: &'a [&'a str],
    rows: Vec<&'a SeriesRecord>,
}

/// Runs (or resumes) the configured flow, writing every artifact into `out`.
/// Resuming requires a checkpoint produced by the same trajectory settings;
/// t_end may differ.
pub fn run_flow(cfg: &RunConfig, out: &Path, resume: bool, command: &str) -> Result<FlowReport> {
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    let budget = cfg.budget()?;
    let profile = cfg.initial_profile()?;
    let mut flow_cfg = cfg.flow.clone();
    flow_cfg.lambda.get_or_insert(budget.lambda);
    let (flow, start) = Flow::new(&profile, flow_cfg)?;
    let hash = cfg.trajectory_hash();

    let (state, mut samples, include_initial) = if resume {
        let ck = Checkpoint::read(&out.join(CHECKPOINT_FILE))?;
        if ck.config_hash != hash {
            return Err(LabError::Config(format!(
                "checkpoint was written for configuration {}, current is {hash}",
                ck.config_hash
            )));
        }
        if ck.n != profile.n || ck.grid != profile.grid {
            return Err(LabError::Config("checkpoint grid differs from configuration".into()));
        }
        (flow.state_at(ck.t, ck.phi, ck.step, ck.rho)?, ck.samples, false)
    } else {
        io::write_snapshot(&out.join(INITIAL_FILE), &profile, Some(0.0))?;
        (start, Vec::new(), true)
    };

    let certificate = if cfg.monitors.contains(&Monitor::Certificate) {
        let e1 = flow.ctx.ek(&profile.residual(), 1, &PathSpec::default())?;
        Some(admissibility_certificate(&profile.geometry()?, e1, &budget, 0.0))
    } else {
        None
    };

    let outcome = {
        let samples = &mut samples;
        let grid = profile.grid.clone();
        flow.run(state, include_initial, &mut |st, s| {
            samples.push(*s);
            Checkpoint::new(&hash, profile.n, &grid, st.t, st.step, st.rho, &st.phi, samples)
                .write(&out.join(CHECKPOINT_FILE))
        })?
    };
    let state = outcome.state;
    io::write_snapshot(&out.join(FINAL_FILE), &flow.profile(&state)?, Some(state.t))?;

    let mut files = vec![INITIAL_FILE.to_string(), FINAL_FILE.to_string(), CHECKPOINT_FILE.to_string()];
    let records: Vec<SeriesRecord> = samples.iter().map(|s| s.record).collect();
    if cfg.output.formats.contains(&Format::Csv) {
        io::write_series(&out.join(SERIES_CSV), &records)?;
        files.push(SERIES_CSV.into());
    }
    if cfg.output.formats.contains(&Format::Json) {
        let doc = SeriesDoc {
            format_version: io::FORMAT_VERSION,
            kind: "series",
            columns: &crate::flow::SERIES_COLUMNS,
            rows: records.iter().collect(),
        };
        io::write_atomic(&out.join(SERIES_JSON), io::to_json(&doc)?.as_bytes())?;
        files.push(SERIES_JSON.into());
    }

    let th = &cfg.thresholds;
    let on = |m| cfg.monitors.contains(&m);
    let doubling = if on(Monitor::Doubling) { Some(doubling_time_monitor(&samples, budget.lambda)?) } else { None };
    let pinching = if on(Monitor::Pinching) {
        Some(pinching_window_check(&samples, &budget, 0.0, th.eps_n, th.q0.unwrap_or(th.eps_n))?)
    } else {
        None
    };
    let convergence =
        on(Monitor::Convergence).then(|| convergence_detector(&ric0_points(&samples), &cfg.convergence_options()));
    let continuation = on(Monitor::Continuation).then(|| continuation_scan(&samples, &cfg.continuation_options()));

    let pass = certificate.is_none_or(|c| c.pass)
        && doubling.is_none_or(|d| d.pass)
        && pinching.as_ref().is_none_or(|p| p.pass)
        && convergence.as_ref().is_none_or(|c| c.kind != ConvergenceKind::NotConverging)
        && continuation.as_ref().is_none_or(|c| c.pass);
    let verdicts = Verdicts {
        format_version: io::FORMAT_VERSION.into(),
        kind: "verdicts".into(),
        budget,
        stop: outcome.stop,
        t_final: state.t,
        steps: state.step,
        certificate,
        doubling,
        pinching,
        convergence,
        continuation,
        pass,
    };
    io::write_atomic(&out.join(VERDICTS_FILE), io::to_json(&verdicts)?.as_bytes())?;
    files.push(VERDICTS_FILE.into());

    let exit_code = if pass { 0 } else { EXIT_MONITOR_FAILURE };
    Manifest::collect(out, command, Some(hash), exit_code, &files)?.write(out)?;
    Ok(FlowReport { samples, verdicts, exit_code })
}
