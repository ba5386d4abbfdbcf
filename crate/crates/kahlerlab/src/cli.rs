//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{diameter, digest, lambda1, li_yau_bound, sobolev_proxy, sprouse_check, DiameterParts, GeometryDigest, Spectrum, SprouseVerdict};
use crate::config::RunConfig;
use crate::constants::{
    admissibility_certificate, condition_star, epsilon0_numeric, Admissibility, StabilityBudget, DEFAULT_C_N,
};
use crate::error::{LabError, Result};
use crate::functionals::{EnergyContext, EnergyReport, PathSpec};
use crate::geometry::RadialProfile;
use crate::io::{self, Manifest};
use crate::runner::{run_flow, EXIT_MONITOR_FAILURE};
use crate::segment::{segment_inequality_check, SegmentConfig};

#[derive(Debug, Parser)]
#[command(name = "kahlerlab", version, about = "Kähler-Ricci flow laboratory for U(n)-invariant metrics on CP^n")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for the perturbation or the segment sampler.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override grid.nodes of the configuration.
    #[arg(long, global = true)]
    pub grid_nodes: Option<usize>,
    /// Override flow.t_end of the configuration.
    #[arg(long, global = true)]
    pub t_end: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate the normalized flow from the configured initial metric.
    Flow {
        /// Continue from the checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Energies, curvature, diameter and spectrum of a profile.
    Analyze(ProfileArg),
    /// Explicit constants for the given dimension and curvature budget.
    Constants(BudgetArgs),
    /// Admissibility certificate of a profile.
    Certify {
        #[command(flatten)]
        profile: ProfileArg,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// First eigenvalue with the Li-Yau comparison and the Sobolev proxy.
    Spectrum(ProfileArg),
    /// Segment inequality on a surface of revolution (n = 1).
    SegmentCheck {
        #[command(flatten)]
        profile: ProfileArg,
        #[arg(long, default_value_t = 0.2)]
        cap_radius: f64,
        #[arg(long, default_value_t = 500)]
        pairs: usize,
    },
}

#[derive(Debug, Args)]
pub struct ProfileArg {
    /// Profile snapshot; defaults to the initial profile of --config.
    pub snapshot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// Complex dimension (taken from --config when omitted).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub c_n: Option<f64>,
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load_config(common: &Common) -> Result<Option<RunConfig>> {
    let Some(path) = &common.config else { return Ok(None) };
    let text = std::fs::read_to_string(path)
        .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = RunConfig::from_json(&text)?;
    if let Some(seed) = common.seed {
        cfg.set_seed(seed);
    }
    if let Some(nodes) = common.grid_nodes {
        cfg.grid.nodes = nodes;
    }
    if let Some(t) = common.t_end {
        cfg.flow.t_end = t;
    }
    if let Some(out) = &common.out {
        cfg.output.directory = out.to_string_lossy().into_owned();
    }
    cfg.validate()?;
    Ok(Some(cfg))
}

fn load_profile(arg: &ProfileArg, cfg: Option<&RunConfig>) -> Result<(RadialProfile, Option<f64>)> {
    match (&arg.snapshot, cfg) {
        (Some(p), _) => io::read_snapshot(p),
        (None, Some(c)) => Ok((c.initial_profile()?, None)),
        (None, None) => Err(LabError::Config("a snapshot path or --config is required".into())),
    }
}

fn budget_from(args: &BudgetArgs, cfg: Option<&RunConfig>, n_profile: Option<usize>) -> Result<StabilityBudget> {
    let n = args.n.or(n_profile).or(cfg.map(|c| c.manifold.n));
    let n = n.ok_or_else(|| LabError::Config("--n or --config is required".into()))?;
    let delta = args.delta.or(cfg.map(|c| c.budget.delta)).unwrap_or(0.5);
    let lambda = args.lambda.or(cfg.map(|c| c.budget.lambda)).unwrap_or(2.0);
    let c_n = args.c_n.or(cfg.map(|c| c.budget.c_n)).unwrap_or(DEFAULT_C_N);
    StabilityBudget::new(n, delta, lambda, c_n)
}

/// Writes `<name>.json` and a manifest when --out is given.
fn emit<T: Serialize>(out: Option<&Path>, name: &str, command: &str, value: &T, code: i32) -> Result<()> {
    let Some(dir) = out else { return Ok(()) };
    std::fs::create_dir_all(dir)?;
    let file = format!("{name}.json");
    io::write_atomic(&dir.join(&file), io::to_json(value)?.as_bytes())?;
    Manifest::collect(dir, command, None, code, &[file])?.write(dir)
}

#[derive(Serialize)]
struct Doc<'a, T: Serialize> {
    format_version: &'a str,
    kind: &'a str,
    #[serde(flatten)]
    body: T,
}

fn doc<'a, T: Serialize>(kind: &'a str, body: T) -> Doc<'a, T> {
    Doc { format_version: io::FORMAT_VERSION, kind, body }
}

#[derive(Serialize)]
struct Analysis {
    n: usize,
    t: Option<f64>,
    energy: EnergyReport,
    ric0_sup: f64,
    q0_sup: f64,
    diameter: DiameterParts,
    spectrum: Spectrum,
    digest: GeometryDigest,
    sprouse: SprouseVerdict,
}

#[derive(Serialize)]
struct SpectrumDoc {
    spectrum: Spectrum,
    diameter: f64,
    li_yau_bound: f64,
    ric_min: f64,
    li_yau_applies: bool,
    li_yau_ok: bool,
    sobolev_proxy: f64,
}

#[derive(Serialize)]
struct ConstantsDoc {
    budget: StabilityBudget,
    eps0_numeric: (f64, f64),
    condition_star: Option<String>,
}

fn execute(cli: &Cli) -> Result<i32> {
    let common = &cli.common;
    let cfg = load_config(common)?;
    let out = common.out.as_deref();
    match &cli.command {
        Command::Flow { resume } => {
            let cfg = cfg.ok_or_else(|| LabError::Config("flow requires --config".into()))?;
            let dir = PathBuf::from(&cfg.output.directory);
            let report = run_flow(&cfg, &dir, *resume, "flow")?;
            let v = &report.verdicts;
            println!("t_final = {:.16e}", v.t_final);
            println!("steps = {}", v.steps);
            println!("samples = {}", report.samples.len());
            println!("stop = {:?}", v.stop);
            if let Some(c) = &v.certificate {
                println!("certificate = {}", pass_word(c.pass));
            }
            if let Some(d) = &v.doubling {
                println!("doubling = {}", pass_word(d.pass));
            }
            if let Some(p) = &v.pinching {
                println!("pinching = {}", pass_word(p.pass));
            }
            if let Some(c) = &v.convergence {
                println!("convergence = {:?} (rate {:.6e})", c.kind, c.rate);
            }
            if let Some(c) = &v.continuation {
                println!("continuation = {}", pass_word(c.pass));
            }
            println!("output = {}", dir.display());
            Ok(report.exit_code)
        }
        Command::Analyze(arg) => {
            let (p, t) = load_profile(arg, cfg.as_ref())?;
            let geo = p.geometry()?;
            let reference = RadialProfile::fubini_study(p.n, &p.grid)?;
            let ctx = EnergyContext::new(&reference)?;
            let energy = ctx.report(&p.residual(), &PathSpec::default())?;
            let delta = cfg.as_ref().map_or(0.5, |c| c.budget.delta);
            let a = Analysis {
                n: p.n,
                t,
                energy,
                ric0_sup: geo.ric0_sup(),
                q0_sup: geo.q0_sup(),
                diameter: diameter(&geo),
                spectrum: lambda1(&geo)?,
                digest: digest(&geo)?,
                sprouse: sprouse_check(&geo, delta),
            };
            println!("E0 = {:.16e}", a.energy.e0);
            println!("E1 = {:.16e}", a.energy.e1);
            println!("l2_ric0 = {:.16e}", a.energy.l2_ric0);
            println!("ric_min = {:.16e}", a.digest.ric_min);
            println!("riem_sup = {:.16e}", geo.riem_sup_norm());
            println!("diameter = {:.16e}", a.diameter.diameter);
            println!("lambda1 = {:.16e}", a.spectrum.lambda1);
            emit(out, "analysis", "analyze", &doc("analysis", a), 0)?;
            Ok(0)
        }
        Command::Constants(args) => {
            let b = budget_from(args, cfg.as_ref(), None)?;
            print!("{}", b.table());
            let star = (b.n >= 2).then(|| condition_star(b.n).map(|r| r.to_string())).transpose()?;
            if let Some(s) = &star {
                println!("{:<8} {s}", "c1c2");
            }
            let ok = b.checks.positive && b.checks.eps_within_first && b.checks.eps_within_second;
            let code = if ok { 0 } else { EXIT_MONITOR_FAILURE };
            let d = ConstantsDoc { budget: b, eps0_numeric: epsilon0_numeric(b.n), condition_star: star };
            emit(out, "constants", "constants", &doc("constants", d), code)?;
            Ok(code)
        }
        Command::Certify { profile, budget } => {
            let (p, _) = load_profile(profile, cfg.as_ref())?;
            let b = budget_from(budget, cfg.as_ref(), Some(p.n))?;
            if b.n != p.n {
                return Err(LabError::Config(format!("--n {} differs from the profile dimension {}", b.n, p.n)));
            }
            let geo = p.geometry()?;
            let ctx = EnergyContext::new(&RadialProfile::fubini_study(p.n, &p.grid)?)?;
            let e1 = ctx.ek(&p.residual(), 1, &PathSpec::default())?;
            let c: Admissibility = admissibility_certificate(&geo, e1, &b, 0.0);
            println!("ric_min = {:.16e} (margin {:.6e}) {}", c.ric_min, c.ric_margin, pass_word(c.ric_ok));
            println!("riem_sup = {:.16e} (margin {:.6e}) {}", c.riem_sup, c.riem_margin, pass_word(c.riem_ok));
            println!("E1 = {:.16e} (margin {:.6e}) {}", c.e1, c.energy_margin, pass_word(c.energy_ok));
            println!("certificate = {}", pass_word(c.pass));
            let code = if c.pass { 0 } else { EXIT_MONITOR_FAILURE };
            #[derive(Serialize)]
            struct Cert {
                budget: StabilityBudget,
                certificate: Admissibility,
            }
            emit(out, "certificate", "certify", &doc("certificate", Cert { budget: b, certificate: c }), code)?;
            Ok(code)
        }
        Command::Spectrum(arg) => {
            let (p, _) = load_profile(arg, cfg.as_ref())?;
            let geo = p.geometry()?;
            let spectrum = lambda1(&geo)?;
            let d = diameter(&geo).diameter;
            let ric_min = geo.ricci_lower_bound();
            let bound = li_yau_bound(d);
            let applies = ric_min >= 0.0;
            let s = SpectrumDoc {
                spectrum,
                diameter: d,
                li_yau_bound: bound,
                ric_min,
                li_yau_applies: applies,
                li_yau_ok: spectrum.lambda1 >= bound,
                sobolev_proxy: sobolev_proxy(&geo),
            };
            println!("lambda1 = {:.16e}", s.spectrum.lambda1);
            println!("invariant = {:.16e}", s.spectrum.invariant);
            if let Some(a) = s.spectrum.angular {
                println!("angular = {a:.16e}");
            }
            println!("diameter = {d:.16e}");
            println!("li_yau_bound = {bound:.16e}");
            println!("sobolev_proxy = {:.16e}", s.sobolev_proxy);
            let code = if applies && !s.li_yau_ok { EXIT_MONITOR_FAILURE } else { 0 };
            emit(out, "spectrum", "spectrum", &doc("spectrum", s), code)?;
            Ok(code)
        }
        Command::SegmentCheck { profile, cap_radius, pairs } => {
            let (p, _) = load_profile(profile, cfg.as_ref())?;
            let geo = p.geometry()?;
            let sc = SegmentConfig { cap_radius: *cap_radius, pairs: *pairs, seed: common.seed.unwrap_or(0) };
            let r = segment_inequality_check(&geo, &sc)?;
            print!("{}", r.to_text());
            let code = if r.holds { 0 } else { EXIT_MONITOR_FAILURE };
            if let Some(dir) = out {
                std::fs::create_dir_all(dir)?;
                io::write_atomic(&dir.join("segment.txt"), r.to_text().as_bytes())?;
                io::write_atomic(&dir.join("segment.json"), io::to_json(&doc("segment", &r))?.as_bytes())?;
                Manifest::collect(dir, "segment-check", None, code, &["segment.txt".into(), "segment.json".into()])?
                    .write(dir)?;
            }
            Ok(code)
        }
    }
}

fn pass_word(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Sizes the global rayon pool from the WORKERS environment variable.
pub fn configure_workers() -> Result<()> {
    let Ok(v) = std::env::var("WORKERS") else { return Ok(()) };
    let k: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&k| k > 0)
        .ok_or_else(|| LabError::Config(format!("WORKERS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(k)
        .build_global()
        .map_err(|e| LabError::Config(format!("cannot size worker pool: {e}")))
}
