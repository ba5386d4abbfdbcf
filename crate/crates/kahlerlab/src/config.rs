//! Run configuration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constants::{StabilityBudget, DEFAULT_C_N};
use crate::error::{LabError, Result};
use crate::flow::FlowConfig;
use crate::geometry::{uniform_nodes, RadialProfile, MIN_NODES};
use crate::monitors::{ContinuationOptions, ConvergenceOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifold {
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "L")]
    pub half_width: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// amplitude * sech(s)
    Sech,
    /// One to three sech bumps at seeded centres in [-2, 2].
    Bumps,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    Fs,
    FsPlusPerturbation {
        amplitude: f64,
        shape: Shape,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    pub delta: f64,
    #[serde(rename = "Lambda")]
    pub lambda: f64,
    #[serde(default = "default_c_n")]
    pub c_n: f64,
}

fn default_c_n() -> f64 {
    DEFAULT_C_N
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitor {
    Certificate,
    Doubling,
    Pinching,
    Convergence,
    Continuation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Pointwise pinching width eps(n).
    #[serde(default = "default_eps_n")]
    pub eps_n: f64,
    /// Bound for sup |Q0| on [3T, 4T]; defaults to eps_n.
    #[serde(default)]
    pub q0: Option<f64>,
    #[serde(default = "default_rate_min")]
    pub rate_min: f64,
    #[serde(default = "default_floor")]
    pub floor: f64,
    #[serde(default = "default_continuation_step")]
    pub continuation_step: f64,
    #[serde(default = "default_lp_factor")]
    pub lp_factor: f64,
}

fn default_eps_n() -> f64 {
    0.1
}
fn default_rate_min() -> f64 {
    0.1
}
fn default_floor() -> f64 {
    1e-9
}
fn default_continuation_step() -> f64 {
    0.5
}
fn default_lp_factor() -> f64 {
    2.0
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            eps_n: default_eps_n(),
            q0: None,
            rate_min: default_rate_min(),
            floor: default_floor(),
            continuation_step: default_continuation_step(),
            lp_factor: default_lp_factor(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub directory: String,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifold: Manifold,
    pub grid: GridSpec,
    pub initial: Initial,
    pub flow: FlowConfig,
    pub budget: BudgetSpec,
    #[serde(default)]
    pub monitors: Vec<Monitor>,
    #[serde(default)]
    pub thresholds: Thresholds,
    pub output: OutputSpec,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| LabError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.manifold.n == 0 {
            return Err(LabError::Config("manifold.n must be at least 1".into()));
        }
        if !(self.grid.half_width > 0.0) || !self.grid.half_width.is_finite() {
            return Err(LabError::Config(format!("grid.L must be positive, got {}", self.grid.half_width)));
        }
        if self.grid.nodes < MIN_NODES {
            return Err(LabError::Config(format!("grid.nodes must be at least {MIN_NODES}, got {}", self.grid.nodes)));
        }
        if let Initial::FsPlusPerturbation { amplitude, .. } = self.initial {
            if !amplitude.is_finite() {
                return Err(LabError::Config("initial.amplitude must be finite".into()));
            }
        }
        self.flow.validate()?;
        self.budget()?;
        let t = &self.thresholds;
        for (name, v) in [
            ("eps_n", t.eps_n),
            ("rate_min", t.rate_min),
            ("floor", t.floor),
            ("continuation_step", t.continuation_step),
            ("lp_factor", t.lp_factor),
        ] {
            if !(v > 0.0) {
                return Err(LabError::Config(format!("thresholds.{name} must be positive, got {v}")));
            }
        }
        if self.output.directory.is_empty() {
            return Err(LabError::Config("output.directory must not be empty".into()));
        }
        Ok(())
    }

    pub fn budget(&self) -> Result<StabilityBudget> {
        StabilityBudget::new(self.manifold.n, self.budget.delta, self.budget.lambda, self.budget.c_n)
    }

    pub fn initial_profile(&self) -> Result<RadialProfile> {
        let grid = uniform_nodes(self.grid.half_width, self.grid.nodes)?;
        let n = self.manifold.n;
        match self.initial {
            Initial::Fs => RadialProfile::fubini_study(n, &grid),
            Initial::FsPlusPerturbation { amplitude, shape, seed } => {
                let terms = perturbation_terms(amplitude, shape, seed);
                let r: Vec<f64> =
                    grid.iter().map(|&s| terms.iter().map(|(a, c)| a / (s - c).cosh()).sum()).collect();
                let p = RadialProfile::from_residual(n, &grid, &r)?;
                p.validate()?;
                Ok(p)
            }
        }
    }

    pub fn convergence_options(&self) -> ConvergenceOptions {
        ConvergenceOptions { rate_min: self.thresholds.rate_min, floor: self.thresholds.floor, ..Default::default() }
    }

    pub fn continuation_options(&self) -> ContinuationOptions {
        ContinuationOptions {
            eps_n: self.thresholds.eps_n,
            step: self.thresholds.continuation_step,
            lp_factor: self.thresholds.lp_factor,
        }
    }

    /// Hash of everything that determines a trajectory; t_end and the
    /// output section are excluded so a run may be extended on resume.
    pub fn trajectory_hash(&self) -> String {
        let mut c = self.clone();
        c.flow.t_end = 0.0;
        c.output = OutputSpec { directory: String::new(), formats: vec![] };
        c.monitors.clear();
        c.thresholds = Thresholds::default();
        let text = serde_json::to_string(&c).expect("config serializes");
        format!("{:016x}", fnv1a(text.as_bytes()))
    }

    pub fn set_seed(&mut self, new_seed: u64) {
        if let Initial::FsPlusPerturbation { seed, .. } = &mut self.initial {
            *seed = new_seed;
        }
    }
}

/// (amplitude, centre) pairs of the sech perturbation.
pub fn perturbation_terms(amplitude: f64, shape: Shape, seed: u64) -> Vec<(f64, f64)> {
    match shape {
        Shape::Sech => vec![(amplitude, 0.0)],
        Shape::Bumps => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = rng.gen_range(1..=3);
            (0..k).map(|_| (amplitude * rng.gen_range(-1.0..1.0) / k as f64, rng.gen_range(-2.0..2.0))).collect()
        }
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf29ce484222325u64, |h, b| (h ^ *b as u64).wrapping_mul(0x100000001b3))
}
