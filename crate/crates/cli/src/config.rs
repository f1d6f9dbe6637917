//! Experiment configuration: TOML with one section per stage.
//!
//! Unknown keys are rejected at parse time. [`Config::validate`] then runs the
//! structural and cross-field checks and returns every problem it finds.

use std::fmt;
use std::path::{Path, PathBuf};

use delwalk_core::partition::subboxes_per_side;
use delwalk_core::pointproc::{ProcessSpec, Window};
use serde::{Deserialize, Serialize};

use crate::stage::Stage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: Experiment,
    /// Kept as a raw table so that a missing or misspelled `kind` is reported by
    /// validation together with the other problems.
    #[serde(default)]
    pub process: Option<toml::Table>,
    #[serde(default)]
    pub window: Option<WindowConfig>,
    #[serde(default)]
    pub assumptions: Option<AssumptionsConfig>,
    #[serde(default)]
    pub boxes: Option<BoxesConfig>,
    #[serde(default)]
    pub walks: Option<WalksConfig>,
    #[serde(default)]
    pub corrector: Option<CorrectorConfig>,
    #[serde(default)]
    pub analysis: Option<AnalysisConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Experiment {
    pub name: String,
    /// Master seed; per-stage seeds are derived from it.
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Stages to run; all of them when omitted.
    #[serde(default)]
    pub stages: Option<Vec<String>>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Observation window `[-half_side, half_side]^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub dim: usize,
    pub half_side: f64,
}

/// Void, tail and Palm moment curves computed during sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssumptionsConfig {
    pub l_grid: Vec<f64>,
    pub rho_grid: Vec<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxesConfig {
    pub s: f64,
    pub alpha: f64,
    /// Cluster radii; the largest one defines the good points used downstream. Empty
    /// means the largest radius the window allows.
    #[serde(default)]
    pub l_grid: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalksConfig {
    /// Observation steps of the discrete walk (diffusion estimate).
    pub steps: Vec<usize>,
    /// Observation times of the variable-speed walk (diffusion estimate).
    pub times: Vec<f64>,
    pub walkers: usize,
    pub start_half_side: f64,
    /// Length of the single recorded trajectory of each walk kind.
    #[serde(default = "default_record_steps")]
    pub record_steps: usize,
}

fn default_record_steps() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrectorConfig {
    pub radii: Vec<f64>,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub eps_delta: Vec<[f64; 2]>,
    #[serde(default)]
    pub betas: Vec<f64>,
    #[serde(default)]
    pub martingale_steps: usize,
    #[serde(default)]
    pub martingale_walks: usize,
    #[serde(default = "default_min_visits")]
    pub min_visits: usize,
}

fn default_tolerance() -> f64 {
    1e-9
}

fn default_min_visits() -> usize {
    100
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub t_grid: Vec<f64>,
    pub u_grid: Vec<f64>,
    /// Neighbour-distance grid of the Palm tail audit.
    pub rho_grid: Vec<f64>,
    pub iso_budget: usize,
    pub distance_walkers: usize,
    pub palm_samples: usize,
    #[serde(default = "default_palm_half_side")]
    pub palm_half_side: f64,
    #[serde(default = "default_conductance_sets")]
    pub conductance_sets: usize,
    #[serde(default = "default_lens_beta")]
    pub lens_beta: f64,
    #[serde(default = "default_lens_n_max")]
    pub lens_n_max: u32,
}

fn default_palm_half_side() -> f64 {
    8.0
}

fn default_conductance_sets() -> usize {
    100
}

fn default_lens_beta() -> f64 {
    1.5
}

fn default_lens_n_max() -> u32 {
    5
}

/// Pass/fail thresholds used by `report`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub kernel_row_sum: f64,
    pub detailed_balance: f64,
    /// Allowed distance of the heat-kernel log-log slope from `-d/2`.
    pub heat_slope: f64,
    /// Largest allowed max/min of `E‖Ŷ_t − x‖/√t`.
    pub distance_ratio: f64,
    /// Allowed relative gap between `σ²_VSRW/σ²_DTRW` and the mean Palm degree.
    pub sigma2_relation: f64,
    pub isotropy: f64,
    /// Allowed `|mean increment| / SE` of the martingale check.
    pub martingale_z: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            kernel_row_sum: 1e-10,
            detailed_balance: 1e-8,
            heat_slope: 0.15,
            distance_ratio: 1.5,
            sigma2_relation: 0.1,
            isotropy: 0.05,
            martingale_z: 5.0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

/// A single validation failure: the offending key and what is wrong with it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub key: String,
    pub message: String,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

/// Loaded config plus the exact text it came from.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: Config,
    pub text: String,
}

pub fn load(path: &Path) -> Result<Loaded, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_owned(),
        source,
    })?;
    let config = parse(&text).map_err(|message| ConfigError::Parse {
        path: path.to_owned(),
        message,
    })?;
    Ok(Loaded { config, text })
}

pub fn parse(text: &str) -> Result<Config, String> {
    toml::from_str(text).map_err(|e| e.message().to_owned())
}

fn increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

fn all_finite(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite())
}

struct Checker(Vec<Problem>);

impl Checker {
    fn require(&mut self, ok: bool, key: &str, message: impl Into<String>) {
        if !ok {
            self.0.push(Problem {
                key: key.to_owned(),
                message: message.into(),
            });
        }
    }
}

impl Config {
    /// Stages requested by the config, in pipeline order.
    pub fn stages(&self) -> Result<Vec<Stage>, Vec<Problem>> {
        match &self.experiment.stages {
            None => Ok(Stage::ALL.to_vec()),
            Some(names) => {
                let mut problems = Vec::new();
                let mut out = Vec::new();
                for n in names {
                    match n.parse::<Stage>() {
                        Ok(s) => out.push(s),
                        Err(e) => problems.push(Problem {
                            key: "experiment.stages".into(),
                            message: e,
                        }),
                    }
                }
                if !problems.is_empty() {
                    return Err(problems);
                }
                out.sort();
                out.dedup();
                Ok(out)
            }
        }
    }

    pub fn process_spec(&self) -> Option<ProcessSpec> {
        let table = self.process.clone()?;
        toml::Value::Table(table).try_into().ok()
    }

    pub fn window(&self) -> Option<Window> {
        let w = self.window.as_ref()?;
        Window::centered(w.dim, w.half_side).ok()
    }

    /// Every problem found; empty when the config is usable for `stages`.
    pub fn validate(&self, stages: &[Stage]) -> Vec<Problem> {
        let mut c = Checker(Vec::new());
        let wants = |s: Stage| stages.contains(&s);
        c.require(!self.experiment.name.trim().is_empty(), "experiment.name", "must not be empty");

        let needs_process = wants(Stage::Sample) || wants(Stage::Analyze);
        match &self.process {
            None => c.require(!needs_process, "process", "section is missing"),
            Some(table) => match table.get("kind") {
                None => c.require(false, "process.kind", "is missing"),
                Some(_) => match toml::Value::Table(table.clone()).try_into::<ProcessSpec>() {
                    Err(e) => c.require(false, "process", e.message().to_owned()),
                    Ok(spec) => {
                        if let Err(e) = spec.validate() {
                            c.require(false, "process", e.to_string());
                        }
                    }
                },
            },
        }

        let half = match &self.window {
            None => {
                c.require(false, "window", "section is missing");
                None
            }
            Some(w) => {
                c.require(w.dim == 2, "window.dim", format!("only d = 2 is supported (got {})", w.dim));
                let ok = w.half_side > 0.0 && w.half_side.is_finite();
                c.require(ok, "window.half_side", format!("must be positive (got {})", w.half_side));
                ok.then_some(w.half_side)
            }
        };

        if let Some(a) = &self.assumptions {
            let ok = !a.l_grid.is_empty() && a.l_grid[0] > 0.0 && increasing(&a.l_grid) && all_finite(&a.l_grid);
            c.require(ok, "assumptions.l_grid", "must be nonempty, positive and strictly increasing");
            let ok = !a.rho_grid.is_empty() && a.rho_grid[0] > 0.0 && increasing(&a.rho_grid) && all_finite(&a.rho_grid);
            c.require(ok, "assumptions.rho_grid", "must be nonempty, positive and strictly increasing");
            c.require(a.samples >= 10, "assumptions.samples", "must be at least 10");
        }

        let needs_boxes = wants(Stage::Classify) || wants(Stage::Walk) || wants(Stage::Analyze);
        match &self.boxes {
            None => c.require(!needs_boxes, "boxes", "section is missing"),
            Some(b) => {
                c.require(b.s > 0.0 && b.s.is_finite(), "boxes.s", format!("must be positive (got {})", b.s));
                c.require(
                    b.alpha > 0.0 && b.alpha.is_finite(),
                    "boxes.alpha",
                    format!("must be positive (got {})", b.alpha),
                );
                let li: Vec<f64> = b.l_grid.iter().map(|&l| l as f64).collect();
                c.require(
                    b.l_grid.iter().all(|&l| l >= 1) && increasing(&li),
                    "boxes.l_grid",
                    "must hold strictly increasing radii ≥ 1",
                );
                if let (Some(h), true) = (half, b.s > 0.0) {
                    let k = subboxes_per_side(2) as f64 * b.s;
                    let max_l = (h / k - 0.5).floor() as i64;
                    c.require(
                        max_l >= 1,
                        "boxes.s",
                        format!("boxes of side {k} leave fewer than 3 per axis in the window"),
                    );
                    if let Some(&l) = b.l_grid.last() {
                        c.require(
                            l <= max_l,
                            "boxes.l_grid",
                            format!("radius {l} exceeds the window, which fits L ≤ {}", max_l.max(0)),
                        );
                    }
                }
            }
        }

        match &self.walks {
            None => c.require(!(wants(Stage::Walk) || wants(Stage::Analyze)), "walks", "section is missing"),
            Some(w) => {
                let st: Vec<f64> = w.steps.iter().map(|&s| s as f64).collect();
                c.require(
                    !w.steps.is_empty() && w.steps[0] > 0 && increasing(&st),
                    "walks.steps",
                    "must be nonempty, positive and strictly increasing",
                );
                c.require(
                    w.times.len() >= 2 && w.times[0] > 0.0 && increasing(&w.times) && all_finite(&w.times),
                    "walks.times",
                    "needs at least two positive, strictly increasing times",
                );
                c.require(w.steps.len() >= 2, "walks.steps", "needs at least two entries");
                c.require(w.walkers >= 1000, "walks.walkers", "must be at least 1000");
                c.require(w.record_steps >= 1, "walks.record_steps", "must be at least 1");
                let ok = w.start_half_side > 0.0 && !half.is_some_and(|h| w.start_half_side > h);
                c.require(ok, "walks.start_half_side", "must be positive and at most window.half_side");
            }
        }

        match &self.corrector {
            None => c.require(!wants(Stage::Corrector), "corrector", "section is missing"),
            Some(k) => {
                c.require(
                    k.radii.len() >= 3 && k.radii[0] > 0.0 && increasing(&k.radii) && all_finite(&k.radii),
                    "corrector.radii",
                    "needs at least three positive, strictly increasing radii",
                );
                if let (Some(h), Some(&r)) = (half, k.radii.last()) {
                    c.require(r < h, "corrector.radii", format!("largest radius {r} must lie inside the window (half side {h})"));
                }
                c.require(k.tolerance > 0.0, "corrector.tolerance", "must be positive");
                c.require(
                    k.eps_delta.iter().all(|p| p.iter().all(|&x| x > 0.0 && x < 1.0)),
                    "corrector.eps_delta",
                    "pairs must lie in (0, 1)",
                );
                c.require(k.betas.iter().all(|&b| b > 0.0), "corrector.betas", "must be positive");
                c.require(
                    k.martingale_steps == 0 || k.martingale_walks >= 2,
                    "corrector.martingale_walks",
                    "must be at least 2 when martingale_steps is set",
                );
            }
        }

        match &self.analysis {
            None => c.require(!wants(Stage::Analyze), "analysis", "section is missing"),
            Some(a) => {
                c.require(
                    a.t_grid.len() >= 2 && a.t_grid[0] >= 0.0 && increasing(&a.t_grid) && all_finite(&a.t_grid),
                    "analysis.t_grid",
                    "needs at least two nonnegative, strictly increasing times",
                );
                for &u in &a.u_grid {
                    c.require(u > 0.0, "analysis.u_grid", format!("u = {u} violates u > 0"));
                    c.require(u <= 0.5, "analysis.u_grid", format!("u = {u} violates the constraint u ≤ 1/2"));
                }
                c.require(
                    !a.u_grid.is_empty() && increasing(&a.u_grid),
                    "analysis.u_grid",
                    "must be nonempty and strictly increasing",
                );
                c.require(
                    !a.rho_grid.is_empty() && a.rho_grid[0] > 0.0 && increasing(&a.rho_grid),
                    "analysis.rho_grid",
                    "must be nonempty, positive and strictly increasing",
                );
                c.require(a.iso_budget >= 100, "analysis.iso_budget", "must be at least 100");
                c.require(a.distance_walkers >= 1000, "analysis.distance_walkers", "must be at least 1000");
                c.require(a.palm_samples >= 100, "analysis.palm_samples", "must be at least 100");
                c.require(a.palm_half_side > 0.0, "analysis.palm_half_side", "must be positive");
                c.require(a.conductance_sets >= 1, "analysis.conductance_sets", "must be at least 1");
                c.require(a.lens_beta > 1.0, "analysis.lens_beta", "must exceed 1");
            }
        }

        let t = &self.tolerances;
        for (key, v) in [
            ("tolerances.kernel_row_sum", t.kernel_row_sum),
            ("tolerances.detailed_balance", t.detailed_balance),
            ("tolerances.heat_slope", t.heat_slope),
            ("tolerances.distance_ratio", t.distance_ratio),
            ("tolerances.sigma2_relation", t.sigma2_relation),
            ("tolerances.isotropy", t.isotropy),
            ("tolerances.martingale_z", t.martingale_z),
        ] {
            c.require(v > 0.0 && v.is_finite(), key, "must be positive");
        }
        c.0
    }
}
