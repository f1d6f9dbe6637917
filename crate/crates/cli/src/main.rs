//! `delwalk`: runs point-process random-walk experiments from a TOML config.
//!
//! Exit codes: 0 success, 2 invalid config or arguments, 3 a stage failed.

mod config;
mod manifest;
mod pipeline;
mod report;
mod seeds;
mod stage;
mod summary;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Config, Loaded};
use manifest::{Manifest, Status, ARTIFACT_VERSION};
use stage::Stage;

const VALIDATION_FAILURE: u8 = 2;
const STAGE_FAILURE: u8 = 3;

#[derive(Parser)]
#[command(name = "delwalk", version, about = "Random walks on Delaunay triangulations of point processes")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `experiment.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `experiment.out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured stages in dependency order.
    Run {
        #[command(flatten)]
        common: Common,
        /// Restrict the run to these stages (repeatable).
        #[arg(long = "stage")]
        stages: Vec<String>,
    },
    /// Check a config without running anything.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long = "stage")]
        stages: Vec<String>,
    },
    /// Summarise a run: per-claim verdicts and plot data.
    Report {
        /// Path to manifest.json; defaults to the one in the config's output directory.
        manifest: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the point process.
    Sample(Common),
    /// Triangulate the sampled points.
    Triangulate(Common),
    /// Classify boxes and extract good points.
    Classify(Common),
    /// Build the induced kernel and record walk trajectories.
    Walk(Common),
    /// Solve harmonic coordinates and run the corrector diagnostics.
    Corrector(Common),
    /// Conductances, profiles, heat kernel, distances, diffusion and Palm audits.
    Analyze(Common),
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

/// Loads the config and applies the command-line overrides.
fn load(common: &Common) -> Result<Loaded, ExitCode> {
    let mut loaded = config::load(&common.config).map_err(|e| fail(VALIDATION_FAILURE, e))?;
    if let Some(seed) = common.seed {
        loaded.config.experiment.seed = seed;
    }
    if let Some(out) = &common.out {
        loaded.config.experiment.out = out.clone();
    }
    Ok(loaded)
}

fn select_stages(cfg: &Config, requested: &[String]) -> Result<Vec<Stage>, ExitCode> {
    let parsed: Result<Vec<Stage>, Vec<config::Problem>> = if requested.is_empty() {
        cfg.stages()
    } else {
        let mut out = Vec::new();
        let mut problems = Vec::new();
        for r in requested {
            match r.parse() {
                Ok(s) => out.push(s),
                Err(message) => problems.push(config::Problem {
                    key: "--stage".into(),
                    message,
                }),
            }
        }
        out.sort();
        out.dedup();
        if problems.is_empty() {
            Ok(out)
        } else {
            Err(problems)
        }
    };
    parsed.map_err(|problems| report_problems(&problems))
}

fn report_problems(problems: &[config::Problem]) -> ExitCode {
    eprintln!("config is invalid ({} problem{}):", problems.len(), if problems.len() == 1 { "" } else { "s" });
    for p in problems {
        eprintln!("  {p}");
    }
    ExitCode::from(VALIDATION_FAILURE)
}

/// Digest of everything in the config that affects results.
fn digest(cfg: &Config) -> String {
    let mut c = cfg.clone();
    c.experiment.out = PathBuf::new();
    c.experiment.stages = None;
    seeds::sha256_hex(&serde_json::to_vec(&c).expect("config serializes"))
}

fn execute(loaded: &Loaded, stages: &[Stage]) -> ExitCode {
    let problems = loaded.config.validate(stages);
    if !problems.is_empty() {
        return report_problems(&problems);
    }
    let cfg = &loaded.config;
    let dir = cfg.experiment.out.as_path();
    if let Err(e) = std::fs::create_dir_all(dir) {
        return fail(STAGE_FAILURE, format!("cannot create {}: {e}", dir.display()));
    }
    let digest = digest(cfg);
    let manifest_path = dir.join(manifest::FILE_NAME);
    // Records of earlier stages are kept when they came from the same config.
    let mut m = match Manifest::load(&manifest_path) {
        Ok(m) if m.config_digest == digest => m,
        _ => Manifest {
            artifact_version: ARTIFACT_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            experiment: cfg.experiment.name.clone(),
            config_digest: digest.clone(),
            master_seed: cfg.experiment.seed,
            seed_rule: seeds::RULE.to_owned(),
            config_text: String::new(),
            config: cfg.clone(),
            stages: Vec::new(),
        },
    };
    m.config_text = loaded.text.clone();
    m.config = cfg.clone();
    for &stage in stages {
        eprintln!("[{stage}] running");
        let rec = pipeline::run_stage(cfg, dir, &digest, stage);
        let failed = rec.status == Status::Failed;
        let msg = rec.error.clone();
        eprintln!("[{stage}] {} in {:.2}s, {} files", if failed { "failed" } else { "done" }, rec.seconds, rec.files.len());
        m.upsert(rec);
        if let Err(e) = m.save(&manifest_path) {
            return fail(STAGE_FAILURE, format!("cannot write {}: {e}", manifest_path.display()));
        }
        if failed {
            return fail(STAGE_FAILURE, format!("stage {stage}: {}", msg.unwrap_or_default()));
        }
    }
    println!("{}", manifest_path.display());
    ExitCode::SUCCESS
}

fn run_report(manifest: Option<PathBuf>, config: Option<PathBuf>, out: Option<PathBuf>) -> ExitCode {
    let path = match (manifest, out, config) {
        (Some(p), _, _) => p,
        (None, Some(out), _) => out.join(manifest::FILE_NAME),
        (None, None, Some(c)) => match config::load(&c) {
            Ok(l) => l.config.experiment.out.join(manifest::FILE_NAME),
            Err(e) => return fail(VALIDATION_FAILURE, e),
        },
        (None, None, None) => return fail(VALIDATION_FAILURE, "give a manifest path, --out or --config"),
    };
    match report::report(Path::new(&path)) {
        Ok(summary) => {
            print!("{}", summary.to_text());
            ExitCode::SUCCESS
        }
        Err(e) => fail(VALIDATION_FAILURE, e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(VALIDATION_FAILURE, format!("--threads: {e}"));
        }
    }
    let single = |common: &Common, stage: Stage| match load(common) {
        Ok(loaded) => execute(&loaded, &[stage]),
        Err(code) => code,
    };
    match cli.command {
        Command::Run { common, stages } => {
            let loaded = match load(&common) {
                Ok(l) => l,
                Err(code) => return code,
            };
            match select_stages(&loaded.config, &stages) {
                Ok(st) => execute(&loaded, &st),
                Err(code) => code,
            }
        }
        Command::Validate { common, stages } => {
            let loaded = match load(&common) {
                Ok(l) => l,
                Err(code) => return code,
            };
            let st = match select_stages(&loaded.config, &stages) {
                Ok(st) => st,
                Err(code) => return code,
            };
            let problems = loaded.config.validate(&st);
            if problems.is_empty() {
                println!("ok");
                ExitCode::SUCCESS
            } else {
                report_problems(&problems)
            }
        }
        Command::Report { manifest, config, out } => run_report(manifest, config, out),
        Command::Sample(c) => single(&c, Stage::Sample),
        Command::Triangulate(c) => single(&c, Stage::Triangulate),
        Command::Classify(c) => single(&c, Stage::Classify),
        Command::Walk(c) => single(&c, Stage::Walk),
        Command::Corrector(c) => single(&c, Stage::Corrector),
        Command::Analyze(c) => single(&c, Stage::Analyze),
    }
}
