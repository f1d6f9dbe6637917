//! Run manifest: what ran, with which config, and which files it produced.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use delwalk_core::corrector::read_embedding_csv;
use delwalk_core::geometry::read_graph;
use delwalk_core::partition::read_field_csv;
use delwalk_core::pointproc::{read_point_set, AssumptionReport};
use delwalk_core::walker::{read_kernel_csv, read_walk_csv};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::seeds::sha256_hex;
use crate::stage::Stage;
use crate::summary::{AnalysisSummary, ClassifySummary, CorrectorSummary, SampleSummary, TriangulateSummary, WalkSummary};

pub const ARTIFACT_VERSION: u32 = 1;
pub const FILE_NAME: &str = "manifest.json";

/// File formats a manifest entry can declare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schema {
    PointSet,
    Graph,
    FieldCsv,
    GoodPointsCsv,
    KernelCsv,
    WalkCsv,
    EmbeddingCsv,
    SampleJson,
    AssumptionsJson,
    TriangulateJson,
    ClassifyJson,
    WalkJson,
    CorrectorJson,
    AnalysisJson,
}

fn json<T: DeserializeOwned>(path: &Path) -> Result<(), String> {
    let f = File::open(path).map_err(|e| e.to_string())?;
    serde_json::from_reader::<_, T>(BufReader::new(f)).map(|_| ()).map_err(|e| e.to_string())
}

impl Schema {
    /// Parses `path` under this schema.
    pub fn check(self, path: &Path) -> Result<(), String> {
        let open = || File::open(path).map(BufReader::new).map_err(|e| e.to_string());
        let s = |e: &dyn std::fmt::Display| e.to_string();
        match self {
            Schema::PointSet => read_point_set(open()?).map(|_| ()).map_err(|e| s(&e)),
            Schema::Graph => read_graph(open()?).map(|_| ()).map_err(|e| s(&e)),
            Schema::FieldCsv => read_field_csv(open()?).map(|_| ()).map_err(|e| s(&e)),
            Schema::GoodPointsCsv => read_good_points(open()?).map(|_| ()),
            Schema::KernelCsv => read_kernel_csv(open()?).map(|_| ()).map_err(|e| s(&e)),
            Schema::WalkCsv => read_walk_csv(open()?).map(|_| ()).map_err(|e| s(&e)),
            Schema::EmbeddingCsv => read_embedding_csv(open()?).map(|_| ()).map_err(|e| s(&e)),
            Schema::SampleJson => json::<SampleSummary>(path),
            Schema::AssumptionsJson => json::<AssumptionReport>(path),
            Schema::TriangulateJson => json::<TriangulateSummary>(path),
            Schema::ClassifyJson => json::<ClassifySummary>(path),
            Schema::WalkJson => json::<WalkSummary>(path),
            Schema::CorrectorJson => json::<CorrectorSummary>(path),
            Schema::AnalysisJson => json::<AnalysisSummary>(path),
        }
    }
}

/// `vertex,good,filled` rows with 0/1 flags, one per vertex in order.
pub fn read_good_points<R: std::io::BufRead>(input: R) -> Result<(Vec<bool>, Vec<bool>), String> {
    let mut good = Vec::new();
    let mut filled = Vec::new();
    for (k, line) in input.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if k == 0 {
            if line != "vertex,good,filled" {
                return Err("expected header vertex,good,filled".into());
            }
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let flag = |x: &str| match x {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(format!("line {}: bad flag `{x}`", k + 1)),
        };
        if f.len() != 3 || f[0].parse::<usize>().ok() != Some(good.len()) {
            return Err(format!("line {}: malformed row `{line}`", k + 1));
        }
        good.push(flag(f[1])?);
        filled.push(flag(f[2])?);
    }
    Ok((good, filled))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the output directory.
    pub path: String,
    pub schema: Schema,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: Status,
    pub seconds: f64,
    pub error: Option<String>,
    /// Files written by the stage; on failure, whatever was written before it stopped.
    pub files: Vec<FileRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact_version: u32,
    pub tool_version: String,
    pub experiment: String,
    /// SHA-256 of the effective config (output directory excluded).
    pub config_digest: String,
    pub master_seed: u64,
    pub seed_rule: String,
    /// The config file exactly as read.
    pub config_text: String,
    /// The effective config after command-line overrides.
    pub config: Config,
    pub stages: Vec<StageRecord>,
}

/// A listed file that is absent, altered or unparsable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileProblem {
    pub stage: Stage,
    pub path: String,
    pub problem: String,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest, String> {
        let f = File::open(path).map_err(|e| format!("cannot open {}: {e}", path.display()))?;
        let m: Manifest =
            serde_json::from_reader(BufReader::new(f)).map_err(|e| format!("{}: {e}", path.display()))?;
        if m.artifact_version != ARTIFACT_VERSION {
            return Err(format!(
                "{}: artifact version {} is not supported (expected {ARTIFACT_VERSION})",
                path.display(),
                m.artifact_version
            ));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)
    }

    pub fn record(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|r| r.stage == stage)
    }

    /// Replaces the record of the same stage, keeping records in pipeline order.
    pub fn upsert(&mut self, rec: StageRecord) {
        self.stages.retain(|r| r.stage != rec.stage);
        self.stages.push(rec);
        self.stages.sort_by_key(|r| r.stage);
    }

    /// Checks every listed file: present, unchanged and parsable.
    pub fn verify(&self, dir: &Path) -> Vec<FileProblem> {
        let mut out = Vec::new();
        for rec in &self.stages {
            for f in &rec.files {
                let path: PathBuf = dir.join(&f.path);
                let problem = match std::fs::read(&path) {
                    Err(e) => Some(format!("missing: {e}")),
                    Ok(bytes) if sha256_hex(&bytes) != f.sha256 => Some("content changed since the run".into()),
                    Ok(_) => f.schema.check(&path).err().map(|e| format!("does not parse: {e}")),
                };
                if let Some(problem) = problem {
                    out.push(FileProblem {
                        stage: rec.stage,
                        path: f.path.clone(),
                        problem,
                    });
                }
            }
        }
        out
    }
}
