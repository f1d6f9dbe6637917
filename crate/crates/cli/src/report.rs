//! Per-claim summary and plot data from a finished (or partial) run.

use std::fmt::Write as _;
use std::path::Path;

use delwalk_core::pointproc::AssumptionReport;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::manifest::{FileProblem, Manifest, Status};
use crate::stage::Stage;
use crate::summary::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotRun,
}

impl Verdict {
    fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::NotRun => "NOT RUN",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Claim {
    pub name: String,
    pub stage: Stage,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: String,
    pub config_digest: String,
    pub claims: Vec<Claim>,
    pub stages_failed: Vec<Stage>,
    pub file_problems: Vec<FileProblem>,
    pub plots: Vec<String>,
}

impl Summary {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "experiment {} (config {})", self.experiment, &self.config_digest[..12.min(self.config_digest.len())]).unwrap();
        for c in &self.claims {
            writeln!(s, "{:<8} {:<32} [{}] {}", c.verdict.label(), c.name, c.stage, c.detail).unwrap();
        }
        for st in &self.stages_failed {
            writeln!(s, "stage {st} failed").unwrap();
        }
        for p in &self.file_problems {
            writeln!(s, "file {} ({}): {}", p.path, p.stage, p.problem).unwrap();
        }
        writeln!(s, "{} plot files", self.plots.len()).unwrap();
        s
    }
}

/// Stage records that loaded; `None` where the stage did not run or its record is
/// unusable.
struct Records {
    triangulate: Option<TriangulateSummary>,
    classify: Option<ClassifySummary>,
    walk: Option<WalkSummary>,
    corrector: Option<CorrectorSummary>,
    analysis: Option<AnalysisSummary>,
    assumptions: Option<AssumptionReport>,
    /// Stages that finished but whose record could not be read back.
    unreadable: Vec<(Stage, String)>,
}

fn load<T: DeserializeOwned>(
    m: &Manifest,
    dir: &Path,
    stage: Stage,
    file: &str,
    unreadable: &mut Vec<(Stage, String)>,
) -> Option<T> {
    let rec = m.record(stage)?;
    if rec.status != Status::Ok || !rec.files.iter().any(|f| f.path == file) {
        return None;
    }
    let parsed = std::fs::read_to_string(dir.join(file))
        .map_err(|e| e.to_string())
        .and_then(|text| serde_json::from_str(&text).map_err(|e| e.to_string()));
    match parsed {
        Ok(v) => Some(v),
        Err(e) => {
            unreadable.push((stage, format!("{file}: {e}")));
            None
        }
    }
}

fn claim(name: &str, stage: Stage, outcome: Option<(bool, String)>, unreadable: &[(Stage, String)]) -> Claim {
    let (verdict, detail) = match outcome {
        None => match unreadable.iter().find(|u| u.0 == stage) {
            Some((_, e)) => (Verdict::Fail, format!("record unreadable: {e}")),
            None => (Verdict::NotRun, String::new()),
        },
        Some((true, d)) => (Verdict::Pass, d),
        Some((false, d)) => (Verdict::Fail, d),
    };
    Claim {
        name: name.to_owned(),
        stage,
        verdict,
        detail,
    }
}

fn claims(r: &Records, tol: &Tolerances) -> Vec<Claim> {
    let mut out = Vec::new();
    let claim = |name: &str, stage: Stage, outcome: Option<(bool, String)>| claim(name, stage, outcome, &r.unreadable);
    out.push(claim(
        "empty circumcircle",
        Stage::Triangulate,
        r.triangulate.as_ref().map(|t| {
            (t.empty_circumcircle, format!("{} simplices, {} violations", t.simplices, t.violations))
        }),
    ));
    out.push(claim(
        "good-point degree bound",
        Stage::Classify,
        r.classify.as_ref().map(|c| {
            (
                (c.max_good_degree as f64) <= c.degree_cap,
                format!("max good degree {} <= cap {} over {} good points", c.max_good_degree, c.degree_cap, c.good_points),
            )
        }),
    ));
    out.push(claim(
        "good points connected",
        Stage::Classify,
        r.classify.as_ref().map(|c| (c.good_connected && c.good_points > 0, format!("{} good points", c.good_points))),
    ));
    out.push(claim(
        "volume growth stable",
        Stage::Classify,
        r.classify.as_ref().and_then(|c| c.volume_growth.as_ref()).map(|v| match v.ratio_spread {
            Some(spread) => (!v.drift, format!("spread of degree sum / L^d across radii {spread:.3} (limit 2)")),
            None => (false, "every cluster is empty".into()),
        }),
    ));
    out.push(claim(
        "kernel rows stochastic",
        Stage::Walk,
        r.walk.as_ref().map(|w| {
            (
                w.max_row_sum_error <= tol.kernel_row_sum,
                format!("max |row sum - 1| {:.2e} (tolerance {:.0e})", w.max_row_sum_error, tol.kernel_row_sum),
            )
        }),
    ));
    out.push(claim(
        "kernel detailed balance",
        Stage::Walk,
        r.walk.as_ref().map(|w| {
            (
                w.detailed_balance_residual <= tol.detailed_balance,
                format!("residual {:.2e} (tolerance {:.0e})", w.detailed_balance_residual, tol.detailed_balance),
            )
        }),
    ));
    out.push(claim(
        "harmonic coordinates",
        Stage::Corrector,
        r.corrector.as_ref().map(|c| {
            (
                c.max_defect <= c.tolerance && c.max_principle,
                format!(
                    "max defect {:.2e} (tolerance {:.0e}), maximum principle {}",
                    c.max_defect,
                    c.tolerance,
                    if c.max_principle { "holds" } else { "fails" }
                ),
            )
        }),
    ));
    out.push(claim(
        "corrector sublinear",
        Stage::Corrector,
        r.corrector.as_ref().map(|c| {
            let ratios: Vec<String> = c.profile.ratios.iter().map(|x| format!("{x:.4}")).collect();
            (c.ratios_decreasing, format!("max|chi|/n = {}", ratios.join(" ")))
        }),
    ));
    out.push(claim(
        "martingale increments centred",
        Stage::Corrector,
        r.corrector.as_ref().and_then(|c| c.martingale.as_ref()).map(|m| {
            (
                m.max_drift_z <= tol.martingale_z && m.drift_vertices > 0,
                format!(
                    "max |drift|/SE {:.2} over {} vertices (limit {}), {} of {} walks censored",
                    m.max_drift_z, m.drift_vertices, tol.martingale_z, m.censored, m.walks
                ),
            )
        }),
    ));
    let a = r.analysis.as_ref();
    out.push(claim(
        "conductance comparison",
        Stage::Analyze,
        a.map(|a| {
            let c = &a.conductance;
            (c.violations == 0, format!("{} sets, bound {}, {} violations", c.sets, c.bound, c.violations))
        }),
    ));
    out.push(claim(
        "heat-kernel decay",
        Stage::Analyze,
        a.map(|a| {
            let target = -(a.dim as f64) / 2.0;
            match a.heat.fit {
                Some(f) => (
                    (f.slope - target).abs() <= tol.heat_slope,
                    format!("log-log slope {:.4} (target {target} ± {})", f.slope, tol.heat_slope),
                ),
                None => (false, "no positive return probabilities to fit".into()),
            }
        }),
    ));
    out.push(claim(
        "expected distance",
        Stage::Analyze,
        a.map(|a| {
            (
                a.distance_ratio <= tol.distance_ratio,
                format!("max/min of E|Y_t - x|/sqrt(t) = {:.4} (limit {})", a.distance_ratio, tol.distance_ratio),
            )
        }),
    ));
    out.push(claim(
        "sigma2 relation",
        Stage::Analyze,
        a.map(|a| {
            let d = &a.diffusion;
            (
                d.relation_error <= tol.sigma2_relation,
                format!(
                    "sigma2_VSRW/sigma2_DTRW = {:.4} vs mean Palm degree {:.4}, relative gap {:.4} (limit {})",
                    d.ratio, d.mean_palm_degree, d.relation_error, tol.sigma2_relation
                ),
            )
        }),
    ));
    out.push(claim(
        "isotropy and gaussianity",
        Stage::Analyze,
        a.map(|a| {
            let d = &a.diffusion;
            (
                d.isotropy <= tol.isotropy && d.ks_statistic < d.ks_critical,
                format!(
                    "off-diagonal/diagonal {:.4} (limit {}), KS {:.4} vs critical {:.4}",
                    d.isotropy, tol.isotropy, d.ks_statistic, d.ks_critical
                ),
            )
        }),
    ));
    out.push(claim(
        "lens implication",
        Stage::Analyze,
        a.map(|a| {
            let l = &a.tail.lens;
            (
                l.violations.is_empty(),
                format!("{} checks, {} violations, {} skipped", l.checked, l.violations.len(), l.skipped_scale),
            )
        }),
    ));
    out
}

type Curve = Vec<(f64, f64)>;

fn plots(r: &Records) -> Vec<(&'static str, Curve)> {
    let mut out: Vec<(&'static str, Curve)> = Vec::new();
    if let Some(a) = &r.assumptions {
        out.push(("void_probability", a.void_curve.iter().map(|p| (p.x, p.value)).collect()));
        out.push(("palm_void_probability", a.palm_void_curve.iter().map(|p| (p.x, p.value)).collect()));
        out.push(("count_tail", a.tail_curve.iter().map(|p| (p.x, p.value)).collect()));
        out.push(("palm_exp_moment", a.exp_moment_curve.iter().map(|p| (p.x, p.value)).collect()));
    }
    if let Some(c) = &r.classify {
        if let Some(v) = &c.volume_growth {
            out.push(("volume_growth", v.entries.iter().map(|e| (e.l as f64, e.ratio)).collect()));
        }
        if let Some(h) = &c.hole_diameters {
            out.push(("hole_diameter", h.iter().map(|&(l, d)| (l as f64, d as f64)).collect()));
        }
    }
    if let Some(c) = &r.corrector {
        let p = &c.profile;
        out.push(("sublinearity", p.radii.iter().copied().zip(p.ratios.iter().copied()).collect()));
        out.push(("corrector_spread", p.radii.iter().copied().zip(p.spread.iter().copied()).collect()));
        if let Some(m) = &c.martingale {
            out.push(("martingale_mean_square", m.mean_square.iter().enumerate().map(|(n, &v)| (n as f64, v)).collect()));
        }
    }
    if let Some(a) = &r.analysis {
        out.push(("heat_kernel", a.heat.curve.clone()));
        out.push(("expected_distance", a.distance.points.iter().map(|p| (p.t, p.scaled)).collect()));
        out.push(("iso_profile_hat", a.iso.u_grid.iter().copied().zip(a.iso.phi_hat.iter().copied()).collect()));
        out.push(("iso_profile_tilde", a.iso.u_grid.iter().copied().zip(a.iso.phi_tilde.iter().copied()).collect()));
        out.push(("msd_dtrw", a.diffusion.msd_dtrw.clone()));
        out.push(("msd_vsrw", a.diffusion.msd_vsrw.clone()));
        out.push(("palm_degree_survival", a.tail.degree_survival.iter().map(|p| (p.x, p.survival)).collect()));
        out.push(("palm_distance_survival", a.tail.distance_survival.iter().map(|p| (p.x, p.survival)).collect()));
    }
    out
}

/// Two whitespace-separated numeric columns; non-finite points are dropped.
pub fn format_dat(curve: &[(f64, f64)]) -> String {
    let mut s = String::new();
    for &(x, y) in curve {
        if x.is_finite() && y.is_finite() {
            writeln!(s, "{x:?} {y:?}").unwrap();
        }
    }
    s
}

/// Writes `summary.json`, `summary.txt` and `plots/*.dat` next to the manifest.
pub fn report(manifest_path: &Path) -> Result<Summary, String> {
    let m = Manifest::load(manifest_path)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let mut unreadable = Vec::new();
    let u = &mut unreadable;
    let mut records = Records {
        triangulate: load(&m, dir, Stage::Triangulate, "triangulate.json", u),
        classify: load(&m, dir, Stage::Classify, "classify.json", u),
        walk: load(&m, dir, Stage::Walk, "walk.json", u),
        corrector: load(&m, dir, Stage::Corrector, "corrector.json", u),
        analysis: load(&m, dir, Stage::Analyze, "analysis.json", u),
        assumptions: load(&m, dir, Stage::Sample, "assumptions.json", u),
        unreadable: Vec::new(),
    };
    records.unreadable = unreadable;
    let plot_dir = dir.join("plots");
    std::fs::create_dir_all(&plot_dir).map_err(|e| format!("{}: {e}", plot_dir.display()))?;
    let mut names = Vec::new();
    for (name, curve) in plots(&records) {
        let file = format!("plots/{name}.dat");
        std::fs::write(dir.join(&file), format_dat(&curve)).map_err(|e| format!("{file}: {e}"))?;
        names.push(file);
    }
    let summary = Summary {
        experiment: m.experiment.clone(),
        config_digest: m.config_digest.clone(),
        claims: claims(&records, &m.config.tolerances),
        stages_failed: m.stages.iter().filter(|r| r.status == Status::Failed).map(|r| r.stage).collect(),
        file_problems: m.verify(dir),
        plots: names,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| e.to_string())? + "\n";
    std::fs::write(dir.join("summary.json"), json).map_err(|e| format!("summary.json: {e}"))?;
    std::fs::write(dir.join("summary.txt"), summary.to_text()).map_err(|e| format!("summary.txt: {e}"))?;
    Ok(summary)
}
