//! Stage implementations. Each stage reads its inputs from the output directory, so any
//! stage can be rerun on its own once its predecessors have produced their files.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use delwalk_core::analysis::{
    conductance_pair, diffusion_report, expected_distance_curve, heat_kernel_curve, iso_profile_estimate,
    log_log_slope, tail_moment_report, DiffusionConfig, DEFAULT_MAX_TERMS,
};
use delwalk_core::corrector::{martingale_diagnostic, solve_harmonic_embedding, sublinearity_profile, write_embedding_csv};
use delwalk_core::geometry::{build_delaunay, read_graph, verify_empty_circumcircle, voronoi_cells_from_delaunay, write_graph, Verdict};
use delwalk_core::partition::{
    classify_boxes, cluster_components, degree_cap, good_points, hole_diameter_stats, volume_growth_report,
    write_field_csv,
};
use delwalk_core::pointproc::{assumption_report, palm_sample, read_point_set, sample, write_point_set, AssumptionConfig, PointSet, Window};
use delwalk_core::rng::derive_seed;
use delwalk_core::walker::{induced_kernel, run_dtrw, run_induced_continuous, run_induced_discrete, run_vsrw, write_walk_csv};
use delwalk_core::{Graph, InducedKernel};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::Config;
use crate::manifest::{read_good_points, FileRecord, Schema, StageRecord, Status};
use crate::seeds::{self, sha256_hex};
use crate::stage::Stage;
use crate::summary::*;

#[derive(Debug, thiserror::Error)]
pub enum StageError {
    #[error("missing input {0}; run the stage that produces it first")]
    MissingInput(PathBuf),
    #[error("{path}: {message}")]
    BadInput { path: PathBuf, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] delwalk_core::Error),
    #[error("{0}")]
    Other(String),
}

macro_rules! core_error {
    ($($t:ty),*) => {$(
        impl From<$t> for StageError {
            fn from(e: $t) -> Self {
                StageError::Core(e.into())
            }
        }
    )*};
}

core_error!(
    delwalk_core::error::PointProcError,
    delwalk_core::error::GeometryError,
    delwalk_core::error::PartitionError,
    delwalk_core::error::WalkError,
    delwalk_core::error::CorrectorError,
    delwalk_core::error::AnalysisError
);

/// State shared by the stages of one invocation.
pub struct Ctx<'a> {
    pub cfg: &'a Config,
    pub dir: &'a Path,
    pub digest: &'a str,
    files: Vec<FileRecord>,
}

impl<'a> Ctx<'a> {
    pub fn new(cfg: &'a Config, dir: &'a Path, digest: &'a str) -> Self {
        Self {
            cfg,
            dir,
            digest,
            files: Vec::new(),
        }
    }

    fn seed(&self, stage: Stage, rep: u64) -> u64 {
        seeds::derive(self.cfg.experiment.seed, stage.name(), rep)
    }

    fn write(
        &mut self,
        name: &str,
        schema: Schema,
        body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
    ) -> Result<(), StageError> {
        let path = self.dir.join(name);
        let io = |source| StageError::Io {
            path: path.clone(),
            source,
        };
        let mut buf = Vec::new();
        body(&mut buf).map_err(io)?;
        std::fs::write(&path, &buf).map_err(io)?;
        self.files.push(FileRecord {
            path: name.to_owned(),
            schema,
            sha256: sha256_hex(&buf),
            bytes: buf.len() as u64,
        });
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, schema: Schema, value: &T) -> Result<(), StageError> {
        self.write(name, schema, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")
        })
    }

    fn open(&self, name: &str) -> Result<BufReader<File>, StageError> {
        let path = self.dir.join(name);
        File::open(&path).map(BufReader::new).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => StageError::MissingInput(path),
            _ => StageError::Io { path, source: e },
        })
    }

    fn bad(&self, name: &str, message: impl std::fmt::Display) -> StageError {
        StageError::BadInput {
            path: self.dir.join(name),
            message: message.to_string(),
        }
    }

    fn read_json<T: DeserializeOwned>(&self, name: &str) -> Result<T, StageError> {
        serde_json::from_reader(self.open(name)?).map_err(|e| self.bad(name, e))
    }

    fn points(&self) -> Result<PointSet, StageError> {
        read_point_set(self.open("points.txt")?).map_err(|e| self.bad("points.txt", e))
    }

    fn graph(&self) -> Result<Graph, StageError> {
        read_graph(self.open("graph.txt")?).map_err(|e| self.bad("graph.txt", e))
    }

    fn good_points(&self, n: usize) -> Result<(Vec<bool>, Vec<bool>), StageError> {
        let (good, filled) = read_good_points(self.open("good_points.csv")?).map_err(|e| self.bad("good_points.csv", e))?;
        if good.len() != n {
            return Err(self.bad("good_points.csv", format!("{} rows for a graph of {n} vertices", good.len())));
        }
        Ok((good, filled))
    }
}

/// Runs one stage and returns its manifest record; errors are recorded, not raised.
pub fn run_stage(cfg: &Config, dir: &Path, digest: &str, stage: Stage) -> StageRecord {
    let mut ctx = Ctx::new(cfg, dir, digest);
    let started = Instant::now();
    let result = match stage {
        Stage::Sample => sample_stage(&mut ctx),
        Stage::Triangulate => triangulate_stage(&mut ctx),
        Stage::Classify => classify_stage(&mut ctx),
        Stage::Walk => walk_stage(&mut ctx),
        Stage::Corrector => corrector_stage(&mut ctx),
        Stage::Analyze => analyze_stage(&mut ctx),
    };
    StageRecord {
        stage,
        status: if result.is_ok() { Status::Ok } else { Status::Failed },
        seconds: started.elapsed().as_secs_f64(),
        error: result.err().map(|e| e.to_string()),
        files: ctx.files,
    }
}

fn missing(section: &str) -> StageError {
    StageError::Other(format!("config has no [{section}] section"))
}

fn sample_stage(ctx: &mut Ctx) -> Result<(), StageError> {
    let cfg = ctx.cfg;
    let spec = cfg.process_spec().ok_or_else(|| missing("process"))?;
    let window = cfg.window().ok_or_else(|| missing("window"))?;
    let seed = ctx.seed(Stage::Sample, 0);
    let ps = sample(&spec, &window, seed)?;
    ctx.write("points.txt", Schema::PointSet, |w| write_point_set(&ps, w))?;
    if let Some(a) = &cfg.assumptions {
        let ac = AssumptionConfig::new(a.l_grid.clone(), a.rho_grid.clone(), a.samples, ctx.seed(Stage::Sample, 1));
        let rep = assumption_report(&spec, window.dim(), &ac)?;
        ctx.write_json("assumptions.json", Schema::AssumptionsJson, &rep)?;
    }
    let summary = SampleSummary {
        config_digest: ctx.digest.to_owned(),
        seed,
        process: spec,
        window,
        points: ps.len(),
        warning: ps.warning().map(str::to_owned),
    };
    ctx.write_json("sample.json", Schema::SampleJson, &summary)
}

fn triangulate_stage(ctx: &mut Ctx) -> Result<(), StageError> {
    let ps = ctx.points()?;
    let dt = build_delaunay(&ps)?;
    let violations = match verify_empty_circumcircle(&dt) {
        Verdict::Pass => 0,
        Verdict::Fail(v) => v.len(),
    };
    let g = dt.graph();
    ctx.write("graph.txt", Schema::Graph, |w| write_graph(g, w))?;
    let degrees = (0..g.len()).map(|v| g.degree(v));
    let summary = TriangulateSummary {
        config_digest: ctx.digest.to_owned(),
        vertices: g.len(),
        edges: g.edge_count(),
        simplices: dt.simplex_count(),
        tainted: g.tainted().iter().filter(|&&t| t).count(),
        empty_circumcircle: violations == 0,
        violations,
        mean_degree: if g.is_empty() { 0.0 } else { 2.0 * g.edge_count() as f64 / g.len() as f64 },
        max_degree: degrees.max().unwrap_or(0),
    };
    ctx.write_json("triangulate.json", Schema::TriangulateJson, &summary)
}

fn classify_stage(ctx: &mut Ctx) -> Result<(), StageError> {
    let b = ctx.cfg.boxes.as_ref().ok_or_else(|| missing("boxes"))?;
    let ps = ctx.points()?;
    let g = ctx.graph()?;
    // Cells need the simplices, which the graph file does not keep.
    let dt = build_delaunay(&ps)?;
    if dt.graph() != &g {
        return Err(ctx.bad("graph.txt", "does not match the triangulation of points.txt"));
    }
    let cells = voronoi_cells_from_delaunay(&dt);
    let field = classify_boxes(&ps, b.s, b.alpha)?;
    let max_l = field
        .max_radius()
        .filter(|&l| l >= 1)
        .ok_or_else(|| StageError::Other("the window holds no box grid around the origin".into()))?;
    let ls = if b.l_grid.is_empty() { vec![max_l] } else { b.l_grid.clone() };
    let decomps = ls.iter().map(|&l| cluster_components(&field, l)).collect::<Result<Vec<_>, _>>()?;
    let points = decomps.iter().map(|d| good_points(d, &ps, &cells)).collect::<Result<Vec<_>, _>>()?;
    let (primary, gp) = (decomps.last().unwrap(), points.last().unwrap());

    ctx.write("field.csv", Schema::FieldCsv, |w| write_field_csv(&field, Some(primary), w))?;
    ctx.write("good_points.csv", Schema::GoodPointsCsv, |w| {
        writeln!(w, "vertex,good,filled")?;
        for v in 0..gp.good.len() {
            writeln!(w, "{v},{},{}", u8::from(gp.good[v]), u8::from(gp.filled[v]))?;
        }
        Ok(())
    })?;

    let (volume_growth, hole_diameters) = if decomps.len() >= 2 {
        let levels: Vec<_> = decomps.iter().zip(&points).collect();
        (Some(volume_growth_report(&levels, &g)?), Some(hole_diameter_stats(&decomps)?))
    } else {
        (None, None)
    };
    let summary = ClassifySummary {
        config_digest: ctx.digest.to_owned(),
        s: b.s,
        alpha: b.alpha,
        box_side: field.k(),
        degree_cap: degree_cap(field.dim(), b.s, b.alpha),
        boxes: field.len(),
        nice_fraction: field.nice_fraction(),
        good_fraction: field.good_fraction(),
        primary_l: primary.l(),
        cluster_boxes: primary.cluster_size(),
        filled_boxes: primary.filled_size(),
        holes: primary.holes().len(),
        enclosed_holes: primary.enclosed_holes().count(),
        max_hole_diameter: primary.max_hole_diameter(),
        good_points: gp.good_count(),
        filled_points: gp.filled_count(),
        max_good_degree: gp.good_indices().iter().map(|&v| g.degree(v)).max().unwrap_or(0),
        good_connected: g.is_connected_on(&gp.good),
        volume_growth,
        hole_diameters,
    };
    ctx.write_json("classify.json", Schema::ClassifyJson, &summary)
}

/// Filled subgraph, its good mask and parent ids, and the good vertex nearest the origin
/// (subgraph id).
struct Induced {
    sub: Graph,
    good: Vec<bool>,
    parent: Vec<u32>,
    start: usize,
}

fn induced(ctx: &Ctx, g: &Graph) -> Result<Induced, StageError> {
    let (good, filled) = ctx.good_points(g.len())?;
    if good.iter().zip(&filled).any(|(&gd, &f)| gd && !f) {
        return Err(ctx.bad("good_points.csv", "a good vertex is not filled"));
    }
    let (sub, parent) = g.induced_subgraph(&filled);
    let good: Vec<bool> = parent.iter().map(|&p| good[p as usize]).collect();
    let norm = |v: usize| sub.position(v).iter().map(|c| c * c).sum::<f64>();
    let start = (0..sub.len())
        .filter(|&v| good[v])
        .min_by(|&a, &b| norm(a).total_cmp(&norm(b)).then(a.cmp(&b)))
        .ok_or_else(|| StageError::Other("no good points".into()))?;
    Ok(Induced {
        sub,
        good,
        parent,
        start,
    })
}

fn write_kernel(ctx: &mut Ctx, kernel: &InducedKernel, parent: &[u32]) -> Result<(), StageError> {
    ctx.write("kernel.csv", Schema::KernelCsv, |w| {
        writeln!(w, "x,y,p")?;
        for (x, y, p) in kernel.triplets() {
            writeln!(w, "{},{},{p}", parent[x], parent[y])?;
        }
        Ok(())
    })
}

fn walk_stage(ctx: &mut Ctx) -> Result<(), StageError> {
    let wc = ctx.cfg.walks.as_ref().ok_or_else(|| missing("walks"))?;
    let g = ctx.graph()?;
    let ind = induced(ctx, &g)?;
    let kernel = induced_kernel(&ind.sub, &ind.good, None)?;
    write_kernel(ctx, &kernel, &ind.parent)?;

    let start = ind.parent[ind.start] as usize;
    let n = wc.record_steps;
    let horizon = *wc.times.last().unwrap();
    let seed = |rep| ctx.seed(Stage::Walk, rep);
    let paths = [
        ("walk_dtrw.csv", run_dtrw(&g, start, n, seed(0))?),
        ("walk_vsrw.csv", run_vsrw(&g, start, horizon, seed(1))?),
        (
            "walk_induced_discrete.csv",
            run_induced_discrete(&ind.sub, &ind.good, ind.start, n, seed(2))?.relabel(&ind.parent),
        ),
        (
            "walk_induced_continuous.csv",
            run_induced_continuous(&ind.sub, &ind.good, ind.start, horizon, seed(3))?.relabel(&ind.parent),
        ),
    ];
    let mut walks = Vec::new();
    for (name, path) in &paths {
        ctx.write(name, Schema::WalkCsv, |w| write_walk_csv(path, w))?;
        walks.push(WalkRecord {
            kind: path.kind(),
            file: (*name).to_owned(),
            seed: path.seed(),
            jumps: path.jumps(),
        });
    }
    let summary = WalkSummary {
        config_digest: ctx.digest.to_owned(),
        start,
        filled_vertices: ind.sub.len(),
        good_vertices: ind.good.iter().filter(|&&x| x).count(),
        kernel_entries: kernel.triplets().count(),
        max_row_sum_error: kernel.max_row_sum_error(),
        detailed_balance_residual: kernel.detailed_balance_residual(),
        solver_residual: kernel.solver_residual(),
        walks,
    };
    ctx.write_json("walk.json", Schema::WalkJson, &summary)
}

fn corrector_stage(ctx: &mut Ctx) -> Result<(), StageError> {
    let cc = ctx.cfg.corrector.as_ref().ok_or_else(|| missing("corrector"))?;
    let g = ctx.graph()?;
    let r = *cc.radii.last().unwrap();
    let region: Vec<bool> = (0..g.len())
        .map(|v| !g.is_tainted(v) && g.position(v).iter().all(|c| c.abs() <= r))
        .collect();
    let emb = solve_harmonic_embedding(&g, &region, cc.tolerance)?;
    ctx.write("embedding.csv", Schema::EmbeddingCsv, |w| write_embedding_csv(&emb, w))?;

    // Good vertices are used when the classify stage has run.
    let good = match ctx.good_points(g.len()) {
        Ok((good, _)) => Some(good),
        Err(StageError::MissingInput(_)) => None,
        Err(e) => return Err(e),
    };
    let eps_delta: Vec<(f64, f64)> = cc.eps_delta.iter().map(|p| (p[0], p[1])).collect();
    let profile = sublinearity_profile(&g, &emb, &cc.radii, good.as_deref(), &eps_delta, &cc.betas)?;
    let defects = emb.harmonic_defects(&g)?;
    let martingale = if cc.martingale_steps > 0 {
        let x0 = emb
            .interior_vertices()
            .min_by(|&a, &b| {
                let n = |v: usize| g.position(v).iter().map(|c| c * c).sum::<f64>();
                n(a).total_cmp(&n(b)).then(a.cmp(&b))
            })
            .ok_or_else(|| StageError::Other("corrector region has no interior vertex".into()))?;
        let seed = ctx.seed(Stage::Corrector, 0);
        let rep = martingale_diagnostic(&g, &emb, x0, cc.martingale_steps, cc.martingale_walks, cc.min_visits, seed)?;
        let max_drift_z = rep
            .drift
            .iter()
            .flat_map(|e| e.mean_increment.iter().zip(&e.std_error).map(|(m, s)| if *s > 0.0 { m.abs() / s } else { 0.0 }))
            .fold(0.0, f64::max);
        Some(MartingaleSummary {
            start: x0,
            steps: cc.martingale_steps,
            walks: rep.walks,
            censored: rep.censored,
            m0: rep.m0,
            mean_square: rep.mean_square,
            fit: rep.fit,
            ratio_relative_change: rep.ratio_relative_change,
            drift_vertices: rep.drift.len(),
            max_drift_z,
        })
    } else {
        None
    };
    let summary = CorrectorSummary {
        config_digest: ctx.digest.to_owned(),
        region_radius: r,
        interior: emb.interior_vertices().count(),
        boundary: emb.boundary_vertices().count(),
        tolerance: cc.tolerance,
        residual: emb.residual(),
        iterations: emb.solver_iterations(),
        max_defect: defects.iter().map(|d| d.1).fold(0.0, f64::max),
        max_principle: emb.max_principle_holds(),
        ratios_decreasing: profile.ratios_strictly_decreasing(),
        profile,
        martingale,
    };
    ctx.write_json("corrector.json", Schema::CorrectorJson, &summary)
}

/// Connected sets grown breadth-first along kernel edges from random good vertices,
/// with sizes uniform in `1..=max_size`.
fn random_sets(kernel: &InducedKernel, count: usize, seed: u64) -> Vec<Vec<usize>> {
    let goods: Vec<usize> = (0..kernel.len()).filter(|&v| kernel.is_good(v)).collect();
    let max_size = (goods.len() / 2).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_set = vec![false; kernel.len()];
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let size = rng.random_range(1..=max_size);
        let mut set = vec![goods[rng.random_range(0..goods.len())]];
        in_set[set[0]] = true;
        let mut head = 0;
        while head < set.len() && set.len() < size {
            let mut nb: Vec<usize> = kernel.row(set[head]).unwrap().iter().map(|e| e.0 as usize).collect();
            nb.shuffle(&mut rng);
            for y in nb {
                if !in_set[y] && set.len() < size {
                    in_set[y] = true;
                    set.push(y);
                }
            }
            head += 1;
        }
        for &v in &set {
            in_set[v] = false;
        }
        out.push(set);
    }
    out
}

fn analyze_stage(ctx: &mut Ctx) -> Result<(), StageError> {
    let cfg = ctx.cfg;
    let ac = cfg.analysis.as_ref().ok_or_else(|| missing("analysis"))?;
    let wc = cfg.walks.as_ref().ok_or_else(|| missing("walks"))?;
    let spec = cfg.process_spec().ok_or_else(|| missing("process"))?;
    let classify: ClassifySummary = ctx.read_json("classify.json")?;
    let g = ctx.graph()?;
    let ind = induced(ctx, &g)?;
    // Recomputed from the serialized graph and masks; identical to kernel.csv.
    let kernel = induced_kernel(&ind.sub, &ind.good, None)?;
    let seed = |rep| ctx.seed(Stage::Analyze, rep);

    let bound = classify.degree_cap;
    let mut records = Vec::with_capacity(ac.conductance_sets);
    for (id, set) in random_sets(&kernel, ac.conductance_sets, seed(0)).iter().enumerate() {
        let rec = conductance_pair(&ind.sub, &kernel, set, id, bound)?;
        records.push(rec);
    }
    let conductance = ConductanceSummary {
        sets: records.len(),
        bound,
        violations: records.iter().filter(|r| !r.comparison_holds).count(),
        min_margin: records
            .iter()
            .filter(|r| r.i_tilde > 0.0)
            .map(|r| r.i_hat * bound / r.i_tilde)
            .min_by(f64::total_cmp),
        records,
    };

    let iso = iso_profile_estimate(&ind.sub, &kernel, &ac.u_grid, ac.iso_budget, classify.primary_l as f64, seed(1))?;

    let t_lo = ac.t_grid.iter().copied().find(|&t| t > 0.0).unwrap();
    let t_hi = *ac.t_grid.last().unwrap();
    let curve = heat_kernel_curve(&kernel, ind.start, &ac.t_grid, DEFAULT_MAX_TERMS)?;
    let heat = HeatSummary {
        start: ind.parent[ind.start] as usize,
        fit: log_log_slope(&curve, t_lo, t_hi),
        curve,
    };
    let mut distance = expected_distance_curve(&ind.sub, &kernel, ind.start, &ac.t_grid, ac.distance_walkers, seed(2))?;
    distance.start = ind.parent[ind.start] as usize;
    let distance_ratio = distance.band_ratio(t_lo, t_hi);

    let palm_window = Window::centered(g.dim(), ac.palm_half_side)?;
    let palm_seed = seed(3);
    let palm = (0..ac.palm_samples as u64)
        .map(|i| palm_sample(&spec, &palm_window, derive_seed(palm_seed, i)))
        .collect::<Result<Vec<_>, _>>()?;
    let dcfg = DiffusionConfig {
        steps: wc.steps.clone(),
        times: wc.times.clone(),
        walkers: wc.walkers,
        start_half_side: wc.start_half_side,
        seed: seed(4),
    };
    let diffusion = diffusion_report(&g, &palm, &dcfg)?;
    let tail = tail_moment_report(&palm, &ac.rho_grid, ac.lens_beta, ac.lens_n_max)?;

    let summary = AnalysisSummary {
        config_digest: ctx.digest.to_owned(),
        dim: g.dim(),
        start: ind.parent[ind.start] as usize,
        conductance,
        iso,
        heat,
        distance,
        distance_ratio,
        diffusion,
        tail,
    };
    ctx.write_json("analysis.json", Schema::AnalysisJson, &summary)
}
