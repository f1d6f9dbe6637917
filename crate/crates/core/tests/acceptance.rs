//! Acceptance gate: runs each criterion at its stated tolerance, prints one line per
//! criterion and exits nonzero if any fails. Pass criterion numbers as arguments to run
//! a subset.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use delwalk_core::analysis::{
    conductance_pair, diffusion_report, expected_distance_curve, heat_kernel_curve, log_log_slope, tail_moment_report,
    DiffusionConfig, DiffusionReport, DEFAULT_MAX_TERMS,
};
use delwalk_core::corrector::{solve_harmonic_embedding, sublinearity_profile};
use delwalk_core::geometry::{build_delaunay, verify_empty_circumcircle, voronoi_cells_from_delaunay, Verdict};
use delwalk_core::partition::{classify_boxes, cluster_components, degree_cap, good_points, sample_poisson_field};
use delwalk_core::pointproc::{palm_sample, sample_poisson, PointSet, ProcessSpec, Window};
use delwalk_core::walker::{induced_kernel, InducedKernel};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{central_good, dense_induced_kernel, good_instance, holed_instance, poisson_graph, GoodInstance};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn delaunay_oracle() -> Outcome {
    let mut violations = 0;
    let mut euler_mismatch = 0;
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coords: Vec<f64> = (0..80).map(|_| rng.random::<f64>()).collect();
        let ps = PointSet::from_coords(coords, Window::cube(2, 0.0, 1.0).unwrap(), None).unwrap();
        let dt = build_delaunay(&ps).unwrap();
        if let Verdict::Fail(bad) = verify_empty_circumcircle(&dt) {
            violations += bad.len();
        }
        let hull = (0..dt.len()).filter(|&v| dt.on_hull(v)).count();
        if dt.simplex_count() != 2 * dt.len() - 2 - hull {
            euler_mismatch += 1;
        }
    }
    outcome(
        violations == 0 && euler_mismatch == 0,
        format!("100 sets of 40 points: {violations} empty-circle violations, {euler_mismatch} triangle-count mismatches"),
    )
}

fn degree_bound() -> Outcome {
    let (s, alpha) = (10.0, 2.0);
    let cap = degree_cap(2, s, alpha);
    let mut worst = 0usize;
    let mut good_total = 0usize;
    let mut over_cap = 0usize;
    for seed in 0..100u64 {
        let ps = sample_poisson(1.0, &Window::centered(2, 125.0).unwrap(), 1000 + seed).unwrap();
        let dt = build_delaunay(&ps).unwrap();
        let cells = voronoi_cells_from_delaunay(&dt);
        let field = classify_boxes(&ps, s, alpha).unwrap();
        let decomp = cluster_components(&field, field.max_radius().unwrap()).unwrap();
        let gp = good_points(&decomp, &ps, &cells).unwrap();
        for v in gp.good_indices() {
            let deg = dt.graph().degree(v);
            worst = worst.max(deg);
            over_cap += usize::from(deg as f64 > cap);
        }
        good_total += gp.good_count();
    }
    outcome(
        over_cap == 0 && good_total > 0,
        format!(
            "{good_total} good points over 100 realizations: max degree {worst} (cap {cap}; realistic bound 20 {})",
            if worst <= 20 { "met" } else { "exceeded" }
        ),
    )
}

fn kernel_exactness() -> Outcome {
    let (mut row_err, mut balance, mut oracle_err) = (0.0f64, 0.0f64, 0.0f64);
    let mut max_vertices = 0;
    let mut holes_seen = 0;
    for seed in 0..50u64 {
        let (g, good) = holed_instance(12.0, 3, 500 + seed);
        max_vertices = max_vertices.max(g.len());
        holes_seen += usize::from(good.iter().any(|&b| !b));
        let k = induced_kernel(&g, &good, None).unwrap();
        row_err = row_err.max(k.max_row_sum_error());
        balance = balance.max(k.detailed_balance_residual());
        let dense = dense_induced_kernel(&g, &good);
        for x in (0..g.len()).filter(|&x| good[x]) {
            for y in 0..g.len() {
                oracle_err = oracle_err.max((k.prob(x, y) - dense[(x, y)]).abs());
            }
        }
    }
    outcome(
        row_err <= 1e-10 && balance < 1e-8 && oracle_err <= 1e-8 && holes_seen == 50 && max_vertices <= 200,
        format!(
            "50 instances (≤{max_vertices} vertices, {holes_seen} with holes): row-sum error {row_err:.1e}, detailed balance {balance:.1e}, oracle deviation {oracle_err:.1e}"
        ),
    )
}

/// Filled-point graph on a window of side 300 with s = 3, α = 2.4, and its kernel.
struct HeatFixture {
    inst: GoodInstance,
    kernel: InducedKernel,
    start: usize,
    cap: f64,
}

fn heat_fixture() -> &'static HeatFixture {
    static F: std::sync::OnceLock<HeatFixture> = std::sync::OnceLock::new();
    F.get_or_init(|| {
        let (s, alpha) = (3.0, 2.4);
        let inst = good_instance(150.0, s, alpha, 1);
        let kernel = induced_kernel(&inst.graph, &inst.good, None).unwrap();
        let start = central_good(&inst.graph, &inst.good);
        HeatFixture {
            inst,
            kernel,
            start,
            cap: degree_cap(2, s, alpha),
        }
    })
}

fn conductance_comparison() -> Outcome {
    let f = heat_fixture();
    let (g, good) = (&f.inst.graph, &f.inst.good);
    let goods: Vec<usize> = (0..g.len()).filter(|&v| good[v]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = 0;
    let mut out_of_range = 0;
    let mut in_set = vec![false; g.len()];
    for id in 0..1000 {
        // Connected sets grown by BFS from a random good vertex, of random size.
        let size = rng.random_range(1..=2000);
        let mut set = vec![goods[rng.random_range(0..goods.len())]];
        in_set[set[0]] = true;
        let mut head = 0;
        while head < set.len() && set.len() < size {
            let mut nb: Vec<usize> = f.kernel.row(set[head]).unwrap().iter().map(|e| e.0 as usize).collect();
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
        let rec = conductance_pair(g, &f.kernel, &set, id, f.cap).unwrap();
        violations += usize::from(!rec.comparison_holds);
        out_of_range += usize::from(!(0.0..=1.0).contains(&rec.i_hat) || !(0.0..=1.0).contains(&rec.i_tilde));
    }
    outcome(
        violations == 0 && out_of_range == 0,
        format!(
            "1000 sets on {} good vertices ({} enclosed holes), D = {}: {violations} violations, {out_of_range} out of [0,1]",
            goods.len(),
            f.inst.enclosed_holes,
            f.cap
        ),
    )
}

fn time_grid() -> Vec<f64> {
    (0..=8).map(|k| 64.0 * 2f64.powf(k as f64 / 2.0)).collect()
}

fn heat_kernel_decay() -> Outcome {
    let f = heat_fixture();
    let curve = heat_kernel_curve(&f.kernel, f.start, &time_grid(), DEFAULT_MAX_TERMS).unwrap();
    let fit = log_log_slope(&curve, 64.0, 1024.0).unwrap();
    outcome(
        (fit.slope + 1.0).abs() <= 0.15,
        format!("slope {:.4} (R² {:.4}) over t in [64, 1024], target -1 ± 0.15", fit.slope, fit.r_squared),
    )
}

fn expected_distance() -> Outcome {
    let f = heat_fixture();
    let curve = expected_distance_curve(&f.inst.graph, &f.kernel, f.start, &time_grid(), 10_000, 6).unwrap();
    let ratio = curve.band_ratio(64.0, 1024.0);
    let values: Vec<String> = curve.points.iter().map(|p| format!("{:.3}", p.scaled)).collect();
    outcome(
        ratio <= 1.5,
        format!("max/min of E|Y_t - x|/sqrt(t) = {ratio:.4} with 10^4 walkers (values {})", values.join(" ")),
    )
}

fn diffusion() -> &'static DiffusionReport {
    static R: std::sync::OnceLock<DiffusionReport> = std::sync::OnceLock::new();
    R.get_or_init(|| {
        let (_, dt) = poisson_graph(140.0, 7);
        let spec = ProcessSpec::Poisson { intensity: 1.0 };
        let pw = Window::centered(2, 8.0).unwrap();
        let palm: Vec<PointSet> = (0..10_000u64).map(|i| palm_sample(&spec, &pw, 70_000 + i).unwrap()).collect();
        let cfg = DiffusionConfig {
            steps: (1..=10).map(|k| k * 100).collect(),
            times: (1..=10).map(|k| k as f64 * 16.0).collect(),
            walkers: 10_000,
            start_half_side: 20.0,
            seed: 7,
        };
        diffusion_report(dt.graph(), &palm, &cfg).unwrap()
    })
}

fn diffusion_relation() -> Outcome {
    let r = diffusion();
    let palm_ok = (r.mean_palm_degree - 6.0).abs() <= 0.1;
    outcome(
        r.relation_error <= 0.10 && palm_ok,
        format!(
            "sigma2_VSRW/sigma2_DTRW = {:.4}, mean Palm degree {:.4} ± {:.4} (target 6 ± 0.1), relative gap {:.4}",
            r.ratio, r.mean_palm_degree, r.mean_palm_degree_se, r.relation_error
        ),
    )
}

fn isotropy_gaussianity() -> Outcome {
    let r = diffusion();
    outcome(
        r.isotropy < 0.05 && r.ks_statistic < r.ks_critical,
        format!(
            "|C12|/sigma2 = {:.4} (< 0.05), KS {:.4} vs 1% critical {:.4}, {} samples",
            r.isotropy, r.ks_statistic, r.ks_critical, r.sample_counts.walkers_used
        ),
    )
}

fn corrector() -> Outcome {
    let radii = [25.0, 50.0, 100.0, 200.0];
    let tol = 1e-10 * 400.0;
    let (mut votes, mut residual_fail, mut max_principle_fail) = (0, 0, 0);
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let (_, dt) = poisson_graph(205.0, 900 + seed);
        let g = dt.graph();
        let region: Vec<bool> = (0..g.len())
            .map(|v| !g.is_tainted(v) && g.position(v).iter().all(|c| c.abs() <= 200.0))
            .collect();
        let emb = solve_harmonic_embedding(g, &region, tol).unwrap();
        let defect = emb.harmonic_defects(g).unwrap().iter().map(|d| d.1).fold(0.0, f64::max);
        worst = worst.max(defect);
        residual_fail += usize::from(defect > tol);
        max_principle_fail += usize::from(!emb.max_principle_holds());
        let prof = sublinearity_profile(g, &emb, &radii, None, &[], &[]).unwrap();
        votes += usize::from(prof.ratios_strictly_decreasing());
    }
    outcome(
        residual_fail == 0 && max_principle_fail == 0 && votes > 10,
        format!(
            "20 seeds: worst defect {worst:.2e} (tol {tol:.0e}), max-principle failures {max_principle_fail}, max|chi|/n strictly decreasing in {votes}/20"
        ),
    )
}

/// Majority vote over seeds that `max hole diameter / ln L` does not increase along the
/// grid of radii, plus the per-L means.
fn hole_trend(s: f64, alpha: f64) -> (usize, Vec<f64>) {
    let ls = [100i64, 200, 400];
    let mut votes = 0;
    let mut sums = vec![0.0; ls.len()];
    for seed in 0..20u64 {
        let field = sample_poisson_field(2, s, alpha, 1.0, 401, 3000 + seed).unwrap();
        let ratios: Vec<f64> = ls
            .iter()
            .map(|&l| cluster_components(&field, l).unwrap().max_hole_diameter() as f64 / (l as f64).ln())
            .collect();
        for (acc, r) in sums.iter_mut().zip(&ratios) {
            *acc += r / 20.0;
        }
        votes += usize::from(ratios.windows(2).all(|w| w[1] <= w[0]));
    }
    (votes, sums)
}

fn hole_diameters() -> Outcome {
    let (votes, means) = hole_trend(10.0, 2.0);
    let (info_votes, info_means) = hole_trend(3.0, 2.5);
    outcome(
        votes > 10,
        format!(
            "s=10, alpha=2: nonincreasing in {votes}/20 seeds, mean diam/ln L {:.3?}; [info] s=3, alpha=2.5: {info_votes}/20, means {:.3?}",
            means, info_means
        ),
    )
}

fn palm_ensemble(count: u64, seed: u64) -> Vec<PointSet> {
    let spec = ProcessSpec::Poisson { intensity: 1.0 };
    let w = Window::centered(2, 20.0).unwrap();
    (0..count).map(|i| palm_sample(&spec, &w, seed + i).unwrap()).collect()
}

fn lens_criterion() -> Outcome {
    let ensemble = palm_ensemble(1000, 110_000);
    let rep = tail_moment_report(&ensemble, &[2.0, 3.0], 1.5, 5).unwrap();
    let l = &rep.lens;
    outcome(
        l.violations.is_empty() && l.checked > 0,
        format!(
            "1000 Palm samples, n ≤ 5, beta = 1.5: {} checks, {} with all lenses occupied, {} violations, {} skipped",
            l.checked,
            l.all_lenses_hit,
            l.violations.len(),
            l.skipped_scale + rep.skipped_tainted
        ),
    )
}

fn moment_checks() -> Outcome {
    let ensemble = palm_ensemble(10_000, 120_000);
    let grid: Vec<f64> = (0..=12).map(|k| 2.0 + 0.25 * k as f64).collect();
    let rep = tail_moment_report(&ensemble, &grid, 1.5, 0).unwrap();
    let fit = rep.distance_fit.unwrap();
    outcome(
        fit.r_squared > 0.95 && rep.distance_fourth_drift < 0.05,
        format!(
            "10^4 Palm samples: ln P[R > rho] on [2,5] slope {:.3}, R² {:.4} over {} nonempty points; 4th-moment drift {:.4}",
            fit.slope, fit.r_squared, fit.n, rep.distance_fourth_drift
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("delaunay oracle equivalence", delaunay_oracle),
        ("good-point degree bound", degree_bound),
        ("induced kernel exactness", kernel_exactness),
        ("conductance comparison", conductance_comparison),
        ("heat-kernel decay", heat_kernel_decay),
        ("expected-distance bound", expected_distance),
        ("diffusion relation", diffusion_relation),
        ("isotropy and gaussianity", isotropy_gaussianity),
        ("corrector", corrector),
        ("hole diameters", hole_diameters),
        ("lens criterion", lens_criterion),
        ("moment checks", moment_checks),
    ];
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let number = i + 1;
        if !selected.is_empty() && !selected.contains(&number) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        println!(
            "[{}] {number:>2} {name}: {} ({:.1}s)",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!o.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
