mod common;

use delwalk_core::analysis::{
    conductance_pair, diffusion_report, expected_distance_curve, heat_kernel_curve, heat_kernel_laws, heat_kernel_mc,
    heat_kernel_second_moment, iso_profile_estimate, palm_record, tail_moment_report, DiffusionConfig,
    DEFAULT_MAX_TERMS,
};
use delwalk_core::geometry::{build_delaunay, Graph};
use delwalk_core::pointproc::{palm_sample, PointSet, ProcessSpec, Window};
use delwalk_core::walker::induced_kernel;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{dense_induced_kernel, holed_instance, poisson_graph};

/// Delaunay graph of `n` uniform points in the unit square with no tainted vertices.
fn small_graph(n: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..2 * n).map(|_| rng.random::<f64>()).collect();
    let ps = PointSet::from_coords(coords, Window::cube(2, 0.0, 1.0).unwrap(), None).unwrap();
    let g = build_delaunay(&ps).unwrap().into_graph();
    let edges: Vec<(u32, u32)> = g.edges().map(|(a, b)| (a as u32, b as u32)).collect();
    Graph::from_edges(2, g.positions().to_vec(), &edges, vec![false; n]).unwrap()
}

/// A small graph with one non-good vertex away from the convex hull.
fn one_hole(n: usize, seed: u64) -> (Graph, Vec<bool>) {
    let g = small_graph(n, seed);
    let hole = (0..n)
        .min_by(|&a, &b| {
            let da = (g.position(a)[0] - 0.5).hypot(g.position(a)[1] - 0.5);
            let db = (g.position(b)[0] - 0.5).hypot(g.position(b)[1] - 0.5);
            da.total_cmp(&db)
        })
        .unwrap();
    let good = (0..n).map(|v| v != hole).collect();
    (g, good)
}

/// Conductances computed directly from the dense induced kernel and edge counts.
fn brute_conductance(g: &Graph, good: &[bool], dense: &DMatrix<f64>, a: &[bool]) -> (f64, f64, f64, f64) {
    let (mut flow, mut vol_hat, mut cut, mut vol_tilde) = (0.0, 0.0, 0.0, 0.0);
    for x in (0..g.len()).filter(|&x| a[x]) {
        let deg = g.degree(x) as f64;
        vol_hat += deg;
        flow += deg * (0..g.len()).filter(|&y| good[y] && !a[y]).map(|y| dense[(x, y)]).sum::<f64>();
        for &y in g.neighbors(x) {
            let y = y as usize;
            if good[y] {
                vol_tilde += 1.0;
                if !a[y] {
                    cut += 1.0;
                }
            }
        }
    }
    (flow, vol_hat, cut, vol_tilde)
}

fn connected_within(members: &[usize], mask: u32, adjacent: impl Fn(usize, usize) -> bool) -> bool {
    let chosen: Vec<usize> = (0..members.len()).filter(|&i| mask >> i & 1 == 1).collect();
    let mut reached = vec![chosen[0]];
    let mut frontier = vec![chosen[0]];
    while let Some(i) = frontier.pop() {
        for &j in &chosen {
            if !reached.contains(&j) && adjacent(members[i], members[j]) {
                reached.push(j);
                frontier.push(j);
            }
        }
    }
    reached.len() == chosen.len()
}

#[test]
fn triangle_and_whole_cluster_conductances() {
    let g = Graph::from_edges(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0], &[(0, 1), (1, 2), (0, 2)], vec![false; 3]).unwrap();
    let k = induced_kernel(&g, &[true; 3], None).unwrap();
    let r = conductance_pair(&g, &k, &[0], 0, 45.0).unwrap();
    assert_eq!(r.i_tilde, 1.0);
    assert!((r.i_hat - 1.0).abs() < 1e-15);
    let all = conductance_pair(&g, &k, &[0, 1, 2], 1, 45.0).unwrap();
    assert_eq!(all.i_tilde, 0.0);
    assert!(all.i_hat.abs() < 1e-15);
}

#[test]
fn conductance_matches_dense_kernel_on_twelve_vertices() {
    let (g, good) = one_hole(12, 3);
    let k = induced_kernel(&g, &good, None).unwrap();
    let dense = dense_induced_kernel(&g, &good);
    let members: Vec<usize> = (0..12).filter(|&v| good[v]).collect();
    for mask in 1u32..(1 << members.len()) - 1 {
        let a: Vec<usize> = (0..members.len()).filter(|&i| mask >> i & 1 == 1).map(|i| members[i]).collect();
        let mut in_a = vec![false; 12];
        for &x in &a {
            in_a[x] = true;
        }
        let (flow, vol_hat, cut, vol_tilde) = brute_conductance(&g, &good, &dense, &in_a);
        let r = conductance_pair(&g, &k, &a, mask as usize, 45.0).unwrap();
        assert!((r.i_hat - flow / vol_hat).abs() < 1e-12);
        if vol_tilde > 0.0 {
            assert!((r.i_tilde - cut / vol_tilde).abs() < 1e-12);
        }
        assert!(r.comparison_holds);
        assert!((0.0..=1.0 + 1e-12).contains(&r.i_hat) && (0.0..=1.0).contains(&r.i_tilde));
    }
    let hole = (0..12).find(|&v| !good[v]).unwrap();
    assert!(conductance_pair(&g, &k, &[hole], 0, 45.0).is_err());
}

#[test]
fn exhaustive_profile_equals_connected_subset_enumeration() {
    for seed in 0..4 {
        let (g, good) = one_hole(14, 10 + seed);
        let k = induced_kernel(&g, &good, None).unwrap();
        let dense = dense_induced_kernel(&g, &good);
        let u_grid = [0.1, 0.2, 0.3, 0.4, 0.5];
        let profile = iso_profile_estimate(&g, &k, &u_grid, 100, 10.0, 1).unwrap();
        assert!(profile.exhaustive);

        let members: Vec<usize> = (0..g.len()).filter(|&v| good[v]).collect();
        let total_hat: f64 = members.iter().map(|&v| g.degree(v) as f64).sum();
        let total_tilde: f64 = members
            .iter()
            .map(|&v| g.neighbors(v).iter().filter(|&&w| good[w as usize]).count() as f64)
            .sum();
        let mut best_hat = [f64::INFINITY; 5];
        let mut best_tilde = [f64::INFINITY; 5];
        for mask in 1u32..(1 << members.len()) {
            let mut in_a = vec![false; g.len()];
            for i in (0..members.len()).filter(|&i| mask >> i & 1 == 1) {
                in_a[members[i]] = true;
            }
            let (flow, vol_hat, cut, vol_tilde) = brute_conductance(&g, &good, &dense, &in_a);
            let kernel_connected = connected_within(&members, mask, |x, y| dense[(x, y)] > 0.0);
            let edge_connected = connected_within(&members, mask, |x, y| g.has_edge(x, y));
            for (i, &u) in u_grid.iter().enumerate() {
                if kernel_connected && vol_hat <= u * total_hat {
                    best_hat[i] = best_hat[i].min(flow / vol_hat);
                }
                if edge_connected && vol_tilde > 0.0 && vol_tilde <= u * total_tilde {
                    best_tilde[i] = best_tilde[i].min(cut / vol_tilde);
                }
            }
        }
        for i in 0..5 {
            assert!((profile.phi_hat[i] - best_hat[i]).abs() < 1e-12, "seed {seed} u {}", u_grid[i]);
            assert_eq!(profile.phi_tilde[i], best_tilde[i]);
        }
        assert!(profile.phi_hat.windows(2).all(|w| w[1] <= w[0]));
        assert!(profile.phi_tilde.windows(2).all(|w| w[1] <= w[0]));
    }
}

#[test]
fn profile_shape_on_a_poisson_cluster() {
    let inst = common::good_instance(60.0, 3.0, 2.5, 4);
    let k = induced_kernel(&inst.graph, &inst.good, None).unwrap();
    let u_grid: Vec<f64> = (1..=10).map(|i| 0.05 * i as f64).collect();
    let p = iso_profile_estimate(&inst.graph, &k, &u_grid, 300, 120.0, 2).unwrap();
    assert!(!p.exhaustive);
    assert!(p.phi_hat.windows(2).all(|w| w[1] <= w[0]));
    assert!(p.phi_tilde.windows(2).all(|w| w[1] <= w[0]));
    assert!(p.candidate_count.iter().all(|&c| c >= 100));
    assert!(p.fitted_c.unwrap() > 0.0);
    assert!(p.fit_r_squared.unwrap() > 0.8, "R² {:?}", p.fit_r_squared);
    assert!(iso_profile_estimate(&inst.graph, &k, &[0.6], 300, 120.0, 2).is_err());
    assert!(iso_profile_estimate(&inst.graph, &k, &[0.2], 99, 120.0, 2).is_err());
}

#[test]
fn uniformization_matches_dense_matrix_exponential() {
    for seed in 0..3 {
        let (g, good) = one_hole(45, 40 + seed);
        let k = induced_kernel(&g, &good, None).unwrap();
        let n = g.len();
        let generator = dense_induced_kernel(&g, &good)
            - DMatrix::from_fn(n, n, |i, j| if i == j && good[i] { 1.0 } else { 0.0 });
        let t_grid = [0.0, 0.5, 3.0, 12.0, 40.0];
        let goods: Vec<usize> = (0..n).filter(|&v| good[v]).collect();
        for &x in goods.iter().take(6) {
            let laws = heat_kernel_laws(&k, x, &t_grid, DEFAULT_MAX_TERMS).unwrap();
            assert_eq!(laws[0][x], 1.0);
            for (law, &t) in laws.iter().zip(&t_grid) {
                let exact = (&generator * t).exp();
                for &y in &goods {
                    assert!((law[y] - exact[(x, y)]).abs() < 1e-8, "t {t} ({x}, {y})");
                }
            }
        }
        // Reversibility with the kernel degrees.
        let laws: Vec<Vec<Vec<f64>>> =
            goods.iter().map(|&x| heat_kernel_laws(&k, x, &[7.0], DEFAULT_MAX_TERMS).unwrap()).collect();
        for (i, &x) in goods.iter().enumerate() {
            for (j, &y) in goods.iter().enumerate() {
                let lhs = k.degree(x) as f64 * laws[i][0][y];
                let rhs = k.degree(y) as f64 * laws[j][0][x];
                assert!((lhs - rhs).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn monte_carlo_return_probability_agrees_with_uniformization() {
    let (g, good) = holed_instance(10.0, 2, 5);
    let k = induced_kernel(&g, &good, None).unwrap();
    let x = (0..g.len()).find(|&v| good[v]).unwrap();
    let curve = heat_kernel_curve(&k, x, &[0.0, 50.0], DEFAULT_MAX_TERMS).unwrap();
    assert_eq!(curve[0].1, 1.0);
    let (p, se) = heat_kernel_mc(&k, x, 50.0, 1_000_000, 9).unwrap();
    assert!((p - curve[1].1).abs() < 3.0 * se, "{p} ± {se} vs {}", curve[1].1);
}

#[test]
fn second_moment_agrees_with_monte_carlo() {
    let (g, good) = holed_instance(12.0, 2, 8);
    let k = induced_kernel(&g, &good, None).unwrap();
    let x = (0..g.len())
        .filter(|&v| good[v])
        .min_by(|&a, &b| {
            let da = (g.position(a)[0] - 6.0).hypot(g.position(a)[1] - 6.0);
            let db = (g.position(b)[0] - 6.0).hypot(g.position(b)[1] - 6.0);
            da.total_cmp(&db)
        })
        .unwrap();
    let t_grid = [0.0, 1.0, 4.0, 10.0];
    let exact = heat_kernel_second_moment(&g, &k, x, &t_grid, DEFAULT_MAX_TERMS).unwrap();
    let mc = expected_distance_curve(&g, &k, x, &t_grid, 20_000, 4).unwrap();
    assert_eq!(mc.points[0].scaled, 0.0);
    assert_eq!(mc.points[0].mean_distance, 0.0);
    assert_eq!(exact[0].1, 0.0);
    for (e, m) in exact.iter().zip(&mc.points).skip(1) {
        assert!((e.1 - m.mean_square).abs() < 4.0 * m.mean_square_se, "t {}: {} vs {} ± {}", e.0, e.1, m.mean_square, m.mean_square_se);
    }
    assert!(expected_distance_curve(&g, &k, x, &t_grid, 999, 4).is_err());
}

#[test]
fn diffusion_report_shape_and_errors() {
    let (_, dt) = poisson_graph(70.0, 21);
    let g = dt.into_graph();
    let spec = ProcessSpec::Poisson { intensity: 1.0 };
    let w = Window::centered(2, 8.0).unwrap();
    let palm: Vec<PointSet> = (0..200).map(|i| palm_sample(&spec, &w, 9000 + i).unwrap()).collect();
    let cfg = DiffusionConfig {
        steps: vec![50, 100, 200, 300],
        times: vec![10.0, 20.0, 40.0, 60.0],
        walkers: 2000,
        start_half_side: 10.0,
        seed: 3,
    };
    let r = diffusion_report(&g, &palm, &cfg).unwrap();
    assert!(r.sigma2_dtrw > 0.0 && r.sigma2_vsrw > 0.0);
    let c = &r.covariance;
    assert_eq!(c[0][1], c[1][0]);
    assert!(c[0][0] >= 0.0 && c[1][1] >= 0.0 && c[0][0] * c[1][1] >= c[0][1] * c[0][1]);
    let (last_n, last_msd) = *r.msd_dtrw.last().unwrap();
    assert_eq!(last_n, 300.0);
    assert!(r.fit_dtrw.intercept.abs() < 0.1 * last_msd, "intercept {}", r.fit_dtrw.intercept);
    assert!((r.ratio - r.sigma2_vsrw / r.sigma2_dtrw).abs() < 1e-12);

    let one = DiffusionConfig { steps: vec![100], ..cfg.clone() };
    assert!(diffusion_report(&g, &palm, &one).is_err());
    assert!(diffusion_report(&g, &palm[..99], &cfg).is_err());
}

#[test]
fn tail_report_on_a_small_ensemble() {
    let spec = ProcessSpec::Poisson { intensity: 1.0 };
    let w = Window::centered(2, 12.0).unwrap();
    let ensemble: Vec<PointSet> = (0..400).map(|i| palm_sample(&spec, &w, 31_000 + i).unwrap()).collect();
    let rho: Vec<f64> = (0..9).map(|i| 1.0 + 0.5 * i as f64).collect();
    let r = tail_moment_report(&ensemble, &rho, 1.5, 4).unwrap();
    assert_eq!(r.samples + r.skipped_tainted, 400);
    assert_eq!(r.lens.violations.len(), 0);
    assert!(r.lens.checked > 0);
    assert!(r.distance_survival.windows(2).all(|w| w[1].survival <= w[0].survival));
    let degrees: Vec<usize> = ensemble.iter().map(|ps| palm_record(ps).unwrap().degree).collect();
    let mean = degrees.iter().sum::<usize>() as f64 / degrees.len() as f64;
    assert!((mean - 6.0).abs() < 0.3);
    assert!(tail_moment_report(&ensemble, &rho, 1.0, 4).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn comparison_inequality_holds_on_random_sets(seed in 0u64..1000, start in 0usize..10_000, size in 1usize..60) {
        let (g, good) = holed_instance(11.0, 2, seed);
        let k = induced_kernel(&g, &good, None).unwrap();
        let goods: Vec<usize> = (0..g.len()).filter(|&v| good[v]).collect();
        // Breadth-first ball among good vertices.
        let mut a = vec![goods[start % goods.len()]];
        let mut i = 0;
        while i < a.len() && a.len() < size {
            for &w in g.neighbors(a[i]) {
                let w = w as usize;
                if good[w] && !a.contains(&w) && a.len() < size {
                    a.push(w);
                }
            }
            i += 1;
        }
        let d = (0..g.len()).map(|v| g.degree(v)).max().unwrap() as f64;
        let r = conductance_pair(&g, &k, &a, 0, d).unwrap();
        prop_assert!(r.comparison_holds);
        prop_assert!(r.i_hat >= r.i_tilde / d - 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&r.i_hat));
    }
}
