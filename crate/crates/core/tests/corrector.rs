mod common;

use delwalk_core::corrector::{
    box_region, corrector_values, martingale_diagnostic, read_embedding_csv, solve_harmonic_embedding,
    sublinearity_profile, write_embedding_csv, HarmonicEmbedding,
};
use delwalk_core::geometry::{build_delaunay, Graph};
use delwalk_core::pointproc::{PointSet, Window};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::poisson_graph;

/// Region: vertices strictly inside `[-inner, inner]^2` whose neighbours are all in the
/// window sample (the tainted flag marks cells cut by the window).
fn instance(half: f64, inner: f64, seed: u64) -> (Graph, Vec<bool>) {
    let (_, dt) = poisson_graph(half, seed);
    let g = dt.into_graph();
    let region = (0..g.len())
        .map(|v| !g.is_tainted(v) && g.position(v).iter().all(|c| c.abs() < inner))
        .collect();
    (g, region)
}

/// Dirichlet problem solved densely: `L_II φ_I = A_IB x_B` per coordinate.
fn dense_phi(g: &Graph, region: &[bool]) -> Vec<(usize, [f64; 2])> {
    let interior: Vec<usize> = (0..g.len()).filter(|&v| region[v]).collect();
    let slot = |v: usize| interior.iter().position(|&w| w == v);
    let n = interior.len();
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut rhs = [DVector::<f64>::zeros(n), DVector::<f64>::zeros(n)];
    for (i, &v) in interior.iter().enumerate() {
        l[(i, i)] = g.degree(v) as f64;
        for &w in g.neighbors(v) {
            match slot(w as usize) {
                Some(j) => l[(i, j)] -= 1.0,
                None => {
                    for a in 0..2 {
                        rhs[a][i] += g.position(w as usize)[a];
                    }
                }
            }
        }
    }
    let lu = l.lu();
    let sol = [lu.solve(&rhs[0]).unwrap(), lu.solve(&rhs[1]).unwrap()];
    interior.iter().enumerate().map(|(i, &v)| (v, [sol[0][i], sol[1][i]])).collect()
}

fn check_against_dense(g: &Graph, region: &[bool], emb: &HarmonicEmbedding) {
    for (v, phi) in dense_phi(g, region) {
        let got = emb.phi(v).unwrap();
        for a in 0..2 {
            assert!((got[a] - phi[a]).abs() < 1e-10, "vertex {v}: {} vs {}", got[a], phi[a]);
        }
    }
}

#[test]
fn twenty_vertex_instance_matches_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let coords = (0..40).map(|_| rng.random_range(-2.0..2.0)).collect();
    let ps = PointSet::from_coords(coords, Window::centered(2, 2.0).unwrap(), None).unwrap();
    let g = build_delaunay(&ps).unwrap().into_graph();
    assert_eq!(g.len(), 20);
    let region: Vec<bool> = (0..20).map(|v| g.position(v).iter().all(|c| c.abs() < 1.3)).collect();
    assert!(region.iter().any(|&r| r));
    let emb = solve_harmonic_embedding(&g, &region, 1e-12).unwrap();
    check_against_dense(&g, &region, &emb);
    for v in emb.boundary_vertices() {
        assert_eq!(emb.phi(v).unwrap(), g.position(v));
        assert_eq!(emb.chi(v).unwrap(), &[0.0, 0.0]);
    }
}

#[test]
fn instances_up_to_two_hundred_vertices_match_dense_solve() {
    for seed in 0..10 {
        let (g, region) = instance(7.0, 5.5, 100 + seed);
        assert!(g.len() <= 260);
        let emb = solve_harmonic_embedding(&g, &region, 1e-12).unwrap();
        check_against_dense(&g, &region, &emb);
        assert!(emb.residual() <= 1e-12);
    }
}

#[test]
fn corrector_is_nonzero_on_random_instances() {
    let mut nonzero = 0;
    let runs = 40;
    for seed in 0..runs {
        let (g, region) = instance(6.0, 4.5, 200 + seed);
        let emb = solve_harmonic_embedding(&g, &region, 1e-11).unwrap();
        if corrector_values(&emb).iter().any(|(_, c)| c.iter().any(|x| x.abs() > 1e-8)) {
            nonzero += 1;
        }
    }
    assert!(nonzero as f64 >= 0.95 * runs as f64, "{nonzero}/{runs}");
}

#[test]
fn identity_is_harmonic_on_a_regular_lattice() {
    // Square grid: every interior vertex is the mean of its four neighbours.
    let side = 7usize;
    let pos: Vec<f64> = (0..side * side).flat_map(|i| [(i % side) as f64, (i / side) as f64]).collect();
    let mut edges = Vec::new();
    for i in 0..side * side {
        if i % side + 1 < side {
            edges.push((i as u32, i as u32 + 1));
        }
        if i / side + 1 < side {
            edges.push((i as u32, (i + side) as u32));
        }
    }
    let g = Graph::from_edges(2, pos, &edges, vec![false; side * side]).unwrap();
    let region: Vec<bool> = (0..side * side)
        .map(|i| (1..side - 1).contains(&(i % side)) && (1..side - 1).contains(&(i / side)))
        .collect();
    let emb = solve_harmonic_embedding(&g, &region, 1e-13).unwrap();
    for (_, chi) in corrector_values(&emb) {
        assert!(chi.iter().all(|c| c.abs() < 1e-12));
    }
}

#[test]
fn embedding_file_round_trip() {
    let (g, region) = instance(5.0, 3.5, 4);
    let emb = solve_harmonic_embedding(&g, &region, 1e-12).unwrap();
    let mut buf = Vec::new();
    write_embedding_csv(&emb, &mut buf).unwrap();
    let back = read_embedding_csv(buf.as_slice()).unwrap();
    for v in emb.vertices() {
        assert_eq!(back.phi(v), emb.phi(v));
        assert_eq!(back.is_interior(v), emb.is_interior(v));
    }
}

#[test]
fn profile_rejects_degenerate_grids() {
    let (_, dt) = poisson_graph(30.0, 1);
    let g = dt.into_graph();
    let region = box_region(&g, 25.0);
    let emb = solve_harmonic_embedding(&g, &region, 1e-9).unwrap();
    assert!(sublinearity_profile(&g, &emb, &[10.0], None, &[], &[]).is_err());
    assert!(sublinearity_profile(&g, &emb, &[5.0, 10.0, 10.0], None, &[], &[]).is_err());
    let p = sublinearity_profile(&g, &emb, &[4.0, 8.0, 16.0, 24.0], None, &[(0.5, 0.5)], &[3.5]).unwrap();
    assert!(p.max_chi.windows(2).all(|w| w[0] <= w[1]));
    assert!(p.spread.windows(2).all(|w| w[0] <= w[1]));
    for (r, (m, ratio)) in p.radii.iter().zip(p.max_chi.iter().zip(&p.ratios)) {
        assert!((m / r - ratio).abs() < 1e-12);
    }
    assert_eq!(p.poly_growth.len(), 4);
}

#[test]
fn martingale_increments_are_centred_and_variance_grows_linearly() {
    let (_, dt) = poisson_graph(90.0, 12);
    let g = dt.into_graph();
    let region: Vec<bool> = (0..g.len())
        .map(|v| !g.is_tainted(v) && g.position(v).iter().all(|c| c.abs() < 84.0))
        .collect();
    let emb = solve_harmonic_embedding(&g, &region, 1e-9).unwrap();
    let x0 = g.nearest_vertex(&[0.0, 0.0]).unwrap();
    let r = martingale_diagnostic(&g, &emb, x0, 1000, 4000, 1000, 3).unwrap();
    assert_eq!(r.mean_square[0], 0.0);
    assert_eq!(r.m0, emb.phi(x0).unwrap());
    assert!(r.max_defect <= 1e-9);
    assert!(!r.drift.is_empty());
    // Each coordinate at each well-visited vertex is a separate 3-SE check; with a
    // few hundred of them an occasional excursion past 3 is expected.
    let z: Vec<f64> = r
        .drift
        .iter()
        .flat_map(|e| e.mean_increment.iter().zip(&e.std_error).map(|(m, s)| m.abs() / s))
        .collect();
    let beyond = z.iter().filter(|&&z| z > 3.0).count();
    assert!(beyond as f64 <= 0.02 * z.len() as f64, "{beyond} of {} beyond 3 SE", z.len());
    assert!(r.drift_within(5.0));
    assert!(r.ratio_relative_change.abs() < 0.1, "ratio change {}", r.ratio_relative_change);
    assert!(r.censored < r.walks / 10);

    let zero = martingale_diagnostic(&g, &emb, x0, 0, 10, 1, 3).unwrap();
    assert_eq!(zero.mean_square, vec![0.0]);
    let outside = (0..g.len()).find(|&v| !emb.is_interior(v)).unwrap();
    assert!(martingale_diagnostic(&g, &emb, outside, 10, 10, 1, 3).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solve_invariants(seed in any::<u64>(), inner in 2.0f64..5.0) {
        let (g, region) = instance(6.0, inner, seed);
        prop_assume!(region.iter().any(|&r| r));
        let emb = solve_harmonic_embedding(&g, &region, 1e-11).unwrap();
        prop_assert!(emb.residual() <= 1e-11);
        let defects = emb.harmonic_defects(&g).unwrap();
        prop_assert!(defects.iter().all(|&(_, d)| d <= 1e-11));
        prop_assert!(emb.max_principle_holds());
        // Maximum principle, coordinate by coordinate.
        for a in 0..2 {
            let bd: Vec<f64> = emb.boundary_vertices().map(|v| g.position(v)[a]).collect();
            let (lo, hi) = bd.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
            for v in emb.interior_vertices() {
                let p = emb.phi(v).unwrap()[a];
                prop_assert!(lo - 1e-12 <= p && p <= hi + 1e-12);
            }
        }
        // χ is a vertex potential: differences sum to zero around every triangle, and
        // the pair value is antisymmetric.
        for v in emb.vertices() {
            for &w in g.neighbors(v) {
                let w = w as usize;
                if !emb.contains(w) {
                    continue;
                }
                let d = emb.chi_difference(v, w).unwrap();
                let back = emb.chi_difference(w, v).unwrap();
                prop_assert!(d.iter().zip(&back).all(|(a, b)| a + b == 0.0));
                for &u in g.neighbors(w) {
                    let u = u as usize;
                    if u != v && emb.contains(u) && g.has_edge(u, v) {
                        let (a, b, c) = (
                            emb.chi_difference(v, w).unwrap(),
                            emb.chi_difference(w, u).unwrap(),
                            emb.chi_difference(u, v).unwrap(),
                        );
                        for k in 0..2 {
                            prop_assert!((a[k] + b[k] + c[k]).abs() < 1e-12);
                        }
                    }
                }
            }
            let (p, x, chi) = (emb.phi(v).unwrap(), g.position(v), emb.chi(v).unwrap());
            for k in 0..2 {
                prop_assert!((x[k] - p[k] - chi[k]).abs() < 1e-12);
            }
        }
    }
}
