use delwalk_core::geometry::{
    build_delaunay, cells_intersecting_box, neighbor_stats, read_graph, verify_empty_circumcircle, voronoi_cells,
    voronoi_cells_from_delaunay, write_graph, DelaunayGraph, Verdict,
};
use delwalk_core::pointproc::{sample_poisson, PointSet, Window};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform_points(n: usize, seed: u64) -> PointSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..2 * n).map(|_| rng.random_range(0.0..10.0)).collect();
    PointSet::from_coords(coords, Window::cube(2, 0.0, 10.0).unwrap(), None).unwrap()
}

/// Open-disk test through the lifted determinant, oriented by the triangle's sign.
fn strictly_inside_circumcircle(a: &[f64], b: &[f64], c: &[f64], p: &[f64]) -> bool {
    let row = |q: &[f64]| {
        let (x, y) = (q[0] - p[0], q[1] - p[1]);
        (x, y, x * x + y * y)
    };
    let (ax, ay, aw) = row(a);
    let (bx, by, bw) = row(b);
    let (cx, cy, cw) = row(c);
    let det = ax * (by * cw - bw * cy) - ay * (bx * cw - bw * cx) + aw * (bx * cy - by * cx);
    let orient = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let scale = aw.max(bw).max(cw).powi(2);
    det * orient.signum() > 1e-10 * scale
}

fn brute_force_violations(ps: &PointSet, dt: &DelaunayGraph) -> usize {
    dt.simplices()
        .filter(|s| {
            let (a, b, c) = (ps.point(s[0] as usize), ps.point(s[1] as usize), ps.point(s[2] as usize));
            (0..ps.len())
                .filter(|v| !s.contains(&(*v as u32)))
                .any(|v| strictly_inside_circumcircle(a, b, c, ps.point(v)))
        })
        .count()
}

/// Length of the part of the bisector of `i` and `j` that is closer to them than to any
/// other nucleus and lies in the window.
fn shared_edge_length(ps: &PointSet, i: usize, j: usize) -> f64 {
    let (pi, pj) = (ps.point(i), ps.point(j));
    let mid = [(pi[0] + pj[0]) / 2.0, (pi[1] + pj[1]) / 2.0];
    let dir = [-(pj[1] - pi[1]), pj[0] - pi[0]];
    let (mut t0, mut t1) = (f64::NEG_INFINITY, f64::INFINITY);
    // Half-plane a·(mid + t dir) <= b.
    let mut clip = |a: [f64; 2], b: f64| {
        let base = a[0] * mid[0] + a[1] * mid[1];
        let slope = a[0] * dir[0] + a[1] * dir[1];
        if slope.abs() < 1e-300 {
            if base > b {
                t1 = f64::NEG_INFINITY;
            }
        } else if slope > 0.0 {
            t1 = t1.min((b - base) / slope);
        } else {
            t0 = t0.max((b - base) / slope);
        }
    };
    for k in 0..ps.len() {
        if k == i || k == j {
            continue;
        }
        let pk = ps.point(k);
        // |p - pi|^2 <= |p - pk|^2  <=>  2 (pk - pi)·p <= |pk|^2 - |pi|^2
        let a = [2.0 * (pk[0] - pi[0]), 2.0 * (pk[1] - pi[1])];
        let b = pk[0] * pk[0] + pk[1] * pk[1] - pi[0] * pi[0] - pi[1] * pi[1];
        clip(a, b);
    }
    let w = ps.window();
    for axis in 0..2 {
        let mut a = [0.0; 2];
        a[axis] = 1.0;
        clip(a, w.hi()[axis]);
        a[axis] = -1.0;
        clip(a, -w.lo()[axis]);
    }
    let len = (dir[0] * dir[0] + dir[1] * dir[1]).sqrt();
    if t1 > t0 {
        (t1 - t0) * len
    } else {
        0.0
    }
}

#[test]
fn three_points_make_one_triangle() {
    let ps = PointSet::from_coords(vec![0.0, 0.0, 2.0, 0.0, 0.5, 1.5], Window::cube(2, -1.0, 3.0).unwrap(), None)
        .unwrap();
    let dt = build_delaunay(&ps).unwrap();
    assert_eq!(dt.simplex_count(), 1);
    for v in 0..3 {
        assert_eq!(dt.graph().degree(v), 2);
    }
    let (deg, far) = neighbor_stats(dt.graph(), 0).unwrap();
    assert_eq!(deg, 2);
    assert!((far - 2.0).abs() < 1e-12);
    assert!(neighbor_stats(dt.graph(), 3).is_err());
}

#[test]
fn cocircular_square_gets_one_diagonal() {
    let coords = vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
    let ps = PointSet::from_coords(coords, Window::cube(2, -0.5, 1.5).unwrap(), Some(3)).unwrap();
    let dt = build_delaunay(&ps).unwrap();
    assert_eq!(dt.graph().edge_count(), 5);
    assert_eq!(dt.simplex_count(), 2);
    let diagonal = dt.graph().has_edge(0, 2) as u8 + dt.graph().has_edge(1, 3) as u8;
    assert_eq!(diagonal, 1);
    assert!(verify_empty_circumcircle(&dt).is_pass());
    assert_eq!(brute_force_violations(&ps, &dt), 0);
}

#[test]
fn fifty_points_pass_the_brute_force_oracle() {
    for seed in 0..20 {
        let ps = uniform_points(50, seed);
        let dt = build_delaunay(&ps).unwrap();
        assert_eq!(brute_force_violations(&ps, &dt), 0, "seed {seed}");
        assert_eq!(verify_empty_circumcircle(&dt), Verdict::Pass);
    }
}

#[test]
fn voronoi_faces_are_dual_to_delaunay_edges() {
    for seed in 0..10 {
        let ps = uniform_points(50, 100 + seed);
        let dt = build_delaunay(&ps).unwrap();
        let cells = voronoi_cells_from_delaunay(&dt);
        for i in 0..ps.len() {
            for j in i + 1..ps.len() {
                if cells[i].clipped() || cells[j].clipped() {
                    continue;
                }
                let shared = shared_edge_length(&ps, i, j) > 1e-9;
                assert_eq!(shared, dt.graph().has_edge(i, j), "pair ({i}, {j}) seed {seed}");
                assert_eq!(shared, cells[i].neighbors().any(|k| k == j));
            }
        }
        for c in &cells {
            assert!(c.contains(ps.point(c.nucleus())));
        }
    }
}

#[test]
fn single_point_cell_is_the_window() {
    let w = Window::cube(2, 0.0, 4.0).unwrap();
    let ps = PointSet::from_coords(vec![1.0, 3.0], w.clone(), None).unwrap();
    let cells = voronoi_cells(&ps).unwrap();
    assert_eq!(cells.len(), 1);
    assert!(cells[0].clipped());
    assert!((cells[0].area() - w.volume()).abs() < 1e-12);
}

#[test]
fn box_queries() {
    let ps = sample_poisson(1.0, &Window::cube(2, 0.0, 30.0).unwrap(), 4).unwrap();
    let cells = voronoi_cells(&ps).unwrap();
    let v = 7;
    let p = ps.point(v).to_vec();
    let hits = cells_intersecting_box(&ps, &cells, &[p[0] - 0.1, p[1] - 0.1], &[p[0] + 0.1, p[1] + 0.1]).unwrap();
    assert!(hits.contains(&v));
    // Every cell meeting a box is reached by the closest-nucleus map from some box point.
    let (lo, hi) = ([10.0, 12.0], [14.0, 15.0]);
    let hits = cells_intersecting_box(&ps, &cells, &lo, &hi).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..2000 {
        let q = [rng.random_range(lo[0]..hi[0]), rng.random_range(lo[1]..hi[1])];
        let nearest = (0..ps.len())
            .min_by(|&a, &b| {
                let da = (ps.point(a)[0] - q[0]).hypot(ps.point(a)[1] - q[1]);
                let db = (ps.point(b)[0] - q[0]).hypot(ps.point(b)[1] - q[1]);
                da.total_cmp(&db)
            })
            .unwrap();
        assert!(hits.contains(&nearest));
    }
    assert!(cells_intersecting_box(&ps, &cells, &[40.0, 40.0], &[41.0, 41.0]).is_err());
}

#[test]
fn same_input_same_triangulation() {
    let ps = sample_poisson(1.0, &Window::centered(2, 20.0).unwrap(), 77).unwrap();
    let a = build_delaunay(&ps).unwrap();
    let b = build_delaunay(&ps).unwrap();
    assert_eq!(a.simplices().collect::<Vec<_>>(), b.simplices().collect::<Vec<_>>());
    assert_eq!(a.graph(), b.graph());
}

#[test]
fn graph_text_round_trip() {
    let ps = sample_poisson(1.0, &Window::centered(2, 10.0).unwrap(), 2).unwrap();
    let g = build_delaunay(&ps).unwrap().into_graph();
    let mut buf = Vec::new();
    write_graph(&g, &mut buf).unwrap();
    assert_eq!(read_graph(buf.as_slice()).unwrap(), g);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn triangulation_invariants(n in 3usize..70, seed in any::<u64>()) {
        let ps = uniform_points(n, seed);
        let dt = build_delaunay(&ps).unwrap();
        let g = dt.graph();
        for v in 0..g.len() {
            prop_assert!(!g.neighbors(v).contains(&(v as u32)));
            for &w in g.neighbors(v) {
                prop_assert!(g.neighbors(w as usize).contains(&(v as u32)));
            }
        }
        // V - E + F = 2 with the outer face counted.
        let (v, e, f) = (g.len() as i64, g.edge_count() as i64, dt.simplex_count() as i64 + 1);
        prop_assert_eq!(v - e + f, 2);
        prop_assert_eq!(brute_force_violations(&ps, &dt), 0);
        prop_assert!(verify_empty_circumcircle(&dt).is_pass());
        let area: f64 = voronoi_cells_from_delaunay(&dt).iter().map(|c| c.area()).sum();
        prop_assert!((area - 100.0).abs() < 1e-8);
    }
}
