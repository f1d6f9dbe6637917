mod common;

use std::collections::VecDeque;

use delwalk_core::geometry::voronoi_cells_from_delaunay;
use delwalk_core::partition::{
    classify_boxes, cluster_components, degree_cap, good_points, hole_diameter_stats, sample_poisson_field,
    volume_growth_report, GoodBoxField,
};
use delwalk_core::pointproc::{sample_poisson, Window};
use proptest::prelude::*;

use common::poisson_graph;

fn poisson_cdf(mean: f64, k: u64) -> f64 {
    let mut term = (-mean).exp();
    let mut sum = term;
    for j in 1..=k {
        term *= mean / j as f64;
        sum += term;
    }
    sum
}

/// Components of `member` on a `side × side` grid, with 8-neighbour adjacency when
/// `diagonal` is set and 4-neighbour adjacency otherwise.
fn components(side: usize, member: &[bool], diagonal: bool) -> Vec<Vec<usize>> {
    let mut seen = vec![false; member.len()];
    let mut out = Vec::new();
    for start in 0..member.len() {
        if !member[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (r, c) = ((i / side) as i64, (i % side) as i64);
            for dr in -1..=1i64 {
                for dc in -1..=1i64 {
                    if (dr == 0 && dc == 0) || (!diagonal && dr != 0 && dc != 0) {
                        continue;
                    }
                    let (nr, nc) = (r + dr, c + dc);
                    if nr < 0 || nc < 0 || nr >= side as i64 || nc >= side as i64 {
                        continue;
                    }
                    let j = nr as usize * side + nc as usize;
                    if member[j] && !seen[j] {
                        seen[j] = true;
                        comp.push(j);
                        queue.push_back(j);
                    }
                }
            }
        }
        out.push(comp);
    }
    out
}

#[test]
fn box_side_in_the_plane() {
    let ps = sample_poisson(1.0, &Window::centered(2, 200.0).unwrap(), 1).unwrap();
    let field = classify_boxes(&ps, 10.0, 2.0).unwrap();
    assert_eq!(field.k(), 50.0);
    assert_eq!(field.subbox_count(), 25);
    assert!(classify_boxes(&ps, 60.0, 2.0).is_err());
}

#[test]
fn classification_matches_direct_recount() {
    let ps = sample_poisson(1.0, &Window::centered(2, 100.0).unwrap(), 9).unwrap();
    let (s, alpha) = (4.0, 2.0);
    let field = classify_boxes(&ps, s, alpha).unwrap();
    let k = 5.0 * s;
    for idx in 0..field.len() {
        let z = field.z_of(idx);
        let mut nice = true;
        for a in 0..5 {
            for b in 0..5 {
                let lo = [z[0] as f64 * k - k / 2.0 + a as f64 * s, z[1] as f64 * k - k / 2.0 + b as f64 * s];
                let n = ps
                    .iter()
                    .filter(|p| p[0] >= lo[0] && p[0] < lo[0] + s && p[1] >= lo[1] && p[1] < lo[1] + s)
                    .count();
                nice &= n >= 1 && n as f64 <= alpha * s * s;
            }
        }
        assert_eq!(field.is_nice(idx), nice, "box {z:?}");
        let good = (-1..=1).all(|dx| {
            (-1..=1).all(|dy| field.index_of(&[z[0] + dx, z[1] + dy]).is_some_and(|j| field.is_nice(j)))
        });
        assert_eq!(field.is_good(idx), good);
    }
}

#[test]
fn nice_frequency_matches_poisson_law() {
    let (s, alpha) = (3.0, 2.0);
    let mean = s * s;
    let p_sub = poisson_cdf(mean, (alpha * s * s) as u64) - (-mean).exp();
    let oracle = p_sub.powi(25);
    let (mut nice, mut total) = (0usize, 0usize);
    for seed in 0..3 {
        let ps = sample_poisson(1.0, &Window::centered(2, 240.0).unwrap(), 40 + seed).unwrap();
        let f = classify_boxes(&ps, s, alpha).unwrap();
        nice += (0..f.len()).filter(|&i| f.is_nice(i)).count();
        total += f.len();
    }
    let got = nice as f64 / total as f64;
    let se = (oracle * (1.0 - oracle) / total as f64).sqrt();
    assert!((got - oracle).abs() < 4.0 * se, "nice fraction {got} vs {oracle}");
}

#[test]
fn cluster_fraction_grows_with_subbox_side() {
    let mean_fraction = |s: f64| {
        let total: f64 = (0..50)
            .map(|seed| {
                let f = sample_poisson_field(2, s, 2.0, 1.0, 10, 700 + seed).unwrap();
                let d = cluster_components(&f, 10).unwrap();
                d.cluster_size() as f64 / d.grid_len() as f64
            })
            .sum();
        total / 50.0
    };
    // At s >= 5 almost every box is nice and the fraction saturates at the share of
    // boxes away from the grid boundary.
    let f: Vec<f64> = [2.0, 3.0, 4.0, 5.0, 10.0].iter().map(|&s| mean_fraction(s)).collect();
    assert!(f[0] < f[1] && f[1] < f[2] && f[2] <= f[3] && f[3] <= f[4], "{f:?}");
    assert!((f[4] - (19.0f64 / 21.0).powi(2)).abs() < 1e-12);
}

#[test]
fn good_points_are_connected_and_degree_bounded() {
    let (s, alpha) = (3.0, 2.5);
    for seed in 0..5 {
        let (ps, dt) = poisson_graph(60.0, 300 + seed);
        let cells = voronoi_cells_from_delaunay(&dt);
        let field = classify_boxes(&ps, s, alpha).unwrap();
        let decomp = cluster_components(&field, field.max_radius().unwrap()).unwrap();
        let gp = good_points(&decomp, &ps, &cells).unwrap();
        assert!(gp.good_count() > 0);
        assert!(dt.graph().is_connected_on(&gp.good), "seed {seed}");
        assert!(dt.graph().is_connected_on(&gp.filled));
        let cap = degree_cap(2, s, alpha);
        for v in gp.good_indices() {
            assert!(dt.graph().degree(v) as f64 <= cap);
            assert!(gp.filled[v]);
        }
        // Any nucleus lying in a cluster box is good.
        for v in 0..ps.len() {
            let p = ps.point(v);
            let z: Vec<i64> = p.iter().map(|c| (c / decomp.k()).round() as i64).collect();
            if decomp.index_of(&z).is_some_and(|i| decomp.in_cluster(i)) {
                assert!(gp.good[v]);
            }
        }
    }
}

#[test]
fn good_points_reject_foreign_cells() {
    let (ps, dt) = poisson_graph(60.0, 1);
    let field = classify_boxes(&ps, 3.0, 2.5).unwrap();
    let decomp = cluster_components(&field, 3).unwrap();
    let (ps2, _) = poisson_graph(50.0, 1);
    assert!(good_points(&decomp, &ps2, &voronoi_cells_from_delaunay(&dt)).is_err());
}

#[test]
fn volume_growth_is_stable_across_radii() {
    let (s, alpha) = (3.0, 2.5);
    let (ps, dt) = poisson_graph(260.0, 5);
    let cells = voronoi_cells_from_delaunay(&dt);
    let field = classify_boxes(&ps, s, alpha).unwrap();
    let decomps: Vec<_> = [4, 8, 16].iter().map(|&l| cluster_components(&field, l).unwrap()).collect();
    let points: Vec<_> = decomps.iter().map(|d| good_points(d, &ps, &cells).unwrap()).collect();
    let levels: Vec<_> = decomps.iter().zip(&points).collect();
    let report = volume_growth_report(&levels, dt.graph()).unwrap();
    let cap = degree_cap(2, s, alpha);
    for e in &report.entries {
        assert!(e.degree_sum >= e.cluster_boxes);
        assert!(e.degree_sum as f64 <= cap * e.good_points as f64);
    }
    assert!(!report.drift, "spread {:?}", report.ratio_spread);
    assert!(report.ratio_spread.is_some());
    assert!(volume_growth_report(&levels[..1], dt.graph()).is_err());

    let stats = hole_diameter_stats(&decomps).unwrap();
    assert_eq!(stats.iter().map(|p| p.0).collect::<Vec<_>>(), vec![4, 8, 16]);
    assert!(hole_diameter_stats(&decomps[..1]).is_err());
}

fn random_field(r: i64, alpha: f64, bits: &[u8]) -> GoodBoxField {
    // Each box gets one of four sub-box patterns: all ok, an empty sub-box, an
    // overfull sub-box, or a sub-box exactly at the cap.
    let side = (2 * r + 1) as usize;
    let cap = (alpha * 4.0) as u32;
    let mut counts = Vec::with_capacity(side * side * 25);
    for i in 0..side * side {
        let mut c = vec![2u32; 25];
        match bits[i % bits.len()] % 4 {
            1 => c[7] = 0,
            2 => c[3] = cap + 1,
            3 => c[11] = cap,
            _ => {}
        }
        counts.extend(c);
    }
    GoodBoxField::from_counts(2, 2.0, alpha, vec![-r; 2], vec![side; 2], counts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cluster_and_holes_partition_the_grid(r in 1i64..7, bits in prop::collection::vec(0u8..8, 1..60)) {
        let field = random_field(r, 2.0, &bits);
        let d = cluster_components(&field, r).unwrap();
        let side = d.side();
        let n = d.grid_len();
        let mut covered = vec![0u8; n];
        for i in 0..n {
            if d.in_cluster(i) {
                covered[i] += 1;
                prop_assert!(field.is_good(field.index_of(&d.z_of(i)).unwrap()));
                prop_assert_eq!(d.hole_id(i), None);
            }
        }
        for h in d.holes() {
            for &i in &h.boxes {
                covered[i] += 1;
            }
            let touches = h.boxes.iter().any(|&i| d.z_of(i).iter().any(|c| c.abs() == r));
            prop_assert_eq!(h.enclosed, !touches);
        }
        prop_assert!(covered.iter().all(|&c| c == 1));

        // Largest ℓ1 component of good boxes, recomputed.
        let good: Vec<bool> = (0..n).map(|i| field.is_good(field.index_of(&d.z_of(i)).unwrap())).collect();
        let best = components(side, &good, false).iter().map(|c| c.len()).max().unwrap_or(0);
        prop_assert_eq!(d.cluster_size(), best);
        let complement: Vec<bool> = (0..n).map(|i| !d.in_cluster(i)).collect();
        prop_assert_eq!(components(side, &complement, true).len(), d.holes().len());
        prop_assert!(d.filled_size() >= d.cluster_size());
    }

    #[test]
    fn goodness_implies_niceness_and_larger_alpha_keeps_niceness(
        r in 1i64..5, bits in prop::collection::vec(0u8..8, 1..40)
    ) {
        let f = random_field(r, 2.0, &bits);
        let looser = {
            let counts: Vec<u32> = (0..f.len()).flat_map(|i| f.subbox_counts(i).to_vec()).collect();
            GoodBoxField::from_counts(2, 2.0, 3.0, f.zlo().to_vec(), f.shape().to_vec(), counts).unwrap()
        };
        for i in 0..f.len() {
            if f.is_good(i) {
                prop_assert!(f.is_nice(i));
            }
            if f.is_nice(i) {
                prop_assert!(f.subbox_counts(i).iter().all(|&c| c >= 1 && c as f64 <= 8.0));
                prop_assert!(looser.is_nice(i));
            }
        }
    }
}
