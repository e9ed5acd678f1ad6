mod common;

use common::*;
use rcm_core::devices::{
    enhanced_product, epsilon_bounds, epsilon_hat, epsilon_table, epsilon_tilde, greedy_packing,
    square_plan_z2, star_plan_z2, Device, DeviceKind, EpsilonMode,
};
use rcm_core::dynamics::{EnhancementPlan, PlanKind};
use rcm_core::{lattice_box, BoundaryPartition, Error, FkParams, Graph, LatticeBox};

const PS: [f64; 3] = [0.15, 0.25, 0.4];
const QS: [f64; 4] = [0.3, 0.5, 2.0, 5.0];

#[test]
fn star_plan_on_three_by_three_has_the_centre_device() {
    let g = box3();
    let dp = star_plan_z2(&g).unwrap();
    assert_eq!(dp.devices.len(), 1);
    assert_eq!(dp.plan.enhanced().len(), 1);
    let lb = LatticeBox::recognize_square(&g).unwrap();
    let centre = lb.vertex(&[1, 1]);
    let d = &dp.devices[0];
    assert_eq!(d.edges.len(), 4);
    assert!(d.edges.iter().all(|&e| {
        let (a, b) = g.endpoints(e);
        a == centre || b == centre
    }));
}

#[test]
fn square_plan_on_three_by_three() {
    let g = box3();
    let dp = square_plan_z2(&g).unwrap();
    // unit squares with an even lower-left corner: (0,0) and (1,1)
    assert_eq!(dp.devices.len(), 2);
    assert_eq!(dp.plan.kind(), PlanKind::Above);
    assert!(dp.devices.iter().all(|d| d.edges.len() == 4));
}

#[test]
fn small_boxes_warn() {
    let g = lattice_box(2, 2, false).unwrap();
    let dp = star_plan_z2(&g).unwrap();
    assert!(dp.devices.is_empty());
    assert!(dp.warning.is_some());
}

#[test]
fn star_enhanced_edges_never_touch() {
    for n in 3..=8 {
        let g = lattice_box(2, n, false).unwrap();
        let dp = star_plan_z2(&g).unwrap();
        let enhanced = dp.plan.enhanced();
        for (i, &a) in enhanced.iter().enumerate() {
            let (a0, a1) = g.endpoints(a);
            for &b in &enhanced[i + 1..] {
                let (b0, b1) = g.endpoints(b);
                assert!(a0 != b0 && a0 != b1 && a1 != b0 && a1 != b1, "n={n}");
            }
            assert!(!(g.is_boundary(a0) && g.is_boundary(a1)));
        }
        // devices are pairwise edge-disjoint
        let mut seen = vec![false; g.edge_count()];
        for d in &dp.devices {
            for &e in &d.edges {
                assert!(!seen[e]);
                seen[e] = true;
            }
        }
    }
}

#[test]
fn square_plan_leaves_complement_connected() {
    for n in 3..=8 {
        let g = lattice_box(2, n, false).unwrap();
        let dp = square_plan_z2(&g).unwrap();
        let kept: Vec<(usize, usize)> = (0..g.edge_count())
            .filter(|&e| !dp.plan.is_enhanced(e))
            .map(|e| g.endpoints(e))
            .collect();
        assert_eq!(component_count(g.vertex_count(), &kept), 1, "n={n}");
    }
}

#[test]
fn non_boxes_are_rejected() {
    let g = triangle();
    assert!(star_plan_z2(&g).is_err());
    assert!(square_plan_z2(&lattice_box(3, 3, false).unwrap()).is_err());
}

#[test]
fn triangle_closed_forms() {
    let g = Graph::new(3, vec![(0, 1), (1, 2), (2, 0)], []).unwrap();
    let free = BoundaryPartition::free(&g);
    for p in PS {
        for q in QS {
            let params = FkParams::new(p, q).unwrap();
            let below = EnhancementPlan::new(&g, &free, PlanKind::Below, vec![0]).unwrap();
            let above = EnhancementPlan::new(&g, &free, PlanKind::Above, vec![0]).unwrap();
            let hat = epsilon_hat(&g, &free, &below, 0, params, EpsilonMode::Exact).unwrap();
            let tilde = epsilon_tilde(&g, &free, &above, 0, params, EpsilonMode::Exact).unwrap();
            assert!((hat.value - params.gap() * (1.0 - params.max().powi(2))).abs() < 1e-15);
            assert!((tilde.value - params.gap() * params.min().powi(2)).abs() < 1e-15);
            assert_eq!(hat.std_error, 0.0);
        }
    }
}

#[test]
fn bridge_gets_the_full_gap() {
    let g = path(4);
    let free = BoundaryPartition::free(&g);
    let plan = EnhancementPlan::new(&g, &free, PlanKind::Below, vec![1]).unwrap();
    for p in PS {
        for q in QS {
            let params = FkParams::new(p, q).unwrap();
            let hat = epsilon_hat(&g, &free, &plan, 1, params, EpsilonMode::Exact).unwrap();
            assert!((hat.value - (params.p_prime() - p).abs()).abs() < 1e-14);
        }
    }
}

#[test]
fn device_lower_bounds_hold_on_boxes() {
    for n in 3..=5 {
        let g = lattice_box(2, n, false).unwrap();
        let star = star_plan_z2(&g).unwrap();
        let square = square_plan_z2(&g).unwrap();
        for alpha in [BoundaryPartition::free(&g), BoundaryPartition::wired(&g)] {
            for p in PS {
                for q in QS {
                    let params = FkParams::new(p, q).unwrap();
                    let gap = params.gap();
                    for (e, est) in
                        epsilon_table(&g, &alpha, &star.plan, params, EpsilonMode::Exact).unwrap()
                    {
                        assert!(
                            est.value >= gap * (1.0 - params.max()).powi(3) - 1e-15,
                            "star n={n} e={e}"
                        );
                        assert!(est.value <= gap + 1e-15);
                    }
                    for (e, est) in
                        epsilon_table(&g, &alpha, &square.plan, params, EpsilonMode::Exact).unwrap()
                    {
                        assert!(
                            est.value >= gap * params.min().powi(3) - 1e-15,
                            "square n={n} e={e}"
                        );
                        assert!(est.value <= gap + 1e-15);
                    }
                }
            }
        }
    }
}

#[test]
fn bounds_example() {
    let params = FkParams::new(0.2, 0.5).unwrap();
    let (hat, tilde) = epsilon_bounds(params, 4, 4).unwrap();
    let gap = 1.0 / 3.0 - 0.2;
    assert!((hat - gap * (2.0f64 / 3.0).powi(3)).abs() < 1e-15);
    assert!((hat - (2.0 / 15.0) * (2.0f64 / 3.0).powi(3)).abs() < 1e-15);
    assert!((tilde - gap * 0.2f64.powi(3)).abs() < 1e-15);
    assert!(matches!(
        epsilon_bounds(params, 1, 4),
        Err(Error::Parameter(_))
    ));
}

#[test]
fn monte_carlo_tracks_exact() {
    let g = box3();
    let free = BoundaryPartition::free(&g);
    let plan = square_plan_z2(&g).unwrap().plan;
    let params = FkParams::new(0.3, 0.5).unwrap();
    let exact = epsilon_table(&g, &free, &plan, params, EpsilonMode::Exact).unwrap();
    let mc = epsilon_table(
        &g,
        &free,
        &plan,
        params,
        EpsilonMode::MonteCarlo {
            samples: 50_000,
            seed: 8,
        },
    )
    .unwrap();
    for ((e1, a), (e2, b)) in exact.iter().zip(&mc) {
        assert_eq!(e1, e2);
        assert!(b.std_error > 0.0);
        assert!((a.value - b.value).abs() < 4.0 * b.std_error + 1e-12);
    }
    let again = epsilon_table(
        &g,
        &free,
        &plan,
        params,
        EpsilonMode::MonteCarlo {
            samples: 50_000,
            seed: 8,
        },
    )
    .unwrap();
    assert_eq!(mc, again);
}

#[test]
fn enhanced_product_directions() {
    let g = triangle();
    let free = BoundaryPartition::free(&g);
    let plan = EnhancementPlan::new(&g, &free, PlanKind::Below, vec![0]).unwrap();
    let small_q = FkParams::new(0.3, 0.5).unwrap();
    let eps = epsilon_table(&g, &free, &plan, small_q, EpsilonMode::Exact).unwrap();
    let (probs, lower) = enhanced_product(&plan, small_q, &eps);
    assert!(lower);
    assert!((probs[0] - (0.3 + eps[0].1.value)).abs() < 1e-15);
    assert_eq!(probs[1], 0.3);
    let big_q = FkParams::new(0.3, 2.0).unwrap();
    let eps = epsilon_table(&g, &free, &plan, big_q, EpsilonMode::Exact).unwrap();
    let (probs, lower) = enhanced_product(&plan, big_q, &eps);
    assert!(!lower);
    assert!((probs[0] - (0.3 - eps[0].1.value)).abs() < 1e-15);
    assert_eq!(probs[2], 0.3);
}

/// All stars at interior vertices of a box, enhanced along +x.
fn interior_stars(g: &Graph) -> Vec<Device> {
    let lb = LatticeBox::recognize_square(g).unwrap();
    (0..g.vertex_count())
        .filter(|&v| !g.is_boundary(v))
        .map(|v| {
            let edges = g.incident(v).iter().map(|&(e, _)| e).collect();
            Device::new(lb.edge_towards(v, 0).unwrap(), edges)
        })
        .collect()
}

#[test]
fn greedy_packing_covers_the_box() {
    let g = lattice_box(2, 5, false).unwrap();
    let candidates = interior_stars(&g);
    // star devices have edge diameter 2 (two edges through the centre)
    let diameter = 2;
    for k in 1..=4 {
        let packing = greedy_packing(&g, 0, k, DeviceKind::Star, &candidates).unwrap();
        let devices = &packing.plan.devices;
        assert!(!devices.is_empty());
        let mut used = vec![false; g.edge_count()];
        for d in devices {
            for &e in &d.edges {
                assert!(!used[e], "devices overlap");
                used[e] = true;
            }
        }
        let radius = packing.covering_radius.unwrap();
        assert!(radius <= k + diameter, "K={k} radius={radius}");
        assert_eq!(packing.plan.max_degree, Some(4));
    }
}

#[test]
fn greedy_packing_edge_cases() {
    let g = lattice_box(2, 4, false).unwrap();
    let none = greedy_packing(&g, 0, 2, DeviceKind::Cycle, &[]).unwrap();
    assert!(none.plan.devices.is_empty());
    assert!(none.plan.warning.is_some());
    assert!(matches!(
        greedy_packing(&g, 0, 0, DeviceKind::Star, &[]),
        Err(Error::Parameter(_))
    ));
    let bad = Device::new(0, vec![1, 2]);
    assert!(matches!(
        greedy_packing(&g, 0, 1, DeviceKind::Star, &[bad]),
        Err(Error::InvalidCandidate(_))
    ));
}
