mod common;

use common::*;
use proptest::prelude::*;
use rcm_core::devices::{epsilon_hat, EpsilonMode};
use rcm_core::dynamics::{
    build_kernel, closed_aux_cutset, heat_bath_step, open_aux_path, pair_decode, pair_index,
    pair_y_marginals, resume_chain, run_chain, run_triple, triple_step, ChainState,
    EnhancementPlan, FkModel, KernelVariant, PlanKind, TripleState,
};
use rcm_core::graph::PathFinder;
use rcm_core::measure::tv_distance;
use rcm_core::{exact_fk, BoundaryPartition, Configuration, Error, ExactMeasure, FkParams, Graph};

/// Enhanced sets of size one and two.
fn enhanced_sets(m: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = (0..m).map(|e| vec![e]).collect();
    for a in 0..m {
        for b in a + 1..m {
            out.push(vec![a, b]);
        }
    }
    out
}

/// Some set C of auxiliary edges closed in z separates the endpoints of e once
/// C and e are removed from G ∪ α.
fn oracle_cutset(
    g: &Graph,
    alpha: &BoundaryPartition,
    aux: &[usize],
    z: &Configuration,
    e: usize,
) -> bool {
    let closed: Vec<usize> = aux.iter().copied().filter(|&f| !z.get(f)).collect();
    let all = wired_edges(g, alpha);
    let (a, b) = g.endpoints(e);
    (0..1u64 << closed.len()).any(|mask| {
        let removed: Vec<usize> = (0..closed.len())
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| closed[i])
            .collect();
        let kept: Vec<(usize, usize)> = all
            .iter()
            .enumerate()
            .filter(|&(f, _)| f != e && !removed.contains(&f))
            .map(|(_, &ab)| ab)
            .collect();
        let label = components(g.vertex_count(), &kept);
        label[a] != label[b]
    })
}

/// Some set P of auxiliary edges open in y joins the endpoints of e in G ∪ α.
fn oracle_path(
    g: &Graph,
    alpha: &BoundaryPartition,
    aux: &[usize],
    y: &Configuration,
    e: usize,
) -> bool {
    let open: Vec<usize> = aux.iter().copied().filter(|&f| y.get(f)).collect();
    let (a, b) = g.endpoints(e);
    (0..1u64 << open.len()).any(|mask| {
        let mut edges: Vec<(usize, usize)> = (0..open.len())
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| g.endpoints(open[i]))
            .collect();
        for block in alpha.blocks() {
            for w in block.windows(2) {
                edges.push((w[0], w[1]));
            }
        }
        let label = components(g.vertex_count(), &edges);
        label[a] == label[b]
    })
}

#[test]
fn cutset_and_path_match_subset_oracles() {
    let mut fixtures = small_fixtures();
    fixtures.push((
        "loop",
        Graph::new(3, vec![(0, 1), (1, 1), (1, 2), (2, 0)], [0, 2]).unwrap(),
    ));
    for (name, g) in fixtures {
        let m = g.edge_count();
        for (bname, alpha) in partitions(&g) {
            for enhanced in enhanced_sets(m) {
                for kind in [PlanKind::Below, PlanKind::Above] {
                    let plan = EnhancementPlan::unchecked(m, kind, enhanced.clone()).unwrap();
                    for i in 0..1u64 << m {
                        let c = Configuration::from_index(i, m);
                        for &e in &enhanced {
                            assert_eq!(
                                closed_aux_cutset(&g, &alpha, &plan, &c, e).unwrap(),
                                oracle_cutset(&g, &alpha, plan.aux_order(), &c, e),
                                "{name}/{bname} cutset e={e} {enhanced:?} {}",
                                c.to_bitstring()
                            );
                            assert_eq!(
                                open_aux_path(&g, &alpha, &plan, &c, e).unwrap(),
                                oracle_path(&g, &alpha, plan.aux_order(), &c, e),
                                "{name}/{bname} path e={e} {enhanced:?}"
                            );
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn device_events() {
    // square device: the three companions of edge 0 form a path
    let g = square();
    let free = BoundaryPartition::free(&g);
    let plan = EnhancementPlan::new(&g, &free, PlanKind::Above, vec![0]).unwrap();
    assert!(open_aux_path(
        &g,
        &free,
        &plan,
        &Configuration::from_bitstring("0111").unwrap(),
        0
    )
    .unwrap());
    assert!(!open_aux_path(
        &g,
        &free,
        &plan,
        &Configuration::from_bitstring("0101").unwrap(),
        0
    )
    .unwrap());
    assert!(matches!(
        open_aux_path(&g, &free, &plan, &Configuration::open(4), 1),
        Err(Error::Plan(_))
    ));
}

#[test]
fn single_edge_k_event() {
    let g = Graph::new(2, vec![(0, 1)], [0, 1]).unwrap();
    let open = Configuration::open(1);
    let free = rcm_core::dynamics::k_event(&g, &BoundaryPartition::free(&g), &open, 0).unwrap();
    let wired = rcm_core::dynamics::k_event(&g, &BoundaryPartition::wired(&g), &open, 0).unwrap();
    assert!(!free);
    assert!(wired);
}

#[test]
fn heat_bath_uses_the_k_threshold() {
    let g = triangle();
    let free = BoundaryPartition::free(&g);
    let params = FkParams::new(0.3, 0.5).unwrap();
    let model = FkModel::new(&g, &free, params).unwrap();
    let u = 0.5 * (params.p() + params.p_prime());
    // both other edges open: K holds, threshold p < u
    let mut s = ChainState::new(Configuration::from_bitstring("011").unwrap(), 0);
    heat_bath_step(&mut s, &model, 0, u).unwrap();
    assert!(!s.config.get(0));
    // one other edge open: no K, threshold p' > u
    let mut s = ChainState::new(Configuration::from_bitstring("010").unwrap(), 0);
    heat_bath_step(&mut s, &model, 0, u).unwrap();
    assert!(s.config.get(0));
    assert!(heat_bath_step(&mut s, &model, 0, 1.0).is_err());
    assert!(heat_bath_step(&mut s, &model, 3, 0.1).is_err());
}

#[test]
fn chain_replays_and_resumes() {
    let g = box2();
    let alpha = BoundaryPartition::wired(&g);
    let model = FkModel::new(&g, &alpha, FkParams::new(0.45, 2.0).unwrap()).unwrap();
    let a: Vec<ChainState> = run_chain(&model, Configuration::closed(4), 500, 11, 7)
        .unwrap()
        .collect();
    let b: Vec<ChainState> = run_chain(&model, Configuration::closed(4), 500, 11, 7)
        .unwrap()
        .collect();
    assert_eq!(a, b);
    assert_eq!(a[0].step, 0);
    assert_eq!(a.last().unwrap().step, 500);
    assert_eq!(a.len(), 1 + 500usize.div_ceil(7));
    let mid = run_chain(&model, Configuration::closed(4), 250, 11, 250)
        .unwrap()
        .last()
        .unwrap();
    let end = resume_chain(&model, mid, 250, 250).unwrap().last().unwrap();
    assert_eq!(end, a.last().unwrap().clone());
    let c: Vec<ChainState> = run_chain(&model, Configuration::closed(4), 500, 12, 7)
        .unwrap()
        .collect();
    assert_ne!(a, c);
}

#[test]
fn below_plan_with_cutset_opens_everywhere() {
    let g = triangle();
    let free = BoundaryPartition::free(&g);
    let params = FkParams::new(0.3, 0.5).unwrap();
    let model = FkModel::new(&g, &free, params).unwrap();
    let plan = EnhancementPlan::new(&g, &free, PlanKind::Below, vec![0]).unwrap();
    // edge 2 closed in Z: {2} is a closed auxiliary cutset for edge 0
    let mut s = TripleState::new(Configuration::from_bitstring("010").unwrap());
    let u = 0.5 * (params.p() + params.p_prime());
    triple_step(
        &model,
        &plan,
        &mut s,
        0,
        u,
        &[0.99, 0.99],
        &mut PathFinder::new(),
    )
    .unwrap();
    assert!(s.y.get(0) && s.x.get(0) && s.z.get(0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn triple_chain_keeps_order(
        fixture in 0usize..5,
        enhanced_bits in any::<u16>(),
        kind_below in any::<bool>(),
        p in 0.02f64..0.98,
        q_small in any::<bool>(),
        seed in any::<u64>(),
        x0 in any::<u16>(),
        lo in any::<u16>(),
        hi in any::<u16>(),
    ) {
        let g = match fixture {
            0 => triangle(),
            1 => square(),
            2 => theta(),
            3 => box2(),
            _ => box3(),
        };
        let m = g.edge_count();
        let alpha = if seed % 2 == 0 { BoundaryPartition::free(&g) } else { BoundaryPartition::wired(&g) };
        let kind = if kind_below { PlanKind::Below } else { PlanKind::Above };
        let enhanced: Vec<usize> = (0..m).filter(|&e| enhanced_bits >> e & 1 == 1).collect();
        let plan = EnhancementPlan::new(&g, &alpha, kind, enhanced);
        prop_assume!(plan.is_ok());
        let plan = plan.unwrap();
        let q = if q_small { 0.4 } else { 3.0 };
        let model = FkModel::new(&g, &alpha, FkParams::new(p, q).unwrap()).unwrap();
        let mask = (1u64 << m) - 1;
        let x = x0 as u64 & mask;
        let mut state = TripleState {
            y: Configuration::from_index(x & lo as u64, m),
            x: Configuration::from_index(x, m),
            z: Configuration::from_index((x | hi as u64) & mask, m),
            step: 0,
        };
        let mut rng = TestRng::new(seed);
        let mut finder = PathFinder::new();
        let mut aux = vec![0.0; plan.aux_order().len()];
        for t in 1..=2000u64 {
            state.step = t;
            let e = rng.below(m);
            let u = rng.uniform();
            aux.iter_mut().for_each(|a| *a = rng.uniform());
            prop_assert!(triple_step(&model, &plan, &mut state, e, u, &aux, &mut finder).is_ok());
        }
    }

    #[test]
    fn pair_codes_round_trip(m in 0usize..8, code in any::<u32>()) {
        let n = 3usize.pow(m as u32);
        let i = code as usize % n;
        let (y, z) = pair_decode(i, m);
        prop_assert!(y.le(&z));
        prop_assert_eq!(pair_index(&y, &z), i);
    }
}

#[test]
fn unit_q_collapses_the_triple() {
    let g = box2();
    let alpha = BoundaryPartition::free(&g);
    let m = g.edge_count();
    let model = FkModel::new(&g, &alpha, FkParams::new(0.4, 1.0).unwrap()).unwrap();
    for (kind, enhanced) in [(PlanKind::Below, vec![0]), (PlanKind::Above, vec![0])] {
        let plan = EnhancementPlan::new(&g, &alpha, kind, enhanced).unwrap();
        for seed in 0..20u64 {
            let mut rng = TestRng::new(seed);
            let mut state = TripleState {
                y: Configuration::closed(m),
                x: Configuration::from_index(rng.next_u64() & 0xf, m),
                z: Configuration::open(m),
                step: 0,
            };
            let mut touched = vec![false; m];
            let mut finder = PathFinder::new();
            let mut aux = vec![0.0; plan.aux_order().len()];
            for t in 1..=60u64 {
                state.step = t;
                let e = rng.below(m);
                touched[e] = true;
                if plan.is_enhanced(e) {
                    plan.aux_order().iter().for_each(|&f| touched[f] = true);
                }
                aux.iter_mut().for_each(|a| *a = rng.uniform());
                triple_step(
                    &model,
                    &plan,
                    &mut state,
                    e,
                    rng.uniform(),
                    &aux,
                    &mut finder,
                )
                .unwrap();
                if touched.iter().all(|&b| b) {
                    assert_eq!(state.y, state.x);
                    assert_eq!(state.x, state.z);
                }
            }
        }
    }
}

#[test]
fn four_by_four_star_run_has_no_violation() {
    let g = rcm_core::lattice_box(2, 4, false).unwrap();
    let alpha = BoundaryPartition::free(&g);
    let plan = rcm_core::devices::star_plan_z2(&g).unwrap().plan;
    let model = FkModel::new(&g, &alpha, FkParams::new(0.35, 0.5).unwrap()).unwrap();
    let last = run_triple(
        &model,
        &plan,
        Configuration::closed(g.edge_count()),
        100_000,
        5,
        100_000,
    )
    .unwrap()
    .last()
    .unwrap();
    assert_eq!(last.unwrap().step, 100_000);
}

#[test]
fn kernels_fix_the_fk_measure_on_the_triangle() {
    let g = triangle();
    let free = BoundaryPartition::free(&g);
    let params = FkParams::new(0.3, 0.5).unwrap();
    let model = FkModel::new(&g, &free, params).unwrap();
    let phi = exact_fk(&g, &free, params).unwrap();
    let plain = build_kernel(&model, KernelVariant::Plain).unwrap();
    assert!(plain.row_sum_error() < 1e-15);
    assert!(plain.residual(phi.weights()).unwrap() < 1e-10);
    for kind in [PlanKind::Below, PlanKind::Above] {
        let plan = EnhancementPlan::new(&g, &free, kind, vec![0]).unwrap();
        let k = build_kernel(&model, KernelVariant::Enhanced(&plan)).unwrap();
        assert!(k.row_sum_error() < 1e-14);
        assert!(k.residual(phi.weights()).unwrap() < 1e-10);
    }
}

#[test]
fn pair_kernel_marginal_on_the_triangle() {
    let g = triangle();
    let free = BoundaryPartition::free(&g);
    let params = FkParams::new(0.3, 0.5).unwrap();
    let model = FkModel::new(&g, &free, params).unwrap();
    let plan = EnhancementPlan::new(&g, &free, PlanKind::Below, vec![0]).unwrap();
    let k = build_kernel(&model, KernelVariant::Pair(&plan)).unwrap();
    assert_eq!(k.states(), 27);
    let dist = k.stationary(1e-13, 1_000_000).unwrap();
    let y = pair_y_marginals(&dist, 3);
    // edge 0 disconnects unless both companions are open at max(p, p')
    let eps = params.gap() * (1.0 - params.max().powi(2));
    assert!((y[0] - (params.p() + eps)).abs() < 1e-9);
    assert!((y[1] - params.p()).abs() < 1e-9);
    assert!((y[2] - params.p()).abs() < 1e-9);
}

/// Batch-means estimate of a stationary mean.
fn batch_means(values: &[f64], batches: usize) -> (f64, f64) {
    let size = values.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| values[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let mean = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}

#[test]
fn long_run_marginals() {
    let g = triangle();
    let free = BoundaryPartition::free(&g);
    let params = FkParams::new(0.3, 0.5).unwrap();
    let model = FkModel::new(&g, &free, params).unwrap();
    let plan = EnhancementPlan::new(&g, &free, PlanKind::Below, vec![0]).unwrap();
    let steps = 400_000u64;
    let mut y0 = Vec::with_capacity(steps as usize);
    let mut counts = vec![0.0; 8];
    for s in run_triple(&model, &plan, Configuration::closed(3), steps, 99, 1)
        .unwrap()
        .skip(1000)
    {
        let s = s.unwrap();
        y0.push(s.y.get(0) as u8 as f64);
        counts[s.x.to_index() as usize] += 1.0;
    }
    let (mean, se) = batch_means(&y0, 50);
    let target = params.p()
        + epsilon_hat(&g, &free, &plan, 0, params, EpsilonMode::Exact)
            .unwrap()
            .value;
    assert!(
        (mean - target).abs() < 3.0 * se,
        "mean {mean} target {target} se {se}"
    );
    let total: f64 = counts.iter().sum();
    counts.iter_mut().for_each(|c| *c /= total);
    let phi = exact_fk(&g, &free, params).unwrap();
    let empirical = ExactMeasure::from_weights(3, counts, phi.fingerprint()).unwrap();
    assert!(tv_distance(&phi, &empirical).unwrap() < 0.05);
}

#[test]
fn plan_errors() {
    let g = triangle();
    let free = BoundaryPartition::free(&g);
    assert!(matches!(
        EnhancementPlan::new(&g, &free, PlanKind::Below, vec![0, 1, 2]),
        Err(Error::Plan(_))
    ));
    assert!(matches!(
        EnhancementPlan::unchecked(3, PlanKind::Below, vec![3]),
        Err(Error::Plan(_))
    ));
    assert!(matches!(
        EnhancementPlan::unchecked(3, PlanKind::Below, vec![1, 1]),
        Err(Error::Plan(_))
    ));
    // a bridge has no auxiliary path
    let p = path(3);
    assert!(matches!(
        EnhancementPlan::new(&p, &BoundaryPartition::free(&p), PlanKind::Above, vec![0]),
        Err(Error::Plan(_))
    ));
    // wiring the ends gives edge 0 a detour through edge 1
    assert!(
        EnhancementPlan::new(&p, &BoundaryPartition::wired(&p), PlanKind::Above, vec![0]).is_ok()
    );
}
