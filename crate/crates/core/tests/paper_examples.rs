//! Worked examples with frozen expected values: the one-edge ultragraph
//! into a family of sinks, the eight-vertex stabilizer graph, and the
//! small branching-cycle graph.

mod common;

use std::collections::BTreeSet;

use common::*;
use ushift_core::boundary::{
    basis_intersect, decompose_to_semiring, in_region, region_xa, region_xc, semiring_diff,
    theta_apply, theta_apply_cyl, BoundaryPoint, Cylinder, GroupWord, Ultrapath,
};
use ushift_core::dynamics::{
    check_condition_l, check_orbit_equivalence, classify_isolated, classify_isolated_ray,
    find_cycles, has_exit, shift, shift_n, stabilizers, BlockMap, CocycleTable, ConditionL,
    ExitWitness, GroupoidElement, IsolationReason, OrbitCheckConfig, Subgroup,
};
use ushift_core::kms::{
    beta_sweep, build_constraints, kappa, mu, solve_kms, solve_ground, verify_m,
    ConstraintKind, EdgeWeights, KmsOutcome, MFunction, Q, SweepEntry, VarKind, WeightsAtBeta,
};
use ushift_core::symbolic::{Cardinality, Ref, SymbolicVertexSet};
use ushift_core::ultragraph::Ultragraph;

fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

fn sink_weights() -> EdgeWeights {
    let mut w = EdgeWeights::default();
    w.by_decl.insert(sym("e"), q(2, 1));
    w
}

// --- shift map ---------------------------------------------------------

#[test]
fn shift_drops_one_edge_and_ends_at_the_pair() {
    let g = sink_range_graph();
    let re = g.edge_range(&Ref::named("e")).unwrap();
    let x = BoundaryPoint::finite(
        &g,
        Ultrapath::new(&g, vec![Ref::named("e")], re.clone()).unwrap(),
    )
    .unwrap();
    let sx = shift(&g, &x).unwrap();
    let zero = BoundaryPoint::finite(&g, Ultrapath::zero(&g, re).unwrap()).unwrap();
    assert_eq!(sx, zero);
    // Undefined one step further.
    assert!(shift(&g, &sx).is_err());
    // shift_n with n = 0 is the identity.
    assert_eq!(shift_n(&g, &x, 0).unwrap(), x);
}

#[test]
fn shift_rotates_a_periodic_point() {
    let g = stabilizer_graph();
    let x = BoundaryPoint::eventually_periodic(
        &g,
        vec![],
        vec![Ref::named("d"), Ref::named("e"), Ref::named("f")],
    )
    .unwrap();
    let mut cur = x.clone();
    // Compare against explicit prefix expansion three cycle lengths deep.
    for start in 0..9usize {
        let expanded: Vec<_> = (0..9).map(|i| x.edge_at(start + i).unwrap().clone()).collect();
        let got: Vec<_> = (0..9).map(|i| cur.edge_at(i).unwrap().clone()).collect();
        assert_eq!(got, expanded, "rotation mismatch after {start} shifts");
        cur = shift(&g, &cur).unwrap();
    }
}

// --- cycles, exits, Condition (L) --------------------------------------

#[test]
fn branching_graph_cycles_and_exits() {
    let g = branching_cycle_graph();
    let cycles = find_cycles(&g, 2, 0);
    let ef1: Vec<_> = vec![Ref::named("e"), Ref::named("f1")];
    let f1e: Vec<_> = vec![Ref::named("f1"), Ref::named("e")];
    assert!(cycles
        .iter()
        .any(|c| c.path.edges() == ef1 && c.simple && c.path.range() == &named_set(&["v0"])));
    assert!(cycles
        .iter()
        .any(|c| c.path.edges() == f1e && c.simple && c.path.range() == &named_set(&["v1", "v2"])));

    // The doubled cycle shows up at length four and is not simple.
    let cycles4 = find_cycles(&g, 4, 0);
    let doubled: Vec<_> = vec![
        Ref::named("e"),
        Ref::named("f1"),
        Ref::named("e"),
        Ref::named("f1"),
    ];
    assert!(cycles4.iter().any(|c| c.path.edges() == doubled && !c.simple));

    // The sink v2 inside r(e) is an exit of both simple cycles.
    match has_exit(&g, &f1e) {
        Some(ExitWitness::Sink { vertex, .. }) => assert_eq!(vertex, Ref::named("v2")),
        other => panic!("expected sink exit, got {other:?}"),
    }
    assert!(has_exit(&g, &ef1).is_some());
}

#[test]
fn single_loop_has_no_exit_and_fails_condition_l() {
    let g = exitless_loop_graph();
    assert!(has_exit(&g, &[Ref::named("e0")]).is_none());
    match check_condition_l(&g, 4, 0) {
        ConditionL::Fails { cycle } => assert_eq!(cycle, vec![Ref::named("e0")]),
        other => panic!("expected failure, got {other:?}"),
    }
}

#[test]
fn condition_l_holds_for_the_branching_graph() {
    assert_eq!(check_condition_l(&branching_cycle_graph(), 4, 0), ConditionL::Holds);
    // The stabilizer graph has the exitless cycle d e f.
    match check_condition_l(&stabilizer_graph(), 4, 0) {
        ConditionL::Fails { cycle } => {
            assert_eq!(cycle.len(), 3);
            assert!(cycle.contains(&Ref::named("d")));
        }
        other => panic!("expected failure, got {other:?}"),
    }
}

// --- stabilizers --------------------------------------------------------

#[test]
fn stabilizers_of_the_two_worked_points() {
    let g = stabilizer_graph();
    let abc: Vec<_> = vec![Ref::named("a1"), Ref::named("a2"), Ref::named("a3")];
    let x = BoundaryPoint::eventually_periodic(
        &g,
        abc.clone(),
        vec![Ref::named("b"), Ref::named("c")],
    )
    .unwrap();
    let sx = stabilizers(&g, &x);
    assert_eq!(sx.stab, Subgroup(2));
    assert_eq!(sx.stab_min, Some(2));
    assert_eq!(sx.stab_ess, Subgroup(0));
    assert_eq!(sx.stab_ess_min, None);

    let mut prefix = abc;
    prefix.push(Ref::named("b"));
    prefix.push(Ref::named("c"));
    let y = BoundaryPoint::eventually_periodic(
        &g,
        prefix,
        vec![Ref::named("d"), Ref::named("e"), Ref::named("f")],
    )
    .unwrap();
    let sy = stabilizers(&g, &y);
    assert_eq!(sy.stab, Subgroup(3));
    assert_eq!(sy.stab_min, Some(3));
    assert_eq!(sy.stab_ess, Subgroup(3));
    assert_eq!(sy.stab_ess_min, Some(3));
}

#[test]
fn finite_points_have_trivial_stabilizers() {
    let g = sink_range_graph();
    let p = BoundaryPoint::finite(
        &g,
        Ultrapath::new(
            &g,
            vec![Ref::named("e")],
            SymbolicVertexSet::singleton(&Ref::indexed("w", 2)),
        )
        .unwrap(),
    )
    .unwrap();
    let s = stabilizers(&g, &p);
    assert_eq!(s.stab, Subgroup(0));
    assert_eq!(s.stab_min, None);
    assert_eq!(s.stab_ess, Subgroup(0));
    assert_eq!(s.stab_ess_min, None);
}

#[test]
fn doubled_cycle_storage_canonicalizes_to_the_primitive_root() {
    let g = stabilizer_graph();
    let b = Ref::named("b");
    let c = Ref::named("c");
    let x1 = BoundaryPoint::eventually_periodic(&g, vec![], vec![b.clone(), c.clone()]).unwrap();
    let x2 = BoundaryPoint::eventually_periodic(
        &g,
        vec![b.clone()],
        vec![c.clone(), b.clone(), c.clone(), b.clone()],
    )
    .unwrap();
    assert_eq!(x1, x2);
    assert_eq!(stabilizers(&g, &x2).stab_min, Some(2));
}

// --- isolated points ----------------------------------------------------

#[test]
fn isolated_point_classification() {
    let g = stabilizer_graph();
    // u2 is regular, not a sink, so (a1, {u2}) is not a boundary point.
    let bad = Ultrapath::new(
        &g,
        vec![Ref::named("a1")],
        SymbolicVertexSet::singleton(&Ref::named("u2")),
    )
    .unwrap();
    assert!(BoundaryPoint::finite(&g, bad).is_err());

    let g2 = sink_range_graph();
    let sinkp = BoundaryPoint::finite(
        &g2,
        Ultrapath::new(
            &g2,
            vec![Ref::named("e")],
            SymbolicVertexSet::singleton(&Ref::indexed("w", 4)),
        )
        .unwrap(),
    )
    .unwrap();
    let iso = classify_isolated(&g2, &sinkp);
    assert!(iso.isolated);
    assert_eq!(iso.reason, IsolationReason::EventualSink);

    // Eventually periodic with the exitless cycle d e f: isolated.
    let y = BoundaryPoint::eventually_periodic(
        &g,
        vec![],
        vec![Ref::named("d"), Ref::named("e"), Ref::named("f")],
    )
    .unwrap();
    assert!(classify_isolated(&g, &y).isolated);

    // Eventually periodic over the cycle b c, which has an exit: not.
    let x = BoundaryPoint::eventually_periodic(
        &g,
        vec![Ref::named("a1"), Ref::named("a2"), Ref::named("a3")],
        vec![Ref::named("b"), Ref::named("c")],
    )
    .unwrap();
    let iso = classify_isolated(&g, &x);
    assert!(!iso.isolated);
    assert!(matches!(iso.reason, IsolationReason::CycleWithExit(_)));

    // A length-zero point at a minimal sink is not isolated.
    let re = g2.edge_range(&Ref::named("e")).unwrap();
    let zero = BoundaryPoint::finite(&g2, Ultrapath::zero(&g2, re).unwrap()).unwrap();
    assert!(!classify_isolated(&g2, &zero).isolated);
}

#[test]
fn family_ray_isolation() {
    let g = emitter_with_sink_graph();
    // The chain m[0] -> m[1] -> ... is single-ranged and single-emitting.
    let iso = classify_isolated_ray(&g, &[], &sym("f"), 0).unwrap();
    assert!(iso.isolated);
    assert_eq!(iso.reason, IsolationReason::NonWanderingTail);
}

// --- groupoid elements --------------------------------------------------

#[test]
fn groupoid_units_inverses_and_composition() {
    let g = stabilizer_graph();
    let x = BoundaryPoint::eventually_periodic(
        &g,
        vec![Ref::named("a1"), Ref::named("a2"), Ref::named("a3")],
        vec![Ref::named("b"), Ref::named("c")],
    )
    .unwrap();
    let e1 = GroupoidElement::from_shift(&g, &x).unwrap();
    let unit = e1.compose(&g, &e1.inverse()).unwrap();
    assert!(unit.is_unit());
    assert_eq!(unit.range(), &x);

    let sx = shift(&g, &x).unwrap();
    let e2 = GroupoidElement::from_shift(&g, &sx).unwrap();
    let comp = e1.compose(&g, &e2).unwrap();
    assert_eq!(comp.k(), 2);
    assert_eq!(comp.source(), &shift_n(&g, &x, 2).unwrap());
}

#[test]
fn groupoid_normal_form_composition() {
    // x = (a1 a2 a3)·y and z = (a3)·y compose per the certificate rules.
    let g = stabilizer_graph();
    let y_cycle = vec![Ref::named("b"), Ref::named("c")];
    let x = BoundaryPoint::eventually_periodic(
        &g,
        vec![Ref::named("a1"), Ref::named("a2"), Ref::named("a3")],
        y_cycle.clone(),
    )
    .unwrap();
    let z = BoundaryPoint::eventually_periodic(&g, vec![Ref::named("a3")], y_cycle).unwrap();
    let el = GroupoidElement::new(&g, x.clone(), 3, 1, z.clone()).unwrap();
    assert_eq!(el.k(), 2);
    // Brute-force certificate check at depth |α| + |β| + 2.
    for extra in 0..6u64 {
        assert_eq!(
            shift_n(&g, &x, 3 + extra).unwrap(),
            shift_n(&g, &z, 1 + extra).unwrap()
        );
    }
    let back = el.compose(&g, &el.inverse()).unwrap();
    assert!(back.is_unit());
}

// --- cylinders and regions ---------------------------------------------

#[test]
fn sink_singleton_cylinder_is_a_singleton() {
    let g = sink_range_graph();
    let v = Ref::indexed("w", 5);
    let base = Ultrapath::new(&g, vec![Ref::named("e")], SymbolicVertexSet::singleton(&v)).unwrap();
    let c = Cylinder::plain(base);
    let points = enumerate_points(&g, 2, 8);
    let inside: Vec<_> = points
        .iter()
        .filter(|p| c.contains(&g, p).unwrap())
        .collect();
    assert_eq!(inside.len(), 1);
    assert_eq!(
        format!("{}", inside[0]),
        format!(
            "{}",
            BoundaryPoint::finite(
                &g,
                Ultrapath::new(&g, vec![Ref::named("e")], SymbolicVertexSet::singleton(&v))
                    .unwrap()
            )
            .unwrap()
        )
    );
}

#[test]
fn intersection_merges_exclusions_on_a_shared_minimal_base() {
    let g = sink_range_graph();
    let re = g.edge_range(&Ref::named("e")).unwrap();
    let base = Ultrapath::zero(&g, re).unwrap();
    // The source of e is not in r(e), so e is no valid exclusion here.
    assert!(Cylinder::new(
        &g,
        base.clone(),
        [Ref::named("e")].into_iter().collect::<BTreeSet<_>>(),
        BTreeSet::new(),
    )
    .is_err());
    let s1: BTreeSet<_> = [Ref::indexed("w", 1)].into_iter().collect();
    let s2: BTreeSet<_> = [Ref::indexed("w", 2)].into_iter().collect();
    let c1 = Cylinder::new(&g, base.clone(), BTreeSet::new(), s1).unwrap();
    let c2 = Cylinder::new(&g, base.clone(), BTreeSet::new(), s2).unwrap();
    let meet = basis_intersect(&g, &c1, &c2).unwrap();
    assert_eq!(meet.len(), 1);
    let both: BTreeSet<_> = [Ref::indexed("w", 1), Ref::indexed("w", 2)]
        .into_iter()
        .collect();
    assert_eq!(meet[0].excluded_sinks(), &both);

    // Self intersection is the cylinder itself.
    assert_eq!(basis_intersect(&g, &c1, &c1).unwrap(), vec![c1.clone()]);
}

#[test]
fn nested_base_intersection_depends_on_admissibility() {
    let g = sink_range_graph();
    let re = g.edge_range(&Ref::named("e")).unwrap();
    let shallow = Cylinder::plain(Ultrapath::zero(&g, named_set(&["v0"])).unwrap());
    let deep = Cylinder::plain(Ultrapath::new(&g, vec![Ref::named("e")], re).unwrap());
    // s(e) = v0 lies in the shallow base, so the deep cylinder refines it.
    assert_eq!(
        basis_intersect(&g, &shallow, &deep).unwrap(),
        vec![deep.clone()]
    );
    // Excluding e cuts the refinement to nothing.
    let shallow_excl = Cylinder::new(
        &g,
        Ultrapath::zero(&g, named_set(&["v0"])).unwrap(),
        [Ref::named("e")].into_iter().collect(),
        BTreeSet::new(),
    )
    .unwrap();
    assert!(basis_intersect(&g, &shallow_excl, &deep).unwrap().is_empty());
}

#[test]
fn semiring_decomposition_of_the_sink_range_cylinder() {
    let g = sink_range_graph();
    let re = g.edge_range(&Ref::named("e")).unwrap();
    let c = Cylinder::plain(Ultrapath::new(&g, vec![Ref::named("e")], re).unwrap());
    // The range is already one minimal sink: the cylinder stays whole.
    let pieces = decompose_to_semiring(&g, &c).unwrap();
    assert_eq!(pieces, vec![c.clone()]);

    // A finite regular range splits into singleton-vertex cylinders.
    let g2 = stabilizer_graph();
    let c2 = Cylinder::plain(Ultrapath::zero(&g2, named_set(&["u4", "u6"])).unwrap());
    let pieces = decompose_to_semiring(&g2, &c2).unwrap();
    assert_eq!(pieces.len(), 1);
    let points = enumerate_points(&g2, 5, 0);
    assert_partitions(&g2, &c2, &pieces, &points);
}

#[test]
fn semiring_diff_examples() {
    let g = sink_range_graph();
    let re = g.edge_range(&Ref::named("e")).unwrap();
    let base = Ultrapath::zero(&g, re).unwrap();
    let whole = Cylinder::plain(base.clone());
    // C \ C = empty.
    assert!(semiring_diff(&g, &whole, &whole).unwrap().is_empty());

    // Removing a larger exclusion set leaves the excluded terminals.
    let s2: BTreeSet<_> = [Ref::indexed("w", 1), Ref::indexed("w", 3)]
        .into_iter()
        .collect();
    let inner = Cylinder::new(&g, base.clone(), BTreeSet::new(), s2).unwrap();
    let pieces = semiring_diff(&g, &whole, &inner).unwrap();
    assert_eq!(pieces.len(), 2);
    let points = enumerate_points(&g, 2, 8);
    for p in &points {
        let w = naive_contains(&g, &whole, p);
        let i = naive_contains(&g, &inner, p);
        let hits = pieces.iter().filter(|c| naive_contains(&g, c, p)).count();
        assert_eq!(hits == 1, w && !i, "diff mismatch at {p}");
        assert!(hits <= 1);
    }

    // Not-contained pairs are rejected.
    assert!(semiring_diff(&g, &inner, &whole).is_err());
}

#[test]
fn region_covers() {
    let g = sink_range_graph();
    // X_{e^{-1}} covers exactly the points rooted inside r(e).
    let w = GroupWord::inverse_of(vec![Ref::named("e")]);
    let cover = region_xc(&g, &w, 8).unwrap();
    assert_eq!(cover.cylinders.len(), 1);
    let re = g.edge_range(&Ref::named("e")).unwrap();
    assert_eq!(cover.cylinders[0].base().range(), &re);
    assert_eq!(cover.cylinders[0].base().len(), 0);

    // The unit word covers the whole space exactly for this graph.
    let unit = region_xc(&g, &GroupWord::unit(), 8).unwrap();
    let note = unit.exhaustion.unwrap();
    assert!(note.exact);
    let points = enumerate_points(&g, 2, 6);
    for p in &points {
        let hits = unit
            .cylinders
            .iter()
            .filter(|c| naive_contains(&g, c, p))
            .count();
        assert_eq!(hits, 1, "whole-space cover misses or doubles {p}");
    }

    // Mixed words with disjoint final ranges have empty domain.
    let g2 = stabilizer_graph();
    let wmix = GroupWord::new(vec![Ref::named("a1")], vec![Ref::named("b")]);
    // r(a1) = {u2}, r(b) = {u5}: disjoint.
    assert!(region_xc(&g2, &wmix, 8).unwrap().cylinders.is_empty());

    // X_A respects intersections at the membership level.
    let a = named_set(&["u4", "u5"]);
    let b = named_set(&["u5", "u6"]);
    let ra = region_xa(&g2, &a).unwrap();
    let rb = region_xa(&g2, &b).unwrap();
    let rab = region_xa(&g2, &a.intersect(&b)).unwrap();
    for p in enumerate_points(&g2, 4, 0) {
        let in_a = ra.iter().any(|c| naive_contains(&g2, c, &p));
        let in_b = rb.iter().any(|c| naive_contains(&g2, c, &p));
        let in_ab = rab.iter().any(|c| naive_contains(&g2, c, &p));
        assert_eq!(in_ab, in_a && in_b, "lattice law fails at {p}");
    }
    assert!(region_xa(&g2, &SymbolicVertexSet::empty()).unwrap().is_empty());
}

// --- partial action -----------------------------------------------------

#[test]
fn theta_prefix_surgery() {
    let g = sink_range_graph();
    let re = g.edge_range(&Ref::named("e")).unwrap();
    let zero = BoundaryPoint::finite(&g, Ultrapath::zero(&g, re.clone()).unwrap()).unwrap();
    let we = GroupWord::positive(vec![Ref::named("e")]);
    // θ_e(A,A) = (e,A) for A ⊆ r(e).
    let moved = theta_apply(&g, &we, &zero).unwrap();
    let expect = BoundaryPoint::finite(
        &g,
        Ultrapath::new(&g, vec![Ref::named("e")], re.clone()).unwrap(),
    )
    .unwrap();
    assert_eq!(moved, expect);
    // Inverse pair: θ_{e^{-1}} ∘ θ_e = id on X_{e^{-1}}.
    let back = theta_apply(&g, &we.inverse(), &moved).unwrap();
    assert_eq!(back, zero);
    // Outside the domain the action errors.
    assert!(theta_apply(&g, &we, &moved).is_err());

    // Cylinder transport prepends to the base.
    let cyl = Cylinder::plain(Ultrapath::zero(&g, re).unwrap());
    let moved = theta_apply_cyl(&g, &we, &cyl).unwrap();
    assert_eq!(moved.base().edges(), &[Ref::named("e")]);
}

#[test]
fn theta_replaces_prefixes_between_overlapping_ranges() {
    // Two edges p -> {x, y}, q -> {y, z} with y a sink.
    let g = {
        use ushift_core::ultragraph::{EdgeDecl, EdgeRangeDecl, EdgeSource};
        Ultragraph::new(
            Default::default(),
            ["p", "q", "x", "y", "z"].iter().map(|s| sym(s)).collect(),
            vec![
                EdgeDecl {
                    id: sym("a"),
                    indexed: false,
                    source: EdgeSource::Const(Ref::named("p")),
                    range: EdgeRangeDecl::ConstSet(named_set(&["x", "y"])),
                },
                EdgeDecl {
                    id: sym("b"),
                    indexed: false,
                    source: EdgeSource::Const(Ref::named("q")),
                    range: EdgeRangeDecl::ConstSet(named_set(&["y", "z"])),
                },
            ],
        )
        .unwrap()
    };
    let w = GroupWord::new(vec![Ref::named("a")], vec![Ref::named("b")]);
    let yb = BoundaryPoint::finite(
        &g,
        Ultrapath::new(
            &g,
            vec![Ref::named("b")],
            SymbolicVertexSet::singleton(&Ref::named("y")),
        )
        .unwrap(),
    )
    .unwrap();
    assert!(in_region(&g, &w.inverse(), &yb).unwrap());
    let moved = theta_apply(&g, &w, &yb).unwrap();
    match &moved {
        BoundaryPoint::Finite(up) => {
            assert_eq!(up.edges(), &[Ref::named("a")]);
            assert_eq!(up.range(), &SymbolicVertexSet::singleton(&Ref::named("y")));
        }
        _ => panic!("expected finite point"),
    }
    // A point with terminal z is outside the mixed word's domain.
    let zb = BoundaryPoint::finite(
        &g,
        Ultrapath::new(
            &g,
            vec![Ref::named("b")],
            SymbolicVertexSet::singleton(&Ref::named("z")),
        )
        .unwrap(),
    )
    .unwrap();
    assert!(theta_apply(&g, &w, &zb).is_err());
}

// --- minimality of the two figure ranges --------------------------------

#[test]
fn branching_range_with_a_stray_sink_is_minimal() {
    let g = emitter_with_sink_graph();
    let r = g.edge_range(&Ref::named("e1")).unwrap();
    assert_eq!(r.cardinality(), Cardinality::Infinite);
    assert!(g.is_minimal_infinite_emitter(&r));
    // The decomposition of r(e1) ∪ {v1} peels the regular vertex off.
    let a = r.union(&named_set(&["v1"]));
    let d = g.decompose(&a).unwrap();
    assert_eq!(d.minimal_infinite_emitters.len(), 1);
    assert_eq!(d.minimal_infinite_emitters[0].set(), &r);
    assert!(d.minimal_sinks.is_empty());
    assert_eq!(d.finite_part, named_set(&["v1"]));
}

// --- the flagship weight computation ------------------------------------

#[test]
fn kms_solve_reproduces_the_rational_values() {
    let g = sink_range_graph();
    let (system, outcome) = solve_kms(&g, &sink_weights(), &q(1, 1), 20).unwrap();
    assert!(system.exact);
    let sol = match outcome {
        KmsOutcome::Feasible(sol) => sol,
        KmsOutcome::Infeasible { witness } => panic!("infeasible: {witness}"),
    };
    let re = g.edge_range(&Ref::named("e")).unwrap();
    assert_eq!(sol.value(&VarKind::Minimal(re.clone())), Some(&q(2, 3)));
    assert_eq!(sol.value(&VarKind::Named(sym("v0"))), Some(&q(1, 3)));
    assert!(sol.dimension >= 1, "tail freedom gives positive dimension");

    // β = 0 gives the balanced split.
    let (_, outcome) = solve_kms(&g, &sink_weights(), &q(0, 1), 20).unwrap();
    let sol = match outcome {
        KmsOutcome::Feasible(sol) => sol,
        _ => panic!("expected feasible at beta = 0"),
    };
    assert_eq!(sol.value(&VarKind::Minimal(re)), Some(&q(1, 2)));
    assert_eq!(sol.value(&VarKind::Named(sym("v0"))), Some(&q(1, 2)));
}

#[test]
fn exitless_loop_is_infeasible_at_positive_beta() {
    let g = exitless_loop_graph();
    let mut w = EdgeWeights::default();
    w.by_decl.insert(sym("e0"), q(2, 1));
    let (_, outcome) = solve_kms(&g, &w, &q(1, 1), 4).unwrap();
    assert!(matches!(outcome, KmsOutcome::Infeasible { .. }));
    // β = 0 keeps the loop balanced.
    let (_, outcome) = solve_kms(&g, &w, &q(0, 1), 4).unwrap();
    assert!(matches!(outcome, KmsOutcome::Feasible(_)));

    let table = beta_sweep(&g, &w, &[q(1, 2), q(1, 1), q(2, 1)], 4).unwrap();
    assert!(table
        .iter()
        .all(|(_, entry)| matches!(entry, SweepEntry::Infeasible { .. })));
}

#[test]
fn sweep_of_the_sink_graph_is_feasible_with_tail_freedom() {
    let g = sink_range_graph();
    let table = beta_sweep(&g, &sink_weights(), &[q(1, 2), q(1, 1), q(2, 1)], 8).unwrap();
    assert_eq!(table.len(), 3);
    for (_, entry) in &table {
        match entry {
            SweepEntry::Feasible { dimension } => assert!(*dimension >= 1),
            SweepEntry::Infeasible { witness } => panic!("unexpected infeasible: {witness}"),
        }
    }
    assert!(beta_sweep(&g, &sink_weights(), &[], 8).unwrap().is_empty());
}

#[test]
fn two_vertex_graph_compiles_the_expected_constraints() {
    // v -> w with w a sink: m(v) = N^{-β} m(w) and m(v) + m(w) = 1.
    let g = Ultragraph::from_graph_edges(&[("v", "w")]).unwrap();
    let mut weights = EdgeWeights::default();
    weights.by_decl.insert(sym("e0"), q(2, 1));
    let system = build_constraints(&g, &weights, &q(1, 1), 4).unwrap();
    let m2: Vec<_> = system
        .constraints
        .iter()
        .filter(|c| c.kind == ConstraintKind::M2)
        .collect();
    assert_eq!(m2.len(), 1, "one balance equation for the regular vertex");
    let m1: Vec<_> = system
        .constraints
        .iter()
        .filter(|c| c.kind == ConstraintKind::M1)
        .collect();
    assert_eq!(m1.len(), 1);
    assert!(system.m1_attained);

    let (_, outcome) = solve_kms(&g, &weights, &q(1, 1), 4).unwrap();
    let sol = match outcome {
        KmsOutcome::Feasible(sol) => sol,
        _ => panic!("expected feasible"),
    };
    // m(v) = 1/2 · m(w), m(v) + m(w) = 1 => m(w) = 2/3.
    assert_eq!(sol.value(&VarKind::Named(sym("w"))), Some(&q(2, 3)));
    assert_eq!(sol.value(&VarKind::Named(sym("v"))), Some(&q(1, 3)));
}

#[test]
fn lone_sink_carries_all_mass() {
    let g = Ultragraph::new(
        Default::default(),
        [sym("v")].into_iter().collect(),
        Vec::new(),
    )
    .unwrap();
    let (_, outcome) = solve_kms(&g, &EdgeWeights::default(), &q(1, 1), 4).unwrap();
    let sol = match outcome {
        KmsOutcome::Feasible(sol) => sol,
        _ => panic!("expected feasible"),
    };
    assert_eq!(sol.value(&VarKind::Named(sym("v"))), Some(&q(1, 1)));
}

// --- ground states ------------------------------------------------------

#[test]
fn ground_state_of_the_sink_graph() {
    let g = sink_range_graph();
    let (_, outcome) = solve_ground(&g, 20).unwrap();
    let sol = match outcome {
        KmsOutcome::Feasible(sol) => sol,
        KmsOutcome::Infeasible { witness } => panic!("infeasible: {witness}"),
    };
    let re = g.edge_range(&Ref::named("e")).unwrap();
    assert_eq!(sol.value(&VarKind::Named(sym("v0"))), Some(&q(0, 1)));
    assert_eq!(sol.value(&VarKind::Minimal(re.clone())), Some(&q(1, 1)));
    for i in 1..=20 {
        assert_eq!(sol.value(&VarKind::Head(sym("w"), i)), Some(&q(0, 1)));
    }
    assert_eq!(sol.value(&VarKind::Tail(sym("w"))), Some(&q(0, 1)));
    // The point mass of the minimal sink is the whole gap.
    let member_sum: Q = (1..=20).map(|_| q(0, 1)).sum();
    assert_eq!(sol.m_of(&g, &re).unwrap() - member_sum, q(1, 1));
}

#[test]
fn ground_state_of_pure_sinks_is_a_simplex() {
    let g = Ultragraph::new(
        Default::default(),
        [sym("s1"), sym("s2"), sym("s3")].into_iter().collect(),
        Vec::new(),
    )
    .unwrap();
    let (_, outcome) = solve_ground(&g, 4).unwrap();
    let sol = match outcome {
        KmsOutcome::Feasible(sol) => sol,
        _ => panic!("expected feasible"),
    };
    assert_eq!(sol.dimension, 2, "a probability simplex over three sinks");
}

#[test]
fn ground_state_of_a_row_graph_lands_on_the_sink() {
    let g = Ultragraph::from_graph_edges(&[("v", "w"), ("w", "u")]).unwrap();
    let (_, outcome) = solve_ground(&g, 4).unwrap();
    let sol = match outcome {
        KmsOutcome::Feasible(sol) => sol,
        _ => panic!("expected feasible"),
    };
    assert_eq!(sol.value(&VarKind::Named(sym("v"))), Some(&q(0, 1)));
    assert_eq!(sol.value(&VarKind::Named(sym("w"))), Some(&q(0, 1)));
    assert_eq!(sol.value(&VarKind::Named(sym("u"))), Some(&q(1, 1)));
    assert_eq!(sol.dimension, 0);
}

// --- verification -------------------------------------------------------

fn geometric_family(truncation: u64) -> MFunction {
    // m(v0) = 1/3, m(w[i]) = (1/3)·(1/2)^{i-1}, tail = (2/3)·(1/2)^T.
    let mut m = MFunction {
        truncation,
        ..Default::default()
    };
    m.named.insert(sym("v0"), q(1, 3));
    let mut heads = std::collections::BTreeMap::new();
    for i in 1..=truncation {
        let val = q(1, 3) * Q::new(1.into(), 2.into()).pow((i - 1) as i32);
        heads.insert(i, val);
    }
    m.heads.insert(sym("w"), heads);
    m.tails
        .insert(sym("w"), q(2, 3) * Q::new(1.into(), 2.into()).pow(truncation as i32));
    m.minimal.push((family_all("w"), q(2, 3)));
    m
}

#[test]
fn verify_accepts_the_geometric_family() {
    let g = sink_range_graph();
    let system = build_constraints(&g, &sink_weights(), &q(1, 1), 20).unwrap();
    let m = geometric_family(system.vars.truncation);
    let violations = verify_m(&system, &m, &q(0, 1)).unwrap();
    assert!(violations.is_empty(), "violations: {violations:?}");
}

#[test]
fn verify_rejects_all_zeros_on_total_mass() {
    let g = sink_range_graph();
    let system = build_constraints(&g, &sink_weights(), &q(1, 1), 8).unwrap();
    let mut m = MFunction {
        truncation: system.vars.truncation,
        ..Default::default()
    };
    m.named.insert(sym("v0"), q(0, 1));
    let mut heads = std::collections::BTreeMap::new();
    for i in 1..=system.vars.truncation {
        heads.insert(i, q(0, 1));
    }
    m.heads.insert(sym("w"), heads);
    m.tails.insert(sym("w"), q(0, 1));
    m.minimal.push((family_all("w"), q(0, 1)));
    let violations = verify_m(&system, &m, &q(1, 1_000_000_000_000)).unwrap();
    assert_eq!(violations.len(), 1);
    assert_eq!(violations[0].kind, ConstraintKind::M1);
}

#[test]
fn verify_flags_the_balance_discrepancy() {
    // m(v0) = 1, m(r(e)) = 0 satisfies everything except the balance
    // equation at {v0}, which forces m(v0) = N^{-β}·m(r(e)) = 0.
    let g = sink_range_graph();
    for beta in [q(1, 2), q(1, 1), q(3, 1)] {
        let system = build_constraints(&g, &sink_weights(), &beta, 8).unwrap();
        let mut m = MFunction {
            truncation: system.vars.truncation,
            ..Default::default()
        };
        m.named.insert(sym("v0"), q(1, 1));
        let mut heads = std::collections::BTreeMap::new();
        for i in 1..=system.vars.truncation {
            heads.insert(i, q(0, 1));
        }
        m.heads.insert(sym("w"), heads);
        m.tails.insert(sym("w"), q(0, 1));
        m.minimal.push((family_all("w"), q(0, 1)));
        let violations = verify_m(&system, &m, &q(1, 1_000_000_000_000)).unwrap();
        assert_eq!(violations.len(), 1, "exactly one violation: {violations:?}");
        assert_eq!(violations[0].kind, ConstraintKind::M2);
        assert!(violations[0].context.contains("v0"));
    }
}

// --- the cylinder measure ------------------------------------------------

#[test]
fn kappa_values_and_total_mass() {
    let g = sink_range_graph();
    let (system, outcome) = solve_kms(&g, &sink_weights(), &q(1, 1), 12).unwrap();
    let sol = match outcome {
        KmsOutcome::Feasible(sol) => sol,
        _ => panic!("expected feasible"),
    };
    let mw = WeightsAtBeta::new(&g, &sink_weights(), &q(1, 1)).unwrap();
    let re = g.edge_range(&Ref::named("e")).unwrap();

    // Zero-length case: κ(D_{(A,A)}) = m(A).
    let zero = Cylinder::plain(Ultrapath::zero(&g, re.clone()).unwrap());
    assert_eq!(kappa(&g, &sol, &mw, &zero).unwrap(), q(2, 3));

    // One-edge case: κ(D_{(e, r(e))}) = M(e)·m(r(e)) = 1/2 · 2/3.
    let deep = Cylinder::plain(Ultrapath::new(&g, vec![Ref::named("e")], re.clone()).unwrap());
    assert_eq!(kappa(&g, &sol, &mw, &deep).unwrap(), q(1, 3));

    // μ(X) = 1 under m1.
    let unit_cover = region_xc(&g, &GroupWord::unit(), system.vars.truncation).unwrap();
    assert_eq!(mu(&g, &sol, &mw, &unit_cover.cylinders).unwrap(), q(1, 1));

    // μ(∅) = 0.
    assert_eq!(mu(&g, &sol, &mw, &[]).unwrap(), q(0, 1));

    // θ-scaling on the zero-length cylinder.
    let we = GroupWord::positive(vec![Ref::named("e")]);
    let moved = theta_apply_cyl(&g, &we, &zero).unwrap();
    assert_eq!(
        kappa(&g, &sol, &mw, &moved).unwrap(),
        q(1, 2) * kappa(&g, &sol, &mw, &zero).unwrap()
    );
}

// --- orbit equivalence ---------------------------------------------------

#[test]
fn identity_map_passes_all_checks() {
    let g = stabilizer_graph();
    let id = BlockMap::identity(&g);
    let report =
        check_orbit_equivalence(&g, &g, &id, &id, &OrbitCheckConfig::default()).unwrap();
    assert!(report.all_passed(), "{report:?}");
    assert!(report.eventual_conjugacy);
}

#[test]
fn collapse_map_fails_the_lag_sum_identity() {
    // Collapsing the two-cycle onto the one-loop satisfies the pointwise
    // identity but cannot satisfy the lag-sum equation.
    let g2 = two_cycle_graph();
    let g1 = exitless_loop_graph();
    let mut fwd = BlockMap::default();
    fwd.edge_map.insert(sym("e0"), sym("e0"));
    fwd.edge_map.insert(sym("e1"), sym("e0"));
    fwd.vertex_map.insert(sym("p"), sym("v"));
    fwd.vertex_map.insert(sym("q"), sym("v"));
    fwd.k = CocycleTable::constant(0);
    fwd.l = CocycleTable::constant(1);
    let mut bwd = BlockMap::default();
    bwd.edge_map.insert(sym("e0"), sym("e0"));
    bwd.vertex_map.insert(sym("v"), sym("p"));
    bwd.k = CocycleTable::constant(0);
    bwd.l = CocycleTable::constant(1);
    let report =
        check_orbit_equivalence(&g2, &g1, &fwd, &bwd, &OrbitCheckConfig::default()).unwrap();
    assert!(report.coe_forward.passed);
    assert!(!report.eq1.passed, "{report:?}");
    assert!(report.eq1.witness.is_some());
}

#[test]
fn decompose_splits_emitter_part_from_stray_vertices() {
    // D over r(e1) ∪ {v1}: one piece keeps the minimal emitter with the
    // overlap exclusions, the other collects the regular vertex.
    let g = emitter_with_sink_graph();
    let r = g.edge_range(&Ref::named("e1")).unwrap();
    let a = r.union(&named_set(&["v1"]));
    let c = Cylinder::plain(Ultrapath::zero(&g, a).unwrap());
    let pieces = decompose_to_semiring(&g, &c).unwrap();
    assert_eq!(pieces.len(), 2);
    assert!(pieces.iter().any(|p| p.base().range() == &r));
    assert!(pieces.iter().any(|p| p.base().range() == &named_set(&["v1"])));
    let points = enumerate_points(&g, 4, 5);
    assert_partitions(&g, &c, &pieces, &points);
}

#[test]
fn positive_word_region_is_one_deep_cylinder() {
    let g = sink_range_graph();
    let w = GroupWord::positive(vec![Ref::named("e")]);
    let cover = region_xc(&g, &w, 8).unwrap();
    assert_eq!(cover.cylinders.len(), 1);
    assert_eq!(cover.cylinders[0].base().edges(), &[Ref::named("e")]);
    // An inadmissible word has empty region.
    let w2 = GroupWord::positive(vec![Ref::named("e"), Ref::named("e")]);
    assert!(region_xc(&g, &w2, 8).unwrap().cylinders.is_empty());
}

#[test]
fn condition_l_failure_is_monotone_in_the_bounds() {
    let g = exitless_loop_graph();
    for (max_len, trunc) in [(1, 0), (4, 2), (8, 8), (16, 16)] {
        assert!(
            matches!(check_condition_l(&g, max_len, trunc), ConditionL::Fails { .. }),
            "failure disappeared at bounds ({max_len}, {trunc})"
        );
    }
}

#[test]
fn wandering_family_ray_is_not_isolated() {
    // A chain whose ranges have two vertices keeps branching forever.
    use ushift_core::ultragraph::{EdgeDecl, EdgeRangeDecl, EdgeSource, IndexedVertexRef};
    let mut fams = std::collections::BTreeMap::new();
    fams.insert(sym("m"), 0u64);
    let g = Ultragraph::new(
        fams,
        Default::default(),
        vec![EdgeDecl {
            id: sym("f"),
            indexed: true,
            source: EdgeSource::Indexed {
                family: sym("m"),
                offset: 0,
            },
            range: EdgeRangeDecl::IndexedRefs(vec![
                IndexedVertexRef {
                    family: sym("m"),
                    offset: 1,
                },
                IndexedVertexRef {
                    family: sym("m"),
                    offset: 2,
                },
            ]),
        }],
    )
    .unwrap();
    let iso = classify_isolated_ray(&g, &[], &sym("f"), 0).unwrap();
    assert!(!iso.isolated);
    assert_eq!(iso.reason, IsolationReason::WanderingTail);
}

#[test]
fn groupoid_composition_is_associative_on_certified_triples() {
    let g = stabilizer_graph();
    let x = BoundaryPoint::eventually_periodic(
        &g,
        vec![Ref::named("a1"), Ref::named("a2"), Ref::named("a3")],
        vec![Ref::named("b"), Ref::named("c")],
    )
    .unwrap();
    let e1 = GroupoidElement::from_shift(&g, &x).unwrap();
    let e2 = GroupoidElement::from_shift(&g, &shift(&g, &x).unwrap()).unwrap();
    let e3 = GroupoidElement::from_shift(&g, &shift_n(&g, &x, 2).unwrap()).unwrap();
    let left = e1.compose(&g, &e2).unwrap().compose(&g, &e3).unwrap();
    let right = e1.compose(&g, &e2.compose(&g, &e3).unwrap()).unwrap();
    assert_eq!(left.k(), right.k());
    assert_eq!(left.range(), right.range());
    assert_eq!(left.source(), right.source());
}

#[test]
fn isolation_of_periodic_points_matches_exitlessness() {
    for g in [
        branching_cycle_graph(),
        stabilizer_graph(),
        exitless_loop_graph(),
        two_cycle_graph(),
    ] {
        for c in find_cycles(&g, 4, 4) {
            if !c.simple {
                continue;
            }
            let p = match BoundaryPoint::eventually_periodic(&g, vec![], c.path.edges().to_vec())
            {
                Ok(p) => p,
                Err(_) => continue,
            };
            let isolated = classify_isolated(&g, &p).isolated;
            let exitless = has_exit(&g, c.path.edges()).is_none();
            assert_eq!(isolated, exitless, "cycle {c}");
        }
    }
}

#[test]
fn intersection_pathology_at_a_shared_sink() {
    // Two minimal sinks meeting exactly at the named sink x: their
    // zero-length cylinders intersect in the singleton {(x-pair)}, and an
    // exclusion of x on either side empties the intersection.
    let g = overlapping_sinks_graph();
    let r1 = g.edge_range(&Ref::named("e1")).unwrap();
    let r2 = g.edge_range(&Ref::named("e2")).unwrap();
    let c1 = Cylinder::plain(Ultrapath::zero(&g, r1.clone()).unwrap());
    let c2 = Cylinder::plain(Ultrapath::zero(&g, r2.clone()).unwrap());
    let meet = basis_intersect(&g, &c1, &c2).unwrap();
    assert_eq!(meet.len(), 1);
    assert_eq!(meet[0].base().range(), &named_set(&["x"]));
    let xpoint = BoundaryPoint::finite(
        &g,
        Ultrapath::zero(&g, named_set(&["x"])).unwrap(),
    )
    .unwrap();
    assert!(meet[0].contains(&g, &xpoint).unwrap());

    let c1x = Cylinder::new(
        &g,
        Ultrapath::zero(&g, r1).unwrap(),
        BTreeSet::new(),
        [Ref::named("x")].into_iter().collect(),
    )
    .unwrap();
    assert!(basis_intersect(&g, &c1x, &c2).unwrap().is_empty());
    // The excluding cylinder itself keeps its distinguished point but not
    // the terminal.
    assert!(!c1x.contains(&g, &xpoint).unwrap());
}

#[test]
fn group_words_reduce_and_invert() {
    let e = Ref::named("e");
    let w = GroupWord::new(vec![e.clone()], vec![e.clone()]);
    assert!(w.is_unit());
    let w = GroupWord::new(
        vec![Ref::named("a"), Ref::named("c")],
        vec![Ref::named("b"), Ref::named("c")],
    );
    assert_eq!(w.pos(), &[Ref::named("a")]);
    assert_eq!(w.neg(), &[Ref::named("b")]);
    let wi = w.inverse();
    assert_eq!(wi.pos(), &[Ref::named("b")]);
    assert_eq!(wi.neg(), &[Ref::named("a")]);
}

#[test]
fn irrational_weights_fall_back_to_marked_approximation() {
    // β = 1/2 with N = 2 makes N^{-β} irrational: the system solves with
    // rationalized weights and is marked inexact.
    let g = sink_range_graph();
    let (system, outcome) = solve_kms(&g, &sink_weights(), &q(1, 2), 8).unwrap();
    assert!(!system.exact);
    let sol = match outcome {
        KmsOutcome::Feasible(sol) => sol,
        KmsOutcome::Infeasible { witness } => panic!("infeasible: {witness}"),
    };
    // m(r(e)) = 1/(1 + 2^{-1/2}) ≈ 0.58578; the rationalized solve agrees
    // to well below 1e-9.
    let re = g.edge_range(&Ref::named("e")).unwrap();
    let got = ushift_core::doc::rational_approx(
        sol.value(&VarKind::Minimal(re)).unwrap(),
    );
    let expect = 1.0 / (1.0 + 0.5f64.sqrt());
    assert!((got - expect).abs() < 1e-9, "got {got}, expected {expect}");

    // A perfect square keeps exactness: N = 4, β = 1/2 gives M = 1/2.
    let mut w4 = EdgeWeights::default();
    w4.by_decl.insert(sym("e"), q(4, 1));
    let (system, outcome) = solve_kms(&g, &w4, &q(1, 2), 8).unwrap();
    assert!(system.exact);
    match outcome {
        KmsOutcome::Feasible(sol) => {
            let re = g.edge_range(&Ref::named("e")).unwrap();
            assert_eq!(sol.value(&VarKind::Minimal(re)), Some(&q(2, 3)));
        }
        _ => panic!("expected feasible"),
    }
}
