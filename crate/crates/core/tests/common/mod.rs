//! Shared fixtures and the independent membership oracle used to check
//! cylinder algebra against plain enumeration.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use ushift_core::boundary::{BoundaryPoint, Cylinder, Ultrapath};
use ushift_core::dynamics::{find_cycles, OrbitCheckConfig};
use ushift_core::symbolic::{
    Cardinality, EdgeRef, FamilyPart, Ref, Symbol, SymbolicVertexSet,
};
use ushift_core::ultragraph::{EdgeDecl, EdgeRangeDecl, EdgeSource, IndexedVertexRef, Ultragraph};

pub fn sym(s: &str) -> Symbol {
    Symbol::new(s)
}

pub fn family_all(name: &str) -> SymbolicVertexSet {
    let mut s = SymbolicVertexSet::empty();
    s.set_family_part(sym(name), FamilyPart::Cofinite(BTreeSet::new()));
    s
}

pub fn named_set(names: &[&str]) -> SymbolicVertexSet {
    SymbolicVertexSet::from_named(names.iter().map(|n| Symbol::new(*n)))
}

/// One edge from `v0` into an infinite family `w` of sinks (indices from 1).
pub fn sink_range_graph() -> Ultragraph {
    let mut fams = BTreeMap::new();
    fams.insert(sym("w"), 1);
    Ultragraph::new(
        fams,
        [sym("v0")].into_iter().collect(),
        vec![EdgeDecl {
            id: sym("e"),
            indexed: false,
            source: EdgeSource::Const(Ref::named("v0")),
            range: EdgeRangeDecl::ConstSet(family_all("w")),
        }],
    )
    .unwrap()
}

/// The eight-vertex graph with a two-cycle `b c` (where `c` has the wide
/// range `{u4, u6}`) and an exitless three-cycle `d e f`.
pub fn stabilizer_graph() -> Ultragraph {
    let single = |id: &str, src: &str, dst: &[&str]| EdgeDecl {
        id: sym(id),
        indexed: false,
        source: EdgeSource::Const(Ref::named(src)),
        range: EdgeRangeDecl::ConstSet(named_set(dst)),
    };
    Ultragraph::new(
        BTreeMap::new(),
        (1..=8).map(|i| sym(&format!("u{i}"))).collect(),
        vec![
            single("a1", "u1", &["u2"]),
            single("a2", "u2", &["u3"]),
            single("a3", "u3", &["u4"]),
            single("b", "u4", &["u5"]),
            single("c", "u5", &["u4", "u6"]),
            single("d", "u6", &["u7"]),
            single("e", "u7", &["u8"]),
            single("f", "u8", &["u6"]),
        ],
    )
    .unwrap()
}

/// Three vertices with a branching edge `e: v0 -> {v1, v2}` and a return
/// edge `f1: v1 -> v0`; `v2` is a sink.
pub fn branching_cycle_graph() -> Ultragraph {
    Ultragraph::new(
        BTreeMap::new(),
        [sym("v0"), sym("v1"), sym("v2")].into_iter().collect(),
        vec![
            EdgeDecl {
                id: sym("e"),
                indexed: false,
                source: EdgeSource::Const(Ref::named("v0")),
                range: EdgeRangeDecl::ConstSet(named_set(&["v1", "v2"])),
            },
            EdgeDecl {
                id: sym("f1"),
                indexed: false,
                source: EdgeSource::Const(Ref::named("v1")),
                range: EdgeRangeDecl::ConstSet(named_set(&["v0"])),
            },
        ],
    )
    .unwrap()
}

/// A branching range with one stray sink: `e1: v1 -> {s0} ∪ m[*]`, where
/// the `m` chain is regular (`f[i]: m[i] -> {m[i+1]}`) and `s0` is a sink.
pub fn emitter_with_sink_graph() -> Ultragraph {
    let mut fams = BTreeMap::new();
    fams.insert(sym("m"), 0);
    let mut range = family_all("m");
    range.insert(Ref::named("s0"));
    Ultragraph::new(
        fams,
        [sym("v1"), sym("s0")].into_iter().collect(),
        vec![
            EdgeDecl {
                id: sym("e1"),
                indexed: false,
                source: EdgeSource::Const(Ref::named("v1")),
                range: EdgeRangeDecl::ConstSet(range),
            },
            EdgeDecl {
                id: sym("f"),
                indexed: true,
                source: EdgeSource::Indexed {
                    family: sym("m"),
                    offset: 0,
                },
                range: EdgeRangeDecl::IndexedRefs(vec![IndexedVertexRef {
                    family: sym("m"),
                    offset: 1,
                }]),
            },
        ],
    )
    .unwrap()
}

/// A single exitless loop `v -> v`.
pub fn exitless_loop_graph() -> Ultragraph {
    Ultragraph::from_graph_edges(&[("v", "v")]).unwrap()
}

/// A two-cycle graph `p <-> q` (edges `e0: p->q`, `e1: q->p`).
pub fn two_cycle_graph() -> Ultragraph {
    Ultragraph::from_graph_edges(&[("p", "q"), ("q", "p")]).unwrap()
}

/// Every boundary point whose description fits in `depth` edges, over the
/// concrete edges with family indices at most `truncation`.
pub fn enumerate_points(g: &Ultragraph, depth: usize, truncation: u64) -> Vec<BoundaryPoint> {
    let mut edges: Vec<EdgeRef> = Vec::new();
    for decl in g.edge_decls().values() {
        if !decl.indexed {
            edges.push(Ref::Named(decl.id.clone()));
        } else {
            let start = g.edge_bases()[&decl.id];
            for i in start..=truncation.max(start) {
                edges.push(Ref::Indexed(decl.id.clone(), i));
            }
        }
    }
    let catalog = g.minimal_set_catalog();
    let sinks = g.sink_set();
    let mut words: Vec<Vec<EdgeRef>> = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..depth {
        let mut next = Vec::new();
        for w in &frontier {
            for e in &edges {
                let ok = match w.last() {
                    None => true,
                    Some(prev) => {
                        let r = g.edge_range(prev).unwrap();
                        r.is_member(&g.edge_source(e).unwrap())
                    }
                };
                if ok {
                    let mut w2: Vec<EdgeRef> = w.clone();
                    w2.push(e.clone());
                    next.push(w2);
                }
            }
        }
        words.extend(next.iter().cloned());
        frontier = next;
    }
    let mut out: Vec<BoundaryPoint> = Vec::new();
    for w in &words {
        let terminal_ranges: Vec<SymbolicVertexSet> = if w.is_empty() {
            let mut rs: Vec<SymbolicVertexSet> = catalog.clone();
            let named_sinks = sinks.clone();
            for v in named_sinks.enumerate(g.vertex_families(), 24) {
                rs.push(SymbolicVertexSet::singleton(&v));
            }
            rs
        } else {
            let r = g.edge_range(w.last().unwrap()).unwrap();
            let mut rs: Vec<SymbolicVertexSet> = catalog
                .iter()
                .filter(|a| a.is_subset(&r))
                .cloned()
                .collect();
            for v in r.intersect(&sinks).enumerate(g.vertex_families(), 24) {
                rs.push(SymbolicVertexSet::singleton(&v));
            }
            rs
        };
        for range in terminal_ranges {
            if let Ok(up) = Ultrapath::new(g, w.clone(), range) {
                if let Ok(p) = BoundaryPoint::finite(g, up) {
                    if !out.contains(&p) {
                        out.push(p);
                    }
                }
            }
        }
    }
    for c in find_cycles(g, depth.max(1), truncation) {
        let cyc = c.path.edges().to_vec();
        for w in &words {
            if w.len() + cyc.len() > depth + cyc.len() {
                continue;
            }
            let ok = match w.last() {
                None => true,
                Some(prev) => {
                    let r = g.edge_range(prev).unwrap();
                    r.is_member(&g.edge_source(&cyc[0]).unwrap())
                }
            };
            if ok {
                if let Ok(p) = BoundaryPoint::eventually_periodic(g, w.clone(), cyc.clone()) {
                    if !out.contains(&p) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// Membership computed straight from the cylinder definition, kept
/// independent of the library's implementation: the distinguished base
/// pair and its minimal shrinkings, the continuations avoiding the edge
/// exclusions, and the unexcluded sink terminals.
pub fn naive_contains(g: &Ultragraph, c: &Cylinder, p: &BoundaryPoint) -> bool {
    let base_edges = c.base().edges();
    let b = c.base().range();
    let n = base_edges.len();
    match p {
        BoundaryPoint::Finite(up) => {
            if up.len() < n || &up.edges()[..n] != base_edges {
                return false;
            }
            if up.len() > n {
                let next = &up.edges()[n];
                let s = g.edge_source(next).unwrap();
                return b.is_member(&s) && !c.excluded_edges().contains(next);
            }
            let pset = up.range();
            if pset == b {
                return true;
            }
            if !pset.is_subset(b) {
                return false;
            }
            if pset.cardinality() == Cardinality::Finite(1) {
                let v = pset.enumerate(g.vertex_families(), 1).remove(0);
                if g.is_sink(&v) {
                    return !c.excluded_sinks().contains(&v);
                }
            }
            g.is_minimal_infinite_emitter(pset) || g.is_minimal_sink(pset)
        }
        BoundaryPoint::EventuallyPeriodic { .. } => {
            let prefix = match p.edge_prefix(n + 1) {
                Some(pre) => pre,
                None => return false,
            };
            if prefix[..n] != *base_edges {
                return false;
            }
            let next = &prefix[n];
            let s = g.edge_source(next).unwrap();
            b.is_member(&s) && !c.excluded_edges().contains(next)
        }
    }
}

/// Assert that the cylinders partition their union on the sampled points:
/// every point lies in at most one piece, and in some piece exactly when
/// it lies in the reference cylinder.
pub fn assert_partitions(
    g: &Ultragraph,
    whole: &Cylinder,
    pieces: &[Cylinder],
    points: &[BoundaryPoint],
) {
    for p in points {
        let inside = naive_contains(g, whole, p);
        let hits = pieces.iter().filter(|c| naive_contains(g, c, p)).count();
        assert!(
            hits <= 1,
            "point {p} lies in {hits} pieces of {whole}",
        );
        assert_eq!(
            inside,
            hits == 1,
            "point {p}: in whole = {inside}, pieces hit = {hits}"
        );
    }
}

pub fn default_orbit_cfg() -> OrbitCheckConfig {
    OrbitCheckConfig::default()
}

/// Two families of sinks whose covering edges share the named sink `x`.
pub fn overlapping_sinks_graph() -> Ultragraph {
    let mut fams = BTreeMap::new();
    fams.insert(sym("w1"), 0);
    fams.insert(sym("w2"), 0);
    let mut r1 = family_all("w1");
    r1.insert(Ref::named("x"));
    let mut r2 = family_all("w2");
    r2.insert(Ref::named("x"));
    Ultragraph::new(
        fams,
        [sym("v1"), sym("v2"), sym("x")].into_iter().collect(),
        vec![
            EdgeDecl {
                id: sym("e1"),
                indexed: false,
                source: EdgeSource::Const(Ref::named("v1")),
                range: EdgeRangeDecl::ConstSet(r1),
            },
            EdgeDecl {
                id: sym("e2"),
                indexed: false,
                source: EdgeSource::Const(Ref::named("v2")),
                range: EdgeRangeDecl::ConstSet(r2),
            },
        ],
    )
    .unwrap()
}

/// Overlapping minimal sinks reachable through a branching first edge,
/// so differences can peel through a word into an overlapping range.
pub fn layered_overlap_graph() -> Ultragraph {
    let mut fams = BTreeMap::new();
    fams.insert(sym("w1"), 0);
    fams.insert(sym("w2"), 0);
    let mut r1 = family_all("w1");
    r1.insert(Ref::named("x"));
    let mut r2 = family_all("w2");
    r2.insert(Ref::named("x"));
    Ultragraph::new(
        fams,
        [sym("p"), sym("v1"), sym("v2"), sym("x")].into_iter().collect(),
        vec![
            EdgeDecl {
                id: sym("a"),
                indexed: false,
                source: EdgeSource::Const(Ref::named("p")),
                range: EdgeRangeDecl::ConstSet(named_set(&["v1", "v2"])),
            },
            EdgeDecl {
                id: sym("e1"),
                indexed: false,
                source: EdgeSource::Const(Ref::named("v1")),
                range: EdgeRangeDecl::ConstSet(r1),
            },
            EdgeDecl {
                id: sym("e2"),
                indexed: false,
                source: EdgeSource::Const(Ref::named("v2")),
                range: EdgeRangeDecl::ConstSet(r2),
            },
        ],
    )
    .unwrap()
}

/// The corpus of fixture graphs used by the randomized suites, each with
/// weight 2 on every edge declaration.
pub fn fixture_corpus() -> Vec<(Ultragraph, ushift_core::kms::EdgeWeights)> {
    [
        sink_range_graph(),
        stabilizer_graph(),
        emitter_with_sink_graph(),
        overlapping_sinks_graph(),
        layered_overlap_graph(),
        branching_cycle_graph(),
        two_cycle_graph(),
    ]
    .into_iter()
    .map(|g| {
        let mut w = ushift_core::kms::EdgeWeights::default();
        for id in g.edge_decls().keys() {
            w.by_decl
                .insert(id.clone(), ushift_core::kms::Q::new(2.into(), 1.into()));
        }
        (g, w)
    })
    .collect()
}

pub fn random_subset<T: Clone + Ord>(
    rng: &mut rand::rngs::StdRng,
    items: &[T],
    p: f64,
) -> BTreeSet<T> {
    use rand::Rng;
    items
        .iter()
        .filter(|_| rng.gen_bool(p))
        .cloned()
        .collect()
}

/// A random admissible base word of length at most `depth`.
pub fn random_word(
    g: &Ultragraph,
    rng: &mut rand::rngs::StdRng,
    depth: usize,
) -> Vec<EdgeRef> {
    use rand::Rng;
    let mut edges: Vec<EdgeRef> = Vec::new();
    for decl in g.edge_decls().values() {
        if !decl.indexed {
            edges.push(Ref::Named(decl.id.clone()));
        } else {
            let start = g.edge_bases()[&decl.id];
            for i in start..start + 4 {
                edges.push(Ref::Indexed(decl.id.clone(), i));
            }
        }
    }
    let target = rng.gen_range(0..=depth);
    let mut word = Vec::new();
    while word.len() < target {
        let admissible: Vec<&EdgeRef> = edges
            .iter()
            .filter(|e| match word.last() {
                None => true,
                Some(prev) => {
                    let r = g.edge_range(prev).unwrap();
                    r.is_member(&g.edge_source(e).unwrap())
                }
            })
            .collect();
        if admissible.is_empty() {
            break;
        }
        word.push(admissible[rng.gen_range(0..admissible.len())].clone());
    }
    word
}

/// A random semi-ring member over a random base word.
pub fn random_semiring_cylinder(
    g: &Ultragraph,
    rng: &mut rand::rngs::StdRng,
) -> Option<Cylinder> {
    use rand::Rng;
    let word = random_word(g, rng, 3);
    let reach = match word.last() {
        None => g.full_vertex_set(),
        Some(e) => g.edge_range(e).unwrap(),
    };
    let catalog = g.minimal_set_catalog();
    let minimal_inside: Vec<_> = catalog.iter().filter(|a| a.is_subset(&reach)).collect();
    let sinks = g.sink_set();
    let sink_inside: Vec<_> = reach.intersect(&sinks).enumerate(g.vertex_families(), 6);
    match rng.gen_range(0..3) {
        0 if !minimal_inside.is_empty() => {
            let a = minimal_inside[rng.gen_range(0..minimal_inside.len())].clone();
            let eps = g.edges_from(&a, 6);
            let f = random_subset(rng, &eps, 0.3);
            let own_sinks: Vec<_> = a.intersect(&sinks).enumerate(g.vertex_families(), 6);
            let s = random_subset(rng, &own_sinks, 0.3);
            let base = Ultrapath::new(g, word, a).ok()?;
            Cylinder::new(g, base, f, s).ok()
        }
        1 if !sink_inside.is_empty() => {
            let v = sink_inside[rng.gen_range(0..sink_inside.len())].clone();
            let base = Ultrapath::new(g, word, SymbolicVertexSet::singleton(&v)).ok()?;
            Some(Cylinder::plain(base))
        }
        _ => {
            let finite: Vec<_> = reach.enumerate(g.vertex_families(), 5);
            let chosen: Vec<_> = finite
                .iter()
                .filter(|_| rng.gen_bool(0.6))
                .cloned()
                .collect();
            if chosen.is_empty() {
                return None;
            }
            let set = SymbolicVertexSet::from_refs(chosen.iter());
            if set.cardinality().is_infinite() || g.epsilon(&set).1.is_infinite() {
                return None;
            }
            let base = Ultrapath::new(g, word, set).ok()?;
            Some(Cylinder::plain(base))
        }
    }
}

/// A random nested sub-cylinder of `c` inside the semi-ring, if the dice
/// land on an admissible one.
pub fn random_nested_cylinder(
    g: &Ultragraph,
    rng: &mut rand::rngs::StdRng,
    c: &Cylinder,
) -> Option<Cylinder> {
    use rand::Rng;
    let deepen = rng.gen_bool(0.5);
    if deepen {
        // Deepen by one to three admissible edges; the first one must
        // leave the base range outside the exclusions.
        let mut edges = c.base().edges().to_vec();
        let steps = rng.gen_range(1..=3);
        for _ in 0..steps {
            let at_base = edges.len() == c.base().len();
            let reach = if at_base {
                c.base().range().clone()
            } else {
                g.edge_range(edges.last().unwrap()).unwrap()
            };
            let mut eps = g.edges_from(&reach, 5);
            if at_base {
                eps.retain(|e| !c.excluded_edges().contains(e));
            }
            if eps.is_empty() {
                break;
            }
            edges.push(eps[rng.gen_range(0..eps.len())].clone());
        }
        if edges.len() == c.base().len() {
            return None;
        }
        let reach = g.edge_range(edges.last().unwrap()).unwrap();
        let catalog = g.minimal_set_catalog();
        let inside: Vec<_> = catalog.iter().filter(|a| a.is_subset(&reach)).collect();
        let base_set = if !inside.is_empty() && rng.gen_bool(0.6) {
            inside[rng.gen_range(0..inside.len())].clone()
        } else {
            let sinks: Vec<_> = reach
                .intersect(&g.sink_set())
                .enumerate(g.vertex_families(), 5);
            if sinks.is_empty() {
                return None;
            }
            SymbolicVertexSet::singleton(&sinks[rng.gen_range(0..sinks.len())])
        };
        let base = Ultrapath::new(g, edges, base_set).ok()?;
        Some(Cylinder::plain(base))
    } else {
        let eps = g.edges_from(c.base().range(), 6);
        let mut f = c.excluded_edges().clone();
        f.extend(random_subset(rng, &eps, 0.3));
        let sinks: Vec<_> = c
            .base()
            .range()
            .intersect(&g.sink_set())
            .enumerate(g.vertex_families(), 6);
        let mut s = c.excluded_sinks().clone();
        s.extend(random_subset(rng, &sinks, 0.3));
        Cylinder::new(g, c.base().clone(), f, s).ok()
    }
}
