//! The boundary path space: ultrapaths, boundary points, cylinder sets,
//! semi-ring decompositions, and the partial prefix action.
//!
//! A cylinder `D_{(β,B),F,S}` collects the boundary points extending the
//! ultrapath `(β,B)`: the point `(β,B)` itself and every generalized-vertex
//! shrinking of it, the continuations whose first edge leaves `B` outside
//! the finite exclusion set `F`, and the sink terminals `(β,{v})` for
//! sinks `v ∈ B` outside the finite exclusion set `S`.
//!
//! The semi-ring members are the cylinders with a minimal base range
//! (arbitrary `F`, `S`) and the plain cylinders over finite, finitely
//! emitting ranges. `partition_general` below splits any cylinder into
//! disjoint semi-ring members and is the engine behind both the basis
//! decomposition and relative complements.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::symbolic::{Cardinality, EdgeRef, Ref, SymbolicVertexSet, VertexRef};
use crate::ultragraph::{DecomposeError, GraphError, Ultragraph};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum BoundaryError {
    #[error("graph error: {0}")]
    Graph(#[from] GraphError),
    #[error("decompose error: {0}")]
    Decompose(#[from] DecomposeError),
    #[error("inadmissible edge pair: range of {prev} does not contain source of {next}")]
    Inadmissible { prev: EdgeRef, next: EdgeRef },
    #[error("range {0} is not contained in the final edge range")]
    RangeTooBig(SymbolicVertexSet),
    #[error("empty range")]
    EmptyRange,
    #[error("empty cycle")]
    EmptyCycle,
    #[error("cycle does not close up: source of {0} is not in the final range")]
    CycleDoesNotClose(EdgeRef),
    #[error("range {0} is not a minimal set or sink singleton")]
    NotBoundaryRange(SymbolicVertexSet),
    #[error("exclusion edge {0} does not leave the base range")]
    ExclusionNotInEpsilon(EdgeRef),
    #[error("exclusion vertex {0} is not a sink in the base range")]
    ExclusionNotSink(VertexRef),
    #[error("point is outside the domain of the group word")]
    OutsideDomain,
    #[error("cylinder {0} is not contained in {1}")]
    NotContained(Box<Cylinder>, Box<Cylinder>),
    #[error("the shift is undefined on length-zero points")]
    LengthTooShort,
    #[error("group word has empty domain")]
    EmptyDomainWord,
}

/// How a generalized vertex can close off a boundary point.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RangeClass {
    MinimalInfiniteEmitter,
    MinimalSink,
    SinkSingleton,
}

/// Classify a set as an admissible terminal range, if it is one.
pub fn classify_range(g: &Ultragraph, set: &SymbolicVertexSet) -> Option<RangeClass> {
    if g.is_minimal_infinite_emitter(set) {
        return Some(RangeClass::MinimalInfiniteEmitter);
    }
    if g.is_minimal_sink(set) {
        return Some(RangeClass::MinimalSink);
    }
    if set.cardinality() == Cardinality::Finite(1) {
        let v = set.enumerate(&crate::symbolic::FamilyBases::new(), 1).remove(0);
        if g.is_sink(&v) {
            return Some(RangeClass::SinkSingleton);
        }
    }
    None
}

/// A finite ultrapath `(β,B)`: a (possibly empty) admissible edge word and
/// a nonempty range inside the final edge range.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Ultrapath {
    edges: Vec<EdgeRef>,
    range: SymbolicVertexSet,
}

impl Ultrapath {
    pub fn new(
        g: &Ultragraph,
        edges: Vec<EdgeRef>,
        range: SymbolicVertexSet,
    ) -> Result<Self, BoundaryError> {
        let range = range.clip(g.vertex_families());
        if range.is_empty() {
            return Err(BoundaryError::EmptyRange);
        }
        check_admissible(g, &edges)?;
        if let Some(last) = edges.last() {
            let r = g.edge_range(last)?;
            if !range.is_subset(&r) {
                return Err(BoundaryError::RangeTooBig(range));
            }
        } else {
            g.check_set(&range)?;
        }
        Ok(Ultrapath { edges, range })
    }

    /// The pair `(A,A)` of length zero.
    pub fn zero(g: &Ultragraph, range: SymbolicVertexSet) -> Result<Self, BoundaryError> {
        Ultrapath::new(g, Vec::new(), range)
    }

    /// The path `(α, r(α))` with its maximal range.
    pub fn full(g: &Ultragraph, edges: Vec<EdgeRef>) -> Result<Self, BoundaryError> {
        let last = edges.last().ok_or(BoundaryError::EmptyRange)?;
        let range = g.edge_range(last)?;
        Ultrapath::new(g, edges, range)
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[EdgeRef] {
        &self.edges
    }

    pub fn range(&self) -> &SymbolicVertexSet {
        &self.range
    }
}

impl fmt::Display for Ultrapath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for e in &self.edges {
            write!(f, "{e} ")?;
        }
        write!(f, "{})", self.range)
    }
}

fn check_admissible(g: &Ultragraph, edges: &[EdgeRef]) -> Result<(), BoundaryError> {
    for w in edges.windows(2) {
        let r = g.edge_range(&w[0])?;
        let s = g.edge_source(&w[1])?;
        if !r.is_member(&s) {
            return Err(BoundaryError::Inadmissible {
                prev: w[0].clone(),
                next: w[1].clone(),
            });
        }
    }
    // Each edge must exist; windows(2) misses a singleton list.
    if let Some(e) = edges.first() {
        let _ = g.edge_range(e)?;
    }
    Ok(())
}

/// A point of the boundary path space.
///
/// Finite points are ultrapaths whose range is a minimal infinite emitter,
/// a minimal sink, or a sink singleton. Infinite points are stored only
/// when eventually periodic; aperiodic rays are handled through finite
/// prefixes inside the membership oracles.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum BoundaryPoint {
    Finite(Ultrapath),
    EventuallyPeriodic {
        prefix: Vec<EdgeRef>,
        cycle: Vec<EdgeRef>,
    },
}

impl BoundaryPoint {
    pub fn finite(g: &Ultragraph, path: Ultrapath) -> Result<Self, BoundaryError> {
        if classify_range(g, path.range()).is_none() {
            return Err(BoundaryError::NotBoundaryRange(path.range().clone()));
        }
        Ok(BoundaryPoint::Finite(path))
    }

    /// Build `prefix · cycle^∞` in canonical form: primitive cycle, shortest
    /// prefix.
    pub fn eventually_periodic(
        g: &Ultragraph,
        prefix: Vec<EdgeRef>,
        cycle: Vec<EdgeRef>,
    ) -> Result<Self, BoundaryError> {
        if cycle.is_empty() {
            return Err(BoundaryError::EmptyCycle);
        }
        let mut chain = prefix.clone();
        chain.extend(cycle.iter().cloned());
        chain.push(cycle[0].clone());
        check_admissible(g, &chain)?;
        let (prefix, cycle) = canonicalize_eventually_periodic(prefix, cycle);
        Ok(BoundaryPoint::EventuallyPeriodic { prefix, cycle })
    }

    pub fn len(&self) -> Cardinality {
        match self {
            BoundaryPoint::Finite(p) => Cardinality::Finite(p.len() as u64),
            BoundaryPoint::EventuallyPeriodic { .. } => Cardinality::Infinite,
        }
    }

    /// Edge at position `i` (0-based), if the point is that long.
    pub fn edge_at(&self, i: usize) -> Option<&EdgeRef> {
        match self {
            BoundaryPoint::Finite(p) => p.edges().get(i),
            BoundaryPoint::EventuallyPeriodic { prefix, cycle } => {
                if i < prefix.len() {
                    prefix.get(i)
                } else {
                    cycle.get((i - prefix.len()) % cycle.len())
                }
            }
        }
    }

    /// The first `n` edges, or `None` when the point is shorter.
    pub fn edge_prefix(&self, n: usize) -> Option<Vec<EdgeRef>> {
        match self {
            BoundaryPoint::Finite(p) if p.len() < n => None,
            _ => Some((0..n).map(|i| self.edge_at(i).unwrap().clone()).collect()),
        }
    }

    /// Source of the point: a vertex for positive length, the range set for
    /// length zero.
    pub fn source(&self, g: &Ultragraph) -> Result<PointSource, BoundaryError> {
        match self.edge_at(0) {
            Some(e) => Ok(PointSource::Vertex(g.edge_source(e)?)),
            None => match self {
                BoundaryPoint::Finite(p) => Ok(PointSource::Set(p.range().clone())),
                BoundaryPoint::EventuallyPeriodic { .. } => unreachable!("cycle is nonempty"),
            },
        }
    }

    /// Is the source of this point inside `a` (a vertex in `a`, or for
    /// length-zero points a subset of `a`)?
    pub fn source_in(&self, g: &Ultragraph, a: &SymbolicVertexSet) -> Result<bool, BoundaryError> {
        Ok(match self.source(g)? {
            PointSource::Vertex(v) => a.is_member(&v),
            PointSource::Set(s) => s.is_subset(a),
        })
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PointSource {
    Vertex(VertexRef),
    Set(SymbolicVertexSet),
}

fn canonicalize_eventually_periodic(
    mut prefix: Vec<EdgeRef>,
    cycle: Vec<EdgeRef>,
) -> (Vec<EdgeRef>, Vec<EdgeRef>) {
    // Primitive root of the cycle word.
    let n = cycle.len();
    let p = (1..=n)
        .find(|&p| n % p == 0 && (0..n).all(|i| cycle[i] == cycle[i % p]))
        .unwrap();
    let mut cycle: Vec<EdgeRef> = cycle[..p].to_vec();
    // Absorb a periodic tail of the prefix into the cycle anchor.
    while let Some(last) = prefix.last() {
        if *last == cycle[cycle.len() - 1] {
            prefix.pop();
            cycle.rotate_right(1);
        } else {
            break;
        }
    }
    (prefix, cycle)
}

impl fmt::Display for BoundaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryPoint::Finite(p) => write!(f, "{p}"),
            BoundaryPoint::EventuallyPeriodic { prefix, cycle } => {
                for e in prefix {
                    write!(f, "{e} ")?;
                }
                write!(f, "(")?;
                for (i, e) in cycle.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")^inf")
            }
        }
    }
}

/// A cylinder `D_{(β,B),F,S}` in canonical form: `F` inside the edges
/// leaving `B`, `S` inside the sinks of `B`, and both empty when `B` is a
/// sink singleton (the cylinder is then the singleton `{(β,B)}`).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Cylinder {
    base: Ultrapath,
    excluded_edges: BTreeSet<EdgeRef>,
    excluded_sinks: BTreeSet<VertexRef>,
}

impl Cylinder {
    pub fn new(
        g: &Ultragraph,
        base: Ultrapath,
        excluded_edges: BTreeSet<EdgeRef>,
        excluded_sinks: BTreeSet<VertexRef>,
    ) -> Result<Self, BoundaryError> {
        for e in &excluded_edges {
            let s = g.edge_source(e)?;
            if !base.range().is_member(&s) {
                return Err(BoundaryError::ExclusionNotInEpsilon(e.clone()));
            }
        }
        for v in &excluded_sinks {
            if !base.range().is_member(v) || !g.is_sink(v) {
                return Err(BoundaryError::ExclusionNotSink(v.clone()));
            }
        }
        Ok(Cylinder::new_clipped(g, base, excluded_edges, excluded_sinks))
    }

    /// Like `new`, but silently drops exclusions that are vacuous for the
    /// base range.
    fn new_clipped(
        g: &Ultragraph,
        base: Ultrapath,
        excluded_edges: BTreeSet<EdgeRef>,
        excluded_sinks: BTreeSet<VertexRef>,
    ) -> Self {
        let mut excluded_edges: BTreeSet<EdgeRef> = excluded_edges
            .into_iter()
            .filter(|e| {
                g.edge_source(e)
                    .map(|s| base.range().is_member(&s))
                    .unwrap_or(false)
            })
            .collect();
        let mut excluded_sinks: BTreeSet<VertexRef> = excluded_sinks
            .into_iter()
            .filter(|v| base.range().is_member(v) && g.is_sink(v))
            .collect();
        if classify_range(g, base.range()) == Some(RangeClass::SinkSingleton) {
            excluded_edges.clear();
            excluded_sinks.clear();
        }
        Cylinder {
            base,
            excluded_edges,
            excluded_sinks,
        }
    }

    pub fn plain(base: Ultrapath) -> Self {
        Cylinder {
            base,
            excluded_edges: BTreeSet::new(),
            excluded_sinks: BTreeSet::new(),
        }
    }

    pub fn base(&self) -> &Ultrapath {
        &self.base
    }

    pub fn excluded_edges(&self) -> &BTreeSet<EdgeRef> {
        &self.excluded_edges
    }

    pub fn excluded_sinks(&self) -> &BTreeSet<VertexRef> {
        &self.excluded_sinks
    }

    /// Exact membership of a boundary point.
    pub fn contains(&self, g: &Ultragraph, p: &BoundaryPoint) -> Result<bool, BoundaryError> {
        let n = self.base.len();
        let prefix = match p.edge_prefix(n) {
            Some(pre) => pre,
            None => return Ok(false),
        };
        if prefix != self.base.edges() {
            return Ok(false);
        }
        match p.edge_at(n) {
            Some(e) => {
                let s = g.edge_source(e)?;
                Ok(self.base.range().is_member(&s) && !self.excluded_edges.contains(e))
            }
            None => {
                // Same length: p = (β, P).
                let pset = match p {
                    BoundaryPoint::Finite(up) => up.range(),
                    BoundaryPoint::EventuallyPeriodic { .. } => unreachable!(),
                };
                if !pset.is_subset(self.base.range()) {
                    return Ok(false);
                }
                if pset == self.base.range() {
                    return Ok(true);
                }
                match classify_range(g, pset) {
                    Some(RangeClass::SinkSingleton) => {
                        let v = pset.enumerate(g.vertex_families(), 1).remove(0);
                        Ok(!self.excluded_sinks.contains(&v))
                    }
                    Some(_) => Ok(true),
                    None => Ok(false),
                }
            }
        }
    }

    /// Is this a semi-ring member: minimal base range, or a plain cylinder
    /// over a finite, finitely emitting range?
    pub fn in_semiring(&self, g: &Ultragraph) -> bool {
        match classify_range(g, self.base.range()) {
            Some(RangeClass::MinimalInfiniteEmitter) | Some(RangeClass::MinimalSink) => true,
            _ => {
                self.excluded_edges.is_empty()
                    && self.excluded_sinks.is_empty()
                    && self.base.range().cardinality().is_finite()
                    && g.epsilon(self.base.range()).1.is_finite()
            }
        }
    }
}

impl fmt::Display for Cylinder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D[{}", self.base)?;
        if !self.excluded_edges.is_empty() {
            let items: Vec<String> = self.excluded_edges.iter().map(|e| e.to_string()).collect();
            write!(f, "; F={{{}}}", items.join(","))?;
        }
        if !self.excluded_sinks.is_empty() {
            let items: Vec<String> = self.excluded_sinks.iter().map(|v| v.to_string()).collect();
            write!(f, "; S={{{}}}", items.join(","))?;
        }
        write!(f, "]")
    }
}

/// Intersection of two cylinders as a disjoint list (zero or one cylinder).
pub fn basis_intersect(
    g: &Ultragraph,
    c1: &Cylinder,
    c2: &Cylinder,
) -> Result<Vec<Cylinder>, BoundaryError> {
    let (a, b) = if c1.base.len() <= c2.base.len() {
        (c1, c2)
    } else {
        (c2, c1)
    };
    let alen = a.base.len();
    if b.base.edges()[..alen] != *a.base.edges() {
        return Ok(Vec::new());
    }
    if alen < b.base.len() {
        // Nested bases: b refines a when its next edge is admissible in a.
        let e = &b.base.edges()[alen];
        let s = g.edge_source(e)?;
        if a.base.range().is_member(&s) && !a.excluded_edges.contains(e) {
            return Ok(vec![b.clone()]);
        }
        return Ok(Vec::new());
    }
    // Same base word.
    let meet = a.base.range().intersect(b.base.range());
    if meet.is_empty() {
        return Ok(Vec::new());
    }
    if classify_range(g, &meet) == Some(RangeClass::SinkSingleton) {
        // The candidate set is the singleton {(β,{v})}; each input keeps it
        // only as its own distinguished point or an unexcluded terminal.
        let v = meet.enumerate(g.vertex_families(), 1).remove(0);
        let in_a = a.base.range() == &meet || !a.excluded_sinks.contains(&v);
        let in_b = b.base.range() == &meet || !b.excluded_sinks.contains(&v);
        if !(in_a && in_b) {
            return Ok(Vec::new());
        }
    }
    let f: BTreeSet<EdgeRef> = a
        .excluded_edges
        .union(&b.excluded_edges)
        .cloned()
        .collect();
    let s: BTreeSet<VertexRef> = a
        .excluded_sinks
        .union(&b.excluded_sinks)
        .cloned()
        .collect();
    let base = Ultrapath::new(g, a.base.edges().to_vec(), meet)?;
    Ok(vec![Cylinder::new_clipped(g, base, f, s)])
}

/// A cylinder to carve out of a partition: its elements are skipped, so
/// the produced pieces tile the complement.
struct Carve<'a> {
    set: &'a SymbolicVertexSet,
    excluded_edges: &'a BTreeSet<EdgeRef>,
    excluded_sinks: &'a BTreeSet<VertexRef>,
    minimal: bool,
}

impl Carve<'_> {
    fn keeps_edge(&self, g: &Ultragraph, e: &EdgeRef) -> bool {
        // True when the carve claims continuations through `e`.
        match g.edge_source(e) {
            Ok(s) => self.set.is_member(&s) && !self.excluded_edges.contains(e),
            Err(_) => false,
        }
    }

    fn keeps_sink(&self, v: &VertexRef) -> bool {
        self.set.is_member(v) && !self.excluded_sinks.contains(v)
    }
}

/// Partition the general cylinder `D_{(β,B),F,S}` (minus a carved
/// sub-cylinder, when given) into disjoint semi-ring members.
fn partition_general(
    g: &Ultragraph,
    base: &Ultrapath,
    f_excl: &BTreeSet<EdgeRef>,
    s_excl: &BTreeSet<VertexRef>,
    carve: Option<&Carve<'_>>,
) -> Result<Vec<Cylinder>, BoundaryError> {
    let b = base.range();
    let deco = g.decompose(b)?;
    let parts: Vec<&SymbolicVertexSet> = deco.minimal_parts().map(|p| p.set()).collect();
    let sinks = g.sink_set();
    let mut out = Vec::new();

    // Pairwise overlaps between minimal parts, and the finite remainder.
    let mut overlap = SymbolicVertexSet::empty();
    for (i, p) in parts.iter().enumerate() {
        for q in parts.iter().skip(i + 1) {
            overlap = overlap.union(&p.intersect(q));
        }
    }
    let leftover = overlap.union(&deco.finite_part);

    for part in &parts {
        if let Some(c) = carve {
            if c.minimal && c.set == *part {
                // The carved cylinder owns this base; emit only what it
                // excludes below its own F and S.
                let eps = g.epsilon(part).0;
                for e in c.excluded_edges {
                    if eps.is_member(e) && !f_excl.contains(e) && !overlap_has_source(g, &overlap, e)
                    {
                        let deeper = Ultrapath::full(g, extend(base.edges(), e))?;
                        out.extend(partition_general(
                            g,
                            &deeper,
                            &BTreeSet::new(),
                            &BTreeSet::new(),
                            None,
                        )?);
                    }
                }
                for v in c.excluded_sinks {
                    if part.is_member(v) && !s_excl.contains(v) && !overlap.is_member(v) {
                        out.push(sink_terminal(g, base, v)?);
                    }
                }
                continue;
            }
        }
        // Exclude the overlap region and the carve's claims; both are
        // reinstated through the leftover pieces or skipped entirely.
        let mut f: BTreeSet<EdgeRef> = f_excl.clone();
        let in_overlap = part.intersect(&overlap);
        // Overlaps of minimal sets are finite and never emit infinitely.
        for e in g.all_edges_from(&in_overlap)? {
            f.insert(e);
        }
        let mut s: BTreeSet<VertexRef> = s_excl.clone();
        let n = match in_overlap.cardinality() {
            Cardinality::Finite(n) => n as usize,
            Cardinality::Infinite => unreachable!("overlaps of minimal sets are finite"),
        };
        for v in in_overlap.enumerate(g.vertex_families(), n) {
            if sinks.is_member(&v) {
                s.insert(v);
            }
        }
        if let Some(c) = carve {
            let claimed = part.intersect(c.set).difference(&overlap);
            for e in g.all_edges_from(&claimed)? {
                if c.keeps_edge(g, &e) {
                    f.insert(e);
                }
            }
            let n = match claimed.cardinality() {
                Cardinality::Finite(n) => n as usize,
                Cardinality::Infinite => {
                    // A minimal carve equal to this part was handled above;
                    // any other carve meets a distinct minimal set finitely.
                    unreachable!("carve claims an infinite slice of a foreign minimal set")
                }
            };
            for v in claimed.enumerate(g.vertex_families(), n) {
                if sinks.is_member(&v) && c.keeps_sink(&v) {
                    s.insert(v);
                }
            }
        }
        let piece_base = Ultrapath::new(g, base.edges().to_vec(), (*part).clone())?;
        out.push(Cylinder::new_clipped(g, piece_base, f, s));
    }

    // Leftover region: overlaps plus the finite remainder.
    if !leftover.is_empty() {
        let eps = g.epsilon(&leftover).0;
        let eps_edges = g.all_edges_from(&leftover)?;
        let f_hits = f_excl.iter().any(|e| eps.is_member(e));
        let n = match leftover.cardinality() {
            Cardinality::Finite(n) => n as usize,
            Cardinality::Infinite => unreachable!("leftover is finite after decomposition"),
        };
        let members = leftover.enumerate(g.vertex_families(), n);
        let s_hits = members
            .iter()
            .any(|v| sinks.is_member(v) && s_excl.contains(v));
        let carve_hits = carve
            .map(|c| {
                eps_edges.iter().any(|e| c.keeps_edge(g, e))
                    || members
                        .iter()
                        .any(|v| sinks.is_member(v) && c.keeps_sink(v))
            })
            .unwrap_or(false);
        if !f_hits && !s_hits && !carve_hits {
            let piece_base = Ultrapath::new(g, base.edges().to_vec(), leftover.clone())?;
            out.push(Cylinder::plain(piece_base));
        } else {
            for e in &eps_edges {
                if f_excl.contains(e) || carve.map(|c| c.keeps_edge(g, e)).unwrap_or(false) {
                    continue;
                }
                let deeper = Ultrapath::full(g, extend(base.edges(), e))?;
                out.extend(partition_general(
                    g,
                    &deeper,
                    &BTreeSet::new(),
                    &BTreeSet::new(),
                    None,
                )?);
            }
            for v in &members {
                if !sinks.is_member(v)
                    || s_excl.contains(v)
                    || carve.map(|c| c.keeps_sink(v)).unwrap_or(false)
                {
                    continue;
                }
                out.push(sink_terminal(g, base, v)?);
            }
        }
    }
    Ok(out)
}

fn overlap_has_source(g: &Ultragraph, overlap: &SymbolicVertexSet, e: &EdgeRef) -> bool {
    g.edge_source(e)
        .map(|s| overlap.is_member(&s))
        .unwrap_or(false)
}

fn extend(edges: &[EdgeRef], e: &EdgeRef) -> Vec<EdgeRef> {
    let mut out = edges.to_vec();
    out.push(e.clone());
    out
}

fn sink_terminal(
    g: &Ultragraph,
    base: &Ultrapath,
    v: &VertexRef,
) -> Result<Cylinder, BoundaryError> {
    let up = Ultrapath::new(g, base.edges().to_vec(), SymbolicVertexSet::singleton(v))?;
    Ok(Cylinder::plain(up))
}

/// Split a cylinder into disjoint semi-ring members covering it.
pub fn decompose_to_semiring(
    g: &Ultragraph,
    c: &Cylinder,
) -> Result<Vec<Cylinder>, BoundaryError> {
    partition_general(g, &c.base, &c.excluded_edges, &c.excluded_sinks, None)
}

/// Relative complement `c \ c0` of semi-ring members with `c0 ⊆ c`,
/// as a disjoint list of semi-ring members.
pub fn semiring_diff(
    g: &Ultragraph,
    c: &Cylinder,
    c0: &Cylinder,
) -> Result<Vec<Cylinder>, BoundaryError> {
    if basis_intersect(g, c, c0)? != vec![c0.clone()] {
        return Err(BoundaryError::NotContained(
            Box::new(c0.clone()),
            Box::new(c.clone()),
        ));
    }
    if c == c0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut current = c.clone();
    // Peel the extension word one edge at a time; each step keeps every
    // element that leaves the deepened base.
    while current.base.len() < c0.base.len() {
        let e = c0.base.edges()[current.base.len()].clone();
        let mut f = current.excluded_edges.clone();
        f.insert(e.clone());
        out.extend(partition_general(
            g,
            &current.base,
            &f,
            &current.excluded_sinks,
            None,
        )?);
        let deeper = Ultrapath::full(g, extend(current.base.edges(), &e))?;
        current = Cylinder::plain(deeper);
    }
    if &current == c0 {
        return Ok(out);
    }
    let carve = Carve {
        set: c0.base.range(),
        excluded_edges: &c0.excluded_edges,
        excluded_sinks: &c0.excluded_sinks,
        minimal: matches!(
            classify_range(g, c0.base.range()),
            Some(RangeClass::MinimalInfiniteEmitter) | Some(RangeClass::MinimalSink)
        ),
    };
    out.extend(partition_general(
        g,
        &current.base,
        &current.excluded_edges,
        &current.excluded_sinks,
        Some(&carve),
    )?);
    Ok(out)
}

/// A reduced word `a·b⁻¹` over the free group on the edges. Either half
/// may be empty; the empty word is the group unit.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GroupWord {
    pos: Vec<EdgeRef>,
    neg: Vec<EdgeRef>,
}

impl GroupWord {
    /// Build `pos · neg⁻¹` and cancel the common suffix.
    pub fn new(mut pos: Vec<EdgeRef>, mut neg: Vec<EdgeRef>) -> Self {
        while let (Some(p), Some(q)) = (pos.last(), neg.last()) {
            if p == q {
                pos.pop();
                neg.pop();
            } else {
                break;
            }
        }
        GroupWord { pos, neg }
    }

    pub fn unit() -> Self {
        GroupWord {
            pos: Vec::new(),
            neg: Vec::new(),
        }
    }

    pub fn positive(path: Vec<EdgeRef>) -> Self {
        GroupWord::new(path, Vec::new())
    }

    pub fn inverse_of(path: Vec<EdgeRef>) -> Self {
        GroupWord::new(Vec::new(), path)
    }

    pub fn pos(&self) -> &[EdgeRef] {
        &self.pos
    }

    pub fn neg(&self) -> &[EdgeRef] {
        &self.neg
    }

    pub fn inverse(&self) -> Self {
        GroupWord {
            pos: self.neg.clone(),
            neg: self.pos.clone(),
        }
    }

    pub fn is_unit(&self) -> bool {
        self.pos.is_empty() && self.neg.is_empty()
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_unit() {
            return write!(f, "0");
        }
        for e in &self.pos {
            write!(f, "{e} ")?;
        }
        for e in self.neg.iter().rev() {
            write!(f, "{e}^-1 ")?;
        }
        Ok(())
    }
}

/// A disjoint cylinder cover of a clopen region, with an exhaustion note
/// when the region is only covered in the limit.
#[derive(Clone, Debug)]
pub struct RegionCover {
    pub cylinders: Vec<Cylinder>,
    /// For the whole-space region: the head truncation used and whether
    /// the cover is already exact at that truncation.
    pub exhaustion: Option<ExhaustionNote>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExhaustionNote {
    pub truncation: u64,
    pub exact: bool,
}

/// Admissibility of a path word (not just consecutive pairs: also each
/// edge must exist).
fn is_path(g: &Ultragraph, edges: &[EdgeRef]) -> bool {
    !edges.is_empty() && check_admissible(g, edges).is_ok()
}

/// The region `X_A` of points whose source lies in `A`: a disjoint
/// semi-ring cover via the decomposition of `A`.
pub fn region_xa(g: &Ultragraph, a: &SymbolicVertexSet) -> Result<Vec<Cylinder>, BoundaryError> {
    let a = a.clip(g.vertex_families());
    if a.is_empty() {
        return Ok(Vec::new());
    }
    let base = Ultrapath::zero(g, a)?;
    decompose_to_semiring(g, &Cylinder::plain(base))
}

/// The domain region `X_w` of a group word: positive words give a single
/// deep cylinder, inverses decompose the final range, mixed words restrict
/// to the meet of the two ranges, and every other word has empty domain.
pub fn region_xc(g: &Ultragraph, w: &GroupWord, truncation: u64) -> Result<RegionCover, BoundaryError> {
    if w.is_unit() {
        return whole_space_cover(g, truncation);
    }
    let cylinders = match (w.pos.is_empty(), w.neg.is_empty()) {
        (false, true) => {
            if is_path(g, &w.pos) {
                vec![Cylinder::plain(Ultrapath::full(g, w.pos.clone())?)]
            } else {
                Vec::new()
            }
        }
        (true, false) => {
            if is_path(g, &w.neg) {
                let r = g.edge_range(w.neg.last().unwrap())?;
                region_xa(g, &r)?
            } else {
                Vec::new()
            }
        }
        (false, false) => {
            if is_path(g, &w.pos) && is_path(g, &w.neg) {
                let ra = g.edge_range(w.pos.last().unwrap())?;
                let rb = g.edge_range(w.neg.last().unwrap())?;
                let meet = ra.intersect(&rb);
                if meet.is_empty() {
                    Vec::new()
                } else {
                    vec![Cylinder::plain(Ultrapath::new(g, w.pos.clone(), meet)?)]
                }
            } else {
                Vec::new()
            }
        }
        (true, true) => unreachable!("unit handled above"),
    };
    Ok(RegionCover {
        cylinders,
        exhaustion: None,
    })
}

/// Cover of the whole space by length-zero cylinders over an exhaustion
/// set: all constant ranges, all named vertices, and family heads up to
/// the truncation. The cover is exact when the exhaustion set is the full
/// vertex set; otherwise it only exhausts the space in the limit.
fn whole_space_cover(g: &Ultragraph, truncation: u64) -> Result<RegionCover, BoundaryError> {
    let mut top = SymbolicVertexSet::from_named(g.named_vertices().iter().cloned());
    for r in g.range_generators() {
        top = top.union(&r);
    }
    for (fam, base) in g.vertex_families() {
        for i in *base..base.saturating_add(truncation) {
            top.insert(Ref::Indexed(fam.clone(), i));
        }
    }
    let exact = g.full_vertex_set().difference(&top).is_empty();
    let cylinders = region_xa(g, &top)?;
    Ok(RegionCover {
        cylinders,
        exhaustion: Some(ExhaustionNote { truncation, exact }),
    })
}

/// Membership of a point in the domain `X_{w}` of a group word.
pub fn in_region(g: &Ultragraph, w: &GroupWord, p: &BoundaryPoint) -> Result<bool, BoundaryError> {
    if w.is_unit() {
        return Ok(true);
    }
    match (w.pos.is_empty(), w.neg.is_empty()) {
        (false, true) => Ok(p.edge_prefix(w.pos.len()).as_deref() == Some(&w.pos[..])),
        (true, false) => {
            if !is_path(g, &w.neg) {
                return Ok(false);
            }
            let r = g.edge_range(w.neg.last().unwrap())?;
            p.source_in(g, &r)
        }
        (false, false) => {
            if p.edge_prefix(w.pos.len()).as_deref() != Some(&w.pos[..]) {
                return Ok(false);
            }
            let ra = g.edge_range(w.pos.last().unwrap())?;
            let rb = g.edge_range(w.neg.last().unwrap())?;
            let meet = ra.intersect(&rb);
            match p.edge_at(w.pos.len()) {
                Some(e) => Ok(meet.is_member(&g.edge_source(e)?)),
                None => match p {
                    BoundaryPoint::Finite(up) => Ok(up.range().is_subset(&meet)),
                    BoundaryPoint::EventuallyPeriodic { .. } => unreachable!(),
                },
            }
        }
        (true, true) => Ok(true),
    }
}

/// Apply the partial action of a group word to a point: prepend for
/// positive words, strip for inverses, and replace the prefix for mixed
/// words. The point must lie in `X_{w⁻¹}`.
pub fn theta_apply(
    g: &Ultragraph,
    w: &GroupWord,
    p: &BoundaryPoint,
) -> Result<BoundaryPoint, BoundaryError> {
    if !in_region(g, &w.inverse(), p)? {
        return Err(BoundaryError::OutsideDomain);
    }
    let stripped = strip_prefix(g, &w.neg, p)?;
    prepend(g, &w.pos, &stripped)
}

fn strip_prefix(
    g: &Ultragraph,
    pre: &[EdgeRef],
    p: &BoundaryPoint,
) -> Result<BoundaryPoint, BoundaryError> {
    if pre.is_empty() {
        return Ok(p.clone());
    }
    match p {
        BoundaryPoint::Finite(up) => {
            let rest = up.edges()[pre.len()..].to_vec();
            BoundaryPoint::finite(g, Ultrapath::new(g, rest, up.range().clone())?)
        }
        BoundaryPoint::EventuallyPeriodic { prefix, cycle } => {
            let mut prefix = prefix.clone();
            let mut cycle = cycle.clone();
            // Unroll the cycle far enough to strip from the prefix alone.
            while prefix.len() < pre.len() {
                prefix.push(cycle[0].clone());
                cycle.rotate_left(1);
            }
            BoundaryPoint::eventually_periodic(g, prefix[pre.len()..].to_vec(), cycle)
        }
    }
}

fn prepend(
    g: &Ultragraph,
    pre: &[EdgeRef],
    p: &BoundaryPoint,
) -> Result<BoundaryPoint, BoundaryError> {
    if pre.is_empty() {
        return Ok(p.clone());
    }
    match p {
        BoundaryPoint::Finite(up) => {
            let mut edges = pre.to_vec();
            edges.extend(up.edges().iter().cloned());
            BoundaryPoint::finite(g, Ultrapath::new(g, edges, up.range().clone())?)
        }
        BoundaryPoint::EventuallyPeriodic { prefix, cycle } => {
            let mut new_prefix = pre.to_vec();
            new_prefix.extend(prefix.iter().cloned());
            BoundaryPoint::eventually_periodic(g, new_prefix, cycle.clone())
        }
    }
}

/// Apply the partial action to a whole cylinder. The cylinder must be
/// contained in `X_{w⁻¹}`; containment is checked on the presentation
/// (base word and range), which covers every semi-ring member.
pub fn theta_apply_cyl(
    g: &Ultragraph,
    w: &GroupWord,
    c: &Cylinder,
) -> Result<Cylinder, BoundaryError> {
    // Strip w.neg from the base.
    let base = &c.base;
    let stripped_edges: Vec<EdgeRef> = if w.neg.is_empty() {
        base.edges().to_vec()
    } else {
        if base.len() < w.neg.len() || base.edges()[..w.neg.len()] != w.neg[..] {
            return Err(BoundaryError::OutsideDomain);
        }
        base.edges()[w.neg.len()..].to_vec()
    };
    // Prepend w.pos; admissibility at the seam needs s(base…) ∈ r(pos).
    let new_edges: Vec<EdgeRef> = if w.pos.is_empty() {
        stripped_edges
    } else {
        if !is_path(g, &w.pos) {
            return Err(BoundaryError::OutsideDomain);
        }
        let r = g.edge_range(w.pos.last().unwrap())?;
        let admissible = match stripped_edges.first() {
            Some(e) => r.is_member(&g.edge_source(e)?),
            None => base.range().is_subset(&r),
        };
        if !admissible {
            return Err(BoundaryError::OutsideDomain);
        }
        let mut edges = w.pos.clone();
        edges.extend(stripped_edges);
        edges
    };
    let new_base = Ultrapath::new(g, new_edges, base.range().clone())?;
    Ok(Cylinder {
        base: new_base,
        excluded_edges: c.excluded_edges.clone(),
        excluded_sinks: c.excluded_sinks.clone(),
    })
}
