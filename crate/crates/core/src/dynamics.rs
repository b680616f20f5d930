//! Shift dynamics on the boundary space: cycles and exits, Condition (L),
//! isolated points, stabilizer groups, groupoid element arithmetic, and
//! sampled orbit-equivalence verification.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::boundary::{
    classify_range, theta_apply, BoundaryError, BoundaryPoint, GroupWord, RangeClass, Ultrapath,
};
use crate::symbolic::{Cardinality, EdgeRef, FamilyPart, Ref, Symbol, SymbolicVertexSet, VertexRef};
use crate::ultragraph::{EdgeRangeDecl, EdgeSource, GraphError, Ultragraph};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum DynamicsError {
    #[error("boundary error: {0}")]
    Boundary(#[from] BoundaryError),
    #[error("the shift needs length at least {needed}, point has length {got}")]
    LengthTooShort { needed: u64, got: u64 },
    #[error("groupoid elements do not compose: source and range differ")]
    NotComposable,
    #[error("certificate does not hold: shifted points differ")]
    BadCertificate,
    #[error("block map has no rule for edge {0}")]
    RuleGap(EdgeRef),
    #[error("block map has no rule for vertex {0}")]
    VertexGap(VertexRef),
    #[error("graph error: {0}")]
    Graph(#[from] GraphError),
}

/// One application of the shift map; undefined on length-zero points.
pub fn shift(g: &Ultragraph, p: &BoundaryPoint) -> Result<BoundaryPoint, DynamicsError> {
    match p.edge_at(0) {
        None => Err(DynamicsError::LengthTooShort { needed: 1, got: 0 }),
        Some(e) => {
            let w = GroupWord::inverse_of(vec![e.clone()]);
            Ok(theta_apply(g, &w, p)?)
        }
    }
}

pub fn shift_n(g: &Ultragraph, p: &BoundaryPoint, n: u64) -> Result<BoundaryPoint, DynamicsError> {
    if let Cardinality::Finite(len) = p.len() {
        if len < n {
            return Err(DynamicsError::LengthTooShort { needed: n, got: len });
        }
    }
    let mut q = p.clone();
    for _ in 0..n {
        q = shift(g, &q)?;
    }
    Ok(q)
}

/// A closed ultrapath: the source of the word lies in the range.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Cycle {
    pub path: Ultrapath,
    pub simple: bool,
}

impl fmt::Display for Cycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.path, if self.simple { " (simple)" } else { "" })
    }
}

/// Witness that a cycle has an exit: an alternative edge or a sink
/// reachable from one of its edge ranges.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ExitWitness {
    Edge { edge: EdgeRef, position: usize },
    Sink { vertex: VertexRef, position: usize },
}

impl fmt::Display for ExitWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExitWitness::Edge { edge, position } => {
                write!(f, "edge {edge} out of range at position {position}")
            }
            ExitWitness::Sink { vertex, position } => {
                write!(f, "sink {vertex} in range at position {position}")
            }
        }
    }
}

/// All concrete edges with family indices at most `truncation`.
fn concrete_edges(g: &Ultragraph, truncation: u64) -> Vec<EdgeRef> {
    let mut out = Vec::new();
    for decl in g.edge_decls().values() {
        if !decl.indexed {
            out.push(Ref::Named(decl.id.clone()));
        } else {
            let start = g.edge_bases()[&decl.id];
            for i in start..=truncation.max(start) {
                out.push(Ref::Indexed(decl.id.clone(), i));
            }
        }
    }
    out
}

/// All cycles of length at most `max_len` over the concrete edges, with
/// maximal admissible ranges and simplicity flags.
pub fn find_cycles(g: &Ultragraph, max_len: usize, truncation: u64) -> Vec<Cycle> {
    fn dfs(
        g: &Ultragraph,
        edges: &[EdgeRef],
        stack: &mut Vec<EdgeRef>,
        max_len: usize,
        out: &mut Vec<Cycle>,
    ) {
        if let Some(last) = stack.last() {
            let r = g.edge_range(last).expect("concrete edge");
            let s0 = g.edge_source(&stack[0]).expect("concrete edge");
            if r.is_member(&s0) {
                let path = Ultrapath::new(g, stack.clone(), r.clone()).expect("admissible");
                let simple = is_simple_cycle(g, stack);
                out.push(Cycle { path, simple });
            }
        }
        if stack.len() == max_len {
            return;
        }
        for e in edges {
            let ok = match stack.last() {
                None => true,
                Some(prev) => {
                    let r = g.edge_range(prev).expect("concrete edge");
                    let s = g.edge_source(e).expect("concrete edge");
                    r.is_member(&s)
                }
            };
            if ok {
                stack.push(e.clone());
                dfs(g, edges, stack, max_len, out);
                stack.pop();
            }
        }
    }
    let edges = concrete_edges(g, truncation);
    let mut out = Vec::new();
    let mut stack: Vec<EdgeRef> = Vec::new();
    dfs(g, &edges, &mut stack, max_len, &mut out);
    out
}

/// A cycle is simple when it is not a concatenation of two or more
/// shorter cycles.
fn is_simple_cycle(g: &Ultragraph, edges: &[EdgeRef]) -> bool {
    let n = edges.len();
    let closes = |i: usize, j: usize| -> bool {
        // edges[i..=j] closes up: s(edges[i]) ∈ r(edges[j]).
        let r = g.edge_range(&edges[j]).expect("concrete edge");
        let s = g.edge_source(&edges[i]).expect("concrete edge");
        r.is_member(&s)
    };
    // reachable[j] = the prefix of length j splits into closed chunks.
    let mut reachable = vec![false; n + 1];
    reachable[0] = true;
    for j in 1..=n {
        for i in 0..j {
            if reachable[i] && closes(i, j - 1) {
                reachable[j] = true;
                break;
            }
        }
    }
    // A proper split needs a closed proper prefix plus a closed rest.
    !(1..n).any(|i| reachable[i] && closes(i, n - 1))
}

/// Exit witness for the cycle with the given edge word, if one exists.
///
/// A cycle has an exit exactly when some edge range along it has two or
/// more vertices or emits two or more edges.
pub fn has_exit(g: &Ultragraph, cycle_edges: &[EdgeRef]) -> Option<ExitWitness> {
    let n = cycle_edges.len();
    let sinks = g.sink_set();
    for (i, e) in cycle_edges.iter().enumerate() {
        let r = g.edge_range(e).expect("concrete edge");
        let next = &cycle_edges[(i + 1) % n];
        let (eps, eps_card) = g.epsilon(&r);
        let many_edges = match eps_card {
            Cardinality::Infinite => true,
            Cardinality::Finite(k) => k >= 2,
        };
        if many_edges {
            for cand in eps.enumerate(g.edge_bases(), 2) {
                if &cand != next {
                    return Some(ExitWitness::Edge { edge: cand, position: i });
                }
            }
        }
        if r.cardinality() != Cardinality::Finite(1) {
            let succ = g.edge_source(next).expect("concrete edge");
            for u in r.enumerate(g.vertex_families(), 2) {
                if u == succ {
                    continue;
                }
                if sinks.is_member(&u) {
                    return Some(ExitWitness::Sink { vertex: u, position: i });
                }
                let out = g.edges_from(&SymbolicVertexSet::singleton(&u), 1);
                if let Some(edge) = out.into_iter().next() {
                    return Some(ExitWitness::Edge { edge, position: i });
                }
            }
        }
    }
    None
}

/// Verdict of the every-cycle-has-an-exit check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConditionL {
    Holds,
    Fails { cycle: Vec<EdgeRef> },
    UnknownBeyondBound { max_len: usize, truncation: u64 },
}

/// An edge is rigid when its range is a single vertex that emits exactly
/// one edge; exitless cycles consist of rigid edges chained cyclically.
fn rigid_successor(g: &Ultragraph, e: &EdgeRef) -> Option<EdgeRef> {
    let r = g.edge_range(e).ok()?;
    if r.cardinality() != Cardinality::Finite(1) {
        return None;
    }
    let (eps, card) = g.epsilon(&r);
    if card != Cardinality::Finite(1) {
        return None;
    }
    eps.enumerate(g.edge_bases(), 1).into_iter().next()
}

/// Can any edge of an indexed declaration have a singleton range?
/// Only such edges can take part in an exitless cycle.
fn family_possibly_rigid(g: &Ultragraph, id: &Symbol) -> bool {
    let decl = &g.edge_decls()[id];
    match &decl.range {
        EdgeRangeDecl::ConstSet(r) => {
            r.clip(g.vertex_families()).cardinality() == Cardinality::Finite(1)
        }
        EdgeRangeDecl::IndexedRefs(_) => {
            let start = g.edge_bases()[id];
            let r = g
                .edge_range(&Ref::Indexed(id.clone(), start))
                .expect("valid start");
            // Ranges only gain vertices as the index grows, so the domain
            // start is the worst case.
            r.cardinality() == Cardinality::Finite(1)
        }
    }
}

/// Bounded check of Condition (L). Exitless cycles over the concrete
/// edges are found exactly through the rigid-successor graph; the verdict
/// stays `Unknown` when an indexed family could hide a rigid cycle beyond
/// the truncation.
pub fn check_condition_l(g: &Ultragraph, max_len: usize, truncation: u64) -> ConditionL {
    let edges = concrete_edges(g, truncation);
    for start in &edges {
        let mut seen = vec![start.clone()];
        let mut cur = start.clone();
        for _ in 0..edges.len().max(max_len) {
            match rigid_successor(g, &cur) {
                Some(next) => {
                    if next == *start {
                        return ConditionL::Fails { cycle: seen };
                    }
                    if seen.contains(&next) {
                        break;
                    }
                    seen.push(next.clone());
                    cur = next;
                }
                None => break,
            }
        }
    }
    let families_safe = g
        .edge_decls()
        .values()
        .filter(|d| d.indexed)
        .all(|d| !family_possibly_rigid(g, &d.id));
    if families_safe {
        ConditionL::Holds
    } else {
        ConditionL::UnknownBeyondBound { max_len, truncation }
    }
}

/// Why a point is or is not isolated.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum IsolationReason {
    /// Finite point ending in a sink singleton.
    EventualSink,
    /// Eventually periodic with an exitless cycle.
    ExitlessCycle,
    /// Aperiodic tail that is eventually single-ranged and single-emitting.
    NonWanderingTail,
    /// Finite point ending in a minimal set: every neighborhood is infinite.
    MinimalRange,
    /// The eventual cycle has an exit.
    CycleWithExit(ExitWitness),
    /// The tail branches infinitely often.
    WanderingTail,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Isolation {
    pub isolated: bool,
    pub reason: IsolationReason,
}

pub fn classify_isolated(g: &Ultragraph, p: &BoundaryPoint) -> Isolation {
    match p {
        BoundaryPoint::Finite(up) => match classify_range(g, up.range()) {
            Some(RangeClass::SinkSingleton) => Isolation {
                isolated: true,
                reason: IsolationReason::EventualSink,
            },
            _ => Isolation {
                isolated: false,
                reason: IsolationReason::MinimalRange,
            },
        },
        BoundaryPoint::EventuallyPeriodic { cycle, .. } => match has_exit(g, cycle) {
            None => Isolation {
                isolated: true,
                reason: IsolationReason::ExitlessCycle,
            },
            Some(w) => Isolation {
                isolated: false,
                reason: IsolationReason::CycleWithExit(w),
            },
        },
    }
}

/// Isolation of the aperiodic ray `prefix · f[start] f[start+1] …` through
/// one indexed edge family. The tail is index-uniform beyond a finite
/// window, so the two branch counts are decided symbolically: the ray is
/// isolated exactly when both stay below two from some position on.
pub fn classify_isolated_ray(
    g: &Ultragraph,
    prefix: &[EdgeRef],
    family: &Symbol,
    start: u64,
) -> Result<Isolation, DynamicsError> {
    let decl = g
        .edge_decls()
        .get(family)
        .filter(|d| d.indexed)
        .ok_or_else(|| GraphError::UnknownEdge(Ref::Indexed(family.clone(), start)))?;
    let spread = match &decl.range {
        EdgeRangeDecl::IndexedRefs(refs) => {
            refs.iter().map(|r| r.offset.unsigned_abs()).max().unwrap_or(0)
        }
        EdgeRangeDecl::ConstSet(_) => 0,
    };
    let source_spread = match &decl.source {
        EdgeSource::Indexed { offset, .. } => offset.unsigned_abs(),
        EdgeSource::Const(_) => 0,
    };
    let max_base = g.vertex_families().values().copied().max().unwrap_or(0);
    let window_end = start + spread + source_spread + max_base + 2;
    // Admissibility on the window; index-uniformity carries it onward.
    let mut chain: Vec<EdgeRef> = prefix.to_vec();
    for i in start..=window_end {
        chain.push(Ref::Indexed(family.clone(), i));
    }
    Ultrapath::full(g, chain)?;
    // Branch counts probed at the uniform part and across the window.
    for i in start..=window_end {
        let r = g.edge_range(&Ref::Indexed(family.clone(), i))?;
        let wide_range = r.cardinality() != Cardinality::Finite(1);
        let wide_emission = match g.epsilon(&r).1 {
            Cardinality::Infinite => true,
            Cardinality::Finite(k) => k >= 2,
        };
        // Only the uniform tail decides isolation; a fat range early on is
        // a finitely supported branch and does not matter.
        if i == window_end && (wide_range || wide_emission) {
            return Ok(Isolation {
                isolated: false,
                reason: IsolationReason::WanderingTail,
            });
        }
    }
    Ok(Isolation {
        isolated: true,
        reason: IsolationReason::NonWanderingTail,
    })
}

/// A subgroup of the integers: `d·Z`, with `d = 0` for the trivial group.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Subgroup(pub u64);

impl fmt::Display for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == 0 {
            write!(f, "{{0}}")
        } else {
            write!(f, "{}Z", self.0)
        }
    }
}

/// Stabilizer data of a boundary point.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StabReport {
    pub stab: Subgroup,
    /// Least positive element of the stabilizer, `None` for infinity.
    pub stab_min: Option<u64>,
    pub stab_ess: Subgroup,
    pub stab_ess_min: Option<u64>,
}

/// Stabilizers of a representable point. Finite points have trivial
/// stabilizers. An eventually periodic point with primitive cycle `γ` has
/// stabilizer `|γ|·Z`; the essential stabilizer is the same when `γ` has
/// no exit and trivial otherwise (an exit supplies, in every neighborhood,
/// points on which the two shift powers disagree).
pub fn stabilizers(g: &Ultragraph, p: &BoundaryPoint) -> StabReport {
    match p {
        BoundaryPoint::Finite(_) => StabReport {
            stab: Subgroup(0),
            stab_min: None,
            stab_ess: Subgroup(0),
            stab_ess_min: None,
        },
        BoundaryPoint::EventuallyPeriodic { cycle, .. } => {
            let d = cycle.len() as u64;
            if has_exit(g, cycle).is_none() {
                StabReport {
                    stab: Subgroup(d),
                    stab_min: Some(d),
                    stab_ess: Subgroup(d),
                    stab_ess_min: Some(d),
                }
            } else {
                StabReport {
                    stab: Subgroup(d),
                    stab_min: Some(d),
                    stab_ess: Subgroup(0),
                    stab_ess_min: None,
                }
            }
        }
    }
}

/// A groupoid element `(x, k, y)` with a certificate `σ^m(x) = σ^n(y)`,
/// `k = m − n`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GroupoidElement {
    x: BoundaryPoint,
    k: i64,
    y: BoundaryPoint,
    m: u64,
    n: u64,
}

impl GroupoidElement {
    pub fn new(
        g: &Ultragraph,
        x: BoundaryPoint,
        m: u64,
        n: u64,
        y: BoundaryPoint,
    ) -> Result<Self, DynamicsError> {
        if shift_n(g, &x, m)? != shift_n(g, &y, n)? {
            return Err(DynamicsError::BadCertificate);
        }
        Ok(GroupoidElement {
            x,
            k: m as i64 - n as i64,
            y,
            m,
            n,
        })
    }

    pub fn unit(p: BoundaryPoint) -> Self {
        GroupoidElement {
            x: p.clone(),
            k: 0,
            y: p,
            m: 0,
            n: 0,
        }
    }

    pub fn from_shift(g: &Ultragraph, p: &BoundaryPoint) -> Result<Self, DynamicsError> {
        let sp = shift(g, p)?;
        Ok(GroupoidElement {
            x: p.clone(),
            k: 1,
            y: sp,
            m: 1,
            n: 0,
        })
    }

    pub fn range(&self) -> &BoundaryPoint {
        &self.x
    }

    pub fn source(&self) -> &BoundaryPoint {
        &self.y
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn certificate(&self) -> (u64, u64) {
        (self.m, self.n)
    }

    pub fn inverse(&self) -> GroupoidElement {
        GroupoidElement {
            x: self.y.clone(),
            k: -self.k,
            y: self.x.clone(),
            m: self.n,
            n: self.m,
        }
    }

    pub fn is_unit(&self) -> bool {
        self.k == 0 && self.x == self.y
    }

    /// `(x,k,y)(y,l,z) = (x,k+l,z)`, with the certificate recomputed and
    /// reduced for finite points.
    pub fn compose(&self, g: &Ultragraph, other: &GroupoidElement) -> Result<Self, DynamicsError> {
        if self.y != other.x {
            return Err(DynamicsError::NotComposable);
        }
        let k = self.k + other.k;
        let (m, n) = match self.x.len() {
            Cardinality::Infinite => (self.m + other.m, self.n + other.n),
            Cardinality::Finite(_) => {
                // Minimal certificate: m − n = k with both shifts defined.
                let m = k.max(0) as u64;
                let n = (m as i64 - k) as u64;
                (m, n)
            }
        };
        GroupoidElement::new(g, self.x.clone(), m, n, other.y.clone())
    }
}

/// Per-point cocycle values, looked up by the first edge.
#[derive(Clone, Debug, Default)]
pub struct CocycleTable {
    pub default: u64,
    pub by_first_edge: BTreeMap<EdgeRef, u64>,
}

impl CocycleTable {
    pub fn constant(v: u64) -> Self {
        CocycleTable {
            default: v,
            by_first_edge: BTreeMap::new(),
        }
    }

    pub fn value(&self, p: &BoundaryPoint) -> u64 {
        match p.edge_at(0) {
            Some(e) => self.by_first_edge.get(e).copied().unwrap_or(self.default),
            None => self.default,
        }
    }
}

/// A finite presentation of a boundary-space map: exceptional prefix
/// rewrites applied once at the start, an edgewise relabeling for the
/// rest, and vertex maps for terminal ranges. Cocycle tables carry the
/// shift lags used by the orbit-equivalence identities.
#[derive(Clone, Debug, Default)]
pub struct BlockMap {
    /// Exceptional initial-segment rewrites, matched longest-first.
    pub prefix_rules: Vec<(Vec<EdgeRef>, Vec<EdgeRef>)>,
    /// Named edge id -> image edge id.
    pub edge_map: BTreeMap<Symbol, Symbol>,
    /// Indexed edge declaration id -> (image id, index shift).
    pub edge_family_map: BTreeMap<Symbol, (Symbol, i64)>,
    /// Named vertex -> image vertex (for terminal ranges).
    pub vertex_map: BTreeMap<Symbol, Symbol>,
    /// Vertex family id -> (image family, index shift).
    pub vertex_family_map: BTreeMap<Symbol, (Symbol, i64)>,
    pub k: CocycleTable,
    pub l: CocycleTable,
}

impl BlockMap {
    /// The identity presentation for a graph: every edge and vertex maps
    /// to itself. The lags are `k = 0`, `l = 1`, which is what the
    /// defining identity needs of the identity homeomorphism.
    pub fn identity(g: &Ultragraph) -> Self {
        let mut m = BlockMap::default();
        m.l = CocycleTable::constant(1);
        for decl in g.edge_decls().values() {
            if decl.indexed {
                m.edge_family_map
                    .insert(decl.id.clone(), (decl.id.clone(), 0));
            } else {
                m.edge_map.insert(decl.id.clone(), decl.id.clone());
            }
        }
        for v in g.named_vertices() {
            m.vertex_map.insert(v.clone(), v.clone());
        }
        for f in g.vertex_families().keys() {
            m.vertex_family_map.insert(f.clone(), (f.clone(), 0));
        }
        m
    }

    fn map_edge(&self, e: &EdgeRef) -> Result<EdgeRef, DynamicsError> {
        match e {
            Ref::Named(id) => self
                .edge_map
                .get(id)
                .cloned()
                .map(Ref::Named)
                .ok_or_else(|| DynamicsError::RuleGap(e.clone())),
            Ref::Indexed(id, i) => {
                let (img, shift) = self
                    .edge_family_map
                    .get(id)
                    .ok_or_else(|| DynamicsError::RuleGap(e.clone()))?;
                Ok(Ref::Indexed(img.clone(), (*i as i64 + shift) as u64))
            }
        }
    }

    fn map_vertex_set(&self, s: &SymbolicVertexSet) -> Result<SymbolicVertexSet, DynamicsError> {
        let mut out = SymbolicVertexSet::empty();
        for v in s.named_part() {
            let img = self
                .vertex_map
                .get(v)
                .ok_or_else(|| DynamicsError::VertexGap(Ref::Named(v.clone())))?;
            out.insert(Ref::Named(img.clone()));
        }
        for (fam, part) in s.family_parts() {
            let (img, shift) = self
                .vertex_family_map
                .get(fam)
                .ok_or_else(|| DynamicsError::VertexGap(Ref::Indexed(fam.clone(), 0)))?;
            let mapped = match part {
                FamilyPart::Finite(idx) => {
                    FamilyPart::Finite(idx.iter().map(|&i| (i as i64 + shift) as u64).collect())
                }
                FamilyPart::Cofinite(excl) => {
                    FamilyPart::Cofinite(excl.iter().map(|&i| (i as i64 + shift) as u64).collect())
                }
            };
            out.set_family_part(img.clone(), mapped);
        }
        Ok(out)
    }

    /// Image of a boundary point in the target graph.
    pub fn apply(
        &self,
        target: &Ultragraph,
        p: &BoundaryPoint,
    ) -> Result<BoundaryPoint, DynamicsError> {
        // Longest exceptional prefix rule that matches.
        let mut rule: Option<&(Vec<EdgeRef>, Vec<EdgeRef>)> = None;
        for r in &self.prefix_rules {
            if p.edge_prefix(r.0.len()).as_deref() == Some(&r.0[..])
                && rule.map(|b| b.0.len() < r.0.len()).unwrap_or(true)
            {
                rule = Some(r);
            }
        }
        let consumed = rule.map(|r| r.0.len()).unwrap_or(0);
        let head: Vec<EdgeRef> = rule.map(|r| r.1.clone()).unwrap_or_default();
        match p {
            BoundaryPoint::Finite(up) => {
                let mut edges = head;
                for e in &up.edges()[consumed..] {
                    edges.push(self.map_edge(e)?);
                }
                let range = self.map_vertex_set(up.range())?;
                Ok(BoundaryPoint::finite(
                    target,
                    Ultrapath::new(target, edges, range)?,
                )?)
            }
            BoundaryPoint::EventuallyPeriodic { prefix, cycle } => {
                let mut prefix = prefix.clone();
                let mut cycle = cycle.clone();
                while prefix.len() < consumed {
                    prefix.push(cycle[0].clone());
                    cycle.rotate_left(1);
                }
                let mut new_prefix = head;
                for e in &prefix[consumed..] {
                    new_prefix.push(self.map_edge(e)?);
                }
                let new_cycle = cycle
                    .iter()
                    .map(|e| self.map_edge(e))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(BoundaryPoint::eventually_periodic(
                    target, new_prefix, new_cycle,
                )?)
            }
        }
    }
}

/// Outcome of one family of identity checks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckOutcome {
    pub passed: bool,
    pub checked: usize,
    pub witness: Option<String>,
}

impl CheckOutcome {
    fn pass(checked: usize) -> Self {
        CheckOutcome {
            passed: true,
            checked,
            witness: None,
        }
    }

    fn fail(checked: usize, witness: String) -> Self {
        CheckOutcome {
            passed: false,
            checked,
            witness: Some(witness),
        }
    }
}

/// Verification report for a candidate orbit equivalence.
#[derive(Clone, Debug)]
pub struct OrbitReport {
    /// τ^{l(x)}(h(x)) = τ^{k(x)}(h(σx)) on the forward samples.
    pub coe_forward: CheckOutcome,
    /// The primed identity on the backward samples.
    pub coe_backward: CheckOutcome,
    /// Finiteness of the minimal stabilizer preserved.
    pub stab_preservation: CheckOutcome,
    /// Lag-sum identity on periodic points, forward direction.
    pub eq1: CheckOutcome,
    /// Lag-sum identity on periodic points, backward direction.
    pub eq2: CheckOutcome,
    /// Isolated eventually periodic points preserved.
    pub isolated_preservation: CheckOutcome,
    /// l(x) = k(x) + 1 on all forward samples.
    pub eventual_conjugacy: bool,
}

impl OrbitReport {
    pub fn all_passed(&self) -> bool {
        self.coe_forward.passed
            && self.coe_backward.passed
            && self.stab_preservation.passed
            && self.eq1.passed
            && self.eq2.passed
            && self.isolated_preservation.passed
    }
}

/// Sampling bounds for the orbit-equivalence checker.
#[derive(Clone, Copy, Debug)]
pub struct OrbitCheckConfig {
    pub samples: usize,
    pub depth: usize,
    pub cycle_bound: usize,
    pub prefix_bound: usize,
    pub truncation: u64,
}

impl Default for OrbitCheckConfig {
    fn default() -> Self {
        OrbitCheckConfig {
            samples: 100,
            depth: 8,
            cycle_bound: 6,
            prefix_bound: 4,
            truncation: 8,
        }
    }
}

/// Deterministic sample of boundary points: length-zero points over the
/// minimal-set catalog, finite points over all admissible words up to the
/// depth, then eventually periodic points with bounded cycles and
/// prefixes.
pub fn sample_points(g: &Ultragraph, cfg: &OrbitCheckConfig) -> Vec<BoundaryPoint> {
    let edges = concrete_edges(g, cfg.truncation);
    let catalog = g.minimal_set_catalog();
    let sinks = g.sink_set();
    let mut words: Vec<Vec<EdgeRef>> = vec![Vec::new()];
    let mut all_words = Vec::new();
    for _ in 0..cfg.depth {
        let mut next = Vec::new();
        for w in &words {
            for e in &edges {
                let ok = match w.last() {
                    None => true,
                    Some(prev) => {
                        let r = g.edge_range(prev).expect("concrete edge");
                        r.is_member(&g.edge_source(e).expect("concrete edge"))
                    }
                };
                if ok {
                    let mut w2 = w.clone();
                    w2.push(e.clone());
                    next.push(w2);
                }
            }
        }
        all_words.extend(next.iter().cloned());
        words = next;
        if all_words.len() > cfg.samples * 8 {
            break;
        }
    }
    let mut out: Vec<BoundaryPoint> = Vec::new();
    for a in &catalog {
        if let Ok(up) = Ultrapath::zero(g, a.clone()) {
            if let Ok(p) = BoundaryPoint::finite(g, up) {
                out.push(p);
            }
        }
    }
    for w in &all_words {
        if out.len() >= cfg.samples {
            break;
        }
        let r = g.edge_range(w.last().unwrap()).expect("concrete edge");
        for a in &catalog {
            if a.is_subset(&r) {
                if let Ok(up) = Ultrapath::new(g, w.clone(), a.clone()) {
                    if let Ok(p) = BoundaryPoint::finite(g, up) {
                        out.push(p);
                    }
                }
            }
        }
        for v in r.enumerate(g.vertex_families(), 3) {
            if sinks.is_member(&v) {
                if let Ok(up) = Ultrapath::new(g, w.clone(), SymbolicVertexSet::singleton(&v)) {
                    if let Ok(p) = BoundaryPoint::finite(g, up) {
                        out.push(p);
                    }
                }
            }
        }
    }
    let cycles = find_cycles(g, cfg.cycle_bound, cfg.truncation);
    for c in &cycles {
        if out.len() >= cfg.samples {
            break;
        }
        let cyc = c.path.edges().to_vec();
        if let Ok(p) = BoundaryPoint::eventually_periodic(g, Vec::new(), cyc.clone()) {
            if !out.contains(&p) {
                out.push(p);
            }
        }
        for w in all_words.iter().filter(|w| w.len() <= cfg.prefix_bound) {
            if out.len() >= cfg.samples {
                break;
            }
            let r = g.edge_range(w.last().unwrap()).expect("concrete edge");
            let s = g.edge_source(&cyc[0]).expect("concrete edge");
            if r.is_member(&s) {
                if let Ok(p) = BoundaryPoint::eventually_periodic(g, w.clone(), cyc.clone()) {
                    if !out.contains(&p) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out.truncate(cfg.samples);
    out
}

/// Apply the map, propagating genuine rule gaps but turning any other
/// failure (e.g. an inadmissible image) into a reported witness.
fn apply_or_witness(
    map: &BlockMap,
    dst: &Ultragraph,
    x: &BoundaryPoint,
) -> Result<Result<BoundaryPoint, String>, DynamicsError> {
    match map.apply(dst, x) {
        Ok(p) => Ok(Ok(p)),
        Err(e @ DynamicsError::RuleGap(_)) | Err(e @ DynamicsError::VertexGap(_)) => Err(e),
        Err(e) => Ok(Err(format!("image of {x} is not a boundary point: {e}"))),
    }
}

fn check_direction(
    src: &Ultragraph,
    dst: &Ultragraph,
    map: &BlockMap,
    samples: &[BoundaryPoint],
) -> Result<(CheckOutcome, CheckOutcome), DynamicsError> {
    let mut checked = 0;
    let mut coe = CheckOutcome::pass(0);
    'outer: for x in samples {
        if x.edge_at(0).is_none() {
            continue;
        }
        checked += 1;
        let images = (
            apply_or_witness(map, dst, x)?,
            shift(src, x).map_err(|e| e.to_string()).and_then(|sx| {
                apply_or_witness(map, dst, &sx)
                    .map_err(|e| e.to_string())
                    .and_then(|r| r)
            }),
        );
        let (hx, hsx) = match images {
            (Ok(a), Ok(b)) => (a, b),
            (Err(w), _) | (_, Err(w)) => {
                coe = CheckOutcome::fail(checked, w);
                break 'outer;
            }
        };
        let lhs = shift_n(dst, &hx, map.l.value(x));
        let rhs = shift_n(dst, &hsx, map.k.value(x));
        let ok = matches!((&lhs, &rhs), (Ok(a), Ok(b)) if a == b);
        if !ok {
            coe = CheckOutcome::fail(checked, format!("identity fails at x = {x}"));
            break;
        }
    }
    if coe.passed {
        coe.checked = checked;
    }

    // Lag-sum identity on purely periodic samples: the absolute sum of
    // l − k along one minimal period must equal the minimal stabilizer of
    // the image.
    let mut eq_checked = 0;
    let mut eq = CheckOutcome::pass(0);
    for x in samples {
        let periodic = matches!(
            x,
            BoundaryPoint::EventuallyPeriodic { prefix, .. } if prefix.is_empty()
        );
        if !periodic {
            continue;
        }
        eq_checked += 1;
        let p = stabilizers(src, x).stab_min.expect("periodic point");
        let mut sum: i64 = 0;
        let mut cur = x.clone();
        for _ in 0..p {
            sum += map.l.value(&cur) as i64 - map.k.value(&cur) as i64;
            cur = shift(src, &cur)?;
        }
        let target = match apply_or_witness(map, dst, x)? {
            Ok(hx) => stabilizers(dst, &hx).stab_min,
            Err(w) => {
                eq = CheckOutcome::fail(eq_checked, w);
                break;
            }
        };
        if target != Some(sum.unsigned_abs()) {
            eq = CheckOutcome::fail(
                eq_checked,
                format!(
                    "lag sum {sum} misses the minimal stabilizer of the image \
                     ({target:?}) at x = {x}"
                ),
            );
            break;
        }
    }
    if eq.passed {
        eq.checked = eq_checked;
    }
    Ok((coe, eq))
}

/// Verify the orbit-equivalence identities for a forward/backward pair of
/// block maps on deterministically sampled points of both spaces.
pub fn check_orbit_equivalence(
    g1: &Ultragraph,
    g2: &Ultragraph,
    forward: &BlockMap,
    backward: &BlockMap,
    cfg: &OrbitCheckConfig,
) -> Result<OrbitReport, DynamicsError> {
    let samples1 = sample_points(g1, cfg);
    let samples2 = sample_points(g2, cfg);
    let (coe_forward, eq1) = check_direction(g1, g2, forward, &samples1)?;
    let (coe_backward, eq2) = check_direction(g2, g1, backward, &samples2)?;

    let mut stab = CheckOutcome::pass(0);
    let mut iso = CheckOutcome::pass(0);
    let mut checked = 0;
    let mut iso_checked = 0;
    for x in &samples1 {
        checked += 1;
        let hx = match apply_or_witness(forward, g2, x)? {
            Ok(hx) => hx,
            Err(w) => {
                stab = CheckOutcome::fail(checked, w);
                break;
            }
        };
        let a = stabilizers(g1, x).stab_min.is_some();
        let b = stabilizers(g2, &hx).stab_min.is_some();
        if a != b {
            stab = CheckOutcome::fail(checked, format!("stab_min finiteness differs at {x}"));
            break;
        }
        if matches!(x, BoundaryPoint::EventuallyPeriodic { .. }) {
            iso_checked += 1;
            let ix = classify_isolated(g1, x).isolated;
            let ihx = classify_isolated(g2, &hx).isolated;
            if ix != ihx {
                iso = CheckOutcome::fail(
                    iso_checked,
                    format!("isolation differs at {x}: {ix} vs {ihx}"),
                );
                break;
            }
        }
    }
    if stab.passed {
        stab.checked = checked;
    }
    if iso.passed {
        iso.checked = iso_checked;
    }

    let eventual_conjugacy = samples1
        .iter()
        .filter(|x| x.edge_at(0).is_some())
        .all(|x| forward.l.value(x) == forward.k.value(x) + 1);

    Ok(OrbitReport {
        coe_forward,
        coe_backward,
        stab_preservation: stab,
        eq1,
        eq2,
        isolated_preservation: iso,
        eventual_conjugacy,
    })
}
