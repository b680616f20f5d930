//! The ultragraph data model and the generalized-vertex layer.
//!
//! An ultragraph is a directed graph whose edges have a nonempty *set* of
//! target vertices. Generalized vertices are the closure of singletons and
//! edge ranges under finite unions and nonempty intersections; every
//! analysis in this crate works on their finite symbolic presentation.
//!
//! Infinitely many vertices and edges are declared through indexed
//! families: a vertex family is a copy of the naturals from a base index,
//! and an edge family emits one edge per index, with the source and range
//! given either as constants or as index-shifted family references.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::symbolic::{
    Cardinality, EdgeRef, FamilyBases, FamilyPart, Ref, Symbol, SymbolicEdgeSet,
    SymbolicVertexSet, VertexRef,
};

/// Source of the edges in one declaration.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum EdgeSource {
    /// All edges of the declaration start at this vertex.
    Const(VertexRef),
    /// The `i`-th edge starts at `family[i + offset]`.
    Indexed { family: Symbol, offset: i64 },
}

/// A single index-shifted vertex reference inside an indexed range.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct IndexedVertexRef {
    pub family: Symbol,
    pub offset: i64,
}

/// Range of the edges in one declaration.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum EdgeRangeDecl {
    /// Every edge of the declaration has this range.
    ConstSet(SymbolicVertexSet),
    /// The `i`-th edge ranges over the referenced vertices at `i + offset`,
    /// clipped to each family's index domain.
    IndexedRefs(Vec<IndexedVertexRef>),
}

/// One edge declaration: a single named edge or an indexed edge family.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct EdgeDecl {
    pub id: Symbol,
    pub indexed: bool,
    pub source: EdgeSource,
    pub range: EdgeRangeDecl,
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("duplicate id `{0}`")]
    DuplicateId(Symbol),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(VertexRef),
    #[error("unknown vertex family `{0}`")]
    UnknownVertexFamily(Symbol),
    #[error("unknown edge `{0}`")]
    UnknownEdge(EdgeRef),
    #[error("edge `{0}` has an empty range after clipping")]
    EmptyRange(Symbol),
    #[error("index {index} of family `{family}` is below its base {base}")]
    IndexBelowBase { family: Symbol, index: u64, base: u64 },
    #[error("single edge `{0}` must have a constant source and range")]
    SingleEdgeShape(Symbol),
    #[error("set is not a generalized vertex: infinite remainder {0}")]
    NotGeneralizedVertex(SymbolicVertexSet),
    #[error("set {0} emits infinitely many edges where finitely many were required")]
    InfiniteEmission(SymbolicVertexSet),
    #[error("too many range generators ({0}) for exact subset search")]
    TooManyGenerators(usize),
}

/// Provenance of a generalized vertex over singletons and edge ranges.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum SetExpr {
    Singleton(VertexRef),
    Range(EdgeRef),
    /// The full (constant) range of an edge declaration.
    DeclRange(Symbol),
    Union(Vec<SetExpr>),
    Inter(Vec<SetExpr>),
}

/// An element of the generalized-vertex family: the symbolic carrier set
/// together with an expression that evaluates to it.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GeneralizedVertex {
    set: SymbolicVertexSet,
    provenance: SetExpr,
}

impl GeneralizedVertex {
    pub fn set(&self) -> &SymbolicVertexSet {
        &self.set
    }

    pub fn provenance(&self) -> &SetExpr {
        &self.provenance
    }

    pub fn into_set(self) -> SymbolicVertexSet {
        self.set
    }
}

impl fmt::Display for GeneralizedVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.set)
    }
}

/// The unique split of a generalized vertex into minimal infinite emitters,
/// minimal sinks, and a finite remainder of regular vertices and stray sinks.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Decomposition {
    pub minimal_infinite_emitters: Vec<GeneralizedVertex>,
    pub minimal_sinks: Vec<GeneralizedVertex>,
    pub finite_part: SymbolicVertexSet,
}

impl Decomposition {
    pub fn minimal_parts(&self) -> impl Iterator<Item = &GeneralizedVertex> {
        self.minimal_infinite_emitters
            .iter()
            .chain(self.minimal_sinks.iter())
    }

    /// Re-union of all parts.
    pub fn reunion(&self) -> SymbolicVertexSet {
        let mut s = self.finite_part.clone();
        for p in self.minimal_parts() {
            s = s.union(p.set());
        }
        s
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum DecomposeError {
    #[error("graph error: {0}")]
    Graph(#[from] GraphError),
    #[error(
        "range decomposition fails: residue {residue} of {set} is not a finite \
         union of minimal sets and singletons"
    )]
    NotDecomposable {
        set: SymbolicVertexSet,
        residue: SymbolicVertexSet,
    },
}

/// Outcome of the range-decomposability check over all edge declarations.
#[derive(Clone, Debug)]
pub struct RangeDecompositionVerdict {
    pub holds: bool,
    /// Per edge declaration with a constant range: its decomposition.
    pub witnesses: BTreeMap<Symbol, Decomposition>,
    /// First offending edge declaration and the resisting residue.
    pub counterexample: Option<(Symbol, SymbolicVertexSet)>,
}

/// An ultragraph over named vertices, vertex families, and edge declarations.
///
/// Immutable after construction; all analyses are pure queries.
#[derive(Clone, Debug)]
pub struct Ultragraph {
    vertex_families: FamilyBases,
    named_vertices: BTreeSet<Symbol>,
    edges: BTreeMap<Symbol, EdgeDecl>,
    /// Derived: first valid index per indexed edge declaration.
    edge_bases: FamilyBases,
    /// Derived: deduplicated candidate subsets for minimality searches,
    /// with a provenance expression each.
    candidates: Vec<(SymbolicVertexSet, SetExpr)>,
    /// Derived: vertices emitting infinitely many edges, with provenance.
    infinite_emitter_vertices: Vec<VertexRef>,
}

impl Ultragraph {
    pub fn new(
        vertex_families: FamilyBases,
        named_vertices: BTreeSet<Symbol>,
        edge_decls: Vec<EdgeDecl>,
    ) -> Result<Self, GraphError> {
        let mut ids: BTreeSet<Symbol> = BTreeSet::new();
        for v in &named_vertices {
            if !ids.insert(v.clone()) {
                return Err(GraphError::DuplicateId(v.clone()));
            }
        }
        for f in vertex_families.keys() {
            if !ids.insert(f.clone()) {
                return Err(GraphError::DuplicateId(f.clone()));
            }
        }
        let mut edges = BTreeMap::new();
        for decl in edge_decls {
            if !ids.insert(decl.id.clone()) {
                return Err(GraphError::DuplicateId(decl.id.clone()));
            }
            edges.insert(decl.id.clone(), decl);
        }

        let mut g = Ultragraph {
            vertex_families,
            named_vertices,
            edges,
            edge_bases: BTreeMap::new(),
            candidates: Vec::new(),
            infinite_emitter_vertices: Vec::new(),
        };
        g.validate()?;
        g.edge_bases = g
            .edges
            .values()
            .filter(|d| d.indexed)
            .map(|d| (d.id.clone(), g.domain_start(d)))
            .collect();
        g.build_candidates()?;
        Ok(g)
    }

    /// Import a finite directed graph: every edge becomes a single
    /// ultragraph edge with a singleton range.
    pub fn from_graph_edges(edges: &[(&str, &str)]) -> Result<Self, GraphError> {
        let mut vertices = BTreeSet::new();
        for (s, t) in edges {
            vertices.insert(Symbol::new(*s));
            vertices.insert(Symbol::new(*t));
        }
        let decls = edges
            .iter()
            .enumerate()
            .map(|(i, (s, t))| EdgeDecl {
                id: Symbol::new(format!("e{i}")),
                indexed: false,
                source: EdgeSource::Const(Ref::named(*s)),
                range: EdgeRangeDecl::ConstSet(SymbolicVertexSet::from_named([Symbol::new(*t)])),
            })
            .collect();
        Ultragraph::new(BTreeMap::new(), vertices, decls)
    }

    fn validate(&self) -> Result<(), GraphError> {
        for decl in self.edges.values() {
            if !decl.indexed {
                match (&decl.source, &decl.range) {
                    (EdgeSource::Const(v), EdgeRangeDecl::ConstSet(r)) => {
                        self.check_vertex(v)?;
                        self.check_set(r)?;
                        if r.clip(&self.vertex_families).is_empty() {
                            return Err(GraphError::EmptyRange(decl.id.clone()));
                        }
                    }
                    _ => return Err(GraphError::SingleEdgeShape(decl.id.clone())),
                }
            } else {
                match &decl.source {
                    EdgeSource::Const(v) => self.check_vertex(v)?,
                    EdgeSource::Indexed { family, .. } => {
                        if !self.vertex_families.contains_key(family) {
                            return Err(GraphError::UnknownVertexFamily(family.clone()));
                        }
                    }
                }
                match &decl.range {
                    EdgeRangeDecl::ConstSet(r) => {
                        self.check_set(r)?;
                        if r.clip(&self.vertex_families).is_empty() {
                            return Err(GraphError::EmptyRange(decl.id.clone()));
                        }
                    }
                    EdgeRangeDecl::IndexedRefs(refs) => {
                        if refs.is_empty() {
                            return Err(GraphError::EmptyRange(decl.id.clone()));
                        }
                        for r in refs {
                            if !self.vertex_families.contains_key(&r.family) {
                                return Err(GraphError::UnknownVertexFamily(r.family.clone()));
                            }
                        }
                        // The minimal-index edge must keep a nonempty range;
                        // larger indices only gain vertices.
                        let start = self.domain_start(decl);
                        if self.indexed_range_at(refs, start).is_empty() {
                            return Err(GraphError::EmptyRange(decl.id.clone()));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// First index at which an indexed declaration has a valid source and a
    /// nonempty range.
    fn domain_start(&self, decl: &EdgeDecl) -> u64 {
        let mut start: i128 = 0;
        if let EdgeSource::Indexed { family, offset } = &decl.source {
            let base = self.vertex_families.get(family).copied().unwrap_or(0);
            start = start.max(base as i128 - *offset as i128);
        }
        if let EdgeRangeDecl::IndexedRefs(refs) = &decl.range {
            let first_valid = refs
                .iter()
                .map(|r| {
                    let base = self.vertex_families.get(&r.family).copied().unwrap_or(0);
                    base as i128 - r.offset as i128
                })
                .min()
                .unwrap_or(0);
            start = start.max(first_valid);
        }
        start.max(0) as u64
    }

    fn check_vertex(&self, v: &VertexRef) -> Result<(), GraphError> {
        match v {
            Ref::Named(s) => {
                if self.named_vertices.contains(s) {
                    Ok(())
                } else {
                    Err(GraphError::UnknownVertex(v.clone()))
                }
            }
            Ref::Indexed(fam, i) => {
                let base = self
                    .vertex_families
                    .get(fam)
                    .copied()
                    .ok_or_else(|| GraphError::UnknownVertexFamily(fam.clone()))?;
                if *i < base {
                    Err(GraphError::IndexBelowBase {
                        family: fam.clone(),
                        index: *i,
                        base,
                    })
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Declaration check for user-supplied sets: every named vertex and
    /// family must be declared in this ultragraph.
    pub fn check_set(&self, s: &SymbolicVertexSet) -> Result<(), GraphError> {
        for v in s.named_part() {
            if !self.named_vertices.contains(v) {
                return Err(GraphError::UnknownVertex(Ref::Named(v.clone())));
            }
        }
        for fam in s.family_parts().keys() {
            if !self.vertex_families.contains_key(fam) {
                return Err(GraphError::UnknownVertexFamily(fam.clone()));
            }
        }
        Ok(())
    }

    pub fn vertex_families(&self) -> &FamilyBases {
        &self.vertex_families
    }

    pub fn named_vertices(&self) -> &BTreeSet<Symbol> {
        &self.named_vertices
    }

    pub fn edge_decls(&self) -> &BTreeMap<Symbol, EdgeDecl> {
        &self.edges
    }

    /// Index domains of the indexed edge declarations.
    pub fn edge_bases(&self) -> &FamilyBases {
        &self.edge_bases
    }

    /// All vertices as one symbolic set.
    pub fn full_vertex_set(&self) -> SymbolicVertexSet {
        SymbolicVertexSet::full(self.named_vertices.iter(), self.vertex_families.keys())
    }

    /// All edges as one symbolic set.
    pub fn full_edge_set(&self) -> SymbolicEdgeSet {
        let named = self.edges.values().filter(|d| !d.indexed).map(|d| &d.id);
        let fams = self.edges.values().filter(|d| d.indexed).map(|d| &d.id);
        SymbolicEdgeSet::full(named, fams)
    }

    fn decl_of(&self, e: &EdgeRef) -> Result<&EdgeDecl, GraphError> {
        let (id, indexed) = match e {
            Ref::Named(id) => (id, false),
            Ref::Indexed(id, _) => (id, true),
        };
        match self.edges.get(id) {
            Some(d) if d.indexed == indexed => Ok(d),
            _ => Err(GraphError::UnknownEdge(e.clone())),
        }
    }

    /// Resolve a concrete edge reference to its source vertex.
    pub fn edge_source(&self, e: &EdgeRef) -> Result<VertexRef, GraphError> {
        let decl = self.decl_of(e)?;
        match (e, &decl.source) {
            (_, EdgeSource::Const(v)) => Ok(v.clone()),
            (Ref::Indexed(_, i), EdgeSource::Indexed { family, offset }) => {
                let idx = *i as i128 + *offset as i128;
                debug_assert!(idx >= 0);
                Ok(Ref::Indexed(family.clone(), idx as u64))
            }
            _ => Err(GraphError::UnknownEdge(e.clone())),
        }
    }

    fn indexed_range_at(&self, refs: &[IndexedVertexRef], i: u64) -> SymbolicVertexSet {
        let mut s = SymbolicVertexSet::empty();
        for r in refs {
            let idx = i as i128 + r.offset as i128;
            let base = self.vertex_families.get(&r.family).copied().unwrap_or(0) as i128;
            if idx >= base {
                s.insert(Ref::Indexed(r.family.clone(), idx as u64));
            }
        }
        s
    }

    /// Resolve a concrete edge reference to its range.
    pub fn edge_range(&self, e: &EdgeRef) -> Result<SymbolicVertexSet, GraphError> {
        let decl = self.decl_of(e)?;
        if let Ref::Indexed(id, i) = e {
            let start = self.edge_bases.get(id).copied().unwrap_or(0);
            if *i < start {
                return Err(GraphError::IndexBelowBase {
                    family: id.clone(),
                    index: *i,
                    base: start,
                });
            }
        }
        match (&decl.range, e) {
            (EdgeRangeDecl::ConstSet(r), _) => Ok(r.clip(&self.vertex_families)),
            (EdgeRangeDecl::IndexedRefs(refs), Ref::Indexed(_, i)) => {
                Ok(self.indexed_range_at(refs, *i))
            }
            _ => Err(GraphError::UnknownEdge(e.clone())),
        }
    }

    /// Does the concrete edge reference exist in this graph?
    pub fn has_edge(&self, e: &EdgeRef) -> bool {
        match (self.decl_of(e), e) {
            (Ok(decl), Ref::Indexed(_, i)) => {
                *i >= self.edge_bases.get(&decl.id).copied().unwrap_or(0)
            }
            (Ok(_), Ref::Named(_)) => true,
            _ => false,
        }
    }

    /// The edges whose source lies in `a`, as a symbolic edge set with its
    /// cardinality.
    pub fn epsilon(&self, a: &SymbolicVertexSet) -> (SymbolicEdgeSet, Cardinality) {
        let mut out = SymbolicEdgeSet::empty();
        for decl in self.edges.values() {
            if !decl.indexed {
                if let EdgeSource::Const(v) = &decl.source {
                    if a.is_member(v) {
                        out.insert(Ref::Named(decl.id.clone()));
                    }
                }
                continue;
            }
            let start = self.edge_bases[&decl.id];
            match &decl.source {
                EdgeSource::Const(v) => {
                    if a.is_member(v) {
                        out.set_family_part(decl.id.clone(), FamilyPart::Cofinite(BTreeSet::new()));
                    }
                }
                EdgeSource::Indexed { family, offset } => {
                    // Indices i >= start with family[i + offset] in a.
                    let part = match a.family_part(family) {
                        None => continue,
                        Some(FamilyPart::Finite(s)) => {
                            let idx: BTreeSet<u64> = s
                                .iter()
                                .filter_map(|&v| {
                                    let i = v as i128 - *offset as i128;
                                    (i >= start as i128).then_some(i as u64)
                                })
                                .collect();
                            FamilyPart::Finite(idx)
                        }
                        Some(FamilyPart::Cofinite(excl)) => {
                            let excl_idx: BTreeSet<u64> = excl
                                .iter()
                                .filter_map(|&v| {
                                    let i = v as i128 - *offset as i128;
                                    (i >= start as i128).then_some(i as u64)
                                })
                                .collect();
                            // Vertices below the family base never occur, so
                            // every index >= start that is not excluded counts.
                            FamilyPart::Cofinite(excl_idx)
                        }
                    };
                    if !part.is_empty() {
                        out.set_family_part(decl.id.clone(), part);
                    }
                }
            }
        }
        let card = out.cardinality();
        (out, card)
    }

    /// First `limit` concrete edges emitted from `a`.
    pub fn edges_from(&self, a: &SymbolicVertexSet, limit: usize) -> Vec<EdgeRef> {
        self.epsilon(a).0.enumerate(&self.edge_bases, limit)
    }

    /// Every edge emitted from `a`, which must be a finite emitter.
    pub fn all_edges_from(&self, a: &SymbolicVertexSet) -> Result<Vec<EdgeRef>, GraphError> {
        let (eps, card) = self.epsilon(a);
        match card {
            Cardinality::Finite(n) => Ok(eps.enumerate(&self.edge_bases, n as usize)),
            Cardinality::Infinite => Err(GraphError::InfiniteEmission(a.clone())),
        }
    }

    pub fn is_sink(&self, v: &VertexRef) -> bool {
        let (_, card) = self.epsilon(&SymbolicVertexSet::singleton(v));
        card == Cardinality::Finite(0)
    }

    pub fn is_infinite_emitter_vertex(&self, v: &VertexRef) -> bool {
        self.epsilon(&SymbolicVertexSet::singleton(v)).1.is_infinite()
    }

    pub fn is_regular_vertex(&self, v: &VertexRef) -> bool {
        match self.epsilon(&SymbolicVertexSet::singleton(v)).1 {
            Cardinality::Finite(n) => n > 0,
            Cardinality::Infinite => false,
        }
    }

    /// All source vertices, symbolically.
    fn source_vertex_set(&self) -> SymbolicVertexSet {
        let mut s = SymbolicVertexSet::empty();
        for decl in self.edges.values() {
            match &decl.source {
                EdgeSource::Const(v) => s.insert(v.clone()),
                EdgeSource::Indexed { family, offset } => {
                    let start = self.edge_bases[&decl.id];
                    let first = start as i128 + *offset as i128;
                    let base = self.vertex_families[family] as i128;
                    // Sources cover family indices first, first+1, ...
                    let excl: BTreeSet<u64> = (base..first).map(|i| i as u64).collect();
                    let mut slice = SymbolicVertexSet::empty();
                    slice.set_family_part(family.clone(), FamilyPart::Cofinite(excl));
                    s = s.union(&slice);
                }
            }
        }
        s
    }

    /// All sinks, symbolically: vertices that emit no edge.
    pub fn sink_set(&self) -> SymbolicVertexSet {
        self.full_vertex_set().difference(&self.source_vertex_set())
    }

    fn build_candidates(&mut self) -> Result<(), GraphError> {
        // Generators: constant ranges of all edge declarations.
        let mut gens: Vec<(SymbolicVertexSet, SetExpr)> = Vec::new();
        let mut seen: BTreeSet<SymbolicVertexSet> = BTreeSet::new();
        for decl in self.edges.values() {
            if let EdgeRangeDecl::ConstSet(r) = &decl.range {
                let set = r.clip(&self.vertex_families);
                if seen.insert(set.clone()) {
                    gens.push((set, SetExpr::DeclRange(decl.id.clone())));
                }
            }
        }
        if gens.len() > 14 {
            return Err(GraphError::TooManyGenerators(gens.len()));
        }
        // All nonempty intersections of generator subsets, deduplicated.
        let mut by_set: BTreeMap<SymbolicVertexSet, SetExpr> = BTreeMap::new();
        for mask in 1u32..(1u32 << gens.len()) {
            let mut set: Option<SymbolicVertexSet> = None;
            let mut exprs = Vec::new();
            for (k, (gset, gexpr)) in gens.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    set = Some(match set {
                        None => gset.clone(),
                        Some(s) => s.intersect(gset),
                    });
                    exprs.push(gexpr.clone());
                }
            }
            let set = set.unwrap();
            if set.is_empty() {
                continue;
            }
            let expr = if exprs.len() == 1 {
                exprs.pop().unwrap()
            } else {
                SetExpr::Inter(exprs)
            };
            by_set.entry(set).or_insert(expr);
        }
        self.candidates = by_set.into_iter().collect();

        // Vertices emitting a whole constant-source edge family.
        let mut infs: BTreeSet<VertexRef> = BTreeSet::new();
        for decl in self.edges.values() {
            if decl.indexed {
                if let EdgeSource::Const(v) = &decl.source {
                    infs.insert(v.clone());
                }
            }
        }
        self.infinite_emitter_vertices = infs.into_iter().collect();
        Ok(())
    }

    /// Candidate generalized-vertex subsets for minimality searches:
    /// intersections of range generators plus infinite-emitter singletons.
    fn proper_subset_candidates<'a>(
        &'a self,
        a: &'a SymbolicVertexSet,
    ) -> impl Iterator<Item = (SymbolicVertexSet, SetExpr)> + 'a {
        let gens = self
            .candidates
            .iter()
            .filter(move |(c, _)| c != a && c.is_subset(a))
            .map(|(c, e)| (c.clone(), e.clone()));
        let singles = self
            .infinite_emitter_vertices
            .iter()
            .filter(move |v| a.is_member(v))
            .map(move |v| (SymbolicVertexSet::singleton(v), SetExpr::Singleton(v.clone())))
            .filter(move |(s, _)| s != a);
        gens.chain(singles)
    }

    /// Is `a` an infinite emitter with no proper generalized-vertex subset
    /// that is an infinite emitter or an infinite finite emitter?
    pub fn is_minimal_infinite_emitter(&self, a: &SymbolicVertexSet) -> bool {
        if a.is_empty() || !self.epsilon(a).1.is_infinite() {
            return false;
        }
        for (c, _) in self.proper_subset_candidates(a) {
            let eps = self.epsilon(&c).1;
            if eps.is_infinite() {
                return false;
            }
            if c.cardinality().is_infinite() {
                return false;
            }
        }
        true
    }

    /// Is `a` infinite, finitely emitting, and free of proper infinite
    /// generalized-vertex subsets?
    pub fn is_minimal_sink(&self, a: &SymbolicVertexSet) -> bool {
        if !a.cardinality().is_infinite() || self.epsilon(a).1.is_infinite() {
            return false;
        }
        for (c, _) in self.proper_subset_candidates(a) {
            if c.cardinality().is_infinite() {
                return false;
            }
        }
        true
    }

    /// All minimal sets inside `a` plus the residue left uncovered; the
    /// residue need not be finite.
    pub fn split_minimal(
        &self,
        a: &SymbolicVertexSet,
    ) -> (Vec<GeneralizedVertex>, Vec<GeneralizedVertex>, SymbolicVertexSet) {
        let mut emitters = Vec::new();
        let mut sinks = Vec::new();
        let mut covered = SymbolicVertexSet::empty();
        let mut seen: BTreeSet<SymbolicVertexSet> = BTreeSet::new();
        let self_candidate = std::iter::once((a.clone(), SetExpr::Inter(Vec::new())));
        for (c, expr) in self.proper_subset_candidates(a).chain(self_candidate) {
            if !seen.insert(c.clone()) {
                continue;
            }
            if self.is_minimal_infinite_emitter(&c) {
                covered = covered.union(&c);
                emitters.push(GeneralizedVertex { set: c, provenance: expr });
            } else if self.is_minimal_sink(&c) {
                covered = covered.union(&c);
                sinks.push(GeneralizedVertex { set: c, provenance: expr });
            }
        }
        emitters.sort_by(|x, y| x.set.cmp(&y.set));
        sinks.sort_by(|x, y| x.set.cmp(&y.set));
        (emitters, sinks, a.difference(&covered))
    }

    /// The unique decomposition of a generalized vertex into minimal
    /// infinite emitters, minimal sinks, and a finite regular remainder.
    pub fn decompose(&self, a: &SymbolicVertexSet) -> Result<Decomposition, DecomposeError> {
        let (emitters, sinks, residue) = self.split_minimal(a);
        if residue.cardinality().is_infinite() || self.epsilon(&residue).1.is_infinite() {
            return Err(DecomposeError::NotDecomposable {
                set: a.clone(),
                residue,
            });
        }
        Ok(Decomposition {
            minimal_infinite_emitters: emitters,
            minimal_sinks: sinks,
            finite_part: residue,
        })
    }

    /// Check that every edge range splits into minimal infinite emitters,
    /// minimal sinks, and singletons of sinks or regular vertices.
    ///
    /// Indexed ranges are finite vertex lists, whose singletons always
    /// qualify, so only constant ranges can fail.
    pub fn check_range_decomposition(&self) -> RangeDecompositionVerdict {
        let mut witnesses = BTreeMap::new();
        for decl in self.edges.values() {
            if let EdgeRangeDecl::ConstSet(r) = &decl.range {
                match self.decompose(&r.clip(&self.vertex_families)) {
                    Ok(d) => {
                        witnesses.insert(decl.id.clone(), d);
                    }
                    Err(DecomposeError::NotDecomposable { residue, .. }) => {
                        return RangeDecompositionVerdict {
                            holds: false,
                            witnesses,
                            counterexample: Some((decl.id.clone(), residue)),
                        };
                    }
                    Err(DecomposeError::Graph(_)) => unreachable!("validated at construction"),
                }
            }
        }
        RangeDecompositionVerdict {
            holds: true,
            witnesses,
            counterexample: None,
        }
    }

    /// Evaluate a provenance expression.
    pub fn eval_expr(&self, e: &SetExpr) -> Result<SymbolicVertexSet, GraphError> {
        match e {
            SetExpr::Singleton(v) => {
                self.check_vertex(v)?;
                Ok(SymbolicVertexSet::singleton(v))
            }
            SetExpr::Range(edge) => self.edge_range(edge),
            SetExpr::DeclRange(id) => {
                let decl = self
                    .edges
                    .get(id)
                    .ok_or_else(|| GraphError::UnknownEdge(Ref::Named(id.clone())))?;
                match &decl.range {
                    EdgeRangeDecl::ConstSet(r) => Ok(r.clip(&self.vertex_families)),
                    EdgeRangeDecl::IndexedRefs(_) => Err(GraphError::UnknownEdge(Ref::Named(id.clone()))),
                }
            }
            SetExpr::Union(parts) => {
                let mut s = SymbolicVertexSet::empty();
                for p in parts {
                    s = s.union(&self.eval_expr(p)?);
                }
                Ok(s)
            }
            SetExpr::Inter(parts) => {
                let mut iter = parts.iter();
                let first = match iter.next() {
                    Some(p) => self.eval_expr(p)?,
                    None => return Ok(SymbolicVertexSet::empty()),
                };
                iter.try_fold(first, |acc, p| Ok(acc.intersect(&self.eval_expr(p)?)))
            }
        }
    }

    /// Build a generalized vertex from a provenance expression; the carrier
    /// set is the evaluation, so the invariant holds by construction.
    pub fn generalized_vertex(&self, provenance: SetExpr) -> Result<GeneralizedVertex, GraphError> {
        let set = self.eval_expr(&provenance)?;
        Ok(GeneralizedVertex { set, provenance })
    }

    /// Recover a provenance for an arbitrary symbolic set, when it is a
    /// generalized vertex: the union of all generator intersections inside
    /// it plus finitely many singletons.
    pub fn generalized_from_set(
        &self,
        s: &SymbolicVertexSet,
    ) -> Result<GeneralizedVertex, GraphError> {
        self.check_set(s)?;
        let s = s.clip(&self.vertex_families);
        let mut exprs = Vec::new();
        let mut covered = SymbolicVertexSet::empty();
        for (c, e) in &self.candidates {
            if c.is_subset(&s) {
                covered = covered.union(c);
                exprs.push(e.clone());
            }
        }
        let rest = s.difference(&covered);
        match rest.cardinality() {
            Cardinality::Infinite => Err(GraphError::NotGeneralizedVertex(rest)),
            Cardinality::Finite(n) => {
                for v in rest.enumerate(&self.vertex_families, n as usize) {
                    exprs.push(SetExpr::Singleton(v));
                }
                Ok(GeneralizedVertex {
                    set: s,
                    provenance: SetExpr::Union(exprs),
                })
            }
        }
    }

    /// Generator list (constant edge ranges, deduplicated).
    pub fn range_generators(&self) -> Vec<SymbolicVertexSet> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for decl in self.edges.values() {
            if let EdgeRangeDecl::ConstSet(r) = &decl.range {
                let c = r.clip(&self.vertex_families);
                if seen.insert(c.clone()) {
                    out.push(c);
                }
            }
        }
        out
    }

    /// Catalog of all minimal sets appearing in range decompositions.
    pub fn minimal_set_catalog(&self) -> Vec<SymbolicVertexSet> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        let singles = self
            .infinite_emitter_vertices
            .iter()
            .map(SymbolicVertexSet::singleton);
        for c in self.candidates.iter().map(|(c, _)| c.clone()).chain(singles) {
            if (self.is_minimal_infinite_emitter(&c) || self.is_minimal_sink(&c))
                && seen.insert(c.clone())
            {
                out.push(c);
            }
        }
        out
    }
}
