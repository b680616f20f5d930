//! Temperature-state data on an ultragraph: the constraint compiler for
//! the m-function conditions, an exact rational feasibility solver, the
//! cylinder measure, and inverse-temperature sweeps.
//!
//! The data of a state at inverse temperature β is a function `m` on the
//! generalized vertices with edge weights `M(e) = N(e)^{-β}`:
//!
//! - m1: the directed limit of `m` over all generalized vertices is 1;
//! - m2: `m(A) = Σ_{s(e)∈A} M(e)·m(r(e)) + Σ_{v∈A sink} m(v)` for finite,
//!   finitely emitting `A`;
//! - m3: `m(A) ≥ Σ_{e∈F} M(e)·m(r(e)) + Σ_{v∈S} m(v)` for finite
//!   `F ⊆ ε(A)`, `S ⊆ A ∩ sinks`;
//! - m4: `m(A∪B) = m(A) + m(B) − m(A∩B)`.
//!
//! `m` is stored on atoms: named vertices, family heads up to a
//! truncation, one tail-sum variable per family, and one value per
//! minimal set. Evaluation on any generalized vertex decomposes it into
//! minimal parts plus a finite remainder and applies inclusion-exclusion,
//! so m4 holds by construction. Ground-state systems are the β → ∞
//! degeneration: edge weights vanish, so finite regular sets carry no
//! mass.

pub mod solver;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::boundary::{decompose_to_semiring, basis_intersect, BoundaryError, Cylinder};
use crate::symbolic::{Cardinality, FamilyPart, Ref, Symbol, SymbolicVertexSet};
use crate::ultragraph::{DecomposeError, GraphError, Ultragraph};

pub use solver::{Constraint, LinExpr, Outcome, Rel, Solution, SolverError, Q};

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum KmsError {
    #[error("range decomposition fails at edge `{edge}` with residue {residue}")]
    RangeNotDecomposable {
        edge: Symbol,
        residue: SymbolicVertexSet,
    },
    #[error("solver error: {0}")]
    Solver(#[from] SolverError),
    #[error("no weight declared for edge `{0}`")]
    MissingWeight(Symbol),
    #[error("weight of edge `{0}` must exceed 1")]
    WeightNotAboveOne(Symbol),
    #[error("negative inverse temperature")]
    NegativeBeta,
    #[error("missing value for {0}")]
    MissingValue(String),
    #[error("set mentions family index beyond the truncation: {0}")]
    BeyondTruncation(String),
    #[error("truncation mismatch: system uses {expected}, data uses {got}")]
    TruncationMismatch { expected: u64, got: u64 },
    #[error("cylinder has negative mass: {0}")]
    NegativeMass(String),
    #[error("region pieces overlap: {0}")]
    OverlappingRegion(String),
    #[error("too many minimal parts ({0}) for inclusion-exclusion")]
    TooManyParts(usize),
    #[error("graph error: {0}")]
    Graph(#[from] GraphError),
    #[error("decompose error: {0}")]
    Decompose(#[from] DecomposeError),
    #[error("boundary error: {0}")]
    Boundary(#[from] BoundaryError),
}

/// Edge weights `N`: one value per edge declaration, constant across an
/// indexed family, each strictly above 1.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EdgeWeights {
    pub by_decl: BTreeMap<Symbol, Q>,
}

impl EdgeWeights {
    pub fn validate(&self, g: &Ultragraph) -> Result<(), KmsError> {
        for id in g.edge_decls().keys() {
            match self.by_decl.get(id) {
                None => return Err(KmsError::MissingWeight(id.clone())),
                Some(n) if *n <= Q::one() => {
                    return Err(KmsError::WeightNotAboveOne(id.clone()))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }
}

/// `N^β` for rational β ≥ 0; exact when the rational root exists, else a
/// high-precision float approximation marked inexact.
fn pow_rational(n: &Q, beta: &Q) -> (Q, bool) {
    let p = beta.numer();
    let q = beta.denom();
    let p_u32 = p.to_u32();
    let q_u32 = q.to_u32();
    if let (Some(p), Some(q)) = (p_u32, q_u32) {
        let num = n.numer().pow(p);
        let den = n.denom().pow(p);
        if q == 1 {
            return (Q::new(num, den), true);
        }
        let rn = nth_root_exact(&num, q);
        let rd = nth_root_exact(&den, q);
        if let (Some(rn), Some(rd)) = (rn, rd) {
            return (Q::new(rn, rd), true);
        }
    }
    let x = n.to_f64().unwrap_or(f64::NAN);
    let b = beta.to_f64().unwrap_or(f64::NAN);
    let approx = Q::from_f64(x.powf(b)).unwrap_or_else(Q::one);
    (approx, false)
}

fn nth_root_exact(x: &BigInt, n: u32) -> Option<BigInt> {
    if x.is_negative() {
        return None;
    }
    let r = x.nth_root(n);
    if num_traits::pow::pow(r.clone(), n as usize) == *x {
        Some(r)
    } else {
        None
    }
}

/// Per-declaration weights `M = N^{-β}`, plus whether they are exact.
#[derive(Clone, Debug)]
pub struct WeightsAtBeta {
    pub m_by_decl: BTreeMap<Symbol, Q>,
    pub exact: bool,
}

impl WeightsAtBeta {
    pub fn new(g: &Ultragraph, weights: &EdgeWeights, beta: &Q) -> Result<Self, KmsError> {
        if beta.is_negative() {
            return Err(KmsError::NegativeBeta);
        }
        weights.validate(g)?;
        let mut m_by_decl = BTreeMap::new();
        let mut exact = true;
        for (id, n) in &weights.by_decl {
            if !g.edge_decls().contains_key(id) {
                continue;
            }
            let (nb, e) = pow_rational(n, beta);
            exact &= e;
            m_by_decl.insert(id.clone(), nb.recip());
        }
        Ok(WeightsAtBeta { m_by_decl, exact })
    }

    /// The β → ∞ degeneration: every edge weight vanishes.
    pub fn ground(g: &Ultragraph) -> Self {
        WeightsAtBeta {
            m_by_decl: g
                .edge_decls()
                .keys()
                .map(|id| (id.clone(), Q::zero()))
                .collect(),
            exact: true,
        }
    }

    pub fn of_edge(&self, e: &Ref) -> Result<Q, KmsError> {
        let id = match e {
            Ref::Named(id) | Ref::Indexed(id, _) => id,
        };
        self.m_by_decl
            .get(id)
            .cloned()
            .ok_or_else(|| KmsError::MissingWeight(id.clone()))
    }

    pub fn of_word(&self, edges: &[Ref]) -> Result<Q, KmsError> {
        let mut m = Q::one();
        for e in edges {
            m *= self.of_edge(e)?;
        }
        Ok(m)
    }
}

/// One scalar of the m-function store.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum VarKind {
    Named(Symbol),
    Head(Symbol, u64),
    Tail(Symbol),
    Minimal(SymbolicVertexSet),
}

impl fmt::Display for VarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarKind::Named(v) => write!(f, "m({v})"),
            VarKind::Head(fam, i) => write!(f, "m({fam}[{i}])"),
            VarKind::Tail(fam) => write!(f, "tail({fam})"),
            VarKind::Minimal(s) => write!(f, "m({s})"),
        }
    }
}

/// Canonically ordered variable table: named vertices, family heads,
/// family tails, minimal sets.
#[derive(Clone, Debug)]
pub struct VarTable {
    pub vars: Vec<VarKind>,
    index: BTreeMap<VarKind, usize>,
    pub truncation: u64,
}

impl VarTable {
    /// The truncation grows to cover every explicitly mentioned family
    /// index, so head variables always reach past the exceptional region.
    pub fn build(g: &Ultragraph, requested_truncation: u64) -> Self {
        let mut mentioned = 0u64;
        let mut note = |s: &SymbolicVertexSet| {
            if let Some(i) = s.max_mentioned_index() {
                mentioned = mentioned.max(i);
            }
        };
        for r in g.range_generators() {
            note(&r);
        }
        note(&g.sink_set());
        for a in g.minimal_set_catalog() {
            note(&a);
        }
        let truncation = requested_truncation.max(mentioned + 1);
        let mut vars = Vec::new();
        for v in g.named_vertices() {
            vars.push(VarKind::Named(v.clone()));
        }
        for (fam, base) in g.vertex_families() {
            for i in *base..base + truncation {
                vars.push(VarKind::Head(fam.clone(), i));
            }
        }
        for fam in g.vertex_families().keys() {
            vars.push(VarKind::Tail(fam.clone()));
        }
        let mut minimal = g.minimal_set_catalog();
        minimal.sort();
        for a in minimal {
            vars.push(VarKind::Minimal(a));
        }
        let index = vars
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), i))
            .collect();
        VarTable {
            vars,
            index,
            truncation,
        }
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn lookup(&self, k: &VarKind) -> Option<usize> {
        self.index.get(k).copied()
    }

    fn atom_var(&self, g: &Ultragraph, v: &Ref) -> Result<usize, KmsError> {
        let kind = match v {
            Ref::Named(s) => VarKind::Named(s.clone()),
            Ref::Indexed(fam, i) => {
                let base = g.vertex_families().get(fam).copied().unwrap_or(0);
                if *i >= base + self.truncation {
                    return Err(KmsError::BeyondTruncation(format!("{fam}[{i}]")));
                }
                VarKind::Head(fam.clone(), *i)
            }
        };
        self.lookup(&kind)
            .ok_or_else(|| KmsError::MissingValue(kind.to_string()))
    }

    /// Atom sum over a set without minimal parts: named values, heads,
    /// and one tail variable per cofinite family slice (valid because
    /// exclusion lists stay below the truncation).
    fn atom_expr(&self, g: &Ultragraph, s: &SymbolicVertexSet) -> Result<LinExpr, KmsError> {
        let mut e = LinExpr::default();
        let one = Q::one();
        for v in s.named_part() {
            e.add_term(self.atom_var(g, &Ref::Named(v.clone()))?, &one);
        }
        for (fam, part) in s.family_parts() {
            let base = g.vertex_families().get(fam).copied().unwrap_or(0);
            match part {
                FamilyPart::Finite(idx) => {
                    for &i in idx {
                        e.add_term(self.atom_var(g, &Ref::Indexed(fam.clone(), i))?, &one);
                    }
                }
                FamilyPart::Cofinite(excl) => {
                    if let Some(&top) = excl.iter().max() {
                        if top >= base + self.truncation {
                            return Err(KmsError::BeyondTruncation(format!("{fam}[{top}]")));
                        }
                    }
                    for i in base..base + self.truncation {
                        if !excl.contains(&i) {
                            e.add_term(self.atom_var(g, &Ref::Indexed(fam.clone(), i))?, &one);
                        }
                    }
                    let t = self
                        .lookup(&VarKind::Tail(fam.clone()))
                        .ok_or_else(|| KmsError::MissingValue(format!("tail({fam})")))?;
                    e.add_term(t, &one);
                }
            }
        }
        Ok(e)
    }

    /// `m(a)` as a linear expression: inclusion-exclusion over the minimal
    /// parts of `a` plus the atom sum of the remainder. With `allow_tail`
    /// the remainder may be infinite (used for the m1 exhaustion).
    pub fn set_expr(
        &self,
        g: &Ultragraph,
        a: &SymbolicVertexSet,
        allow_tail: bool,
    ) -> Result<LinExpr, KmsError> {
        let (emitters, sinks, residue) = g.split_minimal(a);
        let parts: Vec<&SymbolicVertexSet> = emitters
            .iter()
            .chain(sinks.iter())
            .map(|p| p.set())
            .collect();
        if parts.len() > 12 {
            return Err(KmsError::TooManyParts(parts.len()));
        }
        let mut e = LinExpr::default();
        for mask in 1u32..(1u32 << parts.len()) {
            let mut meet: Option<SymbolicVertexSet> = None;
            let mut k = 0;
            for (j, p) in parts.iter().enumerate() {
                if mask & (1 << j) != 0 {
                    k += 1;
                    meet = Some(match meet {
                        None => (*p).clone(),
                        Some(m) => m.intersect(p),
                    });
                }
            }
            let meet = meet.unwrap();
            let sign = if k % 2 == 1 { Q::one() } else { -Q::one() };
            if k == 1 {
                let var = self
                    .lookup(&VarKind::Minimal(meet))
                    .ok_or_else(|| KmsError::MissingValue("minimal set".to_string()))?;
                e.add_term(var, &sign);
            } else {
                if meet.is_empty() {
                    continue;
                }
                // Intersections of distinct minimal sets are finite.
                let atoms = self.atom_expr(g, &meet)?;
                e.add(&atoms.scaled(&sign));
            }
        }
        if !allow_tail && residue.cardinality().is_infinite() {
            return Err(KmsError::Decompose(DecomposeError::NotDecomposable {
                set: a.clone(),
                residue,
            }));
        }
        e.add(&self.atom_expr(g, &residue)?);
        Ok(e)
    }
}

/// Provenance class of a compiled constraint.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ConstraintKind {
    M1,
    M2,
    M3,
    Ground,
    LowerBound,
    UpperBound,
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConstraintKind::M1 => "m1",
            ConstraintKind::M2 => "m2",
            ConstraintKind::M3 => "m3",
            ConstraintKind::Ground => "ground",
            ConstraintKind::LowerBound => "lower-bound",
            ConstraintKind::UpperBound => "upper-bound",
        };
        f.write_str(s)
    }
}

/// One compiled constraint `expr = 0` or `expr ≤ 0` with its provenance.
#[derive(Clone, Debug)]
pub struct KmsConstraint {
    pub kind: ConstraintKind,
    pub context: String,
    pub expr: LinExpr,
    pub rel: Rel,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SystemWarning {
    /// The family's tail members emit edges; their balance equations are
    /// not finitely closable and are checked only up to the truncation.
    TailRegularUnclosed(Symbol),
    /// A head's balance equation mentions indices beyond the truncation.
    HeadBeyondTruncation(String),
    /// The edge sum of this inequality was truncated to finitely many
    /// edges of an infinite emitter.
    EdgeSumTruncated(String),
}

impl fmt::Display for SystemWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemWarning::TailRegularUnclosed(s) => {
                write!(f, "family `{s}` has regular tail members; balance beyond the truncation is not enforced")
            }
            SystemWarning::HeadBeyondTruncation(s) => {
                write!(f, "balance at {s} reaches past the truncation and was skipped")
            }
            SystemWarning::EdgeSumTruncated(s) => {
                write!(f, "edge sum truncated for {s}")
            }
        }
    }
}

/// A compiled constraint system over the atom variables.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    pub vars: VarTable,
    pub constraints: Vec<KmsConstraint>,
    pub warnings: Vec<SystemWarning>,
    pub exact: bool,
    /// Is the m1 supremum attained on a finite union of atoms?
    pub m1_attained: bool,
}

impl ConstraintSystem {
    fn to_solver(&self) -> Vec<Constraint> {
        self.constraints
            .iter()
            .map(|c| {
                let tag = format!("{} at {}", c.kind, c.context);
                match c.rel {
                    Rel::Eq => Constraint::eq(c.expr.clone(), tag),
                    Rel::Le => Constraint::le(c.expr.clone(), tag),
                }
            })
            .collect()
    }
}

fn require_decomposable(g: &Ultragraph) -> Result<(), KmsError> {
    let verdict = g.check_range_decomposition();
    match verdict.counterexample {
        Some((edge, residue)) => Err(KmsError::RangeNotDecomposable { edge, residue }),
        None => Ok(()),
    }
}

fn push_bounds(vt: &VarTable, out: &mut Vec<KmsConstraint>) {
    for (i, kind) in vt.vars.iter().enumerate() {
        let mut lo = LinExpr::default();
        lo.add_term(i, &-Q::one());
        out.push(KmsConstraint {
            kind: ConstraintKind::LowerBound,
            context: kind.to_string(),
            expr: lo,
            rel: Rel::Le,
        });
        let mut hi = LinExpr::default();
        hi.add_term(i, &Q::one());
        hi.constant = -Q::one();
        out.push(KmsConstraint {
            kind: ConstraintKind::UpperBound,
            context: kind.to_string(),
            expr: hi,
            rel: Rel::Le,
        });
    }
}

/// Regular atoms of the graph as concrete refs: named regular vertices
/// and regular family heads.
fn regular_atoms(g: &Ultragraph, vt: &VarTable) -> Vec<Ref> {
    let mut out = Vec::new();
    for v in g.named_vertices() {
        if g.is_regular_vertex(&Ref::Named(v.clone())) {
            out.push(Ref::Named(v.clone()));
        }
    }
    for (fam, base) in g.vertex_families() {
        for i in *base..base + vt.truncation {
            let r = Ref::Indexed(fam.clone(), i);
            if g.is_regular_vertex(&r) {
                out.push(r);
            }
        }
    }
    out
}

/// Families whose tail members (beyond every truncation) emit edges.
fn tail_regular_families(g: &Ultragraph) -> Vec<Symbol> {
    let sinks = g.sink_set();
    let mut out = Vec::new();
    for fam in g.vertex_families().keys() {
        let all_tail_sinks = match sinks.family_part(fam) {
            Some(FamilyPart::Cofinite(_)) => true,
            _ => false,
        };
        if !all_tail_sinks {
            out.push(fam.clone());
        }
    }
    out
}

/// The m1 exhaustion: the full vertex set, evaluated with tails allowed.
fn m1_constraint(g: &Ultragraph, vt: &VarTable) -> Result<(KmsConstraint, bool), KmsError> {
    let top = g.full_vertex_set();
    let mut expr = vt.set_expr(g, &top, true)?;
    expr.constant -= Q::one();
    let (_, _, residue) = g.split_minimal(&top);
    let attained = residue.cardinality().is_finite();
    Ok((
        KmsConstraint {
            kind: ConstraintKind::M1,
            context: "total mass".to_string(),
            expr,
            rel: Rel::Eq,
        },
        attained,
    ))
}

/// Balance equation m2 at one regular atom. The general finite regular
/// set follows linearly from its atoms, so only atoms are emitted.
fn m2_at(
    g: &Ultragraph,
    vt: &VarTable,
    mw: &WeightsAtBeta,
    v: &Ref,
) -> Result<KmsConstraint, KmsError> {
    let single = SymbolicVertexSet::singleton(v);
    let mut expr = LinExpr::default();
    expr.add_term(vt.atom_var(g, v)?, &Q::one());
    let edges = g.all_edges_from(&single)?;
    for e in &edges {
        let m = mw.of_edge(e)?;
        let r = g.edge_range(e)?;
        let re = vt.set_expr(g, &r, false)?;
        expr.sub(&re.scaled(&m));
    }
    Ok(KmsConstraint {
        kind: ConstraintKind::M2,
        context: format!("{{{v}}}"),
        expr,
        rel: Rel::Eq,
    })
}

/// The m3 supremum at one minimal set: the full edge series (truncated
/// for infinite emitters) plus the full sink series, below `m(A)`.
fn m3_at(
    g: &Ultragraph,
    vt: &VarTable,
    mw: &WeightsAtBeta,
    a: &SymbolicVertexSet,
    warnings: &mut Vec<SystemWarning>,
) -> Result<KmsConstraint, KmsError> {
    let (eps, card) = g.epsilon(a);
    let mut expr = LinExpr::default();
    let limit = match card {
        Cardinality::Finite(n) => n as usize,
        Cardinality::Infinite => {
            warnings.push(SystemWarning::EdgeSumTruncated(format!("{a}")));
            let families = g.edge_bases().len().max(1);
            families * vt.truncation as usize + g.edge_decls().len()
        }
    };
    for e in eps.enumerate(g.edge_bases(), limit) {
        let m = mw.of_edge(&e)?;
        let r = g.edge_range(&e)?;
        match vt.set_expr(g, &r, false) {
            Ok(re) => expr.add(&re.scaled(&m)),
            Err(KmsError::BeyondTruncation(s)) => {
                warnings.push(SystemWarning::HeadBeyondTruncation(s));
            }
            Err(err) => return Err(err),
        }
    }
    let sink_part = a.intersect(&g.sink_set());
    expr.add(&vt.atom_expr(g, &sink_part)?);
    let var = vt
        .lookup(&VarKind::Minimal(a.clone()))
        .ok_or_else(|| KmsError::MissingValue(format!("m({a})")))?;
    expr.add_term(var, &-Q::one());
    Ok(KmsConstraint {
        kind: ConstraintKind::M3,
        context: format!("{a}"),
        expr,
        rel: Rel::Le,
    })
}

/// Compile the constraint system for inverse temperature β.
pub fn build_constraints(
    g: &Ultragraph,
    weights: &EdgeWeights,
    beta: &Q,
    truncation: u64,
) -> Result<ConstraintSystem, KmsError> {
    require_decomposable(g)?;
    let mw = WeightsAtBeta::new(g, weights, beta)?;
    build_with_weights(g, &mw, truncation)
}

fn build_with_weights(
    g: &Ultragraph,
    mw: &WeightsAtBeta,
    truncation: u64,
) -> Result<ConstraintSystem, KmsError> {
    let vt = VarTable::build(g, truncation);
    let mut constraints = Vec::new();
    let mut warnings = Vec::new();

    for v in regular_atoms(g, &vt) {
        match m2_at(g, &vt, mw, &v) {
            Ok(c) => constraints.push(c),
            Err(KmsError::BeyondTruncation(s)) => {
                warnings.push(SystemWarning::HeadBeyondTruncation(s));
            }
            Err(e) => return Err(e),
        }
    }
    for fam in tail_regular_families(g) {
        warnings.push(SystemWarning::TailRegularUnclosed(fam));
    }

    let (m1, attained) = m1_constraint(g, &vt)?;
    constraints.push(m1);

    for a in g.minimal_set_catalog() {
        constraints.push(m3_at(g, &vt, mw, &a, &mut warnings)?);
    }

    push_bounds(&vt, &mut constraints);
    Ok(ConstraintSystem {
        vars: vt,
        constraints,
        warnings,
        exact: mw.exact,
        m1_attained: attained,
    })
}

/// Compile the ground-state system: edge weights vanish, so every regular
/// atom carries no mass and tails of edge-emitting families vanish too.
pub fn build_ground(g: &Ultragraph, truncation: u64) -> Result<ConstraintSystem, KmsError> {
    require_decomposable(g)?;
    let vt = VarTable::build(g, truncation);
    let mw = WeightsAtBeta::ground(g);
    let mut constraints = Vec::new();
    let mut warnings = Vec::new();

    for v in regular_atoms(g, &vt) {
        let mut expr = LinExpr::default();
        expr.add_term(vt.atom_var(g, &v)?, &Q::one());
        constraints.push(KmsConstraint {
            kind: ConstraintKind::Ground,
            context: format!("{{{v}}}"),
            expr,
            rel: Rel::Eq,
        });
    }
    for fam in tail_regular_families(g) {
        let t = vt
            .lookup(&VarKind::Tail(fam.clone()))
            .ok_or_else(|| KmsError::MissingValue(format!("tail({fam})")))?;
        let mut expr = LinExpr::default();
        expr.add_term(t, &Q::one());
        constraints.push(KmsConstraint {
            kind: ConstraintKind::Ground,
            context: format!("tail({fam})"),
            expr,
            rel: Rel::Eq,
        });
    }

    let (m1, attained) = m1_constraint(g, &vt)?;
    constraints.push(m1);
    for a in g.minimal_set_catalog() {
        constraints.push(m3_at(g, &vt, &mw, &a, &mut warnings)?);
    }
    push_bounds(&vt, &mut constraints);
    Ok(ConstraintSystem {
        vars: vt,
        constraints,
        warnings,
        exact: true,
        m1_attained: attained,
    })
}

/// A solved m-function: the assignment with its variable table.
#[derive(Clone, Debug)]
pub struct MSolution {
    pub vars: VarTable,
    pub assignment: Vec<Q>,
    pub dimension: usize,
    pub pinned: Vec<bool>,
}

impl MSolution {
    pub fn value(&self, kind: &VarKind) -> Option<&Q> {
        self.vars.lookup(kind).map(|i| &self.assignment[i])
    }

    /// `m` of any generalized vertex under this assignment.
    pub fn m_of(&self, g: &Ultragraph, a: &SymbolicVertexSet) -> Result<Q, KmsError> {
        Ok(self.vars.set_expr(g, a, true)?.eval(&self.assignment))
    }

    /// Repackage the assignment as candidate m-data.
    pub fn to_mfunction(&self) -> MFunction {
        let mut m = MFunction {
            truncation: self.vars.truncation,
            ..Default::default()
        };
        for (i, kind) in self.vars.vars.iter().enumerate() {
            let v = self.assignment[i].clone();
            match kind {
                VarKind::Named(s) => {
                    m.named.insert(s.clone(), v);
                }
                VarKind::Head(fam, idx) => {
                    m.heads.entry(fam.clone()).or_default().insert(*idx, v);
                }
                VarKind::Tail(fam) => {
                    m.tails.insert(fam.clone(), v);
                }
                VarKind::Minimal(a) => {
                    m.minimal.push((a.clone(), v));
                }
            }
        }
        m
    }
}

#[derive(Clone, Debug)]
pub enum KmsOutcome {
    Infeasible { witness: String },
    Feasible(MSolution),
}

/// Exact feasibility: Gaussian elimination then Fourier-Motzkin, with the
/// lexicographically minimal point reported.
pub fn solve_system(system: &ConstraintSystem) -> Result<KmsOutcome, KmsError> {
    match solver::solve(system.vars.len(), &system.to_solver())? {
        Outcome::Infeasible { witness } => Ok(KmsOutcome::Infeasible { witness }),
        Outcome::Feasible(sol) => Ok(KmsOutcome::Feasible(MSolution {
            vars: system.vars.clone(),
            assignment: sol.assignment,
            dimension: sol.dimension,
            pinned: sol.pinned,
        })),
    }
}

pub fn solve_kms(
    g: &Ultragraph,
    weights: &EdgeWeights,
    beta: &Q,
    truncation: u64,
) -> Result<(ConstraintSystem, KmsOutcome), KmsError> {
    let system = build_constraints(g, weights, beta, truncation)?;
    let outcome = solve_system(&system)?;
    Ok((system, outcome))
}

pub fn solve_ground(
    g: &Ultragraph,
    truncation: u64,
) -> Result<(ConstraintSystem, KmsOutcome), KmsError> {
    let system = build_ground(g, truncation)?;
    let outcome = solve_system(&system)?;
    Ok((system, outcome))
}

/// Candidate m-function data supplied from outside: atom values plus
/// minimal-set values, under a fixed truncation.
#[derive(Clone, Debug, Default)]
pub struct MFunction {
    pub named: BTreeMap<Symbol, Q>,
    pub heads: BTreeMap<Symbol, BTreeMap<u64, Q>>,
    pub tails: BTreeMap<Symbol, Q>,
    pub minimal: Vec<(SymbolicVertexSet, Q)>,
    pub truncation: u64,
}

impl MFunction {
    pub fn to_assignment(&self, vt: &VarTable) -> Result<Vec<Q>, KmsError> {
        if self.truncation != vt.truncation {
            return Err(KmsError::TruncationMismatch {
                expected: vt.truncation,
                got: self.truncation,
            });
        }
        let mut out = Vec::with_capacity(vt.len());
        for kind in &vt.vars {
            let v = match kind {
                VarKind::Named(s) => self.named.get(s).cloned(),
                VarKind::Head(fam, i) => self.heads.get(fam).and_then(|h| h.get(i)).cloned(),
                VarKind::Tail(fam) => self.tails.get(fam).cloned(),
                VarKind::Minimal(s) => self
                    .minimal
                    .iter()
                    .find(|(a, _)| a == s)
                    .map(|(_, q)| q.clone()),
            };
            out.push(v.ok_or_else(|| KmsError::MissingValue(kind.to_string()))?);
        }
        Ok(out)
    }
}

/// A violated condition, with the residual of its constraint.
#[derive(Clone, Debug)]
pub struct Violation {
    pub kind: ConstraintKind,
    pub context: String,
    pub residual: Q,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: residual {}", self.kind, self.context, self.residual)
    }
}

/// Check candidate m-data against every compiled constraint; the list is
/// empty exactly when the data lies in the state set within tolerance.
pub fn verify_m(
    system: &ConstraintSystem,
    data: &MFunction,
    tol: &Q,
) -> Result<Vec<Violation>, KmsError> {
    let assignment = data.to_assignment(&system.vars)?;
    let mut out = Vec::new();
    for c in &system.constraints {
        let residual = c.expr.eval(&assignment);
        let violated = match c.rel {
            Rel::Eq => residual.abs() > *tol,
            Rel::Le => residual > *tol,
        };
        if violated {
            out.push(Violation {
                kind: c.kind,
                context: c.context.clone(),
                residual,
            });
        }
    }
    Ok(out)
}

/// The cylinder mass `κ(D_{(β,B),F,S}) = M(β)·m(B) − Σ_F M(βe)·m(r(e))
/// − Σ_S M(β)·m(v)`; for length-zero bases `M(β)` is 1.
pub fn kappa(
    g: &Ultragraph,
    sol: &MSolution,
    mw: &WeightsAtBeta,
    c: &Cylinder,
) -> Result<Q, KmsError> {
    let m_base = mw.of_word(c.base().edges())?;
    let mut total = sol.m_of(g, c.base().range())? * &m_base;
    for e in c.excluded_edges() {
        let r = g.edge_range(e)?;
        total -= m_base.clone() * mw.of_edge(e)? * sol.m_of(g, &r)?;
    }
    for v in c.excluded_sinks() {
        total -= m_base.clone() * sol.m_of(g, &SymbolicVertexSet::singleton(v))?;
    }
    if total.is_negative() {
        return Err(KmsError::NegativeMass(format!("{c}")));
    }
    Ok(total)
}

/// Measure of a region given as disjoint cylinders: decompose each into
/// semi-ring members, certify pairwise disjointness symbolically, and sum
/// the masses.
pub fn mu(
    g: &Ultragraph,
    sol: &MSolution,
    mw: &WeightsAtBeta,
    region: &[Cylinder],
) -> Result<Q, KmsError> {
    let mut pieces = Vec::new();
    for c in region {
        pieces.extend(decompose_to_semiring(g, c)?);
    }
    for i in 0..pieces.len() {
        for j in i + 1..pieces.len() {
            if !basis_intersect(g, &pieces[i], &pieces[j])?.is_empty() {
                return Err(KmsError::OverlappingRegion(format!(
                    "{} and {}",
                    pieces[i], pieces[j]
                )));
            }
        }
    }
    let mut total = Q::zero();
    for p in &pieces {
        total += kappa(g, sol, mw, p)?;
    }
    Ok(total)
}

/// Feasibility across a grid of inverse temperatures.
#[derive(Clone, Debug)]
pub enum SweepEntry {
    Infeasible { witness: String },
    Feasible { dimension: usize },
}

pub fn beta_sweep(
    g: &Ultragraph,
    weights: &EdgeWeights,
    betas: &[Q],
    truncation: u64,
) -> Result<Vec<(Q, SweepEntry)>, KmsError> {
    let mut out = Vec::new();
    for beta in betas {
        let (_, outcome) = solve_kms(g, weights, beta, truncation)?;
        let entry = match outcome {
            KmsOutcome::Infeasible { witness } => SweepEntry::Infeasible { witness },
            KmsOutcome::Feasible(sol) => SweepEntry::Feasible {
                dimension: sol.dimension,
            },
        };
        out.push((beta.clone(), entry));
    }
    Ok(out)
}
