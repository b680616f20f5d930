//! Exact algebra of possibly infinite vertex and edge collections.
//!
//! Infinite sets are presented finitely: a set is a finite collection of
//! named elements plus, per indexed family, either a finite index set or a
//! cofinite one (all indices except finitely many). This class is closed
//! under union, intersection and difference, and has decidable equality,
//! which is all the rest of the crate needs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// An interned-by-value identifier for vertices, edges and families.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Symbol(String);

impl Symbol {
    pub fn new(s: impl Into<String>) -> Self {
        Symbol(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol(s.to_owned())
    }
}

/// A reference to a single element: either a named one or the `index`-th
/// member of an indexed family.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum Ref {
    Named(Symbol),
    Indexed(Symbol, u64),
}

impl Ref {
    pub fn named(s: impl Into<String>) -> Self {
        Ref::Named(Symbol::new(s))
    }

    pub fn indexed(family: impl Into<String>, index: u64) -> Self {
        Ref::Indexed(Symbol::new(family), index)
    }
}

impl fmt::Display for Ref {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ref::Named(s) => write!(f, "{s}"),
            Ref::Indexed(fam, i) => write!(f, "{fam}[{i}]"),
        }
    }
}

/// Vertex references and edge references share one shape; the ultragraph
/// layer keeps their namespaces apart.
pub type VertexRef = Ref;
pub type EdgeRef = Ref;

/// The slice of one indexed family inside a symbolic set.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub enum FamilyPart {
    /// Exactly the listed indices.
    Finite(BTreeSet<u64>),
    /// Every index of the family's domain except the listed ones.
    Cofinite(BTreeSet<u64>),
}

impl FamilyPart {
    pub fn is_empty(&self) -> bool {
        matches!(self, FamilyPart::Finite(s) if s.is_empty())
    }

    fn union(&self, other: &FamilyPart) -> FamilyPart {
        use FamilyPart::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Finite(a.union(b).cloned().collect()),
            (Finite(a), Cofinite(e)) => Cofinite(e.difference(a).cloned().collect()),
            (Cofinite(e), Finite(b)) => Cofinite(e.difference(b).cloned().collect()),
            (Cofinite(e1), Cofinite(e2)) => Cofinite(e1.intersection(e2).cloned().collect()),
        }
    }

    fn intersect(&self, other: &FamilyPart) -> FamilyPart {
        use FamilyPart::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Finite(a.intersection(b).cloned().collect()),
            (Finite(a), Cofinite(e)) => Finite(a.difference(e).cloned().collect()),
            (Cofinite(e), Finite(b)) => Finite(b.difference(e).cloned().collect()),
            (Cofinite(e1), Cofinite(e2)) => Cofinite(e1.union(e2).cloned().collect()),
        }
    }

    fn difference(&self, other: &FamilyPart) -> FamilyPart {
        use FamilyPart::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Finite(a.difference(b).cloned().collect()),
            (Finite(a), Cofinite(e)) => Finite(a.intersection(e).cloned().collect()),
            (Cofinite(e), Finite(b)) => Cofinite(e.union(b).cloned().collect()),
            (Cofinite(e1), Cofinite(e2)) => Finite(e2.difference(e1).cloned().collect()),
        }
    }

    fn is_subset(&self, other: &FamilyPart) -> bool {
        use FamilyPart::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.is_subset(b),
            (Finite(a), Cofinite(e)) => a.intersection(e).next().is_none(),
            (Cofinite(_), Finite(_)) => false,
            (Cofinite(e1), Cofinite(e2)) => e2.is_subset(e1),
        }
    }

    fn contains(&self, index: u64) -> bool {
        match self {
            FamilyPart::Finite(s) => s.contains(&index),
            FamilyPart::Cofinite(e) => !e.contains(&index),
        }
    }
}

/// Exact or infinite element count.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Cardinality {
    Finite(u64),
    Infinite,
}

impl Cardinality {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Cardinality::Infinite)
    }

    pub fn is_finite(&self) -> bool {
        !self.is_infinite()
    }
}

/// Index domains of the declared families: family id -> first valid index.
pub type FamilyBases = BTreeMap<Symbol, u64>;

/// A possibly infinite set presented over named elements and family slices.
///
/// Canonical form: empty family slices are absent, so derived equality is
/// extensional equality.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default, Serialize, Deserialize)]
pub struct SymbolicSet {
    named: BTreeSet<Symbol>,
    families: BTreeMap<Symbol, FamilyPart>,
}

pub type SymbolicVertexSet = SymbolicSet;
pub type SymbolicEdgeSet = SymbolicSet;

impl SymbolicSet {
    pub fn empty() -> Self {
        SymbolicSet::default()
    }

    pub fn from_named<I: IntoIterator<Item = Symbol>>(named: I) -> Self {
        SymbolicSet {
            named: named.into_iter().collect(),
            families: BTreeMap::new(),
        }
    }

    pub fn singleton(r: &Ref) -> Self {
        let mut s = SymbolicSet::empty();
        s.insert(r.clone());
        s
    }

    pub fn from_refs<'a, I: IntoIterator<Item = &'a Ref>>(refs: I) -> Self {
        let mut s = SymbolicSet::empty();
        for r in refs {
            s.insert(r.clone());
        }
        s
    }

    /// The whole domain: every listed named element plus every family in full.
    pub fn full<'a, I, J>(named: I, families: J) -> Self
    where
        I: IntoIterator<Item = &'a Symbol>,
        J: IntoIterator<Item = &'a Symbol>,
    {
        SymbolicSet {
            named: named.into_iter().cloned().collect(),
            families: families
                .into_iter()
                .map(|f| (f.clone(), FamilyPart::Cofinite(BTreeSet::new())))
                .collect(),
        }
    }

    pub fn insert(&mut self, r: Ref) {
        match r {
            Ref::Named(s) => {
                self.named.insert(s);
            }
            Ref::Indexed(fam, i) => {
                let part = self
                    .families
                    .entry(fam)
                    .or_insert_with(|| FamilyPart::Finite(BTreeSet::new()));
                match part {
                    FamilyPart::Finite(s) => {
                        s.insert(i);
                    }
                    FamilyPart::Cofinite(e) => {
                        e.remove(&i);
                    }
                }
            }
        }
    }

    pub fn set_family_part(&mut self, family: Symbol, part: FamilyPart) {
        if part.is_empty() {
            self.families.remove(&family);
        } else {
            self.families.insert(family, part);
        }
    }

    pub fn named_part(&self) -> &BTreeSet<Symbol> {
        &self.named
    }

    pub fn family_parts(&self) -> &BTreeMap<Symbol, FamilyPart> {
        &self.families
    }

    pub fn family_part(&self, family: &Symbol) -> Option<&FamilyPart> {
        self.families.get(family)
    }

    pub fn is_empty(&self) -> bool {
        self.named.is_empty() && self.families.is_empty()
    }

    fn canonicalize(mut self) -> Self {
        self.families.retain(|_, p| !p.is_empty());
        self
    }

    pub fn union(&self, other: &SymbolicSet) -> SymbolicSet {
        let named = self.named.union(&other.named).cloned().collect();
        let mut families = self.families.clone();
        for (fam, part) in &other.families {
            match families.get_mut(fam) {
                Some(p) => *p = p.union(part),
                None => {
                    families.insert(fam.clone(), part.clone());
                }
            }
        }
        SymbolicSet { named, families }.canonicalize()
    }

    pub fn intersect(&self, other: &SymbolicSet) -> SymbolicSet {
        let named = self.named.intersection(&other.named).cloned().collect();
        let mut families = BTreeMap::new();
        for (fam, part) in &self.families {
            if let Some(q) = other.families.get(fam) {
                families.insert(fam.clone(), part.intersect(q));
            }
        }
        SymbolicSet { named, families }.canonicalize()
    }

    pub fn difference(&self, other: &SymbolicSet) -> SymbolicSet {
        let named = self.named.difference(&other.named).cloned().collect();
        let mut families = BTreeMap::new();
        for (fam, part) in &self.families {
            let d = match other.families.get(fam) {
                Some(q) => part.difference(q),
                None => part.clone(),
            };
            families.insert(fam.clone(), d);
        }
        SymbolicSet { named, families }.canonicalize()
    }

    pub fn is_subset(&self, other: &SymbolicSet) -> bool {
        self.named.is_subset(&other.named)
            && self.families.iter().all(|(fam, part)| match other.families.get(fam) {
                Some(q) => part.is_subset(q),
                None => part.is_empty(),
            })
    }

    pub fn is_member(&self, r: &Ref) -> bool {
        match r {
            Ref::Named(s) => self.named.contains(s),
            Ref::Indexed(fam, i) => self
                .families
                .get(fam)
                .map(|p| p.contains(*i))
                .unwrap_or(false),
        }
    }

    pub fn cardinality(&self) -> Cardinality {
        let mut n = self.named.len() as u64;
        for part in self.families.values() {
            match part {
                FamilyPart::Finite(s) => n += s.len() as u64,
                FamilyPart::Cofinite(_) => return Cardinality::Infinite,
            }
        }
        Cardinality::Finite(n)
    }

    /// First `limit` members in canonical order: named elements first, then
    /// families by id with indices ascending.
    pub fn enumerate(&self, bases: &FamilyBases, limit: usize) -> Vec<Ref> {
        let mut out = Vec::new();
        for s in &self.named {
            if out.len() == limit {
                return out;
            }
            out.push(Ref::Named(s.clone()));
        }
        for (fam, part) in &self.families {
            match part {
                FamilyPart::Finite(s) => {
                    for &i in s {
                        if out.len() == limit {
                            return out;
                        }
                        out.push(Ref::Indexed(fam.clone(), i));
                    }
                }
                FamilyPart::Cofinite(excl) => {
                    let base = bases.get(fam).copied().unwrap_or(0);
                    let mut i = base;
                    while out.len() < limit {
                        if !excl.contains(&i) {
                            out.push(Ref::Indexed(fam.clone(), i));
                        }
                        i += 1;
                    }
                    if out.len() == limit {
                        return out;
                    }
                }
            }
        }
        out
    }

    /// Clamp family parts to their declared domains and drop indices below
    /// the base. Finite parts keep only valid indices; cofinite exclusion
    /// lists lose entries below the base (they are vacuous there).
    pub fn clip(&self, bases: &FamilyBases) -> SymbolicSet {
        let mut families = BTreeMap::new();
        for (fam, part) in &self.families {
            let base = bases.get(fam).copied().unwrap_or(0);
            let clipped = match part {
                FamilyPart::Finite(s) => {
                    FamilyPart::Finite(s.iter().copied().filter(|&i| i >= base).collect())
                }
                FamilyPart::Cofinite(e) => {
                    FamilyPart::Cofinite(e.iter().copied().filter(|&i| i >= base).collect())
                }
            };
            families.insert(fam.clone(), clipped);
        }
        SymbolicSet {
            named: self.named.clone(),
            families,
        }
        .canonicalize()
    }

    /// Largest index mentioned explicitly in any family part, if any.
    pub fn max_mentioned_index(&self) -> Option<u64> {
        self.families
            .values()
            .filter_map(|p| match p {
                FamilyPart::Finite(s) => s.iter().max().copied(),
                FamilyPart::Cofinite(e) => e.iter().max().copied(),
            })
            .max()
    }
}

impl fmt::Display for SymbolicSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "{{}}");
        }
        let mut first = true;
        write!(f, "{{")?;
        for s in &self.named {
            if !first {
                write!(f, ", ")?;
            }
            write!(f, "{s}")?;
            first = false;
        }
        for (fam, part) in &self.families {
            if !first {
                write!(f, ", ")?;
            }
            match part {
                FamilyPart::Finite(s) => {
                    let items: Vec<String> = s.iter().map(|i| format!("{fam}[{i}]")).collect();
                    write!(f, "{}", items.join(", "))?;
                }
                FamilyPart::Cofinite(e) if e.is_empty() => write!(f, "{fam}[*]")?,
                FamilyPart::Cofinite(e) => {
                    let items: Vec<String> = e.iter().map(|i| i.to_string()).collect();
                    write!(f, "{fam}[* \\ {{{}}}]", items.join(", "))?;
                }
            }
            first = false;
        }
        write!(f, "}}")
    }
}
