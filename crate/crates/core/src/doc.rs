//! The JSON document format: ultragraph declarations with optional edge
//! weights, plus the input schemas for points, cylinders, m-function data
//! and block maps used by the command-line surface.
//!
//! Set expressions follow the grammar
//! `FINITE([refs]) | FAMILY(id) [MINUS [indices]] | UNION(...) | INTER(...)`,
//! with element references written `v0` (named) or `w[3]` (indexed).
//! Documents round-trip byte-identically through parse and canonical
//! serialization.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::{BoundaryError, BoundaryPoint, Cylinder, Ultrapath};
use crate::dynamics::{BlockMap, CocycleTable, DynamicsError};
use crate::kms::{EdgeWeights, KmsError, MFunction, Q};
use crate::symbolic::{EdgeRef, FamilyPart, Ref, Symbol, SymbolicVertexSet};
use crate::ultragraph::{
    EdgeDecl, EdgeRangeDecl, EdgeSource, GraphError, IndexedVertexRef, Ultragraph,
};

#[derive(Error, Debug)]
pub enum DocError {
    #[error("document has no version tag")]
    MissingVersion,
    #[error("unsupported version `{0}`")]
    UnsupportedVersion(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad element reference `{0}`")]
    BadRef(String),
    #[error("bad rational literal `{0}`")]
    BadRational(String),
    #[error("graph error: {0}")]
    Graph(#[from] GraphError),
    #[error("boundary error: {0}")]
    Boundary(#[from] BoundaryError),
    #[error("dynamics error: {0}")]
    Dynamics(#[from] DynamicsError),
    #[error("kms error: {0}")]
    Kms(#[from] KmsError),
}

/// `v0` or `w[3]`.
pub fn parse_ref(s: &str) -> Result<Ref, DocError> {
    match s.find('[') {
        None => {
            if s.is_empty() {
                return Err(DocError::BadRef(s.to_string()));
            }
            Ok(Ref::named(s))
        }
        Some(open) => {
            if !s.ends_with(']') || open == 0 {
                return Err(DocError::BadRef(s.to_string()));
            }
            let idx: u64 = s[open + 1..s.len() - 1]
                .parse()
                .map_err(|_| DocError::BadRef(s.to_string()))?;
            Ok(Ref::indexed(&s[..open], idx))
        }
    }
}

/// Rational literal: `p/q`, an integer, or a finite decimal.
pub fn parse_rational(s: &str) -> Result<Q, DocError> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let num: num_bigint::BigInt = p
            .trim()
            .parse()
            .map_err(|_| DocError::BadRational(s.to_string()))?;
        let den: num_bigint::BigInt = q
            .trim()
            .parse()
            .map_err(|_| DocError::BadRational(s.to_string()))?;
        if den.is_zero() {
            return Err(DocError::BadRational(s.to_string()));
        }
        return Ok(Q::new(num, den));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let digits = format!("{int}{frac}");
        let num: num_bigint::BigInt = digits
            .parse()
            .map_err(|_| DocError::BadRational(s.to_string()))?;
        let den = num_bigint::BigInt::from(10u32).pow(frac.len() as u32);
        return Ok(Q::new(num, den));
    }
    let num: num_bigint::BigInt = s.parse().map_err(|_| DocError::BadRational(s.to_string()))?;
    Ok(Q::from_integer(num))
}

pub fn rational_value(v: &serde_json::Value) -> Result<Q, DocError> {
    match v {
        serde_json::Value::String(s) => parse_rational(s),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Q::from_integer(i.into()))
            } else {
                let f = n
                    .as_f64()
                    .ok_or_else(|| DocError::BadRational(n.to_string()))?;
                BigRational::from_float(f).ok_or_else(|| DocError::BadRational(n.to_string()))
            }
        }
        other => Err(DocError::BadRational(other.to_string())),
    }
}

/// Exact rational as text: `p/q`, or just the integer.
pub fn format_rational(q: &Q) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn rational_approx(q: &Q) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// A set expression of the document grammar.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(untagged)]
pub enum SetExprDoc {
    Finite {
        #[serde(rename = "FINITE")]
        finite: Vec<String>,
    },
    Family {
        #[serde(rename = "FAMILY")]
        family: String,
        #[serde(rename = "MINUS", default, skip_serializing_if = "Option::is_none")]
        minus: Option<Vec<String>>,
    },
    Union {
        #[serde(rename = "UNION")]
        union: Vec<SetExprDoc>,
    },
    Inter {
        #[serde(rename = "INTER")]
        inter: Vec<SetExprDoc>,
    },
}

pub fn eval_set_expr(expr: &SetExprDoc) -> Result<SymbolicVertexSet, DocError> {
    match expr {
        SetExprDoc::Finite { finite } => {
            let mut s = SymbolicVertexSet::empty();
            for r in finite {
                s.insert(parse_ref(r)?);
            }
            Ok(s)
        }
        SetExprDoc::Family { family, minus } => {
            let mut excl = BTreeSet::new();
            for r in minus.iter().flatten() {
                match parse_ref(r)? {
                    Ref::Indexed(fam, i) if fam.as_str() == family => {
                        excl.insert(i);
                    }
                    _ => return Err(DocError::BadRef(r.clone())),
                }
            }
            let mut s = SymbolicVertexSet::empty();
            s.set_family_part(Symbol::new(family.clone()), FamilyPart::Cofinite(excl));
            Ok(s)
        }
        SetExprDoc::Union { union } => {
            let mut s = SymbolicVertexSet::empty();
            for e in union {
                s = s.union(&eval_set_expr(e)?);
            }
            Ok(s)
        }
        SetExprDoc::Inter { inter } => {
            let mut parts = inter.iter();
            let first = match parts.next() {
                None => return Ok(SymbolicVertexSet::empty()),
                Some(e) => eval_set_expr(e)?,
            };
            parts.try_fold(first, |acc, e| Ok(acc.intersect(&eval_set_expr(e)?)))
        }
    }
}

/// Canonical document form of a symbolic set.
pub fn set_to_expr(s: &SymbolicVertexSet) -> SetExprDoc {
    let mut parts: Vec<SetExprDoc> = Vec::new();
    let mut finite: Vec<String> = s.named_part().iter().map(|v| v.to_string()).collect();
    for (fam, part) in s.family_parts() {
        match part {
            FamilyPart::Finite(idx) => {
                finite.extend(idx.iter().map(|i| format!("{fam}[{i}]")));
            }
            FamilyPart::Cofinite(excl) => parts.push(SetExprDoc::Family {
                family: fam.to_string(),
                minus: if excl.is_empty() {
                    None
                } else {
                    Some(excl.iter().map(|i| format!("{fam}[{i}]")).collect())
                },
            }),
        }
    }
    if !finite.is_empty() || parts.is_empty() {
        parts.insert(0, SetExprDoc::Finite { finite });
    }
    if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        SetExprDoc::Union { union: parts }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VertexFamilyDoc {
    pub id: String,
    pub base_index: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub id: String,
    pub source: String,
    pub range: SetExprDoc,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum EdgeFamilySourceDoc {
    Const(String),
    Indexed { family: String, offset: i64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IndexedRefDoc {
    pub family: String,
    pub offset: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum EdgeFamilyRangeDoc {
    ConstSet(SetExprDoc),
    IndexedRefs(Vec<IndexedRefDoc>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeFamilyDoc {
    pub id: String,
    pub source: EdgeFamilySourceDoc,
    pub range: EdgeFamilyRangeDoc,
}

/// The on-disk ultragraph document.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UltragraphDocument {
    pub version: String,
    #[serde(default)]
    pub vertex_families: Vec<VertexFamilyDoc>,
    #[serde(default)]
    pub vertices: Vec<String>,
    #[serde(default)]
    pub edges: Vec<EdgeDoc>,
    #[serde(default)]
    pub edge_families: Vec<EdgeFamilyDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub weights: BTreeMap<String, serde_json::Value>,
}

/// Parse a document into an ultragraph plus its declared weights.
pub fn parse_document(text: &str) -> Result<(Ultragraph, EdgeWeights), DocError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let obj = value.as_object().ok_or(DocError::MissingVersion)?;
    match obj.get("version") {
        None => return Err(DocError::MissingVersion),
        Some(serde_json::Value::String(v)) if v == "1" => {}
        Some(other) => return Err(DocError::UnsupportedVersion(other.to_string())),
    }
    let doc: UltragraphDocument = serde_json::from_value(value)?;
    document_to_graph(&doc)
}

pub fn document_to_graph(doc: &UltragraphDocument) -> Result<(Ultragraph, EdgeWeights), DocError> {
    let families = doc
        .vertex_families
        .iter()
        .map(|f| (Symbol::new(f.id.clone()), f.base_index))
        .collect();
    let vertices: BTreeSet<Symbol> = doc.vertices.iter().map(|v| Symbol::new(v.clone())).collect();
    let mut decls = Vec::new();
    for e in &doc.edges {
        decls.push(EdgeDecl {
            id: Symbol::new(e.id.clone()),
            indexed: false,
            source: EdgeSource::Const(parse_ref(&e.source)?),
            range: EdgeRangeDecl::ConstSet(eval_set_expr(&e.range)?),
        });
    }
    for f in &doc.edge_families {
        let source = match &f.source {
            EdgeFamilySourceDoc::Const(v) => EdgeSource::Const(parse_ref(v)?),
            EdgeFamilySourceDoc::Indexed { family, offset } => EdgeSource::Indexed {
                family: Symbol::new(family.clone()),
                offset: *offset,
            },
        };
        let range = match &f.range {
            EdgeFamilyRangeDoc::ConstSet(e) => EdgeRangeDecl::ConstSet(eval_set_expr(e)?),
            EdgeFamilyRangeDoc::IndexedRefs(refs) => EdgeRangeDecl::IndexedRefs(
                refs.iter()
                    .map(|r| IndexedVertexRef {
                        family: Symbol::new(r.family.clone()),
                        offset: r.offset,
                    })
                    .collect(),
            ),
        };
        decls.push(EdgeDecl {
            id: Symbol::new(f.id.clone()),
            indexed: true,
            source,
            range,
        });
    }
    let g = Ultragraph::new(families, vertices, decls)?;
    let mut weights = EdgeWeights::default();
    for (id, v) in &doc.weights {
        weights
            .by_decl
            .insert(Symbol::new(id.clone()), rational_value(v)?);
    }
    Ok((g, weights))
}

/// Canonical serialization: sorted declarations, weights as exact strings.
pub fn graph_to_document(g: &Ultragraph, weights: &EdgeWeights) -> UltragraphDocument {
    let mut doc = UltragraphDocument {
        version: "1".to_string(),
        vertex_families: g
            .vertex_families()
            .iter()
            .map(|(id, base)| VertexFamilyDoc {
                id: id.to_string(),
                base_index: *base,
            })
            .collect(),
        vertices: g.named_vertices().iter().map(|v| v.to_string()).collect(),
        edges: Vec::new(),
        edge_families: Vec::new(),
        weights: BTreeMap::new(),
    };
    for decl in g.edge_decls().values() {
        if !decl.indexed {
            if let (EdgeSource::Const(v), EdgeRangeDecl::ConstSet(r)) = (&decl.source, &decl.range)
            {
                doc.edges.push(EdgeDoc {
                    id: decl.id.to_string(),
                    source: v.to_string(),
                    range: set_to_expr(r),
                });
            }
        } else {
            let source = match &decl.source {
                EdgeSource::Const(v) => EdgeFamilySourceDoc::Const(v.to_string()),
                EdgeSource::Indexed { family, offset } => EdgeFamilySourceDoc::Indexed {
                    family: family.to_string(),
                    offset: *offset,
                },
            };
            let range = match &decl.range {
                EdgeRangeDecl::ConstSet(r) => EdgeFamilyRangeDoc::ConstSet(set_to_expr(r)),
                EdgeRangeDecl::IndexedRefs(refs) => EdgeFamilyRangeDoc::IndexedRefs(
                    refs.iter()
                        .map(|r| IndexedRefDoc {
                            family: r.family.to_string(),
                            offset: r.offset,
                        })
                        .collect(),
                ),
            };
            doc.edge_families.push(EdgeFamilyDoc {
                id: decl.id.to_string(),
                source,
                range,
            });
        }
    }
    for (id, n) in &weights.by_decl {
        doc.weights
            .insert(id.to_string(), serde_json::Value::String(format_rational(n)));
    }
    doc
}

pub fn serialize_document(doc: &UltragraphDocument) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("document serializes");
    s.push('\n');
    s
}

/// A point of the boundary space, or an aperiodic family ray for the
/// isolation classifier.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum PointDoc {
    #[serde(rename = "finite")]
    Finite {
        edges: Vec<String>,
        range: SetExprDoc,
    },
    #[serde(rename = "eventually_periodic")]
    EventuallyPeriodic {
        prefix: Vec<String>,
        cycle: Vec<String>,
    },
    #[serde(rename = "ray")]
    Ray {
        prefix: Vec<String>,
        family: String,
        start: u64,
    },
}

fn parse_edge_list(edges: &[String]) -> Result<Vec<EdgeRef>, DocError> {
    edges.iter().map(|e| parse_ref(e)).collect()
}

pub enum ParsedPoint {
    Point(BoundaryPoint),
    Ray {
        prefix: Vec<EdgeRef>,
        family: Symbol,
        start: u64,
    },
}

pub fn parse_point(g: &Ultragraph, doc: &PointDoc) -> Result<ParsedPoint, DocError> {
    match doc {
        PointDoc::Finite { edges, range } => {
            let up = Ultrapath::new(g, parse_edge_list(edges)?, eval_set_expr(range)?)?;
            Ok(ParsedPoint::Point(BoundaryPoint::finite(g, up)?))
        }
        PointDoc::EventuallyPeriodic { prefix, cycle } => {
            Ok(ParsedPoint::Point(BoundaryPoint::eventually_periodic(
                g,
                parse_edge_list(prefix)?,
                parse_edge_list(cycle)?,
            )?))
        }
        PointDoc::Ray {
            prefix,
            family,
            start,
        } => Ok(ParsedPoint::Ray {
            prefix: parse_edge_list(prefix)?,
            family: Symbol::new(family.clone()),
            start: *start,
        }),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CylinderDoc {
    pub base_edges: Vec<String>,
    pub base_range: SetExprDoc,
    #[serde(default)]
    pub excluded_edges: Vec<String>,
    #[serde(default)]
    pub excluded_sinks: Vec<String>,
}

pub fn parse_cylinder(g: &Ultragraph, doc: &CylinderDoc) -> Result<Cylinder, DocError> {
    let base = Ultrapath::new(
        g,
        parse_edge_list(&doc.base_edges)?,
        eval_set_expr(&doc.base_range)?,
    )?;
    let f = doc
        .excluded_edges
        .iter()
        .map(|e| parse_ref(e))
        .collect::<Result<BTreeSet<_>, _>>()?;
    let s = doc
        .excluded_sinks
        .iter()
        .map(|v| parse_ref(v))
        .collect::<Result<BTreeSet<_>, _>>()?;
    Ok(Cylinder::new(g, base, f, s)?)
}

pub fn cylinder_to_doc(c: &Cylinder) -> CylinderDoc {
    CylinderDoc {
        base_edges: c.base().edges().iter().map(|e| e.to_string()).collect(),
        base_range: set_to_expr(c.base().range()),
        excluded_edges: c.excluded_edges().iter().map(|e| e.to_string()).collect(),
        excluded_sinks: c.excluded_sinks().iter().map(|v| v.to_string()).collect(),
    }
}

/// Candidate m-function data file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MFunctionDoc {
    pub truncation: u64,
    #[serde(default)]
    pub named: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub heads: BTreeMap<String, BTreeMap<String, serde_json::Value>>,
    #[serde(default)]
    pub tails: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub minimal: Vec<MinimalValueDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimalValueDoc {
    pub set: SetExprDoc,
    pub value: serde_json::Value,
}

pub fn parse_mfunction(doc: &MFunctionDoc) -> Result<MFunction, DocError> {
    let mut m = MFunction {
        truncation: doc.truncation,
        ..Default::default()
    };
    for (v, q) in &doc.named {
        m.named.insert(Symbol::new(v.clone()), rational_value(q)?);
    }
    for (fam, heads) in &doc.heads {
        let mut h = BTreeMap::new();
        for (i, q) in heads {
            let idx: u64 = i.parse().map_err(|_| DocError::BadRef(i.clone()))?;
            h.insert(idx, rational_value(q)?);
        }
        m.heads.insert(Symbol::new(fam.clone()), h);
    }
    for (fam, q) in &doc.tails {
        m.tails.insert(Symbol::new(fam.clone()), rational_value(q)?);
    }
    for mv in &doc.minimal {
        m.minimal
            .push((eval_set_expr(&mv.set)?, rational_value(&mv.value)?));
    }
    Ok(m)
}

/// Cocycle table in a map file.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CocycleDoc {
    #[serde(default)]
    pub default: u64,
    #[serde(default)]
    pub by_first_edge: BTreeMap<String, u64>,
}

fn parse_cocycle(doc: &CocycleDoc) -> Result<CocycleTable, DocError> {
    let mut t = CocycleTable::constant(doc.default);
    for (e, v) in &doc.by_first_edge {
        t.by_first_edge.insert(parse_ref(e)?, *v);
    }
    Ok(t)
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct BlockMapDoc {
    #[serde(default)]
    pub prefix_rules: Vec<PrefixRuleDoc>,
    #[serde(default)]
    pub edges: BTreeMap<String, String>,
    #[serde(default)]
    pub edge_families: BTreeMap<String, FamilyImageDoc>,
    #[serde(default)]
    pub vertices: BTreeMap<String, String>,
    #[serde(default)]
    pub vertex_families: BTreeMap<String, FamilyImageDoc>,
    #[serde(default)]
    pub k: CocycleDoc,
    #[serde(default)]
    pub l: CocycleDoc,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PrefixRuleDoc {
    pub from: Vec<String>,
    pub to: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyImageDoc {
    pub to: String,
    #[serde(default)]
    pub shift: i64,
}

/// An orbit-map file: the forward presentation and its inverse.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrbitMapDoc {
    pub forward: BlockMapDoc,
    pub backward: BlockMapDoc,
}

pub fn parse_block_map(doc: &BlockMapDoc) -> Result<BlockMap, DocError> {
    let mut m = BlockMap::default();
    for rule in &doc.prefix_rules {
        m.prefix_rules
            .push((parse_edge_list(&rule.from)?, parse_edge_list(&rule.to)?));
    }
    for (a, b) in &doc.edges {
        m.edge_map
            .insert(Symbol::new(a.clone()), Symbol::new(b.clone()));
    }
    for (a, img) in &doc.edge_families {
        m.edge_family_map.insert(
            Symbol::new(a.clone()),
            (Symbol::new(img.to.clone()), img.shift),
        );
    }
    for (a, b) in &doc.vertices {
        m.vertex_map
            .insert(Symbol::new(a.clone()), Symbol::new(b.clone()));
    }
    for (a, img) in &doc.vertex_families {
        m.vertex_family_map.insert(
            Symbol::new(a.clone()),
            (Symbol::new(img.to.clone()), img.shift),
        );
    }
    m.k = parse_cocycle(&doc.k)?;
    m.l = parse_cocycle(&doc.l)?;
    Ok(m)
}
