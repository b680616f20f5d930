//! Python bindings: an `Ultragraph` class wrapping a parsed document,
//! with the main analyses exposed as methods returning JSON strings
//! (stable key order, exact rationals as strings).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde_json::json;

use ushift_core::doc::{
    self, format_rational, parse_document, rational_approx, MFunctionDoc, PointDoc, ParsedPoint,
};
use ushift_core::dynamics::{
    check_condition_l, classify_isolated, classify_isolated_ray, find_cycles, has_exit,
    stabilizers, ConditionL,
};
use ushift_core::kms::{
    build_constraints, build_ground, solve_system, verify_m, EdgeWeights, KmsOutcome,
};
use ushift_core::ultragraph::Ultragraph as CoreGraph;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A parsed ultragraph document with its edge weights.
#[pyclass]
struct Ultragraph {
    graph: CoreGraph,
    weights: EdgeWeights,
}

#[pymethods]
impl Ultragraph {
    /// Parse a document from JSON text.
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        let (graph, weights) = parse_document(text).map_err(err)?;
        Ok(Ultragraph { graph, weights })
    }

    fn vertex_count(&self) -> usize {
        self.graph.named_vertices().len()
    }

    fn edge_count(&self) -> usize {
        self.graph.edge_decls().len()
    }

    /// Range decompositions and the minimal-set catalog, as JSON.
    fn analyze(&self) -> String {
        let verdict = self.graph.check_range_decomposition();
        let catalog: Vec<String> = self
            .graph
            .minimal_set_catalog()
            .iter()
            .map(|a| a.to_string())
            .collect();
        json!({
            "range_decomposition_holds": verdict.holds,
            "minimal_sets": catalog,
            "sinks": self.graph.sink_set().to_string(),
        })
        .to_string()
    }

    /// Solve the state system at inverse temperature `beta` (rational
    /// string), returning values and the solution-set dimension as JSON.
    #[pyo3(signature = (beta, truncate = 8))]
    fn kms_solve(&self, beta: &str, truncate: u64) -> PyResult<String> {
        let beta = doc::parse_rational(beta).map_err(err)?;
        let system = build_constraints(&self.graph, &self.weights, &beta, truncate).map_err(err)?;
        self.render_outcome(system)
    }

    /// Solve the ground-state system.
    #[pyo3(signature = (truncate = 8))]
    fn ground(&self, truncate: u64) -> PyResult<String> {
        let system = build_ground(&self.graph, truncate).map_err(err)?;
        self.render_outcome(system)
    }

    /// Check candidate m-data (JSON) against the compiled conditions.
    #[pyo3(signature = (m_json, beta, tol = "0", truncate = 8))]
    fn kms_verify(&self, m_json: &str, beta: &str, tol: &str, truncate: u64) -> PyResult<String> {
        let mdoc: MFunctionDoc = serde_json::from_str(m_json).map_err(err)?;
        let mf = doc::parse_mfunction(&mdoc).map_err(err)?;
        let beta = doc::parse_rational(beta).map_err(err)?;
        let tol = doc::parse_rational(tol).map_err(err)?;
        let system = build_constraints(&self.graph, &self.weights, &beta, truncate).map_err(err)?;
        let violations = verify_m(&system, &mf, &tol).map_err(err)?;
        Ok(json!({
            "accepted": violations.is_empty(),
            "violations": violations
                .iter()
                .map(|v| json!({
                    "condition": v.kind.to_string(),
                    "context": v.context,
                    "residual": format_rational(&v.residual),
                }))
                .collect::<Vec<_>>(),
        })
        .to_string())
    }

    /// Cycles with simplicity flags and exit witnesses, as JSON.
    #[pyo3(signature = (max_len = 4, truncation = 4))]
    fn cycles(&self, max_len: usize, truncation: u64) -> String {
        let rows: Vec<_> = find_cycles(&self.graph, max_len, truncation)
            .iter()
            .map(|c| {
                json!({
                    "edges": c.path.edges().iter().map(|e| e.to_string()).collect::<Vec<_>>(),
                    "range": c.path.range().to_string(),
                    "simple": c.simple,
                    "exit": has_exit(&self.graph, c.path.edges()).map(|w| w.to_string()),
                })
            })
            .collect();
        json!({ "cycles": rows }).to_string()
    }

    /// Does every cycle have an exit? "holds" | "fails" | "unknown".
    #[pyo3(signature = (max_len = 6, truncation = 6))]
    fn condition_l(&self, max_len: usize, truncation: u64) -> String {
        match check_condition_l(&self.graph, max_len, truncation) {
            ConditionL::Holds => "holds".to_string(),
            ConditionL::Fails { .. } => "fails".to_string(),
            ConditionL::UnknownBeyondBound { .. } => "unknown".to_string(),
        }
    }

    /// Stabilizer report of a point (JSON point document).
    fn stabilizers(&self, point_json: &str) -> PyResult<String> {
        let pd: PointDoc = serde_json::from_str(point_json).map_err(err)?;
        let p = match doc::parse_point(&self.graph, &pd).map_err(err)? {
            ParsedPoint::Point(p) => p,
            ParsedPoint::Ray { .. } => {
                return Err(err("stabilizers are defined for stored points only"))
            }
        };
        let s = stabilizers(&self.graph, &p);
        Ok(json!({
            "stab": s.stab.to_string(),
            "stab_min": s.stab_min,
            "stab_ess": s.stab_ess.to_string(),
            "stab_ess_min": s.stab_ess_min,
        })
        .to_string())
    }

    /// Isolation verdict of a point or family ray (JSON point document).
    fn isolated(&self, point_json: &str) -> PyResult<String> {
        let pd: PointDoc = serde_json::from_str(point_json).map_err(err)?;
        let iso = match doc::parse_point(&self.graph, &pd).map_err(err)? {
            ParsedPoint::Point(p) => classify_isolated(&self.graph, &p),
            ParsedPoint::Ray {
                prefix,
                family,
                start,
            } => classify_isolated_ray(&self.graph, &prefix, &family, start).map_err(err)?,
        };
        Ok(json!({
            "isolated": iso.isolated,
            "reason": format!("{:?}", iso.reason),
        })
        .to_string())
    }
}

impl Ultragraph {
    fn render_outcome(&self, system: ushift_core::kms::ConstraintSystem) -> PyResult<String> {
        match solve_system(&system).map_err(err)? {
            KmsOutcome::Feasible(sol) => {
                let mut values = serde_json::Map::new();
                for (i, kind) in sol.vars.vars.iter().enumerate() {
                    values.insert(
                        kind.to_string(),
                        json!({
                            "exact": format_rational(&sol.assignment[i]),
                            "approx": rational_approx(&sol.assignment[i]),
                            "pinned": sol.pinned[i],
                        }),
                    );
                }
                Ok(json!({
                    "feasible": true,
                    "dimension": sol.dimension,
                    "truncation": sol.vars.truncation,
                    "values": values,
                })
                .to_string())
            }
            KmsOutcome::Infeasible { witness } => Ok(json!({
                "feasible": false,
                "witness": witness,
            })
            .to_string()),
        }
    }
}

#[pymodule]
fn ushift_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Ultragraph>()?;
    Ok(())
}
