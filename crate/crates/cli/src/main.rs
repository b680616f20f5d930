//! Command-line surface: validation, decomposition analyses, cylinder
//! arithmetic, shift dynamics, and the temperature-state solvers.
//!
//! Exit codes: 0 success/feasible/holds, 1 negative verdict, 2 usage or
//! parse error, 3 verdict unknown within the given bounds. Reports are
//! deterministic: identical inputs and flags give byte-identical output.

mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use report::{number, Format, Report};
use ushift_core::boundary::{
    basis_intersect, decompose_to_semiring, semiring_diff, Cylinder,
};
use ushift_core::doc::{
    self, parse_document, CylinderDoc, MFunctionDoc, OrbitMapDoc, ParsedPoint, PointDoc,
    SetExprDoc,
};
use ushift_core::dynamics::{
    check_condition_l, check_orbit_equivalence, classify_isolated, classify_isolated_ray,
    find_cycles, has_exit, stabilizers, CheckOutcome, ConditionL, OrbitCheckConfig,
};
use ushift_core::kms::{
    build_constraints, build_ground, solve_system, verify_m, EdgeWeights, KmsOutcome,
};
use ushift_core::ultragraph::Ultragraph;

#[derive(Parser)]
#[command(name = "ushift", version, about = "Ultragraph shift space analyses")]
struct Cli {
    #[command(subcommand)]
    command: Commands,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Seed for sampled checks (reserved; current checks are exhaustive
    /// and deterministic).
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Text => Format::Text,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Args)]
struct GraphArg {
    /// Ultragraph document (JSON).
    graph: PathBuf,
}

#[derive(Subcommand)]
enum Commands {
    /// Parse and validate a document; print a summary.
    Validate(GraphArg),
    /// Range decompositions, minimal sets, and sink structure.
    Analyze(GraphArg),
    /// Decompose a generalized vertex into minimal parts.
    Decompose {
        #[command(flatten)]
        graph: GraphArg,
        /// Set expression (JSON).
        #[arg(long)]
        set: String,
    },
    /// Cylinder arithmetic.
    Cylinders {
        #[command(subcommand)]
        op: CylinderOp,
    },
    /// Shift dynamics analyses.
    Dynamics {
        #[command(subcommand)]
        op: DynamicsOp,
    },
    /// Temperature-state systems.
    Kms {
        #[command(subcommand)]
        op: KmsOp,
    },
    /// Ground-state system (the infinite-temperature degeneration).
    Ground {
        #[command(flatten)]
        graph: GraphArg,
        /// Family head truncation.
        #[arg(long, default_value_t = 8)]
        truncate: u64,
    },
    /// Solve across a grid of inverse temperatures.
    Sweep {
        #[command(flatten)]
        graph: GraphArg,
        /// Comma-separated inverse temperatures (rationals).
        #[arg(long)]
        betas: String,
        #[arg(long, default_value_t = 8)]
        truncate: u64,
    },
    /// Verify the orbit-equivalence identities of a block-map pair.
    OrbitCheck {
        #[command(flatten)]
        graph: GraphArg,
        /// Map file with forward and backward presentations.
        #[arg(long)]
        map: PathBuf,
        /// Target ultragraph document.
        #[arg(long)]
        other: PathBuf,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 8)]
        depth: usize,
        #[arg(long, default_value_t = 8)]
        truncation: u64,
    },
}

#[derive(Subcommand)]
enum CylinderOp {
    /// Intersection of two cylinders.
    Intersect {
        #[command(flatten)]
        graph: GraphArg,
        /// First cylinder (JSON).
        #[arg(long)]
        c1: String,
        /// Second cylinder (JSON).
        #[arg(long)]
        c2: String,
    },
    /// Relative complement c1 \ c2 of semi-ring members with c2 ⊆ c1.
    Diff {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        c1: String,
        #[arg(long)]
        c2: String,
    },
    /// Split a cylinder into disjoint semi-ring members.
    Split {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        c1: String,
    },
}

#[derive(Subcommand)]
enum DynamicsOp {
    /// Enumerate cycles with simplicity flags and exits.
    Cycles {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, default_value_t = 4)]
        max_len: usize,
        #[arg(long, default_value_t = 4)]
        truncation: u64,
    },
    /// Does every cycle have an exit?
    ConditionL {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, default_value_t = 6)]
        max_len: usize,
        #[arg(long, default_value_t = 6)]
        truncation: u64,
    },
    /// Classify a point as isolated or not.
    Isolated {
        #[command(flatten)]
        graph: GraphArg,
        /// Point (JSON).
        #[arg(long)]
        point: String,
    },
    /// Stabilizer report of a point.
    Stab {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        point: String,
    },
}

#[derive(Subcommand)]
enum KmsOp {
    /// Compile and solve the state system at one inverse temperature.
    Solve {
        #[command(flatten)]
        graph: GraphArg,
        /// Inverse temperature (rational, ≥ 0).
        #[arg(long)]
        beta: String,
        #[arg(long, default_value_t = 8)]
        truncate: u64,
    },
    /// Check candidate m-data against every compiled condition.
    Verify {
        #[command(flatten)]
        graph: GraphArg,
        /// m-function data file (JSON).
        #[arg(long)]
        m: PathBuf,
        #[arg(long)]
        beta: String,
        #[arg(long, default_value_t = 8)]
        truncate: u64,
        /// Residual tolerance (rational).
        #[arg(long, default_value = "0")]
        tol: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format: Format = cli.format.into();
    match dispatch(cli.command) {
        Ok(report) => {
            print!("{}", report.render(format));
            ExitCode::from(report.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

fn load_graph(path: &Path, report: &mut Report) -> Result<(Ultragraph, EdgeWeights), AnyError> {
    let bytes = std::fs::read(path)?;
    report.input(&path.display().to_string(), &bytes);
    let text = String::from_utf8(bytes)?;
    Ok(parse_document(&text)?)
}

fn cylinder_pieces(pieces: &[Cylinder]) -> serde_json::Value {
    json!(pieces
        .iter()
        .map(|c| json!({
            "display": c.to_string(),
            "doc": serde_json::to_value(doc::cylinder_to_doc(c)).unwrap(),
        }))
        .collect::<Vec<_>>())
}

fn outcome_json(o: &CheckOutcome) -> serde_json::Value {
    json!({
        "passed": o.passed,
        "checked": o.checked,
        "witness": o.witness,
    })
}

fn dispatch(command: Commands) -> Result<Report, AnyError> {
    match command {
        Commands::Validate(arg) => {
            let mut report = Report::new("validate");
            let (g, weights) = load_graph(&arg.graph, &mut report)?;
            report.verdict = "ok".to_string();
            report.data = json!({
                "vertices": g.named_vertices().len(),
                "vertex_families": g.vertex_families().len(),
                "edges": g.edge_decls().values().filter(|d| !d.indexed).count(),
                "edge_families": g.edge_decls().values().filter(|d| d.indexed).count(),
                "weighted": !weights.by_decl.is_empty(),
            });
            report.line(format!(
                "{} named vertices, {} vertex families, {} edges, {} edge families",
                g.named_vertices().len(),
                g.vertex_families().len(),
                g.edge_decls().values().filter(|d| !d.indexed).count(),
                g.edge_decls().values().filter(|d| d.indexed).count()
            ));
            Ok(report)
        }
        Commands::Analyze(arg) => {
            let mut report = Report::new("analyze");
            let (g, _) = load_graph(&arg.graph, &mut report)?;
            let verdict = g.check_range_decomposition();
            let catalog = g.minimal_set_catalog();
            let mut witnesses = BTreeMap::new();
            for (edge, d) in &verdict.witnesses {
                witnesses.insert(
                    edge.to_string(),
                    json!({
                        "minimal_infinite_emitters": d
                            .minimal_infinite_emitters
                            .iter()
                            .map(|p| p.set().to_string())
                            .collect::<Vec<_>>(),
                        "minimal_sinks": d
                            .minimal_sinks
                            .iter()
                            .map(|p| p.set().to_string())
                            .collect::<Vec<_>>(),
                        "finite_part": d.finite_part.to_string(),
                    }),
                );
            }
            report.data = json!({
                "range_decomposition_holds": verdict.holds,
                "counterexample": verdict
                    .counterexample
                    .as_ref()
                    .map(|(e, r)| json!({"edge": e.to_string(), "residue": r.to_string()})),
                "witnesses": witnesses,
                "minimal_sets": catalog.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
                "sinks": g.sink_set().to_string(),
            });
            if verdict.holds {
                report.verdict = "ranges decompose".to_string();
                for a in &catalog {
                    report.line(format!("minimal set: {a}"));
                }
            } else {
                report.verdict = "range decomposition fails".to_string();
                let (e, r) = verdict.counterexample.unwrap();
                report.line(format!("edge {e} has undecomposable residue {r}"));
                report.exit_code = 1;
            }
            Ok(report)
        }
        Commands::Decompose { graph, set } => {
            let mut report = Report::new("decompose");
            let (g, _) = load_graph(&graph.graph, &mut report)?;
            let expr: SetExprDoc = serde_json::from_str(&set)?;
            let a = doc::eval_set_expr(&expr)?;
            let gv = g.generalized_from_set(&a)?;
            match g.decompose(gv.set()) {
                Ok(d) => {
                    report.verdict = "decomposed".to_string();
                    report.data = json!({
                        "set": gv.set().to_string(),
                        "minimal_infinite_emitters": d
                            .minimal_infinite_emitters
                            .iter()
                            .map(|p| p.set().to_string())
                            .collect::<Vec<_>>(),
                        "minimal_sinks": d
                            .minimal_sinks
                            .iter()
                            .map(|p| p.set().to_string())
                            .collect::<Vec<_>>(),
                        "finite_part": d.finite_part.to_string(),
                    });
                    for p in &d.minimal_infinite_emitters {
                        report.line(format!("minimal infinite emitter: {}", p.set()));
                    }
                    for p in &d.minimal_sinks {
                        report.line(format!("minimal sink: {}", p.set()));
                    }
                    report.line(format!("finite part: {}", d.finite_part));
                }
                Err(e) => {
                    report.verdict = format!("not decomposable: {e}");
                    report.exit_code = 1;
                }
            }
            Ok(report)
        }
        Commands::Cylinders { op } => cylinders(op),
        Commands::Dynamics { op } => dynamics(op),
        Commands::Kms { op } => kms(op),
        Commands::Ground { graph, truncate } => {
            let mut report = Report::new("ground");
            let (g, _) = load_graph(&graph.graph, &mut report)?;
            let system = build_ground(&g, truncate)?;
            solve_into_report(system, &mut report)?;
            Ok(report)
        }
        Commands::Sweep {
            graph,
            betas,
            truncate,
        } => {
            let mut report = Report::new("sweep");
            let (g, weights) = load_graph(&graph.graph, &mut report)?;
            let mut table = Vec::new();
            let mut all_feasible = true;
            for part in betas.split(',').filter(|s| !s.trim().is_empty()) {
                let beta = doc::parse_rational(part)?;
                let system = build_constraints(&g, &weights, &beta, truncate)?;
                match solve_system(&system)? {
                    KmsOutcome::Feasible(sol) => {
                        report.line(format!(
                            "beta = {part}: feasible, dimension {}",
                            sol.dimension
                        ));
                        table.push(json!({
                            "beta": part.trim(),
                            "feasible": true,
                            "dimension": sol.dimension,
                        }));
                    }
                    KmsOutcome::Infeasible { witness } => {
                        all_feasible = false;
                        report.line(format!("beta = {part}: infeasible ({witness})"));
                        table.push(json!({
                            "beta": part.trim(),
                            "feasible": false,
                            "witness": witness,
                        }));
                    }
                }
            }
            report.verdict = if all_feasible {
                "all feasible".to_string()
            } else {
                "some infeasible".to_string()
            };
            report.exit_code = if all_feasible { 0 } else { 1 };
            report.data = json!({ "table": table });
            Ok(report)
        }
        Commands::OrbitCheck {
            graph,
            map,
            other,
            samples,
            depth,
            truncation,
        } => {
            let mut report = Report::new("orbit-check");
            let (g1, _) = load_graph(&graph.graph, &mut report)?;
            let (g2, _) = load_graph(&other, &mut report)?;
            let bytes = std::fs::read(&map)?;
            report.input(&map.display().to_string(), &bytes);
            let map_doc: OrbitMapDoc = serde_json::from_slice(&bytes)?;
            let forward = doc::parse_block_map(&map_doc.forward)?;
            let backward = doc::parse_block_map(&map_doc.backward)?;
            let cfg = OrbitCheckConfig {
                samples,
                depth,
                truncation,
                ..OrbitCheckConfig::default()
            };
            let r = check_orbit_equivalence(&g1, &g2, &forward, &backward, &cfg)?;
            report.data = json!({
                "coe_forward": outcome_json(&r.coe_forward),
                "coe_backward": outcome_json(&r.coe_backward),
                "stab_preservation": outcome_json(&r.stab_preservation),
                "eq1": outcome_json(&r.eq1),
                "eq2": outcome_json(&r.eq2),
                "isolated_preservation": outcome_json(&r.isolated_preservation),
                "eventual_conjugacy": r.eventual_conjugacy,
            });
            for (name, o) in [
                ("identity forward", &r.coe_forward),
                ("identity backward", &r.coe_backward),
                ("stabilizer preservation", &r.stab_preservation),
                ("lag-sum forward", &r.eq1),
                ("lag-sum backward", &r.eq2),
                ("isolated preservation", &r.isolated_preservation),
            ] {
                match &o.witness {
                    None => report.line(format!("{name}: pass ({} checked)", o.checked)),
                    Some(w) => report.line(format!("{name}: FAIL ({w})")),
                }
            }
            report.line(format!("eventual conjugacy: {}", r.eventual_conjugacy));
            if r.all_passed() {
                report.verdict = "orbit equivalence verified on samples".to_string();
            } else {
                report.verdict = "orbit equivalence fails".to_string();
                report.exit_code = 1;
            }
            Ok(report)
        }
    }
}

fn cylinders(op: CylinderOp) -> Result<Report, AnyError> {
    match op {
        CylinderOp::Intersect { graph, c1, c2 } => {
            let mut report = Report::new("cylinders intersect");
            let (g, _) = load_graph(&graph.graph, &mut report)?;
            let d1: CylinderDoc = serde_json::from_str(&c1)?;
            let d2: CylinderDoc = serde_json::from_str(&c2)?;
            let a = doc::parse_cylinder(&g, &d1)?;
            let b = doc::parse_cylinder(&g, &d2)?;
            let meet = basis_intersect(&g, &a, &b)?;
            report.verdict = if meet.is_empty() {
                "empty intersection".to_string()
            } else {
                "intersected".to_string()
            };
            for c in &meet {
                report.line(format!("{c}"));
            }
            report.data = json!({ "pieces": cylinder_pieces(&meet) });
            Ok(report)
        }
        CylinderOp::Diff { graph, c1, c2 } => {
            let mut report = Report::new("cylinders diff");
            let (g, _) = load_graph(&graph.graph, &mut report)?;
            let d1: CylinderDoc = serde_json::from_str(&c1)?;
            let d2: CylinderDoc = serde_json::from_str(&c2)?;
            let a = doc::parse_cylinder(&g, &d1)?;
            let b = doc::parse_cylinder(&g, &d2)?;
            let pieces = semiring_diff(&g, &a, &b)?;
            report.verdict = format!("{} pieces", pieces.len());
            for c in &pieces {
                report.line(format!("{c}"));
            }
            report.data = json!({ "pieces": cylinder_pieces(&pieces) });
            Ok(report)
        }
        CylinderOp::Split { graph, c1 } => {
            let mut report = Report::new("cylinders split");
            let (g, _) = load_graph(&graph.graph, &mut report)?;
            let d1: CylinderDoc = serde_json::from_str(&c1)?;
            let a = doc::parse_cylinder(&g, &d1)?;
            let pieces = decompose_to_semiring(&g, &a)?;
            report.verdict = format!("{} pieces", pieces.len());
            for c in &pieces {
                report.line(format!("{c}"));
            }
            report.data = json!({ "pieces": cylinder_pieces(&pieces) });
            Ok(report)
        }
    }
}

fn dynamics(op: DynamicsOp) -> Result<Report, AnyError> {
    match op {
        DynamicsOp::Cycles {
            graph,
            max_len,
            truncation,
        } => {
            let mut report = Report::new("dynamics cycles");
            let (g, _) = load_graph(&graph.graph, &mut report)?;
            let cycles = find_cycles(&g, max_len, truncation);
            let mut rows = Vec::new();
            for c in &cycles {
                let exit = has_exit(&g, c.path.edges());
                report.line(format!(
                    "{c}{}",
                    match &exit {
                        Some(w) => format!(" exit: {w}"),
                        None => " exitless".to_string(),
                    }
                ));
                rows.push(json!({
                    "edges": c.path.edges().iter().map(|e| e.to_string()).collect::<Vec<_>>(),
                    "range": c.path.range().to_string(),
                    "simple": c.simple,
                    "exit": exit.map(|w| w.to_string()),
                }));
            }
            report.verdict = format!("{} cycles", cycles.len());
            report.data = json!({ "cycles": rows, "max_len": max_len, "truncation": truncation });
            Ok(report)
        }
        DynamicsOp::ConditionL {
            graph,
            max_len,
            truncation,
        } => {
            let mut report = Report::new("dynamics condition-l");
            let (g, _) = load_graph(&graph.graph, &mut report)?;
            match check_condition_l(&g, max_len, truncation) {
                ConditionL::Holds => {
                    report.verdict = "holds".to_string();
                    report.data = json!({"holds": true});
                }
                ConditionL::Fails { cycle } => {
                    report.verdict = "fails".to_string();
                    report.exit_code = 1;
                    let edges: Vec<String> = cycle.iter().map(|e| e.to_string()).collect();
                    report.line(format!("exitless cycle: {}", edges.join(" ")));
                    report.data = json!({"holds": false, "exitless_cycle": edges});
                }
                ConditionL::UnknownBeyondBound { max_len, truncation } => {
                    report.verdict = "unknown within bounds".to_string();
                    report.exit_code = 3;
                    report.data = json!({
                        "holds": serde_json::Value::Null,
                        "max_len": max_len,
                        "truncation": truncation,
                    });
                }
            }
            Ok(report)
        }
        DynamicsOp::Isolated { graph, point } => {
            let mut report = Report::new("dynamics isolated");
            let (g, _) = load_graph(&graph.graph, &mut report)?;
            let pd: PointDoc = serde_json::from_str(&point)?;
            let iso = match doc::parse_point(&g, &pd)? {
                ParsedPoint::Point(p) => classify_isolated(&g, &p),
                ParsedPoint::Ray {
                    prefix,
                    family,
                    start,
                } => classify_isolated_ray(&g, &prefix, &family, start)?,
            };
            report.verdict = if iso.isolated {
                "isolated".to_string()
            } else {
                "not isolated".to_string()
            };
            report.line(format!("reason: {:?}", iso.reason));
            report.data = json!({
                "isolated": iso.isolated,
                "reason": format!("{:?}", iso.reason),
            });
            report.exit_code = if iso.isolated { 0 } else { 1 };
            Ok(report)
        }
        DynamicsOp::Stab { graph, point } => {
            let mut report = Report::new("dynamics stab");
            let (g, _) = load_graph(&graph.graph, &mut report)?;
            let pd: PointDoc = serde_json::from_str(&point)?;
            let p = match doc::parse_point(&g, &pd)? {
                ParsedPoint::Point(p) => p,
                ParsedPoint::Ray { .. } => {
                    return Err("stabilizers are defined for stored points only".into())
                }
            };
            let s = stabilizers(&g, &p);
            report.verdict = format!("stab = {}", s.stab);
            report.line(format!(
                "stab {} min {} ess {} ess_min {}",
                s.stab,
                s.stab_min.map(|v| v.to_string()).unwrap_or("inf".into()),
                s.stab_ess,
                s.stab_ess_min.map(|v| v.to_string()).unwrap_or("inf".into()),
            ));
            report.data = json!({
                "stab": s.stab.to_string(),
                "stab_min": s.stab_min,
                "stab_ess": s.stab_ess.to_string(),
                "stab_ess_min": s.stab_ess_min,
            });
            Ok(report)
        }
    }
}

fn solve_into_report(
    system: ushift_core::kms::ConstraintSystem,
    report: &mut Report,
) -> Result<(), AnyError> {
    for w in &system.warnings {
        report.line(format!("warning: {w}"));
    }
    match solve_system(&system)? {
        KmsOutcome::Feasible(sol) => {
            report.verdict = format!("feasible, dimension {}", sol.dimension);
            let mut values = serde_json::Map::new();
            for (i, kind) in sol.vars.vars.iter().enumerate() {
                let v = &sol.assignment[i];
                report.line(format!(
                    "{kind} = {}{}",
                    ushift_core::doc::format_rational(v),
                    if sol.pinned[i] { " (pinned)" } else { "" }
                ));
                values.insert(
                    kind.to_string(),
                    json!({
                        "value": number(v),
                        "pinned": sol.pinned[i],
                    }),
                );
            }
            // Point mass per minimal set: the slack of its supremum
            // inequality, i.e. m(A) minus the edge and sink series.
            let mut gaps = serde_json::Map::new();
            for c in &system.constraints {
                if c.kind == ushift_core::kms::ConstraintKind::M3 {
                    let slack = -c.expr.eval(&sol.assignment);
                    gaps.insert(format!("m({})", c.context), number(&slack));
                }
            }
            report.data = json!({
                "feasible": true,
                "dimension": sol.dimension,
                "truncation": sol.vars.truncation,
                "values": values,
                "point_mass": gaps,
                "exact": system.exact,
                "m1_attained": system.m1_attained,
                "warnings": system.warnings.iter().map(|w| w.to_string()).collect::<Vec<_>>(),
            });
        }
        KmsOutcome::Infeasible { witness } => {
            report.verdict = "infeasible".to_string();
            report.exit_code = 1;
            report.line(format!("witness: {witness}"));
            report.data = json!({"feasible": false, "witness": witness});
        }
    }
    Ok(())
}

fn kms(op: KmsOp) -> Result<Report, AnyError> {
    match op {
        KmsOp::Solve {
            graph,
            beta,
            truncate,
        } => {
            let mut report = Report::new("kms solve");
            let (g, weights) = load_graph(&graph.graph, &mut report)?;
            let beta = doc::parse_rational(&beta)?;
            let system = build_constraints(&g, &weights, &beta, truncate)?;
            solve_into_report(system, &mut report)?;
            Ok(report)
        }
        KmsOp::Verify {
            graph,
            m,
            beta,
            truncate,
            tol,
        } => {
            let mut report = Report::new("kms verify");
            let (g, weights) = load_graph(&graph.graph, &mut report)?;
            let bytes = std::fs::read(&m)?;
            report.input(&m.display().to_string(), &bytes);
            let mdoc: MFunctionDoc = serde_json::from_slice(&bytes)?;
            let mf = doc::parse_mfunction(&mdoc)?;
            let beta = doc::parse_rational(&beta)?;
            let tol = doc::parse_rational(&tol)?;
            let system = build_constraints(&g, &weights, &beta, truncate)?;
            let violations = verify_m(&system, &mf, &tol)?;
            if violations.is_empty() {
                report.verdict = "accepted".to_string();
            } else {
                report.verdict = format!("{} violations", violations.len());
                report.exit_code = 1;
            }
            let mut rows = Vec::new();
            for v in &violations {
                report.line(format!("{v}"));
                rows.push(json!({
                    "condition": v.kind.to_string(),
                    "context": v.context,
                    "residual": number(&v.residual),
                }));
            }
            report.data = json!({
                "violations": rows,
                "truncation": system.vars.truncation,
            });
            Ok(report)
        }
    }
}
