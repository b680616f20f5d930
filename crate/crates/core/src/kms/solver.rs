//! Exact rational linear feasibility: Gaussian elimination on the
//! equalities followed by Fourier-Motzkin elimination on the remaining
//! inequalities. Systems here are tiny, so determinism and exactness win
//! over asymptotics.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

pub type Q = BigRational;

/// A linear expression `Σ c_i · x_i + constant`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LinExpr {
    pub coeffs: BTreeMap<usize, Q>,
    pub constant: Q,
}

impl LinExpr {
    pub fn constant(q: Q) -> Self {
        LinExpr {
            coeffs: BTreeMap::new(),
            constant: q,
        }
    }

    pub fn var(i: usize) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(i, Q::from_integer(1.into()));
        LinExpr {
            coeffs,
            constant: Q::zero(),
        }
    }

    pub fn add_term(&mut self, i: usize, c: &Q) {
        let entry = self.coeffs.entry(i).or_insert_with(Q::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&i);
        }
    }

    pub fn add(&mut self, other: &LinExpr) {
        for (i, c) in &other.coeffs {
            self.add_term(*i, c);
        }
        self.constant += &other.constant;
    }

    pub fn sub(&mut self, other: &LinExpr) {
        for (i, c) in &other.coeffs {
            self.add_term(*i, &(-c.clone()));
        }
        self.constant -= &other.constant;
    }

    pub fn scale(&mut self, q: &Q) {
        if q.is_zero() {
            self.coeffs.clear();
            self.constant = Q::zero();
            return;
        }
        for c in self.coeffs.values_mut() {
            *c *= q;
        }
        self.constant *= q;
    }

    pub fn scaled(&self, q: &Q) -> LinExpr {
        let mut e = self.clone();
        e.scale(q);
        e
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, assignment: &[Q]) -> Q {
        let mut v = self.constant.clone();
        for (i, c) in &self.coeffs {
            v += c * &assignment[*i];
        }
        v
    }
}

/// Constraint `expr = 0` or `expr <= 0` (strict: `expr < 0`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rel {
    Eq,
    Le,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub expr: LinExpr,
    pub rel: Rel,
    pub strict: bool,
    pub tag: String,
}

impl Constraint {
    pub fn eq(expr: LinExpr, tag: impl Into<String>) -> Self {
        Constraint {
            expr,
            rel: Rel::Eq,
            strict: false,
            tag: tag.into(),
        }
    }

    pub fn le(expr: LinExpr, tag: impl Into<String>) -> Self {
        Constraint {
            expr,
            rel: Rel::Le,
            strict: false,
            tag: tag.into(),
        }
    }
}

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("system too large: {vars} variables after elimination (limit {limit})")]
    SizeLimit { vars: usize, limit: usize },
    #[error("inequality blow-up: {rows} rows (limit {limit})")]
    RowLimit { rows: usize, limit: usize },
}

const VAR_LIMIT: usize = 40;
const ROW_LIMIT: usize = 200_000;

#[derive(Clone, Debug)]
pub struct Solution {
    pub assignment: Vec<Q>,
    /// Affine dimension of the whole solution set.
    pub dimension: usize,
    /// Per-variable: does the feasible set pin this variable to a single
    /// value?
    pub pinned: Vec<bool>,
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Infeasible { witness: String },
    Feasible(Solution),
}

/// One inequality over the free variables: `expr <= 0` or `< 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Ineq {
    expr: LinExpr,
    strict: bool,
}

impl Ineq {
    fn normalize(mut self) -> Self {
        if let Some((_, c)) = self.expr.coeffs.iter().next() {
            let scale = c.abs().recip();
            self.expr.scale(&scale);
        }
        self
    }
}

/// Equalities in solved form: pivot variable -> expression over free
/// variables (pivot = expr).
#[derive(Clone, Debug, Default)]
struct Echelon {
    solved: BTreeMap<usize, LinExpr>,
}

impl Echelon {
    /// Substitute the solved variables into an expression.
    fn reduce(&self, e: &LinExpr) -> LinExpr {
        let mut out = LinExpr::constant(e.constant.clone());
        for (i, c) in &e.coeffs {
            match self.solved.get(i) {
                Some(rhs) => out.add(&rhs.scaled(c)),
                None => out.add_term(*i, c),
            }
        }
        out
    }
}

/// Gaussian elimination; returns `Err(tag)` of a contradictory equality.
fn gauss(equalities: &[Constraint]) -> Result<Echelon, String> {
    let mut ech = Echelon::default();
    for c in equalities {
        let reduced = ech.reduce(&c.expr);
        match reduced.coeffs.iter().next() {
            None => {
                if !reduced.constant.is_zero() {
                    return Err(c.tag.clone());
                }
            }
            Some((&pivot, coeff)) => {
                // pivot = -(rest)/coeff
                let mut rhs = reduced.clone();
                rhs.coeffs.remove(&pivot);
                rhs.scale(&(-coeff.clone().recip()));
                // Substitute into previously solved rows.
                let mut updated = BTreeMap::new();
                for (v, e) in &ech.solved {
                    let mut e2 = LinExpr::constant(e.constant.clone());
                    for (i, cc) in &e.coeffs {
                        if *i == pivot {
                            let t = rhs.scaled(cc);
                            e2.add(&t);
                        } else {
                            e2.add_term(*i, cc);
                        }
                    }
                    updated.insert(*v, e2);
                }
                ech.solved = updated;
                ech.solved.insert(pivot, rhs);
            }
        }
    }
    Ok(ech)
}

fn dedup(ineqs: Vec<Ineq>) -> Vec<Ineq> {
    let mut best: BTreeMap<Vec<(usize, Q)>, (Q, bool)> = BTreeMap::new();
    let mut order: Vec<Vec<(usize, Q)>> = Vec::new();
    for q in ineqs {
        let q = q.normalize();
        let key: Vec<(usize, Q)> = q.expr.coeffs.iter().map(|(i, c)| (*i, c.clone())).collect();
        if key.is_empty() {
            // Constant row; keep it only if it can ever fail.
            if q.expr.constant.is_positive() || (q.strict && q.expr.constant.is_zero()) {
                // Represent an always-false row with an empty key marker.
                return vec![q];
            }
            continue;
        }
        match best.get_mut(&key) {
            None => {
                best.insert(key.clone(), (q.expr.constant.clone(), q.strict));
                order.push(key);
            }
            Some((c, s)) => {
                // expr + c <= 0 is tighter for larger c.
                if q.expr.constant > *c || (q.expr.constant == *c && q.strict && !*s) {
                    *c = q.expr.constant.clone();
                    *s = q.strict;
                }
            }
        }
    }
    order
        .into_iter()
        .map(|key| {
            let (c, s) = best[&key].clone();
            let mut e = LinExpr::constant(c);
            for (i, q) in &key {
                e.add_term(*i, q);
            }
            Ineq { expr: e, strict: s }
        })
        .collect()
}

/// Eliminate one variable by combining lower and upper bounds.
fn eliminate(ineqs: Vec<Ineq>, var: usize) -> Result<Vec<Ineq>, SolverError> {
    let mut lowers = Vec::new();
    let mut uppers = Vec::new();
    let mut rest = Vec::new();
    for q in ineqs {
        match q.expr.coeffs.get(&var) {
            None => rest.push(q),
            Some(c) if c.is_positive() => uppers.push(q),
            Some(_) => lowers.push(q),
        }
    }
    for lo in &lowers {
        for up in &uppers {
            let a = lo.expr.coeffs[&var].clone(); // negative
            let b = up.expr.coeffs[&var].clone(); // positive
            // b·lo − a·up removes the variable with positive multipliers.
            let mut e = lo.expr.scaled(&b);
            let t = up.expr.scaled(&(-a));
            e.add(&t);
            e.coeffs.remove(&var);
            rest.push(Ineq {
                expr: e,
                strict: lo.strict || up.strict,
            });
        }
    }
    if rest.len() > ROW_LIMIT {
        return Err(SolverError::RowLimit {
            rows: rest.len(),
            limit: ROW_LIMIT,
        });
    }
    Ok(dedup(rest))
}

/// Feasibility of a set of inequalities over the given free variables.
fn feasible(mut ineqs: Vec<Ineq>, free: &[usize]) -> Result<bool, SolverError> {
    ineqs = dedup(ineqs);
    for &v in free {
        ineqs = eliminate(ineqs, v)?;
    }
    for q in &ineqs {
        debug_assert!(q.expr.is_constant());
        if q.expr.constant.is_positive() || (q.strict && q.expr.constant.is_zero()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Bounds of a single variable over the polyhedron of the inequalities.
fn bounds_of(
    ineqs: &[Ineq],
    free: &[usize],
    var: usize,
) -> Result<(Option<Q>, Option<Q>), SolverError> {
    let mut sys = ineqs.to_vec();
    for &v in free {
        if v != var {
            sys = eliminate(sys, v)?;
        }
    }
    let mut lo: Option<Q> = None;
    let mut hi: Option<Q> = None;
    for q in &sys {
        match q.expr.coeffs.get(&var) {
            None => continue,
            Some(c) if c.is_positive() => {
                // c·x + k <= 0  =>  x <= -k/c
                let b = -q.expr.constant.clone() / c;
                hi = Some(match hi {
                    None => b,
                    Some(h) => h.min(b),
                });
            }
            Some(c) => {
                let b = -q.expr.constant.clone() / c;
                lo = Some(match lo {
                    None => b,
                    Some(l) => l.max(b),
                });
            }
        }
    }
    Ok((lo, hi))
}

/// Minimum of a linear expression over the polyhedron of the inequalities
/// (in the free variables), via an auxiliary variable. `None` when
/// unbounded below.
fn minimize(
    ineqs: &[Ineq],
    free: &[usize],
    expr: &LinExpr,
    aux: usize,
) -> Result<Option<Q>, SolverError> {
    if expr.is_constant() {
        return Ok(Some(expr.constant.clone()));
    }
    let mut sys = ineqs.to_vec();
    // aux = expr, encoded as two inequalities.
    let mut up = expr.clone();
    up.add_term(aux, &-Q::from_integer(1.into()));
    let mut lo = up.clone();
    lo.scale(&-Q::from_integer(1.into()));
    sys.push(Ineq { expr: up, strict: false });
    sys.push(Ineq { expr: lo, strict: false });
    let (low, _) = bounds_of(&sys, free, aux)?;
    Ok(low)
}

/// Solve the system: feasibility, the lexicographically minimal point in
/// variable order, the affine dimension, and per-variable pinnedness.
pub fn solve(n_vars: usize, constraints: &[Constraint]) -> Result<Outcome, SolverError> {
    let equalities: Vec<Constraint> = constraints
        .iter()
        .filter(|c| c.rel == Rel::Eq)
        .cloned()
        .collect();
    let ech = match gauss(&equalities) {
        Ok(e) => e,
        Err(tag) => {
            return Ok(Outcome::Infeasible {
                witness: format!("contradictory equality: {tag}"),
            })
        }
    };
    let free: Vec<usize> = (0..n_vars).filter(|v| !ech.solved.contains_key(v)).collect();
    if free.len() > VAR_LIMIT {
        return Err(SolverError::SizeLimit {
            vars: free.len(),
            limit: VAR_LIMIT,
        });
    }
    let mut ineqs: Vec<Ineq> = Vec::new();
    for c in constraints {
        if c.rel == Rel::Le {
            ineqs.push(Ineq {
                expr: ech.reduce(&c.expr),
                strict: c.strict,
            });
        }
    }
    ineqs = dedup(ineqs);
    if !feasible(ineqs.clone(), &free)? {
        let witness = first_infeasibility_witness(constraints, &ech, &free)?;
        return Ok(Outcome::Infeasible { witness });
    }
    let aux = n_vars;

    // Affine dimension and pinnedness, measured on the full solution set
    // before any lexicographic choice: explicit equalities plus implicit
    // ones (inequalities that cannot be strict anywhere on the set).
    let mut eq_rows: Vec<LinExpr> = Vec::new();
    for c in &equalities {
        eq_rows.push(c.expr.clone());
    }
    for q in &ineqs {
        if q.expr.is_constant() {
            continue;
        }
        let mut strict_sys = ineqs.clone();
        strict_sys.push(Ineq {
            expr: q.expr.clone(),
            strict: true,
        });
        if !feasible(strict_sys, &free)? {
            eq_rows.push(q.expr.clone());
        }
    }
    let rank = rank_of(&eq_rows, n_vars);
    let dimension = n_vars - rank;

    let mut pinned = vec![false; n_vars];
    for v in 0..n_vars {
        let expr = ech.reduce(&LinExpr::var(v));
        if expr.is_constant() {
            pinned[v] = true;
            continue;
        }
        let lo = minimize(&ineqs, &free, &expr, aux)?;
        let neg = expr.scaled(&-Q::from_integer(1.into()));
        let hi = minimize(&ineqs, &free, &neg, aux)?.map(|q| -q);
        if let (Some(lo), Some(hi)) = (lo, hi) {
            if lo == hi {
                pinned[v] = true;
            }
        }
    }

    // Lexicographically minimal point in original variable order: fix each
    // variable at its minimum given the previous choices.
    let mut work = ineqs.clone();
    let mut wech = ech.clone();
    let mut wfree = free.clone();
    let mut assignment = vec![Q::zero(); n_vars];
    for v in 0..n_vars {
        let expr = wech.reduce(&LinExpr::var(v));
        let val = if expr.is_constant() {
            expr.constant.clone()
        } else {
            let lo = minimize(&work, &wfree, &expr, aux)?
                .expect("state variables are bounded below");
            // Pin expr = lo by solving for its lowest free variable.
            let (&w, c) = expr.coeffs.iter().next().unwrap();
            let mut rhs = expr.clone();
            rhs.coeffs.remove(&w);
            rhs.constant -= &lo;
            rhs.scale(&(-c.clone().recip()));
            // Substitute w := rhs everywhere.
            work = work
                .into_iter()
                .map(|mut q| {
                    if let Some(cc) = q.expr.coeffs.remove(&w) {
                        q.expr.add(&rhs.scaled(&cc));
                    }
                    q
                })
                .collect();
            work = dedup(work);
            let mut updated = BTreeMap::new();
            for (x, e) in &wech.solved {
                let mut e2 = LinExpr::constant(e.constant.clone());
                for (i, cc) in &e.coeffs {
                    if *i == w {
                        e2.add(&rhs.scaled(cc));
                    } else {
                        e2.add_term(*i, cc);
                    }
                }
                updated.insert(*x, e2);
            }
            wech.solved = updated;
            wech.solved.insert(w, rhs);
            wfree.retain(|&x| x != w);
            lo
        };
        assignment[v] = val;
    }

    Ok(Outcome::Feasible(Solution {
        assignment,
        dimension,
        pinned,
    }))
}

/// Identify one constraint whose removal restores feasibility, for the
/// infeasibility witness. Falls back to a generic message.
fn first_infeasibility_witness(
    constraints: &[Constraint],
    ech: &Echelon,
    free: &[usize],
) -> Result<String, SolverError> {
    for skip in 0..constraints.len() {
        if constraints[skip].rel != Rel::Le {
            continue;
        }
        let ineqs: Vec<Ineq> = constraints
            .iter()
            .enumerate()
            .filter(|(i, c)| *i != skip && c.rel == Rel::Le)
            .map(|(_, c)| Ineq {
                expr: ech.reduce(&c.expr),
                strict: c.strict,
            })
            .collect();
        if feasible(ineqs, free)? {
            return Ok(format!("inconsistent with: {}", constraints[skip].tag));
        }
    }
    Ok("inconsistent equality system".to_string())
}

fn rank_of(rows: &[LinExpr], n_vars: usize) -> usize {
    let mut mat: Vec<Vec<Q>> = rows
        .iter()
        .map(|e| {
            let mut row = vec![Q::zero(); n_vars];
            for (i, c) in &e.coeffs {
                row[*i] = c.clone();
            }
            row
        })
        .collect();
    let mut rank = 0;
    for col in 0..n_vars {
        let pivot = (rank..mat.len()).find(|&r| !mat[r][col].is_zero());
        if let Some(p) = pivot {
            mat.swap(rank, p);
            let inv = mat[rank][col].clone().recip();
            for c in col..n_vars {
                let v = mat[rank][c].clone() * &inv;
                mat[rank][c] = v;
            }
            for r in 0..mat.len() {
                if r != rank && !mat[r][col].is_zero() {
                    let f = mat[r][col].clone();
                    for c in col..n_vars {
                        let v = mat[r][c].clone() - &f * &mat[rank][c];
                        mat[r][c] = v;
                    }
                }
            }
            rank += 1;
        }
    }
    rank
}
