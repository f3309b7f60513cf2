//! Temporal reasoning shared by the validator, the compiler and the
//! oracle: difference-constraint closure over `<`, `<=`, `=` and
//! exhaustive grid search for the sequencing check.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::syntax::{Condition, GroundAtom, Substitution, TemporalConstraint, TimeExpr};

/// Grid-size bound for exhaustive sequencing search.
pub const DEFAULT_GRID_LIMIT: u64 = 4_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemporalError {
    #[error("sequencing grid of size {0} exceeds the configured bound")]
    BudgetExceeded(u64),
    #[error("variable {0} must be a time variable or already ground")]
    NonGround(String),
}

const INF: i64 = i64::MAX / 4;

/// All-pairs closure of a difference-constraint system. Node 0 is the
/// origin (value 0); constants are offsets from it. `max/3` contributes
/// only its two lower bounds, which under-approximates entailment.
pub struct DifferenceClosure {
    vars: Vec<String>,
    dist: Vec<Vec<i64>>,
}

impl DifferenceClosure {
    pub fn new<'a>(constraints: impl IntoIterator<Item = &'a TemporalConstraint>) -> Self {
        let constraints: Vec<&TemporalConstraint> = constraints.into_iter().collect();
        let mut vars: Vec<String> = Vec::new();
        for c in &constraints {
            for v in c.vars() {
                if !vars.contains(&v) {
                    vars.push(v);
                }
            }
        }
        let n = vars.len() + 1;
        let mut dist = vec![vec![INF; n]; n];
        for (i, row) in dist.iter_mut().enumerate() {
            row[i] = 0;
        }
        let idx = |vars: &[String], e: &TimeExpr| -> (usize, i64) {
            let (base, off) = e.parts();
            match base {
                None => (0, off),
                Some(v) => (vars.iter().position(|x| x == v).unwrap() + 1, off),
            }
        };
        // a + ka <= b + kb  ~~>  a - b <= kb - ka
        let add_le = |dist: &mut Vec<Vec<i64>>, a: (usize, i64), b: (usize, i64), strict: bool| {
            let bound = b.1 - a.1 - if strict { 1 } else { 0 };
            if bound < dist[a.0][b.0] {
                dist[a.0][b.0] = bound;
            }
        };
        for c in &constraints {
            match c {
                TemporalConstraint::Lt(a, b) => {
                    add_le(&mut dist, idx(&vars, a), idx(&vars, b), true)
                }
                TemporalConstraint::Le(a, b) => {
                    add_le(&mut dist, idx(&vars, a), idx(&vars, b), false)
                }
                TemporalConstraint::Eq(a, b) => {
                    add_le(&mut dist, idx(&vars, a), idx(&vars, b), false);
                    add_le(&mut dist, idx(&vars, b), idx(&vars, a), false);
                }
                TemporalConstraint::Max3(a, b, m) => {
                    add_le(&mut dist, idx(&vars, a), idx(&vars, m), false);
                    add_le(&mut dist, idx(&vars, b), idx(&vars, m), false);
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                if dist[i][k] == INF {
                    continue;
                }
                for j in 0..n {
                    if dist[k][j] == INF {
                        continue;
                    }
                    let via = dist[i][k] + dist[k][j];
                    if via < dist[i][j] {
                        dist[i][j] = via;
                    }
                }
            }
        }
        DifferenceClosure { vars, dist }
    }

    pub fn unsatisfiable(&self) -> bool {
        (0..self.dist.len()).any(|i| self.dist[i][i] < 0)
    }

    fn node(&self, e: &TimeExpr) -> Option<(usize, i64)> {
        let (base, off) = e.parts();
        match base {
            None => Some((0, off)),
            Some(v) => self
                .vars
                .iter()
                .position(|x| x == v)
                .map(|i| (i + 1, off)),
        }
    }

    /// Whether `a <= b` is entailed. Expressions whose variables never
    /// appeared in the constraints are unconstrained, hence not entailed,
    /// unless the two expressions share a base.
    pub fn entails_le(&self, a: &TimeExpr, b: &TimeExpr) -> bool {
        if a.var_name() == b.var_name() {
            let (_, ka) = a.parts();
            let (_, kb) = b.parts();
            return ka <= kb;
        }
        match (self.node(a), self.node(b)) {
            (Some((ia, ka)), Some((ib, kb))) => self.dist[ia][ib] <= kb - ka,
            _ => false,
        }
    }

    pub fn entails_lt(&self, a: &TimeExpr, b: &TimeExpr) -> bool {
        if a.var_name() == b.var_name() {
            let (_, ka) = a.parts();
            let (_, kb) = b.parts();
            return ka < kb;
        }
        match (self.node(a), self.node(b)) {
            (Some((ia, ka)), Some((ib, kb))) => self.dist[ia][ib] < kb - ka,
            _ => false,
        }
    }
}

/// Collects the free time variables of a condition list, in first
/// occurrence order, skipping variables already bound in `theta`.
pub fn free_time_vars(conds: &[Condition], theta: &Substitution) -> Vec<String> {
    let mut out = Vec::new();
    for c in conds {
        for v in c.time_vars() {
            if !theta.contains(&v) && !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out
}

fn check_ground_nontime(conds: &[Condition]) -> Result<(), TemporalError> {
    for c in conds {
        if let Some(v) = c.nontime_vars().into_iter().next() {
            return Err(TemporalError::NonGround(v));
        }
    }
    Ok(())
}

/// Timestamps of the non-constraint conditions under a substitution.
fn condition_times(conds: &[Condition], theta: &Substitution) -> Option<Vec<i64>> {
    let mut out = Vec::new();
    for c in conds {
        if let Some(te) = c.time() {
            out.push(te.value(theta)?);
        }
    }
    Some(out)
}

/// Exhaustive check of the sequencing `earlier < later`: is there a
/// ground assignment of all time variables over `[0, n]` making every
/// temporal constraint true and every condition timestamp in `earlier`
/// strictly smaller than every condition timestamp in `later`? Returns
/// the first witness found (variables enumerated in first-occurrence
/// order, values ascending).
///
/// `aux` is accepted for parity with the definition; temporal auxiliary
/// predicates other than the builtin comparisons and `max/3` are not
/// supported, so the set itself is not consulted.
pub fn respects_sequencing(
    earlier: &[Condition],
    later: &[Condition],
    aux: &BTreeSet<GroundAtom>,
    n: u32,
) -> Result<Option<Substitution>, TemporalError> {
    respects_sequencing_with_limit(earlier, later, aux, n, DEFAULT_GRID_LIMIT)
}

pub fn respects_sequencing_with_limit(
    earlier: &[Condition],
    later: &[Condition],
    _aux: &BTreeSet<GroundAtom>,
    n: u32,
    grid_limit: u64,
) -> Result<Option<Substitution>, TemporalError> {
    check_ground_nontime(earlier)?;
    check_ground_nontime(later)?;
    let base = Substitution::new();
    let mut vars = free_time_vars(earlier, &base);
    for v in free_time_vars(later, &base) {
        if !vars.contains(&v) {
            vars.push(v);
        }
    }
    let span = n as u64 + 1;
    let size = span.checked_pow(vars.len() as u32).unwrap_or(u64::MAX);
    if size > grid_limit {
        return Err(TemporalError::BudgetExceeded(size));
    }

    let constraints: Vec<&TemporalConstraint> = earlier
        .iter()
        .chain(later.iter())
        .filter_map(Condition::as_temporal)
        .collect();

    let mut assignment = vec![0i64; vars.len()];
    loop {
        let mut theta = Substitution::new();
        for (v, t) in vars.iter().zip(&assignment) {
            theta.bind_time(v, *t);
        }
        let constraints_ok = constraints.iter().all(|c| c.holds(&theta) == Some(true));
        if constraints_ok {
            let et = condition_times(earlier, &theta);
            let lt = condition_times(later, &theta);
            if let (Some(et), Some(lt)) = (et, lt) {
                let emax = et.iter().max().copied();
                let lmin = lt.iter().min().copied();
                let ordered = match (emax, lmin) {
                    (Some(e), Some(l)) => e < l,
                    _ => true, // one side has no timestamped conditions
                };
                if ordered {
                    return Ok(Some(theta));
                }
            }
        }
        // next grid point
        let mut i = 0;
        loop {
            if i == assignment.len() {
                return Ok(None);
            }
            assignment[i] += 1;
            if assignment[i] <= n as i64 {
                break;
            }
            assignment[i] = 0;
            i += 1;
        }
    }
}
