//! Conversion of a framework to n-distant form: every time variable is
//! bounded above by the horizon, in the antecedent for universally
//! quantified variables and per disjunct for existential ones.

use thiserror::Error;

use crate::syntax::{Condition, Framework, TemporalConstraint, TimeExpr};
use crate::validate::has_upper_bound;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NdistantError {
    #[error("horizon violation: {0}")]
    HorizonViolation(String),
}

/// Returns the n-distant conversion of `f`. Idempotent: converting an
/// already n-distant framework with the same horizon is the identity.
pub fn to_n_distant(f: &Framework, n: u32) -> Result<Framework, NdistantError> {
    if let Some(m) = f.horizon {
        if m != n {
            return Err(NdistantError::HorizonViolation(format!(
                "framework is already {m}-distant, cannot convert to {n}"
            )));
        }
    }
    if let Some((t, evs)) = f.ext.range(n + 1..).next() {
        let names: Vec<String> = evs.iter().map(|e| e.to_string()).collect();
        return Err(NdistantError::HorizonViolation(format!(
            "external event {} at {t} exceeds the horizon {n}",
            names.join(", ")
        )));
    }
    for r in &f.rules {
        for c in r.all_conditions() {
            let exprs: Vec<&TimeExpr> = match c {
                Condition::Fluent { time, .. } | Condition::Event { time, .. } => vec![time],
                Condition::Temporal(t) => t.operands(),
                _ => vec![],
            };
            for te in exprs {
                if let TimeExpr::Const(k) = te {
                    if *k > n {
                        return Err(NdistantError::HorizonViolation(format!(
                            "rule {}: constant timestamp {k} exceeds the horizon {n}",
                            r.id
                        )));
                    }
                }
            }
        }
    }

    let mut out = f.clone();
    for r in &mut out.rules {
        let ant_vars = ordered_time_vars(&r.antecedent);
        for v in ant_vars {
            if !has_upper_bound(&r.antecedent, &v, n) {
                r.antecedent.push(bound(&v, n));
            }
        }
        let universal: std::collections::BTreeSet<String> =
            r.vars.ant_time.iter().cloned().collect();
        for d in &mut r.disjuncts {
            let vars = ordered_time_vars(d);
            for v in vars {
                if universal.contains(&v) {
                    continue; // bounded in the antecedent
                }
                if !has_upper_bound(d, &v, n) {
                    d.push(bound(&v, n));
                }
            }
        }
        r.vars = r.reclassify();
    }
    out.horizon = Some(n);
    Ok(out)
}

fn bound(var: &str, n: u32) -> Condition {
    Condition::Temporal(TemporalConstraint::Le(TimeExpr::var(var), TimeExpr::Const(n)))
}

fn ordered_time_vars(conds: &[Condition]) -> Vec<String> {
    let mut out = Vec::new();
    for c in conds {
        for v in c.time_vars() {
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out
}
