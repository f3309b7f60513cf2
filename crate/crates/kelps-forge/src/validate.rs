//! Well-formedness validation of frameworks and the fluent/event
//! antecedent restriction lint.

use crate::syntax::{Condition, Framework, ReactiveRule, TimeExpr};
use crate::temporal::DifferenceClosure;

/// Validation outcome: problems are reported, never raised.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn is_clean(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Checks every structural invariant of a framework and lints rules that
/// fail the fluent/event restriction. An empty error list means the
/// framework is well-formed.
pub fn validate_framework(f: &Framework) -> Report {
    let mut rep = Report::default();

    for atom in &f.aux {
        if !atom.to_term().is_ground() {
            rep.errors.push(format!("aux atom {atom} is not ground"));
        }
    }
    for atom in &f.initial_state {
        if !atom.to_term().is_ground() {
            rep.errors
                .push(format!("initial-state fluent {atom} is not ground"));
        }
    }
    for (t, evs) in &f.ext {
        if *t < 1 {
            rep.errors
                .push(format!("external events must have timestamp >= 1, got {t}"));
        }
        for e in evs {
            if !e.to_term().is_ground() {
                rep.errors
                    .push(format!("external event {e} at {t} is not ground"));
            }
        }
    }

    for (i, r) in f.rules.iter().enumerate() {
        let expected = (i + 1) as u32;
        if r.id != expected {
            rep.errors.push(format!(
                "rule {} has id {}, expected {} (1-based file order)",
                i + 1,
                r.id,
                expected
            ));
        }
        if r.disjuncts.is_empty() {
            rep.errors.push(format!("rule {}: empty consequent", r.id));
        }
        if r.vars != r.reclassify() {
            rep.errors.push(format!(
                "rule {}: variable classification cache is stale",
                r.id
            ));
        }
        // A variable may not be used in both time and argument positions.
        let mut time_vars = std::collections::BTreeSet::new();
        let mut nontime_vars = std::collections::BTreeSet::new();
        for c in r.all_conditions() {
            time_vars.extend(c.time_vars());
            nontime_vars.extend(c.nontime_vars());
        }
        for v in time_vars.intersection(&nontime_vars) {
            rep.errors.push(format!(
                "rule {}: variable {v} is used both as a timestamp and as a term",
                r.id
            ));
        }
        // Existential time variables are scoped per disjunct.
        for v in &r.vars.cons_only_time {
            let occurrences = r
                .disjuncts
                .iter()
                .filter(|d| d.iter().any(|c| c.time_vars().contains(v)))
                .count();
            if occurrences > 1 {
                rep.warnings.push(format!(
                    "rule {}: time variable {v} occurs in {occurrences} disjuncts; \
                     each occurrence is quantified independently",
                    r.id
                ));
            }
        }
        if !check_fluent_event_restriction(r) {
            rep.warnings.push(format!(
                "rule {}: an antecedent fluent timestamp is not entailed to be <= \
                 some antecedent event timestamp; n-distant models may not be \
                 models of the unbounded framework",
                r.id
            ));
        }
    }

    for entry in &f.causal.post {
        for g in &entry.guard {
            if !matches!(g, Condition::Aux { .. } | Condition::Compare { .. }) {
                rep.errors.push(format!(
                    "postcondition guard must contain only auxiliary literals, found {g}"
                ));
            }
        }
    }

    for (i, pre) in f.causal.pre.iter().enumerate() {
        let events: Vec<&Condition> = pre
            .body
            .iter()
            .filter(|c| matches!(c, Condition::Event { .. }))
            .collect();
        if events.is_empty() {
            rep.errors
                .push(format!("C_pre constraint {}: body has no event atom", i + 1));
            continue;
        }
        let ev_time = events[0].time().unwrap();
        if events.iter().any(|e| e.time().unwrap().parts() != ev_time.parts()) {
            rep.errors.push(format!(
                "C_pre constraint {}: event atoms must share one timestamp",
                i + 1
            ));
        }
        let (ev_base, ev_off) = ev_time.parts();
        for c in &pre.body {
            if let Condition::Fluent { time, .. } = c {
                let (fl_base, fl_off) = time.parts();
                if fl_base != ev_base || fl_off != ev_off - 1 {
                    rep.errors.push(format!(
                        "C_pre constraint {}: C_pre fluent timestamp must precede event timestamp",
                        i + 1
                    ));
                }
            }
        }
    }

    if let Some(n) = f.horizon {
        for (t, _) in f.ext.range(n + 1..) {
            rep.errors.push(format!(
                "external event at {t} exceeds the horizon {n}"
            ));
        }
        for r in &f.rules {
            for v in &r.vars.ant_time {
                if !has_upper_bound(&r.antecedent, v, n) {
                    rep.errors.push(format!(
                        "rule {}: antecedent time variable {v} lacks the constraint {v} <= {n}",
                        r.id
                    ));
                }
            }
            for d in &r.disjuncts {
                for v in &r.vars.cons_only_time {
                    let occurs = d.iter().any(|c| c.time_vars().contains(v));
                    if occurs && !has_upper_bound(d, v, n) {
                        rep.errors.push(format!(
                            "rule {}: disjunct time variable {v} lacks the constraint {v} <= {n}",
                            r.id
                        ));
                    }
                }
            }
            for c in r.all_conditions() {
                for te in condition_time_exprs(c) {
                    if let TimeExpr::Const(k) = te {
                        if *k > n {
                            rep.errors.push(format!(
                                "rule {}: constant timestamp {k} exceeds the horizon {n}",
                                r.id
                            ));
                        }
                    }
                }
            }
        }
    }

    rep
}

fn condition_time_exprs(c: &Condition) -> Vec<&TimeExpr> {
    match c {
        Condition::Fluent { time, .. } | Condition::Event { time, .. } => vec![time],
        Condition::Temporal(t) => t.operands(),
        _ => vec![],
    }
}

pub(crate) fn has_upper_bound(conds: &[Condition], var: &str, n: u32) -> bool {
    conds.iter().any(|c| {
        matches!(c.as_temporal(),
            Some(crate::syntax::TemporalConstraint::Le(TimeExpr::Var(v), TimeExpr::Const(k)))
                if v == var && *k == n)
    })
}

/// The antecedent restriction under which every n-distant model is also a
/// model of the unbounded framework: the timestamp of every antecedent
/// fluent must be entailed to be `<=` the timestamp of some antecedent
/// event. Entailment is decided by the difference-constraint closure of
/// the antecedent's temporal constraints, so unconstrained pairs count as
/// not entailed.
pub fn check_fluent_event_restriction(r: &ReactiveRule) -> bool {
    let constraints: Vec<_> = r
        .antecedent
        .iter()
        .filter_map(Condition::as_temporal)
        .cloned()
        .collect();
    let closure = DifferenceClosure::new(&constraints);
    let event_times: Vec<&TimeExpr> = r
        .antecedent
        .iter()
        .filter(|c| matches!(c, Condition::Event { .. }))
        .filter_map(|c| c.time())
        .collect();
    r.antecedent
        .iter()
        .filter(|c| matches!(c, Condition::Fluent { .. }))
        .all(|fl| {
            let ft = fl.time().unwrap();
            event_times.iter().any(|et| closure.entails_le(ft, et))
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::*;

    fn rule(id: u32, ant: Vec<Condition>, disjuncts: Vec<Vec<Condition>>) -> ReactiveRule {
        ReactiveRule::new(id, ant, disjuncts)
    }

    #[test]
    fn empty_framework_is_valid() {
        let rep = validate_framework(&Framework::default());
        assert!(rep.is_clean());
        assert!(rep.warnings.is_empty());
    }

    #[test]
    fn bad_pre_fluent_timestamp_is_an_error() {
        // Fluent at the same time as the event instead of one earlier.
        let mut f = Framework::default();
        f.causal.pre.push(PreConstraint {
            body: vec![
                Condition::event("evacuate", vec![], TimeExpr::var("T")),
                Condition::fluent("door_locked", vec![], TimeExpr::var("T")),
            ],
        });
        let rep = validate_framework(&f);
        assert_eq!(rep.errors.len(), 1);
        assert!(rep.errors[0].contains("C_pre fluent timestamp must precede event timestamp"));
    }

    #[test]
    fn restriction_fails_for_future_fluent() {
        // a(T1) and p(T) with T = T1 + 1: the fluent sits after the event.
        let r = rule(
            1,
            vec![
                Condition::event("a", vec![], TimeExpr::var("T1")),
                Condition::fluent("p", vec![], TimeExpr::var("T")),
                Condition::teq(TimeExpr::var("T"), TimeExpr::offset("T1", 1)),
            ],
            vec![vec![
                Condition::event("a1", vec![], TimeExpr::var("T2")),
                Condition::teq(TimeExpr::var("T2"), TimeExpr::offset("T", 1)),
            ]],
        );
        assert!(!check_fluent_event_restriction(&r));
    }

    #[test]
    fn restriction_holds_for_cooccurring_fluent() {
        // allocate(T) with avail(T): same timestamp, entailed by identity.
        let r = rule(
            1,
            vec![
                Condition::event("allocate", vec![], TimeExpr::var("T")),
                Condition::fluent("avail", vec![], TimeExpr::var("T")),
            ],
            vec![vec![Condition::event("order", vec![], TimeExpr::var("T1"))]],
        );
        assert!(check_fluent_event_restriction(&r));
    }

    #[test]
    fn restriction_vacuous_without_fluents() {
        let r = rule(
            1,
            vec![Condition::event("alarm", vec![], TimeExpr::var("T"))],
            vec![vec![Condition::event("evacuate", vec![], TimeExpr::var("T1"))]],
        );
        assert!(check_fluent_event_restriction(&r));
    }
}
