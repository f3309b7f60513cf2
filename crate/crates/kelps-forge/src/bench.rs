//! Synthetic workloads for measuring the cost of the explicit frame
//! axiom and of iterated single-shot solving over growing horizons.

use crate::asp::serialize::serialize;
use crate::asp::translate::{translate, EmitOptions};
use crate::ndistant::to_n_distant;
use crate::solver::{solve_timed, SolverConfig, SolverError};
use crate::syntax::*;

/// The frame-axiom family: six indexed fluent families flipped by six
/// external events with nine occurrences each, no reactive rules. The
/// runtime is dominated by carrying fluents from state to state.
pub fn frame_family(index_count: u32, horizon: u32) -> Framework {
    let mut f = Framework::default();
    for x in 1..=index_count {
        f.aux
            .insert(GroundAtom::new("index", vec![Term::Int(x as i64)]));
    }
    let fluents = ["p", "q", "r", "s", "t", "j"];
    let events = ["c", "d", "e", "f", "g", "h"];
    for (i, ev) in events.iter().enumerate() {
        let guard = vec![Condition::aux("index", vec![Term::var("X")])];
        f.causal.post.push(PostEntry {
            effect: EffectKind::Initiates,
            event: Template::new(ev, vec![]),
            fluent: Template::new(fluents[i], vec![Term::var("X")]),
            guard: guard.clone(),
        });
        f.causal.post.push(PostEntry {
            effect: EffectKind::Terminates,
            event: Template::new(ev, vec![]),
            fluent: Template::new(fluents[(i + 1) % 6], vec![Term::var("X")]),
            guard,
        });
    }
    for (i, ev) in events.iter().enumerate() {
        for j in 0..9u32 {
            let t = (3 + 11 * j + i as u32).min(horizon.max(1));
            f.ext.entry(t).or_default().insert(GroundAtom::nullary(ev));
        }
    }
    f
}

/// One frame-family measurement: translate at the horizon and solve for
/// a single model with atom output suppressed. Returns solver-reported
/// seconds (wall clock if the solver does not report timing).
pub fn frame_run(index_count: u32, horizon: u32, solver: &SolverConfig) -> Result<f64, BenchError> {
    let f = to_n_distant(&frame_family(index_count, horizon), horizon)
        .map_err(|e| BenchError::Setup(e.to_string()))?;
    let program =
        translate(&f, &EmitOptions::default()).map_err(|e| BenchError::Setup(e.to_string()))?;
    let mut text = serialize(&program);
    text.push_str("#show.\n");
    let cfg = solver.clone().models(1);
    let outcome = solve_timed(&text, &cfg)?;
    Ok(outcome.solver_seconds)
}

/// The iterated-horizon family: indexed event chains with a fluent
/// precondition, re-initiated periodically by an external event.
pub fn chain_family() -> Framework {
    let mut f = Framework::default();
    for x in 1..=3i64 {
        f.aux.insert(GroundAtom::new("index", vec![Term::Int(x)]));
    }
    f.initial_state.insert(GroundAtom::nullary("p"));
    let idx = |i: i64| vec![Term::Int(i)];
    for (t, name, i) in [
        (1u32, "a", 1i64),
        (5, "b", 1),
        (11, "a", 2),
        (15, "b", 2),
        (32, "a", 3),
        (35, "b", 3),
    ] {
        f.ext.entry(t).or_default().insert(GroundAtom::new(name, idx(i)));
    }
    for t in [9u32, 19, 29, 39, 49] {
        f.ext.entry(t).or_default().insert(GroundAtom::nullary("c"));
    }
    f.causal.post.push(PostEntry {
        effect: EffectKind::Terminates,
        event: Template::new("a1", vec![Term::var("I")]),
        fluent: Template::new("p", vec![]),
        guard: vec![Condition::aux("index", vec![Term::var("I")])],
    });
    f.causal.post.push(PostEntry {
        effect: EffectKind::Initiates,
        event: Template::new("c", vec![]),
        fluent: Template::new("p", vec![]),
        guard: vec![],
    });
    f.causal.pre.push(PreConstraint {
        body: vec![
            Condition::event("b1", vec![Term::var("I")], TimeExpr::offset("T", 1)),
            Condition::not_fluent("p", vec![], TimeExpr::var("T")),
            Condition::aux("index", vec![Term::var("I")]),
        ],
    });
    let r1 = ReactiveRule::new(
        1,
        vec![Condition::event("a", vec![Term::var("I")], TimeExpr::var("T"))],
        vec![vec![
            Condition::event("a1", vec![Term::var("I")], TimeExpr::var("T1")),
            Condition::lt(TimeExpr::var("T"), TimeExpr::var("T1")),
            Condition::le(TimeExpr::var("T1"), TimeExpr::offset("T", 10)),
            Condition::event("a2", vec![Term::var("I")], TimeExpr::var("T2")),
            Condition::lt(TimeExpr::var("T1"), TimeExpr::var("T2")),
            Condition::le(TimeExpr::var("T2"), TimeExpr::offset("T1", 5)),
        ]],
    );
    let r2 = ReactiveRule::new(
        2,
        vec![Condition::event("b", vec![Term::var("I")], TimeExpr::var("T"))],
        vec![vec![
            Condition::event("b1", vec![Term::var("I")], TimeExpr::var("T1")),
            Condition::lt(TimeExpr::var("T"), TimeExpr::var("T1")),
        ]],
    );
    f.rules = vec![r1, r2];
    f
}

/// Deduplication constraints keeping each indexed reaction to at most
/// one occurrence, appended as raw text.
const CHAIN_CONSTRAINTS: &str = "\
:- happens(a1(X),T1), happens(a1(X),T2), T1<T2, index(X).
:- happens(a2(X),T1), happens(a2(X),T2), T1<T2, index(X).
:- happens(b1(X),T1), happens(b1(X),T2), T1<T2, index(X).
:- happens(b1(X),T), happens(a2(X),T1), T>T1, index(X).
";

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("bench setup: {0}")]
    Setup(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

pub struct CompareRow {
    pub max_horizon: u32,
    pub total_seconds: f64,
    pub models_found: u32,
}

/// Runs the standard translation once per horizon `t = 0..=m` with the
/// external events restricted to `<= t`, accumulating the solve times:
/// the single-shot equivalent of growing the timeframe incrementally.
pub fn compare_run(m: u32, solver: &SolverConfig) -> Result<CompareRow, BenchError> {
    let base = chain_family();
    let mut total = 0.0;
    let mut models = 0;
    for t in 0..=m {
        let mut restricted = base.clone();
        restricted.ext.retain(|at, _| *at <= t);
        let f = to_n_distant(&restricted, t).map_err(|e| BenchError::Setup(e.to_string()))?;
        let program =
            translate(&f, &EmitOptions::default()).map_err(|e| BenchError::Setup(e.to_string()))?;
        let mut text = serialize(&program);
        text.push_str(CHAIN_CONSTRAINTS);
        text.push_str("#show.\n");
        let cfg = solver.clone().models(1);
        let outcome = solve_timed(&text, &cfg)?;
        total += outcome.solver_seconds;
        if !outcome.sets.is_empty() {
            models += 1;
        }
    }
    Ok(CompareRow {
        max_horizon: m,
        total_seconds: total,
        models_found: models,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::validate_framework;

    #[test]
    fn families_are_well_formed() {
        let report = validate_framework(&frame_family(5, 30));
        assert!(report.is_clean(), "{:?}", report.errors);
        let report = validate_framework(&chain_family());
        assert!(report.is_clean(), "{:?}", report.errors);
    }

    #[test]
    fn frame_family_translates() {
        let f = to_n_distant(&frame_family(3, 20), 20).unwrap();
        let p = translate(&f, &EmitOptions::default()).unwrap();
        let text = serialize(&p);
        assert!(text.contains("time(0..20)."));
        assert!(text.contains("initiates(c,p(X)) :- index(X)."));
        assert!(text.contains("terminates(c,q(X)) :- index(X)."));
    }
}
