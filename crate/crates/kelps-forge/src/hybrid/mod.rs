//! The hybrid control architecture: a KELPS side that destructively
//! updates the state and partially evaluates the reactive rules against
//! occurred events, and an ASP side that solves prospectively over a
//! sliding window `[T, T+k]` to recommend the next actions.

mod window;

pub use window::{rewrite_asp, window_translate, RewriteInputs};

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::asp::translate::EmitOptions;
use crate::oracle::{pre_violation, successor_state, SearchBudget};
use crate::solver::{solve, AnswerSet, SolverConfig, SolverError};
use crate::syntax::*;
use crate::temporal::DifferenceClosure;

#[derive(Debug, Error)]
pub enum HybridError {
    #[error("precondition violated at {t}: C_pre constraint {index}")]
    PreconditionViolation { t: u32, index: usize },
    #[error("no model in the window at time {t}")]
    NoModel { t: u32 },
    #[error("rewrite not supported: {0}")]
    RewriteUnsupported(String),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("oracle: {0}")]
    Oracle(String),
    #[error("emit: {0}")]
    Emit(#[from] crate::asp::translate::EmitError),
}

/// A reactive rule partially evaluated against occurred events: the
/// conditions still to match (with the accumulated bindings applied) and
/// the substitution collected so far.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Residue {
    pub rule_id: u32,
    pub remaining: Vec<Condition>,
    pub theta: Substitution,
}

/// Progress on one disjunct of a triggered goal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GoalAlt {
    /// 1-based index of the disjunct in the original rule.
    pub index: u32,
    pub remaining: Vec<Condition>,
    /// Latest timestamp of a consumed condition; 0 when none.
    pub consumed_max: u32,
}

/// A fully triggered rule instance awaiting consequent satisfaction.
/// A satisfied goal keeps its alternatives: their actions stay
/// supported, and the instance constraint is replaced by a fact.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PendingGoal {
    pub rule_id: u32,
    /// Ground identity arguments of the triggering instance.
    pub args: Vec<Term>,
    pub trigger_time: u32,
    pub alts: Vec<GoalAlt>,
    pub satisfied: bool,
}

/// The carrier of the hybrid loop at time `T`.
#[derive(Clone, Debug)]
pub struct HybridState {
    pub framework: Framework,
    pub time: u32,
    pub state: BTreeSet<GroundAtom>,
    pub residues: Vec<Residue>,
    pub goals: Vec<PendingGoal>,
    /// Lookahead window size `k`.
    pub window: u32,
    /// Foreknown future events, `t > time`.
    pub anticipated: BTreeMap<u32, BTreeSet<GroundAtom>>,
}

impl HybridState {
    /// Starts the loop at time 0 from the framework's initial state. The
    /// framework is used unbounded; each window bounds it afresh.
    pub fn new(framework: Framework, window: u32) -> Self {
        let state = framework.initial_state.clone();
        HybridState {
            framework,
            time: 0,
            state,
            residues: Vec::new(),
            goals: Vec::new(),
            window,
            anticipated: BTreeMap::new(),
        }
    }
}

/// One consumption outcome while advancing a condition list at time `t`.
struct Fork {
    remaining: Vec<Condition>,
    theta: Substitution,
    consumed_any: bool,
}

fn push_fork(next: &mut Vec<Fork>, remaining: Vec<Condition>, theta: Substitution) {
    next.push(Fork {
        remaining,
        theta,
        consumed_any: true,
    });
}

/// Evaluates the timeless and ground conditions in place: ground-true
/// conditions are dropped, a ground-false condition kills the fork.
fn settle(
    remaining: &mut Vec<Condition>,
    aux: &BTreeSet<GroundAtom>,
) -> bool {
    let mut i = 0;
    while i < remaining.len() {
        let verdict = match &remaining[i] {
            Condition::Temporal(tc) => tc.holds(&Substitution::new()),
            Condition::Compare { op, lhs, rhs } if lhs.is_ground() && rhs.is_ground() => {
                Some(compare_ground(*op, &lhs.eval(), &rhs.eval()))
            }
            Condition::Aux {
                name,
                args,
                positive,
            } if args.iter().all(Term::is_ground) => {
                let present = aux.contains(&GroundAtom::new(
                    name,
                    args.iter().map(Term::eval).collect(),
                ));
                Some(present == *positive)
            }
            _ => None,
        };
        match verdict {
            Some(true) => {
                remaining.remove(i);
            }
            Some(false) => return false,
            None => i += 1,
        }
    }
    true
}

fn compare_ground(op: CmpOp, l: &Term, r: &Term) -> bool {
    match op {
        CmpOp::Eq => l == r,
        CmpOp::Ne => l != r,
        CmpOp::Lt | CmpOp::Le => match (l, r) {
            (Term::Int(a), Term::Int(b)) => {
                if op == CmpOp::Lt {
                    a < b
                } else {
                    a <= b
                }
            }
            _ => false,
        },
    }
}

/// All ways to consume a subset of the remaining conditions against the
/// events and state of one transition. Conditions matched simultaneously
/// are all consumed in one step; the no-consumption outcome is included.
fn advance(
    remaining: &[Condition],
    theta: &Substitution,
    t: u32,
    events: &BTreeSet<GroundAtom>,
    state: &BTreeSet<GroundAtom>,
    aux: &BTreeSet<GroundAtom>,
) -> Vec<Fork> {
    let mut forks = vec![Fork {
        remaining: Vec::new(),
        theta: theta.clone(),
        consumed_any: false,
    }];
    for cond in remaining {
        let mut next: Vec<Fork> = Vec::new();
        for fork in &forks {
            let cond_now = cond.apply(&fork.theta);
            // keep branch
            let mut kept = fork.remaining.clone();
            kept.push(cond_now.clone());
            next.push(Fork {
                remaining: kept,
                theta: fork.theta.clone(),
                consumed_any: fork.consumed_any,
            });
            // consume branches
            match &cond_now {
                Condition::Event { name, args, time } => {
                    for ev in events {
                        let mut th = fork.theta.clone();
                        if bind_at(time, t, &mut th) && match_atom(name, args, ev, &mut th) {
                            push_fork(&mut next, fork.remaining.clone(), th);
                        }
                    }
                }
                Condition::Fluent {
                    name,
                    args,
                    positive: true,
                    time,
                } => {
                    for fl in state {
                        let mut th = fork.theta.clone();
                        if bind_at(time, t, &mut th) && match_atom(name, args, fl, &mut th) {
                            push_fork(&mut next, fork.remaining.clone(), th);
                        }
                    }
                }
                Condition::Fluent {
                    name,
                    args,
                    positive: false,
                    time,
                } => {
                    if args.iter().all(Term::is_ground) {
                        let mut th = fork.theta.clone();
                        let absent = !state.contains(&GroundAtom::new(
                            name,
                            args.iter().map(Term::eval).collect(),
                        ));
                        if absent && bind_at(time, t, &mut th) {
                            push_fork(&mut next, fork.remaining.clone(), th);
                        }
                    }
                }
                // Aux literals, comparisons and temporal constraints are
                // timeless: they are settled once ground, never matched
                // against a transition.
                _ => {}
            }
        }
        forks = next;
    }
    // Settle ground checks; drop dead forks and duplicates.
    let mut out: Vec<Fork> = Vec::new();
    let mut seen: BTreeSet<(Vec<Condition>, Substitution)> = BTreeSet::new();
    for mut fork in forks {
        fork.remaining = fork
            .remaining
            .iter()
            .map(|c| c.apply(&fork.theta))
            .collect();
        if !settle(&mut fork.remaining, aux) {
            continue;
        }
        if seen.insert((fork.remaining.clone(), fork.theta.clone())) {
            out.push(fork);
        }
    }
    out
}

fn bind_at(te: &TimeExpr, t: u32, th: &mut Substitution) -> bool {
    match te.value(th) {
        Some(v) => v == t as i64,
        None => match te.parts() {
            (Some(base), off) => {
                let val = t as i64 - off;
                th.bind_time(base, val);
                val >= 0
            }
            (None, _) => false,
        },
    }
}

/// Whether the unmatched conditions can still be satisfied at or after
/// `earliest`: their temporal constraints plus a lower bound on every
/// unmatched condition timestamp must be consistent.
fn feasible(remaining: &[Condition], earliest: u32) -> bool {
    let mut constraints: Vec<TemporalConstraint> = remaining
        .iter()
        .filter_map(Condition::as_temporal)
        .cloned()
        .collect();
    for c in remaining {
        if let Some(te) = c.time() {
            constraints.push(TemporalConstraint::Le(
                TimeExpr::Const(earliest),
                te.clone(),
            ));
        }
    }
    !DifferenceClosure::new(&constraints).unsatisfiable()
}

/// Satisfiability of the constraints alone, with no lower bound; used
/// for goal alternatives, which stay until truly contradictory.
fn constraints_consistent(remaining: &[Condition]) -> bool {
    let constraints: Vec<TemporalConstraint> = remaining
        .iter()
        .filter_map(Condition::as_temporal)
        .cloned()
        .collect();
    !DifferenceClosure::new(&constraints).unsatisfiable()
}

fn max_time_binding(theta: &Substitution) -> u32 {
    theta
        .iter()
        .filter_map(|(_, b)| match b {
            Binding::Time(t) if *t >= 0 => Some(*t as u32),
            _ => None,
        })
        .max()
        .unwrap_or(0)
}

/// One KELPS cycle: check preconditions, apply the causal theory, and
/// advance residues and goals against the events of `[T, T+1)`.
pub fn step(h: &HybridState, events: &BTreeSet<GroundAtom>) -> Result<HybridState, HybridError> {
    let t = h.time + 1;
    let budget = SearchBudget::default();
    if let Some(index) =
        pre_violation(&h.framework, &h.state, events, t, &budget).map_err(|e| {
            HybridError::Oracle(e.to_string())
        })?
    {
        return Err(HybridError::PreconditionViolation { t, index });
    }
    let next_state = successor_state(&h.state, events, &h.framework.causal.post, &h.framework.aux);

    let mut residues: Vec<Residue> = Vec::new();
    let mut spawned: Vec<(u32, Substitution)> = Vec::new();
    let push_residue = |r: Residue, residues: &mut Vec<Residue>| {
        if !residues.contains(&r) {
            residues.push(r);
        }
    };
    let pool: Vec<Residue> = h
        .framework
        .rules
        .iter()
        .map(|r| Residue {
            rule_id: r.id,
            remaining: r.antecedent.clone(),
            theta: Substitution::new(),
        })
        .chain(h.residues.iter().cloned())
        .collect();
    for residue in &pool {
        let forks = advance(
            &residue.remaining,
            &residue.theta,
            t,
            events,
            &next_state,
            &h.framework.aux,
        );
        for fork in forks {
            let is_origin = !fork.consumed_any;
            let from_pristine = residue.theta.is_empty()
                && h.framework
                    .rules
                    .iter()
                    .any(|r| r.id == residue.rule_id && r.antecedent == residue.remaining);
            if fork.remaining.is_empty() {
                if is_origin && from_pristine {
                    // A rule with an empty antecedent triggers once, at
                    // time zero, not on every cycle.
                    continue;
                }
                spawned.push((residue.rule_id, fork.theta));
            } else if feasible(&fork.remaining, t + 1) {
                if is_origin && from_pristine {
                    continue; // pristine rules are regenerated each cycle
                }
                push_residue(
                    Residue {
                        rule_id: residue.rule_id,
                        remaining: fork.remaining,
                        theta: fork.theta,
                    },
                    &mut residues,
                );
            }
        }
    }

    // Advance pending goals. A goal whose disjunct completes is marked
    // satisfied but keeps its alternatives: their actions remain
    // supported for repetition.
    let mut goals: Vec<PendingGoal> = Vec::new();
    for goal in &h.goals {
        let mut alts: Vec<GoalAlt> = Vec::new();
        let mut satisfied = goal.satisfied;
        for alt in &goal.alts {
            let forks = advance(
                &alt.remaining,
                &Substitution::new(),
                t,
                events,
                &next_state,
                &h.framework.aux,
            );
            for fork in forks {
                if fork.remaining.is_empty() {
                    satisfied = true;
                    continue;
                }
                if constraints_consistent(&fork.remaining) {
                    let cand = GoalAlt {
                        index: alt.index,
                        remaining: fork.remaining,
                        consumed_max: if fork.consumed_any {
                            t.max(alt.consumed_max)
                        } else {
                            alt.consumed_max
                        },
                    };
                    if !alts.contains(&cand) {
                        alts.push(cand);
                    }
                }
            }
        }
        goals.push(PendingGoal {
            rule_id: goal.rule_id,
            args: goal.args.clone(),
            trigger_time: goal.trigger_time,
            alts,
            satisfied,
        });
    }

    // Spawn goals for freshly completed antecedents.
    for (rule_id, theta) in spawned {
        let rule = h
            .framework
            .rules
            .iter()
            .find(|r| r.id == rule_id)
            .expect("residue references a known rule");
        let args: Vec<Term> = rule
            .vars
            .shared_order
            .iter()
            .map(|v| Term::var(v).apply(&theta).eval())
            .collect();
        let trigger_time = max_time_binding(&theta);
        let mut alts: Vec<GoalAlt> = Vec::new();
        let mut satisfied = false;
        for (i, d) in rule.disjuncts.iter().enumerate() {
            let mut base: Vec<Condition> = d.iter().map(|c| c.apply(&theta)).collect();
            if !settle(&mut base, &h.framework.aux) {
                continue;
            }
            // Same-step consumption: the events completing the
            // antecedent may already satisfy parts of the consequent.
            for fork in advance(
                &base,
                &Substitution::new(),
                t,
                events,
                &next_state,
                &h.framework.aux,
            ) {
                if fork.remaining.is_empty() {
                    satisfied = true;
                    continue;
                }
                if constraints_consistent(&fork.remaining) {
                    let cand = GoalAlt {
                        index: (i + 1) as u32,
                        remaining: fork.remaining,
                        consumed_max: if fork.consumed_any { t } else { 0 },
                    };
                    if !alts.contains(&cand) {
                        alts.push(cand);
                    }
                }
            }
        }
        let goal = PendingGoal {
            rule_id,
            args,
            trigger_time,
            alts,
            satisfied,
        };
        if !goals.contains(&goal) {
            goals.push(goal);
        }
    }

    let mut anticipated = h.anticipated.clone();
    anticipated.retain(|at, _| *at > t);

    Ok(HybridState {
        framework: h.framework.clone(),
        time: t,
        state: next_state,
        residues,
        goals,
        window: h.window,
        anticipated,
    })
}

// ------------------------------------------------------ action choice

/// How to pick among the optimal answer sets of a window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SelectPolicy {
    /// The plan whose full action schedule is smallest in the
    /// (timestamp, action) lexicographic order: earliest plans first.
    #[default]
    EarliestLexicographic,
    /// The plan with the fewest actions, ties broken as above.
    FewestActions,
}

/// The actions `happens(e, T+1)` of the policy-chosen optimal answer
/// set; anticipated events at `T+1` are not actions and are excluded.
pub fn select_actions(
    answer_sets: &[AnswerSet],
    h: &HybridState,
    policy: SelectPolicy,
) -> Result<BTreeSet<GroundAtom>, HybridError> {
    if answer_sets.is_empty() {
        return Err(HybridError::NoModel { t: h.time });
    }
    let optimal: Vec<&AnswerSet> = {
        let flagged: Vec<&AnswerSet> = answer_sets.iter().filter(|s| s.optimal).collect();
        if flagged.is_empty() {
            answer_sets.iter().collect()
        } else {
            flagged
        }
    };
    let plan = |s: &AnswerSet| -> Vec<(i64, String)> {
        let mut acts: Vec<(i64, String)> = s
            .atoms
            .iter()
            .filter(|a| a.name == "happens" && a.args.len() == 2)
            .filter_map(|a| match &a.args[1] {
                crate::asp::AspTerm::Int(t) => {
                    Some((*t, crate::asp::serialize::term_text(&a.args[0])))
                }
                _ => None,
            })
            .collect();
        acts.sort();
        acts
    };
    let chosen = optimal
        .iter()
        .min_by(|a, b| match policy {
            SelectPolicy::EarliestLexicographic => plan(a).cmp(&plan(b)),
            SelectPolicy::FewestActions => plan(a)
                .len()
                .cmp(&plan(b).len())
                .then_with(|| plan(a).cmp(&plan(b))),
        })
        .expect("nonempty optimal set");
    let t_next = h.time + 1;
    let anticipated_now = h.anticipated.get(&t_next).cloned().unwrap_or_default();
    let mut out = BTreeSet::new();
    for a in &chosen.atoms {
        if a.name == "happens" && a.args.len() == 2 {
            if let crate::asp::AspTerm::Int(t) = &a.args[1] {
                if *t == t_next as i64 {
                    if let Some(ga) = window::asp_ground_atom(&a.args[0]) {
                        if !anticipated_now.contains(&ga) {
                            out.insert(ga);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

// ----------------------------------------------------------- scripting

/// Scripted run inputs: actual events per time and foreknown events. A
/// foreknown event at `t` becomes visible one cycle before it happens.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EventScript {
    pub at: BTreeMap<u32, BTreeSet<GroundAtom>>,
    pub expect: BTreeMap<u32, BTreeSet<GroundAtom>>,
}

impl EventScript {
    pub fn max_time(&self) -> u32 {
        self.at
            .keys()
            .chain(self.expect.keys())
            .copied()
            .max()
            .unwrap_or(0)
    }
}

/// Parses the event-script format: lines `at <t>: e1, e2` for occurring
/// events and `expect at <t>: e1` for foreknowledge. `%` comments and
/// blank lines are skipped.
pub fn parse_event_script(text: &str) -> Result<EventScript, String> {
    let mut script = EventScript::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('%').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: &str| format!("script line {}: {m}", lineno + 1);
        let (target, rest) = if let Some(rest) = line.strip_prefix("expect at ") {
            (&mut script.expect, rest)
        } else if let Some(rest) = line.strip_prefix("at ") {
            (&mut script.at, rest)
        } else {
            return Err(err("expected 'at <t>:' or 'expect at <t>:'"));
        };
        let (tpart, events) = rest
            .split_once(':')
            .ok_or_else(|| err("missing ':' after the timestamp"))?;
        let t: u32 = tpart.trim().parse().map_err(|_| err("bad timestamp"))?;
        if t == 0 {
            return Err(err("events start at time 1"));
        }
        for ev in events.split(',') {
            let ev = ev.trim();
            if ev.is_empty() {
                continue;
            }
            let atom = crate::solver::parse_ground_atom(ev)
                .and_then(|a| window::asp_ground_atom(&a_to_term(&a)))
                .ok_or_else(|| err(&format!("bad event {ev}")))?;
            target.entry(t).or_default().insert(atom);
        }
    }
    Ok(script)
}

fn a_to_term(a: &crate::asp::AspAtom) -> crate::asp::AspTerm {
    if a.args.is_empty() {
        crate::asp::AspTerm::Sym(a.name.clone())
    } else {
        crate::asp::AspTerm::Func(a.name.clone(), a.args.clone())
    }
}

// ------------------------------------------------------------ the loop

#[derive(Clone, Debug)]
pub struct TraceRow {
    pub cycle: u32,
    pub window_end: u32,
    pub state: BTreeSet<GroundAtom>,
    pub answer_sets: usize,
    pub cost: Vec<i64>,
    pub chosen: BTreeSet<GroundAtom>,
    pub events: BTreeSet<GroundAtom>,
}

#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub final_state: BTreeSet<GroundAtom>,
    pub halted: Option<String>,
}

impl Trace {
    /// Line-oriented record per cycle, the `hybrid` command output.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let fmt_set = |s: &BTreeSet<GroundAtom>| {
            s.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ")
        };
        for r in &self.rows {
            out.push_str(&format!(
                "CYCLE {} window {}..{} state: {}\n",
                r.cycle,
                r.cycle,
                r.window_end,
                fmt_set(&r.state)
            ));
            out.push_str(&format!(
                "  models: {} cost: {:?} chosen: {} events: {}\n",
                r.answer_sets,
                r.cost,
                fmt_set(&r.chosen),
                fmt_set(&r.events)
            ));
        }
        out.push_str(&format!("FINAL state: {}\n", fmt_set(&self.final_state)));
        if let Some(h) = &self.halted {
            out.push_str(&format!("HALTED: {h}\n"));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NoModelPolicy {
    /// Execute nothing this cycle and retry on the next.
    #[default]
    Idle,
    Halt,
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub window: u32,
    pub cycles: u32,
    pub policy: SelectPolicy,
    pub no_model: NoModelPolicy,
    /// Cap the window end at a fixed absolute time (the lookahead then
    /// shrinks as the loop advances).
    pub fixed_end: Option<u32>,
    pub emit: EmitOptions,
}

impl RunOptions {
    pub fn new(window: u32, cycles: u32) -> Self {
        RunOptions {
            window,
            cycles,
            policy: SelectPolicy::default(),
            no_model: NoModelPolicy::default(),
            fixed_end: None,
            emit: EmitOptions::default(),
        }
    }
}

/// Runs the loop: solve the window, choose actions, merge them with the
/// scripted events, update the KELPS side, repeat.
pub fn run(
    framework: &Framework,
    script: &EventScript,
    opts: &RunOptions,
    solver: &SolverConfig,
) -> Result<Trace, HybridError> {
    let mut h = HybridState::new(framework.clone(), opts.window);
    let mut trace = Trace::default();
    for cycle in 0..opts.cycles {
        let t_next = h.time + 1;
        // Foreknowledge becomes visible one cycle before it happens.
        for (at, evs) in &script.expect {
            if *at == t_next {
                let known = h.anticipated.entry(*at).or_default();
                known.extend(evs.iter().cloned());
            }
        }
        if let Some(end) = opts.fixed_end {
            h.window = end.saturating_sub(h.time).max(1);
        }
        let program = window_translate(&h, &opts.emit)?;
        let text = crate::asp::serialize::serialize(&program);
        let solver_cfg = if opts.emit.weak.is_empty() && !opts.emit.prefer_disjuncts {
            solver.clone()
        } else {
            solver.clone().optimizing()
        };
        let sets = solve(&text, &solver_cfg)?;
        let (chosen, cost) = match select_actions(&sets, &h, opts.policy) {
            Ok(acts) => {
                let cost = sets
                    .iter()
                    .find(|s| s.optimal)
                    .or(sets.first())
                    .map(|s| s.costs.clone())
                    .unwrap_or_default();
                (acts, cost)
            }
            Err(HybridError::NoModel { .. }) => match opts.no_model {
                NoModelPolicy::Idle => (BTreeSet::new(), Vec::new()),
                NoModelPolicy::Halt => {
                    trace.final_state = h.state.clone();
                    trace.halted = Some(format!("no model at cycle {cycle}"));
                    return Ok(trace);
                }
            },
            Err(e) => return Err(e),
        };
        let mut events = chosen.clone();
        if let Some(scripted) = script.at.get(&t_next) {
            events.extend(scripted.iter().cloned());
        }
        trace.rows.push(TraceRow {
            cycle: h.time,
            window_end: h.time + h.window,
            state: h.state.clone(),
            answer_sets: sets.len(),
            cost,
            chosen,
            events: events.clone(),
        });
        h = step(&h, &events)?;
    }
    trace.final_state = h.state.clone();
    Ok(trace)
}
