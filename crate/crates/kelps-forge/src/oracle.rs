//! Solver-independent enumeration and checking of n-distant reactive
//! models by exhaustive search. This module implements only the KELPS
//! model theory: state succession, precondition truth, rule truth, and
//! supportedness of actions; answer-set semantics stays in the solver.

use std::collections::BTreeSet;
use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::syntax::*;
use crate::temporal::respects_sequencing_with_limit;

#[derive(Clone, Debug)]
pub struct SearchBudget {
    /// Ground candidate actions admitted per timestep.
    pub max_actions_per_step: usize,
    /// Search-tree nodes visited before giving up.
    pub max_nodes: u64,
    /// Wall-clock limit for one enumeration.
    pub wall_clock: Duration,
    /// Grid bound forwarded to the sequencing check.
    pub grid_limit: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_actions_per_step: 64,
            max_nodes: 4_000_000,
            wall_clock: Duration::from_secs(120),
            grid_limit: 4_000_000,
        }
    }
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("search budget exceeded ({reason}); {got} partial models collected")]
    BudgetExceeded {
        reason: String,
        got: usize,
        partial: Vec<ModelStructure>,
    },
    #[error("framework has no horizon; convert to n-distant form first")]
    NoHorizon,
}

/// Why a candidate is not a reactive model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reason {
    StateSuccession { t: u32 },
    PreViolated { index: usize },
    RuleUnsatisfied { id: u32 },
    Unsupported { action: GroundAtom, t: u32 },
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reason::StateSuccession { t } => {
                write!(f, "state at {t} does not follow from the causal theory")
            }
            Reason::PreViolated { index } => write!(f, "C_pre constraint {} violated", index + 1),
            Reason::RuleUnsatisfied { id } => write!(f, "reactive rule {id} unsatisfied"),
            Reason::Unsupported { action, t } => write!(f, "action {action} at {t} unsupported"),
        }
    }
}

/// Applies the postconditions of one transition:
/// `(s - terminated) + initiated`; a fluent both initiated and
/// terminated holds afterwards.
pub fn successor_state(
    s: &BTreeSet<GroundAtom>,
    ev: &BTreeSet<GroundAtom>,
    post: &[PostEntry],
    aux: &BTreeSet<GroundAtom>,
) -> BTreeSet<GroundAtom> {
    let mut initiated = BTreeSet::new();
    let mut terminated = BTreeSet::new();
    for entry in post {
        for e in ev {
            let mut theta = Substitution::new();
            if !match_atom(&entry.event.name, &entry.event.args, e, &mut theta) {
                continue;
            }
            for theta in guard_matches(&entry.guard, aux, theta) {
                let args: Vec<Term> = entry
                    .fluent
                    .args
                    .iter()
                    .map(|a| a.apply(&theta).eval())
                    .collect();
                if args.iter().all(Term::is_ground) {
                    let fl = GroundAtom::new(&entry.fluent.name, args);
                    match entry.effect {
                        EffectKind::Initiates => {
                            initiated.insert(fl);
                        }
                        EffectKind::Terminates => {
                            terminated.insert(fl);
                        }
                    }
                }
            }
        }
    }
    let mut out: BTreeSet<GroundAtom> = s.difference(&terminated).cloned().collect();
    out.extend(initiated);
    out
}

/// Groundings of a postcondition guard against the aux facts.
fn guard_matches(
    guard: &[Condition],
    aux: &BTreeSet<GroundAtom>,
    theta: Substitution,
) -> Vec<Substitution> {
    let mut out = vec![theta];
    for g in guard {
        let mut next = Vec::new();
        for th in out {
            match g {
                Condition::Aux {
                    name,
                    args,
                    positive: true,
                } => {
                    for fact in aux {
                        let mut th2 = th.clone();
                        if match_atom(name, args, fact, &mut th2) {
                            next.push(th2);
                        }
                    }
                }
                Condition::Aux {
                    name,
                    args,
                    positive: false,
                } => {
                    let ground: Vec<Term> = args.iter().map(|a| a.apply(&th).eval()).collect();
                    let miss = !ground.iter().all(Term::is_ground)
                        || !aux.contains(&GroundAtom::new(name, ground));
                    if miss {
                        next.push(th);
                    }
                }
                Condition::Compare { op, lhs, rhs }
                    if eval_compare(*op, &lhs.apply(&th).eval(), &rhs.apply(&th).eval()) => {
                        next.push(th);
                    }
                _ => {}
            }
        }
        out = next;
    }
    out
}

fn eval_compare(op: CmpOp, l: &Term, r: &Term) -> bool {
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

struct Search<'a> {
    n: u32,
    constants: Vec<Term>,
    nodes: u64,
    budget: &'a SearchBudget,
    started: Instant,
}

impl<'a> Search<'a> {
    fn new(f: &Framework, n: u32, budget: &'a SearchBudget) -> Self {
        Search {
            n,
            constants: f.herbrand_constants().into_iter().collect(),
            nodes: 0,
            budget,
            started: Instant::now(),
        }
    }

    fn tick(&mut self) -> Result<(), String> {
        self.nodes += 1;
        if self.nodes > self.budget.max_nodes {
            return Err(format!("{} search nodes", self.nodes));
        }
        if self.nodes.is_multiple_of(4096) && self.started.elapsed() > self.budget.wall_clock {
            return Err("wall clock limit".to_string());
        }
        Ok(())
    }

    /// All ground substitutions extending `theta` that make every
    /// condition true in `m`, consulting no timestamp beyond `upto`.
    /// Positive atoms generate bindings; remaining free variables are
    /// enumerated over the time grid or the Herbrand constants.
    fn satisfy(
        &mut self,
        conds: &[Condition],
        m: &ModelStructure,
        theta: Substitution,
        upto: u32,
    ) -> Result<Vec<Substitution>, String> {
        let generators: Vec<&Condition> = conds
            .iter()
            .filter(|c| {
                matches!(
                    c,
                    Condition::Event { .. }
                        | Condition::Fluent { positive: true, .. }
                        | Condition::Aux { positive: true, .. }
                )
            })
            .collect();
        let mut thetas = vec![theta];
        for g in generators {
            let mut next = Vec::new();
            for th in thetas {
                self.tick()?;
                match g {
                    Condition::Event { name, args, time } => {
                        for t in self.time_candidates(time, &th, 1, upto) {
                            for ev in m.events_at(t) {
                                let mut th2 = th.clone();
                                if self.bind_time(time, t, &mut th2)
                                    && match_atom(name, args, &ev, &mut th2)
                                {
                                    next.push(th2);
                                }
                            }
                        }
                    }
                    Condition::Fluent {
                        name,
                        args,
                        time,
                        positive: true,
                    } => {
                        for t in self.time_candidates(time, &th, 0, upto) {
                            for fl in m.state(t) {
                                let mut th2 = th.clone();
                                if self.bind_time(time, t, &mut th2)
                                    && match_atom(name, args, fl, &mut th2)
                                {
                                    next.push(th2);
                                }
                            }
                        }
                    }
                    Condition::Aux {
                        name,
                        args,
                        positive: true,
                    } => {
                        for fact in &m.aux {
                            let mut th2 = th.clone();
                            if match_atom(name, args, fact, &mut th2) {
                                next.push(th2);
                            }
                        }
                    }
                    _ => unreachable!(),
                }
            }
            thetas = next;
        }

        // Enumerate leftover variables of the check conditions.
        let checks: Vec<&Condition> = conds
            .iter()
            .filter(|c| {
                !matches!(
                    c,
                    Condition::Event { .. }
                        | Condition::Fluent { positive: true, .. }
                        | Condition::Aux { positive: true, .. }
                )
            })
            .collect();
        let mut out = Vec::new();
        for th in thetas {
            let mut free_time = Vec::new();
            let mut free_term = Vec::new();
            for c in &checks {
                for v in c.time_vars() {
                    if !th.contains(&v) && !free_time.contains(&v) {
                        free_time.push(v);
                    }
                }
                for v in c.nontime_vars() {
                    if !th.contains(&v) && !free_term.contains(&v) {
                        free_term.push(v);
                    }
                }
            }
            let mut expanded = vec![th];
            for v in free_time {
                let mut next = Vec::new();
                for th in &expanded {
                    for t in 0..=self.n {
                        let mut th2 = th.clone();
                        th2.bind_time(&v, t as i64);
                        next.push(th2);
                    }
                }
                expanded = next;
                if expanded.len() as u64 > self.budget.grid_limit {
                    return Err("check-variable grid".to_string());
                }
            }
            for v in free_term {
                let mut next = Vec::new();
                for th in &expanded {
                    for c in &self.constants {
                        let mut th2 = th.clone();
                        th2.bind_term(&v, c.clone());
                        next.push(th2);
                    }
                }
                expanded = next;
                if expanded.len() as u64 > self.budget.grid_limit {
                    return Err("check-variable grid".to_string());
                }
            }
            for th in expanded {
                self.tick()?;
                if checks.iter().all(|c| self.check(c, m, &th, upto)) {
                    out.push(th);
                }
            }
        }
        Ok(out)
    }

    fn check(&self, c: &Condition, m: &ModelStructure, th: &Substitution, upto: u32) -> bool {
        match c {
            Condition::Temporal(tc) => tc.holds(th) == Some(true),
            Condition::Compare { op, lhs, rhs } => {
                eval_compare(*op, &lhs.apply(th).eval(), &rhs.apply(th).eval())
            }
            Condition::Fluent {
                name,
                args,
                positive: false,
                time,
            } => {
                let t = match time.value(th) {
                    Some(t) if t >= 0 && t as u32 <= upto => t as u32,
                    _ => return false,
                };
                let ground: Vec<Term> = args.iter().map(|a| a.apply(th).eval()).collect();
                if !ground.iter().all(Term::is_ground) {
                    return false;
                }
                !m.state(t).contains(&GroundAtom::new(name, ground))
            }
            Condition::Aux {
                name,
                args,
                positive: false,
            } => {
                let ground: Vec<Term> = args.iter().map(|a| a.apply(th).eval()).collect();
                !ground.iter().all(Term::is_ground)
                    || !m.aux.contains(&GroundAtom::new(name, ground))
            }
            _ => true,
        }
    }

    fn time_candidates(&self, te: &TimeExpr, th: &Substitution, lo: u32, upto: u32) -> Vec<u32> {
        match te.value(th) {
            Some(t) if t >= lo as i64 && t <= upto as i64 => vec![t as u32],
            Some(_) => vec![],
            None => (lo..=upto).collect(),
        }
    }

    fn bind_time(&self, te: &TimeExpr, t: u32, th: &mut Substitution) -> bool {
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
}

/// True iff every grounding that makes the rule's antecedent true in `m`
/// extends to some true disjunct.
pub fn evaluate_rule(
    r: &ReactiveRule,
    m: &ModelStructure,
    f: &Framework,
    budget: &SearchBudget,
) -> Result<bool, OracleError> {
    let n = m.n;
    let mut s = Search::new(f, n, budget);
    let triggers = s
        .satisfy(&r.antecedent, m, Substitution::new(), n)
        .map_err(budget_err)?;
    'outer: for th in triggers {
        for d in &r.disjuncts {
            let sat = s.satisfy(d, m, th.clone(), n).map_err(budget_err)?;
            if !sat.is_empty() {
                continue 'outer;
            }
        }
        return Ok(false);
    }
    Ok(true)
}

fn budget_err(reason: String) -> OracleError {
    OracleError::BudgetExceeded {
        reason,
        got: 0,
        partial: vec![],
    }
}

/// Whether some rule, disjunct, occurrence split, and grounding support
/// `action` happening at `t` in `m`: the action matches the occurrence,
/// the already-true part sequences strictly before the action with the
/// rest still satisfiable, and the model satisfies antecedent, earlier
/// part, and the action itself.
pub fn is_supported(
    action: &GroundAtom,
    t: u32,
    m: &ModelStructure,
    f: &Framework,
    budget: &SearchBudget,
) -> Result<bool, OracleError> {
    is_supported_upto(action, t, m, f, budget, m.n)
}

/// Supportedness decided from the prefix of `m` up to `upto`; valid
/// because everything the truth condition consults sits strictly before
/// `t`, while future satisfiability is a constraint question.
pub fn is_supported_upto(
    action: &GroundAtom,
    t: u32,
    m: &ModelStructure,
    f: &Framework,
    budget: &SearchBudget,
    upto: u32,
) -> Result<bool, OracleError> {
    let n = f.horizon.unwrap_or(m.n);
    let mut s = Search::new(f, n, budget);
    let dummy = s.constants.first().cloned().unwrap_or(Term::Int(0));
    for r in &f.rules {
        for d in &r.disjuncts {
            for (j, cond) in d.iter().enumerate() {
                let (name, args, time) = match cond {
                    Condition::Event { name, args, time } => (name, args, time),
                    _ => continue,
                };
                if name != &action.name || args.len() != action.args.len() {
                    continue;
                }
                let mut theta = Substitution::new();
                if !match_atom(name, args, action, &mut theta) {
                    continue;
                }
                if !s.bind_time(time, t, &mut theta) {
                    continue;
                }
                // Truth in the model: antecedent plus the earlier part of
                // the disjunct (its constraints are re-checked by the
                // sequencing search below).
                let mut part3: Vec<Condition> = r.antecedent.clone();
                for c in &d[..j] {
                    if !matches!(c, Condition::Temporal(_)) {
                        part3.push(c.clone());
                    }
                }
                let sats = s
                    .satisfy(&part3, m, theta.clone(), upto)
                    .map_err(budget_err)?;
                for th in sats {
                    let ground_rest = |c: &Condition| {
                        let mut g = c.apply(&th);
                        for v in g.nontime_vars() {
                            let mut th2 = Substitution::new();
                            th2.bind_term(&v, dummy.clone());
                            g = g.apply(&th2);
                        }
                        g
                    };
                    let group1: Vec<Condition> = r
                        .antecedent
                        .iter()
                        .chain(d[..j].iter())
                        .map(ground_rest)
                        .collect();
                    let group2: Vec<Condition> = d[j..].iter().map(ground_rest).collect();
                    let witness = respects_sequencing_with_limit(
                        &group1,
                        &group2,
                        &f.aux,
                        n,
                        budget.grid_limit,
                    )
                    .map_err(|e| budget_err(e.to_string()))?;
                    if witness.is_some() {
                        return Ok(true);
                    }
                }
            }
        }
    }
    Ok(false)
}

/// All actions supported at `t` given the prefix of `m` up to `t - 1`:
/// instead of filtering a ground universe, groundings are generated from
/// each rule's antecedent and earlier part, so the cost tracks the
/// number of actual matches.
pub fn supported_candidates(
    f: &Framework,
    m: &ModelStructure,
    t: u32,
    budget: &SearchBudget,
) -> Result<BTreeSet<GroundAtom>, String> {
    let n = f.horizon.unwrap_or(m.n);
    let mut s = Search::new(f, n, budget);
    let dummy = s.constants.first().cloned().unwrap_or(Term::Int(0));
    let constants = s.constants.clone();
    let mut out = BTreeSet::new();
    for r in &f.rules {
        for d in &r.disjuncts {
            for (j, cond) in d.iter().enumerate() {
                let (name, args, time) = match cond {
                    Condition::Event { name, args, time } => (name, args, time),
                    _ => continue,
                };
                let mut theta = Substitution::new();
                if !s.bind_time(time, t, &mut theta) {
                    continue;
                }
                let mut part3: Vec<Condition> = r.antecedent.clone();
                for c in &d[..j] {
                    if !matches!(c, Condition::Temporal(_)) {
                        part3.push(c.clone());
                    }
                }
                let sats = s.satisfy(&part3, m, theta, t.saturating_sub(1))?;
                for th in sats {
                    // Ground any remaining action argument variables over
                    // the signature.
                    let mut groundings = vec![th];
                    for arg in args {
                        let mut vs = Vec::new();
                        arg.collect_vars(&mut vs);
                        for v in vs {
                            let mut next = Vec::new();
                            for g in &groundings {
                                if g.contains(&v) {
                                    next.push(g.clone());
                                    continue;
                                }
                                for cst in &constants {
                                    let mut g2 = g.clone();
                                    g2.bind_term(&v, cst.clone());
                                    next.push(g2);
                                }
                            }
                            groundings = next;
                            if groundings.len() as u64 > budget.grid_limit {
                                return Err("action argument grid".into());
                            }
                        }
                    }
                    for th in groundings {
                        let ground_args: Vec<Term> =
                            args.iter().map(|a| a.apply(&th).eval()).collect();
                        if !ground_args.iter().all(Term::is_ground) {
                            continue;
                        }
                        let action = GroundAtom::new(name, ground_args);
                        if out.contains(&action) {
                            continue;
                        }
                        let ground_rest = |c: &Condition| {
                            let mut g = c.apply(&th);
                            for v in g.nontime_vars() {
                                let mut th2 = Substitution::new();
                                th2.bind_term(&v, dummy.clone());
                                g = g.apply(&th2);
                            }
                            g
                        };
                        let group1: Vec<Condition> = r
                            .antecedent
                            .iter()
                            .chain(d[..j].iter())
                            .map(ground_rest)
                            .collect();
                        let group2: Vec<Condition> = d[j..].iter().map(ground_rest).collect();
                        let witness = respects_sequencing_with_limit(
                            &group1,
                            &group2,
                            &f.aux,
                            n,
                            budget.grid_limit,
                        )
                        .map_err(|e| e.to_string())?;
                        if witness.is_some() {
                            out.insert(action);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Full reactive-model check; `None` means `m` is a reactive model.
pub fn check_reactive_model(
    f: &Framework,
    m: &ModelStructure,
    budget: &SearchBudget,
) -> Result<Option<Reason>, OracleError> {
    let n = match f.horizon {
        Some(n) => n,
        None => return Err(OracleError::NoHorizon),
    };
    if m.states.len() != n as usize + 1 {
        return Ok(Some(Reason::StateSuccession { t: 0 }));
    }
    let mut state = m.states[0].clone();
    for t in 1..=n {
        state = successor_state(&state, &m.events_at(t), &f.causal.post, &f.aux);
        if state != *m.state(t) {
            return Ok(Some(Reason::StateSuccession { t }));
        }
    }
    let mut s = Search::new(f, n, budget);
    for (i, pre) in f.causal.pre.iter().enumerate() {
        let sats = s
            .satisfy(&pre.body, m, Substitution::new(), n)
            .map_err(budget_err)?;
        if !sats.is_empty() {
            return Ok(Some(Reason::PreViolated { index: i }));
        }
    }
    for r in &f.rules {
        if !evaluate_rule(r, m, f, budget)? {
            return Ok(Some(Reason::RuleUnsatisfied { id: r.id }));
        }
    }
    for (t, acts) in &m.acts {
        for a in acts {
            if !is_supported(a, *t, m, f, budget)? {
                return Ok(Some(Reason::Unsupported {
                    action: a.clone(),
                    t: *t,
                }));
            }
        }
    }
    Ok(None)
}

pub fn is_reactive_model(
    f: &Framework,
    m: &ModelStructure,
    budget: &SearchBudget,
) -> Result<bool, OracleError> {
    Ok(check_reactive_model(f, m, budget)?.is_none())
}

/// Ground candidate actions: every instantiation of an event atom from a
/// rule consequent over the framework's constants.
pub fn ground_action_universe(
    f: &Framework,
    _budget: &SearchBudget,
) -> Result<Vec<GroundAtom>, OracleError> {
    let constants: Vec<Term> = f.herbrand_constants().into_iter().collect();
    let mut out = BTreeSet::new();
    for r in &f.rules {
        for d in &r.disjuncts {
            for c in d {
                if let Condition::Event { name, args, .. } = c {
                    let mut partial: Vec<Vec<Term>> = vec![Vec::new()];
                    for arg in args {
                        let mut next = Vec::new();
                        for p in &partial {
                            if arg.is_ground() {
                                let mut q = p.clone();
                                q.push(arg.eval());
                                next.push(q);
                            } else {
                                for cst in &constants {
                                    let mut vs = Vec::new();
                                    arg.collect_vars(&mut vs);
                                    let mut th = Substitution::new();
                                    for v in &vs {
                                        th.bind_term(v, cst.clone());
                                    }
                                    let ground = arg.apply(&th).eval();
                                    if ground.is_ground() {
                                        let mut q = p.clone();
                                        q.push(ground);
                                        next.push(q);
                                    }
                                }
                            }
                        }
                        partial = next;
                        if partial.len() > 100_000 {
                            return Err(OracleError::BudgetExceeded {
                                reason: "ground action universe".to_string(),
                                got: 0,
                                partial: vec![],
                            });
                        }
                    }
                    for args in partial {
                        out.insert(GroundAtom::new(name, args));
                    }
                }
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// Enumerates exactly the reactive models of an n-distant framework:
/// depth-first over timestamps ascending, candidate actions in
/// lexicographic order, pruning by preconditions and supportedness as
/// states are built forward.
pub fn enumerate_reactive_models(
    f: &Framework,
    budget: &SearchBudget,
) -> Result<BTreeSet<ModelStructure>, OracleError> {
    let n = match f.horizon {
        Some(n) => n,
        None => return Err(OracleError::NoHorizon),
    };
    let mut found: BTreeSet<ModelStructure> = BTreeSet::new();
    let mut m = ModelStructure::new(n, f.initial_state.clone());
    m.ext = f.ext.clone();
    m.aux = f.aux.clone();
    let mut search = Search::new(f, n, budget);
    let r = step_enumerate(f, &mut m, 1, &mut found, budget, &mut search);
    match r {
        Ok(()) => Ok(found),
        Err(reason) => {
            let got = found.len();
            Err(OracleError::BudgetExceeded {
                reason,
                got,
                partial: found.into_iter().collect(),
            })
        }
    }
}

/// A grounding of one C_pre body makes it fire at step `t` only if its
/// events sit at `t`, so the shared event timestamp is pinned before the
/// search.
fn pre_violated_at(
    search: &mut Search,
    pre: &PreConstraint,
    m: &ModelStructure,
    t: u32,
) -> Result<bool, String> {
    let mut theta = Substitution::new();
    if let Some(ev_time) = pre
        .body
        .iter()
        .find(|c| matches!(c, Condition::Event { .. }))
        .and_then(|c| c.time())
    {
        match ev_time.parts() {
            (Some(base), off) => {
                let val = t as i64 - off;
                if val < 0 {
                    return Ok(false);
                }
                theta.bind_time(base, val);
            }
            (None, c) => {
                if c != t as i64 {
                    return Ok(false);
                }
            }
        }
    }
    Ok(!search.satisfy(&pre.body, m, theta, t)?.is_empty())
}

fn step_enumerate(
    f: &Framework,
    m: &mut ModelStructure,
    t: u32,
    found: &mut BTreeSet<ModelStructure>,
    budget: &SearchBudget,
    search: &mut Search,
) -> Result<(), String> {
    let n = m.n;
    if t > n {
        // Leaf: preconditions and supportedness were enforced stepwise;
        // rule truth needs the complete structure.
        for r in &f.rules {
            match evaluate_rule(r, m, f, budget) {
                Ok(true) => {}
                Ok(false) => return Ok(()),
                Err(e) => return Err(e.to_string()),
            }
        }
        found.insert(m.clone());
        return Ok(());
    }
    search.tick()?;
    let ext_t = f.ext.get(&t).cloned().unwrap_or_default();
    let mut candidates: Vec<GroundAtom> = supported_candidates(f, m, t, budget)?
        .into_iter()
        .filter(|a| !ext_t.contains(a))
        .collect();
    candidates.sort();
    if candidates.len() > budget.max_actions_per_step {
        return Err(format!(
            "{} candidate actions at {t} exceeds the per-step bound",
            candidates.len()
        ));
    }
    let k = candidates.len() as u32;
    for mask in 0u64..(1u64 << k) {
        search.tick()?;
        let acts: BTreeSet<GroundAtom> = candidates
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, a)| a.clone())
            .collect();
        let mut events = acts.clone();
        events.extend(ext_t.iter().cloned());
        let next = successor_state(m.state(t - 1), &events, &f.causal.post, &f.aux);
        m.states.push(next);
        if !acts.is_empty() {
            m.acts.insert(t, acts);
        }
        let mut violated = false;
        for pre in &f.causal.pre {
            if pre_violated_at(search, pre, m, t)? {
                violated = true;
                break;
            }
        }
        if !violated {
            step_enumerate(f, m, t + 1, found, budget, search)?;
        }
        m.states.pop();
        m.acts.remove(&t);
    }
    Ok(())
}

/// Checks the preconditions for a single transition at `t`: fluents are
/// read from `state_before`, events from `events`. Returns the index of
/// the first violated constraint.
pub fn pre_violation(
    f: &Framework,
    state_before: &BTreeSet<GroundAtom>,
    events: &BTreeSet<GroundAtom>,
    t: u32,
    budget: &SearchBudget,
) -> Result<Option<usize>, OracleError> {
    let after = successor_state(state_before, events, &f.causal.post, &f.aux);
    let mut m = ModelStructure {
        n: t,
        states: vec![state_before.clone(); t as usize],
        acts: Default::default(),
        ext: Default::default(),
        aux: f.aux.clone(),
    };
    m.states.push(after);
    m.acts.insert(t, events.clone());
    let mut search = Search::new(f, t, budget);
    for (i, pre) in f.causal.pre.iter().enumerate() {
        if pre_violated_at(&mut search, pre, &m, t).map_err(budget_err)? {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

/// Line-oriented dump of enumerated models, the `verify` exchange format.
pub fn dump_models<'a>(models: impl IntoIterator<Item = &'a ModelStructure>) -> String {
    let mut out = String::new();
    for (k, m) in models.into_iter().enumerate() {
        out.push_str(&format!("MODEL {}\n", k + 1));
        let atoms =
            |s: &BTreeSet<GroundAtom>| s.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ");
        out.push_str(&format!("STATE 0: {}\n", atoms(&m.states[0])));
        for t in 1..=m.n {
            out.push_str(&format!("ACTS {t}: {}\n", atoms(&m.acts_at(t))));
            out.push_str(&format!("STATE {t}: {}\n", atoms(m.state(t))));
        }
        out.push('\n');
    }
    out
}
