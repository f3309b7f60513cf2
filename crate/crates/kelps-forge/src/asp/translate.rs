//! Compilation of an n-distant framework into a Reactive ASP program:
//! reified `holds`/`happens` ontology, `ant`/`cons` rules plus the
//! generic reactive-rule constraint, `supported` rules with future
//! satisfiability conditions, the choice rule, preconditions, and the
//! explicit event theory.

use std::collections::BTreeSet;

use thiserror::Error;

use super::*;
use crate::syntax::{
    CmpOp, Condition, EffectKind, Framework, ReactiveRule, Template, TemporalConstraint, Term,
    TimeExpr,
};
use crate::temporal::DifferenceClosure;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EmitError {
    #[error("framework has no horizon; convert to n-distant form first")]
    NotNDistant,
    #[error("rule {rule}: variable {var} cannot be made safe; add a positive auxiliary domain guard")]
    UnsafeVariable { rule: u32, var: String },
    #[error("unsupported temporal form: {0}")]
    UnsupportedConstraint(String),
    #[error("unsafe weak constraint: {0}")]
    UnsafeWeakConstraint(String),
}

/// A proactive/preemptive action declaration: the action template plus
/// auxiliary guard literals that ground its arguments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionDecl {
    pub template: Template,
    pub guard: Vec<Condition>,
}

impl ActionDecl {
    pub fn name(name: &str) -> Self {
        ActionDecl {
            template: Template::new(name, vec![]),
            guard: vec![],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EmitOptions {
    /// Cross-checked against the framework horizon when set.
    pub horizon: Option<u32>,
    /// Add a disjunct index argument to `cons` and prefer low indices.
    pub prefer_disjuncts: bool,
    /// User weak constraints, emitted verbatim after safety checking.
    pub weak: Vec<AspRule>,
    /// Actions freed from supportedness.
    pub actions: Vec<ActionDecl>,
    /// Replace the reactive constraint by a `badRule` head and minimise it.
    pub bad_rule: bool,
}

pub fn term_to_asp(t: &Term) -> AspTerm {
    match t {
        Term::Const(s) => AspTerm::Sym(s.clone()),
        Term::Int(i) => AspTerm::Int(*i),
        Term::Var(v) => AspTerm::Var(v.clone()),
        Term::Compound(f, args) => {
            AspTerm::Func(f.clone(), args.iter().map(term_to_asp).collect())
        }
    }
}

pub fn time_to_asp(te: &TimeExpr) -> AspTerm {
    match te {
        TimeExpr::Var(v) => AspTerm::Var(v.clone()),
        TimeExpr::Const(c) => AspTerm::Int(*c as i64),
        TimeExpr::Offset(v, k) => AspTerm::plus(AspTerm::Var(v.clone()), *k),
    }
}

/// `name(a,b)` as a term; bare symbol when there are no arguments.
pub fn atom_term(name: &str, args: &[Term]) -> AspTerm {
    if args.is_empty() {
        AspTerm::sym(name)
    } else {
        AspTerm::Func(name.to_string(), args.iter().map(term_to_asp).collect())
    }
}

pub fn happens(ev: AspTerm, ts: AspTerm) -> AspAtom {
    AspAtom::new("happens", vec![ev, ts])
}

pub fn holds(fl: AspTerm, ts: AspTerm) -> AspAtom {
    AspAtom::new("holds", vec![fl, ts])
}

fn time_atom(t: AspTerm) -> AspLiteral {
    AspLiteral::Pos(AspAtom::new("time", vec![t]))
}

fn cmp_op(op: CmpOp) -> CmpSym {
    match op {
        CmpOp::Eq => CmpSym::Eq,
        CmpOp::Ne => CmpSym::Ne,
        CmpOp::Lt => CmpSym::Lt,
        CmpOp::Le => CmpSym::Le,
    }
}

/// Reifies one condition. Horizon bounds `V <= n` become `time(V)`;
/// `max/3` atoms are recorded so the defining rules get emitted.
pub fn reify(c: &Condition, n: u32, uses_max: &mut bool) -> AspLiteral {
    match c {
        Condition::Fluent {
            name,
            args,
            positive,
            time,
        } => {
            let a = holds(atom_term(name, args), time_to_asp(time));
            if *positive {
                AspLiteral::Pos(a)
            } else {
                AspLiteral::Neg(a)
            }
        }
        Condition::Event { name, args, time } => {
            AspLiteral::Pos(happens(atom_term(name, args), time_to_asp(time)))
        }
        Condition::Aux {
            name,
            args,
            positive,
        } => {
            let a = AspAtom::new(name, args.iter().map(term_to_asp).collect());
            if *positive {
                AspLiteral::Pos(a)
            } else {
                AspLiteral::Neg(a)
            }
        }
        Condition::Compare { op, lhs, rhs } => {
            AspLiteral::Cmp(cmp_op(*op), term_to_asp(lhs), term_to_asp(rhs))
        }
        Condition::Temporal(tc) => match tc {
            TemporalConstraint::Le(TimeExpr::Var(v), TimeExpr::Const(k)) if *k == n => {
                time_atom(AspTerm::var(v))
            }
            TemporalConstraint::Lt(a, b) => {
                AspLiteral::Cmp(CmpSym::Lt, time_to_asp(a), time_to_asp(b))
            }
            TemporalConstraint::Le(a, b) => {
                AspLiteral::Cmp(CmpSym::Le, time_to_asp(a), time_to_asp(b))
            }
            TemporalConstraint::Eq(a, b) => {
                AspLiteral::Cmp(CmpSym::Eq, time_to_asp(a), time_to_asp(b))
            }
            TemporalConstraint::Max3(a, b, m) => {
                *uses_max = true;
                AspLiteral::Pos(AspAtom::new(
                    "max",
                    vec![time_to_asp(a), time_to_asp(b), time_to_asp(m)],
                ))
            }
        },
    }
}

/// Everything emitted for one reactive rule.
pub struct RuleMapping {
    /// Absent for triggered goal instances.
    pub ant: Option<TaggedRule>,
    pub cons: Vec<TaggedRule>,
    pub supported: Vec<TaggedRule>,
    pub uses_max: bool,
}

struct Fresh {
    used: BTreeSet<String>,
}

impl Fresh {
    fn next(&mut self, base: &str) -> String {
        for i in 0.. {
            let name = if i == 0 {
                base.to_string()
            } else {
                format!("{base}{i}")
            };
            if self.used.insert(name.clone()) {
                return name;
            }
        }
        unreachable!()
    }
}

/// Replaces offset and constant timestamps of event/fluent atoms by a
/// fresh variable with an equality constraint inserted right after the
/// atom, so heads and supportedness always see a plain variable. The
/// fresh variable gets its own horizon bound, rendered as a `time` atom.
fn normalize_times(conds: &mut Vec<Condition>, fresh: &mut Fresh, n: u32) {
    let mut i = 0;
    while i < conds.len() {
        let needs = match &conds[i] {
            Condition::Fluent { time, .. } | Condition::Event { time, .. } => {
                !matches!(time, TimeExpr::Var(_))
            }
            _ => false,
        };
        if needs {
            let v = fresh.next("Ts");
            let old = match &mut conds[i] {
                Condition::Fluent { time, .. } | Condition::Event { time, .. } => {
                    std::mem::replace(time, TimeExpr::var(&v))
                }
                _ => unreachable!(),
            };
            conds.insert(
                i + 1,
                Condition::Temporal(TemporalConstraint::Eq(old, TimeExpr::var(&v))),
            );
            conds.insert(
                i + 2,
                Condition::Temporal(TemporalConstraint::Le(TimeExpr::var(&v), TimeExpr::Const(n))),
            );
            i += 2;
        }
        i += 1;
    }
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

/// Variables with no other variable strictly above them in the closure;
/// equality classes collapse to their first representative.
fn maximal_vars(vars: &[String], closure: &DifferenceClosure) -> Vec<String> {
    let exprs: Vec<TimeExpr> = vars.iter().map(|v| TimeExpr::var(v)).collect();
    maximal_exprs(&exprs, closure)
        .into_iter()
        .filter_map(|e| e.var_name().map(str::to_string))
        .collect()
}

/// Time expressions with nothing strictly above them in the closure;
/// equality classes collapse to their first representative.
fn maximal_exprs(exprs: &[TimeExpr], closure: &DifferenceClosure) -> Vec<TimeExpr> {
    let above = |v: &TimeExpr, u: &TimeExpr| {
        closure.entails_le(v, u) && !closure.entails_le(u, v)
    };
    let mut out: Vec<TimeExpr> = Vec::new();
    'next: for v in exprs {
        if exprs.iter().any(|u| u != v && above(v, u)) {
            continue;
        }
        for kept in &out {
            if closure.entails_le(v, kept) && closure.entails_le(kept, v) {
                continue 'next; // equal to an already kept maximum
            }
        }
        out.push(v.clone());
    }
    out
}

enum AntTime {
    Zero,
    Var(String),
    /// The antecedent is already known true at this time (goal
    /// instances); no `ant` rule or body atom is emitted.
    Ground(u32),
}

impl AntTime {
    fn term(&self) -> AspTerm {
        match self {
            AntTime::Zero => AspTerm::Int(0),
            AntTime::Var(v) => AspTerm::var(v),
            AntTime::Ground(t) => AspTerm::Int(*t as i64),
        }
    }

    fn time_expr(&self) -> TimeExpr {
        match self {
            AntTime::Zero => TimeExpr::Const(0),
            AntTime::Var(v) => TimeExpr::var(v),
            AntTime::Ground(t) => TimeExpr::Const(*t),
        }
    }
}

/// A rule instance to compile: either a whole reactive rule, a residue
/// whose remaining antecedent still waits for matches, or a triggered
/// goal whose antecedent is already true at `trigger`.
#[derive(Clone, Debug)]
pub struct Instance {
    pub id: u32,
    /// Identity arguments `(X' u T')`, possibly partially ground.
    pub tuple: Vec<AspTerm>,
    pub antecedent: Vec<Condition>,
    /// `Some(t0)` marks a triggered instance.
    pub trigger: Option<u32>,
    pub disjuncts: Vec<InstanceDisjunct>,
}

/// One disjunct of an instance. `floor` is the latest timestamp of the
/// conditions already consumed, which still counts towards the
/// consequent's completion time.
#[derive(Clone, Debug)]
pub struct InstanceDisjunct {
    pub index: u32,
    pub conds: Vec<Condition>,
    pub floor: Option<u32>,
}

impl Instance {
    pub fn from_rule(rule: &ReactiveRule) -> Self {
        Instance {
            id: rule.id,
            tuple: rule
                .vars
                .shared_order
                .iter()
                .map(|v| AspTerm::var(v))
                .collect(),
            antecedent: rule.antecedent.clone(),
            trigger: None,
            disjuncts: rule
                .disjuncts
                .iter()
                .enumerate()
                .map(|(i, d)| InstanceDisjunct {
                    index: (i + 1) as u32,
                    conds: d.clone(),
                    floor: None,
                })
                .collect(),
        }
    }
}

/// Emits the `ant` rule, one `cons` rule per disjunct, and the
/// `supported` rules for every event occurrence whose action is not
/// declared proactive/preemptive.
pub fn emit_rule_mapping(
    rule: &ReactiveRule,
    n: u32,
    prefer_disjuncts: bool,
    declared_actions: &BTreeSet<String>,
) -> Result<RuleMapping, EmitError> {
    emit_instance(
        &Instance::from_rule(rule),
        n,
        prefer_disjuncts,
        declared_actions,
    )
}

/// Compiles one rule instance.
pub fn emit_instance(
    inst: &Instance,
    n: u32,
    prefer_disjuncts: bool,
    declared_actions: &BTreeSet<String>,
) -> Result<RuleMapping, EmitError> {
    let mut inst = inst.clone();
    let mut used: BTreeSet<String> = BTreeSet::new();
    for c in inst
        .antecedent
        .iter()
        .chain(inst.disjuncts.iter().flat_map(|d| d.conds.iter()))
    {
        used.extend(c.time_vars());
        used.extend(c.nontime_vars());
    }
    for t in &inst.tuple {
        let mut vs = BTreeSet::new();
        t.vars(&mut vs);
        used.extend(vs);
    }
    let mut fresh = Fresh { used };
    normalize_times(&mut inst.antecedent, &mut fresh, n);
    for d in &mut inst.disjuncts {
        normalize_times(&mut d.conds, &mut fresh, n);
    }
    let mut uses_max = false;

    let mut time_sorted: BTreeSet<String> = BTreeSet::new();
    for c in inst
        .antecedent
        .iter()
        .chain(inst.disjuncts.iter().flat_map(|d| d.conds.iter()))
    {
        time_sorted.extend(c.time_vars());
    }
    let tuple = AspTerm::Tuple(inst.tuple.clone());
    let id_term = AspTerm::Int(inst.id as i64);

    let ant_constraints: Vec<TemporalConstraint> = inst
        .antecedent
        .iter()
        .filter_map(Condition::as_temporal)
        .cloned()
        .collect();
    let ant_closure = DifferenceClosure::new(&ant_constraints);
    let ant_tvars = ordered_time_vars(&inst.antecedent);
    let ant_time_vars: BTreeSet<String> = ant_tvars.iter().cloned().collect();

    // ant head timestamp: the maximum antecedent time variable, with a
    // max/3 chain only when the variables are not totally ordered.
    let mut ant_extra: Vec<AspLiteral> = Vec::new();
    let ant_time = match inst.trigger {
        Some(t0) => AntTime::Ground(t0),
        None if ant_tvars.is_empty() => AntTime::Zero,
        None => {
            let maxima = maximal_vars(&ant_tvars, &ant_closure);
            if maxima.len() == 1 {
                AntTime::Var(maxima[0].clone())
            } else {
                let maxima: Vec<TimeExpr> = maxima.iter().map(|v| TimeExpr::var(v)).collect();
                let (chain, head) = max_chain(&maxima, &mut fresh, &mut uses_max);
                ant_extra = chain;
                ant_extra.push(time_atom(AspTerm::var(&head)));
                AntTime::Var(head)
            }
        }
    };

    let ant_head = AspAtom::new(
        "ant",
        vec![id_term.clone(), tuple.clone(), ant_time.term()],
    );
    let ant_rule = match ant_time {
        AntTime::Ground(_) => None,
        _ if inst.antecedent.is_empty() => Some(AspRule::Fact(ant_head.clone())),
        _ => {
            let mut body: Vec<AspLiteral> = inst
                .antecedent
                .iter()
                .map(|c| reify(c, n, &mut uses_max))
                .collect();
            body.extend(ant_extra);
            let mut r = AspRule::Normal {
                head: ant_head.clone(),
                body,
            };
            repair_safety(&mut r, &time_sorted, inst.id)?;
            Some(r)
        }
    };
    let ant_body_atom = match ant_time {
        AntTime::Ground(_) => None,
        _ => Some(ant_head.clone()),
    };

    // cons rules
    let mut cons_rules = Vec::new();
    for d in &inst.disjuncts {
        let mut combined = ant_constraints.clone();
        combined.extend(d.conds.iter().filter_map(Condition::as_temporal).cloned());
        let closure = DifferenceClosure::new(&combined);
         let mut candidates: Vec<TimeExpr> = Vec::new();
        if let Some(fl) = d.floor {
            candidates.push(TimeExpr::Const(fl));
        }
        for v in ordered_time_vars(&d.conds) {
            candidates.push(TimeExpr::var(&v));
        }
        let mut extra: Vec<AspLiteral> = Vec::new();
        let ts_term = if candidates.is_empty() {
            ant_time.term()
        } else {
            let maxima = maximal_exprs(&candidates, &closure);
            if maxima.len() == 1 {
                time_to_asp(&maxima[0])
            } else {
                let (chain, head) = max_chain(&maxima, &mut fresh, &mut uses_max);
                extra = chain;
                extra.push(time_atom(AspTerm::var(&head)));
                AspTerm::var(&head)
            }
        };
        let mut head_args = vec![id_term.clone()];
        if prefer_disjuncts {
            head_args.push(AspTerm::Int(d.index as i64));
        }
        head_args.extend([tuple.clone(), ant_time.term(), ts_term]);
        let head = AspAtom::new("cons", head_args);
        let mut body = Vec::new();
        if let Some(ant) = &ant_body_atom {
            body.push(AspLiteral::Pos(ant.clone()));
        }
        body.extend(d.conds.iter().map(|c| reify(c, n, &mut uses_max)));
        body.extend(extra);
        let mut r = AspRule::Normal { head, body };
        repair_safety(&mut r, &time_sorted, inst.id)?;
        cons_rules.push(TaggedRule {
            rule: r,
            item: Item::ConsRule(inst.id, d.index),
        });
    }

    // supported rules
    let mut supported = Vec::new();
    for d in &inst.disjuncts {
        let mut combined = ant_constraints.clone();
        combined.extend(d.conds.iter().filter_map(Condition::as_temporal).cloned());
        let closure = DifferenceClosure::new(&combined);
        let mut occurrence = 0u32;
        for (j, cond) in d.conds.iter().enumerate() {
            let (act_name, act_args, act_time) = match cond {
                Condition::Event { name, args, time } => (name, args, time),
                _ => continue,
            };
            occurrence += 1;
            if declared_actions.contains(act_name) {
                continue;
            }
            let act_var = match act_time {
                TimeExpr::Var(v) => v.clone(),
                other => {
                    return Err(EmitError::UnsupportedConstraint(format!(
                        "event timestamp {other} survived normalization"
                    )))
                }
            };
            let r = emit_supported(
                &ant_time_vars,
                inst.antecedent.is_empty() && inst.trigger.is_none(),
                &d.conds,
                d.floor,
                j,
                act_name,
                act_args,
                &act_var,
                &ant_body_atom,
                &ant_time,
                &closure,
                n,
                &time_sorted,
                &mut uses_max,
                inst.id,
            )?;
            supported.push(TaggedRule {
                rule: r,
                item: Item::Supported(inst.id, d.index, occurrence),
            });
        }
    }

    Ok(RuleMapping {
        ant: ant_rule.map(|rule| TaggedRule {
            rule,
            item: Item::AntRule(inst.id),
        }),
        cons: cons_rules,
        supported,
        uses_max,
    })
}

fn max_chain(
    maxima: &[TimeExpr],
    fresh: &mut Fresh,
    uses_max: &mut bool,
) -> (Vec<AspLiteral>, String) {
    *uses_max = true;
    let mut chain = Vec::new();
    let mut acc = time_to_asp(&maxima[0]);
    for m in &maxima[1..] {
        let next = fresh.next("Ts");
        chain.push(AspLiteral::Pos(AspAtom::new(
            "max",
            vec![acc, time_to_asp(m), AspTerm::var(&next)],
        )));
        acc = AspTerm::var(&next);
    }
    let head = match acc {
        AspTerm::Var(v) => v,
        _ => unreachable!("chain of length >= 2 ends in a fresh variable"),
    };
    (chain, head)
}

#[allow(clippy::too_many_arguments)]
fn emit_supported(
    ant_time_vars: &BTreeSet<String>,
    antecedent_vacuous: bool,
    d: &[Condition],
    floor: Option<u32>,
    act_idx: usize,
    act_name: &str,
    act_args: &[Term],
    act_var: &str,
    ant_atom: &Option<AspAtom>,
    ant_time: &AntTime,
    closure: &DifferenceClosure,
    n: u32,
    time_sorted: &BTreeSet<String>,
    uses_max: &mut bool,
    rule_id: u32,
) -> Result<AspRule, EmitError> {
    let earlier: Vec<&Condition> = d[..act_idx]
        .iter()
        .filter(|c| {
            matches!(
                c,
                Condition::Event { .. } | Condition::Fluent { .. }
            )
        })
        .collect();
    let rest: Vec<&Condition> = d[act_idx + 1..]
        .iter()
        .filter(|c| {
            matches!(
                c,
                Condition::Event { .. } | Condition::Fluent { .. }
            )
        })
        .collect();
    let aux_lits: Vec<&Condition> = d
        .iter()
        .filter(|c| matches!(c, Condition::Aux { .. } | Condition::Compare { .. }))
        .collect();

    let earlier_ts: BTreeSet<String> = earlier
        .iter()
        .filter_map(|c| c.time().and_then(|t| t.var_name()).map(str::to_string))
        .collect();
    let mut rest_only: BTreeSet<String> = BTreeSet::new();
    for v in ordered_time_vars(d) {
        if !ant_time_vars.contains(&v) && v != act_var && !earlier_ts.contains(&v) {
            rest_only.insert(v);
        }
    }

    let mut body: Vec<AspLiteral> = Vec::new();
    if let Some(ant) = ant_atom {
        body.push(AspLiteral::Pos(ant.clone()));
    }
    for c in &earlier {
        body.push(reify(c, n, uses_max));
    }
    for c in &aux_lits {
        body.push(reify(c, n, uses_max));
    }
    // Temporal constraints: those touching rest-only variables express
    // the future satisfiability of the rest of the disjunct.
    let mut body_cs = Vec::new();
    let mut rest_cs = Vec::new();
    for c in d {
        if let Condition::Temporal(tc) = c {
            if tc.vars().iter().any(|v| rest_only.contains(v)) {
                rest_cs.push(reify(c, n, uses_max));
            } else {
                body_cs.push(reify(c, n, uses_max));
            }
        }
    }
    body.extend(body_cs);
    body.extend(rest_cs);

    // Sequencing: everything already true must sit strictly before the
    // action and the rest of the disjunct. Constraints entailed by the
    // rule's own temporal constraints are not repeated.
    let mut group1: Vec<TimeExpr> = Vec::new();
    if !antecedent_vacuous {
        match ant_time {
            AntTime::Var(v) => group1.push(TimeExpr::var(v)),
            AntTime::Ground(_) | AntTime::Zero => group1.push(ant_time.time_expr()),
        }
    }
    if let Some(fl) = floor {
        group1.push(TimeExpr::Const(fl));
    }
    group1.extend(earlier.iter().filter_map(|c| c.time().cloned()));
    let mut group2: Vec<TimeExpr> = vec![TimeExpr::var(act_var)];
    group2.extend(rest.iter().filter_map(|c| c.time().cloned()));
    for u in &group1 {
        for v in &group2 {
            if !closure.entails_lt(u, v) {
                body.push(AspLiteral::Cmp(CmpSym::Lt, time_to_asp(u), time_to_asp(v)));
            }
        }
    }

    // Equality inlining: a variable defined by an equality, absent from
    // the head and the ant atom, with at most one other occurrence, is
    // substituted away; its time guard follows the substitution for
    // rest-only variables and is dropped otherwise.
    inline_equalities(&mut body, act_var, act_args, ant_atom, &rest_only);

    dedupe(&mut body);
    let head = AspAtom::new(
        "supported",
        vec![atom_term(act_name, act_args), AspTerm::var(act_var)],
    );
    let mut r = AspRule::Normal { head, body };
    repair_safety(&mut r, time_sorted, rule_id)?;
    Ok(r)
}

fn inline_equalities(
    body: &mut Vec<AspLiteral>,
    act_var: &str,
    act_args: &[Term],
    ant_atom: &Option<AspAtom>,
    rest_only: &BTreeSet<String>,
) {
    let mut protected: BTreeSet<String> = BTreeSet::new();
    protected.insert(act_var.to_string());
    for a in act_args {
        let mut vs = Vec::new();
        a.collect_vars(&mut vs);
        protected.extend(vs);
    }
    if let Some(ant) = ant_atom {
        ant.vars(&mut protected);
    }

    // An equality `V = e` (or `V+k = e`, solved for `V`) can eliminate V.
    let solve = |x: &AspTerm, y: &AspTerm| -> Option<(String, AspTerm)> {
        match x {
            AspTerm::Var(v) => Some((v.clone(), y.clone())),
            AspTerm::Func(op, args) if (op == "+" || op == "-") && args.len() == 2 => {
                match (&args[0], &args[1]) {
                    (AspTerm::Var(v), AspTerm::Int(k)) => {
                        let inverted = if op == "+" { -k } else { *k };
                        Some((v.clone(), simplify_term(&AspTerm::plus(y.clone(), inverted))))
                    }
                    _ => None,
                }
            }
            _ => None,
        }
    };
    loop {
        let mut chosen: Option<(usize, String, AspTerm)> = None;
        'scan: for (i, lit) in body.iter().enumerate() {
            if let AspLiteral::Cmp(CmpSym::Eq, a, b) = lit {
                for (x, y) in [(a, b), (b, a)] {
                    let Some((v, e)) = solve(x, y) else { continue };
                    let v = &v;
                    let e = &e;
                    if protected.contains(v) {
                        continue;
                    }
                    let mut evars = BTreeSet::new();
                    e.vars(&mut evars);
                    if evars.contains(v) {
                        continue;
                    }
                    let occurrences = body
                        .iter()
                        .enumerate()
                        .filter(|(j, l)| {
                            *j != i && !is_time_guard_of(l, v) && {
                                let mut vs = BTreeSet::new();
                                l.vars(&mut vs);
                                vs.contains(v)
                            }
                        })
                        .count();
                    if occurrences <= 1 {
                        chosen = Some((i, v.clone(), e.clone()));
                        break 'scan;
                    }
                }
            }
        }
        let Some((idx, var, expr)) = chosen else { break };
        body.remove(idx);
        let keep_guard = rest_only.contains(&var);
        let mut sub = AspSubst::new();
        sub.insert(var.clone(), expr);
        let mut out = Vec::new();
        for l in body.iter() {
            if is_time_guard_of(l, &var) {
                if keep_guard {
                    out.push(simplify_literal(&l.apply(&sub)));
                }
            } else {
                out.push(simplify_literal(&l.apply(&sub)));
            }
        }
        *body = out;
    }
}

fn is_time_guard_of(l: &AspLiteral, v: &str) -> bool {
    matches!(l, AspLiteral::Pos(a) if a.name == "time" && a.args.len() == 1
        && matches!(&a.args[0], AspTerm::Var(x) if x == v))
}

/// Folds additive chains over a single variable: `(V+1)-1` becomes `V`.
fn simplify_term(t: &AspTerm) -> AspTerm {
    fn split(t: &AspTerm) -> Option<(Option<String>, i64)> {
        match t {
            AspTerm::Int(i) => Some((None, *i)),
            AspTerm::Var(v) => Some((Some(v.clone()), 0)),
            AspTerm::Func(op, args) if (op == "+" || op == "-") && args.len() == 2 => {
                let (vb, kb) = split(&args[1])?;
                if vb.is_some() {
                    return None;
                }
                let (va, ka) = split(&args[0])?;
                Some((va, if op == "+" { ka + kb } else { ka - kb }))
            }
            _ => None,
        }
    }
    match split(t) {
        Some((None, k)) => AspTerm::Int(k),
        Some((Some(v), k)) => AspTerm::plus(AspTerm::Var(v), k),
        None => match t {
            AspTerm::Func(f, args) => {
                AspTerm::Func(f.clone(), args.iter().map(simplify_term).collect())
            }
            AspTerm::Tuple(args) => AspTerm::Tuple(args.iter().map(simplify_term).collect()),
            other => other.clone(),
        },
    }
}

fn simplify_literal(l: &AspLiteral) -> AspLiteral {
    match l {
        AspLiteral::Pos(a) => AspLiteral::Pos(AspAtom {
            name: a.name.clone(),
            args: a.args.iter().map(simplify_term).collect(),
        }),
        AspLiteral::Neg(a) => AspLiteral::Neg(AspAtom {
            name: a.name.clone(),
            args: a.args.iter().map(simplify_term).collect(),
        }),
        AspLiteral::Cmp(op, a, b) => AspLiteral::Cmp(*op, simplify_term(a), simplify_term(b)),
    }
}

fn dedupe(body: &mut Vec<AspLiteral>) {
    let mut seen = BTreeSet::new();
    body.retain(|l| seen.insert(l.clone()));
}

/// Appends `time(V)` for unsafe time variables; unsafe non-time
/// variables are an error.
fn repair_safety(
    rule: &mut AspRule,
    time_sorted: &BTreeSet<String>,
    rule_id: u32,
) -> Result<(), EmitError> {
    let mut positive = BTreeSet::new();
    for l in rule.body() {
        if let AspLiteral::Pos(a) = l {
            a.vars(&mut positive);
        }
    }
    let vars = rule.all_vars();
    let mut fixes = Vec::new();
    for v in &vars {
        if !positive.contains(v) {
            if time_sorted.contains(v) {
                fixes.push(time_atom(AspTerm::var(v)));
            } else {
                return Err(EmitError::UnsafeVariable {
                    rule: rule_id,
                    var: v.clone(),
                });
            }
        }
    }
    if let Some(body) = rule.body_mut() {
        body.extend(fixes);
    }
    Ok(())
}

// ------------------------------------------------------------ translate

/// The full Reactive ASP mapping of an n-distant framework.
pub fn translate(f: &Framework, opts: &EmitOptions) -> Result<AspProgram, EmitError> {
    let n = match (f.horizon, opts.horizon) {
        (Some(n), None) => n,
        (Some(n), Some(m)) if n == m => n,
        (Some(_), Some(_)) => return Err(EmitError::NotNDistant),
        (None, _) => return Err(EmitError::NotNDistant),
    };
    let declared: BTreeSet<String> = opts
        .actions
        .iter()
        .map(|a| a.template.name.clone())
        .collect();

    let mut mappings = Vec::new();
    let mut uses_max = false;
    for r in &f.rules {
        let m = emit_rule_mapping(r, n, opts.prefer_disjuncts, &declared)?;
        uses_max |= m.uses_max;
        mappings.push(m);
    }

    let mut p = AspProgram::default();
    p.push(
        Item::TimeRange,
        AspRule::Fact(AspAtom::new("time", vec![AspTerm::Range(0, n as i64)])),
    );
    if uses_max {
        emit_max_def(&mut p);
    }
    for a in &f.aux {
        p.push(
            Item::AuxFact,
            AspRule::Fact(AspAtom::new(&a.name, a.args.iter().map(term_to_asp).collect())),
        );
    }
    for fl in &f.initial_state {
        p.push(
            Item::InitialState,
            AspRule::Fact(holds(atom_term(&fl.name, &fl.args), AspTerm::Int(0))),
        );
    }
    for (t, evs) in &f.ext {
        for e in evs {
            p.push(
                Item::ExternalEvent,
                AspRule::Fact(happens(atom_term(&e.name, &e.args), AspTerm::Int(*t as i64))),
            );
        }
    }
    emit_post(&mut p, f)?;
    for m in &mappings {
        p.rules.extend(m.ant.iter().cloned());
        p.rules.extend(m.cons.iter().cloned());
    }
    emit_reactive_constraint(&mut p, opts);
    let mut any_supported = false;
    for m in &mappings {
        any_supported |= !m.supported.is_empty();
        p.rules.extend(m.supported.iter().cloned());
    }
    if any_supported {
        p.push(Item::ChoiceSupported, choice_rule_supported(0));
    }
    if !opts.actions.is_empty() {
        for decl in &opts.actions {
            let head = AspAtom::new(
                "action",
                vec![atom_term(&decl.template.name, &decl.template.args)],
            );
            let mut dummy = false;
            let body: Vec<AspLiteral> =
                decl.guard.iter().map(|c| reify(c, n, &mut dummy)).collect();
            let rule = if body.is_empty() {
                AspRule::Fact(head)
            } else {
                AspRule::Normal { head, body }
            };
            rule.check_safety()
                .map_err(|e| EmitError::UnsafeVariable { rule: 0, var: e })?;
            p.push(Item::ActionDecl, rule);
        }
        p.push(Item::ChoiceAction, choice_rule_action(0));
    }
    emit_pre(&mut p, f, n)?;
    emit_event_theory(&mut p);
    let prefs = emit_preferences(opts)?;
    p.rules.extend(prefs);
    if opts.bad_rule {
        let mut max_level: i64 = 0;
        for w in &opts.weak {
            if let AspRule::Weak {
                level: AspTerm::Int(l),
                ..
            } = w
            {
                max_level = max_level.max(*l);
            }
        }
        if opts.prefer_disjuncts {
            let most = f.rules.iter().map(|r| r.disjuncts.len()).max().unwrap_or(0);
            max_level = max_level.max(most as i64);
        }
        p.push(
            Item::BadRulePreference,
            AspRule::Weak {
                body: vec![AspLiteral::Pos(AspAtom::new(
                    "badRule",
                    vec![AspTerm::var("ID"), AspTerm::var("Args"), AspTerm::var("Ts")],
                ))],
                weight: AspTerm::Int(1),
                level: AspTerm::Int(max_level + 1),
                terms: vec![AspTerm::var("ID"), AspTerm::var("Args"), AspTerm::var("Ts")],
            },
        );
    }
    Ok(p)
}

fn emit_max_def(p: &mut AspProgram) {
    let (x, y) = (AspTerm::var("X"), AspTerm::var("Y"));
    p.push(
        Item::MaxDef,
        AspRule::Normal {
            head: AspAtom::new("max", vec![x.clone(), y.clone(), x.clone()]),
            body: vec![
                time_atom(x.clone()),
                time_atom(y.clone()),
                AspLiteral::Cmp(CmpSym::Le, y.clone(), x.clone()),
            ],
        },
    );
    p.push(
        Item::MaxDef,
        AspRule::Normal {
            head: AspAtom::new("max", vec![x.clone(), y.clone(), y.clone()]),
            body: vec![
                time_atom(x.clone()),
                time_atom(y.clone()),
                AspLiteral::Cmp(CmpSym::Lt, x, y),
            ],
        },
    );
}

fn emit_post(p: &mut AspProgram, f: &Framework) -> Result<(), EmitError> {
    for entry in &f.causal.post {
        let name = match entry.effect {
            EffectKind::Initiates => "initiates",
            EffectKind::Terminates => "terminates",
        };
        let head = AspAtom::new(
            name,
            vec![
                atom_term(&entry.event.name, &entry.event.args),
                atom_term(&entry.fluent.name, &entry.fluent.args),
            ],
        );
        let mut dummy = false;
        let body: Vec<AspLiteral> = entry
            .guard
            .iter()
            .map(|c| reify(c, f.horizon.unwrap_or(0), &mut dummy))
            .collect();
        let rule = if body.is_empty() {
            AspRule::Fact(head)
        } else {
            AspRule::Normal { head, body }
        };
        rule.check_safety()
            .map_err(|var| EmitError::UnsafeVariable { rule: 0, var })?;
        p.push(Item::CausalPost, rule);
    }
    Ok(())
}

pub fn emit_reactive_constraint(p: &mut AspProgram, opts: &EmitOptions) {
    let (id, x, ts, ts1) = (
        AspTerm::var("ID"),
        AspTerm::var("X"),
        AspTerm::var("Ts"),
        AspTerm::var("Ts1"),
    );
    let ant = AspAtom::new("ant", vec![id.clone(), x.clone(), ts.clone()]);
    let cons_true = AspAtom::new("consTrue", vec![id.clone(), x.clone(), ts.clone()]);
    let body = vec![
        AspLiteral::Pos(ant),
        AspLiteral::Neg(cons_true.clone()),
        time_atom(ts.clone()),
    ];
    if opts.bad_rule {
        p.push(
            Item::ReactiveConstraint,
            AspRule::Normal {
                head: AspAtom::new("badRule", vec![id.clone(), x.clone(), ts.clone()]),
                body,
            },
        );
    } else {
        p.push(Item::ReactiveConstraint, AspRule::Constraint { body });
    }
    let cons_args = if opts.prefer_disjuncts {
        vec![id, AspTerm::var("I"), x, ts, ts1.clone()]
    } else {
        vec![id, x, ts, ts1.clone()]
    };
    p.push(
        Item::ConsTrueRule,
        AspRule::Normal {
            head: cons_true,
            body: vec![
                AspLiteral::Pos(AspAtom::new("cons", cons_args)),
                time_atom(ts1),
            ],
        },
    );
}

/// `0{happens(Act,Ts)}1 :- supported(Act,Ts), time(Ts), Ts>lower.`
pub fn choice_rule_supported(lower: i64) -> AspRule {
    let (act, ts) = (AspTerm::var("Act"), AspTerm::var("Ts"));
    AspRule::Choice {
        low: 0,
        high: 1,
        head: happens(act.clone(), ts.clone()),
        body: vec![
            AspLiteral::Pos(AspAtom::new("supported", vec![act, ts.clone()])),
            time_atom(ts.clone()),
            AspLiteral::Cmp(CmpSym::Gt, ts, AspTerm::Int(lower)),
        ],
    }
}

pub fn choice_rule_action(lower: i64) -> AspRule {
    let (act, ts) = (AspTerm::var("Act"), AspTerm::var("Ts"));
    AspRule::Choice {
        low: 0,
        high: 1,
        head: happens(act.clone(), ts.clone()),
        body: vec![
            AspLiteral::Pos(AspAtom::new("action", vec![act])),
            time_atom(ts.clone()),
            AspLiteral::Cmp(CmpSym::Gt, ts, AspTerm::Int(lower)),
        ],
    }
}

fn emit_pre(p: &mut AspProgram, f: &Framework, n: u32) -> Result<(), EmitError> {
    for (i, pre) in f.causal.pre.iter().enumerate() {
        p.push(Item::CPre(i as u32 + 1), pre_constraint(&pre.body, n)?);
    }
    Ok(())
}

/// Builds the constraint for one C_pre body: events at `Ts`, fluents at
/// `Ts-1`, guarded by the needed `time` atoms.
pub fn pre_constraint(body_conds: &[Condition], n: u32) -> Result<AspRule, EmitError> {
    let ev_time = body_conds
        .iter()
        .find(|c| matches!(c, Condition::Event { .. }))
        .and_then(|c| c.time())
        .cloned()
        .ok_or_else(|| {
            EmitError::UnsupportedConstraint("C_pre body has no event atom".to_string())
        })?;
    // Rebase so events sit at a plain variable (or constant).
    let conds: Vec<Condition> = match ev_time.parts() {
        (Some(v), k) if k != 0 => {
            let mut used: BTreeSet<String> = BTreeSet::new();
            for c in body_conds {
                used.extend(c.time_vars());
            }
            let mut fresh = Fresh { used };
            let ts = fresh.next("Ts");
            let mut theta_shift = |te: &TimeExpr| -> TimeExpr {
                match te.parts() {
                    (Some(b), j) if b == v => TimeExpr::offset(&ts, j - k),
                    _ => te.clone(),
                }
            };
            body_conds
                .iter()
                .map(|c| shift_cond_times(c, &mut theta_shift))
                .collect()
        }
        _ => body_conds.to_vec(),
    };
    let ev_time = conds
        .iter()
        .find(|c| matches!(c, Condition::Event { .. }))
        .and_then(|c| c.time())
        .cloned()
        .unwrap();
    let has_fluent = conds.iter().any(|c| matches!(c, Condition::Fluent { .. }));
    let mut dummy = false;
    let mut body: Vec<AspLiteral> = conds.iter().map(|c| reify(c, n, &mut dummy)).collect();
    if has_fluent {
        body.push(time_atom(simplify_term(&time_to_asp(&ev_time.shift(-1)))));
    }
    body.push(time_atom(time_to_asp(&ev_time)));
    dedupe(&mut body);
    Ok(AspRule::Constraint { body })
}

fn shift_cond_times(c: &Condition, f: &mut impl FnMut(&TimeExpr) -> TimeExpr) -> Condition {
    match c {
        Condition::Fluent {
            name,
            args,
            positive,
            time,
        } => Condition::Fluent {
            name: name.clone(),
            args: args.clone(),
            positive: *positive,
            time: f(time),
        },
        Condition::Event { name, args, time } => Condition::Event {
            name: name.clone(),
            args: args.clone(),
            time: f(time),
        },
        Condition::Temporal(tc) => Condition::Temporal(match tc {
            TemporalConstraint::Lt(a, b) => TemporalConstraint::Lt(f(a), f(b)),
            TemporalConstraint::Le(a, b) => TemporalConstraint::Le(f(a), f(b)),
            TemporalConstraint::Eq(a, b) => TemporalConstraint::Eq(f(a), f(b)),
            TemporalConstraint::Max3(a, b, m) => TemporalConstraint::Max3(f(a), f(b), f(m)),
        }),
        other => other.clone(),
    }
}

pub fn emit_event_theory(p: &mut AspProgram) {
    let (e, fl, ts) = (AspTerm::var("E"), AspTerm::var("P"), AspTerm::var("Ts"));
    let ts_m1 = AspTerm::Func("-".into(), vec![ts.clone(), AspTerm::Int(1)]);
    p.push(
        Item::EventTheory,
        AspRule::Normal {
            head: holds(fl.clone(), ts.clone()),
            body: vec![
                AspLiteral::Pos(AspAtom::new("initiates", vec![e.clone(), fl.clone()])),
                AspLiteral::Pos(happens(e.clone(), ts.clone())),
                time_atom(ts.clone()),
            ],
        },
    );
    p.push(
        Item::EventTheory,
        AspRule::Normal {
            head: holds(fl.clone(), ts.clone()),
            body: vec![
                AspLiteral::Pos(holds(fl.clone(), ts_m1.clone())),
                AspLiteral::Neg(AspAtom::new("broken", vec![fl.clone(), ts.clone()])),
                time_atom(ts_m1),
                time_atom(ts.clone()),
            ],
        },
    );
    p.push(
        Item::EventTheory,
        AspRule::Normal {
            head: AspAtom::new("broken", vec![fl.clone(), ts.clone()]),
            body: vec![
                AspLiteral::Pos(AspAtom::new("terminates", vec![e.clone(), fl])),
                AspLiteral::Pos(happens(e, ts.clone())),
                time_atom(ts),
            ],
        },
    );
}

/// The preference block: the generic disjunct-index weak constraint when
/// enabled, then user constraints verbatim after safety checking.
pub fn emit_preferences(opts: &EmitOptions) -> Result<Vec<TaggedRule>, EmitError> {
    let mut out = Vec::new();
    if opts.prefer_disjuncts {
        let args: Vec<AspTerm> = ["ID", "I", "Args", "T", "Ts"]
            .iter()
            .map(|v| AspTerm::var(v))
            .collect();
        out.push(TaggedRule {
            rule: AspRule::Weak {
                body: vec![AspLiteral::Pos(AspAtom::new("cons", args.clone()))],
                weight: AspTerm::Int(1),
                level: AspTerm::var("I"),
                terms: args,
            },
            item: Item::Preference,
        });
    }
    for w in &opts.weak {
        match w {
            AspRule::Weak { .. } => {
                w.check_safety()
                    .map_err(EmitError::UnsafeWeakConstraint)?;
                out.push(TaggedRule {
                    rule: w.clone(),
                    item: Item::Preference,
                });
            }
            other => {
                return Err(EmitError::UnsafeWeakConstraint(format!(
                    "not a weak constraint: {}",
                    serialize::rule_text(other)
                )))
            }
        }
    }
    Ok(out)
}
