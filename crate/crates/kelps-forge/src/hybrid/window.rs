//! The ASP side of the hybrid loop: compile the current hybrid state
//! into a window program `[T, T+k]`, and rewrite a window program
//! directly into the next one from the events and state of a cycle,
//! mirroring the KELPS-side processing by resolution.

use std::collections::{BTreeMap, BTreeSet};

use super::{HybridError, HybridState};
use crate::asp::translate::{
    choice_rule_action, choice_rule_supported, emit_instance, pre_constraint, term_to_asp,
    EmitOptions, Instance, InstanceDisjunct,
};
use crate::asp::{
    canonical_rule, AspAtom, AspLiteral, AspProgram, AspRule, AspSubst, AspTerm, CmpSym, Item,
    TaggedRule,
};
use crate::syntax::{
    Condition, EffectKind, GroundAtom, ReactiveRule, Term, TemporalConstraint, TimeExpr,
};
use crate::temporal::DifferenceClosure;

pub(crate) fn asp_ground_atom(t: &AspTerm) -> Option<GroundAtom> {
    fn conv(t: &AspTerm) -> Option<Term> {
        match t {
            AspTerm::Sym(s) => Some(Term::Const(s.clone())),
            AspTerm::Int(i) => Some(Term::Int(*i)),
            AspTerm::Func(f, args) => Some(Term::Compound(
                f.clone(),
                args.iter().map(conv).collect::<Option<Vec<_>>>()?,
            )),
            _ => None,
        }
    }
    match t {
        AspTerm::Sym(s) => Some(GroundAtom::new(s, vec![])),
        AspTerm::Func(f, args) => Some(GroundAtom::new(
            f,
            args.iter().map(conv).collect::<Option<Vec<_>>>()?,
        )),
        _ => None,
    }
}

fn has_bound(conds: &[Condition], var: &str, n: u32) -> bool {
    conds.iter().any(|c| {
        matches!(c.as_temporal(),
            Some(TemporalConstraint::Le(TimeExpr::Var(v), TimeExpr::Const(k))) if v == var && *k == n)
    })
}

fn bound_list(conds: &mut Vec<Condition>, end: u32, skip: &BTreeSet<String>) {
    let mut vars: Vec<String> = Vec::new();
    for c in conds.iter() {
        for v in c.time_vars() {
            if !skip.contains(&v) && !vars.contains(&v) {
                vars.push(v);
            }
        }
    }
    for v in vars {
        if !has_bound(conds, &v, end) {
            conds.push(Condition::Temporal(TemporalConstraint::Le(
                TimeExpr::var(&v),
                TimeExpr::Const(end),
            )));
        }
    }
}

fn bound_rule(rule: &ReactiveRule, end: u32) -> ReactiveRule {
    let mut r = rule.clone();
    bound_list(&mut r.antecedent, end, &BTreeSet::new());
    let universal: BTreeSet<String> = r.vars.ant_time.iter().cloned().collect();
    for d in &mut r.disjuncts {
        bound_list(d, end, &universal);
    }
    ReactiveRule::new(r.id, r.antecedent, r.disjuncts)
}

/// Ground simplification shared by the window compiler and the rewrite:
/// pinned equalities are substituted through the rule (head included),
/// ground comparisons are evaluated, and ground `time` atoms are checked
/// against the window range. `None` means the rule body is unsatisfiable.
/// A `time` guard below the window start is dropped rather than fatal:
/// the companion past-time atoms are underivable anyway, and the
/// published per-cycle listings keep such vacuous rules.
pub fn ground_simplify(rule: &AspRule, _lo: i64, hi: i64) -> Option<AspRule> {
    let mut rule = rule.clone();
    loop {
        let body = match rule.body_mut() {
            Some(b) => b,
            None => return Some(rule),
        };
        // Substitute one pinned equality (`V = g`, `V+k = g`).
        let mut pin: Option<(usize, String, AspTerm)> = None;
        for (i, l) in body.iter().enumerate() {
            if let AspLiteral::Cmp(CmpSym::Eq, a, b) = l {
                let (a, b) = (a.eval(), b.eval());
                let solved = solve_pin(&a, &b).or_else(|| solve_pin(&b, &a));
                if let Some((v, g)) = solved {
                    pin = Some((i, v, g));
                    break;
                }
            }
        }
        if let Some((i, v, g)) = pin {
            rule.body_mut().unwrap().remove(i);
            let mut sub = AspSubst::new();
            sub.insert(v, g);
            rule = crate::asp::apply_rule(&rule, &sub);
            continue;
        }
        // Evaluate ground literals.
        let body = rule.body_mut().unwrap();
        let mut changed = false;
        let mut dead = false;
        body.retain(|l| match l {
            AspLiteral::Cmp(op, a, b) => {
                let (a, b) = (a.eval(), b.eval());
                match (&a, &b) {
                    (AspTerm::Int(x), AspTerm::Int(y)) => {
                        if op.eval(*x, *y) {
                            changed = true;
                            false
                        } else {
                            dead = true;
                            true
                        }
                    }
                    _ if a.is_ground() && b.is_ground() => {
                        let ok = match op {
                            CmpSym::Eq => a == b,
                            CmpSym::Ne => a != b,
                            _ => false,
                        };
                        if ok {
                            changed = true;
                            false
                        } else {
                            dead = true;
                            true
                        }
                    }
                    _ => true,
                }
            }
            AspLiteral::Pos(atom) if atom.name == "time" && atom.args.len() == 1 => {
                match atom.args[0].eval() {
                    AspTerm::Int(c) => {
                        if c > hi {
                            dead = true;
                            true
                        } else {
                            changed = true;
                            false
                        }
                    }
                    _ => true,
                }
            }
            _ => true,
        });
        if dead {
            return None;
        }
        if !changed {
            break;
        }
    }
    if let Some(body) = rule.body_mut() {
        // Fold ground arithmetic left behind by substitution (3+1 -> 4).
        for l in body.iter_mut() {
            *l = eval_literal(l);
        }
        let mut seen = BTreeSet::new();
        body.retain(|l| seen.insert(l.clone()));
    }
    if let AspRule::Normal { head, .. } | AspRule::Choice { head, .. } = &mut rule {
        *head = head.eval();
    }
    if let AspRule::Fact(head) = &mut rule {
        *head = head.eval();
    }
    Some(rule)
}

fn eval_literal(l: &AspLiteral) -> AspLiteral {
    match l {
        AspLiteral::Pos(a) => AspLiteral::Pos(a.eval()),
        AspLiteral::Neg(a) => AspLiteral::Neg(a.eval()),
        AspLiteral::Cmp(op, x, y) => AspLiteral::Cmp(*op, x.eval(), y.eval()),
    }
}

/// `V = g` or `V+k = g` pins `V`.
fn solve_pin(lhs: &AspTerm, rhs: &AspTerm) -> Option<(String, AspTerm)> {
    if !rhs.is_ground() {
        return None;
    }
    match lhs {
        AspTerm::Var(v) => Some((v.clone(), rhs.clone())),
        AspTerm::Func(op, args) if (op == "+" || op == "-") && args.len() == 2 => {
            match (&args[0], &args[1], rhs.eval()) {
                (AspTerm::Var(v), AspTerm::Int(k), AspTerm::Int(c)) => {
                    let val = if op == "+" { c - k } else { c + k };
                    Some((v.clone(), AspTerm::Int(val)))
                }
                _ => None,
            }
        }
        _ => None,
    }
}

/// Rough rank keeping programs in the translation's section order.
fn rank(item: &Item) -> u8 {
    match item {
        Item::TimeRange => 0,
        Item::MaxDef => 1,
        Item::AuxFact => 2,
        Item::InitialState => 3,
        Item::ExternalEvent => 4,
        Item::AnticipatedEvent => 5,
        Item::CausalPost => 6,
        Item::AntRule(_) | Item::ConsRule(_, _) => 7,
        Item::ReactiveConstraint => 8,
        Item::ConsTrueRule => 9,
        Item::GoalConstraint(_) => 10,
        Item::Supported(_, _, _) => 11,
        Item::ChoiceSupported => 12,
        Item::ActionDecl => 13,
        Item::ChoiceAction => 14,
        Item::CPre(_) => 15,
        Item::EventTheory => 16,
        Item::Preference | Item::BadRulePreference => 17,
    }
}

fn sort_program(p: &mut AspProgram) {
    p.rules.sort_by_key(|a| rank(&a.item));
}

/// A `supported` rule whose action time is pinned to the past can never
/// fire through the choice rule.
fn supported_expired(tr: &TaggedRule, now: u32) -> bool {
    if !matches!(tr.item, Item::Supported(_, _, _)) {
        return false;
    }
    if let Some(head) = tr.rule.head_atom() {
        if head.name == "supported" && head.args.len() == 2 {
            if let AspTerm::Int(t) = head.args[1].eval() {
                return t <= now as i64;
            }
        }
    }
    false
}

/// Compiles the current hybrid state into the window program
/// `ASP(T; T+k)`: the current state as `holds` facts at `T`, anticipated
/// events as guarded facts, the original rules plus all residues and
/// pending goals, and the shifted choice rule.
pub fn window_translate(h: &HybridState, opts: &EmitOptions) -> Result<AspProgram, HybridError> {
    let t = h.time;
    let end = t + h.window;
    let declared: BTreeSet<String> = opts
        .actions
        .iter()
        .map(|a| a.template.name.clone())
        .collect();
    let mut uses_max = false;
    let mut mapped: Vec<TaggedRule> = Vec::new();
    let mut any_supported = false;

    // Original rules, bounded to the window.
    for rule in &h.framework.rules {
        let bounded = bound_rule(rule, end);
        let m = emit_instance(&Instance::from_rule(&bounded), end, opts.prefer_disjuncts, &declared)?;
        uses_max |= m.uses_max;
        mapped.extend(m.ant.iter().cloned());
        mapped.extend(m.cons);
        any_supported |= !m.supported.is_empty();
        mapped.extend(m.supported);
    }

    // Residues contribute their partially evaluated antecedent rule; the
    // generic cons/supported rules fire through its head.
    for residue in &h.residues {
        let rule = h
            .framework
            .rules
            .iter()
            .find(|r| r.id == residue.rule_id)
            .expect("residue references a known rule");
        let tuple: Vec<AspTerm> = rule
            .vars
            .shared_order
            .iter()
            .map(|v| term_to_asp(&Term::var(v).apply(&residue.theta).eval()))
            .collect();
        let mut antecedent = residue.remaining.clone();
        bound_list(&mut antecedent, end, &BTreeSet::new());
        let inst = Instance {
            id: residue.rule_id,
            tuple,
            antecedent,
            trigger: None,
            disjuncts: vec![],
        };
        let m = emit_instance(&inst, end, opts.prefer_disjuncts, &declared)?;
        uses_max |= m.uses_max;
        for tr in m.ant.into_iter() {
            if let Some(rule) = ground_simplify(&tr.rule, t as i64, end as i64) {
                mapped.push(TaggedRule {
                    rule,
                    item: tr.item,
                });
            }
        }
    }

    // Pending goals: cons and supported rules per live alternative plus
    // the instance constraint.
    let mut goal_constraints: Vec<TaggedRule> = Vec::new();
    for goal in &h.goals {
        let tuple: Vec<AspTerm> = goal.args.iter().map(term_to_asp).collect();
        let mut disjuncts = Vec::new();
        for alt in &goal.alts {
            let mut conds = alt.remaining.clone();
            bound_list(&mut conds, end, &BTreeSet::new());
            disjuncts.push(InstanceDisjunct {
                index: alt.index,
                conds,
                floor: Some(alt.consumed_max.max(goal.trigger_time)),
            });
        }
        let inst = Instance {
            id: goal.rule_id,
            tuple: tuple.clone(),
            antecedent: vec![],
            trigger: Some(goal.trigger_time),
            disjuncts,
        };
        let m = emit_instance(&inst, end, opts.prefer_disjuncts, &declared)?;
        uses_max |= m.uses_max;
        for tr in m.cons.into_iter().chain(m.supported) {
            if let Some(rule) = ground_simplify(&tr.rule, t as i64, end as i64) {
                let tr = TaggedRule { rule, item: tr.item };
                if !supported_expired(&tr, t) {
                    any_supported |= matches!(tr.item, Item::Supported(_, _, _));
                    mapped.push(tr);
                }
            }
        }
        let cons_true = AspAtom::new(
            "consTrue",
            vec![
                AspTerm::Int(goal.rule_id as i64),
                AspTerm::Tuple(tuple),
                AspTerm::Int(goal.trigger_time as i64),
            ],
        );
        if goal.satisfied {
            goal_constraints.push(TaggedRule {
                rule: AspRule::Fact(cons_true),
                item: Item::ConsTrueRule,
            });
        } else {
            goal_constraints.push(TaggedRule {
                rule: AspRule::Constraint {
                    body: vec![AspLiteral::Neg(cons_true)],
                },
                item: Item::GoalConstraint(goal.rule_id),
            });
        }
    }

    let mut p = AspProgram::default();
    p.push(
        Item::TimeRange,
        AspRule::Fact(AspAtom::new(
            "time",
            vec![AspTerm::Range(t as i64, end as i64)],
        )),
    );
    if uses_max {
        emit_max_def_into(&mut p);
    }
    for a in &h.framework.aux {
        p.push(
            Item::AuxFact,
            AspRule::Fact(AspAtom::new(
                &a.name,
                a.args.iter().map(term_to_asp).collect(),
            )),
        );
    }
    for fl in &h.state {
        p.push(
            Item::InitialState,
            AspRule::Fact(AspAtom::new(
                "holds",
                vec![
                    crate::asp::translate::atom_term(&fl.name, &fl.args),
                    AspTerm::Int(t as i64),
                ],
            )),
        );
    }
    for (at, evs) in &h.anticipated {
        if *at > t && *at <= end {
            for e in evs {
                p.push(
                    Item::AnticipatedEvent,
                    AspRule::Normal {
                        head: AspAtom::new(
                            "happens",
                            vec![
                                crate::asp::translate::atom_term(&e.name, &e.args),
                                AspTerm::Int(*at as i64),
                            ],
                        ),
                        body: vec![AspLiteral::Pos(AspAtom::new(
                            "time",
                            vec![AspTerm::Int(*at as i64)],
                        ))],
                    },
                );
            }
        }
    }
    emit_post_into(&mut p, h)?;
    let mut ants: Vec<TaggedRule> = Vec::new();
    let mut conses: Vec<TaggedRule> = Vec::new();
    let mut supports: Vec<TaggedRule> = Vec::new();
    for tr in mapped {
        match tr.item {
            Item::AntRule(_) => ants.push(tr),
            Item::ConsRule(_, _) => conses.push(tr),
            _ => supports.push(tr),
        }
    }
    p.rules.extend(ants);
    p.rules.extend(conses);
    crate::asp::translate::emit_reactive_constraint(&mut p, opts);
    p.rules.extend(goal_constraints);
    p.rules.extend(supports);
    if any_supported {
        p.push(Item::ChoiceSupported, choice_rule_supported(t as i64));
    }
    if !opts.actions.is_empty() {
        for decl in &opts.actions {
            p.push(
                Item::ActionDecl,
                AspRule::Fact(AspAtom::new(
                    "action",
                    vec![crate::asp::translate::atom_term(
                        &decl.template.name,
                        &decl.template.args,
                    )],
                )),
            );
        }
        p.push(Item::ChoiceAction, choice_rule_action(t as i64));
    }
    for (i, pre) in h.framework.causal.pre.iter().enumerate() {
        p.push(Item::CPre(i as u32 + 1), pre_constraint(&pre.body, end)?);
    }
    crate::asp::translate::emit_event_theory(&mut p);
    let prefs = crate::asp::translate::emit_preferences(opts)?;
    p.rules.extend(prefs);
    Ok(p)
}

fn emit_max_def_into(p: &mut AspProgram) {
    let (x, y) = (AspTerm::var("X"), AspTerm::var("Y"));
    p.push(
        Item::MaxDef,
        AspRule::Normal {
            head: AspAtom::new("max", vec![x.clone(), y.clone(), x.clone()]),
            body: vec![
                AspLiteral::Pos(AspAtom::new("time", vec![x.clone()])),
                AspLiteral::Pos(AspAtom::new("time", vec![y.clone()])),
                AspLiteral::Cmp(CmpSym::Le, y.clone(), x.clone()),
            ],
        },
    );
    p.push(
        Item::MaxDef,
        AspRule::Normal {
            head: AspAtom::new("max", vec![x.clone(), y.clone(), y.clone()]),
            body: vec![
                AspLiteral::Pos(AspAtom::new("time", vec![x.clone()])),
                AspLiteral::Pos(AspAtom::new("time", vec![y.clone()])),
                AspLiteral::Cmp(CmpSym::Lt, x, y),
            ],
        },
    );
}

fn emit_post_into(p: &mut AspProgram, h: &HybridState) -> Result<(), HybridError> {
    for entry in &h.framework.causal.post {
        let name = match entry.effect {
            EffectKind::Initiates => "initiates",
            EffectKind::Terminates => "terminates",
        };
        let head = AspAtom::new(
            name,
            vec![
                crate::asp::translate::atom_term(&entry.event.name, &entry.event.args),
                crate::asp::translate::atom_term(&entry.fluent.name, &entry.fluent.args),
            ],
        );
        let mut dummy = false;
        let body: Vec<AspLiteral> = entry
            .guard
            .iter()
            .map(|c| crate::asp::translate::reify(c, u32::MAX, &mut dummy))
            .collect();
        let rule = if body.is_empty() {
            AspRule::Fact(head)
        } else {
            AspRule::Normal { head, body }
        };
        p.push(Item::CausalPost, rule);
    }
    Ok(())
}

// -------------------------------------------------------------- rewrite

/// Inputs of one direct rewriting step: the events executed in
/// `[T, T+1)`, the updated state at `T+1`, and any foreknowledge that
/// arrived during the cycle.
#[derive(Clone, Debug, Default)]
pub struct RewriteInputs {
    pub events: BTreeSet<GroundAtom>,
    pub fluents: BTreeSet<GroundAtom>,
    pub anticipated_new: BTreeMap<u32, BTreeSet<GroundAtom>>,
}

fn fact_atom(name: &str, a: &GroundAtom, t: u32) -> AspAtom {
    AspAtom::new(
        name,
        vec![
            crate::asp::translate::atom_term(&a.name, &a.args),
            AspTerm::Int(t as i64),
        ],
    )
}

fn has_pos_ant(rule: &AspRule) -> bool {
    rule.body()
        .iter()
        .any(|l| matches!(l, AspLiteral::Pos(a) if a.name == "ant"))
}

/// Whether a rule with an `ant` head can still fire at or after `lower`:
/// its event and fluent literals need timestamps `>= lower` consistent
/// with its comparisons and `time` guards.
fn ant_rule_infeasible(rule: &AspRule, lower: u32, hi: u32) -> bool {
    let head_is_ant = rule
        .head_atom()
        .map(|h| h.name == "ant")
        .unwrap_or(false);
    if !head_is_ant {
        return false;
    }
    let mut constraints: Vec<TemporalConstraint> = Vec::new();
    let as_time = |t: &AspTerm| -> Option<TimeExpr> {
        match t.eval() {
            AspTerm::Int(i) if i >= 0 => Some(TimeExpr::Const(i as u32)),
            AspTerm::Var(v) => Some(TimeExpr::var(&v)),
            AspTerm::Func(op, args) if args.len() == 2 => match (&args[0], &args[1]) {
                (AspTerm::Var(v), AspTerm::Int(k)) if op == "+" => Some(TimeExpr::offset(v, *k)),
                (AspTerm::Var(v), AspTerm::Int(k)) if op == "-" => Some(TimeExpr::offset(v, -k)),
                _ => None,
            },
            _ => None,
        }
    };
    for l in rule.body() {
        match l {
            AspLiteral::Pos(a) if (a.name == "happens" || a.name == "holds") && a.args.len() == 2 => {
                if let Some(te) = as_time(&a.args[1]) {
                    constraints.push(TemporalConstraint::Le(TimeExpr::Const(lower), te));
                }
            }
            AspLiteral::Pos(a) if a.name == "time" && a.args.len() == 1 => {
                if let Some(te) = as_time(&a.args[0]) {
                    constraints.push(TemporalConstraint::Le(TimeExpr::Const(lower.min(hi)), te.clone()));
                    constraints.push(TemporalConstraint::Le(te, TimeExpr::Const(hi)));
                }
            }
            AspLiteral::Cmp(op, a, b) => {
                if let (Some(x), Some(y)) = (as_time(a), as_time(b)) {
                    match op {
                        CmpSym::Lt => constraints.push(TemporalConstraint::Lt(x, y)),
                        CmpSym::Le => constraints.push(TemporalConstraint::Le(x, y)),
                        CmpSym::Gt => constraints.push(TemporalConstraint::Lt(y, x)),
                        CmpSym::Ge => constraints.push(TemporalConstraint::Le(y, x)),
                        CmpSym::Eq => constraints.push(TemporalConstraint::Eq(x, y)),
                        CmpSym::Ne => {}
                    }
                }
            }
            _ => {}
        }
    }
    DifferenceClosure::new(&constraints).unsatisfiable()
}

/// Clean a resolution product: simplify, and drop negated ground
/// `happens`/`holds` literals at the boundary time plus negated ground
/// aux literals that are settled by the fact base.
fn clean_product(
    rule: &AspRule,
    lo: i64,
    hi: i64,
    t_next: u32,
    inputs: &RewriteInputs,
    aux: &BTreeSet<AspAtom>,
) -> Option<AspRule> {
    let aux_names: BTreeSet<&str> = aux.iter().map(|a| a.name.as_str()).collect();
    let mut rule = ground_simplify(rule, lo, hi)?;
    let mut dead = false;
    if let Some(body) = rule.body_mut() {
        body.retain(|l| match l {
            // Static facts settle ground positive aux literals.
            AspLiteral::Pos(a)
                if a.is_ground() && aux_names.contains(a.name.as_str()) =>
            {
                if aux.contains(&a.eval()) {
                    false
                } else {
                    dead = true;
                    true
                }
            }
            AspLiteral::Neg(a) if a.is_ground() => {
                let a = a.eval();
                let holds_now = |set: &BTreeSet<GroundAtom>| {
                    asp_ground_atom(&a.args[0])
                        .map(|g| set.contains(&g))
                        .unwrap_or(false)
                };
                match a.name.as_str() {
                    "happens" if a.args.len() == 2 => {
                        if a.args[1] == AspTerm::Int(t_next as i64) {
                            if holds_now(&inputs.events) {
                                dead = true;
                                true
                            } else {
                                false
                            }
                        } else {
                            true
                        }
                    }
                    "holds" if a.args.len() == 2 => {
                        if a.args[1] == AspTerm::Int(t_next as i64) {
                            if holds_now(&inputs.fluents) {
                                dead = true;
                                true
                            } else {
                                false
                            }
                        } else {
                            true
                        }
                    }
                    "consTrue" => true,
                    _ => {
                        if aux.contains(&a) {
                            dead = true;
                            true
                        } else {
                            false
                        }
                    }
                }
            }
            _ => true,
        });
    }
    if dead {
        None
    } else {
        Some(rule)
    }
}

/// Builds `ASP(T+1; T+1+k)` from `ASP(T; T+k)` directly: shift the time
/// range and choice bound, infer with the cycle's `happens`/`holds`
/// facts, simplify, propagate derived `ant`/`cons`/`consTrue` facts, and
/// remove consumed facts and satisfied or expired rules.
pub fn rewrite_asp(p: &AspProgram, inputs: &RewriteInputs) -> Result<AspProgram, HybridError> {
    let (lo, hi) = p
        .iter()
        .find_map(|tr| match &tr.rule {
            AspRule::Fact(a) if a.name == "time" && a.args.len() == 1 => match &a.args[0] {
                AspTerm::Range(l, h) => Some((*l, *h)),
                _ => None,
            },
            _ => None,
        })
        .ok_or_else(|| HybridError::RewriteUnsupported("no time range fact".to_string()))?;
    let t = lo as u32;
    let t_next = t + 1;
    let (new_lo, new_hi) = (lo + 1, hi + 1);

    let aux_atoms: BTreeSet<AspAtom> = p
        .iter()
        .filter(|tr| tr.item == Item::AuxFact)
        .filter_map(|tr| match &tr.rule {
            AspRule::Fact(a) => Some(a.clone()),
            _ => None,
        })
        .collect();

    // Fact-driven resolution closure over the domain rules.
    let resolvable = |item: &Item| {
        matches!(
            item,
            Item::AntRule(_)
                | Item::ConsRule(_, _)
                | Item::Supported(_, _, _)
                | Item::ReactiveConstraint
                | Item::ConsTrueRule
                | Item::GoalConstraint(_)
        )
    };
    let mut facts: Vec<AspAtom> = Vec::new();
    for e in &inputs.events {
        facts.push(fact_atom("happens", e, t_next));
    }
    for f in &inputs.fluents {
        facts.push(fact_atom("holds", f, t_next));
    }
    let pool: Vec<TaggedRule> = p
        .iter()
        .filter(|tr| resolvable(&tr.item))
        .cloned()
        .collect();
    let mut derived: Vec<TaggedRule> = Vec::new();
    let mut cons_true_facts: Vec<AspAtom> = Vec::new();
    let mut seen: BTreeSet<String> = pool.iter().map(|tr| canonical_rule(&tr.rule)).collect();
    let mut fact_idx = 0;
    while fact_idx < facts.len() {
        let fact = facts[fact_idx].clone();
        fact_idx += 1;
        let event_like = fact.name == "happens" || fact.name == "holds";
        let mut new_rules: Vec<TaggedRule> = Vec::new();
        for tr in pool.iter().chain(derived.iter()) {
            // Events and fluents resolve only into rules whose antecedent
            // guard is already discharged.
            if event_like && has_pos_ant(&tr.rule) {
                continue;
            }
            for (i, lit) in tr.rule.body().iter().enumerate() {
                let pat = match lit {
                    AspLiteral::Pos(a) if a.name == fact.name => a,
                    _ => continue,
                };
                let mut sub = AspSubst::new();
                if !crate::solver::match_asp(pat, &fact, &mut sub) {
                    continue;
                }
                let mut product = crate::asp::apply_rule(&tr.rule, &sub);
                if let Some(body) = product.body_mut() {
                    body.remove(i);
                }
                let product = match clean_product(&product, new_lo, new_hi, t_next, inputs, &aux_atoms)
                {
                    Some(r) => r,
                    None => continue,
                };
                match &product {
                    AspRule::Normal { head, body } if body.is_empty() => {
                        match head.name.as_str() {
                            "ant" | "cons" => {
                                facts.push(head.clone());
                                continue;
                            }
                            "consTrue" => {
                                facts.push(head.clone());
                                cons_true_facts.push(head.clone());
                                continue;
                            }
                            _ => {}
                        }
                    }
                    AspRule::Fact(head) => match head.name.as_str() {
                        "ant" | "cons" => {
                            facts.push(head.clone());
                            continue;
                        }
                        "consTrue" => {
                            facts.push(head.clone());
                            cons_true_facts.push(head.clone());
                            continue;
                        }
                        _ => {}
                    },
                    _ => {}
                }
                let product = match &product {
                    AspRule::Normal { head, body } if body.is_empty() => {
                        AspRule::Fact(head.clone())
                    }
                    other => other.clone(),
                };
                if seen.insert(canonical_rule(&product)) {
                    new_rules.push(TaggedRule {
                        rule: product,
                        item: tr.item,
                    });
                }
            }
        }
        derived.extend(new_rules);
    }

    // Assemble the next program.
    let satisfied: BTreeSet<AspAtom> = cons_true_facts.iter().cloned().collect();
    let mut out = AspProgram::default();
    out.push(
        Item::TimeRange,
        AspRule::Fact(AspAtom::new("time", vec![AspTerm::Range(new_lo, new_hi)])),
    );
    for tr in p.iter() {
        let keep = match tr.item {
            Item::TimeRange | Item::InitialState => false,
            Item::AnticipatedEvent => match anticipation_time(&tr.rule) {
                Some(at) => at > t_next as i64,
                None => true,
            },
            Item::ChoiceSupported => {
                out.push(Item::ChoiceSupported, choice_rule_supported(t_next as i64));
                false
            }
            Item::ChoiceAction => {
                out.push(Item::ChoiceAction, choice_rule_action(t_next as i64));
                false
            }
            Item::GoalConstraint(_) => !constraint_satisfied(&tr.rule, &satisfied),
            Item::Supported(_, _, _) => !supported_expired(tr, t_next),
            Item::AntRule(_) => !ant_rule_infeasible(&tr.rule, t_next + 1, new_hi as u32),
            _ => true,
        };
        if keep {
            out.rules.push(tr.clone());
        }
    }
    for f in &inputs.fluents {
        out.push(
            Item::InitialState,
            AspRule::Fact(fact_atom("holds", f, t_next)),
        );
    }
    for (at, evs) in &inputs.anticipated_new {
        if *at > t_next && *at as i64 <= new_hi {
            for e in evs {
                out.push(
                    Item::AnticipatedEvent,
                    AspRule::Normal {
                        head: fact_atom("happens", e, *at),
                        body: vec![AspLiteral::Pos(AspAtom::new(
                            "time",
                            vec![AspTerm::Int(*at as i64)],
                        ))],
                    },
                );
            }
        }
    }
    for tr in derived {
        let keep = match tr.item {
            Item::Supported(_, _, _) => !supported_expired(&tr, t_next),
            Item::AntRule(_) => !ant_rule_infeasible(&tr.rule, t_next + 1, new_hi as u32),
            Item::ReactiveConstraint => !constraint_satisfied(&tr.rule, &satisfied),
            _ => true,
        };
        if keep {
            // Ground instances of the generic constraint become goal
            // constraints of the next program.
            let item = if tr.item == Item::ReactiveConstraint
                && matches!(&tr.rule, AspRule::Constraint { .. })
            {
                Item::GoalConstraint(0)
            } else {
                tr.item
            };
            out.push(item, tr.rule);
        }
    }
    for fact in cons_true_facts {
        out.push(Item::ConsTrueRule, AspRule::Fact(fact));
    }
    sort_program(&mut out);
    Ok(out)
}

fn anticipation_time(rule: &AspRule) -> Option<i64> {
    match rule {
        AspRule::Normal { head, .. } | AspRule::Fact(head)
            if head.name == "happens" && head.args.len() == 2 =>
        {
            match head.args[1].eval() {
                AspTerm::Int(i) => Some(i),
                _ => None,
            }
        }
        _ => None,
    }
}

fn constraint_satisfied(rule: &AspRule, cons_true: &BTreeSet<AspAtom>) -> bool {
    match rule {
        AspRule::Constraint { body } => body.iter().any(|l| match l {
            AspLiteral::Neg(a) if a.name == "consTrue" && a.is_ground() => cons_true.contains(a),
            _ => false,
        }),
        _ => false,
    }
}
