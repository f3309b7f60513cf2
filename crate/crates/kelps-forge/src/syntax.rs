//! Domain model for KELPS frameworks: terms, timestamps, conditions,
//! reactive rules, the causal theory, and timestamped model structures.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A first-order term. Integers are the only numeric terms; compounds
/// with functor `+` or `-` and two arguments denote inline arithmetic
/// (e.g. the stock count `N-1` in a postcondition template).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(String),
    Int(i64),
    Var(String),
    Compound(String, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Self {
        Term::Var(name.to_string())
    }

    pub fn cons(name: &str) -> Self {
        Term::Const(name.to_string())
    }

    pub fn app(name: &str, args: Vec<Term>) -> Self {
        Term::Compound(name.to_string(), args)
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Const(_) | Term::Int(_) => true,
            Term::Var(_) => false,
            Term::Compound(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::Compound(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
            _ => {}
        }
    }

    /// Evaluate ground arithmetic (`+`/`-` over integers), leaving other
    /// terms untouched. `allocate(john, book, 2-1)` becomes
    /// `allocate(john, book, 1)`.
    pub fn eval(&self) -> Term {
        match self {
            Term::Compound(f, args) if (f == "+" || f == "-") && args.len() == 2 => {
                let l = args[0].eval();
                let r = args[1].eval();
                if let (Term::Int(a), Term::Int(b)) = (&l, &r) {
                    Term::Int(if f == "+" { a + b } else { a - b })
                } else {
                    Term::Compound(f.clone(), vec![l, r])
                }
            }
            Term::Compound(f, args) => {
                Term::Compound(f.clone(), args.iter().map(Term::eval).collect())
            }
            other => other.clone(),
        }
    }

    pub fn apply(&self, theta: &Substitution) -> Term {
        match self {
            Term::Var(v) => match theta.get(v) {
                Some(Binding::Term(t)) => t.clone(),
                Some(Binding::Time(i)) => Term::Int(*i),
                None => self.clone(),
            },
            Term::Compound(f, args) => {
                Term::Compound(f.clone(), args.iter().map(|a| a.apply(theta)).collect())
            }
            other => other.clone(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(s) => write!(f, "{s}"),
            Term::Int(i) => write!(f, "{i}"),
            Term::Var(v) => write!(f, "{v}"),
            Term::Compound(op, args) if (op == "+" || op == "-") && args.len() == 2 => {
                write!(f, "{}{}{}", args[0], op, args[1])
            }
            Term::Compound(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A timestamp expression: a time variable, a non-negative time constant,
/// or a variable plus an integer offset (`T+4`, `Ts-1`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TimeExpr {
    Var(String),
    Const(u32),
    Offset(String, i64),
}

impl TimeExpr {
    pub fn var(name: &str) -> Self {
        TimeExpr::Var(name.to_string())
    }

    pub fn offset(name: &str, k: i64) -> Self {
        if k == 0 {
            TimeExpr::Var(name.to_string())
        } else {
            TimeExpr::Offset(name.to_string(), k)
        }
    }

    /// Splits into `(base variable, offset)`; a constant has no base.
    pub fn parts(&self) -> (Option<&str>, i64) {
        match self {
            TimeExpr::Var(v) => (Some(v), 0),
            TimeExpr::Const(c) => (None, *c as i64),
            TimeExpr::Offset(v, k) => (Some(v), *k),
        }
    }

    pub fn var_name(&self) -> Option<&str> {
        self.parts().0
    }

    pub fn is_ground(&self) -> bool {
        matches!(self, TimeExpr::Const(_))
    }

    /// Value under a substitution; `None` if the base variable is unbound
    /// or bound to a non-time value.
    pub fn value(&self, theta: &Substitution) -> Option<i64> {
        match self {
            TimeExpr::Const(c) => Some(*c as i64),
            TimeExpr::Var(v) => theta.time(v),
            TimeExpr::Offset(v, k) => theta.time(v).map(|t| t + k),
        }
    }

    pub fn apply(&self, theta: &Substitution) -> TimeExpr {
        match self.value(theta) {
            Some(t) if t >= 0 => TimeExpr::Const(t as u32),
            _ => self.clone(),
        }
    }

    pub fn shift(&self, delta: i64) -> TimeExpr {
        match self {
            TimeExpr::Var(v) => TimeExpr::offset(v, delta),
            TimeExpr::Const(c) => TimeExpr::Const((*c as i64 + delta).max(0) as u32),
            TimeExpr::Offset(v, k) => TimeExpr::offset(v, k + delta),
        }
    }
}

impl fmt::Display for TimeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeExpr::Var(v) => write!(f, "{v}"),
            TimeExpr::Const(c) => write!(f, "{c}"),
            TimeExpr::Offset(v, k) if *k >= 0 => write!(f, "{v}+{k}"),
            TimeExpr::Offset(v, k) => write!(f, "{v}-{}", -k),
        }
    }
}

/// Temporal constraints over timestamps: `<`, `<=`, `=`, and `max/3`
/// (third operand is the maximum of the first two).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TemporalConstraint {
    Lt(TimeExpr, TimeExpr),
    Le(TimeExpr, TimeExpr),
    Eq(TimeExpr, TimeExpr),
    Max3(TimeExpr, TimeExpr, TimeExpr),
}

impl TemporalConstraint {
    pub fn operands(&self) -> Vec<&TimeExpr> {
        match self {
            TemporalConstraint::Lt(a, b)
            | TemporalConstraint::Le(a, b)
            | TemporalConstraint::Eq(a, b) => vec![a, b],
            TemporalConstraint::Max3(a, b, c) => vec![a, b, c],
        }
    }

    pub fn vars(&self) -> Vec<String> {
        self.operands()
            .into_iter()
            .filter_map(|t| t.var_name().map(str::to_string))
            .collect()
    }

    /// Truth under a full time grounding; `None` while operands are unbound.
    pub fn holds(&self, theta: &Substitution) -> Option<bool> {
        match self {
            TemporalConstraint::Lt(a, b) => Some(a.value(theta)? < b.value(theta)?),
            TemporalConstraint::Le(a, b) => Some(a.value(theta)? <= b.value(theta)?),
            TemporalConstraint::Eq(a, b) => Some(a.value(theta)? == b.value(theta)?),
            TemporalConstraint::Max3(a, b, c) => {
                Some(a.value(theta)?.max(b.value(theta)?) == c.value(theta)?)
            }
        }
    }

    pub fn apply(&self, theta: &Substitution) -> TemporalConstraint {
        match self {
            TemporalConstraint::Lt(a, b) => {
                TemporalConstraint::Lt(a.apply(theta), b.apply(theta))
            }
            TemporalConstraint::Le(a, b) => {
                TemporalConstraint::Le(a.apply(theta), b.apply(theta))
            }
            TemporalConstraint::Eq(a, b) => {
                TemporalConstraint::Eq(a.apply(theta), b.apply(theta))
            }
            TemporalConstraint::Max3(a, b, c) => {
                TemporalConstraint::Max3(a.apply(theta), b.apply(theta), c.apply(theta))
            }
        }
    }
}

impl fmt::Display for TemporalConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemporalConstraint::Lt(a, b) => write!(f, "{a} < {b}"),
            TemporalConstraint::Le(a, b) => write!(f, "{a} <= {b}"),
            TemporalConstraint::Eq(a, b) => write!(f, "{a} = {b}"),
            TemporalConstraint::Max3(a, b, c) => write!(f, "max({a},{b},{c})"),
        }
    }
}

/// Comparison operators usable as auxiliary (non-temporal) builtins.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
        }
    }
}

/// A single condition of a rule antecedent, consequent disjunct, or
/// precondition body.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    Fluent {
        name: String,
        args: Vec<Term>,
        positive: bool,
        time: TimeExpr,
    },
    /// Event atoms are always positive.
    Event {
        name: String,
        args: Vec<Term>,
        time: TimeExpr,
    },
    Aux {
        name: String,
        args: Vec<Term>,
        positive: bool,
    },
    /// Builtin comparison over non-time terms (`N1 < 2`, `Cust1 != Cust2`).
    Compare { op: CmpOp, lhs: Term, rhs: Term },
    Temporal(TemporalConstraint),
}

impl Condition {
    pub fn fluent(name: &str, args: Vec<Term>, time: TimeExpr) -> Self {
        Condition::Fluent {
            name: name.to_string(),
            args,
            positive: true,
            time,
        }
    }

    pub fn not_fluent(name: &str, args: Vec<Term>, time: TimeExpr) -> Self {
        Condition::Fluent {
            name: name.to_string(),
            args,
            positive: false,
            time,
        }
    }

    pub fn event(name: &str, args: Vec<Term>, time: TimeExpr) -> Self {
        Condition::Event {
            name: name.to_string(),
            args,
            time,
        }
    }

    pub fn aux(name: &str, args: Vec<Term>) -> Self {
        Condition::Aux {
            name: name.to_string(),
            args,
            positive: true,
        }
    }

    pub fn lt(a: TimeExpr, b: TimeExpr) -> Self {
        Condition::Temporal(TemporalConstraint::Lt(a, b))
    }

    pub fn le(a: TimeExpr, b: TimeExpr) -> Self {
        Condition::Temporal(TemporalConstraint::Le(a, b))
    }

    pub fn teq(a: TimeExpr, b: TimeExpr) -> Self {
        Condition::Temporal(TemporalConstraint::Eq(a, b))
    }

    /// The condition's timestamp expression, if it has one.
    pub fn time(&self) -> Option<&TimeExpr> {
        match self {
            Condition::Fluent { time, .. } | Condition::Event { time, .. } => Some(time),
            _ => None,
        }
    }

    pub fn as_temporal(&self) -> Option<&TemporalConstraint> {
        match self {
            Condition::Temporal(c) => Some(c),
            _ => None,
        }
    }

    /// Time variables occurring in this condition (timestamp positions and
    /// temporal constraints).
    pub fn time_vars(&self) -> Vec<String> {
        match self {
            Condition::Fluent { time, .. } | Condition::Event { time, .. } => {
                time.var_name().map(str::to_string).into_iter().collect()
            }
            Condition::Temporal(c) => c.vars(),
            _ => vec![],
        }
    }

    /// Non-time variables occurring in argument positions.
    pub fn nontime_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            Condition::Fluent { args, .. }
            | Condition::Event { args, .. }
            | Condition::Aux { args, .. } => {
                for a in args {
                    a.collect_vars(&mut out);
                }
            }
            Condition::Compare { lhs, rhs, .. } => {
                lhs.collect_vars(&mut out);
                rhs.collect_vars(&mut out);
            }
            Condition::Temporal(_) => {}
        }
        out
    }

    pub fn apply(&self, theta: &Substitution) -> Condition {
        match self {
            Condition::Fluent {
                name,
                args,
                positive,
                time,
            } => Condition::Fluent {
                name: name.clone(),
                args: args.iter().map(|a| a.apply(theta)).collect(),
                positive: *positive,
                time: time.apply(theta),
            },
            Condition::Event { name, args, time } => Condition::Event {
                name: name.clone(),
                args: args.iter().map(|a| a.apply(theta)).collect(),
                time: time.apply(theta),
            },
            Condition::Aux {
                name,
                args,
                positive,
            } => Condition::Aux {
                name: name.clone(),
                args: args.iter().map(|a| a.apply(theta)).collect(),
                positive: *positive,
            },
            Condition::Compare { op, lhs, rhs } => Condition::Compare {
                op: *op,
                lhs: lhs.apply(theta),
                rhs: rhs.apply(theta),
            },
            Condition::Temporal(c) => Condition::Temporal(c.apply(theta)),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Fluent {
                name,
                args,
                positive,
                time,
            } => {
                if !positive {
                    write!(f, "not ")?;
                }
                write_atom(f, name, args)?;
                write!(f, "@{time}")
            }
            Condition::Event { name, args, time } => {
                write_atom(f, name, args)?;
                write!(f, "@{time}")
            }
            Condition::Aux {
                name,
                args,
                positive,
            } => {
                if !positive {
                    write!(f, "not ")?;
                }
                write_atom(f, name, args)
            }
            Condition::Compare { op, lhs, rhs } => {
                write!(f, "{lhs} {} {rhs}", op.symbol())
            }
            Condition::Temporal(c) => write!(f, "{c}"),
        }
    }
}

fn write_atom(f: &mut fmt::Formatter<'_>, name: &str, args: &[Term]) -> fmt::Result {
    if args.is_empty() {
        write!(f, "{name}")
    } else {
        write!(f, "{name}(")?;
        for (i, a) in args.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

/// Variable classification of a reactive rule, following the split into
/// antecedent variables, consequent-only variables, and the shared subset
/// that parameterises the rule's triggered instances.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarClassification {
    /// Antecedent non-time variables.
    pub ant_nontime: BTreeSet<String>,
    /// Antecedent time variables.
    pub ant_time: BTreeSet<String>,
    /// Consequent-only non-time variables.
    pub cons_only_nontime: BTreeSet<String>,
    /// Consequent-only time variables.
    pub cons_only_time: BTreeSet<String>,
    /// Antecedent non-time variables that also occur in the consequent.
    pub shared_nontime: BTreeSet<String>,
    /// Antecedent time variables that also occur in the consequent.
    pub shared_time: BTreeSet<String>,
    /// Shared variables in order of first occurrence in the antecedent.
    pub shared_order: Vec<String>,
}

/// A reactive rule: antecedent conjunction and a non-empty disjunction of
/// consequent conjunctions. Quantification is implicit: antecedent
/// variables universal, consequent-only variables existential.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReactiveRule {
    pub id: u32,
    pub antecedent: Vec<Condition>,
    pub disjuncts: Vec<Vec<Condition>>,
    pub vars: VarClassification,
}

impl ReactiveRule {
    pub fn new(id: u32, antecedent: Vec<Condition>, disjuncts: Vec<Vec<Condition>>) -> Self {
        let vars = classify(&antecedent, &disjuncts);
        ReactiveRule {
            id,
            antecedent,
            disjuncts,
            vars,
        }
    }

    /// Recomputes the classification caches from the conditions.
    pub fn reclassify(&self) -> VarClassification {
        classify(&self.antecedent, &self.disjuncts)
    }

    pub fn all_conditions(&self) -> impl Iterator<Item = &Condition> {
        self.antecedent
            .iter()
            .chain(self.disjuncts.iter().flatten())
    }
}

/// Computes the variable classification of a rule.
pub fn classify(antecedent: &[Condition], disjuncts: &[Vec<Condition>]) -> VarClassification {
    let mut c = VarClassification::default();
    // First-occurrence order: a condition's argument variables come
    // before its timestamp, matching the unstamped-arguments-then-time
    // layout of the stamped atom.
    let mut ant_order: Vec<(String, bool)> = Vec::new();
    for cond in antecedent {
        for v in cond.nontime_vars() {
            if !ant_order.iter().any(|(n, _)| *n == v) {
                ant_order.push((v.clone(), false));
            }
            c.ant_nontime.insert(v);
        }
        for v in cond.time_vars() {
            if !ant_order.iter().any(|(n, _)| *n == v) {
                ant_order.push((v.clone(), true));
            }
            c.ant_time.insert(v);
        }
    }
    let mut cons_time = BTreeSet::new();
    let mut cons_nontime = BTreeSet::new();
    for d in disjuncts {
        for cond in d {
            cons_time.extend(cond.time_vars());
            cons_nontime.extend(cond.nontime_vars());
        }
    }
    for v in &cons_time {
        if c.ant_time.contains(v) {
            c.shared_time.insert(v.clone());
        } else {
            c.cons_only_time.insert(v.clone());
        }
    }
    for v in &cons_nontime {
        if c.ant_nontime.contains(v) {
            c.shared_nontime.insert(v.clone());
        } else {
            c.cons_only_nontime.insert(v.clone());
        }
    }
    for (v, _) in ant_order {
        if c.shared_time.contains(&v) || c.shared_nontime.contains(&v) {
            c.shared_order.push(v);
        }
    }
    c
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EffectKind {
    Initiates,
    Terminates,
}

/// An event or fluent template in a postcondition entry (unstamped, may
/// contain variables and inline arithmetic).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Template {
    pub name: String,
    pub args: Vec<Term>,
}

impl Template {
    pub fn new(name: &str, args: Vec<Term>) -> Self {
        Template {
            name: name.to_string(),
            args,
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            write!(f, "{}", self.name)
        } else {
            write!(f, "{}", Term::app(&self.name, self.args.clone()))
        }
    }
}

/// One `initiates`/`terminates` entry of the causal theory, with an
/// optional guard of auxiliary literals used to ground its variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PostEntry {
    pub effect: EffectKind,
    pub event: Template,
    pub fluent: Template,
    pub guard: Vec<Condition>,
}

/// A precondition constraint `false <- body`. The body holds at least one
/// event atom; all events share one timestamp and all fluents sit one
/// time unit earlier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreConstraint {
    pub body: Vec<Condition>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CausalTheory {
    pub post: Vec<PostEntry>,
    pub pre: Vec<PreConstraint>,
}

/// A ground unstamped atom, used for state fluents, events, and aux facts.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub name: String,
    pub args: Vec<Term>,
}

impl GroundAtom {
    pub fn new(name: &str, args: Vec<Term>) -> Self {
        GroundAtom {
            name: name.to_string(),
            args,
        }
    }

    pub fn nullary(name: &str) -> Self {
        GroundAtom::new(name, vec![])
    }

    pub fn to_term(&self) -> Term {
        if self.args.is_empty() {
            Term::Const(self.name.clone())
        } else {
            Term::Compound(self.name.clone(), self.args.clone())
        }
    }

    pub fn from_term(t: &Term) -> Option<GroundAtom> {
        match t {
            Term::Const(name) => Some(GroundAtom::new(name, vec![])),
            Term::Compound(name, args) if t.is_ground() => {
                Some(GroundAtom::new(name, args.clone()))
            }
            _ => None,
        }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_term())
    }
}

/// A KELPS framework together with its initial state, external-event
/// trace, and optional horizon.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Framework {
    pub rules: Vec<ReactiveRule>,
    pub causal: CausalTheory,
    pub aux: BTreeSet<GroundAtom>,
    pub initial_state: BTreeSet<GroundAtom>,
    pub ext: BTreeMap<u32, BTreeSet<GroundAtom>>,
    pub horizon: Option<u32>,
}

impl Framework {
    /// All constant symbols and integers in the framework, the signature
    /// from which the oracle builds ground candidate actions.
    pub fn herbrand_constants(&self) -> BTreeSet<Term> {
        fn walk(t: &Term, out: &mut BTreeSet<Term>) {
            match t {
                Term::Const(_) | Term::Int(_) => {
                    out.insert(t.clone());
                }
                Term::Compound(_, args) => {
                    for a in args {
                        walk(a, out);
                    }
                }
                Term::Var(_) => {}
            }
        }
        let mut out = BTreeSet::new();
        for atom in self
            .aux
            .iter()
            .chain(self.initial_state.iter())
            .chain(self.ext.values().flatten())
        {
            for a in &atom.args {
                walk(a, &mut out);
            }
        }
        let mut walk_cond = |c: &Condition| match c {
            Condition::Fluent { args, .. }
            | Condition::Event { args, .. }
            | Condition::Aux { args, .. } => {
                for a in args {
                    walk(a, &mut out);
                }
            }
            Condition::Compare { lhs, rhs, .. } => {
                walk(lhs, &mut out);
                walk(rhs, &mut out);
            }
            Condition::Temporal(_) => {}
        };
        for r in &self.rules {
            for c in r.all_conditions() {
                walk_cond(c);
            }
        }
        for p in &self.causal.pre {
            for c in &p.body {
                walk_cond(c);
            }
        }
        for e in &self.causal.post {
            for a in e.event.args.iter().chain(e.fluent.args.iter()) {
                walk(a, &mut out);
            }
        }
        out
    }

    /// Names declared as fluents (initial state and postcondition fluent
    /// templates). Everything else timestamped is an event.
    pub fn fluent_names(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> =
            self.initial_state.iter().map(|a| a.name.clone()).collect();
        for e in &self.causal.post {
            out.insert(e.fluent.name.clone());
        }
        out
    }
}

/// States and actions of a model, the projection compared between
/// solver and oracle (aux and external events are shared).
pub type Behaviour = (Vec<BTreeSet<GroundAtom>>, BTreeMap<u32, BTreeSet<GroundAtom>>);

/// A timestamped model structure: states `S_0..S_n` plus the events of
/// each transition, partitioned into external events and actions.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ModelStructure {
    pub n: u32,
    pub states: Vec<BTreeSet<GroundAtom>>,
    pub acts: BTreeMap<u32, BTreeSet<GroundAtom>>,
    pub ext: BTreeMap<u32, BTreeSet<GroundAtom>>,
    pub aux: BTreeSet<GroundAtom>,
}

impl ModelStructure {
    pub fn new(n: u32, initial: BTreeSet<GroundAtom>) -> Self {
        ModelStructure {
            n,
            states: vec![initial],
            acts: BTreeMap::new(),
            ext: BTreeMap::new(),
            aux: BTreeSet::new(),
        }
    }

    pub fn state(&self, t: u32) -> &BTreeSet<GroundAtom> {
        // States are frozen after n.
        let i = (t as usize).min(self.states.len() - 1);
        &self.states[i]
    }

    pub fn acts_at(&self, t: u32) -> BTreeSet<GroundAtom> {
        self.acts.get(&t).cloned().unwrap_or_default()
    }

    pub fn events_at(&self, t: u32) -> BTreeSet<GroundAtom> {
        let mut ev = self.acts_at(t);
        if let Some(e) = self.ext.get(&t) {
            ev.extend(e.iter().cloned());
        }
        ev
    }

    /// Comparison key ignoring aux and ext, which are shared between all
    /// models of a framework.
    pub fn behaviour(&self) -> Behaviour {
        let acts: BTreeMap<u32, BTreeSet<GroundAtom>> = self
            .acts
            .iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(k, v)| (*k, v.clone()))
            .collect();
        (self.states.clone(), acts)
    }
}

/// Values a variable can take in a ground substitution.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Binding {
    Term(Term),
    Time(i64),
}

/// A ground substitution for time and non-time variables.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Substitution {
    map: BTreeMap<String, Binding>,
}

impl Substitution {
    pub fn new() -> Self {
        Substitution::default()
    }

    pub fn get(&self, var: &str) -> Option<&Binding> {
        self.map.get(var)
    }

    pub fn time(&self, var: &str) -> Option<i64> {
        match self.map.get(var) {
            Some(Binding::Time(t)) => Some(*t),
            Some(Binding::Term(Term::Int(i))) => Some(*i),
            _ => None,
        }
    }

    pub fn bind_time(&mut self, var: &str, t: i64) {
        self.map.insert(var.to_string(), Binding::Time(t));
    }

    pub fn bind_term(&mut self, var: &str, t: Term) {
        self.map.insert(var.to_string(), Binding::Term(t));
    }

    pub fn contains(&self, var: &str) -> bool {
        self.map.contains_key(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Binding)> {
        self.map.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// One-way matching of a pattern term against a ground term, extending
/// `theta`. Arithmetic in the pattern is evaluated after substitution.
pub fn match_term(pattern: &Term, ground: &Term, theta: &mut Substitution) -> bool {
    let p = pattern.apply(theta).eval();
    match (&p, ground) {
        (Term::Var(v), g) => {
            theta.bind_term(v, g.clone());
            true
        }
        (Term::Const(a), Term::Const(b)) => a == b,
        (Term::Int(a), Term::Int(b)) => a == b,
        (Term::Compound(f, fa), Term::Compound(g, ga)) => {
            f == g && fa.len() == ga.len() && fa.iter().zip(ga).all(|(x, y)| match_term(x, y, theta))
        }
        _ => false,
    }
}

/// Matches an atom pattern `name(args)` against a ground atom.
pub fn match_atom(name: &str, args: &[Term], ground: &GroundAtom, theta: &mut Substitution) -> bool {
    if name != ground.name || args.len() != ground.args.len() {
        return false;
    }
    args.iter()
        .zip(&ground.args)
        .all(|(p, g)| match_term(p, g, theta))
}
