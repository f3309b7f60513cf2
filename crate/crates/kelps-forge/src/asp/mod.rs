//! Answer-set program IR: rules with provenance, safety checking, and
//! canonical normalization used by the golden and commutation tests.

pub mod serialize;
pub mod text;
pub mod translate;

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AspTerm {
    Sym(String),
    Int(i64),
    Var(String),
    /// Compound term; functors `+`/`-` with two arguments render infix,
    /// `-` with one argument renders as unary minus.
    Func(String, Vec<AspTerm>),
    /// Argument tuple `(a,b)`; `()` when empty.
    Tuple(Vec<AspTerm>),
    /// Interval term `l..u`.
    Range(i64, i64),
}

impl AspTerm {
    pub fn sym(s: &str) -> Self {
        AspTerm::Sym(s.to_string())
    }

    pub fn var(s: &str) -> Self {
        AspTerm::Var(s.to_string())
    }

    pub fn plus(a: AspTerm, k: i64) -> AspTerm {
        if k == 0 {
            a
        } else if k > 0 {
            AspTerm::Func("+".into(), vec![a, AspTerm::Int(k)])
        } else {
            AspTerm::Func("-".into(), vec![a, AspTerm::Int(-k)])
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            AspTerm::Var(_) => false,
            AspTerm::Func(_, args) | AspTerm::Tuple(args) => args.iter().all(AspTerm::is_ground),
            _ => true,
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            AspTerm::Var(v) => {
                out.insert(v.clone());
            }
            AspTerm::Func(_, args) | AspTerm::Tuple(args) => {
                for a in args {
                    a.vars(out);
                }
            }
            _ => {}
        }
    }

    pub fn apply(&self, sub: &AspSubst) -> AspTerm {
        match self {
            AspTerm::Var(v) => sub.get(v).cloned().unwrap_or_else(|| self.clone()),
            AspTerm::Func(f, args) => {
                AspTerm::Func(f.clone(), args.iter().map(|a| a.apply(sub)).collect())
            }
            AspTerm::Tuple(args) => AspTerm::Tuple(args.iter().map(|a| a.apply(sub)).collect()),
            other => other.clone(),
        }
    }

    /// Folds ground integer arithmetic: `2+1` becomes `3`.
    pub fn eval(&self) -> AspTerm {
        match self {
            AspTerm::Func(f, args) if (f == "+" || f == "-") && args.len() == 2 => {
                let l = args[0].eval();
                let r = args[1].eval();
                if let (AspTerm::Int(a), AspTerm::Int(b)) = (&l, &r) {
                    AspTerm::Int(if f == "+" { a + b } else { a - b })
                } else {
                    AspTerm::Func(f.clone(), vec![l, r])
                }
            }
            AspTerm::Func(f, args) if f == "-" && args.len() == 1 => {
                let a = args[0].eval();
                if let AspTerm::Int(v) = a {
                    AspTerm::Int(-v)
                } else {
                    AspTerm::Func(f.clone(), vec![a])
                }
            }
            AspTerm::Func(f, args) => {
                AspTerm::Func(f.clone(), args.iter().map(AspTerm::eval).collect())
            }
            AspTerm::Tuple(args) => AspTerm::Tuple(args.iter().map(AspTerm::eval).collect()),
            other => other.clone(),
        }
    }
}

pub type AspSubst = BTreeMap<String, AspTerm>;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AspAtom {
    pub name: String,
    pub args: Vec<AspTerm>,
}

impl AspAtom {
    pub fn new(name: &str, args: Vec<AspTerm>) -> Self {
        AspAtom {
            name: name.to_string(),
            args,
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        for a in &self.args {
            a.vars(out);
        }
    }

    pub fn apply(&self, sub: &AspSubst) -> AspAtom {
        AspAtom {
            name: self.name.clone(),
            args: self.args.iter().map(|a| a.apply(sub)).collect(),
        }
    }

    pub fn eval(&self) -> AspAtom {
        AspAtom {
            name: self.name.clone(),
            args: self.args.iter().map(AspTerm::eval).collect(),
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(AspTerm::is_ground)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmpSym {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpSym {
    pub fn text(self) -> &'static str {
        match self {
            CmpSym::Lt => "<",
            CmpSym::Le => "<=",
            CmpSym::Gt => ">",
            CmpSym::Ge => ">=",
            CmpSym::Eq => "=",
            CmpSym::Ne => "!=",
        }
    }

    pub fn eval(self, a: i64, b: i64) -> bool {
        match self {
            CmpSym::Lt => a < b,
            CmpSym::Le => a <= b,
            CmpSym::Gt => a > b,
            CmpSym::Ge => a >= b,
            CmpSym::Eq => a == b,
            CmpSym::Ne => a != b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AspLiteral {
    Pos(AspAtom),
    Neg(AspAtom),
    Cmp(CmpSym, AspTerm, AspTerm),
}

impl AspLiteral {
    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            AspLiteral::Pos(a) | AspLiteral::Neg(a) => a.vars(out),
            AspLiteral::Cmp(_, l, r) => {
                l.vars(out);
                r.vars(out);
            }
        }
    }

    pub fn apply(&self, sub: &AspSubst) -> AspLiteral {
        match self {
            AspLiteral::Pos(a) => AspLiteral::Pos(a.apply(sub)),
            AspLiteral::Neg(a) => AspLiteral::Neg(a.apply(sub)),
            AspLiteral::Cmp(op, l, r) => AspLiteral::Cmp(*op, l.apply(sub), r.apply(sub)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AspRule {
    Fact(AspAtom),
    Normal {
        head: AspAtom,
        body: Vec<AspLiteral>,
    },
    Choice {
        low: u32,
        high: u32,
        head: AspAtom,
        body: Vec<AspLiteral>,
    },
    Constraint {
        body: Vec<AspLiteral>,
    },
    Weak {
        body: Vec<AspLiteral>,
        weight: AspTerm,
        level: AspTerm,
        terms: Vec<AspTerm>,
    },
}

impl AspRule {
    pub fn body(&self) -> &[AspLiteral] {
        match self {
            AspRule::Fact(_) => &[],
            AspRule::Normal { body, .. }
            | AspRule::Choice { body, .. }
            | AspRule::Constraint { body }
            | AspRule::Weak { body, .. } => body,
        }
    }

    pub fn body_mut(&mut self) -> Option<&mut Vec<AspLiteral>> {
        match self {
            AspRule::Fact(_) => None,
            AspRule::Normal { body, .. }
            | AspRule::Choice { body, .. }
            | AspRule::Constraint { body }
            | AspRule::Weak { body, .. } => Some(body),
        }
    }

    pub fn head_atom(&self) -> Option<&AspAtom> {
        match self {
            AspRule::Fact(h) => Some(h),
            AspRule::Normal { head, .. } | AspRule::Choice { head, .. } => Some(head),
            _ => None,
        }
    }

    pub fn all_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        if let Some(h) = self.head_atom() {
            h.vars(&mut out);
        }
        for l in self.body() {
            l.vars(&mut out);
        }
        if let AspRule::Weak {
            weight,
            level,
            terms,
            ..
        } = self
        {
            weight.vars(&mut out);
            level.vars(&mut out);
            for t in terms {
                t.vars(&mut out);
            }
        }
        out
    }

    /// Safety: every variable of a rule must occur in at least one
    /// positive, non-builtin body literal (facts must be ground).
    pub fn check_safety(&self) -> Result<(), String> {
        let mut positive = BTreeSet::new();
        for l in self.body() {
            if let AspLiteral::Pos(a) = l {
                a.vars(&mut positive);
            }
        }
        for v in self.all_vars() {
            if !positive.contains(&v) {
                return Err(format!("unsafe variable {v}"));
            }
        }
        Ok(())
    }
}

/// Which part of the mapping produced a rule; keeps the emitted program
/// ordered and lets the rewriting step target only domain rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Item {
    TimeRange,
    MaxDef,
    AuxFact,
    InitialState,
    ExternalEvent,
    AnticipatedEvent,
    CausalPost,
    AntRule(u32),
    ConsRule(u32, u32),
    ReactiveConstraint,
    ConsTrueRule,
    GoalConstraint(u32),
    Supported(u32, u32, u32),
    ChoiceSupported,
    ActionDecl,
    ChoiceAction,
    CPre(u32),
    EventTheory,
    Preference,
    BadRulePreference,
}

impl Item {
    /// Section label emitted as a comment when the category changes.
    pub fn section(&self) -> &'static str {
        match self {
            Item::TimeRange => "Time range",
            Item::MaxDef => "Temporal maximum",
            Item::AuxFact => "Auxiliary facts",
            Item::InitialState => "Initial state S0",
            Item::ExternalEvent => "External events",
            Item::AnticipatedEvent => "Anticipated events",
            Item::CausalPost => "C_post",
            Item::AntRule(_) | Item::ConsRule(_, _) => "defines 'antecedent' and 'consequent'",
            Item::ReactiveConstraint | Item::ConsTrueRule | Item::GoalConstraint(_) => {
                "Constraint enforcing the reactive rule(s)"
            }
            Item::Supported(_, _, _) | Item::ChoiceSupported | Item::ActionDecl
            | Item::ChoiceAction => "Supported actions",
            Item::CPre(_) => "C_pre",
            Item::EventTheory => "Event theory",
            Item::Preference | Item::BadRulePreference => "Preferences",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaggedRule {
    pub rule: AspRule,
    pub item: Item,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AspProgram {
    pub rules: Vec<TaggedRule>,
}

impl AspProgram {
    pub fn push(&mut self, item: Item, rule: AspRule) {
        self.rules.push(TaggedRule { rule, item });
    }

    pub fn iter(&self) -> impl Iterator<Item = &TaggedRule> {
        self.rules.iter()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

impl fmt::Display for AspProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize::serialize(self))
    }
}

// ------------------------------------------------------- normalization

/// Canonical form of a rule: body literals sorted with variable names
/// masked, then variables renamed by first occurrence. Two rules equal
/// up to variable renaming and body reordering share a canonical string.
pub fn canonical_rule(rule: &AspRule) -> String {
    let mut r = rule.clone();
    if let Some(body) = r.body_mut() {
        for l in body.iter_mut() {
            if let AspLiteral::Cmp(op, a, b) = l {
                match op {
                    CmpSym::Gt => *l = AspLiteral::Cmp(CmpSym::Lt, b.clone(), a.clone()),
                    CmpSym::Ge => *l = AspLiteral::Cmp(CmpSym::Le, b.clone(), a.clone()),
                    _ => {}
                }
            }
        }
        body.sort_by_key(|l| serialize::literal_text(&mask_literal(l)));
    }
    // Sorting with masked variables leaves ties whose resolution depends
    // on the input naming; renaming and re-sorting converges on a
    // naming-independent form.
    let mut renamed = rename_canonical(&r);
    for _ in 0..2 {
        if let Some(body) = renamed.body_mut() {
            body.sort_by_key(serialize::literal_text);
        }
        renamed = rename_canonical(&renamed);
    }
    serialize::rule_text(&renamed)
}

fn rename_canonical(r: &AspRule) -> AspRule {
    let mut renames: AspSubst = AspSubst::new();
    let mut order: Vec<String> = Vec::new();
    collect_rule_vars(r, &mut order);
    for (i, v) in order.iter().enumerate() {
        renames.insert(v.clone(), AspTerm::Var(format!("V{i}")));
    }
    apply_rule(r, &renames)
}

fn collect_rule_vars(rule: &AspRule, order: &mut Vec<String>) {
    fn term(t: &AspTerm, order: &mut Vec<String>) {
        match t {
            AspTerm::Var(v) => {
                if !order.contains(v) {
                    order.push(v.clone());
                }
            }
            AspTerm::Func(_, args) | AspTerm::Tuple(args) => {
                for a in args {
                    term(a, order);
                }
            }
            _ => {}
        }
    }
    let lit = |l: &AspLiteral, order: &mut Vec<String>| match l {
        AspLiteral::Pos(a) | AspLiteral::Neg(a) => {
            for t in &a.args {
                term(t, order);
            }
        }
        AspLiteral::Cmp(_, a, b) => {
            term(a, order);
            term(b, order);
        }
    };
    if let Some(h) = rule.head_atom() {
        for t in &h.args {
            term(t, order);
        }
    }
    for l in rule.body() {
        lit(l, order);
    }
    if let AspRule::Weak {
        weight,
        level,
        terms,
        ..
    } = rule
    {
        term(weight, order);
        term(level, order);
        for t in terms {
            term(t, order);
        }
    }
}

pub fn apply_rule(rule: &AspRule, sub: &AspSubst) -> AspRule {
    match rule {
        AspRule::Fact(h) => AspRule::Fact(h.apply(sub)),
        AspRule::Normal { head, body } => AspRule::Normal {
            head: head.apply(sub),
            body: body.iter().map(|l| l.apply(sub)).collect(),
        },
        AspRule::Choice {
            low,
            high,
            head,
            body,
        } => AspRule::Choice {
            low: *low,
            high: *high,
            head: head.apply(sub),
            body: body.iter().map(|l| l.apply(sub)).collect(),
        },
        AspRule::Constraint { body } => AspRule::Constraint {
            body: body.iter().map(|l| l.apply(sub)).collect(),
        },
        AspRule::Weak {
            body,
            weight,
            level,
            terms,
        } => AspRule::Weak {
            body: body.iter().map(|l| l.apply(sub)).collect(),
            weight: weight.apply(sub),
            level: level.apply(sub),
            terms: terms.iter().map(|t| t.apply(sub)).collect(),
        },
    }
}

fn mask_term(t: &AspTerm) -> AspTerm {
    match t {
        AspTerm::Var(_) => AspTerm::Var("_".into()),
        AspTerm::Func(f, args) => AspTerm::Func(f.clone(), args.iter().map(mask_term).collect()),
        AspTerm::Tuple(args) => AspTerm::Tuple(args.iter().map(mask_term).collect()),
        other => other.clone(),
    }
}

fn mask_literal(l: &AspLiteral) -> AspLiteral {
    match l {
        AspLiteral::Pos(a) => AspLiteral::Pos(AspAtom {
            name: a.name.clone(),
            args: a.args.iter().map(mask_term).collect(),
        }),
        AspLiteral::Neg(a) => AspLiteral::Neg(AspAtom {
            name: a.name.clone(),
            args: a.args.iter().map(mask_term).collect(),
        }),
        AspLiteral::Cmp(op, a, b) => AspLiteral::Cmp(*op, mask_term(a), mask_term(b)),
    }
}

/// Canonical multiset of rules, suitable for structural program
/// comparison modulo rule order and variable naming.
pub fn canonical_program(rules: &[AspRule]) -> Vec<String> {
    let mut out: Vec<String> = rules.iter().map(canonical_rule).collect();
    out.sort();
    out
}

/// Structural equality of two rule sets; on mismatch returns the rules
/// present in exactly one side.
pub fn diff_programs(a: &[AspRule], b: &[AspRule]) -> Result<(), (Vec<String>, Vec<String>)> {
    let ca = canonical_program(a);
    let cb = canonical_program(b);
    if ca == cb {
        return Ok(());
    }
    let sa: BTreeSet<_> = ca.iter().collect();
    let sb: BTreeSet<_> = cb.iter().collect();
    let only_a: Vec<String> = ca.iter().filter(|r| !sb.contains(r)).cloned().collect();
    let only_b: Vec<String> = cb.iter().filter(|r| !sa.contains(r)).cloned().collect();
    Err((only_a, only_b))
}
