//! Deterministic pretty-printer for frameworks. `parse(render(f))`
//! reproduces `f` structurally.

use std::fmt::Write;

use crate::syntax::*;

fn term_src(t: &Term) -> String {
    match t {
        Term::Compound(op, args) if (op == "+" || op == "-") && args.len() == 2 => {
            format!("{}{}{}", term_src(&args[0]), op, term_src(&args[1]))
        }
        Term::Compound(name, args) => {
            let inner: Vec<String> = args.iter().map(term_src).collect();
            format!("{}({})", name, inner.join(", "))
        }
        other => other.to_string(),
    }
}

fn atom_src(name: &str, args: &[Term]) -> String {
    if args.is_empty() {
        name.to_string()
    } else {
        let inner: Vec<String> = args.iter().map(term_src).collect();
        format!("{}({})", name, inner.join(", "))
    }
}

fn ground_src(a: &GroundAtom) -> String {
    atom_src(&a.name, &a.args)
}

fn cond_src(c: &Condition) -> String {
    match c {
        Condition::Fluent {
            name,
            args,
            positive,
            time,
        } => {
            let neg = if *positive { "" } else { "not " };
            format!("{neg}{}@{time}", atom_src(name, args))
        }
        Condition::Event { name, args, time } => {
            format!("{}@{time}", atom_src(name, args))
        }
        Condition::Aux {
            name,
            args,
            positive,
        } => {
            let neg = if *positive { "" } else { "not " };
            format!("{neg}{}", atom_src(name, args))
        }
        Condition::Compare { op, lhs, rhs } => {
            format!("{} {} {}", term_src(lhs), op.symbol(), term_src(rhs))
        }
        Condition::Temporal(t) => t.to_string(),
    }
}

fn cond_list_src(conds: &[Condition]) -> String {
    let parts: Vec<String> = conds.iter().map(cond_src).collect();
    parts.join(", ")
}

/// Renders a framework back to `.kelps` source. Declaration categories
/// appear in a fixed order; entries keep their stored order.
pub fn render(f: &Framework) -> String {
    let mut out = String::new();
    for a in &f.aux {
        writeln!(out, "aux {}.", ground_src(a)).unwrap();
    }
    for a in &f.initial_state {
        writeln!(out, "initially {}.", ground_src(a)).unwrap();
    }
    for (t, evs) in &f.ext {
        for e in evs {
            writeln!(out, "observe {} at {t}.", ground_src(e)).unwrap();
        }
    }
    for p in &f.causal.post {
        let kw = match p.effect {
            EffectKind::Initiates => "initiates",
            EffectKind::Terminates => "terminates",
        };
        let ev = atom_src(&p.event.name, &p.event.args);
        let fl = atom_src(&p.fluent.name, &p.fluent.args);
        if p.guard.is_empty() {
            writeln!(out, "{kw}({ev}, {fl}).").unwrap();
        } else {
            writeln!(out, "{kw}({ev}, {fl}) if {}.", cond_list_src(&p.guard)).unwrap();
        }
    }
    for pre in &f.causal.pre {
        writeln!(out, "false <- {}.", cond_list_src(&pre.body)).unwrap();
    }
    for r in &f.rules {
        let ant = if r.antecedent.is_empty() {
            "true".to_string()
        } else {
            cond_list_src(&r.antecedent)
        };
        let ds: Vec<String> = r.disjuncts.iter().map(|d| cond_list_src(d)).collect();
        writeln!(out, "{ant} -> {}.", ds.join(" | ")).unwrap();
    }
    if let Some(n) = f.horizon {
        writeln!(out, "#horizon {n}.").unwrap();
    }
    out
}
