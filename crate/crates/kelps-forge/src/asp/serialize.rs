//! ASP-Core-2 text output. Deterministic: identical programs serialize
//! byte-identically.

use super::{AspLiteral, AspProgram, AspRule, AspTerm};

pub fn term_text(t: &AspTerm) -> String {
    match t {
        AspTerm::Sym(s) => s.clone(),
        AspTerm::Int(i) => i.to_string(),
        AspTerm::Var(v) => v.clone(),
        AspTerm::Func(op, args) if (op == "+" || op == "-") && args.len() == 2 => {
            format!("{}{}{}", term_text(&args[0]), op, term_text(&args[1]))
        }
        AspTerm::Func(op, args) if op == "-" && args.len() == 1 => {
            format!("-{}", term_text(&args[0]))
        }
        AspTerm::Func(name, args) => {
            let inner: Vec<String> = args.iter().map(term_text).collect();
            format!("{}({})", name, inner.join(","))
        }
        AspTerm::Tuple(args) => {
            let inner: Vec<String> = args.iter().map(term_text).collect();
            format!("({})", inner.join(","))
        }
        AspTerm::Range(l, u) => format!("{l}..{u}"),
    }
}

pub fn atom_text(a: &super::AspAtom) -> String {
    if a.args.is_empty() {
        a.name.clone()
    } else {
        let inner: Vec<String> = a.args.iter().map(term_text).collect();
        format!("{}({})", a.name, inner.join(","))
    }
}

pub fn literal_text(l: &AspLiteral) -> String {
    match l {
        AspLiteral::Pos(a) => atom_text(a),
        AspLiteral::Neg(a) => format!("not {}", atom_text(a)),
        AspLiteral::Cmp(op, a, b) => format!("{}{}{}", term_text(a), op.text(), term_text(b)),
    }
}

fn body_text(body: &[AspLiteral]) -> String {
    let parts: Vec<String> = body.iter().map(literal_text).collect();
    parts.join(", ")
}

pub fn rule_text(r: &AspRule) -> String {
    match r {
        AspRule::Fact(a) => format!("{}.", atom_text(a)),
        AspRule::Normal { head, body } => {
            if body.is_empty() {
                format!("{}.", atom_text(head))
            } else {
                format!("{} :- {}.", atom_text(head), body_text(body))
            }
        }
        AspRule::Choice {
            low,
            high,
            head,
            body,
        } => {
            let h = format!("{low}{{{}}}{high}", atom_text(head));
            if body.is_empty() {
                format!("{h}.")
            } else {
                format!("{h} :- {}.", body_text(body))
            }
        }
        AspRule::Constraint { body } => format!(":- {}.", body_text(body)),
        AspRule::Weak {
            body,
            weight,
            level,
            terms,
        } => {
            let mut tail = format!("{}@{}", term_text(weight), term_text(level));
            if !terms.is_empty() {
                let ts: Vec<String> = terms.iter().map(term_text).collect();
                tail = format!("{tail}, {}", ts.join(","));
            }
            format!(":~ {}. [{tail}]", body_text(body))
        }
    }
}

/// Serializes the program with a comment line whenever the section
/// changes, in the style of the mapping tables.
pub fn serialize(p: &AspProgram) -> String {
    let mut out = String::new();
    let mut section = "";
    for tr in p.iter() {
        let s = tr.item.section();
        if s != section {
            out.push_str(&format!("% {s}\n"));
            section = s;
        }
        out.push_str(&rule_text(&tr.rule));
        out.push('\n');
    }
    out
}

/// Serializes without section comments.
pub fn serialize_plain(p: &AspProgram) -> String {
    let mut out = String::new();
    for tr in p.iter() {
        out.push_str(&rule_text(&tr.rule));
        out.push('\n');
    }
    out
}
