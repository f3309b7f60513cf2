//! A small parser for the ASP fragment the compiler emits: facts, normal
//! rules, choice rules, constraints, and weak constraints. Used to load
//! golden programs for structural comparison and to accept user-supplied
//! weak constraints on the command line.

use thiserror::Error;

use super::{AspAtom, AspLiteral, AspRule, AspTerm, CmpSym};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("asp text: {0}")]
pub struct AspTextError(pub String);

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    src: &'a str,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum T {
    Name(String),
    Var(String),
    Int(i64),
    Punct(String),
    Eof,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer {
            chars: src.chars().collect(),
            pos: 0,
            src,
        }
    }

    fn next_token(&mut self) -> Result<T, AspTextError> {
        loop {
            match self.chars.get(self.pos) {
                None => return Ok(T::Eof),
                Some('%') => {
                    while self.pos < self.chars.len() && self.chars[self.pos] != '\n' {
                        self.pos += 1;
                    }
                }
                Some(c) if c.is_whitespace() => self.pos += 1,
                Some(_) => break,
            }
        }
        let c = self.chars[self.pos];
        if c.is_ascii_digit() {
            let start = self.pos;
            while self
                .chars
                .get(self.pos)
                .is_some_and(|c| c.is_ascii_digit())
            {
                self.pos += 1;
            }
            let text: String = self.chars[start..self.pos].iter().collect();
            return Ok(T::Int(text.parse().map_err(|_| {
                AspTextError(format!("bad integer near {}", &self.src[..0]))
            })?));
        }
        if c.is_alphabetic() || c == '_' {
            let start = self.pos;
            while self
                .chars
                .get(self.pos)
                .is_some_and(|c| c.is_alphanumeric() || *c == '_')
            {
                self.pos += 1;
            }
            let text: String = self.chars[start..self.pos].iter().collect();
            return Ok(if c.is_uppercase() || c == '_' {
                T::Var(text)
            } else {
                T::Name(text)
            });
        }
        for p in [":~", ":-", "..", "<=", ">=", "!="] {
            if self.lookahead(p) {
                self.pos += p.len();
                return Ok(T::Punct(p.to_string()));
            }
        }
        for p in ["(", ")", "{", "}", "[", "]", ",", ".", "@", "<", ">", "=", "+", "-"] {
            if self.lookahead(p) {
                self.pos += 1;
                return Ok(T::Punct(p.to_string()));
            }
        }
        Err(AspTextError(format!("unexpected character '{c}'")))
    }

    fn lookahead(&self, s: &str) -> bool {
        s.chars()
            .enumerate()
            .all(|(i, c)| self.chars.get(self.pos + i) == Some(&c))
    }
}

struct P {
    toks: Vec<T>,
    pos: usize,
}

impl P {
    fn peek(&self) -> &T {
        self.toks.get(self.pos).unwrap_or(&T::Eof)
    }

    fn peek2(&self) -> &T {
        self.toks.get(self.pos + 1).unwrap_or(&T::Eof)
    }

    fn next(&mut self) -> T {
        let t = self.peek().clone();
        self.pos += 1;
        t
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), AspTextError> {
        match self.next() {
            T::Punct(q) if q == p => Ok(()),
            other => Err(AspTextError(format!("expected '{p}', found {other:?}"))),
        }
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), T::Punct(q) if q == p)
    }

    fn parse_term(&mut self) -> Result<AspTerm, AspTextError> {
        let mut t = self.parse_primary()?;
        loop {
            if self.is_punct("..") {
                self.next();
                let r = self.parse_primary()?;
                match (&t, &r) {
                    (AspTerm::Int(l), AspTerm::Int(u)) => t = AspTerm::Range(*l, *u),
                    _ => return Err(AspTextError("range bounds must be integers".into())),
                }
            } else if self.is_punct("+") || self.is_punct("-") {
                let op = match self.next() {
                    T::Punct(p) => p,
                    _ => unreachable!(),
                };
                let r = self.parse_primary()?;
                t = AspTerm::Func(op, vec![t, r]);
            } else {
                return Ok(t);
            }
        }
    }

    fn parse_primary(&mut self) -> Result<AspTerm, AspTextError> {
        match self.next() {
            T::Int(i) => Ok(AspTerm::Int(i)),
            T::Var(v) => Ok(AspTerm::Var(v)),
            T::Punct(p) if p == "-" => {
                let inner = self.parse_primary()?;
                match inner {
                    AspTerm::Int(i) => Ok(AspTerm::Int(-i)),
                    other => Ok(AspTerm::Func("-".into(), vec![other])),
                }
            }
            T::Punct(p) if p == "(" => {
                let mut args = Vec::new();
                if !self.is_punct(")") {
                    loop {
                        args.push(self.parse_term()?);
                        if self.is_punct(",") {
                            self.next();
                        } else {
                            break;
                        }
                    }
                }
                self.expect_punct(")")?;
                Ok(AspTerm::Tuple(args))
            }
            T::Name(name) => {
                if self.is_punct("(") {
                    self.next();
                    let mut args = Vec::new();
                    loop {
                        args.push(self.parse_term()?);
                        if self.is_punct(",") {
                            self.next();
                        } else {
                            break;
                        }
                    }
                    self.expect_punct(")")?;
                    Ok(AspTerm::Func(name, args))
                } else {
                    Ok(AspTerm::Sym(name))
                }
            }
            other => Err(AspTextError(format!("expected a term, found {other:?}"))),
        }
    }

    fn parse_atom(&mut self) -> Result<AspAtom, AspTextError> {
        match self.parse_term()? {
            AspTerm::Sym(name) => Ok(AspAtom::new(&name, vec![])),
            AspTerm::Func(name, args) => Ok(AspAtom { name, args }),
            other => Err(AspTextError(format!("expected an atom, found {other:?}"))),
        }
    }

    fn parse_literal(&mut self) -> Result<AspLiteral, AspTextError> {
        if matches!(self.peek(), T::Name(n) if n == "not")
            && !matches!(self.peek2(), T::Punct(p) if p == "(")
        {
            self.next();
            return Ok(AspLiteral::Neg(self.parse_atom()?));
        }
        let lhs = self.parse_term()?;
        let op = match self.peek() {
            T::Punct(p) if p == "<" => Some(CmpSym::Lt),
            T::Punct(p) if p == "<=" => Some(CmpSym::Le),
            T::Punct(p) if p == ">" => Some(CmpSym::Gt),
            T::Punct(p) if p == ">=" => Some(CmpSym::Ge),
            T::Punct(p) if p == "=" => Some(CmpSym::Eq),
            T::Punct(p) if p == "!=" => Some(CmpSym::Ne),
            _ => None,
        };
        if let Some(op) = op {
            self.next();
            let rhs = self.parse_term()?;
            return Ok(AspLiteral::Cmp(op, lhs, rhs));
        }
        match lhs {
            AspTerm::Sym(name) => Ok(AspLiteral::Pos(AspAtom::new(&name, vec![]))),
            AspTerm::Func(name, args) => Ok(AspLiteral::Pos(AspAtom { name, args })),
            other => Err(AspTextError(format!(
                "expected a literal, found {other:?}"
            ))),
        }
    }

    fn parse_body(&mut self) -> Result<Vec<AspLiteral>, AspTextError> {
        let mut out = vec![self.parse_literal()?];
        while self.is_punct(",") {
            self.next();
            out.push(self.parse_literal()?);
        }
        Ok(out)
    }

    fn parse_rule(&mut self) -> Result<AspRule, AspTextError> {
        if self.is_punct(":-") {
            self.next();
            let body = self.parse_body()?;
            self.expect_punct(".")?;
            return Ok(AspRule::Constraint { body });
        }
        if self.is_punct(":~") {
            self.next();
            let body = self.parse_body()?;
            self.expect_punct(".")?;
            self.expect_punct("[")?;
            let weight = self.parse_term()?;
            self.expect_punct("@")?;
            let level = self.parse_term()?;
            let mut terms = Vec::new();
            while self.is_punct(",") {
                self.next();
                terms.push(self.parse_term()?);
            }
            self.expect_punct("]")?;
            return Ok(AspRule::Weak {
                body,
                weight,
                level,
                terms,
            });
        }
        if let T::Int(low) = self.peek().clone() {
            // choice rule: l{atom}u [:- body] .
            self.next();
            self.expect_punct("{")?;
            let head = self.parse_atom()?;
            self.expect_punct("}")?;
            let high = match self.next() {
                T::Int(i) => i,
                other => return Err(AspTextError(format!("expected upper bound, found {other:?}"))),
            };
            let body = if self.is_punct(":-") {
                self.next();
                self.parse_body()?
            } else {
                vec![]
            };
            self.expect_punct(".")?;
            return Ok(AspRule::Choice {
                low: low as u32,
                high: high as u32,
                head,
                body,
            });
        }
        let head = self.parse_atom()?;
        if self.is_punct(":-") {
            self.next();
            let body = self.parse_body()?;
            self.expect_punct(".")?;
            Ok(AspRule::Normal { head, body })
        } else {
            self.expect_punct(".")?;
            Ok(AspRule::Fact(head))
        }
    }
}

/// Parses a sequence of rules. `%` comments are skipped.
pub fn parse_program(src: &str) -> Result<Vec<AspRule>, AspTextError> {
    let mut lx = Lexer::new(src);
    let mut toks = Vec::new();
    loop {
        let t = lx.next_token()?;
        if t == T::Eof {
            break;
        }
        toks.push(t);
    }
    let mut p = P { toks, pos: 0 };
    let mut out = Vec::new();
    while p.peek() != &T::Eof {
        out.push(p.parse_rule()?);
    }
    Ok(out)
}

/// Parses a single weak constraint, the form accepted by `--weak`.
pub fn parse_weak(src: &str) -> Result<AspRule, AspTextError> {
    let rules = parse_program(src)?;
    match <[AspRule; 1]>::try_from(rules) {
        Ok([r @ AspRule::Weak { .. }]) => Ok(r),
        _ => Err(AspTextError(
            "expected exactly one weak constraint ':~ body. [w@l, terms]'".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asp::serialize::rule_text;

    #[test]
    fn round_trips_emitted_forms() {
        let src = [
            "time(0..7).",
            "holds(door_locked,0).",
            "ant(1,(Ts),Ts) :- happens(alarm,Ts), time(Ts).",
            "0{happens(Act,Ts)}1 :- supported(Act,Ts), time(Ts), Ts>0.",
            ":- ant(ID,X,Ts), not consTrue(ID,X,Ts), time(Ts).",
            "holds(P,Ts) :- holds(P,Ts-1), not broken(P,Ts), time(Ts-1), time(Ts).",
            ":~ happens(gotoBed,T), time(T). [-T@2, T]",
            "ant(1,(),0).",
            "cons(1,(Cust,Item,T),T,Ts) :- ant(1,(Cust,Item,T),T), happens(apologise(Cust,Item),Ts), Ts=T+4, time(Ts).",
        ];
        for line in src {
            let rules = parse_program(line).unwrap_or_else(|e| panic!("{line}: {e}"));
            assert_eq!(rules.len(), 1, "{line}");
            let back = rule_text(&rules[0]);
            let again = parse_program(&back).unwrap();
            assert_eq!(rules, again, "unstable parse for {line}");
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_program("holds(").is_err());
        assert!(parse_weak("time(0..7).").is_err());
    }
}
