//! Concrete surface syntax for KELPS frameworks (`.kelps` files).
//!
//! Identifiers start lower-case, variables upper-case. Fluents and
//! events carry their timestamp after `@`; auxiliary atoms are
//! unstamped. `%` starts a comment. Declarations end with `.`:
//!
//! ```text
//! initially door_locked.
//! observe alarm at 2.
//! terminates(unlock, door_locked).
//! false <- evacuate@T+1, door_locked@T.
//! alarm@T -> evacuate@T1, T < T1.
//! ```
//!
//! A `#horizon n.` directive converts the parsed framework to n-distant
//! form. Atoms with `@` are fluents when their name is declared by an
//! `initially` fact or a postcondition fluent template, or when they are
//! negated; otherwise they are events.

mod render;

pub use render::render;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::ndistant::to_n_distant;
use crate::syntax::*;
use crate::validate::validate_framework;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParserError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),
}

impl ParserError {
    fn at(tok: &Token, msg: impl Into<String>) -> Self {
        ParserError::Syntax {
            line: tok.line,
            col: tok.col,
            msg: msg.into(),
        }
    }
}

// ---------------------------------------------------------------- lexer

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Name(String),
    Var(String),
    Int(i64),
    Directive(String),
    LParen,
    RParen,
    Comma,
    Dot,
    At,
    Pipe,
    Plus,
    Minus,
    Lt,
    Le,
    Eq,
    Ne,
    Arrow,
    BackArrow,
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: u32,
    col: u32,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Name(s) | Tok::Var(s) => write!(f, "{s}"),
            Tok::Int(i) => write!(f, "{i}"),
            Tok::Directive(s) => write!(f, "#{s}"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::Comma => write!(f, ","),
            Tok::Dot => write!(f, "."),
            Tok::At => write!(f, "@"),
            Tok::Pipe => write!(f, "|"),
            Tok::Plus => write!(f, "+"),
            Tok::Minus => write!(f, "-"),
            Tok::Lt => write!(f, "<"),
            Tok::Le => write!(f, "<="),
            Tok::Eq => write!(f, "="),
            Tok::Ne => write!(f, "!="),
            Tok::Arrow => write!(f, "->"),
            Tok::BackArrow => write!(f, "<-"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<Token>, ParserError> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);
        let mut push = |tok: Tok| {
            out.push(Token {
                tok,
                line: tline,
                col: tcol,
            })
        };
        macro_rules! adv {
            ($n:expr) => {{
                col += $n as u32;
                i += $n;
            }};
        }
        match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
            }
            c if c.is_whitespace() => adv!(1),
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '(' => {
                push(Tok::LParen);
                adv!(1);
            }
            ')' => {
                push(Tok::RParen);
                adv!(1);
            }
            ',' => {
                push(Tok::Comma);
                adv!(1);
            }
            '.' => {
                push(Tok::Dot);
                adv!(1);
            }
            '@' => {
                push(Tok::At);
                adv!(1);
            }
            '|' => {
                push(Tok::Pipe);
                adv!(1);
            }
            '+' => {
                push(Tok::Plus);
                adv!(1);
            }
            '-' => {
                if chars.get(i + 1) == Some(&'>') {
                    push(Tok::Arrow);
                    adv!(2);
                } else {
                    push(Tok::Minus);
                    adv!(1);
                }
            }
            '<' => {
                if chars.get(i + 1) == Some(&'=') {
                    push(Tok::Le);
                    adv!(2);
                } else if chars.get(i + 1) == Some(&'-') {
                    push(Tok::BackArrow);
                    adv!(2);
                } else {
                    push(Tok::Lt);
                    adv!(1);
                }
            }
            '=' => {
                push(Tok::Eq);
                adv!(1);
            }
            '!' => {
                if chars.get(i + 1) == Some(&'=') {
                    push(Tok::Ne);
                    adv!(2);
                } else {
                    return Err(ParserError::Syntax {
                        line,
                        col,
                        msg: "unexpected character '!'".into(),
                    });
                }
            }
            '#' => {
                let mut j = i + 1;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[i + 1..j].iter().collect();
                push(Tok::Directive(word));
                let n = j - i;
                adv!(n);
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                let val: i64 = word.parse().map_err(|_| ParserError::Syntax {
                    line,
                    col,
                    msg: format!("integer out of range: {word}"),
                })?;
                push(Tok::Int(val));
                let n = j - i;
                adv!(n);
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let word: String = chars[i..j].iter().collect();
                if c.is_uppercase() {
                    push(Tok::Var(word));
                } else {
                    push(Tok::Name(word));
                }
                let n = j - i;
                adv!(n);
            }
            other => {
                return Err(ParserError::Syntax {
                    line,
                    col,
                    msg: format!("unexpected character '{other}'"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(out)
}

// ------------------------------------------------------- raw syntax tree

/// An additive expression over names, variables and integers, before
/// time/term classification.
#[derive(Clone, Debug, PartialEq, Eq)]
enum Expr {
    Name(String),
    Var(String),
    Int(i64),
    App(String, Vec<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
}

impl Expr {
    fn to_term(&self) -> Term {
        match self {
            Expr::Name(s) => Term::Const(s.clone()),
            Expr::Var(v) => Term::Var(v.clone()),
            Expr::Int(i) => Term::Int(*i),
            Expr::App(f, args) => {
                Term::Compound(f.clone(), args.iter().map(Expr::to_term).collect())
            }
            Expr::Add(a, b) => Term::app("+", vec![a.to_term(), b.to_term()]),
            Expr::Sub(a, b) => Term::app("-", vec![a.to_term(), b.to_term()]),
        }
    }

    fn to_time(&self) -> Option<TimeExpr> {
        match self {
            Expr::Var(v) => Some(TimeExpr::var(v)),
            Expr::Int(i) if *i >= 0 => Some(TimeExpr::Const(*i as u32)),
            Expr::Add(a, b) => match (a.as_ref(), b.as_ref()) {
                (Expr::Var(v), Expr::Int(k)) => Some(TimeExpr::offset(v, *k)),
                _ => None,
            },
            Expr::Sub(a, b) => match (a.as_ref(), b.as_ref()) {
                (Expr::Var(v), Expr::Int(k)) => Some(TimeExpr::offset(v, -*k)),
                _ => None,
            },
            _ => None,
        }
    }

    fn vars(&self, out: &mut Vec<String>) {
        match self {
            Expr::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Expr::App(_, args) => {
                for a in args {
                    a.vars(out);
                }
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            _ => {}
        }
    }
}

#[derive(Clone, Debug)]
enum RawCond {
    Atom {
        positive: bool,
        name: String,
        args: Vec<Expr>,
        time: Option<Expr>,
        line: u32,
        col: u32,
    },
    Cmp {
        op: CmpOp,
        lhs: Expr,
        rhs: Expr,
        line: u32,
        col: u32,
    },
    Max(Expr, Expr, Expr, u32, u32),
}

#[derive(Clone, Debug)]
enum Decl {
    Horizon(u32),
    Initially(GroundAtom),
    Observe(GroundAtom, u32),
    AuxFact(GroundAtom),
    Post {
        effect: EffectKind,
        event: Template,
        fluent: Template,
        guard: Vec<RawCond>,
    },
    Pre(Vec<RawCond>),
    Rule {
        antecedent: Vec<RawCond>,
        disjuncts: Vec<Vec<RawCond>>,
    },
}

// --------------------------------------------------------------- parser

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok) -> Result<Token, ParserError> {
        let t = self.next();
        if t.tok == tok {
            Ok(t)
        } else {
            Err(ParserError::at(&t, format!("expected '{tok}', found '{}'", t.tok)))
        }
    }

    fn expect_name(&mut self) -> Result<(String, Token), ParserError> {
        let t = self.next();
        match &t.tok {
            Tok::Name(s) => Ok((s.clone(), t.clone())),
            other => Err(ParserError::at(&t, format!("expected identifier, found '{other}'"))),
        }
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if matches!(&self.peek().tok, Tok::Name(s) if s == kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn parse_program(&mut self) -> Result<Vec<Decl>, ParserError> {
        let mut decls = Vec::new();
        while self.peek().tok != Tok::Eof {
            decls.push(self.parse_decl()?);
        }
        Ok(decls)
    }

    fn parse_decl(&mut self) -> Result<Decl, ParserError> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Directive(word) if word == "horizon" => {
                self.next();
                let tok = self.next();
                let n = match tok.tok {
                    Tok::Int(i) if i >= 0 => i as u32,
                    _ => return Err(ParserError::at(&tok, "expected a non-negative horizon")),
                };
                self.expect(Tok::Dot)?;
                Ok(Decl::Horizon(n))
            }
            Tok::Directive(word) => Err(ParserError::at(&t, format!("unknown directive #{word}"))),
            Tok::Name(word) if word == "initially" => {
                self.next();
                let atom = self.parse_ground_atom("initial fluent")?;
                self.expect(Tok::Dot)?;
                Ok(Decl::Initially(atom))
            }
            Tok::Name(word) if word == "observe" => {
                self.next();
                let atom = self.parse_ground_atom("observed event")?;
                let at = self.next();
                if !matches!(&at.tok, Tok::Name(s) if s == "at") {
                    return Err(ParserError::at(&at, "expected 'at'"));
                }
                let tok = self.next();
                let ts = match tok.tok {
                    Tok::Int(i) if i >= 0 => i as u32,
                    _ => return Err(ParserError::at(&tok, "expected a timestamp")),
                };
                self.expect(Tok::Dot)?;
                Ok(Decl::Observe(atom, ts))
            }
            Tok::Name(word) if word == "aux" => {
                self.next();
                let atom = self.parse_ground_atom("aux fact")?;
                self.expect(Tok::Dot)?;
                Ok(Decl::AuxFact(atom))
            }
            Tok::Name(word) if word == "initiates" || word == "terminates" => {
                let effect = if word == "initiates" {
                    EffectKind::Initiates
                } else {
                    EffectKind::Terminates
                };
                self.next();
                self.expect(Tok::LParen)?;
                let event = self.parse_template()?;
                self.expect(Tok::Comma)?;
                let fluent = self.parse_template()?;
                self.expect(Tok::RParen)?;
                let guard = if self.eat_keyword("if") {
                    self.parse_cond_list()?
                } else {
                    vec![]
                };
                self.expect(Tok::Dot)?;
                Ok(Decl::Post {
                    effect,
                    event,
                    fluent,
                    guard,
                })
            }
            Tok::Name(word) if word == "false" => {
                self.next();
                self.expect(Tok::BackArrow)?;
                let body = self.parse_cond_list()?;
                self.expect(Tok::Dot)?;
                Ok(Decl::Pre(body))
            }
            _ => {
                // reactive rule: condList -> disjunct { | disjunct } .
                let antecedent = if self.eat_keyword("true") {
                    vec![]
                } else {
                    self.parse_cond_list()?
                };
                self.expect(Tok::Arrow)?;
                let mut disjuncts = vec![self.parse_cond_list()?];
                while self.peek().tok == Tok::Pipe {
                    self.next();
                    disjuncts.push(self.parse_cond_list()?);
                }
                self.expect(Tok::Dot)?;
                Ok(Decl::Rule {
                    antecedent,
                    disjuncts,
                })
            }
        }
    }

    fn parse_ground_atom(&mut self, what: &str) -> Result<GroundAtom, ParserError> {
        let (name, tok) = self.expect_name()?;
        let mut args = Vec::new();
        if self.peek().tok == Tok::LParen {
            self.next();
            loop {
                args.push(self.parse_expr()?);
                if self.peek().tok == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
        }
        let terms: Vec<Term> = args.iter().map(|e| e.to_term().eval()).collect();
        if terms.iter().any(|t| !t.is_ground()) {
            return Err(ParserError::at(&tok, format!("{what} must be ground")));
        }
        Ok(GroundAtom::new(&name, terms))
    }

    fn parse_template(&mut self) -> Result<Template, ParserError> {
        let (name, _) = self.expect_name()?;
        let mut args = Vec::new();
        if self.peek().tok == Tok::LParen {
            self.next();
            loop {
                args.push(self.parse_expr()?.to_term());
                if self.peek().tok == Tok::Comma {
                    self.next();
                } else {
                    break;
                }
            }
            self.expect(Tok::RParen)?;
        }
        Ok(Template { name, args })
    }

    fn parse_cond_list(&mut self) -> Result<Vec<RawCond>, ParserError> {
        let mut out = vec![self.parse_cond()?];
        while self.peek().tok == Tok::Comma {
            self.next();
            out.push(self.parse_cond()?);
        }
        Ok(out)
    }

    fn parse_cond(&mut self) -> Result<RawCond, ParserError> {
        let start = self.peek().clone();
        if matches!(&start.tok, Tok::Name(s) if s == "max") {
            // max(timeExpr, timeExpr, timeExpr)
            self.next();
            self.expect(Tok::LParen)?;
            let a = self.parse_expr()?;
            self.expect(Tok::Comma)?;
            let b = self.parse_expr()?;
            self.expect(Tok::Comma)?;
            let c = self.parse_expr()?;
            self.expect(Tok::RParen)?;
            return Ok(RawCond::Max(a, b, c, start.line, start.col));
        }
        let positive = !self.eat_keyword("not");
        // Either an atom (NAME...) or a comparison starting with any expr.
        let is_atom_start = matches!(&self.peek().tok, Tok::Name(_))
            && !matches!(
                &self.toks.get(self.pos + 1).map(|t| &t.tok),
                Some(Tok::Plus) | Some(Tok::Minus) | Some(Tok::Lt) | Some(Tok::Le)
                    | Some(Tok::Eq) | Some(Tok::Ne)
            );
        if is_atom_start {
            let (name, _) = self.expect_name()?;
            let mut args = Vec::new();
            if self.peek().tok == Tok::LParen {
                self.next();
                loop {
                    args.push(self.parse_expr()?);
                    if self.peek().tok == Tok::Comma {
                        self.next();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::RParen)?;
            }
            let time = if self.peek().tok == Tok::At {
                self.next();
                Some(self.parse_expr()?)
            } else {
                None
            };
            return Ok(RawCond::Atom {
                positive,
                name,
                args,
                time,
                line: start.line,
                col: start.col,
            });
        }
        // comparison
        let lhs = self.parse_expr()?;
        let op_tok = self.next();
        let op = match &op_tok.tok {
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Eq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            other => {
                let msg = format!("expected a comparison operator, found '{other}'");
                return Err(ParserError::at(&op_tok, msg));
            }
        };
        if !positive {
            return Err(ParserError::at(&start, "comparisons cannot be negated"));
        }
        let rhs = self.parse_expr()?;
        Ok(RawCond::Cmp {
            op,
            lhs,
            rhs,
            line: start.line,
            col: start.col,
        })
    }

    fn parse_expr(&mut self) -> Result<Expr, ParserError> {
        let mut lhs = self.parse_primary()?;
        loop {
            match self.peek().tok {
                Tok::Plus => {
                    self.next();
                    let rhs = self.parse_primary()?;
                    lhs = Expr::Add(Box::new(lhs), Box::new(rhs));
                }
                Tok::Minus => {
                    self.next();
                    let rhs = self.parse_primary()?;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_primary(&mut self) -> Result<Expr, ParserError> {
        let t = self.next();
        match &t.tok {
            Tok::Int(i) => Ok(Expr::Int(*i)),
            Tok::Var(v) => Ok(Expr::Var(v.clone())),
            Tok::Name(name) => {
                if self.peek().tok == Tok::LParen {
                    self.next();
                    let mut args = Vec::new();
                    loop {
                        args.push(self.parse_expr()?);
                        if self.peek().tok == Tok::Comma {
                            self.next();
                        } else {
                            break;
                        }
                    }
                    self.expect(Tok::RParen)?;
                    Ok(Expr::App(name.clone(), args))
                } else {
                    Ok(Expr::Name(name.clone()))
                }
            }
            other => Err(ParserError::at(&t, format!("expected a term, found '{other}'"))),
        }
    }
}

// ----------------------------------------------------------- resolution

/// Classifies raw conditions into typed ones. `fluents`/`events` are the
/// declared predicate names; undeclared stamped atoms default to events
/// unless negated (event atoms are always positive).
struct Resolver {
    fluents: BTreeSet<String>,
    events: BTreeSet<String>,
}

/// Variables in timestamp positions vs. argument positions, scanned over
/// every conjunct of a rule so classification is rule-wide.
fn scan_sorts(lists: &[&[RawCond]]) -> (BTreeSet<String>, BTreeSet<String>) {
    let mut time_vars: BTreeSet<String> = BTreeSet::new();
    let mut arg_vars: BTreeSet<String> = BTreeSet::new();
    for raw in lists {
        for rc in *raw {
            match rc {
                RawCond::Atom { args, time, .. } => {
                    if let Some(te) = time {
                        let mut vs = Vec::new();
                        te.vars(&mut vs);
                        time_vars.extend(vs);
                    }
                    for a in args {
                        let mut vs = Vec::new();
                        a.vars(&mut vs);
                        arg_vars.extend(vs);
                    }
                }
                RawCond::Max(a, b, c, ..) => {
                    for e in [a, b, c] {
                        let mut vs = Vec::new();
                        e.vars(&mut vs);
                        time_vars.extend(vs);
                    }
                }
                RawCond::Cmp { .. } => {}
            }
        }
    }
    (time_vars, arg_vars)
}

impl Resolver {
    fn resolve_list(
        &self,
        raw: &[RawCond],
        time_vars: &BTreeSet<String>,
        arg_vars: &BTreeSet<String>,
    ) -> Result<Vec<Condition>, ParserError> {
        let mut out = Vec::new();
        for rc in raw {
            match rc {
                RawCond::Atom {
                    positive,
                    name,
                    args,
                    time,
                    line,
                    col,
                } => {
                    let terms: Vec<Term> = args.iter().map(Expr::to_term).collect();
                    match time {
                        None => out.push(Condition::Aux {
                            name: name.clone(),
                            args: terms,
                            positive: *positive,
                        }),
                        Some(te) => {
                            let texpr = te.to_time().ok_or(ParserError::Syntax {
                                line: *line,
                                col: *col,
                                msg: format!(
                                    "timestamp of {name} must be a time variable, constant, \
                                     or variable plus offset"
                                ),
                            })?;
                            let is_fluent = self.fluents.contains(name)
                                || (!*positive && !self.events.contains(name));
                            if is_fluent {
                                out.push(Condition::Fluent {
                                    name: name.clone(),
                                    args: terms,
                                    positive: *positive,
                                    time: texpr,
                                });
                            } else if !*positive {
                                return Err(ParserError::Syntax {
                                    line: *line,
                                    col: *col,
                                    msg: format!("event atom {name} cannot be negated"),
                                });
                            } else {
                                out.push(Condition::Event {
                                    name: name.clone(),
                                    args: terms,
                                    time: texpr,
                                });
                            }
                        }
                    }
                }
                RawCond::Max(a, b, c, line, col) => {
                    let err = || ParserError::Syntax {
                        line: *line,
                        col: *col,
                        msg: "max/3 operands must be time expressions".into(),
                    };
                    out.push(Condition::Temporal(TemporalConstraint::Max3(
                        a.to_time().ok_or_else(err)?,
                        b.to_time().ok_or_else(err)?,
                        c.to_time().ok_or_else(err)?,
                    )));
                }
                RawCond::Cmp {
                    op,
                    lhs,
                    rhs,
                    line,
                    col,
                } => {
                    let mut vs = Vec::new();
                    lhs.vars(&mut vs);
                    rhs.vars(&mut vs);
                    let any_time = vs.iter().any(|v| time_vars.contains(v));
                    let any_arg = vs.iter().any(|v| arg_vars.contains(v) && !time_vars.contains(v));
                    if any_time && any_arg {
                        return Err(ParserError::Syntax {
                            line: *line,
                            col: *col,
                            msg: "comparison mixes time and non-time variables".into(),
                        });
                    }
                    // Variables occurring only in comparisons default to
                    // the time sort.
                    let temporal = !any_arg;
                    if temporal {
                        let (a, b) = match (lhs.to_time(), rhs.to_time()) {
                            (Some(a), Some(b)) => (a, b),
                            _ => {
                                return Err(ParserError::Syntax {
                                    line: *line,
                                    col: *col,
                                    msg: "temporal comparison operands must be time expressions"
                                        .into(),
                                })
                            }
                        };
                        let c = match op {
                            CmpOp::Lt => TemporalConstraint::Lt(a, b),
                            CmpOp::Le => TemporalConstraint::Le(a, b),
                            CmpOp::Eq => TemporalConstraint::Eq(a, b),
                            CmpOp::Ne => {
                                return Err(ParserError::Syntax {
                                    line: *line,
                                    col: *col,
                                    msg: "'!=' is not part of the temporal constraint language"
                                        .into(),
                                })
                            }
                        };
                        out.push(Condition::Temporal(c));
                    } else {
                        out.push(Condition::Compare {
                            op: *op,
                            lhs: lhs.to_term(),
                            rhs: rhs.to_term(),
                        });
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Replaces constant timestamps on rule atoms with a fresh time variable
/// plus an equality constraint, appended to the same conjunct.
fn normalize_constant_timestamps(conds: &mut Vec<Condition>, used: &mut BTreeSet<String>) {
    let mut extra = Vec::new();
    for c in conds.iter_mut() {
        let time = match c {
            Condition::Fluent { time, .. } | Condition::Event { time, .. } => time,
            _ => continue,
        };
        if let TimeExpr::Const(k) = *time {
            let fresh = fresh_var(used);
            *time = TimeExpr::var(&fresh);
            extra.push(Condition::teq(TimeExpr::var(&fresh), TimeExpr::Const(k)));
        }
    }
    conds.extend(extra);
}

fn fresh_var(used: &mut BTreeSet<String>) -> String {
    for i in 0.. {
        let name = if i == 0 {
            "Tc".to_string()
        } else {
            format!("Tc{i}")
        };
        if used.insert(name.clone()) {
            return name;
        }
    }
    unreachable!()
}

/// Parses a `.kelps` source into a validated framework.
pub fn parse(text: &str) -> Result<Framework, ParserError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let decls = p.parse_program()?;

    // First pass: declared fluent/event names.
    let mut fluents = BTreeSet::new();
    let mut events = BTreeSet::new();
    for d in &decls {
        match d {
            Decl::Initially(a) => {
                fluents.insert(a.name.clone());
            }
            Decl::Observe(a, _) => {
                events.insert(a.name.clone());
            }
            Decl::Post { event, fluent, .. } => {
                events.insert(event.name.clone());
                fluents.insert(fluent.name.clone());
            }
            _ => {}
        }
    }
    let resolver = Resolver { fluents, events };

    let mut f = Framework::default();
    let mut horizon = None;
    let mut next_rule_id = 1u32;
    for d in &decls {
        match d {
            Decl::Horizon(n) => horizon = Some(*n),
            Decl::Initially(a) => {
                f.initial_state.insert(a.clone());
            }
            Decl::Observe(a, t) => {
                f.ext.entry(*t).or_default().insert(a.clone());
            }
            Decl::AuxFact(a) => {
                f.aux.insert(a.clone());
            }
            Decl::Post {
                effect,
                event,
                fluent,
                guard,
            } => {
                let (tv, av) = scan_sorts(&[guard]);
                let guard = resolver.resolve_list(guard, &tv, &av)?;
                f.causal.post.push(PostEntry {
                    effect: *effect,
                    event: event.clone(),
                    fluent: fluent.clone(),
                    guard,
                });
            }
            Decl::Pre(body) => {
                let (tv, av) = scan_sorts(&[body]);
                let body = resolver.resolve_list(body, &tv, &av)?;
                f.causal.pre.push(PreConstraint { body });
            }
            Decl::Rule {
                antecedent,
                disjuncts,
            } => {
                let mut lists: Vec<&[RawCond]> = vec![antecedent.as_slice()];
                lists.extend(disjuncts.iter().map(|d| d.as_slice()));
                let (tv, av) = scan_sorts(&lists);
                let mut ant = resolver.resolve_list(antecedent, &tv, &av)?;
                let mut ds = Vec::new();
                for d in disjuncts {
                    ds.push(resolver.resolve_list(d, &tv, &av)?);
                }
                let mut used: BTreeSet<String> = BTreeSet::new();
                for c in ant.iter().chain(ds.iter().flatten()) {
                    used.extend(c.time_vars());
                    used.extend(c.nontime_vars());
                }
                normalize_constant_timestamps(&mut ant, &mut used);
                for d in &mut ds {
                    normalize_constant_timestamps(d, &mut used);
                }
                f.rules.push(ReactiveRule::new(next_rule_id, ant, ds));
                next_rule_id += 1;
            }
        }
    }

    if let Some(n) = horizon {
        f = to_n_distant(&f, n).map_err(|e| ParserError::Validation(vec![e.to_string()]))?;
    }

    let report = validate_framework(&f);
    if !report.is_clean() {
        return Err(ParserError::Validation(report.errors));
    }
    Ok(f)
}
