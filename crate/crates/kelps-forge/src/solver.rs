//! Child-process bridge to an ASP solver: feed serialized programs on
//! stdin, parse answer sets and optimization costs (JSON or text
//! output), and lift answer sets back to KELPS model structures.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::asp::{AspAtom, AspLiteral, AspRule, AspSubst, AspTerm, CmpSym};
use crate::syntax::{Framework, GroundAtom, ModelStructure, Term};

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub path: PathBuf,
    /// Arguments inserted before the generated ones; a `.js` solver is
    /// run through `node`.
    pub args: Vec<String>,
    /// Answer sets requested; 0 asks for all.
    pub num_models: u32,
    pub time_limit: Duration,
    /// Enumerate optimal models (`--opt-mode=optN`) and flag them.
    pub optimize: bool,
}

impl SolverConfig {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        SolverConfig {
            path: path.into(),
            args: vec![],
            num_models: 0,
            time_limit: Duration::from_secs(60),
            optimize: false,
        }
    }

    /// Reads `KELPS_FORGE_SOLVER`, falling back to `clingo` on PATH.
    pub fn from_env() -> Option<SolverConfig> {
        if let Ok(path) = std::env::var("KELPS_FORGE_SOLVER") {
            if !path.trim().is_empty() {
                return Some(SolverConfig::new(path.trim()));
            }
        }
        let probe = Command::new("clingo")
            .arg("--version")
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status();
        match probe {
            Ok(st) if st.success() => Some(SolverConfig::new("clingo")),
            _ => None,
        }
    }

    pub fn models(mut self, n: u32) -> Self {
        self.num_models = n;
        self
    }

    pub fn optimizing(mut self) -> Self {
        self.optimize = true;
        self
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("solver not found: {0}")]
    NotFound(String),
    #[error("solver timed out after {0:?}")]
    Timeout(Duration),
    #[error("cannot parse solver output: {msg}\n--- raw output ---\n{raw}")]
    ParseError { msg: String, raw: String },
    #[error("malformed atom {0}: expected an integer timestamp within the horizon")]
    MalformedAtom(String),
    #[error("framework has no horizon")]
    NoHorizon,
    #[error("unsafe weak constraint: {0}")]
    UnsafeWeakConstraint(String),
    #[error("solver io: {0}")]
    Io(#[from] std::io::Error),
}

/// One answer set: ground atoms, the cost vector (highest level first,
/// empty without optimization), and whether the solver marked it optimal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnswerSet {
    pub atoms: BTreeSet<AspAtom>,
    pub costs: Vec<i64>,
    pub optimal: bool,
}

// --------------------------------------------------------- JSON output

#[derive(Deserialize)]
struct JsonOut {
    #[serde(rename = "Result")]
    result: String,
    #[serde(rename = "Call", default)]
    calls: Vec<JsonCall>,
    #[serde(rename = "Models", default)]
    models: Option<JsonModels>,
}

#[derive(Deserialize)]
struct JsonCall {
    #[serde(rename = "Witnesses", default)]
    witnesses: Vec<JsonWitness>,
}

#[derive(Deserialize)]
struct JsonWitness {
    #[serde(rename = "Value", default)]
    value: Vec<String>,
    #[serde(rename = "Costs", default)]
    costs: Option<Vec<i64>>,
}

#[derive(Deserialize)]
struct JsonModels {
    #[serde(rename = "Costs", default)]
    costs: Option<Vec<i64>>,
    #[serde(rename = "Optimum", default)]
    optimum: Option<String>,
}

/// Runs the solver on the program text and returns its answer sets;
/// UNSAT yields an empty list. Witnesses are deduplicated (optimal-model
/// enumeration revisits the improving models found on the way down).
pub fn solve(program: &str, cfg: &SolverConfig) -> Result<Vec<AnswerSet>, SolverError> {
    let raw = run_solver(program, cfg)?;
    parse_solver_output(&raw)
}

pub struct SolveOutcome {
    pub sets: Vec<AnswerSet>,
    /// Solver-reported total seconds; wall clock when unreported.
    pub solver_seconds: f64,
}

/// Like [`solve`], also extracting the solver's own timing.
pub fn solve_timed(program: &str, cfg: &SolverConfig) -> Result<SolveOutcome, SolverError> {
    let started = std::time::Instant::now();
    let raw = run_solver(program, cfg)?;
    let wall = started.elapsed().as_secs_f64();
    let sets = parse_solver_output(&raw)?;
    let reported = serde_json::from_str::<serde_json::Value>(raw.trim())
        .ok()
        .and_then(|v| v.get("Time")?.get("Total")?.as_f64());
    Ok(SolveOutcome {
        sets,
        solver_seconds: reported.unwrap_or(wall),
    })
}

fn run_solver(program: &str, cfg: &SolverConfig) -> Result<String, SolverError> {
    let is_js = cfg.path.extension().is_some_and(|e| e == "js");
    let mut cmd = if is_js {
        let mut c = Command::new("node");
        c.arg(&cfg.path);
        c
    } else {
        Command::new(&cfg.path)
    };
    cmd.args(&cfg.args);
    cmd.arg("--outf=2");
    if cfg.optimize {
        cmd.arg("--opt-mode=optN");
    }
    cmd.arg(cfg.num_models.to_string());
    cmd.arg("-");
    cmd.stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    let mut child = cmd.spawn().map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            SolverError::NotFound(cfg.path.display().to_string())
        } else {
            SolverError::Io(e)
        }
    })?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let program_owned = program.to_string();
    let writer = std::thread::spawn(move || {
        let _ = stdin.write_all(program_owned.as_bytes());
        drop(stdin);
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        use std::io::Read;
        let mut buf = String::new();
        let _ = stdout.read_to_string(&mut buf);
        buf
    });

    let deadline = std::time::Instant::now() + cfg.time_limit;
    loop {
        match child.try_wait()? {
            Some(_) => break,
            None => {
                if std::time::Instant::now() > deadline {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(SolverError::Timeout(cfg.time_limit));
                }
                std::thread::sleep(Duration::from_millis(10));
            }
        }
    }
    let _ = writer.join();
    let out = reader.join().unwrap_or_default();
    Ok(out)
}

/// Parses solver output: the JSON format when the output is JSON,
/// otherwise the classic `Answer:`/`Optimization:` text blocks.
pub fn parse_solver_output(raw: &str) -> Result<Vec<AnswerSet>, SolverError> {
    let trimmed = raw.trim_start();
    if trimmed.starts_with('{') {
        parse_json_output(raw)
    } else {
        parse_text_output(raw)
    }
}

fn parse_json_output(raw: &str) -> Result<Vec<AnswerSet>, SolverError> {
    let parsed: JsonOut =
        serde_json::from_str(raw.trim()).map_err(|e| SolverError::ParseError {
            msg: e.to_string(),
            raw: clip(raw),
        })?;
    match parsed.result.as_str() {
        "UNSATISFIABLE" => return Ok(vec![]),
        "SATISFIABLE" | "OPTIMUM FOUND" | "UNKNOWN" => {}
        other => {
            return Err(SolverError::ParseError {
                msg: format!("solver reported {other}"),
                raw: clip(raw),
            })
        }
    }
    let optimum_costs = parsed.models.as_ref().and_then(|m| {
        if m.optimum.as_deref() == Some("yes") {
            m.costs.clone()
        } else {
            None
        }
    });
    let mut out: Vec<AnswerSet> = Vec::new();
    for call in &parsed.calls {
        for w in &call.witnesses {
            let mut atoms = BTreeSet::new();
            for a in &w.value {
                atoms.insert(parse_ground_atom(a).ok_or_else(|| SolverError::ParseError {
                    msg: format!("bad atom {a}"),
                    raw: clip(raw),
                })?);
            }
            let costs = w.costs.clone().unwrap_or_default();
            let optimal = match &optimum_costs {
                Some(best) => &costs == best,
                None => costs.is_empty(),
            };
            let set = AnswerSet {
                atoms,
                costs,
                optimal,
            };
            if !out.iter().any(|s| s.atoms == set.atoms) {
                out.push(set);
            }
        }
    }
    Ok(out)
}

fn parse_text_output(raw: &str) -> Result<Vec<AnswerSet>, SolverError> {
    let mut out: Vec<AnswerSet> = Vec::new();
    let mut lines = raw.lines().peekable();
    let mut saw_verdict = false;
    let mut optimum_found = false;
    while let Some(line) = lines.next() {
        let line = line.trim();
        if line.starts_with("Answer:") {
            let atoms_line = lines.next().unwrap_or("").trim();
            let mut atoms = BTreeSet::new();
            for tok in split_atoms(atoms_line) {
                atoms.insert(parse_ground_atom(&tok).ok_or_else(|| SolverError::ParseError {
                    msg: format!("bad atom {tok}"),
                    raw: clip(raw),
                })?);
            }
            let mut costs = Vec::new();
            if let Some(next) = lines.peek() {
                if let Some(rest) = next.trim().strip_prefix("Optimization:") {
                    costs = rest
                        .split_whitespace()
                        .filter_map(|c| c.parse().ok())
                        .collect();
                    lines.next();
                }
            }
            let set = AnswerSet {
                atoms,
                costs,
                optimal: false,
            };
            if !out.iter().any(|s| s.atoms == set.atoms) {
                out.push(set);
            }
        } else if line == "UNSATISFIABLE" {
            return Ok(vec![]);
        } else if line == "SATISFIABLE" {
            saw_verdict = true;
        } else if line == "OPTIMUM FOUND" {
            saw_verdict = true;
            optimum_found = true;
        }
    }
    if !saw_verdict && out.is_empty() {
        return Err(SolverError::ParseError {
            msg: "no answer sets and no verdict in solver output".into(),
            raw: clip(raw),
        });
    }
    if optimum_found {
        let best = out.last().map(|s| s.costs.clone()).unwrap_or_default();
        for s in &mut out {
            s.optimal = s.costs == best;
        }
    } else {
        for s in &mut out {
            s.optimal = s.costs.is_empty();
        }
    }
    Ok(out)
}

/// Splits `a(1,b) c d(e(2))` on spaces outside parentheses.
fn split_atoms(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for ch in line.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                cur.push(ch);
            }
            ' ' if depth == 0 => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            _ => cur.push(ch),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Parses one ground atom printed by the solver.
pub fn parse_ground_atom(s: &str) -> Option<AspAtom> {
    let rules = crate::asp::text::parse_program(&format!("{s}.")).ok()?;
    match <[AspRule; 1]>::try_from(rules) {
        Ok([AspRule::Fact(a)]) if a.is_ground() => Some(a),
        _ => None,
    }
}

fn clip(raw: &str) -> String {
    const LIMIT: usize = 4000;
    if raw.len() > LIMIT {
        format!("{}…", &raw[..LIMIT])
    } else {
        raw.to_string()
    }
}

// ------------------------------------------------------------- lifting

fn asp_term_to_term(t: &AspTerm) -> Option<Term> {
    match t {
        AspTerm::Sym(s) => Some(Term::Const(s.clone())),
        AspTerm::Int(i) => Some(Term::Int(*i)),
        AspTerm::Func(f, args) => {
            let args: Option<Vec<Term>> = args.iter().map(asp_term_to_term).collect();
            Some(Term::Compound(f.clone(), args?))
        }
        _ => None,
    }
}

fn asp_term_to_ground_atom(t: &AspTerm) -> Option<GroundAtom> {
    match t {
        AspTerm::Sym(s) => Some(GroundAtom::new(s, vec![])),
        AspTerm::Func(f, args) => {
            let args: Option<Vec<Term>> = args.iter().map(asp_term_to_term).collect();
            Some(GroundAtom::new(f, args?))
        }
        _ => None,
    }
}

/// Lifts an answer set to a model structure: `holds(p,i)` atoms build
/// the states, non-external `happens(e,i)` atoms the actions; external
/// events and aux facts are copied from the framework.
pub fn extract_model(a: &AnswerSet, f: &Framework) -> Result<ModelStructure, SolverError> {
    let n = f.horizon.ok_or(SolverError::NoHorizon)?;
    let mut m = ModelStructure {
        n,
        states: vec![BTreeSet::new(); n as usize + 1],
        acts: Default::default(),
        ext: f.ext.clone(),
        aux: f.aux.clone(),
    };
    for atom in &a.atoms {
        match atom.name.as_str() {
            "holds" | "happens" if atom.args.len() == 2 => {}
            _ => continue,
        }
        let bad = || SolverError::MalformedAtom(crate::asp::serialize::atom_text(atom));
        let t = match &atom.args[1] {
            AspTerm::Int(i) if *i >= 0 && *i <= n as i64 => *i as u32,
            _ => return Err(bad()),
        };
        let ga = asp_term_to_ground_atom(&atom.args[0]).ok_or_else(bad)?;
        if atom.name == "holds" {
            m.states[t as usize].insert(ga);
        } else if t >= 1 {
            let external = f.ext.get(&t).is_some_and(|evs| evs.contains(&ga));
            if !external {
                m.acts.entry(t).or_default().insert(ga);
            }
        }
    }
    Ok(m)
}

/// Recomputes the per-level penalty totals of an answer set by grounding
/// each weak constraint against it. Levels are reported highest first;
/// constant levels appearing in the constraints are always present.
pub fn cost_of(a: &AnswerSet, weak: &[AspRule]) -> Result<Vec<(i64, i64)>, SolverError> {
    use std::collections::BTreeMap;
    let mut tuples: BTreeSet<(i64, i64, Vec<AspTerm>)> = BTreeSet::new();
    let mut levels: BTreeSet<i64> = BTreeSet::new();
    for w in weak {
        let (body, weight, level, terms) = match w {
            AspRule::Weak {
                body,
                weight,
                level,
                terms,
            } => (body, weight, level, terms),
            other => {
                return Err(SolverError::UnsafeWeakConstraint(format!(
                    "not a weak constraint: {}",
                    crate::asp::serialize::rule_text(other)
                )))
            }
        };
        w.check_safety().map_err(SolverError::UnsafeWeakConstraint)?;
        if let AspTerm::Int(l) = level {
            levels.insert(*l);
        }
        for sub in ground_body(body, &a.atoms)? {
            let wv = eval_int(&weight.apply(&sub)).ok_or_else(|| {
                SolverError::UnsafeWeakConstraint("weight does not evaluate to an integer".into())
            })?;
            let lv = eval_int(&level.apply(&sub)).ok_or_else(|| {
                SolverError::UnsafeWeakConstraint("level does not evaluate to an integer".into())
            })?;
            let ts: Vec<AspTerm> = terms.iter().map(|t| t.apply(&sub).eval()).collect();
            levels.insert(lv);
            tuples.insert((lv, wv, ts));
        }
    }
    let mut by_level: BTreeMap<i64, i64> = levels.iter().map(|l| (*l, 0)).collect();
    for (l, w, _) in &tuples {
        *by_level.entry(*l).or_insert(0) += w;
    }
    Ok(by_level.into_iter().rev().collect())
}

fn eval_int(t: &AspTerm) -> Option<i64> {
    match t.eval() {
        AspTerm::Int(i) => Some(i),
        _ => None,
    }
}

/// Matches an atom pattern against one ground atom.
pub fn match_asp(pattern: &AspAtom, ground: &AspAtom, sub: &mut AspSubst) -> bool {
    fn term(p: &AspTerm, g: &AspTerm, sub: &mut AspSubst) -> bool {
        let p = p.apply(sub).eval();
        match (&p, g) {
            (AspTerm::Var(v), g) => {
                sub.insert(v.clone(), g.clone());
                true
            }
            (AspTerm::Sym(a), AspTerm::Sym(b)) => a == b,
            (AspTerm::Int(a), AspTerm::Int(b)) => a == b,
            (AspTerm::Func(f, fa), AspTerm::Func(g2, ga)) => {
                f == g2 && fa.len() == ga.len() && fa.iter().zip(ga).all(|(x, y)| term(x, y, sub))
            }
            (AspTerm::Tuple(fa), AspTerm::Tuple(ga)) => {
                fa.len() == ga.len() && fa.iter().zip(ga).all(|(x, y)| term(x, y, sub))
            }
            _ => false,
        }
    }
    if pattern.name != ground.name || pattern.args.len() != ground.args.len() {
        return false;
    }
    pattern
        .args
        .iter()
        .zip(&ground.args)
        .all(|(p, g)| term(p, g, sub))
}

/// All substitutions making every body literal true in the atom set.
fn ground_body(
    body: &[AspLiteral],
    atoms: &BTreeSet<AspAtom>,
) -> Result<Vec<AspSubst>, SolverError> {
    let mut subs = vec![AspSubst::new()];
    for lit in body {
        if let AspLiteral::Pos(p) = lit {
            let mut next = Vec::new();
            for s in &subs {
                for g in atoms {
                    let mut s2 = s.clone();
                    if match_asp(p, g, &mut s2) {
                        next.push(s2);
                    }
                }
            }
            subs = next;
        }
    }
    let mut out = Vec::new();
    'sub: for s in subs {
        for lit in body {
            match lit {
                AspLiteral::Pos(_) => {}
                AspLiteral::Neg(p) => {
                    let g = p.apply(&s).eval();
                    if !g.is_ground() {
                        return Err(SolverError::UnsafeWeakConstraint(format!(
                            "negated literal {} is not ground",
                            crate::asp::serialize::atom_text(&g)
                        )));
                    }
                    if atoms.contains(&g) {
                        continue 'sub;
                    }
                }
                AspLiteral::Cmp(op, l, r) => {
                    let (l, r) = (l.apply(&s).eval(), r.apply(&s).eval());
                    let ok = match (op, &l, &r) {
                        (CmpSym::Eq, a, b) => a == b,
                        (CmpSym::Ne, a, b) => a != b,
                        (op, AspTerm::Int(a), AspTerm::Int(b)) => op.eval(*a, *b),
                        _ => false,
                    };
                    if !ok {
                        continue 'sub;
                    }
                }
            }
        }
        out.push(s);
    }
    Ok(out)
}
