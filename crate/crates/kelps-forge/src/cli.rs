//! Command-line front end: check, translate, solve, enumerate, verify,
//! hybrid, and bench.
//!
//! Exit codes: 0 success (and `verify` equality), 1 usage, 2
//! parse/validate/input errors, 3 solver errors, 4 verification
//! mismatch, 5 search budget exceeded.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use crate::asp::serialize::serialize;
use crate::asp::translate::{translate, ActionDecl, EmitOptions};
use crate::asp::{text, AspRule};
use crate::hybrid;
use crate::ndistant::to_n_distant;
use crate::oracle::{self, OracleError, SearchBudget};
use crate::parser::parse;
use crate::solver::{cost_of, extract_model, solve, SolverConfig, SolverError};
use crate::syntax::{Framework, ModelStructure, Template};
use crate::validate::validate_framework;

#[derive(Parser)]
#[command(
    name = "kelps-forge",
    about = "Parse, compile, solve, verify and run KELPS reactive programs",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct EmitArgs {
    /// Horizon for the n-distant conversion.
    #[arg(long)]
    n: u32,
    /// Index consequent disjuncts and prefer low indices.
    #[arg(long)]
    prefer_disjuncts: bool,
    /// Declare an action proactive/preemptive (repeatable).
    #[arg(long = "proactive", value_name = "ACT")]
    proactive: Vec<String>,
    /// Replace the reactive constraint by badRule analysis.
    #[arg(long = "badrule")]
    bad_rule: bool,
    /// Extra weak constraint, e.g. ':~ happens(e,T), time(T). [1@2, T]' (repeatable).
    #[arg(long = "weak", value_name = "CONSTRAINT")]
    weak: Vec<String>,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Solver executable (default: $KELPS_FORGE_SOLVER, then clingo).
    #[arg(long)]
    solver: Option<PathBuf>,
    /// Extra solver argument (repeatable).
    #[arg(long = "solver-arg", value_name = "ARG")]
    solver_args: Vec<String>,
    /// Answer sets to request; 0 = all.
    #[arg(long, default_value_t = 0)]
    models: u32,
    /// Solver time limit in seconds.
    #[arg(long, default_value_t = 120)]
    time_limit: u64,
}

#[derive(Args, Clone)]
struct BudgetArgs {
    /// Candidate actions admitted per timestep.
    #[arg(long, default_value_t = 64)]
    max_actions: usize,
    /// Search nodes before the oracle gives up.
    #[arg(long, default_value_t = 4_000_000)]
    max_nodes: u64,
    /// Oracle wall-clock limit in seconds.
    #[arg(long, default_value_t = 300)]
    oracle_time_limit: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a framework; lints rules that may lose models
    /// under a horizon.
    Check { file: PathBuf },
    /// Compile to Reactive ASP text.
    Translate {
        file: PathBuf,
        #[command(flatten)]
        emit: EmitArgs,
        /// Output path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compile, solve, and print the extracted models with their costs.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        emit: EmitArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Enumerate optimal models only.
        #[arg(long)]
        optimize: bool,
    },
    /// Enumerate the reactive models natively by exhaustive search.
    Enumerate {
        file: PathBuf,
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Compare solver answer sets against the native enumeration.
    Verify {
        file: PathBuf,
        #[arg(long)]
        n: u32,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        budget: BudgetArgs,
    },
    /// Run the hybrid control loop over a scripted event stream.
    Hybrid {
        file: PathBuf,
        /// Lookahead window size.
        #[arg(long)]
        k: u32,
        /// Number of cycles to run.
        #[arg(long)]
        cycles: u32,
        /// Event script: lines 'at <t>: e1, e2' and 'expect at <t>: e1'.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Cap the window at a fixed absolute end time.
        #[arg(long)]
        fixed_end: Option<u32>,
        /// Halt instead of idling when a window has no model.
        #[arg(long)]
        halt_on_no_model: bool,
        /// Index consequent disjuncts and prefer low indices.
        #[arg(long)]
        prefer_disjuncts: bool,
        /// Extra weak constraint (repeatable).
        #[arg(long = "weak", value_name = "CONSTRAINT")]
        weak: Vec<String>,
        /// Declare an action proactive/preemptive (repeatable).
        #[arg(long = "proactive", value_name = "ACT")]
        proactive: Vec<String>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Synthetic measurements: frame-axiom scaling and iterated solving.
    Bench {
        /// frame | compare
        #[arg(long)]
        mode: String,
        /// Horizons for frame mode, e.g. 100,200,400.
        #[arg(long, default_value = "100,200,400")]
        horizons: String,
        /// Indexed fluent-family sizes for frame mode (fluents = 6x).
        #[arg(long, default_value = "20")]
        fluents: String,
        /// Maximum horizons for compare mode.
        #[arg(long, default_value = "10,20")]
        max_horizons: String,
        #[command(flatten)]
        solver: SolverArgs,
    },
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;
pub const EXIT_BUDGET: i32 = 5;

fn fail(code: i32, msg: impl std::fmt::Display) -> i32 {
    eprintln!("kelps-forge: {msg}");
    code
}

fn load(file: &PathBuf) -> Result<Framework, i32> {
    let src = std::fs::read_to_string(file)
        .map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", file.display())))?;
    parse(&src).map_err(|e| fail(EXIT_INPUT, format!("{}:{e}", file.display())))
}

fn emit_options(emit: &EmitArgs) -> Result<EmitOptions, i32> {
    let mut weak = Vec::new();
    for w in &emit.weak {
        weak.push(parse_weak_arg(w)?);
    }
    Ok(EmitOptions {
        horizon: None,
        prefer_disjuncts: emit.prefer_disjuncts,
        weak,
        actions: emit
            .proactive
            .iter()
            .map(|name| ActionDecl {
                template: Template::new(name, vec![]),
                guard: vec![],
            })
            .collect(),
        bad_rule: emit.bad_rule,
    })
}

fn parse_weak_arg(w: &str) -> Result<AspRule, i32> {
    text::parse_weak(w).map_err(|e| fail(EXIT_INPUT, format!("--weak: {e}")))
}

fn solver_config(args: &SolverArgs, optimize: bool) -> Result<SolverConfig, i32> {
    let mut cfg = match &args.solver {
        Some(path) => SolverConfig::new(path.clone()),
        None => SolverConfig::from_env().ok_or_else(|| {
            fail(
                EXIT_SOLVER,
                "no solver configured: pass --solver, set KELPS_FORGE_SOLVER, or install clingo",
            )
        })?,
    };
    cfg.args = args.solver_args.clone();
    cfg.num_models = args.models;
    cfg.time_limit = Duration::from_secs(args.time_limit);
    cfg.optimize = optimize;
    Ok(cfg)
}

fn budget(args: &BudgetArgs) -> SearchBudget {
    SearchBudget {
        max_actions_per_step: args.max_actions,
        max_nodes: args.max_nodes,
        wall_clock: Duration::from_secs(args.oracle_time_limit),
        ..SearchBudget::default()
    }
}

fn parse_list(s: &str) -> Result<Vec<u32>, i32> {
    s.split(',')
        .map(|p| p.trim().parse::<u32>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| fail(EXIT_USAGE, format!("bad number list: {s}")))
}

/// Parses the arguments and runs one subcommand, returning the exit code.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind::*;
            let code = match e.kind() {
                DisplayHelp | DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(code) => code,
    }
}

fn dispatch(cmd: Command) -> Result<i32, i32> {
    match cmd {
        Command::Check { file } => {
            let src = std::fs::read_to_string(&file)
                .map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", file.display())))?;
            match parse(&src) {
                Ok(f) => {
                    let report = validate_framework(&f);
                    for w in &report.warnings {
                        println!("warning: {w}");
                    }
                    println!(
                        "{}: ok ({} rules, {} post entries, {} pre constraints)",
                        file.display(),
                        f.rules.len(),
                        f.causal.post.len(),
                        f.causal.pre.len()
                    );
                    Ok(EXIT_OK)
                }
                Err(e) => Err(fail(EXIT_INPUT, format!("{}:{e}", file.display()))),
            }
        }
        Command::Translate { file, emit, output } => {
            let f = load(&file)?;
            let f = to_n_distant(&f, emit.n).map_err(|e| fail(EXIT_INPUT, e))?;
            let opts = emit_options(&emit)?;
            let program = translate(&f, &opts).map_err(|e| fail(EXIT_INPUT, e))?;
            let text = serialize(&program);
            match output {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", path.display())))?,
                None => print!("{text}"),
            }
            Ok(EXIT_OK)
        }
        Command::Solve {
            file,
            emit,
            solver,
            optimize,
        } => {
            let f = load(&file)?;
            let f = to_n_distant(&f, emit.n).map_err(|e| fail(EXIT_INPUT, e))?;
            let opts = emit_options(&emit)?;
            let needs_opt = optimize || !opts.weak.is_empty() || opts.prefer_disjuncts;
            let cfg = solver_config(&solver, needs_opt)?;
            let program = translate(&f, &opts).map_err(|e| fail(EXIT_INPUT, e))?;
            let sets = solve(&serialize(&program), &cfg).map_err(solver_fail)?;
            if sets.is_empty() {
                println!("UNSATISFIABLE");
                return Ok(EXIT_OK);
            }
            let weak: Vec<AspRule> = collect_weak(&program);
            for (i, set) in sets.iter().enumerate() {
                let mark = if set.optimal { " (optimal)" } else { "" };
                println!("ANSWER {}{}", i + 1, mark);
                if !set.costs.is_empty() {
                    println!("COST {:?}", set.costs);
                    match cost_of(set, &weak) {
                        Ok(recomputed) => {
                            // The solver reports every level its grounding
                            // mentions; levels with no satisfied instance
                            // carry a zero the recomputation cannot know
                            // about, so compare modulo zeros.
                            let nz = |v: &[i64]| -> Vec<i64> {
                                v.iter().copied().filter(|c| *c != 0).collect()
                            };
                            let values: Vec<i64> =
                                recomputed.iter().map(|(_, v)| *v).collect();
                            if nz(&values) != nz(&set.costs) {
                                eprintln!(
                                    "warning: recomputed cost {values:?} differs from solver cost {:?}",
                                    set.costs
                                );
                            }
                        }
                        Err(e) => eprintln!("warning: cost recomputation failed: {e}"),
                    }
                }
                let m = extract_model(set, &f).map_err(solver_fail)?;
                print!("{}", oracle::dump_models([&m]));
            }
            Ok(EXIT_OK)
        }
        Command::Enumerate { file, n, budget: b } => {
            let f = load(&file)?;
            let f = to_n_distant(&f, n).map_err(|e| fail(EXIT_INPUT, e))?;
            match oracle::enumerate_reactive_models(&f, &budget(&b)) {
                Ok(models) => {
                    println!("{} models", models.len());
                    print!("{}", oracle::dump_models(models.iter()));
                    Ok(EXIT_OK)
                }
                Err(OracleError::BudgetExceeded { reason, got, .. }) => Err(fail(
                    EXIT_BUDGET,
                    format!("budget exceeded ({reason}); {got} partial models found"),
                )),
                Err(e) => Err(fail(EXIT_INPUT, e)),
            }
        }
        Command::Verify {
            file,
            n,
            solver,
            budget: b,
        } => {
            let f = load(&file)?;
            let f = to_n_distant(&f, n).map_err(|e| fail(EXIT_INPUT, e))?;
            let cfg = solver_config(&solver, false)?;
            let program = translate(&f, &EmitOptions::default()).map_err(|e| fail(EXIT_INPUT, e))?;
            let text = serialize(&program);
            let budget = budget(&b);
            // Solver and oracle run concurrently; both are independent.
            let oracle_f = f.clone();
            let oracle_thread =
                std::thread::spawn(move || oracle::enumerate_reactive_models(&oracle_f, &budget));
            let sets = solve(&text, &cfg).map_err(solver_fail)?;
            let oracle_models = match oracle_thread.join().expect("oracle thread") {
                Ok(m) => m,
                Err(OracleError::BudgetExceeded { reason, got, .. }) => {
                    return Err(fail(
                        EXIT_BUDGET,
                        format!("oracle budget exceeded ({reason}); {got} partial models"),
                    ))
                }
                Err(e) => return Err(fail(EXIT_INPUT, e)),
            };
            let mut solver_models: BTreeSet<_> = BTreeSet::new();
            for set in &sets {
                let m = extract_model(set, &f).map_err(solver_fail)?;
                solver_models.insert(m.behaviour());
            }
            let oracle_set: BTreeSet<_> =
                oracle_models.iter().map(ModelStructure::behaviour).collect();
            if solver_models == oracle_set {
                println!("{} models, solver = oracle", oracle_set.len());
                Ok(EXIT_OK)
            } else {
                let only_solver = solver_models.difference(&oracle_set).count();
                let only_oracle = oracle_set.difference(&solver_models).count();
                Err(fail(
                    EXIT_MISMATCH,
                    format!(
                        "model sets differ: {} solver / {} oracle ({only_solver} only solver, {only_oracle} only oracle)",
                        solver_models.len(),
                        oracle_set.len()
                    ),
                ))
            }
        }
        Command::Hybrid {
            file,
            k,
            cycles,
            script,
            fixed_end,
            halt_on_no_model,
            prefer_disjuncts,
            weak,
            proactive,
            solver,
        } => {
            let f = load(&file)?;
            let mut script_data = match script {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| fail(EXIT_INPUT, format!("{}: {e}", path.display())))?;
                    hybrid::parse_event_script(&text).map_err(|e| fail(EXIT_INPUT, e))?
                }
                None => hybrid::EventScript::default(),
            };
            // Observed events recorded in the framework join the script.
            for (t, evs) in &f.ext {
                script_data.at.entry(*t).or_default().extend(evs.iter().cloned());
            }
            let mut clean = f.clone();
            clean.ext.clear();
            let mut weak_rules = Vec::new();
            for w in &weak {
                weak_rules.push(parse_weak_arg(w)?);
            }
            let opts = hybrid::RunOptions {
                window: k,
                cycles,
                policy: hybrid::SelectPolicy::default(),
                no_model: if halt_on_no_model {
                    hybrid::NoModelPolicy::Halt
                } else {
                    hybrid::NoModelPolicy::Idle
                },
                fixed_end,
                emit: EmitOptions {
                    horizon: None,
                    prefer_disjuncts,
                    weak: weak_rules,
                    actions: proactive
                        .iter()
                        .map(|name| ActionDecl {
                            template: Template::new(name, vec![]),
                            guard: vec![],
                        })
                        .collect(),
                    bad_rule: false,
                },
            };
            let cfg = solver_config(&solver, false)?;
            match hybrid::run(&clean, &script_data, &opts, &cfg) {
                Ok(trace) => {
                    print!("{}", trace.render());
                    Ok(EXIT_OK)
                }
                Err(hybrid::HybridError::Solver(e)) => Err(solver_fail(e)),
                Err(e @ hybrid::HybridError::PreconditionViolation { .. }) => {
                    Err(fail(EXIT_INPUT, e))
                }
                Err(e) => Err(fail(EXIT_INPUT, e)),
            }
        }
        Command::Bench {
            mode,
            horizons,
            fluents,
            max_horizons,
            solver,
        } => {
            let cfg = solver_config(&solver, false)?;
            match mode.as_str() {
                "frame" => {
                    println!("mode=frame (6 fluent families x index count)");
                    println!("{:>8} {:>8} {:>10}", "fluents", "n", "seconds");
                    for &idx in &parse_list(&fluents)? {
                        for &n in &parse_list(&horizons)? {
                            let secs = crate::bench::frame_run(idx, n, &cfg)
                                .map_err(|e| fail(EXIT_SOLVER, e))?;
                            println!("{:>8} {:>8} {:>10.3}", idx * 6, n, secs);
                        }
                    }
                    Ok(EXIT_OK)
                }
                "compare" => {
                    println!("mode=compare (iterated single-shot, t = 0..m)");
                    println!("{:>6} {:>12} {:>8}", "m", "total_s", "models");
                    for &m in &parse_list(&max_horizons)? {
                        let row = crate::bench::compare_run(m, &cfg)
                            .map_err(|e| fail(EXIT_SOLVER, e))?;
                        println!(
                            "{:>6} {:>12.3} {:>8}",
                            row.max_horizon, row.total_seconds, row.models_found
                        );
                    }
                    Ok(EXIT_OK)
                }
                other => Err(fail(EXIT_USAGE, format!("unknown bench mode {other}"))),
            }
        }
    }
}

fn collect_weak(program: &crate::asp::AspProgram) -> Vec<AspRule> {
    program
        .iter()
        .filter(|tr| matches!(tr.rule, AspRule::Weak { .. }))
        .map(|tr| tr.rule.clone())
        .collect()
}

fn solver_fail(e: SolverError) -> i32 {
    fail(EXIT_SOLVER, e)
}
