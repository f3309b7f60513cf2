#![allow(dead_code)]

//! Shared test support: solver discovery and fixture loading.

use std::path::PathBuf;

use kelps_forge::parser::parse;
use kelps_forge::solver::SolverConfig;
use kelps_forge::syntax::Framework;

/// Finds a solver: the `KELPS_FORGE_SOLVER` environment variable, then
/// `clingo` on PATH, then the bundled Node wrapper if its dependencies
/// are installed.
pub fn test_solver() -> Option<SolverConfig> {
    if let Some(cfg) = SolverConfig::from_env() {
        return Some(cfg);
    }
    let wrapper = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../tools/clingo-node/clingo.js");
    let deps = wrapper.parent().unwrap().join("node_modules/clingo-wasm");
    if wrapper.exists() && deps.exists() {
        return Some(SolverConfig::new(wrapper));
    }
    None
}

/// Prints the distinct skip marker used when no solver is configured.
pub fn skip_no_solver(what: &str) {
    println!("{what}: SKIPPED (no solver configured)");
}

pub fn fixture(name: &str) -> Framework {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    parse(&std::fs::read_to_string(&path).unwrap()).unwrap()
}
