//! kelps-forge: a toolchain for KELPS reactive-agent programs.
//!
//! The pipeline: parse a `.kelps` source into a [`syntax::Framework`],
//! convert it to n-distant form, compile it to an answer-set program
//! ([`asp`]), run an external solver ([`solver`]) and lift the answer
//! sets back to model structures, or enumerate the reactive models
//! natively by brute force ([`oracle`]). The [`hybrid`] module runs the
//! combined control loop that interleaves destructive state update with
//! prospective solving over a sliding window.

pub mod asp;
pub mod bench;
pub mod cli;
pub mod hybrid;
pub mod ndistant;
pub mod oracle;
pub mod parser;
pub mod solver;
pub mod syntax;
pub mod temporal;
pub mod validate;
