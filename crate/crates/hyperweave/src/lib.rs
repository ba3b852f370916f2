//! k-safety verification by sleep-set reduction and proof-automaton
//! refinement over linear integer programs.

pub mod frontend;
pub mod logic;
pub mod smt;
pub mod proofdb;
pub mod cegar;
pub mod bench;
pub mod cli;
