//! Algorithmic core of the hyperweave verifier.
//!
//! Everything in this crate is pure: finite automata over a statement
//! alphabet, looping tree automata (LTAs) over `|Σ|`-ary boolean-labelled
//! trees, the sleep-set reduction automaton, and the antichain-based
//! emptiness check used for proof checking. Statements are opaque letters
//! `0..n`; their meaning lives in the `hyperweave` crate.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod antichain;
pub mod automata;
pub mod dependence;
pub mod letters;
pub mod lta;
pub mod reduction;
pub mod strategy;

pub use antichain::{check, Antichain, CheckConfig, CheckStats, Engine, NodeKey, Verdict};
pub use automata::{Dfa, Nfa};
pub use dependence::DependenceRel;
pub use letters::{Letter, LetterSet};
pub use lta::Lta;
pub use reduction::OrderSource;
pub use strategy::Strategy;
