//! From source text to a statement alphabet, a program DFA over it and a
//! dependence relation.

mod ast;
mod lower;
mod parse;

use std::collections::BTreeSet;
use std::fmt;

use hyperweave_core::automata::Dfa;
use hyperweave_core::dependence::DependenceRel;
use hyperweave_core::letters::Letter;

pub use ast::{Ast, BExpr, Expr, LValue, Node, Span, VarDecl};
pub use lower::{atomic_blocks, compute_dependence, lower_to_dfa, LowerOptions};
pub use parse::{parse_condition, parse_program};

use crate::logic::{Action, Formula, LinExpr};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrontendError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: undeclared variable `{name}`")]
    Undeclared { name: String, line: usize, col: usize },
    #[error("{line}:{col}: nonlinear expression `{expr}`")]
    Nonlinear { expr: String, line: usize, col: usize },
    #[error("program has {0} statements; at most 128 are supported")]
    TooManyStatements(usize),
}

impl FrontendError {
    pub(crate) fn syntax(span: Span, msg: impl Into<String>) -> Self {
        FrontendError::Syntax { line: span.line, col: span.col, msg: msg.into() }
    }
}

/// One letter of the statement alphabet.
///
/// Most statements carry a single action. Atomic blocks and array accesses
/// with a computed index carry a short sequence executed without
/// interruption.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub id: Letter,
    /// Dense index of the statement's position in the thread tree.
    pub thread: u32,
    /// `(parallel node, branch)` pairs from the root down to the statement.
    pub path: Vec<(u32, u32)>,
    pub actions: Vec<Action>,
    pub reads: BTreeSet<String>,
    pub writes: BTreeSet<String>,
    pub display: String,
}

impl Stmt {
    /// Whether the two statements sit in different branches of a parallel
    /// composition.
    pub fn may_run_in_parallel(&self, other: &Stmt) -> bool {
        for (x, y) in self.path.iter().zip(&other.path) {
            if x.0 != y.0 {
                return false;
            }
            if x.1 != y.1 {
                return true;
            }
        }
        false
    }
}

impl fmt::Display for Stmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display)
    }
}

/// A lowered program: `dfa` accepts exactly the control-flow traces that
/// end in an error location.
#[derive(Clone, Debug)]
pub struct Program {
    /// Scalar variables, array cells included, sorted.
    pub vars: Vec<String>,
    pub stmts: Vec<Stmt>,
    pub dfa: Dfa,
    pub dependence: DependenceRel,
    /// Variables no statement writes.
    pub inputs: BTreeSet<String>,
}

impl Program {
    pub fn num_letters(&self) -> usize {
        self.stmts.len()
    }

    pub fn thread_of(&self) -> Vec<u32> {
        self.stmts.iter().map(|s| s.thread).collect()
    }

    pub fn num_threads(&self) -> usize {
        self.stmts.iter().map(|s| s.thread as usize + 1).max().unwrap_or(0)
    }

    /// Statement texts joined by `; `.
    pub fn trace_text(&self, trace: &[Letter]) -> String {
        trace
            .iter()
            .map(|&a| self.stmts[a as usize].display.as_str())
            .collect::<Vec<_>>()
            .join("; ")
    }

    /// Actions of a trace, in order.
    pub fn trace_actions(&self, trace: &[Letter]) -> Vec<Action> {
        trace
            .iter()
            .flat_map(|&a| self.stmts[a as usize].actions.iter().cloned())
            .collect()
    }
}

/// Parses and lowers in one step.
pub fn load_program(text: &str, opts: LowerOptions) -> Result<Program, FrontendError> {
    let ast = parse_program(text)?;
    lower_to_dfa(&ast, opts)
}

/// Parses an assertion over the variables of `program`, written the way
/// assertions are printed. Array cells are named with constant indices.
pub fn parse_assertion(text: &str, program: &Program) -> Result<Formula, FrontendError> {
    fn lin(e: &Expr, program: &Program) -> Result<LinExpr, FrontendError> {
        let known = |name: String, span: Span| {
            if program.vars.contains(&name) {
                Ok(LinExpr::var(&name))
            } else {
                Err(FrontendError::Undeclared { name, line: span.line, col: span.col })
            }
        };
        Ok(match e {
            Expr::Int(v) => LinExpr::constant(*v),
            Expr::Var(v, span) => known(v.clone(), *span)?,
            Expr::Index(v, i, span) => match i.as_ref() {
                Expr::Int(k) => known(format!("{v}[{k}]"), *span)?,
                _ => return Err(FrontendError::syntax(*span, "assertions index arrays by constants")),
            },
            Expr::Add(a, b) => lin(a, program)?.add(&lin(b, program)?),
            Expr::Sub(a, b) => lin(a, program)?.sub(&lin(b, program)?),
            Expr::Neg(a) => lin(a, program)?.neg(),
            Expr::Mul(a, b, span) => {
                let (x, y) = (lin(a, program)?, lin(b, program)?);
                match (x.is_constant(), y.is_constant()) {
                    (true, _) => y.scale(x.constant),
                    (_, true) => x.scale(y.constant),
                    _ => {
                        return Err(FrontendError::Nonlinear { expr: e.to_string(), line: span.line, col: span.col })
                    }
                }
            }
        })
    }
    fn go(b: &BExpr, program: &Program) -> Result<Formula, FrontendError> {
        Ok(match b {
            BExpr::Bool(v) => Formula::from_bool(*v),
            BExpr::Cmp(x, op, y) => Formula::cmp(&lin(x, program)?, *op, &lin(y, program)?),
            BExpr::Not(x) => go(x, program)?.not(),
            BExpr::And(xs) => Formula::and(xs.iter().map(|x| go(x, program)).collect::<Result<Vec<_>, _>>()?),
            BExpr::Or(xs) => Formula::or(xs.iter().map(|x| go(x, program)).collect::<Result<Vec<_>, _>>()?),
        })
    }
    go(&parse_condition(text)?, program)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_assertions_parse_back() {
        let p = load_program("var x, y, a[2]; x := a[1] + y;", LowerOptions::default()).unwrap();
        for text in ["x - 2*y <= 3", "-x + a[1] = 0 && y != 4", "x <= 0 || -a[0] <= -1", "true", "false"] {
            let f = parse_assertion(text, &p).unwrap();
            assert_eq!(parse_assertion(&f.to_string(), &p).unwrap(), f, "{text}");
        }
        assert!(parse_assertion("z = 1", &p).is_err());
    }
}
