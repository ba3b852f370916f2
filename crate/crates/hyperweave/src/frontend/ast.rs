//! Syntax tree of the input language.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::FrontendError;
use crate::logic::{CmpOp, Int};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    /// `Some(n)` for an array of `n` cells.
    pub size: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Int(Int),
    Var(String, Span),
    Index(String, Box<Expr>, Span),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>, Span),
    Neg(Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BExpr {
    Bool(bool),
    Cmp(Expr, CmpOp, Expr),
    Not(Box<BExpr>),
    And(Vec<BExpr>),
    Or(Vec<BExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LValue {
    Var(String, Span),
    Index(String, Expr, Span),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Assign(LValue, Expr, Span),
    Assume(BExpr, Span),
    /// Only allowed at the top level; failing it is the error being checked.
    Assert(BExpr, Span),
    Seq(Vec<Node>),
    Par(Vec<Node>),
    While(BExpr, Box<Node>, Span),
    If(BExpr, Box<Node>, Box<Node>, Span),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ast {
    pub vars: BTreeMap<String, VarDecl>,
    pub body: Node,
}

impl Ast {
    pub(crate) fn check_declared(&self) -> Result<(), FrontendError> {
        let mut err = None;
        self.body.visit_vars(&mut |name, span, indexed| {
            if err.is_some() {
                return;
            }
            match self.vars.get(name) {
                None => {
                    err = Some(FrontendError::Undeclared { name: name.to_string(), line: span.line, col: span.col })
                }
                Some(d) if d.size.is_some() != indexed => {
                    let what = if indexed { "is not an array" } else { "is an array and needs an index" };
                    err = Some(FrontendError::syntax(span, format!("`{name}` {what}")));
                }
                _ => {}
            }
        });
        err.map_or(Ok(()), Err)
    }
}

impl Expr {
    fn visit_vars(&self, f: &mut impl FnMut(&str, Span, bool)) {
        match self {
            Expr::Int(_) => {}
            Expr::Var(v, s) => f(v, *s, false),
            Expr::Index(v, i, s) => {
                f(v, *s, true);
                i.visit_vars(f);
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b, _) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
            Expr::Neg(a) => a.visit_vars(f),
        }
    }

    fn rename(&self, r: &impl Fn(&str) -> String) -> Expr {
        match self {
            Expr::Int(v) => Expr::Int(*v),
            Expr::Var(v, s) => Expr::Var(r(v), *s),
            Expr::Index(v, i, s) => Expr::Index(r(v), Box::new(i.rename(r)), *s),
            Expr::Add(a, b) => Expr::Add(Box::new(a.rename(r)), Box::new(b.rename(r))),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.rename(r)), Box::new(b.rename(r))),
            Expr::Mul(a, b, s) => Expr::Mul(Box::new(a.rename(r)), Box::new(b.rename(r)), *s),
            Expr::Neg(a) => Expr::Neg(Box::new(a.rename(r))),
        }
    }
}

impl BExpr {
    fn visit_vars(&self, f: &mut impl FnMut(&str, Span, bool)) {
        match self {
            BExpr::Bool(_) => {}
            BExpr::Cmp(a, _, b) => {
                a.visit_vars(f);
                b.visit_vars(f);
            }
            BExpr::Not(b) => b.visit_vars(f),
            BExpr::And(xs) | BExpr::Or(xs) => xs.iter().for_each(|x| x.visit_vars(f)),
        }
    }

    fn rename(&self, r: &impl Fn(&str) -> String) -> BExpr {
        match self {
            BExpr::Bool(b) => BExpr::Bool(*b),
            BExpr::Cmp(a, op, b) => BExpr::Cmp(a.rename(r), *op, b.rename(r)),
            BExpr::Not(b) => BExpr::Not(Box::new(b.rename(r))),
            BExpr::And(xs) => BExpr::And(xs.iter().map(|x| x.rename(r)).collect()),
            BExpr::Or(xs) => BExpr::Or(xs.iter().map(|x| x.rename(r)).collect()),
        }
    }
}

impl Node {
    pub(crate) fn visit_vars(&self, f: &mut impl FnMut(&str, Span, bool)) {
        match self {
            Node::Assign(lv, e, _) => {
                match lv {
                    LValue::Var(v, s) => f(v, *s, false),
                    LValue::Index(v, i, s) => {
                        f(v, *s, true);
                        i.visit_vars(f);
                    }
                }
                e.visit_vars(f);
            }
            Node::Assume(b, _) | Node::Assert(b, _) => b.visit_vars(f),
            Node::Seq(xs) | Node::Par(xs) => xs.iter().for_each(|x| x.visit_vars(f)),
            Node::While(g, body, _) => {
                g.visit_vars(f);
                body.visit_vars(f);
            }
            Node::If(g, t, e, _) => {
                g.visit_vars(f);
                t.visit_vars(f);
                e.visit_vars(f);
            }
        }
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<String>) {
        self.visit_vars(&mut |v, _, _| {
            out.insert(v.to_string());
        });
    }

    pub(crate) fn rename(&self, r: &impl Fn(&str) -> String) -> Node {
        match self {
            Node::Assign(lv, e, s) => {
                let lv = match lv {
                    LValue::Var(v, vs) => LValue::Var(r(v), *vs),
                    LValue::Index(v, i, vs) => LValue::Index(r(v), i.rename(r), *vs),
                };
                Node::Assign(lv, e.rename(r), *s)
            }
            Node::Assume(b, s) => Node::Assume(b.rename(r), *s),
            Node::Assert(b, s) => Node::Assert(b.rename(r), *s),
            Node::Seq(xs) => Node::Seq(xs.iter().map(|x| x.rename(r)).collect()),
            Node::Par(xs) => Node::Par(xs.iter().map(|x| x.rename(r)).collect()),
            Node::While(g, b, s) => Node::While(g.rename(r), Box::new(b.rename(r)), *s),
            Node::If(g, t, e, s) => Node::If(g.rename(r), Box::new(t.rename(r)), Box::new(e.rename(r)), *s),
        }
    }
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) => 2,
        _ => 3,
    }
}

fn paren(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if prec(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int(v) => write!(f, "{v}"),
            Expr::Var(v, _) => f.write_str(v),
            Expr::Index(v, i, _) => write!(f, "{v}[{i}]"),
            Expr::Add(a, b) => {
                write!(f, "{a} + ")?;
                paren(f, b, 2)
            }
            Expr::Sub(a, b) => {
                write!(f, "{a} - ")?;
                paren(f, b, 2)
            }
            Expr::Mul(a, b, _) => {
                paren(f, a, 2)?;
                f.write_str("*")?;
                paren(f, b, 3)
            }
            Expr::Neg(a) => {
                f.write_str("-")?;
                paren(f, a, 3)
            }
        }
    }
}

impl fmt::Display for CmpDisplay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
        })
    }
}

struct CmpDisplay(CmpOp);

impl fmt::Display for BExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BExpr::Bool(b) => write!(f, "{b}"),
            BExpr::Cmp(a, op, b) => write!(f, "{a} {} {b}", CmpDisplay(*op)),
            BExpr::Not(b) => match b.as_ref() {
                BExpr::And(_) | BExpr::Or(_) | BExpr::Cmp(..) => write!(f, "!({b})"),
                _ => write!(f, "!{b}"),
            },
            BExpr::And(xs) | BExpr::Or(xs) => {
                let sep = if matches!(self, BExpr::And(_)) { " && " } else { " || " };
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    match x {
                        BExpr::And(_) | BExpr::Or(_) => write!(f, "({x})")?,
                        _ => write!(f, "{x}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for LValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LValue::Var(v, _) => f.write_str(v),
            LValue::Index(v, i, _) => write!(f, "{v}[{i}]"),
        }
    }
}
