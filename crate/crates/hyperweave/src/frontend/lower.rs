//! Lowering: statements become letters, control flow becomes automaton
//! operations, and parallel composition becomes shuffle.

use std::collections::{BTreeMap, BTreeSet};

use hyperweave_core::automata::{concat, shuffle, star, Dfa};
use hyperweave_core::dependence::DependenceRel;
use hyperweave_core::letters::Letter;

use super::ast::{Ast, BExpr, Expr, LValue, Node, Span};
use super::{FrontendError, Program, Stmt};
use crate::logic::{Action, CmpOp, Formula, LinExpr};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LowerOptions {
    /// Fuse straight-line code within a thread into single statements.
    pub atomic_blocks: bool,
}

const MAX_LETTERS: usize = 128;
const MAX_INDEX_CASES: usize = 4096;

/// Regular structure over letters, built before the alphabet size is known.
#[derive(Clone, Debug)]
enum Shape {
    Eps,
    Letter(Letter),
    Seq(Vec<Shape>),
    Alt(Vec<Shape>),
    Star(Box<Shape>),
    Par(Vec<Shape>),
}

type Path = Vec<(u32, u32)>;
type Pending = Vec<(Action, String)>;

struct Builder<'a> {
    ast: &'a Ast,
    atomic: bool,
    stmts: Vec<Stmt>,
    threads: BTreeMap<Path, u32>,
    next_par: u32,
}

/// Lowers the syntax tree to its statement alphabet and program DFA.
///
/// Without `assert`, every completed run is an error trace: the property is
/// expected to be encoded as a final `assume` of its negation. Top-level
/// `assert(b)` adds the error traces ending in `assume(!b)` instead, and
/// normal termination is then not an error.
pub fn lower_to_dfa(ast: &Ast, opts: LowerOptions) -> Result<Program, FrontendError> {
    let mut b = Builder {
        ast,
        atomic: opts.atomic_blocks,
        stmts: Vec::new(),
        threads: BTreeMap::new(),
        next_par: 0,
    };
    let items: &[Node] = match &ast.body {
        Node::Seq(xs) => xs,
        other => std::slice::from_ref(other),
    };
    let shape = b.top(items)?;
    if b.stmts.len() > MAX_LETTERS {
        return Err(FrontendError::TooManyStatements(b.stmts.len()));
    }
    let n = b.stmts.len();
    let dfa = build(&shape, n).trim();
    let dependence = compute_dependence(&b.stmts);
    let mut vars = BTreeSet::new();
    for (name, d) in &ast.vars {
        match d.size {
            None => {
                vars.insert(name.clone());
            }
            Some(k) => vars.extend((0..k).map(|i| cell(name, i as i128))),
        }
    }
    let written: BTreeSet<String> = b.stmts.iter().flat_map(|s| s.writes.iter().cloned()).collect();
    let inputs = vars.difference(&written).cloned().collect();
    Ok(Program { vars: vars.into_iter().collect(), stmts: b.stmts, dfa, dependence, inputs })
}

/// [`lower_to_dfa`] with straight-line code fused into atomic statements.
pub fn atomic_blocks(ast: &Ast) -> Result<Program, FrontendError> {
    lower_to_dfa(ast, LowerOptions { atomic_blocks: true })
}

/// Statements are dependent unless they may run in parallel and neither
/// writes a variable the other touches.
pub fn compute_dependence(stmts: &[Stmt]) -> DependenceRel {
    DependenceRel::from_fn(stmts.len(), |a, b| {
        let (x, y) = (&stmts[a as usize], &stmts[b as usize]);
        a == b
            || !x.may_run_in_parallel(y)
            || x.writes.iter().any(|v| y.reads.contains(v) || y.writes.contains(v))
            || y.writes.iter().any(|v| x.reads.contains(v))
    })
}

fn cell(name: &str, i: i128) -> String {
    format!("{name}[{i}]")
}

fn build(shape: &Shape, n: usize) -> Dfa {
    match shape {
        Shape::Eps => Dfa::epsilon(n),
        Shape::Letter(a) => Dfa::letter(n, *a),
        Shape::Seq(xs) => {
            let mut acc = Dfa::epsilon(n);
            for x in xs {
                if matches!(x, Shape::Eps) {
                    continue;
                }
                acc = concat(&acc, &build(x, n)).expect("same alphabet");
            }
            acc
        }
        Shape::Alt(xs) => {
            let mut acc = Dfa::empty(n);
            for x in xs {
                acc = acc.union(&build(x, n)).expect("same alphabet").trim();
            }
            acc
        }
        Shape::Star(x) => star(&build(x, n)),
        Shape::Par(xs) => {
            let mut acc = Dfa::epsilon(n);
            for x in xs {
                acc = shuffle(&acc, &build(x, n)).expect("branches use disjoint letters");
            }
            acc
        }
    }
}

impl Builder<'_> {
    fn letter(&mut self, parts: Pending, path: &Path) -> Shape {
        let id = self.stmts.len() as Letter;
        let next = self.threads.len() as u32;
        let thread = *self.threads.entry(path.clone()).or_insert(next);
        let mut reads = BTreeSet::new();
        let mut writes = BTreeSet::new();
        for (a, _) in &parts {
            reads.extend(a.reads());
            if let Some(w) = a.writes() {
                writes.insert(w.to_string());
            }
        }
        let display = parts.iter().map(|(_, d)| d.as_str()).collect::<Vec<_>>().join("; ");
        let actions = parts.into_iter().map(|(a, _)| a).collect();
        self.stmts.push(Stmt { id, thread, path: path.clone(), actions, reads, writes, display });
        Shape::Letter(id)
    }

    fn flush(&mut self, pending: &mut Pending, path: &Path, out: &mut Vec<Shape>) {
        if !pending.is_empty() {
            let parts = std::mem::take(pending);
            out.push(self.letter(parts, path));
        }
    }

    /// Alternatives of a simple statement as letters, or as a single action
    /// list that may be fused.
    fn alternatives(&mut self, parts: Vec<Pending>, path: &Path, pending: &mut Pending, out: &mut Vec<Shape>) {
        if parts.len() == 1 && self.atomic {
            pending.extend(parts.into_iter().next().unwrap());
            return;
        }
        self.flush(pending, path, out);
        if parts.len() == 1 {
            let p = parts.into_iter().next().unwrap();
            out.push(self.letter(p, path));
            return;
        }
        let alts = parts.into_iter().map(|p| self.letter(p, path)).collect();
        out.push(Shape::Alt(alts));
    }

    fn top(&mut self, items: &[Node]) -> Result<Shape, FrontendError> {
        let root: Path = Vec::new();
        let mut prefix = Vec::new();
        let mut pending = Pending::new();
        let mut errors = Vec::new();
        for (k, item) in items.iter().enumerate() {
            if let Node::Assert(g, span) = item {
                self.flush(&mut pending, &root, &mut prefix);
                let fail = self.assume_cases(&BExpr::Not(Box::new(g.clone())), *span)?;
                let mut err_out = Vec::new();
                let mut none = Pending::new();
                let saved = self.atomic;
                self.atomic = false;
                self.alternatives(fail, &root, &mut none, &mut err_out);
                self.atomic = saved;
                let mut path_shape = prefix.clone();
                path_shape.extend(err_out);
                errors.push(Shape::Seq(path_shape));
                if k + 1 < items.len() {
                    let hold = self.assume_cases(g, *span)?;
                    self.alternatives(hold, &root, &mut pending, &mut prefix);
                }
                continue;
            }
            let s = self.node(item, &root, &mut pending)?;
            prefix.push(s);
        }
        self.flush(&mut pending, &root, &mut prefix);
        Ok(if errors.is_empty() { Shape::Seq(prefix) } else { Shape::Alt(errors) })
    }

    /// Lowers `n`; simple statements may be left in `pending` for fusion.
    fn node(&mut self, n: &Node, path: &Path, pending: &mut Pending) -> Result<Shape, FrontendError> {
        let mut out = Vec::new();
        match n {
            Node::Assign(lv, e, span) => {
                let parts = self.assign_cases(lv, e, *span)?;
                self.alternatives(parts, path, pending, &mut out);
            }
            Node::Assume(g, span) => {
                let parts = self.assume_cases(g, *span)?;
                self.alternatives(parts, path, pending, &mut out);
            }
            Node::Assert(_, span) => {
                return Err(FrontendError::syntax(*span, "assert is only supported at the top level"));
            }
            Node::Seq(xs) => {
                for x in xs {
                    out.push(self.node(x, path, pending)?);
                }
            }
            Node::While(g, body, span) => {
                self.flush(pending, path, &mut out);
                let enter = self.assume_cases(g, *span)?;
                let exit = self.assume_cases(&BExpr::Not(Box::new(g.clone())), *span)?;
                let mut inner = Vec::new();
                let mut ip = Pending::new();
                self.alternatives(enter, path, &mut ip, &mut inner);
                inner.push(self.node(body, path, &mut ip)?);
                self.flush(&mut ip, path, &mut inner);
                out.push(Shape::Star(Box::new(Shape::Seq(inner))));
                self.alternatives(exit, path, pending, &mut out);
            }
            Node::If(g, t, e, span) => {
                self.flush(pending, path, &mut out);
                let yes = self.assume_cases(g, *span)?;
                let no = self.assume_cases(&BExpr::Not(Box::new(g.clone())), *span)?;
                let mut branches = Vec::new();
                for (cases, body) in [(yes, t), (no, e)] {
                    let mut inner = Vec::new();
                    let mut ip = Pending::new();
                    self.alternatives(cases, path, &mut ip, &mut inner);
                    inner.push(self.node(body, path, &mut ip)?);
                    self.flush(&mut ip, path, &mut inner);
                    branches.push(Shape::Seq(inner));
                }
                out.push(Shape::Alt(branches));
            }
            Node::Par(bs) => {
                self.flush(pending, path, &mut out);
                let id = self.next_par;
                self.next_par += 1;
                let mut shapes = Vec::new();
                for (i, b) in bs.iter().enumerate() {
                    let mut sub = path.clone();
                    sub.push((id, i as u32));
                    let mut ip = Pending::new();
                    let mut inner = vec![self.node(b, &sub, &mut ip)?];
                    self.flush(&mut ip, &sub, &mut inner);
                    shapes.push(Shape::Seq(inner));
                }
                out.push(Shape::Par(shapes));
            }
        }
        Ok(match out.len() {
            0 => Shape::Eps,
            1 => out.pop().unwrap(),
            _ => Shape::Seq(out),
        })
    }

    fn assume_cases(&self, g: &BExpr, span: Span) -> Result<Vec<Pending>, FrontendError> {
        let mut idx = Vec::new();
        self.collect_bexpr_indices(g, &mut idx)?;
        let text = format!("assume({g})");
        self.cases(&idx, span, &text, |this, choice| {
            Ok(Action::Assume(this.bexpr(g, choice)?))
        })
    }

    fn assign_cases(&self, lv: &LValue, e: &Expr, span: Span) -> Result<Vec<Pending>, FrontendError> {
        let mut idx = Vec::new();
        self.collect_indices(e, &mut idx)?;
        if let LValue::Index(name, i, s) = lv {
            self.note_index(name, i, *s, &mut idx)?;
        }
        let text = format!("{lv} := {e}");
        self.cases(&idx, span, &text, |this, choice| {
            let target = match lv {
                LValue::Var(v, _) => v.clone(),
                LValue::Index(name, i, s) => this.resolve(name, i, *s, choice)?.unwrap_or_default(),
            };
            Ok(Action::Assign(target, this.lin(e, choice)?))
        })
    }

    /// One action list per assignment of values to computed indices. Cases
    /// where some access is out of bounds are dropped: they block.
    fn cases(
        &self,
        idx: &[(LinExpr, usize)],
        span: Span,
        text: &str,
        mut make: impl FnMut(&Self, &BTreeMap<LinExpr, i128>) -> Result<Action, FrontendError>,
    ) -> Result<Vec<Pending>, FrontendError> {
        let total: usize = idx.iter().map(|(_, k)| *k).product();
        if total > MAX_INDEX_CASES {
            return Err(FrontendError::syntax(span, "too many array index cases"));
        }
        let mut out = Vec::new();
        for mut code in 0..total {
            let mut choice = BTreeMap::new();
            let mut guard = Vec::new();
            let mut notes = Vec::new();
            for (e, k) in idx {
                let v = (code % k) as i128;
                code /= k;
                choice.insert(e.clone(), v);
                guard.push(Formula::cmp(e, CmpOp::Eq, &LinExpr::constant(v)));
                notes.push(format!("{e} = {v}"));
            }
            let action = match make(self, &choice) {
                Ok(a) => a,
                Err(FrontendError::Syntax { msg, .. }) if msg == OUT_OF_BOUNDS => continue,
                Err(e) => return Err(e),
            };
            let mut parts = Pending::new();
            if idx.is_empty() {
                parts.push((action, text.to_string()));
            } else {
                let g = Formula::and(guard);
                let shown = format!("assume({})", notes.join(" && "));
                parts.push((Action::Assume(g), shown));
                let shown = format!("{action}");
                parts.push((action, shown));
            }
            out.push(parts);
        }
        Ok(out)
    }

    fn array_size(&self, name: &str) -> usize {
        self.ast.vars.get(name).and_then(|d| d.size).unwrap_or(0)
    }

    fn note_index(&self, name: &str, i: &Expr, span: Span, idx: &mut Vec<(LinExpr, usize)>) -> Result<(), FrontendError> {
        let e = self.index_expr(i, span)?;
        let size = self.array_size(name);
        if e.is_constant() {
            if e.constant < 0 || e.constant >= size as i128 {
                return Err(FrontendError::syntax(span, format!("index {} out of bounds for `{name}`", e.constant)));
            }
            return Ok(());
        }
        match idx.iter_mut().find(|(x, _)| *x == e) {
            Some((_, k)) => *k = (*k).max(size),
            None => idx.push((e, size)),
        }
        Ok(())
    }

    fn index_expr(&self, i: &Expr, span: Span) -> Result<LinExpr, FrontendError> {
        let mut nested = Vec::new();
        self.collect_indices(i, &mut nested)?;
        if has_index(i) {
            return Err(FrontendError::syntax(span, "array accesses inside an index are not supported"));
        }
        self.lin(i, &BTreeMap::new())
    }

    fn collect_indices(&self, e: &Expr, idx: &mut Vec<(LinExpr, usize)>) -> Result<(), FrontendError> {
        match e {
            Expr::Int(_) | Expr::Var(..) => Ok(()),
            Expr::Index(name, i, span) => self.note_index(name, i, *span, idx),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b, _) => {
                self.collect_indices(a, idx)?;
                self.collect_indices(b, idx)
            }
            Expr::Neg(a) => self.collect_indices(a, idx),
        }
    }

    fn collect_bexpr_indices(&self, g: &BExpr, idx: &mut Vec<(LinExpr, usize)>) -> Result<(), FrontendError> {
        match g {
            BExpr::Bool(_) => Ok(()),
            BExpr::Cmp(a, _, b) => {
                self.collect_indices(a, idx)?;
                self.collect_indices(b, idx)
            }
            BExpr::Not(b) => self.collect_bexpr_indices(b, idx),
            BExpr::And(xs) | BExpr::Or(xs) => xs.iter().try_for_each(|x| self.collect_bexpr_indices(x, idx)),
        }
    }

    /// The cell named by `name[i]` under `choice`.
    fn resolve(
        &self,
        name: &str,
        i: &Expr,
        span: Span,
        choice: &BTreeMap<LinExpr, i128>,
    ) -> Result<Option<String>, FrontendError> {
        let e = self.lin(i, &BTreeMap::new())?;
        let v = if e.is_constant() { e.constant } else { choice[&e] };
        if v < 0 || v >= self.array_size(name) as i128 {
            return Err(FrontendError::syntax(span, OUT_OF_BOUNDS));
        }
        Ok(Some(cell(name, v)))
    }

    fn lin(&self, e: &Expr, choice: &BTreeMap<LinExpr, i128>) -> Result<LinExpr, FrontendError> {
        Ok(match e {
            Expr::Int(v) => LinExpr::constant(*v),
            Expr::Var(v, _) => LinExpr::var(v),
            Expr::Index(name, i, span) => LinExpr::var(&self.resolve(name, i, *span, choice)?.unwrap_or_default()),
            Expr::Add(a, b) => self.lin(a, choice)?.add(&self.lin(b, choice)?),
            Expr::Sub(a, b) => self.lin(a, choice)?.sub(&self.lin(b, choice)?),
            Expr::Neg(a) => self.lin(a, choice)?.neg(),
            Expr::Mul(a, b, span) => {
                let (x, y) = (self.lin(a, choice)?, self.lin(b, choice)?);
                if x.is_constant() {
                    y.scale(x.constant)
                } else if y.is_constant() {
                    x.scale(y.constant)
                } else {
                    return Err(FrontendError::Nonlinear { expr: e.to_string(), line: span.line, col: span.col });
                }
            }
        })
    }

    fn bexpr(&self, g: &BExpr, choice: &BTreeMap<LinExpr, i128>) -> Result<Formula, FrontendError> {
        Ok(match g {
            BExpr::Bool(b) => Formula::from_bool(*b),
            BExpr::Cmp(a, op, b) => Formula::cmp(&self.lin(a, choice)?, *op, &self.lin(b, choice)?),
            BExpr::Not(b) => self.bexpr(b, choice)?.not(),
            BExpr::And(xs) => Formula::and(xs.iter().map(|x| self.bexpr(x, choice)).collect::<Result<Vec<_>, _>>()?),
            BExpr::Or(xs) => Formula::or(xs.iter().map(|x| self.bexpr(x, choice)).collect::<Result<Vec<_>, _>>()?),
        })
    }
}

const OUT_OF_BOUNDS: &str = "index out of bounds";

fn has_index(e: &Expr) -> bool {
    match e {
        Expr::Int(_) | Expr::Var(..) => false,
        Expr::Index(..) => true,
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b, _) => has_index(a) || has_index(b),
        Expr::Neg(a) => has_index(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_program;

    fn lower(src: &str, atomic: bool) -> Program {
        lower_to_dfa(&parse_program(src).unwrap(), LowerOptions { atomic_blocks: atomic }).unwrap()
    }

    #[test]
    fn single_statement_is_a_two_state_dfa() {
        let p = lower("var x; x := 0;", false);
        assert_eq!(p.stmts.len(), 1);
        assert_eq!(p.dfa.num_states(), 3); // start, accept, sink
        assert!(p.dfa.accepts(&[0]));
        assert!(!p.dfa.accepts(&[]) && !p.dfa.accepts(&[0, 0]));
    }

    #[test]
    fn while_unrolls_with_guards() {
        let p = lower("var x; while (x < 3) { x := x + 1; }", false);
        // letters: 0 = assume(x < 3), 1 = x := x + 1, 2 = assume(!(x < 3))
        assert_eq!(p.stmts[0].display, "assume(x < 3)");
        assert_eq!(p.stmts[2].display, "assume(!(x < 3))");
        assert!(p.dfa.accepts(&[2]));
        assert!(p.dfa.accepts(&[0, 1, 0, 1, 2]));
        assert!(!p.dfa.accepts(&[0, 2]));
    }

    #[test]
    fn atomic_mult_body_is_fused() {
        let src = "var a, c, x, i; x := 0; i := 0; while (i < c) { x := x + a; i := i + 1; }";
        let p = lower(src, true);
        // {x := 0; i := 0}, {assume(i < c); x := x + a; i := i + 1}, {assume(!(i < c))}
        assert_eq!(p.stmts.len(), 3);
        assert_eq!(p.stmts[1].actions.len(), 3);
        assert!(p.dfa.accepts(&[0, 1, 1, 2]));
    }

    #[test]
    fn atomic_never_fuses_across_threads() {
        let src = "var x, y; { x := 1; x := 2; } || { y := 1; y := 2; }";
        let p = lower(src, true);
        assert_eq!(p.stmts.len(), 2);
        assert_ne!(p.stmts[0].thread, p.stmts[1].thread);
        assert!(p.dependence.independent(0, 1));
    }

    #[test]
    fn dependence_examples() {
        let src = "var a, x1, x2, x; { x1 := x1 + a; x := 1; } || { x2 := x2 + a; assume(x > 0); }";
        let p = lower(src, false);
        assert!(p.dependence.dependent(0, 1)); // same thread
        assert!(p.dependence.independent(0, 2)); // disjoint writes, shared read
        assert!(p.dependence.dependent(1, 3)); // write/read conflict
        assert!(p.dependence.is_well_formed());
    }

    #[test]
    fn sequential_context_is_dependent() {
        let p = lower("var a, x, y; assume(a > 0); { x := 1; } || { y := 1; }", false);
        assert!(p.dependence.dependent(0, 1) && p.dependence.dependent(0, 2));
        assert!(p.dependence.independent(1, 2));
    }

    #[test]
    fn computed_index_becomes_cases() {
        let p = lower("var a[2], i, x; x := a[i];", false);
        assert_eq!(p.stmts.len(), 2);
        assert_eq!(p.stmts[1].display, "assume(i = 1); x := a[1]");
        assert!(p.dfa.accepts(&[0]) && p.dfa.accepts(&[1]));
    }

    #[test]
    fn top_level_assert_defines_error_traces() {
        let p = lower("var x; x := 1; assert(x = 1); x := 2;", false);
        // letters: 0 x := 1, 1 assume(!(x = 1)), 2 assume(x = 1), 3 x := 2
        assert!(p.dfa.accepts(&[0, 1]));
        assert!(!p.dfa.accepts(&[0, 2, 3]));
    }

    #[test]
    fn inputs_are_never_written() {
        let p = lower("var a, x; x := a;", false);
        assert_eq!(p.inputs, BTreeSet::from(["a".to_string()]));
    }
}
