//! Quantifier-free linear integer arithmetic: expressions, formulas in
//! negation normal form, substitution and weakest preconditions.
//!
//! Formulas are kept canonical: atoms are `e ≤ 0`, `e = 0` or `e ≠ 0` with
//! coprime integer coefficients, and conjunctions/disjunctions are flat,
//! sorted and free of duplicates. Two formulas that differ only in atom
//! order or scaling compare equal.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub type Int = i128;

/// `Σ coeff·var + constant`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinExpr {
    pub terms: BTreeMap<String, Int>,
    pub constant: Int,
}

impl LinExpr {
    pub fn constant(c: Int) -> Self {
        LinExpr { terms: BTreeMap::new(), constant: c }
    }

    pub fn var(name: &str) -> Self {
        LinExpr { terms: BTreeMap::from([(name.to_string(), 1)]), constant: 0 }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, v: &str) -> Int {
        self.terms.get(v).copied().unwrap_or(0)
    }

    pub fn add_term(&mut self, v: &str, c: Int) {
        if c == 0 {
            return;
        }
        let e = self.terms.entry(v.to_string()).or_insert(0);
        *e += c;
        if *e == 0 {
            self.terms.remove(v);
        }
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut out = self.clone();
        for (v, &c) in &other.terms {
            out.add_term(v, c);
        }
        out.constant += other.constant;
        out
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        self.add(&other.scale(-1))
    }

    pub fn scale(&self, k: Int) -> LinExpr {
        if k == 0 {
            return LinExpr::default();
        }
        LinExpr {
            terms: self.terms.iter().map(|(v, &c)| (v.clone(), c * k)).collect(),
            constant: self.constant * k,
        }
    }

    pub fn neg(&self) -> LinExpr {
        self.scale(-1)
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(String::as_str)
    }

    /// Replaces `v` by `e`.
    pub fn subst(&self, v: &str, e: &LinExpr) -> LinExpr {
        match self.terms.get(v) {
            None => self.clone(),
            Some(&c) => {
                let mut rest = self.clone();
                rest.terms.remove(v);
                rest.add(&e.scale(c))
            }
        }
    }

    /// Renames every variable through `f`.
    pub fn rename(&self, f: &mut impl FnMut(&str) -> String) -> LinExpr {
        let mut out = LinExpr::constant(self.constant);
        for (v, &c) in &self.terms {
            out.add_term(&f(v), c);
        }
        out
    }

    /// Value under `env`; unknown variables read as zero.
    pub fn eval(&self, env: &BTreeMap<String, Int>) -> Int {
        self.terms
            .iter()
            .map(|(v, &c)| c * env.get(v).copied().unwrap_or(0))
            .sum::<Int>()
            + self.constant
    }

    fn coeff_gcd(&self) -> Int {
        self.terms.values().fold(0, |g, &c| gcd(g, c.abs()))
    }

    fn first_sign(&self) -> Int {
        self.terms.values().next().map_or(1, |c| c.signum())
    }

    /// SMT-LIB term; `name` maps variables to symbols.
    pub fn to_smt(&self, name: &impl Fn(&str) -> String) -> String {
        let mut parts: Vec<String> = self
            .terms
            .iter()
            .map(|(v, &c)| match c {
                1 => name(v),
                _ => format!("(* {} {})", smt_int(c), name(v)),
            })
            .collect();
        if self.constant != 0 || parts.is_empty() {
            parts.push(smt_int(self.constant));
        }
        if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            format!("(+ {})", parts.join(" "))
        }
    }
}

pub fn smt_int(c: Int) -> String {
    if c < 0 {
        format!("(- {})", -c)
    } else {
        c.to_string()
    }
}

pub fn gcd(a: Int, b: Int) -> Int {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn ceil_div(a: Int, b: Int) -> Int {
    -((-a).div_euclid(b))
}

impl fmt::Display for LinExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, &c) in &self.terms {
            let (sign, mag) = if c < 0 { ("-", -c) } else { ("+", c) };
            match (first, sign) {
                (true, "-") => f.write_str("-")?,
                (true, _) => {}
                (false, s) => write!(f, " {s} ")?,
            }
            if mag != 1 {
                write!(f, "{mag}*")?;
            }
            f.write_str(v)?;
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)
        } else if self.constant > 0 {
            write!(f, " + {}", self.constant)
        } else if self.constant < 0 {
            write!(f, " - {}", -self.constant)
        } else {
            Ok(())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Le,
    Eq,
    Ne,
}

/// `expr REL 0`, normalized.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub expr: LinExpr,
    pub rel: Rel,
}

impl Atom {
    pub fn holds(&self, env: &BTreeMap<String, Int>) -> bool {
        let v = self.expr.eval(env);
        match self.rel {
            Rel::Le => v <= 0,
            Rel::Eq => v == 0,
            Rel::Ne => v != 0,
        }
    }

    /// The atom as a formula, reduced to a constant when it has no variables.
    pub fn normalize(expr: LinExpr, rel: Rel) -> Formula {
        if expr.is_constant() {
            let v = expr.constant;
            let b = match rel {
                Rel::Le => v <= 0,
                Rel::Eq => v == 0,
                Rel::Ne => v != 0,
            };
            return Formula::from_bool(b);
        }
        let g = expr.coeff_gcd();
        let mut e = expr;
        match rel {
            Rel::Le => {
                e.constant = ceil_div(e.constant, g);
                for c in e.terms.values_mut() {
                    *c /= g;
                }
            }
            Rel::Eq | Rel::Ne => {
                if e.constant % g != 0 {
                    return Formula::from_bool(rel == Rel::Ne);
                }
                let s = e.first_sign() * g;
                e.constant /= s;
                for c in e.terms.values_mut() {
                    *c /= s;
                }
            }
        }
        Formula::Atom(Atom { expr: e, rel })
    }

    fn negate(&self) -> Formula {
        match self.rel {
            Rel::Le => {
                let mut e = self.expr.neg();
                e.constant += 1;
                Atom::normalize(e, Rel::Le)
            }
            Rel::Eq => Formula::Atom(Atom { expr: self.expr.clone(), rel: Rel::Ne }),
            Rel::Ne => Formula::Atom(Atom { expr: self.expr.clone(), rel: Rel::Eq }),
        }
    }

    fn to_smt(&self, name: &impl Fn(&str) -> String) -> String {
        let e = self.expr.to_smt(name);
        match self.rel {
            Rel::Le => format!("(<= {e} 0)"),
            Rel::Eq => format!("(= {e} 0)"),
            Rel::Ne => format!("(not (= {e} 0))"),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Print `lhs OP rhs` with the constant moved right.
        let mut lhs = self.expr.clone();
        let rhs = -lhs.constant;
        lhs.constant = 0;
        let op = match self.rel {
            Rel::Le => "<=",
            Rel::Eq => "=",
            Rel::Ne => "!=",
        };
        write!(f, "{lhs} {op} {rhs}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl Formula {
    pub fn from_bool(b: bool) -> Formula {
        if b {
            Formula::True
        } else {
            Formula::False
        }
    }

    pub fn cmp(lhs: &LinExpr, op: CmpOp, rhs: &LinExpr) -> Formula {
        let d = lhs.sub(rhs);
        match op {
            CmpOp::Le => Atom::normalize(d, Rel::Le),
            CmpOp::Lt => {
                let mut d = d;
                d.constant += 1;
                Atom::normalize(d, Rel::Le)
            }
            CmpOp::Ge => Atom::normalize(d.neg(), Rel::Le),
            CmpOp::Gt => {
                let mut d = d.neg();
                d.constant += 1;
                Atom::normalize(d, Rel::Le)
            }
            CmpOp::Eq => Atom::normalize(d, Rel::Eq),
            CmpOp::Ne => Atom::normalize(d, Rel::Ne),
        }
    }

    pub fn and(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(xs) => flat.extend(xs),
                f => flat.push(f),
            }
        }
        // e ≤ 0 together with -e ≤ 0 is e = 0.
        let les: BTreeSet<LinExpr> = flat
            .iter()
            .filter_map(|f| match f {
                Formula::Atom(Atom { expr, rel: Rel::Le }) => Some(expr.clone()),
                _ => None,
            })
            .collect();
        let mut merged = Vec::with_capacity(flat.len());
        for f in flat {
            if let Formula::Atom(Atom { expr, rel: Rel::Le }) = &f {
                if les.contains(&expr.neg()) {
                    merged.push(Atom::normalize(expr.clone(), Rel::Eq));
                    continue;
                }
            }
            merged.push(f);
        }
        merged.sort();
        merged.dedup();
        let eqs: BTreeSet<&Atom> = merged
            .iter()
            .filter_map(|f| match f {
                Formula::Atom(a) if a.rel == Rel::Eq => Some(a),
                _ => None,
            })
            .collect();
        if merged.iter().any(|f| match f {
            Formula::Atom(a) if a.rel == Rel::Ne => {
                eqs.contains(&Atom { expr: a.expr.clone(), rel: Rel::Eq })
            }
            _ => false,
        }) {
            return Formula::False;
        }
        match merged.len() {
            0 => Formula::True,
            1 => merged.pop().unwrap(),
            _ => Formula::And(merged),
        }
    }

    pub fn or(parts: impl IntoIterator<Item = Formula>) -> Formula {
        let mut flat = Vec::new();
        for p in parts {
            match p {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(xs) => flat.extend(xs),
                f => flat.push(f),
            }
        }
        flat.sort();
        flat.dedup();
        if flat.iter().any(|f| flat.contains(&f.not())) {
            return Formula::True;
        }
        match flat.len() {
            0 => Formula::False,
            1 => flat.pop().unwrap(),
            _ => Formula::Or(flat),
        }
    }

    pub fn not(&self) -> Formula {
        match self {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Atom(a) => a.negate(),
            Formula::And(xs) => Formula::or(xs.iter().map(Formula::not)),
            Formula::Or(xs) => Formula::and(xs.iter().map(Formula::not)),
        }
    }

    pub fn implies(&self, other: &Formula) -> Formula {
        Formula::or([self.not(), other.clone()])
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Formula::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Formula::False)
    }

    /// Rebuilds the formula bottom-up, mapping each atom through `f`.
    pub fn map_atoms(&self, f: &mut impl FnMut(&Atom) -> Formula) -> Formula {
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Atom(a) => f(a),
            Formula::And(xs) => Formula::and(xs.iter().map(|x| x.map_atoms(f))),
            Formula::Or(xs) => Formula::or(xs.iter().map(|x| x.map_atoms(f))),
        }
    }

    /// `self[v := e]`.
    pub fn subst(&self, v: &str, e: &LinExpr) -> Formula {
        self.map_atoms(&mut |a| {
            if a.expr.terms.contains_key(v) {
                Atom::normalize(a.expr.subst(v, e), a.rel)
            } else {
                Formula::Atom(a.clone())
            }
        })
    }

    pub fn rename(&self, f: &mut impl FnMut(&str) -> String) -> Formula {
        self.map_atoms(&mut |a| Atom::normalize(a.expr.rename(f), a.rel))
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => out.extend(a.expr.terms.keys().cloned()),
            Formula::And(xs) | Formula::Or(xs) => xs.iter().for_each(|x| x.collect_vars(out)),
        }
    }

    pub fn eval(&self, env: &BTreeMap<String, Int>) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => a.holds(env),
            Formula::And(xs) => xs.iter().all(|x| x.eval(env)),
            Formula::Or(xs) => xs.iter().any(|x| x.eval(env)),
        }
    }

    /// Atoms and boolean structure, for size statistics.
    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 1,
            Formula::And(xs) | Formula::Or(xs) => 1 + xs.iter().map(Formula::size).sum::<usize>(),
        }
    }

    /// Disjunctive normal form as lists of atoms. `None` once more than
    /// `limit` cubes would be produced.
    pub fn dnf(&self, limit: usize) -> Option<Vec<Vec<Atom>>> {
        match self {
            Formula::True => Some(vec![vec![]]),
            Formula::False => Some(vec![]),
            Formula::Atom(a) => Some(vec![vec![a.clone()]]),
            Formula::Or(xs) => {
                let mut out = Vec::new();
                for x in xs {
                    out.extend(x.dnf(limit)?);
                    if out.len() > limit {
                        return None;
                    }
                }
                Some(out)
            }
            Formula::And(xs) => {
                let mut acc: Vec<Vec<Atom>> = vec![vec![]];
                for x in xs {
                    let d = x.dnf(limit)?;
                    let mut next = Vec::new();
                    for c in &acc {
                        for e in &d {
                            let mut m = c.clone();
                            m.extend(e.iter().cloned());
                            next.push(m);
                        }
                    }
                    if next.len() > limit {
                        return None;
                    }
                    acc = next;
                }
                Some(acc)
            }
        }
    }

    pub fn to_smt(&self, name: &impl Fn(&str) -> String) -> String {
        match self {
            Formula::True => "true".into(),
            Formula::False => "false".into(),
            Formula::Atom(a) => a.to_smt(name),
            Formula::And(xs) => {
                let parts: Vec<String> = xs.iter().map(|x| x.to_smt(name)).collect();
                format!("(and {})", parts.join(" "))
            }
            Formula::Or(xs) => {
                let parts: Vec<String> = xs.iter().map(|x| x.to_smt(name)).collect();
                format!("(or {})", parts.join(" "))
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Atom(a) => write!(f, "{a}"),
            Formula::And(xs) | Formula::Or(xs) => {
                let sep = if matches!(self, Formula::And(_)) { " && " } else { " || " };
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    match x {
                        Formula::And(_) | Formula::Or(_) => write!(f, "({x})")?,
                        _ => write!(f, "{x}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

/// SMT-LIB symbol for a program variable.
pub fn smt_symbol(v: &str) -> String {
    format!("|{v}|")
}

/// One primitive action of a statement.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Assign(String, LinExpr),
    Assume(Formula),
}

impl Action {
    /// `wp(self, post)`.
    pub fn wp(&self, post: &Formula) -> Formula {
        match self {
            Action::Assign(x, e) => post.subst(x, e),
            Action::Assume(p) => Formula::or([p.not(), post.clone()]),
        }
    }

    pub fn reads(&self) -> BTreeSet<String> {
        match self {
            Action::Assign(_, e) => e.vars().map(str::to_string).collect(),
            Action::Assume(p) => p.vars(),
        }
    }

    pub fn writes(&self) -> Option<&str> {
        match self {
            Action::Assign(x, _) => Some(x),
            Action::Assume(_) => None,
        }
    }

    /// Runs the action on a concrete state; `false` if an assumption fails.
    pub fn exec(&self, env: &mut BTreeMap<String, Int>) -> bool {
        match self {
            Action::Assign(x, e) => {
                let v = e.eval(env);
                env.insert(x.clone(), v);
                true
            }
            Action::Assume(p) => p.eval(env),
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Assign(x, e) => write!(f, "{x} := {e}"),
            Action::Assume(p) => write!(f, "assume({p})"),
        }
    }
}

/// `wp(a_1 ⋯ a_k, post)`.
pub fn wp_seq(actions: &[Action], post: &Formula) -> Formula {
    actions.iter().rev().fold(post.clone(), |acc, a| a.wp(&acc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> LinExpr {
        LinExpr::var("x")
    }

    fn k(c: Int) -> LinExpr {
        LinExpr::constant(c)
    }

    #[test]
    fn atoms_are_scaled_and_tightened() {
        // 2x < 3  ⇔  2x - 2 ≤ 0 over ℤ ⇔ x ≤ 1.
        let f = Formula::cmp(&x().scale(2), CmpOp::Lt, &k(3));
        assert_eq!(f, Formula::cmp(&x(), CmpOp::Le, &k(1)));
        assert_eq!(Formula::cmp(&x().scale(2), CmpOp::Eq, &k(3)), Formula::False);
        assert_eq!(Formula::cmp(&x().scale(-2), CmpOp::Eq, &k(4)), Formula::cmp(&x(), CmpOp::Eq, &k(-2)));
    }

    #[test]
    fn negation_is_exact_over_integers() {
        let f = Formula::cmp(&x(), CmpOp::Lt, &k(0));
        assert_eq!(f.not(), Formula::cmp(&x(), CmpOp::Ge, &k(0)));
        assert_eq!(f.not().not(), f);
    }

    #[test]
    fn opposite_bounds_merge_into_equality() {
        let f = Formula::and([
            Formula::cmp(&x(), CmpOp::Le, &k(2)),
            Formula::cmp(&x(), CmpOp::Ge, &k(2)),
        ]);
        assert_eq!(f, Formula::cmp(&x(), CmpOp::Eq, &k(2)));
    }

    #[test]
    fn wp_of_increment() {
        // wp(x := x + 1, x ≠ 0) = x ≠ -1.
        let post = Formula::cmp(&x(), CmpOp::Ne, &k(0));
        let a = Action::Assign("x".into(), x().add(&k(1)));
        assert_eq!(a.wp(&post), Formula::cmp(&x(), CmpOp::Ne, &k(-1)));
    }

    #[test]
    fn display_roundtrip_shape() {
        let f = Formula::cmp(&x().add(&LinExpr::var("y").scale(-2)), CmpOp::Le, &k(3));
        assert_eq!(f.to_string(), "x - 2*y <= 3");
        assert_eq!(f.to_smt(&smt_symbol), "(<= (+ |x| (* (- 2) |y|) (- 3)) 0)");
    }

    #[test]
    fn dnf_splits_disequality_free_cubes() {
        let f = Formula::or([
            Formula::cmp(&x(), CmpOp::Lt, &k(0)),
            Formula::and([Formula::cmp(&x(), CmpOp::Gt, &k(3)), Formula::cmp(&LinExpr::var("y"), CmpOp::Eq, &k(1))]),
        ]);
        let d = f.dnf(8).unwrap();
        assert_eq!(d.len(), 2);
        assert!(f.dnf(1).is_none());
    }
}
