//! Sequence interpolants for infeasible traces.
//!
//! Two engines. [`wp_sequence`] takes weakest preconditions of the suffixes.
//! [`farkas_sequence`] splits disjunctive assumptions into cubes and, for
//! every cube, reads a linear-arithmetic refutation of the trace off a
//! Farkas certificate; the prefix sums of the certificate are the
//! interpolants.

use std::collections::{BTreeMap, BTreeSet};

use super::ssa::{encode_trace, Versions};
use crate::logic::{smt_symbol, wp_seq, Action, Atom, Formula, Int, LinExpr, Rel};
use crate::smt::{Sat, Solver, SolverError, Sort};

/// Cubes per trace before the Farkas engine gives up.
pub const MAX_CUBES: usize = 32;

/// `φ_i = wp(a_{i+1} ⋯ a_m, false)` for `0 < i < m`, with `φ_0 = true`.
pub fn wp_sequence(stmts: &[&[Action]]) -> Vec<Formula> {
    let m = stmts.len();
    let mut out = vec![Formula::False; m + 1];
    for i in (0..m).rev() {
        out[i] = wp_seq(stmts[i], &out[i + 1]);
    }
    out[0] = Formula::True;
    out
}

/// `e ≤ 0`, or `e = 0` when `eq`.
#[derive(Clone, Debug)]
struct Row {
    step: usize,
    expr: LinExpr,
    eq: bool,
}

fn row_formula(r: &Row) -> Formula {
    Atom::normalize(r.expr.clone(), if r.eq { Rel::Eq } else { Rel::Le })
}

/// The cubes a constraint may be split into, each a list of rows.
fn options(f: &Formula, step: usize) -> Option<Vec<Vec<Row>>> {
    let cubes = f.dnf(MAX_CUBES)?;
    let mut out = Vec::new();
    for cube in cubes {
        let mut acc: Vec<Vec<Row>> = vec![Vec::new()];
        for atom in cube {
            let alts: Vec<Row> = match atom.rel {
                Rel::Le => vec![Row { step, expr: atom.expr, eq: false }],
                Rel::Eq => vec![Row { step, expr: atom.expr, eq: true }],
                Rel::Ne => {
                    let mut lt = atom.expr.clone();
                    lt.constant += 1;
                    let mut gt = atom.expr.neg();
                    gt.constant += 1;
                    vec![Row { step, expr: lt, eq: false }, Row { step, expr: gt, eq: false }]
                }
            };
            acc = acc
                .into_iter()
                .flat_map(|c| {
                    alts.iter().map(move |r| {
                        let mut c = c.clone();
                        c.push(r.clone());
                        c
                    })
                })
                .collect();
            if acc.len() > MAX_CUBES {
                return None;
            }
        }
        out.extend(acc);
        if out.len() > MAX_CUBES {
            return None;
        }
    }
    Some(out)
}

fn lcm(a: Int, b: Int) -> Int {
    a / crate::logic::gcd(a, b).max(1) * b
}

/// Multipliers `λ` over `rows` with `Σ λ·e ≡ 1` and `λ ≥ 0` on
/// inequalities, scaled to integers. `None` if the rows are satisfiable
/// over the rationals.
fn certificate(lra: &mut Solver, rows: &[Row]) -> Result<Option<Vec<Int>>, SolverError> {
    let lam = |j: usize| format!("|l{j}|");
    let decls: Vec<(String, Sort)> = (0..rows.len()).map(|j| (lam(j), Sort::Real)).collect();
    let mut asserts = Vec::new();
    let mut cols: BTreeMap<&str, Vec<(usize, Int)>> = BTreeMap::new();
    let mut constant = Vec::new();
    for (j, r) in rows.iter().enumerate() {
        if !r.eq {
            asserts.push(format!("(>= {} 0.0)", lam(j)));
        }
        for (v, &c) in &r.expr.terms {
            cols.entry(v).or_default().push((j, c));
        }
        if r.expr.constant != 0 {
            constant.push((j, r.expr.constant));
        }
    }
    let sum = |terms: &[(usize, Int)]| -> String {
        let parts: Vec<String> = terms
            .iter()
            .map(|&(j, c)| format!("(* {} {})", real(c), lam(j)))
            .collect();
        match parts.len() {
            0 => "0.0".into(),
            1 => parts[0].clone(),
            _ => format!("(+ {})", parts.join(" ")),
        }
    };
    for terms in cols.values() {
        asserts.push(format!("(= {} 0.0)", sum(terms)));
    }
    asserts.push(format!("(= {} 1.0)", sum(&constant)));
    let names: Vec<String> = (0..rows.len()).map(lam).collect();
    let (sat, vals) = lra.query(&decls, &asserts, &names)?;
    if sat == Sat::Unsat {
        return Ok(None);
    }
    let mut rats = Vec::with_capacity(vals.len());
    for v in &vals {
        match v.to_rational() {
            Some(r) => rats.push(r),
            None => return Err(SolverError::Unexpected(format!("{v:?}"))),
        }
    }
    let den = rats.iter().fold(1, |acc, r| lcm(acc, r.den));
    Ok(Some(rats.iter().map(|r| r.num * (den / r.den)).collect()))
}

fn real(c: Int) -> String {
    if c < 0 {
        format!("(- {}.0)", -c)
    } else {
        format!("{c}.0")
    }
}

/// Equalities over inputs in echelon form, each with its pivot variable
/// carrying a positive coefficient.
#[derive(Clone, Debug, Default)]
pub(crate) struct Echelon {
    rows: Vec<(String, LinExpr)>,
}

impl Echelon {
    /// Adds `e = 0`; returns whether it was independent of earlier rows.
    pub fn add(&mut self, e: &LinExpr) -> bool {
        let mut e = self.reduce(e);
        let Some((p, &c)) = e.terms.iter().next_back() else {
            return false;
        };
        let p = p.clone();
        if c < 0 {
            e = e.neg();
        }
        self.rows.push((p, e));
        true
    }

    /// `e` plus a combination of the rows, scaled by a positive factor, so
    /// that no pivot occurs. `e ≤ 0` and the result `≤ 0` agree wherever
    /// the rows hold.
    pub fn reduce(&self, e: &LinExpr) -> LinExpr {
        let mut e = e.clone();
        for (p, row) in &self.rows {
            let t = e.coeff(p);
            if t != 0 {
                let k = row.coeff(p);
                let g = crate::logic::gcd(k, t).max(1);
                e = e.scale(k / g).sub(&row.scale(t / g));
            }
        }
        e
    }
}

/// Top-level equalities of `p` that only mention inputs.
fn input_equalities(p: &Formula, inputs: &BTreeSet<String>) -> Vec<LinExpr> {
    let parts: &[Formula] = match p {
        Formula::And(xs) => xs,
        other => std::slice::from_ref(other),
    };
    parts
        .iter()
        .filter_map(|f| match f {
            Formula::Atom(Atom { expr, rel: Rel::Eq }) if expr.vars().all(|v| inputs.contains(v)) => {
                Some(expr.clone())
            }
            _ => None,
        })
        .collect()
}

/// Farkas sequence interpolants, or `None` when the engine does not apply:
/// too many cubes, an integer-only refutation, or a certificate whose prefix
/// mentions stale variable versions.
pub fn farkas_sequence(
    lia: &mut Solver,
    lra: &mut Solver,
    stmts: &[&[Action]],
    inputs: &BTreeSet<String>,
) -> Result<Option<Vec<Formula>>, SolverError> {
    let m = stmts.len();
    let enc = encode_trace(stmts);
    let mut fixed: Vec<Row> = Vec::new();
    let mut choices: Vec<Vec<Vec<Row>>> = Vec::new();
    for (i, cs) in enc.steps.iter().enumerate() {
        for f in cs {
            let Some(opts) = options(f, i) else { return Ok(None) };
            match opts.len() {
                0 => return Ok(Some(blocked_at(i, m))),
                1 => fixed.extend(opts.into_iter().next().unwrap()),
                _ => choices.push(opts),
            }
        }
    }
    let total = choices.iter().try_fold(1usize, |acc, c| acc.checked_mul(c.len()));
    if !matches!(total, Some(t) if t <= MAX_CUBES) {
        return Ok(None);
    }
    let decls: Vec<(String, Sort)> = enc.vars.iter().map(|v| (smt_symbol(v), Sort::Int)).collect();

    // Input equalities and their echelon form at every cut.
    let mut eqs_at: Vec<Vec<LinExpr>> = Vec::with_capacity(m);
    let mut ech_at: Vec<Echelon> = Vec::with_capacity(m);
    let (mut eqs, mut ech) = (Vec::new(), Echelon::default());
    for actions in stmts {
        for a in actions.iter() {
            if let Action::Assume(p) = a {
                for e in input_equalities(p, inputs) {
                    if ech.add(&e) {
                        eqs.push(e);
                    }
                }
            }
        }
        eqs_at.push(eqs.clone());
        ech_at.push(ech.clone());
    }

    let mut parts: Vec<Vec<Formula>> = vec![Vec::new(); m + 1];
    for code in 0..total.unwrap() {
        let mut rows = fixed.clone();
        let mut c = code;
        for opts in &choices {
            rows.extend(opts[c % opts.len()].iter().cloned());
            c /= opts.len();
        }
        let named: Vec<(String, String)> = rows
            .iter()
            .enumerate()
            .map(|(j, r)| (format!("r{j}"), row_formula(r).to_smt(&smt_symbol)))
            .collect();
        let Some(core) = lia.unsat_core(&decls, &named)? else {
            return Ok(None);
        };
        let core: BTreeSet<usize> = core.iter().filter_map(|n| n.strip_prefix('r')?.parse().ok()).collect();
        let rows: Vec<Row> = rows.into_iter().enumerate().filter(|(j, _)| core.contains(j)).map(|(_, r)| r).collect();
        let Some(lambda) = certificate(lra, &rows)? else {
            return Ok(None);
        };
        for i in 1..m {
            let mut sum = LinExpr::default();
            let mut eq_only = true;
            for (r, &l) in rows.iter().zip(&lambda) {
                if r.step < i && l != 0 {
                    sum = sum.add(&r.expr.scale(l));
                    eq_only &= r.eq;
                }
            }
            let Some(sum) = to_program_vars(&sum, &enc.after[i - 1]) else {
                return Ok(None);
            };
            let sum = ech_at[i - 1].reduce(&sum);
            parts[i].push(Atom::normalize(sum, if eq_only { Rel::Eq } else { Rel::Le }));
        }
    }
    let mut out = Vec::with_capacity(m + 1);
    out.push(Formula::True);
    for i in 1..m {
        let mut conj: Vec<Formula> =
            eqs_at[i - 1].iter().map(|e| Atom::normalize(e.clone(), Rel::Eq)).collect();
        conj.append(&mut parts[i]);
        out.push(Formula::and(conj));
    }
    out.push(Formula::False);
    Ok(Some(out))
}

fn to_program_vars(e: &LinExpr, ver: &Versions) -> Option<LinExpr> {
    let mut out = LinExpr::constant(e.constant);
    for (v, &c) in &e.terms {
        out.add_term(ver.current_var(v)?, c);
    }
    Some(out)
}

/// The sequence for a trace whose statement `i` can never execute.
fn blocked_at(i: usize, m: usize) -> Vec<Formula> {
    (0..=m).map(|j| if j <= i { Formula::True } else { Formula::False }).collect()
}
