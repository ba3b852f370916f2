//! Static single assignment encoding of traces.

use std::collections::{BTreeMap, BTreeSet};

use crate::logic::{Action, Atom, Formula, Int, LinExpr, Rel};

pub(crate) fn version_name(v: &str, k: u32) -> String {
    format!("{v}#{k}")
}

/// Current SSA version of every variable.
#[derive(Clone, Debug, Default)]
pub(crate) struct Versions {
    cur: BTreeMap<String, u32>,
}

impl Versions {
    pub fn current(&self, v: &str) -> u32 {
        self.cur.get(v).copied().unwrap_or(0)
    }

    pub fn name(&self, v: &str) -> String {
        version_name(v, self.current(v))
    }

    pub fn rename_expr(&self, e: &LinExpr) -> LinExpr {
        e.rename(&mut |v| self.name(v))
    }

    pub fn rename_formula(&self, f: &Formula) -> Formula {
        f.rename(&mut |v| self.name(v))
    }

    /// The constraint contributed by `a`, advancing versions past writes.
    pub fn encode(&mut self, a: &Action) -> Formula {
        match a {
            Action::Assume(p) => self.rename_formula(p),
            Action::Assign(x, e) => {
                let rhs = self.rename_expr(e);
                let k = self.current(x) + 1;
                self.cur.insert(x.clone(), k);
                Formula::Atom(Atom { expr: LinExpr::var(&version_name(x, k)).sub(&rhs), rel: Rel::Eq })
            }
        }
    }

    /// Maps an SSA name back to its variable when it is the current version.
    pub fn current_var<'s>(&self, ssa: &'s str) -> Option<&'s str> {
        let (v, k) = ssa.rsplit_once('#')?;
        (k.parse::<u32>().ok()? == self.current(v)).then_some(v)
    }
}

/// Per statement, the SSA constraints of its actions, together with the
/// versions in force after it.
pub(crate) struct Encoded {
    pub steps: Vec<Vec<Formula>>,
    pub after: Vec<Versions>,
    pub vars: BTreeSet<String>,
}

pub(crate) fn encode_trace(stmts: &[&[Action]]) -> Encoded {
    let mut ver = Versions::default();
    let mut steps = Vec::with_capacity(stmts.len());
    let mut after = Vec::with_capacity(stmts.len());
    let mut vars = BTreeSet::new();
    for actions in stmts {
        let mut cs = Vec::new();
        for a in actions.iter() {
            let f = ver.encode(a);
            vars.extend(f.vars());
            cs.push(f);
        }
        steps.push(cs);
        after.push(ver.clone());
    }
    Encoded { steps, after, vars }
}

/// Runs actions concretely from `init`, returning the final state, or
/// `None` if an assumption fails.
pub fn replay(actions: &[Action], init: &BTreeMap<String, Int>) -> Option<BTreeMap<String, Int>> {
    let mut env = init.clone();
    for a in actions {
        if !a.exec(&mut env) {
            return None;
        }
    }
    Some(env)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::CmpOp;

    #[test]
    fn versions_advance_on_writes() {
        let x = LinExpr::var("x");
        let acts = [
            Action::Assign("x".into(), x.add(&LinExpr::constant(1))),
            Action::Assume(Formula::cmp(&x, CmpOp::Eq, &LinExpr::constant(0))),
        ];
        let enc = encode_trace(&[&acts[..1], &acts[1..]]);
        assert_eq!(enc.steps[0][0].to_string(), "-x#0 + x#1 = 1");
        assert_eq!(enc.steps[1][0].to_string(), "x#1 = 0");
        assert_eq!(enc.after[0].current_var("x#1"), Some("x"));
        assert_eq!(enc.after[0].current_var("x#0"), None);
    }
}
