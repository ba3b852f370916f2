//! Assertions, Hoare triples and the proof automaton.
//!
//! A [`ProofDb`] owns the proof `Π`, a long-lived solver and the triple
//! cache. Its languages are over the statement alphabet of one program.

mod interpolate;
mod ssa;

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::time::{Duration, Instant};

use hyperweave_core::automata::{Dfa, Nfa, StateId};
use hyperweave_core::letters::Letter;
use rand::seq::SliceRandom;
use rand::Rng;

pub use interpolate::{farkas_sequence, wp_sequence, MAX_CUBES};
pub use ssa::replay;

use crate::frontend::{Program, Stmt};
use crate::logic::{smt_symbol, wp_seq, Action, Formula, Int, LinExpr};
use crate::smt::{Sat, Solver, SolverError, Sort};

pub type AssertionId = u32;

/// Id of `true` in every proof.
pub const TRUE: AssertionId = 0;
/// Id of `false` in every proof.
pub const FALSE: AssertionId = 1;

#[derive(Debug, thiserror::Error)]
pub enum ProofError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("time limit reached")]
    Timeout,
    #[error("trace is feasible; it has no interpolants")]
    Feasible,
    #[error("interpolant sequence fails at statement {0}")]
    InvalidSequence(usize),
}

/// A finite set of assertions, deduplicated by canonical form.
#[derive(Clone, Debug)]
pub struct Proof {
    formulas: Vec<Formula>,
    index: HashMap<Formula, AssertionId>,
}

impl Default for Proof {
    fn default() -> Self {
        Proof::new()
    }
}

impl Proof {
    /// `{true, false}`.
    pub fn new() -> Self {
        let mut p = Proof { formulas: Vec::new(), index: HashMap::new() };
        p.insert(Formula::True);
        p.insert(Formula::False);
        p
    }

    /// Adds `f` and returns its id, and whether it was new.
    pub fn insert(&mut self, f: Formula) -> (AssertionId, bool) {
        if let Some(&id) = self.index.get(&f) {
            return (id, false);
        }
        let id = self.formulas.len() as AssertionId;
        self.index.insert(f.clone(), id);
        self.formulas.push(f);
        (id, true)
    }

    pub fn id_of(&self, f: &Formula) -> Option<AssertionId> {
        self.index.get(f).copied()
    }

    pub fn get(&self, id: AssertionId) -> &Formula {
        &self.formulas[id as usize]
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.formulas.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (AssertionId, &Formula)> {
        self.formulas.iter().enumerate().map(|(i, f)| (i as AssertionId, f))
    }
}

/// Interpolation engine.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Interpolation {
    /// Weakest preconditions of trace suffixes.
    Wp,
    /// Farkas certificates, with weakest preconditions as fallback.
    #[default]
    Farkas,
}

/// A trace's satisfying initial state.
pub type Model = BTreeMap<String, Int>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(Model),
    Infeasible,
}

/// Solver and cache counters.
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct DbStats {
    pub solver_queries: u64,
    pub triple_lookups: u64,
    pub triple_cache_hits: u64,
    /// Triples decided without the solver.
    pub syntactic: u64,
    pub farkas_sequences: u64,
    pub wp_sequences: u64,
}

/// The proof DFA for one round, restricted to the part that the program
/// can reach.
#[derive(Clone, Debug)]
pub struct ProofAutomaton {
    pub dfa: Dfa,
    /// Assertions of each DFA state; empty for the two sinks.
    pub states: Vec<Vec<AssertionId>>,
    /// A valid triple justifying every assertion of every computed
    /// successor state.
    pub used: BTreeSet<(AssertionId, Letter, AssertionId)>,
}

/// State of the proof DFA in which `false` holds; accepting, absorbing.
pub const FALSE_SINK: StateId = 0;
/// Target of transitions the program never takes; rejecting, absorbing.
pub const DEAD_SINK: StateId = 1;

pub struct ProofDb {
    stmts: Vec<Stmt>,
    inputs: BTreeSet<String>,
    solver_cmd: String,
    query_timeout: Option<Duration>,
    solver: Solver,
    lra: Option<Solver>,
    pub proof: Proof,
    interpolation: Interpolation,
    triples: HashMap<(AssertionId, Letter, AssertionId), bool>,
    implications: HashMap<(AssertionId, AssertionId), bool>,
    deadline: Option<Instant>,
    stats: DbStats,
}

impl ProofDb {
    pub fn new(program: &Program, solver_cmd: &str, query_timeout: Option<Duration>) -> Result<Self, ProofError> {
        let solver = Solver::spawn_with_cores(solver_cmd, "QF_LIA", query_timeout)?;
        Ok(ProofDb {
            stmts: program.stmts.clone(),
            inputs: program.inputs.clone(),
            solver_cmd: solver_cmd.to_string(),
            query_timeout,
            solver,
            lra: None,
            proof: Proof::new(),
            interpolation: Interpolation::default(),
            triples: HashMap::new(),
            implications: HashMap::new(),
            deadline: None,
            stats: DbStats::default(),
        })
    }

    pub fn set_interpolation(&mut self, engine: Interpolation) {
        self.interpolation = engine;
    }

    /// Solver work after this instant fails with [`ProofError::Timeout`].
    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.deadline = deadline;
    }

    pub fn stats(&self) -> DbStats {
        let mut s = self.stats.clone();
        s.solver_queries = self.solver.queries() + self.lra.as_ref().map_or(0, Solver::queries);
        s
    }

    pub fn stmts(&self) -> &[Stmt] {
        &self.stmts
    }

    pub fn solver_command(&self) -> &str {
        &self.solver_cmd
    }

    /// Adds an assertion; returns its id and whether it was new.
    pub fn add_assertion(&mut self, f: Formula) -> (AssertionId, bool) {
        self.proof.insert(f)
    }

    fn tick(&self) -> Result<(), ProofError> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(ProofError::Timeout),
            _ => Ok(()),
        }
    }

    /// Whether `φ ∧ ¬ψ` is unsatisfiable.
    fn valid_implication(&mut self, pre: &Formula, post: &Formula) -> Result<bool, ProofError> {
        self.tick()?;
        let sat = check_implication(&mut self.solver, pre, post)?;
        Ok(sat == Sat::Unsat)
    }

    fn implies(&mut self, pre: AssertionId, post: AssertionId) -> Result<bool, ProofError> {
        if pre == post || pre == FALSE || post == TRUE {
            return Ok(true);
        }
        if let Some(&v) = self.implications.get(&(pre, post)) {
            return Ok(v);
        }
        let (p, q) = (self.proof.get(pre).clone(), self.proof.get(post).clone());
        let v = self.valid_implication(&p, &q)?;
        self.implications.insert((pre, post), v);
        Ok(v)
    }

    /// Validity of `{pre} a {post}`, cached.
    pub fn hoare_valid(&mut self, pre: AssertionId, a: Letter, post: AssertionId) -> Result<bool, ProofError> {
        self.stats.triple_lookups += 1;
        if post == TRUE || pre == FALSE {
            self.stats.syntactic += 1;
            return Ok(true);
        }
        if let Some(&v) = self.triples.get(&(pre, a, post)) {
            self.stats.triple_cache_hits += 1;
            return Ok(v);
        }
        let v = self.decide_triple(pre, a, post)?;
        self.triples.insert((pre, a, post), v);
        Ok(v)
    }

    fn decide_triple(&mut self, pre: AssertionId, a: Letter, post: AssertionId) -> Result<bool, ProofError> {
        let stmt = &self.stmts[a as usize];
        let post_f = self.proof.get(post);
        let untouched = stmt.writes.iter().all(|w| !post_f.vars().contains(w));
        let has_assume = stmt.actions.iter().any(|x| matches!(x, Action::Assume(_)));
        if untouched {
            if self.implies(pre, post)? {
                self.stats.syntactic += 1;
                return Ok(true);
            }
            if !has_assume {
                self.stats.syntactic += 1;
                return Ok(false);
            }
        }
        let wp = wp_seq(&self.stmts[a as usize].actions, self.proof.get(post));
        let pre_f = self.proof.get(pre);
        if wp.is_true() || *pre_f == wp {
            self.stats.syntactic += 1;
            return Ok(true);
        }
        let pre_f = pre_f.clone();
        self.valid_implication(&pre_f, &wp)
    }

    /// `hoare_valid` for formulas outside the proof, uncached.
    pub fn triple_valid(&mut self, pre: &Formula, a: Letter, post: &Formula) -> Result<bool, ProofError> {
        let wp = wp_seq(&self.stmts[a as usize].actions, post);
        self.valid_implication(pre, &wp)
    }

    /// All cached triple verdicts.
    pub fn cached_triples(&self) -> Vec<((AssertionId, Letter, AssertionId), bool)> {
        let mut v: Vec<_> = self.triples.iter().map(|(&k, &b)| (k, b)).collect();
        v.sort();
        v
    }

    /// Re-decides a triple on `solver` without caches or shortcuts.
    pub fn requery(&self, solver: &mut Solver, pre: AssertionId, a: Letter, post: AssertionId) -> Result<bool, ProofError> {
        let wp = wp_seq(&self.stmts[a as usize].actions, self.proof.get(post));
        Ok(check_implication(solver, self.proof.get(pre), &wp)? == Sat::Unsat)
    }

    /// A fresh solver process with the same command and timeout.
    pub fn fresh_solver(&self) -> Result<Solver, ProofError> {
        Ok(Solver::spawn(&self.solver_cmd, "QF_LIA", self.query_timeout)?)
    }

    /// Compares `samples` random cached triples against a fresh solver.
    /// Returns `(agreeing, compared)`.
    pub fn audit_cache(&self, samples: usize, rng: &mut impl Rng) -> Result<(usize, usize), ProofError> {
        let all = self.cached_triples();
        let mut fresh = self.fresh_solver()?;
        let picked: Vec<_> = if all.len() <= samples {
            all
        } else {
            all.choose_multiple(rng, samples).cloned().collect()
        };
        let mut agree = 0;
        for &((p, a, q), v) in &picked {
            if self.requery(&mut fresh, p, a, q)? == v {
                agree += 1;
            }
        }
        Ok((agree, picked.len()))
    }

    /// The NFA of `Π`: states are assertions, `true` is initial, `false`
    /// is final, and every valid triple is an edge.
    pub fn build_proof_nfa(&mut self) -> Result<Nfa, ProofError> {
        let n = self.stmts.len();
        let k = self.proof.len() as AssertionId;
        let mut nfa = Nfa::new(n);
        for id in 1..k {
            nfa.add_state(id == FALSE);
        }
        nfa.set_initial(TRUE);
        for p in 0..k {
            for a in 0..n as Letter {
                for q in 0..k {
                    if self.hoare_valid(p, a, q)? {
                        nfa.add_edge(p, a, q);
                    }
                }
            }
        }
        Ok(nfa)
    }

    /// Successor of a set of assertions under `a`: every assertion with a
    /// valid triple from some member. `None` when `false` is reached.
    fn post(&mut self, from: &[AssertionId], a: Letter, used: &mut BTreeSet<(AssertionId, Letter, AssertionId)>) -> Result<Option<Vec<AssertionId>>, ProofError> {
        let k = self.proof.len() as AssertionId;
        for &p in from {
            if self.hoare_valid(p, a, FALSE)? {
                used.insert((p, a, FALSE));
                return Ok(None);
            }
        }
        let mut out = vec![TRUE];
        for q in 2..k {
            // try the assertion itself first: it is the usual witness
            let mut order: Vec<AssertionId> = Vec::with_capacity(from.len());
            if from.contains(&q) {
                order.push(q);
            }
            order.extend(from.iter().copied().filter(|&p| p != q && p != TRUE));
            if from.contains(&TRUE) && q != TRUE {
                order.push(TRUE);
            }
            for p in order {
                if self.hoare_valid(p, a, q)? {
                    used.insert((p, a, q));
                    out.push(q);
                    break;
                }
            }
        }
        Ok(Some(out))
    }

    /// Determinizes the proof NFA on the fly, computing only transitions
    /// that some reachable live state of `program` takes. Everything else
    /// goes to [`DEAD_SINK`].
    pub fn build_proof_dfa(&mut self, program: &Dfa) -> Result<ProofAutomaton, ProofError> {
        let n = program.alphabet_len();
        let live = program.live_states();
        let mut dfa = Dfa::new(n, 2);
        dfa.set_final(FALSE_SINK, true);
        for a in 0..n as Letter {
            dfa.set(FALSE_SINK, a, FALSE_SINK);
            dfa.set(DEAD_SINK, a, DEAD_SINK);
        }
        let mut states: Vec<Vec<AssertionId>> = vec![Vec::new(), Vec::new()];
        let mut ids: HashMap<Vec<AssertionId>, StateId> = HashMap::new();
        let mut done: HashMap<(StateId, Letter), StateId> = HashMap::new();
        let mut used = BTreeSet::new();
        let start = dfa.add_state(false);
        for a in 0..n as Letter {
            dfa.set(start, a, DEAD_SINK);
        }
        states.push(vec![TRUE]);
        ids.insert(vec![TRUE], start);
        dfa.set_initial(start);
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        if live[program.initial() as usize] {
            seen.insert((program.initial(), start));
            queue.push_back((program.initial(), start));
        }
        while let Some((qp, m)) = queue.pop_front() {
            if m == FALSE_SINK {
                continue;
            }
            for a in 0..n as Letter {
                let rp = program.step(qp, a);
                if !live[rp as usize] {
                    continue;
                }
                let target = match done.get(&(m, a)) {
                    Some(&t) => t,
                    None => {
                        self.tick()?;
                        let from = states[m as usize].clone();
                        let t = match self.post(&from, a, &mut used)? {
                            None => FALSE_SINK,
                            Some(set) => match ids.get(&set) {
                                Some(&t) => t,
                                None => {
                                    let t = dfa.add_state(false);
                                    for b in 0..n as Letter {
                                        dfa.set(t, b, DEAD_SINK);
                                    }
                                    ids.insert(set.clone(), t);
                                    states.push(set);
                                    t
                                }
                            },
                        };
                        dfa.set(m, a, t);
                        done.insert((m, a), t);
                        t
                    }
                };
                if seen.insert((rp, target)) {
                    queue.push_back((rp, target));
                }
            }
        }
        Ok(ProofAutomaton { dfa, states, used })
    }

    /// Whether the trace has a run from some initial state. A model is
    /// checked by concrete replay before it is returned.
    pub fn feasible(&mut self, trace: &[Letter]) -> Result<Feasibility, ProofError> {
        self.tick()?;
        let acts: Vec<&[Action]> = trace.iter().map(|&a| self.stmts[a as usize].actions.as_slice()).collect();
        let enc = ssa::encode_trace(&acts);
        let mut vars = enc.vars.clone();
        let mut initial: BTreeSet<String> = BTreeSet::new();
        for actions in &acts {
            for a in actions.iter() {
                initial.extend(a.reads());
                if let Some(w) = a.writes() {
                    initial.insert(w.to_string());
                }
            }
        }
        let init_names: Vec<String> = initial.iter().map(|v| ssa::version_name(v, 0)).collect();
        vars.extend(init_names.iter().cloned());
        let decls: Vec<(String, Sort)> = vars.iter().map(|v| (smt_symbol(v), Sort::Int)).collect();
        let asserts: Vec<String> = enc.steps.iter().flatten().map(|f| f.to_smt(&smt_symbol)).collect();
        let values: Vec<String> = init_names.iter().map(|v| smt_symbol(v)).collect();
        let (sat, vals) = self.solver.query(&decls, &asserts, &values)?;
        if sat == Sat::Unsat {
            return Ok(Feasibility::Infeasible);
        }
        let mut model = Model::new();
        for (v, s) in initial.iter().zip(&vals) {
            let r = s.to_rational().filter(|r| r.den == 1);
            let Some(r) = r else {
                return Err(SolverError::Unexpected(format!("{s:?}")).into());
            };
            model.insert(v.clone(), r.num);
        }
        let flat: Vec<Action> = acts.iter().flat_map(|x| x.iter().cloned()).collect();
        if replay(&flat, &model).is_none() {
            return Err(SolverError::Unexpected("model does not replay".into()).into());
        }
        Ok(Feasibility::Feasible(model))
    }

    fn lra(&mut self) -> Result<&mut Solver, ProofError> {
        if self.lra.is_none() {
            self.lra = Some(Solver::spawn(&self.solver_cmd, "QF_LRA", self.query_timeout)?);
        }
        Ok(self.lra.as_mut().unwrap())
    }

    /// Interpolants `φ_0 = true, …, φ_m = false` for an infeasible trace,
    /// each adjacent triple checked. Callers add them with
    /// [`ProofDb::add_assertion`].
    pub fn interpolate(&mut self, trace: &[Letter]) -> Result<Vec<Formula>, ProofError> {
        self.tick()?;
        let stmts = self.stmts.clone();
        let acts: Vec<&[Action]> = trace.iter().map(|&a| stmts[a as usize].actions.as_slice()).collect();
        if self.interpolation == Interpolation::Farkas {
            self.lra()?;
            let lra = self.lra.as_mut().unwrap();
            if let Some(seq) = farkas_sequence(&mut self.solver, lra, &acts, &self.inputs)? {
                if self.first_invalid(trace, &seq)?.is_none() {
                    self.stats.farkas_sequences += 1;
                    return Ok(seq);
                }
            }
        }
        let seq = wp_sequence(&acts);
        if !self.valid_implication(&Formula::True, &wp_seq(&acts.concat(), &Formula::False))? {
            return Err(ProofError::Feasible);
        }
        if let Some(i) = self.first_invalid(trace, &seq)? {
            return Err(ProofError::InvalidSequence(i));
        }
        self.stats.wp_sequences += 1;
        Ok(seq)
    }

    fn first_invalid(&mut self, trace: &[Letter], seq: &[Formula]) -> Result<Option<usize>, ProofError> {
        for (i, &a) in trace.iter().enumerate() {
            if !self.triple_valid(&seq[i], a, &seq[i + 1])? {
                return Ok(Some(i));
            }
        }
        Ok(None)
    }

    /// Independent pairs whose two orders are not equivalent: some state
    /// runs one order but not the other, or the two orders end in
    /// different states.
    pub fn check_dependence_soundness(&mut self, d: &hyperweave_core::DependenceRel) -> Result<Vec<(Letter, Letter)>, ProofError> {
        let mut bad = Vec::new();
        for (a, b) in d.independent_pairs() {
            if a >= b {
                continue;
            }
            self.tick()?;
            let ab = symbolic(&[&self.stmts[a as usize], &self.stmts[b as usize]]);
            let ba = symbolic(&[&self.stmts[b as usize], &self.stmts[a as usize]]);
            let vars: BTreeSet<&String> = ab.1.keys().chain(ba.1.keys()).collect();
            let same_state = Formula::and(vars.into_iter().map(|v| {
                let x = ab.1.get(v).cloned().unwrap_or_else(|| LinExpr::var(&ssa::version_name(v, 0)));
                let y = ba.1.get(v).cloned().unwrap_or_else(|| LinExpr::var(&ssa::version_name(v, 0)));
                Formula::cmp(&x, crate::logic::CmpOp::Eq, &y)
            }));
            // equivalent iff (g_ab ⇔ g_ba) ∧ (g_ab ⇒ same)
            let ok = Formula::and([
                ab.0.implies(&ba.0),
                ba.0.implies(&ab.0),
                ab.0.implies(&same_state),
            ]);
            if !self.valid_implication(&Formula::True, &ok)? {
                bad.push((a, b));
            }
        }
        Ok(bad)
    }
}

/// Guard and final values of running `stmts` from the symbolic state
/// `v ↦ v#0`.
fn symbolic(stmts: &[&Stmt]) -> (Formula, BTreeMap<String, LinExpr>) {
    let mut env: BTreeMap<String, LinExpr> = BTreeMap::new();
    let mut guard = Vec::new();
    let lookup = |env: &BTreeMap<String, LinExpr>, v: &str| {
        env.get(v).cloned().unwrap_or_else(|| LinExpr::var(&ssa::version_name(v, 0)))
    };
    for s in stmts {
        for a in &s.actions {
            match a {
                Action::Assume(p) => {
                    // substituted terms only mention `v#0` names
                    let mut f = p.clone();
                    for v in p.vars() {
                        f = f.subst(&v, &lookup(&env, &v));
                    }
                    guard.push(f);
                }
                Action::Assign(x, e) => {
                    let mut out = LinExpr::constant(e.constant);
                    for (v, &c) in &e.terms {
                        out = out.add(&lookup(&env, v).scale(c));
                    }
                    env.insert(x.clone(), out);
                }
            }
        }
    }
    (Formula::and(guard), env)
}

fn check_implication(solver: &mut Solver, pre: &Formula, post: &Formula) -> Result<Sat, SolverError> {
    if pre.is_false() || post.is_true() {
        return Ok(Sat::Unsat);
    }
    let mut vars = pre.vars();
    vars.extend(post.vars());
    let decls: Vec<(String, Sort)> = vars.iter().map(|v| (smt_symbol(v), Sort::Int)).collect();
    let asserts = [pre.to_smt(&smt_symbol), format!("(not {})", post.to_smt(&smt_symbol))];
    solver.check(&decls, &asserts)
}

#[cfg(test)]
mod tests;
