//! The refinement loop: check the proof against the program's reductions,
//! triage counterexamples, interpolate, grow the proof.

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use hyperweave_core::antichain::{check_interruptible, CheckConfig, CheckStats, Engine, Verdict};
use hyperweave_core::letters::Letter;
use hyperweave_core::reduction::OrderSource;
use hyperweave_core::strategy::{extract_counterexamples, Strategy};
use serde::Serialize;

use crate::frontend::Program;
use crate::proofdb::{
    replay, DbStats, Feasibility, Interpolation, Model, ProofAutomaton, ProofDb, ProofError,
};
use crate::smt::solver_from_env;

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub strategy: Strategy,
    pub orders: OrderSource,
    pub engine: Engine,
    pub interpolation: Interpolation,
    pub solver: String,
    /// Wall-clock limit for the whole run.
    pub timeout: Option<Duration>,
    /// Largest proof, counting `true` and `false`.
    pub max_proof: usize,
    pub max_rounds: Option<usize>,
    /// Check every independent pair with the solver before starting.
    pub check_dependence: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            strategy: Strategy::BpeRr,
            orders: OrderSource::Partition,
            engine: Engine::Antichain,
            interpolation: Interpolation::Farkas,
            solver: solver_from_env(),
            timeout: Some(Duration::from_secs(300)),
            max_proof: 512,
            max_rounds: None,
            check_dependence: false,
        }
    }
}

/// One refinement round.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct RoundLog {
    pub round: usize,
    pub strategy: String,
    pub verdict: String,
    pub counterexamples: Vec<Vec<Letter>>,
    pub assertions_added: usize,
    pub proof_size: usize,
    pub proof_dfa_states: usize,
    pub construction_secs: f64,
    pub checking_secs: f64,
    pub refinement_secs: f64,
    pub check: CheckStatsLog,
}

#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct CheckStatsLog {
    pub cells: usize,
    pub evaluations: u64,
    pub entries: usize,
    pub peak_width: usize,
}

impl From<&CheckStats> for CheckStatsLog {
    fn from(s: &CheckStats) -> Self {
        CheckStatsLog { cells: s.cells, evaluations: s.evaluations, entries: s.entries, peak_width: s.peak_width }
    }
}

/// What the soundness gate re-established before a Safe verdict.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct GateReport {
    pub triples_rechecked: usize,
    pub triples_confirmed: usize,
    pub recheck_covered: bool,
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Safe { proof: ProofAutomaton, gate: GateReport },
    Unsafe { trace: Vec<Letter>, model: Model },
    Unknown { reason: String },
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Safe { .. } => "safe",
            Outcome::Unsafe { .. } => "unsafe",
            Outcome::Unknown { .. } => "unknown",
        }
    }
}

pub struct VerifyResult {
    pub outcome: Outcome,
    pub rounds: Vec<RoundLog>,
    /// Assertion texts of the final proof, by id.
    pub assertions: Vec<String>,
    pub db_stats: DbStats,
    pub total_secs: f64,
    /// The database, for inspecting caches after the run.
    pub db: Option<ProofDb>,
}

impl VerifyResult {
    pub fn proof_size(&self) -> usize {
        self.assertions.len()
    }

    pub fn construction_secs(&self) -> f64 {
        self.rounds.iter().map(|r| r.construction_secs).sum()
    }

    pub fn checking_secs(&self) -> f64 {
        self.rounds.iter().map(|r| r.checking_secs).sum()
    }
}

/// No counterexample is issued twice, and every round that did not end
/// the run grew the proof.
pub fn progress_audit(log: &[RoundLog]) -> bool {
    let mut seen = BTreeSet::new();
    for r in log {
        for c in &r.counterexamples {
            if !seen.insert(c.clone()) {
                return false;
            }
        }
    }
    log.windows(2).all(|w| w[1].proof_size > w[0].proof_size)
}

fn unknown(reason: impl Into<String>) -> Outcome {
    Outcome::Unknown { reason: reason.into() }
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

pub fn verify(program: &Program, cfg: &VerifyConfig) -> VerifyResult {
    let start = Instant::now();
    let deadline = cfg.timeout.map(|t| start + t);
    let mut rounds = Vec::new();
    let mut db = match ProofDb::new(program, &cfg.solver, cfg.timeout) {
        Ok(db) => db,
        Err(e) => {
            return VerifyResult {
                outcome: unknown(e.to_string()),
                rounds,
                assertions: Vec::new(),
                db_stats: DbStats::default(),
                total_secs: secs(start),
                db: None,
            }
        }
    };
    db.set_interpolation(cfg.interpolation);
    db.set_deadline(deadline);
    let outcome = run(program, cfg, &mut db, deadline, &mut rounds).unwrap_or_else(|e| unknown(e.to_string()));
    VerifyResult {
        outcome,
        rounds,
        assertions: db.proof.iter().map(|(_, f)| f.to_string()).collect(),
        db_stats: db.stats(),
        total_secs: secs(start),
        db: Some(db),
    }
}

fn run(
    program: &Program,
    cfg: &VerifyConfig,
    db: &mut ProofDb,
    deadline: Option<Instant>,
    rounds: &mut Vec<RoundLog>,
) -> Result<Outcome, ProofError> {
    if cfg.check_dependence {
        let bad = db.check_dependence_soundness(&program.dependence)?;
        if let Some(&(a, b)) = bad.first() {
            return Ok(unknown(format!(
                "statements `{}` and `{}` are marked independent but do not commute",
                program.stmts[a as usize], program.stmts[b as usize]
            )));
        }
    }
    let thread_of = program.thread_of();
    let check_cfg = CheckConfig::new(cfg.orders).engine(cfg.engine);
    let mut interrupt = || deadline.is_some_and(|d| Instant::now() >= d);
    for round in 1.. {
        if cfg.max_rounds.is_some_and(|m| round > m) {
            return Ok(unknown("round limit reached"));
        }
        let t = Instant::now();
        let aut = db.build_proof_dfa(&program.dfa)?;
        let construction_secs = secs(t);
        let t = Instant::now();
        let outcome = match check_interruptible(&program.dfa, &aut.dfa, &program.dependence, check_cfg, &mut interrupt) {
            Ok(o) => o,
            Err(e) => return Ok(unknown(e.to_string())),
        };
        let checking_secs = secs(t);
        let mut log = RoundLog {
            round,
            strategy: cfg.strategy.to_string(),
            verdict: match outcome.verdict {
                Verdict::Covered => "covered".into(),
                Verdict::NotCovered => "not-covered".into(),
            },
            counterexamples: Vec::new(),
            assertions_added: 0,
            proof_size: db.proof.len(),
            proof_dfa_states: aut.dfa.num_states(),
            construction_secs,
            checking_secs,
            refinement_secs: 0.0,
            check: (&outcome.stats).into(),
        };
        if outcome.verdict == Verdict::Covered {
            rounds.push(log);
            return gate(program, cfg, db, aut, &mut interrupt);
        }
        let t = Instant::now();
        let tree = outcome.counterexample_tree();
        let mut strategy = cfg.strategy;
        let mut added = 0;
        loop {
            let cex = extract_counterexamples(tree.as_ref(), &program.dfa, &aut.dfa, strategy, &thread_of);
            if cex.is_empty() {
                rounds.push(log);
                return Ok(unknown("the check failed without a counterexample"));
            }
            for trace in cex {
                if log.counterexamples.contains(&trace) {
                    continue;
                }
                log.counterexamples.push(trace.clone());
                match db.feasible(&trace)? {
                    Feasibility::Feasible(model) => {
                        log.refinement_secs = secs(t);
                        rounds.push(log);
                        return Ok(Outcome::Unsafe { trace, model });
                    }
                    Feasibility::Infeasible => {
                        for f in db.interpolate(&trace)? {
                            added += db.add_assertion(f).1 as usize;
                        }
                    }
                }
            }
            // Stagnation: the round-robin pick taught nothing new.
            if added == 0 && strategy == Strategy::BpeRr {
                strategy = Strategy::BpeM(1);
                continue;
            }
            break;
        }
        log.assertions_added = added;
        log.refinement_secs = secs(t);
        rounds.push(log);
        if added == 0 {
            return Ok(unknown("refinement stagnated: no new assertion"));
        }
        if db.proof.len() > cfg.max_proof {
            return Ok(unknown(format!("proof exceeds {} assertions", cfg.max_proof)));
        }
    }
    unreachable!()
}

/// Re-confirms every triple the final proof automaton relies on with a
/// fresh solver, then re-runs the check from scratch.
fn gate(
    program: &Program,
    cfg: &VerifyConfig,
    db: &mut ProofDb,
    aut: ProofAutomaton,
    interrupt: &mut dyn FnMut() -> bool,
) -> Result<Outcome, ProofError> {
    let mut fresh = db.fresh_solver()?;
    let mut confirmed = 0;
    for &(p, a, q) in &aut.used {
        if db.requery(&mut fresh, p, a, q)? {
            confirmed += 1;
        }
    }
    let recheck = check_interruptible(
        &program.dfa,
        &aut.dfa,
        &program.dependence,
        CheckConfig::new(cfg.orders).engine(cfg.engine),
        interrupt,
    );
    let recheck_covered = matches!(recheck, Ok(ref o) if o.verdict == Verdict::Covered);
    let report = GateReport { triples_rechecked: aut.used.len(), triples_confirmed: confirmed, recheck_covered };
    if confirmed != aut.used.len() || !recheck_covered {
        return Ok(unknown(format!("soundness gate failed: {report:?}")));
    }
    Ok(Outcome::Safe { proof: aut, gate: report })
}

/// Runs a counterexample from a model; the final state if every
/// assumption holds.
pub fn replay_trace(program: &Program, trace: &[Letter], model: &Model) -> Option<Model> {
    replay(&program.trace_actions(trace), model)
}
