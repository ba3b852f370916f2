//! Command-line driver.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hyperweave_core::antichain::{check, CheckConfig, Engine, Verdict};
use hyperweave_core::reduction::OrderSource;
use hyperweave_core::strategy::Strategy;
use serde_json::json;

use crate::bench::{run_bench, BenchOptions};
use crate::cegar::{progress_audit, verify, Outcome, VerifyConfig, VerifyResult};
use crate::frontend::{load_program, parse_assertion, LowerOptions, Program};
use crate::proofdb::{Interpolation, ProofDb, DEAD_SINK, FALSE_SINK};
use crate::smt::solver_from_env;

pub const EXIT_SAFE: i32 = 0;
pub const EXIT_UNSAFE: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "hyperweave", version, about = "k-safety verification by sleep-set reductions and proof refinement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Verify one program.
    Verify {
        file: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Write the final proof as JSON.
        #[arg(long, value_name = "FILE")]
        proof_out: Option<PathBuf>,
    },
    /// Check a saved proof against a program, without refinement.
    Check {
        file: PathBuf,
        #[arg(long, value_name = "FILE")]
        proof: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run every benchmark of a directory under a configuration matrix.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        run: RunArgs,
        /// Strategies of the matrix, comma separated (default: bpe-rr,bpe-m1).
        #[arg(long, value_name = "LIST")]
        strategies: Option<String>,
        /// Antichain settings of the matrix (default: on,off).
        #[arg(long, value_name = "LIST")]
        antichains: Option<String>,
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        json: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
enum Orders {
    Linear,
    Partition,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
enum OnOff {
    On,
    Off,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
enum Format {
    Text,
    Json,
}

#[derive(Copy, Clone, Debug, ValueEnum, PartialEq, Eq)]
enum InterpolationArg {
    Farkas,
    Wp,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// naive | pe | bpe-rr | bpe-l N | bpe-m N
    #[arg(long, num_args = 1..=2, value_names = ["KIND", "N"])]
    strategy: Option<Vec<String>>,
    #[arg(long, value_enum, default_value = "partition")]
    orders: Orders,
    #[arg(long, value_enum, default_value = "on")]
    antichain: OnOff,
    /// Fuse straight-line code of each thread into single statements.
    #[arg(long)]
    atomic_blocks: bool,
    /// Solver command line (default: $HYPERWEAVE_SOLVER or `z3 -in -smt2`).
    #[arg(long, value_name = "CMD")]
    solver: Option<String>,
    /// Wall-clock limit in seconds.
    #[arg(long, value_name = "SEC", default_value_t = 300.0)]
    timeout: f64,
    /// Append per-round (verify) or per-run (bench) JSON lines to FILE.
    #[arg(long, value_name = "FILE")]
    stats: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Confirm with the solver that independent statements commute.
    #[arg(long)]
    check_dependence: bool,
    #[arg(long, value_enum, default_value = "farkas")]
    interpolation: InterpolationArg,
    #[arg(long, value_name = "N")]
    max_rounds: Option<usize>,
}

/// Parses `naive`, `pe`, `bpe-rr`, `bpe-l N`, `bpe-m N`; the count may
/// also be attached, as in `bpe-m1`.
pub fn parse_strategy(parts: &[String]) -> anyhow::Result<Strategy> {
    let (kind, n) = match parts {
        [k] => {
            let split = k.find(|c: char| c.is_ascii_digit()).unwrap_or(k.len());
            let (kind, n) = k.split_at(split);
            (kind.trim_end_matches([' ', ':', '=']).to_string(), (!n.is_empty()).then(|| n.to_string()))
        }
        [k, n] => (k.clone(), Some(n.clone())),
        _ => bail!("expected a strategy"),
    };
    let count = |n: Option<String>| -> anyhow::Result<usize> {
        let n = n.ok_or_else(|| anyhow!("strategy `{kind}` needs a count"))?;
        let v: usize = n.parse().with_context(|| format!("bad count `{n}`"))?;
        if v == 0 {
            bail!("counts start at 1");
        }
        Ok(v)
    };
    Ok(match kind.as_str() {
        "naive" if n.is_none() => Strategy::Naive,
        "pe" if n.is_none() => Strategy::Pe,
        "bpe-rr" if n.is_none() => Strategy::BpeRr,
        "bpe-l" => Strategy::BpeL(count(n)?),
        "bpe-m" => Strategy::BpeM(count(n)?),
        _ => bail!("unknown strategy `{}`", parts.join(" ")),
    })
}

impl RunArgs {
    fn config(&self) -> anyhow::Result<VerifyConfig> {
        if !(self.timeout > 0.0 && self.timeout.is_finite()) {
            bail!("--timeout must be positive");
        }
        let strategy = match &self.strategy {
            Some(parts) => parse_strategy(parts)?,
            None => Strategy::BpeRr,
        };
        Ok(VerifyConfig {
            strategy,
            orders: match self.orders {
                Orders::Linear => OrderSource::Linear,
                Orders::Partition => OrderSource::Partition,
            },
            engine: match self.antichain {
                OnOff::On => Engine::Antichain,
                OnOff::Off => Engine::Explicit,
            },
            interpolation: match self.interpolation {
                InterpolationArg::Farkas => Interpolation::Farkas,
                InterpolationArg::Wp => Interpolation::Wp,
            },
            solver: self.solver.clone().unwrap_or_else(solver_from_env),
            timeout: Some(Duration::from_secs_f64(self.timeout)),
            max_proof: 512,
            max_rounds: self.max_rounds,
            check_dependence: self.check_dependence,
        })
    }

    fn lower(&self) -> LowerOptions {
        LowerOptions { atomic_blocks: self.atomic_blocks }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run(argv: impl IntoIterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Verify { file, run, proof_out } => cmd_verify(&file, &run, proof_out.as_deref()),
        Command::Check { file, proof, run } => cmd_check(&file, &proof, &run),
        Command::Bench { dir, run, strategies, antichains, csv, json } => {
            let base = run.config()?;
            let strategies = match strategies {
                Some(list) => list
                    .split(',')
                    .map(|s| parse_strategy(&[s.trim().to_string()]))
                    .collect::<anyhow::Result<Vec<_>>>()?,
                None => vec![Strategy::BpeRr, Strategy::BpeM(1)],
            };
            let engines = match antichains {
                Some(list) => list
                    .split(',')
                    .map(|s| match s.trim() {
                        "on" => Ok(Engine::Antichain),
                        "off" => Ok(Engine::Explicit),
                        other => Err(anyhow!("expected on or off, found `{other}`")),
                    })
                    .collect::<anyhow::Result<Vec<_>>>()?,
                None => vec![Engine::Antichain, Engine::Explicit],
            };
            let opts = BenchOptions {
                base,
                lower: run.lower(),
                strategies,
                engines,
                stats: run.stats.clone(),
                csv,
                json,
            };
            let report = run_bench(&dir, &opts)?;
            print!("{}", report.table());
            Ok(if report.all_match() { 0 } else { EXIT_UNSAFE })
        }
    }
}

fn load(file: &Path, lower: LowerOptions) -> anyhow::Result<Program> {
    let text = fs::read_to_string(file).with_context(|| format!("cannot read {}", file.display()))?;
    load_program(&text, lower).map_err(|e| anyhow!("{}:{e}", file.display()))
}

pub fn exit_code(outcome: &Outcome) -> i32 {
    match outcome {
        Outcome::Safe { .. } => EXIT_SAFE,
        Outcome::Unsafe { .. } => EXIT_UNSAFE,
        Outcome::Unknown { .. } => EXIT_UNKNOWN,
    }
}

fn cmd_verify(file: &Path, args: &RunArgs, proof_out: Option<&Path>) -> anyhow::Result<i32> {
    let cfg = args.config()?;
    let program = load(file, args.lower())?;
    let result = verify(&program, &cfg);
    if let Some(path) = &args.stats {
        let mut f = fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
        for r in &result.rounds {
            writeln!(f, "{}", serde_json::to_string(r)?)?;
        }
    }
    let doc = result_json(file, &program, &cfg, &result);
    if let Some(path) = proof_out {
        fs::write(path, serde_json::to_string_pretty(&doc["proof"])?)
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    match args.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&doc)?),
        Format::Text => print!("{}", result_text(&program, &result)),
    }
    Ok(exit_code(&result.outcome))
}

/// The whole result as a JSON document. `proof` is the part that
/// `hyperweave check --proof` reads back.
pub fn result_json(file: &Path, program: &Program, cfg: &VerifyConfig, r: &VerifyResult) -> serde_json::Value {
    let mut doc = json!({
        "file": file.display().to_string(),
        "verdict": r.outcome.name(),
        "config": {
            "strategy": cfg.strategy.to_string(),
            "orders": format!("{:?}", cfg.orders).to_lowercase(),
            "antichain": cfg.engine == Engine::Antichain,
        },
        "statements": program.stmts.iter().map(|s| s.display.clone()).collect::<Vec<_>>(),
        "rounds": r.rounds,
        "progress_audit": progress_audit(&r.rounds),
        "stats": {
            "proof_size": r.proof_size(),
            "rounds": r.rounds.len(),
            "construction_secs": r.construction_secs(),
            "checking_secs": r.checking_secs(),
            "total_secs": r.total_secs,
            "solver": r.db_stats,
        },
    });
    match &r.outcome {
        Outcome::Safe { proof, gate } => {
            let mut transitions = Vec::new();
            for q in 2..proof.dfa.num_states() as u32 {
                for a in 0..proof.dfa.alphabet_len() as u32 {
                    let t = proof.dfa.step(q, a);
                    if t != DEAD_SINK {
                        transitions.push(json!([q, a, t]));
                    }
                }
            }
            doc["proof"] = json!({
                "assertions": r.assertions,
                "dfa": {
                    "initial": proof.dfa.initial(),
                    "false_sink": FALSE_SINK,
                    "dead_sink": DEAD_SINK,
                    "states": proof.states,
                    "transitions": transitions,
                },
            });
            doc["gate"] = json!(gate);
        }
        Outcome::Unsafe { trace, model } => {
            doc["trace"] = json!(trace.iter().map(|&a| program.stmts[a as usize].display.clone()).collect::<Vec<_>>());
            doc["letters"] = json!(trace);
            doc["model"] = json!(model
                .iter()
                .map(|(k, &v)| {
                    let n = i64::try_from(v).map_or_else(|_| json!(v.to_string()), |n| json!(n));
                    (k.clone(), n)
                })
                .collect::<serde_json::Map<_, _>>());
            doc["proof"] = json!({ "assertions": r.assertions });
        }
        Outcome::Unknown { reason } => {
            doc["reason"] = json!(reason);
            doc["proof"] = json!({ "assertions": r.assertions });
        }
    }
    doc
}

pub fn result_text(program: &Program, r: &VerifyResult) -> String {
    let mut out = String::new();
    let stats = format!(
        "proof size {}, rounds {}, construction {:.3}s, checking {:.3}s, total {:.3}s, solver queries {}\n",
        r.proof_size(),
        r.rounds.len(),
        r.construction_secs(),
        r.checking_secs(),
        r.total_secs,
        r.db_stats.solver_queries
    );
    match &r.outcome {
        Outcome::Safe { proof, .. } => {
            out.push_str("SAFE\n\nproof:\n");
            for (i, a) in r.assertions.iter().enumerate() {
                out.push_str(&format!("  [{i}] {a}\n"));
            }
            out.push_str(&format!("\nproof automaton ({} states):\n", proof.dfa.num_states()));
            for q in 2..proof.dfa.num_states() as u32 {
                let ids: Vec<String> = proof.states[q as usize].iter().map(u32::to_string).collect();
                let mark = if q == proof.dfa.initial() { " (initial)" } else { "" };
                out.push_str(&format!("  q{q} = {{{}}}{mark}\n", ids.join(", ")));
                for a in 0..proof.dfa.alphabet_len() as u32 {
                    let t = proof.dfa.step(q, a);
                    if t == DEAD_SINK {
                        continue;
                    }
                    let target = if t == FALSE_SINK { "false".to_string() } else { format!("q{t}") };
                    out.push_str(&format!("    {} -> {target}\n", program.stmts[a as usize].display));
                }
            }
        }
        Outcome::Unsafe { trace, model } => {
            out.push_str("UNSAFE\n\ncounterexample:\n");
            for &a in trace {
                out.push_str(&format!("  {}\n", program.stmts[a as usize].display));
            }
            out.push_str("\ninitial state:\n");
            for (k, v) in model {
                out.push_str(&format!("  {k} = {v}\n"));
            }
        }
        Outcome::Unknown { reason } => out.push_str(&format!("UNKNOWN: {reason}\n")),
    }
    out.push('\n');
    out.push_str(&stats);
    out
}

fn cmd_check(file: &Path, proof: &Path, args: &RunArgs) -> anyhow::Result<i32> {
    let cfg = args.config()?;
    let program = load(file, args.lower())?;
    let text = fs::read_to_string(proof).with_context(|| format!("cannot read {}", proof.display()))?;
    let doc: serde_json::Value = serde_json::from_str(&text)?;
    let doc = doc.get("proof").unwrap_or(&doc);
    let list = doc["assertions"].as_array().ok_or_else(|| anyhow!("no `assertions` array in proof"))?;
    let mut db = ProofDb::new(&program, &cfg.solver, cfg.timeout)?;
    for a in list {
        let s = a.as_str().ok_or_else(|| anyhow!("assertions must be strings"))?;
        db.add_assertion(parse_assertion(s, &program).map_err(|e| anyhow!("assertion `{s}`: {e}"))?);
    }
    let aut = db.build_proof_dfa(&program.dfa)?;
    let out = check(&program.dfa, &aut.dfa, &program.dependence, CheckConfig::new(cfg.orders).engine(cfg.engine))
        .map_err(|e| anyhow!("{e}"))?;
    let covered = out.verdict == Verdict::Covered;
    match args.format {
        Format::Json => println!("{}", json!({ "covered": covered, "assertions": list.len() })),
        Format::Text => println!("{}", if covered { "COVERED" } else { "NOT COVERED" }),
    }
    Ok(if covered { EXIT_SAFE } else { EXIT_UNKNOWN })
}
