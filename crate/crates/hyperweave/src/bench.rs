//! Benchmark harness.
//!
//! A suite is a directory of `.imp` programs. A sidecar `NAME.expect`
//! holds the expected verdict on its first line and, optionally, a line
//! `group: NAME`; without one the group is the subdirectory. Runs with the
//! explicit engine on programs over its alphabet limit are reported as
//! `skipped`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use hyperweave_core::antichain::{Engine, MAX_EXPLICIT_LETTERS};
use hyperweave_core::strategy::Strategy;
use serde::Serialize;

use crate::cegar::{progress_audit, verify, VerifyConfig};
use crate::frontend::{load_program, LowerOptions};

pub struct BenchOptions {
    pub base: VerifyConfig,
    pub lower: LowerOptions,
    pub strategies: Vec<Strategy>,
    pub engines: Vec<Engine>,
    /// JSON lines, one per run.
    pub stats: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Row {
    pub name: String,
    pub group: String,
    pub strategy: String,
    pub antichain: bool,
    pub verdict: String,
    pub expected: Option<String>,
    pub matches: bool,
    pub proof_size: usize,
    pub rounds: usize,
    pub construction_secs: f64,
    pub checking_secs: f64,
    /// Checking time of the last round only.
    pub final_check_secs: f64,
    pub total_secs: f64,
    pub progress_audit: bool,
    pub note: String,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct GroupSummary {
    pub group: String,
    pub strategy: String,
    pub antichain: bool,
    pub count: usize,
    pub proof_size: f64,
    pub rounds: f64,
    pub construction_secs: f64,
    pub checking_secs: f64,
    pub total_secs: f64,
}

#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct Report {
    pub rows: Vec<Row>,
    pub groups: Vec<GroupSummary>,
}

impl Report {
    pub fn all_match(&self) -> bool {
        self.rows.iter().all(|r| r.matches)
    }

    /// Human-readable table of the rows.
    pub fn table(&self) -> String {
        let mut out = String::new();
        if self.rows.is_empty() {
            out.push_str("no benchmarks\n");
            return out;
        }
        let _ = writeln!(
            out,
            "{:<28} {:<10} {:<4} {:<8} {:<8} {:>5} {:>6} {:>9} {:>9} {:>9}",
            "benchmark", "strategy", "ac", "verdict", "expected", "|Π|", "rounds", "constr", "check", "total"
        );
        for r in &self.rows {
            let flag = if r.matches { "" } else { "  MISMATCH" };
            let _ = writeln!(
                out,
                "{:<28} {:<10} {:<4} {:<8} {:<8} {:>5} {:>6} {:>8.3}s {:>8.3}s {:>8.3}s{flag}",
                r.name,
                r.strategy,
                if r.antichain { "on" } else { "off" },
                r.verdict,
                r.expected.as_deref().unwrap_or("-"),
                r.proof_size,
                r.rounds,
                r.construction_secs,
                r.checking_secs,
                r.total_secs
            );
        }
        out
    }
}

struct Expect {
    verdict: Option<String>,
    group: Option<String>,
}

fn read_expect(path: &Path) -> Expect {
    let Ok(text) = fs::read_to_string(path) else {
        return Expect { verdict: None, group: None };
    };
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let verdict = lines.next().map(|l| l.to_lowercase());
    let group = lines.find_map(|l| l.strip_prefix("group:").map(|g| g.trim().to_string()));
    Expect { verdict, group }
}

fn collect(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
    entries.sort();
    for p in entries {
        if p.is_dir() {
            collect(&p, out)?;
        } else if p.extension().is_some_and(|e| e == "imp") {
            out.push(p);
        }
    }
    Ok(())
}

/// Runs every benchmark under every strategy and engine.
pub fn run_bench(dir: &Path, opts: &BenchOptions) -> anyhow::Result<Report> {
    let mut files = Vec::new();
    collect(dir, &mut files).with_context(|| format!("cannot read {}", dir.display()))?;
    let mut stats = match &opts.stats {
        Some(p) => Some(fs::File::create(p).with_context(|| format!("cannot write {}", p.display()))?),
        None => None,
    };
    let mut report = Report::default();
    for file in &files {
        let name = file.file_stem().unwrap_or_default().to_string_lossy().to_string();
        let expect = read_expect(&file.with_extension("expect"));
        let group = expect.group.clone().unwrap_or_else(|| {
            file.parent()
                .filter(|p| *p != dir)
                .and_then(|p| p.file_name())
                .map_or_else(|| "default".to_string(), |n| n.to_string_lossy().to_string())
        });
        let program = fs::read_to_string(file)
            .map_err(|e| e.to_string())
            .and_then(|t| load_program(&t, opts.lower).map_err(|e| e.to_string()));
        for &strategy in &opts.strategies {
            for &engine in &opts.engines {
                let mut row = Row {
                    name: name.clone(),
                    group: group.clone(),
                    strategy: strategy.to_string(),
                    antichain: engine == Engine::Antichain,
                    verdict: "unknown".into(),
                    expected: expect.verdict.clone(),
                    matches: false,
                    proof_size: 0,
                    rounds: 0,
                    construction_secs: 0.0,
                    checking_secs: 0.0,
                    final_check_secs: 0.0,
                    total_secs: 0.0,
                    progress_audit: true,
                    note: String::new(),
                };
                match &program {
                    Err(e) => row.note = e.clone(),
                    Ok(p) if engine == Engine::Explicit && p.num_letters() > MAX_EXPLICIT_LETTERS => {
                        row.verdict = "skipped".into();
                        row.note = format!(
                            "{} letters exceed the explicit engine limit of {MAX_EXPLICIT_LETTERS}",
                            p.num_letters()
                        );
                    }
                    Ok(p) => {
                        let cfg = VerifyConfig { strategy, engine, ..opts.base.clone() };
                        let r = verify(p, &cfg);
                        row.verdict = r.outcome.name().into();
                        row.proof_size = r.proof_size();
                        row.rounds = r.rounds.len();
                        row.construction_secs = r.construction_secs();
                        row.checking_secs = r.checking_secs();
                        row.final_check_secs = r.rounds.last().map_or(0.0, |l| l.checking_secs);
                        row.total_secs = r.total_secs;
                        row.progress_audit = progress_audit(&r.rounds);
                        if let crate::cegar::Outcome::Unknown { reason } = &r.outcome {
                            row.note = reason.clone();
                        }
                    }
                }
                row.matches = row.verdict == "skipped" || row.expected.as_ref().is_none_or(|e| *e == row.verdict);
                if let Some(f) = stats.as_mut() {
                    writeln!(f, "{}", serde_json::to_string(&row)?)?;
                }
                report.rows.push(row);
            }
        }
    }
    report.groups = summarize(&report.rows);
    if let Some(p) = &opts.csv {
        let mut w = csv::Writer::from_path(p).with_context(|| format!("cannot write {}", p.display()))?;
        for r in &report.rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    if let Some(p) = &opts.json {
        fs::write(p, serde_json::to_string_pretty(&report)?).with_context(|| format!("cannot write {}", p.display()))?;
    }
    Ok(report)
}

fn summarize(rows: &[Row]) -> Vec<GroupSummary> {
    let mut by: BTreeMap<(String, String, bool), Vec<&Row>> = BTreeMap::new();
    for r in rows {
        by.entry((r.group.clone(), r.strategy.clone(), r.antichain)).or_default().push(r);
    }
    by.into_iter()
        .map(|((group, strategy, antichain), rs)| {
            let n = rs.len() as f64;
            let mean = |f: &dyn Fn(&Row) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / n;
            GroupSummary {
                group,
                strategy,
                antichain,
                count: rs.len(),
                proof_size: mean(&|r| r.proof_size as f64),
                rounds: mean(&|r| r.rounds as f64),
                construction_secs: mean(&|r| r.construction_secs),
                checking_secs: mean(&|r| r.checking_secs),
                total_secs: mean(&|r| r.total_secs),
            }
        })
        .collect()
}
