//! A long-lived SMT-LIB v2 solver process spoken to over pipes.
//!
//! Every query runs inside its own `push`/`pop` scope, so declarations and
//! assertions never leak between queries.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::time::Duration;

use crate::logic::Int;

pub const DEFAULT_SOLVER: &str = "z3 -in -smt2";
pub const SOLVER_ENV: &str = "HYPERWEAVE_SOLVER";

/// Solver command from the environment, or the default.
pub fn solver_from_env() -> String {
    std::env::var(SOLVER_ENV).unwrap_or_else(|_| DEFAULT_SOLVER.to_string())
}

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("cannot start solver `{command}`: {source}")]
    Spawn {
        command: String,
        source: std::io::Error,
    },
    #[error("solver i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver closed its output")]
    Eof,
    #[error("unexpected solver reply `{0}`")]
    Unexpected(String),
    #[error("solver answered unknown")]
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sat {
    Sat,
    Unsat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sort {
    Int,
    Real,
}

impl Sort {
    fn smt(self) -> &'static str {
        match self {
            Sort::Int => "Int",
            Sort::Real => "Real",
        }
    }
}

/// An exact rational `num/den` with `den > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rational {
    pub num: Int,
    pub den: Int,
}

impl Rational {
    pub fn int(v: Int) -> Self {
        Rational { num: v, den: 1 }
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// S-expressions as printed by solvers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn parse(text: &str) -> Result<Sexp, String> {
        let toks = tokenize(text)?;
        let mut pos = 0;
        let s = parse_tokens(&toks, &mut pos)?;
        if pos != toks.len() {
            return Err(format!("trailing input in `{text}`"));
        }
        Ok(s)
    }

    /// Evaluates a numeral term: `5`, `(- 5)`, `2.5`, `(/ 1.0 3.0)`.
    pub fn to_rational(&self) -> Option<Rational> {
        match self {
            Sexp::Atom(a) => parse_decimal(a),
            Sexp::List(xs) => match xs.as_slice() {
                [Sexp::Atom(op), x] if op == "-" => {
                    let r = x.to_rational()?;
                    Some(Rational { num: -r.num, den: r.den })
                }
                [Sexp::Atom(op), x, y] if op == "/" => {
                    let (a, b) = (x.to_rational()?, y.to_rational()?);
                    if b.num == 0 {
                        return None;
                    }
                    let (mut num, mut den) = (a.num.checked_mul(b.den)?, a.den.checked_mul(b.num)?);
                    if den < 0 {
                        (num, den) = (-num, -den);
                    }
                    let g = crate::logic::gcd(num, den).max(1);
                    Some(Rational { num: num / g, den: den / g })
                }
                _ => None,
            },
        }
    }
}

fn parse_decimal(a: &str) -> Option<Rational> {
    match a.split_once('.') {
        None => a.parse().ok().map(Rational::int),
        Some((int, frac)) => {
            let den: Int = 10i128.checked_pow(frac.len() as u32)?;
            let num: Int = format!("{int}{frac}").parse().ok()?;
            let g = crate::logic::gcd(num, den).max(1);
            Some(Rational { num: num / g, den: den / g })
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        match c {
            '(' | ')' => {
                out.push(c.to_string());
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '|' => {
                let mut s = String::from("|");
                chars.next();
                loop {
                    match chars.next() {
                        Some('|') => break,
                        Some(ch) => s.push(ch),
                        None => return Err("unterminated quoted symbol".into()),
                    }
                }
                s.push('|');
                out.push(s);
            }
            '"' => {
                let mut s = String::from("\"");
                chars.next();
                loop {
                    match chars.next() {
                        Some('"') if chars.peek() == Some(&'"') => {
                            chars.next();
                            s.push('"');
                        }
                        Some('"') => break,
                        Some(ch) => s.push(ch),
                        None => return Err("unterminated string".into()),
                    }
                }
                s.push('"');
                out.push(s);
            }
            _ => {
                let mut s = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_whitespace() || ch == '(' || ch == ')' {
                        break;
                    }
                    s.push(ch);
                    chars.next();
                }
                out.push(s);
            }
        }
    }
    Ok(out)
}

fn parse_tokens(toks: &[String], pos: &mut usize) -> Result<Sexp, String> {
    let t = toks.get(*pos).ok_or("unexpected end of s-expression")?;
    *pos += 1;
    match t.as_str() {
        "(" => {
            let mut xs = Vec::new();
            loop {
                match toks.get(*pos).map(String::as_str) {
                    Some(")") => {
                        *pos += 1;
                        return Ok(Sexp::List(xs));
                    }
                    Some(_) => xs.push(parse_tokens(toks, pos)?),
                    None => return Err("unbalanced parentheses".into()),
                }
            }
        }
        ")" => Err("unexpected `)`".into()),
        a => Ok(Sexp::Atom(a.to_string())),
    }
}

/// Paren depth change of a line, ignoring quoted symbols and strings.
fn depth_delta(line: &str) -> i64 {
    let mut d = 0;
    let mut quote: Option<char> = None;
    for c in line.chars() {
        match (quote, c) {
            (Some(q), c) if c == q => quote = None,
            (Some(_), _) => {}
            (None, '|') | (None, '"') => quote = Some(c),
            (None, '(') => d += 1,
            (None, ')') => d -= 1,
            _ => {}
        }
    }
    d
}

pub struct Solver {
    command: String,
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    queries: u64,
}

impl Solver {
    /// Starts `command` (split on whitespace) and sets the logic.
    pub fn spawn(command: &str, logic: &str, timeout: Option<Duration>) -> Result<Self, SolverError> {
        Self::spawn_with(command, logic, timeout, false)
    }

    /// [`Solver::spawn`] that can also answer [`Solver::unsat_core`].
    pub fn spawn_with_cores(command: &str, logic: &str, timeout: Option<Duration>) -> Result<Self, SolverError> {
        Self::spawn_with(command, logic, timeout, true)
    }

    fn spawn_with(command: &str, logic: &str, timeout: Option<Duration>, cores: bool) -> Result<Self, SolverError> {
        let mut parts = command.split_whitespace();
        let prog = parts.next().ok_or_else(|| SolverError::Spawn {
            command: command.to_string(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidInput, "empty command"),
        })?;
        let mut child = Command::new(prog)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|source| SolverError::Spawn { command: command.to_string(), source })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        let mut s = Solver { command: command.to_string(), child, stdin, stdout, queries: 0 };
        s.send("(set-option :print-success false)")?;
        if let Some(t) = timeout {
            s.send(&format!("(set-option :timeout {})", t.as_millis().max(1)))?;
        }
        if cores {
            s.send("(set-option :produce-unsat-cores true)")?;
        }
        s.send(&format!("(set-logic {logic})"))?;
        s.sync()?;
        Ok(s)
    }

    pub fn command(&self) -> &str {
        &self.command
    }

    /// Number of satisfiability queries answered so far.
    pub fn queries(&self) -> u64 {
        self.queries
    }

    fn send(&mut self, cmd: &str) -> Result<(), SolverError> {
        writeln!(self.stdin, "{cmd}")?;
        Ok(())
    }

    /// Waits until all earlier commands were processed, discarding any
    /// chatter (such as `unsupported`) they produced.
    fn sync(&mut self) -> Result<(), SolverError> {
        self.send("(echo \"sync\")")?;
        self.stdin.flush()?;
        loop {
            let line = self.read_line()?;
            if line.trim() == "sync" {
                return Ok(());
            }
        }
    }

    fn read_line(&mut self) -> Result<String, SolverError> {
        let mut line = String::new();
        if self.stdout.read_line(&mut line)? == 0 {
            return Err(SolverError::Eof);
        }
        Ok(line)
    }

    fn read_sexp(&mut self) -> Result<Sexp, SolverError> {
        let mut text = self.read_line()?;
        let mut depth = depth_delta(&text);
        while depth > 0 {
            let line = self.read_line()?;
            depth += depth_delta(&line);
            text.push_str(&line);
        }
        Sexp::parse(text.trim()).map_err(|_| SolverError::Unexpected(text.trim().to_string()))
    }

    /// Checks the conjunction of `asserts` under `decls`. When satisfiable
    /// and `values` is non-empty, also returns their values.
    pub fn query(
        &mut self,
        decls: &[(String, Sort)],
        asserts: &[String],
        values: &[String],
    ) -> Result<(Sat, Vec<Sexp>), SolverError> {
        self.queries += 1;
        let mut script = String::from("(push 1)\n");
        for (name, sort) in decls {
            script.push_str(&format!("(declare-const {name} {})\n", sort.smt()));
        }
        for a in asserts {
            script.push_str(&format!("(assert {a})\n"));
        }
        script.push_str("(check-sat)\n");
        self.stdin.write_all(script.as_bytes())?;
        self.stdin.flush()?;
        let reply = self.read_sexp()?;
        let sat = match &reply {
            Sexp::Atom(a) if a == "sat" => Sat::Sat,
            Sexp::Atom(a) if a == "unsat" => Sat::Unsat,
            Sexp::Atom(a) if a == "unknown" => {
                self.send("(pop 1)")?;
                return Err(SolverError::Unknown);
            }
            other => {
                let msg = format!("{other:?}");
                let _ = self.send("(pop 1)");
                return Err(SolverError::Unexpected(msg));
            }
        };
        let mut vals = Vec::new();
        if sat == Sat::Sat && !values.is_empty() {
            self.send(&format!("(get-value ({}))", values.join(" ")))?;
            self.stdin.flush()?;
            match self.read_sexp()? {
                Sexp::List(pairs) => {
                    for p in pairs {
                        match p {
                            Sexp::List(mut kv) if kv.len() == 2 => vals.push(kv.pop().unwrap()),
                            other => return Err(SolverError::Unexpected(format!("{other:?}"))),
                        }
                    }
                }
                other => return Err(SolverError::Unexpected(format!("{other:?}"))),
            }
        }
        self.send("(pop 1)")?;
        Ok((sat, vals))
    }

    /// Names of a subset of `named` whose conjunction is unsatisfiable, or
    /// `None` when the whole conjunction is satisfiable. Needs a solver from
    /// [`Solver::spawn_with_cores`].
    pub fn unsat_core(
        &mut self,
        decls: &[(String, Sort)],
        named: &[(String, String)],
    ) -> Result<Option<Vec<String>>, SolverError> {
        self.queries += 1;
        let mut script = String::from("(push 1)\n");
        for (name, sort) in decls {
            script.push_str(&format!("(declare-const {name} {})\n", sort.smt()));
        }
        for (name, a) in named {
            script.push_str(&format!("(assert (! {a} :named {name}))\n"));
        }
        script.push_str("(check-sat)\n");
        self.stdin.write_all(script.as_bytes())?;
        self.stdin.flush()?;
        let reply = self.read_sexp()?;
        let out = match &reply {
            Sexp::Atom(a) if a == "sat" => None,
            Sexp::Atom(a) if a == "unsat" => {
                self.send("(get-unsat-core)")?;
                self.stdin.flush()?;
                match self.read_sexp()? {
                    Sexp::List(xs) => Some(
                        xs.into_iter()
                            .map(|x| match x {
                                Sexp::Atom(a) => Ok(a),
                                other => Err(SolverError::Unexpected(format!("{other:?}"))),
                            })
                            .collect::<Result<Vec<_>, _>>()?,
                    ),
                    other => return Err(SolverError::Unexpected(format!("{other:?}"))),
                }
            }
            Sexp::Atom(a) if a == "unknown" => {
                self.send("(pop 1)")?;
                return Err(SolverError::Unknown);
            }
            other => {
                let msg = format!("{other:?}");
                let _ = self.send("(pop 1)");
                return Err(SolverError::Unexpected(msg));
            }
        };
        self.send("(pop 1)")?;
        Ok(out)
    }

    pub fn check(&mut self, decls: &[(String, Sort)], asserts: &[String]) -> Result<Sat, SolverError> {
        self.query(decls, asserts, &[]).map(|(s, _)| s)
    }
}

impl Drop for Solver {
    fn drop(&mut self) {
        let _ = writeln!(self.stdin, "(exit)");
        let _ = self.stdin.flush();
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_numerals() {
        let r = |s: &str| Sexp::parse(s).unwrap().to_rational().unwrap();
        assert_eq!(r("5"), Rational::int(5));
        assert_eq!(r("(- 5)"), Rational::int(-5));
        assert_eq!(r("(/ 1.0 2.0)"), Rational { num: 1, den: 2 });
        assert_eq!(r("(- (/ 3.0 6.0))"), Rational { num: -1, den: 2 });
        assert_eq!(r("2.5"), Rational { num: 5, den: 2 });
    }

    #[test]
    fn parses_nested_lists_and_quotes() {
        let s = Sexp::parse("((|x[0]| 3) (|y| (- 1)))").unwrap();
        let Sexp::List(xs) = s else { panic!() };
        assert_eq!(xs.len(), 2);
        assert_eq!(depth_delta("(|a(| (b"), 2);
    }

    #[test]
    fn talks_to_z3() {
        let mut s = Solver::spawn(DEFAULT_SOLVER, "QF_LIA", None).unwrap();
        let decls = vec![("|x|".to_string(), Sort::Int)];
        let (sat, vals) = s
            .query(&decls, &["(> |x| 4)".into(), "(< |x| 6)".into()], &["|x|".into()])
            .unwrap();
        assert_eq!(sat, Sat::Sat);
        assert_eq!(vals[0].to_rational(), Some(Rational::int(5)));
        assert_eq!(s.check(&decls, &["(> |x| 4)".into(), "(< |x| 5)".into()]).unwrap(), Sat::Unsat);
        assert_eq!(s.queries(), 2);
    }
}
