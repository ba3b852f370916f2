//! Proof checking: does some sleep-set reduction of `L(P)` lie inside
//! `L(Π)`?
//!
//! The check computes the inactive states of `M_PΠ`, the product of the
//! reduction automaton of `P` with the powerset automaton of `Π`. Only states
//! with `ι = ⊥` can be inactive, and inactivity is downward closed in the
//! sleep set, so each product cell `(q_P, q_Π)` stores an antichain of maximal
//! inactive sleep sets.
//!
//! Every antichain element ever produced is kept in an append-only arena.
//! An element was computed from elements that existed before it, so witnesses
//! recovered later from lower arena ids always form a finite tree.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::automata::{Dfa, StateId};
use crate::dependence::DependenceRel;
use crate::letters::{Letter, LetterSet};
use crate::lta::CounterexampleTree;
use crate::reduction::{OrderRel, OrderSource, MAX_LINEAR_LETTERS};

/// Pairwise `⊆`-incomparable sleep sets, kept sorted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Antichain {
    elems: Vec<LetterSet>,
}

impl Antichain {
    pub fn new() -> Self {
        Antichain { elems: Vec::new() }
    }

    /// `{Σ}`.
    pub fn top(n: usize) -> Self {
        Antichain::singleton(LetterSet::full(n))
    }

    pub fn singleton(s: LetterSet) -> Self {
        Antichain { elems: vec![s] }
    }

    /// Adds `s` unless it is covered, dropping elements it covers.
    pub fn insert(&mut self, s: LetterSet) -> bool {
        if self.covers(s) {
            return false;
        }
        self.elems.retain(|e| !e.is_subset(s));
        let pos = self.elems.binary_search(&s).unwrap_or_else(|p| p);
        self.elems.insert(pos, s);
        true
    }

    /// `s ∈ ⌊X⌋`.
    pub fn covers(&self, s: LetterSet) -> bool {
        self.elems.iter().any(|e| s.is_subset(*e))
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = LetterSet> + '_ {
        self.elems.iter().copied()
    }

    pub fn as_slice(&self) -> &[LetterSet] {
        &self.elems
    }

    /// `max(X ∪ Y)`.
    pub fn join(&self, other: &Antichain) -> Antichain {
        let mut out = self.clone();
        for s in other.iter() {
            out.insert(s);
        }
        out
    }

    /// `max{x ∩ y | x ∈ X, y ∈ Y}`.
    pub fn meet(&self, other: &Antichain) -> Antichain {
        let mut out = Antichain::new();
        for x in self.iter() {
            for y in other.iter() {
                out.insert(x.intersection(y));
            }
        }
        out
    }

    pub fn is_antichain(&self) -> bool {
        self.elems.iter().enumerate().all(|(i, x)| {
            self.elems
                .iter()
                .enumerate()
                .all(|(j, y)| i == j || !x.is_subset(*y))
        })
    }
}

impl FromIterator<LetterSet> for Antichain {
    fn from_iter<I: IntoIterator<Item = LetterSet>>(iter: I) -> Self {
        let mut a = Antichain::new();
        for s in iter {
            a.insert(s);
        }
        a
    }
}

pub fn ac_join(x: &Antichain, y: &Antichain) -> Antichain {
    x.join(y)
}

pub fn ac_meet(x: &Antichain, y: &Antichain) -> Antichain {
    x.meet(y)
}

/// Counters exported with the verification statistics.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckStats {
    /// Reachable product cells.
    pub cells: usize,
    /// Cell recomputations.
    pub evaluations: u64,
    pub meets: u64,
    pub joins: u64,
    pub peak_width: usize,
    /// Table entries ever created.
    pub entries: usize,
}

struct Counter<'s>(&'s mut CheckStats);

impl Counter<'_> {
    fn meet(&mut self, x: &Antichain, y: &Antichain) -> Antichain {
        self.0.meets += 1;
        x.meet(y)
    }

    fn join_into(&mut self, acc: &mut Antichain, y: &Antichain) {
        self.0.joins += 1;
        for s in y.iter() {
            acc.insert(s);
        }
    }
}

/// `max{(T ∪ D(a)) \ {a} | T ∈ X_a, R(a) \ D(a) ⊆ T}`: the sleep sets at
/// the current cell for which `a` is a witness under `R(a) = before`.
fn contribution(a: Letter, before: LetterSet, xa: &Antichain, d: &DependenceRel) -> Antichain {
    let da = d.row(a);
    let need = before.difference(da);
    xa.iter()
        .filter(|t| need.is_subset(*t))
        .map(|t| t.union(da).without(a))
        .collect()
}

/// One application of `F_max` at a cell that is not accepting-unproved,
/// given the antichains `succ[a]` of its successor cells.
///
/// Letters with empty successor antichains never witness anything, and an
/// adversarial order places them before all others. So the meet is taken
/// over orders of the remaining letters only, with the others in front.
pub fn fmax_from_successors(
    succ: &[Antichain],
    d: &DependenceRel,
    orders: OrderSource,
    stats: &mut CheckStats,
) -> Antichain {
    let n = succ.len();
    let live: LetterSet = (0..n as Letter).filter(|&a| !succ[a as usize].is_empty()).collect();
    if live.is_empty() {
        return Antichain::new();
    }
    let mut ctr = Counter(stats);
    match orders {
        OrderSource::Partition => partition_fmax(succ, d, live, &mut ctr),
        OrderSource::Linear => {
            let front = LetterSet::full(n).difference(live);
            let mut memo = BTreeMap::new();
            linear_fmax(succ, d, live, front, LetterSet::EMPTY, &mut memo, &mut ctr)
        }
    }
}

/// Linear family. Over downward-closed sets the meet distributes over the
/// join, so the meet over all orders of `live` unfolds as a recursion on the
/// set of letters already placed.
fn linear_fmax(
    succ: &[Antichain],
    d: &DependenceRel,
    live: LetterSet,
    front: LetterSet,
    placed: LetterSet,
    memo: &mut BTreeMap<LetterSet, Antichain>,
    ctr: &mut Counter<'_>,
) -> Antichain {
    if placed == live {
        return Antichain::new();
    }
    if let Some(x) = memo.get(&placed) {
        return x.clone();
    }
    let before = front.union(placed);
    let mut acc: Option<Antichain> = None;
    for a in live.difference(placed) {
        let mut v = contribution(a, before, &succ[a as usize], d);
        let rest = linear_fmax(succ, d, live, front, placed.with(a), memo, ctr);
        ctr.join_into(&mut v, &rest);
        let next = match acc {
            None => v,
            Some(x) => ctr.meet(&x, &v),
        };
        let empty = next.is_empty();
        acc = Some(next);
        if empty {
            break;
        }
    }
    let out = acc.unwrap_or_default();
    memo.insert(placed, out.clone());
    out
}

/// Partition family. `S` survives every split iff some letter `a` and
/// `T ∈ X_a` witness it under the split that puts every letter able to
/// witness with `R = ∅` into `Σ1`. Spelled out, every letter outside
/// `T ∪ D(a)` must itself witness `S` with `R = ∅`.
fn partition_fmax(
    succ: &[Antichain],
    d: &DependenceRel,
    live: LetterSet,
    ctr: &mut Counter<'_>,
) -> Antichain {
    let n = succ.len();
    let full = LetterSet::full(n);
    let mut solo: Vec<Option<Antichain>> = vec![None; n];
    let mut out = Antichain::new();
    for a in live {
        let da = d.row(a);
        for t in succ[a as usize].iter() {
            let cover = t.union(da);
            let others = full.difference(cover);
            if !others.is_subset(live) {
                continue;
            }
            let mut acc = Antichain::singleton(cover.without(a));
            for b in others {
                let yb = solo[b as usize]
                    .get_or_insert_with(|| contribution(b, LetterSet::EMPTY, &succ[b as usize], d));
                acc = ctr.meet(&acc, yb);
                if acc.is_empty() {
                    break;
                }
            }
            ctr.join_into(&mut out, &acc);
        }
    }
    out
}

/// `F_max` over an explicitly given family of orders, straight from the
/// definition. Slow; meant for cross-checking.
pub fn fmax_literal(succ: &[Antichain], d: &DependenceRel, family: &[OrderRel]) -> Antichain {
    let n = succ.len();
    let mut acc: Option<Antichain> = None;
    for r in family {
        let mut j = Antichain::new();
        for a in 0..n as Letter {
            for s in contribution(a, r.before(a), &succ[a as usize], d).iter() {
                j.insert(s);
            }
        }
        acc = Some(match acc {
            None => j,
            Some(x) => x.meet(&j),
        });
    }
    acc.unwrap_or_else(|| Antichain::top(n))
}

/// `F_max(X)(q_P, q_Π)` for a table given as a map.
pub fn fmax_step(
    p: &Dfa,
    pi: &Dfa,
    table: &BTreeMap<(StateId, StateId), Antichain>,
    q_p: StateId,
    q_pi: StateId,
    d: &DependenceRel,
    orders: OrderSource,
) -> Antichain {
    let n = p.alphabet_len();
    if p.is_final(q_p) && !pi.is_final(q_pi) {
        return Antichain::top(n);
    }
    let succ: Vec<Antichain> = (0..n as Letter)
        .map(|a| {
            table
                .get(&(p.step(q_p, a), pi.step(q_pi, a)))
                .cloned()
                .unwrap_or_default()
        })
        .collect();
    fmax_from_successors(&succ, d, orders, &mut CheckStats::default())
}

/// Letters witnessing that sleep set `s` is inactive, with their successor
/// entries, under every order of the linear family.
///
/// `find(a, U)` returns an inactive successor entry covering `(a's cell, U)`.
/// An adversary builds an order by repeatedly placing letters that fail
/// given the letters already placed; the letters it cannot place are
/// exactly those that witness for some order. Each is recorded with the
/// successor for its worst-case predecessor set, which covers every other.
pub fn linear_witnesses<K>(
    n: usize,
    s: LetterSet,
    d: &DependenceRel,
    mut find: impl FnMut(Letter, LetterSet) -> Option<K>,
) -> Option<Vec<(Letter, K)>> {
    let mut failed = LetterSet::EMPTY;
    loop {
        let mut changed = false;
        for a in LetterSet::full(n).difference(failed) {
            if s.contains(a) || find(a, s.union(failed).difference(d.row(a))).is_none() {
                failed.insert(a);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let rest = LetterSet::full(n).difference(failed);
    if rest.is_empty() {
        return None;
    }
    Some(
        rest.iter()
            .map(|a| (a, find(a, s.union(failed).difference(d.row(a))).expect("witness")))
            .collect(),
    )
}

/// Partition-family counterpart of [`linear_witnesses`].
///
/// A split with some `R = ∅` witness in `Σ2` uses the lowest one; every other
/// split is handled by the witness for the split with the largest possible
/// `Σ2`.
pub fn partition_witnesses<K>(
    n: usize,
    s: LetterSet,
    d: &DependenceRel,
    mut find: impl FnMut(Letter, LetterSet) -> Option<K>,
) -> Option<Vec<(Letter, K)>> {
    let mut out = Vec::new();
    let mut solo = LetterSet::EMPTY;
    for a in LetterSet::full(n).difference(s) {
        if let Some(t) = find(a, s.difference(d.row(a))) {
            solo.insert(a);
            out.push((a, t));
        }
    }
    let rest = LetterSet::full(n).difference(solo);
    let star = solo
        .iter()
        .find_map(|a| find(a, s.union(rest).difference(d.row(a))).map(|t| (a, t)))?;
    out.push(star);
    Some(out)
}

/// How inactive sleep sets are represented.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Engine {
    /// Maximal elements only.
    Antichain,
    /// Every inactive sleep set, evaluated one by one.
    Explicit,
}

/// Largest alphabet accepted by [`Engine::Explicit`].
pub const MAX_EXPLICIT_LETTERS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckConfig {
    pub orders: OrderSource,
    pub engine: Engine,
    /// Abort after this many cell evaluations.
    pub max_evaluations: Option<u64>,
}

impl CheckConfig {
    pub fn new(orders: OrderSource) -> Self {
        CheckConfig {
            orders,
            engine: Engine::Antichain,
            max_evaluations: None,
        }
    }

    pub fn engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CheckError {
    AlphabetMismatch { program: usize, proof: usize, dependence: usize },
    TooManyLetters { letters: usize, max: usize },
    Interrupted,
}

impl fmt::Display for CheckError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckError::AlphabetMismatch { program, proof, dependence } => write!(
                f,
                "alphabet sizes differ: program {program}, proof {proof}, dependence {dependence}"
            ),
            CheckError::TooManyLetters { letters, max } => {
                write!(f, "{letters} letters exceed the limit of {max} for this configuration")
            }
            CheckError::Interrupted => f.write_str("proof check interrupted"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Verdict {
    /// Some reduction of the program is contained in the proof language.
    Covered,
    NotCovered,
}

const DEAD: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct Cell {
    q_p: StateId,
    q_pi: StateId,
    leaf: bool,
    succ: Vec<u32>,
    preds: Vec<u32>,
}

#[derive(Clone, Copy, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Entry {
    pub cell: u32,
    pub sleep: LetterSet,
}

/// Identifies an inactive sleep set together with the moment it was
/// derived. Keys order by `order` first: an entry id for the antichain
/// engine, a batch number for the explicit one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NodeKey {
    pub order: u32,
    pub cell: u32,
    pub sleep: LetterSet,
}

/// Bitset over all sleep sets of a cell, one bit per subset of `Σ`.
#[derive(Clone, Debug, Default)]
struct SetBits(Vec<u64>);

impl SetBits {
    fn new(n: usize) -> Self {
        SetBits(vec![0; (1usize << n).div_ceil(64)])
    }

    fn full(n: usize) -> Self {
        let mut b = SetBits::new(n);
        for i in 0..1usize << n {
            b.set(i);
        }
        b
    }

    fn get(&self, i: usize) -> bool {
        self.0.get(i / 64).is_some_and(|w| w >> (i % 64) & 1 == 1)
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(k, &w)| {
            (0..64).filter(move |j| w >> j & 1 == 1).map(move |j| k * 64 + j)
        })
    }
}

/// Explicit engine storage for one cell: all inactive sleep sets, plus the
/// batch in which each was derived.
#[derive(Clone, Debug, Default)]
struct ExplicitCell {
    all: SetBits,
    batches: Vec<(u32, SetBits)>,
}

/// Everything the fixpoint learned: cells, their inactive sleep sets and the
/// append-only entry arena from which witnesses are recovered.
#[derive(Clone, Debug)]
pub struct WitnessTable {
    n: usize,
    d: DependenceRel,
    orders: OrderSource,
    engine: Engine,
    cells: Vec<Cell>,
    index: BTreeMap<(StateId, StateId), u32>,
    entries: Vec<Entry>,
    /// Antichain engine: entry ids per cell in creation order.
    history: Vec<Vec<u32>>,
    /// Antichain engine: current maximal elements.
    current: Vec<Antichain>,
    /// Explicit engine: every inactive sleep set per cell.
    explicit: Vec<ExplicitCell>,
    batch: u32,
}

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub verdict: Verdict,
    pub stats: CheckStats,
    pub table: WitnessTable,
}

impl CheckOutcome {
    /// The counterexample tree when the check failed.
    pub fn counterexample_tree(&self) -> Option<CounterexampleTree> {
        match self.verdict {
            Verdict::Covered => None,
            Verdict::NotCovered => self.table.counterexample_tree(),
        }
    }
}

pub fn check(
    p: &Dfa,
    pi: &Dfa,
    d: &DependenceRel,
    cfg: CheckConfig,
) -> Result<CheckOutcome, CheckError> {
    check_interruptible(p, pi, d, cfg, &mut || false)
}

/// [`check`] that polls `interrupt` between cell evaluations.
pub fn check_interruptible(
    p: &Dfa,
    pi: &Dfa,
    d: &DependenceRel,
    cfg: CheckConfig,
    interrupt: &mut dyn FnMut() -> bool,
) -> Result<CheckOutcome, CheckError> {
    let n = p.alphabet_len();
    if pi.alphabet_len() != n || d.alphabet_len() != n {
        return Err(CheckError::AlphabetMismatch {
            program: n,
            proof: pi.alphabet_len(),
            dependence: d.alphabet_len(),
        });
    }
    if cfg.orders == OrderSource::Linear && n > MAX_LINEAR_LETTERS {
        return Err(CheckError::TooManyLetters { letters: n, max: MAX_LINEAR_LETTERS });
    }
    if cfg.engine == Engine::Explicit && n > MAX_EXPLICIT_LETTERS {
        return Err(CheckError::TooManyLetters { letters: n, max: MAX_EXPLICIT_LETTERS });
    }
    let mut table = WitnessTable::explore(p, pi, d, cfg);
    let mut stats = CheckStats {
        cells: table.cells.len(),
        ..CheckStats::default()
    };
    let verdict = table.solve(cfg, &mut stats, interrupt)?;
    stats.entries = table.num_entries();
    Ok(CheckOutcome { verdict, stats, table })
}

impl WitnessTable {
    fn explore(p: &Dfa, pi: &Dfa, d: &DependenceRel, cfg: CheckConfig) -> Self {
        let n = p.alphabet_len();
        let live = p.live_states();
        let mut t = WitnessTable {
            n,
            d: d.clone(),
            orders: cfg.orders,
            engine: cfg.engine,
            cells: Vec::new(),
            index: BTreeMap::new(),
            entries: Vec::new(),
            history: Vec::new(),
            current: Vec::new(),
            explicit: Vec::new(),
            batch: 0,
        };
        if !live[p.initial() as usize] {
            return t;
        }
        let start = (p.initial(), pi.initial());
        t.add_cell(p, pi, start);
        let mut queue = VecDeque::from([0u32]);
        while let Some(c) = queue.pop_front() {
            let (q_p, q_pi) = (t.cells[c as usize].q_p, t.cells[c as usize].q_pi);
            let mut succ = Vec::with_capacity(n);
            for a in 0..n as Letter {
                let np = p.step(q_p, a);
                if !live[np as usize] {
                    succ.push(DEAD);
                    continue;
                }
                let key = (np, pi.step(q_pi, a));
                let id = match t.index.get(&key) {
                    Some(&id) => id,
                    None => {
                        let id = t.add_cell(p, pi, key);
                        queue.push_back(id);
                        id
                    }
                };
                let preds = &mut t.cells[id as usize].preds;
                if preds.last() != Some(&c) {
                    preds.push(c);
                }
                succ.push(id);
            }
            t.cells[c as usize].succ = succ;
        }
        t
    }

    fn add_cell(&mut self, p: &Dfa, pi: &Dfa, (q_p, q_pi): (StateId, StateId)) -> u32 {
        let id = self.cells.len() as u32;
        self.cells.push(Cell {
            q_p,
            q_pi,
            leaf: p.is_final(q_p) && !pi.is_final(q_pi),
            succ: Vec::new(),
            preds: Vec::new(),
        });
        self.index.insert((q_p, q_pi), id);
        self.history.push(Vec::new());
        self.current.push(Antichain::new());
        self.explicit.push(ExplicitCell::default());
        id
    }

    fn add_entry(&mut self, cell: u32, sleep: LetterSet) -> u32 {
        let id = self.entries.len() as u32;
        self.entries.push(Entry { cell, sleep });
        self.history[cell as usize].push(id);
        id
    }

    fn add_batch(&mut self, cell: u32, bits: SetBits) {
        let ec = &mut self.explicit[cell as usize];
        if ec.all.0.is_empty() {
            ec.all = SetBits::new(self.n);
        }
        for (w, b) in ec.all.0.iter_mut().zip(&bits.0) {
            *w |= b;
        }
        ec.batches.push((self.batch, bits));
        self.batch += 1;
    }

    fn root_inactive(&self) -> bool {
        !self.cells.is_empty() && self.cell_covers(0, LetterSet::EMPTY)
    }

    fn cell_covers(&self, cell: u32, s: LetterSet) -> bool {
        match self.engine {
            Engine::Antichain => self.current[cell as usize].covers(s),
            Engine::Explicit => self.explicit[cell as usize].all.get(s.bits() as usize),
        }
    }

    fn solve(
        &mut self,
        cfg: CheckConfig,
        stats: &mut CheckStats,
        interrupt: &mut dyn FnMut() -> bool,
    ) -> Result<Verdict, CheckError> {
        let mut queue: VecDeque<u32> = VecDeque::new();
        let mut queued = vec![false; self.cells.len()];
        let full = LetterSet::full(self.n);
        self.batch = 1;
        for c in 0..self.cells.len() as u32 {
            if !self.cells[c as usize].leaf {
                continue;
            }
            match self.engine {
                Engine::Antichain => {
                    self.add_entry(c, full);
                    self.current[c as usize] = Antichain::top(self.n);
                }
                Engine::Explicit => self.add_batch(c, SetBits::full(self.n)),
            }
            stats.peak_width = stats.peak_width.max(1);
            for &pr in &self.cells[c as usize].preds {
                if !queued[pr as usize] && !self.cells[pr as usize].leaf {
                    queued[pr as usize] = true;
                    queue.push_back(pr);
                }
            }
        }
        while !self.root_inactive() {
            let Some(c) = queue.pop_front() else { break };
            queued[c as usize] = false;
            stats.evaluations += 1;
            if cfg.max_evaluations.is_some_and(|m| stats.evaluations > m) || interrupt() {
                return Err(CheckError::Interrupted);
            }
            let changed = match self.engine {
                Engine::Antichain => self.update_antichain(c, stats),
                Engine::Explicit => self.update_explicit(c, stats),
            };
            if changed {
                for i in 0..self.cells[c as usize].preds.len() {
                    let pr = self.cells[c as usize].preds[i];
                    if !queued[pr as usize] {
                        queued[pr as usize] = true;
                        queue.push_back(pr);
                    }
                }
            }
        }
        Ok(if self.root_inactive() {
            Verdict::NotCovered
        } else {
            Verdict::Covered
        })
    }

    fn successor_antichains(&self, c: u32) -> Vec<Antichain> {
        self.cells[c as usize]
            .succ
            .iter()
            .map(|&s| {
                if s == DEAD {
                    Antichain::new()
                } else {
                    self.current[s as usize].clone()
                }
            })
            .collect()
    }

    fn update_antichain(&mut self, c: u32, stats: &mut CheckStats) -> bool {
        let succ = self.successor_antichains(c);
        let new = fmax_from_successors(&succ, &self.d, self.orders, stats);
        let fresh: Vec<LetterSet> = new
            .iter()
            .filter(|&s| !self.current[c as usize].covers(s))
            .collect();
        if fresh.is_empty() {
            return false;
        }
        for s in fresh {
            self.add_entry(c, s);
            self.current[c as usize].insert(s);
        }
        stats.peak_width = stats.peak_width.max(self.current[c as usize].len());
        true
    }

    fn update_explicit(&mut self, c: u32, stats: &mut CheckStats) -> bool {
        let mut fresh = SetBits::new(self.n);
        let mut any = false;
        let cell = &self.cells[c as usize];
        let known = &self.explicit[c as usize].all;
        for i in 0..1usize << self.n {
            if known.get(i) {
                continue;
            }
            let s = LetterSet::from_bits(i as u128);
            let find = |a: Letter, u: LetterSet| {
                let t = cell.succ[a as usize];
                (t != DEAD && self.explicit[t as usize].all.get(u.bits() as usize)).then_some(())
            };
            let good = match self.orders {
                OrderSource::Linear => linear_witnesses(self.n, s, &self.d, find).is_some(),
                OrderSource::Partition => partition_witnesses(self.n, s, &self.d, find).is_some(),
            };
            if good {
                fresh.set(i);
                any = true;
            }
        }
        if !any {
            return false;
        }
        self.add_batch(c, fresh);
        stats.peak_width = stats.peak_width.max(self.explicit[c as usize].all.count());
        true
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Antichain engine: every element ever added, in creation order.
    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Number of inactive sleep sets recorded.
    pub fn num_entries(&self) -> usize {
        match self.engine {
            Engine::Antichain => self.entries.len(),
            Engine::Explicit => self.explicit.iter().map(|e| e.all.count()).sum(),
        }
    }

    /// The product cell `(q_P, q_Π)` of a table entry.
    pub fn cell_states(&self, cell: u32) -> (StateId, StateId) {
        let c = &self.cells[cell as usize];
        (c.q_p, c.q_pi)
    }

    /// Maximal inactive sleep sets known at a cell.
    pub fn antichain_at(&self, q_p: StateId, q_pi: StateId) -> Antichain {
        let Some(&c) = self.index.get(&(q_p, q_pi)) else {
            return Antichain::new();
        };
        match self.engine {
            Engine::Antichain => self.current[c as usize].clone(),
            Engine::Explicit => self.explicit[c as usize]
                .all
                .ones()
                .map(|i| LetterSet::from_bits(i as u128))
                .collect(),
        }
    }

    /// A recorded set at `cell` covering `u` that is older than `bound`.
    fn find_before(&self, cell: u32, u: LetterSet, bound: u32) -> Option<NodeKey> {
        match self.engine {
            Engine::Antichain => self.history[cell as usize]
                .iter()
                .take_while(|&&id| id < bound)
                .copied()
                .find(|&id| u.is_subset(self.entries[id as usize].sleep))
                .map(|id| NodeKey { order: id, cell, sleep: self.entries[id as usize].sleep }),
            Engine::Explicit => self.explicit[cell as usize]
                .batches
                .iter()
                .take_while(|(b, _)| *b < bound)
                .find(|(_, bits)| bits.get(u.bits() as usize))
                .map(|&(order, _)| NodeKey { order, cell, sleep: u }),
        }
    }

    /// Witness children of a recorded inactive set: letters and successor
    /// keys, all strictly older than `key`.
    pub fn children(&self, key: NodeKey) -> Vec<(Letter, NodeKey)> {
        let cell = &self.cells[key.cell as usize];
        if cell.leaf {
            return Vec::new();
        }
        let find = |a: Letter, u: LetterSet| {
            let t = cell.succ[a as usize];
            if t == DEAD {
                None
            } else {
                self.find_before(t, u, key.order)
            }
        };
        let w = match self.orders {
            OrderSource::Linear => linear_witnesses(self.n, key.sleep, &self.d, find),
            OrderSource::Partition => partition_witnesses(self.n, key.sleep, &self.d, find),
        };
        w.expect("every recorded set is justified by older ones")
    }

    /// Key for the initial state `((q0_P, ⊥, ∅), q0_Π)`, if inactive.
    pub fn root_key(&self) -> Option<NodeKey> {
        if self.cells.is_empty() {
            return None;
        }
        self.find_before(0, LetterSet::EMPTY, u32::MAX)
    }

    /// The tree of witnesses below the root. Leaves sit at cells with
    /// `q_P ∈ F_P` and `q_Π ∉ F_Π`. Node states are cell ids.
    pub fn counterexample_tree(&self) -> Option<CounterexampleTree> {
        let root = self.root_key()?;
        Some(CounterexampleTree::build(
            root,
            |k| self.children(k),
            |k| (k.cell, k.sleep),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::first_difference_trace;

    fn ac(sets: &[&[Letter]]) -> Antichain {
        sets.iter().map(|s| s.iter().copied().collect::<LetterSet>()).collect()
    }

    #[test]
    fn join_examples() {
        assert_eq!(ac(&[&[0], &[1]]).join(&ac(&[&[0, 1]])), ac(&[&[0, 1]]));
        let x = ac(&[&[0], &[2, 1]]);
        assert_eq!(x.join(&Antichain::new()), x);
    }

    #[test]
    fn meet_examples() {
        assert_eq!(ac(&[&[0, 1]]).meet(&ac(&[&[1, 2]])), ac(&[&[1]]));
        let x = ac(&[&[0], &[2, 1]]);
        assert_eq!(x.meet(&Antichain::top(3)), x);
    }

    #[test]
    fn insert_keeps_antichain() {
        let mut x = ac(&[&[0], &[1]]);
        assert!(!x.insert(LetterSet::EMPTY));
        assert!(x.insert([0, 1].into_iter().collect()));
        assert_eq!(x.len(), 1);
        assert!(x.is_antichain());
    }

    #[test]
    fn accepting_unproved_cell_is_top() {
        let p = Dfa::epsilon(2);
        let pi = Dfa::empty(2);
        let d = DependenceRel::identity(2);
        let t = fmax_step(&p, &pi, &BTreeMap::new(), p.initial(), pi.initial(), &d, OrderSource::Linear);
        assert_eq!(t, Antichain::top(2));
    }

    #[test]
    fn empty_successors_give_empty() {
        let succ = vec![Antichain::new(); 3];
        let d = DependenceRel::identity(3);
        for o in [OrderSource::Linear, OrderSource::Partition] {
            assert!(fmax_from_successors(&succ, &d, o, &mut CheckStats::default()).is_empty());
        }
    }

    #[test]
    fn two_independent_letters_into_leaves() {
        let succ = vec![Antichain::top(2), Antichain::top(2)];
        let d = DependenceRel::identity(2);
        let expect = ac(&[&[0], &[1]]);
        for o in [OrderSource::Linear, OrderSource::Partition] {
            let fam = o.family(2).unwrap();
            assert_eq!(fmax_literal(&succ, &d, &fam), expect);
            assert_eq!(fmax_from_successors(&succ, &d, o, &mut CheckStats::default()), expect);
        }
    }

    #[test]
    fn unproved_trace_is_not_covered() {
        let p = Dfa::word(2, &[0, 1]);
        let pi = Dfa::empty(2);
        let d = DependenceRel::total(2);
        for engine in [Engine::Antichain, Engine::Explicit] {
            let out = check(&p, &pi, &d, CheckConfig::new(OrderSource::Linear).engine(engine)).unwrap();
            assert_eq!(out.verdict, Verdict::NotCovered);
            let tree = out.counterexample_tree().unwrap();
            assert_eq!(tree.leaf_strings(10), vec![vec![0, 1]]);
        }
    }

    #[test]
    fn proved_program_is_covered() {
        // Every word contains letter 1, and the proof accepts exactly those.
        let p = Dfa::from_words(2, [&[0, 1][..], &[1][..]]);
        let mut pi = Dfa::new(2, 2);
        pi.set(0, 0, 0);
        pi.set(0, 1, 1);
        pi.set(1, 0, 1);
        pi.set(1, 1, 1);
        pi.set_final(1, true);
        let d = DependenceRel::total(2);
        assert!(first_difference_trace(&p, &pi).is_none());
        for engine in [Engine::Antichain, Engine::Explicit] {
            for o in [OrderSource::Linear, OrderSource::Partition] {
                let out = check(&p, &pi, &d, CheckConfig::new(o).engine(engine)).unwrap();
                assert_eq!(out.verdict, Verdict::Covered);
            }
        }
    }

    #[test]
    fn commuting_program_needs_one_interleaving() {
        // P = {ab, ba} with a, b independent; Π proves only ab.
        let p = Dfa::from_words(2, [&[0, 1][..], &[1, 0][..]]);
        let pi = Dfa::word(2, &[0, 1]);
        let d = DependenceRel::identity(2);
        let out = check(&p, &pi, &d, CheckConfig::new(OrderSource::Linear)).unwrap();
        assert_eq!(out.verdict, Verdict::Covered);
        let dep = DependenceRel::total(2);
        let out = check(&p, &pi, &dep, CheckConfig::new(OrderSource::Linear)).unwrap();
        assert_eq!(out.verdict, Verdict::NotCovered);
        assert_eq!(out.counterexample_tree().unwrap().leaf_strings(10), vec![vec![1, 0]]);
    }

    #[test]
    fn linear_refuses_large_alphabets() {
        let p = Dfa::empty(9);
        let d = DependenceRel::identity(9);
        assert!(matches!(
            check(&p, &p, &d, CheckConfig::new(OrderSource::Linear)),
            Err(CheckError::TooManyLetters { .. })
        ));
    }
}
