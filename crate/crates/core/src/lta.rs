//! Looping tree automata over the statement alphabet.
//!
//! A language `L ⊆ Σ*` is read as the infinite `Σ`-branching tree whose node
//! `x` carries the bit `x ∈ L`. A run labels every node with a state; at node
//! `x` in state `q` it uses a transition `(q, B, σ)` with `B = [x ∈ L]` and
//! sends child `xa` to `σ(a)`. Every run is accepting, so a language is
//! accepted iff a run exists at all.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;

use crate::automata::{AutomataError, Dfa, StateId};
use crate::letters::{Letter, LetterSet};

/// One transition `(q, B, σ)`; `succ[a] = σ(a)`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LtaTransition {
    pub state: StateId,
    pub label: bool,
    pub succ: Vec<StateId>,
}

#[derive(Clone, Debug, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Lta {
    alphabet: usize,
    initial: StateId,
    transitions: Vec<LtaTransition>,
    by_state: Vec<Vec<usize>>,
}

impl Lta {
    /// An automaton with `states` states and no transitions.
    pub fn new(alphabet: usize, states: usize) -> Self {
        Lta {
            alphabet,
            initial: 0,
            transitions: Vec::new(),
            by_state: vec![Vec::new(); states.max(1)],
        }
    }

    /// Accepts every language: one state, both labels, looping.
    pub fn all(alphabet: usize) -> Self {
        let mut m = Lta::new(alphabet, 1);
        m.add_transition(0, false, vec![0; alphabet]);
        m.add_transition(0, true, vec![0; alphabet]);
        m
    }

    /// Accepts nothing.
    pub fn none(alphabet: usize) -> Self {
        Lta::new(alphabet, 1)
    }

    pub fn alphabet_len(&self) -> usize {
        self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.by_state.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn set_initial(&mut self, q: StateId) {
        self.initial = q;
    }

    pub fn add_state(&mut self) -> StateId {
        self.by_state.push(Vec::new());
        (self.by_state.len() - 1) as StateId
    }

    /// Adds `(q, label, succ)` unless an identical transition exists.
    /// Returns whether it was new.
    pub fn add_transition(&mut self, q: StateId, label: bool, succ: Vec<StateId>) -> bool {
        assert_eq!(succ.len(), self.alphabet, "successor map must be total");
        let t = LtaTransition { state: q, label, succ };
        if self.by_state[q as usize]
            .iter()
            .any(|&i| self.transitions[i] == t)
        {
            return false;
        }
        self.by_state[q as usize].push(self.transitions.len());
        self.transitions.push(t);
        true
    }

    pub fn transitions(&self) -> &[LtaTransition] {
        &self.transitions
    }

    pub fn transitions_of(&self, q: StateId) -> impl Iterator<Item = &LtaTransition> + '_ {
        self.by_state[q as usize].iter().map(|&i| &self.transitions[i])
    }

    fn transition_ids(&self, q: StateId) -> &[usize] {
        &self.by_state[q as usize]
    }
}

/// Product automaton; transitions pair up when their labels agree.
/// Only the part reachable from the initial pair is built.
pub fn lta_intersect(m1: &Lta, m2: &Lta) -> Result<Lta, AutomataError> {
    if m1.alphabet != m2.alphabet {
        return Err(AutomataError::AlphabetMismatch {
            left: m1.alphabet,
            right: m2.alphabet,
        });
    }
    let n = m1.alphabet;
    let mut ids: BTreeMap<(StateId, StateId), StateId> = BTreeMap::new();
    let mut out = Lta::new(n, 1);
    let start = (m1.initial, m2.initial);
    ids.insert(start, 0);
    let mut queue = VecDeque::from([start]);
    while let Some((p, q)) = queue.pop_front() {
        let id = ids[&(p, q)];
        for t1 in m1.transitions_of(p) {
            for t2 in m2.transitions_of(q).filter(|t2| t2.label == t1.label) {
                let mut succ = Vec::with_capacity(n);
                for a in 0..n {
                    let key = (t1.succ[a], t2.succ[a]);
                    let s = match ids.get(&key) {
                        Some(&s) => s,
                        None => {
                            let s = out.add_state();
                            ids.insert(key, s);
                            queue.push_back(key);
                            s
                        }
                    };
                    succ.push(s);
                }
                out.add_transition(id, t1.label, succ);
            }
        }
    }
    Ok(out)
}

fn dfa_successors(l: &Dfa, q: StateId) -> Vec<StateId> {
    (0..l.alphabet_len() as Letter).map(|a| l.step(q, a)).collect()
}

/// Accepts `{ P | P ⊆ L(l) }`.
pub fn lta_powerset(l: &Dfa) -> Lta {
    let mut m = Lta::new(l.alphabet_len(), l.num_states());
    m.set_initial(l.initial());
    for q in 0..l.num_states() as StateId {
        let succ = dfa_successors(l, q);
        if l.is_final(q) {
            m.add_transition(q, true, succ.clone());
        }
        m.add_transition(q, false, succ);
    }
    m
}

/// Accepts exactly `{ L(p) }`.
pub fn lta_singleton(p: &Dfa) -> Lta {
    let mut m = Lta::new(p.alphabet_len(), p.num_states());
    m.set_initial(p.initial());
    for q in 0..p.num_states() as StateId {
        m.add_transition(q, p.is_final(q), dfa_successors(p, q));
    }
    m
}

/// The least fixpoint of `F_M(X) = { q | ∀(q,B,σ) ∈ Δ. ∃a. σ(a) ∈ X }`.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InactiveSet {
    /// Position of each inactive state in derivation order.
    rank: Vec<Option<u32>>,
    /// Per transition (indexed like [`Lta::transitions`]): the letter leading
    /// to an earlier-derived inactive state.
    witness: Vec<Option<Letter>>,
}

impl InactiveSet {
    pub fn contains(&self, q: StateId) -> bool {
        self.rank[q as usize].is_some()
    }

    pub fn rank(&self, q: StateId) -> Option<u32> {
        self.rank[q as usize]
    }

    pub fn witness(&self, transition: usize) -> Option<Letter> {
        self.witness[transition]
    }

    pub fn len(&self) -> usize {
        self.rank.iter().filter(|r| r.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.rank.len() as StateId).filter(|&q| self.contains(q))
    }
}

/// Worklist computation of the inactive states.
///
/// A transition is killed by the first inactive state found among its
/// successors; the recorded witness is the lowest letter reaching it.
pub fn inactive_baseline(m: &Lta) -> InactiveSet {
    let n = m.num_states();
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, t) in m.transitions.iter().enumerate() {
        for &s in &t.succ {
            let row = &mut preds[s as usize];
            if row.last() != Some(&i) {
                row.push(i);
            }
        }
    }
    let mut alive: Vec<usize> = (0..n as StateId)
        .map(|q| m.transition_ids(q).len())
        .collect();
    let mut rank = vec![None; n];
    let mut witness = vec![None; m.transitions.len()];
    let mut next_rank = 0u32;
    let mut queue: VecDeque<StateId> = VecDeque::new();
    for q in 0..n {
        if alive[q] == 0 {
            rank[q] = Some(next_rank);
            next_rank += 1;
            queue.push_back(q as StateId);
        }
    }
    while let Some(r) = queue.pop_front() {
        for &i in &preds[r as usize] {
            if witness[i].is_some() {
                continue;
            }
            let t = &m.transitions[i];
            let a = t.succ.iter().position(|&s| s == r).expect("predecessor edge");
            witness[i] = Some(a as Letter);
            let q = t.state as usize;
            alive[q] -= 1;
            if alive[q] == 0 && rank[q].is_none() {
                rank[q] = Some(next_rank);
                next_rank += 1;
                queue.push_back(q as StateId);
            }
        }
    }
    InactiveSet { rank, witness }
}

/// True iff `m` accepts no language.
pub fn is_empty(m: &Lta) -> bool {
    inactive_baseline(m).contains(m.initial)
}

/// Whether `m` accepts the regular language `L(p)`.
pub fn accepts_language(m: &Lta, p: &Dfa) -> bool {
    let prod = lta_intersect(&lta_singleton(p), m).expect("alphabets agree");
    !is_empty(&prod)
}

/// A finite witness tree for emptiness, stored as a DAG of shared subtrees.
///
/// Children always have smaller indices than their parent, so the root is
/// the last node. Root-to-leaf letter strings are the counterexamples.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CounterexampleTree {
    pub nodes: Vec<TreeNode>,
    pub root: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TreeNode {
    /// The underlying state: an LTA state, or a product cell.
    pub state: u32,
    /// Sleep set of the node, when the state carries one.
    pub sleep: LetterSet,
    /// Sorted by letter, then child index.
    pub children: Vec<(Letter, usize)>,
}

impl CounterexampleTree {
    /// Builds the DAG reachable from `root` by repeatedly calling
    /// `children`. Each child key must be strictly smaller than its
    /// parent's key, which rules out cycles. `info` gives the state and
    /// sleep set recorded for a key.
    pub fn build<K: Ord + Copy + core::fmt::Debug>(
        root: K,
        mut children: impl FnMut(K) -> Vec<(Letter, K)>,
        info: impl Fn(K) -> (u32, LetterSet),
    ) -> Self {
        let mut index: BTreeMap<K, usize> = BTreeMap::new();
        let mut nodes: Vec<TreeNode> = Vec::new();
        // Explicit post-order DFS.
        let mut stack: Vec<(K, Option<Vec<(Letter, K)>>)> = vec![(root, None)];
        while let Some((key, kids)) = stack.pop() {
            if index.contains_key(&key) {
                continue;
            }
            match kids {
                None => {
                    let mut ks = children(key);
                    ks.sort_unstable();
                    ks.dedup();
                    for &(_, c) in &ks {
                        assert!(c < key, "witness {c:?} does not precede {key:?}");
                    }
                    let pending: Vec<K> =
                        ks.iter().map(|&(_, c)| c).filter(|c| !index.contains_key(c)).collect();
                    stack.push((key, Some(ks)));
                    for c in pending {
                        stack.push((c, None));
                    }
                }
                Some(ks) => {
                    if let Some(&(_, c)) = ks.iter().find(|(_, c)| !index.contains_key(c)) {
                        // Reached first through a sibling; finish it before us.
                        stack.push((key, Some(ks)));
                        stack.push((c, None));
                        continue;
                    }
                    let mut ch: Vec<(Letter, usize)> =
                        ks.iter().map(|&(a, c)| (a, index[&c])).collect();
                    ch.sort_unstable();
                    ch.dedup();
                    index.insert(key, nodes.len());
                    let (state, sleep) = info(key);
                    nodes.push(TreeNode { state, sleep, children: ch });
                }
            }
        }
        let root = index[&root];
        CounterexampleTree { nodes, root }
    }

    pub fn is_leaf(&self, node: usize) -> bool {
        self.nodes[node].children.is_empty()
    }

    /// Number of root-to-leaf paths below each node, saturating.
    pub fn leaf_counts(&self) -> Vec<u128> {
        let mut counts = vec![0u128; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            counts[i] = if n.children.is_empty() {
                1
            } else {
                n.children
                    .iter()
                    .fold(0u128, |acc, &(_, c)| acc.saturating_add(counts[c]))
            };
        }
        counts
    }

    pub fn leaf_count(&self) -> u128 {
        self.leaf_counts()[self.root]
    }

    /// The `i`-th root-to-leaf string in branch order.
    pub fn leaf_string(&self, mut i: u128) -> Option<Vec<Letter>> {
        let counts = self.leaf_counts();
        if i >= counts[self.root] {
            return None;
        }
        let mut node = self.root;
        let mut word = Vec::new();
        while !self.is_leaf(node) {
            let mut next = None;
            for &(a, c) in &self.nodes[node].children {
                if i < counts[c] {
                    next = Some((a, c));
                    break;
                }
                i -= counts[c];
            }
            let (a, c) = next?;
            word.push(a);
            node = c;
        }
        Some(word)
    }

    /// Root-to-leaf strings in branch order, at most `limit` of them.
    pub fn leaf_strings(&self, limit: usize) -> Vec<Vec<Letter>> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.collect(self.root, &mut path, &mut out, limit);
        out
    }

    fn collect(&self, node: usize, path: &mut Vec<Letter>, out: &mut Vec<Vec<Letter>>, limit: usize) {
        if out.len() >= limit {
            return;
        }
        if self.is_leaf(node) {
            out.push(path.clone());
            return;
        }
        for &(a, c) in &self.nodes[node].children {
            path.push(a);
            self.collect(c, path, out, limit);
            path.pop();
            if out.len() >= limit {
                return;
            }
        }
    }

    /// Distinct root-to-leaf strings.
    pub fn string_set(&self) -> BTreeSet<Vec<Letter>> {
        self.leaf_strings(usize::MAX).into_iter().collect()
    }

    pub fn depth(&self) -> usize {
        let mut d = vec![0usize; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            d[i] = n.children.iter().map(|&(_, c)| d[c] + 1).max().unwrap_or(0);
        }
        d[self.root]
    }
}

/// The inactivity-proof tree of an empty automaton.
///
/// Each node is an LTA state; for every transition of that state the child
/// is reached via the transition's recorded witness. Leaves are states with
/// no transitions. Returns `None` if `m` is not empty.
pub fn build_counterexample_tree(m: &Lta, inact: &InactiveSet) -> Option<CounterexampleTree> {
    let root_rank = inact.rank(m.initial)?;
    // Keys are ranks so that children (derived earlier) compare smaller.
    let mut by_rank: BTreeMap<u32, StateId> = BTreeMap::new();
    for q in inact.states() {
        by_rank.insert(inact.rank(q).unwrap(), q);
    }
    Some(CounterexampleTree::build(
        root_rank,
        |r| {
            let q = by_rank[&r];
            m.transition_ids(q)
                .iter()
                .map(|&i| {
                    let a = inact.witness(i).expect("inactive state has killed transitions");
                    let child = m.transitions[i].succ[a as usize];
                    (a, inact.rank(child).expect("witness leads to inactive state"))
                })
                .collect()
        },
        |r| (by_rank[&r], LetterSet::EMPTY),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_without_transitions_is_inactive() {
        assert!(is_empty(&Lta::none(2)));
    }

    #[test]
    fn self_looping_state_is_active() {
        let mut m = Lta::new(1, 1);
        m.add_transition(0, false, vec![0]);
        assert!(!is_empty(&m));
    }

    #[test]
    fn duplicate_transitions_are_dropped() {
        let mut m = Lta::new(2, 1);
        assert!(m.add_transition(0, true, vec![0, 0]));
        assert!(!m.add_transition(0, true, vec![0, 0]));
        assert_eq!(m.transitions().len(), 1);
    }

    #[test]
    fn powerset_of_empty_language_accepts_only_empty() {
        let l = Dfa::empty(2);
        let m = lta_powerset(&l);
        assert!(accepts_language(&m, &Dfa::empty(2)));
        assert!(!accepts_language(&m, &Dfa::letter(2, 0)));
        assert!(!is_empty(&m));
    }

    #[test]
    fn powerset_of_universal_accepts_everything() {
        let m = lta_powerset(&Dfa::universal(2));
        assert!(accepts_language(&m, &Dfa::from_words(2, [&[0, 1][..], &[1][..]])));
        assert!(accepts_language(&m, &Dfa::universal(2)));
    }

    #[test]
    fn intersection_with_all_and_none() {
        let p = Dfa::word(2, &[1]);
        let m = lta_powerset(&p);
        let with_all = lta_intersect(&m, &Lta::all(2)).unwrap();
        assert_eq!(is_empty(&with_all), is_empty(&m));
        assert_eq!(accepts_language(&with_all, &p), accepts_language(&m, &p));
        assert!(is_empty(&lta_intersect(&m, &Lta::none(2)).unwrap()));
    }

    #[test]
    fn singleton_membership_is_language_inclusion() {
        let l = Dfa::from_words(2, [&[0][..], &[0, 1][..]]);
        let pw = lta_powerset(&l);
        assert!(accepts_language(&pw, &Dfa::word(2, &[0, 1])));
        assert!(!accepts_language(&pw, &Dfa::word(2, &[1])));
        let single = lta_singleton(&Dfa::empty(2));
        assert!(accepts_language(&single, &Dfa::empty(2)));
        assert!(!accepts_language(&single, &Dfa::word(2, &[0])));
    }

    #[test]
    fn tree_of_singleton_against_empty_proof() {
        // M accepts only {a}; intersected with pow(∅) it is empty and the
        // only counterexample is `a`.
        let p = Dfa::word(2, &[0]);
        let m = lta_intersect(&lta_singleton(&p), &lta_powerset(&Dfa::empty(2))).unwrap();
        let inact = inactive_baseline(&m);
        let tree = build_counterexample_tree(&m, &inact).unwrap();
        assert_eq!(tree.leaf_strings(10), vec![vec![0]]);
        assert_eq!(tree.leaf_count(), 1);
        assert_eq!(tree.leaf_string(0), Some(vec![0]));
    }

    #[test]
    fn tree_build_orders_children_below_parents() {
        let t = CounterexampleTree::build(
            5u32,
            |k| match k {
                5 => vec![(1, 2), (0, 3)],
                3 => vec![(0, 2)],
                _ => vec![],
            },
            |k| (k, LetterSet::EMPTY),
        );
        assert_eq!(t.root, t.nodes.len() - 1);
        for (i, n) in t.nodes.iter().enumerate() {
            assert!(n.children.iter().all(|&(_, c)| c < i));
        }
        assert_eq!(t.leaf_strings(10), vec![vec![0, 0], vec![1]]);
        assert_eq!(t.depth(), 2);
    }
}
