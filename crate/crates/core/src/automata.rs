//! Finite automata over the statement alphabet.
//!
//! [`Dfa`] is always complete: every state has a successor for every letter.
//! A dead state (one that cannot reach a final state) plays the role of the
//! rejecting sink. [`Nfa`] allows ε-moves; they only exist to make
//! concatenation and iteration easy to build and are removed by
//! [`determinize`].

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::{self, Write};

use crate::letters::{Letter, LetterSet};

pub type StateId = u32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AutomataError {
    AlphabetMismatch { left: usize, right: usize },
    AlphabetOverlap(LetterSet),
}

impl fmt::Display for AutomataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AutomataError::AlphabetMismatch { left, right } => {
                write!(f, "alphabet sizes differ ({left} vs {right})")
            }
            AutomataError::AlphabetOverlap(s) => {
                write!(f, "shuffle operands share letters {s:?}")
            }
        }
    }
}

/// Nondeterministic automaton with optional ε-moves.
#[derive(Clone, Debug)]
pub struct Nfa {
    alphabet: usize,
    initial: StateId,
    finals: Vec<bool>,
    edges: Vec<Vec<(Letter, StateId)>>,
    eps: Vec<Vec<StateId>>,
}

impl Nfa {
    pub fn new(alphabet: usize) -> Self {
        let mut nfa = Nfa {
            alphabet,
            initial: 0,
            finals: Vec::new(),
            edges: Vec::new(),
            eps: Vec::new(),
        };
        nfa.add_state(false);
        nfa
    }

    pub fn add_state(&mut self, is_final: bool) -> StateId {
        self.finals.push(is_final);
        self.edges.push(Vec::new());
        self.eps.push(Vec::new());
        (self.finals.len() - 1) as StateId
    }

    pub fn set_initial(&mut self, q: StateId) {
        self.initial = q;
    }

    pub fn set_final(&mut self, q: StateId, is_final: bool) {
        self.finals[q as usize] = is_final;
    }

    pub fn add_edge(&mut self, from: StateId, a: Letter, to: StateId) {
        debug_assert!((a as usize) < self.alphabet);
        let row = &mut self.edges[from as usize];
        if !row.contains(&(a, to)) {
            row.push((a, to));
        }
    }

    pub fn add_epsilon(&mut self, from: StateId, to: StateId) {
        self.eps[from as usize].push(to);
    }

    pub fn alphabet_len(&self) -> usize {
        self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.finals.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn is_final(&self, q: StateId) -> bool {
        self.finals[q as usize]
    }

    pub fn edges(&self, q: StateId) -> &[(Letter, StateId)] {
        &self.edges[q as usize]
    }

    fn closure(&self, set: &mut Vec<StateId>) {
        let mut stack = set.clone();
        while let Some(q) = stack.pop() {
            for &r in &self.eps[q as usize] {
                if !set.contains(&r) {
                    set.push(r);
                    stack.push(r);
                }
            }
        }
        set.sort_unstable();
        set.dedup();
    }

    /// Word membership by direct simulation.
    pub fn accepts(&self, word: &[Letter]) -> bool {
        let mut cur = vec![self.initial];
        self.closure(&mut cur);
        for &a in word {
            let mut next = Vec::new();
            for &q in &cur {
                for &(b, r) in &self.edges[q as usize] {
                    if a == b {
                        next.push(r);
                    }
                }
            }
            self.closure(&mut next);
            cur = next;
        }
        cur.iter().any(|&q| self.is_final(q))
    }

    /// Embeds a DFA, dropping transitions into dead states.
    pub fn from_dfa(dfa: &Dfa) -> Self {
        let live = dfa.live_states();
        let mut nfa = Nfa::new(dfa.alphabet_len());
        let mut map = vec![None; dfa.num_states()];
        let id = |nfa: &mut Nfa, q: StateId, map: &mut Vec<Option<StateId>>| -> StateId {
            *map[q as usize].get_or_insert_with(|| nfa.add_state(dfa.is_final(q)))
        };
        // State 0 of `nfa` is a placeholder initial; reuse it for the DFA start.
        map[dfa.initial() as usize] = Some(0);
        nfa.set_final(0, dfa.is_final(dfa.initial()));
        for q in 0..dfa.num_states() as StateId {
            if !live[q as usize] {
                continue;
            }
            let from = id(&mut nfa, q, &mut map);
            for a in 0..dfa.alphabet_len() as Letter {
                let r = dfa.step(q, a);
                if live[r as usize] {
                    let to = id(&mut nfa, r, &mut map);
                    nfa.add_edge(from, a, to);
                }
            }
        }
        nfa
    }
}

/// Complete deterministic automaton.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dfa {
    alphabet: usize,
    initial: StateId,
    finals: Vec<bool>,
    /// Row-major `state * alphabet + letter`.
    delta: Vec<StateId>,
}

impl Dfa {
    /// A DFA with `states` states, all transitions pointing at state 0.
    pub fn new(alphabet: usize, states: usize) -> Self {
        assert!(states > 0);
        Dfa {
            alphabet,
            initial: 0,
            finals: vec![false; states],
            delta: vec![0; states * alphabet],
        }
    }

    /// Accepts nothing.
    pub fn empty(alphabet: usize) -> Self {
        Dfa::new(alphabet, 1)
    }

    /// Accepts only the empty word.
    pub fn epsilon(alphabet: usize) -> Self {
        let mut d = Dfa::new(alphabet, 2);
        d.set_final(0, true);
        for a in 0..alphabet as Letter {
            d.set(0, a, 1);
            d.set(1, a, 1);
        }
        d
    }

    /// Accepts exactly the single-letter word `a`.
    pub fn letter(alphabet: usize, a: Letter) -> Self {
        Dfa::word(alphabet, &[a])
    }

    /// Accepts exactly `word`.
    pub fn word(alphabet: usize, word: &[Letter]) -> Self {
        Dfa::from_words(alphabet, core::iter::once(word))
    }

    /// Accepts `Σ*`.
    pub fn universal(alphabet: usize) -> Self {
        let mut d = Dfa::new(alphabet, 1);
        d.set_final(0, true);
        d
    }

    /// Trie automaton for a finite set of words.
    pub fn from_words<'a>(alphabet: usize, words: impl IntoIterator<Item = &'a [Letter]>) -> Self {
        // state 0 = sink, state 1 = root
        let mut finals = vec![false, false];
        let mut delta = vec![0; 2 * alphabet];
        for w in words {
            let mut q = 1usize;
            for &a in w {
                let idx = q * alphabet + a as usize;
                if delta[idx] == 0 {
                    finals.push(false);
                    delta.extend(core::iter::repeat_n(0, alphabet));
                    delta[idx] = (finals.len() - 1) as StateId;
                }
                q = delta[idx] as usize;
            }
            finals[q] = true;
        }
        Dfa {
            alphabet,
            initial: 1,
            finals,
            delta,
        }
    }

    pub fn alphabet_len(&self) -> usize {
        self.alphabet
    }

    pub fn num_states(&self) -> usize {
        self.finals.len()
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn set_initial(&mut self, q: StateId) {
        self.initial = q;
    }

    pub fn is_final(&self, q: StateId) -> bool {
        self.finals[q as usize]
    }

    pub fn set_final(&mut self, q: StateId, is_final: bool) {
        self.finals[q as usize] = is_final;
    }

    pub fn add_state(&mut self, is_final: bool) -> StateId {
        self.finals.push(is_final);
        self.delta.extend(core::iter::repeat_n(0, self.alphabet));
        (self.finals.len() - 1) as StateId
    }

    pub fn set(&mut self, q: StateId, a: Letter, r: StateId) {
        self.delta[q as usize * self.alphabet + a as usize] = r;
    }

    pub fn step(&self, q: StateId, a: Letter) -> StateId {
        self.delta[q as usize * self.alphabet + a as usize]
    }

    pub fn run_from(&self, q: StateId, word: &[Letter]) -> StateId {
        word.iter().fold(q, |q, &a| self.step(q, a))
    }

    pub fn run(&self, word: &[Letter]) -> StateId {
        self.run_from(self.initial, word)
    }

    pub fn accepts(&self, word: &[Letter]) -> bool {
        self.is_final(self.run(word))
    }

    /// Structural totality/determinism check: every transition target is a
    /// valid state and the initial state exists.
    pub fn is_well_formed(&self) -> bool {
        let n = self.num_states();
        (self.initial as usize) < n
            && self.delta.len() == n * self.alphabet
            && self.delta.iter().all(|&r| (r as usize) < n)
    }

    /// States from which some final state is reachable.
    pub fn live_states(&self) -> Vec<bool> {
        let n = self.num_states();
        let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for q in 0..n {
            for a in 0..self.alphabet {
                preds[self.delta[q * self.alphabet + a] as usize].push(q as StateId);
            }
        }
        let mut live = self.finals.clone();
        let mut stack: Vec<StateId> = (0..n as StateId).filter(|&q| live[q as usize]).collect();
        while let Some(q) = stack.pop() {
            for &p in &preds[q as usize] {
                if !live[p as usize] {
                    live[p as usize] = true;
                    stack.push(p);
                }
            }
        }
        live
    }

    /// States reachable from the initial state.
    pub fn reachable_states(&self) -> Vec<bool> {
        let mut seen = vec![false; self.num_states()];
        seen[self.initial as usize] = true;
        let mut stack = vec![self.initial];
        while let Some(q) = stack.pop() {
            for a in 0..self.alphabet as Letter {
                let r = self.step(q, a);
                if !seen[r as usize] {
                    seen[r as usize] = true;
                    stack.push(r);
                }
            }
        }
        seen
    }

    /// Letters labelling some transition between reachable live states.
    pub fn support(&self) -> LetterSet {
        let live = self.live_states();
        let reach = self.reachable_states();
        let mut s = LetterSet::EMPTY;
        for q in 0..self.num_states() as StateId {
            if !(live[q as usize] && reach[q as usize]) {
                continue;
            }
            for a in 0..self.alphabet as Letter {
                if live[self.step(q, a) as usize] {
                    s.insert(a);
                }
            }
        }
        s
    }

    /// Restricts to reachable live states plus one explicit dead sink.
    ///
    /// Language-preserving. The sink is the last state and self-loops on
    /// every letter.
    pub fn trim(&self) -> Dfa {
        let live = self.live_states();
        let mut map: BTreeMap<StateId, StateId> = BTreeMap::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        if live[self.initial as usize] {
            map.insert(self.initial, 0);
            order.push(self.initial);
            queue.push_back(self.initial);
        }
        while let Some(q) = queue.pop_front() {
            for a in 0..self.alphabet as Letter {
                let r = self.step(q, a);
                if live[r as usize] && !map.contains_key(&r) {
                    map.insert(r, order.len() as StateId);
                    order.push(r);
                    queue.push_back(r);
                }
            }
        }
        let sink = order.len() as StateId;
        let mut out = Dfa::new(self.alphabet, order.len() + 1);
        out.initial = if live[self.initial as usize] { 0 } else { sink };
        for a in 0..self.alphabet as Letter {
            out.set(sink, a, sink);
        }
        for (i, &q) in order.iter().enumerate() {
            out.set_final(i as StateId, self.is_final(q));
            for a in 0..self.alphabet as Letter {
                let r = self.step(q, a);
                out.set(i as StateId, a, map.get(&r).copied().unwrap_or(sink));
            }
        }
        out
    }

    pub fn complement(&self) -> Dfa {
        let mut c = self.clone();
        for f in c.finals.iter_mut() {
            *f = !*f;
        }
        c
    }

    /// Synchronous product; `accept` decides finality of a pair.
    pub fn product(
        &self,
        other: &Dfa,
        accept: impl Fn(bool, bool) -> bool,
    ) -> Result<Dfa, AutomataError> {
        self.same_alphabet(other)?;
        Ok(explore(self.alphabet, (self.initial, other.initial), |&(p, q)| {
            let succ = (0..self.alphabet as Letter)
                .map(|a| (self.step(p, a), other.step(q, a)))
                .collect();
            (accept(self.is_final(p), other.is_final(q)), succ)
        }))
    }

    pub fn intersect(&self, other: &Dfa) -> Result<Dfa, AutomataError> {
        self.product(other, |x, y| x && y)
    }

    pub fn union(&self, other: &Dfa) -> Result<Dfa, AutomataError> {
        self.product(other, |x, y| x || y)
    }

    fn same_alphabet(&self, other: &Dfa) -> Result<(), AutomataError> {
        if self.alphabet != other.alphabet {
            return Err(AutomataError::AlphabetMismatch {
                left: self.alphabet,
                right: other.alphabet,
            });
        }
        Ok(())
    }

    pub fn is_empty_language(&self) -> bool {
        !self.live_states()[self.initial as usize]
    }

    /// `L(self) ⊆ L(other)`.
    pub fn is_subset_of(&self, other: &Dfa) -> bool {
        first_difference_trace(self, other).is_none()
    }

    /// All accepted words of length at most `max_len`, in length-lexicographic order.
    pub fn words_up_to(&self, max_len: usize) -> Vec<Vec<Letter>> {
        let live = self.live_states();
        let mut out = Vec::new();
        let mut layer: Vec<(Vec<Letter>, StateId)> = Vec::new();
        if live[self.initial as usize] {
            layer.push((Vec::new(), self.initial));
        }
        for len in 0..=max_len {
            for (w, q) in &layer {
                if self.is_final(*q) {
                    out.push(w.clone());
                }
            }
            if len == max_len {
                break;
            }
            let mut next = Vec::new();
            for (w, q) in &layer {
                for a in 0..self.alphabet as Letter {
                    let r = self.step(*q, a);
                    if live[r as usize] {
                        let mut w2 = w.clone();
                        w2.push(a);
                        next.push((w2, r));
                    }
                }
            }
            layer = next;
        }
        out
    }

    /// True iff the language is finite (no cycle through live reachable states).
    pub fn is_finite_language(&self) -> bool {
        let live = self.live_states();
        let n = self.num_states();
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut mark = vec![0u8; n];
        let mut stack = vec![(self.initial, 0 as Letter)];
        if !live[self.initial as usize] {
            return true;
        }
        mark[self.initial as usize] = 1;
        while let Some((q, a)) = stack.pop() {
            if a as usize == self.alphabet {
                mark[q as usize] = 2;
                continue;
            }
            stack.push((q, a + 1));
            let r = self.step(q, a);
            if !live[r as usize] {
                continue;
            }
            match mark[r as usize] {
                0 => {
                    mark[r as usize] = 1;
                    stack.push((r, 0));
                }
                1 => return false,
                _ => {}
            }
        }
        true
    }

    /// Text graph export: one `src -> dst [label="..."]` line per transition
    /// between live states. Transitions into the dead sink are omitted.
    pub fn to_dot(&self, label: impl Fn(Letter) -> String) -> String {
        let live = self.live_states();
        let mut s = String::from("digraph dfa {\n");
        let _ = writeln!(s, "  start -> {};", self.initial);
        for q in 0..self.num_states() as StateId {
            if self.is_final(q) {
                let _ = writeln!(s, "  {q} [shape=doublecircle];");
            }
        }
        for q in 0..self.num_states() as StateId {
            if !live[q as usize] {
                continue;
            }
            for a in 0..self.alphabet as Letter {
                let r = self.step(q, a);
                if live[r as usize] {
                    let text = label(a).replace('"', "\\\"");
                    let _ = writeln!(s, "  {q} -> {r} [label=\"{text}\"];");
                }
            }
        }
        s.push_str("}\n");
        s
    }
}

/// Breadth-first construction of a DFA whose states are keys of type `K`.
fn explore<K: Ord + Clone>(
    alphabet: usize,
    start: K,
    mut expand: impl FnMut(&K) -> (bool, Vec<K>),
) -> Dfa {
    let mut ids: BTreeMap<K, StateId> = BTreeMap::new();
    let mut queue = VecDeque::new();
    let mut finals = Vec::new();
    let mut delta = Vec::new();
    ids.insert(start.clone(), 0);
    finals.push(false);
    delta.extend(core::iter::repeat_n(0, alphabet));
    queue.push_back(start);
    while let Some(k) = queue.pop_front() {
        let id = ids[&k] as usize;
        let (fin, succ) = expand(&k);
        finals[id] = fin;
        for (a, s) in succ.into_iter().enumerate() {
            let next = match ids.get(&s) {
                Some(&n) => n,
                None => {
                    let n = finals.len() as StateId;
                    ids.insert(s.clone(), n);
                    finals.push(false);
                    delta.extend(core::iter::repeat_n(0, alphabet));
                    queue.push_back(s);
                    n
                }
            };
            delta[id * alphabet + a] = next;
        }
    }
    Dfa {
        alphabet,
        initial: 0,
        finals,
        delta,
    }
}

/// Subset construction. The empty macro-state becomes the sink; a
/// macro-state is final iff it contains a final NFA state.
pub fn determinize(nfa: &Nfa) -> Dfa {
    let mut start = vec![nfa.initial];
    nfa.closure(&mut start);
    explore(nfa.alphabet, start, |set: &Vec<StateId>| {
        let fin = set.iter().any(|&q| nfa.is_final(q));
        let mut succ = vec![Vec::new(); nfa.alphabet];
        for &q in set {
            for &(a, r) in nfa.edges(q) {
                succ[a as usize].push(r);
            }
        }
        for s in succ.iter_mut() {
            nfa.closure(s);
        }
        (fin, succ)
    })
}

/// All interleavings of a word of `a` with a word of `b`.
///
/// The operands must use disjoint sets of letters (their supports).
pub fn shuffle(a: &Dfa, b: &Dfa) -> Result<Dfa, AutomataError> {
    a.same_alphabet(b)?;
    let (sa, sb) = (a.support(), b.support());
    let overlap = sa.intersection(sb);
    if !overlap.is_empty() {
        return Err(AutomataError::AlphabetOverlap(overlap));
    }
    let (la, lb) = (a.live_states(), b.live_states());
    // None = sink
    let start = if la[a.initial as usize] && lb[b.initial as usize] {
        Some((a.initial, b.initial))
    } else {
        None
    };
    let n = a.alphabet;
    let d = explore(n, start, |k: &Option<(StateId, StateId)>| match *k {
        None => (false, vec![None; n]),
        Some((p, q)) => {
            let succ = (0..n as Letter)
                .map(|l| {
                    let (p2, q2) = if sa.contains(l) {
                        (a.step(p, l), q)
                    } else if sb.contains(l) {
                        (p, b.step(q, l))
                    } else {
                        return None;
                    };
                    (la[p2 as usize] && lb[q2 as usize]).then_some((p2, q2))
                })
                .collect();
            (a.is_final(p) && b.is_final(q), succ)
        }
    });
    Ok(d.trim())
}

/// `L(a) · L(b)`.
pub fn concat(a: &Dfa, b: &Dfa) -> Result<Dfa, AutomataError> {
    a.same_alphabet(b)?;
    let mut nfa = Nfa::from_dfa(a);
    let offset = nfa.num_states() as StateId;
    let nb = Nfa::from_dfa(b);
    for q in 0..nb.num_states() as StateId {
        nfa.add_state(nb.is_final(q));
        for &(l, r) in nb.edges(q) {
            nfa.add_edge(offset + q, l, offset + r);
        }
    }
    for q in 0..offset {
        if nfa.is_final(q) {
            nfa.set_final(q, false);
            nfa.add_epsilon(q, offset + nb.initial());
        }
    }
    Ok(determinize(&nfa).trim())
}

/// `L(a)*`.
pub fn star(a: &Dfa) -> Dfa {
    let inner = Nfa::from_dfa(a);
    let mut nfa = Nfa::new(a.alphabet);
    nfa.set_final(0, true);
    let offset = 1;
    for q in 0..inner.num_states() as StateId {
        nfa.add_state(false);
        for &(l, r) in inner.edges(q) {
            nfa.add_edge(offset + q, l, offset + r);
        }
        if inner.is_final(q) {
            nfa.add_epsilon(offset + q, 0);
        }
    }
    nfa.add_epsilon(0, offset + inner.initial());
    determinize(&nfa).trim()
}

/// Length-lexicographically least word of `L(p) \ L(pi)`.
///
/// Breadth-first search over `p × complement(pi)`, expanding letters in id
/// order.
pub fn first_difference_trace(p: &Dfa, pi: &Dfa) -> Option<Vec<Letter>> {
    assert_eq!(p.alphabet, pi.alphabet, "alphabet sizes differ");
    let live = p.live_states();
    let start = (p.initial, pi.initial);
    if !live[start.0 as usize] {
        return None;
    }
    let mut parent: BTreeMap<(StateId, StateId), Option<((StateId, StateId), Letter)>> =
        BTreeMap::new();
    parent.insert(start, None);
    let mut queue = VecDeque::from([start]);
    while let Some(k) = queue.pop_front() {
        if p.is_final(k.0) && !pi.is_final(k.1) {
            let mut word = Vec::new();
            let mut cur = k;
            while let Some(Some((prev, a))) = parent.get(&cur) {
                word.push(*a);
                cur = *prev;
            }
            word.reverse();
            return Some(word);
        }
        for a in 0..p.alphabet as Letter {
            let next = (p.step(k.0, a), pi.step(k.1, a));
            if live[next.0 as usize] && !parent.contains_key(&next) {
                parent.insert(next, Some((k, a)));
                queue.push_back(next);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(d: &Dfa, n: usize) -> Vec<Vec<Letter>> {
        d.words_up_to(n)
    }

    #[test]
    fn determinize_single_word() {
        let mut nfa = Nfa::new(2);
        let f = nfa.add_state(true);
        nfa.add_edge(0, 0, f);
        let d = determinize(&nfa);
        assert!(d.is_well_formed());
        assert_eq!(words(&d, 4), vec![vec![0]]);
    }

    #[test]
    fn determinize_nondeterministic_successors_share_macro_state() {
        let mut nfa = Nfa::new(1);
        let q1 = nfa.add_state(true);
        let q2 = nfa.add_state(false);
        nfa.add_edge(0, 0, q1);
        nfa.add_edge(0, 0, q2);
        let d = determinize(&nfa);
        let m = d.step(d.initial(), 0);
        assert!(d.is_final(m));
        // initial, {q1,q2}, and the empty sink
        assert_eq!(d.num_states(), 3);
    }

    #[test]
    fn shuffle_of_two_letters() {
        let a = Dfa::letter(2, 0);
        let b = Dfa::letter(2, 1);
        let s = shuffle(&a, &b).unwrap();
        assert_eq!(words(&s, 3), vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn shuffle_with_epsilon_is_identity() {
        let a = Dfa::from_words(3, [&[0, 1][..], &[2][..]]);
        let e = Dfa::epsilon(3);
        let s = shuffle(&a, &e).unwrap();
        assert_eq!(words(&s, 4), words(&a, 4));
    }

    #[test]
    fn shuffle_rejects_overlapping_supports() {
        let a = Dfa::letter(2, 0);
        assert!(matches!(shuffle(&a, &a), Err(AutomataError::AlphabetOverlap(_))));
    }

    #[test]
    fn concat_basics() {
        let a = Dfa::letter(2, 0);
        let b = Dfa::letter(2, 1);
        assert_eq!(words(&concat(&a, &b).unwrap(), 3), vec![vec![0, 1]]);
        let none = Dfa::empty(2);
        assert!(concat(&none, &b).unwrap().is_empty_language());
    }

    #[test]
    fn star_of_letter() {
        let s = star(&Dfa::word(2, &[0, 1]));
        assert_eq!(words(&s, 4), vec![vec![], vec![0, 1], vec![0, 1, 0, 1]]);
    }

    #[test]
    fn first_difference_cases() {
        let p = Dfa::from_words(2, [&[0][..], &[1][..]]);
        let pi = Dfa::letter(2, 1);
        assert_eq!(first_difference_trace(&p, &pi), Some(vec![0]));
        assert_eq!(first_difference_trace(&pi, &p), None);
    }

    #[test]
    fn trim_keeps_language_and_adds_single_sink() {
        let d = Dfa::from_words(3, [&[0, 1][..], &[2, 2][..]]);
        let t = d.trim();
        assert_eq!(words(&t, 4), words(&d, 4));
        let live = t.live_states();
        assert_eq!(live.iter().filter(|l| !**l).count(), 1);
    }

    #[test]
    fn dot_export_lists_live_transitions() {
        let d = Dfa::word(2, &[0, 1]);
        let dot = d.to_dot(|a| alloc::format!("s{a}"));
        assert!(dot.contains("-> ") && dot.contains("label=\"s0\"") && dot.contains("label=\"s1\""));
    }

    #[test]
    fn finiteness() {
        assert!(Dfa::word(2, &[0, 1]).is_finite_language());
        assert!(!star(&Dfa::letter(2, 0)).is_finite_language());
    }
}
