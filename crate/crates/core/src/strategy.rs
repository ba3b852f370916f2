//! Choosing which counterexamples to refine with.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;
use core::fmt;

use crate::automata::{first_difference_trace, Dfa};
use crate::letters::Letter;
use crate::lta::CounterexampleTree;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Strategy {
    /// The length-lexicographically least word of `L(P) \ L(Π)`.
    Naive,
    /// Every leaf of the counterexample tree.
    Pe,
    /// One leaf, following threads in round-robin order.
    BpeRr,
    /// The `n` leftmost leaves.
    BpeL(usize),
    /// The `n` middlemost leaves.
    BpeM(usize),
}

impl Strategy {
    /// Whether the strategy reads the counterexample tree.
    pub fn needs_tree(self) -> bool {
        self != Strategy::Naive
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Naive => f.write_str("naive"),
            Strategy::Pe => f.write_str("pe"),
            Strategy::BpeRr => f.write_str("bpe-rr"),
            Strategy::BpeL(n) => write!(f, "bpe-l {n}"),
            Strategy::BpeM(n) => write!(f, "bpe-m {n}"),
        }
    }
}

/// Counterexamples for one refinement round, without duplicates.
///
/// `thread_of[a]` is the thread index of letter `a`; it only matters for
/// [`Strategy::BpeRr`]. Tree strategies return nothing when `tree` is `None`.
pub fn extract_counterexamples(
    tree: Option<&CounterexampleTree>,
    p: &Dfa,
    pi: &Dfa,
    strategy: Strategy,
    thread_of: &[u32],
) -> Vec<Vec<Letter>> {
    let words = match (strategy, tree) {
        (Strategy::Naive, _) => first_difference_trace(p, pi).into_iter().collect(),
        (_, None) => Vec::new(),
        (Strategy::Pe, Some(t)) => t.leaf_strings(usize::MAX),
        (Strategy::BpeL(n), Some(t)) => t.leaf_strings(n.max(1)),
        (Strategy::BpeM(n), Some(t)) => middlemost(t, n.max(1)),
        (Strategy::BpeRr, Some(t)) => alloc::vec![round_robin(t, thread_of)],
    };
    let mut seen = BTreeSet::new();
    words.into_iter().filter(|w| seen.insert(w.clone())).collect()
}

/// Range of the `n` leaves centred on leaf `⌈k/2⌉` (counting from one) of `k`.
pub fn middle_window(k: u128, n: usize) -> core::ops::Range<u128> {
    if k == 0 {
        return 0..0;
    }
    let n = (n as u128).min(k);
    let centre = k.div_ceil(2) - 1;
    let start = centre.saturating_sub((n - 1) / 2).min(k - n);
    start..start + n
}

fn middlemost(t: &CounterexampleTree, n: usize) -> Vec<Vec<Letter>> {
    middle_window(t.leaf_count(), n)
        .filter_map(|i| t.leaf_string(i))
        .collect()
}

/// Greedy descent that prefers the next thread in rotation, then the
/// lowest letter.
fn round_robin(t: &CounterexampleTree, thread_of: &[u32]) -> Vec<Letter> {
    let threads = thread_of.iter().max().map_or(1, |m| m + 1);
    let mut next = 0u32;
    let mut node = t.root;
    let mut word = Vec::new();
    while let Some(&(a, c)) = t.nodes[node].children.iter().min_by_key(|&&(a, c)| {
        let th = thread_of.get(a as usize).copied().unwrap_or(0);
        ((th + threads - next) % threads, a, c)
    }) {
        word.push(a);
        next = (thread_of.get(a as usize).copied().unwrap_or(0) + 1) % threads;
        node = c;
    }
    word
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antichain::{check, CheckConfig, Verdict};
    use crate::automata::shuffle;
    use crate::dependence::DependenceRel;
    use crate::reduction::OrderSource;
    use alloc::vec;

    /// Two threads of two statements each: thread 0 runs 0·1, thread 1 runs 2·3.
    fn two_by_two() -> (Dfa, [u32; 4]) {
        let t1 = Dfa::word(4, &[0, 1]);
        let t2 = Dfa::word(4, &[2, 3]);
        (shuffle(&t1, &t2).unwrap(), [0, 0, 1, 1])
    }

    fn tree_for(p: &Dfa) -> CounterexampleTree {
        let pi = Dfa::empty(p.alphabet_len());
        let d = DependenceRel::from_pairs(4, [(0, 1), (2, 3)]);
        let out = check(p, &pi, &d, CheckConfig::new(OrderSource::Linear)).unwrap();
        assert_eq!(out.verdict, Verdict::NotCovered);
        out.counterexample_tree().unwrap()
    }

    #[test]
    fn round_robin_alternates_threads() {
        let (p, threads) = two_by_two();
        let t = tree_for(&p);
        let pi = Dfa::empty(4);
        let cex = extract_counterexamples(Some(&t), &p, &pi, Strategy::BpeRr, &threads);
        assert_eq!(cex, vec![vec![0, 2, 1, 3]]);
    }

    #[test]
    fn leftmost_is_sequential_composition() {
        let (p, threads) = two_by_two();
        let t = tree_for(&p);
        let pi = Dfa::empty(4);
        let cex = extract_counterexamples(Some(&t), &p, &pi, Strategy::BpeL(1), &threads);
        assert_eq!(cex, vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn naive_is_first_difference() {
        let (p, threads) = two_by_two();
        let pi = Dfa::empty(4);
        let cex = extract_counterexamples(None, &p, &pi, Strategy::Naive, &threads);
        assert_eq!(cex, vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn pe_strings_are_program_words_outside_proof() {
        let (p, threads) = two_by_two();
        let t = tree_for(&p);
        let pi = Dfa::empty(4);
        let cex = extract_counterexamples(Some(&t), &p, &pi, Strategy::Pe, &threads);
        assert!(!cex.is_empty());
        assert!(cex.iter().all(|w| p.accepts(w) && !pi.accepts(w)));
    }

    #[test]
    fn middle_window_examples() {
        assert_eq!(middle_window(1, 1), 0..1);
        assert_eq!(middle_window(3, 1), 1..2);
        assert_eq!(middle_window(4, 1), 1..2);
        assert_eq!(middle_window(5, 3), 1..4);
        assert_eq!(middle_window(2, 5), 0..2);
        assert_eq!(middle_window(0, 1), 0..0);
    }
}
