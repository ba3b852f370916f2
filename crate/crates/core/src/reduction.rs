//! Sleep-set reductions: ordering relations, the reduction automaton and a
//! brute-force enumerator for finite languages.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::automata::{Dfa, StateId};
use crate::dependence::DependenceRel;
use crate::letters::{Letter, LetterSet};
use crate::lta::Lta;

/// Largest alphabet for which all linear orders are enumerated.
pub const MAX_LINEAR_LETTERS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum OrderSource {
    /// Every strict linear order of the alphabet.
    Linear,
    /// Every split `Σ = Σ1 ⊎ Σ2` with `Σ2` ordered before `Σ1`.
    Partition,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReductionError {
    TooManyLetters { letters: usize, max: usize },
    InstanceTooLarge,
}

impl fmt::Display for ReductionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReductionError::TooManyLetters { letters, max } => write!(
                f,
                "linear orders over {letters} letters are not enumerated (limit {max}); use partition orders or atomic blocks"
            ),
            ReductionError::InstanceTooLarge => f.write_str("instance exceeds brute-force limits"),
        }
    }
}

/// An ordering relation given by `R(a)`, the letters explored before `a`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct OrderRel {
    before: Vec<LetterSet>,
}

impl OrderRel {
    pub fn from_sequence(n: usize, seq: &[Letter]) -> Self {
        let mut before = vec![LetterSet::EMPTY; n];
        let mut seen = LetterSet::EMPTY;
        for &a in seq {
            before[a as usize] = seen;
            seen.insert(a);
        }
        OrderRel { before }
    }

    /// `R(a) = Σ2` for `a ∈ Σ1`, else `∅`.
    pub fn partition(n: usize, sigma2: LetterSet) -> Self {
        OrderRel {
            before: (0..n as Letter)
                .map(|a| if sigma2.contains(a) { LetterSet::EMPTY } else { sigma2 })
                .collect(),
        }
    }

    pub fn before(&self, a: Letter) -> LetterSet {
        self.before[a as usize]
    }
}

fn permutations(items: &[Letter]) -> Vec<Vec<Letter>> {
    if items.is_empty() {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for (i, &x) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

impl OrderSource {
    /// Materializes the whole family over `{0, .., n-1}`.
    pub fn family(self, n: usize) -> Result<Vec<OrderRel>, ReductionError> {
        match self {
            OrderSource::Linear => {
                if n > MAX_LINEAR_LETTERS {
                    return Err(ReductionError::TooManyLetters {
                        letters: n,
                        max: MAX_LINEAR_LETTERS,
                    });
                }
                let letters: Vec<Letter> = (0..n as Letter).collect();
                Ok(permutations(&letters)
                    .iter()
                    .map(|p| OrderRel::from_sequence(n, p))
                    .collect())
            }
            OrderSource::Partition => {
                if n > 20 {
                    return Err(ReductionError::TooManyLetters { letters: n, max: 20 });
                }
                Ok(LetterSet::full(n)
                    .subsets()
                    .map(|s2| OrderRel::partition(n, s2))
                    .collect())
            }
        }
    }
}

/// `sleep(xa) = (sleep(x) ∪ R(a)) \ D(a)`.
pub fn sleep_step(s: LetterSet, r: &OrderRel, a: Letter, d: &DependenceRel) -> LetterSet {
    s.union(r.before(a)).difference(d.row(a))
}

/// A state `(q, ι, S)` of the reduction automaton.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SleepState {
    pub q: StateId,
    pub ignored: bool,
    pub sleep: LetterSet,
}

/// The reachable part of the reduction automaton together with the meaning
/// of each of its states.
#[derive(Clone, Debug)]
pub struct ReductionLta {
    pub lta: Lta,
    pub states: Vec<SleepState>,
}

/// Builds the automaton accepting the sleep-set reductions of `L(p)`:
/// from `(q, ι, S)`, for each `R` in the family, the transition with label
/// `q ∈ F ∧ ¬ι` sends `a` to `(δ(q,a), ι ∨ a ∈ S, (S ∪ R(a)) \ D(a))`.
pub fn sleep_reduction_lta(
    p: &Dfa,
    d: &DependenceRel,
    orders: OrderSource,
) -> Result<ReductionLta, ReductionError> {
    let n = p.alphabet_len();
    assert_eq!(d.alphabet_len(), n, "dependence relation over a different alphabet");
    let family = orders.family(n)?;
    let start = SleepState {
        q: p.initial(),
        ignored: false,
        sleep: LetterSet::EMPTY,
    };
    let mut ids: BTreeMap<SleepState, StateId> = BTreeMap::new();
    let mut states = vec![start];
    ids.insert(start, 0);
    let mut lta = Lta::new(n, 1);
    let mut queue = VecDeque::from([start]);
    while let Some(st) = queue.pop_front() {
        let id = ids[&st];
        let label = p.is_final(st.q) && !st.ignored;
        for r in &family {
            let mut succ = Vec::with_capacity(n);
            for a in 0..n as Letter {
                let next = SleepState {
                    q: p.step(st.q, a),
                    ignored: st.ignored || st.sleep.contains(a),
                    sleep: sleep_step(st.sleep, r, a, d),
                };
                let nid = *ids.entry(next).or_insert_with(|| {
                    states.push(next);
                    queue.push_back(next);
                    lta.add_state()
                });
                succ.push(nid);
            }
            lta.add_transition(id, label, succ);
        }
    }
    Ok(ReductionLta { lta, states })
}

/// A finite language.
pub type Language = BTreeSet<Vec<Letter>>;

/// Limits for [`enumerate_reductions_bruteforce`].
pub const BRUTE_MAX_LETTERS: usize = 4;
pub const BRUTE_MAX_WORD: usize = 5;

/// All languages `P \ ignore_R` for a finite, `∼D`-closed `P`.
///
/// Orders are only chosen among the children of each prefix that are not
/// already asleep. Placing other letters earlier in an order cannot change
/// the result when `P` is `∼D`-closed, and a sleeping letter stays asleep
/// in every child anyway.
pub fn enumerate_reductions_bruteforce(
    p: &Language,
    d: &DependenceRel,
) -> Result<BTreeSet<Language>, ReductionError> {
    if d.alphabet_len() > BRUTE_MAX_LETTERS || p.iter().any(|w| w.len() > BRUTE_MAX_WORD) {
        return Err(ReductionError::InstanceTooLarge);
    }
    let mut prefixes: BTreeSet<Vec<Letter>> = BTreeSet::new();
    for w in p {
        for i in 0..=w.len() {
            prefixes.insert(w[..i].to_vec());
        }
    }
    if prefixes.is_empty() {
        return Ok(BTreeSet::from([Language::new()]));
    }
    let mut memo = BTreeMap::new();
    let subs = subtree_reductions(&[], LetterSet::EMPTY, p, &prefixes, d, &mut memo);
    Ok(subs)
}

/// Reductions of the subtree rooted at `x` with sleep set `s`, as sets of
/// full words.
fn subtree_reductions(
    x: &[Letter],
    s: LetterSet,
    p: &Language,
    prefixes: &BTreeSet<Vec<Letter>>,
    d: &DependenceRel,
    memo: &mut BTreeMap<(Vec<Letter>, LetterSet), BTreeSet<Language>>,
) -> BTreeSet<Language> {
    let key = (x.to_vec(), s);
    if let Some(r) = memo.get(&key) {
        return r.clone();
    }
    let n = d.alphabet_len() as Letter;
    let awake: Vec<Letter> = (0..n)
        .filter(|&a| !s.contains(a))
        .filter(|&a| {
            let mut xa = x.to_vec();
            xa.push(a);
            prefixes.contains(&xa)
        })
        .collect();
    let here: Language = if p.contains(x) {
        BTreeSet::from([x.to_vec()])
    } else {
        Language::new()
    };
    let mut result = BTreeSet::new();
    for order in permutations(&awake) {
        let mut partial: BTreeSet<Language> = BTreeSet::from([here.clone()]);
        let mut earlier = LetterSet::EMPTY;
        for &a in &order {
            let child_sleep = s.union(earlier).difference(d.row(a));
            earlier.insert(a);
            let mut xa = x.to_vec();
            xa.push(a);
            let subs = subtree_reductions(&xa, child_sleep, p, prefixes, d, memo);
            let mut next = BTreeSet::new();
            for acc in &partial {
                for sub in &subs {
                    let mut l = acc.clone();
                    l.extend(sub.iter().cloned());
                    next.insert(l);
                }
            }
            partial = next;
        }
        result.extend(partial);
    }
    memo.insert(key, result.clone());
    result
}

/// All words `∼D`-equivalent to `w`.
pub fn trace_class(w: &[Letter], d: &DependenceRel) -> BTreeSet<Vec<Letter>> {
    let mut seen = BTreeSet::from([w.to_vec()]);
    let mut stack = vec![w.to_vec()];
    while let Some(u) = stack.pop() {
        for i in 0..u.len().saturating_sub(1) {
            if d.independent(u[i], u[i + 1]) {
                let mut v = u.clone();
                v.swap(i, i + 1);
                if seen.insert(v.clone()) {
                    stack.push(v);
                }
            }
        }
    }
    seen
}

/// `[L]_D`.
pub fn closure(l: &Language, d: &DependenceRel) -> Language {
    let mut out = Language::new();
    for w in l {
        if !out.contains(w) {
            out.extend(trace_class(w, d));
        }
    }
    out
}

pub fn is_closed(l: &Language, d: &DependenceRel) -> bool {
    closure(l, d) == *l
}

/// Whether two distinct words of `l` are `∼D`-equivalent.
pub fn has_equivalent_pair(l: &Language, d: &DependenceRel) -> bool {
    let mut seen = Language::new();
    for w in l {
        if seen.contains(w) {
            return true;
        }
        seen.extend(trace_class(w, d));
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lta::accepts_language;

    fn lang(words: &[&[Letter]]) -> Language {
        words.iter().map(|w| w.to_vec()).collect()
    }

    fn dfa(l: &Language, n: usize) -> Dfa {
        Dfa::from_words(n, l.iter().map(|w| w.as_slice()))
    }

    #[test]
    fn sleep_step_puts_earlier_independent_letter_to_sleep() {
        let d = DependenceRel::identity(2);
        let r = OrderRel::from_sequence(2, &[1, 0]);
        assert_eq!(sleep_step(LetterSet::EMPTY, &r, 0, &d), LetterSet::singleton(1));
        let total = DependenceRel::total(2);
        assert_eq!(sleep_step(LetterSet::full(2), &r, 0, &total), LetterSet::EMPTY);
    }

    #[test]
    fn family_sizes() {
        assert_eq!(OrderSource::Linear.family(3).unwrap().len(), 6);
        assert_eq!(OrderSource::Partition.family(3).unwrap().len(), 8);
        assert!(OrderSource::Linear.family(9).is_err());
    }

    #[test]
    fn independent_pair_has_two_reductions() {
        let p = lang(&[&[0, 1], &[1, 0]]);
        let d = DependenceRel::identity(2);
        let reds = enumerate_reductions_bruteforce(&p, &d).unwrap();
        assert_eq!(reds, BTreeSet::from([lang(&[&[0, 1]]), lang(&[&[1, 0]])]));
        let m = sleep_reduction_lta(&dfa(&p, 2), &d, OrderSource::Linear).unwrap();
        assert!(accepts_language(&m.lta, &dfa(&lang(&[&[0, 1]]), 2)));
        assert!(accepts_language(&m.lta, &dfa(&lang(&[&[1, 0]]), 2)));
        assert!(!accepts_language(&m.lta, &dfa(&p, 2)));
        assert!(!accepts_language(&m.lta, &Dfa::empty(2)));
    }

    #[test]
    fn dependent_pair_has_only_itself() {
        let p = lang(&[&[0, 1], &[1, 0]]);
        let d = DependenceRel::total(2);
        let reds = enumerate_reductions_bruteforce(&p, &d).unwrap();
        assert_eq!(reds, BTreeSet::from([p.clone()]));
        let m = sleep_reduction_lta(&dfa(&p, 2), &d, OrderSource::Linear).unwrap();
        assert!(accepts_language(&m.lta, &dfa(&p, 2)));
        assert!(!accepts_language(&m.lta, &dfa(&lang(&[&[0, 1]]), 2)));
    }

    #[test]
    fn singleton_language() {
        let p = lang(&[&[0]]);
        let d = DependenceRel::identity(1);
        assert_eq!(
            enumerate_reductions_bruteforce(&p, &d).unwrap(),
            BTreeSet::from([p.clone()])
        );
    }

    #[test]
    fn closure_of_commuting_word() {
        let d = DependenceRel::identity(3);
        assert_eq!(trace_class(&[0, 1, 2], &d).len(), 6);
        let l = lang(&[&[0, 1]]);
        assert!(!is_closed(&l, &d));
        assert!(is_closed(&closure(&l, &d), &d));
        assert!(has_equivalent_pair(&closure(&l, &d), &d));
    }
}
