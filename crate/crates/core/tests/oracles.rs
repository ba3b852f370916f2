//! Cross-checks of the automata, LTA, reduction and antichain modules
//! against independent brute-force oracles.

use std::collections::BTreeSet;

use hyperweave_core::antichain::{
    check, fmax_from_successors, fmax_literal, Antichain, CheckConfig, CheckStats, Engine, Verdict,
};
use hyperweave_core::automata::{concat, determinize, first_difference_trace, shuffle, Dfa, Nfa};
use hyperweave_core::lta::{
    accepts_language, build_counterexample_tree, inactive_baseline, is_empty, lta_intersect,
    lta_powerset, lta_singleton, Lta,
};
use hyperweave_core::reduction::{sleep_reduction_lta, sleep_step, OrderRel, OrderSource};
use hyperweave_core::{DependenceRel, Letter, LetterSet};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_dfa(rng: &mut impl Rng, states: std::ops::RangeInclusive<usize>, n: usize) -> Dfa {
    let states = rng.gen_range(states);
    let mut d = Dfa::new(n, states);
    for q in 0..states as u32 {
        d.set_final(q, rng.gen_bool(0.35));
        for a in 0..n as Letter {
            d.set(q, a, rng.gen_range(0..states as u32));
        }
    }
    d
}

fn random_nfa(rng: &mut impl Rng, states: usize, n: usize) -> Nfa {
    let mut m = Nfa::new(n);
    for _ in 1..states {
        m.add_state(false);
    }
    for q in 0..states as u32 {
        m.set_final(q, rng.gen_bool(0.3));
        for a in 0..n as Letter {
            for r in 0..states as u32 {
                if rng.gen_bool(0.25) {
                    m.add_edge(q, a, r);
                }
            }
        }
        if rng.gen_bool(0.1) {
            m.add_epsilon(q, rng.gen_range(0..states as u32));
        }
    }
    m
}

fn random_dependence(rng: &mut impl Rng, n: usize) -> DependenceRel {
    DependenceRel::from_fn(n, |_, _| rng.gen_bool(0.4))
}

fn all_words(n: usize, max_len: usize) -> Vec<Vec<Letter>> {
    let mut out = vec![vec![]];
    let mut layer = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for a in 0..n as Letter {
                let mut v: Vec<Letter> = w.clone();
                v.push(a);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

#[test]
fn determinize_preserves_membership() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..500 {
        let n = rng.gen_range(1..=3);
        let nfa = random_nfa(&mut rng, 5, n);
        let dfa = determinize(&nfa);
        assert!(dfa.is_well_formed());
        for w in all_words(n, 6) {
            assert_eq!(nfa.accepts(&w), dfa.accepts(&w), "word {w:?}");
        }
    }
}

fn is_interleaving(w: &[Letter], u: &[Letter], v: &[Letter]) -> bool {
    match (w.split_first(), u.split_first(), v.split_first()) {
        (None, None, None) => true,
        (None, _, _) => false,
        (Some((x, wr)), uf, vf) => {
            uf.is_some_and(|(y, ur)| x == y && is_interleaving(wr, ur, v))
                || vf.is_some_and(|(y, vr)| x == y && is_interleaving(wr, u, vr))
        }
    }
}

#[test]
fn shuffle_matches_interleaving_enumerator() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        // thread A over {0,1}, thread B over {2,3}
        let wa: Vec<Vec<Letter>> = (0..2).map(|_| (0..rng.gen_range(0..3)).map(|_| rng.gen_range(0..2)).collect()).collect();
        let wb: Vec<Vec<Letter>> = (0..2).map(|_| (0..rng.gen_range(0..3)).map(|_| rng.gen_range(2..4)).collect()).collect();
        let a = Dfa::from_words(4, wa.iter().map(|w| w.as_slice()));
        let b = Dfa::from_words(4, wb.iter().map(|w| w.as_slice()));
        let s = shuffle(&a, &b).unwrap();
        assert!(s.is_well_formed());
        for w in all_words(4, 4) {
            let expect = wa.iter().any(|u| wb.iter().any(|v| is_interleaving(&w, u, v)));
            assert_eq!(s.accepts(&w), expect, "word {w:?} of {wa:?} ⧢ {wb:?}");
        }
    }
}

#[test]
fn shuffle_word_counts() {
    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }
    let a = Dfa::from_words(4, [&[0][..], &[0, 1][..], &[1, 1, 0][..]]);
    let b = Dfa::from_words(4, [&[][..], &[2, 3][..], &[3][..]]);
    let s = shuffle(&a, &b).unwrap();
    let count_len = |d: &Dfa, n: usize| d.words_up_to(n).iter().filter(|w| w.len() == n).count();
    for n in 0..=5 {
        let expect: usize = (0..=n).map(|k| binom(n, k) * count_len(&a, k) * count_len(&b, n - k)).sum();
        assert_eq!(count_len(&s, n), expect, "length {n}");
    }
}

#[test]
fn two_word_languages_shuffle_to_six_words() {
    let a = Dfa::from_words(4, [&[0][..], &[1][..]]);
    let b = Dfa::word(4, &[2, 3]);
    let words = shuffle(&a, &b).unwrap().words_up_to(4);
    assert_eq!(words.len(), 6);
    for w in &words {
        assert!(is_interleaving(w, &[0], &[2, 3]) || is_interleaving(w, &[1], &[2, 3]));
    }
}

#[test]
fn concat_of_guarded_program() {
    // [φ]·P·[¬ψ] with φ = letter 0, ψ-violation = letter 3, P over {1,2}
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let p_words: Vec<Vec<Letter>> = (0..3).map(|_| (0..rng.gen_range(0..3)).map(|_| rng.gen_range(1..3)).collect()).collect();
        let p = Dfa::from_words(4, p_words.iter().map(|w| w.as_slice()));
        let full = concat(&concat(&Dfa::letter(4, 0), &p).unwrap(), &Dfa::letter(4, 3)).unwrap();
        for w in all_words(4, 6) {
            let expect = w.len() >= 2
                && w[0] == 0
                && w[w.len() - 1] == 3
                && p_words.iter().any(|u| u.as_slice() == &w[1..w.len() - 1]);
            assert_eq!(full.accepts(&w), expect);
        }
    }
}

#[test]
fn first_difference_matches_brute_force_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..300 {
        let n = rng.gen_range(1..=3);
        let p = random_dfa(&mut rng, 4..=4, n);
        let pi = random_dfa(&mut rng, 3..=3, n);
        let got = first_difference_trace(&p, &pi);
        let scan = all_words(n, 7).into_iter().find(|w| p.accepts(w) && !pi.accepts(w));
        match (&got, &scan) {
            (Some(g), Some(s)) => assert_eq!(g, s),
            (None, Some(s)) => panic!("missed {s:?}"),
            (Some(g), None) => assert!(g.len() > 7 && p.accepts(g) && !pi.accepts(g)),
            (None, None) => {}
        }
    }
}

fn random_lta(rng: &mut impl Rng, states: std::ops::RangeInclusive<usize>, n: usize) -> Lta {
    let states = rng.gen_range(states);
    let mut m = Lta::new(n, states);
    for q in 0..states as u32 {
        for _ in 0..rng.gen_range(0..3) {
            let succ = (0..n).map(|_| rng.gen_range(0..states as u32)).collect();
            m.add_transition(q, rng.gen_bool(0.5), succ);
        }
    }
    m
}

/// Naive Kleene iteration of `F_M` from the empty set.
fn kleene_inactive(m: &Lta) -> Vec<bool> {
    let mut x = vec![false; m.num_states()];
    loop {
        let next: Vec<bool> = (0..m.num_states() as u32)
            .map(|q| m.transitions_of(q).all(|t| t.succ.iter().any(|&s| x[s as usize])))
            .collect();
        if next == x {
            return x;
        }
        x = next;
    }
}

#[test]
fn inactive_baseline_is_the_least_fixpoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..500 {
        let n = rng.gen_range(1..=3);
        let m = random_lta(&mut rng, 1..=6, n);
        let inact = inactive_baseline(&m);
        let naive = kleene_inactive(&m);
        for q in 0..m.num_states() as u32 {
            assert_eq!(inact.contains(q), naive[q as usize]);
            if !inact.contains(q) {
                assert!(m
                    .transitions_of(q)
                    .any(|t| t.succ.iter().all(|&s| !inact.contains(s))));
            }
        }
        for (i, t) in m.transitions().iter().enumerate() {
            if inact.contains(t.state) {
                let a = inact.witness(i).unwrap();
                let s = t.succ[a as usize];
                assert!(inact.rank(s).unwrap() < inact.rank(t.state).unwrap());
            }
        }
    }
}

#[test]
fn lta_constructions_agree_with_languages() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..500 {
        let n = rng.gen_range(1..=3);
        let l = random_dfa(&mut rng, 1..=4, n);
        let l2 = random_dfa(&mut rng, 1..=4, n);
        let p = random_dfa(&mut rng, 1..=4, n);
        let pw = lta_powerset(&l);
        let pw2 = lta_powerset(&l2);
        let inter = lta_intersect(&pw, &pw2).unwrap();
        let in1 = p.is_subset_of(&l);
        let in2 = p.is_subset_of(&l2);
        assert_eq!(accepts_language(&pw, &p), in1);
        assert_eq!(accepts_language(&inter, &p), in1 && in2);
        assert!(!is_empty(&pw));
        // singleton: accepts p itself, and another language iff equal
        let single = lta_singleton(&p);
        assert!(accepts_language(&single, &p));
        let equal = p.is_subset_of(&l) && l.is_subset_of(&p);
        assert_eq!(accepts_language(&single, &l), equal);
    }
}

#[test]
fn random_lta_intersection_membership() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let n = 2;
        let m1 = random_lta(&mut rng, 3..=3, n);
        let m2 = random_lta(&mut rng, 3..=3, n);
        let both = lta_intersect(&m1, &m2).unwrap();
        for _ in 0..20 {
            let p = random_dfa(&mut rng, 3..=3, n);
            assert_eq!(
                accepts_language(&both, &p),
                accepts_language(&m1, &p) && accepts_language(&m2, &p)
            );
        }
    }
}

fn random_antichain(rng: &mut impl Rng, n: usize) -> Antichain {
    (0..rng.gen_range(0..4))
        .map(|_| LetterSet::from_bits(rng.gen_range(0..(1u128 << n))))
        .collect()
}

fn downset(x: &Antichain, n: usize) -> BTreeSet<LetterSet> {
    LetterSet::full(n).subsets().filter(|&s| x.covers(s)).collect()
}

proptest! {
    #[test]
    fn join_and_meet_are_union_and_intersection_of_downsets(
        xs in proptest::collection::vec(0u128..16, 0..5),
        ys in proptest::collection::vec(0u128..16, 0..5),
    ) {
        let x: Antichain = xs.iter().map(|&b| LetterSet::from_bits(b)).collect();
        let y: Antichain = ys.iter().map(|&b| LetterSet::from_bits(b)).collect();
        let j = x.join(&y);
        let m = x.meet(&y);
        prop_assert!(j.is_antichain() && m.is_antichain());
        let dx = downset(&x, 4);
        let dy = downset(&y, 4);
        prop_assert_eq!(downset(&j, 4), dx.union(&dy).copied().collect::<BTreeSet<_>>());
        prop_assert_eq!(downset(&m, 4), dx.intersection(&dy).copied().collect::<BTreeSet<_>>());
    }

    #[test]
    fn sleep_along_word_matches_recurrence(
        word in proptest::collection::vec(0u32..4, 0..8),
        order in Just(vec![2u32, 0, 3, 1]).prop_shuffle(),
        pairs in proptest::collection::vec((0u32..4, 0u32..4), 0..6),
    ) {
        let d = DependenceRel::from_pairs(4, pairs);
        let r = OrderRel::from_sequence(4, &order);
        let folded = word.iter().fold(LetterSet::EMPTY, |s, &a| sleep_step(s, &r, a, &d));
        fn direct(x: &[Letter], r: &[Letter], d: &DependenceRel) -> BTreeSet<Letter> {
            match x.split_last() {
                None => BTreeSet::new(),
                Some((&a, prefix)) => {
                    let mut s = direct(prefix, r, d);
                    let pos = r.iter().position(|&b| b == a).unwrap();
                    s.extend(r[..pos].iter().copied());
                    s.retain(|&b| !d.dependent(a, b));
                    s
                }
            }
        }
        prop_assert_eq!(folded.iter().collect::<BTreeSet<_>>(), direct(&word, &order, &d));
    }
}

/// `F_M(⌊X⌋)` at `ι = ⊥` by enumerating every sleep set and every order.
fn fm_explicit(succ: &[Antichain], d: &DependenceRel, family: &[OrderRel]) -> BTreeSet<LetterSet> {
    let n = succ.len();
    LetterSet::full(n)
        .subsets()
        .filter(|&s| {
            family.iter().all(|r| {
                (0..n as Letter).any(|a| {
                    !s.contains(a) && succ[a as usize].covers(sleep_step(s, r, a, d))
                })
            })
        })
        .collect()
}

#[test]
fn fmax_matches_definition() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for round in 0..400 {
        let n = if round < 200 { 2 } else { rng.gen_range(1..=4) };
        let d = random_dependence(&mut rng, n);
        let succ: Vec<Antichain> = (0..n).map(|_| random_antichain(&mut rng, n)).collect();
        for orders in [OrderSource::Linear, OrderSource::Partition] {
            let family = orders.family(n).unwrap();
            let lit = fmax_literal(&succ, &d, &family);
            let fast = fmax_from_successors(&succ, &d, orders, &mut CheckStats::default());
            assert_eq!(fast, lit, "{orders:?} succ {succ:?} d {d:?}");
            assert!(fast.is_antichain());
            assert_eq!(downset(&fast, n), fm_explicit(&succ, &d, &family));
        }
    }
}

#[test]
fn partition_results_are_included_in_linear_results() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..300 {
        let n = rng.gen_range(1..=4);
        let d = random_dependence(&mut rng, n);
        let succ: Vec<Antichain> = (0..n).map(|_| random_antichain(&mut rng, n)).collect();
        let lin = fmax_from_successors(&succ, &d, OrderSource::Linear, &mut CheckStats::default());
        let part = fmax_from_successors(&succ, &d, OrderSource::Partition, &mut CheckStats::default());
        // fewer relations in the meet: more inactive sleep sets
        assert!(downset(&lin, n).is_subset(&downset(&part, n)));
    }
}

/// Verdict of the literal LTA construction.
fn baseline_covered(p: &Dfa, pi: &Dfa, d: &DependenceRel, orders: OrderSource) -> bool {
    let red = sleep_reduction_lta(p, d, orders).unwrap();
    let prod = lta_intersect(&red.lta, &lta_powerset(pi)).unwrap();
    !is_empty(&prod)
}

#[test]
fn engines_agree_with_baseline_lta() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..300 {
        let n = rng.gen_range(1..=3);
        let p = random_dfa(&mut rng, 1..=6, n);
        let pi = random_dfa(&mut rng, 1..=4, n);
        let d = random_dependence(&mut rng, n);
        for orders in [OrderSource::Linear, OrderSource::Partition] {
            let expect = baseline_covered(&p, &pi, &d, orders);
            for engine in [Engine::Antichain, Engine::Explicit] {
                let out = check(&p, &pi, &d, CheckConfig::new(orders).engine(engine)).unwrap();
                assert_eq!(out.verdict == Verdict::Covered, expect, "{orders:?} {engine:?}");
                if let Some(tree) = out.counterexample_tree() {
                    for w in tree.leaf_strings(1000) {
                        assert!(p.accepts(&w) && !pi.accepts(&w), "bad counterexample {w:?}");
                    }
                }
            }
        }
    }
}

#[test]
fn ignored_states_are_never_inactive() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let n = rng.gen_range(1..=3);
        let p = random_dfa(&mut rng, 1..=5, n);
        let pi = random_dfa(&mut rng, 1..=3, n);
        let d = random_dependence(&mut rng, n);
        let red = sleep_reduction_lta(&p, &d, OrderSource::Linear).unwrap();
        let pw = lta_powerset(&pi);
        // Build the product with explicit knowledge of which pairs carry ι = ⊤.
        let mut m = Lta::new(n, red.lta.num_states() * pi.num_states());
        let id = |r: u32, q: u32| r * pi.num_states() as u32 + q;
        for r in 0..red.lta.num_states() as u32 {
            for q in 0..pi.num_states() as u32 {
                for t1 in red.lta.transitions_of(r) {
                    for t2 in pw.transitions_of(q).filter(|t| t.label == t1.label) {
                        let succ = (0..n).map(|a| id(t1.succ[a], t2.succ[a])).collect();
                        m.add_transition(id(r, q), t1.label, succ);
                    }
                }
            }
        }
        let inact = inactive_baseline(&m);
        for (r, st) in red.states.iter().enumerate() {
            if st.ignored {
                for q in 0..pi.num_states() as u32 {
                    assert!(!inact.contains(id(r as u32, q)));
                }
            }
        }
    }
}

#[test]
fn baseline_tree_strings_are_counterexamples() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut trees = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=3);
        let p = random_dfa(&mut rng, 1..=5, n);
        let pi = random_dfa(&mut rng, 1..=3, n);
        let d = random_dependence(&mut rng, n);
        let red = sleep_reduction_lta(&p, &d, OrderSource::Linear).unwrap();
        let m = lta_intersect(&red.lta, &lta_powerset(&pi)).unwrap();
        let inact = inactive_baseline(&m);
        if let Some(tree) = build_counterexample_tree(&m, &inact) {
            trees += 1;
            for w in tree.leaf_strings(1000) {
                assert!(p.accepts(&w) && !pi.accepts(&w));
            }
        }
    }
    assert!(trees > 20);
}
