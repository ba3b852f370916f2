use super::*;
use crate::frontend::{load_program, LowerOptions};
use crate::logic::CmpOp;
use crate::smt::DEFAULT_SOLVER;

fn program(src: &str) -> Program {
    load_program(src, LowerOptions::default()).unwrap()
}

fn db(p: &Program) -> ProofDb {
    ProofDb::new(p, DEFAULT_SOLVER, None).unwrap()
}

fn x() -> LinExpr {
    LinExpr::var("x")
}

fn k(c: Int) -> LinExpr {
    LinExpr::constant(c)
}

fn eq(c: Int) -> Formula {
    Formula::cmp(&x(), CmpOp::Eq, &k(c))
}

#[test]
fn triples_from_the_contract() {
    // letters: 0 x := x + 1, 1 assume(x < 0)
    let p = program("var x; x := x + 1; assume(x < 0);");
    let mut db = db(&p);
    let (x0, _) = db.add_assertion(eq(0));
    let (x1, _) = db.add_assertion(eq(1));
    let (neg, _) = db.add_assertion(Formula::cmp(&x(), CmpOp::Lt, &k(0)));
    assert!(db.hoare_valid(x0, 0, x1).unwrap());
    assert!(db.hoare_valid(TRUE, 1, neg).unwrap());
    assert!(!db.hoare_valid(x1, 0, x1).unwrap());
    // cached answers agree with a fresh process
    let mut fresh = db.fresh_solver().unwrap();
    for ((p, a, q), v) in db.cached_triples() {
        assert_eq!(db.requery(&mut fresh, p, a, q).unwrap(), v);
    }
}

#[test]
fn false_absorbs_and_true_is_not_final() {
    let p = program("var x; assume(false); x := 1;");
    let mut db = db(&p);
    let nfa = db.build_proof_nfa().unwrap();
    assert!(!nfa.is_final(TRUE) && nfa.is_final(FALSE));
    for a in 0..2 {
        assert!(nfa.edges(FALSE).contains(&(a, FALSE)));
        assert!(nfa.edges(TRUE).contains(&(a, TRUE)));
    }
    assert!(nfa.edges(TRUE).contains(&(0, FALSE)));
    assert!(nfa.accepts(&[0]));
    assert!(!nfa.accepts(&[1]));
}

#[test]
fn wp_interpolants_prove_their_trace() {
    let p = program("var x; assume(x = 0); x := x + 1; assume(x = 0);");
    let mut db = db(&p);
    db.set_interpolation(Interpolation::Wp);
    let seq = db.interpolate(&[0, 1, 2]).unwrap();
    let shown: Vec<String> = seq.iter().map(ToString::to_string).collect();
    assert_eq!(shown, ["true", "x != -1", "x != 0", "false"]);
    for f in seq {
        db.add_assertion(f);
    }
    assert!(db.build_proof_nfa().unwrap().accepts(&[0, 1, 2]));
}

#[test]
fn farkas_interpolants_are_checked() {
    let p = program("var x; assume(x > 0); assume(x < 0);");
    let mut db = db(&p);
    let seq = db.interpolate(&[0, 1]).unwrap();
    assert_eq!(seq.len(), 3);
    assert!(db.triple_valid(&seq[0], 0, &seq[1]).unwrap());
    assert!(db.triple_valid(&seq[1], 1, &seq[2]).unwrap());
    assert_eq!(db.stats().farkas_sequences, 1);
}

#[test]
fn farkas_handles_disjunctive_assumptions() {
    let p = program("var x, y; x := y; x := x + 1; assume(x != y + 1);");
    let mut db = db(&p);
    let seq = db.interpolate(&[0, 1, 2]).unwrap();
    assert_eq!(db.stats().farkas_sequences, 1);
    assert_eq!(seq[2].to_string(), "x - y = 1");
}

#[test]
fn input_equalities_are_kept_and_reduced() {
    let src = "var a1, a2, x1, x2; assume(a1 = a2); x1 := a1; x2 := a2; assume(x1 != x2);";
    let p = program(src);
    let mut db = db(&p);
    let seq = db.interpolate(&[0, 1, 2, 3]).unwrap();
    assert_eq!(db.stats().farkas_sequences, 1);
    // every intermediate assertion carries a1 = a2 and mentions only one of them otherwise
    for f in &seq[1..4] {
        let s = f.to_string();
        assert!(s.contains("a1 - a2 = 0") || s.contains("-a1 + a2 = 0"), "{s}");
    }
}

#[test]
fn feasibility_and_models() {
    let p = program("var x; assume(x > 0); assume(x < 0); x := 0; assume(x = 0);");
    let mut db = db(&p);
    assert_eq!(db.feasible(&[0, 1]).unwrap(), Feasibility::Infeasible);
    match db.feasible(&[2, 3]).unwrap() {
        Feasibility::Feasible(m) => assert!(m.contains_key("x")),
        other => panic!("{other:?}"),
    }
    assert!(matches!(db.interpolate(&[2, 3]), Err(ProofError::Feasible)));
}

#[test]
fn lazy_dfa_agrees_with_the_nfa_on_program_words() {
    let src = "var x, y; x := 0; while (x < 2) { x := x + 1; } assume(x != 2);";
    let p = program(src);
    let mut db = db(&p);
    for w in p.dfa.words_up_to(8) {
        if db.feasible(&w).unwrap() == Feasibility::Infeasible {
            for f in db.interpolate(&w).unwrap() {
                db.add_assertion(f);
            }
        }
    }
    let nfa = db.build_proof_nfa().unwrap();
    let aut = db.build_proof_dfa(&p.dfa).unwrap();
    for w in p.dfa.words_up_to(8) {
        assert_eq!(aut.dfa.accepts(&w), nfa.accepts(&w), "{w:?}");
    }
    for &(q, a, r) in &aut.used {
        assert!(db.hoare_valid(q, a, r).unwrap());
    }
}

#[test]
fn proof_languages_grow_with_the_proof() {
    let p = program("var x; { x := x + 1; } || { assume(x > 0); } assume(x = 0);");
    let words = Dfa::universal(p.num_letters()).words_up_to(6);
    let mut db = db(&p);
    let before = db.build_proof_nfa().unwrap();
    db.add_assertion(Formula::cmp(&x(), CmpOp::Gt, &k(0)));
    db.add_assertion(Formula::cmp(&x(), CmpOp::Ge, &k(0)));
    let after = db.build_proof_nfa().unwrap();
    let mut grew = false;
    for w in &words {
        if before.accepts(w) {
            assert!(after.accepts(w));
        }
        grew |= after.accepts(w) && !before.accepts(w);
    }
    assert!(grew);
}

#[test]
fn commuting_statements_pass_the_dependence_check() {
    let src = "var x, y, z; { x := x + 1; z := 1; } || { y := y + 2; z := 2; }";
    let p = program(src);
    let mut db = db(&p);
    assert!(db.check_dependence_soundness(&p.dependence).unwrap().is_empty());
    let wrong = hyperweave_core::DependenceRel::identity(p.num_letters());
    let bad = db.check_dependence_soundness(&wrong).unwrap();
    // x := x + 1 and z := 1 commute; z := 1 and z := 2 do not
    assert!(!bad.contains(&(0, 1)));
    assert!(bad.contains(&(1, 3)));
}
