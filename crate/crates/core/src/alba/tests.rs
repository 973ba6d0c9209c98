use super::*;
use crate::normalize::meta_alpha_ac_eq;
use crate::oracle::{battery, equivalent, Formula};
use crate::syntax::{parse_ineq, parse_meta, parse_term};

fn modal() -> Signature {
    Signature::parse("f dia 1 (1)\ng box 1 (1)\n").unwrap()
}

fn ineq(s: &Signature, t: &str) -> Ineq {
    parse_ineq(t, s).unwrap()
}

fn term(s: &Signature, t: &str) -> Term {
    parse_term(t, s).unwrap()
}

fn eps(pairs: &[(&str, Ot)]) -> BTreeMap<String, Ot> {
    pairs.iter().map(|(v, o)| (v.to_string(), *o)).collect()
}

fn assert_equivalent(s: &Signature, i: &Ineq, m: &Meta) {
    let models = battery(s, 7);
    assert!(
        equivalent(&models, &Formula::Ineq(i.clone()), &Formula::Meta(m.clone())).unwrap(),
        "{} vs {}",
        print_ineq(i),
        print_meta(m)
    );
}

#[test]
fn residuation_examples() {
    let s = modal();
    let i = ineq(&s, "#j <= box(dia(#j) -> box(q))");
    let out = apply_residuation(&i, Side::Rhs, 0, &s).unwrap();
    assert_eq!(out, vec![ineq(&s, "boxb1(#j) <= dia(#j) -> box(q)")]);

    let i = ineq(&s, "dia(p) <= *m");
    assert_eq!(apply_residuation(&i, Side::Lhs, 0, &s).unwrap(), vec![ineq(&s, "p <= dia#1(*m)")]);

    let i = ineq(&s, "#j <= p \\/ q");
    assert_eq!(apply_residuation(&i, Side::Rhs, 0, &s).unwrap(), vec![ineq(&s, "#j -< q <= p")]);

    let i = ineq(&s, "#j <= p");
    assert!(matches!(apply_residuation(&i, Side::Rhs, 0, &s), Err(AlbaError::RuleNotApplicable(_))));
}

#[test]
fn approximation_examples() {
    let s = modal();
    let mut fresh = Fresh::new(["j".to_string()]);
    let i = ineq(&s, "#j <= dia(box(p))");
    let (main, side) = apply_approximation(&i, 0, &mut fresh, &s).unwrap();
    assert_eq!(main, ineq(&s, "#j <= dia(#j1)"));
    assert_eq!(side, ineq(&s, "#j1 <= box(p)"));

    let i = ineq(&s, "box(dia(p)) <= *m");
    let (main, side) = apply_approximation(&i, 0, &mut fresh, &s).unwrap();
    assert_eq!(main, ineq(&s, "box(*n1) <= *m"));
    assert_eq!(side, ineq(&s, "dia(p) <= *n1"));

    let i = ineq(&s, "#j <= box(p)");
    assert!(matches!(apply_approximation(&i, 0, &mut fresh, &s), Err(AlbaError::RuleNotApplicable(_))));
}

#[test]
fn adjoints() {
    let s = modal();
    let u = Term::Nom("u".into());
    assert_eq!(la_ra(&term(&s, "box(x)"), &[0], Adjoint::La, &u, &s).unwrap(), term(&s, "boxb1(#u)"));
    let u = Term::Conom("u".into());
    assert_eq!(la_ra(&term(&s, "dia(x)"), &[0], Adjoint::Ra, &u, &s).unwrap(), term(&s, "dia#1(*u)"));
    let u = Term::Nom("u".into());
    assert_eq!(
        la_ra(&term(&s, "box(dia(p) -> x)"), &[0, 1], Adjoint::La, &u, &s).unwrap(),
        term(&s, "boxb1(#u) /\\ dia(p)")
    );
    assert!(la_ra(&term(&s, "box(x /\\ p)"), &[0, 0], Adjoint::La, &u, &s).is_err());
}

#[test]
fn ackermann_example() {
    let s = modal();
    let sys = QuasiInequality {
        antecedent: vec![ineq(&s, "#j <= p"), ineq(&s, "#j <= box(dia(p) -> box(q))")],
        consequent: ineq(&s, "#j <= *m"),
    };
    let out = ackermann_eliminate(&sys, "p", Ot::One, &s).unwrap();
    assert_eq!(out.antecedent, vec![ineq(&s, "#j <= box(dia(#j) -> box(q))")]);
    assert_eq!(ackermann_eliminate(&sys, "r", Ot::One, &s).unwrap().antecedent.len(), 2);
    let bad = QuasiInequality {
        antecedent: vec![ineq(&s, "#j <= p"), ineq(&s, "#j <= box(p)")],
        consequent: ineq(&s, "#j <= *m"),
    };
    assert!(matches!(ackermann_eliminate(&bad, "p", Ot::One, &s), Err(AlbaError::NotInAckermannShape { .. })));
}

#[test]
fn goranko_output() {
    let s = modal();
    let i = ineq(&s, "p /\\ box(dia(p) -> box(q)) <= dia(box(box(q)))");
    let run = run_alba(&i, &s).unwrap();
    let want = parse_meta("A j:nom. #j <= dia(box(box(boxb1(boxb1(#j) /\\ dia(#j)))))", &s).unwrap();
    assert!(meta_alpha_ac_eq(&run.output, &want), "{}", print_meta(&run.output));
    assert_equivalent(&s, &i, &run.systems[0].to_meta());
    assert_equivalent(&s, &i, &run.output);

    let w = InductiveWitness { epsilon: eps(&[("p", Ot::One), ("q", Ot::One)]), omega: [("p".into(), "q".into())].into() };
    let mv = minimal_valuations(&i, &w, &s).unwrap();
    let Term::Nom(j) = &mv["p"].aggregate else { panic!("{:?}", mv["p"]) };
    let want = term(&s, &format!("boxb1(dia(#{j}) /\\ boxb1(#{j}))"));
    assert_eq!(crate::normalize::ac_term(&mv["q"].aggregate), crate::normalize::ac_term(&want));
}

#[test]
fn transitivity_condensed() {
    let s = modal();
    let i = ineq(&s, "box(p) <= box(box(p))");
    let run = run_alba(&i, &s).unwrap();
    let cond = parse_meta("A i:nom. A m:conom. #i <= box(*m) ==> #i <= box(box(*m))", &s).unwrap();
    assert!(meta_alpha_ac_eq(&run.condensed[0].to_meta(), &cond), "{}", print_meta(&run.condensed[0].to_meta()));
    let pure = parse_meta("A m:conom. box(*m) <= box(box(*m))", &s).unwrap();
    assert!(meta_alpha_ac_eq(&run.output, &pure), "{}", print_meta(&run.output));
    assert_equivalent(&s, &i, &run.output);
}

#[test]
fn morecomplex_valuation() {
    let s = modal();
    let i = ineq(&s, "dia((p /\\ q) -> r) /\\ box(q) <= box(dia(p) -> dia(q /\\ r))");
    let run = run_alba(&i, &s).unwrap();
    let want = parse_meta(
        "A i:nom. A h:nom. A k:nom. A n:conom. \
         dia(boxb1(#h) /\\ #i /\\ #k /\\ boxb1(#h)) <= *n ==> dia(#i) /\\ #h <= box(dia(#k) -> *n)",
        &s,
    )
    .unwrap();
    assert!(meta_alpha_ac_eq(&run.condensed[0].to_meta(), &want), "{}", print_meta(&run.condensed[0].to_meta()));
    assert_eq!(run.condensed[0].slots.values().filter(|s| **s == Slot::Alpha).count(), 3);
    assert_equivalent(&s, &i, &run.output);
    assert_equivalent(&s, &i, &run.systems[0].to_meta());
}

#[test]
fn rejects_non_inductive() {
    let s = modal();
    let i = ineq(&s, "box(dia(p)) <= dia(box(p))");
    assert!(matches!(run_alba(&i, &s), Err(AlbaError::NotInductive(_))));
}

#[test]
fn preprocess_splits_and_eliminates() {
    let s = modal();
    let i = ineq(&s, "dia(p \\/ q) <= box(r)");
    let out = preprocess(&i, &s);
    assert!(out.iter().all(|x| !x.lhs.any(&|t| matches!(t, Term::Join(..)))), "{out:?}");
    let i = ineq(&s, "p <= dia(q)");
    let out = preprocess(&i, &s);
    assert_eq!(out, vec![ineq(&s, "top <= bot")]);
}

#[test]
fn preprocess_preserves_validity() {
    let s = modal();
    for t in ["dia(p \\/ q) /\\ r <= box(p /\\ q)", "box(p) /\\ (q \\/ r) <= dia(q)", "dia(p) \\/ q <= box(q) /\\ dia(p)"] {
        let i = ineq(&s, t);
        let parts = preprocess(&i, &s);
        let m = Meta::and(parts.into_iter().map(Meta::Ineq).collect());
        assert_equivalent(&s, &i, &m);
    }
}

#[test]
fn corpus_runs_agree_with_oracle() {
    let s = modal();
    for t in [
        "p <= dia(p)",
        "box(p) <= p",
        "dia(box(p)) <= box(dia(p))",
        "dia(dia(p)) <= dia(p)",
        "p <= box(dia(p))",
        "dia(p /\\ q) <= q \\/ box(dia(box(dia(p))))",
        "box(p -> q) <= box(p) -> box(q)",
        "p /\\ dia(q) <= dia(q /\\ dia(p))",
    ] {
        let i = ineq(&s, t);
        let run = run_alba(&i, &s).unwrap_or_else(|e| panic!("{t}: {e}"));
        assert_equivalent(&s, &i, &run.output);
        for q in &run.systems {
            assert!(q.is_pure());
        }
    }
}

#[test]
fn uniform_elimination_uses_normality() {
    let s = modal();
    let t = |x: &str| parse_term(x, &s).unwrap();
    assert_eq!(simplify_normal(&t("box(p) \\/ dia(bot)"), &s), t("box(p)"));
    assert_eq!(simplify_normal(&t("box(top) /\\ (bot -> p)"), &s), Term::Top);
    assert_eq!(simplify_normal(&t("dia(top)"), &s), t("dia(top)"));
    let i = parse_ineq("box(p) <= box(box(p)) \\/ dia(q)", &s).unwrap();
    assert_eq!(preprocess(&i, &s), vec![parse_ineq("box(p) <= box(box(p))", &s).unwrap()]);
}
