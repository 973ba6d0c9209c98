use super::*;
use crate::syntax::parse_ineq;

fn modal() -> Signature {
    Signature::parse("f dia 1 (1)\ng box 1 (1)\n").unwrap()
}

fn tense() -> Signature {
    Signature::parse(
        "f dia 1 (1)\nf bdia 1 (1)\ng box 1 (1)\ng bbox 1 (1)\n\
         alias bdia = boxb1\nalias bbox = dia#1\nalias box = bdia#1\nalias dia = bboxb1\n",
    )
    .unwrap()
}

fn eps(pairs: &[(&str, Ot)]) -> BTreeMap<String, Ot> {
    pairs.iter().map(|(v, o)| (v.to_string(), *o)).collect()
}

fn ineq(s: &Signature, text: &str) -> Ineq {
    parse_ineq(text, s).unwrap()
}

#[test]
fn goranko_is_inductive_not_sahlqvist() {
    let s = modal();
    let i = ineq(&s, "p /\\ box(dia(p) -> box(q)) <= dia(box(box(q)))");
    let c = classify_inequality(&i, &s);
    assert_eq!(c.label, Label::Inductive);
    let b = c.best().unwrap();
    assert_eq!(b.witness.epsilon, eps(&[("p", Ot::One), ("q", Ot::One)]));
    assert!(b.witness.less("p", "q"));
    assert_eq!(c.analyses.len(), 1);
    assert!(check_witness(&i, &s, &b.witness));
}

#[test]
fn transitivity_prefers_dual() {
    let s = modal();
    let i = ineq(&s, "box(p) <= box(box(p))");
    let c = classify_inequality(&i, &s);
    let b = c.best().unwrap();
    assert_eq!(b.label, Label::VerySimpleSahlqvist);
    assert_eq!(b.witness.eps("p"), Ot::Dual);
    assert!(c.analyses.iter().any(|a| a.witness.eps("p") == Ot::One && a.label == Label::Sahlqvist));
}

#[test]
fn confluence_inductive() {
    let s = modal();
    let i = ineq(&s, "dia(box(p)) <= box(dia(p))");
    let w = find_inductive(&i, &s).unwrap();
    assert!(check_witness(&i, &s, &w));
    let one = analyse(&i, &s, &eps(&[("p", Ot::One)])).unwrap();
    assert_eq!(one.label, Label::Sahlqvist);
}

#[test]
fn tense_vss_not_crypto() {
    let s = tense();
    let i = ineq(&s, "bdia(p) <= bbox(p)");
    assert_eq!(classify_inequality(&i, &s).label, Label::VerySimpleSahlqvist);
    // Both bdia and bbox are in the base here; check the modal-only base.
    let m = Signature::parse("f dia 1 (1)\ng box 1 (1)\n").unwrap();
    let j = ineq(&m, "boxb1(p) <= dia#1(p)");
    assert_eq!(classify_inequality(&j, &m).label, Label::VerySimpleSahlqvist);
    assert!(is_crypto_inductive(&j, &m).is_none());
}

#[test]
fn second_goranko_vss() {
    let s = modal();
    let i = ineq(&s, "dia(p /\\ q) <= q \\/ box(dia(box(dia(p))))");
    let c = classify_inequality(&i, &s);
    assert_eq!(c.label, Label::VerySimpleSahlqvist);
    assert!(c
        .analyses
        .iter()
        .any(|a| a.witness.epsilon == eps(&[("p", Ot::One), ("q", Ot::Dual)]) && a.label == Label::VerySimpleSahlqvist));
}

#[test]
fn morecomplex_picks_all_one() {
    let s = modal();
    let i = ineq(&s, "dia((p /\\ q) -> r) /\\ box(q) <= box(dia(p) -> dia(q /\\ r))");
    let c = classify_inequality(&i, &s);
    let b = c.best().unwrap();
    assert_eq!(b.witness.epsilon, eps(&[("p", Ot::One), ("q", Ot::One), ("r", Ot::One)]));
    assert!(b.witness.less("p", "r") && b.witness.less("q", "r"));
    assert!(b.definite && b.canonical);
    for a in &c.analyses {
        assert!(check_witness(&i, &s, &a.witness), "{}", a.witness);
    }
}

#[test]
fn dia_box_dia_branch_not_good() {
    let s = modal();
    let t = crate::syntax::parse_term("dia(box(dia(p)))", &s).unwrap();
    let st = classify_tree(&t, Sign::Plus, &s);
    assert!(!is_good_branch(&st, &[0, 0, 0]));
    let t = crate::syntax::parse_term("dia(box(p))", &s).unwrap();
    let st = classify_tree(&t, Sign::Plus, &s);
    assert!(is_good_branch(&st, &[0, 0]));
}

#[test]
fn table_one_roles() {
    let s = modal();
    let t = crate::syntax::parse_term("box(p)", &s).unwrap();
    assert_eq!(node_class(&t, Sign::Minus, &s), NodeClass::Inner(vec![Role::Slr]));
    assert_eq!(node_class(&t, Sign::Plus, &s), NodeClass::Inner(vec![Role::Sra]));
    let t = crate::syntax::parse_term("p -> q", &s).unwrap();
    assert_eq!(node_class(&t, Sign::Plus, &s), NodeClass::Inner(vec![Role::Srr]));
    assert_eq!(node_class(&t, Sign::Minus, &s), NodeClass::Inner(vec![Role::Slr]));
    let t = crate::syntax::parse_term("k(#j)", &s).unwrap();
    assert_eq!(node_class(&t, Sign::Plus, &s), NodeClass::Inner(vec![]));
}

#[test]
fn goranko_vss_is_crypto() {
    let s = tense();
    let i = ineq(&s, "p1 /\\ p2 <= box(box(bdia(dia(p1) /\\ bdia(p2))))");
    assert_eq!(classify_inequality(&i, &s).label, Label::VerySimpleSahlqvist);
    let m = modal();
    let j = ineq(&m, "p1 /\\ p2 <= box(box(boxb1(dia(p1) /\\ boxb1(p2))))");
    assert_eq!(classify_inequality(&j, &m).label, Label::VerySimpleSahlqvist);
    assert!(is_crypto_inductive(&j, &m).is_some());
}

#[test]
fn decomposition_of_goranko() {
    let s = modal();
    let i = ineq(&s, "p /\\ box(dia(p) -> box(q)) <= dia(box(box(q)))");
    let a = analyse(&i, &s, &eps(&[("p", Ot::One), ("q", Ot::One)])).unwrap();
    let slots: Vec<Slot> = a.pieces.iter().map(|p| p.slot).collect();
    assert_eq!(slots, vec![Slot::Alpha, Slot::Alpha, Slot::Delta]);
    assert_eq!(crate::syntax::print_ineq(&a.skeleton), "_x0 /\\ _x1 <= _w2");
}

#[test]
fn cyclic_dependency_rejected() {
    let s = modal();
    let i = ineq(&s, "box(p -> q) /\\ box(q -> p) <= bot");
    let c = classify_inequality(&i, &s);
    for a in &c.analyses {
        assert!(!(a.witness.eps("p") == Ot::One && a.witness.eps("q") == Ot::One));
    }
}

mod props {
    use super::*;
    use proptest::prelude::*;

    fn arb(depth: u32) -> BoxedStrategy<Term> {
        let leaf = prop_oneof![Just(var("p")), Just(var("q")), Just(Term::Top)].boxed();
        leaf.prop_recursive(depth, 16, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| crate::syntax::meet(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| crate::syntax::join(a, b)),
                inner.clone().prop_map(|a| crate::syntax::app("dia", vec![a])),
                inner.clone().prop_map(|a| crate::syntax::app("box", vec![a])),
                (inner.clone(), inner).prop_map(|(a, b)| crate::syntax::app("->", vec![a, b])),
            ]
        })
        .boxed()
    }

    use crate::syntax::var;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn analyses_pass_independent_check(a in arb(4), b in arb(4)) {
            let s = modal();
            let i = Ineq::new(a, b);
            for an in all_analyses(&i, &s) {
                prop_assert!(check_witness(&i, &s, &an.witness));
            }
        }
    }
}
