use std::collections::BTreeMap;

use proptest::prelude::*;

use super::*;
use crate::signature::Signature;

fn modal() -> Signature {
    Signature::parse("f dia 1 (1)\ng box 1 (1)\n").unwrap()
}

fn lambek() -> Signature {
    Signature::parse("f e 0 ()\nf circ 2 (1,1)\ng under 2 (d,1)\ng over 2 (1,d)\n").unwrap()
}

#[test]
fn parses_goranko() {
    let s = modal();
    let i = parse_ineq("p /\\ box(dia(p) -> box(q)) <= dia(box(box(q)))", &s).unwrap();
    assert_eq!(
        i.lhs,
        meet(var("p"), app("box", vec![app("->", vec![app("dia", vec![var("p")]), app("box", vec![var("q")])])]))
    );
    assert_eq!(print_ineq(&i), "p /\\ box(dia(p) -> box(q)) <= dia(box(box(q)))");
}

#[test]
fn parses_pure_inequality() {
    let s = modal();
    assert_eq!(parse_meta("#j <= *m", &s).unwrap(), Meta::ineq(nom("j"), conom("m")));
}

#[test]
fn arity_error() {
    let s = modal();
    assert!(matches!(parse_term("box(p q)", &s), Err(ParseError::ArityError { .. })));
    assert!(matches!(parse_term("box(p, q)", &s), Err(ParseError::ArityError { .. })));
    assert!(matches!(parse_term("foo(p)", &s), Err(ParseError::UnknownConnective(_))));
}

#[test]
fn meet_prints_right_nested() {
    let s = modal();
    let t = parse_term("p /\\ q /\\ r", &s).unwrap();
    assert_eq!(print_term(&t), "p /\\ (q /\\ r)");
    let t = parse_term("k(#j) \\/ l(*m)", &s).unwrap();
    assert_eq!(print_term(&t), "k(#j) \\/ l(*m)");
}

#[test]
fn constants_and_residual_names() {
    let s = lambek();
    let t = parse_term("circ(e(), circ#1(p, q))", &s).unwrap();
    assert_eq!(print_term(&t), "circ(e(), circ#1(p, q))");
}

#[test]
fn substitution_examples() {
    let s = modal();
    let t = parse_term("dia(#j) /\\ boxb1(#j)", &s).unwrap();
    let mut b = BTreeMap::new();
    b.insert(Leaf::nom("j"), var("p"));
    assert_eq!(print_term(&t.subst(&b)), "dia(p) /\\ boxb1(p)");

    let t = parse_term("dia(p) -> box(q)", &s).unwrap();
    let mut b = BTreeMap::new();
    b.insert(Leaf::var("p"), nom("j"));
    assert_eq!(print_term(&t.subst(&b)), "dia(#j) -> box(q)");
}

#[test]
fn substitution_is_simultaneous() {
    let s = modal();
    let t = parse_term("p /\\ dia(q)", &s).unwrap();
    let mut b = BTreeMap::new();
    b.insert(Leaf::var("p"), var("q"));
    b.insert(Leaf::var("q"), var("p"));
    assert_eq!(print_term(&t.subst(&b)), "q /\\ dia(p)");
}

#[test]
fn substitution_sort_error() {
    let s = modal();
    let t = parse_term("dia(#j)", &s).unwrap();
    let mut b = BTreeMap::new();
    b.insert(Leaf::nom("j"), conom("m"));
    assert_eq!(t.subst_checked(&b), Err(SyntaxError::SortError("j".into())));
}

#[test]
fn polarity_examples() {
    let s = modal();
    let t = parse_term("dia(p) -> box(q)", &s).unwrap();
    assert_eq!(t.signs_of(Sign::Plus, &Leaf::var("p"), &s), vec![Sign::Minus]);
    assert_eq!(t.signs_of(Sign::Minus, &Leaf::var("q"), &s), vec![Sign::Minus]);
    let t = parse_term("p /\\ box(dia(p) -> box(q))", &s).unwrap();
    assert_eq!(t.signs_of(Sign::Plus, &Leaf::var("p"), &s), vec![Sign::Plus, Sign::Minus]);
}

#[test]
fn polarity_propagation_exhaustive() {
    for s in [modal(), lambek()] {
        for c in s.expanded() {
            let args: Vec<Term> = (0..c.arity()).map(|i| var(&format!("x{i}"))).collect();
            let t = Term::App(c.name.clone(), args);
            for i in 0..c.arity() {
                for root in [Sign::Plus, Sign::Minus] {
                    let got = t.signs_of(root, &Leaf::var(&format!("x{i}")), &s);
                    let same = c.order_type.get(i) == crate::signature::Ot::One;
                    assert_eq!(got, vec![if same { root } else { root.flip() }]);
                }
            }
        }
    }
}

#[test]
fn flip_examples() {
    let s = modal();
    let neg = parse_ineq("dia(p) <= *m", &s).unwrap();
    assert_eq!(print_ineq(&flip(&neg).unwrap()), "l(*m) <= dia(p)");
    let neg = parse_ineq("#j <= box(p)", &s).unwrap();
    assert_eq!(print_ineq(&flip(&neg).unwrap()), "box(p) <= k(#j)");
    let neg = parse_ineq("p <= q", &s).unwrap();
    assert_eq!(flip(&neg), Err(SyntaxError::NotFlippable));
}

#[test]
fn flip_round_trip() {
    let s = modal();
    for text in ["dia(p) <= *m", "#j <= box(p)", "#j <= *m", "l(*n) <= box(#i)"] {
        let neg = parse_ineq(text, &s).unwrap();
        assert_eq!(unflip(&flip(&neg).unwrap()).unwrap(), neg, "{text}");
    }
}

#[test]
fn restricted_quantifier_expansion() {
    let s = modal();
    let m = parse_meta("A[*n >box *o]. dia(#j) <= *n", &s).unwrap();
    assert_eq!(print_meta(&m.expand_restricted(&s)), "A n:conom. box(*n) <= *o ==> dia(#j) <= *n");
    let m = parse_meta("E[#k >boxb1 #j]. #k <= *m", &s).unwrap();
    assert_eq!(print_meta(&m.expand_restricted(&s)), "E k:nom. #j <= boxb1(#k) && #k <= *m");
}

#[test]
fn contract_inverts_expand_on_confluence() {
    let s = modal();
    let text = "A i:nom. A[#j >dia #i]. A[#h >boxb1 #i]. E[#k >boxb1 #j]. #i <= dia(#k)";
    let m = parse_meta(text, &s).unwrap();
    let e = m.expand_restricted(&s);
    assert_eq!(e.contract_restricted(&s), m);
    assert_eq!(print_meta(&m), text);
}

#[test]
fn capture_avoiding_meta_substitution() {
    let s = modal();
    let m = parse_meta("A j:nom. #j <= p", &s).unwrap();
    let mut b = BTreeMap::new();
    b.insert(Leaf::var("p"), nom("j"));
    let r = m.subst(&b);
    match &r {
        Meta::Forall(_, n, body) => {
            assert_ne!(n, "j");
            assert_eq!(**body, Meta::ineq(nom(n), nom("j")));
        }
        _ => panic!("{r:?}"),
    }
}

#[test]
fn kappa_lambda_collapse() {
    assert_eq!(kappa(lambda(conom("m"))), conom("m"));
    assert_eq!(lambda(kappa(nom("j"))), nom("j"));
}

fn arb_term(sig: Signature) -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        "[pqr]".prop_map(Term::Var),
        "[ij][0-9]?".prop_map(Term::Nom),
        "[mn][0-9]?".prop_map(Term::Conom),
        Just(Term::Top),
        Just(Term::Bot),
    ];
    let names: Vec<(String, usize)> = sig.expanded().map(|c| (c.name.clone(), c.arity())).collect();
    leaf.prop_recursive(4, 32, 3, move |inner| {
        let names = names.clone();
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| meet(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| join(a, b)),
            inner.clone().prop_map(|a| Term::Kappa(Box::new(a))),
            inner.clone().prop_map(|a| Term::Lambda(Box::new(a))),
            (0..names.len(), proptest::collection::vec(inner, 3)).prop_map(move |(k, args)| {
                let (n, ar) = &names[k];
                Term::App(n.clone(), args.into_iter().take(*ar).collect())
            }),
        ]
    })
}

fn arb_meta(sig: Signature) -> impl Strategy<Value = Meta> {
    let s2 = sig.clone();
    let atom = (arb_term(sig.clone()), arb_term(sig.clone()), any::<bool>()).prop_map(|(a, b, neg)| {
        if neg { Meta::NegIneq(Ineq::new(a, b)) } else { Meta::Ineq(Ineq::new(a, b)) }
    });
    atom.prop_recursive(3, 16, 3, move |inner| {
        let s3 = s2.clone();
        prop_oneof![
            proptest::collection::vec(inner.clone(), 2..4).prop_map(Meta::And),
            proptest::collection::vec(inner.clone(), 2..4).prop_map(Meta::Or),
            inner.clone().prop_map(|m| Meta::Not(Box::new(m))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Meta::imp(a, b)),
            (any::<bool>(), "[ij][0-9]", inner.clone()).prop_map(|(u, n, b)| if u {
                Meta::forall(Sort::Nom, &n, b)
            } else {
                Meta::exists(Sort::Conom, &n, b)
            }),
            (any::<bool>(), inner, arb_term(s3.clone())).prop_map({
                let s4 = s3.clone();
                move |(u, b, r)| {
                    let vars = restricted_sorts(&s4, "box").into_iter().map(|s| (s, "u1".to_string())).collect();
                    let rq = Restriction { vars, conn: "box".into(), restrictor: r };
                    if u { Meta::RForall(rq, Box::new(b)) } else { Meta::RExists(rq, Box::new(b)) }
                }
            }),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn term_round_trip_modal(t in arb_term(modal())) {
        let s = modal();
        prop_assert_eq!(parse_term(&print_term(&t), &s).unwrap(), t);
    }

    #[test]
    fn term_round_trip_lambek(t in arb_term(lambek())) {
        let s = lambek();
        prop_assert_eq!(parse_term(&print_term(&t), &s).unwrap(), t);
    }

    #[test]
    fn meta_round_trip(m in arb_meta(modal())) {
        let s = modal();
        prop_assert_eq!(parse_meta(&print_meta(&m), &s).unwrap(), m);
    }
}
