use super::*;
use crate::kracht::{inductive_to_kracht, kracht_shape, NotKrachtReason};
use crate::normalize::ineq_alpha_ac_eq;
use crate::oracle::{battery, equivalent, Formula};
use crate::syntax::{parse_ineq, parse_meta};

fn modal() -> Signature {
    Signature::parse("f dia 1 (1)\ng box 1 (1)\n").unwrap()
}

fn lambek() -> Signature {
    crate::corpus::builtin_signature("lambek").unwrap()
}

fn ineq(s: &Signature, t: &str) -> Ineq {
    parse_ineq(t, s).unwrap()
}

fn assert_alpha(got: &Ineq, want: &Ineq) {
    assert!(ineq_alpha_ac_eq(got, want), "got {}, want {}", print_ineq(got), print_ineq(want));
}

fn assert_equivalent(s: &Signature, a: &Formula, b: &Formula) {
    let models = battery(s, 7);
    assert!(equivalent(&models, a, b).unwrap(), "{a:?}\nvs\n{b:?}");
}

const GORANKO: &str = "A j:nom. A m:conom. A h1:nom. A h2:nom. (#j <= #h1 && #j <= #h2 && #j !<= *m) ==> \
    E[#i1 >dia l(*m)]. A[*n1 >box k(#i1)]. A[*n2 >box *n1]. E[#i2 >boxb1 l(*n2)]. \
    (#i2 <= dia(#h1) && #i2 <= boxb1(#h2))";

const SECOND_GORANKO: &str = "A j:nom. A m:conom. A h1:nom. A h2:nom. A[#i1 >dia #j]. A[*n1 >box *m]. \
    (#i1 <= #h1 && #i1 <= #h2 && #j !<= *m) ==> \
    (l(*m) <= #h2 || E[#i2 >dia l(*n1)]. A[*n2 >box k(#i2)]. l(*n2) <= dia(#h1))";

// The inner universal disjunct is written with a join of items and the
// nominal bound as `#j <= k(#i5)`; only this reading compacts to
// `i4 <= (i2 circ j) over j`.
const LAMBEK: &str = "A j:nom. A m:conom. A h1:nom. A[*n1,#i1 >over *m]. A[#i2,*n2 >under *n1]. \
    (#i1 <= #h1 && #j !<= *m) ==> \
    E[#i3,#i4 >circ l(*n2)]. (#i3 <= #i2 && A[*n5,#i5 >over k(#i4)]. (l(*n5) <= circ(#i2, #j) || #j <= k(#i5)))";

#[test]
fn goranko_chain() {
    let s = modal();
    let r = inverse_alba(&parse_meta(GORANKO, &s).unwrap(), &s).unwrap();
    assert_eq!(r.compacted.len(), 1);
    let want = ineq(&s, "l(*o1) <= dia(box(box(boxb1(dia(#h1) /\\ boxb1(#h2)))))");
    assert_alpha(&r.compacted[0], &want);
    assert_eq!(print_term(&r.phi), "#h1 /\\ #h2");
    assert_alpha(&r.vss, &ineq(&s, "p1 /\\ p2 <= dia(box(box(boxb1(dia(p1) /\\ boxb1(p2)))))"));
    // Without the outer diamond the result would not be equivalent.
    assert!(!ineq_alpha_ac_eq(&r.vss, &ineq(&s, "p1 /\\ p2 <= box(box(boxb1(dia(p1) /\\ boxb1(p2))))")));
    assert!(r.flags.is_empty(), "{:?}", r.flags);
    assert!(proper_connectives(&r.inductive, &s).is_empty());
    let goranko = ineq(&s, "p /\\ box(dia(p) -> box(q)) <= dia(box(box(q)))");
    assert_equivalent(&s, &Formula::Ineq(r.inductive.clone()), &Formula::Ineq(goranko.clone()));
    assert_equivalent(&s, &Formula::Ineq(r.vss.clone()), &Formula::Ineq(goranko));
    assert_equivalent(&s, &Formula::Meta(r.quasi.to_meta()), &Formula::Ineq(r.vss.clone()));
}

#[test]
fn second_goranko_chain() {
    let s = modal();
    let r = inverse_alba(&parse_meta(SECOND_GORANKO, &s).unwrap(), &s).unwrap();
    assert_eq!(r.compacted.len(), 2);
    assert!(r.compacted.iter().any(|c| ineq_alpha_ac_eq(c, &ineq(&s, "l(*n1) <= dia(box(dia(#h1)))"))));
    let want_quasi = parse_meta(
        "A h1:nom. A h2:nom. A o:conom. A n1:conom. (#h2 <= *o && dia(box(dia(#h1))) <= *n1) ==> dia(#h1 /\\ #h2) <= *o \\/ box(*n1)",
        &s,
    )
    .unwrap();
    assert!(crate::normalize::meta_alpha_ac_eq(&r.quasi.to_meta(), &want_quasi), "{}", r.quasi);
    assert_alpha(&r.vss, &ineq(&s, "dia(p /\\ q) <= q \\/ box(dia(box(dia(p))))"));
    assert_eq!(r.epsilon.values().filter(|o| **o == Ot::One).count(), 2, "{:?} {}", r.epsilon, r.quasi);
    assert_eq!(r.inductive, r.vss);
    assert!(r.flags.is_empty());
}

#[test]
fn lambek_chain_outside_polarity_condition() {
    let s = lambek();
    let m = parse_meta(LAMBEK, &s).unwrap();
    assert!(matches!(
        validate_kracht(&m, &s),
        Err(KrachtError::NotKracht { reason: NotKrachtReason::PolarityViolation, .. })
    ));
    let kf = kracht_shape(&m, &s).unwrap();
    let r = inverse_from_form(&kf, &s).unwrap();
    assert_alpha(&r.compacted[0], &ineq(&s, "l(*n2) <= circ(#i2, over(circ(#i2, #h2), #h2))"));
    assert_alpha(&Ineq::new(r.psi.clone(), Term::Conom("m".into())), &ineq(&s, "over(under(#i2, *n2), #h1) <= *m"));
    assert_alpha(&r.vss, &ineq(&s, "ph2 <= over(under(pi2, circ(pi2, over(circ(pi2, ph2), ph2))), ph1)"));
    assert!(r.flags.contains(&FLAG_NOT_VERY_SIMPLE.to_string()));
    assert!(r.flags.contains(&FLAG_POLARITY.to_string()));
    assert_equivalent(&s, &Formula::Meta(r.quasi.to_meta()), &Formula::Ineq(r.vss.clone()));
    assert_equivalent(&s, &Formula::Meta(kf.to_meta().expand_restricted(&s)), &Formula::Ineq(r.vss.clone()));
}

#[test]
fn transitivity_round_trip() {
    let s = modal();
    let m = parse_meta("A j:nom. A m:conom. A[*o >box *m]. A[*n >box *o]. #j !<= *m ==> box(*n) <= k(#j)", &s).unwrap();
    let r = inverse_alba(&m, &s).unwrap();
    assert_alpha(&r.inductive, &ineq(&s, "box(q) <= box(box(q))"));
}

#[test]
fn modal_round_trips() {
    let s = modal();
    for t in [
        "p <= dia(p)",
        "box(p) <= p",
        "dia(dia(p)) <= dia(p)",
        "p <= box(dia(p))",
        "dia(box(p)) <= box(dia(p))",
        "p /\\ box(dia(p) -> box(q)) <= dia(box(box(q)))",
        "dia((p /\\ q) -> r) /\\ box(q) <= box(dia(p) -> dia(q /\\ r))",
        "p /\\ dia(q) <= dia(q /\\ dia(p))",
    ] {
        let x = ineq(&s, t);
        let kf = inductive_to_kracht(&x, &s).unwrap_or_else(|e| panic!("{t}: {e}"));
        let r = inverse_alba(&kf.to_meta(), &s).unwrap_or_else(|e| panic!("{t}: {e}\n{kf}"));
        assert!(!r.flags.contains(&FLAG_NOT_VERY_SIMPLE.to_string()), "{t}: {}", print_ineq(&r.vss));
        assert!(!r.flags.contains(&FLAG_NO_L_EQUIVALENT.to_string()), "{t}: {}", print_ineq(&r.vss));
        assert_equivalent(&s, &Formula::Ineq(r.inductive.clone()), &Formula::Ineq(x));
    }
}

#[test]
fn unpack_cases() {
    let s = modal();
    let mut t = Trace::default();
    let pure = ineq(&s, "dia(p /\\ q) <= q \\/ box(dia(box(dia(p))))");
    assert_eq!(unpack_crypto(&pure, &s, &mut t).unwrap(), pure);
    let tense = ineq(&s, "boxb1(p) <= dia#1(p)");
    assert!(matches!(unpack_crypto(&tense, &s, &mut t), Err(InverseError::NotCryptoInductive(_))));
}

#[test]
fn compaction_keeps_flat_input() {
    let s = modal();
    let i = ineq(&s, "box(*n) <= k(#j)");
    let d = KrachtDisjunct { body: Meta::Ineq(i.clone()), main: parse_ineq("k(#j) <= *m", &s).unwrap().lhs };
    assert_eq!(disjunct_compaction(&d, &s).unwrap(), i);
}

#[test]
fn compaction_of_second_goranko_disjunct() {
    let s = modal();
    let body = parse_meta("E[#i2 >dia l(*n1)]. A[*n2 >box k(#i2)]. l(*n2) <= dia(#j1)", &s).unwrap();
    let main = ineq(&s, "l(*n1) <= *n1").lhs;
    let c = disjunct_compaction(&KrachtDisjunct { body, main }, &s).unwrap();
    assert_alpha(&c, &ineq(&s, "l(*n1) <= dia(box(dia(#j1)))"));
}
