use super::*;
use crate::normalize::meta_alpha_ac_eq;
use crate::oracle::{battery, equivalent, Formula};
use crate::syntax::{parse_ineq, parse_meta};

fn modal() -> Signature {
    Signature::parse("f dia 1 (1)\ng box 1 (1)\n").unwrap()
}

fn meta(s: &Signature, t: &str) -> Meta {
    parse_meta(t, s).unwrap()
}

fn assert_equivalent(s: &Signature, i: &Ineq, m: &Meta) {
    let models = battery(s, 7);
    let m = m.expand_restricted(s);
    assert!(
        equivalent(&models, &Formula::Ineq(i.clone()), &Formula::Meta(m.clone())).unwrap(),
        "{} vs {}",
        print_ineq(i),
        print_meta(&m)
    );
}

const TRANSITIVITY: &str = "A j:nom. A m:conom. A[*o >box *m]. A[*n >box *o]. #j !<= *m ==> box(*n) <= k(#j)";

const MORECOMPLEX: &str = "A j:nom. A m:conom. A h:nom. A n:conom. A[*o >box *m]. A[#h2,*l >-> *o]. \
    A[#i >dia #j]. A[#k >dia #h2]. \
    (#j <= #h && *n <= *l && #j !<= *m) ==> \
    (E[#i2 >dia l(*n)]. (#i2 <= boxb1(#h) && #i2 <= #i && #i2 <= #k && #i2 <= boxb1(#h)))";

#[test]
fn transitivity_golden() {
    let s = modal();
    let i = parse_ineq("box(p) <= box(box(p))", &s).unwrap();
    let k = inductive_to_kracht(&i, &s).unwrap();
    assert!(meta_alpha_ac_eq(&k.to_meta(), &meta(&s, TRANSITIVITY)), "{k}");
    assert_equivalent(&s, &i, &k.to_meta());
    let v = validate_kracht(&k.to_meta(), &s).unwrap();
    assert_eq!(v.entries(QuantKind::Type1).count(), 1);
    assert_eq!(v.entries(QuantKind::Type2).count(), 1);
}

#[test]
fn morecomplex_golden() {
    let s = modal();
    let i = parse_ineq("dia((p /\\ q) -> r) /\\ box(q) <= box(dia(p) -> dia(q /\\ r))", &s).unwrap();
    let k = inductive_to_kracht(&i, &s).unwrap();
    assert!(meta_alpha_ac_eq(&k.to_meta(), &meta(&s, MORECOMPLEX)), "{k}");
    assert_equivalent(&s, &i, &k.to_meta());
    let v = validate_kracht(&k.to_meta(), &s).unwrap();
    assert_eq!(v.entries(QuantKind::Alias).count(), 2);
    assert_eq!(v.entries(QuantKind::Type1).count(), 2);
    assert_eq!(v.entries(QuantKind::Type2).count(), 2);
}

#[test]
fn goranko_kracht_is_equivalent() {
    let s = modal();
    let i = parse_ineq("p /\\ box(dia(p) -> box(q)) <= dia(box(box(q)))", &s).unwrap();
    let k = inductive_to_kracht(&i, &s).unwrap();
    assert_equivalent(&s, &i, &k.to_meta());
    validate_kracht(&k.to_meta(), &s).unwrap();
}

#[test]
fn corpus_kracht_forms_validate() {
    let s = modal();
    for t in ["p <= dia(p)", "box(p) <= p", "dia(dia(p)) <= dia(p)", "p <= box(dia(p))", "dia(box(p)) <= box(dia(p))"] {
        let i = parse_ineq(t, &s).unwrap();
        let k = inductive_to_kracht(&i, &s).unwrap_or_else(|e| panic!("{t}: {e}"));
        validate_kracht(&k.to_meta(), &s).unwrap_or_else(|e| panic!("{t}: {e}\n{k}"));
        assert_equivalent(&s, &i, &k.to_meta());
        let r = refine(&k);
        assert_equivalent(&s, &i, &r.to_meta());
        validate_kracht(&r.to_meta(), &s).unwrap_or_else(|e| panic!("{t}: {e}\n{r}"));
    }
}

#[test]
fn rejections() {
    let s = modal();
    let no_pivot = meta(&s, "A j:nom. A m:conom. #j <= *m ==> box(*m) <= k(#j)");
    assert!(matches!(
        validate_kracht(&no_pivot, &s),
        Err(KrachtError::NotKracht { reason: NotKrachtReason::NoPivotal, .. })
    ));
    let two = meta(&s, "A j:nom. A m:conom. (#j !<= *m && #j !<= *m) ==> box(*m) <= k(#j)");
    assert!(matches!(
        validate_kracht(&two, &s),
        Err(KrachtError::NotKracht { reason: NotKrachtReason::MultiPivotal, .. })
    ));
    let alias = meta(&s, "A j:nom. A m:conom. A h:nom. #j !<= *m ==> box(*m) <= k(#j)");
    assert!(matches!(
        validate_kracht(&alias, &s),
        Err(KrachtError::NotKracht { reason: NotKrachtReason::AliasViolation, .. })
    ));
    let polarity = meta(&s, "A j:nom. A m:conom. A[*n >box *m]. #j !<= *m ==> dia(k(*n)) <= k(#j)");
    assert!(matches!(
        validate_kracht(&polarity, &s),
        Err(KrachtError::NotKracht { reason: NotKrachtReason::PolarityViolation, .. })
    ));
    let free = meta(&s, "A j:nom. A m:conom. #j !<= *m ==> box(*q) <= k(#j)");
    assert!(matches!(
        validate_kracht(&free, &s),
        Err(KrachtError::NotKracht { reason: NotKrachtReason::NonInherentlyUniversalAtomVar, .. })
    ));
    let mixed = meta(&s, "A j:nom. A m:conom. A[*n >box *m]. (#j !<= *m && *n <= *m) ==> box(*n) <= k(#j)");
    assert!(validate_kracht(&mixed, &s).is_err());
}

#[test]
fn confluence_without_pivot_is_rejected() {
    let s = modal();
    let c = meta(&s, "A i:nom. A m:conom. A[#j >dia #i]. A[#k >dia #i]. E[#l >dia #j]. #l <= dia#1(*m) || #k !<= dia#1(*m)");
    assert!(validate_kracht(&c, &s).is_err());
}

#[test]
fn refine_moves_pivot_out_of_consequent() {
    let s = modal();
    let i = parse_ineq("p <= dia(p)", &s).unwrap();
    let k = inductive_to_kracht(&i, &s).unwrap();
    let r = refine(&k);
    let (j, m) = r.pivots();
    assert!(!r.consequent_names().contains(&j));
    assert!(!r.consequent_names().contains(&m));
    assert_eq!(refine(&r), r);
    assert_equivalent(&s, &i, &r.to_meta());
}

#[test]
fn refine_splits_pivot_occurrences() {
    let s = modal();
    let i = parse_ineq("p /\\ box(dia(p) -> box(q)) <= dia(box(box(q)))", &s).unwrap();
    let r = refine(&inductive_to_kracht(&i, &s).unwrap());
    assert_eq!(r.entries(QuantKind::Alias).count(), 3, "{r}");
    assert_equivalent(&s, &i, &r.to_meta());
    let shared = refine_with(&inductive_to_kracht(&i, &s).unwrap(), false);
    assert_eq!(shared.entries(QuantKind::Alias).count(), 2, "{shared}");
    assert_equivalent(&s, &i, &shared.to_meta());
}

#[test]
fn refine_keeps_unused_type1_quantifiers() {
    let s = modal();
    let k = validate_kracht(&meta(&s, TRANSITIVITY), &s).unwrap();
    let r = refine(&k);
    assert_eq!(r.entries(QuantKind::Type1).count(), 1);
    assert_eq!(refine(&r), r);
}

#[test]
fn strip_examples() {
    let s = modal();
    let mut fresh = Fresh::new(["j".to_string(), "m".to_string()]);
    let j = Term::Nom("j".into());
    let i = parse_ineq("#j <= dia(box(box(*m)))", &s).unwrap();
    let out = strip_flat(&i, &j, &mut fresh, &s).unwrap();
    let want = meta(&s, "E[#i >dia #j]. A[*n >box k(#i)]. l(*n) <= box(*m)");
    assert!(meta_alpha_ac_eq(&out, &want), "{}", print_meta(&out));

    let i = parse_ineq("#j <= top", &s).unwrap();
    assert_eq!(strip_flat(&i, &j, &mut fresh, &s).unwrap(), Meta::And(vec![]));
    let i = parse_ineq("#j <= *m \\/ box(*m)", &s).unwrap();
    assert!(matches!(strip_flat(&i, &j, &mut fresh, &s).unwrap(), Meta::Or(_)));
    let i = parse_ineq("#j <= k(dia(#j))", &s).unwrap();
    assert!(matches!(strip_flat(&i, &j, &mut fresh, &s), Err(KrachtError::NotStrippable(_))));
}
