//! Comparison of terms and formulas up to renaming of bound variables and
//! associativity-commutativity of meet and join.

use std::collections::BTreeMap;

use crate::syntax::{print_ineq, print_meta, Ineq, Meta, Restriction, Sort, Term};

/// Flattens meet and join chains, sorts their operands and rebuilds them
/// right-nested. Duplicates are kept.
pub fn ac_term(t: &Term) -> Term {
    match t {
        Term::Meet(..) => rebuild(t.meet_list_raw(), Term::Meet),
        Term::Join(..) => rebuild(t.join_list_raw(), Term::Join),
        t => t.map_children(ac_term),
    }
}

fn rebuild(items: Vec<Term>, mk: fn(Box<Term>, Box<Term>) -> Term) -> Term {
    let mut items: Vec<Term> = items.iter().map(ac_term).collect();
    items.sort_by_cached_key(crate::syntax::print_term);
    let mut it = items.into_iter().rev();
    let last = it.next().expect("nonempty");
    it.fold(last, |acc, t| mk(Box::new(t), Box::new(acc)))
}

trait RawLists {
    fn meet_list_raw(&self) -> Vec<Term>;
    fn join_list_raw(&self) -> Vec<Term>;
}

impl RawLists for Term {
    fn meet_list_raw(&self) -> Vec<Term> {
        match self {
            Term::Meet(a, b) => {
                let mut v = a.meet_list_raw();
                v.extend(b.meet_list_raw());
                v
            }
            t => vec![t.clone()],
        }
    }

    fn join_list_raw(&self) -> Vec<Term> {
        match self {
            Term::Join(a, b) => {
                let mut v = a.join_list_raw();
                v.extend(b.join_list_raw());
                v
            }
            t => vec![t.clone()],
        }
    }
}

type Names = BTreeMap<(Sort, String), String>;

fn rename_term(t: &Term, map: &Names) -> Term {
    match t {
        Term::Nom(n) => Term::Nom(map.get(&(Sort::Nom, n.clone())).cloned().unwrap_or_else(|| n.clone())),
        Term::Conom(n) => Term::Conom(map.get(&(Sort::Conom, n.clone())).cloned().unwrap_or_else(|| n.clone())),
        t => t.map_children(|c| rename_term(c, map)),
    }
}

fn ac_ineq(i: &Ineq, map: &Names) -> Ineq {
    Ineq::new(ac_term(&rename_term(&i.lhs, map)), ac_term(&rename_term(&i.rhs, map)))
}

/// Renames bound variables by binder position and sorts conjunctions,
/// disjunctions and lattice operands.
fn canon(m: &Meta, map: &Names, depth: &mut usize) -> Meta {
    let bind = |s: Sort, n: &str, map: &Names, depth: &mut usize| {
        let mut m2 = map.clone();
        let name = format!("_b{depth}");
        *depth += 1;
        m2.insert((s, n.to_string()), name.clone());
        (name, m2)
    };
    match m {
        Meta::Ineq(i) => Meta::Ineq(ac_ineq(i, map)),
        Meta::NegIneq(i) => Meta::NegIneq(ac_ineq(i, map)),
        Meta::And(v) | Meta::Or(v) => {
            let mut items: Vec<Meta> = v.iter().map(|x| canon(x, map, depth)).collect();
            items.sort_by_cached_key(print_meta);
            if matches!(m, Meta::And(_)) { Meta::And(items) } else { Meta::Or(items) }
        }
        Meta::Not(a) => Meta::Not(Box::new(canon(a, map, depth))),
        Meta::Imp(a, b) => Meta::Imp(Box::new(canon(a, map, depth)), Box::new(canon(b, map, depth))),
        Meta::Forall(s, n, b) | Meta::Exists(s, n, b) => {
            let (name, m2) = bind(*s, n, map, depth);
            let body = Box::new(canon(b, &m2, depth));
            if matches!(m, Meta::Forall(..)) { Meta::Forall(*s, name, body) } else { Meta::Exists(*s, name, body) }
        }
        Meta::RForall(r, b) | Meta::RExists(r, b) => {
            let restrictor = ac_term(&rename_term(&r.restrictor, map));
            let mut m2 = map.clone();
            let mut vars = Vec::new();
            for (s, n) in &r.vars {
                let (name, m3) = bind(*s, n, &m2, depth);
                m2 = m3;
                vars.push((*s, name));
            }
            let r2 = Restriction { vars, conn: r.conn.clone(), restrictor };
            let body = Box::new(canon(b, &m2, depth));
            if matches!(m, Meta::RForall(..)) { Meta::RForall(r2, body) } else { Meta::RExists(r2, body) }
        }
    }
}

/// Variants of `m` obtained by permuting runs of adjacent plain quantifiers
/// of the same kind.
fn quantifier_variants(m: &Meta) -> Vec<Meta> {
    let universal = matches!(m, Meta::Forall(..));
    if !matches!(m, Meta::Forall(..) | Meta::Exists(..)) {
        return match m {
            Meta::Imp(a, b) => {
                let mut out = Vec::new();
                for a2 in quantifier_variants(a) {
                    for b2 in quantifier_variants(b) {
                        out.push(Meta::Imp(Box::new(a2.clone()), Box::new(b2)));
                    }
                }
                out
            }
            Meta::RForall(r, b) => quantifier_variants(b).into_iter().map(|b| Meta::RForall(r.clone(), Box::new(b))).collect(),
            Meta::RExists(r, b) => quantifier_variants(b).into_iter().map(|b| Meta::RExists(r.clone(), Box::new(b))).collect(),
            Meta::Not(a) => quantifier_variants(a).into_iter().map(|a| Meta::Not(Box::new(a))).collect(),
            m => vec![m.clone()],
        };
    }
    let mut run = Vec::new();
    let mut cur = m;
    loop {
        match cur {
            Meta::Forall(s, n, b) if universal => {
                run.push((*s, n.clone()));
                cur = b;
            }
            Meta::Exists(s, n, b) if !universal => {
                run.push((*s, n.clone()));
                cur = b;
            }
            _ => break,
        }
    }
    let mut out = Vec::new();
    for body in quantifier_variants(cur) {
        for perm in permutations(&run) {
            let q = perm.iter().rev().fold(body.clone(), |acc, (s, n)| {
                if universal { Meta::forall(*s, n, acc) } else { Meta::exists(*s, n, acc) }
            });
            out.push(q);
        }
    }
    out
}

fn permutations<T: Clone>(v: &[T]) -> Vec<Vec<T>> {
    if v.len() <= 1 || v.len() > 6 {
        return vec![v.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x.clone());
            out.push(p);
        }
    }
    out
}

/// A canonical string: equal for formulas that agree up to renaming of
/// bound variables, reordering of adjacent like quantifiers, and AC of the
/// lattice operations and of meta-conjunction and disjunction.
pub fn canonical_meta(m: &Meta) -> String {
    quantifier_variants(m)
        .iter()
        .map(|v| print_meta(&canon(v, &BTreeMap::new(), &mut 0)))
        .min()
        .expect("at least one variant")
}

pub fn meta_alpha_ac_eq(a: &Meta, b: &Meta) -> bool {
    canonical_meta(a) == canonical_meta(b)
}

/// Canonical form of an inequality up to AC and renaming of its
/// proposition variables.
pub fn canonical_ineq(i: &Ineq) -> String {
    let vars = i.vars();
    permutations(&vars)
        .into_iter()
        .map(|perm| {
            let b = perm
                .iter()
                .enumerate()
                .map(|(k, v)| (crate::syntax::Leaf::var(v), Term::Var(format!("_v{k}"))))
                .collect();
            print_ineq(&ac_ineq(&i.subst(&b), &BTreeMap::new()))
        })
        .min()
        .expect("at least one permutation")
}

pub fn ineq_alpha_ac_eq(a: &Ineq, b: &Ineq) -> bool {
    canonical_ineq(a) == canonical_ineq(b)
}
