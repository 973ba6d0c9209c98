//! Terms, inequalities and meta-formulas.

mod parse;
mod print;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::signature::{Family, Ot, Signature};

pub use parse::{parse_ineq, parse_meta, parse_term, ParseError};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Term {
    Var(String),
    Nom(String),
    Conom(String),
    Top,
    Bot,
    Meet(Box<Term>, Box<Term>),
    Join(Box<Term>, Box<Term>),
    /// Application of a connective, stored under its canonical name.
    App(String, Vec<Term>),
    Kappa(Box<Term>),
    Lambda(Box<Term>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Sort {
    Nom,
    Conom,
}

impl Sort {
    pub fn flip(self) -> Sort {
        match self {
            Sort::Nom => Sort::Conom,
            Sort::Conom => Sort::Nom,
        }
    }
}

/// A substitutable leaf.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Leaf {
    Var(String),
    Pure(Sort, String),
}

impl Leaf {
    pub fn nom(n: &str) -> Leaf {
        Leaf::Pure(Sort::Nom, n.to_string())
    }
    pub fn conom(n: &str) -> Leaf {
        Leaf::Pure(Sort::Conom, n.to_string())
    }
    pub fn var(n: &str) -> Leaf {
        Leaf::Var(n.to_string())
    }
    pub fn pure(s: Sort, n: &str) -> Leaf {
        Leaf::Pure(s, n.to_string())
    }
    pub fn to_term(&self) -> Term {
        match self {
            Leaf::Var(n) => Term::Var(n.clone()),
            Leaf::Pure(Sort::Nom, n) => Term::Nom(n.clone()),
            Leaf::Pure(Sort::Conom, n) => Term::Conom(n.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    /// Sign of a child in a coordinate with the given order type.
    pub fn through(self, ot: Ot) -> Sign {
        match ot {
            Ot::One => self,
            Ot::Dual => self.flip(),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Ineq {
    pub lhs: Term,
    pub rhs: Term,
}

impl Ineq {
    pub fn new(lhs: Term, rhs: Term) -> Ineq {
        Ineq { lhs, rhs }
    }

    pub fn leaves(&self) -> Vec<Leaf> {
        let mut out = Vec::new();
        self.lhs.collect_leaves(&mut out);
        self.rhs.collect_leaves(&mut out);
        dedup_keep_order(out)
    }

    /// Proposition variables in first-occurrence order.
    pub fn vars(&self) -> Vec<String> {
        self.leaves()
            .into_iter()
            .filter_map(|l| match l {
                Leaf::Var(n) => Some(n),
                _ => None,
            })
            .collect()
    }

    pub fn is_pure(&self) -> bool {
        self.lhs.is_pure() && self.rhs.is_pure()
    }

    pub fn subst(&self, b: &BTreeMap<Leaf, Term>) -> Ineq {
        Ineq::new(self.lhs.subst(b), self.rhs.subst(b))
    }

    pub fn contains(&self, l: &Leaf) -> bool {
        self.lhs.contains(l) || self.rhs.contains(l)
    }

    /// Signs of the occurrences of `l`: the left side counts positive, the
    /// right side negative.
    pub fn signs_of(&self, l: &Leaf, sig: &Signature) -> Vec<Sign> {
        let mut out = self.lhs.signs_of(Sign::Plus, l, sig);
        out.extend(self.rhs.signs_of(Sign::Minus, l, sig));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Restriction {
    /// Bound variables in coordinate order of `conn`.
    pub vars: Vec<(Sort, String)>,
    pub conn: String,
    pub restrictor: Term,
}

impl Restriction {
    /// The restricting inequality: `w <= f(u)` for `f` and `g(u) <= w` for `g`.
    pub fn inequality(&self, sig: &Signature) -> Ineq {
        let app = Term::App(self.conn.clone(), self.vars.iter().map(|(s, n)| pure_term(*s, n)).collect());
        match sig.conn(&self.conn).family {
            Family::F => Ineq::new(self.restrictor.clone(), app),
            Family::G => Ineq::new(app, self.restrictor.clone()),
        }
    }
}

/// Sorts of the variables bound by a restricted quantifier over `conn`.
pub fn restricted_sorts(sig: &Signature, conn: &str) -> Vec<Sort> {
    let c = sig.conn(conn);
    c.order_type
        .0
        .iter()
        .map(|o| match (c.family, o) {
            (Family::F, Ot::One) | (Family::G, Ot::Dual) => Sort::Nom,
            _ => Sort::Conom,
        })
        .collect()
}

/// Sort of the restrictor of a quantifier over `conn`.
pub fn restrictor_sort(sig: &Signature, conn: &str) -> Sort {
    match sig.conn(conn).family {
        Family::F => Sort::Nom,
        Family::G => Sort::Conom,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Meta {
    Ineq(Ineq),
    NegIneq(Ineq),
    /// Conjunction; empty means true.
    And(Vec<Meta>),
    /// Disjunction; empty means false.
    Or(Vec<Meta>),
    Not(Box<Meta>),
    Imp(Box<Meta>, Box<Meta>),
    Forall(Sort, String, Box<Meta>),
    Exists(Sort, String, Box<Meta>),
    RForall(Restriction, Box<Meta>),
    RExists(Restriction, Box<Meta>),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SyntaxError {
    #[error("cannot bind `{0}` to a term of the opposite sort")]
    SortError(String),
    #[error("negated inequality has no nominal or conominal side to flip")]
    NotFlippable,
}

pub fn pure_term(s: Sort, n: &str) -> Term {
    match s {
        Sort::Nom => Term::Nom(n.to_string()),
        Sort::Conom => Term::Conom(n.to_string()),
    }
}

pub fn dedup_keep_order<T: Ord + Clone>(v: Vec<T>) -> Vec<T> {
    let mut seen = BTreeSet::new();
    v.into_iter().filter(|x| seen.insert(x.clone())).collect()
}

pub fn var(n: &str) -> Term {
    Term::Var(n.to_string())
}
pub fn nom(n: &str) -> Term {
    Term::Nom(n.to_string())
}
pub fn conom(n: &str) -> Term {
    Term::Conom(n.to_string())
}
pub fn app(c: &str, args: Vec<Term>) -> Term {
    Term::App(c.to_string(), args)
}
pub fn meet(a: Term, b: Term) -> Term {
    Term::Meet(Box::new(a), Box::new(b))
}
pub fn join(a: Term, b: Term) -> Term {
    Term::Join(Box::new(a), Box::new(b))
}

/// κ with κ(λ(x)) collapsed to x.
pub fn kappa(t: Term) -> Term {
    match t {
        Term::Lambda(x) => *x,
        t => Term::Kappa(Box::new(t)),
    }
}

/// λ with λ(κ(x)) collapsed to x.
pub fn lambda(t: Term) -> Term {
    match t {
        Term::Kappa(x) => *x,
        t => Term::Lambda(Box::new(t)),
    }
}

/// Right-nested meet of a non-empty list; `top` for the empty list.
pub fn meet_all(ts: Vec<Term>) -> Term {
    let mut it = ts.into_iter().rev();
    match it.next() {
        None => Term::Top,
        Some(last) => it.fold(last, |acc, t| meet(t, acc)),
    }
}

/// Right-nested join of a non-empty list; `bot` for the empty list.
pub fn join_all(ts: Vec<Term>) -> Term {
    let mut it = ts.into_iter().rev();
    match it.next() {
        None => Term::Bot,
        Some(last) => it.fold(last, |acc, t| join(t, acc)),
    }
}

impl Term {
    /// Nominal-sorted: nominals and λ-terms.
    pub fn is_nominal_sorted(&self) -> bool {
        matches!(self, Term::Nom(_) | Term::Lambda(_))
    }

    /// Conominal-sorted: conominals and κ-terms.
    pub fn is_conominal_sorted(&self) -> bool {
        matches!(self, Term::Conom(_) | Term::Kappa(_))
    }

    pub fn sort(&self) -> Option<Sort> {
        if self.is_nominal_sorted() {
            Some(Sort::Nom)
        } else if self.is_conominal_sorted() {
            Some(Sort::Conom)
        } else {
            None
        }
    }

    pub fn is_pure(&self) -> bool {
        !self.any(&|t| matches!(t, Term::Var(_)))
    }

    /// Whether `p` holds at some node.
    pub fn any(&self, p: &dyn Fn(&Term) -> bool) -> bool {
        p(self) || self.children().iter().any(|c| c.any(p))
    }

    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Meet(a, b) | Term::Join(a, b) => vec![a, b],
            Term::App(_, args) => args.iter().collect(),
            Term::Kappa(a) | Term::Lambda(a) => vec![a],
            _ => vec![],
        }
    }

    pub fn leaf(&self) -> Option<Leaf> {
        match self {
            Term::Var(n) => Some(Leaf::Var(n.clone())),
            Term::Nom(n) => Some(Leaf::Pure(Sort::Nom, n.clone())),
            Term::Conom(n) => Some(Leaf::Pure(Sort::Conom, n.clone())),
            _ => None,
        }
    }

    pub fn collect_leaves(&self, out: &mut Vec<Leaf>) {
        if let Some(l) = self.leaf() {
            out.push(l);
        }
        for c in self.children() {
            c.collect_leaves(out);
        }
    }

    /// Distinct leaves in first-occurrence order.
    pub fn leaves(&self) -> Vec<Leaf> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        dedup_keep_order(out)
    }

    pub fn vars(&self) -> Vec<String> {
        self.leaves()
            .into_iter()
            .filter_map(|l| match l {
                Leaf::Var(n) => Some(n),
                _ => None,
            })
            .collect()
    }

    pub fn contains(&self, l: &Leaf) -> bool {
        self.any(&|t| t.leaf().as_ref() == Some(l))
    }

    pub fn occurrences(&self, l: &Leaf) -> usize {
        let own = usize::from(self.leaf().as_ref() == Some(l));
        own + self.children().iter().map(|c| c.occurrences(l)).sum::<usize>()
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    /// Simultaneous substitution; κ/λ redexes created by it are collapsed.
    pub fn subst(&self, b: &BTreeMap<Leaf, Term>) -> Term {
        if let Some(l) = self.leaf() {
            return b.get(&l).cloned().unwrap_or_else(|| self.clone());
        }
        self.map_children(|c| c.subst(b))
    }

    /// Substitution that rejects bindings of the opposite sort.
    pub fn subst_checked(&self, b: &BTreeMap<Leaf, Term>) -> Result<Term, SyntaxError> {
        check_bindings(b)?;
        Ok(self.subst(b))
    }

    pub fn map_children(&self, f: impl Fn(&Term) -> Term) -> Term {
        match self {
            Term::Meet(a, c) => meet(f(a), f(c)),
            Term::Join(a, c) => join(f(a), f(c)),
            Term::App(n, args) => Term::App(n.clone(), args.iter().map(f).collect()),
            Term::Kappa(a) => kappa(f(a)),
            Term::Lambda(a) => lambda(f(a)),
            t => t.clone(),
        }
    }

    /// Signs of the occurrences of `l`, left to right, with the root signed
    /// `root`.
    pub fn signs_of(&self, root: Sign, l: &Leaf, sig: &Signature) -> Vec<Sign> {
        let mut out = Vec::new();
        self.walk_signed(root, sig, &mut |t, s| {
            if t.leaf().as_ref() == Some(l) {
                out.push(s);
            }
        });
        out
    }

    /// Pre-order walk passing each node with its sign. κ and λ are
    /// antitone.
    pub fn walk_signed(&self, s: Sign, sig: &Signature, f: &mut dyn FnMut(&Term, Sign)) {
        f(self, s);
        match self {
            Term::Meet(a, b) | Term::Join(a, b) => {
                a.walk_signed(s, sig, f);
                b.walk_signed(s, sig, f);
            }
            Term::App(n, args) => {
                let c = sig.conn(n);
                for (i, a) in args.iter().enumerate() {
                    a.walk_signed(s.through(c.order_type.get(i)), sig, f);
                }
            }
            Term::Kappa(a) | Term::Lambda(a) => a.walk_signed(s.flip(), sig, f),
            _ => {}
        }
    }

    /// Connectives used, canonical names.
    pub fn connectives(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        fn go(t: &Term, out: &mut BTreeSet<String>) {
            if let Term::App(n, _) = t {
                out.insert(n.clone());
            }
            for c in t.children() {
                go(c, out);
            }
        }
        go(self, &mut out);
        out
    }

    /// Flattens nested meets into a list.
    pub fn meet_list(&self) -> Vec<Term> {
        match self {
            Term::Meet(a, b) => {
                let mut v = a.meet_list();
                v.extend(b.meet_list());
                v
            }
            Term::Top => vec![],
            t => vec![t.clone()],
        }
    }

    pub fn join_list(&self) -> Vec<Term> {
        match self {
            Term::Join(a, b) => {
                let mut v = a.join_list();
                v.extend(b.join_list());
                v
            }
            Term::Bot => vec![],
            t => vec![t.clone()],
        }
    }
}

fn check_bindings(b: &BTreeMap<Leaf, Term>) -> Result<(), SyntaxError> {
    for (l, t) in b {
        if let Leaf::Pure(s, n) = l {
            if t.sort() == Some(s.flip()) {
                return Err(SyntaxError::SortError(n.clone()));
            }
        }
    }
    Ok(())
}

/// Rewrites a negated inequality into a positive one via κ or λ.
pub fn flip(neg: &Ineq) -> Result<Ineq, SyntaxError> {
    if neg.lhs.is_nominal_sorted() {
        Ok(Ineq::new(neg.rhs.clone(), kappa(neg.lhs.clone())))
    } else if neg.rhs.is_conominal_sorted() {
        Ok(Ineq::new(lambda(neg.rhs.clone()), neg.lhs.clone()))
    } else {
        Err(SyntaxError::NotFlippable)
    }
}

/// Inverse of [`flip`]: `a <= k(j)` becomes `j !<= a`, `l(m) <= a` becomes
/// `a !<= m`.
pub fn unflip(pos: &Ineq) -> Result<Ineq, SyntaxError> {
    if pos.rhs.is_conominal_sorted() {
        Ok(Ineq::new(lambda(pos.rhs.clone()), pos.lhs.clone()))
    } else if pos.lhs.is_nominal_sorted() {
        Ok(Ineq::new(pos.rhs.clone(), kappa(pos.lhs.clone())))
    } else {
        Err(SyntaxError::NotFlippable)
    }
}

impl Meta {
    pub fn ineq(lhs: Term, rhs: Term) -> Meta {
        Meta::Ineq(Ineq::new(lhs, rhs))
    }

    pub fn imp(a: Meta, b: Meta) -> Meta {
        Meta::Imp(Box::new(a), Box::new(b))
    }

    pub fn forall(s: Sort, n: &str, body: Meta) -> Meta {
        Meta::Forall(s, n.to_string(), Box::new(body))
    }

    pub fn exists(s: Sort, n: &str, body: Meta) -> Meta {
        Meta::Exists(s, n.to_string(), Box::new(body))
    }

    /// Conjunction that flattens nested conjunctions and unwraps singletons.
    pub fn and(items: Vec<Meta>) -> Meta {
        let mut out = Vec::new();
        for m in items {
            match m {
                Meta::And(v) => out.extend(v),
                m => out.push(m),
            }
        }
        if out.len() == 1 { out.pop().expect("one") } else { Meta::And(out) }
    }

    pub fn or(items: Vec<Meta>) -> Meta {
        let mut out = Vec::new();
        for m in items {
            match m {
                Meta::Or(v) => out.extend(v),
                m => out.push(m),
            }
        }
        if out.len() == 1 { out.pop().expect("one") } else { Meta::Or(out) }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Meta::Ineq(_) | Meta::NegIneq(_))
            || matches!(self, Meta::And(v) | Meta::Or(v) if v.is_empty())
    }

    /// Universal closure over the given leaves (in order).
    pub fn close(self, leaves: &[(Sort, String)]) -> Meta {
        leaves.iter().rev().fold(self, |acc, (s, n)| Meta::Forall(*s, n.clone(), Box::new(acc)))
    }

    /// Free pure variables and proposition variables in first-occurrence
    /// order.
    pub fn free_leaves(&self) -> Vec<Leaf> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        dedup_keep_order(out)
    }

    fn collect_free(&self, bound: &mut Vec<Leaf>, out: &mut Vec<Leaf>) {
        let push_term = |t: &Term, bound: &Vec<Leaf>, out: &mut Vec<Leaf>| {
            for l in t.leaves() {
                if !bound.contains(&l) {
                    out.push(l);
                }
            }
        };
        match self {
            Meta::Ineq(i) | Meta::NegIneq(i) => {
                push_term(&i.lhs, bound, out);
                push_term(&i.rhs, bound, out);
            }
            Meta::And(v) | Meta::Or(v) => v.iter().for_each(|m| m.collect_free(bound, out)),
            Meta::Not(m) => m.collect_free(bound, out),
            Meta::Imp(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Meta::Forall(s, n, b) | Meta::Exists(s, n, b) => {
                bound.push(Leaf::Pure(*s, n.clone()));
                b.collect_free(bound, out);
                bound.pop();
            }
            Meta::RForall(r, b) | Meta::RExists(r, b) => {
                push_term(&r.restrictor, bound, out);
                let k = r.vars.len();
                bound.extend(r.vars.iter().map(|(s, n)| Leaf::Pure(*s, n.clone())));
                b.collect_free(bound, out);
                bound.truncate(bound.len() - k);
            }
        }
    }

    /// All names used anywhere, bound or free.
    pub fn all_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_terms(&mut |t| {
            for l in t.leaves() {
                match l {
                    Leaf::Var(n) | Leaf::Pure(_, n) => {
                        out.insert(n);
                    }
                }
            }
        });
        self.visit_binders(&mut |_, n| {
            out.insert(n.to_string());
        });
        out
    }

    pub fn visit_terms(&self, f: &mut dyn FnMut(&Term)) {
        match self {
            Meta::Ineq(i) | Meta::NegIneq(i) => {
                f(&i.lhs);
                f(&i.rhs);
            }
            Meta::And(v) | Meta::Or(v) => v.iter().for_each(|m| m.visit_terms(f)),
            Meta::Not(m) => m.visit_terms(f),
            Meta::Imp(a, b) => {
                a.visit_terms(f);
                b.visit_terms(f);
            }
            Meta::Forall(_, _, b) | Meta::Exists(_, _, b) => b.visit_terms(f),
            Meta::RForall(r, b) | Meta::RExists(r, b) => {
                f(&r.restrictor);
                b.visit_terms(f);
            }
        }
    }

    fn visit_binders(&self, f: &mut dyn FnMut(Sort, &str)) {
        match self {
            Meta::Ineq(_) | Meta::NegIneq(_) => {}
            Meta::And(v) | Meta::Or(v) => v.iter().for_each(|m| m.visit_binders(f)),
            Meta::Not(m) => m.visit_binders(f),
            Meta::Imp(a, b) => {
                a.visit_binders(f);
                b.visit_binders(f);
            }
            Meta::Forall(s, n, b) | Meta::Exists(s, n, b) => {
                f(*s, n);
                b.visit_binders(f);
            }
            Meta::RForall(r, b) | Meta::RExists(r, b) => {
                for (s, n) in &r.vars {
                    f(*s, n);
                }
                b.visit_binders(f);
            }
        }
    }

    /// Whether a proposition variable occurs.
    pub fn is_pure(&self) -> bool {
        let mut pure = true;
        self.visit_terms(&mut |t| pure &= t.is_pure());
        pure
    }

    /// Capture-avoiding simultaneous substitution of free leaves.
    pub fn subst(&self, b: &BTreeMap<Leaf, Term>) -> Meta {
        let mut avoid: BTreeSet<String> = self.all_names();
        for t in b.values() {
            for l in t.leaves() {
                match l {
                    Leaf::Var(n) | Leaf::Pure(_, n) => {
                        avoid.insert(n);
                    }
                }
            }
        }
        self.subst_inner(b, &mut avoid)
    }

    fn subst_inner(&self, b: &BTreeMap<Leaf, Term>, avoid: &mut BTreeSet<String>) -> Meta {
        let captured = |b: &BTreeMap<Leaf, Term>, l: &Leaf| b.values().any(|t| t.contains(l));
        match self {
            Meta::Ineq(i) => Meta::Ineq(i.subst(b)),
            Meta::NegIneq(i) => Meta::NegIneq(i.subst(b)),
            Meta::And(v) => Meta::And(v.iter().map(|m| m.subst_inner(b, avoid)).collect()),
            Meta::Or(v) => Meta::Or(v.iter().map(|m| m.subst_inner(b, avoid)).collect()),
            Meta::Not(m) => Meta::Not(Box::new(m.subst_inner(b, avoid))),
            Meta::Imp(x, y) => Meta::imp(x.subst_inner(b, avoid), y.subst_inner(b, avoid)),
            Meta::Forall(s, n, body) | Meta::Exists(s, n, body) => {
                let l = Leaf::Pure(*s, n.clone());
                let mut inner = b.clone();
                inner.remove(&l);
                let (name, body2) = if captured(&inner, &l) {
                    let fresh = fresh_name(n, avoid);
                    let mut ren = BTreeMap::new();
                    ren.insert(l, pure_term(*s, &fresh));
                    (fresh, body.subst_inner(&ren, avoid))
                } else {
                    (n.clone(), (**body).clone())
                };
                let nb = Box::new(body2.subst_inner(&inner, avoid));
                if matches!(self, Meta::Forall(..)) {
                    Meta::Forall(*s, name, nb)
                } else {
                    Meta::Exists(*s, name, nb)
                }
            }
            Meta::RForall(r, body) | Meta::RExists(r, body) => {
                let restrictor = r.restrictor.subst(b);
                let mut inner = b.clone();
                let mut ren = BTreeMap::new();
                let mut vars = Vec::new();
                for (s, n) in &r.vars {
                    let l = Leaf::Pure(*s, n.clone());
                    inner.remove(&l);
                    vars.push((*s, n.clone()));
                }
                for (s, n) in vars.iter_mut() {
                    let l = Leaf::Pure(*s, n.clone());
                    if captured(&inner, &l) {
                        let fresh = fresh_name(n, avoid);
                        ren.insert(l, pure_term(*s, &fresh));
                        *n = fresh;
                    }
                }
                let body2 = if ren.is_empty() { (**body).clone() } else { body.subst_inner(&ren, avoid) };
                let nr = Restriction { vars, conn: r.conn.clone(), restrictor };
                let nb = Box::new(body2.subst_inner(&inner, avoid));
                if matches!(self, Meta::RForall(..)) { Meta::RForall(nr, nb) } else { Meta::RExists(nr, nb) }
            }
        }
    }

    /// Rewrites restricted quantifiers into plain ones.
    pub fn expand_restricted(&self, sig: &Signature) -> Meta {
        match self {
            Meta::Ineq(_) | Meta::NegIneq(_) => self.clone(),
            Meta::And(v) => Meta::And(v.iter().map(|m| m.expand_restricted(sig)).collect()),
            Meta::Or(v) => Meta::Or(v.iter().map(|m| m.expand_restricted(sig)).collect()),
            Meta::Not(m) => Meta::Not(Box::new(m.expand_restricted(sig))),
            Meta::Imp(a, b) => Meta::imp(a.expand_restricted(sig), b.expand_restricted(sig)),
            Meta::Forall(s, n, b) => Meta::Forall(*s, n.clone(), Box::new(b.expand_restricted(sig))),
            Meta::Exists(s, n, b) => Meta::Exists(*s, n.clone(), Box::new(b.expand_restricted(sig))),
            Meta::RForall(r, b) => {
                let body = Meta::imp(Meta::Ineq(r.inequality(sig)), b.expand_restricted(sig));
                r.vars.iter().rev().fold(body, |acc, (s, n)| Meta::Forall(*s, n.clone(), Box::new(acc)))
            }
            Meta::RExists(r, b) => {
                let body = Meta::And(vec![Meta::Ineq(r.inequality(sig)), b.expand_restricted(sig)]);
                r.vars.iter().rev().fold(body, |acc, (s, n)| Meta::Exists(*s, n.clone(), Box::new(acc)))
            }
        }
    }

    /// Re-introduces restricted quantifiers where a block of plain
    /// quantifiers guards its body with a restricting inequality.
    pub fn contract_restricted(&self, sig: &Signature) -> Meta {
        if let Some(m) = self.try_contract(sig) {
            return m;
        }
        match self {
            Meta::Ineq(_) | Meta::NegIneq(_) => self.clone(),
            Meta::And(v) => Meta::And(v.iter().map(|m| m.contract_restricted(sig)).collect()),
            Meta::Or(v) => Meta::Or(v.iter().map(|m| m.contract_restricted(sig)).collect()),
            Meta::Not(m) => Meta::Not(Box::new(m.contract_restricted(sig))),
            Meta::Imp(a, b) => Meta::imp(a.contract_restricted(sig), b.contract_restricted(sig)),
            Meta::Forall(s, n, b) => Meta::Forall(*s, n.clone(), Box::new(b.contract_restricted(sig))),
            Meta::Exists(s, n, b) => Meta::Exists(*s, n.clone(), Box::new(b.contract_restricted(sig))),
            Meta::RForall(r, b) => Meta::RForall(r.clone(), Box::new(b.contract_restricted(sig))),
            Meta::RExists(r, b) => Meta::RExists(r.clone(), Box::new(b.contract_restricted(sig))),
        }
    }

    fn try_contract(&self, sig: &Signature) -> Option<Meta> {
        let universal = matches!(self, Meta::Forall(..));
        if !universal && !matches!(self, Meta::Exists(..)) {
            return None;
        }
        // Collect the longest block of same-kind quantifiers.
        let mut block: Vec<(Sort, String)> = Vec::new();
        let mut cur = self;
        loop {
            match (cur, universal) {
                (Meta::Forall(s, n, b), true) | (Meta::Exists(s, n, b), false) => {
                    block.push((*s, n.clone()));
                    cur = b;
                }
                _ => break,
            }
        }
        let (guard, rest) = match (cur, universal) {
            (Meta::Imp(a, b), true) => match &**a {
                Meta::Ineq(i) => (i.clone(), (**b).clone()),
                _ => return None,
            },
            (Meta::And(v), false) if v.len() >= 2 => match &v[0] {
                Meta::Ineq(i) => (i.clone(), Meta::and(v[1..].to_vec())),
                _ => return None,
            },
            _ => return None,
        };
        // The guard must be w <= f(u) or g(u) <= w with u a suffix of the block.
        let (conn, args, restrictor) = match (&guard.lhs, &guard.rhs) {
            (w, Term::App(c, args)) if sig.conn(c).family == Family::F && w.sort() == Some(Sort::Nom) => {
                (c.clone(), args.clone(), w.clone())
            }
            (Term::App(c, args), w) if sig.conn(c).family == Family::G && w.sort() == Some(Sort::Conom) => {
                (c.clone(), args.clone(), w.clone())
            }
            _ => return None,
        };
        if args.is_empty() {
            return None;
        }
        let mut vars = Vec::new();
        for a in &args {
            match a.leaf() {
                Some(Leaf::Pure(s, n)) => vars.push((s, n)),
                _ => return None,
            }
        }
        let k = vars.len();
        if block.len() < k {
            return None;
        }
        let tail = &block[block.len() - k..];
        let mut sorted_tail = tail.to_vec();
        sorted_tail.sort();
        let mut sorted_vars = vars.clone();
        sorted_vars.sort();
        sorted_vars.dedup();
        if sorted_tail != sorted_vars || sorted_vars.len() != k {
            return None;
        }
        if restrictor.leaves().iter().any(|l| matches!(l, Leaf::Pure(s, n) if vars.contains(&(*s, n.clone())))) {
            return None;
        }
        if restricted_sorts(sig, &conn) != vars.iter().map(|(s, _)| *s).collect::<Vec<_>>() {
            return None;
        }
        let r = Restriction { vars, conn, restrictor };
        let inner = rest.contract_restricted(sig);
        let core = if universal { Meta::RForall(r, Box::new(inner)) } else { Meta::RExists(r, Box::new(inner)) };
        Some(block[..block.len() - k].iter().rev().fold(core, |acc, (s, n)| {
            if universal {
                Meta::Forall(*s, n.clone(), Box::new(acc))
            } else {
                Meta::Exists(*s, n.clone(), Box::new(acc))
            }
        }))
    }
}

/// A name based on `base` not in `avoid`; the result is added to `avoid`.
pub fn fresh_name(base: &str, avoid: &mut BTreeSet<String>) -> String {
    let stem: String = base.trim_end_matches(|c: char| c.is_ascii_digit() || c == '\'').to_string();
    let stem = if stem.is_empty() { base.to_string() } else { stem };
    let mut k = 1usize;
    loop {
        let cand = format!("{stem}{k}");
        if avoid.insert(cand.clone()) {
            return cand;
        }
        k += 1;
    }
}

/// Per-run fresh name supply.
#[derive(Clone, Debug, Default)]
pub struct Fresh {
    used: BTreeSet<String>,
}

impl Fresh {
    pub fn new<I: IntoIterator<Item = String>>(used: I) -> Fresh {
        Fresh { used: used.into_iter().collect() }
    }

    pub fn reserve(&mut self, n: &str) {
        self.used.insert(n.to_string());
    }

    pub fn next(&mut self, stem: &str) -> String {
        fresh_name(stem, &mut self.used)
    }
}

pub use print::{pretty_term, print_ineq, print_meta, print_term};

#[cfg(test)]
mod tests;
