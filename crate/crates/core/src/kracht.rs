//! Kracht formulas: representation, validation, refinement, and the
//! translation of a definite inductive inequality into Kracht shape.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::alba::{run_alba, AlbaError, Condensed};
use crate::signature::{Family, Ot, Signature};
use crate::syntax::{kappa, lambda, print_ineq, print_meta, print_term, pure_term, Fresh, Ineq, Leaf, Meta, Restriction, Sign, Sort, Term};
use crate::trace::Trace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NotKrachtReason {
    NoPivotal,
    MultiPivotal,
    AliasViolation,
    PolarityViolation,
    QuantifierTypeViolation,
    NonInherentlyUniversalAtomVar,
    /// Not of the overall prefix, antecedent, disjunct shape.
    Malformed,
}

impl fmt::Display for NotKrachtReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NotKrachtReason::NoPivotal => "no-pivotal",
            NotKrachtReason::MultiPivotal => "multi-pivotal",
            NotKrachtReason::AliasViolation => "alias-violation",
            NotKrachtReason::PolarityViolation => "polarity-violation",
            NotKrachtReason::QuantifierTypeViolation => "quantifier-type-violation",
            NotKrachtReason::NonInherentlyUniversalAtomVar => "non-inherently-universal-atom-var",
            NotKrachtReason::Malformed => "malformed",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KrachtError {
    #[error("not a Kracht formula ({reason}): {detail}")]
    NotKracht { reason: NotKrachtReason, detail: String },
    #[error("cannot strip `{0}`")]
    NotStrippable(String),
    #[error("preprocessing splits the input into {0} inequalities")]
    Split(usize),
    #[error(transparent)]
    Alba(#[from] AlbaError),
}

fn not_kracht(reason: NotKrachtReason, detail: impl Into<String>) -> KrachtError {
    KrachtError::NotKracht { reason, detail: detail.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum QuantKind {
    Pivotal,
    Alias,
    Type1,
    Type2,
    Plain,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuantifierEntry {
    pub vars: Vec<(Sort, String)>,
    pub kind: QuantKind,
    /// Connective and restrictor of a restricted quantifier.
    pub restriction: Option<(String, Term)>,
}

impl QuantifierEntry {
    pub fn plain(s: Sort, n: &str, kind: QuantKind) -> QuantifierEntry {
        QuantifierEntry { vars: vec![(s, n.to_string())], kind, restriction: None }
    }

    pub fn restricted(r: Restriction, kind: QuantKind) -> QuantifierEntry {
        QuantifierEntry { vars: r.vars, kind, restriction: Some((r.conn, r.restrictor)) }
    }

    pub fn as_restriction(&self) -> Option<Restriction> {
        self.restriction
            .as_ref()
            .map(|(c, t)| Restriction { vars: self.vars.clone(), conn: c.clone(), restrictor: t.clone() })
    }

    fn wrap(&self, body: Meta) -> Meta {
        match self.as_restriction() {
            Some(r) => Meta::RForall(r, Box::new(body)),
            None => self.vars.iter().rev().fold(body, |acc, (s, n)| Meta::forall(*s, n, acc)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KrachtDisjunct {
    pub body: Meta,
    /// The main pure variable, possibly under κ or λ.
    pub main: Term,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct KrachtForm {
    pub prefix: Vec<QuantifierEntry>,
    /// Non-pivotal antecedent inequalities.
    pub antecedent: Vec<Ineq>,
    /// `j <= m`, standing for the negated pivotal inequality.
    pub pivotal: Ineq,
    pub disjuncts: Vec<KrachtDisjunct>,
}

impl KrachtForm {
    pub fn to_meta(&self) -> Meta {
        let mut ant: Vec<Meta> = self.antecedent.iter().cloned().map(Meta::Ineq).collect();
        ant.push(Meta::NegIneq(self.pivotal.clone()));
        let cons = Meta::or(self.disjuncts.iter().map(|d| d.body.clone()).collect());
        let body = Meta::imp(Meta::and(ant), cons);
        self.prefix.iter().rev().fold(body, |acc, q| q.wrap(acc))
    }

    pub fn pivots(&self) -> (String, String) {
        match (&self.pivotal.lhs, &self.pivotal.rhs) {
            (Term::Nom(j), Term::Conom(m)) => (j.clone(), m.clone()),
            _ => unreachable!("validated pivotal inequality"),
        }
    }

    pub fn entries(&self, kind: QuantKind) -> impl Iterator<Item = &QuantifierEntry> {
        self.prefix.iter().filter(move |q| q.kind == kind)
    }

    fn names(&self) -> BTreeSet<String> {
        self.to_meta().all_names()
    }

    pub fn consequent_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for d in &self.disjuncts {
            for l in d.body.free_leaves() {
                if let Leaf::Pure(_, n) = l {
                    out.insert(n);
                }
            }
        }
        out
    }
}

impl fmt::Display for KrachtForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_meta(&self.to_meta()))
    }
}

// ---------------------------------------------------------------------
// Atoms and flat inequalities

/// A pure variable, possibly wrapped in κ or λ.
pub fn is_atom(t: &Term) -> bool {
    match t {
        Term::Nom(_) | Term::Conom(_) => true,
        Term::Kappa(a) | Term::Lambda(a) => is_atom(a),
        _ => false,
    }
}

/// κ for nominal-sorted terms and λ for conominal-sorted ones.
pub fn rho(t: &Term) -> Term {
    if t.is_nominal_sorted() { kappa(t.clone()) } else { lambda(t.clone()) }
}

fn op_of_atoms(t: &Term) -> bool {
    matches!(t, Term::App(_, args) if args.iter().all(is_atom))
}

pub fn is_flat(i: &Ineq) -> bool {
    (is_atom(&i.lhs) && (is_atom(&i.rhs) || op_of_atoms(&i.rhs))) || (is_atom(&i.rhs) && op_of_atoms(&i.lhs))
}

fn atom_name(t: &Term) -> Option<(Sort, String)> {
    match t {
        Term::Nom(n) => Some((Sort::Nom, n.clone())),
        Term::Conom(n) => Some((Sort::Conom, n.clone())),
        Term::Kappa(a) | Term::Lambda(a) => atom_name(a),
        _ => None,
    }
}

pub(crate) fn pure_names(t: &Term) -> BTreeSet<String> {
    t.leaves()
        .into_iter()
        .filter_map(|l| match l {
            Leaf::Pure(_, n) => Some(n),
            Leaf::Var(_) => None,
        })
        .collect()
}

fn meta_pure_names(m: &Meta) -> BTreeSet<String> {
    m.free_leaves()
        .into_iter()
        .filter_map(|l| match l {
            Leaf::Pure(_, n) => Some(n),
            Leaf::Var(_) => None,
        })
        .collect()
}

/// Fresh variable of the sort bound by coordinate `k` of `conn`.
fn coordinate_var(sig: &Signature, conn: &str, k: usize, fresh: &mut Fresh, nom: &str, conom: &str) -> Term {
    let c = sig.conn(conn);
    match (c.family, c.order_type.get(k)) {
        (Family::F, Ot::One) | (Family::G, Ot::Dual) => Term::Nom(fresh.next(nom)),
        _ => Term::Conom(fresh.next(conom)),
    }
}

fn restriction_of(vars: &[Term], conn: &str, restrictor: Term) -> Restriction {
    Restriction { vars: vars.iter().map(|v| atom_name(v).expect("fresh atom")).collect(), conn: conn.to_string(), restrictor }
}

// ---------------------------------------------------------------------
// Stripping

/// Rewrites `w <= t` (main on the left, nominal-sorted) or `t <= w` (main
/// on the right, conominal-sorted) into a Kracht disjunct with main `w`.
pub fn strip_flat(i: &Ineq, main: &Term, fresh: &mut Fresh, sig: &Signature) -> Result<Meta, KrachtError> {
    if is_flat(i) {
        return Ok(Meta::Ineq(i.clone()));
    }
    let stuck = || KrachtError::NotStrippable(print_ineq(i));
    let w = main.clone();
    if i.lhs == *main && main.is_nominal_sorted() {
        match &i.rhs {
            Term::Top => Ok(Meta::And(vec![])),
            Term::Bot => Ok(Meta::Or(vec![])),
            Term::Meet(a, b) => Ok(Meta::and(vec![
                strip_flat(&Ineq::new(w.clone(), (**a).clone()), &w, fresh, sig)?,
                strip_flat(&Ineq::new(w.clone(), (**b).clone()), &w, fresh, sig)?,
            ])),
            // Nominals are completely join-prime.
            Term::Join(a, b) => Ok(Meta::or(vec![
                strip_flat(&Ineq::new(w.clone(), (**a).clone()), &w, fresh, sig)?,
                strip_flat(&Ineq::new(w.clone(), (**b).clone()), &w, fresh, sig)?,
            ])),
            Term::App(f, args) => {
                let vars: Vec<Term> =
                    (0..args.len()).map(|k| coordinate_var(sig, f, k, fresh, "i", "n")).collect();
                let existential = sig.conn(f).family == Family::F;
                let mut parts = Vec::new();
                for (v, a) in vars.iter().zip(args) {
                    let sub = match (existential, v) {
                        (true, Term::Nom(_)) => Ineq::new(v.clone(), a.clone()),
                        (true, _) => Ineq::new(a.clone(), v.clone()),
                        (false, Term::Conom(_)) => Ineq::new(lambda(v.clone()), a.clone()),
                        (false, _) => Ineq::new(a.clone(), kappa(v.clone())),
                    };
                    let m = if existential { v.clone() } else { rho(v) };
                    parts.push(strip_flat(&sub, &m, fresh, sig)?);
                }
                Ok(if existential {
                    Meta::RExists(restriction_of(&vars, f, w), Box::new(Meta::and(parts)))
                } else {
                    Meta::RForall(restriction_of(&vars, f, kappa(w)), Box::new(Meta::or(parts)))
                })
            }
            _ => Err(stuck()),
        }
    } else if i.rhs == *main && main.is_conominal_sorted() {
        match &i.lhs {
            Term::Bot => Ok(Meta::And(vec![])),
            Term::Top => Ok(Meta::Or(vec![])),
            Term::Join(a, b) => Ok(Meta::and(vec![
                strip_flat(&Ineq::new((**a).clone(), w.clone()), &w, fresh, sig)?,
                strip_flat(&Ineq::new((**b).clone(), w.clone()), &w, fresh, sig)?,
            ])),
            Term::Meet(a, b) => Ok(Meta::or(vec![
                strip_flat(&Ineq::new((**a).clone(), w.clone()), &w, fresh, sig)?,
                strip_flat(&Ineq::new((**b).clone(), w.clone()), &w, fresh, sig)?,
            ])),
            Term::App(g, args) => {
                let vars: Vec<Term> =
                    (0..args.len()).map(|k| coordinate_var(sig, g, k, fresh, "i", "n")).collect();
                let existential = sig.conn(g).family == Family::G;
                let mut parts = Vec::new();
                for (v, a) in vars.iter().zip(args) {
                    let sub = match (existential, v) {
                        (true, Term::Conom(_)) => Ineq::new(a.clone(), v.clone()),
                        (true, _) => Ineq::new(v.clone(), a.clone()),
                        (false, Term::Nom(_)) => Ineq::new(a.clone(), kappa(v.clone())),
                        (false, _) => Ineq::new(lambda(v.clone()), a.clone()),
                    };
                    let m = if existential { v.clone() } else { rho(v) };
                    parts.push(strip_flat(&sub, &m, fresh, sig)?);
                }
                Ok(if existential {
                    Meta::RExists(restriction_of(&vars, g, w), Box::new(Meta::and(parts)))
                } else {
                    Meta::RForall(restriction_of(&vars, g, lambda(w)), Box::new(Meta::or(parts)))
                })
            }
            _ => Err(stuck()),
        }
    } else {
        Err(stuck())
    }
}

/// Strips a pure skeleton inequality `w <= t` or `t <= w` of the antecedent
/// into existential restrictions (outermost first) and flat inequalities.
fn strip_antecedent(
    i: &Ineq,
    fresh: &mut Fresh,
    sig: &Signature,
    restrictions: &mut Vec<Restriction>,
    flats: &mut Vec<Ineq>,
) -> Result<(), KrachtError> {
    if is_flat(i) {
        flats.push(i.clone());
        return Ok(());
    }
    let stuck = || KrachtError::NotStrippable(print_ineq(i));
    if matches!(i.lhs, Term::Nom(_)) {
        match &i.rhs {
            Term::Top => Ok(()),
            Term::Meet(a, b) => {
                strip_antecedent(&Ineq::new(i.lhs.clone(), (**a).clone()), fresh, sig, restrictions, flats)?;
                strip_antecedent(&Ineq::new(i.lhs.clone(), (**b).clone()), fresh, sig, restrictions, flats)
            }
            Term::App(f, args) if sig.conn(f).family == Family::F => {
                let vars: Vec<Term> =
                    (0..args.len()).map(|k| coordinate_var(sig, f, k, fresh, "h", "o")).collect();
                restrictions.push(restriction_of(&vars, f, i.lhs.clone()));
                for (v, a) in vars.iter().zip(args) {
                    let sub = if matches!(v, Term::Nom(_)) { Ineq::new(v.clone(), a.clone()) } else { Ineq::new(a.clone(), v.clone()) };
                    strip_antecedent(&sub, fresh, sig, restrictions, flats)?;
                }
                Ok(())
            }
            _ => Err(stuck()),
        }
    } else if matches!(i.rhs, Term::Conom(_)) {
        match &i.lhs {
            Term::Bot => Ok(()),
            Term::Join(a, b) => {
                strip_antecedent(&Ineq::new((**a).clone(), i.rhs.clone()), fresh, sig, restrictions, flats)?;
                strip_antecedent(&Ineq::new((**b).clone(), i.rhs.clone()), fresh, sig, restrictions, flats)
            }
            Term::App(g, args) if sig.conn(g).family == Family::G => {
                let vars: Vec<Term> =
                    (0..args.len()).map(|k| coordinate_var(sig, g, k, fresh, "h", "o")).collect();
                restrictions.push(restriction_of(&vars, g, i.rhs.clone()));
                for (v, a) in vars.iter().zip(args) {
                    let sub = if matches!(v, Term::Conom(_)) { Ineq::new(a.clone(), v.clone()) } else { Ineq::new(v.clone(), a.clone()) };
                    strip_antecedent(&sub, fresh, sig, restrictions, flats)?;
                }
                Ok(())
            }
            _ => Err(stuck()),
        }
    } else {
        Err(stuck())
    }
}

/// Kracht form of a condensed quasi-inequality: contraposition, pivotal
/// pair, stripped consequent, and the antecedent turned into restricted
/// quantifiers.
pub fn kracht_from_condensed(c: &Condensed, sig: &Signature, trace: &mut Trace) -> Result<KrachtForm, KrachtError> {
    let mut fresh = Fresh::new(c.to_meta().all_names());
    let skel = &c.consequent;
    let mut to_strip = Vec::new();
    let j = match &skel.lhs {
        Term::Nom(n) => n.clone(),
        t => {
            let n = fresh.next("j");
            to_strip.push(Ineq::new(Term::Nom(n.clone()), t.clone()));
            n
        }
    };
    let m = match &skel.rhs {
        Term::Conom(n) => n.clone(),
        t => {
            let n = fresh.next("m");
            to_strip.push(Ineq::new(t.clone(), Term::Conom(n.clone())));
            n
        }
    };
    let pivotal = Ineq::new(Term::Nom(j.clone()), Term::Conom(m.clone()));
    trace.push(
        "contrapositive",
        print_meta(&c.to_meta()),
        format!("{} !<= {}", print_term(&skel.lhs), print_term(&skel.rhs)),
        format!("pivotal {j}, {m}"),
    );

    let mut disjuncts = Vec::new();
    for a in &c.antecedent {
        let (flipped, main) = match (&a.lhs, &a.rhs) {
            (Term::Nom(_), _) => (Ineq::new(a.rhs.clone(), kappa(a.lhs.clone())), kappa(a.lhs.clone())),
            (_, Term::Conom(_)) => (Ineq::new(lambda(a.rhs.clone()), a.lhs.clone()), lambda(a.rhs.clone())),
            _ => return Err(KrachtError::NotStrippable(print_ineq(a))),
        };
        let body = strip_flat(&flipped, &main, &mut fresh, sig)?;
        trace.push("strip-consequent", print_ineq(&flipped), print_meta(&body), "");
        disjuncts.push(KrachtDisjunct { body, main });
    }

    let mut restrictions = Vec::new();
    let mut flats = Vec::new();
    for i in &to_strip {
        strip_antecedent(i, &mut fresh, sig, &mut restrictions, &mut flats)?;
        trace.push("strip-antecedent", print_ineq(i), format!("{} restrictions", restrictions.len()), "");
    }
    let mut seen = BTreeSet::new();
    flats.retain(|f| seen.insert(f.clone()));

    let mut antecedent = Vec::new();
    let mut type1 = Vec::new();
    let mut restricted: BTreeSet<String> = BTreeSet::new();
    for f in flats {
        match (&f.lhs, &f.rhs) {
            (w, Term::App(conn, args)) | (Term::App(conn, args), w) => {
                let vars: Vec<(Sort, String)> = args.iter().map(|a| atom_name(a).expect("flat")).collect();
                restricted.extend(vars.iter().map(|(_, n)| n.clone()));
                type1.push(Restriction { vars, conn: conn.clone(), restrictor: w.clone() });
            }
            _ => antecedent.push(f),
        }
    }

    let mut prefix = vec![
        QuantifierEntry::plain(Sort::Nom, &j, QuantKind::Pivotal),
        QuantifierEntry::plain(Sort::Conom, &m, QuantKind::Pivotal),
    ];
    for (s, n) in &c.quantified {
        if *n != j && *n != m && !restricted.contains(n) {
            prefix.push(QuantifierEntry::plain(*s, n, QuantKind::Alias));
        }
    }
    prefix.extend(restrictions.into_iter().map(|r| QuantifierEntry::restricted(r, QuantKind::Type2)));
    prefix.extend(type1.into_iter().map(|r| QuantifierEntry::restricted(r, QuantKind::Type1)));
    Ok(KrachtForm { prefix, antecedent, pivotal, disjuncts })
}

/// Kracht form of a definite inductive inequality.
pub fn inductive_to_kracht(ineq: &Ineq, sig: &Signature) -> Result<KrachtForm, KrachtError> {
    inductive_to_kracht_traced(ineq, sig).map(|(k, _)| k)
}

pub fn inductive_to_kracht_traced(ineq: &Ineq, sig: &Signature) -> Result<(KrachtForm, Trace), KrachtError> {
    let run = run_alba(ineq, sig)?;
    if run.preprocessed.len() != 1 {
        return Err(KrachtError::Split(run.preprocessed.len()));
    }
    let Some(c) = run.condensed.first() else {
        return Err(AlbaError::NotDefiniteInductive(print_ineq(ineq)).into());
    };
    let mut trace = run.trace.clone();
    let k = kracht_from_condensed(c, sig, &mut trace)?;
    Ok((k, trace))
}

// ---------------------------------------------------------------------
// Validation

pub(crate) fn flatten_and(m: &Meta) -> Vec<&Meta> {
    match m {
        Meta::And(v) => v.iter().flat_map(flatten_and).collect(),
        m => vec![m],
    }
}

pub(crate) fn flatten_or(m: &Meta) -> Vec<&Meta> {
    match m {
        Meta::Or(v) => v.iter().flat_map(flatten_or).collect(),
        m => vec![m],
    }
}

/// Candidate main variables of a disjunct.
pub(crate) fn mains(m: &Meta) -> Vec<Term> {
    match m {
        Meta::Ineq(i) if is_flat(i) => {
            let mut out = Vec::new();
            if is_atom(&i.lhs) && i.lhs.is_nominal_sorted() {
                out.push(i.lhs.clone());
            }
            if is_atom(&i.rhs) && i.rhs.is_conominal_sorted() {
                out.push(i.rhs.clone());
            }
            out
        }
        Meta::And(v) | Meta::Or(v) if !v.is_empty() => {
            let mut out = mains(&v[0]);
            for x in &v[1..] {
                let other = mains(x);
                out.retain(|t| other.contains(t));
            }
            out
        }
        Meta::RExists(r, _) => vec![r.restrictor.clone()],
        Meta::RForall(r, _) => vec![rho(&r.restrictor)],
        _ => Vec::new(),
    }
}

struct DisjunctCheck<'a> {
    prefix_bound: &'a BTreeSet<String>,
    sig: &'a Signature,
    polarity: bool,
}

impl DisjunctCheck<'_> {
    fn check(&self, m: &Meta, main: &Term) -> Result<(), KrachtError> {
        match m {
            Meta::Ineq(i) => self.check_atom(i, main),
            Meta::And(v) | Meta::Or(v) => v.iter().try_for_each(|x| self.check(x, main)),
            Meta::RExists(r, body) | Meta::RForall(r, body) => {
                let universal = matches!(m, Meta::RForall(..));
                let expected = if universal { rho(main) } else { main.clone() };
                if r.restrictor != expected {
                    return Err(not_kracht(NotKrachtReason::Malformed, format!("restrictor {} is not the main variable", print_term(&r.restrictor))));
                }
                let main_names = pure_names(main);
                if meta_pure_names(body).iter().any(|n| main_names.contains(n)) {
                    return Err(not_kracht(NotKrachtReason::Malformed, format!("{} occurs under its own quantifier", print_term(main))));
                }
                let inner: Vec<Term> = r
                    .vars
                    .iter()
                    .map(|(s, n)| {
                        let t = crate::syntax::pure_term(*s, n);
                        if universal { rho(&t) } else { t }
                    })
                    .collect();
                let items = if universal { flatten_or(body) } else { flatten_and(body) };
                for it in items {
                    if matches!(it, Meta::And(v) | Meta::Or(v) if v.is_empty()) {
                        continue;
                    }
                    let Some(w) = mains(it).into_iter().find(|t| inner.contains(t)) else {
                        return Err(not_kracht(NotKrachtReason::Malformed, format!("no main variable in {}", print_meta(it))));
                    };
                    self.check(it, &w)?;
                }
                Ok(())
            }
            _ => Err(not_kracht(NotKrachtReason::Malformed, print_meta(m))),
        }
    }

    /// Non-main atoms must be nominals in negative or conominals in positive
    /// position, and bound in the prefix.
    fn check_atom(&self, i: &Ineq, main: &Term) -> Result<(), KrachtError> {
        if !is_flat(i) {
            return Err(not_kracht(NotKrachtReason::Malformed, format!("{} is not flat", print_ineq(i))));
        }
        let (other, sign) = if i.lhs == *main && main.is_nominal_sorted() {
            (&i.rhs, Sign::Minus)
        } else if i.rhs == *main && main.is_conominal_sorted() {
            (&i.lhs, Sign::Plus)
        } else {
            return Err(not_kracht(NotKrachtReason::Malformed, format!("{} is not on display in {}", print_term(main), print_ineq(i))));
        };
        let mut err = None;
        other.walk_signed(sign, self.sig, &mut |t, s| {
            if err.is_some() || !is_atom(t) {
                return;
            }
            let want = if t.is_nominal_sorted() { Sign::Minus } else { Sign::Plus };
            if self.polarity && s != want && !matches!(t, Term::Kappa(_) | Term::Lambda(_)) {
                err = Some(not_kracht(NotKrachtReason::PolarityViolation, format!("{} in {}", print_term(t), print_ineq(i))));
            }
            if let Some((_, n)) = atom_name(t) {
                if !self.prefix_bound.contains(&n) && matches!(t, Term::Nom(_) | Term::Conom(_)) {
                    err = Some(not_kracht(NotKrachtReason::NonInherentlyUniversalAtomVar, format!("{n} in {}", print_ineq(i))));
                }
            }
        });
        err.map_or(Ok(()), Err)
    }
}

/// Parses a closed meta-formula into a Kracht form, checking all the
/// conditions on prefix, antecedent and disjuncts.
pub fn validate_kracht(mf: &Meta, sig: &Signature) -> Result<KrachtForm, KrachtError> {
    parse_kracht(mf, sig, true)
}

/// Like [`validate_kracht`] but without the polarity condition on disjunct
/// atoms. Compaction still goes through on such forms; the resulting
/// inequality need not be Sahlqvist.
pub fn kracht_shape(mf: &Meta, sig: &Signature) -> Result<KrachtForm, KrachtError> {
    parse_kracht(mf, sig, false)
}

fn parse_kracht(mf: &Meta, sig: &Signature, polarity: bool) -> Result<KrachtForm, KrachtError> {
    let mut prefix = Vec::new();
    let mut cur = mf;
    let (ant, cons) = loop {
        match cur {
            Meta::Forall(s, n, b) => {
                prefix.push(QuantifierEntry::plain(*s, n, QuantKind::Plain));
                cur = b;
            }
            Meta::RForall(r, b) => {
                prefix.push(QuantifierEntry::restricted(r.clone(), QuantKind::Plain));
                cur = b;
            }
            Meta::Imp(a, c) => break (a, c),
            m => return Err(not_kracht(NotKrachtReason::NoPivotal, format!("no implication in {}", print_meta(m)))),
        }
    };

    let mut pivotal = Vec::new();
    let mut antecedent = Vec::new();
    for a in flatten_and(ant) {
        match a {
            Meta::NegIneq(i) => pivotal.push(i.clone()),
            Meta::Ineq(i) => antecedent.push(i.clone()),
            m => return Err(not_kracht(NotKrachtReason::Malformed, format!("antecedent item {}", print_meta(m)))),
        }
    }
    let pivotal = match pivotal.len() {
        0 => return Err(not_kracht(NotKrachtReason::NoPivotal, print_meta(ant))),
        1 => pivotal.pop().expect("one"),
        _ => return Err(not_kracht(NotKrachtReason::MultiPivotal, print_meta(ant))),
    };
    let (j, m) = match (&pivotal.lhs, &pivotal.rhs) {
        (Term::Nom(j), Term::Conom(m)) => (j.clone(), m.clone()),
        _ => return Err(not_kracht(NotKrachtReason::Malformed, format!("pivotal {}", print_ineq(&pivotal)))),
    };

    // Scoping, and names used as restrictors in the prefix.
    let mut bound: BTreeSet<String> = BTreeSet::new();
    let mut restrictor_count: BTreeMap<String, usize> = BTreeMap::new();
    for q in &prefix {
        if let Some((_, t)) = &q.restriction {
            for n in pure_names(t) {
                if !bound.contains(&n) {
                    return Err(not_kracht(NotKrachtReason::Malformed, format!("restrictor {n} is not bound before use")));
                }
                *restrictor_count.entry(n).or_default() += 1;
            }
        }
        for (_, n) in &q.vars {
            if !bound.insert(n.clone()) {
                return Err(not_kracht(NotKrachtReason::Malformed, format!("{n} bound twice")));
            }
        }
    }
    for n in [&j, &m] {
        if !prefix.iter().any(|q| q.restriction.is_none() && q.vars[0].1 == *n) {
            return Err(not_kracht(NotKrachtReason::Malformed, format!("pivotal variable {n} is not plainly quantified")));
        }
    }

    let mut disjuncts = Vec::new();
    let check = DisjunctCheck { prefix_bound: &bound, sig, polarity };
    for d in flatten_or(cons) {
        let cands = mains(d);
        let Some(main) = cands.iter().find(|t| matches!(t, Term::Kappa(_) | Term::Lambda(_))).cloned() else {
            return Err(not_kracht(NotKrachtReason::Malformed, format!("no main variable of shape k(u) or l(u) in {}", print_meta(d))));
        };
        check.check(d, &main)?;
        disjuncts.push(KrachtDisjunct { body: d.clone(), main });
    }

    let mut ant_names: BTreeSet<String> = BTreeSet::new();
    for i in &antecedent {
        match (&i.lhs, &i.rhs) {
            (Term::Nom(a), Term::Nom(b)) | (Term::Conom(a), Term::Conom(b)) => {
                ant_names.insert(a.clone());
                ant_names.insert(b.clone());
            }
            _ => return Err(not_kracht(NotKrachtReason::AliasViolation, format!("antecedent inequality {}", print_ineq(i)))),
        }
    }
    let mut cons_names = BTreeSet::new();
    for d in &disjuncts {
        cons_names.extend(meta_pure_names(&d.body));
    }

    for q in prefix.iter_mut() {
        let n = &q.vars.first().map(|v| v.1.clone()).unwrap_or_default();
        if q.restriction.is_none() {
            if *n == j || *n == m {
                q.kind = QuantKind::Pivotal;
                continue;
            }
            let (s, _) = q.vars[0];
            let count = antecedent
                .iter()
                .filter(|i| match s {
                    Sort::Nom => i.rhs == Term::Nom(n.clone()),
                    Sort::Conom => i.lhs == Term::Conom(n.clone()),
                })
                .count();
            if count != 1 {
                return Err(not_kracht(NotKrachtReason::AliasViolation, format!("{n} restricts {count} antecedent inequalities")));
            }
            q.kind = QuantKind::Alias;
        } else {
            let in_cons = q.vars.iter().any(|(_, v)| cons_names.contains(v));
            let in_ant = q.vars.iter().any(|(_, v)| ant_names.contains(v) || restrictor_count.contains_key(v));
            q.kind = match (in_cons, in_ant) {
                (true, false) => QuantKind::Type1,
                (false, _) => {
                    if q.vars.iter().any(|(_, v)| restrictor_count.get(v).copied().unwrap_or(0) > 1) {
                        return Err(not_kracht(NotKrachtReason::QuantifierTypeViolation, format!("{} restricts twice", print_meta(&q.wrap(Meta::And(vec![]))))));
                    }
                    QuantKind::Type2
                }
                (true, true) => {
                    return Err(not_kracht(
                        NotKrachtReason::QuantifierTypeViolation,
                        format!("{} binds variables of both antecedent and consequent", print_meta(&q.wrap(Meta::And(vec![])))),
                    ))
                }
            };
        }
    }
    Ok(KrachtForm { prefix, antecedent, pivotal, disjuncts })
}

// ---------------------------------------------------------------------
// Refinement

/// Gives every consequent occurrence of a pivotal variable its own fresh
/// alias, and drops pivot aliases used nowhere else. Restricted quantifiers
/// and aliases bounding restricted variables are kept.
pub fn refine(kf: &KrachtForm) -> KrachtForm {
    refine_with(kf, true)
}

/// With `split` false, all consequent occurrences of a pivotal variable
/// share one alias. Splitting is only sound under the polarity condition.
pub fn refine_with(kf: &KrachtForm, split: bool) -> KrachtForm {
    let mut out = kf.clone();
    let (j, m) = kf.pivots();
    let mut fresh = Fresh::new(kf.names());
    let mut new_aliases = Vec::new();
    for (target, stem) in [(Term::Nom(j.clone()), "h"), (Term::Conom(m.clone()), "o")] {
        let Some(sort) = target.sort() else { continue };
        let leaf = Leaf::pure(sort, atom_name(&target).expect("pure").1.as_str());
        let mut made = Vec::new();
        let mut shared: Option<Term> = None;
        let mut next = || {
            if let Some(t) = &shared {
                return t.clone();
            }
            let n = fresh.next(stem);
            made.push(n.clone());
            let t = pure_term(sort, &n);
            if !split {
                shared = Some(t.clone());
            }
            t
        };
        for d in out.disjuncts.iter_mut() {
            if d.main.contains(&leaf) {
                let renaming = BTreeMap::from([(leaf.clone(), next())]);
                let main = d.main.subst(&renaming);
                d.body = split_disjunct(&d.body, &d.main, &main, &renaming, &target, &mut next);
                d.main = main;
            } else {
                d.body = split_meta(&d.body, &target, &mut next);
            }
        }
        for n in made {
            let a = pure_term(sort, &n);
            out.antecedent.push(match sort {
                Sort::Nom => Ineq::new(target.clone(), a),
                Sort::Conom => Ineq::new(a, target.clone()),
            });
            new_aliases.push(QuantifierEntry::plain(sort, &n, QuantKind::Alias));
        }
    }
    let at = out.prefix.iter().position(|q| q.restriction.is_some()).unwrap_or(out.prefix.len());
    out.prefix.splice(at..at, new_aliases);

    let cons = out.consequent_names();
    let is_pivot = |t: &Term| *t == Term::Nom(j.clone()) || *t == Term::Conom(m.clone());
    let dropped: Vec<String> = out
        .prefix
        .iter()
        .filter(|q| q.kind == QuantKind::Alias && !cons.contains(&q.vars[0].1))
        .map(|q| q.vars[0].1.clone())
        .filter(|n| {
            let uses: Vec<&Ineq> = out.antecedent.iter().filter(|i| pure_names(&i.lhs).contains(n) || pure_names(&i.rhs).contains(n)).collect();
            let restrictor = out.prefix.iter().any(|r| r.restriction.as_ref().is_some_and(|(_, t)| pure_names(t).contains(n)));
            !restrictor && uses.len() == 1 && (is_pivot(&uses[0].lhs) || is_pivot(&uses[0].rhs))
        })
        .collect();
    out.prefix.retain(|q| !(q.kind == QuantKind::Alias && dropped.contains(&q.vars[0].1)));
    out.antecedent.retain(|i| {
        let alias_side = match (&i.lhs, &i.rhs) {
            (Term::Nom(_), Term::Nom(b)) => b,
            (Term::Conom(a), Term::Conom(_)) => a,
            _ => return true,
        };
        !dropped.contains(alias_side)
    });
    out
}

fn split_term(t: &Term, target: &Term, next: &mut dyn FnMut() -> Term) -> Term {
    if t == target {
        return next();
    }
    let kids: Vec<Term> = t.children().into_iter().map(|c| split_term(c, target, next)).collect();
    crate::classifier::rebuild(t, kids)
}

fn split_ineq(i: &Ineq, target: &Term, next: &mut dyn FnMut() -> Term) -> Ineq {
    Ineq::new(split_term(&i.lhs, target, next), split_term(&i.rhs, target, next))
}

/// Replaces each occurrence of `target` with a fresh term from `next`.
fn split_meta(m: &Meta, target: &Term, next: &mut dyn FnMut() -> Term) -> Meta {
    match m {
        Meta::Ineq(i) => Meta::Ineq(split_ineq(i, target, next)),
        Meta::NegIneq(i) => Meta::NegIneq(split_ineq(i, target, next)),
        Meta::And(v) => Meta::And(v.iter().map(|x| split_meta(x, target, next)).collect()),
        Meta::Or(v) => Meta::Or(v.iter().map(|x| split_meta(x, target, next)).collect()),
        Meta::Not(a) => Meta::Not(Box::new(split_meta(a, target, next))),
        Meta::Imp(a, b) => Meta::Imp(Box::new(split_meta(a, target, next)), Box::new(split_meta(b, target, next))),
        Meta::Forall(s, n, b) => Meta::Forall(*s, n.clone(), Box::new(split_meta(b, target, next))),
        Meta::Exists(s, n, b) => Meta::Exists(*s, n.clone(), Box::new(split_meta(b, target, next))),
        Meta::RForall(r, b) => Meta::RForall(r.clone(), Box::new(split_meta(b, target, next))),
        Meta::RExists(r, b) => Meta::RExists(r.clone(), Box::new(split_meta(b, target, next))),
    }
}

/// As [`split_meta`], except that the occurrences standing for the main
/// variable all become `new_main`.
fn split_disjunct(
    m: &Meta,
    main: &Term,
    new_main: &Term,
    renaming: &BTreeMap<Leaf, Term>,
    target: &Term,
    next: &mut dyn FnMut() -> Term,
) -> Meta {
    match m {
        Meta::Ineq(i) if i.lhs == *main => Meta::Ineq(Ineq::new(new_main.clone(), split_term(&i.rhs, target, next))),
        Meta::Ineq(i) if i.rhs == *main => Meta::Ineq(Ineq::new(split_term(&i.lhs, target, next), new_main.clone())),
        Meta::And(v) => Meta::And(v.iter().map(|x| split_disjunct(x, main, new_main, renaming, target, next)).collect()),
        Meta::Or(v) => Meta::Or(v.iter().map(|x| split_disjunct(x, main, new_main, renaming, target, next)).collect()),
        Meta::RForall(r, b) | Meta::RExists(r, b) => {
            let mut r = r.clone();
            r.restrictor = r.restrictor.subst(renaming);
            let b = Box::new(split_meta(b, target, next));
            if matches!(m, Meta::RForall(..)) { Meta::RForall(r, b) } else { Meta::RExists(r, b) }
        }
        m => split_meta(m, target, next),
    }
}

#[cfg(test)]
mod tests;
