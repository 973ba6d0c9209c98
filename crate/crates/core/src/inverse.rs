//! Inverse correspondence: from a Kracht formula back to a very simple
//! Sahlqvist inequality over the residuated language, and from there, when
//! possible, to an inductive inequality of the base language.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::alba::{close_pure, la_ra, simplify, Adjoint};
use crate::classifier::{analyse, classify_inequality, classify_tree, is_crypto_inductive, Label};
use crate::kracht::{
    flatten_and, flatten_or, mains, refine_with, rho, validate_kracht, KrachtDisjunct, KrachtError, KrachtForm, NotKrachtReason,
    QuantKind,
};
use crate::signature::{Family, Ot, Signature};
use crate::syntax::{
    join_all, meet_all, print_ineq, print_meta, print_term, pure_term, Fresh, Ineq, Leaf, Meta, Sign, Sort, Term,
};
use crate::trace::Trace;

pub const FLAG_NO_L_EQUIVALENT: &str = "no-L-equivalent-found";
pub const FLAG_NOT_VERY_SIMPLE: &str = "not-very-simple-sahlqvist";
pub const FLAG_POLARITY: &str = "polarity-violation";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InverseError {
    #[error(transparent)]
    NotKracht(#[from] KrachtError),
    #[error("unexpected shape: {0}")]
    InternalShape(String),
    #[error("not crypto-inductive: {0}")]
    NotCryptoInductive(String),
}

fn shape(detail: impl Into<String>) -> InverseError {
    InverseError::InternalShape(detail.into())
}

// ---------------------------------------------------------------------
// Consequent compaction

/// Compacts a Kracht disjunct into a single inequality with its main
/// variable on display.
pub fn disjunct_compaction(d: &KrachtDisjunct, sig: &Signature) -> Result<Ineq, InverseError> {
    let out = compact(&d.body, &d.main, sig)?;
    let other = if out.lhs == d.main { &out.rhs } else { &out.lhs };
    let main_leaves = d.main.leaves();
    if main_leaves.iter().any(|l| other.contains(l)) {
        return Err(shape(format!("{} occurs on both sides of {}", print_term(&d.main), print_ineq(&out))));
    }
    Ok(out)
}

fn displayed(main: &Term, s: Term) -> Ineq {
    if main.is_nominal_sorted() {
        Ineq::new(main.clone(), s)
    } else {
        Ineq::new(s, main.clone())
    }
}

/// The side of `i` opposite to `main`.
fn other_side(i: &Ineq, main: &Term) -> Result<Term, InverseError> {
    if main.is_nominal_sorted() && i.lhs == *main {
        Ok(i.rhs.clone())
    } else if main.is_conominal_sorted() && i.rhs == *main {
        Ok(i.lhs.clone())
    } else {
        Err(shape(format!("{} is not on display in {}", print_term(main), print_ineq(i))))
    }
}

fn compact(m: &Meta, main: &Term, sig: &Signature) -> Result<Ineq, InverseError> {
    match m {
        Meta::Ineq(i) => {
            other_side(i, main)?;
            Ok(i.clone())
        }
        Meta::And(v) | Meta::Or(v) => {
            let sides = v
                .iter()
                .map(|x| compact(x, main, sig).and_then(|i| other_side(&i, main)))
                .collect::<Result<Vec<_>, _>>()?;
            // A nominal main is join-prime, a conominal one meet-prime.
            let conj = matches!(m, Meta::And(_)) == main.is_nominal_sorted();
            Ok(displayed(main, if conj { meet_all(sides) } else { join_all(sides) }))
        }
        Meta::RExists(r, body) | Meta::RForall(r, body) => {
            let universal = matches!(m, Meta::RForall(..));
            let inner: Vec<Term> = r
                .vars
                .iter()
                .map(|(s, n)| {
                    let t = pure_term(*s, n);
                    if universal { rho(&t) } else { t }
                })
                .collect();
            let items = if universal { flatten_or(body) } else { flatten_and(body) };
            let mut groups: Vec<Vec<Meta>> = vec![Vec::new(); inner.len()];
            for it in items {
                if matches!(it, Meta::And(v) | Meta::Or(v) if v.is_empty()) {
                    continue;
                }
                let k = mains(it)
                    .iter()
                    .find_map(|t| inner.iter().position(|u| u == t))
                    .ok_or_else(|| shape(format!("no bound main variable in {}", print_meta(it))))?;
                groups[k].push(it.clone());
            }
            let mut args = Vec::new();
            for (u, g) in inner.iter().zip(groups) {
                let grouped = if universal { Meta::Or(g) } else { Meta::And(g) };
                let c = compact(&grouped, u, sig)?;
                args.push(other_side(&c, u)?);
            }
            let app = Term::App(r.conn.clone(), args);
            let w = if universal { rho(&r.restrictor) } else { r.restrictor.clone() };
            if w != *main {
                return Err(shape(format!("quantifier restricted by {} under main {}", print_term(&r.restrictor), print_term(main))));
            }
            Ok(displayed(&w, app))
        }
        m => Err(shape(format!("not a disjunct: {}", print_meta(m)))),
    }
}

// ---------------------------------------------------------------------
// Antecedent compaction

/// Eliminates the type-2 quantifiers and merges what remains of the
/// antecedent into `j <= phi` and `psi <= m`.
pub fn compact_antecedent(kf: &KrachtForm, sig: &Signature, trace: &mut Trace) -> Result<(Term, Term), InverseError> {
    let (j, m) = kf.pivots();
    let mut ineqs: Vec<Ineq> = kf.antecedent.clone();
    for q in &kf.prefix {
        if let Some(r) = q.as_restriction() {
            if q.kind != QuantKind::Type2 {
                ineqs.push(r.inequality(sig));
            }
        }
    }
    let type2: Vec<_> = kf.prefix.iter().filter(|q| q.kind == QuantKind::Type2).collect();
    // Type-2 restrictions enter one at a time, rightmost first.
    for q in type2.iter().rev() {
        let r = q.as_restriction().expect("type-2 entries are restricted");
        let restriction = r.inequality(sig);
        let mut sub = BTreeMap::new();
        for (s, u) in &r.vars {
            let ut = pure_term(*s, u);
            let leaf = Leaf::pure(*s, u);
            let mut bounds = Vec::new();
            let mut rest = Vec::new();
            for i in ineqs.drain(..) {
                let on_display = match s {
                    Sort::Nom => i.lhs == ut && !i.rhs.contains(&leaf),
                    Sort::Conom => i.rhs == ut && !i.lhs.contains(&leaf),
                };
                if on_display {
                    bounds.push(if *s == Sort::Nom { i.rhs } else { i.lhs });
                } else if i.contains(&leaf) {
                    return Err(shape(format!("{u} occurs in {} off display", print_ineq(&i))));
                } else {
                    rest.push(i);
                }
            }
            ineqs = rest;
            let x = match s {
                Sort::Nom => meet_all(bounds),
                Sort::Conom => join_all(bounds),
            };
            sub.insert(leaf, x);
        }
        let out = restriction.subst(&sub);
        trace.push(
            "type-2-elimination",
            print_ineq(&restriction),
            print_ineq(&out),
            format!("Ackermann on {}", r.vars.iter().map(|v| v.1.as_str()).collect::<Vec<_>>().join(",")),
        );
        ineqs.push(out);
    }
    let (jt, mt) = (Term::Nom(j.clone()), Term::Conom(m.clone()));
    let mut phi = Vec::new();
    let mut psi = Vec::new();
    for i in ineqs {
        if i.lhs == jt && !i.rhs.contains(&Leaf::nom(&j)) {
            phi.push(i.rhs);
        } else if i.rhs == mt && !i.lhs.contains(&Leaf::conom(&m)) {
            psi.push(i.lhs);
        } else {
            return Err(shape(format!("antecedent inequality {} is not about the pivotal pair", print_ineq(&i))));
        }
    }
    let (phi, psi) = (meet_all(phi), join_all(psi));
    trace.push(
        "antecedent-merge",
        print_meta(&Meta::and(kf.antecedent.iter().cloned().map(Meta::Ineq).collect())),
        format!("{} <= {} && {} <= {}", j, print_term(&phi), print_term(&psi), m),
        "inverse splitting",
    );
    Ok((phi, psi))
}

// ---------------------------------------------------------------------
// Pivotal elimination

/// `k <= gamma` or `delta <= l`, with `head` the `k` or `l`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Condition {
    pub head: Leaf,
    pub ineq: Ineq,
}

/// `conditions ==> phi <= psi`, universally closed over its pure variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PivotFree {
    pub conditions: Vec<Condition>,
    pub consequent: Ineq,
}

impl PivotFree {
    pub fn to_meta(&self) -> Meta {
        let body = if self.conditions.is_empty() {
            Meta::Ineq(self.consequent.clone())
        } else {
            Meta::imp(Meta::and(self.conditions.iter().map(|c| Meta::Ineq(c.ineq.clone())).collect()), Meta::Ineq(self.consequent.clone()))
        };
        close_pure(body)
    }
}

impl fmt::Display for PivotFree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_meta(&self.to_meta()))
    }
}

/// Contraposes the compacted formula and eliminates the pivotal pair.
pub fn eliminate_pivotal(compacted: &[Ineq], phi: &Term, psi: &Term) -> Result<PivotFree, InverseError> {
    let mut by_nom: BTreeMap<String, Vec<Term>> = BTreeMap::new();
    let mut by_conom: BTreeMap<String, Vec<Term>> = BTreeMap::new();
    for c in compacted {
        match (&c.lhs, &c.rhs) {
            (g, Term::Kappa(k)) => match k.as_ref() {
                Term::Nom(k) => by_nom.entry(k.clone()).or_default().push(g.clone()),
                _ => return Err(shape(print_ineq(c))),
            },
            (Term::Lambda(l), d) => match l.as_ref() {
                Term::Conom(l) => by_conom.entry(l.clone()).or_default().push(d.clone()),
                _ => return Err(shape(print_ineq(c))),
            },
            _ => return Err(shape(format!("compacted disjunct {} has no κ/λ main", print_ineq(c)))),
        }
    }
    let mut conditions = Vec::new();
    for (k, gs) in by_nom {
        conditions.push(Condition { head: Leaf::nom(&k), ineq: Ineq::new(Term::Nom(k), meet_all(gs)) });
    }
    for (l, ds) in by_conom {
        conditions.push(Condition { head: Leaf::conom(&l), ineq: Ineq::new(join_all(ds), Term::Conom(l)) });
    }
    Ok(PivotFree { conditions, consequent: Ineq::new(phi.clone(), psi.clone()) })
}

// ---------------------------------------------------------------------
// Very simple Sahlqvist synthesis

/// Substitutes the conditions into the consequent and turns the remaining
/// nominals into `p_<name>` and conominals into `q_<name>`.
pub fn to_very_simple_sahlqvist(eq: &PivotFree) -> Result<(Ineq, BTreeMap<String, Ot>), InverseError> {
    let mut pending: Vec<(Leaf, Term)> = eq
        .conditions
        .iter()
        .map(|c| {
            let by = if c.head.to_term() == c.ineq.lhs { &c.ineq.rhs } else { &c.ineq.lhs };
            (c.head.clone(), by.clone())
        })
        .collect();
    let mut out = eq.consequent.clone();
    while !pending.is_empty() {
        let pos = pending
            .iter()
            .position(|(_, t)| pending.iter().all(|(l, _)| !t.contains(l)))
            .ok_or_else(|| shape("cyclic conditions"))?;
        let (leaf, by) = pending.remove(pos);
        let sub = BTreeMap::from([(leaf, by)]);
        out = out.subst(&sub);
        for (_, t) in pending.iter_mut() {
            *t = t.subst(&sub);
        }
    }
    let mut eps = BTreeMap::new();
    let mut ren = BTreeMap::new();
    for l in out.leaves() {
        match &l {
            Leaf::Pure(Sort::Nom, n) => {
                let p = format!("p_{n}");
                eps.insert(p.clone(), Ot::One);
                ren.insert(l.clone(), Term::Var(p));
            }
            Leaf::Pure(Sort::Conom, n) => {
                let q = format!("q_{n}");
                eps.insert(q.clone(), Ot::Dual);
                ren.insert(l.clone(), Term::Var(q));
            }
            Leaf::Var(v) => return Err(shape(format!("proposition variable {v} in a pure formula"))),
        }
    }
    let out = out.subst(&ren);
    if out.lhs.any(&|t| matches!(t, Term::Kappa(_) | Term::Lambda(_))) || out.rhs.any(&|t| matches!(t, Term::Kappa(_) | Term::Lambda(_))) {
        return Err(shape(format!("κ or λ left in {}", print_ineq(&out))));
    }
    Ok((Ineq::new(simplify(&out.lhs), simplify(&out.rhs)), eps))
}

// ---------------------------------------------------------------------
// Unpacking into the base language

fn in_base_term(t: &Term, sig: &Signature) -> bool {
    !t.any(&|x| match x {
        Term::App(n, _) => !sig.in_base(n),
        Term::Kappa(_) | Term::Lambda(_) => true,
        _ => false,
    })
}

fn topmost_proper(t: &Term, sig: &Signature, path: &mut Vec<usize>) -> bool {
    if matches!(t, Term::App(n, _) if !sig.in_base(n)) {
        return true;
    }
    for (k, c) in t.children().into_iter().enumerate() {
        path.push(k);
        if topmost_proper(c, sig, path) {
            return true;
        }
        path.pop();
    }
    false
}

fn replace_signed(t: &Term, root: Sign, target: &Term, sign: Sign, by: &Term, sig: &Signature) -> Term {
    let st = classify_tree(t, root, sig);
    let paths: Vec<Vec<usize>> = st.nodes.iter().filter(|n| n.term == *target && n.sign == sign).map(|n| n.path.clone()).collect();
    paths.iter().fold(t.clone(), |acc, p| crate::classifier::replace_at(&acc, p, by.clone()))
}

#[derive(Clone, Debug)]
struct Quasi {
    conditions: Vec<Ineq>,
    main: Ineq,
}

/// Position of a topmost non-base node: (condition index or main, side, path).
fn find_proper(q: &Quasi, sig: &Signature) -> Option<(Option<usize>, bool, Vec<usize>)> {
    let places = std::iter::once((None, &q.main)).chain(q.conditions.iter().enumerate().map(|(k, c)| (Some(k), c)));
    for (at, i) in places {
        for (lhs, side) in [(true, &i.lhs), (false, &i.rhs)] {
            let mut path = Vec::new();
            if topmost_proper(side, sig, &mut path) {
                return Some((at, lhs, path));
            }
        }
    }
    None
}

/// Eliminates `p` solved as `p <= by` (`upper`) or `by <= p`, provided the
/// other conditions and the main inequality have `p` only where the
/// substitution is sound.
fn ackermann_custom(q: &Quasi, skip: usize, p: &str, upper: bool, by: &Term, sig: &Signature) -> Option<Quasi> {
    let leaf = Leaf::var(p);
    if by.contains(&leaf) {
        return None;
    }
    let (cond_sign, main_sign) = if upper { (Sign::Minus, Sign::Plus) } else { (Sign::Plus, Sign::Minus) };
    let rest: Vec<&Ineq> = q.conditions.iter().enumerate().filter(|(k, _)| *k != skip).map(|(_, c)| c).collect();
    if rest.iter().any(|c| c.signs_of(&leaf, sig).iter().any(|s| *s != cond_sign)) {
        return None;
    }
    if q.main.signs_of(&leaf, sig).iter().any(|s| *s != main_sign) {
        return None;
    }
    let sub = BTreeMap::from([(leaf, by.clone())]);
    Some(Quasi { conditions: rest.into_iter().map(|c| c.subst(&sub)).collect(), main: q.main.subst(&sub) })
}

/// Rewrites a crypto-inductive inequality over the residuated language into
/// an equivalent one over the base language.
pub fn unpack_crypto(ineq: &Ineq, sig: &Signature, trace: &mut Trace) -> Result<Ineq, InverseError> {
    if in_base_term(&ineq.lhs, sig) && in_base_term(&ineq.rhs, sig) {
        return Ok(ineq.clone());
    }
    if is_crypto_inductive(ineq, sig).is_none() {
        return Err(InverseError::NotCryptoInductive(print_ineq(ineq)));
    }
    let mut fresh = Fresh::new(ineq.vars());
    let mut q = Quasi { conditions: Vec::new(), main: ineq.clone() };
    while let Some((at, lhs, path)) = find_proper(&q, sig) {
        let host = at.map_or(&q.main, |k| &q.conditions[k]).clone();
        let side = if lhs { &host.lhs } else { &host.rhs };
        let root = if lhs { Sign::Plus } else { Sign::Minus };
        let st = classify_tree(side, root, sig);
        let sign = st.node(&path).expect("path from search").sign;
        let alpha = crate::classifier::subterm(side, &path).clone();
        let x = fresh.next("x");
        let xt = Term::Var(x.clone());
        // Every occurrence of alpha with the same sign shares the variable.
        let new_host = Ineq::new(
            replace_signed(&host.lhs, Sign::Plus, &alpha, sign, &xt, sig),
            replace_signed(&host.rhs, Sign::Minus, &alpha, sign, &xt, sig),
        );
        // In the main inequality a positive node is bounded from above; in a
        // condition the direction flips.
        let below = (sign == Sign::Plus) == at.is_none();
        let cond = if below { Ineq::new(xt.clone(), alpha.clone()) } else { Ineq::new(alpha.clone(), xt.clone()) };
        match at {
            None => q.main = new_host,
            Some(k) => q.conditions[k] = new_host,
        }
        q.conditions.push(cond.clone());
        let ci = q.conditions.len() - 1;

        let adj = if below { Adjoint::La } else { Adjoint::Ra };
        let st = classify_tree(&alpha, if below { Sign::Minus } else { Sign::Plus }, sig);
        let mut done = None;
        for leaf_path in st.var_leaves() {
            let Term::Var(p) = crate::classifier::subterm(&alpha, &leaf_path) else { continue };
            let Ok(bound) = la_ra(&alpha, &leaf_path, adj, &xt, sig) else { continue };
            if !in_base_term(&bound, sig) {
                continue;
            }
            let upper = st.node(&leaf_path).expect("leaf").sign == Sign::Plus;
            if let Some(next) = ackermann_custom(&q, ci, p, upper, &bound, sig) {
                let solved = if upper { Ineq::new(Term::Var(p.clone()), bound) } else { Ineq::new(bound, Term::Var(p.clone())) };
                done = Some((next, solved));
                break;
            }
        }
        let Some((next, solved)) = done else {
            return Err(InverseError::NotCryptoInductive(format!("cannot unpack {}", print_ineq(&cond))));
        };
        trace.push("unpack", print_ineq(&cond), print_ineq(&solved), "adjunction, then Ackermann");
        q = next;
    }
    if !q.conditions.is_empty() {
        return Err(InverseError::NotCryptoInductive(format!("left with {}", print_ineq(&q.conditions[0]))));
    }
    Ok(Ineq::new(simplify(&q.main.lhs), simplify(&q.main.rhs)))
}

// ---------------------------------------------------------------------
// Pipeline

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct InverseResult {
    /// The refined input.
    pub kracht: KrachtForm,
    pub compacted: Vec<Ineq>,
    pub phi: Term,
    pub psi: Term,
    pub quasi: PivotFree,
    pub vss: Ineq,
    pub epsilon: BTreeMap<String, Ot>,
    /// Over the base language unless flagged.
    pub inductive: Ineq,
    pub flags: Vec<String>,
    pub trace: Trace,
}

pub fn inverse_alba(mf: &Meta, sig: &Signature) -> Result<InverseResult, InverseError> {
    let kf = validate_kracht(mf, sig)?;
    inverse_from_form(&kf, sig)
}

/// Runs the pipeline on an already parsed Kracht form.
pub fn inverse_from_form(kf: &KrachtForm, sig: &Signature) -> Result<InverseResult, InverseError> {
    let mut trace = Trace::default();
    let mut flags = Vec::new();
    let polarity_ok = !matches!(
        validate_kracht(&kf.to_meta(), sig),
        Err(KrachtError::NotKracht { reason: NotKrachtReason::PolarityViolation, .. })
    );
    if !polarity_ok {
        flags.push(FLAG_POLARITY.to_string());
    }
    let kf = refine_with(kf, polarity_ok);
    trace.push("refine", "", kf.to_string(), "");
    let mut compacted = Vec::new();
    for d in &kf.disjuncts {
        let c = disjunct_compaction(d, sig)?;
        trace.push("disjunct-compaction", print_meta(&d.body), print_ineq(&c), "");
        compacted.push(c);
    }
    let (phi, psi) = compact_antecedent(&kf, sig, &mut trace)?;
    let quasi = eliminate_pivotal(&compacted, &phi, &psi)?;
    trace.push("pivotal-elimination", "", quasi.to_string(), "contraposition, Ackermann on the pivotal pair");
    let (vss, epsilon) = to_very_simple_sahlqvist(&quasi)?;
    trace.push("very-simple-sahlqvist", quasi.to_string(), print_ineq(&vss), "Ackermann on the conditions");

    if analyse(&vss, sig, &epsilon).map_or(true, |a| a.label != Label::VerySimpleSahlqvist) {
        flags.push(FLAG_NOT_VERY_SIMPLE.to_string());
    }
    let inductive = match unpack_crypto(&vss, sig, &mut trace) {
        Ok(i) if classify_inequality(&i, sig).label >= Label::Inductive => i,
        Ok(_) | Err(_) => {
            flags.push(FLAG_NO_L_EQUIVALENT.to_string());
            vss.clone()
        }
    };
    trace.push("result", print_ineq(&vss), print_ineq(&inductive), flags.join(","));
    Ok(InverseResult { kracht: kf, compacted, phi, psi, quasi, vss, epsilon, inductive, flags, trace })
}

/// Connectives of a very simple Sahlqvist inequality that fall outside the
/// base language.
pub fn proper_connectives(i: &Ineq, sig: &Signature) -> BTreeSet<String> {
    let mut out = i.lhs.connectives();
    out.extend(i.rhs.connectives());
    out.retain(|c| !sig.in_base(c) && sig.get(c).is_some_and(|k| matches!(k.family, Family::F | Family::G)));
    out
}

#[cfg(test)]
mod tests;
