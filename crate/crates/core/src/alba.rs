//! Forward correspondence: preprocessing, first approximation, the
//! reduction-elimination cycle, and the condensed output shape.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::classifier::{
    all_analyses, analyse, child_signs, classify_tree, node_class, rebuild, subterm, Analysis,
    InductiveWitness, Side, Slot,
};
use crate::signature::{Family, Ot, Signature, IMP, RIMP, RSUB, SUB};
use crate::syntax::{
    join, join_all, meet, meet_all, print_ineq, print_meta, print_term, Fresh, Ineq, Leaf, Meta, Sign, Sort, Term,
};
use crate::trace::Trace;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlbaError {
    #[error("not inductive: {0}")]
    NotInductive(String),
    #[error("system is not in Ackermann shape for `{var}`: {ineq}")]
    NotInAckermannShape { var: String, ineq: String },
    #[error("rule not applicable: {0}")]
    RuleNotApplicable(String),
    #[error("not a PIA formula on the given path: {0}")]
    NotPIA(String),
    #[error("not definite inductive: {0}")]
    NotDefiniteInductive(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuasiInequality {
    pub antecedent: Vec<Ineq>,
    pub consequent: Ineq,
}

impl QuasiInequality {
    /// Universal closure over the pure variables.
    pub fn to_meta(&self) -> Meta {
        let body = if self.antecedent.is_empty() {
            Meta::Ineq(self.consequent.clone())
        } else {
            Meta::imp(Meta::and(self.antecedent.iter().cloned().map(Meta::Ineq).collect()), Meta::Ineq(self.consequent.clone()))
        };
        close_pure(body)
    }

    pub fn is_pure(&self) -> bool {
        self.consequent.is_pure() && self.antecedent.iter().all(Ineq::is_pure)
    }
}

impl fmt::Display for QuasiInequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ant: Vec<String> = self.antecedent.iter().map(print_ineq).collect();
        write!(f, "{} ==> {}", ant.join(" && "), print_ineq(&self.consequent))
    }
}

pub(crate) fn close_pure(body: Meta) -> Meta {
    let leaves: Vec<(Sort, String)> = body
        .free_leaves()
        .into_iter()
        .filter_map(|l| match l {
            Leaf::Pure(s, n) => Some((s, n)),
            Leaf::Var(_) => None,
        })
        .collect();
    body.close(&leaves)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MinimalValuation {
    pub var: String,
    pub candidates: Vec<Term>,
    /// Join of the candidates for ε = 1, meet for ε = ∂.
    pub aggregate: Term,
}

/// The condensed quasi-inequality: pure antecedents bounding the
/// non-critical pieces, and the skeleton with pure variables in place of
/// all pieces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Condensed {
    pub quantified: Vec<(Sort, String)>,
    pub antecedent: Vec<Ineq>,
    pub consequent: Ineq,
    /// Which kind of piece each quantified variable stands for.
    pub slots: BTreeMap<String, Slot>,
}

impl Condensed {
    pub fn to_meta(&self) -> Meta {
        let body = if self.antecedent.is_empty() {
            Meta::Ineq(self.consequent.clone())
        } else {
            Meta::imp(Meta::and(self.antecedent.iter().cloned().map(Meta::Ineq).collect()), Meta::Ineq(self.consequent.clone()))
        };
        body.close(&self.quantified)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AlbaRun {
    pub input: Ineq,
    pub preprocessed: Vec<Ineq>,
    /// One reduced, pure quasi-inequality per preprocessed inequality.
    pub systems: Vec<QuasiInequality>,
    pub trace: Trace,
    /// Condensed form per preprocessed inequality, when it is definite.
    pub condensed: Vec<Condensed>,
    /// Witness used for each preprocessed inequality.
    pub witnesses: Vec<InductiveWitness>,
    pub output: Meta,
}

// ---------------------------------------------------------------------
// Small term utilities

/// Removes `a ∧ a`, `a ∨ a` and unit laws for top and bottom.
pub fn simplify(t: &Term) -> Term {
    let t = t.map_children(simplify);
    match t {
        Term::Meet(a, b) => match (*a, *b) {
            (a, b) if a == b => a,
            (Term::Top, x) | (x, Term::Top) => x,
            (Term::Bot, _) | (_, Term::Bot) => Term::Bot,
            (a, b) => meet(a, b),
        },
        Term::Join(a, b) => match (*a, *b) {
            (a, b) if a == b => a,
            (Term::Bot, x) | (x, Term::Bot) => x,
            (Term::Top, _) | (_, Term::Top) => Term::Top,
            (a, b) => join(a, b),
        },
        t => t,
    }
}

/// [`simplify`] plus normality: an f-connective with ⊥ in a monotone or ⊤
/// in an antitone coordinate is ⊥, and dually for g-connectives.
pub fn simplify_normal(t: &Term, sig: &Signature) -> Term {
    let t = simplify(&t.map_children(|c| simplify_normal(c, sig)));
    let Term::App(name, args) = &t else { return t };
    let c = sig.conn(name);
    let (absorbing, result) = match c.family {
        Family::F => ((Term::Bot, Term::Top), Term::Bot),
        Family::G => ((Term::Top, Term::Bot), Term::Top),
    };
    let hit = args.iter().zip(&c.order_type.0).any(|(a, ot)| match ot {
        Ot::One => *a == absorbing.0,
        Ot::Dual => *a == absorbing.1,
    });
    if hit { result } else { t }
}

/// Removes only duplicated operands `a ∧ a` and `a ∨ a`.
pub fn simplify_idempotent(t: &Term) -> Term {
    let t = t.map_children(simplify_idempotent);
    match t {
        Term::Meet(a, b) if a == b => *a,
        Term::Join(a, b) if a == b => *a,
        t => t,
    }
}

fn subst_var(t: &Term, p: &str, by: &Term) -> Term {
    let mut b = BTreeMap::new();
    b.insert(Leaf::var(p), by.clone());
    t.subst(&b)
}

fn side_term(i: &Ineq, s: Side) -> &Term {
    match s {
        Side::Lhs => &i.lhs,
        Side::Rhs => &i.rhs,
    }
}

// ---------------------------------------------------------------------
// Preprocessing

/// Skeleton-region distribution (1a-1d) and PIA distribution toward
/// definiteness, at the first applicable node in pre-order.
fn distribute_once(t: &Term, s: Sign, in_pia: bool, sig: &Signature) -> Option<(Term, &'static str)> {
    let class = node_class(t, s, sig);
    let pia_here = in_pia || !class.skeleton();
    if let Some(r) = distribute_at(t, s, in_pia, pia_here, sig) {
        return Some(r);
    }
    let kids = t.children();
    let signs = child_signs(t, s, sig);
    for (i, (c, cs)) in kids.iter().zip(signs).enumerate() {
        if let Some((nc, rule)) = distribute_once(c, cs, pia_here, sig) {
            let mut all: Vec<Term> = kids.iter().map(|k| (*k).clone()).collect();
            all[i] = nc;
            return Some((rebuild(t, all), rule));
        }
    }
    None
}

fn split_child(c: &Term, want_join: bool) -> Option<(Term, Term)> {
    match (c, want_join) {
        (Term::Join(a, b), true) | (Term::Meet(a, b), false) => Some(((**a).clone(), (**b).clone())),
        _ => None,
    }
}

fn distribute_at(t: &Term, s: Sign, in_pia: bool, pia_here: bool, sig: &Signature) -> Option<(Term, &'static str)> {
    use Sign::*;
    match (t, s) {
        (Term::Meet(a, b), Plus) if !in_pia => {
            if let Some((x, y)) = split_child(a, true) {
                return Some((join(meet(x, (**b).clone()), meet(y, (**b).clone())), "distribute +meet over +join"));
            }
            if let Some((x, y)) = split_child(b, true) {
                return Some((join(meet((**a).clone(), x), meet((**a).clone(), y)), "distribute +meet over +join"));
            }
            None
        }
        (Term::Join(a, b), Minus) if !in_pia => {
            if let Some((x, y)) = split_child(a, false) {
                return Some((meet(join(x, (**b).clone()), join(y, (**b).clone())), "distribute -join over -meet"));
            }
            if let Some((x, y)) = split_child(b, false) {
                return Some((meet(join((**a).clone(), x), join((**a).clone(), y)), "distribute -join over -meet"));
            }
            None
        }
        (Term::Join(a, b), Plus) if pia_here => {
            if let Some((x, y)) = split_child(a, false) {
                return Some((meet(join(x, (**b).clone()), join(y, (**b).clone())), "distribute +join over +meet"));
            }
            if let Some((x, y)) = split_child(b, false) {
                return Some((meet(join((**a).clone(), x), join((**a).clone(), y)), "distribute +join over +meet"));
            }
            None
        }
        (Term::Meet(a, b), Minus) if pia_here => {
            if let Some((x, y)) = split_child(a, true) {
                return Some((join(meet(x, (**b).clone()), meet(y, (**b).clone())), "distribute -meet over -join"));
            }
            if let Some((x, y)) = split_child(b, true) {
                return Some((join(meet((**a).clone(), x), meet((**a).clone(), y)), "distribute -meet over -join"));
            }
            None
        }
        (Term::App(n, args), _) if !args.is_empty() => {
            let c = sig.conn(n);
            // F nodes turn joins in monotone and meets in antitone
            // coordinates into joins; G nodes dually into meets.
            let (rule, outer_join) = match (c.family, s) {
                (Family::F, Plus) if !in_pia => ("distribute +f", true),
                (Family::G, Minus) if !in_pia => ("distribute -g", false),
                (Family::F, Minus) if pia_here => ("distribute -f", true),
                (Family::G, Plus) if pia_here => ("distribute +g", false),
                _ => return None,
            };
            for (i, a) in args.iter().enumerate() {
                let want_join = (c.order_type.get(i) == Ot::One) == (c.family == Family::F);
                if let Some((x, y)) = split_child(a, want_join) {
                    let mut l = args.clone();
                    let mut r = args.clone();
                    l[i] = x;
                    r[i] = y;
                    let (l, r) = (Term::App(n.clone(), l), Term::App(n.clone(), r));
                    return Some((if outer_join { join(l, r) } else { meet(l, r) }, rule));
                }
            }
            None
        }
        _ => None,
    }
}

/// Eliminates one variable occurring with a single polarity.
fn eliminate_uniform(i: &Ineq, sig: &Signature) -> Option<(Ineq, String, Term)> {
    for p in i.vars() {
        let signs = i.signs_of(&Leaf::var(&p), sig);
        let by = if signs.iter().all(|s| *s == Sign::Minus) {
            Term::Bot
        } else if signs.iter().all(|s| *s == Sign::Plus) {
            Term::Top
        } else {
            continue;
        };
        let out = Ineq::new(simplify_normal(&subst_var(&i.lhs, &p, &by), sig), simplify_normal(&subst_var(&i.rhs, &p, &by), sig));
        return Some((out, p, by));
    }
    None
}

pub fn preprocess(ineq: &Ineq, sig: &Signature) -> Vec<Ineq> {
    preprocess_traced(ineq, sig, &mut Trace::default())
}

pub fn preprocess_traced(ineq: &Ineq, sig: &Signature, trace: &mut Trace) -> Vec<Ineq> {
    let mut work = vec![ineq.clone()];
    'outer: loop {
        for k in 0..work.len() {
            let cur = work[k].clone();
            if let Some((l, rule)) = distribute_once(&cur.lhs, Sign::Plus, false, sig) {
                work[k] = Ineq::new(l, cur.rhs.clone());
                trace.push("preprocess", print_ineq(&cur), print_ineq(&work[k]), rule);
                continue 'outer;
            }
            if let Some((r, rule)) = distribute_once(&cur.rhs, Sign::Minus, false, sig) {
                work[k] = Ineq::new(cur.lhs.clone(), r);
                trace.push("preprocess", print_ineq(&cur), print_ineq(&work[k]), rule);
                continue 'outer;
            }
            let split = match (&cur.lhs, &cur.rhs) {
                (Term::Join(a, b), r) => Some((Ineq::new((**a).clone(), r.clone()), Ineq::new((**b).clone(), r.clone()))),
                (l, Term::Meet(a, b)) => Some((Ineq::new(l.clone(), (**a).clone()), Ineq::new(l.clone(), (**b).clone()))),
                _ => None,
            };
            if let Some((x, y)) = split {
                trace.push("splitting", print_ineq(&cur), format!("{} ; {}", print_ineq(&x), print_ineq(&y)), "");
                work.splice(k..=k, [x, y]);
                continue 'outer;
            }
            if let Some((out, p, by)) = eliminate_uniform(&cur, sig) {
                let rule = if by == Term::Bot { "monotone variable elimination" } else { "antitone variable elimination" };
                trace.push("preprocess", print_ineq(&cur), print_ineq(&out), format!("{rule}: {p} := {}", print_term(&by)));
                work[k] = out;
                continue 'outer;
            }
        }
        break;
    }
    work
}

// ---------------------------------------------------------------------
// Single rules

/// Residual of an operator node in coordinate `coord`, with `chi` placed
/// in that coordinate.
fn residual_app(name: &str, args: &[Term], coord: usize, chi: Term, sig: &Signature) -> Result<Term, AlbaError> {
    let a = |i: usize| args[i].clone();
    let lattice = match (name, coord) {
        (IMP, 1) => Some(meet(chi.clone(), a(0))),
        (IMP, 0) => Some(Term::App(IMP.into(), vec![chi.clone(), a(1)])),
        (RIMP, 0) => Some(meet(chi.clone(), a(1))),
        (RIMP, 1) => Some(Term::App(IMP.into(), vec![chi.clone(), a(0)])),
        (SUB, 0) => Some(join(a(1), chi.clone())),
        (SUB, 1) => Some(Term::App(SUB.into(), vec![a(0), chi.clone()])),
        (RSUB, 1) => Some(join(a(0), chi.clone())),
        (RSUB, 0) => Some(Term::App(SUB.into(), vec![a(1), chi.clone()])),
        _ => None,
    };
    if let Some(t) = lattice {
        return Ok(t);
    }
    let (r, swap) = sig
        .residual_of(name, coord)
        .ok_or_else(|| AlbaError::RuleNotApplicable(format!("`{name}` has no residual in coordinate {}", coord + 1)))?;
    let mut new = args.to_vec();
    new[coord] = chi;
    if let Some(k) = swap {
        new.swap(coord, k);
    }
    Ok(Term::App(r, new))
}

/// One residuation (or splitting) step moving the top connective of `side`
/// to the other side, keeping coordinate `coord` in place. The first
/// returned inequality contains that coordinate.
pub fn apply_residuation(ineq: &Ineq, side: Side, coord: usize, sig: &Signature) -> Result<Vec<Ineq>, AlbaError> {
    let na = || AlbaError::RuleNotApplicable(format!("{} on the {side:?}", print_ineq(ineq)));
    match side {
        // chi <= t
        Side::Rhs => {
            let chi = ineq.lhs.clone();
            match &ineq.rhs {
                Term::Meet(a, b) => {
                    let (x, y) = if coord == 0 { (a, b) } else { (b, a) };
                    Ok(vec![Ineq::new(chi.clone(), (**x).clone()), Ineq::new(chi, (**y).clone())])
                }
                Term::Join(a, b) => {
                    let (x, y) = if coord == 0 { (a, b) } else { (b, a) };
                    Ok(vec![Ineq::new(Term::App(SUB.into(), vec![chi, (**y).clone()]), (**x).clone())])
                }
                Term::App(n, args) if coord < args.len() && sig.conn(n).family == Family::G => {
                    let r = residual_app(n, args, coord, chi, sig)?;
                    Ok(vec![match sig.conn(n).order_type.get(coord) {
                        Ot::One => Ineq::new(r, args[coord].clone()),
                        Ot::Dual => Ineq::new(args[coord].clone(), r),
                    }])
                }
                _ => Err(na()),
            }
        }
        // t <= chi
        Side::Lhs => {
            let chi = ineq.rhs.clone();
            match &ineq.lhs {
                Term::Join(a, b) => {
                    let (x, y) = if coord == 0 { (a, b) } else { (b, a) };
                    Ok(vec![Ineq::new((**x).clone(), chi.clone()), Ineq::new((**y).clone(), chi)])
                }
                Term::Meet(a, b) => {
                    let (x, y) = if coord == 0 { (a, b) } else { (b, a) };
                    Ok(vec![Ineq::new((**x).clone(), Term::App(IMP.into(), vec![(**y).clone(), chi]))])
                }
                Term::App(n, args) if coord < args.len() && sig.conn(n).family == Family::F => {
                    let r = residual_app(n, args, coord, chi, sig)?;
                    Ok(vec![match sig.conn(n).order_type.get(coord) {
                        Ot::One => Ineq::new(args[coord].clone(), r),
                        Ot::Dual => Ineq::new(r, args[coord].clone()),
                    }])
                }
                _ => Err(na()),
            }
        }
    }
}

/// One approximation step on coordinate `coord`: the displayed pure side
/// must be a nominal against an F-term or a conominal against a G-term.
pub fn apply_approximation(
    ineq: &Ineq,
    coord: usize,
    fresh: &mut Fresh,
    sig: &Signature,
) -> Result<(Ineq, Ineq), AlbaError> {
    let na = || AlbaError::RuleNotApplicable(print_ineq(ineq));
    let (pure_left, t) = match (&ineq.lhs, &ineq.rhs) {
        (Term::Nom(_), t @ Term::App(..)) => (true, t),
        (t @ Term::App(..), Term::Conom(_)) => (false, t),
        _ => return Err(na()),
    };
    let Term::App(n, args) = t else { unreachable!() };
    let c = sig.conn(n);
    let family_ok = if pure_left { c.family == Family::F } else { c.family == Family::G };
    if !family_ok || coord >= args.len() {
        return Err(na());
    }
    // Positive F and negative G coordinates take nominals.
    let nominal = (c.order_type.get(coord) == Ot::One) == pure_left;
    let v = if nominal { Term::Nom(fresh.next("j")) } else { Term::Conom(fresh.next("n")) };
    let side = if nominal { Ineq::new(v.clone(), args[coord].clone()) } else { Ineq::new(args[coord].clone(), v.clone()) };
    let mut new = args.clone();
    new[coord] = v;
    let app = Term::App(n.clone(), new);
    let main = if pure_left { Ineq::new(ineq.lhs.clone(), app) } else { Ineq::new(app, ineq.rhs.clone()) };
    Ok((main, side))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Adjoint {
    /// Left adjoint of a positive PIA formula.
    La,
    /// Right adjoint of a negative PIA formula.
    Ra,
}

/// Peels `phi` along `leaf` with `hole` on the other side, returning the
/// bound obtained for the leaf.
pub fn la_ra(phi: &Term, leaf: &[usize], which: Adjoint, hole: &Term, sig: &Signature) -> Result<Term, AlbaError> {
    let mut cur = match which {
        Adjoint::La => Ineq::new(hole.clone(), phi.clone()),
        Adjoint::Ra => Ineq::new(phi.clone(), hole.clone()),
    };
    let mut side = match which {
        Adjoint::La => Side::Rhs,
        Adjoint::Ra => Side::Lhs,
    };
    let mut path = leaf.to_vec();
    while let Some((&k, rest)) = path.split_first() {
        let t = side_term(&cur, side);
        if matches!((t, side), (Term::Meet(..), Side::Rhs) | (Term::Join(..), Side::Lhs)) {
            return Err(AlbaError::NotPIA(format!("{} is not definite", print_term(phi))));
        }
        let next = apply_residuation(&cur, side, k, sig).map_err(|_| AlbaError::NotPIA(print_term(phi)))?;
        let child = subterm(t, &[k]).clone();
        cur = next.into_iter().next().expect("one");
        side = if cur.lhs == child { Side::Lhs } else { Side::Rhs };
        path = rest.to_vec();
    }
    Ok(match side {
        Side::Lhs => cur.rhs,
        Side::Rhs => cur.lhs,
    })
}

/// Eliminates `var` from the antecedent by the right (ε = 1) or left
/// (ε = ∂) Ackermann rule.
pub fn ackermann_eliminate(
    system: &QuasiInequality,
    var: &str,
    eps: Ot,
    sig: &Signature,
) -> Result<QuasiInequality, AlbaError> {
    let p = Leaf::var(var);
    let pv = Term::Var(var.to_string());
    let mut bounds = Vec::new();
    let mut rest = Vec::new();
    for i in &system.antecedent {
        let solved = match eps {
            Ot::One => i.rhs == pv && !i.lhs.contains(&p),
            Ot::Dual => i.lhs == pv && !i.rhs.contains(&p),
        };
        if solved {
            bounds.push(if eps == Ot::One { i.lhs.clone() } else { i.rhs.clone() });
        } else {
            rest.push(i.clone());
        }
    }
    let need = if eps == Ot::One { Sign::Plus } else { Sign::Minus };
    for i in rest.iter().chain(std::iter::once(&system.consequent)) {
        if i.signs_of(&p, sig).iter().any(|s| *s != need) {
            return Err(AlbaError::NotInAckermannShape { var: var.to_string(), ineq: print_ineq(i) });
        }
    }
    let by = if eps == Ot::One { join_all(bounds) } else { meet_all(bounds) };
    let sub = |i: &Ineq| Ineq::new(subst_var(&i.lhs, var, &by), subst_var(&i.rhs, var, &by));
    Ok(QuasiInequality { antecedent: rest.iter().map(sub).collect(), consequent: sub(&system.consequent) })
}

pub fn first_approximation(ineq: &Ineq, fresh: &mut Fresh) -> QuasiInequality {
    let i0 = Term::Nom(fresh.next("i"));
    let m0 = Term::Conom(fresh.next("m"));
    QuasiInequality {
        antecedent: vec![Ineq::new(i0.clone(), ineq.lhs.clone()), Ineq::new(ineq.rhs.clone(), m0.clone())],
        consequent: Ineq::new(i0, m0),
    }
}

// ---------------------------------------------------------------------
// The reduction-elimination cycle

fn print_system(s: &[Ineq]) -> String {
    s.iter().map(print_ineq).collect::<Vec<_>>().join(" && ")
}

/// Splits and approximates the skeleton of the initial system.
fn approximate_skeleton(ant: &mut Vec<Ineq>, fresh: &mut Fresh, sig: &Signature, trace: &mut Trace) {
    let mut k = 0;
    while k < ant.len() {
        let cur = ant[k].clone();
        let split = match (&cur.lhs, &cur.rhs) {
            (Term::Nom(_), Term::Meet(a, b)) => Some((Ineq::new(cur.lhs.clone(), (**a).clone()), Ineq::new(cur.lhs.clone(), (**b).clone()))),
            (Term::Join(a, b), Term::Conom(_)) => Some((Ineq::new((**a).clone(), cur.rhs.clone()), Ineq::new((**b).clone(), cur.rhs.clone()))),
            _ => None,
        };
        if let Some((x, y)) = split {
            trace.push("splitting", print_ineq(&cur), format!("{} ; {}", print_ineq(&x), print_ineq(&y)), "");
            ant.splice(k..=k, [x, y]);
            continue;
        }
        let app = match (&cur.lhs, &cur.rhs) {
            (Term::Nom(_), t @ Term::App(..)) | (t @ Term::App(..), Term::Conom(_)) => Some(t),
            _ => None,
        };
        if let Some(Term::App(_, args)) = app {
            if let Some(h) = args.iter().position(|a| !a.is_pure()) {
                if let Ok((main, side)) = apply_approximation(&cur, h, fresh, sig) {
                    trace.push(
                        "approximation",
                        print_ineq(&cur),
                        format!("{} ; {}", print_ineq(&main), print_ineq(&side)),
                        format!("coordinate {}", h + 1),
                    );
                    ant[k] = main;
                    ant.push(side);
                    continue;
                }
            }
        }
        k += 1;
    }
}

/// First critical occurrence that is not yet alone on its side.
fn unsolved_critical(i: &Ineq, w: &InductiveWitness, sig: &Signature) -> Option<(Side, Vec<usize>)> {
    for (side, root) in [(Side::Lhs, Sign::Plus), (Side::Rhs, Sign::Minus)] {
        let st = classify_tree(side_term(i, side), root, sig);
        for path in st.var_leaves() {
            if path.is_empty() {
                continue;
            }
            let n = st.node(&path).expect("leaf");
            let Term::Var(v) = &n.term else { continue };
            // Moving a formula across the inequality flips its polarity, so
            // critical occurrences carry the opposite of their original sign.
            if w.is_critical(v, n.sign.flip()) {
                return Some((side, path));
            }
        }
    }
    None
}

fn residuate_all(ant: &mut Vec<Ineq>, w: &InductiveWitness, sig: &Signature, trace: &mut Trace) -> Result<(), AlbaError> {
    let mut k = 0;
    let mut budget = 10_000;
    while k < ant.len() {
        budget -= 1;
        if budget == 0 {
            return Err(AlbaError::RuleNotApplicable("residuation does not terminate".into()));
        }
        let cur = ant[k].clone();
        let Some((side, path)) = unsolved_critical(&cur, w, sig) else {
            k += 1;
            continue;
        };
        let next = apply_residuation(&cur, side, path[0], sig)?;
        let rule = if next.len() == 2 { "splitting" } else { "residuation" };
        trace.push(rule, print_ineq(&cur), print_system(&next), format!("coordinate {}", path[0] + 1));
        ant.splice(k..=k, next);
    }
    Ok(())
}

/// Runs the reduction-elimination cycle on one preprocessed inequality.
pub fn reduce(
    ineq: &Ineq,
    w: &InductiveWitness,
    sig: &Signature,
    fresh: &mut Fresh,
    trace: &mut Trace,
) -> Result<QuasiInequality, AlbaError> {
    let mut sys = first_approximation(ineq, fresh);
    trace.push("first-approximation", print_ineq(ineq), sys.to_string(), "");
    approximate_skeleton(&mut sys.antecedent, fresh, sig, trace);
    residuate_all(&mut sys.antecedent, w, sig, trace)?;
    for p in w.topological(&ineq.vars()) {
        let before = sys.to_string();
        sys = ackermann_eliminate(&sys, &p, w.eps(&p), sig)?;
        let rule = if w.eps(&p) == Ot::One { "ackermann-right" } else { "ackermann-left" };
        trace.push("ackermann", before, sys.to_string(), format!("{rule}: {p}"));
    }
    if !sys.is_pure() {
        return Err(AlbaError::NotInductive(format!("variables remain in {sys}")));
    }
    Ok(sys)
}

// ---------------------------------------------------------------------
// Condensed output

/// Path, inside a piece, of its unique critical leaf.
fn critical_leaf(piece: &Term, sign: Sign, w: &InductiveWitness, sig: &Signature) -> Result<(String, Vec<usize>), AlbaError> {
    let st = classify_tree(piece, sign, sig);
    let found: Vec<(String, Vec<usize>)> = st
        .var_leaves()
        .into_iter()
        .filter_map(|p| match &st.node(&p).expect("leaf").term {
            Term::Var(v) if w.is_critical(v, st.node(&p).expect("leaf").sign) => Some((v.clone(), p)),
            _ => None,
        })
        .collect();
    match found.len() {
        1 => Ok(found.into_iter().next().expect("one")),
        _ => Err(AlbaError::NotDefiniteInductive(format!(
            "{} has {} critical occurrences",
            print_term(piece),
            found.len()
        ))),
    }
}

/// Key grouping critical pieces that share one approximant: pieces joined
/// by a chain of +∧ (for α) or −∨ (for β) nodes.
fn chain_key(piece: &crate::classifier::Piece, ineq: &Ineq, sig: &Signature) -> (Side, Vec<usize>) {
    let root_sign = piece.side.sign();
    let st = classify_tree(side_term(ineq, piece.side), root_sign, sig);
    let mut path = piece.path.clone();
    while let Some(parent) = path.len().checked_sub(1).map(|k| path[..k].to_vec()) {
        let n = st.node(&parent).expect("ancestor");
        let chained = match piece.slot {
            Slot::Alpha => matches!((&n.term, n.sign), (Term::Meet(..), Sign::Plus)),
            Slot::Beta => matches!((&n.term, n.sign), (Term::Join(..), Sign::Minus)),
            _ => false,
        };
        if !chained {
            break;
        }
        path = parent;
    }
    (piece.side, path)
}

/// The condensed forms of a definite inductive inequality: Condensed, the minimal
/// valuations, and the pure inequality obtained by reversing the first
/// approximation.
pub fn condense(ineq: &Ineq, a: &Analysis, sig: &Signature) -> Result<(Condensed, BTreeMap<String, MinimalValuation>, Meta), AlbaError> {
    if !a.definite {
        return Err(AlbaError::NotDefiniteInductive(print_ineq(ineq)));
    }
    let w = &a.witness;
    let mut used: BTreeSet<String> = ineq.vars().into_iter().collect();
    for l in ineq.leaves() {
        if let Leaf::Pure(_, n) = l {
            used.insert(n);
        }
    }
    let mut fresh = Fresh::new(used);
    let mut assign: BTreeMap<String, Term> = BTreeMap::new();
    let mut groups: BTreeMap<(Side, Vec<usize>), Term> = BTreeMap::new();
    let mut quantified = Vec::new();
    let mut slots = BTreeMap::new();
    for p in &a.pieces {
        let v = if p.slot.critical() {
            let key = chain_key(p, ineq, sig);
            if let Some(v) = groups.get(&key) {
                assign.insert(p.placeholder.clone(), v.clone());
                continue;
            }
            let v = if p.slot == Slot::Alpha { Term::Nom(fresh.next("j")) } else { Term::Conom(fresh.next("m")) };
            groups.insert(key, v.clone());
            v
        } else if p.slot == Slot::Gamma {
            Term::Nom(fresh.next("i"))
        } else {
            Term::Conom(fresh.next("n"))
        };
        let (sort, name) = match &v {
            Term::Nom(n) => (Sort::Nom, n.clone()),
            Term::Conom(n) => (Sort::Conom, n.clone()),
            _ => unreachable!(),
        };
        quantified.push((sort, name.clone()));
        slots.insert(name, p.slot);
        assign.insert(p.placeholder.clone(), v);
    }

    // Raw candidates from adjunction and residuation of each critical piece.
    let mut raw: BTreeMap<String, Vec<Term>> = BTreeMap::new();
    for p in a.pieces.iter().filter(|p| p.slot.critical()) {
        let sign = if p.slot == Slot::Alpha { Sign::Plus } else { Sign::Minus };
        let (var, leaf) = critical_leaf(&p.term, sign, w, sig)?;
        let which = if p.slot == Slot::Alpha { Adjoint::La } else { Adjoint::Ra };
        let t = la_ra(&p.term, &leaf, which, &assign[&p.placeholder], sig)?;
        raw.entry(var).or_default().push(t);
    }
    let mut mv: BTreeMap<String, MinimalValuation> = BTreeMap::new();
    let mut agg: BTreeMap<Leaf, Term> = BTreeMap::new();
    for p in w.topological(&ineq.vars()) {
        let candidates: Vec<Term> = raw.get(&p).cloned().unwrap_or_default().iter().map(|t| t.subst(&agg)).collect();
        let aggregate = if w.eps(&p) == Ot::One { join_all(candidates.clone()) } else { meet_all(candidates.clone()) };
        agg.insert(Leaf::var(&p), aggregate.clone());
        mv.insert(p.clone(), MinimalValuation { var: p, candidates, aggregate });
    }

    let skel_with = |by: &dyn Fn(&crate::classifier::Piece) -> Term| {
        let b: BTreeMap<Leaf, Term> = a.pieces.iter().map(|p| (Leaf::var(&p.placeholder), by(p))).collect();
        Ineq::new(simplify_idempotent(&a.skeleton.lhs.subst(&b)), simplify_idempotent(&a.skeleton.rhs.subst(&b)))
    };
    let consequent = skel_with(&|p| assign[&p.placeholder].clone());
    let mut antecedent = Vec::new();
    for p in a.pieces.iter().filter(|p| !p.slot.critical()) {
        let t = p.term.subst(&agg);
        let v = assign[&p.placeholder].clone();
        antecedent.push(if p.slot == Slot::Gamma { Ineq::new(v, t) } else { Ineq::new(t, v) });
    }
    let cond = Condensed { quantified: quantified.clone(), antecedent, consequent, slots: slots.clone() };
    let pure = skel_with(&|p| if p.slot.critical() { assign[&p.placeholder].clone() } else { p.term.subst(&agg) });
    let kept: Vec<(Sort, String)> = quantified.into_iter().filter(|(_, n)| slots[n].critical()).collect();
    let pure = Meta::Ineq(pure).close(&kept);
    Ok((cond, mv, pure))
}

/// Minimal valuations of a definite inductive inequality for a witness.
pub fn minimal_valuations(
    ineq: &Ineq,
    w: &InductiveWitness,
    sig: &Signature,
) -> Result<BTreeMap<String, MinimalValuation>, AlbaError> {
    let a = analyse(ineq, sig, &w.epsilon).map_err(AlbaError::NotInductive)?;
    condense(ineq, &a, sig).map(|(_, mv, _)| mv)
}

/// Full forward run. Each preprocessed inequality is classified with its
/// best witness, reduced by the rule-level cycle, and condensed when it is
/// definite. The output is the conjunction of the condensed pure
/// inequalities, falling back to the reduced quasi-inequality.
pub fn run_alba(ineq: &Ineq, sig: &Signature) -> Result<AlbaRun, AlbaError> {
    let mut trace = Trace::default();
    let preprocessed = preprocess_traced(ineq, sig, &mut trace);
    let mut used: BTreeSet<String> = BTreeSet::new();
    for l in ineq.leaves() {
        match l {
            Leaf::Var(n) | Leaf::Pure(_, n) => used.insert(n),
        };
    }
    let mut fresh = Fresh::new(used);
    let mut systems = Vec::new();
    let mut condensed_all = Vec::new();
    let mut witnesses = Vec::new();
    let mut outputs = Vec::new();
    for piece in &preprocessed {
        let analyses = all_analyses(piece, sig);
        let Some(best) = analyses.first() else {
            return Err(AlbaError::NotInductive(print_ineq(piece)));
        };
        let reduced = reduce(piece, &best.witness, sig, &mut fresh, &mut trace)?;
        let mut out = reduced.to_meta();
        if let Ok((cond, _, pure)) = condense(piece, best, sig) {
            trace.push("condense", reduced.to_string(), print_meta(&cond.to_meta()), "minimal valuations substituted");
            trace.push("reverse-first-approximation", print_meta(&cond.to_meta()), print_meta(&pure), "non-critical approximants eliminated");
            out = pure;
            condensed_all.push(cond);
        }
        systems.push(reduced);
        witnesses.push(best.witness.clone());
        outputs.push(out);
    }
    let output = Meta::and(outputs);
    Ok(AlbaRun { input: ineq.clone(), preprocessed, systems, trace, condensed: condensed_all, witnesses, output })
}

#[cfg(test)]
mod tests;
