//! Printer producing text that parses back to the same tree.

use super::{Ineq, Meta, Sort, Term};
use crate::signature::LATTICE_OPS;

fn is_infix(t: &Term) -> bool {
    match t {
        Term::Meet(..) | Term::Join(..) => true,
        Term::App(n, args) => args.len() == 2 && LATTICE_OPS.contains(&n.as_str()),
        _ => false,
    }
}

fn child(t: &Term) -> String {
    if is_infix(t) { format!("({})", print_term(t)) } else { print_term(t) }
}

pub fn print_term(t: &Term) -> String {
    match t {
        Term::Var(n) => n.clone(),
        Term::Nom(n) => format!("#{n}"),
        Term::Conom(n) => format!("*{n}"),
        Term::Top => "top".into(),
        Term::Bot => "bot".into(),
        Term::Meet(a, b) => format!("{} /\\ {}", child(a), child(b)),
        Term::Join(a, b) => format!("{} \\/ {}", child(a), child(b)),
        Term::App(n, args) if is_infix(t) => format!("{} {} {}", child(&args[0]), n, child(&args[1])),
        Term::App(n, args) => {
            let a: Vec<String> = args.iter().map(print_term).collect();
            format!("{n}({})", a.join(", "))
        }
        Term::Kappa(a) => format!("k({})", print_term(a)),
        Term::Lambda(a) => format!("l({})", print_term(a)),
    }
}

pub fn print_ineq(i: &Ineq) -> String {
    format!("{} <= {}", print_term(&i.lhs), print_term(&i.rhs))
}

fn sort_name(s: Sort) -> &'static str {
    match s {
        Sort::Nom => "nom",
        Sort::Conom => "conom",
    }
}

fn sort_prefix(s: Sort) -> char {
    match s {
        Sort::Nom => '#',
        Sort::Conom => '*',
    }
}

fn sub(m: &Meta) -> String {
    if m.is_atomic() || matches!(m, Meta::Not(_)) { print_meta(m) } else { format!("({})", print_meta(m)) }
}

pub fn print_meta(m: &Meta) -> String {
    match m {
        Meta::Ineq(i) => print_ineq(i),
        Meta::NegIneq(i) => format!("{} !<= {}", print_term(&i.lhs), print_term(&i.rhs)),
        Meta::And(v) if v.is_empty() => "true".into(),
        Meta::Or(v) if v.is_empty() => "false".into(),
        Meta::And(v) => v.iter().map(sub).collect::<Vec<_>>().join(" && "),
        Meta::Or(v) => v.iter().map(sub).collect::<Vec<_>>().join(" || "),
        Meta::Not(a) => format!("~~{}", sub(a)),
        Meta::Imp(a, b) => format!("{} ==> {}", sub(a), sub(b)),
        Meta::Forall(s, n, b) => format!("A {n}:{}. {}", sort_name(*s), print_meta(b)),
        Meta::Exists(s, n, b) => format!("E {n}:{}. {}", sort_name(*s), print_meta(b)),
        Meta::RForall(r, b) | Meta::RExists(r, b) => {
            let q = if matches!(m, Meta::RForall(..)) { 'A' } else { 'E' };
            let vars: Vec<String> = r.vars.iter().map(|(s, n)| format!("{}{n}", sort_prefix(*s))).collect();
            format!("{q}[{} >{} {}]. {}", vars.join(","), r.conn, print_term(&r.restrictor), print_meta(b))
        }
    }
}

/// Unicode rendering for human-facing reports.
pub fn pretty_term(t: &Term) -> String {
    let ch = |t: &Term| if is_infix(t) { format!("({})", pretty_term(t)) } else { pretty_term(t) };
    match t {
        Term::Var(n) | Term::Nom(n) | Term::Conom(n) => n.clone(),
        Term::Top => "⊤".into(),
        Term::Bot => "⊥".into(),
        Term::Meet(a, b) => format!("{} ∧ {}", ch(a), ch(b)),
        Term::Join(a, b) => format!("{} ∨ {}", ch(a), ch(b)),
        Term::App(n, args) if is_infix(t) => format!("{} {} {}", ch(&args[0]), n, ch(&args[1])),
        Term::App(n, args) => {
            let a: Vec<String> = args.iter().map(pretty_term).collect();
            format!("{n}({})", a.join(", "))
        }
        Term::Kappa(a) => format!("κ({})", pretty_term(a)),
        Term::Lambda(a) => format!("λ({})", pretty_term(a)),
    }
}
