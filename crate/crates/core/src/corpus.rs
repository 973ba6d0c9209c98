//! Built-in signatures and a seeded generator of definite inductive
//! inequalities.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alba::preprocess;
use crate::classifier::{classify_inequality, Label};
use crate::normalize::canonical_ineq;
use crate::signature::{Signature, IMP};
use crate::syntax::{app, join, meet, var, Ineq, Term};

pub const MODAL: &str = "f dia 1 (1)\ng box 1 (1)\n";

/// Tense logic: the backward operators are declared and identified with the
/// residuals of the forward ones.
pub const TENSE: &str = "f dia 1 (1)\nf bdia 1 (1)\ng box 1 (1)\ng bbox 1 (1)\n\
    alias bdia = boxb1\nalias bbox = dia#1\nalias box = bdia#1\nalias dia = bboxb1\n";

/// Full Lambek: fusion, unit, and the two divisions as its residuals.
pub const LAMBEK: &str = "f e 0 ()\nf circ 2 (1,1)\ng under 2 (d,1)\ng over 2 (1,d)\n\
    alias over = circ#1\nalias under = circ#2\nalias circ = overb1\nalias circ = underb2\n";

pub const BUILTIN: [(&str, &str); 3] = [("modal", MODAL), ("tense", TENSE), ("lambek", LAMBEK)];

pub fn builtin_signature(name: &str) -> Option<Signature> {
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, t)| Signature::parse(t).expect("builtin signature"))
}

/// Accepted corpus items: definite inductive, and a single non-trivial
/// inequality after preprocessing.
pub fn admissible(i: &Ineq, sig: &Signature) -> bool {
    if i.lhs == i.rhs {
        return false;
    }
    let c = classify_inequality(i, sig);
    if c.label < Label::Inductive || !c.best().is_some_and(|a| a.definite) {
        return false;
    }
    match preprocess(i, sig).as_slice() {
        [p] => p.lhs != Term::Bot && p.rhs != Term::Top && !p.vars().is_empty(),
        _ => false,
    }
}

struct Gen<'a> {
    rng: ChaCha8Rng,
    conns: Vec<(String, usize)>,
    vars: &'a [&'a str],
    heyting: bool,
}

impl Gen<'_> {
    fn term(&mut self, depth: usize) -> Term {
        if depth == 0 || self.rng.gen_bool(0.25) {
            return var(self.vars[self.rng.gen_range(0..self.vars.len())]);
        }
        let pick = self.rng.gen_range(0..10);
        match pick {
            0 | 1 => meet(self.term(depth - 1), self.term(depth - 1)),
            2 => join(self.term(depth - 1), self.term(depth - 1)),
            3 if self.heyting => app(IMP, vec![self.term(depth - 1), self.term(depth - 1)]),
            _ => {
                let (name, arity) = self.conns[self.rng.gen_range(0..self.conns.len())].clone();
                let args = (0..arity).map(|_| self.term(depth - 1)).collect();
                app(&name, args)
            }
        }
    }
}

/// `count` distinct admissible inequalities over the base language of
/// `sig`, determined by `seed`.
pub fn generate(sig: &Signature, seed: u64, count: usize) -> Vec<Ineq> {
    let conns: Vec<(String, usize)> =
        sig.base().filter(|c| c.arity() > 0).map(|c| (sig.resolve(&c.name).unwrap_or(&c.name).to_string(), c.arity())).collect();
    let binary = conns.iter().any(|(_, a)| *a > 1);
    let vars: &[&str] = if binary { &["p", "q"] } else { &["p", "q", "r"] };
    let mut g = Gen { rng: ChaCha8Rng::seed_from_u64(seed), conns, vars, heyting: !binary };
    let depth = if binary { 2 } else { 3 };
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for _ in 0..200_000 {
        if out.len() >= count {
            break;
        }
        let i = Ineq::new(g.term(depth), g.term(depth));
        if i.lhs.size() + i.rhs.size() > 12 || !admissible(&i, sig) {
            continue;
        }
        if seen.insert(canonical_ineq(&i)) {
            out.push(i);
        }
    }
    out
}
