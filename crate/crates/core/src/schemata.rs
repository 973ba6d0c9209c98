//! Random instances of the Ackermann lemmas, checked on finite models.
//!
//! Each instance pairs the two sides of one lemma. [`holds`] reports whether
//! they agree on a model. The two classical existential lemmas are checked
//! per valuation; the others compare validities.

use std::collections::BTreeMap;

use rand::Rng;

use crate::classifier::classify_tree;
use crate::oracle::{Env, FiniteDle, OracleError};
use crate::signature::{Family, Ot, Signature};
use crate::syntax::{join, meet, nom, conom, var, Ineq, Leaf, Meta, Sign, Sort, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lemma {
    /// `α ≤ p & β ≤ γ ⇒ δ ≤ ε` against the substituted quasi-inequality.
    RightUniversal,
    RightExistential,
    /// `p ≤ α & β ≤ γ ⇒ δ ≤ ε` against the substituted quasi-inequality.
    LeftUniversal,
    LeftExistential,
    /// Approximating single occurrences by nominals and conominals. The
    /// branches to the placeholders avoid +∨ and −∧: with a parametric
    /// sibling those nodes do not preserve the empty join (or meet), and the
    /// equivalence fails when the substituted term is ⊥ (or ⊤).
    NominalUniversal,
    /// The same under one existential block, for definite skeleton sides.
    NominalExistential,
}

pub const LEMMAS: [Lemma; 6] = [
    Lemma::RightUniversal,
    Lemma::RightExistential,
    Lemma::LeftUniversal,
    Lemma::LeftExistential,
    Lemma::NominalUniversal,
    Lemma::NominalExistential,
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instance {
    /// The four classical lemmas; `p` is the eliminated variable.
    Classic { lemma: Lemma, alpha: Term, beta: Term, gamma: Term, delta: Term, eps: Term },
    /// `lhs ≤ rhs` with single occurrences of `z` and `w`, replaced by `rho`
    /// and `lam`.
    Nominal { ineq: Ineq, rho: Term, lam: Term },
    /// `i ≤ phi` (`upper`) or `phi ≤ n`, with `z` and `w` as above.
    NominalExistential { upper: bool, phi: Term, rho: Term, lam: Term },
}

impl Instance {
    pub fn lemma(&self) -> Lemma {
        match self {
            Instance::Classic { lemma, .. } => *lemma,
            Instance::Nominal { .. } => Lemma::NominalUniversal,
            Instance::NominalExistential { .. } => Lemma::NominalExistential,
        }
    }
}

struct TermGen<'a, R> {
    rng: &'a mut R,
    conns: Vec<(String, Vec<Ot>, Family)>,
    params: &'a [&'a str],
}

impl<R: Rng> TermGen<'_, R> {
    fn new<'a>(rng: &'a mut R, sig: &Signature, params: &'a [&'a str]) -> TermGen<'a, R> {
        let conns = sig.expanded().map(|c| (c.name.clone(), c.order_type.0.clone(), c.family)).collect();
        TermGen { rng, conns, params }
    }

    /// A term in which `p` occurs only with sign `want` (never, if `None`).
    fn polar(&mut self, depth: usize, want: Option<Sign>, cur: Sign) -> Term {
        if depth == 0 || self.rng.gen_bool(0.3) {
            if want == Some(cur) && self.rng.gen_bool(0.5) {
                return var("p");
            }
            return self.leaf();
        }
        match self.rng.gen_range(0..6) {
            0 => meet(self.polar(depth - 1, want, cur), self.polar(depth - 1, want, cur)),
            1 => join(self.polar(depth - 1, want, cur), self.polar(depth - 1, want, cur)),
            _ => {
                let (name, ot, _) = self.conns[self.rng.gen_range(0..self.conns.len())].clone();
                let args = ot.iter().map(|o| self.polar(depth - 1, want, cur.through(*o))).collect();
                Term::App(name, args)
            }
        }
    }

    fn leaf(&mut self) -> Term {
        match self.rng.gen_range(0..10) {
            0 => Term::Top,
            1 => Term::Bot,
            _ => var(self.params[self.rng.gen_range(0..self.params.len())]),
        }
    }

    /// A term over the parameters and the given placeholders.
    fn any(&mut self, depth: usize, holes: &[&str]) -> Term {
        if depth == 0 || self.rng.gen_bool(0.25) {
            if !holes.is_empty() && self.rng.gen_bool(0.5) {
                return var(holes[self.rng.gen_range(0..holes.len())]);
            }
            return self.leaf();
        }
        match self.rng.gen_range(0..6) {
            0 => meet(self.any(depth - 1, holes), self.any(depth - 1, holes)),
            1 => join(self.any(depth - 1, holes), self.any(depth - 1, holes)),
            _ => {
                let (name, ot, _) = self.conns[self.rng.gen_range(0..self.conns.len())].clone();
                let args = (0..ot.len()).map(|_| self.any(depth - 1, holes)).collect();
                Term::App(name, args)
            }
        }
    }
}

/// Whether the single occurrences of `z` (sign +) and `w` (sign −) sit on
/// skeleton branches of the signed tree; `definite` also rules out +∨ and
/// −∧ on those branches.
fn skeleton_placement(t: &Term, root: Sign, sig: &Signature, definite: bool) -> bool {
    let st = classify_tree(t, root, sig);
    st.nodes.iter().all(|n| {
        let want = match &n.term {
            Term::Var(v) if v == "z" => Sign::Plus,
            Term::Var(v) if v == "w" => Sign::Minus,
            _ => return true,
        };
        n.sign == want
            && st.ancestors(&n.path).iter().all(|a| {
                a.class.skeleton()
                    && !(definite
                        && matches!(
                            (&a.term, a.sign),
                            (Term::Join(..), Sign::Plus) | (Term::Meet(..), Sign::Minus)
                        ))
            })
    })
}

fn count(t: &Term, v: &str) -> usize {
    t.occurrences(&Leaf::var(v))
}

const PARAMS: [&str; 1] = ["q"];
const DEPTH: usize = 3;

/// A random instance of `lemma` over the expanded signature.
pub fn instance<R: Rng>(lemma: Lemma, sig: &Signature, rng: &mut R) -> Instance {
    let mut g = TermGen::new(rng, sig, &PARAMS);
    match lemma {
        Lemma::RightUniversal | Lemma::RightExistential | Lemma::LeftUniversal | Lemma::LeftExistential => {
            // Polarities of β, γ, δ, ε in p. The existential versions flip all four.
            let right = matches!(lemma, Lemma::RightUniversal | Lemma::RightExistential);
            let universal = matches!(lemma, Lemma::RightUniversal | Lemma::LeftUniversal);
            let b_pos = right == universal;
            let sign = |pos: bool| if pos { Sign::Plus } else { Sign::Minus };
            Instance::Classic {
                lemma,
                alpha: g.polar(DEPTH, None, Sign::Plus),
                beta: g.polar(DEPTH, Some(sign(b_pos)), Sign::Plus),
                gamma: g.polar(DEPTH, Some(sign(!b_pos)), Sign::Plus),
                delta: g.polar(DEPTH, Some(sign(!b_pos)), Sign::Plus),
                eps: g.polar(DEPTH, Some(sign(b_pos)), Sign::Plus),
            }
        }
        Lemma::NominalUniversal => loop {
            let ineq = Ineq::new(g.any(DEPTH, &["z", "w"]), g.any(DEPTH, &["z", "w"]));
            let zc = count(&ineq.lhs, "z") + count(&ineq.rhs, "z");
            let wc = count(&ineq.lhs, "w") + count(&ineq.rhs, "w");
            if zc == 1
                && wc == 1
                && skeleton_placement(&ineq.lhs, Sign::Plus, sig, true)
                && skeleton_placement(&ineq.rhs, Sign::Minus, sig, true)
            {
                let (rho, lam) = (g.any(2, &[]), g.any(2, &[]));
                return Instance::Nominal { ineq, rho, lam };
            }
        },
        Lemma::NominalExistential => loop {
            let upper = g.rng.gen_bool(0.5);
            let phi = g.any(DEPTH, &["z", "w"]);
            let root = if upper { Sign::Plus } else { Sign::Minus };
            if count(&phi, "z") == 1 && count(&phi, "w") == 1 && skeleton_placement(&phi, root, sig, true) {
                let (rho, lam) = (g.any(2, &[]), g.any(2, &[]));
                return Instance::NominalExistential { upper, phi, rho, lam };
            }
        },
    }
}

fn subst1(t: &Term, v: &str, by: &Term) -> Term {
    t.subst(&BTreeMap::from([(Leaf::var(v), by.clone())]))
}

fn subst_zw(t: &Term, z: &Term, w: &Term) -> Term {
    t.subst(&BTreeMap::from([(Leaf::var("z"), z.clone()), (Leaf::var("w"), w.clone())]))
}

fn imp(ante: Vec<Ineq>, cons: Ineq) -> Meta {
    Meta::imp(Meta::and(ante.into_iter().map(Meta::Ineq).collect()), Meta::Ineq(cons))
}

/// Whether both sides of the lemma agree on `m`.
pub fn holds(m: &FiniteDle, inst: &Instance) -> Result<bool, OracleError> {
    match inst {
        Instance::Classic { lemma, alpha, beta, gamma, delta, eps } => {
            let s = |t: &Term| subst1(t, "p", alpha);
            let bounded = match lemma {
                Lemma::RightUniversal | Lemma::RightExistential => Ineq::new(alpha.clone(), var("p")),
                _ => Ineq::new(var("p"), alpha.clone()),
            };
            let with_p = imp(vec![Ineq::new(beta.clone(), gamma.clone())], Ineq::new(delta.clone(), eps.clone()));
            let without = imp(vec![Ineq::new(s(beta), s(gamma))], Ineq::new(s(delta), s(eps)));
            if matches!(lemma, Lemma::RightUniversal | Lemma::LeftUniversal) {
                let a = imp(vec![bounded, Ineq::new(beta.clone(), gamma.clone())], Ineq::new(delta.clone(), eps.clone()));
                return Ok(m.valid_meta(&a)? == m.valid_meta(&without)?);
            }
            // Per valuation of the parameters: the substituted form holds iff
            // some value of p satisfies the bound and the quasi-inequality.
            let mut ok = true;
            for_each_param(m, &mut |env| {
                let lhs = m.sat(env, &without)?;
                let mut rhs = false;
                for v in 0..m.size() {
                    env.push(Leaf::var("p"), v);
                    rhs |= m.holds(env, &bounded)? && m.sat(env, &with_p)?;
                    env.pop();
                }
                ok &= lhs == rhs;
                Ok(())
            })?;
            Ok(ok)
        }
        Instance::Nominal { ineq, rho, lam } => {
            let a = Meta::Ineq(Ineq::new(subst_zw(&ineq.lhs, rho, lam), subst_zw(&ineq.rhs, rho, lam)));
            let (j, mm) = (nom("j"), conom("m"));
            let inner = Ineq::new(subst_zw(&ineq.lhs, &j, &mm), subst_zw(&ineq.rhs, &j, &mm));
            let b = Meta::forall(
                Sort::Nom,
                "j",
                Meta::forall(
                    Sort::Conom,
                    "m",
                    imp(vec![Ineq::new(j.clone(), rho.clone()), Ineq::new(lam.clone(), mm.clone())], inner),
                ),
            );
            Ok(m.valid_meta(&a)? == m.valid_meta(&b)?)
        }
        Instance::NominalExistential { upper, phi, rho, lam } => {
            let (j, mm) = (nom("j"), conom("m"));
            let side = |t: Term| if *upper { Ineq::new(nom("i"), t) } else { Ineq::new(t, conom("n")) };
            let a = Meta::Ineq(side(subst_zw(phi, rho, lam)));
            let b = Meta::exists(
                Sort::Nom,
                "j",
                Meta::exists(
                    Sort::Conom,
                    "m",
                    Meta::and(vec![
                        Meta::Ineq(Ineq::new(j.clone(), rho.clone())),
                        Meta::Ineq(Ineq::new(lam.clone(), mm.clone())),
                        Meta::Ineq(side(subst_zw(phi, &j, &mm))),
                    ]),
                ),
            );
            Ok(m.valid_meta(&a)? == m.valid_meta(&b)?)
        }
    }
}

fn for_each_param(
    m: &FiniteDle,
    f: &mut dyn FnMut(&mut Env) -> Result<(), OracleError>,
) -> Result<(), OracleError> {
    fn go(
        m: &FiniteDle,
        rest: &[&str],
        env: &mut Env,
        f: &mut dyn FnMut(&mut Env) -> Result<(), OracleError>,
    ) -> Result<(), OracleError> {
        match rest.split_first() {
            None => f(env),
            Some((v, tail)) => {
                for x in 0..m.size() {
                    env.push(Leaf::var(v), x);
                    go(m, tail, env, f)?;
                    env.pop();
                }
                Ok(())
            }
        }
    }
    go(m, &PARAMS, &mut Env::default(), f)
}

/// The flip lemma and the inverse pair κ, λ, checked exhaustively.
pub fn flip_lemma(m: &FiniteDle) -> bool {
    let jm = m.jirr.iter().all(|&j| {
        m.kappa(j).is_some_and(|k| {
            m.lambda(k) == Some(j)
                && (0..m.size()).all(|a| !m.le(j, a) == m.le(a, k))
                && m.jirr.iter().all(|&j2| m.le(j, j2) == m.kappa(j2).is_some_and(|k2| m.le(k, k2)))
        })
    });
    let mj = m.mirr.iter().all(|&n| {
        m.lambda(n).is_some_and(|l| m.kappa(l) == Some(n) && (0..m.size()).all(|a| !m.le(a, n) == m.le(l, a)))
    });
    jm && mj
}
