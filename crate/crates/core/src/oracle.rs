//! Finite perfect distributive lattice expansions used as ground truth.
//!
//! Carriers are the up-sets of a finite poset ordered by inclusion. Elements
//! are indices into the list of up-sets; the up-sets themselves are bitmasks
//! over the points.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::signature::{Family, Origin, Ot, Signature, IMP, RIMP, RSUB, SUB};
use crate::syntax::{Ineq, Leaf, Meta, Restriction, Sort, Term};

pub const MAX_POINTS: usize = 6;
pub const MAX_VALUATIONS: u128 = 10_000_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("poset has {0} points; at most 6 are supported")]
    PosetTooLarge(usize),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("{0} valuations exceed the limit")]
    TooManyValuations(u128),
    #[error("model file line {line}: {msg}")]
    ModelSyntax { line: usize, msg: String },
    #[error("operator table for `{0}` is not normal")]
    NotNormal(String),
}

/// A finite poset given by its order relation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Poset {
    pub n: usize,
    /// `le[a][b]` iff a ≤ b.
    pub le: Vec<Vec<bool>>,
}

impl Poset {
    pub fn antichain(n: usize) -> Poset {
        Poset { n, le: (0..n).map(|a| (0..n).map(|b| a == b).collect()).collect() }
    }

    pub fn chain(n: usize) -> Poset {
        Poset { n, le: (0..n).map(|a| (0..n).map(|b| a <= b).collect()).collect() }
    }

    /// Reflexive-transitive closure of the given strict pairs.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Poset {
        let mut le: Vec<Vec<bool>> = (0..n).map(|a| (0..n).map(|b| a == b).collect()).collect();
        for &(a, b) in pairs {
            le[a][b] = true;
        }
        for k in 0..n {
            for a in 0..n {
                for b in 0..n {
                    if le[a][k] && le[k][b] {
                        le[a][b] = true;
                    }
                }
            }
        }
        Poset { n, le }
    }

    /// Cover pairs (a, b) with a < b and nothing strictly between.
    pub fn covers(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for a in 0..self.n {
            for b in 0..self.n {
                if a != b && self.le[a][b] {
                    let between = (0..self.n).any(|c| c != a && c != b && self.le[a][c] && self.le[c][b]);
                    if !between {
                        out.push((a, b));
                    }
                }
            }
        }
        out
    }

    pub fn upsets(&self) -> Vec<u64> {
        (0u64..(1 << self.n))
            .filter(|&m| {
                (0..self.n).all(|a| m >> a & 1 == 0 || (0..self.n).all(|b| !self.le[a][b] || m >> b & 1 == 1))
            })
            .collect()
    }

    fn is_antisymmetric(&self) -> bool {
        (0..self.n).all(|a| (0..self.n).all(|b| a == b || !(self.le[a][b] && self.le[b][a])))
    }
}

/// An operation table over element indices, row-major in the arguments.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Table {
    pub arity: usize,
    pub values: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FiniteDle {
    pub name: String,
    pub poset: Poset,
    pub masks: Vec<u64>,
    index: BTreeMap<u64, usize>,
    le: Vec<Vec<bool>>,
    meet: Vec<Vec<usize>>,
    join: Vec<Vec<usize>>,
    pub top: usize,
    pub bot: usize,
    pub jirr: Vec<usize>,
    pub mirr: Vec<usize>,
    kappa: BTreeMap<usize, usize>,
    lambda: BTreeMap<usize, usize>,
    /// Tables keyed by canonical connective name.
    pub ops: BTreeMap<String, Table>,
    /// Connectives whose tables were drawn rather than derived.
    pub free_ops: Vec<String>,
    families: BTreeMap<String, Family>,
}

fn tuples(n: usize, arity: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = n.pow(arity as u32);
    (0..total).map(move |mut k| {
        let mut v = vec![0; arity];
        for slot in v.iter_mut().rev() {
            *slot = k % n;
            k /= n;
        }
        v
    })
}

impl FiniteDle {
    /// The lattice part only; operator tables are added separately.
    pub fn lattice(name: &str, poset: Poset) -> Result<FiniteDle, OracleError> {
        if poset.n > MAX_POINTS {
            return Err(OracleError::PosetTooLarge(poset.n));
        }
        let masks = poset.upsets();
        let index: BTreeMap<u64, usize> = masks.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        let n = masks.len();
        let le: Vec<Vec<bool>> = masks.iter().map(|&a| masks.iter().map(|&b| a & !b == 0).collect()).collect();
        let meet = masks.iter().map(|&a| masks.iter().map(|&b| index[&(a & b)]).collect()).collect();
        let join = masks.iter().map(|&a| masks.iter().map(|&b| index[&(a | b)]).collect()).collect();
        let full = (1u64 << poset.n) - 1;
        let mut jirr = Vec::new();
        let mut mirr = Vec::new();
        let mut kappa = BTreeMap::new();
        let mut lambda = BTreeMap::new();
        for x in 0..poset.n {
            let up: u64 = (0..poset.n).filter(|&y| poset.le[x][y]).map(|y| 1u64 << y).sum();
            let down: u64 = (0..poset.n).filter(|&y| poset.le[y][x]).map(|y| 1u64 << y).sum();
            let (j, m) = (index[&up], index[&(full & !down)]);
            jirr.push(j);
            mirr.push(m);
            kappa.insert(j, m);
            lambda.insert(m, j);
        }
        jirr.sort();
        mirr.sort();
        Ok(FiniteDle {
            name: name.to_string(),
            poset,
            masks,
            index,
            le,
            meet,
            join,
            top: n - 1,
            bot: 0,
            jirr,
            mirr,
            kappa,
            lambda,
            ops: BTreeMap::new(),
            free_ops: Vec::new(),
            families: BTreeMap::new(),
        })
    }

    pub fn size(&self) -> usize {
        self.masks.len()
    }

    pub fn le(&self, a: usize, b: usize) -> bool {
        self.le[a][b]
    }

    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.meet[a][b]
    }

    pub fn join(&self, a: usize, b: usize) -> usize {
        self.join[a][b]
    }

    pub fn kappa(&self, j: usize) -> Option<usize> {
        self.kappa.get(&j).copied()
    }

    pub fn lambda(&self, m: usize) -> Option<usize> {
        self.lambda.get(&m).copied()
    }

    fn join_all(&self, it: impl Iterator<Item = usize>) -> usize {
        it.fold(self.bot, |a, b| self.join(a, b))
    }

    fn meet_all(&self, it: impl Iterator<Item = usize>) -> usize {
        it.fold(self.top, |a, b| self.meet(a, b))
    }

    fn key(&self, args: &[usize]) -> usize {
        args.iter().fold(0, |acc, &a| acc * self.size() + a)
    }

    pub fn apply(&self, conn: &str, args: &[usize]) -> usize {
        let t = &self.ops[conn];
        t.values[self.key(args)]
    }

    /// Extends generator values to a normal operator.
    fn extend(&self, family: Family, ot: &[Ot], table: &BTreeMap<Vec<usize>, usize>) -> Table {
        let n = self.size();
        let arity = ot.len();
        let values = tuples(n, arity)
            .map(|args| {
                let ok = |g: &Vec<usize>| {
                    g.iter().zip(&args).zip(ot).all(|((&gi, &ai), o)| match (family, o) {
                        (Family::F, Ot::One) | (Family::G, Ot::Dual) => self.le(gi, ai),
                        _ => self.le(ai, gi),
                    })
                };
                let hits = table.iter().filter(|(g, _)| ok(g)).map(|(_, &v)| v);
                match family {
                    Family::F => self.join_all(hits),
                    Family::G => self.meet_all(hits),
                }
            })
            .collect();
        Table { arity, values }
    }

    fn generators(&self, family: Family, ot: &[Ot]) -> Vec<Vec<usize>> {
        let doms: Vec<&Vec<usize>> = ot
            .iter()
            .map(|o| match (family, o) {
                (Family::F, Ot::One) | (Family::G, Ot::Dual) => &self.jirr,
                _ => &self.mirr,
            })
            .collect();
        let mut out = vec![vec![]];
        for d in doms {
            out = out.into_iter().flat_map(|p| d.iter().map(move |&x| [p.clone(), vec![x]].concat())).collect();
        }
        out
    }

    fn random_op(&self, family: Family, ot: &[Ot], rng: &mut ChaCha8Rng) -> Table {
        let gens = self.generators(family, ot);
        let mut table = BTreeMap::new();
        for g in gens {
            // Mix fully random values with values near the generator itself
            // so that reflexive-like operators appear often.
            let v = match rng.gen_range(0..4) {
                0 => rng.gen_range(0..self.size()),
                1 => match family {
                    Family::F => self.bot,
                    Family::G => self.top,
                },
                _ => {
                    let near = if g.is_empty() { rng.gen_range(0..self.size()) } else { g[rng.gen_range(0..g.len())] };
                    if rng.gen_bool(0.5) {
                        near
                    } else {
                        let r = rng.gen_range(0..self.size());
                        match family {
                            Family::F => self.join(near, r),
                            Family::G => self.meet(near, r),
                        }
                    }
                }
            };
            table.insert(g, v);
        }
        self.extend(family, ot, &table)
    }

    /// Table of the residual in coordinate `i` of `parent`; `family` and
    /// `ot` describe the residual itself.
    fn residual_table(&self, family: Family, ot: &[Ot], parent: &Table, i: usize) -> Table {
        let family = match ot[i] {
            Ot::One => family.flip(),
            Ot::Dual => family,
        };
        let n = self.size();
        let arity = ot.len();
        let pval = |args: &[usize]| parent.values[args.iter().fold(0, |acc, &a| acc * n + a)];
        let values = tuples(n, arity)
            .map(|args| {
                let y = args[i];
                let mut a = args.clone();
                let cands = (0..n).filter(|&x| {
                    a[i] = x;
                    let v = pval(&a);
                    match family {
                        Family::F => self.le(v, y),
                        Family::G => self.le(y, v),
                    }
                });
                let cands: Vec<usize> = cands.collect();
                match (family, ot[i]) {
                    (Family::F, Ot::One) | (Family::G, Ot::Dual) => self.join_all(cands.into_iter()),
                    _ => self.meet_all(cands.into_iter()),
                }
            })
            .collect();
        Table { arity, values }
    }

    fn lattice_tables(&mut self) {
        let n = self.size();
        let imp: Vec<usize> = tuples(n, 2)
            .map(|v| self.join_all((0..n).filter(|&c| self.le(self.meet(c, v[0]), v[1]))))
            .collect();
        let sub: Vec<usize> = tuples(n, 2)
            .map(|v| self.meet_all((0..n).filter(|&c| self.le(v[0], self.join(v[1], c)))))
            .collect();
        let swap = |t: &Vec<usize>| tuples(n, 2).map(|v| t[v[1] * n + v[0]]).collect::<Vec<_>>();
        self.ops.insert(IMP.into(), Table { arity: 2, values: imp.clone() });
        self.ops.insert(RIMP.into(), Table { arity: 2, values: swap(&imp) });
        self.ops.insert(SUB.into(), Table { arity: 2, values: sub.clone() });
        self.ops.insert(RSUB.into(), Table { arity: 2, values: swap(&sub) });
    }

    /// Fills every connective of `sig`, drawing declared ones with `draw`
    /// unless they are identified with a residual of an earlier one.
    fn interpret(
        &mut self,
        sig: &Signature,
        mut draw: impl FnMut(&FiniteDle, &str, Family, &[Ot]) -> Result<Table, OracleError>,
    ) -> Result<(), OracleError> {
        self.lattice_tables();
        self.free_ops.clear();
        self.families = sig.expanded().map(|c| (c.name.clone(), c.family)).collect();
        for c in sig.base() {
            let rep = sig.resolve(&c.name).expect("known").to_string();
            if self.ops.contains_key(&rep) {
                continue;
            }
            let derived = sig.class_of(&rep).into_iter().find_map(|m| match &sig_origin(sig, &m) {
                Origin::Residual { parent, coord } => {
                    let prep = sig.resolve(parent).expect("known");
                    self.ops.get(prep).map(|t| (t.clone(), *coord))
                }
                _ => None,
            });
            let rc = sig.conn(&rep);
            let table = match derived {
                Some((pt, coord)) => self.residual_table(rc.family, &rc.order_type.0, &pt, coord),
                None => {
                    self.free_ops.push(rep.clone());
                    draw(self, &rep, rc.family, &rc.order_type.0)?
                }
            };
            self.ops.insert(rep, table);
        }
        // Residual classes without a declared member.
        loop {
            let mut progress = false;
            for c in sig.expanded() {
                if self.ops.contains_key(&c.name) {
                    continue;
                }
                let found = sig.class_of(&c.name).into_iter().find_map(|m| match sig_origin(sig, &m) {
                    Origin::Residual { parent, coord } => {
                        let prep = sig.resolve(&parent).expect("known");
                        self.ops.get(prep).map(|t| (t.clone(), coord))
                    }
                    _ => None,
                });
                if let Some((pt, coord)) = found {
                    let t = self.residual_table(c.family, &c.order_type.0, &pt, coord);
                    self.ops.insert(c.name.clone(), t);
                    progress = true;
                }
            }
            if !progress {
                break;
            }
        }
        Ok(())
    }

    /// Builds a model over the up-sets of `poset` with operators drawn from
    /// `seed`.
    pub fn build(name: &str, sig: &Signature, poset: Poset, seed: u64) -> Result<FiniteDle, OracleError> {
        let mut m = FiniteDle::lattice(name, poset)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        m.interpret(sig, |m, _, fam, ot| Ok(m.random_op(fam, ot, &mut rng)))?;
        Ok(m)
    }

    /// Text dump: points, cover relation and drawn operator tables.
    pub fn dump(&self) -> String {
        let mut out = format!("name {}\npoints {}\n", self.name, self.poset.n);
        for (a, b) in self.poset.covers() {
            out.push_str(&format!("cover {a} {b}\n"));
        }
        for n in &self.free_ops {
            let vals: Vec<String> = self.ops[n].values.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!("op {n} {}\n", vals.join(" ")));
        }
        out
    }

    /// Reads a dump produced by [`FiniteDle::dump`]. Tables are checked for
    /// normality.
    pub fn load(text: &str, sig: &Signature) -> Result<FiniteDle, OracleError> {
        let mut name = "model".to_string();
        let mut points = None;
        let mut pairs = Vec::new();
        let mut tables: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with("//") {
                continue;
            }
            let err = |msg: &str| OracleError::ModelSyntax { line: ln + 1, msg: msg.to_string() };
            let toks: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<usize>().map_err(|_| err("expected a number"));
            match toks[0] {
                "name" => name = toks.get(1).unwrap_or(&"model").to_string(),
                "points" => points = Some(num(toks.get(1).ok_or_else(|| err("missing count"))?)?),
                "cover" if toks.len() == 3 => pairs.push((num(toks[1])?, num(toks[2])?)),
                "op" if toks.len() >= 2 => {
                    let vals = toks[2..].iter().map(|s| num(s)).collect::<Result<Vec<_>, _>>()?;
                    let canon = sig.resolve(toks[1]).ok_or_else(|| err("unknown connective"))?;
                    tables.insert(canon.to_string(), vals);
                }
                _ => return Err(err("unrecognised line")),
            }
        }
        let n = points.ok_or(OracleError::ModelSyntax { line: 0, msg: "missing `points`".into() })?;
        if pairs.iter().any(|&(a, b)| a >= n || b >= n) {
            return Err(OracleError::ModelSyntax { line: 0, msg: "cover index out of range".into() });
        }
        let poset = Poset::from_pairs(n, &pairs);
        if !poset.is_antisymmetric() {
            return Err(OracleError::ModelSyntax { line: 0, msg: "cover relation has a cycle".into() });
        }
        let mut m = FiniteDle::lattice(&name, poset)?;
        let size = m.size();
        m.interpret(sig, |m, rep, fam, ot| {
            let vals = tables.get(rep).ok_or_else(|| OracleError::ModelSyntax { line: 0, msg: format!("no table for `{rep}`") })?;
            if vals.len() != size.pow(ot.len() as u32) || vals.iter().any(|&v| v >= size) {
                return Err(OracleError::NotNormal(rep.to_string()));
            }
            let t = Table { arity: ot.len(), values: vals.clone() };
            if !m.is_normal(fam, ot, &t) {
                return Err(OracleError::NotNormal(rep.to_string()));
            }
            Ok(t)
        })?;
        Ok(m)
    }

    /// Whether `t` preserves finite joins (resp. meets) coordinatewise per
    /// the order type, including the empty ones.
    pub fn is_normal(&self, family: Family, ot: &[Ot], t: &Table) -> bool {
        let n = self.size();
        let val = |args: &[usize]| t.values[self.key(args)];
        for args in tuples(n, ot.len()) {
            for (i, o) in ot.iter().enumerate() {
                // Empty join/meet in coordinate i.
                let mut e = args.clone();
                let (unit, res) = match (family, o) {
                    (Family::F, Ot::One) => (self.bot, self.bot),
                    (Family::F, Ot::Dual) => (self.top, self.bot),
                    (Family::G, Ot::One) => (self.top, self.top),
                    (Family::G, Ot::Dual) => (self.bot, self.top),
                };
                e[i] = unit;
                if val(&e) != res {
                    return false;
                }
                for b in 0..n {
                    let mut x = args.clone();
                    let mut y = args.clone();
                    y[i] = b;
                    let comb = match (family, o) {
                        (Family::F, Ot::One) | (Family::G, Ot::Dual) => self.join(args[i], b),
                        _ => self.meet(args[i], b),
                    };
                    x[i] = comb;
                    let expect = match family {
                        Family::F => self.join(val(&args), val(&y)),
                        Family::G => self.meet(val(&args), val(&y)),
                    };
                    if val(&x) != expect {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn domain(&self, l: &Leaf) -> Vec<usize> {
        match l {
            Leaf::Var(_) => (0..self.size()).collect(),
            Leaf::Pure(Sort::Nom, _) => self.jirr.clone(),
            Leaf::Pure(Sort::Conom, _) => self.mirr.clone(),
        }
    }

    pub fn eval(&self, env: &Env, t: &Term) -> Result<usize, OracleError> {
        Ok(match t {
            Term::Var(_) | Term::Nom(_) | Term::Conom(_) => {
                let l = t.leaf().expect("leaf");
                env.get(&l).ok_or_else(|| OracleError::UnboundVariable(crate::syntax::print_term(t)))?
            }
            Term::Top => self.top,
            Term::Bot => self.bot,
            Term::Meet(a, b) => self.meet(self.eval(env, a)?, self.eval(env, b)?),
            Term::Join(a, b) => self.join(self.eval(env, a)?, self.eval(env, b)?),
            Term::App(c, args) => {
                let mut vs = Vec::with_capacity(args.len());
                for a in args {
                    vs.push(self.eval(env, a)?);
                }
                self.apply(c, &vs)
            }
            Term::Kappa(a) => {
                let v = self.eval(env, a)?;
                // κ is only meaningful on join-irreducibles; elsewhere use
                // its defining join.
                self.kappa(v).unwrap_or_else(|| self.join_all((0..self.size()).filter(|&x| !self.le(v, x))))
            }
            Term::Lambda(a) => {
                let v = self.eval(env, a)?;
                self.lambda(v).unwrap_or_else(|| self.meet_all((0..self.size()).filter(|&x| !self.le(x, v))))
            }
        })
    }

    pub fn holds(&self, env: &Env, i: &Ineq) -> Result<bool, OracleError> {
        Ok(self.le(self.eval(env, &i.lhs)?, self.eval(env, &i.rhs)?))
    }

    fn count(&self, leaves: &[Leaf]) -> u128 {
        leaves.iter().map(|l| self.domain(l).len() as u128).product()
    }

    /// Validity under every assignment to the leaves of `ineq`.
    pub fn valid_inequality(&self, ineq: &Ineq) -> Result<bool, OracleError> {
        let leaves = ineq.leaves();
        let c = self.count(&leaves);
        if c > MAX_VALUATIONS {
            return Err(OracleError::TooManyValuations(c));
        }
        let mut env = Env::default();
        self.all_assignments(&leaves, &mut env, &mut |m, env| m.holds(env, ineq))
    }

    /// Validity of the universal closure of `mf`.
    pub fn valid_meta(&self, mf: &Meta) -> Result<bool, OracleError> {
        let leaves = mf.free_leaves();
        let c = self.count(&leaves);
        if c > MAX_VALUATIONS {
            return Err(OracleError::TooManyValuations(c));
        }
        let mut env = Env::default();
        self.all_assignments(&leaves, &mut env, &mut |m, env| m.sat(env, mf))
    }

    fn all_assignments(
        &self,
        leaves: &[Leaf],
        env: &mut Env,
        f: &mut dyn FnMut(&FiniteDle, &mut Env) -> Result<bool, OracleError>,
    ) -> Result<bool, OracleError> {
        match leaves.split_first() {
            None => f(self, env),
            Some((l, rest)) => {
                for v in self.domain(l) {
                    env.push(l.clone(), v);
                    let ok = self.all_assignments(rest, env, f);
                    env.pop();
                    if !ok? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// Satisfaction of a meta-formula under `env`.
    pub fn sat(&self, env: &mut Env, mf: &Meta) -> Result<bool, OracleError> {
        Ok(match mf {
            Meta::Ineq(i) => self.holds(env, i)?,
            Meta::NegIneq(i) => !self.holds(env, i)?,
            Meta::And(v) => {
                for m in v {
                    if !self.sat(env, m)? {
                        return Ok(false);
                    }
                }
                true
            }
            Meta::Or(v) => {
                for m in v {
                    if self.sat(env, m)? {
                        return Ok(true);
                    }
                }
                false
            }
            Meta::Not(m) => !self.sat(env, m)?,
            Meta::Imp(a, b) => !self.sat(env, a)? || self.sat(env, b)?,
            Meta::Forall(s, n, b) | Meta::Exists(s, n, b) => {
                let universal = matches!(mf, Meta::Forall(..));
                let l = Leaf::Pure(*s, n.clone());
                for v in self.domain(&l) {
                    env.push(l.clone(), v);
                    let r = self.sat(env, b);
                    env.pop();
                    if r? != universal {
                        return Ok(!universal);
                    }
                }
                universal
            }
            Meta::RForall(r, b) | Meta::RExists(r, b) => {
                let universal = matches!(mf, Meta::RForall(..));
                self.restricted(env, r, b, universal, 0)?
            }
        })
    }

    fn restricted(&self, env: &mut Env, r: &Restriction, body: &Meta, universal: bool, k: usize) -> Result<bool, OracleError> {
        if k == r.vars.len() {
            // Evaluate the restricting inequality directly.
            let args: Vec<usize> = r
                .vars
                .iter()
                .map(|(s, n)| env.get(&Leaf::Pure(*s, n.clone())).expect("bound"))
                .collect();
            let w = self.eval(env, &r.restrictor)?;
            let v = self.apply(&r.conn, &args);
            let guard = match self.ops_family(&r.conn) {
                Family::F => self.le(w, v),
                Family::G => self.le(v, w),
            };
            if !guard {
                return Ok(universal);
            }
            return self.sat(env, body);
        }
        let (s, n) = &r.vars[k];
        let l = Leaf::Pure(*s, n.clone());
        for v in self.domain(&l) {
            env.push(l.clone(), v);
            let res = self.restricted(env, r, body, universal, k + 1);
            env.pop();
            if res? != universal {
                return Ok(!universal);
            }
        }
        Ok(universal)
    }

    fn ops_family(&self, conn: &str) -> Family {
        self.families.get(conn).copied().unwrap_or(Family::F)
    }
}

fn sig_origin(sig: &Signature, name: &str) -> Origin {
    sig.origin_of(name).cloned().unwrap_or(Origin::Base)
}

/// Assignment stack; later bindings shadow earlier ones.
#[derive(Clone, Debug, Default)]
pub struct Env {
    stack: Vec<(Leaf, usize)>,
}

impl Env {
    pub fn push(&mut self, l: Leaf, v: usize) {
        self.stack.push((l, v));
    }

    pub fn pop(&mut self) {
        self.stack.pop();
    }

    pub fn get(&self, l: &Leaf) -> Option<usize> {
        self.stack.iter().rev().find(|(k, _)| k == l).map(|(_, v)| *v)
    }
}

/// Number of seeded random models in the default battery.
pub const RANDOM_MODELS: usize = 7;
/// Environment variable overriding [`RANDOM_MODELS`].
pub const BATTERY_ENV: &str = "DLE_BATTERY_RANDOM";
const MAX_RANDOM_UPSETS: usize = 20;

fn random_poset(rng: &mut ChaCha8Rng) -> Poset {
    loop {
        let n = rng.gen_range(2..=5);
        let mut pairs = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(0.4) {
                    pairs.push((a, b));
                }
            }
        }
        let p = Poset::from_pairs(n, &pairs);
        let k = p.upsets().len();
        if k <= MAX_RANDOM_UPSETS && k >= 3 {
            return p;
        }
    }
}

/// The fixed battery: chains of sizes 2, 3, 4, the diamond, the cube, and
/// seeded random up-set lattices.
pub fn battery(sig: &Signature, seed: u64) -> Vec<FiniteDle> {
    let extra = std::env::var(BATTERY_ENV).ok().and_then(|v| v.parse().ok()).unwrap_or(RANDOM_MODELS);
    battery_sized(sig, seed, extra)
}

pub fn battery_sized(sig: &Signature, seed: u64, random: usize) -> Vec<FiniteDle> {
    let fixed = [
        ("chain2", Poset::chain(1)),
        ("chain3", Poset::chain(2)),
        ("chain4", Poset::chain(3)),
        ("diamond", Poset::antichain(2)),
        ("cube", Poset::antichain(3)),
    ];
    let mut out = Vec::new();
    for (k, (name, p)) in fixed.into_iter().enumerate() {
        out.push(FiniteDle::build(name, sig, p, seed.wrapping_mul(1000).wrapping_add(k as u64)).expect("small poset"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for k in 0..random {
        let p = random_poset(&mut rng);
        let s = seed.wrapping_mul(1000).wrapping_add(100 + k as u64);
        out.push(FiniteDle::build(&format!("random{k}"), sig, p, s).expect("small poset"));
    }
    out
}

/// Something whose validity on a model can be checked.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Formula {
    Ineq(Ineq),
    Meta(Meta),
}

impl Formula {
    pub fn valid(&self, m: &FiniteDle) -> Result<bool, OracleError> {
        match self {
            Formula::Ineq(i) => m.valid_inequality(i),
            Formula::Meta(f) => m.valid_meta(f),
        }
    }
}

impl From<Ineq> for Formula {
    fn from(i: Ineq) -> Formula {
        Formula::Ineq(i)
    }
}

impl From<Meta> for Formula {
    fn from(m: Meta) -> Formula {
        Formula::Meta(m)
    }
}

/// Per-model validity of two formulas.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub model: String,
    pub left: bool,
    pub right: bool,
}

pub fn compare(models: &[FiniteDle], a: &Formula, b: &Formula) -> Result<Vec<Verdict>, OracleError> {
    models
        .iter()
        .map(|m| Ok(Verdict { model: m.name.clone(), left: a.valid(m)?, right: b.valid(m)? }))
        .collect()
}

/// Whether validity agrees on every model.
pub fn equivalent(models: &[FiniteDle], a: &Formula, b: &Formula) -> Result<bool, OracleError> {
    Ok(compare(models, a, b)?.iter().all(|v| v.left == v.right))
}
