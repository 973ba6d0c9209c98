//! Similarity types, their residual closure, and the signature file format.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// One coordinate of an order type: monotone (`1`) or antitone (`∂`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Ot {
    One,
    Dual,
}

impl Ot {
    pub fn flip(self) -> Ot {
        match self {
            Ot::One => Ot::Dual,
            Ot::Dual => Ot::One,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Ot::One => "1",
            Ot::Dual => "d",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct OrderType(pub Vec<Ot>);

impl OrderType {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Ot {
        self.0[i]
    }

    /// The opposite order type.
    pub fn opposite(&self) -> OrderType {
        OrderType(self.0.iter().map(|o| o.flip()).collect())
    }
}

impl fmt::Display for OrderType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<_> = self.0.iter().map(|o| o.symbol()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Family {
    F,
    G,
}

impl Family {
    pub fn flip(self) -> Family {
        match self {
            Family::F => Family::G,
            Family::G => Family::F,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Origin {
    Base,
    /// Residual of `parent` in coordinate `coord` (0-based).
    Residual { parent: String, coord: usize },
    /// Heyting implications and co-implications.
    Lattice,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Connective {
    pub name: String,
    pub family: Family,
    pub order_type: OrderType,
    pub origin: Origin,
}

impl Connective {
    pub fn arity(&self) -> usize {
        self.order_type.len()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SignatureError {
    #[error("duplicate connective name `{0}`")]
    DuplicateName(String),
    #[error("connective `{name}` declares arity {arity} but order type of length {len}")]
    ArityMismatch { name: String, arity: usize, len: usize },
    #[error("constant `{0}` has no residuals")]
    ZeroArity(String),
    #[error("coordinate {coord} out of range for `{name}`")]
    BadCoordinate { name: String, coord: usize },
    #[error("unknown connective `{0}`")]
    Unknown(String),
    #[error("reserved name `{0}`")]
    Reserved(String),
    #[error("alias `{new}` = `{old}`: {reason}")]
    BadAlias { new: String, old: String, reason: String },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

/// Implication `a -> b`.
pub const IMP: &str = "->";
/// Reverse implication `a <- b`, read as `b -> a`.
pub const RIMP: &str = "<-";
/// Subtraction `a -< b`: `a` minus `b`.
pub const SUB: &str = "-<";
/// Reverse subtraction `a >- b`: `b` minus `a`.
pub const RSUB: &str = ">-";
pub const LATTICE_OPS: [&str; 4] = [IMP, RIMP, SUB, RSUB];

const RESERVED: [&str; 6] = ["k", "l", "top", "bot", "A", "E"];

/// A raw declaration before validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decl {
    pub name: String,
    pub family: Family,
    pub arity: usize,
    pub order_type: Vec<Ot>,
}

impl Decl {
    pub fn new(family: Family, name: &str, ot: &[Ot]) -> Decl {
        Decl { name: name.to_string(), family, arity: ot.len(), order_type: ot.to_vec() }
    }
}

/// A similarity type together with its one-level residual closure.
///
/// Aliases identify generated connectives with declared ones; every name is
/// resolved to the canonical representative of its class.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Signature {
    base: Vec<String>,
    conns: BTreeMap<String, Connective>,
    order: Vec<String>,
    canon: BTreeMap<String, String>,
    classes: BTreeMap<String, Vec<String>>,
    alias_log: Vec<(String, String)>,
}

fn residual_name(c: &Connective, i: usize) -> String {
    match c.family {
        Family::F => format!("{}#{}", c.name, i + 1),
        Family::G => format!("{}b{}", c.name, i + 1),
    }
}

/// Order type and family of the residual of `c` in coordinate `i`.
pub fn residual_shape(c: &Connective, i: usize) -> Result<(Family, OrderType), SignatureError> {
    if c.arity() == 0 {
        return Err(SignatureError::ZeroArity(c.name.clone()));
    }
    if i >= c.arity() {
        return Err(SignatureError::BadCoordinate { name: c.name.clone(), coord: i });
    }
    let own = c.order_type.get(i);
    let family = match own {
        Ot::One => c.family.flip(),
        Ot::Dual => c.family,
    };
    let ot = c
        .order_type
        .0
        .iter()
        .enumerate()
        .map(|(k, &o)| match (k == i, own) {
            (true, _) => own,
            (false, Ot::One) => o.flip(),
            (false, Ot::Dual) => o,
        })
        .collect();
    Ok((family, OrderType(ot)))
}

/// The residual connective of `c` in coordinate `i` (0-based).
pub fn residual(c: &Connective, i: usize) -> Result<Connective, SignatureError> {
    let (family, order_type) = residual_shape(c, i)?;
    Ok(Connective {
        name: residual_name(c, i),
        family,
        order_type,
        origin: Origin::Residual { parent: c.name.clone(), coord: i },
    })
}

fn lattice_conns() -> Vec<Connective> {
    let mk = |name: &str, family, ot: [Ot; 2]| Connective {
        name: name.to_string(),
        family,
        order_type: OrderType(ot.to_vec()),
        origin: Origin::Lattice,
    };
    vec![
        mk(IMP, Family::G, [Ot::Dual, Ot::One]),
        mk(RIMP, Family::G, [Ot::One, Ot::Dual]),
        mk(SUB, Family::F, [Ot::One, Ot::Dual]),
        mk(RSUB, Family::F, [Ot::Dual, Ot::One]),
    ]
}

fn valid_ident(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '#')
}

impl Signature {
    /// Validates declarations and builds the expanded signature.
    pub fn new(decls: &[Decl]) -> Result<Signature, SignatureError> {
        let mut sig = Signature {
            base: Vec::new(),
            conns: BTreeMap::new(),
            order: Vec::new(),
            canon: BTreeMap::new(),
            classes: BTreeMap::new(),
            alias_log: Vec::new(),
        };
        for d in decls {
            if d.order_type.len() != d.arity {
                return Err(SignatureError::ArityMismatch {
                    name: d.name.clone(),
                    arity: d.arity,
                    len: d.order_type.len(),
                });
            }
            if RESERVED.contains(&d.name.as_str()) {
                return Err(SignatureError::Reserved(d.name.clone()));
            }
            if !valid_ident(&d.name) {
                return Err(SignatureError::Syntax { line: 0, msg: format!("bad name `{}`", d.name) });
            }
            let c = Connective {
                name: d.name.clone(),
                family: d.family,
                order_type: OrderType(d.order_type.clone()),
                origin: Origin::Base,
            };
            sig.insert(c)?;
            sig.base.push(d.name.clone());
        }
        for c in lattice_conns() {
            sig.insert(c)?;
        }
        let bases: Vec<Connective> = sig.base.iter().map(|n| sig.conns[n].clone()).collect();
        for c in &bases {
            for i in 0..c.arity() {
                sig.insert(residual(c, i)?)?;
            }
        }
        Ok(sig)
    }

    fn insert(&mut self, c: Connective) -> Result<(), SignatureError> {
        if self.conns.contains_key(&c.name) {
            return Err(SignatureError::DuplicateName(c.name));
        }
        self.order.push(c.name.clone());
        self.canon.insert(c.name.clone(), c.name.clone());
        self.classes.insert(c.name.clone(), vec![c.name.clone()]);
        self.conns.insert(c.name.clone(), c);
        Ok(())
    }

    /// Identifies `new` with `old`. Both must already exist with the same
    /// family and order type; the class keeps a base name as representative.
    pub fn alias(&mut self, new: &str, old: &str) -> Result<(), SignatureError> {
        let bad = |reason: &str| SignatureError::BadAlias {
            new: new.to_string(),
            old: old.to_string(),
            reason: reason.to_string(),
        };
        let ro = self.canon.get(old).cloned().ok_or_else(|| SignatureError::Unknown(old.to_string()))?;
        if !self.canon.contains_key(new) {
            // A fresh display name for an existing connective.
            if RESERVED.contains(&new) || !valid_ident(new) {
                return Err(bad("not a valid name"));
            }
            let mut c = self.conns[old].clone();
            c.name = new.to_string();
            let has_base = self.class_has_base(&ro);
            self.conns.insert(new.to_string(), c);
            self.order.push(new.to_string());
            let mut members = self.classes.remove(&ro).expect("class");
            members.push(new.to_string());
            let rep = if has_base { ro } else { new.to_string() };
            for m in &members {
                self.canon.insert(m.clone(), rep.clone());
            }
            self.classes.insert(rep, members);
            self.alias_log.push((new.to_string(), old.to_string()));
            return Ok(());
        }
        let rn = self.canon.get(new).cloned().ok_or_else(|| SignatureError::Unknown(new.to_string()))?;
        if rn == ro {
            return Ok(());
        }
        let (cn, co) = (&self.conns[&rn], &self.conns[&ro]);
        if cn.family != co.family || cn.order_type != co.order_type {
            return Err(bad("family or order type differ"));
        }
        if cn.origin == Origin::Lattice || co.origin == Origin::Lattice {
            return Err(bad("lattice connectives cannot be identified"));
        }
        let n_base = self.class_has_base(&rn);
        let o_base = self.class_has_base(&ro);
        if n_base && o_base {
            return Err(bad("both classes already contain a declared connective"));
        }
        let (keep, drop) = if o_base && !n_base { (ro, rn) } else { (rn, ro) };
        let moved = self.classes.remove(&drop).unwrap_or_default();
        for m in &moved {
            self.canon.insert(m.clone(), keep.clone());
        }
        self.classes.get_mut(&keep).expect("class").extend(moved);
        self.alias_log.push((new.to_string(), old.to_string()));
        Ok(())
    }

    fn class_has_base(&self, rep: &str) -> bool {
        self.classes[rep].iter().any(|m| self.conns[m].origin == Origin::Base)
    }

    /// Canonical name of a connective, if known.
    pub fn resolve(&self, name: &str) -> Option<&str> {
        self.canon.get(name).map(|s| s.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&Connective> {
        self.canon.get(name).and_then(|r| self.conns.get(r))
    }

    /// The connective under its canonical name. Panics on unknown names.
    pub fn conn(&self, name: &str) -> &Connective {
        self.get(name).unwrap_or_else(|| panic!("unknown connective `{name}`"))
    }

    /// Origin of the connective generated under exactly this name.
    pub fn origin_of(&self, name: &str) -> Option<&Origin> {
        self.conns.get(name).map(|c| &c.origin)
    }

    /// Declared connectives, in declaration order.
    pub fn base(&self) -> impl Iterator<Item = &Connective> {
        self.base.iter().map(|n| &self.conns[n])
    }

    /// Canonical connectives of the expanded signature.
    pub fn expanded(&self) -> impl Iterator<Item = &Connective> {
        self.order.iter().filter(|n| self.canon[*n] == **n).map(|n| &self.conns[n])
    }

    /// All names (canonical or not) in the class of `name`.
    pub fn class_of(&self, name: &str) -> Vec<String> {
        self.canon.get(name).map(|r| self.classes[r].clone()).unwrap_or_default()
    }

    /// Whether the connective belongs to the base language. Heyting
    /// (co-)implications count as part of it.
    pub fn in_base(&self, name: &str) -> bool {
        match self.canon.get(name) {
            Some(r) => self.conns[r].origin == Origin::Lattice || self.class_has_base(r),
            None => false,
        }
    }

    /// Canonical name of the residual of `name` in coordinate `i`.
    ///
    /// The second component is `Some(k)` when the residual is reached
    /// through a sibling: the arguments at positions `i` and `k` must then be
    /// swapped after placing the new argument at `i`.
    pub fn residual_of(&self, name: &str, i: usize) -> Option<(String, Option<usize>)> {
        let c = self.get(name)?;
        match &c.origin {
            Origin::Base => self.resolve(&residual_name(c, i)).map(|r| (r.to_string(), None)),
            Origin::Residual { parent, coord } if *coord == i => {
                self.resolve(parent).map(|r| (r.to_string(), None))
            }
            Origin::Residual { parent, coord } => {
                let p = &self.conns[parent];
                self.resolve(&residual_name(p, i)).map(|r| (r.to_string(), Some(*coord)))
            }
            Origin::Lattice => None,
        }
    }

    /// Number of connectives in the expanded signature (canonical only).
    pub fn len(&self) -> usize {
        self.expanded().count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Canonical names in declaration order.
    pub fn names(&self) -> Vec<String> {
        self.expanded().map(|c| c.name.clone()).collect()
    }

    /// Parses the line-oriented signature format.
    pub fn parse(text: &str) -> Result<Signature, SignatureError> {
        let mut decls = Vec::new();
        let mut aliases = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split(" #").next().unwrap_or("").trim();
            let line = if line.starts_with('#') { "" } else { line };
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| SignatureError::Syntax { line: ln + 1, msg: msg.to_string() };
            let toks: Vec<&str> = line.split_whitespace().collect();
            match toks[0] {
                "alias" => {
                    let rest = line["alias".len()..].trim();
                    let (a, b) = rest.split_once('=').ok_or_else(|| err("expected `alias NEW = OLD`"))?;
                    aliases.push((a.trim().to_string(), b.trim().to_string()));
                }
                "f" | "g" => {
                    let family = if toks[0] == "f" { Family::F } else { Family::G };
                    if toks.len() < 3 {
                        return Err(err("expected `f|g NAME ARITY (OT,...)`"));
                    }
                    let arity: usize = toks[2].parse().map_err(|_| err("bad arity"))?;
                    let ot_text: String = toks[3..].concat();
                    let inner = ot_text
                        .strip_prefix('(')
                        .and_then(|s| s.strip_suffix(')'))
                        .ok_or_else(|| err("order type must be parenthesised"))?;
                    let mut ot = Vec::new();
                    for part in inner.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        ot.push(match part {
                            "1" => Ot::One,
                            "d" => Ot::Dual,
                            _ => return Err(err("order type entries are `1` or `d`")),
                        });
                    }
                    decls.push(Decl { name: toks[1].to_string(), family, arity, order_type: ot });
                }
                _ => return Err(err("unknown declaration")),
            }
        }
        let mut sig = Signature::new(&decls)?;
        for (a, b) in aliases {
            sig.alias(&a, &b)?;
        }
        Ok(sig)
    }

    /// Renders the declarations and aliases back into the file format.
    pub fn to_file_text(&self) -> String {
        let mut out = String::new();
        for c in self.base() {
            let fam = if c.family == Family::F { "f" } else { "g" };
            let ot: Vec<_> = c.order_type.0.iter().map(|o| o.symbol()).collect();
            out.push_str(&format!("{fam} {} {} ({})\n", c.name, c.arity(), ot.join(",")));
        }
        for (new, old) in &self.alias_log {
            out.push_str(&format!("alias {new} = {old}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn modal() -> Signature {
        Signature::parse("f dia 1 (1)\ng box 1 (1)\n").unwrap()
    }

    #[test]
    fn modal_expansion() {
        let s = modal();
        let names = s.names();
        for n in ["dia", "box", "dia#1", "boxb1", "->", "<-", "-<", ">-"] {
            assert!(names.contains(&n.to_string()), "{n}");
        }
        assert_eq!(s.conn("dia#1").family, Family::G);
        assert_eq!(s.conn("boxb1").family, Family::F);
        assert!(s.in_base("dia") && s.in_base("->") && !s.in_base("dia#1"));
    }

    #[test]
    fn arity_mismatch() {
        let e = Signature::new(&[Decl { name: "bad".into(), family: Family::F, arity: 2, order_type: vec![Ot::One] }]);
        assert!(matches!(e, Err(SignatureError::ArityMismatch { .. })));
    }

    #[test]
    fn duplicate() {
        assert_eq!(
            Signature::parse("f a 1 (1)\ng a 1 (1)").unwrap_err(),
            SignatureError::DuplicateName("a".into())
        );
    }

    #[test]
    fn binary_residual_order_types() {
        let f = Connective { name: "f".into(), family: Family::F, order_type: OrderType(vec![Ot::One, Ot::Dual]), origin: Origin::Base };
        let g = Connective { name: "g".into(), family: Family::G, order_type: OrderType(vec![Ot::Dual, Ot::One]), origin: Origin::Base };
        assert_eq!(residual(&f, 0).unwrap().order_type.0, vec![Ot::One, Ot::One]);
        assert_eq!(residual(&f, 1).unwrap().order_type.0, vec![Ot::One, Ot::Dual]);
        assert_eq!(residual(&g, 0).unwrap().order_type.0, vec![Ot::Dual, Ot::One]);
        assert_eq!(residual(&g, 1).unwrap().order_type.0, vec![Ot::One, Ot::One]);
    }

    #[test]
    fn family_flip_exhaustive() {
        for n in 1..=3usize {
            for mask in 0..(1u32 << n) {
                let ot: Vec<Ot> = (0..n).map(|k| if mask >> k & 1 == 1 { Ot::Dual } else { Ot::One }).collect();
                for fam in [Family::F, Family::G] {
                    let c = Connective { name: "c".into(), family: fam, order_type: OrderType(ot.clone()), origin: Origin::Base };
                    for i in 0..n {
                        let r = residual(&c, i).unwrap();
                        let expect_fam = if ot[i] == Ot::One { fam.flip() } else { fam };
                        assert_eq!(r.family, expect_fam);
                        assert_eq!(r.order_type.get(i), ot[i]);
                        for k in (0..n).filter(|&k| k != i) {
                            let expect = if ot[i] == Ot::One { ot[k].flip() } else { ot[k] };
                            assert_eq!(r.order_type.get(k), expect);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn zero_arity_has_no_residual() {
        let s = Signature::parse("f e 0 ()").unwrap();
        assert!(matches!(residual(s.conn("e"), 0), Err(SignatureError::ZeroArity(_))));
    }

    #[test]
    fn tense_aliases() {
        let s = Signature::parse(
            "f dia 1 (1)\nf bdia 1 (1)\ng box 1 (1)\ng bbox 1 (1)\n\
             alias bdia = boxb1\nalias bbox = dia#1\nalias box = bdia#1\nalias dia = bboxb1\n",
        )
        .unwrap();
        assert_eq!(s.resolve("dia#1"), Some("bbox"));
        assert_eq!(s.resolve("boxb1"), Some("bdia"));
        assert_eq!(s.residual_of("dia", 0), Some(("bbox".to_string(), None)));
        assert_eq!(s.residual_of("bbox", 0), Some(("dia".to_string(), None)));
        assert!(s.in_base("dia#1"));
        assert_eq!(s.names().len(), 8);
    }

    #[test]
    fn alias_rejects_mismatch() {
        let mut s = modal();
        assert!(matches!(s.alias("dia", "box"), Err(SignatureError::BadAlias { .. })));
    }

    #[test]
    fn reparse_round_trip() {
        let s = Signature::parse("f circ 2 (1,1)\nalias over = circ#1\n").unwrap();
        assert_eq!(s.resolve("circ#1"), Some("over"));
        let t = Signature::parse(&s.to_file_text()).unwrap();
        assert_eq!(s.names(), t.names());
    }
}
