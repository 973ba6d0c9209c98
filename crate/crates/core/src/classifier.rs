//! Signed generation trees, node roles, inductive and Sahlqvist
//! classification, and the crypto-inductive predicates.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::signature::{Family, Ot, Signature};
use crate::syntax::{print_term, Ineq, Sign, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Role {
    DeltaAdjoint,
    Slr,
    Sra,
    Srr,
}

impl Role {
    pub fn is_skeleton(self) -> bool {
        matches!(self, Role::DeltaAdjoint | Role::Slr)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum NodeClass {
    /// A proposition variable.
    Leaf,
    /// Top, bottom, nullary connectives and pure variables.
    Constant,
    /// An operator node with the roles it can play. κ and λ get none.
    Inner(Vec<Role>),
}

impl NodeClass {
    pub fn skeleton(&self) -> bool {
        matches!(self, NodeClass::Inner(r) if r.iter().any(|r| r.is_skeleton()))
    }

    pub fn pia(&self) -> bool {
        matches!(self, NodeClass::Inner(r) if r.iter().any(|r| !r.is_skeleton()))
    }

    /// The role played inside a PIA segment.
    pub fn pia_role(&self) -> Option<Role> {
        match self {
            NodeClass::Inner(r) => r.iter().copied().find(|r| !r.is_skeleton()),
            _ => None,
        }
    }
}

/// Roles of a node under Table 1.
pub fn node_class(t: &Term, sign: Sign, sig: &Signature) -> NodeClass {
    use Role::*;
    use Sign::*;
    match t {
        Term::Var(_) => NodeClass::Leaf,
        Term::Nom(_) | Term::Conom(_) | Term::Top | Term::Bot => NodeClass::Constant,
        Term::App(_, args) if args.is_empty() => NodeClass::Constant,
        Term::Meet(..) => NodeClass::Inner(match sign {
            Plus => vec![DeltaAdjoint, Slr, Sra],
            Minus => vec![DeltaAdjoint, Srr],
        }),
        Term::Join(..) => NodeClass::Inner(match sign {
            Plus => vec![DeltaAdjoint, Srr],
            Minus => vec![DeltaAdjoint, Slr, Sra],
        }),
        Term::App(n, args) => {
            let c = sig.conn(n);
            let pia = if args.len() == 1 { Sra } else { Srr };
            NodeClass::Inner(match (c.family, sign) {
                (Family::F, Plus) | (Family::G, Minus) => vec![Slr],
                (Family::F, Minus) | (Family::G, Plus) => vec![pia],
            })
        }
        Term::Kappa(_) | Term::Lambda(_) => NodeClass::Inner(vec![]),
    }
}

/// Signs of the children of `t` when `t` is signed `s`.
pub fn child_signs(t: &Term, s: Sign, sig: &Signature) -> Vec<Sign> {
    match t {
        Term::Meet(..) | Term::Join(..) => vec![s, s],
        Term::App(n, args) => {
            let c = sig.conn(n);
            (0..args.len()).map(|i| s.through(c.order_type.get(i))).collect()
        }
        Term::Kappa(_) | Term::Lambda(_) => vec![s.flip()],
        _ => vec![],
    }
}

/// Subterm at a child-index path.
pub fn subterm<'a>(t: &'a Term, path: &[usize]) -> &'a Term {
    path.iter().fold(t, |t, &i| t.children()[i])
}

/// Replaces the subterm at `path`.
pub fn replace_at(t: &Term, path: &[usize], new: Term) -> Term {
    let Some((&i, rest)) = path.split_first() else {
        return new;
    };
    let mut kids: Vec<Term> = t.children().into_iter().cloned().collect();
    kids[i] = replace_at(&kids[i], rest, new);
    rebuild(t, kids)
}

/// Same node with new children.
pub fn rebuild(t: &Term, mut kids: Vec<Term>) -> Term {
    match t {
        Term::Meet(..) => {
            let b = kids.pop().expect("two");
            Term::Meet(Box::new(kids.pop().expect("two")), Box::new(b))
        }
        Term::Join(..) => {
            let b = kids.pop().expect("two");
            Term::Join(Box::new(kids.pop().expect("two")), Box::new(b))
        }
        Term::App(n, _) => Term::App(n.clone(), kids),
        Term::Kappa(_) => Term::Kappa(Box::new(kids.pop().expect("one"))),
        Term::Lambda(_) => Term::Lambda(Box::new(kids.pop().expect("one"))),
        t => t.clone(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SignedNode {
    pub path: Vec<usize>,
    pub sign: Sign,
    pub class: NodeClass,
    pub term: Term,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SignedTree {
    pub root_sign: Sign,
    /// Pre-order.
    pub nodes: Vec<SignedNode>,
    #[serde(skip)]
    index: BTreeMap<Vec<usize>, usize>,
}

impl SignedTree {
    pub fn node(&self, path: &[usize]) -> Option<&SignedNode> {
        self.index.get(path).map(|&i| &self.nodes[i])
    }

    pub fn root(&self) -> &SignedNode {
        &self.nodes[0]
    }

    /// Paths of the proposition-variable leaves.
    pub fn var_leaves(&self) -> Vec<Vec<usize>> {
        self.nodes.iter().filter(|n| n.class == NodeClass::Leaf).map(|n| n.path.clone()).collect()
    }

    /// Proper ancestors of `path`, root first.
    pub fn ancestors(&self, path: &[usize]) -> Vec<&SignedNode> {
        (0..path.len()).filter_map(|k| self.node(&path[..k])).collect()
    }
}

impl fmt::Display for SignedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in &self.nodes {
            let label = match &n.term {
                Term::Meet(..) => "/\\".to_string(),
                Term::Join(..) => "\\/".to_string(),
                Term::App(c, _) => c.clone(),
                Term::Kappa(_) => "k".into(),
                Term::Lambda(_) => "l".into(),
                t => print_term(t),
            };
            let roles = match &n.class {
                NodeClass::Leaf => "leaf".to_string(),
                NodeClass::Constant => "constant".to_string(),
                NodeClass::Inner(r) if r.is_empty() => "none".to_string(),
                NodeClass::Inner(r) => r.iter().map(|r| format!("{r:?}")).collect::<Vec<_>>().join("/"),
            };
            writeln!(f, "{}{}{} [{}]", "  ".repeat(n.path.len()), n.sign.symbol(), label, roles)?;
        }
        Ok(())
    }
}

pub fn classify_tree(t: &Term, sign: Sign, sig: &Signature) -> SignedTree {
    fn go(t: &Term, s: Sign, path: &mut Vec<usize>, sig: &Signature, out: &mut Vec<SignedNode>) {
        out.push(SignedNode { path: path.clone(), sign: s, class: node_class(t, s, sig), term: t.clone() });
        for (i, (c, cs)) in t.children().into_iter().zip(child_signs(t, s, sig)).enumerate() {
            path.push(i);
            go(c, cs, path, sig, out);
            path.pop();
        }
    }
    let mut nodes = Vec::new();
    go(t, sign, &mut Vec::new(), sig, &mut nodes);
    let index = nodes.iter().enumerate().map(|(i, n)| (n.path.clone(), i)).collect();
    SignedTree { root_sign: sign, nodes, index }
}

/// Length of the longest skeleton prefix of a root-first node list.
fn skeleton_prefix(nodes: &[&SignedNode]) -> usize {
    nodes.iter().take_while(|n| n.class.skeleton()).count()
}

/// A branch is good when it splits into a skeleton part above a PIA part.
pub fn is_good_branch(st: &SignedTree, leaf: &[usize]) -> bool {
    let anc = st.ancestors(leaf);
    let k = skeleton_prefix(&anc);
    anc[k..].iter().all(|n| n.class.pia())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Side {
    Lhs,
    Rhs,
}

impl Side {
    pub fn sign(self) -> Sign {
        match self {
            Side::Lhs => Sign::Plus,
            Side::Rhs => Sign::Minus,
        }
    }
}

/// An order type on variables and a dependency order.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize)]
pub struct InductiveWitness {
    pub epsilon: BTreeMap<String, Ot>,
    /// Pairs `(a, b)` meaning `a <Ω b`; transitively closed.
    pub omega: BTreeSet<(String, String)>,
}

impl InductiveWitness {
    pub fn eps(&self, v: &str) -> Ot {
        self.epsilon.get(v).copied().unwrap_or(Ot::One)
    }

    /// Sign of the occurrences to be solved for.
    pub fn critical_sign(&self, v: &str) -> Sign {
        match self.eps(v) {
            Ot::One => Sign::Plus,
            Ot::Dual => Sign::Minus,
        }
    }

    pub fn is_critical(&self, v: &str, s: Sign) -> bool {
        self.critical_sign(v) == s
    }

    pub fn less(&self, a: &str, b: &str) -> bool {
        self.omega.contains(&(a.to_string(), b.to_string()))
    }

    /// Variables in an order compatible with Ω, ties broken by `order`.
    pub fn topological(&self, order: &[String]) -> Vec<String> {
        let mut left: Vec<String> = order.to_vec();
        let mut out = Vec::new();
        while !left.is_empty() {
            let k = left
                .iter()
                .position(|v| !left.iter().any(|w| self.less(w, v)))
                .expect("acyclic");
            out.push(left.remove(k));
        }
        out
    }
}

impl fmt::Display for InductiveWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let eps: Vec<String> = self.epsilon.iter().map(|(v, o)| format!("{v}:{}", o.symbol())).collect();
        write!(f, "eps=({})", eps.join(","))?;
        if !self.omega.is_empty() {
            let om: Vec<String> = self.omega.iter().map(|(a, b)| format!("{a}<{b}")).collect();
            write!(f, "; {}", om.join(", "))?;
        }
        Ok(())
    }
}

/// Placeholder slots of the compact notation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Slot {
    /// Positive PIA with a critical occurrence.
    Alpha,
    /// Negative PIA with a critical occurrence.
    Beta,
    /// Positive, no critical occurrence.
    Gamma,
    /// Negative, no critical occurrence.
    Delta,
}

impl Slot {
    fn letter(self) -> char {
        match self {
            Slot::Alpha => 'x',
            Slot::Beta => 'y',
            Slot::Gamma => 'z',
            Slot::Delta => 'w',
        }
    }

    pub fn critical(self) -> bool {
        matches!(self, Slot::Alpha | Slot::Beta)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Piece {
    pub slot: Slot,
    pub side: Side,
    pub path: Vec<usize>,
    pub term: Term,
    /// Name of the placeholder variable in the skeleton.
    pub placeholder: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Label {
    NotInductive,
    Inductive,
    Sahlqvist,
    VerySimpleSahlqvist,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::NotInductive => "not-inductive",
            Label::Inductive => "inductive",
            Label::Sahlqvist => "sahlqvist",
            Label::VerySimpleSahlqvist => "very-simple-sahlqvist",
        })
    }
}

/// An inequality read against one witness.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Analysis {
    pub witness: InductiveWitness,
    pub label: Label,
    /// No +∧ or −∨ in the PIA part of critical branches.
    pub definite: bool,
    /// No −∧ or +∨ in the PIA part of critical branches.
    pub canonical: bool,
    /// Skeleton with placeholders `_x0`, `_y1`, ... standing for the pieces.
    pub skeleton: Ineq,
    pub pieces: Vec<Piece>,
    /// Total size of the critical pieces.
    pub pia_size: usize,
}

impl Analysis {
    pub fn piece(&self, placeholder: &str) -> Option<&Piece> {
        self.pieces.iter().find(|p| p.placeholder == placeholder)
    }
}

fn trees(ineq: &Ineq, sig: &Signature) -> [(Side, SignedTree); 2] {
    [
        (Side::Lhs, classify_tree(&ineq.lhs, Sign::Plus, sig)),
        (Side::Rhs, classify_tree(&ineq.rhs, Sign::Minus, sig)),
    ]
}

/// Every variable leaf of the signed subtree is non-critical.
fn agrees_dual(t: &Term, s: Sign, w: &InductiveWitness, sig: &Signature) -> bool {
    let mut ok = true;
    t.walk_signed(s, sig, &mut |n, ns| {
        if let Term::Var(v) = n {
            ok &= !w.is_critical(v, ns);
        }
    });
    ok
}

fn transitive_closure(edges: &BTreeSet<(String, String)>) -> Option<BTreeSet<(String, String)>> {
    let mut clo = edges.clone();
    loop {
        let mut add = Vec::new();
        for (a, b) in &clo {
            for (c, d) in &clo {
                if b == c && !clo.contains(&(a.clone(), d.clone())) {
                    add.push((a.clone(), d.clone()));
                }
            }
        }
        if add.is_empty() {
            break;
        }
        clo.extend(add);
    }
    if clo.iter().any(|(a, b)| a == b) { None } else { Some(clo) }
}

fn only_unary(t: &Term) -> bool {
    !t.any(&|n| match n {
        Term::App(_, args) => args.len() > 1,
        Term::Meet(..) | Term::Join(..) | Term::Kappa(_) | Term::Lambda(_) => true,
        _ => false,
    })
}

/// Checks the inductive conditions for a fixed order type and builds the
/// compact decomposition. The dependency order is the least one the
/// side conditions require.
pub fn analyse(ineq: &Ineq, sig: &Signature, eps: &BTreeMap<String, Ot>) -> Result<Analysis, String> {
    let mut witness = InductiveWitness { epsilon: eps.clone(), omega: BTreeSet::new() };
    let mut edges = BTreeSet::new();
    let mut definite = true;
    let mut canonical = true;
    let sides = trees(ineq, sig);
    for (side, st) in &sides {
        for leaf in st.var_leaves() {
            let node = st.node(&leaf).expect("leaf");
            let Term::Var(p) = &node.term else { unreachable!() };
            if !witness.is_critical(p, node.sign) {
                continue;
            }
            let anc = st.ancestors(&leaf);
            let k = skeleton_prefix(&anc);
            for (d, n) in anc.iter().enumerate().skip(k) {
                let Some(role) = n.class.pia_role() else {
                    return Err(format!("critical branch of {p} on the {side:?} is not good"));
                };
                let kind = (&n.term, n.sign);
                if matches!(kind, (Term::Meet(..), Sign::Plus) | (Term::Join(..), Sign::Minus)) {
                    definite = false;
                }
                if matches!(kind, (Term::Meet(..), Sign::Minus) | (Term::Join(..), Sign::Plus)) {
                    canonical = false;
                }
                if role != Role::Srr {
                    continue;
                }
                let through = leaf[d];
                let kids = n.term.children();
                let signs = child_signs(&n.term, n.sign, sig);
                for (h, (c, cs)) in kids.iter().zip(signs).enumerate() {
                    if h == through {
                        continue;
                    }
                    if !agrees_dual(c, cs, &witness, sig) {
                        return Err(format!("side formula {} of {p} has critical occurrences", print_term(c)));
                    }
                    for v in c.vars() {
                        edges.insert((v, p.clone()));
                    }
                }
            }
        }
    }
    witness.omega = transitive_closure(&edges).ok_or_else(|| "dependency order is cyclic".to_string())?;

    let mut pieces = Vec::new();
    let mut halves = Vec::new();
    for (side, st) in &sides {
        let root = &st.root().term;
        let mut skel = root.clone();
        collect_pieces(st, &[], *side, &witness, sig, &mut pieces, &mut skel);
        halves.push(skel);
    }
    let rhs = halves.pop().expect("two");
    let lhs = halves.pop().expect("two");
    let mut label = Label::VerySimpleSahlqvist;
    let mut pia_size = 0;
    for p in pieces.iter().filter(|p| p.slot.critical()) {
        pia_size += p.term.size();
        let l = if matches!(p.term, Term::Var(_)) {
            Label::VerySimpleSahlqvist
        } else if only_unary(&p.term) {
            Label::Sahlqvist
        } else {
            Label::Inductive
        };
        label = label.min(l);
    }
    Ok(Analysis { witness, label, definite, canonical, skeleton: Ineq::new(lhs, rhs), pieces, pia_size })
}

fn collect_pieces(
    st: &SignedTree,
    path: &[usize],
    side: Side,
    w: &InductiveWitness,
    sig: &Signature,
    pieces: &mut Vec<Piece>,
    skel: &mut Term,
) {
    let node = st.node(path).expect("node");
    match &node.class {
        NodeClass::Constant => {}
        c if c.skeleton() => {
            for i in 0..node.term.children().len() {
                let mut p = path.to_vec();
                p.push(i);
                collect_pieces(st, &p, side, w, sig, pieces, skel);
            }
        }
        _ => {
            let mut critical = false;
            node.term.walk_signed(node.sign, sig, &mut |n, s| {
                if let Term::Var(v) = n {
                    critical |= w.is_critical(v, s);
                }
            });
            let slot = match (critical, node.sign) {
                (true, Sign::Plus) => Slot::Alpha,
                (true, Sign::Minus) => Slot::Beta,
                (false, Sign::Plus) => Slot::Gamma,
                (false, Sign::Minus) => Slot::Delta,
            };
            let placeholder = format!("_{}{}", slot.letter(), pieces.len());
            *skel = replace_at(skel, path, Term::Var(placeholder.clone()));
            pieces.push(Piece { slot, side, path: path.to_vec(), term: node.term.clone(), placeholder });
        }
    }
}

/// Re-verifies the inductive conditions for a given witness, top-down and
/// independently of [`analyse`].
pub fn check_witness(ineq: &Ineq, sig: &Signature, w: &InductiveWitness) -> bool {
    #[derive(Clone, Copy, PartialEq)]
    enum Phase {
        Skeleton,
        Pia,
        Broken,
    }
    fn crit_vars(t: &Term, s: Sign, w: &InductiveWitness, sig: &Signature) -> Vec<String> {
        let mut out = Vec::new();
        t.walk_signed(s, sig, &mut |n, ns| {
            if let Term::Var(v) = n {
                if w.is_critical(v, ns) {
                    out.push(v.clone());
                }
            }
        });
        out
    }
    fn go(t: &Term, s: Sign, parent: Phase, w: &InductiveWitness, sig: &Signature) -> bool {
        let class = node_class(t, s, sig);
        if let Term::Var(v) = t {
            return parent != Phase::Broken || !w.is_critical(v, s);
        }
        if !matches!(class, NodeClass::Inner(_)) {
            return true;
        }
        let phase = match parent {
            Phase::Skeleton if class.skeleton() => Phase::Skeleton,
            Phase::Skeleton | Phase::Pia if class.pia() => Phase::Pia,
            _ => Phase::Broken,
        };
        let kids = t.children();
        let signs = child_signs(t, s, sig);
        if phase == Phase::Pia && class.pia_role() == Some(Role::Srr) {
            for (j, (c, cs)) in kids.iter().zip(&signs).enumerate() {
                for p in crit_vars(c, *cs, w, sig) {
                    for (h, (d, ds)) in kids.iter().zip(&signs).enumerate() {
                        if h == j {
                            continue;
                        }
                        if !crit_vars(d, *ds, w, sig).is_empty() {
                            return false;
                        }
                        if d.vars().iter().any(|v| !w.less(v, &p)) {
                            return false;
                        }
                    }
                }
            }
        }
        kids.iter().zip(signs).all(|(c, cs)| go(c, cs, phase, w, sig))
    }
    let irreflexive = w.omega.iter().all(|(a, b)| a != b);
    irreflexive && go(&ineq.lhs, Sign::Plus, Phase::Skeleton, w, sig) && go(&ineq.rhs, Sign::Minus, Phase::Skeleton, w, sig)
}

/// Ranking key: definite and canonical shapes first, then the strongest
/// label, then the smallest critical pieces, then ε with 1 before ∂.
fn rank_key(a: &Analysis, vars: &[String]) -> (bool, bool, std::cmp::Reverse<Label>, usize, Vec<Ot>) {
    (
        !a.definite,
        !a.canonical,
        std::cmp::Reverse(a.label),
        a.pia_size,
        vars.iter().map(|v| a.witness.eps(v)).collect(),
    )
}

/// Largest variable count for the exhaustive order-type search.
pub const MAX_SEARCH_VARS: usize = 16;

/// All witnesses, best first.
pub fn all_analyses(ineq: &Ineq, sig: &Signature) -> Vec<Analysis> {
    let vars = ineq.vars();
    if vars.len() > MAX_SEARCH_VARS {
        return Vec::new();
    }
    let mut out = Vec::new();
    for mask in 0u32..(1 << vars.len()) {
        let eps: BTreeMap<String, Ot> = vars
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), if mask >> i & 1 == 1 { Ot::Dual } else { Ot::One }))
            .collect();
        if let Ok(a) = analyse(ineq, sig, &eps) {
            out.push(a);
        }
    }
    out.sort_by_cached_key(|a| rank_key(a, &vars));
    out
}

pub fn find_inductive(ineq: &Ineq, sig: &Signature) -> Option<InductiveWitness> {
    all_analyses(ineq, sig).into_iter().next().map(|a| a.witness)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub label: Label,
    /// Best first.
    pub analyses: Vec<Analysis>,
}

impl Classification {
    pub fn best(&self) -> Option<&Analysis> {
        self.analyses.first()
    }

    /// Some witness reaching the given label.
    pub fn with_label(&self, l: Label) -> Option<&Analysis> {
        self.analyses.iter().find(|a| a.label >= l)
    }
}

pub fn classify_inequality(ineq: &Ineq, sig: &Signature) -> Classification {
    let analyses = all_analyses(ineq, sig);
    let label = analyses.iter().map(|a| a.label).max().unwrap_or(Label::NotInductive);
    Classification { label, analyses }
}

/// The node's operator is in the base language. Leaves count as in it.
fn node_in_base(t: &Term, sig: &Signature) -> bool {
    match t {
        Term::App(n, _) => sig.in_base(n),
        Term::Kappa(_) | Term::Lambda(_) => false,
        _ => true,
    }
}

/// Whether a PIA node keeps its adjoint or residual (in the coordinate the
/// branch passes through) inside the base language.
fn conservative(t: &Term, s: Sign, coord: usize, sig: &Signature) -> bool {
    let class = node_class(t, s, sig);
    if !class.pia() {
        return false;
    }
    match t {
        Term::Meet(..) | Term::Join(..) => true,
        Term::App(n, _) => sig.residual_of(n, coord).is_some_and(|(r, _)| sig.in_base(&r)),
        _ => false,
    }
}

/// Splittability of the branch ending at `leaf` in the signed term `t`.
fn splittable_in(t: &Term, s: Sign, leaf: &[usize], sig: &Signature) -> bool {
    let st = classify_tree(t, s, sig);
    is_splittable(&st, leaf, sig)
}

/// A branch is splittable when, from the leaf up, it runs through
/// conservative PIA nodes and then through base-language nodes only.
pub fn is_splittable(st: &SignedTree, leaf: &[usize], sig: &Signature) -> bool {
    let anc = st.ancestors(leaf);
    let mut k = anc.len();
    while k > 0 {
        let n = anc[k - 1];
        if !conservative(&n.term, n.sign, leaf[k - 1], sig) {
            break;
        }
        k -= 1;
    }
    anc[..k].iter().all(|n| node_in_base(&n.term, sig))
}

/// Unpackability of a signed subtree.
pub fn is_unpackable(t: &Term, s: Sign, w: &InductiveWitness, sig: &Signature) -> bool {
    if !agrees_dual(t, s, w, sig) {
        return false;
    }
    let vars = t.vars();
    if vars.is_empty() || matches!(t, Term::Var(_)) {
        return true;
    }
    let st = classify_tree(t, s, sig);
    let maximal: Vec<&String> = vars.iter().filter(|p| !vars.iter().any(|q| w.less(p, q))).collect();
    for leaf in st.var_leaves() {
        let node = st.node(&leaf).expect("leaf");
        let Term::Var(p) = &node.term else { unreachable!() };
        if !maximal.contains(&p) || !is_splittable(&st, &leaf, sig) {
            continue;
        }
        let sides_ok = st.ancestors(&leaf).iter().enumerate().all(|(d, n)| {
            if n.class.pia_role() != Some(Role::Srr) || n.class.skeleton() && !splittable_segment(&st, &leaf, d, sig) {
                return true;
            }
            let signs = child_signs(&n.term, n.sign, sig);
            n.term
                .children()
                .iter()
                .zip(signs)
                .enumerate()
                .filter(|(h, _)| *h != leaf[d])
                .all(|(_, (c, cs))| is_unpackable(c, cs, w, sig))
        });
        if sides_ok {
            return true;
        }
    }
    false
}

/// Whether the ancestor at depth `d` lies in the conservative lower segment
/// of the branch.
fn splittable_segment(st: &SignedTree, leaf: &[usize], d: usize, sig: &Signature) -> bool {
    let anc = st.ancestors(leaf);
    (d..anc.len()).all(|k| conservative(&anc[k].term, anc[k].sign, leaf[k], sig))
}

/// Crypto-inductiveness over the base language. Returns the first very
/// simple Sahlqvist witness meeting both conditions; the empty dependency
/// order suffices whenever any order does.
pub fn is_crypto_inductive(ineq: &Ineq, sig: &Signature) -> Option<InductiveWitness> {
    let c = classify_inequality(ineq, sig);
    for a in c.analyses.iter().filter(|a| a.label == Label::VerySimpleSahlqvist) {
        let w = InductiveWitness { epsilon: a.witness.epsilon.clone(), omega: BTreeSet::new() };
        if crypto_conditions(ineq, sig, &w) {
            return Some(w);
        }
    }
    None
}

fn crypto_conditions(ineq: &Ineq, sig: &Signature, w: &InductiveWitness) -> bool {
    for (_, st) in trees(ineq, sig) {
        for n in &st.nodes {
            let leaf = match (&n.class, &n.term) {
                (NodeClass::Leaf, Term::Var(v)) => Some(v),
                (NodeClass::Constant, _) => None,
                _ => continue,
            };
            let anc = st.ancestors(&n.path);
            if leaf.is_some_and(|v| w.is_critical(v, n.sign)) {
                if !anc.iter().all(|a| node_in_base(&a.term, sig)) {
                    return false;
                }
                continue;
            }
            if let Some(top) = anc.iter().find(|a| !node_in_base(&a.term, sig)) {
                if !is_unpackable(&top.term, top.sign, w, sig) {
                    return false;
                }
            }
        }
    }
    true
}

/// Exposed for the inverse pipeline.
pub fn branch_splittable(t: &Term, s: Sign, leaf: &[usize], sig: &Signature) -> bool {
    splittable_in(t, s, leaf, sig)
}

#[cfg(test)]
mod tests;
