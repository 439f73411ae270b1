//! The zone/order-based intersection type system for counting occurrences of
//! the counted constant on a single branch of the beta-normal form.
//!
//! Judgments carry type triples `(Z, F, ty)` at an order bound `m`: `Z` is
//! the largest order such that the derivation node belongs to every zone of
//! order up to `Z`, and `F` is the largest order such that the values of all
//! orders up to `F` are positive below the node. Per order `k` in
//! `{1, .., m+1}` the nodes of a derivation contribute a `k`-value; the top
//! value `val^{m+1}` of a derivation of `|-_m M : (m, m, r)` lower-bounds the
//! maximal number of counted constants on a single branch of the normal
//! form.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::rc::Rc;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::sort::{Signature, Sort};
use crate::term::Term;
use crate::{CapacityError, Caps};

/// An intersection type refining a sort: argument positions carry finite
/// sets of type triples bounded by the argument sort's order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NdType {
    Atom,
    Arrow(Vec<NdTriple>, alloc::boxed::Box<NdType>),
}

impl NdType {
    pub fn arrow(mut args: Vec<NdTriple>, res: NdType) -> NdType {
        args.sort();
        args.dedup();
        NdType::Arrow(args, alloc::boxed::Box::new(res))
    }

    pub fn matches_sort(&self, sort: &Sort) -> bool {
        match (self, sort) {
            (NdType::Atom, Sort::Base) => true,
            (NdType::Arrow(args, res), Sort::Arrow(a, b)) => {
                args.iter()
                    .all(|t| t.ty.matches_sort(a) && t.z <= a.order() && t.f <= a.order())
                    && res.matches_sort(b)
            }
            _ => false,
        }
    }

    /// All argument triples of all arrow positions, outermost first.
    fn arg_triples(&self) -> Vec<&NdTriple> {
        let mut out = Vec::new();
        let mut cur = self;
        while let NdType::Arrow(args, res) = cur {
            out.extend(args.iter());
            cur = res;
        }
        out
    }
}

impl fmt::Display for NdType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NdType::Atom => write!(f, "r"),
            NdType::Arrow(args, res) => {
                if args.is_empty() {
                    write!(f, "top")?;
                } else {
                    for (i, t) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, "&")?;
                        }
                        write!(f, "{}", t)?;
                    }
                }
                write!(f, "->{}", res)
            }
        }
    }
}

/// A type triple: zone order, productivity order, type. `F <= Z + 1` always.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NdTriple {
    pub z: u32,
    pub f: u32,
    pub ty: NdType,
}

impl NdTriple {
    pub fn new(z: u32, f: u32, ty: NdType) -> NdTriple {
        debug_assert!(f <= z + 1);
        NdTriple { z, f, ty }
    }

    /// `k`-unbalanced: `Z >= k` and every argument triple of the type is
    /// `k`-balanced.
    pub fn is_k_unbalanced(&self, k: u32) -> bool {
        self.z >= k && self.ty.arg_triples().iter().all(|t| !t.is_k_unbalanced(k))
    }

    /// Unbalanced: `k`-unbalanced for some `k` (only `k <= Z` can apply).
    pub fn is_unbalanced(&self) -> bool {
        (0..=self.z).any(|k| self.is_k_unbalanced(k))
    }

    /// Bitmask of the orders `k` at which the triple is `k`-unbalanced.
    fn unbalance_mask(&self, m: u32) -> u32 {
        let mut mask = 0;
        for k in 0..=m.min(self.z) {
            if self.is_k_unbalanced(k) {
                mask |= 1 << k;
            }
        }
        mask
    }

    /// The triple passed through an application whose argument has order
    /// `ord`: zones and values above the argument order stay with the
    /// argument.
    pub fn clip(&self, ord: u32) -> NdTriple {
        NdTriple {
            z: self.z.min(ord),
            f: self.f.min(ord),
            ty: self.ty.clone(),
        }
    }
}

impl fmt::Display for NdTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.z, self.f, self.ty)
    }
}

/// The full set of types of a sort.
pub fn types_of(sort: &Sort, caps: &Caps) -> Result<Vec<NdType>, CapacityError> {
    if sort.order() > caps.max_sort_order {
        return Err(CapacityError {
            what: "sort order in the type space",
            limit: caps.max_sort_order as usize,
        });
    }
    match sort {
        Sort::Base => Ok(alloc::vec![NdType::Atom]),
        Sort::Arrow(a, b) => {
            let ta = triples_of(a, a.order(), caps)?;
            let tb = types_of(b, caps)?;
            let bits = ta.len();
            if bits >= usize::BITS as usize - 1
                || (1usize << bits).saturating_mul(tb.len()) > caps.max_type_space
            {
                return Err(CapacityError {
                    what: "type space size",
                    limit: caps.max_type_space,
                });
            }
            let mut out = Vec::with_capacity((1 << bits) * tb.len());
            for mask in 0..(1usize << bits) {
                let args: Vec<NdTriple> = ta
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, t)| t.clone())
                    .collect();
                for res in &tb {
                    out.push(NdType::arrow(args.clone(), res.clone()));
                }
            }
            Ok(out)
        }
    }
}

/// The full set of type triples of a sort at order bound `m`.
pub fn triples_of(sort: &Sort, m: u32, caps: &Caps) -> Result<Vec<NdTriple>, CapacityError> {
    let tys = types_of(sort, caps)?;
    let mut out = Vec::new();
    for z in 0..=m {
        for f in 0..=m.min(z + 1) {
            for ty in &tys {
                out.push(NdTriple::new(z, f, ty.clone()));
            }
        }
    }
    if out.len() > caps.max_type_space {
        return Err(CapacityError {
            what: "type triple space size",
            limit: caps.max_type_space,
        });
    }
    Ok(out)
}

/// One environment entry `var : (Z, F, ty)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NdBinding {
    pub var: String,
    pub triple: NdTriple,
}

/// A type environment: a set of bindings, possibly several per variable.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NdEnv(BTreeSet<NdBinding>);

impl NdEnv {
    pub fn empty() -> NdEnv {
        NdEnv::default()
    }

    pub fn singleton(var: &str, triple: NdTriple) -> NdEnv {
        let mut s = BTreeSet::new();
        s.insert(NdBinding {
            var: var.to_string(),
            triple,
        });
        NdEnv(s)
    }

    pub fn union(&self, other: &NdEnv) -> NdEnv {
        NdEnv(self.0.union(&other.0).cloned().collect())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn triples_for(&self, var: &str) -> Vec<NdTriple> {
        self.0
            .iter()
            .filter(|b| b.var == var)
            .map(|b| b.triple.clone())
            .collect()
    }

    pub fn without_var(&self, var: &str) -> NdEnv {
        NdEnv(self.0.iter().filter(|b| b.var != var).cloned().collect())
    }

    pub fn binds_var(&self, var: &str) -> bool {
        self.0.iter().any(|b| b.var == var)
    }

    pub fn iter(&self) -> impl Iterator<Item = &NdBinding> {
        self.0.iter()
    }
}

impl fmt::Display for NdEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:{}", b.var, b.triple)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NdRule {
    Const,
    Var,
    Lam,
    App,
}

/// One node of a derivation: `env |-_m subterm : triple`, the rule used,
/// and the premises.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NdNode {
    pub rule: NdRule,
    pub env: NdEnv,
    pub triple: NdTriple,
    pub children: Vec<Rc<NdNode>>,
}

/// A derivation at order bound `m` for a term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NdDerivation {
    pub term: Term,
    pub m: u32,
    pub root: Rc<NdNode>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NdCheckViolation {
    pub path: crate::reduce::Path,
    pub message: String,
}

impl fmt::Display for NdCheckViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {}: {}", self.path, self.message)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NdCheckViolation {}

/// The orders `1..=m+1` at which a node contributes value 1, as an
/// inclusive range (empty when `lo > hi`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ValueRange {
    lo: u32,
    hi: u32,
}

impl ValueRange {
    const EMPTY: ValueRange = ValueRange { lo: 1, hi: 0 };

    fn add_into(self, vec: &mut [u64]) {
        let mut k = self.lo;
        while k <= self.hi {
            vec[(k - 1) as usize] += 1;
            k += 1;
        }
    }
}

impl NdNode {
    /// This node's own contribution to the value vector `val^1..val^{m+1}`,
    /// given the subterm the node judges. Zero everywhere except at
    /// counted-constant axioms and at applications where positive values
    /// meet the zone.
    pub fn node_value_vector(&self, subterm: &Term, sig: &Signature, m: u32) -> Vec<u64> {
        let mut vec = alloc::vec![0u64; (m + 1) as usize];
        match (self.rule, subterm) {
            (NdRule::Const, Term::Const(name, _)) if name == sig.counted() => {
                ValueRange {
                    lo: 1,
                    hi: self.triple.z + 1,
                }
                .add_into(&mut vec);
            }
            (NdRule::App, Term::App(_, arg)) => {
                let Ok(arg_sort) = arg.sort() else { return vec };
                let premises: Vec<&NdTriple> = self.children.iter().map(|c| &c.triple).collect();
                if let Some((_, _, range)) = app_conclusion(arg_sort.order(), &premises, m) {
                    range.add_into(&mut vec);
                }
            }
            _ => {}
        }
        vec
    }

    /// The orders `k` in `0..=m` at which the node's triple is k-balanced.
    pub fn balanced_flags(&self, m: u32) -> Vec<bool> {
        (0..=m).map(|k| !self.triple.is_k_unbalanced(k)).collect()
    }
}

impl NdDerivation {
    /// Checks every node against the rules and returns the value vector
    /// `val^1 .. val^{m+1}`.
    pub fn check_and_value(&self, sig: &Signature) -> Result<Vec<u64>, NdCheckViolation> {
        let mut vec = alloc::vec![0u64; (self.m + 1) as usize];
        check_node(&self.term, &self.root, sig, self.m, &mut Vec::new(), &mut vec)?;
        Ok(vec)
    }

    pub fn check(&self, sig: &Signature) -> Result<(), NdCheckViolation> {
        self.check_and_value(sig).map(|_| ())
    }

    /// The value vector of a well-formed derivation.
    pub fn value_vector(&self, sig: &Signature) -> Result<Vec<u64>, NdCheckViolation> {
        self.check_and_value(sig)
    }
}

fn nd_violation(path: &[crate::reduce::Selector], message: String) -> NdCheckViolation {
    NdCheckViolation {
        path: crate::reduce::Path(path.to_vec()),
        message,
    }
}

/// The conclusion `(Z, F, value range)` of an application node, given the
/// argument order and the triples of the operator and argument premises.
/// `None` when the per-order uniqueness of unbalanced premises fails.
///
/// Only the operator and the unbalanced argument premises feed the
/// conclusion's zone and productivity orders: a balanced argument premise
/// claims no zone leaf, is droppable at abstractions, and must therefore
/// leave every conclusion unchanged when removed. Letting it raise `F`
/// would let a discarded argument fake positive values above it.
fn app_conclusion(arg_order: u32, premises: &[&NdTriple], m: u32) -> Option<(u32, u32, ValueRange)> {
    let mut seen: u32 = 0;
    for t in premises {
        let mask = t.unbalance_mask(m);
        if seen & mask != 0 {
            return None;
        }
        seen |= mask;
    }
    let carries: Vec<&NdTriple> = premises
        .iter()
        .enumerate()
        .filter(|(i, t)| *i == 0 || t.is_unbalanced())
        .map(|(_, t)| *t)
        .collect();
    let z = carries.iter().map(|t| t.z).max().expect("operator premise");
    // the premise with the smallest F among those whose positive values meet
    // the zone here determines the new values
    let mut chosen: Option<u32> = None;
    for t in premises {
        if arg_order <= t.z && t.z < t.f && t.f <= z {
            chosen = match chosen {
                Some(best) if best <= t.f => Some(best),
                _ => Some(t.f),
            };
        }
    }
    match chosen {
        Some(fi) => Some((z, (z + 1).min(m), ValueRange { lo: fi + 1, hi: z + 1 })),
        None => {
            let f = carries.iter().map(|t| t.f).max().expect("operator premise");
            Some((z, f, ValueRange::EMPTY))
        }
    }
}

fn check_node(
    term: &Term,
    node: &NdNode,
    sig: &Signature,
    m: u32,
    path: &mut Vec<crate::reduce::Selector>,
    vec: &mut Vec<u64>,
) -> Result<(), NdCheckViolation> {
    use crate::reduce::Selector;
    let tr = &node.triple;
    if tr.z > m || tr.f > m || tr.f > tr.z + 1 {
        return Err(nd_violation(
            path,
            alloc::format!("triple {} is not admissible at order bound {}", tr, m),
        ));
    }
    let sort = match term.sort() {
        Ok(s) => s,
        Err(e) => return Err(nd_violation(path, alloc::format!("{}", e))),
    };
    if !tr.ty.matches_sort(&sort) {
        return Err(nd_violation(
            path,
            alloc::format!("type {} does not refine sort {}", tr.ty, sort),
        ));
    }
    match term {
        Term::Const(name, csort) => {
            if node.rule != NdRule::Const || !node.children.is_empty() {
                return Err(nd_violation(path, alloc::format!("constant {} needs its axiom", name)));
            }
            if !node.env.is_empty() {
                return Err(nd_violation(path, "constant axiom has a non-empty environment".into()));
            }
            let arity = csort.arity();
            let counted = name == sig.counted();
            if counted {
                if arity != 1 {
                    return Err(nd_violation(
                        path,
                        "the counted constant must be unary in this system".into(),
                    ));
                }
                let want = NdType::arrow(
                    alloc::vec![NdTriple::new(0, 0, NdType::Atom)],
                    NdType::Atom,
                );
                if tr.ty != want || tr.f != (tr.z + 1).min(m) {
                    return Err(nd_violation(
                        path,
                        alloc::format!("counted constant must derive (Z,min(Z+1,m),{})", want),
                    ));
                }
                ValueRange { lo: 1, hi: tr.z + 1 }.add_into(vec);
            } else {
                // exactly one argument position is descended into
                let mut ty = &tr.ty;
                let mut descended = 0usize;
                for _ in 0..arity {
                    match ty {
                        NdType::Arrow(args, res) => {
                            match args.as_slice() {
                                [] => {}
                                [one] if *one == NdTriple::new(0, 0, NdType::Atom) => {
                                    descended += 1;
                                }
                                _ => {
                                    return Err(nd_violation(
                                        path,
                                        alloc::format!("constant {} has malformed type {}", name, tr.ty),
                                    ))
                                }
                            }
                            ty = res;
                        }
                        NdType::Atom => {
                            return Err(nd_violation(
                                path,
                                alloc::format!("constant {} has malformed type {}", name, tr.ty),
                            ))
                        }
                    }
                }
                let ok = *ty == NdType::Atom
                    && ((arity == 0 && descended == 0) || (arity > 0 && descended == 1));
                if !ok || tr.f != 0 {
                    return Err(nd_violation(
                        path,
                        alloc::format!("constant {} has malformed type or order {}", name, tr),
                    ));
                }
            }
            Ok(())
        }
        Term::Var(x, vsort) => {
            if node.rule != NdRule::Var || !node.children.is_empty() {
                return Err(nd_violation(path, alloc::format!("variable {} needs its axiom", x)));
            }
            let triples = node.env.triples_for(x);
            if node.env.len() != 1 || triples.len() != 1 {
                return Err(nd_violation(
                    path,
                    alloc::format!("variable axiom environment must bind exactly {}", x),
                ));
            }
            let b = &triples[0];
            let ord = vsort.order();
            if b.z > ord || b.f > ord || b.f > b.z + 1 || !b.ty.matches_sort(vsort) {
                return Err(nd_violation(
                    path,
                    alloc::format!("binding {} is not admissible for sort {}", b, vsort),
                ));
            }
            if b.ty != tr.ty || b.f != tr.f {
                return Err(nd_violation(path, "variable axiom must copy type and F".into()));
            }
            let ok = tr.z == b.z || (tr.z >= ord && b.z == ord);
            if !ok {
                return Err(nd_violation(
                    path,
                    alloc::format!("zone order {} not reachable from binding {}", tr.z, b),
                ));
            }
            Ok(())
        }
        Term::Lam(x, xsort, body) => {
            if node.rule != NdRule::Lam || node.children.len() != 1 {
                return Err(nd_violation(path, "lambda needs the abstraction rule with one premise".into()));
            }
            let child = &node.children[0];
            let NdType::Arrow(t_args, res) = &tr.ty else {
                return Err(nd_violation(path, "abstraction type must be an arrow".into()));
            };
            if child.triple.z != tr.z || child.triple.f != tr.f || child.triple.ty != **res {
                return Err(nd_violation(path, "abstraction must copy Z, F and the result type".into()));
            }
            if node.env.binds_var(x) {
                return Err(nd_violation(path, alloc::format!("environment must not bind {}", x)));
            }
            if node.env != child.env.without_var(x) {
                return Err(nd_violation(path, "abstraction environment must drop exactly the bound variable".into()));
            }
            let t_used = child.env.triples_for(x);
            let ord = xsort.order();
            for tt in t_args {
                if tt.z > ord || tt.f > ord || !tt.ty.matches_sort(xsort) {
                    return Err(nd_violation(
                        path,
                        alloc::format!("argument triple {} not admissible for sort {}", tt, xsort),
                    ));
                }
            }
            for used in &t_used {
                if !t_args.contains(used) {
                    return Err(nd_violation(
                        path,
                        alloc::format!("used binding {} missing from the intersection", used),
                    ));
                }
            }
            for tt in t_args {
                if !t_used.contains(tt) && tt.is_unbalanced() {
                    return Err(nd_violation(
                        path,
                        alloc::format!("unbalanced triple {} may not be dropped", tt),
                    ));
                }
            }
            path.push(Selector::Body);
            let r = check_node(body, child, sig, m, path, vec);
            path.pop();
            r
        }
        Term::App(fun, arg) => {
            if node.rule != NdRule::App || node.children.is_empty() {
                return Err(nd_violation(path, "application needs the application rule".into()));
            }
            let k = &node.children[0];
            let NdType::Arrow(t_args, res) = &k.triple.ty else {
                return Err(nd_violation(path, "operator premise must have an arrow type".into()));
            };
            if **res != tr.ty {
                return Err(nd_violation(
                    path,
                    alloc::format!("conclusion type must be {}, found {}", res, tr.ty),
                ));
            }
            let arg_order = match arg.sort() {
                Ok(s) => s.order(),
                Err(e) => return Err(nd_violation(path, alloc::format!("{}", e))),
            };
            let subs = &node.children[1..];
            if subs.len() != t_args.len() {
                return Err(nd_violation(
                    path,
                    alloc::format!("expected {} argument premises, found {}", t_args.len(), subs.len()),
                ));
            }
            let mut clipped: Vec<NdTriple> =
                subs.iter().map(|s| s.triple.clip(arg_order)).collect();
            clipped.sort();
            let distinct = clipped.windows(2).all(|w| w[0] != w[1]);
            if !distinct || clipped != *t_args {
                return Err(nd_violation(
                    path,
                    "clipped argument premises must match the intersection exactly".into(),
                ));
            }
            let mut env = k.env.clone();
            for s in subs {
                env = env.union(&s.env);
            }
            if env != node.env {
                return Err(nd_violation(path, "conclusion environment must be the union of the premises".into()));
            }
            let premises: Vec<&NdTriple> = core::iter::once(&k.triple)
                .chain(subs.iter().map(|s| &s.triple))
                .collect();
            let Some((z, f, range)) = app_conclusion(arg_order, &premises, m) else {
                return Err(nd_violation(
                    path,
                    "two premises are unbalanced at the same order".into(),
                ));
            };
            if tr.z != z || tr.f != f {
                return Err(nd_violation(
                    path,
                    alloc::format!("conclusion must carry Z={} F={}, found {}", z, f, tr),
                ));
            }
            range.add_into(vec);
            path.push(Selector::Fun);
            check_node(fun, k, sig, m, path, vec)?;
            path.pop();
            // premise order follows the canonical order of the intersection
            let mut order: Vec<usize> = (0..subs.len()).collect();
            order.sort_by_key(|&i| subs[i].triple.clip(arg_order));
            for i in order {
                path.push(Selector::Arg);
                check_node(arg, &subs[i], sig, m, path, vec)?;
                path.pop();
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NdError {
    NotClosed,
    NotGround { sort: Sort },
    NotHomogeneous,
    /// The term's complexity exceeds `m + 1`.
    ComplexityTooHigh { complexity: u32, m: u32 },
    OrderTooHigh { m: u32, cap: u32 },
    /// The counted constant must be unary for the branch analysis.
    UnsupportedSignature,
    IllSorted(crate::term::SortError),
    Capacity(CapacityError),
}

impl fmt::Display for NdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NdError::NotClosed => write!(f, "term must be closed"),
            NdError::NotGround { sort } => write!(f, "term must have sort o, found {}", sort),
            NdError::NotHomogeneous => write!(f, "term must be homogeneous"),
            NdError::ComplexityTooHigh { complexity, m } => {
                write!(f, "complexity {} exceeds the order bound {} + 1", complexity, m)
            }
            NdError::OrderTooHigh { m, cap } => {
                write!(f, "order bound {} exceeds the cap {}", m, cap)
            }
            NdError::UnsupportedSignature => {
                write!(f, "the counted constant must be unary for the branch analysis")
            }
            NdError::IllSorted(e) => write!(f, "{}", e),
            NdError::Capacity(e) => write!(f, "{}", e),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NdError {}

impl From<CapacityError> for NdError {
    fn from(e: CapacityError) -> Self {
        NdError::Capacity(e)
    }
}

impl From<crate::term::SortError> for NdError {
    fn from(e: crate::term::SortError) -> Self {
        NdError::IllSorted(e)
    }
}

/// A value vector `val^1 .. val^{m+1}`.
pub type KVec = Vec<u64>;

/// A judgment key: environment and full type triple.
pub type NdJKey = (NdEnv, NdTriple);

#[derive(Debug, Clone, PartialEq, Eq)]
enum NdRecipe {
    Leaf,
    Lam { child: (NdJKey, KVec) },
    App { fun: (NdJKey, KVec), args: Vec<(NdJKey, KVec)> },
}

type NdEntryMap = BTreeMap<NdJKey, BTreeMap<KVec, NdRecipe>>;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum NdAllowed {
    Exactly(Vec<NdTriple>),
    FromArg(NdArgSource),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct NdArgSource {
    term: Term,
    ctx: NdRestr,
}

type NdRestr = BTreeMap<String, NdAllowed>;

type NdSolveKey = (Term, NdType, Vec<NdArgSource>, NdRestr);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SolveMode {
    /// Keep, per judgment, only a vector with maximal top component.
    MaxOnly,
    /// Keep every achievable value vector per judgment.
    Exhaustive,
}

/// Demand-driven derivation search at order bound `m`; see the flag-based
/// system for the overall structure. Variables bound by a redex only
/// receive binding triples the redex argument can supply as clipped
/// triples, which is sound because the application consumes every
/// intersection element.
struct NdSolver<'a> {
    sig: &'a Signature,
    caps: &'a Caps,
    m: u32,
    mode: SolveMode,
    memo: BTreeMap<NdSolveKey, Rc<NdEntryMap>>,
    work: usize,
}

impl<'a> NdSolver<'a> {
    fn spend(&mut self, n: usize) -> Result<(), CapacityError> {
        self.work += n;
        if self.work > self.caps.max_derivations {
            Err(CapacityError {
                what: "derivation search work",
                limit: self.caps.max_derivations,
            })
        } else {
            Ok(())
        }
    }

    fn vec_len(&self) -> usize {
        (self.m + 1) as usize
    }

    /// Clipped triples the argument can supply at the given type.
    fn avail_clips(
        &mut self,
        arg: &NdArgSource,
        ty: &NdType,
        ord: u32,
    ) -> Result<BTreeSet<NdTriple>, NdError> {
        let entries = self.solve(&arg.term.clone(), ty, &[], &arg.ctx.clone())?;
        Ok(entries.keys().map(|(_, tr)| tr.clip(ord)).collect())
    }

    fn var_triple_allowed(
        &mut self,
        restr: &NdRestr,
        var: &str,
        triple: &NdTriple,
        ord: u32,
    ) -> Result<bool, NdError> {
        match restr.get(var) {
            None => Ok(true),
            Some(NdAllowed::Exactly(triples)) => Ok(triples.contains(triple)),
            Some(NdAllowed::FromArg(src)) => {
                let src = src.clone();
                Ok(self.avail_clips(&src, &triple.ty, ord)?.contains(triple))
            }
        }
    }

    fn add(
        &self,
        out: &mut NdEntryMap,
        key: NdJKey,
        vec: KVec,
        recipe: NdRecipe,
    ) {
        let by_vec = out.entry(key).or_default();
        match self.mode {
            SolveMode::Exhaustive => {
                by_vec.entry(vec).or_insert(recipe);
            }
            SolveMode::MaxOnly => {
                let top = self.m as usize;
                let better = match by_vec.iter().next() {
                    None => true,
                    Some((old, _)) => {
                        (vec[top], &vec) > (old[top], old)
                    }
                };
                if better {
                    by_vec.clear();
                    by_vec.insert(vec, recipe);
                }
            }
        }
    }

    fn solve(
        &mut self,
        t: &Term,
        result: &NdType,
        pending: &[NdArgSource],
        restr: &NdRestr,
    ) -> Result<Rc<NdEntryMap>, NdError> {
        let fv = t.free_vars();
        let restr_key: NdRestr = restr
            .iter()
            .filter(|(k, _)| fv.iter().any(|(n, _)| n == *k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let key: NdSolveKey = (t.clone(), result.clone(), pending.to_vec(), restr_key);
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        let mut out: NdEntryMap = BTreeMap::new();
        match t {
            Term::Const(name, sort) => {
                self.solve_const(name, sort, result, pending.len(), &mut out)?;
            }
            Term::Var(x, sort) => {
                self.solve_var(x, sort, result, pending, restr, &mut out)?;
            }
            Term::Lam(x, xsort, body) => {
                self.solve_lam(x, xsort, body, result, pending, restr, &mut out)?;
            }
            Term::App(fun, arg) => {
                self.solve_app(fun, arg, result, pending, restr, &mut out)?;
            }
        }
        let entries: usize = out.values().map(|m| m.len()).sum();
        self.spend(entries.max(1))?;
        let rc = Rc::new(out);
        self.memo.insert(key, rc.clone());
        Ok(rc)
    }

    fn solve_const(
        &mut self,
        name: &str,
        sort: &Sort,
        result: &NdType,
        k: usize,
        out: &mut NdEntryMap,
    ) -> Result<(), NdError> {
        let arity = sort.arity();
        if k > arity {
            return Ok(());
        }
        let counted = name == self.sig.counted();
        if counted && arity != 1 {
            return Err(NdError::UnsupportedSignature);
        }
        let ground = NdTriple::new(0, 0, NdType::Atom);
        if counted {
            // type (0,0,r) -> r; one value per zone choice
            let full = NdType::arrow(alloc::vec![ground], NdType::Atom);
            let want_suffix = if k == 0 { &full } else { &NdType::Atom };
            if result != want_suffix {
                return Ok(());
            }
            for z in 0..=self.m {
                let mut vec = alloc::vec![0u64; self.vec_len()];
                ValueRange { lo: 1, hi: z + 1 }.add_into(&mut vec);
                self.add(
                    out,
                    (NdEnv::empty(), NdTriple::new(z, (z + 1).min(self.m), full.clone())),
                    vec,
                    NdRecipe::Leaf,
                );
            }
        } else {
            // descend into exactly one argument (none for arity 0)
            let descend_choices: Vec<Option<usize>> = if arity == 0 {
                alloc::vec![None]
            } else {
                (0..arity).map(Some).collect()
            };
            for d in descend_choices {
                let mut full = NdType::Atom;
                for i in (0..arity).rev() {
                    let args = if Some(i) == d {
                        alloc::vec![ground.clone()]
                    } else {
                        Vec::new()
                    };
                    full = NdType::arrow(args, full);
                }
                // suffix after k layers must match the demand
                let mut suffix = &full;
                for _ in 0..k {
                    match suffix {
                        NdType::Arrow(_, res) => suffix = res,
                        NdType::Atom => unreachable!("arity checked"),
                    }
                }
                if result != suffix {
                    continue;
                }
                for z in 0..=self.m {
                    self.add(
                        out,
                        (NdEnv::empty(), NdTriple::new(z, 0, full.clone())),
                        alloc::vec![0u64; self.vec_len()],
                        NdRecipe::Leaf,
                    );
                }
            }
        }
        Ok(())
    }

    fn solve_var(
        &mut self,
        x: &str,
        sort: &Sort,
        result: &NdType,
        pending: &[NdArgSource],
        restr: &NdRestr,
        out: &mut NdEntryMap,
    ) -> Result<(), NdError> {
        let layer_sorts: Vec<Sort> = sort.args().into_iter().cloned().collect();
        let k = pending.len();
        if k > layer_sorts.len() {
            return Ok(());
        }
        let ord = sort.order();
        // triples suppliable per layer
        let mut layer_triples: Vec<Vec<NdTriple>> = Vec::with_capacity(k);
        for (i, arg) in pending.iter().enumerate() {
            let lord = layer_sorts[i].order();
            let mut triples = Vec::new();
            for ty in types_of(&layer_sorts[i], self.caps)? {
                for tr in self.avail_clips(arg, &ty, lord)? {
                    triples.push(tr);
                }
            }
            if triples.len() > 16 {
                return Err(NdError::Capacity(CapacityError {
                    what: "supplied triples at a variable-headed application",
                    limit: 16,
                }));
            }
            triples.sort();
            triples.dedup();
            layer_triples.push(triples);
        }
        for ty in nd_var_types(result, &layer_triples) {
            // binding (z, f, ty) within the variable's own order bound
            for z in 0..=ord {
                for f in 0..=ord.min(z + 1) {
                    let binding = NdTriple::new(z, f, ty.clone());
                    if !self.var_triple_allowed(restr, x, &binding, ord)? {
                        continue;
                    }
                    // conclusion zone: copied, or raised from ord(x)
                    let mut zs: Vec<u32> = alloc::vec![z];
                    if z == ord {
                        for z2 in (ord + 1)..=self.m {
                            zs.push(z2);
                        }
                    }
                    for z2 in zs {
                        self.add(
                            out,
                            (
                                NdEnv::singleton(x, binding.clone()),
                                NdTriple::new(z2, f, ty.clone()),
                            ),
                            alloc::vec![0u64; self.vec_len()],
                            NdRecipe::Leaf,
                        );
                    }
                }
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn solve_lam(
        &mut self,
        x: &str,
        xsort: &Sort,
        body: &Term,
        result: &NdType,
        pending: &[NdArgSource],
        restr: &NdRestr,
        out: &mut NdEntryMap,
    ) -> Result<(), NdError> {
        let ord = xsort.order();
        match pending.split_first() {
            Some((arg, rest)) => {
                // The abstraction is consumed by the enclosing redex, so
                // weakening extras would only force redundant argument
                // premises at that application: an extra must be balanced,
                // contributes nothing to the top value, and any binding it
                // could add to the environment is balanced and can be added
                // by the abstraction that consumes it instead. The
                // intersection is therefore exactly the set of used
                // bindings here.
                let mut inner = restr.clone();
                inner.insert(x.to_string(), NdAllowed::FromArg(arg.clone()));
                let bodies = self.solve(body, result, rest, &inner)?;
                for (bkey, by_vec) in bodies.iter() {
                    let t_used = bkey.0.triples_for(x);
                    let new_key = (
                        bkey.0.without_var(x),
                        NdTriple::new(
                            bkey.1.z,
                            bkey.1.f,
                            NdType::arrow(t_used, bkey.1.ty.clone()),
                        ),
                    );
                    for (vec, _) in by_vec {
                        self.add(
                            out,
                            new_key.clone(),
                            vec.clone(),
                            NdRecipe::Lam {
                                child: (bkey.clone(), vec.clone()),
                            },
                        );
                    }
                }
            }
            None => {
                let NdType::Arrow(t_args, res) = result else {
                    return Ok(());
                };
                let admissible = t_args
                    .iter()
                    .all(|tt| tt.z <= ord && tt.f <= ord && tt.ty.matches_sort(xsort));
                if !admissible {
                    return Ok(());
                }
                let mut inner = restr.clone();
                inner.insert(x.to_string(), NdAllowed::Exactly(t_args.clone()));
                let bodies = self.solve(body, res, &[], &inner)?;
                for (bkey, by_vec) in bodies.iter() {
                    let t_used = bkey.0.triples_for(x);
                    // dropped triples must be balanced
                    let ok = t_used.iter().all(|u| t_args.contains(u))
                        && t_args
                            .iter()
                            .all(|tt| t_used.contains(tt) || !tt.is_unbalanced());
                    if !ok {
                        continue;
                    }
                    let new_key = (
                        bkey.0.without_var(x),
                        NdTriple::new(bkey.1.z, bkey.1.f, result.clone()),
                    );
                    for (vec, _) in by_vec {
                        self.add(
                            out,
                            new_key.clone(),
                            vec.clone(),
                            NdRecipe::Lam {
                                child: (bkey.clone(), vec.clone()),
                            },
                        );
                    }
                }
            }
        }
        Ok(())
    }

    fn solve_app(
        &mut self,
        fun: &Term,
        arg: &Term,
        result: &NdType,
        pending: &[NdArgSource],
        restr: &NdRestr,
        out: &mut NdEntryMap,
    ) -> Result<(), NdError> {
        let arg_order = arg.sort()?.order();
        let src = NdArgSource {
            term: arg.clone(),
            ctx: restr.clone(),
        };
        let mut fun_pending = Vec::with_capacity(pending.len() + 1);
        fun_pending.push(src);
        fun_pending.extend_from_slice(pending);
        let funs = self.solve(fun, result, &fun_pending, restr)?;
        let funs_vec: Vec<(NdJKey, BTreeMap<KVec, NdRecipe>)> =
            funs.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        for (fkey, f_by_vec) in funs_vec {
            let NdType::Arrow(t_args, res) = &fkey.1.ty else { continue };
            // per intersection element, the argument entries whose clip is it
            let mut options: Vec<Vec<(NdJKey, KVec)>> = Vec::with_capacity(t_args.len());
            for want in t_args {
                let entries = self.solve(arg, &want.ty, &[], restr)?;
                let mut opts = Vec::new();
                for (akey, by_vec) in entries.iter() {
                    if akey.1.clip(arg_order) != *want {
                        continue;
                    }
                    for (vec, _) in by_vec {
                        opts.push((akey.clone(), vec.clone()));
                    }
                }
                options.push(opts);
            }
            let option_slices: Vec<&[(NdJKey, KVec)]> =
                options.iter().map(|o| o.as_slice()).collect();
            if option_slices.iter().any(|o| o.is_empty()) {
                continue;
            }
            let mut combos: Vec<(NdJKey, KVec, Vec<(NdJKey, KVec)>)> = Vec::new();
            let mut work = 0usize;
            let caps_limit = self.caps.max_derivations;
            let m = self.m;
            crate::combo::for_each_combo(&option_slices, |subs| {
                let premises: Vec<&NdTriple> = core::iter::once(&fkey.1)
                    .chain(subs.iter().map(|s| &s.0 .1))
                    .collect();
                let Some((z, f, range)) = app_conclusion(arg_order, &premises, m) else {
                    return Ok(());
                };
                let mut env = fkey.0.clone();
                for s in subs {
                    env = env.union(&s.0 .0);
                }
                let mut vec = alloc::vec![0u64; (m + 1) as usize];
                for s in subs {
                    for (i, v) in s.1.iter().enumerate() {
                        vec[i] += v;
                    }
                }
                range.add_into(&mut vec);
                combos.push((
                    (env, NdTriple::new(z, f, (**res).clone())),
                    vec,
                    subs.iter().map(|s| (s.0.clone(), s.1.clone())).collect(),
                ));
                work += 1;
                if work > caps_limit {
                    return Err(CapacityError {
                        what: "derivation search work",
                        limit: caps_limit,
                    });
                }
                Ok(())
            })?;
            self.spend(work.max(1))?;
            for (f_vec, _) in &f_by_vec {
                for (ckey, cvec, arg_keys) in &combos {
                    let mut vec = cvec.clone();
                    for (i, v) in f_vec.iter().enumerate() {
                        vec[i] += v;
                    }
                    self.add(
                        out,
                        ckey.clone(),
                        vec,
                        NdRecipe::App {
                            fun: (fkey.clone(), f_vec.clone()),
                            args: arg_keys.clone(),
                        },
                    );
                }
            }
        }
        Ok(())
    }

    /// Materializes the representative derivation of `(key, vec)` found by a
    /// previous solve with the same parameters.
    fn reconstruct(
        &mut self,
        t: &Term,
        result: &NdType,
        pending: &[NdArgSource],
        restr: &NdRestr,
        key: &NdJKey,
        vec: &KVec,
    ) -> Rc<NdNode> {
        let entries = self
            .solve(t, result, pending, restr)
            .expect("solved before reconstruction");
        let recipe = entries[key][vec].clone();
        match (&recipe, t) {
            (NdRecipe::Leaf, Term::Const(..)) => Rc::new(NdNode {
                rule: NdRule::Const,
                env: key.0.clone(),
                triple: key.1.clone(),
                children: Vec::new(),
            }),
            (NdRecipe::Leaf, Term::Var(..)) => Rc::new(NdNode {
                rule: NdRule::Var,
                env: key.0.clone(),
                triple: key.1.clone(),
                children: Vec::new(),
            }),
            (NdRecipe::Lam { child }, Term::Lam(x, _, body)) => {
                let (inner_result, inner_pending, inner_restr) = match pending.split_first() {
                    Some((arg, rest)) => (result.clone(), rest.to_vec(), {
                        let mut r = restr.clone();
                        r.insert(x.clone(), NdAllowed::FromArg(arg.clone()));
                        r
                    }),
                    None => match result {
                        NdType::Arrow(t_args, res) => ((**res).clone(), Vec::new(), {
                            let mut r = restr.clone();
                            r.insert(x.clone(), NdAllowed::Exactly(t_args.clone()));
                            r
                        }),
                        NdType::Atom => unreachable!("lambda with atomic demanded type"),
                    },
                };
                let c = self.reconstruct(body, &inner_result, &inner_pending, &inner_restr, &child.0, &child.1);
                Rc::new(NdNode {
                    rule: NdRule::Lam,
                    env: key.0.clone(),
                    triple: key.1.clone(),
                    children: alloc::vec![c],
                })
            }
            (NdRecipe::App { fun, args }, Term::App(fun_t, arg_t)) => {
                let src = NdArgSource {
                    term: (**arg_t).clone(),
                    ctx: restr.clone(),
                };
                let mut fun_pending = Vec::with_capacity(pending.len() + 1);
                fun_pending.push(src);
                fun_pending.extend_from_slice(pending);
                let mut children = Vec::with_capacity(1 + args.len());
                children.push(self.reconstruct(fun_t, result, &fun_pending, restr, &fun.0, &fun.1));
                for (akey, avec) in args {
                    children.push(self.reconstruct(arg_t, &akey.1.ty, &[], restr, akey, avec));
                }
                Rc::new(NdNode {
                    rule: NdRule::App,
                    env: key.0.clone(),
                    triple: key.1.clone(),
                    children,
                })
            }
            _ => unreachable!("recipe shape matches the term shape"),
        }
    }
}

/// All types `T1 -> .. -> Tk -> result` with `Ti` a subset of
/// `layer_triples[i]`.
fn nd_var_types(result: &NdType, layer_triples: &[Vec<NdTriple>]) -> Vec<NdType> {
    match layer_triples.split_first() {
        None => alloc::vec![result.clone()],
        Some((triples, rest)) => {
            let tails = nd_var_types(result, rest);
            let mut out = Vec::new();
            for mask in 0..(1usize << triples.len()) {
                let subset: Vec<NdTriple> = triples
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, t)| t.clone())
                    .collect();
                for tail in &tails {
                    out.push(NdType::arrow(subset.clone(), tail.clone()));
                }
            }
            out
        }
    }
}

fn guard(t: &Term, m: u32, caps: &Caps) -> Result<(), NdError> {
    if m > caps.max_order {
        return Err(NdError::OrderTooHigh {
            m,
            cap: caps.max_order,
        });
    }
    let sort = t.sort()?;
    if sort != Sort::Base {
        return Err(NdError::NotGround { sort });
    }
    if !t.is_closed() {
        return Err(NdError::NotClosed);
    }
    if !t.is_homogeneous()? {
        return Err(NdError::NotHomogeneous);
    }
    let complexity = t.complexity()?;
    if complexity > m + 1 {
        return Err(NdError::ComplexityTooHigh { complexity, m });
    }
    Ok(())
}

/// The result of a maximum-value search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NdMax {
    /// `val^{m+1}` of the best derivation.
    pub value: u64,
    /// The full value vector of the best derivation.
    pub vector: KVec,
    /// A best derivation, materialized.
    pub witness: NdDerivation,
}

/// The maximum of `val^{m+1}(D)` over all derivations `D` of
/// `|-_m t : (m, m, r)`, or `None` when no such derivation exists.
///
/// The term must be closed, homogeneous, of sort `o`, and of complexity at
/// most `m + 1` (one above the usual bound, as needed when analyzing a term
/// one reduction phase early).
pub fn max_value(t: &Term, m: u32, sig: &Signature, caps: &Caps) -> Result<Option<NdMax>, NdError> {
    let mut solver = NdSolver {
        sig,
        caps,
        m,
        mode: SolveMode::MaxOnly,
        memo: BTreeMap::new(),
        work: 0,
    };
    best_root(t, m, sig, caps, &mut solver)
}

fn best_root(
    t: &Term,
    m: u32,
    _sig: &Signature,
    caps: &Caps,
    solver: &mut NdSolver<'_>,
) -> Result<Option<NdMax>, NdError> {
    guard(t, m, caps)?;
    let restr = NdRestr::new();
    let entries = solver.solve(t, &NdType::Atom, &[], &restr)?;
    let root_key = (NdEnv::empty(), NdTriple::new(m, m, NdType::Atom));
    let Some(by_vec) = entries.get(&root_key) else {
        return Ok(None);
    };
    let top = m as usize;
    let (best_vec, _) = by_vec
        .iter()
        .max_by_key(|(vec, _)| (vec[top], (*vec).clone()))
        .expect("non-empty");
    let best_vec = best_vec.clone();
    let witness = NdDerivation {
        term: t.clone(),
        m,
        root: solver.reconstruct(t, &NdType::Atom, &[], &restr, &root_key, &best_vec),
    };
    Ok(Some(NdMax {
        value: best_vec[top],
        vector: best_vec,
        witness,
    }))
}

/// Every achievable value vector of a derivation of `|-_m t : (m, m, r)`,
/// by exhaustive search over judgments and value vectors.
pub fn enumerate_value_vectors(
    t: &Term,
    m: u32,
    sig: &Signature,
    caps: &Caps,
) -> Result<BTreeSet<KVec>, NdError> {
    guard(t, m, caps)?;
    let mut solver = NdSolver {
        sig,
        caps,
        m,
        mode: SolveMode::Exhaustive,
        memo: BTreeMap::new(),
        work: 0,
    };
    let restr = NdRestr::new();
    let entries = solver.solve(t, &NdType::Atom, &[], &restr)?;
    let root_key = (NdEnv::empty(), NdTriple::new(m, m, NdType::Atom));
    Ok(entries
        .get(&root_key)
        .map(|by_vec| by_vec.keys().cloned().collect())
        .unwrap_or_default())
}

/// All derivations of `|-_m t : (m, m, r)` as materialized trees, by plain
/// bottom-up enumeration without demand filtering. Exponential; intended
/// for small terms and for cross-validating the search above.
pub fn enumerate_derivations(
    t: &Term,
    m: u32,
    sig: &Signature,
    caps: &Caps,
) -> Result<Vec<NdDerivation>, NdError> {
    guard(t, m, caps)?;
    let mut e = NdTreeEnumerator {
        sig,
        caps,
        m,
        memo: BTreeMap::new(),
        produced: 0,
    };
    let all = e.derivations(t)?;
    Ok(all
        .iter()
        .filter(|d| d.env.is_empty() && d.triple == NdTriple::new(m, m, NdType::Atom))
        .map(|d| NdDerivation {
            term: t.clone(),
            m,
            root: d.clone(),
        })
        .collect())
}

struct NdTreeEnumerator<'a> {
    sig: &'a Signature,
    caps: &'a Caps,
    m: u32,
    memo: BTreeMap<Term, Rc<Vec<Rc<NdNode>>>>,
    produced: usize,
}

impl<'a> NdTreeEnumerator<'a> {
    fn bump(&mut self, n: usize) -> Result<(), CapacityError> {
        self.produced += n;
        if self.produced > self.caps.max_derivations {
            Err(CapacityError {
                what: "materialized derivations",
                limit: self.caps.max_derivations,
            })
        } else {
            Ok(())
        }
    }

    fn derivations(&mut self, t: &Term) -> Result<Rc<Vec<Rc<NdNode>>>, NdError> {
        if let Some(hit) = self.memo.get(t) {
            return Ok(hit.clone());
        }
        let m = self.m;
        let mut out: Vec<Rc<NdNode>> = Vec::new();
        match t {
            Term::Const(name, sort) => {
                let arity = sort.arity();
                let counted = name == self.sig.counted();
                if counted && arity != 1 {
                    return Err(NdError::UnsupportedSignature);
                }
                let ground = NdTriple::new(0, 0, NdType::Atom);
                if counted {
                    let full = NdType::arrow(alloc::vec![ground], NdType::Atom);
                    for z in 0..=m {
                        out.push(Rc::new(NdNode {
                            rule: NdRule::Const,
                            env: NdEnv::empty(),
                            triple: NdTriple::new(z, (z + 1).min(m), full.clone()),
                            children: Vec::new(),
                        }));
                    }
                } else {
                    let descend_choices: Vec<Option<usize>> = if arity == 0 {
                        alloc::vec![None]
                    } else {
                        (0..arity).map(Some).collect()
                    };
                    for d in descend_choices {
                        let mut full = NdType::Atom;
                        for i in (0..arity).rev() {
                            let args = if Some(i) == d {
                                alloc::vec![ground.clone()]
                            } else {
                                Vec::new()
                            };
                            full = NdType::arrow(args, full);
                        }
                        for z in 0..=m {
                            out.push(Rc::new(NdNode {
                                rule: NdRule::Const,
                                env: NdEnv::empty(),
                                triple: NdTriple::new(z, 0, full.clone()),
                                children: Vec::new(),
                            }));
                        }
                    }
                }
            }
            Term::Var(x, sort) => {
                let ord = sort.order();
                for binding in triples_of(sort, ord, self.caps)? {
                    let mut zs: Vec<u32> = alloc::vec![binding.z];
                    if binding.z == ord {
                        for z2 in (ord + 1)..=m {
                            zs.push(z2);
                        }
                    }
                    for z2 in zs {
                        out.push(Rc::new(NdNode {
                            rule: NdRule::Var,
                            env: NdEnv::singleton(x, binding.clone()),
                            triple: NdTriple::new(z2, binding.f, binding.ty.clone()),
                            children: Vec::new(),
                        }));
                    }
                }
            }
            Term::Lam(x, xsort, body) => {
                let bodies = self.derivations(body)?;
                let balanced: Vec<NdTriple> = triples_of(xsort, xsort.order(), self.caps)?
                    .into_iter()
                    .filter(|tr| !tr.is_unbalanced())
                    .collect();
                if balanced.len() > 12 {
                    return Err(NdError::Capacity(CapacityError {
                        what: "balanced extras at an abstraction",
                        limit: 12,
                    }));
                }
                for d in bodies.iter() {
                    let t_used = d.env.triples_for(x);
                    let candidates: Vec<&NdTriple> =
                        balanced.iter().filter(|e| !t_used.contains(e)).collect();
                    for mask in 0..(1usize << candidates.len()) {
                        let mut t_all = t_used.clone();
                        for (i, e) in candidates.iter().enumerate() {
                            if mask & (1 << i) != 0 {
                                t_all.push((*e).clone());
                            }
                        }
                        out.push(Rc::new(NdNode {
                            rule: NdRule::Lam,
                            env: d.env.without_var(x),
                            triple: NdTriple::new(
                                d.triple.z,
                                d.triple.f,
                                NdType::arrow(t_all, d.triple.ty.clone()),
                            ),
                            children: alloc::vec![d.clone()],
                        }));
                    }
                    self.bump(1 << candidates.len())?;
                }
            }
            Term::App(fun, arg) => {
                let arg_order = arg.sort()?.order();
                let funs = self.derivations(fun)?;
                let args = self.derivations(arg)?;
                let mut index: BTreeMap<NdTriple, Vec<Rc<NdNode>>> = BTreeMap::new();
                for d in args.iter() {
                    index
                        .entry(d.triple.clip(arg_order))
                        .or_default()
                        .push(d.clone());
                }
                for fd in funs.iter() {
                    let NdType::Arrow(t_args, res) = &fd.triple.ty else { continue };
                    let empty: Vec<Rc<NdNode>> = Vec::new();
                    let options: Vec<&[Rc<NdNode>]> = t_args
                        .iter()
                        .map(|want| index.get(want).unwrap_or(&empty).as_slice())
                        .collect();
                    let budget = self.caps.max_derivations.saturating_sub(self.produced);
                    crate::combo::for_each_combo(&options, |subs| {
                        let premises: Vec<&NdTriple> = core::iter::once(&fd.triple)
                            .chain(subs.iter().map(|s| &s.triple))
                            .collect();
                        let Some((z, f, _)) = app_conclusion(arg_order, &premises, m) else {
                            return Ok(());
                        };
                        let mut env = fd.env.clone();
                        for s in subs {
                            env = env.union(&s.env);
                        }
                        let mut children = Vec::with_capacity(1 + subs.len());
                        children.push(fd.clone());
                        children.extend(subs.iter().map(|s| Rc::clone(s)));
                        out.push(Rc::new(NdNode {
                            rule: NdRule::App,
                            env,
                            triple: NdTriple::new(z, f, (**res).clone()),
                            children,
                        }));
                        if out.len() > budget {
                            return Err(CapacityError {
                                what: "materialized derivations",
                                limit: self.caps.max_derivations,
                            });
                        }
                        Ok(())
                    })?;
                }
            }
        }
        self.bump(out.len())?;
        let rc = Rc::new(out);
        self.memo.insert(t.clone(), rc.clone());
        Ok(rc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_sort, parse_term};
    use alloc::vec;

    fn sig() -> Signature {
        Signature::standard()
    }

    fn caps() -> Caps {
        Caps::default()
    }

    fn p(text: &str) -> Term {
        parse_term(text, &sig()).unwrap()
    }

    const EXAMPLE1: &str = "(\\y:(o->o). (\\y:(o->o).\\x:o. y (y x)) ((\\y:(o->o).\\x:o. y (y x)) ((\\y:(o->o).\\x:o. y (y x)) y)) (a e)) a";

    #[test]
    fn triple_space_sizes() {
        assert_eq!(triples_of(&Sort::Base, 0, &caps()).unwrap().len(), 1);
        assert_eq!(triples_of(&Sort::Base, 2, &caps()).unwrap().len(), 8);
        assert_eq!(triples_of(&parse_sort("o->o").unwrap(), 1, &caps()).unwrap().len(), 8);
    }

    #[test]
    fn base_triples_at_zero() {
        let ts = triples_of(&Sort::Base, 0, &caps()).unwrap();
        assert_eq!(ts, vec![NdTriple::new(0, 0, NdType::Atom)]);
    }

    fn tau_y() -> NdType {
        // (0,0,r) -> r
        NdType::arrow(vec![NdTriple::new(0, 0, NdType::Atom)], NdType::Atom)
    }

    #[test]
    fn unbalancedness_examples() {
        let t = NdTriple::new(0, 0, NdType::Atom);
        assert!(t.is_k_unbalanced(0));
        assert!(!t.is_k_unbalanced(1));
        assert!(t.is_unbalanced());

        // (1,1,(0,1,ty)&(1,1,ty)->ty): (1,1,ty) is 1-unbalanced, so the
        // outer triple is 1-balanced; it is not 0-unbalanced either because
        // ty's own argument (0,0,r) is 0-unbalanced
        let inner = NdType::arrow(
            vec![NdTriple::new(0, 1, tau_y()), NdTriple::new(1, 1, tau_y())],
            tau_y(),
        );
        let tr = NdTriple::new(1, 1, inner);
        assert!(!tr.is_k_unbalanced(1));
        assert!(!tr.is_k_unbalanced(0));
        assert!(!tr.is_unbalanced());

        // (0,F,tau_y) is fully balanced; (1,1,tau_y) is 1-unbalanced
        assert!(!NdTriple::new(0, 1, tau_y()).is_unbalanced());
        assert!(NdTriple::new(1, 1, tau_y()).is_k_unbalanced(1));
        // ground triples are always 0-unbalanced
        assert!(NdTriple::new(2, 1, NdType::Atom).is_k_unbalanced(0));
    }

    #[test]
    fn clip_examples() {
        let tr = NdTriple::new(2, 2, tau_y());
        assert_eq!(tr.clip(1), NdTriple::new(1, 1, tau_y()));
        assert_eq!(tr.clip(0), NdTriple::new(0, 0, tau_y()));
        assert_eq!(NdTriple::new(0, 1, tau_y()).clip(1), NdTriple::new(0, 1, tau_y()));
    }

    #[test]
    fn max_value_ground_examples() {
        let r = max_value(&p("e"), 0, &sig(), &caps()).unwrap().unwrap();
        assert_eq!(r.value, 0);
        let r = max_value(&p("a e"), 0, &sig(), &caps()).unwrap().unwrap();
        assert_eq!(r.value, 1);
        r.witness.check(&sig()).unwrap();
    }

    #[test]
    fn max_value_counts_branches_on_trees() {
        // at m = 0 a derivation follows one branch of the tree
        let r = max_value(&p("b (a e) (a (a e))"), 0, &sig(), &caps()).unwrap().unwrap();
        assert_eq!(r.value, 2);
        // at m = 1 the zone mechanism must reproduce the same bound
        let r = max_value(&p("a (a e)"), 1, &sig(), &caps()).unwrap().unwrap();
        assert_eq!(r.value, 2);
        let vecs = enumerate_value_vectors(&p("a (a e)"), 1, &sig(), &caps()).unwrap();
        assert_eq!(vecs.iter().map(|v| v[1]).max(), Some(2));
    }

    #[test]
    fn erased_argument_blocks_the_root_judgment() {
        // (\x. e) (a e) normalizes to e: no (1,1,r) derivation exists
        let t = p("(\\x:o. e) (a e)");
        assert_eq!(t.complexity().unwrap(), 1);
        assert!(max_value(&t, 1, &sig(), &caps()).unwrap().is_none());
        // but at m = 0 the empty-value derivation is there
        let r = max_value(&t, 0, &sig(), &caps()).unwrap().unwrap();
        assert_eq!(r.value, 0);
    }

    #[test]
    fn example1_max_3value_is_five() {
        let m = p(EXAMPLE1);
        let r = max_value(&m, 2, &sig(), &caps()).unwrap().unwrap();
        assert_eq!(r.value, 5);
        assert_eq!(r.vector.len(), 3);
        assert_eq!(r.vector[2], 5);
        let vec = r.witness.check_and_value(&sig()).unwrap();
        assert_eq!(vec, r.vector);
    }

    #[test]
    fn example1_exhaustive_confirms_maximality() {
        let m = p(EXAMPLE1);
        let vecs = enumerate_value_vectors(&m, 2, &sig(), &caps()).unwrap();
        assert!(!vecs.is_empty());
        assert_eq!(vecs.iter().map(|v| v[2]).max(), Some(5));
    }

    // The "inside the 1-zone" derivation for N at order bound 2,
    // transcribed literally; tau_y = (0,0,r)->r.
    fn example2_n_derivation() -> (Term, Rc<NdNode>) {
        let n = p("\\y:(o->o).\\x:o. y (y x)");
        let y01 = Rc::new(NdNode {
            rule: NdRule::Var,
            env: NdEnv::singleton("y", NdTriple::new(0, 1, tau_y())),
            triple: NdTriple::new(0, 1, tau_y()),
            children: vec![],
        });
        let y11 = Rc::new(NdNode {
            rule: NdRule::Var,
            env: NdEnv::singleton("y", NdTriple::new(1, 1, tau_y())),
            triple: NdTriple::new(1, 1, tau_y()),
            children: vec![],
        });
        let x00 = Rc::new(NdNode {
            rule: NdRule::Var,
            env: NdEnv::singleton("x", NdTriple::new(0, 0, NdType::Atom)),
            triple: NdTriple::new(0, 0, NdType::Atom),
            children: vec![],
        });
        // y x : (1,1,r) inside the 1-zone
        let y_x = Rc::new(NdNode {
            rule: NdRule::App,
            env: y11.env.union(&x00.env),
            triple: NdTriple::new(1, 1, NdType::Atom),
            children: vec![y11.clone(), x00],
        });
        // y (y x) : (1,2,r) -- positive 1-value meets the 1-zone, 2-value 1
        let y_y_x = Rc::new(NdNode {
            rule: NdRule::App,
            env: y01.env.union(&y_x.env),
            triple: NdTriple::new(1, 2, NdType::Atom),
            children: vec![y01.clone(), y_x],
        });
        let lam_x = Rc::new(NdNode {
            rule: NdRule::Lam,
            env: y01.env.union(&y11.env),
            triple: NdTriple::new(1, 2, tau_y()),
            children: vec![y_y_x],
        });
        let lam_y = Rc::new(NdNode {
            rule: NdRule::Lam,
            env: NdEnv::empty(),
            triple: NdTriple::new(
                1,
                2,
                NdType::arrow(
                    vec![NdTriple::new(0, 1, tau_y()), NdTriple::new(1, 1, tau_y())],
                    tau_y(),
                ),
            ),
            children: vec![lam_x],
        });
        (n, lam_y)
    }

    #[test]
    fn checks_the_transcribed_zone_derivation() {
        let (n, root) = example2_n_derivation();
        let d = NdDerivation { term: n, m: 2, root };
        let vec = d.check_and_value(&sig()).unwrap();
        // one node with 2-value 1, nothing else
        assert_eq!(vec, vec![0, 1, 0]);
    }

    #[test]
    fn rejects_mutated_zone_derivation() {
        let (n, root) = example2_n_derivation();
        // raising the outer y leaf into the 1-zone makes two premises
        // 1-unbalanced in the lower application
        fn raise_first_y01(node: &NdNode) -> NdNode {
            let mut out = node.clone();
            if node.rule == NdRule::Var && node.triple == NdTriple::new(0, 1, tau_y()) {
                out.env = NdEnv::singleton("y", NdTriple::new(1, 1, tau_y()));
                out.triple = NdTriple::new(1, 1, tau_y());
                return out;
            }
            out.children = node.children.iter().map(|c| Rc::new(raise_first_y01(c))).collect();
            out
        }
        let bad = NdDerivation {
            term: n,
            m: 2,
            root: Rc::new(raise_first_y01(&root)),
        };
        assert!(bad.check(&sig()).is_err());
    }

    #[test]
    fn rejects_two_zones_at_the_same_order() {
        // a (a e) with both a axioms claiming the 1-zone
        let a_ty = NdType::arrow(vec![NdTriple::new(0, 0, NdType::Atom)], NdType::Atom);
        let a_axiom = Rc::new(NdNode {
            rule: NdRule::Const,
            env: NdEnv::empty(),
            triple: NdTriple::new(1, 1, a_ty.clone()),
            children: vec![],
        });
        let e_axiom = Rc::new(NdNode {
            rule: NdRule::Const,
            env: NdEnv::empty(),
            triple: NdTriple::new(0, 0, NdType::Atom),
            children: vec![],
        });
        let inner = Rc::new(NdNode {
            rule: NdRule::App,
            env: NdEnv::empty(),
            triple: NdTriple::new(1, 1, NdType::Atom),
            children: vec![a_axiom.clone(), e_axiom],
        });
        let outer = Rc::new(NdNode {
            rule: NdRule::App,
            env: NdEnv::empty(),
            triple: NdTriple::new(1, 1, NdType::Atom),
            children: vec![a_axiom, inner],
        });
        let d = NdDerivation {
            term: p("a (a e)"),
            m: 1,
            root: outer,
        };
        let err = d.check(&sig()).unwrap_err();
        assert!(err.message.contains("unbalanced"), "{}", err.message);
    }

    #[test]
    fn example3_b_application_chain_checks() {
        // |-_2 b M e : (2,2,r) built from the best derivation for M,
        // descending only into the first argument of b
        let m_term = p(EXAMPLE1);
        let best = max_value(&m_term, 2, &sig(), &caps()).unwrap().unwrap();
        let b_ty = NdType::arrow(
            vec![NdTriple::new(0, 0, NdType::Atom)],
            NdType::arrow(vec![], NdType::Atom),
        );
        let b_axiom = Rc::new(NdNode {
            rule: NdRule::Const,
            env: NdEnv::empty(),
            triple: NdTriple::new(0, 0, b_ty),
            children: vec![],
        });
        let b_m = Rc::new(NdNode {
            rule: NdRule::App,
            env: NdEnv::empty(),
            triple: NdTriple::new(2, 2, NdType::arrow(vec![], NdType::Atom)),
            children: vec![b_axiom, best.witness.root.clone()],
        });
        // the second application has no premise for the ignored argument
        let root = Rc::new(NdNode {
            rule: NdRule::App,
            env: NdEnv::empty(),
            triple: NdTriple::new(2, 2, NdType::Atom),
            children: vec![b_m],
        });
        let full = Term::app(Term::app(p("b"), m_term), p("e"));
        let d = NdDerivation {
            term: full,
            m: 2,
            root,
        };
        let vec = d.check_and_value(&sig()).unwrap();
        assert_eq!(vec[2], 5);
    }

    #[test]
    fn search_agrees_with_full_enumeration_on_small_terms() {
        // The bottom-up reference enumerates weakening extras at every
        // abstraction, the search proves them redundant at redex position;
        // so the reference may reach more value vectors, but the top values
        // and the derivable judgments must coincide, and every searched
        // vector must be realized by some materialized derivation.
        for (text, m) in [
            ("e", 0),
            ("e", 1),
            ("a e", 0),
            ("a e", 1),
            ("a (a e)", 1),
            ("b (a e) (a (a e))", 0),
            ("b (a e) (a (a e))", 1),
            ("(\\x:o. x) (a e)", 1),
            ("(\\x:o. e) (a e)", 1),
            ("(\\x:o. b x x) (a e)", 1),
            ("(\\y:(o->o). y (y e)) a", 2),
            ("(\\y:(o->o). y (y e)) (\\x:o. e)", 2),
            ("a ((\\x:(o->o). e) a)", 2),
        ] {
            let t = p(text);
            let trees = enumerate_derivations(&t, m, &sig(), &caps()).unwrap();
            let vecs = enumerate_value_vectors(&t, m, &sig(), &caps()).unwrap();
            let best = max_value(&t, m, &sig(), &caps()).unwrap();
            let mut tree_vecs = BTreeSet::new();
            for d in &trees {
                tree_vecs.insert(d.check_and_value(&sig()).unwrap());
            }
            assert!(
                vecs.is_subset(&tree_vecs),
                "{} at m={}: searched vectors must be realizable",
                text,
                m
            );
            assert_eq!(tree_vecs.is_empty(), vecs.is_empty(), "{} at m={}", text, m);
            let tree_max = tree_vecs.iter().map(|v| v[m as usize]).max();
            let vec_max = vecs.iter().map(|v| v[m as usize]).max();
            assert_eq!(vec_max, tree_max, "{} at m={}", text, m);
            assert_eq!(best.map(|b| b.value), tree_max, "{} at m={}", text, m);
        }
    }

    #[test]
    fn guard_rejects_bad_inputs() {
        assert!(matches!(
            max_value(&p("a x:o"), 1, &sig(), &caps()),
            Err(NdError::NotClosed)
        ));
        assert!(matches!(
            max_value(&p("a"), 1, &sig(), &caps()),
            Err(NdError::NotGround { .. })
        ));
        assert!(matches!(
            max_value(&p(EXAMPLE1), 0, &sig(), &caps()),
            Err(NdError::ComplexityTooHigh { .. })
        ));
        assert!(matches!(
            max_value(&p("e"), 9, &sig(), &caps()),
            Err(NdError::OrderTooHigh { .. })
        ));
        let non_homog = p("(\\f:(o->(o->o)->o). e) (\\x:o.\\g:(o->o). g x)");
        assert!(matches!(
            max_value(&non_homog, 2, &sig(), &caps()),
            Err(NdError::NotHomogeneous)
        ));
    }
}
