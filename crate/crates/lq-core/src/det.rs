//! The flag-based intersection type system for counting occurrences of the
//! counted constant in beta-normal forms.
//!
//! Types refine sorts: the base sort has the single atom `r`, and an arrow
//! sort carries a finite set of (flag, type) pairs on the left. A flag marks
//! a term as productive (`pr`) when it contributes counted constants to the
//! normal form, either by using the constant itself or by duplicating a
//! productive binding. The value of a derivation sums, over its nodes, one
//! per counted-constant axiom plus the number of duplicated productive
//! bindings at application nodes; it is a lower bound for the number of
//! counted constants in the normal form.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::rc::Rc;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::sort::{Signature, Sort};
use crate::term::Term;
use crate::{CapacityError, Caps};

/// Productivity flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Flag {
    Np,
    Pr,
}

impl fmt::Display for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Flag::Np => write!(f, "np"),
            Flag::Pr => write!(f, "pr"),
        }
    }
}

/// An intersection type refining a sort. Argument sets are kept sorted and
/// deduplicated, so derived equality is set equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DetType {
    /// The unique atom of the base sort.
    Atom,
    Arrow(Vec<(Flag, DetType)>, alloc::boxed::Box<DetType>),
}

impl DetType {
    pub fn arrow(mut args: Vec<(Flag, DetType)>, res: DetType) -> DetType {
        args.sort();
        args.dedup();
        DetType::Arrow(args, alloc::boxed::Box::new(res))
    }

    pub fn matches_sort(&self, sort: &Sort) -> bool {
        match (self, sort) {
            (DetType::Atom, Sort::Base) => true,
            (DetType::Arrow(args, res), Sort::Arrow(a, b)) => {
                args.iter().all(|(_, t)| t.matches_sort(a)) && res.matches_sort(b)
            }
            _ => false,
        }
    }
}

impl fmt::Display for DetType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetType::Atom => write!(f, "r"),
            DetType::Arrow(args, res) => {
                if args.is_empty() {
                    write!(f, "top")?;
                } else {
                    for (i, (fl, t)) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, "&")?;
                        }
                        write!(f, "({},{})", fl, t)?;
                    }
                }
                write!(f, "->{}", res)
            }
        }
    }
}

/// The full set of types of a sort; doubly exponential in the sort, so capped.
pub fn types_of(sort: &Sort, caps: &Caps) -> Result<Vec<DetType>, CapacityError> {
    if sort.order() > caps.max_sort_order {
        return Err(CapacityError {
            what: "sort order in the type space",
            limit: caps.max_sort_order as usize,
        });
    }
    fn go(sort: &Sort, caps: &Caps) -> Result<Vec<DetType>, CapacityError> {
        match sort {
            Sort::Base => Ok(alloc::vec![DetType::Atom]),
            Sort::Arrow(a, b) => {
                let ta = go(a, caps)?;
                let tb = go(b, caps)?;
                let pairs: Vec<(Flag, DetType)> = ta
                    .iter()
                    .flat_map(|t| [(Flag::Np, t.clone()), (Flag::Pr, t.clone())])
                    .collect();
                let bits = pairs.len();
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
                    let args: Vec<(Flag, DetType)> = pairs
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask & (1 << i) != 0)
                        .map(|(_, p)| p.clone())
                        .collect();
                    for res in &tb {
                        out.push(DetType::arrow(args.clone(), res.clone()));
                    }
                }
                Ok(out)
            }
        }
    }
    go(sort, caps)
}

/// One environment entry `var : (flag, type)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Binding {
    pub var: String,
    pub flag: Flag,
    pub ty: DetType,
}

/// A type environment: a set of bindings. The same variable may be bound
/// several times with different (flag, type) pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeEnv(BTreeSet<Binding>);

impl TypeEnv {
    pub fn empty() -> TypeEnv {
        TypeEnv::default()
    }

    pub fn singleton(var: &str, flag: Flag, ty: DetType) -> TypeEnv {
        let mut s = BTreeSet::new();
        s.insert(Binding {
            var: var.to_string(),
            flag,
            ty,
        });
        TypeEnv(s)
    }

    pub fn union(&self, other: &TypeEnv) -> TypeEnv {
        TypeEnv(self.0.union(&other.0).cloned().collect())
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// Number of bindings carrying the productive flag.
    pub fn pr_count(&self) -> u64 {
        self.0.iter().filter(|b| b.flag == Flag::Pr).count() as u64
    }

    pub fn has_pr(&self) -> bool {
        self.0.iter().any(|b| b.flag == Flag::Pr)
    }

    /// The (flag, type) pairs bound to `var`, in canonical order.
    pub fn pairs_for(&self, var: &str) -> Vec<(Flag, DetType)> {
        self.0
            .iter()
            .filter(|b| b.var == var)
            .map(|b| (b.flag, b.ty.clone()))
            .collect()
    }

    pub fn without_var(&self, var: &str) -> TypeEnv {
        TypeEnv(self.0.iter().filter(|b| b.var != var).cloned().collect())
    }

    pub fn binds_var(&self, var: &str) -> bool {
        self.0.iter().any(|b| b.var == var)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Binding> {
        self.0.iter()
    }
}

impl fmt::Display for TypeEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}:({},{})", b.var, b.flag, b.ty)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetRule {
    Const,
    Var,
    Lam,
    App,
}

/// One node of a derivation: the judgment `env |- subterm : (flag, ty)`
/// together with the rule instantiated at this node. The subterm itself is
/// implied by the position of the node below the derivation root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetNode {
    pub rule: DetRule,
    pub env: TypeEnv,
    pub flag: Flag,
    pub ty: DetType,
    pub children: Vec<Rc<DetNode>>,
}

impl DetNode {
    /// `pr` when the judgment itself is productive or its environment
    /// contains a productive binding; this is what an application requiring
    /// a productive argument accepts.
    pub fn effective_flag(&self) -> Flag {
        if self.flag == Flag::Pr || self.env.has_pr() {
            Flag::Pr
        } else {
            Flag::Np
        }
    }

    /// The value of this node alone: 1 at counted-constant axioms (the only
    /// productive constants), the number of duplicated productive bindings
    /// at applications, 0 elsewhere.
    pub fn node_value(&self) -> u64 {
        match self.rule {
            DetRule::Const => u64::from(self.flag == Flag::Pr),
            DetRule::App => {
                let parts: u64 = self.children.iter().map(|c| c.env.pr_count()).sum();
                parts - self.env.pr_count()
            }
            DetRule::Var | DetRule::Lam => 0,
        }
    }

    /// Sum of node values over the whole derivation.
    pub fn total_value(&self) -> u64 {
        self.node_value() + self.children.iter().map(|c| c.total_value()).sum::<u64>()
    }
}

/// A derivation for a term: the judgment tree rooted at the term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetDerivation {
    pub term: Term,
    pub root: Rc<DetNode>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckViolation {
    pub path: crate::reduce::Path,
    pub message: String,
}

impl fmt::Display for CheckViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {}: {}", self.path, self.message)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CheckViolation {}

impl DetDerivation {
    pub fn value(&self) -> u64 {
        self.root.total_value()
    }

    pub fn flag(&self) -> Flag {
        self.root.flag
    }

    /// Checks that every node instantiates a rule of the system, including
    /// all application side conditions and the exactness of environments.
    pub fn check(&self, sig: &Signature) -> Result<(), CheckViolation> {
        check_node(&self.term, &self.root, sig, &mut Vec::new())
    }
}

fn violation(path: &[crate::reduce::Selector], message: String) -> CheckViolation {
    CheckViolation {
        path: crate::reduce::Path(path.to_vec()),
        message,
    }
}

fn check_node(
    term: &Term,
    node: &DetNode,
    sig: &Signature,
    path: &mut Vec<crate::reduce::Selector>,
) -> Result<(), CheckViolation> {
    use crate::reduce::Selector;
    match term {
        Term::Const(name, sort) => {
            if node.rule != DetRule::Const || !node.children.is_empty() {
                return Err(violation(path, alloc::format!("constant {} needs the constant axiom", name)));
            }
            if !node.env.is_empty() {
                return Err(violation(path, "constant axiom has a non-empty environment".into()));
            }
            let want = if name == sig.counted() { Flag::Pr } else { Flag::Np };
            if node.flag != want {
                return Err(violation(
                    path,
                    alloc::format!("constant {} must have flag {}", name, want),
                ));
            }
            // type shape: singleton (flag, r) on every argument, result r
            let mut ty = &node.ty;
            for _ in 0..sort.arity() {
                match ty {
                    DetType::Arrow(args, res)
                        if args.len() == 1 && args[0].1 == DetType::Atom =>
                    {
                        ty = res;
                    }
                    _ => {
                        return Err(violation(
                            path,
                            alloc::format!("constant {} has a malformed type {}", name, node.ty),
                        ))
                    }
                }
            }
            if *ty != DetType::Atom {
                return Err(violation(
                    path,
                    alloc::format!("constant {} has a malformed type {}", name, node.ty),
                ));
            }
            Ok(())
        }
        Term::Var(x, sort) => {
            if node.rule != DetRule::Var || !node.children.is_empty() {
                return Err(violation(path, alloc::format!("variable {} needs the variable axiom", x)));
            }
            if node.flag != Flag::Np {
                return Err(violation(path, "the flag of a variable axiom is always np".into()));
            }
            if !node.ty.matches_sort(sort) {
                return Err(violation(path, alloc::format!("type {} does not refine sort {}", node.ty, sort)));
            }
            let pairs = node.env.pairs_for(x);
            if node.env.len() != 1 || pairs.len() != 1 || pairs[0].1 != node.ty {
                return Err(violation(
                    path,
                    alloc::format!("variable axiom environment must be exactly {}:(f,{})", x, node.ty),
                ));
            }
            Ok(())
        }
        Term::Lam(x, sort, body) => {
            if node.rule != DetRule::Lam || node.children.len() != 1 {
                return Err(violation(path, "lambda needs the abstraction rule with one premise".into()));
            }
            let child = &node.children[0];
            if child.flag != node.flag {
                return Err(violation(path, "abstraction must copy the premise flag".into()));
            }
            if node.env.binds_var(x) {
                return Err(violation(path, alloc::format!("environment must not bind {}", x)));
            }
            if node.env != child.env.without_var(x) {
                return Err(violation(path, "abstraction environment must drop exactly the bound variable".into()));
            }
            let t = child.env.pairs_for(x);
            for (_, ty) in &t {
                if !ty.matches_sort(sort) {
                    return Err(violation(path, alloc::format!("binding type {} does not refine {}", ty, sort)));
                }
            }
            let want = DetType::arrow(t, child.ty.clone());
            if node.ty != want {
                return Err(violation(
                    path,
                    alloc::format!("abstraction type must be {}, found {}", want, node.ty),
                ));
            }
            path.push(Selector::Body);
            let r = check_node(body, child, sig, path);
            path.pop();
            r
        }
        Term::App(fun, arg) => {
            if node.rule != DetRule::App || node.children.is_empty() {
                return Err(violation(path, "application needs the application rule".into()));
            }
            let k = &node.children[0];
            let DetType::Arrow(t, res) = &k.ty else {
                return Err(violation(path, "operator premise must have an arrow type".into()));
            };
            if **res != node.ty {
                return Err(violation(
                    path,
                    alloc::format!("conclusion type must be {}, found {}", res, node.ty),
                ));
            }
            let subs = &node.children[1..];
            if subs.len() != t.len() {
                return Err(violation(
                    path,
                    alloc::format!("expected {} argument premises, found {}", t.len(), subs.len()),
                ));
            }
            // pair every element of the intersection with its premise; the
            // canonical order of the set fixes the order of the children
            for ((want_flag, want_ty), sub) in t.iter().zip(subs) {
                if sub.ty != *want_ty {
                    return Err(violation(
                        path,
                        alloc::format!("argument premise derives {}, needs {}", sub.ty, want_ty),
                    ));
                }
                if sub.effective_flag() != *want_flag {
                    return Err(violation(
                        path,
                        alloc::format!(
                            "argument pair ({},{}) needs a {} premise (premise flag {} with {} productive bindings)",
                            want_flag,
                            want_ty,
                            want_flag,
                            sub.flag,
                            sub.env.pr_count()
                        ),
                    ));
                }
            }
            let mut env = k.env.clone();
            for sub in subs {
                env = env.union(&sub.env);
            }
            if env != node.env {
                return Err(violation(path, "conclusion environment must be the union of the premises".into()));
            }
            let dup = node.children.iter().map(|c| c.env.pr_count()).sum::<u64>() > node.env.pr_count();
            let want_flag = if k.flag == Flag::Pr || subs.iter().any(|s| s.flag == Flag::Pr) || dup {
                Flag::Pr
            } else {
                Flag::Np
            };
            if node.flag != want_flag {
                return Err(violation(
                    path,
                    alloc::format!("conclusion flag must be {}", want_flag),
                ));
            }
            path.push(Selector::Fun);
            check_node(fun, k, sig, path)?;
            path.pop();
            for sub in subs {
                path.push(Selector::Arg);
                check_node(arg, sub, sig, path)?;
                path.pop();
            }
            Ok(())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DetError {
    NotClosed,
    NotGround { sort: Sort },
    IllSorted(crate::term::SortError),
    Capacity(CapacityError),
    /// No derivation of the root judgment was found.
    NoDerivation,
    /// Several derivations were found where exactly one was expected.
    MultipleDerivations { count: usize },
}

impl fmt::Display for DetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetError::NotClosed => write!(f, "term must be closed"),
            DetError::NotGround { sort } => write!(f, "term must have sort o, found {}", sort),
            DetError::IllSorted(e) => write!(f, "{}", e),
            DetError::Capacity(e) => write!(f, "{}", e),
            DetError::NoDerivation => write!(f, "no derivation found for the closed ground term"),
            DetError::MultipleDerivations { count } => {
                write!(f, "expected a unique derivation, found {}", count)
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DetError {}

impl From<CapacityError> for DetError {
    fn from(e: CapacityError) -> Self {
        DetError::Capacity(e)
    }
}

impl From<crate::term::SortError> for DetError {
    fn from(e: crate::term::SortError) -> Self {
        DetError::IllSorted(e)
    }
}

/// A judgment key: environment, flag, type. The subterm is implicit.
pub type JKey = (TypeEnv, Flag, DetType);

/// How one representative derivation of a `(judgment, value)` entry was
/// built; used to materialize witnesses without storing whole trees.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Recipe {
    Leaf,
    Lam { child: (JKey, u64) },
    App { fun: (JKey, u64), args: Vec<(JKey, u64)> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct ValInfo {
    /// Number of distinct derivations of this judgment with this value
    /// (saturating).
    count: u64,
    recipe: Recipe,
}

/// Where the binding pairs of a redex-bound variable may come from:
/// either exactly the demanded intersection (a lambda matched against a
/// demanded arrow type), or whatever the actual argument of the redex can
/// supply.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Allowed {
    Exactly(Vec<(Flag, DetType)>),
    FromArg(ArgSource),
}

/// An argument term together with the restriction context it is solved in.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct ArgSource {
    term: Term,
    ctx: Restr,
}

/// Restrictions for redex-bound variables currently in scope.
type Restr = BTreeMap<String, Allowed>;

/// Entries of one solve: for each judgment, the achievable values with
/// their derivation counts.
type EntryMap = BTreeMap<JKey, BTreeMap<u64, ValInfo>>;

fn effective_flag(key: &JKey) -> Flag {
    if key.1 == Flag::Pr || key.0.has_pr() {
        Flag::Pr
    } else {
        Flag::Np
    }
}

type SolveKey = (Term, DetType, Vec<ArgSource>, Restr);

/// Demand-driven derivation search. `solve(t, result, pending, restr)`
/// returns all judgments for `t` whose type is
/// `T1 -> ... -> Tn -> result` with `n = pending.len()`, where `pending`
/// holds the syntactic arguments the enclosing applications will pass for
/// the respective arrow layers. Variables bound by a redex only receive
/// binding pairs the redex argument can actually supply; this is sound
/// because weakening is disallowed, so every binding must be consumed by
/// the application.
struct Solver<'a> {
    sig: &'a Signature,
    caps: &'a Caps,
    memo: BTreeMap<SolveKey, Rc<EntryMap>>,
    work: usize,
}

impl<'a> Solver<'a> {
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

    /// Effective flags with which the argument can supply `ty`.
    fn avail_flags(&mut self, arg: &ArgSource, ty: &DetType) -> Result<BTreeSet<Flag>, DetError> {
        let entries = self.solve(&arg.term.clone(), ty, &[], &arg.ctx.clone())?;
        Ok(entries.keys().map(effective_flag).collect())
    }

    fn var_pair_allowed(
        &mut self,
        restr: &Restr,
        var: &str,
        flag: Flag,
        ty: &DetType,
    ) -> Result<bool, DetError> {
        match restr.get(var) {
            None => Ok(true),
            Some(Allowed::Exactly(pairs)) => Ok(pairs.iter().any(|(f, t)| *f == flag && t == ty)),
            Some(Allowed::FromArg(src)) => {
                let src = src.clone();
                Ok(self.avail_flags(&src, ty)?.contains(&flag))
            }
        }
    }

    fn solve(
        &mut self,
        t: &Term,
        result: &DetType,
        pending: &[ArgSource],
        restr: &Restr,
    ) -> Result<Rc<EntryMap>, DetError> {
        // only restrictions of free variables are part of the key
        let fv = t.free_vars();
        let restr_key: Restr = restr
            .iter()
            .filter(|(k, _)| fv.iter().any(|(n, _)| n == *k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let key: SolveKey = (t.clone(), result.clone(), pending.to_vec(), restr_key.clone());
        if let Some(hit) = self.memo.get(&key) {
            return Ok(hit.clone());
        }
        let mut out: EntryMap = BTreeMap::new();
        let add = |out: &mut EntryMap, key: JKey, value: u64, count: u64, recipe: Recipe| {
            let by_val = out.entry(key).or_default();
            match by_val.get_mut(&value) {
                Some(info) => info.count = info.count.saturating_add(count),
                None => {
                    by_val.insert(value, ValInfo { count, recipe });
                }
            }
        };
        match t {
            Term::Const(name, sort) => {
                let counted = name == self.sig.counted();
                let flag = if counted { Flag::Pr } else { Flag::Np };
                let value = u64::from(counted);
                let arity = sort.arity();
                let k = pending.len();
                if k <= arity && const_suffix_matches(result, arity - k) {
                    // free flag choice on the first k layers
                    for mask in 0..(1u32 << k) {
                        let mut ty = result.clone();
                        for i in (0..k).rev() {
                            let f = if mask & (1 << i) != 0 { Flag::Pr } else { Flag::Np };
                            ty = DetType::arrow(alloc::vec![(f, DetType::Atom)], ty);
                        }
                        add(&mut out, (TypeEnv::empty(), flag, ty), value, 1, Recipe::Leaf);
                    }
                }
            }
            Term::Var(x, sort) => {
                // the type is T1 -> .. -> Tk -> result; every layer set is a
                // subset of the pairs the pending argument can supply
                let layer_sorts: Vec<Sort> = sort.args().into_iter().cloned().collect();
                let k = pending.len();
                if k <= layer_sorts.len() {
                    let mut layer_pairs: Vec<Vec<(Flag, DetType)>> = Vec::with_capacity(k);
                    for (i, arg) in pending.iter().enumerate() {
                        let mut pairs = Vec::new();
                        for ty in types_of(&layer_sorts[i], self.caps)? {
                            for f in self.avail_flags(arg, &ty)? {
                                pairs.push((f, ty.clone()));
                            }
                        }
                        if pairs.len() > 16 {
                            return Err(DetError::Capacity(CapacityError {
                                what: "supplied pairs at a variable-headed application",
                                limit: 16,
                            }));
                        }
                        pairs.sort();
                        layer_pairs.push(pairs);
                    }
                    // every subset choice per layer yields a candidate type
                    for ty in var_types(result, &layer_pairs) {
                        for flag in [Flag::Np, Flag::Pr] {
                            if self.var_pair_allowed(restr, x, flag, &ty)? {
                                add(
                                    &mut out,
                                    (TypeEnv::singleton(x, flag, ty.clone()), Flag::Np, ty.clone()),
                                    0,
                                    1,
                                    Recipe::Leaf,
                                );
                            }
                        }
                    }
                }
            }
            Term::Lam(x, sort, body) => {
                match pending.split_first() {
                    Some((arg, rest)) => {
                        // the binder is consumed by the enclosing redex
                        let mut inner = restr.clone();
                        inner.insert(x.clone(), Allowed::FromArg(arg.clone()));
                        let bodies = self.solve(body, result, rest, &inner)?;
                        for (bkey, by_val) in bodies.iter() {
                            let t_args = bkey.0.pairs_for(x);
                            let new_key = (
                                bkey.0.without_var(x),
                                bkey.1,
                                DetType::arrow(t_args, bkey.2.clone()),
                            );
                            for (value, info) in by_val {
                                add(
                                    &mut out,
                                    new_key.clone(),
                                    *value,
                                    info.count,
                                    Recipe::Lam { child: (bkey.clone(), *value) },
                                );
                            }
                        }
                    }
                    None => {
                        // the demanded type fixes the intersection exactly
                        if let DetType::Arrow(t_args, res) = result {
                            if t_args.iter().all(|(_, ty)| ty.matches_sort(sort)) {
                                let mut inner = restr.clone();
                                inner.insert(x.clone(), Allowed::Exactly(t_args.clone()));
                                let bodies = self.solve(body, res, &[], &inner)?;
                                for (bkey, by_val) in bodies.iter() {
                                    if bkey.0.pairs_for(x) != *t_args {
                                        continue;
                                    }
                                    let new_key =
                                        (bkey.0.without_var(x), bkey.1, result.clone());
                                    for (value, info) in by_val {
                                        add(
                                            &mut out,
                                            new_key.clone(),
                                            *value,
                                            info.count,
                                            Recipe::Lam { child: (bkey.clone(), *value) },
                                        );
                                    }
                                }
                            }
                        }
                    }
                }
            }
            Term::App(fun, arg) => {
                let src = ArgSource {
                    term: (**arg).clone(),
                    ctx: restr.clone(),
                };
                let mut fun_pending = Vec::with_capacity(pending.len() + 1);
                fun_pending.push(src);
                fun_pending.extend_from_slice(pending);
                let funs = self.solve(fun, result, &fun_pending, restr)?;
                for (fkey, f_by_val) in funs.iter() {
                    let DetType::Arrow(t_args, res) = &fkey.2 else { continue };
                    // per intersection element, the matching argument entries
                    let mut options: Vec<Vec<(JKey, u64, u64)>> = Vec::with_capacity(t_args.len());
                    for (want_flag, want_ty) in t_args {
                        let entries = self.solve(arg, want_ty, &[], restr)?;
                        let mut opts = Vec::new();
                        for (akey, by_val) in entries.iter() {
                            if effective_flag(akey) != *want_flag {
                                continue;
                            }
                            for (value, info) in by_val {
                                opts.push((akey.clone(), *value, info.count));
                            }
                        }
                        options.push(opts);
                    }
                    let option_slices: Vec<&[(JKey, u64, u64)]> =
                        options.iter().map(|o| o.as_slice()).collect();
                    if option_slices.iter().any(|o| o.is_empty()) {
                        continue;
                    }
                    let mut work = 0usize;
                    let mut combos: Vec<(TypeEnv, Flag, u64, u64, Vec<(JKey, u64)>)> = Vec::new();
                    crate::combo::for_each_combo(&option_slices, |subs| {
                        let mut env = fkey.0.clone();
                        for s in subs {
                            env = env.union(&s.0 .0);
                        }
                        let parts = fkey.0.pr_count()
                            + subs.iter().map(|s| s.0 .0.pr_count()).sum::<u64>();
                        let node_value = parts - env.pr_count();
                        let flag = if fkey.1 == Flag::Pr
                            || subs.iter().any(|s| s.0 .1 == Flag::Pr)
                            || node_value > 0
                        {
                            Flag::Pr
                        } else {
                            Flag::Np
                        };
                        let subs_value: u64 = subs.iter().map(|s| s.1).sum();
                        let count: u64 =
                            subs.iter().fold(1u64, |acc, s| acc.saturating_mul(s.2));
                        combos.push((
                            env,
                            flag,
                            node_value + subs_value,
                            count,
                            subs.iter().map(|s| (s.0.clone(), s.1)).collect(),
                        ));
                        work += 1;
                        if work > self.caps.max_derivations {
                            return Err(CapacityError {
                                what: "derivation search work",
                                limit: self.caps.max_derivations,
                            });
                        }
                        Ok(())
                    })?;
                    self.spend(work.max(1))?;
                    for (f_value, f_info) in f_by_val {
                        for (env, flag, subs_value, count, arg_keys) in &combos {
                            add(
                                &mut out,
                                (env.clone(), *flag, (**res).clone()),
                                f_value + subs_value,
                                f_info.count.saturating_mul(*count),
                                Recipe::App {
                                    fun: (fkey.clone(), *f_value),
                                    args: arg_keys.clone(),
                                },
                            );
                        }
                    }
                }
            }
        }
        let entries: usize = out.values().map(|m| m.len()).sum();
        self.spend(entries.max(1))?;
        let rc = Rc::new(out);
        self.memo.insert(key, rc.clone());
        Ok(rc)
    }

    /// Materializes the representative derivation of `(key, value)` found
    /// by a previous solve with the same parameters.
    fn reconstruct(
        &mut self,
        t: &Term,
        result: &DetType,
        pending: &[ArgSource],
        restr: &Restr,
        key: &JKey,
        value: u64,
    ) -> Rc<DetNode> {
        let entries = self
            .solve(t, result, pending, restr)
            .expect("solved before reconstruction");
        let info = entries[key][&value].clone();
        match (&info.recipe, t) {
            (Recipe::Leaf, Term::Const(..)) => Rc::new(DetNode {
                rule: DetRule::Const,
                env: key.0.clone(),
                flag: key.1,
                ty: key.2.clone(),
                children: Vec::new(),
            }),
            (Recipe::Leaf, Term::Var(..)) => Rc::new(DetNode {
                rule: DetRule::Var,
                env: key.0.clone(),
                flag: key.1,
                ty: key.2.clone(),
                children: Vec::new(),
            }),
            (Recipe::Lam { child }, Term::Lam(x, _, body)) => {
                let (inner_result, inner_pending, mut inner_restr) = match pending.split_first() {
                    Some((arg, rest)) => {
                        (result.clone(), rest.to_vec(), {
                            let mut r = restr.clone();
                            r.insert(x.clone(), Allowed::FromArg(arg.clone()));
                            r
                        })
                    }
                    None => match result {
                        DetType::Arrow(t_args, res) => ((**res).clone(), Vec::new(), {
                            let mut r = restr.clone();
                            r.insert(x.clone(), Allowed::Exactly(t_args.clone()));
                            r
                        }),
                        DetType::Atom => unreachable!("lambda with atomic demanded type"),
                    },
                };
                let c = self.reconstruct(
                    body,
                    &inner_result,
                    &inner_pending,
                    &mut inner_restr,
                    &child.0,
                    child.1,
                );
                Rc::new(DetNode {
                    rule: DetRule::Lam,
                    env: key.0.clone(),
                    flag: key.1,
                    ty: key.2.clone(),
                    children: alloc::vec![c],
                })
            }
            (Recipe::App { fun, args }, Term::App(fun_t, arg_t)) => {
                let src = ArgSource {
                    term: (**arg_t).clone(),
                    ctx: restr.clone(),
                };
                let mut fun_pending = Vec::with_capacity(pending.len() + 1);
                fun_pending.push(src);
                fun_pending.extend_from_slice(pending);
                let mut children = Vec::with_capacity(1 + args.len());
                children.push(self.reconstruct(fun_t, result, &fun_pending, restr, &fun.0, fun.1));
                for ((akey, avalue), (_, want_ty)) in args.iter().zip(match &fun.0 .2 {
                    DetType::Arrow(t_args, _) => t_args.iter(),
                    DetType::Atom => unreachable!("operator type is an arrow"),
                }) {
                    children.push(self.reconstruct(arg_t, want_ty, &[], restr, akey, *avalue));
                }
                Rc::new(DetNode {
                    rule: DetRule::App,
                    env: key.0.clone(),
                    flag: key.1,
                    ty: key.2.clone(),
                    children,
                })
            }
            _ => unreachable!("recipe shape matches the term shape"),
        }
    }
}

/// All types `T1 -> .. -> Tk -> result` with `Ti` a subset of
/// `layer_pairs[i]`.
fn var_types(result: &DetType, layer_pairs: &[Vec<(Flag, DetType)>]) -> Vec<DetType> {
    match layer_pairs.split_first() {
        None => alloc::vec![result.clone()],
        Some((pairs, rest)) => {
            let tails = var_types(result, rest);
            let mut out = Vec::new();
            for mask in 0..(1usize << pairs.len()) {
                let subset: Vec<(Flag, DetType)> = pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, p)| p.clone())
                    .collect();
                for tail in &tails {
                    out.push(DetType::arrow(subset.clone(), tail.clone()));
                }
            }
            out
        }
    }
}

/// The result type of a constant after stripping `remaining` arrow layers.
fn const_suffix_matches(result: &DetType, remaining: usize) -> bool {
    let mut ty = result;
    for _ in 0..remaining {
        match ty {
            DetType::Arrow(args, res) if args.len() == 1 && args[0].1 == DetType::Atom => {
                ty = res;
            }
            _ => return false,
        }
    }
    *ty == DetType::Atom
}

/// Everything derivable for one root judgment `|- t : (flag, r)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootSummary {
    pub flag: Flag,
    /// Total number of distinct derivations (saturating).
    pub count: u64,
    /// Achievable values with the number of derivations per value.
    pub values: BTreeMap<u64, u64>,
    /// One materialized representative.
    pub witness: DetDerivation,
}

fn guard_closed_ground(t: &Term) -> Result<(), DetError> {
    let sort = t.sort()?;
    if sort != Sort::Base {
        return Err(DetError::NotGround { sort });
    }
    if !t.is_closed() {
        return Err(DetError::NotClosed);
    }
    Ok(())
}

/// All derivable root judgments `|- t : (f, r)` of a closed ground term,
/// with per-value derivation counts and one witness derivation each.
pub fn analyze(t: &Term, sig: &Signature, caps: &Caps) -> Result<Vec<RootSummary>, DetError> {
    guard_closed_ground(t)?;
    let mut s = Solver {
        sig,
        caps,
        memo: BTreeMap::new(),
        work: 0,
    };
    let restr = Restr::new();
    let summary = s.solve(t, &DetType::Atom, &[], &restr)?;
    let mut out = Vec::new();
    for (key, by_val) in summary.iter() {
        if !key.0.is_empty() || key.2 != DetType::Atom {
            continue;
        }
        let count = by_val.values().fold(0u64, |acc, i| acc.saturating_add(i.count));
        let (&wit_value, _) = by_val.iter().next().expect("non-empty");
        let witness = DetDerivation {
            term: t.clone(),
            root: s.reconstruct(t, &DetType::Atom, &[], &restr, key, wit_value),
        };
        out.push(RootSummary {
            flag: key.1,
            count,
            values: by_val.iter().map(|(v, i)| (*v, i.count)).collect(),
            witness,
        });
    }
    Ok(out)
}

/// All derivations of `|- t : (f, r)` as materialized trees. Exhaustive and
/// exponential; intended for small terms and for cross-validating
/// [`analyze`].
pub fn enumerate_derivations(
    t: &Term,
    sig: &Signature,
    caps: &Caps,
) -> Result<Vec<DetDerivation>, DetError> {
    guard_closed_ground(t)?;
    let mut e = TreeEnumerator {
        sig,
        caps,
        memo: BTreeMap::new(),
        produced: 0,
    };
    let all = e.derivations(t)?;
    Ok(all
        .iter()
        .filter(|d| d.env.is_empty() && d.ty == DetType::Atom)
        .map(|d| DetDerivation {
            term: t.clone(),
            root: d.clone(),
        })
        .collect())
}

struct TreeEnumerator<'a> {
    sig: &'a Signature,
    caps: &'a Caps,
    memo: BTreeMap<Term, Rc<Vec<Rc<DetNode>>>>,
    produced: usize,
}

impl<'a> TreeEnumerator<'a> {
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

    fn derivations(&mut self, t: &Term) -> Result<Rc<Vec<Rc<DetNode>>>, DetError> {
        if let Some(hit) = self.memo.get(t) {
            return Ok(hit.clone());
        }
        let mut out: Vec<Rc<DetNode>> = Vec::new();
        match t {
            Term::Const(name, sort) => {
                let counted = name == self.sig.counted();
                let flag = if counted { Flag::Pr } else { Flag::Np };
                let arity = sort.arity();
                for mask in 0..(1u32 << arity) {
                    let mut ty = DetType::Atom;
                    for i in (0..arity).rev() {
                        let f = if mask & (1 << i) != 0 { Flag::Pr } else { Flag::Np };
                        ty = DetType::arrow(alloc::vec![(f, DetType::Atom)], ty);
                    }
                    out.push(Rc::new(DetNode {
                        rule: DetRule::Const,
                        env: TypeEnv::empty(),
                        flag,
                        ty,
                        children: Vec::new(),
                    }));
                }
            }
            Term::Var(x, sort) => {
                for ty in types_of(sort, self.caps)? {
                    for flag in [Flag::Np, Flag::Pr] {
                        out.push(Rc::new(DetNode {
                            rule: DetRule::Var,
                            env: TypeEnv::singleton(x, flag, ty.clone()),
                            flag: Flag::Np,
                            ty: ty.clone(),
                            children: Vec::new(),
                        }));
                    }
                }
            }
            Term::Lam(x, _, body) => {
                let bodies = self.derivations(body)?;
                for d in bodies.iter() {
                    let t_args = d.env.pairs_for(x);
                    out.push(Rc::new(DetNode {
                        rule: DetRule::Lam,
                        env: d.env.without_var(x),
                        flag: d.flag,
                        ty: DetType::arrow(t_args, d.ty.clone()),
                        children: alloc::vec![d.clone()],
                    }));
                }
            }
            Term::App(fun, arg) => {
                let funs = self.derivations(fun)?;
                let args = self.derivations(arg)?;
                let mut index: BTreeMap<(DetType, Flag), Vec<Rc<DetNode>>> = BTreeMap::new();
                for d in args.iter() {
                    index
                        .entry((d.ty.clone(), d.effective_flag()))
                        .or_default()
                        .push(d.clone());
                }
                for fd in funs.iter() {
                    let DetType::Arrow(t, res) = &fd.ty else { continue };
                    let empty: Vec<Rc<DetNode>> = Vec::new();
                    let options: Vec<&[Rc<DetNode>]> = t
                        .iter()
                        .map(|(want_flag, want_ty)| {
                            index
                                .get(&(want_ty.clone(), *want_flag))
                                .unwrap_or(&empty)
                                .as_slice()
                        })
                        .collect();
                    let budget = self.caps.max_derivations.saturating_sub(self.produced);
                    crate::combo::for_each_combo(&options, |subs| {
                        let mut env = fd.env.clone();
                        for s in subs {
                            env = env.union(&s.env);
                        }
                        let parts =
                            fd.env.pr_count() + subs.iter().map(|s| s.env.pr_count()).sum::<u64>();
                        let dup = parts > env.pr_count();
                        let flag = if fd.flag == Flag::Pr
                            || subs.iter().any(|s| s.flag == Flag::Pr)
                            || dup
                        {
                            Flag::Pr
                        } else {
                            Flag::Np
                        };
                        let mut children = Vec::with_capacity(1 + subs.len());
                        children.push(fd.clone());
                        children.extend(subs.iter().map(|s| Rc::clone(s)));
                        out.push(Rc::new(DetNode {
                            rule: DetRule::App,
                            env,
                            flag,
                            ty: (**res).clone(),
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

/// The flag and value of the unique root derivation of a closed ground term.
/// Zero or several derivations are reported as errors, never papered over.
pub fn value_and_flag(t: &Term, sig: &Signature, caps: &Caps) -> Result<(Flag, u64), DetError> {
    let roots = analyze(t, sig, caps)?;
    let total: u64 = roots.iter().fold(0u64, |acc, r| acc.saturating_add(r.count));
    match total {
        0 => Err(DetError::NoDerivation),
        1 => {
            let r = &roots[0];
            let (&value, _) = r.values.iter().next().expect("non-empty");
            Ok((r.flag, value))
        }
        n => Err(DetError::MultipleDerivations { count: n as usize }),
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

    fn p(text: &str) -> Term {
        parse_term(text, &sig()).unwrap()
    }

    const EXAMPLE1: &str = "(\\y:(o->o). (\\y:(o->o).\\x:o. y (y x)) ((\\y:(o->o).\\x:o. y (y x)) ((\\y:(o->o).\\x:o. y (y x)) y)) (a e)) a";

    #[test]
    fn type_space_sizes() {
        let caps = Caps::default();
        assert_eq!(types_of(&Sort::Base, &caps).unwrap(), vec![DetType::Atom]);
        assert_eq!(types_of(&parse_sort("o->o").unwrap(), &caps).unwrap().len(), 4);
        assert_eq!(types_of(&parse_sort("(o->o)->o").unwrap(), &caps).unwrap().len(), 256);
    }

    #[test]
    fn type_space_is_capped() {
        let caps = Caps::default();
        // 2^(2*256) types would be needed here
        let err = types_of(&parse_sort("((o->o)->o)->o").unwrap(), &caps).unwrap_err();
        assert_eq!(err.limit, caps.max_type_space);
        let err = types_of(&parse_sort("(((o->o)->o)->o)->o").unwrap(), &caps).unwrap_err();
        assert_eq!(err.what, "sort order in the type space");
    }

    #[test]
    fn derive_e() {
        let roots = analyze(&p("e"), &sig(), &Caps::default()).unwrap();
        assert_eq!(roots.len(), 1);
        assert_eq!(roots[0].flag, Flag::Np);
        assert_eq!(roots[0].count, 1);
        assert_eq!(roots[0].values, BTreeMap::from([(0, 1)]));
        roots[0].witness.check(&sig()).unwrap();
    }

    #[test]
    fn derive_a_e() {
        let (flag, value) = value_and_flag(&p("a e"), &sig(), &Caps::default()).unwrap();
        assert_eq!((flag, value), (Flag::Pr, 1));
    }

    #[test]
    fn derive_b_ae_e() {
        let (flag, value) = value_and_flag(&p("b (a e) e"), &sig(), &Caps::default()).unwrap();
        assert_eq!((flag, value), (Flag::Pr, 1));
    }

    #[test]
    fn example1_value_is_five() {
        let m = p(EXAMPLE1);
        let (flag, value) = value_and_flag(&m, &sig(), &Caps::default()).unwrap();
        assert_eq!(flag, Flag::Pr);
        assert_eq!(value, 5);
        // the witness derivation checks and has the same value
        let roots = analyze(&m, &sig(), &Caps::default()).unwrap();
        assert_eq!(roots.len(), 1);
        roots[0].witness.check(&sig()).unwrap();
        assert_eq!(roots[0].witness.value(), 5);
        assert_eq!(roots[0].witness.flag(), Flag::Pr);
    }

    #[test]
    fn discarded_argument_is_never_typed() {
        // (\x. e) a normalizes to e; the a must not contribute
        let (flag, value) = value_and_flag(&p("(\\x:o. e) (a e)"), &sig(), &Caps::default()).unwrap();
        assert_eq!((flag, value), (Flag::Np, 0));
    }

    #[test]
    fn value_positive_iff_productive() {
        for text in ["e", "a e", "b e e", "b (a e) e", "(\\x:o. e) (a e)", "(\\x:o. b x x) (a e)"] {
            for r in analyze(&p(text), &sig(), &Caps::default()).unwrap() {
                for (&value, _) in &r.values {
                    assert_eq!(value > 0, r.flag == Flag::Pr, "{}", text);
                }
            }
        }
    }

    #[test]
    fn summary_agrees_with_full_enumeration_on_small_terms() {
        for text in [
            "e",
            "a e",
            "b (a e) e",
            "(\\x:o. b x x) (a e)",
            "(\\x:o. e) (a e)",
            "(\\y:(o->o). y (y e)) a",
            "(\\y:(o->o).\\x:o. y (y x)) a (a e)",
        ] {
            let t = p(text);
            let trees = enumerate_derivations(&t, &sig(), &Caps::default()).unwrap();
            let roots = analyze(&t, &sig(), &Caps::default()).unwrap();
            let total: u64 = roots.iter().map(|r| r.count).sum();
            assert_eq!(trees.len() as u64, total, "{}", text);
            for tree in &trees {
                tree.check(&sig()).unwrap();
                let r = roots.iter().find(|r| r.flag == tree.flag()).unwrap();
                assert!(r.values.contains_key(&tree.value()), "{}", text);
            }
        }
    }

    // The derivation for N from the worked example, transcribed literally:
    // tau_y^pr abbreviates (pr,r)->r.
    fn tau_y(flag: Flag) -> DetType {
        DetType::arrow(vec![(flag, DetType::Atom)], DetType::Atom)
    }

    fn example_n_derivation() -> (Term, Rc<DetNode>) {
        let n = p("\\y:(o->o).\\x:o. y (y x)");
        let typ = tau_y(Flag::Pr);
        let y_axiom = Rc::new(DetNode {
            rule: DetRule::Var,
            env: TypeEnv::singleton("y", Flag::Pr, typ.clone()),
            flag: Flag::Np,
            ty: typ.clone(),
            children: vec![],
        });
        let x_axiom = Rc::new(DetNode {
            rule: DetRule::Var,
            env: TypeEnv::singleton("x", Flag::Pr, DetType::Atom),
            flag: Flag::Np,
            ty: DetType::Atom,
            children: vec![],
        });
        let y_x = Rc::new(DetNode {
            rule: DetRule::App,
            env: y_axiom.env.union(&x_axiom.env),
            flag: Flag::Np,
            ty: DetType::Atom,
            children: vec![y_axiom.clone(), x_axiom],
        });
        let y_y_x = Rc::new(DetNode {
            rule: DetRule::App,
            env: y_axiom.env.union(&y_x.env),
            flag: Flag::Pr, // the productive binding for y is duplicated here
            ty: DetType::Atom,
            children: vec![y_axiom.clone(), y_x],
        });
        let lam_x = Rc::new(DetNode {
            rule: DetRule::Lam,
            env: y_axiom.env.clone(),
            flag: Flag::Pr,
            ty: tau_y(Flag::Pr),
            children: vec![y_y_x],
        });
        let lam_y = Rc::new(DetNode {
            rule: DetRule::Lam,
            env: TypeEnv::empty(),
            flag: Flag::Pr,
            ty: DetType::arrow(vec![(Flag::Pr, tau_y(Flag::Pr))], tau_y(Flag::Pr)),
            children: vec![lam_x],
        });
        (n, lam_y)
    }

    #[test]
    fn checks_the_transcribed_example_derivation() {
        let (n, root) = example_n_derivation();
        let d = DetDerivation { term: n, root };
        d.check(&sig()).unwrap();
        assert_eq!(d.value(), 1);
        assert_eq!(d.flag(), Flag::Pr);
    }

    #[test]
    fn rejects_mutated_flag_in_example_derivation() {
        let (n, root) = example_n_derivation();
        // flip the inner application's flag from pr to np
        fn flip(node: &DetNode) -> DetNode {
            let mut out = node.clone();
            if node.rule == DetRule::App && node.flag == Flag::Pr {
                out.flag = Flag::Np;
                return out;
            }
            out.children = node.children.iter().map(|c| Rc::new(flip(c))).collect();
            out
        }
        let bad = DetDerivation {
            term: n,
            root: Rc::new(flip(&root)),
        };
        let err = bad.check(&sig()).unwrap_err();
        assert!(err.message.contains("flag"), "{}", err.message);
    }

    #[test]
    fn rejects_pr_flag_on_variable_axiom() {
        let typ = DetType::Atom;
        let node = Rc::new(DetNode {
            rule: DetRule::Var,
            env: TypeEnv::singleton("x", Flag::Pr, typ.clone()),
            flag: Flag::Pr,
            ty: typ,
            children: vec![],
        });
        let d = DetDerivation {
            term: Term::var("x", Sort::Base),
            root: node,
        };
        let err = d.check(&sig()).unwrap_err();
        assert!(err.message.contains("np"), "{}", err.message);
    }

    #[test]
    fn derive_rejects_open_or_non_ground_terms() {
        assert!(matches!(
            analyze(&p("a x:o"), &sig(), &Caps::default()),
            Err(DetError::NotClosed)
        ));
        assert!(matches!(
            analyze(&p("a"), &sig(), &Caps::default()),
            Err(DetError::NotGround { .. })
        ));
    }

    #[test]
    fn example1_family_values() {
        // j copies of N: value j + 2, normal form count 2^j + 1
        for j in 1..=4u32 {
            let m = family_example1(j);
            let (flag, value) = value_and_flag(&m, &sig(), &Caps::default()).unwrap();
            assert_eq!(flag, Flag::Pr);
            assert_eq!(value, u64::from(j) + 2);
        }
    }

    pub(crate) fn family_example1(j: u32) -> Term {
        let n = p("\\y:(o->o).\\x:o. y (y x)");
        let oo = parse_sort("o->o").unwrap();
        let mut chain = Term::var("y", oo.clone());
        for _ in 0..j {
            chain = Term::app(n.clone(), chain);
        }
        let body = Term::app(chain, p("a e"));
        Term::app(Term::lam("y", oo, body), p("a"))
    }
}
