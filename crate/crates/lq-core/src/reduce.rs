//! Capture-avoiding substitution, beta reduction, and the OI and RMF
//! reduction strategies.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::sort::Sort;
use crate::term::{SortError, Term};
use crate::Caps;

/// One step of the path from the root of a term to a subterm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Selector {
    /// function side of an application
    Fun,
    /// argument side of an application
    Arg,
    /// body of a lambda
    Body,
}

/// A path addressing a subterm; empty is the root.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path(pub Vec<Selector>);

impl Path {
    pub fn root() -> Path {
        Path(Vec::new())
    }

    pub fn child(&self, s: Selector) -> Path {
        let mut v = self.0.clone();
        v.push(s);
        Path(v)
    }

    pub fn starts_with(&self, prefix: &Path) -> bool {
        self.0.len() >= prefix.0.len() && self.0[..prefix.0.len()] == prefix.0[..]
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "/");
        }
        for s in &self.0 {
            match s {
                Selector::Fun => write!(f, "/f")?,
                Selector::Arg => write!(f, "/a")?,
                Selector::Body => write!(f, "/b")?,
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReduceError {
    /// The path does not address a subterm of the expected shape.
    BadPath { path: Path },
    /// The addressed subterm is not a redex.
    NotARedex { path: Path },
    /// Substitution with mismatched sorts.
    SortMismatch { expected: Sort, actual: Sort },
    /// The term is not well-sorted.
    IllSorted(SortError),
    /// Step budget exhausted during normalization.
    BudgetExhausted { budget: u64 },
    /// RMF requires a homogeneous term.
    NotHomogeneous,
    /// An internal consistency check failed (reported, never ignored).
    InvariantViolation(String),
}

impl fmt::Display for ReduceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReduceError::BadPath { path } => write!(f, "path {} does not address a subterm", path),
            ReduceError::NotARedex { path } => write!(f, "subterm at {} is not a redex", path),
            ReduceError::SortMismatch { expected, actual } => {
                write!(f, "substitution sort mismatch: expected {}, got {}", expected, actual)
            }
            ReduceError::IllSorted(e) => write!(f, "ill-sorted term: {}", e),
            ReduceError::BudgetExhausted { budget } => {
                write!(f, "normalization exceeded the step budget of {}", budget)
            }
            ReduceError::NotHomogeneous => write!(f, "RMF strategy requires a homogeneous term"),
            ReduceError::InvariantViolation(m) => write!(f, "invariant violation: {}", m),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ReduceError {}

impl From<SortError> for ReduceError {
    fn from(e: SortError) -> Self {
        ReduceError::IllSorted(e)
    }
}

pub fn subterm_at<'a>(t: &'a Term, path: &Path) -> Option<&'a Term> {
    let mut cur = t;
    for s in &path.0 {
        cur = match (s, cur) {
            (Selector::Fun, Term::App(f, _)) => f.as_ref(),
            (Selector::Arg, Term::App(_, a)) => a.as_ref(),
            (Selector::Body, Term::Lam(_, _, b)) => b.as_ref(),
            _ => return None,
        };
    }
    Some(cur)
}

fn replace_at(t: &Term, path: &[Selector], with: impl FnOnce(&Term) -> Result<Term, ReduceError>) -> Result<Term, ReduceError> {
    match path.split_first() {
        None => with(t),
        Some((sel, rest)) => match (sel, t) {
            (Selector::Fun, Term::App(f, a)) => Ok(Term::App(
                Box::new(replace_at(f, rest, with)?),
                a.clone(),
            )),
            (Selector::Arg, Term::App(f, a)) => Ok(Term::App(
                f.clone(),
                Box::new(replace_at(a, rest, with)?),
            )),
            (Selector::Body, Term::Lam(x, s, b)) => Ok(Term::Lam(
                x.clone(),
                s.clone(),
                Box::new(replace_at(b, rest, with)?),
            )),
            _ => Err(ReduceError::BadPath {
                path: Path(path.to_vec()),
            }),
        },
    }
}

/// A name not occurring in `avoid`, derived from `base`.
fn fresh_name(base: &str, avoid: &dyn Fn(&str) -> bool) -> String {
    if !avoid(base) {
        return base.to_string();
    }
    let stem: String = base.trim_end_matches(|c: char| c.is_ascii_digit()).to_string();
    let stem = if stem.is_empty() { "x".to_string() } else { stem };
    let mut i = 1u64;
    loop {
        let cand = alloc::format!("{}{}", stem, i);
        if !avoid(&cand) {
            return cand;
        }
        i += 1;
    }
}

/// Capture-avoiding substitution of `value` for the free variable `var` in
/// `body`. `var_sort` must equal the sort of `value`.
pub fn substitute(body: &Term, var: &str, var_sort: &Sort, value: &Term) -> Result<Term, ReduceError> {
    let vs = value.sort()?;
    if vs != *var_sort {
        return Err(ReduceError::SortMismatch {
            expected: var_sort.clone(),
            actual: vs,
        });
    }
    Ok(subst(body, var, value))
}

fn subst(body: &Term, var: &str, value: &Term) -> Term {
    match body {
        Term::Const(..) => body.clone(),
        Term::Var(x, _) => {
            if x == var {
                value.clone()
            } else {
                body.clone()
            }
        }
        Term::App(f, a) => Term::app(subst(f, var, value), subst(a, var, value)),
        Term::Lam(x, s, b) => {
            if x == var {
                return body.clone();
            }
            let body_free = b.free_vars();
            if !body_free.iter().any(|(n, _)| n == var) {
                // var does not occur; nothing to do below this binder
                return body.clone();
            }
            let value_free = value.free_vars();
            if value_free.iter().any(|(n, _)| n == x) {
                // the binder would capture a free variable of value; rename it
                let avoid = |n: &str| {
                    n == var
                        || value_free.iter().any(|(m, _)| m == n)
                        || body_free.iter().any(|(m, _)| m == n)
                };
                let x2 = fresh_name(x, &avoid);
                let renamed = subst(b, x, &Term::var(&x2, s.clone()));
                Term::lam(&x2, s.clone(), subst(&renamed, var, value))
            } else {
                Term::lam(x, s.clone(), subst(b, var, value))
            }
        }
    }
}

/// All redexes not located inside another redex, in left-to-right order.
pub fn outermost_redexes(t: &Term) -> Vec<Path> {
    fn go(t: &Term, path: &mut Vec<Selector>, out: &mut Vec<Path>) {
        match t {
            Term::App(f, _) if matches!(f.as_ref(), Term::Lam(..)) => {
                out.push(Path(path.clone()));
            }
            Term::App(f, a) => {
                path.push(Selector::Fun);
                go(f, path, out);
                path.pop();
                path.push(Selector::Arg);
                go(a, path, out);
                path.pop();
            }
            Term::Lam(_, _, b) => {
                path.push(Selector::Body);
                go(b, path, out);
                path.pop();
            }
            Term::Const(..) | Term::Var(..) => {}
        }
    }
    let mut out = Vec::new();
    go(t, &mut Vec::new(), &mut out);
    out
}

/// All redexes with the order of their lambda, in preorder.
pub fn redexes_with_orders(t: &Term) -> Result<Vec<(Path, u32)>, SortError> {
    fn go(t: &Term, path: &mut Vec<Selector>, out: &mut Vec<(Path, u32)>) -> Result<Sort, SortError> {
        match t {
            Term::Const(_, s) | Term::Var(_, s) => Ok(s.clone()),
            Term::Lam(_, s, b) => {
                path.push(Selector::Body);
                let bs = go(b, path, out)?;
                path.pop();
                Ok(Sort::arrow(s.clone(), bs))
            }
            Term::App(f, a) => {
                let here = path.clone();
                path.push(Selector::Fun);
                let fs = go(f, path, out)?;
                path.pop();
                path.push(Selector::Arg);
                let as_ = go(a, path, out)?;
                path.pop();
                if matches!(f.as_ref(), Term::Lam(..)) {
                    out.push((Path(here), fs.order()));
                }
                match fs {
                    Sort::Arrow(p, r) => {
                        if *p == as_ {
                            Ok(*r)
                        } else {
                            Err(SortError::Mismatch {
                                expected: *p,
                                actual: as_,
                            })
                        }
                    }
                    Sort::Base => Err(SortError::NotAFunction { fun_sort: fs }),
                }
            }
        }
    }
    let mut out = Vec::new();
    go(t, &mut Vec::new(), &mut out)?;
    Ok(out)
}

/// The redex reduced next under the RMF strategy, if any: a redex of
/// maximal order `m` whose argument contains no order-`m` redex and which
/// is not inside the body of another order-`m` redex; rightmost such.
///
/// The term should be homogeneous; the choice is deterministic.
pub fn rmf_redex(t: &Term) -> Result<Option<Path>, SortError> {
    let all = redexes_with_orders(t)?;
    let Some(&(_, max_order)) = all.iter().max_by_key(|(_, o)| *o) else {
        return Ok(None);
    };
    let top: Vec<&Path> = all
        .iter()
        .filter(|(_, o)| *o == max_order)
        .map(|(p, _)| p)
        .collect();
    let mut candidates: Vec<&Path> = Vec::new();
    'cand: for p in &top {
        // the argument must contain no redex of order max_order
        let arg_prefix = p.child(Selector::Arg);
        for q in &top {
            if q.starts_with(&arg_prefix) {
                continue 'cand;
            }
        }
        // the redex must not sit inside the body K' of another top redex
        for q in &top {
            if q.0.len() < p.0.len() {
                let body_prefix = q.child(Selector::Fun).child(Selector::Body);
                if p.starts_with(&body_prefix) {
                    continue 'cand;
                }
            }
        }
        candidates.push(p);
    }
    // rightmost: lexicographically greatest path with Arg ranked above Fun
    fn rank(s: Selector) -> u8 {
        match s {
            Selector::Fun => 0,
            Selector::Body => 1,
            Selector::Arg => 2,
        }
    }
    let best = candidates.into_iter().max_by(|a, b| {
        let ka: Vec<u8> = a.0.iter().map(|s| rank(*s)).collect();
        let kb: Vec<u8> = b.0.iter().map(|s| rank(*s)).collect();
        ka.cmp(&kb)
    });
    Ok(best.cloned())
}

/// Performs a single beta step at `path`, which must address a redex.
pub fn step(t: &Term, path: &Path) -> Result<Term, ReduceError> {
    replace_at(t, &path.0, |sub| match sub {
        Term::App(f, a) => match f.as_ref() {
            Term::Lam(x, s, body) => substitute(body, x, s, a),
            _ => Err(ReduceError::NotARedex { path: path.clone() }),
        },
        _ => Err(ReduceError::NotARedex { path: path.clone() }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Always reduce the leftmost outermost redex.
    Oi,
    /// Always reduce the rightmost redex of the maximal order whose argument
    /// is free of redexes of that order.
    Rmf,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Oi => write!(f, "oi"),
            Strategy::Rmf => write!(f, "rmf"),
        }
    }
}

/// One line of a normalization trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub index: u64,
    pub order: u32,
    pub path: Path,
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.index, self.order, self.path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub term: Term,
    pub steps: u64,
    pub trace: Option<Vec<TraceStep>>,
}

/// Reduces to beta-normal form under the given strategy.
///
/// For RMF the input must be homogeneous. While the term is closed and the
/// selected redex has the term's complexity `m`, the free variables of the
/// redex argument are checked to have order at most `m - 2`.
pub fn normalize(t: &Term, strategy: Strategy, caps: &Caps, want_trace: bool) -> Result<Normalized, ReduceError> {
    t.sort()?;
    if strategy == Strategy::Rmf && !t.is_homogeneous()? {
        return Err(ReduceError::NotHomogeneous);
    }
    let mut cur = t.clone();
    let mut steps: u64 = 0;
    let mut trace = if want_trace { Some(Vec::new()) } else { None };
    loop {
        let redex = match strategy {
            Strategy::Oi => outermost_redexes(&cur).into_iter().next(),
            Strategy::Rmf => rmf_redex(&cur)?,
        };
        let Some(path) = redex else {
            return Ok(Normalized {
                term: cur,
                steps,
                trace,
            });
        };
        if steps >= caps.step_budget {
            return Err(ReduceError::BudgetExhausted {
                budget: caps.step_budget,
            });
        }
        let sub = subterm_at(&cur, &path).ok_or(ReduceError::BadPath { path: path.clone() })?;
        let order = match sub {
            Term::App(f, _) => f.sort()?.order(),
            _ => return Err(ReduceError::NotARedex { path: path.clone() }),
        };
        if strategy == Strategy::Rmf && cur.is_closed() {
            let m = cur.complexity()?;
            if order == m {
                if let Term::App(_, arg) = sub {
                    for (name, s) in arg.free_vars() {
                        if s.order() + 2 > m {
                            return Err(ReduceError::InvariantViolation(alloc::format!(
                                "RMF({}) redex argument has free variable {} of order {}",
                                m,
                                name,
                                s.order()
                            )));
                        }
                    }
                }
            }
        }
        cur = step(&cur, &path)?;
        steps += 1;
        if let Some(tr) = trace.as_mut() {
            tr.push(TraceStep {
                index: steps,
                order,
                path,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_sort, parse_term};
    use crate::sort::Signature;
    use alloc::format;
    use alloc::vec;

    fn sig() -> Signature {
        Signature::standard()
    }

    fn p(text: &str) -> Term {
        parse_term(text, &sig()).unwrap()
    }

    const EXAMPLE1: &str = "(\\y:(o->o). (\\y:(o->o).\\x:o. y (y x)) ((\\y:(o->o).\\x:o. y (y x)) ((\\y:(o->o).\\x:o. y (y x)) y)) (a e)) a";

    #[test]
    fn substitute_variable() {
        let body = Term::var("x", Sort::Base);
        let out = substitute(&body, "x", &Sort::Base, &p("e")).unwrap();
        assert_eq!(out, p("e"));
    }

    #[test]
    fn substitute_avoids_capture() {
        // substituting y' (free) for x under \y must rename the binder
        let body = p("\\y:o. x:o");
        let value = Term::var("y", Sort::Base);
        let out = substitute(&body, "x", &Sort::Base, &value).unwrap();
        assert!(out.alpha_eq(&p("\\z:o. y:o")));
        // the result must not capture: \y. y would be wrong
        assert!(!out.alpha_eq(&p("\\y:o. y")));
    }

    #[test]
    fn substitute_duplicates() {
        let body = p("y:(o->o) (y x:o)");
        let out = substitute(&body, "y", &parse_sort("o->o").unwrap(), &p("a")).unwrap();
        assert_eq!(out, p("a (a x:o)"));
    }

    #[test]
    fn substitute_rejects_sort_mismatch() {
        let body = Term::var("x", Sort::Base);
        let err = substitute(&body, "x", &Sort::Base, &p("a")).unwrap_err();
        assert!(matches!(err, ReduceError::SortMismatch { .. }));
    }

    #[test]
    fn outermost_redexes_examples() {
        assert!(outermost_redexes(&p("e")).is_empty());
        assert_eq!(outermost_redexes(&p("(\\x:o. x) e")), vec![Path::root()]);
        // two sibling redexes under b: neither is nested
        let t = p("b ((\\x:o. x) e) ((\\x:o. x) e)");
        let rs = outermost_redexes(&t);
        assert_eq!(rs.len(), 2);
        assert_eq!(format!("{}", rs[0]), "/f/a");
        assert_eq!(format!("{}", rs[1]), "/a");
        // a redex inside another redex is not outermost
        let t = p("(\\x:o. x) ((\\y:o. y) e)");
        assert_eq!(outermost_redexes(&t), vec![Path::root()]);
    }

    #[test]
    fn rmf_prefers_redex_free_arguments() {
        assert_eq!(rmf_redex(&p("e")).unwrap(), None);
        // same order: the inner redex in the argument must go first
        let t = p("(\\x:o. x) ((\\y:o. y) e)");
        let r = rmf_redex(&t).unwrap().unwrap();
        assert_eq!(format!("{}", r), "/a");
    }

    #[test]
    fn rmf_on_example1_reduces_the_root_first() {
        // all order-2 redexes except the root either have an order-2 redex
        // in the argument or sit inside the root's body
        let m = p(EXAMPLE1);
        let r = rmf_redex(&m).unwrap().unwrap();
        assert_eq!(r, Path::root());
        let m1 = step(&m, &r).unwrap();
        // the bound y was substituted by a
        let expected = "(\\y:(o->o).\\x:o. y (y x)) ((\\y:(o->o).\\x:o. y (y x)) ((\\y:(o->o).\\x:o. y (y x)) a)) (a e)";
        assert!(m1.alpha_eq(&p(expected)));
    }

    #[test]
    fn step_examples() {
        assert_eq!(step(&p("(\\x:o. x) e"), &Path::root()).unwrap(), p("e"));
        assert_eq!(
            step(&p("(\\x:o. b x x) (a e)"), &Path::root()).unwrap(),
            p("b (a e) (a e)")
        );
        assert!(matches!(
            step(&p("a e"), &Path::root()),
            Err(ReduceError::NotARedex { .. })
        ));
    }

    #[test]
    fn step_preserves_sorts() {
        let t = p("(\\x:o. b x x) (a e)");
        let before = t.sort().unwrap();
        let after = step(&t, &Path::root()).unwrap().sort().unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn normalize_examples() {
        let caps = Caps::default();
        let n = normalize(&p("e"), Strategy::Oi, &caps, false).unwrap();
        assert_eq!((n.term, n.steps), (p("e"), 0));
        let n = normalize(&p("(\\x:o. x) e"), Strategy::Rmf, &caps, false).unwrap();
        assert_eq!((n.term, n.steps), (p("e"), 1));
    }

    #[test]
    fn normalize_example1_yields_nine_a_nodes() {
        let caps = Caps::default();
        let m = p(EXAMPLE1);
        let oi = normalize(&m, Strategy::Oi, &caps, false).unwrap();
        let rmf = normalize(&m, Strategy::Rmf, &caps, true).unwrap();
        assert!(oi.term.alpha_eq(&rmf.term));
        let tree = crate::tree::to_tree(&rmf.term, &sig()).unwrap();
        assert_eq!(crate::metrics::count_a(&tree, "a"), 9);
        // RMF trace orders are non-increasing
        let orders: Vec<u32> = rmf.trace.unwrap().iter().map(|s| s.order).collect();
        assert!(orders.windows(2).all(|w| w[0] >= w[1]), "{:?}", orders);
    }

    #[test]
    fn normalize_respects_budget() {
        let caps = Caps {
            step_budget: 2,
            ..Caps::default()
        };
        let m = p(EXAMPLE1);
        assert!(matches!(
            normalize(&m, Strategy::Oi, &caps, false),
            Err(ReduceError::BudgetExhausted { budget: 2 })
        ));
    }

    #[test]
    fn rmf_rejects_non_homogeneous_terms() {
        // f : o -> (o->o) -> o gives a non-homogeneous sort
        let t = p("\\f:(o->(o->o)->o). f e");
        assert!(matches!(
            normalize(&t, Strategy::Rmf, &Caps::default(), false),
            Err(ReduceError::NotHomogeneous)
        ));
    }

    #[test]
    fn trace_line_format() {
        let ts = TraceStep {
            index: 3,
            order: 2,
            path: Path(vec![Selector::Fun, Selector::Body, Selector::Arg]),
        };
        assert_eq!(format!("{}", ts), "3 2 /f/b/a");
        assert_eq!(format!("{}", Path::root()), "/");
    }
}
