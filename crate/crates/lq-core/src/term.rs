//! The sorted lambda-term AST: sort checking, order, complexity,
//! homogeneity, free variables, alpha equality, and printing.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::sort::{Signature, Sort};

/// A simply typed lambda term. Constants and variables carry their sorts;
/// the sort of every other subterm is determined bottom-up.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Const(String, Sort),
    Var(String, Sort),
    Lam(String, Sort, Box<Term>),
    App(Box<Term>, Box<Term>),
}

/// An application whose function side does not accept the argument's sort,
/// or is not a function at all.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SortError {
    /// Function side has base sort and cannot be applied.
    NotAFunction { fun_sort: Sort },
    /// Argument sort differs from the function's parameter sort.
    Mismatch { expected: Sort, actual: Sort },
}

impl fmt::Display for SortError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SortError::NotAFunction { fun_sort } => {
                write!(f, "cannot apply a term of sort {}", fun_sort)
            }
            SortError::Mismatch { expected, actual } => {
                write!(f, "sort mismatch: expected {}, got {}", expected, actual)
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SortError {}

impl Term {
    /// Looks the constant up in the signature.
    pub fn constant(sig: &Signature, name: &str) -> Option<Term> {
        sig.sort_of(name)
            .map(|s| Term::Const(name.to_string(), s.clone()))
    }

    pub fn var(name: &str, sort: Sort) -> Term {
        Term::Var(name.to_string(), sort)
    }

    pub fn lam(name: &str, sort: Sort, body: Term) -> Term {
        Term::Lam(name.to_string(), sort, Box::new(body))
    }

    pub fn app(fun: Term, arg: Term) -> Term {
        Term::App(Box::new(fun), Box::new(arg))
    }

    /// Left-associated application `f x1 .. xn`.
    pub fn apps(fun: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(fun, Term::app)
    }

    /// The unique sort of the term, checking applications on the way.
    pub fn sort(&self) -> Result<Sort, SortError> {
        match self {
            Term::Const(_, s) | Term::Var(_, s) => Ok(s.clone()),
            Term::Lam(_, s, body) => Ok(Sort::arrow(s.clone(), body.sort()?)),
            Term::App(fun, arg) => {
                let fs = fun.sort()?;
                let as_ = arg.sort()?;
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

    pub fn is_well_sorted(&self) -> bool {
        self.sort().is_ok()
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            Term::Const(..) | Term::Var(..) => 1,
            Term::Lam(_, _, body) => 1 + body.size(),
            Term::App(fun, arg) => 1 + fun.size() + arg.size(),
        }
    }

    /// The order of the term's sort.
    pub fn order(&self) -> Result<u32, SortError> {
        Ok(self.sort()?.order())
    }

    /// Maximum of the orders of the sorts of all subterms.
    pub fn complexity(&self) -> Result<u32, SortError> {
        let own = self.sort()?.order();
        let inner = match self {
            Term::Const(..) | Term::Var(..) => 0,
            Term::Lam(_, _, body) => body.complexity()?,
            Term::App(fun, arg) => core::cmp::max(fun.complexity()?, arg.complexity()?),
        };
        Ok(core::cmp::max(own, inner))
    }

    /// True when every subterm's sort is homogeneous.
    pub fn is_homogeneous(&self) -> Result<bool, SortError> {
        if !self.sort()?.is_homogeneous() {
            return Ok(false);
        }
        match self {
            Term::Const(..) | Term::Var(..) => Ok(true),
            Term::Lam(_, _, body) => body.is_homogeneous(),
            Term::App(fun, arg) => Ok(fun.is_homogeneous()? && arg.is_homogeneous()?),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<(String, Sort)> {
        fn go(t: &Term, bound: &mut Vec<String>, out: &mut BTreeSet<(String, Sort)>) {
            match t {
                Term::Const(..) => {}
                Term::Var(x, s) => {
                    if !bound.iter().any(|b| b == x) {
                        out.insert((x.clone(), s.clone()));
                    }
                }
                Term::Lam(x, _, body) => {
                    bound.push(x.clone());
                    go(body, bound, out);
                    bound.pop();
                }
                Term::App(fun, arg) => {
                    go(fun, bound, out);
                    go(arg, bound, out);
                }
            }
        }
        let mut out = BTreeSet::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Canonical nameless form; two terms are alpha-equal iff their
    /// canonical forms are equal.
    pub fn canon(&self) -> CanonTerm {
        fn go(t: &Term, bound: &mut Vec<String>) -> CanonTerm {
            match t {
                Term::Const(c, s) => CanonTerm::Const(c.clone(), s.clone()),
                Term::Var(x, s) => {
                    match bound.iter().rev().position(|b| b == x) {
                        Some(i) => CanonTerm::Bound(i),
                        None => CanonTerm::Free(x.clone(), s.clone()),
                    }
                }
                Term::Lam(x, s, body) => {
                    bound.push(x.clone());
                    let b = go(body, bound);
                    bound.pop();
                    CanonTerm::Lam(s.clone(), Box::new(b))
                }
                Term::App(fun, arg) => {
                    CanonTerm::App(Box::new(go(fun, bound)), Box::new(go(arg, bound)))
                }
            }
        }
        go(self, &mut Vec::new())
    }

    pub fn alpha_eq(&self, other: &Term) -> bool {
        self.canon() == other.canon()
    }
}

/// De Bruijn rendering of a term. Bound variables become indices, free
/// variables keep their names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CanonTerm {
    Const(String, Sort),
    Free(String, Sort),
    Bound(usize),
    Lam(Sort, Box<CanonTerm>),
    App(Box<CanonTerm>, Box<CanonTerm>),
}

// Printing. Application is left-associative; lambda bodies extend as far
// right as possible. Free variables are annotated with their sort at the
// first (leftmost) occurrence so that printed terms parse back.
impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut printed_free: BTreeSet<String> = BTreeSet::new();
        fmt_term(self, f, 0, &mut Vec::new(), &mut printed_free)
    }
}

fn fmt_sort_annot(f: &mut fmt::Formatter<'_>, sort: &Sort) -> fmt::Result {
    if matches!(sort, Sort::Arrow(..)) {
        write!(f, "({})", sort)
    } else {
        write!(f, "{}", sort)
    }
}

/// prec 0: anywhere; prec 1: function position; prec 2: argument position.
fn fmt_term(
    t: &Term,
    f: &mut fmt::Formatter<'_>,
    prec: u8,
    bound: &mut Vec<String>,
    printed_free: &mut BTreeSet<String>,
) -> fmt::Result {
    match t {
        Term::Const(c, _) => write!(f, "{}", c),
        Term::Var(x, s) => {
            let is_bound = bound.iter().any(|b| b == x);
            if !is_bound && !printed_free.contains(x) {
                printed_free.insert(x.clone());
                write!(f, "{}:", x)?;
                fmt_sort_annot(f, s)
            } else {
                write!(f, "{}", x)
            }
        }
        Term::Lam(x, s, body) => {
            let parens = prec > 0;
            if parens {
                write!(f, "(")?;
            }
            write!(f, "\\{}:", x)?;
            fmt_sort_annot(f, s)?;
            write!(f, ". ")?;
            bound.push(x.clone());
            fmt_term(body, f, 0, bound, printed_free)?;
            bound.pop();
            if parens {
                write!(f, ")")?;
            }
            Ok(())
        }
        Term::App(fun, arg) => {
            let parens = prec > 1;
            if parens {
                write!(f, "(")?;
            }
            fmt_term(fun, f, 1, bound, printed_free)?;
            write!(f, " ")?;
            fmt_term(arg, f, 2, bound, printed_free)?;
            if parens {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_term;
    use alloc::format;

    fn sig() -> Signature {
        Signature::standard()
    }

    fn p(text: &str) -> Term {
        parse_term(text, &sig()).unwrap()
    }

    pub(crate) const EXAMPLE1: &str = "(\\y:(o->o). (\\y:(o->o).\\x:o. y (y x)) ((\\y:(o->o).\\x:o. y (y x)) ((\\y:(o->o).\\x:o. y (y x)) y)) (a e)) a";

    #[test]
    fn sort_of_constants_and_identity() {
        assert_eq!(p("a").sort().unwrap(), parse_term("a", &sig()).unwrap().sort().unwrap());
        assert_eq!(format!("{}", p("a").sort().unwrap()), "o->o");
        assert_eq!(format!("{}", p("\\x:o. x").sort().unwrap()), "o->o");
        assert_eq!(format!("{}", p("e").sort().unwrap()), "o");
    }

    #[test]
    fn example1_is_closed_ground_homogeneous_of_complexity_2() {
        let m = p(EXAMPLE1);
        assert_eq!(m.sort().unwrap(), Sort::Base);
        assert_eq!(m.complexity().unwrap(), 2);
        assert!(m.is_homogeneous().unwrap());
        assert!(m.is_closed());
    }

    #[test]
    fn sort_mismatch_in_application() {
        let t = Term::app(p("a"), p("a"));
        assert!(matches!(t.sort(), Err(SortError::Mismatch { .. })));
        let t = Term::app(p("e"), p("e"));
        assert!(matches!(t.sort(), Err(SortError::NotAFunction { .. })));
    }

    #[test]
    fn complexity_examples() {
        assert_eq!(p("e").complexity().unwrap(), 0);
        assert_eq!(p("a e").complexity().unwrap(), 1);
        // complexity is at least the order of the term's own sort
        let n = p("\\y:(o->o).\\x:o. y (y x)");
        assert_eq!(n.order().unwrap(), 2);
        assert_eq!(n.complexity().unwrap(), 2);
    }

    #[test]
    fn homogeneity_examples() {
        assert!(p("e").is_homogeneous().unwrap());
        // a variable of sort o->(o->o)->o is not homogeneous
        let t = Term::var("f", crate::parse::parse_sort("o->(o->o)->o").unwrap());
        assert!(!t.is_homogeneous().unwrap());
        assert!(p(EXAMPLE1).is_homogeneous().unwrap());
    }

    #[test]
    fn free_vars_examples() {
        assert!(p("\\x:o. x").free_vars().is_empty());
        let t = p("y:(o->o) x:o");
        let fv = t.free_vars();
        assert_eq!(fv.len(), 2);
        assert!(fv.contains(&("x".into(), Sort::Base)));
        assert!(fv.contains(&("y".into(), crate::parse::parse_sort("o->o").unwrap())));
        assert!(p(EXAMPLE1).free_vars().is_empty());
    }

    #[test]
    fn alpha_equality_ignores_binder_names() {
        let t1 = p("\\x:o. x");
        let t2 = p("\\z:o. z");
        assert!(t1.alpha_eq(&t2));
        assert_ne!(t1, t2);
        // shadowing resolves to the nearest binder
        let t3 = p("\\x:o. \\x:o. x");
        let t4 = p("\\x:o. \\y:o. y");
        let t5 = p("\\x:o. \\y:o. x");
        assert!(t3.alpha_eq(&t4));
        assert!(!t3.alpha_eq(&t5));
    }

    #[test]
    fn print_parse_round_trip_on_example1() {
        let m = p(EXAMPLE1);
        let reparsed = p(&format!("{}", m));
        assert!(m.alpha_eq(&reparsed));
        assert_eq!(m, reparsed);
    }

    #[test]
    fn print_annotates_free_vars_once() {
        let t = p("b (y:o) y");
        let text = format!("{}", t);
        assert_eq!(text, "b y:o y");
        assert_eq!(p(&text), t);
    }

    #[test]
    fn print_simple_terms() {
        assert_eq!(format!("{}", p("e")), "e");
        assert_eq!(format!("{}", p("\\x:o. x")), "\\x:o. x");
        assert_eq!(format!("{}", p("a (a e)")), "a (a e)");
        assert_eq!(format!("{}", p("b e e")), "b e e");
        assert_eq!(format!("{}", p("(\\f:(o->o). f e) a")), "(\\f:(o->o). f e) a");
    }
}
