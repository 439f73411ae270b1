//! Sorts (simple types over the base sort `o`) and signatures of tree
//! constructors.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

/// A simple sort: the base sort `o`, or an arrow between sorts.
///
/// Every sort decomposes uniquely as `a1 -> ... -> ak -> o` with `k >= 0`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Base,
    Arrow(Box<Sort>, Box<Sort>),
}

impl Sort {
    pub fn arrow(arg: Sort, res: Sort) -> Sort {
        Sort::Arrow(Box::new(arg), Box::new(res))
    }

    /// Builds `args[0] -> ... -> args[k-1] -> o`.
    pub fn from_args(args: &[Sort]) -> Sort {
        args.iter()
            .rev()
            .fold(Sort::Base, |acc, a| Sort::arrow(a.clone(), acc))
    }

    /// `ord(o) = 0`, `ord(a -> b) = max(1 + ord(a), ord(b))`.
    pub fn order(&self) -> u32 {
        match self {
            Sort::Base => 0,
            Sort::Arrow(a, b) => core::cmp::max(1 + a.order(), b.order()),
        }
    }

    /// The argument sorts `a1 .. ak` of `a1 -> ... -> ak -> o`.
    pub fn args(&self) -> Vec<&Sort> {
        let mut out = Vec::new();
        let mut cur = self;
        while let Sort::Arrow(a, b) = cur {
            out.push(a.as_ref());
            cur = b.as_ref();
        }
        out
    }

    /// Number of arguments in the unique decomposition.
    pub fn arity(&self) -> usize {
        self.args().len()
    }

    /// A sort `a1 -> ... -> ak -> o` is homogeneous when
    /// `ord(a1) >= ... >= ord(ak)` and every `ai` is homogeneous.
    pub fn is_homogeneous(&self) -> bool {
        let args = self.args();
        for w in args.windows(2) {
            if w[0].order() < w[1].order() {
                return false;
            }
        }
        args.iter().all(|a| a.is_homogeneous())
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Base => write!(f, "o"),
            Sort::Arrow(a, b) => {
                if matches!(a.as_ref(), Sort::Arrow(..)) {
                    write!(f, "({})->{}", a, b)
                } else {
                    write!(f, "{}->{}", a, b)
                }
            }
        }
    }
}

/// A signature error: a constant whose sort has order above 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureError {
    pub constant: String,
    pub sort: Sort,
}

impl fmt::Display for SignatureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "constant {} has sort {} of order {} (at most 1 allowed)",
            self.constant,
            self.sort,
            self.sort.order()
        )
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SignatureError {}

/// A set of constants with sorts of order at most 1, together with the name
/// of the counted constant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature {
    entries: BTreeMap<String, Sort>,
    counted: String,
}

impl Signature {
    /// The standard signature: `a : o->o`, `b : o->o->o`, `e : o`,
    /// counting `a`.
    pub fn standard() -> Signature {
        Signature::new(
            [
                ("a", Sort::arrow(Sort::Base, Sort::Base)),
                ("b", Sort::arrow(Sort::Base, Sort::arrow(Sort::Base, Sort::Base))),
                ("e", Sort::Base),
            ],
            "a",
        )
        .expect("standard signature is valid")
    }

    /// The branching variant used by the embedding metric: `a` is binary.
    pub fn branching() -> Signature {
        Signature::new(
            [
                ("a", Sort::arrow(Sort::Base, Sort::arrow(Sort::Base, Sort::Base))),
                ("b", Sort::arrow(Sort::Base, Sort::arrow(Sort::Base, Sort::Base))),
                ("e", Sort::Base),
            ],
            "a",
        )
        .expect("branching signature is valid")
    }

    pub fn new<'a>(
        entries: impl IntoIterator<Item = (&'a str, Sort)>,
        counted: &str,
    ) -> Result<Signature, SignatureError> {
        let mut map = BTreeMap::new();
        for (name, sort) in entries {
            if sort.order() > 1 {
                return Err(SignatureError {
                    constant: name.to_string(),
                    sort,
                });
            }
            map.insert(name.to_string(), sort);
        }
        Ok(Signature {
            entries: map,
            counted: counted.to_string(),
        })
    }

    pub fn sort_of(&self, name: &str) -> Option<&Sort> {
        self.entries.get(name)
    }

    pub fn is_constant(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    /// Name of the constant whose occurrences the analyses count.
    pub fn counted(&self) -> &str {
        &self.counted
    }

    pub fn arity_of(&self, name: &str) -> Option<usize> {
        self.sort_of(name).map(|s| s.arity())
    }

    pub fn constants(&self) -> impl Iterator<Item = (&str, &Sort)> {
        self.entries.iter().map(|(n, s)| (n.as_str(), s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(text: &str) -> Sort {
        crate::parse::parse_sort(text).unwrap()
    }

    #[test]
    fn order_of_base_is_zero() {
        assert_eq!(Sort::Base.order(), 0);
    }

    #[test]
    fn order_of_simple_arrows() {
        assert_eq!(s("o->o").order(), 1);
        assert_eq!(s("o->o->o").order(), 1);
        assert_eq!(s("(o->o)->o->o").order(), 2);
        assert_eq!(s("((o->o)->o)->o").order(), 3);
    }

    #[test]
    fn arrow_order_exceeds_argument_order() {
        // ord(a -> b) > ord(a) always; and ord(a -> b) >= 1.
        let cases = ["o->o", "(o->o)->o", "o->(o->o)->o", "((o->o)->o)->o->o"];
        for c in cases {
            let sort = s(c);
            if let Sort::Arrow(a, b) = &sort {
                assert!(sort.order() >= 1);
                assert!(sort.order() > a.order());
                assert!(sort.order() >= b.order());
            }
        }
    }

    #[test]
    fn homogeneity() {
        assert!(s("o").is_homogeneous());
        assert!(s("o->o").is_homogeneous());
        assert!(s("(o->o)->o->o").is_homogeneous());
        // argument orders 0 < 1 violate the non-increasing condition
        assert!(!s("o->(o->o)->o").is_homogeneous());
        // non-homogeneous argument poisons the whole sort
        assert!(!s("(o->(o->o)->o)->o").is_homogeneous());
    }

    #[test]
    fn args_and_arity() {
        let sort = s("(o->o)->o->o");
        assert_eq!(sort.arity(), 2);
        assert_eq!(sort.args()[0], &s("o->o"));
        assert_eq!(sort.args()[1], &Sort::Base);
    }

    #[test]
    fn display_round_trips() {
        for text in ["o", "o->o", "(o->o)->o", "o->o->o", "((o->o)->o)->o->o"] {
            let sort = s(text);
            assert_eq!(s(&alloc::format!("{}", sort)), sort);
        }
    }

    #[test]
    fn signature_rejects_high_order_constants() {
        let err = Signature::new([("f", s("(o->o)->o"))], "f").unwrap_err();
        assert_eq!(err.constant, "f");
    }

    #[test]
    fn standard_signature_contents() {
        let sig = Signature::standard();
        assert_eq!(sig.sort_of("a"), Some(&s("o->o")));
        assert_eq!(sig.sort_of("b"), Some(&s("o->o->o")));
        assert_eq!(sig.sort_of("e"), Some(&Sort::Base));
        assert_eq!(sig.counted(), "a");
        assert_eq!(sig.arity_of("b"), Some(2));
    }

    #[test]
    fn branching_signature_has_binary_a() {
        let sig = Signature::branching();
        assert_eq!(sig.arity_of("a"), Some(2));
    }
}
