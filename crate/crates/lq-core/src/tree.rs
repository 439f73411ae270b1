//! Ranked trees over the signature: the normal forms of closed ground terms.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::sort::Signature;
use crate::term::Term;

/// A tree node labeled by a constant, with one child per argument of the
/// constant's sort.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tree {
    pub label: String,
    pub children: Vec<Tree>,
}

impl Tree {
    pub fn leaf(label: &str) -> Tree {
        Tree {
            label: label.to_string(),
            children: Vec::new(),
        }
    }

    pub fn node(label: &str, children: Vec<Tree>) -> Tree {
        Tree {
            label: label.to_string(),
            children,
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Tree::size).sum::<usize>()
    }

    /// Checks arities against the signature.
    pub fn validate(&self, sig: &Signature) -> Result<(), TreeError> {
        match sig.arity_of(&self.label) {
            None => Err(TreeError::UnknownConstant {
                name: self.label.clone(),
            }),
            Some(k) if k != self.children.len() => Err(TreeError::ArityMismatch {
                name: self.label.clone(),
                expected: k,
                actual: self.children.len(),
            }),
            Some(_) => self.children.iter().try_for_each(|c| c.validate(sig)),
        }
    }
}

impl fmt::Display for Tree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label)?;
        if !self.children.is_empty() {
            write!(f, "(")?;
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", c)?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeError {
    /// The term contains a lambda or a variable, so it is not a tree.
    NotGround { what: &'static str },
    /// Head of an application spine is not a constant.
    NotApplicative,
    UnknownConstant { name: String },
    ArityMismatch { name: String, expected: usize, actual: usize },
    Syntax { pos: usize, message: String },
}

impl fmt::Display for TreeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeError::NotGround { what } => write!(f, "term contains a {}", what),
            TreeError::NotApplicative => write!(f, "application head is not a constant"),
            TreeError::UnknownConstant { name } => write!(f, "unknown constant {}", name),
            TreeError::ArityMismatch {
                name,
                expected,
                actual,
            } => write!(f, "constant {} expects {} children, got {}", name, expected, actual),
            TreeError::Syntax { pos, message } => write!(f, "at byte {}: {}", pos, message),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TreeError {}

/// Converts a closed beta-normal term of sort `o` to its tree.
pub fn to_tree(t: &Term, sig: &Signature) -> Result<Tree, TreeError> {
    // peel the application spine
    let mut args: Vec<&Term> = Vec::new();
    let mut head = t;
    while let Term::App(f, a) = head {
        args.push(a.as_ref());
        head = f.as_ref();
    }
    args.reverse();
    match head {
        Term::Const(name, _) => {
            let children = args
                .into_iter()
                .map(|a| to_tree(a, sig))
                .collect::<Result<Vec<_>, _>>()?;
            let tree = Tree {
                label: name.clone(),
                children,
            };
            // arity check; a well-sorted ground normal form always passes
            match sig.arity_of(name) {
                Some(k) if k == tree.children.len() => Ok(tree),
                Some(_) | None => {
                    tree.validate(sig)?;
                    Ok(tree)
                }
            }
        }
        Term::Lam(..) => Err(TreeError::NotGround { what: "lambda" }),
        Term::Var(..) => Err(TreeError::NotGround { what: "variable" }),
        Term::App(..) => unreachable!("spine was peeled"),
    }
}

/// Parses the parenthesized prefix form, e.g. `b(a(e),a(a(e)))`.
pub fn parse_tree(src: &str, sig: &Signature) -> Result<Tree, TreeError> {
    struct P<'a> {
        bytes: &'a [u8],
        pos: usize,
    }
    impl<'a> P<'a> {
        fn skip_ws(&mut self) {
            while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
        }
        fn tree(&mut self) -> Result<Tree, TreeError> {
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.bytes.len()
                && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
            {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(TreeError::Syntax {
                    pos: self.pos,
                    message: "expected a constant name".to_string(),
                });
            }
            let label = core::str::from_utf8(&self.bytes[start..self.pos])
                .unwrap()
                .to_string();
            let mut children = Vec::new();
            self.skip_ws();
            if self.pos < self.bytes.len() && self.bytes[self.pos] == b'(' {
                self.pos += 1;
                loop {
                    children.push(self.tree()?);
                    self.skip_ws();
                    match self.bytes.get(self.pos) {
                        Some(b',') => {
                            self.pos += 1;
                        }
                        Some(b')') => {
                            self.pos += 1;
                            break;
                        }
                        _ => {
                            return Err(TreeError::Syntax {
                                pos: self.pos,
                                message: "expected ',' or ')'".to_string(),
                            })
                        }
                    }
                }
            }
            Ok(Tree { label, children })
        }
    }
    let mut p = P {
        bytes: src.as_bytes(),
        pos: 0,
    };
    let t = p.tree()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(TreeError::Syntax {
            pos: p.pos,
            message: "trailing input after tree".to_string(),
        });
    }
    t.validate(sig)?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_term;
    use alloc::format;
    use alloc::vec;

    fn sig() -> Signature {
        Signature::standard()
    }

    #[test]
    fn to_tree_examples() {
        let t = to_tree(&parse_term("e", &sig()).unwrap(), &sig()).unwrap();
        assert_eq!(t, Tree::leaf("e"));
        let t = to_tree(&parse_term("a e", &sig()).unwrap(), &sig()).unwrap();
        assert_eq!(t, Tree::node("a", vec![Tree::leaf("e")]));
        let t = to_tree(&parse_term("b (a e) e", &sig()).unwrap(), &sig()).unwrap();
        assert_eq!(
            t,
            Tree::node("b", vec![Tree::node("a", vec![Tree::leaf("e")]), Tree::leaf("e")])
        );
    }

    #[test]
    fn to_tree_rejects_non_ground_terms() {
        let t = parse_term("\\x:o. x", &sig()).unwrap();
        assert!(matches!(to_tree(&t, &sig()), Err(TreeError::NotGround { .. })));
        let t = parse_term("a x:o", &sig()).unwrap();
        assert!(matches!(to_tree(&t, &sig()), Err(TreeError::NotGround { .. })));
    }

    #[test]
    fn display_and_parse_round_trip() {
        let t = Tree::node(
            "b",
            vec![
                Tree::node("a", vec![Tree::leaf("e")]),
                Tree::node("a", vec![Tree::node("a", vec![Tree::leaf("e")])]),
            ],
        );
        let text = format!("{}", t);
        assert_eq!(text, "b(a(e),a(a(e)))");
        assert_eq!(parse_tree(&text, &sig()).unwrap(), t);
    }

    #[test]
    fn parse_tree_checks_arity() {
        assert!(matches!(
            parse_tree("a(e,e)", &sig()),
            Err(TreeError::ArityMismatch { .. })
        ));
        assert!(parse_tree("a(e,e)", &Signature::branching()).is_ok());
        assert!(matches!(
            parse_tree("c(e)", &sig()),
            Err(TreeError::UnknownConstant { .. })
        ));
    }
}
