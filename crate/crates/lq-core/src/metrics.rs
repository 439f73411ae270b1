//! Ground-truth quantities on trees: total count of a constant, maximal
//! count on a single branch, and the homeomorphic-embedding depth of full
//! binary trees of that constant.

use alloc::vec::Vec;

use crate::tree::Tree;

/// Number of nodes labeled `label`.
pub fn count_a(t: &Tree, label: &str) -> u64 {
    let own = u64::from(t.label == label);
    own + t.children.iter().map(|c| count_a(c, label)).sum::<u64>()
}

/// Maximum over root-to-leaf paths of the number of `label` nodes on the path.
pub fn max_branch_a(t: &Tree, label: &str) -> u64 {
    let own = u64::from(t.label == label);
    let below = t
        .children
        .iter()
        .map(|c| max_branch_a(c, label))
        .max()
        .unwrap_or(0);
    own + below
}

/// The full binary tree of height `n`: internal nodes `a`, leaves `e`.
pub fn build_an(n: u32) -> Tree {
    if n == 0 {
        Tree::leaf("e")
    } else {
        let c = build_an(n - 1);
        Tree::node("a", alloc::vec![c.clone(), c])
    }
}

/// The largest `n` such that the full binary tree of height `n` (internal
/// nodes `a`, leaves `e`) embeds homeomorphically in `t`.
///
/// Height 0 (a single `e` leaf) embeds in any tree with an `e` leaf, which
/// over the fixed signatures is every finite tree; 0 is also returned when
/// no `e` leaf exists. Height `n` embeds when some subtree `a(t1, t2)` has
/// height `n-1` embedding in both `t1` and `t2`. Only binary `a` nodes can
/// anchor an embedding step.
pub fn embed_depth(t: &Tree, a_label: &str) -> u64 {
    let children: Vec<u64> = t.children.iter().map(|c| embed_depth(c, a_label)).collect();
    let mut best = children.iter().copied().max().unwrap_or(0);
    if t.label == a_label && t.children.len() == 2 {
        best = best.max(1 + children[0].min(children[1]));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sort::Signature;
    use crate::tree::parse_tree;

    fn t5(text: &str) -> Tree {
        parse_tree(text, &Signature::branching()).unwrap()
    }

    fn t(text: &str) -> Tree {
        parse_tree(text, &Signature::standard()).unwrap()
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_a(&t("e"), "a"), 0);
        assert_eq!(count_a(&t("a(e)"), "a"), 1);
        assert_eq!(count_a(&t("b(a(e),a(a(e)))"), "a"), 3);
    }

    #[test]
    fn max_branch_examples() {
        assert_eq!(max_branch_a(&t("e"), "a"), 0);
        assert_eq!(max_branch_a(&t("b(a(e),a(a(e)))"), "a"), 2);
        // unary spine: single branch, equals the count
        let spine = t("a(a(a(a(e))))");
        assert_eq!(max_branch_a(&spine, "a"), count_a(&spine, "a"));
    }

    #[test]
    fn max_branch_never_exceeds_count() {
        for text in ["e", "a(e)", "b(a(e),a(a(e)))", "b(b(e,a(e)),a(a(e)))"] {
            let tree = t(text);
            assert!(max_branch_a(&tree, "a") <= count_a(&tree, "a"));
        }
    }

    #[test]
    fn build_an_examples() {
        assert_eq!(build_an(0), t5("e"));
        assert_eq!(build_an(1), t5("a(e,e)"));
        assert_eq!(build_an(2), t5("a(a(e,e),a(e,e))"));
    }

    #[test]
    fn embed_depth_of_an_is_n() {
        for n in 0..=8 {
            assert_eq!(embed_depth(&build_an(n), "a"), u64::from(n));
        }
    }

    #[test]
    fn embed_depth_examples() {
        assert_eq!(embed_depth(&t5("e"), "a"), 0);
        // the right child of the root has no a, so only the inner a(e,e) counts
        assert_eq!(embed_depth(&t5("a(a(e,e),e)"), "a"), 1);
    }

    #[test]
    fn left_spine_embeds_only_height_one() {
        // arbitrarily many a on one branch, but never two side by side
        let mut spine = t5("a(e,e)");
        for _ in 0..19 {
            spine = Tree::node("a", alloc::vec![spine, Tree::leaf("e")]);
        }
        assert!(count_a(&spine, "a") >= 20);
        assert_eq!(embed_depth(&spine, "a"), 1);
    }

    #[test]
    fn embed_depth_bounded_by_max_branch() {
        for text in [
            "e",
            "a(e,e)",
            "a(a(e,e),e)",
            "a(a(e,e),a(e,e))",
            "b(a(a(e,e),a(e,e)),e)",
            "a(b(a(e,e),e),a(e,a(e,e)))",
        ] {
            let tree = t5(text);
            assert!(embed_depth(&tree, "a") <= max_branch_a(&tree, "a"));
        }
    }
}
