//! Quantitative analyses for simply typed lambda terms over a tree signature.
//!
//! A closed term of the ground sort normalizes to a finite tree built from the
//! signature constants. This crate provides:
//!
//! * the term language itself (sorts, signatures, parsing, printing),
//! * beta reduction with the outermost (OI) and rightmost-maximal-order (RMF)
//!   strategies, plus conversion of ground normal forms to trees,
//! * tree-side oracles: total `a`-count, maximal `a`-count on a branch, and
//!   the homeomorphic-embedding depth of full binary `a`-trees,
//! * a flag-based intersection type system whose derivation value lower-bounds
//!   the number of `a` constants in the normal form ([`det`]),
//! * a zone/order-based intersection type system whose top-order value
//!   lower-bounds the maximal number of `a` constants on a single branch
//!   ([`nondet`]).
//!
//! Everything is pure and deterministic; the crate is `no_std` (alloc only).

#![no_std]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

mod combo;
pub mod det;
pub mod metrics;
pub mod nondet;
pub mod parse;
pub mod reduce;
pub mod sort;
pub mod term;
pub mod tree;

pub use parse::{parse_sort, parse_term, ParseError};
pub use reduce::{normalize, Normalized, Strategy};
pub use sort::{Signature, Sort};
pub use term::Term;
pub use tree::Tree;

use core::fmt;

/// Capacity limits for the analyses. The intersection type spaces grow
/// non-elementarily with sort size, so every enumeration is capped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Caps {
    /// Largest sort order admitted anywhere in an analyzed term.
    pub max_sort_order: u32,
    /// Largest number of types (or type triples) enumerated per sort.
    pub max_type_space: usize,
    /// Largest order bound `m` accepted by the branch analysis.
    pub max_order: u32,
    /// Cap on materialized derivations / judgment table entries per run.
    pub max_derivations: usize,
    /// Beta-reduction step budget for `normalize`.
    pub step_budget: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_sort_order: 3,
            max_type_space: 1 << 16,
            max_order: 3,
            max_derivations: 1 << 20,
            step_budget: 1_000_000,
        }
    }
}

/// A capacity cap was exceeded; the analysis result would not fit desk scale.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapacityError {
    pub what: &'static str,
    pub limit: usize,
}

impl fmt::Display for CapacityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "capacity exceeded: {} (limit {})", self.what, self.limit)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CapacityError {}
