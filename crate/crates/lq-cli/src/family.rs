//! Parametric term families: per-parameter derivation values against the
//! tree oracle, with a boundedness verdict.

use serde::Serialize;

use lq_core::{det, metrics, nondet, parse_sort, parse_term, tree, Caps, Signature, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyName {
    /// Chains of the doubling combinator applied under one shared binder.
    Example1,
    /// Nested unary counted constants: plain spines without lambdas.
    Spine,
    /// Duplicating wrapper producing full binary branching trees.
    BalancedB,
}

impl FamilyName {
    pub fn parse(s: &str) -> Option<FamilyName> {
        match s {
            "example1" => Some(FamilyName::Example1),
            "spine" => Some(FamilyName::Spine),
            "balanced-b" => Some(FamilyName::BalancedB),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyName::Example1 => "example1",
            FamilyName::Spine => "spine",
            FamilyName::BalancedB => "balanced-b",
        }
    }

    /// The mode the family is intended to exercise.
    pub fn default_mode(&self) -> Mode {
        match self {
            FamilyName::Example1 | FamilyName::Spine => Mode::Det,
            FamilyName::BalancedB => Mode::Nondet,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Det,
    Nondet,
}

impl Mode {
    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "det" => Some(Mode::Det),
            "nondet" => Some(Mode::Nondet),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Det => "det",
            Mode::Nondet => "nondet",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FamilyRecord {
    pub param: u32,
    /// Derivation value (deterministic mode) or maximal top value
    /// (nondeterministic mode); `None` when no root derivation exists.
    pub value: Option<u64>,
    /// Count of counted constants (det) or maximal count on a branch
    /// (nondet) in the normal form.
    pub metric: u64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FamilyReport {
    pub family: String,
    pub mode: String,
    pub records: Vec<FamilyRecord>,
    pub verdict: String,
}

/// The member of the doubling-chain family with `j` copies of the doubler.
pub fn example1_term(j: u32, sig: &Signature) -> Term {
    let n = parse_term("\\y:(o->o).\\x:o. y (y x)", sig).expect("doubler");
    let oo = parse_sort("o->o").unwrap();
    let mut chain = Term::var("y", oo.clone());
    for _ in 0..j {
        chain = Term::app(n.clone(), chain);
    }
    let body = Term::app(chain, parse_term("a e", sig).unwrap());
    Term::app(Term::lam("y", oo, body), parse_term("a", sig).unwrap())
}

/// `a (a (... (a e)))` with `j` constants.
pub fn spine_term(j: u32, sig: &Signature) -> Term {
    let mut t = Term::constant(sig, "e").unwrap();
    for _ in 0..j {
        t = Term::app(Term::constant(sig, "a").unwrap(), t);
    }
    t
}

/// `dup (dup (... (dup e)))` with `dup = \x:o. b (a x) (a x)`; the normal
/// form is a full binary tree with `j` counted constants on every branch.
pub fn balanced_b_term(j: u32, sig: &Signature) -> Term {
    let dup = parse_term("\\x:o. b (a x) (a x)", sig).expect("duplicator");
    let mut t = Term::constant(sig, "e").unwrap();
    for _ in 0..j {
        t = Term::app(dup.clone(), t);
    }
    t
}

pub fn family_term(name: FamilyName, j: u32, sig: &Signature) -> Term {
    match name {
        FamilyName::Example1 => example1_term(j, sig),
        FamilyName::Spine => spine_term(j, sig),
        FamilyName::BalancedB => balanced_b_term(j, sig),
    }
}

#[derive(Debug)]
pub enum FamilyError {
    Det(det::DetError),
    Nd(nondet::NdError),
    Reduce(lq_core::reduce::ReduceError),
    Tree(tree::TreeError),
}

impl std::fmt::Display for FamilyError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FamilyError::Det(e) => write!(f, "{}", e),
            FamilyError::Nd(e) => write!(f, "{}", e),
            FamilyError::Reduce(e) => write!(f, "{}", e),
            FamilyError::Tree(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for FamilyError {}

pub fn is_capacity_error(e: &FamilyError) -> bool {
    matches!(
        e,
        FamilyError::Det(det::DetError::Capacity(_)) | FamilyError::Nd(nondet::NdError::Capacity(_))
    )
}

/// Fills the per-parameter records for `j = 1..=max_j` and judges whether
/// the value and the oracle metric grow together.
pub fn run_family(
    name: FamilyName,
    mode: Mode,
    max_j: u32,
    sig: &Signature,
    caps: &Caps,
) -> Result<FamilyReport, FamilyError> {
    let mut records = Vec::new();
    for j in 1..=max_j {
        let term = family_term(name, j, sig);
        let normal = lq_core::normalize(&term, lq_core::Strategy::Rmf, caps, false)
            .map_err(FamilyError::Reduce)?;
        let nf_tree = tree::to_tree(&normal.term, sig).map_err(FamilyError::Tree)?;
        let (value, metric) = match mode {
            Mode::Det => {
                let (_, value) = det::value_and_flag(&term, sig, caps).map_err(FamilyError::Det)?;
                (Some(value), metrics::count_a(&nf_tree, sig.counted()))
            }
            Mode::Nondet => {
                let m = term.complexity().map_err(lq_core::det::DetError::IllSorted).map_err(FamilyError::Det)?;
                let best = nondet::max_value(&term, m, sig, caps).map_err(FamilyError::Nd)?;
                (
                    best.map(|b| b.value),
                    metrics::max_branch_a(&nf_tree, sig.counted()),
                )
            }
        };
        records.push(FamilyRecord {
            param: j,
            value,
            metric,
        });
    }
    let verdict = verdict(&records);
    Ok(FamilyReport {
        family: name.as_str().to_string(),
        mode: mode.as_str().to_string(),
        records,
        verdict,
    })
}

fn verdict(records: &[FamilyRecord]) -> String {
    if records.len() < 2 {
        return "both bounded".to_string();
    }
    let first = &records[0];
    let last = &records[records.len() - 1];
    let (Some(vf), Some(vl)) = (first.value, last.value) else {
        return "MISMATCH".to_string();
    };
    let values_increase = vl > vf;
    let metrics_increase = last.metric > first.metric;
    let values_flat = vl == vf;
    let metrics_flat = last.metric == first.metric;
    if values_increase && metrics_increase {
        "both increase".to_string()
    } else if values_flat && metrics_flat {
        "both bounded".to_string()
    } else {
        "MISMATCH".to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig() -> Signature {
        Signature::standard()
    }

    #[test]
    fn example1_family_det_records() {
        let report = run_family(FamilyName::Example1, Mode::Det, 6, &sig(), &Caps::default()).unwrap();
        let values: Vec<u64> = report.records.iter().map(|r| r.value.unwrap()).collect();
        let metrics: Vec<u64> = report.records.iter().map(|r| r.metric).collect();
        assert_eq!(values, vec![3, 4, 5, 6, 7, 8]);
        assert_eq!(metrics, vec![3, 5, 9, 17, 33, 65]);
        assert_eq!(report.verdict, "both increase");
        for r in &report.records {
            assert!(r.value.unwrap() <= r.metric);
        }
    }

    #[test]
    fn spine_family_det_records() {
        let report = run_family(FamilyName::Spine, Mode::Det, 5, &sig(), &Caps::default()).unwrap();
        for r in &report.records {
            assert_eq!(r.value, Some(u64::from(r.param)));
            assert_eq!(r.metric, u64::from(r.param));
        }
        assert_eq!(report.verdict, "both increase");
    }

    #[test]
    fn balanced_b_family_nondet_records() {
        let report =
            run_family(FamilyName::BalancedB, Mode::Nondet, 5, &sig(), &Caps::default()).unwrap();
        for r in &report.records {
            assert_eq!(r.metric, u64::from(r.param), "branch count grows with the parameter");
            let v = r.value.expect("derivation exists");
            assert!(v >= 1);
            assert!(v <= r.metric);
        }
        assert_eq!(report.verdict, "both increase");
    }

    #[test]
    fn example1_family_nondet_matches_the_det_values() {
        let report =
            run_family(FamilyName::Example1, Mode::Nondet, 4, &sig(), &Caps::default()).unwrap();
        let values: Vec<u64> = report.records.iter().map(|r| r.value.unwrap()).collect();
        assert_eq!(values, vec![3, 4, 5, 6]);
        assert_eq!(report.verdict, "both increase");
    }
}
