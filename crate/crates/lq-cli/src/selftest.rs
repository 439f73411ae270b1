//! The self-test suite: generates a corpus of closed homogeneous ground
//! terms and runs every invariant the analyses promise, reporting any
//! violation verbatim.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use lq_core::reduce::{outermost_redexes, rmf_redex, step};
use lq_core::{det, metrics, nondet, parse_term, tree, Caps, Signature, Strategy, Term, Tree};

use crate::corpus::{self, GenConfig};

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CheckResult {
    pub name: String,
    pub passed: usize,
    pub failed: usize,
    /// Up to five failure descriptions, enough to reproduce.
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SelftestReport {
    pub ok: bool,
    pub seed: u64,
    pub count: usize,
    pub checks: Vec<CheckResult>,
}

struct Check {
    name: &'static str,
    passed: usize,
    failed: usize,
    failures: Vec<String>,
}

impl Check {
    fn new(name: &'static str) -> Check {
        Check {
            name,
            passed: 0,
            failed: 0,
            failures: Vec::new(),
        }
    }

    fn ok(&mut self) {
        self.passed += 1;
    }

    fn fail(&mut self, message: String) {
        self.failed += 1;
        if self.failures.len() < 5 {
            self.failures.push(message);
        }
    }

    fn assert(&mut self, cond: bool, message: impl FnOnce() -> String) {
        if cond {
            self.ok();
        } else {
            self.fail(message());
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name.to_string(),
            passed: self.passed,
            failed: self.failed,
            failures: self.failures,
        }
    }
}

/// Runs every suite on a fresh corpus. Deterministic in `seed` and `count`.
pub fn run(seed: u64, count: usize, sig: &Signature, caps: &Caps) -> SelftestReport {
    let cfg = GenConfig::default();
    let terms = corpus::generate(seed, count, sig, &cfg);

    let mut generator = Check::new("generator-invariants");
    let mut roundtrip = Check::new("print-parse-round-trip");
    let mut confluence = Check::new("strategy-confluence");
    let mut discipline = Check::new("rmf-order-discipline");
    let mut sort_preserved = Check::new("step-preserves-sort");
    let mut det_root = Check::new("det-root-unique-and-coupled");
    let mut det_d1a = Check::new("det-value-bounded-by-count");
    let mut det_subject = Check::new("det-subject-reduction-bounds");
    let mut nd_n1 = Check::new("nd-max-value-bounded-by-branch");
    let mut nd_weak = Check::new("nd-positive-branch-needs-positive-value");
    let mut nd_preserve = Check::new("nd-rmf-step-preserves-max-value");
    let mut tree_bounds = Check::new("tree-metric-bounds");
    let mut tree_io = Check::new("tree-serialization-round-trip");

    for t in &terms {
        let text = t.to_string();

        // generator guarantees
        let gen_ok = t.is_closed()
            && t.sort().map(|s| s == lq_core::Sort::Base).unwrap_or(false)
            && t.is_homogeneous().unwrap_or(false)
            && t.complexity().map(|c| c <= cfg.max_complexity).unwrap_or(false)
            && t.size() <= cfg.max_size;
        generator.assert(gen_ok, || format!("bad sample: {}", text));

        // parse(print(t)) must reproduce the term
        match parse_term(&text, sig) {
            Ok(back) => roundtrip.assert(back.alpha_eq(t), || format!("round trip changed: {}", text)),
            Err(e) => roundtrip.fail(format!("reparse failed on {}: {}", text, e)),
        }

        // normalization under both strategies
        let oi = lq_core::normalize(t, Strategy::Oi, caps, false);
        let rmf = lq_core::normalize(t, Strategy::Rmf, caps, true);
        let (oi, rmf) = match (oi, rmf) {
            (Ok(a), Ok(b)) => (a, b),
            (a, b) => {
                confluence.fail(format!(
                    "normalization failed on {}: {:?} / {:?}",
                    text,
                    a.err(),
                    b.err()
                ));
                continue;
            }
        };
        confluence.assert(oi.term.alpha_eq(&rmf.term), || {
            format!("strategies disagree on {}", text)
        });

        let orders: Vec<u32> = rmf.trace.as_ref().unwrap().iter().map(|s| s.order).collect();
        discipline.assert(orders.windows(2).all(|w| w[0] >= w[1]), || {
            format!("order sequence {:?} not monotone on {}", orders, text)
        });

        // one step preserves the sort
        if let Some(p) = outermost_redexes(t).first() {
            match step(t, p) {
                Ok(t2) => sort_preserved.assert(
                    t2.sort().ok() == t.sort().ok(),
                    || format!("sort changed by a step on {}", text),
                ),
                Err(e) => sort_preserved.fail(format!("step failed on {}: {}", text, e)),
            }
        }

        let nf_tree = match tree::to_tree(&rmf.term, sig) {
            Ok(tr) => tr,
            Err(e) => {
                confluence.fail(format!("normal form of {} is not a tree: {}", text, e));
                continue;
            }
        };
        let count = metrics::count_a(&nf_tree, sig.counted());
        let branch = metrics::max_branch_a(&nf_tree, sig.counted());

        tree_bounds.assert(branch <= count, || {
            format!("branch {} exceeds count {} on {}", branch, count, text)
        });
        match tree::parse_tree(&nf_tree.to_string(), sig) {
            Ok(back) => tree_io.assert(back == nf_tree, || format!("tree round trip changed: {}", nf_tree)),
            Err(e) => tree_io.fail(format!("tree reparse failed on {}: {}", nf_tree, e)),
        }

        // deterministic system: root uniqueness, flag/value coupling, D1A
        match det::analyze(t, sig, caps) {
            Err(e) => det_root.fail(format!("analysis failed on {}: {}", text, e)),
            Ok(roots) => {
                let total: u64 = roots.iter().map(|r| r.count).sum();
                if total != 1 {
                    det_root.fail(format!("{} root derivations on {}", total, text));
                } else {
                    let r = &roots[0];
                    let (&value, _) = r.values.iter().next().unwrap();
                    let coupled = (value > 0) == (r.flag == det::Flag::Pr);
                    let witness_ok = r.witness.check(sig).is_ok()
                        && r.witness.value() == value
                        && r.witness.flag() == r.flag;
                    det_root.assert(coupled && witness_ok, || {
                        format!("coupling or witness failed on {}", text)
                    });
                    det_d1a.assert(value <= count, || {
                        format!("value {} exceeds count {} on {}", value, count, text)
                    });

                    // one rightmost-maximal step preserves the bounds
                    if let Ok(Some(p)) = rmf_redex(t) {
                        let t2 = step(t, &p).expect("redex steps");
                        match det::value_and_flag(&t2, sig, caps) {
                            Err(e) => det_subject.fail(format!("after-step analysis failed on {}: {}", text, e)),
                            Ok((_, v2)) => {
                                let upper_ok = value >= 63 || v2 <= (1u64 << value);
                                det_subject.assert(value <= v2 && upper_ok, || {
                                    format!("{} -> {} violates the step bounds on {}", value, v2, text)
                                });
                            }
                        }
                    }
                }
            }
        }

        // branch-counting system at the term's complexity
        let m = t.complexity().unwrap_or(0);
        match nondet::max_value(t, m, sig, caps) {
            Err(e) => nd_n1.fail(format!("analysis failed on {} at m={}: {}", text, m, e)),
            Ok(best) => {
                match &best {
                    Some(b) => {
                        nd_n1.assert(b.value <= branch, || {
                            format!("max value {} exceeds branch count {} on {}", b.value, branch, text)
                        });
                        let witness_vec = b.witness.check_and_value(sig);
                        nd_n1.assert(
                            witness_vec.as_ref().ok() == Some(&b.vector),
                            || format!("witness mismatch on {}", text),
                        );
                    }
                    None => nd_n1.ok(),
                }
                let weak_ok = branch == 0 || best.as_ref().map(|b| b.value >= 1).unwrap_or(false);
                nd_weak.assert(weak_ok, || {
                    format!("branch count {} but max value {:?} on {}", branch, best.as_ref().map(|b| b.value), text)
                });
            }
        }

        // a top-order step at complexity m+1 preserves the order-m max value
        if m >= 1 {
            if let Ok(Some(p)) = rmf_redex(t) {
                let redex_order = match lq_core::reduce::subterm_at(t, &p) {
                    Some(Term::App(f, _)) => f.sort().map(|s| s.order()).unwrap_or(0),
                    _ => 0,
                };
                if redex_order == m {
                    let t2 = step(t, &p).expect("redex steps");
                    let before = nondet::max_value(t, m - 1, sig, caps);
                    let after = nondet::max_value(&t2, m - 1, sig, caps);
                    match (before, after) {
                        (Ok(b), Ok(a)) => {
                            let bv = b.map(|x| x.value);
                            let av = a.map(|x| x.value);
                            nd_preserve.assert(bv == av, || {
                                format!("max value changed {:?} -> {:?} on {}", bv, av, text)
                            });
                        }
                        (b, a) => nd_preserve.fail(format!(
                            "step analysis failed on {}: {:?} / {:?}",
                            text,
                            b.err(),
                            a.err()
                        )),
                    }
                }
            }
        }
    }

    // embedding metric on random binary trees over the branching signature
    let mut embed = Check::new("embedding-depth-oracle");
    let bsig = Signature::branching();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for _ in 0..count.max(1) {
        let tr = random_branching_tree(&mut rng, 4);
        let fast = metrics::embed_depth(&tr, bsig.counted());
        let slow = embed_oracle(&tr, bsig.counted());
        embed.assert(fast == slow, || {
            format!("embed depth {} vs oracle {} on {}", fast, slow, tr)
        });
        embed.assert(fast <= metrics::max_branch_a(&tr, bsig.counted()), || {
            format!("embed depth exceeds branch count on {}", tr)
        });
    }

    let checks: Vec<CheckResult> = vec![
        generator.finish(),
        roundtrip.finish(),
        confluence.finish(),
        discipline.finish(),
        sort_preserved.finish(),
        det_root.finish(),
        det_d1a.finish(),
        det_subject.finish(),
        nd_n1.finish(),
        nd_weak.finish(),
        nd_preserve.finish(),
        tree_bounds.finish(),
        tree_io.finish(),
        embed.finish(),
    ];
    let ok = checks.iter().all(|c| c.failed == 0);
    SelftestReport {
        ok,
        seed,
        count,
        checks,
    }
}

fn random_branching_tree(rng: &mut ChaCha8Rng, depth: u32) -> Tree {
    if depth == 0 || rng.gen_bool(0.25) {
        return Tree::leaf("e");
    }
    let label = if rng.gen_bool(0.7) { "a" } else { "b" };
    Tree::node(
        label,
        vec![
            random_branching_tree(rng, depth - 1),
            random_branching_tree(rng, depth - 1),
        ],
    )
}

/// Brute-force embedding check, independent of the production recursion:
/// height `n` embeds iff some subtree `a(t1,t2)` embeds height `n-1` in
/// both children; height 0 needs an `e` leaf.
fn embeds(n: u64, t: &Tree, a_label: &str) -> bool {
    if n == 0 {
        return has_e_leaf(t);
    }
    subtrees(t).iter().any(|s| {
        s.label == a_label
            && s.children.len() == 2
            && embeds(n - 1, &s.children[0], a_label)
            && embeds(n - 1, &s.children[1], a_label)
    })
}

fn has_e_leaf(t: &Tree) -> bool {
    (t.label == "e" && t.children.is_empty()) || t.children.iter().any(has_e_leaf)
}

fn subtrees(t: &Tree) -> Vec<&Tree> {
    let mut out = vec![t];
    for c in &t.children {
        out.extend(subtrees(c));
    }
    out
}

fn embed_oracle(t: &Tree, a_label: &str) -> u64 {
    let mut n = 0;
    while embeds(n + 1, t, a_label) {
        n += 1;
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes_on_a_small_corpus() {
        let report = run(1, 25, &Signature::standard(), &Caps::default());
        for c in &report.checks {
            assert_eq!(c.failed, 0, "{}: {:?}", c.name, c.failures);
        }
        assert!(report.ok);
    }

    #[test]
    fn selftest_is_deterministic() {
        let a = run(1, 10, &Signature::standard(), &Caps::default());
        let b = run(1, 10, &Signature::standard(), &Caps::default());
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn empty_corpus_passes_vacuously() {
        let report = run(1, 0, &Signature::standard(), &Caps::default());
        assert!(report.ok);
    }

    #[test]
    fn embedding_oracle_agrees_on_known_trees() {
        for n in 0..=6 {
            let t = metrics::build_an(n);
            assert_eq!(embed_oracle(&t, "a"), u64::from(n));
            assert_eq!(metrics::embed_depth(&t, "a"), u64::from(n));
        }
        // the worked single-anchor example
        let t = tree::parse_tree("a(a(e,e),e)", &Signature::branching()).unwrap();
        assert_eq!(embed_oracle(&t, "a"), 1);
    }
}
