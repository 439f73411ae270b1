use std::io::Read;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use lq_cli::family::{self, FamilyName, Mode};
use lq_cli::report::{
    det_derivation_json, nd_derivation_json, AnalysisReport, NormalizeReport, OracleMetrics,
    ParseReport, TraceLine, Verdicts,
};
use lq_cli::{parse_caps_override, selftest};
use lq_core::{det, metrics, nondet, tree, Caps, Signature, Strategy, Term};

/// Quantitative analyses for simply typed lambda terms over a tree
/// signature: derivation values that bound constant counts in beta-normal
/// forms, plus the normalization oracle to check them against.
#[derive(Parser)]
#[command(name = "lq", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a term and report sort, complexity, and homogeneity.
    Parse {
        /// Input file, or `-` for stdin.
        file: String,
    },
    /// Reduce a term to beta-normal form and print the tree.
    Normalize {
        /// Reduction strategy: `oi` (leftmost outermost) or `rmf`
        /// (rightmost redex of maximal order).
        #[arg(long, default_value = "rmf")]
        strategy: String,
        /// Record one line per reduction step.
        #[arg(long)]
        trace: bool,
        file: String,
    },
    /// Run a type-system analysis and compare it with the tree oracle.
    Analyze {
        /// `det` (total count of the counted constant) or `nondet`
        /// (maximal count on a single branch).
        #[arg(long)]
        mode: String,
        /// Order bound for `nondet`; defaults to the term's complexity.
        #[arg(long)]
        order: Option<u32>,
        /// Include the (witness) derivation as JSON.
        #[arg(long)]
        derivation: bool,
        file: String,
    },
    /// Evaluate a parametric term family and judge boundedness.
    Family {
        /// `example1`, `spine`, or `balanced-b`.
        #[arg(long)]
        name: String,
        /// Largest parameter; records run from 1 to this value.
        #[arg(long, default_value_t = 6)]
        max: u32,
        /// Analysis mode; defaults to the family's natural mode.
        #[arg(long)]
        mode: Option<String>,
    },
    /// Generate a random corpus and run every invariant suite.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        count: usize,
    },
}

const EXIT_OK: u8 = 0;
const EXIT_PROPERTY: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_CAPACITY: u8 = 3;

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {}", message);
    ExitCode::from(code)
}

fn read_input(file: &str) -> Result<String, std::io::Error> {
    if file == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        Ok(buf)
    } else {
        std::fs::read_to_string(file)
    }
}

fn parse_input(file: &str, sig: &Signature) -> Result<Term, ExitCode> {
    let text = read_input(file).map_err(|e| fail(EXIT_INPUT, format!("{}: {}", file, e)))?;
    lq_core::parse_term(&text, sig).map_err(|e| fail(EXIT_INPUT, e))
}

fn emit<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable report"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let sig = Signature::standard();
    let caps = match std::env::var("LQ_CAPS") {
        Ok(spec) => match parse_caps_override(Caps::default(), &spec) {
            Ok(c) => c,
            Err(e) => return fail(EXIT_INPUT, format!("LQ_CAPS: {}", e)),
        },
        Err(_) => Caps::default(),
    };

    match cli.command {
        Command::Parse { file } => {
            let term = match parse_input(&file, &sig) {
                Ok(t) => t,
                Err(code) => return code,
            };
            let sort = term.sort().expect("parser checked sorts");
            let report = ParseReport {
                ok: true,
                term: term.to_string(),
                sort: sort.to_string(),
                complexity: term.complexity().expect("sorted"),
                homogeneous: term.is_homogeneous().expect("sorted"),
                closed: term.is_closed(),
                size: term.size(),
            };
            emit(&report);
            ExitCode::from(EXIT_OK)
        }
        Command::Normalize {
            strategy,
            trace,
            file,
        } => {
            let term = match parse_input(&file, &sig) {
                Ok(t) => t,
                Err(code) => return code,
            };
            let strategy = match strategy.as_str() {
                "oi" => Strategy::Oi,
                "rmf" => Strategy::Rmf,
                other => return fail(EXIT_INPUT, format!("unknown strategy '{}'", other)),
            };
            let normalized = match lq_core::normalize(&term, strategy, &caps, trace) {
                Ok(n) => n,
                Err(lq_core::reduce::ReduceError::BudgetExhausted { budget }) => {
                    return fail(EXIT_CAPACITY, format!("step budget {} exhausted", budget))
                }
                Err(e) => return fail(EXIT_INPUT, e),
            };
            let tree = tree::to_tree(&normalized.term, &sig).ok();
            let report = NormalizeReport {
                ok: true,
                strategy: strategy.to_string(),
                steps: normalized.steps,
                normal_form: normalized.term.to_string(),
                a_count: tree.as_ref().map(|t| metrics::count_a(t, sig.counted())),
                tree: tree.map(|t| t.to_string()),
                trace: normalized.trace.map(|steps| {
                    steps
                        .into_iter()
                        .map(|s| TraceLine {
                            step: s.index,
                            order: s.order,
                            path: s.path.to_string(),
                        })
                        .collect()
                }),
            };
            emit(&report);
            ExitCode::from(EXIT_OK)
        }
        Command::Analyze {
            mode,
            order,
            derivation,
            file,
        } => {
            let term = match parse_input(&file, &sig) {
                Ok(t) => t,
                Err(code) => return code,
            };
            let started = Instant::now();
            let normalized = match lq_core::normalize(&term, Strategy::Rmf, &caps, false) {
                Ok(n) => n,
                Err(lq_core::reduce::ReduceError::BudgetExhausted { budget }) => {
                    return fail(EXIT_CAPACITY, format!("step budget {} exhausted", budget))
                }
                Err(e) => return fail(EXIT_INPUT, e),
            };
            let nf_tree = match tree::to_tree(&normalized.term, &sig) {
                Ok(t) => t,
                Err(e) => return fail(EXIT_INPUT, e),
            };
            let oracle = OracleMetrics {
                a_count: metrics::count_a(&nf_tree, sig.counted()),
                max_branch_a: metrics::max_branch_a(&nf_tree, sig.counted()),
            };
            match mode.as_str() {
                "det" => {
                    let roots = match det::analyze(&term, &sig, &caps) {
                        Ok(r) => r,
                        Err(det::DetError::Capacity(e)) => return fail(EXIT_CAPACITY, e),
                        Err(e) => return fail(EXIT_INPUT, e),
                    };
                    let total: u64 = roots.iter().map(|r| r.count).sum();
                    if total != 1 {
                        return fail(
                            EXIT_PROPERTY,
                            format!("expected a unique root derivation, found {}", total),
                        );
                    }
                    let root = &roots[0];
                    let (&value, _) = root.values.iter().next().unwrap();
                    let verdict = value <= oracle.a_count;
                    let report = AnalysisReport {
                        ok: verdict,
                        term: term.to_string(),
                        mode: "det".into(),
                        m: None,
                        flag: Some(root.flag.to_string()),
                        value: Some(value),
                        derivation_count: Some(total),
                        derivable: None,
                        max_value: None,
                        value_vector: None,
                        oracle,
                        verdicts: Verdicts {
                            value_bounded_by_oracle: verdict,
                            positive_oracle_needs_positive_value: None,
                        },
                        elapsed_ms: started.elapsed().as_millis() as u64,
                        derivation: derivation.then(|| det_derivation_json(&root.witness)),
                    };
                    emit(&report);
                    ExitCode::from(if verdict { EXIT_OK } else { EXIT_PROPERTY })
                }
                "nondet" => {
                    let m = match order {
                        Some(m) => m,
                        None => term.complexity().expect("sorted"),
                    };
                    let best = match nondet::max_value(&term, m, &sig, &caps) {
                        Ok(b) => b,
                        Err(nondet::NdError::Capacity(e)) => return fail(EXIT_CAPACITY, e),
                        Err(e) => return fail(EXIT_INPUT, e),
                    };
                    let bounded = best
                        .as_ref()
                        .map(|b| b.value <= oracle.max_branch_a)
                        .unwrap_or(true);
                    let weak = oracle.max_branch_a == 0
                        || best.as_ref().map(|b| b.value >= 1).unwrap_or(false);
                    let ok = bounded && weak;
                    let report = AnalysisReport {
                        ok,
                        term: term.to_string(),
                        mode: "nondet".into(),
                        m: Some(m),
                        flag: None,
                        value: None,
                        derivation_count: None,
                        derivable: Some(best.is_some()),
                        max_value: best.as_ref().map(|b| b.value),
                        value_vector: best.as_ref().map(|b| b.vector.clone()),
                        oracle,
                        verdicts: Verdicts {
                            value_bounded_by_oracle: bounded,
                            positive_oracle_needs_positive_value: Some(weak),
                        },
                        elapsed_ms: started.elapsed().as_millis() as u64,
                        derivation: derivation
                            .then(|| best.as_ref().map(|b| nd_derivation_json(&b.witness, &sig)))
                            .flatten(),
                    };
                    emit(&report);
                    ExitCode::from(if ok { EXIT_OK } else { EXIT_PROPERTY })
                }
                other => fail(EXIT_INPUT, format!("unknown mode '{}'", other)),
            }
        }
        Command::Family { name, max, mode } => {
            let Some(name) = FamilyName::parse(&name) else {
                return fail(EXIT_INPUT, format!("unknown family '{}'", name));
            };
            let mode = match mode {
                None => name.default_mode(),
                Some(s) => match Mode::parse(&s) {
                    Some(m) => m,
                    None => return fail(EXIT_INPUT, format!("unknown mode '{}'", s)),
                },
            };
            match family::run_family(name, mode, max, &sig, &caps) {
                Ok(report) => {
                    let ok = report.verdict != "MISMATCH";
                    emit(&report);
                    ExitCode::from(if ok { EXIT_OK } else { EXIT_PROPERTY })
                }
                Err(e) if family::is_capacity_error(&e) => fail(EXIT_CAPACITY, e),
                Err(e) => fail(EXIT_INPUT, e),
            }
        }
        Command::Selftest { seed, count } => {
            let report = selftest::run(seed, count, &sig, &caps);
            let ok = report.ok;
            emit(&report);
            ExitCode::from(if ok { EXIT_OK } else { EXIT_PROPERTY })
        }
    }
}
