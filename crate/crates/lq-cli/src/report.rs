//! Machine-readable reports and derivation serialization. JSON is the
//! single machine interface of the tool; everything human-readable is
//! derived from these structures.

use serde::Serialize;
use serde_json::{json, Value};

use lq_core::det::{DetDerivation, DetNode, DetType, Flag};
use lq_core::nondet::{NdDerivation, NdNode, NdType};
use lq_core::reduce::{Path, Selector};
use lq_core::{Signature, Term};

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ParseReport {
    pub ok: bool,
    pub term: String,
    pub sort: String,
    pub complexity: u32,
    pub homogeneous: bool,
    pub closed: bool,
    pub size: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NormalizeReport {
    pub ok: bool,
    pub strategy: String,
    pub steps: u64,
    pub normal_form: String,
    /// Prefix serialization of the tree; absent when the input is not a
    /// closed ground term.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tree: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceLine>>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TraceLine {
    pub step: u64,
    pub order: u32,
    pub path: String,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleMetrics {
    pub a_count: u64,
    pub max_branch_a: u64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AnalysisReport {
    pub ok: bool,
    pub term: String,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    /// Deterministic mode: the flag of the unique root derivation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
    /// Deterministic mode: the value of the unique root derivation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derivation_count: Option<u64>,
    /// Branch mode: whether the root judgment is derivable at all.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derivable: Option<bool>,
    /// Branch mode: the maximal top value over all derivations.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_value: Option<u64>,
    /// Branch mode: the full value vector of a best derivation.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value_vector: Option<Vec<u64>>,
    pub oracle: OracleMetrics,
    pub verdicts: Verdicts,
    pub elapsed_ms: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derivation: Option<Value>,
}

/// Inequality verdicts, recomputed from the stored numbers.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Verdicts {
    /// det: value <= total count; nondet: max value <= branch count.
    pub value_bounded_by_oracle: bool,
    /// nondet only: a positive branch count implies a positive max value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub positive_oracle_needs_positive_value: Option<bool>,
}

fn path_string(path: &[Selector]) -> String {
    Path(path.to_vec()).to_string()
}

fn det_type_json(ty: &DetType) -> Value {
    match ty {
        DetType::Atom => json!("r"),
        DetType::Arrow(args, res) => json!({
            "args": args
                .iter()
                .map(|(f, t)| json!({"flag": f.to_string(), "type": det_type_json(t)}))
                .collect::<Vec<_>>(),
            "result": det_type_json(res),
        }),
    }
}

fn det_rule_name(node: &DetNode) -> &'static str {
    match node.rule {
        lq_core::det::DetRule::Const => "const",
        lq_core::det::DetRule::Var => "var",
        lq_core::det::DetRule::Lam => "lam",
        lq_core::det::DetRule::App => "app",
    }
}

fn det_node_json(term: &Term, node: &DetNode, path: &mut Vec<Selector>) -> Value {
    let env: Vec<Value> = node
        .env
        .iter()
        .map(|b| {
            json!({
                "var": b.var,
                "flag": b.flag.to_string(),
                "type": det_type_json(&b.ty),
            })
        })
        .collect();
    let children: Vec<Value> = match (term, node.rule) {
        (Term::Lam(_, _, body), lq_core::det::DetRule::Lam) => {
            path.push(Selector::Body);
            let v = vec![det_node_json(body, &node.children[0], path)];
            path.pop();
            v
        }
        (Term::App(fun, arg), lq_core::det::DetRule::App) => {
            let mut v = Vec::with_capacity(node.children.len());
            path.push(Selector::Fun);
            v.push(det_node_json(fun, &node.children[0], path));
            path.pop();
            for c in &node.children[1..] {
                path.push(Selector::Arg);
                v.push(det_node_json(arg, c, path));
                path.pop();
            }
            v
        }
        _ => Vec::new(),
    };
    json!({
        "rule": det_rule_name(node),
        "path": path_string(path),
        "judgment": {
            "env": env,
            "flag": node.flag.to_string(),
            "type": det_type_json(&node.ty),
        },
        "value": node.node_value(),
        "children": children,
    })
}

/// The derivation as JSON: nodes carry rule, term path, judgment, and the
/// node value.
pub fn det_derivation_json(d: &DetDerivation) -> Value {
    det_node_json(&d.term, &d.root, &mut Vec::new())
}

fn nd_type_json(ty: &NdType) -> Value {
    match ty {
        NdType::Atom => json!("r"),
        NdType::Arrow(args, res) => json!({
            "args": args
                .iter()
                .map(|t| json!({"Z": t.z, "F": t.f, "type": nd_type_json(&t.ty)}))
                .collect::<Vec<_>>(),
            "result": nd_type_json(res),
        }),
    }
}

fn nd_rule_name(node: &NdNode) -> &'static str {
    match node.rule {
        lq_core::nondet::NdRule::Const => "const",
        lq_core::nondet::NdRule::Var => "var",
        lq_core::nondet::NdRule::Lam => "lam",
        lq_core::nondet::NdRule::App => "app",
    }
}

fn nd_node_json(
    term: &Term,
    node: &NdNode,
    sig: &Signature,
    m: u32,
    path: &mut Vec<Selector>,
) -> Value {
    let env: Vec<Value> = node
        .env
        .iter()
        .map(|b| {
            json!({
                "var": b.var,
                "Z": b.triple.z,
                "F": b.triple.f,
                "type": nd_type_json(&b.triple.ty),
            })
        })
        .collect();
    let children: Vec<Value> = match (term, node.rule) {
        (Term::Lam(_, _, body), lq_core::nondet::NdRule::Lam) => {
            path.push(Selector::Body);
            let v = vec![nd_node_json(body, &node.children[0], sig, m, path)];
            path.pop();
            v
        }
        (Term::App(fun, arg), lq_core::nondet::NdRule::App) => {
            let mut v = Vec::with_capacity(node.children.len());
            path.push(Selector::Fun);
            v.push(nd_node_json(fun, &node.children[0], sig, m, path));
            path.pop();
            for c in &node.children[1..] {
                path.push(Selector::Arg);
                v.push(nd_node_json(arg, c, sig, m, path));
                path.pop();
            }
            v
        }
        _ => Vec::new(),
    };
    json!({
        "rule": nd_rule_name(node),
        "path": path_string(path),
        "judgment": {
            "env": env,
            "Z": node.triple.z,
            "F": node.triple.f,
            "type": nd_type_json(&node.triple.ty),
        },
        "m": m,
        "kValues": node.node_value_vector(term, sig, m),
        "balancedFlags": node.balanced_flags(m),
        "children": children,
    })
}

/// The derivation as JSON, extending the deterministic format with the
/// zone order, productivity order, per-order node values, and per-order
/// balancedness of the judgment triple.
pub fn nd_derivation_json(d: &NdDerivation, sig: &Signature) -> Value {
    nd_node_json(&d.term, &d.root, sig, d.m, &mut Vec::new())
}

/// det flag as report text.
pub fn flag_str(f: Flag) -> String {
    f.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use lq_core::{det, nondet, parse_term, Caps};

    #[test]
    fn det_derivation_json_shape() {
        let sig = Signature::standard();
        let t = parse_term("a e", &sig).unwrap();
        let roots = det::analyze(&t, &sig, &Caps::default()).unwrap();
        let v = det_derivation_json(&roots[0].witness);
        assert_eq!(v["rule"], "app");
        assert_eq!(v["path"], "/");
        assert_eq!(v["judgment"]["flag"], "pr");
        assert_eq!(v["judgment"]["type"], "r");
        assert_eq!(v["children"][0]["path"], "/f");
        assert_eq!(v["children"][0]["value"], 1);
        assert_eq!(v["children"][1]["path"], "/a");
    }

    #[test]
    fn nd_derivation_json_shape() {
        let sig = Signature::standard();
        let t = parse_term("a e", &sig).unwrap();
        let best = nondet::max_value(&t, 0, &sig, &Caps::default()).unwrap().unwrap();
        let v = nd_derivation_json(&best.witness, &sig);
        assert_eq!(v["rule"], "app");
        assert_eq!(v["m"], 0);
        assert_eq!(v["judgment"]["Z"], 0);
        assert_eq!(v["children"][0]["kValues"][0], 1);
        assert!(v["balancedFlags"].is_array());
    }
}
