//! Library side of the `lq` command line tool: machine-readable reports,
//! corpus generation, term families, and the self-test suite.

pub mod corpus;
pub mod family;
pub mod report;
pub mod selftest;

use lq_core::Caps;

/// Parses a `LQ_CAPS` override string such as
/// `max_sort_order=4,max_derivations=2000000`.
pub fn parse_caps_override(base: Caps, spec: &str) -> Result<Caps, String> {
    let mut caps = base;
    for item in spec.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let Some((key, value)) = item.split_once('=') else {
            return Err(format!("malformed caps entry '{}' (expected key=value)", item));
        };
        let key = key.trim();
        let value = value.trim();
        let parse_usize =
            |v: &str| v.parse::<usize>().map_err(|_| format!("invalid number '{}'", v));
        let parse_u32 = |v: &str| v.parse::<u32>().map_err(|_| format!("invalid number '{}'", v));
        let parse_u64 = |v: &str| v.parse::<u64>().map_err(|_| format!("invalid number '{}'", v));
        match key {
            "max_sort_order" => caps.max_sort_order = parse_u32(value)?,
            "max_type_space" => caps.max_type_space = parse_usize(value)?,
            "max_order" => caps.max_order = parse_u32(value)?,
            "max_derivations" => caps.max_derivations = parse_usize(value)?,
            "step_budget" => caps.step_budget = parse_u64(value)?,
            other => return Err(format!("unknown caps key '{}'", other)),
        }
    }
    Ok(caps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caps_override_parses_known_keys() {
        let caps = parse_caps_override(Caps::default(), "max_sort_order=4, step_budget=42").unwrap();
        assert_eq!(caps.max_sort_order, 4);
        assert_eq!(caps.step_budget, 42);
        assert_eq!(caps.max_type_space, Caps::default().max_type_space);
    }

    #[test]
    fn caps_override_rejects_unknown_keys() {
        assert!(parse_caps_override(Caps::default(), "nope=1").is_err());
        assert!(parse_caps_override(Caps::default(), "max_order").is_err());
    }
}
