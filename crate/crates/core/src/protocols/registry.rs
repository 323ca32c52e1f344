//! Name-based lookup of every built-in protocol.

use crate::error::{CrnError, Result};
use crate::model::rational_int;
use crate::predicate;

use super::{crd, examples, va, ProtocolBundle};

/// Registry names, worked examples first, then constructions.
pub fn registry_names() -> Vec<&'static str> {
    vec![
        "kill-b",
        "multiple-pitfalls",
        "round-inflation",
        "skipping-policy",
        "fixed-policy",
        "singleton-policy",
        "superset-policy",
        "cartesian-product",
        "random-walk-broadcast",
        "threshold",
        "modulo",
        "closure",
        "detection",
        "va",
        "va-compiled",
    ]
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Build a protocol by registry name. `multiple-pitfalls` uses `k = 3`;
/// `multiple-pitfalls-<k>` selects another pitfall level.
pub fn registry(name: &str) -> Result<ProtocolBundle> {
    match name {
        "kill-b" => examples::kill_b(),
        "multiple-pitfalls" => examples::multiple_pitfalls(3),
        "round-inflation" => examples::round_inflation(),
        "skipping-policy" => examples::skipping_policy(),
        "fixed-policy" => examples::fixed_policy(),
        "singleton-policy" => examples::singleton_policy(),
        "superset-policy" => examples::superset_policy(),
        "cartesian-product" => examples::cartesian_product(),
        "random-walk-broadcast" => examples::random_walk_broadcast(),
        "threshold" => crd::threshold_crd(&names(&["A", "B"]), &[1, -1], 1),
        "modulo" => crd::modulo_crd(&names(&["A", "B"]), &[1, 2], 0, 3),
        "closure" => predicate::compile(&predicate::parse("thr(A < 2) & mod(A == 0 % 2)")?),
        "detection" => crd::detection_crd(&names(&["A", "B"]), &[false, false, false, true]),
        "va" => va::va_protocol(&names(&["P0"]), &names(&["P1"])),
        "va-compiled" => {
            let inner = crd::threshold_crd(&names(&["A"]), &[1], 1)?;
            va::vote_amplified_compile(&inner, &rational_int(1))
        }
        other => match other.strip_prefix("multiple-pitfalls-").and_then(|k| k.parse::<usize>().ok()) {
            Some(k) if (1..=16).contains(&k) => examples::multiple_pitfalls(k),
            _ => Err(CrnError::UnknownProtocol { name: other.to_string() }),
        },
    }
}
