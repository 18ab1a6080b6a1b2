//! Graph recursion integration: exact module-graph path sums and the
//! resulting variance lower bound, plus Monte Carlo checks of the Haar
//! moment identities they rest on.

mod bound;
mod graph;
mod montecarlo;
mod tables;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Pow, ToPrimitive};
use serde::Serializer;

use crate::{Error, Result};

pub use bound::{
    backward_factor, corollary_scaling_check, detect_case, lower_bound, BoundInputs, BoundResult, CaseDetection,
    LayerChoice, Position, ScalingReport,
};
pub use graph::{build_graph, path_sum, path_sum_with_count, FlagPolicy, GraphEdge, GrimCase, GrimGraph, PathSum, Phase};
pub use montecarlo::{
    center_module_coefficient, center_module_contraction, verify_module_integration, verify_weingarten_moments,
    weingarten_first_moment, weingarten_second_moment, ModuleIntegrationReport, ModuleType, PatternEstimate,
    WeingartenReport, MIN_SAMPLES,
};
pub use tables::{
    all_entries, edge_row, format_tables, middle_row, node_spec, range_violations, terminal_weight, transition_row,
    EntryFlag, NodeId, NodeSpec, Sequence, TableEntry, WireSet,
};

/// Exact rational in canonical form.
pub type Rational = BigRational;

pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `a/b`, an integer or a plain decimal such as `0.75`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::InvalidConfig(format!("'{text}' is not a rational number"));
    if let Some((int, frac)) = t.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let digits = format!("{}{frac}", int.trim_start_matches(['-', '+']));
        let num: BigInt = digits.parse().map_err(|_| bad())?;
        let num = if negative { -num } else { num };
        return Ok(Rational::new(num, BigInt::from(10u32).pow(frac.len() as u32)));
    }
    let r: Rational = t.parse().map_err(|_| bad())?;
    Ok(r)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub(crate) fn serialize_rational<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

pub(crate) fn serialize_signature<S: Serializer>(
    m: &BTreeMap<WireSet, Rational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        let key: Vec<String> = k.iter().map(|w| w.to_string()).collect();
        map.serialize_entry(&format!("{{{}}}", key.join(",")), &v.to_string())?;
    }
    map.end()
}
