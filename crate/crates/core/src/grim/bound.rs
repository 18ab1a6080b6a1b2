use num_bigint::BigUint;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::graph::{build_graph, path_sum_with_count, FlagPolicy, GrimCase};
use super::{rational, to_f64, Rational};
use crate::qcnn::{ParamLocation, QcnnTopology, SubLayer};
use crate::{Error, Result};

/// Placement of the differentiated block inside its convolution layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    FirstSublayer,
    SecondSublayerEdge,
    SecondSublayerInner,
}

impl std::str::FromStr for Position {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" | "first_sublayer" => Ok(Position::FirstSublayer),
            "second-edge" | "second_sublayer_edge" => Ok(Position::SecondSublayerEdge),
            "second-inner" | "second_sublayer_inner" => Ok(Position::SecondSublayerInner),
            other => Err(Error::InvalidConfig(format!("unknown position '{other}'"))),
        }
    }
}

/// Light-cone factor for a block in layer `ell` of `total_layers`, with the
/// leading `1/50` of the bound folded in.
pub fn backward_factor(position: Position, total_layers: usize, ell: usize) -> Result<Rational> {
    if ell == 0 || ell > total_layers {
        return Err(Error::InvalidConfig(format!("layer {ell} outside 1..={total_layers}")));
    }
    let depth = (total_layers - ell) as i32;
    let lead = match position {
        Position::FirstSublayer => rational(1, 50),
        Position::SecondSublayerEdge => rational(1, 250),
        Position::SecondSublayerInner => rational(1, 2500),
    };
    Ok(lead * rational(1, 50).pow(depth))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundInputs {
    pub n_qubits: usize,
    pub total_layers: usize,
    pub layer: usize,
    pub position: Position,
    pub case: GrimCase,
    pub trace_h2: Rational,
    pub eps_o: Rational,
    pub eps_sigma: Rational,
    pub policy: FlagPolicy,
}

impl BoundInputs {
    /// `Tr[H^2] = 1`, `eps_O = 4`, `eps_sigma = 3/4`: a `Z/2` generator,
    /// the `Z (x) Z` readout and the all-zero input.
    pub fn with_defaults(n_qubits: usize, total_layers: usize, layer: usize, position: Position, case: GrimCase) -> Self {
        Self {
            n_qubits,
            total_layers,
            layer,
            position,
            case,
            trace_h2: rational(1, 1),
            eps_o: rational(4, 1),
            eps_sigma: rational(3, 4),
            policy: FlagPolicy::Exclude,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundResult {
    pub value: Rational,
    pub path_sum: Rational,
    pub backward_factor: Rational,
    pub case: GrimCase,
    pub walks: BigUint,
}

impl BoundResult {
    pub fn value_f64(&self) -> f64 {
        to_f64(&self.value)
    }
}

pub fn lower_bound(inputs: &BoundInputs) -> Result<BoundResult> {
    for (name, v) in [("trace_h2", &inputs.trace_h2), ("eps_o", &inputs.eps_o), ("eps_sigma", &inputs.eps_sigma)] {
        if v.is_negative() {
            return Err(Error::InvalidConfig(format!("{name} must be non-negative, got {v}")));
        }
    }
    let backward = backward_factor(inputs.position, inputs.total_layers, inputs.layer)?;
    let graph = build_graph(inputs.case, inputs.layer - 1, inputs.policy)?;
    let ps = path_sum_with_count(&graph, inputs.layer)?;
    let value = rational(1, 9) * &inputs.trace_h2 * &inputs.eps_o * &inputs.eps_sigma * &backward * &ps.value;
    Ok(BoundResult { value, path_sum: ps.value, backward_factor: backward, case: inputs.case, walks: ps.walks })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseDetection {
    pub case: GrimCase,
    pub position: Position,
    /// Layer index counted from the output (fully connected layer = 1).
    pub ell: usize,
    pub total_layers: usize,
}

fn bit_length(x: usize) -> usize {
    (usize::BITS - x.leading_zeros()) as usize
}

/// Classifies the light cone of the block at `loc`.
///
/// With `m` first-sub-layer blocks the centre block is `(m - 1) / 2` and the
/// edge blocks are `0` and `m - 1`. A second-sub-layer block `j` sits
/// between first-sub-layer blocks `j` and `j + 1`. Other blocks are middle
/// blocks; a middle block at distance `d` from the edge keeps to middle
/// modules for `bit_length(d)` layers before its cone reaches the edge.
pub fn detect_case(topology: &QcnnTopology, loc: &ParamLocation) -> Result<CaseDetection> {
    let total = topology.total_layers();
    if loc.layer == 0 || loc.layer > total {
        return Err(Error::InvalidLocation(format!("layer {} outside 1..={total}", loc.layer)));
    }
    let ell = total - loc.layer + 1;
    let fc = CaseDetection { case: GrimCase::Case1, position: Position::FirstSublayer, ell, total_layers: total };
    if loc.layer == total {
        if loc.sub_layer != SubLayer::First || loc.block != 0 {
            return Err(Error::InvalidLocation("the fully connected layer has one block".into()));
        }
        return Ok(fc);
    }
    let conv = topology
        .conv_layer(loc.layer)
        .ok_or_else(|| Error::InvalidLocation(format!("no convolution layer {}", loc.layer)))?;
    let m = conv.first_sub_layer.len();
    let j = loc.block;
    let center = (m - 1) / 2;
    let (is_center, is_edge, distance, position) = match loc.sub_layer {
        SubLayer::First => {
            if j >= m {
                return Err(Error::InvalidLocation(format!("block {j} >= {m} in first sub-layer")));
            }
            (j == center, j == 0 || j == m - 1, j.min(m - 1 - j), Position::FirstSublayer)
        }
        SubLayer::Second => {
            let count = conv.second_sub_layer.len();
            if j >= count {
                return Err(Error::InvalidLocation(format!("block {j} >= {count} in second sub-layer")));
            }
            let edge = j == 0 || j + 1 == count;
            let pos = if edge { Position::SecondSublayerEdge } else { Position::SecondSublayerInner };
            (j == center || j + 1 == center, edge, j.min(count - 1 - j), pos)
        }
    };
    let case = if ell == 1 || is_center {
        GrimCase::Case1
    } else if is_edge || ell < 3 {
        GrimCase::Case2
    } else {
        let middle = bit_length(distance).min(ell - 2);
        GrimCase::Case3 { middle, edge: ell - 1 - middle }
    };
    Ok(CaseDetection { case, position, ell, total_layers: total })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerChoice {
    /// `ell = L`: the widest convolution layer.
    Deepest,
    /// A fixed `ell` for every `n`.
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub n_values: Vec<u64>,
    pub bounds: Vec<Rational>,
    /// Exact `F_{2n} / F_n` predicted by the closed form.
    pub doubling_ratio: Rational,
    /// Every consecutive ratio equals `doubling_ratio`.
    pub ratios_exact: bool,
    /// `F_n / doubling_ratio^L`, identical for every `n` when the bound is
    /// exactly `K n^(-c)`.
    pub prefactor: Rational,
    pub prefactor_constant: bool,
    pub analytic_exponent: f64,
    pub fitted_exponent: f64,
}

/// Bound family for centre blocks over `n_values` (powers of two, `L =
/// log2 n`), with a least-squares exponent fit of `log F` against `log n`.
pub fn corollary_scaling_check(
    n_values: &[u64],
    choice: LayerChoice,
    trace_h2: &Rational,
    eps_o: &Rational,
    eps_sigma: &Rational,
) -> Result<ScalingReport> {
    if n_values.len() < 2 {
        return Err(Error::InvalidConfig("need at least two system sizes".into()));
    }
    let mut bounds = Vec::new();
    let mut layers = Vec::new();
    for &n in n_values {
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidConfig(format!("n = {n} is not a power of two >= 4")));
        }
        let big_l = n.trailing_zeros() as usize;
        let ell = match choice {
            LayerChoice::Deepest => big_l,
            LayerChoice::Fixed(e) => e,
        };
        let mut inputs = BoundInputs::with_defaults(n as usize, big_l, ell, Position::FirstSublayer, GrimCase::Case1);
        inputs.trace_h2 = trace_h2.clone();
        inputs.eps_o = eps_o.clone();
        inputs.eps_sigma = eps_sigma.clone();
        bounds.push(lower_bound(&inputs)?.value);
        layers.push(big_l);
    }
    let doubling_ratio = match choice {
        LayerChoice::Deepest => rational(28, 125),
        LayerChoice::Fixed(_) => rational(1, 50),
    };
    let ratios_exact = n_values.windows(2).zip(bounds.windows(2)).all(|(n, f)| {
        let steps = (n[1].trailing_zeros() as i32) - (n[0].trailing_zeros() as i32);
        !f[0].is_zero() && &f[1] / &f[0] == doubling_ratio.pow(steps)
    });
    let scaled: Vec<Rational> = bounds.iter().zip(&layers).map(|(f, &l)| f / doubling_ratio.pow(l as i32)).collect();
    let prefactor = scaled[0].clone();
    let prefactor_constant = scaled.iter().all(|s| *s == prefactor);
    let xs: Vec<f64> = n_values.iter().map(|&n| (n as f64).log2()).collect();
    let ys: Vec<f64> = bounds.iter().map(|f| to_f64(f).log2()).collect();
    let count = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / count;
    let my = ys.iter().sum::<f64>() / count;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let fitted_exponent = if eps_o.is_zero() || trace_h2.is_zero() || eps_sigma.is_zero() { f64::NAN } else { -sxy / sxx };
    Ok(ScalingReport {
        n_values: n_values.to_vec(),
        bounds,
        analytic_exponent: -to_f64(&doubling_ratio).log2(),
        doubling_ratio,
        ratios_exact,
        prefactor,
        prefactor_constant,
        fitted_exponent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcnn::{BindingMode, build_qcnn};

    #[test]
    fn factors_per_position() {
        assert_eq!(backward_factor(Position::FirstSublayer, 3, 3).unwrap(), rational(1, 50));
        assert_eq!(backward_factor(Position::FirstSublayer, 3, 1).unwrap(), rational(1, 125_000));
        assert_eq!(backward_factor(Position::SecondSublayerEdge, 2, 1).unwrap(), rational(1, 12_500));
        assert_eq!(backward_factor(Position::SecondSublayerInner, 2, 2).unwrap(), rational(1, 2500));
        assert!(backward_factor(Position::FirstSublayer, 2, 3).is_err());
        assert!(backward_factor(Position::FirstSublayer, 2, 0).is_err());
    }

    #[test]
    fn one_extra_layer_divides_by_fifty() {
        let a = lower_bound(&BoundInputs::with_defaults(8, 3, 2, Position::FirstSublayer, GrimCase::Case1)).unwrap();
        let b = lower_bound(&BoundInputs::with_defaults(16, 4, 2, Position::FirstSublayer, GrimCase::Case1)).unwrap();
        assert_eq!(&a.value / &b.value, rational(50, 1));
    }

    #[test]
    fn negative_inputs_are_rejected() {
        let mut i = BoundInputs::with_defaults(4, 2, 1, Position::FirstSublayer, GrimCase::Case1);
        i.eps_o = rational(-1, 2);
        assert!(lower_bound(&i).is_err());
    }

    #[test]
    fn detection_on_sixteen_qubits() {
        let q = build_qcnn(16, BindingMode::Uncorrelated).unwrap();
        let t = q.topology();
        let at = |layer, sub_layer, block| {
            detect_case(t, &ParamLocation { layer, sub_layer, block, angle: 0 }).unwrap()
        };
        let d = at(1, SubLayer::First, 3);
        assert_eq!((d.case, d.ell), (GrimCase::Case1, 4));
        assert_eq!(at(1, SubLayer::First, 0).case, GrimCase::Case2);
        assert_eq!(at(1, SubLayer::First, 7).case, GrimCase::Case2);
        assert_eq!(at(1, SubLayer::First, 5).case, GrimCase::Case3 { middle: 2, edge: 1 });
        assert_eq!(at(1, SubLayer::First, 1).case, GrimCase::Case3 { middle: 1, edge: 2 });
        assert_eq!(at(1, SubLayer::Second, 0).position, Position::SecondSublayerEdge);
        assert_eq!(at(1, SubLayer::Second, 3).position, Position::SecondSublayerInner);
        assert_eq!(at(1, SubLayer::Second, 2).case, GrimCase::Case1);
        let fc = at(4, SubLayer::First, 0);
        assert_eq!((fc.case, fc.ell), (GrimCase::Case1, 1));
        assert!(detect_case(t, &ParamLocation { layer: 1, sub_layer: SubLayer::First, block: 8, angle: 0 }).is_err());
    }
}
