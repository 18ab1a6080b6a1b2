//! QCNN architecture, cost evaluation and parameter-shift gradients.

mod ansatz;
mod topology;

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use ansatz::{block_matrix, reference_skeleton, BlockOp, ANGLES_PER_BLOCK, BLOCK_SEQUENCE};
pub use topology::{next_active_count, Block, BlockRole, ConvLayer, PoolLayer, QcnnTopology, Stage, SubLayer};

use crate::simkit::{Mat4, Observable, StateVector, C64};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BindingMode {
    /// One angle set per convolution layer, shared by all its blocks.
    #[serde(rename = "corr")]
    Correlated,
    /// An independent angle set for every block.
    #[serde(rename = "uncorr")]
    Uncorrelated,
}

impl BindingMode {
    pub fn label(self) -> &'static str {
        match self {
            BindingMode::Correlated => "corr",
            BindingMode::Uncorrelated => "uncorr",
        }
    }
}

impl std::str::FromStr for BindingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corr" | "correlated" => Ok(BindingMode::Correlated),
            "uncorr" | "uncorrelated" => Ok(BindingMode::Uncorrelated),
            other => Err(Error::InvalidConfig(format!("unknown binding mode '{other}'"))),
        }
    }
}

/// Identifies one angle of one block. Layer 1 is the widest convolution
/// layer; the fully connected block is layer `conv_layers + 1`, sub-layer
/// `First`, block 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLocation {
    pub layer: usize,
    pub sub_layer: SubLayer,
    pub block: usize,
    pub angle: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Readout {
    ZZ,
    Custom(DMatrix<C64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Qcnn {
    topology: QcnnTopology,
    mode: BindingMode,
    slots: Vec<usize>,
    slot_count: usize,
    readout: Readout,
}

pub fn build_qcnn(n_qubits: usize, mode: BindingMode) -> Result<Qcnn> {
    Qcnn::from_topology(QcnnTopology::new(n_qubits)?, mode)
}

impl Qcnn {
    pub fn from_topology(topology: QcnnTopology, mode: BindingMode) -> Result<Self> {
        let conv = topology.conv_layer_count();
        let mut spectator_slot = conv + 1;
        let slots: Vec<usize> = match mode {
            BindingMode::Uncorrelated => (0..topology.blocks().len()).collect(),
            BindingMode::Correlated => topology
                .blocks()
                .iter()
                .map(|b| match b.role {
                    BlockRole::Conv { layer, .. } => layer - 1,
                    BlockRole::FullyConnected => conv,
                    BlockRole::Spectator { .. } => {
                        spectator_slot += 1;
                        spectator_slot - 1
                    }
                })
                .collect(),
        };
        let slot_count = slots.iter().max().map_or(0, |m| m + 1);
        Ok(Self { topology, mode, slots, slot_count, readout: Readout::ZZ })
    }

    /// Replaces the `Z (x) Z` readout with a Hermitian 4x4 observable on the
    /// readout pair.
    pub fn with_readout(mut self, matrix: DMatrix<C64>) -> Result<Self> {
        let (a, b) = self.topology.readout_qubits();
        Observable::new(vec![a, b], matrix.clone())?;
        self.readout = Readout::Custom(matrix);
        Ok(self)
    }

    pub fn topology(&self) -> &QcnnTopology {
        &self.topology
    }

    pub fn mode(&self) -> BindingMode {
        self.mode
    }

    pub fn param_count(&self) -> usize {
        self.slot_count * ANGLES_PER_BLOCK
    }

    /// Parameter slot used by each block, in application order.
    pub fn slots(&self) -> &[usize] {
        &self.slots
    }

    /// Centre block of the widest layer's first sub-layer, first angle.
    pub fn default_location(&self) -> ParamLocation {
        let m = self.topology.conv_layer(1).map_or(1, |c| c.first_sub_layer.len());
        ParamLocation { layer: 1, sub_layer: SubLayer::First, block: (m - 1) / 2, angle: 0 }
    }

    pub fn resolve(&self, loc: &ParamLocation) -> Result<usize> {
        if loc.angle >= ANGLES_PER_BLOCK {
            return Err(Error::InvalidLocation(format!("angle index {} >= {ANGLES_PER_BLOCK}", loc.angle)));
        }
        let conv = self.topology.conv_layer_count();
        let role = if loc.layer == conv + 1 {
            if loc.sub_layer != SubLayer::First || loc.block != 0 {
                return Err(Error::InvalidLocation("the fully connected layer has one block".into()));
            }
            BlockRole::FullyConnected
        } else {
            BlockRole::Conv { layer: loc.layer, sub_layer: loc.sub_layer, index: loc.block }
        };
        self.topology.block_index(role).ok_or_else(|| {
            Error::InvalidLocation(format!("no block {} in layer {} ({:?})", loc.block, loc.layer, loc.sub_layer))
        })
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch { expected: self.param_count(), actual: params.len() });
        }
        Ok(())
    }

    fn block_angles<'a>(&self, params: &'a [f64], block: usize) -> &'a [f64] {
        let s = self.slots[block] * ANGLES_PER_BLOCK;
        &params[s..s + ANGLES_PER_BLOCK]
    }

    fn block_matrices(&self, params: &[f64]) -> Vec<Mat4> {
        (0..self.slots.len())
            .map(|k| block_matrix(self.block_angles(params, k)).expect("slot width is fixed"))
            .collect()
    }

    fn readout_value(&self, state: &StateVector) -> f64 {
        let (a, b) = self.topology.readout_qubits();
        match &self.readout {
            Readout::ZZ => state.zz_expectation(a, b),
            Readout::Custom(m) => {
                let obs = Observable::new(vec![a, b], m.clone()).expect("validated in with_readout");
                state.expectation(&obs).expect("readout qubits are in range")
            }
        }
    }

    fn initial_state(&self, input: Option<&StateVector>) -> Result<StateVector> {
        match input {
            None => Ok(StateVector::zero(self.topology.n_qubits())),
            Some(s) if s.n_qubits() == self.topology.n_qubits() => Ok(s.clone()),
            Some(s) => Err(Error::DimensionMismatch { expected: self.topology.n_qubits(), actual: s.n_qubits() }),
        }
    }

    fn run_from(&self, mut state: StateVector, mats: &[Mat4], start: usize) -> f64 {
        for (k, m) in mats.iter().enumerate().skip(start) {
            let (a, b) = self.topology.blocks()[k].qubits;
            state.apply_matrix(a, b, m);
        }
        self.readout_value(&state)
    }

    /// Readout expectation for the given parameters, starting from `input`
    /// or `|0...0>`.
    pub fn evaluate_cost(&self, params: &[f64], input: Option<&StateVector>) -> Result<f64> {
        self.check_params(params)?;
        let state = self.initial_state(input)?;
        Ok(self.run_from(state, &self.block_matrices(params), 0))
    }

    /// Derivative of the cost with respect to the parameter at `loc`.
    ///
    /// In correlated mode the parameter is shared, so the two-term shift is
    /// applied to each block that uses it and the results are summed.
    pub fn parameter_shift_gradient(&self, params: &[f64], loc: &ParamLocation, input: Option<&StateVector>) -> Result<f64> {
        let block = self.resolve(loc)?;
        self.gradient_at_block(params, block, loc.angle, input)
    }

    /// As [`Qcnn::parameter_shift_gradient`], addressing the block by its
    /// position in [`QcnnTopology::blocks`].
    pub fn gradient_at_block(&self, params: &[f64], block: usize, angle: usize, input: Option<&StateVector>) -> Result<f64> {
        self.check_params(params)?;
        if block >= self.slots.len() || angle >= ANGLES_PER_BLOCK {
            return Err(Error::InvalidLocation(format!("block {block}, angle {angle}")));
        }
        let slot = self.slots[block];
        let mut mats = self.block_matrices(params);
        let mut prefix = self.initial_state(input)?;
        let mut grad = 0.0;
        for k in 0..mats.len() {
            if self.slots[k] == slot {
                let mut angles: Vec<f64> = self.block_angles(params, k).to_vec();
                let base = angles[angle];
                let original = mats[k];
                let mut shifted = |delta: f64| {
                    angles[angle] = base + delta;
                    mats[k] = block_matrix(&angles).expect("slot width is fixed");
                    self.run_from(prefix.clone(), &mats, k)
                };
                grad += 0.5 * (shifted(FRAC_PI_2) - shifted(-FRAC_PI_2));
                mats[k] = original;
            }
            let (a, b) = self.topology.blocks()[k].qubits;
            prefix.apply_matrix(a, b, &mats[k]);
        }
        Ok(grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_params(q: &Qcnn, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..q.param_count()).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect()
    }

    #[test]
    fn parameter_counts() {
        let u = build_qcnn(8, BindingMode::Uncorrelated).unwrap();
        assert_eq!(u.param_count(), 11 * ANGLES_PER_BLOCK);
        let c = build_qcnn(8, BindingMode::Correlated).unwrap();
        assert_eq!(c.param_count(), 3 * ANGLES_PER_BLOCK);
    }

    #[test]
    fn zero_angles_route_input_through_swaps() {
        let q = build_qcnn(4, BindingMode::Uncorrelated).unwrap();
        let params = vec![0.0; q.param_count()];
        assert!((q.evaluate_cost(&params, None).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn shift_rule_matches_finite_difference() {
        for mode in [BindingMode::Uncorrelated, BindingMode::Correlated] {
            let q = build_qcnn(6, mode).unwrap();
            let params = random_params(&q, 5);
            for loc in [
                q.default_location(),
                ParamLocation { layer: 2, sub_layer: SubLayer::Second, block: 0, angle: 7 },
                ParamLocation { layer: 3, sub_layer: SubLayer::First, block: 0, angle: 12 },
            ] {
                let g = q.parameter_shift_gradient(&params, &loc, None).unwrap();
                let idx = q.slots()[q.resolve(&loc).unwrap()] * ANGLES_PER_BLOCK + loc.angle;
                let h = 1e-5;
                let mut p = params.clone();
                p[idx] += h;
                let up = q.evaluate_cost(&p, None).unwrap();
                p[idx] -= 2.0 * h;
                let down = q.evaluate_cost(&p, None).unwrap();
                assert!((g - (up - down) / (2.0 * h)).abs() < 1e-8, "{mode:?} {loc:?}");
            }
        }
    }

    #[test]
    fn bad_locations_are_rejected() {
        let q = build_qcnn(4, BindingMode::Uncorrelated).unwrap();
        let p = vec![0.0; q.param_count()];
        let bad = [
            ParamLocation { layer: 1, sub_layer: SubLayer::First, block: 2, angle: 0 },
            ParamLocation { layer: 1, sub_layer: SubLayer::First, block: 0, angle: 15 },
            ParamLocation { layer: 2, sub_layer: SubLayer::Second, block: 0, angle: 0 },
            ParamLocation { layer: 4, sub_layer: SubLayer::First, block: 0, angle: 0 },
        ];
        for loc in bad {
            assert!(matches!(q.parameter_shift_gradient(&p, &loc, None), Err(Error::InvalidLocation(_))));
        }
        assert!(q.evaluate_cost(&p[1..], None).is_err());
    }
}
