//! Pooling-only QCNN: identity convolutions, controlled-Y pooling.
//!
//! Each pooling step maps a pair of identical single-qubit states to one
//! state through `|+><+| (x) Ry(theta_+) + |-><-| (x) Ry(theta_-)` followed
//! by a trace over the control. With `theta_+- = +-theta` the Bloch
//! z-component is multiplied by `cos theta` per step.

mod quadrature;

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use quadrature::integrate;

use crate::simkit::{kron2, ry, DensityOperator, Mat2, StateVector, TwoQubitGate, C64};
use crate::{Error, Result};

/// Absolute tolerance handed to every quadrature call.
pub const QUADRATURE_TOL: f64 = 1e-12;

/// Largest depth for which the nested multi-dimensional quadrature runs.
pub const MAX_NESTED_DEPTH: usize = 3;

const MAX_DEPTH: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoolingMode {
    /// One angle shared by every pooling layer.
    #[serde(rename = "corr")]
    Correlated,
    /// One angle per pooling layer.
    #[serde(rename = "uncorr")]
    Uncorrelated,
}

impl PoolingMode {
    pub fn label(self) -> &'static str {
        match self {
            PoolingMode::Correlated => "corr",
            PoolingMode::Uncorrelated => "uncorr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolingModel {
    depth: usize,
    mode: PoolingMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolingState {
    pub rho_00: f64,
    pub rho_11: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientMagnitude {
    /// Primary quadrature estimate.
    pub quadrature: f64,
    /// Full nested quadrature over every angle, when the depth allows it.
    pub nested: Option<f64>,
    /// Closed form, available for the deepest cost.
    pub analytic: Option<f64>,
}

impl PoolingModel {
    pub fn new(depth: usize, mode: PoolingMode) -> Result<Self> {
        if depth == 0 || depth > MAX_DEPTH {
            return Err(Error::InvalidConfig(format!("pooling depth must be in 1..={MAX_DEPTH}, got {depth}")));
        }
        Ok(Self { depth, mode })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn mode(&self) -> PoolingMode {
        self.mode
    }

    pub fn n_qubits(&self) -> u64 {
        1u64 << self.depth
    }

    pub fn param_count(&self) -> usize {
        match self.mode {
            PoolingMode::Correlated => 1,
            PoolingMode::Uncorrelated => self.depth,
        }
    }

    fn check(&self, params: &[f64], layer: usize) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::DimensionMismatch { expected: self.param_count(), actual: params.len() });
        }
        if layer > self.depth {
            return Err(Error::InvalidConfig(format!("layer {layer} exceeds depth {}", self.depth)));
        }
        Ok(())
    }

    /// Angle used by pooling layer `k` (1-based).
    fn angle(&self, params: &[f64], k: usize) -> f64 {
        match self.mode {
            PoolingMode::Correlated => params[0],
            PoolingMode::Uncorrelated => params[k - 1],
        }
    }

    /// Number of copies measured by the cost at `layer`.
    fn copies(&self, layer: usize) -> i32 {
        1i32 << (self.depth - layer)
    }
}

fn bloch_z(model: &PoolingModel, params: &[f64], layer: usize) -> f64 {
    (1..=layer).map(|k| model.angle(params, k).cos()).product()
}

/// Populations after `layer` pooling steps.
pub fn pooled_state(model: &PoolingModel, params: &[f64], layer: usize) -> Result<PoolingState> {
    model.check(params, layer)?;
    let z = bloch_z(model, params, layer);
    Ok(PoolingState { rho_00: 0.5 * (1.0 + z), rho_11: 0.5 * (1.0 - z) })
}

/// The two-qubit pooling unitary, control on local bit 0.
pub fn pooling_unitary(theta_plus: f64, theta_minus: f64) -> TwoQubitGate {
    let h = 0.5;
    let plus = Mat2::new(C64::from(h), C64::from(h), C64::from(h), C64::from(h));
    let minus = Mat2::new(C64::from(h), C64::from(-h), C64::from(-h), C64::from(h));
    let m = kron2(&ry(theta_plus), &plus) + kron2(&ry(theta_minus), &minus);
    TwoQubitGate::new(0, 1, m).expect("pooling unitary is unitary")
}

/// Iterates the pooling channel on explicit density matrices.
pub fn channel_pooled_state(model: &PoolingModel, params: &[f64], layer: usize) -> Result<DensityOperator> {
    model.check(params, layer)?;
    let mut rho = StateVector::zero(1).to_density();
    for k in 1..=layer {
        let t = model.angle(params, k);
        let mut pair = rho.tensor(&rho);
        pair.apply_gate(&pooling_unitary(t, -t))?;
        rho = pair.partial_trace(&[1])?;
    }
    Ok(rho)
}

/// `1 - rho_00^(n / 2^layer)`.
pub fn pooling_cost(model: &PoolingModel, params: &[f64], layer: usize) -> Result<f64> {
    let s = pooled_state(model, params, layer)?;
    Ok(1.0 - s.rho_00.powi(model.copies(layer)))
}

/// Analytic gradient of [`pooling_cost`] with respect to every parameter.
pub fn pooling_cost_gradient(model: &PoolingModel, params: &[f64], layer: usize) -> Result<Vec<f64>> {
    let s = pooled_state(model, params, layer)?;
    let m = model.copies(layer);
    let outer = -f64::from(m) * s.rho_00.powi(m - 1) * 0.5;
    let grad = match model.mode {
        PoolingMode::Correlated => {
            let (sin, cos) = params[0].sin_cos();
            let dz = if layer == 0 { 0.0 } else { -(layer as f64) * cos.powi(layer as i32 - 1) * sin };
            vec![outer * dz]
        }
        PoolingMode::Uncorrelated => (1..=model.depth)
            .map(|k| {
                if k > layer {
                    return 0.0;
                }
                let others: f64 = (1..=layer).filter(|&i| i != k).map(|i| params[i - 1].cos()).product();
                outer * -params[k - 1].sin() * others
            })
            .collect(),
    };
    Ok(grad)
}

/// Closed-form expected gradient magnitude of the deepest cost.
pub fn analytic_gradient_magnitude(model: &PoolingModel) -> f64 {
    match model.mode {
        PoolingMode::Correlated => 1.0 / PI,
        PoolingMode::Uncorrelated => 0.5 * (2.0 / PI).powi(model.depth as i32),
    }
}

const BREAKS: [f64; 5] = [-PI, -FRAC_PI_2, 0.0, FRAC_PI_2, PI];

fn average_1d<F: FnMut(f64) -> Result<f64>>(f: F) -> Result<f64> {
    Ok(integrate(f, &BREAKS, QUADRATURE_TOL * TAU)? / TAU)
}

/// Mean over `dims` angles uniform on `[-pi, pi]` by nested 1-D quadrature.
fn average_nested(f: &mut dyn FnMut(&[f64]) -> Result<f64>, dims: usize, prefix: &mut Vec<f64>) -> Result<f64> {
    if dims == 0 {
        return f(prefix);
    }
    average_1d(|x| {
        prefix.push(x);
        let v = average_nested(f, dims - 1, prefix);
        prefix.pop();
        v
    })
}

/// Expected `|dC^(layer) / d theta^(k)|` over angles uniform on `[-pi, pi]`.
/// `k` is 1-based; in correlated mode it must be 1.
pub fn expected_gradient_magnitude(model: &PoolingModel, layer: usize, k: usize) -> Result<GradientMagnitude> {
    if layer == 0 || layer > model.depth {
        return Err(Error::InvalidConfig(format!("layer must be in 1..={}", model.depth)));
    }
    if k == 0 || k > model.param_count() {
        return Err(Error::InvalidConfig(format!("parameter index {k} out of range 1..={}", model.param_count())));
    }
    let analytic = (layer == model.depth).then(|| analytic_gradient_magnitude(model));
    match model.mode {
        PoolingMode::Correlated => {
            let q = average_1d(|t| Ok(pooling_cost_gradient(model, &[t], layer)?[0].abs()))?;
            Ok(GradientMagnitude { quadrature: q, nested: None, analytic })
        }
        PoolingMode::Uncorrelated => {
            if k > layer {
                return Ok(GradientMagnitude { quadrature: 0.0, nested: Some(0.0), analytic });
            }
            let nested = if layer <= MAX_NESTED_DEPTH {
                let mut params = vec![0.0; model.depth];
                let mut f = |angles: &[f64]| {
                    params[..layer].copy_from_slice(angles);
                    Ok(pooling_cost_gradient(model, &params, layer)?[k - 1].abs())
                };
                Some(average_nested(&mut f, layer, &mut Vec::with_capacity(layer))?)
            } else {
                None
            };
            let quadrature = if layer == model.depth {
                let sin_mean = average_1d(|t| Ok(t.sin().abs()))?;
                let cos_mean = average_1d(|t| Ok(t.cos().abs()))?;
                0.5 * sin_mean * cos_mean.powi(layer as i32 - 1)
            } else {
                nested.ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "uncorrelated layer {layer} < depth needs nested quadrature, limited to {MAX_NESTED_DEPTH} dimensions"
                    ))
                })?
            };
            Ok(GradientMagnitude { quadrature, nested, analytic })
        }
    }
}

/// One CSV row comparing quadrature with the closed form at full depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolingRow {
    #[serde(rename = "L")]
    pub depth: usize,
    pub n: u64,
    pub mode: PoolingMode,
    pub expected_grad_magnitude: f64,
    pub analytic_value: f64,
    pub abs_error: f64,
}

/// Rows for depths `1..=depth_max`, differentiating the first parameter.
pub fn pooling_table(depth_max: usize, mode: PoolingMode) -> Result<Vec<PoolingRow>> {
    if depth_max == 0 {
        return Err(Error::InvalidConfig("depth must be at least 1".into()));
    }
    (1..=depth_max)
        .map(|depth| {
            let model = PoolingModel::new(depth, mode)?;
            let g = expected_gradient_magnitude(&model, depth, 1)?;
            let analytic = analytic_gradient_magnitude(&model);
            Ok(PoolingRow {
                depth,
                n: model.n_qubits(),
                mode,
                expected_grad_magnitude: g.quadrature,
                analytic_value: analytic,
                abs_error: (g.quadrature - analytic).abs(),
            })
        })
        .collect()
}

/// Writes `L,n,mode,expected_grad_magnitude,analytic_value,abs_error`.
pub fn write_pooling_csv<W: Write>(rows: &[PoolingRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Off-diagonal magnitude of a single-qubit density operator.
pub fn coherence(rho: &DensityOperator) -> f64 {
    let m: &DMatrix<C64> = rho.matrix();
    m[(0, 1)].norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_quarter_turn() {
        let m = PoolingModel::new(3, PoolingMode::Correlated).unwrap();
        for j in 0..=3 {
            assert_eq!(pooled_state(&m, &[0.0], j).unwrap().rho_00, 1.0);
        }
        let s = pooled_state(&m, &[FRAC_PI_2], 1).unwrap();
        assert!((s.rho_00 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cost_values() {
        let m = PoolingModel::new(1, PoolingMode::Correlated).unwrap();
        assert!((pooling_cost(&m, &[FRAC_PI_2], 1).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(pooling_cost(&m, &[0.0], 1).unwrap(), 0.0);
        for depth in 1..=4 {
            let m = PoolingModel::new(depth, PoolingMode::Correlated).unwrap();
            let expect = 1.0 - 0.5 * (1.0 + (-1.0f64).powi(depth as i32));
            assert!((pooling_cost(&m, &[PI], depth).unwrap() - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn channel_reproduces_recursion() {
        let m = PoolingModel::new(3, PoolingMode::Uncorrelated).unwrap();
        let params = [0.3, -1.2, 2.5];
        let rho = channel_pooled_state(&m, &params, 3).unwrap();
        let s = pooled_state(&m, &params, 3).unwrap();
        assert!((rho.matrix()[(0, 0)].re - s.rho_00).abs() < 1e-12);
        assert!(coherence(&rho) < 1e-12);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(PoolingModel::new(0, PoolingMode::Correlated).is_err());
        let m = PoolingModel::new(2, PoolingMode::Uncorrelated).unwrap();
        assert!(pooled_state(&m, &[0.1], 1).is_err());
        assert!(pooled_state(&m, &[0.1, 0.2], 3).is_err());
        assert!(expected_gradient_magnitude(&m, 2, 3).is_err());
    }

    #[test]
    fn correlated_magnitude_is_one_over_pi() {
        for depth in [1, 2, 5] {
            let m = PoolingModel::new(depth, PoolingMode::Correlated).unwrap();
            let g = expected_gradient_magnitude(&m, depth, 1).unwrap();
            assert!((g.quadrature - 1.0 / PI).abs() < 1e-9, "{depth}: {}", g.quadrature);
        }
    }
}
