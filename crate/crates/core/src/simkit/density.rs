use nalgebra::DMatrix;

use super::gates::{TwoQubitGate, C64};
use super::state::{Observable, StateVector};
use super::{check_qubits, scatter, spread_bits, CHECK_TOL};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    n_qubits: usize,
    matrix: DMatrix<C64>,
}

impl DensityOperator {
    /// Accepts a square Hermitian matrix with power-of-two dimension.
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim != matrix.ncols() {
            return Err(Error::DimensionMismatch { expected: dim, actual: matrix.ncols() });
        }
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::DimensionMismatch { expected: dim.next_power_of_two().max(2), actual: dim });
        }
        let dev = (&matrix - matrix.adjoint()).camax();
        if dev > CHECK_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self { n_qubits: dim.trailing_zeros() as usize, matrix })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub(crate) fn trace_product(&self, op: &DMatrix<C64>) -> f64 {
        let d = self.matrix.nrows();
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += self.matrix[(i, j)] * op[(j, i)];
            }
        }
        acc.re
    }

    /// `self (x) other`, with `self` on the low qubits.
    pub fn tensor(&self, other: &DensityOperator) -> DensityOperator {
        let m = other.matrix.kronecker(&self.matrix);
        Self { n_qubits: self.n_qubits + other.n_qubits, matrix: m }
    }

    /// `rho -> U rho U^dagger` for a two-qubit gate.
    pub fn apply_gate(&mut self, gate: &TwoQubitGate) -> Result<()> {
        gate.check_fits(self.n_qubits)?;
        let left = self.apply_to_columns(&self.matrix, gate);
        let both = self.apply_to_columns(&left.adjoint(), gate);
        self.matrix = both.adjoint();
        Ok(())
    }

    fn apply_to_columns(&self, m: &DMatrix<C64>, gate: &TwoQubitGate) -> DMatrix<C64> {
        let (a, b) = gate.qubits();
        let dim = m.nrows();
        let mut out = m.clone();
        let mut col = StateVector::zero(self.n_qubits);
        for j in 0..dim {
            col.raw_mut().copy_from_slice(m.column(j).as_slice());
            col.apply_matrix(a, b, gate.matrix());
            out.column_mut(j).copy_from_slice(col.amplitudes());
        }
        out
    }

    /// Traces out every qubit not in `keep`; output qubit `k` is `keep[k]`.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityOperator> {
        if keep.is_empty() {
            return Err(Error::InvalidConfig("partial trace must keep at least one qubit".into()));
        }
        check_qubits(keep, self.n_qubits)?;
        let local_dim = 1usize << keep.len();
        let mut sorted = keep.to_vec();
        sorted.sort_unstable();
        let offsets: Vec<usize> = (0..local_dim).map(|l| scatter(l, keep)).collect();
        let mut out = DMatrix::<C64>::zeros(local_dim, local_dim);
        for r in 0..(1usize << (self.n_qubits - keep.len())) {
            let base = spread_bits(r, &sorted);
            for i in 0..local_dim {
                for j in 0..local_dim {
                    out[(i, j)] += self.matrix[(base | offsets[i], base | offsets[j])];
                }
            }
        }
        Self::from_matrix(out)
    }

    pub fn expectation(&self, obs: &Observable) -> Result<f64> {
        let reduced = if obs.qubits().len() == self.n_qubits && obs.qubits().iter().enumerate().all(|(k, &q)| k == q) {
            self.clone()
        } else {
            self.partial_trace(obs.qubits())?
        };
        Ok(reduced.trace_product(obs.matrix()))
    }
}

pub fn partial_trace(rho: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    rho.partial_trace(keep)
}
