use nalgebra::DMatrix;

use super::density::DensityOperator;
use super::gates::{Mat4, TwoQubitGate, C64};
use super::{check_qubits, scatter, spread_bits, CHECK_TOL};
use crate::{Error, Result};

/// A Hermitian operator acting on an ordered list of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    qubits: Vec<usize>,
    matrix: DMatrix<C64>,
}

impl Observable {
    pub fn new(qubits: Vec<usize>, matrix: DMatrix<C64>) -> Result<Self> {
        check_qubits(&qubits, usize::MAX)?;
        let dim = 1usize << qubits.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: matrix.nrows() });
        }
        let dev = (&matrix - matrix.adjoint()).camax();
        if dev > CHECK_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self { qubits, matrix })
    }

    /// `Z (x) Z` on two qubits.
    pub fn zz(a: usize, b: usize) -> Result<Self> {
        let diag = [1.0, -1.0, -1.0, 1.0].map(C64::from);
        Self::new(vec![a, b], DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(&diag)))
    }

    pub fn identity(qubits: Vec<usize>) -> Result<Self> {
        let dim = 1usize << qubits.len();
        Self::new(qubits, DMatrix::identity(dim, dim))
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1usize << n_qubits];
        amps[0] = C64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::DimensionMismatch { expected: dim, actual: index });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps amplitudes whose length is a power of two and whose norm is 1
    /// within [`CHECK_TOL`].
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::DimensionMismatch { expected: len.next_power_of_two().max(2), actual: len });
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > CHECK_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { n_qubits: len.trailing_zeros() as usize, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies `gate` in place.
    pub fn apply_gate(&mut self, gate: &TwoQubitGate) -> Result<()> {
        gate.check_fits(self.n_qubits)?;
        let (a, b) = gate.qubits();
        self.apply_matrix(a, b, gate.matrix());
        Ok(())
    }

    /// Unchecked kernel: `a` and `b` must be distinct and in range.
    pub(crate) fn apply_matrix(&mut self, a: usize, b: usize, m: &Mat4) {
        let (ma, mb) = (1usize << a, 1usize << b);
        let zeros = if a < b { [a, b] } else { [b, a] };
        let amps = &mut self.amps;
        for k in 0..amps.len() >> 2 {
            let i0 = spread_bits(k, &zeros);
            let idx = [i0, i0 | ma, i0 | mb, i0 | ma | mb];
            let v = idx.map(|i| amps[i]);
            for (r, &i) in idx.iter().enumerate() {
                amps[i] = m[(r, 0)] * v[0] + m[(r, 1)] * v[1] + m[(r, 2)] * v[2] + m[(r, 3)] * v[3];
            }
        }
    }

    /// Reduced density operator on `keep`, in the listed order.
    pub fn reduced_density(&self, keep: &[usize]) -> Result<DensityOperator> {
        if keep.is_empty() {
            return Err(Error::InvalidConfig("partial trace must keep at least one qubit".into()));
        }
        check_qubits(keep, self.n_qubits)?;
        let k = keep.len();
        let local_dim = 1usize << k;
        let mut sorted = keep.to_vec();
        sorted.sort_unstable();
        let offsets: Vec<usize> = (0..local_dim).map(|l| scatter(l, keep)).collect();
        let mut rho = DMatrix::<C64>::zeros(local_dim, local_dim);
        let mut v = vec![C64::new(0.0, 0.0); local_dim];
        for r in 0..(1usize << (self.n_qubits - k)) {
            let base = spread_bits(r, &sorted);
            for (l, slot) in v.iter_mut().enumerate() {
                *slot = self.amps[base | offsets[l]];
            }
            for i in 0..local_dim {
                for j in 0..local_dim {
                    rho[(i, j)] += v[i] * v[j].conj();
                }
            }
        }
        DensityOperator::from_matrix(rho)
    }

    pub fn to_density(&self) -> DensityOperator {
        let v = nalgebra::DVector::from_column_slice(&self.amps);
        DensityOperator::from_matrix(&v * v.adjoint()).expect("pure state projector is valid")
    }

    pub fn expectation(&self, obs: &Observable) -> Result<f64> {
        let rho = self.reduced_density(obs.qubits())?;
        Ok(rho.trace_product(obs.matrix()))
    }

    /// `<Z_a Z_b>` computed directly from amplitudes.
    pub fn zz_expectation(&self, a: usize, b: usize) -> f64 {
        let mask = (1usize << a) | (1usize << b);
        self.amps
            .iter()
            .enumerate()
            .map(|(i, amp)| if (i & mask).count_ones().is_multiple_of(2) { amp.norm_sqr() } else { -amp.norm_sqr() })
            .sum()
    }
}

/// Returns a new state with `gate` applied.
pub fn apply_two_qubit_gate(state: &StateVector, gate: &TwoQubitGate) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply_gate(gate)?;
    Ok(out)
}

pub fn expectation(state: &StateVector, obs: &Observable) -> Result<f64> {
    state.expectation(obs)
}
