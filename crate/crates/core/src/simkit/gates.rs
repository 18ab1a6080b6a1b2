use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

use super::{check_qubits, CHECK_TOL};
use crate::{Error, Result};

pub type C64 = Complex64;
pub type Mat2 = Matrix2<C64>;
pub type Mat4 = Matrix4<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Which qubit of a two-qubit gate an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalWire {
    /// Local bit 0.
    First,
    /// Local bit 1.
    Second,
}

pub fn identity2() -> Mat2 {
    Mat2::identity()
}

pub fn pauli_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> Mat2 {
    Mat2::new(ZERO, -C64::i(), C64::i(), ZERO)
}

pub fn pauli_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

/// `exp(-i theta Z / 2)`.
pub fn rz(theta: f64) -> Mat2 {
    let h = 0.5 * theta;
    Mat2::new(C64::from_polar(1.0, -h), ZERO, ZERO, C64::from_polar(1.0, h))
}

/// `exp(-i theta Y / 2)`.
pub fn ry(theta: f64) -> Mat2 {
    let (s, c) = (0.5 * theta).sin_cos();
    Mat2::new(C64::from(c), C64::from(-s), C64::from(s), C64::from(c))
}

/// Tensor product with `high` on local bit 1 and `low` on local bit 0.
pub fn kron2(high: &Mat2, low: &Mat2) -> Mat4 {
    Mat4::from_fn(|i, j| high[(i >> 1, j >> 1)] * low[(i & 1, j & 1)])
}

pub fn embed_first(u: &Mat2) -> Mat4 {
    kron2(&identity2(), u)
}

pub fn embed_second(u: &Mat2) -> Mat4 {
    kron2(u, &identity2())
}

pub fn cnot(control: LocalWire, target: LocalWire) -> Mat4 {
    assert_ne!(control, target, "cnot needs distinct wires");
    let (cbit, tbit) = match control {
        LocalWire::First => (1, 2),
        LocalWire::Second => (2, 1),
    };
    Mat4::from_fn(|i, j| {
        let image = if j & cbit != 0 { j ^ tbit } else { j };
        if i == image {
            ONE
        } else {
            ZERO
        }
    })
}

pub fn swap() -> Mat4 {
    Mat4::from_fn(|i, j| {
        let swapped = ((j & 1) << 1) | (j >> 1);
        if i == swapped {
            ONE
        } else {
            ZERO
        }
    })
}

pub(crate) fn unitarity_deviation(m: &Mat4) -> f64 {
    (m.adjoint() * m - Mat4::identity()).camax()
}

/// A 4x4 unitary bound to an ordered pair of distinct qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitGate {
    qubits: (usize, usize),
    matrix: Mat4,
}

impl TwoQubitGate {
    /// Validates distinct targets and unitarity within [`CHECK_TOL`].
    pub fn new(first: usize, second: usize, matrix: Mat4) -> Result<Self> {
        if first == second {
            return Err(Error::DuplicateQubit(first));
        }
        let dev = unitarity_deviation(&matrix);
        if dev > CHECK_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self { qubits: (first, second), matrix })
    }

    pub fn qubits(&self) -> (usize, usize) {
        self.qubits
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.matrix
    }

    pub(crate) fn check_fits(&self, n_qubits: usize) -> Result<()> {
        check_qubits(&[self.qubits.0, self.qubits.1], n_qubits)
    }
}
