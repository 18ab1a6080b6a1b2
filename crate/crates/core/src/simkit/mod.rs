//! Dense statevector and density-operator simulation.
//!
//! Qubit `q` is bit `q` of a basis index (little-endian). Local multi-qubit
//! matrices follow the same rule over their listed qubits: the `k`-th listed
//! qubit is bit `k` of the local index.

mod density;
mod gates;
mod haar;
mod state;

pub use density::{partial_trace, DensityOperator};
pub use gates::{
    cnot, embed_first, embed_second, identity2, kron2, pauli_x, pauli_y, pauli_z, ry, rz, swap,
    LocalWire, Mat2, Mat4, TwoQubitGate, C64,
};
pub use haar::{haar_random_unitary, random_state};
pub use state::{apply_two_qubit_gate, expectation, Observable, StateVector};

/// Tolerance for unitarity, Hermiticity and normalization checks.
pub const CHECK_TOL: f64 = 1e-10;

/// Returns the positions obtained by inserting zero bits at the sorted
/// positions `zeros` into `compact`.
pub(crate) fn spread_bits(mut compact: usize, zeros: &[usize]) -> usize {
    for &z in zeros {
        let low = compact & ((1usize << z) - 1);
        compact = ((compact >> z) << (z + 1)) | low;
    }
    compact
}

/// Scatters the bits of a local index onto the given qubits.
pub(crate) fn scatter(local: usize, qubits: &[usize]) -> usize {
    qubits
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &q)| acc | (((local >> k) & 1) << q))
}

pub(crate) fn check_qubits(qubits: &[usize], n_qubits: usize) -> crate::Result<()> {
    for (i, &q) in qubits.iter().enumerate() {
        if q >= n_qubits {
            return Err(crate::Error::QubitOutOfRange { index: q, n_qubits });
        }
        if qubits[..i].contains(&q) {
            return Err(crate::Error::DuplicateQubit(q));
        }
    }
    Ok(())
}
