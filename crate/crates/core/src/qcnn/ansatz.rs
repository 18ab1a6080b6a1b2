use crate::simkit::{cnot, embed_first, embed_second, ry, rz, swap, LocalWire, Mat4};
use crate::{Error, Result};

pub const ANGLES_PER_BLOCK: usize = 15;

/// One elementary gate of the two-qubit block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockOp {
    Rz(LocalWire, usize),
    Ry(LocalWire, usize),
    Cnot { control: LocalWire, target: LocalWire },
}

use BlockOp::{Cnot, Ry, Rz};
use LocalWire::{First as A, Second as B};

/// Gate sequence of a block in application order. Each single-qubit
/// rotation `Rz(t0) Ry(t1) Rz(t2)` is applied right to left, so the angle
/// with the lowest index acts last.
pub const BLOCK_SEQUENCE: [BlockOp; 18] = [
    Rz(A, 2),
    Ry(A, 1),
    Rz(A, 0),
    Rz(B, 5),
    Ry(B, 4),
    Rz(B, 3),
    Cnot { control: B, target: A },
    Rz(A, 6),
    Ry(B, 7),
    Cnot { control: A, target: B },
    Ry(B, 8),
    Cnot { control: B, target: A },
    Rz(A, 11),
    Ry(A, 10),
    Rz(A, 9),
    Rz(B, 14),
    Ry(B, 13),
    Rz(B, 12),
];

fn op_matrix(op: BlockOp, angles: &[f64]) -> Mat4 {
    let embed = |w: LocalWire, m| match w {
        LocalWire::First => embed_first(&m),
        LocalWire::Second => embed_second(&m),
    };
    match op {
        Rz(w, k) => embed(w, rz(angles[k])),
        Ry(w, k) => embed(w, ry(angles[k])),
        Cnot { control, target } => cnot(control, target),
    }
}

/// Unitary of one block for 15 angles.
pub fn block_matrix(angles: &[f64]) -> Result<Mat4> {
    if angles.len() != ANGLES_PER_BLOCK {
        return Err(Error::DimensionMismatch { expected: ANGLES_PER_BLOCK, actual: angles.len() });
    }
    Ok(BLOCK_SEQUENCE.iter().fold(Mat4::identity(), |acc, &op| op_matrix(op, angles) * acc))
}

/// Block unitary at all-zero angles.
pub fn reference_skeleton() -> Mat4 {
    swap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simkit::{kron2, C64};

    #[test]
    fn zero_angles_give_skeleton() {
        let m = block_matrix(&[0.0; ANGLES_PER_BLOCK]).unwrap();
        assert!((m - reference_skeleton()).camax() < 1e-15);
    }

    #[test]
    fn every_angle_is_used_once() {
        let mut seen = [0usize; ANGLES_PER_BLOCK];
        for op in BLOCK_SEQUENCE {
            if let Rz(_, k) | Ry(_, k) = op {
                seen[k] += 1;
            }
        }
        assert_eq!(seen, [1; ANGLES_PER_BLOCK]);
    }

    #[test]
    fn outer_rotations_factor_out() {
        let mut angles = [0.0; ANGLES_PER_BLOCK];
        angles[9] = 0.8;
        angles[13] = -0.4;
        let m = block_matrix(&angles).unwrap();
        let expect = kron2(&ry(-0.4), &rz(0.8)) * swap();
        assert!((m - expect).camax() < 1e-14);
    }

    #[test]
    fn wrong_angle_count_is_rejected() {
        assert!(block_matrix(&[0.0; 14]).is_err());
        let _ = C64::new(0.0, 0.0);
    }
}
