use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::gates::C64;
use super::state::StateVector;

fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

/// Samples a `dim x dim` unitary from the Haar measure.
///
/// Column `j` of the QR factor `Q` is multiplied by the phase of `R[j][j]`,
/// which removes the bias of the bare factorization.
pub fn haar_random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    assert!(dim >= 1, "dimension must be positive");
    let qr = ginibre(dim, dim, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Samples a Haar-random pure state on `n_qubits` qubits.
pub fn random_state<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> StateVector {
    let v: DVector<C64> = ginibre(1usize << n_qubits, 1, rng).column(0).into();
    let n = v.norm();
    StateVector::from_amplitudes(v.iter().map(|a| a / n).collect()).expect("normalized by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_are_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [1, 2, 3, 4, 8] {
            let u = haar_random_unitary(dim, &mut rng);
            let dev = (u.adjoint() * &u - DMatrix::<C64>::identity(dim, dim)).camax();
            assert!(dev < 1e-12, "dim {dim}: {dev}");
        }
    }

    #[test]
    fn first_column_phase_is_uniform() {
        // Bare Householder QR fixes arg(R[0][0]) and skews the phase of
        // U[0][0]; the corrected sampler has mean U[0][0] near zero.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 20_000;
        let mean: C64 = (0..n).map(|_| haar_random_unitary(2, &mut rng)[(0, 0)]).sum::<C64>() / n as f64;
        assert!(mean.norm() < 0.02, "{mean}");
    }

    #[test]
    fn random_state_is_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_state(5, &mut rng);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }
}
