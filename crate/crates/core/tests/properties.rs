use nalgebra::DMatrix;
use proptest::prelude::*;
use qcnn_plateau::pooling::{channel_pooled_state, pooled_state, pooling_cost, pooling_cost_gradient, PoolingMode, PoolingModel};
use qcnn_plateau::qcnn::{build_qcnn, BindingMode, QcnnTopology, Stage};
use qcnn_plateau::simkit::{haar_random_unitary, random_state, DensityOperator, Mat4, Observable, TwoQubitGate, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_gate(rng: &mut ChaCha8Rng, a: usize, b: usize) -> TwoQubitGate {
    let u = haar_random_unitary(4, rng);
    TwoQubitGate::new(a, b, Mat4::from_fn(|i, j| u[(i, j)])).unwrap()
}

fn distinct_pair(rng: &mut ChaCha8Rng, n: usize) -> (usize, usize) {
    let a = rng.gen_range(0..n);
    let mut b = rng.gen_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

/// Reduced density matrix by explicit summation over traced-out indices.
fn partial_trace_oracle(rho: &DMatrix<C64>, n: usize, keep: &[usize]) -> DMatrix<C64> {
    let k = keep.len();
    let traced: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let compose = |kept: usize, env: usize| {
        let mut idx = 0;
        for (bit, &q) in keep.iter().enumerate() {
            idx |= ((kept >> bit) & 1) << q;
        }
        for (bit, &q) in traced.iter().enumerate() {
            idx |= ((env >> bit) & 1) << q;
        }
        idx
    };
    DMatrix::from_fn(1 << k, 1 << k, |r, c| {
        (0..1usize << traced.len()).map(|e| rho[(compose(r, e), compose(c, e))]).sum()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn haar_unitaries_are_unitary(seed in any::<u64>(), dim in 1usize..9) {
        let u = haar_random_unitary(dim, &mut rng(seed));
        let dev = (u.adjoint() * &u - DMatrix::<C64>::identity(dim, dim)).camax();
        prop_assert!(dev < 1e-12);
    }

    #[test]
    fn gates_preserve_norm(seed in any::<u64>(), n in 2usize..7, gates in 1usize..12) {
        let mut r = rng(seed);
        let mut psi = random_state(n, &mut r);
        for _ in 0..gates {
            let (a, b) = distinct_pair(&mut r, n);
            psi.apply_gate(&random_gate(&mut r, a, b)).unwrap();
        }
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn density_and_statevector_evolution_agree(seed in any::<u64>(), n in 2usize..5) {
        let mut r = rng(seed);
        let mut psi = random_state(n, &mut r);
        let mut rho = psi.to_density();
        let (a, b) = distinct_pair(&mut r, n);
        let g = random_gate(&mut r, a, b);
        psi.apply_gate(&g).unwrap();
        rho.apply_gate(&g).unwrap();
        prop_assert!((psi.to_density().matrix() - rho.matrix()).camax() < 1e-12);
        let obs = Observable::zz(a, b).unwrap();
        prop_assert!((psi.expectation(&obs).unwrap() - rho.expectation(&obs).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_matches_index_sum(seed in any::<u64>(), n in 1usize..5, mask in 1usize..16) {
        let mut r = rng(seed);
        let mut keep: Vec<usize> = (0..n).filter(|q| mask >> q & 1 == 1).collect();
        prop_assume!(!keep.is_empty());
        if r.gen_bool(0.5) {
            keep.reverse();
        }
        let psi = random_state(n, &mut r);
        let mut other = random_state(n, &mut r).to_density().matrix().clone();
        let w: f64 = r.gen();
        other = other * C64::from(w) + psi.to_density().matrix() * C64::from(1.0 - w);
        let rho = DensityOperator::from_matrix(other.clone()).unwrap();
        let reduced = rho.partial_trace(&keep).unwrap();
        let oracle = partial_trace_oracle(&other, n, &keep);
        prop_assert!((reduced.matrix() - &oracle).camax() < 1e-12);
        prop_assert!((psi.reduced_density(&keep).unwrap().matrix()
            - partial_trace_oracle(psi.to_density().matrix(), n, &keep)).camax() < 1e-12);
    }

    #[test]
    fn pooling_closed_form_matches_channel(seed in any::<u64>(), depth in 1usize..5, corr in any::<bool>()) {
        let mode = if corr { PoolingMode::Correlated } else { PoolingMode::Uncorrelated };
        let model = PoolingModel::new(depth, mode).unwrap();
        let mut r = rng(seed);
        let params: Vec<f64> = (0..model.param_count()).map(|_| r.gen_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
        for layer in 1..=depth {
            let s = pooled_state(&model, &params, layer).unwrap();
            let rho = channel_pooled_state(&model, &params, layer).unwrap();
            prop_assert!((rho.matrix()[(0, 0)].re - s.rho_00).abs() < 1e-12);
            prop_assert!((rho.matrix()[(1, 1)].re - s.rho_11).abs() < 1e-12);
        }
    }

    #[test]
    fn pooling_gradient_matches_finite_difference(seed in any::<u64>(), depth in 1usize..7, corr in any::<bool>()) {
        let mode = if corr { PoolingMode::Correlated } else { PoolingMode::Uncorrelated };
        let model = PoolingModel::new(depth, mode).unwrap();
        let mut r = rng(seed);
        let params: Vec<f64> = (0..model.param_count()).map(|_| r.gen_range(-3.0..3.0)).collect();
        let layer = r.gen_range(1..=depth);
        let grad = pooling_cost_gradient(&model, &params, layer).unwrap();
        let h = 1e-6;
        for k in 0..params.len() {
            let mut p = params.clone();
            p[k] += h;
            let up = pooling_cost(&model, &p, layer).unwrap();
            p[k] -= 2.0 * h;
            let down = pooling_cost(&model, &p, layer).unwrap();
            prop_assert!((grad[k] - (up - down) / (2.0 * h)).abs() < 1e-8);
        }
    }

    #[test]
    fn cost_is_a_bounded_expectation(seed in any::<u64>(), half in 2usize..6, corr in any::<bool>()) {
        let mode = if corr { BindingMode::Correlated } else { BindingMode::Uncorrelated };
        let q = build_qcnn(2 * half, mode).unwrap();
        let mut r = rng(seed);
        let params: Vec<f64> = (0..q.param_count()).map(|_| r.gen::<f64>() * std::f64::consts::TAU).collect();
        let c = q.evaluate_cost(&params, None).unwrap();
        prop_assert!(c.abs() <= 1.0 + 1e-12);
        let g = q.parameter_shift_gradient(&params, &q.default_location(), None).unwrap();
        prop_assert!(g.is_finite());
    }

    #[test]
    fn topology_shrinks_to_a_readout_pair(half in 2usize..40) {
        let n = 2 * half;
        let t = QcnnTopology::new(n).unwrap();
        let counts = t.active_counts();
        prop_assert_eq!(counts[0], n);
        prop_assert_eq!(*counts.last().unwrap(), 2);
        prop_assert!(counts.windows(2).all(|w| w[1] < w[0] && w[1] % 2 == 0));
        let mut discarded = t.discarded_qubits();
        discarded.sort_unstable();
        discarded.dedup();
        prop_assert_eq!(discarded.len(), n - 2);
        let (a, b) = t.readout_qubits();
        prop_assert!(!discarded.contains(&a) && !discarded.contains(&b));
        prop_assert_eq!(t.total_layers(), t.conv_layer_count() + 1);
        for stage in t.stages() {
            if let Stage::Pool(p) = stage {
                prop_assert!(p.pairs.iter().all(|&(s, d)| s < d));
            }
        }
    }
}
