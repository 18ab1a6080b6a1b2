use std::f64::consts::TAU;

use num_bigint::BigUint;
use num_traits::{One, Pow, Zero};
use qcnn_plateau::grim::{
    backward_factor, build_graph, detect_case, edge_row, lower_bound, middle_row, path_sum, path_sum_with_count,
    rational, terminal_weight, transition_row, BoundInputs, FlagPolicy, GrimCase, NodeId, Position, Rational, TableEntry,
};
use qcnn_plateau::qcnn::{build_qcnn, BindingMode, QcnnTopology};
use qcnn_plateau::variance::{bound_for_location, run_variance_experiment, sample_seed, ExperimentConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy)]
enum Table {
    Edge,
    Middle,
    Transition,
}

fn steps_for(case: GrimCase, ell: usize) -> Vec<Table> {
    match case {
        GrimCase::Case1 => unreachable!(),
        GrimCase::Case2 => vec![Table::Edge; ell - 1],
        GrimCase::Case3 { middle, edge } => {
            let mut s = vec![Table::Middle; middle];
            s.push(Table::Transition);
            s.extend(vec![Table::Edge; edge - 1]);
            s
        }
    }
}

fn row(node: NodeId, table: Table) -> Vec<TableEntry> {
    match table {
        Table::Edge => edge_row(node),
        Table::Middle => middle_row(node),
        Table::Transition => transition_row(node),
    }
}

/// Enumerates every walk explicitly, returning the summed weight and the
/// number of walks that end on a node with a terminal weight.
fn enumerate(node: NodeId, weight: Rational, steps: &[Table], policy: FlagPolicy) -> (Rational, BigUint) {
    let Some((&table, rest)) = steps.split_first() else {
        return match terminal_weight(node) {
            Some(t) => (weight * t, BigUint::one()),
            None => (Rational::zero(), BigUint::zero()),
        };
    };
    let mut total = (Rational::zero(), BigUint::zero());
    for e in row(node, table) {
        if e.is_flagged() && policy == FlagPolicy::Exclude {
            continue;
        }
        let (v, c) = enumerate(e.to, &weight * &e.value, rest, policy);
        total.0 += v;
        total.1 += c;
    }
    total
}

fn cases_up_to(max_ell: usize) -> Vec<(GrimCase, usize)> {
    let mut out = Vec::new();
    for ell in 1..=max_ell {
        out.push((GrimCase::Case2, ell));
        for middle in 1..ell.saturating_sub(1) {
            out.push((GrimCase::Case3 { middle, edge: ell - 1 - middle }, ell));
        }
    }
    out
}

#[test]
fn case_one_is_an_exact_power() {
    let g = build_graph(GrimCase::Case1, 0, FlagPolicy::Exclude).unwrap();
    for ell in 1..=20u32 {
        assert_eq!(path_sum(&g, ell as usize).unwrap(), rational(28, 125).pow(ell - 1) * rational(28, 125));
    }
}

#[test]
fn dynamic_programme_matches_walk_enumeration() {
    for policy in [FlagPolicy::Exclude, FlagPolicy::IncludeAsPrinted] {
        for (case, ell) in cases_up_to(6) {
            let g = build_graph(case, ell - 1, policy).unwrap();
            let dp = path_sum_with_count(&g, ell).unwrap();
            let (value, walks) = enumerate(case.start(), Rational::one(), &steps_for(case, ell), policy);
            assert_eq!(dp.value, value, "{case} ell={ell} {policy:?}");
            assert_eq!(dp.walks, walks, "{case} ell={ell} {policy:?}");
        }
    }
}

#[test]
fn included_flagged_entries_only_add_weight() {
    for (case, ell) in cases_up_to(6) {
        let ex = path_sum(&build_graph(case, ell - 1, FlagPolicy::Exclude).unwrap(), ell).unwrap();
        let inc = path_sum(&build_graph(case, ell - 1, FlagPolicy::IncludeAsPrinted).unwrap(), ell).unwrap();
        assert!(inc >= ex, "{case} ell={ell}");
    }
}

#[test]
fn bound_examples() {
    let b = lower_bound(&BoundInputs::with_defaults(8, 3, 3, Position::FirstSublayer, GrimCase::Case1)).unwrap();
    assert_eq!(b.path_sum, "21952/1953125".parse::<Rational>().unwrap());
    let mut zero = BoundInputs::with_defaults(4, 2, 1, Position::FirstSublayer, GrimCase::Case1);
    zero.eps_o = Rational::zero();
    assert!(lower_bound(&zero).unwrap().value.is_zero());
    let f = backward_factor(Position::SecondSublayerInner, 5, 2).unwrap();
    assert_eq!(f, rational(1, 2500) * rational(1, 50).pow(3u32));
    assert!(backward_factor(Position::FirstSublayer, 3, 4).is_err());
}

#[test]
fn default_location_bounds_follow_the_closed_form() {
    // Centre parameter of the widest layer: ell = L, so the value is
    // (1/9)(1)(4)(3/4)(1/50)(28/125)^L.
    for (n, total) in [(4, 2u32), (6, 3), (8, 3), (10, 4), (16, 4)] {
        let b = bound_for_location(n, None).unwrap();
        assert_eq!(b.case, GrimCase::Case1);
        assert_eq!(b.value, rational(1, 150) * rational(28, 125).pow(total), "n={n}");
    }
    assert_eq!(bound_for_location(4, None).unwrap().value.to_string(), "392/1171875");
}

#[test]
fn widths_follow_the_pooling_rule() {
    let frozen: [(usize, &[usize]); 7] = [
        (4, &[4, 2]),
        (6, &[6, 4, 2]),
        (8, &[8, 4, 2]),
        (10, &[10, 6, 4, 2]),
        (12, &[12, 6, 4, 2]),
        (14, &[14, 8, 4, 2]),
        (16, &[16, 8, 4, 2]),
    ];
    for (n, counts) in frozen {
        let t = QcnnTopology::new(n).unwrap();
        assert_eq!(t.active_counts(), counts, "n={n}");
        assert_eq!(t.total_layers(), counts.len(), "n={n}");
    }
    assert!(QcnnTopology::new(5).is_err());
    assert!(QcnnTopology::new(2).is_err());
}

#[test]
fn case_detection_on_sixteen_qubits() {
    let q = build_qcnn(16, BindingMode::Uncorrelated).unwrap();
    let loc = q.default_location();
    let d = detect_case(q.topology(), &loc).unwrap();
    assert_eq!((d.case, d.ell, d.total_layers), (GrimCase::Case1, 4, 4));
    let edge = detect_case(q.topology(), &qcnn_plateau::qcnn::ParamLocation { block: 0, ..loc }).unwrap();
    assert_eq!(edge.case, GrimCase::Case2);
}

/// Straight-line re-implementation of the estimator with the same seeds.
#[test]
fn variance_matches_a_naive_loop() {
    let config = ExperimentConfig { samples_per_rep: 50, repetitions: 4, ..ExperimentConfig::new(4, BindingMode::Uncorrelated, 99) };
    let report = run_variance_experiment(&config).unwrap();
    let q = build_qcnn(4, BindingMode::Uncorrelated).unwrap();
    let loc = q.default_location();
    let mut rep_vars = Vec::new();
    let mut all = Vec::new();
    for rep in 0..config.repetitions {
        let mut grads = Vec::new();
        for s in 0..config.samples_per_rep {
            let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(config.master_seed, rep, s));
            let params: Vec<f64> = (0..q.param_count()).map(|_| rng.gen::<f64>() * TAU).collect();
            grads.push(q.parameter_shift_gradient(&params, &loc, None).unwrap());
        }
        let mut sum = 0.0;
        for g in &grads {
            sum += g;
        }
        let m = sum / grads.len() as f64;
        let mut ss = 0.0;
        for g in &grads {
            ss += (g - m) * (g - m);
        }
        rep_vars.push(ss / (grads.len() - 1) as f64);
        all.extend(grads);
    }
    assert_eq!(report.per_rep_variances, rep_vars);
    let mut sum = 0.0;
    for v in &rep_vars {
        sum += v;
    }
    assert_eq!(report.variance, sum / rep_vars.len() as f64);
    assert_eq!(report.sample_count, all.len());
    assert_eq!(report, run_variance_experiment(&config).unwrap());
}
