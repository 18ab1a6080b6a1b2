use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::SystemTime;

use qcnn_plateau::grim::{
    detect_case, format_tables, lower_bound, parse_rational, range_violations, to_f64, verify_module_integration,
    verify_weingarten_moments, BoundInputs, FlagPolicy, GrimCase, ModuleType, Position,
};
use qcnn_plateau::pooling::{pooling_table, write_pooling_csv, PoolingMode};
use qcnn_plateau::qcnn::{build_qcnn, BindingMode, ParamLocation, QcnnTopology, SubLayer};
use qcnn_plateau::variance::{bound_for_location, run_variance_experiment, write_csv, ExperimentConfig, SweepRow};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::args::{
    BoundArgs, CaseArg, Command, DescribeArgs, ModeArg, ModuleArgs, PoolingArgs, PositionArg, SingleModeArg, TablesArgs,
    VarianceArgs, VerifyTarget, WeingartenArgs,
};
use crate::manifest::write_manifest;

/// Largest error tolerated between pooling quadrature and closed form.
const POOLING_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error(transparent)]
    Library(#[from] qcnn_plateau::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) | CliError::Library(qcnn_plateau::Error::Quadrature(_)) => 1,
            CliError::Library(qcnn_plateau::Error::ResourceCap { .. }) => 3,
            _ => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Variance(a) => variance(&a),
        Command::Bound(a) => bound(&a),
        Command::Verify { target } => match target {
            VerifyTarget::Weingarten(a) => weingarten(&a),
            VerifyTarget::ModuleCenter(a) => module_center(&a),
            VerifyTarget::Tables(a) => tables(&a),
        },
        Command::Pooling(a) => pooling(&a),
        Command::Describe(a) => describe(&a),
    }
}

/// Writes `content` to `out` plus its manifest, or to stdout.
fn emit<C: Serialize>(
    out: &Option<PathBuf>,
    content: &[u8],
    subcommand: &str,
    config: &C,
    seed: Option<u64>,
    started: SystemTime,
) -> CliResult<()> {
    match out {
        Some(path) => {
            fs::write(path, content)?;
            write_manifest(path, subcommand, config, seed, started)?;
        }
        None => std::io::stdout().write_all(content)?,
    }
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialise");
    text.push('\n');
    text.into_bytes()
}

fn variance(a: &VarianceArgs) -> CliResult<()> {
    let started = SystemTime::now();
    if a.qubits.is_empty() {
        return Err(CliError::Usage("--qubits needs at least one value".into()));
    }
    let modes: &[BindingMode] = match a.mode {
        ModeArg::Corr => &[BindingMode::Correlated],
        ModeArg::Uncorr => &[BindingMode::Uncorrelated],
        ModeArg::Both => &[BindingMode::Correlated, BindingMode::Uncorrelated],
    };
    let mut rows = Vec::new();
    for &n in &a.qubits {
        let bound = if a.with_bound { Some(bound_for_location(n, None)?.value_f64()) } else { None };
        for &mode in modes {
            let mut config = ExperimentConfig::new(n, mode, a.seed);
            config.samples_per_rep = a.samples;
            config.repetitions = a.reps;
            if let Some(cap) = a.amplitude_cap {
                config.amplitude_cap = cap;
            }
            let report = run_variance_experiment(&config)?;
            rows.push(SweepRow::from_report(&report, bound));
        }
    }
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    emit(&a.out, &buf, "variance", a, Some(a.seed), started)
}

fn bound(a: &BoundArgs) -> CliResult<()> {
    let started = SystemTime::now();
    let topology = QcnnTopology::new(a.qubits)?;
    let total = topology.total_layers();
    let ell = a.layer.unwrap_or(total);
    if ell == 0 || ell > total {
        return Err(CliError::Usage(format!("--layer must be in 1..={total} for {} qubits, got {ell}", a.qubits)));
    }
    let position = match a.position {
        PositionArg::First => Position::FirstSublayer,
        PositionArg::SecondEdge => Position::SecondSublayerEdge,
        PositionArg::SecondInner => Position::SecondSublayerInner,
    };
    let case = match a.case {
        CaseArg::One => GrimCase::Case1,
        CaseArg::Two => GrimCase::Case2,
        CaseArg::Three => {
            let middle = a.middle_modules;
            if ell < 3 || middle == 0 || middle + 2 > ell {
                return Err(CliError::Usage(format!("case 3 at layer {ell} needs 1 <= --middle-modules <= {}", ell.saturating_sub(2))));
            }
            GrimCase::Case3 { middle, edge: ell - 1 - middle }
        }
        CaseArg::Auto => auto_case(&topology, ell, a.position, a.block)?,
    };
    let mut inputs = BoundInputs::with_defaults(a.qubits, total, ell, position, case);
    inputs.eps_o = parse_rational(&a.eps_o)?;
    inputs.eps_sigma = parse_rational(&a.eps_sigma)?;
    inputs.trace_h2 = parse_rational(&a.trace_h2)?;
    if a.include_flagged {
        inputs.policy = FlagPolicy::IncludeAsPrinted;
    }
    let r = lower_bound(&inputs)?;
    let (middle, edge) = match case {
        GrimCase::Case3 { middle, edge } => (middle, edge),
        GrimCase::Case2 => (0, ell - 1),
        GrimCase::Case1 => (0, 0),
    };
    let report = json!({
        "n_qubits": a.qubits,
        "total_layers": total,
        "layer": ell,
        "position": position,
        "case": case.to_string(),
        "middle_modules": middle,
        "edge_modules": edge,
        "flag_policy": inputs.policy,
        "trace_h2": inputs.trace_h2.to_string(),
        "eps_o": inputs.eps_o.to_string(),
        "eps_sigma": inputs.eps_sigma.to_string(),
        "path_sum": r.path_sum.to_string(),
        "path_sum_f64": to_f64(&r.path_sum),
        "path_count": r.walks.to_string(),
        "backward_factor": r.backward_factor.to_string(),
        "backward_factor_f64": to_f64(&r.backward_factor),
        "value": r.value.to_string(),
        "value_f64": r.value_f64(),
    });
    emit(&a.out, &json_bytes(&report), "bound", a, None, started)
}

fn auto_case(topology: &QcnnTopology, ell: usize, position: PositionArg, block: Option<usize>) -> CliResult<GrimCase> {
    if ell == 1 {
        return Ok(GrimCase::Case1);
    }
    let layer = topology.total_layers() - ell + 1;
    let conv = topology
        .conv_layer(layer)
        .ok_or_else(|| CliError::Usage(format!("no convolution layer at --layer {ell}")))?;
    let m = conv.first_sub_layer.len();
    let count = conv.second_sub_layer.len();
    let (sub_layer, default_block) = match position {
        PositionArg::First => (SubLayer::First, (m - 1) / 2),
        PositionArg::SecondEdge => (SubLayer::Second, 0),
        PositionArg::SecondInner => (SubLayer::Second, ((m - 1) / 2).min(count.saturating_sub(1))),
    };
    let loc = ParamLocation { layer, sub_layer, block: block.unwrap_or(default_block), angle: 0 };
    let detection = detect_case(topology, &loc).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(detection.case)
}

fn weingarten(a: &WeingartenArgs) -> CliResult<()> {
    let started = SystemTime::now();
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let r = verify_weingarten_moments(a.dim, a.samples, &mut rng)?;
    let pass = r.max_deviation < a.tol;
    let report = json!({ "report": r, "tolerance": a.tol, "pass": pass });
    emit(&a.out, &json_bytes(&report), "verify weingarten", a, Some(a.seed), started)?;
    if !pass {
        return Err(CliError::Verification(format!("max deviation {} >= {}", r.max_deviation, a.tol)));
    }
    Ok(())
}

fn module_center(a: &ModuleArgs) -> CliResult<()> {
    let started = SystemTime::now();
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let r = verify_module_integration(ModuleType::Center, a.samples, &mut rng)?;
    let pass = r.relative_error <= a.tol;
    let report = json!({ "report": r, "tolerance": a.tol, "pass": pass });
    emit(&a.out, &json_bytes(&report), "verify module-center", a, Some(a.seed), started)?;
    if !pass {
        return Err(CliError::Verification(format!(
            "estimate {} is {:.3}% from {}",
            r.aggregate,
            100.0 * r.relative_error,
            r.expected
        )));
    }
    Ok(())
}

fn tables(a: &TablesArgs) -> CliResult<()> {
    let started = SystemTime::now();
    let mut text = format_tables(a.k_max);
    let violations = range_violations(a.k_max.max(30));
    text.push_str(&format!("# Unflagged entries outside (0, 1): {}\n", violations.len()));
    for v in &violations {
        text.push_str(&format!("  {} -> {}: {}\n", v.from, v.to, v.value));
    }
    emit(&a.out, text.as_bytes(), "verify tables", a, None, started)?;
    if !violations.is_empty() {
        return Err(CliError::Verification(format!("{} table entries outside (0, 1)", violations.len())));
    }
    Ok(())
}

fn pooling(a: &PoolingArgs) -> CliResult<()> {
    let started = SystemTime::now();
    if a.depth_max == 0 {
        return Err(CliError::Usage("--depth-max must be at least 1".into()));
    }
    let mode = match a.mode {
        SingleModeArg::Corr => PoolingMode::Correlated,
        SingleModeArg::Uncorr => PoolingMode::Uncorrelated,
    };
    let rows = pooling_table(a.depth_max, mode)?;
    let mut buf = Vec::new();
    write_pooling_csv(&rows, &mut buf)?;
    emit(&a.out, &buf, "pooling", a, None, started)?;
    if let Some(worst) = rows.iter().find(|r| r.abs_error > POOLING_TOL) {
        return Err(CliError::Verification(format!("L = {} differs from the closed form by {}", worst.depth, worst.abs_error)));
    }
    Ok(())
}

fn describe(a: &DescribeArgs) -> CliResult<()> {
    let started = SystemTime::now();
    let corr = build_qcnn(a.qubits, BindingMode::Correlated)?;
    let uncorr = build_qcnn(a.qubits, BindingMode::Uncorrelated)?;
    let t = uncorr.topology();
    let loc = uncorr.default_location();
    let detection = detect_case(t, &loc)?;
    let report = json!({
        "n_qubits": a.qubits,
        "total_layers": t.total_layers(),
        "conv_layers": t.conv_layer_count(),
        "active_counts": t.active_counts(),
        "block_count": t.blocks().len(),
        "readout_qubits": t.readout_qubits(),
        "param_count": { "corr": corr.param_count(), "uncorr": uncorr.param_count() },
        "default_location": loc,
        "default_case": detection.case.to_string(),
        "default_layer_from_output": detection.ell,
        "stages": t.stages(),
    });
    emit(&a.out, &json_bytes(&report), "describe", a, None, started)
}
