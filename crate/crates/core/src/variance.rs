//! Monte Carlo estimation of gradient statistics over random
//! initialisations.

use std::f64::consts::TAU;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grim::{detect_case, lower_bound, BoundInputs, BoundResult};
use crate::qcnn::{build_qcnn, BindingMode, ParamLocation, QcnnTopology};
use crate::{Error, Result};

/// Largest statevector length simulated unless explicitly raised.
pub const DEFAULT_AMPLITUDE_CAP: u128 = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_qubits: usize,
    pub mode: BindingMode,
    pub samples_per_rep: usize,
    pub repetitions: usize,
    pub master_seed: u64,
    /// `None` selects the circuit's default location.
    pub location: Option<ParamLocation>,
    pub amplitude_cap: u128,
}

impl ExperimentConfig {
    /// 200 samples per repetition, 16 repetitions, default location.
    pub fn new(n_qubits: usize, mode: BindingMode, master_seed: u64) -> Self {
        Self {
            n_qubits,
            mode,
            samples_per_rep: 200,
            repetitions: 16,
            master_seed,
            location: None,
            amplitude_cap: DEFAULT_AMPLITUDE_CAP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_rep < 2 {
            return Err(Error::InvalidConfig(format!("samples per repetition must be >= 2, got {}", self.samples_per_rep)));
        }
        if self.repetitions < 1 {
            return Err(Error::InvalidConfig("repetitions must be >= 1".into()));
        }
        let requested = 1u128.checked_shl(self.n_qubits as u32).unwrap_or(u128::MAX);
        if self.n_qubits >= 128 || requested > self.amplitude_cap {
            return Err(Error::ResourceCap { requested, cap: self.amplitude_cap });
        }
        Ok(())
    }

    pub fn total_samples(&self) -> usize {
        self.samples_per_rep * self.repetitions
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the RNG for one sample, a pure function of its coordinates.
pub fn sample_seed(master_seed: u64, rep: usize, sample: usize) -> u64 {
    let h = splitmix64(master_seed);
    let h = splitmix64(h ^ rep as u64);
    splitmix64(h ^ (sample as u64).rotate_left(32))
}

pub fn sample_rng(master_seed: u64, rep: usize, sample: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sample_seed(master_seed, rep, sample))
}

/// `count` angles drawn uniformly from `[0, 2pi)`.
pub fn draw_angles<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<f64> {
    (0..count).map(|_| rng.gen::<f64>() * TAU).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub config: ExperimentConfig,
    /// Unbiased variance of each repetition.
    pub per_rep_variances: Vec<f64>,
    pub per_rep_means: Vec<f64>,
    pub mean_gradient: f64,
    /// Mean of the per-repetition variances.
    pub variance: f64,
    /// Standard deviation of the per-repetition variances over `sqrt(reps)`.
    pub variance_stderr: f64,
    /// Unbiased variance of all samples taken together.
    pub pooled_sample_variance: f64,
    /// `sqrt(pooled_sample_variance / total samples)`.
    pub mean_stderr: f64,
    pub sample_count: usize,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn unbiased_variance(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

impl VarianceReport {
    /// Aggregates gradients stored repetition-major
    /// (`grads[rep * samples_per_rep + sample]`).
    pub fn from_samples(config: ExperimentConfig, grads: &[f64]) -> Result<Self> {
        config.validate()?;
        if grads.len() != config.total_samples() {
            return Err(Error::DimensionMismatch { expected: config.total_samples(), actual: grads.len() });
        }
        let mut per_rep_means = Vec::with_capacity(config.repetitions);
        let mut per_rep_variances = Vec::with_capacity(config.repetitions);
        for chunk in grads.chunks(config.samples_per_rep) {
            let m = mean(chunk);
            per_rep_means.push(m);
            per_rep_variances.push(unbiased_variance(chunk, m));
        }
        let variance = mean(&per_rep_variances);
        let variance_stderr = if config.repetitions > 1 {
            (unbiased_variance(&per_rep_variances, variance) / config.repetitions as f64).sqrt()
        } else {
            0.0
        };
        let mean_gradient = mean(grads);
        let pooled_sample_variance = unbiased_variance(grads, mean_gradient);
        Ok(Self {
            config,
            per_rep_variances,
            per_rep_means,
            mean_gradient,
            variance,
            variance_stderr,
            pooled_sample_variance,
            mean_stderr: (pooled_sample_variance / grads.len() as f64).sqrt(),
            sample_count: grads.len(),
        })
    }
}

/// Runs `sampler(rep, sample, rng)` for every sample in parallel, each with
/// its own counter-seeded RNG, and aggregates in `(rep, sample)` order.
pub fn run_with_sampler<F>(config: ExperimentConfig, sampler: F) -> Result<VarianceReport>
where
    F: Fn(usize, usize, &mut ChaCha8Rng) -> Result<f64> + Sync,
{
    config.validate()?;
    let per = config.samples_per_rep;
    let grads = (0..config.total_samples())
        .into_par_iter()
        .map(|i| {
            let (rep, sample) = (i / per, i % per);
            sampler(rep, sample, &mut sample_rng(config.master_seed, rep, sample))
        })
        .collect::<Result<Vec<f64>>>()?;
    VarianceReport::from_samples(config, &grads)
}

/// Gradient statistics of the QCNN cost at the configured parameter.
pub fn run_variance_experiment(config: &ExperimentConfig) -> Result<VarianceReport> {
    config.validate()?;
    let qcnn = build_qcnn(config.n_qubits, config.mode)?;
    let loc = config.location.unwrap_or_else(|| qcnn.default_location());
    let block = qcnn.resolve(&loc)?;
    let count = qcnn.param_count();
    run_with_sampler(*config, |_, _, rng| {
        let params = draw_angles(rng, count);
        qcnn.gradient_at_block(&params, block, loc.angle, None)
    })
}

/// One report per width, all other settings taken from `template`.
pub fn scaling_sweep(n_list: &[usize], mode: BindingMode, template: &ExperimentConfig) -> Result<Vec<VarianceReport>> {
    n_list
        .iter()
        .map(|&n| {
            let config = ExperimentConfig { n_qubits: n, mode, ..*template };
            run_variance_experiment(&config)
        })
        .collect()
}

/// Lower bound for the parameter at `loc` (default location if `None`)
/// with the default operator constants.
pub fn bound_for_location(n_qubits: usize, loc: Option<ParamLocation>) -> Result<BoundResult> {
    let qcnn = build_qcnn(n_qubits, BindingMode::Uncorrelated)?;
    let loc = loc.unwrap_or_else(|| qcnn.default_location());
    let topology: &QcnnTopology = qcnn.topology();
    let det = detect_case(topology, &loc)?;
    lower_bound(&BoundInputs::with_defaults(n_qubits, det.total_layers, det.ell, det.position, det.case))
}

/// One CSV row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub mode: BindingMode,
    pub samples: usize,
    pub reps: usize,
    pub var: f64,
    pub var_stderr: f64,
    pub mean_grad: f64,
    #[serde(rename = "bound_F")]
    pub bound_f: Option<f64>,
    pub seed: u64,
}

impl SweepRow {
    pub fn from_report(report: &VarianceReport, bound_f: Option<f64>) -> Self {
        let c = &report.config;
        Self {
            n: c.n_qubits,
            mode: c.mode,
            samples: c.samples_per_rep,
            reps: c.repetitions,
            var: report.variance,
            var_stderr: report.variance_stderr,
            mean_grad: report.mean_gradient,
            bound_f,
            seed: c.master_seed,
        }
    }
}

/// Writes `n,mode,samples,reps,var,var_stderr,mean_grad,bound_F,seed`.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["n", "mode", "samples", "reps", "var", "var_stderr", "mean_grad", "bound_F", "seed"])?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn seeds_depend_on_every_coordinate() {
        let s = sample_seed(1, 2, 3);
        assert_ne!(s, sample_seed(2, 2, 3));
        assert_ne!(s, sample_seed(1, 3, 3));
        assert_ne!(s, sample_seed(1, 2, 4));
        assert_ne!(sample_seed(0, 1, 0), sample_seed(0, 0, 1));
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = ExperimentConfig::new(4, BindingMode::Uncorrelated, 0);
        c.samples_per_rep = 1;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::new(30, BindingMode::Uncorrelated, 0);
        assert!(matches!(c.validate(), Err(Error::ResourceCap { .. })));
        c.amplitude_cap = 1 << 30;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn gaussian_stub_recovers_population_variance() {
        let config = ExperimentConfig::new(4, BindingMode::Uncorrelated, 17);
        let normal = Normal::new(0.3, 2.0).unwrap();
        let r = run_with_sampler(config, |_, _, rng| Ok(normal.sample(rng))).unwrap();
        assert_eq!(r.sample_count, 3200);
        assert!((r.variance - 4.0).abs() / 4.0 < 0.05, "{}", r.variance);
        assert!((r.mean_gradient - 0.3).abs() < 3.0 * r.mean_stderr);
    }

    #[test]
    fn csv_header_and_empty_bound() {
        let config = ExperimentConfig::new(4, BindingMode::Correlated, 5);
        let r = run_with_sampler(config, |rep, s, _| Ok((rep * 7 + s) as f64)).unwrap();
        let mut buf = Vec::new();
        write_csv(&[SweepRow::from_report(&r, None)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("n,mode,samples,reps,var,var_stderr,mean_grad,bound_F,seed"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[..4], ["4", "corr", "200", "16"]);
        assert_eq!(row[7], "");
    }
}
