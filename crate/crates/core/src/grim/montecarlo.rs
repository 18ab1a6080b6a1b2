use nalgebra::{DMatrix, SMatrix};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{rational, to_f64, Rational};
use crate::simkit::{haar_random_unitary, Mat4, C64};
use crate::{Error, Result};

/// Minimum sample count accepted by the verifiers.
pub const MIN_SAMPLES: usize = 10_000;

/// Coefficient linking the first node to itself through one centre module.
pub fn center_module_coefficient() -> Rational {
    rational(28, 125)
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

/// `E[w_{ij} w*_{i'j'}] = delta_{ii'} delta_{jj'} / d`.
pub fn weingarten_first_moment(i: usize, j: usize, ip: usize, jp: usize, dim: usize) -> f64 {
    delta(i, ip) * delta(j, jp) / dim as f64
}

/// `E[w_{i1 j1} w_{i2 j2} w*_{i1' j1'} w*_{i2' j2'}]` for
/// `w = [i1, j1, i2, j2]` and `wc = [i1', j1', i2', j2']`.
pub fn weingarten_second_moment(w: [usize; 4], wc: [usize; 4], dim: usize) -> f64 {
    let [i1, j1, i2, j2] = w;
    let [k1, l1, k2, l2] = wc;
    let d = dim as f64;
    let direct_i = delta(i1, k1) * delta(i2, k2);
    let crossed_i = delta(i1, k2) * delta(i2, k1);
    let direct_j = delta(j1, l1) * delta(j2, l2);
    let crossed_j = delta(j1, l2) * delta(j2, l1);
    let d1 = direct_i * direct_j + crossed_i * crossed_j;
    let d2 = direct_i * crossed_j + crossed_i * direct_j;
    (d1 - d2 / d) / (d * d - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeingartenReport {
    pub dim: usize,
    pub samples: usize,
    pub max_first_deviation: f64,
    pub max_second_deviation: f64,
    pub max_deviation: f64,
    /// Estimate of `E[|w_11|^4]`.
    pub fourth_moment_11: f64,
}

/// Compares Monte Carlo first and second moments of Haar unitaries with the
/// closed forms, entry by entry.
pub fn verify_weingarten_moments<R: Rng + ?Sized>(dim: usize, samples: usize, rng: &mut R) -> Result<WeingartenReport> {
    if dim < 2 {
        return Err(Error::InvalidConfig(format!("dimension must be at least 2, got {dim}")));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidConfig(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    let d2 = dim * dim;
    let pairs: Vec<(usize, usize)> = (0..d2).flat_map(|a| (a..d2).map(move |b| (a, b))).collect();
    let np = pairs.len();
    let mut first = vec![C64::new(0.0, 0.0); d2 * d2];
    let mut second = vec![C64::new(0.0, 0.0); np * np];
    let mut prod = vec![C64::new(0.0, 0.0); np];
    for _ in 0..samples {
        let u = haar_random_unitary(dim, rng);
        let w: Vec<C64> = (0..d2).map(|a| u[(a / dim, a % dim)]).collect();
        for a in 0..d2 {
            for b in 0..d2 {
                first[a * d2 + b] += w[a] * w[b].conj();
            }
        }
        for (slot, &(a, b)) in prod.iter_mut().zip(&pairs) {
            *slot = w[a] * w[b];
        }
        for p in 0..np {
            let vp = prod[p];
            let row = &mut second[p * np..(p + 1) * np];
            for q in p..np {
                row[q] += vp * prod[q].conj();
            }
        }
    }
    let n = samples as f64;
    let mut max_first: f64 = 0.0;
    for a in 0..d2 {
        for b in 0..d2 {
            let exact = weingarten_first_moment(a / dim, a % dim, b / dim, b % dim, dim);
            max_first = max_first.max((first[a * d2 + b] / n - exact).norm());
        }
    }
    let split = |x: usize| (x / dim, x % dim);
    let mut max_second: f64 = 0.0;
    for p in 0..np {
        for q in p..np {
            let ((i1, j1), (i2, j2)) = (split(pairs[p].0), split(pairs[p].1));
            let ((k1, l1), (k2, l2)) = (split(pairs[q].0), split(pairs[q].1));
            let exact = weingarten_second_moment([i1, j1, i2, j2], [k1, l1, k2, l2], dim);
            max_second = max_second.max((second[p * np + q] / n - exact).norm());
        }
    }
    Ok(WeingartenReport {
        dim,
        samples,
        max_first_deviation: max_first,
        max_second_deviation: max_second,
        max_deviation: max_first.max(max_second),
        fourth_moment_11: second[0].re / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModuleType {
    Center,
    EdgeFirstStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternEstimate {
    /// Contraction pattern on the two outer wires, `true` = traced.
    pub traced: [bool; 2],
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleIntegrationReport {
    pub module: ModuleType,
    pub samples: usize,
    pub patterns: Vec<PatternEstimate>,
    /// `sum_s a_s / 2^(traced wires in s)`.
    pub aggregate: f64,
    pub aggregate_stderr: f64,
    pub expected: f64,
    pub relative_error: f64,
}

type Mat16 = SMatrix<C64, 16, 16>;

const PATTERNS: [[bool; 2]; 4] = [[false, false], [false, true], [true, false], [true, true]];

/// `(p, q, p', q')` index tuples realising a traced or open wire.
fn tuples(traced: bool) -> [[usize; 4]; 2] {
    if traced {
        [[0, 0, 1, 1], [1, 1, 0, 0]]
    } else {
        [[0, 1, 1, 0], [1, 0, 0, 1]]
    }
}

fn to_mat4(m: &DMatrix<C64>) -> Mat4 {
    Mat4::from_fn(|i, j| m[(i, j)])
}

fn to_mat2(m: &DMatrix<C64>) -> nalgebra::Matrix2<C64> {
    nalgebra::Matrix2::from_fn(|i, j| m[(i, j)])
}

/// `eps(A) = Tr[A^2] - Tr[A]^2 / 4` for a 4x4 operator.
fn eps4(a: &Mat4) -> f64 {
    ((a * a).trace() - a.trace() * a.trace() / 4.0).re
}

/// Block of `x` with outer wires fixed: rows `(q0, *, *, q3)`, columns
/// `(p0, *, *, p3)`.
fn omega(x: &Mat16, q: (usize, usize), p: (usize, usize)) -> Mat4 {
    Mat4::from_fn(|r, c| x[(q.0 | (r << 1) | (q.1 << 3), p.0 | (c << 1) | (p.1 << 3))])
}

/// Raw per-pattern means (and their standard errors) of
/// `Tr[Om Om'] - Tr[Om] Tr[Om'] / 4` for the centre module acting on
/// `o_tilde`, together with the weighted aggregate.
///
/// The module has blocks on wires (0,1) and (2,3) followed by a block on
/// (1,2); `o_tilde` sits on (1,2) and wires 0 and 3 are the outer wires
/// whose indices are fixed in a random local basis.
pub fn center_module_contraction<R: Rng + ?Sized>(
    o_tilde: &Mat4,
    samples: usize,
    rng: &mut R,
) -> Result<(Vec<PatternEstimate>, PatternEstimate)> {
    if samples < 2 {
        return Err(Error::InvalidConfig("need at least two samples".into()));
    }
    let v0 = to_mat2(&haar_random_unitary(2, rng));
    let v3 = to_mat2(&haar_random_unitary(2, rng));
    let basis = Mat16::from_fn(|i, j| {
        let inner = if (i >> 1) & 3 == (j >> 1) & 3 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
        v0[(i & 1, j & 1)] * v3[(i >> 3, j >> 3)] * inner
    });
    let mut sums = [[0.0f64; 2]; 5];
    for _ in 0..samples {
        let u1 = to_mat4(&haar_random_unitary(4, rng));
        let u2 = to_mat4(&haar_random_unitary(4, rng));
        let w = to_mat4(&haar_random_unitary(4, rng));
        let y = w.adjoint() * o_tilde * w;
        let y_full = Mat16::from_fn(|i, j| {
            if i & 0b1001 == j & 0b1001 {
                y[((i >> 1) & 3, (j >> 1) & 3)]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let k = Mat16::from_fn(|i, j| u2[(i >> 2, j >> 2)] * u1[(i & 3, j & 3)]) * basis;
        let x = k.adjoint() * y_full * k;
        let mut aggregate = 0.0;
        for (s, traced) in PATTERNS.iter().enumerate() {
            let mut acc = 0.0;
            for t0 in tuples(traced[0]) {
                for t3 in tuples(traced[1]) {
                    let a = omega(&x, (t0[1], t3[1]), (t0[0], t3[0]));
                    let b = omega(&x, (t0[3], t3[3]), (t0[2], t3[2]));
                    acc += ((a * b).trace() - a.trace() * b.trace() / 4.0).re;
                }
            }
            let value = acc / 4.0;
            let weight = 0.5f64.powi(traced.iter().filter(|&&t| t).count() as i32);
            aggregate += weight * value;
            sums[s][0] += value;
            sums[s][1] += value * value;
        }
        sums[4][0] += aggregate;
        sums[4][1] += aggregate * aggregate;
    }
    let n = samples as f64;
    let stat = |s: [f64; 2]| {
        let mean = s[0] / n;
        let var = ((s[1] - n * mean * mean) / (n - 1.0)).max(0.0);
        (mean, (var / n).sqrt())
    };
    let patterns = PATTERNS
        .iter()
        .zip(&sums)
        .map(|(&traced, &s)| {
            let (mean, stderr) = stat(s);
            PatternEstimate { traced, mean, stderr }
        })
        .collect();
    let (mean, stderr) = stat(sums[4]);
    Ok((patterns, PatternEstimate { traced: [false, false], mean, stderr }))
}

/// Estimates the module coefficient by averaging the contraction over Haar
/// blocks for a random Hermitian `O~`, normalised by `eps(O~)`.
pub fn verify_module_integration<R: Rng + ?Sized>(
    module: ModuleType,
    samples: usize,
    rng: &mut R,
) -> Result<ModuleIntegrationReport> {
    if module == ModuleType::EdgeFirstStep {
        return Err(Error::InvalidConfig("edge-module wiring is not specified precisely enough to simulate".into()));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidConfig(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    let (o_tilde, eps) = loop {
        let g = to_mat4(&DMatrix::from_fn(4, 4, |_, _| {
            C64::new(rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal))
        }));
        let h = g + g.adjoint();
        let e = eps4(&h);
        if e > 1e-6 * (h * h).trace().re {
            break (h, e);
        }
    };
    let (raw, agg) = center_module_contraction(&o_tilde, samples, rng)?;
    let patterns = raw
        .into_iter()
        .map(|p| PatternEstimate { traced: p.traced, mean: p.mean / eps, stderr: p.stderr / eps })
        .collect();
    let expected = to_f64(&center_module_coefficient());
    let aggregate = agg.mean / eps;
    Ok(ModuleIntegrationReport {
        module,
        samples,
        patterns,
        aggregate,
        aggregate_stderr: agg.stderr / eps,
        expected,
        relative_error: (aggregate - expected).abs() / expected,
    })
}
