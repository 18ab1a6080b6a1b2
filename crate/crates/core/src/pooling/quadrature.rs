//! Adaptive Gauss-Kronrod (7/15) integration.

use std::collections::BinaryHeap;

use crate::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

/// Kronrod estimate and `|Kronrod - Gauss|` on `[a, b]`.
fn gk15<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx)? + f(c + dx)?;
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    Ok((kronrod * h, ((kronrod - gauss) * h).abs()))
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over consecutive panels given by `breaks` (sorted), to an
/// absolute error estimate of `tol`.
pub fn integrate<F: FnMut(f64) -> Result<f64>>(mut f: F, breaks: &[f64], tol: f64) -> Result<f64> {
    if breaks.len() < 2 {
        return Err(Error::Quadrature("need at least one panel".into()));
    }
    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (0.0, 0.0);
    for w in breaks.windows(2) {
        let (value, error) = gk15(&mut f, w[0], w[1])?;
        total += value;
        err += error;
        heap.push(Piece { a: w[0], b: w[1], value, error });
    }
    while err > tol {
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(format!("error estimate {err:.3e} above {tol:.1e} after {MAX_INTERVALS} intervals")));
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature(format!("interval collapsed near {mid}")));
        }
        total -= worst.value;
        err -= worst.error;
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gk15(&mut f, a, b)?;
            total += value;
            err += error;
            heap.push(Piece { a, b, value, error });
        }
        if err <= tol {
            // Guard against cancellation drift in the running sums.
            err = heap.iter().map(|p| p.error).sum();
            total = heap.iter().map(|p| p.value).sum();
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        let k: f64 = 2.0 * WGK[..7].iter().sum::<f64>() + WGK[7];
        let g: f64 = 2.0 * WG[..3].iter().sum::<f64>() + WG[3];
        assert!((k - 2.0).abs() < 1e-15);
        assert!((g - 2.0).abs() < 1e-15);
    }

    #[test]
    fn exact_for_high_degree_polynomials() {
        let mut f = |x: f64| Ok(x.powi(22) + 3.0 * x.powi(5));
        let (v, _) = gk15(&mut f, -1.0, 1.0).unwrap();
        assert!((v - 2.0 / 23.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_kinks_at_breaks() {
        let pi = std::f64::consts::PI;
        let v = integrate(|x: f64| Ok(x.sin().abs()), &[-pi, 0.0, pi], 1e-13).unwrap();
        assert!((v - 4.0).abs() < 1e-13);
        let w = integrate(|x: f64| Ok((-x * x).exp()), &[-8.0, 8.0], 1e-13).unwrap();
        assert!((w - pi.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn non_convergence_is_an_error() {
        let r = integrate(|x: f64| Ok(if x > 0.1234567 { 1.0 } else { 0.0 }), &[0.0, 1.0], 1e-300);
        assert!(matches!(r, Err(Error::Quadrature(_))));
    }
}
