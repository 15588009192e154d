use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};

/// Mean leak probability of the `2^N` inputs at one register size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakPoint {
    pub n: usize,
    pub mean: f64,
    /// Standard deviation over inputs.
    pub spread: f64,
    /// Standard error of `mean`.
    pub sigma: f64,
}

/// `f(N) = 1 - A p^(2N-3)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageFit {
    pub a: f64,
    pub p: f64,
    /// Row-major `[[var A, cov], [cov, var p]]`.
    pub covariance: [[f64; 2]; 2],
    pub residual: f64,
    pub iterations: usize,
    pub points: Vec<LeakPoint>,
}

impl LeakageFit {
    pub fn predict(&self, n: usize) -> f64 {
        leak_model(self.a, self.p, n as f64)
    }

    pub fn sigma_p(&self) -> f64 {
        self.covariance[1][1].max(0.0).sqrt()
    }

    pub fn sigma_a(&self) -> f64 {
        self.covariance[0][0].max(0.0).sqrt()
    }
}

fn leak_model(a: f64, p: f64, n: f64) -> f64 {
    1.0 - a * p.powf(2.0 * n - 3.0)
}

const MAX_ITER: usize = 500;
const TOL: f64 = 1e-10;

/// Levenberg-Marquardt fit of `1 - A p^(2N-3)` to mean leak
/// probabilities, started from `A = 1`, `p = 0.95`.
pub fn fit_leakage(points: &[LeakPoint]) -> Result<LeakageFit> {
    if points.len() < 3 {
        return arg(format!("leakage fit needs at least 3 points, got {}", points.len()));
    }
    if points.iter().any(|pt| !pt.mean.is_finite()) {
        return arg("leak probabilities must be finite");
    }
    let xs: Vec<f64> = points.iter().map(|pt| pt.n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|pt| pt.mean).collect();
    let rss = |a: f64, p: f64| -> f64 { xs.iter().zip(&ys).map(|(&x, &y)| (y - leak_model(a, p, x)).powi(2)).sum() };
    let jac = |a: f64, p: f64| -> (Matrix2<f64>, Vector2<f64>) {
        let mut jtj = Matrix2::zeros();
        let mut jtr = Vector2::zeros();
        for (&x, &y) in xs.iter().zip(&ys) {
            let k = 2.0 * x - 3.0;
            let pk = p.powf(k);
            // derivatives of the model
            let j = Vector2::new(-pk, -a * k * p.powf(k - 1.0));
            let r = y - leak_model(a, p, x);
            jtj += j * j.transpose();
            jtr += j * r;
        }
        (jtj, jtr)
    };

    let (mut a, mut p) = (1.0, 0.95);
    let mut cost = rss(a, p);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITER {
        iterations += 1;
        let (jtj, jtr) = jac(a, p);
        let mut damped = jtj;
        for i in 0..2 {
            damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
        }
        let Some(step) = damped.try_inverse().map(|m| m * jtr) else {
            lambda *= 10.0;
            continue;
        };
        let (na, np) = (a + step[0], (p + step[1]).clamp(1e-9, 1.0));
        let new_cost = rss(na, np);
        if new_cost <= cost {
            let change = (cost - new_cost) / cost.max(f64::MIN_POSITIVE);
            a = na;
            p = np;
            cost = new_cost;
            lambda = (lambda / 10.0).max(1e-12);
            if change < TOL || cost < 1e-28 {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                // no downhill step left: a minimum
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations, residual: cost });
    }
    let (jtj, _) = jac(a, p);
    let dof = points.len().saturating_sub(2).max(1) as f64;
    let s2 = cost / dof;
    let cov = jtj.try_inverse().map(|m| m * s2).unwrap_or(Matrix2::from_element(f64::NAN));
    Ok(LeakageFit {
        a,
        p,
        covariance: [[cov[(0, 0)], cov[(0, 1)]], [cov[(1, 0)], cov[(1, 1)]]],
        residual: cost,
        iterations,
        points: points.to_vec(),
    })
}

/// Fit of `offset + amplitude * cos(phi - phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyFit {
    pub amplitude: f64,
    /// In `(-pi, pi]`.
    pub phase: f64,
    pub offset: f64,
    /// False when the fringe is too weak for the phase to mean anything.
    pub reliable: bool,
}

impl RamseyFit {
    /// The single-ion phase acquired in the calibration circuit, whose
    /// `|2>` population is `(1 - cos(phi - chi)) / 2`, i.e. the fringe
    /// minimum.
    pub fn acquired_phase(&self) -> f64 {
        wrap(self.phase - PI)
    }
}

pub fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// Linear least squares on `a + b cos(phi) + c sin(phi)`.
pub fn fit_ramsey(phis: &[f64], p2: &[f64]) -> Result<RamseyFit> {
    let m = phis.len();
    if m != p2.len() {
        return arg(format!("{} phases but {} populations", m, p2.len()));
    }
    if m < 8 {
        return arg(format!("Ramsey fit needs at least 8 points, got {m}"));
    }
    let lo = phis.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = phis.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // an evenly spaced scan without the repeated endpoint still covers a period
    if hi - lo < 2.0 * PI * (m as f64 - 1.0) / m as f64 - 1e-9 {
        return arg(format!("Ramsey scan must span a full period, spans {:.4}", hi - lo));
    }
    let design = DMatrix::from_fn(m, 3, |i, j| match j {
        0 => 1.0,
        1 => phis[i].cos(),
        _ => phis[i].sin(),
    });
    let y = DVector::from_column_slice(p2);
    let sol = design
        .clone()
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|e| Error::Argument(format!("Ramsey fit failed: {e}")))?;
    let (a, b, c) = (sol[0], sol[1], sol[2]);
    let amplitude = b.hypot(c);
    let scale = p2.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    Ok(RamseyFit { amplitude, phase: wrap(c.atan2(b)), offset: a, reliable: amplitude > 1e-6 * scale.max(1.0) })
}
