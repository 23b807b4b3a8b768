//! Least squares, ridge and elastic-net auto-regression.

use nalgebra::{DMatrix, DVector};

use crate::data::Matrix;

/// Ridge used when the OLS normal equations are singular.
pub const SINGULAR_FALLBACK_LAMBDA: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl LinearModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(row)
                .map(|(b, x)| b * x)
                .sum::<f64>()
    }
}

fn column_means(x: &Matrix) -> Vec<f64> {
    let n = x.rows() as f64;
    let mut means = vec![0.0; x.cols()];
    for row in x.iter_rows() {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    means
}

/// Solves `min ||y - b0 - X b||^2 + lambda ||b||^2` with an unpenalized
/// intercept. Returns `None` when the centered Gram matrix plus penalty is
/// not numerically positive definite.
pub fn ridge(x: &Matrix, y: &[f64], lambda: f64) -> Option<LinearModel> {
    let (n, p) = (x.rows(), x.cols());
    let x_mean = column_means(x);
    let y_mean = y.iter().sum::<f64>() / n as f64;

    let centered = DMatrix::from_fn(n, p, |i, j| x.get(i, j) - x_mean[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
    let mut gram = centered.transpose() * &centered;
    for j in 0..p {
        gram[(j, j)] += lambda;
    }
    let rhs = centered.transpose() * yc;

    let scale = (0..p).map(|j| gram[(j, j)].abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let chol = gram.cholesky()?;
    let min_pivot = (0..p).map(|j| chol.l_dirty()[(j, j)].powi(2)).fold(f64::INFINITY, f64::min);
    if min_pivot <= scale * 1e-13 {
        return None;
    }
    let b = chol.solve(&rhs);
    let coefficients: Vec<f64> = b.iter().copied().collect();
    if coefficients.iter().any(|c| !c.is_finite()) {
        return None;
    }
    let intercept = y_mean - coefficients.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    Some(LinearModel {
        intercept,
        coefficients,
    })
}

/// Ordinary least squares; falls back to a tiny ridge penalty when the
/// system is singular. The flag reports the fallback.
pub fn ols(x: &Matrix, y: &[f64]) -> (LinearModel, bool) {
    match ridge(x, y, 0.0) {
        Some(m) => (m, false),
        None => (ridge_or_mean(x, y, SINGULAR_FALLBACK_LAMBDA), true),
    }
}

/// Ridge that degrades to the intercept-only model when even the penalized
/// system is degenerate (all features constant).
pub fn ridge_or_mean(x: &Matrix, y: &[f64], lambda: f64) -> LinearModel {
    ridge(x, y, lambda).unwrap_or_else(|| LinearModel {
        intercept: y.iter().sum::<f64>() / y.len() as f64,
        coefficients: vec![0.0; x.cols()],
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticNetOptions {
    pub alpha: f64,
    pub lambda: f64,
    pub tolerance: f64,
    pub max_sweeps: usize,
}

fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Coordinate descent on
/// `(1/2N) ||y - b0 - Xs b||^2 + lambda * ((1-alpha)/2 ||b||^2 + alpha ||b||_1)`
/// over standardized features `Xs`; coefficients are mapped back to the
/// original feature scale.
pub fn elastic_net(x: &Matrix, y: &[f64], opts: &ElasticNetOptions) -> LinearModel {
    let (n, p) = (x.rows(), x.cols());
    let nf = n as f64;
    let x_mean = column_means(x);
    let x_sd: Vec<f64> = (0..p)
        .map(|j| {
            let ss: f64 = x.iter_rows().map(|r| (r[j] - x_mean[j]).powi(2)).sum();
            (ss / nf).sqrt()
        })
        .collect();
    let y_mean = y.iter().sum::<f64>() / nf;

    // Column-major standardized features.
    let xs: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            if x_sd[j] > 0.0 {
                x.iter_rows().map(|r| (r[j] - x_mean[j]) / x_sd[j]).collect()
            } else {
                vec![0.0; n]
            }
        })
        .collect();
    let mut residual: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let mut beta = vec![0.0; p];
    let l1 = opts.lambda * opts.alpha;
    let denom = 1.0 + opts.lambda * (1.0 - opts.alpha);

    for _ in 0..opts.max_sweeps {
        let mut max_delta: f64 = 0.0;
        for j in 0..p {
            if x_sd[j] == 0.0 {
                continue;
            }
            let col = &xs[j];
            let z = col.iter().zip(&residual).map(|(a, r)| a * r).sum::<f64>() / nf + beta[j];
            let updated = soft_threshold(z, l1) / denom;
            let delta = updated - beta[j];
            if delta != 0.0 {
                for (r, a) in residual.iter_mut().zip(col) {
                    *r -= delta * a;
                }
                beta[j] = updated;
                max_delta = max_delta.max(delta.abs());
            }
        }
        if max_delta < opts.tolerance {
            break;
        }
    }

    let coefficients: Vec<f64> = (0..p)
        .map(|j| if x_sd[j] > 0.0 { beta[j] / x_sd[j] } else { 0.0 })
        .collect();
    let intercept = y_mean - coefficients.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    LinearModel {
        intercept,
        coefficients,
    }
}
