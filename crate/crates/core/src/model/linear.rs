//! Classifier C: L2-regularized logistic regression on standardized
//! features, fit by damped Newton iterations.

use serde::{Deserialize, Serialize};

use super::{logistic_loss, sigmoid, validate_training_set, LabeledVector};
use crate::error::{CoreError, Result};

const GRADIENT_TOLERANCE: f64 = 1e-6;
const MAX_ITERATIONS: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    /// C in the objective sum(loss) + ||w||^2 / (2C).
    pub inverse_regularization: f64,
}

impl Default for LinearParams {
    fn default() -> Self {
        Self {
            inverse_regularization: 10.0,
        }
    }
}

/// Per-feature training-set statistics applied before the dot product.
/// A zero-variance column keeps std 1.0 so it passes through centered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardization {
    fn fit(features: &[Vec<f64>]) -> Self {
        let n = features.len() as f64;
        let d = features[0].len();
        let mut means = vec![0.0; d];
        for x in features {
            for (m, v) in means.iter_mut().zip(x) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut stds = vec![0.0; d];
        for x in features {
            for j in 0..d {
                let c = x[j] - means[j];
                stds[j] += c * c;
            }
        }
        for s in &mut stds {
            *s = (*s / n).sqrt();
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        Self { means, stds }
    }

    pub fn apply(&self, features: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            features
                .iter()
                .zip(self.means.iter().zip(&self.stds))
                .map(|(x, (m, s))| (x - m) / s),
        );
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub inverse_regularization: f64,
    pub standardization: Standardization,
    /// False when the gradient never reached tolerance; a warning, not
    /// a failure.
    pub converged: bool,
    pub iterations: u32,
}

impl LinearModel {
    pub fn predict_proba(&self, features: &[f64]) -> f64 {
        let mut z = Vec::with_capacity(features.len());
        self.standardization.apply(features, &mut z);
        let margin: f64 = self.weights.iter().zip(&z).map(|(w, x)| w * x).sum();
        sigmoid(margin + self.bias)
    }
}

/// Fit by Newton's method on the penalized logistic objective. The bias
/// is unpenalized. Steps are halved while they would increase the
/// objective, which keeps separable toy sets from overshooting.
pub fn train_linear(data: &[LabeledVector], params: &LinearParams) -> Result<LinearModel> {
    let d = validate_training_set(data, true)?;
    let c = params.inverse_regularization;
    // NaN must fail this check too.
    if c.is_nan() || c <= 0.0 {
        return Err(CoreError::Training(format!(
            "inverse_regularization must be positive, got {c}"
        )));
    }

    let raw: Vec<Vec<f64>> = data.iter().map(|d| d.features.clone()).collect();
    let labels: Vec<f64> = data
        .iter()
        .map(|d| if d.is_vm { 1.0 } else { 0.0 })
        .collect();

    let standardization = Standardization::fit(&raw);
    let mut z = Vec::new();
    let x: Vec<Vec<f64>> = raw
        .iter()
        .map(|r| {
            standardization.apply(r, &mut z);
            z.clone()
        })
        .collect();

    // parameter vector theta = [w_0..w_{d-1}, b]
    let dim = d + 1;
    let mut theta = vec![0.0; dim];

    let objective = |theta: &[f64]| {
        let penalty: f64 = theta[..d].iter().map(|w| w * w).sum::<f64>() / (2.0 * c);
        let loss: f64 = x
            .iter()
            .zip(&labels)
            .map(|(xi, &y)| logistic_loss(margin(theta, xi, d), y))
            .sum();
        loss + penalty
    };

    let mut converged = false;
    let mut iterations = 0;
    let mut grad = vec![0.0; dim];
    let mut hessian = vec![0.0; dim * dim];

    for iter in 1..=MAX_ITERATIONS {
        iterations = iter;

        grad.fill(0.0);
        hessian.fill(0.0);
        for (xi, &y) in x.iter().zip(&labels) {
            let p = sigmoid(margin(&theta, xi, d));
            let err = p - y;
            let s = p * (1.0 - p);
            for j in 0..d {
                grad[j] += err * xi[j];
                for k in j..d {
                    hessian[j * dim + k] += s * xi[j] * xi[k];
                }
                hessian[j * dim + d] += s * xi[j];
            }
            grad[d] += err;
            hessian[d * dim + d] += s;
        }
        for j in 0..d {
            grad[j] += theta[j] / c;
            hessian[j * dim + j] += 1.0 / c;
        }
        // tiny ridge keeps the bias row invertible when p saturates
        hessian[d * dim + d] += 1e-12;
        for j in 0..dim {
            for k in 0..j {
                hessian[j * dim + k] = hessian[k * dim + j];
            }
        }

        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm < GRADIENT_TOLERANCE {
            converged = true;
            iterations = iter - 1;
            break;
        }

        let step = solve_dense(&mut hessian, &mut grad, dim)?;

        let current = objective(&theta);
        let mut scale = 1.0;
        for _ in 0..60 {
            let candidate: Vec<f64> = theta
                .iter()
                .zip(&step)
                .map(|(t, s)| t - scale * s)
                .collect();
            if objective(&candidate) <= current + 1e-15 {
                theta = candidate;
                break;
            }
            scale /= 2.0;
        }
    }

    let bias = theta[d];
    theta.truncate(d);
    Ok(LinearModel {
        weights: theta,
        bias,
        inverse_regularization: c,
        standardization,
        converged,
        iterations,
    })
}

fn margin(theta: &[f64], x: &[f64], d: usize) -> f64 {
    theta[..d].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + theta[d]
}

/// Gaussian elimination with partial pivoting on a dense row-major
/// system; consumes both the matrix and the right-hand side.
fn solve_dense(a: &mut [f64], b: &mut [f64], dim: usize) -> Result<Vec<f64>> {
    for col in 0..dim {
        let pivot_row = (col..dim)
            .max_by(|&r1, &r2| a[r1 * dim + col].abs().total_cmp(&a[r2 * dim + col].abs()))
            .unwrap();
        if a[pivot_row * dim + col].abs() < 1e-300 {
            return Err(CoreError::Training(
                "singular Newton system; features may be degenerate".into(),
            ));
        }
        if pivot_row != col {
            for k in 0..dim {
                a.swap(col * dim + k, pivot_row * dim + k);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * dim + col];
        for row in (col + 1)..dim {
            let factor = a[row * dim + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for k in col..dim {
                a[row * dim + k] -= factor * a[col * dim + k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; dim];
    for col in (0..dim).rev() {
        let mut acc = b[col];
        for k in (col + 1)..dim {
            acc -= a[col * dim + k] * x[k];
        }
        x[col] = acc / a[col * dim + col];
    }
    Ok(x)
}
