//! Multinomial logistic regression. Class 0 is the reference with zero
//! logit, so the remaining `C − 1` weight vectors are identifiable.

use crate::error::{Error, Result};
use crate::solver::linalg::{cholesky, cholesky_solve, dot, norm};

use super::logreg::PROB_CLIP;

const GRAD_TOL: f64 = 1e-6;
const MAX_NEWTON: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxClassifier {
    pub classes: usize,
    pub dim: usize,
    /// Row-major `classes × dim`; row 0 is all zeros.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

fn softmax_in_place(z: &mut [f64]) {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    for v in z.iter_mut() {
        *v /= s;
    }
}

impl SoftmaxClassifier {
    pub fn logits(&self, row: &[f64]) -> Vec<f64> {
        (0..self.classes)
            .map(|c| dot(&self.weights[c * self.dim..(c + 1) * self.dim], row) + self.biases[c])
            .collect()
    }

    /// Class probabilities, each clipped to `[PROB_CLIP, 1 − PROB_CLIP]`.
    pub fn predict_proba(&self, row: &[f64]) -> Vec<f64> {
        let mut p = self.logits(row);
        softmax_in_place(&mut p);
        p.iter().map(|v| v.clamp(PROB_CLIP, 1.0 - PROB_CLIP)).collect()
    }
}

/// Mean cross-entropy plus `(l2/2)‖W‖²`; biases are not penalized.
/// `theta` holds, for classes `1..C`, `dim` weights followed by a bias.
fn loss(features: &[f64], dim: usize, labels: &[usize], classes: usize, theta: &[f64], l2: f64) -> f64 {
    let q = dim + 1;
    let mut s = 0.0;
    let mut z = vec![0.0; classes];
    for (row, &y) in features.chunks_exact(dim).zip(labels) {
        for c in 1..classes {
            let t = &theta[(c - 1) * q..c * q];
            z[c] = dot(&t[..dim], row) + t[dim];
        }
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        s += lse - z[y];
    }
    let mut reg = 0.0;
    for c in 1..classes {
        let w = &theta[(c - 1) * q..(c - 1) * q + dim];
        reg += dot(w, w);
    }
    s / labels.len() as f64 + 0.5 * l2 * reg
}

pub fn fit_softmax(features: &[f64], dim: usize, labels: &[usize], classes: usize, l2: f64) -> Result<SoftmaxClassifier> {
    let n = labels.len();
    if n == 0 || dim == 0 || features.len() != n * dim {
        return Err(Error::Dimension {
            expected: n * dim,
            got: features.len(),
        });
    }
    if classes < 2 || labels.iter().any(|&y| y >= classes) {
        return Err(Error::Input(format!("labels must lie in 0..{classes}")));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("features must be finite".into()));
    }
    if !(l2 >= 0.0) {
        return Err(Error::Config(format!("l2 must be >= 0, got {l2}")));
    }
    let q = dim + 1;
    let p = (classes - 1) * q;
    let nf = n as f64;
    // start from smoothed log class frequencies
    let mut counts = vec![0.5f64; classes];
    for &y in labels {
        counts[y] += 1.0;
    }
    let mut theta = vec![0.0; p];
    for c in 1..classes {
        theta[(c - 1) * q + dim] = (counts[c] / counts[0]).ln();
    }
    let mut f = loss(features, dim, labels, classes, &theta, l2);
    let mut z = vec![0.0; classes];
    let mut ext = vec![0.0; q];
    for _ in 0..MAX_NEWTON {
        let mut grad = vec![0.0; p];
        let mut hess = vec![0.0; p * p];
        for (row, &y) in features.chunks_exact(dim).zip(labels) {
            ext[..dim].copy_from_slice(row);
            ext[dim] = 1.0;
            z[0] = 0.0;
            for c in 1..classes {
                z[c] = dot(&theta[(c - 1) * q..c * q], &ext);
            }
            softmax_in_place(&mut z);
            for a in 1..classes {
                let r = (z[a] - (y == a) as u8 as f64) / nf;
                let ga = &mut grad[(a - 1) * q..a * q];
                for (g, e) in ga.iter_mut().zip(&ext) {
                    *g += r * e;
                }
                for b in 1..=a {
                    let w = (z[a] * ((a == b) as u8 as f64 - z[b])) / nf;
                    for i in 0..q {
                        let wi = w * ext[i];
                        let base = ((a - 1) * q + i) * p + (b - 1) * q;
                        for j in 0..q {
                            hess[base + j] += wi * ext[j];
                        }
                    }
                }
            }
        }
        for c in 1..classes {
            for i in 0..dim {
                let k = (c - 1) * q + i;
                grad[k] += l2 * theta[k];
                hess[k * p + k] += l2;
            }
        }
        // mirror the lower block triangle
        for r in 0..p {
            for c in (r + 1)..p {
                if (c / q) > (r / q) {
                    hess[r * p + c] = hess[c * p + r];
                }
            }
        }
        if norm(&grad) < GRAD_TOL {
            break;
        }
        let mut ridge = 0.0;
        let l = loop {
            let mut l = hess.clone();
            for k in 0..p {
                l[k * p + k] += ridge;
            }
            if cholesky(&mut l, p) {
                break l;
            }
            ridge = if ridge == 0.0 { 1e-10 } else { ridge * 10.0 };
        };
        let mut step: Vec<f64> = grad.iter().map(|g| -g).collect();
        cholesky_solve(&l, p, &mut step);
        let slope = dot(&grad, &step);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            let cf = loss(features, dim, labels, classes, &cand, l2);
            if cf <= f + 1e-4 * t * slope {
                theta = cand;
                f = cf;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let mut weights = vec![0.0; classes * dim];
    let mut biases = vec![0.0; classes];
    for c in 1..classes {
        weights[c * dim..(c + 1) * dim].copy_from_slice(&theta[(c - 1) * q..(c - 1) * q + dim]);
        biases[c] = theta[(c - 1) * q + dim];
    }
    Ok(SoftmaxClassifier {
        classes,
        dim,
        weights,
        biases,
    })
}
