//! Platt scaling: a sigmoid `1/(1 + exp(A·f + B))` fitted to classifier scores.

use crate::error::{Error, Result};

use super::logreg::{sigmoid, softplus};

/// Number of folds used to produce out-of-fold scores for calibration.
pub const FOLDS: usize = 3;

fn nll(scores: &[f64], labels: &[u8], a: f64, b: f64) -> f64 {
    // p₁ = σ(−(A f + B))
    scores
        .iter()
        .zip(labels)
        .map(|(&f, &y)| {
            let z = -(a * f + b);
            softplus(z) - y as f64 * z
        })
        .sum()
}

/// Maximum-likelihood `(A, B)`.
pub fn platt_fit(scores: &[f64], labels: &[u8]) -> Result<(f64, f64)> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(Error::Dimension {
            expected: labels.len(),
            got: scores.len(),
        });
    }
    let n1 = labels.iter().filter(|&&y| y == 1).count();
    if n1 == 0 || n1 == labels.len() {
        return Err(Error::DegenerateCalibration("calibration needs both classes".into()));
    }
    let n0 = labels.len() - n1;
    let (mut a, mut b) = (0.0, -((n1 as f64) / (n0 as f64)).ln());
    let mut f = nll(scores, labels, a, b);
    for _ in 0..100 {
        // derivatives w.r.t. (A, B) of Σ softplus(z) − y z with z = −(A s + B)
        let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 1e-12, 0.0, 1e-12);
        for (&s, &y) in scores.iter().zip(labels) {
            let p = sigmoid(-(a * s + b));
            let r = y as f64 - p;
            ga += r * s;
            gb += r;
            let w = p * (1.0 - p);
            haa += w * s * s;
            hab += w * s;
            hbb += w;
        }
        if ga.abs() < 1e-10 && gb.abs() < 1e-10 {
            break;
        }
        let det = haa * hbb - hab * hab;
        let da = -(hbb * ga - hab * gb) / det;
        let db = -(-hab * ga + haa * gb) / det;
        let mut t = 1.0;
        let mut moved = false;
        while t >= 1e-10 {
            let (na, nb) = (a + t * da, b + t * db);
            let nf = nll(scores, labels, na, nb);
            if nf < f + 1e-4 * t * (ga * da + gb * db) {
                a = na;
                b = nb;
                f = nf;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    Ok((a, b))
}
