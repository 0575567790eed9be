//! L2-regularized logistic regression fitted by damped Newton steps.

use crate::error::{Error, Result};
use crate::solver::linalg::{cholesky, cholesky_solve, dot, norm};

use super::platt;

/// Probabilities are kept inside `[PROB_CLIP, 1 − PROB_CLIP]`.
pub const PROB_CLIP: f64 = 1e-9;
pub const DEFAULT_L2: f64 = 1e-4;
const GRAD_TOL: f64 = 1e-6;
const MAX_NEWTON: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct BinaryClassifier {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Platt parameters; `(−1, 0)` leaves the logistic output unchanged.
    pub calib_a: f64,
    pub calib_b: f64,
    /// Empirical class frequencies `(p₀, p₁)` of the training labels.
    pub priors: (f64, f64),
}

impl BinaryClassifier {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Raw decision score `wᵀa + b`.
    pub fn score(&self, row: &[f64]) -> f64 {
        dot(&self.weights, row) + self.bias
    }
}

/// Options for [`fit_logreg_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub l2: f64,
    /// Replace the identity calibration by a Platt fit on 3-fold
    /// out-of-fold scores.
    pub calibrate: bool,
    /// How the four-symbol classifier is built.
    pub multiclass: MultiClassMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MultiClassMode {
    /// One binary classifier per symbol, outputs renormalized.
    #[default]
    OneVsRest,
    /// A single softmax model over the four symbols.
    Multinomial,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            l2: DEFAULT_L2,
            calibrate: false,
            multiclass: MultiClassMode::default(),
        }
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Probability of label 1, `1/(1 + exp(A·score + B))`, clipped.
pub fn predict_proba(c: &BinaryClassifier, row: &[f64]) -> f64 {
    let p = sigmoid(-(c.calib_a * c.score(row) + c.calib_b));
    p.clamp(PROB_CLIP, 1.0 - PROB_CLIP)
}

/// Regularized mean log-loss; the bias is not penalized.
pub fn logreg_loss(features: &[f64], dim: usize, labels: &[u8], weights: &[f64], bias: f64, l2: f64) -> f64 {
    let n = labels.len();
    let mut s = 0.0;
    for (row, &y) in rows(features, dim).zip(labels) {
        let z = dot(weights, row) + bias;
        s += softplus(z) - y as f64 * z;
    }
    s / n as f64 + 0.5 * l2 * dot(weights, weights)
}

fn rows(features: &[f64], dim: usize) -> impl Iterator<Item = &[f64]> {
    // zero-width rows still need one item per example
    let step = dim.max(1);
    features.chunks(step).map(move |r| &r[..dim.min(r.len())])
}

pub fn fit_logreg(features: &[f64], dim: usize, labels: &[u8], l2: f64) -> Result<BinaryClassifier> {
    fit_logreg_with(
        features,
        dim,
        labels,
        FitOptions {
            l2,
            ..FitOptions::default()
        },
    )
}

pub fn fit_logreg_with(features: &[f64], dim: usize, labels: &[u8], opts: FitOptions) -> Result<BinaryClassifier> {
    let (weights, bias, _) = newton_fit(features, dim, labels, opts.l2)?;
    let n1 = labels.iter().filter(|&&y| y == 1).count() as f64;
    let n = labels.len() as f64;
    let mut c = BinaryClassifier {
        weights,
        bias,
        calib_a: -1.0,
        calib_b: 0.0,
        priors: (1.0 - n1 / n, n1 / n),
    };
    if opts.calibrate {
        let scores = out_of_fold_scores(features, dim, labels, opts.l2)?;
        let (a, b) = platt::platt_fit(&scores, labels)?;
        c.calib_a = a;
        c.calib_b = b;
    }
    Ok(c)
}

/// Scores of each example from a model trained on the other two folds.
fn out_of_fold_scores(features: &[f64], dim: usize, labels: &[u8], l2: f64) -> Result<Vec<f64>> {
    let n = labels.len();
    let mut scores = vec![0.0; n];
    for fold in 0..platt::FOLDS {
        let mut f = Vec::new();
        let mut y = Vec::new();
        for (i, (row, &yi)) in rows(features, dim).zip(labels).enumerate() {
            if i % platt::FOLDS != fold {
                f.extend_from_slice(row);
                y.push(yi);
            }
        }
        let (w, b, _) = newton_fit(&f, dim, &y, l2)?;
        for (i, row) in rows(features, dim).enumerate() {
            if i % platt::FOLDS == fold {
                scores[i] = dot(&w, row) + b;
            }
        }
    }
    Ok(scores)
}

/// Returns weights, bias and the loss after every accepted step.
pub(crate) fn newton_fit(features: &[f64], dim: usize, labels: &[u8], l2: f64) -> Result<(Vec<f64>, f64, Vec<f64>)> {
    let n = labels.len();
    if n == 0 || features.len() != n * dim {
        return Err(Error::Dimension {
            expected: n * dim,
            got: features.len(),
        });
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("features must be finite".into()));
    }
    if !(l2 >= 0.0) {
        return Err(Error::Config(format!("l2 must be >= 0, got {l2}")));
    }
    let n1 = labels.iter().filter(|&&y| y == 1).count();
    if n1 == 0 || n1 == n {
        // One class only: the likelihood has no finite maximizer, so fall
        // back to a smoothed base rate with zero weights.
        let bias = ((n1 as f64 + 0.5) / ((n - n1) as f64 + 0.5)).ln();
        return Ok((vec![0.0; dim], bias, Vec::new()));
    }

    let p = dim + 1;
    let nf = n as f64;
    let mut theta = vec![0.0; p];
    theta[dim] = (n1 as f64 / (n - n1) as f64).ln();
    let loss_of = |t: &[f64]| logreg_loss(features, dim, labels, &t[..dim], t[dim], l2);
    let mut loss = loss_of(&theta);
    let mut history = vec![loss];

    for _ in 0..MAX_NEWTON {
        let mut grad = vec![0.0; p];
        let mut hess = vec![0.0; p * p];
        for (row, &y) in rows(features, dim).zip(labels) {
            let z = dot(&theta[..dim], row) + theta[dim];
            let mu = sigmoid(z);
            let r = (mu - y as f64) / nf;
            let w = (mu * (1.0 - mu)).max(1e-16) / nf;
            for a in 0..dim {
                grad[a] += r * row[a];
                let wa = w * row[a];
                for b in 0..=a {
                    hess[a * p + b] += wa * row[b];
                }
                hess[dim * p + a] += wa;
            }
            grad[dim] += r;
            hess[dim * p + dim] += w;
        }
        for a in 0..dim {
            grad[a] += l2 * theta[a];
            hess[a * p + a] += l2;
        }
        for a in 0..p {
            for b in 0..a {
                hess[b * p + a] = hess[a * p + b];
            }
        }
        if norm(&grad) < GRAD_TOL {
            break;
        }
        let mut step: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut l = hess.clone();
        if !cholesky(&mut l, p) {
            let mut ridge = 1e-10;
            loop {
                l = hess.clone();
                for a in 0..p {
                    l[a * p + a] += ridge;
                }
                if cholesky(&mut l, p) {
                    break;
                }
                ridge *= 10.0;
            }
        }
        cholesky_solve(&l, p, &mut step);
        let slope = dot(&grad, &step);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            let cl = loss_of(&cand);
            if cl <= loss + 1e-4 * t * slope {
                theta = cand;
                loss = cl;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
        history.push(loss);
    }
    let bias = theta[dim];
    theta.truncate(dim);
    Ok((theta, bias, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;

    #[test]
    fn separable_line_is_learned() {
        let xs: Vec<f64> = (-20..=20).filter(|&i| i != 0).map(|i| i as f64 / 10.0).collect();
        let ys: Vec<u8> = xs.iter().map(|&x| (x > 0.0) as u8).collect();
        let c = fit_logreg(&xs, 1, &ys, DEFAULT_L2).unwrap();
        let acc = xs
            .iter()
            .zip(&ys)
            .filter(|(x, y)| ((predict_proba(&c, &[**x]) > 0.5) as u8) == **y)
            .count();
        assert_eq!(acc, xs.len());
        assert!((c.priors.0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn coin_flip_labels_stay_at_chance() {
        let mut rng = SeededRng::new(3, 0);
        let n = 2000;
        let f: Vec<f64> = (0..2 * n).map(|_| rng.standard_normal()).collect();
        let y = rng.bits(n);
        let c = fit_logreg(&f, 2, &y, DEFAULT_L2).unwrap();
        let ft: Vec<f64> = (0..2 * n).map(|_| rng.standard_normal()).collect();
        let yt = rng.bits(n);
        let hits = ft
            .chunks(2)
            .zip(&yt)
            .filter(|(r, y)| ((predict_proba(&c, r) > 0.5) as u8) == **y)
            .count();
        assert!((hits as f64 / n as f64 - 0.5).abs() < 0.05);
    }

    #[test]
    fn loss_never_increases_and_gradient_vanishes() {
        let mut rng = SeededRng::new(4, 0);
        let n = 300;
        let f: Vec<f64> = (0..3 * n).map(|_| rng.standard_normal()).collect();
        let y: Vec<u8> = f
            .chunks(3)
            .map(|r| ((r[0] - 0.5 * r[2] + 0.8 * rng.standard_normal()) > 0.0) as u8)
            .collect();
        let (w, b, hist) = newton_fit(&f, 3, &y, DEFAULT_L2).unwrap();
        assert!(hist.windows(2).all(|p| p[1] <= p[0]));
        // gradient check by finite differences
        let l0 = logreg_loss(&f, 3, &y, &w, b, DEFAULT_L2);
        for i in 0..3 {
            let mut wp = w.clone();
            wp[i] += 1e-5;
            let g = (logreg_loss(&f, 3, &y, &wp, b, DEFAULT_L2) - l0) / 1e-5;
            assert!(g.abs() < 1e-4, "{g}");
        }
    }

    #[test]
    fn proba_examples() {
        let c = BinaryClassifier {
            weights: vec![1.0],
            bias: 0.0,
            calib_a: -1.0,
            calib_b: 0.0,
            priors: (0.5, 0.5),
        };
        assert!((predict_proba(&c, &[0.0]) - 0.5).abs() < 1e-15);
        assert!((predict_proba(&c, &[2.0]) - 0.880797077977882).abs() < 1e-12);
        assert_eq!(predict_proba(&c, &[1e6]), 1.0 - PROB_CLIP);
        assert_eq!(predict_proba(&c, &[-1e6]), PROB_CLIP);
    }

    #[test]
    fn single_class_and_bad_input() {
        let c = fit_logreg(&[1.0, 2.0, 3.0], 1, &[1, 1, 1], DEFAULT_L2).unwrap();
        assert!(predict_proba(&c, &[0.0]) > 0.5);
        assert_eq!(c.weights, vec![0.0]);
        assert!(matches!(fit_logreg(&[f64::NAN, 1.0], 1, &[0, 1], 0.0), Err(Error::Input(_))));
        assert!(fit_logreg(&[1.0], 1, &[0, 1], 0.0).is_err());
    }

    #[test]
    fn calibrated_fit_keeps_ranking() {
        let mut rng = SeededRng::new(5, 0);
        let n = 600;
        let f: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let y: Vec<u8> = f.iter().map(|x| ((2.0 * x + rng.standard_normal()) > 0.0) as u8).collect();
        let c = fit_logreg_with(&f, 1, &y, FitOptions {
                calibrate: true,
                ..FitOptions::default()
            }).unwrap();
        assert!(c.calib_a < 0.0);
        assert!(predict_proba(&c, &[1.0]) > predict_proba(&c, &[-1.0]));
    }
}
