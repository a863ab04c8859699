//! L2-regularized logistic regression trained by gradient descent, with
//! optional per-row weights or signed costs.

use log::warn;
use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    /// Fixed step size; `None` uses diagonally preconditioned steps scaled by
    /// a power-iteration estimate of the loss curvature.
    #[serde(default)]
    pub learning_rate: Option<f64>,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_l2")]
    pub l2: f64,
    /// Stop when every gradient component is below this.
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Mini-batch SGD instead of full-batch accelerated descent.
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn default_epochs() -> usize {
    300
}

fn default_l2() -> f64 {
    1e-4
}

fn default_tolerance() -> f64 {
    1e-6
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            learning_rate: None,
            epochs: default_epochs(),
            l2: default_l2(),
            tolerance: default_tolerance(),
            batch_size: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

fn sigmoid(z: f64) -> f64 {
    let p = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::EPSILON, 1.0 - f64::EPSILON)
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LogisticModel {
    pub fn zeros(width: usize) -> Self {
        Self {
            weights: vec![0.0; width],
            intercept: 0.0,
        }
    }

    pub fn width(&self) -> usize {
        self.weights.len()
    }

    fn check_width(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.weights.len() {
            return Err(Error::Encoding(format!(
                "model expects {} features, got {}",
                self.weights.len(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// `P(y = 1 | x)` per row, strictly inside (0, 1).
    pub fn predict_proba(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        self.check_width(&x)?;
        Ok(x.rows()
            .into_iter()
            .map(|row| {
                let z = row
                    .iter()
                    .zip(&self.weights)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    + self.intercept;
                sigmoid(z)
            })
            .collect())
    }

    pub fn predict_labels(&self, x: ArrayView2<f64>) -> Result<Vec<u8>> {
        Ok(self
            .predict_proba(x)?
            .into_iter()
            .map(|p| u8::from(p >= 0.5))
            .collect())
    }
}

/// Result of one base-learner fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseLearner {
    pub model: LogisticModel,
    pub params: LogisticParams,
    pub converged: bool,
    pub epochs_run: usize,
    /// Weighted training loss of the returned iterate.
    pub loss: f64,
}

/// Sparse row view of the feature matrix; one-hot designs are mostly zeros.
#[derive(Debug, Clone)]
pub(crate) struct Design {
    width: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl Design {
    pub(crate) fn from_dense(x: ArrayView2<f64>) -> Self {
        let mut indptr = Vec::with_capacity(x.nrows() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in x.rows() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    indices.push(j as u32);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            width: x.ncols(),
            indptr,
            indices,
            values,
        }
    }

    pub(crate) fn n_rows(&self) -> usize {
        self.indptr.len() - 1
    }

    fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (s, e) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    fn decision(&self, i: usize, w: &[f64], b: f64) -> f64 {
        let (idx, val) = self.row(i);
        let mut z = b;
        for (&j, &v) in idx.iter().zip(val) {
            z += w[j as usize] * v;
        }
        z
    }

    pub(crate) fn predict_proba(&self, model: &LogisticModel) -> Vec<f64> {
        (0..self.n_rows())
            .map(|i| sigmoid(self.decision(i, &model.weights, model.intercept)))
            .collect()
    }
}

struct Objective<'a> {
    design: &'a Design,
    targets: &'a [f64],
    weights: &'a [f64],
    l2: f64,
}

impl Objective<'_> {
    /// Loss and gradient at `(w, b)` over `rows`; `grad` is overwritten, the
    /// last entry holds the intercept component.
    fn eval(&self, w: &[f64], b: f64, rows: Option<&[usize]>, grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let d = self.design.width;
        let mut loss = 0.0;
        let mut visit = |i: usize, scale: f64| {
            let wi = self.weights[i] * scale;
            if wi == 0.0 {
                return;
            }
            let z = self.design.decision(i, w, b);
            let t = self.targets[i];
            loss += wi * (softplus(z) - t * z);
            let r = wi * (sigmoid_raw(z) - t);
            let (idx, val) = self.design.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                grad[j as usize] += r * v;
            }
            grad[d] += r;
        };
        match rows {
            None => (0..self.design.n_rows()).for_each(|i| visit(i, 1.0)),
            Some(batch) => {
                let total: f64 = batch.iter().map(|&i| self.weights[i]).sum();
                let scale = if total > 0.0 { 1.0 / total } else { 0.0 };
                batch.iter().for_each(|&i| visit(i, scale));
            }
        }
        let mut reg = 0.0;
        for j in 0..d {
            grad[j] += self.l2 * w[j];
            reg += w[j] * w[j];
        }
        loss + 0.5 * self.l2 * reg
    }

    /// Jacobi preconditioner: inverse diagonal of the curvature bound
    /// `0.25 * sum_i w_i [x_i, 1][x_i, 1]^T + l2` (no penalty on the intercept).
    fn preconditioner(&self) -> Vec<f64> {
        let d = self.design.width;
        let mut diag = vec![0.0; d + 1];
        for i in 0..self.design.n_rows() {
            let wi = self.weights[i];
            let (idx, val) = self.design.row(i);
            for (&j, &x) in idx.iter().zip(val) {
                diag[j as usize] += wi * x * x;
            }
            diag[d] += wi;
        }
        diag.iter()
            .enumerate()
            .map(|(j, &v)| {
                let reg = if j < d { self.l2 } else { 0.0 };
                let c = 0.25 * v + reg;
                if c > 0.0 {
                    1.0 / c
                } else {
                    1.0
                }
            })
            .collect()
    }

    /// Largest eigenvalue of `P^(1/2) (0.25 M + l2) P^(1/2)`, where `M` is the
    /// weighted second-moment matrix of `[x, 1]` and `P` the preconditioner.
    fn curvature(&self, precond: &[f64]) -> f64 {
        let d = self.design.width;
        let root: Vec<f64> = precond.iter().map(|p| p.sqrt()).collect();
        let mut v = vec![1.0 / ((d + 1) as f64).sqrt(); d + 1];
        let mut lambda = 1.0;
        for _ in 0..20 {
            let scaled: Vec<f64> = v.iter().zip(&root).map(|(a, r)| a * r).collect();
            let mut next = vec![0.0; d + 1];
            for i in 0..self.design.n_rows() {
                let wi = self.weights[i];
                if wi == 0.0 {
                    continue;
                }
                let (idx, val) = self.design.row(i);
                let mut dot = scaled[d];
                for (&j, &x) in idx.iter().zip(val) {
                    dot += scaled[j as usize] * x;
                }
                let s = 0.25 * wi * dot;
                for (&j, &x) in idx.iter().zip(val) {
                    next[j as usize] += s * x;
                }
                next[d] += s;
            }
            for j in 0..d {
                next[j] += self.l2 * scaled[j];
            }
            for (n, r) in next.iter_mut().zip(&root) {
                *n *= r;
            }
            let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            lambda = norm;
            v = next.into_iter().map(|x| x / norm).collect();
        }
        lambda
    }
}

fn sigmoid_raw(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Fits on a prepared design. `weights` need not be normalized.
pub(crate) fn fit_design(
    design: &Design,
    targets: &[f64],
    weights: &[f64],
    params: &LogisticParams,
) -> BaseLearner {
    let d = design.width;
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return BaseLearner {
            model: LogisticModel::zeros(d),
            params: params.clone(),
            converged: true,
            epochs_run: 0,
            loss: 0.0,
        };
    }
    let normalized: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let obj = Objective {
        design,
        targets,
        weights: &normalized,
        l2: params.l2,
    };
    // Per-coordinate steps `step * precond_j`; with an explicit learning rate
    // the descent is unpreconditioned.
    let scales: Vec<f64> = match params.learning_rate {
        Some(rate) => vec![rate; d + 1],
        None => {
            let precond = obj.preconditioner();
            let step = 1.0 / obj.curvature(&precond).max(1e-12);
            precond.into_iter().map(|p| step * p).collect()
        }
    };

    let mut theta = vec![0.0; d + 1];
    let mut grad = vec![0.0; d + 1];
    let mut best = (f64::INFINITY, theta.clone());
    let mut converged = false;
    let mut epochs_run = 0;

    match params.batch_size {
        None => {
            // Nesterov acceleration with gradient-based restart.
            let mut prev = theta.clone();
            let mut momentum_t = 1.0f64;
            for epoch in 0..params.epochs {
                epochs_run = epoch + 1;
                let next_t = (1.0 + (1.0 + 4.0 * momentum_t * momentum_t).sqrt()) / 2.0;
                let beta = (momentum_t - 1.0) / next_t;
                let y: Vec<f64> = theta
                    .iter()
                    .zip(&prev)
                    .map(|(t, p)| t + beta * (t - p))
                    .collect();
                let loss = obj.eval(&y[..d], y[d], None, &mut grad);
                if loss < best.0 {
                    best = (loss, y.clone());
                }
                if grad.iter().all(|g| g.abs() < params.tolerance) {
                    converged = true;
                    best = (loss, y);
                    break;
                }
                let stepped: Vec<f64> = y
                    .iter()
                    .zip(&grad)
                    .zip(&scales)
                    .map(|((v, g), a)| v - a * g)
                    .collect();
                let progress: f64 = grad
                    .iter()
                    .zip(stepped.iter().zip(&theta))
                    .map(|(g, (s, t))| g * (s - t))
                    .sum();
                prev = std::mem::replace(&mut theta, stepped);
                momentum_t = if progress > 0.0 { 1.0 } else { next_t };
            }
        }
        Some(batch) => {
            let batch = batch.max(1);
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
            let mut order: Vec<usize> = (0..design.n_rows()).collect();
            for epoch in 0..params.epochs {
                epochs_run = epoch + 1;
                order.shuffle(&mut rng);
                for chunk in order.chunks(batch) {
                    obj.eval(&theta[..d], theta[d], Some(chunk), &mut grad);
                    for ((t, g), a) in theta.iter_mut().zip(&grad).zip(&scales) {
                        *t -= a * g;
                    }
                }
                let loss = obj.eval(&theta[..d], theta[d], None, &mut grad);
                if loss < best.0 {
                    best = (loss, theta.clone());
                }
                if grad.iter().all(|g| g.abs() < params.tolerance) {
                    converged = true;
                    break;
                }
            }
        }
    }
    if !converged {
        log::debug!("logistic fit stopped after {epochs_run} epochs without meeting tolerance");
    }
    let (loss, theta) = best;
    BaseLearner {
        model: LogisticModel {
            weights: theta[..d].to_vec(),
            intercept: theta[d],
        },
        params: params.clone(),
        converged,
        epochs_run,
        loss,
    }
}

/// Fits the base learner.
///
/// Without `costs`, every row has unit weight and target `labels[i]`. With
/// `costs`, row `i` gets target `1` iff `costs[i] < 0` (predicting positive is
/// cheaper) and weight `|costs[i]|`; `labels` is then ignored.
pub fn fit_base(
    x: ArrayView2<f64>,
    labels: &[u8],
    costs: Option<&[f64]>,
    params: &LogisticParams,
) -> Result<BaseLearner> {
    let n = x.nrows();
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::Training(format!("non-finite feature value {v}")));
    }
    let (targets, weights): (Vec<f64>, Vec<f64>) = match costs {
        Some(c) => {
            if c.len() != n {
                return Err(Error::Alignment {
                    expected: n,
                    actual: c.len(),
                });
            }
            c.iter()
                .map(|&ci| (if ci < 0.0 { 1.0 } else { 0.0 }, ci.abs()))
                .unzip()
        }
        None => {
            if labels.len() != n {
                return Err(Error::Alignment {
                    expected: n,
                    actual: labels.len(),
                });
            }
            if labels.iter().any(|&y| y > 1) {
                return Err(Error::Training("labels must be 0 or 1".into()));
            }
            labels.iter().map(|&y| (f64::from(y), 1.0)).unzip()
        }
    };
    let design = Design::from_dense(x);
    let fit = fit_design(&design, &targets, &weights, params);
    if !fit.converged {
        warn!(
            "base learner did not converge in {} epochs; returning best iterate",
            fit.epochs_run
        );
    }
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn separable_pair() {
        let x = array![[-1.0], [1.0]];
        let fit = fit_base(x.view(), &[0, 1], None, &LogisticParams::default()).unwrap();
        assert_eq!(fit.model.predict_labels(x.view()).unwrap(), vec![0, 1]);
    }

    #[test]
    fn identical_labels_predict_that_class() {
        let x = array![[0.3, -1.0], [1.2, 0.5], [-0.7, 2.0], [0.0, 0.0]];
        for y in [0u8, 1] {
            let fit = fit_base(x.view(), &[y; 4], None, &LogisticParams::default()).unwrap();
            assert_eq!(fit.model.predict_labels(x.view()).unwrap(), vec![y; 4]);
        }
    }

    #[test]
    fn probabilities_inside_open_interval() {
        let model = LogisticModel {
            weights: vec![1e6],
            intercept: 0.0,
        };
        let x = array![[1.0], [-1.0]];
        for p in model.predict_proba(x.view()).unwrap() {
            assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn costs_pick_cheaper_side() {
        // Row costs push rows 0,1 positive and rows 2,3 negative, regardless of labels.
        let x = array![[2.0], [1.5], [-1.5], [-2.0]];
        let fit = fit_base(
            x.view(),
            &[0, 0, 1, 1],
            Some(&[-1.0, -0.5, 0.5, 1.0]),
            &LogisticParams::default(),
        )
        .unwrap();
        assert_eq!(
            fit.model.predict_labels(x.view()).unwrap(),
            vec![1, 1, 0, 0]
        );
    }

    #[test]
    fn deterministic_minibatch() {
        let x = array![[0.1, 1.0], [0.9, -1.0], [0.4, 0.2], [-0.3, 0.7], [1.1, 0.0]];
        let params = LogisticParams {
            batch_size: Some(2),
            seed: 11,
            epochs: 50,
            ..Default::default()
        };
        let a = fit_base(x.view(), &[0, 1, 0, 0, 1], None, &params).unwrap();
        let b = fit_base(x.view(), &[0, 1, 0, 0, 1], None, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn width_mismatch() {
        let model = LogisticModel::zeros(3);
        let x = array![[1.0, 2.0]];
        assert!(matches!(
            model.predict_proba(x.view()),
            Err(Error::Encoding(_))
        ));
    }
}
