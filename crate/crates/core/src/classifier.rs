//! One-vs-rest linear classifier with hinge loss, trained by full-batch
//! subgradient descent.
//!
//! Each class `c` gets `(w_c, b_c)` minimizing
//! `lambda/2 |w|^2 + mean_i max(0, 1 - y_i (w . z_i + b))` with `lambda = 1/C`
//! and `z` the standardized features. Steps are `1 / (lambda t)`; the model is
//! the average of the iterates. Training has no randomness, and because the
//! loss is a mean, duplicating every row leaves the model unchanged.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{ClassId, RepresentationMatrix, Word};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Loss weight `C`.
    pub c: f64,
    pub epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { c: 1.0, epochs: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub classes: Vec<String>,
    pub words: Vec<Word>,
    /// Feature standardization `z = (x - mean) / scale`.
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LinearModel {
    fn standardize<T: Scalar>(&self, row: &[T]) -> Vec<f64> {
        row.iter().zip(&self.mean).zip(&self.scale).map(|((x, m), s)| (x.f64() - m) / s).collect()
    }

    /// Per-class decision values for one row.
    pub fn decision<T: Scalar>(&self, row: &[T]) -> Vec<f64> {
        let z = self.standardize(row);
        self.weights.iter().zip(&self.bias).map(|(w, b)| dot(w, &z) + b).collect()
    }

    /// Highest-scoring class; ties go to the lowest index.
    pub fn predict<T: Scalar>(&self, row: &[T]) -> usize {
        let d = self.decision(row);
        let mut best = 0;
        for (c, v) in d.iter().enumerate() {
            if *v > d[best] {
                best = c;
            }
        }
        best
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn train_linear<T: Scalar>(train: &RepresentationMatrix<T>, config: &TrainConfig) -> Result<LinearModel> {
    if !(config.c > 0.0 && config.c.is_finite()) {
        return Err(Error::InvalidParameter(format!("C must be positive, got {}", config.c)));
    }
    if config.epochs == 0 {
        return Err(Error::InvalidParameter("epochs must be at least 1".into()));
    }
    let n = train.n_rows();
    let dim = train.width();
    let n_classes = train.classes().len();
    let mut present = vec![false; n_classes];
    for c in train.labels() {
        present[c.index()] = true;
    }
    if present.iter().filter(|p| **p).count() < 2 {
        return Err(Error::InvalidData("training needs at least 2 classes with examples".into()));
    }

    let nf = n as f64;
    let mut mean = vec![0.0; dim];
    for row in train.rows() {
        mean.iter_mut().zip(row).for_each(|(m, x)| *m += x.f64());
    }
    mean.iter_mut().for_each(|m| *m /= nf);
    let mut scale = vec![0.0; dim];
    for row in train.rows() {
        scale.iter_mut().zip(row).zip(&mean).for_each(|((s, x), m)| *s += (x.f64() - m).powi(2));
    }
    scale.iter_mut().for_each(|s| *s = (*s / nf).sqrt().max(1e-12));
    let mut model = LinearModel {
        classes: train.classes().to_vec(),
        words: train.active_words().to_vec(),
        mean,
        scale,
        weights: Vec::with_capacity(n_classes),
        bias: Vec::with_capacity(n_classes),
    };
    let z: Vec<Vec<f64>> = train.rows().map(|r| model.standardize(r)).collect();
    let lambda = 1.0 / config.c;

    for c in 0..n_classes {
        let y: Vec<f64> = train.labels().iter().map(|l| if l.index() == c { 1.0 } else { -1.0 }).collect();
        let (mut w, mut b) = (vec![0.0; dim], 0.0);
        let (mut w_avg, mut b_avg) = (vec![0.0; dim], 0.0);
        for t in 1..=config.epochs {
            let eta = 1.0 / (lambda * t as f64);
            let mut grad = vec![0.0; dim];
            let mut grad_b = 0.0;
            for (zi, &yi) in z.iter().zip(&y) {
                if yi * (dot(&w, zi) + b) < 1.0 {
                    grad.iter_mut().zip(zi).for_each(|(g, x)| *g -= yi * x);
                    grad_b -= yi;
                }
            }
            for (wj, gj) in w.iter_mut().zip(&grad) {
                *wj -= eta * (lambda * *wj + gj / nf);
            }
            b -= eta * grad_b / nf;
            w_avg.iter_mut().zip(&w).for_each(|(a, x)| *a += x);
            b_avg += b;
        }
        let e = config.epochs as f64;
        model.weights.push(w_avg.into_iter().map(|v| v / e).collect());
        model.bias.push(b_avg / e);
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Accuracy per model class; `None` for classes absent from the test set.
    pub per_class: Vec<Option<f64>>,
    /// Mean of the per-class accuracies over classes present.
    pub macro_accuracy: f64,
    pub predictions: Vec<usize>,
}

pub fn evaluate<T: Scalar>(model: &LinearModel, test: &RepresentationMatrix<T>) -> Result<Evaluation> {
    if test.width() != model.words.len() {
        return Err(Error::DimensionMismatch {
            context: "classifier features",
            expected: model.words.len(),
            found: test.width(),
        });
    }
    if test.active_words() != model.words {
        return Err(Error::InvalidData("test representations use different words than the model".into()));
    }
    if test.n_rows() == 0 {
        return Err(Error::EmptyInput("test set"));
    }
    let truth: Vec<usize> = test
        .labels()
        .iter()
        .map(|c: &ClassId| {
            let name = &test.classes()[c.index()];
            model
                .classes
                .iter()
                .position(|m| m == name)
                .ok_or_else(|| Error::UnknownLabel { id: "test set".into(), label: name.clone() })
        })
        .collect::<Result<_>>()?;
    let predictions: Vec<usize> = test.rows().collect::<Vec<_>>().par_iter().map(|r| model.predict(r)).collect();
    let mut hits = vec![0usize; model.classes.len()];
    let mut totals = vec![0usize; model.classes.len()];
    for (&t, &p) in truth.iter().zip(&predictions) {
        totals[t] += 1;
        hits[t] += usize::from(t == p);
    }
    let per_class: Vec<Option<f64>> =
        hits.iter().zip(&totals).map(|(&h, &n)| (n > 0).then(|| h as f64 / n as f64)).collect();
    let present: Vec<f64> = per_class.iter().flatten().copied().collect();
    let macro_accuracy = present.iter().sum::<f64>() / present.len() as f64;
    Ok(Evaluation { per_class, macro_accuracy, predictions })
}
