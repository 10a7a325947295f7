//! Multinomial logistic regression trained with minibatch SGD.

use rand::seq::SliceRandom;

use super::data::{Dataset, SyntheticTaskSpec};
use crate::{seed, Scalar};

/// Parameters are stored as one flat vector: the `classes x dim` weight
/// matrix row by row, followed by `classes` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel<T> {
    pub classes: usize,
    pub dim: usize,
    pub params: Vec<T>,
}

impl<T: Scalar> LogisticModel<T> {
    pub fn zeros(classes: usize, dim: usize) -> Self {
        Self {
            classes,
            dim,
            params: vec![T::zero(); classes * (dim + 1)],
        }
    }

    fn bias(&self, c: usize) -> T {
        self.params[self.classes * self.dim + c]
    }

    pub fn logits_into(&self, x: &[T], out: &mut [T]) {
        for (c, o) in out.iter_mut().enumerate() {
            let w = &self.params[c * self.dim..(c + 1) * self.dim];
            *o = w.iter().zip(x).map(|(&a, &b)| a * b).sum::<T>() + self.bias(c);
        }
    }

    /// Logits for every sample, row-major `len x classes`.
    pub fn logits(&self, data: &Dataset<T>) -> Vec<T> {
        let mut out = vec![T::zero(); data.len() * self.classes];
        for (i, chunk) in out.chunks_mut(self.classes).enumerate() {
            self.logits_into(data.row(i), chunk);
        }
        out
    }

    pub fn probabilities(&self, x: &[T]) -> Vec<T> {
        let mut z = vec![T::zero(); self.classes];
        self.logits_into(x, &mut z);
        softmax_in_place(&mut z);
        z
    }

    /// Mean cross-entropy against the dataset's observed labels.
    pub fn loss(&self, data: &Dataset<T>) -> T {
        mean_cross_entropy(&self.logits(data), self.classes, &data.labels)
    }

    pub fn accuracy(&self, data: &Dataset<T>) -> f64 {
        let z = self.logits(data);
        let hits = z
            .chunks(self.classes)
            .zip(&data.labels)
            .filter(|(row, &y)| argmax(row) == y)
            .count();
        hits as f64 / data.len().max(1) as f64
    }

    /// Mean cross-entropy and its gradient over the listed samples.
    pub fn loss_and_gradient(&self, data: &Dataset<T>, batch: &[usize]) -> (T, Vec<T>) {
        let mut grad = vec![T::zero(); self.params.len()];
        let mut loss = T::zero();
        let mut p = vec![T::zero(); self.classes];
        let n = T::from_usize_lossy(batch.len().max(1));
        for &i in batch {
            let x = data.row(i);
            let y = data.labels[i];
            self.logits_into(x, &mut p);
            loss = loss - log_softmax_at(&p, y);
            softmax_in_place(&mut p);
            p[y] = p[y] - T::one();
            for (c, &err) in p.iter().enumerate() {
                let e = err / n;
                let row = &mut grad[c * self.dim..(c + 1) * self.dim];
                for (g, &xj) in row.iter_mut().zip(x) {
                    *g = *g + e * xj;
                }
                grad[self.classes * self.dim + c] = grad[self.classes * self.dim + c] + e;
            }
        }
        (loss / n, grad)
    }

    pub fn sgd_step(&mut self, grad: &[T], lr: T) {
        for (w, &g) in self.params.iter_mut().zip(grad) {
            *w = *w - lr * g;
        }
    }

    /// Parameter-wise weighted sum. Weights are used as given.
    pub fn weighted_sum<'a>(models: impl IntoIterator<Item = (&'a Self, T)>) -> Option<Self> {
        let mut iter = models.into_iter();
        let (first, w0) = iter.next()?;
        let mut out = first.clone();
        for v in out.params.iter_mut() {
            *v = *v * w0;
        }
        for (m, w) in iter {
            for (acc, &v) in out.params.iter_mut().zip(&m.params) {
                *acc = *acc + w * v;
            }
        }
        Some(out)
    }
}

/// Runs `spec.local_epochs` passes of shuffled minibatch SGD starting from
/// `global`.
pub fn local_train<T: Scalar>(
    global: &LogisticModel<T>,
    data: &Dataset<T>,
    spec: &SyntheticTaskSpec,
    rng_seed: u64,
) -> LogisticModel<T> {
    let mut model = global.clone();
    let lr = T::lit(spec.learning_rate);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..spec.local_epochs {
        order.shuffle(&mut seed::rng(rng_seed, &[epoch as u64]));
        for batch in order.chunks(spec.batch_size) {
            let (_, grad) = model.loss_and_gradient(data, batch);
            model.sgd_step(&grad, lr);
        }
    }
    model
}

pub(crate) fn softmax_in_place<T: Scalar>(z: &mut [T]) {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    let mut s = T::zero();
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s = s + *v;
    }
    for v in z.iter_mut() {
        *v = *v / s;
    }
}

pub(crate) fn log_softmax_at<T: Scalar>(z: &[T], y: usize) -> T {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    let s: T = z.iter().map(|&v| (v - m).exp()).sum();
    z[y] - m - s.ln()
}

pub(crate) fn mean_cross_entropy<T: Scalar>(logits: &[T], classes: usize, labels: &[usize]) -> T {
    let total: T = logits
        .chunks(classes)
        .zip(labels)
        .map(|(row, &y)| -log_softmax_at(row, y))
        .sum();
    total / T::from_usize_lossy(labels.len().max(1))
}

fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = i;
        }
    }
    best
}
