use std::collections::BTreeSet;
use std::io::Write;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{seed, Error, Result, Scalar};

/// Shape of the synthetic classification task and the local training
/// hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticTaskSpec {
    pub num_classes: usize,
    pub feature_dim: usize,
    /// Distance between any two class means.
    pub class_separation: f64,
    pub train_size_per_worker: usize,
    pub validation_size: usize,
    pub test_size: usize,
    pub rounds: usize,
    pub local_epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Quality-detection threshold on `l_{-i} - l`.
    pub delta_threshold: f64,
    /// Additive smoothing of the quality score.
    pub s0: f64,
    pub seed: u64,
}

impl Default for SyntheticTaskSpec {
    fn default() -> Self {
        Self {
            num_classes: 10,
            feature_dim: 20,
            class_separation: 8.0,
            train_size_per_worker: 1000,
            validation_size: 5000,
            test_size: 5000,
            rounds: 10,
            local_epochs: 1,
            learning_rate: 0.05,
            batch_size: 128,
            delta_threshold: -0.005,
            s0: 1.0,
            seed: 0,
        }
    }
}

impl SyntheticTaskSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.num_classes < 2 {
            return fail("num_classes must be at least 2");
        }
        if self.feature_dim < 2 || self.feature_dim < self.num_classes {
            return fail("feature_dim must be at least 2 and at least num_classes");
        }
        if self.class_separation.is_nan() || self.class_separation <= 0.0 {
            return fail("class_separation must be positive");
        }
        if self.train_size_per_worker == 0 || self.validation_size == 0 || self.test_size == 0 {
            return fail("dataset sizes must be positive");
        }
        if self.rounds == 0 {
            return fail("rounds must be at least 1");
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return fail("learning_rate must be positive");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive");
        }
        Ok(())
    }
}

/// Data quality of one worker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkerDataProfile {
    /// Fraction of training labels left intact; the rest are moved to a
    /// uniformly chosen different class.
    pub data_accuracy: f64,
    /// Classes absent from the worker's training set.
    #[serde(default)]
    pub missing_labels: BTreeSet<usize>,
}

impl WorkerDataProfile {
    pub fn iid(data_accuracy: f64) -> Self {
        Self {
            data_accuracy,
            missing_labels: BTreeSet::new(),
        }
    }
}

/// Row-major feature matrix with observed and ground-truth labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub dim: usize,
    pub features: Vec<T>,
    pub labels: Vec<usize>,
    pub true_labels: Vec<usize>,
}

impl<T: Scalar> Dataset<T> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn corrupted(&self) -> usize {
        self.labels
            .iter()
            .zip(&self.true_labels)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// One row per sample: features, then observed label.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..self.dim).map(|j| format!("x{j}")).collect();
        header.push("label".into());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| v.as_f64().to_string()).collect();
            rec.push(self.labels[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Worker training sets plus the publisher's clean validation and test sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Population<T> {
    pub classes: usize,
    pub profiles: Vec<WorkerDataProfile>,
    pub workers: Vec<Dataset<T>>,
    pub validation: Dataset<T>,
    pub test: Dataset<T>,
}

const STREAM_VALIDATION: u64 = 1;
const STREAM_TEST: u64 = 2;
const STREAM_WORKER: u64 = 3;

/// Class means sit on scaled unit vectors, so every pair is
/// `class_separation` apart.
fn class_mean(spec: &SyntheticTaskSpec, class: usize, j: usize) -> f64 {
    if j == class {
        spec.class_separation / std::f64::consts::SQRT_2
    } else {
        0.0
    }
}

fn sample_set<T: Scalar, R: Rng>(
    spec: &SyntheticTaskSpec,
    n: usize,
    classes: &[usize],
    rng: &mut R,
) -> Dataset<T> {
    let mut features = Vec::with_capacity(n * spec.feature_dim);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let y = classes[rng.random_range(0..classes.len())];
        for j in 0..spec.feature_dim {
            let z: f64 = rng.sample(StandardNormal);
            features.push(T::lit(class_mean(spec, y, j) + z));
        }
        labels.push(y);
    }
    Dataset {
        dim: spec.feature_dim,
        features,
        true_labels: labels.clone(),
        labels,
    }
}

fn corrupt_labels<T, R: Rng>(data: &mut Dataset<T>, accuracy: f64, classes: usize, rng: &mut R) {
    let n = data.labels.len();
    let flips = (((1.0 - accuracy) * n as f64).round() as usize).min(n);
    for i in index::sample(rng, n, flips) {
        let shift = rng.random_range(1..classes);
        data.labels[i] = (data.true_labels[i] + shift) % classes;
    }
}

pub fn generate_population<T: Scalar>(
    spec: &SyntheticTaskSpec,
    profiles: &[WorkerDataProfile],
) -> Result<Population<T>> {
    spec.validate()?;
    let all: Vec<usize> = (0..spec.num_classes).collect();
    for (i, p) in profiles.iter().enumerate() {
        if !(0.0..=1.0).contains(&p.data_accuracy) {
            return Err(Error::InvalidProfile {
                worker: i,
                reason: format!("data_accuracy {} outside [0, 1]", p.data_accuracy),
            });
        }
        if let Some(c) = p.missing_labels.iter().find(|&&c| c >= spec.num_classes) {
            return Err(Error::InvalidProfile {
                worker: i,
                reason: format!("missing label {c} is not a class"),
            });
        }
        if p.missing_labels.len() >= spec.num_classes {
            return Err(Error::InvalidProfile {
                worker: i,
                reason: "missing_labels covers every class".into(),
            });
        }
    }

    let validation = sample_set(
        spec,
        spec.validation_size,
        &all,
        &mut seed::rng(spec.seed, &[STREAM_VALIDATION]),
    );
    let test = sample_set(
        spec,
        spec.test_size,
        &all,
        &mut seed::rng(spec.seed, &[STREAM_TEST]),
    );
    let workers = profiles
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = seed::rng(spec.seed, &[STREAM_WORKER, i as u64]);
            let allowed: Vec<usize> = all
                .iter()
                .copied()
                .filter(|c| !p.missing_labels.contains(c))
                .collect();
            let mut d = sample_set(spec, spec.train_size_per_worker, &allowed, &mut rng);
            corrupt_labels(&mut d, p.data_accuracy, spec.num_classes, &mut rng);
            d
        })
        .collect();
    Ok(Population {
        classes: spec.num_classes,
        profiles: profiles.to_vec(),
        workers,
        validation,
        test,
    })
}
