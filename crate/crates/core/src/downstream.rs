//! Downstream classification on layer embeddings.
//!
//! The classifier is `D → 512 → 256 → K` with ReLU hidden layers and dropout
//! after the 256-unit layer. Its input is one layer's embedding, the
//! uniform average of all layers, or a learned softmax-weighted average whose
//! layer logits train jointly with the classifier.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::probe::{argmax, Adam, AdamConfig, Masks, Mlp, Objective, ProbeError, Target};

#[derive(Debug, Error, PartialEq)]
pub enum DownstreamError {
    #[error("only one class present")]
    SingleClass,
    #[error("only {found} examples, need {needed}")]
    TooFewExamples { found: usize, needed: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("no layers given")]
    NoLayers,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Probe(#[from] ProbeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerMode {
    /// Layer with the lowest mean relative probe loss.
    Best,
    Last,
    WeightedAverage,
    UniformAverage,
}

impl LayerMode {
    pub const ALL: [LayerMode; 4] = [
        LayerMode::Best,
        LayerMode::Last,
        LayerMode::WeightedAverage,
        LayerMode::UniformAverage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayerMode::Best => "best",
            LayerMode::Last => "last",
            LayerMode::WeightedAverage => "weighted_average",
            LayerMode::UniformAverage => "uniform_average",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DownstreamConfig {
    pub hidden: Vec<usize>,
    /// Dropout after the last hidden layer.
    pub dropout: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub test_fraction: f64,
    pub seed: u64,
    pub layer_modes: Vec<LayerMode>,
}

impl Default for DownstreamConfig {
    fn default() -> Self {
        Self {
            hidden: vec![512, 256],
            dropout: 0.2,
            learning_rate: 0.01,
            epochs: 50,
            batch_size: 32,
            test_fraction: 0.2,
            seed: 0,
            layer_modes: vec![LayerMode::Best, LayerMode::Last, LayerMode::WeightedAverage],
        }
    }
}

impl DownstreamConfig {
    pub fn validate(&self) -> Result<(), DownstreamError> {
        let bad = |m: &str| Err(DownstreamError::InvalidConfig(m.into()));
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden widths must be non-empty and positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if !(self.learning_rate > 0.0) || self.epochs == 0 || self.batch_size == 0 {
            return bad("learning_rate, epochs and batch_size must be positive");
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad("test_fraction must lie in (0, 1)");
        }
        Ok(())
    }
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    crate::probe::log_softmax(logits).into_iter().map(f64::exp).collect()
}

/// `Σ softmax(logits)_l · v_l`.
pub fn weighted_layer_average(vectors: &[&[f64]], logits: &[f64]) -> Result<Vec<f64>, DownstreamError> {
    let first = vectors.first().ok_or(DownstreamError::NoLayers)?;
    if logits.len() != vectors.len() {
        return Err(DownstreamError::DimMismatch {
            expected: vectors.len(),
            found: logits.len(),
        });
    }
    let w = softmax(logits);
    let mut out = vec![0.0; first.len()];
    for (v, &s) in vectors.iter().zip(&w) {
        if v.len() != out.len() {
            return Err(DownstreamError::DimMismatch {
                expected: out.len(),
                found: v.len(),
            });
        }
        for (o, &x) in out.iter_mut().zip(*v) {
            *o += s * x;
        }
    }
    Ok(out)
}

/// Seeded split holding out `test_fraction` of every class (at least one
/// test and one training example for classes of two or more). The choice
/// depends only on which examples share a class, not on label values.
pub fn stratified_split(labels: &[usize], test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..labels.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    order.shuffle(&mut rng);
    let mut test = Vec::new();
    for c in labels.iter().collect::<BTreeSet<_>>() {
        let members: Vec<usize> = order.iter().copied().filter(|&i| labels[i] == *c).collect();
        let n = members.len();
        let k = if n < 2 {
            0
        } else {
            ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1)
        };
        test.extend_from_slice(&members[..k]);
    }
    test.sort_unstable();
    let train = (0..labels.len()).filter(|i| test.binary_search(i).is_err()).collect();
    (train, test)
}

/// Mean cross-entropy of a batch fed through a learned layer average, with
/// gradients for the classifier parameters and for the layer logits.
/// `samples[b][l]` is layer `l` of example `b`.
pub fn weighted_loss_and_grads(
    mlp: &Mlp,
    logits: &[f64],
    samples: &[&[Vec<f64>]],
    targets: &[Target],
    masks: Option<&[Masks]>,
) -> Result<(f64, Vec<f64>, Vec<f64>), DownstreamError> {
    let w = softmax(logits);
    let inputs: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            let refs: Vec<&[f64]> = s.iter().map(Vec::as_slice).collect();
            weighted_layer_average(&refs, logits)
        })
        .collect::<Result<_, _>>()?;
    let refs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
    let (loss, grad, d_in) = mlp.loss_and_grads(&refs, targets, Objective::CrossEntropy, masks, true)?;
    let d_in = d_in.expect("input gradients requested");
    let mut g_logits = vec![0.0; logits.len()];
    for ((s, x), dx) in samples.iter().zip(&inputs).zip(&d_in) {
        let x_dot = crate::probe::dot_product(x, dx);
        for (l, v) in s.iter().enumerate() {
            g_logits[l] += w[l] * (crate::probe::dot_product(v, dx) - x_dot);
        }
    }
    Ok((loss, grad, g_logits))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DownstreamResult {
    pub accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub epochs: usize,
    /// Test accuracy of always predicting the most frequent training class.
    pub majority_baseline: f64,
    /// Softmax layer weights after training, for learned averages.
    pub layer_weights: Option<Vec<f64>>,
}

/// Trains the classifier for a fixed number of epochs and reports held-out
/// accuracy. With `learn_weights`, each example's layers are combined by a
/// learned softmax average; otherwise every example must carry exactly one
/// layer.
pub fn train_downstream(
    samples: &[Vec<Vec<f64>>],
    labels: &[usize],
    cfg: &DownstreamConfig,
    learn_weights: bool,
) -> Result<DownstreamResult, DownstreamError> {
    cfg.validate()?;
    if samples.len() != labels.len() {
        return Err(DownstreamError::DimMismatch {
            expected: samples.len(),
            found: labels.len(),
        });
    }
    let classes: Vec<usize> = labels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if classes.len() < 2 {
        return Err(DownstreamError::SingleClass);
    }
    let (train, test) = stratified_split(labels, cfg.test_fraction, cfg.seed);
    if train.is_empty() || test.is_empty() {
        return Err(DownstreamError::TooFewExamples {
            found: samples.len(),
            needed: 2 * classes.len(),
        });
    }
    let n_layers = samples[0].len();
    if n_layers == 0 {
        return Err(DownstreamError::NoLayers);
    }
    if !learn_weights && n_layers != 1 {
        return Err(DownstreamError::DimMismatch {
            expected: 1,
            found: n_layers,
        });
    }
    let dim = samples[0][0].len();
    for s in samples {
        if s.len() != n_layers {
            return Err(DownstreamError::DimMismatch {
                expected: n_layers,
                found: s.len(),
            });
        }
        if let Some(v) = s.iter().find(|v| v.len() != dim) {
            return Err(DownstreamError::DimMismatch {
                expected: dim,
                found: v.len(),
            });
        }
    }
    let class_index = |l: usize| classes.binary_search(&l).expect("label is a class");
    let targets: Vec<Target> = labels.iter().map(|&l| Target::Class(class_index(l))).collect();

    let mut dims = vec![dim];
    dims.extend(&cfg.hidden);
    dims.push(classes.len());
    let mut dropout = vec![0.0; cfg.hidden.len()];
    *dropout.last_mut().expect("hidden non-empty") = cfg.dropout;
    let mut mlp = Mlp::new(&dims, &dropout)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(2);
    mlp.init(&mut rng);
    let last = mlp.n_layers() - 1;
    mlp.weights_mut(last).fill(0.0);
    mlp.bias_mut(last).fill(0.0);

    let adam_cfg = AdamConfig {
        learning_rate: cfg.learning_rate,
        ..AdamConfig::default()
    };
    let mut adam = Adam::new(adam_cfg, mlp.params().len());
    let mut logits = vec![0.0; n_layers];
    let mut logit_adam = Adam::new(adam_cfg, n_layers);
    let mut order = train.clone();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            let ys: Vec<Target> = batch.iter().map(|&i| targets[i]).collect();
            let masks: Vec<Masks> = batch.iter().map(|_| mlp.sample_masks(&mut rng)).collect();
            if learn_weights {
                let xs: Vec<&[Vec<f64>]> = batch.iter().map(|&i| samples[i].as_slice()).collect();
                let (_, grad, g_logits) = weighted_loss_and_grads(&mlp, &logits, &xs, &ys, Some(&masks))?;
                adam.step(mlp.params_mut(), &grad);
                logit_adam.step(&mut logits, &g_logits);
            } else {
                let xs: Vec<&[f64]> = batch.iter().map(|&i| samples[i][0].as_slice()).collect();
                let (_, grad) = mlp.loss_and_grad(&xs, &ys, Objective::CrossEntropy, Some(&masks))?;
                adam.step(mlp.params_mut(), &grad);
            }
        }
    }

    let mut correct = 0;
    for &i in &test {
        let x = if learn_weights {
            let refs: Vec<&[f64]> = samples[i].iter().map(Vec::as_slice).collect();
            weighted_layer_average(&refs, &logits)?
        } else {
            samples[i][0].clone()
        };
        if Target::Class(argmax(&mlp.forward(&x)?)) == targets[i] {
            correct += 1;
        }
    }
    let mut counts = vec![0usize; classes.len()];
    for &i in &train {
        counts[class_index(labels[i])] += 1;
    }
    let majority = (0..counts.len()).fold(0, |best, c| if counts[c] > counts[best] { c } else { best });
    let majority_hits = test.iter().filter(|&&i| targets[i] == Target::Class(majority)).count();
    Ok(DownstreamResult {
        accuracy: correct as f64 / test.len() as f64,
        majority_baseline: majority_hits as f64 / test.len() as f64,
        n_train: train.len(),
        n_test: test.len(),
        epochs: cfg.epochs,
        layer_weights: learn_weights.then(|| softmax(&logits)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn average_examples() {
        let v = [1.0, -2.0, 3.0];
        assert_eq!(weighted_layer_average(&[&v, &v, &v], &[0.0; 3]).unwrap(), v.to_vec());
        let avg = weighted_layer_average(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.0, 0.0]).unwrap();
        assert_eq!(avg, vec![0.5, 0.5]);
        let near = weighted_layer_average(&[&[1.0, 0.0], &[0.0, 1.0]], &[40.0, 0.0]).unwrap();
        assert!((near[0] - 1.0).abs() < 1e-12 && near[1].abs() < 1e-12);
        assert!(matches!(
            weighted_layer_average(&[&[1.0], &[1.0, 2.0]], &[0.0, 0.0]),
            Err(DownstreamError::DimMismatch { .. })
        ));
        assert_eq!(weighted_layer_average(&[], &[]), Err(DownstreamError::NoLayers));
    }

    #[test]
    fn logit_gradients_match_finite_differences() {
        for seed in 0..10 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut mlp = Mlp::new(&[4, 5, 3, 3], &[0.0, 0.2]).unwrap();
            mlp.init(&mut rng);
            let samples: Vec<Vec<Vec<f64>>> = (0..5)
                .map(|_| (0..3).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect())
                .collect();
            let refs: Vec<&[Vec<f64>]> = samples.iter().map(Vec::as_slice).collect();
            let targets: Vec<Target> = (0..5).map(|i| Target::Class(i % 3)).collect();
            let masks: Vec<Masks> = (0..5).map(|_| mlp.sample_masks(&mut rng)).collect();
            let logits: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (_, _, g) = weighted_loss_and_grads(&mlp, &logits, &refs, &targets, Some(&masks)).unwrap();
            let h = 1e-5;
            for l in 0..3 {
                let mut up = logits.clone();
                up[l] += h;
                let mut down = logits.clone();
                down[l] -= h;
                let f = |lg: &[f64]| weighted_loss_and_grads(&mlp, lg, &refs, &targets, Some(&masks)).unwrap().0;
                let numeric = (f(&up) - f(&down)) / (2.0 * h);
                let rel = (g[l] - numeric).abs() / g[l].abs().max(numeric.abs()).max(1e-8);
                assert!(rel < 1e-4, "seed {seed} layer {l}: {} vs {numeric}", g[l]);
            }
        }
    }

    #[test]
    fn split_is_stratified() {
        let labels: Vec<usize> = (0..50).map(|i| i % 5).collect();
        let (train, test) = stratified_split(&labels, 0.2, 1);
        assert_eq!((train.len(), test.len()), (40, 10));
        for c in 0..5 {
            assert_eq!(test.iter().filter(|&&i| labels[i] == c).count(), 2);
        }
        let renamed: Vec<usize> = labels.iter().map(|l| 100 - l).collect();
        assert_eq!(stratified_split(&renamed, 0.2, 1).1, test);
    }

    fn blobs(n_per: usize, k: usize, dim: usize, seed: u64) -> (Vec<Vec<Vec<f64>>>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = vec![];
        let mut ys = vec![];
        for c in 0..k {
            for _ in 0..n_per {
                let v = (0..dim)
                    .map(|j| if j % k == c { 3.0 } else { 0.0 } + rng.random_range(-0.5..0.5))
                    .collect();
                xs.push(vec![v]);
                ys.push(c);
            }
        }
        (xs, ys)
    }

    #[test]
    fn separable_and_permutation_invariant() {
        let cfg = DownstreamConfig {
            hidden: vec![16, 8],
            epochs: 20,
            ..Default::default()
        };
        let (xs, ys) = blobs(20, 3, 12, 0);
        let a = train_downstream(&xs, &ys, &cfg, false).unwrap();
        assert_eq!(a.accuracy, 1.0);
        let permuted: Vec<usize> = ys.iter().map(|&c| [2, 0, 1][c]).collect();
        assert_eq!(train_downstream(&xs, &permuted, &cfg, false).unwrap().accuracy, a.accuracy);
        assert_eq!(train_downstream(&xs, &vec![1; 60], &cfg, false), Err(DownstreamError::SingleClass));
    }
}
