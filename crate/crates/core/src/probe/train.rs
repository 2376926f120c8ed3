use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Adam, Metric, Mlp, MinMaxScaler, Objective, ProbeConfig, ProbeError, ProbeRunResult, Target};
use crate::embedding::EmbeddingSet;

const SPLIT_STREAM: u64 = 1;
const TRAIN_STREAM: u64 = 2;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Pairs embedding rows with targets by id. Both sides must list the same
/// ids; rows whose target is missing are dropped. Output follows row order.
pub fn align_targets<T: Copy>(
    set: &EmbeddingSet,
    targets: &[(String, Option<T>)],
) -> Result<Vec<(usize, T)>, ProbeError> {
    let by_id: HashMap<&str, Option<T>> = targets.iter().map(|(id, t)| (id.as_str(), *t)).collect();
    let index = set.index();
    let only_in_embeddings: Vec<String> = set
        .ids()
        .iter()
        .filter(|id| !by_id.contains_key(id.as_str()))
        .cloned()
        .collect();
    let only_in_targets: Vec<String> = targets
        .iter()
        .filter(|(id, _)| !index.contains_key(id.as_str()))
        .map(|(id, _)| id.clone())
        .collect();
    if !only_in_embeddings.is_empty() || !only_in_targets.is_empty() {
        return Err(ProbeError::IdMismatch {
            only_in_embeddings,
            only_in_targets,
        });
    }
    Ok(set
        .ids()
        .iter()
        .enumerate()
        .filter_map(|(row, id)| by_id[id.as_str()].map(|t| (row, t)))
        .collect())
}

/// Seeded shuffle of `0..n` into `(train, val)` with at least one of each.
pub fn split_indices(n: usize, val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut stream(seed, SPLIT_STREAM));
    let n_val = ((n as f64 * val_fraction).round() as usize).clamp(1, n.saturating_sub(1));
    let train = idx.split_off(n_val);
    (train, idx)
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    /// Parameters from the epoch with the lowest validation loss.
    pub mlp: Mlp,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub best_val_loss: f64,
}

/// Mini-batch Adam with early stopping on validation loss.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub adam: super::AdamConfig,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stop after this many epochs without improvement; `None` runs all epochs
    /// and keeps the final parameters.
    pub patience: Option<usize>,
    pub objective: Objective,
}

impl Trainer {
    pub fn from_probe_config(cfg: &ProbeConfig, objective: Objective) -> Self {
        Self {
            adam: cfg.adam(),
            batch_size: cfg.batch_size,
            max_epochs: cfg.max_epochs,
            patience: Some(cfg.patience),
            objective,
        }
    }

    pub fn mean_loss(&self, mlp: &Mlp, xs: &[&[f64]], ys: &[Target]) -> Result<f64, ProbeError> {
        let mut total = 0.0;
        for (chunk, ys) in xs.chunks(256).zip(ys.chunks(256)) {
            for (out, &y) in mlp.forward_batch(chunk)?.iter().zip(ys) {
                total += super::sample_loss(out, y, self.objective)?.0;
            }
        }
        Ok(total / xs.len() as f64)
    }

    /// Trains `mlp` from its current parameters. `rng` drives batch order and
    /// dropout masks.
    pub fn fit(
        &self,
        mut mlp: Mlp,
        train: (&[&[f64]], &[Target]),
        val: (&[&[f64]], &[Target]),
        rng: &mut ChaCha8Rng,
    ) -> Result<FitOutcome, ProbeError> {
        let (tx, ty) = train;
        let mut adam = Adam::new(self.adam, mlp.params().len());
        let mut order: Vec<usize> = (0..tx.len()).collect();
        let mut best: Option<(f64, usize, Mlp)> = None;
        let mut epochs_run = 0;
        let mut bx: Vec<&[f64]> = Vec::with_capacity(self.batch_size);
        let mut by: Vec<Target> = Vec::with_capacity(self.batch_size);
        for epoch in 1..=self.max_epochs {
            epochs_run = epoch;
            order.shuffle(rng);
            for batch in order.chunks(self.batch_size) {
                bx.clear();
                by.clear();
                bx.extend(batch.iter().map(|&i| tx[i]));
                by.extend(batch.iter().map(|&i| ty[i]));
                let masks: Vec<_> = batch.iter().map(|_| mlp.sample_masks(rng)).collect();
                let (_, grad) = mlp.loss_and_grad(&bx, &by, self.objective, Some(&masks))?;
                adam.step(mlp.params_mut(), &grad);
            }
            let Some(patience) = self.patience else {
                continue;
            };
            let loss = self.mean_loss(&mlp, val.0, val.1)?;
            match &best {
                Some((b, _, _)) if loss >= *b => {
                    if epoch - best.as_ref().map_or(0, |b| b.1) >= patience {
                        break;
                    }
                }
                _ => best = Some((loss, epoch, mlp.clone())),
            }
        }
        match best {
            Some((best_val_loss, best_epoch, mlp)) => Ok(FitOutcome {
                mlp,
                best_epoch,
                epochs_run,
                best_val_loss,
            }),
            None => {
                let best_val_loss = self.mean_loss(&mlp, val.0, val.1)?;
                Ok(FitOutcome {
                    mlp,
                    best_epoch: epochs_run,
                    epochs_run,
                    best_val_loss,
                })
            }
        }
    }
}

fn rows_f64(set: &EmbeddingSet) -> Vec<Vec<f64>> {
    (0..set.len())
        .map(|i| set.row(i).iter().map(|&v| v as f64).collect())
        .collect()
}

struct Prepared {
    rows: Vec<Vec<f64>>,
    train: Vec<usize>,
    val: Vec<usize>,
}

fn prepare<T: Copy>(
    set: &EmbeddingSet,
    aligned: &[(usize, T)],
    cfg: &ProbeConfig,
) -> Result<Prepared, ProbeError> {
    cfg.validate()?;
    if aligned.len() < cfg.min_examples {
        return Err(ProbeError::TooFewExamples {
            found: aligned.len(),
            needed: cfg.min_examples,
        });
    }
    let all = rows_f64(set);
    let rows = aligned.iter().map(|&(r, _)| all[r].clone()).collect();
    let (train, val) = split_indices(aligned.len(), cfg.val_fraction, cfg.seed);
    Ok(Prepared { rows, train, val })
}

/// Random hidden layer; the output layer starts at zero weights with biases
/// set to `prior`, so the untrained probe is the best constant predictor.
fn new_probe(input: usize, prior: &[f64], cfg: &ProbeConfig, rng: &mut ChaCha8Rng) -> Result<Mlp, ProbeError> {
    let mut mlp = Mlp::new(&[input, cfg.hidden_dim, prior.len()], &[cfg.dropout])?;
    mlp.init(rng);
    mlp.weights_mut(1).fill(0.0);
    mlp.bias_mut(1).copy_from_slice(prior);
    Ok(mlp)
}

/// Regression probe: validation MSE on min-max scaled targets.
pub fn train_probe(
    set: &EmbeddingSet,
    targets: &[(String, Option<f64>)],
    feature: &str,
    cfg: &ProbeConfig,
) -> Result<ProbeRunResult, ProbeError> {
    let aligned = align_targets(set, targets)?;
    if aligned.iter().any(|(_, y)| !y.is_finite()) {
        return Err(ProbeError::NonFiniteTarget);
    }
    let p = prepare(set, &aligned, cfg)?;
    let raw: Vec<f64> = aligned.iter().map(|&(_, y)| y).collect();
    let train_y: Vec<f64> = p.train.iter().map(|&i| raw[i]).collect();
    let scaler = MinMaxScaler::fit(&train_y)?;
    let xs = |idx: &[usize]| -> Vec<&[f64]> { idx.iter().map(|&i| p.rows[i].as_slice()).collect() };
    let ys = |idx: &[usize]| -> Vec<Target> {
        idx.iter().map(|&i| Target::Value(scaler.transform(raw[i]))).collect()
    };
    let (tx, ty, vx, vy) = (xs(&p.train), ys(&p.train), xs(&p.val), ys(&p.val));

    let train_mean = train_y.iter().map(|&y| scaler.transform(y)).sum::<f64>() / train_y.len() as f64;
    let mut rng = stream(cfg.seed, TRAIN_STREAM);
    let mlp = new_probe(set.dim(), &[train_mean], cfg, &mut rng)?;
    let trainer = Trainer::from_probe_config(cfg, Objective::Mse);
    let fit = trainer.fit(mlp, (&tx, &ty), (&vx, &vy), &mut rng)?;

    let baseline = p
        .val
        .iter()
        .map(|&i| (scaler.transform(raw[i]) - train_mean).powi(2))
        .sum::<f64>()
        / p.val.len() as f64;
    Ok(ProbeRunResult {
        feature: feature.to_string(),
        model: set.model().to_string(),
        layer: set.layer().to_string(),
        metric: Metric::Mse(fit.best_val_loss),
        baseline,
        epochs: fit.epochs_run,
        best_epoch: fit.best_epoch,
        n_train: p.train.len(),
        n_val: p.val.len(),
        seed: cfg.seed,
        scaler: Some(scaler),
    })
}

/// Classification probe: validation accuracy at the lowest validation
/// cross-entropy. Labels are any integers; they are mapped to contiguous
/// class indices in sorted order.
pub fn train_classifier_probe(
    set: &EmbeddingSet,
    labels: &[(String, Option<usize>)],
    feature: &str,
    cfg: &ProbeConfig,
) -> Result<ProbeRunResult, ProbeError> {
    let aligned = align_targets(set, labels)?;
    let classes: Vec<usize> = aligned
        .iter()
        .map(|&(_, c)| c)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if classes.len() < 2 {
        return Err(ProbeError::SingleClass);
    }
    let p = prepare(set, &aligned, cfg)?;
    let class_of: HashMap<usize, usize> = classes.iter().enumerate().map(|(k, &c)| (c, k)).collect();
    let label: Vec<usize> = aligned.iter().map(|(_, c)| class_of[c]).collect();
    let xs = |idx: &[usize]| -> Vec<&[f64]> { idx.iter().map(|&i| p.rows[i].as_slice()).collect() };
    let ys = |idx: &[usize]| -> Vec<Target> { idx.iter().map(|&i| Target::Class(label[i])).collect() };
    let (tx, ty, vx, vy) = (xs(&p.train), ys(&p.train), xs(&p.val), ys(&p.val));

    let mut counts = vec![0usize; classes.len()];
    for &i in &p.train {
        counts[label[i]] += 1;
    }
    let mut rng = stream(cfg.seed, TRAIN_STREAM);
    let log_prior: Vec<f64> = counts
        .iter()
        .map(|&c| ((c as f64 + 1.0) / (p.train.len() + classes.len()) as f64).ln())
        .collect();
    let mlp = new_probe(set.dim(), &log_prior, cfg, &mut rng)?;
    let trainer = Trainer::from_probe_config(cfg, Objective::CrossEntropy);
    let fit = trainer.fit(mlp, (&tx, &ty), (&vx, &vy), &mut rng)?;

    let correct = p
        .val
        .iter()
        .filter(|&&i| super::argmax(&fit.mlp.forward(&p.rows[i]).expect("checked dims")) == label[i])
        .count();
    let majority = super::argmax(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>());
    let baseline = p.val.iter().filter(|&&i| label[i] == majority).count() as f64 / p.val.len() as f64;
    Ok(ProbeRunResult {
        feature: feature.to_string(),
        model: set.model().to_string(),
        layer: set.layer().to_string(),
        metric: Metric::Accuracy(correct as f64 / p.val.len() as f64),
        baseline,
        epochs: fit.epochs_run,
        best_epoch: fit.best_epoch,
        n_train: p.train.len(),
        n_val: p.val.len(),
        seed: cfg.seed,
        scaler: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("u{i:03}")).collect()
    }

    #[test]
    fn alignment_by_id() {
        let set = EmbeddingSet::new("m", "l", 1, ids(3), vec![0.0, 1.0, 2.0]).unwrap();
        let t = vec![
            ("u002".to_string(), Some(2.0)),
            ("u000".to_string(), None),
            ("u001".to_string(), Some(1.0)),
        ];
        assert_eq!(align_targets(&set, &t).unwrap(), vec![(1, 1.0), (2, 2.0)]);
        let short = vec![("u000".to_string(), Some(1.0)), ("zzz".to_string(), Some(1.0))];
        let Err(ProbeError::IdMismatch {
            only_in_embeddings,
            only_in_targets,
        }) = align_targets(&set, &short)
        else {
            panic!("expected IdMismatch");
        };
        assert_eq!(only_in_embeddings, ["u001", "u002"]);
        assert_eq!(only_in_targets, ["zzz"]);
    }

    #[test]
    fn split_is_seeded_partition() {
        let (t, v) = split_indices(100, 0.1, 4);
        assert_eq!((t.len(), v.len()), (90, 10));
        let mut all: Vec<usize> = t.iter().chain(&v).copied().collect();
        all.sort();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(split_indices(100, 0.1, 4), (t, v.clone()));
        assert_ne!(split_indices(100, 0.1, 5).1, v);
        assert_eq!(split_indices(3, 0.01, 0).1.len(), 1);
    }

    #[test]
    fn too_few_examples() {
        let set = EmbeddingSet::new("m", "l", 1, ids(10), vec![0.0; 10]).unwrap();
        let t: Vec<_> = ids(10).into_iter().enumerate().map(|(i, id)| (id, Some(i as f64))).collect();
        assert_eq!(
            train_probe(&set, &t, "f", &ProbeConfig::default()).unwrap_err(),
            ProbeError::TooFewExamples { found: 10, needed: 20 }
        );
    }

    fn linear_data(n: usize, d: usize, seed: u64) -> (EmbeddingSet, Vec<(String, Option<f64>)>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let targets = ids(n).into_iter().zip(&rows).map(|(id, r)| (id, Some(r[0]))).collect();
        (EmbeddingSet::from_rows("m", "l", ids(n), &rows).unwrap(), targets)
    }

    #[test]
    fn regression_is_reproducible_and_learns() {
        let (set, t) = linear_data(200, 8, 1);
        let cfg = ProbeConfig {
            learning_rate: 1e-2,
            hidden_dim: 16,
            max_epochs: 60,
            ..Default::default()
        };
        let a = train_probe(&set, &t, "x0", &cfg).unwrap();
        assert_eq!(a, train_probe(&set, &t, "x0", &cfg).unwrap());
        assert!(a.metric.value() < 0.1 * a.baseline, "{a:?}");
        assert_eq!((a.n_train, a.n_val), (180, 20));
    }

    #[test]
    fn classifier_single_class() {
        let set = EmbeddingSet::new("m", "l", 1, ids(30), vec![0.0; 30]).unwrap();
        let labels: Vec<_> = ids(30).into_iter().map(|id| (id, Some(1))).collect();
        assert_eq!(
            train_classifier_probe(&set, &labels, "c", &ProbeConfig::default()).unwrap_err(),
            ProbeError::SingleClass
        );
    }
}
