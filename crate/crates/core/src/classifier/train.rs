use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ClassifierError, Cnn, CnnSpec};
use crate::evaluation::classification_metrics;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 100,
            patience: 10,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub pixels: Array2<u8>,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_f1: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose weights were kept.
    pub best_epoch: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: u8,
    /// Probability of the similar class.
    pub score: f64,
}

struct Adam {
    lr: f32,
    t: i32,
    m: Vec<Array2<f32>>,
    v: Vec<Array2<f32>>,
}

impl Adam {
    const B1: f32 = 0.9;
    const B2: f32 = 0.999;
    const EPS: f32 = 1e-7;

    fn new(params: &[Array2<f32>], lr: f64) -> Self {
        let zeros = || params.iter().map(|p| Array2::zeros(p.dim())).collect();
        Adam { lr: lr as f32, t: 0, m: zeros(), v: zeros() }
    }

    fn step(&mut self, params: &mut [Array2<f32>], grads: &[Array2<f32>]) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(&mut self.v)) {
            m.zip_mut_with(g, |m, &g| *m = Self::B1 * *m + (1.0 - Self::B1) * g);
            v.zip_mut_with(g, |v, &g| *v = Self::B2 * *v + (1.0 - Self::B2) * g * g);
            ndarray::Zip::from(p).and(&*m).and(&*v).for_each(|p, &m, &v| {
                *p -= self.lr * (m / c1) / ((v / c2).sqrt() + Self::EPS);
            });
        }
    }
}

fn evaluate(net: &Cnn, set: &[Sample], batch_size: usize) -> Result<(f64, Vec<u8>), ClassifierError> {
    let mut loss = 0.0;
    let mut preds = Vec::with_capacity(set.len());
    for chunk in set.chunks(batch_size.max(1)) {
        let imgs: Vec<&Array2<u8>> = chunk.iter().map(|s| &s.pixels).collect();
        let labels: Vec<u8> = chunk.iter().map(|s| s.label).collect();
        let cache = net.forward(net.input(&imgs)?, chunk.len(), None);
        loss += Cnn::loss(cache.probs(), &labels) * chunk.len() as f64;
        preds.extend(cache.probs().rows().into_iter().map(|r| u8::from(r[1] >= 0.5)));
    }
    Ok((loss / set.len() as f64, preds))
}

/// Trains with Adam on mini-batches and keeps the weights of the best
/// validation epoch, ranked by validation F1 and then by lower validation
/// loss. Stops after `patience` epochs without improvement.
pub fn train(
    spec: &CnnSpec,
    config: &TrainConfig,
    train_set: &[Sample],
    val_set: &[Sample],
) -> Result<(Cnn, History), ClassifierError> {
    if train_set.is_empty() {
        return Err(ClassifierError::EmptySplit("training"));
    }
    if val_set.is_empty() {
        return Err(ClassifierError::EmptySplit("validation"));
    }
    let mut net = Cnn::new(spec.clone(), config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut adam = Adam::new(&net.params, config.learning_rate);
    let val_labels: Vec<u8> = val_set.iter().map(|s| s.label).collect();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = History::default();
    let mut best: Option<(f64, f64, Vec<Array2<f32>>)> = None;
    let mut stale = 0;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut train_loss = 0.0;
        for chunk in order.chunks(config.batch_size.max(1)) {
            let imgs: Vec<&Array2<u8>> = chunk.iter().map(|&i| &train_set[i].pixels).collect();
            let labels: Vec<u8> = chunk.iter().map(|&i| train_set[i].label).collect();
            let cache = net.forward(net.input(&imgs)?, chunk.len(), Some(&mut rng));
            train_loss += Cnn::loss(cache.probs(), &labels) * chunk.len() as f64;
            let grads = net.backward(&cache, &labels);
            adam.step(&mut net.params, &grads);
        }
        let (val_loss, preds) = evaluate(&net, val_set, config.batch_size)?;
        let m = classification_metrics(&preds, &val_labels).expect("lengths match");
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: train_loss / train_set.len() as f64,
            val_loss,
            val_f1: m.f1,
            val_accuracy: m.accuracy,
        });
        let improved = match &best {
            None => true,
            Some((f1, loss, _)) => m.f1 > *f1 || (m.f1 == *f1 && val_loss < *loss),
        };
        if improved {
            best = Some((m.f1, val_loss, net.params.clone()));
            history.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    if let Some((_, _, params)) = best {
        net.params = params;
    }
    Ok((net, history))
}

impl Cnn {
    pub fn predict(&self, image: &Array2<u8>) -> Result<Prediction, ClassifierError> {
        Ok(self.predict_batch(&[image])?[0])
    }

    /// Label 1 iff the similar-class probability is at least 0.5.
    pub fn predict_batch(&self, images: &[&Array2<u8>]) -> Result<Vec<Prediction>, ClassifierError> {
        let mut out = Vec::with_capacity(images.len());
        for chunk in images.chunks(64) {
            for score in self.positive_scores(chunk)? {
                out.push(Prediction {
                    label: u8::from(score >= 0.5),
                    score: score as f64,
                });
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Class 1 lights the top half, class 0 the bottom half.
    fn halves(n: usize) -> Vec<Sample> {
        (0..n)
            .map(|i| {
                let label = (i % 2) as u8;
                let shade = 180 + (i * 9 % 70) as u8;
                let pixels = Array2::from_shape_fn((32, 32), |(r, _)| {
                    if (r < 16) == (label == 1) { shade } else { 20 }
                });
                Sample { pixels, label }
            })
            .collect()
    }

    #[test]
    fn overfits_separable_set() {
        let set = halves(8);
        let cfg = TrainConfig { max_epochs: 50, patience: 50, seed: 4, ..Default::default() };
        let (net, history) = train(&CnnSpec::default(), &cfg, &set, &set).unwrap();
        assert!(history.epochs.len() <= 50);
        for s in &set {
            let p = net.predict(&s.pixels).unwrap();
            assert_eq!(p.label, s.label);
            assert!((0.0..=1.0).contains(&p.score));
        }
    }

    #[test]
    fn empty_training_set() {
        let set = halves(2);
        assert!(matches!(
            train(&CnnSpec::default(), &TrainConfig::default(), &[], &set),
            Err(ClassifierError::EmptySplit("training"))
        ));
    }

    #[test]
    fn wrong_size_is_rejected() {
        let net = Cnn::new(CnnSpec::default(), 0).unwrap();
        let err = net.predict(&Array2::zeros((16, 16))).unwrap_err();
        assert!(matches!(err, ClassifierError::ShapeMismatch { expected: 32, rows: 16, cols: 16 }));
    }

    #[test]
    fn constant_images_fall_back_to_majority() {
        let set: Vec<Sample> = (0..20)
            .map(|i| Sample { pixels: Array2::from_elem((32, 32), 128), label: u8::from(i < 6) })
            .collect();
        let cfg = TrainConfig { max_epochs: 30, patience: 30, seed: 1, ..Default::default() };
        let (net, _) = train(&CnnSpec::default(), &cfg, &set, &set).unwrap();
        let preds: Vec<u8> = set.iter().map(|s| net.predict(&s.pixels).unwrap().label).collect();
        let acc = preds.iter().zip(&set).filter(|(p, s)| **p == s.label).count() as f64 / 20.0;
        assert!((acc - 0.7).abs() < 1e-9, "{acc}");
    }

    #[test]
    fn same_seed_same_history() {
        let set = halves(10);
        let cfg = TrainConfig { max_epochs: 4, seed: 11, ..Default::default() };
        let a = train(&CnnSpec::default(), &cfg, &set[..6], &set[6..]).unwrap();
        let b = train(&CnnSpec::default(), &cfg, &set[..6], &set[6..]).unwrap();
        assert_eq!(a.1, b.1);
        assert_eq!(a.0, b.0);
    }
}
