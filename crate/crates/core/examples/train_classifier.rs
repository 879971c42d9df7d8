//! Trains the CNN on synthetic similarity images with a stratified split and
//! reports test metrics.
//!
//! ```text
//! cargo run --example train_classifier
//! ```

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use casesim::classifier::{stratified_split, train, CnnSpec, Sample, SplitSpec, TrainConfig};
use casesim::evaluation::classification_metrics;

/// Similar pairs get a bright off-diagonal block; dissimilar pairs a dark one.
fn synthetic(rng: &mut ChaCha8Rng, label: u8) -> Sample {
    let cut = rng.random_range(10..22);
    let cross: f64 = if label == 1 { rng.random_range(0.55..0.9) } else { rng.random_range(0.2..0.6) };
    let pixels = Array2::from_shape_fn((32, 32), |(r, c)| {
        let v = if r == c {
            1.0
        } else if (r < cut) == (c < cut) {
            0.7
        } else {
            cross
        };
        ((v + rng.random_range(-0.1..0.1)) * 255.0).clamp(0.0, 255.0) as u8
    });
    Sample { pixels, label }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let samples: Vec<Sample> = (0..150).map(|i| synthetic(&mut rng, u8::from(i % 5 < 2))).collect();
    let labels: Vec<u8> = samples.iter().map(|s| s.label).collect();
    let split = stratified_split(&labels, &SplitSpec::with_seed(3))?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| samples[i].clone()).collect::<Vec<_>>();
    let (train_set, val_set, test_set) = (pick(&split.train), pick(&split.val), pick(&split.test));
    println!("train {}, validation {}, test {}", train_set.len(), val_set.len(), test_set.len());

    let spec = CnnSpec::default();
    let config = TrainConfig { max_epochs: 30, patience: 5, ..Default::default() };
    let (net, history) = train(&spec, &config, &train_set, &val_set)?;
    for e in &history.epochs {
        println!(
            "epoch {:>2}  train loss {:.4}  val loss {:.4}  val F1 {:.3}",
            e.epoch, e.train_loss, e.val_loss, e.val_f1
        );
    }
    println!("kept epoch {}", history.best_epoch);

    let images: Vec<&Array2<u8>> = test_set.iter().map(|s| &s.pixels).collect();
    let preds: Vec<u8> = net.positive_scores(&images)?.iter().map(|&p| u8::from(p >= 0.5)).collect();
    let truth: Vec<u8> = test_set.iter().map(|s| s.label).collect();
    let m = classification_metrics(&preds, &truth)?;
    println!("test F1 {:.3}, accuracy {:.3}, {:?}", m.f1, m.accuracy, m.confusion);
    Ok(())
}
