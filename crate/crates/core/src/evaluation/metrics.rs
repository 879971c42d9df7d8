use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{f1, ratio, EvaluationError};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Positive-class F1, 0 when precision and recall are both 0.
    pub f1: f64,
    pub accuracy: f64,
    pub confusion: Confusion,
}

/// Binary metrics with 1 as the positive (similar) class.
pub fn classification_metrics(predictions: &[u8], labels: &[u8]) -> Result<RunMetrics, EvaluationError> {
    if predictions.len() != labels.len() {
        return Err(EvaluationError::LengthMismatch(predictions.len(), labels.len()));
    }
    if labels.is_empty() {
        return Err(EvaluationError::Empty);
    }
    let mut c = Confusion::default();
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p != 0, l != 0) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    Ok(RunMetrics {
        f1: f1(precision, recall),
        accuracy: ratio(c.tp + c.tn, c.total()),
        confusion: c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub n: usize,
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Five-number summary plus mean. Quartiles are medians of the lower and
/// upper halves, leaving out the middle value when `n` is odd; a single
/// value is its own quartiles.
pub fn boxplot_stats(values: &[f64]) -> Result<BoxplotStats, EvaluationError> {
    if values.is_empty() {
        return Err(EvaluationError::Empty);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let (q1, q3) = if n == 1 {
        (v[0], v[0])
    } else {
        (median_sorted(&v[..n / 2]), median_sorted(&v[n.div_ceil(2)..]))
    };
    Ok(BoxplotStats {
        min: v[0],
        q1,
        median: median_sorted(&v),
        q3,
        max: v[n - 1],
        // offset from the minimum keeps a constant list's mean exact
        mean: v[0] + v.iter().map(|x| x - v[0]).sum::<f64>() / n as f64,
        n,
    })
}

/// One row of the per-experiment metrics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub repeat_index: usize,
    pub f1: f64,
    pub accuracy: f64,
}

pub fn write_runs_csv(path: &Path, rows: &[RunRecord]) -> Result<(), EvaluationError> {
    let err = |e: &dyn std::fmt::Display| EvaluationError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| err(&e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| err(&e))?;
    for row in rows {
        w.serialize(row).map_err(|e| err(&e))?;
    }
    w.flush().map_err(|e| err(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn confusion_example() {
        let m = classification_metrics(&[1, 1, 0, 0], &[1, 0, 0, 1]).unwrap();
        assert_eq!(m.confusion, Confusion { tp: 1, fp: 1, fn_: 1, tn: 1 });
        assert_eq!((m.f1, m.accuracy), (0.5, 0.5));
        let all = classification_metrics(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!((all.f1, all.accuracy), (1.0, 1.0));
        let none = classification_metrics(&[0, 0, 0], &[1, 0, 1]).unwrap();
        assert_eq!(none.f1, 0.0);
        assert_abs_diff_eq!(none.accuracy, 1.0 / 3.0);
        assert!(matches!(classification_metrics(&[1], &[1, 0]), Err(EvaluationError::LengthMismatch(1, 2))));
    }

    #[test]
    fn quartiles() {
        let s = boxplot_stats(&[5.0, 1.0, 4.0, 2.0, 3.0]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max, s.mean), (1.0, 1.5, 3.0, 4.5, 5.0, 3.0));
        let e = boxplot_stats(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!((e.q1, e.median, e.q3), (2.0, 3.5, 5.0));
        let one = boxplot_stats(&[0.7]).unwrap();
        assert_eq!((one.min, one.q1, one.median, one.q3, one.max, one.mean), (0.7, 0.7, 0.7, 0.7, 0.7, 0.7));
        let flat = boxplot_stats(&[0.4; 7]).unwrap();
        assert!(flat.min == flat.max && flat.mean == flat.min);
        assert!(matches!(boxplot_stats(&[]), Err(EvaluationError::Empty)));
    }

    #[test]
    fn runs_csv_has_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("runs.csv");
        write_runs_csv(&p, &[RunRecord { repeat_index: 0, f1: 0.5, accuracy: 0.75 }]).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert_eq!(text, "repeat_index,f1,accuracy\n0,0.5,0.75\n");
    }

    proptest! {
        #[test]
        fn permutation_invariant_and_bounded(
            pairs in proptest::collection::vec((0u8..2, 0u8..2), 1..40), seed in any::<u64>(),
        ) {
            use rand::{seq::SliceRandom, SeedableRng};
            let (p, l): (Vec<u8>, Vec<u8>) = pairs.iter().copied().unzip();
            let a = classification_metrics(&p, &l).unwrap();
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (p2, l2): (Vec<u8>, Vec<u8>) = shuffled.into_iter().unzip();
            let b = classification_metrics(&p2, &l2).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!((0.0..=1.0).contains(&a.f1) && (0.0..=1.0).contains(&a.accuracy));
            prop_assert_eq!(a.confusion.total(), pairs.len());
        }

        #[test]
        fn boxplot_is_ordered(v in proptest::collection::vec(-10.0f64..10.0, 1..40)) {
            let s = boxplot_stats(&v).unwrap();
            prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
            prop_assert!(s.min <= s.mean + 1e-12 && s.mean <= s.max + 1e-12);
        }
    }
}
