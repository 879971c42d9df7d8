use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClassifierError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_frac: 0.64,
            val_frac: 0.16,
            test_frac: 0.20,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn with_seed(seed: u64) -> Self {
        SplitSpec { seed, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), ClassifierError> {
        let fracs = [self.train_frac, self.val_frac, self.test_frac];
        if fracs.iter().any(|&f| f.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)) {
            return Err(ClassifierError::InvalidSplit("fractions must be positive".into()));
        }
        if (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(ClassifierError::InvalidSplit("fractions must sum to 1".into()));
        }
        Ok(())
    }
}

/// Indices into the labeled set, each list ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits each class separately: `round(n * test_frac)` to test,
/// `round(n * val_frac)` to validation, the rest to training.
pub fn stratified_split(labels: &[u8], spec: &SplitSpec) -> Result<Split, ClassifierError> {
    spec.validate()?;
    let mut by_class: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        by_class.entry(l).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut split = Split::default();
    for (class, mut members) in by_class {
        let n = members.len();
        if n < 3 {
            return Err(ClassifierError::DegenerateClass { class, count: n });
        }
        members.shuffle(&mut rng);
        let n_test = (n as f64 * spec.test_frac).round() as usize;
        let n_val = (n as f64 * spec.val_frac).round() as usize;
        split.test.extend(&members[..n_test]);
        split.val.extend(&members[n_test..n_test + n_val]);
        split.train.extend(&members[n_test + n_val..]);
    }
    split.train.sort_unstable();
    split.val.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn count(idx: &[usize], labels: &[u8], class: u8) -> usize {
        idx.iter().filter(|&&i| labels[i] == class).count()
    }

    #[test]
    fn sixty_forty() {
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i >= 60)).collect();
        let s = stratified_split(&labels, &SplitSpec::with_seed(1)).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (64, 16, 20));
        assert_eq!((count(&s.train, &labels, 0), count(&s.train, &labels, 1)), (38, 26));
        assert_eq!((count(&s.val, &labels, 0), count(&s.val, &labels, 1)), (10, 6));
        assert_eq!((count(&s.test, &labels, 0), count(&s.test, &labels, 1)), (12, 8));
        assert_eq!(stratified_split(&labels, &SplitSpec::with_seed(1)).unwrap(), s);
    }

    #[test]
    fn published_test_size() {
        let labels: Vec<u8> = (0..2288).map(|i| u8::from(i < 928)).collect();
        let s = stratified_split(&labels, &SplitSpec::default()).unwrap();
        assert!((s.test.len() as i64 - 458).abs() <= 1);
    }

    #[test]
    fn tiny_class_is_degenerate() {
        let labels = [0, 0, 0, 0, 1, 1];
        assert!(matches!(
            stratified_split(&labels, &SplitSpec::default()),
            Err(ClassifierError::DegenerateClass { class: 1, count: 2 })
        ));
    }

    #[test]
    fn bad_fractions() {
        let spec = SplitSpec { test_frac: 0.3, ..Default::default() };
        assert!(matches!(spec.validate(), Err(ClassifierError::InvalidSplit(_))));
    }

    proptest! {
        #[test]
        fn disjoint_cover_within_one(n0 in 3usize..300, n1 in 3usize..300, seed in any::<u64>()) {
            let labels: Vec<u8> = (0..n0 + n1).map(|i| u8::from(i >= n0)).collect();
            let spec = SplitSpec::with_seed(seed);
            let s = stratified_split(&labels, &spec).unwrap();
            let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
            for (class, n) in [(0u8, n0), (1u8, n1)] {
                for (idx, frac) in [(&s.train, spec.train_frac), (&s.val, spec.val_frac), (&s.test, spec.test_frac)] {
                    let got = count(idx, &labels, class) as f64;
                    prop_assert!((got - n as f64 * frac).abs() <= 1.0);
                }
            }
        }
    }
}
