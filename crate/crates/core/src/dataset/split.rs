use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DatasetError, SequenceWindow};
use crate::sensor::MotionType;

/// Guard added to the divisor of the z-score.
pub const NORMALIZATION_EPSILON: f64 = 1e-8;

/// Per-feature z-score statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    pub fn identity(features: usize) -> Self {
        Normalization { mean: vec![0.0; features], std: vec![1.0; features] }
    }

    /// Mean and population standard deviation over every step of every
    /// window.
    pub fn fit(windows: &[SequenceWindow]) -> Result<Self, DatasetError> {
        let first = windows.first().ok_or_else(|| DatasetError::Domain("no windows to fit".into()))?;
        let f = first.features;
        let mut mean = vec![0.0; f];
        let mut m2 = vec![0.0; f];
        let mut n = 0.0;
        for w in windows {
            for row in w.values.chunks_exact(f) {
                n += 1.0;
                for k in 0..f {
                    let d = row[k] - mean[k];
                    mean[k] += d / n;
                    m2[k] += d * (row[k] - mean[k]);
                }
            }
        }
        let std = m2.iter().map(|m| (m / n).sqrt()).collect();
        Ok(Normalization { mean, std })
    }

    pub fn features(&self) -> usize {
        self.mean.len()
    }

    /// Z-scores a row-major `T × F` block in place.
    pub fn apply(&self, values: &mut [f64]) {
        let f = self.mean.len();
        for row in values.chunks_exact_mut(f) {
            for k in 0..f {
                row[k] = (row[k] - self.mean[k]) / self.std[k].max(NORMALIZATION_EPSILON);
            }
        }
    }
}

/// Hold-out partition with normalization fitted on the training part.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    /// Normalized training windows.
    pub train: Vec<SequenceWindow>,
    /// Normalized test windows.
    pub test: Vec<SequenceWindow>,
    pub normalization: Normalization,
    pub features: Vec<String>,
    pub ratio: f64,
    pub seed: u64,
}

/// Stratified, seeded hold-out split.
///
/// Each class is shuffled and cut so that its train share is within one
/// window of `ratio`; leftover windows are assigned by largest remainder so
/// the overall train count is `round(ratio · N)`. Normalization statistics come
/// from the training windows only and are applied to both parts.
pub fn split_holdout(
    windows: Vec<SequenceWindow>,
    features: Vec<String>,
    ratio: f64,
    seed: u64,
) -> Result<SplitDataset, DatasetError> {
    let (mut train, mut test) = holdout_partition(windows, &features, ratio, seed)?;
    let normalization = Normalization::fit(&train)?;
    for w in train.iter_mut().chain(test.iter_mut()) {
        normalization.apply(&mut w.values);
    }
    Ok(SplitDataset { train, test, normalization, features, ratio, seed })
}

/// The raw (unnormalized) train and test parts that [`split_holdout`]
/// produces for the same arguments.
pub fn holdout_partition(
    windows: Vec<SequenceWindow>,
    features: &[String],
    ratio: f64,
    seed: u64,
) -> Result<(Vec<SequenceWindow>, Vec<SequenceWindow>), DatasetError> {
    if windows.is_empty() {
        return Err(DatasetError::Domain("cannot split an empty window set".into()));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DatasetError::Domain(format!("split ratio must lie in (0, 1), got {ratio}")));
    }
    if let Some(w) = windows.iter().find(|w| w.features != features.len()) {
        return Err(DatasetError::Domain(format!(
            "window has {} features but {} names were given",
            w.features,
            features.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class: BTreeMap<MotionType, Vec<usize>> = BTreeMap::new();
    for (i, w) in windows.iter().enumerate() {
        by_class.entry(w.motion).or_default().push(i);
    }
    for members in by_class.values_mut() {
        members.shuffle(&mut rng);
    }

    let total = windows.len();
    let target = (ratio * total as f64).round() as usize;
    let mut quotas: Vec<(MotionType, usize, f64)> = by_class
        .iter()
        .map(|(m, idx)| {
            let exact = ratio * idx.len() as f64;
            (*m, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let mut remaining = target.saturating_sub(quotas.iter().map(|q| q.1).sum());
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    order.sort_by(|&a, &b| quotas[b].2.total_cmp(&quotas[a].2).then(a.cmp(&b)));
    for k in order {
        if remaining == 0 {
            break;
        }
        if quotas[k].1 < by_class[&quotas[k].0].len() {
            quotas[k].1 += 1;
            remaining -= 1;
        }
    }

    let mut slots: Vec<Option<SequenceWindow>> = windows.into_iter().map(Some).collect();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (motion, n_train, _) in quotas {
        for (j, &i) in by_class[&motion].iter().enumerate() {
            let w = slots[i].take().expect("each window assigned once");
            if j < n_train {
                train.push(w);
            } else {
                test.push(w);
            }
        }
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::HandSide;

    fn windows(per_class: usize) -> Vec<SequenceWindow> {
        let mut out = Vec::new();
        for m in MotionType::ALL {
            for k in 0..per_class {
                let base = (m.index() * 100 + k) as f64;
                out.push(SequenceWindow {
                    respondent: format!("S{k:02}"),
                    motion: m,
                    side: HandSide::Left,
                    offset: 0,
                    steps: 3,
                    features: 2,
                    values: vec![base, 1e3 * base, base + 1.0, -base, base * 0.5, 7.0 + base],
                });
            }
        }
        out
    }

    fn names() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    #[test]
    fn integer_split_per_class() {
        let s = split_holdout(windows(10), names(), 0.8, 1).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (72, 18));
        for m in MotionType::ALL {
            assert_eq!(s.train.iter().filter(|w| w.motion == m).count(), 8);
            assert_eq!(s.test.iter().filter(|w| w.motion == m).count(), 2);
        }
    }

    #[test]
    fn same_seed_same_membership() {
        let a = split_holdout(windows(7), names(), 0.8, 42).unwrap();
        let b = split_holdout(windows(7), names(), 0.8, 42).unwrap();
        assert_eq!(a, b);
        let c = split_holdout(windows(7), names(), 0.8, 43).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn uneven_classes_keep_total_on_target() {
        let s = split_holdout(windows(3), names(), 0.8, 5).unwrap();
        // 27 windows: round(21.6) = 22 train
        assert_eq!(s.train.len(), 22);
        for m in MotionType::ALL {
            let n = s.train.iter().filter(|w| w.motion == m).count() as f64;
            assert!((n - 0.8 * 3.0).abs() <= 1.0);
        }
    }

    #[test]
    fn train_moments_are_standardized() {
        let s = split_holdout(windows(10), names(), 0.8, 9).unwrap();
        // Recompute moments with a plain two-pass formula.
        for k in 0..2 {
            let vals: Vec<f64> = s.train.iter().flat_map(|w| w.values.chunks(2).map(move |r| r[k])).collect();
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-9, "mean {mean}");
            assert!((var.sqrt() - 1.0).abs() < 1e-6, "std {}", var.sqrt());
        }
    }

    #[test]
    fn rejects_empty_and_bad_ratio() {
        assert!(split_holdout(Vec::new(), names(), 0.8, 0).is_err());
        assert!(split_holdout(windows(1), names(), 1.0, 0).is_err());
        assert!(split_holdout(windows(1), vec!["a".into()], 0.5, 0).is_err());
    }

    #[test]
    fn constant_feature_is_guarded() {
        let n = Normalization { mean: vec![2.0], std: vec![0.0] };
        let mut v = [2.0, 2.0];
        n.apply(&mut v);
        assert_eq!(v, [0.0, 0.0]);
    }
}
