//! Label fusion across modalities and one-class evaluation metrics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Label;

/// Rule combining per-modality labels into one item label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum DecisionStrategy {
    /// Target only if every modality says target.
    #[serde(rename = "ds1")]
    And,
    /// Target if any modality says target.
    #[serde(rename = "ds2")]
    Or,
    /// Label of the first modality.
    #[serde(rename = "ds3")]
    FirstModality,
    /// Label of the second modality.
    #[serde(rename = "ds4")]
    SecondModality,
}

impl DecisionStrategy {
    pub const ALL: [DecisionStrategy; 4] = [Self::And, Self::Or, Self::FirstModality, Self::SecondModality];

    pub fn index(self) -> usize {
        self as usize + 1
    }

    /// Minimum number of modalities the strategy can be applied to.
    pub fn min_modalities(self) -> usize {
        match self {
            Self::SecondModality => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for DecisionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DS{}", self.index())
    }
}

impl FromStr for DecisionStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ds1" | "and" => Ok(Self::And),
            "ds2" | "or" => Ok(Self::Or),
            "ds3" | "first" => Ok(Self::FirstModality),
            "ds4" | "second" => Ok(Self::SecondModality),
            other => Err(Error::InvalidParams(format!("unknown decision strategy {other:?}"))),
        }
    }
}

pub fn fuse_labels(per_modality: &[Label], strategy: DecisionStrategy) -> Result<Label> {
    let needed = strategy.min_modalities();
    if per_modality.len() < needed {
        return Err(Error::StrategyArity {
            strategy: match strategy {
                DecisionStrategy::And => "DS1",
                DecisionStrategy::Or => "DS2",
                DecisionStrategy::FirstModality => "DS3",
                DecisionStrategy::SecondModality => "DS4",
            },
            needed,
            found: per_modality.len(),
        });
    }
    let target = match strategy {
        DecisionStrategy::And => per_modality.iter().all(|l| l.is_target()),
        DecisionStrategy::Or => per_modality.iter().any(|l| l.is_target()),
        DecisionStrategy::FirstModality => per_modality[0].is_target(),
        DecisionStrategy::SecondModality => per_modality[1].is_target(),
    };
    Ok(if target { Label::Target } else { Label::Outlier })
}

/// Confusion counts with the target class as positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn from_predictions(truth: &[Label], predicted: &[Label]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::DimensionMismatch {
                expected: truth.len(),
                found: predicted.len(),
            });
        }
        let mut c = Self::default();
        for (t, p) in truth.iter().zip(predicted) {
            match (t.is_target(), p.is_target()) {
                (true, true) => c.tp += 1,
                (true, false) => c.fn_ += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.tn + self.fp
    }

    pub fn total(&self) -> usize {
        self.positives() + self.negatives()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accu: f64,
    pub tpr: f64,
    pub tnr: f64,
    pub pre: f64,
    pub f1: f64,
    pub gmean: f64,
}

impl MetricReport {
    pub fn from_rates(tpr: f64, tnr: f64, pre: f64, accu: f64) -> Self {
        Self {
            accu,
            tpr,
            tnr,
            pre,
            f1: f1_score(pre, tpr),
            gmean: (tpr * tnr).sqrt(),
        }
    }

    pub fn as_array(&self) -> [f64; 6] {
        [self.accu, self.tpr, self.tnr, self.pre, self.f1, self.gmean]
    }

    /// Componentwise mean of several reports.
    pub fn mean(reports: &[MetricReport]) -> Option<MetricReport> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let mut acc = [0.0; 6];
        for r in reports {
            for (a, v) in acc.iter_mut().zip(r.as_array()) {
                *a += v;
            }
        }
        let [accu, tpr, tnr, pre, f1, gmean] = acc.map(|v| v / n);
        Some(MetricReport {
            accu,
            tpr,
            tnr,
            pre,
            f1,
            gmean,
        })
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(pre: f64, tpr: f64) -> f64 {
    if pre + tpr == 0.0 {
        0.0
    } else {
        2.0 * pre * tpr / (pre + tpr)
    }
}

pub fn compute_metrics(c: &ConfusionCounts) -> Result<MetricReport> {
    let p = c.positives();
    let n = c.negatives();
    if p == 0 {
        return Err(Error::EmptyClass("target"));
    }
    if n == 0 {
        return Err(Error::EmptyClass("outlier"));
    }
    let tpr = c.tp as f64 / p as f64;
    let tnr = c.tn as f64 / n as f64;
    let pre = if c.tp + c.fp == 0 {
        0.0
    } else {
        c.tp as f64 / (c.tp + c.fp) as f64
    };
    let accu = (c.tp + c.tn) as f64 / (p + n) as f64;
    Ok(MetricReport::from_rates(tpr, tnr, pre, accu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::{Outlier as N, Target as P};

    #[test]
    fn fusion_truth_table() {
        use DecisionStrategy::*;
        let expect = |labels: [Label; 2], out: [Label; 4]| {
            for (s, o) in DecisionStrategy::ALL.iter().zip(out) {
                assert_eq!(fuse_labels(&labels, *s).unwrap(), o, "{s} on {labels:?}");
            }
        };
        expect([P, N], [N, P, P, N]);
        expect([N, P], [N, P, N, P]);
        expect([P, P], [P; 4]);
        expect([N, N], [N; 4]);
        assert!(matches!(fuse_labels(&[P], SecondModality), Err(Error::StrategyArity { .. })));
        assert_eq!(fuse_labels(&[P], FirstModality).unwrap(), P);
        assert_eq!(fuse_labels(&[P, P, N], And).unwrap(), N);
    }

    #[test]
    fn perfect_classifier_and_empty_classes() {
        let r = compute_metrics(&ConfusionCounts { tp: 4, fp: 0, tn: 6, fn_: 0 }).unwrap();
        assert_eq!(r.as_array(), [1.0; 6]);
        assert!(matches!(compute_metrics(&ConfusionCounts { tp: 0, fp: 2, tn: 1, fn_: 0 }), Err(Error::EmptyClass(_))));
        assert!(matches!(compute_metrics(&ConfusionCounts { tp: 2, fp: 0, tn: 0, fn_: 1 }), Err(Error::EmptyClass(_))));
        let none = compute_metrics(&ConfusionCounts { tp: 0, fp: 0, tn: 5, fn_: 3 }).unwrap();
        assert_eq!((none.pre, none.f1, none.gmean), (0.0, 0.0, 0.0));
    }

    #[test]
    fn table_spot_values() {
        let r = MetricReport::from_rates(0.97, 0.97, 0.93, 0.97);
        assert!((r.gmean - 0.97).abs() < 1e-12);
        assert_eq!(format!("{:.2}", r.f1), "0.95");
    }

    proptest! {
        #[test]
        fn identities(tp in 0usize..50, fp in 0usize..50, tn in 0usize..50, fn_ in 0usize..50) {
            let c = ConfusionCounts { tp, fp, tn, fn_ };
            prop_assume!(c.positives() > 0 && c.negatives() > 0);
            let r = compute_metrics(&c).unwrap();
            prop_assert!((r.gmean * r.gmean - r.tpr * r.tnr).abs() < 1e-12);
            prop_assert!((r.accu - (tp + tn) as f64 / c.total() as f64).abs() < 1e-12);
            for v in r.as_array() {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn permutation_invariance(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 2..40), seed in any::<u64>()) {
            let truth: Vec<Label> = pairs.iter().map(|p| if p.0 { P } else { N }).collect();
            let pred: Vec<Label> = pairs.iter().map(|p| if p.1 { P } else { N }).collect();
            let mut order: Vec<usize> = (0..pairs.len()).collect();
            use rand::{seq::SliceRandom, SeedableRng};
            order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let t2: Vec<Label> = order.iter().map(|&i| truth[i]).collect();
            let p2: Vec<Label> = order.iter().map(|&i| pred[i]).collect();
            let a = ConfusionCounts::from_predictions(&truth, &pred).unwrap();
            let b = ConfusionCounts::from_predictions(&t2, &p2).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn fusion_is_monotone(labels in proptest::collection::vec(any::<bool>(), 2..5)) {
            let labels: Vec<Label> = labels.into_iter().map(|b| if b { P } else { N }).collect();
            let f = |s| fuse_labels(&labels, s).unwrap().is_target();
            use DecisionStrategy::*;
            prop_assert!(!f(And) || (f(FirstModality) && f(SecondModality)));
            prop_assert!(!(f(FirstModality) || f(SecondModality)) || f(Or));
        }
    }
}
