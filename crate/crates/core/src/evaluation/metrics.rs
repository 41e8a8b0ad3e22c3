use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::model::SupportSet;

/// Confusion counts of a selected support against the true one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionCounts { tp, fp, fn_, tn }
    }

    pub fn p(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn selected(&self) -> u64 {
        self.tp + self.fp
    }
}

/// Panics if either support reaches past `p`.
pub fn confusion(selected: &SupportSet, truth: &SupportSet, p: usize) -> ConfusionCounts {
    assert!(
        selected.check_within(p).is_ok() && truth.check_within(p).is_ok(),
        "supports must lie within 1..={p}"
    );
    let tp = selected.intersection_len(truth) as u64;
    let fp = selected.len() as u64 - tp;
    let fn_ = truth.len() as u64 - tp;
    ConfusionCounts {
        tp,
        fp,
        fn_,
        tn: p as u64 - tp - fp - fn_,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    F1,
    F2,
    Mcc,
    Precision,
    Recall,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::F1, Metric::F2, Metric::Mcc, Metric::Precision, Metric::Recall];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::F1 => "f1",
            Metric::F2 => "f2",
            Metric::Mcc => "mcc",
            Metric::Precision => "precision",
            Metric::Recall => "recall",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| invalid(format!("unknown metric `{s}`")))
    }
}

/// A metric value. When the metric's denominator vanishes the value is 0 and
/// `defined` is false.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricScore {
    pub metric: Metric,
    pub value: f64,
    pub defined: bool,
}

fn ratio(metric: Metric, num: u64, den: u64) -> MetricScore {
    match den {
        0 => MetricScore {
            metric,
            value: 0.0,
            defined: false,
        },
        _ => MetricScore {
            metric,
            value: num as f64 / den as f64,
            defined: true,
        },
    }
}

/// F-scores are evaluated in count form, `(1+b²)tp / ((1+b²)tp + b²fn + fp)`,
/// with a single rounding. An empty selection against a non-empty truth
/// therefore has F1 = 0 (defined) even though its precision is undefined.
pub fn score(c: ConfusionCounts, metric: Metric) -> MetricScore {
    let ConfusionCounts { tp, fp, fn_, tn } = c;
    match metric {
        Metric::Precision => ratio(metric, tp, tp + fp),
        Metric::Recall => ratio(metric, tp, tp + fn_),
        Metric::F1 => ratio(metric, 2 * tp, 2 * tp + fp + fn_),
        Metric::F2 => ratio(metric, 5 * tp, 5 * tp + 4 * fn_ + fp),
        Metric::Mcc => {
            let den = [tp + fp, tp + fn_, tn + fp, tn + fn_];
            if den.contains(&0) {
                return MetricScore {
                    metric,
                    value: 0.0,
                    defined: false,
                };
            }
            let num = tp as f64 * tn as f64 - fp as f64 * fn_ as f64;
            let d = (den.iter().map(|&v| v as u128).product::<u128>() as f64).sqrt();
            MetricScore {
                metric,
                value: (num / d).clamp(-1.0, 1.0),
                defined: true,
            }
        }
    }
}
