use std::cmp::Ordering;

use super::metrics::{confusion, score, ConfusionCounts, Metric, MetricScore};
use crate::model::{Method, SelectionResult, SupportSet, TuningRecord};
use crate::selectors::{FssTrace, RegularizationPath};

/// One point of a tuning grid.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub support: &'a SupportSet,
    pub tuning: TuningRecord,
}

impl<'a> Candidate<'a> {
    pub fn from_path(path: &'a RegularizationPath) -> impl Iterator<Item = Candidate<'a>> + 'a {
        path.supports.iter().zip(&path.lambdas).map(move |(support, &lambda)| Candidate {
            support,
            tuning: TuningRecord::Penalty {
                alpha: path.alpha,
                lambda,
            },
        })
    }

    pub fn from_results(results: &'a [SelectionResult]) -> impl Iterator<Item = Candidate<'a>> + 'a {
        results.iter().map(|r| Candidate {
            support: &r.support,
            tuning: r.tuning,
        })
    }

    pub fn from_trace(trace: &'a FssTrace) -> impl Iterator<Item = Candidate<'a>> + 'a {
        trace.steps.iter().enumerate().map(|(t, step)| Candidate {
            support: &step.active,
            tuning: TuningRecord::SubsetSize(t + 1),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestScore {
    pub score: MetricScore,
    pub tuning: TuningRecord,
    pub counts: ConfusionCounts,
    pub support_size: usize,
}

impl BestScore {
    /// True when `self` should replace `other` as the optimum.
    fn beats(&self, other: &BestScore) -> bool {
        match self.score.value.total_cmp(&other.score.value) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => match self.support_size.cmp(&other.support_size) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => self.tuning.tie_order(&other.tuning) == Ordering::Less,
            },
        }
    }
}

/// The highest `metric` over all candidates. Ties go to the sparser support,
/// then to the earlier tuning record in [`TuningRecord::tie_order`]. `None`
/// for an empty candidate list.
pub fn best_possible<'a>(
    candidates: impl IntoIterator<Item = Candidate<'a>>,
    truth: &SupportSet,
    p: usize,
    metric: Metric,
) -> Option<BestScore> {
    let mut best: Option<BestScore> = None;
    for c in candidates {
        let counts = confusion(c.support, truth, p);
        let entry = BestScore {
            score: score(counts, metric),
            tuning: c.tuning,
            counts,
            support_size: c.support.len(),
        };
        if best.as_ref().is_none_or(|b| entry.beats(b)) {
            best = Some(entry);
        }
    }
    best
}

/// Path point chosen for a requested subset size.
#[derive(Debug, Clone, PartialEq)]
pub struct SizeMatch {
    pub result: SelectionResult,
    pub requested: usize,
    pub realized: usize,
    pub grid_index: usize,
}

/// The grid point whose support size is `k`, else the one nearest to `k`;
/// ties go to the sparser side, then to the larger λ. `None` for an empty
/// path.
pub fn tune_to_subset_size(path: &RegularizationPath, k: usize, method: Method) -> Option<SizeMatch> {
    let key = |g: usize| {
        let size = path.supports[g].len();
        (size.abs_diff(k), size)
    };
    // lambdas descend, so the first minimizer has the largest λ
    let g = (0..path.len()).min_by(|&a, &b| key(a).cmp(&key(b)).then(a.cmp(&b)))?;
    let coefficients = path.coefficient_vector(g);
    let mut result = SelectionResult::new(
        method,
        coefficients,
        TuningRecord::Penalty {
            alpha: path.alpha,
            lambda: path.lambdas[g],
        },
    );
    result.support = path.supports[g].clone();
    Some(SizeMatch {
        realized: result.support.len(),
        result,
        requested: k,
        grid_index: g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_with_sizes(sizes: &[usize]) -> RegularizationPath {
        let g = sizes.len();
        let p = 30;
        let supports: Vec<SupportSet> = sizes.iter().map(|&s| SupportSet::new(0..s)).collect();
        RegularizationPath {
            alpha: 1.0,
            lambdas: (0..g).map(|i| 100.0 / (i + 1) as f64).collect(),
            coefficients: supports
                .iter()
                .map(|s| s.indices().iter().map(|&j| (j, 1.0)).collect())
                .collect(),
            supports,
            converged: vec![true; g],
            p,
            work: 0,
        }
    }

    #[test]
    fn exact_subset_size_is_found() {
        let sizes: Vec<usize> = (0..=20).collect();
        let path = path_with_sizes(&sizes);
        let m = tune_to_subset_size(&path, 10, Method::Lasso).unwrap();
        assert_eq!((m.realized, m.requested, m.grid_index), (10, 10, 10));
    }

    #[test]
    fn gap_in_sizes_prefers_sparser_side() {
        let path = path_with_sizes(&[0, 2, 5, 8, 12, 14]);
        let m = tune_to_subset_size(&path, 10, Method::Enet).unwrap();
        assert_eq!(m.realized, 8);
        assert_eq!(m.result.tuning.lambda(), Some(path.lambdas[3]));
    }

    #[test]
    fn repeated_sizes_take_the_largest_lambda() {
        let path = path_with_sizes(&[0, 3, 3, 3, 5]);
        assert_eq!(tune_to_subset_size(&path, 3, Method::Lasso).unwrap().grid_index, 1);
    }

    #[test]
    fn best_possible_basics() {
        let truth = SupportSet::new(0..10);
        let path = path_with_sizes(&[0, 5, 10, 15]);
        let best = best_possible(Candidate::from_path(&path), &truth, 30, Metric::F1).unwrap();
        assert_eq!(best.score.value, 1.0);
        assert_eq!(best.support_size, 10);

        let empty = path_with_sizes(&[0, 0]);
        let best = best_possible(Candidate::from_path(&empty), &truth, 30, Metric::F1).unwrap();
        assert_eq!(best.score.value, 0.0);
        assert!(best_possible(std::iter::empty(), &truth, 30, Metric::F1).is_none());
    }

    #[test]
    fn equal_scores_prefer_sparser_then_tuning_order() {
        let truth = SupportSet::new(0..4);
        // {0,1} and {0,1,2,3,4,5,6,7} tie at F1 = 2/3
        let a = SupportSet::new([0, 1]);
        let b = SupportSet::new(0..8);
        let cands = [
            Candidate {
                support: &b,
                tuning: TuningRecord::SubsetSize(8),
            },
            Candidate {
                support: &a,
                tuning: TuningRecord::SubsetSize(5),
            },
            Candidate {
                support: &a,
                tuning: TuningRecord::SubsetSize(2),
            },
        ];
        let best = best_possible(cands, &truth, 20, Metric::F1).unwrap();
        assert_eq!(best.tuning, TuningRecord::SubsetSize(2));
    }
}
