//! Summary statistics of raw results.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use super::record::{fmt_g10, RecordKind, ResultRecord};
use crate::error::Result;
use crate::evaluation::Metric;
use crate::model::Method;

/// Quantile with linear interpolation between order statistics (the
/// "type 7" definition). `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Describe {
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Describe {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Describe> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Describe {
            n: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            min: v[0],
            q1: quantile(&v, 0.25),
            median: quantile(&v, 0.5),
            q3: quantile(&v, 0.75),
            max: v[v.len() - 1],
        })
    }

    pub fn fields(&self) -> [String; 7] {
        [
            self.n.to_string(),
            fmt_g10(self.mean),
            fmt_g10(self.min),
            fmt_g10(self.q1),
            fmt_g10(self.median),
            fmt_g10(self.q3),
            fmt_g10(self.max),
        ]
    }
}

pub const DESCRIBE_HEADER: [&str; 7] = ["n", "mean", "min", "q1", "median", "q3", "max"];

/// One summary row: the distribution over replications of a best-possible
/// score.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scenario_id: String,
    pub method: Method,
    /// Set for the per-α ENET optima.
    pub alpha: Option<f64>,
    pub metric: Metric,
    pub stats: Describe,
    pub failed: usize,
    pub certified_fraction: f64,
}

type Key = (String, Method, Option<u64>, Metric);

/// Groups the best-possible rows by (scenario, method, α, metric).
pub fn summarize(records: &[ResultRecord]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<Key, (Vec<f64>, usize, usize)> = BTreeMap::new();
    for r in records {
        let (metric, alpha) = match r.kind {
            RecordKind::Best(m) => (m, None),
            RecordKind::AlphaBest(m) => (m, r.alpha),
            RecordKind::FixedK => continue,
        };
        let key = (r.scenario_id.clone(), r.method, alpha.map(f64::to_bits), metric);
        let g = groups.entry(key).or_default();
        match r.metric(metric) {
            Some(v) => {
                g.0.push(v);
                g.2 += r.certified as usize;
            }
            None => g.1 += 1,
        }
    }
    let mut rows: Vec<SummaryRow> = groups
        .into_iter()
        .filter_map(|((scenario_id, method, alpha, metric), (values, failed, certified))| {
            let stats = Describe::of(&values)?;
            Some(SummaryRow {
                scenario_id,
                method,
                alpha: alpha.map(f64::from_bits),
                metric,
                certified_fraction: certified as f64 / stats.n as f64,
                stats,
                failed,
            })
        })
        .collect();
    // bit order is not numeric order for α; fix it
    rows.sort_by(|a, b| {
        (&a.scenario_id, a.method, a.metric)
            .cmp(&(&b.scenario_id, b.method, b.metric))
            .then(a.alpha.unwrap_or(f64::NEG_INFINITY).total_cmp(&b.alpha.unwrap_or(f64::NEG_INFINITY)))
    });
    rows
}

pub fn write_summary_csv(path: impl AsRef<Path>, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    let mut header = vec!["scenario_id", "method", "alpha", "metric"];
    header.extend(DESCRIBE_HEADER);
    header.extend(["failed", "certified_fraction"]);
    w.write_record(&header)?;
    for r in rows {
        let mut fields = vec![
            r.scenario_id.clone(),
            r.method.to_string(),
            r.alpha.map(fmt_g10).unwrap_or_default(),
            r.metric.to_string(),
        ];
        fields.extend(r.stats.fields());
        fields.push(r.failed.to_string());
        fields.push(fmt_g10(r.certified_fraction));
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

/// Aligned text rendering for terminals.
pub fn render_summary(rows: &[SummaryRow], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(
        out,
        "{:<42} {:<6} {:>5} {:<4} {:>5} {:>8} {:>8} {:>8} {:>8}",
        "scenario", "method", "alpha", "metric", "n", "mean", "q1", "median", "q3"
    )?;
    for r in rows {
        writeln!(
            out,
            "{:<42} {:<6} {:>5} {:<4} {:>5} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            r.scenario_id,
            r.method.as_str(),
            r.alpha.map(|a| format!("{a}")).unwrap_or_default(),
            r.metric.as_str(),
            r.stats.n,
            r.stats.mean,
            r.stats.q1,
            r.stats.median,
            r.stats.q3,
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::ConfusionCounts;
    use crate::harness::record::Scores;
    use crate::model::TuningRecord;
    use proptest::prelude::*;

    #[test]
    fn type7_quantiles() {
        // numpy.percentile([1, 2, 3, 4], [25, 50, 75]) = 1.75, 2.5, 3.25
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.75), 3.25);
        assert_eq!(quantile(&[7.0], 0.3), 7.0);
        let d = Describe::of(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!((d.min, d.median, d.max, d.mean), (1.0, 2.0, 3.0, 2.0));
        assert!(Describe::of(&[]).is_none());
    }

    #[test]
    fn groups_best_rows_and_counts_failures() {
        let mk = |rep, tp, kind| {
            let mut r = ResultRecord::new("s", rep, Method::Fss, kind).with_tuning(TuningRecord::SubsetSize(10));
            r.scores = Some(Scores::from_counts(ConfusionCounts::new(tp, 10 - tp, 10 - tp, 80 + tp)));
            r
        };
        let records = vec![
            mk(0, 10, RecordKind::Best(Metric::F1)),
            mk(1, 5, RecordKind::Best(Metric::F1)),
            mk(2, 5, RecordKind::Best(Metric::F1)).failed("x"),
            mk(0, 10, RecordKind::FixedK),
        ];
        let rows = summarize(&records);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].stats.n, 2);
        assert_eq!(rows[0].failed, 1);
        assert_eq!(rows[0].stats.mean, 0.75);
    }

    proptest! {
        #[test]
        fn quantiles_are_ordered(mut v in proptest::collection::vec(-1e6f64..1e6, 1..50)) {
            v.sort_by(f64::total_cmp);
            let d = Describe::of(&v).unwrap();
            prop_assert!(d.min <= d.q1 && d.q1 <= d.median && d.median <= d.q3 && d.q3 <= d.max);
            prop_assert!(d.min <= d.mean + 1e-9 && d.mean <= d.max + 1e-9);
        }
    }
}
