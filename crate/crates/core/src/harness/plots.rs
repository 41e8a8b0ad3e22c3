//! Long-format plot data derived from a raw CSV.
//!
//! - `boxplot`: quantiles of each best-possible score per scenario, τ,
//!   method (and α for the per-α ENET optima).
//! - `per-k`: F1, true-positive count and realized size per requested
//!   subset size.
//!
//! Cells that are missing or failed in the raw data are listed in a
//! `.missing.csv` sidecar next to the figure file.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::record::{fmt_g10, RecordKind, ResultRecord, BEST_METRICS};
use super::summary::{Describe, DESCRIBE_HEADER};
use crate::error::{invalid, Error, Result};
use crate::model::Method;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Boxplot,
    PerK,
}

impl Figure {
    pub const ALL: [Figure; 2] = [Figure::Boxplot, Figure::PerK];

    pub fn as_str(self) -> &'static str {
        match self {
            Figure::Boxplot => "boxplot",
            Figure::PerK => "per-k",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown figure `{s}` (expected boxplot or per-k)")))
    }
}

/// τ encoded in a scenario id as a trailing `-tau<value>`.
pub fn tau_of(scenario_id: &str) -> Option<f64> {
    scenario_id.rsplit_once("-tau").and_then(|(_, t)| t.parse().ok())
}

/// A cell absent from, or failed in, the raw data.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MissingCell {
    pub scenario_id: String,
    pub replication: u64,
    pub method: Method,
    pub detail: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub missing: Vec<MissingCell>,
}

fn alpha_str(a: Option<f64>) -> String {
    a.map(fmt_g10).unwrap_or_default()
}

type GroupKey = (String, Method, Option<u64>);

fn alpha_key(a: Option<f64>) -> Option<u64> {
    a.map(f64::to_bits)
}

fn sorted_keys<V>(map: BTreeMap<GroupKey, V>) -> Vec<(GroupKey, V)> {
    let mut v: Vec<_> = map.into_iter().collect();
    v.sort_by(|((s1, m1, a1), _), ((s2, m2, a2), _)| {
        (s1, m1).cmp(&(s2, m2)).then(
            a1.map(f64::from_bits)
                .unwrap_or(f64::NEG_INFINITY)
                .total_cmp(&a2.map(f64::from_bits).unwrap_or(f64::NEG_INFINITY)),
        )
    });
    v
}

/// Cells expected from the replications and methods seen per scenario.
fn find_missing(records: &[ResultRecord], wanted: impl Fn(&ResultRecord) -> Option<String>) -> Vec<MissingCell> {
    let mut reps: BTreeMap<&str, BTreeSet<u64>> = BTreeMap::new();
    let mut methods: BTreeMap<&str, BTreeSet<Method>> = BTreeMap::new();
    let mut details: BTreeMap<(&str, Method), BTreeSet<String>> = BTreeMap::new();
    let mut seen: BTreeSet<(&str, u64, Method, String)> = BTreeSet::new();
    let mut out = BTreeSet::new();
    for r in records {
        reps.entry(&r.scenario_id).or_default().insert(r.replication);
        methods.entry(&r.scenario_id).or_default().insert(r.method);
        let Some(detail) = wanted(r) else { continue };
        details.entry((&r.scenario_id, r.method)).or_default().insert(detail.clone());
        if let Some(e) = &r.error {
            out.insert(MissingCell {
                scenario_id: r.scenario_id.clone(),
                replication: r.replication,
                method: r.method,
                detail: detail.clone(),
                reason: format!("error: {e}"),
            });
        }
        seen.insert((&r.scenario_id, r.replication, r.method, detail));
    }
    for (sid, rs) in &reps {
        for &m in &methods[sid] {
            let ds = details.get(&(*sid, m)).cloned().unwrap_or_else(|| BTreeSet::from([String::new()]));
            for &rep in rs {
                for d in &ds {
                    if !seen.contains(&(*sid, rep, m, d.clone())) {
                        out.insert(MissingCell {
                            scenario_id: sid.to_string(),
                            replication: rep,
                            method: m,
                            detail: d.clone(),
                            reason: "absent".into(),
                        });
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}

pub fn plot_data(records: &[ResultRecord], figure: Figure) -> PlotData {
    match figure {
        Figure::Boxplot => boxplot(records),
        Figure::PerK => per_k(records),
    }
}

fn boxplot(records: &[ResultRecord]) -> PlotData {
    let mut header: Vec<String> = ["scenario_id", "tau", "method", "alpha", "metric"].map(String::from).to_vec();
    header.extend(DESCRIBE_HEADER.map(String::from));
    let mut rows = Vec::new();
    for metric in BEST_METRICS {
        for per_alpha in [false, true] {
            let mut groups: BTreeMap<GroupKey, Vec<f64>> = BTreeMap::new();
            for r in records {
                let hit = match r.kind {
                    RecordKind::Best(m) => !per_alpha && m == metric,
                    RecordKind::AlphaBest(m) => per_alpha && m == metric,
                    RecordKind::FixedK => false,
                };
                if !hit {
                    continue;
                }
                let alpha = if per_alpha { r.alpha } else { None };
                let g = groups.entry((r.scenario_id.clone(), r.method, alpha_key(alpha))).or_default();
                if let Some(v) = r.metric(metric) {
                    g.push(v);
                }
            }
            for ((sid, method, alpha), values) in sorted_keys(groups) {
                let Some(d) = Describe::of(&values) else { continue };
                let mut row = vec![
                    sid.clone(),
                    tau_of(&sid).map(fmt_g10).unwrap_or_default(),
                    method.to_string(),
                    alpha_str(alpha.map(f64::from_bits)),
                    metric.to_string(),
                ];
                row.extend(d.fields());
                rows.push(row);
            }
        }
    }
    let missing = find_missing(records, |r| match r.kind {
        RecordKind::Best(m) => Some(format!("best_{m}")),
        _ => None,
    });
    PlotData { header, rows, missing }
}

fn per_k(records: &[ResultRecord]) -> PlotData {
    let header: Vec<String> = [
        "scenario_id",
        "tau",
        "method",
        "alpha",
        "k",
        "n",
        "mean_f1",
        "median_f1",
        "q1_f1",
        "q3_f1",
        "mean_tp",
        "median_tp",
        "mean_realized_size",
        "certified_fraction",
    ]
    .map(String::from)
    .to_vec();
    struct Acc {
        f1: Vec<f64>,
        tp: Vec<f64>,
        size: Vec<f64>,
        certified: usize,
    }
    let mut groups: BTreeMap<(GroupKey, usize), Acc> = BTreeMap::new();
    for r in records.iter().filter(|r| r.kind == RecordKind::FixedK) {
        let (Some(k), Some(s)) = (r.k, r.scores) else { continue };
        let alpha = if r.method == Method::Enet { r.alpha } else { None };
        let acc = groups
            .entry(((r.scenario_id.clone(), r.method, alpha_key(alpha)), k))
            .or_insert(Acc {
                f1: Vec::new(),
                tp: Vec::new(),
                size: Vec::new(),
                certified: 0,
            });
        acc.f1.push(s.f1);
        acc.tp.push(s.counts.tp as f64);
        acc.size.push(r.realized_support_size.unwrap_or(0) as f64);
        acc.certified += r.certified as usize;
    }
    let mut by_group: BTreeMap<GroupKey, Vec<(usize, Acc)>> = BTreeMap::new();
    for ((g, k), acc) in groups {
        by_group.entry(g).or_default().push((k, acc));
    }
    let mut rows = Vec::new();
    for ((sid, method, alpha), mut ks) in sorted_keys(by_group) {
        ks.sort_by_key(|e| e.0);
        for (k, acc) in ks {
            let f1 = Describe::of(&acc.f1).expect("non-empty group");
            let tp = Describe::of(&acc.tp).expect("non-empty group");
            let size = Describe::of(&acc.size).expect("non-empty group");
            rows.push(vec![
                sid.clone(),
                tau_of(&sid).map(fmt_g10).unwrap_or_default(),
                method.to_string(),
                alpha_str(alpha.map(f64::from_bits)),
                k.to_string(),
                f1.n.to_string(),
                fmt_g10(f1.mean),
                fmt_g10(f1.median),
                fmt_g10(f1.q1),
                fmt_g10(f1.q3),
                fmt_g10(tp.mean),
                fmt_g10(tp.median),
                fmt_g10(size.mean),
                fmt_g10(acc.certified as f64 / f1.n as f64),
            ]);
        }
    }
    let missing = find_missing(records, |r| match (r.kind, r.k) {
        (RecordKind::FixedK, Some(k)) => Some(match (r.method, r.alpha) {
            (Method::Enet, Some(a)) => format!("alpha={} k={k}", fmt_g10(a)),
            _ => format!("k={k}"),
        }),
        _ => None,
    });
    PlotData { header, rows, missing }
}

fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `<dir>/plot_<figure>.csv` and its `.missing.csv` sidecar; returns
/// both paths.
pub fn emit_plot_data(records: &[ResultRecord], figure: Figure, dir: impl AsRef<Path>) -> Result<(PathBuf, PathBuf)> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let data = plot_data(records, figure);
    let main = dir.join(format!("plot_{figure}.csv"));
    let side = dir.join(format!("plot_{figure}.missing.csv"));
    write_rows(&main, &data.header, &data.rows)?;
    let header: Vec<String> = ["scenario_id", "replication", "method", "cell", "reason"].map(String::from).to_vec();
    let rows: Vec<Vec<String>> = data
        .missing
        .iter()
        .map(|m| {
            vec![
                m.scenario_id.clone(),
                m.replication.to_string(),
                m.method.to_string(),
                m.detail.clone(),
                m.reason.clone(),
            ]
        })
        .collect();
    write_rows(&side, &header, &rows)?;
    Ok((main, side))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{ConfusionCounts, Metric};
    use crate::harness::record::Scores;
    use crate::model::TuningRecord;

    fn rec(rep: u64, method: Method, kind: RecordKind, k: usize, tp: u64) -> ResultRecord {
        let mut r = ResultRecord::new("low-identity-tau0.42", rep, method, kind).with_tuning(TuningRecord::SubsetSize(k));
        r.realized_support_size = Some(k);
        r.scores = Some(Scores::from_counts(ConfusionCounts::new(tp, k as u64 - tp, 10 - tp, 90 - k as u64 + tp)));
        r
    }

    #[test]
    fn tau_is_parsed_from_ids() {
        assert_eq!(tau_of("low-block0.70-consecutive-tau0.42"), Some(0.42));
        assert_eq!(tau_of("semi-high-tau3.52"), Some(3.52));
        assert_eq!(tau_of("custom"), None);
        assert!("violin".parse::<Figure>().is_err());
    }

    #[test]
    fn boxplot_and_missing_cells() {
        let records = vec![
            rec(0, Method::Bss, RecordKind::Best(Metric::F1), 10, 10),
            rec(1, Method::Bss, RecordKind::Best(Metric::F1), 10, 8),
            rec(0, Method::Fss, RecordKind::Best(Metric::F1), 10, 9),
            rec(1, Method::Fss, RecordKind::Best(Metric::F1), 10, 9).failed("boom"),
        ];
        let d = plot_data(&records, Figure::Boxplot);
        assert_eq!(d.rows.len(), 2);
        assert_eq!(d.rows[0][1], "0.42");
        assert_eq!(d.rows[0][2], "BSS");
        assert_eq!(d.rows[0][5], "2");
        assert_eq!(d.rows[1][5], "1");
        assert_eq!(d.missing.len(), 1);
        assert!(d.missing[0].reason.starts_with("error"));
    }

    #[test]
    fn per_k_curves_never_nan_and_absent_cells_listed() {
        let mut records = Vec::new();
        for rep in 0..3 {
            for k in 1..=15 {
                if rep == 2 && k == 7 {
                    continue;
                }
                records.push(rec(rep, Method::Fss, RecordKind::FixedK, k, k.min(10) as u64));
            }
        }
        let d = plot_data(&records, Figure::PerK);
        assert_eq!(d.rows.len(), 15);
        assert!(d.rows.iter().flatten().all(|c| c != "nan"));
        assert_eq!(d.missing.len(), 1);
        assert_eq!((d.missing[0].replication, d.missing[0].detail.as_str()), (2, "k=7"));
        let tmp = tempfile::tempdir().unwrap();
        let (main, side) = emit_plot_data(&records, Figure::PerK, tmp.path()).unwrap();
        assert!(main.exists() && side.exists());
    }
}
