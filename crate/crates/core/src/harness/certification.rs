//! BSS under several time limits on the same datasets.
//!
//! Every replication draws its dataset exactly as [`run_replication`] does,
//! and each subset size is solved once with all limits as checkpoints, so
//! the result at a limit equals a separate run with that budget.
//!
//! [`run_replication`]: super::replication::run_replication

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::experiment::worker_pool;
use super::record::{fmt_g10, Scores};
use super::replication::{bss_warm_options, replication_dataset, scores_of};
use super::summary::{Describe, DESCRIBE_HEADER};
use crate::datagen::{dataset_digest, ExpressionMatrix, ScenarioSpec};
use crate::error::{invalid, Result};
use crate::evaluation::{best_possible, Candidate, Metric};
use crate::model::{SupportSet, TuningRecord};
use crate::selectors::bss::{branch_and_bound_with, warm_start_with, BssContext};
use crate::selectors::forward_stepwise;
use crate::work::Meter;

pub const CERT_RAW_FILE: &str = "certification.csv";
pub const CERT_PANELS_FILE: &str = "certification_panels.csv";

/// BSS at one subset size under one time limit.
#[derive(Debug, Clone, PartialEq)]
pub struct CertRecord {
    pub scenario_id: String,
    pub replication: u64,
    pub limit_ms: u64,
    pub k: usize,
    pub support: SupportSet,
    pub truth: SupportSet,
    pub p: usize,
    pub scores: Scores,
    pub certified: bool,
    pub gap: f64,
    pub runtime_ms: u64,
    pub dataset_digest: String,
}

/// Solves every `k` of `config` for replications `0..reps` of `spec` under
/// each limit in `limits_ms`. Records are ordered by replication, limit, k.
pub fn certification_study(
    spec: &ScenarioSpec,
    limits_ms: &[u64],
    reps: usize,
    config: &ExperimentConfig,
    expression: Option<&ExpressionMatrix>,
) -> Result<Vec<CertRecord>> {
    let mut limits = limits_ms.to_vec();
    limits.sort_unstable();
    limits.dedup();
    if limits.is_empty() || limits[0] == 0 {
        return Err(invalid("time limits must be positive"));
    }
    let pool = worker_pool(config.workers)?;
    let per_rep: Vec<Result<Vec<CertRecord>>> = pool.install(|| {
        (0..reps as u64)
            .into_par_iter()
            .map(|rep| certify_replication(spec, rep, &limits, config, expression))
            .collect()
    });
    let mut out = Vec::new();
    for r in per_rep {
        out.extend(r?);
    }
    Ok(out)
}

fn certify_replication(
    spec: &ScenarioSpec,
    rep: u64,
    limits: &[u64],
    config: &ExperimentConfig,
    expression: Option<&ExpressionMatrix>,
) -> Result<Vec<CertRecord>> {
    let d = replication_dataset(spec, config.master_seed, rep, expression)?;
    let digest = dataset_digest(&d);
    let ctx = BssContext::new(&d);
    let fss = forward_stepwise(&d, config.k_max).ok();
    let mut prev: Option<SupportSet> = None;
    let mut by_k = Vec::new();
    for k in config.k_range() {
        let opts = bss_warm_options(config, &spec.scenario_id, rep, k, fss.as_ref(), prev.as_ref());
        let mut meter = Meter::new(config.budget_clock);
        let warm = warm_start_with(&ctx, k, &opts, &mut meter)?;
        prev = Some(warm.support.clone());
        by_k.push(branch_and_bound_with(&ctx, k, &warm.support, limits, &mut meter)?);
    }
    let mut out = Vec::new();
    for (li, &limit_ms) in limits.iter().enumerate() {
        for sols in &by_k {
            let sol = &sols[li];
            out.push(CertRecord {
                scenario_id: spec.scenario_id.clone(),
                replication: rep,
                limit_ms,
                k: sol.k,
                support: sol.support.clone(),
                truth: d.true_support().clone(),
                p: d.p(),
                scores: scores_of(&sol.support, d.true_support(), d.p()),
                certified: sol.certified,
                gap: sol.gap,
                runtime_ms: sol.elapsed_ms,
                dataset_digest: digest.clone(),
            });
        }
    }
    Ok(out)
}

/// Best-possible F1 over k of one (scenario, replication, limit) group,
/// with the certification flag of the winning subset size.
#[derive(Debug, Clone, PartialEq)]
pub struct CertBest {
    pub scenario_id: String,
    pub replication: u64,
    pub limit_ms: u64,
    pub k: usize,
    pub f1: f64,
    pub certified: bool,
}

pub fn best_by_limit(records: &[CertRecord]) -> Vec<CertBest> {
    let mut out = Vec::new();
    for group in records.chunk_by(|a, b| (&a.scenario_id, a.replication, a.limit_ms) == (&b.scenario_id, b.replication, b.limit_ms)) {
        let first = &group[0];
        let cands = group.iter().map(|r| Candidate {
            support: &r.support,
            tuning: TuningRecord::SubsetSize(r.k),
        });
        let best = best_possible(cands, &first.truth, first.p, Metric::F1).expect("non-empty group");
        let k = best.tuning.subset_size().expect("subset size");
        let winner = group.iter().find(|r| r.k == k).expect("winning record");
        out.push(CertBest {
            scenario_id: first.scenario_id.clone(),
            replication: first.replication,
            limit_ms: first.limit_ms,
            k,
            f1: best.score.value,
            certified: winner.certified,
        });
    }
    out
}

/// One row of the four-panel layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PanelRow {
    pub panel: &'static str,
    pub scenario_id: String,
    pub limit_ms: u64,
    pub k: Option<usize>,
    pub group: String,
    pub stats: Describe,
}

/// Panels: `A` best-possible F1 by limit; `B` the same split by whether the
/// winning subset size was certified, plus `B-certified` with the certified
/// fraction over all (replication, k) solves as its mean; `C` F1 by k;
/// `D` true-positive count by k.
pub fn certification_panels(records: &[CertRecord]) -> Vec<PanelRow> {
    let best = best_by_limit(records);
    let mut scenarios: Vec<&str> = records.iter().map(|r| r.scenario_id.as_str()).collect();
    scenarios.sort_unstable();
    scenarios.dedup();
    let mut limits: Vec<u64> = records.iter().map(|r| r.limit_ms).collect();
    limits.sort_unstable();
    limits.dedup();
    let mut ks: Vec<usize> = records.iter().map(|r| r.k).collect();
    ks.sort_unstable();
    ks.dedup();

    let mut rows = Vec::new();
    let mut push = |panel, sid: &str, limit_ms, k, group: &str, values: Vec<f64>| {
        if let Some(stats) = Describe::of(&values) {
            rows.push(PanelRow {
                panel,
                scenario_id: sid.to_string(),
                limit_ms,
                k,
                group: group.to_string(),
                stats,
            });
        }
    };
    for &sid in &scenarios {
        for &limit in &limits {
            let b: Vec<&CertBest> = best.iter().filter(|b| b.scenario_id == sid && b.limit_ms == limit).collect();
            push("A", sid, limit, None, "", b.iter().map(|b| b.f1).collect());
            for (group, flag) in [("certified", true), ("uncertified", false)] {
                push("B", sid, limit, None, group, b.iter().filter(|b| b.certified == flag).map(|b| b.f1).collect());
            }
            let solves: Vec<f64> = records
                .iter()
                .filter(|r| r.scenario_id == sid && r.limit_ms == limit)
                .map(|r| r.certified as u8 as f64)
                .collect();
            push("B-certified", sid, limit, None, "", solves);
            for &k in &ks {
                let at: Vec<&CertRecord> =
                    records.iter().filter(|r| r.scenario_id == sid && r.limit_ms == limit && r.k == k).collect();
                push("C", sid, limit, Some(k), "", at.iter().map(|r| r.scores.f1).collect());
                push("D", sid, limit, Some(k), "", at.iter().map(|r| r.scores.counts.tp as f64).collect());
            }
        }
    }
    rows
}

/// Mean best-possible F1 and certified fraction per limit (one scenario).
pub fn limit_overview(records: &[CertRecord]) -> Vec<(u64, f64, f64)> {
    let panels = certification_panels(records);
    let mut out: Vec<(u64, f64, f64)> = Vec::new();
    for p in panels.iter().filter(|p| p.panel == "A") {
        let cert = panels
            .iter()
            .find(|q| q.panel == "B-certified" && q.limit_ms == p.limit_ms && q.scenario_id == p.scenario_id)
            .map_or(0.0, |q| q.stats.mean);
        out.push((p.limit_ms, p.stats.mean, cert));
    }
    out
}

/// Writes the raw and panel CSV files into `dir`.
pub fn write_certification(dir: impl AsRef<Path>, records: &[CertRecord]) -> Result<(PathBuf, PathBuf)> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let raw = dir.join(CERT_RAW_FILE);
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(&raw)?;
    w.write_record([
        "scenario_id",
        "replication",
        "limit_ms",
        "k",
        "realized_support_size",
        "tp",
        "fp",
        "fn",
        "tn",
        "f1",
        "certified",
        "gap",
        "runtime_ms",
        "dataset_digest",
    ])?;
    for r in records {
        let c = r.scores.counts;
        w.write_record([
            r.scenario_id.clone(),
            r.replication.to_string(),
            r.limit_ms.to_string(),
            r.k.to_string(),
            r.support.len().to_string(),
            c.tp.to_string(),
            c.fp.to_string(),
            c.fn_.to_string(),
            c.tn.to_string(),
            fmt_g10(r.scores.f1),
            r.certified.to_string(),
            fmt_g10(r.gap),
            r.runtime_ms.to_string(),
            r.dataset_digest.clone(),
        ])?;
    }
    w.flush()?;

    let panels_path = dir.join(CERT_PANELS_FILE);
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(&panels_path)?;
    let mut header = vec!["panel", "scenario_id", "limit_ms", "k", "group"];
    header.extend(DESCRIBE_HEADER);
    w.write_record(&header)?;
    for p in certification_panels(records) {
        let mut row = vec![
            p.panel.to_string(),
            p.scenario_id,
            p.limit_ms.to_string(),
            p.k.map(|k| k.to_string()).unwrap_or_default(),
            p.group,
        ];
        row.extend(p.stats.fields());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok((raw, panels_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{CovarianceSpec, Placement};
    use crate::harness::config::Preset;
    use crate::harness::grid::synthetic_scenario;
    use crate::harness::record::RecordKind;
    use crate::harness::replication::run_replication;
    use crate::model::Method;
    use crate::work::BudgetClock;

    fn setup() -> (ScenarioSpec, ExperimentConfig) {
        let mut spec = synthetic_scenario("low", CovarianceSpec::block(0.7, 10), Placement::Consecutive, 0.42, 3);
        spec.n = 150;
        spec.p = 40;
        let config = ExperimentConfig {
            master_seed: 3,
            preset: Preset::Custom,
            scenarios: vec![spec.clone()],
            methods: vec![Method::Bss],
            enet_alphas: vec![0.5],
            lambda_grid_size: 10,
            k_min: 1,
            k_max: 12,
            bss_time_budget_ms: 1,
            budget_clock: BudgetClock::Work,
            warm_start_restarts: 4,
            output_dir: "unused".into(),
            workers: 2,
            expression_matrix: None,
        };
        (spec, config)
    }

    #[test]
    fn limits_share_datasets_and_certification_grows() {
        let (spec, config) = setup();
        let recs = certification_study(&spec, &[20, 2, 200], 3, &config, None).unwrap();
        assert_eq!(recs.len(), 3 * 3 * 12);
        for rep in 0..3 {
            let digests: Vec<_> = recs.iter().filter(|r| r.replication == rep).map(|r| &r.dataset_digest).collect();
            assert!(digests.windows(2).all(|w| w[0] == w[1]));
        }
        let overview = limit_overview(&recs);
        assert_eq!(overview.iter().map(|o| o.0).collect::<Vec<_>>(), [2, 20, 200]);
        assert!(overview.windows(2).all(|w| w[0].2 <= w[1].2));
        let tmp = tempfile::tempdir().unwrap();
        let (raw, panels) = write_certification(tmp.path(), &recs).unwrap();
        let text = std::fs::read_to_string(panels).unwrap();
        for panel in ["A,", "B,", "B-certified,", "C,", "D,"] {
            assert!(text.lines().any(|l| l.starts_with(panel)), "panel {panel}");
        }
        assert_eq!(std::fs::read_to_string(raw).unwrap().lines().count(), 1 + recs.len());
    }

    #[test]
    fn each_limit_equals_a_separate_run() {
        let (spec, mut config) = setup();
        let recs = certification_study(&spec, &[2, 20], 2, &config, None).unwrap();
        for limit in [2, 20] {
            config.bss_time_budget_ms = limit;
            for rep in 0..2 {
                let out = run_replication(&spec, rep, &config, None);
                for r in out.records.iter().filter(|r| r.kind == RecordKind::FixedK) {
                    let c = recs
                        .iter()
                        .find(|c| c.replication == rep && c.limit_ms == limit && Some(c.k) == r.k)
                        .unwrap();
                    assert_eq!(Some(c.scores), r.scores);
                    assert_eq!((c.certified, c.gap), (r.certified, r.gap));
                }
            }
        }
    }
}
