//! One (scenario, replication) task: draw the dataset, run every method,
//! evaluate.

use std::time::Instant;

use super::config::ExperimentConfig;
use super::record::{RecordKind, ResultRecord, Scores, BEST_METRICS};
use crate::datagen::{build_semisynthetic, child_seed, sample_dataset, Design, ExpressionMatrix, ScenarioSpec};
use crate::error::{invalid, Result};
use crate::evaluation::{best_possible, confusion, tune_to_subset_size, BestScore, Candidate};
use crate::model::{Dataset, Method, SelectionResult, SupportSet, TuningRecord};
use crate::selectors::bss::{branch_and_bound_with, warm_start_with, BssContext, BssSolution, WarmStartOptions};
use crate::selectors::{enet_path, forward_stepwise, lasso_path, FssTrace, RegularizationPath};
use crate::work::{BudgetClock, Meter, WORK_UNITS_PER_MS};

/// Wall-clock and work-clock cost of one solver phase. Wall times vary from
/// run to run, so they go to a sidecar file rather than the raw CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub scenario_id: String,
    pub replication: u64,
    pub method: Option<Method>,
    pub alpha: Option<f64>,
    pub k: Option<usize>,
    pub phase: &'static str,
    pub wall_ms: u64,
    pub work_ms: u64,
}

#[derive(Debug, Clone, Default)]
pub struct ReplicationOutput {
    pub records: Vec<ResultRecord>,
    pub timings: Vec<TimingRow>,
}

/// Draws the dataset of replication `rep` from its child seed.
pub fn replication_dataset(
    spec: &ScenarioSpec,
    master_seed: u64,
    rep: u64,
    expression: Option<&ExpressionMatrix>,
) -> Result<Dataset> {
    let seed = child_seed(master_seed, &spec.scenario_id, rep);
    match spec.design {
        Design::Synthetic { .. } => sample_dataset(spec, seed),
        Design::SemiSynthetic => {
            let m = expression.ok_or_else(|| invalid("semi-synthetic scenario without an expression matrix"))?;
            build_semisynthetic(m, spec.p, spec.n, spec.tau, seed, &spec.scenario_id)
        }
    }
}

pub fn scores_of(support: &SupportSet, truth: &SupportSet, p: usize) -> Scores {
    Scores::from_counts(confusion(support, truth, p))
}

fn runtime_ms(clock: BudgetClock, work: u64, started: Instant) -> u64 {
    match clock {
        BudgetClock::Work => work / WORK_UNITS_PER_MS,
        BudgetClock::Wall => started.elapsed().as_millis() as u64,
    }
}

/// Seed of the random warm-start restarts for subset size `k`.
pub fn warm_start_seed(master_seed: u64, scenario_id: &str, rep: u64, k: usize) -> u64 {
    child_seed(child_seed(master_seed, scenario_id, rep), "bss-warm-start", k as u64)
}

/// Warm-start settings for subset size `k`. `prev` is the warm start found
/// for the previous subset size.
pub(crate) fn bss_warm_options(
    config: &ExperimentConfig,
    scenario_id: &str,
    rep: u64,
    k: usize,
    fss: Option<&FssTrace>,
    prev: Option<&SupportSet>,
) -> WarmStartOptions {
    WarmStartOptions {
        restarts: config.warm_start_restarts,
        seed: warm_start_seed(config.master_seed, scenario_id, rep, k),
        fss_init: Some(fss.and_then(|t| t.step(k)).map(|s| s.active.clone()).unwrap_or_default()),
        candidates: prev.into_iter().cloned().collect(),
        ..Default::default()
    }
}

struct Task<'a> {
    spec: &'a ScenarioSpec,
    rep: u64,
    config: &'a ExperimentConfig,
    out: ReplicationOutput,
    sink: &'a mut dyn FnMut(&ResultRecord),
}

impl Task<'_> {
    fn push(&mut self, r: ResultRecord) {
        (self.sink)(&r);
        self.out.records.push(r);
    }

    fn record(&self, method: Method, kind: RecordKind) -> ResultRecord {
        ResultRecord::new(&self.spec.scenario_id, self.rep, method, kind)
    }

    fn timing(&mut self, method: Option<Method>, alpha: Option<f64>, k: Option<usize>, phase: &'static str, wall: Instant, work: u64) {
        self.out.timings.push(TimingRow {
            scenario_id: self.spec.scenario_id.clone(),
            replication: self.rep,
            method,
            alpha,
            k,
            phase,
            wall_ms: wall.elapsed().as_millis() as u64,
            work_ms: work / WORK_UNITS_PER_MS,
        });
    }

    fn fail_all(&mut self, method: Method, err: &dyn std::fmt::Display) {
        for k in self.config.k_range() {
            let r = self.record(method, RecordKind::FixedK).with_tuning(TuningRecord::SubsetSize(k)).failed(err);
            self.push(r);
        }
        for m in BEST_METRICS {
            let r = self.record(method, RecordKind::Best(m)).failed(err);
            self.push(r);
        }
    }

    fn best_record(&self, method: Method, kind: RecordKind, best: &BestScore) -> ResultRecord {
        let mut r = self.record(method, kind).with_tuning(best.tuning);
        r.realized_support_size = Some(best.support_size);
        r.scores = Some(Scores::from_counts(best.counts));
        r
    }

    fn run_fss(&mut self, d: &Dataset, trace: &Result<FssTrace>, runtime: u64) {
        let trace = match trace {
            Ok(t) => t,
            Err(e) => return self.fail_all(Method::Fss, e),
        };
        let (truth, p) = (d.true_support(), d.p());
        for k in self.config.k_range() {
            let step = trace.step(k).expect("trace reaches k_max");
            let mut r = self.record(Method::Fss, RecordKind::FixedK).with_tuning(TuningRecord::SubsetSize(k));
            r.realized_support_size = Some(step.active.len());
            r.scores = Some(scores_of(&step.active, truth, p));
            r.runtime_ms = runtime;
            self.push(r);
        }
        let cands: Vec<Candidate> = Candidate::from_trace(trace)
            .filter(|c| self.config.k_range().contains(&c.tuning.subset_size().unwrap_or(0)))
            .collect();
        for m in BEST_METRICS {
            let best = best_possible(cands.iter().copied(), truth, p, m).expect("k range is not empty");
            let mut r = self.best_record(Method::Fss, RecordKind::Best(m), &best);
            r.runtime_ms = runtime;
            self.push(r);
        }
    }

    fn run_bss(&mut self, d: &Dataset, fss: Option<&FssTrace>) {
        let ctx = BssContext::new(d);
        let clock = self.config.budget_clock;
        let budget = self.config.bss_time_budget_ms;
        let mut prev: Option<SupportSet> = None;
        let mut results: Vec<SelectionResult> = Vec::new();
        let mut solutions: Vec<BssSolution> = Vec::new();
        let mut total = 0;
        for k in self.config.k_range() {
            let started = Instant::now();
            let mut meter = Meter::new(clock);
            let opts = bss_warm_options(self.config, &self.spec.scenario_id, self.rep, k, fss, prev.as_ref());
            let solved = warm_start_with(&ctx, k, &opts, &mut meter).and_then(|warm| {
                self.timing(Some(Method::Bss), None, Some(k), "bss_warm_start", started, meter.units());
                // the chain passes warm starts, not budget-dependent solutions,
                // so every budget sees the same starting points
                prev = Some(warm.support.clone());
                let search_started = Instant::now();
                let units_before = meter.units();
                let sol = branch_and_bound_with(&ctx, k, &warm.support, &[budget], &mut meter)?.remove(0);
                self.timing(Some(Method::Bss), None, Some(k), "bss_search", search_started, meter.units() - units_before);
                Ok(sol)
            });
            let runtime = runtime_ms(clock, meter.units(), started);
            total += runtime;
            let mut r = self.record(Method::Bss, RecordKind::FixedK).with_tuning(TuningRecord::SubsetSize(k));
            r.runtime_ms = runtime;
            match solved {
                Ok(sol) => {
                    r.realized_support_size = Some(sol.support.len());
                    r.scores = Some(scores_of(&sol.support, d.true_support(), d.p()));
                    r.certified = sol.certified;
                    r.gap = sol.gap;
                    let mut res = SelectionResult::new(Method::Bss, sol.coefficients.clone(), TuningRecord::SubsetSize(k));
                    res.support = sol.support.clone();
                    results.push(res);
                    solutions.push(sol);
                }
                Err(e) => r = r.failed(e),
            }
            self.push(r);
        }
        for m in BEST_METRICS {
            match best_possible(Candidate::from_results(&results), d.true_support(), d.p(), m) {
                Some(best) => {
                    let k = best.tuning.subset_size().expect("subset size");
                    let sol = solutions.iter().find(|s| s.k == k).expect("solution for k");
                    let mut r = self.best_record(Method::Bss, RecordKind::Best(m), &best);
                    r.certified = sol.certified;
                    r.gap = sol.gap;
                    r.runtime_ms = total;
                    self.push(r);
                }
                None => {
                    let r = self.record(Method::Bss, RecordKind::Best(m)).failed("no subset size solved");
                    self.push(r);
                }
            }
        }
    }

    fn fixed_k_rows(&mut self, method: Method, d: &Dataset, path: &RegularizationPath, runtime: u64) {
        for k in self.config.k_range() {
            let m = tune_to_subset_size(path, k, method).expect("path is not empty");
            let mut r = self.record(method, RecordKind::FixedK).with_tuning(m.result.tuning);
            r.k = Some(k);
            r.realized_support_size = Some(m.realized);
            r.scores = Some(scores_of(&m.result.support, d.true_support(), d.p()));
            r.converged = path.converged[m.grid_index];
            r.runtime_ms = runtime;
            self.push(r);
        }
    }

    fn path_best(&self, method: Method, kind: RecordKind, d: &Dataset, paths: &[(&RegularizationPath, u64)]) -> ResultRecord {
        let metric = match kind {
            RecordKind::Best(m) | RecordKind::AlphaBest(m) => m,
            RecordKind::FixedK => unreachable!("best rows only"),
        };
        let cands = paths.iter().flat_map(|(p, _)| Candidate::from_path(p));
        let best = best_possible(cands, d.true_support(), d.p(), metric).expect("paths are not empty");
        let mut r = self.best_record(method, kind, &best);
        let (alpha, lambda) = (best.tuning.alpha(), best.tuning.lambda());
        let (path, _) = paths.iter().find(|(p, _)| Some(p.alpha) == alpha).expect("winning path");
        let g = path.lambdas.iter().position(|&l| Some(l) == lambda).expect("winning grid point");
        r.converged = path.converged[g];
        r.runtime_ms = paths.iter().map(|(_, t)| t).sum();
        r
    }

    fn run_path(&mut self, d: &Dataset, alpha: f64) -> Result<(RegularizationPath, u64)> {
        let started = Instant::now();
        let g = self.config.lambda_grid_size;
        let path = if alpha == 1.0 { lasso_path(d, g)? } else { enet_path(d, alpha, g)? };
        let method = if alpha == 1.0 { Method::Lasso } else { Method::Enet };
        self.timing(Some(method), Some(alpha), None, "path", started, path.work);
        let runtime = runtime_ms(self.config.budget_clock, path.work, started);
        Ok((path, runtime))
    }

    fn run_lasso(&mut self, d: &Dataset) {
        match self.run_path(d, 1.0) {
            Err(e) => self.fail_all(Method::Lasso, &e),
            Ok((path, runtime)) => {
                self.fixed_k_rows(Method::Lasso, d, &path, runtime);
                for m in BEST_METRICS {
                    let r = self.path_best(Method::Lasso, RecordKind::Best(m), d, &[(&path, runtime)]);
                    self.push(r);
                }
            }
        }
    }

    fn run_enet(&mut self, d: &Dataset) {
        let mut paths = Vec::new();
        for &alpha in &self.config.enet_alphas {
            match self.run_path(d, alpha) {
                Ok(pr) => paths.push(pr),
                Err(e) => {
                    // one failed α invalidates the joint optimum
                    return self.fail_all(Method::Enet, &e);
                }
            }
        }
        for (path, runtime) in &paths {
            self.fixed_k_rows(Method::Enet, d, path, *runtime);
            for m in BEST_METRICS {
                let r = self.path_best(Method::Enet, RecordKind::AlphaBest(m), d, &[(path, *runtime)]);
                self.push(r);
            }
        }
        let all: Vec<(&RegularizationPath, u64)> = paths.iter().map(|(p, t)| (p, *t)).collect();
        for m in BEST_METRICS {
            let r = self.path_best(Method::Enet, RecordKind::Best(m), d, &all);
            self.push(r);
        }
    }
}

/// Runs every configured method on replication `rep` of `spec`. Failures
/// are reported in the records' status and never abort the task.
pub fn run_replication(
    spec: &ScenarioSpec,
    rep: u64,
    config: &ExperimentConfig,
    expression: Option<&ExpressionMatrix>,
) -> ReplicationOutput {
    run_replication_with(spec, rep, config, expression, &mut |_| {})
}

/// As [`run_replication`], handing each record to `sink` as soon as it is
/// produced.
pub fn run_replication_with(
    spec: &ScenarioSpec,
    rep: u64,
    config: &ExperimentConfig,
    expression: Option<&ExpressionMatrix>,
    sink: &mut dyn FnMut(&ResultRecord),
) -> ReplicationOutput {
    let mut task = Task {
        spec,
        rep,
        config,
        out: ReplicationOutput::default(),
        sink,
    };
    let started = Instant::now();
    let d = match replication_dataset(spec, config.master_seed, rep, expression) {
        Ok(d) => d,
        Err(e) => {
            for &m in &config.methods {
                task.fail_all(m, &e);
            }
            return task.out;
        }
    };
    task.timing(None, None, None, "dataset", started, 0);

    let wants = |m| config.methods.contains(&m);
    let fss = if wants(Method::Fss) || wants(Method::Bss) {
        let started = Instant::now();
        let trace = forward_stepwise(&d, config.k_max);
        let work = trace.as_ref().map_or(0, |t| t.work);
        task.timing(Some(Method::Fss), None, None, "fss_trace", started, work);
        Some((trace, runtime_ms(config.budget_clock, work, started)))
    } else {
        None
    };
    for &method in &config.methods {
        match method {
            Method::Fss => {
                let (trace, runtime) = fss.as_ref().expect("trace computed");
                task.run_fss(&d, trace, *runtime);
            }
            Method::Bss => {
                let trace = fss.as_ref().and_then(|(t, _)| t.as_ref().ok());
                task.run_bss(&d, trace);
            }
            Method::Lasso => task.run_lasso(&d),
            Method::Enet => task.run_enet(&d),
        }
    }
    task.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{CovarianceSpec, Placement};
    use crate::evaluation::Metric;
    use crate::harness::config::Preset;
    use crate::harness::grid::synthetic_scenario;

    fn small_config(methods: Vec<Method>) -> ExperimentConfig {
        ExperimentConfig {
            master_seed: 5,
            preset: Preset::Custom,
            scenarios: Vec::new(),
            methods,
            enet_alphas: vec![0.1, 0.5],
            lambda_grid_size: 50,
            k_min: 1,
            k_max: 12,
            bss_time_budget_ms: 200,
            budget_clock: BudgetClock::Work,
            warm_start_restarts: 5,
            output_dir: "out".into(),
            workers: 1,
            expression_matrix: None,
        }
    }

    fn small_spec(tau: f64) -> ScenarioSpec {
        let mut s = synthetic_scenario("low", CovarianceSpec::identity(), Placement::Consecutive, tau, 1);
        s.n = 200;
        s.p = 30;
        s
    }

    #[test]
    fn fss_only_has_one_row_per_k_and_best_rows() {
        let c = small_config(vec![Method::Fss]);
        let out = run_replication(&small_spec(2.0), 0, &c, None);
        assert!(out.records.iter().all(|r| r.method == Method::Fss && r.error.is_none()));
        assert_eq!(out.records.iter().filter(|r| r.kind == RecordKind::FixedK).count(), 12);
        assert_eq!(out.records.len(), 12 + 3);
    }

    #[test]
    fn same_inputs_same_records() {
        let c = small_config(Method::ALL.to_vec());
        let a = run_replication(&small_spec(1.0), 3, &c, None);
        let b = run_replication(&small_spec(1.0), 3, &c, None);
        assert_eq!(a.records, b.records);
        // per method: 12 fixed-k rows and 3 best rows; ENET adds per-alpha rows
        assert_eq!(a.records.len(), 3 * 15 + 2 * (12 + 3) + 3);
    }

    #[test]
    fn high_snr_identity_is_recovered_by_bss() {
        let c = small_config(vec![Method::Bss]);
        let out = run_replication(&small_spec(6.0), 1, &c, None);
        let best = out.records.iter().find(|r| r.kind == RecordKind::Best(Metric::F1)).unwrap();
        assert_eq!(best.metric(Metric::F1), Some(1.0));
        assert_eq!(best.k, Some(10));
        assert!(best.certified);
    }

    #[test]
    fn dataset_errors_become_error_rows() {
        let c = small_config(vec![Method::Lasso]);
        let mut spec = small_spec(1.0);
        spec.design = Design::SemiSynthetic;
        let out = run_replication(&spec, 0, &c, None);
        assert_eq!(out.records.len(), 15);
        assert!(out.records.iter().all(|r| r.error.is_some() && r.scores.is_none()));
    }
}
