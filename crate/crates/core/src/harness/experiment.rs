//! Running a whole experiment: task dispatch, streaming output, final files.
//!
//! Files written to the output directory:
//!
//! - `raw.partial.csv`, `manifest.partial.csv`: appended and flushed while
//!   the run is in progress; removed once the final files exist.
//! - `raw.csv`: every record, in canonical sort order.
//! - `manifest.csv`: one row per (scenario, replication) cell with its state.
//! - `summary.csv`: distributions of the best-possible scores.
//! - `timings.csv`: wall-clock timings per solver phase.
//!
//! All but `timings.csv` are byte-identical across runs and worker counts
//! when the work clock meters the BSS budget.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::record::{fmt_g10, load_raw_csv, sort_records, write_raw_csv, RawWriter, ResultRecord};
use super::replication::{run_replication_with, TimingRow};
use super::summary::{summarize, write_summary_csv, SummaryRow};
use crate::datagen::{load_expression_matrix, Design, ExpressionMatrix};
use crate::error::{invalid, Result};

pub const RAW_FILE: &str = "raw.csv";
pub const RAW_PARTIAL_FILE: &str = "raw.partial.csv";
pub const MANIFEST_FILE: &str = "manifest.csv";
pub const MANIFEST_PARTIAL_FILE: &str = "manifest.partial.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TIMINGS_FILE: &str = "timings.csv";

#[derive(Debug, Clone, PartialEq)]
pub enum CellState {
    Complete,
    /// The task panicked; records produced before the panic are kept.
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellStatus {
    pub scenario_id: String,
    pub replication: u64,
    pub records: usize,
    pub state: CellState,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub output_dir: PathBuf,
    pub records: Vec<ResultRecord>,
    pub cells: Vec<CellStatus>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentOutput {
    pub fn raw_path(&self) -> PathBuf {
        self.output_dir.join(RAW_FILE)
    }
}

/// Expression matrix needed by the semi-synthetic scenarios, if any.
pub fn load_inputs(config: &ExperimentConfig) -> Result<Option<ExpressionMatrix>> {
    let semi = config.scenarios.iter().any(|s| matches!(s.design, Design::SemiSynthetic));
    match (&config.expression_matrix, semi) {
        (Some(path), true) => Ok(Some(load_expression_matrix(path)?)),
        (None, true) => Err(invalid("semi-synthetic scenarios need an expression matrix")),
        (_, false) => Ok(None),
    }
}

/// Thread pool with `workers` threads.
pub fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))
}

pub(crate) fn panic_message(payload: &(dyn std::any::Any + Send)) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
        .replace(['\n', '\r'], " ")
}

struct Streams {
    raw: RawWriter<BufWriter<File>>,
    manifest: BufWriter<File>,
    timings: BufWriter<File>,
}

fn manifest_line(c: &CellStatus) -> String {
    let state = match &c.state {
        CellState::Complete => "complete".to_string(),
        CellState::Failed(msg) => format!("\"failed: {}\"", msg.replace('"', "'")),
    };
    format!("{},{},{},{}\n", csv_field(&c.scenario_id), c.replication, c.records, state)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

const MANIFEST_HEADER: &str = "scenario_id,replication,records,state\n";
const TIMINGS_HEADER: &str = "scenario_id,replication,method,alpha,k,phase,wall_ms,work_ms\n";

fn timing_line(t: &TimingRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{}\n",
        csv_field(&t.scenario_id),
        t.replication,
        t.method.map(|m| m.to_string()).unwrap_or_default(),
        t.alpha.map(fmt_g10).unwrap_or_default(),
        t.k.map(|k| k.to_string()).unwrap_or_default(),
        t.phase,
        t.wall_ms,
        t.work_ms
    )
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Runs every (scenario, replication) cell of `config` and writes the
/// output files. A panicking cell is recorded as failed in the manifest and
/// does not stop the others.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    let expression = load_inputs(config)?;
    let tasks: Vec<(usize, u64)> = config
        .scenarios
        .iter()
        .enumerate()
        .flat_map(|(i, s)| (0..s.replications as u64).map(move |r| (i, r)))
        .collect();

    let streams = Mutex::new(Streams {
        raw: RawWriter::new(create(&dir.join(RAW_PARTIAL_FILE))?)?,
        manifest: create(&dir.join(MANIFEST_PARTIAL_FILE))?,
        timings: create(&dir.join(TIMINGS_FILE))?,
    });
    {
        let mut s = streams.lock().expect("stream lock");
        s.manifest.write_all(MANIFEST_HEADER.as_bytes())?;
        s.manifest.flush()?;
        s.timings.write_all(TIMINGS_HEADER.as_bytes())?;
    }
    let io_error: Mutex<Option<std::io::Error>> = Mutex::new(None);
    let note_io = |r: std::result::Result<(), std::io::Error>| {
        if let Err(e) = r {
            io_error.lock().expect("error lock").get_or_insert(e);
        }
    };

    let pool = worker_pool(config.workers)?;
    let results: Vec<(Vec<ResultRecord>, CellStatus)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(i, rep)| {
                let spec = &config.scenarios[i];
                let mut produced: Vec<ResultRecord> = Vec::new();
                let outcome = catch_unwind(AssertUnwindSafe(|| {
                    let mut sink = |r: &ResultRecord| {
                        produced.push(r.clone());
                        let mut s = streams.lock().expect("stream lock");
                        note_io(s.raw.write(r).map_err(|e| std::io::Error::other(e.to_string())));
                    };
                    run_replication_with(spec, rep, config, expression.as_ref(), &mut sink).timings
                }));
                let state = match outcome {
                    Ok(timings) => {
                        let mut s = streams.lock().expect("stream lock");
                        for t in &timings {
                            note_io(s.timings.write_all(timing_line(t).as_bytes()));
                        }
                        note_io(s.timings.flush());
                        CellState::Complete
                    }
                    Err(payload) => CellState::Failed(panic_message(payload.as_ref())),
                };
                let cell = CellStatus {
                    scenario_id: spec.scenario_id.clone(),
                    replication: rep,
                    records: produced.len(),
                    state,
                };
                let mut s = streams.lock().expect("stream lock");
                note_io(s.manifest.write_all(manifest_line(&cell).as_bytes()));
                note_io(s.manifest.flush());
                (produced, cell)
            })
            .collect()
    });
    if let Some(e) = io_error.into_inner().expect("error lock") {
        return Err(e.into());
    }
    let mut streams = streams.into_inner().expect("stream lock");
    streams.timings.flush()?;
    drop(streams);

    let mut records = Vec::new();
    let mut cells = Vec::with_capacity(results.len());
    for (r, c) in results {
        records.extend(r);
        cells.push(c);
    }
    sort_records(&mut records);
    cells.sort_by(|a, b| (&a.scenario_id, a.replication).cmp(&(&b.scenario_id, b.replication)));

    write_raw_csv(dir.join(RAW_FILE), &records)?;
    let mut manifest = create(&dir.join(MANIFEST_FILE))?;
    manifest.write_all(MANIFEST_HEADER.as_bytes())?;
    for c in &cells {
        manifest.write_all(manifest_line(c).as_bytes())?;
    }
    manifest.flush()?;
    // summarize what the raw file holds, so `summarize --raw` reproduces it
    let summary = summarize(&load_raw_csv(dir.join(RAW_FILE))?);
    write_summary_csv(dir.join(SUMMARY_FILE), &summary)?;
    std::fs::remove_file(dir.join(RAW_PARTIAL_FILE))?;
    std::fs::remove_file(dir.join(MANIFEST_PARTIAL_FILE))?;

    Ok(ExperimentOutput {
        output_dir: dir,
        records,
        cells,
        summary,
    })
}
