use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use varsel::datagen::{build_semisynthetic, load_expression_matrix, sample_dataset, Design};
use varsel::harness::certification::{limit_overview, CertRecord};
use varsel::harness::experiment::load_inputs;
use varsel::harness::summary::{render_summary, write_summary_csv};
use varsel::harness::{
    certification_study, emit_plot_data, load_raw_csv, run_experiment, summarize, write_certification,
    ExperimentConfig, Figure, Preset, ScenarioFile,
};
use varsel::Dataset;

#[derive(Parser)]
#[command(name = "varsel", version, about = "Variable selection simulation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    SyntheticFull,
    Semisynthetic,
    Desk,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Preset {
        match p {
            PresetArg::SyntheticFull => Preset::SyntheticFull,
            PresetArg::Semisynthetic => Preset::SemiSynthetic,
            PresetArg::Desk => Preset::Desk,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write raw, manifest and summary files.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        preset: Option<PresetArg>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve BSS under several time limits on the same datasets.
    Certify {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated durations, e.g. `1s,10s,60s`.
        #[arg(long, value_delimiter = ',', value_parser = parse_limit)]
        limits: Vec<Duration>,
        #[arg(long, value_enum)]
        preset: Option<PresetArg>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize the best-possible scores of a raw CSV.
    Summarize {
        #[arg(long)]
        raw: PathBuf,
        /// Summary CSV to write; defaults to `summary.csv` next to the raw file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write long-format plot data (`boxplot` or `per-k`).
    Plots {
        #[arg(long)]
        raw: PathBuf,
        #[arg(long)]
        figure: String,
        /// Output directory; defaults to the raw file's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw one dataset from a scenario file and dump it as CSV.
    GenData {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_limit(s: &str) -> std::result::Result<Duration, String> {
    humantime::parse_duration(s.trim()).map_err(|e| format!("bad time limit `{s}`: {e}"))
}

fn load_config(path: &Path, preset: Option<PresetArg>, workers: Option<usize>, out: Option<PathBuf>) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(path, preset.map(Preset::from))
        .with_context(|| format!("reading config {}", path.display()))?;
    if let Some(w) = workers {
        if w == 0 {
            bail!("--workers must be at least 1");
        }
        config.workers = w;
    }
    if let Some(o) = out {
        config.output_dir = o;
    }
    Ok(config)
}

fn parent_dir(path: &Path) -> PathBuf {
    path.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

fn run(config: ExperimentConfig) -> Result<()> {
    let cells: usize = config.scenarios.iter().map(|s| s.replications).sum();
    eprintln!(
        "running {} scenarios, {cells} cells on {} workers into {}",
        config.scenarios.len(),
        config.workers,
        config.output_dir.display()
    );
    let out = run_experiment(&config)?;
    let failed = out.cells.iter().filter(|c| c.state != varsel::harness::experiment::CellState::Complete).count();
    render_summary(&out.summary, &mut std::io::stdout().lock())?;
    eprintln!("wrote {} records to {}", out.records.len(), out.raw_path().display());
    if failed > 0 {
        eprintln!("{failed} cells failed; see the manifest");
    }
    Ok(())
}

fn certify(config: ExperimentConfig, limits: &[Duration]) -> Result<()> {
    if limits.is_empty() {
        bail!("--limits needs at least one duration");
    }
    let limits_ms: Vec<u64> = limits.iter().map(|d| d.as_millis() as u64).collect();
    let expression = load_inputs(&config)?;
    let mut all: Vec<CertRecord> = Vec::new();
    for spec in &config.scenarios {
        eprintln!("certifying {} ({} replications)", spec.scenario_id, spec.replications);
        let recs = certification_study(spec, &limits_ms, spec.replications, &config, expression.as_ref())?;
        for (limit, mean_f1, certified) in limit_overview(&recs) {
            println!("{:<42} limit {limit:>8} ms  mean best F1 {mean_f1:.4}  certified {certified:.3}", spec.scenario_id);
        }
        all.extend(recs);
    }
    let (raw, panels) = write_certification(&config.output_dir, &all)?;
    eprintln!("wrote {} and {}", raw.display(), panels.display());
    Ok(())
}

fn write_dataset(d: &Dataset, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    let header: Vec<String> = std::iter::once("y".to_string()).chain((1..=d.p()).map(|j| format!("x{j}"))).collect();
    writeln!(w, "{}", header.join(","))?;
    for i in 0..d.n() {
        write!(w, "{}", d.y()[i])?;
        for j in 0..d.p() {
            write!(w, ",{}", d.x()[(i, j)])?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn gen_data(spec_path: &Path, seed: u64, out: &Path) -> Result<()> {
    let file = ScenarioFile::load(spec_path).with_context(|| format!("reading scenario {}", spec_path.display()))?;
    let spec = &file.spec;
    let d = match spec.design {
        Design::Synthetic { .. } => sample_dataset(spec, seed)?,
        Design::SemiSynthetic => {
            let path = file.expression_matrix.as_ref().expect("validated");
            let m = load_expression_matrix(path).with_context(|| format!("reading {}", path.display()))?;
            build_semisynthetic(&m, spec.p, spec.n, spec.tau, seed, &spec.scenario_id)?
        }
    };
    write_dataset(&d, out)?;
    println!("scenario: {}", spec.scenario_id);
    println!("n = {}, p = {}, sigma2 = {}", d.n(), d.p(), d.sigma2());
    println!("true support: {}", d.true_support());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            preset,
            workers,
            out,
        } => run(load_config(&config, preset, workers, out)?),
        Command::Certify {
            config,
            limits,
            preset,
            workers,
            out,
        } => certify(load_config(&config, preset, workers, out)?, &limits),
        Command::Summarize { raw, out } => {
            let records = load_raw_csv(&raw).with_context(|| format!("reading {}", raw.display()))?;
            let rows = summarize(&records);
            let out = out.unwrap_or_else(|| parent_dir(&raw).join("summary.csv"));
            write_summary_csv(&out, &rows)?;
            render_summary(&rows, &mut std::io::stdout().lock())?;
            eprintln!("wrote {}", out.display());
            Ok(())
        }
        Command::Plots { raw, figure, out } => {
            let figure: Figure = figure.parse()?;
            let records = load_raw_csv(&raw).with_context(|| format!("reading {}", raw.display()))?;
            let dir = out.unwrap_or_else(|| parent_dir(&raw));
            let (main, side) = emit_plot_data(&records, figure, &dir)?;
            eprintln!("wrote {} and {}", main.display(), side.display());
            Ok(())
        }
        Command::GenData { spec, seed, out } => gen_data(&spec, seed, &out),
    }
}
