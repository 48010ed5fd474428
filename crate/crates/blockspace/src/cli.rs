//! Command-line interface.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use blockspace_core::posterior::top_variable_genes;
use blockspace_core::selection::SelectionTable;
use blockspace_core::simulate::{generate_experiment, GroundTruth, ScenarioConfig};
use blockspace_core::{cer, ExpressionDataset};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::{load_fit_config, load_grid_config, load_scenario_config};
use crate::error::{CliError, Result};
use crate::io::{load_dataset, read_coords, read_labels, read_text, write_coords, write_labels, write_matrix, write_text};
use crate::parallel::{fit_parallel, select_parallel, thread_pool};
use crate::plot::write_plots;
use crate::report::{fingerprint, RunReport};

#[derive(Debug, Parser)]
#[command(name = "blockspace", version, about = "Spatially-aware co-clustering of expression matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset with known clusters.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit one model.
    Fit {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        coords: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit a grid of models and keep the one with the largest ICL.
    Select {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        coords: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rank rows of a block by posterior mean variance.
    Posterior {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        coords: PathBuf,
        /// One-based `k,r`; repeat for several blocks.
        #[arg(long = "block", required = true, value_parser = parse_block)]
        blocks: Vec<(usize, usize)>,
        #[arg(long, default_value_t = 5)]
        top: usize,
    },
    /// Clustering error rate between two labelings.
    Eval {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        est: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
    },
    /// Write the block table and spot map of a report.
    Plot {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        coords: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Axis {
    Rows,
    Cols,
}

fn parse_block(s: &str) -> std::result::Result<(usize, usize), String> {
    let (k, r) = s.split_once(',').ok_or_else(|| format!("expected `k,r`, got `{s}`"))?;
    let k: usize = k.trim().parse().map_err(|_| format!("bad row cluster `{k}`"))?;
    let r: usize = r.trim().parse().map_err(|_| format!("bad column cluster `{r}`"))?;
    if k == 0 || r == 0 {
        return Err(String::from("block indices are one-based"));
    }
    Ok((k, r))
}

/// Contents of `truth.json` written by `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub config: ScenarioConfig,
    pub truth: GroundTruth,
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialization");
    s.push('\n');
    s
}

fn simulate(config: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let mut cfg = load_scenario_config(config)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let (ds, truth) = generate_experiment(&cfg)?;
    create_dir(out)?;
    write_matrix(&ds, &out.join("matrix.csv"))?;
    write_coords(&ds, &out.join("coords.csv"))?;
    write_labels(&out.join("true_rows.csv"), ds.row_ids(), &truth.row_labels)?;
    write_labels(&out.join("true_cols.csv"), ds.col_ids(), &truth.col_labels)?;
    write_text(&out.join("truth.json"), &to_json(&TruthFile { config: cfg, truth }))
}

fn write_fit_outputs(report: &RunReport, out: &Path) -> Result<()> {
    report.save(&out.join("report.json"))?;
    write_labels(&out.join("rows.csv"), &report.row_ids, report.result.labels.rows())?;
    write_labels(&out.join("cols.csv"), &report.col_ids, report.result.labels.cols())
}

fn fit_cmd(matrix: &Path, coords: &Path, config: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let (spec, mut fit_cfg) = load_fit_config(config)?;
    if let Some(seed) = seed {
        fit_cfg.seed = seed;
    }
    let ds = load_dataset(matrix, coords)?;
    let inputs = fingerprint(&[matrix, coords, config])?;
    let clock = Instant::now();
    let result = thread_pool()?.install(|| fit_parallel(&ds, &spec, &fit_cfg))?;
    let report = RunReport::new(&ds, inputs, spec, fit_cfg, result, clock.elapsed().as_secs_f64());
    create_dir(out)?;
    write_fit_outputs(&report, out)
}

pub fn selection_csv(table: &SelectionTable) -> String {
    let mut s = String::from("row_clusters,col_clusters,kernel,best_loglik,icl,status\n");
    let opt = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
    for row in &table.rows {
        let status = match &row.status {
            blockspace_core::selection::FitStatus::Ok => String::from("ok"),
            blockspace_core::selection::FitStatus::Failed(m) => format!("\"failed: {}\"", m.replace('"', "'")),
        };
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.row_clusters,
            row.col_clusters,
            row.kernel.name(),
            opt(row.best_loglik),
            opt(row.icl),
            status
        ));
    }
    s
}

fn select_cmd(matrix: &Path, coords: &Path, grid_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let (grid, mut fit_cfg) = load_grid_config(grid_path)?;
    if let Some(seed) = seed {
        fit_cfg.seed = seed;
    }
    let ds = load_dataset(matrix, coords)?;
    let inputs = fingerprint(&[matrix, coords, grid_path])?;
    let clock = Instant::now();
    let (best, table) = thread_pool()?.install(|| select_parallel(&ds, &grid, &fit_cfg))?;
    let winner = table.argmax().map(|i| table.rows[i].index).unwrap_or(0);
    let report = RunReport::new(&ds, inputs, grid[winner].clone(), fit_cfg, best, clock.elapsed().as_secs_f64());
    create_dir(out)?;
    write_text(&out.join("selection.csv"), &selection_csv(&table))?;
    write_fit_outputs(&report, out)
}

fn check_ids(report: &RunReport, ds: &ExpressionDataset, path: &Path) -> Result<()> {
    if report.row_ids != ds.row_ids() || report.col_ids != ds.col_ids() {
        return Err(CliError::Config {
            path: path.to_path_buf(),
            message: String::from("report ids do not match the matrix"),
        });
    }
    Ok(())
}

fn posterior_cmd(report_path: &Path, matrix: &Path, coords: &Path, blocks: &[(usize, usize)], top: usize, out: &mut dyn Write) -> Result<()> {
    let report = RunReport::load(report_path)?;
    let ds = load_dataset(matrix, coords)?;
    check_ids(&report, &ds, report_path)?;
    let stdout_err = |e| CliError::io("<stdout>", e);
    writeln!(out, "gene_id,k,r,mean,lo,hi").map_err(stdout_err)?;
    for &(k, r) in blocks {
        for g in top_variable_genes(&report.result, &ds, k - 1, r - 1, top)? {
            writeln!(out, "{},{},{},{},{},{}", g.gene_id, g.k + 1, g.r + 1, g.mean, g.lo, g.hi).map_err(stdout_err)?;
        }
    }
    Ok(())
}

/// Labels with their ids when the source carries them.
type LabelSet = (Option<Vec<String>>, Vec<i64>);

fn to_i64(labels: &[usize]) -> Vec<i64> {
    labels.iter().map(|&l| l as i64).collect()
}

fn load_label_set(path: &Path, axis: Axis) -> Result<LabelSet> {
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if !is_json {
        let (ids, labels) = read_labels(path)?;
        return Ok((Some(ids), labels));
    }
    let text = read_text(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::parse(path, e.line() as u64, e.to_string()))?;
    let bad = |e: serde_json::Error| CliError::parse(path, 0, e.to_string());
    if value.get("truth").is_some() {
        let t: TruthFile = serde_json::from_value(value).map_err(bad)?;
        let labels = match axis {
            Axis::Rows => t.truth.row_labels,
            Axis::Cols => t.truth.col_labels,
        };
        return Ok((None, to_i64(&labels)));
    }
    let r: RunReport = serde_json::from_value(value).map_err(bad)?;
    Ok(match axis {
        Axis::Rows => (Some(r.row_ids), to_i64(r.result.labels.rows())),
        Axis::Cols => (Some(r.col_ids), to_i64(r.result.labels.cols())),
    })
}

/// CER between two label sources. When both carry ids, the estimate is
/// aligned to the truth's order.
pub fn eval_cer(truth: &Path, est: &Path, axis: Axis) -> Result<f64> {
    let (t_ids, t) = load_label_set(truth, axis)?;
    let (e_ids, mut e) = load_label_set(est, axis)?;
    if let (Some(t_ids), Some(e_ids)) = (t_ids, e_ids) {
        if t_ids != e_ids {
            let pos: std::collections::HashMap<&str, usize> =
                e_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
            if t_ids.len() != e_ids.len() {
                return Err(blockspace_core::Error::LengthMismatch(t_ids.len(), e_ids.len()).into());
            }
            e = t_ids
                .iter()
                .map(|id| pos.get(id.as_str()).map(|&i| e[i]).ok_or_else(|| CliError::parse(est, 0, format!("no label for `{id}`"))))
                .collect::<Result<_>>()?;
        }
    }
    Ok(cer(&t, &e)?)
}

fn plot_cmd(report: &Path, coords: &Path, out: &Path) -> Result<()> {
    let report = RunReport::load(report)?;
    let coords = read_coords(coords)?;
    create_dir(out)?;
    write_plots(&report, &coords, out)
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out: dir, seed } => simulate(&config, &dir, seed),
        Command::Fit {
            matrix,
            coords,
            config,
            out: dir,
            seed,
        } => fit_cmd(&matrix, &coords, &config, &dir, seed),
        Command::Select {
            matrix,
            coords,
            grid,
            out: dir,
            seed,
        } => select_cmd(&matrix, &coords, &grid, &dir, seed),
        Command::Posterior {
            report,
            matrix,
            coords,
            blocks,
            top,
        } => posterior_cmd(&report, &matrix, &coords, &blocks, top, out),
        Command::Eval { truth, est, axis } => {
            let v = eval_cer(&truth, &est, axis)?;
            writeln!(out, "{v:.6}").map_err(|e| CliError::io("<stdout>", e))
        }
        Command::Plot { report, coords, out: dir } => plot_cmd(&report, &coords, &dir),
    }
}

/// One JSON object on a single line.
pub fn error_line(e: &CliError) -> String {
    serde_json::json!({ "error": e.kind(), "code": e.exit_code(), "message": e.to_string() }).to_string()
}

/// Parses `argv`, runs the command and returns the process exit status.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let err = CliError::Usage(e.kind().to_string());
            let _ = e.print();
            eprintln!("{}", error_line(&err));
            return err.exit_code();
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            e.exit_code()
        }
    }
}
