//! The `gmi-perf` command line.

mod sweep;
mod units;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

pub use sweep::{
    apply_axis, normalized, run_sweep, sweep_csv, Axis, SweepError, SweepPoint, SweepSpec, SWEEP_CSV_HEADER,
};
pub use units::engineering;

use crate::estimator::{estimate, Boundedness, EstimateReport};
use crate::ingest::{
    build_kernel, extract_rtl_files, load_config, load_kernel, RtlParamExtract, BURSTCOUNT_WIDTH, MAX_THREADS,
};
use crate::oracle::{compare, CompareError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
/// Compute-bound kernel: no execution time is produced.
pub const EXIT_COMPUTE_BOUND: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "gmi-perf",
    version,
    about = "Execution-time estimates for memory-bound HLS kernels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the execution time of one kernel.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        /// Generated RTL whose BURSTCOUNT_WIDTH / MAX_THREADS override the config.
        #[arg(long, num_args = 1..)]
        rtl: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[command(flatten)]
        output: Output,
    },
    /// Re-estimate a kernel along one design-space axis.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, num_args = 1..)]
        rtl: Vec<PathBuf>,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated, strictly increasing.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[command(flatten)]
        output: Output,
    },
    /// List LSU parameters declared in generated RTL.
    Extract {
        #[arg(long, num_args = 1.., required = true)]
        rtl: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[command(flatten)]
        output: Output,
    },
    /// Compare the estimate against the event-level simulator.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, num_args = 1..)]
        rtl: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[command(flatten)]
        output: Output,
    },
}

struct Outcome {
    text: String,
    code: i32,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, code: EXIT_OK }
    }
}

/// Runs one command, writing the report to `out` (or `--out`) and
/// diagnostics to `err`. Returns the process exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (result, dest) = match cli.command {
        Command::Estimate {
            config,
            rtl,
            format,
            output,
        } => (cmd_estimate(&config, &rtl, format), output.out),
        Command::Sweep {
            config,
            rtl,
            axis,
            values,
            format,
            output,
        } => (cmd_sweep(&config, &rtl, axis, &values, format), output.out),
        Command::Extract { rtl, format, output } => (cmd_extract(&rtl, format), output.out),
        Command::Validate {
            config,
            rtl,
            seed,
            format,
            output,
        } => (cmd_validate(&config, &rtl, seed, format), output.out),
    };
    match result {
        Ok(outcome) => {
            let written = match &dest {
                Some(path) => std::fs::write(path, &outcome.text).map_err(|e| format!("{}: {e}", path.display())),
                None => out.write_all(outcome.text.as_bytes()).map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => outcome.code,
                Err(msg) => {
                    let _ = writeln!(err, "error: {msg}");
                    EXIT_ERROR
                }
            }
        }
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_ERROR
        }
    }
}

fn load_rtl(rtl: &[PathBuf]) -> Result<Option<RtlParamExtract>, String> {
    if rtl.is_empty() {
        return Ok(None);
    }
    extract_rtl_files(rtl, &[BURSTCOUNT_WIDTH, MAX_THREADS])
        .map(Some)
        .map_err(|e| e.to_string())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn estimate_table(r: &EstimateReport) -> String {
    let mut s = format!("kernel: {}\n", r.kernel);
    if r.boundedness == Boundedness::ComputeBound {
        s.push_str(&format!("ComputeBound (ratio {:.2})\n", r.occupancy_ratio));
        return s;
    }
    s.push_str(&format!("MemoryBound (ratio {:.2})\n\n", r.occupancy_ratio));
    s.push_str(&format!(
        "{:>4}  {:<14}  {:>5}  {:>12}  {:>12}  {:>12}\n",
        "lsu", "kind", "delta", "t_ideal", "t_ovh", "weighted"
    ));
    for (i, e) in r.per_lsu.iter().enumerate() {
        s.push_str(&format!(
            "{:>4}  {:<14}  {:>5}  {:>12}  {:>12}  {:>12}\n",
            i,
            e.kind.config_name(),
            e.delta,
            engineering(e.t_ideal, "s"),
            engineering(e.t_ovh, "s"),
            engineering(e.weighted_time, "s"),
        ));
    }
    s.push('\n');
    if let Some(bw) = r.effective_bandwidth {
        s.push_str(&format!("effective bandwidth = {}\n", engineering(bw, "B/s")));
    }
    if let Some(t) = r.t_exe {
        s.push_str(&format!("t_exe = {}\n", engineering(t, "s")));
    }
    s
}

pub const ESTIMATE_CSV_HEADER: &str = "lsu,kind,delta,t_ideal,t_ovh,burst_size,k_lsu,t_row,weighted_time";

fn estimate_csv(r: &EstimateReport) -> String {
    let mut s = format!(
        "# kernel={} boundedness={:?} occupancy_ratio={}\n",
        r.kernel, r.boundedness, r.occupancy_ratio
    );
    s.push_str(ESTIMATE_CSV_HEADER);
    s.push('\n');
    for (i, e) in r.per_lsu.iter().enumerate() {
        s.push_str(&format!(
            "{i},{},{},{},{},{},{},{},{}\n",
            e.kind.config_name(),
            e.delta,
            e.t_ideal,
            e.t_ovh,
            e.burst_size,
            e.k_lsu,
            e.t_row,
            e.weighted_time
        ));
    }
    s.push_str(&format!(
        "total,,,,,,,,{}\n# t_exe={} effective_bandwidth={}\n",
        opt(r.t_exe),
        opt(r.t_exe),
        opt(r.effective_bandwidth)
    ));
    s
}

fn cmd_estimate(config: &Path, rtl: &[PathBuf], format: Format) -> Result<Outcome, String> {
    let (kernel, dram) = load_kernel(config, rtl).map_err(|e| e.to_string())?;
    let report = estimate(&kernel, &dram).map_err(|e| format!("{}: {e}", config.display()))?;
    let text = match format {
        Format::Table => estimate_table(&report),
        Format::Csv => estimate_csv(&report),
        Format::Json => {
            let mut v = serde_json::to_value(&report).map_err(|e| e.to_string())?;
            v["t_ideal_total"] = json!(report.t_ideal_total());
            v["t_ovh_total"] = json!(report.t_ovh_total());
            format!("{}\n", serde_json::to_string_pretty(&v).map_err(|e| e.to_string())?)
        }
    };
    let code = match report.boundedness {
        Boundedness::MemoryBound => EXIT_OK,
        Boundedness::ComputeBound => EXIT_COMPUTE_BOUND,
    };
    Ok(Outcome { text, code })
}

fn cmd_sweep(config: &Path, rtl: &[PathBuf], axis: Axis, values: &[String], format: Format) -> Result<Outcome, String> {
    let spec = SweepSpec::parse(axis, values).map_err(|e| e.to_string())?;
    let base = load_config(config).map_err(|e| e.to_string())?;
    let extract = load_rtl(rtl)?;
    // the unswept config must build on its own
    build_kernel(&base, extract.as_ref()).map_err(|e| format!("{}: {e}", config.display()))?;
    let points = run_sweep(&base, extract.as_ref(), &spec).map_err(|e| format!("{}: {e}", config.display()))?;
    let text = match format {
        Format::Csv => sweep_csv(axis, &points),
        Format::Json => {
            let rows: Vec<_> = points
                .iter()
                .zip(normalized(&points))
                .map(|(p, norm)| {
                    json!({
                        "axis": axis.name(),
                        "value": p.value,
                        "boundedness": p.report.boundedness,
                        "occupancy_ratio": p.report.occupancy_ratio,
                        "t_ideal_total": p.report.t_exe.map(|_| p.report.t_ideal_total()),
                        "t_ovh_total": p.report.t_exe.map(|_| p.report.t_ovh_total()),
                        "t_exe": p.report.t_exe,
                        "effective_bandwidth": p.report.effective_bandwidth,
                        "t_exe_normalized": norm,
                    })
                })
                .collect();
            format!("{}\n", serde_json::to_string_pretty(&rows).map_err(|e| e.to_string())?)
        }
        Format::Table => {
            let mut s = format!(
                "{:>12}  {:<12}  {:>7}  {:>12}  {:>12}  {:>10}\n",
                axis.name(),
                "boundedness",
                "ratio",
                "t_exe",
                "bandwidth",
                "normalized"
            );
            for (p, norm) in points.iter().zip(normalized(&points)) {
                let r = &p.report;
                s.push_str(&format!(
                    "{:>12}  {:<12}  {:>7.2}  {:>12}  {:>12}  {:>10}\n",
                    p.value,
                    format!("{:?}", r.boundedness),
                    r.occupancy_ratio,
                    r.t_exe.map(|t| engineering(t, "s")).unwrap_or_default(),
                    r.effective_bandwidth.map(|b| engineering(b, "B/s")).unwrap_or_default(),
                    norm.map(|n| format!("{n:.4}")).unwrap_or_default(),
                ));
            }
            s
        }
    };
    Ok(Outcome::ok(text))
}

fn cmd_extract(rtl: &[PathBuf], format: Format) -> Result<Outcome, String> {
    let extract = extract_rtl_files(rtl, &[BURSTCOUNT_WIDTH, MAX_THREADS]).map_err(|e| e.to_string())?;
    let text = match format {
        Format::Table => extract
            .iter()
            .map(|(name, h)| format!("{name:<18} {:>8}  {}:{}\n", h.value, h.source, h.line))
            .collect(),
        Format::Csv => {
            let mut s = String::from("name,value,file,line\n");
            for (name, h) in extract.iter() {
                s.push_str(&format!("{name},{},{},{}\n", h.value, h.source, h.line));
            }
            s
        }
        Format::Json => {
            let rows: Vec<_> = extract
                .iter()
                .map(|(name, h)| json!({"name": name, "value": h.value, "file": h.source, "line": h.line, "column": h.column}))
                .collect();
            format!("{}\n", serde_json::to_string_pretty(&rows).map_err(|e| e.to_string())?)
        }
    };
    Ok(Outcome::ok(text))
}

fn cmd_validate(config: &Path, rtl: &[PathBuf], seed: u64, format: Format) -> Result<Outcome, String> {
    let (kernel, dram) = load_kernel(config, rtl).map_err(|e| e.to_string())?;
    let c = match compare(&kernel, &dram, seed) {
        Ok(c) => c,
        Err(e @ CompareError::NotApplicable { .. }) => {
            return Ok(Outcome {
                text: format!("NotApplicable: {e}\n"),
                code: EXIT_COMPUTE_BOUND,
            })
        }
        Err(e) => return Err(format!("{}: {e}", config.display())),
    };
    let text = match format {
        Format::Table => format!(
            "kernel: {}\nseed: {seed}\nmodel time  = {}\noracle time = {}\nrelative error = {:.3}%\nbursts = {}  row misses = {}\n",
            kernel.name,
            engineering(c.model_time, "s"),
            engineering(c.oracle_time, "s"),
            100.0 * c.relative_error,
            c.sim.bursts(),
            c.sim.row_misses(),
        ),
        Format::Csv => format!(
            "kernel,seed,model_time,oracle_time,relative_error\n{},{seed},{},{},{}\n",
            kernel.name, c.model_time, c.oracle_time, c.relative_error
        ),
        Format::Json => {
            let mut v = serde_json::to_value(&c).map_err(|e| e.to_string())?;
            v["kernel"] = json!(kernel.name);
            v["seed"] = json!(seed);
            format!("{}\n", serde_json::to_string_pretty(&v).map_err(|e| e.to_string())?)
        }
    };
    Ok(Outcome::ok(text))
}
