#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::SystemTime;

use clap::{Parser, ValueEnum};

use ampris::config::parse_config_str_with_base;
use ampris::output::{emit, Format, RunManifest};
use ampris::sweep::{evaluate_single, range, run_series, Metric, Preset, Series, SweepSpec, SweepVariable};
use ampris::{Error, Result, SystemConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Amplifying-RIS link simulator.
///
/// Without --preset or --sweep, evaluates the configuration once and prints
/// one row with the requested metrics.
#[derive(Debug, Parser)]
#[command(name = "ampris", version)]
struct Cli {
    /// Configuration file (sectioned key = value).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Figure or table preset.
    #[arg(long, value_name = "NAME", conflicts_with = "sweep",
          value_parser = |s: &str| s.parse::<Preset>())]
    preset: Option<Preset>,

    /// Sweep variable: P_t_dBm, P_max_dBm, N or d_h_m.
    #[arg(long, value_name = "VAR", requires = "values",
          value_parser = |s: &str| s.parse::<SweepVariable>())]
    sweep: Option<SweepVariable>,

    /// Sweep values: `a,b,c` or `lo:step:hi`.
    #[arg(long, value_name = "LIST", requires = "sweep", value_parser = parse_values)]
    values: Option<Values>,

    /// Comma-separated metrics: rate, ber, ee, ptot, gamma_fit.
    #[arg(long, value_name = "LIST", value_delimiter = ',',
          value_parser = |s: &str| s.parse::<Metric>())]
    metrics: Vec<Metric>,

    /// Monte Carlo iterations per point (overrides the configuration).
    #[arg(long, value_name = "K")]
    iters: Option<usize>,

    /// Base seed (overrides the configuration).
    #[arg(long, value_name = "S")]
    seed: Option<u64>,

    /// Output file; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,

    /// Worker threads; all cores when absent.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,

    /// Suppress the per-point log on stderr.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Clone)]
struct Values(Vec<f64>);

fn parse_values(s: &str) -> std::result::Result<Values, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    let parts: Vec<&str> = s.split(':').collect();
    let values = match parts.as_slice() {
        [lo, step, hi] => {
            let (lo, step, hi) = (num(lo)?, num(step)?, num(hi)?);
            if !(step > 0.0) || hi < lo {
                return Err("range needs step > 0 and hi >= lo".into());
            }
            range(lo, hi, step)
        }
        [_] => s.split(',').map(num).collect::<std::result::Result<_, _>>()?,
        _ => return Err("expected `a,b,c` or `lo:step:hi`".into()),
    };
    if values.is_empty() {
        return Err("no values".into());
    }
    Ok(Values(values))
}

fn load_base(path: Option<&Path>, base: SystemConfig) -> Result<SystemConfig> {
    match path {
        None => Ok(base),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|source| Error::Io {
                path: p.to_path_buf(),
                source,
            })?;
            parse_config_str_with_base(&text, base)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let started = SystemTime::now();
    let default_base = cli.preset.map_or_else(SystemConfig::default, Preset::default_base);
    let mut base = load_base(cli.config.as_deref(), default_base)?;
    if let Some(k) = cli.iters {
        base.n_iterations = k;
    }
    if let Some(s) = cli.seed {
        base.seed = s;
    }
    base.validate()?;
    let verbose = !cli.quiet;

    let threads = cli.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter {
            name: "threads",
            reason: e.to_string(),
        })?;

    let (label, table) = pool.install(|| -> Result<(String, _)> {
        if let Some(preset) = cli.preset {
            if verbose {
                eprintln!(
                    "{}: seed {}, {} iterations",
                    preset.name(),
                    base.seed,
                    base.n_iterations
                );
            }
            Ok((preset.name().to_string(), preset.run(&base, verbose)?))
        } else if let (Some(variable), Some(values)) = (cli.sweep, cli.values.clone().map(|v| v.0)) {
            let metrics = if cli.metrics.is_empty() {
                vec![Metric::Rate]
            } else {
                cli.metrics.clone()
            };
            let spec = SweepSpec {
                variable,
                values,
                metrics,
                base: base.clone(),
            };
            let series = [Series {
                labels: Vec::new(),
                spec,
            }];
            Ok((
                format!("sweep:{}", variable.name()),
                run_series(&series, base.seed, verbose)?,
            ))
        } else {
            let metrics = if cli.metrics.is_empty() {
                default_single_metrics(&base)
            } else {
                cli.metrics.clone()
            };
            Ok(("single".to_string(), evaluate_single(&base, &metrics)?))
        }
    })?;

    let manifest = RunManifest::new(label, &base, &table, started);
    let format = match cli.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    emit(&table, &manifest, format, cli.out.as_deref())
}

fn default_single_metrics(config: &SystemConfig) -> Vec<Metric> {
    if config.output_limit {
        vec![Metric::Rate, Metric::Ee, Metric::Ptot]
    } else {
        vec![Metric::Rate]
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
