//! `adapts`: rolling-window adaption runs, parameter sweeps and a refit micro-benchmark.

mod bench;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adapts_core::io::{load_forecasts, load_series, write_forecasts, write_report};
use adapts_core::{
    make_base_forecaster, run_with_sink, BaseKind, Error, ForecastTable, MultiSeries, RunConfigFile, RunReport,
};
use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

#[derive(Parser, Debug)]
#[command(name = "adapts", version, about = "Online adaption of fixed base forecasts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Replay a dataset through the rolling-window harness and write a report.
    Run(RunArgs),
    /// Repeat a run over a list of values for one parameter.
    Sweep(SweepArgs),
    /// Time a Woodbury refit against a direct recompute.
    Bench(bench::BenchArgs),
}

/// Flags shared by `run` and `sweep`. They override the config file in the order given.
#[derive(Args, Debug)]
struct Overrides {
    /// `key = value` config file.
    #[arg(long)]
    config: PathBuf,
    /// Override one config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// full, slow, fast or unweighted.
    #[arg(long)]
    weighter: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long = "update-period")]
    update_period: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    /// naive_seasonal, historical_mean or precomputed.
    #[arg(long)]
    base: Option<String>,
    /// Forecast file for the precomputed base.
    #[arg(long)]
    forecasts: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// json or csv.
    #[arg(long)]
    format: Option<String>,
    /// Write the base forecasts in forecast-file format.
    #[arg(long = "dump-forecasts")]
    dump_forecasts: Option<String>,
}

/// Flag id and the config key it sets.
const FLAG_KEYS: &[(&str, &str)] = &[
    ("weighter", "weighter"),
    ("alpha", "alpha"),
    ("update_period", "update_period"),
    ("horizon", "horizon"),
    ("base", "base"),
    ("forecasts", "forecasts"),
    ("out", "out"),
    ("format", "format"),
    ("dump_forecasts", "dump_forecasts"),
];

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Axis {
    Alpha,
    UpdatePeriod,
    Horizon,
}

impl Axis {
    fn key(self) -> &'static str {
        match self {
            Axis::Alpha => "alpha",
            Axis::UpdatePeriod => "update_period",
            Axis::Horizon => "horizon",
        }
    }
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, value_enum)]
    axis: Axis,
    /// Comma-separated values for the swept parameter.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    values: Vec<String>,
    /// Run the values concurrently (capped by ADAPTS_THREADS).
    #[arg(long)]
    parallel: bool,
}

/// Data errors exit 2, numeric failures 3, configuration problems 1.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidConfig(_) => 1,
        Error::ParseError { .. }
        | Error::IoError { .. }
        | Error::InsufficientData(_)
        | Error::CorruptSeries { .. }
        | Error::MissingForecast { .. }
        | Error::ShapeMismatch { .. }
        | Error::InvalidSeasonality { .. } => 2,
        Error::SignalTooShort(_)
        | Error::MalformedSpectrum { .. }
        | Error::InvalidFilter { .. }
        | Error::IllConditionedUpdate(_)
        | Error::DegenerateWeights
        | Error::InvalidLoss(_)
        | Error::EmptyBlock => 3,
    }
}

fn main() -> ExitCode {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let (_, sub) = matches.subcommand().expect("subcommand is required");
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args, sub),
        Command::Sweep(args) => cmd_sweep(&args, sub),
        Command::Bench(args) => bench::cmd_bench(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error[{}]: {e}", e.name());
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Load the config file and apply `--set` and flag overrides in command-line order.
fn resolve_config(overrides: &Overrides, matches: &ArgMatches) -> Result<RunConfigFile, Error> {
    let mut cfg = RunConfigFile::load(&overrides.config)?;
    let mut pending: Vec<(usize, String, String)> = Vec::new();
    if let Some(indices) = matches.indices_of("set") {
        for (i, kv) in indices.zip(&overrides.set) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("--set expects KEY=VALUE, got '{kv}'")))?;
            pending.push((i, k.trim().to_string(), v.trim().to_string()));
        }
    }
    for &(id, key) in FLAG_KEYS {
        if let (Some(mut idx), Some(value)) = (matches.indices_of(id), matches.get_one::<String>(id)) {
            let i = idx.next_back().unwrap_or(0);
            pending.push((i, key.to_string(), value.clone()));
        }
    }
    pending.sort_by_key(|p| p.0);
    for (_, key, value) in pending {
        cfg.apply(&key, &value, Path::new(""))?;
    }
    cfg.rolling.validate()?;
    Ok(cfg)
}

struct Inputs {
    series: MultiSeries,
    dataset: String,
    table: Option<ForecastTable>,
}

fn load_inputs(cfg: &RunConfigFile) -> Result<Inputs, Error> {
    let path = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("no dataset given (set `dataset` in the config or via --set)".into()))?;
    let series = load_series(path)?;
    let table = load_table(cfg, &series)?;
    let dataset = path
        .file_stem()
        .map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
    Ok(Inputs { series, dataset, table })
}

fn load_table(cfg: &RunConfigFile, series: &MultiSeries) -> Result<Option<ForecastTable>, Error> {
    if cfg.base != BaseKind::Precomputed {
        return Ok(None);
    }
    let path = cfg
        .forecasts
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("the precomputed base needs a forecast file (--forecasts)".into()))?;
    load_forecasts(path, &series.names).map(Some)
}

/// Run once; the returned table holds the base forecasts when `dump` is set.
fn execute(cfg: &RunConfigFile, inputs: &Inputs, dump: bool) -> Result<(RunReport, Option<ForecastTable>), Error> {
    let mut base = make_base_forecaster(cfg.base, cfg.base_season(), inputs.table.clone())?;
    let mut dumped = dump.then(|| ForecastTable::new(cfg.rolling.horizon));
    let report = run_with_sink(&inputs.series, &mut base, &cfg.rolling, &inputs.dataset, &mut |b| {
        if let Some(t) = dumped.as_mut() {
            t.insert(b.t, b.channel, b.base.clone());
        }
    })?;
    Ok((report, dumped))
}

fn print_summary(report: &RunReport) {
    for ch in &report.channels {
        println!(
            "channel {:<12} windows {:>6}  MASE base {:.4} af {:.4} combined {:.4}  RMSSE base {:.4} af {:.4} combined {:.4}{}",
            ch.name,
            ch.windows,
            ch.base.mase,
            ch.adapted.mase,
            ch.combined.mase,
            ch.base.rmsse,
            ch.adapted.rmsse,
            ch.combined.rmsse,
            if ch.floored_windows > 0 {
                format!("  ({} floored)", ch.floored_windows)
            } else {
                String::new()
            }
        );
    }
    let a = &report.aggregate;
    println!(
        "aggregate ({}) MASE base {:.4} af {:.4} combined {:.4}  RMSSE base {:.4} af {:.4} combined {:.4}",
        a.method, a.base.mase, a.adapted.mase, a.combined.mase, a.base.rmsse, a.adapted.rmsse, a.combined.rmsse
    );
}

fn cmd_run(args: &RunArgs, matches: &ArgMatches) -> Result<u8, Error> {
    let cfg = resolve_config(&args.overrides, matches)?;
    let inputs = load_inputs(&cfg)?;
    let (report, dumped) = execute(&cfg, &inputs, cfg.dump_forecasts.is_some())?;
    print_summary(&report);
    if let Some(out) = &cfg.out {
        write_report(&report, out, cfg.format)?;
        println!("report written to {}", out.display());
    }
    if let (Some(path), Some(table)) = (&cfg.dump_forecasts, dumped) {
        write_forecasts(&table, path)?;
        println!("base forecasts written to {}", path.display());
    }
    Ok(0)
}

/// `dir/stem_<axis>=<value>.ext` next to the requested output.
fn sweep_path(out: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "report".to_string(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

fn worker_threads() -> usize {
    std::env::var("ADAPTS_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1)
}

fn cmd_sweep(args: &SweepArgs, matches: &ArgMatches) -> Result<u8, Error> {
    let base_cfg = resolve_config(&args.overrides, matches)?;
    let key = args.axis.key();
    let configs: Vec<(String, RunConfigFile)> = args
        .values
        .iter()
        .map(|v| {
            let mut cfg = base_cfg.clone();
            cfg.apply(key, v, Path::new(""))?;
            cfg.rolling.validate()?;
            Ok((v.trim().to_string(), cfg))
        })
        .collect::<Result<_, Error>>()?;
    let inputs = load_inputs(&base_cfg)?;

    let one = |(value, cfg): &(String, RunConfigFile)| execute(cfg, &inputs, false).map(|(r, _)| (value.clone(), r));
    let results: Vec<(String, RunReport)> = if args.parallel {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(worker_threads())
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot start worker threads: {e}")))?;
        pool.install(|| configs.par_iter().map(one).collect::<Result<_, Error>>())?
    } else {
        configs.iter().map(one).collect::<Result<_, Error>>()?
    };

    let mut table = String::from("axis,value,base_mase,af_mase,combined_mase,base_rmsse,af_rmsse,combined_rmsse\n");
    for (value, report) in &results {
        println!("== {key} = {value}");
        print_summary(report);
        let a = &report.aggregate;
        table.push_str(&format!(
            "{key},{value},{},{},{},{},{},{}\n",
            a.base.mase, a.adapted.mase, a.combined.mase, a.base.rmsse, a.adapted.rmsse, a.combined.rmsse
        ));
    }
    print!("{table}");
    if let Some(out) = &base_cfg.out {
        let ext = match base_cfg.format {
            adapts_core::ReportFormat::Json => "json",
            adapts_core::ReportFormat::Csv => "csv",
        };
        for (value, report) in &results {
            write_report(report, &sweep_path(out, &format!("{key}={value}"), ext), base_cfg.format)?;
        }
        let table_path = sweep_path(out, "sweep", "csv");
        std::fs::write(&table_path, table).map_err(|e| Error::IoError {
            path: table_path.clone(),
            source: e,
        })?;
        println!("{} reports and {} written", results.len(), table_path.display());
    }
    Ok(0)
}
