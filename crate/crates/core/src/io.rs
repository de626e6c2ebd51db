//! File formats: wide series CSV, long forecast CSV, `key = value` run
//! configs, and JSON/CSV reports.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecaster::{SpectrumLayout, UpdateStrategy};
use crate::harness::{BaseKind, ForecastTable, MultiSeries, RollingConfig, RunReport, SeriesSource};

const TIMESTAMP_COLUMNS: [&str; 2] = ["timestamp", "date"];

fn parse_err(path: &Path, line: usize, column: Option<usize>, message: impl Into<String>) -> Error {
    Error::ParseError {
        path: path.to_path_buf(),
        line,
        column,
        message: message.into(),
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => parse_err(path, line, None, format!("{other:?}")),
    }
}

fn parse_real(path: &Path, line: usize, column: usize, cell: &str) -> Result<f64> {
    f64::from_str(cell.trim()).map_err(|_| parse_err(path, line, Some(column), format!("'{cell}' is not a number")))
}

/// Load a wide-format series: header row, optional leading `timestamp`
/// (or `date`) column, one numeric column per channel.
pub fn load_series(path: &Path) -> Result<MultiSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let has_ts = header
        .get(0)
        .is_some_and(|h| TIMESTAMP_COLUMNS.contains(&h.trim().to_ascii_lowercase().as_str()));
    let skip = usize::from(has_ts);
    let names: Vec<String> = header.iter().skip(skip).map(|h| h.trim().to_string()).collect();
    if names.is_empty() {
        return Err(parse_err(path, 1, None, "no channel columns"));
    }
    let mut unique = std::collections::HashSet::new();
    for n in &names {
        if !unique.insert(n) {
            return Err(parse_err(path, 1, None, format!("duplicate channel name '{n}'")));
        }
    }
    let mut channels = vec![Vec::new(); names.len()];
    let mut timestamps = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(parse_err(
                path,
                line,
                None,
                format!("expected {} cells, found {}", header.len(), record.len()),
            ));
        }
        if has_ts {
            timestamps.push(record[0].to_string());
        }
        for (c, cell) in record.iter().skip(skip).enumerate() {
            channels[c].push(parse_real(path, line, c + skip + 1, cell)?);
        }
    }
    if channels[0].is_empty() {
        return Err(Error::InsufficientData(format!("{} has a header but no rows", path.display())));
    }
    Ok(MultiSeries {
        names,
        timestamps: has_ts.then_some(timestamps),
        channels,
    })
}

pub fn write_series(series: &MultiSeries, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header: Vec<String> = Vec::new();
    if series.timestamps.is_some() {
        header.push("timestamp".into());
    }
    header.extend(series.names.iter().cloned());
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for t in 0..series.len() {
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        if let Some(ts) = &series.timestamps {
            row.push(ts[t].clone());
        }
        row.extend(series.channels.iter().map(|ch| ch[t].to_string()));
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Load a long-format forecast file with header `t,channel,h1,...,hH`.
/// `channel` may be an index or one of `channel_names`.
pub fn load_forecasts(path: &Path, channel_names: &[String]) -> Result<ForecastTable> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.len() < 3 || &header[0] != "t" || &header[1] != "channel" {
        return Err(parse_err(path, 1, None, "header must be t,channel,h1,...,hH"));
    }
    for (i, h) in header.iter().skip(2).enumerate() {
        if h != format!("h{}", i + 1) {
            return Err(parse_err(path, 1, Some(i + 3), format!("expected column h{}, found '{h}'", i + 1)));
        }
    }
    let horizon = header.len() - 2;
    let by_name: HashMap<&str, usize> = channel_names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut table = ForecastTable::new(horizon);
    for record in reader.records() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let t: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(path, line, Some(1), format!("'{}' is not a time index", &record[0])))?;
        let ch_cell = record[1].trim();
        let channel = match by_name.get(ch_cell) {
            Some(&c) => c,
            None => ch_cell
                .parse()
                .map_err(|_| parse_err(path, line, Some(2), format!("unknown channel '{ch_cell}'")))?,
        };
        let values = record
            .iter()
            .skip(2)
            .enumerate()
            .map(|(i, cell)| parse_real(path, line, i + 3, cell))
            .collect::<Result<Vec<f64>>>()?;
        if table.rows.contains_key(&(t, channel)) {
            return Err(parse_err(path, line, None, format!("duplicate row for t={t}, channel={channel}")));
        }
        table.insert(t, channel, values);
    }
    Ok(table)
}

pub fn write_forecasts(table: &ForecastTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut header = vec!["t".to_string(), "channel".to_string()];
    header.extend((1..=table.horizon).map(|i| format!("h{i}")));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (t, c, values) in table.sorted() {
        let mut row = vec![t.to_string(), c.to_string()];
        row.extend(values.iter().map(f64::to_string));
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::config(format!("unknown report format '{other}' (expected json or csv)"))),
        }
    }
}

/// JSON: full structure with sorted keys. CSV: one row per (channel, stream).
pub fn write_report(report: &RunReport, path: &Path, format: ReportFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        ReportFormat::Json => {
            // Round-tripping through `Value` sorts object keys.
            let value = serde_json::to_value(report).expect("report serializes");
            serde_json::to_writer_pretty(&mut out, &value).map_err(|e| Error::io(path, e.into()))?;
            writeln!(out).map_err(|e| Error::io(path, e))?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            let io = |e: csv::Error| csv_err(path, e);
            w.write_record(["dataset", "channel", "name", "stream", "mase", "rmsse", "windows", "floored_windows"])
                .map_err(io)?;
            for ch in &report.channels {
                for (stream, m) in [("base", ch.base), ("adapted", ch.adapted), ("combined", ch.combined)] {
                    w.write_record([
                        report.dataset.clone(),
                        ch.channel.to_string(),
                        ch.name.clone(),
                        stream.to_string(),
                        m.mase.to_string(),
                        m.rmsse.to_string(),
                        ch.windows.to_string(),
                        ch.floored_windows.to_string(),
                    ])
                    .map_err(io)?;
                }
            }
            w.flush().map_err(|e| Error::io(path, e))?;
        }
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), Some(e.column()), e.to_string()))
}

/// Everything a run needs, as read from a `key = value` config file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfigFile {
    pub rolling: RollingConfig,
    pub dataset: Option<PathBuf>,
    pub base: BaseKind,
    /// Period of the naive-seasonal base; defaults to `seasonality`.
    pub base_season: Option<usize>,
    pub forecasts: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: ReportFormat,
    pub dump_forecasts: Option<PathBuf>,
}

impl Default for RunConfigFile {
    fn default() -> Self {
        RunConfigFile {
            rolling: RollingConfig::default(),
            dataset: None,
            base: BaseKind::NaiveSeasonal,
            base_season: None,
            forecasts: None,
            out: None,
            format: ReportFormat::Json,
            dump_forecasts: None,
        }
    }
}

pub const CONFIG_KEYS: &[&str] = &[
    "context_length",
    "horizon",
    "update_period",
    "seasonality",
    "lambda",
    "alpha",
    "eta",
    "fast_window",
    "warmup",
    "weighter",
    "instance_norm",
    "channel_scaling",
    "shared_weights",
    "spectrum",
    "update_strategy",
    "dataset",
    "base",
    "base_season",
    "forecasts",
    "out",
    "format",
    "dump_forecasts",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("invalid value '{value}' for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::config(format!("invalid boolean '{value}' for {key}"))),
    }
}

impl RunConfigFile {
    /// Set one key. Relative paths are resolved against `base_dir`.
    pub fn apply(&mut self, key: &str, value: &str, base_dir: &Path) -> Result<()> {
        let value = value.trim().trim_matches('"');
        let path = || -> PathBuf {
            let p = PathBuf::from(value);
            if p.is_absolute() {
                p
            } else {
                base_dir.join(p)
            }
        };
        let r = &mut self.rolling;
        match key.trim() {
            "context_length" => r.context_length = parse_value(key, value)?,
            "horizon" => r.horizon = parse_value(key, value)?,
            "update_period" => r.update_period = parse_value(key, value)?,
            "seasonality" => r.season = parse_value(key, value)?,
            "lambda" => r.lambda = parse_value(key, value)?,
            "alpha" => r.alpha = parse_value(key, value)?,
            "eta" => r.eta = parse_value(key, value)?,
            "fast_window" => r.fast_window = parse_value(key, value)?,
            "warmup" => r.warmup = parse_value(key, value)?,
            "weighter" => r.weighter_mode = value.parse()?,
            "instance_norm" => r.instance_norm = parse_bool(key, value)?,
            "channel_scaling" => r.channel_scaling = parse_bool(key, value)?,
            "shared_weights" => r.shared_weights = parse_bool(key, value)?,
            "spectrum" => {
                r.layout = match value {
                    "two_sided" => SpectrumLayout::TwoSided,
                    "one_sided" => SpectrumLayout::OneSided,
                    _ => return Err(Error::config(format!("invalid spectrum '{value}' (two_sided or one_sided)"))),
                }
            }
            "update_strategy" => {
                r.update_strategy = match value {
                    "auto" => UpdateStrategy::Auto,
                    "woodbury" => UpdateStrategy::Woodbury,
                    "direct" => UpdateStrategy::Direct,
                    _ => return Err(Error::config(format!("invalid update_strategy '{value}'"))),
                }
            }
            "dataset" => self.dataset = Some(path()),
            "base" => self.base = value.parse()?,
            "base_season" => self.base_season = Some(parse_value(key, value)?),
            "forecasts" => self.forecasts = Some(path()),
            "out" => self.out = Some(path()),
            "format" => self.format = value.parse()?,
            "dump_forecasts" => self.dump_forecasts = Some(path()),
            other => return Err(Error::config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg = RunConfigFile::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected 'key = value'", i + 1)))?;
            cfg.apply(key, value, base_dir)
                .map_err(|e| Error::config(format!("line {}: {e}", i + 1)))?;
        }
        cfg.rolling.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, dir)
    }

    pub fn base_season(&self) -> usize {
        self.base_season.unwrap_or(self.rolling.season)
    }
}
