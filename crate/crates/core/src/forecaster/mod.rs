//! Fourier-domain linear forecaster refit online.
//!
//! Contexts and targets are mean-removed, scaled by the running standard
//! deviation of their channel, transformed with a real FFT and low-pass
//! truncated. A single complex ridge map from context features to target
//! bins is maintained by [`OnlineRidge`]. Until the first fit the forecaster
//! falls back to tiling the last season of the context.

mod ridge;
mod welford;

use std::path::Path;

pub use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{forward_rft, inverse_rft, pad_spectrum, FilterSpec, Spectrum};

pub use ridge::{woodbury_downdate, CMatrix, OnlineRidge, UpdatePath, UpdateStrategy};
pub use welford::RunningStats;

/// Standard deviations below this are treated as this value.
pub const SIGMA_FLOOR: f64 = 1e-8;

/// Which Fourier coefficients of a context enter the design matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumLayout {
    /// Retained one-sided bins plus the conjugates of every bin that is not
    /// its own mirror image (i.e. the negative frequencies of a two-sided
    /// low-pass spectrum). With no filtering this spans every real linear
    /// map of the context.
    #[default]
    TwoSided,
    /// Retained one-sided bins only.
    OneSided,
}

impl SpectrumLayout {
    /// Feature count for a signal of length `n` with `keep` retained bins.
    pub fn feature_count(self, keep: usize, n: usize) -> usize {
        match self {
            SpectrumLayout::OneSided => keep,
            SpectrumLayout::TwoSided => keep + mirrored_bins(keep, n),
        }
    }
}

/// Bins in `1..keep` whose negative-frequency partner is distinct.
fn mirrored_bins(keep: usize, n: usize) -> usize {
    let nyquist_kept = n.is_multiple_of(2) && keep == n / 2 + 1;
    keep - 1 - usize::from(nyquist_kept)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecasterConfig {
    pub context_length: usize,
    pub horizon: usize,
    pub season: usize,
    pub lambda: f64,
    pub alpha: f64,
    #[serde(default)]
    pub layout: SpectrumLayout,
    #[serde(default = "yes")]
    pub instance_norm: bool,
    #[serde(default = "yes")]
    pub channel_scaling: bool,
    #[serde(default)]
    pub strategy: UpdateStrategy,
}

fn yes() -> bool {
    true
}

impl ForecasterConfig {
    /// Defaults for everything but the window shape.
    pub fn new(context_length: usize, horizon: usize, season: usize) -> Self {
        ForecasterConfig {
            context_length,
            horizon,
            season,
            lambda: 20.0,
            alpha: 0.9,
            layout: SpectrumLayout::TwoSided,
            instance_norm: true,
            channel_scaling: true,
            strategy: UpdateStrategy::Auto,
        }
    }

    pub fn validate(&self) -> Result<FilterSpec> {
        let (l, h, s) = (self.context_length, self.horizon, self.season);
        if l < 2 || h < 1 {
            return Err(Error::config(format!(
                "context length must be >= 2 and horizon >= 1, got L={l}, H={h}"
            )));
        }
        if s < 1 || s > l {
            return Err(Error::config(format!("seasonality must satisfy 1 <= S <= L, got S={s}, L={l}")));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::config(format!("lambda must be positive, got {}", self.lambda)));
        }
        // A length-1 horizon still has one (DC) bin.
        if h == 1 {
            if !(self.alpha > 0.0 && self.alpha <= 1.0) {
                return Err(Error::config(format!("alpha must lie in (0, 1], got {}", self.alpha)));
            }
            return Ok(FilterSpec {
                alpha: self.alpha,
                context_bins: crate::spectral::keep_count(self.alpha, l),
                target_bins: 1,
            });
        }
        FilterSpec::new(self.alpha, l, h)
    }
}

/// A (context, target) training example borrowed from a series.
#[derive(Debug, Clone, Copy)]
pub struct SamplePair<'a> {
    pub context: &'a [f64],
    pub target: &'a [f64],
    pub channel: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forecaster {
    config: ForecasterConfig,
    filter: FilterSpec,
    ridge: OnlineRidge,
    channel_stats: Vec<RunningStats>,
}

impl Forecaster {
    pub fn new(config: ForecasterConfig, channels: usize) -> Result<Self> {
        let filter = config.validate()?;
        let features = config.layout.feature_count(filter.context_bins, config.context_length);
        let mut ridge = OnlineRidge::new(features, filter.target_bins, config.lambda)?;
        ridge.strategy = config.strategy;
        Ok(Forecaster {
            config,
            filter,
            ridge,
            channel_stats: vec![RunningStats::default(); channels],
        })
    }

    pub fn config(&self) -> &ForecasterConfig {
        &self.config
    }

    pub fn filter(&self) -> FilterSpec {
        self.filter
    }

    /// Context feature dimension (`d_c`).
    pub fn context_dim(&self) -> usize {
        self.ridge.features()
    }

    /// Target bin count (`d_t`).
    pub fn target_dim(&self) -> usize {
        self.ridge.outputs()
    }

    pub fn ridge(&self) -> &OnlineRidge {
        &self.ridge
    }

    pub fn n_samples(&self) -> u64 {
        self.ridge.n_samples()
    }

    pub fn channel_stats(&self) -> &[RunningStats] {
        &self.channel_stats
    }

    /// Scale applied to a channel's pairs before fitting.
    pub fn channel_scale(&self, channel: usize) -> f64 {
        if !self.config.channel_scaling {
            return 1.0;
        }
        self.channel_stats
            .get(channel)
            .and_then(RunningStats::std_dev)
            .map_or(1.0, |s| s.max(SIGMA_FLOOR))
    }

    /// Push one new raw value per channel into the running statistics.
    pub fn observe_values(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.channel_stats.len() {
            return Err(Error::ShapeMismatch {
                what: "observed values",
                expected: self.channel_stats.len(),
                got: values.len(),
            });
        }
        for (stats, &v) in self.channel_stats.iter_mut().zip(values) {
            stats.push(v);
        }
        Ok(())
    }

    fn features(&self, values: &[f64], shift: f64, scale: f64, keep: usize, augment: bool) -> Result<Vec<Complex64>> {
        let inv = 1.0 / scale;
        let centred: Vec<f64> = values.iter().map(|v| (v - shift) * inv).collect();
        let mut bins = if values.len() == 1 {
            vec![Complex64::new(centred[0], 0.0)]
        } else {
            let mut spec = forward_rft(&centred)?.bins;
            spec.truncate(keep);
            spec
        };
        if augment && self.config.layout == SpectrumLayout::TwoSided {
            let mirrored = mirrored_bins(keep, values.len());
            let conj: Vec<Complex64> = bins[1..=mirrored].iter().map(|c| c.conj()).collect();
            bins.extend(conj);
        }
        Ok(bins)
    }

    fn check_len(what: &'static str, got: usize, expected: usize) -> Result<()> {
        if got == expected {
            Ok(())
        } else {
            Err(Error::ShapeMismatch { what, expected, got })
        }
    }

    /// Design row and target row for one pair, in the filtered Fourier domain.
    pub fn embed_pair(&self, pair: &SamplePair<'_>) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        Self::check_len("context", pair.context.len(), self.config.context_length)?;
        Self::check_len("target", pair.target.len(), self.config.horizon)?;
        if pair.channel >= self.channel_stats.len() {
            return Err(Error::ShapeMismatch {
                what: "channel index",
                expected: self.channel_stats.len(),
                got: pair.channel,
            });
        }
        let mu = if self.config.instance_norm { mean(pair.context) } else { 0.0 };
        let sigma = self.channel_scale(pair.channel);
        let x = self.features(pair.context, mu, sigma, self.filter.context_bins, true)?;
        let y = self.features(pair.target, mu, sigma, self.filter.target_bins, false)?;
        Ok((x, y))
    }

    /// Absorb a block of completed pairs and refresh the weight matrix.
    pub fn fit_block(&mut self, pairs: &[SamplePair<'_>]) -> Result<UpdatePath> {
        if pairs.is_empty() {
            return Err(Error::EmptyBlock);
        }
        let mut x = CMatrix::zeros(pairs.len(), self.context_dim());
        let mut y = CMatrix::zeros(pairs.len(), self.target_dim());
        for (r, pair) in pairs.iter().enumerate() {
            let (xr, yr) = self.embed_pair(pair)?;
            for (c, v) in xr.into_iter().enumerate() {
                x[(r, c)] = v;
            }
            for (c, v) in yr.into_iter().enumerate() {
                y[(r, c)] = v;
            }
        }
        self.ridge.fit_rows(&x, &y)
    }

    /// Forecast the next `H` values after `context`.
    pub fn predict(&self, context: &[f64]) -> Result<Vec<f64>> {
        Self::check_len("context", context.len(), self.config.context_length)?;
        let h = self.config.horizon;
        if self.ridge.n_samples() == 0 {
            return Ok(seasonal_tile(context, self.config.season, h));
        }
        let mu = if self.config.instance_norm { mean(context) } else { 0.0 };
        let z = self.features(context, mu, 1.0, self.filter.context_bins, true)?;
        let w = self.ridge.weight();
        let out: Vec<Complex64> = (0..w.ncols())
            .map(|j| z.iter().enumerate().map(|(i, zi)| zi * w[(i, j)]).sum())
            .collect();
        let mut y = if h == 1 {
            vec![out[0].re]
        } else {
            inverse_rft(&pad_spectrum(&Spectrum {
                bins: out,
                original_length: h,
            })?)?
        };
        if mu != 0.0 {
            y.iter_mut().for_each(|v| *v += mu);
        }
        Ok(y)
    }

    pub fn to_snapshot(&self) -> ForecasterSnapshot {
        ForecasterSnapshot {
            format: SNAPSHOT_FORMAT.to_string(),
            config: self.config,
            n_samples: self.ridge.n_samples(),
            a_inv: MatrixDump::from(self.ridge.a_inv()),
            gram_norm: MatrixDump::from(self.ridge.gram_norm()),
            cross_norm: MatrixDump::from(self.ridge.cross_norm()),
            weight: MatrixDump::from(self.ridge.weight()),
            channel_stats: self.channel_stats.clone(),
        }
    }

    pub fn from_snapshot(snap: ForecasterSnapshot) -> Result<Self> {
        if snap.format != SNAPSHOT_FORMAT {
            return Err(Error::config(format!("unsupported snapshot format '{}'", snap.format)));
        }
        let mut f = Forecaster::new(snap.config, snap.channel_stats.len())?;
        let (d, t) = (f.context_dim(), f.target_dim());
        let a_inv = snap.a_inv.into_matrix(d, d)?;
        let gram = snap.gram_norm.into_matrix(d, d)?;
        let cross = snap.cross_norm.into_matrix(d, t)?;
        let weight = snap.weight.into_matrix(d, t)?;
        f.ridge = OnlineRidge::from_parts(a_inv, gram, cross, weight, snap.n_samples, snap.config.lambda);
        f.ridge.strategy = snap.config.strategy;
        f.channel_stats = snap.channel_stats;
        Ok(f)
    }

    pub fn save_snapshot(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_snapshot()).expect("snapshot serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_snapshot(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let snap: ForecasterSnapshot = serde_json::from_str(&text).map_err(|e| Error::ParseError {
            path: path.to_path_buf(),
            line: e.line(),
            column: Some(e.column()),
            message: e.to_string(),
        })?;
        Self::from_snapshot(snap)
    }
}

/// Repeat the last `season` values of `context` forward `horizon` steps.
pub fn seasonal_tile(context: &[f64], season: usize, horizon: usize) -> Vec<f64> {
    let tail = &context[context.len() - season..];
    (0..horizon).map(|i| tail[i % season]).collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub const SNAPSHOT_FORMAT: &str = "adapts-forecaster/1";

/// Serialized forecaster state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecasterSnapshot {
    pub format: String,
    pub config: ForecasterConfig,
    pub n_samples: u64,
    pub a_inv: MatrixDump,
    pub gram_norm: MatrixDump,
    pub cross_norm: MatrixDump,
    pub weight: MatrixDump,
    pub channel_stats: Vec<RunningStats>,
}

/// Row-major complex matrix as interleaved `(re, im)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDump {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl From<&CMatrix> for MatrixDump {
    fn from(m: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(2 * m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push(m[(r, c)].re);
                data.push(m[(r, c)].im);
            }
        }
        MatrixDump {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl MatrixDump {
    fn into_matrix(self, rows: usize, cols: usize) -> Result<CMatrix> {
        if self.rows != rows || self.cols != cols || self.data.len() != 2 * rows * cols {
            return Err(Error::ShapeMismatch {
                what: "snapshot matrix",
                expected: rows * cols,
                got: self.data.len() / 2,
            });
        }
        Ok(CMatrix::from_fn(rows, cols, |r, c| {
            let i = 2 * (r * cols + c);
            Complex64::new(self.data[i], self.data[i + 1])
        }))
    }
}
