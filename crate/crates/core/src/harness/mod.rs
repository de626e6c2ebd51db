//! Rolling-window deployment simulator.
//!
//! The series is consumed one time step at a time. At every step `t >= L`
//! each channel gets a base forecast, an adapted-forecaster forecast and
//! their weighted combination from the context ending at `t`. Every `M`
//! steps the weighters learn from the windows whose targets have completed
//! and the forecaster is refit on the newly completed (context, target)
//! pairs. A [`Session`] only ever sees rows it has been handed, so nothing
//! downstream of it can read the future.

mod base;
mod report;

use std::borrow::Cow;
use std::collections::VecDeque;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecaster::{Forecaster, ForecasterConfig, SamplePair, SpectrumLayout, UpdateStrategy};
use crate::metrics::{block_average_mase, SeasonalScale};
use crate::weighter::{combine, BlockLosses, ChannelWeighter, WeighterParams};

pub use base::{
    make_base_forecaster, BaseForecaster, BaseKind, ForecastTable, HistoricalMean, NaiveSeasonal, Precomputed,
};
pub use report::{Aggregate, ChannelReport, RunReport, StreamMetrics, WeightRecord, WindowRecord};

/// How the per-channel weight on the base forecast is chosen after warm-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeighterMode {
    /// Merge of fast and slow weights.
    #[default]
    Full,
    SlowOnly,
    FastOnly,
    /// Fixed 0.5.
    Unweighted,
}

impl FromStr for WeighterMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(WeighterMode::Full),
            "slow" | "slow_only" => Ok(WeighterMode::SlowOnly),
            "fast" | "fast_only" => Ok(WeighterMode::FastOnly),
            "unweighted" => Ok(WeighterMode::Unweighted),
            other => Err(Error::config(format!(
                "unknown weighter mode '{other}' (expected full, slow, fast or unweighted)"
            ))),
        }
    }
}

impl fmt::Display for WeighterMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeighterMode::Full => "full",
            WeighterMode::SlowOnly => "slow",
            WeighterMode::FastOnly => "fast",
            WeighterMode::Unweighted => "unweighted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RollingConfig {
    pub context_length: usize,
    pub horizon: usize,
    pub update_period: usize,
    pub season: usize,
    pub lambda: f64,
    pub alpha: f64,
    pub eta: f64,
    pub fast_window: usize,
    pub warmup: usize,
    pub weighter_mode: WeighterMode,
    pub instance_norm: bool,
    pub channel_scaling: bool,
    pub shared_weights: bool,
    pub layout: SpectrumLayout,
    pub update_strategy: UpdateStrategy,
}

impl Default for RollingConfig {
    fn default() -> Self {
        RollingConfig {
            context_length: 520,
            horizon: 96,
            update_period: 200,
            season: 24,
            lambda: 20.0,
            alpha: 0.9,
            eta: 0.5,
            fast_window: 5,
            warmup: 5,
            weighter_mode: WeighterMode::Full,
            instance_norm: true,
            channel_scaling: true,
            shared_weights: true,
            layout: SpectrumLayout::TwoSided,
            update_strategy: UpdateStrategy::Auto,
        }
    }
}

impl RollingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.update_period < 1 {
            return Err(Error::config("update period M must be >= 1"));
        }
        if self.horizon < 1 {
            return Err(Error::config("horizon H must be >= 1"));
        }
        if self.season < 1 || self.season >= self.context_length {
            return Err(Error::config(format!(
                "seasonality must satisfy 1 <= S < L, got S={}, L={}",
                self.season, self.context_length
            )));
        }
        self.forecaster_config().validate()?;
        ChannelWeighter::new(self.weighter_params())?;
        Ok(())
    }

    pub fn forecaster_config(&self) -> ForecasterConfig {
        ForecasterConfig {
            context_length: self.context_length,
            horizon: self.horizon,
            season: self.season,
            lambda: self.lambda,
            alpha: self.alpha,
            layout: self.layout,
            instance_norm: self.instance_norm,
            channel_scaling: self.channel_scaling,
            strategy: self.update_strategy,
        }
    }

    pub fn weighter_params(&self) -> WeighterParams {
        WeighterParams {
            eta: self.eta,
            fast_window: self.fast_window,
            warmup_steps: self.warmup,
        }
    }

    /// Shortest series that yields at least one scored window.
    pub fn min_series_len(&self) -> usize {
        self.context_length + self.horizon + 1
    }
}

/// Random access to a multichannel series.
pub trait SeriesSource {
    fn num_channels(&self) -> usize;
    fn len(&self) -> usize;
    fn value(&self, channel: usize, index: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn channel_names(&self) -> Vec<String> {
        (0..self.num_channels()).map(|c| format!("ch{c}")).collect()
    }
}

/// In-memory multichannel series, one vector per channel.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MultiSeries {
    pub names: Vec<String>,
    /// Carried through untouched; integer indices are the clock.
    pub timestamps: Option<Vec<String>>,
    pub channels: Vec<Vec<f64>>,
}

impl MultiSeries {
    pub fn new(channels: Vec<Vec<f64>>) -> Self {
        let names = (0..channels.len()).map(|c| format!("ch{c}")).collect();
        MultiSeries {
            names,
            timestamps: None,
            channels,
        }
    }
}

impl SeriesSource for MultiSeries {
    fn num_channels(&self) -> usize {
        self.channels.len()
    }

    fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    fn value(&self, channel: usize, index: usize) -> f64 {
        self.channels[channel][index]
    }

    fn channel_names(&self) -> Vec<String> {
        self.names.clone()
    }
}

/// Which forecast of a bundle to score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stream {
    Base,
    Adapted,
    Combined,
    /// `w · base + (1 − w) · adapted` for an arbitrary `w`.
    Mix(f64),
}

/// Forecasts made at time `t` for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastBundle {
    pub t: usize,
    pub channel: usize,
    pub base: Vec<f64>,
    pub adapted: Vec<f64>,
    pub combined: Vec<f64>,
    pub weight: f64,
    /// Denominators from the context the forecasts were made from.
    pub scale: SeasonalScale,
    /// Filled once `t + H` has been observed.
    pub target: Option<Vec<f64>>,
}

impl ForecastBundle {
    pub fn fully_observed(&self) -> bool {
        self.target.is_some()
    }

    pub fn forecast(&self, stream: Stream) -> Cow<'_, [f64]> {
        match stream {
            Stream::Base => Cow::Borrowed(&self.base),
            Stream::Adapted => Cow::Borrowed(&self.adapted),
            Stream::Combined => Cow::Borrowed(&self.combined),
            Stream::Mix(w) => Cow::Owned(
                self.base
                    .iter()
                    .zip(&self.adapted)
                    .map(|(&b, &a)| w * b + (1.0 - w) * a)
                    .collect(),
            ),
        }
    }
}

/// Context end times of the pairs whose targets completed in
/// `(last_collected, t_now]`. A pair ending at `e` has context
/// `[e−L+1, e]` and target `[e+1, e+H]`; contexts start at `e = L`.
pub fn collect_completed_pairs(t_now: usize, last_collected: usize, context_length: usize, horizon: usize) -> Range<usize> {
    let end = (t_now + 1).saturating_sub(horizon);
    let start = (last_collected + 1).saturating_sub(horizon).max(context_length);
    start..end.max(start)
}

enum Forecasters {
    Shared(Box<Forecaster>),
    PerChannel(Vec<Forecaster>),
}

impl Forecasters {
    fn for_channel(&self, channel: usize) -> &Forecaster {
        match self {
            Forecasters::Shared(f) => f,
            Forecasters::PerChannel(fs) => &fs[channel],
        }
    }

    fn all_mut(&mut self) -> Vec<&mut Forecaster> {
        match self {
            Forecasters::Shared(f) => vec![f],
            Forecasters::PerChannel(fs) => fs.iter_mut().collect(),
        }
    }
}

/// Incremental rolling-window run, fed one row per time step.
pub struct Session {
    config: RollingConfig,
    names: Vec<String>,
    total_len: Option<usize>,
    history: Vec<Vec<f64>>,
    forecasters: Forecasters,
    weighters: Vec<ChannelWeighter>,
    pending: Vec<VecDeque<ForecastBundle>>,
    block: Vec<Vec<ForecastBundle>>,
    last_collected: usize,
    observed: usize,
    update_step: usize,
    windows: Vec<WindowRecord>,
    trajectories: Vec<WeightRecord>,
}

impl Session {
    /// `total_len`, when known, suppresses forecasts whose targets would run past the end.
    pub fn new(config: RollingConfig, names: Vec<String>, total_len: Option<usize>) -> Result<Self> {
        config.validate()?;
        let channels = names.len();
        if channels == 0 {
            return Err(Error::InsufficientData("series has no channels".into()));
        }
        let fc = config.forecaster_config();
        let forecasters = if config.shared_weights {
            Forecasters::Shared(Box::new(Forecaster::new(fc, channels)?))
        } else {
            Forecasters::PerChannel((0..channels).map(|_| Forecaster::new(fc, channels)).collect::<Result<_>>()?)
        };
        let weighters = (0..channels)
            .map(|_| ChannelWeighter::new(config.weighter_params()))
            .collect::<Result<_>>()?;
        Ok(Session {
            config,
            names,
            total_len,
            history: vec![Vec::new(); channels],
            forecasters,
            weighters,
            pending: vec![VecDeque::new(); channels],
            block: vec![Vec::new(); channels],
            last_collected: 0,
            observed: 0,
            update_step: 0,
            windows: Vec::new(),
            trajectories: Vec::new(),
        })
    }

    /// Index of the next row to be fed.
    pub fn now(&self) -> usize {
        self.history[0].len()
    }

    pub fn weighters(&self) -> &[ChannelWeighter] {
        &self.weighters
    }

    pub fn shared_forecaster(&self) -> Option<&Forecaster> {
        match &self.forecasters {
            Forecasters::Shared(f) => Some(f),
            Forecasters::PerChannel(_) => None,
        }
    }

    fn mode_weight(&self, channel: usize) -> f64 {
        let w = &self.weighters[channel];
        if w.in_warmup() {
            return 1.0;
        }
        match self.config.weighter_mode {
            WeighterMode::Full => w.current_weight(),
            WeighterMode::SlowOnly => w.w_slow(),
            WeighterMode::FastOnly => w.fast_weight(),
            WeighterMode::Unweighted => 0.5,
        }
    }

    /// Feed the row for time `now()`. Returns the bundles whose targets completed at this step.
    pub fn step(&mut self, row: &[f64], base: &mut dyn BaseForecaster) -> Result<Vec<ForecastBundle>> {
        let t = self.now();
        if row.len() != self.history.len() {
            return Err(Error::ShapeMismatch {
                what: "row",
                expected: self.history.len(),
                got: row.len(),
            });
        }
        if let Some(channel) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::CorruptSeries { channel, index: t });
        }
        for (h, &v) in self.history.iter_mut().zip(row) {
            h.push(v);
        }
        let (l, h) = (self.config.context_length, self.config.horizon);
        if t < l {
            return Ok(Vec::new());
        }

        let scored = self.score_completed(t)?;
        if t > l && (t - l).is_multiple_of(self.config.update_period) {
            self.update(t)?;
        }
        let forecastable = self.total_len.is_none_or(|n| t + h < n);
        if forecastable {
            for c in 0..self.history.len() {
                let context = &self.history[c][t + 1 - l..=t];
                let base_fc = base.forecast(t, c, context, h)?;
                if base_fc.len() != h {
                    return Err(Error::ShapeMismatch {
                        what: "base forecast",
                        expected: h,
                        got: base_fc.len(),
                    });
                }
                let adapted = self.forecasters.for_channel(c).predict(context)?;
                let weight = self.mode_weight(c);
                let combined = combine(&base_fc, &adapted, weight)?;
                let scale = SeasonalScale::from_context(context, self.config.season)?;
                self.pending[c].push_back(ForecastBundle {
                    t,
                    channel: c,
                    base: base_fc,
                    adapted,
                    combined,
                    weight,
                    scale,
                    target: None,
                });
            }
        }
        Ok(scored)
    }

    fn score_completed(&mut self, t: usize) -> Result<Vec<ForecastBundle>> {
        let h = self.config.horizon;
        let mut out = Vec::new();
        for c in 0..self.pending.len() {
            while self.pending[c].front().is_some_and(|b| b.t + h <= t) {
                let mut b = self.pending[c].pop_front().expect("front checked");
                let target = self.history[c][b.t + 1..=b.t + h].to_vec();
                let score = |f: &[f64]| -> Result<StreamMetrics> {
                    Ok(StreamMetrics {
                        mase: b.scale.mase(f, &target)?,
                        rmsse: b.scale.rmsse(f, &target)?,
                    })
                };
                self.windows.push(WindowRecord {
                    t: b.t,
                    channel: c,
                    weight: b.weight,
                    base: score(&b.base)?,
                    adapted: score(&b.adapted)?,
                    combined: score(&b.combined)?,
                    floored: b.scale.floored,
                });
                b.target = Some(target);
                out.push(b.clone());
                self.block[c].push(b);
            }
        }
        Ok(out)
    }

    fn update(&mut self, t: usize) -> Result<()> {
        self.update_step += 1;
        for c in 0..self.weighters.len() {
            let block = std::mem::take(&mut self.block[c]);
            let weighter = &mut self.weighters[c];
            let mut losses = None;
            if weighter.in_warmup() {
                weighter.advance_warmup();
            } else if !block.is_empty() {
                let l = BlockLosses {
                    base: block_average_mase(&block, Stream::Base)?,
                    adapted: block_average_mase(&block, Stream::Adapted)?,
                    fast_combo: block_average_mase(&block, Stream::Mix(weighter.fast_weight()))?,
                    slow_combo: block_average_mase(&block, Stream::Mix(weighter.w_slow()))?,
                };
                weighter.update(l)?;
                losses = Some(l);
            }
            let record = WeightRecord {
                update_step: self.update_step,
                t,
                channel: c,
                w_slow: self.weighters[c].w_slow(),
                w_fast: self.weighters[c].fast_weight(),
                beta_merge: self.weighters[c].beta_merge(),
                w: self.mode_weight(c),
                block_windows: block.len(),
                losses,
            };
            self.trajectories.push(record);
        }

        let mut row = vec![0.0; self.history.len()];
        for i in self.observed..=t {
            for (c, h) in self.history.iter().enumerate() {
                row[c] = h[i];
            }
            for f in self.forecasters.all_mut() {
                f.observe_values(&row)?;
            }
        }
        self.observed = t + 1;

        let (l, h) = (self.config.context_length, self.config.horizon);
        let ends = collect_completed_pairs(t, self.last_collected, l, h);
        self.last_collected = t;
        if ends.is_empty() {
            return Ok(());
        }
        let pair = |c: usize, e: usize| SamplePair {
            context: &self.history[c][e + 1 - l..=e],
            target: &self.history[c][e + 1..=e + h],
            channel: c,
        };
        match &mut self.forecasters {
            Forecasters::Shared(f) => {
                let pairs: Vec<SamplePair> = ends
                    .clone()
                    .flat_map(|e| (0..self.history.len()).map(move |c| (c, e)))
                    .map(|(c, e)| pair(c, e))
                    .collect();
                f.fit_block(&pairs)?;
            }
            Forecasters::PerChannel(fs) => {
                for (c, f) in fs.iter_mut().enumerate() {
                    let pairs: Vec<SamplePair> = ends.clone().map(|e| pair(c, e)).collect();
                    f.fit_block(&pairs)?;
                }
            }
        }
        Ok(())
    }

    pub fn finish(self, dataset: &str, base_name: &str) -> RunReport {
        let (channels, aggregate) = RunReport::summarize(&self.windows, &self.names);
        RunReport {
            dataset: dataset.to_string(),
            base_forecaster: base_name.to_string(),
            config: self.config,
            skipped_initial_steps: self.config.context_length,
            update_steps: self.update_step,
            channels,
            aggregate,
            trajectories: self.trajectories,
            windows: self.windows,
        }
    }
}

/// Run the whole series through a [`Session`].
pub fn run(series: &dyn SeriesSource, base: &mut dyn BaseForecaster, config: &RollingConfig) -> Result<RunReport> {
    run_with_sink(series, base, config, "series", &mut |_| {})
}

/// As [`run`], handing every scored bundle to `sink`.
pub fn run_with_sink(
    series: &dyn SeriesSource,
    base: &mut dyn BaseForecaster,
    config: &RollingConfig,
    dataset: &str,
    sink: &mut dyn FnMut(&ForecastBundle),
) -> Result<RunReport> {
    config.validate()?;
    let n = series.len();
    if series.num_channels() == 0 || n < config.min_series_len() {
        return Err(Error::InsufficientData(format!(
            "series has {n} steps and {} channels; need at least {} steps (L + H + 1) and one channel",
            series.num_channels(),
            config.min_series_len()
        )));
    }
    let mut session = Session::new(*config, series.channel_names(), Some(n))?;
    let mut row = vec![0.0; series.num_channels()];
    for t in 0..n {
        for (c, v) in row.iter_mut().enumerate() {
            *v = series.value(c, t);
        }
        for bundle in session.step(&row, base)? {
            sink(&bundle);
        }
    }
    let name = base.name().to_string();
    Ok(session.finish(dataset, &name))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> RollingConfig {
        RollingConfig {
            context_length: 16,
            horizon: 4,
            update_period: 10,
            season: 4,
            warmup: 1,
            ..RollingConfig::default()
        }
    }

    #[test]
    fn completed_pair_counts() {
        // 200 completions in the interval, none clipped by the first context.
        assert_eq!(collect_completed_pairs(1200, 1000, 520, 96).len(), 200);
        assert_eq!(collect_completed_pairs(1200, 1000, 520, 96), 905..1105);
        // Nothing completed yet.
        assert!(collect_completed_pairs(600, 0, 520, 96).is_empty());
        assert_eq!(collect_completed_pairs(616, 0, 520, 96), 520..521);
        for (now, last) in [(50usize, 20usize), (700, 0), (1000, 990)] {
            let r = collect_completed_pairs(now, last, 30, 12);
            assert!(r.end == r.start || r.end - 1 + 12 <= now);
        }
    }

    #[test]
    fn too_short_series() {
        let cfg = small_config();
        let series = MultiSeries::new(vec![vec![1.0; cfg.context_length + cfg.horizon]]);
        let mut base = NaiveSeasonal { season: 4 };
        assert!(matches!(run(&series, &mut base, &cfg), Err(Error::InsufficientData(_))));
        let series = MultiSeries::new(vec![(0..cfg.min_series_len()).map(|i| i as f64).collect()]);
        let report = run(&series, &mut base, &cfg).unwrap();
        assert_eq!(report.windows.len(), 1);
    }

    #[test]
    fn nan_is_reported_with_location() {
        let cfg = small_config();
        let mut ch: Vec<f64> = (0..60).map(|i| (i as f64).sin()).collect();
        ch[33] = f64::NAN;
        let series = MultiSeries::new(vec![vec![0.0; 60], ch]);
        let err = run(&series, &mut NaiveSeasonal { season: 4 }, &cfg).unwrap_err();
        assert!(matches!(err, Error::CorruptSeries { channel: 1, index: 33 }));
    }

    #[test]
    fn bundles_are_convex_combinations() {
        let cfg = small_config();
        let series = MultiSeries::new(vec![
            (0..200).map(|i| (i as f64 * 0.7).sin() + 0.01 * i as f64).collect(),
            (0..200).map(|i| (i as f64 * 0.2).cos() * 3.0).collect(),
        ]);
        let mut n = 0;
        let report = run_with_sink(&series, &mut HistoricalMean::default(), &cfg, "t", &mut |b| {
            n += 1;
            for i in 0..b.base.len() {
                let want = b.weight * b.base[i] + (1.0 - b.weight) * b.adapted[i];
                assert!((b.combined[i] - want).abs() <= 1e-12);
            }
            assert!(b.fully_observed());
        })
        .unwrap();
        assert_eq!(n, report.windows.len());
        assert_eq!(report.windows.len(), 2 * (200 - 16 - 4));
        let (channels, aggregate) = report.recomputed();
        assert_eq!(channels, report.channels);
        assert_eq!(aggregate, report.aggregate);
    }

    #[test]
    fn exact_seasonal_series_scores_zero() {
        let cfg = small_config();
        let pattern = [1.0, 4.0, 2.0, -3.0];
        let series = MultiSeries::new(vec![(0..300).map(|i| pattern[i % 4]).collect()]);
        let report = run(&series, &mut NaiveSeasonal { season: 4 }, &cfg).unwrap();
        assert_eq!(report.aggregate.base.mase, 0.0);
        // The adapted forecaster is not exact, but it only enters after warm-up.
        assert!(report.windows.iter().take(10).all(|w| w.combined.mase == 0.0));
    }

    #[test]
    fn weighter_mode_parsing() {
        for m in [WeighterMode::Full, WeighterMode::SlowOnly, WeighterMode::FastOnly, WeighterMode::Unweighted] {
            assert_eq!(m.to_string().parse::<WeighterMode>().unwrap(), m);
        }
        assert!("medium".parse::<WeighterMode>().is_err());
    }

    #[test]
    fn invalid_config_is_rejected() {
        let mut cfg = small_config();
        cfg.update_period = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = small_config();
        cfg.season = cfg.context_length;
        assert!(cfg.validate().is_err());
        let mut cfg = small_config();
        cfg.lambda = -1.0;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
    }
}
