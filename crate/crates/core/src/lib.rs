//! Online adaption of a fixed base forecaster.
//!
//! A Fourier-domain linear forecaster is refit from streaming feedback with
//! Woodbury updates, and its forecasts are blended with the base forecaster's
//! through per-channel fast/slow/merge exponential weighting. The
//! [`harness`] replays a multichannel series in a rolling window and scores
//! every stream with MASE and RMSSE.
//!
//! ```
//! use adapts_core::{run, NaiveSeasonal, RollingConfig};
//! use adapts_core::synthetic::SeasonalAr;
//!
//! let series = SeasonalAr { channels: 1, len: 600, ..SeasonalAr::default() }.generate(1);
//! let config = RollingConfig { context_length: 96, horizon: 12, update_period: 50, ..RollingConfig::default() };
//! let report = run(&series, &mut NaiveSeasonal { season: 24 }, &config).unwrap();
//! assert_eq!(report.channels.len(), 1);
//! ```

pub mod error;
pub mod forecaster;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod spectral;
pub mod synthetic;
pub mod weighter;

pub use error::{Error, Result};
pub use forecaster::{
    Forecaster, ForecasterConfig, OnlineRidge, RunningStats, SamplePair, SpectrumLayout, UpdatePath, UpdateStrategy,
};
pub use harness::{
    collect_completed_pairs, make_base_forecaster, run, run_with_sink, BaseForecaster, BaseKind, ForecastBundle,
    ForecastTable, HistoricalMean, MultiSeries, NaiveSeasonal, Precomputed, RollingConfig, RunReport, SeriesSource,
    Session, Stream, WeighterMode,
};
pub use io::{ReportFormat, RunConfigFile};
pub use metrics::{mase, rmsse, SeasonalScale};
pub use spectral::{FilterSpec, Spectrum};
pub use weighter::{combine, exp_weight_step, BlockLosses, ChannelWeighter, WeighterParams};
