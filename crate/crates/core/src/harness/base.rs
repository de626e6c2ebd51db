use std::collections::HashMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecaster::seasonal_tile;

/// A fixed forecaster whose output gets adapted.
///
/// Implementations must be deterministic in their inputs and must not look
/// past the end of `context`, which ends at time `t`.
pub trait BaseForecaster {
    fn name(&self) -> &str;

    fn forecast(&mut self, t: usize, channel: usize, context: &[f64], horizon: usize) -> Result<Vec<f64>>;
}

impl<B: BaseForecaster + ?Sized> BaseForecaster for Box<B> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn forecast(&mut self, t: usize, channel: usize, context: &[f64], horizon: usize) -> Result<Vec<f64>> {
        (**self).forecast(t, channel, context, horizon)
    }
}

/// Repeats the last season of the context.
#[derive(Debug, Clone)]
pub struct NaiveSeasonal {
    pub season: usize,
}

impl BaseForecaster for NaiveSeasonal {
    fn name(&self) -> &str {
        "naive_seasonal"
    }

    fn forecast(&mut self, _t: usize, _channel: usize, context: &[f64], horizon: usize) -> Result<Vec<f64>> {
        if self.season == 0 || self.season > context.len() {
            return Err(Error::InvalidSeasonality {
                season: self.season,
                context: context.len(),
            });
        }
        Ok(seasonal_tile(context, self.season, horizon))
    }
}

/// Flat forecast at the mean of every value of the channel seen so far.
#[derive(Debug, Clone, Default)]
pub struct HistoricalMean {
    seen: HashMap<usize, (f64, u64, usize)>,
}

impl BaseForecaster for HistoricalMean {
    fn name(&self) -> &str {
        "historical_mean"
    }

    fn forecast(&mut self, t: usize, channel: usize, context: &[f64], horizon: usize) -> Result<Vec<f64>> {
        let entry = self.seen.entry(channel).or_insert((0.0, 0, usize::MAX));
        let (sum, count, last_t) = entry;
        let fresh = if *last_t == usize::MAX {
            context.len()
        } else {
            t.saturating_sub(*last_t).min(context.len())
        };
        for v in &context[context.len() - fresh..] {
            *sum += v;
            *count += 1;
        }
        *last_t = t;
        let mean = if *count == 0 { 0.0 } else { *sum / *count as f64 };
        Ok(vec![mean; horizon])
    }
}

/// Forecasts read from a table keyed by `(t, channel)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ForecastTable {
    pub horizon: usize,
    pub rows: HashMap<(usize, usize), Vec<f64>>,
}

impl ForecastTable {
    pub fn new(horizon: usize) -> Self {
        ForecastTable {
            horizon,
            rows: HashMap::new(),
        }
    }

    pub fn insert(&mut self, t: usize, channel: usize, forecast: Vec<f64>) {
        self.rows.insert((t, channel), forecast);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows sorted by `(t, channel)`.
    pub fn sorted(&self) -> Vec<(usize, usize, &[f64])> {
        let mut out: Vec<_> = self.rows.iter().map(|(&(t, c), v)| (t, c, v.as_slice())).collect();
        out.sort_by_key(|&(t, c, _)| (t, c));
        out
    }
}

#[derive(Debug, Clone)]
pub struct Precomputed {
    table: ForecastTable,
}

impl Precomputed {
    pub fn new(table: ForecastTable) -> Self {
        Precomputed { table }
    }
}

impl BaseForecaster for Precomputed {
    fn name(&self) -> &str {
        "precomputed"
    }

    fn forecast(&mut self, t: usize, channel: usize, _context: &[f64], horizon: usize) -> Result<Vec<f64>> {
        if self.table.horizon != horizon {
            return Err(Error::ShapeMismatch {
                what: "precomputed horizon",
                expected: horizon,
                got: self.table.horizon,
            });
        }
        self.table
            .rows
            .get(&(t, channel))
            .cloned()
            .ok_or(Error::MissingForecast { t, channel })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseKind {
    NaiveSeasonal,
    HistoricalMean,
    Precomputed,
}

impl FromStr for BaseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive_seasonal" => Ok(BaseKind::NaiveSeasonal),
            "historical_mean" => Ok(BaseKind::HistoricalMean),
            "precomputed" => Ok(BaseKind::Precomputed),
            other => Err(Error::config(format!(
                "unknown base forecaster '{other}' (expected naive_seasonal, historical_mean or precomputed)"
            ))),
        }
    }
}

impl BaseKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BaseKind::NaiveSeasonal => "naive_seasonal",
            BaseKind::HistoricalMean => "historical_mean",
            BaseKind::Precomputed => "precomputed",
        }
    }
}

pub fn make_base_forecaster(
    kind: BaseKind,
    season: usize,
    forecasts: Option<ForecastTable>,
) -> Result<Box<dyn BaseForecaster>> {
    Ok(match kind {
        BaseKind::NaiveSeasonal => {
            if season == 0 {
                return Err(Error::config("naive seasonal base needs a season >= 1"));
            }
            Box::new(NaiveSeasonal { season })
        }
        BaseKind::HistoricalMean => Box::new(HistoricalMean::default()),
        BaseKind::Precomputed => {
            let table = forecasts.ok_or_else(|| Error::config("precomputed base needs a forecast file"))?;
            Box::new(Precomputed::new(table))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_seasonal_tiles() {
        let ctx: Vec<f64> = (0..30).map(f64::from).collect();
        let mut b = make_base_forecaster(BaseKind::NaiveSeasonal, 24, None).unwrap();
        let y = b.forecast(29, 0, &ctx, 26).unwrap();
        assert_eq!(&y[..24], &ctx[6..]);
        assert_eq!(&y[24..], &ctx[6..8]);
    }

    #[test]
    fn historical_mean_tracks_running_mean() {
        let series: Vec<f64> = (0..10).map(|i| (i * i) as f64).collect();
        let mut b = HistoricalMean::default();
        let l = 4;
        for t in (l - 1)..series.len() {
            let y = b.forecast(t, 0, &series[t + 1 - l..=t], 3).unwrap();
            let want = series[..=t].iter().sum::<f64>() / (t + 1) as f64;
            assert!(y.iter().all(|v| (v - want).abs() < 1e-12));
        }
        // Other channels start fresh.
        let y = b.forecast(9, 1, &[1.0, 3.0], 1).unwrap();
        assert_eq!(y, vec![2.0]);
    }

    #[test]
    fn precomputed_lookup() {
        let mut table = ForecastTable::new(2);
        table.insert(5, 1, vec![1.0, 2.0]);
        let mut b = make_base_forecaster(BaseKind::Precomputed, 1, Some(table)).unwrap();
        assert_eq!(b.forecast(5, 1, &[], 2).unwrap(), vec![1.0, 2.0]);
        assert!(matches!(b.forecast(5, 0, &[], 2), Err(Error::MissingForecast { t: 5, channel: 0 })));
        assert!(matches!(b.forecast(5, 1, &[], 3), Err(Error::ShapeMismatch { .. })));
        assert!(make_base_forecaster(BaseKind::Precomputed, 1, None).is_err());
    }

    #[test]
    fn kind_parsing() {
        for k in [BaseKind::NaiveSeasonal, BaseKind::HistoricalMean, BaseKind::Precomputed] {
            assert_eq!(k.as_str().parse::<BaseKind>().unwrap(), k);
        }
        assert!("arima".parse::<BaseKind>().is_err());
    }
}
