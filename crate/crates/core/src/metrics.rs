//! Seasonally scaled error metrics (MASE, RMSSE).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{ForecastBundle, Stream};

/// Lower bound for metric denominators.
pub const SCALE_FLOOR: f64 = 1e-8;

/// In-sample seasonal-naive errors of a context, the metric denominators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeasonalScale {
    /// Mean absolute seasonal difference, floored.
    pub mae: f64,
    /// Mean squared seasonal difference, floored.
    pub mse: f64,
    /// Whether either denominator hit the floor.
    pub floored: bool,
}

impl SeasonalScale {
    pub fn from_context(context: &[f64], season: usize) -> Result<Self> {
        if season == 0 || season >= context.len() {
            return Err(Error::InvalidSeasonality {
                season,
                context: context.len(),
            });
        }
        let lags = (context.len() - season) as f64;
        let (abs, sq) = context
            .iter()
            .zip(&context[season..])
            .fold((0.0, 0.0), |(a, s), (x0, x1)| {
                let d = x1 - x0;
                (a + d.abs(), s + d * d)
            });
        let (mae, mse) = (abs / lags, sq / lags);
        Ok(SeasonalScale {
            mae: mae.max(SCALE_FLOOR),
            mse: mse.max(SCALE_FLOOR),
            floored: mae < SCALE_FLOOR || mse < SCALE_FLOOR,
        })
    }

    pub fn mase(&self, forecast: &[f64], target: &[f64]) -> Result<f64> {
        check_lengths(forecast, target)?;
        let mae = forecast.iter().zip(target).map(|(f, y)| (f - y).abs()).sum::<f64>() / target.len() as f64;
        Ok(mae / self.mae)
    }

    pub fn rmsse(&self, forecast: &[f64], target: &[f64]) -> Result<f64> {
        check_lengths(forecast, target)?;
        let mse = forecast.iter().zip(target).map(|(f, y)| (f - y).powi(2)).sum::<f64>() / target.len() as f64;
        Ok((mse / self.mse).sqrt())
    }
}

fn check_lengths(forecast: &[f64], target: &[f64]) -> Result<()> {
    if forecast.len() != target.len() || target.is_empty() {
        return Err(Error::ShapeMismatch {
            what: "forecast",
            expected: target.len(),
            got: forecast.len(),
        });
    }
    Ok(())
}

/// Mean absolute scaled error against the seasonal-naive error on the context.
pub fn mase(forecast: &[f64], target: &[f64], context: &[f64], season: usize) -> Result<f64> {
    SeasonalScale::from_context(context, season)?.mase(forecast, target)
}

/// Root mean squared scaled error.
pub fn rmsse(forecast: &[f64], target: &[f64], context: &[f64], season: usize) -> Result<f64> {
    SeasonalScale::from_context(context, season)?.rmsse(forecast, target)
}

/// Mean per-window MASE of one forecast stream over a block of scored bundles.
pub fn block_average_mase(bundles: &[ForecastBundle], stream: Stream) -> Result<f64> {
    if bundles.is_empty() {
        return Err(Error::EmptyBlock);
    }
    let mut total = 0.0;
    for b in bundles {
        let target = b.target.as_deref().ok_or_else(|| {
            Error::InsufficientData(format!("target for t={} channel={} not yet observed", b.t, b.channel))
        })?;
        total += b.scale.mase(&b.forecast(stream), target)?;
    }
    Ok(total / bundles.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_forecast_scores_zero() {
        let ctx = [1.0, 3.0, 2.0, 5.0];
        assert_eq!(mase(&[1.0, 2.0], &[1.0, 2.0], &ctx, 1).unwrap(), 0.0);
        assert_eq!(rmsse(&[1.0, 2.0], &[1.0, 2.0], &ctx, 1).unwrap(), 0.0);
    }

    #[test]
    fn hand_checked_values() {
        let m = mase(&[1.0, 1.0], &[0.0, 1.0], &[0.0, 1.0, 0.0, 1.0], 1).unwrap();
        assert!((m - 0.5).abs() < 1e-12);
        let r = rmsse(&[1.0], &[0.0], &[0.0, 2.0, 0.0, 2.0], 1).unwrap();
        assert!((r - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_term_rmsse_equals_mase() {
        let ctx = [1.0, 4.0];
        let (f, y) = ([2.5], [0.75]);
        let a = mase(&f, &y, &ctx, 1).unwrap();
        let b = rmsse(&f, &y, &ctx, 1).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn bad_season() {
        assert!(matches!(
            mase(&[1.0], &[1.0], &[1.0, 2.0], 2),
            Err(Error::InvalidSeasonality { .. })
        ));
        assert!(mase(&[1.0], &[1.0], &[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn flat_context_is_floored() {
        let s = SeasonalScale::from_context(&[2.0; 6], 2).unwrap();
        assert!(s.floored);
        assert_eq!(s.mae, SCALE_FLOOR);
        let m = s.mase(&[2.0 + 1e-9], &[2.0]).unwrap();
        assert!(m.is_finite());
    }

    fn scaled(v: &[f64], c: f64, shift: f64) -> Vec<f64> {
        v.iter().map(|x| c * x + shift).collect()
    }

    proptest! {
        #[test]
        fn invariances(
            ctx in prop::collection::vec(-100.0f64..100.0, 6..40),
            f in prop::collection::vec(-100.0f64..100.0, 4),
            y in prop::collection::vec(-100.0f64..100.0, 4),
            c in 0.01f64..100.0,
            shift in -1e3f64..1e3,
        ) {
            let s = 2;
            let scale = SeasonalScale::from_context(&ctx, s).unwrap();
            prop_assume!(!scale.floored && scale.mae > 1e-3);
            let m = mase(&f, &y, &ctx, s).unwrap();
            let r = rmsse(&f, &y, &ctx, s).unwrap();
            prop_assert!(m >= 0.0 && r >= 0.0);
            let ms = mase(&scaled(&f, c, 0.0), &scaled(&y, c, 0.0), &scaled(&ctx, c, 0.0), s).unwrap();
            let rs = rmsse(&scaled(&f, c, 0.0), &scaled(&y, c, 0.0), &scaled(&ctx, c, 0.0), s).unwrap();
            prop_assert!((m - ms).abs() <= 1e-12 * m.max(1.0));
            prop_assert!((r - rs).abs() <= 1e-12 * r.max(1.0));
            let mt = mase(&scaled(&f, 1.0, shift), &scaled(&y, 1.0, shift), &scaled(&ctx, 1.0, shift), s).unwrap();
            // Translation only perturbs rounding, at the magnitude of the shifted values.
            prop_assert!((m - mt).abs() <= 1e-12 * (shift.abs() + 100.0) / scale.mae * 4.0);
        }

        #[test]
        fn always_finite(
            ctx in prop::collection::vec(-1e6f64..1e6, 3..20),
            f in prop::collection::vec(-1e6f64..1e6, 3),
            y in prop::collection::vec(-1e6f64..1e6, 3),
        ) {
            let flat = vec![ctx[0]; ctx.len()];
            for c in [&ctx, &flat] {
                let m = mase(&f, &y, c, 1).unwrap();
                let r = rmsse(&f, &y, c, 1).unwrap();
                prop_assert!(m.is_finite() && m >= 0.0 && r.is_finite() && r >= 0.0);
            }
        }
    }
}
