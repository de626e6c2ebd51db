use serde::{Deserialize, Serialize};

use super::RollingConfig;
use crate::weighter::BlockLosses;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StreamMetrics {
    pub mase: f64,
    pub rmsse: f64,
}

/// Scores of a single forecast window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub t: usize,
    pub channel: usize,
    pub weight: f64,
    pub base: StreamMetrics,
    pub adapted: StreamMetrics,
    pub combined: StreamMetrics,
    pub floored: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelReport {
    pub channel: usize,
    pub name: String,
    pub windows: usize,
    pub floored_windows: usize,
    pub base: StreamMetrics,
    pub adapted: StreamMetrics,
    pub combined: StreamMetrics,
}

/// Weighter state of one channel right after an update step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightRecord {
    pub update_step: usize,
    pub t: usize,
    pub channel: usize,
    pub w_slow: f64,
    pub w_fast: f64,
    pub beta_merge: f64,
    /// Weight on the base forecast used until the next update step.
    pub w: f64,
    pub block_windows: usize,
    pub losses: Option<BlockLosses>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// How per-channel values are pooled.
    pub method: String,
    pub base: StreamMetrics,
    pub adapted: StreamMetrics,
    pub combined: StreamMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub dataset: String,
    pub base_forecaster: String,
    pub config: RollingConfig,
    pub skipped_initial_steps: usize,
    pub update_steps: usize,
    pub channels: Vec<ChannelReport>,
    pub aggregate: Aggregate,
    pub trajectories: Vec<WeightRecord>,
    pub windows: Vec<WindowRecord>,
}

fn mean_metrics<'a>(it: impl Iterator<Item = &'a StreamMetrics>) -> StreamMetrics {
    let (mut m, mut r, mut n) = (0.0, 0.0, 0usize);
    for s in it {
        m += s.mase;
        r += s.rmsse;
        n += 1;
    }
    if n == 0 {
        return StreamMetrics::default();
    }
    StreamMetrics {
        mase: m / n as f64,
        rmsse: r / n as f64,
    }
}

impl RunReport {
    /// Rebuild per-channel and aggregate metrics from the window records.
    pub(crate) fn summarize(
        windows: &[WindowRecord],
        names: &[String],
    ) -> (Vec<ChannelReport>, Aggregate) {
        let channels: Vec<ChannelReport> = names
            .iter()
            .enumerate()
            .map(|(c, name)| {
                let own: Vec<&WindowRecord> = windows.iter().filter(|w| w.channel == c).collect();
                ChannelReport {
                    channel: c,
                    name: name.clone(),
                    windows: own.len(),
                    floored_windows: own.iter().filter(|w| w.floored).count(),
                    base: mean_metrics(own.iter().map(|w| &w.base)),
                    adapted: mean_metrics(own.iter().map(|w| &w.adapted)),
                    combined: mean_metrics(own.iter().map(|w| &w.combined)),
                }
            })
            .collect();
        let aggregate = Aggregate {
            method: "mean_over_channels".to_string(),
            base: mean_metrics(channels.iter().map(|c| &c.base)),
            adapted: mean_metrics(channels.iter().map(|c| &c.adapted)),
            combined: mean_metrics(channels.iter().map(|c| &c.combined)),
        };
        (channels, aggregate)
    }

    /// Recompute the summaries from `windows`; equal to the stored ones for an intact report.
    pub fn recomputed(&self) -> (Vec<ChannelReport>, Aggregate) {
        let names: Vec<String> = self.channels.iter().map(|c| c.name.clone()).collect();
        Self::summarize(&self.windows, &names)
    }

    pub fn floored_windows(&self) -> usize {
        self.channels.iter().map(|c| c.floored_windows).sum()
    }
}
