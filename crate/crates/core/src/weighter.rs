//! Per-channel exponential weighting of the base and adapted forecasts.
//!
//! Three exponential weighters run side by side. The slow weighter uses
//! every loss since warm-up, the fast weighter only the last `B`, and the
//! merge weighter learns how to mix the two from the losses their combined
//! forecasts would have incurred.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One exponential-weights step: `ω_k ∝ prev_k · exp(−η · loss_k)`.
pub fn exp_weight_step(prev: &[f64], losses: &[f64], eta: f64) -> Result<Vec<f64>> {
    if prev.len() != losses.len() {
        return Err(Error::ShapeMismatch {
            what: "losses",
            expected: prev.len(),
            got: losses.len(),
        });
    }
    if let Some(&bad) = losses.iter().find(|l| l.is_nan()) {
        return Err(Error::InvalidLoss(bad));
    }
    let logits: Vec<f64> = prev
        .iter()
        .zip(losses)
        .map(|(&w, &l)| if w > 0.0 { w.ln() - eta * l } else { f64::NEG_INFINITY })
        .collect();
    softmax(&logits)
}

/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::DegenerateWeights);
    }
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// `1 / (1 + e^{−z})` without overflow.
fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Weight on the first of two forecasters after `η`-weighting the given losses from a uniform start.
fn pairwise_weight(loss_first: f64, loss_second: f64, eta: f64) -> f64 {
    logistic(-eta * (loss_first - loss_second))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeighterParams {
    pub eta: f64,
    pub fast_window: usize,
    pub warmup_steps: usize,
}

impl Default for WeighterParams {
    fn default() -> Self {
        WeighterParams {
            eta: 0.5,
            fast_window: 5,
            warmup_steps: 5,
        }
    }
}

/// Losses for one update step of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockLosses {
    pub base: f64,
    pub adapted: f64,
    /// Combining with the previous fast weight.
    pub fast_combo: f64,
    /// Combining with the previous slow weight.
    pub slow_combo: f64,
}

impl BlockLosses {
    fn validate(&self) -> Result<()> {
        for l in [self.base, self.adapted, self.fast_combo, self.slow_combo] {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::InvalidLoss(l));
            }
        }
        Ok(())
    }
}

/// Weighter state for one channel. `w_*` values are the weight on the base forecast.
///
/// Two-expert weights are kept as log-odds: the exponential-weights step is
/// then a plain addition, and a weight saturating near 1 doesn't lose the
/// precision of its complement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelWeighter {
    pub params: WeighterParams,
    slow_logit: f64,
    fast_losses: VecDeque<(f64, f64)>,
    merge_logit: f64,
    update_count: usize,
}

impl ChannelWeighter {
    pub fn new(params: WeighterParams) -> Result<Self> {
        if !(params.eta >= 0.0 && params.eta.is_finite()) {
            return Err(Error::config(format!("eta must be non-negative, got {}", params.eta)));
        }
        if params.fast_window == 0 {
            return Err(Error::config("fast window must be >= 1"));
        }
        Ok(ChannelWeighter {
            params,
            slow_logit: 0.0,
            fast_losses: VecDeque::with_capacity(params.fast_window),
            merge_logit: 0.0,
            update_count: 0,
        })
    }

    pub fn w_slow(&self) -> f64 {
        logistic(self.slow_logit)
    }

    pub fn beta_merge(&self) -> f64 {
        logistic(self.merge_logit)
    }

    pub fn update_count(&self) -> usize {
        self.update_count
    }

    pub fn in_warmup(&self) -> bool {
        self.update_count < self.params.warmup_steps
    }

    pub fn fast_losses(&self) -> impl Iterator<Item = &(f64, f64)> {
        self.fast_losses.iter()
    }

    /// Softmax of the buffered losses; 0.5 when nothing is buffered.
    pub fn fast_weight(&self) -> f64 {
        let (a, b) = self
            .fast_losses
            .iter()
            .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
        pairwise_weight(a, b, self.params.eta)
    }

    /// The weight applied to the base forecast right now.
    pub fn current_weight(&self) -> f64 {
        if self.in_warmup() {
            return 1.0;
        }
        let beta = self.beta_merge();
        beta * self.fast_weight() + (1.0 - beta) * self.w_slow()
    }

    /// Count an update step without learning from it.
    pub fn advance_warmup(&mut self) {
        self.update_count += 1;
    }

    /// Slow, fast and merge updates from one block of losses.
    pub fn update(&mut self, losses: BlockLosses) -> Result<()> {
        losses.validate()?;
        let eta = self.params.eta;
        // ln(ω₁/ω₂) − η(ℓ₁ − ℓ₂): the exponential-weights step in log-odds.
        self.slow_logit -= eta * (losses.base - losses.adapted);
        self.merge_logit -= eta * (losses.fast_combo - losses.slow_combo);
        if self.fast_losses.len() == self.params.fast_window {
            self.fast_losses.pop_front();
        }
        self.fast_losses.push_back((losses.base, losses.adapted));
        self.update_count += 1;
        Ok(())
    }
}

/// Elementwise `w · base + (1 − w) · adapted`.
pub fn combine(base: &[f64], adapted: &[f64], w: f64) -> Result<Vec<f64>> {
    if base.len() != adapted.len() {
        return Err(Error::ShapeMismatch {
            what: "adapted forecast",
            expected: base.len(),
            got: adapted.len(),
        });
    }
    Ok(base
        .iter()
        .zip(adapted)
        .map(|(&b, &a)| w * b + (1.0 - w) * a)
        .collect())
}
