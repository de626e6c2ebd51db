//! Seeded synthetic series for demos and tests.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::harness::MultiSeries;

/// Seasonal pattern plus a stationary AR(1) component, per channel:
/// `x_t = s_c(t) + a_t`, `a_t = φ a_{t−1} + ε_t`, `ε_t ~ N(0, noise²)`.
#[derive(Debug, Clone, Copy)]
pub struct SeasonalAr {
    pub channels: usize,
    pub len: usize,
    pub season: usize,
    pub phi: f64,
    pub noise: f64,
    pub amplitude: f64,
}

impl Default for SeasonalAr {
    fn default() -> Self {
        SeasonalAr {
            channels: 3,
            len: 10_000,
            season: 24,
            phi: 0.9,
            noise: 1.0,
            amplitude: 3.0,
        }
    }
}

impl SeasonalAr {
    pub fn generate(&self, seed: u64) -> MultiSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, self.noise).expect("noise is finite and non-negative");
        let s = self.season as f64;
        let channels = (0..self.channels)
            .map(|c| {
                let phase = 0.7 * c as f64;
                let level = 10.0 * c as f64;
                let mut ar = 0.0;
                (0..self.len)
                    .map(|t| {
                        ar = self.phi * ar + normal.sample(&mut rng);
                        let tt = t as f64;
                        let seasonal = self.amplitude * (2.0 * PI * tt / s + phase).sin()
                            + 0.5 * self.amplitude * (4.0 * PI * tt / s + 2.0 * phase).cos();
                        level + seasonal + ar
                    })
                    .collect()
            })
            .collect();
        MultiSeries::new(channels)
    }
}

/// Noise-free series that switches generating process at `switch_at`:
/// a period-`season_before` pattern, then a pure sinusoid of period
/// `period_after`. Both regimes obey a short linear recursion.
#[derive(Debug, Clone, Copy)]
pub struct RegimeSwitch {
    pub len: usize,
    pub switch_at: usize,
    pub season_before: usize,
    pub period_after: f64,
    pub amplitude: f64,
}

impl RegimeSwitch {
    pub fn value(&self, t: usize) -> f64 {
        let tt = t as f64;
        if t < self.switch_at {
            let s = self.season_before as f64;
            self.amplitude * ((2.0 * PI * tt / s).sin() + 0.4 * (4.0 * PI * tt / s).cos())
        } else {
            self.amplitude * (2.0 * PI * tt / self.period_after).sin()
        }
    }

    pub fn generate(&self) -> MultiSeries {
        MultiSeries::new(vec![(0..self.len).map(|t| self.value(t)).collect()])
    }
}
