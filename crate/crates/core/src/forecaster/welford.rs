use serde::{Deserialize, Serialize};

/// Single-pass running mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    /// Sample variance; `None` until two values have been seen.
    pub fn variance(&self) -> Option<f64> {
        (self.count >= 2).then(|| (self.m2 / (self.count - 1) as f64).max(0.0))
    }

    pub fn std_dev(&self) -> Option<f64> {
        self.variance().map(f64::sqrt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pass_variance(xs: &[f64]) -> f64 {
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
    }

    #[test]
    fn one_to_five() {
        let mut s = RunningStats::default();
        for x in [1.0, 2.0, 3.0, 4.0, 5.0] {
            s.push(x);
        }
        assert_eq!(s.mean, 3.0);
        assert!((s.variance().unwrap() - two_pass_variance(&[1.0, 2.0, 3.0, 4.0, 5.0])).abs() < 1e-12);
        assert!((s.variance().unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn constant_has_zero_variance() {
        let mut s = RunningStats::default();
        for _ in 0..4 {
            s.push(2.0);
        }
        assert_eq!(s.variance(), Some(0.0));
    }

    #[test]
    fn needs_two_values() {
        let mut s = RunningStats::default();
        assert_eq!(s.variance(), None);
        s.push(7.0);
        assert_eq!(s.variance(), None);
    }

    #[test]
    fn large_offset_is_stable() {
        let xs: Vec<f64> = (0..1000).map(|i| 1e6 + (i % 7) as f64).collect();
        let mut s = RunningStats::default();
        xs.iter().for_each(|&x| s.push(x));
        let want = two_pass_variance(&xs);
        assert!((s.variance().unwrap() - want).abs() / want < 1e-9);
    }
}
