//! Real-input discrete Fourier transforms and low-pass truncation.
//!
//! The forward transform is unscaled and the inverse carries the `1/n`
//! factor, so `inverse_rft(forward_rft(x)) == x`. Spectra are one-sided:
//! bin 0 is the DC term and a length-`n` signal has `n / 2 + 1` bins.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// One-sided spectrum of a real signal, lowest frequency first.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub bins: Vec<Complex64>,
    pub original_length: usize,
}

impl Spectrum {
    /// Number of bins in the unfiltered one-sided spectrum of a length-`n` signal.
    pub fn full_bins(n: usize) -> usize {
        n / 2 + 1
    }

    pub fn is_filtered(&self) -> bool {
        self.bins.len() < Self::full_bins(self.original_length)
    }
}

/// Number of retained bins when keeping the lowest `alpha` share of a
/// length-`n` signal's one-sided spectrum. Always at least one (DC).
pub fn keep_count(alpha: f64, n: usize) -> usize {
    let full = Spectrum::full_bins(n);
    // Guard against 0.9 * 10 = 9.000000000000002 style round-up.
    let raw = alpha * full as f64;
    let nearest = raw.round();
    let keep = if (raw - nearest).abs() < 1e-9 {
        nearest as usize
    } else {
        raw.ceil() as usize
    };
    keep.clamp(1, full)
}

/// Low-pass filter shape for a forecaster with context length `L` and horizon `H`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub alpha: f64,
    pub context_bins: usize,
    pub target_bins: usize,
}

impl FilterSpec {
    pub fn new(alpha: f64, context_length: usize, horizon: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::config(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        Ok(FilterSpec {
            alpha,
            context_bins: keep_count(alpha, context_length),
            target_bins: keep_count(alpha, horizon),
        })
    }
}

/// One-sided DFT of a real signal with unit forward scaling.
pub fn forward_rft(signal: &[f64]) -> Result<Spectrum> {
    let n = signal.len();
    if n < 2 {
        return Err(Error::SignalTooShort(n));
    }
    let mut buf: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n));
    fft.process(&mut buf);
    buf.truncate(Spectrum::full_bins(n));
    Ok(Spectrum {
        bins: buf,
        original_length: n,
    })
}

/// Inverse of [`forward_rft`]. The spectrum must be unfiltered; use
/// [`pad_spectrum`] first on the output of [`lowpass`].
///
/// Imaginary parts of the DC and (for even lengths) Nyquist bins are ignored.
pub fn inverse_rft(spec: &Spectrum) -> Result<Vec<f64>> {
    let n = spec.original_length;
    let full = Spectrum::full_bins(n);
    if n < 2 || spec.bins.len() != full {
        return Err(Error::MalformedSpectrum {
            bins: spec.bins.len(),
            length: n,
        });
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[..full].copy_from_slice(&spec.bins);
    for k in 1..full {
        if n - k >= full {
            buf[n - k] = spec.bins[k].conj();
        }
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n));
    fft.process(&mut buf);
    let scale = 1.0 / n as f64;
    Ok(buf.into_iter().map(|c| c.re * scale).collect())
}

/// Keep the lowest `keep` bins.
pub fn lowpass(spec: &Spectrum, keep: usize) -> Result<Spectrum> {
    if keep == 0 || keep > spec.bins.len() {
        return Err(Error::InvalidFilter {
            keep,
            available: spec.bins.len(),
        });
    }
    Ok(Spectrum {
        bins: spec.bins[..keep].to_vec(),
        original_length: spec.original_length,
    })
}

/// Re-append discarded high-frequency bins as zeros.
pub fn pad_spectrum(spec: &Spectrum) -> Result<Spectrum> {
    let full = Spectrum::full_bins(spec.original_length);
    if spec.bins.len() > full || spec.bins.is_empty() {
        return Err(Error::MalformedSpectrum {
            bins: spec.bins.len(),
            length: spec.original_length,
        });
    }
    let mut bins = spec.bins.clone();
    bins.resize(full, Complex64::new(0.0, 0.0));
    Ok(Spectrum {
        bins,
        original_length: spec.original_length,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// O(n^2) one-sided DFT used as an independent oracle.
    fn dft_oracle(x: &[f64]) -> Vec<Complex64> {
        let n = x.len();
        (0..=n / 2)
            .map(|k| {
                x.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (t, &v)| {
                    let ang = -2.0 * PI * (k * t) as f64 / n as f64;
                    acc + Complex64::new(v * ang.cos(), v * ang.sin())
                })
            })
            .collect()
    }

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn constant_signal_only_has_dc() {
        let s = forward_rft(&[3.0, 3.0, 3.0, 3.0]).unwrap();
        assert_eq!(s.bins.len(), 3);
        assert!((s.bins[0] - Complex64::new(12.0, 0.0)).norm() < 1e-12);
        assert!(s.bins[1].norm() < 1e-12 && s.bins[2].norm() < 1e-12);
    }

    #[test]
    fn zero_signal() {
        let s = forward_rft(&[0.0; 8]).unwrap();
        assert_eq!(s.bins.len(), 5);
        assert!(s.bins.iter().all(|b| b.norm() == 0.0));
    }

    #[test]
    fn cosine_lands_in_bin_one() {
        let x: Vec<f64> = (0..8).map(|t| (2.0 * PI * t as f64 / 8.0).cos()).collect();
        let oracle = dft_oracle(&x);
        let s = forward_rft(&x).unwrap();
        for (k, (got, want)) in s.bins.iter().zip(&oracle).enumerate() {
            assert!((got - want).norm() < 1e-12, "bin {k}");
        }
        assert!((s.bins[1] - Complex64::new(4.0, 0.0)).norm() < 1e-12);
        for k in [0, 2, 3, 4] {
            assert!(s.bins[k].norm() < 1e-12);
        }
    }

    #[test]
    fn matches_oracle_for_odd_and_even_lengths() {
        for n in [2usize, 3, 7, 16, 33] {
            let x: Vec<f64> = (0..n).map(|t| ((t * 7 + 3) % 11) as f64 - 4.5).collect();
            let s = forward_rft(&x).unwrap();
            for (got, want) in s.bins.iter().zip(dft_oracle(&x)) {
                assert!((got - want).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn too_short() {
        assert!(matches!(forward_rft(&[1.0]), Err(Error::SignalTooShort(1))));
    }

    #[test]
    fn round_trip_small() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let back = inverse_rft(&forward_rft(&x).unwrap()).unwrap();
        assert!(max_abs_diff(&x, &back) < 1e-10);
    }

    #[test]
    fn dc_only_spectrum_inverts_to_constant() {
        let n = 6;
        let mut bins = vec![Complex64::new(0.0, 0.0); 4];
        bins[0] = Complex64::new(n as f64 * 2.5, 0.0);
        let x = inverse_rft(&Spectrum { bins, original_length: n }).unwrap();
        assert!(x.iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn inverse_rejects_filtered_spectrum() {
        let s = lowpass(&forward_rft(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 2).unwrap();
        assert!(matches!(inverse_rft(&s), Err(Error::MalformedSpectrum { .. })));
    }

    #[test]
    fn lowpass_edges() {
        let s = forward_rft(&[1.0, -2.0, 0.5, 4.0, 3.0]).unwrap();
        assert_eq!(lowpass(&s, s.bins.len()).unwrap(), s);
        let dc = lowpass(&s, 1).unwrap();
        assert_eq!(dc.bins, vec![s.bins[0]]);
        assert!(matches!(lowpass(&s, 0), Err(Error::InvalidFilter { .. })));
        assert!(matches!(lowpass(&s, 4), Err(Error::InvalidFilter { .. })));
    }

    #[test]
    fn keep_counts() {
        assert_eq!(keep_count(0.9, 520), 235);
        assert_eq!(keep_count(0.9, 96), 45);
        assert_eq!(keep_count(0.01, 10), 1);
        assert_eq!(keep_count(1.0, 7), 4);
        let f = FilterSpec::new(0.9, 520, 96).unwrap();
        assert_eq!((f.context_bins, f.target_bins), (235, 45));
        assert!(FilterSpec::new(0.0, 10, 4).is_err());
        assert!(FilterSpec::new(1.5, 10, 4).is_err());
    }

    #[test]
    fn pad_restores_length() {
        let s = forward_rft(&[0.3, 1.0, -1.0, 2.0, 0.0, 5.0]).unwrap();
        assert_eq!(pad_spectrum(&s).unwrap(), s);
        let p = pad_spectrum(&lowpass(&s, 2).unwrap()).unwrap();
        assert_eq!(p.bins.len(), s.bins.len());
        assert_eq!(&p.bins[..2], &s.bins[..2]);
        assert!(p.bins[2..].iter().all(|b| b.norm() == 0.0));
    }

    #[test]
    fn retained_cosine_survives_filtering() {
        let n = 32;
        let x: Vec<f64> = (0..n)
            .map(|t| 1.5 * (2.0 * PI * 3.0 * t as f64 / n as f64 + 0.4).cos())
            .collect();
        let filtered = lowpass(&forward_rft(&x).unwrap(), 5).unwrap();
        let back = inverse_rft(&pad_spectrum(&filtered).unwrap()).unwrap();
        assert!(max_abs_diff(&x, &back) < 1e-10);
    }

    fn reconstruct(x: &[f64], keep: usize) -> Vec<f64> {
        let s = lowpass(&forward_rft(x).unwrap(), keep).unwrap();
        inverse_rft(&pad_spectrum(&s).unwrap()).unwrap()
    }

    fn norm(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    proptest! {
        #[test]
        fn round_trip(x in prop::collection::vec(-1e6f64..1e6, 2..512)) {
            let back = inverse_rft(&forward_rft(&x).unwrap()).unwrap();
            let scale = norm(&x).max(1.0);
            prop_assert!(max_abs_diff(&x, &back) <= 1e-9 * scale);
        }

        #[test]
        fn linear(
            pair in (2usize..128).prop_flat_map(|n| (
                prop::collection::vec(-1e3f64..1e3, n),
                prop::collection::vec(-1e3f64..1e3, n),
            )),
            a in -10.0f64..10.0,
            b in -10.0f64..10.0,
        ) {
            let (x, y) = pair;
            let mix: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
            let fm = forward_rft(&mix).unwrap();
            let fx = forward_rft(&x).unwrap();
            let fy = forward_rft(&y).unwrap();
            let scale = fm.bins.iter().map(|c| c.norm()).fold(1.0, f64::max);
            for k in 0..fm.bins.len() {
                let want = fx.bins[k] * a + fy.bins[k] * b;
                prop_assert!((fm.bins[k] - want).norm() <= 1e-9 * scale);
            }
        }

        #[test]
        fn filter_pad_idempotent_and_energy_monotone(
            x in prop::collection::vec(-100.0f64..100.0, 2..200),
            frac in 0.01f64..1.0,
        ) {
            let keep = keep_count(frac, x.len());
            let once = reconstruct(&x, keep);
            let twice = reconstruct(&once, keep);
            prop_assert!(max_abs_diff(&once, &twice) <= 1e-9 * norm(&x).max(1.0));
            prop_assert!(norm(&once) <= norm(&x) * (1.0 + 1e-12) + 1e-12);
        }
    }
}
