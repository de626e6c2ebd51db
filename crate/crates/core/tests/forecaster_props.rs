use adapts_core::{Forecaster, ForecasterConfig, SamplePair, UpdateStrategy};
use proptest::prelude::*;

fn series(seed: u64, n: usize) -> Vec<f64> {
    // Cheap deterministic AR(1) driven by an LCG, so proptest only has to shrink a seed.
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut x = 0.0;
    (0..n)
        .map(|t| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u = (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            x = 0.8 * x + u;
            x + (t as f64 * 0.3).sin()
        })
        .collect()
}

fn pairs(xs: &[f64], l: usize, h: usize, ends: std::ops::Range<usize>) -> Vec<SamplePair<'_>> {
    ends.map(|e| SamplePair {
        context: &xs[e + 1 - l..=e],
        target: &xs[e + 1..=e + h],
        channel: 0,
    })
    .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn config(l: usize, h: usize) -> ForecasterConfig {
    ForecasterConfig {
        lambda: 2.0,
        ..ForecasterConfig::new(l, h, 4)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn woodbury_and_direct_agree(seed in 0u64..1000, block in 1usize..20) {
        let (l, h) = (24, 6);
        let xs = series(seed, 200);
        let mut fw = Forecaster::new(ForecasterConfig { strategy: UpdateStrategy::Woodbury, ..config(l, h) }, 1).unwrap();
        let mut fd = Forecaster::new(ForecasterConfig { strategy: UpdateStrategy::Direct, ..config(l, h) }, 1).unwrap();
        let mut e = l - 1;
        while e + block + h < xs.len() {
            let p = pairs(&xs, l, h, e..e + block);
            fw.fit_block(&p).unwrap();
            fd.fit_block(&p).unwrap();
            e += block;
        }
        let ctx = &xs[xs.len() - l..];
        let (pw, pd) = (fw.predict(ctx).unwrap(), fd.predict(ctx).unwrap());
        let scale = pd.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(max_abs_diff(&pw, &pd) / scale < 1e-8);
    }

    #[test]
    fn instance_norm_makes_predictions_translation_equivariant(seed in 0u64..1000, shift in -50.0f64..50.0) {
        let (l, h) = (24, 6);
        let xs = series(seed, 150);
        let mut f = Forecaster::new(config(l, h), 1).unwrap();
        f.fit_block(&pairs(&xs, l, h, l - 1..100)).unwrap();
        let ctx = &xs[120..120 + l];
        let moved: Vec<f64> = ctx.iter().map(|v| v + shift).collect();
        let want: Vec<f64> = f.predict(ctx).unwrap().iter().map(|v| v + shift).collect();
        prop_assert!(max_abs_diff(&f.predict(&moved).unwrap(), &want) < 1e-9);
    }

    /// Dividing rows by σ·c is ridge with λ·c² on rows divided by σ.
    #[test]
    fn channel_scale_trades_against_lambda(seed in 0u64..1000, c in 0.2f64..5.0) {
        let (l, h) = (24, 6);
        let xs = series(seed, 150);
        let big: Vec<f64> = xs.iter().map(|v| v * c).collect();
        let base_cfg = ForecasterConfig { channel_scaling: false, ..config(l, h) };
        let mut plain = Forecaster::new(base_cfg, 1).unwrap();
        plain.fit_block(&pairs(&xs, l, h, l - 1..120)).unwrap();
        let mut scaled = Forecaster::new(ForecasterConfig { lambda: base_cfg.lambda * c * c, ..base_cfg }, 1).unwrap();
        scaled.fit_block(&pairs(&big, l, h, l - 1..120)).unwrap();
        let ctx = &xs[120..120 + l];
        let big_ctx: Vec<f64> = ctx.iter().map(|v| v * c).collect();
        let want: Vec<f64> = plain.predict(ctx).unwrap().iter().map(|v| v * c).collect();
        let got = scaled.predict(&big_ctx).unwrap();
        let scale = want.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(max_abs_diff(&got, &want) / scale < 1e-8);
    }

    #[test]
    fn predictions_are_finite_and_sized(seed in 0u64..1000, h in 1usize..12) {
        let l = 32;
        let xs = series(seed, 120);
        let mut f = Forecaster::new(config(l, h), 1).unwrap();
        f.observe_values(&[xs[0]]).unwrap();
        f.observe_values(&[xs[1]]).unwrap();
        f.fit_block(&pairs(&xs, l, h, l - 1..80)).unwrap();
        let p = f.predict(&xs[80..80 + l]).unwrap();
        prop_assert_eq!(p.len(), h);
        prop_assert!(p.iter().all(|v| v.is_finite()));
    }
}

#[test]
fn snapshot_file_round_trip_keeps_predictions() {
    let (l, h) = (24, 6);
    let xs = series(3, 150);
    let mut f = Forecaster::new(config(l, h), 1).unwrap();
    for v in &xs[..100] {
        f.observe_values(&[*v]).unwrap();
    }
    f.fit_block(&pairs(&xs, l, h, l - 1..90)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("af.json");
    f.save_snapshot(&path).unwrap();
    let back = Forecaster::load_snapshot(&path).unwrap();
    assert_eq!(back, f);
    let ctx = &xs[110..110 + l];
    assert_eq!(back.predict(ctx).unwrap(), f.predict(ctx).unwrap());
}
