use std::path::PathBuf;
use std::time::{Duration, Instant};

use adapts_core::forecaster::{CMatrix, Complex64};
use adapts_core::{Error, Forecaster, OnlineRidge, RunConfigFile, UpdateStrategy};
use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Take d_c, d_t, λ and M from this config (defaults otherwise).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the context feature dimension d_c.
    #[arg(long)]
    features: Option<usize>,
    /// Rows per refit block (M); defaults to the update period.
    #[arg(long)]
    block: Option<usize>,
    /// Timed refits per path.
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn random_block(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn time_path(
    strategy: UpdateStrategy,
    warm: &OnlineRidge,
    blocks: &[(CMatrix, CMatrix)],
) -> Result<(Duration, OnlineRidge), Error> {
    let mut ridge = warm.clone();
    ridge.strategy = strategy;
    let start = Instant::now();
    for (x, y) in blocks {
        ridge.fit_rows(x, y)?;
    }
    Ok((start.elapsed(), ridge))
}

pub fn cmd_bench(args: &BenchArgs) -> Result<u8, Error> {
    let cfg = match &args.config {
        Some(path) => RunConfigFile::load(path)?,
        None => RunConfigFile::default(),
    };
    let fc = Forecaster::new(cfg.rolling.forecaster_config(), 1)?;
    let features = args.features.unwrap_or(fc.context_dim());
    let outputs = fc.target_dim();
    let block = args.block.unwrap_or(cfg.rolling.update_period);
    if features == 0 || block == 0 || args.repeats == 0 {
        return Err(Error::InvalidConfig("features, block and repeats must be positive".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    // Start from a state that has already absorbed one block, as in a running deployment.
    let mut warm = OnlineRidge::new(features, outputs, cfg.rolling.lambda)?;
    warm.fit_rows(&random_block(&mut rng, block, features), &random_block(&mut rng, block, outputs))?;
    let blocks: Vec<(CMatrix, CMatrix)> = (0..args.repeats)
        .map(|_| (random_block(&mut rng, block, features), random_block(&mut rng, block, outputs)))
        .collect();

    let (t_direct, direct) = time_path(UpdateStrategy::Direct, &warm, &blocks)?;
    let woodbury = time_path(UpdateStrategy::Woodbury, &warm, &blocks);
    let per = |d: Duration| d.as_secs_f64() * 1e3 / args.repeats as f64;
    println!("d_c={features} d_t={outputs} M={block} lambda={} repeats={}", cfg.rolling.lambda, args.repeats);
    println!("direct:   {:.3} ms/refit", per(t_direct));
    let matched = match &woodbury {
        Ok((t, w)) => {
            let err = (w.a_inv() - direct.a_inv()).norm() / direct.a_inv().norm();
            println!("woodbury: {:.3} ms/refit", per(*t));
            println!("speedup={:.2}x rel_err={err:.2e}", t_direct.as_secs_f64() / t.as_secs_f64());
            err < 1e-8
        }
        Err(e) => {
            println!("woodbury: failed ({e})");
            false
        }
    };
    println!("match={matched}");
    if block < features {
        println!("default path: woodbury (M < d_c)");
    } else {
        println!("default path: direct (M >= d_c; a direct recompute is cheaper when refits are this large)");
    }
    Ok(if matched { 0 } else { 3 })
}
