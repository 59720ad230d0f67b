//! Monte Carlo Sato-Tate sampler, independent of any modular form data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::sieve;
use crate::error::{Error, Result};
use crate::stats::{st_cdf, DensityReport};

/// Name of the generator, written into report headers.
pub const RNG_NAME: &str = "ChaCha8Rng";

/// Samples per RNG stream. Stream `b` covers indices `b * BLOCK .. (b + 1) * BLOCK`,
/// so the sample sequence does not depend on the number of workers.
pub const BLOCK: usize = 1 << 16;

const BISECTION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftMode {
    None,
    PerPrime,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SamplerConfig {
    pub sample_count: usize,
    pub seed: u64,
    pub shift_mode: ShiftMode,
}

impl ShiftMode {
    pub fn name(self) -> &'static str {
        match self {
            ShiftMode::None => "none",
            ShiftMode::PerPrime => "per-prime",
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::InvalidArgument("sample count must be positive".into()));
        }
        Ok(())
    }
}

/// Solves `st_cdf(t) = u` by bisection on `[-1, 1]`.
pub fn inverse_cdf(u: f64) -> f64 {
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while hi - lo > BISECTION_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if st_cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

/// Runs `draw` once per sample index in `0..n`, each block on its own stream.
fn sample_blocks<T: Send>(n: usize, seed: u64, draw: impl Fn(usize, &mut ChaCha8Rng) -> T + Sync) -> Vec<T> {
    let blocks = n.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .flat_map_iter(|b| {
            let mut rng = block_rng(seed, b);
            let end = ((b + 1) * BLOCK).min(n);
            (b * BLOCK..end).map(|i| draw(i, &mut rng)).collect::<Vec<_>>()
        })
        .collect()
}

/// `n` independent draws from `mu_ST`.
pub fn sample_semicircle(n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    Ok(sample_blocks(n, seed, |_, rng| inverse_cdf(rng.gen::<f64>())))
}

/// Result of the product-sign simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub config: SamplerConfig,
    pub rng: &'static str,
    /// Product-negative density against 1/2, checkpoints in sample counts.
    pub density: DensityReport,
    /// Fraction of first coordinates with `|c| < 1/(2 sqrt p)` (per-prime mode).
    pub window_mass: Option<f64>,
    /// Fraction of first coordinates in `[0, 1]`.
    pub nonnegative_mass: f64,
}

/// The first `n` odd primes.
fn odd_primes(n: usize) -> Result<Vec<u64>> {
    // p_n < n (ln n + ln ln n) for n >= 6
    let m = (n + 1).max(6) as f64;
    let bound = (m * (m.ln() + m.ln().ln())).ceil() as u64 + 10;
    let table = sieve(bound)?;
    Ok(table.primes().iter().copied().skip(1).take(n).collect())
}

struct Draw {
    negative: bool,
    in_window: bool,
    nonnegative: bool,
}

/// Pairs `(c, d)` of independent Sato-Tate draws. In per-prime mode pair `i`
/// belongs to the `i`-th odd prime with random characters, and the product of
/// the shifted values `c - chi_1/(2 sqrt p)`, `d - chi_2/(2 sqrt p)` is tested.
pub fn simulate_theorem4(config: &SamplerConfig) -> Result<SimulationReport> {
    config.validate()?;
    let n = config.sample_count;
    let primes = match config.shift_mode {
        ShiftMode::PerPrime => Some(odd_primes(n)?),
        ShiftMode::None => None,
    };
    let draws = sample_blocks(n, config.seed, |i, rng| {
        let c = inverse_cdf(rng.gen::<f64>());
        let d = inverse_cdf(rng.gen::<f64>());
        let (chi1, chi2) = (rng.gen_bool(0.5), rng.gen_bool(0.5));
        match &primes {
            Some(ps) => {
                let w = 0.5 / (ps[i] as f64).sqrt();
                let shift = |x: f64, up: bool| if up { x - w } else { x + w };
                Draw {
                    negative: shift(c, chi1) * shift(d, chi2) < 0.0,
                    in_window: c.abs() < w,
                    nonnegative: c >= 0.0,
                }
            }
            None => Draw {
                negative: c * d < 0.0,
                in_window: false,
                nonnegative: c >= 0.0,
            },
        }
    });
    let indices: Vec<u64> = (1..=n as u64).collect();
    let events: Vec<bool> = draws.iter().map(|d| d.negative).collect();
    let checkpoints = crate::stats::default_checkpoints(n as u64);
    let density = DensityReport::from_events(
        format!("simulated product sign < 0 ({} shift)", config.shift_mode.name()),
        &indices,
        &events,
        &checkpoints,
        Some(0.5),
        Vec::new(),
    );
    let frac = |pred: fn(&Draw) -> bool| draws.iter().filter(|d| pred(d)).count() as f64 / n as f64;
    Ok(SimulationReport {
        config: config.clone(),
        rng: RNG_NAME,
        density,
        window_mass: primes.as_ref().map(|_| frac(|d| d.in_window)),
        nonnegative_mass: frac(|d| d.nonnegative),
    })
}
