//! Seeded simulation of the perpetuity, its partial sums and the wealth
//! process itself.
//!
//! Replicate `j` always draws from its own ChaCha8 stream: the generator is
//! seeded with the master seed and switched to stream `j`. Samples are
//! therefore identical however the replicates are spread over threads.

use crate::error::{Error, Result};
use crate::shock::{InverseSampler, ShockSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Name of the generator and stream layout, recorded in every output.
pub const GENERATOR: &str =
    "rand_chacha::ChaCha8Rng, seed_from_u64(seed), stream = replicate index";

pub const DEFAULT_REPLICATES: usize = 3000;
pub const DEFAULT_ADAPTIVE_TOL: f64 = 1e-12;
pub const DEFAULT_ADAPTIVE_FLOOR: u32 = 100;
pub const DEFAULT_MAX_TERMS: u32 = 1_000_000;

/// The random stream of replicate (or path) `index`.
pub fn replicate_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Truncation {
    /// Exactly `n` terms: samples of `Z_n`.
    Fixed { n: u32 },
    /// Proxy for `Z`: at least `floor` terms, then stop at the first term
    /// below `tol` times the running sum. `max_terms` is a hard stop.
    Adaptive {
        tol: f64,
        floor: u32,
        max_terms: u32,
    },
}

impl Truncation {
    pub fn adaptive() -> Self {
        Truncation::Adaptive {
            tol: DEFAULT_ADAPTIVE_TOL,
            floor: DEFAULT_ADAPTIVE_FLOOR,
            max_terms: DEFAULT_MAX_TERMS,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Truncation::Fixed { n } if n >= 1 => Ok(()),
            Truncation::Fixed { .. } => Err(Error::InvalidParameter(
                "truncation n must be >= 1".to_string(),
            )),
            Truncation::Adaptive {
                tol,
                floor,
                max_terms,
            } => {
                if !(tol > 0.0 && tol <= 1e-6) {
                    return Err(Error::InvalidParameter(format!(
                        "adaptive tolerance must lie in (0, 1e-6], got {tol}"
                    )));
                }
                if floor < 1 || max_terms < floor {
                    return Err(Error::InvalidParameter(format!(
                        "need 1 <= floor <= max_terms, got floor={floor}, max_terms={max_terms}"
                    )));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub replicates: usize,
    pub truncation: Truncation,
    pub seed: u64,
}

impl SimConfig {
    pub fn fixed(n: u32, replicates: usize, seed: u64) -> Self {
        SimConfig {
            replicates,
            truncation: Truncation::Fixed { n },
            seed,
        }
    }

    pub fn adaptive(replicates: usize, seed: u64) -> Self {
        SimConfig {
            replicates,
            truncation: Truncation::adaptive(),
            seed,
        }
    }
}

/// Empirical distribution of `N` simulated values of `Z_n` (or of the
/// truncated proxy for `Z`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfEstimate {
    pub spec: ShockSpec,
    pub config: SimConfig,
    pub generator: String,
    /// Longest series actually summed over all replicates.
    pub max_terms_used: u32,
    /// Ascending.
    pub samples: Vec<f64>,
}

/// One replicate: the partial sums of the products of `1/eps` draws.
fn one_replicate(
    sampler: &InverseSampler,
    truncation: Truncation,
    rng: &mut ChaCha8Rng,
) -> (f64, u32) {
    let mut product = 1.0f64;
    let mut sum = 0.0f64;
    match truncation {
        Truncation::Fixed { n } => {
            for _ in 0..n {
                product *= sampler.sample(rng);
                sum += product;
            }
            (sum, n)
        }
        Truncation::Adaptive {
            tol,
            floor,
            max_terms,
        } => {
            let mut terms = 0;
            while terms < max_terms {
                product *= sampler.sample(rng);
                sum += product;
                terms += 1;
                if terms >= floor && product < tol * sum {
                    break;
                }
            }
            (sum, terms)
        }
    }
}

pub fn sample_z(spec: &ShockSpec, config: &SimConfig) -> Result<EcdfEstimate> {
    spec.validate()?;
    config.truncation.validate()?;
    if config.replicates == 0 {
        return Err(Error::InvalidParameter(
            "replicates must be >= 1".to_string(),
        ));
    }
    if matches!(config.truncation, Truncation::Adaptive { .. }) && spec.expected_log() <= 0.0 {
        return Err(Error::Domain(format!(
            "E ln eps = {} <= 0: the series for Z diverges a.s.",
            spec.expected_log()
        )));
    }
    let sampler = spec.inverse_sampler();
    let draws: Vec<(f64, u32)> = (0..config.replicates as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = replicate_stream(config.seed, j);
            one_replicate(&sampler, config.truncation, &mut rng)
        })
        .collect();
    let max_terms_used = draws.iter().map(|d| d.1).max().unwrap_or(0);
    let mut samples: Vec<f64> = draws.into_iter().map(|d| d.0).collect();
    samples.sort_by(f64::total_cmp);
    Ok(EcdfEstimate {
        spec: *spec,
        config: *config,
        generator: GENERATOR.to_string(),
        max_terms_used,
        samples,
    })
}

/// Survival indicator used everywhere: `c (z + 1) < x`.
#[inline]
pub fn survives(z: f64, x: f64, c: f64) -> bool {
    c * (z + 1.0) < x
}

impl EcdfEstimate {
    pub fn replicates(&self) -> usize {
        self.samples.len()
    }

    /// Fraction of samples with `c (Z + 1) < x`.
    pub fn survival(&self, x: f64, c: f64) -> f64 {
        let hits = self.samples.partition_point(|&z| survives(z, x, c));
        hits as f64 / self.samples.len() as f64
    }

    /// Binomial standard error of [`survival`](Self::survival).
    pub fn std_error(&self, x: f64, c: f64) -> f64 {
        let p = self.survival(x, c);
        (p * (1.0 - p) / self.samples.len() as f64).sqrt()
    }
}

pub fn ecdf_survival(est: &EcdfEstimate, x: f64, c: f64) -> f64 {
    est.survival(x, c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathOutcome {
    /// First period `n` with `X_n <= c`.
    Ruined(u64),
    /// `X_n > c` for every `n <= horizon`.
    Survived,
}

/// Runs `X_0 = x`, `X_{n+1} = eps_{n+1} (X_n - c)_+` for up to `horizon`
/// steps, drawing `1/eps` from `rng`.
pub fn simulate_path<R: rand::Rng + ?Sized>(
    spec: &ShockSpec,
    x: f64,
    c: f64,
    horizon: u64,
    rng: &mut R,
) -> PathOutcome {
    let sampler = spec.inverse_sampler();
    let mut stock = x;
    for n in 0..=horizon {
        if stock <= c {
            return PathOutcome::Ruined(n);
        }
        if n == horizon {
            break;
        }
        stock = (stock - c) / sampler.sample(rng);
    }
    PathOutcome::Survived
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub path: u64,
    /// The `1/eps` draws of the path.
    pub inverse_draws: Vec<f64>,
    pub process_survived: bool,
    pub perpetuity_survived: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrosscheckReport {
    pub spec: ShockSpec,
    pub x: f64,
    pub c: f64,
    pub horizon: u32,
    pub paths: u64,
    pub seed: u64,
    pub survived: u64,
    pub discrepancies: Vec<Discrepancy>,
}

impl CrosscheckReport {
    pub fn passed(&self) -> bool {
        self.discrepancies.is_empty()
    }
}

/// Checks `{X_j > c for all j <= n} = {Z_n < x/c - 1}` path by path, feeding
/// the same draws to both sides.
pub fn crosscheck_equivalence(
    spec: &ShockSpec,
    x: f64,
    c: f64,
    horizon: u32,
    paths: u64,
    seed: u64,
) -> Result<CrosscheckReport> {
    spec.validate()?;
    if !(c > 0.0 && x > c) {
        return Err(Error::InvalidParameter(format!(
            "need x > c > 0, got x={x}, c={c}"
        )));
    }
    let sampler = spec.inverse_sampler();
    let results: Vec<(bool, Option<Discrepancy>)> = (0..paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = replicate_stream(seed, path);
            let draws: Vec<f64> = (0..horizon).map(|_| sampler.sample(&mut rng)).collect();

            let mut stock = x;
            let mut process = stock > c;
            for w in &draws {
                if !process {
                    break;
                }
                stock = (stock - c) / w;
                process = stock > c;
            }

            let mut product = 1.0;
            let mut z = 0.0;
            for w in &draws {
                product *= w;
                z += product;
            }
            let perpetuity = survives(z, x, c);

            let bad = (process != perpetuity).then_some(Discrepancy {
                path,
                inverse_draws: draws,
                process_survived: process,
                perpetuity_survived: perpetuity,
            });
            (process, bad)
        })
        .collect();
    let survived = results.iter().filter(|r| r.0).count() as u64;
    let discrepancies = results.into_iter().filter_map(|r| r.1).collect();
    Ok(CrosscheckReport {
        spec: *spec,
        x,
        c,
        horizon,
        paths,
        seed,
        survived,
        discrepancies,
    })
}
