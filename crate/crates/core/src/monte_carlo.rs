//! Seeded Monte Carlo sampling of the layer-factor gain process.
//!
//! Every trial draws one outcome per layer and multiplies the factors, matching
//! the closed-form model. Partition `k` of a run draws from ChaCha20 stream `k`
//! under the run's seed, so results depend only on `(seed, trials, partitions)`
//! and not on how partitions are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{ModelError, Result};
use crate::model::{DeviceSpec, GainMoments};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    pub partitions: u32,
}

impl McConfig {
    pub fn new(trials: u64, seed: u64) -> Result<Self> {
        Self::with_partitions(trials, seed, 1)
    }

    pub fn with_partitions(trials: u64, seed: u64, partitions: u32) -> Result<Self> {
        if trials == 0 {
            return Err(ModelError::InvalidArgument(
                "trials must be at least 1".into(),
            ));
        }
        if partitions == 0 || partitions as u64 > trials {
            return Err(ModelError::InvalidArgument(format!(
                "partitions must lie in [1, trials], got {partitions} for {trials} trials"
            )));
        }
        Ok(Self {
            trials,
            seed,
            partitions,
        })
    }

    fn partition_trials(&self, k: u32) -> u64 {
        let parts = self.partitions as u64;
        self.trials / parts + u64::from((k as u64) < self.trials % parts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub moments: GainMoments,
    pub enf_estimate: f64,
    pub std_error_mean: f64,
    pub std_error_enf: f64,
    pub trials: u64,
}

/// Inverse-CDF sampler over the layer outcomes of a device.
#[derive(Debug, Clone)]
pub struct GainSampler {
    cdfs: Vec<Vec<f64>>,
    m0: f64,
}

impl GainSampler {
    pub fn new(device: &DeviceSpec) -> Self {
        let cdfs = device
            .layers()
            .iter()
            .map(|layer| {
                // no-ionization mass first, then 1, 2, ... secondaries
                let mut acc = layer.no_ionization_probability();
                let mut cdf = vec![acc];
                for &p in layer.probs() {
                    acc += p;
                    cdf.push(acc);
                }
                cdf
            })
            .collect();
        Self {
            cdfs,
            m0: device.m0(),
        }
    }

    fn draw_index(cdf: &[f64], u: f64) -> usize {
        match cdf.iter().position(|&c| u < c) {
            Some(i) => i,
            // u landed in the rounding gap above the last cumulative value:
            // fall back to the highest outcome with non-zero mass
            None => (0..cdf.len())
                .rev()
                .find(|&i| cdf[i] > if i == 0 { 0.0 } else { cdf[i - 1] })
                .unwrap_or(0),
        }
    }

    /// Product of the layer factors `Π (1 + X_x)`, before scaling by `m0`.
    pub fn sample_factor<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        self.cdfs
            .iter()
            .map(|cdf| Self::draw_index(cdf, rng.random::<f64>()) as u64 + 1)
            .product()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_factor(rng) as f64 * self.m0
    }
}

/// Draws one total gain `m0 · Π (1 + X_x)`.
pub fn sample_gain<R: Rng + ?Sized>(device: &DeviceSpec, rng: &mut R) -> f64 {
    GainSampler::new(device).sample(rng)
}

/// Random stream for partition `k` of a run seeded with `seed`.
pub fn partition_rng(seed: u64, k: u32) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

#[derive(Debug, Clone, Copy, Default)]
struct PowerSums {
    count: u64,
    s1: f64,
    s2: f64,
    s3: f64,
    s4: f64,
}

impl PowerSums {
    fn push(&mut self, g: f64) {
        let g2 = g * g;
        self.count += 1;
        self.s1 += g;
        self.s2 += g2;
        self.s3 += g2 * g;
        self.s4 += g2 * g2;
    }

    fn merge(self, other: Self) -> Self {
        Self {
            count: self.count + other.count,
            s1: self.s1 + other.s1,
            s2: self.s2 + other.s2,
            s3: self.s3 + other.s3,
            s4: self.s4 + other.s4,
        }
    }
}

pub fn estimate(device: &DeviceSpec, cfg: &McConfig) -> McEstimate {
    let sampler = GainSampler::new(device);
    let partials: Vec<PowerSums> = (0..cfg.partitions)
        .into_par_iter()
        .map(|k| {
            let mut rng = partition_rng(cfg.seed, k);
            let mut sums = PowerSums::default();
            for _ in 0..cfg.partition_trials(k) {
                sums.push(sampler.sample(&mut rng));
            }
            sums
        })
        .collect();
    let sums = partials
        .into_iter()
        .fold(PowerSums::default(), PowerSums::merge);
    finish(sums)
}

/// Turns power sums into moment estimates and standard errors.
///
/// With raw sample moments `a_k = S_k / N`, the ENF estimate is
/// `F = a_2 / a_1²`. Its delta-method variance is `∇Fᵀ Σ ∇F / N` where
/// `∇F = (-2 a_2 / a_1³, 1 / a_1²)` and `Σ` is the sample covariance of
/// `(g, g²)`:
///
/// ```text
/// Σ_11 = a_2 - a_1²,  Σ_12 = a_3 - a_1 a_2,  Σ_22 = a_4 - a_2²
/// ```
///
/// each scaled by `N / (N - 1)`.
fn finish(sums: PowerSums) -> McEstimate {
    let n = sums.count as f64;
    let (a1, a2, a3, a4) = (sums.s1 / n, sums.s2 / n, sums.s3 / n, sums.s4 / n);
    let enf = a2 / (a1 * a1);

    let (se_mean, se_enf) = if sums.count < 2 {
        (0.0, 0.0)
    } else {
        let bessel = n / (n - 1.0);
        let v11 = ((a2 - a1 * a1) * bessel).max(0.0);
        let v12 = (a3 - a1 * a2) * bessel;
        let v22 = ((a4 - a2 * a2) * bessel).max(0.0);
        let d1 = -2.0 * a2 / (a1 * a1 * a1);
        let d2 = 1.0 / (a1 * a1);
        let var_enf = (d1 * d1 * v11 + 2.0 * d1 * d2 * v12 + d2 * d2 * v22).max(0.0) / n;
        ((v11 / n).sqrt(), var_enf.sqrt())
    };

    McEstimate {
        moments: GainMoments::new(a1, a2),
        enf_estimate: enf,
        std_error_mean: se_mean,
        std_error_enf: se_enf,
        trials: sums.count,
    }
}
