//! Exact total-gain distribution by brute-force enumeration of every joint
//! layer outcome. Serves as ground truth for the closed forms in
//! [`crate::model`].

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::error::{ModelError, Result};
use crate::model::{DeviceSpec, GainMoments, IonizationSpectrum};

/// Default limit on the number of joint outcomes `Π (m_x + 1)`.
pub const DEFAULT_STATE_SPACE_CAP: u64 = 10_000_000;

const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// Exact probability mass function of the total gain.
///
/// Gains are stored as integer layer-factor products and scaled by `m0` only
/// when reported, so equal gains always aggregate under the same key.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainDistribution {
    m0: f64,
    entries: BTreeMap<u64, f64>,
}

impl GainDistribution {
    /// Builds a distribution from integer gain keys, checking that the
    /// probabilities lie in [0, 1] and sum to one.
    pub fn new(m0: f64, entries: BTreeMap<u64, f64>) -> Result<Self> {
        if !(m0.is_finite() && m0 > 0.0) {
            return Err(ModelError::InvalidDistribution(format!(
                "gain scale must be positive, got {m0}"
            )));
        }
        if entries.is_empty() {
            return Err(ModelError::InvalidDistribution("no outcomes".into()));
        }
        for (&key, &p) in &entries {
            if key == 0 {
                return Err(ModelError::InvalidDistribution(
                    "integer gain keys start at 1".into(),
                ));
            }
            if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                return Err(ModelError::InvalidDistribution(format!(
                    "probability {p} of gain {key} is outside [0, 1]"
                )));
            }
        }
        let total: f64 = entries.values().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(ModelError::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Self { m0, entries })
    }

    pub fn from_pairs(m0: f64, pairs: &[(u64, f64)]) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for &(key, p) in pairs {
            *entries.entry(key).or_insert(0.0) += p;
        }
        Self::new(m0, entries)
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    /// `(gain, probability)` pairs in increasing gain order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.entries
            .iter()
            .map(move |(&key, &p)| (key as f64 * self.m0, p))
    }

    /// Integer-keyed view: gain divided by `m0`.
    pub fn integer_entries(&self) -> &BTreeMap<u64, f64> {
        &self.entries
    }

    pub fn probability_of(&self, integer_gain: u64) -> f64 {
        self.entries.get(&integer_gain).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_probability(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn min_gain(&self) -> f64 {
        *self.entries.keys().next().expect("non-empty") as f64 * self.m0
    }

    pub fn max_gain(&self) -> f64 {
        *self.entries.keys().next_back().expect("non-empty") as f64 * self.m0
    }
}

/// Number of joint layer outcomes, `Π (m_x + 1)`.
pub fn state_space_size(device: &DeviceSpec) -> u128 {
    device
        .layers()
        .iter()
        .map(|l| l.max_secondaries() as u128 + 1)
        .fold(1u128, |acc, k| acc.saturating_mul(k))
}

/// Outcome probabilities of one layer factor `1 + X`, indexed by `X`.
fn outcome_table(spectrum: &IonizationSpectrum) -> Vec<f64> {
    std::iter::once(spectrum.no_ionization_probability())
        .chain(spectrum.probs().iter().copied())
        .collect()
}

pub fn enumerate_distribution(device: &DeviceSpec) -> Result<GainDistribution> {
    enumerate_distribution_capped(device, DEFAULT_STATE_SPACE_CAP)
}

/// Enumerates all `Π (m_x + 1)` joint outcomes in odometer order (last layer
/// fastest) and aggregates the probability of each total gain. Outcomes with
/// zero probability are dropped.
pub fn enumerate_distribution_capped(device: &DeviceSpec, cap: u64) -> Result<GainDistribution> {
    let required = state_space_size(device);
    if required > cap as u128 {
        return Err(ModelError::StateSpaceTooLarge { required, cap });
    }

    let tables: Vec<Vec<f64>> = device.layers().iter().map(outcome_table).collect();
    let mut counters = vec![0usize; tables.len()];
    let mut entries: BTreeMap<u64, f64> = BTreeMap::new();

    loop {
        let mut probability = 1.0;
        let mut gain: u64 = 1;
        for (table, &x) in tables.iter().zip(&counters) {
            probability *= table[x];
            gain *= x as u64 + 1;
        }
        if probability > 0.0 {
            *entries.entry(gain).or_insert(0.0) += probability;
        }

        // advance the odometer
        let mut layer = tables.len();
        loop {
            if layer == 0 {
                return GainDistribution::new(device.m0(), entries);
            }
            layer -= 1;
            counters[layer] += 1;
            if counters[layer] < tables[layer].len() {
                break;
            }
            counters[layer] = 0;
        }
    }
}

/// Direct expectations `Σ g·P(g)` and `Σ g²·P(g)`.
pub fn distribution_moments(dist: &GainDistribution) -> GainMoments {
    let (mean, mean_square) = dist
        .iter()
        .fold((0.0, 0.0), |(m, s), (g, p)| (m + g * p, s + g * g * p));
    GainMoments::new(mean, mean_square)
}

/// Excess noise factor `<m²> / <m>²` of the exact distribution.
pub fn oracle_enf(device: &DeviceSpec) -> Result<f64> {
    Ok(distribution_moments(&enumerate_distribution(device)?).enf())
}

/// Slack added to the normalizer when a random spectrum's raw total exceeds
/// one, keeping the no-ionization probability strictly positive.
pub const RENORMALIZATION_EPSILON: f64 = 1e-9;

/// Random device for property checks: up to `max_layers` layers, each with
/// between 1 and `max_secondaries` ionization entries drawn uniformly and
/// rescaled by `1 / (Σ + ε)` when their total exceeds one. `m0 = 1`.
pub fn random_device<R: Rng + ?Sized>(
    rng: &mut R,
    max_layers: usize,
    max_secondaries: usize,
) -> DeviceSpec {
    assert!(max_layers >= 1 && max_secondaries >= 1);
    let n = rng.random_range(1..=max_layers);
    let layers = (0..n)
        .map(|_| {
            let m = rng.random_range(1..=max_secondaries);
            let mut probs: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
            let total: f64 = probs.iter().sum();
            if total > 1.0 {
                let norm = total + RENORMALIZATION_EPSILON;
                probs.iter_mut().for_each(|p| *p /= norm);
            }
            IonizationSpectrum::new(probs).expect("renormalized spectrum is valid")
        })
        .collect();
    DeviceSpec::new(layers).expect("at least one layer")
}
