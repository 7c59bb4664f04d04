//! Stage-wise and total noise factors of cascade networks.
//!
//! The total noise factor of a cascade is the product of its stage-wise noise
//! factors, where stage `x` compares its own added noise with the total noise
//! power arriving at its output from upstream:
//!
//! ```text
//! F_x = 1 + (N_int(x) + N_ext(x)) / [N_i·Π_{j≤x} G_j + Σ_{k<x} (N_int(k) + N_ext(k))·Π_{k<l≤x} G_l]
//! ```
//!
//! The classical Friis combination is provided only as a contrast baseline.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};
use crate::model::{staircase_enf, step_internal_noise, StaircaseSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeStage {
    pub power_gain: f64,
    pub internal_noise: f64,
    #[serde(default)]
    pub external_noise: f64,
}

impl CascadeStage {
    pub fn added_noise(&self) -> f64 {
        self.internal_noise + self.external_noise
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork")]
pub struct CascadeNetwork {
    input_noise: f64,
    stages: Vec<CascadeStage>,
}

#[derive(Deserialize)]
struct RawNetwork {
    input_noise: f64,
    stages: Vec<CascadeStage>,
}

impl TryFrom<RawNetwork> for CascadeNetwork {
    type Error = ModelError;

    fn try_from(raw: RawNetwork) -> Result<Self> {
        Self::new(raw.input_noise, raw.stages)
    }
}

impl CascadeNetwork {
    pub fn new(input_noise: f64, stages: Vec<CascadeStage>) -> Result<Self> {
        if !(input_noise.is_finite() && input_noise > 0.0) {
            return Err(ModelError::InvalidNetwork(format!(
                "input noise power must be positive, got {input_noise}"
            )));
        }
        if stages.is_empty() {
            return Err(ModelError::InvalidNetwork(
                "at least one stage is required".into(),
            ));
        }
        for (i, s) in stages.iter().enumerate() {
            if !(s.power_gain.is_finite() && s.power_gain > 0.0) {
                return Err(ModelError::InvalidNetwork(format!(
                    "stage {}: power gain must be positive, got {}",
                    i + 1,
                    s.power_gain
                )));
            }
            for (name, v) in [
                ("internal", s.internal_noise),
                ("external", s.external_noise),
            ] {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(ModelError::InvalidNetwork(format!(
                        "stage {}: {name} noise power must be non-negative, got {v}",
                        i + 1
                    )));
                }
            }
        }
        Ok(Self {
            input_noise,
            stages,
        })
    }

    /// Represents a staircase as a cascade with no external noise. Stage `x`
    /// has signal power gain `<m_x>² = (1 + p_x)²` and an internal noise power
    /// equal to `δ_int(x)` times the noise power reaching its output, so that
    /// each stage-wise noise factor is `1 + δ_int(x)`.
    pub fn from_staircase(spec: &StaircaseSpec, input_noise: f64) -> Result<Self> {
        let mut stages = Vec::with_capacity(spec.steps());
        let mut arriving = input_noise;
        for &p in spec.step_probs() {
            let power_gain = (1.0 + p) * (1.0 + p);
            let at_output = arriving * power_gain;
            let internal_noise = step_internal_noise(p)? * at_output;
            stages.push(CascadeStage {
                power_gain,
                internal_noise,
                external_noise: 0.0,
            });
            arriving = at_output + internal_noise;
        }
        Self::new(input_noise, stages)
    }

    pub fn input_noise(&self) -> f64 {
        self.input_noise
    }

    pub fn stages(&self) -> &[CascadeStage] {
        &self.stages
    }

    fn check_index(&self, x: usize) -> Result<()> {
        if x == 0 || x > self.stages.len() {
            Err(ModelError::IndexOutOfRange {
                index: x,
                stages: self.stages.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Total noise power `N_i(x)` at the input of stage `x` (1-based).
    pub fn stage_input_noise(&self, x: usize) -> Result<f64> {
        self.check_index(x)?;
        Ok(self.stages[..x - 1]
            .iter()
            .fold(self.input_noise, |n, s| n * s.power_gain + s.added_noise()))
    }
}

/// Stage-wise noise factor of stage `x` (1-based), evaluated from the explicit
/// sum over upstream stages.
pub fn bangera_stage_factor(net: &CascadeNetwork, x: usize) -> Result<f64> {
    net.check_index(x)?;
    let stages = &net.stages[..x];
    let gain_from = |first: usize| {
        stages[first..]
            .iter()
            .map(|s| s.power_gain)
            .product::<f64>()
    };
    let upstream: f64 = (0..x - 1)
        .map(|k| stages[k].added_noise() * gain_from(k + 1))
        .sum();
    let denominator = net.input_noise * gain_from(0) + upstream;
    Ok(1.0 + stages[x - 1].added_noise() / denominator)
}

/// Same factor in the split form
/// `1 + N_int(x) / (N_i(x) G_x) + N_ext(x) / (N_i(x) G_x)`.
pub fn bangera_stage_factor_split(net: &CascadeNetwork, x: usize) -> Result<f64> {
    let arriving = net.stage_input_noise(x)?;
    let stage = &net.stages[x - 1];
    let reference = arriving * stage.power_gain;
    Ok(1.0 + stage.internal_noise / reference + stage.external_noise / reference)
}

pub fn bangera_stage_factors(net: &CascadeNetwork) -> Vec<f64> {
    (1..=net.stages.len())
        .map(|x| bangera_stage_factor(net, x).expect("index in range"))
        .collect()
}

/// Total noise factor: the product of all stage-wise noise factors.
pub fn bangera_total(net: &CascadeNetwork) -> f64 {
    bangera_stage_factors(net).iter().product()
}

/// Classical Friis cascade formula `F_1 + Σ_{k≥2} (F_k - 1) / Π_{j<k} G_j`.
///
/// Baseline for contrast only; it is not used for any excess noise factor.
pub fn friis_total(stage_factors: &[f64], stage_power_gains: &[f64]) -> Result<f64> {
    if stage_factors.len() != stage_power_gains.len() {
        return Err(ModelError::LengthMismatch {
            factors: stage_factors.len(),
            gains: stage_power_gains.len(),
        });
    }
    if stage_factors.is_empty() {
        return Err(ModelError::InvalidArgument(
            "at least one stage is required".into(),
        ));
    }
    if let Some(f) = stage_factors
        .iter()
        .find(|f| !(f.is_finite() && **f >= 1.0))
    {
        return Err(ModelError::InvalidArgument(format!(
            "noise factors must be at least 1, got {f}"
        )));
    }
    if let Some(g) = stage_power_gains
        .iter()
        .find(|g| !(g.is_finite() && **g > 0.0))
    {
        return Err(ModelError::InvalidArgument(format!(
            "power gains must be positive, got {g}"
        )));
    }
    let mut total = stage_factors[0];
    let mut upstream_gain = 1.0;
    for k in 1..stage_factors.len() {
        upstream_gain *= stage_power_gains[k - 1];
        total += (stage_factors[k] - 1.0) / upstream_gain;
    }
    Ok(total)
}

/// Friis total over a network's own Bangera stage factors and power gains.
pub fn friis_total_for(net: &CascadeNetwork) -> f64 {
    let gains: Vec<f64> = net.stages.iter().map(|s| s.power_gain).collect();
    friis_total(&bangera_stage_factors(net), &gains).expect("network invariants hold")
}

/// Returns `(Π (1 + var(m_x)/<m_x>²), staircase total ENF)`, two routes to the
/// same quantity.
pub fn staircase_to_cascade_equivalence(spec: &StaircaseSpec) -> (f64, f64) {
    let product = spec
        .step_probs()
        .iter()
        .map(|&p| {
            let variance = p * (1.0 - p);
            let mean = 1.0 + p;
            1.0 + variance / (mean * mean)
        })
        .product();
    (product, staircase_enf(spec).total_enf)
}
