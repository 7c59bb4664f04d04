//! Closed-form gain and excess noise factor expressions.
//!
//! Each multiplying layer `x` contributes an independent random factor
//! `1 + X_x`, where `X_x` is the number of secondary electrons generated by a
//! single input electron (`X_x = i` with probability `p_{x,i}`, `X_x = 0`
//! otherwise). The total gain is the product of the layer factors, so with
//! independent layers
//!
//! ```text
//! <m>   = Π_x (1 + Σ_i i·p_{x,i})
//! <m²>  = Π_x (1 + Σ_i i(i+2)·p_{x,i})
//! F     = <m²> / <m>² = Π_x F_x
//! ```
//!
//! A staircase device is the special case where every step either ionizes once
//! (probability `p_x`) or not at all, giving `F_x = (1 + 3p_x) / (1 + p_x)²`.
//!
//! Note that this is a product-of-factors model: one draw per layer scales the
//! whole electron packet. It is not a per-carrier branching cascade, which would
//! give different second moments.

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// Elementary charge in coulombs (exact SI value).
pub const ELECTRON_CHARGE: f64 = 1.602_176_634e-19;

/// Amount by which a spectrum's total ionization probability may exceed one
/// before it is rejected.
pub const PROBABILITY_SLACK: f64 = 1e-12;

pub(crate) fn check_probability(index: usize, value: f64) -> Result<f64> {
    if value.is_finite() && (0.0..=1.0).contains(&value) {
        Ok(value)
    } else {
        Err(ModelError::InvalidProbability { index, value })
    }
}

/// Per-layer distribution of the number of secondary electrons produced by one
/// input electron. Entry `i - 1` holds the probability of exactly `i`
/// secondaries; the remaining mass is the no-ionization probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct IonizationSpectrum {
    probs: Vec<f64>,
}

impl IonizationSpectrum {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(ModelError::InvalidSpectrum(
                "at least one ionization probability is required".into(),
            ));
        }
        for (i, &p) in probs.iter().enumerate() {
            if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                return Err(ModelError::InvalidSpectrum(format!(
                    "probability of {} secondaries is {p}, outside [0, 1]",
                    i + 1
                )));
            }
        }
        let total: f64 = probs.iter().sum();
        if total > 1.0 + PROBABILITY_SLACK {
            return Err(ModelError::InvalidSpectrum(format!(
                "ionization probabilities sum to {total}, which exceeds 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Single-secondary spectrum of a staircase step.
    pub fn bernoulli(p: f64) -> Result<Self> {
        check_probability(0, p)?;
        Ok(Self { probs: vec![p] })
    }

    /// A layer that never multiplies.
    pub fn passive() -> Self {
        Self { probs: vec![0.0] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Largest number of secondaries this layer can produce.
    pub fn max_secondaries(&self) -> usize {
        self.probs.len()
    }

    /// Probability of no impact ionization, clamped at zero when the slack
    /// allowance pushes the ionization total slightly above one.
    pub fn no_ionization_probability(&self) -> f64 {
        (1.0 - self.probs.iter().sum::<f64>()).max(0.0)
    }

    pub fn moments(&self) -> GainMoments {
        layer_moments(self)
    }

    pub fn enf(&self) -> f64 {
        layer_enf(self)
    }
}

impl TryFrom<Vec<f64>> for IonizationSpectrum {
    type Error = ModelError;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Self::new(probs)
    }
}

impl From<IonizationSpectrum> for Vec<f64> {
    fn from(spectrum: IonizationSpectrum) -> Self {
        spectrum.probs
    }
}

/// Ordered stack of multiplying layers behind an absorption stage of gain `m0`.
///
/// The absorption stage is modelled as a noiseless deterministic scaling: it
/// multiplies the mean gain by `m0` and the mean-square gain by `m0²`, leaving
/// the excess noise factor unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDevice")]
pub struct DeviceSpec {
    m0: f64,
    layers: Vec<IonizationSpectrum>,
}

#[derive(Deserialize)]
struct RawDevice {
    #[serde(default = "unit_gain")]
    m0: f64,
    layers: Vec<IonizationSpectrum>,
}

fn unit_gain() -> f64 {
    1.0
}

impl TryFrom<RawDevice> for DeviceSpec {
    type Error = ModelError;

    fn try_from(raw: RawDevice) -> Result<Self> {
        Self::with_m0(raw.layers, raw.m0)
    }
}

impl DeviceSpec {
    pub fn new(layers: Vec<IonizationSpectrum>) -> Result<Self> {
        Self::with_m0(layers, 1.0)
    }

    pub fn with_m0(layers: Vec<IonizationSpectrum>, m0: f64) -> Result<Self> {
        if layers.is_empty() {
            return Err(ModelError::InvalidDevice(
                "at least one layer is required".into(),
            ));
        }
        if !(m0.is_finite() && m0 > 0.0) {
            return Err(ModelError::InvalidDevice(format!(
                "absorption-stage gain m0 must be positive, got {m0}"
            )));
        }
        Ok(Self { m0, layers })
    }

    /// Builds a device from raw per-layer probability lists.
    pub fn from_probs(layers: Vec<Vec<f64>>, m0: f64) -> Result<Self> {
        let layers = layers
            .into_iter()
            .map(IonizationSpectrum::new)
            .collect::<Result<Vec<_>>>()?;
        Self::with_m0(layers, m0)
    }

    pub fn layers(&self) -> &[IonizationSpectrum] {
        &self.layers
    }

    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn mean_gain(&self) -> f64 {
        device_mean_gain(self)
    }

    pub fn moments(&self) -> GainMoments {
        device_moments(self)
    }
}

/// Bernoulli staircase: each step ionizes once with probability `p_x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct StaircaseSpec {
    step_probs: Vec<f64>,
}

impl StaircaseSpec {
    pub fn new(step_probs: Vec<f64>) -> Result<Self> {
        if step_probs.is_empty() {
            return Err(ModelError::InvalidStepCount(0));
        }
        for (i, &p) in step_probs.iter().enumerate() {
            check_probability(i, p)?;
        }
        Ok(Self { step_probs })
    }

    /// `n` steps sharing the same ionization probability.
    pub fn uniform(p: f64, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(ModelError::InvalidStepCount(n));
        }
        check_probability(0, p)?;
        Ok(Self {
            step_probs: vec![p; n as usize],
        })
    }

    pub fn step_probs(&self) -> &[f64] {
        &self.step_probs
    }

    pub fn steps(&self) -> usize {
        self.step_probs.len()
    }

    /// The equivalent generalized device with one-entry spectra and `m0 = 1`.
    pub fn to_device(&self) -> DeviceSpec {
        DeviceSpec {
            m0: 1.0,
            layers: self
                .step_probs
                .iter()
                .map(|&p| IonizationSpectrum { probs: vec![p] })
                .collect(),
        }
    }
}

impl TryFrom<Vec<f64>> for StaircaseSpec {
    type Error = ModelError;

    fn try_from(step_probs: Vec<f64>) -> Result<Self> {
        Self::new(step_probs)
    }
}

impl From<StaircaseSpec> for Vec<f64> {
    fn from(spec: StaircaseSpec) -> Self {
        spec.step_probs
    }
}

/// First and second moments of a gain random variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainMoments {
    pub mean: f64,
    pub mean_square: f64,
    pub variance: f64,
}

impl GainMoments {
    pub fn new(mean: f64, mean_square: f64) -> Self {
        Self {
            mean,
            mean_square,
            variance: mean_square - mean * mean,
        }
    }

    /// `<m²> / <m>²`
    pub fn enf(&self) -> f64 {
        self.mean_square / (self.mean * self.mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub total_enf: f64,
    pub per_layer_enf: Vec<f64>,
    pub moments: GainMoments,
    /// Noise current spectral intensity in A²/Hz, once a current is attached.
    pub spectral_intensity: Option<f64>,
}

impl NoiseReport {
    /// Attaches the shot-noise spectral intensity for a combined photo and dark
    /// current `current` (amperes).
    pub fn with_current(mut self, current: f64) -> Result<Self> {
        self.spectral_intensity =
            Some(noise_spectral_intensity(self.moments.mean_square, current)?);
        Ok(self)
    }
}

/// Mean and mean-square of a single layer factor `1 + X`.
pub fn layer_moments(spectrum: &IonizationSpectrum) -> GainMoments {
    let (mut mean, mut mean_square) = (1.0, 1.0);
    for (k, &p) in spectrum.probs.iter().enumerate() {
        let i = (k + 1) as f64;
        mean += i * p;
        mean_square += i * (i + 2.0) * p;
    }
    GainMoments::new(mean, mean_square)
}

/// Layer-wise excess noise factor `(1 + Σ i(i+2)p_i) / (1 + Σ i·p_i)²`.
pub fn layer_enf(spectrum: &IonizationSpectrum) -> f64 {
    layer_moments(spectrum).enf()
}

pub fn device_mean_gain(device: &DeviceSpec) -> f64 {
    device.m0
        * device
            .layers
            .iter()
            .map(|l| layer_moments(l).mean)
            .product::<f64>()
}

/// Total-gain moments as products of the per-layer moments.
pub fn device_moments(device: &DeviceSpec) -> GainMoments {
    let (mean, mean_square) = device
        .layers
        .iter()
        .map(layer_moments)
        .fold((device.m0, device.m0 * device.m0), |(m, s), l| {
            (m * l.mean, s * l.mean_square)
        });
    GainMoments::new(mean, mean_square)
}

pub fn device_enf(device: &DeviceSpec) -> NoiseReport {
    let per_layer_enf: Vec<f64> = device.layers.iter().map(layer_enf).collect();
    NoiseReport {
        total_enf: per_layer_enf.iter().product(),
        per_layer_enf,
        moments: device_moments(device),
        spectral_intensity: None,
    }
}

/// `Π (1 + p_x)`
pub fn staircase_mean_gain(spec: &StaircaseSpec) -> f64 {
    spec.step_probs.iter().map(|p| 1.0 + p).product()
}

/// Stepwise excess noise factor `(1 + 3p) / (1 + p)²`.
pub fn step_enf(p: f64) -> f64 {
    (1.0 + 3.0 * p) / ((1.0 + p) * (1.0 + p))
}

pub fn staircase_enf(spec: &StaircaseSpec) -> NoiseReport {
    let per_layer_enf: Vec<f64> = spec.step_probs.iter().map(|&p| step_enf(p)).collect();
    let (mean, mean_square) = spec.step_probs.iter().fold((1.0, 1.0), |(m, s), &p| {
        (m * (1.0 + p), s * (1.0 + 3.0 * p))
    });
    NoiseReport {
        total_enf: per_layer_enf.iter().product(),
        per_layer_enf,
        moments: GainMoments::new(mean, mean_square),
        spectral_intensity: None,
    }
}

/// Total excess noise factor `[(1 + 3p) / (1 + p)²]^n` of an `n`-step
/// staircase with equal step probabilities.
pub fn equal_p_enf(p: f64, n: u32) -> Result<f64> {
    check_probability(0, p)?;
    if n == 0 {
        return Err(ModelError::InvalidStepCount(n));
    }
    Ok(step_enf(p).powi(n as i32))
}

/// Internal noise component `var(m_x) / <m_x>² = p(1 - p) / (1 + p)²` of one
/// staircase step.
pub fn step_internal_noise(p: f64) -> Result<f64> {
    check_probability(0, p)?;
    Ok(p * (1.0 - p) / ((1.0 + p) * (1.0 + p)))
}

/// Shot-noise current spectral intensity `2q<m²>I` in A²/Hz.
pub fn noise_spectral_intensity(mean_square_gain: f64, current: f64) -> Result<f64> {
    if !(mean_square_gain.is_finite() && mean_square_gain >= 0.0) {
        return Err(ModelError::InvalidArgument(format!(
            "mean-square gain must be non-negative, got {mean_square_gain}"
        )));
    }
    if !(current.is_finite() && current >= 0.0) {
        return Err(ModelError::InvalidArgument(format!(
            "current must be non-negative, got {current}"
        )));
    }
    Ok(2.0 * ELECTRON_CHARGE * mean_square_gain * current)
}

/// Equal step probability that gives an `n`-step staircase the mean gain
/// `target_gain`, i.e. the solution of `(1 + p)^n = target_gain`.
pub fn probability_from_gain(target_gain: f64, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(ModelError::InvalidStepCount(n));
    }
    let max = 2f64.powi(n as i32);
    if !(target_gain.is_finite() && (1.0..=max).contains(&target_gain)) {
        return Err(ModelError::OutOfRange {
            value: target_gain,
            min: 1.0,
            max,
        });
    }
    let n_f = n as f64;
    let mut root = target_gain.powf(1.0 / n_f);
    // one Newton step on y^n = g tightens the last bits of powf
    let lower = root.powi(n as i32 - 1);
    if lower > 0.0 {
        root -= (lower * root - target_gain) / (n_f * lower);
    }
    Ok((root - 1.0).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(probs: &[f64]) -> IonizationSpectrum {
        IonizationSpectrum::new(probs.to_vec()).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn layer_moments_examples() {
        let m = layer_moments(&spectrum(&[0.5]));
        assert!(close(m.mean, 1.5, 1e-15) && close(m.mean_square, 2.5, 1e-15));

        let m = layer_moments(&spectrum(&[0.0]));
        assert_eq!((m.mean, m.mean_square, m.variance), (1.0, 1.0, 0.0));

        let m = layer_moments(&spectrum(&[0.2, 0.1]));
        assert!(close(m.mean, 1.4, 1e-15));
        assert!(close(m.mean_square, 2.4, 1e-15));
        assert!(close(m.variance, 2.4 - 1.96, 1e-12));
    }

    #[test]
    fn layer_enf_examples() {
        assert!(close(layer_enf(&spectrum(&[0.3])), 1.12426, 5e-6));
        assert_eq!(layer_enf(&spectrum(&[1.0])), 1.0);
        assert!(close(layer_enf(&spectrum(&[0.2, 0.1])), 2.4 / 1.96, 1e-12));
    }

    #[test]
    fn spectrum_validation() {
        assert!(IonizationSpectrum::new(vec![]).is_err());
        assert!(IonizationSpectrum::new(vec![-0.1]).is_err());
        assert!(IonizationSpectrum::new(vec![1.1]).is_err());
        assert!(IonizationSpectrum::new(vec![f64::NAN]).is_err());
        assert!(IonizationSpectrum::new(vec![0.6, 0.5]).is_err());
        // rounding noise inside the slack is accepted
        assert!(IonizationSpectrum::new(vec![0.5, 0.5 + 5e-13]).is_ok());
        assert!(IonizationSpectrum::new(vec![0.5, 0.5 + 1e-9]).is_err());
        let s = IonizationSpectrum::new(vec![0.5, 0.5 + 5e-13]).unwrap();
        assert_eq!(s.no_ionization_probability(), 0.0);
    }

    #[test]
    fn device_mean_gain_examples() {
        let ideal = DeviceSpec::new(vec![spectrum(&[1.0]); 3]).unwrap();
        assert_eq!(device_mean_gain(&ideal), 8.0);
        let passive = DeviceSpec::new(vec![IonizationSpectrum::passive()]).unwrap();
        assert_eq!(device_mean_gain(&passive), 1.0);
        let mixed = DeviceSpec::new(vec![spectrum(&[0.5]), spectrum(&[0.2, 0.1])]).unwrap();
        assert!(close(device_mean_gain(&mixed), 2.1, 1e-15));
    }

    #[test]
    fn device_validation() {
        assert!(DeviceSpec::new(vec![]).is_err());
        assert!(DeviceSpec::with_m0(vec![IonizationSpectrum::passive()], 0.0).is_err());
        assert!(DeviceSpec::with_m0(vec![IonizationSpectrum::passive()], -1.0).is_err());
        assert!(DeviceSpec::from_probs(vec![vec![0.7, 0.7]], 1.0).is_err());
    }

    #[test]
    fn device_enf_examples() {
        let two = DeviceSpec::new(vec![spectrum(&[0.3]); 2]).unwrap();
        assert!(close(device_enf(&two).total_enf, 1.26396, 5e-6));

        for n in 1..=6 {
            let ideal = DeviceSpec::new(vec![spectrum(&[1.0]); n]).unwrap();
            assert_eq!(device_enf(&ideal).total_enf, 1.0);
        }

        let mixed = DeviceSpec::new(vec![spectrum(&[0.5]), spectrum(&[0.2, 0.1])]).unwrap();
        let report = device_enf(&mixed);
        assert!(close(report.total_enf, (2.5 / 2.25) * (2.4 / 1.96), 1e-12));
        assert!(close(report.total_enf, 1.360544, 1e-6));
        assert_eq!(report.per_layer_enf.len(), 2);
    }

    #[test]
    fn m0_scales_moments_but_not_enf() {
        let layers = vec![spectrum(&[0.3]), spectrum(&[0.1, 0.2])];
        let base = device_enf(&DeviceSpec::new(layers.clone()).unwrap());
        let scaled = device_enf(&DeviceSpec::with_m0(layers, 1.7).unwrap());
        assert!(close(scaled.moments.mean, 1.7 * base.moments.mean, 1e-12));
        assert!(close(
            scaled.moments.mean_square,
            1.7 * 1.7 * base.moments.mean_square,
            1e-12
        ));
        assert_eq!(scaled.total_enf, base.total_enf);
        assert!(close(scaled.moments.enf(), base.total_enf, 1e-12));
    }

    #[test]
    fn staircase_examples() {
        let s = |p: &[f64]| StaircaseSpec::new(p.to_vec()).unwrap();
        assert_eq!(staircase_mean_gain(&s(&[1.0, 1.0, 1.0])), 8.0);
        assert_eq!(staircase_mean_gain(&s(&[0.0, 0.0])), 1.0);
        assert!(close(staircase_mean_gain(&s(&[0.3, 0.5])), 1.95, 1e-15));

        assert!(close(staircase_enf(&s(&[0.3])).total_enf, 1.12426, 5e-6));
        assert!(close(
            staircase_enf(&s(&[0.3, 0.3, 0.3])).total_enf,
            1.42102,
            5e-6
        ));
        assert_eq!(staircase_enf(&s(&[0.0, 1.0, 0.0])).total_enf, 1.0);

        assert!(StaircaseSpec::new(vec![]).is_err());
        assert!(matches!(
            StaircaseSpec::new(vec![0.2, 1.5]),
            Err(ModelError::InvalidProbability { index: 1, .. })
        ));
    }

    #[test]
    fn equal_p_enf_examples() {
        assert!(close(equal_p_enf(0.3, 1).unwrap(), 1.12426, 5e-6));
        assert!(close(equal_p_enf(0.3, 3).unwrap(), 1.42102, 5e-6));
        assert_eq!(equal_p_enf(1.0, 10).unwrap(), 1.0);
        assert!(matches!(
            equal_p_enf(0.3, 0),
            Err(ModelError::InvalidStepCount(0))
        ));
        assert!(equal_p_enf(-0.01, 2).is_err());
    }

    #[test]
    fn step_internal_noise_examples() {
        assert_eq!(step_internal_noise(0.0).unwrap(), 0.0);
        assert_eq!(step_internal_noise(1.0).unwrap(), 0.0);
        let d = step_internal_noise(0.3).unwrap();
        assert!(close(d, 0.3 * 0.7 / 1.69, 1e-15));
        assert!(close(d, layer_enf(&spectrum(&[0.3])) - 1.0, 1e-15));
        assert!(step_internal_noise(2.0).is_err());
    }

    #[test]
    fn spectral_intensity_examples() {
        assert!(close(
            noise_spectral_intensity(1.0, 1.0).unwrap(),
            3.204353268e-19,
            1e-30
        ));
        assert_eq!(noise_spectral_intensity(5.0, 0.0).unwrap(), 0.0);

        let report = staircase_enf(&StaircaseSpec::uniform(0.3, 2).unwrap());
        assert!(close(report.moments.mean_square, 3.61, 1e-14));
        let with_current = report.with_current(1e-6).unwrap();
        let expected = 2.0 * ELECTRON_CHARGE * 3.61e-6;
        assert!((with_current.spectral_intensity.unwrap() - expected).abs() <= expected * 1e-14);

        assert!(noise_spectral_intensity(1.0, -1e-9).is_err());
        assert!(noise_spectral_intensity(-1.0, 1.0).is_err());
    }

    #[test]
    fn probability_from_gain_examples() {
        assert!(close(probability_from_gain(8.0, 3).unwrap(), 1.0, 1e-15));
        assert_eq!(probability_from_gain(1.0, 5).unwrap(), 0.0);
        let p = probability_from_gain(7.24, 3).unwrap();
        assert!(close(p, 0.934548, 1e-6));
        assert!(close((1.0 + p).powi(3), 7.24, 1e-10));
        assert!(matches!(
            probability_from_gain(8.5, 3),
            Err(ModelError::OutOfRange { .. })
        ));
        assert!(probability_from_gain(0.9, 3).is_err());
        assert!(probability_from_gain(2.0, 0).is_err());
    }

    #[test]
    fn device_json_round_trip_and_default_m0() {
        let json = r#"{"layers": [[0.2, 0.1], [0.5]]}"#;
        let device: DeviceSpec = serde_json::from_str(json).unwrap();
        assert_eq!(device.m0(), 1.0);
        assert_eq!(device.layers().len(), 2);

        let bad = r#"{"m0": 1.0, "layers": [[0.8, 0.8]]}"#;
        assert!(serde_json::from_str::<DeviceSpec>(bad).is_err());
        let empty = r#"{"m0": 1.0, "layers": []}"#;
        assert!(serde_json::from_str::<DeviceSpec>(empty).is_err());
    }
}
