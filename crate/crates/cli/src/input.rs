use std::fs;
use std::path::Path;

use apd_noise::cascade::{CascadeNetwork, CascadeStage};
use apd_noise::{DeviceSpec, IonizationSpectrum, StaircaseSpec};
use serde::Deserialize;

use crate::args::DeviceArgs;
use crate::error::{CliError, CliResult};

/// Device file as written by users. Validation happens after parsing so that
/// a well-formed file with bad probabilities is reported as a domain error.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeviceFile {
    m0: Option<f64>,
    layers: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StageFile {
    power_gain: f64,
    internal_noise: f64,
    #[serde(default)]
    external_noise: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    input_noise: f64,
    stages: Vec<StageFile>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn build_layers(layers: Vec<Vec<f64>>) -> CliResult<Vec<IonizationSpectrum>> {
    layers
        .into_iter()
        .enumerate()
        .map(|(i, probs)| {
            IonizationSpectrum::new(probs)
                .map_err(|e| CliError::domain(format!("layer {}", i + 1), e))
        })
        .collect()
}

pub fn resolve_device(args: &DeviceArgs) -> CliResult<DeviceSpec> {
    let (layers, file_m0) = if let Some(steps) = &args.steps {
        let spec = StaircaseSpec::new(steps.clone()).map_err(|e| CliError::domain("--steps", e))?;
        (spec.to_device().layers().to_vec(), None)
    } else if let Some(path) = &args.spec {
        let file: DeviceFile = read_json(path)?;
        if file.layers.is_empty() {
            return Err(CliError::Domain(format!(
                "{}: layers must not be empty",
                path.display()
            )));
        }
        (build_layers(file.layers)?, file.m0)
    } else if !args.layer.is_empty() {
        (
            build_layers(args.layer.iter().map(|l| l.0.clone()).collect())?,
            None,
        )
    } else {
        return Err(CliError::Parse(
            "a device is required: use --steps, --layer or --spec".into(),
        ));
    };
    let m0 = args.m0.or(file_m0).unwrap_or(1.0);
    DeviceSpec::with_m0(layers, m0).map_err(|e| CliError::domain("m0", e))
}

pub fn load_network(path: &Path) -> CliResult<CascadeNetwork> {
    let file: NetworkFile = read_json(path)?;
    let stages = file
        .stages
        .into_iter()
        .map(|s| CascadeStage {
            power_gain: s.power_gain,
            internal_noise: s.internal_noise,
            external_noise: s.external_noise,
        })
        .collect();
    CascadeNetwork::new(file.input_noise, stages).map_err(|e| CliError::domain(path.display(), e))
}

pub fn save_device(device: &DeviceSpec, path: &Path) -> CliResult<()> {
    let json = serde_json::to_string_pretty(device).expect("device serializes");
    fs::write(path, json + "\n")?;
    Ok(())
}
