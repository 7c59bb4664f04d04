use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "apd-noise",
    version,
    about = "Gain and excess noise factors of multilayer and staircase avalanche photodiodes"
)]
pub struct Cli {
    /// Output format (sweeps default to CSV when `text` is selected)
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    /// Significant digits for text output
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u8).range(1..=17))]
    pub precision: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form gain moments and excess noise factors of a device
    Enf(EnfArgs),
    /// Tabulate mean gain and ENF of equal-probability staircases
    Sweep(SweepArgs),
    /// Run the built-in reference checks
    Validate(ValidateArgs),
    /// Monte Carlo estimate of the gain moments and ENF
    Mc(McArgs),
    /// Stage-wise and total noise factors of a cascade network
    Cascade(CascadeArgs),
}

#[derive(Debug, Args)]
pub struct DeviceArgs {
    /// Bernoulli step probabilities of a staircase, e.g. `--steps 0.3,0.3,0.3`
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, conflicts_with_all = ["layer", "spec"])]
    pub steps: Option<Vec<f64>>,

    /// Ionization spectrum of one layer (probabilities of 1, 2, ... secondaries); repeat per layer
    #[arg(long, value_parser = parse_layer, allow_hyphen_values = true, conflicts_with = "spec")]
    pub layer: Vec<LayerProbs>,

    /// JSON device file `{"m0": 1.0, "layers": [[...], ...]}`
    #[arg(long)]
    pub spec: Option<PathBuf>,

    /// Absorption-stage gain (overrides the file value)
    #[arg(long, allow_negative_numbers = true)]
    pub m0: Option<f64>,
}

/// Comma-separated probabilities given to one `--layer` flag.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerProbs(pub Vec<f64>);

fn parse_layer(s: &str) -> Result<LayerProbs, String> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| format!("invalid probability `{v}`: {e}"))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(LayerProbs)
}

#[derive(Debug, Args)]
pub struct EnfArgs {
    #[command(flatten)]
    pub device: DeviceArgs,

    /// Combined photo and dark current in amperes; adds the noise spectral intensity
    #[arg(long, allow_negative_numbers = true)]
    pub current: Option<f64>,

    /// Write the parsed device to this JSON file
    #[arg(long)]
    pub save_spec: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVariable {
    P,
    N,
    Gain,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Swept quantity
    #[arg(long, value_enum)]
    pub variable: SweepVariable,

    /// Fixed step probabilities (for `--variable n`)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub p: Vec<f64>,

    /// Fixed step counts (for `--variable p` and `--variable gain`)
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<u32>,

    #[arg(long, allow_negative_numbers = true)]
    pub from: f64,

    #[arg(long, allow_negative_numbers = true)]
    pub to: f64,

    /// Grid size for continuous variables (default 101); `n` sweeps visit every integer
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Compare against the measured 3-step device at mean gain 7.24
    #[arg(long)]
    pub experimental: bool,

    /// Reproduce the p = 0.3, n = 1..3 illustration values
    #[arg(long)]
    pub illustrations: bool,

    /// Closed forms vs exact enumeration on random devices
    #[arg(long)]
    pub oracle: bool,

    /// Product of stage factors vs staircase ENF on random staircases
    #[arg(long)]
    pub equivalence: bool,

    /// Random devices for the oracle and equivalence checks
    #[arg(long, default_value_t = 500)]
    pub devices: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub device: DeviceArgs,

    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Independent random streams, run in parallel
    #[arg(long, default_value_t = 1)]
    pub partitions: u32,
}

#[derive(Debug, Args)]
pub struct CascadeArgs {
    /// JSON network file `{"input_noise": 1.0, "stages": [{"power_gain": ..., "internal_noise": ..., "external_noise": ...}]}`
    #[arg(long, conflicts_with = "steps", required_unless_present = "steps")]
    pub network: Option<PathBuf>,

    /// Build the network equivalent of a staircase with these step probabilities
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub steps: Option<Vec<f64>>,

    /// Input noise power for `--steps`
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub input_noise: f64,
}
