use std::io::Write;

use apd_noise::cascade::{bangera_stage_factors, bangera_total, friis_total_for, CascadeNetwork};
use apd_noise::monte_carlo::{estimate, McConfig};
use apd_noise::{device_enf, StaircaseSpec};
use serde_json::json;

use crate::args::{CascadeArgs, EnfArgs, Format, McArgs};
use crate::error::{CliError, CliResult};
use crate::format::{sig, CSV_DIGITS};
use crate::input::{load_network, resolve_device, save_device};

/// Output settings shared by every subcommand.
#[derive(Debug, Clone, Copy)]
pub struct Style {
    pub format: Format,
    pub precision: usize,
}

fn write_json(out: &mut dyn Write, value: &serde_json::Value) -> CliResult<()> {
    serde_json::to_writer_pretty(&mut *out, value).expect("json values serialize");
    writeln!(out)?;
    Ok(())
}

enum Field {
    Count(u64),
    Value(f64),
}

impl From<f64> for Field {
    fn from(x: f64) -> Self {
        Field::Value(x)
    }
}

fn write_fields(out: &mut dyn Write, style: Style, fields: &[(String, Field)]) -> CliResult<()> {
    let render = |field: &Field, digits: usize| match field {
        Field::Count(n) => n.to_string(),
        Field::Value(x) => sig(*x, digits),
    };
    match style.format {
        Format::Csv => {
            writeln!(out, "field,value")?;
            for (name, value) in fields {
                writeln!(out, "{name},{}", render(value, CSV_DIGITS))?;
            }
        }
        _ => {
            let width = fields.iter().map(|(n, _)| n.len()).max().unwrap_or(0);
            for (name, value) in fields {
                writeln!(out, "{name:<width$}  {}", render(value, style.precision))?;
            }
        }
    }
    Ok(())
}

pub fn enf(args: &EnfArgs, style: Style, out: &mut dyn Write) -> CliResult<()> {
    let device = resolve_device(&args.device)?;
    if let Some(path) = &args.save_spec {
        save_device(&device, path)?;
    }
    let mut report = device_enf(&device);
    if let Some(current) = args.current {
        report = report
            .with_current(current)
            .map_err(|e| CliError::domain("--current", e))?;
    }

    if style.format == Format::Json {
        return write_json(out, &json!({ "device": device, "report": report }));
    }

    let m = report.moments;
    let mut fields: Vec<(String, Field)> = vec![
        ("total_enf".into(), report.total_enf.into()),
        ("mean_gain".into(), m.mean.into()),
        ("mean_square_gain".into(), m.mean_square.into()),
        ("variance".into(), m.variance.into()),
    ];
    if let Some(s) = report.spectral_intensity {
        fields.push(("spectral_intensity_a2_per_hz".into(), s.into()));
    }
    fields.extend(
        report
            .per_layer_enf
            .iter()
            .enumerate()
            .map(|(i, f)| (format!("layer_{}_enf", i + 1), (*f).into())),
    );
    write_fields(out, style, &fields)
}

pub fn mc(args: &McArgs, style: Style, out: &mut dyn Write) -> CliResult<()> {
    let device = resolve_device(&args.device)?;
    let cfg = McConfig::with_partitions(args.trials, args.seed, args.partitions)
        .map_err(|e| CliError::domain("--trials/--partitions", e))?;
    let est = estimate(&device, &cfg);
    let closed = device_enf(&device);

    if style.format == Format::Json {
        return write_json(
            out,
            &json!({
                "config": cfg,
                "estimate": est,
                "closed_form": { "mean_gain": closed.moments.mean, "total_enf": closed.total_enf },
            }),
        );
    }

    let sigmas = |delta: f64, se: f64| if se > 0.0 { delta.abs() / se } else { 0.0 };
    write_fields(
        out,
        style,
        &[
            ("trials".into(), Field::Count(est.trials)),
            ("seed".into(), Field::Count(args.seed)),
            ("mean_gain".into(), est.moments.mean.into()),
            ("mean_gain_std_error".into(), est.std_error_mean.into()),
            ("mean_gain_closed_form".into(), closed.moments.mean.into()),
            ("mean_square_gain".into(), est.moments.mean_square.into()),
            ("enf".into(), est.enf_estimate.into()),
            ("enf_std_error".into(), est.std_error_enf.into()),
            ("enf_closed_form".into(), closed.total_enf.into()),
            (
                "enf_deviation_sigmas".into(),
                sigmas(est.enf_estimate - closed.total_enf, est.std_error_enf).into(),
            ),
        ],
    )
}

pub fn cascade(args: &CascadeArgs, style: Style, out: &mut dyn Write) -> CliResult<()> {
    let network = match (&args.network, &args.steps) {
        (Some(path), _) => load_network(path)?,
        (None, Some(steps)) => {
            let spec =
                StaircaseSpec::new(steps.clone()).map_err(|e| CliError::domain("--steps", e))?;
            CascadeNetwork::from_staircase(&spec, args.input_noise)
                .map_err(|e| CliError::domain("--input-noise", e))?
        }
        (None, None) => return Err(CliError::Parse("use --network or --steps".into())),
    };
    let factors = bangera_stage_factors(&network);
    let product = bangera_total(&network);
    let friis = friis_total_for(&network);

    if style.format == Format::Json {
        return write_json(
            out,
            &json!({
                "network": network,
                "stage_factors": factors,
                "bangera_total": product,
                "friis_total": friis,
                "difference": product - friis,
            }),
        );
    }

    let mut fields: Vec<(String, Field)> = factors
        .iter()
        .enumerate()
        .map(|(i, f)| (format!("stage_{}_factor", i + 1), (*f).into()))
        .collect();
    fields.push(("bangera_total".into(), product.into()));
    fields.push(("friis_total".into(), friis.into()));
    fields.push(("difference".into(), (product - friis).into()));
    write_fields(out, style, &fields)
}
