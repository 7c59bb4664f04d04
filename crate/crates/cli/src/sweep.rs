//! Equal-probability staircase sweeps over `p`, `n` or mean gain.

use std::io::Write;

use apd_noise::{equal_p_enf, probability_from_gain, staircase_mean_gain, StaircaseSpec};
use serde::Serialize;

use crate::args::{Format, SweepArgs, SweepVariable};
use crate::commands::Style;
use crate::error::{CliError, CliResult};
use crate::format::{sig, CSV_DIGITS};

pub const CSV_HEADER: &str = "p,n,mean_gain,total_enf";

const DEFAULT_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq)]
pub enum SweepRequest {
    /// `p` on a grid, one series per step count.
    Probability { n: Vec<u32>, grid: Vec<f64> },
    /// Every integer step count in a range, one series per probability.
    Steps { p: Vec<f64>, n: Vec<u32> },
    /// Mean gain on a grid, one series per step count.
    Gain { n: Vec<u32>, grid: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub n: u32,
    pub mean_gain: f64,
    pub total_enf: f64,
}

fn linspace(from: f64, to: f64, points: usize) -> Vec<f64> {
    let last = (points - 1) as f64;
    (0..points)
        .map(|k| {
            if k == points - 1 {
                to
            } else {
                from + (to - from) * k as f64 / last
            }
        })
        .collect()
}

impl SweepRequest {
    pub fn from_args(args: &SweepArgs) -> CliResult<Self> {
        if !(args.from.is_finite() && args.to.is_finite()) || args.from > args.to {
            return Err(CliError::Domain(format!(
                "--from {} must not exceed --to {}",
                args.from, args.to
            )));
        }
        let grid = || -> CliResult<Vec<f64>> {
            let points = args.points.unwrap_or(DEFAULT_POINTS);
            if points < 2 {
                return Err(CliError::Domain(format!(
                    "--points must be at least 2, got {points}"
                )));
            }
            Ok(linspace(args.from, args.to, points))
        };
        let step_counts = || -> CliResult<Vec<u32>> {
            if args.n.is_empty() {
                return Err(CliError::Parse("this sweep needs --n".into()));
            }
            if let Some(bad) = args.n.iter().find(|&&n| n < 1) {
                return Err(CliError::Domain(format!(
                    "--n values must be at least 1, got {bad}"
                )));
            }
            Ok(args.n.clone())
        };

        match args.variable {
            SweepVariable::P => {
                if args.from < 0.0 || args.to > 1.0 {
                    return Err(CliError::Domain(format!(
                        "probability range [{}, {}] is outside [0, 1]",
                        args.from, args.to
                    )));
                }
                Ok(Self::Probability {
                    n: step_counts()?,
                    grid: grid()?,
                })
            }
            SweepVariable::N => {
                if args.p.is_empty() {
                    return Err(CliError::Parse("--variable n needs --p".into()));
                }
                if let Some(bad) = args.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    return Err(CliError::Domain(format!(
                        "--p value {bad} is outside [0, 1]"
                    )));
                }
                if args.from < 1.0 || args.from.fract() != 0.0 || args.to.fract() != 0.0 {
                    return Err(CliError::Domain(format!(
                        "step-count range must be integers >= 1, got [{}, {}]",
                        args.from, args.to
                    )));
                }
                if args.points.is_some() {
                    return Err(CliError::Parse(
                        "--points does not apply to --variable n; every integer is visited".into(),
                    ));
                }
                Ok(Self::Steps {
                    p: args.p.clone(),
                    n: (args.from as u32..=args.to as u32).collect(),
                })
            }
            SweepVariable::Gain => Ok(Self::Gain {
                n: step_counts()?,
                grid: grid()?,
            }),
        }
    }

    pub fn rows(&self) -> CliResult<Vec<SweepRow>> {
        let row = |p: f64, n: u32| -> CliResult<SweepRow> {
            Ok(SweepRow {
                p,
                n,
                mean_gain: staircase_mean_gain(&StaircaseSpec::uniform(p, n)?),
                total_enf: equal_p_enf(p, n)?,
            })
        };
        let mut rows = Vec::new();
        match self {
            Self::Probability { n, grid } => {
                for &steps in n {
                    for &p in grid {
                        rows.push(row(p, steps)?);
                    }
                }
            }
            Self::Steps { p, n } => {
                for &prob in p {
                    for &steps in n {
                        rows.push(row(prob, steps)?);
                    }
                }
            }
            Self::Gain { n, grid } => {
                for &steps in n {
                    for &gain in grid {
                        let p = probability_from_gain(gain, steps).map_err(|e| {
                            CliError::domain(format!("gain {gain} with n = {steps}"), e)
                        })?;
                        rows.push(row(p, steps)?);
                    }
                }
            }
        }
        Ok(rows)
    }
}

pub fn write_csv(rows: &[SweepRow], out: &mut dyn Write) -> CliResult<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            sig(r.p, CSV_DIGITS),
            r.n,
            sig(r.mean_gain, CSV_DIGITS),
            sig(r.total_enf, CSV_DIGITS)
        )?;
    }
    Ok(())
}

pub fn run(args: &SweepArgs, style: Style, out: &mut dyn Write) -> CliResult<()> {
    let rows = SweepRequest::from_args(args)?.rows()?;
    match style.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, &rows).expect("rows serialize");
            writeln!(out)?;
            Ok(())
        }
        Format::Csv | Format::Text => write_csv(&rows, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(variable: SweepVariable, from: f64, to: f64) -> SweepArgs {
        SweepArgs {
            variable,
            p: vec![],
            n: vec![],
            from,
            to,
            points: None,
        }
    }

    #[test]
    fn zero_probability_curve_is_flat() {
        let mut a = args(SweepVariable::N, 1.0, 10.0);
        a.p = vec![0.0];
        let rows = SweepRequest::from_args(&a).unwrap().rows().unwrap();
        assert_eq!(rows.len(), 10);
        assert!(rows
            .iter()
            .all(|r| r.total_enf == 1.0 && r.mean_gain == 1.0));
    }

    #[test]
    fn ideal_curve_doubles() {
        let mut a = args(SweepVariable::N, 1.0, 10.0);
        a.p = vec![1.0];
        let rows = SweepRequest::from_args(&a).unwrap().rows().unwrap();
        for r in rows {
            assert_eq!(r.mean_gain, 2f64.powi(r.n as i32));
            assert_eq!(r.total_enf, 1.0);
        }
    }

    #[test]
    fn probability_grid_hits_the_peak() {
        let mut a = args(SweepVariable::P, 0.0, 1.0);
        a.n = vec![1];
        a.points = Some(4);
        let rows = SweepRequest::from_args(&a).unwrap().rows().unwrap();
        let last = rows.last().unwrap();
        assert_eq!((last.p, last.mean_gain, last.total_enf), (1.0, 2.0, 1.0));
        assert!((rows[1].total_enf - 1.125).abs() < 1e-12);
    }

    #[test]
    fn gain_sweep_recovers_the_gain() {
        let mut a = args(SweepVariable::Gain, 1.0, 8.0);
        a.n = vec![3];
        a.points = Some(15);
        for r in SweepRequest::from_args(&a).unwrap().rows().unwrap() {
            assert!((0.0..=1.0).contains(&r.p));
        }
        let rows = SweepRequest::from_args(&a).unwrap().rows().unwrap();
        assert!((rows[14].mean_gain - 8.0).abs() < 1e-12);
        assert!((rows[7].mean_gain - 4.5).abs() < 1e-12);
    }

    #[test]
    fn request_validation() {
        let mut a = args(SweepVariable::P, 0.8, 0.2);
        a.n = vec![1];
        assert!(matches!(
            SweepRequest::from_args(&a),
            Err(CliError::Domain(_))
        ));

        let mut a = args(SweepVariable::P, 0.0, 1.5);
        a.n = vec![1];
        assert!(matches!(
            SweepRequest::from_args(&a),
            Err(CliError::Domain(_))
        ));

        let mut a = args(SweepVariable::P, 0.0, 1.0);
        a.n = vec![1];
        a.points = Some(1);
        assert!(matches!(
            SweepRequest::from_args(&a),
            Err(CliError::Domain(_))
        ));

        let a = args(SweepVariable::P, 0.0, 1.0);
        assert!(matches!(
            SweepRequest::from_args(&a),
            Err(CliError::Parse(_))
        ));

        let mut a = args(SweepVariable::N, 1.5, 4.0);
        a.p = vec![0.5];
        assert!(matches!(
            SweepRequest::from_args(&a),
            Err(CliError::Domain(_))
        ));

        let mut a = args(SweepVariable::Gain, 1.0, 9.0);
        a.n = vec![3];
        let req = SweepRequest::from_args(&a).unwrap();
        assert!(matches!(req.rows(), Err(CliError::Domain(_))));
    }
}
