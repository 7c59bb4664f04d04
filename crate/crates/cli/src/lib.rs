//! Command-line front end for the `apd-noise` library.

pub mod args;
pub mod commands;
pub mod error;
pub mod format;
pub mod input;
pub mod sweep;
pub mod validate;

use std::io::Write;

use args::{Cli, Command};
use commands::Style;
pub use error::{CliError, CliResult};

pub fn run(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    let style = Style {
        format: cli.format,
        precision: cli.precision as usize,
    };
    match &cli.command {
        Command::Enf(a) => commands::enf(a, style, out),
        Command::Sweep(a) => sweep::run(a, style, out),
        Command::Validate(a) => validate::run(a, style, out),
        Command::Mc(a) => commands::mc(a, style, out),
        Command::Cascade(a) => commands::cascade(a, style, out),
    }
}
