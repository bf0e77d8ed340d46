mod args;
mod commands;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use deviatile::data_io::{write_series, Report};
use deviatile::par::{with_threads, Execution};

use args::{Cli, Command};

const VERSION: &str = concat!("deviatile ", env!("CARGO_PKG_VERSION"));

/// The invocation as a copy-pasteable shell line, program name normalised.
fn command_line() -> String {
    let quote = |a: String| {
        let plain = !a.is_empty()
            && a.chars().all(|c| c.is_ascii_alphanumeric() || "-_./:=,@%+".contains(c));
        if plain {
            a
        } else {
            format!("'{}'", a.replace('\'', r"'\''"))
        }
    };
    std::iter::once("deviatile".to_string())
        .chain(std::env::args_os().skip(1).map(|a| quote(a.to_string_lossy().into_owned())))
        .collect::<Vec<_>>()
        .join(" ")
}

fn with_provenance(mut r: Report, seed: Option<u64>) -> Report {
    let mut head = vec![
        ("command".to_string(), command_line()),
        ("version".to_string(), VERSION.to_string()),
        ("seed".to_string(), seed.map_or("none".to_string(), |s| s.to_string())),
    ];
    head.append(&mut r.metadata);
    r.metadata = head;
    r
}

fn sink(cli: &Cli) -> Result<Box<dyn Write>> {
    Ok(match &cli.output {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(cli: &Cli) -> Result<()> {
    let exec = Execution::default();
    let (out, seed) = match &cli.command {
        Command::Expand(a) => (commands::expand(a)?, None),
        Command::TrueValue(a) => {
            let seed = (a.model.model == args::ModelKind::Garch).then_some(a.seed);
            (commands::true_values(a, exec)?, seed)
        }
        Command::Simulate(a) => {
            let (o, seed) = commands::simulate(a, exec)?;
            (o, Some(seed))
        }
        Command::Estimate(a) => commands::estimate(a, exec)?,
        Command::HillPlot(a) => (commands::hill_plot(a)?, None),
        Command::Bootstrap(a) => (commands::bootstrap(a, exec)?, Some(a.boot.seed)),
        Command::Fixture(a) => {
            let series = commands::fixture(a)?;
            let mut w = sink(cli)?;
            writeln!(w, "# command: {}", command_line())?;
            writeln!(w, "# version: {VERSION}")?;
            writeln!(w, "# seed: {}", a.seed)?;
            write_series(&series, &mut w)?;
            w.flush()?;
            return Ok(());
        }
    };
    let report = with_provenance(out, seed);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let text = report.render(cli.format)?;
    let mut w = sink(cli)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match with_threads(cli.threads, || run(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
