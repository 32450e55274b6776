//! Command-line front end: flag parsing, config-file overlay, and a summary
//! table. All real work happens in the library.

use std::path::PathBuf;

use clap::Parser;

use tplq::pipeline::{load_config_file, run_pipeline, run_window_sweep, RunConfig};
use tplq::{Error, LeakageLedger, Result};

/// Quantify temporal privacy leakage of differentially private event-log
/// releases.
#[derive(Parser, Debug)]
#[command(name = "tplq", version, about)]
struct Cli {
    /// Event log to analyze (CSV or XES).
    #[arg(long)]
    input: Option<PathBuf>,

    /// Input format (csv|xes); inferred from the extension when omitted.
    #[arg(long)]
    format: Option<String>,

    /// JSON config file; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Fraction of events published in the initial release, in (0, 1].
    #[arg(long)]
    split: Option<f64>,

    /// Publishing scenario.
    #[arg(long, value_parser = ["certain", "uncertain"])]
    scenario: Option<String>,

    /// Events per case per release: a number, or an inclusive range like
    /// 1..4 to sweep one run per window into out/window_N/.
    #[arg(long)]
    window: Option<String>,

    /// Privacy budget per release.
    #[arg(long)]
    epsilon: Option<f64>,

    /// Maximum number of releases.
    #[arg(long)]
    releases: Option<u32>,

    /// Seed driving case advancement and noise.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Artifacts to write, comma separated: csv,json,svg,dot.
    #[arg(long)]
    emit: Option<String>,

    /// Cap the leakage pair universe to the most probable states.
    #[arg(long)]
    max_pairs: Option<usize>,
}

enum WindowSpec {
    Single(u32),
    Sweep(Vec<u32>),
}

fn parse_window(spec: &str) -> Result<WindowSpec> {
    if let Some((a, b)) = spec.split_once("..") {
        let lo: u32 = a
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad window range start '{a}'")))?;
        let hi: u32 = b
            .trim()
            .trim_start_matches('=')
            .parse()
            .map_err(|_| Error::Config(format!("bad window range end '{b}'")))?;
        if lo == 0 || hi < lo {
            return Err(Error::Config(format!("bad window range '{spec}'")));
        }
        Ok(WindowSpec::Sweep((lo..=hi).collect()))
    } else {
        let w: u32 = spec
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad window '{spec}'")))?;
        Ok(WindowSpec::Single(w))
    }
}

fn overlay(cli: &Cli, cfg: &mut RunConfig) -> Result<Option<WindowSpec>> {
    if let Some(v) = &cli.input {
        cfg.input = Some(v.clone());
    }
    if let Some(v) = &cli.format {
        cfg.format = Some(v.parse()?);
    }
    if let Some(v) = cli.split {
        cfg.split = v;
    }
    if let Some(v) = &cli.scenario {
        cfg.scenario = match v.as_str() {
            "certain" => tplq::ScenarioKind::Certain,
            "uncertain" => tplq::ScenarioKind::Uncertain,
            other => return Err(Error::Config(format!("unknown scenario '{other}'"))),
        };
    }
    if let Some(v) = cli.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = cli.releases {
        cfg.releases = v;
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = &cli.out {
        cfg.out = v.clone();
    }
    if let Some(v) = &cli.emit {
        cfg.emit = v.parse()?;
    }
    if let Some(v) = cli.max_pairs {
        cfg.max_pairs = Some(v);
    }
    match &cli.window {
        Some(spec) => Ok(Some(parse_window(spec)?)),
        None => Ok(None),
    }
}

fn print_ledger(ledger: &LeakageLedger) {
    println!("{:>8} {:>12} {:>12} {:>12} {:>12}", "release", "pl", "bpl", "fpl", "tpl");
    for r in ledger.records() {
        println!(
            "{:>8} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
            r.release, r.pl, r.bpl, r.fpl, r.tpl
        );
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => load_config_file(path)?,
        None => RunConfig::default(),
    };
    let window = overlay(&cli, &mut cfg)?;
    match window {
        Some(WindowSpec::Sweep(windows)) => {
            let runs = run_window_sweep(&cfg, &windows)?;
            for (w, ledger) in &runs {
                println!("window {w}:");
                print_ledger(ledger);
            }
        }
        Some(WindowSpec::Single(w)) => {
            cfg.window = w;
            let ledger = run_pipeline(&cfg)?;
            print_ledger(&ledger);
        }
        None => {
            let ledger = run_pipeline(&cfg)?;
            print_ledger(&ledger);
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("TPLQ_LOG_LEVEL", "warn"),
    )
    .init();
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
