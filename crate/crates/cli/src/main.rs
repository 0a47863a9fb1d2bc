use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use mrrsim_core::config::{check_writable, parse_config, RunConfig};
use mrrsim_core::experiments::{optimize_purity, q_series, simulate, single_pulse_limit_study, sweep_eta_dtau};
use mrrsim_core::formats::{
    format_number, write_analysis_table, write_jsa_csv, write_limit_table, write_sweep_table, AnalysisRow,
};
use mrrsim_core::schmidt::{analyze_jsi, load_jsi, save_jsi};
use mrrsim_core::{Error, Result};

/// Heralded-photon purity simulator for dual-pulse pumped microrings.
#[derive(Parser, Debug)]
#[command(name = "mrrsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute one JSA/JSI and print its purities and brightness.
    Simulate {
        #[command(flatten)]
        config: ConfigArg,
        /// Write the JSA to `<prefix>.re.csv` and `<prefix>.im.csv`.
        #[arg(long, value_name = "PREFIX")]
        jsa_out: Option<PathBuf>,
        /// Write the JSI grid CSV.
        #[arg(long, value_name = "FILE")]
        jsi_out: Option<PathBuf>,
    },
    /// Tabulate purity and brightness over an (η, Δτ) grid.
    Sweep {
        #[command(flatten)]
        config: ConfigArg,
        /// Inclusive η range `a:b:n`.
        #[arg(long, value_name = "A:B:N", value_parser = parse_range)]
        eta: Values,
        /// Inclusive delay range in picoseconds `a:b:n`.
        #[arg(long, value_name = "A:B:N", value_parser = parse_range)]
        dtau_ps: Values,
        #[command(flatten)]
        out: OutArg,
    },
    /// Optimize (η, Δτ) for each quality factor.
    Qseries {
        #[command(flatten)]
        config: ConfigArg,
        /// Ascending quality factors, comma separated.
        #[arg(long, value_name = "LIST", value_parser = parse_list)]
        q: Values,
        #[command(flatten)]
        out: OutArg,
    },
    /// Single-pulse purity against pump bandwidth over linewidth.
    Limit {
        #[command(flatten)]
        config: ConfigArg,
        /// Pump FWHM over pump resonance linewidth, comma separated.
        #[arg(long, value_name = "LIST", value_parser = parse_list)]
        ratios: Values,
        #[command(flatten)]
        out: OutArg,
    },
    /// Flat-phase purity and error estimate of a measured JSI grid.
    Analyze {
        #[arg(long, value_name = "CSV")]
        jsi: PathBuf,
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
    },
    /// Find the purest (η, Δτ) and write it as a one-row sweep table.
    Optimize {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        out: OutArg,
    },
}

/// Parsed `a:b:n` range or comma list.
#[derive(Clone, Debug)]
struct Values(Vec<f64>);

#[derive(Args, Debug)]
struct ConfigArg {
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
}

#[derive(Args, Debug)]
struct OutArg {
    /// Output CSV; defaults to `out.table` from the config.
    #[arg(long, value_name = "CSV")]
    out: Option<PathBuf>,
}

/// `a:b:n` → n evenly spaced values from a to b inclusive.
fn parse_range(s: &str) -> std::result::Result<Values, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(format!("expected a:b:n, got `{s}`"));
    };
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("`{t}` is not a finite number"))
    };
    let (a, b) = (num(a)?, num(b)?);
    let n: usize = n.trim().parse().map_err(|_| format!("`{n}` is not a point count"))?;
    match n {
        0 => Err("point count must be at least 1".into()),
        1 if a != b => Err(format!("a single point needs a == b, got {a} and {b}")),
        1 => Ok(Values(vec![a])),
        _ => Ok(Values((0..n)
            .map(|k| if k == n - 1 { b } else { a + (b - a) * k as f64 / (n - 1) as f64 })
            .collect())),
    }
}

fn parse_list(s: &str) -> std::result::Result<Values, String> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{}` is not a finite number", t.trim()))
        })
        .collect::<std::result::Result<_, _>>()
        .map(Values)
}

fn output_path(flag: Option<PathBuf>, config: &RunConfig) -> Result<PathBuf> {
    let path = flag
        .or_else(|| config.outputs.table.clone())
        .ok_or_else(|| Error::Config("no output path: pass --out or set `out.table`".into()))?;
    check_writable(&path)?;
    Ok(path)
}

fn writable(path: Option<PathBuf>) -> Result<Option<PathBuf>> {
    if let Some(p) = &path {
        check_writable(p)?;
    }
    Ok(path)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            config,
            jsa_out,
            jsi_out,
        } => {
            let cfg = parse_config(&config.config)?;
            let jsa_out = writable(jsa_out.or_else(|| cfg.outputs.jsa_prefix.clone()))?;
            let jsi_out = writable(jsi_out.or_else(|| cfg.outputs.jsi.clone()))?;
            let result = simulate(&cfg.pump, &cfg.scenario)?;
            if let Some(prefix) = jsa_out {
                write_jsa_csv(prefix, &result.jsa)?;
            }
            if let Some(path) = jsi_out {
                save_jsi(path, &result.jsi)?;
            }
            let p = &result.point;
            println!("purity_true={}", format_number(p.purity_true));
            println!("purity_flat={}", format_number(p.purity_flat));
            println!("purity_error={}", format_number(p.purity_error));
            println!("relative_brightness={}", format_number(p.relative_brightness));
        }
        Command::Sweep {
            config,
            eta,
            dtau_ps,
            out,
        } => {
            let cfg = parse_config(&config.config)?;
            let out = output_path(out.out, &cfg)?;
            let dtau: Vec<f64> = dtau_ps.0.iter().map(|d| d * 1e-12).collect();
            let table = sweep_eta_dtau(&cfg.pump, &cfg.scenario, &eta.0, &dtau)?;
            for (e, d) in &table.skipped {
                eprintln!("skipped eta={e} dtau_ps={}: pump vanishes", d * 1e12);
            }
            write_sweep_table(out, &table.points)?;
        }
        Command::Qseries { config, q, out } => {
            let cfg = parse_config(&config.config)?;
            let out = output_path(out.out, &cfg)?;
            let points = q_series(&cfg.pump, &cfg.scenario, &q.0, &cfg.optimizer)?;
            write_sweep_table(out, &points)?;
        }
        Command::Limit { config, ratios, out } => {
            let cfg = parse_config(&config.config)?;
            let out = output_path(out.out, &cfg)?;
            let rows = single_pulse_limit_study(&cfg.pump, &cfg.scenario, &ratios.0)?;
            write_limit_table(out, &rows)?;
        }
        Command::Analyze { jsi, out } => {
            check_writable(&out)?;
            let result = analyze_jsi(&load_jsi(&jsi)?)?;
            let row = AnalysisRow {
                purity_flat: result.purity,
                purity_error: result.purity_error.unwrap_or(0.0),
                schmidt_number: result.schmidt_number,
            };
            write_analysis_table(out, &[row])?;
        }
        Command::Optimize { config, out } => {
            let cfg = parse_config(&config.config)?;
            let out = output_path(out.out, &cfg)?;
            let outcome = optimize_purity(&cfg.pump, &cfg.scenario, &cfg.optimizer)?;
            if !outcome.converged {
                eprintln!("optimizer stopped at its evaluation budget");
            }
            write_sweep_table(out, &[outcome.point])?;
        }
    }
    Ok(())
}

/// Collapse clap's multi-line report into one line.
fn one_line(report: &str) -> String {
    let body: Vec<&str> = report
        .lines()
        .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    let joined = body.join(" ");
    if joined.starts_with("error:") {
        joined
    } else {
        format!("error: {joined}")
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{}", e.render());
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", one_line(&e.render().to_string()));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
