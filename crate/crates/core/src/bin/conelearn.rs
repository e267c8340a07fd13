use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use conelearn::adversary::{write_replay, CStarMode};
use conelearn::harness::io::{write_jsonl, write_sweep_csv};
use conelearn::harness::verify::{run_suite, Suite};
use conelearn::harness::{run_with_instances, sweep, EnvKind, PolicyKind, RunConfig, TieBreakMode};
use conelearn::{Error, Result};

#[derive(Parser)]
#[command(
    name = "conelearn",
    version,
    about = "Learn a cost vector from observed optimal actions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one policy against one environment.
    Run {
        #[command(flatten)]
        opts: RunOpts,
        /// Per-period JSON Lines output (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the played instances as a replay file.
        #[arg(long)]
        dump_instances: Option<PathBuf>,
    },
    /// Run the built-in property checks.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Run the same configuration for several horizons and emit a CSV table.
    Sweep {
        #[command(flatten)]
        opts: RunOpts,
        /// Comma-separated, strictly increasing horizons.
        #[arg(long = "T", value_parser = parse_horizons, default_value = "")]
        horizons: Horizons,
        /// CSV output (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone)]
struct Horizons(Vec<usize>);

fn parse_horizons(text: &str) -> std::result::Result<Horizons, std::num::ParseIntError> {
    let list = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()?;
    Ok(Horizons(list))
}

#[derive(Args, Default)]
struct RunOpts {
    /// JSON configuration file; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    policy: Option<PolicyKind>,
    /// killer | offline | random | replay:<path>
    #[arg(long)]
    env: Option<EnvKind>,
    #[arg(long)]
    d: Option<usize>,
    /// Horizon T; `--T` is accepted as well.
    #[arg(long = "horizon", id = "horizon")]
    horizon: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tiebreak: Option<TieBreakMode>,
    #[arg(long)]
    k_actions: Option<usize>,
    /// uniform | boundary
    #[arg(long, value_parser = parse_mode)]
    c_star_mode: Option<CStarMode>,
    /// Random environment: start from a cap of this aperture around e_1.
    #[arg(long)]
    start_cap: Option<f64>,
    /// Check every invariant while running; a violation exits with code 2.
    #[arg(long)]
    verify: bool,
    /// Fail if the cumulative regret exceeds the policy's theorem bound.
    #[arg(long)]
    assert_bounds: bool,
}

fn parse_mode(s: &str) -> std::result::Result<CStarMode, String> {
    match s {
        "uniform" => Ok(CStarMode::Uniform),
        "boundary" => Ok(CStarMode::Boundary),
        other => Err(format!("unknown c_star mode '{other}'")),
    }
}

/// Configuration file: every field optional.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    policy: Option<PolicyKind>,
    env: Option<String>,
    d: Option<usize>,
    #[serde(rename = "T")]
    horizon: Option<usize>,
    alpha: Option<f64>,
    epsilon: Option<f64>,
    eta: Option<f64>,
    seed: Option<u64>,
    tiebreak: Option<TieBreakMode>,
    k_actions: Option<usize>,
    c_star_mode: Option<CStarMode>,
    start_cap: Option<f64>,
    verify: Option<bool>,
    assert_bounds: Option<bool>,
}

impl RunOpts {
    fn resolve(&self, horizon_flag: Option<usize>) -> Result<RunConfig> {
        let file: ConfigFile = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            None => ConfigFile::default(),
        };
        let mut c = RunConfig::default();
        macro_rules! merge {
            ($field:ident) => {
                if let Some(v) = self.$field.clone().or(file.$field.clone()) {
                    c.$field = v;
                }
            };
        }
        merge!(policy);
        merge!(d);
        merge!(alpha);
        merge!(seed);
        merge!(tiebreak);
        merge!(k_actions);
        merge!(c_star_mode);
        c.epsilon = self.epsilon.or(file.epsilon);
        c.eta = self.eta.or(file.eta);
        c.start_cap = self.start_cap.or(file.start_cap);
        if let Some(env) = self.env.clone() {
            c.env = env;
        } else if let Some(env) = &file.env {
            c.env = env.parse()?;
        }
        if let Some(h) = horizon_flag.or(self.horizon).or(file.horizon) {
            c.horizon = h;
        }
        c.verify = self.verify || file.verify.unwrap_or(false);
        c.assert_bounds = self.assert_bounds || file.assert_bounds.unwrap_or(false);
        c.validate()?;
        Ok(c)
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            opts,
            out,
            dump_instances,
        } => {
            let config = opts.resolve(None)?;
            let (result, played) = run_with_instances(&config)?;
            let mut w = output(&out)?;
            write_jsonl(&mut w, &result)?;
            w.flush()?;
            if let Some(path) = dump_instances {
                let mut f = output(&Some(path))?;
                write_replay(&mut f, &result.c_star, &played)?;
                f.flush()?;
            }
            Ok(())
        }
        Command::Verify { suite } => {
            let suite: Suite = suite.parse()?;
            let report = run_suite(suite);
            let mut stdout = std::io::stdout().lock();
            for check in &report {
                writeln!(stdout, "{check}")?;
            }
            let failed = report.iter().filter(|c| !c.passed).count();
            writeln!(stdout, "{} checks, {} failed", report.len(), failed)?;
            if failed > 0 {
                return Err(Error::Verification(format!("{failed} checks failed")));
            }
            Ok(())
        }
        Command::Sweep {
            opts,
            horizons: Horizons(horizons),
            out,
        } => {
            let template = opts.resolve(horizons.first().copied())?;
            let rows = sweep(&template, &horizons)?;
            let mut w = output(&out)?;
            write_sweep_csv(&mut w, &rows)?;
            w.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let mut argv: Vec<String> = std::env::args().collect();
    // `--T` selects the horizon of `run`; `sweep` reads it as a list.
    let is_sweep = argv.get(1).is_some_and(|a| a == "sweep");
    if !is_sweep {
        for a in argv.iter_mut() {
            if a == "--T" {
                *a = "--horizon".into();
            } else if let Some(v) = a.strip_prefix("--T=") {
                *a = format!("--horizon={v}");
            }
        }
    }
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(Error::Config(String::new()).exit_code() as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": e.to_string(), "exit_code": e.exit_code() })
            );
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
