use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use orbitlap::BesselPoint;
use orbitlap_cli::config::{ModelChoice, Overrides, RunConfig};
use orbitlap_cli::dataset::write_dataset;
use orbitlap_cli::selftest::{self, Hooks};
use orbitlap_cli::{commands, exit, CliError, CommandOutput};

#[derive(Parser)]
#[command(name = "orbitlap", version, about = "Symmetric Laplace MLEs by orbit-norm minimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunFlags {
    /// JSON run configuration; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// full, leftright or finite:<file>.
    #[arg(long)]
    model: Option<ModelChoice>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// JSON file of stability threshold overrides.
    #[arg(long)]
    thresholds: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl RunFlags {
    fn resolve(&self, seed: Option<u64>) -> Result<RunConfig, CliError> {
        RunConfig::resolve(&Overrides {
            config: self.config.clone(),
            model: self.model.clone(),
            tol: self.tol,
            max_iter: self.max_iter,
            seed,
            thresholds: self.thresholds.clone(),
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit the group model and report the MLE and stability class.
    Estimate {
        dataset: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Classify the data under the group action.
    Classify {
        dataset: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Draw a weighted sample and write it as a dataset file.
    Sample {
        /// JSON parameters: {"kind":"vector","sigma":[...]} or {"kind":"matrix","sigma1":[...],"sigma2":[...]}.
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        count: usize,
        /// Defaults to the config file's seed, then 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Observed- and complete-data log-likelihoods at given parameters.
    Loglik {
        dataset: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the built-in check battery.
    Selftest {
        /// Adds this offset to every ln K evaluation (harness sensitivity check).
        #[arg(long, hide = true)]
        bessel_offset: Option<f64>,
    },
}

fn emit(text: &str, output: Option<&Path>) -> anyhow::Result<()> {
    match output {
        Some(path) => fs::write(path, format!("{text}\n")).with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}")?;
            Ok(())
        }
    }
}

fn finish(out: CommandOutput, output: Option<&Path>) -> anyhow::Result<u8> {
    emit(&out.text, output)?;
    Ok(out.code)
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Estimate { dataset, flags } => {
            finish(commands::estimate(&dataset, &flags.resolve(None)?)?, flags.output.as_deref())
        }
        Command::Classify { dataset, flags } => {
            finish(commands::classify(&dataset, &flags.resolve(None)?)?, flags.output.as_deref())
        }
        Command::Sample { params, count, seed, config, output } => {
            let config = RunConfig::resolve(&Overrides { config, seed, ..Default::default() })?;
            let data = commands::sample(&params, count, config.seed)?;
            let mut bytes = Vec::new();
            write_dataset(&data, &mut bytes)?;
            match output {
                Some(path) => fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?,
                None => std::io::stdout().lock().write_all(&bytes)?,
            }
            Ok(exit::OK)
        }
        Command::Loglik { dataset, params, output } => finish(commands::loglik(&dataset, &params)?, output.as_deref()),
        Command::Selftest { bessel_offset } => {
            let hooks = match bessel_offset {
                Some(delta) => Hooks {
                    log_bessel_k: Box::new(move |nu, x| Ok(orbitlap::log_bessel_k(BesselPoint::new(nu, x)?)? + delta)),
                },
                None => Hooks::default(),
            };
            let results = selftest::run(&hooks);
            print!("{}", selftest::render(&results));
            Ok(if results.iter().all(|r| r.passed) { exit::OK } else { exit::SELFTEST_FAILED })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ORBITLAP_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors share the generic failure code; 2 means "no MLE".
            return ExitCode::from(if e.use_stderr() { exit::ERROR } else { exit::OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::ERROR)
        }
    }
}
