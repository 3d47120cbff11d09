use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use qmi_beamforming::algorithm::Algorithm1Options;
use qmi_beamforming::bench::{
    certificate_text, kkt_text, run_experiment, run_single, ExperimentConfig, RunOptions, SolutionFile, FULL_TRIALS,
};
use qmi_beamforming::{Error, HermitianMatrix};

/// Exit codes: 2 for unreadable or invalid input, 3 when the solver does not
/// converge, 4 when `certify` finds residuals above tolerance.
const EXIT_INPUT: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_CERTIFY: u8 = 4;

const CERTIFY_TOL: f64 = 1e-6;

#[derive(Parser)]
#[command(name = "qmibf", about = "Worst-case robust adaptive beamforming via LMI relaxation")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Robust beamformer for given sample and presumed signal covariances.
    Solve {
        #[arg(long)]
        r_hat: PathBuf,
        #[arg(long)]
        rs_hat: PathBuf,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        eps: f64,
        /// Write the primal-dual solution here for later `certify`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo experiment, CSV to --out or stdout.
    Experiment {
        #[arg(long, conflicts_with = "preset")]
        config: Option<PathBuf>,
        /// example1, example2 or example3.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// 100 trials per grid point unless --trials is given.
        #[arg(long)]
        full_scale: bool,
        /// Record per-method wall time (makes output nondeterministic).
        #[arg(long)]
        timing: bool,
    },
    /// Re-check KKT residuals and certificates of a stored solution.
    Certify {
        #[arg(long)]
        solution: PathBuf,
    },
}

fn read_matrix(path: &Path) -> Result<HermitianMatrix, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Input)?;
    text.parse::<HermitianMatrix>().map_err(|e| Failure::Input(anyhow::anyhow!("{}: {e}", path.display())))
}

enum Failure {
    Input(anyhow::Error),
    Solver(anyhow::Error),
    Certify(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Solver(_) | Error::Decomposition { .. } => Failure::Solver(e.into()),
            other => Failure::Input(other.into()),
        }
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())).map_err(Failure::Input),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.cmd {
        Command::Solve { r_hat, rs_hat, gamma, eps, out } => {
            let report = run_single(read_matrix(&r_hat)?, read_matrix(&rs_hat)?, gamma, eps, &Algorithm1Options::default())?;
            print!("{}", report.text());
            if let Some(p) = out {
                write_out(Some(&p), &report.solution_file())?;
            }
            Ok(())
        }
        Command::Experiment { config, preset, seed, trials, out, full_scale, timing } => {
            let mut cfg = match (config, preset) {
                (Some(path), _) => {
                    let text = fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))
                        .map_err(Failure::Input)?;
                    ExperimentConfig::from_text(&text)
                        .map_err(|e| Failure::Input(anyhow::anyhow!("{}: {e}", path.display())))?
                }
                (None, Some(name)) => ExperimentConfig::preset(&name)
                    .ok_or_else(|| Failure::Input(anyhow::anyhow!("unknown preset '{name}'")))?,
                (None, None) => ExperimentConfig::example1(),
            };
            if full_scale {
                cfg.trials = FULL_TRIALS;
            }
            if let Some(t) = trials {
                cfg.trials = t;
            }
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            let output = run_experiment(&cfg, &RunOptions { timing, ..Default::default() })?;
            write_out(out.as_deref(), &output.csv())?;
            match out {
                Some(p) => {
                    let mut name = p.file_stem().unwrap_or_default().to_os_string();
                    name.push("_summary.csv");
                    write_out(Some(&p.with_file_name(name)), &output.summary_csv())?;
                }
                None => eprint!("{}", output.summary_csv()),
            }
            Ok(())
        }
        Command::Certify { solution } => {
            let text = fs::read_to_string(&solution)
                .with_context(|| format!("reading {}", solution.display()))
                .map_err(Failure::Input)?;
            let stored = SolutionFile::parse(&text)?;
            let (kkt, cert) = stored.certify()?;
            print!("{}{}", kkt_text(&kkt), certificate_text(&cert));
            if kkt.max_residual() > CERTIFY_TOL {
                return Err(Failure::Certify(format!("largest residual {:e} exceeds {CERTIFY_TOL:e}", kkt.max_residual())));
            }
            println!("status = ok");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver error: {e:#}");
            ExitCode::from(EXIT_SOLVER)
        }
        Err(Failure::Certify(msg)) => {
            eprintln!("certification failed: {msg}");
            ExitCode::from(EXIT_CERTIFY)
        }
    }
}
