//! `spo`: seed, continue, and analyze subharmonic periodic orbits from a TOML run file.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spo_core::io::{cmd_continue, cmd_seed, cmd_separatrix, cmd_validate, CommandError, RunConfig};

#[derive(Parser)]
#[command(name = "spo", version = spo_core::VERSION, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Run configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Override any configuration value, e.g. `--set solver.solver.tol=1e-8`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; same as `--set output.dir=...`.
    #[arg(short, long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self, extra: Vec<String>) -> Result<RunConfig, CommandError> {
        let mut all = self.overrides.clone();
        all.extend(extra);
        if let Some(o) = &self.out {
            all.push(format!("output.dir={:?}", o.display().to_string()));
        }
        Ok(RunConfig::load(&self.config, &all)?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the eps = 0 orbit with its Floquet frame and write seed.json.
    Seed {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Continue a seed or an intermediate step file to eps_f.
    Continue {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Solution file to start from.
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        eps_f: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Parameterize the separatrices of a hyperbolic solution and export curves.
    Separatrix {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        degree: Option<usize>,
    },
    /// Re-check a solution file against the configuration stored in it.
    Validate { file: PathBuf },
}

fn run(cli: Cli) -> Result<(), CommandError> {
    match cli.command {
        Command::Seed { cfg } => {
            let (sol, path) = cmd_seed(&cfg.load(vec![])?)?;
            println!("seed: {} points, lambda_s = {:.6}, lambda_u = {:.6}, T = {:.6}",
                sol.len(), sol.lambda.lambda_s[0], sol.lambda.lambda_u[0], sol.lambda.t);
            println!("wrote {}", path.display());
        }
        Command::Continue { cfg, from, eps_f, steps } => {
            let mut extra = Vec::new();
            if let Some(e) = eps_f {
                extra.push(format!("continuation.eps_f={e:e}"));
            }
            if let Some(n) = steps {
                extra.push(format!("continuation.n_steps={n}"));
            }
            for (sol, path) in cmd_continue(&cfg.load(extra)?, &from)? {
                let worst = sol.history.last().map_or(0.0, |h| h[0].max(h[1]));
                println!("eps = {:.6e}  {:?}  lambda1 = {:.8}  lambda2 = {:.8}  residual = {:.2e}  {}",
                    sol.eps, sol.lambda.stability(), sol.lambda.lambda1, sol.lambda.lambda2, worst, path.display());
            }
        }
        Command::Separatrix { cfg, from, degree } => {
            let extra = degree.map(|d| format!("separatrix.degree={d}")).into_iter().collect();
            for o in cmd_separatrix(&cfg.load(extra)?, &from)? {
                println!("{}: {} rows, min radius {:.4e}; {}", o.csv.display(), o.rows, o.min_radius, o.json.display());
            }
        }
        Command::Validate { file } => print!("{}", cmd_validate(&file)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
