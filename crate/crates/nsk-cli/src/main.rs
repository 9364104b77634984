//! `nsk` command-line front end.

mod commands;
mod config;
mod output;

use clap::{Parser, Subcommand};
use commands::{CliError, Ctx};
use output::{Cache, CachePolicy};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nsk", version, about = "Resolvent laboratory for the linearized Navier-Stokes-Korteweg system in the half-space")]
struct Cli {
    /// JSON run configuration
    #[arg(long, global = true, env = "NSK_CONFIG")]
    config: Option<PathBuf>,
    /// output directory
    #[arg(long, global = true, env = "NSK_OUT", default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, env = "NSK_SEED", default_value_t = 7)]
    seed: u64,
    /// worker threads (default: hardware parallelism)
    #[arg(long, global = true, env = "NSK_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, env = "NSK_CACHE", value_enum, default_value = "rw")]
    cache: CachePolicy,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form solution at one (xi', lambda)
    Mode {
        /// tangential frequency, comma separated (1 entry in 2D, 2 in 3D)
        #[arg(long, allow_hyphen_values = true)]
        xi: String,
        #[arg(long, allow_hyphen_values = true)]
        lambda: String,
        #[arg(long, default_value = "1")]
        eta0: String,
    },
    /// Collocation oracle against the closed form on random sector points
    OracleCompare {
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Symbol class scans for every listed class
    VerifySymbols {
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        lambda0: Option<f64>,
    },
    /// Lopatinskii determinant lower-bound scan
    ScanDet {
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// High-frequency asymptotics of t_j, l_j, M and a
    Asymptotics {
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Physical-space resolvent solution on a periodic tangential box
    Field {
        #[arg(long)]
        period: Option<f64>,
        #[arg(long)]
        modes: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        lambda_re: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        lambda_im: Option<f64>,
        /// gaussian | mode:K[,K2] | file:PATH
        #[arg(long)]
        eta: Option<String>,
    },
    /// Boundary-forced evolution by Laplace inversion
    Evolve {
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Merge scan reports into a verdict table and a shell CSV
    Report {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<nsk::report::Verdict, CliError> {
    let mut cfg = config::load(cli.config.as_deref()).map_err(CliError::Usage)?;
    let r = &mut cfg.run;
    match &cli.cmd {
        Cmd::OracleCompare { samples, epsilon } => {
            if let Some(n) = samples {
                r.oracle.samples = *n;
            }
            if let Some(e) = epsilon {
                r.sector.epsilon = *e;
            }
        }
        Cmd::VerifySymbols { epsilon, lambda0 } => {
            if let Some(e) = epsilon {
                r.sector.epsilon = *e;
            }
            if let Some(l) = lambda0 {
                r.sector.lambda0 = *l;
            }
        }
        Cmd::ScanDet { epsilon } | Cmd::Asymptotics { epsilon } => {
            if let Some(e) = epsilon {
                r.sector.epsilon = *e;
            }
        }
        Cmd::Field { period, modes, lambda_re, lambda_im, eta } => {
            let f = &mut r.field;
            f.period = period.unwrap_or(f.period);
            f.modes = modes.unwrap_or(f.modes);
            f.lambda_re = lambda_re.unwrap_or(f.lambda_re);
            f.lambda_im = lambda_im.unwrap_or(f.lambda_im);
            if let Some(e) = eta {
                f.eta = e.clone();
            }
        }
        Cmd::Evolve { gamma } => {
            if let Some(g) = gamma {
                r.evolve.gamma = *g;
            }
        }
        Cmd::Mode { .. } | Cmd::Report { .. } => {}
    }
    cfg.validate().map_err(CliError::Usage)?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    let ctx = Ctx { cfg, cache: Cache::new(&cli.out, cli.cache), out: cli.out, seed: cli.seed };
    match &cli.cmd {
        Cmd::Mode { xi, lambda, eta0 } => commands::mode(&ctx, xi, lambda, eta0),
        Cmd::OracleCompare { .. } => commands::oracle_compare(&ctx),
        Cmd::VerifySymbols { .. } => commands::verify_symbols(&ctx),
        Cmd::ScanDet { .. } => commands::scan_det(&ctx),
        Cmd::Asymptotics { .. } => commands::asymptotics(&ctx),
        Cmd::Field { .. } => commands::field(&ctx),
        Cmd::Evolve { .. } => commands::evolve(&ctx),
        Cmd::Report { files } => commands::report(&ctx, files),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors by itself
    let cli = Cli::parse();
    match run(cli) {
        Ok(v) if v.passed() => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
