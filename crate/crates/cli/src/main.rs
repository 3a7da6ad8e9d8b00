use std::hash::BuildHasher;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use oulab_cli::{
    run_and_record, CauchyOptions, CliError, Invocation, Run, RunManifest, ScenarioFile,
};

#[derive(Parser)]
#[command(
    name = "oulab",
    version,
    about = "Simulate and estimate signals sent through an Ornstein-Uhlenbeck channel"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file, or a preset name (ex41, ex42, ex43).
    #[arg(long)]
    config: String,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for the pseudo-random driver; drawn from entropy when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Use the quasi-random driver instead of the pseudo-random one.
    #[arg(long)]
    quasi: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write the per-mode growth rates and frequencies.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Write snapshots of the evolving signal.
    Evolve {
        #[command(flatten)]
        common: Common,
        /// `start:end:count` or a comma list; `pi` expressions allowed.
        #[arg(long, default_value = "0:pi/7:64")]
        times: String,
        /// off, path (one noise trajectory) or independent (fresh draw per frame).
        #[arg(long, default_value = "off")]
        noise: String,
    },
    /// Draw observations of the transformed signal.
    Sample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Estimate the useful signal from a samples file or from fresh draws.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Samples CSV written by `sample`; fresh samples are drawn when omitted.
        #[arg(long)]
        samples: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        /// Stop once consecutive running estimates stay within this sup distance.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 10, requires = "epsilon")]
        window: usize,
        #[arg(long, default_value_t = 100_000, requires = "epsilon")]
        n_max: usize,
    },
    /// Monte Carlo check of the noise variance and covariances.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Number of draws.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Error of the estimator against the sample size.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "100,1000,10000")]
        n_grid: String,
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
    /// Re-run a command from its manifest.
    Replay {
        manifest: PathBuf,
        /// Output directory; defaults to the one recorded in the manifest.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn entropy_seed() -> u64 {
    let nanos = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    std::collections::hash_map::RandomState::new().hash_one((nanos, std::process::id()))
}

fn build(
    common: Common,
    invocation: Invocation,
    n: Option<usize>,
) -> Result<(Run, String, PathBuf), CliError> {
    let mut config = ScenarioFile::load(&common.config)?;
    if let Some(n) = n {
        config.n = n;
    }
    let (seed, source) = match (common.seed, config.seed) {
        (Some(s), _) => (s, "flag"),
        (None, Some(s)) => (s, "config"),
        (None, None) => (entropy_seed(), "entropy"),
    };
    config.seed = Some(seed);
    let run = Run {
        invocation,
        config,
        seed,
        quasi: common.quasi,
    };
    Ok((run, source.to_string(), common.out))
}

fn dispatch(command: Command) -> Result<(Run, String, PathBuf), CliError> {
    match command {
        Command::Spectrum { common } => build(common, Invocation::Spectrum, None),
        Command::Evolve {
            common,
            times,
            noise,
        } => {
            let times = oulab_cli::config::parse_times(&times)?;
            build(common, Invocation::Evolve { times, noise }, None)
        }
        Command::Sample { common, n } => build(common, Invocation::Sample, n),
        Command::Estimate {
            common,
            samples,
            n,
            epsilon,
            window,
            n_max,
        } => {
            let samples = samples
                .map(|p| std::path::absolute(&p).map_err(|e| CliError::io(p, e)))
                .transpose()?;
            let cauchy = epsilon.map(|epsilon| CauchyOptions {
                epsilon,
                window,
                n_max,
            });
            build(common, Invocation::Estimate { samples, cauchy }, n)
        }
        Command::Verify { common, samples } => {
            build(common, Invocation::Verify { draws: samples }, None)
        }
        Command::Convergence {
            common,
            n_grid,
            trials,
        } => {
            let n_grid = oulab_cli::config::parse_n_grid(&n_grid)?;
            if trials == 0 {
                return Err(CliError::input("--trials must be at least 1"));
            }
            build(common, Invocation::Convergence { n_grid, trials }, None)
        }
        Command::Replay { manifest, out } => {
            let recorded = RunManifest::read(&manifest)?;
            let out = out.unwrap_or_else(|| PathBuf::from(&recorded.out_dir));
            Ok((
                recorded.run,
                format!("replay of {}", manifest.display()),
                out,
            ))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err
                .downcast_ref::<CliError>()
                .map_or(1, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let (run, seed_source, out) = dispatch(cli.command)?;
    let (manifest, report) = run_and_record(&run, &seed_source, &out)?;
    for message in &report.messages {
        println!("{message}");
    }
    log::info!(
        "wrote {} file(s) to {}",
        manifest.outputs.len(),
        out.display()
    );
    println!(
        "{}: seed {} ({}), outputs in {}",
        manifest.command,
        manifest.run.seed,
        manifest.seed_source,
        out.display()
    );
    if let Some(err) = report.deferred {
        return Err(err).context(format!(
            "{} finished with outputs written",
            manifest.command
        ));
    }
    Ok(ExitCode::SUCCESS)
}
