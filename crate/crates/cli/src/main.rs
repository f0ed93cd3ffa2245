use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use softcoap::experiment::{self, ExperimentSpec};
use softcoap::par::Execution;
use softcoap::Error;

/// AoI experiments with cooperating access points.
///
/// Exit codes: 0 success, 1 invalid configuration or arguments, 2 runtime failure.
#[derive(Parser, Debug)]
#[command(name = "softcoap", version)]
struct Cli {
    /// Worker threads for independent jobs (0 = one per core). Overrides `experiment.workers`.
    #[arg(long, global = true, env = "SOFTCOAP_WORKERS")]
    workers: Option<usize>,

    /// Run every job on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check an experiment file and print it with every default filled in.
    Validate { config: PathBuf },
    /// Generate slot traces and the decode-probability table.
    Trace { config: PathBuf },
    /// Run the sweep and write CSV, plot data and a manifest.
    Run { config: PathBuf },
    /// Cross-check the event engine against the brute-force integrator.
    ///
    /// With a config, checks each of its points (N <= 3, first 100 rounds);
    /// without one, checks a battery of seeded random small instances.
    Oracle {
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Largest accepted relative error per sensor.
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
    },
    /// List built-in recipes, or print one as an experiment file.
    Recipe { name: Option<String> },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}

fn load(path: &Path, workers: Option<usize>) -> softcoap::Result<ExperimentSpec> {
    let mut spec = experiment::validate_config(path).map_err(|e| match e {
        Error::Io { path, source } => Error::Validation(vec![format!("{}: {source}", path.display())]),
        other => other,
    })?;
    if let Some(w) = workers {
        spec.workers = w;
    }
    Ok(spec)
}

fn dispatch(cli: Cli) -> softcoap::Result<()> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    match cli.command {
        Command::Validate { config } => {
            let spec = load(&config, cli.workers)?;
            print!("{}", spec.to_toml());
        }
        Command::Trace { config } => {
            let spec = load(&config, cli.workers)?;
            for path in experiment::write_phy_traces(&spec, exec)? {
                println!("wrote {}", path.display());
            }
        }
        Command::Run { config } => {
            let spec = load(&config, cli.workers)?;
            let out = experiment::run_experiment(&spec, exec)?;
            let written = out.write()?;
            print_summary(&out);
            for path in written {
                println!("wrote {}", path.display());
            }
        }
        Command::Oracle {
            config,
            instances,
            seed,
            tolerance,
        } => {
            let reports = match config {
                Some(path) => {
                    let spec = load(&path, cli.workers)?;
                    experiment::oracle_check(&spec, exec)?
                }
                None => softcoap::par::with_workers(cli.workers.unwrap_or(0), || {
                    experiment::oracle_battery(instances, seed, exec)
                })?,
            };
            let mut worst = 0.0f64;
            for (label, r) in &reports {
                let err = r.max_relative_error();
                worst = worst.max(err);
                println!(
                    "{} {label}: engine {:.6} ms, oracle {:.6} ms, max rel err {err:.2e}",
                    if err <= tolerance { "ok  " } else { "FAIL" },
                    r.engine_network * 1e3,
                    r.oracle_network * 1e3
                );
            }
            println!("{} cases, worst relative error {worst:.2e}", reports.len());
            if worst > tolerance {
                return Err(Error::Trace(format!(
                    "oracle mismatch {worst:.2e} exceeds tolerance {tolerance:.0e}"
                )));
            }
        }
        Command::Recipe { name: None } => {
            for (name, about) in experiment::RECIPES {
                println!("{name:<26}{about}");
            }
        }
        Command::Recipe { name: Some(name) } => match experiment::recipe(&name) {
            Some(text) => print!("{text}"),
            None => {
                return Err(Error::InvalidArgument(format!(
                    "unknown recipe `{name}`; run `softcoap recipe` for the list"
                )))
            }
        },
    }
    Ok(())
}

fn print_summary(out: &experiment::ExperimentOutput) {
    let labels: Vec<String> = out.curves.iter().map(|c| c.label()).collect();
    print!("{:>12}", out.spec.sweep.to_string());
    for l in &labels {
        print!("  {l:>16}");
    }
    println!("   (mean AoI, ms)");
    for (i, x) in out.spec.values.iter().enumerate() {
        print!("{x:>12}");
        for l in &labels {
            match out.mean_aoi(i, l) {
                Some(a) => print!("  {:>16.3}", a * 1e3),
                None => print!("  {:>16}", "-"),
            }
        }
        println!();
    }
}
