//! `bdris-lab` command-line interface.

use bdris_lab::config::ExperimentConfig;
use bdris_lab::report::{emit_csv, emit_summary_csv, format_summary};
use bdris_lab::{runner, validate};
use bdris_core::siso::{crossover_elements, ScalingParams};
use bdris_core::units::{db_to_linear, dbm_to_watts};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "bdris-lab", about = "Link-level simulation lab for active beyond-diagonal RIS", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch experiment described by a JSON config.
    Run {
        /// Path to the experiment config.
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (falls back to BDRIS_THREADS, then all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Output directory (overrides the config's `out`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the numerical validation suite.
    Validate {
        /// Write the machine-readable report to this JSON file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the element counts where passive surfaces overtake active ones.
    Crossover {
        #[arg(long)]
        pt: f64,
        #[arg(long)]
        pa: f64,
        #[arg(long)]
        pt_passive: f64,
        /// Noise power (both receiver and RIS) in dBm.
        #[arg(long)]
        noise_dbm: f64,
        /// Mean link gain (both cascade links) in dB, e.g. -70.
        #[arg(long)]
        pathloss_db: f64,
    },
}

fn thread_count(cli_threads: Option<usize>) -> Option<usize> {
    cli_threads.or_else(|| {
        std::env::var("BDRIS_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&n| n > 0)
    })
}

fn run(config_path: &PathBuf, seed: Option<u64>, threads: Option<usize>, out: Option<PathBuf>) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| anyhow::anyhow!(bdris_lab::config::ConfigError(format!("{}: {e}", config_path.display()))))?;
    let mut config = ExperimentConfig::from_json(&text).map_err(anyhow::Error::new)?;
    if let Some(seed) = seed {
        config.master_seed = seed;
    }
    if let Some(out) = out {
        config.out = out;
    }

    if config.experiment == bdris_lab::ExperimentKind::Validate {
        return run_validate(Some(config.out.join("validation.json")));
    }

    let started = Instant::now();
    let output = match thread_count(threads) {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            pool.install(|| runner::run_experiment(&config))?
        }
        None => runner::run_experiment(&config)?,
    };
    let elapsed = started.elapsed();

    std::fs::create_dir_all(&config.out)?;
    let results_path = config.out.join("results.csv");
    let summary_path = config.out.join("summary.csv");
    emit_csv(&output.rows, &results_path)?;
    emit_summary_csv(&output.summary, &summary_path)?;

    print!("{}", format_summary(&output.summary));
    println!(
        "wrote {} rows to {} (summary in {}); {} of {} trials errored; wall time {:.1} s",
        output.rows.len(),
        results_path.display(),
        summary_path.display(),
        output.errored_trials,
        output.total_trials.max(output.rows.len().min(1)),
        elapsed.as_secs_f64()
    );
    Ok(())
}

fn run_validate(out: Option<PathBuf>) -> anyhow::Result<()> {
    let report = validate::validate_suite();
    print!("{}", report.render());
    if let Some(path) = out {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
        println!("report written to {}", path.display());
    }
    if report.all_pass() {
        Ok(())
    } else {
        anyhow::bail!("validation suite reported failures")
    }
}

fn run_crossover(pt: f64, pa: f64, pt_passive: f64, noise_dbm: f64, pathloss_db: f64) -> anyhow::Result<()> {
    let noise = dbm_to_watts(noise_dbm);
    let zeta = db_to_linear(pathloss_db);
    let params = ScalingParams {
        p_t: pt,
        p_a: pa,
        p_t_passive: pt_passive,
        sigma_i_sq: noise,
        sigma_r_sq: noise,
        zeta_ri_sq: zeta,
        zeta_it_sq: zeta,
    };
    let (nbar, ntilde) = crossover_elements(&params).map_err(anyhow::Error::new)?;
    println!("nbar_elements = {nbar:.6e}");
    println!("ntilde_elements = {ntilde:.6e}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, seed, threads, out } => run(&config, seed, threads, out),
        Command::Validate { out } => run_validate(out),
        Command::Crossover { pt, pa, pt_passive, noise_dbm, pathloss_db } => {
            run_crossover(pt, pa, pt_passive, noise_dbm, pathloss_db)
        }
    };
    match result {
        Ok(()) => ExitCode::from(0),
        Err(err) => {
            eprintln!("error: {err}");
            // config problems exit 2, run failures exit 1
            if err.is::<bdris_lab::config::ConfigError>() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
