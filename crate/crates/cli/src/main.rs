//! `shepherd`: design, assess and trace shepherd controllers, and rank
//! campaign results.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use shepherd_core::campaign::{
    assess, design, friedman_rank_summary, read_observations, run_campaign, write_design,
    write_observations, CampaignConfig, DesignMethod, Observation,
};
use shepherd_core::optim::{EvoSettings, RaceSettings};
use shepherd_core::sim::write_trace;
use shepherd_core::{build_scenario, load_controller, Error, Mission, RankSummary, SheepVariant};

#[derive(Parser)]
#[command(name = "shepherd", version, about = "Automatic design of shepherding swarms")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one automatic design and write the resulting controller.
    Design {
        #[arg(long)]
        method: DesignMethod,
        #[arg(long)]
        mission: Mission,
        #[arg(long)]
        sheep: SheepVariant,
        /// Episode budget.
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run assessment episodes and print one CSV row per episode.
    Assess {
        /// Controller file, or `rwalk` / `idle`.
        #[arg(long)]
        controller: String,
        #[arg(long)]
        mission: Mission,
        #[arg(long)]
        sheep: SheepVariant,
        #[arg(short = 'n', default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rank methods from an observations CSV.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Print the summary as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Record every robot pose of one episode as CSV.
    Trace {
        #[arg(long)]
        controller: String,
        #[arg(long)]
        mission: Mission,
        #[arg(long)]
        sheep: SheepVariant,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full campaign from a JSON config.
    Campaign {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for invalid configs, inputs and formats; 3 for budget and I/O failures.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Io(_) | Error::BudgetExhausted { .. } => 3,
                Error::Csv(c) if c.is_io_error() => 3,
                _ => 2,
            };
        }
        if cause.downcast_ref::<io::Error>().is_some() {
            return 3;
        }
    }
    2
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon_pool(n)?;
    }
    match cli.command {
        Command::Design {
            method,
            mission,
            sheep,
            budget,
            seed,
            out,
        } => {
            let scenario = build_scenario(mission, sheep);
            let (file, manifest) = design(
                method,
                &scenario,
                budget,
                seed,
                &RaceSettings::default(),
                &EvoSettings::default(),
            )?;
            let stem = format!("{}-{}-{seed}", method.as_str(), scenario.name());
            let path = write_design(&out, &stem, &file, &manifest)?;
            let best = manifest.best_mean.map_or("n/a".to_string(), |m| format!("{m:.6}"));
            println!(
                "{}: {} episodes, design mean {best}",
                path.display(),
                manifest.consumed
            );
        }
        Command::Assess {
            controller,
            mission,
            sheep,
            n,
            seed,
        } => {
            let scenario = build_scenario(mission, sheep);
            let shepherd = load_controller(&controller).with_context(|| format!("loading {controller}"))?;
            let name = method_name(&controller);
            let rows: Vec<Observation> = assess(&shepherd, &scenario, n, seed)?
                .into_iter()
                .map(|(seed, objective)| Observation {
                    method: name.clone(),
                    mission,
                    sheep,
                    design_idx: 0,
                    seed,
                    objective,
                    sense: mission.sense(),
                })
                .collect();
            write_observations(io::stdout().lock(), &rows)?;
        }
        Command::Stats { input, alpha, json } => {
            let file = File::open(&input).map_err(Error::from).with_context(|| format!("opening {}", input.display()))?;
            let rows = read_observations(file)?;
            let summary = friedman_rank_summary(&rows, alpha)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&summary)?);
            } else {
                print_summary(&summary);
            }
        }
        Command::Trace {
            controller,
            mission,
            sheep,
            seed,
            out,
        } => {
            let scenario = build_scenario(mission, sheep);
            let shepherd = load_controller(&controller).with_context(|| format!("loading {controller}"))?;
            let file = File::create(&out).map_err(Error::from).with_context(|| format!("creating {}", out.display()))?;
            let result = write_trace(&scenario, &shepherd, seed, BufWriter::new(file))?;
            println!("{}: objective {}", out.display(), result.objective);
        }
        Command::Campaign { config } => {
            let mut cfg = CampaignConfig::load(&config).with_context(|| format!("reading {}", config.display()))?;
            if cli.threads.is_some() {
                cfg.threads = cli.threads;
            }
            let outcome = run_campaign(&cfg)?;
            println!(
                "{} observations written to {}",
                outcome.observations.len(),
                outcome.csv_path.display()
            );
            if let Some(summary) = &outcome.summary {
                print_summary(summary);
            }
        }
    }
    Ok(())
}

fn rayon_pool(threads: usize) -> Result<()> {
    if threads == 0 {
        return Err(Error::InvalidArgument("--threads must be positive".into()).into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring worker threads")
}

/// Name used in the `method` column for a controller argument.
fn method_name(controller: &str) -> String {
    match controller {
        "rwalk" | "r-walk" => "rwalk".into(),
        other => Path::new(other)
            .file_stem()
            .map_or_else(|| other.to_string(), |s| s.to_string_lossy().into_owned()),
    }
}

fn print_summary(summary: &RankSummary) {
    let mut out = io::stdout().lock();
    let _ = writeln!(
        out,
        "Friedman statistic {:.4}, p = {:.3e}, {} blocks, CI half-width {:.4}",
        summary.statistic, summary.p_value, summary.n_blocks, summary.half_width
    );
    let _ = writeln!(out, "{:<16} {:>9} {:>9} {:>9}", "method", "mean rank", "low", "high");
    for m in &summary.methods {
        let _ = writeln!(out, "{:<16} {:>9.4} {:>9.4} {:>9.4}", m.method, m.mean_rank, m.ci_low, m.ci_high);
    }
    for &(a, b) in &summary.significant_pairs {
        let _ = writeln!(
            out,
            "significant: {} vs {}",
            summary.methods[a].method, summary.methods[b].method
        );
    }
}
