use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tamp_core::bench::{aggregate, scenario_by_name, summary_csv, SamplerKind};
use tamp_harness::files::{load_config, scenario_to_toml, ConfigFile, RrtSection};
use tamp_harness::http::HttpSettings;
use tamp_harness::runner::{
    mean, read_trials, run_batch, run_param_study, write_batch, BackendSpec, ParamStudySettings, RunSettings,
    SUMMARY_FILE,
};

#[derive(Parser)]
#[command(name = "tamp", version, about = "Language-model task planning with motion feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run trials and write trials.jsonl, iterations.jsonl and summary.csv.
    Run(RunArgs),
    /// Write a generated scenario as a TOML file.
    GenScenario(GenArgs),
    /// Fixed-skeleton parameter search on setting1-medium.
    ParamStudy(ParamArgs),
    /// Recompute the summary table from a trials.jsonl file.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario names or scenario file paths, comma separated.
    #[arg(long, value_delimiter = ',')]
    scenario: Option<Vec<String>>,
    /// llm3-backtrack, backtrack, llm3-scratch, scratch; comma separated.
    #[arg(long, value_delimiter = ',')]
    variant: Option<Vec<String>>,
    /// heuristic, random, replay:<path> or http.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    trials: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_max: Option<u32>,
    #[arg(long)]
    trace_k: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    scenario: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ParamArgs {
    /// random, heuristic, llm or llm-feedback.
    #[arg(long)]
    sampler: String,
    #[arg(long, default_value_t = 50)]
    trials: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = tamp_core::bench::param_search::DEFAULT_MAX_ITERATIONS)]
    max_iterations: u32,
    /// Backend for the llm samplers.
    #[arg(long, default_value = "http")]
    backend: String,
    /// Query cap per trial for the llm samplers.
    #[arg(long, default_value_t = 200)]
    max_llm_calls: u32,
    /// Per-trial JSONL output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// trials.jsonl from a previous run.
    #[arg(long)]
    trials: PathBuf,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: RunArgs) -> Result<()> {
    let file = match &args.config {
        Some(p) => load_config(p)?,
        None => ConfigFile::default(),
    };
    let flags = ConfigFile {
        scenarios: args.scenario,
        variants: args.variant,
        backend: args.backend,
        trials: args.trials,
        seed: args.seed,
        n_max: args.n_max,
        trace_k: args.trace_k,
        out: args.out.map(|p| p.display().to_string()),
        rrt: RrtSection::default(),
        ..ConfigFile::default()
    };
    let settings = RunSettings::resolve(&file, &flags)?;
    let batch = run_batch(&settings)?;
    match &settings.out {
        Some(dir) => {
            write_batch(dir, &batch)?;
            eprintln!("wrote {}", dir.display());
        }
        None => print!("{}", summary_csv(&batch.summary)),
    }
    for t in batch.trials.iter().filter(|t| t.error.is_some()) {
        eprintln!(
            "{} {} trial {}: {}",
            t.scenario,
            t.variant,
            t.trial,
            t.error.as_deref().unwrap_or_default()
        );
    }
    Ok(())
}

fn gen_scenario(args: GenArgs) -> Result<()> {
    let spec = scenario_by_name(&args.scenario, args.seed)?;
    let text = scenario_to_toml(&spec)?;
    match args.out {
        Some(p) => fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn param_study(args: ParamArgs) -> Result<()> {
    let sampler: SamplerKind = args.sampler.parse().map_err(anyhow::Error::msg)?;
    let http = match &args.config {
        Some(p) => load_config(p)?.http.unwrap_or_default(),
        None => HttpSettings::default(),
    };
    let settings = ParamStudySettings {
        sampler,
        trials: args.trials,
        seed: args.seed,
        max_iterations: args.max_iterations,
        backend: args.backend.parse::<BackendSpec>()?,
        http,
        max_llm_calls: args.max_llm_calls,
    };
    let rows = run_param_study(&settings)?;
    if let Some(p) = &args.out {
        let mut text = String::new();
        for r in &rows {
            text.push_str(&serde_json::to_string(r)?);
            text.push('\n');
        }
        fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
    }
    let successes = rows.iter().filter(|r| r.outcome.success).count();
    println!("sampler,trials,success_percent,mean_iterations,mean_mp,mean_llm");
    println!(
        "{},{},{:.1},{:.2},{:.2},{:.2}",
        args.sampler,
        rows.len(),
        100.0 * successes as f64 / rows.len().max(1) as f64,
        mean(rows.iter().map(|r| r.outcome.iterations)),
        mean(rows.iter().map(|r| r.outcome.mp_calls as f64)),
        mean(rows.iter().map(|r| r.outcome.llm_calls)),
    );
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let trials = read_trials(&args.trials)?;
    if trials.is_empty() {
        bail!("{} holds no trials", args.trials.display());
    }
    let csv = summary_csv(&aggregate(&trials));
    if let Some(existing) = args.trials.parent().map(|d| d.join(SUMMARY_FILE)).filter(|p| p.exists()) {
        if fs::read_to_string(&existing)? != csv {
            eprintln!("warning: {} disagrees with the trial records", existing.display());
        }
    }
    match args.out {
        Some(p) => fs::write(&p, csv).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::GenScenario(a) => gen_scenario(a),
        Command::ParamStudy(a) => param_study(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
