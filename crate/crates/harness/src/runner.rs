//! Batch execution: settings resolution, backend construction, timing and
//! report files.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use tamp_core::bench::{
    aggregate, fixed_sequence_param_search, make_setting1, run_trial, summary_csv, AggregateReport, Difficulty,
    ExperimentConfig, HeuristicSampler, LlmSampler, ParamSampler, ParamSearchConfig, ParamSearchOutcome,
    RandomSampler, SamplerKind, ScenarioSource, ScenarioSpec, TrialReport, Variant, SCENARIO_NAMES,
};
use tamp_core::llm::{HeuristicBackend, LlmBackend, RandomBackend};
use tamp_core::math::mix_seed;
use tamp_core::motion::RrtParams;
use tamp_core::planner::{IterationLog, DEFAULT_N_MAX, DEFAULT_TRACE_K};

use crate::files::{load_replay, load_scenario, ConfigFile};
use crate::http::{HttpBackend, HttpSettings};

pub const TRIALS_FILE: &str = "trials.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const ITERATIONS_FILE: &str = "iterations.jsonl";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Heuristic,
    Random,
    /// Every trial replays the file from its first line.
    Replay(PathBuf),
    Http,
}

impl FromStr for BackendSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heuristic" => Ok(Self::Heuristic),
            "random" => Ok(Self::Random),
            "http" => Ok(Self::Http),
            _ => match s.strip_prefix("replay:") {
                Some(p) if !p.is_empty() => Ok(Self::Replay(PathBuf::from(p))),
                _ => bail!("unknown backend '{s}' (heuristic, random, replay:<path>, http)"),
            },
        }
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Heuristic => f.write_str("heuristic"),
            Self::Random => f.write_str("random"),
            Self::Replay(p) => write!(f, "replay:{}", p.display()),
            Self::Http => f.write_str("http"),
        }
    }
}

impl BackendSpec {
    pub fn build(&self, spec: &ScenarioSpec, seed: u64, http: &HttpSettings) -> Result<Box<dyn LlmBackend>> {
        Ok(match self {
            Self::Heuristic => Box::new(HeuristicBackend::new(spec)?),
            Self::Random => Box::new(RandomBackend::new(spec, seed)),
            Self::Replay(p) => Box::new(load_replay(p)?),
            Self::Http => Box::new(HttpBackend::from_env(http.clone())),
        })
    }
}

/// Fully resolved `run` settings.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub scenarios: Vec<String>,
    pub variants: Vec<Variant>,
    pub backend: BackendSpec,
    pub trials: u32,
    pub seed: u64,
    pub n_max: u32,
    pub trace_k: usize,
    pub rrt: RrtParams,
    pub out: Option<PathBuf>,
    pub http: HttpSettings,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            scenarios: vec!["setting1-easy".into()],
            variants: vec![Variant::Llm3Backtrack],
            backend: BackendSpec::Heuristic,
            trials: 10,
            seed: 0,
            n_max: DEFAULT_N_MAX,
            trace_k: DEFAULT_TRACE_K,
            rrt: RrtParams::default(),
            out: None,
            http: HttpSettings::default(),
        }
    }
}

impl RunSettings {
    /// Layers `flags` over `file` over the defaults.
    pub fn resolve(file: &ConfigFile, flags: &ConfigFile) -> Result<Self> {
        let d = Self::default();
        let (file, flags) = (file.clone(), flags.clone());
        let variants = match flags.variants.or(file.variants) {
            Some(v) => v
                .iter()
                .map(|s| s.parse::<Variant>().map_err(|e| anyhow!(e)))
                .collect::<Result<Vec<_>>>()?,
            None => d.variants,
        };
        let backend = match flags.backend.or(file.backend) {
            Some(b) => b.parse()?,
            None => d.backend,
        };
        let rrt = RrtParams {
            step_size: flags.rrt.step_size.or(file.rrt.step_size).unwrap_or(d.rrt.step_size),
            goal_bias: flags.rrt.goal_bias.or(file.rrt.goal_bias).unwrap_or(d.rrt.goal_bias),
            max_iterations: flags
                .rrt
                .max_iterations
                .or(file.rrt.max_iterations)
                .unwrap_or(d.rrt.max_iterations),
            rng_seed: 0,
        };
        rrt.validate()?;
        let s = Self {
            scenarios: flags.scenarios.or(file.scenarios).unwrap_or(d.scenarios),
            variants,
            backend,
            trials: flags.trials.or(file.trials).unwrap_or(d.trials),
            seed: flags.seed.or(file.seed).unwrap_or(d.seed),
            n_max: flags.n_max.or(file.n_max).unwrap_or(d.n_max),
            trace_k: flags.trace_k.or(file.trace_k).unwrap_or(d.trace_k),
            rrt,
            out: flags.out.or(file.out).map(PathBuf::from),
            http: flags.http.or(file.http).unwrap_or(d.http),
        };
        if s.scenarios.is_empty() || s.variants.is_empty() {
            bail!("at least one scenario and one variant are required");
        }
        if s.trials == 0 || s.n_max == 0 || s.trace_k == 0 {
            bail!("trials, n_max and trace_k must be positive");
        }
        Ok(s)
    }
}

/// A built-in scenario name, or a path to a scenario file.
pub fn scenario_source(name: &str) -> Result<ScenarioSource> {
    if SCENARIO_NAMES.contains(&name) {
        Ok(ScenarioSource::Named(name.into()))
    } else if Path::new(name).exists() {
        Ok(ScenarioSource::Fixed(load_scenario(Path::new(name))?))
    } else {
        bail!("unknown scenario '{name}' (built-in: {})", SCENARIO_NAMES.join(", "))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationLine<'a> {
    pub scenario: &'a str,
    pub variant: Variant,
    pub trial: u32,
    #[serde(flatten)]
    pub log: &'a IterationLog,
}

#[derive(Debug, Clone, Default)]
pub struct BatchResult {
    pub trials: Vec<TrialReport>,
    pub summary: AggregateReport,
    /// Serialized per-iteration log lines.
    pub iterations: Vec<String>,
}

/// Runs every scenario × variant × trial in order.
pub fn run_batch(settings: &RunSettings) -> Result<BatchResult> {
    let mut out = BatchResult::default();
    for scenario in &settings.scenarios {
        let source = scenario_source(scenario)?;
        for &variant in &settings.variants {
            let mut cfg = ExperimentConfig::new(source.clone(), variant, &settings.backend.to_string());
            cfg.trials = settings.trials;
            cfg.seed = settings.seed;
            cfg.n_max = settings.n_max;
            cfg.k = settings.trace_k;
            cfg.rrt = settings.rrt;
            for trial in 0..cfg.trials {
                let seed = cfg.trial_seed(trial);
                let start = Instant::now();
                let backend = cfg
                    .scenario
                    .resolve(seed)
                    .map_err(anyhow::Error::from)
                    .and_then(|spec| settings.backend.build(&spec, mix_seed(seed, 2), &settings.http));
                let label = cfg.scenario.label().to_string();
                let mut report = match backend {
                    Ok(mut b) => {
                        let lines = &mut out.iterations;
                        run_trial(&cfg, trial, &mut b, &mut |log, _| {
                            let line = IterationLine {
                                scenario: &label,
                                variant,
                                trial,
                                log,
                            };
                            lines.push(serde_json::to_string(&line).unwrap_or_default());
                        })
                    }
                    Err(e) => TrialReport {
                        scenario: label.clone(),
                        variant,
                        trial,
                        seed,
                        success: false,
                        llm_calls: 0,
                        mp_calls: 0,
                        wall_time: 0.0,
                        error: Some(format!("{e:#}")),
                    },
                };
                report.wall_time = start.elapsed().as_secs_f64();
                out.trials.push(report);
            }
        }
    }
    out.summary = aggregate(&out.trials);
    Ok(out)
}

pub fn write_batch(dir: &Path, batch: &BatchResult) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut trials = String::new();
    for t in &batch.trials {
        trials.push_str(&serde_json::to_string(t)?);
        trials.push('\n');
    }
    fs::write(dir.join(TRIALS_FILE), trials)?;
    fs::write(dir.join(SUMMARY_FILE), summary_csv(&batch.summary))?;
    let mut f = fs::File::create(dir.join(ITERATIONS_FILE))?;
    for line in &batch.iterations {
        writeln!(f, "{line}")?;
    }
    Ok(())
}

pub fn read_trials(path: &Path) -> Result<Vec<TrialReport>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{} line {}", path.display(), i + 1)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamStudyRow {
    pub trial: u32,
    pub seed: u64,
    #[serde(flatten)]
    pub outcome: ParamSearchOutcome,
}

pub struct ParamStudySettings {
    pub sampler: SamplerKind,
    pub trials: u32,
    pub seed: u64,
    pub max_iterations: u32,
    pub backend: BackendSpec,
    pub http: HttpSettings,
    pub max_llm_calls: u32,
}

/// Fixed-skeleton parameter search on Setting 1 medium, one scenario per trial.
pub fn run_param_study(s: &ParamStudySettings) -> Result<Vec<ParamStudyRow>> {
    let mut rows = Vec::new();
    for trial in 0..s.trials {
        let seed = mix_seed(s.seed, trial as u64);
        let spec = make_setting1(Difficulty::Medium, seed)?;
        let mut sampler: Box<dyn ParamSampler> = match s.sampler {
            SamplerKind::Random => Box::new(RandomSampler::new(&spec, mix_seed(seed, 3))),
            SamplerKind::Heuristic => Box::new(HeuristicSampler::new(&spec)),
            SamplerKind::Llm | SamplerKind::LlmFeedback => {
                let backend = s.backend.build(&spec, mix_seed(seed, 2), &s.http)?;
                let with_feedback = s.sampler == SamplerKind::LlmFeedback;
                Box::new(LlmSampler::new(backend, &spec, with_feedback, s.max_llm_calls)?)
            }
        };
        let cfg = ParamSearchConfig {
            max_iterations: s.max_iterations,
            rrt: RrtParams::default(),
            seed: mix_seed(seed, 1),
        };
        let outcome = fixed_sequence_param_search(&spec, sampler.as_mut(), &cfg)?;
        rows.push(ParamStudyRow { trial, seed, outcome });
    }
    Ok(rows)
}

pub fn mean<T: Copy + Into<f64>>(xs: impl IntoIterator<Item = T>) -> f64 {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x.into(), n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}
