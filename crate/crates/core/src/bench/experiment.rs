use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::scenario::{scenario_by_name, ScenarioSpec};
use crate::llm::{LlmBackend, Strategy};
use crate::math;
use crate::motion::RrtParams;
use crate::planner::{
    llm3_plan_with, FeedbackMode, FeedbackTrace, IterationLog, PlannerConfig, PlannerError, DEFAULT_N_MAX,
    DEFAULT_TRACE_K,
};
use crate::motion::RrtMotionPlanner;

/// The four configurations compared in the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "llm3-backtrack")]
    Llm3Backtrack,
    #[serde(rename = "backtrack")]
    Backtrack,
    #[serde(rename = "llm3-scratch")]
    Llm3Scratch,
    #[serde(rename = "scratch")]
    Scratch,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Llm3Backtrack,
        Variant::Backtrack,
        Variant::Llm3Scratch,
        Variant::Scratch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Llm3Backtrack => "llm3-backtrack",
            Variant::Backtrack => "backtrack",
            Variant::Llm3Scratch => "llm3-scratch",
            Variant::Scratch => "scratch",
        }
    }

    pub fn strategy(self) -> Strategy {
        match self {
            Variant::Llm3Backtrack | Variant::Backtrack => Strategy::Backtrack,
            Variant::Llm3Scratch | Variant::Scratch => Strategy::FromScratch,
        }
    }

    pub fn feedback(self) -> FeedbackMode {
        match self {
            Variant::Llm3Backtrack | Variant::Llm3Scratch => FeedbackMode::Full,
            Variant::Backtrack => FeedbackMode::Uninformative,
            Variant::Scratch => FeedbackMode::Suppressed,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant '{s}'"))
    }
}

/// Where a trial's scenario comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ScenarioSource {
    /// Regenerated for every trial from the trial seed.
    Named(String),
    /// Used verbatim by every trial.
    Fixed(ScenarioSpec),
}

impl ScenarioSource {
    pub fn label(&self) -> &str {
        match self {
            ScenarioSource::Named(n) => n,
            ScenarioSource::Fixed(s) => &s.name,
        }
    }

    pub fn resolve(&self, seed: u64) -> Result<ScenarioSpec, PlannerError> {
        match self {
            ScenarioSource::Named(n) => Ok(scenario_by_name(n, seed)?),
            ScenarioSource::Fixed(s) => Ok(s.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSource,
    pub variant: Variant,
    pub backend: String,
    pub trials: u32,
    pub seed: u64,
    pub n_max: u32,
    pub k: usize,
    pub rrt: RrtParams,
}

impl ExperimentConfig {
    pub fn new(scenario: ScenarioSource, variant: Variant, backend: &str) -> Self {
        Self {
            scenario,
            variant,
            backend: backend.to_string(),
            trials: 10,
            seed: 0,
            n_max: DEFAULT_N_MAX,
            k: DEFAULT_TRACE_K,
            rrt: RrtParams::default(),
        }
    }

    pub fn trial_seed(&self, trial: u32) -> u64 {
        math::mix_seed(self.seed, trial as u64)
    }

    pub fn planner_config(&self, trial_seed: u64) -> PlannerConfig {
        PlannerConfig {
            n_max: self.n_max,
            k: self.k,
            rrt: self.rrt,
            feedback: self.variant.feedback(),
            prompt_current_state: false,
            seed: math::mix_seed(trial_seed, 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub scenario: String,
    pub variant: Variant,
    pub trial: u32,
    pub seed: u64,
    pub success: bool,
    pub llm_calls: u32,
    pub mp_calls: u64,
    /// Seconds; filled in by callers that own a clock.
    pub wall_time: f64,
    pub error: Option<String>,
}

/// Runs one trial. Errors are folded into a failed report.
pub fn run_trial<B, F>(
    cfg: &ExperimentConfig,
    trial: u32,
    backend: &mut B,
    observer: &mut F,
) -> TrialReport
where
    B: LlmBackend + ?Sized,
    F: FnMut(&IterationLog, &FeedbackTrace),
{
    let seed = cfg.trial_seed(trial);
    let mut report = TrialReport {
        scenario: cfg.scenario.label().to_string(),
        variant: cfg.variant,
        trial,
        seed,
        success: false,
        llm_calls: 0,
        mp_calls: 0,
        wall_time: 0.0,
        error: None,
    };
    let spec = match cfg.scenario.resolve(seed) {
        Ok(s) => s,
        Err(e) => {
            report.error = Some(e.to_string());
            return report;
        }
    };
    let pcfg = cfg.planner_config(seed);
    let mut mp = RrtMotionPlanner::new(pcfg.rrt, pcfg.seed);
    // keep counts from completed iterations if the backend fails mid-trial
    let mut last = (0, 0);
    let mut obs = |log: &IterationLog, t: &FeedbackTrace| {
        last = (log.llm_calls, log.mp_calls);
        observer(log, t);
    };
    match llm3_plan_with(&spec, cfg.variant.strategy(), backend, &mut mp, &pcfg, &mut obs) {
        Ok(out) => {
            report.success = out.success;
            report.llm_calls = out.metrics.llm_calls;
            report.mp_calls = out.metrics.mp_calls;
        }
        Err(e) => {
            report.llm_calls = last.0;
            report.mp_calls = last.1;
            report.error = Some(e.to_string());
        }
    }
    report
}

/// Runs every trial with a fresh backend from `make_backend(scenario, trial_seed)`.
pub fn run_experiment<F>(cfg: &ExperimentConfig, mut make_backend: F) -> (Vec<TrialReport>, AggregateReport)
where
    F: FnMut(&ScenarioSpec, u64) -> Result<Box<dyn LlmBackend>, String>,
{
    let mut reports = Vec::with_capacity(cfg.trials as usize);
    for trial in 0..cfg.trials {
        let seed = cfg.trial_seed(trial);
        let backend = cfg
            .scenario
            .resolve(seed)
            .map_err(|e| e.to_string())
            .and_then(|spec| make_backend(&spec, seed));
        let report = match backend {
            Ok(mut b) => run_trial(cfg, trial, &mut b, &mut |_, _| {}),
            Err(e) => TrialReport {
                scenario: cfg.scenario.label().to_string(),
                variant: cfg.variant,
                trial,
                seed,
                success: false,
                llm_calls: 0,
                mp_calls: 0,
                wall_time: 0.0,
                error: Some(e),
            },
        };
        reports.push(report);
    }
    let agg = aggregate(&reports);
    (reports, agg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub scenario: String,
    pub variant: Variant,
    pub trials: u32,
    pub sr_percent: f64,
    pub mean_llm: f64,
    pub mean_mp: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AggregateReport {
    pub rows: Vec<AggregateRow>,
}

/// Groups by (scenario, variant), sorted by scenario name then variant.
pub fn aggregate(reports: &[TrialReport]) -> AggregateReport {
    let mut groups: BTreeMap<(String, Variant), Vec<&TrialReport>> = BTreeMap::new();
    for r in reports {
        groups.entry((r.scenario.clone(), r.variant)).or_default().push(r);
    }
    let rows = groups
        .into_iter()
        .map(|((scenario, variant), rs)| {
            let n = rs.len() as f64;
            AggregateRow {
                scenario,
                variant,
                trials: rs.len() as u32,
                sr_percent: 100.0 * rs.iter().filter(|r| r.success).count() as f64 / n,
                mean_llm: rs.iter().map(|r| r.llm_calls as f64).sum::<f64>() / n,
                mean_mp: rs.iter().map(|r| r.mp_calls as f64).sum::<f64>() / n,
            }
        })
        .collect();
    AggregateReport { rows }
}

pub const SUMMARY_HEADER: &str = "scenario,variant,trials,sr_percent,mean_llm,mean_mp";

/// Comma-separated summary, header first, rows in aggregate order.
pub fn summary_csv(agg: &AggregateReport) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in &agg.rows {
        out.push_str(&format!(
            "{},{},{},{:.1},{:.2},{:.2}\n",
            r.scenario, r.variant, r.trials, r.sr_percent, r.mean_llm, r.mean_mp
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{HeuristicBackend, ScriptedBackend};

    fn report(scenario: &str, variant: Variant, success: bool, llm: u32, mp: u64) -> TrialReport {
        TrialReport {
            scenario: scenario.into(),
            variant,
            trial: 0,
            seed: 0,
            success,
            llm_calls: llm,
            mp_calls: mp,
            wall_time: 1.5,
            error: None,
        }
    }

    #[test]
    fn variant_names_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("llm3".parse::<Variant>().is_err());
    }

    #[test]
    fn aggregate_means_and_order() {
        let rs = [
            report("b", Variant::Scratch, true, 2, 10),
            report("a", Variant::Backtrack, false, 20, 7),
            report("a", Variant::Backtrack, true, 4, 3),
            report("a", Variant::Llm3Backtrack, true, 1, 6),
        ];
        let agg = aggregate(&rs);
        let keys: Vec<(&str, Variant)> = agg.rows.iter().map(|r| (r.scenario.as_str(), r.variant)).collect();
        assert_eq!(
            keys,
            [("a", Variant::Llm3Backtrack), ("a", Variant::Backtrack), ("b", Variant::Scratch)]
        );
        let bt = &agg.rows[1];
        assert_eq!(bt.trials, 2);
        assert_eq!(bt.sr_percent, 50.0);
        assert_eq!(bt.mean_llm, 12.0);
        assert_eq!(bt.mean_mp, 5.0);
        let csv = summary_csv(&agg);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.contains("a,backtrack,2,50.0,12.00,5.00\n"));
    }

    #[test]
    fn oracle_easy_batch() {
        let mut cfg = ExperimentConfig::new(ScenarioSource::Named("setting1-easy".into()), Variant::Llm3Backtrack, "heuristic");
        cfg.trials = 3;
        let (reports, agg) = run_experiment(&cfg, |spec, _| {
            HeuristicBackend::new(spec)
                .map(|b| Box::new(b) as Box<dyn LlmBackend>)
                .map_err(|e| e.to_string())
        });
        assert!(reports.iter().all(|r| r.success && r.llm_calls == 1));
        assert_eq!(agg.rows[0].sr_percent, 100.0);
    }

    #[test]
    fn backend_failure_does_not_abort_batch() {
        let mut cfg = ExperimentConfig::new(ScenarioSource::Named("setting1-easy".into()), Variant::Scratch, "replay");
        cfg.trials = 2;
        let (reports, _) = run_experiment(&cfg, |_, _| Ok(Box::new(ScriptedBackend::new(["junk"])) as Box<dyn LlmBackend>));
        assert_eq!(reports.len(), 2);
        for r in &reports {
            assert!(!r.success);
            assert_eq!(r.llm_calls, 1);
            assert!(r.error.as_deref().unwrap().contains("replay exhausted"));
        }
    }
}
