//! The outer planning loop.
//!
//! Each iteration asks the language model for a complete plan, rolls it out
//! through the motion planner until the first failure, and appends the
//! per-action feedback to a bounded trace that is shown in the next prompt.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::{applicable, format_action, Applicability, GroundAction};
use crate::bench::{ScenarioError, ScenarioSpec};
use crate::llm::{build_prompt, parse_response, query, LlmBackend, LlmError, QueryBudget, Strategy};
use crate::motion::{MotionError, MotionFeedback, MotionPlanner, RrtMotionPlanner, RrtParams, Trajectory};
use crate::world::{goal_satisfied, textualize_state, transition, WorldError, WorldState};

pub const DEFAULT_N_MAX: u32 = 20;
pub const DEFAULT_TRACE_K: usize = 5;
pub const UNINFORMATIVE_FAILURE: &str = "Action failed.";
pub const UNINFORMATIVE_SUCCESS: &str = "Action succeeded.";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("invalid planner configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Feedback for one iteration: every attempted action with its outcome text,
/// plus an optional closing line about the goal or the response itself.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IterationRecord {
    pub action_feedback: Vec<(String, String)>,
    pub task_feedback: Option<String>,
}

impl IterationRecord {
    pub fn is_empty(&self) -> bool {
        self.action_feedback.is_empty() && self.task_feedback.is_none()
    }

    /// Rendered lines, one per action, then the task line.
    pub fn lines(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .action_feedback
            .iter()
            .map(|(a, f)| format!("{a}: {f}"))
            .collect();
        out.extend(self.task_feedback.iter().cloned());
        out
    }
}

/// Sliding window over the most recent `k` iteration records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackTrace {
    records: VecDeque<IterationRecord>,
    k: usize,
}

impl FeedbackTrace {
    pub fn new(k: usize) -> Self {
        Self {
            records: VecDeque::with_capacity(k),
            k,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &IterationRecord> {
        self.records.iter()
    }

    /// Appends and evicts the oldest records beyond `k`.
    pub fn push(&mut self, record: IterationRecord) {
        self.records.push_back(record);
        while self.records.len() > self.k {
            self.records.pop_front();
        }
    }
}

pub fn trace_push(mut trace: FeedbackTrace, record: IterationRecord) -> FeedbackTrace {
    trace.push(record);
    trace
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutResult {
    pub state: WorldState,
    pub prefix: Vec<(GroundAction, Trajectory)>,
    pub feedback: Vec<(String, String)>,
    pub halted: bool,
}

pub fn inapplicable_line(a: &GroundAction, reason: &str) -> String {
    format!("Action {} is not applicable: {reason}.", format_action(a))
}

/// Executes `plan` from `s` until the first action without a feasible motion.
///
/// Actions after a failure are never sent to the motion planner. Only
/// planner misconfiguration surfaces as an error.
pub fn rollout<M: MotionPlanner + ?Sized>(
    s: &WorldState,
    plan: &[GroundAction],
    mp: &mut M,
) -> Result<RolloutResult, PlannerError> {
    let mut state = s.clone();
    let mut prefix = Vec::new();
    let mut feedback = Vec::new();
    for a in plan {
        let text = format_action(a);
        let reason = match applicable(&state, a) {
            Ok(Applicability::Applicable) => None,
            Ok(Applicability::Inapplicable(r)) => Some(r),
            Err(e) => Some(format!("{e}")),
        };
        if let Some(r) = reason {
            feedback.push((text, inapplicable_line(a, &r)));
            return Ok(RolloutResult {
                state,
                prefix,
                feedback,
                halted: true,
            });
        }
        let (traj, fb) = mp.plan(&state, a)?;
        feedback.push((text, fb.text.clone()));
        match traj {
            Some(tau) => {
                state = transition(&state, a, &tau)?;
                prefix.push((a.clone(), tau));
            }
            None => {
                return Ok(RolloutResult {
                    state,
                    prefix,
                    feedback,
                    halted: true,
                })
            }
        }
    }
    Ok(RolloutResult {
        state,
        prefix,
        feedback,
        halted: false,
    })
}

/// How much of the motion feedback reaches the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeedbackMode {
    /// Categorized motion feedback.
    Full,
    /// Only which action failed.
    Uninformative,
    /// Nothing; every prompt is identical.
    Suppressed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub n_max: u32,
    pub k: usize,
    pub rrt: RrtParams,
    pub feedback: FeedbackMode,
    /// Prompt with the current state instead of the initial one.
    pub prompt_current_state: bool,
    /// Master seed for the per-query RRT seeds.
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            n_max: DEFAULT_N_MAX,
            k: DEFAULT_TRACE_K,
            rrt: RrtParams::default(),
            feedback: FeedbackMode::Full,
            prompt_current_state: false,
            seed: 0,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        if self.n_max == 0 {
            return Err(PlannerError::Config("n_max must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(PlannerError::Config("trace size k must be at least 1".into()));
        }
        self.rrt.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub llm_calls: u32,
    pub mp_calls: u64,
    pub iterations: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub success: bool,
    /// Feasible actions from the initial state, in execution order.
    pub plan: Vec<(GroundAction, Trajectory)>,
    pub metrics: Metrics,
    pub final_state: WorldState,
}

/// One line of the per-trial log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: u32,
    pub prompt_digest: String,
    pub response: String,
    pub feedback: Vec<String>,
    pub llm_calls: u32,
    pub mp_calls: u64,
    pub trace_len: usize,
    pub success: bool,
}

struct Counting<'a, M: ?Sized> {
    inner: &'a mut M,
    calls: u64,
}

impl<M: MotionPlanner + ?Sized> MotionPlanner for Counting<'_, M> {
    fn plan(&mut self, s: &WorldState, a: &GroundAction) -> Result<(Option<Trajectory>, MotionFeedback), MotionError> {
        self.calls += 1;
        self.inner.plan(s, a)
    }
}

fn mask(feedback: &[(String, String)], mode: FeedbackMode, last_failed: bool) -> Vec<(String, String)> {
    match mode {
        FeedbackMode::Full => feedback.to_vec(),
        _ => {
            let n = feedback.len();
            feedback
                .iter()
                .enumerate()
                .map(|(i, (a, _))| {
                    let failed = last_failed && i + 1 == n;
                    let text = if failed { UNINFORMATIVE_FAILURE } else { UNINFORMATIVE_SUCCESS };
                    (a.clone(), text.into())
                })
                .collect()
        }
    }
}

/// Runs the loop with the default RRT motion planner.
pub fn llm3_plan<B: LlmBackend + ?Sized>(
    scenario: &ScenarioSpec,
    strategy: Strategy,
    backend: &mut B,
    cfg: &PlannerConfig,
) -> Result<PlanOutcome, PlannerError> {
    let mut mp = RrtMotionPlanner::new(cfg.rrt, cfg.seed);
    llm3_plan_with(scenario, strategy, backend, &mut mp, cfg, &mut |_, _| {})
}

/// The full loop with an injected motion planner and an observer that sees
/// every iteration's log line and the trace after it was updated.
pub fn llm3_plan_with<B, M, F>(
    scenario: &ScenarioSpec,
    strategy: Strategy,
    backend: &mut B,
    mp: &mut M,
    cfg: &PlannerConfig,
    observer: &mut F,
) -> Result<PlanOutcome, PlannerError>
where
    B: LlmBackend + ?Sized,
    M: MotionPlanner + ?Sized,
    F: FnMut(&IterationLog, &FeedbackTrace),
{
    cfg.validate()?;
    let s0 = scenario.initial_state()?;
    let s0_text = textualize_state(&s0);
    let mut mp = Counting { inner: mp, calls: 0 };
    let mut budget = QueryBudget::new(cfg.n_max);
    let mut trace = FeedbackTrace::new(cfg.k);
    let mut s = s0.clone();
    let mut plan: Vec<(GroundAction, Trajectory)> = Vec::new();
    let mut iterations = 0;
    let mut success = false;

    while !success && budget.delivered < cfg.n_max {
        if strategy == Strategy::FromScratch {
            s = s0.clone();
            plan.clear();
        }
        let state_text = if cfg.prompt_current_state {
            textualize_state(&s)
        } else {
            s0_text.clone()
        };
        let prompt = build_prompt(strategy, scenario, &state_text, &trace);
        let raw = match query(backend, &prompt, &mut budget) {
            Ok(r) => r,
            Err(LlmError::BudgetExhausted) => break,
            Err(e) => return Err(e.into()),
        };
        iterations += 1;

        let record = match parse_response(&raw) {
            Err(LlmError::MalformedResponse(diag)) => IterationRecord {
                action_feedback: Vec::new(),
                task_feedback: Some(format!("Planner response unparsable: {diag}")),
            },
            Err(e) => return Err(e.into()),
            Ok(response) => {
                let r = rollout(&s, &response.plan, &mut mp)?;
                s = r.state;
                plan.extend(r.prefix);
                let (done, task) = goal_satisfied(&s, &scenario.goal)?;
                success = !r.halted && done;
                IterationRecord {
                    action_feedback: mask(&r.feedback, cfg.feedback, r.halted),
                    task_feedback: Some(task.text),
                }
            }
        };
        let lines = record.lines();
        if !success && cfg.feedback != FeedbackMode::Suppressed {
            trace.push(record);
        }
        let log = IterationLog {
            iteration: iterations,
            prompt_digest: prompt.digest(),
            response: raw,
            feedback: lines,
            llm_calls: budget.delivered,
            mp_calls: mp.calls,
            trace_len: trace.len(),
            success,
        };
        observer(&log, &trace);
    }

    Ok(PlanOutcome {
        success,
        plan,
        metrics: Metrics {
            llm_calls: budget.delivered,
            mp_calls: mp.calls,
            iterations,
        },
        final_state: s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{make_setting1, Difficulty};
    use crate::llm::{render_response, HeuristicBackend, ScriptedBackend};
    use crate::motion::{COLLISION_PREFIX, FEASIBLE_TEXT};

    fn rec(n: usize) -> IterationRecord {
        IterationRecord {
            action_feedback: alloc::vec![(format!("a{n}"), "f".into())],
            task_feedback: None,
        }
    }

    #[test]
    fn trace_window() {
        let mut t = FeedbackTrace::new(3);
        t = trace_push(t, rec(1));
        assert_eq!(t.len(), 1);
        for n in 2..=4 {
            t = trace_push(t, rec(n));
        }
        let names: Vec<&str> = t.records().map(|r| r.action_feedback[0].0.as_str()).collect();
        assert_eq!(names, ["a2", "a3", "a4"]);
        let mut one = FeedbackTrace::new(1);
        for n in 0..5 {
            one.push(rec(n));
            assert_eq!(one.records().next(), Some(&rec(n)));
        }
    }

    #[test]
    fn rollout_early_exit() {
        let spec = make_setting1(Difficulty::Easy, 0).unwrap();
        let s0 = spec.initial_state().unwrap();
        let mut mp = RrtMotionPlanner::new(RrtParams::default(), 0);
        let c = s0.basket.interior.center;
        let plan = [
            GroundAction::pick("red_box"),
            GroundAction::place("red_box", c.x, c.y, 0.0),
            GroundAction::pick("blue_box"),
            GroundAction::place("blue_box", c.x, c.y, 0.0),
            GroundAction::pick("green_box"),
        ];
        let r = rollout(&s0, &plan, &mut mp).unwrap();
        assert!(r.halted);
        assert_eq!(r.prefix.len(), 3);
        assert_eq!(r.feedback.len(), 4);
        assert!(r.feedback[3].1.starts_with(COLLISION_PREFIX));
        assert_eq!(mp.stats.calls, 4);

        let empty = rollout(&s0, &[], &mut mp).unwrap();
        assert_eq!(empty.state, s0);
        assert!(empty.feedback.is_empty() && !empty.halted);

        let two = rollout(&s0, &plan[..2], &mut mp).unwrap();
        assert!(!two.halted);
        assert!(two.feedback.iter().all(|(_, f)| f == FEASIBLE_TEXT));
    }

    #[test]
    fn inapplicable_halts_without_motion_call() {
        let spec = make_setting1(Difficulty::Easy, 0).unwrap();
        let s0 = spec.initial_state().unwrap();
        let mut mp = RrtMotionPlanner::new(RrtParams::default(), 0);
        let plan = [GroundAction::place("red_box", 0.5, 0.0, 0.0), GroundAction::pick("red_box")];
        let r = rollout(&s0, &plan, &mut mp).unwrap();
        assert!(r.halted);
        assert_eq!(mp.stats.calls, 0);
        assert_eq!(
            r.feedback[0].1,
            "Action place(['red_box'], {'x': 0.50, 'y': 0.00, 'theta': 0.00}) is not applicable: red_box is not held."
        );
    }

    #[test]
    fn heuristic_solves_easy_in_one_call() {
        let spec = make_setting1(Difficulty::Easy, 0).unwrap();
        let mut b = HeuristicBackend::new(&spec).unwrap();
        let out = llm3_plan(&spec, Strategy::Backtrack, &mut b, &PlannerConfig::default()).unwrap();
        assert!(out.success);
        assert_eq!(out.metrics.llm_calls, 1);
        assert_eq!(out.plan.len(), 6);
    }

    #[test]
    fn collision_then_fix() {
        let spec = make_setting1(Difficulty::Easy, 0).unwrap();
        let s0 = spec.initial_state().unwrap();
        let mut fixer = HeuristicBackend::new(&spec).unwrap();
        let good = fixer
            .complete(&crate::llm::PromptBundle {
                system_message: String::new(),
                user_message: String::new(),
            })
            .unwrap();
        let c = s0.basket.interior.center;
        let bad = render_response(
            "stack",
            &[
                GroundAction::pick("red_box"),
                GroundAction::place("red_box", c.x, c.y, 0.0),
                GroundAction::pick("blue_box"),
                GroundAction::place("blue_box", c.x, c.y, 0.0),
            ],
        );
        let mut b = ScriptedBackend::new([bad, good]);
        let mut traces = Vec::new();
        let out = llm3_plan_with(
            &spec,
            Strategy::FromScratch,
            &mut b,
            &mut RrtMotionPlanner::new(RrtParams::default(), 0),
            &PlannerConfig::default(),
            &mut |_, t| traces.push(crate::llm::render_trace(t)),
        )
        .unwrap();
        assert!(out.success);
        assert_eq!(out.metrics.llm_calls, 2);
        assert!(traces[0].contains("The goal configuration is in collision with red_box."));
    }

    #[test]
    fn unparsable_response_consumes_iteration() {
        let spec = make_setting1(Difficulty::Easy, 0).unwrap();
        let mut b = ScriptedBackend::new(core::iter::repeat_n("not json", 3));
        let cfg = PlannerConfig {
            n_max: 3,
            ..PlannerConfig::default()
        };
        let mut lines = Vec::new();
        let out = llm3_plan_with(
            &spec,
            Strategy::Backtrack,
            &mut b,
            &mut RrtMotionPlanner::new(cfg.rrt, 0),
            &cfg,
            &mut |log, _| lines.extend(log.feedback.clone()),
        )
        .unwrap();
        assert!(!out.success);
        assert_eq!(out.metrics.iterations, 3);
        assert_eq!(out.metrics.mp_calls, 0);
        assert!(lines[0].starts_with("Planner response unparsable: "));
    }

    #[test]
    fn masking_keeps_failed_position() {
        let fb = alloc::vec![("a".into(), "x".into()), ("b".into(), "y".into())];
        let m = mask(&fb, FeedbackMode::Uninformative, true);
        assert_eq!(m[0].1, UNINFORMATIVE_SUCCESS);
        assert_eq!(m[1].1, UNINFORMATIVE_FAILURE);
        assert_eq!(mask(&fb, FeedbackMode::Uninformative, false)[1].1, UNINFORMATIVE_SUCCESS);
    }

    #[test]
    fn zero_n_max_rejected() {
        let spec = make_setting1(Difficulty::Easy, 0).unwrap();
        let mut b = ScriptedBackend::new(["x"]);
        let cfg = PlannerConfig {
            n_max: 0,
            ..PlannerConfig::default()
        };
        assert!(matches!(
            llm3_plan(&spec, Strategy::Backtrack, &mut b, &cfg),
            Err(PlannerError::Config(_))
        ));
    }
}
