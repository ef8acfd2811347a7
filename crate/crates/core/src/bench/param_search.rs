//! Parameter search over a fixed pick/place skeleton: only the place
//! parameters change between iterations, so sampler quality shows up
//! directly in the iteration and motion-call counts.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::packing::greedy_pack;
use super::scenario::ScenarioSpec;
use crate::actions::{place_schema, ActionKind, GroundAction};
use crate::geometry::OrientedBox2;
use crate::llm::{build_param_prompt, parse_response, query, sample_params_random, LlmBackend, LlmError, QueryBudget};
use crate::motion::{RrtMotionPlanner, RrtParams};
use crate::planner::{rollout, PlannerError};
use crate::world::{goal_satisfied, textualize_state};

pub const DEFAULT_MAX_ITERATIONS: u32 = 2000;
pub const SKELETON_MISMATCH: &str = "The returned plan does not follow the fixed action sequence.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplerKind {
    Random,
    Heuristic,
    Llm,
    LlmFeedback,
}

impl core::str::FromStr for SamplerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(Self::Random),
            "heuristic" => Ok(Self::Heuristic),
            "llm" => Ok(Self::Llm),
            "llm-feedback" => Ok(Self::LlmFeedback),
            _ => Err(format!("unknown sampler '{s}'")),
        }
    }
}

/// Fills in parameters for the skeleton. `feedback` holds the previous
/// iteration's lines and is `None` on the first iteration.
pub trait ParamSampler {
    fn propose(&mut self, skeleton: &[GroundAction], feedback: Option<&[String]>) -> Result<Vec<GroundAction>, LlmError>;

    fn llm_calls(&self) -> u32 {
        0
    }
}

/// pick/place for every goal object, in goal order.
pub fn fixed_skeleton(scenario: &ScenarioSpec) -> Vec<GroundAction> {
    scenario
        .goal
        .target_objects
        .iter()
        .flat_map(|n| [GroundAction::pick(n), GroundAction::place(n, 0.0, 0.0, 0.0)])
        .collect()
}

pub struct RandomSampler {
    region: OrientedBox2,
    rng: ChaCha8Rng,
}

impl RandomSampler {
    pub fn new(scenario: &ScenarioSpec, seed: u64) -> Self {
        Self {
            region: scenario.basket.interior,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl ParamSampler for RandomSampler {
    fn propose(&mut self, skeleton: &[GroundAction], _: Option<&[String]>) -> Result<Vec<GroundAction>, LlmError> {
        let schema = place_schema();
        Ok(skeleton
            .iter()
            .map(|a| match a.kind() {
                Some(ActionKind::Place) => GroundAction {
                    params: sample_params_random(&schema, &self.region, &mut self.rng),
                    ..a.clone()
                },
                _ => a.clone(),
            })
            .collect())
    }
}

/// Greedy grid packing, a new scan variant per iteration.
pub struct HeuristicSampler {
    scenario: ScenarioSpec,
    variant: u64,
}

impl HeuristicSampler {
    pub fn new(scenario: &ScenarioSpec) -> Self {
        Self {
            scenario: scenario.clone(),
            variant: 0,
        }
    }
}

impl ParamSampler for HeuristicSampler {
    fn propose(&mut self, skeleton: &[GroundAction], _: Option<&[String]>) -> Result<Vec<GroundAction>, LlmError> {
        let s0 = self
            .scenario
            .initial_state()
            .map_err(|e| LlmError::Backend(format!("{e}")))?;
        let packing = greedy_pack(&s0, &self.scenario.goal.target_objects, self.variant).unwrap_or_default();
        self.variant += 1;
        Ok(skeleton
            .iter()
            .map(|a| {
                let hit = packing.iter().find(|(n, _)| Some(n) == a.objects.first());
                match (a.kind(), hit) {
                    (Some(ActionKind::Place), Some((n, p))) => GroundAction::place(n, p.x, p.y, p.theta),
                    _ => a.clone(),
                }
            })
            .collect())
    }
}

/// Asks a language model for the parameters, optionally with the previous
/// failure feedback.
pub struct LlmSampler {
    backend: Box<dyn LlmBackend>,
    scenario: ScenarioSpec,
    s0_text: String,
    with_feedback: bool,
    budget: QueryBudget,
}

impl LlmSampler {
    pub fn new(backend: Box<dyn LlmBackend>, scenario: &ScenarioSpec, with_feedback: bool, max_calls: u32) -> Result<Self, PlannerError> {
        let s0 = scenario.initial_state()?;
        Ok(Self {
            backend,
            scenario: scenario.clone(),
            s0_text: textualize_state(&s0),
            with_feedback,
            budget: QueryBudget::new(max_calls),
        })
    }
}

impl ParamSampler for LlmSampler {
    fn propose(&mut self, skeleton: &[GroundAction], feedback: Option<&[String]>) -> Result<Vec<GroundAction>, LlmError> {
        let fb = if self.with_feedback { feedback } else { None };
        let prompt = build_param_prompt(&self.scenario, &self.s0_text, skeleton, fb);
        let raw = query(&mut self.backend, &prompt, &mut self.budget)?;
        Ok(parse_response(&raw)?.plan)
    }

    fn llm_calls(&self) -> u32 {
        self.budget.delivered
    }
}

fn matches_skeleton(plan: &[GroundAction], skeleton: &[GroundAction]) -> bool {
    plan.len() == skeleton.len()
        && plan
            .iter()
            .zip(skeleton)
            .all(|(p, s)| p.name == s.name && p.objects == s.objects)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSearchConfig {
    pub max_iterations: u32,
    pub rrt: RrtParams,
    pub seed: u64,
}

impl Default for ParamSearchConfig {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            rrt: RrtParams::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSearchOutcome {
    pub success: bool,
    pub iterations: u32,
    pub mp_calls: u64,
    pub llm_calls: u32,
}

/// Resamples place parameters until the whole skeleton is feasible from the
/// initial state or the iteration cap is hit.
pub fn fixed_sequence_param_search<S: ParamSampler + ?Sized>(
    scenario: &ScenarioSpec,
    sampler: &mut S,
    cfg: &ParamSearchConfig,
) -> Result<ParamSearchOutcome, PlannerError> {
    cfg.rrt.validate()?;
    let s0 = scenario.initial_state()?;
    let skeleton = fixed_skeleton(scenario);
    let mut mp = RrtMotionPlanner::new(cfg.rrt, cfg.seed);
    let mut feedback: Option<Vec<String>> = None;
    let mut out = ParamSearchOutcome {
        success: false,
        iterations: 0,
        mp_calls: 0,
        llm_calls: 0,
    };
    while out.iterations < cfg.max_iterations {
        let plan = match sampler.propose(&skeleton, feedback.as_deref()) {
            Ok(p) => p,
            Err(LlmError::MalformedResponse(d)) => {
                out.iterations += 1;
                feedback = Some(alloc::vec![format!("Planner response unparsable: {d}")]);
                continue;
            }
            Err(LlmError::BudgetExhausted) => break,
            Err(e) => return Err(e.into()),
        };
        out.iterations += 1;
        if !matches_skeleton(&plan, &skeleton) {
            feedback = Some(alloc::vec![String::from(SKELETON_MISMATCH)]);
            continue;
        }
        let r = rollout(&s0, &plan, &mut mp)?;
        let (done, task) = goal_satisfied(&r.state, &scenario.goal)?;
        if !r.halted && done {
            out.success = true;
            break;
        }
        let mut lines: Vec<String> = r.feedback.iter().map(|(a, f)| format!("{a}: {f}")).collect();
        lines.push(task.text);
        feedback = Some(lines);
    }
    out.mp_calls = mp.stats.calls;
    out.llm_calls = sampler.llm_calls();
    Ok(out)
}
