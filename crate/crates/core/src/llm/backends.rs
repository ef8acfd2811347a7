use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{render_response, LlmBackend, LlmError, PromptBundle};
use crate::actions::{place_schema, ActionSchema, GroundAction};
use crate::bench::packing::greedy_pack;
use crate::bench::ScenarioSpec;
use crate::geometry::{OrientedBox2, Point2};
use crate::world::WorldState;

const MAX_SAMPLE_ATTEMPTS: usize = 10_000;

fn two_decimals(v: f64) -> f64 {
    crate::math::round(v * 100.0) / 100.0
}

/// Uniform `x`, `y` inside `region` and `theta` over its schema range, all
/// on the two-decimal grid. Falls back to the region centre when rejection
/// sampling keeps missing.
pub fn sample_params_random<R: RngCore + ?Sized>(
    schema: &ActionSchema,
    region: &OrientedBox2,
    rng: &mut R,
) -> Vec<(String, f64)> {
    let bb = region.aabb();
    let xr = schema.range("x");
    let yr = schema.range("y");
    let mut xy = None;
    for _ in 0..MAX_SAMPLE_ATTEMPTS {
        let x = two_decimals(rng.random_range(bb.min.x..=bb.max.x));
        let y = two_decimals(rng.random_range(bb.min.y..=bb.max.y));
        let in_schema = xr.is_none_or(|r| r.contains(x)) && yr.is_none_or(|r| r.contains(y));
        if in_schema && region.contains_point(Point2::new(x, y)) {
            xy = Some((x, y));
            break;
        }
    }
    let (x, y) = xy.unwrap_or((two_decimals(region.center.x), two_decimals(region.center.y)));
    schema
        .params
        .iter()
        .map(|(name, range)| {
            let v = match name.as_str() {
                "x" => x,
                "y" => y,
                _ => {
                    let lo = crate::math::ceil(range.lo * 100.0) as i64;
                    let hi = crate::math::floor(range.hi * 100.0) as i64;
                    rng.random_range(lo..=hi) as f64 / 100.0
                }
            };
            (name.clone(), v)
        })
        .collect()
}

fn pick_place_plan(targets: impl IntoIterator<Item = (String, f64, f64, f64)>) -> Vec<GroundAction> {
    let mut plan = Vec::new();
    for (name, x, y, theta) in targets {
        plan.push(GroundAction::pick(&name));
        plan.push(GroundAction::place(&name, x, y, theta));
    }
    plan
}

/// Deterministic stand-in for a language model: answers every prompt with a
/// greedy packing of the scenario, trying a different scan on each call.
#[derive(Debug, Clone)]
pub struct HeuristicBackend {
    s0: WorldState,
    targets: Vec<String>,
    calls: u64,
}

impl HeuristicBackend {
    pub fn new(scenario: &ScenarioSpec) -> Result<Self, LlmError> {
        let s0 = scenario
            .initial_state()
            .map_err(|e| LlmError::Backend(format!("{e}")))?;
        Ok(Self {
            s0,
            targets: scenario.goal.target_objects.clone(),
            calls: 0,
        })
    }
}

impl LlmBackend for HeuristicBackend {
    fn complete(&mut self, _prompt: &PromptBundle) -> Result<String, LlmError> {
        let variant = self.calls;
        self.calls += 1;
        let (reasoning, plan) = match greedy_pack(&self.s0, &self.targets, variant) {
            Some(mut packing) => {
                // emit in goal order so the plan also fits a fixed skeleton
                packing.sort_by_key(|(n, _)| self.targets.iter().position(|t| t == n));
                (
                    format!("Greedy grid packing, scan variant {variant}."),
                    pick_place_plan(packing.into_iter().map(|(n, p)| (n, p.x, p.y, p.theta))),
                )
            }
            None => {
                let c = self.s0.basket.interior.center;
                (
                    "No packing found; stacking at the basket centre.".into(),
                    pick_place_plan(self.targets.iter().map(|n| (n.clone(), two_decimals(c.x), two_decimals(c.y), 0.0))),
                )
            }
        };
        Ok(render_response(&reasoning, &plan))
    }
}

/// Picks and places every target at a uniformly random basket location.
#[derive(Debug, Clone)]
pub struct RandomBackend {
    basket: OrientedBox2,
    targets: Vec<String>,
    rng: ChaCha8Rng,
}

impl RandomBackend {
    pub fn new(scenario: &ScenarioSpec, seed: u64) -> Self {
        Self {
            basket: scenario.basket.interior,
            targets: scenario.goal.target_objects.clone(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl LlmBackend for RandomBackend {
    fn complete(&mut self, _prompt: &PromptBundle) -> Result<String, LlmError> {
        let schema = place_schema();
        let mut placements = Vec::new();
        for name in &self.targets {
            let p = sample_params_random(&schema, &self.basket, &mut self.rng);
            let get = |k: &str| p.iter().find(|(n, _)| n == k).map(|(_, v)| *v).unwrap_or(0.0);
            placements.push((name.clone(), get("x"), get("y"), get("theta")));
        }
        Ok(render_response("Random placement.", &pick_place_plan(placements)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::{pick_schema, THETA_RANGE};
    use crate::bench::{make_setting1, Difficulty};
    use crate::geometry::Pose2;
    use crate::llm::parse_response;

    fn prompt() -> PromptBundle {
        PromptBundle {
            system_message: String::new(),
            user_message: String::new(),
        }
    }

    #[test]
    fn random_params_stay_in_region_and_schema() {
        let region = OrientedBox2 {
            center: Pose2::new(0.5, 0.0, 0.0),
            half_x: 0.2,
            half_y: 0.2,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let p = sample_params_random(&place_schema(), &region, &mut rng);
            assert_eq!(p.len(), 3);
            assert!(region.contains_point(Point2::new(p[0].1, p[1].1)));
            assert!(THETA_RANGE.contains(p[2].1));
            for (_, v) in &p {
                assert_eq!(two_decimals(*v), *v);
            }
        }
        assert!(sample_params_random(&pick_schema(), &region, &mut rng).is_empty());
    }

    #[test]
    fn falls_back_to_centre_outside_schema() {
        let region = OrientedBox2 {
            center: Pose2::new(5.0, 5.0, 0.0),
            half_x: 0.1,
            half_y: 0.1,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = sample_params_random(&place_schema(), &region, &mut rng);
        assert_eq!((p[0].1, p[1].1), (5.0, 5.0));
    }

    #[test]
    fn heuristic_emits_parseable_full_plan() {
        let spec = make_setting1(Difficulty::Medium, 0).unwrap();
        let mut b = HeuristicBackend::new(&spec).unwrap();
        let r = parse_response(&b.complete(&prompt()).unwrap()).unwrap();
        assert_eq!(r.plan.len(), 2 * spec.goal.target_objects.len());
        let r2 = parse_response(&b.complete(&prompt()).unwrap()).unwrap();
        assert_ne!(r.reasoning, r2.reasoning);
    }

    #[test]
    fn random_backend_is_seeded() {
        let spec = make_setting1(Difficulty::Easy, 0).unwrap();
        let a = RandomBackend::new(&spec, 9).complete(&prompt()).unwrap();
        let b = RandomBackend::new(&spec, 9).complete(&prompt()).unwrap();
        assert_eq!(a, b);
        assert_eq!(parse_response(&a).unwrap().plan.len(), 6);
    }
}
