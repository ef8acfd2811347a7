//! The motion planner: reachability (the IK stand-in), goal-collision
//! checks, path search and categorized feedback.
//!
//! A query runs three stages and stops at the first failure:
//!
//! 1. the target end-effector pose must lie inside the reach annulus,
//!    otherwise the feedback is *unreachable*;
//! 2. the goal footprint must be free: for `place` the carried object's
//!    footprint at the target against resting objects and the basket walls,
//!    for `pick` a small gripper square against the other objects. A hit
//!    yields *collision with X*;
//! 3. a BiRRT search from the current gripper pose. Carried objects travel
//!    lifted, so transit free space is the tabletop inside the reach
//!    annulus minus the robot's own base footprint. A search timeout is
//!    reported with the unreachable template.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::{applicable, ActionKind, Applicability, GroundAction};
use crate::geometry::{self, OrientedBox2, Pose2};
use crate::math;
use crate::rrt::{birrt, Workspace};
use crate::world::WorldState;

/// Side of the square gripper footprint used for pick goal checks.
pub const GRIPPER_WIDTH: f64 = 0.04;

/// Half-extent of the square robot-base footprint around the origin.
pub const BASE_HALF_EXTENT: f64 = 0.10;

pub const COLLISION_PREFIX: &str = "The goal configuration is in collision with ";
pub const UNREACHABLE_TEXT: &str = "The goal configuration has no feasible IK solution.";
pub const FEASIBLE_TEXT: &str = "The goal configuration is collision-free and reachable.";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MotionError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("no path found within the iteration budget")]
    NoPath,
    #[error("{0} configuration is in collision")]
    EndpointInCollision(&'static str),
    #[error("invalid RRT parameters: {0}")]
    InvalidParams(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrtParams {
    pub step_size: f64,
    pub goal_bias: f64,
    pub max_iterations: usize,
    pub rng_seed: u64,
}

impl Default for RrtParams {
    fn default() -> Self {
        Self {
            step_size: 0.05,
            goal_bias: 0.1,
            max_iterations: 50_000,
            rng_seed: 0,
        }
    }
}

impl RrtParams {
    pub fn validate(&self) -> Result<(), MotionError> {
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(MotionError::InvalidParams("step_size must be > 0"));
        }
        if !(self.goal_bias > 0.0 && self.goal_bias < 1.0) {
            return Err(MotionError::InvalidParams("goal_bias must be in (0, 1)"));
        }
        if self.max_iterations == 0 {
            return Err(MotionError::InvalidParams("max_iterations must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<Pose2>,
    pub action: GroundAction,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MotionFeedbackKind {
    CollisionWithObject(String),
    Unreachable,
    Feasible,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotionFeedback {
    pub kind: MotionFeedbackKind,
    pub text: String,
}

impl MotionFeedback {
    pub fn new(kind: MotionFeedbackKind) -> Self {
        let text = render_kind(&kind);
        Self { kind, text }
    }

    pub fn is_feasible(&self) -> bool {
        self.kind == MotionFeedbackKind::Feasible
    }
}

fn render_kind(kind: &MotionFeedbackKind) -> String {
    match kind {
        MotionFeedbackKind::CollisionWithObject(name) => format!("{COLLISION_PREFIX}{name}."),
        MotionFeedbackKind::Unreachable => UNREACHABLE_TEXT.into(),
        MotionFeedbackKind::Feasible => FEASIBLE_TEXT.into(),
    }
}

pub fn render_feedback(f: &MotionFeedback) -> String {
    render_kind(&f.kind)
}

/// Counts motion-planner invocations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MotionStats {
    pub calls: u64,
}

pub fn check_reachable(s: &WorldState, target: &Pose2) -> bool {
    s.reach.contains(s.robot_base.position(), target.position())
}

/// End-effector target of an action: the object pose for `pick`, the
/// parameters for `place`.
pub fn target_pose(s: &WorldState, a: &GroundAction) -> Option<Pose2> {
    match a.kind()? {
        ActionKind::Pick => s.objects.get(a.objects.first()?).map(|o| o.pose),
        ActionKind::Place => a.place_pose(),
    }
}

/// First entity hit by the goal footprint: resting objects by name, then
/// walls N, S, E, W.
pub fn check_goal_collision(s: &WorldState, a: &GroundAction) -> Option<String> {
    let name = a.objects.first()?;
    let obj = s.objects.get(name)?;
    match a.kind()? {
        ActionKind::Place => {
            let fp = obj.shape.footprint(a.place_pose()?);
            for other in s.resting_objects().filter(|o| o.name != *name) {
                if geometry::overlap(&fp, &other.footprint()) {
                    return Some(other.name.clone());
                }
            }
            s.basket
                .walls()
                .iter()
                .find(|(_, w)| geometry::overlap(&fp, w))
                .map(|(n, _)| String::from(*n))
        }
        ActionKind::Pick => {
            let grip = OrientedBox2 {
                center: obj.pose,
                half_x: GRIPPER_WIDTH / 2.0,
                half_y: GRIPPER_WIDTH / 2.0,
            };
            s.resting_objects()
                .filter(|o| o.name != *name)
                .find(|o| geometry::overlap(&grip, &o.footprint()))
                .map(|o| o.name.clone())
        }
    }
}

/// Transit free space for the gripper in state `s`.
pub fn transit_workspace(s: &WorldState) -> Workspace {
    let base = OrientedBox2 {
        center: s.robot_base,
        half_x: BASE_HALF_EXTENT,
        half_y: BASE_HALF_EXTENT,
    };
    Workspace::new(s.table, vec![base]).with_annulus(s.robot_base.position(), s.reach)
}

/// One motion-planner query. Increments `stats.calls` exactly once.
pub fn plan_motion(
    s: &WorldState,
    a: &GroundAction,
    params: &RrtParams,
    stats: &mut MotionStats,
) -> Result<(Option<Trajectory>, MotionFeedback), MotionError> {
    stats.calls += 1;
    match applicable(s, a) {
        Ok(Applicability::Applicable) => {}
        Ok(Applicability::Inapplicable(reason)) => return Err(MotionError::PreconditionViolated(reason)),
        Err(e) => return Err(MotionError::PreconditionViolated(format!("{e}"))),
    }
    let target = target_pose(s, a)
        .ok_or_else(|| MotionError::PreconditionViolated(format!("no target pose for '{}'", a.name)))?;
    if !check_reachable(s, &target) {
        return Ok((None, MotionFeedback::new(MotionFeedbackKind::Unreachable)));
    }
    if let Some(hit) = check_goal_collision(s, a) {
        return Ok((None, MotionFeedback::new(MotionFeedbackKind::CollisionWithObject(hit))));
    }
    let ws = transit_workspace(s);
    match birrt(s.gripper, target, &ws, params) {
        Ok(waypoints) => Ok((
            Some(Trajectory {
                waypoints,
                action: a.clone(),
            }),
            MotionFeedback::new(MotionFeedbackKind::Feasible),
        )),
        Err(MotionError::NoPath | MotionError::EndpointInCollision(_)) => {
            Ok((None, MotionFeedback::new(MotionFeedbackKind::Unreachable)))
        }
        Err(e) => Err(e),
    }
}

/// Re-checks a returned trajectory against the state it was planned in.
pub fn validate_trajectory(s: &WorldState, t: &Trajectory, params: &RrtParams) -> bool {
    let Some(target) = target_pose(s, &t.action) else {
        return false;
    };
    let Some(last) = t.waypoints.last() else {
        return false;
    };
    let ends_at_target = last.position().distance(&target.position()) < 1e-9
        && math::angle_delta(last.theta, target.theta).abs() < 1e-9;
    ends_at_target
        && check_goal_collision(s, &t.action).is_none()
        && transit_workspace(s).path_free(&t.waypoints, params.step_size)
}

/// The motion-planning oracle consulted by the planning loop.
pub trait MotionPlanner {
    fn plan(&mut self, s: &WorldState, a: &GroundAction) -> Result<(Option<Trajectory>, MotionFeedback), MotionError>;
}

/// [`plan_motion`] with a fresh RRT seed per query, fanned out from one master seed.
#[derive(Debug, Clone)]
pub struct RrtMotionPlanner {
    pub params: RrtParams,
    pub stats: MotionStats,
    master_seed: u64,
}

impl RrtMotionPlanner {
    pub fn new(params: RrtParams, master_seed: u64) -> Self {
        Self {
            params,
            stats: MotionStats::default(),
            master_seed,
        }
    }
}

impl MotionPlanner for RrtMotionPlanner {
    fn plan(&mut self, s: &WorldState, a: &GroundAction) -> Result<(Option<Trajectory>, MotionFeedback), MotionError> {
        let params = RrtParams {
            rng_seed: math::mix_seed(self.master_seed, self.stats.calls),
            ..self.params
        };
        plan_motion(s, a, &params, &mut self.stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoxShape;
    use crate::world::{Basket, ObjectState, Reach};

    fn shape(sx: f64, sy: f64) -> BoxShape {
        BoxShape::new(sx, sy, 0.05).unwrap()
    }

    fn world(holding_red: bool) -> WorldState {
        let objs = vec![
            ObjectState {
                name: "red_box".into(),
                shape: shape(0.1, 0.1),
                pose: Pose2::new(0.3, 0.5, 0.0),
                held: holding_red,
            },
            ObjectState {
                name: "blue_box".into(),
                shape: shape(0.1, 0.1),
                pose: Pose2::new(0.4, 0.1, 0.0),
                held: false,
            },
        ];
        let basket = Basket {
            interior: OrientedBox2::new(Pose2::new(0.5, 0.0, 0.0), 0.2, 0.2).unwrap(),
            wall_thickness: 0.02,
        };
        WorldState::new(objs, basket, Reach::default()).unwrap()
    }

    #[test]
    fn templates_are_exact() {
        let f = MotionFeedback::new(MotionFeedbackKind::CollisionWithObject("red_box".into()));
        assert_eq!(render_feedback(&f), "The goal configuration is in collision with red_box.");
        assert_eq!(
            render_feedback(&MotionFeedback::new(MotionFeedbackKind::Unreachable)),
            "The goal configuration has no feasible IK solution."
        );
        assert_eq!(
            render_feedback(&MotionFeedback::new(MotionFeedbackKind::Feasible)),
            "The goal configuration is collision-free and reachable."
        );
    }

    #[test]
    fn reachability_annulus() {
        let s = world(false);
        assert!(!check_reachable(&s, &Pose2::new(1.0, 0.0, 0.0)));
        assert!(check_reachable(&s, &Pose2::new(0.5, 0.0, 0.0)));
        assert!(!check_reachable(&s, &Pose2::new(0.05, 0.0, 0.0)));
    }

    #[test]
    fn goal_collision_cases() {
        let s = world(true);
        assert_eq!(check_goal_collision(&s, &GroundAction::place("red_box", 0.6, -0.1, 0.0)), None);
        assert_eq!(
            check_goal_collision(&s, &GroundAction::place("red_box", 0.4, 0.1, 0.0)),
            Some("blue_box".into())
        );
        // blue spans x in [0.35, 0.45]: red centred at 0.549 clears it, at
        // 0.499 it reaches 0.449 and overlaps by 1 mm
        assert_eq!(
            check_goal_collision(&s, &GroundAction::place("red_box", 0.549, 0.1, 0.0)),
            None
        );
        assert_eq!(
            check_goal_collision(&s, &GroundAction::place("red_box", 0.499, 0.1, 0.0)),
            Some("blue_box".into())
        );
        // flush with the east wall's inner face is fine, 1 mm further is not
        assert_eq!(check_goal_collision(&s, &GroundAction::place("red_box", 0.65, -0.1, 0.0)), None);
        assert_eq!(
            check_goal_collision(&s, &GroundAction::place("red_box", 0.651, -0.1, 0.0)),
            Some("basket_wall_E".into())
        );
    }

    #[test]
    fn plan_motion_pipeline() {
        let s = world(true);
        let mut stats = MotionStats::default();
        let p = RrtParams::default();

        let (t, f) = plan_motion(&s, &GroundAction::place("red_box", 0.6, -0.1, 0.0), &p, &mut stats).unwrap();
        assert_eq!(f.kind, MotionFeedbackKind::Feasible);
        let t = t.unwrap();
        assert!(t.waypoints.len() >= 2);
        assert!(validate_trajectory(&s, &t, &p));

        assert!(!check_reachable(&s, &Pose2::new(2.0 * s.reach.r_max, 0.0, 0.0)));
        let (t, f) = plan_motion(&s, &GroundAction::place("red_box", 1.0, 0.99, 0.0), &p, &mut stats).unwrap();
        assert!(t.is_none());
        assert_eq!(f.text, UNREACHABLE_TEXT);

        let (t, f) = plan_motion(&s, &GroundAction::place("red_box", 0.4, 0.1, 0.0), &p, &mut stats).unwrap();
        assert!(t.is_none());
        assert_eq!(f.text, "The goal configuration is in collision with blue_box.");

        assert!(matches!(
            plan_motion(&s, &GroundAction::pick("blue_box"), &p, &mut stats),
            Err(MotionError::PreconditionViolated(_))
        ));
        assert_eq!(stats.calls, 4);
    }

    #[test]
    fn determinism() {
        let s = world(true);
        let a = GroundAction::place("red_box", 0.6, -0.1, 1.0);
        let p = RrtParams {
            rng_seed: 7,
            ..RrtParams::default()
        };
        let r1 = plan_motion(&s, &a, &p, &mut MotionStats::default()).unwrap();
        let r2 = plan_motion(&s, &a, &p, &mut MotionStats::default()).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn rejects_bad_params() {
        for p in [
            RrtParams { step_size: 0.0, ..RrtParams::default() },
            RrtParams { goal_bias: 1.0, ..RrtParams::default() },
            RrtParams { max_iterations: 0, ..RrtParams::default() },
        ] {
            assert!(p.validate().is_err());
        }
    }
}
