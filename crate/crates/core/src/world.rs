//! World state, the transition function, the goal test, and prompt textualization.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::{applicable, ActionError, ActionKind, Applicability, GroundAction};
use crate::fmt::fixed2;
use crate::geometry::{self, Aabb2, BoxShape, OrientedBox2, Point2, Pose2};
use crate::motion::Trajectory;

pub const GOAL_SATISFIED_TEXT: &str = "Goal satisfied: all target objects are fully inside the basket.";

pub const WALL_NAMES: [&str; 4] = [
    "basket_wall_N",
    "basket_wall_S",
    "basket_wall_E",
    "basket_wall_W",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("unknown object '{0}'")]
    UnknownObject(String),
    #[error("invalid world state: {0}")]
    Invalid(String),
}

impl From<ActionError> for WorldError {
    fn from(e: ActionError) -> Self {
        match e {
            ActionError::UnknownObject(n) => WorldError::UnknownObject(n),
            other => WorldError::PreconditionViolated(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reach {
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for Reach {
    fn default() -> Self {
        Self {
            r_min: 0.10,
            r_max: 0.90,
        }
    }
}

impl Reach {
    pub fn contains(&self, base: Point2, target: Point2) -> bool {
        let d = base.distance(&target);
        d >= self.r_min && d <= self.r_max
    }
}

/// Basket interior plus four walls of `wall_thickness` hugging it from outside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Basket {
    pub interior: OrientedBox2,
    pub wall_thickness: f64,
}

impl Basket {
    /// Walls in the fixed order N, S, E, W (basket frame: E is +x, N is +y).
    /// N and S span the full outer width so the corners are closed.
    pub fn walls(&self) -> [(&'static str, OrientedBox2); 4] {
        let (hx, hy, t) = (self.interior.half_x, self.interior.half_y, self.wall_thickness);
        let c = self.interior.center;
        let at = |lx: f64, ly: f64, half_x: f64, half_y: f64| OrientedBox2 {
            center: c.compose(&Pose2::new(lx, ly, 0.0)),
            half_x,
            half_y,
        };
        [
            (WALL_NAMES[0], at(0.0, hy + t / 2.0, hx + t, t / 2.0)),
            (WALL_NAMES[1], at(0.0, -(hy + t / 2.0), hx + t, t / 2.0)),
            (WALL_NAMES[2], at(hx + t / 2.0, 0.0, t / 2.0, hy)),
            (WALL_NAMES[3], at(-(hx + t / 2.0), 0.0, t / 2.0, hy)),
        ]
    }

    /// Interior grown by the wall thickness.
    pub fn outer(&self) -> OrientedBox2 {
        OrientedBox2 {
            center: self.interior.center,
            half_x: self.interior.half_x + self.wall_thickness,
            half_y: self.interior.half_y + self.wall_thickness,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub name: String,
    pub shape: BoxShape,
    pub pose: Pose2,
    pub held: bool,
}

impl ObjectState {
    pub fn footprint(&self) -> OrientedBox2 {
        self.shape.footprint(self.pose)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub robot_base: Pose2,
    /// Current end-effector pose; motion queries start here.
    pub gripper: Pose2,
    pub holding: Option<String>,
    pub objects: BTreeMap<String, ObjectState>,
    pub basket: Basket,
    pub reach: Reach,
    /// Tabletop bounds, matching the `place` parameter ranges.
    pub table: Aabb2,
}

/// Default tabletop: x in [0, 1], y in [-1, 1].
pub const TABLE: Aabb2 = Aabb2::new(Point2::new(0.0, -1.0), Point2::new(1.0, 1.0));

/// Resting end-effector pose before the first action.
pub const HOME_GRIPPER: Pose2 = Pose2 {
    x: 0.30,
    y: 0.0,
    theta: 0.0,
};

impl WorldState {
    pub fn new(objects: Vec<ObjectState>, basket: Basket, reach: Reach) -> Result<Self, WorldError> {
        let mut map = BTreeMap::new();
        for o in objects {
            if map.contains_key(&o.name) {
                return Err(WorldError::Invalid(format!("duplicate object name '{}'", o.name)));
            }
            map.insert(o.name.clone(), o);
        }
        let holding = map.values().find(|o| o.held).map(|o| o.name.clone());
        let s = Self {
            robot_base: Pose2::origin(),
            gripper: HOME_GRIPPER,
            holding,
            objects: map,
            basket,
            reach,
            table: TABLE,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn object(&self, name: &str) -> Result<&ObjectState, WorldError> {
        self.objects
            .get(name)
            .ok_or_else(|| WorldError::UnknownObject(name.to_string()))
    }

    /// Non-held objects in name order.
    pub fn resting_objects(&self) -> impl Iterator<Item = &ObjectState> {
        self.objects.values().filter(|o| !o.held)
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        if self.robot_base != Pose2::origin() {
            return Err(WorldError::Invalid("robot base must sit at (0, 0, 0)".into()));
        }
        if !(self.reach.r_min >= 0.0 && self.reach.r_min < self.reach.r_max) {
            return Err(WorldError::Invalid("reach annulus must satisfy 0 <= r_min < r_max".into()));
        }
        let mut held = Vec::new();
        for (key, o) in &self.objects {
            if key != &o.name {
                return Err(WorldError::Invalid(format!("object key '{key}' != name '{}'", o.name)));
            }
            if !o.pose.is_valid() {
                return Err(WorldError::Invalid(format!("object '{key}' has an invalid pose")));
            }
            if o.held {
                held.push(o.name.as_str());
            }
        }
        match (held.as_slice(), self.holding.as_deref()) {
            ([], None) => {}
            ([h], Some(name)) if *h == name => {}
            _ => {
                return Err(WorldError::Invalid(
                    "held flags disagree with the gripper's holding slot".into(),
                ))
            }
        }
        let resting: Vec<&ObjectState> = self.resting_objects().collect();
        for (i, a) in resting.iter().enumerate() {
            for b in &resting[i + 1..] {
                if geometry::overlap(&a.footprint(), &b.footprint()) {
                    return Err(WorldError::Invalid(format!(
                        "objects '{}' and '{}' overlap",
                        a.name, b.name
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalSpec {
    pub target_objects: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskFeedback {
    pub satisfied: bool,
    pub text: String,
}

/// Applies a motion-verified action. The input state is left untouched.
pub fn transition(s: &WorldState, a: &GroundAction, tau: &Trajectory) -> Result<WorldState, WorldError> {
    let Some(end) = tau.waypoints.last() else {
        return Err(WorldError::PreconditionViolated("empty trajectory".into()));
    };
    if let Applicability::Inapplicable(reason) = applicable(s, a)? {
        return Err(WorldError::PreconditionViolated(reason));
    }
    let mut next = s.clone();
    let name = &a.objects[0];
    let obj = next
        .objects
        .get_mut(name)
        .ok_or_else(|| WorldError::UnknownObject(name.clone()))?;
    match a.kind() {
        Some(ActionKind::Pick) => {
            obj.held = true;
            next.holding = Some(name.clone());
        }
        Some(ActionKind::Place) => {
            obj.held = false;
            obj.pose = a.place_pose().ok_or_else(|| {
                WorldError::PreconditionViolated("place without x/y/theta".into())
            })?;
            next.holding = None;
        }
        None => {
            return Err(WorldError::PreconditionViolated(format!(
                "no transition rule for '{}'",
                a.name
            )))
        }
    }
    next.gripper = *end;
    Ok(next)
}

/// Goal test: every target rests fully inside the basket and no two targets overlap.
pub fn goal_satisfied(s: &WorldState, goal: &GoalSpec) -> Result<(bool, TaskFeedback), WorldError> {
    let mut targets = Vec::with_capacity(goal.target_objects.len());
    for name in &goal.target_objects {
        targets.push(s.object(name)?);
    }
    let mut bad = alloc::collections::BTreeSet::new();
    for o in &targets {
        if o.held || !geometry::contains(&s.basket.interior, &o.footprint()) {
            bad.insert(o.name.as_str());
        }
    }
    for (i, a) in targets.iter().enumerate() {
        for b in &targets[i + 1..] {
            if !a.held && !b.held && geometry::overlap(&a.footprint(), &b.footprint()) {
                bad.insert(a.name.as_str());
                bad.insert(b.name.as_str());
            }
        }
    }
    if bad.is_empty() {
        return Ok((
            true,
            TaskFeedback {
                satisfied: true,
                text: GOAL_SATISFIED_TEXT.into(),
            },
        ));
    }
    let names: Vec<&str> = bad.into_iter().collect();
    Ok((
        false,
        TaskFeedback {
            satisfied: false,
            text: format!(
                "Goal not satisfied: {} not fully inside the basket.",
                names.join(", ")
            ),
        },
    ))
}

/// Line-per-object rendering with two-decimal numbers.
pub fn textualize_state(s: &WorldState) -> String {
    let b = &s.basket.interior;
    let bb = b.aabb();
    let mut out = format!(
        "Robot base: ({}, {}), facing the positive x-axis.\n",
        fixed2(s.robot_base.x),
        fixed2(s.robot_base.y)
    );
    out.push_str(&format!(
        "Basket: center ({}, {}), interior size {} x {}, theta {}, wall thickness {}; interior x range [{}, {}], y range [{}, {}].\n",
        fixed2(b.center.x),
        fixed2(b.center.y),
        fixed2(2.0 * b.half_x),
        fixed2(2.0 * b.half_y),
        fixed2(b.center.theta),
        fixed2(s.basket.wall_thickness),
        fixed2(bb.min.x),
        fixed2(bb.max.x),
        fixed2(bb.min.y),
        fixed2(bb.max.y),
    ));
    for o in s.objects.values() {
        out.push_str(&format!(
            "{}: size ({}, {}, {}), pose (x: {}, y: {}, theta: {}){}\n",
            o.name,
            fixed2(o.shape.size_x),
            fixed2(o.shape.size_y),
            fixed2(o.shape.size_z),
            fixed2(o.pose.x),
            fixed2(o.pose.y),
            fixed2(o.pose.theta),
            if o.held { ", held by the robot" } else { "" },
        ));
    }
    out
}
