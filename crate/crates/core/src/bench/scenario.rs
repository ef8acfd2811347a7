//! Box-packing scenarios.
//!
//! Setting 1 keeps a 0.40 m square basket fixed and grows the object set
//! (basket occupancy 30 / 55 / 75 %). Setting 2 packs the largest set into
//! baskets of width 0.40 / 0.55 / 0.70 m pushed outward until only about
//! 100 / 70 / 50 % of the interior lies inside the reach annulus.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, Aabb2, BoxShape, OrientedBox2, Pose2};
use crate::math;
use crate::motion::BASE_HALF_EXTENT;
use crate::world::{Basket, GoalSpec, ObjectState, Reach, WorldError, WorldState, TABLE};

pub const BASKET_SIDE: f64 = 0.40;
pub const BASKET_CENTER_X: f64 = 0.50;
pub const WALL_THICKNESS: f64 = 0.02;
pub const SETTING2_WIDTHS: [f64; 3] = [0.40, 0.55, 0.70];
pub const SETTING2_REACHABLE: [f64; 3] = [1.0, 0.70, 0.50];
pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

/// Clearance kept between initial objects, and between objects and the basket rim.
const OBJECT_CLEARANCE: f64 = 0.02;
const BASKET_CLEARANCE: f64 = 0.03;
/// Initial objects stay this far inside the reach limits.
const REACH_MARGIN: f64 = 0.02;
const MIN_START_RADIUS: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("could not place '{object}' after {attempts} attempts")]
    GenerationFailure { object: String, attempts: usize },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    World(#[from] WorldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasketSize {
    Small,
    Medium,
    Large,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub name: String,
    pub shape: BoxShape,
    pub pose: Pose2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub objects: Vec<ObjectSpec>,
    pub basket: Basket,
    pub goal: GoalSpec,
    pub reach: Reach,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn initial_state(&self) -> Result<WorldState, ScenarioError> {
        let objects = self
            .objects
            .iter()
            .map(|o| ObjectState {
                name: o.name.clone(),
                shape: o.shape,
                pose: o.pose,
                held: false,
            })
            .collect();
        Ok(WorldState::new(objects, self.basket, self.reach)?)
    }

    /// Total footprint of the goal objects over the basket interior area.
    pub fn occupancy_ratio(&self) -> f64 {
        let total: f64 = self
            .objects
            .iter()
            .filter(|o| self.goal.target_objects.contains(&o.name))
            .map(|o| o.shape.footprint_area())
            .sum();
        total / self.basket.interior.area()
    }

    pub fn reachable_fraction(&self) -> f64 {
        reachable_fraction(&self.basket.interior, &self.reach)
    }

    /// Structural checks: non-overlapping reachable starts outside the basket,
    /// and a goal that names existing objects.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let s = self.initial_state()?;
        if self.goal.target_objects.is_empty() {
            return Err(ScenarioError::Invalid("goal names no objects".into()));
        }
        for t in &self.goal.target_objects {
            s.object(t)?;
        }
        let outer = self.basket.outer();
        for o in &self.objects {
            if geometry::overlap(&o.shape.footprint(o.pose), &outer) {
                return Err(ScenarioError::Invalid(format!("'{}' starts inside the basket", o.name)));
            }
            if !self.reach.contains(s.robot_base.position(), o.pose.position()) {
                return Err(ScenarioError::Invalid(format!("'{}' starts out of reach", o.name)));
            }
        }
        Ok(())
    }
}

fn object_set(difficulty: Difficulty) -> Vec<(&'static str, f64, f64, f64)> {
    match difficulty {
        Difficulty::Easy => alloc::vec![
            ("red_box", 0.16, 0.10, 0.08),
            ("blue_box", 0.12, 0.12, 0.10),
            ("green_box", 0.14, 0.12, 0.06),
        ],
        Difficulty::Medium => alloc::vec![
            ("red_box", 0.20, 0.15, 0.08),
            ("blue_box", 0.18, 0.12, 0.10),
            ("green_box", 0.16, 0.12, 0.06),
            ("yellow_box", 0.14, 0.125, 0.08),
        ],
        Difficulty::Hard => alloc::vec![
            ("red_box", 0.20, 0.12, 0.08),
            ("blue_box", 0.18, 0.12, 0.10),
            ("green_box", 0.17, 0.12, 0.06),
            ("yellow_box", 0.14, 0.13, 0.08),
            ("purple_box", 0.15, 0.12, 0.07),
            ("orange_box", 0.16, 0.11, 0.09),
        ],
    }
}

fn square_basket(center_x: f64, side: f64) -> Basket {
    Basket {
        interior: OrientedBox2 {
            center: Pose2::new(center_x, 0.0, 0.0),
            half_x: side / 2.0,
            half_y: side / 2.0,
        },
        wall_thickness: WALL_THICKNESS,
    }
}

pub fn make_setting1(difficulty: Difficulty, seed: u64) -> Result<ScenarioSpec, ScenarioError> {
    let name = match difficulty {
        Difficulty::Easy => "setting1-easy",
        Difficulty::Medium => "setting1-medium",
        Difficulty::Hard => "setting1-hard",
    };
    build(name, difficulty, square_basket(BASKET_CENTER_X, BASKET_SIDE), seed)
}

pub fn make_setting2(size: BasketSize, seed: u64) -> Result<ScenarioSpec, ScenarioError> {
    let reach = Reach::default();
    let (name, idx) = match size {
        BasketSize::Small => ("setting2-small", 0),
        BasketSize::Medium => ("setting2-medium", 1),
        BasketSize::Large => ("setting2-large", 2),
    };
    let side = SETTING2_WIDTHS[idx];
    let basket = match size {
        BasketSize::Small => square_basket(BASKET_CENTER_X, side),
        _ => {
            let cx = center_for_fraction(side, SETTING2_REACHABLE[idx], &reach);
            square_basket(cx, side)
        }
    };
    build(name, Difficulty::Hard, basket, seed)
}

/// Looks a scenario up by its canonical name, e.g. `setting1-medium`.
pub fn scenario_by_name(name: &str, seed: u64) -> Result<ScenarioSpec, ScenarioError> {
    match name {
        "setting1-easy" => make_setting1(Difficulty::Easy, seed),
        "setting1-medium" => make_setting1(Difficulty::Medium, seed),
        "setting1-hard" => make_setting1(Difficulty::Hard, seed),
        "setting2-small" => make_setting2(BasketSize::Small, seed),
        "setting2-medium" => make_setting2(BasketSize::Medium, seed),
        "setting2-large" => make_setting2(BasketSize::Large, seed),
        other => Err(ScenarioError::Invalid(format!("unknown scenario '{other}'"))),
    }
}

pub const SCENARIO_NAMES: [&str; 6] = [
    "setting1-easy",
    "setting1-medium",
    "setting1-hard",
    "setting2-small",
    "setting2-medium",
    "setting2-large",
];

fn build(name: &str, difficulty: Difficulty, basket: Basket, seed: u64) -> Result<ScenarioSpec, ScenarioError> {
    let reach = Reach::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep_out_basket = grow(&basket.outer(), BASKET_CLEARANCE);
    let base = OrientedBox2 {
        center: Pose2::origin(),
        half_x: BASE_HALF_EXTENT,
        half_y: BASE_HALF_EXTENT,
    };
    let mut placed: Vec<ObjectSpec> = Vec::new();
    for (obj_name, sx, sy, sz) in object_set(difficulty) {
        let shape = BoxShape::new(sx, sy, sz).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        let mut found = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let pose = random_table_pose(&mut rng, &TABLE);
            let d = pose.position().norm();
            if d < MIN_START_RADIUS.max(reach.r_min) || d > reach.r_max - REACH_MARGIN {
                continue;
            }
            let fp = shape.footprint(pose);
            if !fp.corners().iter().all(|c| TABLE.contains_point(*c))
                || geometry::overlap(&fp, &keep_out_basket)
                || geometry::overlap(&fp, &base)
            {
                continue;
            }
            let grown = grow(&fp, OBJECT_CLEARANCE);
            if placed
                .iter()
                .any(|o| geometry::overlap(&grown, &o.shape.footprint(o.pose)))
            {
                continue;
            }
            found = Some(pose);
            break;
        }
        let pose = found.ok_or_else(|| ScenarioError::GenerationFailure {
            object: obj_name.to_string(),
            attempts: MAX_PLACEMENT_ATTEMPTS,
        })?;
        placed.push(ObjectSpec {
            name: obj_name.to_string(),
            shape,
            pose,
        });
    }
    let spec = ScenarioSpec {
        name: name.to_string(),
        goal: GoalSpec {
            target_objects: placed.iter().map(|o| o.name.clone()).collect(),
        },
        objects: placed,
        basket,
        reach,
        seed,
    };
    spec.validate()?;
    Ok(spec)
}

/// Pose on the centimetre grid with a heading on the 0.01 rad grid, so the
/// two-decimal state rendering is exact.
fn random_table_pose(rng: &mut ChaCha8Rng, table: &Aabb2) -> Pose2 {
    let cm = |lo: f64, hi: f64, rng: &mut ChaCha8Rng| {
        let a = math::ceil(lo * 100.0) as i64;
        let b = math::floor(hi * 100.0) as i64;
        rng.random_range(a..=b) as f64 / 100.0
    };
    let x = cm(table.min.x, table.max.x, rng);
    let y = cm(table.min.y, table.max.y, rng);
    let theta = rng.random_range(-314_i64..=314) as f64 / 100.0;
    Pose2::new(x, y, theta)
}

fn grow(b: &OrientedBox2, by: f64) -> OrientedBox2 {
    OrientedBox2 {
        center: b.center,
        half_x: b.half_x + by,
        half_y: b.half_y + by,
    }
}

/// Area of `{(x, y) in [x0, x1] × [y0, y1] : x² + y² <= r²}`, in closed form.
pub fn disc_rect_area(r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    if r <= 0.0 || x1 <= x0 || y1 <= y0 {
        return 0.0;
    }
    let (lo, hi) = (x0.max(-r), x1.min(r));
    if hi <= lo {
        return 0.0;
    }
    // antiderivative of sqrt(r² - x²)
    let g = |x: f64| {
        let x = x.clamp(-r, r);
        0.5 * (x * math::sqrt((r * r - x * x).max(0.0)) + r * r * math::asin(x / r))
    };
    let half = |x: f64| math::sqrt((r * r - x * x).max(0.0));
    let mut cuts = alloc::vec![lo, hi];
    for y in [y0, y1] {
        if y.abs() < r {
            let c = math::sqrt(r * r - y * y);
            cuts.extend([-c, c]);
        }
    }
    cuts.retain(|c| *c >= lo && *c <= hi);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a <= 0.0 {
            continue;
        }
        let m = 0.5 * (a + b);
        let s = half(m);
        let top_is_circle = s < y1;
        let bottom_is_circle = -s > y0;
        let top = if top_is_circle { s } else { y1 };
        let bottom = if bottom_is_circle { -s } else { y0 };
        if top <= bottom {
            continue;
        }
        let circle = g(b) - g(a);
        let width = b - a;
        area += match (top_is_circle, bottom_is_circle) {
            (true, true) => 2.0 * circle,
            (true, false) => circle - y0 * width,
            (false, true) => y1 * width + circle,
            (false, false) => (y1 - y0) * width,
        };
    }
    area
}

/// Fraction of an axis-aligned region lying inside the reach annulus around the origin.
pub fn reachable_fraction(region: &OrientedBox2, reach: &Reach) -> f64 {
    let bb = region.aabb();
    let (x0, x1, y0, y1) = (bb.min.x, bb.max.x, bb.min.y, bb.max.y);
    let inside = disc_rect_area(reach.r_max, x0, x1, y0, y1) - disc_rect_area(reach.r_min, x0, x1, y0, y1);
    inside / ((x1 - x0) * (y1 - y0))
}

/// Basket centre on the +x axis giving the requested reachable fraction.
fn center_for_fraction(side: f64, target: f64, reach: &Reach) -> f64 {
    let frac = |cx: f64| {
        reachable_fraction(
            &OrientedBox2 {
                center: Pose2::new(cx, 0.0, 0.0),
                half_x: side / 2.0,
                half_y: side / 2.0,
            },
            reach,
        )
    };
    // fraction falls monotonically once the near edge clears r_min
    let (mut lo, mut hi) = (reach.r_min + side / 2.0, reach.r_max + side / 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if frac(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // snap to the centimetre grid used by prompts and the packer
    let cx = 0.5 * (lo + hi);
    let snapped = math::round(cx * 100.0) / 100.0;
    if (frac(snapped) - target).abs() <= 0.01 {
        snapped
    } else {
        cx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    #[test]
    fn disc_rect_area_special_cases() {
        // whole disc
        assert!((disc_rect_area(1.0, -2.0, 2.0, -2.0, 2.0) - PI).abs() < 1e-12);
        // quarter disc
        assert!((disc_rect_area(1.0, 0.0, 2.0, 0.0, 2.0) - PI / 4.0).abs() < 1e-12);
        // rectangle fully inside
        assert!((disc_rect_area(1.0, 0.1, 0.3, -0.2, 0.2) - 0.08).abs() < 1e-12);
        // half disc
        assert!((disc_rect_area(2.0, -3.0, 3.0, -3.0, 0.0) - 2.0 * PI).abs() < 1e-12);
        assert_eq!(disc_rect_area(1.0, 2.0, 3.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn setting1_occupancy_targets() {
        let easy = make_setting1(Difficulty::Easy, 0).unwrap().occupancy_ratio();
        let medium = make_setting1(Difficulty::Medium, 0).unwrap().occupancy_ratio();
        let hard = make_setting1(Difficulty::Hard, 0).unwrap().occupancy_ratio();
        assert!((easy - 0.30).abs() <= 0.02, "{easy}");
        assert!((medium - 0.55).abs() <= 0.02, "{medium}");
        assert!((hard - 0.75).abs() <= 0.02, "{hard}");
        assert!(easy < medium && medium < hard);
    }

    #[test]
    fn medium_has_four_blocks() {
        assert_eq!(make_setting1(Difficulty::Medium, 3).unwrap().objects.len(), 4);
        assert_eq!(make_setting1(Difficulty::Hard, 3).unwrap().objects.len(), 6);
    }

    #[test]
    fn setting2_fractions() {
        let f: Vec<f64> = [BasketSize::Small, BasketSize::Medium, BasketSize::Large]
            .iter()
            .map(|s| make_setting2(*s, 1).unwrap().reachable_fraction())
            .collect();
        assert!((f[0] - 1.0).abs() < 1e-12);
        assert!((f[1] - 0.70).abs() <= 0.01, "{f:?}");
        assert!((f[2] - 0.50).abs() <= 0.01, "{f:?}");
    }

    #[test]
    fn small_basket_matches_setting1_hard_geometry() {
        let a = make_setting2(BasketSize::Small, 4).unwrap();
        let b = make_setting1(Difficulty::Hard, 4).unwrap();
        assert_eq!(a.basket, b.basket);
        assert_eq!(a.objects, b.objects);
    }

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(
            make_setting1(Difficulty::Hard, 11).unwrap(),
            make_setting1(Difficulty::Hard, 11).unwrap()
        );
        assert_ne!(
            make_setting1(Difficulty::Hard, 11).unwrap().objects,
            make_setting1(Difficulty::Hard, 12).unwrap().objects
        );
    }

    #[test]
    fn generated_specs_validate_for_many_seeds() {
        for seed in 0..50 {
            for name in SCENARIO_NAMES {
                let spec = scenario_by_name(name, seed).unwrap();
                spec.validate().unwrap();
                spec.initial_state().unwrap().validate().unwrap();
            }
        }
    }
}
