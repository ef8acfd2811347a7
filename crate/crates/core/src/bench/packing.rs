//! Greedy bottom-left packing on the centimetre grid. Backs the heuristic
//! oracle backend and the heuristic parameter sampler.

use alloc::string::String;
use alloc::vec::Vec;

use crate::actions::{X_RANGE, Y_RANGE};
use crate::geometry::{self, OrientedBox2, Point2, Pose2};
use crate::math;
use crate::world::WorldState;

/// Gap kept between packed footprints and from the basket walls.
pub const PACK_MARGIN: f64 = 0.001;

/// Headings tried for every object, already on the two-decimal grid.
const HEADINGS: [f64; 2] = [0.0, 1.57];

fn snap(v: f64) -> f64 {
    math::round(v * 100.0) / 100.0
}

struct Packer<'a> {
    s: &'a WorldState,
    inner: OrientedBox2,
    headings: Vec<f64>,
    flip_v: bool,
    nu: i64,
    nv: i64,
    obstacles: Vec<OrientedBox2>,
    placed: Vec<OrientedBox2>,
    out: Vec<(String, Pose2)>,
    budget: usize,
}

impl Packer<'_> {
    /// First feasible grid position for `name` at heading `h`, scanning the
    /// basket frame along u, then v.
    fn first_fit(&self, name: &str, h: f64) -> Option<(Pose2, OrientedBox2)> {
        let obj = self.s.objects.get(name)?;
        let basket = &self.s.basket.interior;
        let theta = snap(math::normalize_angle(basket.center.theta + h));
        for iu in -self.nu..=self.nu {
            for jv in -self.nv..=self.nv {
                let jv = if self.flip_v { -jv } else { jv };
                let local = Point2::new(iu as f64 / 100.0, jv as f64 / 100.0);
                let w = basket.center.transform_point(local);
                let (x, y) = (snap(w.x), snap(w.y));
                if !X_RANGE.contains(x) || !Y_RANGE.contains(y) {
                    continue;
                }
                if !self.s.reach.contains(self.s.robot_base.position(), Point2::new(x, y)) {
                    continue;
                }
                let pose = Pose2::new(x, y, theta);
                let fp = obj.shape.footprint(pose);
                if !geometry::contains(&self.inner, &fp) {
                    continue;
                }
                let grown = OrientedBox2 {
                    half_x: fp.half_x + PACK_MARGIN,
                    half_y: fp.half_y + PACK_MARGIN,
                    ..fp
                };
                if self
                    .placed
                    .iter()
                    .chain(self.obstacles.iter())
                    .any(|p| geometry::overlap(&grown, p))
                {
                    continue;
                }
                return Some((pose, fp));
            }
        }
        None
    }

    /// Depth-first over headings, one bottom-left candidate per heading.
    fn search(&mut self, order: &[&String]) -> bool {
        let Some((name, rest)) = order.split_first() else {
            return true;
        };
        for h in self.headings.clone() {
            if self.budget == 0 {
                return false;
            }
            self.budget -= 1;
            let Some((pose, fp)) = self.first_fit(name, h) else {
                continue;
            };
            self.placed.push(fp);
            self.out.push(((*name).clone(), pose));
            if self.search(rest) {
                return true;
            }
            self.placed.pop();
            self.out.pop();
        }
        false
    }
}

/// Caps the number of candidate evaluations per ordering.
const SEARCH_BUDGET: usize = 4096;

/// Finds a basket placement for every target.
///
/// Objects go in one of several size orders, each taking the first
/// bottom-left grid position for a heading, with backtracking over headings.
/// `variant` rotates the order list, the heading preference and the sweep
/// direction, so a retry explores a different packing. Returned poses are
/// exactly representable with two decimals.
pub fn greedy_pack(s: &WorldState, targets: &[String], variant: u64) -> Option<Vec<(String, Pose2)>> {
    let dims = |n: &str| {
        s.objects
            .get(n)
            .map(|o| {
                let (a, b) = (o.shape.size_x, o.shape.size_y);
                (a * b, a.max(b), a.min(b))
            })
            .unwrap_or((0.0, 0.0, 0.0))
    };
    let by = |key: fn((f64, f64, f64)) -> f64| {
        let mut order: Vec<&String> = targets.iter().collect();
        order.sort_by(|a, b| {
            key(dims(b))
                .partial_cmp(&key(dims(a)))
                .unwrap_or(core::cmp::Ordering::Equal)
                .then_with(|| a.cmp(b))
        });
        order
    };
    let mut orders = [by(|d| d.0), by(|d| d.1), by(|d| d.2)];
    orders.rotate_left((variant % 3) as usize);

    let basket = &s.basket.interior;
    let mut packer = Packer {
        s,
        inner: OrientedBox2 {
            center: basket.center,
            half_x: basket.half_x - PACK_MARGIN,
            half_y: basket.half_y - PACK_MARGIN,
        },
        headings: if (variant / 3).is_multiple_of(2) {
            HEADINGS.to_vec()
        } else {
            HEADINGS.iter().rev().copied().collect()
        },
        flip_v: (variant / 6) % 2 == 1,
        nu: math::floor(basket.half_x * 100.0) as i64,
        nv: math::floor(basket.half_y * 100.0) as i64,
        obstacles: s
            .resting_objects()
            .filter(|o| !targets.contains(&o.name))
            .map(|o| o.footprint())
            .collect(),
        placed: Vec::new(),
        out: Vec::new(),
        budget: 0,
    };
    for order in &orders {
        packer.budget = SEARCH_BUDGET;
        if packer.search(order) {
            return Some(packer.out);
        }
        packer.placed.clear();
        packer.out.clear();
    }
    None
}
