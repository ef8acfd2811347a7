//! Bidirectional RRT (RRT-Connect) in the planar workspace.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Aabb2, OrientedBox2, Point2, Pose2};
use crate::math;
use crate::motion::{MotionError, RrtParams};
use crate::world::Reach;

/// Number of random shortcut attempts applied to every raw path.
pub const SHORTCUT_ATTEMPTS: usize = 100;

/// Free space for the end effector: inside `bounds`, outside every obstacle,
/// and (optionally) inside a reach annulus around a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct Workspace {
    pub bounds: Aabb2,
    pub obstacles: Vec<OrientedBox2>,
    pub annulus: Option<(Point2, Reach)>,
}

impl Workspace {
    pub fn new(bounds: Aabb2, obstacles: Vec<OrientedBox2>) -> Self {
        Self {
            bounds,
            obstacles,
            annulus: None,
        }
    }

    pub fn with_annulus(mut self, base: Point2, reach: Reach) -> Self {
        self.annulus = Some((base, reach));
        self
    }

    pub fn is_free(&self, p: Point2) -> bool {
        if !self.bounds.contains_point(p) {
            return false;
        }
        if let Some((base, reach)) = &self.annulus {
            if !reach.contains(*base, p) {
                return false;
            }
        }
        !self.obstacles.iter().any(|o| strictly_inside(o, p))
    }

    /// Exact segment test. Bounds and the outer reach circle are convex, so
    /// the endpoints decide them; the inner circle and each obstacle are
    /// tested against the whole segment.
    pub fn edge_free(&self, a: Point2, b: Point2) -> bool {
        if !self.is_free(a) || !self.is_free(b) {
            return false;
        }
        if let Some((base, reach)) = &self.annulus {
            if point_segment_distance(*base, a, b) < reach.r_min {
                return false;
            }
        }
        !self.obstacles.iter().any(|o| segment_hits_interior(o, a, b))
    }

    /// Splits `a→b` into pieces of at most `step` and edge-checks each piece.
    pub fn segment_free(&self, a: Point2, b: Point2, step: f64) -> bool {
        let n = pieces(a.distance(&b), step);
        let mut prev = a;
        for i in 1..=n {
            let next = a.lerp(&b, i as f64 / n as f64);
            if !self.edge_free(prev, next) {
                return false;
            }
            prev = next;
        }
        true
    }

    /// Waypoint-by-waypoint re-validation with the same checker the search uses.
    pub fn path_free(&self, path: &[Pose2], step: f64) -> bool {
        match path {
            [] => false,
            [only] => self.is_free(only.position()),
            _ => path.windows(2).all(|w| {
                let (a, b) = (w[0].position(), w[1].position());
                a.distance(&b) <= step + 1e-9 && self.edge_free(a, b)
            }),
        }
    }
}

fn strictly_inside(b: &OrientedBox2, p: Point2) -> bool {
    let l = b.center.inverse_transform_point(p);
    l.x.abs() < b.half_x && l.y.abs() < b.half_y
}

fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.distance(&a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.distance(&a.lerp(&b, t))
}

/// Slab clipping in the box frame against the open box.
fn segment_hits_interior(o: &OrientedBox2, a: Point2, b: Point2) -> bool {
    let la = o.center.inverse_transform_point(a);
    let lb = o.center.inverse_transform_point(b);
    let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
    for (p, q, h) in [(la.x, lb.x, o.half_x), (la.y, lb.y, o.half_y)] {
        let d = q - p;
        if d == 0.0 {
            if p.abs() >= h {
                return false;
            }
            continue;
        }
        let (e0, e1) = ((-h - p) / d, (h - p) / d);
        t0 = t0.max(e0.min(e1));
        t1 = t1.min(e0.max(e1));
    }
    t0 < t1
}

fn pieces(len: f64, step: f64) -> usize {
    (math::ceil(len / step) as usize).max(1)
}

struct Tree {
    points: Vec<Point2>,
    parents: Vec<usize>,
    grid: NearestGrid,
}

impl Tree {
    fn new(root: Point2, grid: NearestGrid) -> Self {
        let mut t = Self {
            points: Vec::new(),
            parents: Vec::new(),
            grid,
        };
        t.push(root, 0);
        t
    }

    fn push(&mut self, p: Point2, parent: usize) -> usize {
        let idx = self.points.len();
        self.points.push(p);
        self.parents.push(parent);
        self.grid.insert(p, idx);
        idx
    }

    /// Root-to-node chain.
    fn chain(&self, mut idx: usize) -> Vec<Point2> {
        let mut out = vec![self.points[idx]];
        while idx != 0 {
            idx = self.parents[idx];
            out.push(self.points[idx]);
        }
        out.reverse();
        out
    }
}

/// Uniform bucket grid for nearest-neighbour queries.
struct NearestGrid {
    origin: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<(Point2, usize)>>,
}

const MAX_CELLS_PER_AXIS: usize = 256;

impl NearestGrid {
    fn new(bounds: &Aabb2, step: f64) -> Self {
        let extent = bounds.width().max(bounds.height()).max(step);
        let cell = step.max(extent / MAX_CELLS_PER_AXIS as f64);
        let nx = (math::ceil(bounds.width() / cell) as usize).max(1);
        let ny = (math::ceil(bounds.height() / cell) as usize).max(1);
        Self {
            origin: bounds.min,
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
        }
    }

    fn cell_of(&self, p: Point2) -> (isize, isize) {
        let i = math::floor((p.x - self.origin.x) / self.cell) as isize;
        let j = math::floor((p.y - self.origin.y) / self.cell) as isize;
        (
            i.clamp(0, self.nx as isize - 1),
            j.clamp(0, self.ny as isize - 1),
        )
    }

    fn insert(&mut self, p: Point2, idx: usize) {
        let (i, j) = self.cell_of(p);
        self.buckets[j as usize * self.nx + i as usize].push((p, idx));
    }

    fn nearest(&self, q: Point2) -> usize {
        let (ci, cj) = self.cell_of(q);
        let mut best = (f64::INFINITY, usize::MAX);
        let max_ring = self.nx.max(self.ny) as isize;
        for r in 0..=max_ring {
            for j in (cj - r)..=(cj + r) {
                if j < 0 || j >= self.ny as isize {
                    continue;
                }
                let on_edge_row = j == cj - r || j == cj + r;
                let mut i = ci - r;
                while i <= ci + r {
                    if i >= 0 && i < self.nx as isize {
                        for (p, idx) in &self.buckets[j as usize * self.nx + i as usize] {
                            let d = p.distance(&q);
                            if d < best.0 || (d == best.0 && *idx < best.1) {
                                best = (d, *idx);
                            }
                        }
                    }
                    i += if on_edge_row || r == 0 { 1 } else { 2 * r };
                }
            }
            if best.1 != usize::MAX && best.0 <= r as f64 * self.cell {
                break;
            }
        }
        best.1
    }
}

enum Extend {
    Trapped,
    Advanced(usize),
    Reached(usize),
}

fn extend(tree: &mut Tree, target: Point2, ws: &Workspace, step: f64) -> Extend {
    let near = tree.grid.nearest(target);
    let from = tree.points[near];
    let d = from.distance(&target);
    let (new, reached) = if d <= step {
        (target, true)
    } else {
        (from.lerp(&target, step / d), false)
    };
    if !ws.edge_free(from, new) {
        return Extend::Trapped;
    }
    let idx = tree.push(new, near);
    if reached {
        Extend::Reached(idx)
    } else {
        Extend::Advanced(idx)
    }
}

fn connect(tree: &mut Tree, target: Point2, ws: &Workspace, step: f64) -> Option<usize> {
    loop {
        match extend(tree, target, ws, step) {
            Extend::Advanced(_) => continue,
            Extend::Reached(i) => return Some(i),
            Extend::Trapped => return None,
        }
    }
}

/// Bidirectional RRT from `start` to `goal`.
///
/// Trees alternate roles every iteration; with probability `goal_bias` the
/// active tree is steered at the other tree's root instead of a uniform
/// sample over `ws.bounds`. The raw path is shortcut-smoothed, resampled so
/// consecutive waypoints are at most `step_size` apart, and headings are
/// interpolated linearly by arc length from `start.theta` to `goal.theta`.
pub fn birrt(start: Pose2, goal: Pose2, ws: &Workspace, params: &RrtParams) -> Result<Vec<Pose2>, MotionError> {
    params.validate()?;
    let (sp, gp) = (start.position(), goal.position());
    if !ws.is_free(sp) {
        return Err(MotionError::EndpointInCollision("start"));
    }
    if !ws.is_free(gp) {
        return Err(MotionError::EndpointInCollision("goal"));
    }
    let step = params.step_size;
    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut a = Tree::new(sp, NearestGrid::new(&ws.bounds, step));
    let mut b = Tree::new(gp, NearestGrid::new(&ws.bounds, step));
    let mut a_is_start = true;
    let b0 = ws.bounds;

    let mut raw = None;
    for _ in 0..params.max_iterations {
        let q = if rng.random::<f64>() < params.goal_bias {
            b.points[0]
        } else {
            Point2::new(
                b0.min.x + rng.random::<f64>() * b0.width(),
                b0.min.y + rng.random::<f64>() * b0.height(),
            )
        };
        let new = match extend(&mut a, q, ws, step) {
            Extend::Trapped => None,
            Extend::Advanced(i) | Extend::Reached(i) => Some(i),
        };
        if let Some(i) = new {
            if let Some(j) = connect(&mut b, a.points[i], ws, step) {
                let (from_start, from_goal) = if a_is_start {
                    (a.chain(i), b.chain(j))
                } else {
                    (b.chain(j), a.chain(i))
                };
                let mut path = from_start;
                path.extend(from_goal.into_iter().rev().skip(1));
                raw = Some(path);
                break;
            }
        }
        core::mem::swap(&mut a, &mut b);
        a_is_start = !a_is_start;
    }
    let raw = raw.ok_or(MotionError::NoPath)?;
    let smooth = shortcut(raw, ws, step, &mut rng);
    let dense = densify(&smooth, step);
    Ok(assign_headings(&dense, start.theta, goal.theta))
}

fn shortcut(mut path: Vec<Point2>, ws: &Workspace, step: f64, rng: &mut ChaCha8Rng) -> Vec<Point2> {
    for _ in 0..SHORTCUT_ATTEMPTS {
        if path.len() < 3 {
            break;
        }
        let i = rng.random_range(0..path.len() - 2);
        let j = rng.random_range(i + 2..path.len());
        if ws.segment_free(path[i], path[j], step) {
            path.drain(i + 1..j);
        }
    }
    // greedy pass: from each kept point jump to the farthest visible one
    let mut out = vec![path[0]];
    let mut i = 0;
    while i < path.len() - 1 {
        let mut j = path.len() - 1;
        while j > i + 1 && !ws.segment_free(path[i], path[j], step) {
            j -= 1;
        }
        out.push(path[j]);
        i = j;
    }
    out
}

fn densify(path: &[Point2], step: f64) -> Vec<Point2> {
    let mut out = vec![path[0]];
    for w in path.windows(2) {
        let n = pieces(w[0].distance(&w[1]), step);
        for k in 1..=n {
            out.push(w[0].lerp(&w[1], k as f64 / n as f64));
        }
    }
    out
}

fn assign_headings(path: &[Point2], from: f64, to: f64) -> Vec<Pose2> {
    let total: f64 = path.windows(2).map(|w| w[0].distance(&w[1])).sum();
    let delta = math::angle_delta(from, to);
    let mut acc = 0.0;
    let last = path.len() - 1;
    path.iter()
        .enumerate()
        .map(|(k, p)| {
            if k > 0 {
                acc += path[k - 1].distance(p);
            }
            let theta = if k == last {
                to
            } else if total > 0.0 {
                from + delta * acc / total
            } else {
                from
            };
            Pose2::new(p.x, p.y, theta)
        })
        .collect()
}
