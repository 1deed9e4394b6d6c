use rand::Rng;

use crate::geometry::Point2D;
use crate::obstacles::{los_clear, ObstacleMap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Walker {
    pub position: Point2D,
    pub waypoint: Point2D,
    pub speed: f64,
}

/// Uniform point in the area outside every obstacle.
pub fn free_point<R: Rng + ?Sized>(map: &ObstacleMap, rng: &mut R) -> Point2D {
    let mut p = Point2D::new(rng.gen_range(0.0..map.width), rng.gen_range(0.0..map.height));
    for _ in 0..1000 {
        if !map.inside_obstacle(p) {
            break;
        }
        p = Point2D::new(rng.gen_range(0.0..map.width), rng.gen_range(0.0..map.height));
    }
    p
}

fn redraw<R: Rng + ?Sized>(w: &mut Walker, map: &ObstacleMap, speed: (f64, f64), rng: &mut R) {
    w.waypoint = free_point(map, rng);
    w.speed = if speed.1 > speed.0 { rng.gen_range(speed.0..=speed.1) } else { speed.0 };
}

impl Walker {
    pub fn new<R: Rng + ?Sized>(map: &ObstacleMap, speed: (f64, f64), rng: &mut R) -> Self {
        let position = free_point(map, rng);
        let mut w = Walker { position, waypoint: position, speed: speed.0 };
        redraw(&mut w, map, speed, rng);
        w
    }
}

/// Random waypoint with zero pause. A leg that would cut through an obstacle
/// is abandoned for a fresh waypoint and the walker holds still for that step.
pub fn mobility_step<R: Rng + ?Sized>(w: &mut Walker, dt: f64, map: &ObstacleMap, speed: (f64, f64), rng: &mut R) {
    if w.position == w.waypoint {
        redraw(w, map, speed, rng);
    }
    let gap = w.position.dist(w.waypoint);
    let step = (w.speed * dt).min(gap);
    let next = if step >= gap { w.waypoint } else { w.position.lerp(w.waypoint, step / gap) };
    let clear = !map.inside_obstacle(next) && los_clear(map, w.position, next).unwrap_or(false);
    if !clear {
        redraw(w, map, speed, rng);
        return;
    }
    w.position = next;
    if next == w.waypoint {
        redraw(w, map, speed, rng);
    }
}
