use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::bitangent::{is_boundary_1_searchable, restricted_reflex_vertices};
use super::polygon::{BoundaryPoint, Polygon};
use super::vgrid::VisibilityGrid;
use super::GeometryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Actor {
    Searcher,
    Flashlight,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InstructionKind {
    /// Searcher: counterclockwise. Flashlight: clockwise. `from == to` is a
    /// full loop.
    MoveAlongBoundary,
    /// Flashlight only, backwards; the skipped chain is recontaminated.
    Jump,
    Stay,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchInstruction {
    pub actor: Actor,
    pub kind: InstructionKind,
    pub from: BoundaryPoint,
    pub to: BoundaryPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchSchedule {
    pub start: BoundaryPoint,
    pub instructions: Vec<SearchInstruction>,
    pub searcher_distance: f64,
    pub m: usize,
}

/// Grid resolution tried first by [`bsa_search`].
pub const BASE_RESOLUTION: usize = 64;
const MAX_RESOLUTION: usize = 1024;

/// Builds a search schedule for a boundary 1-searchable polygon.
///
/// The searcher starts together with the flashlight at an unrestricted reflex
/// vertex. Both then walk a shortest (fewest instructions, then least searcher
/// travel) monotone path through the sampled visibility diagram until the
/// cleared chain covers the boundary.
pub fn bsa_search(polygon: &Polygon) -> Result<SearchSchedule, GeometryError> {
    if polygon.is_convex() {
        let q = BoundaryPoint::at_vertex(polygon, 0);
        let sweep = SearchInstruction { actor: Actor::Flashlight, kind: InstructionKind::MoveAlongBoundary, from: q, to: q };
        return Ok(SearchSchedule { start: q, instructions: vec![sweep], searcher_distance: 0.0, m: 1 });
    }
    if !is_boundary_1_searchable(polygon) {
        return Err(GeometryError::NotSearchable);
    }
    let restricted = restricted_reflex_vertices(polygon);
    let starts: Vec<usize> = polygon.reflex_vertices().into_iter().filter(|v| !restricted.contains(v)).collect();
    if starts.is_empty() {
        return Err(GeometryError::NoUnrestrictedStart);
    }
    let mut resolution = BASE_RESOLUTION;
    let mut found_path = false;
    while resolution <= MAX_RESOLUTION {
        let grid = VisibilityGrid::new(polygon, resolution);
        for &v in &starts {
            let Some(path) = grid_path(&grid, v * (resolution + 1)) else { continue };
            found_path = true;
            let schedule = path_to_schedule(polygon, &grid, &path);
            if schedule_verify(polygon, &schedule)? {
                return Ok(schedule);
            }
        }
        resolution *= 2;
    }
    if found_path {
        Err(GeometryError::MalformedSchedule("no schedule survived replay".into()))
    } else {
        Err(GeometryError::NoUnrestrictedStart)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    FlashForward,
    FlashBack,
    Searcher,
}

const STEPS: [Step; 3] = [Step::FlashForward, Step::FlashBack, Step::Searcher];

/// Cells `(a, k)`: flashlight at sample `a`, searcher `k` samples behind it.
fn grid_path(grid: &VisibilityGrid, start: usize) -> Option<Vec<(usize, usize)>> {
    let n = grid.sample_count();
    let state = |a: usize, k: usize, s: usize| (a * (n + 1) + k) * 3 + s;
    let total = n * (n + 1) * 3;
    let mut dist = vec![u64::MAX; total];
    let mut prev = vec![usize::MAX; total];
    let mut heap = BinaryHeap::new();
    // Leaving the start with any step costs one instruction.
    for s in 0..3 {
        let id = state(start, 0, s);
        dist[id] = 0;
        heap.push(Reverse((0u64, id)));
    }
    let mut origin = vec![false; total];
    for s in 0..3 {
        origin[state(start, 0, s)] = true;
    }
    while let Some(Reverse((d, id))) = heap.pop() {
        if d > dist[id] {
            continue;
        }
        let last = id % 3;
        let cell = id / 3;
        let (a, k) = (cell / (n + 1), cell % (n + 1));
        if k == n {
            let mut cells = vec![(a, k)];
            let mut cur = id;
            while !origin[cur] {
                cur = prev[cur];
                let c = cur / 3;
                cells.push((c / (n + 1), c % (n + 1)));
            }
            cells.dedup();
            cells.reverse();
            return Some(cells);
        }
        for (si, step) in STEPS.iter().enumerate() {
            let (na, nk) = match step {
                Step::FlashForward => ((a + 1) % n, k + 1),
                Step::FlashBack if k > 0 => ((a + n - 1) % n, k - 1),
                Step::FlashBack => continue,
                Step::Searcher => (a, k + 1),
            };
            if !grid.visible(na, (na + n - nk % n) % n) {
                continue;
            }
            let switch = origin[id] || si != last;
            let cost = d + if switch { 1 << 32 } else { 0 } + u64::from(*step == Step::Searcher);
            let nid = state(na, nk, si);
            if cost < dist[nid] {
                dist[nid] = cost;
                prev[nid] = id;
                heap.push(Reverse((cost, nid)));
            }
        }
    }
    None
}

fn path_to_schedule(polygon: &Polygon, grid: &VisibilityGrid, cells: &[(usize, usize)]) -> SearchSchedule {
    let n = grid.sample_count();
    let samples = grid.samples();
    let at = |i: usize| BoundaryPoint::new(polygon, samples[i % n]);
    let searcher = |(a, k): (usize, usize)| (a + n - k % n) % n;
    let classify = |p: (usize, usize), q: (usize, usize)| {
        if q.1 == p.1 + 1 && q.0 == p.0 {
            Step::Searcher
        } else if q.1 == p.1 + 1 {
            Step::FlashForward
        } else {
            Step::FlashBack
        }
    };
    let mut instructions = Vec::new();
    let mut searcher_steps = 0usize;
    let mut i = 0;
    while i + 1 < cells.len() {
        let step = classify(cells[i], cells[i + 1]);
        let mut j = i + 1;
        while j + 1 < cells.len() && classify(cells[j], cells[j + 1]) == step {
            j += 1;
        }
        let (p, q) = (cells[i], cells[j]);
        let ins = match step {
            Step::Searcher => {
                searcher_steps += q.1 - p.1;
                SearchInstruction {
                    actor: Actor::Searcher,
                    kind: InstructionKind::MoveAlongBoundary,
                    from: at(searcher(p)),
                    to: at(searcher(q)),
                }
            }
            Step::FlashForward => SearchInstruction {
                actor: Actor::Flashlight,
                kind: InstructionKind::MoveAlongBoundary,
                from: at(p.0),
                to: at(q.0),
            },
            Step::FlashBack => {
                SearchInstruction { actor: Actor::Flashlight, kind: InstructionKind::Jump, from: at(p.0), to: at(q.0) }
            }
        };
        instructions.push(ins);
        i = j;
    }
    let searcher_distance = sampled_travel(polygon, samples, cells, searcher_steps);
    let m = instructions.len();
    SearchSchedule { start: at(cells[0].0), instructions, searcher_distance, m }
}

fn sampled_travel(polygon: &Polygon, samples: &[f64], cells: &[(usize, usize)], steps: usize) -> f64 {
    if steps == 0 {
        return 0.0;
    }
    let n = samples.len();
    let d = polygon.perimeter();
    let mut total = 0.0;
    for w in cells.windows(2) {
        let (p, q) = (w[0], w[1]);
        if q.0 == p.0 && q.1 == p.1 + 1 {
            let from = samples[(p.0 + n - p.1 % n) % n];
            let to = samples[(q.0 + n - q.1 % n) % n];
            let step = (from - to).rem_euclid(d);
            total += if step == 0.0 { d } else { step };
        }
    }
    total
}

/// Outcome of replaying a schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    /// Index of the first failing instruction and why it failed.
    pub failure: Option<(usize, String)>,
    pub searcher_distance: f64,
    pub flashlight_distance: f64,
    pub recontaminations: usize,
    /// Clockwise length of the cleared chain from the searcher to the flashlight.
    pub cleared: f64,
}

impl Replay {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

/// Replays `schedule`, tracking the cleared chain as the clockwise interval
/// from the searcher to the flashlight.
pub fn replay(polygon: &Polygon, schedule: &SearchSchedule) -> Replay {
    let d = polygon.perimeter();
    let tol = 1e3 * polygon.eps();
    let step = polygon.perimeter() / (polygon.len() as f64 * 1024.0);
    let mut s = schedule.start.arclength;
    let mut f = schedule.start.arclength;
    let mut cleared = 0.0;
    let mut out = Replay { failure: None, searcher_distance: 0.0, flashlight_distance: 0.0, recontaminations: 0, cleared };
    let same = |a: f64, b: f64| {
        let g = polygon.cw_distance(a, b);
        g <= tol || d - g <= tol
    };
    for (idx, ins) in schedule.instructions.iter().enumerate() {
        let fail = |msg: &str| Some((idx, msg.to_string()));
        let pos = if ins.actor == Actor::Searcher { s } else { f };
        if !same(pos, ins.from.arclength) {
            out.failure = fail("instruction does not start where its actor stands");
            break;
        }
        let (from, to) = (ins.from.arclength, ins.to.arclength);
        match (ins.actor, ins.kind) {
            (_, InstructionKind::Stay) => {
                if !same(from, to) {
                    out.failure = fail("stay with distinct endpoints");
                    break;
                }
            }
            (Actor::Searcher, InstructionKind::Jump) => {
                out.failure = fail("searcher cannot jump");
                break;
            }
            (Actor::Flashlight, InstructionKind::Jump) => {
                let len = polygon.cw_distance(to, from);
                if len > cleared + tol {
                    out.failure = fail("jump past the searcher");
                    break;
                }
                if !polygon.boundary_visible(s, to) {
                    out.failure = fail("jump target not visible");
                    break;
                }
                cleared = (cleared - len).max(0.0);
                out.recontaminations += 1;
                f = to;
            }
            (actor, InstructionKind::MoveAlongBoundary) => {
                let mut len = match actor {
                    Actor::Searcher => polygon.cw_distance(to, from),
                    Actor::Flashlight => polygon.cw_distance(from, to),
                };
                if same(from, to) {
                    len = d;
                }
                if cleared + len > d + tol {
                    out.failure = fail("move overruns the boundary");
                    break;
                }
                let pieces = (len / step).ceil().max(1.0) as usize;
                let sign = if actor == Actor::Searcher { -1.0 } else { 1.0 };
                let blocked = (1..=pieces).any(|j| {
                    let p = from + sign * len * j as f64 / pieces as f64;
                    let (ss, ff) = if actor == Actor::Searcher { (p, f) } else { (s, p) };
                    !polygon.boundary_visible(ss, ff)
                });
                if blocked {
                    out.failure = fail("searcher loses sight of the flashlight");
                    break;
                }
                cleared += len;
                match actor {
                    Actor::Searcher => {
                        s = to;
                        out.searcher_distance += len;
                    }
                    Actor::Flashlight => {
                        f = to;
                        out.flashlight_distance += len;
                    }
                }
            }
        }
    }
    out.cleared = cleared;
    if out.failure.is_none() && cleared < d - tol {
        out.failure = Some((schedule.instructions.len(), "boundary not fully cleared".into()));
    }
    out
}

/// Replays the schedule and checks the distance and instruction-count bounds.
pub fn schedule_verify(polygon: &Polygon, schedule: &SearchSchedule) -> Result<bool, GeometryError> {
    if schedule.m != schedule.instructions.len() {
        return Err(GeometryError::MalformedSchedule(format!(
            "m = {} but {} instructions",
            schedule.m,
            schedule.instructions.len()
        )));
    }
    if schedule.instructions.iter().any(|i| !i.from.arclength.is_finite() || !i.to.arclength.is_finite()) {
        return Err(GeometryError::MalformedSchedule("non-finite position".into()));
    }
    let r = replay(polygon, schedule);
    let d = polygon.perimeter();
    let n = polygon.len();
    let tol = 1e3 * polygon.eps();
    Ok(r.ok()
        && (r.searcher_distance - schedule.searcher_distance).abs() <= tol * (1 + schedule.m) as f64
        && schedule.searcher_distance < 2.0 * d
        && schedule.m < n * n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point2D;

    fn poly(v: &[(f64, f64)]) -> Polygon {
        let p: Vec<Point2D> = v.iter().map(|&q| q.into()).collect();
        Polygon::new(&p).unwrap()
    }

    #[test]
    fn square_sweeps_once() {
        let sq = poly(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]);
        let s = bsa_search(&sq).unwrap();
        assert_eq!(s.searcher_distance, 0.0);
        assert_eq!(s.m, 1);
        let r = replay(&sq, &s);
        assert!(r.ok());
        assert_eq!(r.flashlight_distance, 4.0);
        assert!(schedule_verify(&sq, &s).unwrap());
    }

    #[test]
    fn deleting_an_instruction_breaks_replay() {
        let sq = poly(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]);
        let mut s = bsa_search(&sq).unwrap();
        s.instructions.clear();
        s.m = 0;
        assert!(!schedule_verify(&sq, &s).unwrap());
    }

    #[test]
    fn l_shape_schedule_replays() {
        let l = poly(&[(0.0, 0.0), (0.0, 2.0), (1.0, 2.0), (1.0, 1.0), (2.0, 1.0), (2.0, 0.0)]);
        let s = bsa_search(&l).unwrap();
        assert!(schedule_verify(&l, &s).unwrap());
        assert!(s.instructions.iter().all(|i| i.actor == Actor::Flashlight || i.kind != InstructionKind::Jump));
    }
}
