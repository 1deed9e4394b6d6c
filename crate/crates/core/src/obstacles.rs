//! Obstacle map, line of sight and per-node neighborhood polygons.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{
    bsa_search, is_boundary_1_searchable, parse_polygons, segment_contact, Containment, GeometryError, Point2D, Polygon,
    SearchSchedule, SegmentContact,
};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VisibilityError {
    #[error("point {0} is outside the deployment area")]
    OutOfArea(Point2D),
    #[error("obstacle {0} leaves the deployment area")]
    ObstacleOutsideArea(usize),
    #[error("obstacles {0} and {1} overlap")]
    ObstaclesOverlap(usize, usize),
    #[error("only {0} neighbors in range, need 3")]
    TooFewNeighbors(usize),
    #[error("neighbors do not form a simple ring around the center")]
    DegenerateRing,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Solid, pairwise disjoint polygonal obstacles inside a `width` x `height`
/// rectangle anchored at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleMap {
    pub width: f64,
    pub height: f64,
    obstacles: Vec<Polygon>,
    boxes: Vec<[f64; 4]>,
}

fn bbox(p: &Polygon) -> [f64; 4] {
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for v in p.vertices() {
        b[0] = b[0].min(v.x);
        b[1] = b[1].min(v.y);
        b[2] = b[2].max(v.x);
        b[3] = b[3].max(v.y);
    }
    b
}

fn boxes_overlap(a: &[f64; 4], b: &[f64; 4]) -> bool {
    a[0] <= b[2] && b[0] <= a[2] && a[1] <= b[3] && b[1] <= a[3]
}

fn polygons_overlap(a: &Polygon, b: &Polygon) -> bool {
    let eps = a.eps().max(b.eps());
    for i in 0..a.len() {
        for j in 0..b.len() {
            if segment_contact(a.vertex(i), a.vertex(i + 1), b.vertex(j), b.vertex(j + 1), eps) != SegmentContact::None {
                return true;
            }
        }
    }
    b.contains(a.vertex(0)) != Containment::Outside || a.contains(b.vertex(0)) != Containment::Outside
}

impl ObstacleMap {
    pub fn new(width: f64, height: f64, obstacles: Vec<Polygon>) -> Result<Self, VisibilityError> {
        for (i, o) in obstacles.iter().enumerate() {
            let inside = o.vertices().iter().all(|v| v.x >= 0.0 && v.y >= 0.0 && v.x <= width && v.y <= height);
            if !inside {
                return Err(VisibilityError::ObstacleOutsideArea(i));
            }
        }
        let boxes: Vec<[f64; 4]> = obstacles.iter().map(bbox).collect();
        for i in 0..obstacles.len() {
            for j in (i + 1)..obstacles.len() {
                if boxes_overlap(&boxes[i], &boxes[j]) && polygons_overlap(&obstacles[i], &obstacles[j]) {
                    return Err(VisibilityError::ObstaclesOverlap(i, j));
                }
            }
        }
        Ok(Self { width, height, obstacles, boxes })
    }

    pub fn empty(width: f64, height: f64) -> Self {
        Self { width, height, obstacles: Vec::new(), boxes: Vec::new() }
    }

    pub fn obstacles(&self) -> &[Polygon] {
        &self.obstacles
    }

    pub fn len(&self) -> usize {
        self.obstacles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obstacles.is_empty()
    }

    /// The first `k` obstacles only.
    pub fn truncated(&self, k: usize) -> Self {
        let k = k.min(self.len());
        Self {
            width: self.width,
            height: self.height,
            obstacles: self.obstacles[..k].to_vec(),
            boxes: self.boxes[..k].to_vec(),
        }
    }

    pub fn in_area(&self, p: Point2D) -> bool {
        p.x >= 0.0 && p.y >= 0.0 && p.x <= self.width && p.y <= self.height
    }

    /// Whether `p` is strictly inside some obstacle.
    pub fn inside_obstacle(&self, p: Point2D) -> bool {
        self.obstacles
            .iter()
            .zip(&self.boxes)
            .any(|(o, b)| p.x >= b[0] && p.x <= b[2] && p.y >= b[1] && p.y <= b[3] && o.contains(p) == Containment::Inside)
    }

    /// Non-overlapping axis-aligned rectangular blocks with sides in
    /// `[min_side, max_side]`, kept `gap` apart from each other and the border.
    pub fn random_blocks<R: Rng + ?Sized>(
        rng: &mut R,
        width: f64,
        height: f64,
        count: usize,
        min_side: f64,
        max_side: f64,
        gap: f64,
    ) -> Self {
        let mut obstacles = Vec::with_capacity(count);
        let mut boxes: Vec<[f64; 4]> = Vec::with_capacity(count);
        let mut attempts = 0;
        while obstacles.len() < count && attempts < 10_000 {
            attempts += 1;
            let w = rng.gen_range(min_side..=max_side);
            let h = rng.gen_range(min_side..=max_side);
            let x = rng.gen_range(gap..(width - w - gap).max(gap + 1e-9));
            let y = rng.gen_range(gap..(height - h - gap).max(gap + 1e-9));
            let b = [x, y, x + w, y + h];
            let grown = [x - gap, y - gap, x + w + gap, y + h + gap];
            if boxes.iter().any(|o| boxes_overlap(o, &grown)) {
                continue;
            }
            let pts = [(x, y), (x, y + h), (x + w, y + h), (x + w, y)].map(Point2D::from);
            obstacles.push(Polygon::new(&pts).expect("rectangle"));
            boxes.push(b);
        }
        Self { width, height, obstacles, boxes }
    }

    /// Parses an `AREA w h` header followed by polygon blocks.
    pub fn parse(text: &str) -> Result<Self, VisibilityError> {
        let mut lines = text.lines().enumerate().skip_while(|(_, l)| l.trim().is_empty() || l.trim().starts_with('#'));
        let (i, header) = lines.next().ok_or(VisibilityError::Parse { line: 1, msg: "missing AREA header".into() })?;
        let bad = |msg: &str| VisibilityError::Parse { line: i + 1, msg: msg.into() };
        let toks: Vec<&str> = header.split_whitespace().collect();
        if toks.len() != 3 || toks[0] != "AREA" {
            return Err(bad("expected `AREA w h`"));
        }
        let w: f64 = toks[1].parse().map_err(|_| bad("bad width"))?;
        let h: f64 = toks[2].parse().map_err(|_| bad("bad height"))?;
        if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
            return Err(bad("area must be positive"));
        }
        let body: String = text.lines().skip(i + 1).map(|l| format!("{l}\n")).collect();
        let polys = parse_polygons(&body).map_err(|e| match e {
            GeometryError::Parse { line, msg } => VisibilityError::Parse { line: line + i + 1, msg },
            other => VisibilityError::Geometry(other),
        })?;
        Self::new(w, h, polys)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("AREA {} {}\n", self.width, self.height);
        for o in &self.obstacles {
            s.push('\n');
            for v in o.vertices() {
                let _ = writeln!(s, "{} {}", v.x, v.y);
            }
        }
        s
    }

    fn blocks(&self, k: usize, a: Point2D, b: Point2D) -> bool {
        let bx = &self.boxes[k];
        let seg = [a.x.min(b.x), a.y.min(b.y), a.x.max(b.x), a.y.max(b.y)];
        if !boxes_overlap(bx, &seg) {
            return false;
        }
        let o = &self.obstacles[k];
        let eps = o.eps();
        let mut ts = vec![0.0, 1.0];
        for i in 0..o.len() {
            match segment_contact(a, b, o.vertex(i), o.vertex(i + 1), eps) {
                SegmentContact::None => {}
                SegmentContact::Proper { .. } => return true,
                SegmentContact::Touch { t, .. } => ts.push(t),
                SegmentContact::Overlap { t0, t1 } => ts.extend([t0, t1]),
            }
        }
        ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let len = a.dist(b);
        ts.windows(2).any(|w| (w[1] - w[0]) * len > eps && o.contains(a.lerp(b, 0.5 * (w[0] + w[1]))) == Containment::Inside)
    }

    fn blocking(&self, a: Point2D, b: Point2D) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&k| self.blocks(k, a, b))
    }
}

/// Whether segment `a`–`b` avoids every obstacle interior. Grazing a wall or a
/// corner is clear.
pub fn los_clear(map: &ObstacleMap, a: Point2D, b: Point2D) -> Result<bool, VisibilityError> {
    for p in [a, b] {
        if !map.in_area(p) {
            return Err(VisibilityError::OutOfArea(p));
        }
    }
    Ok(map.blocking(a, b).next().is_none())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VertexRole {
    NeighborNode(NodeId),
    ObstacleCorner { obstacle: usize, corner: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodPolygon {
    pub center: NodeId,
    pub polygon: Polygon,
    /// Aligned with `polygon.vertices()`.
    pub vertex_roles: Vec<VertexRole>,
}

impl NeighborhoodPolygon {
    pub fn neighbor_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.vertex_roles.iter().filter_map(|r| match r {
            VertexRole::NeighborNode(id) => Some(*id),
            VertexRole::ObstacleCorner { .. } => None,
        })
    }

    pub fn corner_count(&self) -> usize {
        self.vertex_roles.iter().filter(|r| matches!(r, VertexRole::ObstacleCorner { .. })).count()
    }
}

fn assemble(
    center: NodeId,
    ring: &[(Point2D, VertexRole)],
) -> Result<NeighborhoodPolygon, VisibilityError> {
    let pts: Vec<Point2D> = ring.iter().map(|r| r.0).collect();
    let polygon = Polygon::new(&pts).map_err(|_| VisibilityError::DegenerateRing)?;
    let reversed = polygon.vertex(0) != pts[0] || (pts.len() > 1 && polygon.vertex(1) != pts[1]);
    let vertex_roles = if reversed { ring.iter().rev().map(|r| r.1).collect() } else { ring.iter().map(|r| r.1).collect() };
    Ok(NeighborhoodPolygon { center, polygon, vertex_roles })
}

/// Angular ring of in-range neighbors around `center_pos`, with the corners
/// of every obstacle that cuts a ring edge spliced in between its endpoints.
pub fn neighborhood_polygon(
    center: NodeId,
    center_pos: Point2D,
    neighbors: &[(NodeId, Point2D)],
    map: &ObstacleMap,
    range: f64,
) -> Result<NeighborhoodPolygon, VisibilityError> {
    let scale = range.max(1.0);
    let tol = 1e-9 * scale;
    let mut base: Vec<(f64, f64, NodeId, Point2D)> = Vec::new();
    for &(id, p) in neighbors {
        let d = p.dist(center_pos);
        if d <= tol || d > range || base.iter().any(|b| b.3.dist(p) <= tol) {
            continue;
        }
        let v = p - center_pos;
        base.push((v.y.atan2(v.x), d, id, p));
    }
    if base.len() < 3 {
        return Err(VisibilityError::TooFewNeighbors(base.len()));
    }
    // Clockwise: decreasing angle.
    base.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.partial_cmp(&b.1).unwrap()));
    let mut ring: Vec<(Point2D, VertexRole)> = Vec::new();
    let m = base.len();
    for i in 0..m {
        let (ang_a, _, id, a) = base[i];
        let (_, _, _, b) = base[(i + 1) % m];
        ring.push((a, VertexRole::NeighborNode(id)));
        let mut spliced: Vec<(f64, f64, Point2D, VertexRole)> = Vec::new();
        for k in map.blocking(a, b) {
            let o = &map.obstacles[k];
            for c in 0..o.len() {
                let q = o.vertex(c);
                if strictly_in_triangle(q, center_pos, a, b, tol) {
                    let v = q - center_pos;
                    let off = (ang_a - v.y.atan2(v.x)).rem_euclid(std::f64::consts::TAU);
                    spliced.push((off, q.dist(center_pos), q, VertexRole::ObstacleCorner { obstacle: k, corner: c }));
                }
            }
        }
        spliced.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.partial_cmp(&y.1).unwrap()));
        spliced.dedup_by(|x, y| (x.0 - y.0).abs() <= 1e-12);
        ring.extend(spliced.into_iter().map(|s| (s.2, s.3)));
    }
    let all_collinear = (0..ring.len()).all(|i| {
        let v = ring[i].0 - center_pos;
        let w = ring[0].0 - center_pos;
        v.cross(w).abs() <= tol * v.norm().max(w.norm())
    });
    if all_collinear {
        return Err(VisibilityError::DegenerateRing);
    }
    assemble(center, &ring)
}

fn strictly_in_triangle(q: Point2D, c: Point2D, a: Point2D, b: Point2D, tol: f64) -> bool {
    let s1 = (a - c).cross(q - c);
    let s2 = (b - a).cross(q - a);
    let s3 = (c - b).cross(q - b);
    let t = tol * tol.max(1.0);
    (s1 > t && s2 > t && s3 > t) || (s1 < -t && s2 < -t && s3 < -t)
}

/// Result of [`searchable_or_prune`].
#[derive(Debug, Clone, PartialEq)]
pub struct Pruned {
    pub polygon: NeighborhoodPolygon,
    /// Deleted neighbor ids, in deletion order.
    pub deleted: Vec<NodeId>,
    /// False when no further neighbor could be removed while the polygon is
    /// still not searchable. Never expected; a defect signal.
    pub searchable: bool,
}

/// Deletes uniformly random neighbor vertices until the polygon is boundary
/// 1-searchable. Obstacle corners are never removed.
pub fn searchable_or_prune(np: &NeighborhoodPolygon, seed: u64) -> Pruned {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = np.clone();
    let mut deleted = Vec::new();
    loop {
        if is_boundary_1_searchable(&current.polygon) {
            return Pruned { polygon: current, deleted, searchable: true };
        }
        let mut options: Vec<usize> = (0..current.vertex_roles.len())
            .filter(|&i| matches!(current.vertex_roles[i], VertexRole::NeighborNode(_)))
            .collect();
        let mut next = None;
        while current.polygon.len() > 3 && !options.is_empty() {
            let pick = options.swap_remove(rng.gen_range(0..options.len()));
            let ring: Vec<(Point2D, VertexRole)> = (0..current.polygon.len())
                .filter(|&i| i != pick)
                .map(|i| (current.polygon.vertex(i), current.vertex_roles[i]))
                .collect();
            if let Ok(p) = assemble(current.center, &ring) {
                if let VertexRole::NeighborNode(id) = current.vertex_roles[pick] {
                    deleted.push(id);
                }
                next = Some(p);
                break;
            }
        }
        match next {
            Some(p) => current = p,
            None => return Pruned { polygon: current, deleted, searchable: false },
        }
    }
}

/// Everything [`observe`] derived for one node.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub observed: BTreeSet<NodeId>,
    pub deleted: Vec<NodeId>,
    pub corners: usize,
    pub schedule: Option<SearchSchedule>,
    /// True when the polygon route was skipped and plain line of sight used.
    pub los_fallback: bool,
}

/// Neighbors of `center` that survive polygon pruning and have a clear line
/// of sight. Falls back to line of sight alone when no polygon can be formed.
/// Polygons without spliced obstacle corners are not pruned. The search
/// schedule is only built when `with_schedule` is set.
pub fn observe(
    center: NodeId,
    center_pos: Point2D,
    neighbors: &[(NodeId, Point2D)],
    map: &ObstacleMap,
    range: f64,
    seed: u64,
    with_schedule: bool,
) -> Observation {
    let in_range: Vec<(NodeId, Point2D)> =
        neighbors.iter().copied().filter(|&(id, p)| id != center && p.dist(center_pos) <= range).collect();
    let los = |id: NodeId, p: Point2D| id != center && map.blocking(center_pos, p).next().is_none() && map.in_area(p);
    let fallback = || Observation {
        observed: in_range.iter().filter(|&&(id, p)| los(id, p)).map(|&(id, _)| id).collect(),
        deleted: Vec::new(),
        corners: 0,
        schedule: None,
        los_fallback: true,
    };
    let Ok(np) = neighborhood_polygon(center, center_pos, &in_range, map, range) else {
        return fallback();
    };
    let corners = np.corner_count();
    let pruned = if corners == 0 {
        Pruned { polygon: np, deleted: Vec::new(), searchable: true }
    } else {
        searchable_or_prune(&np, seed)
    };
    let kept: BTreeSet<NodeId> = pruned.polygon.neighbor_ids().collect();
    let schedule = if with_schedule { bsa_search(&pruned.polygon.polygon).ok() } else { None };
    let observed = in_range.iter().filter(|&&(id, p)| kept.contains(&id) && los(id, p)).map(|&(id, _)| id).collect();
    Observation { observed, deleted: pruned.deleted, corners, schedule, los_fallback: false }
}

/// [`observe`] with the search schedule built.
pub fn observed_neighbors(
    center: NodeId,
    center_pos: Point2D,
    neighbors: &[(NodeId, Point2D)],
    map: &ObstacleMap,
    range: f64,
    seed: u64,
) -> BTreeSet<NodeId> {
    observe(center, center_pos, neighbors, map, range, seed, true).observed
}

/// CSV rows `center_id,neighbor_id,observed` for every in-range pair.
pub fn observed_csv(rows: &[(NodeId, NodeId, bool)]) -> String {
    let mut s = String::from("center_id,neighbor_id,observed\n");
    for &(c, n, o) in rows {
        let _ = writeln!(s, "{c},{n},{}", u8::from(o));
    }
    s
}
