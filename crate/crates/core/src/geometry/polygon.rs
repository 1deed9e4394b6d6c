use super::point::{orient, point_segment_distance, segment_contact, Point2D, SegmentContact};
use super::GeometryError;

/// Relative tolerance for all geometric predicates. Multiplied by the polygon's
/// bounding-box extent to obtain an absolute length tolerance.
pub const REL_EPS: f64 = 1e-9;

/// Location of a point relative to a closed polygon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Containment {
    Inside,
    Boundary,
    Outside,
}

/// A position on the boundary, measured clockwise from vertex 0.
///
/// Values are kept in `[0, D)`; arithmetic that needs lifted positions works on
/// raw `f64`s and wraps through [`BoundaryPoint::new`].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct BoundaryPoint {
    pub arclength: f64,
}

impl BoundaryPoint {
    pub fn new(polygon: &Polygon, arclength: f64) -> Self {
        Self { arclength: polygon.wrap(arclength) }
    }

    pub fn at_vertex(polygon: &Polygon, index: usize) -> Self {
        Self { arclength: polygon.vertex_arclength(index) }
    }

    pub fn point(&self, polygon: &Polygon) -> Point2D {
        polygon.point_at(self.arclength)
    }
}

/// A simple polygon stored clockwise, with boundary arclength bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2D>,
    /// `cum[i]` is the clockwise arclength from vertex 0 to vertex i; `cum[n] = D`.
    cum: Vec<f64>,
    reflex: Vec<bool>,
    eps: f64,
}

impl Polygon {
    /// Builds a clockwise simple polygon. Counterclockwise input is reversed.
    pub fn new(points: &[Point2D]) -> Result<Self, GeometryError> {
        let n = points.len();
        if n < 3 {
            return Err(GeometryError::TooFewVertices(n));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let extent = bounding_extent(points);
        if extent <= 0.0 {
            return Err(GeometryError::DuplicateVertex(0, 1));
        }
        let eps = REL_EPS * extent;

        for i in 0..n {
            for j in (i + 1)..n {
                if points[i].dist(points[j]) <= eps {
                    return Err(GeometryError::DuplicateVertex(i, j));
                }
            }
        }
        for i in 0..n {
            let a = points[(i + n - 1) % n];
            let b = points[i];
            let c = points[(i + 1) % n];
            // Turn magnitude normalised to a length: distance of b from line ac.
            let ac = c.dist(a);
            let d = if ac > 0.0 { orient(a, b, c).abs() / ac } else { 0.0 };
            if d <= eps {
                return Err(GeometryError::CollinearDegenerate(i));
            }
        }
        for i in 0..n {
            let (a, b) = (points[i], points[(i + 1) % n]);
            for j in (i + 1)..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (c, d) = (points[j], points[(j + 1) % n]);
                if segment_contact(a, b, c, d, eps) != SegmentContact::None {
                    return Err(GeometryError::SelfIntersecting(i, j));
                }
            }
        }

        let mut vertices = points.to_vec();
        if signed_area(&vertices) > 0.0 {
            vertices.reverse();
        }
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        for i in 0..n {
            let next = cum[i] + vertices[i].dist(vertices[(i + 1) % n]);
            cum.push(next);
        }
        let reflex = (0..n)
            .map(|i| {
                let a = vertices[(i + n - 1) % n];
                let b = vertices[i];
                let c = vertices[(i + 1) % n];
                // Clockwise ring: convex corners turn right, reflex corners turn left.
                orient(a, b, c) > 0.0
            })
            .collect();
        Ok(Self { vertices, cum, reflex, eps })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Point2D] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point2D {
        self.vertices[i % self.len()]
    }

    /// Previous vertex in clockwise order.
    pub fn pred(&self, i: usize) -> usize {
        (i + self.len() - 1) % self.len()
    }

    /// Next vertex in clockwise order.
    pub fn succ(&self, i: usize) -> usize {
        (i + 1) % self.len()
    }

    /// Total boundary length `D`.
    pub fn perimeter(&self) -> f64 {
        self.cum[self.len()]
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn reflex_flags(&self) -> &[bool] {
        &self.reflex
    }

    pub fn is_reflex(&self, i: usize) -> bool {
        self.reflex[i]
    }

    pub fn reflex_vertices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.reflex[i]).collect()
    }

    pub fn is_convex(&self) -> bool {
        !self.reflex.iter().any(|&r| r)
    }

    /// Signed area; negative because the ring is clockwise.
    pub fn signed_area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn vertex_arclength(&self, i: usize) -> f64 {
        self.cum[i % self.len()]
    }

    pub fn edge_length(&self, i: usize) -> f64 {
        self.cum[i + 1] - self.cum[i]
    }

    /// Reduces a lifted arclength into `[0, D)`.
    pub fn wrap(&self, s: f64) -> f64 {
        let d = self.perimeter();
        let mut w = s.rem_euclid(d);
        if w >= d {
            w = 0.0;
        }
        w
    }

    /// Edge index containing arclength `s` (wrapped) and the parameter along it.
    pub fn edge_at(&self, s: f64) -> (usize, f64) {
        let s = self.wrap(s);
        let n = self.len();
        // Largest i with cum[i] <= s.
        let i = match self.cum[..n].binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let len = self.edge_length(i);
        let t = if len > 0.0 { (s - self.cum[i]) / len } else { 0.0 };
        (i, t.clamp(0.0, 1.0))
    }

    pub fn point_at(&self, s: f64) -> Point2D {
        let (i, t) = self.edge_at(s);
        self.vertex(i).lerp(self.vertex(i + 1), t)
    }

    /// Arclength of a boundary point, if `p` lies on the boundary.
    pub fn locate(&self, p: Point2D) -> Option<f64> {
        let n = self.len();
        let mut best: Option<(f64, f64)> = None;
        for i in 0..n {
            let a = self.vertex(i);
            let b = self.vertex(i + 1);
            let d = point_segment_distance(p, a, b);
            if d <= self.eps && best.map_or(true, |(bd, _)| d < bd) {
                let t = super::point::project_param(a, b, p).clamp(0.0, 1.0);
                best = Some((d, self.wrap(self.cum[i] + t * self.edge_length(i))));
            }
        }
        best.map(|(_, s)| s)
    }

    pub fn contains(&self, p: Point2D) -> Containment {
        let n = self.len();
        for i in 0..n {
            if point_segment_distance(p, self.vertex(i), self.vertex(i + 1)) <= self.eps {
                return Containment::Boundary;
            }
        }
        let mut inside = false;
        for i in 0..n {
            let a = self.vertex(i);
            let b = self.vertex(i + 1);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if x > p.x {
                    inside = !inside;
                }
            }
        }
        if inside {
            Containment::Inside
        } else {
            Containment::Outside
        }
    }

    /// Whether the closed segment `a`–`b` lies in the closed polygon.
    pub fn visible(&self, a: Point2D, b: Point2D) -> Result<bool, GeometryError> {
        for p in [a, b] {
            if self.contains(p) == Containment::Outside {
                return Err(GeometryError::PointOutsidePolygon(p));
            }
        }
        Ok(self.segment_inside(a, b))
    }

    /// [`Polygon::visible`] without the endpoint membership check.
    pub fn segment_inside(&self, a: Point2D, b: Point2D) -> bool {
        let len = a.dist(b);
        if len <= self.eps {
            return true;
        }
        let n = self.len();
        // A segment grazing a reflex vertex from inside is blocked once the
        // vertex is nudged inward.
        for v in 0..n {
            if !self.reflex[v] {
                continue;
            }
            let p = self.vertex(v);
            if point_segment_distance(p, a, b) > self.eps {
                continue;
            }
            let t = super::point::project_param(a, b, p);
            if t * len <= self.eps || (1.0 - t) * len <= self.eps {
                continue;
            }
            let dir = (b - a).scale(1.0 / len);
            let sp = dir.cross(self.vertex(self.pred(v)) - a);
            let ss = dir.cross(self.vertex(self.succ(v)) - a);
            if (sp > self.eps && ss > self.eps) || (sp < -self.eps && ss < -self.eps) {
                return false;
            }
        }
        let mut ts: Vec<f64> = vec![0.0, 1.0];
        for i in 0..n {
            match segment_contact(a, b, self.vertex(i), self.vertex(i + 1), self.eps) {
                SegmentContact::None => {}
                SegmentContact::Proper { .. } => return false,
                SegmentContact::Touch { t, .. } => ts.push(t),
                SegmentContact::Overlap { t0, t1 } => {
                    ts.push(t0);
                    ts.push(t1);
                }
            }
        }
        ts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for w in ts.windows(2) {
            if (w[1] - w[0]) * len <= self.eps {
                continue;
            }
            let mid = a.lerp(b, 0.5 * (w[0] + w[1]));
            if self.contains(mid) == Containment::Outside {
                return false;
            }
        }
        true
    }

    /// Visibility between two boundary positions.
    pub fn boundary_visible(&self, s: f64, t: f64) -> bool {
        self.segment_inside(self.point_at(s), self.point_at(t))
    }

    /// Uniformly scaled copy.
    pub fn scaled(&self, k: f64) -> Result<Self, GeometryError> {
        let pts: Vec<Point2D> = self.vertices.iter().map(|p| p.scale(k)).collect();
        Self::new(&pts)
    }

    /// Clockwise distance from `from` to `to`, in `[0, D)`.
    pub fn cw_distance(&self, from: f64, to: f64) -> f64 {
        self.wrap(to - from)
    }

    /// Whether `s` lies on the closed clockwise chain from `from` to `to`.
    pub fn on_cw_chain(&self, s: f64, from: f64, to: f64) -> bool {
        let span = self.cw_distance(from, to);
        let off = self.cw_distance(from, s);
        off <= span + self.eps || self.perimeter() - off <= self.eps
    }
}

pub(crate) fn signed_area(points: &[Point2D]) -> f64 {
    let n = points.len();
    let mut a = 0.0;
    for i in 0..n {
        a += points[i].cross(points[(i + 1) % n]);
    }
    0.5 * a
}

fn bounding_extent(points: &[Point2D]) -> f64 {
    let (mut minx, mut miny) = (f64::INFINITY, f64::INFINITY);
    let (mut maxx, mut maxy) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        minx = minx.min(p.x);
        miny = miny.min(p.y);
        maxx = maxx.max(p.x);
        maxy = maxy.max(p.y);
    }
    (maxx - minx).max(maxy - miny)
}
