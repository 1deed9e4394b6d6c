use std::fmt;
use std::ops::{Add, Mul, Sub};

/// A point (or vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn lerp(self, other: Self, t: f64) -> Self {
        Self::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }

    pub fn scale(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

impl Add for Point2D {
    type Output = Point2D;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2D {
    type Output = Point2D;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2D {
    type Output = Point2D;
    fn mul(self, k: f64) -> Self {
        self.scale(k)
    }
}

impl fmt::Display for Point2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl From<(f64, f64)> for Point2D {
    fn from((x, y): (f64, f64)) -> Self {
        Self::new(x, y)
    }
}

/// Signed area of the triangle (a, b, c) times two. Positive for a left turn.
pub fn orient(a: Point2D, b: Point2D, c: Point2D) -> f64 {
    (b - a).cross(c - a)
}

/// Parameter `t` of the projection of `p` onto segment `a`–`b`.
pub(crate) fn project_param(a: Point2D, b: Point2D, p: Point2D) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        0.0
    } else {
        (p - a).dot(d) / len2
    }
}

/// Distance from `p` to the closed segment `a`–`b`.
pub fn point_segment_distance(p: Point2D, a: Point2D, b: Point2D) -> f64 {
    let t = project_param(a, b, p).clamp(0.0, 1.0);
    p.dist(a.lerp(b, t))
}

/// Intersection of the closed segments `p`–`q` and `a`–`b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentContact {
    None,
    /// Interiors cross transversally at a single point (params on both segments).
    Proper { t: f64, u: f64 },
    /// Segments touch at one point where at least one endpoint is involved.
    Touch { t: f64, u: f64 },
    /// Collinear overlap, given as the parameter range on `p`–`q`.
    Overlap { t0: f64, t1: f64 },
}

/// Classifies the contact between segments `p`–`q` and `a`–`b`, with `eps` an
/// absolute length tolerance.
pub fn segment_contact(p: Point2D, q: Point2D, a: Point2D, b: Point2D, eps: f64) -> SegmentContact {
    let r = q - p;
    let s = b - a;
    let rlen = r.norm();
    let slen = s.norm();
    if rlen <= eps || slen <= eps {
        return SegmentContact::None;
    }
    // Signed distances of a, b from line pq and of p, q from line ab.
    let da = r.cross(a - p) / rlen;
    let db = r.cross(b - p) / rlen;
    let dp = s.cross(p - a) / slen;
    let dq = s.cross(q - a) / slen;

    if da.abs() <= eps && db.abs() <= eps {
        // Collinear (within tolerance).
        let ta = project_param(p, q, a);
        let tb = project_param(p, q, b);
        let (lo, hi) = if ta < tb { (ta, tb) } else { (tb, ta) };
        let t0 = lo.max(0.0);
        let t1 = hi.min(1.0);
        let tol = eps / rlen;
        if t1 < t0 - tol {
            return SegmentContact::None;
        }
        if (t1 - t0) * rlen <= eps {
            let t = 0.5 * (t0 + t1);
            let u = project_param(a, b, p.lerp(q, t));
            return SegmentContact::Touch { t: t.clamp(0.0, 1.0), u: u.clamp(0.0, 1.0) };
        }
        return SegmentContact::Overlap { t0, t1 };
    }

    let a_on = da.abs() <= eps;
    let b_on = db.abs() <= eps;
    let p_on = dp.abs() <= eps;
    let q_on = dq.abs() <= eps;

    if (da > eps && db > eps) || (da < -eps && db < -eps) {
        return SegmentContact::None;
    }
    if (dp > eps && dq > eps) || (dp < -eps && dq < -eps) {
        return SegmentContact::None;
    }

    let denom = r.cross(s);
    if denom.abs() <= f64::MIN_POSITIVE {
        return SegmentContact::None;
    }
    let t = (a - p).cross(s) / denom;
    let u = (a - p).cross(r) / denom;
    let tol_t = eps / rlen;
    let tol_u = eps / slen;
    if t < -tol_t || t > 1.0 + tol_t || u < -tol_u || u > 1.0 + tol_u {
        return SegmentContact::None;
    }
    let t = t.clamp(0.0, 1.0);
    let u = u.clamp(0.0, 1.0);
    if a_on || b_on || p_on || q_on {
        SegmentContact::Touch { t, u }
    } else {
        SegmentContact::Proper { t, u }
    }
}
