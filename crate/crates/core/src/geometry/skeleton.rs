use super::polygon::Polygon;
use super::rays::{all_reflex_rays, ReflexRays};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoneKind {
    /// `x = r`, `y` over the backward pocket.
    South,
    /// `y = r`, `x` over the forward pocket.
    East,
    /// `x = D + r`, `y` over the forward pocket.
    North,
    /// `y = r`, `x` over the backward pocket shifted by `D`.
    West,
}

/// An axis-parallel wall in V-space, `from` and `to` given as `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bone {
    pub kind: BoneKind,
    pub vertex_index: usize,
    pub from: (f64, f64),
    pub to: (f64, f64),
}

impl Bone {
    fn is_vertical(&self) -> bool {
        matches!(self.kind, BoneKind::South | BoneKind::North)
    }
}

/// The four bones of every reflex vertex.
#[derive(Debug, Clone)]
pub struct SkeletonDiagram {
    pub bones: Vec<Bone>,
    pub perimeter: f64,
    eps: f64,
    critical: Vec<f64>,
}

impl SkeletonDiagram {
    pub fn new(polygon: &Polygon) -> Self {
        Self::from_rays(polygon, &all_reflex_rays(polygon))
    }

    pub fn from_rays(polygon: &Polygon, rays: &[ReflexRays]) -> Self {
        let d = polygon.perimeter();
        let mut bones = Vec::with_capacity(4 * rays.len());
        let mut critical = Vec::with_capacity(3 * rays.len());
        for ray in rays {
            let r = ray.position(polygon);
            let b = r - ray.back_pocket_len(polygon);
            let f = r + ray.forw_pocket_len(polygon);
            let v = ray.vertex_index;
            bones.push(Bone { kind: BoneKind::South, vertex_index: v, from: (r, r), to: (r, b) });
            bones.push(Bone { kind: BoneKind::East, vertex_index: v, from: (r, r), to: (f, r) });
            bones.push(Bone { kind: BoneKind::North, vertex_index: v, from: (d + r, r), to: (d + r, f) });
            bones.push(Bone { kind: BoneKind::West, vertex_index: v, from: (d + r, r), to: (d + b, r) });
            critical.extend([r, ray.back.arclength, ray.forw.arclength]);
        }
        critical.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let eps = polygon.eps();
        critical.dedup_by(|a, b| (*a - *b).abs() <= eps);
        if critical.len() > 1 && d - critical[critical.len() - 1] + critical[0] <= eps {
            critical.pop();
        }
        Self { bones, perimeter: d, eps, critical }
    }

    /// Whether the free part of the band joins the start line to the goal line.
    pub fn has_search_path(&self) -> bool {
        let m = self.critical.len();
        if m == 0 {
            return true;
        }
        let d = self.perimeter;
        let c = &self.critical;
        let arc_len = |i: usize| {
            let l = c[(i + 1) % m] - c[i];
            if l <= 0.0 {
                l + d
            } else {
                l
            }
        };
        let mid = |i: usize| c[i] + 0.5 * arc_len(i);
        let cw = |from: f64, to: f64| (to - from).rem_euclid(d);

        // Cell (i, k): x in arc i, y in arc (i - k) mod m.
        let id = |i: usize, k: usize| i * (m + 1) + k;
        let mut uf = UnionFind::new(m * (m + 1));
        for i in 0..m {
            for k in 0..=m {
                let j = (i + m - k % m) % m;
                // x crosses c[i + 1] with y inside arc j.
                if k < m {
                    let x = c[(i + 1) % m];
                    let t = cw(mid(j), x);
                    if !self.vertical_blocks(x, x - t) {
                        uf.union(id(i, k), id((i + 1) % m, k + 1));
                    }
                }
                // y crosses c[j] downward with x inside arc i.
                if k < m {
                    let y = c[j];
                    let t = cw(y, mid(i));
                    if !self.horizontal_blocks(y + t, y) {
                        uf.union(id(i, k), id(i, k + 1));
                    }
                }
            }
        }
        let starts: Vec<usize> = (0..m).map(|i| uf.find(id(i, 0))).collect();
        (0..m).any(|i| starts.contains(&uf.find(id(i, m))))
    }

    fn vertical_blocks(&self, x: f64, y: f64) -> bool {
        let d = self.perimeter;
        self.bones.iter().filter(|b| b.is_vertical()).any(|b| {
            let wx = b.from.0;
            let k = ((wx - x) / d).round();
            if (wx - x - k * d).abs() > self.eps {
                return false;
            }
            let yy = y + k * d;
            let (lo, hi) = minmax(b.from.1, b.to.1);
            yy >= lo - self.eps && yy <= hi + self.eps
        })
    }

    fn horizontal_blocks(&self, x: f64, y: f64) -> bool {
        let d = self.perimeter;
        self.bones.iter().filter(|b| !b.is_vertical()).any(|b| {
            let wy = b.from.1;
            let k = ((wy - y) / d).round();
            if (wy - y - k * d).abs() > self.eps {
                return false;
            }
            let xx = x + k * d;
            let (lo, hi) = minmax(b.from.0, b.to.0);
            xx >= lo - self.eps && xx <= hi + self.eps
        })
    }
}

fn minmax(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
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
    fn bones_follow_rays() {
        let l = poly(&[(0.0, 0.0), (0.0, 2.0), (1.0, 2.0), (1.0, 1.0), (2.0, 1.0), (2.0, 0.0)]);
        let sk = SkeletonDiagram::new(&l);
        assert_eq!(sk.bones.len(), 4);
        let d = sk.perimeter;
        let r = l.vertex_arclength(3);
        let south = sk.bones.iter().find(|b| b.kind == BoneKind::South).unwrap();
        assert_eq!(south.from, (r, r));
        // Back((1,1)) = (0,1) sits 3 units before r along the boundary.
        assert!((south.to.1 - (r - 3.0)).abs() < 1e-9);
        let north = sk.bones.iter().find(|b| b.kind == BoneKind::North).unwrap();
        assert_eq!(north.from, (d + r, r));
        assert!((north.to.1 - (r + 3.0)).abs() < 1e-9);
        assert!(sk.has_search_path());
    }

    #[test]
    fn convex_has_no_bones() {
        let sq = poly(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]);
        let sk = SkeletonDiagram::new(&sq);
        assert!(sk.bones.is_empty());
        assert!(sk.has_search_path());
    }
}
