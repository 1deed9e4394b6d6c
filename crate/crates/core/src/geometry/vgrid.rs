use std::collections::VecDeque;

use super::polygon::Polygon;

/// Sampled visibility diagram.
///
/// Boundary samples are the vertices plus `resolution` evenly spaced interior
/// points on every edge. Cell `(x, y)` with `x - N <= y <= x` (indices lifted
/// by the sample count `N`) is free when the two samples see each other.
#[derive(Debug, Clone)]
pub struct VisibilityGrid {
    pub resolution: usize,
    samples: Vec<f64>,
    vis: Vec<bool>,
}

impl VisibilityGrid {
    pub fn new(polygon: &Polygon, resolution: usize) -> Self {
        let resolution = resolution.max(1);
        let mut samples = Vec::with_capacity(polygon.len() * (resolution + 1));
        for i in 0..polygon.len() {
            let s0 = polygon.vertex_arclength(i);
            let len = polygon.edge_length(i);
            for k in 0..=resolution {
                samples.push(s0 + len * k as f64 / (resolution + 1) as f64);
            }
        }
        let pts: Vec<_> = samples.iter().map(|&s| polygon.point_at(s)).collect();
        let n = samples.len();
        let mut vis = vec![false; n * n];
        for a in 0..n {
            vis[a * n + a] = true;
            for b in (a + 1)..n {
                let v = polygon.segment_inside(pts[a], pts[b]);
                vis[a * n + b] = v;
                vis[b * n + a] = v;
            }
        }
        Self { resolution, samples, vis }
    }

    /// Number of boundary samples `N`.
    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    /// Arclength of each sample.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Visibility between samples `a` and `b` (indices taken modulo `N`).
    pub fn visible(&self, a: usize, b: usize) -> bool {
        let n = self.samples.len();
        self.vis[(a % n) * n + (b % n)]
    }

    /// Whether the lifted cell `(x, y)` is free; cells outside the band are not.
    pub fn is_free(&self, x: i64, y: i64) -> bool {
        let n = self.samples.len() as i64;
        if y > x || y < x - n {
            return false;
        }
        self.visible(x.rem_euclid(n) as usize, y.rem_euclid(n) as usize)
    }

    /// Whether an 8-connected chain of free cells joins the start line `y = x`
    /// to the goal line `y = x - N`.
    pub fn has_search_path(&self) -> bool {
        let n = self.samples.len();
        // Cells are (x mod N, k = x - y) with k in 0..=N.
        let idx = |a: usize, k: usize| a * (n + 1) + k;
        let mut seen = vec![false; n * (n + 1)];
        let mut queue = VecDeque::new();
        for a in 0..n {
            seen[idx(a, 0)] = true;
            queue.push_back((a, 0usize));
        }
        while let Some((a, k)) = queue.pop_front() {
            if k == n {
                return true;
            }
            for da in -1i64..=1 {
                for db in -1i64..=1 {
                    if da == 0 && db == 0 {
                        continue;
                    }
                    let nk = k as i64 + da - db;
                    if nk < 0 || nk > n as i64 {
                        continue;
                    }
                    let na = (a as i64 + da).rem_euclid(n as i64) as usize;
                    let nk = nk as usize;
                    if seen[idx(na, nk)] {
                        continue;
                    }
                    let y = (na + n - nk % n) % n;
                    if !self.visible(na, y) {
                        continue;
                    }
                    seen[idx(na, nk)] = true;
                    queue.push_back((na, nk));
                }
            }
        }
        false
    }
}

/// Brute-force searchability test on the sampled visibility diagram.
pub fn oracle_searchable(polygon: &Polygon, resolution: usize) -> bool {
    VisibilityGrid::new(polygon, resolution).has_search_path()
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
    fn convex_band_is_free() {
        let sq = poly(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]);
        let g = VisibilityGrid::new(&sq, 4);
        let n = g.sample_count() as i64;
        assert_eq!(n, 20);
        for x in 0..n {
            for y in (x - n)..=x {
                assert!(g.is_free(x, y));
            }
        }
        assert!(g.has_search_path());
    }

    #[test]
    fn l_shape_matches_pairwise_visibility() {
        let l = poly(&[(0.0, 0.0), (0.0, 2.0), (1.0, 2.0), (1.0, 1.0), (2.0, 1.0), (2.0, 0.0)]);
        let g = VisibilityGrid::new(&l, 4);
        let n = g.sample_count();
        let mut blocked = 0;
        for a in 0..n {
            for b in 0..n {
                let pa = l.point_at(g.samples()[a]);
                let pb = l.point_at(g.samples()[b]);
                assert_eq!(g.visible(a, b), l.visible(pa, pb).unwrap());
                blocked += usize::from(!g.visible(a, b));
            }
        }
        assert!(blocked > 0);
        assert!(oracle_searchable(&l, 16));
    }

    #[test]
    fn grid_is_periodic_symmetric() {
        let l = poly(&[(0.0, 0.0), (0.0, 2.0), (1.0, 2.0), (1.0, 1.0), (2.0, 1.0), (2.0, 0.0)]);
        let g = VisibilityGrid::new(&l, 5);
        let n = g.sample_count() as i64;
        for x in 0..n {
            for y in (x - n)..=x {
                assert_eq!(g.is_free(x, y), g.is_free(y + n, x));
            }
        }
    }
}
