//! Seeded random polygon generators for tests and corpora.

use std::f64::consts::TAU;

use rand::Rng;

use super::point::{segment_contact, Point2D, SegmentContact};
use super::polygon::Polygon;

/// Star-shaped polygon around the origin with `n` vertices.
pub fn random_star_polygon<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Polygon {
    assert!(n >= 3);
    loop {
        let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let min_gap = (0..n)
            .map(|i| {
                let next = if i + 1 < n { angles[i + 1] } else { angles[0] + TAU };
                next - angles[i]
            })
            .fold(f64::INFINITY, f64::min);
        if min_gap < 0.05 || min_gap >= std::f64::consts::PI {
            continue;
        }
        let pts: Vec<Point2D> = angles
            .iter()
            .map(|&a| {
                let r = if rng.gen_bool(0.5) { rng.gen_range(0.1..0.35) } else { rng.gen_range(0.75..1.0) };
                Point2D::new(r * a.cos(), r * a.sin())
            })
            .collect();
        if let Ok(p) = Polygon::new(&pts) {
            if p.vertices().windows(2).all(|w| w[0].dist(w[1]) > 1e-3) {
                return p;
            }
        }
    }
}

/// Convex polygon with `n` vertices on a circle.
pub fn random_convex_polygon<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Polygon {
    assert!(n >= 3);
    loop {
        let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..TAU)).collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let r = rng.gen_range(0.5..10.0);
        let pts: Vec<Point2D> = angles.iter().map(|&a| Point2D::new(r * a.cos(), r * a.sin())).collect();
        if let Ok(p) = Polygon::new(&pts) {
            if p.is_convex() {
                return p;
            }
        }
    }
}

/// Simple polygon through `n` uniform points in the unit square, untangled by
/// repeated 2-opt moves.
pub fn random_simple_polygon<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Polygon {
    assert!(n >= 3);
    'outer: loop {
        let mut pts: Vec<Point2D> = (0..n).map(|_| Point2D::new(rng.gen(), rng.gen())).collect();
        for _ in 0..(50 * n * n) {
            let Some((i, j)) = first_crossing(&pts) else {
                if let Ok(p) = Polygon::new(&pts) {
                    return p;
                }
                continue 'outer;
            };
            pts[i + 1..=j].reverse();
        }
    }
}

fn first_crossing(pts: &[Point2D]) -> Option<(usize, usize)> {
    let n = pts.len();
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let c = segment_contact(pts[i], pts[i + 1], pts[j], pts[(j + 1) % n], 1e-12);
            if c != SegmentContact::None {
                return Some((i, j));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generators_produce_valid_polygons() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 3..=12 {
            assert_eq!(random_star_polygon(&mut rng, n).len(), n);
            assert!(random_convex_polygon(&mut rng, n).is_convex());
            assert_eq!(random_simple_polygon(&mut rng, n).len(), n);
        }
    }
}
