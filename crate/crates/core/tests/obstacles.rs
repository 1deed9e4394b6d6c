use std::collections::BTreeSet;

use oodt_core::geometry::{is_boundary_1_searchable, Containment, Point2D, Polygon};
use oodt_core::obstacles::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn square(cx: f64, cy: f64, half: f64) -> Polygon {
    let pts = [(cx - half, cy - half), (cx - half, cy + half), (cx + half, cy + half), (cx + half, cy - half)];
    Polygon::new(&pts.map(Point2D::from)).unwrap()
}

fn compass() -> Vec<(NodeId, Point2D)> {
    vec![
        (1, Point2D::new(50.0, 60.0)),
        (2, Point2D::new(60.0, 50.0)),
        (3, Point2D::new(50.0, 40.0)),
        (4, Point2D::new(40.0, 50.0)),
    ]
}

const C: Point2D = Point2D::new(50.0, 50.0);

#[test]
fn compass_ring_is_convex() {
    let map = ObstacleMap::empty(100.0, 100.0);
    let np = neighborhood_polygon(0, C, &compass(), &map, 20.0).unwrap();
    assert_eq!(np.polygon.len(), 4);
    assert!(np.polygon.is_convex());
    assert!(np.vertex_roles.iter().all(|r| matches!(r, VertexRole::NeighborNode(_))));
    for (i, r) in np.vertex_roles.iter().enumerate() {
        let VertexRole::NeighborNode(id) = r else { unreachable!() };
        assert_eq!(compass().iter().find(|n| n.0 == *id).unwrap().1, np.polygon.vertex(i));
    }
}

#[test]
fn obstacle_across_edge_is_spliced() {
    let map = ObstacleMap::new(100.0, 100.0, vec![square(56.0, 56.0, 1.5)]).unwrap();
    let np = neighborhood_polygon(0, C, &compass(), &map, 20.0).unwrap();
    assert!(np.corner_count() >= 1);
    assert!(!np.polygon.reflex_vertices().is_empty());
    for (i, r) in np.vertex_roles.iter().enumerate() {
        if let VertexRole::ObstacleCorner { obstacle, corner } = r {
            assert_eq!(map.obstacles()[*obstacle].vertex(*corner), np.polygon.vertex(i));
        }
    }
}

#[test]
fn too_few_and_degenerate() {
    let map = ObstacleMap::empty(100.0, 100.0);
    let two = &compass()[..2];
    assert_eq!(neighborhood_polygon(0, C, two, &map, 20.0), Err(VisibilityError::TooFewNeighbors(2)));
    let line = [(1, Point2D::new(55.0, 50.0)), (2, Point2D::new(45.0, 50.0)), (3, Point2D::new(58.0, 50.0))];
    assert_eq!(neighborhood_polygon(0, C, &line, &map, 20.0), Err(VisibilityError::DegenerateRing));
    let far = [(1, Point2D::new(90.0, 50.0)), (2, Point2D::new(50.0, 55.0)), (3, Point2D::new(45.0, 45.0))];
    assert_eq!(neighborhood_polygon(0, C, &far, &map, 20.0), Err(VisibilityError::TooFewNeighbors(2)));
}

#[test]
fn searchable_polygon_is_untouched() {
    let map = ObstacleMap::empty(100.0, 100.0);
    let np = neighborhood_polygon(0, C, &compass(), &map, 20.0).unwrap();
    let out = searchable_or_prune(&np, 9);
    assert!(out.deleted.is_empty());
    assert!(out.searchable);
    assert_eq!(out.polygon, np);
}

/// Random 8-neighbor rings with a block cutting across them, until one is not
/// boundary 1-searchable.
fn non_searchable_instance() -> (NeighborhoodPolygon, ObstacleMap) {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    loop {
        let neighbors: Vec<(NodeId, Point2D)> = (1..=8)
            .map(|id| {
                let a = rng.gen_range(0.0..std::f64::consts::TAU);
                let r = rng.gen_range(3.0..20.0);
                (id, Point2D::new(50.0 + r * a.cos(), 50.0 + r * a.sin()))
            })
            .collect();
        let map = ObstacleMap::random_blocks(&mut rng, 100.0, 100.0, 40, 2.0, 6.0, 0.5);
        if map.inside_obstacle(C) {
            continue;
        }
        let Ok(np) = neighborhood_polygon(0, C, &neighbors, &map, 20.0) else { continue };
        if np.polygon.len() - np.corner_count() == 8 && !is_boundary_1_searchable(&np.polygon) {
            return (np, map);
        }
    }
}

#[test]
fn pruning_restores_searchability() {
    let (np, _) = non_searchable_instance();
    let out = searchable_or_prune(&np, 5);
    assert!(out.searchable);
    assert!(!out.deleted.is_empty() && out.deleted.len() <= 5);
    assert!(is_boundary_1_searchable(&out.polygon.polygon));
    assert_eq!(out.polygon.corner_count(), np.corner_count());
    assert_eq!(searchable_or_prune(&np, 5), out);
}

#[test]
fn fig1_relay_choice() {
    // Sender at the origin side; one neighbor hides behind a wall, another is
    // in the clear.
    let wall = Polygon::new(&[(58.0, 40.0), (58.0, 60.0), (62.0, 60.0), (62.0, 40.0)].map(Point2D::from)).unwrap();
    let map = ObstacleMap::new(200.0, 200.0, vec![wall]).unwrap();
    let su2 = Point2D::new(40.0, 50.0);
    let neighbors = vec![
        (6, Point2D::new(90.0, 50.0)),
        (7, Point2D::new(60.0, 80.0)),
        (1, Point2D::new(20.0, 50.0)),
        (3, Point2D::new(40.0, 20.0)),
    ];
    let seen = observed_neighbors(2, su2, &neighbors, &map, 120.0, 1);
    assert!(seen.contains(&7));
    assert!(!seen.contains(&6));
}

#[test]
fn occluded_neighbor_is_excluded() {
    let map = ObstacleMap::new(100.0, 100.0, vec![square(55.0, 50.0, 2.0)]).unwrap();
    let seen = observed_neighbors(0, C, &compass(), &map, 20.0, 3);
    assert_eq!(seen, BTreeSet::from([1, 3, 4]));
}

#[test]
fn few_neighbors_fall_back_to_los() {
    let map = ObstacleMap::new(100.0, 100.0, vec![square(55.0, 50.0, 2.0)]).unwrap();
    let o = observe(0, C, &compass()[1..3], &map, 20.0, 3, false);
    assert!(o.los_fallback);
    assert_eq!(o.observed, BTreeSet::from([3]));
}

#[test]
fn csv_dump() {
    let s = observed_csv(&[(0, 1, true), (0, 2, false)]);
    assert_eq!(s, "center_id,neighbor_id,observed\n0,1,1\n0,2,0\n");
}

fn scatter(seed: u64, k: usize) -> (Point2D, Vec<(NodeId, Point2D)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = Point2D::new(rng.gen_range(30.0..70.0), rng.gen_range(30.0..70.0));
    let n = (1..=k).map(|id| (id, Point2D::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))).collect();
    (c, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn empty_map_observes_everything_in_range(seed in any::<u64>(), k in 0usize..12) {
        let (c, n) = scatter(seed, k);
        let map = ObstacleMap::empty(100.0, 100.0);
        let seen = observed_neighbors(0, c, &n, &map, 40.0, seed);
        let in_range: BTreeSet<NodeId> = n.iter().filter(|p| p.1.dist(c) <= 40.0).map(|p| p.0).collect();
        prop_assert_eq!(seen, in_range);
    }

    #[test]
    fn extra_obstacle_never_adds_los(seed in any::<u64>(), k in 3usize..12, extra in 1usize..4) {
        let (c, n) = scatter(seed, k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let full = ObstacleMap::random_blocks(&mut rng, 100.0, 100.0, 2 + extra, 4.0, 12.0, 1.0);
        let fewer = full.truncated(full.len() - extra.min(full.len()));
        for &(_, p) in &n {
            if los_clear(&full, c, p).unwrap() {
                prop_assert!(los_clear(&fewer, c, p).unwrap());
            }
        }
        let a = observe(0, c, &n, &full, 40.0, seed, false).observed;
        let los_full: BTreeSet<NodeId> = n.iter().filter(|p| los_clear(&full, c, p.1).unwrap()).map(|p| p.0).collect();
        prop_assert!(a.is_subset(&los_full));
    }

    #[test]
    fn observation_is_deterministic(seed in any::<u64>(), k in 3usize..12) {
        let (c, n) = scatter(seed, k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = ObstacleMap::random_blocks(&mut rng, 100.0, 100.0, 5, 4.0, 12.0, 1.0);
        prop_assert_eq!(observe(0, c, &n, &map, 40.0, seed, false), observe(0, c, &n, &map, 40.0, seed, false));
    }

    #[test]
    fn spliced_corners_lie_on_obstacles(seed in any::<u64>(), k in 3usize..12) {
        let (c, n) = scatter(seed, k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let map = ObstacleMap::random_blocks(&mut rng, 100.0, 100.0, 6, 4.0, 12.0, 1.0);
        if let Ok(np) = neighborhood_polygon(0, c, &n, &map, 40.0) {
            for (i, r) in np.vertex_roles.iter().enumerate() {
                match r {
                    VertexRole::ObstacleCorner { .. } => {
                        let p = np.polygon.vertex(i);
                        prop_assert!(map.obstacles().iter().any(|o| o.contains(p) == Containment::Boundary));
                    }
                    VertexRole::NeighborNode(id) => {
                        let p = n.iter().find(|q| q.0 == *id).unwrap().1;
                        prop_assert!(p.dist(c) <= 40.0);
                    }
                }
            }
        }
    }
}
