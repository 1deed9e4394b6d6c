//! Hand-picked polygons used by tests, the CLI and the acceptance suite.

use super::point::Point2D;
use super::polygon::Polygon;

fn build(v: &[(f64, f64)]) -> Polygon {
    let pts: Vec<Point2D> = v.iter().map(|&p| p.into()).collect();
    Polygon::new(&pts).expect("fixture polygon is simple")
}

pub fn unit_square() -> Polygon {
    build(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)])
}

/// One reflex vertex at (1, 1).
pub fn l_shape() -> Polygon {
    build(&[(0.0, 0.0), (0.0, 2.0), (1.0, 2.0), (1.0, 1.0), (2.0, 1.0), (2.0, 0.0)])
}

/// Monotone staircase with two shallow steps.
pub fn staircase() -> Polygon {
    build(&[(0.0, 0.0), (0.0, 3.0), (1.0, 3.0), (1.0, 2.0), (2.0, 2.0), (2.0, 1.0), (3.0, 1.0), (3.0, 0.0)])
}

/// Four reflex vertices whose one-side chains cover the boundary.
pub fn one_side_cover() -> Polygon {
    build(&[
        (0.119, -0.059),
        (0.428, -0.727),
        (0.103, -0.315),
        (-0.687, -0.37),
        (-0.24, -0.111),
        (-0.8, -0.234),
        (-0.675, 0.363),
        (-0.168, 0.771),
        (0.396, 0.878),
        (0.057, 0.087),
        (0.658, 0.526),
        (0.935, 0.038),
    ])
}

/// Three-bladed pinwheel: every pair of its three reflex vertices lies in each
/// other's forward pocket.
pub fn double_left_pinwheel() -> Polygon {
    build(&[
        (0.186, 0.196),
        (0.653, 0.224),
        (0.091, 0.275),
        (-0.262, 0.063),
        (-0.52, 0.454),
        (-0.284, -0.058),
        (0.076, -0.259),
        (-0.133, -0.677),
        (0.193, -0.217),
    ])
}

/// Boundary covered by one-side and double chains together but by neither alone.
pub fn mixed_cover() -> Polygon {
    build(&[
        (0.075, 0.663),
        (0.71, 0.778),
        (0.454, 0.597),
        (0.445, 0.463),
        (0.452, 0.378),
        (0.586, 0.288),
        (0.904, 0.94),
        (0.646, 0.015),
        (0.457, 0.118),
        (0.363, 0.198),
        (0.367, 0.075),
        (0.148, 0.046),
        (0.053, 0.334),
        (0.171, 0.321),
        (0.281, 0.689),
    ])
}

/// A restricted reflex vertex nested inside a one-side chain, paired with one
/// of its ends.
pub fn nested_left_pair() -> Polygon {
    build(&[
        (0.257, 0.734),
        (0.116, 0.683),
        (0.152, 0.955),
        (0.666, 0.628),
        (0.589, 0.662),
        (0.288, 0.154),
        (0.303, 0.581),
        (0.379, 0.533),
    ])
}

/// The non-searchable constructed family.
pub fn obstructed_family() -> Vec<(&'static str, Polygon)> {
    vec![
        ("one_side_cover", one_side_cover()),
        ("double_left_pinwheel", double_left_pinwheel()),
        ("mixed_cover", mixed_cover()),
        ("nested_left_pair", nested_left_pair()),
    ]
}
