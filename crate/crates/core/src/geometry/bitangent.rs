use std::collections::BTreeSet;

use super::lr::{arcs_cover, arcs_cover_all, lr_visible, Arc};
use super::polygon::{BoundaryPoint, Polygon};
use super::rays::{all_reflex_rays, ReflexRays};
use super::GeometryError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BiTangentKind {
    OneSide,
    DoubleLeft,
    DoubleRight,
}

/// A reflex-vertex configuration that blocks part of the start and goal lines.
///
/// For `OneSide`, `endpoints = (u, v)` with `v` in the forward pocket of `u`
/// and `u` in the backward pocket of `v`. For the double kinds, both endpoints
/// form a left (right) pair with the shared `pivot`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiTangent {
    pub kind: BiTangentKind,
    pub endpoints: (usize, usize),
    pub pivot: Option<usize>,
    /// Clockwise chain from the first endpoint to the second.
    pub inner_chain: (BoundaryPoint, BoundaryPoint),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Theorem1Conditions {
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
    pub c4: bool,
}

impl Theorem1Conditions {
    pub fn any(&self) -> bool {
        self.c1 || self.c2 || self.c3 || self.c4
    }
}

/// Pairwise pocket relations between reflex vertices.
pub(crate) struct PairTable {
    pub rays: Vec<ReflexRays>,
    pub pos: Vec<f64>,
    /// `one_side[a][b]`: b in F(a) and a in B(b).
    pub one_side: Vec<Vec<bool>>,
    /// Each lies in the other's forward pocket.
    pub left: Vec<Vec<bool>>,
    /// Each lies in the other's backward pocket.
    pub right: Vec<Vec<bool>>,
}

impl PairTable {
    pub(crate) fn new(polygon: &Polygon) -> Self {
        let rays = all_reflex_rays(polygon);
        let m = rays.len();
        let pos: Vec<f64> = rays.iter().map(|r| r.position(polygon)).collect();
        let back = |a: usize, s: f64| Arc::between(polygon, rays[a].back.arclength, pos[a]).contains(polygon, s);
        let forw = |a: usize, s: f64| Arc::between(polygon, pos[a], rays[a].forw.arclength).contains(polygon, s);
        let mut one_side = vec![vec![false; m]; m];
        let mut left = vec![vec![false; m]; m];
        let mut right = vec![vec![false; m]; m];
        for a in 0..m {
            for b in 0..m {
                if a == b {
                    continue;
                }
                one_side[a][b] = forw(a, pos[b]) && back(b, pos[a]);
                left[a][b] = forw(a, pos[b]) && forw(b, pos[a]);
                right[a][b] = back(a, pos[b]) && back(b, pos[a]);
            }
        }
        Self { rays, pos, one_side, left, right }
    }

    fn len(&self) -> usize {
        self.rays.len()
    }

    fn vertex(&self, a: usize) -> usize {
        self.rays[a].vertex_index
    }

    fn bitangents(&self, polygon: &Polygon) -> Vec<BiTangent> {
        let m = self.len();
        let chain = |a: usize, b: usize| {
            (BoundaryPoint::new(polygon, self.pos[a]), BoundaryPoint::new(polygon, self.pos[b]))
        };
        let mut out = Vec::new();
        for a in 0..m {
            for b in 0..m {
                if self.one_side[a][b] {
                    out.push(BiTangent {
                        kind: BiTangentKind::OneSide,
                        endpoints: (self.vertex(a), self.vertex(b)),
                        pivot: None,
                        inner_chain: chain(a, b),
                    });
                }
            }
        }
        for (kind, rel) in [(BiTangentKind::DoubleLeft, &self.left), (BiTangentKind::DoubleRight, &self.right)] {
            for v in 0..m {
                for u in 0..m {
                    for w in 0..m {
                        if u == w || u == v || w == v || !rel[u][v] || !rel[w][v] {
                            continue;
                        }
                        if Arc::between(polygon, self.pos[u], self.pos[w]).contains(polygon, self.pos[v]) {
                            continue;
                        }
                        out.push(BiTangent {
                            kind,
                            endpoints: (self.vertex(u), self.vertex(w)),
                            pivot: Some(self.vertex(v)),
                            inner_chain: chain(u, w),
                        });
                    }
                }
            }
        }
        out
    }
}

fn chain_arc(polygon: &Polygon, bt: &BiTangent) -> Arc {
    Arc::between(polygon, bt.inner_chain.0.arclength, bt.inner_chain.1.arclength)
}

/// All one-side and double bi-tangents.
pub fn bitangents(polygon: &Polygon) -> Result<Vec<BiTangent>, GeometryError> {
    if !lr_visible(polygon) {
        return Err(GeometryError::NotLRVisible);
    }
    Ok(PairTable::new(polygon).bitangents(polygon))
}

/// [`bitangents`] without the LR-visibility precondition.
pub fn pocket_bitangents(polygon: &Polygon) -> Vec<BiTangent> {
    PairTable::new(polygon).bitangents(polygon)
}

fn is_restricted(polygon: &Polygon, bts: &[BiTangent], w: usize) -> bool {
    let s = polygon.vertex_arclength(w);
    bts.iter().any(|b| b.endpoints.0 != w && b.endpoints.1 != w && chain_arc(polygon, b).contains(polygon, s))
}

/// Reflex vertices lying in the inner chain of a bi-tangent they do not end.
pub fn restricted_reflex_vertices(polygon: &Polygon) -> BTreeSet<usize> {
    let bts = PairTable::new(polygon).bitangents(polygon);
    polygon.reflex_vertices().into_iter().filter(|&w| is_restricted(polygon, &bts, w)).collect()
}

/// Evaluates the four obstruction conditions.
pub fn theorem1_conditions(polygon: &Polygon) -> Result<Theorem1Conditions, GeometryError> {
    if !lr_visible(polygon) {
        return Err(GeometryError::NotLRVisible);
    }
    Ok(conditions(polygon, &PairTable::new(polygon)))
}

fn conditions(polygon: &Polygon, table: &PairTable) -> Theorem1Conditions {
    let bts = table.bitangents(polygon);
    let arcs_of = |kinds: &[BiTangentKind]| -> Vec<Arc> {
        bts.iter().filter(|b| kinds.contains(&b.kind)).map(|b| chain_arc(polygon, b)).collect()
    };
    use BiTangentKind::*;
    let one = arcs_of(&[OneSide]);
    let left = arcs_of(&[DoubleLeft]);
    let right = arcs_of(&[DoubleRight]);
    let c1 = arcs_cover_all(polygon, &one);
    let c2 = arcs_cover_all(polygon, &left) || arcs_cover_all(polygon, &right);
    let c3 = arcs_cover_all(polygon, &arcs_of(&[OneSide, DoubleLeft]))
        || arcs_cover_all(polygon, &arcs_of(&[OneSide, DoubleRight]));

    // A left or right pair whose chain sits inside blocked inner chains.
    let all = arcs_of(&[OneSide, DoubleLeft, DoubleRight]);
    let m = table.len();
    let c4 = (0..m).any(|a| {
        (0..m).any(|b| {
            (table.left[a][b] || table.right[a][b])
                && arcs_cover(polygon, &all, table.pos[a], polygon.cw_distance(table.pos[a], table.pos[b]))
        })
    });
    Theorem1Conditions { c1, c2, c3, c4 }
}

/// Decides boundary 1-searchability.
pub fn is_boundary_1_searchable(polygon: &Polygon) -> bool {
    if polygon.is_convex() {
        return true;
    }
    if !lr_visible(polygon) {
        return false;
    }
    !conditions(polygon, &PairTable::new(polygon)).any()
}
