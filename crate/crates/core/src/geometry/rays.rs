use super::point::{segment_contact, Point2D, SegmentContact};
use super::polygon::{BoundaryPoint, Polygon};
use super::GeometryError;

/// Hit points of the two edge extensions through a reflex vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflexRays {
    pub vertex_index: usize,
    /// Exit point of the ray `Succ(r) -> r` extended beyond `r`.
    pub back: BoundaryPoint,
    /// Exit point of the ray `Pred(r) -> r` extended beyond `r`.
    pub forw: BoundaryPoint,
    /// True when either ray passed exactly through another vertex; the hit is
    /// then taken at that vertex (vertices nudged inward break the tie).
    pub grazing: bool,
}

impl ReflexRays {
    /// Arclength of the reflex vertex.
    pub fn position(&self, polygon: &Polygon) -> f64 {
        polygon.vertex_arclength(self.vertex_index)
    }

    /// Length of the chain `cw[Back(r), r]` cut off by the chord `r`–`Back(r)`.
    pub fn back_pocket_len(&self, polygon: &Polygon) -> f64 {
        polygon.cw_distance(self.back.arclength, self.position(polygon))
    }

    /// Length of the chain `cw[r, Forw(r)]` cut off by the chord `r`–`Forw(r)`.
    pub fn forw_pocket_len(&self, polygon: &Polygon) -> f64 {
        polygon.cw_distance(self.position(polygon), self.forw.arclength)
    }

    /// Whether `s` lies strictly inside the backward pocket chain.
    pub fn in_back_pocket(&self, polygon: &Polygon, s: f64) -> bool {
        let off = polygon.cw_distance(self.back.arclength, s);
        let eps = polygon.eps();
        off > eps && off < self.back_pocket_len(polygon) - eps
    }

    /// Whether `s` lies strictly inside the forward pocket chain.
    pub fn in_forw_pocket(&self, polygon: &Polygon, s: f64) -> bool {
        let off = polygon.cw_distance(self.position(polygon), s);
        let eps = polygon.eps();
        off > eps && off < self.forw_pocket_len(polygon) - eps
    }
}

/// Casts both extension rays of reflex vertex `r`.
pub fn reflex_rays(polygon: &Polygon, r: usize) -> Result<ReflexRays, GeometryError> {
    if r >= polygon.len() {
        return Err(GeometryError::VertexOutOfRange(r));
    }
    if !polygon.is_reflex(r) {
        return Err(GeometryError::NotReflex(r));
    }
    let origin = polygon.vertex(r);
    let (back, g1) = cast(polygon, r, origin - polygon.vertex(polygon.succ(r)));
    let (forw, g2) = cast(polygon, r, origin - polygon.vertex(polygon.pred(r)));
    Ok(ReflexRays {
        vertex_index: r,
        back: BoundaryPoint::new(polygon, back),
        forw: BoundaryPoint::new(polygon, forw),
        grazing: g1 || g2,
    })
}

/// Rays for every reflex vertex, in vertex order.
pub fn all_reflex_rays(polygon: &Polygon) -> Vec<ReflexRays> {
    polygon
        .reflex_vertices()
        .into_iter()
        .map(|r| reflex_rays(polygon, r).expect("reflex vertex"))
        .collect()
}

fn cast(polygon: &Polygon, r: usize, dir: Point2D) -> (f64, bool) {
    let origin = polygon.vertex(r);
    let eps = polygon.eps();
    let reach = polygon.perimeter();
    let far = origin + dir.scale(reach / dir.norm());
    let mut best: Option<(f64, f64, bool)> = None; // (distance, arclength, grazing)
    for i in 0..polygon.len() {
        let a = polygon.vertex(i);
        let b = polygon.vertex(i + 1);
        let (t, u) = match segment_contact(origin, far, a, b, eps) {
            SegmentContact::None => continue,
            SegmentContact::Proper { t, u } | SegmentContact::Touch { t, u } => (t, u),
            SegmentContact::Overlap { t0, .. } => {
                let p = origin.lerp(far, t0);
                (t0, super::point::project_param(a, b, p).clamp(0.0, 1.0))
            }
        };
        let dist = t * reach;
        if dist <= eps {
            continue;
        }
        let len = polygon.edge_length(i);
        let at_vertex = u * len <= eps || (1.0 - u) * len <= eps;
        let s = polygon.vertex_arclength(i) + u * len;
        if best.map_or(true, |(d, _, _)| dist < d - eps) {
            best = Some((dist, s, at_vertex));
        } else if let Some((d, _, g)) = best {
            if (dist - d).abs() <= eps && at_vertex && !g {
                best = Some((d, s, true));
            }
        }
    }
    let (_, s, grazing) = best.expect("a ray from inside a closed polygon must exit");
    (polygon.wrap(s), grazing)
}
