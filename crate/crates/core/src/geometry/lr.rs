use super::polygon::Polygon;
use super::rays::all_reflex_rays;

/// A closed clockwise boundary interval `[from, from + len]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Arc {
    pub from: f64,
    pub len: f64,
}

impl Arc {
    pub(crate) fn between(polygon: &Polygon, from: f64, to: f64) -> Self {
        Self { from, len: polygon.cw_distance(from, to) }
    }

    pub(crate) fn end(&self, polygon: &Polygon) -> f64 {
        polygon.wrap(self.from + self.len)
    }

    pub(crate) fn contains(&self, polygon: &Polygon, s: f64) -> bool {
        let off = polygon.cw_distance(self.from, s);
        let eps = polygon.eps();
        off <= self.len + eps || polygon.perimeter() - off <= eps
    }
}

/// Whether the closed arcs cover the clockwise chain from `from` to `to`.
pub(crate) fn arcs_cover(polygon: &Polygon, arcs: &[Arc], from: f64, span: f64) -> bool {
    let d = polygon.perimeter();
    let mut cuts = vec![0.0, span];
    for a in arcs {
        for e in [a.from, a.end(polygon)] {
            let off = polygon.cw_distance(from, e);
            if off < span {
                cuts.push(off);
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.windows(2).all(|w| {
        if w[1] - w[0] <= polygon.eps() {
            return true;
        }
        let mid = (from + 0.5 * (w[0] + w[1])).rem_euclid(d);
        arcs.iter().any(|a| a.contains(polygon, mid))
    })
}

/// Whether the closed arcs cover the whole boundary.
pub(crate) fn arcs_cover_all(polygon: &Polygon, arcs: &[Arc]) -> bool {
    !arcs.is_empty() && arcs_cover(polygon, arcs, arcs[0].from, polygon.perimeter())
}

/// For every reflex vertex, the two chains that its incident edges are
/// confined to seeing: `cw[r, Back(r)]` and `cw[Forw(r), r]`.
pub(crate) fn component_arcs(polygon: &Polygon) -> Vec<Arc> {
    let mut arcs = Vec::new();
    for r in all_reflex_rays(polygon) {
        let pos = r.position(polygon);
        arcs.push(Arc::between(polygon, pos, r.back.arclength));
        arcs.push(Arc::between(polygon, r.forw.arclength, pos));
    }
    arcs
}

/// Whether the boundary splits into two chains that are weakly visible from
/// each other.
///
/// Such a split exists exactly when two boundary points pierce every chain in
/// [`component_arcs`].
pub fn lr_visible(polygon: &Polygon) -> bool {
    lr_split(polygon).is_some()
}

/// A split `(s, t)` witnessing LR-visibility.
pub fn lr_split(polygon: &Polygon) -> Option<(f64, f64)> {
    let arcs = component_arcs(polygon);
    if arcs.is_empty() {
        return Some((0.0, 0.0));
    }
    let ends: Vec<f64> = arcs.iter().map(|a| a.end(polygon)).collect();
    for &s in &ends {
        let rest: Vec<&Arc> = arcs.iter().filter(|a| !a.contains(polygon, s)).collect();
        if rest.is_empty() {
            return Some((s, s));
        }
        for t in rest.iter().map(|a| a.end(polygon)) {
            if rest.iter().all(|a| a.contains(polygon, t)) {
                return Some((s, t));
            }
        }
    }
    None
}
