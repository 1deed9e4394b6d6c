//! Simple polygons, visibility and boundary 1-searchability.

mod bitangent;
pub mod fixtures;
mod io;
mod lr;
mod point;
mod polygon;
pub mod random;
mod rays;
mod search;
mod skeleton;
mod vgrid;

pub use bitangent::{
    bitangents, is_boundary_1_searchable, pocket_bitangents, restricted_reflex_vertices, theorem1_conditions, BiTangent, BiTangentKind,
    Theorem1Conditions,
};
pub use io::{format_polygons, format_schedule, parse_polygons, parse_schedule};
pub use lr::{lr_split, lr_visible};
pub use point::{orient, point_segment_distance, segment_contact, Point2D, SegmentContact};
pub use polygon::{BoundaryPoint, Containment, Polygon, REL_EPS};
pub use rays::{all_reflex_rays, reflex_rays, ReflexRays};
pub use search::{
    bsa_search, replay, schedule_verify, Actor, InstructionKind, Replay, SearchInstruction, SearchSchedule, BASE_RESOLUTION,
};
pub use skeleton::{Bone, BoneKind, SkeletonDiagram};
pub use vgrid::{oracle_searchable, VisibilityGrid};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("vertices {0} and {1} coincide")]
    DuplicateVertex(usize, usize),
    #[error("vertex {0} is collinear with its neighbours")]
    CollinearDegenerate(usize),
    #[error("edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
    #[error("point {0} is outside the polygon")]
    PointOutsidePolygon(Point2D),
    #[error("vertex {0} is not reflex")]
    NotReflex(usize),
    #[error("vertex index {0} out of range")]
    VertexOutOfRange(usize),
    #[error("polygon is not LR-visible")]
    NotLRVisible,
    #[error("polygon is not boundary 1-searchable")]
    NotSearchable,
    #[error("every reflex vertex is restricted")]
    NoUnrestrictedStart,
    #[error("malformed schedule: {0}")]
    MalformedSchedule(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
