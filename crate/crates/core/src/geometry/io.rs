use std::fmt::Write as _;

use super::point::Point2D;
use super::polygon::{BoundaryPoint, Polygon};
use super::search::{Actor, InstructionKind, SearchInstruction, SearchSchedule};
use super::GeometryError;

/// Parses blank-line separated blocks of `x y` lines. Lines starting with `#`
/// are ignored.
pub fn parse_polygons(text: &str) -> Result<Vec<Polygon>, GeometryError> {
    let mut out = Vec::new();
    let mut block: Vec<Point2D> = Vec::new();
    let mut block_line = 0;
    let flush = |block: &mut Vec<Point2D>, out: &mut Vec<Polygon>, line: usize| -> Result<(), GeometryError> {
        if !block.is_empty() {
            let p = Polygon::new(block).map_err(|e| GeometryError::Parse { line, msg: e.to_string() })?;
            out.push(p);
            block.clear();
        }
        Ok(())
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            flush(&mut block, &mut out, block_line)?;
            continue;
        }
        if block.is_empty() {
            block_line = i + 1;
        }
        block.push(parse_point(line, i + 1)?);
    }
    flush(&mut block, &mut out, block_line)?;
    Ok(out)
}

pub(crate) fn parse_point(line: &str, lineno: usize) -> Result<Point2D, GeometryError> {
    let mut it = line.split_whitespace();
    let mut num = || -> Result<f64, GeometryError> {
        let tok = it.next().ok_or_else(|| GeometryError::Parse { line: lineno, msg: "expected two numbers".into() })?;
        tok.parse::<f64>().map_err(|_| GeometryError::Parse { line: lineno, msg: format!("bad number {tok:?}") })
    };
    let x = num()?;
    let y = num()?;
    if it.next().is_some() {
        return Err(GeometryError::Parse { line: lineno, msg: "trailing tokens".into() });
    }
    Ok(Point2D::new(x, y))
}

pub fn format_polygons(polygons: &[Polygon]) -> String {
    let mut s = String::new();
    for (i, p) in polygons.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        for v in p.vertices() {
            let _ = writeln!(s, "{} {}", v.x, v.y);
        }
    }
    s
}

/// One line per instruction: `S|F MOVE|JUMP|STAY x0 y0 -> x1 y1`.
pub fn format_schedule(polygon: &Polygon, schedule: &SearchSchedule) -> String {
    let mut s = String::new();
    for ins in &schedule.instructions {
        let actor = match ins.actor {
            Actor::Searcher => "S",
            Actor::Flashlight => "F",
        };
        let kind = match ins.kind {
            InstructionKind::MoveAlongBoundary => "MOVE",
            InstructionKind::Jump => "JUMP",
            InstructionKind::Stay => "STAY",
        };
        let a = ins.from.point(polygon);
        let b = ins.to.point(polygon);
        let _ = writeln!(s, "{actor} {kind} {} {} -> {} {}", a.x, a.y, b.x, b.y);
    }
    s
}

/// Reads a schedule dump back against its polygon. The start is the first
/// instruction's source point.
pub fn parse_schedule(polygon: &Polygon, text: &str) -> Result<SearchSchedule, GeometryError> {
    let mut instructions = Vec::new();
    let mut searcher_distance = 0.0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let lineno = i + 1;
        let bad = |msg: &str| GeometryError::Parse { line: lineno, msg: msg.into() };
        let (head, tail) = line.split_once("->").ok_or_else(|| bad("missing '->'"))?;
        let mut toks = head.split_whitespace();
        let actor = match toks.next() {
            Some("S") => Actor::Searcher,
            Some("F") => Actor::Flashlight,
            _ => return Err(bad("actor must be S or F")),
        };
        let kind = match toks.next() {
            Some("MOVE") => InstructionKind::MoveAlongBoundary,
            Some("JUMP") => InstructionKind::Jump,
            Some("STAY") => InstructionKind::Stay,
            _ => return Err(bad("kind must be MOVE, JUMP or STAY")),
        };
        let rest: Vec<&str> = toks.collect();
        let a = parse_point(&rest.join(" "), lineno)?;
        let b = parse_point(tail, lineno)?;
        let locate = |p: Point2D| polygon.locate(p).ok_or_else(|| bad("point is not on the boundary"));
        let from = BoundaryPoint::new(polygon, locate(a)?);
        let to = BoundaryPoint::new(polygon, locate(b)?);
        if actor == Actor::Searcher && kind == InstructionKind::MoveAlongBoundary {
            let len = polygon.cw_distance(to.arclength, from.arclength);
            searcher_distance += if len <= polygon.eps() { polygon.perimeter() } else { len };
        }
        instructions.push(SearchInstruction { actor, kind, from, to });
    }
    let start = instructions.first().map(|i| i.from).unwrap_or_default();
    let m = instructions.len();
    Ok(SearchSchedule { start, instructions, searcher_distance, m })
}
