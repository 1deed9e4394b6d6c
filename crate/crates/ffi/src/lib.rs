//! C ABI over the polygon, auction and simulation engines.
//!
//! Every function returns an [`OodtStatus`]; results come back through out
//! pointers. Handles are opaque and must be released with their `_free`
//! function. After a failure [`oodt_last_error`] describes it.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use oodt_core::auction::{self, BidStrategy, RoutingWeights};
use oodt_core::geometry::{self, GeometryError, Point2D, Polygon, SearchSchedule};
use oodt_core::obstacles::{self, ObstacleMap};
use oodt_core::sim::{self, Scenario, SimError};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OodtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidPolygon = 3,
    NotSearchable = 4,
    InvalidScenario = 5,
    Io = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OodtBidStrategy {
    PaperLiteral = 0,
    Derived = 1,
}

/// Metrics of one run. Absent averages are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct OodtMetrics {
    pub pdr: f64,
    pub avg_delay: f64,
    pub routing_cost: f64,
    pub lifetime: f64,
    pub friend_pairs: u64,
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub violations: u64,
}

pub struct OodtPolygon(Polygon);

pub struct OodtSchedule(SearchSchedule);

pub struct OodtObstacleMap(ObstacleMap);

pub struct OodtScenario(Scenario);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn fail(status: OodtStatus, msg: impl Into<String>) -> OodtStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
    status
}

fn guard(f: impl FnOnce() -> OodtStatus) -> OodtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(OodtStatus::Panic, msg)
        }
    }
}

fn geometry_status(e: GeometryError) -> OodtStatus {
    let s = match e {
        GeometryError::NotSearchable | GeometryError::NoUnrestrictedStart | GeometryError::NotLRVisible => OodtStatus::NotSearchable,
        _ => OodtStatus::InvalidPolygon,
    };
    fail(s, e.to_string())
}

fn sim_status(e: SimError) -> OodtStatus {
    let s = match e {
        SimError::ConfigInvalid(_) => OodtStatus::InvalidScenario,
        SimError::Io(_) => OodtStatus::Io,
    };
    fail(s, e.to_string())
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, OodtStatus> {
    if p.is_null() {
        return Err(fail(OodtStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(OodtStatus::InvalidArgument, "string is not UTF-8"))
}

macro_rules! out_ptr {
    ($($p:ident),*) => {
        $(if $p.is_null() {
            return fail(OodtStatus::NullPointer, concat!("null ", stringify!($p)));
        })*
    };
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn oodt_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            ptr::copy_nonoverlapping(e.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Builds a polygon from `n` interleaved `x, y` pairs.
///
/// # Safety
/// `xy` must point to `2 * n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oodt_polygon_new(xy: *const f64, n: usize, out: *mut *mut OodtPolygon) -> OodtStatus {
    guard(|| {
        out_ptr!(xy, out);
        let coords = std::slice::from_raw_parts(xy, 2 * n);
        let pts: Vec<Point2D> = coords.chunks_exact(2).map(|c| Point2D::new(c[0], c[1])).collect();
        match Polygon::new(&pts) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(OodtPolygon(p)));
                OodtStatus::Ok
            }
            Err(e) => geometry_status(e),
        }
    })
}

/// # Safety
/// `p` must be null or come from [`oodt_polygon_new`] and not be freed yet.
#[no_mangle]
pub unsafe extern "C" fn oodt_polygon_free(p: *mut OodtPolygon) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live polygon handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oodt_polygon_searchable(p: *const OodtPolygon, out: *mut bool) -> OodtStatus {
    guard(|| {
        out_ptr!(p, out);
        *out = geometry::is_boundary_1_searchable(&(*p).0);
        OodtStatus::Ok
    })
}

/// Brute-force verdict on a `resolution`-sample boundary grid.
///
/// # Safety
/// `p` must be a live polygon handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oodt_polygon_oracle(p: *const OodtPolygon, resolution: usize, out: *mut bool) -> OodtStatus {
    guard(|| {
        out_ptr!(p, out);
        if resolution < 4 {
            return fail(OodtStatus::InvalidArgument, "resolution must be at least 4");
        }
        *out = geometry::oracle_searchable(&(*p).0, resolution);
        OodtStatus::Ok
    })
}

/// # Safety
/// `p` must be a live polygon handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oodt_polygon_search(p: *const OodtPolygon, out: *mut *mut OodtSchedule) -> OodtStatus {
    guard(|| {
        out_ptr!(p, out);
        match geometry::bsa_search(&(*p).0) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(OodtSchedule(s)));
                OodtStatus::Ok
            }
            Err(e) => geometry_status(e),
        }
    })
}

/// # Safety
/// `s` must be null or a schedule handle not freed yet.
#[no_mangle]
pub unsafe extern "C" fn oodt_schedule_free(s: *mut OodtSchedule) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Instruction count and searcher travel of a schedule.
///
/// # Safety
/// `s` must be a live schedule handle; the out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn oodt_schedule_stats(s: *const OodtSchedule, m: *mut usize, searcher_distance: *mut f64) -> OodtStatus {
    guard(|| {
        out_ptr!(s, m, searcher_distance);
        *m = (*s).0.m;
        *searcher_distance = (*s).0.searcher_distance;
        OodtStatus::Ok
    })
}

/// Replays the schedule against the polygon.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oodt_schedule_verify(p: *const OodtPolygon, s: *const OodtSchedule, out: *mut bool) -> OodtStatus {
    guard(|| {
        out_ptr!(p, s, out);
        match geometry::schedule_verify(&(*p).0, &(*s).0) {
            Ok(ok) => {
                *out = ok;
                OodtStatus::Ok
            }
            Err(e) => geometry_status(e),
        }
    })
}

/// Parses an obstacle file body.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oodt_obstacles_parse(text: *const c_char, out: *mut *mut OodtObstacleMap) -> OodtStatus {
    guard(|| {
        out_ptr!(out);
        let t = match self::text(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ObstacleMap::parse(t) {
            Ok(m) => {
                *out = Box::into_raw(Box::new(OodtObstacleMap(m)));
                OodtStatus::Ok
            }
            Err(e) => fail(OodtStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `m` must be null or a map handle not freed yet.
#[no_mangle]
pub unsafe extern "C" fn oodt_obstacles_free(m: *mut OodtObstacleMap) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live map handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oodt_los_clear(m: *const OodtObstacleMap, ax: f64, ay: f64, bx: f64, by: f64, out: *mut bool) -> OodtStatus {
    guard(|| {
        out_ptr!(m, out);
        match obstacles::los_clear(&(*m).0, Point2D::new(ax, ay), Point2D::new(bx, by)) {
            Ok(c) => {
                *out = c;
                OodtStatus::Ok
            }
            Err(e) => fail(OodtStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Routing metric of one neighbor.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oodt_routing_metric(
    phi1: f64,
    phi2: f64,
    phi3: f64,
    etx: f64,
    e_ic: f64,
    st: f64,
    out: *mut f64,
) -> OodtStatus {
    guard(|| {
        out_ptr!(out);
        match RoutingWeights::new(phi1, phi2, phi3) {
            Ok(w) => {
                *out = auction::oodt_metric(&w, etx, e_ic, st);
                OodtStatus::Ok
            }
            Err(e) => fail(OodtStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Equilibrium bid for normalized cost `v` among `n` bidders.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oodt_equilibrium_bid(v: f64, n: usize, strategy: OodtBidStrategy, out: *mut f64) -> OodtStatus {
    guard(|| {
        out_ptr!(out);
        let s = match strategy {
            OodtBidStrategy::PaperLiteral => BidStrategy::PaperLiteral,
            OodtBidStrategy::Derived => BidStrategy::Derived,
        };
        match auction::equilibrium_bid(v, n, s) {
            Ok(b) => {
                *out = b;
                OodtStatus::Ok
            }
            Err(e) => fail(OodtStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Default scenario.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oodt_scenario_new(out: *mut *mut OodtScenario) -> OodtStatus {
    guard(|| {
        out_ptr!(out);
        *out = Box::into_raw(Box::new(OodtScenario(Scenario::default())));
        OodtStatus::Ok
    })
}

/// Scenario from `key = value` text; relative paths resolve against the
/// working directory.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oodt_scenario_parse(text: *const c_char, out: *mut *mut OodtScenario) -> OodtStatus {
    guard(|| {
        out_ptr!(out);
        let t = match self::text(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match Scenario::parse(t, None) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(OodtScenario(s)));
                OodtStatus::Ok
            }
            Err(e) => sim_status(e),
        }
    })
}

/// Sets one scenario key. The scenario is left unchanged if the result
/// would be invalid.
///
/// # Safety
/// `s` must be a live scenario handle; `key` and `value` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn oodt_scenario_set(s: *mut OodtScenario, key: *const c_char, value: *const c_char) -> OodtStatus {
    guard(|| {
        out_ptr!(s);
        let (k, v) = match (self::text(key), self::text(value)) {
            (Ok(k), Ok(v)) => (k, v),
            (Err(e), _) | (_, Err(e)) => return e,
        };
        let mut next = (*s).0.clone();
        match next.set(k, v, None).and_then(|_| next.validate()) {
            Ok(()) => {
                (*s).0 = next;
                OodtStatus::Ok
            }
            Err(e) => sim_status(e),
        }
    })
}

/// # Safety
/// `s` must be null or a scenario handle not freed yet.
#[no_mangle]
pub unsafe extern "C" fn oodt_scenario_free(s: *mut OodtScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Runs the scenario to completion.
///
/// # Safety
/// `s` must be a live scenario handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oodt_run(s: *const OodtScenario, out: *mut OodtMetrics) -> OodtStatus {
    guard(|| {
        out_ptr!(s, out);
        match sim::run(&(*s).0) {
            Ok(r) => {
                *out = OodtMetrics {
                    pdr: r.pdr,
                    avg_delay: r.avg_delay.unwrap_or(f64::NAN),
                    routing_cost: r.expected_routing_cost.unwrap_or(f64::NAN),
                    lifetime: r.network_lifetime,
                    friend_pairs: r.friend_pairs as u64,
                    generated: r.counters.generated,
                    delivered: r.counters.delivered,
                    dropped: r.counters.dropped,
                    violations: r.invariants.violations(),
                };
                OodtStatus::Ok
            }
            Err(e) => sim_status(e),
        }
    })
}
