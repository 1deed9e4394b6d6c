//! Seed batches, parameter sweeps and result files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::auction::{best_response_gap, AuctionError, BidStrategy};
use crate::geometry::{
    bsa_search, format_schedule, is_boundary_1_searchable, lr_visible, oracle_searchable, schedule_verify, GeometryError, Polygon,
    SearchSchedule,
};
use crate::sim::{run, InvariantCounters, MetricsReport, Protocol, Scenario, SimError, ABSENT};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid sweep: {0}")]
    ScenarioInvalid(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("i/o failure: {0}")]
    IoFailure(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    SuCount,
    ObstacleCount,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::SuCount => "su_count",
            Axis::ObstacleCount => "obstacle_count",
        }
    }

    pub fn apply(self, s: &mut Scenario, value: usize) {
        match self {
            Axis::SuCount => s.su_count = value,
            Axis::ObstacleCount => s.obstacle_count = value,
        }
    }
}

impl FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "sucount" | "su" | "sus" => Ok(Axis::SuCount),
            "obstaclecount" | "obstacles" => Ok(Axis::ObstacleCount),
            _ => Err(CliError::ScenarioInvalid(format!("unknown axis {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: Scenario,
    pub axis: Axis,
    pub values: Vec<usize>,
    pub seeds: usize,
    pub protocols: Vec<Protocol>,
    pub master_seed: u64,
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
}

impl SweepSpec {
    pub fn new(base: Scenario, axis: Axis, values: Vec<usize>, seeds: usize, protocols: Vec<Protocol>) -> Self {
        Self { base, axis, values, seeds, protocols, master_seed: 1, threads: None }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.values.is_empty() {
            return Err(CliError::ScenarioInvalid("no axis values".into()));
        }
        if self.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::ScenarioInvalid("axis values must be strictly increasing".into()));
        }
        if self.seeds == 0 {
            return Err(CliError::ScenarioInvalid("seeds must be at least 1".into()));
        }
        if self.protocols.is_empty() {
            return Err(CliError::ScenarioInvalid("no protocols".into()));
        }
        if self.threads == Some(0) {
            return Err(CliError::ScenarioInvalid("threads must be at least 1".into()));
        }
        for &v in &self.values {
            let mut s = self.base.clone();
            self.axis.apply(&mut s, v);
            s.validate()?;
        }
        Ok(())
    }

    /// Parses a `key = value` sweep file. Keys `scenario`, `axis`, `values`,
    /// `seeds`, `protocols`, `master_seed` and `threads` describe the sweep;
    /// anything else overrides the base scenario.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self, CliError> {
        let mut scenario: Option<PathBuf> = None;
        let mut overrides = Vec::new();
        let mut axis = None;
        let mut values = None;
        let mut seeds = 20usize;
        let mut protocols = vec![Protocol::Oodt];
        let mut master_seed = 1u64;
        let mut threads = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |m: String| CliError::ScenarioInvalid(format!("line {}: {m}", i + 1));
            let (k, v) = line.split_once('=').ok_or_else(|| bad("expected key = value".into()))?;
            let (k, v) = (k.trim(), v.trim());
            match k {
                "scenario" => {
                    let p = PathBuf::from(v);
                    scenario = Some(match base_dir {
                        Some(b) if p.is_relative() => b.join(p),
                        _ => p,
                    });
                }
                "axis" => axis = Some(v.parse::<Axis>().map_err(|e| bad(e.to_string()))?),
                "values" => values = Some(parse_list::<usize>(v).map_err(bad)?),
                "seeds" => seeds = v.parse().map_err(|_| bad(format!("seeds: {v:?}")))?,
                "protocols" | "protocol" => protocols = parse_protocols(v).map_err(|e| bad(e.to_string()))?,
                "master_seed" => master_seed = v.parse().map_err(|_| bad(format!("master_seed: {v:?}")))?,
                "threads" => threads = Some(v.parse().map_err(|_| bad(format!("threads: {v:?}")))?),
                _ => overrides.push((i + 1, k.to_string(), v.to_string())),
            }
        }
        let mut base = match &scenario {
            Some(p) => Scenario::load(p)?,
            None => Scenario::default(),
        };
        for (line, k, v) in overrides {
            base.set(&k, &v, base_dir).map_err(|e| CliError::ScenarioInvalid(format!("line {line}: {e}")))?;
        }
        let spec = SweepSpec {
            base,
            axis: axis.ok_or_else(|| CliError::ScenarioInvalid("missing axis".into()))?,
            values: values.ok_or_else(|| CliError::ScenarioInvalid("missing values".into()))?,
            seeds,
            protocols,
            master_seed,
            threads,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::IoFailure(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent())
    }

    /// Per-run seeds; pairwise distinct and shared by every cell of the sweep.
    pub fn run_seeds(&self) -> Vec<u64> {
        derive_seeds(self.master_seed, self.seeds)
    }
}

fn parse_list<T: FromStr>(v: &str) -> Result<Vec<T>, String> {
    v.split(',').map(|x| x.trim().parse::<T>().map_err(|_| format!("bad list item {x:?}"))).collect()
}

pub fn parse_protocols(v: &str) -> Result<Vec<Protocol>, SimError> {
    let mut out: Vec<Protocol> = Vec::new();
    for p in v.split(',') {
        let p = p.trim().parse::<Protocol>()?;
        if !out.contains(&p) {
            out.push(p);
        }
    }
    Ok(out)
}

pub fn derive_seeds(master: u64, count: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    let mut out: Vec<u64> = Vec::with_capacity(count);
    while out.len() < count {
        let s = rng.next_u64();
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// Mean and 95% half-width of one metric over one sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub ci: f64,
}

impl Estimate {
    /// Student-t interval; the half-width is 0 for a single sample.
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        if xs.len() == 1 {
            return Some(Estimate { mean, ci: 0.0 });
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let t = StudentsT::new(0.0, 1.0, n - 1.0).expect("df >= 1").inverse_cdf(0.975);
        Some(Estimate { mean, ci: t * (var / n).sqrt() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub protocol: String,
    pub axis: String,
    pub value: usize,
    pub pdr: Estimate,
    /// Over runs that delivered something.
    pub delay: Option<Estimate>,
    pub cost: Option<Estimate>,
    pub lifetime: Estimate,
    pub friends: Estimate,
    pub runs: usize,
}

/// One finished simulation of a sweep.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub protocol: Protocol,
    pub value: usize,
    pub seed: u64,
    pub report: MetricsReport,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<AggregateRow>,
    pub runs: Vec<RunRecord>,
    /// Audit counters merged over every run.
    pub invariants: InvariantCounters,
}

impl SweepResult {
    pub fn row(&self, protocol: Protocol, value: usize) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.protocol == protocol.name() && r.value == value)
    }

    pub fn runs_of(&self, protocol: Protocol, value: usize) -> impl Iterator<Item = &RunRecord> {
        self.runs.iter().filter(move |r| r.protocol == protocol && r.value == value)
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<AggregateRow>, CliError> {
    Ok(execute_sweep(spec)?.rows)
}

pub fn execute_sweep(spec: &SweepSpec) -> Result<SweepResult, CliError> {
    spec.validate()?;
    let seeds = spec.run_seeds();
    let mut jobs = Vec::new();
    for &p in &spec.protocols {
        for &v in &spec.values {
            for &seed in &seeds {
                let mut s = spec.base.clone();
                spec.axis.apply(&mut s, v);
                s.protocol = p;
                s.seed = seed;
                s.trace = false;
                jobs.push((p, v, s));
            }
        }
    }
    let work = || -> Result<Vec<RunRecord>, CliError> {
        jobs.par_iter()
            .map(|(p, v, s)| Ok(RunRecord { protocol: *p, value: *v, seed: s.seed, report: run(s)? }))
            .collect()
    };
    let runs = match spec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::ScenarioInvalid(e.to_string()))?
            .install(work)?,
        None => work()?,
    };
    let mut invariants = InvariantCounters::default();
    for r in &runs {
        invariants.merge(&r.report.invariants);
    }
    let mut rows = Vec::new();
    for &p in &spec.protocols {
        for &v in &spec.values {
            let cell: Vec<&MetricsReport> = runs.iter().filter(|r| r.protocol == p && r.value == v).map(|r| &r.report).collect();
            let col = |f: &dyn Fn(&MetricsReport) -> Option<f64>| -> Vec<f64> { cell.iter().filter_map(|r| f(r)).collect() };
            rows.push(AggregateRow {
                protocol: p.name().to_string(),
                axis: spec.axis.name().to_string(),
                value: v,
                pdr: Estimate::of(&col(&|r| Some(r.pdr))).expect("seeds >= 1"),
                delay: Estimate::of(&col(&|r| r.avg_delay)),
                cost: Estimate::of(&col(&|r| r.expected_routing_cost)),
                lifetime: Estimate::of(&col(&|r| Some(r.network_lifetime))).expect("seeds >= 1"),
                friends: Estimate::of(&col(&|r| Some(r.friend_pairs as f64))).expect("seeds >= 1"),
                runs: cell.len(),
            });
        }
    }
    sort_rows(&mut rows);
    Ok(SweepResult { rows, runs, invariants })
}

pub fn sort_rows(rows: &mut [AggregateRow]) {
    rows.sort_by(|a, b| (&a.protocol, &a.axis, a.value).cmp(&(&b.protocol, &b.axis, b.value)));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::ScenarioInvalid(format!("unknown format {s:?}"))),
        }
    }
}

pub const CSV_HEADER: &str =
    "protocol,axis,value,pdr_mean,pdr_ci,delay_mean,delay_ci,cost_mean,cost_ci,lifetime_mean,lifetime_ci,friends_mean,friends_ci,runs";

fn cells(e: Option<Estimate>) -> (String, String) {
    match e {
        Some(e) => (e.mean.to_string(), e.ci.to_string()),
        None => (ABSENT.to_string(), ABSENT.to_string()),
    }
}

pub fn to_csv(rows: &[AggregateRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let (pm, pc) = cells(Some(r.pdr));
        let (dm, dc) = cells(r.delay);
        let (cm, cc) = cells(r.cost);
        let (lm, lc) = cells(Some(r.lifetime));
        let (fm, fc) = cells(Some(r.friends));
        let _ = writeln!(out, "{},{},{},{pm},{pc},{dm},{dc},{cm},{cc},{lm},{lc},{fm},{fc},{}", r.protocol, r.axis, r.value, r.runs);
    }
    out
}

pub fn from_csv(text: &str) -> Result<Vec<AggregateRow>, CliError> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(CliError::ScenarioInvalid("unexpected csv header".into()));
    }
    let bad = |m: &str| CliError::ScenarioInvalid(format!("csv: {m}"));
    let mut rows = Vec::new();
    for line in lines.filter(|l| !l.is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 14 {
            return Err(bad("wrong field count"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(s));
        let est = |m: &str, c: &str| -> Result<Option<Estimate>, CliError> {
            if m == ABSENT {
                Ok(None)
            } else {
                Ok(Some(Estimate { mean: num(m)?, ci: num(c)? }))
            }
        };
        let need = |e: Option<Estimate>| e.ok_or_else(|| bad("missing value"));
        rows.push(AggregateRow {
            protocol: f[0].to_string(),
            axis: f[1].to_string(),
            value: f[2].parse().map_err(|_| bad(f[2]))?,
            pdr: need(est(f[3], f[4])?)?,
            delay: est(f[5], f[6])?,
            cost: est(f[7], f[8])?,
            lifetime: need(est(f[9], f[10])?)?,
            friends: need(est(f[11], f[12])?)?,
            runs: f[13].parse().map_err(|_| bad(f[13]))?,
        });
    }
    Ok(rows)
}

pub fn to_json(rows: &[AggregateRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize") + "\n"
}

pub fn from_json(text: &str) -> Result<Vec<AggregateRow>, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::ScenarioInvalid(format!("json: {e}")))
}

pub fn render(rows: &[AggregateRow], format: Format) -> String {
    match format {
        Format::Csv => to_csv(rows),
        Format::Json => to_json(rows),
    }
}

pub fn emit(rows: &[AggregateRow], format: Format, path: &Path) -> Result<(), CliError> {
    if rows.is_empty() {
        return Err(CliError::ScenarioInvalid("nothing to emit".into()));
    }
    std::fs::write(path, render(rows, format)).map_err(|e| CliError::IoFailure(format!("{}: {e}", path.display())))
}

/// Worst best-response gap of one strategy at one bidder count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumCheck {
    pub strategy: BidStrategy,
    pub n: usize,
    pub max_gap: f64,
    pub worst_v: f64,
}

impl EquilibriumCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_gap <= tol
    }
}

/// Cost grid 0.05, 0.10, ..., 0.95.
pub fn cost_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 * 0.05).collect()
}

pub fn equilibrium_checks(ns: &[usize], step: f64) -> Result<Vec<EquilibriumCheck>, AuctionError> {
    let mut out = Vec::new();
    for strategy in [BidStrategy::Derived, BidStrategy::PaperLiteral] {
        for &n in ns {
            let mut worst = EquilibriumCheck { strategy, n, max_gap: 0.0, worst_v: f64::NAN };
            for v in cost_grid() {
                let g = best_response_gap(v, n, strategy, step)?;
                if worst.worst_v.is_nan() || g > worst.max_gap {
                    worst.max_gap = g;
                    worst.worst_v = v;
                }
            }
            out.push(worst);
        }
    }
    Ok(out)
}

pub fn equilibrium_report(checks: &[EquilibriumCheck], tol: f64) -> String {
    let mut out = String::from("strategy,n,max_gap,worst_v,verdict\n");
    for c in checks {
        let verdict = if c.passes(tol) { "ok" } else { "fail" };
        let _ = writeln!(out, "{:?},{},{:.6e},{:.2},{verdict}", c.strategy, c.n, c.max_gap, c.worst_v);
    }
    out
}

/// Searchability verdicts for one polygon.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryVerdict {
    pub vertices: usize,
    pub reflex: usize,
    pub lr_visible: bool,
    pub searchable: bool,
    pub oracle: bool,
    pub schedule: Option<SearchSchedule>,
    pub verified: Option<bool>,
}

pub fn check_polygon(polygon: &Polygon, resolution: usize) -> Result<GeometryVerdict, GeometryError> {
    let searchable = is_boundary_1_searchable(polygon);
    let (schedule, verified) = if searchable {
        let s = bsa_search(polygon)?;
        let ok = schedule_verify(polygon, &s)?;
        (Some(s), Some(ok))
    } else {
        (None, None)
    };
    Ok(GeometryVerdict {
        vertices: polygon.len(),
        reflex: polygon.reflex_vertices().len(),
        lr_visible: lr_visible(polygon),
        searchable,
        oracle: oracle_searchable(polygon, resolution),
        schedule,
        verified,
    })
}

pub fn geometry_report(polygons: &[Polygon], resolution: usize) -> Result<String, GeometryError> {
    let mut out = String::new();
    for (i, p) in polygons.iter().enumerate() {
        let v = check_polygon(p, resolution)?;
        let _ = writeln!(
            out,
            "polygon {i}: n={} reflex={} lr_visible={} searchable={} oracle={}",
            v.vertices, v.reflex, v.lr_visible, v.searchable, v.oracle
        );
        if let (Some(s), Some(ok)) = (&v.schedule, v.verified) {
            let _ = writeln!(out, "  schedule m={} searcher_distance={} verified={ok}", s.m, s.searcher_distance);
            for line in format_schedule(p, s).lines() {
                let _ = writeln!(out, "  {line}");
            }
        }
    }
    Ok(out)
}
