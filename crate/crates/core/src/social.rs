//! Social ties, per-packet energy and ETX.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::obstacles::NodeId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SocialError {
    #[error("contact must satisfy start < end (got {0} .. {1})")]
    InvalidContact(f64, f64),
    #[error("contact of a node with itself ({0})")]
    SelfContact(NodeId),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// One encounter, with `node_a < node_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEvent {
    pub node_a: NodeId,
    pub node_b: NodeId,
    pub start: f64,
    pub end: f64,
}

impl ContactEvent {
    pub fn new(a: NodeId, b: NodeId, start: f64, end: f64) -> Result<Self, SocialError> {
        if a == b {
            return Err(SocialError::SelfContact(a));
        }
        if !(start < end) || !start.is_finite() || !end.is_finite() {
            return Err(SocialError::InvalidContact(start, end));
        }
        Ok(Self { node_a: a.min(b), node_b: a.max(b), start, end })
    }
}

fn pair(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    (a.min(b), a.max(b))
}

/// Append-only encounter log indexed by unordered pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ContactHistory {
    by_pair: BTreeMap<(NodeId, NodeId), Vec<(f64, f64)>>,
    open: BTreeMap<(NodeId, NodeId), f64>,
}

impl ContactHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, c: ContactEvent) {
        let v = self.by_pair.entry((c.node_a, c.node_b)).or_default();
        v.push((c.start, c.end));
        v.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    }

    /// Marks the pair as in contact from `now` until [`ContactHistory::close`].
    pub fn open(&mut self, a: NodeId, b: NodeId, now: f64) {
        self.open.entry(pair(a, b)).or_insert(now);
    }

    pub fn close(&mut self, a: NodeId, b: NodeId, now: f64) {
        if let Some(start) = self.open.remove(&pair(a, b)) {
            if now > start {
                self.by_pair.entry(pair(a, b)).or_default().push((start, now));
            }
        }
    }

    pub fn is_open(&self, a: NodeId, b: NodeId) -> bool {
        self.open.contains_key(&pair(a, b))
    }

    /// Closed contacts plus any contact still open at `now`, clipped to `now`.
    pub fn intervals(&self, a: NodeId, b: NodeId, now: f64) -> Vec<(f64, f64)> {
        let mut v = self.by_pair.get(&pair(a, b)).cloned().unwrap_or_default();
        if let Some(&s) = self.open.get(&pair(a, b)) {
            v.push((s, now.max(s)));
        }
        v
    }

    pub fn events(&self) -> Vec<ContactEvent> {
        let mut out: Vec<ContactEvent> = self
            .by_pair
            .iter()
            .flat_map(|(&(a, b), v)| v.iter().map(move |&(s, e)| ContactEvent { node_a: a, node_b: b, start: s, end: e }))
            .collect();
        out.sort_by(|x, y| x.start.partial_cmp(&y.start).unwrap().then((x.node_a, x.node_b).cmp(&(y.node_a, y.node_b))));
        out
    }

    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.by_pair.keys().copied().chain(self.open.keys().copied())
    }

    /// Parses `node_a,node_b,start_s,end_s` rows; a header row is optional.
    pub fn parse_csv(text: &str) -> Result<Self, SocialError> {
        let mut h = Self::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("node_a")) {
                continue;
            }
            let bad = |msg: String| SocialError::Parse { line: i + 1, msg };
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 4 {
                return Err(bad(format!("expected 4 fields, got {}", f.len())));
            }
            let a: NodeId = f[0].parse().map_err(|_| bad(format!("bad node id {:?}", f[0])))?;
            let b: NodeId = f[1].parse().map_err(|_| bad(format!("bad node id {:?}", f[1])))?;
            let s: f64 = f[2].parse().map_err(|_| bad(format!("bad time {:?}", f[2])))?;
            let e: f64 = f[3].parse().map_err(|_| bad(format!("bad time {:?}", f[3])))?;
            h.push(ContactEvent::new(a, b, s, e).map_err(|e| bad(e.to_string()))?);
        }
        Ok(h)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("node_a,node_b,start_s,end_s\n");
        for c in self.events() {
            let _ = writeln!(s, "{},{},{},{}", c.node_a, c.node_b, c.start, c.end);
        }
        s
    }
}

/// Community-structured synthetic trace: pairs in the same community meet
/// `intra_rate` times per second on average, others `inter_rate`; contacts
/// last an exponential time with mean `mean_duration`.
pub fn synthetic_trace<R: Rng + ?Sized>(
    rng: &mut R,
    nodes: usize,
    communities: usize,
    duration: f64,
    intra_rate: f64,
    inter_rate: f64,
    mean_duration: f64,
) -> ContactHistory {
    let communities = communities.max(1);
    let group: Vec<usize> = (0..nodes).map(|_| rng.gen_range(0..communities)).collect();
    let dur = Exp::new(1.0 / mean_duration).expect("positive mean duration");
    let mut h = ContactHistory::new();
    for a in 0..nodes {
        for b in (a + 1)..nodes {
            let rate = if group[a] == group[b] { intra_rate } else { inter_rate };
            if rate <= 0.0 {
                continue;
            }
            let gap = Exp::new(rate).expect("positive rate");
            let mut t = gap.sample(rng);
            while t < duration {
                let end = (t + dur.sample(rng).max(1e-3)).min(duration);
                if end > t {
                    h.push(ContactEvent { node_a: a, node_b: b, start: t, end });
                }
                t = end + gap.sample(rng);
            }
        }
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocialParams {
    pub chi: f64,
    pub window: f64,
}

impl SocialParams {
    pub fn new(chi: f64, window: f64) -> Result<Self, SocialError> {
        if !(0.0..=1.0).contains(&chi) {
            return Err(SocialError::InvalidParams(format!("chi = {chi} outside [0, 1]")));
        }
        if !(window > 0.0) {
            return Err(SocialError::InvalidParams(format!("window = {window} must be positive")));
        }
        Ok(Self { chi, window })
    }
}

impl Default for SocialParams {
    fn default() -> Self {
        Self { chi: 0.5, window: 10.0 }
    }
}

/// Average waiting time until the next contact over `[t0, t0 + window]`, in
/// seconds. Zero while in contact; after the last contact the wait runs to the
/// end of the window.
pub fn spm_raw(intervals: &[(f64, f64)], t0: f64, window: f64) -> f64 {
    let t1 = t0 + window;
    let mut clipped: Vec<(f64, f64)> =
        intervals.iter().map(|&(s, e)| (s.max(t0), e.min(t1))).filter(|&(s, e)| e > s).collect();
    clipped.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (s, e) in clipped {
        match merged.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => merged.push((s, e)),
        }
    }
    // Each gap [a, b) before a contact start (or the window end) contributes
    // the integral of (b - t), i.e. (b - a)^2 / 2.
    let mut area = 0.0;
    let mut cursor = t0;
    for &(s, e) in &merged {
        area += 0.5 * (s - cursor).powi(2);
        cursor = e;
    }
    area += 0.5 * (t1 - cursor).powi(2);
    area / window
}

/// Social pressure metric squashed into `(0, 1]` as `1 / (1 + raw)`.
pub fn spm(history: &ContactHistory, i: NodeId, j: NodeId, t0: f64, window: f64) -> f64 {
    let raw = spm_raw(&history.intervals(i, j, t0 + window), t0, window);
    1.0 / (1.0 + raw)
}

/// Common observed neighbors over the total observed count; zero when both
/// sets are empty.
pub fn socsim(observed_i: &BTreeSet<NodeId>, observed_j: &BTreeSet<NodeId>) -> f64 {
    let total = observed_i.len() + observed_j.len();
    if total == 0 {
        return 0.0;
    }
    observed_i.intersection(observed_j).count() as f64 / total as f64
}

pub fn social_tie(params: &SocialParams, spm_val: f64, socsim_val: f64) -> f64 {
    params.chi * spm_val + (1.0 - params.chi) * socsim_val
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyParams {
    pub e_forward: f64,
    pub e_receive: f64,
    pub e_ack: f64,
    pub e_initial: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self { e_forward: 3.6e-3, e_receive: 1.8e-3, e_ack: 0.16e-3, e_initial: 300.0 }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<(), SocialError> {
        let all = [self.e_forward, self.e_receive, self.e_ack, self.e_initial];
        if all.iter().all(|&e| e > 0.0 && e.is_finite()) {
            Ok(())
        } else {
            Err(SocialError::InvalidParams("energy values must be positive".into()))
        }
    }
}

/// Energy to forward one packet to `n_i` listening neighbors.
pub fn energy_tx_cost(params: &EnergyParams, n_i: usize) -> f64 {
    params.e_forward + n_i as f64 * params.e_receive + params.e_ack
}

/// Residual energy per node and the time each first ran dry.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBook {
    pub residual: Vec<f64>,
    pub death_time: Vec<Option<f64>>,
    pub debited: f64,
}

impl EnergyBook {
    pub fn new(nodes: usize, initial: f64) -> Self {
        Self { residual: vec![initial; nodes], death_time: vec![None; nodes], debited: 0.0 }
    }

    pub fn debit(&mut self, node: NodeId, amount: f64, now: f64) {
        let amount = amount.max(0.0);
        self.residual[node] -= amount;
        self.debited += amount;
        if self.residual[node] <= 0.0 && self.death_time[node].is_none() {
            self.death_time[node] = Some(now);
        }
    }

    pub fn alive(&self, node: NodeId) -> bool {
        self.death_time[node].is_none()
    }

    pub fn first_death(&self) -> Option<f64> {
        self.death_time.iter().flatten().copied().reduce(f64::min)
    }
}

/// Expected transmission count of a link; infinite when either direction never
/// delivers.
pub fn etx_link(p_forward: f64, p_reverse: f64) -> f64 {
    if p_forward <= 0.0 || p_reverse <= 0.0 {
        return f64::INFINITY;
    }
    1.0 / (p_forward * p_reverse)
}

/// Undirected weighted graph of link ETX values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EtxGraph {
    adj: Vec<Vec<(NodeId, f64)>>,
}

impl EtxGraph {
    pub fn new(nodes: usize) -> Self {
        Self { adj: vec![Vec::new(); nodes] }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    /// Adds an undirected link; infinite weights are ignored.
    pub fn add_link(&mut self, a: NodeId, b: NodeId, etx: f64) {
        if etx.is_finite() && a != b {
            self.adj[a].push((b, etx));
            self.adj[b].push((a, etx));
        }
    }

    pub fn neighbors(&self, a: NodeId) -> &[(NodeId, f64)] {
        &self.adj[a]
    }

    pub fn link(&self, a: NodeId, b: NodeId) -> Option<f64> {
        self.adj[a].iter().filter(|e| e.0 == b).map(|e| e.1).reduce(f64::min)
    }

    /// Shortest-ETX distance from every node to `dst`.
    pub fn distances_to(&self, dst: NodeId) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.adj.len()];
        dist[dst] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((OrdF64(0.0), dst)));
        while let Some(Reverse((OrdF64(d), u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &self.adj[u] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse((OrdF64(nd), v)));
                }
            }
        }
        dist
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Minimum total ETX from `src` to `dst`; infinite when disconnected.
pub fn etx_to_destination(graph: &EtxGraph, src: NodeId, dst: NodeId) -> f64 {
    graph.distances_to(dst)[src]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spm_closed_forms() {
        let t = 10.0;
        assert_eq!(spm_raw(&[(0.0, t)], 0.0, t), 0.0);
        assert!((spm_raw(&[], 0.0, t) - t / 2.0).abs() < 1e-12);
        assert!((spm_raw(&[(0.0, t / 2.0)], 0.0, t) - t / 8.0).abs() < 1e-12);
    }

    #[test]
    fn energy_book_records_first_death() {
        let mut b = EnergyBook::new(2, 1.0);
        b.debit(0, 0.6, 1.0);
        b.debit(0, 0.6, 2.0);
        b.debit(0, 0.6, 3.0);
        assert_eq!(b.death_time[0], Some(2.0));
        assert_eq!(b.first_death(), Some(2.0));
        assert!(b.alive(1));
    }
}
