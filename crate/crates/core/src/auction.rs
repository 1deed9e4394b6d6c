//! Routing metric, forwarder-set selection and the relay auction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use thiserror::Error;

use crate::obstacles::NodeId;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuctionError {
    #[error("routing weights must lie in (0, 1] and sum to 1")]
    InvalidWeights,
    #[error("invalid auction parameter: {0}")]
    InvalidParams(String),
    #[error("no finite metric to average")]
    AllExcluded,
    #[error("no neighbor qualifies as a candidate")]
    EmptyCandidateSet,
    #[error("an auction needs more bidders than {0}")]
    TooFewBidders(usize),
    #[error("no common channel")]
    NoCommonChannel,
    #[error("{0} candidates exceed the enumeration limit")]
    TooManyCandidates(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoutingWeights {
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
}

impl RoutingWeights {
    pub fn new(phi1: f64, phi2: f64, phi3: f64) -> Result<Self, AuctionError> {
        let ok = [phi1, phi2, phi3].iter().all(|&p| p > 0.0 && p <= 1.0) && (phi1 + phi2 + phi3 - 1.0).abs() <= 1e-9;
        if ok {
            Ok(Self { phi1, phi2, phi3 })
        } else {
            Err(AuctionError::InvalidWeights)
        }
    }
}

impl Default for RoutingWeights {
    fn default() -> Self {
        Self { phi1: 0.4, phi2: 0.3, phi3: 0.3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BidStrategy {
    /// `1/(n-1) + (n-2)/(n-1) v`.
    PaperLiteral,
    /// `1/n + (n-1)/n v`, the symmetric equilibrium for uniform costs.
    Derived,
}

impl std::str::FromStr for BidStrategy {
    type Err = AuctionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "paperliteral" | "literal" | "paper" => Ok(Self::PaperLiteral),
            "derived" => Ok(Self::Derived),
            _ => Err(AuctionError::InvalidParams(format!("unknown bid strategy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuctionParams {
    pub alpha: f64,
    pub epsilon_clamp: f64,
    pub bid_strategy: BidStrategy,
}

impl Default for AuctionParams {
    fn default() -> Self {
        Self { alpha: 0.01, epsilon_clamp: 0.01, bid_strategy: BidStrategy::PaperLiteral }
    }
}

impl AuctionParams {
    pub fn validate(&self) -> Result<(), AuctionError> {
        if !(self.alpha > 0.0) {
            return Err(AuctionError::InvalidParams(format!("alpha = {}", self.alpha)));
        }
        if !(self.epsilon_clamp > 0.0 && self.epsilon_clamp < 0.5) {
            return Err(AuctionError::InvalidParams(format!("epsilon_clamp = {}", self.epsilon_clamp)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CfsClass {
    Primary,
    Backup,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateEntry {
    pub node: NodeId,
    pub oodt_value: f64,
    pub cost_theta: f64,
    pub cost_v: f64,
    pub bid: f64,
    pub cfs_class: CfsClass,
    pub priority: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidatePartition {
    pub cfs1: Vec<CandidateEntry>,
    pub cfs2: Vec<CandidateEntry>,
}

impl CandidatePartition {
    pub fn len(&self) -> usize {
        self.cfs1.len() + self.cfs2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All entries by ascending priority.
    pub fn ranked(&self) -> Vec<CandidateEntry> {
        let mut v: Vec<CandidateEntry> = self.cfs1.iter().chain(&self.cfs2).copied().collect();
        v.sort_by_key(|e| e.priority);
        v
    }

    pub fn is_disjoint(&self) -> bool {
        let a: BTreeSet<NodeId> = self.cfs1.iter().map(|e| e.node).collect();
        self.cfs2.iter().all(|e| !a.contains(&e.node))
    }
}

/// Per-node channel sets and per-channel availability.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChannelView {
    pub channels: BTreeMap<NodeId, BTreeSet<usize>>,
    pub availability: Vec<f64>,
}

impl ChannelView {
    pub fn of(&self, node: NodeId) -> BTreeSet<usize> {
        self.channels.get(&node).cloned().unwrap_or_default()
    }

    pub fn common(&self, a: NodeId, b: NodeId) -> BTreeSet<usize> {
        match (self.channels.get(&a), self.channels.get(&b)) {
            (Some(x), Some(y)) => x.intersection(y).copied().collect(),
            _ => BTreeSet::new(),
        }
    }
}

/// Stationary idle fraction of an exponential ON/OFF channel.
pub fn channel_availability(lambda_busy: f64, lambda_idle: f64) -> f64 {
    let idle = 1.0 / lambda_idle;
    let busy = 1.0 / lambda_busy;
    idle / (idle + busy)
}

/// Metrics below this social tie are treated as a pole.
pub const MIN_TIE: f64 = 1e-9;

pub fn oodt_metric(w: &RoutingWeights, etx: f64, e_ic: f64, st: f64) -> f64 {
    if st <= MIN_TIE || !etx.is_finite() {
        return f64::INFINITY;
    }
    w.phi1 * etx + w.phi2 * e_ic + w.phi3 / st
}

/// Mean of the finite metric values.
pub fn oodt_threshold(values: &[f64]) -> Result<f64, AuctionError> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Err(AuctionError::AllExcluded);
    }
    Ok(finite.iter().sum::<f64>() / finite.len() as f64)
}

/// Average tie over the candidate set plus onward ETX and weighted energy.
pub fn candidate_cost(st_values: &[f64], etx_i: f64, e_ic: f64, params: &AuctionParams) -> f64 {
    let st = if st_values.is_empty() { 0.0 } else { st_values.iter().sum::<f64>() / st_values.len() as f64 };
    st + etx_i + params.alpha * e_ic
}

/// Cost scaled by its largest plausible value and clamped into `[eps, 1 - eps]`.
pub fn normalized_cost(theta: f64, st_term: f64, etx_s: f64, params: &AuctionParams, e_initial: f64) -> f64 {
    let denom = st_term + etx_s + params.alpha * e_initial;
    let eps = params.epsilon_clamp;
    let v = if denom > 0.0 && denom.is_finite() { theta / denom } else { 1.0 };
    if v.is_nan() {
        return 1.0 - eps;
    }
    v.clamp(eps, 1.0 - eps)
}

pub fn equilibrium_bid(v: f64, n: usize, strategy: BidStrategy) -> Result<f64, AuctionError> {
    match strategy {
        BidStrategy::PaperLiteral => {
            if n < 2 {
                return Err(AuctionError::TooFewBidders(n));
            }
            let k = (n - 1) as f64;
            Ok(1.0 / k + (n as f64 - 2.0) / k * v)
        }
        BidStrategy::Derived => {
            if n < 1 {
                return Err(AuctionError::TooFewBidders(n));
            }
            let k = n as f64;
            Ok(1.0 / k + (k - 1.0) / k * v)
        }
    }
}

pub fn payoff(b: f64, v: f64, won: bool) -> f64 {
    if won {
        b - v
    } else {
        0.0
    }
}

/// Expected payoff of bidding `b` with cost `v` when the other `n - 1`
/// bidders draw uniform costs and follow `strategy`; the lowest bid wins.
pub fn expected_payoff(b: f64, v: f64, n: usize, strategy: BidStrategy) -> f64 {
    // Both strategies are affine in v: bid = c + s v.
    let (c, s) = match strategy {
        BidStrategy::PaperLiteral => {
            let k = (n - 1) as f64;
            (1.0 / k, (n as f64 - 2.0) / k)
        }
        BidStrategy::Derived => {
            let k = n as f64;
            (1.0 / k, (k - 1.0) / k)
        }
    };
    // Probability that one rival bids at most b.
    let below = if s > 0.0 {
        ((b - c) / s).clamp(0.0, 1.0)
    } else if b >= c {
        1.0
    } else {
        0.0
    };
    (b - v) * (1.0 - below).powi(n as i32 - 1)
}

/// Objective gap between the best grid response and the strategy's own bid.
pub fn best_response_gap(v: f64, n: usize, strategy: BidStrategy, step: f64) -> Result<f64, AuctionError> {
    let own = equilibrium_bid(v, n, strategy)?;
    let steps = (1.0 / step).round() as usize;
    let best = (0..=steps)
        .map(|k| expected_payoff(k as f64 * step, v, n, strategy))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((best - expected_payoff(own, v, n, strategy)).max(0.0))
}

/// Ascending bid, then metric, then node id; primaries before backups on
/// equal bids. Priorities are renumbered from 1.
pub fn prioritize(entries: &[CandidateEntry]) -> Vec<CandidateEntry> {
    let mut v = entries.to_vec();
    v.sort_by(|a, b| {
        a.bid
            .total_cmp(&b.bid)
            .then(a.cfs_class.cmp(&b.cfs_class))
            .then(a.oodt_value.total_cmp(&b.oodt_value))
            .then(a.node.cmp(&b.node))
    });
    for (i, e) in v.iter_mut().enumerate() {
        e.priority = i + 1;
    }
    v
}

/// A neighbor as seen by a sender for one destination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborMetric {
    pub node: NodeId,
    pub oodt: f64,
    /// Social tie with the sender.
    pub st: f64,
    /// Onward ETX from this neighbor to the destination.
    pub etx_to_dst: f64,
    pub e_ic: f64,
}

/// Sender-side quantities shared by every bidder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SenderContext {
    pub sender: NodeId,
    pub etx_s: f64,
    pub e_initial: f64,
}

/// Neighbors passing the threshold and both channel checks.
pub fn fsa_accept(
    sender: NodeId,
    neighbors: &[NeighborMetric],
    channels: &ChannelView,
    adjacency: &[Vec<NodeId>],
) -> Result<Vec<NeighborMetric>, AuctionError> {
    let theta = oodt_threshold(&neighbors.iter().map(|n| n.oodt).collect::<Vec<_>>())
        .map_err(|_| AuctionError::EmptyCandidateSet)?;
    let own = channels.of(sender);
    let accepted: Vec<NeighborMetric> = neighbors
        .iter()
        .copied()
        .filter(|n| n.oodt.is_finite() && n.oodt <= theta)
        .filter(|n| !own.is_disjoint(&channels.of(n.node)))
        .filter(|n| {
            let mine = channels.of(n.node);
            adjacency
                .get(n.node)
                .map_or(false, |adj| adj.iter().any(|&k| k != n.node && !mine.is_disjoint(&channels.of(k))))
        })
        .collect();
    if accepted.is_empty() {
        Err(AuctionError::EmptyCandidateSet)
    } else {
        Ok(accepted)
    }
}

/// Forwarder-set selection for one sender: filter, split into primary and
/// backup sets, then price and rank every accepted candidate.
pub fn fsa_select(
    ctx: &SenderContext,
    neighbors: &[NeighborMetric],
    channels: &ChannelView,
    adjacency: &[Vec<NodeId>],
    shared_membership: &BTreeMap<NodeId, usize>,
    params: &AuctionParams,
) -> Result<CandidatePartition, AuctionError> {
    let accepted = fsa_accept(ctx.sender, neighbors, channels, adjacency)?;
    let n = accepted.len();
    let ties: Vec<f64> = accepted.iter().map(|a| a.st).collect();
    let st_term = ties.iter().sum::<f64>() / n as f64;
    let entries: Vec<CandidateEntry> = accepted
        .iter()
        .map(|a| {
            let theta = candidate_cost(&ties, a.etx_to_dst, a.e_ic, params);
            let v = normalized_cost(theta, st_term, ctx.etx_s, params, ctx.e_initial);
            let bid = if n == 1 { 1.0 } else { equilibrium_bid(v, n, params.bid_strategy).unwrap_or(1.0) };
            let class = if shared_membership.get(&a.node).copied().unwrap_or(0) >= 2 {
                CfsClass::Backup
            } else {
                CfsClass::Primary
            };
            CandidateEntry {
                node: a.node,
                oodt_value: a.oodt,
                cost_theta: theta,
                cost_v: v,
                bid,
                cfs_class: class,
                priority: 0,
            }
        })
        .collect();
    let ranked = prioritize(&entries);
    let (cfs1, cfs2) = ranked.into_iter().partition(|e| e.cfs_class == CfsClass::Primary);
    Ok(CandidatePartition { cfs1, cfs2 })
}

/// Samples one channel with probability proportional to availability.
pub fn channel_select<R: Rng + ?Sized>(
    view: &ChannelView,
    usable: &BTreeSet<usize>,
    rng: &mut R,
) -> Result<usize, AuctionError> {
    if usable.is_empty() {
        return Err(AuctionError::NoCommonChannel);
    }
    let chans: Vec<usize> = usable.iter().copied().collect();
    let weights: Vec<f64> = chans.iter().map(|&c| view.availability.get(c).copied().unwrap_or(0.0).max(0.0)).collect();
    match WeightedIndex::new(&weights) {
        Ok(d) => Ok(chans[d.sample(rng)]),
        Err(_) => Ok(chans[rng.gen_range(0..chans.len())]),
    }
}

/// Exhaustive search over all subsets of `0..n`. Ties go to the
/// lexicographically smallest index list.
pub fn brute_force_best_subset<F>(n: usize, utility: F, max_n: usize) -> Result<Vec<usize>, AuctionError>
where
    F: Fn(&[usize]) -> f64,
{
    if n > max_n.min(16) {
        return Err(AuctionError::TooManyCandidates(n));
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    for mask in 0u32..(1u32 << n) {
        let subset: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let u = utility(&subset);
        let better = match &best {
            None => true,
            Some((bu, bs)) => u > *bu || (u == *bu && subset < *bs),
        };
        if better {
            best = Some((u, subset));
        }
    }
    Ok(best.map(|b| b.1).unwrap_or_default())
}

/// CSV lines `round,sender,candidate,oodt,theta,v,bid,class,priority`.
pub fn trace_rows(round: u64, sender: NodeId, partition: &CandidatePartition) -> String {
    let mut s = String::new();
    for e in partition.ranked() {
        let class = match e.cfs_class {
            CfsClass::Primary => "cfs1",
            CfsClass::Backup => "cfs2",
        };
        let _ = writeln!(
            s,
            "{round},{sender},{},{},{},{},{},{class},{}",
            e.node, e.oodt_value, e.cost_theta, e.cost_v, e.bid, e.priority
        );
    }
    s
}

pub const TRACE_HEADER: &str = "round,sender,candidate,oodt,theta,v,bid,class,priority";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_bid_degenerates_at_two() {
        for v in [0.1, 0.5, 0.9] {
            assert_eq!(equilibrium_bid(v, 2, BidStrategy::PaperLiteral).unwrap(), 1.0);
        }
        assert_eq!(equilibrium_bid(0.5, 1, BidStrategy::PaperLiteral), Err(AuctionError::TooFewBidders(1)));
        assert_eq!(equilibrium_bid(0.5, 1, BidStrategy::Derived).unwrap(), 1.0);
    }

    #[test]
    fn availability_closed_form() {
        assert_eq!(channel_availability(10.0, 10.0), 0.5);
        assert!((channel_availability(9.0, 1.0) - 0.9).abs() < 1e-12);
    }
}
