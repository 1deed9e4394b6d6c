use std::collections::{BTreeMap, BTreeSet};

use oodt_core::auction::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Recursive include/exclude enumerator.
pub fn recursive_best(n: usize, u: &dyn Fn(&[usize]) -> f64) -> Vec<usize> {
    fn go(i: usize, n: usize, cur: &mut Vec<usize>, u: &dyn Fn(&[usize]) -> f64, all: &mut Vec<(f64, Vec<usize>)>) {
        if i == n {
            all.push((u(cur), cur.clone()));
            return;
        }
        cur.push(i);
        go(i + 1, n, cur, u, all);
        cur.pop();
        go(i + 1, n, cur, u, all);
    }
    let mut all = Vec::new();
    go(0, n, &mut Vec::new(), u, &mut all);
    let top = all.iter().map(|a| a.0).fold(f64::NEG_INFINITY, f64::max);
    all.into_iter().filter(|a| a.0 == top).map(|a| a.1).min().unwrap()
}

/// Step-by-step candidate selection: threshold, channel tests, class split, pricing.
pub fn reference_fsa(
    ctx: &SenderContext,
    neighbors: &[NeighborMetric],
    channels: &ChannelView,
    adjacency: &[Vec<usize>],
    shared: &BTreeMap<usize, usize>,
    params: &AuctionParams,
) -> Option<(Vec<usize>, Vec<usize>, Vec<f64>)> {
    let mut sum = 0.0;
    let mut count = 0;
    for n in neighbors {
        if n.oodt.is_finite() {
            sum += n.oodt;
            count += 1;
        }
    }
    if count == 0 {
        return None;
    }
    let threshold = sum / count as f64;
    let empty = BTreeSet::new();
    let ch = |v: usize| channels.channels.get(&v).unwrap_or(&empty);
    let mut accepted = Vec::new();
    for n in neighbors {
        if !(n.oodt <= threshold) {
            continue;
        }
        if ch(ctx.sender).intersection(ch(n.node)).next().is_none() {
            continue;
        }
        let mut onward = false;
        for &k in &adjacency[n.node] {
            if k != n.node && ch(n.node).intersection(ch(k)).next().is_some() {
                onward = true;
            }
        }
        if onward {
            accepted.push(*n);
        }
    }
    if accepted.is_empty() {
        return None;
    }
    let size = accepted.len() as f64;
    let mean_st = accepted.iter().map(|a| a.st).sum::<f64>() / size;
    let mut priced: Vec<(f64, bool, f64, usize)> = Vec::new();
    for a in &accepted {
        let theta = mean_st + a.etx_to_dst + params.alpha * a.e_ic;
        let denom = mean_st + ctx.etx_s + params.alpha * ctx.e_initial;
        let v = (theta / denom).max(params.epsilon_clamp).min(1.0 - params.epsilon_clamp);
        let bid = if accepted.len() == 1 {
            1.0
        } else {
            let k = size - 1.0;
            1.0 / k + (size - 2.0) / k * v
        };
        let backup = shared.get(&a.node).map_or(false, |&c| c >= 2);
        priced.push((bid, backup, a.oodt, a.node));
    }
    priced.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let cfs1 = priced.iter().filter(|p| !p.1).map(|p| p.3).collect();
    let cfs2 = priced.iter().filter(|p| p.1).map(|p| p.3).collect();
    Some((cfs1, cfs2, priced.iter().map(|p| p.0).collect()))
}

pub fn random_instance(
    rng: &mut ChaCha8Rng,
    k: usize,
) -> (SenderContext, Vec<NeighborMetric>, ChannelView, Vec<Vec<usize>>, BTreeMap<usize, usize>) {
    let nodes = k + 4;
    let w = RoutingWeights::default();
    let mut channels = BTreeMap::new();
    for v in 0..nodes {
        let set: BTreeSet<usize> = (0..6).filter(|_| rng.gen_bool(0.35)).collect();
        channels.insert(v, set);
    }
    let adjacency: Vec<Vec<usize>> =
        (0..nodes).map(|v| (0..nodes).filter(|&u| u != v && rng.gen_bool(0.3)).collect()).collect();
    let neighbors: Vec<NeighborMetric> = (1..=k)
        .map(|node| {
            let st = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.05..1.0) };
            let etx_to_dst = rng.gen_range(1.0..6.0);
            let e_ic = rng.gen_range(0.0..0.03);
            NeighborMetric { node, oodt: oodt_metric(&w, etx_to_dst, e_ic, st), st, etx_to_dst, e_ic }
        })
        .collect();
    let shared = (1..=k).map(|v| (v, rng.gen_range(0..3))).collect();
    let ctx = SenderContext { sender: 0, etx_s: rng.gen_range(3.0..8.0), e_initial: 300.0 };
    let view = ChannelView { channels, availability: vec![0.5; 6] };
    (ctx, neighbors, view, adjacency, shared)
}
