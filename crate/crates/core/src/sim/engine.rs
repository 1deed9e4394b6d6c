use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::auction::{
    channel_availability, channel_select, fsa_accept, fsa_select, oodt_metric, oodt_threshold, trace_rows, AuctionError,
    CandidatePartition, CfsClass, ChannelView, NeighborMetric, SenderContext,
};
use crate::geometry::Point2D;
use crate::obstacles::{los_clear, observe, NodeId, ObstacleMap};
use crate::social::{energy_tx_cost, etx_link, social_tie, socsim, spm, ContactHistory, EnergyBook, EtxGraph};

use super::channel::PuField;
use super::metrics::{compute_metrics, InvariantCounters, MetricsReport, RunCounters, RunLog};
use super::mobility::{mobility_step, Walker};
use super::radio::LinkModel;
use super::{Protocol, Scenario, SimError};

const STREAM_PU_PLACEMENT: u64 = 0;
const STREAM_PU: u64 = 2;
const STREAM_TRAFFIC: u64 = 3;
const STREAM_PROTOCOL: u64 = 4;
const STREAM_OBSTACLES: u64 = 5;
/// Each walker owns a stream so obstacle changes do not reshuffle the others.
const STREAM_WALKER_BASE: u64 = 1 << 20;
const OBSTACLE_GAP: f64 = 10.0;

fn stream(seed: u64, k: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(k);
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketStatus {
    InFlight,
    Delivered,
    Dropped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hop {
    pub node: NodeId,
    pub time: f64,
    pub channel: Option<usize>,
    /// Transmissions spent on this hop.
    pub transmissions: u32,
    pub from: Point2D,
    pub to: Point2D,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub id: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub created: f64,
    pub holder: NodeId,
    pub ready: f64,
    pub attempts: u32,
    pub hops: u32,
    pub status: PacketStatus,
    pub log: Vec<Hop>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundKind {
    /// Holder had no free radio this slot.
    Waiting,
    /// No candidate qualified this slot.
    NoCandidate,
    NoChannel,
    Blocked,
    /// Broadcast sent, nobody decoded it.
    Lost,
    Forwarded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub packet: u64,
    pub sender: NodeId,
    pub kind: RoundKind,
    pub channel: Option<usize>,
    pub candidates: Vec<(NodeId, CfsClass)>,
    pub receivers: Vec<NodeId>,
    pub winner: Option<(NodeId, CfsClass)>,
    pub suppressed: Vec<NodeId>,
    pub delivered: bool,
    pub dropped: bool,
}

/// First receiving primary, else first receiving backup, in rank order.
pub fn pick_forwarder(ranked: &[(NodeId, CfsClass)], received: &[bool]) -> Option<(NodeId, CfsClass)> {
    [CfsClass::Primary, CfsClass::Backup].into_iter().find_map(|class| {
        ranked.iter().zip(received).find(|(c, &r)| r && c.1 == class).map(|(c, _)| *c)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Tx,
    Rx,
}

#[derive(Debug, Clone)]
struct TxRecord {
    time: f64,
    channel: usize,
    sender: Point2D,
    receivers: Vec<Point2D>,
}

#[derive(Debug, Clone, Default)]
struct Window {
    observed: Vec<BTreeSet<NodeId>>,
    adjacency: Vec<Vec<NodeId>>,
    ties: Vec<Vec<f64>>,
    graph: EtxGraph,
    dist: HashMap<NodeId, Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub trace: Option<String>,
    pub auction_trace: Option<String>,
}

/// One simulation run. Drive it with [`Simulation::step`] or [`run`].
#[derive(Debug, Clone)]
pub struct Simulation {
    s: Scenario,
    map: ObstacleMap,
    view: ObstacleMap,
    link: LinkModel,
    walkers: Vec<Walker>,
    pu: PuField,
    channels: Vec<BTreeSet<usize>>,
    contacts: ContactHistory,
    energy: EnergyBook,
    packets: Vec<Packet>,
    window: Window,
    slot_index: u64,
    window_slots: u64,
    rng_walkers: Vec<ChaCha8Rng>,
    rng_pu: ChaCha8Rng,
    rng_traffic: ChaCha8Rng,
    rng_protocol: ChaCha8Rng,
    counters: RunCounters,
    invariants: InvariantCounters,
    receptions: u64,
    delays: Vec<f64>,
    engaged: Vec<Vec<(usize, Role)>>,
    radio_log: Vec<(u64, NodeId, usize, Role)>,
    tx_log: Vec<TxRecord>,
    forward_log: Vec<(u64, u64)>,
    trace: Option<String>,
    auction_trace: Option<String>,
}

impl Simulation {
    pub fn new(s: Scenario) -> Result<Self, SimError> {
        s.validate()?;
        let map = match &s.obstacle_file {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| SimError::Io(format!("{}: {e}", p.display())))?;
                let m = ObstacleMap::parse(&text).map_err(|e| SimError::ConfigInvalid(e.to_string()))?;
                if (m.width - s.width).abs() > 1e-9 || (m.height - s.height).abs() > 1e-9 {
                    return Err(SimError::ConfigInvalid("obstacle file area differs from the scenario area".into()));
                }
                m
            }
            None => {
                let mut rng = stream(s.seed, STREAM_OBSTACLES);
                let m = ObstacleMap::random_blocks(
                    &mut rng,
                    s.width,
                    s.height,
                    s.obstacle_count,
                    s.obstacle_min_side,
                    s.obstacle_max_side,
                    OBSTACLE_GAP,
                );
                if m.len() < s.obstacle_count {
                    return Err(SimError::ConfigInvalid(format!(
                        "only {} of {} obstacles fit the area",
                        m.len(),
                        s.obstacle_count
                    )));
                }
                m
            }
        };
        Self::with_map(s, map)
    }

    pub fn with_map(s: Scenario, map: ObstacleMap) -> Result<Self, SimError> {
        s.validate()?;
        let mut contacts = ContactHistory::new();
        if let Some(p) = &s.contact_trace {
            let text = std::fs::read_to_string(p).map_err(|e| SimError::Io(format!("{}: {e}", p.display())))?;
            let h = ContactHistory::parse_csv(&text).map_err(|e| SimError::ConfigInvalid(e.to_string()))?;
            for c in h.events() {
                if c.node_a < s.su_count && c.node_b < s.su_count {
                    contacts.push(c);
                }
            }
        }
        let view = match s.protocol {
            Protocol::OodtNoObstacle => ObstacleMap::empty(s.width, s.height),
            _ => map.clone(),
        };
        let speed = (s.speed_min, s.speed_max);
        let mut rng_walkers: Vec<ChaCha8Rng> =
            (0..s.su_count).map(|v| stream(s.seed, STREAM_WALKER_BASE + v as u64)).collect();
        let walkers: Vec<Walker> = rng_walkers.iter_mut().map(|r| Walker::new(&map, speed, r)).collect();
        let mut rng = stream(s.seed, STREAM_PU_PLACEMENT);
        let pu_pos: Vec<Point2D> =
            (0..s.pu_count).map(|_| Point2D::new(rng.gen_range(0.0..s.width), rng.gen_range(0.0..s.height))).collect();
        let mut rng_pu = stream(s.seed, STREAM_PU);
        let pu = PuField::new(pu_pos, s.channel_count, s.pu_range, s.lambda_busy, s.lambda_idle, &mut rng_pu);
        let window_slots = ((s.social.window / s.slot).round() as u64).max(1);
        let trace = s.trace.then(String::new);
        let auction_trace = s.trace.then(|| format!("{}\n", crate::auction::TRACE_HEADER));
        let n = s.su_count;
        let mut sim = Self {
            link: LinkModel::new(&s),
            energy: EnergyBook::new(n, s.energy.e_initial),
            channels: vec![BTreeSet::new(); n],
            engaged: vec![Vec::new(); n],
            map,
            view,
            walkers,
            pu,
            contacts,
            packets: Vec::new(),
            window: Window::default(),
            slot_index: 0,
            window_slots,
            rng_walkers,
            rng_pu,
            rng_traffic: stream(s.seed, STREAM_TRAFFIC),
            rng_protocol: stream(s.seed, STREAM_PROTOCOL),
            counters: RunCounters::default(),
            invariants: InvariantCounters::default(),
            receptions: 0,
            delays: Vec::new(),
            radio_log: Vec::new(),
            tx_log: Vec::new(),
            forward_log: Vec::new(),
            trace,
            auction_trace,
            s,
        };
        sim.update_contacts(0.0);
        Ok(sim)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.s
    }

    pub fn map(&self) -> &ObstacleMap {
        &self.map
    }

    pub fn now(&self) -> f64 {
        self.slot_index as f64 * self.s.slot
    }

    pub fn positions(&self) -> Vec<Point2D> {
        self.walkers.iter().map(|w| w.position).collect()
    }

    /// Places a node and aims it at its own position; contacts are refreshed.
    pub fn set_position(&mut self, node: NodeId, p: Point2D) {
        self.walkers[node].position = p;
        self.walkers[node].waypoint = p;
        let t = self.now();
        self.update_contacts(t);
    }

    pub fn pu_field(&self) -> &PuField {
        &self.pu
    }

    pub fn energy(&self) -> &EnergyBook {
        &self.energy
    }

    pub fn packets(&self) -> &[Packet] {
        &self.packets
    }

    pub fn counters(&self) -> &RunCounters {
        &self.counters
    }

    pub fn observed(&self, node: NodeId) -> Option<&BTreeSet<NodeId>> {
        self.window.observed.get(node)
    }

    fn log(&mut self, line: impl FnOnce() -> String) {
        if let Some(t) = &mut self.trace {
            t.push_str(&line());
            t.push('\n');
        }
    }

    pub fn inject_packet(&mut self, src: NodeId, dst: NodeId) -> u64 {
        let t = self.now();
        let id = self.packets.len() as u64;
        let pos = self.walkers[src].position;
        self.packets.push(Packet {
            id,
            src,
            dst,
            created: t,
            holder: src,
            ready: t,
            attempts: 0,
            hops: 0,
            status: PacketStatus::InFlight,
            log: vec![Hop { node: src, time: t, channel: None, transmissions: 0, from: pos, to: pos }],
        });
        self.counters.generated += 1;
        self.log(|| format!("{t:.3} gen {id} {src}->{dst}"));
        id
    }

    fn update_contacts(&mut self, t: f64) {
        let n = self.walkers.len();
        for a in 0..n {
            for b in (a + 1)..n {
                let (pa, pb) = (self.walkers[a].position, self.walkers[b].position);
                let close = self.energy.alive(a)
                    && self.energy.alive(b)
                    && pa.dist(pb) <= self.s.su_range
                    && los_clear(&self.map, pa, pb).unwrap_or(false);
                if close {
                    self.contacts.open(a, b, t);
                } else if self.contacts.is_open(a, b) {
                    self.contacts.close(a, b, t);
                }
            }
        }
    }

    fn observed_sets(&self, t: f64) -> Vec<BTreeSet<NodeId>> {
        let n = self.walkers.len();
        let pos = self.positions();
        (0..n)
            .map(|v| {
                if !self.energy.alive(v) {
                    return BTreeSet::new();
                }
                let near: Vec<(NodeId, Point2D)> = (0..n)
                    .filter(|&u| u != v && self.energy.alive(u) && pos[u].dist(pos[v]) <= self.s.su_range)
                    .map(|u| (u, pos[u]))
                    .collect();
                match self.s.protocol {
                    Protocol::ShortestEtx => near
                        .iter()
                        .filter(|&&(_, p)| los_clear(&self.view, pos[v], p).unwrap_or(false))
                        .map(|&(u, _)| u)
                        .collect(),
                    _ => {
                        let seed = self.s.seed ^ ((v as u64) << 32) ^ (t / self.s.slot).round() as u64;
                        observe(v, pos[v], &near, &self.view, self.s.su_range, seed, false).observed
                    }
                }
            })
            .collect()
    }

    fn ties(&self, observed: &[BTreeSet<NodeId>], t: f64) -> Vec<Vec<f64>> {
        let n = observed.len();
        let w = self.s.social.window;
        let mut ties = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let st = social_tie(&self.s.social, spm(&self.contacts, i, j, t - w, w), socsim(&observed[i], &observed[j]));
                ties[i][j] = st;
                ties[j][i] = st;
            }
        }
        ties
    }

    /// Recomputes observed sets, social ties and the ETX graph.
    pub fn refresh_window(&mut self) {
        let t = self.now();
        let observed = self.observed_sets(t);
        let ties = self.ties(&observed, t);
        let pos = self.positions();
        let n = observed.len();
        let mut graph = EtxGraph::new(n);
        let mut seen = BTreeSet::new();
        for (v, obs) in observed.iter().enumerate() {
            for &u in obs {
                if seen.insert((v.min(u), v.max(u))) {
                    let p = self.link.delivery_prob(pos[v].dist(pos[u]));
                    graph.add_link(v, u, etx_link(p, p));
                }
            }
        }
        let adjacency = observed.iter().map(|o| o.iter().copied().collect()).collect();
        self.window = Window { observed, adjacency, ties, graph, dist: HashMap::new() };
        self.log(|| format!("{t:.3} window"));
    }

    fn distances(&mut self, dst: NodeId) -> &Vec<f64> {
        let graph = &self.window.graph;
        self.window.dist.entry(dst).or_insert_with(|| graph.distances_to(dst))
    }

    fn free_radio(&self, node: NodeId) -> bool {
        self.engaged[node].len() < self.s.radios
    }

    fn engage(&mut self, node: NodeId, channel: usize, role: Role) {
        self.engaged[node].push((channel, role));
        self.radio_log.push((self.slot_index, node, channel, role));
    }

    fn debit(&mut self, node: NodeId, amount: f64) {
        let t = self.now();
        self.energy.debit(node, amount, t);
    }

    fn generate_traffic(&mut self) {
        if self.s.packet_rate <= 0.0 || self.s.su_count < 2 {
            return;
        }
        let mean = self.s.packet_rate * self.s.slot;
        let k = Poisson::new(mean).map(|d| d.sample(&mut self.rng_traffic) as usize).unwrap_or(0);
        for _ in 0..k {
            let n = self.s.su_count;
            let src = self.rng_traffic.gen_range(0..n);
            let mut dst = self.rng_traffic.gen_range(0..n - 1);
            if dst >= src {
                dst += 1;
            }
            self.inject_packet(src, dst);
        }
    }

    /// Neighbor metrics toward `dst`, restricted to neighbors that are closer
    /// to it in onward ETX than the sender.
    fn neighbor_metrics(&mut self, sender: NodeId, dst: NodeId) -> Vec<NeighborMetric> {
        let dist = self.distances(dst).clone();
        let here = dist[sender];
        let obs: Vec<NodeId> = self.window.observed[sender].iter().copied().collect();
        obs.into_iter()
            .filter(|&j| self.energy.alive(j) && dist[j].is_finite() && dist[j] < here)
            .filter_map(|j| {
                let link = self.window.graph.link(sender, j)?;
                let etx = link + dist[j];
                let e_ic = energy_tx_cost(&self.s.energy, self.window.observed[j].len());
                let st = self.window.ties[sender][j];
                Some(NeighborMetric { node: j, oodt: oodt_metric(&self.s.routing, etx, e_ic, st), st, etx_to_dst: dist[j], e_ic })
            })
            .collect()
    }

    fn channel_view(&self) -> ChannelView {
        let a = channel_availability(self.s.lambda_busy, self.s.lambda_idle);
        ChannelView {
            channels: self.channels.iter().cloned().enumerate().collect(),
            availability: vec![a; self.s.channel_count],
        }
    }

    /// Advances one slot: sensing, traffic, forwarding, mobility, contacts.
    pub fn step(&mut self) -> Vec<RoundOutcome> {
        let t = self.now();
        if self.slot_index % self.window_slots == 0 {
            self.refresh_window();
        }
        self.pu.advance(t, &mut self.rng_pu);
        let pos = self.positions();
        for (v, p) in pos.iter().enumerate() {
            self.channels[v] = self.pu.free_channels(*p).into_iter().collect();
        }
        for e in &mut self.engaged {
            e.clear();
        }
        self.generate_traffic();
        self.pu.advance(t + self.s.sensing, &mut self.rng_pu);
        let outcomes = self.forward_all(t);
        let speed = (self.s.speed_min, self.s.speed_max);
        for (w, r) in self.walkers.iter_mut().zip(&mut self.rng_walkers) {
            mobility_step(w, self.s.slot, &self.map, speed, r);
        }
        self.slot_index += 1;
        let t1 = self.now();
        self.update_contacts(t1);
        outcomes
    }

    fn forward_all(&mut self, t: f64) -> Vec<RoundOutcome> {
        let mut active: Vec<usize> = (0..self.packets.len())
            .filter(|&i| self.packets[i].status == PacketStatus::InFlight && self.packets[i].ready <= t + 1e-9)
            .collect();
        active.sort_by_key(|&i| (self.packets[i].holder, self.packets[i].id));

        let view = self.channel_view();
        let oodt = matches!(self.s.protocol, Protocol::Oodt | Protocol::OodtNoObstacle);
        // First pass: who would accept whom, for the backup-set rule.
        let mut metrics: Vec<Vec<NeighborMetric>> = Vec::with_capacity(active.len());
        let mut members: BTreeMap<NodeId, BTreeSet<NodeId>> = BTreeMap::new();
        for &i in &active {
            let (holder, dst) = (self.packets[i].holder, self.packets[i].dst);
            let m = if oodt && !self.window.observed[holder].contains(&dst) {
                self.neighbor_metrics(holder, dst)
            } else {
                Vec::new()
            };
            if !m.is_empty() {
                if let Ok(acc) = fsa_accept(holder, &m, &view, &self.window.adjacency) {
                    for a in acc {
                        members.entry(a.node).or_default().insert(holder);
                    }
                }
            }
            metrics.push(m);
        }
        let shared: BTreeMap<NodeId, usize> = members.into_iter().map(|(k, v)| (k, v.len())).collect();

        let mut out = Vec::new();
        for (k, &i) in active.iter().enumerate() {
            out.push(self.forward_round(i, t, &metrics[k], &view, &shared));
        }
        out
    }

    fn plan(
        &mut self,
        i: usize,
        metrics: &[NeighborMetric],
        view: &ChannelView,
        shared: &BTreeMap<NodeId, usize>,
    ) -> Vec<(NodeId, CfsClass)> {
        let (holder, dst) = (self.packets[i].holder, self.packets[i].dst);
        if self.window.observed[holder].contains(&dst) && self.energy.alive(dst) {
            return vec![(dst, CfsClass::Primary)];
        }
        match self.s.protocol {
            Protocol::ShortestEtx => {
                let dist = self.distances(dst).clone();
                let here = dist[holder];
                let obs: Vec<NodeId> = self.window.observed[holder].iter().copied().collect();
                obs.into_iter()
                    .filter(|&j| self.energy.alive(j) && dist[j] < here)
                    .filter_map(|j| Some((self.window.graph.link(holder, j)? + dist[j], j)))
                    .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                    .map(|(_, j)| vec![(j, CfsClass::Primary)])
                    .unwrap_or_default()
            }
            _ => {
                if metrics.is_empty() {
                    return Vec::new();
                }
                let ctx = SenderContext {
                    sender: holder,
                    etx_s: self.distances(dst)[holder],
                    e_initial: self.s.energy.e_initial,
                };
                match fsa_select(&ctx, metrics, view, &self.window.adjacency, shared, &self.s.auction) {
                    Ok(p) => {
                        self.audit_partition(&p, metrics, shared);
                        if let Some(tr) = &mut self.auction_trace {
                            tr.push_str(&trace_rows(self.slot_index, holder, &p));
                        }
                        p.ranked().iter().map(|e| (e.node, e.cfs_class)).collect()
                    }
                    Err(AuctionError::EmptyCandidateSet) => Vec::new(),
                    Err(_) => Vec::new(),
                }
            }
        }
    }

    fn audit_partition(&mut self, p: &CandidatePartition, metrics: &[NeighborMetric], shared: &BTreeMap<NodeId, usize>) {
        self.invariants.checked_rounds += 1;
        if !p.is_disjoint() {
            self.invariants.disjointness += 1;
        }
        if let Ok(theta) = oodt_threshold(&metrics.iter().map(|m| m.oodt).collect::<Vec<_>>()) {
            let over = p.ranked().iter().filter(|e| !(e.oodt_value <= theta)).count();
            self.invariants.threshold += over as u64;
        }
        let lonely = p.cfs2.iter().filter(|e| shared.get(&e.node).copied().unwrap_or(0) < 2).count();
        self.invariants.backup_membership += lonely as u64;
    }

    fn fail_attempt(&mut self, i: usize) -> bool {
        let p = &mut self.packets[i];
        p.attempts += 1;
        if p.attempts >= self.s.retry_limit {
            p.status = PacketStatus::Dropped;
            self.counters.dropped += 1;
            let (id, t) = (p.id, self.now());
            self.log(|| format!("{t:.3} drop {id} retries"));
            true
        } else {
            false
        }
    }

    fn forward_round(
        &mut self,
        i: usize,
        t: f64,
        metrics: &[NeighborMetric],
        view: &ChannelView,
        shared: &BTreeMap<NodeId, usize>,
    ) -> RoundOutcome {
        let (id, sender) = (self.packets[i].id, self.packets[i].holder);
        let mut outcome = RoundOutcome {
            packet: id,
            sender,
            kind: RoundKind::Waiting,
            channel: None,
            candidates: Vec::new(),
            receivers: Vec::new(),
            winner: None,
            suppressed: Vec::new(),
            delivered: false,
            dropped: false,
        };
        if !self.energy.alive(sender) {
            self.packets[i].status = PacketStatus::Dropped;
            self.counters.dropped += 1;
            outcome.dropped = true;
            return outcome;
        }
        if !self.free_radio(sender) {
            outcome.dropped = self.fail_attempt(i);
            return outcome;
        }
        self.counters.rounds += 1;
        let ranked = self.plan(i, metrics, view, shared);
        outcome.candidates = ranked.clone();
        if ranked.is_empty() {
            self.counters.no_candidate += 1;
            outcome.kind = RoundKind::NoCandidate;
            outcome.dropped = self.fail_attempt(i);
            return outcome;
        }
        let mut usable: BTreeSet<usize> = BTreeSet::new();
        for &(j, _) in &ranked {
            usable.extend(self.channels[sender].intersection(&self.channels[j]));
        }
        usable.retain(|&c| !self.engaged[sender].contains(&(c, Role::Rx)));
        let Ok(channel) = channel_select(view, &usable, &mut self.rng_protocol) else {
            self.counters.no_channel += 1;
            outcome.kind = RoundKind::NoChannel;
            outcome.dropped = self.fail_attempt(i);
            return outcome;
        };
        outcome.channel = Some(channel);
        let pos = self.positions();
        let t_tx = t + self.s.sensing;
        if self.pu.blocks(channel, pos[sender]) || ranked.iter().any(|&(j, _)| self.pu.blocks(channel, pos[j])) {
            self.counters.blocked += 1;
            outcome.kind = RoundKind::Blocked;
            outcome.dropped = self.fail_attempt(i);
            return outcome;
        }

        self.engage(sender, channel, Role::Tx);
        self.counters.data_tx += 1;
        self.debit(sender, self.s.energy.e_forward);
        self.packets[i].log.last_mut().expect("hop log starts at the source").transmissions += 1;
        self.invariants.checked_tx += 1;
        self.tx_log.push(TxRecord {
            time: t_tx,
            channel,
            sender: pos[sender],
            receivers: ranked.iter().map(|&(j, _)| pos[j]).collect(),
        });
        self.log(|| format!("{t_tx:.3} tx {id} from {sender} ch {channel} to {:?}", ranked.iter().map(|c| c.0).collect::<Vec<_>>()));

        let mut received = vec![false; ranked.len()];
        for (k, &(j, _)) in ranked.iter().enumerate() {
            let listening = self.energy.alive(j)
                && self.channels[j].contains(&channel)
                && self.free_radio(j)
                && !self.engaged[j].contains(&(channel, Role::Tx));
            if !listening {
                continue;
            }
            self.engage(j, channel, Role::Rx);
            let u: f64 = self.rng_protocol.gen();
            let d = pos[sender].dist(pos[j]);
            let clear = d <= self.s.su_range && los_clear(&self.map, pos[sender], pos[j]).unwrap_or(false);
            if clear && u < self.link.delivery_prob(d) {
                received[k] = true;
                self.receptions += 1;
                self.debit(j, self.s.energy.e_receive);
                outcome.receivers.push(j);
            }
        }
        let Some((winner, class)) = pick_forwarder(&ranked, &received) else {
            outcome.kind = RoundKind::Lost;
            outcome.dropped = self.fail_attempt(i);
            return outcome;
        };
        self.counters.ack_tx += 1;
        self.debit(winner, self.s.energy.e_ack);
        self.forward_log.push((id, self.slot_index));
        outcome.kind = RoundKind::Forwarded;
        outcome.winner = Some((winner, class));
        outcome.suppressed = outcome.receivers.iter().copied().filter(|&r| r != winner).collect();

        let arrival = t + self.s.slot * if class == CfsClass::Backup { 2.0 } else { 1.0 };
        let p = &mut self.packets[i];
        p.holder = winner;
        p.ready = arrival;
        p.attempts = 0;
        p.hops += 1;
        p.log.push(Hop { node: winner, time: arrival, channel: Some(channel), transmissions: 0, from: pos[sender], to: pos[winner] });
        if winner == p.dst {
            p.status = PacketStatus::Delivered;
            self.counters.delivered += 1;
            self.counters.delivered_hops += p.hops as u64;
            self.delays.push(arrival - p.created);
            outcome.delivered = true;
        } else if p.hops >= self.s.ttl {
            p.status = PacketStatus::Dropped;
            self.counters.dropped += 1;
            outcome.dropped = true;
        }
        let done = if outcome.delivered { " delivered" } else { "" };
        self.log(|| format!("{t_tx:.3} fwd {id} {sender}->{winner} {class:?}{done}"));
        outcome
    }

    fn audit(&mut self) {
        self.counters.in_flight = self.packets.iter().filter(|p| p.status == PacketStatus::InFlight).count() as u64;
        let c = self.counters.clone();
        if c.generated != c.delivered + c.dropped + c.in_flight {
            self.invariants.conservation += 1;
        }
        let e = &self.s.energy;
        let expected = c.data_tx as f64 * e.e_forward + self.receptions as f64 * e.e_receive + c.ack_tx as f64 * e.e_ack;
        if (expected - self.energy.debited).abs() > 1e-9 * (1.0 + expected) {
            self.invariants.energy_causality += 1;
        }
        for tx in &self.tx_log {
            for pu in 0..self.pu.positions.len() {
                let busy = self.pu.busy_intervals(pu, tx.channel).iter().any(|&(a, b)| a <= tx.time && tx.time < b);
                if busy {
                    let q = self.pu.positions[pu];
                    let covered = std::iter::once(&tx.sender).chain(&tx.receivers).any(|p| p.dist(q) <= self.pu.range);
                    if covered {
                        self.invariants.interweave += 1;
                    }
                }
            }
        }
        let mut per: BTreeMap<(u64, NodeId), Vec<(usize, Role)>> = BTreeMap::new();
        for &(slot, node, ch, role) in &self.radio_log {
            per.entry((slot, node)).or_default().push((ch, role));
        }
        for v in per.values() {
            if v.len() > self.s.radios {
                self.invariants.radio_budget += 1;
            }
            if v.iter().any(|&(ch, r)| r == Role::Tx && v.contains(&(ch, Role::Rx))) {
                self.invariants.half_duplex += 1;
            }
        }
        let mut fwd: BTreeMap<(u64, u64), u32> = BTreeMap::new();
        for &k in &self.forward_log {
            *fwd.entry(k).or_default() += 1;
        }
        self.invariants.duplicate_forward += fwd.values().filter(|&&n| n > 1).count() as u64;
        for p in &self.packets {
            for h in p.log.iter().skip(1) {
                if h.from.dist(h.to) > self.s.su_range || !los_clear(&self.map, h.from, h.to).unwrap_or(false) {
                    self.invariants.obstacle += 1;
                }
            }
        }
    }

    /// Runs the remaining slots up to the scenario duration.
    pub fn run_to_end(&mut self) {
        while self.slot_index < self.s.slots() {
            self.step();
        }
    }

    pub fn finish(mut self) -> RunOutput {
        self.audit();
        let t = self.now();
        let observed = if self.window.observed.is_empty() { self.observed_sets(t) } else { self.window.observed.clone() };
        let ties = self.ties(&observed, t);
        let n = ties.len();
        let final_ties = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).map(|(i, j)| ties[i][j]).collect();
        let log = RunLog {
            counters: self.counters.clone(),
            delays: self.delays.clone(),
            first_death: self.energy.first_death(),
            duration: self.s.duration,
            final_ties,
            invariants: self.invariants.clone(),
        };
        let report = compute_metrics(&log);
        let mut trace = self.trace;
        if let Some(tr) = &mut trace {
            let _ = writeln!(tr, "{t:.3} end {}", report.invariants.summary());
        }
        RunOutput { report, trace, auction_trace: self.auction_trace }
    }
}

pub fn run_with_trace(s: &Scenario) -> Result<RunOutput, SimError> {
    let mut sim = Simulation::new(s.clone())?;
    sim.run_to_end();
    Ok(sim.finish())
}

pub fn run(s: &Scenario) -> Result<MetricsReport, SimError> {
    run_with_trace(s).map(|o| o.report)
}
