use std::fmt::Write as _;

/// Raw event counts of one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunCounters {
    pub generated: u64,
    pub delivered: u64,
    /// Hops summed over delivered packets.
    pub delivered_hops: u64,
    pub dropped: u64,
    pub in_flight: u64,
    pub data_tx: u64,
    pub ack_tx: u64,
    /// Attempts stopped by a busy primary user at transmit time.
    pub blocked: u64,
    /// Attempts with no channel shared by sender and candidates.
    pub no_channel: u64,
    /// Rounds where no candidate qualified.
    pub no_candidate: u64,
    pub rounds: u64,
}

/// Audits run after the fact; every field but the two `checked_*` counts
/// is a violation count.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InvariantCounters {
    pub conservation: u64,
    pub energy_causality: u64,
    pub interweave: u64,
    pub radio_budget: u64,
    pub half_duplex: u64,
    pub duplicate_forward: u64,
    pub obstacle: u64,
    pub threshold: u64,
    pub disjointness: u64,
    pub backup_membership: u64,
    pub checked_rounds: u64,
    pub checked_tx: u64,
}

impl InvariantCounters {
    pub fn violations(&self) -> u64 {
        self.conservation
            + self.energy_causality
            + self.interweave
            + self.radio_budget
            + self.half_duplex
            + self.duplicate_forward
            + self.obstacle
            + self.threshold
            + self.disjointness
            + self.backup_membership
    }

    pub fn merge(&mut self, o: &InvariantCounters) {
        self.conservation += o.conservation;
        self.energy_causality += o.energy_causality;
        self.interweave += o.interweave;
        self.radio_budget += o.radio_budget;
        self.half_duplex += o.half_duplex;
        self.duplicate_forward += o.duplicate_forward;
        self.obstacle += o.obstacle;
        self.threshold += o.threshold;
        self.disjointness += o.disjointness;
        self.backup_membership += o.backup_membership;
        self.checked_rounds += o.checked_rounds;
        self.checked_tx += o.checked_tx;
    }

    pub fn summary(&self) -> String {
        format!(
            "conservation={} energy={} interweave={} radio_budget={} half_duplex={} duplicate_forward={} obstacle={} threshold={} disjointness={} backup={} (rounds={} tx={})",
            self.conservation,
            self.energy_causality,
            self.interweave,
            self.radio_budget,
            self.half_duplex,
            self.duplicate_forward,
            self.obstacle,
            self.threshold,
            self.disjointness,
            self.backup_membership,
            self.checked_rounds,
            self.checked_tx
        )
    }
}

/// What a finished run hands to [`compute_metrics`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub counters: RunCounters,
    pub delays: Vec<f64>,
    pub first_death: Option<f64>,
    pub duration: f64,
    /// Social tie of every unordered node pair at the end of the run.
    pub final_ties: Vec<f64>,
    pub invariants: InvariantCounters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub pdr: f64,
    /// `None` when nothing was delivered.
    pub avg_delay: Option<f64>,
    /// Data plus ACK transmissions per delivered packet; `None` when nothing was delivered.
    pub expected_routing_cost: Option<f64>,
    pub network_lifetime: f64,
    pub friend_pairs: usize,
    pub counters: RunCounters,
    pub invariants: InvariantCounters,
}

/// Pairs at or above the mean positive tie.
pub fn friend_pairs(ties: &[f64]) -> usize {
    let positive: Vec<f64> = ties.iter().copied().filter(|&t| t > 0.0).collect();
    if positive.is_empty() {
        return 0;
    }
    let threshold = positive.iter().sum::<f64>() / positive.len() as f64;
    positive.iter().filter(|&&t| t >= threshold).count()
}

pub fn compute_metrics(log: &RunLog) -> MetricsReport {
    let c = &log.counters;
    let pdr = if c.generated == 0 { 0.0 } else { c.delivered as f64 / c.generated as f64 };
    let avg_delay = (!log.delays.is_empty()).then(|| log.delays.iter().sum::<f64>() / log.delays.len() as f64);
    let expected_routing_cost = (c.delivered > 0).then(|| (c.data_tx + c.ack_tx) as f64 / c.delivered as f64);
    MetricsReport {
        pdr,
        avg_delay,
        expected_routing_cost,
        network_lifetime: log.first_death.unwrap_or(log.duration).min(log.duration),
        friend_pairs: friend_pairs(&log.final_ties),
        counters: c.clone(),
        invariants: log.invariants.clone(),
    }
}

/// Marker written for absent values.
pub const ABSENT: &str = "NA";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| ABSENT.to_string(), |x| x.to_string())
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "protocol,seed,pdr,avg_delay,routing_cost,lifetime,friend_pairs,generated,delivered,dropped,in_flight,data_tx,ack_tx,violations";

    pub fn csv_row(&self, protocol: &str, seed: u64) -> String {
        let c = &self.counters;
        let mut s = String::new();
        let _ = write!(
            s,
            "{protocol},{seed},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.pdr,
            opt(self.avg_delay),
            opt(self.expected_routing_cost),
            self.network_lifetime,
            self.friend_pairs,
            c.generated,
            c.delivered,
            c.dropped,
            c.in_flight,
            c.data_tx,
            c.ack_tx,
            self.invariants.violations()
        );
        s
    }
}
