use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::geometry::Point2D;

/// Flips a primary user's channel state and draws how long the new state lasts.
/// `on` means busy.
pub fn pu_transition<R: Rng + ?Sized>(on: bool, now: f64, lambda_busy: f64, lambda_idle: f64, rng: &mut R) -> (bool, f64) {
    let next = !on;
    let rate = if next { lambda_busy } else { lambda_idle };
    (next, now + Exp::new(rate).expect("positive rate").sample(rng))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Process {
    on: bool,
    next: f64,
    since: f64,
}

/// Static primary users, each with an independent ON/OFF process per channel.
/// Busy intervals are recorded for after-the-fact audits.
#[derive(Debug, Clone)]
pub struct PuField {
    pub positions: Vec<Point2D>,
    pub range: f64,
    lambda_busy: f64,
    lambda_idle: f64,
    procs: Vec<Vec<Process>>,
    busy_log: Vec<Vec<Vec<(f64, f64)>>>,
    now: f64,
}

impl PuField {
    pub fn new<R: Rng + ?Sized>(
        positions: Vec<Point2D>,
        channels: usize,
        range: f64,
        lambda_busy: f64,
        lambda_idle: f64,
        rng: &mut R,
    ) -> Self {
        let p_on = (1.0 / lambda_busy) / (1.0 / lambda_busy + 1.0 / lambda_idle);
        let procs: Vec<Vec<Process>> = positions
            .iter()
            .map(|_| {
                (0..channels)
                    .map(|_| {
                        let on = rng.gen_bool(p_on);
                        let rate = if on { lambda_busy } else { lambda_idle };
                        let dwell = Exp::new(rate).expect("positive rate").sample(rng);
                        Process { on, next: dwell, since: 0.0 }
                    })
                    .collect()
            })
            .collect();
        let busy_log = positions.iter().map(|_| vec![Vec::new(); channels]).collect();
        Self { positions, range, lambda_busy, lambda_idle, procs, busy_log, now: 0.0 }
    }

    pub fn channels(&self) -> usize {
        self.procs.first().map_or(0, |p| p.len())
    }

    /// Moves every process forward to `t`; time never goes backwards.
    pub fn advance<R: Rng + ?Sized>(&mut self, t: f64, rng: &mut R) {
        if t < self.now {
            return;
        }
        for (pu, chans) in self.procs.iter_mut().enumerate() {
            for (c, p) in chans.iter_mut().enumerate() {
                while p.next <= t {
                    if p.on {
                        self.busy_log[pu][c].push((p.since, p.next));
                    }
                    let (on, next) = pu_transition(p.on, p.next, self.lambda_busy, self.lambda_idle, rng);
                    p.since = p.next;
                    p.on = on;
                    p.next = next;
                }
            }
        }
        self.now = t;
    }

    pub fn is_on(&self, pu: usize, channel: usize) -> bool {
        self.procs[pu][channel].on
    }

    /// True when some busy primary user on `channel` covers `p`.
    pub fn blocks(&self, channel: usize, p: Point2D) -> bool {
        self.positions.iter().enumerate().any(|(pu, &q)| self.procs[pu][channel].on && q.dist(p) <= self.range)
    }

    /// Channels no busy primary user covers at `p`.
    pub fn free_channels(&self, p: Point2D) -> Vec<usize> {
        (0..self.channels()).filter(|&c| !self.blocks(c, p)).collect()
    }

    /// Busy intervals `[start, end)` so far, including the open one.
    pub fn busy_intervals(&self, pu: usize, channel: usize) -> Vec<(f64, f64)> {
        let mut v = self.busy_log[pu][channel].clone();
        let p = self.procs[pu][channel];
        if p.on {
            v.push((p.since, p.next));
        }
        v
    }
}
