use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::auction::{AuctionParams, BidStrategy, RoutingWeights};
use crate::social::{EnergyParams, SocialParams};

use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    Oodt,
    /// Same protocol with obstacles hidden from candidate selection.
    OodtNoObstacle,
    /// Unicast along the least onward ETX.
    ShortestEtx,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Oodt, Protocol::OodtNoObstacle, Protocol::ShortestEtx];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Oodt => "OODT",
            Protocol::OodtNoObstacle => "OODT-NoObstacle",
            Protocol::ShortestEtx => "ShortestETX",
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Protocol {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "oodt" => Ok(Protocol::Oodt),
            "oodtnoobstacle" => Ok(Protocol::OodtNoObstacle),
            "shortestetx" => Ok(Protocol::ShortestEtx),
            _ => Err(SimError::ConfigInvalid(format!("unknown protocol {s:?}"))),
        }
    }
}

/// Everything a run needs. Times are seconds, distances meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub width: f64,
    pub height: f64,
    pub su_count: usize,
    pub pu_count: usize,
    pub channel_count: usize,
    pub su_range: f64,
    pub pu_range: f64,
    pub slot: f64,
    pub sensing: f64,
    pub transmit: f64,
    pub radios: usize,
    pub lambda_busy: f64,
    pub lambda_idle: f64,
    pub pathloss_exponent: f64,
    pub shadowing_sigma_db: f64,
    pub fading_m: f64,
    /// Distance at which a link succeeds with `ref_delivery` under mean shadowing.
    pub ref_distance: f64,
    pub ref_delivery: f64,
    pub speed_min: f64,
    pub speed_max: f64,
    pub packet_size: usize,
    pub bandwidth: f64,
    pub channel_switch_time: f64,
    /// Network-wide packet arrivals per second.
    pub packet_rate: f64,
    pub retry_limit: u32,
    pub ttl: u32,
    pub social: SocialParams,
    pub energy: EnergyParams,
    pub routing: RoutingWeights,
    pub auction: AuctionParams,
    pub obstacle_file: Option<PathBuf>,
    pub obstacle_count: usize,
    pub obstacle_min_side: f64,
    pub obstacle_max_side: f64,
    pub contact_trace: Option<PathBuf>,
    pub duration: f64,
    pub seed: u64,
    pub protocol: Protocol,
    pub trace: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            width: 1000.0,
            height: 1000.0,
            su_count: 50,
            pu_count: 10,
            channel_count: 10,
            su_range: 120.0,
            pu_range: 150.0,
            slot: 0.1,
            sensing: 0.01,
            transmit: 0.09,
            radios: 2,
            lambda_busy: 10.0,
            lambda_idle: 10.0,
            pathloss_exponent: 4.0,
            shadowing_sigma_db: 6.0,
            fading_m: 1.0,
            ref_distance: 60.0,
            ref_delivery: 0.9,
            speed_min: 0.1,
            speed_max: 2.0,
            packet_size: 1024,
            bandwidth: 1e6,
            channel_switch_time: 1e-3,
            packet_rate: 2.0,
            retry_limit: 8,
            ttl: 20,
            social: SocialParams::default(),
            energy: EnergyParams::default(),
            routing: RoutingWeights::default(),
            auction: AuctionParams::default(),
            obstacle_file: None,
            obstacle_count: 0,
            obstacle_min_side: 50.0,
            obstacle_max_side: 150.0,
            contact_trace: None,
            duration: 100.0,
            seed: 1,
            protocol: Protocol::Oodt,
            trace: false,
        }
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T, SimError> {
    v.parse().map_err(|_| SimError::ConfigInvalid(format!("{key}: cannot parse {v:?}")))
}

fn flag(key: &str, v: &str) -> Result<bool, SimError> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(SimError::ConfigInvalid(format!("{key}: expected a boolean, got {v:?}"))),
    }
}

impl Scenario {
    /// Applies one `key = value` setting. Relative paths resolve against `base`.
    pub fn set(&mut self, key: &str, value: &str, base: Option<&Path>) -> Result<(), SimError> {
        let v = value.trim();
        let path = |v: &str| match base {
            Some(b) if Path::new(v).is_relative() => b.join(v),
            _ => PathBuf::from(v),
        };
        match key.trim() {
            "width" => self.width = num(key, v)?,
            "height" => self.height = num(key, v)?,
            "area" => {
                let (w, h) = v
                    .split_once(['x', 'X', ','])
                    .ok_or_else(|| SimError::ConfigInvalid(format!("area: expected WxH, got {v:?}")))?;
                self.width = num(key, w.trim())?;
                self.height = num(key, h.trim())?;
            }
            "su_count" => self.su_count = num(key, v)?,
            "pu_count" => self.pu_count = num(key, v)?,
            "channel_count" => self.channel_count = num(key, v)?,
            "su_range" => self.su_range = num(key, v)?,
            "pu_range" => self.pu_range = num(key, v)?,
            "slot" => self.slot = num(key, v)?,
            "sensing" => self.sensing = num(key, v)?,
            "transmit" => self.transmit = num(key, v)?,
            "radios" => self.radios = num(key, v)?,
            "lambda_busy" => self.lambda_busy = num(key, v)?,
            "lambda_idle" => self.lambda_idle = num(key, v)?,
            "pathloss_exponent" => self.pathloss_exponent = num(key, v)?,
            "shadowing_sigma_db" => self.shadowing_sigma_db = num(key, v)?,
            "fading_m" => self.fading_m = num(key, v)?,
            "ref_distance" => self.ref_distance = num(key, v)?,
            "ref_delivery" => self.ref_delivery = num(key, v)?,
            "speed_min" => self.speed_min = num(key, v)?,
            "speed_max" => self.speed_max = num(key, v)?,
            "packet_size" => self.packet_size = num(key, v)?,
            "bandwidth" => self.bandwidth = num(key, v)?,
            "channel_switch_time" => self.channel_switch_time = num(key, v)?,
            "packet_rate" => self.packet_rate = num(key, v)?,
            "retry_limit" => self.retry_limit = num(key, v)?,
            "ttl" => self.ttl = num(key, v)?,
            "chi" => self.social.chi = num(key, v)?,
            "window" => self.social.window = num(key, v)?,
            "e_forward" => self.energy.e_forward = num(key, v)?,
            "e_receive" => self.energy.e_receive = num(key, v)?,
            "e_ack" => self.energy.e_ack = num(key, v)?,
            "e_initial" => self.energy.e_initial = num(key, v)?,
            "phi1" => self.routing.phi1 = num(key, v)?,
            "phi2" => self.routing.phi2 = num(key, v)?,
            "phi3" => self.routing.phi3 = num(key, v)?,
            "alpha" => self.auction.alpha = num(key, v)?,
            "epsilon_clamp" => self.auction.epsilon_clamp = num(key, v)?,
            "bid_strategy" => {
                self.auction.bid_strategy =
                    v.parse::<BidStrategy>().map_err(|e| SimError::ConfigInvalid(e.to_string()))?
            }
            "obstacle_file" => self.obstacle_file = if v.is_empty() { None } else { Some(path(v)) },
            "obstacle_count" => self.obstacle_count = num(key, v)?,
            "obstacle_min_side" => self.obstacle_min_side = num(key, v)?,
            "obstacle_max_side" => self.obstacle_max_side = num(key, v)?,
            "contact_trace" => self.contact_trace = if v.is_empty() { None } else { Some(path(v)) },
            "duration" => self.duration = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "protocol" => self.protocol = v.parse()?,
            "trace" => self.trace = flag(key, v)?,
            other => return Err(SimError::ConfigInvalid(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self, SimError> {
        let mut s = Scenario::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| SimError::ConfigInvalid(format!("line {}: expected key = value", i + 1)))?;
            s.set(k, v, base).map_err(|e| match e {
                SimError::ConfigInvalid(m) => SimError::ConfigInvalid(format!("line {}: {m}", i + 1)),
                e => e,
            })?;
        }
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path.parent())
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::ConfigInvalid(m.to_string()));
        let positive = [
            ("width", self.width),
            ("height", self.height),
            ("su_range", self.su_range),
            ("pu_range", self.pu_range),
            ("slot", self.slot),
            ("lambda_busy", self.lambda_busy),
            ("lambda_idle", self.lambda_idle),
            ("pathloss_exponent", self.pathloss_exponent),
            ("fading_m", self.fading_m),
            ("ref_distance", self.ref_distance),
            ("speed_min", self.speed_min),
            ("bandwidth", self.bandwidth),
            ("duration", self.duration),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::ConfigInvalid(format!("{k} must be positive, got {v}")));
            }
        }
        if self.su_count < 1 || self.pu_count < 1 || self.channel_count < 1 || self.radios < 1 {
            return bad("su_count, pu_count, channel_count and radios must be at least 1");
        }
        if !(self.sensing > 0.0 && self.transmit > 0.0) || (self.sensing + self.transmit - self.slot).abs() > 1e-9 {
            return bad("slot must equal sensing + transmit");
        }
        let airtime = self.packet_size as f64 * 8.0 / self.bandwidth + self.channel_switch_time;
        if airtime > self.transmit {
            return bad("packet airtime plus channel switch does not fit the transmit period");
        }
        if self.speed_max < self.speed_min {
            return bad("speed_max below speed_min");
        }
        if !(self.ref_delivery > 0.0 && self.ref_delivery < 1.0) {
            return bad("ref_delivery must lie in (0, 1)");
        }
        if !(self.shadowing_sigma_db >= 0.0) || !(self.packet_rate >= 0.0) {
            return bad("shadowing_sigma_db and packet_rate must be non-negative");
        }
        if !(self.obstacle_min_side > 0.0 && self.obstacle_max_side >= self.obstacle_min_side) {
            return bad("obstacle sides must satisfy 0 < min <= max");
        }
        SocialParams::new(self.social.chi, self.social.window).map_err(|e| SimError::ConfigInvalid(e.to_string()))?;
        self.energy.validate().map_err(|e| SimError::ConfigInvalid(e.to_string()))?;
        RoutingWeights::new(self.routing.phi1, self.routing.phi2, self.routing.phi3)
            .map_err(|e| SimError::ConfigInvalid(e.to_string()))?;
        self.auction.validate().map_err(|e| SimError::ConfigInvalid(e.to_string()))?;
        Ok(())
    }

    pub fn slots(&self) -> u64 {
        (self.duration / self.slot).round() as u64
    }

    /// Serializes every key; [`Scenario::parse`] reads it back unchanged.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("width", self.width.to_string());
        kv("height", self.height.to_string());
        kv("su_count", self.su_count.to_string());
        kv("pu_count", self.pu_count.to_string());
        kv("channel_count", self.channel_count.to_string());
        kv("su_range", self.su_range.to_string());
        kv("pu_range", self.pu_range.to_string());
        kv("slot", self.slot.to_string());
        kv("sensing", self.sensing.to_string());
        kv("transmit", self.transmit.to_string());
        kv("radios", self.radios.to_string());
        kv("lambda_busy", self.lambda_busy.to_string());
        kv("lambda_idle", self.lambda_idle.to_string());
        kv("pathloss_exponent", self.pathloss_exponent.to_string());
        kv("shadowing_sigma_db", self.shadowing_sigma_db.to_string());
        kv("fading_m", self.fading_m.to_string());
        kv("ref_distance", self.ref_distance.to_string());
        kv("ref_delivery", self.ref_delivery.to_string());
        kv("speed_min", self.speed_min.to_string());
        kv("speed_max", self.speed_max.to_string());
        kv("packet_size", self.packet_size.to_string());
        kv("bandwidth", self.bandwidth.to_string());
        kv("channel_switch_time", self.channel_switch_time.to_string());
        kv("packet_rate", self.packet_rate.to_string());
        kv("retry_limit", self.retry_limit.to_string());
        kv("ttl", self.ttl.to_string());
        kv("chi", self.social.chi.to_string());
        kv("window", self.social.window.to_string());
        kv("e_forward", self.energy.e_forward.to_string());
        kv("e_receive", self.energy.e_receive.to_string());
        kv("e_ack", self.energy.e_ack.to_string());
        kv("e_initial", self.energy.e_initial.to_string());
        kv("phi1", self.routing.phi1.to_string());
        kv("phi2", self.routing.phi2.to_string());
        kv("phi3", self.routing.phi3.to_string());
        kv("alpha", self.auction.alpha.to_string());
        kv("epsilon_clamp", self.auction.epsilon_clamp.to_string());
        let strategy = match self.auction.bid_strategy {
            BidStrategy::PaperLiteral => "paper_literal",
            BidStrategy::Derived => "derived",
        };
        kv("bid_strategy", strategy.to_string());
        if let Some(p) = &self.obstacle_file {
            kv("obstacle_file", p.display().to_string());
        }
        kv("obstacle_count", self.obstacle_count.to_string());
        kv("obstacle_min_side", self.obstacle_min_side.to_string());
        kv("obstacle_max_side", self.obstacle_max_side.to_string());
        if let Some(p) = &self.contact_trace {
            kv("contact_trace", p.display().to_string());
        }
        kv("duration", self.duration.to_string());
        kv("seed", self.seed.to_string());
        kv("protocol", self.protocol.name().to_string());
        kv("trace", self.trace.to_string());
        s
    }
}
