//! Slotted simulation of secondary users forwarding packets opportunistically
//! among primary users and obstacles.

mod channel;
mod engine;
mod metrics;
mod mobility;
mod radio;
mod scenario;

use thiserror::Error;

pub use channel::{pu_transition, PuField};
pub use engine::{
    pick_forwarder, run, run_with_trace, Hop, Packet, PacketStatus, RoundKind, RoundOutcome, RunOutput, Simulation,
};
pub use metrics::{compute_metrics, friend_pairs, InvariantCounters, MetricsReport, RunCounters, RunLog, ABSENT};
pub use mobility::{free_point, mobility_step, Walker};
pub use radio::{link_delivery_prob, LinkModel};
pub use scenario::{Protocol, Scenario};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    ConfigInvalid(String),
    #[error("i/o failure: {0}")]
    Io(String),
}
