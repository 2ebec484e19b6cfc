use std::fmt;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActorId {
    Kgc,
    Rsu(u32),
    Vehicle(u32),
}

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ActorId::Kgc => f.write_str("kgc"),
            ActorId::Rsu(i) => write!(f, "rsu:{i}"),
            ActorId::Vehicle(i) => write!(f, "veh:{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Envelope,
    ReplyCiphertext,
    SignedBeacon,
    AggregateSignature,
    TraceRequest,
}

impl MessageKind {
    pub const ALL: [MessageKind; 5] = [
        MessageKind::Envelope,
        MessageKind::ReplyCiphertext,
        MessageKind::SignedBeacon,
        MessageKind::AggregateSignature,
        MessageKind::TraceRequest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MessageKind::Envelope => "envelope",
            MessageKind::ReplyCiphertext => "reply",
            MessageKind::SignedBeacon => "beacon",
            MessageKind::AggregateSignature => "aggregate",
            MessageKind::TraceRequest => "trace",
        }
    }
}

/// Who produced the bytes on the wire. Receivers never see this; the
/// engine uses it to score the adversary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Honest,
    Replay,
    Tamper,
    Forgery,
}

/// One message in flight. `from`, `to` and `epoch` are routing headers the
/// adversary could rewrite; receivers do not trust them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetMessage {
    pub from: ActorId,
    pub to: ActorId,
    pub epoch: u64,
    pub kind: MessageKind,
    pub payload: Vec<u8>,
    pub origin: Origin,
}

impl NetMessage {
    pub fn honest(from: ActorId, to: ActorId, epoch: u64, kind: MessageKind, payload: Vec<u8>) -> Self {
        Self { from, to, epoch, kind, payload, origin: Origin::Honest }
    }

    /// Short hex digest of the payload.
    pub fn digest(&self) -> String {
        payload_digest(&self.payload)
    }
}

pub fn payload_digest(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..8])
}
