//! Network adversary: full control of delivery, no private keys.

use rand::{Rng, RngCore};
use serde::Serialize;

use super::message::{payload_digest, ActorId, MessageKind, NetMessage, Origin};
use super::AdversaryPolicy;
use crate::aggregate::{AggregateSignature, SignedBeacon};
use crate::bilinear::{BilinearSuite, GroupElement};
use crate::params::SystemParams;
use crate::signcryption::SigncryptedEnvelope;

/// Replayed copies arrive this many ticks (at most) after the original.
pub const MAX_REPLAY_DELAY: u64 = 50;

/// A message scheduled `delay` ticks after it was sent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub delay: u64,
    pub msg: NetMessage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Drop,
    Replay,
    Tamper,
    Forge,
}

/// Audit record of one adversarial action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mutation {
    pub action: Action,
    pub kind: MessageKind,
    pub from: ActorId,
    pub to: ActorId,
    pub before: String,
    pub after: String,
    /// Flipped bit index for tampering.
    pub bit: Option<usize>,
}

/// Applies drop, replay and tamper independently to every message.
///
/// Draw order per message is fixed (drop, replay, tamper), so a given rng
/// state always yields the same mutated stream. A dropped message may still
/// be replayed: the adversary saw it on the air.
pub fn inject_adversary<R: RngCore + ?Sized>(
    policy: &AdversaryPolicy,
    stream: Vec<NetMessage>,
    rng: &mut R,
) -> (Vec<Delivery>, Vec<Mutation>) {
    let mut out = Vec::with_capacity(stream.len());
    let mut log = Vec::new();
    for msg in stream {
        let dropped = rng.gen_bool(policy.drop);
        let replayed = rng.gen_bool(policy.replay);
        let tampered = rng.gen_bool(policy.tamper);
        let record = |action, after: &NetMessage, bit| Mutation {
            action,
            kind: msg.kind,
            from: msg.from,
            to: msg.to,
            before: msg.digest(),
            after: after.digest(),
            bit,
        };
        if replayed {
            let copy = NetMessage { origin: Origin::Replay, ..msg.clone() };
            let delay = rng.gen_range(2..=MAX_REPLAY_DELAY);
            log.push(record(Action::Replay, &copy, None));
            out.push(Delivery { delay, msg: copy });
        }
        if dropped {
            log.push(Mutation { after: String::new(), ..record(Action::Drop, &msg, None) });
            continue;
        }
        if tampered && !msg.payload.is_empty() {
            let bit = rng.gen_range(0..msg.payload.len() * 8);
            let mut bad = NetMessage { origin: Origin::Tamper, ..msg.clone() };
            bad.payload[bit / 8] ^= 0x80 >> (bit % 8);
            log.push(record(Action::Tamper, &bad, Some(bit)));
            out.push(Delivery { delay: 1, msg: bad });
            continue;
        }
        out.push(Delivery { delay: 1, msg });
    }
    (out, log)
}

/// Stateful adversary: perturbs traffic and remembers what it saw so that
/// targeted forgeries reuse real pseudonyms and aggregates.
#[derive(Debug)]
pub struct Adversary<R> {
    pub policy: AdversaryPolicy,
    rng: R,
    seen_stps: Vec<Vec<u8>>,
    last_aggregate: Option<(ActorId, Vec<u8>)>,
    forged: u64,
}

impl<R: RngCore> Adversary<R> {
    pub fn new(policy: AdversaryPolicy, rng: R) -> Self {
        Self { policy, rng, seen_stps: Vec::new(), last_aggregate: None, forged: 0 }
    }

    pub fn intercept<E: BilinearSuite>(
        &mut self,
        params: &SystemParams<E>,
        stream: Vec<NetMessage>,
    ) -> (Vec<Delivery>, Vec<Mutation>) {
        for m in &stream {
            match m.kind {
                MessageKind::SignedBeacon => {
                    if let Ok(b) = SignedBeacon::<E>::from_bytes(params, &m.payload) {
                        self.seen_stps.push(b.stp);
                    }
                }
                MessageKind::AggregateSignature => self.last_aggregate = Some((m.from, m.payload.clone())),
                _ => {}
            }
        }
        if self.policy.drop == 0.0 && self.policy.replay == 0.0 && self.policy.tamper == 0.0 {
            let out = stream.into_iter().map(|msg| Delivery { delay: 1, msg }).collect();
            return (out, Vec::new());
        }
        inject_adversary(&self.policy, stream, &mut self.rng)
    }

    fn random_point<E: BilinearSuite>(&mut self, params: &SystemParams<E>) -> E::G1 {
        params.suite.p1().mul(&params.suite.random_nonzero_scalar(&mut self.rng))
    }

    fn known_or_random_stp<E: BilinearSuite>(&mut self, params: &SystemParams<E>) -> Vec<u8> {
        if self.seen_stps.is_empty() {
            let mut stp = vec![0u8; params.id_len()];
            self.rng.fill_bytes(&mut stp);
            stp
        } else {
            let i = self.rng.gen_range(0..self.seen_stps.len());
            self.seen_stps[i].clone()
        }
    }

    /// This epoch's targeted forgeries, cycling through beacon, envelope and
    /// aggregate forgeries.
    pub fn forge<E: BilinearSuite>(
        &mut self,
        params: &SystemParams<E>,
        epoch: u64,
        rsus: usize,
    ) -> (Vec<NetMessage>, Vec<Mutation>) {
        let mut msgs = Vec::new();
        for _ in 0..self.policy.forgeries {
            let target = ActorId::Rsu(self.rng.gen_range(0..rsus as u32));
            let forged = match self.forged % 3 {
                0 => {
                    let stp = self.known_or_random_stp(params);
                    let message = format!("forged beacon {}", self.forged).into_bytes();
                    let (s1, s2) = (self.random_point(params), self.random_point(params));
                    let b = SignedBeacon::<E> { message, stp, s1, s2 };
                    NetMessage {
                        from: ActorId::Vehicle(u32::MAX),
                        to: target,
                        epoch,
                        kind: MessageKind::SignedBeacon,
                        payload: b.to_bytes(),
                        origin: Origin::Forgery,
                    }
                }
                1 => {
                    let y_point = self.random_point(params);
                    let mut body = vec![0u8; params.l2 / 8];
                    self.rng.fill_bytes(&mut body);
                    let env = SigncryptedEnvelope::<E> { y_point, body };
                    NetMessage {
                        from: ActorId::Vehicle(u32::MAX),
                        to: target,
                        epoch,
                        kind: MessageKind::Envelope,
                        payload: env.to_bytes(),
                        origin: Origin::Forgery,
                    }
                }
                _ => {
                    let base = self.last_aggregate.clone().and_then(|(from, bytes)| {
                        AggregateSignature::<E>::from_bytes(params, &bytes).ok().map(|a| (from, a))
                    });
                    let stp = self.known_or_random_stp(params);
                    let extra = self.random_point(params);
                    let (from, agg) = match base {
                        Some((from, mut agg)) => {
                            agg.entries.push((format!("spliced {}", self.forged).into_bytes(), stp));
                            agg.s1 = agg.s1 + extra;
                            (from, agg)
                        }
                        None => {
                            let s2 = self.random_point(params);
                            (
                                target,
                                AggregateSignature {
                                    entries: vec![(b"forged aggregate".to_vec(), stp)],
                                    s1: extra,
                                    s2,
                                },
                            )
                        }
                    };
                    NetMessage {
                        from,
                        to: ActorId::Kgc,
                        epoch,
                        kind: MessageKind::AggregateSignature,
                        payload: agg.to_bytes(),
                        origin: Origin::Forgery,
                    }
                }
            };
            self.forged += 1;
            msgs.push(forged);
        }
        let log = msgs
            .iter()
            .map(|m| Mutation {
                action: Action::Forge,
                kind: m.kind,
                from: m.from,
                to: m.to,
                before: String::new(),
                after: payload_digest(&m.payload),
                bit: None,
            })
            .collect();
        (msgs, log)
    }
}
