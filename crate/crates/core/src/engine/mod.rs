//! Deterministic discrete-event simulation of vehicles, RSUs and the KGC.
//!
//! Logical time advances in ticks; epoch `e` covers ticks
//! `[1000e, 1000e + 1000)`. Within an epoch:
//!
//! | tick offset | what happens                                         |
//! |-------------|------------------------------------------------------|
//! | 0           | vehicles send Request (first epoch) or Update        |
//! | 100 + 10k   | vehicles send their `k`-th beacon                    |
//! | 500         | targeted forgeries                                   |
//! | 900         | RSUs aggregate, re-aggregate, and ship to the KGC    |
//!
//! Every message crosses the adversary once on send. Delivery takes one
//! tick; replays arrive later. All events of one tick are handled in send
//! order, so a run is a pure function of its configuration. Beacons that
//! arrive on the same tick can be verified in parallel before the
//! sequential merge.

mod actors;
pub mod adversary;
mod config;
mod log;
mod message;

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use actors::{rsu_identity, Kgc, Rsu, Vehicle};
pub use adversary::{inject_adversary, Action, Delivery, Mutation};
pub use config::{AdversaryPolicy, ScenarioConfig};
pub use log::{ClassCounts, EpochMetrics, EventLog, EventRecord, OpCounts, RunMetrics, TraceAudit};
pub use message::{payload_digest, ActorId, MessageKind, NetMessage, Origin};

use self::actors::{check_beacons, Ctx};
use self::adversary::Adversary;
use crate::aggregate::CommonString;
use crate::bilinear::{BackendId, BilinearSuite, ToySuite};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::params::{setup, ParamConfig};
use crate::trace::{TraceAuthority, Validity};

pub const EPOCH_TICKS: u64 = 1000;
const BEACON_OFFSET: u64 = 100;
const BEACON_SPACING: u64 = 10;
const FORGE_OFFSET: u64 = 500;
const CLOSE_OFFSET: u64 = 900;

/// Random strings probed against the trace authority after a run.
pub const TRACE_PROBES: u64 = 10_000;

/// Accidental adversary acceptances tolerated over a run. On a toy group of
/// order near 1000 a random signature verifies with probability `1/q`.
pub fn adversary_allowance<E: BilinearSuite>(suite: &E) -> u64 {
    if suite.scalar_len() <= 3 {
        1
    } else {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub metrics: RunMetrics,
    pub log: EventLog,
    /// Broken invariants; empty for a clean run.
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    EpochStart,
    Beacon(usize),
    Forge,
    Close,
    Deliver(usize),
}

struct World<E: BilinearSuite> {
    cfg: ScenarioConfig,
    params: crate::params::SystemParams<E>,
    kgc: Kgc<E>,
    rsus: Vec<Rsu<E>>,
    vehicles: Vec<Vehicle<E>>,
    adversary: Adversary<ChaCha8Rng>,
    rng: ChaCha8Rng,
    queue: BinaryHeap<Reverse<(u64, u64, Event)>>,
    inflight: Vec<Option<NetMessage>>,
    seq: u64,
    log: EventLog,
    metrics: RunMetrics,
    accepted_digests: BTreeSet<(MessageKind, Vec<u8>)>,
    violations: Vec<String>,
}

/// Runs a scenario on the backend it names.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunReport> {
    cfg.validate()?;
    match cfg.backend {
        BackendId::Toy => run_scenario_with(ToySuite::new(cfg.toy_modulus, Vec::new())?, cfg),
        BackendId::External => Err(Error::BackendUnavailable(BackendId::External)),
    }
}

pub fn run_scenario_with<E: BilinearSuite>(suite: E, cfg: &ScenarioConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mut world = World::new(suite, cfg)?;
    world.run()?;
    Ok(world.finish())
}

impl<E: BilinearSuite> World<E> {
    fn new(suite: E, cfg: &ScenarioConfig) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let adv_rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_ad5e_5a21_u64);
        let pcfg = ParamConfig::default();
        let (params, master) = setup(suite, &pcfg, &mut rng)?;
        let authority = TraceAuthority::new(params.l1, &mut rng)?;
        let mut kgc = Kgc::new(master, authority);
        let rsus = (0..cfg.rsus as u32)
            .map(|i| Ok(Rsu::new(i, kgc.rsu_credential(&params, i)?, cfg.freshness_window, cfg.store_chunk)))
            .collect::<Result<Vec<_>>>()?;
        let lifetime = Validity::new(0, cfg.epochs - 1)?;
        let mut vehicles = Vec::with_capacity(cfg.vehicles);
        for i in 0..cfg.vehicles as u32 {
            let rid = format!("VIN-{i:06}").into_bytes();
            let (cred, key) = kgc.enroll(&params, i, &rid, lifetime, &mut rng)?;
            vehicles.push(Vehicle::new(i, rid, i % cfg.rsus as u32, cred, key));
        }
        let mut world = Self {
            cfg: cfg.clone(),
            params,
            kgc,
            rsus,
            vehicles,
            adversary: Adversary::new(cfg.adversary, adv_rng),
            rng,
            queue: BinaryHeap::new(),
            inflight: Vec::new(),
            seq: 0,
            log: EventLog::default(),
            metrics: RunMetrics { epochs: vec![EpochMetrics::default(); cfg.epochs as usize], ..Default::default() },
            accepted_digests: BTreeSet::new(),
            violations: Vec::new(),
        };
        world.note(
            0,
            "kgc",
            "setup",
            None,
            None,
            None,
            format!("{} vehicles, {} rsus, {}", cfg.vehicles, cfg.rsus, world.params.suite.descriptor()),
        );
        for e in 0..cfg.epochs {
            let base = e * EPOCH_TICKS;
            world.schedule(base, Event::EpochStart);
            for k in 0..cfg.beacon_rate as usize {
                world.schedule(base + BEACON_OFFSET + BEACON_SPACING * k as u64, Event::Beacon(k));
            }
            if cfg.adversary.forgeries > 0 {
                world.schedule(base + FORGE_OFFSET, Event::Forge);
            }
            world.schedule(base + CLOSE_OFFSET, Event::Close);
        }
        Ok(world)
    }

    fn schedule(&mut self, tick: u64, ev: Event) {
        self.queue.push(Reverse((tick, self.seq, ev)));
        self.seq += 1;
    }

    #[allow(clippy::too_many_arguments)]
    fn note(
        &mut self,
        tick: u64,
        actor: &str,
        event: &str,
        kind: Option<MessageKind>,
        peer: Option<String>,
        digest: Option<String>,
        detail: String,
    ) {
        self.log.push(EventRecord {
            seq: 0,
            tick,
            epoch: tick / EPOCH_TICKS,
            actor: actor.to_string(),
            event: event.to_string(),
            kind,
            peer,
            digest,
            detail,
        });
    }

    fn epoch_metrics(&mut self, tick: u64) -> &mut EpochMetrics {
        let e = ((tick / EPOCH_TICKS) as usize).min(self.metrics.epochs.len() - 1);
        &mut self.metrics.epochs[e]
    }

    /// Hands messages to the adversary and queues what it lets through.
    fn send(&mut self, tick: u64, msgs: Vec<NetMessage>) {
        if msgs.is_empty() {
            return;
        }
        for m in &msgs {
            let kind = m.kind;
            self.note(
                tick,
                &m.from.to_string(),
                "sent",
                Some(kind),
                Some(m.to.to_string()),
                Some(m.digest()),
                String::new(),
            );
        }
        let (deliveries, mutations) = self.adversary.intercept(&self.params, msgs);
        self.record_mutations(tick, mutations);
        for d in deliveries {
            self.inflight.push(Some(d.msg));
            let slot = self.inflight.len() - 1;
            self.schedule(tick + d.delay, Event::Deliver(slot));
        }
    }

    fn record_mutations(&mut self, tick: u64, mutations: Vec<Mutation>) {
        for m in mutations {
            let em = self.epoch_metrics(tick);
            let name = match m.action {
                Action::Drop => {
                    em.dropped += 1;
                    "drop"
                }
                Action::Replay => {
                    em.replayed += 1;
                    "replay"
                }
                Action::Tamper => {
                    em.tampered += 1;
                    "tamper"
                }
                Action::Forge => {
                    em.forged += 1;
                    "forge"
                }
            };
            let detail = match m.bit {
                Some(b) => format!("before={} bit={b}", m.before),
                None if m.before.is_empty() => String::new(),
                None => format!("before={}", m.before),
            };
            let after = (!m.after.is_empty()).then_some(m.after);
            self.note(tick, "adversary", name, Some(m.kind), Some(format!("{}->{}", m.from, m.to)), after, detail);
        }
    }

    fn run(&mut self) -> Result<()> {
        while let Some(Reverse((tick, _, _))) = self.queue.peek().cloned() {
            let mut batch = Vec::new();
            while let Some(Reverse((t, _, _))) = self.queue.peek() {
                if *t != tick {
                    break;
                }
                let Reverse((_, _, ev)) = self.queue.pop().expect("peeked");
                batch.push(ev);
            }
            self.step(tick, batch)?;
        }
        Ok(())
    }

    fn step(&mut self, tick: u64, events: Vec<Event>) -> Result<()> {
        let epoch = tick / EPOCH_TICKS;
        let cs = CommonString::for_epoch(self.cfg.seed, epoch);
        // decode and verify this tick's beacons up front
        let beacon_slots: Vec<usize> = events
            .iter()
            .filter_map(|e| match e {
                Event::Deliver(slot) => self.inflight[*slot]
                    .as_ref()
                    .filter(|m| m.kind == MessageKind::SignedBeacon && matches!(m.to, ActorId::Rsu(_)))
                    .map(|_| *slot),
                _ => None,
            })
            .collect();
        let exec = if self.cfg.parallel_verify { Execution::preferred() } else { Execution::Sequential };
        let payloads: Vec<&[u8]> =
            beacon_slots.iter().map(|s| self.inflight[*s].as_ref().expect("in flight").payload.as_slice()).collect();
        let mut checked: Vec<_> = check_beacons(&self.params, &cs, &payloads, exec).into_iter().map(Some).collect();

        for ev in events {
            match ev {
                Event::EpochStart => self.start_epoch(tick, epoch)?,
                Event::Beacon(k) => self.send_beacons(tick, &cs, k),
                Event::Forge => {
                    let (msgs, mutations) = self.adversary.forge(&self.params, epoch, self.cfg.rsus);
                    self.record_mutations(tick, mutations);
                    for m in msgs {
                        self.inflight.push(Some(m));
                        let slot = self.inflight.len() - 1;
                        self.schedule(tick + 1, Event::Deliver(slot));
                    }
                }
                Event::Close => self.close_epoch(tick, &cs)?,
                Event::Deliver(slot) => {
                    let msg = self.inflight[slot].take().expect("delivered once");
                    let pre = beacon_slots.iter().position(|s| *s == slot).and_then(|i| checked[i].take());
                    self.deliver(tick, &cs, msg, pre);
                }
            }
        }
        Ok(())
    }

    fn ctx<'a>(
        params: &'a crate::params::SystemParams<E>,
        epoch: u64,
        cs: &'a CommonString,
        rng: &'a mut ChaCha8Rng,
        ops: &'a mut OpCounts,
    ) -> Ctx<'a, E> {
        Ctx { params, epoch, cs, rng, ops }
    }

    fn start_epoch(&mut self, tick: u64, epoch: u64) -> Result<()> {
        let cs = CommonString::for_epoch(self.cfg.seed, epoch);
        let mut out = Vec::new();
        let e = epoch as usize;
        for v in &mut self.vehicles {
            let rsu_id = rsu_identity(v.home);
            let mut ctx = Self::ctx(&self.params, epoch, &cs, &mut self.rng, &mut self.metrics.epochs[e].ops);
            out.push(v.request(&mut ctx, &rsu_id)?);
            self.metrics.epochs[e].requests_sent += 1;
        }
        let phase = if epoch == 0 { "request phase" } else { "update phase" };
        self.note(tick, "kgc", "epoch_start", None, None, Some(payload_digest(&cs.bytes)), phase.to_string());
        self.send(tick, out);
        Ok(())
    }

    fn send_beacons(&mut self, tick: u64, cs: &CommonString, k: usize) {
        let epoch = tick / EPOCH_TICKS;
        let e = epoch as usize;
        let mut out = Vec::new();
        let mut idle = Vec::new();
        for v in &mut self.vehicles {
            let mut ctx = Self::ctx(&self.params, epoch, cs, &mut self.rng, &mut self.metrics.epochs[e].ops);
            match v.beacon(&mut ctx, k) {
                Some(m) => {
                    self.metrics.epochs[e].beacons_sent += 1;
                    out.push(m);
                }
                None => idle.push(v.id()),
            }
        }
        for id in idle {
            self.note(tick, &id.to_string(), "beacon_skipped", None, None, None, "no valid pseudonym".into());
        }
        self.send(tick, out);
    }

    fn close_epoch(&mut self, tick: u64, cs: &CommonString) -> Result<()> {
        let epoch = tick / EPOCH_TICKS;
        let e = epoch as usize;
        let mut out = Vec::new();
        for i in 0..self.rsus.len() {
            let mut ctx = Self::ctx(&self.params, epoch, cs, &mut self.rng, &mut self.metrics.epochs[e].ops);
            let (stored, agg, verified, msgs) = self.rsus[i].close_epoch(&mut ctx, self.cfg.trace_sample)?;
            let entries = agg.as_ref().map_or(0, |a| a.entries.len());
            let actor = ActorId::Rsu(i as u32).to_string();
            if entries != stored {
                self.violations.push(format!(
                    "epoch {epoch} {actor}: aggregate holds {entries} entries for {stored} stored beacons"
                ));
            }
            if !verified {
                self.violations.push(format!("epoch {epoch} {actor}: own re-aggregated signature fails verification"));
            }
            self.note(
                tick,
                &actor,
                "epoch_closed",
                None,
                None,
                None,
                format!("stored={stored} entries={entries} verified={verified}"),
            );
            out.extend(msgs);
        }
        self.send(tick, out);
        Ok(())
    }

    fn deliver(&mut self, tick: u64, cs: &CommonString, msg: NetMessage, pre: Option<actors::Checked<E>>) {
        let epoch = tick / EPOCH_TICKS;
        let e = (epoch as usize).min(self.metrics.epochs.len() - 1);
        let batch = self.cfg.stp_batch;
        let mut traced = None;
        let mut entries = 0;
        let mut ctx = Ctx { params: &self.params, epoch, cs, rng: &mut self.rng, ops: &mut self.metrics.epochs[e].ops };
        let verdict = match (msg.kind, msg.to) {
            (MessageKind::Envelope, ActorId::Rsu(i)) => match self.rsus.get_mut(i as usize) {
                Some(r) => Some(r.on_envelope(&mut ctx, &mut self.kgc, &msg, batch)),
                None => None,
            },
            (MessageKind::ReplyCiphertext, ActorId::Vehicle(i)) => {
                self.vehicles.get_mut(i as usize).map(|v| v.on_reply(&mut ctx, &msg))
            }
            (MessageKind::SignedBeacon, ActorId::Rsu(i)) => match (self.rsus.get_mut(i as usize), pre) {
                (Some(r), Some(checked)) => Some(r.on_beacon(&mut ctx, checked)),
                _ => None,
            },
            (MessageKind::AggregateSignature, ActorId::Kgc) => {
                let (v, n) = self.kgc.on_aggregate(&mut ctx, &msg);
                entries = n;
                Some(v)
            }
            (MessageKind::TraceRequest, ActorId::Kgc) => {
                let (v, rid) = self.kgc.on_trace(&mut ctx, &msg);
                traced = rid;
                Some(v)
            }
            _ => None,
        };
        let Some(verdict) = verdict else {
            self.note(
                tick,
                &msg.to.to_string(),
                "undeliverable",
                Some(msg.kind),
                Some(msg.from.to_string()),
                Some(msg.digest()),
                String::new(),
            );
            return;
        };

        let digest = msg.digest();
        let seen_before = self.accepted_digests.contains(&(msg.kind, msg.payload.clone()));
        let em = &mut self.metrics.epochs[e];
        let class = em.class_mut(msg.kind);
        class.delivered += 1;
        let mut adversary_win = false;
        if verdict.accepted {
            class.accepted += 1;
            adversary_win = match msg.origin {
                Origin::Tamper | Origin::Forgery => true,
                Origin::Replay => seen_before,
                Origin::Honest => false,
            };
            if !adversary_win && msg.kind == MessageKind::SignedBeacon {
                em.beacons_stored += 1;
            }
            match msg.kind {
                MessageKind::ReplyCiphertext => em.credentials_installed += 1,
                MessageKind::AggregateSignature => em.aggregate_entries += entries as u64,
                _ => {}
            }
            self.accepted_digests.insert((msg.kind, msg.payload.clone()));
        } else {
            class.rejected += 1;
            if msg.origin == Origin::Honest {
                em.honest_rejections += 1;
            }
        }
        if adversary_win {
            em.adversary_successes += 1;
        }
        if let Some(rid) = traced {
            if self.kgc.owners.get(&msg.payload) == Some(&rid) {
                self.metrics.epochs[e].traces_matched += 1;
            } else {
                self.violations.push(format!(
                    "epoch {epoch}: pseudonym {} traced to the wrong identity",
                    hex::encode(&msg.payload)
                ));
            }
        }
        let to = msg.to.to_string();
        self.note(
            tick,
            &to,
            verdict.event,
            Some(msg.kind),
            Some(msg.from.to_string()),
            Some(digest.clone()),
            verdict.detail,
        );
        if adversary_win {
            self.note(
                tick,
                "adversary",
                "adversary_success",
                Some(msg.kind),
                Some(to),
                Some(digest),
                format!("{:?}", msg.origin).to_lowercase(),
            );
        } else if !verdict.accepted && msg.origin == Origin::Honest {
            self.note(tick, &msg.to.to_string(), "honest_rejection", Some(msg.kind), None, Some(digest), String::new());
        }
        self.send(tick, verdict.out);
    }

    fn finish(mut self) -> RunReport {
        let (traced, issued) = self.kgc.authority.sweep();
        let mut unknown = 0;
        let len = self.params.id_len();
        for _ in 0..TRACE_PROBES {
            let mut probe = vec![0u8; len];
            self.rng.fill_bytes(&mut probe);
            if self.kgc.authority.open(&probe).is_none() {
                unknown += 1;
            }
        }
        self.metrics.audit =
            TraceAudit { issued: issued as u64, traced: traced as u64, probes: TRACE_PROBES, probes_unknown: unknown };
        let end = self.cfg.epochs * EPOCH_TICKS;
        self.note(
            end,
            "kgc",
            "trace_audit",
            None,
            None,
            None,
            format!("issued={issued} traced={traced} probes={TRACE_PROBES} unknown={unknown}"),
        );

        let total = self.metrics.total();
        let mut v = std::mem::take(&mut self.violations);
        let allowance = adversary_allowance(&self.params.suite);
        if total.adversary_successes > allowance {
            v.push(format!("{} adversary-originated acceptances (allowance {allowance})", total.adversary_successes));
        }
        if total.honest_rejections > 0 {
            v.push(format!("{} intact honest messages rejected", total.honest_rejections));
        }
        for k in MessageKind::ALL {
            let c = total.class(k);
            if c.accepted + c.rejected != c.delivered {
                v.push(format!("{} accounting: {} + {} != {}", k.name(), c.accepted, c.rejected, c.delivered));
            }
        }
        if traced != issued {
            v.push(format!("only {traced} of {issued} issued pseudonyms trace back"));
        }
        if unknown != TRACE_PROBES {
            v.push(format!("{} random strings traced to an identity", TRACE_PROBES - unknown));
        }
        let a = &self.cfg.adversary;
        if a.drop == 0.0 && a.tamper == 0.0 {
            let want = self.cfg.vehicles as u64;
            for (e, m) in self.metrics.epochs.iter().enumerate() {
                if m.credentials_installed < want {
                    v.push(format!("epoch {e}: {} of {want} vehicles completed their update", m.credentials_installed));
                }
                let beacons = want * u64::from(self.cfg.beacon_rate);
                if m.beacons_sent != beacons || m.beacons_stored < beacons {
                    v.push(format!("epoch {e}: {} of {beacons} honest beacons stored", m.beacons_stored));
                }
            }
        }
        for msg in &v {
            self.note(end, "engine", "violation", None, None, None, msg.clone());
        }
        RunReport { metrics: self.metrics, log: self.log, violations: v }
    }
}
