//! Actor state machines. Each handler consumes one message, updates its
//! own state and returns a verdict plus outbound messages.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::log::OpCounts;
use super::message::{ActorId, MessageKind, NetMessage};
use crate::aggregate::{self, AggregateSignature, CommonString, ShortTermCredential, SignedBeacon, SigningLedger};
use crate::bilinear::BilinearSuite;
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::params::{MasterSecret, SystemParams};
use crate::signcryption::{self, LongTermCredential, RequestPlaintext, RsuCredential, SigncryptedEnvelope};
use crate::trace::{self, ChannelKey, PseudonymKind, ReplyPayload, TraceAuthority, Validity};

/// Shared per-step context.
pub struct Ctx<'a, E: BilinearSuite> {
    pub params: &'a SystemParams<E>,
    pub epoch: u64,
    pub cs: &'a CommonString,
    pub rng: &'a mut ChaCha8Rng,
    pub ops: &'a mut OpCounts,
}

/// Result of handling one message.
#[derive(Debug, Default)]
pub struct Verdict {
    pub accepted: bool,
    pub event: &'static str,
    pub detail: String,
    pub out: Vec<NetMessage>,
}

impl Verdict {
    fn accept(event: &'static str) -> Self {
        Self { accepted: true, event, ..Default::default() }
    }

    fn reject(event: &'static str, detail: impl Into<String>) -> Self {
        Self { accepted: false, event, detail: detail.into(), out: Vec::new() }
    }
}

pub struct Vehicle<E: BilinearSuite> {
    pub index: u32,
    pub rid: Vec<u8>,
    pub home: u32,
    cred: LongTermCredential<E>,
    channel: ChannelKey,
    outstanding: Option<u64>,
    stps: Vec<ShortTermCredential<E>>,
    validity: Option<Validity>,
    signing: SigningLedger,
}

impl<E: BilinearSuite> Vehicle<E> {
    pub fn new(index: u32, rid: Vec<u8>, home: u32, cred: LongTermCredential<E>, channel: ChannelKey) -> Self {
        Self {
            index,
            rid,
            home,
            cred,
            channel,
            outstanding: None,
            stps: Vec::new(),
            validity: None,
            signing: SigningLedger::new(),
        }
    }

    pub fn id(&self) -> ActorId {
        ActorId::Vehicle(self.index)
    }

    pub fn ltp(&self) -> &[u8] {
        &self.cred.ltp
    }

    /// Request (first epoch) or Update: signcrypts a fresh request to the
    /// home RSU. A newer request supersedes an unanswered one.
    pub fn request(&mut self, ctx: &mut Ctx<'_, E>, rsu_id: &[u8]) -> Result<NetMessage> {
        let m = RequestPlaintext { nonce: ctx.rng.gen(), ltp: self.cred.ltp.clone(), timestamp: ctx.epoch };
        let env = signcryption::signcrypt(ctx.params, &self.cred, &m, rsu_id, ctx.rng)?;
        ctx.ops.signcrypt += 1;
        self.outstanding = Some(ctx.epoch);
        Ok(NetMessage::honest(self.id(), ActorId::Rsu(self.home), ctx.epoch, MessageKind::Envelope, env.to_bytes()))
    }

    pub fn on_reply(&mut self, ctx: &mut Ctx<'_, E>, msg: &NetMessage) -> Verdict {
        if self.outstanding != Some(ctx.epoch) {
            return Verdict::reject("reply_rejected", "no outstanding request");
        }
        let payload = match trace::unwrap_reply(ctx.params, &self.channel, &msg.payload) {
            Ok(p) => p,
            Err(e) => return Verdict::reject("reply_rejected", e.to_string()),
        };
        if !payload.validity.covers(ctx.epoch) {
            return Verdict::reject("reply_rejected", "credentials not valid this epoch");
        }
        let creds = payload.credentials(ctx.params);
        if creds.is_empty() || !creds.iter().all(|c| c.is_consistent(ctx.params)) {
            return Verdict::reject("reply_rejected", "inconsistent short-term keys");
        }
        let mut v = Verdict::accept("credentials_installed");
        v.detail = format!("{} pseudonyms", creds.len());
        self.stps = creds;
        self.validity = Some(payload.validity);
        self.outstanding = None;
        v
    }

    /// Beacon number `k` of this epoch, signed under the `k`-th pseudonym.
    pub fn beacon(&mut self, ctx: &mut Ctx<'_, E>, k: usize) -> Option<NetMessage> {
        if !self.validity.is_some_and(|v| v.covers(ctx.epoch)) {
            return None;
        }
        let cred = self.stps.get(k)?.clone();
        let message = format!(
            "pos={},{};speed={};epoch={};seq={k}",
            ctx.rng.gen_range(0..10_000),
            ctx.rng.gen_range(0..10_000),
            ctx.rng.gen_range(0..200),
            ctx.epoch
        );
        let b = self.signing.sign(ctx.params, &cred, message.as_bytes(), ctx.cs, ctx.rng).ok()?;
        ctx.ops.sign += 1;
        Some(NetMessage::honest(self.id(), ActorId::Rsu(self.home), ctx.epoch, MessageKind::SignedBeacon, b.to_bytes()))
    }
}

/// Beacons stored, the epoch aggregate, whether it verified, outbound messages.
pub type EpochClose<E> = (usize, Option<AggregateSignature<E>>, bool, Vec<NetMessage>);

pub struct Rsu<E: BilinearSuite> {
    pub index: u32,
    cred: RsuCredential<E>,
    seen_requests: BTreeSet<(Vec<u8>, u64)>,
    store: Vec<SignedBeacon<E>>,
    stored: BTreeSet<(Vec<u8>, Vec<u8>)>,
    freshness_window: u64,
    chunk: usize,
}

/// Identity string of RSU `index`, the input to its H2 key point.
pub fn rsu_identity(index: u32) -> Vec<u8> {
    format!("RSU-{index:04}").into_bytes()
}

/// A beacon decoded and verified ahead of its handler, possibly in parallel.
pub type Checked<E> = Result<(SignedBeacon<E>, bool)>;

pub fn check_beacons<E: BilinearSuite>(
    params: &SystemParams<E>,
    cs: &CommonString,
    payloads: &[&[u8]],
    exec: Execution,
) -> Vec<Checked<E>> {
    exec.map(payloads, |p| {
        let b = SignedBeacon::from_bytes(params, p)?;
        params.check_identifier(&b.stp)?;
        let ok = aggregate::verify_single(params, &b, cs);
        Ok((b, ok))
    })
}

impl<E: BilinearSuite> Rsu<E> {
    pub fn new(index: u32, cred: RsuCredential<E>, freshness_window: u64, chunk: usize) -> Self {
        Self {
            index,
            cred,
            seen_requests: BTreeSet::new(),
            store: Vec::new(),
            stored: BTreeSet::new(),
            freshness_window,
            chunk,
        }
    }

    pub fn id(&self) -> ActorId {
        ActorId::Rsu(self.index)
    }

    /// Verify, check freshness and replay, obtain a batch from the KGC and
    /// answer with a sealed reply.
    pub fn on_envelope(&mut self, ctx: &mut Ctx<'_, E>, kgc: &mut Kgc<E>, msg: &NetMessage, batch: u32) -> Verdict {
        let env = match SigncryptedEnvelope::from_bytes(ctx.params, &msg.payload) {
            Ok(e) => e,
            Err(r) => return Verdict::reject("envelope_rejected", r.to_string()),
        };
        ctx.ops.designcrypt += 1;
        let m = match signcryption::designcrypt(ctx.params, &self.cred, &env) {
            Ok((m, _)) => m,
            Err(r) => return Verdict::reject("envelope_rejected", r.to_string()),
        };
        if m.timestamp > ctx.epoch || ctx.epoch - m.timestamp > self.freshness_window {
            return Verdict::reject("envelope_rejected", format!("stale timestamp {}", m.timestamp));
        }
        let key = (m.ltp.clone(), m.nonce);
        if self.seen_requests.contains(&key) {
            return Verdict::reject("envelope_rejected", "replayed request");
        }
        let (vehicle, channel, payload) = match kgc.issue_batch(ctx, &m.ltp, batch) {
            Ok(x) => x,
            Err(e) => return Verdict::reject("envelope_rejected", e.to_string()),
        };
        self.seen_requests.insert(key);
        let sealed = trace::wrap_reply(&channel, &payload, ctx.rng);
        let mut v = Verdict::accept("envelope_accepted");
        v.out.push(NetMessage::honest(
            self.id(),
            ActorId::Vehicle(vehicle),
            ctx.epoch,
            MessageKind::ReplyCiphertext,
            sealed,
        ));
        v
    }

    pub fn on_beacon(&mut self, ctx: &mut Ctx<'_, E>, checked: Checked<E>) -> Verdict {
        ctx.ops.verify_single += 1;
        let (b, ok) = match checked {
            Ok(x) => x,
            Err(e) => return Verdict::reject("beacon_rejected", e.to_string()),
        };
        let key = (b.message.clone(), b.stp.clone());
        if self.stored.contains(&key) {
            return Verdict::reject("beacon_rejected", "duplicate beacon");
        }
        if !ok {
            return Verdict::reject("beacon_rejected", "signature does not verify");
        }
        self.stored.insert(key);
        self.store.push(b);
        Verdict::accept("beacon_stored")
    }

    /// Aggregates the epoch's store in chunks, re-aggregates the chunks and
    /// checks the result. Returns the stored count, the aggregate (if any),
    /// whether it verified, and the outbound aggregate and trace requests.
    pub fn close_epoch(&mut self, ctx: &mut Ctx<'_, E>, trace_sample: f64) -> Result<EpochClose<E>> {
        let store = std::mem::take(&mut self.store);
        self.stored.clear();
        if store.is_empty() {
            return Ok((0, None, true, Vec::new()));
        }
        let parts = store
            .chunks(self.chunk)
            .map(|c| {
                ctx.ops.aggregate += 1;
                aggregate::aggregate(c)
            })
            .collect::<Result<Vec<_>>>()?;
        let agg = aggregate::re_aggregate(&parts)?;
        ctx.ops.verify_aggregate += 1;
        let verified = aggregate::verify_aggregate(ctx.params, &agg, ctx.cs);
        let mut out = vec![NetMessage::honest(
            self.id(),
            ActorId::Kgc,
            ctx.epoch,
            MessageKind::AggregateSignature,
            agg.to_bytes(),
        )];
        for b in &store {
            if ctx.rng.gen_bool(trace_sample) {
                out.push(NetMessage::honest(
                    self.id(),
                    ActorId::Kgc,
                    ctx.epoch,
                    MessageKind::TraceRequest,
                    b.stp.clone(),
                ));
            }
        }
        Ok((store.len(), Some(agg), verified, out))
    }
}

pub struct Kgc<E: BilinearSuite> {
    master: MasterSecret<E>,
    pub authority: TraceAuthority,
    vehicle_of: BTreeMap<Vec<u8>, u32>,
    hub: BTreeSet<(ActorId, u64)>,
    traced: BTreeSet<Vec<u8>>,
    /// Ground truth kept by the engine for scoring: pseudonym to RID.
    pub owners: BTreeMap<Vec<u8>, Vec<u8>>,
}

impl<E: BilinearSuite> Kgc<E> {
    pub fn new(master: MasterSecret<E>, authority: TraceAuthority) -> Self {
        Self {
            master,
            authority,
            vehicle_of: BTreeMap::new(),
            hub: BTreeSet::new(),
            traced: BTreeSet::new(),
            owners: BTreeMap::new(),
        }
    }

    /// Registers a vehicle and issues its long-term pseudonym and key.
    pub fn enroll(
        &mut self,
        params: &SystemParams<E>,
        index: u32,
        rid: &[u8],
        validity: Validity,
        rng: &mut ChaCha8Rng,
    ) -> Result<(LongTermCredential<E>, ChannelKey)> {
        let key = self.authority.register(rid, rng)?;
        let rec = self.authority.issue_pseudonym(rid, PseudonymKind::LongTerm, validity)?;
        self.vehicle_of.insert(rid.to_vec(), index);
        self.owners.insert(rec.pseudonym.clone(), rid.to_vec());
        let cred = signcryption::extract_vehicle_key(params, &self.master, &rec.pseudonym)?;
        Ok((cred, key))
    }

    pub fn rsu_credential(&self, params: &SystemParams<E>, index: u32) -> Result<RsuCredential<E>> {
        signcryption::extract_rsu_key(params, &self.master, &rsu_identity(index))
    }

    /// Backbone call from an RSU: resolve the LTP and issue short-term keys
    /// valid for the current epoch.
    fn issue_batch(
        &mut self,
        ctx: &mut Ctx<'_, E>,
        ltp: &[u8],
        batch: u32,
    ) -> Result<(u32, ChannelKey, ReplyPayload<E>)> {
        let who = self.authority.open(ltp).ok_or(Error::UnregisteredIdentity)?;
        if who.kind != PseudonymKind::LongTerm || !who.validity.covers(ctx.epoch) {
            return Err(Error::UnregisteredIdentity);
        }
        let vehicle = *self.vehicle_of.get(&who.rid).ok_or(Error::UnregisteredIdentity)?;
        let channel = self.authority.channel_key(&who.rid).ok_or(Error::UnregisteredIdentity)?.clone();
        let validity = Validity::new(ctx.epoch, ctx.epoch)?;
        let mut creds = Vec::with_capacity(batch as usize);
        for _ in 0..batch {
            let rec = self.authority.issue_pseudonym(&who.rid, PseudonymKind::ShortTerm, validity)?;
            self.owners.insert(rec.pseudonym.clone(), who.rid.clone());
            creds.push(aggregate::extract_short_term_key(ctx.params, &self.master, &rec.pseudonym)?);
        }
        Ok((vehicle, channel, ReplyPayload::from_credentials(&creds, validity)))
    }

    /// Hub: keeps one verified aggregate per RSU and epoch.
    pub fn on_aggregate(&mut self, ctx: &mut Ctx<'_, E>, msg: &NetMessage) -> (Verdict, usize) {
        let agg = match AggregateSignature::<E>::from_bytes(ctx.params, &msg.payload) {
            Ok(a) => a,
            Err(e) => return (Verdict::reject("aggregate_rejected", e.to_string()), 0),
        };
        ctx.ops.verify_aggregate += 1;
        if !aggregate::verify_aggregate(ctx.params, &agg, ctx.cs) {
            return (Verdict::reject("aggregate_rejected", "aggregate does not verify"), 0);
        }
        if !self.hub.insert((msg.from, ctx.epoch)) {
            return (Verdict::reject("aggregate_rejected", "already holds this RSU's aggregate"), 0);
        }
        let mut v = Verdict::accept("aggregate_accepted");
        v.detail = format!("{} entries", agg.entries.len());
        (v, agg.entries.len())
    }

    /// Traces a pseudonym; returns the RID on success.
    pub fn on_trace(&mut self, ctx: &mut Ctx<'_, E>, msg: &NetMessage) -> (Verdict, Option<Vec<u8>>) {
        ctx.ops.trace += 1;
        if self.traced.contains(&msg.payload) {
            return (Verdict::reject("trace_rejected", "already traced"), None);
        }
        match self.authority.trace(&msg.payload, ctx.epoch) {
            Some(rid) => {
                self.traced.insert(msg.payload.clone());
                let mut v = Verdict::accept("trace_resolved");
                v.detail = String::from_utf8_lossy(&rid).into_owned();
                (v, Some(rid))
            }
            None => (Verdict::reject("trace_rejected", "unknown pseudonym"), None),
        }
    }
}
