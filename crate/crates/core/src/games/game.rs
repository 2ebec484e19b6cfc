//! Forgery games with a challenger that exposes only the query surfaces.
//!
//! The adversary is a callback that receives a [`Challenger`] and returns
//! its forgery. Every query is recorded in the [`QueryLedger`] and in the
//! oracle transcript; the verdict is decided from the ledger alone.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::table::OracleTable;
use crate::aggregate::{self, AggregateSignature, CommonString, ShortTermCredential, SignedBeacon, SigningLedger};
use crate::bilinear::BilinearSuite;
use crate::error::Result;
use crate::params::{setup, MasterSecret, ParamConfig, SystemParams};
use crate::signcryption::{self, LongTermCredential, RequestPlaintext, RsuCredential, SigncryptedEnvelope};
use crate::trace::{self, ChannelKey, PseudonymKind, TraceAuthority, Validity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GameId {
    SigncryptAuth,
    AggregateAuth,
}

impl GameId {
    pub fn name(self) -> &'static str {
        match self {
            GameId::SigncryptAuth => "signcrypt_auth",
            GameId::AggregateAuth => "aggregate_auth",
        }
    }
}

impl fmt::Display for GameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for GameId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "signcrypt_auth" => Ok(GameId::SigncryptAuth),
            "aggregate_auth" => Ok(GameId::AggregateAuth),
            other => Err(format!("unknown game `{other}` (expected signcrypt_auth or aggregate_auth)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// Valid output on a fresh message for an identity whose key was never
    /// extracted.
    Forgery,
    /// Valid fresh output, but the adversary held the signing key.
    KeyCompromise,
    Lose(String),
    /// The adversary broke the query protocol.
    Disqualified(String),
}

impl Verdict {
    pub fn is_forgery(&self) -> bool {
        matches!(self, Verdict::Forgery)
    }
}

/// Append-only record of the adversary's queries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryLedger {
    /// Q1: `(encode(m), RSU id)`.
    pub signcrypted: BTreeSet<(Vec<u8>, Vec<u8>)>,
    pub designcrypted: usize,
    /// Q3: identities whose channel traffic was revealed.
    pub channel: BTreeSet<Vec<u8>>,
    /// Q4 and Q5.
    pub extracted: BTreeSet<Vec<u8>>,
    /// Q6: `(message, STP)`.
    pub signed: BTreeSet<(Vec<u8>, Vec<u8>)>,
    pub traced: BTreeSet<Vec<u8>>,
}

#[derive(Debug, Clone)]
pub struct GameOutcome {
    pub verdict: Verdict,
    pub ledger: QueryLedger,
    /// Line-delimited JSON oracle and query transcript.
    pub transcript: String,
    pub aborts: usize,
}

/// Holds the master key, an [`OracleTable`] answering every hash, and a
/// trace authority with a few registered vehicles whose short-term
/// pseudonyms are public.
pub struct Challenger<E: BilinearSuite> {
    params: SystemParams<E>,
    table: Arc<OracleTable<E>>,
    master: MasterSecret<E>,
    authority: TraceAuthority,
    published: Vec<Vec<u8>>,
    channel_keys: BTreeMap<Vec<u8>, ChannelKey>,
    signing: SigningLedger,
    ledger: QueryLedger,
    violations: Vec<String>,
    rng: ChaCha8Rng,
}

/// Vehicles registered with the challenger's trace authority.
const PUBLISHED_VEHICLES: usize = 3;

impl<E: BilinearSuite> Challenger<E> {
    pub fn new(suite: E, config: &ParamConfig, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = Arc::new(OracleTable::new(suite.clone(), seed.to_be_bytes().to_vec()));
        let (params, master) = setup(suite, config, &mut rng)?;
        let params = params.with_oracle(table.clone());
        let mut authority = TraceAuthority::new(config.l1, &mut rng)?;
        let mut published = Vec::new();
        for i in 0..PUBLISHED_VEHICLES {
            let rid = format!("challenger-vehicle-{i}").into_bytes();
            authority.register(&rid, &mut rng)?;
            let rec = authority.issue_pseudonym(&rid, PseudonymKind::ShortTerm, Validity::new(0, 0)?)?;
            published.push(rec.pseudonym);
        }
        Ok(Self {
            params,
            table,
            master,
            authority,
            published,
            channel_keys: BTreeMap::new(),
            signing: SigningLedger::new(),
            ledger: QueryLedger::default(),
            violations: Vec::new(),
            rng,
        })
    }

    pub fn params(&self) -> &SystemParams<E> {
        &self.params
    }

    /// Short-term pseudonyms the trace authority has issued.
    pub fn published_pseudonyms(&self) -> &[Vec<u8>] {
        &self.published
    }

    fn violation(&mut self, what: String) {
        self.table.record_event("violation", what.as_bytes(), &[]);
        self.violations.push(what);
    }

    fn rsu(&self, id: &[u8]) -> Option<RsuCredential<E>> {
        signcryption::extract_rsu_key(&self.params, &self.master, id).ok()
    }

    /// Q1: signcryption of `m` from its own LTP to `rsu_id`.
    pub fn q1_signcrypt(&mut self, m: &RequestPlaintext, rsu_id: &[u8]) -> Option<SigncryptedEnvelope<E>> {
        let Ok(cred) = signcryption::extract_vehicle_key(&self.params, &self.master, &m.ltp) else {
            self.violation(format!("Q1 with malformed LTP of {} bytes", m.ltp.len()));
            return None;
        };
        if self.rsu(rsu_id).is_none() {
            self.violation("Q1 with malformed RSU identity".into());
            return None;
        }
        match signcryption::signcrypt(&self.params, &cred, m, rsu_id, &mut self.rng) {
            Ok(env) => {
                self.ledger.signcrypted.insert((m.encode(), rsu_id.to_vec()));
                self.table.record_event("Q1", &m.encode(), &env.to_bytes());
                Some(env)
            }
            Err(e) => {
                self.violation(format!("Q1 rejected: {e}"));
                None
            }
        }
    }

    /// Q2: designcryption at `rsu_id`; `None` when the envelope is rejected.
    pub fn q2_designcrypt(&mut self, env: &SigncryptedEnvelope<E>, rsu_id: &[u8]) -> Option<RequestPlaintext> {
        let Some(rsu) = self.rsu(rsu_id) else {
            self.violation("Q2 with malformed RSU identity".into());
            return None;
        };
        self.ledger.designcrypted += 1;
        let out = signcryption::designcrypt(&self.params, &rsu, env).ok().map(|(m, _)| m);
        self.table.record_event("Q2", &env.to_bytes(), &out.as_ref().map(|m| m.encode()).unwrap_or_default());
        out
    }

    /// Q3: a plaintext/ciphertext pair of the identity's secure channel.
    pub fn q3_channel(&mut self, identity: &[u8], plaintext: &[u8]) -> Option<Vec<u8>> {
        if identity.is_empty() {
            self.violation("Q3 with empty identity".into());
            return None;
        }
        let key = match self.channel_keys.get(identity) {
            Some(k) => k.clone(),
            None => {
                let k = ChannelKey::random(&mut self.rng);
                self.channel_keys.insert(identity.to_vec(), k.clone());
                k
            }
        };
        let sealed = trace::seal(&key, plaintext, &mut self.rng);
        self.ledger.channel.insert(identity.to_vec());
        self.table.record_event("Q3", plaintext, &sealed);
        Some(sealed)
    }

    /// Q4: long-term private key extraction.
    pub fn q4_extract(&mut self, ltp: &[u8]) -> Option<LongTermCredential<E>> {
        match signcryption::extract_vehicle_key(&self.params, &self.master, ltp) {
            Ok(cred) => {
                self.ledger.extracted.insert(ltp.to_vec());
                self.table.record_event("Q4", ltp, &[]);
                Some(cred)
            }
            Err(e) => {
                self.violation(format!("Q4 rejected: {e}"));
                None
            }
        }
    }

    /// Q5: short-term private key extraction.
    pub fn q5_extract(&mut self, stp: &[u8]) -> Option<ShortTermCredential<E>> {
        match aggregate::extract_short_term_key(&self.params, &self.master, stp) {
            Ok(cred) => {
                self.ledger.extracted.insert(stp.to_vec());
                self.table.record_event("Q5", stp, &[]);
                Some(cred)
            }
            Err(e) => {
                self.violation(format!("Q5 rejected: {e}"));
                None
            }
        }
    }

    /// Q6: a beacon signature. Each pseudonym signs at most once per
    /// common string; asking twice is a protocol violation.
    pub fn q6_sign(&mut self, cs: &CommonString, message: &[u8], stp: &[u8]) -> Option<SignedBeacon<E>> {
        let cred = match aggregate::extract_short_term_key(&self.params, &self.master, stp) {
            Ok(c) => c,
            Err(e) => {
                self.violation(format!("Q6 rejected: {e}"));
                return None;
            }
        };
        match self.signing.sign(&self.params, &cred, message, cs, &mut self.rng) {
            Ok(beacon) => {
                self.ledger.signed.insert((message.to_vec(), stp.to_vec()));
                self.table.record_event("Q6", &aggregate::challenge_input(message, stp, cs), &beacon.to_bytes());
                Some(beacon)
            }
            Err(e) => {
                self.violation(format!("Q6 rejected: {e}"));
                None
            }
        }
    }

    /// Q7: the real identity behind a pseudonym, if it authenticates.
    pub fn q7_trace(&mut self, pseudonym: &[u8]) -> Option<Vec<u8>> {
        self.ledger.traced.insert(pseudonym.to_vec());
        let rid = self.authority.open(pseudonym).map(|t| t.rid);
        self.table.record_event("Q7", pseudonym, rid.as_deref().unwrap_or_default());
        rid
    }

    fn finish(self, verdict: Verdict) -> GameOutcome {
        let verdict = match self.violations.first() {
            Some(v) => Verdict::Disqualified(v.clone()),
            None => verdict,
        };
        GameOutcome {
            verdict,
            ledger: self.ledger,
            transcript: self.table.transcript_dump(),
            aborts: self.table.aborts(),
        }
    }

    fn judge_signcryption(self, output: Option<(SigncryptedEnvelope<E>, Vec<u8>)>) -> GameOutcome {
        let Some((env, rsu_id)) = output else {
            return self.finish(Verdict::Lose("no output".into()));
        };
        let Some(rsu) = self.rsu(&rsu_id) else {
            return self.finish(Verdict::Lose("output names a malformed RSU".into()));
        };
        let verdict = match signcryption::designcrypt(&self.params, &rsu, &env) {
            Err(rej) => Verdict::Lose(format!("designcryption rejects: {rej}")),
            Ok((m, _)) if self.ledger.signcrypted.contains(&(m.encode(), rsu_id.clone())) => {
                Verdict::Lose("output was obtained from Q1".into())
            }
            Ok((m, _)) if self.ledger.extracted.contains(&m.ltp) => Verdict::KeyCompromise,
            Ok(_) => Verdict::Forgery,
        };
        self.finish(verdict)
    }

    fn judge_aggregate(self, output: Option<(AggregateSignature<E>, CommonString)>) -> GameOutcome {
        let Some((agg, cs)) = output else {
            return self.finish(Verdict::Lose("no output".into()));
        };
        if !aggregate::verify_aggregate(&self.params, &agg, &cs) {
            return self.finish(Verdict::Lose("aggregate does not verify".into()));
        }
        let fresh: Vec<_> = agg.entries.iter().filter(|e| !self.ledger.signed.contains(*e)).collect();
        let verdict = if fresh.is_empty() {
            Verdict::Lose("every entry was obtained from Q6".into())
        } else if fresh.iter().any(|(_, stp)| !self.ledger.extracted.contains(stp)) {
            Verdict::Forgery
        } else {
            Verdict::KeyCompromise
        };
        self.finish(verdict)
    }
}

/// Runs the signcryption-authentication game. The adversary returns an
/// envelope and the RSU identity it is addressed to.
pub fn run_signcryption_game<E, A>(suite: E, config: &ParamConfig, seed: u64, adversary: A) -> Result<GameOutcome>
where
    E: BilinearSuite,
    A: FnOnce(&mut Challenger<E>, &mut dyn RngCore) -> Option<(SigncryptedEnvelope<E>, Vec<u8>)>,
{
    let mut ch = Challenger::new(suite, config, seed)?;
    let mut tape = ChaCha8Rng::seed_from_u64(seed ^ 0xad5e_5a17);
    let output = adversary(&mut ch, &mut tape);
    Ok(ch.judge_signcryption(output))
}

/// Runs the aggregate-authentication game. The adversary returns an
/// aggregate and the common string it claims to be valid under.
pub fn run_aggregate_game<E, A>(suite: E, config: &ParamConfig, seed: u64, adversary: A) -> Result<GameOutcome>
where
    E: BilinearSuite,
    A: FnOnce(&mut Challenger<E>, &mut dyn RngCore) -> Option<(AggregateSignature<E>, CommonString)>,
{
    let mut ch = Challenger::new(suite, config, seed)?;
    let mut tape = ChaCha8Rng::seed_from_u64(seed ^ 0xad5e_5a17);
    let output = adversary(&mut ch, &mut tape);
    Ok(ch.judge_aggregate(output))
}
