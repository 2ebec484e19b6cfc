//! Pseudonym lifecycle at the KGC.
//!
//! Pseudonyms are single AES-128 blocks under the tracing key `lambda`:
//!
//! ```text
//! offset  0..4   registration index (u32 BE)
//!         4      kind (0 = long-term, 1 = short-term)
//!         5..7   first valid epoch (u16 BE)
//!         7..9   last valid epoch (u16 BE)
//!         9..12  per-identity issuance counter (u24 BE)
//!        12..16  zero redundancy
//! ```
//!
//! Tracing decrypts the block and checks the redundancy, so it needs no
//! lookup beyond the registration table and rejects random strings with
//! probability `1 - 2^-32`. For `l1 > 128` the block is followed by zero
//! padding, which is checked too.
//!
//! Reply/Update payloads (`count:u32 || (STP || D0 || D1)* || from:u64 || to:u64`)
//! travel sealed under the vehicle's channel key with ChaCha20-Poly1305:
//! `nonce (12 bytes) || ciphertext || tag (16 bytes)`.

use std::collections::BTreeMap;
use std::fmt;

use aes::cipher::{BlockDecrypt, BlockEncrypt, KeyInit};
use aes::Aes128;
use chacha20poly1305::aead::Aead;
use chacha20poly1305::{ChaCha20Poly1305, Nonce};
use rand::RngCore;

use crate::aggregate::{key_points, ShortTermCredential};
use crate::bilinear::{BilinearSuite, GroupElement};
use crate::error::{Error, Result};
use crate::params::SystemParams;

const BLOCK: usize = 16;
const MAX_COUNTER: u32 = (1 << 24) - 1;
const NONCE_LEN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PseudonymKind {
    LongTerm,
    ShortTerm,
}

impl PseudonymKind {
    fn code(self) -> u8 {
        match self {
            PseudonymKind::LongTerm => 0,
            PseudonymKind::ShortTerm => 1,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(PseudonymKind::LongTerm),
            1 => Some(PseudonymKind::ShortTerm),
            _ => None,
        }
    }
}

/// Inclusive epoch range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Validity {
    pub from: u64,
    pub to: u64,
}

impl Validity {
    pub fn new(from: u64, to: u64) -> Result<Self> {
        if from > to {
            return Err(Error::EmptyValidity { from, to });
        }
        if to > u16::MAX as u64 {
            return Err(Error::Config(format!("epoch {to} exceeds the 16-bit validity field")));
        }
        Ok(Self { from, to })
    }

    pub fn covers(&self, epoch: u64) -> bool {
        (self.from..=self.to).contains(&epoch)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TraceMode {
    /// Only pseudonyms valid at the query epoch are traced.
    #[default]
    Strict,
    Lenient,
}

#[derive(Clone, PartialEq, Eq)]
pub struct ChannelKey(pub [u8; 32]);

impl fmt::Debug for ChannelKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ChannelKey(..)")
    }
}

impl ChannelKey {
    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut k = [0u8; 32];
        rng.fill_bytes(&mut k);
        Self(k)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let bytes = hex::decode(s.trim()).map_err(|e| Error::encoding(e.to_string()))?;
        let k: [u8; 32] = bytes.try_into().map_err(|_| Error::encoding("channel key must be 32 bytes"))?;
        Ok(Self(k))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudonymRecord {
    pub pseudonym: Vec<u8>,
    pub rid: Vec<u8>,
    pub validity: Validity,
    pub kind: PseudonymKind,
}

/// What a successful trace reveals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TracedIdentity {
    pub rid: Vec<u8>,
    pub kind: PseudonymKind,
    pub validity: Validity,
}

#[derive(Debug, Clone)]
struct Registration {
    rid: Vec<u8>,
    key: ChannelKey,
    issued: u32,
}

/// KGC state: tracing key, registration table and issuance ledger.
/// Single writer; tracing only needs `&self`.
pub struct TraceAuthority {
    cipher: Aes128,
    pseudonym_len: usize,
    mode: TraceMode,
    registrations: Vec<Registration>,
    by_rid: BTreeMap<Vec<u8>, u32>,
    issued: Vec<PseudonymRecord>,
}

impl fmt::Debug for TraceAuthority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TraceAuthority")
            .field("pseudonym_len", &self.pseudonym_len)
            .field("mode", &self.mode)
            .field("registrations", &self.registrations.len())
            .field("issued", &self.issued.len())
            .finish()
    }
}

impl TraceAuthority {
    /// `l1` is the pseudonym length in bits; at least one AES block.
    pub fn new<R: RngCore + ?Sized>(l1: usize, rng: &mut R) -> Result<Self> {
        let mut lambda = [0u8; 16];
        rng.fill_bytes(&mut lambda);
        Self::with_key(l1, lambda)
    }

    pub fn with_key(l1: usize, lambda: [u8; 16]) -> Result<Self> {
        if !l1.is_multiple_of(8) || l1 / 8 < BLOCK {
            return Err(Error::InvalidBitLength(l1));
        }
        Ok(Self {
            cipher: Aes128::new(&lambda.into()),
            pseudonym_len: l1 / 8,
            mode: TraceMode::Strict,
            registrations: Vec::new(),
            by_rid: BTreeMap::new(),
            issued: Vec::new(),
        })
    }

    pub fn set_mode(&mut self, mode: TraceMode) {
        self.mode = mode;
    }

    pub fn mode(&self) -> TraceMode {
        self.mode
    }

    /// Registers `rid` with a fresh channel key. Re-registering returns the
    /// existing key.
    pub fn register<R: RngCore + ?Sized>(&mut self, rid: &[u8], rng: &mut R) -> Result<ChannelKey> {
        if let Some(k) = self.channel_key(rid) {
            return Ok(k.clone());
        }
        let key = ChannelKey::random(rng);
        self.register_with_key(rid, key.clone())?;
        Ok(key)
    }

    pub fn register_with_key(&mut self, rid: &[u8], key: ChannelKey) -> Result<()> {
        if rid.is_empty() {
            return Err(Error::Config("empty real identity".into()));
        }
        if self.by_rid.contains_key(rid) {
            return Err(Error::Config(format!("identity {} already registered", String::from_utf8_lossy(rid))));
        }
        let idx =
            u32::try_from(self.registrations.len()).map_err(|_| Error::Config("registration table full".into()))?;
        self.by_rid.insert(rid.to_vec(), idx);
        self.registrations.push(Registration { rid: rid.to_vec(), key, issued: 0 });
        Ok(())
    }

    pub fn channel_key(&self, rid: &[u8]) -> Option<&ChannelKey> {
        self.by_rid.get(rid).map(|i| &self.registrations[*i as usize].key)
    }

    pub fn issue_pseudonym(&mut self, rid: &[u8], kind: PseudonymKind, validity: Validity) -> Result<PseudonymRecord> {
        Validity::new(validity.from, validity.to)?;
        let idx = *self.by_rid.get(rid).ok_or(Error::UnregisteredIdentity)?;
        let reg = &mut self.registrations[idx as usize];
        if reg.issued > MAX_COUNTER {
            return Err(Error::IssuanceExhausted);
        }
        let counter = reg.issued;
        reg.issued += 1;

        let mut block = [0u8; BLOCK];
        block[0..4].copy_from_slice(&idx.to_be_bytes());
        block[4] = kind.code();
        block[5..7].copy_from_slice(&(validity.from as u16).to_be_bytes());
        block[7..9].copy_from_slice(&(validity.to as u16).to_be_bytes());
        block[9..12].copy_from_slice(&counter.to_be_bytes()[1..]);
        let mut block = block.into();
        self.cipher.encrypt_block(&mut block);
        let mut pseudonym = vec![0u8; self.pseudonym_len];
        pseudonym[..BLOCK].copy_from_slice(&block);

        let record = PseudonymRecord { pseudonym, rid: rid.to_vec(), validity, kind };
        self.issued.push(record.clone());
        Ok(record)
    }

    /// Opens a pseudonym regardless of the trace mode.
    pub fn open(&self, pseudonym: &[u8]) -> Option<TracedIdentity> {
        if pseudonym.len() != self.pseudonym_len || pseudonym[BLOCK..].iter().any(|b| *b != 0) {
            return None;
        }
        let mut block: [u8; BLOCK] = pseudonym[..BLOCK].try_into().ok()?;
        let mut ga = aes::Block::clone_from_slice(&pseudonym[..BLOCK]);
        self.cipher.decrypt_block(&mut ga);
        block.copy_from_slice(&ga);
        if block[12..].iter().any(|b| *b != 0) {
            return None;
        }
        let idx = u32::from_be_bytes(block[0..4].try_into().ok()?) as usize;
        let reg = self.registrations.get(idx)?;
        let kind = PseudonymKind::from_code(block[4])?;
        let from = u16::from_be_bytes([block[5], block[6]]) as u64;
        let to = u16::from_be_bytes([block[7], block[8]]) as u64;
        let counter = u32::from_be_bytes([0, block[9], block[10], block[11]]);
        if from > to || counter >= reg.issued {
            return None;
        }
        Some(TracedIdentity { rid: reg.rid.clone(), kind, validity: Validity { from, to } })
    }

    /// The real identity behind `pseudonym`, or `None` when it does not
    /// authenticate (or, in strict mode, is not valid at `epoch`).
    pub fn trace(&self, pseudonym: &[u8], epoch: u64) -> Option<Vec<u8>> {
        let t = self.open(pseudonym)?;
        match self.mode {
            TraceMode::Strict if !t.validity.covers(epoch) => None,
            _ => Some(t.rid),
        }
    }

    pub fn issued(&self) -> &[PseudonymRecord] {
        &self.issued
    }

    /// Re-traces every issued pseudonym; returns `(traced correctly, issued)`.
    pub fn sweep(&self) -> (usize, usize) {
        let ok = self
            .issued
            .iter()
            .filter(|r| self.open(&r.pseudonym).is_some_and(|t| t.rid == r.rid && t.kind == r.kind))
            .count();
        (ok, self.issued.len())
    }

    /// Registration file: one `RID<TAB>hex(k)` line per vehicle.
    pub fn registration_file(&self) -> String {
        self.registrations
            .iter()
            .map(|r| format!("{}\t{}\n", String::from_utf8_lossy(&r.rid), r.key.to_hex()))
            .collect()
    }
}

pub fn parse_registration_file(text: &str) -> Result<Vec<(Vec<u8>, ChannelKey)>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let (rid, key) = line
                .split_once('\t')
                .ok_or_else(|| Error::Config(format!("line {}: expected RID<TAB>hex(k)", n + 1)))?;
            if rid.is_empty() {
                return Err(Error::Config(format!("line {}: empty RID", n + 1)));
            }
            let key = ChannelKey::from_hex(key).map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
            Ok((rid.as_bytes().to_vec(), key))
        })
        .collect()
}

pub fn seal<R: RngCore + ?Sized>(key: &ChannelKey, plaintext: &[u8], rng: &mut R) -> Vec<u8> {
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let ct = ChaCha20Poly1305::new(&key.0.into())
        .encrypt(Nonce::from_slice(&nonce), plaintext)
        .expect("in-memory encryption does not fail");
    let mut out = nonce.to_vec();
    out.extend_from_slice(&ct);
    out
}

pub fn open(key: &ChannelKey, sealed: &[u8]) -> Result<Vec<u8>> {
    if sealed.len() < NONCE_LEN {
        return Err(Error::Authentication);
    }
    let (nonce, ct) = sealed.split_at(NONCE_LEN);
    ChaCha20Poly1305::new(&key.0.into()).decrypt(Nonce::from_slice(nonce), ct).map_err(|_| Error::Authentication)
}

/// Short-term credentials delivered in the Reply/Update phases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplyPayload<E: BilinearSuite> {
    /// `(STP, D0, D1)`
    pub entries: Vec<(Vec<u8>, E::G1, E::G1)>,
    pub validity: Validity,
}

impl<E: BilinearSuite> ReplyPayload<E> {
    pub fn from_credentials(creds: &[ShortTermCredential<E>], validity: Validity) -> Self {
        Self { entries: creds.iter().map(|c| (c.stp.clone(), c.d0.clone(), c.d1.clone())).collect(), validity }
    }

    /// Rebuilds full credentials, recomputing the public key points.
    pub fn credentials(&self, params: &SystemParams<E>) -> Vec<ShortTermCredential<E>> {
        self.entries
            .iter()
            .map(|(stp, d0, d1)| {
                let (p0, p1) = key_points(params, stp);
                ShortTermCredential { stp: stp.clone(), p0, p1, d0: d0.clone(), d1: d1.clone() }
            })
            .collect()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = (self.entries.len() as u32).to_be_bytes().to_vec();
        for (stp, d0, d1) in &self.entries {
            out.extend_from_slice(stp);
            out.extend_from_slice(&d0.to_bytes());
            out.extend_from_slice(&d1.to_bytes());
        }
        out.extend_from_slice(&self.validity.from.to_be_bytes());
        out.extend_from_slice(&self.validity.to.to_be_bytes());
        out
    }

    pub fn decode(params: &SystemParams<E>, bytes: &[u8]) -> Result<Self> {
        let g = params.suite.g1_len();
        let entry_len = params.id_len() + 2 * g;
        let count = bytes
            .get(..4)
            .map(|b| u32::from_be_bytes(b.try_into().expect("4 bytes")) as usize)
            .ok_or_else(|| Error::encoding("truncated reply"))?;
        let expected = count
            .checked_mul(entry_len)
            .and_then(|n| n.checked_add(4 + 16))
            .ok_or_else(|| Error::encoding("reply count overflow"))?;
        if bytes.len() != expected {
            return Err(Error::encoding(format!("reply has {} bytes, expected {expected}", bytes.len())));
        }
        let mut entries = Vec::with_capacity(count);
        for chunk in bytes[4..4 + count * entry_len].chunks_exact(entry_len) {
            let (stp, keys) = chunk.split_at(params.id_len());
            let d0 = params.suite.g1_from_bytes(&keys[..g])?;
            let d1 = params.suite.g1_from_bytes(&keys[g..])?;
            entries.push((stp.to_vec(), d0, d1));
        }
        let tail = &bytes[4 + count * entry_len..];
        let from = u64::from_be_bytes(tail[..8].try_into().expect("8 bytes"));
        let to = u64::from_be_bytes(tail[8..].try_into().expect("8 bytes"));
        Ok(Self { entries, validity: Validity::new(from, to)? })
    }
}

pub fn wrap_reply<E: BilinearSuite, R: RngCore + ?Sized>(
    key: &ChannelKey,
    payload: &ReplyPayload<E>,
    rng: &mut R,
) -> Vec<u8> {
    seal(key, &payload.encode(), rng)
}

pub fn unwrap_reply<E: BilinearSuite>(
    params: &SystemParams<E>,
    key: &ChannelKey,
    sealed: &[u8],
) -> Result<ReplyPayload<E>> {
    ReplyPayload::decode(params, &open(key, sealed)?)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::aggregate::extract_short_term_key;
    use crate::bilinear::ToySuite;
    use crate::params::{setup, ParamConfig};

    fn authority(seed: u64) -> (TraceAuthority, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (TraceAuthority::new(128, &mut rng).unwrap(), rng)
    }

    #[test]
    fn issue_and_trace() {
        let (mut kgc, mut rng) = authority(1);
        kgc.register(b"car-1", &mut rng).unwrap();
        let v = Validity::new(0, 3).unwrap();
        let a = kgc.issue_pseudonym(b"car-1", PseudonymKind::ShortTerm, v).unwrap();
        let b = kgc.issue_pseudonym(b"car-1", PseudonymKind::ShortTerm, v).unwrap();
        assert_ne!(a.pseudonym, b.pseudonym);
        assert_eq!(a.pseudonym.len(), 16);
        assert_eq!(kgc.trace(&a.pseudonym, 2).as_deref(), Some(&b"car-1"[..]));
        assert_eq!(kgc.sweep(), (2, 2));
    }

    #[test]
    fn issuance_errors() {
        let (mut kgc, mut rng) = authority(2);
        let v = Validity::new(1, 1).unwrap();
        assert_eq!(kgc.issue_pseudonym(b"ghost", PseudonymKind::LongTerm, v).unwrap_err(), Error::UnregisteredIdentity);
        kgc.register(b"car", &mut rng).unwrap();
        assert_eq!(Validity::new(3, 2).unwrap_err(), Error::EmptyValidity { from: 3, to: 2 });
        let bad = Validity { from: 3, to: 2 };
        assert!(kgc.issue_pseudonym(b"car", PseudonymKind::LongTerm, bad).is_err());
        assert!(TraceAuthority::new(64, &mut rng).is_err());
    }

    #[test]
    fn strict_and_lenient_modes() {
        let (mut kgc, mut rng) = authority(3);
        kgc.register(b"car", &mut rng).unwrap();
        let rec = kgc.issue_pseudonym(b"car", PseudonymKind::ShortTerm, Validity::new(0, 1).unwrap()).unwrap();
        assert_eq!(kgc.trace(&rec.pseudonym, 5), None);
        kgc.set_mode(TraceMode::Lenient);
        assert_eq!(kgc.trace(&rec.pseudonym, 5), Some(b"car".to_vec()));
    }

    #[test]
    fn random_strings_do_not_trace() {
        let (mut kgc, mut rng) = authority(4);
        kgc.set_mode(TraceMode::Lenient);
        for i in 0..20u32 {
            kgc.register(format!("car-{i}").as_bytes(), &mut rng).unwrap();
        }
        let hits = (0..10_000)
            .filter(|_| {
                let s: Vec<u8> = (0..16).map(|_| rng.gen()).collect();
                kgc.trace(&s, 0).is_some()
            })
            .count();
        assert_eq!(hits, 0);
    }

    #[test]
    fn wide_pseudonyms_are_zero_padded() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut kgc = TraceAuthority::new(256, &mut rng).unwrap();
        kgc.register(b"car", &mut rng).unwrap();
        let rec = kgc.issue_pseudonym(b"car", PseudonymKind::LongTerm, Validity::new(0, 0).unwrap()).unwrap();
        assert_eq!(rec.pseudonym.len(), 32);
        assert!(kgc.trace(&rec.pseudonym, 0).is_some());
        let mut bad = rec.pseudonym.clone();
        bad[31] = 1;
        assert!(kgc.trace(&bad, 0).is_none());
    }

    #[test]
    fn registration_file_roundtrip() {
        let (mut kgc, mut rng) = authority(6);
        let k = kgc.register(b"car-A", &mut rng).unwrap();
        kgc.register(b"car-B", &mut rng).unwrap();
        let text = kgc.registration_file();
        assert!(text.starts_with(&format!("car-A\t{}\n", k.to_hex())));
        let parsed = parse_registration_file(&text).unwrap();
        assert_eq!(parsed.len(), 2);
        assert_eq!(parsed[0], (b"car-A".to_vec(), k));
        assert!(parse_registration_file("car-A 1234\n").is_err());
        assert!(parse_registration_file("car-A\tzz\n").is_err());
    }

    #[test]
    fn reply_wrapping() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (p, s) = setup(ToySuite::default(), &ParamConfig::default(), &mut rng).unwrap();
        let creds: Vec<_> = (0..3u8).map(|i| extract_short_term_key(&p, &s, &[i; 16]).unwrap()).collect();
        let payload = ReplyPayload::from_credentials(&creds, Validity::new(2, 2).unwrap());
        let ka = ChannelKey::random(&mut rng);
        let kb = ChannelKey::random(&mut rng);
        let sealed = wrap_reply(&ka, &payload, &mut rng);
        let back = unwrap_reply(&p, &ka, &sealed).unwrap();
        assert_eq!(back, payload);
        assert_eq!(back.credentials(&p), creds);
        assert_eq!(unwrap_reply::<ToySuite>(&p, &kb, &sealed).unwrap_err(), Error::Authentication);
        let mut flipped = sealed.clone();
        flipped[20] ^= 0x10;
        assert_eq!(unwrap_reply::<ToySuite>(&p, &ka, &flipped).unwrap_err(), Error::Authentication);
    }
}
