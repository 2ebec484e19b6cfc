//! Pseudonymous aggregate signatures for beacon messages.
//!
//! A short-term credential for pseudonym `STP` holds two key points
//! `P_j = H1(STP || j)` and their private halves `D_j = s * P_j`, `j in {0, 1}`.
//! Under the epoch's common string `CS` a beacon `m` is signed as
//!
//! ```text
//! c  = H3(len(m) || m || STP || CS)
//! S2 = r * P1
//! S1 = r * psi(H2(CS)) + D0 + c * D1
//! ```
//!
//! and any number of beacons under the same `CS` aggregate by summing
//! `S1` and `S2`. One aggregate costs three pairings to verify:
//!
//! ```text
//! e(S1, P2) = e(S2, H2(CS)) * e(sum_i P_i0 + c_i * P_i1, U2)
//! ```
//!
//! Wire formats (all lengths fixed-width big-endian):
//! beacon `len(m):u32 || m || STP || S1 || S2`,
//! aggregate `count:u32 || (len(m):u32 || m || STP)* || S1 || S2`.

use std::collections::BTreeSet;

use rand::RngCore;

use crate::bilinear::{domain, BilinearSuite, GroupElement, ScalarField};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::params::{MasterSecret, SystemParams};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShortTermCredential<E: BilinearSuite> {
    pub stp: Vec<u8>,
    pub p0: E::G1,
    pub p1: E::G1,
    pub d0: E::G1,
    pub d1: E::G1,
}

impl<E: BilinearSuite> ShortTermCredential<E> {
    /// Checks `e(D_j, P2) = e(P_j, U2)` for both key halves, with `P_j`
    /// recomputed from the pseudonym.
    pub fn is_consistent(&self, params: &SystemParams<E>) -> bool {
        let (p0, p1) = key_points(params, &self.stp);
        p0 == self.p0
            && p1 == self.p1
            && params.pair(&p0, &params.u2).is_some_and(|r| r == params.pair_p2(&self.d0))
            && params.pair(&p1, &params.u2).is_some_and(|r| r == params.pair_p2(&self.d1))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CommonString {
    pub bytes: Vec<u8>,
    pub epoch: u64,
}

impl CommonString {
    pub fn new(bytes: impl Into<Vec<u8>>, epoch: u64) -> Self {
        Self { bytes: bytes.into(), epoch }
    }

    /// Stand-in for the unspecified synchronization protocol: every party
    /// derives the epoch string from the run seed.
    pub fn for_epoch(run_seed: u64, epoch: u64) -> Self {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update([domain::COMMON_STRING]);
        h.update(epoch.to_be_bytes());
        h.update(run_seed.to_be_bytes());
        Self { bytes: h.finalize()[..16].to_vec(), epoch }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedBeacon<E: BilinearSuite> {
    pub message: Vec<u8>,
    pub stp: Vec<u8>,
    pub s1: E::G1,
    pub s2: E::G1,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AggregateSignature<E: BilinearSuite> {
    /// `(message, STP)` pairs in signing order.
    pub entries: Vec<(Vec<u8>, Vec<u8>)>,
    pub s1: E::G1,
    pub s2: E::G1,
}

/// `(H1(STP || 0x00), H1(STP || 0x01))`.
pub fn key_points<E: BilinearSuite>(params: &SystemParams<E>, stp: &[u8]) -> (E::G1, E::G1) {
    let mut label = Vec::with_capacity(stp.len() + 1);
    label.extend_from_slice(stp);
    label.push(0);
    let p0 = params.h1(&label);
    *label.last_mut().expect("nonempty") = 1;
    (p0, params.h1(&label))
}

/// H3 input for a beacon: `len(m):u32 || m || STP || CS`.
pub fn challenge_input(message: &[u8], stp: &[u8], cs: &CommonString) -> Vec<u8> {
    let mut input = Vec::with_capacity(4 + message.len() + stp.len() + cs.bytes.len());
    input.extend_from_slice(&(message.len() as u32).to_be_bytes());
    input.extend_from_slice(message);
    input.extend_from_slice(stp);
    input.extend_from_slice(&cs.bytes);
    input
}

pub fn challenge<E: BilinearSuite>(
    params: &SystemParams<E>,
    message: &[u8],
    stp: &[u8],
    cs: &CommonString,
) -> E::Scalar {
    params.h3(&challenge_input(message, stp, cs))
}

pub fn extract_short_term_key<E: BilinearSuite>(
    params: &SystemParams<E>,
    master: &MasterSecret<E>,
    stp: &[u8],
) -> Result<ShortTermCredential<E>> {
    params.check_identifier(stp)?;
    let (p0, p1) = key_points(params, stp);
    let d0 = p0.mul(master.scalar());
    let d1 = p1.mul(master.scalar());
    Ok(ShortTermCredential { stp: stp.to_vec(), p0, p1, d0, d1 })
}

pub fn sign_beacon<E: BilinearSuite, R: RngCore + ?Sized>(
    params: &SystemParams<E>,
    cred: &ShortTermCredential<E>,
    message: &[u8],
    cs: &CommonString,
    rng: &mut R,
) -> Result<SignedBeacon<E>> {
    let r = params.suite.random_nonzero_scalar(rng);
    sign_beacon_with_nonce(params, cred, message, cs, &r)
}

pub fn sign_beacon_with_nonce<E: BilinearSuite>(
    params: &SystemParams<E>,
    cred: &ShortTermCredential<E>,
    message: &[u8],
    cs: &CommonString,
    r: &E::Scalar,
) -> Result<SignedBeacon<E>> {
    if r.is_zero() {
        return Err(Error::ZeroNonce);
    }
    let c = challenge(params, message, &cred.stp, cs);
    let p_cs = params.h2(&cs.bytes);
    let s2 = params.suite.p1().mul(r);
    let s1 = params.suite.psi(&p_cs)?.mul(r) + cred.d0.clone() + cred.d1.mul(&c);
    Ok(SignedBeacon { message: message.to_vec(), stp: cred.stp.clone(), s1, s2 })
}

pub fn verify_single<E: BilinearSuite>(params: &SystemParams<E>, beacon: &SignedBeacon<E>, cs: &CommonString) -> bool {
    let c = challenge(params, &beacon.message, &beacon.stp, cs);
    let (p0, p1) = key_points(params, &beacon.stp);
    check_equation(params, &beacon.s1, &beacon.s2, &(p0 + p1.mul(&c)), cs)
}

/// Verifies a batch of independent beacons under one common string.
pub fn verify_batch<E: BilinearSuite>(
    params: &SystemParams<E>,
    beacons: &[SignedBeacon<E>],
    cs: &CommonString,
    exec: Execution,
) -> Vec<bool> {
    exec.map(beacons, |b| verify_single(params, b, cs))
}

pub fn aggregate<E: BilinearSuite>(beacons: &[SignedBeacon<E>]) -> Result<AggregateSignature<E>> {
    let (first, rest) = beacons.split_first().ok_or(Error::EmptyAggregate)?;
    let mut agg =
        AggregateSignature { entries: Vec::with_capacity(beacons.len()), s1: first.s1.clone(), s2: first.s2.clone() };
    agg.entries.push((first.message.clone(), first.stp.clone()));
    for b in rest {
        agg.s1 = agg.s1 + b.s1.clone();
        agg.s2 = agg.s2 + b.s2.clone();
        agg.entries.push((b.message.clone(), b.stp.clone()));
    }
    Ok(agg)
}

pub fn re_aggregate<E: BilinearSuite>(aggs: &[AggregateSignature<E>]) -> Result<AggregateSignature<E>> {
    let (first, rest) = aggs.split_first().ok_or(Error::EmptyAggregate)?;
    let mut out = first.clone();
    for a in rest {
        out.s1 = out.s1 + a.s1.clone();
        out.s2 = out.s2 + a.s2.clone();
        out.entries.extend(a.entries.iter().cloned());
    }
    Ok(out)
}

pub fn verify_aggregate<E: BilinearSuite>(
    params: &SystemParams<E>,
    agg: &AggregateSignature<E>,
    cs: &CommonString,
) -> bool {
    if agg.entries.is_empty() {
        return false;
    }
    let key_sum = agg
        .entries
        .iter()
        .map(|(m, stp)| {
            let c = challenge(params, m, stp, cs);
            let (p0, p1) = key_points(params, stp);
            p0 + p1.mul(&c)
        })
        .reduce(|a, b| a + b)
        .expect("nonempty");
    check_equation(params, &agg.s1, &agg.s2, &key_sum, cs)
}

fn check_equation<E: BilinearSuite>(
    params: &SystemParams<E>,
    s1: &E::G1,
    s2: &E::G1,
    key_sum: &E::G1,
    cs: &CommonString,
) -> bool {
    let p_cs = params.h2(&cs.bytes);
    let lhs = params.pair_p2(s1);
    match (params.pair(s2, &p_cs), params.pair(key_sum, &params.u2)) {
        (Some(a), Some(b)) => lhs == a * b,
        _ => false,
    }
}

/// Signer-side record of `(STP, CS)` pairs already used.
#[derive(Debug, Default, Clone)]
pub struct SigningLedger {
    used: BTreeSet<(Vec<u8>, Vec<u8>)>,
}

impl SigningLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn has_signed(&self, stp: &[u8], cs: &CommonString) -> bool {
        self.used.contains(&(stp.to_vec(), cs.bytes.clone()))
    }

    /// Signs once per `(STP, CS)`; a second request fails with
    /// [`Error::CommonStringReuse`].
    pub fn sign<E: BilinearSuite, R: RngCore + ?Sized>(
        &mut self,
        params: &SystemParams<E>,
        cred: &ShortTermCredential<E>,
        message: &[u8],
        cs: &CommonString,
        rng: &mut R,
    ) -> Result<SignedBeacon<E>> {
        let key = (cred.stp.clone(), cs.bytes.clone());
        if self.used.contains(&key) {
            return Err(Error::CommonStringReuse);
        }
        let beacon = sign_beacon(params, cred, message, cs, rng)?;
        self.used.insert(key);
        Ok(beacon)
    }
}

fn read_u32(bytes: &[u8], at: &mut usize) -> Result<usize> {
    let end = *at + 4;
    let chunk = bytes.get(*at..end).ok_or_else(|| Error::encoding("truncated length field"))?;
    *at = end;
    Ok(u32::from_be_bytes(chunk.try_into().expect("4 bytes")) as usize)
}

fn read_slice<'a>(bytes: &'a [u8], at: &mut usize, len: usize) -> Result<&'a [u8]> {
    let end = at.checked_add(len).ok_or_else(|| Error::encoding("length overflow"))?;
    let chunk = bytes.get(*at..end).ok_or_else(|| Error::encoding("truncated field"))?;
    *at = end;
    Ok(chunk)
}

impl<E: BilinearSuite> SignedBeacon<E> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.message.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.message);
        out.extend_from_slice(&self.stp);
        out.extend_from_slice(&self.s1.to_bytes());
        out.extend_from_slice(&self.s2.to_bytes());
        out
    }

    pub fn from_bytes(params: &SystemParams<E>, bytes: &[u8]) -> Result<Self> {
        let mut at = 0;
        let len = read_u32(bytes, &mut at)?;
        let message = read_slice(bytes, &mut at, len)?.to_vec();
        let stp = read_slice(bytes, &mut at, params.id_len())?.to_vec();
        let g = params.suite.g1_len();
        let s1 = params.suite.g1_from_bytes(read_slice(bytes, &mut at, g)?)?;
        let s2 = params.suite.g1_from_bytes(read_slice(bytes, &mut at, g)?)?;
        if at != bytes.len() {
            return Err(Error::encoding("trailing bytes after beacon"));
        }
        Ok(Self { message, stp, s1, s2 })
    }
}

impl<E: BilinearSuite> AggregateSignature<E> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.entries.len() as u32).to_be_bytes());
        for (m, stp) in &self.entries {
            out.extend_from_slice(&(m.len() as u32).to_be_bytes());
            out.extend_from_slice(m);
            out.extend_from_slice(stp);
        }
        out.extend_from_slice(&self.s1.to_bytes());
        out.extend_from_slice(&self.s2.to_bytes());
        out
    }

    pub fn from_bytes(params: &SystemParams<E>, bytes: &[u8]) -> Result<Self> {
        let mut at = 0;
        let count = read_u32(bytes, &mut at)?;
        if count == 0 {
            return Err(Error::EmptyAggregate);
        }
        // each entry needs at least a length word and an STP
        if count > bytes.len() / (4 + params.id_len()) {
            return Err(Error::encoding("entry count exceeds payload"));
        }
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            let len = read_u32(bytes, &mut at)?;
            let m = read_slice(bytes, &mut at, len)?.to_vec();
            let stp = read_slice(bytes, &mut at, params.id_len())?.to_vec();
            entries.push((m, stp));
        }
        let g = params.suite.g1_len();
        let s1 = params.suite.g1_from_bytes(read_slice(bytes, &mut at, g)?)?;
        let s2 = params.suite.g1_from_bytes(read_slice(bytes, &mut at, g)?)?;
        if at != bytes.len() {
            return Err(Error::encoding("trailing bytes after aggregate"));
        }
        Ok(Self { entries, s1, s2 })
    }
}
