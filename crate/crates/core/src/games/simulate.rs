//! Reduction machinery: key-less simulators, forking replay and the CDH
//! extractors. Every function here works on parameters whose oracle is the
//! given [`OracleTable`]; mixing a table with parameters that hash elsewhere
//! makes the simulators' programmed answers invisible to the verifiers.

use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::table::{OracleId, OracleTable, Trapdoor};
use crate::aggregate::{self, challenge, key_points, AggregateSignature, CommonString, SignedBeacon};
use crate::bilinear::{BilinearSuite, GroupElement, ScalarField};
use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::signcryption::{
    self, challenge_input, InnerSignature, LongTermCredential, RequestPlaintext, SigncryptedEnvelope,
};

/// Signcryption on behalf of `ltp` without its private key.
///
/// Picks `r, h` from `Z_q^*`, sets `Y = r * P1 - h * H1(LTP)` and
/// `Z = r * U1`, then back-patches `H3(Y || m) = h`. The RSU key is rebuilt
/// from the H2 trapdoor as `B = x' * U2`. Aborts if `H3(Y || m)` was already
/// answered.
pub fn simulate_signcrypt_without_key<E: BilinearSuite, R: RngCore + ?Sized>(
    table: &OracleTable<E>,
    params: &SystemParams<E>,
    m: &RequestPlaintext,
    ltp: &[u8],
    rsu_id: &[u8],
    rng: &mut R,
) -> Result<SigncryptedEnvelope<E>> {
    let suite = &params.suite;
    let r = suite.random_nonzero_scalar(rng);
    let h = suite.random_nonzero_scalar(rng);
    simulate_signcrypt_with(table, params, m, ltp, rsu_id, &r, &h)
}

/// [`simulate_signcrypt_without_key`] with fixed `r` and `h`.
pub fn simulate_signcrypt_with<E: BilinearSuite>(
    table: &OracleTable<E>,
    params: &SystemParams<E>,
    m: &RequestPlaintext,
    ltp: &[u8],
    rsu_id: &[u8],
    r: &E::Scalar,
    h: &E::Scalar,
) -> Result<SigncryptedEnvelope<E>> {
    if m.ltp != ltp {
        return Err(Error::PseudonymMismatch);
    }
    params.check_identifier(ltp)?;
    let suite = &params.suite;
    let p_v = params.h1(ltp);
    let y_point = suite.p1().mul(r) - p_v.mul(h);
    let z = params.u1.mul(r);
    let query = challenge_input::<E>(&y_point, m);
    if table.contains(OracleId::H3, &query) {
        table.record_abort("H3 already answered at the simulated (Y, m)");
        return Err(Error::Abort("H3 collision at simulated signcryption".into()));
    }
    table.program_scalar(OracleId::H3, &query, h.clone())?;
    let b = match table.h2_trapdoor(rsu_id) {
        Some(Trapdoor::Dlog(x)) => params.u2.mul(&x),
        _ => return Err(Error::MissingTrapdoor("RSU identity has no H2 discrete log")),
    };
    let w = suite.pair(&y_point, &b)?;
    let mut body = z.to_bytes();
    body.extend_from_slice(&m.encode());
    for (d, k) in body.iter_mut().zip(params.h5(&w)) {
        *d ^= k;
    }
    Ok(SigncryptedEnvelope { y_point, body })
}

/// Which branch of the beacon-signing simulator produced a signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignCase {
    /// Target pseudonym, designated string, cancelling challenge.
    DesignatedCancelling,
    /// Target pseudonym under a non-designated string.
    TargetOtherString,
    /// Non-target pseudonym; the trapdoor is the key itself.
    NonTarget,
}

/// Beacon signing on behalf of `stp` without `(D0, D1)`.
///
/// Requires the H1 answers for `stp` to carry trapdoors: either the split
/// form `alpha * P1 + alpha' * U1` (target) or a plain discrete log
/// (non-target). The common string's H2 answer must be `beta * P2`
/// (designated) or `beta * U2`. Signing the target under the designated
/// string aborts unless the challenge cancels the embedded instance.
pub fn simulate_sign_without_key<E: BilinearSuite, R: RngCore + ?Sized>(
    table: &OracleTable<E>,
    params: &SystemParams<E>,
    message: &[u8],
    stp: &[u8],
    cs: &CommonString,
    rng: &mut R,
) -> Result<(SignedBeacon<E>, SignCase)> {
    let r = params.suite.random_nonzero_scalar(rng);
    simulate_sign_with_nonce(table, params, message, stp, cs, r)
}

/// [`simulate_sign_without_key`] with a fixed signing nonce.
pub fn simulate_sign_with_nonce<E: BilinearSuite>(
    table: &OracleTable<E>,
    params: &SystemParams<E>,
    message: &[u8],
    stp: &[u8],
    cs: &CommonString,
    r: E::Scalar,
) -> Result<(SignedBeacon<E>, SignCase)> {
    params.check_identifier(stp)?;
    let suite = &params.suite;
    let (p0, p1) = key_points(params, stp);
    let mut label = stp.to_vec();
    label.push(0);
    let t0 = table.h1_trapdoor(&label);
    *label.last_mut().expect("nonempty") = 1;
    let t1 = table.h1_trapdoor(&label);
    let c = challenge(params, message, stp, cs);
    let p_cs = params.h2(&cs.bytes);
    let t_cs = table.h2_trapdoor(&cs.bytes).ok_or(Error::MissingTrapdoor("common string"))?;

    let beacon = |s1, s2| SignedBeacon { message: message.to_vec(), stp: stp.to_vec(), s1, s2 };

    match (t0, t1) {
        (
            Some(Trapdoor::Split { alpha: a0, alpha_prime: a0p }),
            Some(Trapdoor::Split { alpha: a1, alpha_prime: a1p }),
        ) => match t_cs {
            Trapdoor::Dlog(beta) => {
                if !(a0p + c.clone() * a1p).is_zero() {
                    table.record_abort("target signing under the designated common string");
                    return Err(Error::Abort("target pseudonym signed under the designated common string".into()));
                }
                let s2 = suite.p1().mul(&r);
                let s1 = s2.mul(&beta) + params.u1.mul(&(a0 + c * a1));
                Ok((beacon(s1, s2), SignCase::DesignatedCancelling))
            }
            Trapdoor::MasterScaled(beta) => {
                let beta_inv = beta.invert().ok_or(Error::MissingTrapdoor("zero common-string trapdoor"))?;
                let s2 = suite.p1().mul(&r) - (p0 + p1.mul(&c)).mul(&beta_inv);
                let s1 = suite.psi(&p_cs)?.mul(&r);
                Ok((beacon(s1, s2), SignCase::TargetOtherString))
            }
            Trapdoor::Split { .. } => Err(Error::MissingTrapdoor("common string")),
        },
        (Some(Trapdoor::Dlog(a0)), Some(Trapdoor::Dlog(a1))) => {
            let s2 = suite.p1().mul(&r);
            let s1 = suite.psi(&p_cs)?.mul(&r) + params.u1.mul(&(a0 + c * a1));
            Ok((beacon(s1, s2), SignCase::NonTarget))
        }
        _ => Err(Error::MissingTrapdoor("short-term pseudonym")),
    }
}

/// Programs the split key form for `stp`: `P_j = alpha_j * P1 + alpha'_j * U1`.
pub fn program_target_pseudonym<E: BilinearSuite>(
    table: &OracleTable<E>,
    params: &SystemParams<E>,
    stp: &[u8],
    alphas: [(E::Scalar, E::Scalar); 2],
) -> Result<()> {
    for (j, (alpha, alpha_prime)) in alphas.into_iter().enumerate() {
        let mut label = stp.to_vec();
        label.push(j as u8);
        let point = params.suite.p1().mul(&alpha) + params.u1.mul(&alpha_prime);
        table.program_g1(&label, point, Some(Trapdoor::Split { alpha, alpha_prime }))?;
    }
    Ok(())
}

/// Two forgeries on the same `(Y, m)` under different H3 answers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForgeryPair<E: BilinearSuite> {
    pub message: RequestPlaintext,
    pub y_point: E::G1,
    pub z: E::G1,
    pub z_hat: E::G1,
    pub h: E::Scalar,
    pub h_hat: E::Scalar,
}

/// `(h - h')^{-1} (Z - Z')`; for a forgery on the target pseudonym this is
/// its long-term key.
pub fn extract_cdh_from_signcryption_forgeries<E: BilinearSuite>(
    pair: &ForgeryPair<E>,
    params: &SystemParams<E>,
) -> Result<E::G1> {
    let diff = pair.h.clone() - pair.h_hat.clone();
    let inv = diff.invert().ok_or(Error::NoFork)?;
    let ltp = &pair.message.ltp;
    let first = InnerSignature { y_point: pair.y_point.clone(), z: pair.z.clone() };
    let second = InnerSignature { y_point: pair.y_point.clone(), z: pair.z_hat.clone() };
    if !signcryption::verify_with_challenge(params, ltp, &first, &pair.h)
        || !signcryption::verify_with_challenge(params, ltp, &second, &pair.h_hat)
    {
        return Err(Error::InvalidForgery);
    }
    Ok((pair.z.clone() - pair.z_hat.clone()).mul(&inv))
}

/// A forger over the signcryption surface: given parameters and a random
/// tape, returns a message and inner signature.
pub trait SigncryptionForger<E: BilinearSuite> {
    fn forge(
        &mut self,
        params: &SystemParams<E>,
        tape: &mut ChaCha8Rng,
    ) -> Option<(RequestPlaintext, InnerSignature<E>)>;
}

impl<E, F> SigncryptionForger<E> for F
where
    E: BilinearSuite,
    F: FnMut(&SystemParams<E>, &mut ChaCha8Rng) -> Option<(RequestPlaintext, InnerSignature<E>)>,
{
    fn forge(
        &mut self,
        params: &SystemParams<E>,
        tape: &mut ChaCha8Rng,
    ) -> Option<(RequestPlaintext, InnerSignature<E>)> {
        self(params, tape)
    }
}

/// Forger that holds the real key: signs a tape-chosen request honestly.
pub fn cooperative_forger<E: BilinearSuite>(
    cred: LongTermCredential<E>,
) -> impl FnMut(&SystemParams<E>, &mut ChaCha8Rng) -> Option<(RequestPlaintext, InnerSignature<E>)> {
    move |params, tape| {
        let m = RequestPlaintext { nonce: tape.gen(), ltp: cred.ltp.clone(), timestamp: tape.gen_range(0..1 << 20) };
        let r = params.suite.random_nonzero_scalar(tape);
        let y_point = cred.p_v.mul(&r);
        let h = params.h3(&challenge_input::<E>(&y_point, &m));
        let z = cred.ltk.mul(&(r + h));
        Some((m, InnerSignature { y_point, z }))
    }
}

/// Runs `forger` twice on the same tape. The second run sees a fresh table
/// with the same seed except that the H3 answer at the first forgery's
/// `(Y, m)` is replaced by an independent `h'`.
pub fn fork_signcryption_forger<E: BilinearSuite, F: SigncryptionForger<E>>(
    base: &SystemParams<E>,
    table_seed: &[u8],
    tape_seed: u64,
    forger: &mut F,
    rng: &mut impl RngCore,
) -> Result<ForgeryPair<E>> {
    let first_table = Arc::new(OracleTable::new(base.suite.clone(), table_seed.to_vec()));
    let first = base.with_oracle(first_table.clone());
    let (m, sig) = forger
        .forge(&first, &mut ChaCha8Rng::seed_from_u64(tape_seed))
        .ok_or_else(|| Error::Abort("forger produced no output".into()))?;
    if !signcryption::verify_inner(&first, &m, &sig) {
        return Err(Error::InvalidForgery);
    }
    let query = challenge_input::<E>(&sig.y_point, &m);
    let h = first_table.h3_answer(&query).ok_or(Error::InvalidForgery)?;

    let h_hat = loop {
        let cand = base.suite.random_nonzero_scalar(rng);
        if cand != h {
            break cand;
        }
    };
    let second_table = Arc::new(OracleTable::new(base.suite.clone(), table_seed.to_vec()));
    second_table.program_scalar(OracleId::H3, &query, h_hat.clone())?;
    let second = base.with_oracle(second_table);
    let (m2, sig2) = forger
        .forge(&second, &mut ChaCha8Rng::seed_from_u64(tape_seed))
        .ok_or_else(|| Error::Abort("replayed forger produced no output".into()))?;
    if m2 != m || sig2.y_point != sig.y_point {
        return Err(Error::Abort("replay diverged before the forked query".into()));
    }
    Ok(ForgeryPair { message: m, y_point: sig.y_point, z: sig.z, z_hat: sig2.z, h, h_hat })
}

/// Evaluates the aggregate extractor formula
///
/// `(a'_10 + c_1 a'_11)^{-1} (S1 - sum_{i>=2} (a_i0 + c_i a_i1) U1 - beta S2 - (a_10 + c_1 a_11) U1)`
///
/// where entry 0 is the target pseudonym (split trapdoors), every other
/// entry has a plain discrete-log trapdoor and `H2(CS) = beta * P2`.
pub fn extract_cdh_from_aggregate_forgery<E: BilinearSuite>(
    agg: &AggregateSignature<E>,
    cs: &CommonString,
    table: &OracleTable<E>,
    params: &SystemParams<E>,
) -> Result<E::G1> {
    if !aggregate::verify_aggregate(params, agg, cs) {
        return Err(Error::InvalidForgery);
    }
    let beta = match table.h2_trapdoor(&cs.bytes) {
        Some(Trapdoor::Dlog(b)) => b,
        _ => return Err(Error::MissingTrapdoor("designated common string")),
    };
    let trapdoors = |stp: &[u8]| {
        let mut label = stp.to_vec();
        label.push(0);
        let t0 = table.h1_trapdoor(&label);
        *label.last_mut().expect("nonempty") = 1;
        (t0, table.h1_trapdoor(&label))
    };
    let (target, rest) = agg.entries.split_first().ok_or(Error::EmptyAggregate)?;
    let c1 = challenge(params, &target.0, &target.1, cs);
    let (a10, a10p, a11, a11p) = match trapdoors(&target.1) {
        (
            Some(Trapdoor::Split { alpha: a0, alpha_prime: a0p }),
            Some(Trapdoor::Split { alpha: a1, alpha_prime: a1p }),
        ) => (a0, a0p, a1, a1p),
        _ => return Err(Error::MissingTrapdoor("target pseudonym")),
    };
    let denom = a10p + c1.clone() * a11p;
    let inv = denom.invert().ok_or(Error::DegenerateFork)?;

    let mut known = params.suite.scalar_from_u64(0);
    for (m, stp) in rest {
        let c = challenge(params, m, stp, cs);
        let (a0, a1) = match trapdoors(stp) {
            (Some(Trapdoor::Dlog(a0)), Some(Trapdoor::Dlog(a1))) => (a0, a1),
            (
                Some(Trapdoor::Split { alpha: a0, alpha_prime: p0 }),
                Some(Trapdoor::Split { alpha: a1, alpha_prime: p1 }),
            ) if p0.is_zero() && p1.is_zero() => (a0, a1),
            _ => return Err(Error::MissingTrapdoor("non-target pseudonym")),
        };
        known = known + a0 + c * a1;
    }
    let inner = agg.s1.clone() - params.u1.mul(&known) - agg.s2.mul(&beta) - params.u1.mul(&(a10 + c1 * a11));
    Ok(inner.mul(&inv))
}
