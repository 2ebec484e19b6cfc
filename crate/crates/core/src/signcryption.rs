//! Identity-based signcryption for STP/STK distribution.
//!
//! A vehicle holding `LTK = s * H1(LTP)` signcrypts its request
//! `m = (n, LTP, tau)` to an RSU identified by `ID_R`:
//!
//! ```text
//! Y = r * P_V
//! h = H3(Y || m)
//! Z = (r + h) * LTK
//! w = e(r * LTK, H2(ID_R))
//! y = H5(w) xor (Z || m)
//! ```
//!
//! The RSU recomputes `w = e(Y, B)` with `B = s * H2(ID_R)`, unmasks `Z || m`
//! and accepts iff `e(Z, P2) = e(Y + h * P_V, U2)`.
//!
//! Wire format of an envelope: `serialize(Y) || y`, with `|y| = l2 / 8`.
//! Request plaintext: `n (8 bytes BE) || LTP (l1 / 8 bytes) || tau (8 bytes BE)`.

use rand::RngCore;
use thiserror::Error;

use crate::bilinear::{BilinearSuite, GroupElement, ScalarField};
use crate::error::{Error, Result};
use crate::params::{MasterSecret, SystemParams, REQUEST_WORD_LEN};

/// Longest accepted RSU identity, in bytes.
pub const MAX_RSU_ID_LEN: usize = 255;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LongTermCredential<E: BilinearSuite> {
    pub ltp: Vec<u8>,
    pub p_v: E::G1,
    pub ltk: E::G1,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RsuCredential<E: BilinearSuite> {
    pub id: Vec<u8>,
    pub p_r: E::G2,
    pub b: E::G2,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RequestPlaintext {
    pub nonce: u64,
    pub ltp: Vec<u8>,
    /// Seconds, or the epoch index inside the simulator.
    pub timestamp: u64,
}

impl RequestPlaintext {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(2 * REQUEST_WORD_LEN + self.ltp.len());
        out.extend_from_slice(&self.nonce.to_be_bytes());
        out.extend_from_slice(&self.ltp);
        out.extend_from_slice(&self.timestamp.to_be_bytes());
        out
    }

    pub fn decode(bytes: &[u8], ltp_len: usize) -> Result<Self> {
        if bytes.len() != 2 * REQUEST_WORD_LEN + ltp_len {
            return Err(Error::encoding(format!("request plaintext has {} bytes", bytes.len())));
        }
        let (nonce, rest) = bytes.split_at(REQUEST_WORD_LEN);
        let (ltp, ts) = rest.split_at(ltp_len);
        Ok(Self {
            nonce: u64::from_be_bytes(nonce.try_into().expect("8 bytes")),
            ltp: ltp.to_vec(),
            timestamp: u64::from_be_bytes(ts.try_into().expect("8 bytes")),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigncryptedEnvelope<E: BilinearSuite> {
    pub y_point: E::G1,
    pub body: Vec<u8>,
}

impl<E: BilinearSuite> SigncryptedEnvelope<E> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.y_point.to_bytes();
        out.extend_from_slice(&self.body);
        out
    }

    pub fn from_bytes(params: &SystemParams<E>, bytes: &[u8]) -> Result<Self, Rejection> {
        if bytes.len() != params.envelope_len() {
            return Err(Rejection::Length);
        }
        let (y, body) = bytes.split_at(params.suite.g1_len());
        let y_point = params.suite.g1_from_bytes(y).map_err(|_| Rejection::Parse)?;
        Ok(Self { y_point, body: body.to_vec() })
    }
}

/// The signature `(Y, Z)` recovered by de-signcryption. Together with the
/// plaintext it can be handed to a third party for non-repudiation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InnerSignature<E: BilinearSuite> {
    pub y_point: E::G1,
    pub z: E::G1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Error)]
pub enum Rejection {
    #[error("envelope has the wrong length")]
    Length,
    #[error("unmasked body does not parse")]
    Parse,
    #[error("verification equation fails")]
    Equation,
}

pub fn extract_vehicle_key<E: BilinearSuite>(
    params: &SystemParams<E>,
    master: &MasterSecret<E>,
    ltp: &[u8],
) -> Result<LongTermCredential<E>> {
    params.check_identifier(ltp)?;
    let p_v = params.h1(ltp);
    let ltk = p_v.mul(master.scalar());
    Ok(LongTermCredential { ltp: ltp.to_vec(), p_v, ltk })
}

pub fn extract_rsu_key<E: BilinearSuite>(
    params: &SystemParams<E>,
    master: &MasterSecret<E>,
    id: &[u8],
) -> Result<RsuCredential<E>> {
    if id.is_empty() || id.len() > MAX_RSU_ID_LEN {
        return Err(Error::IdentifierLength { expected: MAX_RSU_ID_LEN, actual: id.len() });
    }
    let p_r = params.h2(id);
    let b = p_r.mul(master.scalar());
    Ok(RsuCredential { id: id.to_vec(), p_r, b })
}

/// H3 input for the signcryption challenge: `serialize(Y) || encode(m)`.
pub fn challenge_input<E: BilinearSuite>(y_point: &E::G1, m: &RequestPlaintext) -> Vec<u8> {
    let mut input = y_point.to_bytes();
    input.extend_from_slice(&m.encode());
    input
}

pub fn signcrypt<E: BilinearSuite, R: RngCore + ?Sized>(
    params: &SystemParams<E>,
    cred: &LongTermCredential<E>,
    m: &RequestPlaintext,
    rsu_id: &[u8],
    rng: &mut R,
) -> Result<SigncryptedEnvelope<E>> {
    let r = params.suite.random_nonzero_scalar(rng);
    signcrypt_with_nonce(params, cred, m, rsu_id, &r)
}

/// Signcryption with a caller-chosen `r`; used by fixtures and forking replays.
pub fn signcrypt_with_nonce<E: BilinearSuite>(
    params: &SystemParams<E>,
    cred: &LongTermCredential<E>,
    m: &RequestPlaintext,
    rsu_id: &[u8],
    r: &E::Scalar,
) -> Result<SigncryptedEnvelope<E>> {
    if m.ltp != cred.ltp {
        return Err(Error::PseudonymMismatch);
    }
    params.check_identifier(&m.ltp)?;
    if r.is_zero() {
        return Err(Error::ZeroNonce);
    }
    let y_point = cred.p_v.mul(r);
    let h = params.h3(&challenge_input::<E>(&y_point, m));
    let z = cred.ltk.mul(&(r.clone() + h));
    let p_r = params.h2(rsu_id);
    let w = params.suite.pair(&cred.ltk.mul(r), &p_r)?;
    let mut body = z.to_bytes();
    body.extend_from_slice(&m.encode());
    xor_in_place(&mut body, &params.h5(&w));
    Ok(SigncryptedEnvelope { y_point, body })
}

pub fn designcrypt<E: BilinearSuite>(
    params: &SystemParams<E>,
    rsu: &RsuCredential<E>,
    env: &SigncryptedEnvelope<E>,
) -> Result<(RequestPlaintext, InnerSignature<E>), Rejection> {
    if env.body.len() * 8 != params.l2 {
        return Err(Rejection::Length);
    }
    let w = params.suite.pair(&env.y_point, &rsu.b).map_err(|_| Rejection::Parse)?;
    let mut plain = env.body.clone();
    xor_in_place(&mut plain, &params.h5(&w));
    let (z_bytes, m_bytes) = plain.split_at(params.suite.g1_len());
    let z = params.suite.g1_from_bytes(z_bytes).map_err(|_| Rejection::Parse)?;
    let m = RequestPlaintext::decode(m_bytes, params.id_len()).map_err(|_| Rejection::Parse)?;
    let sig = InnerSignature { y_point: env.y_point.clone(), z };
    if verify_inner(params, &m, &sig) {
        Ok((m, sig))
    } else {
        Err(Rejection::Equation)
    }
}

/// `e(Z, P2) == e(Y + H3(Y || m) * H1(LTP), U2)`.
pub fn verify_inner<E: BilinearSuite>(params: &SystemParams<E>, m: &RequestPlaintext, sig: &InnerSignature<E>) -> bool {
    let h = params.h3(&challenge_input::<E>(&sig.y_point, m));
    verify_with_challenge(params, &m.ltp, sig, &h)
}

/// The verification equation with an explicit challenge scalar.
pub fn verify_with_challenge<E: BilinearSuite>(
    params: &SystemParams<E>,
    ltp: &[u8],
    sig: &InnerSignature<E>,
    h: &E::Scalar,
) -> bool {
    let p_v = params.h1(ltp);
    let lhs = params.pair_p2(&sig.z);
    let rhs = params.pair(&(sig.y_point.clone() + p_v.mul(h)), &params.u2);
    rhs.is_some_and(|rhs| rhs == lhs)
}

fn xor_in_place(data: &mut [u8], mask: &[u8]) {
    debug_assert_eq!(data.len(), mask.len());
    for (d, m) in data.iter_mut().zip(mask) {
        *d ^= m;
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::bilinear::{TargetElement, ToySuite};
    use crate::params::{setup, setup_with_master, ParamConfig};

    fn ltp(tag: u8) -> Vec<u8> {
        let mut v = vec![0u8; 16];
        v[0] = tag;
        v
    }

    fn world(seed: u64) -> (SystemParams<ToySuite>, MasterSecret<ToySuite>, ChaCha8Rng) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p, m) = setup(ToySuite::default(), &ParamConfig::default(), &mut rng).unwrap();
        (p, m, rng)
    }

    #[test]
    fn credentials_satisfy_pairing_identities() {
        let (p, s, mut rng) = world(1);
        for _ in 0..100 {
            let id: Vec<u8> = (0..16).map(|_| rng.gen()).collect();
            let v = extract_vehicle_key(&p, &s, &id).unwrap();
            assert_eq!(p.suite.pair(&v.ltk, &p.suite.p2()), p.suite.pair(&v.p_v, &p.u2));
            assert_eq!(extract_vehicle_key(&p, &s, &id).unwrap(), v);
            let r = extract_rsu_key(&p, &s, &id[..5]).unwrap();
            assert_eq!(p.suite.pair(&p.suite.p1(), &r.b), p.suite.pair(&p.u1, &r.p_r));
        }
    }

    #[test]
    fn malformed_identifiers() {
        let (p, s, _) = world(2);
        assert_eq!(
            extract_vehicle_key(&p, &s, b"short").unwrap_err(),
            Error::IdentifierLength { expected: 16, actual: 5 }
        );
        assert!(extract_rsu_key(&p, &s, b"").is_err());
    }

    #[test]
    fn roundtrip_and_randomization() {
        let (p, s, mut rng) = world(3);
        let v = extract_vehicle_key(&p, &s, &ltp(1)).unwrap();
        let r = extract_rsu_key(&p, &s, b"RSU-1").unwrap();
        let m = RequestPlaintext { nonce: 9, ltp: ltp(1), timestamp: 100 };
        let a = signcrypt(&p, &v, &m, b"RSU-1", &mut rng).unwrap();
        let b = signcrypt(&p, &v, &m, b"RSU-1", &mut rng).unwrap();
        assert_ne!(a.y_point, b.y_point);
        assert_ne!(a.body, b.body);
        let (out, sig) = designcrypt(&p, &r, &a).unwrap();
        assert_eq!(out, m);
        assert!(verify_inner(&p, &out, &sig));
        let bytes = a.to_bytes();
        assert_eq!(bytes.len(), p.envelope_len());
        assert_eq!(SigncryptedEnvelope::from_bytes(&p, &bytes).unwrap(), a);
        assert_eq!(SigncryptedEnvelope::<ToySuite>::from_bytes(&p, &bytes[1..]), Err(Rejection::Length));
    }

    #[test]
    fn pseudonym_mismatch_and_zero_nonce() {
        let (p, s, _) = world(4);
        let v = extract_vehicle_key(&p, &s, &ltp(1)).unwrap();
        let m = RequestPlaintext { nonce: 1, ltp: ltp(2), timestamp: 0 };
        assert_eq!(signcrypt_with_nonce(&p, &v, &m, b"R", &p.suite.scalar(3)).unwrap_err(), Error::PseudonymMismatch);
        let m = RequestPlaintext { ltp: ltp(1), ..m };
        assert_eq!(signcrypt_with_nonce(&p, &v, &m, b"R", &p.suite.scalar(0)).unwrap_err(), Error::ZeroNonce);
    }

    #[test]
    fn wrong_rsu_rejects() {
        let (p, s, mut rng) = world(5);
        let v = extract_vehicle_key(&p, &s, &ltp(1)).unwrap();
        let other = extract_rsu_key(&p, &s, b"RSU-2").unwrap();
        let m = RequestPlaintext { nonce: 1, ltp: ltp(1), timestamp: 0 };
        let mut rejected = 0;
        for _ in 0..50 {
            let env = signcrypt(&p, &v, &m, b"RSU-1", &mut rng).unwrap();
            rejected += designcrypt(&p, &other, &env).is_err() as usize;
        }
        assert!(rejected >= 49);
    }

    #[test]
    fn inner_signature_perturbations() {
        let (p, s, mut rng) = world(6);
        let v = extract_vehicle_key(&p, &s, &ltp(1)).unwrap();
        let r = extract_rsu_key(&p, &s, b"RSU-1").unwrap();
        let m = RequestPlaintext { nonce: 1, ltp: ltp(1), timestamp: 0 };
        let env = signcrypt(&p, &v, &m, b"RSU-1", &mut rng).unwrap();
        let (m, sig) = designcrypt(&p, &r, &env).unwrap();
        let bumped = InnerSignature { z: sig.z + p.suite.p1(), ..sig.clone() };
        assert!(!verify_inner(&p, &m, &bumped));
        let moved = RequestPlaintext { ltp: ltp(2), ..m.clone() };
        assert!(!verify_inner(&p, &moved, &sig));
    }

    #[test]
    fn cancelling_challenge_gives_identity_z() {
        // h = q - r forces Z to the identity; the envelope still verifies.
        use crate::games::{OracleId, OracleTable};
        use std::sync::Arc;
        let suite = ToySuite::default();
        let (base, s) = setup_with_master(suite.clone(), &ParamConfig::default(), suite.scalar(7)).unwrap();
        let table = Arc::new(OracleTable::new(suite.clone(), b"cancel".to_vec()));
        let p = base.with_oracle(table.clone());
        let v = extract_vehicle_key(&p, &s, &ltp(1)).unwrap();
        let r = extract_rsu_key(&p, &s, b"RSU-1").unwrap();
        let m = RequestPlaintext { nonce: 5, ltp: ltp(1), timestamp: 7 };
        let nonce = suite.scalar(11);
        let y = v.p_v.mul(&nonce);
        table.program_scalar(OracleId::H3, &challenge_input::<ToySuite>(&y, &m), -nonce).unwrap();
        let env = signcrypt_with_nonce(&p, &v, &m, b"RSU-1", &nonce).unwrap();
        let (out, sig) = designcrypt(&p, &r, &env).unwrap();
        assert!(sig.z.is_identity());
        assert_eq!(out, m);
        assert!(!p.suite.pair(&p.suite.p1(), &p.suite.p2()).unwrap().is_identity());
    }
}
