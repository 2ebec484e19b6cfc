use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Mutex, MutexGuard};

use serde::Serialize;
use sha2::{Digest, Sha256};
use sha3::digest::{ExtendableOutput, Update, XofReader};
use sha3::Shake256;

use crate::bilinear::{domain, BilinearSuite, GroupElement, ScalarField, TargetElement};
use crate::error::{Error, Result};
use crate::oracle::RandomOracle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum OracleId {
    H1,
    H2,
    H3,
    H5,
}

impl OracleId {
    pub fn name(self) -> &'static str {
        match self {
            OracleId::H1 => "H1",
            OracleId::H2 => "H2",
            OracleId::H3 => "H3",
            OracleId::H5 => "H5",
        }
    }

    fn tag(self) -> u8 {
        match self {
            OracleId::H1 => domain::H1,
            OracleId::H2 => domain::H2,
            OracleId::H3 => domain::H3,
            OracleId::H5 => domain::H5,
        }
    }
}

/// What the simulator knows about a programmed group element.
#[derive(Clone, PartialEq, Eq)]
pub enum Trapdoor<E: BilinearSuite> {
    /// answer = x * generator (P1 for H1, P2 for H2)
    Dlog(E::Scalar),
    /// answer = alpha * P1 + alpha_prime * U1
    Split { alpha: E::Scalar, alpha_prime: E::Scalar },
    /// answer = beta * U2
    MasterScaled(E::Scalar),
}

impl<E: BilinearSuite> fmt::Debug for Trapdoor<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trapdoor::Dlog(x) => write!(f, "Dlog({x:?})"),
            Trapdoor::Split { alpha, alpha_prime } => write!(f, "Split({alpha:?}, {alpha_prime:?})"),
            Trapdoor::MasterScaled(b) => write!(f, "MasterScaled({b:?})"),
        }
    }
}

/// How unprogrammed H2 queries are answered.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum H2Sampling<E: BilinearSuite> {
    /// `x * P2` with trapdoor `x`.
    Dlog,
    /// `beta * U2` with trapdoor `beta`; the argument is `U2`.
    MasterScaled(E::G2),
}

#[derive(Clone, Debug)]
struct Entry<T, E: BilinearSuite> {
    value: T,
    trapdoor: Option<Trapdoor<E>>,
}

/// One line of the audit transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranscriptRecord {
    pub kind: &'static str,
    pub oracle: Option<OracleId>,
    pub input: String,
    pub answer: String,
    pub trapdoor: bool,
}

struct Tables<E: BilinearSuite> {
    h1: BTreeMap<Vec<u8>, Entry<E::G1, E>>,
    h2: BTreeMap<Vec<u8>, Entry<E::G2, E>>,
    h3: BTreeMap<Vec<u8>, Entry<E::Scalar, E>>,
    h5: BTreeMap<Vec<u8>, Entry<Vec<u8>, E>>,
    transcript: Vec<TranscriptRecord>,
    aborts: usize,
}

/// Programmable random oracle with lazy sampling.
///
/// Unprogrammed queries are answered from `SHAKE256(seed, oracle, query)`,
/// so two tables with the same seed agree on every query neither has
/// programmed, independently of query order. Group answers are sampled as
/// `x * generator` and remember `x` as their trapdoor. Once a query has been
/// answered its answer never changes.
pub struct OracleTable<E: BilinearSuite> {
    suite: E,
    seed: Vec<u8>,
    h2_sampling: H2Sampling<E>,
    record_queries: bool,
    inner: Mutex<Tables<E>>,
}

impl<E: BilinearSuite> fmt::Debug for OracleTable<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.lock();
        f.debug_struct("OracleTable")
            .field("seed", &hex::encode(&self.seed))
            .field("h1", &t.h1.len())
            .field("h2", &t.h2.len())
            .field("h3", &t.h3.len())
            .field("h5", &t.h5.len())
            .finish()
    }
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(&Sha256::digest(bytes)[..8])
}

fn h5_key(w_bytes: &[u8], bits: usize) -> Vec<u8> {
    let mut key = w_bytes.to_vec();
    key.extend_from_slice(&(bits as u32).to_be_bytes());
    key
}

impl<E: BilinearSuite> OracleTable<E> {
    pub fn new(suite: E, seed: impl Into<Vec<u8>>) -> Self {
        Self {
            suite,
            seed: seed.into(),
            h2_sampling: H2Sampling::Dlog,
            record_queries: true,
            inner: Mutex::new(Tables {
                h1: BTreeMap::new(),
                h2: BTreeMap::new(),
                h3: BTreeMap::new(),
                h5: BTreeMap::new(),
                transcript: Vec::new(),
                aborts: 0,
            }),
        }
    }

    pub fn with_h2_sampling(mut self, sampling: H2Sampling<E>) -> Self {
        self.h2_sampling = sampling;
        self
    }

    /// Skip transcript records for plain lookups (programming and aborts are
    /// still recorded). Useful for long Monte Carlo runs.
    pub fn without_query_log(mut self) -> Self {
        self.record_queries = false;
        self
    }

    pub fn suite(&self) -> &E {
        &self.suite
    }

    fn lock(&self) -> MutexGuard<'_, Tables<E>> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn lazy_bytes(&self, oracle: OracleId, query: &[u8], out: &mut [u8]) {
        let mut h = Shake256::default();
        h.update(&[domain::LAZY, oracle.tag()]);
        h.update(&(self.seed.len() as u32).to_be_bytes());
        h.update(&self.seed);
        h.update(query);
        h.finalize_xof().read(out);
    }

    fn lazy_scalar(&self, oracle: OracleId, query: &[u8]) -> E::Scalar {
        let mut buf = [0u8; 32];
        self.lazy_bytes(oracle, query, &mut buf);
        self.suite.scalar_from_uniform_bytes(&buf)
    }

    fn log(t: &mut Tables<E>, kind: &'static str, oracle: OracleId, query: &[u8], answer: &[u8], trapdoor: bool) {
        t.transcript.push(TranscriptRecord {
            kind,
            oracle: Some(oracle),
            input: digest(query),
            answer: digest(answer),
            trapdoor,
        });
    }

    pub fn contains(&self, oracle: OracleId, query: &[u8]) -> bool {
        let t = self.lock();
        match oracle {
            OracleId::H1 => t.h1.contains_key(query),
            OracleId::H2 => t.h2.contains_key(query),
            OracleId::H3 => t.h3.contains_key(query),
            OracleId::H5 => t.h5.keys().any(|k| k.len() >= 4 && &k[..k.len() - 4] == query),
        }
    }

    pub fn program_g1(&self, query: &[u8], answer: E::G1, trapdoor: Option<Trapdoor<E>>) -> Result<()> {
        let mut t = self.lock();
        if t.h1.contains_key(query) {
            return Err(Error::Reprogram { oracle: "H1" });
        }
        Self::log(&mut t, "program", OracleId::H1, query, &answer.to_bytes(), trapdoor.is_some());
        t.h1.insert(query.to_vec(), Entry { value: answer, trapdoor });
        Ok(())
    }

    pub fn program_g2(&self, query: &[u8], answer: E::G2, trapdoor: Option<Trapdoor<E>>) -> Result<()> {
        let mut t = self.lock();
        if t.h2.contains_key(query) {
            return Err(Error::Reprogram { oracle: "H2" });
        }
        Self::log(&mut t, "program", OracleId::H2, query, &answer.to_bytes(), trapdoor.is_some());
        t.h2.insert(query.to_vec(), Entry { value: answer, trapdoor });
        Ok(())
    }

    /// Programs H3. `oracle` must be [`OracleId::H3`]; the parameter keeps
    /// call sites explicit about which list they touch.
    pub fn program_scalar(&self, oracle: OracleId, query: &[u8], answer: E::Scalar) -> Result<()> {
        if oracle != OracleId::H3 {
            return Err(Error::Config(format!("{} does not answer scalars", oracle.name())));
        }
        let mut t = self.lock();
        if t.h3.contains_key(query) {
            return Err(Error::Reprogram { oracle: "H3" });
        }
        Self::log(&mut t, "program", OracleId::H3, query, &answer.to_bytes(), false);
        t.h3.insert(query.to_vec(), Entry { value: answer, trapdoor: None });
        Ok(())
    }

    pub fn program_mask(&self, w: &E::Gt, out_len_bits: usize, mask: Vec<u8>) -> Result<()> {
        if mask.len() != out_len_bits.div_ceil(8) {
            return Err(Error::Config("mask length does not match the requested bit length".into()));
        }
        let key = h5_key(&w.to_bytes(), out_len_bits);
        let mut t = self.lock();
        if t.h5.contains_key(&key) {
            return Err(Error::Reprogram { oracle: "H5" });
        }
        Self::log(&mut t, "program", OracleId::H5, &key, &mask, false);
        t.h5.insert(key, Entry { value: mask, trapdoor: None });
        Ok(())
    }

    pub fn h1_trapdoor(&self, query: &[u8]) -> Option<Trapdoor<E>> {
        self.h1(query);
        self.lock().h1.get(query).and_then(|e| e.trapdoor.clone())
    }

    pub fn h2_trapdoor(&self, query: &[u8]) -> Option<Trapdoor<E>> {
        self.h2(query);
        self.lock().h2.get(query).and_then(|e| e.trapdoor.clone())
    }

    /// The H3 answer if the query was ever made or programmed.
    pub fn h3_answer(&self, query: &[u8]) -> Option<E::Scalar> {
        self.lock().h3.get(query).map(|e| e.value.clone())
    }

    pub fn record_abort(&self, reason: &str) {
        let mut t = self.lock();
        t.aborts += 1;
        t.transcript.push(TranscriptRecord {
            kind: "abort",
            oracle: None,
            input: reason.to_string(),
            answer: String::new(),
            trapdoor: false,
        });
    }

    /// Logs a challenger interaction (not an oracle query) by digest.
    pub fn record_event(&self, kind: &'static str, input: &[u8], answer: &[u8]) {
        self.lock().transcript.push(TranscriptRecord {
            kind,
            oracle: None,
            input: digest(input),
            answer: digest(answer),
            trapdoor: false,
        });
    }

    pub fn aborts(&self) -> usize {
        self.lock().aborts
    }

    pub fn transcript(&self) -> Vec<TranscriptRecord> {
        self.lock().transcript.clone()
    }

    /// Line-delimited JSON transcript.
    pub fn transcript_dump(&self) -> String {
        self.lock().transcript.iter().map(|r| serde_json::to_string(r).expect("serializable") + "\n").collect()
    }
}

impl<E: BilinearSuite> RandomOracle<E> for OracleTable<E> {
    fn h1(&self, input: &[u8]) -> E::G1 {
        let mut t = self.lock();
        if let Some(e) = t.h1.get(input) {
            let v = e.value.clone();
            if self.record_queries {
                let trap = e.trapdoor.is_some();
                Self::log(&mut t, "query", OracleId::H1, input, &v.to_bytes(), trap);
            }
            return v;
        }
        let x = self.lazy_scalar(OracleId::H1, input);
        let value = self.suite.p1().mul(&x);
        if self.record_queries {
            Self::log(&mut t, "query", OracleId::H1, input, &value.to_bytes(), true);
        }
        t.h1.insert(input.to_vec(), Entry { value: value.clone(), trapdoor: Some(Trapdoor::Dlog(x)) });
        value
    }

    fn h2(&self, input: &[u8]) -> E::G2 {
        let mut t = self.lock();
        if let Some(e) = t.h2.get(input) {
            let v = e.value.clone();
            if self.record_queries {
                let trap = e.trapdoor.is_some();
                Self::log(&mut t, "query", OracleId::H2, input, &v.to_bytes(), trap);
            }
            return v;
        }
        let x = self.lazy_scalar(OracleId::H2, input);
        let (value, trapdoor) = match &self.h2_sampling {
            H2Sampling::Dlog => (self.suite.p2().mul(&x), Trapdoor::Dlog(x)),
            H2Sampling::MasterScaled(u2) => (u2.mul(&x), Trapdoor::MasterScaled(x)),
        };
        if self.record_queries {
            Self::log(&mut t, "query", OracleId::H2, input, &value.to_bytes(), true);
        }
        t.h2.insert(input.to_vec(), Entry { value: value.clone(), trapdoor: Some(trapdoor) });
        value
    }

    fn h3(&self, input: &[u8]) -> E::Scalar {
        let mut t = self.lock();
        if let Some(e) = t.h3.get(input) {
            let v = e.value.clone();
            if self.record_queries {
                Self::log(&mut t, "query", OracleId::H3, input, &v.to_bytes(), false);
            }
            return v;
        }
        let value = self.lazy_scalar(OracleId::H3, input);
        if self.record_queries {
            Self::log(&mut t, "query", OracleId::H3, input, &value.to_bytes(), false);
        }
        t.h3.insert(input.to_vec(), Entry { value: value.clone(), trapdoor: None });
        value
    }

    fn h5(&self, w: &E::Gt, out_len_bits: usize) -> Vec<u8> {
        let key = h5_key(&w.to_bytes(), out_len_bits);
        let mut t = self.lock();
        if let Some(e) = t.h5.get(&key) {
            let v = e.value.clone();
            if self.record_queries {
                Self::log(&mut t, "query", OracleId::H5, &key, &v, false);
            }
            return v;
        }
        let mut mask = vec![0u8; out_len_bits.div_ceil(8)];
        self.lazy_bytes(OracleId::H5, &key, &mut mask);
        let spare = mask.len() * 8 - out_len_bits;
        if let Some(last) = mask.last_mut() {
            *last &= 0xffu8 << spare;
        }
        if self.record_queries {
            Self::log(&mut t, "query", OracleId::H5, &key, &mask, false);
        }
        t.h5.insert(key, Entry { value: mask.clone(), trapdoor: None });
        mask
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::bilinear::ToySuite;

    #[test]
    fn programmed_answers_replay() {
        let s = ToySuite::default();
        let t = OracleTable::new(s.clone(), b"t".to_vec());
        t.program_g1(b"LTP", s.g1(3), None).unwrap();
        assert_eq!(t.h1(b"LTP"), s.g1(3));
        assert_eq!(t.h1(b"LTP"), s.g1(3));
        assert_eq!(t.program_g1(b"LTP", s.g1(4), None), Err(Error::Reprogram { oracle: "H1" }));
        t.program_mask(&s.gt(168), 16, vec![0, 0]).unwrap();
        assert_eq!(t.h5(&s.gt(168), 16), vec![0, 0]);
        assert!(t.program_mask(&s.gt(168), 16, vec![1, 1]).is_err());
        assert!(t.program_scalar(OracleId::H1, b"x", s.scalar(1)).is_err());
    }

    #[test]
    fn lazy_answers_carry_trapdoors() {
        let s = ToySuite::default();
        let t = OracleTable::new(s.clone(), b"t".to_vec());
        let p = t.h1(b"veh");
        match t.h1_trapdoor(b"veh") {
            Some(Trapdoor::Dlog(x)) => assert_eq!(s.p1().mul(&x), p),
            other => panic!("unexpected {other:?}"),
        }
        let u2 = s.g2(7);
        let t = OracleTable::new(s.clone(), b"t".to_vec()).with_h2_sampling(H2Sampling::MasterScaled(u2));
        let p = t.h2(b"cs");
        match t.h2_trapdoor(b"cs") {
            Some(Trapdoor::MasterScaled(b)) => assert_eq!(u2.mul(&b), p),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn same_seed_tables_agree_across_orders() {
        let s = ToySuite::default();
        let a = OracleTable::new(s.clone(), b"seed".to_vec());
        let b = OracleTable::new(s.clone(), b"seed".to_vec());
        let x1 = a.h3(b"one");
        let x2 = a.h3(b"two");
        assert_eq!(b.h3(b"two"), x2);
        assert_eq!(b.h3(b"one"), x1);
    }

    #[test]
    fn replay_consistency_under_interleaving() {
        let s = ToySuite::default();
        let t = OracleTable::new(s.clone(), b"mix".to_vec()).without_query_log();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut seen: BTreeMap<(u8, Vec<u8>), u64> = BTreeMap::new();
        for i in 0..10_000u32 {
            let q = vec![rng.gen_range(0..64u8)];
            let which = rng.gen_range(0..4u8);
            if which == 3 && rng.gen_bool(0.1) {
                let _ = t.program_scalar(OracleId::H3, &[200, i as u8, (i >> 8) as u8], s.scalar(i as u64));
                continue;
            }
            let ans = match which {
                0 => t.h1(&q).value(),
                1 => t.h2(&q).value(),
                _ => t.h3(&q).value(),
            };
            let prev = seen.entry((which.min(2), q)).or_insert(ans);
            assert_eq!(*prev, ans);
        }
    }

    #[test]
    fn transcript_lines() {
        let s = ToySuite::default();
        let t = OracleTable::new(s.clone(), b"x".to_vec());
        t.h3(b"q");
        t.record_abort("collision");
        let dump = t.transcript_dump();
        assert_eq!(dump.lines().count(), 2);
        assert!(dump.contains("\"kind\":\"abort\""));
        assert_eq!(t.aborts(), 1);
    }
}
