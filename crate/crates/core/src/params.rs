//! KGC setup: public system parameters and the master secret.

use std::fmt;
use std::sync::Arc;

use rand::RngCore;

use crate::bilinear::{BilinearSuite, GroupElement, ScalarField};
use crate::error::{Error, Result};
use crate::oracle::{RandomOracle, SuiteOracle};

/// Default bit length of long- and short-term pseudonyms.
pub const DEFAULT_L1: usize = 128;
/// Default value of the third length parameter. Carried in the public
/// parameters; no algorithm in this crate consumes it.
pub const DEFAULT_L3: usize = 128;
pub const DEFAULT_KGC_ID: &[u8] = b"KGC";
/// Width of the nonce and timestamp fields of a request.
pub const REQUEST_WORD_LEN: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamConfig {
    pub l1: usize,
    pub l3: usize,
    pub kgc_id: Vec<u8>,
}

impl Default for ParamConfig {
    fn default() -> Self {
        Self { l1: DEFAULT_L1, l3: DEFAULT_L3, kgc_id: DEFAULT_KGC_ID.to_vec() }
    }
}

/// Symmetric cipher used for Reply/Update payloads.
pub const CHANNEL_CIPHER: &str = "chacha20poly1305";

#[derive(Clone)]
pub struct SystemParams<E: BilinearSuite> {
    pub suite: E,
    pub u1: E::G1,
    pub u2: E::G2,
    /// Pseudonym length in bits.
    pub l1: usize,
    /// Length of the signcryption body `Z || m` in bits.
    pub l2: usize,
    pub l3: usize,
    pub kgc_id: Vec<u8>,
    pub p_kgc: E::G2,
    pub cipher: &'static str,
    oracle: Arc<dyn RandomOracle<E>>,
}

impl<E: BilinearSuite> fmt::Debug for SystemParams<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SystemParams")
            .field("suite", &self.suite)
            .field("u1", &self.u1)
            .field("u2", &self.u2)
            .field("l1", &self.l1)
            .field("l2", &self.l2)
            .field("l3", &self.l3)
            .field("oracle", &self.oracle)
            .finish()
    }
}

impl<E: BilinearSuite> SystemParams<E> {
    /// Identifier length in bytes (`l1 / 8`).
    pub fn id_len(&self) -> usize {
        self.l1 / 8
    }

    /// Encoded request plaintext length in bytes.
    pub fn request_len(&self) -> usize {
        2 * REQUEST_WORD_LEN + self.id_len()
    }

    /// `serialize(Y) || y`.
    pub fn envelope_len(&self) -> usize {
        self.suite.g1_len() + self.l2 / 8
    }

    pub fn h1(&self, input: &[u8]) -> E::G1 {
        self.oracle.h1(input)
    }

    pub fn h2(&self, input: &[u8]) -> E::G2 {
        self.oracle.h2(input)
    }

    pub fn h3(&self, input: &[u8]) -> E::Scalar {
        self.oracle.h3(input)
    }

    pub fn h5(&self, w: &E::Gt) -> Vec<u8> {
        self.oracle.h5(w, self.l2)
    }

    pub fn oracle(&self) -> &Arc<dyn RandomOracle<E>> {
        &self.oracle
    }

    /// Same parameters with every hash answered by `oracle`.
    pub fn with_oracle(&self, oracle: Arc<dyn RandomOracle<E>>) -> Self {
        Self { oracle, ..self.clone() }
    }

    pub fn check_identifier(&self, id: &[u8]) -> Result<()> {
        if id.len() == self.id_len() {
            Ok(())
        } else {
            Err(Error::IdentifierLength { expected: self.id_len(), actual: id.len() })
        }
    }

    /// `e(a, P2)`, the left-hand side of every verification equation.
    pub fn pair_p2(&self, a: &E::G1) -> E::Gt {
        self.suite.pair(a, &self.suite.p2()).expect("parameters share one suite")
    }

    pub(crate) fn pair(&self, a: &E::G1, b: &E::G2) -> Option<E::Gt> {
        self.suite.pair(a, b).ok()
    }
}

/// The KGC master key `s`, with `U2 = s * P2`.
#[derive(Clone)]
pub struct MasterSecret<E: BilinearSuite> {
    s: E::Scalar,
}

impl<E: BilinearSuite> fmt::Debug for MasterSecret<E> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("MasterSecret(..)")
    }
}

impl<E: BilinearSuite> MasterSecret<E> {
    pub fn scalar(&self) -> &E::Scalar {
        &self.s
    }
}

/// Samples `s` uniformly from `Z_q^*` and derives the public parameters.
pub fn setup<E: BilinearSuite, R: RngCore + ?Sized>(
    suite: E,
    config: &ParamConfig,
    rng: &mut R,
) -> Result<(SystemParams<E>, MasterSecret<E>)> {
    let s = suite.random_nonzero_scalar(rng);
    setup_with_master(suite, config, s)
}

/// Deterministic setup from a chosen master key.
pub fn setup_with_master<E: BilinearSuite>(
    suite: E,
    config: &ParamConfig,
    s: E::Scalar,
) -> Result<(SystemParams<E>, MasterSecret<E>)> {
    if config.l1 == 0 || !config.l1.is_multiple_of(8) {
        return Err(Error::InvalidBitLength(config.l1));
    }
    if s.is_zero() {
        return Err(Error::Config("master key must be nonzero".into()));
    }
    let u2 = suite.p2().mul(&s);
    let u1 = suite.psi(&u2)?;
    let request_len = 2 * REQUEST_WORD_LEN + config.l1 / 8;
    let l2 = 8 * (suite.g1_len() + request_len);
    let p_kgc = suite.hash_to_g2(&config.kgc_id);
    let oracle: Arc<dyn RandomOracle<E>> = Arc::new(SuiteOracle::new(suite.clone()));
    let params = SystemParams {
        suite,
        u1,
        u2,
        l1: config.l1,
        l2,
        l3: config.l3,
        kgc_id: config.kgc_id.clone(),
        p_kgc,
        cipher: CHANNEL_CIPHER,
        oracle,
    };
    Ok((params, MasterSecret { s }))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::bilinear::ToySuite;

    #[test]
    fn seeded_master_seven() {
        let suite = ToySuite::default();
        let (p, _) = setup_with_master(suite.clone(), &ParamConfig::default(), suite.scalar(7)).unwrap();
        assert_eq!(p.u1.value(), 7);
        assert_eq!(p.u2.value(), 7);
        assert_eq!(p.l2, 8 * (2 + 32));
        assert_eq!(p.envelope_len(), 36);
    }

    #[test]
    fn u1_is_psi_of_u2() {
        let suite = ToySuite::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..20 {
            let (p, m) = setup(suite.clone(), &ParamConfig::default(), &mut rng).unwrap();
            assert_eq!(suite.psi(&p.u2).unwrap(), p.u1);
            assert!(!m.scalar().is_zero());
            seen.insert(p.u2.value());
        }
        assert!(seen.len() > 1);
    }

    #[test]
    fn different_seeds_give_different_keys() {
        let suite = ToySuite::default();
        let a = setup(suite.clone(), &ParamConfig::default(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = setup(suite, &ParamConfig::default(), &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        assert_ne!(a.0.u2, b.0.u2);
    }

    #[test]
    fn rejects_bad_lengths() {
        let suite = ToySuite::default();
        let cfg = ParamConfig { l1: 12, ..ParamConfig::default() };
        assert_eq!(setup_with_master(suite.clone(), &cfg, suite.scalar(3)).unwrap_err(), Error::InvalidBitLength(12));
    }
}
