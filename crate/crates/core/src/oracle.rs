//! Hash functions H1, H2, H3 and H5 as a replaceable seam.
//!
//! Honest parties hash through [`SuiteOracle`], which forwards to the suite's
//! domain-separated hash functions. Security-game simulators substitute a
//! programmable table (see [`crate::games::OracleTable`]) without touching
//! the protocol code.

use std::fmt::Debug;

use crate::bilinear::BilinearSuite;

pub trait RandomOracle<E: BilinearSuite>: Debug + Send + Sync {
    /// Pseudonyms into `G1` (long-term `LTP`, short-term `STP || j`).
    fn h1(&self, input: &[u8]) -> E::G1;
    /// RSU identities and common strings into `G2`.
    fn h2(&self, input: &[u8]) -> E::G2;
    /// Challenge scalars in `Z_q^*`.
    fn h3(&self, input: &[u8]) -> E::Scalar;
    /// Mask of exactly `out_len_bits` bits derived from a `GT` element.
    fn h5(&self, w: &E::Gt, out_len_bits: usize) -> Vec<u8>;
}

#[derive(Debug, Clone)]
pub struct SuiteOracle<E: BilinearSuite> {
    suite: E,
}

impl<E: BilinearSuite> SuiteOracle<E> {
    pub fn new(suite: E) -> Self {
        Self { suite }
    }
}

impl<E: BilinearSuite> RandomOracle<E> for SuiteOracle<E> {
    fn h1(&self, input: &[u8]) -> E::G1 {
        self.suite.hash_to_g1(input)
    }

    fn h2(&self, input: &[u8]) -> E::G2 {
        self.suite.hash_to_g2(input)
    }

    fn h3(&self, input: &[u8]) -> E::Scalar {
        self.suite.hash_to_scalar(input)
    }

    fn h5(&self, w: &E::Gt, out_len_bits: usize) -> Vec<u8> {
        self.suite.mask_bytes(w, out_len_bits)
    }
}
