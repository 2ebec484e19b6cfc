//! Abstract bilinear-group suite.
//!
//! The protocols are written against [`BilinearSuite`], which bundles the
//! groups `G1`, `G2`, `GT` of prime order `q`, their generators, the pairing,
//! the isomorphism `psi: G2 -> G1`, the hash functions into each group and
//! canonical fixed-width serialization.
//!
//! [`ToySuite`] realizes the suite transparently over `Z/qZ` and is the
//! ground-truth oracle for every test in this crate. It is **insecure** by
//! construction: discrete logarithms are the residues themselves.
//!
//! A production backend plugs in by implementing the same trait. Type-3
//! curves have no efficient `psi`; an adapter for one may only define `psi`
//! on points whose discrete logarithm it knows, which covers `U1 = psi(U2)`
//! but not hashed points. [`BackendId::External`] therefore reports
//! [`Error::BackendUnavailable`](crate::Error::BackendUnavailable) in this
//! build.

mod toy;

use std::fmt::{self, Debug, Display};
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

pub use toy::{ToyG1, ToyG2, ToyGt, ToyScalar, ToySuite, DEFAULT_TOY_MODULUS};

use crate::error::{Error, Result};

/// Domain-separation prefix bytes, one per random oracle.
pub mod domain {
    pub const H1: u8 = 0x01;
    pub const H2: u8 = 0x02;
    pub const H3: u8 = 0x03;
    pub const H5: u8 = 0x05;
    /// Lazy sampling inside programmable oracle tables.
    pub const LAZY: u8 = 0x10;
    /// Per-epoch common strings generated by the simulator.
    pub const COMMON_STRING: u8 = 0x20;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendId {
    Toy,
    External,
}

impl Display for BackendId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendId::Toy => f.write_str("toy"),
            BackendId::External => f.write_str("external"),
        }
    }
}

impl FromStr for BackendId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "toy" => Ok(BackendId::Toy),
            "external" => Ok(BackendId::External),
            other => Err(Error::Config(format!("unknown backend `{other}`"))),
        }
    }
}

/// Elements of `Z/qZ`.
pub trait ScalarField:
    Clone
    + PartialEq
    + Eq
    + Debug
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn is_zero(&self) -> bool;
    /// Multiplicative inverse; `None` for zero.
    fn invert(&self) -> Option<Self>;
    /// Canonical fixed-width big-endian encoding.
    fn to_bytes(&self) -> Vec<u8>;
}

/// An additively written prime-order group (`G1` or `G2`).
pub trait GroupElement<S>:
    Clone + PartialEq + Eq + Debug + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Neg<Output = Self>
{
    fn mul(&self, k: &S) -> Self;
    fn is_identity(&self) -> bool;
    fn to_bytes(&self) -> Vec<u8>;
}

/// The multiplicatively written target group `GT`.
pub trait TargetElement<S>: Clone + PartialEq + Eq + Debug + Send + Sync + Mul<Output = Self> {
    fn pow(&self, k: &S) -> Self;
    fn is_identity(&self) -> bool;
    fn to_bytes(&self) -> Vec<u8>;
}

pub trait BilinearSuite: Clone + Debug + Send + Sync + 'static {
    type Scalar: ScalarField;
    type G1: GroupElement<Self::Scalar>;
    type G2: GroupElement<Self::Scalar>;
    type Gt: TargetElement<Self::Scalar>;

    fn backend_id(&self) -> BackendId;
    /// One-line description of the suite parameters, stable across runs.
    fn descriptor(&self) -> String;

    fn p1(&self) -> Self::G1;
    fn p2(&self) -> Self::G2;
    fn g1_identity(&self) -> Self::G1;
    fn g2_identity(&self) -> Self::G2;
    fn gt_identity(&self) -> Self::Gt;

    fn scalar_from_u64(&self, v: u64) -> Self::Scalar;
    /// Uniform element of `Z_q^*`.
    fn random_nonzero_scalar<R: RngCore + ?Sized>(&self, rng: &mut R) -> Self::Scalar;
    /// Maps at least 16 uniform bytes to an element of `Z_q^*`.
    fn scalar_from_uniform_bytes(&self, bytes: &[u8]) -> Self::Scalar;

    fn pair(&self, x: &Self::G1, y: &Self::G2) -> Result<Self::Gt>;
    fn psi(&self, y: &Self::G2) -> Result<Self::G1>;

    fn hash_to_g1(&self, label: &[u8]) -> Self::G1;
    fn hash_to_g2(&self, label: &[u8]) -> Self::G2;
    /// Hash into `Z_q^*`; never returns zero.
    fn hash_to_scalar(&self, data: &[u8]) -> Self::Scalar;
    /// Expands `w` into exactly `out_len_bits` bits. When the length is not a
    /// multiple of 8 the unused low-order bits of the last byte are zero.
    fn mask_bytes(&self, w: &Self::Gt, out_len_bits: usize) -> Vec<u8>;

    fn scalar_len(&self) -> usize;
    fn g1_len(&self) -> usize;
    fn g2_len(&self) -> usize;
    fn gt_len(&self) -> usize;

    fn scalar_from_bytes(&self, bytes: &[u8]) -> Result<Self::Scalar>;
    fn g1_from_bytes(&self, bytes: &[u8]) -> Result<Self::G1>;
    fn g2_from_bytes(&self, bytes: &[u8]) -> Result<Self::G2>;
    fn gt_from_bytes(&self, bytes: &[u8]) -> Result<Self::Gt>;
}

/// Builds the suite named by `backend`.
pub fn toy_suite_for(backend: BackendId) -> Result<ToySuite> {
    match backend {
        BackendId::Toy => Ok(ToySuite::default()),
        BackendId::External => Err(Error::BackendUnavailable(BackendId::External)),
    }
}
