use thiserror::Error;

use crate::bilinear::BackendId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("elements belong to different bilinear suites")]
    BackendMismatch,
    #[error("backend {0} is not available in this build")]
    BackendUnavailable(BackendId),
    #[error("invalid toy modulus {0}: must be a prime in [3, 2^62)")]
    InvalidModulus(u64),
    #[error("invalid encoding: {0}")]
    Encoding(String),
    #[error("expected a {expected}-byte identifier, got {actual} bytes")]
    IdentifierLength { expected: usize, actual: usize },
    #[error("pseudonym bit length {0} is not a positive multiple of 8")]
    InvalidBitLength(usize),
    #[error("request pseudonym does not match the signing credential")]
    PseudonymMismatch,
    #[error("signing nonce must be nonzero")]
    ZeroNonce,
    #[error("aggregation requires at least one signature")]
    EmptyAggregate,
    #[error("common string already used by this short-term pseudonym")]
    CommonStringReuse,
    #[error("identity is not registered with the KGC")]
    UnregisteredIdentity,
    #[error("validity window [{from}, {to}] is empty")]
    EmptyValidity { from: u64, to: u64 },
    #[error("pseudonym issuance counter exhausted for this identity")]
    IssuanceExhausted,
    #[error("authenticated decryption failed")]
    Authentication,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("oracle {oracle} already answers this query")]
    Reprogram { oracle: &'static str },
    #[error("simulation aborted: {0}")]
    Abort(String),
    #[error("missing trapdoor: {0}")]
    MissingTrapdoor(&'static str),
    #[error("no fork: both runs drew the same challenge scalar")]
    NoFork,
    #[error("degenerate fork: target challenge cancels the embedded instance")]
    DegenerateFork,
    #[error("forgery does not satisfy the verification equation")]
    InvalidForgery,
}

impl Error {
    pub(crate) fn encoding(msg: impl Into<String>) -> Self {
        Error::Encoding(msg.into())
    }
}
