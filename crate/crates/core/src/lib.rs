//! Privacy-preserving vehicular authentication over a pairing suite.
//!
//! Long-term identities request batches of short-term pseudonyms from
//! road-side units through an identity-based signcryption channel. Beacons
//! are signed under short-term keys and aggregated per common string. A
//! trace authority can open any pseudonym back to its registered identity.
//!
//! The crate also carries an event-driven network simulator
//! ([`engine`]) and executable reduction games ([`games`]).

pub mod aggregate;
pub mod bilinear;
pub mod engine;
pub mod error;
pub mod games;
pub mod oracle;
pub mod par;
pub mod params;
pub mod signcryption;
pub mod trace;

pub use error::{Error, Result};
pub use par::Execution;
