//! Random-oracle tables, simulators, extractors and forgery games.

mod game;
pub mod simulate;
pub mod suite;
mod table;

pub use game::{run_aggregate_game, run_signcryption_game, Challenger, GameId, GameOutcome, QueryLedger, Verdict};
pub use table::{H2Sampling, OracleId, OracleTable, TranscriptRecord, Trapdoor};
