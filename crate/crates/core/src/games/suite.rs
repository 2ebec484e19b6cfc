//! Monte Carlo property suites over the games and reduction machinery.
//!
//! Each property runs independent trials seeded by [`trial_seed`], so the
//! results are identical under sequential and parallel execution.

use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::game::{run_aggregate_game, run_signcryption_game, GameId, Verdict};
use super::simulate::{
    cooperative_forger, extract_cdh_from_aggregate_forgery, extract_cdh_from_signcryption_forgeries,
    fork_signcryption_forger, program_target_pseudonym, simulate_sign_without_key, simulate_signcrypt_without_key,
    SignCase,
};
use super::table::{H2Sampling, OracleTable};
use crate::aggregate::{self, challenge, CommonString, SignedBeacon};
use crate::bilinear::{BilinearSuite, GroupElement, ScalarField};
use crate::error::{Error, Result};
use crate::par::{trial_seed, Execution};
use crate::params::{setup, MasterSecret, ParamConfig, SystemParams};
use crate::signcryption::{self, challenge_input, RequestPlaintext, SigncryptedEnvelope};

/// Attempts made by the random-guess adversaries.
pub const RANDOM_GUESS_ATTEMPTS: u64 = 1000;

/// Random-guess wins tolerated per [`RANDOM_GUESS_ATTEMPTS`] on a toy group
/// of order about 1000, where one guess in `q` succeeds by chance.
pub const RANDOM_GUESS_ALLOWANCE: u64 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl PropertyResult {
    fn tally(name: &'static str, t: Tally) -> Self {
        Self { name, passed: t.ok == t.total, detail: t.to_string() }
    }
}

/// Outcome counts of a batch of trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub ok: u64,
    pub total: u64,
    /// Trials retried because the reduction aborted.
    pub aborts: u64,
}

impl std::fmt::Display for Tally {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.ok, self.total)?;
        if self.aborts > 0 {
            write!(f, " ({} aborts)", self.aborts)?;
        }
        Ok(())
    }
}

/// A trial result: success flag and number of aborts on the way.
type Trial = Result<(bool, u64)>;

type Instance<E> = (SystemParams<E>, MasterSecret<E>, Arc<OracleTable<E>>);

/// An [`Instance`] plus the target pseudonym and common string.
type TargetInstance<E> = (SystemParams<E>, MasterSecret<E>, Arc<OracleTable<E>>, Vec<u8>, CommonString);

fn run_trials<F>(exec: Execution, trials: u64, seed: u64, f: F) -> Tally
where
    F: Fn(&mut ChaCha8Rng) -> Trial + Sync + Send,
{
    exec.map_range(trials, |i| f(&mut ChaCha8Rng::seed_from_u64(trial_seed(seed, i)))).into_iter().fold(
        Tally { total: trials, ..Tally::default() },
        |mut t, r| {
            if let Ok((ok, aborts)) = r {
                t.ok += ok as u64;
                t.aborts += aborts;
            }
            t
        },
    )
}

/// Fresh parameters whose hashes are answered by a new lazy table.
fn instance<E: BilinearSuite>(suite: &E, rng: &mut ChaCha8Rng, h2: Option<H2Sampling<E>>) -> Result<Instance<E>> {
    let (params, master) = setup(suite.clone(), &ParamConfig::default(), rng)?;
    let mut table = OracleTable::new(suite.clone(), rng.gen::<[u8; 16]>().to_vec()).without_query_log();
    if let Some(s) = h2 {
        table = table.with_h2_sampling(s);
    }
    let table = Arc::new(table);
    Ok((params.with_oracle(table.clone()), master, table))
}

fn random_id<R: RngCore + ?Sized>(params: &SystemParams<impl BilinearSuite>, rng: &mut R) -> Vec<u8> {
    let mut id = vec![0u8; params.id_len()];
    rng.fill_bytes(&mut id);
    id
}

fn random_request<R: RngCore + ?Sized>(ltp: &[u8], rng: &mut R) -> RequestPlaintext {
    RequestPlaintext { nonce: rng.next_u64(), ltp: ltp.to_vec(), timestamp: rng.gen_range(0..1 << 16) }
}

/// Key-less signcryptions that pass honest designcryption unchanged.
pub fn signcrypt_simulation<E: BilinearSuite>(suite: &E, trials: u64, seed: u64, exec: Execution) -> Tally {
    run_trials(exec, trials, seed, |rng| {
        let (params, master, table) = instance(suite, rng, None)?;
        let ltp = random_id(&params, rng);
        let rsu_id = format!("rsu-{}", rng.gen::<u16>()).into_bytes();
        let m = random_request(&ltp, rng);
        let env = simulate_signcrypt_without_key(&table, &params, &m, &ltp, &rsu_id, rng)?;
        let rsu = signcryption::extract_rsu_key(&params, &master, &rsu_id)?;
        Ok((signcryption::designcrypt(&params, &rsu, &env).is_ok_and(|(got, _)| got == m), 0))
    })
}

/// The signcryption simulator refuses to overwrite an answered H3 query.
pub fn signcrypt_simulation_collision<E: BilinearSuite>(suite: &E, seed: u64) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (params, _, table) = instance(suite, &mut rng, None)?;
    let ltp = random_id(&params, &mut rng);
    let m = random_request(&ltp, &mut rng);
    let (r, h) = (params.suite.scalar_from_u64(4), params.suite.scalar_from_u64(2));
    let y = params.suite.p1().mul(&r) - params.h1(&ltp).mul(&h);
    params.h3(&challenge_input::<E>(&y, &m));
    let out = super::simulate::simulate_signcrypt_with(&table, &params, &m, &ltp, b"rsu-1", &r, &h);
    Ok(matches!(out, Err(Error::Abort(_))) && table.aborts() == 1)
}

/// Forking a cooperative forger and extracting gives back its LTK.
pub fn signcrypt_extraction<E: BilinearSuite>(suite: &E, trials: u64, seed: u64, exec: Execution) -> Tally {
    run_trials(exec, trials, seed, |rng| {
        let (params, master) = setup(suite.clone(), &ParamConfig::default(), rng)?;
        let table_seed = rng.gen::<[u8; 16]>();
        let ltp = random_id(&params, rng);
        // the credential must come from the same oracle the forks use
        let probe = params.with_oracle(Arc::new(OracleTable::new(suite.clone(), table_seed.to_vec())));
        let cred = signcryption::extract_vehicle_key(&probe, &master, &ltp)?;
        let mut forger = cooperative_forger(cred.clone());
        let pair = fork_signcryption_forger(&params, &table_seed, rng.next_u64(), &mut forger, rng)?;
        let extracted = extract_cdh_from_signcryption_forgeries(&pair, &probe)?;
        Ok((extracted == cred.ltk, 0))
    })
}

/// Draws a beacon setting: parameters with `H2` answering `beta * U2`, a
/// common string, and a target pseudonym in split form.
fn target_instance<E: BilinearSuite>(suite: &E, rng: &mut ChaCha8Rng, designated: bool) -> Result<TargetInstance<E>> {
    let (params, master) = setup(suite.clone(), &ParamConfig::default(), rng)?;
    let sampling = if designated { H2Sampling::Dlog } else { H2Sampling::MasterScaled(params.u2.clone()) };
    let table = Arc::new(OracleTable::new(suite.clone(), rng.gen::<[u8; 16]>().to_vec()).with_h2_sampling(sampling));
    let params = params.with_oracle(table.clone());
    let stp = random_id(&params, rng);
    let cs = CommonString::new(rng.gen::<[u8; 16]>().to_vec(), rng.gen_range(0..64));
    Ok((params, master, table, stp, cs))
}

fn random_alphas<E: BilinearSuite>(suite: &E, rng: &mut impl RngCore) -> [(E::Scalar, E::Scalar); 2] {
    [
        (suite.random_nonzero_scalar(rng), suite.random_nonzero_scalar(rng)),
        (suite.random_nonzero_scalar(rng), suite.random_nonzero_scalar(rng)),
    ]
}

fn beacon_message<R: RngCore + ?Sized>(rng: &mut R) -> Vec<u8> {
    format!("beacon pos={} speed={}", rng.next_u32() % 10_000, rng.next_u32() % 200).into_bytes()
}

/// Key-less beacons for a target pseudonym under non-designated strings.
pub fn sign_simulation_target<E: BilinearSuite>(suite: &E, trials: u64, seed: u64, exec: Execution) -> Tally {
    run_trials(exec, trials, seed, |rng| {
        let (params, _, table, stp, cs) = target_instance(suite, rng, false)?;
        program_target_pseudonym(&table, &params, &stp, random_alphas(suite, rng))?;
        let msg = beacon_message(rng);
        let (beacon, case) = simulate_sign_without_key(&table, &params, &msg, &stp, &cs, rng)?;
        Ok((case == SignCase::TargetOtherString && aggregate::verify_single(&params, &beacon, &cs), 0))
    })
}

/// Key-less beacons for pseudonyms whose H1 answers have known logs.
pub fn sign_simulation_non_target<E: BilinearSuite>(suite: &E, trials: u64, seed: u64, exec: Execution) -> Tally {
    run_trials(exec, trials, seed, |rng| {
        let designated = rng.gen::<bool>();
        let (params, _, table, stp, cs) = target_instance(suite, rng, designated)?;
        let msg = beacon_message(rng);
        let (beacon, case) = simulate_sign_without_key(&table, &params, &msg, &stp, &cs, rng)?;
        Ok((case == SignCase::NonTarget && aggregate::verify_single(&params, &beacon, &cs), 0))
    })
}

/// Target pseudonym under the designated string with a cancelling
/// challenge `c = -alpha'_0 / alpha'_1`.
pub fn sign_simulation_cancelling<E: BilinearSuite>(suite: &E, trials: u64, seed: u64, exec: Execution) -> Tally {
    run_trials(exec, trials, seed, |rng| {
        let (params, _, table, stp, cs) = target_instance(suite, rng, true)?;
        let msg = beacon_message(rng);
        let c = challenge(&params, &msg, &stp, &cs);
        let [(a0, _), (a1, a1p)] = random_alphas(suite, rng);
        let a0p = -(c * a1p.clone());
        program_target_pseudonym(&table, &params, &stp, [(a0, a0p), (a1, a1p)])?;
        let (beacon, case) = simulate_sign_without_key(&table, &params, &msg, &stp, &cs, rng)?;
        Ok((case == SignCase::DesignatedCancelling && aggregate::verify_single(&params, &beacon, &cs), 0))
    })
}

/// Target pseudonym under the designated string without cancellation aborts.
pub fn sign_simulation_designated_abort<E: BilinearSuite>(suite: &E, seed: u64) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let (params, _, table, stp, cs) = target_instance(suite, &mut rng, true)?;
        let msg = beacon_message(&mut rng);
        let alphas = random_alphas(suite, &mut rng);
        let c = challenge(&params, &msg, &stp, &cs);
        if (alphas[0].1.clone() + c * alphas[1].1.clone()).is_zero() {
            continue;
        }
        program_target_pseudonym(&table, &params, &stp, alphas)?;
        let out = simulate_sign_without_key(&table, &params, &msg, &stp, &cs, &mut rng);
        return Ok(matches!(out, Err(Error::Abort(_))) && table.aborts() == 1);
    }
}

/// Aggregate of one cooperative target beacon and `extra` honest beacons;
/// the extractor formula must evaluate to `s * U1`.
pub fn aggregate_extraction<E: BilinearSuite>(suite: &E, trials: u64, seed: u64, exec: Execution) -> Tally {
    run_trials(exec, trials, seed, |rng| {
        let extra = rng.gen_range(0..3);
        let (params, master, table, stp, cs) = target_instance(suite, rng, true)?;
        let alphas = random_alphas(suite, rng);
        let mut aborts = 0;
        // resample the message until the challenge does not cancel
        let msg = loop {
            let msg = beacon_message(rng);
            let c = challenge(&params, &msg, &stp, &cs);
            if !(alphas[0].1.clone() + c * alphas[1].1.clone()).is_zero() {
                break msg;
            }
            aborts += 1;
        };
        program_target_pseudonym(&table, &params, &stp, alphas)?;
        let target = aggregate::extract_short_term_key(&params, &master, &stp)?;
        let mut beacons: Vec<SignedBeacon<E>> = vec![aggregate::sign_beacon(&params, &target, &msg, &cs, rng)?];
        for _ in 0..extra {
            let other = aggregate::extract_short_term_key(&params, &master, &random_id(&params, rng))?;
            beacons.push(aggregate::sign_beacon(&params, &other, &beacon_message(rng), &cs, rng)?);
        }
        let agg = aggregate::aggregate(&beacons)?;
        let out = extract_cdh_from_aggregate_forgery(&agg, &cs, &table, &params)?;
        Ok((out == params.u1.mul(master.scalar()), aborts))
    })
}

/// A cancelling target challenge is reported as a degenerate fork.
pub fn aggregate_extraction_degenerate<E: BilinearSuite>(suite: &E, seed: u64) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (params, master, table, stp, cs) = target_instance(suite, &mut rng, true)?;
    let msg = beacon_message(&mut rng);
    let c = challenge(&params, &msg, &stp, &cs);
    let [(a0, _), (a1, a1p)] = random_alphas(suite, &mut rng);
    let a0p = -(c * a1p.clone());
    program_target_pseudonym(&table, &params, &stp, [(a0, a0p), (a1, a1p)])?;
    let cred = aggregate::extract_short_term_key(&params, &master, &stp)?;
    let agg = aggregate::aggregate(&[aggregate::sign_beacon(&params, &cred, &msg, &cs, &mut rng)?])?;
    Ok(matches!(extract_cdh_from_aggregate_forgery(&agg, &cs, &table, &params), Err(Error::DegenerateFork)))
}

fn game_rsu() -> Vec<u8> {
    b"rsu-game".to_vec()
}

/// Scripted adversaries with known verdicts, by name.
pub fn scripted_signcryption<E: BilinearSuite>(suite: &E, seed: u64) -> Result<Vec<(&'static str, bool)>> {
    let cfg = ParamConfig::default();
    let replay = run_signcryption_game(suite.clone(), &cfg, seed, |ch, rng| {
        let ltp = random_id(ch.params(), rng);
        let env = ch.q1_signcrypt(&random_request(&ltp, rng), &game_rsu())?;
        Some((env, game_rsu()))
    })?;
    let stolen = run_signcryption_game(suite.clone(), &cfg, seed, |ch, rng| {
        let ltp = random_id(ch.params(), rng);
        let cred = ch.q4_extract(&ltp)?;
        let env = signcryption::signcrypt(ch.params(), &cred, &random_request(&ltp, rng), &game_rsu(), rng).ok()?;
        Some((env, game_rsu()))
    })?;
    let malformed = run_signcryption_game(suite.clone(), &cfg, seed, |ch, _| {
        ch.q4_extract(b"short");
        None
    })?;
    Ok(vec![
        ("replayed Q1 output loses", matches!(replay.verdict, Verdict::Lose(_))),
        ("stolen long-term key flagged as key compromise", stolen.verdict == Verdict::KeyCompromise),
        ("malformed query disqualifies", matches!(malformed.verdict, Verdict::Disqualified(_))),
    ])
}

/// Scripted adversaries for the aggregate game.
pub fn scripted_aggregate<E: BilinearSuite>(suite: &E, seed: u64) -> Result<Vec<(&'static str, bool)>> {
    let cfg = ParamConfig::default();
    let cs = CommonString::for_epoch(seed, 0);
    let replay = run_aggregate_game(suite.clone(), &cfg, seed, |ch, rng| {
        let stp = random_id(ch.params(), rng);
        let b = ch.q6_sign(&cs, b"queried", &stp)?;
        Some((aggregate::aggregate(&[b]).ok()?, cs.clone()))
    })?;
    let stolen = run_aggregate_game(suite.clone(), &cfg, seed, |ch, rng| {
        let stp = random_id(ch.params(), rng);
        let cred = ch.q5_extract(&stp)?;
        let b = aggregate::sign_beacon(ch.params(), &cred, b"unqueried", &cs, rng).ok()?;
        Some((aggregate::aggregate(&[b]).ok()?, cs.clone()))
    })?;
    let reuse = run_aggregate_game(suite.clone(), &cfg, seed, |ch, rng| {
        let stp = random_id(ch.params(), rng);
        ch.q6_sign(&cs, b"first", &stp)?;
        ch.q6_sign(&cs, b"second", &stp);
        None
    })?;
    let traced = run_aggregate_game(suite.clone(), &cfg, seed, |ch, _| {
        let stp = ch.published_pseudonyms()[0].clone();
        ch.q7_trace(&stp).filter(|rid| rid.starts_with(b"challenger-vehicle-"))?;
        None
    })?;
    Ok(vec![
        ("replayed Q6 output loses", matches!(replay.verdict, Verdict::Lose(_))),
        ("stolen short-term key flagged as key compromise", stolen.verdict == Verdict::KeyCompromise),
        ("common-string reuse disqualifies", matches!(reuse.verdict, Verdict::Disqualified(_))),
        (
            "Q7 traces a published pseudonym",
            traced.ledger.traced.len() == 1 && traced.verdict == Verdict::Lose("no output".into()),
        ),
    ])
}

/// Wins of a random-guess adversary over [`RANDOM_GUESS_ATTEMPTS`] games.
pub fn random_guess_wins<E: BilinearSuite>(suite: &E, game: GameId, seed: u64, exec: Execution) -> u64 {
    let cfg = ParamConfig::default();
    let wins = exec.map_range(RANDOM_GUESS_ATTEMPTS, |i| {
        let s = trial_seed(seed, i);
        let outcome = match game {
            GameId::SigncryptAuth => run_signcryption_game(suite.clone(), &cfg, s, |ch, rng| {
                let p = ch.params();
                let y_point = p.suite.p1().mul(&p.suite.random_nonzero_scalar(rng));
                let mut body = vec![0u8; p.l2 / 8];
                rng.fill_bytes(&mut body);
                Some((SigncryptedEnvelope { y_point, body }, game_rsu()))
            }),
            GameId::AggregateAuth => run_aggregate_game(suite.clone(), &cfg, s, |ch, rng| {
                let p = ch.params();
                let stp = random_id(p, rng);
                let g = |rng: &mut dyn RngCore| p.suite.p1().mul(&p.suite.random_nonzero_scalar(rng));
                let (s1, s2) = (g(rng), g(rng));
                let agg = aggregate::AggregateSignature { entries: vec![(b"guess".to_vec(), stp)], s1, s2 };
                Some((agg, CommonString::for_epoch(s, 0)))
            }),
        };
        outcome.is_ok_and(|o| o.verdict.is_forgery())
    });
    wins.into_iter().filter(|w| *w).count() as u64
}

/// Runs every property of the named game's suite.
pub fn run_game_suite<E: BilinearSuite>(
    suite: &E,
    game: GameId,
    trials: u64,
    seed: u64,
    exec: Execution,
) -> Vec<PropertyResult> {
    let flag = |name: &'static str, r: Result<bool>| match r {
        Ok(passed) => PropertyResult { name, passed, detail: String::new() },
        Err(e) => PropertyResult { name, passed: false, detail: e.to_string() },
    };
    let scripted = |r: Result<Vec<(&'static str, bool)>>| match r {
        Ok(v) => v.into_iter().map(|(name, passed)| PropertyResult { name, passed, detail: String::new() }).collect(),
        Err(e) => vec![PropertyResult { name: "scripted adversaries", passed: false, detail: e.to_string() }],
    };
    let guesses = random_guess_wins(suite, game, seed ^ 0x6e55, exec);
    let guess = PropertyResult {
        name: "random-guess adversary",
        passed: guesses <= RANDOM_GUESS_ALLOWANCE,
        detail: format!("{guesses} wins / {RANDOM_GUESS_ATTEMPTS} (allowance {RANDOM_GUESS_ALLOWANCE})"),
    };
    let mut out = match game {
        GameId::SigncryptAuth => {
            let mut v = vec![
                PropertyResult::tally(
                    "simulated signcryption passes designcryption",
                    signcrypt_simulation(suite, trials, seed, exec),
                ),
                flag("simulator aborts on an answered H3 query", signcrypt_simulation_collision(suite, seed)),
                PropertyResult::tally(
                    "forking extractor recovers the long-term key",
                    signcrypt_extraction(suite, trials, seed, exec),
                ),
            ];
            v.extend(scripted(scripted_signcryption(suite, seed)));
            v
        }
        GameId::AggregateAuth => {
            let mut v = vec![
                PropertyResult::tally(
                    "simulated target beacons verify",
                    sign_simulation_target(suite, trials, seed, exec),
                ),
                PropertyResult::tally(
                    "simulated non-target beacons verify",
                    sign_simulation_non_target(suite, trials, seed, exec),
                ),
                PropertyResult::tally(
                    "cancelling designated beacons verify",
                    sign_simulation_cancelling(suite, trials, seed, exec),
                ),
                flag("designated target signing aborts", sign_simulation_designated_abort(suite, seed)),
                PropertyResult::tally(
                    "aggregate extractor yields s*U1",
                    aggregate_extraction(suite, trials, seed, exec),
                ),
                flag("cancelling challenge is a degenerate fork", aggregate_extraction_degenerate(suite, seed)),
            ];
            v.extend(scripted(scripted_aggregate(suite, seed)));
            v
        }
    };
    out.push(guess);
    out
}
