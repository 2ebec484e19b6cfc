//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! fails. Library-level criteria run in-process on the toy backend;
//! end-to-end and determinism criteria drive the `vanet` binary.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode, Output};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use vanet_core::aggregate::{self, challenge_input, AggregateSignature, CommonString, SignedBeacon};
use vanet_core::bilinear::{GroupElement, ToySuite};
use vanet_core::engine::{run_scenario, AdversaryPolicy, ScenarioConfig, TRACE_PROBES};
use vanet_core::games::suite::{
    aggregate_extraction, sign_simulation_non_target, sign_simulation_target, signcrypt_extraction,
    signcrypt_simulation,
};
use vanet_core::games::{OracleId, OracleTable, Trapdoor};
use vanet_core::params::{setup, setup_with_master, MasterSecret, ParamConfig, SystemParams};
use vanet_core::signcryption::{self, RequestPlaintext};
use vanet_core::Execution;

type Toy = ToySuite;
type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
type VectorInstance = (Toy, SystemParams<Toy>, MasterSecret<Toy>, Arc<OracleTable<Toy>>);

const ROUNDTRIP_TRIPLES: usize = 1000;
const ROUNDTRIP_BUDGET: Duration = Duration::from_secs(10);
const HONEST_SETS: usize = 500;
const TAMPER_TRIALS: usize = 200;
const TAMPER_REQUIRED: usize = 199;
const PARTITIONS: usize = 50;
const PARTITION_SIZE: usize = 30;
const SIMULATIONS: u64 = 100;
const EXTRACTIONS: u64 = 50;
const E2E_BUDGET: Duration = Duration::from_secs(60);
/// Adversary acceptances tolerated on the toy group.
const TOY_ADVERSARY_ALLOWANCE: u64 = 1;

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn toy() -> Toy {
    ToySuite::new(1009, b"acceptance".to_vec()).expect("toy suite")
}

fn instance(seed: u64) -> (SystemParams<Toy>, MasterSecret<Toy>, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (params, master) = setup(toy(), &ParamConfig::default(), &mut rng).expect("setup");
    (params, master, rng)
}

fn random_id(len: usize, rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut id = vec![0u8; len];
    rng.fill_bytes(&mut id);
    id
}

fn honest_beacons(
    params: &SystemParams<Toy>,
    master: &MasterSecret<Toy>,
    cs: &CommonString,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<SignedBeacon<Toy>> {
    (0..n)
        .map(|i| {
            let stp = random_id(params.id_len(), rng);
            let cred = aggregate::extract_short_term_key(params, master, &stp).expect("extract");
            let msg = format!("beacon {i} pos={}", rng.gen::<u16>()).into_bytes();
            aggregate::sign_beacon(params, &cred, &msg, cs, rng).expect("sign")
        })
        .collect()
}

fn signcryption_roundtrip() -> Outcome {
    let (params, master, mut rng) = instance(1);
    let started = Instant::now();
    let mut ok = 0;
    for i in 0..ROUNDTRIP_TRIPLES {
        let ltp = random_id(params.id_len(), &mut rng);
        let rsu_id = format!("RSU-{i:04}-{}", rng.gen::<u32>()).into_bytes();
        let cred = signcryption::extract_vehicle_key(&params, &master, &ltp).map_err(|e| e.to_string())?;
        let rsu = signcryption::extract_rsu_key(&params, &master, &rsu_id).map_err(|e| e.to_string())?;
        let m = RequestPlaintext { nonce: rng.gen(), ltp, timestamp: rng.gen_range(0..1 << 32) };
        let env = signcryption::signcrypt(&params, &cred, &m, &rsu_id, &mut rng).map_err(|e| e.to_string())?;
        if let Ok((got, sig)) = signcryption::designcrypt(&params, &rsu, &env) {
            ok += usize::from(got == m && signcryption::verify_inner(&params, &got, &sig));
        }
    }
    let elapsed = started.elapsed();
    let detail = format!("{ok}/{ROUNDTRIP_TRIPLES} in {elapsed:.2?}");
    if ok == ROUNDTRIP_TRIPLES && elapsed < ROUNDTRIP_BUDGET {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn check(mismatches: &mut Vec<String>, label: &str, got: Vec<u8>, want: u64) {
    if got != (want as u16).to_be_bytes() {
        mismatches.push(format!("{label}: got {} want {want}", hex::encode(&got)));
    }
}

fn num(v: &Value, key: &str) -> u64 {
    v[key].as_u64().unwrap_or(u64::MAX)
}

/// Recomputes the signcryption and aggregate vectors with the library,
/// using the oracle answers the derivation script assumes.
fn library_vectors(frozen: &Value) -> Result<Vec<String>, String> {
    let err = |e: vanet_core::Error| e.to_string();
    let mut mismatches = Vec::new();
    let fresh = |v: &Value| -> Result<VectorInstance, String> {
        let suite = ToySuite::new(num(v, "q"), b"vectors".to_vec()).map_err(err)?;
        let (params, master) =
            setup_with_master(suite.clone(), &ParamConfig::default(), suite.scalar(num(v, "s"))).map_err(err)?;
        let table = Arc::new(OracleTable::new(suite.clone(), b"vectors".to_vec()));
        Ok((suite, params.with_oracle(table.clone()), master, table))
    };

    let v = &frozen["sc1"];
    let (suite, params, master, table) = fresh(v)?;
    let ltp = hex::decode(v["ltp_hex"].as_str().unwrap_or_default()).map_err(|e| e.to_string())?;
    let m = RequestPlaintext { nonce: num(v, "n"), ltp: ltp.clone(), timestamp: num(v, "tau") };
    let rsu_id = b"RSU-0000";
    table.program_g1(&ltp, suite.g1(num(v, "p_v")), None).map_err(err)?;
    table.program_g2(rsu_id, suite.g2(num(v, "p_r")), None).map_err(err)?;
    let y = suite.g1(num(v, "y"));
    table
        .program_scalar(OracleId::H3, &signcryption::challenge_input::<Toy>(&y, &m), suite.scalar(num(v, "h")))
        .map_err(err)?;
    table.program_mask(&suite.gt(num(v, "omega")), params.l2, vec![0; params.l2 / 8]).map_err(err)?;
    let cred = signcryption::extract_vehicle_key(&params, &master, &ltp).map_err(err)?;
    let rsu = signcryption::extract_rsu_key(&params, &master, rsu_id).map_err(err)?;
    let env =
        signcryption::signcrypt_with_nonce(&params, &cred, &m, rsu_id, &suite.scalar(num(v, "r"))).map_err(err)?;
    check(&mut mismatches, "sc1.ltk", cred.ltk.to_bytes(), num(v, "ltk"));
    check(&mut mismatches, "sc1.b", rsu.b.to_bytes(), num(v, "b"));
    check(&mut mismatches, "sc1.y", env.y_point.to_bytes(), num(v, "y"));
    if hex::encode(env.to_bytes()) != v["envelope_hex"].as_str().unwrap_or_default() {
        mismatches.push("sc1.envelope bytes".into());
    }
    match signcryption::designcrypt(&params, &rsu, &env) {
        Ok((got, sig)) if got == m => check(&mut mismatches, "sc1.z", sig.z.to_bytes(), num(v, "z")),
        _ => mismatches.push("sc1 designcryption".into()),
    }

    let v = &frozen["ag1"];
    let (suite, params, master, table) = fresh(v)?;
    let cs = CommonString::new(b"ag1".to_vec(), 0);
    table.program_g2(&cs.bytes, suite.g2(num(v, "p_cs")), None).map_err(err)?;
    let mut beacons = Vec::new();
    for (name, fill) in [("a", 0xa0u8), ("b", 0xb0)] {
        let sv = &v[name];
        let stp = vec![fill; params.id_len()];
        let msg = name.as_bytes().to_vec();
        for (j, key) in ["p0", "p1"].into_iter().enumerate() {
            let mut label = stp.clone();
            label.push(j as u8);
            table
                .program_g1(&label, suite.g1(num(sv, key)), Some(Trapdoor::Dlog(suite.scalar(num(sv, key)))))
                .map_err(err)?;
        }
        table
            .program_scalar(OracleId::H3, &challenge_input(&msg, &stp, &cs), suite.scalar(num(sv, "c")))
            .map_err(err)?;
        let cred = aggregate::extract_short_term_key(&params, &master, &stp).map_err(err)?;
        let b =
            aggregate::sign_beacon_with_nonce(&params, &cred, &msg, &cs, &suite.scalar(num(sv, "r"))).map_err(err)?;
        check(&mut mismatches, &format!("ag1.{name}.d0"), cred.d0.to_bytes(), num(sv, "d0"));
        check(&mut mismatches, &format!("ag1.{name}.d1"), cred.d1.to_bytes(), num(sv, "d1"));
        check(&mut mismatches, &format!("ag1.{name}.s1"), b.s1.to_bytes(), num(sv, "s1"));
        check(&mut mismatches, &format!("ag1.{name}.s2"), b.s2.to_bytes(), num(sv, "s2"));
        beacons.push(b);
    }
    let agg = aggregate::aggregate(&beacons).map_err(err)?;
    check(&mut mismatches, "ag1.agg.s1", agg.s1.to_bytes(), num(&v["agg"], "s1"));
    check(&mut mismatches, "ag1.agg.s2", agg.s2.to_bytes(), num(&v["agg"], "s2"));
    if !aggregate::verify_aggregate(&params, &agg, &cs) {
        mismatches.push("ag1 aggregate does not verify".into());
    }
    Ok(mismatches)
}

fn fixtures() -> Outcome {
    let root = workspace_root();
    let frozen_path = root.join("crates/core/tests/vectors/toy_vectors.json");
    let frozen: Value = serde_json::from_str(&fs::read_to_string(&frozen_path).map_err(|e| e.to_string())?)
        .map_err(|e| format!("frozen vectors: {e}"))?;
    let script = Command::new("python3")
        .arg(root.join("tools/derive_toy_vectors.py"))
        .output()
        .map_err(|e| format!("cannot run the derivation script: {e}"))?;
    if !script.status.success() {
        return Err(format!("derivation script failed: {}", String::from_utf8_lossy(&script.stderr)));
    }
    let derived: Value = serde_json::from_slice(&script.stdout).map_err(|e| format!("script output: {e}"))?;
    for key in ["sc1", "ag1"] {
        if derived[key] != frozen[key] {
            return Err(format!("re-derived {key} differs from the frozen file"));
        }
    }
    let mismatches = library_vectors(&frozen)?;
    if mismatches.is_empty() {
        Ok("signcryption and aggregate vectors re-derived and reproduced bit-exactly".into())
    } else {
        Err(mismatches.join("; "))
    }
}

/// Changes exactly one component of a valid aggregate.
fn tamper(params: &SystemParams<Toy>, agg: &mut AggregateSignature<Toy>, rng: &mut ChaCha8Rng) {
    let q = params.suite.modulus();
    let delta = params.suite.g1(rng.gen_range(1..q));
    let i = rng.gen_range(0..agg.entries.len());
    match rng.gen_range(0..4) {
        0 => agg.s1 = agg.s1 + delta,
        1 => agg.s2 = agg.s2 + delta,
        2 => {
            let m = &mut agg.entries[i].0;
            let bit = rng.gen_range(0..m.len() * 8);
            m[bit / 8] ^= 1 << (bit % 8);
        }
        _ => agg.entries[i].1 = random_id(params.id_len(), rng),
    }
}

fn aggregate_completeness() -> Outcome {
    let (params, master, mut rng) = instance(3);
    let mut honest = 0;
    for i in 0..HONEST_SETS {
        let n = 1 + i % 50;
        let cs = CommonString::for_epoch(3, i as u64);
        let bs = honest_beacons(&params, &master, &cs, n, &mut rng);
        let agg = aggregate::aggregate(&bs).map_err(|e| e.to_string())?;
        honest += usize::from(aggregate::verify_aggregate(&params, &agg, &cs));
    }
    let mut rejected = 0;
    for i in 0..TAMPER_TRIALS {
        let n = rng.gen_range(1..=50);
        let cs = CommonString::for_epoch(4, i as u64);
        let bs = honest_beacons(&params, &master, &cs, n, &mut rng);
        let mut agg = aggregate::aggregate(&bs).map_err(|e| e.to_string())?;
        tamper(&params, &mut agg, &mut rng);
        rejected += usize::from(!aggregate::verify_aggregate(&params, &agg, &cs));
    }
    let detail = format!("honest {honest}/{HONEST_SETS}, tampered rejected {rejected}/{TAMPER_TRIALS}");
    if honest == HONEST_SETS && rejected >= TAMPER_REQUIRED {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn reaggregation() -> Outcome {
    let (params, master, mut rng) = instance(5);
    let mut equal = 0;
    for i in 0..PARTITIONS {
        let cs = CommonString::for_epoch(5, i as u64);
        let bs = honest_beacons(&params, &master, &cs, PARTITION_SIZE, &mut rng);
        let flat = aggregate::aggregate(&bs).map_err(|e| e.to_string())?;
        let mut parts = Vec::new();
        let mut start = 0;
        while start < PARTITION_SIZE {
            let end = rng.gen_range(start + 1..=PARTITION_SIZE);
            parts.push(aggregate::aggregate(&bs[start..end]).map_err(|e| e.to_string())?);
            start = end;
        }
        let re = aggregate::re_aggregate(&parts).map_err(|e| e.to_string())?;
        equal += usize::from(re.to_bytes() == flat.to_bytes() && aggregate::verify_aggregate(&params, &re, &cs));
    }
    let detail = format!("{equal}/{PARTITIONS} partitions of {PARTITION_SIZE}");
    if equal == PARTITIONS {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn simulation_soundness() -> Outcome {
    let suite = toy();
    let exec = Execution::preferred();
    let envelopes = signcrypt_simulation(&suite, SIMULATIONS, 6, exec);
    let target = sign_simulation_target(&suite, SIMULATIONS / 2, 7, exec);
    let other = sign_simulation_non_target(&suite, SIMULATIONS / 2, 8, exec);
    let beacons = target.ok + other.ok;
    let detail =
        format!("envelopes {envelopes}, beacons {beacons}/{SIMULATIONS} (target {target}, non-target {other})");
    if envelopes.ok == SIMULATIONS && beacons == SIMULATIONS {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn extractors() -> Outcome {
    let suite = toy();
    let exec = Execution::preferred();
    let ltk = signcrypt_extraction(&suite, EXTRACTIONS, 9, exec);
    let cdh = aggregate_extraction(&suite, EXTRACTIONS, 10, exec);
    let detail = format!("long-term key {ltk}, s*U1 {cdh}");
    if ltk.ok == EXTRACTIONS && cdh.ok == EXTRACTIONS {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn hostile_config(seed: u64) -> ScenarioConfig {
    ScenarioConfig {
        vehicles: 20,
        rsus: 3,
        epochs: 5,
        seed,
        adversary: AdversaryPolicy { drop: 0.1, replay: 0.2, tamper: 0.2, forgeries: 2 },
        ..ScenarioConfig::default()
    }
}

fn traceability() -> Outcome {
    let mut issued = 0;
    for cfg in
        [ScenarioConfig { vehicles: 20, rsus: 3, epochs: 5, seed: 11, ..ScenarioConfig::default() }, hostile_config(12)]
    {
        let report = run_scenario(&cfg).map_err(|e| e.to_string())?;
        let a = report.metrics.audit;
        if a.issued == 0 || a.traced != a.issued {
            return Err(format!("seed {}: traced {}/{}", cfg.seed, a.traced, a.issued));
        }
        if a.probes != TRACE_PROBES || a.probes_unknown != TRACE_PROBES {
            return Err(format!("seed {}: {} of {} random probes unknown", cfg.seed, a.probes_unknown, a.probes));
        }
        issued += a.issued;
    }
    Ok(format!("{issued}/{issued} pseudonyms traced, {TRACE_PROBES}/{TRACE_PROBES} probes unknown per run"))
}

fn vanet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vanet")).args(args).env_remove("VANET_BACKEND").output().expect("spawn vanet")
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name).display().to_string()
}

/// `total` row of metrics.csv keyed by column name.
fn totals(csv: &str) -> BTreeMap<String, u64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let total = lines.find(|l| l.starts_with("total,")).unwrap_or_default();
    header.iter().zip(total.split(',')).filter_map(|(k, v)| Some((k.to_string(), v.parse().ok()?))).collect()
}

fn end_to_end() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("run");
    let started = Instant::now();
    let run = vanet(&["run", "--scenario", &scenario("adversarial.conf"), "--out", out.to_str().unwrap_or_default()]);
    let elapsed = started.elapsed();
    let csv = fs::read_to_string(out.join("metrics.csv")).map_err(|e| format!("no metrics: {e}"))?;
    let t = totals(&csv);
    let get = |k: &str| t.get(k).copied().unwrap_or(u64::MAX);
    let (succ, rej) = (get("adversary_successes"), get("honest_rejections"));
    let detail = format!(
        "adversary successes {succ} (allow {TOY_ADVERSARY_ALLOWANCE}), honest rejections {rej}, tampered {} replayed {} dropped {} forged {}, exit {:?}, {elapsed:.2?}",
        get("tampered"),
        get("replayed"),
        get("dropped"),
        get("forged"),
        run.status.code(),
    );
    if run.status.success()
        && succ <= TOY_ADVERSARY_ALLOWANCE
        && rej == 0
        && get("tampered") > 0
        && elapsed < E2E_BUDGET
    {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    if let Ok(entries) = fs::read_dir(dir) {
        for e in entries.flatten() {
            files.insert(e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap_or_default());
        }
    }
    files
}

/// Bench rows with the wall-clock columns removed.
fn bench_shape(stdout: &[u8]) -> String {
    String::from_utf8_lossy(stdout)
        .lines()
        .map(|l| l.split(',').take(2).collect::<Vec<_>>().join(","))
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut checked = Vec::new();
    for (name, args) in [
        ("keygen", vec!["keygen", "--seed", "21", "--vehicles", "5", "--rsus", "2"]),
        ("run", vec!["run", "--scenario", &scenario("adversarial.conf"), "--seed", "22"]),
    ] {
        let mut seen = Vec::new();
        for attempt in 0..2 {
            let out = dir.path().join(format!("{name}-{attempt}"));
            let mut full = args.clone();
            full.extend(["--out", out.to_str().unwrap_or_default()]);
            let o = vanet(&full);
            if !o.status.success() {
                return Err(format!("{name} exited {:?}", o.status.code()));
            }
            seen.push((o.stdout, dir_contents(&out)));
        }
        if seen[0] != seen[1] || seen[0].1.is_empty() {
            return Err(format!("{name} outputs differ between reruns"));
        }
        checked.push(name);
    }
    for game in ["signcrypt_auth", "aggregate_auth"] {
        let args = ["game", "--game", game, "--trials", "10", "--seed", "23"];
        let (a, b) = (vanet(&args), vanet(&args));
        if a.stdout != b.stdout || !a.status.success() {
            return Err(format!("game {game} outputs differ or failed"));
        }
    }
    checked.push("game");
    let args = ["bench", "--op", "verify_aggregate", "--iters", "3", "--seed", "24"];
    let (a, b) = (vanet(&args), vanet(&args));
    if !a.status.success() || bench_shape(&a.stdout) != bench_shape(&b.stdout) {
        return Err("bench rows differ between reruns".into());
    }
    checked.push("bench (timing columns excluded)");
    Ok(format!("byte-identical reruns: {}", checked.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("signcryption roundtrip", signcryption_roundtrip),
        ("fixture vectors", fixtures),
        ("aggregate completeness and tamper rejection", aggregate_completeness),
        ("re-aggregation associativity", reaggregation),
        ("key-less simulation soundness", simulation_soundness),
        ("extractor correctness", extractors),
        ("traceability", traceability),
        ("end-to-end adversarial run", end_to_end),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
