//! Toy-backend vectors re-derived by `tools/derive_toy_vectors.py`.
//!
//! Each case programs the oracle answers the script assumes, runs the
//! library and compares every intermediate element byte for byte.

use std::sync::Arc;

use serde_json::Value;
use vanet_core::aggregate::{self, challenge_input, key_points, CommonString};
use vanet_core::bilinear::{BilinearSuite, GroupElement, ToySuite};
use vanet_core::games::simulate::{
    extract_cdh_from_aggregate_forgery, extract_cdh_from_signcryption_forgeries, program_target_pseudonym,
    simulate_sign_with_nonce, simulate_signcrypt_with, ForgeryPair, SignCase,
};
use vanet_core::games::{OracleId, OracleTable, Trapdoor};
use vanet_core::params::{setup_with_master, MasterSecret, ParamConfig, SystemParams};
use vanet_core::signcryption::{self, RequestPlaintext};

const RSU: &[u8] = b"RSU-0000";

fn vectors() -> Value {
    serde_json::from_str(include_str!("vectors/toy_vectors.json")).expect("vector file parses")
}

fn num(v: &Value, key: &str) -> u64 {
    v[key].as_u64().unwrap_or_else(|| panic!("missing integer {key}"))
}

fn enc(x: u64) -> Vec<u8> {
    (x as u16).to_be_bytes().to_vec()
}

struct Fixture {
    suite: ToySuite,
    params: SystemParams<ToySuite>,
    master: MasterSecret<ToySuite>,
    table: Arc<OracleTable<ToySuite>>,
}

fn fixture(v: &Value) -> Fixture {
    let suite = ToySuite::new(num(v, "q"), b"fixture".to_vec()).unwrap();
    let (params, master) =
        setup_with_master(suite.clone(), &ParamConfig::default(), suite.scalar(num(v, "s"))).unwrap();
    let table = Arc::new(OracleTable::new(suite.clone(), b"fixture-table".to_vec()));
    let params = params.with_oracle(table.clone());
    Fixture { suite, params, master, table }
}

fn sc1_request(v: &Value) -> RequestPlaintext {
    RequestPlaintext {
        nonce: num(v, "n"),
        ltp: hex::decode(v["ltp_hex"].as_str().unwrap()).unwrap(),
        timestamp: num(v, "tau"),
    }
}

#[test]
fn pairing_and_encoding_spot_checks() {
    let v = vectors();
    let suite = ToySuite::new(1009, b"fixture".to_vec()).unwrap();
    let gt = suite.pair(&suite.g1(6), &suite.g2(28)).unwrap();
    assert_eq!(gt.exponent(), num(&v, "pair_6_28"));
    assert_eq!(hex::encode(suite.g1(147).to_bytes()), v["scalar_147_hex"].as_str().unwrap());
}

#[test]
fn sc1_signcryption_vector() {
    let v = &vectors()["sc1"];
    let f = fixture(v);
    let m = sc1_request(v);
    assert_eq!(hex::encode(m.encode()), v["m_hex"].as_str().unwrap());

    let p_v = f.suite.g1(num(v, "p_v"));
    f.table.program_g1(&m.ltp, p_v, Some(Trapdoor::Dlog(f.suite.scalar(num(v, "p_v"))))).unwrap();
    f.table.program_g2(RSU, f.suite.g2(num(v, "p_r")), Some(Trapdoor::Dlog(f.suite.scalar(num(v, "p_r"))))).unwrap();
    let y = f.suite.g1(num(v, "y"));
    f.table
        .program_scalar(OracleId::H3, &signcryption::challenge_input::<ToySuite>(&y, &m), f.suite.scalar(num(v, "h")))
        .unwrap();
    let omega = f.suite.gt(num(v, "omega"));
    f.table.program_mask(&omega, f.params.l2, vec![0; f.params.l2 / 8]).unwrap();

    let cred = signcryption::extract_vehicle_key(&f.params, &f.master, &m.ltp).unwrap();
    assert_eq!(cred.ltk.to_bytes(), enc(num(v, "ltk")));
    let rsu = signcryption::extract_rsu_key(&f.params, &f.master, RSU).unwrap();
    assert_eq!(rsu.b.to_bytes(), enc(num(v, "b")));

    let env = signcryption::signcrypt_with_nonce(&f.params, &cred, &m, RSU, &f.suite.scalar(num(v, "r"))).unwrap();
    assert_eq!(env.y_point.to_bytes(), enc(num(v, "y")));
    assert_eq!(hex::encode(&env.body), v["y_hex"].as_str().unwrap());
    assert_eq!(hex::encode(env.to_bytes()), v["envelope_hex"].as_str().unwrap());

    let (got, sig) = signcryption::designcrypt(&f.params, &rsu, &env).unwrap();
    assert_eq!(got, m);
    assert_eq!(sig.z.to_bytes(), enc(num(v, "z")));
    assert_eq!(f.params.pair_p2(&sig.z).exponent(), num(v, "lhs"));
    assert_eq!(num(v, "lhs"), num(v, "rhs"));
}

/// Programs H1 for `stp` so that its key points are `(p0, p1)`.
fn program_keys(f: &Fixture, stp: &[u8], p0: u64, p1: u64) {
    for (j, p) in [p0, p1].into_iter().enumerate() {
        let mut label = stp.to_vec();
        label.push(j as u8);
        f.table.program_g1(&label, f.suite.g1(p), Some(Trapdoor::Dlog(f.suite.scalar(p)))).unwrap();
    }
}

#[test]
fn ag1_aggregate_vector() {
    let v = &vectors()["ag1"];
    let f = fixture(v);
    let cs = CommonString::new(b"ag1-common-string".to_vec(), 0);
    f.table.program_g2(&cs.bytes, f.suite.g2(num(v, "p_cs")), None).unwrap();
    assert_eq!(f.params.u2.to_bytes(), enc(num(v, "u2")));

    let mut beacons = Vec::new();
    for (name, fill) in [("a", 0xaa), ("b", 0xbb)] {
        let sv = &v[name];
        let stp = vec![fill; f.params.id_len()];
        let msg = format!("beacon {name}").into_bytes();
        program_keys(&f, &stp, num(sv, "p0"), num(sv, "p1"));
        f.table.program_scalar(OracleId::H3, &challenge_input(&msg, &stp, &cs), f.suite.scalar(num(sv, "c"))).unwrap();

        let cred = aggregate::extract_short_term_key(&f.params, &f.master, &stp).unwrap();
        assert_eq!(cred.d0.to_bytes(), enc(num(sv, "d0")));
        assert_eq!(cred.d1.to_bytes(), enc(num(sv, "d1")));
        let b = aggregate::sign_beacon_with_nonce(&f.params, &cred, &msg, &cs, &f.suite.scalar(num(sv, "r"))).unwrap();
        assert_eq!(b.s1.to_bytes(), enc(num(sv, "s1")), "{name}.s1");
        assert_eq!(b.s2.to_bytes(), enc(num(sv, "s2")), "{name}.s2");
        assert!(aggregate::verify_single(&f.params, &b, &cs));
        assert_eq!(f.params.pair_p2(&b.s1).exponent(), num(sv, "lhs"));
        beacons.push(b);
    }

    let agg = aggregate::aggregate(&beacons).unwrap();
    let av = &v["agg"];
    assert_eq!(agg.s1.to_bytes(), enc(num(av, "s1")));
    assert_eq!(agg.s2.to_bytes(), enc(num(av, "s2")));
    assert!(aggregate::verify_aggregate(&f.params, &agg, &cs));
    assert_eq!(f.params.pair_p2(&agg.s1).exponent(), num(av, "rhs"));
    let key_sum = beacons.iter().fold(f.suite.g1(0), |acc, b| {
        let (p0, p1) = key_points(&f.params, &b.stp);
        acc + p0 + p1.mul(&aggregate::challenge(&f.params, &b.message, &b.stp, &cs))
    });
    assert_eq!(key_sum.to_bytes(), enc(num(av, "key_sum")));
}

#[test]
fn keyless_signcryption_vector() {
    let v = &vectors()["sim_signcrypt"];
    let f = fixture(v);
    let ltp = vec![0x5a; f.params.id_len()];
    let m = RequestPlaintext { nonce: 9, ltp: ltp.clone(), timestamp: 3 };
    f.table.program_g1(&ltp, f.suite.g1(num(v, "p_v")), None).unwrap();
    f.table.program_g2(RSU, f.suite.g2(11), Some(Trapdoor::Dlog(f.suite.scalar(11)))).unwrap();

    let env = simulate_signcrypt_with(
        &f.table,
        &f.params,
        &m,
        &ltp,
        RSU,
        &f.suite.scalar(num(v, "r")),
        &f.suite.scalar(num(v, "h")),
    )
    .unwrap();
    assert_eq!(env.y_point.to_bytes(), enc(num(v, "y")));
    let rsu = signcryption::extract_rsu_key(&f.params, &f.master, RSU).unwrap();
    let (got, sig) = signcryption::designcrypt(&f.params, &rsu, &env).unwrap();
    assert_eq!(got, m);
    assert_eq!(sig.z.to_bytes(), enc(num(v, "z")));
    assert_eq!(f.params.pair_p2(&sig.z).exponent(), num(v, "lhs"));
}

#[test]
fn keyless_beacon_under_master_scaled_string() {
    let v = &vectors()["sim_sign_other_string"];
    let f = fixture(v);
    let s = f.suite.scalar(0);
    let stp = vec![0x3c; f.params.id_len()];
    let msg = b"case three".to_vec();
    let cs = CommonString::new(b"other-string".to_vec(), 1);
    program_target_pseudonym(
        &f.table,
        &f.params,
        &stp,
        [(f.suite.scalar(num(v, "p0")), s), (f.suite.scalar(num(v, "p1")), s)],
    )
    .unwrap();
    let beta = f.suite.scalar(num(v, "beta"));
    f.table.program_g2(&cs.bytes, f.params.u2.mul(&beta), Some(Trapdoor::MasterScaled(beta))).unwrap();
    assert_eq!(f.params.h2(&cs.bytes).to_bytes(), enc(num(v, "p_cs")));
    f.table.program_scalar(OracleId::H3, &challenge_input(&msg, &stp, &cs), f.suite.scalar(num(v, "c"))).unwrap();

    let (b, case) =
        simulate_sign_with_nonce(&f.table, &f.params, &msg, &stp, &cs, f.suite.scalar(num(v, "r"))).unwrap();
    assert_eq!(case, SignCase::TargetOtherString);
    assert_eq!(b.s1.to_bytes(), enc(num(v, "s1")));
    assert_eq!(b.s2.to_bytes(), enc(num(v, "s2")));
    assert!(aggregate::verify_single(&f.params, &b, &cs));
}

#[test]
fn signcryption_extractor_vector() {
    let v = &vectors()["signcrypt_extract"];
    let f = fixture(v);
    let ltp = vec![0x11; f.params.id_len()];
    f.table.program_g1(&ltp, f.suite.g1(num(v, "p_v")), None).unwrap();
    let pair = ForgeryPair {
        message: RequestPlaintext { nonce: 1, ltp, timestamp: 0 },
        y_point: f.suite.g1(num(v, "p_v")).mul(&f.suite.scalar(num(v, "r"))),
        z: f.suite.g1(num(v, "z")),
        z_hat: f.suite.g1(num(v, "z_hat")),
        h: f.suite.scalar(num(v, "h")),
        h_hat: f.suite.scalar(num(v, "h_hat")),
    };
    let out = extract_cdh_from_signcryption_forgeries(&pair, &f.params).unwrap();
    assert_eq!(out.to_bytes(), enc(num(v, "extracted")));
    assert_eq!(out.to_bytes(), enc(num(v, "ltk")));
}

#[test]
fn aggregate_extractor_vector() {
    let v = &vectors()["aggregate_extract"];
    let f = fixture(v);
    let stp = vec![0x44; f.params.id_len()];
    let msg = b"target beacon".to_vec();
    let cs = CommonString::new(b"designated".to_vec(), 2);
    let sc = |k| f.suite.scalar(num(v, k));
    program_target_pseudonym(
        &f.table,
        &f.params,
        &stp,
        [(sc("alpha0"), sc("alpha0_prime")), (sc("alpha1"), sc("alpha1_prime"))],
    )
    .unwrap();
    f.table.program_g2(&cs.bytes, f.suite.g2(num(v, "beta")), Some(Trapdoor::Dlog(sc("beta")))).unwrap();
    f.table.program_scalar(OracleId::H3, &challenge_input(&msg, &stp, &cs), sc("c")).unwrap();

    let cred = aggregate::extract_short_term_key(&f.params, &f.master, &stp).unwrap();
    assert_eq!(cred.p0.to_bytes(), enc(num(v, "p0")));
    assert_eq!(cred.p1.to_bytes(), enc(num(v, "p1")));
    assert_eq!(cred.d0.to_bytes(), enc(num(v, "d0")));
    assert_eq!(cred.d1.to_bytes(), enc(num(v, "d1")));
    let b = aggregate::sign_beacon_with_nonce(&f.params, &cred, &msg, &cs, &sc("r")).unwrap();
    assert_eq!(b.s1.to_bytes(), enc(num(v, "s1")));
    assert_eq!(b.s2.to_bytes(), enc(num(v, "s2")));

    let agg = aggregate::aggregate(&[b]).unwrap();
    let out = extract_cdh_from_aggregate_forgery(&agg, &cs, &f.table, &f.params).unwrap();
    assert_eq!(out.to_bytes(), enc(num(v, "extracted")));
    assert_eq!(out, f.params.u1.mul(f.master.scalar()));
}
