use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vanet_core::bilinear::{toy_suite_for, BackendId, BilinearSuite, GroupElement};
use vanet_core::engine::{rsu_identity, Kgc};
use vanet_core::params::{setup, ParamConfig};
use vanet_core::trace::{TraceAuthority, Validity};

/// Writes `params.txt`, `registrations.tsv`, `vehicles.tsv` and `rsus.tsv`.
/// The master and tracing keys never leave the process.
pub fn run(seed: u64, backend: BackendId, out: &Path, vehicles: u32, rsus: u32) -> Result<(), String> {
    let suite = toy_suite_for(backend).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (params, master) = setup(suite, &ParamConfig::default(), &mut rng).map_err(|e| e.to_string())?;
    let authority = TraceAuthority::new(params.l1, &mut rng).map_err(|e| e.to_string())?;
    let mut kgc = Kgc::new(master, authority);

    let mut p = String::new();
    let _ = writeln!(p, "suite = {}", params.suite.descriptor());
    let _ = writeln!(p, "u1 = {}", hex::encode(params.u1.to_bytes()));
    let _ = writeln!(p, "u2 = {}", hex::encode(params.u2.to_bytes()));
    let _ = writeln!(p, "l1 = {}\nl2 = {}\nl3 = {}", params.l1, params.l2, params.l3);
    let _ = writeln!(p, "kgc_id = {}", String::from_utf8_lossy(&params.kgc_id));
    let _ = writeln!(p, "cipher = {}", params.cipher);

    let mut veh = String::from("rid\tltp\tltk\n");
    let lifetime = Validity::new(0, u64::from(u16::MAX)).map_err(|e| e.to_string())?;
    for i in 0..vehicles {
        let rid = format!("VIN-{i:06}").into_bytes();
        let (cred, _) = kgc.enroll(&params, i, &rid, lifetime, &mut rng).map_err(|e| e.to_string())?;
        let _ = writeln!(
            veh,
            "{}\t{}\t{}",
            String::from_utf8_lossy(&rid),
            hex::encode(&cred.ltp),
            hex::encode(cred.ltk.to_bytes())
        );
    }
    let mut rsu = String::from("id\tb\n");
    for i in 0..rsus {
        let cred = kgc.rsu_credential(&params, i).map_err(|e| e.to_string())?;
        let _ = writeln!(rsu, "{}\t{}", String::from_utf8_lossy(&rsu_identity(i)), hex::encode(cred.b.to_bytes()));
    }

    fs::create_dir_all(out).map_err(|e| format!("cannot create {}: {e}", out.display()))?;
    for (name, body) in [
        ("params.txt", p),
        ("registrations.tsv", kgc.authority.registration_file()),
        ("vehicles.tsv", veh),
        ("rsus.tsv", rsu),
    ] {
        fs::write(out.join(name), body).map_err(|e| format!("cannot write {name}: {e}"))?;
    }
    eprintln!("keygen: {vehicles} vehicles, {rsus} RSUs written to {}", out.display());
    Ok(())
}
