//! Wall-clock micro-benchmarks with CSV output.
//!
//! On the toy backend the numbers measure protocol-logic overhead only;
//! real pairing costs need a production curve.

use std::fmt::Write as _;
use std::time::Instant;

use clap::ValueEnum;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vanet_core::aggregate::{self, CommonString, SignedBeacon};
use vanet_core::bilinear::{toy_suite_for, BackendId};
use vanet_core::par::trial_seed;
use vanet_core::params::{setup, ParamConfig};
use vanet_core::signcryption::{self, RequestPlaintext};
use vanet_core::Execution;

pub const CSV_HEADER: &str = "op,n,mean_ns,p50_ns,p99_ns,ops_per_sec";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Op {
    Signcrypt,
    Designcrypt,
    Sign,
    VerifySingle,
    VerifyAggregate,
}

impl Op {
    fn name(self) -> &'static str {
        match self {
            Op::Signcrypt => "signcrypt",
            Op::Designcrypt => "designcrypt",
            Op::Sign => "sign",
            Op::VerifySingle => "verify_single",
            Op::VerifyAggregate => "verify_aggregate",
        }
    }

    pub fn default_sizes(self) -> Vec<usize> {
        match self {
            Op::VerifyAggregate => vec![1, 10, 50, 100],
            _ => vec![1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Sequential,
    Parallel,
}

/// Nearest-rank percentile of sorted samples.
fn percentile(sorted: &[u128], p: f64) -> u128 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn run(op: Op, sizes: &[usize], iters: u32, seed: u64, backend: BackendId, mode: Mode) -> Result<String, String> {
    let suite = toy_suite_for(backend).map_err(|e| e.to_string())?;
    eprintln!("bench: {} backend, protocol-logic overhead only", suite_label(backend));
    let exec = match mode {
        Mode::Sequential => Execution::Sequential,
        Mode::Parallel => Execution::Parallel,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (params, master) = setup(suite, &ParamConfig::default(), &mut rng).map_err(|e| e.to_string())?;
    let cs = CommonString::for_epoch(seed, 0);
    let rsu_id = b"RSU-bench".to_vec();
    let rsu = signcryption::extract_rsu_key(&params, &master, &rsu_id).map_err(|e| e.to_string())?;

    let mut csv = format!("{CSV_HEADER}\n");
    for &n in sizes {
        let ids: Vec<Vec<u8>> = (0..n)
            .map(|_| {
                let mut id = vec![0u8; params.id_len()];
                rng.fill_bytes(&mut id);
                id
            })
            .collect();
        let vehicles: Vec<_> = ids
            .iter()
            .map(|id| signcryption::extract_vehicle_key(&params, &master, id))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let stps: Vec<_> = ids
            .iter()
            .map(|id| aggregate::extract_short_term_key(&params, &master, id))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let requests: Vec<RequestPlaintext> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| RequestPlaintext { nonce: i as u64, ltp: id.clone(), timestamp: 0 })
            .collect();
        let envelopes: Vec<_> = vehicles
            .iter()
            .zip(&requests)
            .map(|(v, m)| signcryption::signcrypt(&params, v, m, &rsu_id, &mut rng))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let beacons: Vec<SignedBeacon<_>> = stps
            .iter()
            .enumerate()
            .map(|(i, c)| aggregate::sign_beacon(&params, c, format!("bench beacon {i}").as_bytes(), &cs, &mut rng))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let agg = aggregate::aggregate(&beacons).map_err(|e| e.to_string())?;
        let idx: Vec<usize> = (0..n).collect();

        let once = |iter: u32| -> bool {
            match op {
                Op::Signcrypt => exec
                    .map(&idx, |&i| {
                        let mut r = ChaCha8Rng::seed_from_u64(trial_seed(seed ^ u64::from(iter), i as u64));
                        signcryption::signcrypt(&params, &vehicles[i], &requests[i], &rsu_id, &mut r).is_ok()
                    })
                    .into_iter()
                    .all(|x| x),
                Op::Designcrypt => {
                    exec.map(&envelopes, |e| signcryption::designcrypt(&params, &rsu, e).is_ok()).into_iter().all(|x| x)
                }
                Op::Sign => exec
                    .map(&idx, |&i| {
                        let mut r = ChaCha8Rng::seed_from_u64(trial_seed(seed ^ u64::from(iter), i as u64));
                        aggregate::sign_beacon(&params, &stps[i], b"bench", &cs, &mut r).is_ok()
                    })
                    .into_iter()
                    .all(|x| x),
                Op::VerifySingle => aggregate::verify_batch(&params, &beacons, &cs, exec).into_iter().all(|x| x),
                Op::VerifyAggregate => aggregate::verify_aggregate(&params, &agg, &cs),
            }
        };
        if !once(0) {
            return Err(format!("{} failed on its own inputs", op.name()));
        }
        let mut samples: Vec<u128> = (1..=iters)
            .map(|i| {
                let t = Instant::now();
                let ok = once(i);
                let ns = t.elapsed().as_nanos();
                assert!(ok, "benchmark operation failed");
                ns
            })
            .collect();
        samples.sort_unstable();
        let mean = samples.iter().sum::<u128>() as f64 / samples.len() as f64;
        let per_sec = if mean > 0.0 { n as f64 * 1e9 / mean } else { f64::INFINITY };
        let _ = writeln!(
            csv,
            "{},{n},{:.0},{},{},{:.1}",
            op.name(),
            mean,
            percentile(&samples, 50.0),
            percentile(&samples, 99.0),
            per_sec
        );
    }
    Ok(csv)
}

fn suite_label(backend: BackendId) -> &'static str {
    match backend {
        BackendId::Toy => "toy",
        BackendId::External => "external",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_percentiles() {
        let s: Vec<u128> = (1..=100).collect();
        assert_eq!(percentile(&s, 50.0), 50);
        assert_eq!(percentile(&s, 99.0), 99);
        assert_eq!(percentile(&[7], 99.0), 7);
    }
}
