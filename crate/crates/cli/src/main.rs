//! `vanet`: key generation, scenario runs, micro-benchmarks and security
//! games.
//!
//! Exit codes: 0 success, 1 property or invariant failure, 2 usage or
//! configuration error. Machine-readable output goes to stdout or the
//! output directory; human summaries and timings go to stderr.

mod bench;
mod keygen;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use vanet_core::bilinear::{toy_suite_for, BackendId};
use vanet_core::engine::{run_scenario, ScenarioConfig};
use vanet_core::games::suite::run_game_suite;
use vanet_core::games::GameId;
use vanet_core::Execution;

#[derive(Parser, Debug)]
#[command(name = "vanet", version, about = "Vehicular pseudonym authentication: keys, simulation, benchmarks, games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate system parameters and enrol vehicles and RSUs.
    Keygen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "VANET_BACKEND", default_value = "toy")]
        backend: BackendId,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        vehicles: u32,
        #[arg(long, default_value_t = 1)]
        rsus: u32,
    },
    /// Run a scenario and write metrics and the event log.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the scenario's backend.
        #[arg(long, env = "VANET_BACKEND")]
        backend: Option<BackendId>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time one operation at several batch sizes; CSV on stdout.
    Bench {
        #[arg(long, value_enum)]
        op: bench::Op,
        /// Comma-separated batch sizes; verify_aggregate defaults to 1,10,50,100.
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long, default_value_t = 20)]
        iters: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "VANET_BACKEND", default_value = "toy")]
        backend: BackendId,
        #[arg(long, value_enum, default_value = "sequential")]
        exec: bench::Mode,
        /// Also write the CSV to DIR/bench.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a security-game property suite.
    Game {
        #[arg(long)]
        game: GameId,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "VANET_BACKEND", default_value = "toy")]
        backend: BackendId,
    },
}

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn usage_error(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn cmd_run(scenario: &Path, seed: Option<u64>, backend: Option<BackendId>, out: &Path) -> ExitCode {
    let text = match fs::read_to_string(scenario) {
        Ok(t) => t,
        Err(e) => return usage_error(format!("cannot read {}: {e}", scenario.display())),
    };
    let mut cfg = match ScenarioConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => return usage_error(format!("{}: {e}", scenario.display())),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(b) = backend {
        cfg.backend = b;
    }
    let effective = cfg.to_text();
    print!("{effective}");
    let started = Instant::now();
    let report = match run_scenario(&cfg) {
        Ok(r) => r,
        Err(e) => return usage_error(e),
    };
    let elapsed = started.elapsed();
    for (name, body) in
        [("config.txt", effective), ("metrics.csv", report.metrics.to_csv()), ("events.jsonl", report.log.to_jsonl())]
    {
        if let Err(e) = write_file(out, name, &body) {
            return usage_error(e);
        }
    }
    let t = report.metrics.total();
    eprintln!(
        "run: {} events, beacons {}/{} accepted, envelopes {}/{} accepted, adversary successes {}, violations {}, {:.2?}",
        report.log.records.len(),
        t.class(vanet_core::engine::MessageKind::SignedBeacon).accepted,
        t.class(vanet_core::engine::MessageKind::SignedBeacon).delivered,
        t.class(vanet_core::engine::MessageKind::Envelope).accepted,
        t.class(vanet_core::engine::MessageKind::Envelope).delivered,
        t.adversary_successes,
        report.violations.len(),
        elapsed,
    );
    for v in &report.violations {
        eprintln!("violation: {v}");
    }
    if report.violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILURE)
    }
}

fn cmd_game(game: GameId, trials: u64, seed: u64, backend: BackendId) -> ExitCode {
    let suite = match toy_suite_for(backend) {
        Ok(s) => s,
        Err(e) => return usage_error(e),
    };
    let started = Instant::now();
    let results = run_game_suite(&suite, game, trials, seed, Execution::preferred());
    let mut failed = 0;
    for r in &results {
        let status = if r.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!r.passed);
        if r.detail.is_empty() {
            println!("{status} {game} {}", r.name);
        } else {
            println!("{status} {game} {} [{}]", r.name, r.detail);
        }
    }
    eprintln!(
        "game {game}: {} of {} properties passed in {:.2?}",
        results.len() - failed,
        results.len(),
        started.elapsed()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILURE)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Keygen { seed, backend, out, vehicles, rsus } => {
            match keygen::run(seed, backend, &out, vehicles, rsus) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => usage_error(e),
            }
        }
        Command::Run { scenario, seed, backend, out } => cmd_run(&scenario, seed, backend, &out),
        Command::Bench { op, sizes, iters, seed, backend, exec, out } => {
            if iters == 0 {
                return usage_error("--iters must be positive");
            }
            let sizes = sizes.unwrap_or_else(|| op.default_sizes());
            if sizes.is_empty() || sizes.contains(&0) {
                return usage_error("--sizes must list positive integers");
            }
            match bench::run(op, &sizes, iters, seed, backend, exec) {
                Ok(csv) => {
                    print!("{csv}");
                    if let Some(dir) = out {
                        if let Err(e) = write_file(&dir, "bench.csv", &csv) {
                            return usage_error(e);
                        }
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => usage_error(e),
            }
        }
        Command::Game { game, trials, seed, backend } => {
            if trials == 0 {
                return usage_error("--trials must be positive");
            }
            cmd_game(game, trials, seed, backend)
        }
    }
}
