//! Scenario configuration: flat `key = value` text.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys,
//! duplicate keys and unparsable values are errors that name the line.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::bilinear::{BackendId, DEFAULT_TOY_MODULUS};
use crate::error::{Error, Result};

/// Network adversary without private keys.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversaryPolicy {
    pub drop: f64,
    pub replay: f64,
    pub tamper: f64,
    /// Targeted forgery attempts per epoch.
    pub forgeries: u32,
}

impl AdversaryPolicy {
    pub const PASSIVE: Self = Self { drop: 0.0, replay: 0.0, tamper: 0.0, forgeries: 0 };

    pub fn is_passive(&self) -> bool {
        *self == Self::PASSIVE
    }
}

impl Default for AdversaryPolicy {
    fn default() -> Self {
        Self::PASSIVE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub vehicles: usize,
    pub rsus: usize,
    pub epochs: u64,
    /// Beacons per vehicle per epoch; each uses its own short-term pseudonym.
    pub beacon_rate: u32,
    /// Short-term pseudonyms issued per request.
    pub stp_batch: u32,
    pub adversary: AdversaryPolicy,
    pub seed: u64,
    pub backend: BackendId,
    pub toy_modulus: u64,
    /// Requests stamped up to this many epochs in the past are fresh.
    pub freshness_window: u64,
    /// Fraction of stored beacons whose pseudonym is sent for tracing.
    pub trace_sample: f64,
    /// Beacons per partial aggregate before re-aggregation.
    pub store_chunk: usize,
    /// Verify same-tick beacons with rayon (results are merged in order).
    pub parallel_verify: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            vehicles: 2,
            rsus: 1,
            epochs: 1,
            beacon_rate: 2,
            stp_batch: 5,
            adversary: AdversaryPolicy::PASSIVE,
            seed: 0,
            backend: BackendId::Toy,
            toy_modulus: DEFAULT_TOY_MODULUS,
            freshness_window: 0,
            trace_sample: 0.25,
            store_chunk: 8,
            parallel_verify: false,
        }
    }
}

const KEYS: &[&str] = &[
    "vehicles",
    "rsus",
    "epochs",
    "beacon_rate",
    "stp_batch",
    "drop_rate",
    "replay_rate",
    "tamper_rate",
    "forgeries_per_epoch",
    "seed",
    "backend",
    "toy_modulus",
    "freshness_window",
    "trace_sample",
    "store_chunk",
    "parallel_verify",
];

fn parse_value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::Config(format!("line {line}: invalid value `{raw}` for `{key}`")))
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.trim();
            if content.is_empty() || content.starts_with('#') {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {line}: expected `key = value`, found `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!("line {line}: unknown key `{key}`")));
            }
            if seen.contains(&key) {
                return Err(Error::Config(format!("line {line}: duplicate key `{key}`")));
            }
            seen.push(key);
            match key {
                "vehicles" => cfg.vehicles = parse_value(line, key, value)?,
                "rsus" => cfg.rsus = parse_value(line, key, value)?,
                "epochs" => cfg.epochs = parse_value(line, key, value)?,
                "beacon_rate" => cfg.beacon_rate = parse_value(line, key, value)?,
                "stp_batch" => cfg.stp_batch = parse_value(line, key, value)?,
                "drop_rate" => cfg.adversary.drop = parse_value(line, key, value)?,
                "replay_rate" => cfg.adversary.replay = parse_value(line, key, value)?,
                "tamper_rate" => cfg.adversary.tamper = parse_value(line, key, value)?,
                "forgeries_per_epoch" => cfg.adversary.forgeries = parse_value(line, key, value)?,
                "seed" => cfg.seed = parse_value(line, key, value)?,
                "backend" => cfg.backend = parse_value(line, key, value)?,
                "toy_modulus" => cfg.toy_modulus = parse_value(line, key, value)?,
                "freshness_window" => cfg.freshness_window = parse_value(line, key, value)?,
                "trace_sample" => cfg.trace_sample = parse_value(line, key, value)?,
                "store_chunk" => cfg.store_chunk = parse_value(line, key, value)?,
                "parallel_verify" => cfg.parallel_verify = parse_value(line, key, value)?,
                _ => unreachable!("key list and match arms agree"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.vehicles == 0 || self.rsus == 0 || self.epochs == 0 {
            return bad("vehicles, rsus and epochs must be positive".into());
        }
        if self.epochs > u64::from(u16::MAX) {
            return bad(format!("at most {} epochs are supported", u16::MAX));
        }
        if self.stp_batch == 0 {
            return bad("stp_batch must be positive".into());
        }
        if self.beacon_rate > self.stp_batch {
            return bad(format!(
                "beacon_rate {} exceeds stp_batch {}: each beacon needs its own pseudonym",
                self.beacon_rate, self.stp_batch
            ));
        }
        if self.store_chunk == 0 {
            return bad("store_chunk must be positive".into());
        }
        let a = &self.adversary;
        for (name, rate) in [
            ("drop_rate", a.drop),
            ("replay_rate", a.replay),
            ("tamper_rate", a.tamper),
            ("trace_sample", self.trace_sample),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return bad(format!("{name} must lie in [0, 1], got {rate}"));
            }
        }
        Ok(())
    }

    /// The effective configuration in the input format; parsing it back
    /// yields the same configuration.
    pub fn to_text(&self) -> String {
        let a = &self.adversary;
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("vehicles", &self.vehicles);
        kv("rsus", &self.rsus);
        kv("epochs", &self.epochs);
        kv("beacon_rate", &self.beacon_rate);
        kv("stp_batch", &self.stp_batch);
        kv("drop_rate", &a.drop);
        kv("replay_rate", &a.replay);
        kv("tamper_rate", &a.tamper);
        kv("forgeries_per_epoch", &a.forgeries);
        kv("seed", &self.seed);
        kv("backend", &self.backend);
        kv("toy_modulus", &self.toy_modulus);
        kv("freshness_window", &self.freshness_window);
        kv("trace_sample", &self.trace_sample);
        kv("store_chunk", &self.store_chunk);
        kv("parallel_verify", &self.parallel_verify);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_text() {
        let mut cfg = ScenarioConfig { vehicles: 20, rsus: 3, epochs: 5, seed: 9, ..Default::default() };
        cfg.adversary = AdversaryPolicy { drop: 0.1, replay: 0.2, tamper: 0.2, forgeries: 2 };
        assert_eq!(ScenarioConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn diagnostics_name_the_line() {
        let err = ScenarioConfig::parse("vehicles = 2\n# note\nrsus = two\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = ScenarioConfig::parse("\nspeed = 3\n").unwrap_err();
        assert!(err.to_string().contains("line 2") && err.to_string().contains("speed"));
        let err = ScenarioConfig::parse("seed = 1\nseed = 2\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"));
        assert!(ScenarioConfig::parse("garbage\n").is_err());
    }

    #[test]
    fn rejects_out_of_range_values() {
        assert!(ScenarioConfig::parse("drop_rate = 1.5\n").is_err());
        assert!(ScenarioConfig::parse("vehicles = 0\n").is_err());
        assert!(ScenarioConfig::parse("beacon_rate = 6\nstp_batch = 5\n").is_err());
        assert!(ScenarioConfig::parse("backend = quantum\n").is_err());
    }
}
