//! Event log and run metrics.
//!
//! The event log is line-delimited JSON, one object per event:
//!
//! | field    | meaning                                              |
//! |----------|------------------------------------------------------|
//! | `seq`    | position in the log, from 0                          |
//! | `tick`   | logical time; epoch `e` spans ticks `[1000e, 1000e + 1000)` |
//! | `epoch`  | `tick / 1000`                                        |
//! | `actor`  | `kgc`, `rsu:<i>`, `veh:<i>` or `adversary`           |
//! | `event`  | what happened, e.g. `beacon_accepted`, `tamper`      |
//! | `kind`   | message class, when the event concerns a message     |
//! | `peer`   | the other endpoint, when there is one                |
//! | `digest` | first 8 bytes of SHA-256 of the payload, hex         |
//! | `detail` | free text (rejection reason, before digest, counts)  |
//!
//! Optional fields are omitted when empty. Metrics are CSV: one row per
//! epoch and a final `total` row.

use std::fmt::Write as _;

use serde::Serialize;

use super::message::MessageKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventRecord {
    pub seq: u64,
    pub tick: u64,
    pub epoch: u64,
    pub actor: String,
    pub event: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<MessageKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peer: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventLog {
    pub records: Vec<EventRecord>,
}

impl EventLog {
    pub fn push(&mut self, mut rec: EventRecord) {
        rec.seq = self.records.len() as u64;
        self.records.push(rec);
    }

    pub fn count(&self, event: &str) -> usize {
        self.records.iter().filter(|r| r.event == event).count()
    }

    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for r in &self.records {
            s.push_str(&serde_json::to_string(r).expect("plain record"));
            s.push('\n');
        }
        s
    }
}

/// Delivered messages of one class and how they were judged.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub delivered: u64,
    pub accepted: u64,
    pub rejected: u64,
}

/// Cryptographic operations performed, a deterministic stand-in for timing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub signcrypt: u64,
    pub designcrypt: u64,
    pub sign: u64,
    pub verify_single: u64,
    pub aggregate: u64,
    pub verify_aggregate: u64,
    pub trace: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EpochMetrics {
    pub classes: [ClassCounts; 5],
    pub dropped: u64,
    pub replayed: u64,
    pub tampered: u64,
    pub forged: u64,
    /// Accepted messages whose bytes the adversary made up or re-sent.
    pub adversary_successes: u64,
    /// Honest messages delivered intact but rejected.
    pub honest_rejections: u64,
    pub requests_sent: u64,
    pub beacons_sent: u64,
    pub credentials_installed: u64,
    pub beacons_stored: u64,
    pub aggregate_entries: u64,
    pub traces_matched: u64,
    pub ops: OpCounts,
}

impl EpochMetrics {
    pub fn class(&self, kind: MessageKind) -> &ClassCounts {
        &self.classes[class_index(kind)]
    }

    pub fn class_mut(&mut self, kind: MessageKind) -> &mut ClassCounts {
        &mut self.classes[class_index(kind)]
    }

    pub fn rejected(&self) -> u64 {
        self.classes.iter().map(|c| c.rejected).sum()
    }

    fn add(&mut self, o: &EpochMetrics) {
        for (a, b) in self.classes.iter_mut().zip(&o.classes) {
            a.delivered += b.delivered;
            a.accepted += b.accepted;
            a.rejected += b.rejected;
        }
        self.dropped += o.dropped;
        self.replayed += o.replayed;
        self.tampered += o.tampered;
        self.forged += o.forged;
        self.adversary_successes += o.adversary_successes;
        self.honest_rejections += o.honest_rejections;
        self.requests_sent += o.requests_sent;
        self.beacons_sent += o.beacons_sent;
        self.credentials_installed += o.credentials_installed;
        self.beacons_stored += o.beacons_stored;
        self.aggregate_entries += o.aggregate_entries;
        self.traces_matched += o.traces_matched;
        let (a, b) = (&mut self.ops, &o.ops);
        a.signcrypt += b.signcrypt;
        a.designcrypt += b.designcrypt;
        a.sign += b.sign;
        a.verify_single += b.verify_single;
        a.aggregate += b.aggregate;
        a.verify_aggregate += b.verify_aggregate;
        a.trace += b.trace;
    }

    fn columns(&self) -> Vec<u64> {
        let mut v = Vec::new();
        for c in &self.classes {
            v.extend([c.delivered, c.accepted, c.rejected]);
        }
        v.extend([
            self.rejected(),
            self.dropped,
            self.replayed,
            self.tampered,
            self.forged,
            self.adversary_successes,
            self.honest_rejections,
            self.requests_sent,
            self.beacons_sent,
            self.credentials_installed,
            self.beacons_stored,
            self.aggregate_entries,
            self.traces_matched,
        ]);
        let o = &self.ops;
        v.extend([o.signcrypt, o.designcrypt, o.sign, o.verify_single, o.aggregate, o.verify_aggregate, o.trace]);
        v
    }
}

fn class_index(kind: MessageKind) -> usize {
    MessageKind::ALL.iter().position(|k| *k == kind).expect("listed")
}

/// End-of-run audit of the trace authority.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraceAudit {
    pub issued: u64,
    pub traced: u64,
    pub probes: u64,
    pub probes_unknown: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunMetrics {
    pub epochs: Vec<EpochMetrics>,
    pub audit: TraceAudit,
}

impl RunMetrics {
    pub fn total(&self) -> EpochMetrics {
        let mut t = EpochMetrics::default();
        for e in &self.epochs {
            t.add(e);
        }
        t
    }

    pub fn csv_header() -> String {
        let mut cols = vec!["epoch".to_string()];
        for k in MessageKind::ALL {
            for f in ["delivered", "accepted", "rejected"] {
                cols.push(format!("{}_{f}", k.name()));
            }
        }
        cols.extend(
            [
                "rejected",
                "dropped",
                "replayed",
                "tampered",
                "forged",
                "adversary_successes",
                "honest_rejections",
                "requests_sent",
                "beacons_sent",
                "credentials_installed",
                "beacons_stored",
                "aggregate_entries",
                "traces_matched",
                "op_signcrypt",
                "op_designcrypt",
                "op_sign",
                "op_verify_single",
                "op_aggregate",
                "op_verify_aggregate",
                "op_trace",
                "pseudonyms_issued",
                "pseudonyms_traced",
                "probes",
                "probes_unknown",
            ]
            .map(String::from),
        );
        cols.join(",")
    }

    pub fn to_csv(&self) -> String {
        let mut s = Self::csv_header();
        s.push('\n');
        let row = |s: &mut String, label: &str, m: &EpochMetrics, audit: &TraceAudit| {
            let mut cells = vec![label.to_string()];
            cells.extend(m.columns().iter().map(u64::to_string));
            cells.extend([audit.issued, audit.traced, audit.probes, audit.probes_unknown].map(|v| v.to_string()));
            let _ = writeln!(s, "{}", cells.join(","));
        };
        for (e, m) in self.epochs.iter().enumerate() {
            row(&mut s, &e.to_string(), m, &TraceAudit::default());
        }
        row(&mut s, "total", &self.total(), &self.audit);
        s
    }
}
