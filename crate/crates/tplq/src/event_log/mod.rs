//! Event log model: cases, traces, canonicalization and variant counting.
//!
//! A trace is the activity sequence of one case. Canonicalization prepends the
//! artificial start label to every trace and appends the artificial end label
//! to complete traces, so downstream consumers can treat "case started" and
//! "case finished" as ordinary transitions. Real events keep their original
//! timestamps; the artificial endpoints carry none.

mod csv_io;
mod xes;

pub use csv_io::{parse_csv, write_csv, CsvColumns};
pub use xes::{lifecycle_complete_cases, parse_xes};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// Artificial start-of-trace label, reserved: rejected in raw input.
pub const START_LABEL: &str = "\u{25B6}"; // ▶
/// Artificial end-of-trace label, reserved: rejected in raw input.
pub const END_LABEL: &str = "\u{25A0}"; // ■

/// Opaque case identifier. Never interpreted, only compared.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct CaseId(String);

impl CaseId {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for CaseId {
    fn from(s: &str) -> Self {
        CaseId(s.to_owned())
    }
}

impl From<String> for CaseId {
    fn from(s: String) -> Self {
        CaseId(s)
    }
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// UTC timestamp with millisecond resolution.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Timestamp(i64);

impl Timestamp {
    pub fn from_millis(ms: i64) -> Self {
        Timestamp(ms)
    }

    pub fn millis(self) -> i64 {
        self.0
    }

    /// Accepts ISO-8601 (with or without zone offset; naive times are read as
    /// UTC) or raw epoch milliseconds.
    pub fn parse(value: &str) -> Option<Self> {
        let v = value.trim();
        if v.is_empty() {
            return None;
        }
        if let Ok(ms) = v.parse::<i64>() {
            return Some(Timestamp(ms));
        }
        if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(v) {
            return Some(Timestamp(dt.timestamp_millis()));
        }
        if let Ok(naive) = chrono::NaiveDateTime::parse_from_str(v, "%Y-%m-%dT%H:%M:%S%.f") {
            return Some(Timestamp(naive.and_utc().timestamp_millis()));
        }
        None
    }

    /// ISO-8601 UTC with millisecond resolution, the serialization format.
    pub fn to_iso(self) -> String {
        let dt = chrono::DateTime::<chrono::Utc>::from_timestamp_millis(self.0)
            .expect("timestamp within chrono range");
        dt.format("%Y-%m-%dT%H:%M:%S%.3fZ").to_string()
    }
}

/// One recorded event: what happened and when.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Event {
    pub activity: String,
    pub timestamp: Timestamp,
}

/// The event sequence of one case, ordered by timestamp.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Trace {
    case_id: CaseId,
    events: Vec<Event>,
    canonical: bool,
    complete: bool,
}

impl Trace {
    pub fn new(case_id: CaseId, mut events: Vec<Event>) -> Self {
        events.sort_by_key(|e| e.timestamp); // stable: ties keep input order
        Trace { case_id, events, canonical: false, complete: false }
    }

    pub(crate) fn new_canonical(case_id: CaseId, events: Vec<Event>, complete: bool) -> Self {
        Trace { case_id, events, canonical: true, complete }
    }

    pub fn case_id(&self) -> &CaseId {
        &self.case_id
    }

    /// Real events only; artificial endpoints are not events.
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    /// Meaningful only once canonical: complete traces end with the end label.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn real_len(&self) -> usize {
        self.events.len()
    }

    /// The activity sequence. For canonical traces this includes the
    /// artificial start label and, for complete traces, the end label.
    pub fn activities(&self) -> Vec<&str> {
        let mut out = Vec::with_capacity(self.events.len() + 2);
        if self.canonical {
            out.push(START_LABEL);
        }
        out.extend(self.events.iter().map(|e| e.activity.as_str()));
        if self.canonical && self.complete {
            out.push(END_LABEL);
        }
        out
    }

    pub fn variant(&self) -> Vec<String> {
        self.activities().into_iter().map(str::to_owned).collect()
    }
}

/// A multiset of trace variants: canonical activity sequence to frequency.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct VariantMultiset {
    entries: BTreeMap<Vec<String>, u64>,
}

impl VariantMultiset {
    pub fn from_entries(entries: BTreeMap<Vec<String>, u64>) -> Self {
        VariantMultiset { entries }
    }

    pub fn entries(&self) -> &BTreeMap<Vec<String>, u64> {
        &self.entries
    }

    pub fn total(&self) -> u64 {
        self.entries.values().sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// An event log: one trace per case.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct EventLog {
    traces: BTreeMap<CaseId, Trace>,
    release_index: u32,
    canonical: bool,
}

impl EventLog {
    pub fn new(traces: Vec<Trace>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for t in traces {
            for e in &t.events {
                reject_reserved(&e.activity)?;
            }
            map.insert(t.case_id.clone(), t);
        }
        Ok(EventLog { traces: map, release_index: 0, canonical: false })
    }

    pub(crate) fn new_canonical(traces: Vec<Trace>, release_index: u32) -> Self {
        let mut map = BTreeMap::new();
        for t in traces {
            debug_assert!(t.canonical);
            map.insert(t.case_id.clone(), t);
        }
        EventLog { traces: map, release_index, canonical: true }
    }

    pub fn traces(&self) -> impl Iterator<Item = &Trace> {
        self.traces.values()
    }

    pub fn trace(&self, case: &CaseId) -> Option<&Trace> {
        self.traces.get(case)
    }

    pub fn case_ids(&self) -> impl Iterator<Item = &CaseId> {
        self.traces.keys()
    }

    pub fn num_cases(&self) -> usize {
        self.traces.len()
    }

    pub fn release_index(&self) -> u32 {
        self.release_index
    }

    pub fn is_canonical(&self) -> bool {
        self.canonical
    }

    /// All activities occurring in traces, plus the artificial labels once
    /// the log is canonical.
    pub fn activity_alphabet(&self) -> BTreeSet<String> {
        let mut set: BTreeSet<String> = self
            .traces
            .values()
            .flat_map(|t| t.events.iter().map(|e| e.activity.clone()))
            .collect();
        if self.canonical {
            set.insert(START_LABEL.to_owned());
            set.insert(END_LABEL.to_owned());
        }
        set
    }

    /// Unique activity labels among real events (artificial labels excluded).
    pub fn real_activity_count(&self) -> usize {
        self.traces
            .values()
            .flat_map(|t| t.events.iter().map(|e| e.activity.as_str()))
            .collect::<BTreeSet<_>>()
            .len()
    }

    /// Total number of real events (artificial endpoints excluded).
    pub fn real_event_count(&self) -> usize {
        self.traces.values().map(|t| t.events.len()).sum()
    }

    /// Prepends the start label to every trace and appends the end label to
    /// the cases listed in `complete_cases`. Rejects a second invocation and
    /// unknown case ids.
    pub fn canonicalize(mut self, complete_cases: &BTreeSet<CaseId>) -> Result<EventLog> {
        if self.canonical {
            return Err(Error::AlreadyCanonical);
        }
        for c in complete_cases {
            if !self.traces.contains_key(c) {
                return Err(Error::UnknownCase(c.to_string()));
            }
        }
        for t in self.traces.values_mut() {
            for e in &t.events {
                reject_reserved(&e.activity)?;
            }
            t.canonical = true;
            t.complete = complete_cases.contains(&t.case_id);
        }
        self.canonical = true;
        Ok(self)
    }

    /// Canonicalize with every case marked complete, the stance taken for
    /// ground-truth source logs.
    pub fn canonicalize_all_complete(self) -> Result<EventLog> {
        let all: BTreeSet<CaseId> = self.traces.keys().cloned().collect();
        self.canonicalize(&all)
    }

    /// Variant frequencies over canonical activity sequences.
    pub fn variant_multiset(&self) -> Result<VariantMultiset> {
        if !self.canonical {
            return Err(Error::NotCanonical);
        }
        let mut entries: BTreeMap<Vec<String>, u64> = BTreeMap::new();
        for t in self.traces.values() {
            *entries.entry(t.variant()).or_insert(0) += 1;
        }
        Ok(VariantMultiset { entries })
    }
}

fn reject_reserved(activity: &str) -> Result<()> {
    if activity == START_LABEL || activity == END_LABEL {
        return Err(Error::ReservedLabel(activity.to_owned()));
    }
    Ok(())
}
