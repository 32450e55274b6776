//! Deterministic synthetic log builders for tests, examples and benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::event_log::{CaseId, Event, EventLog, Timestamp, Trace};

/// Four-case toy log with two branch families and both complete and running
/// cases. Variants: a,b,c,f and a,b,f,c (complete); d,a,b,c,g and d,a,f,c,h
/// (still running). Timestamps interleave the cases step by step.
pub fn toy_branching_log() -> EventLog {
    let specs: [(&str, &[&str], bool); 4] = [
        ("c1", &["a", "b", "c", "f"], true),
        ("c2", &["a", "b", "f", "c"], true),
        ("c3", &["d", "a", "b", "c", "g"], false),
        ("c4", &["d", "a", "f", "c", "h"], false),
    ];
    let mut traces = Vec::new();
    let mut complete = std::collections::BTreeSet::new();
    for (case, acts, done) in specs {
        let events = acts
            .iter()
            .enumerate()
            .map(|(i, a)| Event {
                activity: (*a).to_owned(),
                timestamp: Timestamp::from_millis((i as i64 + 1) * 1000),
            })
            .collect();
        traces.push(Trace::new(CaseId::from(case), events));
        if done {
            complete.insert(CaseId::from(case));
        }
    }
    EventLog::new(traces).unwrap().canonicalize(&complete).unwrap()
}

/// Two long disjoint chain variants, `cases_per_variant` cases each, all
/// complete. Events of every case sit at the same timestamp grid so a split
/// cuts all cases at the same depth. Strong correlations at any window.
pub fn two_chain_log(cases_per_variant: usize, chain_len: usize) -> EventLog {
    assert!(chain_len <= 13, "chains draw from two fixed 13-letter alphabets");
    let forward: Vec<String> = ('a'..='m').map(|c| c.to_string()).collect();
    let backward: Vec<String> = ('n'..='z').rev().map(|c| c.to_string()).collect();
    let mut traces = Vec::new();
    for v in 0..2 {
        let alphabet = if v == 0 { &forward } else { &backward };
        for i in 0..cases_per_variant {
            let case = CaseId::from(format!("v{}_{:03}", v + 1, i + 1));
            let events = (0..chain_len)
                .map(|k| Event {
                    activity: alphabet[k].clone(),
                    timestamp: Timestamp::from_millis((k as i64 + 1) * 1000),
                })
                .collect();
            traces.push(Trace::new(case, events));
        }
    }
    EventLog::new(traces).unwrap().canonicalize_all_complete().unwrap()
}

/// Two disjoint 24-event variants across six cases with staggered starts:
/// one case per variant begins immediately, the rest arrive half a minute
/// later. Long traces keep several releases busy at windows up to 4, and
/// day-one depth puts distinct-ancestor state pairs in every horizon model.
pub fn deep_two_variant_log() -> EventLog {
    let pattern_a = ["a", "b", "c", "d", "e", "f"];
    let pattern_b = ["u", "v", "w", "x", "y", "z"];
    let layout: [(&str, &[&str; 6], i64); 6] = [
        ("c1", &pattern_a, 0),
        ("c2", &pattern_a, 30_000),
        ("c3", &pattern_a, 30_000),
        ("c4", &pattern_b, 0),
        ("c5", &pattern_b, 36_000),
        ("c6", &pattern_b, 36_000),
    ];
    let mut traces = Vec::new();
    for (case, pattern, start) in layout {
        let events = (0..24)
            .map(|i| Event {
                activity: pattern[i % pattern.len()].to_owned(),
                timestamp: Timestamp::from_millis(start + i as i64 * 1000),
            })
            .collect();
        traces.push(Trace::new(CaseId::from(case), events));
    }
    EventLog::new(traces).unwrap().canonicalize_all_complete().unwrap()
}

/// Seeded random raw (uncanonical) log. Activity labels are single letters
/// from an alphabet of `alphabet_size` (at most 26); trace lengths are drawn
/// uniformly from `min_len..=max_len`; timestamps are uniform over a fixed
/// range, so cases interleave arbitrarily.
pub fn random_log(
    seed: u64,
    num_cases: usize,
    alphabet_size: usize,
    min_len: usize,
    max_len: usize,
) -> EventLog {
    assert!(alphabet_size >= 1 && alphabet_size <= 26);
    assert!(min_len <= max_len);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut traces = Vec::with_capacity(num_cases);
    for i in 0..num_cases {
        let len = rng.gen_range(min_len..=max_len);
        let events = (0..len)
            .map(|_| {
                let letter = (b'a' + rng.gen_range(0..alphabet_size) as u8) as char;
                Event {
                    activity: letter.to_string(),
                    timestamp: Timestamp::from_millis(rng.gen_range(0..10_000_000)),
                }
            })
            .collect();
        traces.push(Trace::new(CaseId::from(format!("c{:05}", i + 1)), events));
    }
    EventLog::new(traces).unwrap()
}

/// Random log with a bounded variant vocabulary: cases follow one of
/// `num_variants` pre-drawn activity sequences. Yields realistic prefix
/// sharing for larger benchmarks.
pub fn random_variant_log(
    seed: u64,
    num_cases: usize,
    num_variants: usize,
    variant_len: usize,
    alphabet_size: usize,
) -> EventLog {
    assert!(alphabet_size >= 1 && alphabet_size <= 26);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let variants: Vec<Vec<String>> = (0..num_variants)
        .map(|_| {
            (0..variant_len)
                .map(|_| ((b'a' + rng.gen_range(0..alphabet_size) as u8) as char).to_string())
                .collect()
        })
        .collect();
    let mut traces = Vec::with_capacity(num_cases);
    for i in 0..num_cases {
        let variant = &variants[rng.gen_range(0..variants.len())];
        let start = rng.gen_range(0..1_000_000i64);
        let events = variant
            .iter()
            .enumerate()
            .map(|(k, a)| Event {
                activity: a.clone(),
                timestamp: Timestamp::from_millis(start + (k as i64) * 1000),
            })
            .collect();
        traces.push(Trace::new(CaseId::from(format!("c{:05}", i + 1)), events));
    }
    EventLog::new(traces).unwrap()
}
