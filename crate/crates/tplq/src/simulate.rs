//! Continuous-publishing simulator: replays a finished event log as a stream
//! of cumulative releases, then perturbs per-release variant counts with
//! Laplace noise.
//!
//! The source log is split at a global timestamp cut: the earliest events
//! form the initial release, the rest queue up per case. Each later release
//! advances every running case by a number of events fixed by the scenario
//! (exactly `window` under certain, uniformly 0 to `window` under uncertain).
//! Cases not present in the initial part stay dormant until published time
//! reaches their first event; if publishing would otherwise stall, the
//! earliest dormant case is started so the stream always drains.
//!
//! All randomness is keyed by (seed, case, release), so release sequences
//! are reproducible and independent of map iteration order.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::correlation::{Scenario, ScenarioKind};
use crate::error::{Error, Result};
use crate::event_log::{CaseId, Event, EventLog, Timestamp, Trace, VariantMultiset};
use crate::leakage::PrivacyMechanismSpec;

/// How much of the source log is published up front.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct SplitConfig {
    /// Fraction of real events in the initial release, in (0, 1].
    pub fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { fraction: 0.5 }
    }
}

/// Everything a release run needs besides the reservoir itself.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
pub struct ReleasePlan {
    pub scenario: Scenario,
    pub epsilon: f64,
    pub max_releases: u32,
    pub seed: u64,
}

struct CaseStream {
    events: Vec<Event>,
    published: usize,
    started: bool,
}

impl CaseStream {
    fn remaining(&self) -> usize {
        self.events.len() - self.published
    }

    fn complete(&self) -> bool {
        self.published == self.events.len()
    }

    fn first_timestamp(&self) -> Option<Timestamp> {
        self.events.first().map(|e| e.timestamp)
    }
}

/// Pending per-case event queues plus publication state.
pub struct Reservoir {
    cases: BTreeMap<CaseId, CaseStream>,
    frontier: Option<Timestamp>,
    release_index: u32,
    source_events: usize,
}

impl Reservoir {
    /// Events still queued across all cases.
    pub fn pending_events(&self) -> usize {
        self.cases.values().map(CaseStream::remaining).sum()
    }

    pub fn source_events(&self) -> usize {
        self.source_events
    }

    pub fn release_index(&self) -> u32 {
        self.release_index
    }

    /// Latest timestamp published so far.
    pub fn frontier(&self) -> Option<Timestamp> {
        self.frontier
    }

    fn exhausted(&self) -> bool {
        self.cases.values().all(|c| c.started && c.complete())
    }

    fn raise_frontier(&mut self, ts: Timestamp) {
        if self.frontier.map_or(true, |f| ts > f) {
            self.frontier = Some(ts);
        }
    }

    fn cumulative_log(&self) -> EventLog {
        let traces: Vec<Trace> = self
            .cases
            .iter()
            .filter(|(_, c)| c.started)
            .map(|(case, c)| {
                Trace::new_canonical(
                    case.clone(),
                    c.events[..c.published].to_vec(),
                    c.complete(),
                )
            })
            .collect();
        EventLog::new_canonical(traces, self.release_index)
    }
}

/// Cut the source log into the initial release and the per-case queues.
/// The source must be canonical with every trace complete: it is a finished
/// log being replayed. The first ceil(fraction * N) real events in global
/// (timestamp, case, position) order are published immediately.
pub fn split_log(source: &EventLog, config: &SplitConfig) -> Result<(EventLog, Reservoir)> {
    if !source.is_canonical() {
        return Err(Error::NotCanonical);
    }
    if let Some(t) = source.traces().find(|t| !t.is_complete()) {
        return Err(Error::Config(format!(
            "split source must contain only complete traces; case {} is partial",
            t.case_id()
        )));
    }
    let fraction = config.fraction;
    if !fraction.is_finite() || fraction < 0.0 || fraction > 1.0 {
        return Err(Error::Config(format!(
            "split fraction must be in (0, 1], got {fraction}"
        )));
    }
    let total = source.real_event_count();
    let budget = ((fraction * total as f64).ceil() as usize).min(total);
    if budget == 0 {
        return Err(Error::EmptySplit(fraction));
    }

    let mut order: Vec<(Timestamp, &CaseId, usize)> = Vec::with_capacity(total);
    for trace in source.traces() {
        for (idx, event) in trace.events().iter().enumerate() {
            order.push((event.timestamp, trace.case_id(), idx));
        }
    }
    order.sort();
    let mut initial_counts: BTreeMap<&CaseId, usize> = BTreeMap::new();
    for (_, case, _) in &order[..budget] {
        *initial_counts.entry(case).or_insert(0) += 1;
    }
    let frontier = order[budget - 1].0;

    let mut cases = BTreeMap::new();
    for trace in source.traces() {
        let published = initial_counts.get(trace.case_id()).copied().unwrap_or(0);
        // A case with no events at all has published its (empty) entirety.
        let started = published > 0 || trace.events().is_empty();
        cases.insert(
            trace.case_id().clone(),
            CaseStream { events: trace.events().to_vec(), published, started },
        );
    }
    let reservoir = Reservoir {
        cases,
        frontier: Some(frontier),
        release_index: 1,
        source_events: total,
    };
    let initial = reservoir.cumulative_log();
    Ok((initial, reservoir))
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x00000100000001b3;

// Stable across builds, unlike the stdlib hasher, so seeded runs reproduce.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn advancement(plan: &ReleasePlan, case: &CaseId, release: u32) -> u32 {
    match plan.scenario.kind {
        ScenarioKind::Certain => plan.scenario.window,
        ScenarioKind::Uncertain => {
            let key = splitmix64(
                plan.seed ^ fnv1a64(case.as_str().as_bytes()) ^ ((release as u64) << 32),
            );
            let mut rng = ChaCha12Rng::seed_from_u64(key);
            rng.gen_range(0..=plan.scenario.window)
        }
    }
}

/// Produce the next cumulative release, or `None` once every case has
/// published its whole trace.
pub fn generate_release(reservoir: &mut Reservoir, plan: &ReleasePlan) -> Result<Option<EventLog>> {
    if plan.scenario.window == 0 {
        return Err(Error::Config("scenario window must be at least 1".into()));
    }
    if reservoir.exhausted() {
        return Ok(None);
    }
    let release = reservoir.release_index + 1;

    // Running cases advance first.
    let case_ids: Vec<CaseId> = reservoir.cases.keys().cloned().collect();
    for case in &case_ids {
        let stream = reservoir.cases.get_mut(case).expect("known case");
        if !stream.started || stream.complete() {
            continue;
        }
        let step = (advancement(plan, case, release) as usize).min(stream.remaining());
        stream.published += step;
        if let Some(last) = stream.events[..stream.published].last() {
            let ts = last.timestamp;
            reservoir.raise_frontier(ts);
        }
    }

    // Dormant cases whose first event falls inside published time start now
    // and advance in the same release; their events may wake further cases.
    loop {
        let frontier = reservoir.frontier;
        let ready: Vec<CaseId> = reservoir
            .cases
            .iter()
            .filter(|(_, c)| !c.started)
            .filter(|(_, c)| {
                matches!((c.first_timestamp(), frontier), (Some(first), Some(f)) if first <= f)
            })
            .map(|(case, _)| case.clone())
            .collect();
        if ready.is_empty() {
            break;
        }
        for case in ready {
            activate(reservoir, &case, plan, release);
        }
    }

    // If nothing is running but queues remain, force the earliest case in so
    // the stream keeps draining.
    let stalled = !reservoir
        .cases
        .values()
        .any(|c| c.started && !c.complete());
    if stalled && !reservoir.exhausted() {
        let earliest = reservoir
            .cases
            .iter()
            .filter(|(_, c)| !c.started)
            .filter_map(|(case, c)| c.first_timestamp().map(|ts| (ts, case.clone())))
            .min()
            .map(|(_, case)| case)
            .expect("unexhausted reservoir has a dormant case with events");
        activate(reservoir, &earliest, plan, release);
    }

    reservoir.release_index = release;
    Ok(Some(reservoir.cumulative_log()))
}

fn activate(reservoir: &mut Reservoir, case: &CaseId, plan: &ReleasePlan, release: u32) {
    let stream = reservoir.cases.get_mut(case).expect("known case");
    stream.started = true;
    let step = (advancement(plan, case, release) as usize).min(stream.remaining());
    stream.published += step;
    if let Some(last) = stream.events[..stream.published].last() {
        let ts = last.timestamp;
        reservoir.raise_frontier(ts);
    }
}

/// Seed for the noise stream of one release, decorrelated from the
/// advancement draws keyed on the same run seed.
pub fn noise_seed(seed: u64, release: u32) -> u64 {
    splitmix64(seed ^ ((release as u64) << 17) ^ 0x6e6f697365)
}

/// One Laplace(0, scale) draw by inverse CDF.
pub fn laplace_noise<R: Rng>(rng: &mut R, scale: f64) -> f64 {
    let r = loop {
        let x: f64 = rng.gen();
        if x > 0.0 {
            break x;
        }
    };
    let u = r - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// A perturbed variant count with the pre-rounding sample kept for audit.
#[derive(Clone, Debug, serde::Serialize)]
pub struct NoisyVariant {
    pub variant: Vec<String>,
    pub true_count: u64,
    pub raw: f64,
    pub rounded: u64,
}

/// Differentially private variant table of one release.
#[derive(Clone, Debug, serde::Serialize)]
pub struct NoisyVariants {
    pub epsilon: f64,
    pub scale: f64,
    pub entries: Vec<NoisyVariant>,
}

impl NoisyVariants {
    /// The published view: rounded, non-negative counts.
    pub fn rounded_multiset(&self) -> VariantMultiset {
        VariantMultiset::from_entries(
            self.entries.iter().map(|e| (e.variant.clone(), e.rounded)).collect(),
        )
    }
}

/// Perturb per-variant frequencies with independent Laplace noise, round to
/// the nearest integer, and clamp at zero. Rounding and clamping happen after
/// noising, so the privacy guarantee is untouched.
pub fn laplace_perturb(
    counts: &VariantMultiset,
    mechanism: &PrivacyMechanismSpec,
    seed: u64,
) -> NoisyVariants {
    let scale = mechanism.scale();
    let mut rng = ChaCha12Rng::seed_from_u64(splitmix64(seed));
    let entries = counts
        .entries()
        .iter()
        .map(|(variant, &count)| {
            let raw = count as f64 + laplace_noise(&mut rng, scale);
            let rounded = if raw <= 0.0 { 0 } else { raw.round() as u64 };
            NoisyVariant { variant: variant.clone(), true_count: count, raw, rounded }
        })
        .collect();
    NoisyVariants { epsilon: mechanism.epsilon(), scale, entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{random_log, toy_branching_log};

    fn source() -> EventLog {
        // The toy log as a finished history: every trace complete.
        let raw = toy_branching_log();
        let traces: Vec<Trace> = raw
            .traces()
            .map(|t| Trace::new(t.case_id().clone(), t.events().to_vec()))
            .collect();
        EventLog::new(traces).unwrap().canonicalize_all_complete().unwrap()
    }

    fn drain(plan: &ReleasePlan, reservoir: &mut Reservoir) -> Vec<EventLog> {
        let mut out = Vec::new();
        for _ in 0..200 {
            match generate_release(reservoir, plan).unwrap() {
                Some(log) => out.push(log),
                None => return out,
            }
        }
        panic!("stream did not terminate");
    }

    #[test]
    fn split_respects_ceiling_and_prefix_property() {
        let src = source();
        let (initial, reservoir) = split_log(&src, &SplitConfig { fraction: 0.5 }).unwrap();
        // 18 real events, so the initial part holds ceil(9) = 9.
        assert_eq!(initial.real_event_count(), 9);
        assert_eq!(initial.real_event_count() + reservoir.pending_events(), 18);
        for trace in initial.traces() {
            let full: Vec<_> = src.traces().find(|t| t.case_id() == trace.case_id()).unwrap()
                .events()
                .to_vec();
            assert_eq!(trace.events(), &full[..trace.events().len()]);
        }
    }

    #[test]
    fn split_of_everything_leaves_empty_reservoir() {
        let src = source();
        let (initial, reservoir) = split_log(&src, &SplitConfig { fraction: 1.0 }).unwrap();
        assert_eq!(initial.real_event_count(), 18);
        assert_eq!(reservoir.pending_events(), 0);
        assert!(initial.traces().all(|t| t.is_complete()));
    }

    #[test]
    fn empty_split_is_an_error() {
        let src = source();
        assert!(matches!(
            split_log(&src, &SplitConfig { fraction: 0.0 }),
            Err(Error::EmptySplit(_))
        ));
        let no_events = EventLog::new(vec![Trace::new("c".into(), vec![])])
            .unwrap()
            .canonicalize_all_complete()
            .unwrap();
        assert!(matches!(
            split_log(&no_events, &SplitConfig { fraction: 0.9 }),
            Err(Error::EmptySplit(_))
        ));
    }

    #[test]
    fn split_rejects_raw_and_partial_sources() {
        let raw = toy_branching_log();
        // toy_branching_log is canonical but has partial traces.
        assert!(matches!(
            split_log(&raw, &SplitConfig { fraction: 0.5 }),
            Err(Error::Config(_))
        ));
        let uncanonical =
            EventLog::new(vec![Trace::new("c".into(), vec![])]).unwrap();
        assert!(matches!(
            split_log(&uncanonical, &SplitConfig { fraction: 0.5 }),
            Err(Error::NotCanonical)
        ));
    }

    #[test]
    fn certain_releases_advance_by_exactly_window() {
        let src = source();
        let (initial, mut reservoir) = split_log(&src, &SplitConfig { fraction: 0.5 }).unwrap();
        let plan = ReleasePlan {
            scenario: Scenario::certain(2),
            epsilon: 0.01,
            max_releases: 50,
            seed: 1,
        };
        let first = generate_release(&mut reservoir, &plan).unwrap().unwrap();
        for trace in first.traces() {
            let before = initial
                .traces()
                .find(|t| t.case_id() == trace.case_id())
                .map(|t| t.events().len())
                .unwrap_or(0);
            let gained = trace.events().len() - before;
            if !trace.is_complete() {
                assert_eq!(gained, 2, "incomplete case {} gains window", trace.case_id());
            } else {
                assert!(gained <= 2);
            }
        }
    }

    #[test]
    fn stream_conserves_events_and_signals_end() {
        let src = source();
        let (_, mut reservoir) = split_log(&src, &SplitConfig { fraction: 0.3 }).unwrap();
        let plan = ReleasePlan {
            scenario: Scenario::certain(1),
            epsilon: 0.01,
            max_releases: 50,
            seed: 9,
        };
        let releases = drain(&plan, &mut reservoir);
        let last = releases.last().unwrap();
        assert_eq!(last.real_event_count(), 18);
        assert!(last.traces().all(|t| t.is_complete()));
        assert!(generate_release(&mut reservoir, &plan).unwrap().is_none());
        assert!(generate_release(&mut reservoir, &plan).unwrap().is_none());
    }

    #[test]
    fn releases_are_cumulative_and_never_shrink() {
        let src = random_log(11, 20, 5, 1, 9).canonicalize_all_complete().unwrap();
        let (initial, mut reservoir) = split_log(&src, &SplitConfig { fraction: 0.4 }).unwrap();
        let plan = ReleasePlan {
            scenario: Scenario::uncertain(3),
            epsilon: 0.01,
            max_releases: 500,
            seed: 5,
        };
        let mut previous = initial;
        for _ in 0..1000 {
            let Some(next) = generate_release(&mut reservoir, &plan).unwrap() else {
                assert_eq!(previous.real_event_count(), src.real_event_count());
                return;
            };
            for trace in previous.traces() {
                let grown = next.traces().find(|t| t.case_id() == trace.case_id()).unwrap();
                assert!(grown.events().len() >= trace.events().len());
                assert_eq!(&grown.events()[..trace.events().len()], trace.events());
            }
            assert_eq!(next.release_index(), previous.release_index() + 1);
            previous = next;
        }
        panic!("stream did not terminate");
    }

    #[test]
    fn uncertain_streams_are_seed_deterministic() {
        let src = random_log(3, 12, 4, 2, 7).canonicalize_all_complete().unwrap();
        let run = |seed: u64| {
            let (_, mut reservoir) =
                split_log(&src, &SplitConfig { fraction: 0.4 }).unwrap();
            let plan = ReleasePlan {
                scenario: Scenario::uncertain(2),
                epsilon: 0.01,
                max_releases: 500,
                seed,
            };
            drain(&plan, &mut reservoir)
        };
        assert_eq!(run(42), run(42));
        let a = run(42);
        let b = run(43);
        assert!(a.len() != b.len() || a != b, "different seeds should diverge");
    }

    #[test]
    fn dormant_case_waits_for_published_time() {
        // One early case and one whose events all come later.
        let early: Vec<Event> = (0..6)
            .map(|i| Event { activity: "a".into(), timestamp: Timestamp::from_millis(i) })
            .collect();
        let late: Vec<Event> = (0..2)
            .map(|i| Event { activity: "b".into(), timestamp: Timestamp::from_millis(100 + i) })
            .collect();
        let src = EventLog::new(vec![
            Trace::new("early".into(), early),
            Trace::new("late".into(), late),
        ])
        .unwrap()
        .canonicalize_all_complete()
        .unwrap();
        let (initial, mut reservoir) = split_log(&src, &SplitConfig { fraction: 0.4 }).unwrap();
        assert!(initial.traces().all(|t| t.case_id().as_str() == "early"));
        let plan = ReleasePlan {
            scenario: Scenario::certain(1),
            epsilon: 0.01,
            max_releases: 50,
            seed: 0,
        };
        let releases = drain(&plan, &mut reservoir);
        let appears_at = releases
            .iter()
            .position(|log| log.traces().any(|t| t.case_id().as_str() == "late"))
            .expect("late case eventually published");
        // The early case has events left at first, so the late case waits.
        assert!(appears_at > 0);
        for log in &releases[..appears_at] {
            assert!(log.traces().all(|t| t.case_id().as_str() == "early"));
        }
        let last = releases.last().unwrap();
        assert_eq!(last.real_event_count(), 8);
    }

    #[test]
    fn laplace_perturbation_is_seeded_and_clamped() {
        let src = source();
        let counts = src.variant_multiset().unwrap();
        let mech = PrivacyMechanismSpec::laplace(0.5).unwrap();
        let a = laplace_perturb(&counts, &mech, 7);
        let b = laplace_perturb(&counts, &mech, 7);
        assert_eq!(a.entries.len(), counts.len());
        for (x, y) in a.entries.iter().zip(&b.entries) {
            assert_eq!(x.raw, y.raw);
            assert_eq!(x.rounded, y.rounded);
            let reround = if x.raw <= 0.0 { 0 } else { x.raw.round() as u64 };
            assert_eq!(x.rounded, reround);
        }
    }

    #[test]
    fn huge_epsilon_reproduces_true_counts() {
        let src = source();
        let counts = src.variant_multiset().unwrap();
        let mech = PrivacyMechanismSpec::laplace(1e9).unwrap();
        let noisy = laplace_perturb(&counts, &mech, 3);
        assert_eq!(&noisy.rounded_multiset(), &counts);
    }

    #[test]
    fn laplace_noise_is_centered() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let n = 20_000;
        let mean: f64 = (0..n).map(|_| laplace_noise(&mut rng, 2.0)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.1, "sample mean {mean}");
    }
}
