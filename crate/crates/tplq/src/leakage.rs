//! Privacy leakage quantification under temporal correlations.
//!
//! A single differentially private release leaks at most epsilon on its own.
//! Correlated releases leak more: an adversary can route what release t-1
//! revealed through the backward correlation rows (and what later releases
//! reveal through the forward rows). Per ordered state pair that routing is a
//! linear-fractional program over a box, solved exactly by a sort-and-sweep
//! over its vertices. Chaining the per-release suprema yields the backward
//! and forward leakage sequences, combined into total leakage per release.

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::automaton::PrefixAutomaton;
use crate::correlation::{CorrelationModel, CorrelationRow, Direction, Scenario, Target};
use crate::error::{Error, Result};

/// Marker used when displaying the absent target in pair evidence.
pub const ABSENT_DISPLAY: &str = "\u{22A5}";

/// Noise mechanism calibration: Laplace with scale sensitivity / epsilon.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PrivacyMechanismSpec {
    epsilon: f64,
    sensitivity: f64,
}

impl PrivacyMechanismSpec {
    /// Laplace mechanism for counting queries (sensitivity 1).
    pub fn laplace(epsilon: f64) -> Result<Self> {
        Self::with_sensitivity(epsilon, 1.0)
    }

    pub fn with_sensitivity(epsilon: f64, sensitivity: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(sensitivity > 0.0) || !sensitivity.is_finite() {
            return Err(Error::Config(format!(
                "sensitivity must be positive, got {sensitivity}"
            )));
        }
        Ok(PrivacyMechanismSpec { epsilon, sensitivity })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    /// Laplace scale parameter b.
    pub fn scale(&self) -> f64 {
        self.sensitivity / self.epsilon
    }
}

/// Leakage of one isolated release: the budget itself. The supremum over
/// outputs of the likelihood log-ratio is attained analytically for Laplace
/// noise calibrated to the query sensitivity, whatever the adversary already
/// knows about other cases.
pub fn single_release_leakage(mechanism: &PrivacyMechanismSpec) -> f64 {
    mechanism.epsilon
}

/// Supremum of ln((d . q) / (d' . q)) over q in [1, e^alpha]^k, clamped to
/// [0, alpha]. The objective is linear-fractional, so the optimum sits at a
/// box vertex; sorting indices by the ratio d_j / d'_j and sweeping the k+1
/// prefix splits visits every candidate vertex that can be optimal.
///
/// Returns infinity when d' carries no mass at all (the denominator cannot
/// be bounded away from zero): an unbounded-leakage signal, never clamped.
pub fn accumulate(alpha: f64, d: &[BigRational], d_prime: &[BigRational]) -> f64 {
    assert_eq!(d.len(), d_prime.len(), "vectors must share an index set");
    let live: Vec<(&BigRational, &BigRational)> = d
        .iter()
        .zip(d_prime.iter())
        .filter(|(a, b)| !a.is_zero() || !b.is_zero())
        .collect();
    if live.is_empty() {
        return 0.0;
    }
    let d_total: BigRational = live.iter().map(|(a, _)| (*a).clone()).sum();
    let dp_total: BigRational = live.iter().map(|(_, b)| (*b).clone()).sum();
    if dp_total.is_zero() {
        return f64::INFINITY;
    }
    if d_total.is_zero() || !(alpha > 0.0) {
        return 0.0;
    }
    if d == d_prime {
        return 0.0;
    }
    if live.iter().all(|(a, b)| a.is_zero() || b.is_zero()) {
        // Disjoint supports: q maximal on d's support, minimal elsewhere.
        if d_total == dp_total {
            return alpha;
        }
        let v = alpha + (rat_f64(&d_total) / rat_f64(&dp_total)).ln();
        return v.clamp(0.0, alpha);
    }
    let mut order: Vec<usize> = (0..live.len()).collect();
    // Descending d_j / d'_j by cross-multiplication; d'_j = 0 ranks first.
    order.sort_by(|&i, &j| {
        let (di, dpi) = live[i];
        let (dj, dpj) = live[j];
        (dj * dpi).cmp(&(di * dpj))
    });
    let boost = alpha.exp();
    let mut head_d = BigRational::zero();
    let mut head_dp = BigRational::zero();
    let mut best = 0.0f64;
    for &idx in &order {
        head_d += live[idx].0;
        head_dp += live[idx].1;
        let num = boost * rat_f64(&head_d) + rat_f64(&(&d_total - &head_d));
        let den = boost * rat_f64(&head_dp) + rat_f64(&(&dp_total - &head_dp));
        let v = (num / den).ln();
        if v > best {
            best = v;
        }
    }
    best.clamp(0.0, alpha)
}

fn rat_f64(r: &BigRational) -> f64 {
    r.to_f64().expect("probability fits in f64")
}

/// Align two rows on the union of their supports.
fn merge_rows(a: &CorrelationRow, b: &CorrelationRow) -> (Vec<BigRational>, Vec<BigRational>) {
    let ea = a.entries();
    let eb = b.entries();
    let mut va = Vec::with_capacity(ea.len() + eb.len());
    let mut vb = Vec::with_capacity(ea.len() + eb.len());
    let (mut i, mut j) = (0, 0);
    while i < ea.len() || j < eb.len() {
        let ord = match (ea.get(i), eb.get(j)) {
            (Some((ta, _)), Some((tb, _))) => ta.cmp(tb),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => unreachable!(),
        };
        match ord {
            Ordering::Less => {
                va.push(ea[i].1.clone());
                vb.push(BigRational::zero());
                i += 1;
            }
            Ordering::Greater => {
                va.push(BigRational::zero());
                vb.push(eb[j].1.clone());
                j += 1;
            }
            Ordering::Equal => {
                va.push(ea[i].1.clone());
                vb.push(eb[j].1.clone());
                i += 1;
                j += 1;
            }
        }
    }
    (va, vb)
}

/// Chain controls.
#[derive(Clone, Copy, Debug)]
pub struct ChainOptions {
    /// Ceiling on the accumulation box exponent; prevents e^alpha overflow.
    pub alpha_cap: f64,
    /// If set, only the most probable states participate in the pair sup
    /// (the absent target is always kept). Results become a lower bound.
    pub max_pairs: Option<usize>,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions { alpha_cap: 50.0, max_pairs: None }
    }
}

/// One chain step: leakage after this release plus the evidence pair.
#[derive(Clone, Debug)]
pub struct ChainStep {
    pub release: u32,
    pub leakage: f64,
    pub argmax: Option<(Target, Target)>,
    pub capped: bool,
    pub truncated: bool,
}

struct PairSup {
    value: f64,
    argmax: Option<(Target, Target)>,
    truncated: bool,
}

fn pair_universe<'m>(
    model: &'m CorrelationModel,
    a: &PrefixAutomaton,
    max_pairs: Option<usize>,
) -> (Vec<(Target, &'m CorrelationRow)>, bool) {
    let mut targets: Vec<(Target, &CorrelationRow)> = model
        .states()
        .iter()
        .zip(model.rows())
        .map(|(s, r)| (Target::State(*s), r))
        .collect();
    let mut truncated = false;
    if let Some(cap) = max_pairs {
        let full = targets.len();
        // Largest n with n * (n - 1) <= cap, at least 2 so a pair survives.
        let mut keep = 2usize;
        while keep < full && (keep + 1) * keep <= cap {
            keep += 1;
        }
        if keep < full {
            truncated = true;
            let mut ranked: Vec<usize> = (0..full).collect();
            ranked.sort_by(|&i, &j| {
                let (Target::State(si), Target::State(sj)) = (targets[i].0, targets[j].0)
                else {
                    unreachable!("universe holds states only at this point")
                };
                a.state_probability(sj)
                    .cmp(&a.state_probability(si))
                    .then(i.cmp(&j))
            });
            ranked.truncate(keep);
            ranked.sort_unstable();
            targets = ranked.into_iter().map(|i| targets[i]).collect();
        }
    }
    if let Some(row) = model.absent_row() {
        targets.push((Target::Absent, row));
    }
    (targets, truncated)
}

/// Max of accumulate over ordered pairs of distinct targets, scanned in
/// deterministic order so the first maximizing pair is the evidence. Stops
/// early once the theoretical maximum `alpha` is reached.
fn pair_supremum(
    alpha: f64,
    model: &CorrelationModel,
    a: &PrefixAutomaton,
    max_pairs: Option<usize>,
) -> PairSup {
    let (targets, truncated) = pair_universe(model, a, max_pairs);
    let mut best = 0.0f64;
    let mut argmax = None;
    'scan: for (ti, ri) in &targets {
        for (tj, rj) in &targets {
            if ti == tj || ri == rj {
                continue;
            }
            let (d, dp) = merge_rows(ri, rj);
            let v = accumulate(alpha, &d, &dp);
            if v > best {
                best = v;
                argmax = Some((*ti, *tj));
                if best >= alpha {
                    break 'scan;
                }
            }
        }
    }
    PairSup { value: best, argmax, truncated }
}

fn run_chain(
    model: &CorrelationModel,
    a: &PrefixAutomaton,
    epsilon: f64,
    releases: u32,
    options: ChainOptions,
) -> Vec<ChainStep> {
    let mut steps = Vec::with_capacity(releases as usize);
    let mut prev = 0.0f64;
    for t in 1..=releases {
        if t == 1 {
            prev = epsilon;
            steps.push(ChainStep {
                release: t,
                leakage: epsilon,
                argmax: None,
                capped: false,
                truncated: false,
            });
            continue;
        }
        let capped = prev > options.alpha_cap;
        let alpha = prev.min(options.alpha_cap);
        let sup = pair_supremum(alpha, model, a, options.max_pairs);
        prev = epsilon + sup.value;
        steps.push(ChainStep {
            release: t,
            leakage: prev,
            argmax: sup.argmax,
            capped,
            truncated: sup.truncated,
        });
    }
    steps
}

/// Backward leakage sequence: what releases 1..t reveal about release t's
/// data, per release.
pub fn backward_chain(
    model: &CorrelationModel,
    a: &PrefixAutomaton,
    epsilon: f64,
    releases: u32,
    options: ChainOptions,
) -> Vec<ChainStep> {
    debug_assert!(model.direction() == Direction::Backward);
    run_chain(model, a, epsilon, releases, options)
}

/// Forward leakage sequence: entry t is the leakage of release 1's data once
/// t releases exist, computed by recursing back from the horizon.
pub fn forward_chain(
    model: &CorrelationModel,
    a: &PrefixAutomaton,
    epsilon: f64,
    releases: u32,
    options: ChainOptions,
) -> Vec<ChainStep> {
    debug_assert!(model.direction() == Direction::Forward);
    run_chain(model, a, epsilon, releases, options)
}

/// One ledger row. `pl` is the isolated per-release leakage, `bpl` the
/// backward chain value at this release, `fpl` the forward chain value of
/// release 1 at this horizon, and `tpl = bpl + fpl - pl`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct LedgerRecord {
    pub release: u32,
    pub epsilon: f64,
    pub pl: f64,
    pub bpl: f64,
    pub fpl: f64,
    pub tpl: f64,
    pub argmax_backward_pair: Option<String>,
    pub argmax_forward_pair: Option<String>,
    pub capped: bool,
    pub truncated: bool,
}

/// Per-release leakage table plus evidence.
#[derive(Clone, Debug, Default)]
pub struct LeakageLedger {
    records: Vec<LedgerRecord>,
}

impl LeakageLedger {
    pub fn records(&self) -> &[LedgerRecord] {
        &self.records
    }

    pub fn horizon(&self) -> u32 {
        self.records.len() as u32
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&LedgerRecord> {
        self.records.last()
    }

    /// Stable CSV form, one row per release.
    pub fn to_csv(&self) -> Result<String> {
        if self.records.is_empty() {
            return Err(Error::EmptyLedger);
        }
        let mut out = String::from(
            "release,epsilon,pl,bpl,fpl,tpl,argmax_backward_pair,argmax_forward_pair\n",
        );
        for r in &self.records {
            let quote = |s: &Option<String>| match s {
                Some(p) => format!("\"{}\"", p.replace('"', "\"\"")),
                None => String::new(),
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.release,
                r.epsilon,
                r.pl,
                r.bpl,
                r.fpl,
                r.tpl,
                quote(&r.argmax_backward_pair),
                quote(&r.argmax_forward_pair),
            )
            .expect("string write");
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        if self.records.is_empty() {
            return Err(Error::EmptyLedger);
        }
        Ok(serde_json::json!({
            "horizon": self.horizon(),
            "records": self.records,
        }))
    }
}

fn display_pair(a: &PrefixAutomaton, pair: &(Target, Target)) -> String {
    let one = |t: &Target| match t {
        Target::State(s) => a.display_state(*s),
        Target::Absent => ABSENT_DISPLAY.to_owned(),
    };
    format!("{}|{}", one(&pair.0), one(&pair.1))
}

/// Full leakage table for a fixed automaton observed over `releases`
/// releases under one scenario.
pub fn temporal_leakage(
    a: &PrefixAutomaton,
    scenario: Scenario,
    mechanism: &PrivacyMechanismSpec,
    releases: u32,
    options: ChainOptions,
) -> Result<LeakageLedger> {
    if releases == 0 {
        return Err(Error::Config("need at least one release".into()));
    }
    let epsilon = mechanism.epsilon();
    let backward = CorrelationModel::build(a, scenario, Direction::Backward)?;
    let forward = CorrelationModel::build(a, scenario, Direction::Forward)?;
    let b = backward_chain(&backward, a, epsilon, releases, options);
    let f = forward_chain(&forward, a, epsilon, releases, options);
    let records = b
        .iter()
        .zip(&f)
        .map(|(bs, fs)| LedgerRecord {
            release: bs.release,
            epsilon,
            pl: epsilon,
            bpl: bs.leakage,
            fpl: fs.leakage,
            tpl: bs.leakage + fs.leakage - epsilon,
            argmax_backward_pair: bs.argmax.as_ref().map(|p| display_pair(a, p)),
            argmax_forward_pair: fs.argmax.as_ref().map(|p| display_pair(a, p)),
            capped: bs.capped || fs.capped,
            truncated: bs.truncated || fs.truncated,
        })
        .collect();
    Ok(LeakageLedger { records })
}

/// Online leakage assessment as cumulative logs arrive release by release.
/// Each update extends the automaton, rebuilds both correlation models from
/// it (the adversary knows everything published so far), reruns both chains
/// at the new horizon, and appends one ledger record.
pub struct LeakageTracker {
    scenario: Scenario,
    mechanism: PrivacyMechanismSpec,
    options: ChainOptions,
    automaton: Option<PrefixAutomaton>,
    ledger: LeakageLedger,
}

impl LeakageTracker {
    pub fn new(
        scenario: Scenario,
        mechanism: PrivacyMechanismSpec,
        options: ChainOptions,
    ) -> Self {
        LeakageTracker {
            scenario,
            mechanism,
            options,
            automaton: None,
            ledger: LeakageLedger::default(),
        }
    }

    pub fn automaton(&self) -> Option<&PrefixAutomaton> {
        self.automaton.as_ref()
    }

    pub fn ledger(&self) -> &LeakageLedger {
        &self.ledger
    }

    pub fn horizon(&self) -> u32 {
        self.ledger.horizon()
    }

    /// Feed the cumulative log as of the next release.
    pub fn update_horizon(&mut self, cumulative: &crate::event_log::EventLog) -> Result<&LedgerRecord> {
        self.automaton = Some(match &self.automaton {
            None => PrefixAutomaton::build(cumulative)?,
            Some(a) => a.extend(cumulative)?,
        });
        let a = self.automaton.as_ref().expect("just built");
        let horizon = self.ledger.horizon() + 1;
        let table = temporal_leakage(a, self.scenario, &self.mechanism, horizon, self.options)?;
        let record = table.records().last().expect("horizon >= 1").clone();
        self.ledger.records.push(record);
        Ok(self.ledger.records.last().expect("just pushed"))
    }
}
