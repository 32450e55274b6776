//! Temporal correlation model: where a case can be `window` automaton steps
//! into the future (forward) or where it was one release earlier (backward).
//!
//! Two publishing scenarios are covered. Under the certain scenario every
//! running case moves exactly `window` steps per release; under the uncertain
//! scenario it moves between 0 and `window` steps. Rows are exact rational
//! probability distributions over states, plus a distinguished absent target
//! for "the case had not started yet". A previous state with no events is
//! observationally identical to an absent case, so the empty prefix is folded
//! into the absent target on the backward side.
//!
//! Multi-step walks absorb at states without outgoing transitions: a case
//! whose known history ends there has nowhere else to be placed. This keeps
//! every row an exact probability distribution.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::automaton::{PrefixAutomaton, StateId};
use crate::error::{Error, Result};

/// Publishing scenario kind.
#[derive(Clone, Copy, PartialEq, Eq, Debug, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    /// Exactly `window` new events per running case per release.
    Certain,
    /// Uniformly 0 to `window` new events per running case per release.
    Uncertain,
}

/// Scenario kind plus window size (events per release per case).
#[derive(Clone, Copy, PartialEq, Eq, Debug, serde::Serialize, serde::Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub window: u32,
}

impl Scenario {
    pub fn certain(window: u32) -> Self {
        Scenario { kind: ScenarioKind::Certain, window }
    }

    pub fn uncertain(window: u32) -> Self {
        Scenario { kind: ScenarioKind::Uncertain, window }
    }

    fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::Config("scenario window must be at least 1".into()));
        }
        Ok(())
    }
}

/// Correlation direction.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Direction {
    Forward,
    Backward,
}

/// Row target: a concrete state, or the absent marker for a case with no
/// recorded events (not yet started).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Target {
    State(StateId),
    Absent,
}

/// One probability distribution, sorted by target, zero entries dropped.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CorrelationRow {
    entries: Vec<(Target, BigRational)>,
}

impl CorrelationRow {
    fn from_map(map: BTreeMap<Target, BigRational>) -> Self {
        let entries: Vec<_> = map.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        debug_assert!(
            entries.iter().map(|(_, p)| p).sum::<BigRational>().is_one(),
            "correlation row must sum to 1"
        );
        CorrelationRow { entries }
    }

    fn point(target: Target) -> Self {
        CorrelationRow { entries: vec![(target, BigRational::one())] }
    }

    pub fn entries(&self) -> &[(Target, BigRational)] {
        &self.entries
    }

    pub fn probability(&self, target: Target) -> BigRational {
        self.entries
            .iter()
            .find(|(t, _)| *t == target)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(BigRational::zero)
    }

    pub fn sum(&self) -> BigRational {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn is_point_mass(&self) -> bool {
        self.entries.len() == 1
    }
}

/// Walk distances available to a state under a window.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct WindowWalkBounds {
    /// Distance to the farthest descendant.
    pub forward_depth: u32,
    /// Distance to the farthest ancestor, i.e. the state's depth.
    pub backward_depth: u32,
    /// min(window, forward_depth): maximal forward move.
    pub forward_move: u32,
    /// min(window, backward_depth): maximal backward move.
    pub backward_move: u32,
}

impl WindowWalkBounds {
    pub fn compute(automaton: &PrefixAutomaton, state: StateId, window: u32) -> Self {
        let fd = local_forward_depth(automaton, state);
        let bd = automaton.depth(state);
        WindowWalkBounds {
            forward_depth: fd,
            backward_depth: bd,
            forward_move: window.min(fd),
            backward_move: window.min(bd),
        }
    }
}

fn local_forward_depth(a: &PrefixAutomaton, s: StateId) -> u32 {
    let mut best = 0;
    let mut stack = vec![(s, 0u32)];
    while let Some((at, d)) = stack.pop() {
        best = best.max(d);
        for (_, child) in a.children(at) {
            stack.push((child, d + 1));
        }
    }
    best
}

/// One multi-step walk layer: state to probability mass.
type Mass = BTreeMap<StateId, BigRational>;

fn step_forward(a: &PrefixAutomaton, layer: &Mass) -> Mass {
    let mut next = Mass::new();
    for (&s, p) in layer {
        let out = a.outgoing_frequency(s);
        if out == 0 {
            // Absorb: no recorded continuation, the mass stays here.
            *next.entry(s).or_insert_with(BigRational::zero) += p.clone();
        } else {
            let denom = BigRational::from_integer(BigInt::from(out));
            for (_, child) in a.children(s) {
                let freq = BigRational::from_integer(BigInt::from(a.incoming_frequency(child)));
                *next.entry(child).or_insert_with(BigRational::zero) +=
                    p * &freq / denom.clone();
            }
        }
    }
    next
}

/// Forward temporal correlation row of `state`: distribution over the states
/// the case can occupy `window` releases... one release ahead.
pub fn forward_correlations(
    a: &PrefixAutomaton,
    scenario: Scenario,
    state: StateId,
) -> Result<CorrelationRow> {
    scenario.validate()?;
    let fd = local_forward_depth(a, state);
    Ok(forward_row(a, scenario, state, fd))
}

fn forward_row(a: &PrefixAutomaton, scenario: Scenario, state: StateId, fd: u32) -> CorrelationRow {
    let x = scenario.window;
    let mut layer: Mass = [(state, BigRational::one())].into_iter().collect();
    match scenario.kind {
        ScenarioKind::Certain => {
            for _ in 0..x {
                layer = step_forward(a, &layer);
            }
            CorrelationRow::from_map(
                layer.into_iter().map(|(s, p)| (Target::State(s), p)).collect(),
            )
        }
        ScenarioKind::Uncertain => {
            let fm = x.min(fd);
            let mut acc: Mass = layer.clone();
            for _ in 0..fm {
                layer = step_forward(a, &layer);
                for (s, p) in &layer {
                    *acc.entry(*s).or_insert_with(BigRational::zero) += p.clone();
                }
            }
            let denom = BigRational::from_integer(BigInt::from(fm as i64 + 1));
            CorrelationRow::from_map(
                acc.into_iter().map(|(s, p)| (Target::State(s), p / denom.clone())).collect(),
            )
        }
    }
}

/// Backward temporal correlation row of `state`: distribution over where the
/// case was one release earlier. The empty prefix is reported as absent.
pub fn backward_correlations(
    a: &PrefixAutomaton,
    scenario: Scenario,
    state: StateId,
) -> Result<CorrelationRow> {
    scenario.validate()?;
    Ok(backward_row(a, scenario, state))
}

fn backward_target(a: &PrefixAutomaton, s: StateId) -> Target {
    if a.depth(s) == 0 {
        Target::Absent
    } else {
        Target::State(s)
    }
}

fn backward_row(a: &PrefixAutomaton, scenario: Scenario, state: StateId) -> CorrelationRow {
    let x = scenario.window;
    let depth = a.depth(state);
    match scenario.kind {
        ScenarioKind::Certain => match a.ancestor_at(state, x) {
            Some(anc) => CorrelationRow::point(backward_target(a, anc)),
            None => CorrelationRow::point(Target::Absent),
        },
        ScenarioKind::Uncertain => {
            let bm = x.min(depth);
            let mut map: BTreeMap<Target, BigRational> = BTreeMap::new();
            let share = BigRational::new(BigInt::one(), BigInt::from(bm as i64 + 1));
            *map.entry(backward_target(a, state)).or_insert_with(BigRational::zero) +=
                share.clone();
            let p_state = a.state_probability(state);
            let mut anc = state;
            let mut path_product = BigRational::one();
            for _ in 0..bm {
                let child = anc;
                anc = a.parent(anc).expect("backward move bounded by depth");
                let out = BigRational::from_integer(BigInt::from(a.outgoing_frequency(anc)));
                let freq =
                    BigRational::from_integer(BigInt::from(a.incoming_frequency(child)));
                path_product *= freq / out;
                let bayes = a.state_probability(anc) * &path_product / &p_state;
                *map.entry(backward_target(a, anc)).or_insert_with(BigRational::zero) +=
                    &share * bayes;
            }
            // Halting interior states can push the raw sum above 1; rescale.
            let total: BigRational = map.values().sum();
            debug_assert!(!total.is_zero());
            CorrelationRow::from_map(map.into_iter().map(|(t, p)| (t, p / &total)).collect())
        }
    }
}

/// All correlation rows of one automaton under one scenario and direction.
#[derive(Clone, Debug)]
pub struct CorrelationModel {
    direction: Direction,
    scenario: Scenario,
    states: Vec<StateId>,
    rows: Vec<CorrelationRow>,
    absent_row: Option<CorrelationRow>,
}

/// Knobs for model construction.
#[derive(Clone, Copy, Debug)]
pub struct ModelOptions {
    /// States carried by fewer cases than this are left out of the model
    /// (and with it the leakage pair universe). 1 keeps everything.
    pub min_case_support: u64,
}

impl Default for ModelOptions {
    fn default() -> Self {
        ModelOptions { min_case_support: 1 }
    }
}

impl CorrelationModel {
    pub fn build(a: &PrefixAutomaton, scenario: Scenario, direction: Direction) -> Result<Self> {
        Self::build_with(a, scenario, direction, ModelOptions::default())
    }

    pub fn build_with(
        a: &PrefixAutomaton,
        scenario: Scenario,
        direction: Direction,
        options: ModelOptions,
    ) -> Result<Self> {
        scenario.validate()?;
        let fd = if direction == Direction::Forward { a.forward_depths() } else { Vec::new() };
        let mut states = Vec::new();
        let mut rows = Vec::new();
        for s in a.states_prefix_order() {
            let support =
                if a.depth(s) == 0 { a.case_count() } else { a.incoming_frequency(s) };
            if support < options.min_case_support {
                continue;
            }
            let row = match direction {
                Direction::Forward => forward_row(a, scenario, s, fd[s.index()]),
                Direction::Backward => backward_row(a, scenario, s),
            };
            states.push(s);
            rows.push(row);
        }
        let absent_row = match direction {
            Direction::Backward => Some(CorrelationRow::point(Target::Absent)),
            Direction::Forward => None,
        };
        Ok(CorrelationModel { direction, scenario, states, rows, absent_row })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    /// States with rows, in deterministic prefix order.
    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn rows(&self) -> &[CorrelationRow] {
        &self.rows
    }

    pub fn row_of(&self, state: StateId) -> Option<&CorrelationRow> {
        self.states.iter().position(|s| *s == state).map(|i| &self.rows[i])
    }

    /// Backward models carry a row for the absent marker: a case that has
    /// not started was also absent one release earlier.
    pub fn absent_row(&self) -> Option<&CorrelationRow> {
        self.absent_row.as_ref()
    }

    /// Debug dump with prefixes spelled out and exact probabilities.
    pub fn to_json(&self, a: &PrefixAutomaton) -> serde_json::Value {
        let target_json = |t: &Target| match t {
            Target::State(s) => serde_json::Value::String(a.display_state(*s)),
            Target::Absent => serde_json::Value::String("\u{22A5}".to_owned()),
        };
        let row_json = |row: &CorrelationRow| {
            serde_json::Value::Array(
                row.entries
                    .iter()
                    .map(|(t, p)| {
                        serde_json::json!({
                            "target": target_json(t),
                            "p": format!("{}/{}", p.numer(), p.denom()),
                        })
                    })
                    .collect(),
            )
        };
        let mut rows = Vec::new();
        for (s, row) in self.states.iter().zip(&self.rows) {
            rows.push(serde_json::json!({
                "state": a.display_state(*s),
                "row": row_json(row),
            }));
        }
        if let Some(r) = &self.absent_row {
            rows.push(serde_json::json!({ "state": "\u{22A5}", "row": row_json(r) }));
        }
        serde_json::json!({
            "direction": match self.direction {
                Direction::Forward => "forward",
                Direction::Backward => "backward",
            },
            "scenario": self.scenario,
            "rows": rows,
        })
    }
}
