//! Full-history prefix automaton over canonical traces.
//!
//! States are trace prefixes; the automaton is a tree rooted at the empty
//! prefix. Each case contributes one count to every transition along its
//! prefix path, so a transition's frequency is the number of cases whose
//! trace passes through it. State and transition probabilities are exact
//! rationals; nothing is rounded here.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::event_log::{CaseId, EventLog, END_LABEL};

/// Handle to a state. Only meaningful for the automaton that produced it.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct StateId(u32);

impl StateId {
    pub(crate) fn index(self) -> usize {
        self.0 as usize
    }
}

const ROOT: StateId = StateId(0);

#[derive(Clone, Debug)]
struct Node {
    parent: Option<StateId>,
    /// Label of the transition from the parent; `None` only for the root.
    label: Option<String>,
    depth: u32,
    /// Number of cases entering this state (frequency of the incoming transition).
    incoming: u64,
    /// Sum of the incoming frequencies of all children.
    outgoing: u64,
    children: BTreeMap<String, StateId>,
}

impl Node {
    fn new(parent: Option<StateId>, label: Option<String>, depth: u32) -> Self {
        Node { parent, label, depth, incoming: 0, outgoing: 0, children: BTreeMap::new() }
    }
}

/// Prefix automaton built from a canonical event log.
#[derive(Clone, Debug)]
pub struct PrefixAutomaton {
    nodes: Vec<Node>,
    case_count: u64,
    /// Frontier state of every case seen so far, for incremental extension.
    case_states: BTreeMap<CaseId, StateId>,
}

impl PrefixAutomaton {
    /// Builds the automaton of `log`. The log must be canonical.
    pub fn build(log: &EventLog) -> Result<Self> {
        if !log.is_canonical() {
            return Err(Error::NotCanonical);
        }
        let mut a = PrefixAutomaton {
            nodes: vec![Node::new(None, None, 0)],
            case_count: 0,
            case_states: BTreeMap::new(),
        };
        for trace in log.traces() {
            let frontier = a.insert_path(ROOT, &trace.activities());
            a.case_states.insert(trace.case_id().clone(), frontier);
            a.case_count += 1;
        }
        Ok(a)
    }

    /// Extends the automaton with a newer cumulative snapshot of the same
    /// stream. Per case, only the suffix beyond the previously recorded
    /// prefix adds counts; brand-new cases add their full path. The result
    /// equals `build(newer)` exactly.
    pub fn extend(&self, newer: &EventLog) -> Result<Self> {
        if !newer.is_canonical() {
            return Err(Error::NotCanonical);
        }
        for case in self.case_states.keys() {
            if newer.trace(case).is_none() {
                return Err(Error::Incrementality {
                    case: case.to_string(),
                    message: "case missing from newer snapshot".to_owned(),
                });
            }
        }
        let mut a = self.clone();
        for trace in newer.traces() {
            let acts = trace.activities();
            match a.case_states.get(trace.case_id()).copied() {
                None => {
                    let frontier = a.insert_path(ROOT, &acts);
                    a.case_states.insert(trace.case_id().clone(), frontier);
                    a.case_count += 1;
                }
                Some(recorded) => {
                    let prefix_len = a.nodes[recorded.index()].depth as usize;
                    if acts.len() < prefix_len {
                        return Err(Error::Incrementality {
                            case: trace.case_id().to_string(),
                            message: "trace shrank".to_owned(),
                        });
                    }
                    let mut at = ROOT;
                    for act in &acts[..prefix_len] {
                        match a.nodes[at.index()].children.get(*act) {
                            Some(&next) => at = next,
                            None => {
                                return Err(Error::Incrementality {
                                    case: trace.case_id().to_string(),
                                    message: "recorded prefix is not a prefix of the new trace"
                                        .to_owned(),
                                })
                            }
                        }
                    }
                    if at != recorded {
                        return Err(Error::Incrementality {
                            case: trace.case_id().to_string(),
                            message: "recorded prefix is not a prefix of the new trace".to_owned(),
                        });
                    }
                    let frontier = a.insert_path(recorded, &acts[prefix_len..]);
                    a.case_states.insert(trace.case_id().clone(), frontier);
                }
            }
        }
        Ok(a)
    }

    fn insert_path(&mut self, from: StateId, suffix: &[&str]) -> StateId {
        let mut at = from;
        for act in suffix {
            let next = match self.nodes[at.index()].children.get(*act) {
                Some(&id) => id,
                None => {
                    let id = StateId(self.nodes.len() as u32);
                    let depth = self.nodes[at.index()].depth + 1;
                    self.nodes.push(Node::new(Some(at), Some((*act).to_owned()), depth));
                    self.nodes[at.index()].children.insert((*act).to_owned(), id);
                    id
                }
            };
            self.nodes[at.index()].outgoing += 1;
            self.nodes[next.index()].incoming += 1;
            at = next;
        }
        at
    }

    pub fn case_count(&self) -> u64 {
        self.case_count
    }

    /// Number of states. An automaton built from an empty log has none.
    pub fn num_states(&self) -> usize {
        if self.case_count == 0 {
            0
        } else {
            self.nodes.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.case_count == 0
    }

    /// The empty-prefix start state, absent only on an empty automaton.
    pub fn root(&self) -> Option<StateId> {
        if self.is_empty() {
            None
        } else {
            Some(ROOT)
        }
    }

    /// Looks a state up by its full prefix.
    pub fn state_of_prefix(&self, prefix: &[&str]) -> Option<StateId> {
        if self.is_empty() {
            return None;
        }
        let mut at = ROOT;
        for act in prefix {
            at = *self.nodes[at.index()].children.get(*act)?;
        }
        Some(at)
    }

    /// Full prefix of a state, from the root down.
    pub fn prefix_of(&self, s: StateId) -> Vec<&str> {
        let mut rev = Vec::with_capacity(self.nodes[s.index()].depth as usize);
        let mut at = s;
        while let Some(label) = self.nodes[at.index()].label.as_deref() {
            rev.push(label);
            at = self.nodes[at.index()].parent.expect("labeled node has a parent");
        }
        rev.reverse();
        rev
    }

    /// Human-readable prefix, `⟨▶,a,b⟩` style.
    pub fn display_state(&self, s: StateId) -> String {
        format!("\u{27E8}{}\u{27E9}", self.prefix_of(s).join(","))
    }

    pub fn depth(&self, s: StateId) -> u32 {
        self.nodes[s.index()].depth
    }

    pub fn parent(&self, s: StateId) -> Option<StateId> {
        self.nodes[s.index()].parent
    }

    /// Ancestor exactly `distance` edges above `s`, if the prefix is long enough.
    pub fn ancestor_at(&self, s: StateId, distance: u32) -> Option<StateId> {
        let mut at = s;
        for _ in 0..distance {
            at = self.nodes[at.index()].parent?;
        }
        Some(at)
    }

    pub fn children(&self, s: StateId) -> impl Iterator<Item = (&str, StateId)> {
        self.nodes[s.index()].children.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Frequency of the case flow into `s`.
    pub fn incoming_frequency(&self, s: StateId) -> u64 {
        self.nodes[s.index()].incoming
    }

    /// Total frequency of transitions out of `s`. Less than the incoming
    /// frequency when cases halt at this prefix.
    pub fn outgoing_frequency(&self, s: StateId) -> u64 {
        self.nodes[s.index()].outgoing
    }

    /// A state is an end state when its prefix ends with the end label.
    pub fn is_end(&self, s: StateId) -> bool {
        self.nodes[s.index()].label.as_deref() == Some(END_LABEL)
    }

    /// Pr(s): fraction of cases whose trace passes through this prefix.
    /// The empty start prefix has probability 1.
    pub fn state_probability(&self, s: StateId) -> BigRational {
        if s == ROOT {
            return BigRational::from_integer(BigInt::from(1));
        }
        ratio(self.nodes[s.index()].incoming, self.case_count)
    }

    /// Pr(s2 | s1) for a single step. End states absorb: the probability of
    /// staying put is 1. A non-end state with no outgoing transitions has no
    /// defined successor distribution at this granularity.
    pub fn adjacent_probability(&self, s1: StateId, s2: StateId) -> Result<BigRational> {
        let n1 = &self.nodes[s1.index()];
        if n1.outgoing == 0 {
            if self.is_end(s1) {
                let p = if s1 == s2 { 1 } else { 0 };
                return Ok(BigRational::from_integer(BigInt::from(p)));
            }
            return Err(Error::UndefinedSuccessor);
        }
        let freq = if self.nodes[s2.index()].parent == Some(s1) {
            self.nodes[s2.index()].incoming
        } else {
            0
        };
        Ok(ratio(freq, n1.outgoing))
    }

    /// All states in deterministic prefix-lexicographic (pre-)order.
    pub fn states_prefix_order(&self) -> Vec<StateId> {
        if self.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![ROOT];
        while let Some(s) = stack.pop() {
            out.push(s);
            // Reverse so the lexicographically first child is visited first.
            for (_, child) in self.nodes[s.index()].children.iter().rev() {
                stack.push(*child);
            }
        }
        out
    }

    /// Distance to the farthest descendant of every state, indexed by state.
    pub fn forward_depths(&self) -> Vec<u32> {
        let mut fd = vec![0u32; self.nodes.len()];
        // Children always have larger indices than their parents, so a
        // reverse index scan is a valid post-order.
        for i in (0..self.nodes.len()).rev() {
            for (_, child) in &self.nodes[i].children {
                fd[i] = fd[i].max(fd[child.index()] + 1);
            }
        }
        fd
    }

    /// GraphViz rendering with state probabilities and transition frequencies.
    pub fn to_dot(&self) -> String {
        use std::fmt::Write;
        let mut out = String::from("digraph prefix_automaton {\n  rankdir=LR;\n  node [shape=circle];\n");
        if !self.is_empty() {
            for s in self.states_prefix_order() {
                let n = &self.nodes[s.index()];
                let label = n.label.as_deref().unwrap_or("\u{27E8}\u{27E9}");
                let p = self.state_probability(s);
                let shape = if self.is_end(s) { " shape=doublecircle" } else { "" };
                let _ = writeln!(
                    out,
                    "  s{} [label=\"{}\\n{}/{}\"{}];",
                    s.0,
                    escape_dot(label),
                    p.numer(),
                    p.denom(),
                    shape
                );
                for (act, child) in &n.children {
                    let _ = writeln!(
                        out,
                        "  s{} -> s{} [label=\"{} ({})\"];",
                        s.0,
                        child.0,
                        escape_dot(act),
                        self.nodes[child.index()].incoming
                    );
                }
            }
        }
        out.push_str("}\n");
        out
    }

    /// Case frontier map: where each known case currently sits.
    pub fn case_states(&self) -> &BTreeMap<CaseId, StateId> {
        &self.case_states
    }
}

/// Extensional equality: same tree (labels, frequencies), same case count and
/// same case frontiers, regardless of internal state numbering.
impl PartialEq for PrefixAutomaton {
    fn eq(&self, other: &Self) -> bool {
        if self.case_count != other.case_count {
            return false;
        }
        if self.case_count == 0 {
            return true;
        }
        let mut stack = vec![(ROOT, ROOT)];
        while let Some((a, b)) = stack.pop() {
            let na = &self.nodes[a.index()];
            let nb = &other.nodes[b.index()];
            if na.incoming != nb.incoming
                || na.outgoing != nb.outgoing
                || na.children.len() != nb.children.len()
            {
                return false;
            }
            for ((la, ca), (lb, cb)) in na.children.iter().zip(nb.children.iter()) {
                if la != lb {
                    return false;
                }
                stack.push((*ca, *cb));
            }
        }
        if self.case_states.len() != other.case_states.len() {
            return false;
        }
        self.case_states.iter().zip(other.case_states.iter()).all(|((ca, sa), (cb, sb))| {
            ca == cb && self.prefix_of(*sa) == other.prefix_of(*sb)
        })
    }
}

impl Eq for PrefixAutomaton {}

fn escape_dot(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub(crate) fn ratio(numer: u64, denom: u64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}
