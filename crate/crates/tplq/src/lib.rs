//! Quantifies how much extra privacy loss temporal correlations cause when a
//! process event log is released repeatedly under differential privacy.
//!
//! The pipeline: parse an event log (CSV or XES), build a prefix automaton
//! over trace prefixes, derive forward and backward temporal correlation
//! models for a publishing scenario, then accumulate backward and forward
//! privacy leakage across releases by solving a linear-fractional program per
//! ordered state pair. A release simulator and a Laplace perturbation step
//! let the whole continuous-publishing setting run end to end.
//!
//! All probabilities are exact rationals; leakage values are the only floats,
//! produced at the last step. Every stage iterates in a deterministic order,
//! so equal inputs and seeds give byte-identical outputs.

pub mod automaton;
pub mod correlation;
pub mod error;
pub mod event_log;
pub mod leakage;
pub mod pipeline;
pub mod simulate;
pub mod synth;

pub use automaton::{PrefixAutomaton, StateId};
pub use correlation::{
    backward_correlations, forward_correlations, CorrelationModel, CorrelationRow, Direction,
    ModelOptions, Scenario, ScenarioKind, Target, WindowWalkBounds,
};
pub use error::{Error, Result};
pub use event_log::{
    lifecycle_complete_cases, parse_csv, parse_xes, write_csv, CaseId, CsvColumns, Event,
    EventLog, Timestamp, Trace, VariantMultiset, END_LABEL, START_LABEL,
};
pub use leakage::{
    accumulate, backward_chain, forward_chain, single_release_leakage, temporal_leakage,
    ChainOptions, LeakageLedger, LeakageTracker, LedgerRecord, PrivacyMechanismSpec,
};
pub use pipeline::{emit_chart, run_pipeline, run_window_sweep, EmitFlags, LogFormat, RunConfig};
pub use simulate::{
    generate_release, laplace_noise, laplace_perturb, split_log, NoisyVariant, NoisyVariants,
    ReleasePlan, Reservoir, SplitConfig,
};
