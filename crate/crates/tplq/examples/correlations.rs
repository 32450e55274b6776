//! Compute forward and backward temporal correlations for one state under
//! both publishing scenarios.
//!
//! Run with: cargo run --example correlations

use tplq::synth::toy_branching_log;
use tplq::{
    backward_correlations, forward_correlations, CorrelationModel, CorrelationRow, Direction,
    PrefixAutomaton, Result, Scenario, Target, START_LABEL,
};

fn show(automaton: &PrefixAutomaton, label: &str, row: &CorrelationRow) {
    println!("  {label}:");
    for (target, p) in row.entries() {
        let name = match target {
            Target::State(s) => automaton.display_state(*s),
            Target::Absent => "\u{22A5} (not yet started)".to_owned(),
        };
        println!("    {p:>6}  {name}");
    }
}

fn main() -> Result<()> {
    let log = toy_branching_log();
    let automaton = PrefixAutomaton::build(&log)?;
    let state = automaton
        .state_of_prefix(&[START_LABEL, "a"])
        .expect("prefix occurs in the log");

    // Under the certain scenario every partial trace gains exactly `window`
    // events per release, so the adversary conditions on that distance. The
    // uncertain scenario averages over distances 0..=window.
    println!("forward correlations from {} with window 2", automaton.display_state(state));
    show(&automaton, "certain  S1", &forward_correlations(&automaton, Scenario::certain(2), state)?);
    show(&automaton, "uncertain S2", &forward_correlations(&automaton, Scenario::uncertain(2), state)?);

    let deep = automaton
        .state_of_prefix(&[START_LABEL, "a", "b", "c"])
        .expect("prefix occurs in the log");
    println!("\nbackward correlations from {} with window 2", automaton.display_state(deep));
    show(&automaton, "certain  S1", &backward_correlations(&automaton, Scenario::certain(2), deep)?);
    show(&automaton, "uncertain S2", &backward_correlations(&automaton, Scenario::uncertain(2), deep)?);

    // A model bundles one row per state; this is what the leakage chains
    // consume. Rows are exact rationals and always sum to one.
    let model = CorrelationModel::build(&automaton, Scenario::uncertain(2), Direction::Backward)?;
    println!(
        "\nbackward S2 model: {} rows, serialized:\n{}",
        model.rows().len(),
        serde_json::to_string_pretty(&model.to_json(&automaton))?
    );
    Ok(())
}
