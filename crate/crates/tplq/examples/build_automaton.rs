//! Build the full-history prefix automaton of a log, walk its states, and
//! export it as Graphviz DOT.
//!
//! Run with: cargo run --example build_automaton

use tplq::synth::toy_branching_log;
use tplq::{PrefixAutomaton, Result};

fn main() -> Result<()> {
    let log = toy_branching_log();
    let automaton = PrefixAutomaton::build(&log)?;
    println!(
        "{} states over {} cases\n",
        automaton.num_states(),
        automaton.case_count()
    );

    // States are identified by the activity prefix that reaches them. The
    // state probability is the share of cases whose trace passes through.
    println!("{:<22} {:>6} {:>9} {:>5}", "state", "depth", "Pr", "end");
    for state in automaton.states_prefix_order() {
        println!(
            "{:<22} {:>6} {:>9} {:>5}",
            automaton.display_state(state),
            automaton.depth(state),
            automaton.state_probability(state).to_string(),
            if automaton.is_end(state) { "yes" } else { "" }
        );
    }

    // Transition probabilities condition on leaving the source state.
    let root = automaton.root().expect("log is non-empty");
    let start = automaton
        .children(root)
        .next()
        .expect("root has the start transition")
        .1;
    println!("\ntransitions out of {}:", automaton.display_state(start));
    for (activity, child) in automaton.children(start) {
        println!(
            "  --{activity}--> {}  (Pr {})",
            automaton.display_state(child),
            automaton.adjacent_probability(start, child)?
        );
    }

    println!("\nDOT output:\n{}", automaton.to_dot());
    Ok(())
}
