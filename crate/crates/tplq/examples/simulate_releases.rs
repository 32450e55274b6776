//! Split a log into an initial part and a reservoir, then stream cumulative
//! releases under the uncertain scenario with Laplace-noised variant counts.
//!
//! Run with: cargo run --example simulate_releases

use tplq::synth::deep_two_variant_log;
use tplq::{
    generate_release, laplace_perturb, split_log, PrivacyMechanismSpec, ReleasePlan, Result,
    Scenario, SplitConfig,
};

fn main() -> Result<()> {
    let source = deep_two_variant_log();
    println!(
        "source: {} events, {} cases",
        source.real_event_count(),
        source.num_cases()
    );

    // The first 50% of events (in timestamp order) form release 1; the rest
    // arrive through the simulator.
    let (initial, mut reservoir) = split_log(&source, &SplitConfig { fraction: 0.5 })?;
    let plan = ReleasePlan {
        scenario: Scenario::uncertain(3),
        epsilon: 0.1,
        max_releases: 6,
        seed: 11,
    };
    let mechanism = PrivacyMechanismSpec::laplace(plan.epsilon)?;

    let mut current = initial;
    loop {
        let counts = current.variant_multiset()?;
        let noisy = laplace_perturb(&counts, &mechanism, plan.seed ^ current.release_index() as u64);
        println!(
            "\nrelease {}: {} events published, {} pending",
            current.release_index(),
            current.real_event_count(),
            reservoir.pending_events()
        );
        for entry in &noisy.entries {
            println!(
                "  true {:>2}  noisy {:>2}  {}",
                entry.true_count,
                entry.rounded,
                entry.variant.join(" ")
            );
        }
        match generate_release(&mut reservoir, &plan)? {
            Some(next) => current = next,
            None => {
                println!("\nreservoir exhausted");
                break;
            }
        }
        if current.release_index() > plan.max_releases {
            break;
        }
    }
    Ok(())
}
