//! Load an event log from CSV and XES, canonicalize it, and inspect the
//! trace variants.
//!
//! Run with: cargo run --example parse_and_inspect

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use tplq::{lifecycle_complete_cases, parse_csv, parse_xes, Result};

fn main() -> Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");

    // CSV carries no completeness marker, so the caller decides which cases
    // already reached their final activity.
    let csv = File::open(dir.join("l1.csv")).map_err(|e| tplq::Error::io(dir.join("l1.csv"), e))?;
    let raw = parse_csv(csv, &Default::default())?;
    println!(
        "l1.csv: {} cases, {} events, alphabet {:?}",
        raw.num_cases(),
        raw.real_event_count(),
        raw.activity_alphabet()
    );

    let complete = ["c1", "c2"].into_iter().map(Into::into).collect();
    let log = raw.canonicalize(&complete)?;
    println!("\ncanonical traces (start/end labels added):");
    for trace in log.traces() {
        let status = if trace.is_complete() { "complete" } else { "partial" };
        println!("  {:<4} {:<8} {}", trace.case_id(), status, trace.variant().join(" "));
    }

    println!("\nvariant counts:");
    for (variant, count) in log.variant_multiset()?.entries() {
        println!("  {:>3}  {}", count, variant.join(" "));
    }

    // XES files mark completeness through the lifecycle extension, so the
    // same split can be recovered without prior knowledge.
    let path = dir.join("l1.xes");
    let xes = parse_xes(BufReader::new(
        File::open(&path).map_err(|e| tplq::Error::io(&path, e))?,
    ))?;
    let lifecycle = lifecycle_complete_cases(BufReader::new(
        File::open(&path).map_err(|e| tplq::Error::io(&path, e))?,
    ))?;
    println!(
        "\nl1.xes: {} cases, lifecycle-complete cases: {:?}",
        xes.num_cases(),
        lifecycle.iter().map(|c| c.as_str()).collect::<Vec<_>>()
    );
    Ok(())
}
