//! Run a scenario file and print its summary.
//!
//! ```bash
//! cargo run --release --example scenario_run -- crates/core/data/forward.json
//! ```

use privmarket::simulator::Scenario;

fn main() -> privmarket::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/posterior.json").into());
    let scenario = Scenario::from_json(&std::fs::read_to_string(&path)?)?;
    let sim = scenario.prepare()?;
    if let Some(k_hat) = sim.declared_k_hat() {
        println!("declared k_hat={k_hat}");
    }
    let run = sim.run()?;
    run.summary.write_key_values(std::io::stdout().lock(), Some(6))?;
    Ok(())
}
