//! Option price and premium curves for three noise levels, as CSV on stdout.

use privmarket::pricing::CostSchedule;
use privmarket::simulator::{default_k_hat_grid, sweep, write_sweep_csv, DEFAULT_SWEEP_LAMBDAS};

fn main() -> privmarket::Result<()> {
    let costs = CostSchedule::new(10.0, 1.0, 2.0)?;
    let rows = sweep(&default_k_hat_grid(100), &DEFAULT_SWEEP_LAMBDAS, 1.0, 100, Some(&costs))?;
    write_sweep_csv(&rows, true, std::io::stdout().lock())?;
    Ok(())
}
