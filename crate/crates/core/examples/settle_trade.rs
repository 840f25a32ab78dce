//! Settle one trade at each delivery regime: shortfall, exact, excess.

use privmarket::pricing::{min_price_deterministic, CostSchedule};
use privmarket::settlement::{settle, PriceSchedule, TradeOutcome, FLOW_CSV_HEADER};

fn main() -> privmarket::Result<()> {
    let costs = CostSchedule::new(10.0, 1.0, 2.0)?;
    let prices = PriceSchedule::new(5.0, 1.2)?;
    println!("{FLOW_CSV_HEADER},min_p_s");
    for k in [0, 95, 100, 120] {
        let flows = settle(&TradeOutcome::new(k, 100, costs, prices)?);
        let hindsight = min_price_deterministic(&costs, k, 100, prices.p_opt)?;
        println!("{},{hindsight}", flows.csv_row());
    }
    Ok(())
}
