//! Option price, premium and break-even end price as the declared
//! availability moves past the demand.

use privmarket::pricing::{expected_shortfall, min_price_average, quote, CostSchedule, MarketQuery};

fn main() -> privmarket::Result<()> {
    let costs = CostSchedule::new(10.0, 1.0, 2.0)?;
    let k_star = 100;
    println!("{:>7} {:>7} {:>12} {:>10} {:>11} {:>10}", "lambda", "k_hat", "option_price", "premium", "shortfall", "min_p_s");
    for lambda in [0.05, 0.1, 0.5] {
        for k_hat in [50.0, 90.0, 100.0, 110.0, 150.0] {
            let q = MarketQuery::new(k_star, k_hat, lambda)?;
            let quote = quote(costs.c_s, &q);
            println!(
                "{lambda:>7} {k_hat:>7} {:>12.6} {:>10.6} {:>11.6} {:>10.6}",
                quote.price,
                quote.premium,
                expected_shortfall(&q)?,
                min_price_average(&costs, &q)?
            );
        }
    }
    Ok(())
}
