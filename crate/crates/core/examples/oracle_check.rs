//! Closed forms next to their Monte Carlo estimates at a few points.

use privmarket::oracle::{mc_expected_excess, mc_expected_profit, mc_expected_shortfall, ProfitTemplate};
use privmarket::pricing::{expected_excess, expected_shortfall, min_price_average, CostSchedule, MarketQuery};

fn main() -> privmarket::Result<()> {
    let n = 1_000_000;
    for (k_hat, lambda) in [(100.0, 0.1), (0.0, 0.1), (150.0, 0.05)] {
        let q = MarketQuery::new(100, k_hat, lambda)?;
        let mc = mc_expected_excess(&q, n, 1)?;
        println!(
            "k_hat={k_hat} lambda={lambda} excess: closed={:.6} mc={:.6}±{:.6}",
            expected_excess(&q),
            mc.mean,
            mc.stderr
        );
        let mc = mc_expected_shortfall(&q, true, n, 2)?;
        println!(
            "k_hat={k_hat} lambda={lambda} shortfall: closed={:.6} mc={:.6}±{:.6}",
            expected_shortfall(&q)?,
            mc.mean,
            mc.stderr
        );
    }

    let costs = CostSchedule::new(10.0, 1.0, 2.0)?;
    let q = MarketQuery::new(100, 100.0, 0.1)?;
    let threshold = min_price_average(&costs, &q)?;
    for markup in [-0.05, 0.0, 0.05] {
        let mc = mc_expected_profit(&ProfitTemplate::new(costs, threshold + markup), &q, n, 3)?;
        println!("p_s = threshold{markup:+}: profit {:.4}±{:.4} (expected {:.4})", mc.mean, mc.stderr, 100.0 * markup);
    }
    Ok(())
}
