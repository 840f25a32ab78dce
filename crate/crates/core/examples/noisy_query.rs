//! Load a supplier database and answer the stock query with Laplace noise.
//!
//! ```bash
//! cargo run --example noisy_query -- crates/core/data/suppliers.csv 0.1
//! ```

use privmarket::dp::{database_epsilon, noisy_count, PrivacyLevel, StatDatabase};
use privmarket::rng::substream;

fn main() -> privmarket::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/suppliers.csv").into());
    let lambda: f64 = args.next().map(|s| s.parse().expect("lambda")).unwrap_or(0.1);

    let db = StatDatabase::from_csv_path(&path)?;
    let privacy = PrivacyLevel::new(lambda)?;
    println!("suppliers={}", db.len());
    println!("true_count={}", db.true_count());
    println!("epsilon={} (sensitivity = largest stock {})", database_epsilon(&db, privacy)?, db.max_stock());

    for query in 0..5 {
        let k_hat = noisy_count(&db, privacy, &mut substream(2015, query));
        println!("query {query}: k_hat={k_hat:.3}");
    }
    Ok(())
}
