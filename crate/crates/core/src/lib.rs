//! Option contracts for a privacy-aware market.
//!
//! Suppliers publish their stock only through a statistical database that
//! answers counting queries with Laplace noise. A broker reads the noisy
//! count, sells end customers a call option on the `k*` items they demand,
//! and fills the order from the suppliers' true stock plus its own
//! production. This crate prices that option and the broker's break-even
//! end price in closed form, settles realized trades, and checks every
//! formula against an independent Monte Carlo oracle.
//!
//! | module | what it holds |
//! |---|---|
//! | [`dp`] | supplier database, Laplace noisy count, ε bookkeeping |
//! | [`pricing`] | option price, premium, shortfall expectation, break-even thresholds |
//! | [`settlement`] | realized cash flows of one trade |
//! | [`oracle`] | Monte Carlo estimators used as ground truth |
//! | [`simulator`] | end-to-end scenarios and price sweeps |
//! | [`cli`] | the `privmarket` command line front end |
//!
//! Each capability has a runnable program under `examples/`:
//!
//! ```bash
//! cargo run --release --example option_quote
//! ```

pub mod cli;
pub mod dp;
pub mod error;
pub mod fmt;
pub mod oracle;
pub mod pricing;
pub mod rng;
pub mod settlement;
pub mod simulator;

pub use dp::{PrivacyLevel, StatDatabase, SupplierRecord};
pub use error::{MarketError, Result};
pub use oracle::McEstimate;
pub use pricing::{CostSchedule, MarketQuery, OptionQuote};
pub use settlement::{FlowStatement, PriceSchedule, TradeOutcome};
pub use simulator::{Scenario, SummaryStats, TrialRecord};
