//! Realized cash flows of one completed trade.
//!
//! The broker buys every delivered item (`k·c_s`, even beyond demand), pays
//! the query fee, produces any shortfall at `c_p`, and collects the option
//! price plus `k*·p_s` from the customer. Excess items have no salvage value
//! and the option is always exercised.

use std::io::Write;

use serde::Serialize;

use crate::error::{MarketError, Result};
use crate::pricing::{positive_part, CostSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PriceSchedule {
    pub p_opt: f64,
    pub p_s: f64,
}

impl PriceSchedule {
    pub fn new(p_opt: f64, p_s: f64) -> Result<Self> {
        for (name, v) in [("p_opt", p_opt), ("p_s", p_s)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(MarketError::invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(PriceSchedule { p_opt, p_s })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeOutcome {
    /// Items the suppliers actually delivered.
    pub k: u64,
    pub k_star: u64,
    pub costs: CostSchedule,
    pub prices: PriceSchedule,
}

impl TradeOutcome {
    pub fn new(k: u64, k_star: u64, costs: CostSchedule, prices: PriceSchedule) -> Result<Self> {
        if k_star == 0 {
            return Err(MarketError::invalid("k_star", "demand must be at least one item"));
        }
        costs.validate()?;
        Ok(TradeOutcome { k, k_star, costs, prices })
    }

    fn shortfall(&self) -> f64 {
        self.k_star.saturating_sub(self.k) as f64
    }
}

/// Per-stakeholder money movements of a settled trade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowStatement {
    pub k: u64,
    pub k_star: u64,
    pub customer_outlay: f64,
    pub supplier_revenue: f64,
    pub query_fee: f64,
    pub production_cost: f64,
    pub broker_profit: f64,
}

pub const FLOW_CSV_HEADER: &str =
    "k,k_star,customer_outlay,supplier_revenue,query_fee,production_cost,broker_profit";

impl FlowStatement {
    /// One CSV row in [`FLOW_CSV_HEADER`] column order, numbers in shortest
    /// round-trip form.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.k,
            self.k_star,
            self.customer_outlay,
            self.supplier_revenue,
            self.query_fee,
            self.production_cost,
            self.broker_profit
        )
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{FLOW_CSV_HEADER}")?;
        writeln!(out, "{}", self.csv_row())
    }
}

/// Broker profit `p_opt + k*·p_s − c_q − k·c_s − (k* − k)⁺·c_p`.
pub fn broker_profit(t: &TradeOutcome) -> f64 {
    settle(t).broker_profit
}

pub fn settle(t: &TradeOutcome) -> FlowStatement {
    let customer_outlay = t.prices.p_opt + t.k_star as f64 * t.prices.p_s;
    let supplier_revenue = t.k as f64 * t.costs.c_s;
    let query_fee = t.costs.c_q;
    let production_cost = positive_part(t.shortfall()) * t.costs.c_p;
    FlowStatement {
        k: t.k,
        k_star: t.k_star,
        customer_outlay,
        supplier_revenue,
        query_fee,
        production_cost,
        broker_profit: customer_outlay - supplier_revenue - query_fee - production_cost,
    }
}
