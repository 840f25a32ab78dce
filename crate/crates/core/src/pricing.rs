//! Closed-form pricing for the option contract and the broker's end price.
//!
//! All conditional expectations use the posterior `k | k̂ ~ Laplace(k̂, 1/λ)`
//! (a flat prior over the true count). The expected excess behind the option
//! price keeps the whole posterior. The expected shortfall drops the mass
//! below zero without renormalizing, so it is only offered for `k̂ ≥ 0`.
//!
//! Thresholds are returned as exact bounds; a broker must price strictly
//! above them to make a profit.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::dp::check_lambda;
use crate::error::{MarketError, Result};

/// Demand `k*`, noisy declared availability `k̂` and the Laplace shape λ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarketQuery {
    k_star: u64,
    k_hat: f64,
    lambda: f64,
}

impl MarketQuery {
    pub fn new(k_star: u64, k_hat: f64, lambda: f64) -> Result<Self> {
        if k_star == 0 {
            return Err(MarketError::invalid("k_star", "demand must be at least one item"));
        }
        if !k_hat.is_finite() {
            return Err(MarketError::invalid("k_hat", format!("must be finite, got {k_hat}")));
        }
        check_lambda(lambda)?;
        Ok(MarketQuery { k_star, k_hat, lambda })
    }

    pub fn k_star(&self) -> u64 {
        self.k_star
    }

    pub fn k_hat(&self) -> f64 {
        self.k_hat
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Same demand and λ, different declared availability.
    pub fn with_k_hat(&self, k_hat: f64) -> Result<Self> {
        Self::new(self.k_star, k_hat, self.lambda)
    }

    fn gap(&self) -> f64 {
        self.k_hat - self.k_star as f64
    }

    /// `e^{-λ|k̂-k*|} / (2λ)`, the noise term shared by every formula.
    fn noise_term(&self) -> f64 {
        (-self.lambda * self.gap().abs()).exp() / (2.0 * self.lambda)
    }

    fn require_nonnegative_k_hat(&self) -> Result<()> {
        if self.k_hat < 0.0 {
            Err(MarketError::Domain(format!(
                "shortfall pricing needs k_hat >= 0, got {}",
                self.k_hat
            )))
        } else {
            Ok(())
        }
    }
}

/// Broker-side unit costs.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostSchedule {
    /// Fixed fee for the database query.
    pub c_q: f64,
    /// Price per item bought from privacy-aware suppliers.
    pub c_s: f64,
    /// Internal production cost per item.
    pub c_p: f64,
}

impl CostSchedule {
    pub fn new(c_q: f64, c_s: f64, c_p: f64) -> Result<Self> {
        let costs = CostSchedule { c_q, c_s, c_p };
        costs.validate()?;
        Ok(costs)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c_q", self.c_q), ("c_s", self.c_s), ("c_p", self.c_p)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(MarketError::invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if self.c_s >= self.c_p && self.c_s > 0.0 {
            warn!(
                "supplier price c_s={} is not below production cost c_p={}; \
                 the broker gains nothing from privacy-aware suppliers",
                self.c_s, self.c_p
            );
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptionQuote {
    pub price: f64,
    pub premium: f64,
}

pub fn positive_part(x: f64) -> f64 {
    x.max(0.0)
}

/// `E[(k - k*)⁺ | k̂] = (k̂ - k*)⁺ + e^{-λ|k̂-k*|}/(2λ)`.
pub fn expected_excess(q: &MarketQuery) -> f64 {
    positive_part(q.gap()) + q.noise_term()
}

/// Option price: the expected cost of items bought beyond the demand.
pub fn option_price(c_s: f64, q: &MarketQuery) -> f64 {
    c_s * expected_excess(q)
}

/// Noise-only part of the option price, `c_s·e^{-λ|k̂-k*|}/(2λ)`. Peaks at
/// `k̂ = k*` with value `c_s/(2λ)`.
pub fn premium(c_s: f64, q: &MarketQuery) -> f64 {
    c_s * q.noise_term()
}

pub fn quote(c_s: f64, q: &MarketQuery) -> OptionQuote {
    OptionQuote {
        price: option_price(c_s, q),
        premium: premium(c_s, q),
    }
}

/// `E[(k* - k)⁺·1{k ≥ 0} | k̂]`:
/// `(k* - k̂)⁺ + e^{-λ|k̂-k*|}/(2λ) - (e^{-λk̂}/2)(k* + 1/λ)`.
///
/// Defined for `k̂ ≥ 0` only.
pub fn expected_shortfall(q: &MarketQuery) -> Result<f64> {
    q.require_nonnegative_k_hat()?;
    Ok(positive_part(-q.gap()) + q.noise_term() - truncation_term(q))
}

/// `(e^{-λk̂}/2)(k* + 1/λ)`, the shortfall mass sitting below zero items.
fn truncation_term(q: &MarketQuery) -> f64 {
    0.5 * (-q.lambda * q.k_hat).exp() * (q.k_star as f64 + 1.0 / q.lambda)
}

/// Lowest end price that makes a profit once the delivery `k` is known:
/// `(c_q + k·c_s + (k* - k)⁺·c_p - p_opt) / k*`.
pub fn min_price_deterministic(costs: &CostSchedule, k: u64, k_star: u64, p_opt: f64) -> Result<f64> {
    if k_star == 0 {
        return Err(MarketError::invalid("k_star", "demand must be at least one item"));
    }
    let shortfall = k_star.saturating_sub(k) as f64;
    Ok((costs.c_q + k as f64 * costs.c_s + shortfall * costs.c_p - p_opt) / k_star as f64)
}

/// Break-even end price in expectation over the posterior, in its
/// rearranged closed form.
pub fn min_price_average(costs: &CostSchedule, q: &MarketQuery) -> Result<f64> {
    q.require_nonnegative_k_hat()?;
    let CostSchedule { c_q, c_s, c_p } = *costs;
    let k_star = q.k_star as f64;
    let linear = c_q + q.k_hat * c_s + c_p * positive_part(-q.gap()) - c_s * positive_part(q.gap());
    let noise = (c_p - c_s) * q.noise_term() - c_p * truncation_term(q);
    Ok(linear / k_star + noise / k_star)
}

/// The same threshold assembled from its expectations:
/// `(c_q + k̂·c_s + c_p·E[shortfall] - c_s·E[excess]) / k*`.
pub fn min_price_average_assembled(costs: &CostSchedule, q: &MarketQuery) -> Result<f64> {
    let shortfall = expected_shortfall(q)?;
    let p_opt = option_price(costs.c_s, q);
    Ok((costs.c_q + q.k_hat * costs.c_s + costs.c_p * shortfall - p_opt) / q.k_star as f64)
}

/// Broker profit expected under the posterior at end price `p_s`, with the
/// option sold at its closed-form price. Equals `k*·(p_s − min_price_average)`.
pub fn expected_profit(costs: &CostSchedule, q: &MarketQuery, p_s: f64) -> Result<f64> {
    Ok(q.k_star as f64 * (p_s - min_price_average(costs, q)?))
}
