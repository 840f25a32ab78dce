//! Statistical database of supplier stock and the Laplace noisy-count
//! mechanism that answers counting queries over it.
//!
//! The database is built once and then only queried. A query returns
//! `k̂ = k + L` with `L ~ Laplace(0, 1/λ)`. The response is a real number:
//! it is neither rounded nor clamped, so it may come out negative.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MarketError, Result};
use crate::rng::centered_uniform;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupplierRecord {
    pub supplier_id: String,
    pub stock: u64,
}

impl SupplierRecord {
    pub fn new(supplier_id: impl Into<String>, stock: u64) -> Self {
        SupplierRecord {
            supplier_id: supplier_id.into(),
            stock,
        }
    }
}

/// Supplier records with unique ids. Immutable once built.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StatDatabase {
    records: Vec<SupplierRecord>,
}

impl StatDatabase {
    pub fn new(records: Vec<SupplierRecord>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        let mut total: u64 = 0;
        for r in &records {
            if !seen.insert(r.supplier_id.as_str()) {
                return Err(MarketError::DuplicateSupplier(r.supplier_id.clone()));
            }
            total = total
                .checked_add(r.stock)
                .ok_or_else(|| MarketError::invalid("stock", "total stock overflows u64"))?;
        }
        Ok(StatDatabase { records })
    }

    /// Database whose suppliers are named `s0`, `s1`, ... in order.
    pub fn from_stocks(stocks: &[u64]) -> Result<Self> {
        Self::new(
            stocks
                .iter()
                .enumerate()
                .map(|(i, &s)| SupplierRecord::new(format!("s{i}"), s))
                .collect(),
        )
    }

    /// Reads `supplier_id,stock` CSV. The header row is mandatory.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["supplier_id", "stock"] {
            return Err(MarketError::invalid(
                "csv header",
                format!("expected `supplier_id,stock`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")),
            ));
        }
        let records = rdr
            .deserialize::<SupplierRecord>()
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Self::new(records)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn records(&self) -> &[SupplierRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The exact count `k`: sum of all stocks.
    pub fn true_count(&self) -> u64 {
        self.records.iter().map(|r| r.stock).sum()
    }

    /// Largest single-supplier stock, the default query sensitivity.
    pub fn max_stock(&self) -> u64 {
        self.records.iter().map(|r| r.stock).max().unwrap_or(0)
    }
}

/// Laplace shape parameter λ (rate, in 1/items). Smaller λ means more noise
/// and stronger privacy.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct PrivacyLevel(f64);

impl PrivacyLevel {
    pub fn new(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        Ok(PrivacyLevel(lambda))
    }

    pub fn lambda(self) -> f64 {
        self.0
    }

    /// Noise scale `1/λ`.
    pub fn scale(self) -> f64 {
        1.0 / self.0
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(MarketError::invalid("lambda", format!("must be finite and > 0, got {lambda}")))
    }
}

/// Inverse CDF of `Laplace(mu, 1/lambda)` on the centered uniform scale:
/// `mu - sign(u)·ln(1 - 2|u|)/lambda` for `u ∈ (-1/2, 1/2)`.
pub fn laplace_inverse_cdf(u: f64, mu: f64, lambda: f64) -> Result<f64> {
    if !(u > -0.5 && u < 0.5) {
        return Err(MarketError::invalid("u", format!("must lie in (-1/2, 1/2), got {u}")));
    }
    check_lambda(lambda)?;
    Ok(inverse_cdf_unchecked(u, mu, lambda))
}

#[inline]
fn inverse_cdf_unchecked(u: f64, mu: f64, lambda: f64) -> f64 {
    if u == 0.0 {
        return mu;
    }
    mu - u.signum() * (-2.0 * u.abs()).ln_1p() / lambda
}

/// `Laplace(location, 1/λ)` sampled by inverse CDF from one uniform draw.
#[derive(Debug, Clone, Copy)]
pub struct Laplace {
    location: f64,
    lambda: f64,
}

impl Laplace {
    pub fn new(location: f64, privacy: PrivacyLevel) -> Self {
        Laplace {
            location,
            lambda: privacy.lambda(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let z = self.lambda * (x - self.location);
        if z < 0.0 {
            0.5 * z.exp()
        } else {
            1.0 - 0.5 * (-z).exp()
        }
    }
}

impl Distribution<f64> for Laplace {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        inverse_cdf_unchecked(centered_uniform(rng), self.location, self.lambda)
    }
}

/// `k̂ = true_count + noise` for an already drawn noise value.
pub fn noisy_response(db: &StatDatabase, noise: f64) -> f64 {
    db.true_count() as f64 + noise
}

/// Answers the counting query with Laplace noise drawn from `rng`.
pub fn noisy_count<R: Rng + ?Sized>(db: &StatDatabase, privacy: PrivacyLevel, rng: &mut R) -> f64 {
    let noise = Laplace::new(0.0, privacy).sample(rng);
    noisy_response(db, noise)
}

/// Privacy budget `ε = λ·sensitivity` of one Laplace query.
pub fn epsilon_of(privacy: PrivacyLevel, sensitivity: f64) -> Result<f64> {
    if !(sensitivity.is_finite() && sensitivity > 0.0) {
        return Err(MarketError::invalid(
            "sensitivity",
            format!("must be finite and > 0, got {sensitivity}"),
        ));
    }
    Ok(privacy.lambda() * sensitivity)
}

/// ε with the sensitivity taken as the largest single-supplier stock: one
/// supplier joining or leaving moves the count by at most that much.
pub fn database_epsilon(db: &StatDatabase, privacy: PrivacyLevel) -> Result<f64> {
    epsilon_of(privacy, db.max_stock() as f64)
}
