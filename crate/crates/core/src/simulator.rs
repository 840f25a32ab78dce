//! End-to-end market scenarios and pricing sweeps.
//!
//! A trial runs the whole protocol: the broker queries the database, quotes
//! the option, commits to buy whatever the suppliers deliver, and settles.
//! Two generative models are available:
//!
//! * `forward`: the true count comes from the supplier database and the
//!   broker sees `k̂ = k + Laplace noise`. Pricing still assumes the flat
//!   posterior, so any resulting profit bias shows up in the summary.
//! * `posterior`: `k̂` is fixed and the delivery is drawn from
//!   `Laplace(k̂, 1/λ)`, clamped at zero and rounded to whole items.
//!
//! Trial `i` draws all of its randomness from substream `(seed, i)`, so a
//! scenario's output is a pure function of the scenario value.

use std::io::Write;

use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dp::{noisy_count, Laplace, PrivacyLevel, StatDatabase, SupplierRecord};
use crate::error::{MarketError, Result};
use crate::fmt::number;
use crate::oracle::Accumulator;
use crate::pricing::{expected_profit, min_price_average, option_price, premium, CostSchedule, MarketQuery};
use crate::rng::{substream, SubstreamRng, SCENARIO_STREAM};
use crate::settlement::{settle, FlowStatement, PriceSchedule, TradeOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Posterior,
    Forward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StockDistribution {
    Constant(u64),
    /// Uniform integer stock on `[a, b]`.
    Uniform { a: u64, b: u64 },
}

/// Where the supplier database comes from. A generated database is drawn
/// afresh in every trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupplierSpec {
    Records(Vec<SupplierRecord>),
    Generate { count: u64, stock: StockDistribution },
}

impl SupplierSpec {
    fn validate(&self) -> Result<()> {
        match self {
            SupplierSpec::Records(records) => StatDatabase::new(records.clone()).map(|_| ()),
            SupplierSpec::Generate { stock: StockDistribution::Uniform { a, b }, .. } if a > b => Err(
                MarketError::invalid("suppliers.generate.stock", format!("uniform bounds need a <= b, got [{a}, {b}]")),
            ),
            SupplierSpec::Generate { .. } => Ok(()),
        }
    }

    fn generate<R: Rng + ?Sized>(count: u64, stock: StockDistribution, rng: &mut R) -> StatDatabase {
        let records = (0..count)
            .map(|i| {
                let s = match stock {
                    StockDistribution::Constant(v) => v,
                    StockDistribution::Uniform { a, b } => rng.random_range(a..=b),
                };
                SupplierRecord::new(format!("s{i}"), s)
            })
            .collect();
        StatDatabase::new(records).expect("generated ids are unique")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoPrice {
    Auto,
}

/// End price: a fixed number, or `"auto"` for the break-even threshold
/// marked up by `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EndPrice {
    Fixed(f64),
    Auto(AutoPrice),
}

fn default_delta() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: Model,
    pub suppliers: SupplierSpec,
    pub k_star: u64,
    pub lambda: f64,
    pub costs: CostSchedule,
    pub p_s: EndPrice,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Declared availability for the posterior model. When absent, one
    /// noisy query of the supplier database supplies it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_hat: Option<f64>,
    pub trials: u64,
    pub seed: u64,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_star == 0 {
            return Err(MarketError::invalid("k_star", "demand must be at least one item"));
        }
        PrivacyLevel::new(self.lambda)?;
        self.costs.validate()?;
        if let EndPrice::Fixed(p) = self.p_s {
            PriceSchedule::new(0.0, p)?;
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(MarketError::invalid("delta", format!("must be finite and >= 0, got {}", self.delta)));
        }
        if let Some(k_hat) = self.k_hat {
            if !k_hat.is_finite() {
                return Err(MarketError::invalid("k_hat", "must be finite"));
            }
        }
        if self.trials == 0 {
            return Err(MarketError::invalid("trials", "need at least one trial"));
        }
        self.suppliers.validate()
    }

    pub fn prepare(&self) -> Result<Simulation> {
        Simulation::new(self.clone())
    }
}

/// Why a trial did not follow the normal path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialFlag {
    /// `k̂ < 0`: the break-even formula is undefined. With an automatic end
    /// price the trade is not settled.
    NegativeKHat,
}

impl TrialFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialFlag::NegativeKHat => "negative_k_hat",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    /// Items actually delivered by the suppliers.
    pub k: u64,
    pub k_hat: f64,
    pub p_opt: f64,
    pub p_s_used: Option<f64>,
    pub flows: Option<FlowStatement>,
    /// Expected profit the closed forms promise for this `k̂` and price.
    pub predicted_profit: Option<f64>,
    pub flag: Option<TrialFlag>,
}

pub const TRIALS_CSV_HEADER: &str = "trial_index,k,k_star,k_hat,p_opt,p_s_used,customer_outlay,\
supplier_revenue,query_fee,production_cost,broker_profit,predicted_profit,flag";

fn opt_cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl TrialRecord {
    pub fn csv_row(&self, k_star: u64) -> String {
        let flows = match &self.flows {
            Some(f) => format!(
                "{},{},{},{},{}",
                f.customer_outlay, f.supplier_revenue, f.query_fee, f.production_cost, f.broker_profit
            ),
            None => ",,,,".to_string(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.trial_index,
            self.k,
            k_star,
            self.k_hat,
            self.p_opt,
            opt_cell(self.p_s_used),
            flows,
            opt_cell(self.predicted_profit),
            self.flag.map(TrialFlag::as_str).unwrap_or("")
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStats {
    pub trials: u64,
    pub settled_trials: u64,
    pub flagged_trials: u64,
    pub mean_profit: f64,
    pub stderr_profit: f64,
    /// Share of settled trials with strictly positive profit.
    pub fraction_profitable: f64,
    pub mean_production_cost: f64,
    pub mean_supplier_revenue: f64,
    /// Average of the per-trial closed-form expected profit, over trials
    /// where it is defined.
    pub mean_predicted_profit: Option<f64>,
    /// `mean_profit − mean_predicted_profit`: discretization and model
    /// mismatch between the simulated market and the continuous formulas.
    pub prediction_gap: Option<f64>,
}

impl SummaryStats {
    pub fn from_trials(records: &[TrialRecord]) -> Self {
        let mut profit = Accumulator::default();
        let mut production = Accumulator::default();
        let mut supplier = Accumulator::default();
        let mut predicted = Accumulator::default();
        let mut profitable = 0u64;
        let mut flagged = 0u64;
        for r in records {
            if r.flag.is_some() {
                flagged += 1;
            }
            if let Some(f) = &r.flows {
                profit.push(f.broker_profit);
                production.push(f.production_cost);
                supplier.push(f.supplier_revenue);
                if f.broker_profit > 0.0 {
                    profitable += 1;
                }
                if let Some(p) = r.predicted_profit {
                    predicted.push(p);
                }
            }
        }
        let settled = profit.count();
        let mean_or_nan = |a: &Accumulator| if a.count() > 0 { a.mean() } else { f64::NAN };
        let profit_est = profit.estimate();
        let mean_predicted_profit = (predicted.count() > 0).then(|| predicted.mean());
        SummaryStats {
            trials: records.len() as u64,
            settled_trials: settled,
            flagged_trials: flagged,
            mean_profit: mean_or_nan(&profit),
            stderr_profit: if settled > 0 { profit_est.stderr } else { f64::NAN },
            fraction_profitable: if settled > 0 { profitable as f64 / settled as f64 } else { f64::NAN },
            mean_production_cost: mean_or_nan(&production),
            mean_supplier_revenue: mean_or_nan(&supplier),
            mean_predicted_profit,
            prediction_gap: mean_predicted_profit.map(|p| mean_or_nan(&profit) - p),
        }
    }

    /// `key=value` lines. Absent optional values are omitted.
    pub fn write_key_values<W: Write>(&self, mut out: W, digits: Option<usize>) -> std::io::Result<()> {
        writeln!(out, "trials={}", self.trials)?;
        writeln!(out, "settled_trials={}", self.settled_trials)?;
        writeln!(out, "flagged_trials={}", self.flagged_trials)?;
        let reals = [
            ("mean_profit", Some(self.mean_profit)),
            ("stderr_profit", Some(self.stderr_profit)),
            ("fraction_profitable", Some(self.fraction_profitable)),
            ("mean_production_cost", Some(self.mean_production_cost)),
            ("mean_supplier_revenue", Some(self.mean_supplier_revenue)),
            ("mean_predicted_profit", self.mean_predicted_profit),
            ("prediction_gap", self.prediction_gap),
        ];
        for (key, value) in reals {
            if let Some(v) = value {
                writeln!(out, "{key}={}", number(v, digits))?;
            }
        }
        Ok(())
    }
}

/// A validated scenario with its fixed inputs resolved.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    privacy: PrivacyLevel,
    fixed_db: Option<StatDatabase>,
    declared_k_hat: Option<f64>,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let privacy = PrivacyLevel::new(scenario.lambda)?;
        let fixed_db = match &scenario.suppliers {
            SupplierSpec::Records(records) => Some(StatDatabase::new(records.clone())?),
            SupplierSpec::Generate { .. } => None,
        };
        let mut sim = Simulation {
            scenario,
            privacy,
            fixed_db,
            declared_k_hat: None,
        };
        if sim.scenario.model == Model::Posterior {
            sim.declared_k_hat = Some(match sim.scenario.k_hat {
                Some(k_hat) => k_hat,
                None => {
                    let mut rng = substream(sim.scenario.seed, SCENARIO_STREAM);
                    let db = sim.database(&mut rng);
                    noisy_count(&db, privacy, &mut rng)
                }
            });
        }
        Ok(sim)
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// The posterior model's fixed `k̂`.
    pub fn declared_k_hat(&self) -> Option<f64> {
        self.declared_k_hat
    }

    fn database(&self, rng: &mut SubstreamRng) -> StatDatabase {
        match (&self.fixed_db, &self.scenario.suppliers) {
            (Some(db), _) => db.clone(),
            (None, SupplierSpec::Generate { count, stock }) => SupplierSpec::generate(*count, *stock, rng),
            (None, SupplierSpec::Records(_)) => unreachable!("records always produce a fixed database"),
        }
    }

    pub fn run_trial(&self, trial_index: u64) -> Result<TrialRecord> {
        let s = &self.scenario;
        let mut rng = substream(s.seed, trial_index);
        let (k, k_hat) = match self.declared_k_hat {
            None => {
                let db = match &self.fixed_db {
                    Some(db) => std::borrow::Cow::Borrowed(db),
                    None => std::borrow::Cow::Owned(self.database(&mut rng)),
                };
                (db.true_count(), noisy_count(&db, self.privacy, &mut rng))
            }
            Some(k_hat) => {
                let draw = Laplace::new(k_hat, self.privacy).sample(&mut rng);
                (draw.max(0.0).round() as u64, k_hat)
            }
        };

        let q = MarketQuery::new(s.k_star, k_hat, s.lambda)?;
        let p_opt = option_price(s.costs.c_s, &q);
        let flag = (k_hat < 0.0).then_some(TrialFlag::NegativeKHat);
        let p_s = match s.p_s {
            EndPrice::Fixed(p) => Some(p),
            EndPrice::Auto(_) if flag.is_some() => None,
            EndPrice::Auto(_) => Some((min_price_average(&s.costs, &q)? * (1.0 + s.delta)).max(0.0)),
        };
        let predicted_profit = match (p_s, flag) {
            (Some(p), None) => Some(expected_profit(&s.costs, &q, p)?),
            _ => None,
        };
        let flows = match p_s {
            Some(p) => {
                let trade = TradeOutcome::new(k, s.k_star, s.costs, PriceSchedule::new(p_opt, p)?)?;
                Some(settle(&trade))
            }
            None => None,
        };
        Ok(TrialRecord {
            trial_index,
            k,
            k_hat,
            p_opt,
            p_s_used: p_s,
            flows,
            predicted_profit,
            flag,
        })
    }

    /// All trials in index order. Trials run in parallel; the output does
    /// not depend on scheduling.
    pub fn run(&self) -> Result<ScenarioRun> {
        let trials = (0..self.scenario.trials)
            .into_par_iter()
            .map(|i| self.run_trial(i))
            .collect::<Result<Vec<_>>>()?;
        Ok(ScenarioRun {
            summary: SummaryStats::from_trials(&trials),
            trials,
            k_star: self.scenario.k_star,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub summary: SummaryStats,
    pub trials: Vec<TrialRecord>,
    k_star: u64,
}

impl ScenarioRun {
    pub fn write_trials_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{TRIALS_CSV_HEADER}")?;
        for t in &self.trials {
            writeln!(out, "{}", t.csv_row(self.k_star))?;
        }
        Ok(())
    }
}

pub fn run_trial(s: &Scenario, trial_index: u64) -> Result<TrialRecord> {
    s.prepare()?.run_trial(trial_index)
}

pub fn run_scenario(s: &Scenario) -> Result<ScenarioRun> {
    s.prepare()?.run()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub k_hat: f64,
    pub lambda: f64,
    pub option_price: f64,
    pub premium: f64,
    /// Break-even end price; `None` without costs or when `k̂ < 0`.
    pub min_price_avg: Option<f64>,
}

/// Option price, premium and (with costs) the break-even end price for every
/// `(k̂, λ)`. Rows are grouped by λ, each group in `k_hat_grid` order.
pub fn sweep(
    k_hat_grid: &[f64],
    lambdas: &[f64],
    c_s: f64,
    k_star: u64,
    costs: Option<&CostSchedule>,
) -> Result<Vec<SweepRow>> {
    if k_hat_grid.is_empty() || lambdas.is_empty() {
        return Err(MarketError::invalid("sweep grid", "k_hat grid and lambda list must be non-empty"));
    }
    if !(c_s.is_finite() && c_s >= 0.0) {
        return Err(MarketError::invalid("c_s", format!("must be finite and >= 0, got {c_s}")));
    }
    let mut rows = Vec::with_capacity(k_hat_grid.len() * lambdas.len());
    for &lambda in lambdas {
        for &k_hat in k_hat_grid {
            let q = MarketQuery::new(k_star, k_hat, lambda)?;
            let min_price_avg = match costs {
                Some(c) if k_hat >= 0.0 => Some(min_price_average(c, &q)?),
                _ => None,
            };
            rows.push(SweepRow {
                k_hat,
                lambda,
                option_price: option_price(c_s, &q),
                premium: premium(c_s, &q),
                min_price_avg,
            });
        }
    }
    Ok(rows)
}

pub const DEFAULT_SWEEP_LAMBDAS: [f64; 3] = [0.05, 0.1, 0.2];

/// `0, k*/100, …, 2k*`: 201 points.
pub fn default_k_hat_grid(k_star: u64) -> Vec<f64> {
    let step = k_star as f64 / 100.0;
    (0..=200).map(|i| i as f64 * step).collect()
}

/// Writes sweep rows as CSV. The `min_price_avg` column is present only when
/// `with_min_price` is set; rows without a value leave it empty.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], with_min_price: bool, mut out: W) -> std::io::Result<()> {
    if with_min_price {
        writeln!(out, "k_hat,lambda,option_price,premium,min_price_avg")?;
    } else {
        writeln!(out, "k_hat,lambda,option_price,premium")?;
    }
    for r in rows {
        write!(out, "{},{},{},{}", r.k_hat, r.lambda, r.option_price, r.premium)?;
        if with_min_price {
            write!(out, ",{}", opt_cell(r.min_price_avg))?;
        }
        writeln!(out)?;
    }
    Ok(())
}
