//! Monte Carlo ground truth for the closed-form expectations.
//!
//! Every estimator samples the posterior `k ~ Laplace(k̂, 1/λ)` directly and
//! averages the payoff. Work is split into fixed-size chunks, each with its
//! own `(seed, chunk)` substream, and chunk accumulators are merged in chunk
//! order, so the result is bit-identical however rayon schedules the chunks.

use rand::distr::Distribution;
use rayon::prelude::*;
use serde::Serialize;

use crate::dp::{Laplace, PrivacyLevel};
use crate::error::{MarketError, Result};
use crate::pricing::{
    expected_excess, expected_shortfall, min_price_average, option_price, positive_part, CostSchedule, MarketQuery,
};
use crate::rng::{substream, SubstreamRng};

const CHUNK: u64 = 1 << 16;

/// Agreement bound, in standard errors, used by [`verify_grid`].
pub const Z_MAX: f64 = 5.0;

/// Sample mean with its standard error `s/√n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: u64,
}

impl McEstimate {
    /// `(mean − expected) / sqrt(stderr² + floor²)`.
    ///
    /// `floor` adds the uncertainty of payoffs driven by rare tail events,
    /// which the sample variance misses when few or no events were drawn.
    pub fn z_score(&self, expected: f64, floor: f64) -> f64 {
        let diff = self.mean - expected;
        if diff == 0.0 {
            return 0.0;
        }
        diff / self.stderr.hypot(floor)
    }
}

/// Welford accumulator; `merge` is Chan's pairwise update.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Accumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64 / n as f64);
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn estimate(&self) -> McEstimate {
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        McEstimate {
            mean: self.mean,
            stderr: (var.max(0.0) / self.n as f64).sqrt(),
            n: self.n,
        }
    }
}

/// Averages `payoff` over `n` draws split into seeded chunks.
pub fn estimate<F>(n: u64, seed: u64, payoff: F) -> Result<McEstimate>
where
    F: Fn(&mut SubstreamRng) -> f64 + Sync,
{
    if n < 2 {
        return Err(MarketError::invalid("n", format!("need at least 2 samples, got {n}")));
    }
    let chunks = n.div_ceil(CHUNK);
    let partials: Vec<Accumulator> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, c);
            let len = CHUNK.min(n - c * CHUNK);
            let mut acc = Accumulator::default();
            for _ in 0..len {
                acc.push(payoff(&mut rng));
            }
            acc
        })
        .collect();
    let mut total = Accumulator::default();
    for p in &partials {
        total.merge(p);
    }
    Ok(total.estimate())
}

fn posterior(q: &MarketQuery) -> Laplace {
    // MarketQuery already guarantees λ > 0
    Laplace::new(q.k_hat(), PrivacyLevel::new(q.lambda()).expect("validated lambda"))
}

/// Standard-error floor for tail-driven payoffs: `z/(λn)`.
///
/// Adding `z²/2` pseudo-events (the Agresti–Coull correction) whose size is
/// the `Exp(λ)` overshoot of a Laplace tail contributes variance
/// `(z²/2)·(2/λ²)/n²` to the sample mean.
pub fn tail_floor(q: &MarketQuery, n: u64, z: f64) -> f64 {
    z / (q.lambda() * n as f64)
}

/// Estimates `E[(k − k*)⁺ | k̂]` with the untruncated posterior.
pub fn mc_expected_excess(q: &MarketQuery, n: u64, seed: u64) -> Result<McEstimate> {
    let dist = posterior(q);
    let k_star = q.k_star() as f64;
    estimate(n, seed, |rng| positive_part(dist.sample(rng) - k_star))
}

/// Estimates the expected shortfall. With `truncate`, draws below zero
/// contribute nothing; without it, the plain `E[(k* − k)⁺ | k̂]`.
pub fn mc_expected_shortfall(q: &MarketQuery, truncate: bool, n: u64, seed: u64) -> Result<McEstimate> {
    let dist = posterior(q);
    let k_star = q.k_star() as f64;
    estimate(n, seed, |rng| {
        let k = dist.sample(rng);
        if truncate && k < 0.0 {
            0.0
        } else {
            positive_part(k_star - k)
        }
    })
}

/// A trade with everything fixed except the delivered quantity `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfitTemplate {
    pub costs: CostSchedule,
    pub p_s: f64,
    /// Defaults to the closed-form option price of the query.
    pub p_opt: Option<f64>,
    /// Clamp draws at zero and round to whole items.
    pub integerize: bool,
    /// Skip shortfall production for draws below zero.
    pub truncate_shortfall: bool,
}

impl ProfitTemplate {
    pub fn new(costs: CostSchedule, p_s: f64) -> Self {
        ProfitTemplate {
            costs,
            p_s,
            p_opt: None,
            integerize: false,
            truncate_shortfall: false,
        }
    }
}

/// Estimates the broker's expected profit under the posterior.
pub fn mc_expected_profit(t: &ProfitTemplate, q: &MarketQuery, n: u64, seed: u64) -> Result<McEstimate> {
    let dist = posterior(q);
    let k_star = q.k_star() as f64;
    let CostSchedule { c_q, c_s, c_p } = t.costs;
    let p_opt = t.p_opt.unwrap_or_else(|| option_price(c_s, q));
    let revenue = p_opt + k_star * t.p_s;
    let (integerize, truncate) = (t.integerize, t.truncate_shortfall);
    estimate(n, seed, |rng| {
        let raw = dist.sample(rng);
        let k = if integerize { raw.max(0.0).round() } else { raw };
        let production = if truncate && k < 0.0 { 0.0 } else { positive_part(k_star - k) * c_p };
        revenue - c_q - k * c_s - production
    })
}

/// Closed form or its Monte Carlo counterpart, compared at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// Option price expectation vs untruncated excess draws.
    Excess,
    /// Truncated shortfall formula vs truncated draws.
    Shortfall,
    /// `(k* − k̂)⁺ + e^{−λ|k̂−k*|}/(2λ)` vs untruncated shortfall draws.
    ShortfallUntruncated,
    /// Profit at the break-even price vs zero.
    BreakEven,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::Excess => "excess",
            Check::Shortfall => "shortfall",
            Check::ShortfallUntruncated => "shortfall_untruncated",
            Check::BreakEven => "break_even",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub lambda: f64,
    pub k_hat: f64,
    pub k_star: u64,
}

/// `{0.05, 0.1, 0.5, 1} × {0, 25, …, 200} × {100}`.
pub fn default_grid() -> Vec<GridPoint> {
    let mut grid = Vec::new();
    for lambda in [0.05, 0.1, 0.5, 1.0] {
        for k_hat in [0.0, 25.0, 50.0, 75.0, 100.0, 125.0, 150.0, 200.0] {
            grid.push(GridPoint { lambda, k_hat, k_star: 100 });
        }
    }
    grid
}

/// Reads a `lambda,k_hat,k_star` CSV grid.
pub fn read_grid<R: std::io::Read>(reader: R) -> Result<Vec<GridPoint>> {
    #[derive(serde::Deserialize)]
    struct Row {
        lambda: f64,
        k_hat: f64,
        k_star: u64,
    }
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut grid = Vec::new();
    for row in rdr.deserialize::<Row>() {
        let row = row?;
        MarketQuery::new(row.k_star, row.k_hat, row.lambda)?;
        grid.push(GridPoint {
            lambda: row.lambda,
            k_hat: row.k_hat,
            k_star: row.k_star,
        });
    }
    if grid.is_empty() {
        return Err(MarketError::invalid("grid", "no grid points"));
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub check: Check,
    pub point: GridPoint,
    pub closed_form: f64,
    pub mc: McEstimate,
    pub z: f64,
}

impl Comparison {
    pub fn passes(&self, z_max: f64) -> bool {
        self.z.abs() <= z_max
    }
}

/// Closed forms under test. Swappable so a broken formula can be shown to
/// fail verification.
#[derive(Clone, Copy)]
pub struct ClosedForms {
    pub excess: fn(&MarketQuery) -> f64,
    pub shortfall: fn(&MarketQuery) -> Result<f64>,
    pub break_even: fn(&CostSchedule, &MarketQuery) -> Result<f64>,
}

impl Default for ClosedForms {
    fn default() -> Self {
        ClosedForms {
            excess: expected_excess,
            shortfall: expected_shortfall,
            break_even: min_price_average,
        }
    }
}

/// Costs used by the break-even check.
pub const VERIFY_COSTS: CostSchedule = CostSchedule {
    c_q: 10.0,
    c_s: 1.0,
    c_p: 2.0,
};

/// Runs every oracle comparison on every grid point. Points with `k̂ < 0`
/// skip the checks whose formula needs `k̂ ≥ 0`.
///
/// Each comparison draws from its own seed derived from `seed`, the point
/// index and the check, so adding points never perturbs existing ones.
pub fn verify_grid(grid: &[GridPoint], n: u64, seed: u64, forms: &ClosedForms) -> Result<Vec<Comparison>> {
    verify_grid_at(grid, n, seed, forms, Z_MAX)
}

/// [`verify_grid`] with an explicit z bound for the tail floor.
pub fn verify_grid_at(grid: &[GridPoint], n: u64, seed: u64, forms: &ClosedForms, z_max: f64) -> Result<Vec<Comparison>> {
    let mut out = Vec::new();
    for (i, p) in grid.iter().enumerate() {
        let q = MarketQuery::new(p.k_star, p.k_hat, p.lambda)?;
        let res = tail_floor(&q, n, z_max);
        let point_seed = |check: u64| seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (check << 56);
        let mut push = |check: Check, closed_form: f64, mc: McEstimate, res: f64| {
            let z = mc.z_score(closed_form, res);
            out.push(Comparison { check, point: *p, closed_form, mc, z });
        };

        let mc = mc_expected_excess(&q, n, point_seed(1))?;
        push(Check::Excess, (forms.excess)(&q), mc, res);

        let gap = q.k_hat() - q.k_star() as f64;
        let symmetric = positive_part(-gap) + (-q.lambda() * gap.abs()).exp() / (2.0 * q.lambda());
        let mc = mc_expected_shortfall(&q, false, n, point_seed(2))?;
        push(Check::ShortfallUntruncated, symmetric, mc, res);

        if q.k_hat() >= 0.0 {
            let mc = mc_expected_shortfall(&q, true, n, point_seed(3))?;
            push(Check::Shortfall, (forms.shortfall)(&q)?, mc, res);

            let threshold = (forms.break_even)(&VERIFY_COSTS, &q)?;
            let template = ProfitTemplate {
                truncate_shortfall: true,
                ..ProfitTemplate::new(VERIFY_COSTS, threshold)
            };
            let mc = mc_expected_profit(&template, &q, n, point_seed(4))?;
            let scale = VERIFY_COSTS.c_s.max(VERIFY_COSTS.c_p);
            push(Check::BreakEven, 0.0, mc, res * scale);
        }
    }
    Ok(out)
}
