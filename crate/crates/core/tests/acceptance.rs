//! Exit criteria. Run with `cargo test --release --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use privmarket::oracle::{default_grid, verify_grid, Check, ClosedForms, Comparison, Z_MAX};
use privmarket::pricing::{
    expected_shortfall, min_price_average, min_price_average_assembled, min_price_deterministic, option_price,
    CostSchedule, MarketQuery,
};
use privmarket::settlement::{broker_profit, settle, PriceSchedule, TradeOutcome};
use privmarket::simulator::{run_scenario, EndPrice, Model, Scenario, StockDistribution, SupplierSpec};
use rand::{Rng, SeedableRng};

const N: u64 = 1_000_000;
const SEED: u64 = 20_150_101;

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn report(results: &[Outcome]) {
    println!();
    for r in results {
        println!("[{}] {} {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.id, r.title, r.detail);
    }
}

fn grid_comparisons() -> (Vec<Comparison>, Duration) {
    let start = Instant::now();
    let c = verify_grid(&default_grid(), N, SEED, &ClosedForms::default()).unwrap();
    (c, start.elapsed())
}

fn check_oracle(comparisons: &[Comparison], checks: &[Check]) -> (bool, String) {
    let selected: Vec<&Comparison> = comparisons.iter().filter(|c| checks.contains(&c.check)).collect();
    let worst = selected.iter().map(|c| c.z.abs()).fold(0.0, f64::max);
    let failed = selected.iter().filter(|c| !c.passes(Z_MAX)).count();
    // the same test without the rare-tail floor, reported for transparency
    let unfloored: Vec<f64> = selected
        .iter()
        .filter(|c| (c.closed_form - c.mc.mean).abs() > Z_MAX * c.mc.stderr)
        .map(|c| (c.closed_form - c.mc.mean).abs())
        .collect();
    let largest_unfloored = unfloored.iter().copied().fold(0.0, f64::max);
    (
        failed == 0 && !selected.is_empty(),
        format!(
            "{} points, {failed} outside 5 stderr, max |z| = {worst:.3} (unfloored test: {} rare-tail points fail, largest |diff| {largest_unfloored:.1e})",
            selected.len(),
            unfloored.len()
        ),
    )
}

fn ac1(comparisons: &[Comparison], elapsed: Duration) -> Outcome {
    let (ok, detail) = check_oracle(comparisons, &[Check::Excess]);
    let excess_points = comparisons.iter().filter(|c| c.check == Check::Excess).count();
    Outcome {
        id: "AC1",
        title: "option-price expectation vs Monte Carlo",
        pass: ok && excess_points == 32 && elapsed < Duration::from_secs(30),
        detail: format!("{detail}; whole grid oracle run {:.1}s (limit 30s)", elapsed.as_secs_f64()),
    }
}

fn ac2(comparisons: &[Comparison]) -> Outcome {
    let (ok_t, d_t) = check_oracle(comparisons, &[Check::Shortfall]);
    let (ok_u, d_u) = check_oracle(comparisons, &[Check::ShortfallUntruncated]);
    Outcome {
        id: "AC2",
        title: "shortfall expectation vs Monte Carlo",
        pass: ok_t && ok_u,
        detail: format!("truncated: {d_t}; untruncated counterpart: {d_u}"),
    }
}

fn ac3(comparisons: &[Comparison]) -> Outcome {
    let q = MarketQuery::new(100, 100.0, 0.1).unwrap();
    let price = option_price(1.0, &q);
    let shortfall = expected_shortfall(&q).unwrap();
    let threshold = min_price_average(&CostSchedule::new(10.0, 1.0, 2.0).unwrap(), &q).unwrap();
    let mc = comparisons
        .iter()
        .find(|c| c.check == Check::Excess && c.point.lambda == 0.1 && c.point.k_hat == 100.0)
        .expect("anchor point on grid");
    let pass = (price - 5.0).abs() <= 1e-9
        && mc.passes(Z_MAX)
        && (shortfall - 4.997503).abs() <= 1e-5
        && (threshold - 1.149950).abs() <= 1e-5;
    Outcome {
        id: "AC3",
        title: "anchor values",
        pass,
        detail: format!(
            "option_price={price:.9} (MC {:.6} ± {:.6}), shortfall={shortfall:.6}, min_price_average={threshold:.6}",
            mc.mc.mean, mc.mc.stderr
        ),
    }
}

fn ac4() -> Outcome {
    let schedules = [
        CostSchedule::new(10.0, 1.0, 2.0).unwrap(),
        CostSchedule::new(0.0, 0.5, 3.0).unwrap(),
        CostSchedule::new(100.0, 2.0, 2.0).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for costs in &schedules {
        for p in default_grid() {
            let q = MarketQuery::new(p.k_star, p.k_hat, p.lambda).unwrap();
            let a = min_price_average(costs, &q).unwrap();
            let b = min_price_average_assembled(costs, &q).unwrap();
            let scale = a.abs().max(b.abs());
            if scale > 0.0 {
                worst = worst.max((a - b).abs() / scale);
            }
        }
    }
    Outcome {
        id: "AC4",
        title: "break-even closed form equals its assembly",
        pass: worst <= 1e-12,
        detail: format!("max relative difference {worst:.3e} over 3 cost schedules × 32 points (limit 1e-12)"),
    }
}

fn ac5(dir: &Path) -> Outcome {
    let path = dir.join("sweep.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_privmarket"))
        .args(["sweep", "--out", path.to_str().unwrap(), "--c_s", "1", "--k_star", "100"])
        .output()
        .unwrap()
        .status;
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    let rows: Vec<(f64, f64, f64, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
    let mut problems = Vec::new();
    let mut lambdas: Vec<f64> = rows.iter().map(|r| r.1).collect();
    lambdas.dedup();
    for &lambda in &lambdas {
        let curve: Vec<_> = rows.iter().filter(|r| r.1 == lambda).collect();
        let peak = curve.iter().max_by(|a, b| a.3.partial_cmp(&b.3).unwrap()).unwrap();
        if peak.0 != 100.0 || (peak.3 - 1.0 / (2.0 * lambda)).abs() > 1e-12 * peak.3 {
            problems.push(format!("λ={lambda}: premium peak {} at k̂={}", peak.3, peak.0));
        }
        for w in curve.windows(2) {
            let (a, b) = (w[0], w[1]);
            let premium_ok = if b.0 <= 100.0 { b.3 > a.3 } else { b.3 < a.3 };
            // noise part of the option price, against distance from demand
            let noise = |r: &(f64, f64, f64, f64)| r.2 - (r.0 - 100.0).max(0.0);
            let (da, db) = ((a.0 - 100.0).abs(), (b.0 - 100.0).abs());
            let decay_ok = if db < da { noise(b) > noise(a) } else { noise(b) < noise(a) };
            if !premium_ok || !decay_ok {
                problems.push(format!("λ={lambda}: shape broken between k̂={} and k̂={}", a.0, b.0));
            }
        }
    }
    Outcome {
        id: "AC5",
        title: "figure shapes from the sweep CSV",
        pass: status.success() && lambdas.len() == 3 && rows.len() == 603 && problems.is_empty(),
        detail: if problems.is_empty() {
            format!("{} rows, λ ∈ {lambdas:?}: unimodal premium peaked at k̂=k* with c_s/(2λ), monotone decay", rows.len())
        } else {
            problems.join("; ")
        },
    }
}

fn posterior(p_s: f64) -> Scenario {
    Scenario {
        model: Model::Posterior,
        suppliers: SupplierSpec::Generate {
            count: 10,
            stock: StockDistribution::Constant(10),
        },
        k_star: 100,
        lambda: 0.1,
        costs: CostSchedule::new(10.0, 1.0, 2.0).unwrap(),
        p_s: EndPrice::Fixed(p_s),
        delta: 0.0,
        k_hat: Some(100.0),
        trials: 100_000,
        seed: SEED,
    }
}

fn ac6() -> Outcome {
    let start = Instant::now();
    let q = MarketQuery::new(100, 100.0, 0.1).unwrap();
    let threshold = min_price_average(&CostSchedule::new(10.0, 1.0, 2.0).unwrap(), &q).unwrap();
    let above = run_scenario(&posterior(threshold * 1.05)).unwrap().summary;
    let below = run_scenario(&posterior(threshold * 0.95)).unwrap().summary;
    let elapsed = start.elapsed();
    let pass = above.mean_profit - 5.0 * above.stderr_profit > 0.0
        && below.mean_profit + 5.0 * below.stderr_profit < 0.0
        && elapsed < Duration::from_secs(10);
    Outcome {
        id: "AC6",
        title: "break-even price separates profit from loss",
        pass,
        detail: format!(
            "×1.05: {:.4} ± {:.4}; ×0.95: {:.4} ± {:.4}; {:.2}s (limit 10s)",
            above.mean_profit,
            above.stderr_profit,
            below.mean_profit,
            below.stderr_profit,
            elapsed.as_secs_f64()
        ),
    }
}

fn ac7() -> Outcome {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(SEED);
    let (mut identity_breaks, mut above, mut above_unprofitable) = (0, 0, 0);
    for _ in 0..10_000 {
        let k_star = rng.random_range(1..=500u64);
        let k = rng.random_range(0..=1000u64);
        let costs = CostSchedule::new(
            rng.random_range(0.0..500.0),
            rng.random_range(0.0..10.0),
            rng.random_range(0.0..20.0),
        )
        .unwrap();
        let p_opt = rng.random_range(0.0..200.0);
        let p_s = rng.random_range(0.0..25.0);
        let t = TradeOutcome::new(k, k_star, costs, PriceSchedule::new(p_opt, p_s).unwrap()).unwrap();
        let f = settle(&t);
        let recomputed = f.customer_outlay - f.supplier_revenue - f.query_fee - f.production_cost;
        if f.broker_profit.to_bits() != recomputed.to_bits() || f.broker_profit.to_bits() != broker_profit(&t).to_bits() {
            identity_breaks += 1;
        }
        if p_s > min_price_deterministic(&costs, k, k_star, p_opt).unwrap() {
            above += 1;
            if f.broker_profit <= 0.0 {
                above_unprofitable += 1;
            }
        }
    }
    Outcome {
        id: "AC7",
        title: "settlement conservation and deterministic break-even",
        pass: identity_breaks == 0 && above_unprofitable == 0 && above > 0,
        detail: format!(
            "10000 trades: {identity_breaks} identity breaks; {above} priced above threshold, {above_unprofitable} unprofitable"
        ),
    }
}

fn ac8(dir: &Path) -> Outcome {
    let bin = env!("CARGO_BIN_EXE_privmarket");
    let verify = || {
        Command::new(bin)
            .args(["verify", "--n", "200000", "--seed", "77"])
            .env_remove("PRIVMARKET_SEED")
            .output()
            .unwrap()
    };
    let scenario = dir.join("scenario.json");
    std::fs::write(
        &scenario,
        r#"{"model":"forward","suppliers":{"generate":{"count":12,"stock":{"uniform":{"a":0,"b":16}}}},
            "k_star":100,"lambda":0.1,"costs":{"c_q":10,"c_s":1,"c_p":2},"p_s":"auto","delta":0.01,
            "trials":20000,"seed":77}"#,
    )
    .unwrap();
    let simulate = |out: &str| {
        let out_dir = dir.join(out);
        let o = Command::new(bin)
            .args(["simulate", "--scenario", scenario.to_str().unwrap(), "--out-dir", out_dir.to_str().unwrap()])
            .output()
            .unwrap();
        let trials = std::fs::read(out_dir.join("trials.csv")).unwrap_or_default();
        let summary = std::fs::read(out_dir.join("summary.txt")).unwrap_or_default();
        (o.status.success(), o.stdout, trials, summary)
    };
    let (v1, v2) = (verify(), verify());
    let (s1, s2) = (simulate("run1"), simulate("run2"));
    let pass = v1.status.success() && v1.stdout == v2.stdout && s1.0 && s1 == s2 && !s1.2.is_empty();
    Outcome {
        id: "AC8",
        title: "fixed-seed runs are byte-identical",
        pass,
        detail: format!(
            "verify stdout {} bytes, simulate trials.csv {} bytes + summary {} bytes, identical across two runs: {}",
            v1.stdout.len(),
            s1.2.len(),
            s1.3.len(),
            v1.stdout == v2.stdout && s1 == s2
        ),
    }
}

#[test]
fn acceptance_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let (comparisons, elapsed) = grid_comparisons();
    let results = vec![
        ac1(&comparisons, elapsed),
        ac2(&comparisons),
        ac3(&comparisons),
        ac4(),
        ac5(dir.path()),
        ac6(),
        ac7(),
        ac8(dir.path()),
    ];
    report(&results);
    let failed: Vec<&str> = results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
