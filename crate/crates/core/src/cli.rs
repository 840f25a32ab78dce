//! The `privmarket` command line.
//!
//! Scalars are printed as `key=value` lines, tables as CSV. Exit codes:
//! 0 ok, 1 verification failure, 2 usage or invalid input, 3 domain error,
//! 4 I/O error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::MarketError;
use crate::fmt::number;
use crate::oracle::{default_grid, read_grid, verify_grid, ClosedForms, GridPoint};
use crate::pricing::{min_price_average, quote, CostSchedule, MarketQuery};
use crate::settlement::{settle, PriceSchedule, TradeOutcome, FLOW_CSV_HEADER};
use crate::simulator::{default_k_hat_grid, sweep, write_sweep_csv, Scenario, DEFAULT_SWEEP_LAMBDAS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub use crate::oracle::Z_MAX;

#[derive(Debug, Parser)]
#[command(name = "privmarket", version, about = "Option contracts for a privacy-aware market")]
pub struct Cli {
    /// Print shortest round-trip numbers instead of 6 significant digits.
    #[arg(long, global = true)]
    pub full_precision: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Option price, premium and break-even end price for one query.
    Quote(QuoteArgs),
    /// Settle one realized trade.
    Settle(SettleArgs),
    /// Write a (k_hat, lambda) pricing table.
    Sweep(SweepArgs),
    /// Run a scenario file.
    Simulate(SimulateArgs),
    /// Compare every closed form with its Monte Carlo oracle.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct QuoteArgs {
    /// Supplier unit price; defaults to c_s from --costs.
    #[arg(long = "c_s")]
    pub c_s: Option<f64>,
    #[arg(long = "k_star")]
    pub k_star: u64,
    #[arg(long = "k_hat", allow_negative_numbers = true)]
    pub k_hat: f64,
    #[arg(long)]
    pub lambda: f64,
    /// `c_q,c_s,c_p`
    #[arg(long, value_parser = parse_costs)]
    pub costs: Option<CostSchedule>,
}

#[derive(Debug, Args)]
pub struct SettleArgs {
    #[arg(long)]
    pub k: u64,
    #[arg(long = "k_star")]
    pub k_star: u64,
    #[arg(long = "p_opt")]
    pub p_opt: f64,
    #[arg(long = "p_s")]
    pub p_s: f64,
    /// `c_q,c_s,c_p`
    #[arg(long, value_parser = parse_costs)]
    pub costs: CostSchedule,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SWEEP_LAMBDAS)]
    pub lambdas: Vec<f64>,
    #[arg(long = "k_star", default_value_t = 100)]
    pub k_star: u64,
    /// Explicit k_hat grid; defaults to 0..=2·k_star in steps of k_star/100.
    #[arg(long = "k_hats", value_delimiter = ',', allow_hyphen_values = true)]
    pub k_hats: Option<Vec<f64>>,
    /// Supplier unit price; defaults to c_s from --costs, else 1.
    #[arg(long = "c_s")]
    pub c_s: Option<f64>,
    /// `c_q,c_s,c_p`; adds the min_price_avg column.
    #[arg(long, value_parser = parse_costs)]
    pub costs: Option<CostSchedule>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long = "out-dir")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// `default` or a CSV file with header `lambda,k_hat,k_star`.
    #[arg(long, default_value = "default")]
    pub grid: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub n: u64,
    #[arg(long, env = "PRIVMARKET_SEED", default_value_t = 2015)]
    pub seed: u64,
}

fn parse_costs(s: &str) -> Result<CostSchedule, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [c_q, c_s, c_p] = parts.as_slice() else {
        return Err(format!("expected c_q,c_s,c_p, got `{s}`"));
    };
    let num = |name: &str, v: &str| v.parse::<f64>().map_err(|e| format!("{name}: {e}"));
    CostSchedule::new(num("c_q", c_q)?, num("c_s", c_s)?, num("c_p", c_p)?).map_err(|e| e.to_string())
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<MarketError> for Failure {
    fn from(e: MarketError) -> Self {
        let code = match &e {
            MarketError::Domain(_) => EXIT_DOMAIN,
            MarketError::Io(_) => EXIT_IO,
            _ => EXIT_USAGE,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_IO,
            message: format!("io: {e}"),
        }
    }
}

fn io_at(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

type CmdResult = Result<i32, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{rendered}") } else { write!(err, "{rendered}") };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> CmdResult {
    let digits = if cli.full_precision { None } else { Some(6) };
    match &cli.command {
        Command::Quote(a) => cmd_quote(a, digits, out),
        Command::Settle(a) => cmd_settle(a, digits, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Simulate(a) => cmd_simulate(a, digits, out),
        Command::Verify(a) => {
            let grid = if a.grid == "default" {
                default_grid()
            } else {
                let path = Path::new(&a.grid);
                read_grid(fs::File::open(path).map_err(io_at(path))?)?
            };
            run_verify(&grid, a.n, a.seed, &ClosedForms::default(), digits, out)
        }
    }
}

fn kv(out: &mut dyn Write, key: &str, value: f64, digits: Option<usize>) -> std::io::Result<()> {
    writeln!(out, "{key}={}", number(value, digits))
}

fn cmd_quote(a: &QuoteArgs, digits: Option<usize>, out: &mut dyn Write) -> CmdResult {
    let c_s = match (a.c_s, a.costs) {
        (Some(c), _) => c,
        (None, Some(costs)) => costs.c_s,
        (None, None) => {
            return Err(Failure {
                code: EXIT_USAGE,
                message: "quote needs --c_s or --costs".into(),
            })
        }
    };
    if !(c_s.is_finite() && c_s >= 0.0) {
        return Err(MarketError::invalid("c_s", format!("must be finite and >= 0, got {c_s}")).into());
    }
    let q = MarketQuery::new(a.k_star, a.k_hat, a.lambda)?;
    let threshold = a.costs.map(|costs| min_price_average(&costs, &q)).transpose()?;
    let quote = quote(c_s, &q);
    kv(out, "option_price", quote.price, digits)?;
    kv(out, "premium", quote.premium, digits)?;
    if let Some(t) = threshold {
        kv(out, "min_price_average", t, digits)?;
    }
    Ok(EXIT_OK)
}

fn cmd_settle(a: &SettleArgs, digits: Option<usize>, out: &mut dyn Write) -> CmdResult {
    let trade = TradeOutcome::new(a.k, a.k_star, a.costs, PriceSchedule::new(a.p_opt, a.p_s)?)?;
    let f = settle(&trade);
    writeln!(out, "{FLOW_CSV_HEADER}")?;
    writeln!(out, "{}", f.csv_row())?;
    kv(out, "customer_outlay", f.customer_outlay, digits)?;
    kv(out, "supplier_revenue", f.supplier_revenue, digits)?;
    kv(out, "query_fee", f.query_fee, digits)?;
    kv(out, "production_cost", f.production_cost, digits)?;
    kv(out, "broker_profit", f.broker_profit, digits)?;
    Ok(EXIT_OK)
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> CmdResult {
    let c_s = a.c_s.or(a.costs.map(|c| c.c_s)).unwrap_or(1.0);
    let grid = a.k_hats.clone().unwrap_or_else(|| default_k_hat_grid(a.k_star));
    let rows = sweep(&grid, &a.lambdas, c_s, a.k_star, a.costs.as_ref())?;
    let mut buf = Vec::new();
    write_sweep_csv(&rows, a.costs.is_some(), &mut buf)?;
    fs::write(&a.out, buf).map_err(io_at(&a.out))?;
    writeln!(out, "rows={}", rows.len())?;
    Ok(EXIT_OK)
}

fn cmd_simulate(a: &SimulateArgs, digits: Option<usize>, out: &mut dyn Write) -> CmdResult {
    let text = fs::read_to_string(&a.scenario).map_err(io_at(&a.scenario))?;
    let scenario = Scenario::from_json(&text).map_err(|e| Failure {
        code: EXIT_USAGE,
        message: format!("{}: {e}", a.scenario.display()),
    })?;
    let run = scenario.prepare()?.run()?;

    fs::create_dir_all(&a.out_dir).map_err(io_at(&a.out_dir))?;
    let trials_path = a.out_dir.join("trials.csv");
    let mut trials = Vec::new();
    run.write_trials_csv(&mut trials)?;
    fs::write(&trials_path, trials).map_err(io_at(&trials_path))?;

    let summary_path = a.out_dir.join("summary.txt");
    let mut summary = Vec::new();
    run.summary.write_key_values(&mut summary, digits)?;
    fs::write(&summary_path, &summary).map_err(io_at(&summary_path))?;
    out.write_all(&summary)?;
    Ok(EXIT_OK)
}

/// Runs the oracle comparisons and prints one CSV row per comparison plus a
/// `status=` line. Returns exit 0 iff every |z| ≤ [`Z_MAX`].
pub fn run_verify(
    grid: &[GridPoint],
    n: u64,
    seed: u64,
    forms: &ClosedForms,
    digits: Option<usize>,
    out: &mut dyn Write,
) -> CmdResult {
    if n < 1000 {
        return Err(MarketError::invalid("n", format!("verify needs n >= 1000, got {n}")).into());
    }
    let comparisons = verify_grid(grid, n, seed, forms)?;
    writeln!(out, "check,lambda,k_hat,k_star,closed_form,mc_mean,mc_stderr,z")?;
    let mut max_z: f64 = 0.0;
    let mut failures = 0;
    for c in &comparisons {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            c.check.name(),
            c.point.lambda,
            c.point.k_hat,
            c.point.k_star,
            number(c.closed_form, digits),
            number(c.mc.mean, digits),
            number(c.mc.stderr, digits),
            number(c.z, digits)
        )?;
        max_z = max_z.max(c.z.abs());
        if !c.passes(Z_MAX) {
            failures += 1;
        }
    }
    writeln!(out, "comparisons={}", comparisons.len())?;
    writeln!(out, "failures={failures}")?;
    kv(out, "max_abs_z", max_z, digits)?;
    writeln!(out, "status={}", if failures == 0 { "pass" } else { "fail" })?;
    Ok(if failures == 0 { EXIT_OK } else { EXIT_VERIFY_FAILED })
}
