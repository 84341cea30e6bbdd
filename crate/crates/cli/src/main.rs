//! `qrebal`: run the portfolio rebalancing QAOA experiments from the shell.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qrebal::harness::campaign::{default_lambda_grid, linspace, monthly_periods};
use qrebal::harness::data::MIN_MONTH_DAYS;
use qrebal::harness::synthetic::{asx20_2017, EXPERIMENT_ASSETS};
use qrebal::harness::{
    derive_statistics, emit_results, run_rebalance_campaign, run_single_period_campaign,
    sweep_beta_gamma, Algorithm, Format, PenaltySetting, RebalanceScenario, ReturnsDataset,
    RunManifest, SolverSettings,
};
use qrebal::portfolio::annualize;
use qrebal::{oracle, PortfolioProblem};

/// Penalty scale used by `rebalance` unless `--a` is given.
const REBALANCE_PENALTY: f64 = 2.5;

#[derive(Parser, Debug)]
#[command(
    name = "qrebal",
    version,
    about = "Discrete portfolio rebalancing with soft- and hard-constraint QAOA"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Brute-force discrete efficient frontier and the feasible return/risk cloud.
    Frontier(CommonArgs),
    /// Depth-1 soft-circuit expectation over a beta x gamma grid.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value_t = 41)]
        beta_steps: usize,
        #[arg(long, default_value_t = 81)]
        gamma_steps: usize,
    },
    /// Optimise both circuits on one period and report cumulative cost curves.
    Single(CommonArgs),
    /// Monthly rebalancing over a lambda grid for each algorithm.
    Rebalance {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of monthly periods from the start of the data.
        #[arg(long, default_value_t = 6)]
        months: usize,
    },
    /// Write the seeded synthetic 20-asset returns file.
    Synth {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Scale {
    Daily,
    Annual,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum OutFormat {
    Csv,
    Json,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Csv => Format::Csv,
            OutFormat::Json => Format::Json,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct CommonArgs {
    /// Returns CSV: header `date,SYM1,SYM2,...`, one row per trading day.
    #[arg(long, conflicts_with_all = ["problem", "synthetic"])]
    data: Option<PathBuf>,
    /// Problem JSON `{N, D, lambda, T, A, mu, sigma, y}` instead of returns data.
    #[arg(long, conflicts_with = "synthetic")]
    problem: Option<PathBuf>,
    /// Use the built-in synthetic 2017 dataset generated with this seed.
    #[arg(long)]
    synthetic: Option<u64>,
    /// Comma-separated asset symbols.
    #[arg(long, value_delimiter = ',')]
    assets: Option<Vec<String>>,
    #[arg(long, value_enum, default_value_t = Scale::Annual)]
    scale: Scale,
    /// Net lots to hold.
    #[arg(long)]
    d: Option<i32>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Comma-separated lambda values; defaults to 0.0, 0.1, ..., 1.0.
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    /// Trading cost per traded asset.
    #[arg(long)]
    t: Option<f64>,
    /// Penalty scale, a number or `auto` (default: auto, 2.5 for rebalance).
    #[arg(long)]
    a: Option<String>,
    /// Comma-separated circuit depths.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
    p: Vec<usize>,
    /// Seeded optimiser starts per circuit.
    #[arg(long, default_value_t = 20)]
    seeds: usize,
    /// Override the 500 p evaluation budget per start.
    #[arg(long)]
    max_evals: Option<usize>,
    /// Comma-separated algorithms.
    #[arg(long, value_delimiter = ',', default_value = "soft,hard,brute")]
    algorithm: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "out")]
    #[serde(skip)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
}

impl CommonArgs {
    fn dataset(&self) -> Result<ReturnsDataset> {
        let full = match (&self.data, self.synthetic) {
            (Some(path), _) => ReturnsDataset::from_path(path)
                .with_context(|| format!("reading returns from {}", path.display()))?,
            (None, Some(seed)) => asx20_2017(seed),
            (None, None) => bail!("one of --data, --synthetic or --problem is required"),
        };
        match &self.assets {
            Some(symbols) => Ok(full.select(symbols)?),
            None if self.synthetic.is_some() && self.data.is_none() => {
                Ok(full.select(&EXPERIMENT_ASSETS)?)
            }
            None => Ok(full),
        }
    }

    fn penalty(&self) -> Result<PenaltySetting> {
        match self.a.as_deref() {
            None | Some("auto") => Ok(PenaltySetting::Auto),
            Some(text) => {
                let a: f64 = text
                    .parse()
                    .with_context(|| format!("--a expects a number or 'auto', got '{text}'"))?;
                if a.is_nan() || a <= 0.0 {
                    bail!("--a must be positive");
                }
                Ok(PenaltySetting::Fixed(a))
            }
        }
    }

    fn lambda_grid(&self) -> Vec<f64> {
        self.lambda_grid.clone().unwrap_or_else(default_lambda_grid)
    }

    fn algorithms(&self) -> Result<Vec<Algorithm>> {
        self.algorithm
            .iter()
            .map(|a| Ok(a.parse::<Algorithm>()?))
            .collect()
    }

    fn solver(&self) -> SolverSettings {
        SolverSettings {
            n_seeds: self.seeds,
            seed: self.seed,
            max_evaluations: self.max_evals,
        }
    }

    fn scaled(&self, mu: Vec<f64>, sigma: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
        match self.scale {
            Scale::Annual => annualize(&mu, &sigma),
            Scale::Daily => (mu, sigma),
        }
    }

    /// Single-period problem over the whole dataset, or the given problem file
    /// with any explicit flags applied on top.
    fn problem(&self) -> Result<PortfolioProblem> {
        let mut problem = match &self.problem {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str::<PortfolioProblem>(&text)
                    .with_context(|| format!("parsing problem {}", path.display()))?
            }
            None => {
                let data = self.dataset()?;
                let (mu, sigma) = derive_statistics(&data, 0..data.n_days())?;
                let (mu, sigma) = self.scaled(mu, sigma);
                PortfolioProblem::new(self.d.unwrap_or(4), 0.9, 0.0, 0.0, mu, sigma)?
            }
        };
        if let Some(d) = self.d {
            problem.net_lots = d;
        }
        if let Some(l) = self.lambda {
            problem.lambda = l;
        }
        if let Some(t) = self.t {
            problem.trading_cost = t;
        }
        problem.validate()?;
        let penalty = match self.penalty()? {
            PenaltySetting::Fixed(a) => a,
            PenaltySetting::Auto
                if self.problem.is_some() && self.a.is_none() && problem.penalty > 0.0 =>
            {
                problem.penalty
            }
            PenaltySetting::Auto => oracle::auto_penalty(&problem)?,
        };
        Ok(problem.with_penalty(penalty)?)
    }
}

struct Emitter<'a> {
    dir: &'a Path,
    format: Format,
    manifest: RunManifest,
}

impl<'a> Emitter<'a> {
    fn new(command: &str, args: &'a CommonArgs, extra: serde_json::Value) -> Result<Self> {
        let mut config = serde_json::to_value(args)?;
        if let (Some(map), serde_json::Value::Object(more)) = (config.as_object_mut(), extra) {
            map.extend(more);
        }
        Ok(Self {
            dir: &args.out,
            format: args.format.into(),
            manifest: RunManifest::new(command, args.seed, config),
        })
    }

    fn emit<T: qrebal::harness::output::Record>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let path = emit_results(rows, &self.dir.join(name), self.format)?;
        let file = path
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default();
        println!("wrote {}", path.display());
        self.manifest.outputs.push(file);
        Ok(())
    }

    fn finish(self) -> Result<()> {
        let path = self.manifest.write(self.dir)?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

fn frontier(args: &CommonArgs) -> Result<()> {
    let problem = args.problem()?;
    let frontier = oracle::efficient_frontier(&problem, &args.lambda_grid())?;
    let feasible = oracle::feasible_count(problem.n_assets, problem.net_lots)?;
    println!(
        "{} of {} encoded states are feasible; {} distinct portfolios; {} frontier points",
        feasible,
        1u64 << problem.n_spins(),
        frontier.cloud.len(),
        frontier.points.len()
    );
    let mut out = Emitter::new(
        "frontier",
        args,
        serde_json::json!({ "penalty": problem.penalty }),
    )?;
    out.emit("frontier", &frontier.points)?;
    out.emit("cloud", &frontier.cloud)?;
    out.finish()
}

fn sweep(args: &CommonArgs, beta_steps: usize, gamma_steps: usize) -> Result<()> {
    let problem = args.problem()?;
    let betas = linspace(0.0, std::f64::consts::PI, beta_steps);
    let gammas = linspace(0.0, 2.0 * std::f64::consts::PI, gamma_steps);
    let points = sweep_beta_gamma(&problem, &betas, &gammas)?;
    let (lo, hi) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.expectation), hi.max(p.expectation))
        });
    println!(
        "A = {}, expectation range [{lo:.6}, {hi:.6}]",
        problem.penalty
    );
    let extra = serde_json::json!({ "penalty": problem.penalty, "beta_steps": beta_steps, "gamma_steps": gamma_steps });
    let mut out = Emitter::new("sweep", args, extra)?;
    out.emit("sweep", &points)?;
    out.finish()
}

fn single(args: &CommonArgs) -> Result<()> {
    let problem = args.problem()?;
    let result = run_single_period_campaign(&problem, &args.p, &args.solver())?;
    for s in &result.summaries {
        println!(
            "{:>4} p={} mean <C>={:.6} best={:.6} uniform={:.6} feasible={:.4}",
            s.algorithm.as_str(),
            s.p,
            s.mean_expectation,
            s.best_expectation,
            s.baseline_mean,
            s.feasible_probability
        );
    }
    let mut out = Emitter::new(
        "single",
        args,
        serde_json::json!({ "penalty": problem.penalty }),
    )?;
    out.emit("curves", &result.curves)?;
    out.emit("seeds", &result.seeds)?;
    out.emit("summary", &result.summaries)?;
    out.finish()
}

fn rebalance(args: &CommonArgs, months: usize) -> Result<()> {
    if args.problem.is_some() {
        bail!("rebalance needs returns data (--data or --synthetic)");
    }
    let data = args.dataset()?;
    let periods = monthly_periods(
        &data,
        MIN_MONTH_DAYS,
        Some(months),
        args.scale == Scale::Annual,
    )?;
    if periods.len() < months {
        eprintln!("warning: only {} usable months in the data", periods.len());
    }
    let scenario = RebalanceScenario {
        periods,
        net_lots: args.d.unwrap_or(4),
        trading_cost: args.t.unwrap_or(0.015),
        lambda_grid: args.lambda_grid(),
        penalty: match args.a {
            None => PenaltySetting::Fixed(REBALANCE_PENALTY),
            Some(_) => args.penalty()?,
        },
        p_values: args.p.clone(),
        algorithms: args.algorithms()?,
        solver: args.solver(),
    };
    let result = run_rebalance_campaign(&scenario)?;
    for s in &result.summary {
        println!(
            "lambda={:.2} {:>5} p={} trades={:>2} adjusted={:+.6} risk={:.6}{}",
            s.lambda,
            s.algorithm.as_str(),
            s.p,
            s.total_trades,
            s.total_adjusted_return,
            s.mean_risk,
            if s.flagged_periods > 0 {
                format!(" ({} periods over trade bound)", s.flagged_periods)
            } else {
                String::new()
            }
        );
    }
    let extra = serde_json::json!({
        "months": months,
        "periods": scenario.periods.iter().map(|p| p.label.clone()).collect::<Vec<_>>(),
    });
    let mut out = Emitter::new("rebalance", args, extra)?;
    out.emit("periods", &result.periods)?;
    out.emit("summary", &result.summary)?;
    out.finish()
}

fn synth(seed: u64, out: &Path) -> Result<()> {
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let file = std::fs::File::create(out).with_context(|| format!("creating {}", out.display()))?;
    asx20_2017(seed).write_csv(std::io::BufWriter::new(file))?;
    println!("wrote {}", out.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Frontier(args) => frontier(&args),
        Command::Sweep {
            common,
            beta_steps,
            gamma_steps,
        } => sweep(&common, beta_steps, gamma_steps),
        Command::Single(args) => single(&args),
        Command::Rebalance { common, months } => rebalance(&common, months),
        Command::Synth { seed, out } => synth(seed, &out),
    }
}
