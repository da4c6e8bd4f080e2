use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use rating_debias::crossval::{fit_cv, CvConfig, CvReport, Refit, DEFAULT_EXTENSIONS};
use rating_debias::datamodel::{ObservationSet, RatingMatrix};
use rating_debias::estimator::{fit, parse_lambda_list, Lambda, Solution};
use rating_debias::harness::{run_scenario, summarize, tally_lambdas, write_csv, ScenarioConfig};
use rating_debias::poset::PartialOrder;

#[derive(Parser)]
#[command(name = "rating-debias", version, about = "Ordering-constrained bias correction for ratings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit qualities and biases at one regularization weight.
    Fit {
        #[command(flatten)]
        input: Input,
        /// Weight: a number, `2^k` or `inf`.
        #[arg(long, default_value = "0")]
        lambda: Lambda,
        #[command(flatten)]
        output: Output,
    },
    /// Choose the weight by cross-validation, then fit.
    Cv {
        #[command(flatten)]
        input: Input,
        /// Comma-separated weights; defaults to 0, 2^-9 .. 2^5, inf.
        #[arg(long, alias = "grid")]
        lambda_grid: Option<String>,
        /// Sampled extensions for interpolation.
        #[arg(long, default_value_t = DEFAULT_EXTENSIONS)]
        extensions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep the training-set fit instead of refitting on all cells.
        #[arg(long)]
        train_only: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Run a seeded simulation scenario and write per-run CSV rows.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct Input {
    /// Ratings as `course,slot,value` CSV with a header row.
    #[arg(long)]
    ratings: PathBuf,
    /// Ordering file.
    #[arg(long)]
    order: PathBuf,
}

#[derive(Args)]
struct Output {
    /// Write the estimated biases as `course,slot,value` CSV.
    #[arg(long)]
    bias_out: Option<PathBuf>,
    /// Print one JSON document instead of CSV tables.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// `key = value` config file; flags below override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    runs: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    lambda_grid: Option<String>,
    #[arg(long)]
    estimators: Option<String>,
    #[arg(long)]
    extensions: Option<String>,
    #[arg(long)]
    groups: Option<String>,
    #[arg(long)]
    fraction: Option<String>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print mean error per estimator (and the cv weight histogram) to stderr.
    #[arg(long)]
    summary: bool,
}

fn load(input: &Input) -> Result<(RatingMatrix, ObservationSet, PartialOrder)> {
    let (y, omega) = RatingMatrix::read_csv_path(&input.ratings)
        .with_context(|| format!("reading ratings {}", input.ratings.display()))?;
    let order =
        PartialOrder::from_path(&input.order).with_context(|| format!("reading ordering {}", input.order.display()))?;
    Ok((y, omega, order))
}

fn emit(
    sol: &Solution,
    omega: &ObservationSet,
    output: &Output,
    report: Option<&CvReport>,
) -> Result<()> {
    if let Some(path) = &output.bias_out {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        sol.b_hat.write_csv(omega, BufWriter::new(f))?;
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if output.json {
        let mut v = serde_json::json!({
            "lambda": sol.lambda,
            "x_hat": sol.x_hat.0,
            "diagnostics": sol.diagnostics,
        });
        if let Some(report) = report {
            v["cv"] = serde_json::to_value(report)?;
        }
        serde_json::to_writer_pretty(&mut out, &v)?;
        writeln!(out)?;
        return Ok(());
    }
    if let Some(report) = report {
        writeln!(out, "lambda,cv_error")?;
        for (l, e) in &report.errors {
            writeln!(out, "{l},{e}")?;
        }
        writeln!(out)?;
    }
    writeln!(out, "course,quality")?;
    for (i, x) in sol.x_hat.0.iter().enumerate() {
        writeln!(out, "{i},{x}")?;
    }
    writeln!(out)?;
    writeln!(out, "course,slot,bias")?;
    let bias = sol.b_hat.gather(omega)?;
    for (e, b) in omega.elements().iter().zip(bias) {
        writeln!(out, "{},{},{b}", e.course, e.slot)?;
    }
    writeln!(out)?;
    writeln!(out, "# lambda: {}", sol.lambda)?;
    writeln!(out, "# diagnostics: {}", serde_json::to_string(&sol.diagnostics)?)?;
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut cfg = match (&args.config, &args.scenario) {
        (Some(path), _) => ScenarioConfig::from_path(path).with_context(|| format!("reading {}", path.display()))?,
        (None, Some(s)) => ScenarioConfig::defaults(s.parse()?),
        (None, None) => bail!("give --scenario or --config"),
    };
    let flags = [
        ("scenario", &args.scenario),
        ("d", &args.d),
        ("n", &args.n),
        ("sigma", &args.sigma),
        ("eta", &args.eta),
        ("runs", &args.runs),
        ("seed", &args.seed),
        ("lambda_grid", &args.lambda_grid),
        ("estimators", &args.estimators),
        ("extensions", &args.extensions),
        ("groups", &args.groups),
        ("fraction", &args.fraction),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            // The scenario flag only resets estimators when it changes.
            if key == "scenario" && v.trim() == cfg.scenario.name() {
                continue;
            }
            cfg.set(key, v)?;
        }
    }
    let rows = run_scenario(&cfg)?;
    match &args.out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_csv(&rows, BufWriter::new(f))?;
        }
        None => write_csv(&rows, io::stdout().lock())?,
    }
    if args.summary {
        for (name, mean, count) in summarize(&rows) {
            eprintln!("{name}: mean sq_error {mean:.6e} over {count} runs");
        }
        if rows.iter().any(|r| r.estimator == "cv") {
            for (l, c) in tally_lambdas(&rows, &cfg.lambda_grid) {
                eprintln!("cv selected lambda={l}: {c}");
            }
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Fit { input, lambda, output } => {
            let (y, omega, order) = load(&input)?;
            let sol = fit(&y, &order, lambda, &omega)?;
            emit(&sol, &omega, &output, None)
        }
        Command::Cv {
            input,
            lambda_grid,
            extensions,
            seed,
            train_only,
            output,
        } => {
            let (y, omega, order) = load(&input)?;
            let grid = match lambda_grid {
                Some(g) => parse_lambda_list(&g)?,
                None => Lambda::default_grid(),
            };
            let mut cfg = CvConfig::new(grid, extensions, seed);
            if train_only {
                cfg.refit = Refit::TrainOnly;
            }
            let (sol, report) = fit_cv(&y, &order, &omega, &cfg)?;
            emit(&sol, &omega, &output, Some(&report))
        }
        Command::Simulate(args) => simulate(args),
    }
}
