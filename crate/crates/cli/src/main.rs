use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lookahead_core::engine::{Schedule, Session};
use lookahead_core::gp::{fit_hyperparameters, Dataset, FitConfig, Point};
use lookahead_core::harness::{self, EngineOptions, ExperimentConfig};
use lookahead_core::seed;
use lookahead_core::testbed::{evaluate_oracle, true_value, OracleKind, OracleSpec};

#[derive(Parser)]
#[command(
    name = "lookahead",
    version,
    about = "Time-varying Bayesian optimization with two-step lookahead"
)]
struct Cli {
    /// Base seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replication-level parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output path (directory for experiments, file for single results).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every strategy and replication of an experiment config.
    Bench { config: PathBuf },
    /// Run one strategy for one replication and print its trace.
    Run(RunArgs),
    /// Create a session file for the ask/tell loop.
    Init(InitArgs),
    /// Print the next decision of a session.
    Ask {
        #[arg(long)]
        session: PathBuf,
    },
    /// Report the observation for the pending decision.
    Tell {
        #[arg(long)]
        session: PathBuf,
        #[arg(allow_negative_numbers = true)]
        y: f64,
    },
    /// Fit kernel hyperparameters to a CSV dataset (columns t, x_1..x_d, y).
    Fit { data: PathBuf },
    /// Query a synthetic oracle.
    #[command(subcommand)]
    Oracle(OracleCommand),
    /// Rewrite plot data from a stored results directory.
    Plotdata { results: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    oracle: OracleKind,
    #[arg(long)]
    strategy: String,
    #[arg(long, default_value_t = 45)]
    budget: usize,
    #[arg(long, default_value_t = 15)]
    n_start: usize,
    #[arg(long, default_value_t = 0.0)]
    t_first: f64,
    #[arg(long, default_value_t = 1.0)]
    t_start: f64,
    #[arg(long, default_value_t = 4.0)]
    horizon: f64,
}

#[derive(Args)]
struct InitArgs {
    #[arg(long)]
    session: PathBuf,
    #[arg(long, default_value = "r2LEY")]
    strategy: String,
    /// Input dimension (taken from the data when given).
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    horizon: f64,
    /// Number of scheduled decisions, evenly spaced up to the horizon.
    #[arg(long)]
    decisions: usize,
    /// Time before the first decision (defaults to the last data time, or 0).
    #[arg(long)]
    start: Option<f64>,
    /// Initial observations, CSV with columns t, x_1..x_d, y in [0, 1] coordinates.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    mc_samples: Option<usize>,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Evaluate at native coordinates.
    Eval {
        #[arg(long)]
        oracle: OracleKind,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        noise_free: bool,
        #[arg(required = true, allow_negative_numbers = true)]
        x: Vec<f64>,
    },
}

fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut reader =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let width = reader.headers()?.len();
    if width < 3 {
        bail!("{}: expected columns t, x_1..x_d, y", path.display());
    }
    let mut data = Dataset::new(width - 2);
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let v: Vec<f64> = row
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .with_context(|| format!("{}: row {} is not numeric", path.display(), i + 1))?;
        data.push(Point::new(v[1..width - 1].to_vec())?, v[0], v[width - 1])
            .with_context(|| format!("{}: row {}", path.display(), i + 1))?;
    }
    Ok(data)
}

fn bench(cli: &Cli, path: &Path) -> Result<()> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    let dir = cli.out.clone().unwrap_or_else(|| config.output_dir.clone());
    let result = harness::run_and_emit(&config, &dir)?;
    let summary = harness::summarize(&result);
    println!(
        "{:<10} {:>6} {:>12} {:>12} {:>12}",
        "strategy", "fails", "mean f", "std f", "mean dist"
    );
    for s in &summary.strategies {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.5}"));
        println!(
            "{:<10} {:>6} {:>12} {:>12} {:>12}",
            s.strategy,
            s.failures,
            fmt(s.final_value.as_ref().map(|v| v.mean)),
            fmt(s.final_value.as_ref().map(|v| v.std)),
            fmt(s.final_distance.as_ref().map(|v| v.mean)),
        );
    }
    println!("results written to {}", dir.display());
    Ok(())
}

fn run(cli: &Cli, args: &RunArgs) -> Result<()> {
    let mut config = ExperimentConfig::new(
        args.oracle.clone(),
        &[&args.strategy],
        args.budget,
        args.n_start,
        args.t_start,
        args.horizon,
    );
    config.t_first = args.t_first;
    config.seed = cli.seed.unwrap_or(0);
    let result = match &cli.out {
        Some(dir) => harness::run_and_emit(&config, dir)?,
        None => harness::run_experiment(&config)?,
    };
    let cell = &result.cells[0];
    let domain = config.oracle_spec().domain();
    if let Some(trace) = &cell.trace {
        for s in &trace.steps {
            let x: Vec<String> = domain
                .to_native(&s.x)
                .iter()
                .map(|v| format!("{v:.6}"))
                .collect();
            println!(
                "{:>4} t={:.4} x=[{}] y={:.6}",
                s.index,
                s.t,
                x.join(", "),
                s.observation
            );
        }
    }
    if let Some(e) = &cell.error {
        bail!("{} failed: {e}", args.strategy);
    }
    if let Some(v) = cell.final_value {
        println!("final f(x_T, T) = {v:.6}");
    }
    if let Some(d) = cell.final_distance {
        println!("distance to maximizer = {d:.6}");
    }
    Ok(())
}

fn init(cli: &Cli, args: &InitArgs) -> Result<()> {
    let data = match (&args.data, args.dim) {
        (Some(path), _) => read_dataset(path)?,
        (None, Some(d)) if d > 0 => Dataset::new(d),
        _ => bail!("either --data or a positive --dim is required"),
    };
    if let Some(d) = args.dim {
        if d != data.dim() {
            bail!("--dim {d} disagrees with the data dimension {}", data.dim());
        }
    }
    let start = args.start.or(data.last_time()).unwrap_or(0.0);
    let schedule = Schedule::uniform(start, args.horizon, args.decisions)?;
    let mut engine = EngineOptions::default();
    if let Some(n) = args.mc_samples {
        engine.mc_samples = n;
    }
    let mut config = engine.strategy_config(&args.strategy, false)?;
    config.seed = cli.seed.unwrap_or(0);
    let session = Session::new(config, data, schedule)?;
    session.save(&args.session)?;
    println!(
        "session written to {} ({} decisions)",
        args.session.display(),
        args.decisions
    );
    Ok(())
}

fn ask(path: &Path) -> Result<()> {
    let mut session = Session::load(path)?;
    let (x, t) = session.ask()?;
    session.save(path)?;
    println!("{}", serde_json::json!({ "x": x, "t": t }));
    Ok(())
}

fn tell(path: &Path, y: f64) -> Result<()> {
    let mut session = Session::load(path)?;
    session.tell(y)?;
    session.save(path)?;
    let done = session.position();
    let total = session.schedule().len();
    println!("recorded y = {y} ({done}/{total} decisions)");
    if session.is_complete() {
        if let Some((x, y)) = session.trace().final_decision() {
            println!("final decision x = {x:?}, y = {y}");
        }
    }
    Ok(())
}

fn fit(cli: &Cli, path: &Path) -> Result<()> {
    let data = read_dataset(path)?;
    let mut rng = seed::rng(cli.seed.unwrap_or(0));
    let result = fit_hyperparameters(&data, &FitConfig::default(), None, &mut rng)?;
    let h = result.hyperparameters;
    println!(
        "{}",
        serde_json::json!({
            "theta_x": h.theta_x,
            "theta_t": h.theta_t,
            "noise_variance": h.noise_variance,
            "output_scale": h.output_scale,
            "log_likelihood": result.log_likelihood,
        })
    );
    Ok(())
}

fn oracle(cli: &Cli, cmd: &OracleCommand) -> Result<()> {
    let OracleCommand::Eval {
        oracle,
        t,
        noise_free,
        x,
    } = cmd;
    let spec = OracleSpec::new(oracle.clone());
    let y = if *noise_free {
        true_value(&spec, x, *t)?
    } else {
        evaluate_oracle(&spec, x, *t, &mut seed::rng(cli.seed.unwrap_or(0)))?
    };
    println!("{y}");
    Ok(())
}

fn plotdata(cli: &Cli, dir: &Path) -> Result<()> {
    let result = harness::load_results(dir)?;
    let out = cli.out.clone().unwrap_or_else(|| dir.to_path_buf());
    harness::write_plotdata(&result, &out)?;
    println!(
        "plot data written to {}",
        out.join(harness::PLOTDATA_DIR).display()
    );
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    match &cli.command {
        Command::Bench { config } => bench(cli, config),
        Command::Run(args) => run(cli, args),
        Command::Init(args) => init(cli, args),
        Command::Ask { session } => ask(session),
        Command::Tell { session, y } => tell(session, *y),
        Command::Fit { data } => fit(cli, data),
        Command::Oracle(cmd) => oracle(cli, cmd),
        Command::Plotdata { results } => plotdata(cli, results),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
