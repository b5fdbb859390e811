use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use slate_bandits::etc::evaluate_regret_bound;
use slate_bandits::harness::{
    build_run_env, build_table, prepare_bids, preset, run_experiment, summary, write_report, ExperimentConfig,
    HorizonMode, PRESETS,
};
use slate_bandits::ingestion::{build_bid_distribution, parse_bid_log, DEFAULT_BOOTSTRAP_N};
use slate_bandits::{par, Result};

#[derive(Parser)]
#[command(name = "slate-bandit", version, about = "Slate bandit experiments with non-separable rewards")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct Overrides {
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of independent replications.
    #[arg(long, global = true)]
    replications: Option<usize>,
    /// Single horizon T.
    #[arg(long, global = true, conflicts_with = "horizon_sweep")]
    horizon: Option<u64>,
    /// Comma-separated horizons, each run fresh.
    #[arg(long, global = true, value_delimiter = ',')]
    horizon_sweep: Option<Vec<u64>>,
    /// Output directory for CSVs, or output file for `oracle`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    parallel: usize,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(r) = self.replications {
            cfg.replications = r;
        }
        if let Some(t) = self.horizon {
            cfg.horizons = vec![t];
        }
        if let Some(ts) = &self.horizon_sweep {
            cfg.horizons = ts.clone();
            cfg.mode = HorizonMode::Sweep;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config (or a `.meta.toml` sidecar).
    Run { config: PathBuf },
    /// Run a named preset.
    Reproduce {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
        preset: String,
    },
    /// Print the slate mean table of a config's environment (run 0).
    Oracle { config: PathBuf },
    /// Bootstrap a bid distribution from one cell of a bid log and summarize it.
    Ingest {
        csv: PathBuf,
        #[arg(long)]
        advertiser: String,
        #[arg(long)]
        day: u32,
        #[arg(long)]
        hour: u32,
        #[arg(long, default_value_t = DEFAULT_BOOTSTRAP_N)]
        bootstrap_n: usize,
    },
    /// Evaluate the problem-independent regret bound for horizon T and K actions.
    Bound { horizon: u64, k: usize },
}

fn experiment(mut cfg: ExperimentConfig, o: &Overrides) -> Result<()> {
    o.apply(&mut cfg);
    let report = par::with_threads(o.parallel, || run_experiment(&cfg))?;
    let dir = o.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let paths = write_report(&report, &dir)?;
    print!("{}", summary(&report));
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn oracle(path: &Path, o: &Overrides) -> Result<()> {
    let mut cfg = ExperimentConfig::load(path)?;
    o.apply(&mut cfg);
    let table = par::with_threads(o.parallel, || -> Result<_> {
        let bids = prepare_bids(&cfg)?;
        let env = build_run_env(&cfg, bids.as_deref(), 0)?;
        build_table(&cfg, &env, 0)
    })?;
    match &o.out {
        Some(p) => table.write_csv(std::fs::File::create(p)?)?,
        None => table.write_csv(std::io::stdout().lock())?,
    }
    eprintln!(
        "best slate {} with mean {}; gap to runner-up {}",
        table.best_slate(),
        table.best_mean(),
        table.delta_min()
    );
    Ok(())
}

fn ingest(csv: &Path, advertiser: &str, day: u32, hour: u32, n: usize, o: &Overrides) -> Result<()> {
    let log = parse_bid_log(csv)?;
    for r in &log.rejected {
        eprintln!("line {}: {}", r.line, r.reason);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed.unwrap_or(0));
    let d = build_bid_distribution(&log.records, advertiser, day, hour, n, &mut rng)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!("records: {} accepted, {} rejected", log.records.len(), log.rejected.len());
    println!("list lengths: {} and {}", d.first().len(), d.second().len());
    println!("list means: {} and {}", mean(d.first()), mean(d.second()));
    println!("normalizer: {}", d.normalizer());
    let pairs: Vec<(f64, f64)> = (0..10_000).map(|_| d.sample_pair(&mut rng)).collect();
    println!(
        "normalized mean top bid {}, second bid {}",
        pairs.iter().map(|p| p.0).sum::<f64>() / pairs.len() as f64,
        pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let o = &cli.overrides;
    let result = match &cli.command {
        Command::Run { config } => ExperimentConfig::load(config).and_then(|c| experiment(c, o)),
        Command::Reproduce { preset: name } => preset(name).and_then(|c| experiment(c, o)),
        Command::Oracle { config } => oracle(config, o),
        Command::Ingest {
            csv,
            advertiser,
            day,
            hour,
            bootstrap_n,
        } => ingest(csv, advertiser, *day, *hour, *bootstrap_n, o),
        Command::Bound { horizon, k } => evaluate_regret_bound(*horizon, *k).map(|b| println!("{b}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
