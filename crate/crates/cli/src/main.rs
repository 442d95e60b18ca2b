//! Command-line front end: preprocess feature models, run experiments,
//! sweep the reference baselines, build comparison reports, and print
//! exact dynamic-programming solutions for the tabular game.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use coinop::config::{AgentKind, ExperimentConfig, FeatureKind, SplitTag};
use coinop::harness::{self, HarnessOptions, OUT_DIR_VAR};
use coinop::oracle;
use coinop::report::{make_report, ReportOptions};
use coinop_core::env::{chain_world, make_game};

#[derive(Parser)]
#[command(name = "coinop", version, about = "Toy-arcade agent evaluation platform")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the feature models a pipeline needs (background colors,
    /// object classes, projection positions).
    Preprocess(PreprocessArgs),
    /// Run one experiment: an agent on a game over seeded trials.
    Run(RunArgs),
    /// Score the full reference-policy sweep on one game.
    Baselines(BaselinesArgs),
    /// Build the comparison report from stored run records.
    Report(ReportArgs),
    /// Print exact value-iteration solutions for the tabular game.
    Oracle(OracleArgs),
}

/// Flags shared by every artifact-producing subcommand.
#[derive(Args)]
struct IoArgs {
    /// Artifact directory [env: COINOP_OUT_DIR] [default: coinop-out].
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads for trial-level parallelism (0 = one per core).
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

impl IoArgs {
    fn options(&self) -> HarnessOptions {
        let mut opts = HarnessOptions::default();
        if let Some(dir) = &self.out_dir {
            opts.out_dir = dir.clone();
        }
        opts.workers = self.workers;
        opts
    }
}

fn parse_agent(s: &str) -> Result<AgentKind, String> {
    match s {
        "sarsa" => Ok(AgentKind::Sarsa),
        "random" => Ok(AgentKind::Random),
        "const" => Ok(AgentKind::Const),
        "perturb" => Ok(AgentKind::Perturb),
        "bfs" => Ok(AgentKind::Bfs),
        "uct" => Ok(AgentKind::Uct),
        _ => Err(format!("unknown agent `{s}` (sarsa|random|const|perturb|bfs|uct)")),
    }
}

fn parse_features(s: &str) -> Result<FeatureKind, String> {
    FeatureKind::parse(s)
        .ok_or_else(|| format!("unknown feature pipeline `{s}` (basic|bass|disco|lsh|ram)"))
}

fn parse_split(s: &str) -> Result<SplitTag, String> {
    match s {
        "training" => Ok(SplitTag::Training),
        "testing" => Ok(SplitTag::Testing),
        _ => Err(format!("unknown split `{s}` (training|testing)")),
    }
}

#[derive(Args)]
struct PreprocessArgs {
    /// Game to sample.
    #[arg(long)]
    game: String,
    /// Pipeline whose models to build.
    #[arg(long, value_parser = parse_features)]
    features: FeatureKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Screens sampled for the background model.
    #[arg(long)]
    background_samples: Option<u32>,
    /// Screens sampled for object-class discovery.
    #[arg(long)]
    discovery_samples: Option<u32>,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (TOML); exclusive with the direct flags.
    #[arg(long, conflicts_with_all = ["game", "agent", "features", "trials", "seed", "split"])]
    config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    game: Option<String>,
    #[arg(long, required_unless_present = "config", value_parser = parse_agent)]
    agent: Option<AgentKind>,
    /// Feature pipeline (required for sarsa, rejected otherwise).
    #[arg(long, value_parser = parse_features)]
    features: Option<FeatureKind>,
    #[arg(long)]
    trials: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Split tag stamped on the record [default: per-game roster].
    #[arg(long, value_parser = parse_split)]
    split: Option<SplitTag>,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args)]
struct BaselinesArgs {
    #[arg(long)]
    game: String,
    /// Episodes per reference policy.
    #[arg(long, default_value_t = 10)]
    episodes: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// Aggregate training and testing games together.
    #[arg(long)]
    allow_mixed_split: bool,
    #[command(flatten)]
    io: IoArgs,
}

#[derive(Args)]
struct OracleArgs {
    /// Game to solve exactly (must be tabular).
    #[arg(long, default_value = "chain")]
    game: String,
    #[arg(long, default_value_t = 0.999)]
    gamma: f64,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Preprocess(args) => preprocess(args),
        Command::Run(args) => run(args),
        Command::Baselines(args) => baselines(args),
        Command::Report(args) => report(args),
        Command::Oracle(args) => oracle_cmd(args),
    }
}

fn preprocess(args: PreprocessArgs) -> Result<()> {
    let opts = args.io.options();
    // Route the sample-count defaults through the config machinery so
    // the CLI and config files can never disagree.
    let mut config = ExperimentConfig::new(&args.game, AgentKind::Sarsa);
    config.overrides.background_samples = args.background_samples;
    config.overrides.discovery_samples = args.discovery_samples;
    let written = harness::build_preprocessing(
        &args.game,
        args.features,
        args.seed,
        config.sample_counts(),
        &opts.out_dir,
    )?;
    if written.is_empty() {
        println!("{} needs no preprocessing models", args.features);
    }
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<()> {
    let opts = args.io.options();
    let config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let mut config = ExperimentConfig::new(
                args.game.as_deref().expect("required unless --config"),
                args.agent.expect("required unless --config"),
            );
            config.features = args.features;
            config.trials = args.trials;
            config.seed = args.seed.unwrap_or(0);
            config.split = args.split;
            config.validate()?;
            config
        }
    };
    let record = harness::run_experiment(&config, &opts)?;
    let (record_path, scores_path) = harness::write_run_files(&record, &opts.out_dir)?;
    let scores = record.summary_scores();
    let mean = scores.iter().sum::<f64>() / scores.len() as f64;
    println!(
        "{} / {}: {} trials, mean score {mean}",
        record.game,
        record.algorithm,
        record.trials.len(),
    );
    println!("wrote {}", record_path.display());
    println!("wrote {}", scores_path.display());
    Ok(())
}

fn baselines(args: BaselinesArgs) -> Result<()> {
    let opts = args.io.options();
    let record = harness::run_baselines(&args.game, args.episodes, args.seed, &opts)?;
    let (json_path, tsv_path) = harness::write_baseline_files(&record, &opts.out_dir)?;
    let means = record.means();
    let best = means
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("sweep is non-empty");
    println!(
        "{}: random mean {}, best reference {} at {}",
        record.game,
        record.random_mean(),
        record.names[best.0],
        best.1,
    );
    println!("wrote {}", json_path.display());
    println!("wrote {}", tsv_path.display());
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let opts = args.io.options();
    let records = harness::read_run_records(&opts.out_dir)?;
    if records.is_empty() {
        bail!(
            "no run records under {} (set --out-dir or {OUT_DIR_VAR})",
            opts.out_dir.display()
        );
    }
    let baselines = harness::read_baseline_records(&opts.out_dir)?;
    let bundle = make_report(
        &records,
        &baselines,
        &ReportOptions { allow_mixed_split: args.allow_mixed_split },
        &opts.out_dir,
    )?;
    for warning in &bundle.summary.warnings {
        eprintln!("warning: {warning}");
    }
    for path in &bundle.files {
        println!("wrote {}", path.display());
    }
    for (algorithm, count) in &bundle.summary.times_best {
        println!("times best: {algorithm} = {count}");
    }
    Ok(())
}

fn oracle_cmd(args: OracleArgs) -> Result<()> {
    let mdp = match args.game.as_str() {
        "chain" => chain_world(),
        other => bail!("exact solutions exist only for the tabular game, not `{other}`"),
    };
    let env = make_game(&args.game).expect("tabular game exists");
    let actions = env.minimal_action_set().to_vec();
    let vi = oracle::value_iteration(&mdp, &actions, args.gamma);
    let random = oracle::uniform_policy_values(&mdp, &actions, args.gamma);
    println!("state  optimal-value  random-value  optimal-actions");
    for s in 0..mdp.n_states() as u16 {
        let best: Vec<String> =
            vi.optimal_actions(s, 1e-9).iter().map(|a| format!("{a:?}")).collect();
        println!(
            "{s:>5}  {:>13.6}  {:>12.6}  {}",
            vi.values[s as usize],
            random[s as usize],
            if mdp.is_terminal(s) { "terminal".to_string() } else { best.join(",") },
        );
    }
    Ok(())
}
