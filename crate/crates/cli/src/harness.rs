//! Experiment execution: preprocessing builds, seeded parallel trials,
//! and the full baseline sweep.
//!
//! ## Seeding
//!
//! Trial `t` of an experiment derives `trial_seed = derive(seed,
//! TRIAL, t)` and everything inside the trial (agent stream, episode
//! seeds) derives from that, so results are independent of scheduling:
//! running trials serially, in parallel, or in any order produces
//! byte-identical scores.
//!
//! ## Artifacts
//!
//! A run writes `records/<name>.json` (the full [`RunRecord`]) and
//! `scores/<name>.tsv` (diff-able per-trial scores, no timing data);
//! preprocessing writes binary model files under `models/` keyed by
//! game, kind, and seed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use coinop_core::agents::{
    enumerate_baselines, run_baseline_episode, run_rl_trial, BaselineAgent, BaselineKind, LinearQ,
    SarsaLambda, TrialConfig,
};
use coinop_core::env::{make_game, Action, EpisodeConfig};
use coinop_core::features::{
    BackgroundAccumulator, BackgroundModel, BasicFeatures, BassFeatures, ClassDiscovery,
    ClassModel, DiscoFeatures, FeatureGenerator, LshFeatures, LshModel, RamFeatures,
    TileCoderConfig,
};
use coinop_core::planners::{bfs_plan, UctPlanner};
use coinop_core::rng::{derive_seed, role, seeded_rng};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{AgentKind, ConfigError, ExperimentConfig, FeatureKind, SplitTag};
use crate::formats::{self, FormatError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("unknown game `{0}`")]
    UnknownGame(String),
    #[error("missing preprocessing model {0} (auto-build disabled)")]
    MissingModel(PathBuf),
    #[error("agent diverged in trial {trial}")]
    Diverged { trial: u32 },
    #[error("worker pool: {0}")]
    Pool(String),
}

/// Where and how to run.
#[derive(Debug, Clone)]
pub struct HarnessOptions {
    pub out_dir: PathBuf,
    /// Worker threads for trial-level parallelism; 0 = one per core.
    pub workers: usize,
    /// Build missing preprocessing models on demand.
    pub auto_build: bool,
}

/// Environment variable naming the default output directory.
pub const OUT_DIR_VAR: &str = "COINOP_OUT_DIR";

impl Default for HarnessOptions {
    fn default() -> Self {
        let out_dir = std::env::var_os(OUT_DIR_VAR)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("coinop-out"));
        HarnessOptions { out_dir, workers: 0, auto_build: true }
    }
}

impl HarnessOptions {
    pub fn at(dir: &Path) -> HarnessOptions {
        HarnessOptions { out_dir: dir.to_path_buf(), ..HarnessOptions::default() }
    }
}

fn worker_pool(workers: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))
}

// ---------------------------------------------------------------------------
// Preprocessing.
// ---------------------------------------------------------------------------

/// Path of a model file, keyed by game, model kind, and seed.
pub fn model_path(out_dir: &Path, game: &str, kind: &str, seed: u64) -> PathBuf {
    out_dir.join("models").join(format!("{game}-{kind}-{seed:016x}.bin"))
}

/// Feeds `samples` screens from seeded uniform-random play into `sink`.
/// Episodes restart on terminal; every observation (including resets)
/// counts as one sample.
fn sample_screens(
    game: &str,
    seed: u64,
    samples: u32,
    mut sink: impl FnMut(&coinop_core::env::Screen),
) -> Result<(), HarnessError> {
    let mut env = make_game(game).ok_or_else(|| HarnessError::UnknownGame(game.to_string()))?;
    let mut rng = seeded_rng(seed, role::FIXTURE, 0);
    let mut taken = 0u32;
    let mut episode = 0u64;
    while taken < samples {
        let config = EpisodeConfig {
            seed: derive_seed(seed, role::EPISODE, episode),
            ..EpisodeConfig::default()
        };
        episode += 1;
        let mut obs = env.reset(&config);
        sink(&obs.screen);
        taken += 1;
        while taken < samples && !obs.terminal {
            let action = Action::from_id(rng.gen_range(0..Action::COUNT as u32) as u8);
            obs = env.act(action).expect("loop checks terminal");
            sink(&obs.screen);
            taken += 1;
        }
    }
    Ok(())
}

/// Detects the per-pixel modal color over seeded random play.
pub fn build_background(
    game: &str,
    seed: u64,
    samples: u32,
) -> Result<BackgroundModel, HarnessError> {
    let mut acc = BackgroundAccumulator::new();
    sample_screens(game, derive_seed(seed, role::FIXTURE, 1), samples, |screen| {
        acc.add(screen);
    })?;
    Ok(acc.finish())
}

/// Discovers object classes over seeded random play (requires the
/// game's background model).
pub fn build_classes(
    game: &str,
    seed: u64,
    samples: u32,
    background: &BackgroundModel,
) -> Result<ClassModel, HarnessError> {
    let mut discovery = ClassDiscovery::new();
    sample_screens(game, derive_seed(seed, role::FIXTURE, 2), samples, |screen| {
        discovery.add_raw_screen(screen, background);
    })?;
    Ok(discovery.finish(&TileCoderConfig::default()))
}

/// The projection model needs no samples, only its seed.
pub fn build_lsh(seed: u64) -> LshModel {
    LshModel::standard(derive_seed(seed, role::FIXTURE, 3))
}

/// Builds and writes whatever models the feature pipeline needs,
/// returning the written paths. `samples` is `(background screens,
/// discovery screens)`.
pub fn build_preprocessing(
    game: &str,
    features: FeatureKind,
    seed: u64,
    samples: (u32, u32),
    out_dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    if make_game(game).is_none() {
        return Err(HarnessError::UnknownGame(game.to_string()));
    }
    let mut written = Vec::new();
    match features {
        FeatureKind::Basic | FeatureKind::Bass => {
            let path = model_path(out_dir, game, "background", seed);
            formats::write_background(&path, &build_background(game, seed, samples.0)?)?;
            written.push(path);
        }
        FeatureKind::Disco => {
            let background = build_background(game, seed, samples.0)?;
            let bg_path = model_path(out_dir, game, "background", seed);
            formats::write_background(&bg_path, &background)?;
            let classes = build_classes(game, seed, samples.1, &background)?;
            let cls_path = model_path(out_dir, game, "classes", seed);
            formats::write_classes(&cls_path, &classes)?;
            written.push(bg_path);
            written.push(cls_path);
        }
        FeatureKind::Lsh => {
            let path = model_path(out_dir, game, "lsh", seed);
            formats::write_lsh(&path, &build_lsh(seed))?;
            written.push(path);
        }
        FeatureKind::Ram => {}
    }
    Ok(written)
}

/// The models one experiment needs, loaded or built per
/// [`HarnessOptions::auto_build`].
struct Artifacts {
    background: Option<BackgroundModel>,
    classes: Option<ClassModel>,
    lsh: Option<LshModel>,
}

impl Artifacts {
    fn none() -> Artifacts {
        Artifacts { background: None, classes: None, lsh: None }
    }

    fn prepare(
        config: &ExperimentConfig,
        opts: &HarnessOptions,
    ) -> Result<Artifacts, HarnessError> {
        let Some(features) = config.features else { return Ok(Artifacts::none()) };
        let samples = config.sample_counts();
        let mut artifacts = Artifacts::none();
        match features {
            FeatureKind::Basic | FeatureKind::Bass | FeatureKind::Disco => {
                let path = model_path(&opts.out_dir, &config.game, "background", config.seed);
                artifacts.background = Some(if path.exists() {
                    formats::read_background(&path)?
                } else if opts.auto_build {
                    let model = build_background(&config.game, config.seed, samples.0)?;
                    formats::write_background(&path, &model)?;
                    model
                } else {
                    return Err(HarnessError::MissingModel(path));
                });
                if features == FeatureKind::Disco {
                    let path = model_path(&opts.out_dir, &config.game, "classes", config.seed);
                    artifacts.classes = Some(if path.exists() {
                        formats::read_classes(&path)?
                    } else if opts.auto_build {
                        let background =
                            artifacts.background.as_ref().expect("built or loaded above");
                        let model =
                            build_classes(&config.game, config.seed, samples.1, background)?;
                        formats::write_classes(&path, &model)?;
                        model
                    } else {
                        return Err(HarnessError::MissingModel(path));
                    });
                }
            }
            FeatureKind::Lsh => {
                let path = model_path(&opts.out_dir, &config.game, "lsh", config.seed);
                artifacts.lsh = Some(if path.exists() {
                    formats::read_lsh(&path)?
                } else if opts.auto_build {
                    let model = build_lsh(config.seed);
                    formats::write_lsh(&path, &model)?;
                    model
                } else {
                    return Err(HarnessError::MissingModel(path));
                });
            }
            FeatureKind::Ram => {}
        }
        Ok(artifacts)
    }

    fn generator(&self, features: FeatureKind) -> Box<dyn FeatureGenerator> {
        match features {
            FeatureKind::Basic => {
                Box::new(BasicFeatures::new(self.background.clone().expect("prepared")))
            }
            FeatureKind::Bass => {
                Box::new(BassFeatures::new(self.background.clone().expect("prepared")))
            }
            FeatureKind::Disco => Box::new(DiscoFeatures::new(
                self.background.clone().expect("prepared"),
                self.classes.clone().expect("prepared"),
                TileCoderConfig::default(),
            )),
            FeatureKind::Lsh => Box::new(LshFeatures::new(self.lsh.clone().expect("prepared"))),
            FeatureKind::Ram => Box::new(RamFeatures),
        }
    }
}

// ---------------------------------------------------------------------------
// Experiment execution.
// ---------------------------------------------------------------------------

/// Scores from one trial: a full train-then-evaluate pass for
/// learners, a single scored episode for everything else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialScores {
    pub seed: u64,
    /// Every episode score in play order (training then evaluation).
    pub episode_scores: Vec<f64>,
    /// The trial's headline score: mean over the evaluation window for
    /// learners, the episode score otherwise.
    pub summary: f64,
}

/// One experiment's complete, reproducible result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    /// SHA-256 of the canonical config; reports cite this.
    pub config_hash: String,
    pub algorithm: String,
    pub game: String,
    pub split: SplitTag,
    pub version: String,
    pub trials: Vec<TrialScores>,
    /// Milliseconds; informational only, never part of score files.
    pub wall_clock_ms: u64,
}

impl RunRecord {
    /// Per-trial headline scores — the samples reports aggregate.
    pub fn summary_scores(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.summary).collect()
    }

    /// Stable artifact name: game, algorithm, and a config-hash prefix.
    pub fn file_stem(&self) -> String {
        format!("{}-{}-{}", self.game, self.algorithm, &self.config_hash[..8])
    }
}

/// Runs every trial of `config` on a bounded worker pool and returns
/// the assembled record. Fails if any trial diverges or a needed
/// preprocessing model is missing with auto-build disabled.
pub fn run_experiment(
    config: &ExperimentConfig,
    opts: &HarnessOptions,
) -> Result<RunRecord, HarnessError> {
    config.validate()?;
    let started = Instant::now();
    let artifacts = Artifacts::prepare(config, opts)?;
    let pool = worker_pool(opts.workers)?;
    let trials: Result<Vec<TrialScores>, HarnessError> = pool.install(|| {
        (0..config.effective_trials())
            .into_par_iter()
            .map(|t| run_trial(config, &artifacts, t))
            .collect()
    });
    Ok(RunRecord {
        config: config.clone(),
        config_hash: config.hash(),
        algorithm: config.algorithm_label(),
        game: config.game.clone(),
        split: config.effective_split(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        trials: trials?,
        wall_clock_ms: started.elapsed().as_millis() as u64,
    })
}

fn run_trial(
    config: &ExperimentConfig,
    artifacts: &Artifacts,
    t: u32,
) -> Result<TrialScores, HarnessError> {
    let trial_seed = derive_seed(config.seed, role::TRIAL, t as u64);
    let mut env =
        make_game(&config.game).ok_or_else(|| HarnessError::UnknownGame(config.game.clone()))?;
    let mut episode = config.episode_config();
    episode.seed = trial_seed;
    match config.agent {
        AgentKind::Sarsa => {
            let mut gen = artifacts.generator(config.features.expect("validated"));
            let actions = env.minimal_action_set().to_vec();
            let q = LinearQ::new(gen.dim(), &actions);
            let mut agent = SarsaLambda::new(q, config.sarsa_config(), trial_seed, 0);
            let (train_episodes, eval_episodes) = config.episode_counts();
            let trial = TrialConfig { train_episodes, eval_episodes, episode };
            let outcome = run_rl_trial(env.as_mut(), gen.as_mut(), &mut agent, &trial, 0);
            if outcome.diverged {
                return Err(HarnessError::Diverged { trial: t });
            }
            let summary = outcome.eval_mean().expect("non-diverged trial with evaluation");
            let mut episode_scores = outcome.train_scores;
            episode_scores.extend_from_slice(&outcome.eval_scores);
            Ok(TrialScores { seed: trial_seed, episode_scores, summary })
        }
        AgentKind::Random | AgentKind::Const | AgentKind::Perturb => {
            let kind = config.baseline_kind().expect("matched baseline agents");
            let actions: Vec<Action> = Action::all().collect();
            let mut agent = BaselineAgent::new(kind, &actions, trial_seed, 0);
            episode.seed = derive_seed(trial_seed, role::EPISODE, 0);
            let outcome = run_baseline_episode(env.as_mut(), &mut agent, &episode);
            Ok(TrialScores {
                seed: trial_seed,
                episode_scores: vec![outcome.score],
                summary: outcome.score,
            })
        }
        AgentKind::Uct => {
            let actions = env.minimal_action_set().to_vec();
            let sim = make_game(&config.game).expect("same game exists");
            let mut planner =
                UctPlanner::new(sim, &actions, config.planner_config(), trial_seed, 0);
            episode.seed = derive_seed(trial_seed, role::EPISODE, 0);
            let mut obs = env.reset(&episode);
            let mut score = 0.0;
            while !obs.terminal {
                let action = planner.plan(&env.save_state());
                obs = env.act(action).expect("loop checks terminal");
                score += obs.reward;
            }
            Ok(TrialScores { seed: trial_seed, episode_scores: vec![score], summary: score })
        }
        AgentKind::Bfs => {
            let actions = env.minimal_action_set().to_vec();
            let mut sim = make_game(&config.game).expect("same game exists");
            let planner_config = config.planner_config();
            episode.seed = derive_seed(trial_seed, role::EPISODE, 0);
            let mut obs = env.reset(&episode);
            let mut score = 0.0;
            while !obs.terminal {
                let outcome =
                    bfs_plan(sim.as_mut(), &env.save_state(), &actions, &planner_config);
                obs = env.act(outcome.action).expect("loop checks terminal");
                score += obs.reward;
            }
            Ok(TrialScores { seed: trial_seed, episode_scores: vec![score], summary: score })
        }
    }
}

/// Writes a run's artifacts: the JSON record and the diff-able score
/// table (which carries no timing data). Returns the two paths.
pub fn write_run_files(
    record: &RunRecord,
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf), HarnessError> {
    let stem = record.file_stem();
    let record_path = out_dir.join("records").join(format!("{stem}.json"));
    formats::write_json(&record_path, record)?;
    let scores_path = out_dir.join("scores").join(format!("{stem}.tsv"));
    let comments = vec![
        format!("source-hashes: {}", record.config_hash),
        format!(
            "game: {}; algorithm: {}; split: {}; version: {}",
            record.game, record.algorithm, record.split, record.version
        ),
    ];
    let rows: Vec<Vec<String>> = record
        .trials
        .iter()
        .enumerate()
        .map(|(i, t)| {
            vec![
                i.to_string(),
                format!("{:016x}", t.seed),
                format!("{}", t.summary),
                formats::join_samples(&t.episode_scores),
            ]
        })
        .collect();
    formats::write_tsv(
        &scores_path,
        &comments,
        &["trial", "seed", "summary", "episode_scores"],
        &rows,
    )?;
    Ok((record_path, scores_path))
}

/// Reads every record under `out_dir/records`, sorted by file name.
pub fn read_run_records(out_dir: &Path) -> Result<Vec<RunRecord>, HarnessError> {
    let dir = out_dir.join("records");
    let mut paths: Vec<PathBuf> = match std::fs::read_dir(&dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect(),
        Err(_) => Vec::new(),
    };
    paths.sort();
    paths.into_iter().map(|p| Ok(formats::read_json(&p)?)).collect()
}

// ---------------------------------------------------------------------------
// Baseline sweep.
// ---------------------------------------------------------------------------

/// Per-game scores of the full reference set: one random policy plus a
/// constant and a perturbed-constant policy per joystick action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub game: String,
    pub seed: u64,
    pub episodes: u32,
    pub version: String,
    pub names: Vec<String>,
    /// `scores[baseline][episode]`.
    pub scores: Vec<Vec<f64>>,
}

impl BaselineRecord {
    pub fn means(&self) -> Vec<f64> {
        self.scores
            .iter()
            .map(|s| s.iter().sum::<f64>() / s.len().max(1) as f64)
            .collect()
    }

    /// The random policy's average score (the random-normalization
    /// reference).
    pub fn random_mean(&self) -> f64 {
        let i = self.names.iter().position(|n| n == "random").expect("sweep includes random");
        self.means()[i]
    }
}

pub fn baseline_name(kind: BaselineKind) -> String {
    match kind {
        BaselineKind::Random => "random".to_string(),
        BaselineKind::Const(a) => format!("const-{:02}", a.id()),
        BaselineKind::Perturb { action, .. } => format!("perturb-{:02}", action.id()),
    }
}

/// Scores all 37 reference policies over `episodes` seeded episodes
/// each, in parallel.
pub fn run_baselines(
    game: &str,
    episodes: u32,
    seed: u64,
    opts: &HarnessOptions,
) -> Result<BaselineRecord, HarnessError> {
    if make_game(game).is_none() {
        return Err(HarnessError::UnknownGame(game.to_string()));
    }
    let all_actions: Vec<Action> = Action::all().collect();
    let kinds = enumerate_baselines(&all_actions);
    let pool = worker_pool(opts.workers)?;
    let scores: Result<Vec<Vec<f64>>, HarnessError> = pool.install(|| {
        kinds
            .par_iter()
            .enumerate()
            .map(|(b, &kind)| {
                let mut env = make_game(game).expect("checked above");
                (0..episodes)
                    .map(|e| {
                        let index = (b as u64) << 32 | e as u64;
                        let mut agent =
                            BaselineAgent::new(kind, &all_actions, seed, index);
                        let episode = EpisodeConfig {
                            seed: derive_seed(seed, role::EPISODE, index),
                            ..EpisodeConfig::default()
                        };
                        Ok(run_baseline_episode(env.as_mut(), &mut agent, &episode).score)
                    })
                    .collect()
            })
            .collect()
    });
    Ok(BaselineRecord {
        game: game.to_string(),
        seed,
        episodes,
        version: env!("CARGO_PKG_VERSION").to_string(),
        names: kinds.into_iter().map(baseline_name).collect(),
        scores: scores?,
    })
}

/// Writes `baselines/<game>.json` and a diff-able TSV beside it.
pub fn write_baseline_files(
    record: &BaselineRecord,
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf), HarnessError> {
    let json_path = out_dir.join("baselines").join(format!("{}.json", record.game));
    formats::write_json(&json_path, record)?;
    let tsv_path = out_dir.join("baselines").join(format!("{}.tsv", record.game));
    let means = record.means();
    let rows: Vec<Vec<String>> = record
        .names
        .iter()
        .zip(&record.scores)
        .zip(&means)
        .map(|((name, scores), mean)| {
            vec![name.clone(), format!("{mean}"), formats::join_samples(scores)]
        })
        .collect();
    formats::write_tsv(
        &tsv_path,
        &[format!("game: {}; seed: {:016x}; episodes: {}", record.game, record.seed, record.episodes)],
        &["baseline", "mean", "episode_scores"],
        &rows,
    )?;
    Ok((json_path, tsv_path))
}

/// Reads every baseline record under `out_dir/baselines`.
pub fn read_baseline_records(out_dir: &Path) -> Result<Vec<BaselineRecord>, HarnessError> {
    let dir = out_dir.join("baselines");
    let mut paths: Vec<PathBuf> = match std::fs::read_dir(&dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect(),
        Err(_) => Vec::new(),
    };
    paths.sort();
    paths.into_iter().map(|p| Ok(formats::read_json(&p)?)).collect()
}
