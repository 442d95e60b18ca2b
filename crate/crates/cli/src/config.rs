//! Experiment configuration.
//!
//! Configs are TOML files with a flat key-value layout:
//!
//! ```toml
//! game = "crossing"        # crossing | dodger | gatherer | chain
//! agent = "sarsa"          # sarsa | random | const | perturb | bfs | uct
//! features = "basic"       # basic | bass | disco | lsh | ram  (sarsa only)
//! trials = 30              # optional; defaults: 30 (sarsa/baselines), 10 (planners)
//! seed = 1
//! split = "training"       # optional; defaults from the game roster
//!
//! [overrides]              # optional parameter overrides, all keys optional
//! alpha = 0.5
//! max_frames = 1500
//! ```
//!
//! Every run is bound to its exact parameters by a SHA-256 hash of the
//! canonical JSON serialization of the config; reports refuse to cite
//! numbers that do not trace back to such a hash.

use std::fmt;
use std::fs;
use std::path::Path;

use coinop_core::agents::{BaselineKind, SarsaConfig, PERTURB_PERSISTENCE};
use coinop_core::env::{Action, EpisodeConfig, GAME_IDS};
use coinop_core::planners::PlannerConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Configuration mistakes caught before anything runs.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("unknown game `{0}`")]
    UnknownGame(String),
    #[error("agent `{0}` does not take a feature pipeline")]
    UnexpectedFeatures(String),
    #[error("agent `sarsa` requires a feature pipeline")]
    MissingFeatures,
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("a learning trial needs at least 1 evaluation episode")]
    NoEvalEpisodes,
    #[error("const_action {0} is outside the action set (0..18)")]
    BadConstAction(u8),
    #[error("persistence must lie in (0, 1], got {0}")]
    BadPersistence(String),
    #[error("config file error: {0}")]
    Io(String),
    #[error("config parse error: {0}")]
    Parse(String),
}

/// Who plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Sarsa,
    Random,
    Const,
    Perturb,
    Bfs,
    Uct,
}

impl AgentKind {
    pub fn is_learner(self) -> bool {
        self == AgentKind::Sarsa
    }

    pub fn is_planner(self) -> bool {
        matches!(self, AgentKind::Bfs | AgentKind::Uct)
    }

    pub fn label(self) -> &'static str {
        match self {
            AgentKind::Sarsa => "sarsa",
            AgentKind::Random => "random",
            AgentKind::Const => "const",
            AgentKind::Perturb => "perturb",
            AgentKind::Bfs => "bfs",
            AgentKind::Uct => "uct",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Which screen/RAM encoding feeds the learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Basic,
    Bass,
    Disco,
    Lsh,
    Ram,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 5] = [
        FeatureKind::Basic,
        FeatureKind::Bass,
        FeatureKind::Disco,
        FeatureKind::Lsh,
        FeatureKind::Ram,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FeatureKind::Basic => "basic",
            FeatureKind::Bass => "bass",
            FeatureKind::Disco => "disco",
            FeatureKind::Lsh => "lsh",
            FeatureKind::Ram => "ram",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureKind> {
        FeatureKind::ALL.into_iter().find(|k| k.label() == s)
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Tuning happened on the training games only; reports refuse to mix
/// the two splits unless explicitly overridden.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Training,
    Testing,
}

impl SplitTag {
    pub fn label(self) -> &'static str {
        match self {
            SplitTag::Training => "training",
            SplitTag::Testing => "testing",
        }
    }
}

impl fmt::Display for SplitTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Optional parameter overrides. Unset keys fall back to the tuned
/// defaults for the agent/feature combination.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    // Learning.
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub epsilon: Option<f64>,
    pub train_episodes: Option<u32>,
    pub eval_episodes: Option<u32>,
    // Episode shape.
    pub frames_per_action: Option<u32>,
    pub max_frames: Option<u32>,
    // Planning.
    pub simulations: Option<u32>,
    pub horizon_frames: Option<u32>,
    pub exploration: Option<f64>,
    pub bfs_frame_budget: Option<u64>,
    // Baseline policies.
    pub const_action: Option<u8>,
    pub persistence: Option<f64>,
    // Preprocessing sample counts.
    pub background_samples: Option<u32>,
    pub discovery_samples: Option<u32>,
}

/// One experiment: an agent on a game for a number of seeded trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: String,
    pub agent: AgentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<FeatureKind>,
    /// Trial count; a trial is train-then-evaluate for `sarsa` and a
    /// single scored episode for everything else.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u32>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitTag>,
    #[serde(default, skip_serializing_if = "Overrides::is_default")]
    pub overrides: Overrides,
}

impl Overrides {
    fn is_default(&self) -> bool {
        *self == Overrides::default()
    }
}

/// Default trial counts: learners and baselines average over 30
/// trials; planners play 10 episodes per game.
pub fn default_trials(agent: AgentKind) -> u32 {
    if agent.is_planner() {
        10
    } else {
        30
    }
}

/// Default split per game: the two tuning games are `training`, the
/// held-out pair is `testing`.
pub fn default_split(game: &str) -> SplitTag {
    match game {
        "crossing" | "chain" => SplitTag::Training,
        _ => SplitTag::Testing,
    }
}

impl ExperimentConfig {
    pub fn new(game: &str, agent: AgentKind) -> ExperimentConfig {
        ExperimentConfig {
            game: game.to_string(),
            agent,
            features: None,
            trials: None,
            seed: 0,
            split: None,
            overrides: Overrides::default(),
        }
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Io(e.to_string()))?;
        let config: ExperimentConfig =
            toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn save(&self, path: &Path) -> Result<(), ConfigError> {
        let text = toml::to_string_pretty(self).map_err(|e| ConfigError::Parse(e.to_string()))?;
        fs::write(path, text).map_err(|e| ConfigError::Io(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !GAME_IDS.contains(&self.game.as_str()) {
            return Err(ConfigError::UnknownGame(self.game.clone()));
        }
        match (self.agent.is_learner(), self.features) {
            (true, None) => return Err(ConfigError::MissingFeatures),
            (false, Some(_)) => {
                return Err(ConfigError::UnexpectedFeatures(self.agent.label().to_string()))
            }
            _ => {}
        }
        if self.effective_trials() == 0 {
            return Err(ConfigError::NoTrials);
        }
        if self.agent.is_learner() && self.overrides.eval_episodes == Some(0) {
            return Err(ConfigError::NoEvalEpisodes);
        }
        if let Some(a) = self.overrides.const_action {
            if a as usize >= Action::COUNT {
                return Err(ConfigError::BadConstAction(a));
            }
        }
        if let Some(p) = self.overrides.persistence {
            if !(p > 0.0 && p <= 1.0) {
                return Err(ConfigError::BadPersistence(format!("{p}")));
            }
        }
        Ok(())
    }

    pub fn effective_trials(&self) -> u32 {
        self.trials.unwrap_or_else(|| default_trials(self.agent))
    }

    pub fn effective_split(&self) -> SplitTag {
        self.split.unwrap_or_else(|| default_split(&self.game))
    }

    /// SHA-256 over the canonical JSON form, as a hex string.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut out = String::with_capacity(64);
        for byte in digest {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }

    /// Stable name used in score tables and file names, e.g.
    /// `sarsa-basic`, `const-04`, `uct`.
    pub fn algorithm_label(&self) -> String {
        match self.agent {
            AgentKind::Sarsa => {
                format!("sarsa-{}", self.features.expect("validated").label())
            }
            AgentKind::Const => {
                format!("const-{:02}", self.overrides.const_action.unwrap_or(Action::CENTER.id()))
            }
            AgentKind::Perturb => format!(
                "perturb-{:02}",
                self.overrides.const_action.unwrap_or(Action::CENTER.id())
            ),
            other => other.label().to_string(),
        }
    }

    /// Episode shape after overrides; `seed` is the experiment seed.
    pub fn episode_config(&self) -> EpisodeConfig {
        let defaults = EpisodeConfig::default();
        EpisodeConfig {
            frames_per_action: self
                .overrides
                .frames_per_action
                .unwrap_or(defaults.frames_per_action),
            max_frames: self.overrides.max_frames.unwrap_or(defaults.max_frames),
            seed: self.seed,
        }
    }

    /// Learning settings: tuned step size and trace decay per pipeline,
    /// then overrides on top.
    pub fn sarsa_config(&self) -> SarsaConfig {
        let features = self.features.expect("validated: sarsa carries features");
        let (alpha, lambda) = tuned_sarsa(features);
        let mut cfg = SarsaConfig { alpha, lambda, ..SarsaConfig::default() };
        if let Some(v) = self.overrides.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.overrides.lambda {
            cfg.lambda = v;
        }
        if let Some(v) = self.overrides.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = self.overrides.epsilon {
            cfg.epsilon = v;
        }
        cfg
    }

    /// Train/evaluate episode counts: 5,000 training episodes then 500
    /// evaluation episodes per trial unless overridden.
    pub fn episode_counts(&self) -> (u32, u32) {
        (
            self.overrides.train_episodes.unwrap_or(5_000),
            self.overrides.eval_episodes.unwrap_or(500),
        )
    }

    /// Planner settings after overrides.
    pub fn planner_config(&self) -> PlannerConfig {
        let mut cfg = PlannerConfig::default();
        if let Some(v) = self.overrides.simulations {
            cfg.simulations = v;
        }
        if let Some(v) = self.overrides.horizon_frames {
            cfg.horizon_frames = v;
        }
        if let Some(v) = self.overrides.exploration {
            cfg.exploration = v;
        }
        if let Some(v) = self.overrides.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = self.overrides.bfs_frame_budget {
            cfg.bfs_frame_budget = v;
        }
        cfg
    }

    /// The baseline policy this config names (`random`, `const`,
    /// `perturb` agents only).
    pub fn baseline_kind(&self) -> Option<BaselineKind> {
        let action = Action::from_id(self.overrides.const_action.unwrap_or(Action::CENTER.id()));
        match self.agent {
            AgentKind::Random => Some(BaselineKind::Random),
            AgentKind::Const => Some(BaselineKind::Const(action)),
            AgentKind::Perturb => Some(BaselineKind::Perturb {
                action,
                persistence: self.overrides.persistence.unwrap_or(PERTURB_PERSISTENCE),
            }),
            _ => None,
        }
    }

    /// Preprocessing sample counts: 18,000 screens for the background
    /// model, 36,000 for object-class discovery, unless overridden.
    pub fn sample_counts(&self) -> (u32, u32) {
        (
            self.overrides.background_samples.unwrap_or(18_000),
            self.overrides.discovery_samples.unwrap_or(36_000),
        )
    }
}

/// Step size and trace decay settled per pipeline on the training
/// games. The step size is further divided by the active-feature count
/// inside the learner.
pub fn tuned_sarsa(features: FeatureKind) -> (f64, f64) {
    match features {
        FeatureKind::Basic => (0.5, 0.9),
        FeatureKind::Bass => (0.5, 0.9),
        FeatureKind::Disco => (0.1, 0.9),
        FeatureKind::Lsh => (0.5, 0.5),
        FeatureKind::Ram => (0.2, 0.5),
    }
}
