//! Control agents: linear SARSA(λ) and the reference baseline policies.
//!
//! The learner is classic on-policy SARSA(λ) with replacing eligibility
//! traces over a linear value function: `Q(s, a) = Σ_i w[a][i] φ_i(s)`
//! for sparse binary features φ. Action selection is ε-greedy with
//! uniform tie-breaking among maximizers. A trial trains for a number
//! of episodes and then measures average score over further episodes
//! with the same (still exploring) policy.
//!
//! Baselines: uniform random, each single action held constant, and
//! each single action perturbed (held with a fixed probability, random
//! otherwise).

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::codec::{ByteReader, ByteWriter, CodecError};
use crate::env::{Action, Environment, EpisodeConfig};
use crate::features::{FeatureGenerator, SparseFeatures};
use crate::rng::{derive_seed, role, seeded_rng};

const LINEAR_Q_MAGIC: u32 = u32::from_le_bytes(*b"LNQ1");

/// An update magnitude past this aborts learning as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e100;

/// Linear action-value function over sparse binary features: one dense
/// weight row per action in its action list.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearQ {
    dim: u32,
    actions: Vec<Action>,
    /// Row-major: `weights[slot * dim + i]`.
    weights: Vec<f64>,
}

impl LinearQ {
    /// Zero-initialized weights for `actions` over a `dim`-dimensional
    /// feature space.
    pub fn new(dim: u32, actions: &[Action]) -> LinearQ {
        assert!(!actions.is_empty());
        LinearQ {
            dim,
            actions: actions.to_vec(),
            weights: alloc::vec![0.0; dim as usize * actions.len()],
        }
    }

    /// Wraps explicit weights; `weights.len()` must equal
    /// `dim * actions.len()`.
    pub fn from_weights(dim: u32, actions: &[Action], weights: Vec<f64>) -> LinearQ {
        assert_eq!(weights.len(), dim as usize * actions.len());
        LinearQ { dim, actions: actions.to_vec(), weights }
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// The actions this function scores, in slot order.
    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    fn flat(&self, slot: usize, i: u32) -> usize {
        slot * self.dim as usize + i as usize
    }

    /// `Q` for one action slot.
    pub fn value(&self, features: &SparseFeatures, slot: usize) -> f64 {
        debug_assert_eq!(features.dim(), self.dim);
        features.active().iter().map(|&i| self.weights[self.flat(slot, i)]).sum()
    }

    /// `Q` for every action slot.
    pub fn values(&self, features: &SparseFeatures) -> Vec<f64> {
        (0..self.actions.len()).map(|slot| self.value(features, slot)).collect()
    }

    /// Lowest slot attaining the maximum value; deterministic, for
    /// policy inspection.
    pub fn greedy_slot(&self, features: &SparseFeatures) -> usize {
        let values = self.values(features);
        let mut best = 0;
        for (slot, &v) in values.iter().enumerate().skip(1) {
            if v > values[best] {
                best = slot;
            }
        }
        best
    }

    pub fn encode(&self, out: &mut Vec<u8>) {
        out.put_u32(LINEAR_Q_MAGIC);
        out.put_u32(self.dim);
        out.put_u32(self.actions.len() as u32);
        for &a in &self.actions {
            out.put_u8(a.id());
        }
        for &w in &self.weights {
            out.put_f64(w);
        }
    }

    pub fn decode(bytes: &[u8]) -> Result<LinearQ, CodecError> {
        let mut r = ByteReader::new(bytes);
        if r.read_u32()? != LINEAR_Q_MAGIC {
            return Err(CodecError::BadMagic);
        }
        let dim = r.read_u32()?;
        let n_actions = r.read_u32()? as usize;
        let mut actions = Vec::with_capacity(n_actions);
        for _ in 0..n_actions {
            actions.push(Action::from_id(r.read_u8()?));
        }
        let mut weights = Vec::with_capacity(dim as usize * n_actions);
        for _ in 0..dim as usize * n_actions {
            weights.push(r.read_f64()?);
        }
        r.finish()?;
        Ok(LinearQ { dim, actions, weights })
    }
}

/// SARSA(λ) hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SarsaConfig {
    /// Step size, divided by the active feature count when
    /// `normalize_by_active` is set.
    pub alpha: f64,
    /// Trace decay.
    pub lambda: f64,
    /// Discount.
    pub gamma: f64,
    /// Exploration probability.
    pub epsilon: f64,
    /// Traces below this are dropped.
    pub trace_cutoff: f64,
    /// Scale the step size by 1 / max(1, active features).
    pub normalize_by_active: bool,
    /// When a feature's trace is replaced for the taken action, zero
    /// that feature's traces under every other action (the standard
    /// control form of replacing traces; avoids crediting actions that
    /// were abandoned on a revisit).
    pub clear_other_actions: bool,
}

impl Default for SarsaConfig {
    fn default() -> Self {
        SarsaConfig {
            alpha: 0.5,
            lambda: 0.9,
            gamma: 0.999,
            epsilon: 0.05,
            trace_cutoff: 0.01,
            normalize_by_active: true,
            clear_other_actions: true,
        }
    }
}

/// On-policy linear SARSA(λ) with replacing traces.
pub struct SarsaLambda {
    q: LinearQ,
    config: SarsaConfig,
    /// Eligibility traces keyed by flat weight index.
    traces: BTreeMap<u32, f64>,
    rng: ChaCha8Rng,
    diverged: bool,
}

impl SarsaLambda {
    /// `agent_index` separates the random streams of repeated trials
    /// under one experiment seed.
    pub fn new(q: LinearQ, config: SarsaConfig, seed: u64, agent_index: u64) -> SarsaLambda {
        SarsaLambda {
            q,
            config,
            traces: BTreeMap::new(),
            rng: seeded_rng(seed, role::AGENT, agent_index),
            diverged: false,
        }
    }

    pub fn q(&self) -> &LinearQ {
        &self.q
    }

    pub fn into_q(self) -> LinearQ {
        self.q
    }

    pub fn config(&self) -> &SarsaConfig {
        &self.config
    }

    /// True once an update exceeded [`DIVERGENCE_LIMIT`] or produced a
    /// non-finite weight; the agent stops learning.
    pub fn diverged(&self) -> bool {
        self.diverged
    }

    /// Live eligibility trace count (diagnostic).
    pub fn active_traces(&self) -> usize {
        self.traces.len()
    }

    /// Clears traces at an episode boundary.
    pub fn begin_episode(&mut self) {
        self.traces.clear();
    }

    /// ε-greedy slot selection with uniform tie-breaking.
    pub fn select_action(&mut self, features: &SparseFeatures) -> usize {
        let n = self.q.actions().len();
        if self.rng.gen::<f64>() < self.config.epsilon {
            return self.rng.gen_range(0..n as u32) as usize;
        }
        let values = self.q.values(features);
        let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let ties: Vec<usize> =
            (0..n).filter(|&slot| values[slot] == best).collect();
        ties[self.rng.gen_range(0..ties.len() as u32) as usize]
    }

    /// One SARSA(λ) update for the transition `(features, slot) --reward-->
    /// next`; `next` is `None` at episode end. Call order per step:
    /// select on the next features first, then learn.
    pub fn learn(
        &mut self,
        features: &SparseFeatures,
        slot: usize,
        reward: f64,
        next: Option<(&SparseFeatures, usize)>,
    ) {
        if self.diverged {
            return;
        }
        let q_sa = self.q.value(features, slot);
        let q_next = match next {
            Some((nf, nslot)) => self.q.value(nf, nslot),
            None => 0.0,
        };
        let delta = reward + self.config.gamma * q_next - q_sa;
        if !delta.is_finite() || delta.abs() > DIVERGENCE_LIMIT {
            self.diverged = true;
            return;
        }
        let alpha = if self.config.normalize_by_active {
            self.config.alpha / features.len().max(1) as f64
        } else {
            self.config.alpha
        };

        // Replacing traces: the just-visited pair snaps to 1.
        for &i in features.active() {
            if self.config.clear_other_actions {
                for other in 0..self.q.actions.len() {
                    if other != slot {
                        self.traces.remove(&(self.q.flat(other, i) as u32));
                    }
                }
            }
            self.traces.insert(self.q.flat(slot, i) as u32, 1.0);
        }
        let scale = alpha * delta;
        for (&flat, &e) in &self.traces {
            let w = &mut self.q.weights[flat as usize];
            *w += scale * e;
            if !w.is_finite() {
                self.diverged = true;
            }
        }

        // Decay and prune.
        let decay = self.config.gamma * self.config.lambda;
        let cutoff = self.config.trace_cutoff;
        self.traces = core::mem::take(&mut self.traces)
            .into_iter()
            .filter_map(|(flat, e)| {
                let e = e * decay;
                (e >= cutoff).then_some((flat, e))
            })
            .collect();
    }
}

/// Totals from one episode of control.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOutcome {
    /// Summed reward.
    pub score: f64,
    /// Decision points taken.
    pub steps: u32,
    /// Frames elapsed.
    pub frames: u32,
}

/// Plays one episode under the (possibly learning) SARSA agent.
pub fn run_sarsa_episode(
    env: &mut dyn Environment,
    gen: &mut dyn FeatureGenerator,
    agent: &mut SarsaLambda,
    config: &EpisodeConfig,
    learn: bool,
) -> EpisodeOutcome {
    let mut obs = env.reset(config);
    gen.begin_episode();
    agent.begin_episode();
    let mut outcome = EpisodeOutcome { score: 0.0, steps: 0, frames: obs.frame };
    if obs.terminal {
        return outcome;
    }
    let mut features = gen.generate(&obs.screen, &obs.ram);
    let mut slot = agent.select_action(&features);
    loop {
        let action = agent.q().actions()[slot];
        obs = env.act(action).expect("episode checked non-terminal");
        outcome.score += obs.reward;
        outcome.steps += 1;
        outcome.frames = obs.frame;
        if obs.terminal {
            if learn {
                agent.learn(&features, slot, obs.reward, None);
            }
            break;
        }
        let next_features = gen.generate(&obs.screen, &obs.ram);
        let next_slot = agent.select_action(&next_features);
        if learn {
            agent.learn(&features, slot, obs.reward, Some((&next_features, next_slot)));
        }
        features = next_features;
        slot = next_slot;
        if agent.diverged() {
            break;
        }
    }
    outcome
}

/// Trial shape: train, then evaluate with the same exploring policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig {
    pub train_episodes: u32,
    pub eval_episodes: u32,
    /// Template episode settings; its `seed` is the trial's base seed
    /// from which every episode derives its own environment seed.
    pub episode: EpisodeConfig,
}

/// Scores from one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub train_scores: Vec<f64>,
    pub eval_scores: Vec<f64>,
    pub diverged: bool,
}

impl TrialOutcome {
    /// Mean evaluation score; `None` when the trial diverged or nothing
    /// was evaluated.
    pub fn eval_mean(&self) -> Option<f64> {
        if self.diverged || self.eval_scores.is_empty() {
            return None;
        }
        Some(self.eval_scores.iter().sum::<f64>() / self.eval_scores.len() as f64)
    }
}

/// Runs one train-then-evaluate trial. Episode `e` of trial `t` plays
/// under environment seed `derive(base, EPISODE, t << 32 | e)`, so
/// trials and episodes never share random streams. A divergence abort
/// skips the remaining episodes.
pub fn run_rl_trial(
    env: &mut dyn Environment,
    gen: &mut dyn FeatureGenerator,
    agent: &mut SarsaLambda,
    trial: &TrialConfig,
    trial_index: u64,
) -> TrialOutcome {
    let total = trial.train_episodes + trial.eval_episodes;
    let mut outcome =
        TrialOutcome { train_scores: Vec::new(), eval_scores: Vec::new(), diverged: false };
    for e in 0..total {
        let mut config = trial.episode;
        config.seed = derive_seed(trial.episode.seed, role::EPISODE, trial_index << 32 | e as u64);
        let training = e < trial.train_episodes;
        let episode = run_sarsa_episode(env, gen, agent, &config, training);
        if training {
            outcome.train_scores.push(episode.score);
        } else {
            outcome.eval_scores.push(episode.score);
        }
        if agent.diverged() {
            outcome.diverged = true;
            break;
        }
    }
    outcome
}

/// The reference baseline policies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineKind {
    /// Uniform over the action list every step.
    Random,
    /// The same action every step.
    Const(Action),
    /// `action` with probability `persistence`, uniform otherwise.
    Perturb { action: Action, persistence: f64 },
}

/// Default perturbation persistence.
pub const PERTURB_PERSISTENCE: f64 = 0.95;

/// All baselines for an action list: random, one constant and one
/// perturbed variant per action.
pub fn enumerate_baselines(actions: &[Action]) -> Vec<BaselineKind> {
    let mut kinds = Vec::with_capacity(1 + 2 * actions.len());
    kinds.push(BaselineKind::Random);
    kinds.extend(actions.iter().map(|&a| BaselineKind::Const(a)));
    kinds.extend(actions.iter().map(|&a| BaselineKind::Perturb {
        action: a,
        persistence: PERTURB_PERSISTENCE,
    }));
    kinds
}

/// A baseline policy bound to an action list and a random stream.
pub struct BaselineAgent {
    kind: BaselineKind,
    actions: Vec<Action>,
    rng: ChaCha8Rng,
}

impl BaselineAgent {
    pub fn new(kind: BaselineKind, actions: &[Action], seed: u64, index: u64) -> BaselineAgent {
        assert!(!actions.is_empty());
        BaselineAgent {
            kind,
            actions: actions.to_vec(),
            rng: seeded_rng(seed, role::BASELINE, index),
        }
    }

    pub fn kind(&self) -> BaselineKind {
        self.kind
    }

    pub fn select_action(&mut self) -> Action {
        match self.kind {
            BaselineKind::Random => self.uniform(),
            BaselineKind::Const(a) => a,
            BaselineKind::Perturb { action, persistence } => {
                if self.rng.gen::<f64>() < persistence {
                    action
                } else {
                    self.uniform()
                }
            }
        }
    }

    fn uniform(&mut self) -> Action {
        self.actions[self.rng.gen_range(0..self.actions.len() as u32) as usize]
    }
}

/// Plays one episode under a baseline policy.
pub fn run_baseline_episode(
    env: &mut dyn Environment,
    agent: &mut BaselineAgent,
    config: &EpisodeConfig,
) -> EpisodeOutcome {
    let mut obs = env.reset(config);
    let mut outcome = EpisodeOutcome { score: 0.0, steps: 0, frames: obs.frame };
    while !obs.terminal {
        obs = env.act(agent.select_action()).expect("loop checks terminal");
        outcome.score += obs.reward;
        outcome.steps += 1;
        outcome.frames = obs.frame;
    }
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::sync::Arc;
    use alloc::vec;

    use crate::env::{chain_world, GameEnv, TabularGame, TabularMdp};
    use crate::features::{BackgroundModel, BasicFeatures};

    const A2: [Action; 2] = [Action::UP, Action::DOWN];

    #[test]
    fn linear_q_sums_weights_of_active_features() {
        let q = LinearQ::from_weights(
            4,
            &A2,
            vec![0.5, 1.0, -2.0, 0.25, 10.0, 20.0, 40.0, 80.0],
        );
        let f = SparseFeatures::new(4, vec![0, 2]);
        assert_eq!(q.value(&f, 0), 0.5 - 2.0);
        assert_eq!(q.value(&f, 1), 10.0 + 40.0);
        assert_eq!(q.values(&f), vec![-1.5, 50.0]);
        assert_eq!(q.greedy_slot(&f), 1);
    }

    #[test]
    fn one_learn_step_matches_the_update_rule_exactly() {
        let config = SarsaConfig {
            alpha: 0.5,
            lambda: 0.9,
            gamma: 0.8,
            epsilon: 0.0,
            trace_cutoff: 0.01,
            normalize_by_active: true,
            clear_other_actions: true,
        };
        let weights = vec![0.1, 0.2, 0.3, 0.4, 1.0, 2.0, 3.0, 4.0];
        let q = LinearQ::from_weights(4, &A2, weights.clone());
        let mut agent = SarsaLambda::new(q, config, 0, 0);

        let f = SparseFeatures::new(4, vec![0, 2]);
        let nf = SparseFeatures::new(4, vec![1]);
        agent.learn(&f, 0, 1.0, Some((&nf, 1)));

        // δ = r + γ·Q(s',a') − Q(s,a); α is normalized by |active| = 2.
        let delta = 1.0 + 0.8 * 2.0 - (0.1 + 0.3);
        let step = 0.5 / 2.0 * delta;
        let w = agent.q().weights();
        assert_eq!(w[0], 0.1 + step);
        assert_eq!(w[2], 0.3 + step);
        // Untouched rows stay put.
        assert_eq!(w[1], 0.2);
        assert_eq!(&w[4..], &weights[4..]);
        assert_eq!(agent.active_traces(), 2);
    }

    #[test]
    fn traces_replace_rather_than_accumulate() {
        let config = SarsaConfig {
            alpha: 0.1,
            lambda: 1.0,
            gamma: 1.0,
            epsilon: 0.0,
            trace_cutoff: 0.01,
            normalize_by_active: false,
            clear_other_actions: true,
        };
        let f = SparseFeatures::new(2, vec![0]);

        // Two identical transitions (s, a) -> (s, a) with reward 1.
        let mut agent =
            SarsaLambda::new(LinearQ::new(2, &A2), config, 0, 0);
        agent.learn(&f, 0, 1.0, Some((&f, 0)));
        // First step: δ=1, trace(0)=1 ⇒ w0 = 0.1.
        assert_eq!(agent.q().weights()[0], 0.1);
        agent.learn(&f, 0, 1.0, Some((&f, 0)));
        // Replacing: trace snaps back to 1 (an accumulating trace would
        // sit at 2 here). δ = 1 + w0 − w0 = 1 ⇒ w0 += 0.1.
        assert_eq!(agent.q().weights()[0], 0.2);
    }

    #[test]
    fn traces_decay_and_fall_off_past_the_cutoff() {
        let config = SarsaConfig {
            alpha: 0.0, // isolate the trace bookkeeping
            lambda: 0.5,
            gamma: 1.0,
            epsilon: 0.0,
            trace_cutoff: 0.3,
            normalize_by_active: false,
            clear_other_actions: true,
        };
        let f0 = SparseFeatures::new(4, vec![0]);
        let f1 = SparseFeatures::new(4, vec![1]);
        let mut agent = SarsaLambda::new(LinearQ::new(4, &A2), config, 0, 0);

        agent.learn(&f0, 0, 0.0, Some((&f1, 0))); // trace(0) = 0.5
        assert_eq!(agent.active_traces(), 1);
        agent.learn(&f1, 0, 0.0, Some((&f0, 0))); // 0.25 < 0.3: dropped
        assert_eq!(agent.active_traces(), 1); // only trace(1) survives
        agent.begin_episode();
        assert_eq!(agent.active_traces(), 0);
    }

    #[test]
    fn full_exploration_hits_every_action() {
        let config = SarsaConfig { epsilon: 1.0, ..SarsaConfig::default() };
        let mut agent = SarsaLambda::new(LinearQ::new(1, &Action::all().collect::<Vec<_>>()),
                                         config, 9, 0);
        let f = SparseFeatures::new(1, vec![0]);
        let mut seen = [false; Action::COUNT];
        for _ in 0..600 {
            seen[agent.select_action(&f)] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn greedy_selection_breaks_ties_uniformly_and_follows_values() {
        let config = SarsaConfig { epsilon: 0.0, ..SarsaConfig::default() };
        let q = LinearQ::from_weights(1, &[Action::UP, Action::DOWN, Action::LEFT],
                                      vec![1.0, 3.0, 3.0]);
        let mut agent = SarsaLambda::new(q, config, 3, 0);
        let f = SparseFeatures::new(1, vec![0]);
        let mut counts = [0u32; 3];
        for _ in 0..200 {
            counts[agent.select_action(&f)] += 1;
        }
        assert_eq!(counts[0], 0);
        assert!(counts[1] > 50 && counts[2] > 50, "tie split {counts:?}");
    }

    #[test]
    fn runaway_step_size_trips_the_divergence_flag() {
        let config = SarsaConfig {
            alpha: 1e200,
            normalize_by_active: false,
            epsilon: 0.0,
            ..SarsaConfig::default()
        };
        let f = SparseFeatures::new(1, vec![0]);
        let mut agent = SarsaLambda::new(LinearQ::new(1, &A2), config, 0, 0);
        for _ in 0..8 {
            agent.learn(&f, 0, 1.0, Some((&f, 0)));
        }
        assert!(agent.diverged());
        // Learning halts once diverged.
        let snapshot = agent.q().weights().to_vec();
        agent.learn(&f, 0, 1.0, Some((&f, 0)));
        assert_eq!(agent.q().weights(), &snapshot[..]);
    }

    /// Independent dynamic-programming solution of a deterministic MDP:
    /// the set of optimal actions per state.
    fn optimal_action_sets(mdp: &TabularMdp, gamma: f64) -> Vec<Vec<Action>> {
        let n = mdp.n_states();
        let mut v = vec![0.0f64; n];
        for _ in 0..10_000 {
            let mut next_v = v.clone();
            for s in 0..n as u16 {
                if mdp.is_terminal(s) {
                    continue;
                }
                next_v[s as usize] = Action::all()
                    .map(|a| {
                        let t = mdp.next_state(s, a);
                        mdp.reward(s, a)
                            + if mdp.is_terminal(t) { 0.0 } else { gamma * v[t as usize] }
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
            }
            let delta: f64 = v.iter().zip(&next_v).map(|(a, b)| (a - b).abs()).sum();
            v = next_v;
            if delta < 1e-12 {
                break;
            }
        }
        (0..n as u16)
            .map(|s| {
                if mdp.is_terminal(s) {
                    return Vec::new();
                }
                let q = |a: Action| {
                    let t = mdp.next_state(s, a);
                    mdp.reward(s, a)
                        + if mdp.is_terminal(t) { 0.0 } else { gamma * v[t as usize] }
                };
                let best = Action::all().map(q).fold(f64::NEG_INFINITY, f64::max);
                Action::all().filter(|&a| q(a) >= best - 1e-9).collect()
            })
            .collect()
    }

    #[test]
    fn sarsa_on_the_corridor_recovers_the_dynamic_programming_policy() {
        let mdp = chain_world();
        let mut env = GameEnv::new(TabularGame::new(Arc::clone(&mdp)));
        // Each corridor state renders as a distinct tile, so per-tile
        // color features are exactly tabular (one active feature per
        // state).
        let mut gen = BasicFeatures::new(BackgroundModel::black());
        let actions = env.minimal_action_set().to_vec();
        let config = SarsaConfig {
            alpha: 0.1,
            lambda: 0.9,
            gamma: 0.995,
            epsilon: 0.15,
            ..SarsaConfig::default()
        };
        let mut agent =
            SarsaLambda::new(LinearQ::new(gen.dim(), &actions), config, 77, 0);
        let trial = TrialConfig {
            train_episodes: 1_500,
            eval_episodes: 60,
            episode: EpisodeConfig { frames_per_action: 1, max_frames: 200, seed: 77 },
        };
        let outcome = run_rl_trial(&mut env, &mut gen, &mut agent, &trial, 0);
        assert!(!outcome.diverged);

        // The exploring evaluation mean should approach the optimal 0.8
        // (left exit) despite ε-dithering.
        let mean = outcome.eval_mean().unwrap();
        assert!(mean > 0.5, "evaluation mean {mean}");

        // The greedy policy must match the independent solution in
        // every non-terminal state, up to transition equivalence (many
        // action ids move the same way).
        let optimal = optimal_action_sets(&mdp, config.gamma);
        for s in 1..=8u16 {
            // Walk the corridor to state s to obtain its observation.
            let mut obs = env.reset(&EpisodeConfig {
                frames_per_action: 1,
                max_frames: 200,
                seed: 0,
            });
            let dir = if s > 4 { Action::RIGHT } else { Action::LEFT };
            for _ in 0..s.abs_diff(4) {
                obs = env.act(dir).unwrap();
            }
            let f = gen.generate(&obs.screen, &obs.ram);
            let chosen = actions[agent.q().greedy_slot(&f)];
            let ok = optimal[s as usize]
                .iter()
                .any(|a| mdp.next_state(s, *a) == mdp.next_state(s, chosen)
                    && mdp.reward(s, *a) == mdp.reward(s, chosen));
            assert!(ok, "state {s}: greedy {chosen:?} not optimal");
        }
    }

    #[test]
    fn trials_reproduce_bit_exactly_under_one_seed() {
        let run = || {
            let mut env = GameEnv::new(TabularGame::new(chain_world()));
            let mut gen = BasicFeatures::new(BackgroundModel::black());
            let actions = env.minimal_action_set().to_vec();
            let mut agent = SarsaLambda::new(
                LinearQ::new(gen.dim(), &actions),
                SarsaConfig::default(),
                42,
                3,
            );
            let trial = TrialConfig {
                train_episodes: 20,
                eval_episodes: 10,
                episode: EpisodeConfig { frames_per_action: 1, max_frames: 150, seed: 42 },
            };
            run_rl_trial(&mut env, &mut gen, &mut agent, &trial, 3)
        };
        let a = run();
        let b = run();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_baseline_repeats_its_action() {
        let mut agent =
            BaselineAgent::new(BaselineKind::Const(Action::LEFT), &A2, 0, 0);
        for _ in 0..50 {
            assert_eq!(agent.select_action(), Action::LEFT);
        }
    }

    #[test]
    fn random_baseline_draws_from_the_whole_action_list() {
        let actions: Vec<Action> = Action::all().collect();
        let mut agent = BaselineAgent::new(BaselineKind::Random, &actions, 5, 0);
        let mut seen = [false; Action::COUNT];
        for _ in 0..600 {
            seen[agent.select_action().id() as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn perturbed_baseline_mostly_holds_its_action() {
        let actions: Vec<Action> = Action::all().collect();
        let kind = BaselineKind::Perturb { action: Action::FIRE, persistence: 0.95 };
        let mut agent = BaselineAgent::new(kind, &actions, 5, 1);
        let held = (0..2_000).filter(|_| agent.select_action() == Action::FIRE).count();
        // 0.95 plus the 1/18 chance of drawing FIRE at random.
        assert!((1_800..=1_999).contains(&held), "held {held}");
    }

    #[test]
    fn baseline_episodes_reproduce_under_one_seed() {
        let config = EpisodeConfig { frames_per_action: 5, max_frames: 3_000, seed: 8 };
        let run = || {
            let mut env = GameEnv::new(crate::env::Crossing::new());
            let mut agent = BaselineAgent::new(
                BaselineKind::Random,
                &env.minimal_action_set().to_vec(),
                8,
                2,
            );
            run_baseline_episode(&mut env, &mut agent, &config)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn baseline_enumeration_covers_random_const_and_perturb() {
        let actions = [Action::LEFT, Action::RIGHT];
        let kinds = enumerate_baselines(&actions);
        assert_eq!(kinds.len(), 5);
        assert_eq!(kinds[0], BaselineKind::Random);
        assert_eq!(kinds[1], BaselineKind::Const(Action::LEFT));
        assert_eq!(kinds[2], BaselineKind::Const(Action::RIGHT));
        assert!(matches!(kinds[3],
            BaselineKind::Perturb { action: Action::LEFT, persistence: PERTURB_PERSISTENCE }));
    }

    #[test]
    fn q_function_files_roundtrip() {
        let q = LinearQ::from_weights(3, &A2, vec![1.5, -2.5, 0.0, 3.25, 4.0, -0.125]);
        let mut bytes = Vec::new();
        q.encode(&mut bytes);
        assert_eq!(LinearQ::decode(&bytes).unwrap(), q);
        assert_eq!(LinearQ::decode(&bytes[..bytes.len() - 1]),
                   Err(CodecError::UnexpectedEnd));
    }
}
