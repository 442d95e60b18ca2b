//! Independent reference implementations used to cross-check the fast
//! paths: dynamic programming on tabular worlds, exhaustive tree
//! search over snapshots, and quadrature-based statistics.
//!
//! Nothing here shares code with the implementations under test. The
//! tree oracle recurses over save/restore snapshots instead of
//! building an arena; the statistics oracle integrates densities
//! numerically instead of evaluating continued fractions; the policy
//! oracles sweep Bellman equations instead of learning.

use std::collections::VecDeque;
use std::sync::Arc;

use coinop_core::env::{
    Action, EmulatorState, Environment, EpisodeConfig, Observation, TabularMdp,
};
use coinop_core::rng::{role, seeded_rng};
use rand::Rng;

// ---------------------------------------------------------------------------
// Dynamic programming on tabular worlds.
// ---------------------------------------------------------------------------

/// Optimal values and action-values for a tabular world under a fixed
/// action set.
#[derive(Debug, Clone)]
pub struct ValueIteration {
    pub values: Vec<f64>,
    /// `q[state][action slot]`, slots in the order of the action list.
    pub q: Vec<Vec<f64>>,
    actions: Vec<Action>,
}

/// Sweeps `V(s) = max_a [r(s,a) + γ·V(s')]` to convergence (terminal
/// states stay at zero).
pub fn value_iteration(mdp: &TabularMdp, actions: &[Action], gamma: f64) -> ValueIteration {
    let n = mdp.n_states();
    let mut values = vec![0.0; n];
    loop {
        let mut delta = 0.0f64;
        for s in 0..n as u16 {
            if mdp.is_terminal(s) {
                continue;
            }
            let best = actions
                .iter()
                .map(|&a| backup(mdp, s, a, gamma, &values))
                .fold(f64::NEG_INFINITY, f64::max);
            delta = delta.max((best - values[s as usize]).abs());
            values[s as usize] = best;
        }
        if delta < 1e-13 {
            break;
        }
    }
    let q = (0..n as u16)
        .map(|s| actions.iter().map(|&a| backup(mdp, s, a, gamma, &values)).collect())
        .collect();
    ValueIteration { values, q, actions: actions.to_vec() }
}

fn backup(mdp: &TabularMdp, s: u16, a: Action, gamma: f64, values: &[f64]) -> f64 {
    let next = mdp.next_state(s, a);
    let future = if mdp.is_terminal(next) { 0.0 } else { values[next as usize] };
    mdp.reward(s, a) + gamma * future
}

impl ValueIteration {
    /// Actions within `tol` of the best action-value at `s`.
    pub fn optimal_actions(&self, s: u16, tol: f64) -> Vec<Action> {
        let row = &self.q[s as usize];
        let best = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.actions
            .iter()
            .zip(row)
            .filter(|(_, &q)| q >= best - tol)
            .map(|(&a, _)| a)
            .collect()
    }
}

/// Evaluates a deterministic policy (one action per state): sweeps
/// `V(s) = r(s,π(s)) + γ·V(s')` to convergence.
pub fn policy_evaluation(mdp: &TabularMdp, policy: &[Action], gamma: f64) -> Vec<f64> {
    assert_eq!(policy.len(), mdp.n_states());
    let mut values = vec![0.0; mdp.n_states()];
    loop {
        let mut delta = 0.0f64;
        for s in 0..mdp.n_states() as u16 {
            if mdp.is_terminal(s) {
                continue;
            }
            let v = backup(mdp, s, policy[s as usize], gamma, &values);
            delta = delta.max((v - values[s as usize]).abs());
            values[s as usize] = v;
        }
        if delta < 1e-13 {
            break;
        }
    }
    values
}

/// Expected return of the uniform-random policy over `actions`,
/// computed by sweeping the Bellman expectation equation. With
/// `gamma = 1` this is the exact expected episode score on an
/// absorbing world.
pub fn uniform_policy_values(mdp: &TabularMdp, actions: &[Action], gamma: f64) -> Vec<f64> {
    let n = mdp.n_states();
    let mut values = vec![0.0; n];
    loop {
        let mut delta = 0.0f64;
        for s in 0..n as u16 {
            if mdp.is_terminal(s) {
                continue;
            }
            let v = actions.iter().map(|&a| backup(mdp, s, a, gamma, &values)).sum::<f64>()
                / actions.len() as f64;
            delta = delta.max((v - values[s as usize]).abs());
            values[s as usize] = v;
        }
        if delta < 1e-13 {
            break;
        }
    }
    values
}

/// First-visit observation of every reachable non-terminal state of
/// the deterministic tabular world hosted by `env`, found by
/// breadth-first search over the transition table and replayed through
/// the real environment (index = state id; `None` = unreachable or
/// terminal).
pub fn tabular_state_observations(
    env: &mut dyn Environment,
    mdp: &TabularMdp,
    actions: &[Action],
    config: &EpisodeConfig,
) -> Vec<Option<Observation>> {
    let n = mdp.n_states();
    let mut paths: Vec<Option<Vec<Action>>> = vec![None; n];
    let mut queue = VecDeque::new();
    if !mdp.is_terminal(mdp.start()) {
        paths[mdp.start() as usize] = Some(Vec::new());
        queue.push_back(mdp.start());
    }
    while let Some(s) = queue.pop_front() {
        for &a in actions {
            let t = mdp.next_state(s, a);
            if mdp.is_terminal(t) || paths[t as usize].is_some() {
                continue;
            }
            let mut path = paths[s as usize].clone().expect("dequeued states have paths");
            path.push(a);
            paths[t as usize] = Some(path);
            queue.push_back(t);
        }
    }
    paths
        .iter()
        .map(|entry| {
            entry.as_ref().map(|path| {
                let mut obs = env.reset(config);
                for &a in path {
                    obs = env.act(a).expect("replayed paths avoid terminal states");
                }
                obs
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Exhaustive search over environment snapshots.
// ---------------------------------------------------------------------------

/// Exact discounted-max value of each root action by recursion over
/// save/restore snapshots: `Q(a) = r + γ·V(s')` with `V = max_a Q(a)`,
/// leaves at terminal states or `depth` steps out. A root action that
/// cannot be simulated (episode already over) scores negative
/// infinity.
pub fn enumerate_root_values(
    sim: &mut dyn Environment,
    state: &EmulatorState,
    actions: &[Action],
    gamma: f64,
    depth: u32,
) -> Vec<f64> {
    assert!(depth >= 1);
    actions
        .iter()
        .map(|&a| {
            sim.restore_state(state).expect("oracle state must match the simulator");
            match sim.act_unobserved(a) {
                Err(_) => f64::NEG_INFINITY,
                Ok(effect) => {
                    let future = if effect.terminal || depth == 1 {
                        0.0
                    } else {
                        let child = sim.save_state();
                        enumerate_root_values(sim, &child, actions, gamma, depth - 1)
                            .into_iter()
                            .fold(f64::NEG_INFINITY, f64::max)
                    };
                    effect.reward + gamma * future
                }
            }
        })
        .collect()
}

/// Root actions attaining the exact maximum. No tolerance: the
/// planners under test fold the same discounted sums in the same
/// action order, so agreement is bitwise.
pub fn enumerate_best_actions(
    sim: &mut dyn Environment,
    state: &EmulatorState,
    actions: &[Action],
    gamma: f64,
    depth: u32,
) -> Vec<Action> {
    let values = enumerate_root_values(sim, state, actions, gamma, depth);
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    actions.iter().zip(&values).filter(|(_, &v)| v == best).map(|(&a, _)| a).collect()
}

/// Counts the distinct `(snapshot payload, reward, terminal)` triples
/// among the one-step successors of `state` — the ground truth a
/// duplicate-merging planner's root branching must equal.
pub fn distinct_children(
    sim: &mut dyn Environment,
    state: &EmulatorState,
    actions: &[Action],
) -> usize {
    let mut seen: Vec<(Vec<u8>, u64, bool)> = Vec::new();
    for &a in actions {
        sim.restore_state(state).expect("oracle state must match the simulator");
        let Ok(effect) = sim.act_unobserved(a) else { continue };
        let key = (sim.save_state().payload().to_vec(), effect.reward.to_bits(), effect.terminal);
        if !seen.contains(&key) {
            seen.push(key);
        }
    }
    seen.len()
}

// ---------------------------------------------------------------------------
// Random episodic worlds for planner cross-checks.
// ---------------------------------------------------------------------------

/// A random layered world: `levels` ranks of `width` states below a
/// single start state, every transition dropping exactly one rank, and
/// the bottom rank terminal — so the full action tree has exactly
/// `levels` plies and exhaustive enumeration stays cheap. Rewards are
/// random multiples of 1/8 in [-1, 1] (exactly representable, so
/// discounted sums compare bitwise).
pub fn random_layered_mdp(seed: u64, levels: u32, width: u32) -> Arc<TabularMdp> {
    assert!(levels >= 1 && width >= 1);
    let n = 1 + levels as usize * width as usize;
    assert!(n <= 128, "layered world exceeds the tabular state budget");
    let mut rng = seeded_rng(seed, role::FIXTURE, (levels as u64) << 32 | width as u64);
    let state_at = |rank: u32, slot: u32| -> u16 {
        if rank == 0 {
            0
        } else {
            (1 + (rank - 1) * width + slot) as u16
        }
    };
    let rank_of = |s: usize| -> u32 {
        if s == 0 {
            0
        } else {
            1 + (s - 1) as u32 / width
        }
    };
    let mut transition = Vec::with_capacity(n);
    let mut reward = Vec::with_capacity(n);
    let mut terminal = Vec::with_capacity(n);
    for s in 0..n {
        let rank = rank_of(s);
        let mut t_row = [s as u16; Action::COUNT];
        let mut r_row = [0.0f64; Action::COUNT];
        if rank < levels {
            for a in Action::all() {
                t_row[a.id() as usize] = state_at(rank + 1, rng.gen_range(0..width));
                r_row[a.id() as usize] = (rng.gen_range(0..17u32) as f64 - 8.0) / 8.0;
            }
        }
        transition.push(t_row);
        reward.push(r_row);
        terminal.push(rank == levels);
    }
    Arc::new(TabularMdp::new(0, transition, reward, terminal))
}

/// A three-ply layered world whose reward scales separate by ply:
/// integers in [-4, 4] on the first ply, multiples of 1/32 on the
/// second, multiples of 1/256 on the third. Distinct first-ply rewards
/// then dominate everything below them, so a sampling planner's very
/// first estimates already point at the right root action and the
/// budget goes into resolving the fine plies — root-action agreement
/// measures convergence rather than rollout luck. All rewards stay
/// dyadic, so discounted sums under a power-of-two discount compare
/// bitwise.
pub fn random_contrast_mdp(seed: u64, width: u32) -> Arc<TabularMdp> {
    let levels = 3u32;
    assert!(width >= 1);
    let n = 1 + levels as usize * width as usize;
    assert!(n <= 128, "layered world exceeds the tabular state budget");
    let mut rng = seeded_rng(seed, role::FIXTURE, (levels as u64) << 32 | width as u64);
    let scale = [1.0, 1.0 / 32.0, 1.0 / 256.0];
    let steps = [9u32, 17, 17]; // odd counts keep the grids centred on 0
    let mut transition = Vec::with_capacity(n);
    let mut reward = Vec::with_capacity(n);
    let mut terminal = Vec::with_capacity(n);
    for s in 0..n {
        let rank = if s == 0 { 0 } else { 1 + (s - 1) as u32 / width };
        let mut t_row = [s as u16; Action::COUNT];
        let mut r_row = [0.0f64; Action::COUNT];
        if rank < levels {
            let half = (steps[rank as usize] / 2) as f64;
            for a in Action::all() {
                let slot = rng.gen_range(0..width);
                t_row[a.id() as usize] = (1 + rank * width + slot) as u16;
                let draw = rng.gen_range(0..steps[rank as usize]) as f64;
                r_row[a.id() as usize] = (draw - half) * scale[rank as usize];
            }
        }
        transition.push(t_row);
        reward.push(r_row);
        terminal.push(rank == levels);
    }
    Arc::new(TabularMdp::new(0, transition, reward, terminal))
}

// ---------------------------------------------------------------------------
// Quadrature statistics.
// ---------------------------------------------------------------------------

/// Adaptive Simpson integration with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, frm, right, tol / 2.0, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 40)
}

/// `I_x(a, b)` by quadrature. The substitution `u = sin²θ` turns both
/// the partial and the complete beta integrals into smooth integrands
/// for `a, b ≥ 1/2` (all t-test cases), so no special-function code is
/// shared with the implementation under test.
pub fn incomplete_beta_quadrature(a: f64, b: f64, x: f64) -> f64 {
    assert!(a >= 0.5 && b >= 0.5, "quadrature oracle covers the t-test parameter range");
    assert!((0.0..=1.0).contains(&x));
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let integrand =
        move |theta: f64| 2.0 * theta.sin().powf(2.0 * a - 1.0) * theta.cos().powf(2.0 * b - 1.0);
    let phi = x.sqrt().asin();
    let partial = adaptive_simpson(&integrand, 0.0, phi, 1e-13);
    let total = adaptive_simpson(&integrand, 0.0, std::f64::consts::FRAC_PI_2, 1e-13);
    partial / total
}

/// Two-tailed `P(|T| ≥ t)` for Student's t via the quadrature beta.
pub fn t_tail_quadrature(t: f64, df: f64) -> f64 {
    assert!(df > 0.0);
    if t == 0.0 {
        return 1.0;
    }
    let x = df / (df + t * t);
    incomplete_beta_quadrature(df / 2.0, 0.5, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use coinop_core::env::{chain_world, GameEnv, TabularGame};

    const MINIMAL: [Action; 3] = [Action::LEFT, Action::CENTER, Action::RIGHT];

    fn chain_env() -> GameEnv<TabularGame> {
        GameEnv::new(TabularGame::new(chain_world()))
    }

    /// One decision per world transition (the default five-frame
    /// repeat would stride the chain in jumps of five).
    fn single_step() -> EpisodeConfig {
        EpisodeConfig { frames_per_action: 1, max_frames: 1_000, seed: 0 }
    }

    #[test]
    fn value_iteration_walks_to_the_nearest_exit() {
        let mdp = chain_world();
        let vi = value_iteration(&mdp, &MINIMAL, 0.995);
        for s in 1..=4u16 {
            assert_eq!(vi.optimal_actions(s, 1e-9), vec![Action::LEFT], "state {s}");
        }
        for s in 5..=8u16 {
            assert_eq!(vi.optimal_actions(s, 1e-9), vec![Action::RIGHT], "state {s}");
        }
        // One step out the value is exactly the exit payoff.
        assert!((vi.values[1] - 0.95).abs() < 1e-12);
        assert!(vi.values[4] < vi.values[1]);
    }

    #[test]
    fn policy_evaluation_matches_hand_summed_returns() {
        let mdp = chain_world();
        // Walk to the nearest exit; undiscounted return from state s is
        // 1 - 0.05·(steps to exit).
        let policy: Vec<Action> = (0..mdp.n_states() as u16)
            .map(|s| if s <= 4 { Action::LEFT } else { Action::RIGHT })
            .collect();
        let values = policy_evaluation(&mdp, &policy, 1.0);
        for s in 1..=8u16 {
            let steps = if s <= 4 { s } else { 9 - s } as f64;
            assert!(
                (values[s as usize] - (1.0 - 0.05 * steps)).abs() < 1e-10,
                "state {s}: {}",
                values[s as usize]
            );
        }
        // The optimal policy's evaluation reproduces the optimal values.
        let vi = value_iteration(&mdp, &MINIMAL, 0.995);
        let greedy: Vec<Action> =
            (0..mdp.n_states() as u16).map(|s| vi.optimal_actions(s, 1e-9)[0]).collect();
        let v_greedy = policy_evaluation(&mdp, &greedy, 0.995);
        for s in 0..mdp.n_states() {
            assert!((v_greedy[s] - vi.values[s]).abs() < 1e-10);
        }
    }

    #[test]
    fn uniform_policy_value_matches_the_lazy_walk_formula() {
        // A third of the actions stay put, so the absorption time of
        // the simple ±1 walk, s·(9−s), stretches by 3/2; each step
        // costs 0.05 and absorption pays 1.
        let mdp = chain_world();
        let values = uniform_policy_values(&mdp, &MINIMAL, 1.0);
        for s in 1..=8u16 {
            let expect = 1.0 - 0.05 * 1.5 * (s as f64) * (9.0 - s as f64);
            assert!(
                (values[s as usize] - expect).abs() < 1e-9,
                "state {s}: {} vs {expect}",
                values[s as usize]
            );
        }
        assert!((values[4] - -0.5).abs() < 1e-9);
    }

    #[test]
    fn state_walk_reaches_every_interior_chain_state() {
        let mdp = chain_world();
        let mut env = chain_env();
        let obs = tabular_state_observations(&mut env, &mdp, &MINIMAL, &single_step());
        assert_eq!(obs.len(), 10);
        assert!(obs[0].is_none() && obs[9].is_none(), "exits are terminal");
        for s in 1..=8 {
            let o = obs[s].as_ref().expect("interior states are reachable");
            assert!(!o.terminal);
        }
        // Different states render different screens (the feature
        // pipelines rely on this).
        for s in 1..8 {
            assert_ne!(obs[s].as_ref().unwrap().screen, obs[s + 1].as_ref().unwrap().screen);
        }
    }

    #[test]
    fn enumeration_prices_the_short_exit_exactly() {
        let mut env = chain_env();
        env.reset(&single_step());
        let state = env.save_state();
        let gamma = 0.999;
        let values = enumerate_root_values(&mut env, &state, &MINIMAL, gamma, 4);
        // Take LEFT four times from the start: three step costs, then
        // the discounted exit.
        let expect = -0.05 + gamma * (-0.05 + gamma * (-0.05 + gamma * 0.95));
        assert!((values[0] - expect).abs() < 1e-12, "{} vs {expect}", values[0]);
        assert_eq!(
            enumerate_best_actions(&mut env, &state, &MINIMAL, gamma, 4),
            vec![Action::LEFT]
        );
    }

    #[test]
    fn chain_actions_collapse_to_three_distinct_children() {
        let mut env = chain_env();
        env.reset(&single_step());
        let state = env.save_state();
        // All 18 joystick actions move by dx ∈ {-1, 0, 1}.
        let all_actions: Vec<Action> = Action::all().collect();
        assert_eq!(distinct_children(&mut env, &state, &all_actions), 3);
        assert_eq!(distinct_children(&mut env, &state, &MINIMAL), 3);
    }

    #[test]
    fn layered_worlds_are_deterministic_and_properly_ranked() {
        let a = random_layered_mdp(7, 3, 5);
        let b = random_layered_mdp(7, 3, 5);
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), random_layered_mdp(8, 3, 5).fingerprint());
        assert_eq!(a.n_states(), 16);
        let rank = |s: u16| -> u32 {
            if s == 0 {
                0
            } else {
                1 + (s - 1) as u32 / 5
            }
        };
        for s in 0..a.n_states() as u16 {
            assert_eq!(a.is_terminal(s), rank(s) == 3);
            if !a.is_terminal(s) {
                for act in Action::all() {
                    assert_eq!(rank(a.next_state(s, act)), rank(s) + 1);
                    let r = a.reward(s, act);
                    assert!((-1.0..=1.0).contains(&r) && (r * 8.0).fract() == 0.0);
                }
            }
        }
    }

    #[test]
    fn quadrature_beta_matches_closed_forms() {
        for x in [0.05, 0.3, 0.5, 0.92] {
            assert!((incomplete_beta_quadrature(1.0, 1.0, x) - x).abs() < 1e-10);
            let arcsine = 2.0 / std::f64::consts::PI * x.sqrt().asin();
            assert!((incomplete_beta_quadrature(0.5, 0.5, x) - arcsine).abs() < 1e-10);
        }
        // Two degrees of freedom has a closed-form tail.
        for t in [0.4f64, 1.0, 2.5] {
            let exact = 1.0 - t / (t * t + 2.0).sqrt();
            assert!((t_tail_quadrature(t, 2.0) - exact).abs() < 1e-10);
        }
        // One degree of freedom is a Cauchy.
        assert!((t_tail_quadrature(1.0, 1.0) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn simpson_integrates_polynomials_exactly_enough() {
        let cubic = |x: f64| 3.0 * x * x * x - x + 2.0;
        // ∫₀² = 3·4 − 2 + 4 = 14.
        assert!((adaptive_simpson(&cubic, 0.0, 2.0, 1e-12) - 14.0).abs() < 1e-10);
        let sine = |x: f64| x.sin();
        assert!((adaptive_simpson(&sine, 0.0, std::f64::consts::PI, 1e-12) - 2.0).abs() < 1e-10);
    }
}
