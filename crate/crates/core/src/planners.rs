//! Online planning against a simulator.
//!
//! Both planners treat a saved environment state as a generative model:
//! restore, act, observe, repeat. They own a private simulation
//! environment, so planning never touches the caller's.
//!
//! * [`bfs_plan`] expands the full action tree level by level under a
//!   hard budget of emulated frames and backs up discounted maxima.
//! * [`UctPlanner`] runs Monte-Carlo tree search: descend by an upper
//!   confidence bound, expand one untried action, roll out uniformly at
//!   random, and back up running means. The tree can be reused across
//!   calls (pruned to the chosen child).
//!
//! Sibling actions whose resulting snapshots are byte-identical merge
//! into one child node, so redundant joystick inputs don't multiply the
//! tree.

use alloc::boxed::Box;
use alloc::vec::Vec;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::env::{Action, EmulatorState, Environment};
use crate::rng::{role, seeded_rng};

/// Shared planner settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    /// Root-visit budget per planning call.
    pub simulations: u32,
    /// Planning horizon in frames; divided by the episode's
    /// frames-per-action to get the depth limit in decision steps.
    pub horizon_frames: u32,
    /// UCB exploration constant.
    pub exploration: f64,
    /// Per-decision-step discount.
    pub gamma: f64,
    /// Emulated-frame budget per breadth-first planning call.
    pub bfs_frame_budget: u64,
    /// Score children by the literal pseudocode bound
    /// `√(ln visits(child) / visits(parent))` (no constant) instead of
    /// the standard `C·√(ln visits(parent) / visits(child))`.
    pub verbatim_ucb: bool,
    /// Keep the chosen child's subtree for the next call.
    pub reuse_tree: bool,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            simulations: 500,
            horizon_frames: 300,
            exploration: 0.1,
            gamma: 0.999,
            bfs_frame_budget: 133_000,
            verbatim_ucb: false,
            reuse_tree: true,
        }
    }
}

/// The UCB score of a child under its parent.
pub fn ucb_score(
    average_return: f64,
    child_visits: u32,
    parent_visits: u32,
    exploration: f64,
    verbatim: bool,
) -> f64 {
    let bonus = if verbatim {
        libm::sqrt(libm::log(child_visits as f64) / parent_visits as f64)
    } else {
        exploration * libm::sqrt(libm::log(parent_visits as f64) / child_visits as f64)
    };
    average_return + bonus
}

/// Uniform-random play for up to `steps` decisions from the
/// simulator's current state; returns the discounted reward sum.
pub fn rollout(
    sim: &mut dyn Environment,
    actions: &[Action],
    steps: u32,
    gamma: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut total = 0.0;
    let mut discount = 1.0;
    for _ in 0..steps {
        let a = actions[rng.gen_range(0..actions.len() as u32) as usize];
        match sim.act_unobserved(a) {
            Ok(effect) => {
                total += discount * effect.reward;
                discount *= gamma;
                if effect.terminal {
                    break;
                }
            }
            Err(_) => break,
        }
    }
    total
}

/// One Monte-Carlo sample, for trace dumps and backup replay.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    /// Actions taken from the root (descent plus the expansion edge).
    pub path: Vec<Action>,
    /// Edge rewards along the path.
    pub rewards: Vec<f64>,
    /// Discounted return of the rollout from the path's end.
    pub rollout_return: f64,
}

impl SampleRecord {
    /// The value this sample folds into the root's running mean:
    /// `Σ γ^i·r_i + γ^d·rollout`.
    pub fn root_value(&self, gamma: f64) -> f64 {
        let mut v = 0.0;
        let mut discount = 1.0;
        for &r in &self.rewards {
            discount *= gamma;
            v += discount * r;
        }
        v + discount * self.rollout_return
    }
}

struct Node {
    snapshot: EmulatorState,
    parent: Option<u32>,
    /// `(action, node)` in ascending action id; merged duplicate
    /// actions repeat the same node index.
    children: Vec<(Action, u32)>,
    /// Reward observed on the edge into this node (zero at the root).
    immediate_return: f64,
    visits: u32,
    /// Samples whose backup started here (expansion or cut-off).
    ends: u32,
    average_return: f64,
    depth: u32,
    terminal: bool,
    /// Cursor into the planner's action list.
    next_untried: usize,
}

impl Node {
    fn fresh(snapshot: EmulatorState, parent: Option<u32>, reward: f64, depth: u32,
             terminal: bool) -> Node {
        Node {
            snapshot,
            parent,
            children: Vec::new(),
            immediate_return: reward,
            visits: 0,
            ends: 0,
            average_return: 0.0,
            depth,
            terminal,
            next_untried: 0,
        }
    }

    /// Distinct child node indices (merged actions alias).
    fn distinct_children(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.children.iter().map(|&(_, c)| c).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

struct Tree {
    nodes: Vec<Node>,
    root: u32,
}

impl Tree {
    fn new(snapshot: EmulatorState) -> Tree {
        Tree { nodes: alloc::vec![Node::fresh(snapshot, None, 0.0, 0, false)], root: 0 }
    }
}

/// Visit statistics of one root action, for inspection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootActionStats {
    pub action: Action,
    pub visits: u32,
    pub average_return: f64,
}

/// Monte-Carlo tree search over emulator snapshots.
pub struct UctPlanner {
    config: PlannerConfig,
    actions: Vec<Action>,
    sim: Box<dyn Environment>,
    rng: ChaCha8Rng,
    tree: Option<Tree>,
    trace: Option<Vec<SampleRecord>>,
    samples_last_plan: u32,
    last_root_stats: Option<(u32, f64)>,
    last_root_branching: (usize, usize),
}

impl UctPlanner {
    /// `sim` is the planner's private simulation environment (same game
    /// type as the states that will be planned from). `planner_index`
    /// separates random streams of parallel planners under one seed.
    pub fn new(
        sim: Box<dyn Environment>,
        actions: &[Action],
        config: PlannerConfig,
        seed: u64,
        planner_index: u64,
    ) -> UctPlanner {
        assert!(!actions.is_empty());
        let mut actions = actions.to_vec();
        actions.sort_unstable();
        actions.dedup();
        UctPlanner {
            config,
            actions,
            sim,
            rng: seeded_rng(seed, role::PLANNER, planner_index),
            tree: None,
            trace: None,
            samples_last_plan: 0,
            last_root_stats: None,
            last_root_branching: (0, 0),
        }
    }

    /// Starts collecting one [`SampleRecord`] per sample (cleared at
    /// each `plan` call).
    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn trace(&self) -> Option<&[SampleRecord]> {
        self.trace.as_deref()
    }

    /// Samples actually run by the last `plan` call (less than the
    /// budget when a reused subtree already carried visits).
    pub fn samples_last_plan(&self) -> u32 {
        self.samples_last_plan
    }

    /// `(visits, average_return)` of the current tree root.
    pub fn root_stats(&self) -> Option<(u32, f64)> {
        self.tree.as_ref().map(|t| {
            let r = &t.nodes[t.root as usize];
            (r.visits, r.average_return)
        })
    }

    /// `(visits, average_return)` of the last `plan` call's root as it
    /// stood when the action was chosen (before pruning).
    pub fn last_plan_root_stats(&self) -> Option<(u32, f64)> {
        self.last_root_stats
    }

    /// `(action aliases, distinct children)` at the last plan's root —
    /// they differ when duplicate actions merged.
    pub fn last_plan_root_branching(&self) -> (usize, usize) {
        self.last_root_branching
    }

    /// Per-action visit statistics at the root.
    pub fn root_action_stats(&self) -> Vec<RootActionStats> {
        let Some(t) = self.tree.as_ref() else { return Vec::new() };
        t.nodes[t.root as usize]
            .children
            .iter()
            .map(|&(action, c)| {
                let n = &t.nodes[c as usize];
                RootActionStats { action, visits: n.visits, average_return: n.average_return }
            })
            .collect()
    }

    /// Checks `visits(n) = Σ distinct children visits + ends(n)` over
    /// the whole tree (diagnostic).
    pub fn visits_conserved(&self) -> bool {
        let Some(t) = self.tree.as_ref() else { return true };
        t.nodes.iter().all(|n| {
            let child_sum: u32 =
                n.distinct_children().iter().map(|&c| t.nodes[c as usize].visits).sum();
            n.visits == child_sum + n.ends
        })
    }

    /// Plans from `state`: samples until the root has the configured
    /// number of visits, then returns the most-visited root action
    /// (ties to the lowest id). With tree reuse, a root matching the
    /// previous call's chosen child continues from its statistics.
    pub fn plan(&mut self, state: &EmulatorState) -> Action {
        if let Some(t) = &mut self.trace {
            t.clear();
        }
        let keep = self.config.reuse_tree
            && self
                .tree
                .as_ref()
                .map_or(false, |t| t.nodes[t.root as usize].snapshot == *state);
        if !keep {
            self.tree = Some(Tree::new(state.clone()));
        }
        self.sim
            .restore_state(state)
            .expect("planning state must match the simulation environment");
        let fpa = self.sim.episode_config().frames_per_action.max(1);
        let max_steps = (self.config.horizon_frames / fpa).max(1);

        self.samples_last_plan = 0;
        while self.tree.as_ref().unwrap().nodes[self.tree.as_ref().unwrap().root as usize].visits
            < self.config.simulations
        {
            self.sample(max_steps);
            self.samples_last_plan += 1;
        }

        {
            let t = self.tree.as_ref().unwrap();
            let root = &t.nodes[t.root as usize];
            self.last_root_stats = Some((root.visits, root.average_return));
            self.last_root_branching = (root.children.len(), root.distinct_children().len());
        }
        let best = self.best_root_action();
        if self.config.reuse_tree {
            self.prune_to(best);
        } else {
            self.tree = None;
        }
        best
    }

    fn best_root_action(&self) -> Action {
        let t = self.tree.as_ref().unwrap();
        let root = &t.nodes[t.root as usize];
        let mut best = self.actions[0];
        let mut best_visits = 0;
        for &(action, c) in &root.children {
            let visits = t.nodes[c as usize].visits;
            if visits > best_visits {
                best_visits = visits;
                best = action;
            }
        }
        best
    }

    /// One sample: descend while fully expanded, expand one untried
    /// action, roll out, back up.
    fn sample(&mut self, max_steps: u32) {
        let mut path: Vec<Action> = Vec::new();
        let mut rewards: Vec<f64> = Vec::new();
        let mut rollout_return = 0.0;

        let t = self.tree.as_mut().unwrap();
        let mut n = t.root;
        let backup_from = loop {
            let node = &t.nodes[n as usize];
            if node.terminal || node.depth >= max_steps {
                break n;
            }
            if node.next_untried < self.actions.len() {
                // Expand the lowest-id untried action.
                let action = self.actions[t.nodes[n as usize].next_untried];
                t.nodes[n as usize].next_untried += 1;
                self.sim
                    .restore_state(&t.nodes[n as usize].snapshot)
                    .expect("stored snapshots always restore");
                let child = match self.sim.act_unobserved(action) {
                    Ok(effect) => {
                        let snapshot = self.sim.save_state();
                        let depth = t.nodes[n as usize].depth + 1;
                        // Merge with a sibling only when the whole edge
                        // matches: identical successor bytes, reward,
                        // and termination.
                        let existing = t.nodes[n as usize]
                            .children
                            .iter()
                            .map(|&(_, c)| c)
                            .find(|&c| {
                                let sib = &t.nodes[c as usize];
                                sib.snapshot == snapshot
                                    && sib.immediate_return == effect.reward
                                    && sib.terminal == effect.terminal
                            });
                        let c = existing.unwrap_or_else(|| {
                            t.nodes.push(Node::fresh(
                                snapshot,
                                Some(n),
                                effect.reward,
                                depth,
                                effect.terminal,
                            ));
                            (t.nodes.len() - 1) as u32
                        });
                        t.nodes[n as usize].children.push((action, c));
                        c
                    }
                    Err(_) => {
                        // The state was already terminal (only possible
                        // at a root restored from an ended episode).
                        t.nodes[n as usize].terminal = true;
                        break n;
                    }
                };
                path.push(action);
                rewards.push(t.nodes[child as usize].immediate_return);
                if !t.nodes[child as usize].terminal {
                    let remaining = max_steps - t.nodes[child as usize].depth;
                    rollout_return = rollout(
                        self.sim.as_mut(),
                        &self.actions,
                        remaining,
                        self.config.gamma,
                        &mut self.rng,
                    );
                }
                break child;
            }
            // Fully expanded: descend by UCB.
            let parent_visits = node.visits;
            let mut chosen = node.children[0];
            let mut best_score = f64::NEG_INFINITY;
            for &(action, c) in &node.children {
                let child = &t.nodes[c as usize];
                let score = ucb_score(
                    child.average_return,
                    child.visits,
                    parent_visits,
                    self.config.exploration,
                    self.config.verbatim_ucb,
                );
                if score > best_score {
                    best_score = score;
                    chosen = (action, c);
                }
            }
            path.push(chosen.0);
            rewards.push(t.nodes[chosen.1 as usize].immediate_return);
            n = chosen.1;
        };

        // Back up: each node adds its edge reward, folds the running
        // mean, and passes a discounted return to its parent. Once a
        // branch is materialized to the horizon its folded values are
        // the exact discounted returns; while rollouts still cap a
        // branch, their tail rides at the cut node's discount.
        t.nodes[backup_from as usize].ends += 1;
        let mut r = rollout_return;
        let mut cursor = Some(backup_from);
        while let Some(i) = cursor {
            let node = &mut t.nodes[i as usize];
            r += node.immediate_return;
            let v = node.visits as f64;
            node.average_return = node.average_return * (v / (v + 1.0)) + r / (v + 1.0);
            node.visits += 1;
            r *= self.config.gamma;
            cursor = node.parent;
        }

        if let Some(trace) = &mut self.trace {
            trace.push(SampleRecord { path, rewards, rollout_return });
        }
    }

    /// Keeps only the chosen child's subtree; it becomes the root with
    /// statistics intact (and no incoming edge reward).
    fn prune_to(&mut self, action: Action) {
        let Some(t) = self.tree.take() else { return };
        let root = &t.nodes[t.root as usize];
        let Some(&(_, keep)) = root.children.iter().find(|&&(a, _)| a == action) else {
            return; // no child for the action: drop the tree entirely
        };

        // Copy the subtree breadth-first, remapping indices and depths.
        let mut nodes: Vec<Node> = Vec::new();
        let mut queue: Vec<(u32, Option<u32>)> = alloc::vec![(keep, None)];
        let mut head = 0;
        while head < queue.len() {
            let (old, new_parent) = queue[head];
            head += 1;
            let src = &t.nodes[old as usize];
            let new_index = nodes.len() as u32;
            let mut copy = Node::fresh(
                src.snapshot.clone(),
                new_parent,
                if new_parent.is_none() { 0.0 } else { src.immediate_return },
                if let Some(p) = new_parent { nodes[p as usize].depth + 1 } else { 0 },
                src.terminal,
            );
            copy.visits = src.visits;
            copy.ends = src.ends;
            copy.average_return = src.average_return;
            copy.next_untried = src.next_untried;
            nodes.push(copy);

            // Requeue distinct children once, then rebuild the action
            // aliases against the new indices.
            let mut seen: Vec<(u32, u32)> = Vec::new(); // (old child, new child)
            for &(a, c) in &src.children {
                let mapped = match seen.iter().find(|&&(o, _)| o == c) {
                    Some(&(_, m)) => m,
                    None => {
                        let m = (nodes.len() + queue.len() - head) as u32;
                        queue.push((c, Some(new_index)));
                        seen.push((c, m));
                        m
                    }
                };
                nodes[new_index as usize].children.push((a, mapped));
            }
        }
        self.tree = Some(Tree { nodes, root: 0 });
    }
}

/// Outcome of one breadth-first planning call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfsOutcome {
    pub action: Action,
    /// Emulated frames spent (never exceeds the budget).
    pub frames_used: u64,
    /// Distinct tree nodes, including the root.
    pub nodes: usize,
}

struct BfsNode {
    snapshot: EmulatorState,
    reward: f64,
    terminal: bool,
    children: Vec<(Action, u32)>,
}

/// Expands the action tree level by level from `state`, charging the
/// frame window per simulated action, until the next simulation would
/// exceed the frame budget. Backs up `value(n) = max_a [reward(a) +
/// γ·value(child_a)]` with leaves at zero and returns the root argmax
/// (ties to the lowest action id).
pub fn bfs_plan(
    sim: &mut dyn Environment,
    state: &EmulatorState,
    actions: &[Action],
    config: &PlannerConfig,
) -> BfsOutcome {
    assert!(!actions.is_empty());
    let mut actions = actions.to_vec();
    actions.sort_unstable();
    actions.dedup();

    sim.restore_state(state).expect("planning state must match the simulation environment");
    let fpa = sim.episode_config().frames_per_action.max(1) as u64;

    let mut nodes = alloc::vec![BfsNode {
        snapshot: state.clone(),
        reward: 0.0,
        terminal: false,
        children: Vec::new(),
    }];
    let mut frames_used = 0u64;
    let mut cursor = 0usize; // nodes are stored in expansion (level) order

    'expansion: while cursor < nodes.len() {
        if nodes[cursor].terminal {
            cursor += 1;
            continue;
        }
        for &action in &actions {
            if frames_used + fpa > config.bfs_frame_budget {
                break 'expansion;
            }
            sim.restore_state(&nodes[cursor].snapshot).expect("stored snapshots always restore");
            let effect = match sim.act_unobserved(action) {
                Ok(e) => e,
                Err(_) => {
                    nodes[cursor].terminal = true;
                    break;
                }
            };
            frames_used += fpa;
            let snapshot = sim.save_state();
            let existing = nodes[cursor]
                .children
                .iter()
                .map(|&(_, c)| c)
                .find(|&c| {
                    let sib = &nodes[c as usize];
                    sib.snapshot == snapshot
                        && sib.reward == effect.reward
                        && sib.terminal == effect.terminal
                });
            let c = existing.unwrap_or_else(|| {
                nodes.push(BfsNode {
                    snapshot,
                    reward: effect.reward,
                    terminal: effect.terminal,
                    children: Vec::new(),
                });
                (nodes.len() - 1) as u32
            });
            nodes[cursor].children.push((action, c));
        }
        cursor += 1;
    }

    // Children always sit after their parent, so one reverse pass backs
    // up the discounted maxima. Leaves (no children) are worth zero.
    let mut value = alloc::vec![0.0f64; nodes.len()];
    for i in (0..nodes.len()).rev() {
        if !nodes[i].children.is_empty() {
            value[i] = nodes[i]
                .children
                .iter()
                .map(|&(_, c)| nodes[c as usize].reward + config.gamma * value[c as usize])
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }

    let mut best = actions[0];
    let mut best_value = f64::NEG_INFINITY;
    for &(action, c) in &nodes[0].children {
        let v = nodes[c as usize].reward + config.gamma * value[c as usize];
        if v > best_value {
            best_value = v;
            best = action;
        }
    }
    BfsOutcome { action: best, frames_used, nodes: nodes.len() }
}
