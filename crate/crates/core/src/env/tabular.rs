//! Tabular MDPs behind the standard game interface.
//!
//! A [`TabularMdp`] is a finite deterministic decision process given by
//! explicit transition/reward tables over the full 18-action set. It
//! renders as a marker block in a tile grid and exposes its state as a
//! one-hot byte in RAM, so every feature pipeline, agent, and planner
//! runs on it unchanged — which is what makes exact dynamic-programming
//! oracles possible for end-to-end tests.
//!
//! [`chain_world`] is the built-in benchmark instance: a ten-state
//! corridor with an exit at each end worth +1 and a per-step cost, so
//! the shorter exit is optimal from the start state.

use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::codec::{ByteReader, ByteWriter};
use crate::env::{Action, EnvError, Game, RamState, Screen};
use crate::rng::mix64;

const COLOR_MARKER: u8 = 25;
/// Tile size used to render the state marker; matches a 16x14 grid.
const CELL_W: usize = 10;
const CELL_H: usize = 15;
/// Maximum states: one RAM byte per state.
pub const MAX_TABULAR_STATES: usize = 128;

/// A deterministic finite MDP over the full action set.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularMdp {
    n_states: usize,
    start: u16,
    /// `transition[s][a]` — successor state.
    transition: Vec<[u16; Action::COUNT]>,
    /// `reward[s][a]` — reward for taking `a` in `s`.
    reward: Vec<[f64; Action::COUNT]>,
    /// Entering a terminal state ends the episode.
    terminal: Vec<bool>,
    /// Structural hash; snapshots embed it so a state can only be
    /// restored into the same model.
    fingerprint: u64,
}

impl TabularMdp {
    /// Builds an MDP from explicit tables. Panics on inconsistent
    /// shapes, out-of-range successors, or a terminal start state.
    pub fn new(
        start: u16,
        transition: Vec<[u16; Action::COUNT]>,
        reward: Vec<[f64; Action::COUNT]>,
        terminal: Vec<bool>,
    ) -> TabularMdp {
        let n_states = transition.len();
        assert!(n_states > 0 && n_states <= MAX_TABULAR_STATES);
        assert_eq!(reward.len(), n_states);
        assert_eq!(terminal.len(), n_states);
        assert!((start as usize) < n_states && !terminal[start as usize]);
        for row in &transition {
            for &next in row {
                assert!((next as usize) < n_states);
            }
        }
        let fingerprint = Self::fingerprint_of(start, &transition, &reward, &terminal);
        TabularMdp { n_states, start, transition, reward, terminal, fingerprint }
    }

    fn fingerprint_of(
        start: u16,
        transition: &[[u16; Action::COUNT]],
        reward: &[[f64; Action::COUNT]],
        terminal: &[bool],
    ) -> u64 {
        let mut h = mix64(start as u64 ^ (transition.len() as u64) << 32);
        for s in 0..transition.len() {
            for a in 0..Action::COUNT {
                h = mix64(h ^ transition[s][a] as u64);
                h = mix64(h ^ reward[s][a].to_bits());
            }
            h = mix64(h ^ terminal[s] as u64);
        }
        h
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn start(&self) -> u16 {
        self.start
    }

    pub fn next_state(&self, s: u16, a: Action) -> u16 {
        self.transition[s as usize][a.id() as usize]
    }

    pub fn reward(&self, s: u16, a: Action) -> f64 {
        self.reward[s as usize][a.id() as usize]
    }

    pub fn is_terminal(&self, s: u16) -> bool {
        self.terminal[s as usize]
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }
}

/// The ten-state corridor benchmark. States 0 and 9 are exits; entering
/// either pays +1, and every step costs 0.05. Play starts at state 4,
/// so heading left (four steps, net 0.8) beats heading right (five
/// steps, net 0.75). Left/right movement follows the joystick's
/// horizontal component; actions with no horizontal component stay put
/// (still paying the step cost).
pub fn chain_world() -> Arc<TabularMdp> {
    const N: usize = 10;
    const STEP_COST: f64 = -0.05;
    const EXIT_REWARD: f64 = 1.0;
    let mut transition = Vec::with_capacity(N);
    let mut reward = Vec::with_capacity(N);
    let mut terminal = Vec::with_capacity(N);
    for s in 0..N as i32 {
        let mut t_row = [0u16; Action::COUNT];
        let mut r_row = [0f64; Action::COUNT];
        for a in Action::all() {
            let next = (s + a.dx()).clamp(0, N as i32 - 1);
            t_row[a.id() as usize] = next as u16;
            r_row[a.id() as usize] =
                STEP_COST + if next != s && (next == 0 || next == N as i32 - 1) {
                    EXIT_REWARD
                } else {
                    0.0
                };
        }
        transition.push(t_row);
        reward.push(r_row);
        terminal.push(s == 0 || s == N as i32 - 1);
    }
    Arc::new(TabularMdp::new(4, transition, reward, terminal))
}

/// Game wrapper around a shared [`TabularMdp`].
pub struct TabularGame {
    mdp: Arc<TabularMdp>,
    state: u16,
    t: u32,
}

impl TabularGame {
    pub fn new(mdp: Arc<TabularMdp>) -> TabularGame {
        let state = mdp.start();
        TabularGame { mdp, state, t: 0 }
    }

    pub fn state(&self) -> u16 {
        self.state
    }

    pub fn mdp(&self) -> &Arc<TabularMdp> {
        &self.mdp
    }
}

impl Game for TabularGame {
    const ID: &'static str = "chain";
    const TAG: [u8; 4] = *b"TAB1";

    fn start(&mut self, _seed: u64) {
        self.state = self.mdp.start();
        self.t = 0;
    }

    fn step(&mut self, action: Action) -> f64 {
        let reward = self.mdp.reward(self.state, action);
        self.state = self.mdp.next_state(self.state, action);
        self.t += 1;
        reward
    }

    fn over(&self) -> bool {
        self.mdp.is_terminal(self.state)
    }

    fn render(&self, screen: &mut Screen) {
        let col = self.state as usize % 16;
        let row = self.state as usize / 16;
        screen.fill_rect(
            (col * CELL_W) as i32,
            (row * CELL_H) as i32,
            CELL_W as u32,
            CELL_H as u32,
            COLOR_MARKER,
        );
    }

    fn write_ram(&self, ram: &mut RamState) {
        ram.set(self.state as usize, 1);
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.put_u64(self.mdp.fingerprint());
        out.put_u16(self.state);
        out.put_u32(self.t);
    }

    fn decode(&self, r: &mut ByteReader<'_>) -> Result<Self, EnvError> {
        let fingerprint = r.read_u64()?;
        if fingerprint != self.mdp.fingerprint() {
            return Err(EnvError::StateModelMismatch);
        }
        Ok(TabularGame { mdp: Arc::clone(&self.mdp), state: r.read_u16()?, t: r.read_u32()? })
    }

    fn minimal_actions(&self) -> &'static [Action] {
        &[Action::LEFT, Action::CENTER, Action::RIGHT]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{Environment, EpisodeConfig, GameEnv};

    fn chain_env() -> GameEnv<TabularGame> {
        let mut e = GameEnv::new(TabularGame::new(chain_world()));
        e.reset(&EpisodeConfig { frames_per_action: 1, max_frames: 1_000, seed: 0 });
        e
    }

    #[test]
    fn heading_left_exits_in_four_steps_for_net_point_eight() {
        let mut e = chain_env();
        let mut total = 0.0;
        for step in 0..4 {
            let eff = e.act_unobserved(Action::LEFT).unwrap();
            total += eff.reward;
            assert_eq!(eff.terminal, step == 3);
        }
        assert!((total - 0.8).abs() < 1e-12);
    }

    #[test]
    fn heading_right_exits_in_five_steps_for_net_point_seven_five() {
        let mut e = chain_env();
        let mut total = 0.0;
        for _ in 0..5 {
            total += e.act_unobserved(Action::RIGHT).unwrap().reward;
        }
        assert!((total - 0.75).abs() < 1e-12);
    }

    #[test]
    fn vertical_motion_stays_put_and_pays_the_step_cost() {
        let mut e = chain_env();
        let eff = e.act_unobserved(Action::UP).unwrap();
        assert_eq!(eff.reward, -0.05);
        assert_eq!(e.game().state(), 4);
    }

    #[test]
    fn ram_is_one_hot_in_the_state() {
        let mut e = chain_env();
        let obs = e.act(Action::LEFT).unwrap();
        let bytes = obs.ram.bytes();
        assert_eq!(bytes[3], 1);
        assert_eq!(bytes.iter().map(|&b| b as u32).sum::<u32>(), 1);
    }

    #[test]
    fn screen_marks_exactly_one_tile_cell() {
        let mut e = chain_env();
        let obs = e.act(Action::RIGHT).unwrap();
        let mut lit = 0;
        for y in 0..210 {
            for x in 0..160 {
                if obs.screen.get(x, y) != 0 {
                    lit += 1;
                    assert_eq!(obs.screen.get(x, y), COLOR_MARKER);
                    // State 5 renders in tile column 5, row 0.
                    assert!((50..60).contains(&x) && y < 15);
                }
            }
        }
        assert_eq!(lit, CELL_W * CELL_H);
    }

    #[test]
    fn snapshots_refuse_a_different_model_instance() {
        let e = chain_env();
        let snap = e.save_state();

        // Same game type, structurally different tables.
        let other = TabularMdp::new(
            0,
            alloc::vec![[1u16; Action::COUNT], [1u16; Action::COUNT]],
            alloc::vec![[0.0; Action::COUNT], [0.0; Action::COUNT]],
            alloc::vec![false, true],
        );
        let mut other_env = GameEnv::new(TabularGame::new(Arc::new(other)));
        assert_eq!(other_env.restore_state(&snap), Err(EnvError::StateModelMismatch));
    }

    #[test]
    fn episode_truncates_at_the_frame_cap() {
        let mut e = GameEnv::new(TabularGame::new(chain_world()));
        e.reset(&EpisodeConfig { frames_per_action: 1, max_frames: 3, seed: 0 });
        // Stalling never reaches an exit; the cap ends the episode.
        e.act_unobserved(Action::CENTER).unwrap();
        e.act_unobserved(Action::CENTER).unwrap();
        let eff = e.act_unobserved(Action::CENTER).unwrap();
        assert!(eff.terminal);
        assert!(e.act_unobserved(Action::CENTER).is_err());
    }

    #[test]
    fn reward_window_sums_over_frames_per_action() {
        let mut e = GameEnv::new(TabularGame::new(chain_world()));
        e.reset(&EpisodeConfig { frames_per_action: 3, max_frames: 1_000, seed: 0 });
        // Three stay-put frames in one decision: reward -0.15.
        let obs = e.act(Action::UP).unwrap();
        assert!((obs.reward + 0.15).abs() < 1e-12);
        assert_eq!(obs.frame, 3);
    }

    #[test]
    fn window_stops_early_at_a_terminal_state() {
        let mut e = GameEnv::new(TabularGame::new(chain_world()));
        e.reset(&EpisodeConfig { frames_per_action: 5, max_frames: 1_000, seed: 0 });
        // Four left frames reach the exit; the fifth frame must not run.
        let obs = e.act(Action::LEFT).unwrap();
        assert!(obs.terminal);
        assert_eq!(obs.frame, 4);
        assert!((obs.reward - 0.8).abs() < 1e-12);
    }
}
