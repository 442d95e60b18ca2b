//! Episodic game environments.
//!
//! All games share one interface: 18 joystick actions, a 160x210 screen
//! of 7-bit colors, 128 bytes of console RAM, a scalar reward per
//! decision point, and exact state save/restore. An action is applied
//! for a fixed number of consecutive frames (`frames_per_action`) and
//! the rewards earned during that window are summed; episodes end when
//! the game says so or when a hard frame cap is reached.
//!
//! Determinism contract: a fresh environment reset with a given
//! [`EpisodeConfig`] produces a bit-identical observation sequence for a
//! given action sequence, on every platform. Snapshots restore the
//! complete state, so replaying any action sequence after a restore is
//! bit-identical to replaying it from the original save point.

mod crossing;
mod dodger;
mod gatherer;
mod tabular;

pub use crossing::Crossing;
pub use dodger::Dodger;
pub use gatherer::Gatherer;
pub use tabular::{chain_world, TabularGame, TabularMdp};

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::codec::{ByteReader, ByteWriter, CodecError};

/// Screen width in pixels.
pub const SCREEN_WIDTH: usize = 160;
/// Screen height in pixels.
pub const SCREEN_HEIGHT: usize = 210;
/// Pixels per screen.
pub const SCREEN_PIXELS: usize = SCREEN_WIDTH * SCREEN_HEIGHT;
/// Size of console RAM in bytes.
pub const RAM_SIZE: usize = 128;
/// Number of distinct palette colors; every pixel is `< NUM_COLORS`.
pub const NUM_COLORS: usize = 128;

/// Identifiers of the built-in games, as accepted by [`make_game`].
pub const GAME_IDS: [&str; 4] = ["crossing", "dodger", "gatherer", "chain"];

/// A joystick action: a direction (one of nine) plus an optional button
/// press. The id encodes `(dy + 1) * 3 + (dx + 1) + 9 * fire`, so ids
/// 0..9 are the plain directions and 9..18 the same directions with the
/// button held.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Action(u8);

impl Action {
    /// Total number of actions.
    pub const COUNT: usize = 18;

    pub const UP_LEFT: Action = Action(0);
    pub const UP: Action = Action(1);
    pub const UP_RIGHT: Action = Action(2);
    pub const LEFT: Action = Action(3);
    pub const CENTER: Action = Action(4);
    pub const RIGHT: Action = Action(5);
    pub const DOWN_LEFT: Action = Action(6);
    pub const DOWN: Action = Action(7);
    pub const DOWN_RIGHT: Action = Action(8);
    pub const LEFT_FIRE: Action = Action(12);
    pub const FIRE: Action = Action(13);
    pub const RIGHT_FIRE: Action = Action(14);

    /// Builds an action from its id. Panics if `id >= 18`.
    pub fn from_id(id: u8) -> Action {
        assert!((id as usize) < Action::COUNT, "action id out of range: {id}");
        Action(id)
    }

    /// The action's id in `0..18`.
    #[inline]
    pub fn id(self) -> u8 {
        self.0
    }

    /// All 18 actions in id order.
    pub fn all() -> impl Iterator<Item = Action> {
        (0..Action::COUNT as u8).map(Action)
    }

    /// Horizontal joystick component: -1, 0, or 1.
    #[inline]
    pub fn dx(self) -> i32 {
        (self.0 % 9 % 3) as i32 - 1
    }

    /// Vertical joystick component: -1 (up), 0, or 1 (down).
    #[inline]
    pub fn dy(self) -> i32 {
        (self.0 % 9 / 3) as i32 - 1
    }

    /// Whether the button is held.
    #[inline]
    pub fn fire(self) -> bool {
        self.0 >= 9
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A 160x210 frame of 7-bit color indices, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct Screen {
    pixels: Vec<u8>,
}

impl Screen {
    /// An all-black (color 0) screen.
    pub fn new() -> Screen {
        Screen { pixels: vec![0; SCREEN_PIXELS] }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * SCREEN_WIDTH + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, color: u8) {
        debug_assert!((color as usize) < NUM_COLORS);
        self.pixels[y * SCREEN_WIDTH + x] = color;
    }

    /// Paints an axis-aligned rectangle, clipped to the screen. `x` may
    /// be negative or past the right edge for sprites entering/leaving.
    pub fn fill_rect(&mut self, x: i32, y: i32, w: u32, h: u32, color: u8) {
        for yy in y.max(0)..(y + h as i32).min(SCREEN_HEIGHT as i32) {
            for xx in x.max(0)..(x + w as i32).min(SCREEN_WIDTH as i32) {
                self.set(xx as usize, yy as usize, color);
            }
        }
    }

    pub fn fill(&mut self, color: u8) {
        debug_assert!((color as usize) < NUM_COLORS);
        self.pixels.fill(color);
    }

    /// Raw row-major pixel data, `SCREEN_PIXELS` bytes.
    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.pixels
    }
}

impl Default for Screen {
    fn default() -> Self {
        Screen::new()
    }
}

impl fmt::Debug for Screen {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Screen({}x{})", SCREEN_WIDTH, SCREEN_HEIGHT)
    }
}

/// The 128 bytes of console RAM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RamState {
    bytes: [u8; RAM_SIZE],
}

impl RamState {
    pub fn new() -> RamState {
        RamState { bytes: [0; RAM_SIZE] }
    }

    #[inline]
    pub fn get(&self, addr: usize) -> u8 {
        self.bytes[addr]
    }

    #[inline]
    pub fn set(&mut self, addr: usize, value: u8) {
        self.bytes[addr] = value;
    }

    #[inline]
    pub fn bytes(&self) -> &[u8; RAM_SIZE] {
        &self.bytes
    }
}

impl Default for RamState {
    fn default() -> Self {
        RamState::new()
    }
}

/// What the agent sees after each decision point.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub screen: Screen,
    pub ram: RamState,
    /// Sum of rewards earned over the action's frame window.
    pub reward: f64,
    /// True once the episode has ended (game over or frame cap).
    pub terminal: bool,
    /// Frames elapsed since the episode started.
    pub frame: u32,
}

/// Reward and termination outcome of a decision point, without the
/// rendered observation. See [`Environment::act_unobserved`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepEffect {
    pub reward: f64,
    pub terminal: bool,
}

/// Per-episode settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeConfig {
    /// Frames each chosen action is repeated for (must be >= 1).
    pub frames_per_action: u32,
    /// Hard episode cap in frames; the episode terminates once reached.
    pub max_frames: u32,
    /// Seed for environment-internal randomness.
    pub seed: u64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        EpisodeConfig { frames_per_action: 5, max_frames: 18_000, seed: 0 }
    }
}

/// Environment errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvError {
    /// `act` was called after the episode ended.
    EpisodeOver,
    /// A snapshot from one game type was fed to another.
    StateTagMismatch { expected: [u8; 4], found: [u8; 4] },
    /// A snapshot taken from a structurally different model instance
    /// (e.g. a different synthetic MDP) of the same game type.
    StateModelMismatch,
    /// A snapshot payload that does not decode.
    StatePayloadInvalid(CodecError),
}

impl fmt::Display for EnvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvError::EpisodeOver => write!(f, "episode is over; reset before acting"),
            EnvError::StateTagMismatch { expected, found } => {
                write!(f, "snapshot tag mismatch: expected {:?}, found {:?}", expected, found)
            }
            EnvError::StateModelMismatch => {
                write!(f, "snapshot was taken from a different model instance")
            }
            EnvError::StatePayloadInvalid(e) => write!(f, "invalid snapshot payload: {e}"),
        }
    }
}

impl core::error::Error for EnvError {}

impl From<CodecError> for EnvError {
    fn from(e: CodecError) -> Self {
        EnvError::StatePayloadInvalid(e)
    }
}

/// A complete, opaque environment snapshot.
///
/// The tag identifies the game type; the payload is that game's private
/// encoding of everything needed to continue the episode bit-exactly
/// (including the episode configuration and frame counter).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmulatorState {
    tag: [u8; 4],
    payload: Vec<u8>,
}

impl EmulatorState {
    pub fn new(tag: [u8; 4], payload: Vec<u8>) -> EmulatorState {
        EmulatorState { tag, payload }
    }

    pub fn tag(&self) -> [u8; 4] {
        self.tag
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    /// Serializes to `[len: u32 LE][tag: 4 bytes][payload]` where `len`
    /// counts the tag plus payload.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.payload.len());
        out.put_u32(4 + self.payload.len() as u32);
        out.put_bytes(&self.tag);
        out.put_bytes(&self.payload);
        out
    }

    /// Inverse of [`EmulatorState::encode`]; the input must contain
    /// exactly one encoded state.
    pub fn decode(bytes: &[u8]) -> Result<EmulatorState, CodecError> {
        let mut r = ByteReader::new(bytes);
        let len = r.read_u32()? as usize;
        if len < 4 || r.remaining() != len {
            return Err(if r.remaining() < len {
                CodecError::UnexpectedEnd
            } else {
                CodecError::TrailingBytes
            });
        }
        let mut tag = [0u8; 4];
        tag.copy_from_slice(r.take(4)?);
        let payload = r.take(len - 4)?.to_vec();
        r.finish()?;
        Ok(EmulatorState { tag, payload })
    }
}

/// The interface every game implements.
///
/// Environments are always "inside" an episode: construction behaves
/// like `reset` with the default configuration.
pub trait Environment {
    /// Stable identifier, e.g. `"crossing"`.
    fn game_id(&self) -> &'static str;

    /// Four-byte snapshot tag for this game type.
    fn state_tag(&self) -> [u8; 4];

    /// The configuration of the current episode.
    fn episode_config(&self) -> EpisodeConfig;

    /// Starts a fresh episode and returns its first observation
    /// (reward 0, frame 0).
    fn reset(&mut self, config: &EpisodeConfig) -> Observation;

    /// Applies `action` for the configured frame window and returns the
    /// resulting observation. Fails once the episode is over.
    fn act(&mut self, action: Action) -> Result<Observation, EnvError>;

    /// Same transition as [`Environment::act`] but skips rendering the
    /// screen and RAM; planners use this to simulate cheaply. The state
    /// evolution is identical to `act`.
    fn act_unobserved(&mut self, action: Action) -> Result<StepEffect, EnvError>;

    /// Captures the complete current state.
    fn save_state(&self) -> EmulatorState;

    /// Restores a state previously captured from an environment of the
    /// same game type (and, for synthetic games, the same model).
    fn restore_state(&mut self, state: &EmulatorState) -> Result<(), EnvError>;

    /// The subset of actions with any effect in this game. Always
    /// non-empty; a superset-agnostic agent may ignore it.
    fn minimal_action_set(&self) -> &'static [Action];
}

/// Per-game logic: one frame of dynamics plus rendering and
/// serialization. The [`GameEnv`] shell turns this into the full
/// [`Environment`] contract so frame windows, the episode cap, reward
/// accumulation, and snapshot framing are implemented exactly once.
pub trait Game: Sized {
    const ID: &'static str;
    const TAG: [u8; 4];

    /// Re-initializes to the start of an episode.
    fn start(&mut self, seed: u64);

    /// Advances one frame under `action`, returning the reward earned
    /// this frame. Never called once `over` returns true.
    fn step(&mut self, action: Action) -> f64;

    /// Whether the game itself has ended (independent of the frame cap).
    fn over(&self) -> bool;

    /// Draws the current frame (the screen arrives zeroed).
    fn render(&self, screen: &mut Screen);

    /// Fills console RAM for the current state (arrives zeroed).
    fn write_ram(&self, ram: &mut RamState);

    /// Appends this game's private state bytes.
    fn encode(&self, out: &mut Vec<u8>);

    /// Decodes a fresh instance from state bytes, using `self` as the
    /// template for any immutable structure (model tables etc.).
    fn decode(&self, r: &mut ByteReader<'_>) -> Result<Self, EnvError>;

    fn minimal_actions(&self) -> &'static [Action];
}

/// Shell wrapping a [`Game`] into a full [`Environment`].
pub struct GameEnv<G> {
    game: G,
    config: EpisodeConfig,
    frame: u32,
    terminal: bool,
}

impl<G: Game> GameEnv<G> {
    pub fn new(game: G) -> GameEnv<G> {
        let mut env = GameEnv { game, config: EpisodeConfig::default(), frame: 0, terminal: false };
        env.reset(&EpisodeConfig::default());
        env
    }

    /// Read-only access to the wrapped game (used by oracles that need
    /// ground-truth internals, e.g. a game's static background).
    pub fn game(&self) -> &G {
        &self.game
    }

    fn advance(&mut self, action: Action) -> Result<StepEffect, EnvError> {
        if self.terminal {
            return Err(EnvError::EpisodeOver);
        }
        let window = self.config.frames_per_action.max(1);
        let mut reward = 0.0;
        for _ in 0..window {
            reward += self.game.step(action);
            self.frame += 1;
            if self.game.over() || self.frame >= self.config.max_frames {
                self.terminal = true;
                break;
            }
        }
        Ok(StepEffect { reward, terminal: self.terminal })
    }

    fn observation(&self, reward: f64) -> Observation {
        let mut screen = Screen::new();
        self.game.render(&mut screen);
        let mut ram = RamState::new();
        self.game.write_ram(&mut ram);
        Observation { screen, ram, reward, terminal: self.terminal, frame: self.frame }
    }
}

impl<G: Game> Environment for GameEnv<G> {
    fn game_id(&self) -> &'static str {
        G::ID
    }

    fn state_tag(&self) -> [u8; 4] {
        G::TAG
    }

    fn episode_config(&self) -> EpisodeConfig {
        self.config
    }

    fn reset(&mut self, config: &EpisodeConfig) -> Observation {
        self.config = *config;
        self.frame = 0;
        self.game.start(config.seed);
        self.terminal = self.game.over();
        self.observation(0.0)
    }

    fn act(&mut self, action: Action) -> Result<Observation, EnvError> {
        let effect = self.advance(action)?;
        Ok(self.observation(effect.reward))
    }

    fn act_unobserved(&mut self, action: Action) -> Result<StepEffect, EnvError> {
        self.advance(action)
    }

    fn save_state(&self) -> EmulatorState {
        let mut payload = Vec::new();
        payload.put_u32(self.config.frames_per_action);
        payload.put_u32(self.config.max_frames);
        payload.put_u64(self.config.seed);
        payload.put_u32(self.frame);
        payload.put_u8(self.terminal as u8);
        self.game.encode(&mut payload);
        EmulatorState::new(G::TAG, payload)
    }

    fn restore_state(&mut self, state: &EmulatorState) -> Result<(), EnvError> {
        if state.tag() != G::TAG {
            return Err(EnvError::StateTagMismatch { expected: G::TAG, found: state.tag() });
        }
        let mut r = ByteReader::new(state.payload());
        let config = EpisodeConfig {
            frames_per_action: r.read_u32()?,
            max_frames: r.read_u32()?,
            seed: r.read_u64()?,
        };
        let frame = r.read_u32()?;
        let terminal = r.read_u8()? != 0;
        let game = self.game.decode(&mut r)?;
        r.finish().map_err(EnvError::from)?;
        self.config = config;
        self.frame = frame;
        self.terminal = terminal;
        self.game = game;
        Ok(())
    }

    fn minimal_action_set(&self) -> &'static [Action] {
        self.game.minimal_actions()
    }
}

/// Instantiates a built-in game by id. See [`GAME_IDS`].
pub fn make_game(id: &str) -> Option<Box<dyn Environment>> {
    match id {
        "crossing" => Some(Box::new(GameEnv::new(Crossing::new()))),
        "dodger" => Some(Box::new(GameEnv::new(Dodger::new()))),
        "gatherer" => Some(Box::new(GameEnv::new(Gatherer::new()))),
        "chain" => Some(Box::new(GameEnv::new(TabularGame::new(chain_world())))),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_ids_decompose_into_joystick_components() {
        // (dx, dy, fire) triples enumerate exactly once across ids 0..18.
        let mut seen = [false; Action::COUNT];
        for a in Action::all() {
            let slot =
                ((a.dy() + 1) * 3 + (a.dx() + 1)) as usize + if a.fire() { 9 } else { 0 };
            assert!(!seen[slot]);
            seen[slot] = true;
        }
        assert!(seen.iter().all(|&s| s));
        assert_eq!(Action::UP.dy(), -1);
        assert_eq!(Action::UP.dx(), 0);
        assert_eq!(Action::DOWN.dy(), 1);
        assert_eq!(Action::LEFT.dx(), -1);
        assert_eq!(Action::RIGHT.dx(), 1);
        assert_eq!(Action::CENTER.dx(), 0);
        assert_eq!(Action::CENTER.dy(), 0);
        assert!(!Action::CENTER.fire());
        assert!(Action::FIRE.fire());
        assert_eq!(Action::FIRE.dx(), 0);
        assert_eq!(Action::FIRE.dy(), 0);
    }

    #[test]
    #[should_panic]
    fn action_id_out_of_range_panics() {
        let _ = Action::from_id(18);
    }

    #[test]
    fn emulator_state_length_prefixed_roundtrip() {
        let state = EmulatorState::new(*b"TEST", vec![1, 2, 3, 4, 5]);
        let bytes = state.encode();
        assert_eq!(&bytes[..4], &9u32.to_le_bytes());
        assert_eq!(EmulatorState::decode(&bytes).unwrap(), state);
    }

    #[test]
    fn emulator_state_decode_rejects_bad_framing() {
        let state = EmulatorState::new(*b"TEST", vec![7; 10]);
        let mut bytes = state.encode();
        bytes.pop();
        assert_eq!(EmulatorState::decode(&bytes), Err(CodecError::UnexpectedEnd));
        let mut bytes = state.encode();
        bytes.push(0);
        assert_eq!(EmulatorState::decode(&bytes), Err(CodecError::TrailingBytes));
    }

    #[test]
    fn screen_fill_rect_clips_to_bounds() {
        let mut s = Screen::new();
        s.fill_rect(-3, -3, 5, 5, 9);
        s.fill_rect(158, 208, 10, 10, 11);
        assert_eq!(s.get(0, 0), 9);
        assert_eq!(s.get(1, 1), 9);
        assert_eq!(s.get(2, 2), 0);
        assert_eq!(s.get(159, 209), 11);
        assert_eq!(s.get(157, 209), 0);
    }

    #[test]
    fn make_game_knows_every_listed_id() {
        for id in GAME_IDS {
            let env = make_game(id).unwrap();
            assert_eq!(env.game_id(), id);
            assert!(!env.minimal_action_set().is_empty());
        }
        assert!(make_game("nonexistent").is_none());
    }
}
