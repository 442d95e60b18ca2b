//! Crossing: guide an avatar from the bottom of the screen to the goal
//! strip at the top, across ten lanes of wrap-around traffic.
//!
//! Each crossing scores one point and returns the avatar to the start;
//! touching a car also returns it to the start (no penalty). The game
//! never ends on its own — episodes run until the frame cap. Dynamics
//! are fully deterministic: car positions are a pure function of the
//! frame counter.

use alloc::vec::Vec;

use crate::codec::{ByteReader, ByteWriter};
use crate::env::{Action, EnvError, Game, RamState, Screen};

// Palette.
const COLOR_GOAL: u8 = 3;
const COLOR_GRASS: u8 = 2;
const COLOR_ROAD: u8 = 1;
const COLOR_AVATAR: u8 = 25;
const COLOR_CAR: u8 = 40;

// Geometry (pixels).
const AVATAR_W: i32 = 6;
const AVATAR_H: i32 = 10;
const AVATAR_X: i32 = 77;
const START_Y: i32 = 198;
const GOAL_Y: i32 = 16; // crossing scores once the avatar's top is above this
const AVATAR_SPEED: i32 = 4;
const CAR_W: i32 = 8;
const CAR_H: i32 = 9;
const NUM_LANES: usize = 10;
const CARS_PER_LANE: u32 = 2;
const CAR_GAP: u32 = 80;

/// Top pixel row of a lane's cars.
fn lane_y(lane: usize) -> i32 {
    33 + 15 * lane as i32
}

/// Starting phase of a lane's first car.
fn lane_phase(lane: usize) -> u32 {
    16 * lane as u32 + 7
}

/// X position of one car at frame `t`, in `0..160`. Even lanes drive
/// right, odd lanes left.
fn car_x(lane: usize, car: u32, t: u32) -> i32 {
    let base = lane_phase(lane) + car * CAR_GAP;
    let shift = t % 160;
    let x = if lane % 2 == 0 { base + shift } else { base + 160 - shift };
    (x % 160) as i32
}

fn rects_overlap(ax: i32, ay: i32, aw: i32, ah: i32, bx: i32, by: i32, bw: i32, bh: i32) -> bool {
    ax < bx + bw && bx < ax + aw && ay < by + bh && by < ay + ah
}

pub struct Crossing {
    y: i32,
    score: u32,
    t: u32,
}

impl Crossing {
    pub fn new() -> Crossing {
        Crossing { y: START_Y, score: 0, t: 0 }
    }

    /// The static background: everything except the avatar and cars.
    pub fn background() -> Screen {
        let mut s = Screen::new();
        s.fill_rect(0, 0, 160, 15, COLOR_GOAL);
        s.fill_rect(0, 15, 160, 15, COLOR_GRASS);
        s.fill_rect(0, 30, 160, 150, COLOR_ROAD);
        s.fill_rect(0, 180, 160, 30, COLOR_GRASS);
        s
    }

    fn hit_by_car(&self) -> bool {
        for lane in 0..NUM_LANES {
            let ly = lane_y(lane);
            if !rects_overlap(AVATAR_X, self.y, AVATAR_W, AVATAR_H, 0, ly, 160, CAR_H) {
                continue;
            }
            for car in 0..CARS_PER_LANE {
                let cx = car_x(lane, car, self.t);
                // A car's rectangle wraps at the right edge; test both images.
                if rects_overlap(AVATAR_X, self.y, AVATAR_W, AVATAR_H, cx, ly, CAR_W, CAR_H)
                    || rects_overlap(
                        AVATAR_X,
                        self.y,
                        AVATAR_W,
                        AVATAR_H,
                        cx - 160,
                        ly,
                        CAR_W,
                        CAR_H,
                    )
                {
                    return true;
                }
            }
        }
        false
    }
}

impl Default for Crossing {
    fn default() -> Self {
        Crossing::new()
    }
}

impl Game for Crossing {
    const ID: &'static str = "crossing";
    const TAG: [u8; 4] = *b"CRS1";

    fn start(&mut self, _seed: u64) {
        *self = Crossing::new();
    }

    fn step(&mut self, action: Action) -> f64 {
        let mut reward = 0.0;
        self.y += AVATAR_SPEED * action.dy();
        if self.y < GOAL_Y {
            reward = 1.0;
            self.score += 1;
            self.y = START_Y;
        } else if self.y > START_Y {
            self.y = START_Y;
        }
        self.t += 1;
        if self.hit_by_car() {
            self.y = START_Y;
        }
        reward
    }

    fn over(&self) -> bool {
        false
    }

    fn render(&self, screen: &mut Screen) {
        *screen = Crossing::background();
        for lane in 0..NUM_LANES {
            let ly = lane_y(lane);
            for car in 0..CARS_PER_LANE {
                let cx = car_x(lane, car, self.t);
                screen.fill_rect(cx, ly, CAR_W as u32, CAR_H as u32, COLOR_CAR);
                screen.fill_rect(cx - 160, ly, CAR_W as u32, CAR_H as u32, COLOR_CAR);
            }
        }
        screen.fill_rect(AVATAR_X, self.y, AVATAR_W as u32, AVATAR_H as u32, COLOR_AVATAR);
    }

    fn write_ram(&self, ram: &mut RamState) {
        ram.set(0, self.y as u8);
        ram.set(1, self.score.min(255) as u8);
        for lane in 0..NUM_LANES {
            ram.set(2 + lane, car_x(lane, 0, self.t) as u8);
        }
        let t = (self.t % 65_536) as u16;
        ram.set(12, (t & 0xFF) as u8);
        ram.set(13, (t >> 8) as u8);
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.put_u8(self.y as u8);
        out.put_u32(self.score);
        out.put_u32(self.t);
    }

    fn decode(&self, r: &mut ByteReader<'_>) -> Result<Self, EnvError> {
        Ok(Crossing { y: r.read_u8()? as i32, score: r.read_u32()?, t: r.read_u32()? })
    }

    fn minimal_actions(&self) -> &'static [Action] {
        &[Action::UP, Action::CENTER, Action::DOWN]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EmulatorState, Environment, EpisodeConfig, GameEnv};

    fn env() -> GameEnv<Crossing> {
        let mut e = GameEnv::new(Crossing::new());
        e.reset(&EpisodeConfig { frames_per_action: 1, max_frames: 100_000, seed: 0 });
        e
    }

    /// Builds a snapshot with the given avatar position and frame count
    /// through the public payload layout.
    fn state_at(y: u8, t: u32) -> EmulatorState {
        let mut payload = Vec::new();
        payload.put_u32(1); // frames_per_action
        payload.put_u32(100_000); // max_frames
        payload.put_u64(0); // seed
        payload.put_u32(t); // episode frame
        payload.put_u8(0); // terminal
        payload.put_u8(y);
        payload.put_u32(0); // score
        payload.put_u32(t);
        EmulatorState::new(Crossing::TAG, payload)
    }

    #[test]
    fn reaching_the_goal_scores_and_resets() {
        let mut e = env();
        e.restore_state(&state_at(19, 0)).unwrap();
        let obs = e.act(Action::UP).unwrap();
        assert_eq!(obs.reward, 1.0);
        assert_eq!(obs.ram.get(0), START_Y as u8);
        assert_eq!(obs.ram.get(1), 1);
    }

    #[test]
    fn cars_knock_the_avatar_back_to_the_start() {
        // Lane 0 runs rightward from phase 7; at t = 63 its first car
        // spans x in [70, 78), overlapping the avatar column.
        let mut e = env();
        e.restore_state(&state_at(lane_y(0) as u8, 62)).unwrap();
        let obs = e.act(Action::CENTER).unwrap();
        assert_eq!(obs.reward, 0.0);
        assert_eq!(obs.ram.get(0), START_Y as u8);
    }

    #[test]
    fn avatar_is_clamped_to_the_playfield_bottom() {
        let mut e = env();
        for _ in 0..5 {
            let obs = e.act(Action::DOWN).unwrap();
            assert_eq!(obs.ram.get(0), START_Y as u8);
        }
    }

    #[test]
    fn up_only_play_keeps_scoring() {
        let mut e = env();
        let mut total = 0.0;
        for _ in 0..10_000 {
            total += e.act(Action::UP).unwrap().reward;
        }
        assert!(total >= 3.0, "up-only play should cross repeatedly, got {total}");
    }

    #[test]
    fn background_matches_rendered_frame_outside_sprites() {
        let mut e = env();
        let bg = Crossing::background();
        e.act_unobserved(Action::CENTER).unwrap();
        let mut screen = Screen::new();
        e.game().render(&mut screen);
        let mut diff = 0usize;
        for y in 0..210 {
            for x in 0..160 {
                if screen.get(x, y) != bg.get(x, y) {
                    diff += 1;
                    let c = screen.get(x, y);
                    assert!(c == COLOR_AVATAR || c == COLOR_CAR);
                }
            }
        }
        // Exactly the sprite pixels differ: one avatar + twenty cars.
        assert_eq!(diff, (AVATAR_W * AVATAR_H) as usize + 20 * (CAR_W * CAR_H) as usize);
    }

    #[test]
    fn dynamics_are_deterministic() {
        let mut a = env();
        let mut b = env();
        for i in 0..200u8 {
            let act = Action::from_id(i % 18);
            assert_eq!(a.act(act).unwrap(), b.act(act).unwrap());
        }
    }

    #[test]
    fn car_positions_wrap_around_the_screen() {
        for t in 0..400 {
            for lane in 0..NUM_LANES {
                let x = car_x(lane, 0, t);
                assert!((0..160).contains(&x));
            }
        }
        // Odd lanes move left: position decreases frame over frame (mod 160).
        let a = car_x(1, 0, 10);
        let b = car_x(1, 0, 11);
        assert_eq!((a - b).rem_euclid(160), 1);
    }
}
