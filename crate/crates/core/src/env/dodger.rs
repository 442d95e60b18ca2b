//! Dodger: a fixed-shooter round. A marching block of enemies descends
//! while the player slides along the bottom and fires a single bullet
//! at a time. Each kill scores five points; the round ends when every
//! enemy is destroyed or one reaches the player's row.
//!
//! The game is fully deterministic, and several actions frequently
//! coincide (vertical input never matters; the trigger is dead while a
//! bullet is in flight), which makes it the reference game for
//! duplicate-state detection in planners.

use alloc::vec::Vec;

use crate::codec::{ByteReader, ByteWriter};
use crate::env::{Action, EnvError, Game, RamState, Screen};

const COLOR_FLOOR: u8 = 4;
const COLOR_PLAYER: u8 = 30;
const COLOR_BULLET: u8 = 60;
const COLOR_ENEMY: u8 = 90;

const PLAYER_W: i32 = 8;
const PLAYER_H: i32 = 6;
const PLAYER_Y: i32 = 200;
const PLAYER_MIN_X: i32 = 4;
const PLAYER_MAX_X: i32 = 148;
const PLAYER_SPEED: i32 = 2;

const BULLET_W: i32 = 2;
const BULLET_H: i32 = 6;
const BULLET_SPEED: i32 = 4;

const ROWS: usize = 3;
const COLS: usize = 6;
const ENEMY_W: i32 = 8;
const ENEMY_H: i32 = 8;
const COL_PITCH: i32 = 20;
const ROW_PITCH: i32 = 16;
const BLOCK_EXTENT: i32 = (COLS as i32 - 1) * COL_PITCH + ENEMY_W;
const BLOCK_MIN_X: i32 = 0;
const BLOCK_MAX_X: i32 = 160 - BLOCK_EXTENT;
const BLOCK_DESCENT: i32 = 4;
const KILL_REWARD: f64 = 5.0;

pub struct Dodger {
    player_x: i32,
    bullet: Option<(i32, i32)>,
    block_x: i32,
    block_y: i32,
    dir: i32,
    /// Bit `row * COLS + col` set while that enemy lives.
    alive: u32,
    score: u32,
    t: u32,
}

impl Dodger {
    pub fn new() -> Dodger {
        Dodger {
            player_x: 76,
            bullet: None,
            block_x: 20,
            block_y: 30,
            dir: 1,
            alive: (1 << (ROWS * COLS)) - 1,
            score: 0,
            t: 0,
        }
    }

    fn alive_count(&self) -> u32 {
        self.alive.count_ones()
    }

    /// The block speeds up as it thins out: it shifts one pixel every
    /// `max(1, alive / 3)` frames.
    fn move_period(&self) -> u32 {
        (self.alive_count() / 3).max(1)
    }

    fn enemy_pos(&self, row: usize, col: usize) -> (i32, i32) {
        (self.block_x + col as i32 * COL_PITCH, self.block_y + row as i32 * ROW_PITCH)
    }

    fn is_alive(&self, row: usize, col: usize) -> bool {
        self.alive & (1 << (row * COLS + col)) != 0
    }
}

impl Default for Dodger {
    fn default() -> Self {
        Dodger::new()
    }
}

impl Game for Dodger {
    const ID: &'static str = "dodger";
    const TAG: [u8; 4] = *b"DDG1";

    fn start(&mut self, _seed: u64) {
        *self = Dodger::new();
    }

    fn step(&mut self, action: Action) -> f64 {
        let mut reward = 0.0;

        // 1. Player slides.
        self.player_x =
            (self.player_x + PLAYER_SPEED * action.dx()).clamp(PLAYER_MIN_X, PLAYER_MAX_X);

        // 2. The bullet in flight advances and despawns off the top.
        if let Some((bx, by)) = self.bullet {
            let by = by - BULLET_SPEED;
            self.bullet = if by + BULLET_H <= 0 { None } else { Some((bx, by)) };
        }

        // 3. The trigger only works while no bullet is in flight.
        if action.fire() && self.bullet.is_none() {
            self.bullet = Some((self.player_x + 3, PLAYER_Y - BULLET_H));
        }

        // 4. The enemy block marches, bouncing off the walls and
        //    descending one notch per bounce.
        if self.t % self.move_period() == 0 {
            let next = self.block_x + self.dir;
            if next < BLOCK_MIN_X || next > BLOCK_MAX_X {
                self.dir = -self.dir;
                self.block_y += BLOCK_DESCENT;
            } else {
                self.block_x = next;
            }
        }

        // 5. Bullet/enemy collisions (the grid spacing guarantees the
        //    bullet can touch at most one enemy per frame).
        if let Some((bx, by)) = self.bullet {
            'hit: for row in 0..ROWS {
                for col in 0..COLS {
                    if !self.is_alive(row, col) {
                        continue;
                    }
                    let (ex, ey) = self.enemy_pos(row, col);
                    if bx < ex + ENEMY_W
                        && ex < bx + BULLET_W
                        && by < ey + ENEMY_H
                        && ey < by + BULLET_H
                    {
                        self.alive &= !(1 << (row * COLS + col));
                        self.bullet = None;
                        self.score += KILL_REWARD as u32;
                        reward = KILL_REWARD;
                        break 'hit;
                    }
                }
            }
        }

        self.t += 1;
        reward
    }

    fn over(&self) -> bool {
        if self.alive == 0 {
            return true;
        }
        // Lowest living row reaching the player's row loses the round.
        for row in (0..ROWS).rev() {
            if (0..COLS).any(|col| self.is_alive(row, col)) {
                return self.block_y + row as i32 * ROW_PITCH + ENEMY_H >= PLAYER_Y;
            }
        }
        false
    }

    fn render(&self, screen: &mut Screen) {
        screen.fill_rect(0, 206, 160, 4, COLOR_FLOOR);
        for row in 0..ROWS {
            for col in 0..COLS {
                if self.is_alive(row, col) {
                    let (ex, ey) = self.enemy_pos(row, col);
                    screen.fill_rect(ex, ey, ENEMY_W as u32, ENEMY_H as u32, COLOR_ENEMY);
                }
            }
        }
        if let Some((bx, by)) = self.bullet {
            screen.fill_rect(bx, by, BULLET_W as u32, BULLET_H as u32, COLOR_BULLET);
        }
        screen.fill_rect(self.player_x, PLAYER_Y, PLAYER_W as u32, PLAYER_H as u32, COLOR_PLAYER);
    }

    fn write_ram(&self, ram: &mut RamState) {
        ram.set(0, self.player_x as u8);
        ram.set(1, self.bullet.is_some() as u8);
        if let Some((bx, by)) = self.bullet {
            ram.set(2, bx as u8);
            ram.set(3, by.max(0) as u8);
        }
        ram.set(4, self.block_x as u8);
        ram.set(5, self.block_y.min(255) as u8);
        for row in 0..ROWS {
            let bits = (self.alive >> (row * COLS)) & ((1 << COLS) - 1);
            ram.set(6 + row, bits as u8);
        }
        ram.set(9, self.alive_count() as u8);
        ram.set(10, self.score.min(255) as u8);
        let t = (self.t % 65_536) as u16;
        ram.set(11, (t & 0xFF) as u8);
        ram.set(12, (t >> 8) as u8);
    }

    fn encode(&self, out: &mut Vec<u8>) {
        out.put_u8(self.player_x as u8);
        match self.bullet {
            Some((bx, by)) => {
                out.put_u8(1);
                out.put_u8(bx as u8);
                out.put_i16(by as i16);
            }
            None => {
                out.put_u8(0);
                out.put_u8(0);
                out.put_i16(0);
            }
        }
        out.put_u8(self.block_x as u8);
        out.put_u16(self.block_y as u16);
        out.put_i8(self.dir as i8);
        out.put_u32(self.alive);
        out.put_u32(self.score);
        out.put_u32(self.t);
    }

    fn decode(&self, r: &mut ByteReader<'_>) -> Result<Self, EnvError> {
        let player_x = r.read_u8()? as i32;
        let bullet_live = r.read_u8()? != 0;
        let bx = r.read_u8()? as i32;
        let by = r.read_i16()? as i32;
        Ok(Dodger {
            player_x,
            bullet: if bullet_live { Some((bx, by)) } else { None },
            block_x: r.read_u8()? as i32,
            block_y: r.read_u16()? as i32,
            dir: r.read_i8()? as i32,
            alive: r.read_u32()?,
            score: r.read_u32()?,
            t: r.read_u32()?,
        })
    }

    fn minimal_actions(&self) -> &'static [Action] {
        &[
            Action::LEFT,
            Action::CENTER,
            Action::RIGHT,
            Action::LEFT_FIRE,
            Action::FIRE,
            Action::RIGHT_FIRE,
        ]
    }
}
