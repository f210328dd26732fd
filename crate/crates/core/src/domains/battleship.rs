//! Battleship on a 10x10 grid with ships of length 1 to 5.
//!
//! Every shot costs 1 and hitting a ship cell pays 1 more. Sinking the last
//! ship cell adds 100 and ends the episode. Actions are cell indices
//! `y * 10 + x`; only cells not yet fired at are legal.

use rand::Rng;

use crate::bandit::ActionId;
use crate::pomdp::{GenerativeModel, Outcome};

pub const WIDTH: usize = 10;
pub const CELLS: usize = WIDTH * WIDTH;
pub const SHIP_LENGTHS: [usize; 5] = [5, 4, 3, 2, 1];
pub const SHIP_CELLS: u32 = 15;

pub const OBS_MISS: u64 = 0;
pub const OBS_HIT: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BattleshipState {
    /// Bit `c` set iff a ship occupies cell `c`.
    pub ships: u128,
    pub hits: u128,
    pub fired: u128,
}

impl BattleshipState {
    pub fn remaining(&self) -> u32 {
        (self.ships & !self.hits).count_ones()
    }

    pub fn is_fired(&self, cell: usize) -> bool {
        self.fired >> cell & 1 == 1
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Battleship;

impl Battleship {
    pub fn new() -> Self {
        Battleship
    }

    /// Places the ships one by one, each at a uniformly drawn position and
    /// orientation, redrawing on overlap. Touching ships are allowed.
    pub fn place_ships<R: Rng + ?Sized>(rng: &mut R) -> u128 {
        let mut board = 0u128;
        for &len in &SHIP_LENGTHS {
            loop {
                let horizontal = rng.random_bool(0.5);
                let (max_x, max_y) = if horizontal {
                    (WIDTH - len, WIDTH - 1)
                } else {
                    (WIDTH - 1, WIDTH - len)
                };
                let x = rng.random_range(0..=max_x);
                let y = rng.random_range(0..=max_y);
                let mut ship = 0u128;
                for i in 0..len {
                    let (cx, cy) = if horizontal { (x + i, y) } else { (x, y + i) };
                    ship |= 1 << (cy * WIDTH + cx);
                }
                if board & ship == 0 {
                    board |= ship;
                    break;
                }
            }
        }
        board
    }
}

impl GenerativeModel for Battleship {
    type State = BattleshipState;

    fn num_actions(&self) -> usize {
        CELLS
    }

    fn discount(&self) -> f64 {
        1.0
    }

    fn reward_range(&self) -> f64 {
        101.0
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> BattleshipState {
        BattleshipState {
            ships: Self::place_ships(rng),
            hits: 0,
            fired: 0,
        }
    }

    fn legal_actions(&self, s: &BattleshipState, out: &mut Vec<ActionId>) {
        out.clear();
        if self.is_terminal(s) {
            return;
        }
        let mut open = !s.fired & ((1u128 << CELLS) - 1);
        while open != 0 {
            out.push(open.trailing_zeros() as usize);
            open &= open - 1;
        }
    }

    fn is_terminal(&self, s: &BattleshipState) -> bool {
        s.ships != 0 && s.remaining() == 0
    }

    fn step<R: Rng + ?Sized>(&self, s: &mut BattleshipState, a: ActionId, _rng: &mut R) -> Outcome {
        assert!(a < CELLS && !s.is_fired(a), "cell {a} already fired or out of range");
        let bit = 1u128 << a;
        s.fired |= bit;
        if s.ships & bit == 0 {
            return Outcome {
                observation: OBS_MISS,
                reward: -1.0,
                terminal: false,
            };
        }
        s.hits |= bit;
        let done = s.remaining() == 0;
        Outcome {
            observation: OBS_HIT,
            reward: if done { 100.0 } else { 0.0 },
            terminal: done,
        }
    }
}
