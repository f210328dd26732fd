//! RockSample(n, k).
//!
//! The agent walks an `n x n` grid holding `k` rocks of unknown quality.
//! Sampling a good rock pays +10 and spoils it; sampling a bad rock costs
//! -10. Leaving through the east edge pays +10 and ends the episode. Checking
//! rock `i` reports its quality correctly with probability
//! `0.5 * (1 + 2^(-d / 20))`, where `d` is the Euclidean distance to the rock.
//!
//! Actions: `0..4` move north, south, east, west; `4` samples; `5 + i`
//! checks rock `i`. Observations: [`OBS_NONE`], [`OBS_GOOD`], [`OBS_BAD`].

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bandit::ActionId;
use crate::pomdp::{GenerativeModel, Outcome};

pub const NORTH: ActionId = 0;
pub const SOUTH: ActionId = 1;
pub const EAST: ActionId = 2;
pub const WEST: ActionId = 3;
pub const SAMPLE: ActionId = 4;
pub const FIRST_CHECK: ActionId = 5;

pub const OBS_NONE: u64 = 0;
pub const OBS_GOOD: u64 = 1;
pub const OBS_BAD: u64 = 2;

/// Distance at which the sensor's advantage over a coin flip halves.
pub const HALF_EFFICIENCY_DISTANCE: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Coord {
    pub x: i32,
    pub y: i32,
}

impl Coord {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Coord) -> f64 {
        let dx = (self.x - other.x) as f64;
        let dy = (self.y - other.y) as f64;
        (dx * dx + dy * dy).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RockSampleState {
    pub agent: Coord,
    /// Bit `i` set iff rock `i` is good.
    pub rock_good: u64,
    pub terminal: bool,
}

impl RockSampleState {
    pub fn is_good(&self, rock: usize) -> bool {
        self.rock_good >> rock & 1 == 1
    }

    pub fn good_count(&self) -> u32 {
        self.rock_good.count_ones()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RockSample {
    size: i32,
    start: Coord,
    rocks: Vec<Coord>,
}

const ROCKS_7_8: [(i32, i32); 8] = [(2, 0), (0, 1), (3, 1), (6, 3), (2, 4), (3, 4), (5, 5), (1, 6)];
const ROCKS_11_11: [(i32, i32); 11] = [
    (0, 3),
    (0, 7),
    (1, 8),
    (2, 4),
    (3, 3),
    (3, 8),
    (4, 3),
    (5, 8),
    (6, 1),
    (9, 3),
    (9, 9),
];

impl RockSample {
    /// The standard layouts for (7, 8) and (11, 11); other sizes place rocks
    /// on distinct cells drawn from a generator seeded by `(n, k)`, so a
    /// given size always yields the same map.
    ///
    /// # Panics
    /// If `n < 2`, `k > 64`, or `k` exceeds the number of cells.
    pub fn new(n: usize, k: usize) -> Self {
        assert!(n >= 2, "grid must be at least 2x2");
        assert!(k <= 64 && k <= n * n, "at most 64 rocks, one per cell");
        let size = n as i32;
        let start = Coord::new(0, size / 2);
        let rocks = match (n, k) {
            (7, 8) => ROCKS_7_8.iter().map(|&(x, y)| Coord::new(x, y)).collect(),
            (11, 11) => ROCKS_11_11.iter().map(|&(x, y)| Coord::new(x, y)).collect(),
            _ => {
                let mut rng = ChaCha8Rng::seed_from_u64(((n as u64) << 32) | k as u64);
                sample(&mut rng, n * n, k)
                    .into_iter()
                    .map(|c| Coord::new((c % n) as i32, (c / n) as i32))
                    .collect()
            }
        };
        Self { size, start, rocks }
    }

    /// A custom map.
    pub fn with_layout(n: usize, start: Coord, rocks: Vec<Coord>) -> Self {
        assert!(rocks.len() <= 64);
        Self {
            size: n as i32,
            start,
            rocks,
        }
    }

    pub fn size(&self) -> usize {
        self.size as usize
    }

    pub fn rocks(&self) -> &[Coord] {
        &self.rocks
    }

    pub fn start(&self) -> Coord {
        self.start
    }

    pub fn rock_at(&self, c: Coord) -> Option<usize> {
        self.rocks.iter().position(|&r| r == c)
    }

    /// Probability that checking `rock` from `from` reports its true quality.
    pub fn sensor_accuracy(&self, from: Coord, rock: usize) -> f64 {
        let d = from.distance(self.rocks[rock]);
        0.5 * (1.0 + (-d / HALF_EFFICIENCY_DISTANCE).exp2())
    }

    fn is_legal(&self, s: &RockSampleState, a: ActionId) -> bool {
        match a {
            NORTH => s.agent.y + 1 < self.size,
            SOUTH => s.agent.y > 0,
            EAST => true,
            WEST => s.agent.x > 0,
            SAMPLE => self.rock_at(s.agent).is_some(),
            _ => a - FIRST_CHECK < self.rocks.len(),
        }
    }
}

impl GenerativeModel for RockSample {
    type State = RockSampleState;

    fn num_actions(&self) -> usize {
        FIRST_CHECK + self.rocks.len()
    }

    fn discount(&self) -> f64 {
        0.95
    }

    fn reward_range(&self) -> f64 {
        20.0
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> RockSampleState {
        let mut good = 0u64;
        for i in 0..self.rocks.len() {
            if rng.random_bool(0.5) {
                good |= 1 << i;
            }
        }
        RockSampleState {
            agent: self.start,
            rock_good: good,
            terminal: false,
        }
    }

    fn legal_actions(&self, s: &RockSampleState, out: &mut Vec<ActionId>) {
        out.clear();
        if s.terminal {
            return;
        }
        out.extend((0..self.num_actions()).filter(|&a| self.is_legal(s, a)));
    }

    fn is_terminal(&self, s: &RockSampleState) -> bool {
        s.terminal
    }

    fn step<R: Rng + ?Sized>(&self, s: &mut RockSampleState, a: ActionId, rng: &mut R) -> Outcome {
        assert!(!s.terminal && self.is_legal(s, a), "illegal RockSample action {a}");
        let mut outcome = Outcome {
            observation: OBS_NONE,
            reward: 0.0,
            terminal: false,
        };
        match a {
            NORTH => s.agent.y += 1,
            SOUTH => s.agent.y -= 1,
            WEST => s.agent.x -= 1,
            EAST => {
                if s.agent.x + 1 == self.size {
                    s.terminal = true;
                    outcome.reward = 10.0;
                    outcome.terminal = true;
                } else {
                    s.agent.x += 1;
                }
            }
            SAMPLE => {
                let rock = self.rock_at(s.agent).expect("checked legal");
                if s.is_good(rock) {
                    s.rock_good &= !(1 << rock);
                    outcome.reward = 10.0;
                } else {
                    outcome.reward = -10.0;
                }
            }
            _ => {
                let rock = a - FIRST_CHECK;
                let correct = rng.random_bool(self.sensor_accuracy(s.agent, rock));
                outcome.observation = if s.is_good(rock) == correct { OBS_GOOD } else { OBS_BAD };
            }
        }
        outcome
    }
}
