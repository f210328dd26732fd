//! PocMan: partially observable Pac-Man on a 17x19 maze.
//!
//! # Maze format
//!
//! One text line per row, all rows the same width, at most 384 cells:
//!
//! | char | meaning |
//! |------|---------|
//! | `#`  | wall |
//! | `.`  | free cell (may hold food) |
//! | `P`  | agent start (exactly one) |
//! | `G`  | ghost start (one or more; ghosts are assigned in reading order, cycling if fewer than four) |
//! | `o`  | power pill (at most eight) |
//!
//! Cells outside the grid count as walls. Trailing whitespace and blank
//! trailing lines are ignored.
//!
//! # Dynamics
//!
//! Actions `0..4` move north, east, south, west; moves into walls are not
//! legal. Every step costs 1. Food pays 10. A power pill grants 15 steps of
//! power, during which touching a ghost pays 25 and sends it home; touching a
//! ghost without power costs 100 and ends the episode. Ghosts flee while the
//! agent is powered, chase with probability 0.75 while they can see the
//! agent along a row or column, and otherwise wander uniformly.
//!
//! # Observations
//!
//! A 13-bit code, direction order north, east, south, west:
//!
//! | bits | content |
//! |------|---------|
//! | 0-3  | a ghost is in the straight line of sight in that direction |
//! | 4    | a ghost is within Manhattan distance 2 |
//! | 5-8  | the adjacent cell in that direction is a wall |
//! | 9-12 | the adjacent cell in that direction holds food or a power pill |

use rand::Rng;
use thiserror::Error;

use crate::bandit::ActionId;
use crate::pomdp::{GenerativeModel, Outcome};

pub const NORTH: ActionId = 0;
pub const EAST: ActionId = 1;
pub const SOUTH: ActionId = 2;
pub const WEST: ActionId = 3;

pub const NUM_GHOSTS: usize = 4;
pub const POWER_STEPS: u8 = 15;
pub const CHASE_PROB: f64 = 0.75;
pub const HEARING_RANGE: i32 = 2;
pub const FOOD_PROB: f64 = 0.5;

pub const REWARD_STEP: f64 = -1.0;
pub const REWARD_FOOD: f64 = 10.0;
pub const REWARD_EAT_GHOST: f64 = 25.0;
pub const REWARD_DIE: f64 = -100.0;

const MAX_CELLS: usize = 384;
const MAX_PILLS: usize = 8;
const FOOD_WORDS: usize = MAX_CELLS / 64;

/// The maze shipped with the crate.
pub const DEFAULT_MAZE: &str = include_str!("pocman_maze.txt");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MazeError {
    #[error("maze is empty")]
    Empty,
    #[error("row {row} has width {got}, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("unexpected character {ch:?} at row {row}, column {col}")]
    BadChar { ch: char, row: usize, col: usize },
    #[error("maze needs exactly one agent start `P`, found {0}")]
    AgentStart(usize),
    #[error("maze needs at least one ghost start `G`")]
    NoGhosts,
    #[error("maze has {0} cells; at most {MAX_CELLS} are supported")]
    TooLarge(usize),
    #[error("maze has {0} power pills; at most {MAX_PILLS} are supported")]
    TooManyPills(usize),
}

pub type Cell = u16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Maze {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    agent_start: Cell,
    ghost_starts: [Cell; NUM_GHOSTS],
    pills: Vec<Cell>,
    /// Cells that may hold food at reset.
    food_cells: Vec<Cell>,
    neighbours: Vec<[Option<Cell>; 4]>,
}

impl Maze {
    pub fn parse(text: &str) -> Result<Self, MazeError> {
        let rows: Vec<&str> = text.lines().map(str::trim_end).collect();
        let rows: Vec<&str> = {
            let end = rows.iter().rposition(|r| !r.is_empty()).map_or(0, |i| i + 1);
            rows[..end].to_vec()
        };
        if rows.is_empty() {
            return Err(MazeError::Empty);
        }
        let width = rows[0].chars().count();
        let height = rows.len();
        if width * height > MAX_CELLS {
            return Err(MazeError::TooLarge(width * height));
        }
        let mut walls = Vec::with_capacity(width * height);
        let mut agents = Vec::new();
        let mut ghosts = Vec::new();
        let mut pills = Vec::new();
        let mut plain = Vec::new();
        for (y, row) in rows.iter().enumerate() {
            let got = row.chars().count();
            if got != width {
                return Err(MazeError::Ragged {
                    row: y,
                    got,
                    expected: width,
                });
            }
            for (x, ch) in row.chars().enumerate() {
                let cell = (y * width + x) as Cell;
                match ch {
                    '#' => {}
                    '.' => plain.push(cell),
                    'P' => agents.push(cell),
                    'G' => ghosts.push(cell),
                    'o' => pills.push(cell),
                    _ => return Err(MazeError::BadChar { ch, row: y, col: x }),
                }
                walls.push(ch == '#');
            }
        }
        if agents.len() != 1 {
            return Err(MazeError::AgentStart(agents.len()));
        }
        if ghosts.is_empty() {
            return Err(MazeError::NoGhosts);
        }
        if pills.len() > MAX_PILLS {
            return Err(MazeError::TooManyPills(pills.len()));
        }
        let ghost_starts = std::array::from_fn(|i| ghosts[i % ghosts.len()]);
        let mut maze = Maze {
            width,
            height,
            walls,
            agent_start: agents[0],
            ghost_starts,
            pills,
            food_cells: plain,
            neighbours: Vec::new(),
        };
        maze.neighbours = (0..width * height)
            .map(|c| std::array::from_fn(|d| maze.raw_neighbour(c as Cell, d)))
            .collect();
        Ok(maze)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn coords(&self, cell: Cell) -> (i32, i32) {
        ((cell as usize % self.width) as i32, (cell as usize / self.width) as i32)
    }

    pub fn cell(&self, x: i32, y: i32) -> Option<Cell> {
        (x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height)
            .then(|| (y as usize * self.width + x as usize) as Cell)
    }

    pub fn is_wall(&self, x: i32, y: i32) -> bool {
        self.cell(x, y).is_none_or(|c| self.walls[c as usize])
    }

    pub fn agent_start(&self) -> Cell {
        self.agent_start
    }

    pub fn ghost_starts(&self) -> &[Cell; NUM_GHOSTS] {
        &self.ghost_starts
    }

    pub fn pills(&self) -> &[Cell] {
        &self.pills
    }

    /// Cells that are not walls.
    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.walls.len()).filter(|&c| !self.walls[c]).map(|c| c as Cell)
    }

    fn raw_neighbour(&self, cell: Cell, dir: usize) -> Option<Cell> {
        let (x, y) = self.coords(cell);
        let (dx, dy) = DIRS[dir];
        if self.is_wall(x + dx, y + dy) {
            None
        } else {
            self.cell(x + dx, y + dy)
        }
    }

    /// The free cell one step from `cell` in direction `dir`, if any.
    pub fn neighbour(&self, cell: Cell, dir: usize) -> Option<Cell> {
        self.neighbours[cell as usize][dir]
    }

    fn manhattan(&self, a: Cell, b: Cell) -> i32 {
        let (ax, ay) = self.coords(a);
        let (bx, by) = self.coords(b);
        (ax - bx).abs() + (ay - by).abs()
    }

    /// Direction from `from` in which `to` is visible along a straight,
    /// wall-free line.
    fn sight_direction(&self, from: Cell, to: Cell) -> Option<usize> {
        (0..4).find(|&d| {
            let mut c = from;
            while let Some(n) = self.neighbour(c, d) {
                if n == to {
                    return true;
                }
                c = n;
            }
            false
        })
    }
}

/// `(dx, dy)` for north, east, south, west; y grows downwards.
const DIRS: [(i32, i32); 4] = [(0, -1), (1, 0), (0, 1), (-1, 0)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PocManState {
    pub agent: Cell,
    pub ghosts: [Cell; NUM_GHOSTS],
    pub food: [u64; FOOD_WORDS],
    /// Bit `i` set iff power pill `i` is still present.
    pub pills: u8,
    pub power_steps: u8,
    pub terminal: bool,
}

impl PocManState {
    pub fn has_food(&self, cell: Cell) -> bool {
        self.food[cell as usize / 64] >> (cell % 64) & 1 == 1
    }

    fn clear_food(&mut self, cell: Cell) {
        self.food[cell as usize / 64] &= !(1 << (cell % 64));
    }

    pub fn food_count(&self) -> u32 {
        self.food.iter().map(|w| w.count_ones()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PocMan {
    maze: Maze,
}

impl Default for PocMan {
    fn default() -> Self {
        Self::new()
    }
}

impl PocMan {
    /// PocMan on the bundled maze.
    pub fn new() -> Self {
        Self {
            maze: Maze::parse(DEFAULT_MAZE).expect("bundled maze is valid"),
        }
    }

    pub fn with_maze(maze: Maze) -> Self {
        Self { maze }
    }

    pub fn maze(&self) -> &Maze {
        &self.maze
    }

    fn edible(&self, s: &PocManState, cell: Cell) -> bool {
        s.has_food(cell) || self.pill_index(cell).is_some_and(|i| s.pills >> i & 1 == 1)
    }

    fn pill_index(&self, cell: Cell) -> Option<usize> {
        self.maze.pills.iter().position(|&p| p == cell)
    }

    /// The 13-bit observation emitted in state `s`.
    pub fn observe(&self, s: &PocManState) -> u64 {
        let m = &self.maze;
        let mut obs = 0u64;
        for &g in &s.ghosts {
            if g != s.agent {
                if let Some(d) = m.sight_direction(s.agent, g) {
                    obs |= 1 << d;
                }
            }
            if m.manhattan(g, s.agent) <= HEARING_RANGE {
                obs |= 1 << 4;
            }
        }
        for d in 0..4 {
            match m.neighbour(s.agent, d) {
                None => obs |= 1 << (5 + d),
                Some(n) => {
                    if self.edible(s, n) {
                        obs |= 1 << (9 + d);
                    }
                }
            }
        }
        obs
    }

    fn move_ghost<R: Rng + ?Sized>(&self, s: &PocManState, g: usize, rng: &mut R) -> Cell {
        let m = &self.maze;
        let pos = s.ghosts[g];
        let mut options = [0 as Cell; 4];
        let mut n = 0;
        for d in 0..4 {
            if let Some(c) = m.neighbour(pos, d) {
                options[n] = c;
                n += 1;
            }
        }
        if n == 0 {
            return pos;
        }
        let options = &options[..n];
        let pick_by = |score: &dyn Fn(Cell) -> i32, rng: &mut R| {
            let (mut best, mut choice, mut ties) = (i32::MIN, options[0], 0u32);
            for &c in options {
                let v = score(c);
                if v > best {
                    (best, choice, ties) = (v, c, 1);
                } else if v == best {
                    ties += 1;
                    if rng.random_range(0..ties) == 0 {
                        choice = c;
                    }
                }
            }
            choice
        };
        if s.power_steps > 0 {
            pick_by(&|c| m.manhattan(c, s.agent), rng)
        } else if m.sight_direction(pos, s.agent).is_some() && rng.random_bool(CHASE_PROB) {
            pick_by(&|c| -m.manhattan(c, s.agent), rng)
        } else {
            options[rng.random_range(0..n)]
        }
    }

    /// Resolves contact between the agent and every ghost on its cell.
    /// Returns `false` if the agent died.
    fn collide(&self, s: &mut PocManState, reward: &mut f64) -> bool {
        for g in 0..NUM_GHOSTS {
            if s.ghosts[g] != s.agent {
                continue;
            }
            if s.power_steps > 0 {
                *reward += REWARD_EAT_GHOST;
                s.ghosts[g] = self.maze.ghost_starts[g];
            } else {
                *reward += REWARD_DIE;
                s.terminal = true;
                return false;
            }
        }
        true
    }
}

impl GenerativeModel for PocMan {
    type State = PocManState;

    fn num_actions(&self) -> usize {
        4
    }

    fn discount(&self) -> f64 {
        0.95
    }

    fn reward_range(&self) -> f64 {
        125.0
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> PocManState {
        let mut food = [0u64; FOOD_WORDS];
        for &c in &self.maze.food_cells {
            if rng.random_bool(FOOD_PROB) {
                food[c as usize / 64] |= 1 << (c % 64);
            }
        }
        PocManState {
            agent: self.maze.agent_start,
            ghosts: self.maze.ghost_starts,
            food,
            pills: ((1u16 << self.maze.pills.len()) - 1) as u8,
            power_steps: 0,
            terminal: false,
        }
    }

    fn legal_actions(&self, s: &PocManState, out: &mut Vec<ActionId>) {
        out.clear();
        if s.terminal {
            return;
        }
        out.extend((0..4).filter(|&d| self.maze.neighbour(s.agent, d).is_some()));
    }

    fn is_terminal(&self, s: &PocManState) -> bool {
        s.terminal
    }

    fn step<R: Rng + ?Sized>(&self, s: &mut PocManState, a: ActionId, rng: &mut R) -> Outcome {
        assert!(!s.terminal, "stepping a terminal PocMan state");
        let next = self
            .maze
            .neighbour(s.agent, a)
            .unwrap_or_else(|| panic!("illegal PocMan move {a}"));
        let mut reward = REWARD_STEP;
        s.power_steps = s.power_steps.saturating_sub(1);
        s.agent = next;

        if self.collide(s, &mut reward) {
            if s.has_food(next) {
                s.clear_food(next);
                reward += REWARD_FOOD;
            }
            if let Some(i) = self.pill_index(next) {
                if s.pills >> i & 1 == 1 {
                    s.pills &= !(1 << i);
                    s.power_steps = POWER_STEPS;
                }
            }
            for g in 0..NUM_GHOSTS {
                s.ghosts[g] = self.move_ghost(s, g, rng);
            }
            self.collide(s, &mut reward);
        }
        Outcome {
            observation: self.observe(s),
            reward,
            terminal: s.terminal,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bundled_maze_shape() {
        let m = Maze::parse(DEFAULT_MAZE).unwrap();
        assert_eq!((m.width(), m.height()), (17, 19));
        assert_eq!(m.pills().len(), 4);
        assert_eq!(m.ghost_starts().len(), 4);
    }

    #[test]
    fn bundled_maze_is_connected() {
        let m = Maze::parse(DEFAULT_MAZE).unwrap();
        let free: Vec<Cell> = m.free_cells().collect();
        let mut seen = vec![false; m.width() * m.height()];
        let mut stack = vec![m.agent_start()];
        seen[m.agent_start() as usize] = true;
        while let Some(c) = stack.pop() {
            for d in 0..4 {
                if let Some(n) = m.neighbour(c, d) {
                    if !seen[n as usize] {
                        seen[n as usize] = true;
                        stack.push(n);
                    }
                }
            }
        }
        assert!(free.iter().all(|&c| seen[c as usize]));
    }

    #[test]
    fn maze_errors() {
        assert_eq!(Maze::parse(""), Err(MazeError::Empty));
        assert!(matches!(Maze::parse("#P#\n##"), Err(MazeError::Ragged { .. })));
        assert!(matches!(Maze::parse("#PX"), Err(MazeError::BadChar { ch: 'X', .. })));
        assert_eq!(Maze::parse("#G#"), Err(MazeError::AgentStart(0)));
        assert_eq!(Maze::parse("#P#"), Err(MazeError::NoGhosts));
    }

    fn open_corridor() -> PocMan {
        PocMan::with_maze(Maze::parse("#######\n#P...G#\n#######").unwrap())
    }

    #[test]
    fn powered_agent_eats_ghost() {
        let game = open_corridor();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = game.sample_initial(&mut rng);
        s.food = [0; FOOD_WORDS];
        s.ghosts = [s.agent + 1; NUM_GHOSTS];
        s.ghosts[1..].fill(5 + 7);
        s.power_steps = 5;
        let out = game.step(&mut s, EAST, &mut rng);
        assert!(!out.terminal);
        assert_eq!(out.reward, REWARD_EAT_GHOST + REWARD_STEP);
    }

    #[test]
    fn unpowered_contact_is_fatal() {
        let game = open_corridor();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = game.sample_initial(&mut rng);
        s.ghosts = [s.agent + 1; NUM_GHOSTS];
        let out = game.step(&mut s, EAST, &mut rng);
        assert!(out.terminal);
        assert_eq!(out.reward, REWARD_DIE + REWARD_STEP);
    }

    #[test]
    fn power_counts_down() {
        let game = PocMan::new();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut s = game.sample_initial(&mut rng);
        s.power_steps = 2;
        let mut legal = Vec::new();
        for expected in [1, 0, 0] {
            game.legal_actions(&s, &mut legal);
            game.step(&mut s, legal[0], &mut rng);
            if s.terminal {
                break;
            }
            assert_eq!(s.power_steps, expected);
        }
    }
}
