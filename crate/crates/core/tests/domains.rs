use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use symbol_planner::bandit::ActionId;
use symbol_planner::domains::battleship::{OBS_HIT, SHIP_CELLS};
use symbol_planner::domains::pocman::{DEFAULT_MAZE, POWER_STEPS};
use symbol_planner::domains::{Battleship, PocMan, RockSample};
use symbol_planner::harness::MAX_EPISODE_STEPS;
use symbol_planner::pomdp::GenerativeModel;

/// Plays uniformly random legal actions until terminal or `max_steps`,
/// calling `visit(before, action, after, outcome)` on every transition.
fn random_walk<M, F>(model: &M, seed: u64, max_steps: usize, mut visit: F)
where
    M: GenerativeModel,
    F: FnMut(&M::State, ActionId, &M::State, &symbol_planner::pomdp::Outcome),
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = model.sample_initial(&mut rng);
    let mut legal = Vec::new();
    for _ in 0..max_steps {
        if model.is_terminal(&s) {
            break;
        }
        model.legal_actions(&s, &mut legal);
        assert!(!legal.is_empty());
        assert!(legal.iter().all(|&a| a < model.num_actions()));
        let a = legal[rng.random_range(0..legal.len())];
        let before = s.clone();
        let out = model.step(&mut s, a, &mut rng);
        visit(&before, a, &s, &out);
        if out.terminal {
            break;
        }
    }
}

#[test]
fn pocman_wall_bits_match_the_maze_text() {
    let grid: Vec<Vec<u8>> = DEFAULT_MAZE.lines().map(|l| l.trim_end().as_bytes().to_vec()).collect();
    let is_wall = |x: i32, y: i32| {
        y < 0 || x < 0 || y as usize >= grid.len() || x as usize >= grid[y as usize].len() || grid[y as usize][x as usize] == b'#'
    };
    let model = PocMan::new();
    let maze = model.maze();
    let free: Vec<_> = maze.free_cells().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let mut s = model.sample_initial(&mut rng);
        s.agent = free[rng.random_range(0..free.len())];
        for g in s.ghosts.iter_mut() {
            *g = free[rng.random_range(0..free.len())];
        }
        let (x, y) = maze.coords(s.agent);
        let obs = model.observe(&s);
        // north, east, south, west with y growing downwards
        for (d, (dx, dy)) in [(0, -1), (1, 0), (0, 1), (-1, 0)].into_iter().enumerate() {
            assert_eq!(obs >> (5 + d) & 1 == 1, is_wall(x + dx, y + dy), "cell ({x},{y}) dir {d}");
        }
    }
}

#[test]
fn pocman_invariants_along_random_play() {
    let model = PocMan::new();
    let maze = model.maze();
    for seed in 0..50 {
        random_walk(&model, seed, MAX_EPISODE_STEPS, |before, _, after, out| {
            assert!(after.power_steps <= POWER_STEPS);
            assert!(after.power_steps == POWER_STEPS || after.power_steps == before.power_steps.saturating_sub(1));
            for &g in &after.ghosts {
                let (x, y) = maze.coords(g);
                assert!(!maze.is_wall(x, y));
            }
            assert!(out.reward >= -101.0 && out.reward <= -1.0 + 10.0 + 4.0 * 25.0);
            assert!(after.food_count() <= before.food_count());
        });
    }
}

#[test]
fn battleship_episodes_see_fifteen_hits_within_one_hundred_shots() {
    let model = Battleship::new();
    for seed in 0..200 {
        let mut hits = 0;
        let mut steps = 0;
        let mut total = 0.0;
        let mut done = false;
        random_walk(&model, seed, 1000, |before, a, after, out| {
            assert!(!before.is_fired(a));
            assert_eq!(after.fired & after.hits, after.hits);
            assert_eq!(after.ships.count_ones(), SHIP_CELLS);
            hits += (out.observation == OBS_HIT) as u32;
            steps += 1;
            total += out.reward;
            done = out.terminal;
        });
        assert!(done);
        assert_eq!(hits, SHIP_CELLS);
        assert!(steps <= 100);
        assert!(total <= 100.0);
    }
}

#[test]
fn rocksample_good_rocks_never_increase() {
    let model = RockSample::new(11, 11);
    for seed in 0..200 {
        let mut total = 0.0;
        random_walk(&model, seed, 500, |before, _, after, out| {
            assert!(after.good_count() <= before.good_count());
            assert!((-10.0..=10.0).contains(&out.reward));
            total += out.reward;
        });
        assert!(total <= 10.0 * 11.0 + 10.0);
    }
}

#[test]
fn documented_reward_ranges() {
    assert_eq!(RockSample::new(11, 11).reward_range(), 20.0);
    assert_eq!(Battleship::new().reward_range(), 101.0);
    assert_eq!(PocMan::new().reward_range(), 125.0);
}

#[test]
fn steps_are_reproducible_under_a_fixed_stream() {
    fn check<M: GenerativeModel>(model: &M)
    where
        M::State: PartialEq + std::fmt::Debug,
    {
        let trace = |seed| {
            let mut v = Vec::new();
            random_walk(model, seed, MAX_EPISODE_STEPS, |_, a, s, out| v.push((a, s.clone(), out.observation, out.reward)));
            v
        };
        for seed in 0..5 {
            assert_eq!(trace(seed), trace(seed));
        }
    }
    check(&RockSample::new(11, 11));
    check(&Battleship::new());
    check(&PocMan::new());
}
