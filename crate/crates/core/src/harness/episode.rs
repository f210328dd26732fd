use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::HarnessError;
use crate::planners::Planner;
use crate::pomdp::{FilterConfig, GenerativeModel, History, ParticleBelief};

/// Real steps per episode.
pub const MAX_EPISODE_STEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EpisodeOptions {
    pub max_steps: usize,
    pub filter: FilterConfig,
}

impl Default for EpisodeOptions {
    fn default() -> Self {
        Self {
            max_steps: MAX_EPISODE_STEPS,
            filter: FilterConfig::default(),
        }
    }
}

/// Outcome of one episode, before it is labelled with its configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeStats {
    pub undiscounted_return: f64,
    pub discounted_return: f64,
    pub steps: usize,
    /// Largest memory count over all decisions.
    pub peak_memory: usize,
    /// Memory count averaged over decisions; `nMAB` for the stack planners.
    pub mean_memory: f64,
    pub deprivations: usize,
    pub history: History,
    pub wall_ms: u64,
}

/// Plays one episode: plan from the current belief, act in the true
/// environment, filter the belief through the observation, repeat until a
/// terminal state or `max_steps`.
///
/// Environment, planner and filter draw from separate ChaCha streams of
/// `seed`, so a `(seed, planner, domain)` triple fixes the whole episode.
pub fn run_episode<M, P>(model: &M, planner: &mut P, seed: u64, opts: &EpisodeOptions) -> Result<EpisodeStats, HarnessError>
where
    M: GenerativeModel,
    P: Planner<M>,
{
    let started = Instant::now();
    let stream = |id| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id);
        rng
    };
    let mut env_rng = stream(0);
    let mut plan_rng = stream(1);
    let mut filter_rng = stream(2);

    let mut state = model.sample_initial(&mut env_rng);
    let mut belief = ParticleBelief::initial(model, opts.filter.particles, &mut filter_rng);
    let mut history = History::new();
    let mut legal = Vec::new();
    let gamma = model.discount();

    let mut stats = EpisodeStats {
        undiscounted_return: 0.0,
        discounted_return: 0.0,
        steps: 0,
        peak_memory: 0,
        mean_memory: 0.0,
        deprivations: 0,
        history: History::new(),
        wall_ms: 0,
    };
    let mut memory_sum = 0usize;
    let mut weight = 1.0;

    while stats.steps < opts.max_steps && !model.is_terminal(&state) {
        let action = planner.plan(model, &belief, &mut plan_rng);
        let memory = planner.peak_memory();
        stats.peak_memory = stats.peak_memory.max(memory);
        memory_sum += memory;

        model.legal_actions(&state, &mut legal);
        if !legal.contains(&action) {
            return Err(HarnessError::IllegalAction {
                step: stats.steps,
                action,
            });
        }
        let out = model.step(&mut state, action, &mut env_rng);
        stats.steps += 1;
        stats.undiscounted_return += out.reward;
        stats.discounted_return += weight * out.reward;
        weight *= gamma;
        history.push(action, out.observation);

        if !out.terminal && stats.steps < opts.max_steps {
            let (next, status) = belief.update(model, action, out.observation, &history, &opts.filter, &mut filter_rng);
            if status.is_deprived() {
                stats.deprivations += 1;
            }
            belief = next;
        }
    }
    if stats.steps > 0 {
        stats.mean_memory = memory_sum as f64 / stats.steps as f64;
    }
    stats.history = history;
    stats.wall_ms = started.elapsed().as_millis() as u64;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::PlanTable;
    use crate::planners::{AnyPlanner, PlannerConfig, PlannerKind};

    fn small_opts() -> EpisodeOptions {
        EpisodeOptions {
            max_steps: MAX_EPISODE_STEPS,
            filter: FilterConfig {
                particles: 50,
                attempts_per_particle: 10,
            },
        }
    }

    #[test]
    fn no_decision_domain_returns_sum_of_rewards() {
        let chain = PlanTable::chain(&[1.0, 1.0]);
        let cfg = PlannerConfig {
            budget: 20,
            ..PlannerConfig::default()
        };
        for kind in PlannerKind::ALL {
            for seed in 0..3 {
                let mut p = AnyPlanner::new(kind, cfg).unwrap();
                let s = run_episode(&chain, &mut p, seed, &small_opts()).unwrap();
                assert_eq!(s.undiscounted_return, 2.0, "{kind}");
                assert_eq!(s.steps, 2);
            }
        }
    }

    #[test]
    fn same_seed_same_episode() {
        let table = PlanTable::new(3, 3, |p, a| ((p.len() * 7 + a * 3) % 5) as f64);
        let cfg = PlannerConfig {
            budget: 50,
            ..PlannerConfig::default()
        };
        for kind in PlannerKind::ALL {
            let run = || {
                let mut p = AnyPlanner::new(kind, cfg).unwrap();
                let mut s = run_episode(&table, &mut p, 42, &small_opts()).unwrap();
                s.wall_ms = 0;
                s
            };
            assert_eq!(run(), run());
        }
    }
}
