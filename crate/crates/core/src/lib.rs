//! Online planning in partially observable domains under a memory budget.
//!
//! The central planner, [`planners::SymbolPlanner`], keeps a stack of
//! Thompson Sampling bandits, one per lookahead step. A new bandit is pushed
//! only once the bandit below it has settled on its action, so the stack
//! grows with what the planner has actually learned instead of with the
//! number of simulations.
//!
//! The crate also provides the baselines it is compared against (a fixed
//! bandit stack, POMCP and two open-loop trees), three benchmark domains, a
//! particle filter and an experiment harness that writes CSV results.
//!
//! ```
//! use symbol_planner::domains::RockSample;
//! use symbol_planner::harness::{run_episode, EpisodeOptions};
//! use symbol_planner::planners::{PlannerConfig, SymbolPlanner};
//! use symbol_planner::pomdp::FilterConfig;
//!
//! let model = RockSample::new(7, 8);
//! let mut planner = SymbolPlanner::new(PlannerConfig { budget: 64, ..PlannerConfig::default() });
//! let opts = EpisodeOptions { max_steps: 5, filter: FilterConfig { particles: 200, ..FilterConfig::default() } };
//! let stats = run_episode(&model, &mut planner, 7, &opts)?;
//! assert!(stats.steps <= 5);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod bandit;
pub mod domains;
pub mod harness;
pub mod planners;
pub mod pomdp;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/bandits.md")]
    mod bandits {}
    #[doc = include_str!("../../../book/src/stack.md")]
    mod stack {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/beliefs.md")]
    mod beliefs {}
    #[doc = include_str!("../../../book/src/domains.md")]
    mod domains {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
