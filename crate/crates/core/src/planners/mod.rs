//! Online planners behind a common [`Planner`] interface.
//!
//! Every planner builds its structure from scratch at each decision, spends
//! exactly `budget` simulations, and recommends the legal root action with the
//! highest mean return. Memory is counted in planner-specific units:
//! bandits for the stacks, o-nodes plus a-nodes for POMCP, and history
//! distribution nodes for the open-loop trees.

mod open_loop;
mod pomcp;
mod stack;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::bandit::{ActionId, BanditError, NormalGammaParams};
use crate::pomdp::{GenerativeModel, ParticleBelief};

pub use open_loop::{OpenLoopTreePlanner, TreePolicy};
pub use pomcp::PomcpPlanner;
pub use stack::{PostsPlanner, SimulationSummary, SymbolPlanner};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("simulation budget must be at least 1")]
    ZeroBudget,
    #[error("planning horizon must be at least 1")]
    ZeroHorizon,
    #[error("kappa must be at least 1")]
    ZeroKappa,
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("UCB1 constant must be non-negative, got {0}")]
    NegativeUcb(f64),
    #[error("memory cap must be at least 1")]
    ZeroMemCap,
    #[error(transparent)]
    Prior(#[from] BanditError),
    #[error("unknown planner `{0}` (expected symbol, posts, pomcp, pooluct or poolts)")]
    UnknownPlanner(String),
}

/// Hyperparameters shared by all planners. Each planner reads the subset it
/// needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    /// Simulations per decision.
    pub budget: usize,
    pub horizon: usize,
    /// Number of recent mean shifts averaged by the convergence gate.
    pub kappa: usize,
    /// Convergence threshold on the averaged mean shift.
    pub epsilon: f64,
    pub prior: NormalGammaParams,
    /// UCB1 exploration constant.
    pub ucb_c: f64,
    /// Upper bound on the planner's memory count, if any.
    pub mem_cap: Option<usize>,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            budget: 4096,
            horizon: 100,
            kappa: 8,
            epsilon: 6.4,
            prior: NormalGammaParams {
                mu0: 0.0,
                lambda: 0.01,
                alpha: 1.0,
                beta: 100.0,
            },
            ucb_c: 1.0,
            mem_cap: None,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.budget == 0 {
            return Err(ConfigError::ZeroBudget);
        }
        if self.horizon == 0 {
            return Err(ConfigError::ZeroHorizon);
        }
        if self.kappa == 0 {
            return Err(ConfigError::ZeroKappa);
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(ConfigError::NonPositiveEpsilon(self.epsilon));
        }
        if self.ucb_c.is_nan() || self.ucb_c < 0.0 {
            return Err(ConfigError::NegativeUcb(self.ucb_c));
        }
        if self.mem_cap == Some(0) {
            return Err(ConfigError::ZeroMemCap);
        }
        self.prior.validate()?;
        Ok(())
    }

    /// Whether a structure currently holding `used` units may grow by `extra`.
    pub(crate) fn may_grow(&self, used: usize, extra: usize) -> bool {
        self.mem_cap.is_none_or(|cap| used + extra <= cap)
    }
}

/// A planner that recommends one action per call from a particle belief.
pub trait Planner<M: GenerativeModel> {
    /// Runs the configured number of simulations and returns the
    /// recommended action, always legal in the belief's states.
    fn plan<R: Rng + ?Sized>(&mut self, model: &M, belief: &ParticleBelief<M::State>, rng: &mut R) -> ActionId;

    /// Memory count of the structure built by the last `plan` call. The
    /// structure only grows within a decision, so this is also its peak.
    fn peak_memory(&self) -> usize;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlannerKind {
    Symbol,
    Posts,
    Pomcp,
    PoolUct,
    PoolTs,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 5] = [
        PlannerKind::Symbol,
        PlannerKind::Posts,
        PlannerKind::Pomcp,
        PlannerKind::PoolUct,
        PlannerKind::PoolTs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Symbol => "symbol",
            PlannerKind::Posts => "posts",
            PlannerKind::Pomcp => "pomcp",
            PlannerKind::PoolUct => "pooluct",
            PlannerKind::PoolTs => "poolts",
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PlannerKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ConfigError::UnknownPlanner(s.to_string()))
    }
}

/// Any of the five planners, for callers that pick one at runtime.
#[derive(Debug, Clone)]
pub enum AnyPlanner {
    Symbol(SymbolPlanner),
    Posts(PostsPlanner),
    Pomcp(PomcpPlanner),
    OpenLoop(OpenLoopTreePlanner),
}

impl AnyPlanner {
    pub fn new(kind: PlannerKind, cfg: PlannerConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        Ok(match kind {
            PlannerKind::Symbol => AnyPlanner::Symbol(SymbolPlanner::new(cfg)),
            PlannerKind::Posts => AnyPlanner::Posts(PostsPlanner::new(cfg)),
            PlannerKind::Pomcp => AnyPlanner::Pomcp(PomcpPlanner::new(cfg)),
            PlannerKind::PoolUct => AnyPlanner::OpenLoop(OpenLoopTreePlanner::new(cfg, TreePolicy::Ucb1)),
            PlannerKind::PoolTs => AnyPlanner::OpenLoop(OpenLoopTreePlanner::new(cfg, TreePolicy::Thompson)),
        })
    }
}

impl<M: GenerativeModel> Planner<M> for AnyPlanner {
    fn plan<R: Rng + ?Sized>(&mut self, model: &M, belief: &ParticleBelief<M::State>, rng: &mut R) -> ActionId {
        match self {
            AnyPlanner::Symbol(p) => p.plan(model, belief, rng),
            AnyPlanner::Posts(p) => p.plan(model, belief, rng),
            AnyPlanner::Pomcp(p) => p.plan(model, belief, rng),
            AnyPlanner::OpenLoop(p) => p.plan(model, belief, rng),
        }
    }

    fn peak_memory(&self) -> usize {
        match self {
            AnyPlanner::Symbol(p) => Planner::<M>::peak_memory(p),
            AnyPlanner::Posts(p) => Planner::<M>::peak_memory(p),
            AnyPlanner::Pomcp(p) => Planner::<M>::peak_memory(p),
            AnyPlanner::OpenLoop(p) => Planner::<M>::peak_memory(p),
        }
    }
}

/// Uniform choice among the legal actions of `state`.
pub(crate) fn random_legal<M, R>(model: &M, state: &M::State, legal: &mut Vec<ActionId>, rng: &mut R) -> ActionId
where
    M: GenerativeModel,
    R: Rng + ?Sized,
{
    model.legal_actions(state, legal);
    legal[rng.random_range(0..legal.len())]
}

/// Runs the uniform rollout policy from `state` for at most `steps` steps,
/// appending rewards to `rewards`. Stops early at a terminal state.
pub(crate) fn rollout_into<M, R>(
    model: &M,
    state: &mut M::State,
    steps: usize,
    legal: &mut Vec<ActionId>,
    rewards: &mut Vec<f64>,
    rng: &mut R,
) where
    M: GenerativeModel,
    R: Rng + ?Sized,
{
    for _ in 0..steps {
        if model.is_terminal(state) {
            break;
        }
        let a = random_legal(model, state, legal, rng);
        let out = model.step(state, a, rng);
        rewards.push(out.reward);
        if out.terminal {
            break;
        }
    }
}

/// Rewards collected by the uniform random legal-action policy.
pub fn rollout<M, R>(state: &M::State, model: &M, steps_remaining: usize, rng: &mut R) -> Vec<f64>
where
    M: GenerativeModel,
    R: Rng + ?Sized,
{
    let mut s = state.clone();
    let mut legal = Vec::new();
    let mut rewards = Vec::new();
    rollout_into(model, &mut s, steps_remaining, &mut legal, &mut rewards, rng);
    rewards
}

/// Legal actions at the root, read from one belief particle. Everything that
/// decides legality in the bundled domains is observable, so all particles
/// agree.
pub(crate) fn root_legal<M: GenerativeModel>(model: &M, belief: &ParticleBelief<M::State>, out: &mut Vec<ActionId>) {
    model.legal_actions(&belief.particles()[0], out);
    assert!(!out.is_empty(), "planning from a state without legal actions");
}
