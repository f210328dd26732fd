//! Open-loop planning with a stack of Thompson Sampling bandits, one per
//! time step.
//!
//! [`SymbolPlanner`] grows its stack on demand. Bandit `t + 1` is created and
//! adapted only while bandit `t` looks converged for the action it just
//! played: the newest `kappa` mean shifts of that arm average below
//! `epsilon`. Updates within a simulation run front to back and stop at the
//! first closed gate, so every bandit behind it sees a stationary successor
//! policy until its predecessors settle.
//!
//! [`PostsPlanner`] is the fixed-size variant: all `min(T, mem_cap)` bandits
//! exist from the start and every position is updated in every simulation.

use rand::Rng;

use super::{random_legal, root_legal, Planner, PlannerConfig};
use crate::bandit::{ActionId, Bandit};
use crate::pomdp::{accumulate_returns, GenerativeModel, ParticleBelief};

/// What one SYMBOL simulation did to the stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationSummary {
    /// Number of simulated steps `H`.
    pub steps: usize,
    /// Positions `1..=updated` were updated; always a prefix of the stack.
    pub updated: usize,
    /// Whether a new bandit was pushed onto the stack.
    pub created: bool,
}

#[derive(Debug, Clone)]
pub struct SymbolPlanner {
    cfg: PlannerConfig,
    stack: Vec<Bandit>,
    num_actions: usize,
    legal: Vec<ActionId>,
    actions: Vec<ActionId>,
    returns: Vec<f64>,
}

impl SymbolPlanner {
    pub fn new(cfg: PlannerConfig) -> Self {
        Self {
            cfg,
            stack: Vec::new(),
            num_actions: 0,
            legal: Vec::new(),
            actions: Vec::new(),
            returns: Vec::new(),
        }
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.cfg
    }

    /// Clears the stack down to a single fresh bandit.
    pub fn reset(&mut self, num_actions: usize) {
        self.num_actions = num_actions;
        self.stack.clear();
        self.stack.push(self.new_bandit());
    }

    pub fn stack(&self) -> &[Bandit] {
        &self.stack
    }

    /// `nMAB`, the current number of bandits.
    pub fn stack_len(&self) -> usize {
        self.stack.len()
    }

    /// Actions played in the most recent simulation, in order.
    pub fn last_actions(&self) -> &[ActionId] {
        &self.actions
    }

    fn new_bandit(&self) -> Bandit {
        Bandit::new(self.num_actions, self.cfg.prior, self.cfg.kappa)
    }

    /// One simulation from `s1`: sample a plan, evaluate it, then update the
    /// longest gated prefix of the stack.
    ///
    /// # Panics
    /// If called before [`reset`](Self::reset) or [`Planner::plan`].
    pub fn simulate<M, R>(&mut self, mut state: M::State, model: &M, rng: &mut R) -> SimulationSummary
    where
        M: GenerativeModel,
        R: Rng + ?Sized,
    {
        assert!(!self.stack.is_empty(), "stack not initialised");
        let horizon = self.cfg.horizon;
        self.actions.clear();
        self.returns.clear();
        while self.actions.len() < horizon && !model.is_terminal(&state) {
            let t = self.actions.len();
            let a = if t < self.stack.len() {
                model.legal_actions(&state, &mut self.legal);
                self.stack[t].ts_select(&self.legal, rng)
            } else {
                random_legal(model, &state, &mut self.legal, rng)
            };
            let out = model.step(&mut state, a, rng);
            self.actions.push(a);
            self.returns.push(out.reward);
            if out.terminal {
                break;
            }
        }
        let steps = self.actions.len();
        accumulate_returns(&mut self.returns, model.discount());

        let (kappa, epsilon) = (self.cfg.kappa, self.cfg.epsilon);
        let mut created = false;
        let mut updated = 0;
        for i in 0..steps {
            // i is the zero-based position t - 1
            let open = i <= self.stack.len()
                && i < horizon
                && (i == 0 || self.stack[i - 1].action_converged(self.actions[i - 1], kappa, epsilon));
            if !open {
                break;
            }
            if i == self.stack.len() {
                // at most one new bandit per simulation (reachable only with kappa = 1)
                if created || !self.cfg.may_grow(self.stack.len(), 1) {
                    break;
                }
                self.stack.push(self.new_bandit());
                created = true;
            }
            self.stack[i].update_arm(self.actions[i], self.returns[i]);
            updated += 1;
        }
        SimulationSummary {
            steps,
            updated,
            created,
        }
    }
}

impl<M: GenerativeModel> Planner<M> for SymbolPlanner {
    fn plan<R: Rng + ?Sized>(&mut self, model: &M, belief: &ParticleBelief<M::State>, rng: &mut R) -> ActionId {
        assert!(self.cfg.budget > 0, "simulation budget must be positive");
        self.reset(model.num_actions());
        for _ in 0..self.cfg.budget {
            let s1 = belief.sample_state(rng).clone();
            self.simulate(s1, model, rng);
        }
        root_legal(model, belief, &mut self.legal);
        let legal = std::mem::take(&mut self.legal);
        let choice = self.stack[0]
            .best_mean(&legal, rng)
            .unwrap_or_else(|| legal[rng.random_range(0..legal.len())]);
        self.legal = legal;
        choice
    }

    fn peak_memory(&self) -> usize {
        self.stack.len()
    }
}

#[derive(Debug, Clone)]
pub struct PostsPlanner {
    cfg: PlannerConfig,
    stack: Vec<Bandit>,
    legal: Vec<ActionId>,
    actions: Vec<ActionId>,
    returns: Vec<f64>,
}

impl PostsPlanner {
    pub fn new(cfg: PlannerConfig) -> Self {
        Self {
            cfg,
            stack: Vec::new(),
            legal: Vec::new(),
            actions: Vec::new(),
            returns: Vec::new(),
        }
    }

    /// Planning horizon actually used: `min(T, mem_cap)`.
    pub fn effective_horizon(&self) -> usize {
        self.cfg.mem_cap.map_or(self.cfg.horizon, |cap| cap.min(self.cfg.horizon))
    }

    pub fn reset(&mut self, num_actions: usize) {
        let depth = self.effective_horizon();
        self.stack = vec![Bandit::new(num_actions, self.cfg.prior, 0); depth];
    }

    pub fn stack(&self) -> &[Bandit] {
        &self.stack
    }

    pub fn simulate<M, R>(&mut self, mut state: M::State, model: &M, rng: &mut R) -> usize
    where
        M: GenerativeModel,
        R: Rng + ?Sized,
    {
        self.actions.clear();
        self.returns.clear();
        while self.actions.len() < self.stack.len() && !model.is_terminal(&state) {
            model.legal_actions(&state, &mut self.legal);
            let a = self.stack[self.actions.len()].ts_select(&self.legal, rng);
            let out = model.step(&mut state, a, rng);
            self.actions.push(a);
            self.returns.push(out.reward);
            if out.terminal {
                break;
            }
        }
        accumulate_returns(&mut self.returns, model.discount());
        for (i, (&a, &g)) in self.actions.iter().zip(&self.returns).enumerate() {
            self.stack[i].update_arm(a, g);
        }
        self.actions.len()
    }
}

impl<M: GenerativeModel> Planner<M> for PostsPlanner {
    fn plan<R: Rng + ?Sized>(&mut self, model: &M, belief: &ParticleBelief<M::State>, rng: &mut R) -> ActionId {
        assert!(self.cfg.budget > 0, "simulation budget must be positive");
        self.reset(model.num_actions());
        for _ in 0..self.cfg.budget {
            let s1 = belief.sample_state(rng).clone();
            self.simulate(s1, model, rng);
        }
        root_legal(model, belief, &mut self.legal);
        let legal = std::mem::take(&mut self.legal);
        let choice = self.stack[0]
            .best_mean(&legal, rng)
            .unwrap_or_else(|| legal[rng.random_range(0..legal.len())]);
        self.legal = legal;
        choice
    }

    fn peak_memory(&self) -> usize {
        self.stack.len()
    }
}
