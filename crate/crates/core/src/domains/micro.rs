//! Small deterministic domains with enumerable plan spaces, for checking
//! planners against brute force.

use rand::Rng;

use crate::bandit::ActionId;
use crate::pomdp::{GenerativeModel, Outcome};

/// Position in a [`PlanTable`]: the actions taken so far, base-`actions` encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PlanState {
    pub prefix: usize,
    pub depth: usize,
}

/// A deterministic episode of fixed length. The reward of each action
/// depends on the whole prefix played before it. Every action is always
/// legal and the observation is constant.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanTable {
    depth: usize,
    actions: usize,
    discount: f64,
    /// `rewards[level][prefix * actions + a]`
    rewards: Vec<Vec<f64>>,
}

impl PlanTable {
    /// Builds the table by evaluating `reward(prefix, action)` for every
    /// prefix shorter than `depth`.
    pub fn new<F>(depth: usize, actions: usize, mut reward: F) -> Self
    where
        F: FnMut(&[ActionId], ActionId) -> f64,
    {
        assert!(depth >= 1 && actions >= 1);
        let mut rewards = Vec::with_capacity(depth);
        let mut prefix = Vec::with_capacity(depth);
        for level in 0..depth {
            let count = actions.pow(level as u32);
            let mut row = Vec::with_capacity(count * actions);
            for code in 0..count {
                decode(code, level, actions, &mut prefix);
                for a in 0..actions {
                    row.push(reward(&prefix, a));
                }
            }
            rewards.push(row);
        }
        Self {
            depth,
            actions,
            discount: 1.0,
            rewards,
        }
    }

    /// A single-action chain paying `rewards[t]` at step `t`.
    pub fn chain(rewards: &[f64]) -> Self {
        Self::new(rewards.len(), 1, |p, _| rewards[p.len()])
    }

    pub fn with_discount(mut self, gamma: f64) -> Self {
        self.discount = gamma;
        self
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn reward(&self, s: &PlanState, a: ActionId) -> f64 {
        self.rewards[s.depth][s.prefix * self.actions + a]
    }
}

fn decode(mut code: usize, len: usize, base: usize, out: &mut Vec<ActionId>) {
    out.clear();
    out.resize(len, 0);
    for slot in out.iter_mut().rev() {
        *slot = code % base;
        code /= base;
    }
}

impl GenerativeModel for PlanTable {
    type State = PlanState;

    fn num_actions(&self) -> usize {
        self.actions
    }

    fn discount(&self) -> f64 {
        self.discount
    }

    fn reward_range(&self) -> f64 {
        let all = self.rewards.iter().flatten();
        let max = all.clone().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = all.copied().fold(f64::INFINITY, f64::min);
        (max - min).max(1.0)
    }

    fn sample_initial<R: Rng + ?Sized>(&self, _rng: &mut R) -> PlanState {
        PlanState { prefix: 0, depth: 0 }
    }

    fn legal_actions(&self, s: &PlanState, out: &mut Vec<ActionId>) {
        out.clear();
        if s.depth < self.depth {
            out.extend(0..self.actions);
        }
    }

    fn is_terminal(&self, s: &PlanState) -> bool {
        s.depth >= self.depth
    }

    fn step<R: Rng + ?Sized>(&self, s: &mut PlanState, a: ActionId, _rng: &mut R) -> Outcome {
        assert!(s.depth < self.depth && a < self.actions, "illegal plan-table action {a}");
        let reward = self.reward(s, a);
        s.prefix = s.prefix * self.actions + a;
        s.depth += 1;
        Outcome {
            observation: 0,
            reward,
            terminal: s.depth == self.depth,
        }
    }
}
