//! Open-loop search trees (POOLUCT and POOLTS).
//!
//! A node stands for an action prefix and summarises every history that
//! prefix can produce. Each node keeps one [`ArmStats`] per action; the
//! child reached by an action exists once that action has been expanded at
//! this depth.

use rand::Rng;

use super::{rollout_into, root_legal, Planner, PlannerConfig};
use crate::bandit::{best_mean, ts_choose, ucb1_choose, ActionId, ArmStats};
use crate::pomdp::{accumulate_returns, GenerativeModel, ParticleBelief};

const NO_CHILD: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreePolicy {
    /// POOLUCT
    Ucb1,
    /// POOLTS
    Thompson,
}

#[derive(Debug, Clone)]
pub struct OpenLoopNode {
    arms: Vec<ArmStats>,
    children: Vec<u32>,
}

impl OpenLoopNode {
    fn new(num_actions: usize) -> Self {
        Self {
            arms: vec![ArmStats::new(0); num_actions],
            children: vec![NO_CHILD; num_actions],
        }
    }

    pub fn arm(&self, action: ActionId) -> Option<&ArmStats> {
        self.arms.get(action).filter(|s| s.count() > 0)
    }

    pub fn child(&self, action: ActionId) -> Option<usize> {
        match self.children.get(action) {
            Some(&c) if c != NO_CHILD => Some(c as usize),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OpenLoopTreePlanner {
    cfg: PlannerConfig,
    policy: TreePolicy,
    nodes: Vec<OpenLoopNode>,
    legal: Vec<ActionId>,
    path: Vec<(u32, ActionId)>,
    rewards: Vec<f64>,
}

impl OpenLoopTreePlanner {
    pub fn new(cfg: PlannerConfig, policy: TreePolicy) -> Self {
        Self {
            cfg,
            policy,
            nodes: Vec::new(),
            legal: Vec::new(),
            path: Vec::new(),
            rewards: Vec::new(),
        }
    }

    pub fn policy(&self) -> TreePolicy {
        self.policy
    }

    pub fn reset(&mut self, num_actions: usize) {
        self.nodes.clear();
        self.nodes.push(OpenLoopNode::new(num_actions));
    }

    pub fn nodes(&self) -> &[OpenLoopNode] {
        &self.nodes
    }

    pub fn root(&self) -> &OpenLoopNode {
        &self.nodes[0]
    }

    fn select<R: Rng + ?Sized>(&self, node: usize, rng: &mut R) -> ActionId {
        let n = &self.nodes[node];
        match self.policy {
            TreePolicy::Ucb1 => ucb1_choose(&self.legal, self.cfg.ucb_c, rng, |a| n.arm(a)),
            TreePolicy::Thompson => ts_choose(&self.legal, &self.cfg.prior, rng, |a| n.arm(a)),
        }
    }

    /// One simulation; adds at most one node.
    pub fn simulate<M, R>(&mut self, mut state: M::State, model: &M, rng: &mut R)
    where
        M: GenerativeModel,
        R: Rng + ?Sized,
    {
        let horizon = self.cfg.horizon;
        let num_actions = model.num_actions();
        self.path.clear();
        self.rewards.clear();
        let mut node = 0usize;
        while self.path.len() < horizon && !model.is_terminal(&state) {
            model.legal_actions(&state, &mut self.legal);
            let a = self.select(node, rng);
            let out = model.step(&mut state, a, rng);
            self.path.push((node as u32, a));
            self.rewards.push(out.reward);
            if out.terminal {
                break;
            }
            match self.nodes[node].child(a) {
                Some(child) => node = child,
                None => {
                    if self.cfg.may_grow(self.nodes.len(), 1) {
                        let id = self.nodes.len() as u32;
                        self.nodes.push(OpenLoopNode::new(num_actions));
                        self.nodes[node].children[a] = id;
                    }
                    let left = horizon - self.path.len();
                    rollout_into(model, &mut state, left, &mut self.legal, &mut self.rewards, rng);
                    break;
                }
            }
        }
        accumulate_returns(&mut self.rewards, model.discount());
        for (&(n, a), &g) in self.path.iter().zip(&self.rewards) {
            self.nodes[n as usize].arms[a].update(g);
        }
    }
}

impl<M: GenerativeModel> Planner<M> for OpenLoopTreePlanner {
    fn plan<R: Rng + ?Sized>(&mut self, model: &M, belief: &ParticleBelief<M::State>, rng: &mut R) -> ActionId {
        assert!(self.cfg.budget > 0, "simulation budget must be positive");
        self.reset(model.num_actions());
        for _ in 0..self.cfg.budget {
            let s1 = belief.sample_state(rng).clone();
            self.simulate(s1, model, rng);
        }
        root_legal(model, belief, &mut self.legal);
        let root = &self.nodes[0];
        best_mean(&self.legal, rng, |a| root.arm(a))
            .unwrap_or_else(|| self.legal[rng.random_range(0..self.legal.len())])
    }

    fn peak_memory(&self) -> usize {
        self.nodes.len()
    }
}
