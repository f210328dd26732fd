//! Closed-loop UCT over action-observation histories (POMCP).
//!
//! o-nodes are history nodes, a-nodes hang off them per action. An a-node is
//! allocated the first time its action is tried and an o-node the first time
//! its observation is seen, so a simulation adds at most one of each. The
//! memory count is o-nodes plus a-nodes.

use rand::Rng;

use super::{rollout_into, root_legal, Planner, PlannerConfig};
use crate::bandit::{best_mean, ucb1_choose, ActionId, ArmStats};
use crate::pomdp::{accumulate_returns, GenerativeModel, Observation, ParticleBelief};

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct ONode {
    visits: u64,
    actions: Vec<u32>,
}

#[derive(Debug, Clone)]
struct ANode {
    stats: ArmStats,
    children: Vec<(Observation, u32)>,
}

#[derive(Debug, Clone)]
pub struct PomcpPlanner {
    cfg: PlannerConfig,
    onodes: Vec<ONode>,
    anodes: Vec<ANode>,
    legal: Vec<ActionId>,
    allowed: Vec<ActionId>,
    path: Vec<u32>,
    rewards: Vec<f64>,
}

impl PomcpPlanner {
    pub fn new(cfg: PlannerConfig) -> Self {
        Self {
            cfg,
            onodes: Vec::new(),
            anodes: Vec::new(),
            legal: Vec::new(),
            allowed: Vec::new(),
            path: Vec::new(),
            rewards: Vec::new(),
        }
    }

    pub fn reset(&mut self, num_actions: usize) {
        self.onodes.clear();
        self.anodes.clear();
        self.onodes.push(ONode {
            visits: 0,
            actions: vec![NONE; num_actions],
        });
    }

    pub fn onode_count(&self) -> usize {
        self.onodes.len()
    }

    pub fn anode_count(&self) -> usize {
        self.anodes.len()
    }

    pub fn node_count(&self) -> usize {
        self.onodes.len() + self.anodes.len()
    }

    /// Number of simulations that passed through the root.
    pub fn root_visits(&self) -> u64 {
        self.onodes[0].visits
    }

    /// Value estimate of `action` at the root.
    pub fn root_action_stats(&self, action: ActionId) -> Option<&ArmStats> {
        self.anode_stats(0, action)
    }

    fn anode_stats(&self, onode: usize, action: ActionId) -> Option<&ArmStats> {
        match self.onodes[onode].actions.get(action) {
            Some(&i) if i != NONE => Some(&self.anodes[i as usize].stats),
            _ => None,
        }
    }

    fn used(&self) -> usize {
        self.node_count()
    }

    /// One simulation from `state`.
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
            self.onodes[node].visits += 1;

            // Under a memory cap an untried action may only be chosen while
            // there is room for its a-node.
            let choices = if self.cfg.may_grow(self.used(), 1) {
                &self.legal
            } else {
                self.allowed.clear();
                let acts = &self.onodes[node].actions;
                self.allowed.extend(self.legal.iter().copied().filter(|&a| acts[a] != NONE));
                &self.allowed
            };
            if choices.is_empty() {
                let left = horizon - self.path.len();
                rollout_into(model, &mut state, left, &mut self.legal, &mut self.rewards, rng);
                break;
            }
            let onodes = &self.onodes;
            let anodes = &self.anodes;
            let a = ucb1_choose(choices, self.cfg.ucb_c, rng, |a| match onodes[node].actions[a] {
                NONE => None,
                i => Some(&anodes[i as usize].stats),
            });

            let anode = match self.onodes[node].actions[a] {
                NONE => {
                    let id = self.anodes.len() as u32;
                    self.anodes.push(ANode {
                        stats: ArmStats::new(0),
                        children: Vec::new(),
                    });
                    self.onodes[node].actions[a] = id;
                    id
                }
                id => id,
            };
            let out = model.step(&mut state, a, rng);
            self.path.push(anode);
            self.rewards.push(out.reward);
            if out.terminal {
                break;
            }

            let child = self.anodes[anode as usize]
                .children
                .iter()
                .find(|&&(o, _)| o == out.observation)
                .map(|&(_, c)| c as usize);
            match child {
                Some(c) => node = c,
                None => {
                    if self.cfg.may_grow(self.used(), 1) {
                        let id = self.onodes.len() as u32;
                        self.onodes.push(ONode {
                            visits: 0,
                            actions: vec![NONE; num_actions],
                        });
                        self.anodes[anode as usize].children.push((out.observation, id));
                    }
                    let left = horizon - self.path.len();
                    rollout_into(model, &mut state, left, &mut self.legal, &mut self.rewards, rng);
                    break;
                }
            }
        }
        accumulate_returns(&mut self.rewards, model.discount());
        for (&a, &g) in self.path.iter().zip(&self.rewards) {
            self.anodes[a as usize].stats.update(g);
        }
    }
}

impl<M: GenerativeModel> Planner<M> for PomcpPlanner {
    fn plan<R: Rng + ?Sized>(&mut self, model: &M, belief: &ParticleBelief<M::State>, rng: &mut R) -> ActionId {
        assert!(self.cfg.budget > 0, "simulation budget must be positive");
        self.reset(model.num_actions());
        for _ in 0..self.cfg.budget {
            let s1 = belief.sample_state(rng).clone();
            self.simulate(s1, model, rng);
        }
        root_legal(model, belief, &mut self.legal);
        let choice = best_mean(&self.legal, rng, |a| self.anode_stats(0, a));
        choice.unwrap_or_else(|| self.legal[rng.random_range(0..self.legal.len())])
    }

    fn peak_memory(&self) -> usize {
        self.node_count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::PlanTable;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nodes_are_created_lazily() {
        let table = PlanTable::new(3, 3, |_, a| a as f64);
        let mut p = PomcpPlanner::new(PlannerConfig {
            budget: 1,
            ucb_c: 2.0,
            ..PlannerConfig::default()
        });
        p.reset(3);
        assert_eq!((p.onode_count(), p.anode_count()), (1, 0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s0 = table.sample_initial(&mut rng);
        p.simulate(s0, &table, &mut rng);
        assert_eq!((p.onode_count(), p.anode_count()), (2, 1));
    }

    #[test]
    fn capped_tree_keeps_simulating() {
        let table = PlanTable::new(3, 3, |_, a| a as f64);
        let mut p = PomcpPlanner::new(PlannerConfig {
            budget: 1,
            ucb_c: 2.0,
            mem_cap: Some(5),
            ..PlannerConfig::default()
        });
        p.reset(3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s0 = table.sample_initial(&mut rng);
        for _ in 0..200 {
            p.simulate(s0, &table, &mut rng);
        }
        assert!(p.node_count() <= 5);
        assert_eq!(p.root_visits(), 200);
    }
}
