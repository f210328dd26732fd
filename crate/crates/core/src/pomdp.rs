//! Generative-model contract, histories, returns, and particle beliefs.

use rand::Rng;

use crate::bandit::ActionId;

/// Observations are integer-coded; equality is identity on the code.
pub type Observation = u64;

/// Result of simulating one action: the state is advanced in place.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub observation: Observation,
    pub reward: f64,
    pub terminal: bool,
}

/// A black-box simulator `(s, a) -> (s', o, r, terminal)` plus the initial
/// state distribution.
///
/// `step` must be a pure function of the state, the action and the random
/// stream it is handed.
pub trait GenerativeModel {
    type State: Clone;

    fn num_actions(&self) -> usize;

    /// Discount used while planning.
    fn discount(&self) -> f64;

    /// Scale of single-step rewards; the UCB1 exploration constant.
    fn reward_range(&self) -> f64;

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    /// Writes the legal actions of `state` into `out` (cleared first).
    /// Non-empty for every non-terminal state.
    fn legal_actions(&self, state: &Self::State, out: &mut Vec<ActionId>);

    fn is_terminal(&self, state: &Self::State) -> bool;

    /// Advances `state` by `action`.
    ///
    /// # Panics
    /// Implementations panic if `action` is not legal in `state`.
    fn step<R: Rng + ?Sized>(&self, state: &mut Self::State, action: ActionId, rng: &mut R) -> Outcome;
}

/// The alternating action/observation sequence of one episode.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct History {
    entries: Vec<(ActionId, Observation)>,
}

impl History {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, action: ActionId, observation: Observation) {
        self.entries.push((action, observation));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(ActionId, Observation)] {
        &self.entries
    }

    pub fn actions(&self) -> impl Iterator<Item = ActionId> + '_ {
        self.entries.iter().map(|&(a, _)| a)
    }
}

/// `G_t = r_t + gamma * G_{t+1}` with `G_{H+1} = 0`.
///
/// ```
/// use symbol_planner::pomdp::discounted_returns;
/// assert_eq!(discounted_returns(&[1.0, 1.0, 1.0], 0.5), vec![1.75, 1.5, 1.0]);
/// ```
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = rewards.to_vec();
    accumulate_returns(&mut out, gamma);
    out
}

/// In-place form of [`discounted_returns`].
pub fn accumulate_returns(rewards: &mut [f64], gamma: f64) {
    let mut next = 0.0;
    for r in rewards.iter_mut().rev() {
        next = *r + gamma * next;
        *r = next;
    }
}

/// Settings of the rejection particle filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterConfig {
    /// Number of particles `K`.
    pub particles: usize,
    /// Simulation attempts per phase, as a multiple of `K`.
    pub attempts_per_particle: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            particles: 10_000,
            attempts_per_particle: 10,
        }
    }
}

impl FilterConfig {
    pub fn attempts(&self) -> usize {
        self.particles * self.attempts_per_particle
    }
}

/// How a belief update ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateStatus {
    /// At least one propagated particle matched the observation.
    Filtered,
    /// No propagated particle matched; the belief was rebuilt from fresh
    /// initial states replayed through the history.
    Reinvigorated,
    /// Neither route produced a match; the belief holds the unfiltered
    /// one-step successors.
    Unfiltered,
}

impl UpdateStatus {
    pub fn is_deprived(self) -> bool {
        self != UpdateStatus::Filtered
    }
}

/// Unweighted particle approximation of a belief state.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleBelief<S> {
    particles: Vec<S>,
    capacity: usize,
}

impl<S: Clone> ParticleBelief<S> {
    /// # Panics
    /// If `particles` is empty or larger than `capacity`.
    pub fn from_particles(particles: Vec<S>, capacity: usize) -> Self {
        assert!(!particles.is_empty(), "a belief needs at least one particle");
        assert!(particles.len() <= capacity, "more particles than capacity");
        Self { particles, capacity }
    }

    /// `K` independent draws from the model's initial distribution.
    pub fn initial<M, R>(model: &M, capacity: usize, rng: &mut R) -> Self
    where
        M: GenerativeModel<State = S>,
        R: Rng + ?Sized,
    {
        assert!(capacity > 0);
        let particles = (0..capacity).map(|_| model.sample_initial(rng)).collect();
        Self { particles, capacity }
    }

    pub fn particles(&self) -> &[S] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Uniform draw from the particles.
    pub fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R) -> &S {
        &self.particles[rng.random_range(0..self.particles.len())]
    }

    /// Rejection-filters the belief through `(action, observation)`.
    ///
    /// Particles are drawn uniformly, propagated, and kept when they emit
    /// `observation`, until `K` are accepted or the attempt budget runs out.
    /// Accepted particles are resampled up to `K`. If nothing matched, fresh
    /// initial states are replayed through `history` (whose last entry must
    /// be this `(action, observation)`) and kept when the final observation
    /// matches; if that also fails the unfiltered successors are kept.
    ///
    /// Beliefs are only updated after non-terminal real transitions, so
    /// terminal successors are always discarded.
    pub fn update<M, R>(
        &self,
        model: &M,
        action: ActionId,
        observation: Observation,
        history: &History,
        cfg: &FilterConfig,
        rng: &mut R,
    ) -> (Self, UpdateStatus)
    where
        M: GenerativeModel<State = S>,
        R: Rng + ?Sized,
    {
        let k = self.capacity;
        let budget = cfg.attempts().max(k);
        let mut accepted = Vec::with_capacity(k);
        let mut fallback = Vec::new();
        for _ in 0..budget {
            if accepted.len() == k {
                break;
            }
            let mut s = self.sample_state(rng).clone();
            if model.is_terminal(&s) {
                continue;
            }
            let out = model.step(&mut s, action, rng);
            if out.terminal {
                continue;
            }
            if out.observation == observation {
                accepted.push(s);
            } else if fallback.len() < k {
                fallback.push(s);
            }
        }
        if !accepted.is_empty() {
            return (Self::resampled(accepted, k, rng), UpdateStatus::Filtered);
        }

        let replayed = reinvigorate(model, history, k, budget, rng);
        if !replayed.is_empty() {
            return (Self::resampled(replayed, k, rng), UpdateStatus::Reinvigorated);
        }
        if fallback.is_empty() {
            // every particle was terminal; nothing to propagate
            return (self.clone(), UpdateStatus::Unfiltered);
        }
        (Self::resampled(fallback, k, rng), UpdateStatus::Unfiltered)
    }

    fn resampled<R: Rng + ?Sized>(mut particles: Vec<S>, k: usize, rng: &mut R) -> Self {
        let n = particles.len();
        while particles.len() < k {
            let i = rng.random_range(0..n);
            particles.push(particles[i].clone());
        }
        Self {
            particles,
            capacity: k,
        }
    }
}

fn reinvigorate<M, R>(model: &M, history: &History, k: usize, budget: usize, rng: &mut R) -> Vec<M::State>
where
    M: GenerativeModel,
    R: Rng + ?Sized,
{
    let Some(&(_, target)) = history.entries().last() else {
        return Vec::new();
    };
    let mut found = Vec::new();
    let mut spent = 0usize;
    'draw: while spent < budget && found.len() < k {
        let mut s = model.sample_initial(rng);
        let mut last = None;
        for &(a, _) in history.entries() {
            if model.is_terminal(&s) {
                spent += 1;
                continue 'draw;
            }
            let out = model.step(&mut s, a, rng);
            spent += 1;
            if out.terminal {
                continue 'draw;
            }
            last = Some(out.observation);
        }
        if last == Some(target) {
            found.push(s);
        }
    }
    found
}
