#![allow(dead_code)]

use std::cell::Cell;

use rand::Rng;
use symbol_planner::bandit::ActionId;
use symbol_planner::domains::PlanTable;
use symbol_planner::pomdp::{GenerativeModel, Outcome};

/// Wraps a model and counts every `step` called with an action outside
/// `legal_actions(state)`.
pub struct Audited<M> {
    pub inner: M,
    violations: Cell<usize>,
    steps: Cell<usize>,
    scratch: std::cell::RefCell<Vec<ActionId>>,
}

impl<M: GenerativeModel> Audited<M> {
    pub fn new(inner: M) -> Self {
        Self {
            inner,
            violations: Cell::new(0),
            steps: Cell::new(0),
            scratch: Default::default(),
        }
    }

    pub fn violations(&self) -> usize {
        self.violations.get()
    }

    pub fn steps(&self) -> usize {
        self.steps.get()
    }
}

impl<M: GenerativeModel> GenerativeModel for Audited<M> {
    type State = M::State;

    fn num_actions(&self) -> usize {
        self.inner.num_actions()
    }

    fn discount(&self) -> f64 {
        self.inner.discount()
    }

    fn reward_range(&self) -> f64 {
        self.inner.reward_range()
    }

    fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State {
        self.inner.sample_initial(rng)
    }

    fn legal_actions(&self, state: &Self::State, out: &mut Vec<ActionId>) {
        self.inner.legal_actions(state, out)
    }

    fn is_terminal(&self, state: &Self::State) -> bool {
        self.inner.is_terminal(state)
    }

    fn step<R: Rng + ?Sized>(&self, state: &mut Self::State, action: ActionId, rng: &mut R) -> Outcome {
        let mut legal = self.scratch.borrow_mut();
        self.inner.legal_actions(state, &mut legal);
        if !legal.contains(&action) {
            self.violations.set(self.violations.get() + 1);
        }
        drop(legal);
        self.steps.set(self.steps.get() + 1);
        self.inner.step(state, action, rng)
    }
}

/// A deterministic micro-domain together with its brute-force optimum.
pub struct MicroCase {
    pub name: &'static str,
    pub table: PlanTable,
    pub best_first: ActionId,
    pub best_value: f64,
    pub runner_up: f64,
}

/// Value of every open-loop plan, enumerated exhaustively. The domains are
/// deterministic, so the best open-loop plan is also the best policy.
pub fn plan_values(table: &PlanTable) -> Vec<(Vec<ActionId>, f64)> {
    let (depth, k) = (table.depth(), table.actions());
    let gamma = table.discount();
    let mut out = Vec::new();
    for code in 0..k.pow(depth as u32) {
        let mut plan = vec![0; depth];
        let mut c = code;
        for slot in plan.iter_mut().rev() {
            *slot = c % k;
            c /= k;
        }
        let mut value = 0.0;
        let mut weight = 1.0;
        for t in 0..depth {
            let mut prefix = 0;
            for &a in &plan[..t] {
                prefix = prefix * k + a;
            }
            let s = symbol_planner::domains::micro::PlanState { prefix, depth: t };
            value += weight * table.reward(&s, plan[t]);
            weight *= gamma;
        }
        out.push((plan, value));
    }
    out
}

fn case(name: &'static str, table: PlanTable) -> MicroCase {
    let values = plan_values(&table);
    let k = table.actions();
    let mut best_per_first = vec![f64::NEG_INFINITY; k];
    for (plan, v) in &values {
        best_per_first[plan[0]] = best_per_first[plan[0]].max(*v);
    }
    let best_first = (0..k)
        .max_by(|&a, &b| best_per_first[a].total_cmp(&best_per_first[b]))
        .unwrap();
    let runner_up = (0..k)
        .filter(|&a| a != best_first)
        .map(|a| best_per_first[a])
        .fold(f64::NEG_INFINITY, f64::max);
    MicroCase {
        name,
        best_value: best_per_first[best_first],
        best_first,
        runner_up,
        table,
    }
}

/// Five enumerable deterministic domains, each with at most 3 steps and 3
/// actions and a unique optimal first action.
pub fn micro_cases() -> Vec<MicroCase> {
    vec![
        // plan (1, 1) is worth 2, every other plan at most 1
        case("two-step chain", PlanTable::new(2, 2, |_, a| a as f64)),
        // greedy first step loses to a delayed payoff
        case(
            "delayed payoff",
            PlanTable::new(2, 2, |p, a| match (p, a) {
                ([], 0) => 1.0,
                ([], 1) => 0.0,
                ([1], 1) => 3.0,
                _ => 0.0,
            }),
        ),
        // single decision among three close arms
        case(
            "three arms",
            PlanTable::new(1, 3, |_, a| [0.5, 1.0, 0.8][a]),
        ),
        // immediate reward trap, payoff only for the plan (0, 1, 1)
        case(
            "trap",
            PlanTable::new(3, 2, |p, a| match (p, a) {
                ([], 1) => 1.0,
                ([0, 1], 1) => 4.0,
                _ => 0.0,
            }),
        ),
        // three actions over three discounted steps
        case(
            "discounted grid",
            PlanTable::new(3, 3, |p, a| {
                let s: usize = p.iter().sum();
                ((p.len() * 5 + s * 3 + a * 7) % 4) as f64
            })
            .with_discount(0.9),
        ),
    ]
}
