use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite MDP over task-steps with robot actions.
///
/// Terminal states are absorbing: their reward is collected once on arrival and nothing
/// accrues afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mdp {
    pub n_states: usize,
    pub n_actions: usize,
    /// Sparse successor lists indexed by `state * n_actions + action`.
    pub transitions: Vec<Vec<(usize, f64)>>,
    pub discount: f64,
    pub terminal: Vec<bool>,
    /// Distribution of the first state.
    pub start: Vec<f64>,
    /// Actions allowed per state; every action everywhere when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub available: Option<Vec<Vec<usize>>>,
}

/// Reward as a function of the state only, or of the state and action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reward {
    State(Vec<f64>),
    /// Indexed by `state * n_actions + action`.
    StateAction(Vec<f64>),
}

impl Reward {
    pub fn value(&self, n_actions: usize, s: usize, a: usize) -> f64 {
        match self {
            Reward::State(r) => r[s],
            Reward::StateAction(r) => r[s * n_actions + a],
        }
    }
}

/// A deterministic policy: one action per state (ignored at terminal states).
pub type Policy = Vec<usize>;

#[derive(Debug, Clone, PartialEq)]
pub struct MdpSolution {
    pub values: Vec<f64>,
    pub policy: Policy,
    pub sweeps: usize,
}

pub const BELLMAN_TOLERANCE: f64 = 1e-8;
const TIE_EPS: f64 = 1e-12;

impl Mdp {
    pub fn validate(&self) -> Result<()> {
        let n = self.n_states;
        if self.transitions.len() != n * self.n_actions || self.terminal.len() != n || self.start.len() != n {
            return Err(Error::Model("MDP table sizes are inconsistent".into()));
        }
        if !(self.discount >= 0.0 && self.discount < 1.0) {
            return Err(Error::Model(format!("discount {} must lie in [0, 1)", self.discount)));
        }
        if let Some(avail) = &self.available {
            if avail.len() != n || avail.iter().any(|a| a.iter().any(|&x| x >= self.n_actions)) {
                return Err(Error::Model("action availability table is malformed".into()));
            }
            if (0..n).any(|s| !self.terminal[s] && avail[s].is_empty()) {
                return Err(Error::Model("a non-terminal state has no available action".into()));
            }
        }
        for (i, row) in self.transitions.iter().enumerate() {
            let s = i / self.n_actions;
            if self.terminal[s] || !self.is_available(s, i % self.n_actions) {
                continue;
            }
            let total: f64 = row.iter().map(|&(_, p)| p).sum();
            if (total - 1.0).abs() > 1e-9 || row.iter().any(|&(t, p)| t >= n || p < 0.0) {
                return Err(Error::Model(format!("transition row (state {s}, action {}) is not a distribution", i % self.n_actions)));
            }
        }
        let total: f64 = self.start.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Model("start distribution does not sum to 1".into()));
        }
        Ok(())
    }

    pub fn is_available(&self, s: usize, a: usize) -> bool {
        self.available.as_ref().map_or(true, |av| av[s].contains(&a))
    }

    /// Allowed actions at `s`, in increasing index order.
    pub fn actions(&self, s: usize) -> Vec<usize> {
        match &self.available {
            Some(av) => {
                let mut a = av[s].clone();
                a.sort_unstable();
                a
            }
            None => (0..self.n_actions).collect(),
        }
    }

    pub fn successors(&self, s: usize, a: usize) -> &[(usize, f64)] {
        &self.transitions[s * self.n_actions + a]
    }

    fn q(&self, reward: &Reward, values: &[f64], s: usize, a: usize) -> f64 {
        let future: f64 = self.successors(s, a).iter().map(|&(t, p)| p * values[t]).sum();
        reward.value(self.n_actions, s, a) + self.discount * future
    }

    fn terminal_value(&self, reward: &Reward, s: usize) -> f64 {
        (0..self.n_actions)
            .map(|a| reward.value(self.n_actions, s, a))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Greedy action at `s`; ties go to the lowest action index.
    pub fn greedy_action(&self, reward: &Reward, values: &[f64], s: usize) -> usize {
        let actions = self.actions(s);
        let Some((&first, rest)) = actions.split_first() else {
            return 0;
        };
        let mut best = first;
        let mut best_q = self.q(reward, values, s, first);
        for &a in rest {
            let q = self.q(reward, values, s, a);
            if q > best_q + TIE_EPS * best_q.abs().max(1.0) {
                best = a;
                best_q = q;
            }
        }
        best
    }

    pub fn greedy_policy(&self, reward: &Reward, values: &[f64]) -> Policy {
        (0..self.n_states).map(|s| self.greedy_action(reward, values, s)).collect()
    }

    /// Largest absolute Bellman residual `|HV - V|` over all states.
    pub fn bellman_residual(&self, reward: &Reward, values: &[f64]) -> f64 {
        (0..self.n_states)
            .map(|s| {
                let backed = if self.terminal[s] {
                    self.terminal_value(reward, s)
                } else {
                    self.actions(s)
                        .into_iter()
                        .map(|a| self.q(reward, values, s, a))
                        .fold(f64::NEG_INFINITY, f64::max)
                };
                (backed - values[s]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Exact value of a fixed policy from the linear system `V = R_π + γ P_π V`.
    pub fn evaluate_policy(&self, reward: &Reward, policy: &[usize]) -> Vec<f64> {
        let n = self.n_states;
        let mut a = nalgebra::DMatrix::<f64>::identity(n, n);
        let mut b = nalgebra::DVector::<f64>::zeros(n);
        for s in 0..n {
            if self.terminal[s] {
                b[s] = self.terminal_value(reward, s);
                continue;
            }
            let act = policy[s];
            b[s] = reward.value(self.n_actions, s, act);
            for &(t, p) in self.successors(s, act) {
                a[(s, t)] -= self.discount * p;
            }
        }
        let x = a.lu().solve(&b).expect("I - γP is non-singular for γ < 1");
        x.iter().copied().collect()
    }
}

/// Optimal values and a greedy policy by value iteration, run until the Bellman residual
/// is at most [`BELLMAN_TOLERANCE`].
pub fn value_iteration(mdp: &Mdp, reward: &Reward) -> MdpSolution {
    let n = mdp.n_states;
    let mut values: Vec<f64> = (0..n)
        .map(|s| if mdp.terminal[s] { mdp.terminal_value(reward, s) } else { 0.0 })
        .collect();
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut delta: f64 = 0.0;
        let next: Vec<f64> = (0..n)
            .map(|s| {
                if mdp.terminal[s] {
                    return values[s];
                }
                mdp.actions(s)
                    .into_iter()
                    .map(|a| mdp.q(reward, &values, s, a))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        for (v, w) in values.iter().zip(&next) {
            delta = delta.max((v - w).abs());
        }
        values = next;
        if delta <= BELLMAN_TOLERANCE * (1.0 - mdp.discount) || sweeps >= 1_000_000 {
            break;
        }
    }
    MdpSolution {
        policy: mdp.greedy_policy(reward, &values),
        values,
        sweeps,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::Rng;

    /// Chain 0 -> 1 -> 2 with 2 absorbing (non-terminal) and rewarding.
    fn chain(gamma: f64) -> Mdp {
        let mut transitions = Vec::new();
        for s in 0..3usize {
            for a in 0..2usize {
                let t = if a == 0 { (s + 1).min(2) } else { s };
                transitions.push(vec![(t, 1.0)]);
            }
        }
        Mdp {
            n_states: 3,
            n_actions: 2,
            transitions,
            discount: gamma,
            terminal: vec![false; 3],
            start: vec![1.0, 0.0, 0.0],
            available: None,
        }
    }

    pub(crate) fn random_mdp<R: Rng>(n: usize, m: usize, gamma: f64, rng: &mut R) -> Mdp {
        let transitions = (0..n * m)
            .map(|_| {
                let k = rng.gen_range(1..=3);
                let mut row: Vec<(usize, f64)> = (0..k).map(|_| (rng.gen_range(0..n), rng.gen::<f64>() + 0.05)).collect();
                let total: f64 = row.iter().map(|x| x.1).sum();
                row.iter_mut().for_each(|x| x.1 /= total);
                row
            })
            .collect();
        let mut start = vec![0.0; n];
        start[0] = 1.0;
        Mdp { n_states: n, n_actions: m, transitions, discount: gamma, terminal: vec![false; n], start, available: None }
    }

    fn policy_iteration(mdp: &Mdp, reward: &Reward) -> (Vec<f64>, Policy) {
        let mut policy = vec![0; mdp.n_states];
        loop {
            let v = mdp.evaluate_policy(reward, &policy);
            let mut changed = false;
            for s in 0..mdp.n_states {
                let current = mdp.q(reward, &v, s, policy[s]);
                let (best, q) = (0..mdp.n_actions)
                    .map(|a| (a, mdp.q(reward, &v, s, a)))
                    .fold((policy[s], current), |acc, x| if x.1 > acc.1 + 1e-12 { x } else { acc });
                if q > current + 1e-12 {
                    policy[s] = best;
                    changed = true;
                }
            }
            if !changed {
                return (v, policy);
            }
        }
    }

    #[test]
    fn zero_reward_gives_zero_values_and_lowest_actions() {
        let mdp = chain(0.9);
        let sol = value_iteration(&mdp, &Reward::State(vec![0.0; 3]));
        assert!(sol.values.iter().all(|&v| v == 0.0));
        assert_eq!(sol.policy, vec![0, 0, 0]);
    }

    #[test]
    fn two_step_chain_matches_hand_computation() {
        let gamma = 0.9;
        let r = 2.0;
        let mdp = chain(gamma);
        let sol = value_iteration(&mdp, &Reward::State(vec![0.0, 0.0, r]));
        let expected = gamma * gamma * r / (1.0 - gamma);
        assert!((sol.values[0] - expected).abs() < 1e-7, "{} vs {expected}", sol.values[0]);
        assert!(mdp.bellman_residual(&Reward::State(vec![0.0, 0.0, r]), &sol.values) <= BELLMAN_TOLERANCE);
        assert_eq!(sol.policy[0], 0);
    }

    #[test]
    fn terminal_reward_counts_once() {
        let mut mdp = chain(0.5);
        mdp.terminal[2] = true;
        let sol = value_iteration(&mdp, &Reward::State(vec![0.0, 0.0, 4.0]));
        assert!((sol.values[0] - 0.25 * 4.0).abs() < 1e-9);
    }

    #[test]
    fn matches_policy_iteration_on_random_mdps() {
        let mut rng = crate::par::rng(4);
        for _ in 0..10 {
            let mdp = random_mdp(20, 3, 0.9, &mut rng);
            mdp.validate().unwrap();
            let reward = Reward::StateAction((0..60).map(|_| rng.gen_range(-1.0..1.0)).collect());
            let sol = value_iteration(&mdp, &reward);
            let (v, _) = policy_iteration(&mdp, &reward);
            for s in 0..20 {
                assert!((sol.values[s] - v[s]).abs() < 1e-6);
            }
            assert!(mdp.bellman_residual(&reward, &sol.values) <= BELLMAN_TOLERANCE);
        }
    }
}
