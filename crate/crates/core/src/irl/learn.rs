//! Apprenticeship learning by projection: find reward weights whose optimal policies
//! reproduce a target feature expectation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::{feature_expectations, stochastic_feature_expectations, FeatureMap};
use super::mdp::{value_iteration, Mdp, Policy, Reward};
use super::projection::project_onto_hull;
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrlConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub seed: u64,
    /// Optional cost added to `w·φ(s)` per robot action, indexed by action.
    #[serde(default)]
    pub action_costs: Option<Vec<f64>>,
}

impl Default for IrlConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            max_iterations: 50,
            seed: 0,
            action_costs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrlResult {
    /// Mean of `w^(i)` over the second half of the iterations that ran a policy update.
    pub weights: Vec<f64>,
    /// `π^(0)`, as action probabilities per state.
    pub initial: Vec<Vec<f64>>,
    /// `π^(1..)`.
    pub policies: Vec<Policy>,
    /// `μ(π^(0..))`.
    pub mus: Vec<Vec<f64>>,
    /// Mixture over `mus` at the closest projection found.
    pub lambdas: Vec<f64>,
    /// `w^(1..)`, one per iteration.
    pub ws: Vec<Vec<f64>>,
    /// Margins `t^(1..)`.
    pub ts: Vec<f64>,
    pub epsilon: f64,
    pub converged: bool,
}

impl IrlResult {
    pub fn iterations(&self) -> usize {
        self.ts.len()
    }

    pub fn best_margin(&self) -> f64 {
        self.ts.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `R(s) = w·φ(s)` for the final weights.
    pub fn state_rewards(&self, phi: &FeatureMap) -> Vec<f64> {
        phi.state_rewards(&self.weights)
    }
}

/// The reward that `weights` induce on `mdp`, including any action costs.
pub fn reward_for(mdp: &Mdp, phi: &FeatureMap, weights: &[f64], action_costs: Option<&[f64]>) -> Reward {
    let state = phi.state_rewards(weights);
    match action_costs {
        None => Reward::State(state),
        Some(costs) => Reward::StateAction(
            (0..mdp.n_states)
                .flat_map(|s| {
                    let r = state[s];
                    costs.iter().map(move |c| r + c)
                })
                .collect(),
        ),
    }
}

/// A random stochastic starting policy: each available action gets weight `1 + u`,
/// `u ~ U(0, 1)`, normalized per state. Every action keeps at least half its uniform
/// share, so `π^(0)` cannot be a deterministic policy that happens to match the demonstrator.
pub fn initial_policy(mdp: &Mdp, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = par::rng(seed);
    (0..mdp.n_states)
        .map(|s| {
            let mut row = vec![0.0; mdp.n_actions];
            let actions = mdp.actions(s);
            for &a in &actions {
                row[a] = 1.0 + rng.gen::<f64>();
            }
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                row.iter_mut().for_each(|p| *p /= total);
            } else {
                row[0] = 1.0;
            }
            row
        })
        .collect()
}

pub fn irl_learn(mdp: &Mdp, phi: &FeatureMap, demo_mu: &[f64], config: &IrlConfig) -> Result<IrlResult> {
    if !(config.epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    if demo_mu.len() != phi.dim {
        return Err(Error::InvalidArgument(format!(
            "demonstration feature expectation has length {}, features have dimension {}",
            demo_mu.len(),
            phi.dim
        )));
    }
    if phi.n_states() != mdp.n_states {
        return Err(Error::InvalidArgument("feature map does not cover the MDP states".into()));
    }
    if let Some(c) = &config.action_costs {
        if c.len() != mdp.n_actions {
            return Err(Error::InvalidArgument("one action cost per action is required".into()));
        }
    }
    mdp.validate()?;

    let initial = initial_policy(mdp, config.seed);
    let mut mus = vec![stochastic_feature_expectations(mdp, &initial, phi, &mdp.start)];
    let mut policies = Vec::new();
    let mut ws = Vec::new();
    let mut ts = Vec::new();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut converged = false;

    for i in 1..=config.max_iterations {
        let projection = project_onto_hull(demo_mu, &mus);
        let t = projection.distance;
        let w: Vec<f64> = if t > 0.0 {
            demo_mu.iter().zip(&projection.point).map(|(a, b)| (a - b) / t).collect()
        } else {
            vec![0.0; phi.dim]
        };
        log::debug!("irl iteration {i}: t = {t:.6}");
        ws.push(w.clone());
        ts.push(t);
        if best.as_ref().map_or(true, |(bt, _)| t < *bt) {
            best = Some((t, projection.lambdas.clone()));
        }
        if t <= config.epsilon {
            converged = true;
            break;
        }
        if i == config.max_iterations {
            break;
        }
        let reward = reward_for(mdp, phi, &w, config.action_costs.as_deref());
        let solution = value_iteration(mdp, &reward);
        mus.push(feature_expectations(mdp, &solution.policy, phi, &mdp.start));
        policies.push(solution.policy);
    }

    let mut lambdas = best.map(|b| b.1).unwrap_or_default();
    lambdas.resize(mus.len(), 0.0);
    // The direction found at the terminating iteration never reaches the RL step and only
    // encodes the residual below epsilon, so it is left out of the average.
    let used = if converged && ws.len() > 1 { &ws[..ws.len() - 1] } else { &ws[..] };
    let half = &used[used.len() / 2..];
    let weights = (0..phi.dim)
        .map(|k| half.iter().map(|w| w[k]).sum::<f64>() / half.len() as f64)
        .collect();
    Ok(IrlResult {
        weights,
        initial,
        policies,
        mus,
        lambdas,
        ws,
        ts,
        epsilon: config.epsilon,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn already_matching_demo_stops_at_first_iteration() {
        let mut rng = par::rng(3);
        let mdp = crate::irl::mdp::tests::random_mdp(8, 2, 0.9, &mut rng);
        let phi = FeatureMap::indicator(8);
        let config = IrlConfig { seed: 11, ..IrlConfig::default() };
        let demo = stochastic_feature_expectations(&mdp, &initial_policy(&mdp, 11), &phi, &mdp.start);
        let result = irl_learn(&mdp, &phi, &demo, &config).unwrap();
        assert!(result.converged);
        assert_eq!(result.iterations(), 1);
        assert!(result.ts[0] <= config.epsilon);
    }

    #[test]
    fn weights_are_unit_directions() {
        let mut rng = par::rng(5);
        let mdp = crate::irl::mdp::tests::random_mdp(10, 3, 0.9, &mut rng);
        let phi = FeatureMap::indicator(10);
        let expert = value_iteration(&mdp, &Reward::State((0..10).map(|s| if s == 7 { 1.0 } else { 0.0 }).collect()));
        let demo = feature_expectations(&mdp, &expert.policy, &phi, &mdp.start);
        let result = irl_learn(&mdp, &phi, &demo, &IrlConfig::default()).unwrap();
        for (w, t) in result.ws.iter().zip(&result.ts) {
            if *t > 0.0 {
                let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-9);
            }
        }
        assert!(result.lambdas.iter().all(|&l| l >= 0.0));
        assert!((result.lambdas.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let mut running = f64::INFINITY;
        for &t in &result.ts {
            let next = running.min(t);
            assert!(next <= running);
            running = next;
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let mut rng = par::rng(1);
        let mdp = crate::irl::mdp::tests::random_mdp(4, 2, 0.9, &mut rng);
        let phi = FeatureMap::indicator(4);
        let bad_eps = IrlConfig { epsilon: 0.0, ..IrlConfig::default() };
        assert!(irl_learn(&mdp, &phi, &[0.0; 4], &bad_eps).is_err());
        assert!(irl_learn(&mdp, &phi, &[0.0; 3], &IrlConfig::default()).is_err());
    }
}
