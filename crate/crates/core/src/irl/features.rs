//! State features and discounted feature expectations.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::mdp::Mdp;
use crate::error::{Error, Result};
use crate::par;

/// Feature vector per state, entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "FeatureRepr", try_from = "FeatureRepr")]
pub struct FeatureMap {
    pub kind: FeatureKind,
    pub dim: usize,
    rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// One indicator per state.
    Indicator,
    /// User-supplied table.
    Table,
}

/// On-disk descriptor: indicator maps store only their size.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum FeatureRepr {
    Indicator { states: usize },
    Table { rows: Vec<Vec<f64>> },
}

impl From<FeatureMap> for FeatureRepr {
    fn from(f: FeatureMap) -> Self {
        match f.kind {
            FeatureKind::Indicator => FeatureRepr::Indicator { states: f.rows.len() },
            FeatureKind::Table => FeatureRepr::Table { rows: f.rows },
        }
    }
}

impl TryFrom<FeatureRepr> for FeatureMap {
    type Error = Error;

    fn try_from(r: FeatureRepr) -> Result<Self> {
        match r {
            FeatureRepr::Indicator { states } => Ok(FeatureMap::indicator(states)),
            FeatureRepr::Table { rows } => FeatureMap::from_table(rows),
        }
    }
}

impl FeatureMap {
    pub fn indicator(n_states: usize) -> Self {
        let rows = (0..n_states)
            .map(|s| {
                let mut r = vec![0.0; n_states];
                r[s] = 1.0;
                r
            })
            .collect();
        Self {
            kind: FeatureKind::Indicator,
            dim: n_states,
            rows,
        }
    }

    pub fn from_table(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Model("feature table rows must share a positive length".into()));
        }
        if rows.iter().flatten().any(|&x| !(0.0..=1.0).contains(&x)) {
            return Err(Error::Model("feature entries must lie in [0, 1]".into()));
        }
        Ok(Self {
            kind: FeatureKind::Table,
            dim,
            rows,
        })
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn evaluate(&self, state: usize) -> &[f64] {
        &self.rows[state]
    }

    /// `w · φ(s)` for every state.
    pub fn state_rewards(&self, weights: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(weights).map(|(x, w)| x * w).sum())
            .collect()
    }
}

/// Exact `μ(π) = E[Σ_t γ^t φ(s_t) | π]` from the discounted occupancy
/// `d = start + γ P_πᵀ d`. Terminal states contribute once, on arrival.
pub fn feature_expectations(mdp: &Mdp, policy: &[usize], phi: &FeatureMap, start: &[f64]) -> Vec<f64> {
    occupancy_features(mdp, phi, start, |s, add| add(policy[s], 1.0))
}

/// [`feature_expectations`] for a stochastic policy, `policy[s][a]` = π(a | s).
pub fn stochastic_feature_expectations(mdp: &Mdp, policy: &[Vec<f64>], phi: &FeatureMap, start: &[f64]) -> Vec<f64> {
    occupancy_features(mdp, phi, start, |s, add| {
        for (a, &p) in policy[s].iter().enumerate() {
            if p > 0.0 {
                add(a, p);
            }
        }
    })
}

fn occupancy_features(
    mdp: &Mdp,
    phi: &FeatureMap,
    start: &[f64],
    actions: impl Fn(usize, &mut dyn FnMut(usize, f64)),
) -> Vec<f64> {
    let n = mdp.n_states;
    let mut a = nalgebra::DMatrix::<f64>::identity(n, n);
    for s in 0..n {
        if mdp.terminal[s] {
            continue;
        }
        actions(s, &mut |action, pa| {
            for &(t, p) in mdp.successors(s, action) {
                a[(t, s)] -= mdp.discount * pa * p;
            }
        });
    }
    let b = nalgebra::DVector::from_column_slice(start);
    let occupancy = a.lu().solve(&b).expect("I - γPᵀ is non-singular for γ < 1");
    let mut mu = vec![0.0; phi.dim];
    for s in 0..n {
        for (m, x) in mu.iter_mut().zip(phi.evaluate(s)) {
            *m += occupancy[s] * x;
        }
    }
    mu
}

/// Monte-Carlo estimate of `μ(π)`: mean and per-component standard error over `rollouts`
/// episodes, truncated once `γ^t < 1e-6`.
pub fn feature_expectations_mc(
    mdp: &Mdp,
    policy: &[usize],
    phi: &FeatureMap,
    start: &[f64],
    rollouts: usize,
    seed: u64,
) -> (Vec<f64>, Vec<f64>) {
    let horizon = ((1e-6f64).ln() / mdp.discount.ln()).ceil() as usize;
    let mut rng = par::rng(seed);
    let mut sum = vec![0.0; phi.dim];
    let mut sum_sq = vec![0.0; phi.dim];
    let mut episode = vec![0.0; phi.dim];
    for _ in 0..rollouts {
        episode.iter_mut().for_each(|x| *x = 0.0);
        let mut s = crate::synth::sample_index(start, &mut rng);
        let mut discount = 1.0;
        for _ in 0..horizon {
            for (e, x) in episode.iter_mut().zip(phi.evaluate(s)) {
                *e += discount * x;
            }
            if mdp.terminal[s] {
                break;
            }
            let succ = mdp.successors(s, policy[s]);
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            s = succ.last().unwrap().0;
            for &(t, p) in succ {
                acc += p;
                if u < acc {
                    s = t;
                    break;
                }
            }
            discount *= mdp.discount;
        }
        for i in 0..phi.dim {
            sum[i] += episode[i];
            sum_sq[i] += episode[i] * episode[i];
        }
    }
    let n = rollouts as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let stderr = sum_sq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| ((sq / n - m * m).max(0.0) / (n - 1.0).max(1.0)).sqrt())
        .collect();
    (mean, stderr)
}

/// `μ̂ = (1/n) Σ_i Σ_t γ^t φ(s_t^(i))` over observed state trajectories.
pub fn empirical_feature_expectations(trajectories: &[Vec<usize>], phi: &FeatureMap, gamma: f64) -> Result<Vec<f64>> {
    if trajectories.is_empty() {
        return Err(Error::InvalidArgument("no trajectories".into()));
    }
    let mut mu = vec![0.0; phi.dim];
    for traj in trajectories {
        let mut discount = 1.0;
        for &s in traj {
            if s >= phi.n_states() {
                return Err(Error::InvalidArgument(format!("state {s} has no features")));
            }
            for (m, x) in mu.iter_mut().zip(phi.evaluate(s)) {
                *m += discount * x;
            }
            discount *= gamma;
        }
    }
    let n = trajectories.len() as f64;
    Ok(mu.into_iter().map(|m| m / n).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cycle(gamma: f64) -> Mdp {
        Mdp {
            n_states: 2,
            n_actions: 1,
            transitions: vec![vec![(1, 1.0)], vec![(0, 1.0)]],
            discount: gamma,
            terminal: vec![false, false],
            start: vec![1.0, 0.0],
            available: None,
        }
    }

    #[test]
    fn absorbing_start_is_a_geometric_series() {
        let mdp = Mdp {
            n_states: 1,
            n_actions: 1,
            transitions: vec![vec![(0, 1.0)]],
            discount: 0.8,
            terminal: vec![false],
            start: vec![1.0],
            available: None,
        };
        let phi = FeatureMap::indicator(1);
        let mu = feature_expectations(&mdp, &[0], &phi, &mdp.start);
        assert!((mu[0] - 1.0 / (1.0 - 0.8)).abs() < 1e-12);
    }

    #[test]
    fn terminal_start_counts_once() {
        let mdp = Mdp {
            n_states: 1,
            n_actions: 1,
            transitions: vec![vec![(0, 1.0)]],
            discount: 0.8,
            terminal: vec![true],
            start: vec![1.0],
            available: None,
        };
        let mu = feature_expectations(&mdp, &[0], &FeatureMap::indicator(1), &mdp.start);
        assert!((mu[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_two_cycle() {
        // d0 = 1 + 0.5 d1, d1 = 0.5 d0  =>  d0 = 4/3, d1 = 2/3
        let mdp = two_cycle(0.5);
        let mu = feature_expectations(&mdp, &[0, 0], &FeatureMap::indicator(2), &mdp.start);
        assert!((mu[0] - 4.0 / 3.0).abs() < 1e-12);
        assert!((mu[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_agrees_with_exact_solve() {
        let mut rng = par::rng(12);
        let mdp = crate::irl::mdp::tests::random_mdp(6, 2, 0.8, &mut rng);
        let policy: Vec<usize> = (0..6).map(|_| rng.gen_range(0..2)).collect();
        let phi = FeatureMap::indicator(6);
        let exact = feature_expectations(&mdp, &policy, &phi, &mdp.start);
        let (mean, se) = feature_expectations_mc(&mdp, &policy, &phi, &mdp.start, 100_000, 3);
        for i in 0..6 {
            assert!((mean[i] - exact[i]).abs() <= 3.0 * se[i] + 1e-9, "{i}: {} vs {} (se {})", mean[i], exact[i], se[i]);
        }
    }

    #[test]
    fn empirical_direct_sum() {
        let phi = FeatureMap::indicator(2);
        let mu = empirical_feature_expectations(&[vec![0, 0, 0]], &phi, 0.5).unwrap();
        assert_eq!(mu, vec![1.75, 0.0]);
        let many = empirical_feature_expectations(&vec![vec![0, 1, 0]; 5], &phi, 0.5).unwrap();
        let one = empirical_feature_expectations(&[vec![0, 1, 0]], &phi, 0.5).unwrap();
        assert_eq!(many, one);
    }

    #[test]
    fn empirical_matches_direct_summation_oracle() {
        let mut rng = par::rng(1);
        let table: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| rng.gen::<f64>()).collect()).collect();
        let phi = FeatureMap::from_table(table.clone()).unwrap();
        let trajs: Vec<Vec<usize>> = (0..7).map(|_| (0..rng.gen_range(1..9)).map(|_| rng.gen_range(0..5)).collect()).collect();
        let mu = empirical_feature_expectations(&trajs, &phi, 0.9).unwrap();
        for k in 0..3 {
            let mut direct = 0.0;
            for t in &trajs {
                for (step, &s) in t.iter().enumerate() {
                    direct += 0.9f64.powi(step as i32) * table[s][k];
                }
            }
            assert!((mu[k] - direct / 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn descriptor_round_trip() {
        let ind = FeatureMap::indicator(4);
        let text = serde_json::to_string(&ind).unwrap();
        assert_eq!(text, r#"{"kind":"indicator","states":4}"#);
        assert_eq!(serde_json::from_str::<FeatureMap>(&text).unwrap(), ind);
        let table = FeatureMap::from_table(vec![vec![0.5, 1.0], vec![0.0, 0.25]]).unwrap();
        let back: FeatureMap = serde_json::from_str(&serde_json::to_string(&table).unwrap()).unwrap();
        assert_eq!(back, table);
        assert!(serde_json::from_str::<FeatureMap>(r#"{"kind":"table","rows":[[2.0]]}"#).is_err());
    }

    #[test]
    fn feature_table_bounds_checked() {
        assert!(FeatureMap::from_table(vec![vec![1.5]]).is_err());
        assert!(FeatureMap::from_table(vec![vec![0.5, 0.1], vec![0.2]]).is_err());
    }
}
