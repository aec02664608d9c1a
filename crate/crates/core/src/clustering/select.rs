use serde::{Deserialize, Serialize};

use super::em::{em_cluster, loglik_table, ClusterModel, EmConfig};
use crate::domain::DemoSequence;
use crate::par::{self, Execution};

/// One EM run considered during model selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub k: usize,
    pub restart: usize,
    pub seed: u64,
    pub log_likelihood: f64,
    pub bic: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub restarts: usize,
    pub seed: u64,
    pub em: EmConfig,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            k_min: 2,
            k_max: 10,
            restarts: 20,
            seed: 0,
            em: EmConfig::default(),
            execution: Execution::default(),
        }
    }
}

/// Best model plus every candidate that was scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSelection {
    pub model: ClusterModel,
    pub candidates: Vec<Candidate>,
}

impl ModelSelection {
    /// Best candidate per `k`, in increasing `k`.
    pub fn best_by_k(&self) -> Vec<&Candidate> {
        let mut out: Vec<&Candidate> = Vec::new();
        for c in &self.candidates {
            match out.iter_mut().find(|b| b.k == c.k) {
                Some(b) if better(c, b) => *b = c,
                Some(_) => {}
                None => out.push(c),
            }
        }
        out.sort_by_key(|c| c.k);
        out
    }

    pub fn bic_for_k(&self, k: usize) -> Option<f64> {
        self.best_by_k().into_iter().find(|c| c.k == k).map(|c| c.bic)
    }
}

/// Higher BIC wins; ties go to the smaller `k`, then the earlier restart.
fn better(a: &Candidate, b: &Candidate) -> bool {
    a.bic > b.bic || (a.bic == b.bic && (a.k, a.restart) < (b.k, b.restart))
}

/// Seed used for restart `restart` of `k`.
pub fn restart_seed(seed: u64, k: usize, restart: usize) -> u64 {
    par::seed_path(seed, &[k as u64, restart as u64])
}

/// Runs EM for every `k` in `k_min..=k_max` with `restarts` seeded restarts each and keeps
/// the run with the highest BIC.
pub fn select_best_model(data: &[DemoSequence], n_actions: usize, config: &SelectionConfig) -> ModelSelection {
    assert!(config.k_min >= 1 && config.k_min <= config.k_max, "need 1 <= k_min <= k_max");
    assert!(config.restarts >= 1, "need at least one restart");
    let jobs: Vec<(usize, usize)> = (config.k_min..=config.k_max)
        .flat_map(|k| (0..config.restarts).map(move |r| (k, r)))
        .collect();
    let runs = par::map_indexed(jobs.len(), config.execution, |j| {
        let (k, r) = jobs[j];
        let seed = restart_seed(config.seed, k, r);
        (seed, em_cluster(data, n_actions, k, seed, &config.em))
    });
    let candidates: Vec<Candidate> = jobs
        .iter()
        .zip(&runs)
        .map(|(&(k, restart), (seed, m))| Candidate {
            k,
            restart,
            seed: *seed,
            log_likelihood: m.log_likelihood,
            bic: m.bic,
            iterations: m.iterations,
            converged: m.converged,
        })
        .collect();
    let best = (0..candidates.len())
        .reduce(|b, c| if better(&candidates[c], &candidates[b]) { c } else { b })
        .expect("at least one candidate");
    let model = runs.into_iter().nth(best).unwrap().1;
    ModelSelection { model, candidates }
}

/// Posterior over types for a group of sequences from one user:
/// `P(z | seqs) ∝ P(z) ∏ P(seq | θ_z)`, computed in log space.
pub fn posterior_over_types(seqs: &[DemoSequence], model: &ClusterModel) -> Vec<f64> {
    let table = loglik_table(seqs, &model.matrices);
    let scores: Vec<f64> = (0..model.k)
        .map(|z| model.priors[z].ln() + table.iter().map(|row| row[z]).sum::<f64>())
        .collect();
    normalize_log(&scores)
}

/// Per-sequence posterior responsibilities summed over the group, renormalized. The argmax
/// is the group's likelihood-weighted type vote.
pub fn weighted_vote(seqs: &[DemoSequence], model: &ClusterModel) -> Vec<f64> {
    let mut votes = vec![0.0; model.k];
    for s in seqs {
        for (v, p) in votes.iter_mut().zip(posterior_over_types(std::slice::from_ref(s), model)) {
            *v += p;
        }
    }
    let total: f64 = votes.iter().sum();
    votes.iter().map(|v| v / total).collect()
}

pub(crate) fn normalize_log(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
