//! Hard EM over first-order transition matrices.

use serde::{Deserialize, Serialize};

use super::matrix::{sequence_loglik, TransitionMatrix};
use crate::domain::DemoSequence;
use crate::par;

/// How the cluster prior `P(z)` is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode {
    /// Cluster-size fractions of the current assignment.
    #[default]
    Estimated,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub prior: PriorMode,
    /// Additive smoothing on transition counts.
    pub pseudo_count: f64,
    pub max_iterations: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            prior: PriorMode::Estimated,
            pseudo_count: 1.0,
            max_iterations: 200,
        }
    }
}

/// A clustering of sequences into `k` types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub n_actions: usize,
    pub matrices: Vec<TransitionMatrix>,
    pub priors: Vec<f64>,
    /// 0-based cluster of each training sequence.
    pub assignments: Vec<usize>,
    /// Complete-data log-likelihood of the final assignment.
    pub log_likelihood: f64,
    pub bic: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every M-step, in order: the complete-data log-likelihood plus the
    /// smoothing term `pseudo_count · Σ log θ`. Hard EM never decreases it; with
    /// `pseudo_count = 0` it is the complete-data log-likelihood itself.
    pub trace: Vec<f64>,
    /// Indices `i` where an empty cluster was refilled before the M-step that produced
    /// `trace[i]`. The refill is a repair move, not an EM step, and may lower the objective.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub repairs: Vec<usize>,
    pub config: EmConfig,
}

impl ClusterModel {
    /// `K = k |A| (|A| - 1)` free parameters.
    pub fn free_parameters(k: usize, n_actions: usize) -> usize {
        k * n_actions * (n_actions - 1)
    }

    pub fn bic_for(log_likelihood: f64, k: usize, n_actions: usize, n_sequences: usize) -> f64 {
        log_likelihood - Self::free_parameters(k, n_actions) as f64 / 2.0 * (n_sequences as f64).ln()
    }

    /// Log-likelihood of every sequence under every cluster, `[i][z]`.
    pub fn loglik_table(&self, data: &[DemoSequence]) -> Vec<Vec<f64>> {
        loglik_table(data, &self.matrices)
    }

    /// Recomputes the complete-data log-likelihood from matrices, priors and assignments.
    pub fn recompute_log_likelihood(&self, data: &[DemoSequence]) -> f64 {
        data.iter()
            .zip(&self.assignments)
            .map(|(s, &z)| self.priors[z].ln() + sequence_loglik(s, &self.matrices[z]))
            .sum()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        cluster_sizes(&self.assignments, self.k)
    }
}

pub(crate) fn loglik_table(data: &[DemoSequence], matrices: &[TransitionMatrix]) -> Vec<Vec<f64>> {
    data.iter()
        .map(|s| matrices.iter().map(|m| sequence_loglik(s, m)).collect())
        .collect()
}

fn cluster_sizes(assignments: &[usize], k: usize) -> Vec<usize> {
    let mut sizes = vec![0; k];
    for &z in assignments {
        sizes[z] += 1;
    }
    sizes
}

fn priors_for(assignments: &[usize], k: usize, mode: PriorMode) -> Vec<f64> {
    match mode {
        PriorMode::Uniform => vec![1.0 / k as f64; k],
        PriorMode::Estimated => {
            let n = assignments.len() as f64;
            cluster_sizes(assignments, k).into_iter().map(|c| c as f64 / n).collect()
        }
    }
}

fn m_step(data: &[DemoSequence], assignments: &[usize], k: usize, n_actions: usize, pseudo: f64) -> Vec<TransitionMatrix> {
    let mut counts = vec![vec![0.0; n_actions * n_actions]; k];
    for (s, &z) in data.iter().zip(assignments) {
        for (a, b) in s.transitions() {
            counts[z][a * n_actions + b] += 1.0;
        }
    }
    counts
        .iter()
        .map(|c| TransitionMatrix::from_counts(n_actions, c, pseudo))
        .collect()
}

/// Most likely cluster of each sequence; ties go to the lowest index.
fn e_step(table: &[Vec<f64>], log_priors: &[f64]) -> Vec<usize> {
    table
        .iter()
        .map(|row| {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (z, (&ll, &lp)) in row.iter().zip(log_priors).enumerate() {
                let score = ll + lp;
                if score > best_score {
                    best = z;
                    best_score = score;
                }
            }
            best
        })
        .collect()
}

/// Gives every empty cluster the sequence that is least likely under its current cluster,
/// taken from clusters with more than one member. Returns true if anything moved.
fn fill_empty_clusters(assignments: &mut [usize], table: &[Vec<f64>], k: usize) -> bool {
    let mut moved = false;
    loop {
        let sizes = cluster_sizes(assignments, k);
        let Some(empty) = sizes.iter().position(|&c| c == 0) else { break };
        let donor = (0..assignments.len())
            .filter(|&i| sizes[assignments[i]] > 1)
            .min_by(|&a, &b| table[a][assignments[a]].total_cmp(&table[b][assignments[b]]).then(a.cmp(&b)));
        match donor {
            Some(i) => {
                assignments[i] = empty;
                moved = true;
            }
            None => break,
        }
    }
    moved
}

fn complete_loglik(table: &[Vec<f64>], assignments: &[usize], priors: &[f64]) -> f64 {
    table
        .iter()
        .zip(assignments)
        .map(|(row, &z)| priors[z].ln() + row[z])
        .sum()
}

/// Log of the Dirichlet prior that additive smoothing corresponds to, up to a constant.
fn smoothing_term(matrices: &[TransitionMatrix], pseudo: f64) -> f64 {
    if pseudo == 0.0 {
        return 0.0;
    }
    let entries: f64 = matrices
        .iter()
        .flat_map(|m| (0..m.size()).flat_map(move |a| (0..m.size()).map(move |b| m.log_prob(a, b))))
        .sum();
    pseudo * entries
}

/// Clusters `data` into `k` types with hard EM from a seeded random start.
///
/// The result is a fixed point: its matrices are the smoothed counts of the assigned
/// sequences and one more E-step leaves every assignment unchanged (unless the iteration cap
/// was hit, in which case `converged` is false).
pub fn em_cluster(data: &[DemoSequence], n_actions: usize, k: usize, seed: u64, config: &EmConfig) -> ClusterModel {
    assert!(k >= 1, "k must be at least 1");
    assert!(!data.is_empty(), "no sequences to cluster");
    let mut rng = par::rng(seed);
    let initial: Vec<TransitionMatrix> = (0..k).map(|_| TransitionMatrix::random(n_actions, &mut rng)).collect();
    let uniform = vec![-(k as f64).ln(); k];
    let table = loglik_table(data, &initial);
    let mut assignments = e_step(&table, &uniform);
    fill_empty_clusters(&mut assignments, &table, k);

    let mut trace = Vec::new();
    let mut repairs = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let (mut matrices, mut priors, mut log_likelihood);
    loop {
        matrices = m_step(data, &assignments, k, n_actions, config.pseudo_count);
        priors = priors_for(&assignments, k, config.prior);
        let table = loglik_table(data, &matrices);
        log_likelihood = complete_loglik(&table, &assignments, &priors);
        trace.push(log_likelihood + smoothing_term(&matrices, config.pseudo_count));
        if iterations >= config.max_iterations {
            break;
        }
        iterations += 1;
        let log_priors: Vec<f64> = priors.iter().map(|p| p.ln()).collect();
        let mut next = e_step(&table, &log_priors);
        let repaired = fill_empty_clusters(&mut next, &table, k);
        if next == assignments {
            converged = true;
            break;
        }
        if repaired {
            repairs.push(trace.len());
        }
        assignments = next;
    }
    ClusterModel {
        k,
        n_actions,
        bic: ClusterModel::bic_for(log_likelihood, k, n_actions, data.len()),
        matrices,
        priors,
        assignments,
        log_likelihood,
        iterations,
        converged,
        trace,
        repairs,
        config: *config,
    }
}
