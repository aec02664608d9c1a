//! Leave-one-subject-out folds and held-out type classification.

use std::collections::BTreeMap;

use crate::clustering::{argmax, em_cluster, weighted_vote, EmConfig};
use crate::domain::{DemoSequence, DemoSet, TaskDomain};
use crate::error::{Error, Result};
use crate::irl::{empirical_feature_expectations, irl_learn, value_iteration, FeatureMap, IrlConfig, Policy};
use crate::momdp::{response_model, ResponseSource, RewardSpec};
use crate::par;
use crate::pipeline::{train, TrainConfig, TrainedBundle};

/// One fold: a bundle trained without `subject`, whose sequences are `held_out`.
#[derive(Debug, Clone)]
pub struct Fold {
    pub subject: String,
    pub held_out: Vec<usize>,
    pub bundle: TrainedBundle,
}

impl Fold {
    pub fn held_out_demos<'a>(&self, demos: &'a DemoSet) -> Vec<&'a DemoSequence> {
        self.held_out.iter().map(|&i| &demos.sequences[i]).collect()
    }
}

/// Train one bundle per subject with that subject's sequences removed. Folds train in
/// parallel; fold `i` uses seed `seed_path(config.seed, [i])`.
pub fn cross_validate(demos: &DemoSet, domain: &TaskDomain, config: &TrainConfig) -> Result<Vec<Fold>> {
    let groups: Vec<(String, Vec<usize>)> = demos
        .by_subject()
        .into_iter()
        .filter(|(subject, seqs)| {
            if seqs.is_empty() {
                log::warn!("subject {subject} has no sequences; skipped");
            }
            !seqs.is_empty()
        })
        .collect();
    if groups.len() < 2 {
        return Err(Error::InvalidArgument("cross-validation needs at least two subjects".into()));
    }
    // Folds already run in parallel; inner stages stay sequential.
    let mut inner = config.clone();
    inner.execution = par::Execution::Sequential;
    par::try_map_indexed(groups.len(), config.execution, |i| {
        let (subject, held_out) = &groups[i];
        let keep: Vec<usize> = (0..demos.sequences.len()).filter(|j| !held_out.contains(j)).collect();
        let mut fold_config = inner.clone();
        fold_config.seed = par::seed_path(config.seed, &[i as u64]);
        let bundle = train(&demos.subset(&keep), domain, &fold_config)?;
        Ok(Fold {
            subject: subject.clone(),
            held_out: held_out.clone(),
            bundle,
        })
    })
}

/// Fraction of held-out subjects whose likelihood-weighted cluster vote maps to their label.
///
/// Within each fold, clusters are mapped to labels by the assignment that agrees best with
/// the labels of the fold's training subjects (each cluster takes its majority label).
pub fn classification_accuracy(folds: &[Fold], demos: &DemoSet, labels: &BTreeMap<String, String>) -> Result<f64> {
    if folds.is_empty() {
        return Ok(0.0);
    }
    let subject_of = |s: &DemoSequence, i: usize| s.subject.clone().unwrap_or_else(|| format!("#{i}"));
    let mut correct = 0;
    for fold in folds {
        let truth = labels
            .get(&fold.subject)
            .ok_or_else(|| Error::InvalidArgument(format!("no label for subject {}", fold.subject)))?;
        let model = &fold.bundle.model;
        let training = &fold.bundle.training.sequences;
        let mut tallies: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); model.k];
        for (i, (seq, &z)) in training.iter().zip(&model.assignments).enumerate() {
            let subject = subject_of(seq, i);
            let label = labels
                .get(&subject)
                .ok_or_else(|| Error::InvalidArgument(format!("no label for subject {subject}")))?;
            *tallies[z].entry(label.as_str()).or_default() += 1;
        }
        let held: Vec<DemoSequence> = fold.held_out.iter().map(|&i| demos.sequences[i].clone()).collect();
        let predicted = argmax(&weighted_vote(&held, model));
        // Majority label; ties go to the alphabetically first label.
        let mapped = tallies[predicted]
            .iter()
            .fold(None, |best: Option<(&str, usize)>, (l, &c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((l, c)),
            })
            .map(|b| b.0);
        if mapped == Some(truth.as_str()) {
            correct += 1;
        }
    }
    Ok(correct as f64 / folds.len() as f64)
}

/// A per-user MDP policy: smoothed response counts and IRL on one user's sequences only.
///
/// Like state-space cross-training, the reward is a table over raw task-steps (one
/// indicator each), whatever feature map the domain declares for type rewards.
#[derive(Debug, Clone)]
pub struct BaselinePolicy {
    pub policy: Policy,
    pub reward: RewardSpec,
}

pub fn baseline_per_user_mdp(user_demos: &[DemoSequence], domain: &TaskDomain, seed: u64) -> Result<BaselinePolicy> {
    if user_demos.is_empty() {
        return Err(Error::InvalidArgument("the baseline needs at least one demonstration".into()));
    }
    let n = domain.alphabet.len();
    let model = em_cluster(user_demos, n, 1, seed, &EmConfig::default());
    let base = response_model(domain, ResponseSource::Learned(&model))?;
    let mdp = base.type_mdp(0);
    let phi = FeatureMap::indicator(domain.n_steps());
    let trajectories = user_demos.iter().map(|s| domain.trajectory(s)).collect::<Result<Vec<_>>>()?;
    let demo_mu = empirical_feature_expectations(&trajectories, &phi, domain.discount)?;
    let config = IrlConfig {
        seed: par::seed_path(seed, &[1]),
        ..IrlConfig::default()
    };
    let result = irl_learn(&mdp, &phi, &demo_mu, &config)?;
    let reward = RewardSpec {
        features: phi.clone(),
        weights: result.weights.clone(),
        action_costs: None,
    };
    let solution = value_iteration(&mdp, &crate::irl::Reward::State(phi.state_rewards(&result.weights)));
    Ok(BaselinePolicy {
        policy: solution.policy,
        reward,
    })
}
