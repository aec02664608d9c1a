//! Accumulated reward under increasingly deviating simulated humans.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::folds::{baseline_per_user_mdp, Fold};
use super::scoring::score;
use crate::domain::place_drill::{Board, Screw, PLACE};
use crate::domain::{DemoSet, TaskDomain};
use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::pipeline::{
    infer_type_offline, run_episode, Controller, HumanPolicy, MdpController, MomdpController, TaskWorld,
};
use crate::synth::Persona;

/// A simulated worker: plays the subject's own placement order, but with probability
/// `epsilon` at each turn plays a uniformly random valid action instead.
pub struct EpsilonHuman {
    pub order: [usize; 3],
    pub epsilon: f64,
    pub rng: ChaCha8Rng,
}

impl EpsilonHuman {
    pub fn new(order: [usize; 3], epsilon: f64, seed: u64) -> Self {
        Self {
            order,
            epsilon,
            rng: par::rng(seed),
        }
    }

    /// The subject's own action at `mid`: the first unplaced screw of the order, else idle.
    pub fn base_action(&self, domain: &TaskDomain, mid: usize) -> Option<usize> {
        let board = Board::from_step(mid);
        self.order
            .iter()
            .find(|&&s| board.0[s] == Screw::Unplaced)
            .map(|&s| PLACE[s])
            .or_else(|| domain.idle.human.filter(|&h| domain.effect(mid, h).is_some()))
    }
}

impl HumanPolicy for EpsilonHuman {
    fn act(&mut self, domain: &TaskDomain, mid: usize, _robot: usize) -> Result<usize> {
        let valid = domain.valid_human_actions(mid);
        // The coin is always drawn so every policy sees the same stream of deviations.
        let deviate = self.rng.gen::<f64>() < self.epsilon;
        let pick = *valid.choose(&mut self.rng).ok_or_else(|| Error::InvalidArgument("no valid human action".into()))?;
        if deviate {
            return Ok(pick);
        }
        self.base_action(domain, mid)
            .ok_or_else(|| Error::InvalidArgument(format!("no base action at {}", domain.task_steps[mid])))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessConfig {
    pub epsilons: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
    pub max_turns: usize,
    pub baseline: bool,
    #[serde(default)]
    pub execution: Execution,
}

impl Default for RobustnessConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            reps: 100,
            seed: 0,
            max_turns: 30,
            baseline: true,
            execution: Execution::default(),
        }
    }
}

pub const MOMDP_POLICY: &str = "momdp";
pub const BASELINE_POLICY: &str = "per-user-mdp";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub fold: usize,
    pub subject: String,
    pub epsilon: f64,
    pub rep: usize,
    pub policy: String,
    pub reward: f64,
    pub turns: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub epsilon: f64,
    pub policy: String,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub reps: usize,
    pub summaries: Vec<Summary>,
    pub episodes: Vec<Episode>,
}

impl RobustnessReport {
    pub fn summary(&self, epsilon: f64, policy: &str) -> Option<&Summary> {
        self.summaries.iter().find(|s| s.epsilon == epsilon && s.policy == policy)
    }

    /// `mean(momdp) − mean(baseline)` at `epsilon`.
    pub fn gap(&self, epsilon: f64) -> Option<f64> {
        Some(self.summary(epsilon, MOMDP_POLICY)?.mean - self.summary(epsilon, BASELINE_POLICY)?.mean)
    }

    /// Mean and standard error per (ε, policy), recomputed from the episode log.
    pub fn summarize(episodes: &[Episode]) -> Vec<Summary> {
        let mut keys: Vec<(f64, String)> = Vec::new();
        for e in episodes {
            if !keys.iter().any(|k| k.0 == e.epsilon && k.1 == e.policy) {
                keys.push((e.epsilon, e.policy.clone()));
            }
        }
        keys.into_iter()
            .map(|(epsilon, policy)| {
                let xs: Vec<f64> = episodes
                    .iter()
                    .filter(|e| e.epsilon == epsilon && e.policy == policy)
                    .map(|e| e.reward)
                    .collect();
                let n = xs.len();
                let mean = xs.iter().sum::<f64>() / n as f64;
                let var = if n > 1 {
                    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
                } else {
                    0.0
                };
                Summary {
                    epsilon,
                    policy,
                    mean,
                    stderr: (var / n as f64).sqrt(),
                    n,
                }
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,policy,mean,stderr,n\n");
        for s in &self.summaries {
            let _ = writeln!(out, "{},{},{},{},{}", s.epsilon, s.policy, s.mean, s.stderr, s.n);
        }
        out
    }
}

/// Writes the per-(ε, policy) summary as CSV.
pub fn emit_plot_data(report: &RobustnessReport, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, report.to_csv()).map_err(|e| Error::io(path, e))
}

/// Runs every fold × ε × repetition with an [`EpsilonHuman`] built from the held-out
/// subject, scoring every policy with that subject's true-style reward. Policies in one
/// repetition share the human's random stream.
pub fn evaluate_robustness(
    folds: &[Fold],
    demos: &DemoSet,
    personas: &[Persona],
    config: &RobustnessConfig,
) -> Result<RobustnessReport> {
    if config.reps == 0 {
        return Err(Error::InvalidArgument("at least one repetition is required".into()));
    }
    let prepared = par::try_map_indexed(folds.len(), config.execution, |f| {
        let fold = &folds[f];
        let persona = personas
            .iter()
            .find(|p| p.subject == fold.subject)
            .ok_or_else(|| Error::InvalidArgument(format!("no persona for subject {}", fold.subject)))?;
        let own: Vec<_> = fold.held_out_demos(demos).into_iter().cloned().collect();
        let prior = infer_type_offline(&fold.bundle, &own)?;
        let baseline = if config.baseline {
            Some(baseline_per_user_mdp(&own, &fold.bundle.domain, par::seed_path(config.seed, &[f as u64]))?)
        } else {
            None
        };
        Ok::<_, Error>((persona.clone(), prior, baseline))
    })?;

    let jobs: Vec<(usize, usize, usize)> = (0..folds.len())
        .flat_map(|f| (0..config.epsilons.len()).flat_map(move |e| (0..config.reps).map(move |r| (f, e, r))))
        .collect();
    let results = par::try_map_indexed(jobs.len(), config.execution, |j| {
        let (f, e, rep) = jobs[j];
        let fold = &folds[f];
        let (persona, prior, baseline) = &prepared[f];
        let bundle = &fold.bundle;
        let epsilon = config.epsilons[e];
        let seed = par::seed_path(config.seed, &[f as u64, e as u64, rep as u64]);
        let robot_ids = bundle.domain.alphabet.robot_actions();
        let mut out = Vec::new();
        let mut run = |name: &str, controller: &mut dyn Controller| -> Result<()> {
            let human = EpsilonHuman::new(persona.order, epsilon, seed);
            let mut world = TaskWorld::new(&bundle.domain, human);
            let t = run_episode(&bundle.momdp, controller, &mut world, config.max_turns)?;
            let reward = t.turns.iter().map(|turn| score(persona.style, turn.step, robot_ids[turn.action])).sum();
            out.push(Episode {
                fold: f,
                subject: fold.subject.clone(),
                epsilon,
                rep,
                policy: name.to_string(),
                reward,
                turns: t.turns.len(),
            });
            Ok(())
        };
        let mut momdp = MomdpController::new(&bundle.momdp, &bundle.kernel, &bundle.policy, prior.clone());
        run(MOMDP_POLICY, &mut momdp)?;
        if let Some(b) = baseline {
            let mut mdp = MdpController { policy: &b.policy };
            run(BASELINE_POLICY, &mut mdp)?;
        }
        Ok::<_, Error>(out)
    })?;
    let episodes: Vec<Episode> = results.into_iter().flatten().collect();
    Ok(RobustnessReport {
        reps: config.reps,
        summaries: RobustnessReport::summarize(&episodes),
        episodes,
    })
}
