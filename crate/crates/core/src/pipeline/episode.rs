//! Executing a policy against a human, turn by turn.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::TaskDomain;
use crate::error::{Error, Result};
use crate::irl::Policy;
use crate::momdp::{belief_update_with, Kernel, Momdp, PolicyValue};

/// What the world reports after the robot acts at `step`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub next: usize,
    pub observation: usize,
}

/// The human side of an episode.
pub trait Environment {
    fn respond(&mut self, step: usize, action: usize) -> Result<Outcome>;
}

/// Chooses the human's reply in a [`TaskDomain`].
pub trait HumanPolicy {
    /// Human action id to play at `mid`, the step after the robot's action `robot`.
    fn act(&mut self, domain: &TaskDomain, mid: usize, robot: usize) -> Result<usize>;
}

/// A [`TaskDomain`] in which the MOMDP's robot-action and observation indices are positions
/// among the alphabet's robot and human actions.
pub struct TaskWorld<'a, H> {
    pub domain: &'a TaskDomain,
    pub human: H,
    robot_ids: Vec<usize>,
    human_ids: Vec<usize>,
}

impl<'a, H: HumanPolicy> TaskWorld<'a, H> {
    pub fn new(domain: &'a TaskDomain, human: H) -> Self {
        Self {
            domain,
            human,
            robot_ids: domain.alphabet.robot_actions(),
            human_ids: domain.alphabet.human_actions(),
        }
    }
}

impl<H: HumanPolicy> Environment for TaskWorld<'_, H> {
    fn respond(&mut self, step: usize, action: usize) -> Result<Outcome> {
        let robot = self.robot_ids[action];
        let mid = self.domain.effect(step, robot).ok_or_else(|| Error::Replay {
            index: 0,
            action: self.domain.alphabet.label(robot).to_string(),
            step: self.domain.task_steps[step].clone(),
        })?;
        let valid = self.domain.valid_human_actions(mid);
        if valid.is_empty() {
            let pass = self.domain.pass_observation();
            return Ok(Outcome {
                next: mid,
                observation: self.human_ids.iter().position(|&h| h == pass).unwrap(),
            });
        }
        let h = self.human.act(self.domain, mid, robot)?;
        let next = self.domain.effect(mid, h).filter(|_| valid.contains(&h)).ok_or_else(|| {
            let legal: Vec<&str> = valid.iter().map(|&a| self.domain.alphabet.label(a)).collect();
            Error::InvalidArgument(format!(
                "{} is not allowed at {}; legal: {}",
                self.domain.alphabet.label(h),
                self.domain.task_steps[mid],
                legal.join(", ")
            ))
        })?;
        Ok(Outcome {
            next,
            observation: self.human_ids.iter().position(|&x| x == h).unwrap(),
        })
    }
}

/// Replays a fixed list of human actions, then idles.
#[derive(Debug, Clone)]
pub struct ScriptedHuman {
    pub actions: Vec<usize>,
    cursor: usize,
}

impl ScriptedHuman {
    pub fn new(actions: Vec<usize>) -> Self {
        Self { actions, cursor: 0 }
    }
}

impl HumanPolicy for ScriptedHuman {
    fn act(&mut self, domain: &TaskDomain, mid: usize, _robot: usize) -> Result<usize> {
        if let Some(&h) = self.actions.get(self.cursor) {
            self.cursor += 1;
            return Ok(h);
        }
        domain
            .idle
            .human
            .filter(|&h| domain.effect(mid, h).is_some())
            .ok_or_else(|| Error::InvalidArgument("scripted human ran out of actions".into()))
    }
}

/// Decides the robot's action and tracks whatever state it needs.
pub trait Controller {
    fn act(&mut self, step: usize) -> usize;
    fn observe(&mut self, step: usize, action: usize, outcome: Outcome) -> Result<()>;
    fn belief(&self) -> Option<&[f64]>;
    /// Set when the last observation was impossible under every type.
    fn was_reset(&self) -> bool {
        false
    }
}

/// Acts on α-vectors and filters the type with the Bayes update.
pub struct MomdpController<'a> {
    pub momdp: &'a Momdp,
    pub kernel: &'a Kernel,
    pub policy: &'a PolicyValue,
    pub prior: Vec<f64>,
    pub belief: Vec<f64>,
    reset: bool,
}

impl<'a> MomdpController<'a> {
    pub fn new(momdp: &'a Momdp, kernel: &'a Kernel, policy: &'a PolicyValue, prior: Vec<f64>) -> Self {
        Self {
            momdp,
            kernel,
            policy,
            belief: prior.clone(),
            prior,
            reset: false,
        }
    }
}

impl Controller for MomdpController<'_> {
    fn act(&mut self, step: usize) -> usize {
        self.policy.best_action(step, &self.belief)
    }

    fn observe(&mut self, step: usize, action: usize, outcome: Outcome) -> Result<()> {
        let (belief, reset) = filter_belief(self.momdp, self.kernel, &self.prior, &self.belief, step, action, outcome)?;
        self.belief = belief;
        self.reset = reset;
        Ok(())
    }

    fn belief(&self) -> Option<&[f64]> {
        Some(&self.belief)
    }

    fn was_reset(&self) -> bool {
        self.reset
    }
}

/// One Bayes step of the type filter. An observation that no type can produce resets the
/// belief to `prior`; the flag reports the reset.
pub fn filter_belief(
    momdp: &Momdp,
    kernel: &Kernel,
    prior: &[f64],
    belief: &[f64],
    step: usize,
    action: usize,
    outcome: Outcome,
) -> Result<(Vec<f64>, bool)> {
    match belief_update_with(kernel, belief, step, action, outcome.next, outcome.observation) {
        Ok(b) => Ok((b, false)),
        Err(Error::ImpossibleObservation { .. }) => {
            log::warn!(
                "observation {} impossible under every type at {}; belief reset to the prior",
                momdp.observations[outcome.observation],
                momdp.steps[step]
            );
            Ok((prior.to_vec(), true))
        }
        Err(e) => Err(e),
    }
}

/// A fixed state policy that ignores the human's type.
pub struct MdpController<'a> {
    pub policy: &'a Policy,
}

impl Controller for MdpController<'_> {
    fn act(&mut self, step: usize) -> usize {
        self.policy[step]
    }

    fn observe(&mut self, _step: usize, _action: usize, _outcome: Outcome) -> Result<()> {
        Ok(())
    }

    fn belief(&self) -> Option<&[f64]> {
        None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Turn {
    pub step: usize,
    /// Belief the robot acted on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub belief: Option<Vec<f64>>,
    pub action: usize,
    pub observation: usize,
    pub next: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub belief_reset: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub turns: Vec<Turn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_belief: Option<Vec<f64>>,
    pub terminal: bool,
}

/// Runs until a terminal step or `max_turns`.
pub fn run_episode(
    momdp: &Momdp,
    controller: &mut dyn Controller,
    env: &mut dyn Environment,
    max_turns: usize,
) -> Result<Transcript> {
    let mut step = momdp.initial_step;
    let mut turns = Vec::new();
    while !momdp.terminal[step] && turns.len() < max_turns {
        let belief = controller.belief().map(<[f64]>::to_vec);
        let action = controller.act(step);
        let outcome = env.respond(step, action)?;
        controller.observe(step, action, outcome)?;
        turns.push(Turn {
            step,
            belief,
            action,
            observation: outcome.observation,
            next: outcome.next,
            belief_reset: controller.was_reset(),
        });
        step = outcome.next;
    }
    Ok(Transcript {
        turns,
        final_belief: controller.belief().map(<[f64]>::to_vec),
        terminal: momdp.terminal[step],
    })
}

/// Fixed-type world for a MOMDP with a stationary or standard observation table: the next
/// step and the observation are sampled from the model for the true type.
pub struct ModelWorld<'a, R> {
    pub momdp: &'a Momdp,
    pub kernel: &'a Kernel,
    pub true_type: usize,
    pub rng: R,
}

impl<R: Rng> Environment for ModelWorld<'_, R> {
    fn respond(&mut self, step: usize, action: usize) -> Result<Outcome> {
        let ny = self.momdp.n_types();
        let y = self.true_type;
        let branches = self.kernel.branches(step, action);
        if branches.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "{} is not available at {}",
                self.momdp.actions[action], self.momdp.steps[step]
            )));
        }
        let weights: Vec<f64> = branches.iter().map(|b| b.joint[y * ny..(y + 1) * ny].iter().sum()).collect();
        let pick = crate::synth::sample_index(&weights, &mut self.rng);
        Ok(Outcome {
            next: branches[pick].next,
            observation: branches[pick].observation,
        })
    }
}
