//! One live collaboration: the robot acts on its belief, the client plays the human.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::domain::Actor;
use crate::error::{Error, Result};
use crate::momdp::validate_belief;
use crate::pipeline::{filter_belief, Outcome, TrainedBundle, Turn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionState {
    AwaitingHuman,
    AwaitingRobot,
    Terminal,
}

/// A session's position plus everything it has seen. All numbers are reproducible with
/// [`run_episode`](crate::pipeline::run_episode) from the same prior and human actions.
pub struct Session {
    pub id: String,
    pub bundle_id: String,
    bundle: Arc<TrainedBundle>,
    pub prior: Vec<f64>,
    pub belief: Vec<f64>,
    /// The robot's decision step.
    pub step: usize,
    /// Robot action (MOMDP index) already taken at `step`, awaiting the human's reply.
    pub pending: Option<usize>,
    pub turns: Vec<Turn>,
    pub state: SessionState,
    pub(crate) last_used: Instant,
}

impl Session {
    /// Starts at the task's initial step and lets the robot take its first action.
    pub fn new(id: String, bundle_id: String, bundle: Arc<TrainedBundle>, prior: Vec<f64>) -> Result<Self> {
        validate_belief(&prior, bundle.momdp.n_types())?;
        let step = bundle.momdp.initial_step;
        let mut session = Self {
            id,
            bundle_id,
            belief: prior.clone(),
            prior,
            step,
            pending: None,
            turns: Vec::new(),
            state: SessionState::AwaitingRobot,
            last_used: Instant::now(),
            bundle,
        };
        session.advance()?;
        Ok(session)
    }

    pub fn bundle(&self) -> &TrainedBundle {
        &self.bundle
    }

    /// Task-step after the pending robot action, where the human moves next.
    pub fn board(&self) -> usize {
        match self.pending {
            Some(a) => self.mid(a),
            None => self.step,
        }
    }

    /// Human actions (alphabet ids) the client may submit now.
    pub fn legal(&self) -> Vec<usize> {
        if self.state == SessionState::AwaitingHuman {
            self.bundle.domain.valid_human_actions(self.board())
        } else {
            Vec::new()
        }
    }

    /// Applies the human's reply, updates the belief and lets the robot act again.
    pub fn submit(&mut self, human: usize) -> Result<()> {
        let domain = &self.bundle.domain;
        let robot = match (self.state, self.pending) {
            (SessionState::AwaitingHuman, Some(a)) => a,
            (SessionState::Terminal, _) => return Err(Error::SessionComplete(self.id.clone())),
            _ => return Err(Error::InvalidArgument(format!("session {} is not waiting for the human", self.id))),
        };
        let mid = self.mid(robot);
        let legal = domain.valid_human_actions(mid);
        let next = domain.effect(mid, human).filter(|_| legal.contains(&human));
        let Some(next) = next else {
            let action = if domain.alphabet.contains(human) { domain.alphabet.label(human).to_string() } else { human.to_string() };
            return Err(Error::IllegalAction {
                action,
                step: domain.task_steps[mid].clone(),
                legal: legal.iter().map(|&h| domain.alphabet.label(h).to_string()).collect(),
            });
        };
        let observation = self.observation_index(human);
        self.state = SessionState::AwaitingRobot;
        self.record(robot, Outcome { next, observation })?;
        self.advance()
    }

    fn mid(&self, robot: usize) -> usize {
        let id = self.bundle.domain.alphabet.robot_actions()[robot];
        self.bundle.domain.effect(self.step, id).expect("planned robot actions are available")
    }

    fn observation_index(&self, human: usize) -> usize {
        let alphabet = &self.bundle.domain.alphabet;
        debug_assert_eq!(alphabet.actor(human), Actor::Human);
        alphabet.human_actions().iter().position(|&h| h == human).expect("human action")
    }

    fn record(&mut self, robot: usize, outcome: Outcome) -> Result<()> {
        let b = &self.bundle;
        let (belief, reset) = filter_belief(&b.momdp, &b.kernel, &self.prior, &self.belief, self.step, robot, outcome)?;
        self.turns.push(Turn {
            step: self.step,
            belief: Some(std::mem::replace(&mut self.belief, belief)),
            action: robot,
            observation: outcome.observation,
            next: outcome.next,
            belief_reset: reset,
        });
        self.step = outcome.next;
        self.pending = None;
        Ok(())
    }

    /// Robot turns until the human has a move or the task ends. When the robot's action
    /// leaves the human nothing to do, the turn closes with the pass observation, exactly
    /// as [`TaskWorld`](crate::pipeline::TaskWorld) does.
    fn advance(&mut self) -> Result<()> {
        let bundle = Arc::clone(&self.bundle);
        let (domain, momdp) = (&bundle.domain, &bundle.momdp);
        for _ in 0..=momdp.n_steps() {
            if momdp.terminal[self.step] {
                self.state = SessionState::Terminal;
                return Ok(());
            }
            let robot = bundle.policy.best_action(self.step, &self.belief);
            let mid = self.mid(robot);
            if domain.valid_human_actions(mid).is_empty() {
                let observation = self.observation_index(domain.pass_observation());
                self.record(robot, Outcome { next: mid, observation })?;
                continue;
            }
            self.pending = Some(robot);
            self.state = SessionState::AwaitingHuman;
            return Ok(());
        }
        Err(Error::Model(format!(
            "the robot cannot hand the turn back to the human from {}",
            domain.task_steps[self.step]
        )))
    }
}
