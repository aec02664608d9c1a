//! A box-positioning task where the robot must learn which side the worker refinishes first.
//!
//! Task-steps are box positions: horizontal `h`, vertical `v` and tilt `t`, ten values each.
//! The box starts centred at `h = 4`. Rotating is possible only at a side (`h ≤ 1` or
//! `h ≥ 7`); nine rotations finish the task. Each type is paid for rotations on its own
//! side and charged for rotations on the other. Observations are hand positions on a grid.

use serde::{Deserialize, Serialize};

use super::gaussian::{build_gaussian_obs, GaussianObsModel};
use crate::error::Result;
use crate::momdp::{Momdp, ObservationModel, TypeDynamics};

pub const SIZE: usize = 10;
pub const ACTIONS: [&str; 6] = ["left", "right", "up", "down", "rotate", "wait"];
pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;
pub const UP: usize = 2;
pub const DOWN: usize = 3;
pub const ROTATE: usize = 4;
pub const WAIT: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandFinishing {
    pub observations: GaussianObsModel,
    pub start: [usize; 3],
    pub left_side: usize,
    pub right_side: usize,
    pub move_cost: f64,
    pub wait_cost: f64,
    pub rotate_reward: f64,
    pub discount: f64,
}

impl Default for HandFinishing {
    fn default() -> Self {
        Self {
            observations: GaussianObsModel::mirrored(SIZE, SIZE, 3.5, 5.0, 1.5),
            start: [4, 5, 0],
            left_side: 1,
            right_side: 7,
            move_cost: 0.1,
            wait_cost: 0.05,
            rotate_reward: 1.0,
            discount: 0.95,
        }
    }
}

pub fn step_index(h: usize, v: usize, t: usize) -> usize {
    (t * SIZE + v) * SIZE + h
}

pub fn step_coords(step: usize) -> (usize, usize, usize) {
    (step % SIZE, (step / SIZE) % SIZE, step / (SIZE * SIZE))
}

impl HandFinishing {
    fn side(&self, h: usize) -> Option<usize> {
        if h <= self.left_side {
            Some(0)
        } else if h >= self.right_side {
            Some(1)
        } else {
            None
        }
    }

    /// Next step after `action`, or `None` if the action is not allowed at `step`.
    pub fn effect(&self, step: usize, action: usize) -> Option<usize> {
        let (h, v, t) = step_coords(step);
        match action {
            LEFT if h > 0 && t == 0 => Some(step_index(h - 1, v, t)),
            RIGHT if h + 1 < SIZE && t == 0 => Some(step_index(h + 1, v, t)),
            UP if v + 1 < SIZE => Some(step_index(h, v + 1, t)),
            DOWN if v > 0 => Some(step_index(h, v - 1, t)),
            ROTATE if self.side(h).is_some() && t + 1 < SIZE => Some(step_index(h, v, t + 1)),
            WAIT => Some(step),
            _ => None,
        }
    }

    pub fn reward(&self, step: usize, type_index: usize, action: usize) -> f64 {
        let (h, _, _) = step_coords(step);
        match action {
            ROTATE => {
                if self.side(h) == Some(type_index) {
                    self.rotate_reward
                } else {
                    -self.rotate_reward
                }
            }
            WAIT => -self.wait_cost,
            _ => -self.move_cost,
        }
    }

    pub fn momdp(&self) -> Result<Momdp> {
        let obs = build_gaussian_obs(&self.observations)?;
        let n_steps = SIZE * SIZE * SIZE;
        let ny = obs.len();
        let na = ACTIONS.len();
        let terminal: Vec<bool> = (0..n_steps).map(|s| step_coords(s).2 == SIZE - 1).collect();
        let available: Vec<Vec<usize>> = (0..n_steps)
            .map(|s| {
                if terminal[s] {
                    Vec::new()
                } else {
                    (0..na).filter(|&a| self.effect(s, a).is_some()).collect()
                }
            })
            .collect();
        let mut transitions = Vec::with_capacity(n_steps * ny * na);
        let mut rewards = Vec::with_capacity(n_steps * ny * na);
        for s in 0..n_steps {
            for y in 0..ny {
                for a in 0..na {
                    match self.effect(s, a) {
                        Some(next) if !terminal[s] => {
                            transitions.push(vec![(next, 1.0)]);
                            rewards.push(self.reward(s, y, a));
                        }
                        _ => {
                            transitions.push(Vec::new());
                            rewards.push(0.0);
                        }
                    }
                }
            }
        }
        let [h, v, t] = self.start;
        Ok(Momdp {
            steps: (0..n_steps)
                .map(|s| {
                    let (h, v, t) = step_coords(s);
                    format!("h{h}v{v}t{t}")
                })
                .collect(),
            types: vec!["left-first".into(), "right-first".into()],
            actions: ACTIONS.iter().map(|s| s.to_string()).collect(),
            observations: (0..self.observations.n_cells())
                .map(|i| format!("cell{}-{}", i % self.observations.columns, i / self.observations.columns))
                .collect(),
            available,
            transitions,
            type_dynamics: TypeDynamics::Static,
            observation_model: ObservationModel::Stationary { probs: obs },
            rewards,
            discount: self.discount,
            terminal,
            initial_step: step_index(h, v, t),
            initial_belief: vec![0.5; 2],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_thousand_factored_states() {
        let m = HandFinishing::default().momdp().unwrap();
        assert_eq!(m.n_states(), 2000);
        m.validate().unwrap();
    }

    #[test]
    fn sides_are_symmetric_about_the_start() {
        let d = HandFinishing::default();
        assert_eq!(d.start[0] - d.left_side, d.right_side - d.start[0]);
        assert_eq!(d.effect(step_index(4, 5, 0), ROTATE), None);
        assert!(d.effect(step_index(1, 5, 0), ROTATE).is_some());
        // no sideways moves once rotation has begun
        assert_eq!(d.effect(step_index(1, 5, 1), RIGHT), None);
    }
}
