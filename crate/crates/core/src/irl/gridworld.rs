//! Small deterministic gridworlds for exercising IRL.

use super::mdp::{Mdp, Reward};

pub const MOVES: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

/// `rows × cols` grid with four moves; bumping a wall stays put. The goal cell absorbs.
#[derive(Debug, Clone, PartialEq)]
pub struct Gridworld {
    pub rows: usize,
    pub cols: usize,
    pub goal: usize,
}

impl Gridworld {
    pub fn new(rows: usize, cols: usize, goal: usize) -> Self {
        assert!(goal < rows * cols);
        Self { rows, cols, goal }
    }

    pub fn n_states(&self) -> usize {
        self.rows * self.cols
    }

    pub fn step(&self, s: usize, a: usize) -> usize {
        let (r, c) = ((s / self.cols) as i64, (s % self.cols) as i64);
        let (dr, dc) = MOVES[a];
        let (nr, nc) = (r + dr, c + dc);
        if nr < 0 || nc < 0 || nr >= self.rows as i64 || nc >= self.cols as i64 {
            s
        } else {
            nr as usize * self.cols + nc as usize
        }
    }

    /// The MDP with a uniform start distribution.
    pub fn mdp(&self, discount: f64) -> Mdp {
        let n = self.n_states();
        let transitions = (0..n)
            .flat_map(|s| (0..4).map(move |a| (s, a)))
            .map(|(s, a)| vec![(if s == self.goal { s } else { self.step(s, a) }, 1.0)])
            .collect();
        Mdp {
            n_states: n,
            n_actions: 4,
            transitions,
            discount,
            terminal: vec![false; n],
            start: vec![1.0 / n as f64; n],
            available: None,
        }
    }

    /// Unit reward at the goal, nothing elsewhere.
    pub fn goal_reward(&self) -> Reward {
        Reward::State((0..self.n_states()).map(|s| if s == self.goal { 1.0 } else { 0.0 }).collect())
    }

    /// Follow `policy` from `start`; the cell it ends in after at most `n_states` moves.
    pub fn rollout(&self, policy: &[usize], start: usize) -> usize {
        let mut s = start;
        for _ in 0..self.n_states() {
            if s == self.goal {
                break;
            }
            s = self.step(s, policy[s]);
        }
        s
    }
}
