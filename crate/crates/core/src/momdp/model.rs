//! The factored model: observable task-step `x`, hidden type `y`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-sum tolerance for every distribution in the model.
pub const DISTRIBUTION_TOLERANCE: f64 = 1e-9;

/// How the hidden type evolves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TypeDynamics {
    /// `T_y` is the identity: the type never changes.
    Static,
    /// `T_y(y' | x, y, a, x')` listed sparsely; missing rows mean "unchanged".
    Table { rows: Vec<TypeRow> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeRow {
    pub step: usize,
    #[serde(rename = "type")]
    pub type_index: usize,
    pub action: usize,
    pub next: usize,
    pub probs: Vec<f64>,
}

/// The observation channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservationModel {
    /// `O(o | y')`, the same at every step and action.
    Stationary { probs: Vec<Vec<f64>> },
    /// `O(o | x', y', a)`, rows indexed by `(x' · |Y| + y') · |A| + a`, sparse `(o, p)`.
    Standard { rows: Vec<Vec<(usize, f64)>> },
    /// `O(o | x, a, x', y')`, for channels where `x'` alone does not fix the observation law
    /// (several human replies can lead to the same next step).
    Conditioned { rows: Vec<ConditionedRow> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionedRow {
    pub step: usize,
    pub action: usize,
    pub next: usize,
    #[serde(rename = "type")]
    pub type_index: usize,
    pub probs: Vec<(usize, f64)>,
}

/// A mixed-observability MDP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Momdp {
    pub steps: Vec<String>,
    pub types: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
    /// Robot actions allowed at each step.
    pub available: Vec<Vec<usize>>,
    /// `T_x(x' | x, y, a)`, indexed by `(x · |Y| + y) · |A| + a`, sparse `(x', p)`.
    pub transitions: Vec<Vec<(usize, f64)>>,
    pub type_dynamics: TypeDynamics,
    pub observation_model: ObservationModel,
    /// `R(x, y, a)`, same indexing as `transitions`.
    pub rewards: Vec<f64>,
    pub discount: f64,
    /// Steps where the episode ends; their value is zero.
    pub terminal: Vec<bool>,
    pub initial_step: usize,
    pub initial_belief: Vec<f64>,
}

/// One possible outcome `(x', o)` of taking `a` at `x`, with
/// `joint[y][y'] = T_x(x'|x,y,a) · T_y(y'|x,y,a,x') · O(o|…,x',y')`.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub next: usize,
    pub observation: usize,
    pub joint: Vec<f64>,
}

/// Outcome branches for every `(x, a)`, precomputed for filtering and backups.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    n_types: usize,
    n_actions: usize,
    branches: Vec<Vec<Branch>>,
}

impl Kernel {
    pub fn branches(&self, step: usize, action: usize) -> &[Branch] {
        &self.branches[step * self.n_actions + action]
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    pub fn find(&self, step: usize, action: usize, next: usize, observation: usize) -> Option<&Branch> {
        self.branches(step, action)
            .iter()
            .find(|b| b.next == next && b.observation == observation)
    }
}

fn check_row(what: &str, total: f64, errors: &mut Vec<String>) {
    if (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        errors.push(format!("{what} sums to {total}"));
    }
}

impl Momdp {
    pub fn n_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn n_types(&self) -> usize {
        self.types.len()
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn n_observations(&self) -> usize {
        self.observations.len()
    }

    /// `|X| · |Y|`.
    pub fn n_states(&self) -> usize {
        self.n_steps() * self.n_types()
    }

    pub fn index(&self, step: usize, type_index: usize, action: usize) -> usize {
        (step * self.n_types() + type_index) * self.n_actions() + action
    }

    pub fn reward(&self, step: usize, type_index: usize, action: usize) -> f64 {
        self.rewards[self.index(step, type_index, action)]
    }

    pub fn transition(&self, step: usize, type_index: usize, action: usize) -> &[(usize, f64)] {
        &self.transitions[self.index(step, type_index, action)]
    }

    /// `T_y(· | x, y, a, x')`.
    pub fn type_transition(&self, step: usize, type_index: usize, action: usize, next: usize) -> Vec<f64> {
        let mut row = vec![0.0; self.n_types()];
        if let TypeDynamics::Table { rows } = &self.type_dynamics {
            if let Some(r) = rows
                .iter()
                .find(|r| r.step == step && r.type_index == type_index && r.action == action && r.next == next)
            {
                return r.probs.clone();
            }
        }
        row[type_index] = 1.0;
        row
    }

    /// `O(· | x, a, x', y')` as sparse `(o, p)`.
    pub fn observation_probs(&self, step: usize, action: usize, next: usize, type_index: usize) -> Vec<(usize, f64)> {
        match &self.observation_model {
            ObservationModel::Stationary { probs } => probs[type_index]
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(o, &p)| (o, p))
                .collect(),
            ObservationModel::Standard { rows } => rows[self.index(next, type_index, action)].clone(),
            ObservationModel::Conditioned { rows } => rows
                .iter()
                .find(|r| r.step == step && r.action == action && r.next == next && r.type_index == type_index)
                .map(|r| r.probs.clone())
                .unwrap_or_default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (nx, ny, na, no) = (self.n_steps(), self.n_types(), self.n_actions(), self.n_observations());
        let mut errors = Vec::new();
        if nx == 0 || ny == 0 || na == 0 || no == 0 {
            errors.push("steps, types, actions and observations must be non-empty".to_string());
            return Err(Error::Model(errors.join("; ")));
        }
        let table = nx * ny * na;
        if self.transitions.len() != table || self.rewards.len() != table {
            errors.push(format!("transition and reward tables need {table} rows"));
        }
        if self.available.len() != nx || self.terminal.len() != nx {
            errors.push(format!("availability and terminal flags need {nx} entries"));
        }
        if !(0.0..1.0).contains(&self.discount) {
            errors.push(format!("discount {} must lie in [0, 1)", self.discount));
        }
        if self.initial_step >= nx {
            errors.push(format!("initial step {} out of range", self.initial_step));
        }
        if self.initial_belief.len() != ny || self.initial_belief.iter().any(|&p| p < 0.0) {
            errors.push("initial belief must be a distribution over types".to_string());
        } else {
            check_row("initial belief", self.initial_belief.iter().sum(), &mut errors);
        }
        if !errors.is_empty() {
            return Err(Error::Model(errors.join("; ")));
        }
        if let Some(r) = self.rewards.iter().position(|r| !r.is_finite()) {
            errors.push(format!("reward entry {r} is not finite"));
        }
        for x in 0..nx {
            if !self.terminal[x] && self.available[x].is_empty() {
                errors.push(format!("step {} has no robot action", self.steps[x]));
            }
            if self.available[x].iter().any(|&a| a >= na) {
                errors.push(format!("step {} lists an unknown action", self.steps[x]));
            }
            for y in 0..ny {
                for &a in &self.available[x] {
                    let row = self.transition(x, y, a);
                    if row.iter().any(|&(n, p)| n >= nx || p < 0.0) {
                        errors.push(format!("T_x({}, {}, {}) has an invalid entry", self.steps[x], self.types[y], self.actions[a]));
                        continue;
                    }
                    check_row(
                        &format!("T_x({}, {}, {})", self.steps[x], self.types[y], self.actions[a]),
                        row.iter().map(|e| e.1).sum(),
                        &mut errors,
                    );
                    for &(next, p) in row {
                        if p == 0.0 {
                            continue;
                        }
                        let ty = self.type_transition(x, y, a, next);
                        if ty.len() != ny || ty.iter().any(|&q| q < 0.0) {
                            errors.push(format!("T_y row at {} has the wrong shape", self.steps[x]));
                            continue;
                        }
                        check_row(&format!("T_y({}, {}, {}, {})", self.steps[x], self.types[y], self.actions[a], self.steps[next]), ty.iter().sum(), &mut errors);
                        for (y2, &q) in ty.iter().enumerate() {
                            if q == 0.0 {
                                continue;
                            }
                            let obs = self.observation_probs(x, a, next, y2);
                            if obs.iter().any(|&(o, p)| o >= no || p < 0.0) {
                                errors.push(format!("O row at {} has an invalid entry", self.steps[next]));
                                continue;
                            }
                            check_row(
                                &format!("O({}, {}, {}, {})", self.steps[x], self.actions[a], self.steps[next], self.types[y2]),
                                obs.iter().map(|e| e.1).sum(),
                                &mut errors,
                            );
                        }
                    }
                }
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Model(errors.join("; ")))
        }
    }

    /// Precompute the outcome branches of every available `(x, a)`.
    pub fn kernel(&self) -> Kernel {
        let (nx, ny, na) = (self.n_steps(), self.n_types(), self.n_actions());
        let mut branches = vec![Vec::new(); nx * na];
        for x in 0..nx {
            if self.terminal[x] {
                continue;
            }
            for &a in &self.available[x] {
                let mut acc: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
                for y in 0..ny {
                    for &(next, p) in self.transition(x, y, a) {
                        if p == 0.0 {
                            continue;
                        }
                        for (y2, q) in self.type_transition(x, y, a, next).into_iter().enumerate() {
                            if q == 0.0 {
                                continue;
                            }
                            for (o, r) in self.observation_probs(x, a, next, y2) {
                                if r == 0.0 {
                                    continue;
                                }
                                let joint = acc.entry((next, o)).or_insert_with(|| vec![0.0; ny * ny]);
                                joint[y * ny + y2] += p * q * r;
                            }
                        }
                    }
                }
                branches[x * na + a] = acc
                    .into_iter()
                    .map(|((next, observation), joint)| Branch {
                        next,
                        observation,
                        joint,
                    })
                    .collect();
            }
        }
        Kernel {
            n_types: ny,
            n_actions: na,
            branches,
        }
    }

    /// The fixed-type MDP: transitions of `T_x` with the type pinned to `type_index`.
    /// Unavailable actions keep an inert self-loop row and are masked out.
    pub fn type_mdp(&self, type_index: usize) -> crate::irl::Mdp {
        let (nx, na) = (self.n_steps(), self.n_actions());
        let mut transitions = Vec::with_capacity(nx * na);
        for x in 0..nx {
            for a in 0..na {
                if self.available[x].contains(&a) && !self.terminal[x] {
                    transitions.push(self.transition(x, type_index, a).to_vec());
                } else {
                    transitions.push(vec![(x, 1.0)]);
                }
            }
        }
        let mut start = vec![0.0; nx];
        start[self.initial_step] = 1.0;
        crate::irl::Mdp {
            n_states: nx,
            n_actions: na,
            transitions,
            discount: self.discount,
            terminal: self.terminal.clone(),
            start,
            available: Some(self.available.clone()),
        }
    }

    /// Reward table `R(x, y, ·)` of the fixed-type MDP; zero at terminal steps.
    pub fn type_reward(&self, type_index: usize) -> crate::irl::Reward {
        let (nx, na) = (self.n_steps(), self.n_actions());
        crate::irl::Reward::StateAction(
            (0..nx)
                .flat_map(|x| (0..na).map(move |a| (x, a)))
                .map(|(x, a)| if self.terminal[x] { 0.0 } else { self.reward(x, type_index, a) })
                .collect(),
        )
    }
}

/// Probability vector over types.
pub type Belief = Vec<f64>;

/// Check that `b` is a distribution over `n` types.
pub fn validate_belief(b: &[f64], n: usize) -> Result<()> {
    if b.len() != n {
        return Err(Error::InvalidArgument(format!("belief has {} entries, expected {n}", b.len())));
    }
    let total: f64 = b.iter().sum();
    if b.iter().any(|&p| p < 0.0 || !p.is_finite()) || (total - 1.0).abs() > DISTRIBUTION_TOLERANCE {
        return Err(Error::InvalidArgument(format!("belief {b:?} is not a distribution")));
    }
    Ok(())
}

/// Propagate `b` through a branch: `b'(y') ∝ Σ_y joint[y][y'] b(y)`. Returns the normalizer too.
pub fn propagate(branch: &Branch, b: &[f64]) -> (Vec<f64>, f64) {
    let n = b.len();
    let mut out = vec![0.0; n];
    for (y, &by) in b.iter().enumerate() {
        if by == 0.0 {
            continue;
        }
        for (y2, o) in out.iter_mut().enumerate() {
            *o += branch.joint[y * n + y2] * by;
        }
    }
    let total: f64 = out.iter().sum();
    (out, total)
}

/// Bayes filter over the hidden type after observing `(x, a) → (x', o)`.
pub fn belief_update(m: &Momdp, b: &[f64], step: usize, action: usize, next: usize, observation: usize) -> Result<Belief> {
    validate_belief(b, m.n_types())?;
    let ny = m.n_types();
    let mut out = vec![0.0; ny];
    for (y, &by) in b.iter().enumerate() {
        if by == 0.0 {
            continue;
        }
        let tx = m
            .transition(step, y, action)
            .iter()
            .filter(|e| e.0 == next)
            .map(|e| e.1)
            .sum::<f64>();
        if tx == 0.0 {
            continue;
        }
        for (y2, q) in m.type_transition(step, y, action, next).into_iter().enumerate() {
            if q == 0.0 {
                continue;
            }
            let o = m
                .observation_probs(step, action, next, y2)
                .iter()
                .filter(|e| e.0 == observation)
                .map(|e| e.1)
                .sum::<f64>();
            out[y2] += o * tx * q * by;
        }
    }
    normalize(out, step, observation)
}

/// Same as [`belief_update`] using a precomputed kernel.
pub fn belief_update_with(kernel: &Kernel, b: &[f64], step: usize, action: usize, next: usize, observation: usize) -> Result<Belief> {
    let branch = kernel.find(step, action, next, observation).ok_or(Error::ImpossibleObservation {
        step,
        observation,
    })?;
    normalize(propagate(branch, b).0, step, observation)
}

fn normalize(mut out: Vec<f64>, step: usize, observation: usize) -> Result<Belief> {
    let total: f64 = out.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ImpossibleObservation { step, observation });
    }
    out.iter_mut().for_each(|p| *p /= total);
    Ok(out)
}
