//! Point-based value iteration over sampled reachable beliefs.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::{propagate, Kernel, Momdp};
use crate::error::{Error, Result};
use crate::par;
use crate::synth::sample_index;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PbviConfig {
    /// Reachable belief points sampled from the initial state, the initial belief and the
    /// corners at the initial step included.
    pub n_points: usize,
    pub residual_tol: f64,
    pub max_sweeps: usize,
    pub seed: u64,
    /// Steps per forward-sampling trajectory before restarting from the initial state.
    pub horizon: usize,
}

impl Default for PbviConfig {
    fn default() -> Self {
        Self {
            n_points: 1000,
            residual_tol: 1e-4,
            max_sweeps: 500,
            seed: 0,
            horizon: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaVector {
    pub action: usize,
    pub values: Vec<f64>,
}

impl AlphaVector {
    pub fn dot(&self, b: &[f64]) -> f64 {
        self.values.iter().zip(b).map(|(a, p)| a * p).sum()
    }
}

/// Per-step α-vector sets. Terminal steps hold a single zero vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyValue {
    pub n_types: usize,
    pub vectors: Vec<Vec<AlphaVector>>,
    pub sweeps: usize,
    pub residual: f64,
    pub n_points: usize,
}

const TIE_EPS: f64 = 1e-12;

fn best_vector<'a>(set: &'a [AlphaVector], b: &[f64]) -> (&'a AlphaVector, f64) {
    let mut best = &set[0];
    let mut best_v = best.dot(b);
    for alpha in &set[1..] {
        let v = alpha.dot(b);
        let tol = TIE_EPS * best_v.abs().max(1.0);
        if v > best_v + tol || (v >= best_v - tol && alpha.action < best.action) {
            best = alpha;
            best_v = v;
        }
    }
    (best, best_v)
}

impl PolicyValue {
    pub fn value(&self, step: usize, b: &[f64]) -> f64 {
        best_vector(&self.vectors[step], b).1
    }

    /// Action of the maximizing α-vector; ties go to the lowest action index.
    pub fn best_action(&self, step: usize, b: &[f64]) -> usize {
        best_vector(&self.vectors[step], b).0.action
    }

    pub fn validate(&self, n_steps: usize) -> Result<()> {
        if self.vectors.len() != n_steps {
            return Err(Error::Model(format!("policy covers {} steps, model has {n_steps}", self.vectors.len())));
        }
        for (x, set) in self.vectors.iter().enumerate() {
            if set.is_empty() || set.iter().any(|a| a.values.len() != self.n_types) {
                return Err(Error::Model(format!("step {x} has an empty or malformed α-vector set")));
            }
        }
        Ok(())
    }
}

pub fn best_action(pv: &PolicyValue, step: usize, b: &[f64]) -> usize {
    pv.best_action(step, b)
}

fn corner(n: usize, y: usize) -> Vec<f64> {
    let mut b = vec![0.0; n];
    b[y] = 1.0;
    b
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() < 1e-9
}

struct Solver<'a> {
    m: &'a Momdp,
    kernel: Kernel,
    /// Belief points per step.
    points: Vec<Vec<Vec<f64>>>,
    vectors: Vec<Vec<AlphaVector>>,
    horizon: usize,
}

impl<'a> Solver<'a> {
    fn new(m: &'a Momdp, horizon: usize) -> Self {
        let (nx, ny) = (m.n_steps(), m.n_types());
        let r_min = m.rewards.iter().copied().fold(0.0f64, f64::min);
        let blind = r_min / (1.0 - m.discount);
        let vectors = (0..nx)
            .map(|x| {
                let action = if m.terminal[x] { 0 } else { m.available[x][0] };
                let v = if m.terminal[x] { 0.0 } else { blind };
                vec![AlphaVector {
                    action,
                    values: vec![v; ny],
                }]
            })
            .collect();
        let mut points = vec![Vec::new(); nx];
        for (x, set) in points.iter_mut().enumerate() {
            if !m.terminal[x] {
                set.extend((0..ny).map(|y| corner(ny, y)));
            }
        }
        Self {
            m,
            kernel: m.kernel(),
            points,
            vectors,
            horizon,
        }
    }

    fn add_point(&mut self, x: usize, b: Vec<f64>) -> bool {
        if self.m.terminal[x] || self.points[x].iter().any(|p| close(p, &b)) {
            return false;
        }
        self.points[x].push(b);
        true
    }

    /// Forward-simulate from the initial state, adding new beliefs until `budget` are added.
    fn expand(&mut self, budget: usize, greedy_share: f64, rng: &mut impl Rng) -> usize {
        let m = self.m;
        let mut added = 0;
        let mut stale = 0;
        let give_up = 20 * budget.max(50);
        let (mut x, mut b) = (m.initial_step, m.initial_belief.clone());
        let mut depth = 0;
        while added < budget && stale < give_up {
            if m.terminal[x] || depth >= self.horizon {
                x = m.initial_step;
                b = m.initial_belief.clone();
                depth = 0;
            }
            let actions = &m.available[x];
            let a = if rng.gen::<f64>() < greedy_share {
                best_vector(&self.vectors[x], &b).0.action
            } else {
                actions[rng.gen_range(0..actions.len())]
            };
            let y = sample_index(&b, rng);
            let branches = self.kernel.branches(x, a);
            let weights: Vec<f64> = branches
                .iter()
                .map(|br| br.joint[y * m.n_types()..(y + 1) * m.n_types()].iter().sum())
                .collect();
            let br = &branches[sample_index(&weights, rng)];
            let (mut next_b, total) = propagate(br, &b);
            next_b.iter_mut().for_each(|p| *p /= total);
            x = br.next;
            b = next_b;
            depth += 1;
            if self.add_point(x, b.clone()) {
                added += 1;
                stale = 0;
            } else {
                stale += 1;
            }
        }
        added
    }

    /// One point-based backup at `(x, b)`.
    fn backup(&self, x: usize, b: &[f64]) -> AlphaVector {
        let m = self.m;
        let ny = m.n_types();
        let mut best: Option<(AlphaVector, f64)> = None;
        for &a in &m.available[x] {
            let mut values: Vec<f64> = (0..ny).map(|y| m.reward(x, y, a)).collect();
            for br in self.kernel.branches(x, a) {
                let mut chosen: Option<(Vec<f64>, f64)> = None;
                for alpha in &self.vectors[br.next] {
                    let g: Vec<f64> = (0..ny)
                        .map(|y| (0..ny).map(|y2| br.joint[y * ny + y2] * alpha.values[y2]).sum())
                        .collect();
                    let score: f64 = g.iter().zip(b).map(|(u, v)| u * v).sum();
                    if chosen.as_ref().map_or(true, |c| score > c.1) {
                        chosen = Some((g, score));
                    }
                }
                let (g, _) = chosen.expect("every step has at least one α-vector");
                values.iter_mut().zip(&g).for_each(|(v, gi)| *v += m.discount * gi);
            }
            let candidate = AlphaVector { action: a, values };
            let score = candidate.dot(b);
            let better = match &best {
                None => true,
                Some((_, s)) => score > s + TIE_EPS * s.abs().max(1.0),
            };
            if better {
                best = Some((candidate, score));
            }
        }
        best.expect("non-terminal steps have an action").0
    }

    /// Gauss-Seidel sweep over all points. Returns the largest value increase.
    fn sweep(&mut self) -> f64 {
        let mut residual = 0.0f64;
        for x in (0..self.m.n_steps()).rev() {
            if self.m.terminal[x] {
                continue;
            }
            for i in 0..self.points[x].len() {
                let b = self.points[x][i].clone();
                let before = best_vector(&self.vectors[x], &b).1;
                let alpha = self.backup(x, &b);
                let after = alpha.dot(&b);
                if after > before + TIE_EPS * before.abs().max(1.0) {
                    residual = residual.max(after - before);
                    self.vectors[x].push(alpha);
                }
            }
            self.prune(x);
        }
        residual
    }

    /// Keep only vectors that are maximal at some point of the step.
    fn prune(&mut self, x: usize) {
        let set = &self.vectors[x];
        if set.len() <= 1 {
            return;
        }
        let mut keep = vec![false; set.len()];
        for b in &self.points[x] {
            let mut best = 0;
            let mut best_v = set[0].dot(b);
            for (i, alpha) in set.iter().enumerate().skip(1) {
                let v = alpha.dot(b);
                if v > best_v {
                    best = i;
                    best_v = v;
                }
            }
            keep[best] = true;
        }
        let mut i = 0;
        self.vectors[x].retain(|_| {
            i += 1;
            keep[i - 1]
        });
    }

    fn iterate(&mut self, config: &PbviConfig, sweeps: &mut usize) -> f64 {
        let mut residual = f64::INFINITY;
        while *sweeps < config.max_sweeps {
            residual = self.sweep();
            *sweeps += 1;
            if residual <= config.residual_tol {
                break;
            }
        }
        residual
    }
}

/// Point-based α-vector backups over the initial belief, corner beliefs at every step,
/// and beliefs reached by forward simulation.
pub fn solve_point_based(m: &Momdp, config: &PbviConfig) -> Result<PolicyValue> {
    m.validate()?;
    let ny = m.n_types();
    if config.n_points < ny + 1 {
        return Err(Error::InvalidArgument(format!("n_points must be at least {}", ny + 1)));
    }
    let mut solver = Solver::new(m, config.horizon.max(1));
    let x0 = m.initial_step;
    let mut sampled = 0;
    if !m.terminal[x0] {
        solver.add_point(x0, m.initial_belief.clone());
        sampled = solver.points[x0].len();
    }
    let mut rng = par::rng(config.seed);
    let remaining = config.n_points.saturating_sub(sampled);
    let first = remaining / 2;
    sampled += solver.expand(first, 0.0, &mut rng);
    let mut sweeps = 0;
    let mut residual = solver.iterate(config, &mut sweeps);
    sampled += solver.expand(config.n_points.saturating_sub(sampled), 0.5, &mut rng);
    if sweeps < config.max_sweeps {
        residual = solver.iterate(config, &mut sweeps);
    }
    log::debug!("pbvi: {sampled} sampled points, {sweeps} sweeps, residual {residual:.2e}");
    let total_points = solver.points.iter().map(Vec::len).sum();
    Ok(PolicyValue {
        n_types: ny,
        vectors: solver.vectors,
        sweeps,
        residual,
        n_points: total_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::momdp::{ObservationModel, TypeDynamics};

    fn pv(vectors: Vec<AlphaVector>) -> PolicyValue {
        PolicyValue {
            n_types: 2,
            vectors: vec![vectors],
            sweeps: 0,
            residual: 0.0,
            n_points: 0,
        }
    }

    #[test]
    fn single_vector_gives_its_action() {
        let p = pv(vec![AlphaVector { action: 3, values: vec![1.0, -1.0] }]);
        assert_eq!(best_action(&p, 0, &[0.2, 0.8]), 3);
    }

    #[test]
    fn crossing_vectors_switch_at_the_midpoint() {
        let p = pv(vec![
            AlphaVector { action: 1, values: vec![1.0, 0.0] },
            AlphaVector { action: 0, values: vec![0.0, 1.0] },
        ]);
        assert_eq!(p.best_action(0, &[0.6, 0.4]), 1);
        assert_eq!(p.best_action(0, &[0.4, 0.6]), 0);
        // exact tie: lowest action index
        assert_eq!(p.best_action(0, &[0.5, 0.5]), 0);
    }

    /// Two steps, the second terminal; the type decides which action pays.
    fn guess() -> Momdp {
        Momdp {
            steps: vec!["s".into(), "end".into()],
            types: vec!["a".into(), "b".into()],
            actions: vec!["left".into(), "right".into(), "look".into()],
            observations: vec!["l".into(), "r".into()],
            available: vec![vec![0, 1, 2], vec![]],
            // look returns to s; guessing ends the episode
            transitions: (0..2 * 2 * 3)
                .map(|i| if i / 6 == 0 && i % 3 == 2 { vec![(0, 1.0)] } else { vec![(1, 1.0)] })
                .collect(),
            type_dynamics: TypeDynamics::Static,
            observation_model: ObservationModel::Stationary { probs: vec![vec![0.85, 0.15], vec![0.15, 0.85]] },
            rewards: vec![10.0, -10.0, -1.0, -10.0, 10.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            discount: 0.95,
            terminal: vec![false, true],
            initial_step: 0,
            initial_belief: vec![0.5, 0.5],
        }
    }

    #[test]
    fn backups_never_lower_values() {
        let m = guess();
        let mut solver = Solver::new(&m, 20);
        solver.add_point(0, m.initial_belief.clone());
        let mut rng = par::rng(1);
        solver.expand(40, 0.0, &mut rng);
        let mut previous: Vec<f64> = solver.points[0].iter().map(|b| best_vector(&solver.vectors[0], b).1).collect();
        for _ in 0..60 {
            solver.sweep();
            let now: Vec<f64> = solver.points[0].iter().map(|b| best_vector(&solver.vectors[0], b).1).collect();
            for (a, b) in previous.iter().zip(&now) {
                assert!(b >= a, "{b} < {a}");
            }
            previous = now;
        }
    }

    #[test]
    fn uncertain_belief_gathers_information() {
        let m = guess();
        let pv = solve_point_based(&m, &PbviConfig { n_points: 60, ..PbviConfig::default() }).unwrap();
        assert_eq!(pv.best_action(0, &[0.5, 0.5]), 2);
        assert_eq!(pv.best_action(0, &[1.0, 0.0]), 0);
        assert_eq!(pv.best_action(0, &[0.0, 1.0]), 1);
        pv.validate(2).unwrap();
    }

    #[test]
    fn too_few_points_rejected() {
        let m = guess();
        assert!(solve_point_based(&m, &PbviConfig { n_points: 2, ..PbviConfig::default() }).is_err());
    }
}
