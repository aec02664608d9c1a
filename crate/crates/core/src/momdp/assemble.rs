//! Building a MOMDP from a task domain, per-type human responses and per-type rewards.

use serde::{Deserialize, Serialize};

use super::model::{ConditionedRow, Momdp, ObservationModel, TypeDynamics};
use crate::clustering::ClusterModel;
use crate::domain::{Actor, TaskDomain};
use crate::error::{Error, Result};
use crate::irl::{FeatureMap, Mdp};

/// Where each type's human replies come from.
#[derive(Debug, Clone, Copy)]
pub enum ResponseSource<'a> {
    /// `P(h | a_r) ∝ θ_z(a_r → h)` over the human actions valid after the robot's move.
    Learned(&'a ClusterModel),
    /// Hand-authored response rows, one tag per type.
    Tagged(&'a [String]),
}

impl ResponseSource<'_> {
    pub fn n_types(&self) -> usize {
        match self {
            ResponseSource::Learned(m) => m.k,
            ResponseSource::Tagged(tags) => tags.len(),
        }
    }

    fn type_labels(&self) -> Vec<String> {
        match self {
            ResponseSource::Learned(m) => (0..m.k).map(|z| format!("cluster{z}")).collect(),
            ResponseSource::Tagged(tags) => tags.to_vec(),
        }
    }
}

/// A learned reward for one type: `R(x, a) = w·φ(x) + cost(a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    pub features: FeatureMap,
    pub weights: Vec<f64>,
    /// Indexed by robot action (position among the alphabet's robot actions).
    #[serde(default)]
    pub action_costs: Option<Vec<f64>>,
}

impl RewardSpec {
    pub fn zero(n_steps: usize) -> Self {
        Self {
            features: FeatureMap::indicator(n_steps),
            weights: vec![0.0; n_steps],
            action_costs: None,
        }
    }

    pub fn value(&self, step: usize, action: usize) -> f64 {
        let state: f64 = self.features.evaluate(step).iter().zip(&self.weights).map(|(f, w)| f * w).sum();
        state + self.action_costs.as_ref().map_or(0.0, |c| c[action])
    }
}

/// One reply outcome: human action, resulting step, probability.
type Outcome = (usize, usize, f64);

fn responses(domain: &TaskDomain, source: &ResponseSource, z: usize, step: usize, robot: usize) -> Result<Vec<Outcome>> {
    let mid = domain
        .effect(step, robot)
        .ok_or_else(|| Error::Model(format!("robot action {} is not valid at {}", domain.alphabet.label(robot), domain.task_steps[step])))?;
    match source {
        ResponseSource::Learned(model) => {
            let valid = domain.valid_human_actions(mid);
            if valid.is_empty() {
                return Ok(vec![(domain.pass_observation(), mid, 1.0)]);
            }
            let theta = &model.matrices[z];
            let weights: Vec<f64> = valid.iter().map(|&h| theta.prob(robot, h)).collect();
            let total: f64 = weights.iter().sum();
            Ok(valid
                .iter()
                .zip(&weights)
                .map(|(&h, &w)| {
                    let p = if total > 0.0 { w / total } else { 1.0 / valid.len() as f64 };
                    (h, domain.effect(mid, h).expect("valid action has an effect"), p)
                })
                .collect())
        }
        ResponseSource::Tagged(tags) => {
            let row = domain.response(step, robot, &tags[z]).ok_or_else(|| {
                Error::Model(format!(
                    "no response tagged {:?} for {} at {}",
                    tags[z],
                    domain.alphabet.label(robot),
                    domain.task_steps[step]
                ))
            })?;
            Ok(row.outcomes.iter().map(|o| (o.human, o.next, o.p)).collect())
        }
    }
}

/// Assemble the MOMDP: `Y` = types of `source`, `T_y` static, observations = human actions.
pub fn assemble_momdp(domain: &TaskDomain, source: ResponseSource, rewards: &[RewardSpec]) -> Result<Momdp> {
    let k = source.n_types();
    if rewards.len() != k {
        return Err(Error::Model(format!("{} reward specs for {k} types", rewards.len())));
    }
    let mut m = response_model(domain, source)?;
    let na = m.n_actions();
    for (z, spec) in rewards.iter().enumerate() {
        if spec.features.n_states() != domain.n_steps() || spec.weights.len() != spec.features.dim {
            return Err(Error::Model(format!("reward for type {z} does not match the domain")));
        }
        if spec.action_costs.as_ref().is_some_and(|c| c.len() != na) {
            return Err(Error::Model(format!("reward for type {z} needs {na} action costs")));
        }
    }
    for x in 0..m.n_steps() {
        for (z, spec) in rewards.iter().enumerate() {
            for a in 0..na {
                let i = m.index(x, z, a);
                m.rewards[i] = if m.terminal[x] { 0.0 } else { spec.value(x, a) };
            }
        }
    }
    m.validate()?;
    Ok(m)
}

/// Robot actions offered to the planner at `step`: those that change the task-step, plus the
/// robot's idle action while the human can still change it. Other actions are legal in
/// replays but only ever stall the task.
pub fn is_planned(domain: &TaskDomain, step: usize, robot: usize) -> bool {
    match domain.effect(step, robot) {
        None => false,
        Some(mid) if mid != step => true,
        Some(mid) => {
            domain.idle.robot == Some(robot)
                && domain
                    .valid_human_actions(mid)
                    .into_iter()
                    .any(|h| domain.effect(mid, h).is_some_and(|next| next != step))
        }
    }
}

/// The MOMDP without rewards (all zero). Used to derive per-type MDPs before IRL.
pub fn response_model(domain: &TaskDomain, source: ResponseSource) -> Result<Momdp> {
    let k = source.n_types();
    if k == 0 {
        return Err(Error::Model("at least one type is required".into()));
    }
    if let ResponseSource::Learned(model) = source {
        if model.n_actions != domain.alphabet.len() {
            return Err(Error::Model(format!(
                "model has {} actions, domain alphabet has {}",
                model.n_actions,
                domain.alphabet.len()
            )));
        }
    }
    let robot_ids = domain.alphabet.robot_actions();
    let human_ids = domain.alphabet.human_actions();
    let robot_index = |id: usize| robot_ids.iter().position(|&r| r == id).expect("robot action");
    let obs_index = |id: usize| human_ids.iter().position(|&h| h == id).expect("human action");
    let (nx, na) = (domain.n_steps(), robot_ids.len());
    let terminal: Vec<bool> = (0..nx).map(|x| domain.is_terminal(x)).collect();
    let available: Vec<Vec<usize>> = (0..nx)
        .map(|x| {
            if terminal[x] {
                Vec::new()
            } else {
                let valid = domain.valid_actions(x, Actor::Robot);
                let planned: Vec<usize> = valid.iter().copied().filter(|&r| is_planned(domain, x, r)).collect();
                let chosen = if planned.is_empty() { valid } else { planned };
                chosen.into_iter().map(robot_index).collect()
            }
        })
        .collect();
    let mut transitions = vec![Vec::new(); nx * k * na];
    let mut rows = Vec::new();
    for x in 0..nx {
        for &a in &available[x] {
            let robot = robot_ids[a];
            for z in 0..k {
                let outcomes = responses(domain, &source, z, x, robot)?;
                let mut by_next: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
                for (h, next, p) in outcomes {
                    if p == 0.0 {
                        continue;
                    }
                    match by_next.iter_mut().find(|e| e.0 == next) {
                        Some(e) => e.1.push((obs_index(h), p)),
                        None => by_next.push((next, vec![(obs_index(h), p)])),
                    }
                }
                by_next.sort_by_key(|e| e.0);
                let row = &mut transitions[(x * k + z) * na + a];
                for (next, obs) in by_next {
                    let total: f64 = obs.iter().map(|o| o.1).sum();
                    row.push((next, total));
                    rows.push(ConditionedRow {
                        step: x,
                        action: a,
                        next,
                        type_index: z,
                        probs: obs.into_iter().map(|(o, p)| (o, p / total)).collect(),
                    });
                }
            }
        }
    }
    let m = Momdp {
        steps: domain.task_steps.clone(),
        types: source.type_labels(),
        actions: robot_ids.iter().map(|&r| domain.alphabet.label(r).to_string()).collect(),
        observations: human_ids.iter().map(|&h| domain.alphabet.label(h).to_string()).collect(),
        available,
        transitions,
        type_dynamics: TypeDynamics::Static,
        observation_model: ObservationModel::Conditioned { rows },
        rewards: vec![0.0; nx * k * na],
        discount: domain.discount,
        terminal,
        initial_step: domain.initial,
        initial_belief: vec![1.0 / k as f64; k],
    };
    Ok(m)
}

/// The fixed-type MDP for type `z`: the robot's decision steps with that type's replies.
pub fn fixed_type_mdp(domain: &TaskDomain, source: ResponseSource, z: usize) -> Result<Mdp> {
    if z >= source.n_types() {
        return Err(Error::InvalidArgument(format!("type {z} out of range")));
    }
    Ok(response_model(domain, source)?.type_mdp(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::place_drill;
    use crate::momdp::belief_update;

    fn tags(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn place_drill_two_types_validates() {
        let d = place_drill::domain();
        let t = tags(&[place_drill::UNIFORM_TAG, place_drill::UNIFORM_TAG]);
        let m = assemble_momdp(&d, ResponseSource::Tagged(&t), &[RewardSpec::zero(27), RewardSpec::zero(27)]).unwrap();
        assert_eq!(m.n_steps(), 27);
        assert_eq!(m.n_types(), 2);
        assert_eq!(m.n_states(), 54);
        m.validate().unwrap();
    }

    #[test]
    fn missing_tag_or_reward_is_reported() {
        let d = place_drill::domain();
        let t = tags(&["nope"]);
        let err = assemble_momdp(&d, ResponseSource::Tagged(&t), &[RewardSpec::zero(27)]).unwrap_err();
        assert!(err.to_string().contains("nope"), "{err}");
        let t = tags(&[place_drill::UNIFORM_TAG]);
        assert!(assemble_momdp(&d, ResponseSource::Tagged(&t), &[]).is_err());
    }

    #[test]
    fn single_type_reduces_to_the_mdp() {
        let d = place_drill::domain();
        let t = tags(&[place_drill::UNIFORM_TAG]);
        let m = response_model(&d, ResponseSource::Tagged(&t)).unwrap();
        let mdp = m.type_mdp(0);
        mdp.validate().unwrap();
        // Drilling nothing from UUU: the human places one of three screws uniformly.
        let a = m.actions.iter().position(|l| l == "no-op").unwrap();
        let succ = mdp.successors(d.initial, a);
        assert_eq!(succ.len(), 3);
        assert!(succ.iter().all(|&(_, p)| (p - 1.0 / 3.0).abs() < 1e-12));
        // One type: observations never move the belief.
        let next = succ[0].0;
        let h = m.observations.iter().position(|l| l.starts_with("place")).unwrap();
        let obs = (0..m.n_observations())
            .find(|&o| belief_update(&m, &[1.0], d.initial, a, next, o).is_ok())
            .unwrap_or(h);
        assert_eq!(belief_update(&m, &[1.0], d.initial, a, next, obs).unwrap(), vec![1.0]);
    }
}
