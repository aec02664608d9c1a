//! Task domains: observable task-steps, action effects and tagged human-response tables.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::alphabet::{ActionAlphabet, Actor};
use super::demo::DemoSequence;
use crate::error::{Error, Result};
use crate::irl::FeatureMap;

/// Row sums farther than this from 1 are rejected by the loader.
pub const LOAD_TOLERANCE: f64 = 1e-6;
/// In-memory stochasticity tolerance.
pub const ROW_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IdleActions {
    /// The human's "pass" action, emitted when the human has nothing to do.
    pub human: Option<usize>,
    /// The robot's "pass" action, implied before a sequence that opens with a human action.
    pub robot: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseOutcome {
    pub human: usize,
    pub next: usize,
    pub p: f64,
}

/// Distribution over the human's reply (and resulting task-step) after the robot acts,
/// for one human-type tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRow {
    pub step: usize,
    pub robot: usize,
    pub tag: String,
    pub outcomes: Vec<ResponseOutcome>,
}

impl ResponseRow {
    pub fn total(&self) -> f64 {
        self.outcomes.iter().map(|o| o.p).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskDomain {
    pub alphabet: ActionAlphabet,
    pub task_steps: Vec<String>,
    pub initial: usize,
    pub terminal: BTreeSet<usize>,
    /// `effects[step][action]`: resulting step, or `None` when the action is not available.
    pub effects: Vec<Vec<Option<usize>>>,
    pub idle: IdleActions,
    pub responses: Vec<ResponseRow>,
    pub discount: f64,
    /// State features for reward learning; `None` means one indicator per task-step.
    pub features: Option<FeatureMap>,
}

/// A single invariant violation reported by [`validate_domain`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// One robot-then-human exchange recovered by replaying a demonstration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayTurn {
    pub step: usize,
    pub robot: usize,
    /// Task-step after the robot's action, before the human replies.
    pub mid: usize,
    /// `None` when the sequence ends right after the robot's action.
    pub human: Option<usize>,
    pub next: usize,
}

impl TaskDomain {
    pub fn n_steps(&self) -> usize {
        self.task_steps.len()
    }

    pub fn step_index(&self, label: &str) -> Option<usize> {
        self.task_steps.iter().position(|s| s == label)
    }

    pub fn is_terminal(&self, step: usize) -> bool {
        self.terminal.contains(&step)
    }

    pub fn effect(&self, step: usize, action: usize) -> Option<usize> {
        self.effects[step][action]
    }

    pub fn valid_actions(&self, step: usize, actor: Actor) -> Vec<usize> {
        self.alphabet
            .ids_for(actor)
            .into_iter()
            .filter(|&a| self.effects[step][a].is_some())
            .collect()
    }

    pub fn valid_human_actions(&self, step: usize) -> Vec<usize> {
        self.valid_actions(step, Actor::Human)
    }

    /// Observation symbol recorded when the human has no move (e.g. the task just ended).
    pub fn pass_observation(&self) -> usize {
        self.idle
            .human
            .unwrap_or_else(|| self.alphabet.human_actions()[0])
    }

    /// The feature map used to learn rewards over this domain's task-steps.
    pub fn feature_map(&self) -> FeatureMap {
        self.features.clone().unwrap_or_else(|| FeatureMap::indicator(self.n_steps()))
    }

    pub fn response(&self, step: usize, robot: usize, tag: &str) -> Option<&ResponseRow> {
        self.responses
            .iter()
            .find(|r| r.step == step && r.robot == robot && r.tag == tag)
    }

    pub fn response_tags(&self) -> BTreeSet<&str> {
        self.responses.iter().map(|r| r.tag.as_str()).collect()
    }

    /// Replays a demonstration from the initial step as robot-then-human exchanges.
    ///
    /// A sequence that opens with a human action is preceded by the robot's idle action.
    /// A sequence may end after a robot action; that last exchange has `human: None`.
    pub fn replay(&self, seq: &DemoSequence) -> Result<Vec<ReplayTurn>> {
        let label = |a: usize| self.alphabet.label(a).to_string();
        let mut turns = Vec::new();
        let mut step = self.initial;
        let mut j = 0;
        let elems = &seq.elements;
        while j < elems.len() {
            let (robot, consumed) = if self.alphabet.actor(elems[j]) == Actor::Robot {
                (elems[j], true)
            } else if j == 0 {
                let idle = self.idle.robot.ok_or_else(|| Error::Replay {
                    index: 1,
                    action: label(elems[0]),
                    step: self.task_steps[step].clone(),
                })?;
                (idle, false)
            } else {
                return Err(Error::Replay {
                    index: j + 1,
                    action: label(elems[j]),
                    step: self.task_steps[step].clone(),
                });
            };
            let mid = self.effect(step, robot).ok_or_else(|| Error::Replay {
                index: j + 1,
                action: label(robot),
                step: self.task_steps[step].clone(),
            })?;
            if consumed {
                j += 1;
            }
            let (human, next) = match elems.get(j) {
                Some(&h) => {
                    let next = self.effect(mid, h).ok_or_else(|| Error::Replay {
                        index: j + 1,
                        action: label(h),
                        step: self.task_steps[mid].clone(),
                    })?;
                    j += 1;
                    (Some(h), next)
                }
                None => (None, mid),
            };
            turns.push(ReplayTurn {
                step,
                robot,
                mid,
                human,
                next,
            });
            step = next;
        }
        Ok(turns)
    }

    /// Robot decision steps visited by a demonstration, including the final step.
    pub fn trajectory(&self, seq: &DemoSequence) -> Result<Vec<usize>> {
        let turns = self.replay(seq)?;
        let mut states = Vec::with_capacity(turns.len() + 1);
        states.push(self.initial);
        states.extend(turns.iter().map(|t| t.next));
        Ok(states)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawDomain = serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        let domain = raw.resolve()?;
        let violations = validate_domain(&domain);
        if violations.is_empty() {
            Ok(domain)
        } else {
            Err(Error::Domain(violations.iter().map(|v| v.to_string()).collect()))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&RawDomain::from_domain(self))?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path.as_ref(), self.to_json()?).map_err(|e| Error::io(path.as_ref(), e))
    }
}

/// Checks every domain invariant; an empty list means the domain is valid.
pub fn validate_domain(domain: &TaskDomain) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut bad = |location: String, message: String| out.push(Violation { location, message });
    let n = domain.n_steps();
    let n_actions = domain.alphabet.len();

    if !(domain.discount > 0.0 && domain.discount < 1.0) {
        bad("discount".into(), format!("must lie in (0, 1), got {}", domain.discount));
    }
    if n == 0 {
        bad("task_steps".into(), "no task-steps".into());
        return out;
    }
    let mut seen = BTreeSet::new();
    for (i, s) in domain.task_steps.iter().enumerate() {
        if !seen.insert(s.as_str()) {
            bad(format!("task_steps[{i}]"), format!("duplicate label '{s}'"));
        }
    }
    if domain.initial >= n {
        bad("initial".into(), format!("step {} out of range", domain.initial));
    }
    for &t in &domain.terminal {
        if t >= n {
            bad("terminal".into(), format!("step {t} out of range"));
        }
    }
    if domain.effects.len() != n || domain.effects.iter().any(|r| r.len() != n_actions) {
        bad("effects".into(), format!("table must be {n} x {n_actions}"));
        return out;
    }
    let step_name = |s: usize| domain.task_steps.get(s).cloned().unwrap_or_else(|| s.to_string());
    for (s, row) in domain.effects.iter().enumerate() {
        for (a, next) in row.iter().enumerate() {
            if let Some(next) = *next {
                if next >= n {
                    bad(
                        format!("effects[{}, {}]", step_name(s), domain.alphabet.label(a)),
                        format!("next step {next} out of range"),
                    );
                } else if domain.is_terminal(s) && next != s {
                    bad(
                        format!("effects[{}, {}]", step_name(s), domain.alphabet.label(a)),
                        format!("terminal step transitions to '{}'", step_name(next)),
                    );
                }
            }
        }
        if !domain.is_terminal(s) && domain.valid_actions(s, Actor::Robot).is_empty() {
            bad(format!("effects[{}]", step_name(s)), "no robot action is available".into());
        }
        if !domain.is_terminal(s) && domain.idle.human.is_none() && domain.valid_human_actions(s).is_empty() {
            bad(
                format!("effects[{}]", step_name(s)),
                "no human action is available and no human idle action is declared".into(),
            );
        }
    }
    for (which, id, actor) in [("human", domain.idle.human, Actor::Human), ("robot", domain.idle.robot, Actor::Robot)] {
        if let Some(id) = id {
            if !domain.alphabet.contains(id) || domain.alphabet.actor(id) != actor {
                bad(format!("idle.{which}"), format!("action {id} is not a {actor} action"));
            }
        }
    }
    if let Some(phi) = &domain.features {
        if phi.n_states() != n {
            bad("features".into(), format!("{} rows for {n} task-steps", phi.n_states()));
        }
    }
    let mut keys = BTreeSet::new();
    for (i, row) in domain.responses.iter().enumerate() {
        let loc = format!(
            "responses[{i}] (step '{}', robot '{}', tag '{}')",
            step_name(row.step),
            if domain.alphabet.contains(row.robot) { domain.alphabet.label(row.robot) } else { "?" },
            row.tag
        );
        if row.step >= n || !domain.alphabet.contains(row.robot) || domain.alphabet.actor(row.robot) != Actor::Robot {
            bad(loc, "step or robot action invalid".into());
            continue;
        }
        if !keys.insert((row.step, row.robot, row.tag.clone())) {
            bad(loc.clone(), "duplicate row".into());
        }
        let total = row.total();
        if (total - 1.0).abs() > ROW_TOLERANCE {
            bad(loc.clone(), format!("probabilities sum to {total}"));
        }
        for o in &row.outcomes {
            if !(o.p >= 0.0) || !o.p.is_finite() {
                bad(loc.clone(), format!("probability {} is not a finite non-negative number", o.p));
            }
            if !domain.alphabet.contains(o.human) || domain.alphabet.actor(o.human) != Actor::Human {
                bad(loc.clone(), format!("outcome action {} is not a human action", o.human));
            }
            if o.next >= n {
                bad(loc.clone(), format!("outcome step {} out of range", o.next));
            } else if domain.is_terminal(row.step) && o.next != row.step && o.p > 0.0 {
                bad(loc.clone(), format!("terminal step transitions to '{}'", step_name(o.next)));
            }
        }
    }
    out
}

// ---- file format ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RawDomain {
    alphabet: ActionAlphabet,
    task_steps: Vec<String>,
    initial: String,
    terminal: Vec<String>,
    effects: Vec<RawEffect>,
    #[serde(default)]
    idle: RawIdle,
    #[serde(default)]
    responses: Vec<RawResponse>,
    discount: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    features: Option<FeatureMap>,
}

#[derive(Serialize, Deserialize)]
struct RawEffect {
    step: String,
    action: String,
    next: String,
}

#[derive(Serialize, Deserialize, Default)]
struct RawIdle {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    human: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    robot: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct RawResponse {
    step: String,
    robot: String,
    tag: String,
    outcomes: Vec<RawOutcome>,
}

#[derive(Serialize, Deserialize)]
struct RawOutcome {
    human: String,
    next: String,
    p: f64,
}

impl RawDomain {
    fn from_domain(d: &TaskDomain) -> Self {
        let a = |id: usize| d.alphabet.label(id).to_string();
        let s = |id: usize| d.task_steps[id].clone();
        let mut effects = Vec::new();
        for (step, row) in d.effects.iter().enumerate() {
            for (action, next) in row.iter().enumerate() {
                if let Some(next) = next {
                    effects.push(RawEffect {
                        step: s(step),
                        action: a(action),
                        next: s(*next),
                    });
                }
            }
        }
        RawDomain {
            alphabet: d.alphabet.clone(),
            task_steps: d.task_steps.clone(),
            initial: s(d.initial),
            terminal: d.terminal.iter().map(|&t| s(t)).collect(),
            effects,
            idle: RawIdle {
                human: d.idle.human.map(a),
                robot: d.idle.robot.map(a),
            },
            responses: d
                .responses
                .iter()
                .map(|r| RawResponse {
                    step: s(r.step),
                    robot: a(r.robot),
                    tag: r.tag.clone(),
                    outcomes: r
                        .outcomes
                        .iter()
                        .map(|o| RawOutcome {
                            human: a(o.human),
                            next: s(o.next),
                            p: o.p,
                        })
                        .collect(),
                })
                .collect(),
            discount: d.discount,
            features: d.features.clone(),
        }
    }

    fn resolve(self) -> Result<TaskDomain> {
        let alphabet = self.alphabet;
        let steps = self.task_steps;
        let step = |label: &str, location: String| {
            steps.iter().position(|s| s == label).ok_or_else(|| Error::Parse {
                location,
                message: format!("unknown task-step '{label}'"),
            })
        };
        let action = |label: &str, location: String| {
            alphabet.id_of(label).ok_or_else(|| Error::Parse {
                location,
                message: format!("unknown action '{label}'"),
            })
        };
        let initial = step(&self.initial, "initial".into())?;
        let terminal = self
            .terminal
            .iter()
            .enumerate()
            .map(|(i, t)| step(t, format!("terminal[{i}]")))
            .collect::<Result<BTreeSet<_>>>()?;
        let mut effects = vec![vec![None; alphabet.len()]; steps.len()];
        for (i, e) in self.effects.iter().enumerate() {
            let from = step(&e.step, format!("effects[{i}].step"))?;
            let act = action(&e.action, format!("effects[{i}].action"))?;
            let to = step(&e.next, format!("effects[{i}].next"))?;
            if effects[from][act].replace(to).is_some() {
                return Err(Error::Parse {
                    location: format!("effects[{i}]"),
                    message: format!("duplicate effect for ('{}', '{}')", e.step, e.action),
                });
            }
        }
        let idle = IdleActions {
            human: self.idle.human.as_deref().map(|h| action(h, "idle.human".into())).transpose()?,
            robot: self.idle.robot.as_deref().map(|r| action(r, "idle.robot".into())).transpose()?,
        };
        let mut responses = Vec::with_capacity(self.responses.len());
        for (i, r) in self.responses.into_iter().enumerate() {
            let mut outcomes = r
                .outcomes
                .iter()
                .enumerate()
                .map(|(j, o)| {
                    Ok(ResponseOutcome {
                        human: action(&o.human, format!("responses[{i}].outcomes[{j}].human"))?,
                        next: step(&o.next, format!("responses[{i}].outcomes[{j}].next"))?,
                        p: o.p,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            renormalize(&mut outcomes, format!("responses[{i}]"))?;
            responses.push(ResponseRow {
                step: step(&r.step, format!("responses[{i}].step"))?,
                robot: action(&r.robot, format!("responses[{i}].robot"))?,
                tag: r.tag,
                outcomes,
            });
        }
        Ok(TaskDomain {
            alphabet,
            task_steps: steps,
            initial,
            terminal,
            effects,
            idle,
            responses,
            discount: self.discount,
            features: self.features,
        })
    }
}

/// Rescales a row whose sum is within [`LOAD_TOLERANCE`] of 1; larger deviations are errors.
fn renormalize(outcomes: &mut [ResponseOutcome], location: String) -> Result<()> {
    let total: f64 = outcomes.iter().map(|o| o.p).sum();
    let dev = (total - 1.0).abs();
    if !(dev <= LOAD_TOLERANCE) {
        return Err(Error::Parse {
            location,
            message: format!("probabilities sum to {total}, more than {LOAD_TOLERANCE} from 1"),
        });
    }
    if dev > 1e-12 {
        for o in outcomes.iter_mut() {
            o.p /= total;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::place_drill;

    #[test]
    fn bundled_domain_is_valid() {
        assert_eq!(validate_domain(&place_drill::domain()), vec![]);
    }

    #[test]
    fn short_row_is_one_violation() {
        let mut d = place_drill::domain();
        let row = d.responses.iter_mut().find(|r| r.outcomes.len() == 2).unwrap();
        row.outcomes[0].p = 0.4;
        let v = validate_domain(&d);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].message.contains("0.9"), "{}", v[0]);
        assert!(v[0].location.contains("responses["));
    }

    #[test]
    fn terminal_outgoing_effect_is_one_violation() {
        let mut d = place_drill::domain();
        let t = *d.terminal.iter().next().unwrap();
        let noop = d.alphabet.id_of("no-op").unwrap();
        d.effects[t][noop] = Some(0);
        let v = validate_domain(&d);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(v[0].message.contains("terminal"));
    }

    #[test]
    fn file_round_trip_is_identical() {
        let d = place_drill::domain();
        let back = TaskDomain::from_json(&d.to_json().unwrap()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn loader_renormalizes_small_deviation_and_rejects_large() {
        let d = place_drill::domain();
        let mut json: serde_json::Value = serde_json::from_str(&d.to_json().unwrap()).unwrap();
        json["responses"][0]["outcomes"][0]["p"] =
            serde_json::json!(json["responses"][0]["outcomes"][0]["p"].as_f64().unwrap() + 5e-7);
        let loaded = TaskDomain::from_json(&json.to_string()).unwrap();
        assert!((loaded.responses[0].total() - 1.0).abs() < 1e-12);

        json["responses"][0]["outcomes"][0]["p"] =
            serde_json::json!(json["responses"][0]["outcomes"][0]["p"].as_f64().unwrap() + 1e-3);
        let err = TaskDomain::from_json(&json.to_string()).unwrap_err();
        assert!(err.to_string().contains("responses[0]"), "{err}");
    }

    #[test]
    fn replay_inserts_robot_idle_and_tracks_steps() {
        let d = place_drill::domain();
        let a = |l: &str| d.alphabet.id_of(l).unwrap();
        let seq = DemoSequence::new(vec![a("place-A"), a("drill-A"), a("place-B"), a("drill-B")]);
        let turns = d.replay(&seq).unwrap();
        assert_eq!(turns.len(), 3);
        assert_eq!(turns[0].robot, a("no-op"));
        assert_eq!(d.task_steps[turns[0].next], "PUU");
        assert_eq!(d.task_steps[turns[1].next], "DPU");
        assert_eq!(turns[2].human, None);
        assert_eq!(d.task_steps[turns[2].next], "DDU");
        let traj = d.trajectory(&seq).unwrap();
        assert_eq!(traj.len(), 4);
    }

    #[test]
    fn replay_rejects_invalid_action() {
        let d = place_drill::domain();
        let a = |l: &str| d.alphabet.id_of(l).unwrap();
        let seq = DemoSequence::new(vec![a("place-A"), a("no-op"), a("place-A")]);
        match d.replay(&seq).unwrap_err() {
            Error::Replay { index, action, .. } => {
                assert_eq!(index, 3);
                assert_eq!(action, "place-A");
            }
            e => panic!("{e}"),
        }
    }
}
