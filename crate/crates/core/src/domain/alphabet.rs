use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which teammate performs an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Actor {
    Human,
    Robot,
}

impl Actor {
    pub fn other(self) -> Actor {
        match self {
            Actor::Human => Actor::Robot,
            Actor::Robot => Actor::Human,
        }
    }
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Actor::Human => f.write_str("human"),
            Actor::Robot => f.write_str("robot"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub id: usize,
    pub label: String,
    pub actor: Actor,
}

/// The joint action set of both teammates, indexed `0..len()`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ActionRecord>", into = "Vec<ActionRecord>")]
pub struct ActionAlphabet {
    actions: Vec<ActionRecord>,
    by_label: HashMap<String, usize>,
}

impl ActionAlphabet {
    /// Builds an alphabet from `(label, actor)` pairs; ids follow the given order.
    pub fn new<S: Into<String>>(actions: impl IntoIterator<Item = (S, Actor)>) -> Result<Self> {
        let records = actions
            .into_iter()
            .enumerate()
            .map(|(id, (label, actor))| ActionRecord {
                id,
                label: label.into(),
                actor,
            })
            .collect();
        Self::from_records(records)
    }

    pub fn from_records(mut records: Vec<ActionRecord>) -> Result<Self> {
        records.sort_by_key(|r| r.id);
        if records.len() < 2 {
            return Err(Error::Alphabet(format!(
                "need at least 2 actions, got {}",
                records.len()
            )));
        }
        let mut by_label = HashMap::with_capacity(records.len());
        for (expected, record) in records.iter().enumerate() {
            if record.id != expected {
                return Err(Error::Alphabet(format!(
                    "ids must be contiguous from 0; expected {expected}, found {}",
                    record.id
                )));
            }
            if record.label.is_empty() {
                return Err(Error::Alphabet(format!("action {} has an empty label", record.id)));
            }
            if by_label.insert(record.label.clone(), record.id).is_some() {
                return Err(Error::Alphabet(format!("duplicate label '{}'", record.label)));
            }
        }
        for actor in [Actor::Human, Actor::Robot] {
            if !records.iter().any(|r| r.actor == actor) {
                return Err(Error::Alphabet(format!("no {actor} action")));
            }
        }
        Ok(Self {
            actions: records,
            by_label,
        })
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn records(&self) -> &[ActionRecord] {
        &self.actions
    }

    pub fn label(&self, id: usize) -> &str {
        &self.actions[id].label
    }

    pub fn actor(&self, id: usize) -> Actor {
        self.actions[id].actor
    }

    pub fn contains(&self, id: usize) -> bool {
        id < self.actions.len()
    }

    pub fn id_of(&self, label: &str) -> Option<usize> {
        self.by_label.get(label).copied()
    }

    pub fn ids_for(&self, actor: Actor) -> Vec<usize> {
        self.actions
            .iter()
            .filter(|r| r.actor == actor)
            .map(|r| r.id)
            .collect()
    }

    pub fn human_actions(&self) -> Vec<usize> {
        self.ids_for(Actor::Human)
    }

    pub fn robot_actions(&self) -> Vec<usize> {
        self.ids_for(Actor::Robot)
    }
}

impl TryFrom<Vec<ActionRecord>> for ActionAlphabet {
    type Error = Error;

    fn try_from(records: Vec<ActionRecord>) -> Result<Self> {
        Self::from_records(records)
    }
}

impl From<ActionAlphabet> for Vec<ActionRecord> {
    fn from(alphabet: ActionAlphabet) -> Self {
        alphabet.actions
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ActionAlphabet {
        ActionAlphabet::new([("h", Actor::Human), ("r", Actor::Robot), ("w", Actor::Human)]).unwrap()
    }

    #[test]
    fn label_index_bijection() {
        let a = small();
        for id in 0..a.len() {
            assert_eq!(a.id_of(a.label(id)), Some(id));
        }
        assert_eq!(a.id_of("nope"), None);
        assert_eq!(a.human_actions(), vec![0, 2]);
        assert_eq!(a.robot_actions(), vec![1]);
    }

    #[test]
    fn rejects_single_actor() {
        let err = ActionAlphabet::new([("a", Actor::Human), ("b", Actor::Human)]).unwrap_err();
        assert!(err.to_string().contains("no robot action"));
    }

    #[test]
    fn rejects_gaps_and_duplicates() {
        let gap = vec![
            ActionRecord { id: 0, label: "a".into(), actor: Actor::Human },
            ActionRecord { id: 2, label: "b".into(), actor: Actor::Robot },
        ];
        assert!(ActionAlphabet::from_records(gap).is_err());
        assert!(ActionAlphabet::new([("a", Actor::Human), ("a", Actor::Robot)]).is_err());
        assert!(ActionAlphabet::new([("a", Actor::Human)]).is_err());
    }

    #[test]
    fn serde_validates() {
        let json = r#"[{"id":0,"label":"x","actor":"human"},{"id":1,"label":"y","actor":"robot"}]"#;
        let a: ActionAlphabet = serde_json::from_str(json).unwrap();
        assert_eq!(a.len(), 2);
        let bad = r#"[{"id":0,"label":"x","actor":"human"},{"id":1,"label":"y","actor":"human"}]"#;
        assert!(serde_json::from_str::<ActionAlphabet>(bad).is_err());
    }
}
