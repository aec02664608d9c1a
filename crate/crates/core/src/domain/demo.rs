//! Demonstrated action sequences and the demonstrations file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::alphabet::ActionAlphabet;
use crate::error::{Error, Result};

/// One alternating human/robot action trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemoSequence {
    pub elements: Vec<usize>,
    pub subject: Option<String>,
    /// Optional expert label for the subject's type (used only for evaluation).
    pub label: Option<String>,
}

impl DemoSequence {
    pub fn new(elements: Vec<usize>) -> Self {
        Self {
            elements,
            subject: None,
            label: None,
        }
    }

    pub fn with_subject(mut self, subject: impl Into<String>) -> Self {
        self.subject = Some(subject.into());
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Consecutive `(previous, next)` action pairs.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.elements.windows(2).map(|w| (w[0], w[1]))
    }

    /// Checks length, ids and strict actor alternation. `position` is the sequence's
    /// index in its file and only feeds error messages; element indices are 1-based.
    pub fn validate(&self, alphabet: &ActionAlphabet, position: usize) -> Result<()> {
        if self.elements.len() < 2 {
            return Err(Error::Parse {
                location: format!("sequences[{position}]"),
                message: format!("sequence needs at least 2 actions, got {}", self.elements.len()),
            });
        }
        if let Some(&bad) = self.elements.iter().find(|&&a| !alphabet.contains(a)) {
            return Err(Error::Parse {
                location: format!("sequences[{position}]"),
                message: format!("action id {bad} is outside the alphabet"),
            });
        }
        for (j, w) in self.elements.windows(2).enumerate() {
            if alphabet.actor(w[0]) == alphabet.actor(w[1]) {
                return Err(Error::Alternation {
                    sequence: position,
                    index: j + 2,
                    previous: alphabet.label(w[0]).to_string(),
                    current: alphabet.label(w[1]).to_string(),
                });
            }
        }
        Ok(())
    }
}

/// A demonstrations file: the alphabet plus validated sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DemoSet {
    pub alphabet: ActionAlphabet,
    pub sequences: Vec<DemoSequence>,
}

#[derive(Serialize, Deserialize)]
struct RawDemoFile {
    alphabet: ActionAlphabet,
    sequences: Vec<RawSequence>,
}

#[derive(Serialize, Deserialize)]
struct RawSequence {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subject: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    actions: Vec<String>,
}

impl DemoSet {
    pub fn new(alphabet: ActionAlphabet, sequences: Vec<DemoSequence>) -> Result<Self> {
        for (i, s) in sequences.iter().enumerate() {
            s.validate(&alphabet, i)?;
        }
        Ok(Self { alphabet, sequences })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawDemoFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        let alphabet = raw.alphabet;
        let mut sequences = Vec::with_capacity(raw.sequences.len());
        for (i, rs) in raw.sequences.into_iter().enumerate() {
            let elements = rs
                .actions
                .iter()
                .enumerate()
                .map(|(j, label)| {
                    alphabet.id_of(label).ok_or_else(|| Error::Parse {
                        location: format!("sequences[{i}].actions[{j}]"),
                        message: format!("unknown action '{label}'"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let seq = DemoSequence {
                elements,
                subject: rs.subject,
                label: rs.label,
            };
            seq.validate(&alphabet, i)?;
            sequences.push(seq);
        }
        Ok(Self { alphabet, sequences })
    }

    pub fn to_json(&self) -> Result<String> {
        let raw = RawDemoFile {
            alphabet: self.alphabet.clone(),
            sequences: self
                .sequences
                .iter()
                .map(|s| RawSequence {
                    subject: s.subject.clone(),
                    label: s.label.clone(),
                    actions: s.elements.iter().map(|&a| self.alphabet.label(a).to_string()).collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&raw)?)
    }

    /// Subjects in order of first appearance with the indices of their sequences.
    /// Sequences without a subject each form their own group named `#<index>`.
    pub fn by_subject(&self) -> Vec<(String, Vec<usize>)> {
        group_by_subject(&self.sequences)
    }

    /// Restricts the set to the given sequence indices.
    pub fn subset(&self, indices: &[usize]) -> DemoSet {
        DemoSet {
            alphabet: self.alphabet.clone(),
            sequences: indices.iter().map(|&i| self.sequences[i].clone()).collect(),
        }
    }
}

pub fn group_by_subject(sequences: &[DemoSequence]) -> Vec<(String, Vec<usize>)> {
    let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
    for (i, s) in sequences.iter().enumerate() {
        let key = s.subject.clone().unwrap_or_else(|| format!("#{i}"));
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(i),
            None => groups.push((key, vec![i])),
        }
    }
    groups
}

pub fn load_demonstrations(path: impl AsRef<Path>) -> Result<DemoSet> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    DemoSet::from_json(&text)
}

pub fn save_demonstrations(set: &DemoSet, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path.as_ref(), set.to_json()?).map_err(|e| Error::io(path.as_ref(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::place_drill;

    fn file(sequences: &str) -> String {
        let alphabet = serde_json::to_string(&place_drill::alphabet()).unwrap();
        format!(r#"{{"alphabet": {alphabet}, "sequences": [{sequences}]}}"#)
    }

    #[test]
    fn minimal_file_loads() {
        let set = DemoSet::from_json(&file(r#"{"subject":"s01","actions":["place-A","drill-A"]}"#)).unwrap();
        assert_eq!(set.sequences.len(), 1);
        assert_eq!(set.sequences[0].len(), 2);
        assert_eq!(set.sequences[0].subject.as_deref(), Some("s01"));
    }

    #[test]
    fn alternation_violation_names_index() {
        let err = DemoSet::from_json(&file(r#"{"actions":["place-A","place-B"]}"#)).unwrap_err();
        match err {
            Error::Alternation { index, sequence, .. } => {
                assert_eq!(index, 2);
                assert_eq!(sequence, 0);
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn either_actor_may_start() {
        assert!(DemoSet::from_json(&file(r#"{"actions":["no-op","place-A"]}"#)).is_ok());
    }

    #[test]
    fn unknown_action_reports_location() {
        let err = DemoSet::from_json(&file(r#"{"actions":["place-A","hammer"]}"#)).unwrap_err();
        assert!(err.to_string().contains("sequences[0].actions[1]"), "{err}");
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = DemoSet::from_json("{\n\"alphabet\": [,\n}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn too_short_rejected() {
        assert!(DemoSet::from_json(&file(r#"{"actions":["place-A"]}"#)).is_err());
    }

    #[test]
    fn groups_eighteen_subjects() {
        let alphabet = place_drill::alphabet();
        let seqs: Vec<DemoSequence> = (0..54)
            .map(|i| DemoSequence::new(vec![0, 4]).with_subject(format!("s{:02}", i / 3 + 1)))
            .collect();
        let set = DemoSet::new(alphabet, seqs).unwrap();
        let back = DemoSet::from_json(&set.to_json().unwrap()).unwrap();
        assert_eq!(back.sequences.len(), 54);
        let groups = back.by_subject();
        assert_eq!(groups.len(), 18);
        assert!(groups.iter().all(|(_, v)| v.len() == 3));
        assert_eq!(groups[0].0, "s01");
        assert_eq!(groups[17].1, vec![51, 52, 53]);
    }
}
