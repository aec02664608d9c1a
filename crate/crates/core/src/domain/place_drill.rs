//! The bundled place-and-drill task: the human places three screws, the robot drills them.
//!
//! Task-steps encode each screw as `U` (unplaced), `P` (placed) or `D` (drilled), screw A
//! first, giving 27 steps from `UUU` to the terminal `DDD`.

use std::collections::BTreeSet;

use super::alphabet::{ActionAlphabet, Actor};
use super::task::{IdleActions, ResponseOutcome, ResponseRow, TaskDomain};
use crate::irl::FeatureMap;

pub const SCREWS: usize = 3;
pub const DISCOUNT: f64 = 0.95;
pub const UNIFORM_TAG: &str = "uniform";

pub const PLACE: [usize; SCREWS] = [0, 1, 2];
pub const WAIT: usize = 3;
pub const DRILL: [usize; SCREWS] = [4, 5, 6];
pub const NO_OP: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Screw {
    Unplaced,
    Placed,
    Drilled,
}

impl Screw {
    fn code(self) -> usize {
        match self {
            Screw::Unplaced => 0,
            Screw::Placed => 1,
            Screw::Drilled => 2,
        }
    }

    fn letter(self) -> char {
        match self {
            Screw::Unplaced => 'U',
            Screw::Placed => 'P',
            Screw::Drilled => 'D',
        }
    }
}

/// Board configuration for one task-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Board(pub [Screw; SCREWS]);

impl Board {
    pub fn from_step(mut step: usize) -> Self {
        let mut screws = [Screw::Unplaced; SCREWS];
        for s in screws.iter_mut() {
            *s = match step % 3 {
                0 => Screw::Unplaced,
                1 => Screw::Placed,
                _ => Screw::Drilled,
            };
            step /= 3;
        }
        Board(screws)
    }

    pub fn step(self) -> usize {
        self.0.iter().rev().fold(0, |acc, s| acc * 3 + s.code())
    }

    pub fn label(self) -> String {
        self.0.iter().map(|s| s.letter()).collect()
    }

    pub fn count(self, state: Screw) -> usize {
        self.0.iter().filter(|&&s| s == state).count()
    }

    pub fn all_placed(self) -> bool {
        self.count(Screw::Unplaced) == 0
    }

    /// Result of an action, or `None` when the action is unavailable.
    pub fn apply(self, action: usize) -> Option<Board> {
        let mut next = self;
        match action {
            a if PLACE.contains(&a) => {
                let s = a - PLACE[0];
                if self.0[s] != Screw::Unplaced {
                    return None;
                }
                next.0[s] = Screw::Placed;
            }
            WAIT => {
                if !self.all_placed() {
                    return None;
                }
            }
            a if DRILL.contains(&a) => {
                let s = a - DRILL[0];
                if self.0[s] == Screw::Placed {
                    next.0[s] = Screw::Drilled;
                }
            }
            NO_OP => {}
            _ => return None,
        }
        Some(next)
    }

    /// True when `action` drills a placed, undrilled screw.
    pub fn drill_is_effective(self, action: usize) -> bool {
        DRILL.contains(&action) && self.0[action - DRILL[0]] == Screw::Placed
    }
}

pub fn alphabet() -> ActionAlphabet {
    ActionAlphabet::new([
        ("place-A", Actor::Human),
        ("place-B", Actor::Human),
        ("place-C", Actor::Human),
        ("wait", Actor::Human),
        ("drill-A", Actor::Robot),
        ("drill-B", Actor::Robot),
        ("drill-C", Actor::Robot),
        ("no-op", Actor::Robot),
    ])
    .expect("bundled alphabet is valid")
}

/// The bundled domain, with a `uniform` response tag under which the human picks uniformly
/// among the available actions.
pub fn domain() -> TaskDomain {
    let alphabet = alphabet();
    let n = 3usize.pow(SCREWS as u32);
    let boards: Vec<Board> = (0..n).map(Board::from_step).collect();
    let effects = boards
        .iter()
        .map(|b| (0..alphabet.len()).map(|a| b.apply(a).map(Board::step)).collect())
        .collect::<Vec<Vec<_>>>();
    let terminal: BTreeSet<usize> = [Board([Screw::Drilled; SCREWS]).step()].into();
    let mut responses = Vec::new();
    for (step, board) in boards.iter().enumerate() {
        for robot in DRILL.iter().copied().chain([NO_OP]) {
            let mid = board.apply(robot).expect("robot actions are always available");
            let human: Vec<usize> = (0..alphabet.len())
                .filter(|&a| alphabet.actor(a) == Actor::Human && mid.apply(a).is_some())
                .collect();
            let p = 1.0 / human.len() as f64;
            responses.push(ResponseRow {
                step,
                robot,
                tag: UNIFORM_TAG.to_string(),
                outcomes: human
                    .iter()
                    .map(|&h| ResponseOutcome {
                        human: h,
                        next: mid.apply(h).unwrap().step(),
                        p,
                    })
                    .collect(),
            });
        }
    }
    TaskDomain {
        alphabet,
        task_steps: boards.iter().map(|b| b.label()).collect(),
        initial: Board([Screw::Unplaced; SCREWS]).step(),
        terminal,
        effects,
        idle: IdleActions {
            human: Some(WAIT),
            robot: Some(NO_OP),
        },
        responses,
        discount: DISCOUNT,
        features: Some(count_features(&boards)),
    }
}

/// One indicator per (placed, drilled) count pair: rewards see how far the task has
/// progressed, not which screw is where.
pub fn count_features(boards: &[Board]) -> FeatureMap {
    let classes: Vec<(usize, usize)> = (0..=SCREWS).flat_map(|p| (0..=SCREWS - p).map(move |d| (p, d))).collect();
    let rows = boards
        .iter()
        .map(|b| {
            let key = (b.count(Screw::Placed), b.count(Screw::Drilled));
            classes.iter().map(|&c| if c == key { 1.0 } else { 0.0 }).collect()
        })
        .collect();
    FeatureMap::from_table(rows).expect("indicator rows are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twenty_seven_steps_round_trip_encoding() {
        let d = domain();
        assert_eq!(d.n_steps(), 27);
        for s in 0..27 {
            assert_eq!(Board::from_step(s).step(), s);
            assert_eq!(d.task_steps[s], Board::from_step(s).label());
        }
        assert_eq!(d.task_steps[d.initial], "UUU");
        assert_eq!(d.terminal.iter().map(|&t| d.task_steps[t].as_str()).collect::<Vec<_>>(), ["DDD"]);
    }

    #[test]
    fn invalid_drill_leaves_state_unchanged() {
        for s in 0..27 {
            let b = Board::from_step(s);
            for (i, &drill) in DRILL.iter().enumerate() {
                let next = b.apply(drill).unwrap();
                if b.0[i] == Screw::Placed {
                    assert_eq!(next.0[i], Screw::Drilled);
                    assert!(b.drill_is_effective(drill));
                } else {
                    assert_eq!(next, b);
                }
            }
        }
    }

    #[test]
    fn wait_only_when_everything_is_placed() {
        assert!(Board::from_step(0).apply(WAIT).is_none());
        let ppp = Board([Screw::Placed; 3]);
        assert_eq!(ppp.apply(WAIT), Some(ppp));
        assert!(ppp.apply(PLACE[1]).is_none());
    }

    #[test]
    fn count_features_group_boards_by_progress() {
        let d = domain();
        let phi = d.feature_map();
        assert_eq!(phi.dim, 10);
        let class = |label: &str| phi.evaluate(d.step_index(label).unwrap()).iter().position(|&x| x == 1.0);
        assert_eq!(class("PUU"), class("UUP"));
        assert_eq!(class("DPU"), class("UPD"));
        assert_ne!(class("PPU"), class("DPU"));
        for s in 0..27 {
            assert_eq!(phi.evaluate(s).iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn labels_match_action_constants() {
        let a = alphabet();
        assert_eq!(a.id_of("place-B"), Some(PLACE[1]));
        assert_eq!(a.id_of("wait"), Some(WAIT));
        assert_eq!(a.id_of("drill-C"), Some(DRILL[2]));
        assert_eq!(a.id_of("no-op"), Some(NO_OP));
    }
}
