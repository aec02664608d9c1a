//! Ground-truth rewards for scoring place-and-drill episodes, one per style.

use crate::domain::place_drill::{Board, Screw, DRILL, NO_OP};
use crate::synth::Style;

/// Reward for the robot taking `action` (alphabet id) at board `step`.
///
/// Efficient workers want each placed screw drilled at once: an effective drill earns 1 and
/// idling while a placed screw waits costs 1. Safe workers want no drilling until every
/// screw is placed: an early drill costs 1, a drill after that earns 1, and idling once all
/// screws are placed costs 1.
pub fn score(style: Style, step: usize, action: usize) -> f64 {
    let board = Board::from_step(step);
    let waiting = board.count(Screw::Placed) > 0;
    let all_placed = board.all_placed();
    let effective = DRILL.contains(&action) && board.drill_is_effective(action);
    match style {
        Style::Efficient => {
            if effective {
                1.0
            } else if action == NO_OP && waiting {
                -1.0
            } else {
                0.0
            }
        }
        Style::Safe => {
            if effective {
                if all_placed {
                    1.0
                } else {
                    -1.0
                }
            } else if action == NO_OP && all_placed && waiting {
                -1.0
            } else {
                0.0
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn board(label: &str) -> usize {
        let screws: Vec<Screw> = label
            .chars()
            .map(|c| match c {
                'U' => Screw::Unplaced,
                'P' => Screw::Placed,
                _ => Screw::Drilled,
            })
            .collect();
        Board([screws[0], screws[1], screws[2]]).step()
    }

    #[test]
    fn efficient_rewards_prompt_drilling() {
        assert_eq!(score(Style::Efficient, board("PUU"), DRILL[0]), 1.0);
        assert_eq!(score(Style::Efficient, board("PUU"), NO_OP), -1.0);
        assert_eq!(score(Style::Efficient, board("UUU"), NO_OP), 0.0);
        assert_eq!(score(Style::Efficient, board("PUU"), DRILL[1]), 0.0);
    }

    #[test]
    fn safe_rewards_waiting_for_all_screws() {
        assert_eq!(score(Style::Safe, board("PUU"), DRILL[0]), -1.0);
        assert_eq!(score(Style::Safe, board("PUU"), NO_OP), 0.0);
        assert_eq!(score(Style::Safe, board("PPP"), DRILL[2]), 1.0);
        assert_eq!(score(Style::Safe, board("DPP"), NO_OP), -1.0);
        assert_eq!(score(Style::Safe, board("DDD"), NO_OP), 0.0);
    }
}
