//! Synthetic corpora with known ground truth, used by tests, benchmarks and the
//! evaluation harness.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::clustering::TransitionMatrix;
use crate::domain::place_drill::{DRILL, NO_OP, PLACE, WAIT};
use crate::domain::{place_drill, DemoSequence, DemoSet};
use crate::error::{Error, Result};
use crate::par;

/// Two alternating-actor transition matrices whose dominant successor differs in every row.
///
/// The first half of the alphabet is human actions, the second half robot actions.
#[derive(Debug, Clone)]
pub struct Generators {
    pub n_actions: usize,
    pub matrices: [TransitionMatrix; 2],
}

impl Generators {
    /// Each row puts `0.8` on one dominant successor of the other actor and spreads the
    /// rest evenly over that actor's remaining actions.
    pub fn well_separated(n_actions: usize, seed: u64) -> Self {
        Self::with_strength(n_actions, 0.8, seed)
    }

    pub fn with_strength(n_actions: usize, strength: f64, seed: u64) -> Self {
        assert!(n_actions >= 4 && n_actions % 2 == 0, "need an even alphabet of at least 4");
        let half = n_actions / 2;
        let mut rng = par::rng(seed);
        let (dom0, dom1) = loop {
            let a: Vec<usize> = random_perm(half, &mut rng).into_iter().chain(random_perm(half, &mut rng)).collect();
            let b: Vec<usize> = random_perm(half, &mut rng).into_iter().chain(random_perm(half, &mut rng)).collect();
            if a.iter().zip(&b).all(|(x, y)| x != y) {
                break (a, b);
            }
        };
        let build = |dom: &[usize]| {
            let rows = (0..n_actions)
                .map(|j| {
                    let offset = if j < half { half } else { 0 };
                    let mut row = vec![0.0; n_actions];
                    for i in 0..half {
                        row[offset + i] = if i == dom[j] {
                            strength
                        } else {
                            (1.0 - strength) / (half - 1) as f64
                        };
                    }
                    row
                })
                .collect();
            TransitionMatrix::from_rows(rows).expect("generator rows are stochastic")
        };
        Self {
            n_actions,
            matrices: [build(&dom0), build(&dom1)],
        }
    }

    /// Samples one sequence from generator `which`, starting from a random human action.
    pub fn sample<R: Rng>(&self, which: usize, len: usize, rng: &mut R) -> DemoSequence {
        let m = &self.matrices[which];
        let mut seq = vec![rng.gen_range(0..self.n_actions / 2)];
        while seq.len() < len {
            let prev = *seq.last().unwrap();
            seq.push(sample_index(m.row(prev), rng));
        }
        DemoSequence::new(seq)
    }
}

fn random_perm<R: Rng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    v
}

/// Index drawn in proportion to the (not necessarily normalized) weights.
pub(crate) fn sample_index<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// `n` sequences with lengths in `[min_len, max_len]`, three per subject; subject `s`
/// belongs to generator `s % 2`. Returns the sequences and their generator labels.
pub fn two_generator_corpus(
    generators: &Generators,
    n: usize,
    min_len: usize,
    max_len: usize,
    seed: u64,
) -> (Vec<DemoSequence>, Vec<usize>) {
    let mut rng = par::rng(seed);
    let mut seqs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let subject = i / 3;
        let which = subject % 2;
        let len = rng.gen_range(min_len..=max_len);
        seqs.push(
            generators
                .sample(which, len, &mut rng)
                .with_subject(format!("s{:02}", subject + 1))
                .with_label(format!("type{which}")),
        );
        labels.push(which);
    }
    (seqs, labels)
}

// ---- place-and-drill personas ----------------------------------------------------------------

/// Ground-truth type of a synthetic place-and-drill subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Style {
    /// Every screw is placed before drilling starts.
    Safe,
    /// Each screw is drilled right after it is placed.
    Efficient,
}

impl Style {
    pub fn label(self) -> &'static str {
        match self {
            Style::Safe => "safe",
            Style::Efficient => "efficient",
        }
    }

    pub fn from_label(label: &str) -> Option<Style> {
        match label {
            "safe" => Some(Style::Safe),
            "efficient" => Some(Style::Efficient),
            _ => None,
        }
    }
}

/// A simulated subject: a style plus a preferred screw placement order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Persona {
    pub subject: String,
    pub style: Style,
    pub order: [usize; 3],
}

const ORDERS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

impl Persona {
    /// The full demonstration for a given placement order.
    pub fn demonstration(&self, order: [usize; 3]) -> DemoSequence {
        let mut actions = Vec::new();
        match self.style {
            Style::Efficient => {
                for s in order {
                    actions.extend([PLACE[s], DRILL[s]]);
                }
            }
            Style::Safe => {
                for (i, s) in order.iter().enumerate() {
                    actions.push(PLACE[*s]);
                    if i + 1 < order.len() {
                        actions.push(NO_OP);
                    }
                }
                for (i, s) in order.iter().enumerate() {
                    if i > 0 {
                        actions.push(WAIT);
                    }
                    actions.push(DRILL[*s]);
                }
            }
        }
        DemoSequence::new(actions)
            .with_subject(self.subject.clone())
            .with_label(self.style.label())
    }
}

/// Place-and-drill corpus configuration.
#[derive(Debug, Clone, Copy)]
pub struct PlaceDrillCorpus {
    pub subjects_per_style: usize,
    pub demos_per_subject: usize,
    /// Probability that a demonstration uses a random placement order instead of the
    /// subject's preferred one.
    pub order_noise: f64,
}

impl Default for PlaceDrillCorpus {
    fn default() -> Self {
        Self {
            subjects_per_style: 6,
            demos_per_subject: 3,
            order_noise: 0.1,
        }
    }
}

impl PlaceDrillCorpus {
    /// Subjects alternate safe/efficient; the `i`-th subject of a style prefers the
    /// `i mod 6`-th placement order.
    pub fn personas(&self) -> Vec<Persona> {
        (0..self.subjects_per_style * 2)
            .map(|i| Persona {
                subject: format!("s{:02}", i + 1),
                style: if i % 2 == 0 { Style::Safe } else { Style::Efficient },
                order: ORDERS[(i / 2) % ORDERS.len()],
            })
            .collect()
    }

    pub fn generate(&self, seed: u64) -> (DemoSet, Vec<Persona>) {
        let personas = self.personas();
        let mut rng = par::rng(seed);
        let mut seqs = Vec::new();
        for p in &personas {
            for _ in 0..self.demos_per_subject {
                let order = if rng.gen::<f64>() < self.order_noise {
                    *ORDERS.choose(&mut rng).unwrap()
                } else {
                    p.order
                };
                seqs.push(p.demonstration(order));
            }
        }
        let set = DemoSet::new(place_drill::alphabet(), seqs).expect("personas emit valid sequences");
        (set, personas)
    }
}

/// Rebuilds personas from a labelled place-and-drill corpus: the style is the majority
/// sequence label, the order the most frequent placement order (first seen wins ties).
pub fn personas_from_demos(demos: &DemoSet) -> Result<Vec<Persona>> {
    let mut out = Vec::new();
    for (subject, idx) in demos.by_subject() {
        let mut styles = [0usize; 2];
        let mut orders: Vec<([usize; 3], usize)> = Vec::new();
        for &i in &idx {
            let seq = &demos.sequences[i];
            match seq.label.as_deref().and_then(Style::from_label) {
                Some(Style::Safe) => styles[0] += 1,
                Some(Style::Efficient) => styles[1] += 1,
                None => {
                    return Err(Error::InvalidArgument(format!(
                        "sequence {i} of {subject} needs a 'safe' or 'efficient' label"
                    )))
                }
            }
            let placed: Vec<usize> = seq.elements.iter().filter_map(|a| PLACE.iter().position(|p| p == a)).collect();
            let order: [usize; 3] = placed
                .try_into()
                .map_err(|_| Error::InvalidArgument(format!("sequence {i} of {subject} does not place every screw once")))?;
            match orders.iter_mut().find(|(o, _)| *o == order) {
                Some((_, n)) => *n += 1,
                None => orders.push((order, 1)),
            }
        }
        let best = orders.iter().map(|o| o.1).max().unwrap_or(0);
        let Some(&(order, _)) = orders.iter().find(|o| o.1 == best) else { continue };
        out.push(Persona {
            subject,
            style: if styles[1] > styles[0] { Style::Efficient } else { Style::Safe },
            order,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_alternate_and_differ() {
        let g = Generators::well_separated(8, 1);
        let mut rng = par::rng(2);
        for which in 0..2 {
            let s = g.sample(which, 12, &mut rng);
            for w in s.elements.windows(2) {
                assert_ne!(w[0] < 4, w[1] < 4, "actors must alternate");
            }
        }
        for j in 0..8 {
            let d0 = g.matrices[0].row(j).iter().position(|&p| p == 0.8);
            let d1 = g.matrices[1].row(j).iter().position(|&p| p == 0.8);
            assert_ne!(d0, d1);
        }
    }

    #[test]
    fn personas_replay_to_the_terminal_step() {
        let d = place_drill::domain();
        let (set, personas) = PlaceDrillCorpus::default().generate(3);
        assert_eq!(personas.len(), 12);
        assert_eq!(set.sequences.len(), 36);
        for s in &set.sequences {
            let traj = d.trajectory(s).unwrap();
            assert!(d.is_terminal(*traj.last().unwrap()));
        }
        let safe = &set.sequences[0];
        assert_eq!(safe.len(), 10);
        assert_eq!(set.sequences[3].len(), 6);
    }

    #[test]
    fn personas_survive_a_round_trip_through_demos() {
        let corpus = PlaceDrillCorpus {
            order_noise: 0.0,
            ..PlaceDrillCorpus::default()
        };
        let (set, personas) = corpus.generate(9);
        assert_eq!(personas_from_demos(&set).unwrap(), personas);
    }
}
