//! Shared instances and brute-force oracles for integration tests.
#![allow(dead_code)]

use rand::Rng;
use teamtype::momdp::{Momdp, ObservationModel, TypeDynamics, TypeRow};

pub fn random_distribution<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn sparse<R: Rng>(n: usize, rng: &mut R) -> Vec<(usize, f64)> {
    let mut support: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.6)).collect();
    if support.is_empty() {
        support.push(rng.gen_range(0..n));
    }
    let probs = random_distribution(support.len(), rng);
    support.into_iter().zip(probs).collect()
}

/// Random MOMDP with a non-trivial type process and a full `O(o | x', y', a)` table.
pub fn random_momdp<R: Rng>(nx: usize, ny: usize, na: usize, no: usize, rng: &mut R) -> Momdp {
    let transitions = (0..nx * ny * na).map(|_| sparse(nx, rng)).collect::<Vec<_>>();
    let mut rows = Vec::new();
    for x in 0..nx {
        for y in 0..ny {
            for a in 0..na {
                for &(next, _) in &transitions[(x * ny + y) * na + a] {
                    rows.push(TypeRow {
                        step: x,
                        type_index: y,
                        action: a,
                        next,
                        probs: random_distribution(ny, rng),
                    });
                }
            }
        }
    }
    Momdp {
        steps: (0..nx).map(|x| format!("x{x}")).collect(),
        types: (0..ny).map(|y| format!("y{y}")).collect(),
        actions: (0..na).map(|a| format!("a{a}")).collect(),
        observations: (0..no).map(|o| format!("o{o}")).collect(),
        available: vec![(0..na).collect(); nx],
        transitions,
        type_dynamics: TypeDynamics::Table { rows },
        observation_model: ObservationModel::Standard {
            rows: (0..nx * ny * na).map(|_| sparse(no, rng)).collect(),
        },
        rewards: (0..nx * ny * na).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect(),
        discount: 0.9,
        terminal: vec![false; nx],
        initial_step: 0,
        initial_belief: random_distribution(ny, rng),
    }
}

fn lookup(row: &[(usize, f64)], key: usize) -> f64 {
    row.iter().filter(|e| e.0 == key).map(|e| e.1).sum()
}

/// Joint Bayes by enumeration of `(y, y')` straight from the raw tables.
/// Returns `None` when the observation has zero probability.
pub fn joint_bayes(m: &Momdp, b: &[f64], x: usize, a: usize, next: usize, o: usize) -> Option<Vec<f64>> {
    let ny = m.types.len();
    let na = m.actions.len();
    let mut joint = vec![vec![0.0; ny]; ny];
    for y in 0..ny {
        let tx = lookup(&m.transitions[(x * ny + y) * na + a], next);
        let ty: Vec<f64> = match &m.type_dynamics {
            TypeDynamics::Static => (0..ny).map(|v| if v == y { 1.0 } else { 0.0 }).collect(),
            TypeDynamics::Table { rows } => rows
                .iter()
                .find(|r| r.step == x && r.type_index == y && r.action == a && r.next == next)
                .map(|r| r.probs.clone())
                .unwrap_or_else(|| (0..ny).map(|v| if v == y { 1.0 } else { 0.0 }).collect()),
        };
        for y2 in 0..ny {
            let obs = match &m.observation_model {
                ObservationModel::Standard { rows } => lookup(&rows[(next * ny + y2) * na + a], o),
                ObservationModel::Stationary { probs } => probs[y2][o],
                ObservationModel::Conditioned { rows } => rows
                    .iter()
                    .find(|r| r.step == x && r.action == a && r.next == next && r.type_index == y2)
                    .map_or(0.0, |r| lookup(&r.probs, o)),
            };
            joint[y][y2] = b[y] * tx * ty[y2] * obs;
        }
    }
    let marginal: Vec<f64> = (0..ny).map(|y2| (0..ny).map(|y| joint[y][y2]).sum()).collect();
    let total: f64 = marginal.iter().sum();
    (total > 0.0).then(|| marginal.into_iter().map(|p| p / total).collect())
}

/// Layered toy task: step 0, then four layers of two steps, then a terminal step 9.
/// Every episode ends after exactly five robot decisions.
pub fn toy_instance(seed: u64) -> Momdp {
    let mut rng = teamtype::par::rng(seed);
    let (nx, ny, na, no) = (10, 2, 2, 2);
    let layer = |x: usize| if x == 0 { 0 } else if x == 9 { 5 } else { (x + 1) / 2 };
    let mut transitions = Vec::new();
    let mut rewards = Vec::new();
    for x in 0..nx {
        for y in 0..ny {
            for a in 0..na {
                let l = layer(x);
                let row = if l == 5 {
                    vec![(9, 1.0)]
                } else if l == 4 {
                    vec![(9, 1.0)]
                } else {
                    let lo = 2 * l + 1;
                    let p = if (y + a) % 2 == 0 { 0.85 } else { 0.25 };
                    vec![(lo, p), (lo + 1, 1.0 - p)]
                };
                transitions.push(row);
                rewards.push(if l == 5 { 0.0 } else { 0.2 + rng.gen::<f64>() });
            }
        }
    }
    let obs_rows = (0..nx * ny * na)
        .map(|i| {
            let y2 = (i / na) % ny;
            let p = if y2 == 0 { 0.75 } else { 0.3 };
            vec![(0, p), (1, 1.0 - p)]
        })
        .collect();
    Momdp {
        steps: (0..nx).map(|x| format!("x{x}")).collect(),
        types: vec!["left".into(), "right".into()],
        actions: (0..na).map(|a| format!("a{a}")).collect(),
        observations: (0..no).map(|o| format!("o{o}")).collect(),
        available: (0..nx).map(|x| if x == 9 { vec![] } else { vec![0, 1] }).collect(),
        transitions,
        type_dynamics: TypeDynamics::Static,
        observation_model: ObservationModel::Standard { rows: obs_rows },
        rewards,
        discount: 0.95,
        terminal: (0..nx).map(|x| x == 9).collect(),
        initial_step: 0,
        initial_belief: vec![0.5, 0.5],
    }
}

/// Finite-horizon expectimax over the full belief tree, from the raw tables.
/// Returns the value and the maximizing action (lowest index on ties).
pub fn expectimax(m: &Momdp, x: usize, b: &[f64], horizon: usize) -> (f64, usize) {
    if horizon == 0 || m.terminal[x] {
        return (0.0, 0);
    }
    let ny = m.types.len();
    let na = m.actions.len();
    let mut best = (f64::NEG_INFINITY, 0);
    for &a in &m.available[x] {
        let mut q: f64 = (0..ny).map(|y| b[y] * m.rewards[(x * ny + y) * na + a]).sum();
        let mut nexts: Vec<usize> = (0..ny)
            .flat_map(|y| m.transitions[(x * ny + y) * na + a].iter().map(|e| e.0).collect::<Vec<_>>())
            .collect();
        nexts.sort();
        nexts.dedup();
        for next in nexts {
            for o in 0..m.observations.len() {
                // P(x', o | b, a) by enumeration
                let mut p = 0.0;
                for y in 0..ny {
                    let tx = lookup(&m.transitions[(x * ny + y) * na + a], next);
                    for y2 in 0..ny {
                        let ty = if y == y2 { 1.0 } else { 0.0 };
                        let obs = match &m.observation_model {
                            ObservationModel::Standard { rows } => lookup(&rows[(next * ny + y2) * na + a], o),
                            _ => unimplemented!("toy instances use the standard observation table"),
                        };
                        p += b[y] * tx * ty * obs;
                    }
                }
                if p == 0.0 {
                    continue;
                }
                let b2 = joint_bayes(m, b, x, a, next, o).unwrap();
                q += m.discount * p * expectimax(m, next, &b2, horizon - 1).0;
            }
        }
        if q > best.0 + 1e-12 {
            best = (q, a);
        }
    }
    best
}

/// A place-and-drill bundle trained on the default synthetic corpus, built once per test
/// binary.
pub fn place_drill_bundle() -> &'static teamtype::pipeline::TrainedBundle {
    use std::sync::OnceLock;
    use teamtype::domain::place_drill;
    use teamtype::pipeline::{train, TrainConfig};
    use teamtype::synth::PlaceDrillCorpus;
    static BUNDLE: OnceLock<teamtype::pipeline::TrainedBundle> = OnceLock::new();
    BUNDLE.get_or_init(|| {
        let (demos, _) = PlaceDrillCorpus::default().generate(7);
        let config = TrainConfig {
            k_max: 4,
            restarts: 10,
            n_points: 300,
            ..TrainConfig::default()
        };
        train(&demos, &place_drill::domain(), &config).expect("training succeeds")
    })
}

/// Training sequences whose ground-truth label is `label`.
pub fn labelled(bundle: &teamtype::pipeline::TrainedBundle, label: &str) -> Vec<teamtype::domain::DemoSequence> {
    bundle
        .training
        .sequences
        .iter()
        .filter(|s| s.label.as_deref() == Some(label))
        .cloned()
        .collect()
}
