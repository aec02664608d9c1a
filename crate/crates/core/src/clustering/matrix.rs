use serde::{Deserialize, Serialize};

use crate::domain::DemoSequence;
use crate::error::{Error, Result};

/// Row-stochastic `|A| x |A|` matrix; `prob(prev, next)` is the probability of `next`
/// following `prev`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct TransitionMatrix {
    n: usize,
    probs: Vec<f64>,
    #[serde(skip)]
    logs: Vec<f64>,
}

impl TransitionMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Model("transition matrix must be square and non-empty".into()));
        }
        for (j, r) in rows.iter().enumerate() {
            let total: f64 = r.iter().sum();
            if r.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                return Err(Error::Model(format!("transition row {j} is not a distribution (sum {total})")));
            }
        }
        Ok(Self::from_probs(n, rows.into_iter().flatten().collect()))
    }

    fn from_probs(n: usize, probs: Vec<f64>) -> Self {
        let logs = probs.iter().map(|p| p.ln()).collect();
        Self { n, probs, logs }
    }

    /// Smoothed maximum-likelihood estimate: `(count + pseudo) / (row total + pseudo * n)`.
    pub fn from_counts(n: usize, counts: &[f64], pseudo: f64) -> Self {
        assert_eq!(counts.len(), n * n);
        let mut probs = Vec::with_capacity(n * n);
        for row in counts.chunks(n) {
            let total: f64 = row.iter().sum::<f64>() + pseudo * n as f64;
            if total > 0.0 {
                probs.extend(row.iter().map(|c| (c + pseudo) / total));
            } else {
                probs.extend(std::iter::repeat(1.0 / n as f64).take(n));
            }
        }
        Self::from_probs(n, probs)
    }

    /// Smoothed estimate from every transition in `sequences`.
    pub fn estimate<'a>(n: usize, sequences: impl IntoIterator<Item = &'a DemoSequence>, pseudo: f64) -> Self {
        let mut counts = vec![0.0; n * n];
        for s in sequences {
            for (a, b) in s.transitions() {
                counts[a * n + b] += 1.0;
            }
        }
        Self::from_counts(n, &counts, pseudo)
    }

    /// Random rows drawn from a flat Dirichlet.
    pub fn random<R: rand::Rng>(n: usize, rng: &mut R) -> Self {
        let mut probs = Vec::with_capacity(n * n);
        for _ in 0..n {
            let row: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let total: f64 = row.iter().sum();
            probs.extend(row.into_iter().map(|x| x / total));
        }
        Self::from_probs(n, probs)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn prob(&self, prev: usize, next: usize) -> f64 {
        self.probs[prev * self.n + next]
    }

    pub fn log_prob(&self, prev: usize, next: usize) -> f64 {
        self.logs[prev * self.n + next]
    }

    pub fn row(&self, prev: usize) -> &[f64] {
        &self.probs[prev * self.n..(prev + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.probs.chunks(self.n).map(|r| r.to_vec()).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for TransitionMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<TransitionMatrix> for Vec<Vec<f64>> {
    fn from(m: TransitionMatrix) -> Self {
        m.rows()
    }
}

/// Log-probability of a sequence under one transition matrix (the first action is given).
pub fn sequence_loglik(seq: &DemoSequence, theta: &TransitionMatrix) -> f64 {
    seq.transitions().map(|(a, b)| theta.log_prob(a, b)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn certain_transition_has_zero_loglik() {
        let m = TransitionMatrix::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(sequence_loglik(&DemoSequence::new(vec![0, 1]), &m), 0.0);
    }

    #[test]
    fn two_half_transitions() {
        let m = TransitionMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let ll = sequence_loglik(&DemoSequence::new(vec![0, 1, 0]), &m);
        assert!((ll - 0.25f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn matches_direct_product_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = TransitionMatrix::random(10, &mut rng);
            let seq = DemoSequence::new((0..8).map(|_| rng.gen_range(0..10)).collect());
            let product: f64 = seq.elements.windows(2).map(|w| m.rows()[w[0]][w[1]]).product();
            let ll = sequence_loglik(&seq, &m);
            assert!((ll - product.ln()).abs() < 1e-12, "{ll} vs {}", product.ln());
        }
    }

    #[test]
    fn laplace_smoothing() {
        let seq = DemoSequence::new(vec![0, 1, 0, 1]);
        let m = TransitionMatrix::estimate(3, [&seq], 1.0);
        // row 0: two counts on 1 -> (0+1, 2+1, 0+1) / 5
        assert_eq!(m.row(0), &[0.2, 0.6, 0.2]);
        // row 1: one count on 0 -> (1+1, 0+1, 0+1) / 4
        assert_eq!(m.row(1), &[0.5, 0.25, 0.25]);
        // row 2 unseen -> uniform
        assert!(m.row(2).iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
        assert!(sequence_loglik(&DemoSequence::new(vec![2, 2]), &m).is_finite());
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        assert!(TransitionMatrix::from_rows(vec![vec![0.5, 0.4], vec![0.5, 0.5]]).is_err());
        assert!(TransitionMatrix::from_rows(vec![vec![1.0]]).is_ok());
        assert!(TransitionMatrix::from_rows(vec![vec![1.0, 0.0]]).is_err());
    }
}
