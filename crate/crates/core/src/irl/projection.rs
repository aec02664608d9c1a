//! Euclidean projection of a point onto the convex hull of finitely many vectors.

/// Stop once no vertex decreases `½‖target − x‖²` faster than this rate.
pub const PROJECTION_TOLERANCE: f64 = 1e-6;
pub const PROJECTION_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Mixture weights over the vertices, non-negative and summing to one.
    pub lambdas: Vec<f64>,
    pub point: Vec<f64>,
    pub distance: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Directional derivative of `½‖target − x‖²` when moving from `x` toward each vertex.
pub fn directional_derivatives(target: &[f64], vertices: &[Vec<f64>], point: &[f64]) -> Vec<f64> {
    let r: Vec<f64> = target.iter().zip(point).map(|(t, x)| t - x).collect();
    vertices
        .iter()
        .map(|v| {
            let d: Vec<f64> = v.iter().zip(point).map(|(a, b)| a - b).collect();
            -dot(&r, &d)
        })
        .collect()
}

/// Pairwise Frank-Wolfe with exact line search on `½‖target − Vλ‖²` over the simplex.
pub fn project_onto_hull(target: &[f64], vertices: &[Vec<f64>]) -> Projection {
    assert!(!vertices.is_empty(), "projection needs at least one vertex");
    let n = vertices.len();
    // Start from the closest vertex.
    let first = (0..n)
        .map(|j| {
            let d: f64 = target.iter().zip(&vertices[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            (j, d)
        })
        .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc })
        .0;
    let mut lambdas = vec![0.0; n];
    lambdas[first] = 1.0;
    let mut point = vertices[first].clone();
    let mut iterations = 0;

    while iterations < PROJECTION_MAX_ITERATIONS {
        let r: Vec<f64> = target.iter().zip(&point).map(|(t, x)| t - x).collect();
        let scores: Vec<f64> = vertices.iter().map(|v| dot(&r, v)).collect();
        let toward = (0..n).fold(0, |best, j| if scores[j] > scores[best] { j } else { best });
        let current = dot(&r, &point);
        if scores[toward] - current <= PROJECTION_TOLERANCE {
            break;
        }
        let away = (0..n)
            .filter(|&j| lambdas[j] > 0.0)
            .fold(None, |best: Option<usize>, j| match best {
                Some(b) if scores[b] <= scores[j] => Some(b),
                _ => Some(j),
            })
            .expect("some vertex carries weight");
        let d: Vec<f64> = vertices[toward].iter().zip(&vertices[away]).map(|(a, b)| a - b).collect();
        let dd = dot(&d, &d);
        if dd == 0.0 {
            break;
        }
        let step = (dot(&r, &d) / dd).clamp(0.0, lambdas[away]);
        if step == 0.0 {
            break;
        }
        lambdas[toward] += step;
        lambdas[away] -= step;
        if lambdas[away] < 1e-15 {
            lambdas[away] = 0.0;
        }
        point.iter_mut().zip(&d).for_each(|(x, di)| *x += step * di);
        iterations += 1;
    }
    // Re-derive the point from the weights to shed accumulated drift.
    let total: f64 = lambdas.iter().sum();
    lambdas.iter_mut().for_each(|l| *l /= total);
    let point: Vec<f64> = (0..target.len())
        .map(|i| vertices.iter().zip(&lambdas).map(|(v, l)| l * v[i]).sum())
        .collect();
    let distance = target.iter().zip(&point).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Projection {
        lambdas,
        point,
        distance,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn segment_projection() {
        let p = project_onto_hull(&[0.5, 1.0], &[vec![0.0, 0.0], vec![1.0, 0.0]]);
        assert!((p.distance - 1.0).abs() < 1e-9);
        assert!((p.lambdas[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn interior_point_has_zero_distance() {
        let verts = vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.0, 2.0]];
        let p = project_onto_hull(&[0.5, 0.5], &verts);
        assert!(p.distance < 1e-6);
    }

    #[test]
    fn single_vertex() {
        let p = project_onto_hull(&[1.0, 1.0], &[vec![0.0, 1.0]]);
        assert_eq!(p.lambdas, vec![1.0]);
        assert!((p.distance - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kkt_holds_on_random_hulls() {
        let mut rng = crate::par::rng(4);
        for _ in 0..50 {
            let d = rng.gen_range(2..10);
            let n = rng.gen_range(1..15);
            let verts: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen::<f64>() * 5.0).collect()).collect();
            let target: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() * 6.0 - 0.5).collect();
            let p = project_onto_hull(&target, &verts);
            assert!(p.lambdas.iter().all(|&l| l >= 0.0));
            assert!((p.lambdas.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for g in directional_derivatives(&target, &verts, &p.point) {
                assert!(g >= -1e-6, "descent direction {g}");
            }
        }
    }
}
