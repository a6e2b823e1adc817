use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{regularize, DataMatrix, GaussianComponent};
use crate::error::{Error, Result};

pub const KMEANS_RESTARTS: usize = 10;
pub const KMEANS_MAX_ITER: usize = 100;

struct Clustering {
    assignment: Vec<usize>,
    inertia: f64,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn rows(data: &DataMatrix) -> Vec<Vec<f64>> {
    (0..data.n_samples())
        .map(|i| data.matrix().row(i).iter().copied().collect())
        .collect()
}

fn plus_plus_seeds(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centers = vec![points[rng.random_range(0..n)].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            nearest
                .iter()
                .position(|&d| {
                    acc += d;
                    acc > target
                })
                .unwrap_or_else(|| nearest.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            rng.random_range(0..n)
        };
        let c = points[pick].clone();
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    centers
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> Clustering {
    let n = points.len();
    let k = centers.len();
    let dim = points[0].len();
    let mut assignment = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| sq_dist(p, &centers[a]).total_cmp(&sq_dist(p, &centers[b])))
                .unwrap();
            if assignment[i] != best {
                assignment[i] = best;
                changed = true;
            }
        }
        // An empty cluster takes over the point farthest from its centroid.
        loop {
            let mut counts = vec![0usize; k];
            assignment.iter().for_each(|&a| counts[a] += 1);
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let far = (0..n)
                .filter(|&i| counts[assignment[i]] > 1)
                .max_by(|&a, &b| {
                    sq_dist(&points[a], &centers[assignment[a]])
                        .total_cmp(&sq_dist(&points[b], &centers[assignment[b]]))
                })
                .unwrap();
            assignment[far] = empty;
            centers[empty] = points[far].clone();
            changed = true;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            sums[a].iter_mut().zip(p).for_each(|(s, v)| *s += v);
        }
        for ((c, s), &m) in centers.iter_mut().zip(sums).zip(&counts) {
            *c = s.into_iter().map(|v| v / m as f64).collect();
        }
        if !changed {
            break;
        }
    }
    let inertia = points
        .iter()
        .zip(&assignment)
        .map(|(p, &a)| sq_dist(p, &centers[a]))
        .sum();
    Clustering {
        assignment,
        inertia,
    }
}

/// Hard-partition initialization for EM: k-means++ seeding and Lloyd
/// iterations, best of [`KMEANS_RESTARTS`] by inertia.
///
/// Each component receives its cluster mean, the regularized maximum
/// likelihood covariance of its members, and its share of the samples.
pub fn kmeans_init(data: &DataMatrix, k: usize, seed: u64) -> Result<Vec<GaussianComponent>> {
    let n = data.n_samples();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::TooManyClusters { k, n });
    }
    let points = rows(data);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<Clustering> = None;
    for _ in 0..KMEANS_RESTARTS {
        let centers = plus_plus_seeds(&points, k, &mut rng);
        let run = lloyd(&points, centers);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.unwrap();

    let dim = data.dim();
    Ok((0..k)
        .map(|c| {
            let members: Vec<&Vec<f64>> = points
                .iter()
                .zip(&best.assignment)
                .filter(|(_, &a)| a == c)
                .map(|(p, _)| p)
                .collect();
            let m = members.len() as f64;
            let mean = DVector::from_fn(dim, |j, _| members.iter().map(|p| p[j]).sum::<f64>() / m);
            let mut cov = DMatrix::zeros(dim, dim);
            for p in &members {
                let diff = DVector::from_fn(dim, |j, _| p[j] - mean[j]);
                cov += &diff * diff.transpose();
            }
            cov /= m;
            GaussianComponent {
                weight: m / n as f64,
                mean,
                covariance: regularize(&cov),
            }
        })
        .collect())
}
