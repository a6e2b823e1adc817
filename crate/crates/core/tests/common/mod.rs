//! Generators and independent reference implementations shared by the
//! integration tests.

#![allow(dead_code)]

use std::f64::consts::PI;

use dressing_core::geometry::{build_frame, ArmPosture, Point3};
use dressing_core::mixture::{DataMatrix, GaussianComponent, MixtureModel};
use nalgebra::{DMatrix, DVector, Isometry3, Translation3, UnitQuaternion, Vector3, Quaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_vector(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        );
        let n = v.norm();
        if n > 1e-6 {
            return v / n;
        }
    }
}

/// A posture with segment lengths in [0.15, 0.45] m, an elbow angle bounded
/// away from 0 and π, and the foot of the perpendicular from the elbow
/// strictly inside the wrist–shoulder segment.
pub fn random_posture(rng: &mut ChaCha8Rng) -> ArmPosture {
    loop {
        let p = random_posture_any(rng);
        if foot_inside_segment(&p) {
            return p;
        }
    }
}

/// Whether the elbow projects strictly between wrist and shoulder, which
/// holds whenever the elbow angle is at least π/2.
pub fn foot_inside_segment(p: &ArmPosture) -> bool {
    (p.shoulder - p.wrist).dot(&(p.elbow - p.wrist)) > 0.0
        && (p.wrist - p.shoulder).dot(&(p.elbow - p.shoulder)) > 0.0
}

/// Like [`random_posture`] without the constraint on the perpendicular foot.
pub fn random_posture_any(rng: &mut ChaCha8Rng) -> ArmPosture {
    loop {
        let elbow = Point3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let fore = unit_vector(rng) * rng.random_range(0.15..0.45);
        let upper = unit_vector(rng) * rng.random_range(0.15..0.45);
        let sin_psi = fore.cross(&upper).norm() / (fore.norm() * upper.norm());
        if sin_psi < 0.05 {
            continue;
        }
        let posture = ArmPosture::new(elbow + fore, elbow, elbow + upper).unwrap();
        if build_frame(&posture).is_ok() {
            return posture;
        }
    }
}

pub fn random_isometry(rng: &mut ChaCha8Rng) -> Isometry3<f64> {
    let q = Quaternion::new(
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
        rng.sample::<f64, _>(StandardNormal),
    );
    let t = Translation3::new(
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
    );
    Isometry3::from_parts(t, UnitQuaternion::from_quaternion(q))
}

/// Smallest absolute difference between two angles.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

/// Sorted abscissae in [0, 10] and a sine with Gaussian noise plus a few
/// gross outliers.
pub fn noisy_series(seed: u64, n: usize, sigma: f64) -> (Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let mut xs: Vec<f64> = (0..n).map(|_| r.random_range(0.0..10.0)).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let noise = Normal::new(0.0, sigma).unwrap();
    let ys = xs
        .iter()
        .map(|&x| {
            let outlier = if r.random_bool(0.03) { 2.0 } else { 0.0 };
            x.sin() + noise.sample(&mut r) + outlier
        })
        .collect();
    (xs, ys)
}

/// LOWESS evaluated the slow way: every fit sorts all distances to find the
/// bandwidth, weights every sample, and solves the 2×2 normal equations by
/// Cramer's rule in coordinates centred on the query point.
pub fn lowess_oracle(xs: &[f64], ys: &[f64], fraction: f64, iterations: usize) -> Vec<f64> {
    let n = xs.len();
    let q = ((fraction * n as f64).ceil() as usize).clamp(2, n);
    let tricube = |u: f64| if u < 1.0 { (1.0 - u.powi(3)).powi(3) } else { 0.0 };
    let bisquare = |u: f64| if u.abs() < 1.0 { (1.0 - u * u).powi(2) } else { 0.0 };
    let fit = |robust: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let mut d: Vec<f64> = xs.iter().map(|x| (x - xs[i]).abs()).collect();
                d.sort_by(f64::total_cmp);
                let h = d[q - 1];
                let (mut s0, mut s1, mut s2, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for j in 0..n {
                    let dx = xs[j] - xs[i];
                    let w = tricube(dx.abs() / h) * robust[j];
                    s0 += w;
                    s1 += w * dx;
                    s2 += w * dx * dx;
                    t0 += w * ys[j];
                    t1 += w * dx * ys[j];
                }
                // Intercept of the local line in coordinates centred on xs[i].
                (t0 * s2 - s1 * t1) / (s0 * s2 - s1 * s1)
            })
            .collect()
    };
    let range = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - ys.iter().copied().fold(f64::INFINITY, f64::min);
    let mut robust = vec![1.0; n];
    let mut fitted = fit(&robust);
    for _ in 0..iterations {
        let mut res: Vec<f64> = ys.iter().zip(&fitted).map(|(y, f)| (y - f).abs()).collect();
        res.sort_by(f64::total_cmp);
        let m = if n % 2 == 1 {
            res[n / 2]
        } else {
            (res[n / 2 - 1] + res[n / 2]) / 2.0
        };
        if m <= 1e-12 * range {
            break;
        }
        for j in 0..n {
            robust[j] = bisquare((ys[j] - fitted[j]) / (6.0 * m));
        }
        fitted = fit(&robust);
    }
    fitted
}

/// Samples from an isotropic 2-D mixture of three well separated clusters.
pub fn three_clusters(seed: u64, per_cluster: usize) -> DataMatrix {
    let centers = [(0.0, 0.0), (6.0, 0.0), (3.0, 5.5)];
    let mut r = rng(seed);
    let noise = Normal::new(0.0, 0.7).unwrap();
    let mut rows = Vec::new();
    for &(cx, cy) in &centers {
        for _ in 0..per_cluster {
            rows.push(vec![cx + noise.sample(&mut r), cy + noise.sample(&mut r)]);
        }
    }
    DataMatrix::from_rows(&rows).unwrap()
}

/// A random symmetric positive definite matrix `A Aᵀ + εI`.
pub fn random_spd(rng: &mut ChaCha8Rng, d: usize, eps: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    &a * a.transpose() + DMatrix::identity(d, d) * eps
}

pub fn random_component(rng: &mut ChaCha8Rng, d: usize, weight: f64) -> GaussianComponent {
    GaussianComponent {
        weight,
        mean: DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0)),
        covariance: random_spd(rng, d, 0.3),
    }
}

pub fn mixture(components: Vec<GaussianComponent>) -> MixtureModel {
    let dim = components[0].mean.len();
    MixtureModel {
        components,
        dim,
        log_likelihood: 0.0,
        seed: 0,
    }
}

fn pick(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Mixture regression from the textbook formulas with explicit matrix
/// inverses and densities evaluated in the linear domain.
pub fn gmr_oracle(
    model: &MixtureModel,
    inputs: &[usize],
    outputs: &[usize],
    x: &[f64],
) -> (DVector<f64>, DMatrix<f64>) {
    let x = DVector::from_column_slice(x);
    let di = inputs.len() as f64;
    let mut betas = Vec::new();
    let mut means = Vec::new();
    let mut covs = Vec::new();
    for c in &model.components {
        let mu_i = DVector::from_fn(inputs.len(), |k, _| c.mean[inputs[k]]);
        let mu_o = DVector::from_fn(outputs.len(), |k, _| c.mean[outputs[k]]);
        let s_ii = pick(&c.covariance, inputs, inputs);
        let s_oi = pick(&c.covariance, outputs, inputs);
        let s_io = pick(&c.covariance, inputs, outputs);
        let s_oo = pick(&c.covariance, outputs, outputs);
        let inv = s_ii.clone().try_inverse().unwrap();
        let diff = &x - &mu_i;
        let q = (diff.transpose() * &inv * &diff)[(0, 0)];
        let density =
            (-0.5 * q).exp() / ((2.0 * PI).powf(di) * s_ii.determinant()).sqrt();
        betas.push(c.weight * density);
        means.push(&mu_o + &s_oi * &inv * &diff);
        covs.push(&s_oo - &s_oi * &inv * &s_io);
    }
    let total: f64 = betas.iter().sum();
    let d_o = outputs.len();
    let mut mean = DVector::zeros(d_o);
    for (b, m) in betas.iter().zip(&means) {
        mean += m * (b / total);
    }
    let mut cov = DMatrix::zeros(d_o, d_o);
    for ((b, m), s) in betas.iter().zip(&means).zip(&covs) {
        cov += (s + m * m.transpose()) * (b / total);
    }
    cov -= &mean * mean.transpose();
    (mean, cov)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
