//! Gaussian mixture models with full covariances.

mod em;
mod kmeans;
mod select;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
pub use em::{fit_em, fit_em_traced, EmConfig};
pub use kmeans::{kmeans_init, KMEANS_MAX_ITER, KMEANS_RESTARTS};
pub use select::{bic, derive_seed, free_parameters, select_k, select_k_report, BicEntry, SelectionReport};

use crate::error::{Error, Result};

/// Samples as rows, dimensions as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix(DMatrix<f64>);

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        let (n, d) = values.shape();
        if d == 0 {
            return Err(Error::InvalidArgument("data has no columns".into()));
        }
        if n < d + 1 {
            return Err(Error::InsufficientData {
                needed: d + 1,
                got: n,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("data contains non-finite values".into()));
        }
        Ok(DataMatrix(values))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::LengthMismatch {
                left: d,
                right: rows[i].len(),
            });
        }
        Self::new(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
    }

    pub fn n_samples(&self) -> usize {
        self.0.nrows()
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.0.row(i).transpose()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn mean(&self) -> DVector<f64> {
        self.0.row_mean().transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    pub components: Vec<GaussianComponent>,
    pub dim: usize,
    /// Log-likelihood of the training data under the final parameters.
    pub log_likelihood: f64,
    pub seed: u64,
}

impl MixtureModel {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    /// Checks dimensions, weight normalization and positive definiteness.
    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::validation("components", "mixture has no components"));
        }
        let mut total = 0.0;
        for (k, c) in self.components.iter().enumerate() {
            if c.mean.len() != self.dim || c.covariance.shape() != (self.dim, self.dim) {
                return Err(Error::validation(
                    format!("components[{k}]"),
                    "dimension does not match the model",
                ));
            }
            if !(c.weight > 0.0 && c.weight <= 1.0) {
                return Err(Error::validation(
                    format!("components[{k}].weight"),
                    format!("weight {} outside (0, 1]", c.weight),
                ));
            }
            LogDensity::new(&c.mean, &c.covariance).map_err(|_| {
                Error::validation(
                    format!("components[{k}].covariance"),
                    "covariance is not positive definite",
                )
            })?;
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::validation(
                "components",
                format!("weights sum to {total}"),
            ));
        }
        Ok(())
    }

    /// Log of the mixture density at `x`.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        let densities = self.densities()?;
        let terms: Vec<f64> = self
            .components
            .iter()
            .zip(&densities)
            .map(|(c, d)| c.weight.ln() + d.eval(x))
            .collect();
        Ok(log_sum_exp(&terms))
    }

    /// Total log-likelihood of `data`.
    pub fn log_likelihood_of(&self, data: &DataMatrix) -> Result<f64> {
        if data.dim() != self.dim {
            return Err(Error::LengthMismatch {
                left: self.dim,
                right: data.dim(),
            });
        }
        let densities = self.densities()?;
        let log_weights: Vec<f64> = self.components.iter().map(|c| c.weight.ln()).collect();
        let mut terms = vec![0.0; self.k()];
        let mut row = vec![0.0; self.dim];
        let mut total = 0.0;
        for i in 0..data.n_samples() {
            copy_row(data, i, &mut row);
            for (t, (lw, d)) in terms.iter_mut().zip(log_weights.iter().zip(&densities)) {
                *t = lw + d.eval(&row);
            }
            total += log_sum_exp(&terms);
        }
        Ok(total)
    }

    pub(crate) fn densities(&self) -> Result<Vec<LogDensity>> {
        self.components
            .iter()
            .enumerate()
            .map(|(k, c)| {
                LogDensity::new(&c.mean, &c.covariance).map_err(|_| Error::NotPositiveDefinite {
                    context: format!("component {k}"),
                })
            })
            .collect()
    }
}

/// Multivariate normal log-density with a cached Cholesky factor.
#[derive(Debug, Clone)]
pub(crate) struct LogDensity {
    mean: Vec<f64>,
    /// Lower Cholesky factor, row-major.
    lower: Vec<f64>,
    log_norm: f64,
}

impl LogDensity {
    pub(crate) fn new(mean: &DVector<f64>, covariance: &DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        let chol = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite {
                context: "covariance".into(),
            })?;
        let l = chol.l();
        let log_det: f64 = 2.0 * (0..d).map(|i| l[(i, i)].ln()).sum::<f64>();
        if !log_det.is_finite() {
            return Err(Error::NotPositiveDefinite {
                context: "covariance".into(),
            });
        }
        let lower = (0..d * d).map(|idx| l[(idx / d, idx % d)]).collect();
        Ok(LogDensity {
            mean: mean.iter().copied().collect(),
            lower,
            log_norm: -0.5 * (d as f64 * (2.0 * PI).ln() + log_det),
        })
    }

    /// Squared Mahalanobis distance of `x` from the mean.
    pub(crate) fn mahalanobis_sq(&self, x: &[f64]) -> f64 {
        let d = self.mean.len();
        let mut z = [0.0f64; 16];
        let mut heap;
        let z: &mut [f64] = if d <= 16 {
            &mut z[..d]
        } else {
            heap = vec![0.0; d];
            &mut heap
        };
        let mut sum = 0.0;
        for i in 0..d {
            let row = &self.lower[i * d..i * d + i];
            let acc = x[i] - self.mean[i] - row.iter().zip(&z[..i]).map(|(l, v)| l * v).sum::<f64>();
            z[i] = acc / self.lower[i * d + i];
            sum += z[i] * z[i];
        }
        sum
    }

    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        self.log_norm - 0.5 * self.mahalanobis_sq(x)
    }
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

pub(crate) fn copy_row(data: &DataMatrix, i: usize, out: &mut [f64]) {
    for (j, v) in out.iter_mut().enumerate() {
        *v = data.0[(i, j)];
    }
}

/// Variance floor added to a covariance estimate: `max(1e-6·tr(Σ)/D, 1e-10)`.
pub fn variance_floor(covariance: &DMatrix<f64>) -> f64 {
    let d = covariance.nrows() as f64;
    (1e-6 * covariance.trace() / d).max(1e-10)
}

/// Symmetrizes and adds the variance floor to the diagonal.
pub fn regularize(covariance: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = (covariance + covariance.transpose()) * 0.5;
    let floor = variance_floor(&out);
    for i in 0..out.nrows() {
        out[(i, i)] += floor;
    }
    out
}
