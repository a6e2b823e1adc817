use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{copy_row, log_sum_exp, regularize, DataMatrix, GaussianComponent, LogDensity, MixtureModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmConfig {
    /// Stop once the relative log-likelihood gain drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            tolerance: 1e-6,
            max_iterations: 200,
        }
    }
}

/// Fits a mixture by expectation-maximization starting from `init`.
pub fn fit_em(data: &DataMatrix, init: &[GaussianComponent], config: &EmConfig) -> Result<MixtureModel> {
    fit_em_traced(data, init, config).map(|(model, _)| model)
}

/// Like [`fit_em`], also returning the log-likelihood after the
/// initialization and after every M-step.
pub fn fit_em_traced(
    data: &DataMatrix,
    init: &[GaussianComponent],
    config: &EmConfig,
) -> Result<(MixtureModel, Vec<f64>)> {
    let dim = data.dim();
    if init.is_empty() {
        return Err(Error::InvalidArgument("EM needs at least one component".into()));
    }
    if let Some(c) = init
        .iter()
        .find(|c| c.mean.len() != dim || c.covariance.shape() != (dim, dim))
    {
        return Err(Error::LengthMismatch {
            left: dim,
            right: c.mean.len(),
        });
    }
    if !(config.tolerance > 0.0) {
        return Err(Error::InvalidArgument("EM tolerance must be positive".into()));
    }

    let n = data.n_samples();
    let k = init.len();
    // A component needs D + 1 points of support for a non-degenerate
    // covariance; below that it is treated as empty.
    let min_mass = (1e-10 * n as f64).max((dim + 1) as f64);

    let mut components = init.to_vec();
    let mut resp = DMatrix::<f64>::zeros(n, k);
    let mut ll = e_step(data, &components, &mut resp)?;
    let mut trace = vec![ll];
    for _ in 0..config.max_iterations {
        components = m_step(data, &resp, min_mass)?;
        let next = e_step(data, &components, &mut resp)?;
        trace.push(next);
        let gain = (next - ll) / ll.abs().max(f64::MIN_POSITIVE);
        ll = next;
        if gain < config.tolerance {
            break;
        }
    }
    Ok((
        MixtureModel {
            components,
            dim,
            log_likelihood: ll,
            seed: 0,
        },
        trace,
    ))
}

/// Fills `resp` with posterior component probabilities and returns the
/// data log-likelihood.
fn e_step(data: &DataMatrix, components: &[GaussianComponent], resp: &mut DMatrix<f64>) -> Result<f64> {
    let densities = components
        .iter()
        .enumerate()
        .map(|(k, c)| {
            LogDensity::new(&c.mean, &c.covariance).map_err(|_| Error::NotPositiveDefinite {
                context: format!("EM component {k}"),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let log_weights: Vec<f64> = components.iter().map(|c| c.weight.ln()).collect();
    let mut row = vec![0.0; data.dim()];
    let mut terms = vec![0.0; components.len()];
    let mut total = 0.0;
    for i in 0..data.n_samples() {
        copy_row(data, i, &mut row);
        for (t, (lw, d)) in terms.iter_mut().zip(log_weights.iter().zip(&densities)) {
            *t = lw + d.eval(&row);
        }
        let norm = log_sum_exp(&terms);
        for (k, t) in terms.iter().enumerate() {
            resp[(i, k)] = (t - norm).exp();
        }
        total += norm;
    }
    Ok(total)
}

fn m_step(data: &DataMatrix, resp: &DMatrix<f64>, min_mass: f64) -> Result<Vec<GaussianComponent>> {
    let n = data.n_samples();
    let dim = data.dim();
    let x = data.matrix();
    (0..resp.ncols())
        .map(|k| {
            let r = resp.column(k);
            let mass = r.sum();
            if !(mass >= min_mass) {
                return Err(Error::EmptyComponent { component: k, mass });
            }
            let mean: DVector<f64> = (x.transpose() * r) / mass;
            let mut cov = DMatrix::zeros(dim, dim);
            let mut diff = DVector::zeros(dim);
            for i in 0..n {
                for j in 0..dim {
                    diff[j] = x[(i, j)] - mean[j];
                }
                cov.ger(r[i], &diff, &diff, 1.0);
            }
            cov /= mass;
            Ok(GaussianComponent {
                weight: mass / n as f64,
                mean,
                covariance: regularize(&cov),
            })
        })
        .collect::<Result<Vec<_>>>()
        .map(normalize_weights)
}

fn normalize_weights(mut components: Vec<GaussianComponent>) -> Vec<GaussianComponent> {
    let total: f64 = components.iter().map(|c| c.weight).sum();
    components.iter_mut().for_each(|c| c.weight /= total);
    components
}
