//! Gaussian mixture regression: the conditional distribution of a subset of
//! a mixture's dimensions given the rest.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::{log_sum_exp, regularize, LogDensity, MixtureModel};

/// Which joint dimensions are conditioned on and which are predicted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionalSplit {
    pub input_dims: Vec<usize>,
    pub output_dims: Vec<usize>,
}

impl ConditionalSplit {
    pub fn new(input_dims: Vec<usize>, output_dims: Vec<usize>) -> Self {
        ConditionalSplit {
            input_dims,
            output_dims,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.input_dims.is_empty() || self.output_dims.is_empty() {
            return Err(Error::InvalidArgument(
                "split needs at least one input and one output dimension".into(),
            ));
        }
        let mut seen = vec![false; dim];
        for &d in self.input_dims.iter().chain(&self.output_dims) {
            if d >= dim {
                return Err(Error::InvalidArgument(format!(
                    "split index {d} out of range for a {dim}-dimensional model"
                )));
            }
            if std::mem::replace(&mut seen[d], true) {
                return Err(Error::InvalidArgument(format!(
                    "split index {d} appears twice"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// Posterior weight of each component given the input.
    pub responsibilities: Vec<f64>,
}

struct ConditionalComponent {
    log_weight: f64,
    input_density: LogDensity,
    input_mean: DVector<f64>,
    output_mean: DVector<f64>,
    /// `Σ_OI Σ_I⁻¹`
    gain: DMatrix<f64>,
    covariance: DMatrix<f64>,
}

/// A mixture with its per-component conditioning precomputed for one split.
pub struct Regressor {
    n_inputs: usize,
    components: Vec<ConditionalComponent>,
}

fn block(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

impl Regressor {
    pub fn new(model: &MixtureModel, split: &ConditionalSplit) -> Result<Self> {
        split.validate(model.dim)?;
        let inp = &split.input_dims;
        let out = &split.output_dims;
        let components = model
            .components
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let input_mean = DVector::from_fn(inp.len(), |i, _| c.mean[inp[i]]);
                let output_mean = DVector::from_fn(out.len(), |i, _| c.mean[out[i]]);
                let mut sigma_in = block(&c.covariance, inp, inp);
                let sigma_out = block(&c.covariance, out, out);
                let sigma_out_in = block(&c.covariance, out, inp);
                // Fitted covariances are already floored; the floor is
                // reapplied only if the input block still fails to factor.
                let chol = match sigma_in.clone().cholesky() {
                    Some(ch) => ch,
                    None => {
                        sigma_in = regularize(&sigma_in);
                        sigma_in
                            .clone()
                            .cholesky()
                            .ok_or(Error::SingularInputBlock { component: k })?
                    }
                };
                let input_density = LogDensity::new(&input_mean, &sigma_in)
                    .map_err(|_| Error::SingularInputBlock { component: k })?;
                // Σ_OI Σ_I⁻¹ = (Σ_I⁻¹ Σ_IO)ᵀ
                let gain = chol.solve(&sigma_out_in.transpose()).transpose();
                let mut covariance = sigma_out - &gain * sigma_out_in.transpose();
                covariance = (&covariance + covariance.transpose()) * 0.5;
                Ok(ConditionalComponent {
                    log_weight: c.weight.ln(),
                    input_density,
                    input_mean,
                    output_mean,
                    gain,
                    covariance,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Regressor {
            n_inputs: inp.len(),
            components,
        })
    }

    pub fn predict(&self, input: &[f64]) -> Result<Prediction> {
        if input.len() != self.n_inputs {
            return Err(Error::LengthMismatch {
                left: self.n_inputs,
                right: input.len(),
            });
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("regression input is not finite".into()));
        }
        let x = DVector::from_column_slice(input);
        let log_terms: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.log_weight + c.input_density.eval(input))
            .collect();
        let norm = log_sum_exp(&log_terms);
        let responsibilities: Vec<f64> = log_terms.iter().map(|t| (t - norm).exp()).collect();

        let n_out = self.components[0].output_mean.len();
        let mut mean = DVector::zeros(n_out);
        let mut second = DMatrix::zeros(n_out, n_out);
        for (c, &beta) in self.components.iter().zip(&responsibilities) {
            let cond_mean = &c.output_mean + &c.gain * (&x - &c.input_mean);
            second += (&c.covariance + &cond_mean * cond_mean.transpose()) * beta;
            mean += cond_mean * beta;
        }
        let mut covariance = second - &mean * mean.transpose();
        covariance = (&covariance + covariance.transpose()) * 0.5;
        Ok(Prediction {
            mean,
            covariance,
            responsibilities,
        })
    }
}

pub fn condition(model: &MixtureModel, split: &ConditionalSplit, input: &[f64]) -> Result<Prediction> {
    Regressor::new(model, split)?.predict(input)
}

pub fn predict_batch(
    model: &MixtureModel,
    split: &ConditionalSplit,
    inputs: &[Vec<f64>],
) -> Result<Vec<Prediction>> {
    let regressor = Regressor::new(model, split)?;
    inputs.iter().map(|x| regressor.predict(x)).collect()
}
