use super::{fit_em, kmeans_init, DataMatrix, EmConfig, MixtureModel};
use crate::error::{Error, Result};

/// Free parameters of a full-covariance mixture: `(K-1) + K·D + K·D(D+1)/2`.
pub fn free_parameters(k: usize, dim: usize) -> usize {
    (k - 1) + k * dim + k * dim * (dim + 1) / 2
}

/// Bayesian information criterion; lower is better.
pub fn bic(model: &MixtureModel, data: &DataMatrix) -> Result<f64> {
    let ll = model.log_likelihood_of(data)?;
    let p = free_parameters(model.k(), model.dim) as f64;
    Ok(-2.0 * ll + p * (data.n_samples() as f64).ln())
}

/// Per-K seed so that candidate fits do not share random streams.
pub fn derive_seed(seed: u64, k: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BicEntry {
    pub k: usize,
    /// `None` when the fit for this K failed.
    pub bic: Option<f64>,
    pub log_likelihood: Option<f64>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    pub model: MixtureModel,
    pub table: Vec<BicEntry>,
}

/// Fits every K in `[k_min, k_max]` and keeps the lowest BIC, preferring the
/// smaller K on ties. Ks whose fit degenerates are skipped.
pub fn select_k(
    data: &DataMatrix,
    k_min: usize,
    k_max: usize,
    seed: u64,
    em: &EmConfig,
) -> Result<MixtureModel> {
    select_k_report(data, k_min, k_max, seed, em).map(|r| r.model)
}

pub fn select_k_report(
    data: &DataMatrix,
    k_min: usize,
    k_max: usize,
    seed: u64,
    em: &EmConfig,
) -> Result<SelectionReport> {
    if k_min == 0 || k_min > k_max {
        return Err(Error::InvalidArgument(format!(
            "invalid component range [{k_min}, {k_max}]"
        )));
    }
    if k_max > data.n_samples() {
        return Err(Error::TooManyClusters {
            k: k_max,
            n: data.n_samples(),
        });
    }
    let mut best: Option<(f64, MixtureModel)> = None;
    let mut table = Vec::with_capacity(k_max - k_min + 1);
    for k in k_min..=k_max {
        let k_seed = derive_seed(seed, k);
        let fitted = kmeans_init(data, k, k_seed).and_then(|init| fit_em(data, &init, em));
        match fitted {
            Ok(mut model) => {
                model.seed = k_seed;
                let score = bic(&model, data)?;
                table.push(BicEntry {
                    k,
                    bic: Some(score),
                    log_likelihood: Some(model.log_likelihood),
                    failure: None,
                });
                if best.as_ref().is_none_or(|(b, _)| score < *b) {
                    best = Some((score, model));
                }
            }
            Err(e @ (Error::EmptyComponent { .. } | Error::NotPositiveDefinite { .. })) => {
                table.push(BicEntry {
                    k,
                    bic: None,
                    log_likelihood: None,
                    failure: Some(e.category().to_string()),
                });
            }
            Err(e) => return Err(e),
        }
    }
    match best {
        Some((_, model)) => Ok(SelectionReport { model, table }),
        None => Err(Error::NoViableModel { k_min, k_max }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::GaussianComponent;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn parameter_count() {
        assert_eq!(free_parameters(3, 2), 17);
        assert_eq!(free_parameters(1, 1), 2);
    }

    #[test]
    fn bic_by_hand() {
        let model = MixtureModel {
            components: vec![GaussianComponent {
                weight: 1.0,
                mean: DVector::from_vec(vec![0.0]),
                covariance: DMatrix::identity(1, 1),
            }],
            dim: 1,
            log_likelihood: 0.0,
            seed: 0,
        };
        let data = DataMatrix::from_rows(&[vec![-1.0], vec![0.0], vec![1.0]]).unwrap();
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let ll = phi(-1.0).ln() + phi(0.0).ln() + phi(1.0).ln();
        let expected = -2.0 * ll + 2.0 * 3f64.ln();
        assert!((bic(&model, &data).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn seeds_differ_per_k() {
        let s: Vec<u64> = (1..=8).map(|k| derive_seed(7, k)).collect();
        for i in 0..s.len() {
            for j in i + 1..s.len() {
                assert_ne!(s[i], s[j]);
            }
        }
    }

    #[test]
    fn single_k_range_equals_direct_fit() {
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()])
            .collect();
        let data = DataMatrix::from_rows(&rows).unwrap();
        let em = EmConfig::default();
        let selected = select_k(&data, 1, 1, 5, &em).unwrap();
        let init = kmeans_init(&data, 1, derive_seed(5, 1)).unwrap();
        let mut direct = fit_em(&data, &init, &em).unwrap();
        direct.seed = derive_seed(5, 1);
        assert_eq!(selected, direct);
    }

    #[test]
    fn tiny_data_falls_back_to_small_k() {
        let data = DataMatrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.2],
            vec![0.3, 1.1],
            vec![0.9, 0.8],
            vec![0.5, 0.4],
        ])
        .unwrap();
        let report = select_k_report(&data, 1, 5, 3, &EmConfig::default()).unwrap();
        assert!(report.model.k() <= 2, "picked K = {}", report.model.k());
        assert!(report.table.iter().filter(|e| e.bic.is_none()).count() >= 3);
        assert!(report.table[4].failure.as_deref() == Some("EmptyComponent"));
    }
}
