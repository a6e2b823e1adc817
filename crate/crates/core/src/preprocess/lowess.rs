//! Robust locally weighted linear smoothing.
//!
//! Each fitted value is a degree-1 weighted least-squares fit over the
//! `⌈fraction·n⌉` nearest abscissae with tricube distance weights. Robust
//! passes multiply those weights by bisquare weights of the previous
//! residuals, scaled by six times their median absolute value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LowessParams {
    pub fraction: f64,
    pub robust_iterations: usize,
}

impl Default for LowessParams {
    fn default() -> Self {
        LowessParams {
            fraction: 0.05,
            robust_iterations: 2,
        }
    }
}

pub fn lowess_smooth(
    xs: &[f64],
    ys: &[f64],
    fraction: f64,
    robust_iterations: usize,
) -> Result<Vec<f64>> {
    let n = xs.len();
    if ys.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: ys.len(),
        });
    }
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "lowess fraction {fraction} is outside (0, 1]"
        )));
    }
    if let Some(i) = (1..n).find(|&i| !(xs[i] > xs[i - 1])) {
        return Err(Error::NonMonotonicAbscissa { index: i });
    }
    if ys.iter().any(|y| !y.is_finite()) || xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("lowess input is not finite".into()));
    }

    let span = ((fraction * n as f64).ceil() as usize).clamp(2, n);
    let windows = neighbour_windows(xs, span);

    let (y_min, y_max) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
            (lo.min(y), hi.max(y))
        });
    let scale_floor = 1e-12 * (y_max - y_min);

    let mut robustness = vec![1.0; n];
    let mut fitted = local_fits(xs, ys, &windows, &robustness);
    for _ in 0..robust_iterations {
        let mut abs_residuals: Vec<f64> = ys
            .iter()
            .zip(&fitted)
            .map(|(y, f)| (y - f).abs())
            .collect();
        let scale = median(&mut abs_residuals);
        if scale <= scale_floor {
            break;
        }
        for (w, (y, f)) in robustness.iter_mut().zip(ys.iter().zip(&fitted)) {
            *w = bisquare((y - f) / (6.0 * scale));
        }
        fitted = local_fits(xs, ys, &windows, &robustness);
    }
    Ok(fitted)
}

/// For each point, the half-open index range of its `span` nearest
/// neighbours and the bandwidth (distance to the farthest of them).
fn neighbour_windows(xs: &[f64], span: usize) -> Vec<(usize, usize, f64)> {
    let n = xs.len();
    let mut left = 0;
    xs.iter()
        .map(|&x| {
            while left + span < n && x - xs[left] > xs[left + span] - x {
                left += 1;
            }
            let right = left + span;
            let h = (x - xs[left]).max(xs[right - 1] - x);
            (left, right, h)
        })
        .collect()
}

fn local_fits(
    xs: &[f64],
    ys: &[f64],
    windows: &[(usize, usize, f64)],
    robustness: &[f64],
) -> Vec<f64> {
    xs.iter()
        .zip(windows)
        .enumerate()
        .map(|(i, (&x0, &(left, right, h)))| {
            let mut sw = 0.0;
            let mut swx = 0.0;
            let mut swy = 0.0;
            let weights: Vec<f64> = (left..right)
                .map(|j| {
                    let w = tricube((xs[j] - x0).abs() / h) * robustness[j];
                    sw += w;
                    swx += w * xs[j];
                    swy += w * ys[j];
                    w
                })
                .collect();
            if sw <= 0.0 {
                return ys[i];
            }
            let x_bar = swx / sw;
            let y_bar = swy / sw;
            let mut sxx = 0.0;
            let mut sxy = 0.0;
            for (j, w) in (left..right).zip(&weights) {
                let dx = xs[j] - x_bar;
                sxx += w * dx * dx;
                sxy += w * dx * ys[j];
            }
            if sxx <= 1e-14 * sw * h * h {
                y_bar
            } else {
                y_bar + sxy / sxx * (x0 - x_bar)
            }
        })
        .collect()
}

fn tricube(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u * u;
        t * t * t
    }
}

fn bisquare(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u;
        t * t
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
