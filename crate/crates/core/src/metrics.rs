//! Dressing effectiveness and azimuth-coupling statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ArmPosture, Point3};
use crate::preprocess::Demonstration;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectivenessResult {
    /// Covered fraction of the upper arm, clamped to `[0, 1]`.
    pub ratio: f64,
    /// Unclamped ratio; negative once the garment slid past the elbow.
    pub raw_ratio: f64,
    /// Signed projection of elbow → armscye centroid onto the upper arm, meters.
    pub projection_length: f64,
    pub upper_arm_length: f64,
}

impl EffectivenessResult {
    pub fn percent(&self) -> f64 {
        100.0 * self.ratio
    }
}

pub fn effectiveness(posture: &ArmPosture, armscye_points: &[Point3]) -> Result<EffectivenessResult> {
    if armscye_points.is_empty() {
        return Err(Error::EmptyArmscye);
    }
    posture.validate()?;
    let n = armscye_points.len() as f64;
    let centroid = armscye_points
        .iter()
        .fold(nalgebra::Vector3::zeros(), |acc, p| acc + p.coords)
        / n;
    let upper = posture.upper_arm();
    let raw_ratio = (centroid - posture.elbow.coords).dot(&upper) / upper.norm_squared();
    let upper_arm_length = upper.norm();
    // Written out so that a -0.0 projection reports as 0.
    let ratio = if raw_ratio > 0.0 { raw_ratio.min(1.0) } else { 0.0 };
    Ok(EffectivenessResult {
        ratio,
        raw_ratio,
        projection_length: raw_ratio * upper_arm_length,
        upper_arm_length,
    })
}

pub fn pearson_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: a.len(),
        });
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - mean_a, y - mean_b);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Sample covariance (denominator `M - 1`) between arm 1's azimuth and arm
/// 2's coupled azimuth across demonstrations, at every grid index.
pub fn azimuth_covariance(demos: &[Demonstration]) -> Result<Vec<f64>> {
    if demos.len() < 2 {
        return Err(Error::InsufficientDemonstrations {
            needed: 2,
            got: demos.len(),
        });
    }
    let n = demos[0].grid_len();
    for (index, d) in demos.iter().enumerate() {
        if d.grid_len() != n || d.coupled_phi2.len() != n {
            return Err(Error::GridMismatch {
                index,
                expected: n,
                got: d.grid_len(),
            });
        }
    }
    let m = demos.len() as f64;
    Ok((0..n)
        .map(|i| {
            let mean1 = demos.iter().map(|d| d.traj1[i].phi).sum::<f64>() / m;
            let mean2 = demos.iter().map(|d| d.coupled_phi2[i]).sum::<f64>() / m;
            demos
                .iter()
                .map(|d| (d.traj1[i].phi - mean1) * (d.coupled_phi2[i] - mean2))
                .sum::<f64>()
                / (m - 1.0)
        })
        .collect())
}
