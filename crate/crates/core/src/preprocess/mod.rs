//! Turning recorded world-frame dressing episodes into azimuth-parameterized
//! spherical demonstrations.

mod lowess;

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

pub use lowess::{lowess_smooth, LowessParams};

use crate::error::{Error, Result};
use crate::geometry::{build_frame, to_dressing_coords, ArmPosture, Point3, SphericalCoord};

/// Fewest samples accepted per arm in a raw recording.
pub const MIN_RAW_SAMPLES: usize = 10;
/// Allowed distance of a demonstration's end azimuths from `±π/2`.
pub const ENDPOINT_TOLERANCE: f64 = 0.2;
/// A demonstration must sweep at least this much azimuth.
pub const MIN_TRAVERSAL_SPAN: f64 = FRAC_PI_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedPoint {
    pub t: f64,
    pub p: Point3,
}

impl TimedPoint {
    pub fn new(t: f64, p: Point3) -> Self {
        TimedPoint { t, p }
    }
}

/// One recorded bimanual episode: the static arm and both end-effector paths.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDemonstration {
    pub posture: ArmPosture,
    pub samples1: Vec<TimedPoint>,
    pub samples2: Vec<TimedPoint>,
}

impl RawDemonstration {
    pub fn validate(&self) -> Result<()> {
        self.posture.validate()?;
        for (name, samples) in [("samples1", &self.samples1), ("samples2", &self.samples2)] {
            if samples.len() < MIN_RAW_SAMPLES {
                return Err(Error::validation(
                    name,
                    format!(
                        "{} samples, at least {MIN_RAW_SAMPLES} required",
                        samples.len()
                    ),
                ));
            }
            for (i, s) in samples.iter().enumerate() {
                if !s.t.is_finite() || !s.p.coords.iter().all(|c| c.is_finite()) {
                    return Err(Error::validation(
                        format!("{name}[{i}]"),
                        "non-finite sample",
                    ));
                }
                if i > 0 && s.t <= samples[i - 1].t {
                    return Err(Error::validation(
                        format!("{name}[{i}].t"),
                        "timestamps must be strictly increasing",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A demonstration resampled onto uniform, strictly decreasing azimuth grids.
///
/// `coupled_phi2[i]` is arm 2's azimuth at the instant arm 1 passed
/// `traj1[i].phi`; it is the training target of the coupling model.
#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    pub elbow_angle: f64,
    pub traj1: Vec<SphericalCoord>,
    pub traj2: Vec<SphericalCoord>,
    pub coupled_phi2: Vec<f64>,
}

impl Demonstration {
    /// Builds a demonstration whose arms are paired by grid index.
    pub fn index_paired(
        elbow_angle: f64,
        traj1: Vec<SphericalCoord>,
        traj2: Vec<SphericalCoord>,
    ) -> Result<Self> {
        let coupled_phi2 = traj2.iter().map(|s| s.phi).collect();
        let demo = Demonstration {
            elbow_angle,
            traj1,
            traj2,
            coupled_phi2,
        };
        demo.validate()?;
        Ok(demo)
    }

    pub fn grid_len(&self) -> usize {
        self.traj1.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.elbow_angle > 0.0 && self.elbow_angle < std::f64::consts::PI) {
            return Err(Error::DegenerateAngle {
                psi: self.elbow_angle,
            });
        }
        let n = self.traj1.len();
        if n < 2 {
            return Err(Error::validation("traj1", "fewer than two grid points"));
        }
        if self.traj2.len() != n || self.coupled_phi2.len() != n {
            return Err(Error::validation(
                "traj2",
                format!(
                    "grid lengths differ: traj1 {n}, traj2 {}, coupling {}",
                    self.traj2.len(),
                    self.coupled_phi2.len()
                ),
            ));
        }
        for (name, traj) in [("traj1", &self.traj1), ("traj2", &self.traj2)] {
            check_decreasing(traj)?;
            if (traj[n - 1].phi + FRAC_PI_2).abs() > ENDPOINT_TOLERANCE {
                return Err(Error::validation(
                    format!("{name}.end"),
                    format!("final azimuth {:.4} is not near -pi/2", traj[n - 1].phi),
                ));
            }
        }
        if (self.traj1[0].phi - FRAC_PI_2).abs() > ENDPOINT_TOLERANCE {
            return Err(Error::validation(
                "traj1.start",
                format!("initial azimuth {:.4} is not near pi/2", self.traj1[0].phi),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreprocessConfig {
    /// When false the raw spherical samples go straight to envelope filtering.
    pub smoothing: bool,
    pub lowess: LowessParams,
    pub grid_size: usize,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            smoothing: true,
            lowess: LowessParams::default(),
            grid_size: 101,
        }
    }
}

/// `n` evenly spaced values from `start` to `end`, both endpoints exact.
pub fn azimuth_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let last = (n - 1) as f64;
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        end
                    } else {
                        start + (end - start) * (i as f64 / last)
                    }
                })
                .collect()
        }
    }
}

/// Indices of the strictly decreasing running envelope of `phis`: a sample is
/// kept only if it lies below every sample kept before it.
pub fn decreasing_envelope(phis: &[f64]) -> Vec<usize> {
    let mut kept = Vec::with_capacity(phis.len());
    let mut last = f64::INFINITY;
    for (i, &phi) in phis.iter().enumerate() {
        if phi < last {
            kept.push(i);
            last = phi;
        }
    }
    kept
}

/// Linear interpolation through strictly increasing knots, holding the end
/// values outside the knot range.
pub(crate) fn interp_increasing(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let j = xs.partition_point(|&k| k <= x) - 1;
    let w = (x - xs[j]) / (xs[j + 1] - xs[j]);
    (1.0 - w) * ys[j] + w * ys[j + 1]
}

fn check_decreasing(traj: &[SphericalCoord]) -> Result<()> {
    match (1..traj.len()).find(|&i| !(traj[i].phi < traj[i - 1].phi)) {
        Some(index) => Err(Error::NonMonotonicAzimuth { index }),
        None => Ok(()),
    }
}

/// Linearly resamples `r` and `θ` onto `grid_size` evenly spaced azimuths
/// spanning the trajectory's own endpoints.
pub fn resample_grid(traj: &[SphericalCoord], grid_size: usize) -> Result<Vec<SphericalCoord>> {
    if grid_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid size {grid_size} is below 2"
        )));
    }
    if traj.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: traj.len(),
        });
    }
    check_decreasing(traj)?;
    // Negated azimuths are strictly increasing.
    let knots: Vec<f64> = traj.iter().map(|s| -s.phi).collect();
    let rs: Vec<f64> = traj.iter().map(|s| s.r).collect();
    let thetas: Vec<f64> = traj.iter().map(|s| s.theta).collect();
    let grid = azimuth_grid(traj[0].phi, traj[traj.len() - 1].phi, grid_size);
    Ok(grid
        .into_iter()
        .map(|phi| {
            SphericalCoord::new(
                interp_increasing(&knots, &rs, -phi),
                interp_increasing(&knots, &thetas, -phi),
                phi,
            )
        })
        .collect())
}

/// Smoothed, envelope-filtered samples of one arm.
struct ArmTrack {
    /// Times of every smoothed sample.
    times: Vec<f64>,
    /// Smoothed azimuth of every sample.
    phis: Vec<f64>,
    /// Envelope-retained samples, in time order.
    kept_times: Vec<f64>,
    kept: Vec<SphericalCoord>,
}

fn track_arm(
    arm: &'static str,
    samples: &[TimedPoint],
    frame: &crate::geometry::DressingFrame,
    config: &PreprocessConfig,
) -> Result<ArmTrack> {
    let times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let coords: Vec<SphericalCoord> = samples
        .iter()
        .map(|s| to_dressing_coords(frame, &s.p))
        .collect();
    let mut rs: Vec<f64> = coords.iter().map(|c| c.r).collect();
    let mut thetas: Vec<f64> = coords.iter().map(|c| c.theta).collect();
    let mut phis: Vec<f64> = coords.iter().map(|c| c.phi).collect();
    if config.smoothing {
        let LowessParams {
            fraction,
            robust_iterations,
        } = config.lowess;
        rs = lowess_smooth(&times, &rs, fraction, robust_iterations)?;
        thetas = lowess_smooth(&times, &thetas, fraction, robust_iterations)?;
        phis = lowess_smooth(&times, &phis, fraction, robust_iterations)?;
    }

    let kept_idx = decreasing_envelope(&phis);
    let span = phis[kept_idx[0]] - phis[*kept_idx.last().unwrap()];
    if kept_idx.len() < 2 || span < MIN_TRAVERSAL_SPAN {
        return Err(Error::NonTraversal { arm, span });
    }
    let kept_times = kept_idx.iter().map(|&i| times[i]).collect();
    let kept = kept_idx
        .iter()
        .map(|&i| SphericalCoord::new(rs[i], thetas[i], phis[i]))
        .collect();
    Ok(ArmTrack {
        times,
        phis,
        kept_times,
        kept,
    })
}

pub fn convert_demonstration(
    raw: &RawDemonstration,
    config: &PreprocessConfig,
) -> Result<Demonstration> {
    raw.validate()?;
    let frame = build_frame(&raw.posture)?;
    let arm1 = track_arm("arm1", &raw.samples1, &frame, config)?;
    let arm2 = track_arm("arm2", &raw.samples2, &frame, config)?;

    let traj1 = resample_grid(&arm1.kept, config.grid_size)?;
    let traj2 = resample_grid(&arm2.kept, config.grid_size)?;

    // Pair arm 2 with arm 1 in time: find when arm 1 crossed each grid
    // azimuth, then read arm 2's azimuth at that instant.
    let arm1_knots: Vec<f64> = arm1.kept.iter().map(|s| -s.phi).collect();
    let coupled_phi2 = traj1
        .iter()
        .map(|s| {
            let t = interp_increasing(&arm1_knots, &arm1.kept_times, -s.phi);
            interp_increasing(&arm2.times, &arm2.phis, t)
        })
        .collect();

    let demo = Demonstration {
        elbow_angle: frame.elbow_angle,
        traj1,
        traj2,
        coupled_phi2,
    };
    demo.validate()?;
    Ok(demo)
}
