//! The hierarchical bimanual policy: three conditional mixtures trained on
//! spherical demonstrations and queried arm 1 → coupling → arm 2.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    build_frame, clamp_azimuth, from_dressing_coords, ArmPosture, Point3, SphericalCoord,
};
use crate::mixture::{select_k_report, BicEntry, DataMatrix, EmConfig, MixtureModel};
use crate::preprocess::{azimuth_grid, Demonstration, PreprocessConfig};
use crate::regression::{ConditionalSplit, Regressor};

/// Column layout shared by the arm models: `(φ, ψ, r, θ)`.
const ARM_SPLIT: ([usize; 2], [usize; 2]) = ([0, 1], [2, 3]);
/// Column layout of the coupling model: `(φ₁, ψ, φ₂)`.
const COUPLING_SPLIT: ([usize; 2], [usize; 1]) = ([0, 1], [2]);

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub demonstrations: Vec<Demonstration>,
    /// Smallest and largest elbow angle among the demonstrations.
    pub psi_range: (f64, f64),
}

impl TrainingSet {
    pub fn new(demonstrations: Vec<Demonstration>) -> Result<Self> {
        if demonstrations.len() < 2 {
            return Err(Error::InsufficientDemonstrations {
                needed: 2,
                got: demonstrations.len(),
            });
        }
        for d in &demonstrations {
            d.validate()?;
        }
        let psi_range = demonstrations.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), d| (lo.min(d.elbow_angle), hi.max(d.elbow_angle)),
        );
        Ok(TrainingSet {
            demonstrations,
            psi_range,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub seed: u64,
    pub k_min: usize,
    pub k_max: usize,
    pub em: EmConfig,
    /// Points in the generation sweep.
    pub grid_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 0,
            k_min: 1,
            k_max: 8,
            em: EmConfig::default(),
            grid_size: 101,
        }
    }
}

/// A fitted mixture, the split it is queried with, and the BIC search that
/// chose it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalModel {
    pub model: MixtureModel,
    pub split: ConditionalSplit,
    pub bic_table: Vec<BicEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BimanualPolicy {
    /// `(φ₁, ψ) → (r₁, θ₁)`
    pub arm_one: ConditionalModel,
    /// `(φ₁, ψ) → φ₂`
    pub coupling: ConditionalModel,
    /// `(φ₂, ψ) → (r₂, θ₂)`
    pub arm_two: ConditionalModel,
    pub psi_range: (f64, f64),
    pub grid_size: usize,
    pub train_config: TrainConfig,
    /// How the training demonstrations were preprocessed, when known.
    pub preprocess: Option<PreprocessConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedTrajectoryPair {
    pub psi: f64,
    pub arm1: Vec<SphericalCoord>,
    pub arm2: Vec<SphericalCoord>,
    pub world1: Vec<Point3>,
    pub world2: Vec<Point3>,
    /// Set when `psi` lies outside the training range.
    pub extrapolated: bool,
}

fn fit(
    rows: Vec<Vec<f64>>,
    split: ConditionalSplit,
    seed: u64,
    config: &TrainConfig,
) -> Result<ConditionalModel> {
    let data = DataMatrix::from_rows(&rows)?;
    let k_max = config.k_max.min(data.n_samples());
    let report = select_k_report(&data, config.k_min, k_max, seed, &config.em)?;
    Ok(ConditionalModel {
        model: report.model,
        split,
        bic_table: report.table,
    })
}

pub fn train_policy(ts: &TrainingSet, config: &TrainConfig) -> Result<BimanualPolicy> {
    if ts.demonstrations.len() < 2 {
        return Err(Error::InsufficientDemonstrations {
            needed: 2,
            got: ts.demonstrations.len(),
        });
    }
    if config.grid_size < 2 {
        return Err(Error::InvalidArgument("grid size must be at least 2".into()));
    }
    let mut arm1_rows = Vec::new();
    let mut arm2_rows = Vec::new();
    let mut coupling_rows = Vec::new();
    for d in &ts.demonstrations {
        let psi = d.elbow_angle;
        for ((s1, s2), &phi2) in d.traj1.iter().zip(&d.traj2).zip(&d.coupled_phi2) {
            arm1_rows.push(vec![s1.phi, psi, s1.r, s1.theta]);
            arm2_rows.push(vec![s2.phi, psi, s2.r, s2.theta]);
            coupling_rows.push(vec![s1.phi, psi, phi2]);
        }
    }
    let arm_split = || ConditionalSplit::new(ARM_SPLIT.0.to_vec(), ARM_SPLIT.1.to_vec());
    let arm_one = fit(arm1_rows, arm_split(), config.seed, config)?;
    let coupling = fit(
        coupling_rows,
        ConditionalSplit::new(COUPLING_SPLIT.0.to_vec(), COUPLING_SPLIT.1.to_vec()),
        config.seed.wrapping_add(1),
        config,
    )?;
    let arm_two = fit(arm2_rows, arm_split(), config.seed.wrapping_add(2), config)?;
    Ok(BimanualPolicy {
        arm_one,
        coupling,
        arm_two,
        psi_range: ts.psi_range,
        grid_size: config.grid_size,
        train_config: *config,
        preprocess: None,
    })
}

impl BimanualPolicy {
    pub fn validate(&self) -> Result<()> {
        for (name, m, dim, n_out) in [
            ("arm_one", &self.arm_one, 4, 2),
            ("coupling", &self.coupling, 3, 1),
            ("arm_two", &self.arm_two, 4, 2),
        ] {
            if m.model.dim != dim || m.split.output_dims.len() != n_out || m.split.input_dims.len() != 2 {
                return Err(Error::validation(name, "unexpected model dimensions"));
            }
            m.model
                .validate()
                .map_err(|e| Error::validation(name, e.to_string()))?;
            m.split.validate(dim)?;
        }
        if self.grid_size < 2 {
            return Err(Error::validation("grid_size", "must be at least 2"));
        }
        Ok(())
    }

    pub fn is_extrapolated(&self, psi: f64) -> bool {
        psi < self.psi_range.0 || psi > self.psi_range.1
    }
}

/// Arm-2 azimuth predicted for arm 1 at `phi1`, clamped to `[-π, π)`.
pub fn evaluate_coupling(policy: &BimanualPolicy, psi: f64, phi1: f64) -> Result<f64> {
    let reg = Regressor::new(&policy.coupling.model, &policy.coupling.split)?;
    Ok(clamp_azimuth(reg.predict(&[phi1, psi])?.mean[0]))
}

fn spherical(r: f64, theta: f64, phi: f64) -> SphericalCoord {
    SphericalCoord::new(r.max(0.0), theta.clamp(0.0, std::f64::consts::PI), phi)
}

/// Generates both arms' trajectories for `posture` with the default sweep
/// size stored in the policy.
pub fn generate(policy: &BimanualPolicy, posture: &ArmPosture) -> Result<GeneratedTrajectoryPair> {
    generate_with_grid(policy, posture, policy.grid_size)
}

pub fn generate_with_grid(
    policy: &BimanualPolicy,
    posture: &ArmPosture,
    grid_size: usize,
) -> Result<GeneratedTrajectoryPair> {
    if grid_size < 2 {
        return Err(Error::InvalidArgument("grid size must be at least 2".into()));
    }
    let frame = build_frame(posture)?;
    let psi = frame.elbow_angle;
    let arm_one = Regressor::new(&policy.arm_one.model, &policy.arm_one.split)?;
    let coupling = Regressor::new(&policy.coupling.model, &policy.coupling.split)?;
    let arm_two = Regressor::new(&policy.arm_two.model, &policy.arm_two.split)?;

    let mut arm1 = Vec::with_capacity(grid_size);
    let mut arm2 = Vec::with_capacity(grid_size);
    for phi1 in azimuth_grid(FRAC_PI_2, -FRAC_PI_2, grid_size) {
        let p1 = arm_one.predict(&[phi1, psi])?;
        arm1.push(spherical(p1.mean[0], p1.mean[1], phi1));
        let phi2 = clamp_azimuth(coupling.predict(&[phi1, psi])?.mean[0]);
        let p2 = arm_two.predict(&[phi2, psi])?;
        arm2.push(spherical(p2.mean[0], p2.mean[1], phi2));
    }
    let world1 = arm1.iter().map(|s| from_dressing_coords(&frame, s)).collect();
    let world2 = arm2.iter().map(|s| from_dressing_coords(&frame, s)).collect();
    Ok(GeneratedTrajectoryPair {
        psi,
        arm1,
        arm2,
        world1,
        world2,
        extrapolated: policy.is_extrapolated(psi),
    })
}
