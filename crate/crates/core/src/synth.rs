//! Synthetic arms and bimanual demonstrations with known ground truth.
//!
//! Arm 1 follows the arm wrist → elbow → shoulder at a fixed standoff above
//! the arm plane (+z), its azimuth falling linearly in time from `π/2` to
//! `-π/2`. Arm 2 follows the same polyline below the plane (−z), lagging by
//! `δ` in azimuth until it reaches the shoulder and waits there:
//! `φ₂ = max(φ₁ − δ, −π/2)`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{Rotation3, UnitQuaternion, Vector2, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    build_frame, ArmPosture, DressingFrame, Point3, SphericalCoord, COLLINEAR_EPSILON,
};
use crate::preprocess::{azimuth_grid, Demonstration, RawDemonstration, TimedPoint};

/// Elbow angles of the eight recorded tight-garment demonstrations, degrees.
pub const DEMONSTRATED_ELBOW_ANGLES_DEG: [f64; 8] =
    [120.94, 128.80, 129.60, 131.87, 136.36, 138.63, 143.17, 147.80];

/// Duration of a synthetic episode, seconds.
pub const EPISODE_SECONDS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub forearm_length: f64,
    pub upper_arm_length: f64,
    /// End-effector distance from the arm plane, meters.
    pub offset_radius: f64,
    /// Azimuth lag of arm 2 behind arm 1, radians.
    pub coupling_lag: f64,
    /// Standard deviation of world-frame position noise, meters.
    pub noise_sigma: f64,
    pub samples_per_demo: usize,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            forearm_length: 0.25,
            upper_arm_length: 0.30,
            offset_radius: 0.05,
            coupling_lag: 0.3,
            noise_sigma: 0.002,
            samples_per_demo: 300,
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("synthetic parameters: {what}")));
        if !(self.forearm_length > 0.0 && self.upper_arm_length > 0.0) {
            return bad("segment lengths must be positive");
        }
        if !(self.offset_radius >= 0.0) {
            return bad("offset radius must be non-negative");
        }
        if !(self.coupling_lag >= 0.0 && self.coupling_lag < FRAC_PI_2) {
            return bad("coupling lag must lie in [0, pi/2)");
        }
        if !(self.noise_sigma >= 0.0) {
            return bad("noise sigma must be non-negative");
        }
        if self.samples_per_demo < 2 {
            return bad("need at least two samples per demonstration");
        }
        Ok(())
    }
}

/// Builds an arm with the elbow at the origin and exact elbow angle `psi`.
///
/// Orientation seed 0 keeps the canonical placement (forearm along +x, arm
/// in the xy-plane); any other seed applies a uniformly random rotation.
pub fn make_posture(psi: f64, params: &SynthParams, orientation_seed: u64) -> Result<ArmPosture> {
    if !(psi > COLLINEAR_EPSILON && psi < PI - COLLINEAR_EPSILON) {
        return Err(Error::DegenerateAngle { psi });
    }
    let rotation = if orientation_seed == 0 {
        Rotation3::identity()
    } else {
        random_rotation(orientation_seed)
    };
    let wrist = rotation * Vector3::new(params.forearm_length, 0.0, 0.0);
    let (s, c) = psi.sin_cos();
    let shoulder = rotation * Vector3::new(c, s, 0.0) * params.upper_arm_length;
    ArmPosture::new(Point3::from(wrist), Point3::origin(), Point3::from(shoulder))
}

fn random_rotation(seed: u64) -> Rotation3<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    loop {
        let q = nalgebra::Quaternion::new(
            normal.sample(&mut rng),
            normal.sample(&mut rng),
            normal.sample(&mut rng),
            normal.sample(&mut rng),
        );
        if q.norm() > 1e-6 {
            return UnitQuaternion::from_quaternion(q).to_rotation_matrix();
        }
    }
}

/// Noise-free reference paths of a synthetic demonstration.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub frame: DressingFrame,
    pub params: SynthParams,
    wrist: Vector2<f64>,
    elbow: Vector2<f64>,
    shoulder: Vector2<f64>,
}

fn cross2(a: &Vector2<f64>, b: &Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

impl GroundTruth {
    pub fn new(posture: &ArmPosture, params: &SynthParams) -> Result<Self> {
        params.validate()?;
        let frame = build_frame(posture)?;
        let planar = |p: &Point3| frame.to_local(p).xy();
        Ok(GroundTruth {
            frame,
            params: *params,
            wrist: planar(&posture.wrist),
            elbow: planar(&posture.elbow),
            shoulder: planar(&posture.shoulder),
        })
    }

    /// In-plane point of the arm polyline at azimuth `phi` ∈ [−π/2, π/2].
    fn arm_point(&self, phi: f64) -> Vector2<f64> {
        let dir = Vector2::new(phi.cos(), phi.sin());
        let end = if phi >= 0.0 { self.wrist } else { self.shoulder };
        let seg = end - self.elbow;
        let s = (-cross2(&dir, &self.elbow) / cross2(&dir, &seg)).clamp(0.0, 1.0);
        self.elbow + seg * s
    }

    fn at(&self, phi: f64, side: f64) -> SphericalCoord {
        let q = self.arm_point(phi).norm();
        let rho = self.params.offset_radius;
        SphericalCoord::new(q.hypot(rho), q.atan2(side * rho), phi)
    }

    /// Arm 1 (above the arm plane) at azimuth `phi`.
    pub fn arm1(&self, phi: f64) -> SphericalCoord {
        self.at(phi, 1.0)
    }

    /// Arm 2 (below the arm plane) at azimuth `phi`.
    pub fn arm2(&self, phi: f64) -> SphericalCoord {
        self.at(phi, -1.0)
    }

    /// Arm 2's azimuth when arm 1 is at `phi1`.
    pub fn coupling(&self, phi1: f64) -> f64 {
        (phi1 - self.params.coupling_lag).max(-FRAC_PI_2)
    }

    fn world(&self, phi: f64, side: f64) -> Point3 {
        let q = self.arm_point(phi);
        self.frame
            .from_local(&Vector3::new(q.x, q.y, side * self.params.offset_radius))
    }

    pub fn world1(&self, phi1: f64) -> Point3 {
        self.world(phi1, 1.0)
    }

    /// Arm 2's world position at the instant arm 1 is at `phi1`.
    pub fn world2_at(&self, phi1: f64) -> Point3 {
        self.world(self.coupling(phi1), -1.0)
    }

    /// The exact demonstration on `grid_size`-point azimuth grids.
    pub fn demonstration(&self, grid_size: usize) -> Result<Demonstration> {
        let grid1 = azimuth_grid(FRAC_PI_2, -FRAC_PI_2, grid_size);
        let grid2 = azimuth_grid(self.coupling(FRAC_PI_2), -FRAC_PI_2, grid_size);
        let demo = Demonstration {
            elbow_angle: self.frame.elbow_angle,
            traj1: grid1.iter().map(|&p| self.arm1(p)).collect(),
            traj2: grid2.iter().map(|&p| self.arm2(p)).collect(),
            coupled_phi2: grid1.iter().map(|&p| self.coupling(p)).collect(),
        };
        demo.validate()?;
        Ok(demo)
    }
}

/// Samples a timed bimanual recording of the ground-truth paths, with
/// seeded Gaussian position noise.
pub fn ground_truth_demo(
    posture: &ArmPosture,
    params: &SynthParams,
) -> Result<(RawDemonstration, GroundTruth)> {
    let truth = GroundTruth::new(posture, params)?;
    let n = params.samples_per_demo;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let noise = Normal::new(0.0, params.noise_sigma.max(f64::MIN_POSITIVE)).unwrap();
    let mut jitter = |p: Point3| {
        if params.noise_sigma == 0.0 {
            p
        } else {
            p + Vector3::from_fn(|_, _| noise.sample(&mut rng))
        }
    };
    let mut samples1 = Vec::with_capacity(n);
    let mut samples2 = Vec::with_capacity(n);
    for j in 0..n {
        let frac = j as f64 / (n - 1) as f64;
        let t = EPISODE_SECONDS * frac;
        let phi1 = if j == n - 1 {
            -FRAC_PI_2
        } else {
            FRAC_PI_2 - PI * frac
        };
        samples1.push(TimedPoint::new(t, jitter(truth.world1(phi1))));
        samples2.push(TimedPoint::new(t, jitter(truth.world2_at(phi1))));
    }
    Ok((
        RawDemonstration {
            posture: *posture,
            samples1,
            samples2,
        },
        truth,
    ))
}

/// One synthetic demonstration per elbow angle. Demo `i` uses noise seed
/// `params.seed + i` and orientation seed `params.seed + i + 1`.
pub fn synth_dataset(psis: &[f64], params: &SynthParams) -> Result<Vec<(RawDemonstration, GroundTruth)>> {
    psis.iter()
        .enumerate()
        .map(|(i, &psi)| {
            let p = SynthParams {
                seed: params.seed.wrapping_add(i as u64),
                ..*params
            };
            let posture = make_posture(psi, &p, params.seed.wrapping_add(i as u64 + 1))?;
            ground_truth_demo(&posture, &p)
        })
        .collect()
}
