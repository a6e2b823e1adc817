//! Arm-anchored spherical coordinates.
//!
//! The human arm is reduced to three joint positions. The dressing frame is
//! centred on the foot of the perpendicular dropped from the elbow onto the
//! wrist–shoulder line: its x-axis points at the elbow, its z-axis is the
//! arm-plane normal `v_fore × v_upper`, and y completes a right-handed set.
//! In that frame the wrist sits at azimuth `+π/2`, the elbow at `0` and the
//! shoulder at `-π/2`, whatever the posture.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// World-frame position in meters.
pub type Point3 = nalgebra::Point3<f64>;

/// Minimum accepted forearm / upper-arm length, meters.
pub const MIN_SEGMENT_LENGTH: f64 = 0.01;
/// Postures with `sin ψ` below this are treated as a straight arm.
pub const COLLINEAR_EPSILON: f64 = 1e-6;

/// Wrist, elbow and shoulder positions of a static arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmPosture {
    pub wrist: Point3,
    pub elbow: Point3,
    pub shoulder: Point3,
}

impl ArmPosture {
    /// Checks finiteness and segment lengths. Collinearity is left to
    /// [`build_frame`], since a straight arm still has a well defined elbow angle.
    pub fn new(wrist: Point3, elbow: Point3, shoulder: Point3) -> Result<Self> {
        let posture = ArmPosture {
            wrist,
            elbow,
            shoulder,
        };
        posture.validate()?;
        Ok(posture)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("wrist", &self.wrist),
            ("elbow", &self.elbow),
            ("shoulder", &self.shoulder),
        ] {
            if !p.coords.iter().all(|c| c.is_finite()) {
                return Err(Error::validation(name, "joint position is not finite"));
            }
        }
        let fore = self.forearm().norm();
        if fore < MIN_SEGMENT_LENGTH {
            return Err(Error::DegenerateSegment {
                segment: "forearm",
                length: fore,
                min: MIN_SEGMENT_LENGTH,
            });
        }
        let upper = self.upper_arm().norm();
        if upper < MIN_SEGMENT_LENGTH {
            return Err(Error::DegenerateSegment {
                segment: "upper_arm",
                length: upper,
                min: MIN_SEGMENT_LENGTH,
            });
        }
        Ok(())
    }

    /// `wrist - elbow`
    pub fn forearm(&self) -> Vector3<f64> {
        self.wrist - self.elbow
    }

    /// `shoulder - elbow`
    pub fn upper_arm(&self) -> Vector3<f64> {
        self.shoulder - self.elbow
    }

    /// Applies a rigid motion to all three joints.
    pub fn transformed(&self, iso: &nalgebra::Isometry3<f64>) -> ArmPosture {
        ArmPosture {
            wrist: iso * self.wrist,
            elbow: iso * self.elbow,
            shoulder: iso * self.shoulder,
        }
    }
}

/// Spherical coordinates in a [`DressingFrame`]. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalCoord {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl SphericalCoord {
    pub fn new(r: f64, theta: f64, phi: f64) -> Self {
        SphericalCoord { r, theta, phi }
    }
}

/// Body-fixed frame built from an [`ArmPosture`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DressingFrame {
    pub origin: Point3,
    /// Columns are the world directions of the local x, y and z axes.
    pub axes: Matrix3<f64>,
    pub elbow_angle: f64,
}

impl DressingFrame {
    pub fn x_axis(&self) -> Vector3<f64> {
        self.axes.column(0).into_owned()
    }

    pub fn y_axis(&self) -> Vector3<f64> {
        self.axes.column(1).into_owned()
    }

    pub fn z_axis(&self) -> Vector3<f64> {
        self.axes.column(2).into_owned()
    }

    /// World point expressed in the frame's Cartesian axes.
    pub fn to_local(&self, p: &Point3) -> Vector3<f64> {
        self.axes.transpose() * (p - self.origin)
    }

    pub fn from_local(&self, local: &Vector3<f64>) -> Point3 {
        self.origin + self.axes * local
    }
}

/// Angle between forearm and upper arm, in `[0, π]`.
pub fn elbow_angle(posture: &ArmPosture) -> Result<f64> {
    posture.validate()?;
    let fore = posture.forearm();
    let upper = posture.upper_arm();
    // atan2 of |cross| and dot is the arccos of the normalized dot product,
    // without the precision loss of arccos near 0 and π.
    Ok(fore.cross(&upper).norm().atan2(fore.dot(&upper)))
}

pub fn build_frame(posture: &ArmPosture) -> Result<DressingFrame> {
    let psi = elbow_angle(posture)?;
    let fore = posture.forearm();
    let upper = posture.upper_arm();
    let normal = fore.cross(&upper);
    let sin_psi = normal.norm() / (fore.norm() * upper.norm());
    if sin_psi < COLLINEAR_EPSILON {
        return Err(Error::CollinearArm { sin_psi });
    }

    let line = posture.shoulder - posture.wrist;
    let t = (posture.elbow - posture.wrist).dot(&line) / line.norm_squared();
    let origin = posture.wrist + line * t;

    let z = normal.normalize();
    let to_elbow = posture.elbow - origin;
    let x = (to_elbow - z * z.dot(&to_elbow)).normalize();
    let y = z.cross(&x);

    Ok(DressingFrame {
        origin,
        axes: Matrix3::from_columns(&[x, y, z]),
        elbow_angle: psi,
    })
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = (angle + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped >= PI {
        -PI
    } else {
        wrapped
    }
}

/// Clamps an azimuth into `[-π, π)`.
pub fn clamp_azimuth(phi: f64) -> f64 {
    phi.clamp(-PI, PI.next_down())
}

pub fn to_dressing_coords(frame: &DressingFrame, p: &Point3) -> SphericalCoord {
    local_to_spherical(&frame.to_local(p))
}

pub fn from_dressing_coords(frame: &DressingFrame, s: &SphericalCoord) -> Point3 {
    frame.from_local(&spherical_to_local(s))
}

pub fn local_to_spherical(local: &Vector3<f64>) -> SphericalCoord {
    let (x, y, z) = (local.x, local.y, local.z);
    let r = local.norm();
    if r == 0.0 {
        return SphericalCoord::new(0.0, 0.0, 0.0);
    }
    let rho = x.hypot(y);
    let theta = rho.atan2(z);
    let phi = if rho == 0.0 {
        0.0
    } else {
        let a = y.atan2(x);
        // atan2 returns (-π, π]; the azimuth range is [-π, π).
        if a >= PI {
            -PI
        } else {
            a
        }
    };
    SphericalCoord::new(r, theta, phi)
}

pub fn spherical_to_local(s: &SphericalCoord) -> Vector3<f64> {
    let (st, ct) = s.theta.sin_cos();
    let (sp, cp) = s.phi.sin_cos();
    Vector3::new(s.r * st * cp, s.r * st * sp, s.r * ct)
}
