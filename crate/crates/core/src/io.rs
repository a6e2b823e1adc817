//! Versioned on-disk formats.
//!
//! Datasets, policies, postures and armscye measurements are pretty-printed
//! JSON documents carrying a `format` name and a `version`. Floats are
//! written in shortest round-trip form and parsed exactly, so numeric fields
//! survive a save/load cycle bit for bit. Trajectories are whitespace
//! separated tables. Every write goes to a temporary file in the target
//! directory that is renamed into place.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{elbow_angle, ArmPosture, Point3};
use crate::mixture::{BicEntry, GaussianComponent, MixtureModel};
use crate::policy::{BimanualPolicy, ConditionalModel, GeneratedTrajectoryPair, TrainConfig};
use crate::preprocess::{Demonstration, PreprocessConfig, RawDemonstration, TimedPoint};
use crate::regression::ConditionalSplit;

pub const FORMAT_VERSION: u32 = 1;

pub const DATASET_FORMAT: &str = "dressing-dataset";
pub const POLICY_FORMAT: &str = "dressing-policy";
pub const POSTURE_FORMAT: &str = "dressing-posture";
pub const ARMSCYE_FORMAT: &str = "dressing-armscye";
pub const DEMONSTRATIONS_FORMAT: &str = "dressing-demonstrations";

/// Largest accepted disagreement between a recorded elbow-angle annotation
/// and the angle computed from the joints, degrees.
pub const ELBOW_ANNOTATION_TOLERANCE_DEG: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleUnit {
    #[default]
    Degrees,
    Radians,
}

impl AngleUnit {
    pub fn to_radians(self, value: f64) -> f64 {
        match self {
            AngleUnit::Degrees => value.to_radians(),
            AngleUnit::Radians => value,
        }
    }

    pub fn from_radians(self, value: f64) -> f64 {
        match self {
            AngleUnit::Degrees => value.to_degrees(),
            AngleUnit::Radians => value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthUnit {
    Meters,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    pub length: LengthUnit,
    pub angle: AngleUnit,
}

/// Format name and version, read before the rest of a document.
#[derive(Deserialize)]
struct Header {
    format: String,
    version: u32,
}

fn check_header(text: &str, path: &Path, expected: &str) -> Result<()> {
    let header: Header = serde_json::from_str(text).map_err(|e| json_error(path, &e))?;
    if header.format != expected {
        return Err(Error::validation(
            format!("{}: format", path.display()),
            format!("expected `{expected}`, found `{}`", header.format),
        ));
    }
    if header.version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: header.version,
            supported: FORMAT_VERSION,
        });
    }
    Ok(())
}

fn json_error(path: &Path, e: &serde_json::Error) -> Error {
    Error::parse(
        format!("{}:{}:{}", path.display(), e.line(), e.column()),
        e.to_string(),
    )
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn read_document<T: DeserializeOwned>(path: &Path, format: &str) -> Result<T> {
    let text = read_text(path)?;
    check_header(&text, path, format)?;
    serde_json::from_str(&text).map_err(|e| json_error(path, &e))
}

fn write_document<T: Serialize>(path: &Path, doc: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io_err = |e: std::io::Error| Error::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.as_file().sync_all().map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn point(p: [f64; 3]) -> Point3 {
    Point3::new(p[0], p[1], p[2])
}

fn triple(p: &Point3) -> [f64; 3] {
    [p.x, p.y, p.z]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostureDoc {
    pub wrist: [f64; 3],
    pub elbow: [f64; 3],
    pub shoulder: [f64; 3],
}

impl PostureDoc {
    pub fn from_posture(p: &ArmPosture) -> Self {
        PostureDoc {
            wrist: triple(&p.wrist),
            elbow: triple(&p.elbow),
            shoulder: triple(&p.shoulder),
        }
    }

    pub fn to_posture(&self) -> Result<ArmPosture> {
        ArmPosture::new(point(self.wrist), point(self.elbow), point(self.shoulder))
    }
}

// ---------------------------------------------------------------- datasets

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetDoc {
    format: String,
    version: u32,
    units: Units,
    demonstrations: Vec<RecordDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordDoc {
    posture: PostureDoc,
    /// Recorded elbow angle in the dataset's angle unit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    elbow_angle: Option<f64>,
    /// Rows of `[t, x, y, z]`.
    arm1: Vec<[f64; 4]>,
    arm2: Vec<[f64; 4]>,
}

/// A loaded dataset together with the angle unit it was declared in.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub angle_unit: AngleUnit,
    pub demonstrations: Vec<RawDemonstration>,
}

fn samples(rows: &[[f64; 4]]) -> Vec<TimedPoint> {
    rows.iter()
        .map(|r| TimedPoint::new(r[0], Point3::new(r[1], r[2], r[3])))
        .collect()
}

fn rows(samples: &[TimedPoint]) -> Vec<[f64; 4]> {
    samples
        .iter()
        .map(|s| [s.t, s.p.x, s.p.y, s.p.z])
        .collect()
}

fn prefix_location(e: Error, prefix: &str) -> Error {
    match e {
        Error::Validation { location, message } => Error::Validation {
            location: format!(
                "{prefix}.{}",
                location
                    .replacen("samples1", "arm1", 1)
                    .replacen("samples2", "arm2", 1)
            ),
            message,
        },
        other => Error::validation(prefix, other.to_string()),
    }
}

pub fn load_dataset_file(path: &Path) -> Result<Dataset> {
    let doc: DatasetDoc = read_document(path, DATASET_FORMAT)?;
    let unit = doc.units.angle;
    let demonstrations = doc
        .demonstrations
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let at = format!("demonstrations[{i}]");
            let posture = rec
                .posture
                .to_posture()
                .map_err(|e| prefix_location(e, &format!("{at}.posture")))?;
            if let Some(recorded) = rec.elbow_angle {
                let recorded = unit.to_radians(recorded);
                let computed = elbow_angle(&posture)?;
                if (recorded - computed).abs() > ELBOW_ANNOTATION_TOLERANCE_DEG.to_radians() {
                    return Err(Error::validation(
                        format!("{at}.elbow_angle"),
                        format!(
                            "recorded {:.4} deg but joints give {:.4} deg",
                            recorded.to_degrees(),
                            computed.to_degrees()
                        ),
                    ));
                }
            }
            let raw = RawDemonstration {
                posture,
                samples1: samples(&rec.arm1),
                samples2: samples(&rec.arm2),
            };
            raw.validate().map_err(|e| prefix_location(e, &at))?;
            Ok(raw)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        angle_unit: unit,
        demonstrations,
    })
}

pub fn load_dataset(path: &Path) -> Result<Vec<RawDemonstration>> {
    load_dataset_file(path).map(|d| d.demonstrations)
}

/// Saves a dataset; each record carries its elbow angle in `angle_unit`.
pub fn save_dataset(path: &Path, demos: &[RawDemonstration], angle_unit: AngleUnit) -> Result<()> {
    let records = demos
        .iter()
        .map(|d| {
            Ok(RecordDoc {
                posture: PostureDoc::from_posture(&d.posture),
                elbow_angle: Some(angle_unit.from_radians(elbow_angle(&d.posture)?)),
                arm1: rows(&d.samples1),
                arm2: rows(&d.samples2),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    write_document(
        path,
        &DatasetDoc {
            format: DATASET_FORMAT.into(),
            version: FORMAT_VERSION,
            units: Units {
                length: LengthUnit::Meters,
                angle: angle_unit,
            },
            demonstrations: records,
        },
    )
}

// ------------------------------------------------------- spherical demos

#[derive(Serialize)]
struct DemonstrationsDoc {
    format: &'static str,
    version: u32,
    units: Units,
    demonstrations: Vec<DemonstrationDoc>,
}

#[derive(Serialize)]
struct DemonstrationDoc {
    elbow_angle: f64,
    /// Rows of `[φ₁, r₁, θ₁, φ₂(same instant)]`.
    arm1: Vec<[f64; 4]>,
    /// Rows of `[φ₂, r₂, θ₂]`.
    arm2: Vec<[f64; 3]>,
}

/// Writes preprocessed demonstrations for external inspection.
pub fn save_demonstrations(path: &Path, demos: &[Demonstration], unit: AngleUnit) -> Result<()> {
    let a = |v: f64| unit.from_radians(v);
    let doc = DemonstrationsDoc {
        format: DEMONSTRATIONS_FORMAT,
        version: FORMAT_VERSION,
        units: Units {
            length: LengthUnit::Meters,
            angle: unit,
        },
        demonstrations: demos
            .iter()
            .map(|d| DemonstrationDoc {
                elbow_angle: a(d.elbow_angle),
                arm1: d
                    .traj1
                    .iter()
                    .zip(&d.coupled_phi2)
                    .map(|(s, &c)| [a(s.phi), s.r, a(s.theta), a(c)])
                    .collect(),
                arm2: d.traj2.iter().map(|s| [a(s.phi), s.r, a(s.theta)]).collect(),
            })
            .collect(),
    };
    write_document(path, &doc)
}

// ---------------------------------------------------------------- policies

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyDoc {
    format: String,
    version: u32,
    /// Every angle in a policy file is in radians.
    angle_unit: AngleUnit,
    psi_range: [f64; 2],
    grid_size: usize,
    train_config: TrainConfig,
    preprocess: Option<PreprocessConfig>,
    arm_one: ModelDoc,
    coupling: ModelDoc,
    arm_two: ModelDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    input_dims: Vec<usize>,
    output_dims: Vec<usize>,
    dim: usize,
    seed: u64,
    log_likelihood: f64,
    components: Vec<ComponentDoc>,
    bic: Vec<BicDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ComponentDoc {
    weight: f64,
    mean: Vec<f64>,
    covariance: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BicDoc {
    k: usize,
    bic: Option<f64>,
    log_likelihood: Option<f64>,
    failure: Option<String>,
}

impl ModelDoc {
    fn from_model(m: &ConditionalModel) -> Self {
        ModelDoc {
            input_dims: m.split.input_dims.clone(),
            output_dims: m.split.output_dims.clone(),
            dim: m.model.dim,
            seed: m.model.seed,
            log_likelihood: m.model.log_likelihood,
            components: m
                .model
                .components
                .iter()
                .map(|c| ComponentDoc {
                    weight: c.weight,
                    mean: c.mean.iter().copied().collect(),
                    covariance: c
                        .covariance
                        .row_iter()
                        .map(|r| r.iter().copied().collect())
                        .collect(),
                })
                .collect(),
            bic: m
                .bic_table
                .iter()
                .map(|e| BicDoc {
                    k: e.k,
                    bic: e.bic,
                    log_likelihood: e.log_likelihood,
                    failure: e.failure.clone(),
                })
                .collect(),
        }
    }

    fn into_model(self, name: &str) -> Result<ConditionalModel> {
        let d = self.dim;
        let components = self
            .components
            .into_iter()
            .enumerate()
            .map(|(k, c)| {
                if c.mean.len() != d || c.covariance.len() != d || c.covariance.iter().any(|r| r.len() != d) {
                    return Err(Error::validation(
                        format!("{name}.components[{k}]"),
                        format!("expected {d}-dimensional mean and {d}x{d} covariance"),
                    ));
                }
                Ok(GaussianComponent {
                    weight: c.weight,
                    mean: DVector::from_vec(c.mean),
                    covariance: DMatrix::from_fn(d, d, |i, j| c.covariance[i][j]),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ConditionalModel {
            model: MixtureModel {
                components,
                dim: d,
                log_likelihood: self.log_likelihood,
                seed: self.seed,
            },
            split: ConditionalSplit::new(self.input_dims, self.output_dims),
            bic_table: self
                .bic
                .into_iter()
                .map(|b| BicEntry {
                    k: b.k,
                    bic: b.bic,
                    log_likelihood: b.log_likelihood,
                    failure: b.failure,
                })
                .collect(),
        })
    }
}

pub fn policy_to_string(policy: &BimanualPolicy) -> String {
    let doc = PolicyDoc {
        format: POLICY_FORMAT.into(),
        version: FORMAT_VERSION,
        angle_unit: AngleUnit::Radians,
        psi_range: [policy.psi_range.0, policy.psi_range.1],
        grid_size: policy.grid_size,
        train_config: policy.train_config,
        preprocess: policy.preprocess,
        arm_one: ModelDoc::from_model(&policy.arm_one),
        coupling: ModelDoc::from_model(&policy.coupling),
        arm_two: ModelDoc::from_model(&policy.arm_two),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("policy documents always serialize");
    text.push('\n');
    text
}

pub fn save_policy(policy: &BimanualPolicy, path: &Path) -> Result<()> {
    write_atomic(path, policy_to_string(policy).as_bytes())
}

pub fn load_policy(path: &Path) -> Result<BimanualPolicy> {
    let doc: PolicyDoc = read_document(path, POLICY_FORMAT)?;
    if doc.angle_unit != AngleUnit::Radians {
        return Err(Error::validation("angle_unit", "policy files store radians"));
    }
    let policy = BimanualPolicy {
        arm_one: doc.arm_one.into_model("arm_one")?,
        coupling: doc.coupling.into_model("coupling")?,
        arm_two: doc.arm_two.into_model("arm_two")?,
        psi_range: (doc.psi_range[0], doc.psi_range[1]),
        grid_size: doc.grid_size,
        train_config: doc.train_config,
        preprocess: doc.preprocess,
    };
    policy.validate()?;
    Ok(policy)
}

// ------------------------------------------------- postures and armscye

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PostureFile {
    format: String,
    version: u32,
    #[serde(flatten)]
    posture: PostureDoc,
}

pub fn load_posture(path: &Path) -> Result<ArmPosture> {
    let doc: PostureFile = read_document(path, POSTURE_FORMAT)?;
    doc.posture.to_posture()
}

pub fn save_posture(path: &Path, posture: &ArmPosture) -> Result<()> {
    write_document(
        path,
        &PostureFile {
            format: POSTURE_FORMAT.into(),
            version: FORMAT_VERSION,
            posture: PostureDoc::from_posture(posture),
        },
    )
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArmscyeFile {
    format: String,
    version: u32,
    posture: PostureDoc,
    armscye: Vec<[f64; 3]>,
}

/// Posture plus measured armscye points.
pub fn load_armscye(path: &Path) -> Result<(ArmPosture, Vec<Point3>)> {
    let doc: ArmscyeFile = read_document(path, ARMSCYE_FORMAT)?;
    let posture = doc.posture.to_posture()?;
    Ok((posture, doc.armscye.into_iter().map(point).collect()))
}

pub fn save_armscye(path: &Path, posture: &ArmPosture, points: &[Point3]) -> Result<()> {
    write_document(
        path,
        &ArmscyeFile {
            format: ARMSCYE_FORMAT.into(),
            version: FORMAT_VERSION,
            posture: PostureDoc::from_posture(posture),
            armscye: points.iter().map(triple).collect(),
        },
    )
}

// ------------------------------------------------------------ trajectories

pub const TRAJECTORY_COLUMNS: [&str; 13] = [
    "index", "phi1", "r1", "theta1", "phi2", "r2", "theta2", "x1", "y1", "z1", "x2", "y2", "z2",
];

/// Renders a generated pair as a table: two comment lines, a header, and
/// one row per grid point. Angles in degrees, lengths in meters.
pub fn trajectory_table(g: &GeneratedTrajectoryPair) -> String {
    let mut out = format!(
        "# {} version {FORMAT_VERSION}; angles in degrees, lengths in meters\n# psi {} extrapolated {}\n",
        "dressing-trajectory",
        g.psi.to_degrees(),
        g.extrapolated
    );
    out.push_str(&TRAJECTORY_COLUMNS.join("\t"));
    out.push('\n');
    for (i, (((a, b), w1), w2)) in g
        .arm1
        .iter()
        .zip(&g.arm2)
        .zip(&g.world1)
        .zip(&g.world2)
        .enumerate()
    {
        let fields = [
            a.phi.to_degrees(),
            a.r,
            a.theta.to_degrees(),
            b.phi.to_degrees(),
            b.r,
            b.theta.to_degrees(),
            w1.x,
            w1.y,
            w1.z,
            w2.x,
            w2.y,
            w2.z,
        ];
        out.push_str(&i.to_string());
        for f in fields {
            out.push('\t');
            out.push_str(&f.to_string());
        }
        out.push('\n');
    }
    out
}
