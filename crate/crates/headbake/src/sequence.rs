//! Pose specifications and JSON-lines animation sequences.
//!
//! One frame per line:
//!
//! ```json
//! {"t": 0.0,
//!  "expression": [0.1, -0.2] | {"3": 0.5},
//!  "rotations": {"jaw": [0.2, 0.0, 0.0], "1": [0.0, 0.1, 0.0]},
//!  "global": {"rotation": [0.0, 0.3, 0.0], "translation": [0.0, 0.0, 0.0]},
//!  "camera": {"yaw": 0.0, "pitch": 0.0, "distance": 9.0, "fov": 14.0}}
//! ```
//!
//! Every field but `t` is optional. A dense expression array may be shorter
//! than the bundle's coefficient count; missing entries are zero. Rotations
//! are axis-angle vectors in radians keyed by joint name (`root`, `neck`,
//! `jaw`, `eye_l`, `eye_r`) or index. Camera angles are in degrees. Blank
//! lines and lines starting with `#` are skipped.

use std::collections::BTreeMap;
use std::path::Path;

use headbake_core::camera::{Camera, DEFAULT_FOV_DEG};
use headbake_core::rig::FramePose;
use headbake_core::{Mat3, Rigid, Vec3};
use serde::{Deserialize, Serialize};

pub const JOINT_NAMES: [&str; 5] = ["root", "neck", "jaw", "eye_l", "eye_r"];
pub const DEFAULT_DISTANCE: f64 = 9.0;

#[derive(Debug, thiserror::Error)]
pub enum PoseError {
    #[error("expression index {index} out of range (bundle has {count} coefficients)")]
    ExpressionIndex { index: usize, count: usize },
    #[error("dense expression has {got} coefficients, bundle has {count}")]
    ExpressionLength { got: usize, count: usize },
    #[error("joint index {index} out of range (bundle has {count} joints)")]
    JointIndex { index: usize, count: usize },
    #[error("unknown joint '{0}'")]
    UnknownJoint(String),
    #[error("bad pose spec '{spec}': {reason}")]
    Spec { spec: String, reason: String },
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: timestamp {t} does not increase (previous {prev})")]
    Timestamp { line: usize, t: f64, prev: f64 },
    #[error("line {line}: {source}")]
    Frame {
        line: usize,
        #[source]
        source: Box<PoseError>,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("sequence has no frames")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficients {
    Dense(Vec<f64>),
    Sparse(BTreeMap<String, f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalDoc {
    #[serde(default)]
    pub rotation: [f64; 3],
    #[serde(default)]
    pub translation: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraDoc {
    pub yaw: f64,
    pub pitch: f64,
    pub distance: f64,
    pub fov: f64,
}

impl Default for CameraDoc {
    fn default() -> Self {
        Self {
            yaw: 0.0,
            pitch: 0.0,
            distance: DEFAULT_DISTANCE,
            fov: DEFAULT_FOV_DEG,
        }
    }
}

impl CameraDoc {
    pub fn camera(&self) -> Camera {
        let mut c = Camera::orbit(self.yaw, self.pitch, self.distance);
        c.fov_y_deg = self.fov;
        c
    }
}

/// One parsed record, not yet checked against a bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameRecord {
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<Coefficients>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub rotations: BTreeMap<String, [f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub global: Option<GlobalDoc>,
    #[serde(default)]
    pub camera: CameraDoc,
}

pub fn joint_index(key: &str, n_joints: usize) -> Result<usize, PoseError> {
    let index = match key.parse::<usize>() {
        Ok(i) => i,
        Err(_) => JOINT_NAMES
            .iter()
            .position(|n| *n == key)
            .ok_or_else(|| PoseError::UnknownJoint(key.into()))?,
    };
    if index >= n_joints {
        return Err(PoseError::JointIndex { index, count: n_joints });
    }
    Ok(index)
}

fn finite(v: &[f64], what: &'static str) -> Result<(), PoseError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(PoseError::NonFinite(what))
    }
}

impl FrameRecord {
    pub fn rest(t: f64) -> Self {
        Self {
            t,
            expression: None,
            rotations: BTreeMap::new(),
            global: None,
            camera: CameraDoc::default(),
        }
    }

    /// Resolves the record against the bundle's dimensions.
    pub fn to_pose(&self, n_expr: usize, n_joints: usize) -> Result<FramePose, PoseError> {
        let mut pose = FramePose::rest(n_expr, n_joints, self.camera.camera());
        match &self.expression {
            None => {}
            Some(Coefficients::Dense(v)) => {
                if v.len() > n_expr {
                    return Err(PoseError::ExpressionLength { got: v.len(), count: n_expr });
                }
                finite(v, "expression")?;
                pose.expression[..v.len()].copy_from_slice(v);
            }
            Some(Coefficients::Sparse(m)) => {
                for (k, &v) in m {
                    let index = k.parse::<usize>().map_err(|_| PoseError::Spec {
                        spec: k.clone(),
                        reason: "expression keys must be indices".into(),
                    })?;
                    if index >= n_expr {
                        return Err(PoseError::ExpressionIndex { index, count: n_expr });
                    }
                    finite(&[v], "expression")?;
                    pose.expression[index] = v;
                }
            }
        }
        for (k, r) in &self.rotations {
            finite(r, "rotation")?;
            pose.rotations[joint_index(k, n_joints)?] = Mat3::from_rotation_vector(Vec3::new(r[0], r[1], r[2]));
        }
        if let Some(g) = &self.global {
            finite(&g.rotation, "global rotation")?;
            finite(&g.translation, "global translation")?;
            pose.global = Rigid::new(
                Mat3::from_rotation_vector(Vec3::new(g.rotation[0], g.rotation[1], g.rotation[2])),
                Vec3::new(g.translation[0], g.translation[1], g.translation[2]),
            );
        }
        let c = &self.camera;
        finite(&[c.yaw, c.pitch, c.distance, c.fov], "camera")?;
        if !(c.distance > 0.0 && c.fov > 0.0 && c.fov < 180.0) {
            return Err(PoseError::Spec {
                spec: format!("{c:?}"),
                reason: "camera needs positive distance and fov in (0, 180)".into(),
            });
        }
        Ok(pose)
    }

    /// Applies one inline assignment: `expr:I=V`, `joint:NAME=X,Y,Z`,
    /// `global=X,Y,Z`, `translate=X,Y,Z`, `yaw=D`, `pitch=D`, `distance=D`,
    /// `fov=D`.
    pub fn apply_assignment(&mut self, spec: &str) -> Result<(), PoseError> {
        let bad = |reason: &str| PoseError::Spec {
            spec: spec.into(),
            reason: reason.into(),
        };
        let (key, value) = spec.split_once('=').ok_or_else(|| bad("expected KEY=VALUE"))?;
        let scalar = || value.trim().parse::<f64>().map_err(|_| bad("value is not a number"));
        let vec3 = || -> Result<[f64; 3], PoseError> {
            let v: Vec<f64> = value
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad("expected X,Y,Z"))?;
            v.try_into().map_err(|_| bad("expected three components"))
        };
        let key = key.trim();
        if let Some(i) = key.strip_prefix("expr:") {
            let v = scalar()?;
            let mut m = match self.expression.take() {
                Some(Coefficients::Sparse(m)) => m,
                Some(Coefficients::Dense(d)) => d.iter().enumerate().map(|(i, &x)| (i.to_string(), x)).collect(),
                None => BTreeMap::new(),
            };
            i.trim().parse::<usize>().map_err(|_| bad("expression index is not an integer"))?;
            m.insert(i.trim().to_string(), v);
            self.expression = Some(Coefficients::Sparse(m));
        } else if let Some(j) = key.strip_prefix("joint:") {
            self.rotations.insert(j.trim().to_string(), vec3()?);
        } else {
            match key {
                "global" => self.global.get_or_insert(GlobalDoc::IDENTITY).rotation = vec3()?,
                "translate" => self.global.get_or_insert(GlobalDoc::IDENTITY).translation = vec3()?,
                "yaw" => self.camera.yaw = scalar()?,
                "pitch" => self.camera.pitch = scalar()?,
                "distance" => self.camera.distance = scalar()?,
                "fov" => self.camera.fov = scalar()?,
                _ => return Err(bad("unknown key")),
            }
        }
        Ok(())
    }
}

impl GlobalDoc {
    pub const IDENTITY: GlobalDoc = GlobalDoc {
        rotation: [0.0; 3],
        translation: [0.0; 3],
    };
}

/// Ordered frames with strictly increasing timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct AnimationSequence {
    pub frames: Vec<FrameRecord>,
}

impl AnimationSequence {
    pub fn parse(text: &str) -> Result<Self, PoseError> {
        let mut frames: Vec<FrameRecord> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let rec: FrameRecord = serde_json::from_str(line).map_err(|source| PoseError::Parse { line: i + 1, source })?;
            if !rec.t.is_finite() {
                return Err(PoseError::Frame {
                    line: i + 1,
                    source: Box::new(PoseError::NonFinite("timestamp")),
                });
            }
            if let Some(prev) = frames.last() {
                if !(rec.t > prev.t) {
                    return Err(PoseError::Timestamp {
                        line: i + 1,
                        t: rec.t,
                        prev: prev.t,
                    });
                }
            }
            frames.push(rec);
        }
        if frames.is_empty() {
            return Err(PoseError::Empty);
        }
        Ok(Self { frames })
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for f in &self.frames {
            out.push_str(&serde_json::to_string(f).expect("frame records serialize"));
            out.push('\n');
        }
        out
    }

    /// Resolves every frame; errors carry the 1-based frame number.
    pub fn poses(&self, n_expr: usize, n_joints: usize) -> Result<Vec<FramePose>, PoseError> {
        self.frames
            .iter()
            .enumerate()
            .map(|(i, f)| {
                f.to_pose(n_expr, n_joints).map_err(|e| PoseError::Frame {
                    line: i + 1,
                    source: Box::new(e),
                })
            })
            .collect()
    }

    /// Deterministic talking-head style motion: slow head sway, jaw
    /// opening and a few oscillating expression coefficients.
    pub fn synthetic(n_frames: usize, n_expr: usize, seed: u64) -> Self {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_pcg::Pcg64::seed_from_u64(seed);
        let n_active = n_expr.min(10);
        let phases: Vec<(f64, f64)> = (0..n_active)
            .map(|_| (rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(0.5..2.0)))
            .collect();
        let frames = (0..n_frames)
            .map(|i| {
                let t = i as f64 / 30.0;
                let mut rec = FrameRecord::rest(t);
                let expr: Vec<f64> = phases.iter().map(|(p, f)| 0.8 * (t * f + p).sin()).collect();
                if !expr.is_empty() {
                    rec.expression = Some(Coefficients::Dense(expr));
                }
                rec.rotations.insert("neck".into(), [0.05 * (t * 0.7).sin(), 0.15 * (t * 0.9).sin(), 0.0]);
                rec.rotations.insert("jaw".into(), [0.12 * (0.5 + 0.5 * (t * 3.0).sin()), 0.0, 0.0]);
                rec
            })
            .collect();
        Self { frames }
    }
}

pub fn load_sequence(path: impl AsRef<Path>) -> Result<AnimationSequence, crate::error::FormatError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| crate::error::FormatError::io(path, e))?;
    AnimationSequence::parse(&text).map_err(|e| crate::error::FormatError::malformed("sequence", e.to_string()))
}
