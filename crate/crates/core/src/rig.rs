//! FLAME-style forward deformation of baked vertices.
//!
//! A canonical vertex `x_c` is deformed by
//!
//! ```text
//! shaped = x_c + B_E(ψ; ℰ) + B_P(θ; 𝒫)
//! joints = J(template + B_E(ψ; ℰ_template))
//! x_d    = Σ_j 𝒲_j · T_j(shaped)
//! ```
//!
//! where `T_j` are forward-kinematics bone transforms relative to the rest
//! pose. Pose-corrective features are `vec(R_j − I)` in row-major order for
//! each corrective joint.

use alloc::format;
use alloc::vec::Vec;

use crate::math::{Mat3, Rigid, Vec3};
use crate::{par, Error, Result};

/// Rotations must satisfy `|RᵀR − I| ≤ ORTHONORMAL_TOL`.
pub const ORTHONORMAL_TOL: f64 = 1e-5;

/// Per-vertex deformation attributes stored as flat `f32` arrays.
///
/// Layouts: `expr[(v·n_e + i)·3 + axis]`,
/// `pose[((v·n_p + j)·9 + k)·3 + axis]`, `weights[v·n_j + j]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VertexRigging {
    pub n_expr: usize,
    pub n_pose: usize,
    pub n_joints: usize,
    pub expr: Vec<f32>,
    pub pose: Vec<f32>,
    pub weights: Vec<f32>,
}

impl VertexRigging {
    pub fn zeros(vertices: usize, n_expr: usize, n_pose: usize, n_joints: usize) -> Self {
        Self {
            n_expr,
            n_pose,
            n_joints,
            expr: alloc::vec![0.0; vertices * n_expr * 3],
            pose: alloc::vec![0.0; vertices * n_pose * 27],
            weights: alloc::vec![0.0; vertices * n_joints],
        }
    }

    pub fn vertex_count(&self) -> usize {
        if self.n_joints == 0 {
            0
        } else {
            self.weights.len() / self.n_joints
        }
    }

    #[inline]
    pub fn expr_of(&self, v: usize) -> &[f32] {
        let w = self.n_expr * 3;
        &self.expr[v * w..(v + 1) * w]
    }

    #[inline]
    pub fn pose_of(&self, v: usize) -> &[f32] {
        let w = self.n_pose * 27;
        &self.pose[v * w..(v + 1) * w]
    }

    #[inline]
    pub fn weights_of(&self, v: usize) -> &[f32] {
        &self.weights[v * self.n_joints..(v + 1) * self.n_joints]
    }

    /// Appends one vertex worth of attributes.
    pub fn push(&mut self, expr: &[f32], pose: &[f32], weights: &[f32]) {
        debug_assert_eq!(expr.len(), self.n_expr * 3);
        debug_assert_eq!(pose.len(), self.n_pose * 27);
        debug_assert_eq!(weights.len(), self.n_joints);
        self.expr.extend_from_slice(expr);
        self.pose.extend_from_slice(pose);
        self.weights.extend_from_slice(weights);
    }

    /// Shape consistency and skinning-weight partition of unity.
    pub fn validate(&self) -> Result<()> {
        let n = self.vertex_count();
        Error::check_len("expression blendshapes", n * self.n_expr * 3, self.expr.len())?;
        Error::check_len("pose correctives", n * self.n_pose * 27, self.pose.len())?;
        Error::check_len("skinning weights", n * self.n_joints, self.weights.len())?;
        for v in 0..n {
            let w = self.weights_of(v);
            if w.iter().any(|x| *x < 0.0 || !x.is_finite()) {
                return Err(Error::invalid(
                    "skinning weights",
                    format!("vertex {v} has negative or non-finite weights"),
                ));
            }
            let sum: f64 = w.iter().map(|&x| x as f64).sum();
            if (sum - 1.0).abs() > 1e-4 {
                return Err(Error::invalid(
                    "skinning weights",
                    format!("vertex {v} weights sum to {sum}"),
                ));
            }
        }
        Ok(())
    }
}

/// Template skeleton: rest vertices, joint regressor and kinematic tree.
#[derive(Debug, Clone, PartialEq)]
pub struct FlameTemplate {
    pub vertices: Vec<[f32; 3]>,
    /// Template expression basis `[v][i][axis]`; empty means no expression
    /// influence on joint locations.
    pub expr_basis: Vec<f32>,
    pub n_expr: usize,
    /// Row-major `n_joints × n_vertices`.
    pub joint_regressor: Vec<f32>,
    pub parents: Vec<Option<usize>>,
    /// Joints whose rotations feed the pose correctives, in 𝒫 order.
    pub corrective_joints: Vec<usize>,
    /// Joints treated as eyes for [`FlameTemplate::eye_correctives`].
    pub eye_joints: Vec<usize>,
    /// When false, eye rotations only drive skinning, not correctives.
    pub eye_correctives: bool,
    /// Joints whose rotations condition the appearance decoder (jaw, eyes).
    pub appearance_joints: Vec<usize>,
}

impl FlameTemplate {
    pub fn joint_count(&self) -> usize {
        self.parents.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn pose_count(&self) -> usize {
        self.corrective_joints.len()
    }

    /// Index of the unique root joint.
    pub fn root(&self) -> Result<usize> {
        let roots: Vec<usize> = (0..self.parents.len())
            .filter(|&j| self.parents[j].is_none())
            .collect();
        match roots.as_slice() {
            [r] => Ok(*r),
            _ => Err(Error::invalid(
                "kinematic tree",
                format!("expected exactly one root, found {}", roots.len()),
            )),
        }
    }

    /// Joints ordered so that parents precede children.
    pub fn topological_order(&self) -> Result<Vec<usize>> {
        let n = self.parents.len();
        let mut depth = alloc::vec![usize::MAX; n];
        for j in 0..n {
            let mut cur = j;
            let mut steps = 0;
            while let Some(p) = self.parents[cur] {
                if p >= n {
                    return Err(Error::invalid(
                        "kinematic tree",
                        format!("joint {cur} has out-of-range parent {p}"),
                    ));
                }
                cur = p;
                steps += 1;
                if steps > n {
                    return Err(Error::invalid("kinematic tree", "cycle detected"));
                }
            }
            depth[j] = steps;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&j| (depth[j], j));
        Ok(order)
    }

    pub fn validate(&self) -> Result<()> {
        let nj = self.joint_count();
        let nv = self.vertex_count();
        self.root()?;
        self.topological_order()?;
        Error::check_len("joint regressor", nj * nv, self.joint_regressor.len())?;
        if !self.expr_basis.is_empty() {
            Error::check_len("template expression basis", nv * self.n_expr * 3, self.expr_basis.len())?;
        }
        for j in 0..nj {
            let sum: f64 = self.joint_regressor[j * nv..(j + 1) * nv]
                .iter()
                .map(|&x| x as f64)
                .sum();
            if (sum - 1.0).abs() > 1e-4 {
                return Err(Error::invalid(
                    "joint regressor",
                    format!("row {j} sums to {sum}"),
                ));
            }
        }
        for &j in self
            .corrective_joints
            .iter()
            .chain(&self.eye_joints)
            .chain(&self.appearance_joints)
        {
            if j >= nj {
                return Err(Error::invalid(
                    "joint list",
                    format!("joint {j} out of range ({nj} joints)"),
                ));
            }
        }
        Ok(())
    }

    /// Template vertices with template expression offsets applied.
    pub fn shaped_vertices(&self, psi: &[f64]) -> Result<Vec<Vec3>> {
        let mut out: Vec<Vec3> = self.vertices.iter().map(|p| Vec3::from_f32(*p)).collect();
        if self.expr_basis.is_empty() {
            return Ok(out);
        }
        Error::check_len("expression coefficients", self.n_expr, psi.len())?;
        for (v, p) in out.iter_mut().enumerate() {
            let basis = &self.expr_basis[v * self.n_expr * 3..(v + 1) * self.n_expr * 3];
            *p += blend3(basis, psi);
        }
        Ok(out)
    }

    /// Rotations feeding the pose correctives, with eyes muted when
    /// `eye_correctives` is off.
    pub fn corrective_rotations(&self, rotations: &[Mat3]) -> Result<Vec<Mat3>> {
        Error::check_len("joint rotations", self.joint_count(), rotations.len())?;
        Ok(self
            .corrective_joints
            .iter()
            .map(|&j| {
                if !self.eye_correctives && self.eye_joints.contains(&j) {
                    Mat3::IDENTITY
                } else {
                    rotations[j]
                }
            })
            .collect())
    }

    /// Flattened rotation matrices of the appearance joints (row-major each).
    pub fn appearance_features(&self, rotations: &[Mat3]) -> Result<Vec<f64>> {
        Error::check_len("joint rotations", self.joint_count(), rotations.len())?;
        Ok(self
            .appearance_joints
            .iter()
            .flat_map(|&j| rotations[j].to_row_major())
            .collect())
    }
}

/// Per-frame pose: expression, joint rotations, global transform, camera.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePose {
    pub expression: Vec<f64>,
    /// One rotation per joint, root included.
    pub rotations: Vec<Mat3>,
    pub global: Rigid,
    pub camera: crate::camera::Camera,
}

impl FramePose {
    /// Rest pose: zero expression, identity rotations and global transform.
    pub fn rest(n_expr: usize, n_joints: usize, camera: crate::camera::Camera) -> Self {
        Self {
            expression: alloc::vec![0.0; n_expr],
            rotations: alloc::vec![Mat3::IDENTITY; n_joints],
            global: Rigid::IDENTITY,
            camera,
        }
    }

    pub fn validate(&self, n_expr: usize, n_joints: usize) -> Result<()> {
        Error::check_len("expression coefficients", n_expr, self.expression.len())?;
        Error::check_len("joint rotations", n_joints, self.rotations.len())?;
        check_rotations(&self.rotations)?;
        let err = self.global.rotation.orthonormality_error();
        if err > ORTHONORMAL_TOL {
            return Err(Error::NonOrthonormal {
                index: usize::MAX,
                error: err,
            });
        }
        Ok(())
    }

    /// True when only the root joint and the global transform move.
    pub fn is_rigid(&self, root: usize) -> bool {
        self.expression.iter().all(|&e| e == 0.0)
            && self
                .rotations
                .iter()
                .enumerate()
                .all(|(j, r)| j == root || *r == Mat3::IDENTITY)
    }
}

#[inline]
fn blend3(basis: &[f32], coeffs: &[f64]) -> Vec3 {
    let mut acc = [0.0f64; 3];
    for (c, b) in coeffs.iter().zip(basis.chunks_exact(3)) {
        acc[0] += c * b[0] as f64;
        acc[1] += c * b[1] as f64;
        acc[2] += c * b[2] as f64;
    }
    Vec3::new(acc[0], acc[1], acc[2])
}

fn check_rotations(rotations: &[Mat3]) -> Result<()> {
    for (index, r) in rotations.iter().enumerate() {
        let error = r.orthonormality_error();
        if error > ORTHONORMAL_TOL || !error.is_finite() {
            return Err(Error::NonOrthonormal { index, error });
        }
    }
    Ok(())
}

/// `B_E(ψ; ℰ)` for every vertex.
pub fn expression_offset(rig: &VertexRigging, psi: &[f64]) -> Result<Vec<Vec3>> {
    Error::check_len("expression coefficients", rig.n_expr, psi.len())?;
    Ok(par::map_range(rig.vertex_count(), |v| blend3(rig.expr_of(v), psi)))
}

/// Pose feature vector: `vec(R_j − I)` row-major, concatenated over joints.
pub fn pose_features(rotations: &[Mat3]) -> Result<Vec<f64>> {
    check_rotations(rotations)?;
    Ok(rotations
        .iter()
        .flat_map(|r| {
            let mut f = r.to_row_major();
            f[0] -= 1.0;
            f[4] -= 1.0;
            f[8] -= 1.0;
            f
        })
        .collect())
}

/// `B_P(θ; 𝒫)` for every vertex; `rotations` holds the `n_p` corrective
/// joint rotations.
pub fn pose_corrective_offset(rig: &VertexRigging, rotations: &[Mat3]) -> Result<Vec<Vec3>> {
    Error::check_len("corrective rotations", rig.n_pose, rotations.len())?;
    let features = pose_features(rotations)?;
    Ok(par::map_range(rig.vertex_count(), |v| {
        blend3(rig.pose_of(v), &features)
    }))
}

/// `J(shaped)`: joint positions regressed from shaped template vertices.
pub fn regress_joints(template: &FlameTemplate, shaped: &[Vec3]) -> Result<Vec<Vec3>> {
    let nv = template.vertex_count();
    Error::check_len("shaped vertices", nv, shaped.len())?;
    Error::check_len(
        "joint regressor",
        template.joint_count() * nv,
        template.joint_regressor.len(),
    )?;
    Ok((0..template.joint_count())
        .map(|j| {
            let row = &template.joint_regressor[j * nv..(j + 1) * nv];
            row.iter()
                .zip(shaped)
                .fold(Vec3::ZERO, |acc, (&w, p)| acc + *p * w as f64)
        })
        .collect())
}

/// Forward kinematics relative to the rest pose.
///
/// Each joint rotates about its regressed center; the root is additionally
/// carried by `global`.
pub fn bone_transforms(
    template: &FlameTemplate,
    joints: &[Vec3],
    rotations: &[Mat3],
    global: &Rigid,
) -> Result<Vec<Rigid>> {
    let nj = template.joint_count();
    Error::check_len("joints", nj, joints.len())?;
    Error::check_len("joint rotations", nj, rotations.len())?;
    let order = template.topological_order()?;
    let mut out = alloc::vec![Rigid::IDENTITY; nj];
    for j in order {
        let local = Rigid::rotation_about(rotations[j], joints[j]);
        out[j] = match template.parents[j] {
            Some(p) => out[p].compose(&local),
            None => global.compose(&local),
        };
    }
    Ok(out)
}

/// Everything about a frame that is shared across vertices of all layers.
#[derive(Debug, Clone)]
pub struct FrameRig {
    pub expression: Vec<f64>,
    pub pose_features: Vec<f64>,
    pub bones: Vec<Rigid>,
}

impl FrameRig {
    pub fn new(template: &FlameTemplate, pose: &FramePose) -> Result<Self> {
        pose.validate(template.n_expr, template.joint_count())?;
        let shaped = template.shaped_vertices(&pose.expression)?;
        let joints = regress_joints(template, &shaped)?;
        let bones = bone_transforms(template, &joints, &pose.rotations, &pose.global)?;
        let pose_features = pose_features(&template.corrective_rotations(&pose.rotations)?)?;
        Ok(Self {
            expression: pose.expression.clone(),
            pose_features,
            bones,
        })
    }

    /// Deforms one vertex; returns `None` for zero-sum weights.
    #[inline]
    pub fn deform_vertex(
        &self,
        rig: &VertexRigging,
        v: usize,
        position: Vec3,
        normal: Vec3,
    ) -> Option<(Vec3, Vec3)> {
        let shaped = position
            + blend3(rig.expr_of(v), &self.expression)
            + blend3(rig.pose_of(v), &self.pose_features);
        let weights = rig.weights_of(v);
        let mut rot = Mat3::ZERO;
        let mut trans = Vec3::ZERO;
        let mut sum = 0.0f64;
        for (bone, &w) in self.bones.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            let w = w as f64;
            sum += w;
            rot = rot + bone.rotation.scale(w);
            trans += bone.translation * w;
        }
        if sum.abs() < 1e-8 {
            return None;
        }
        let p = rot.mul_vec(shaped) + trans;
        let n = rot.mul_vec(normal).normalize();
        Some((p, n))
    }
}

/// Deformed layer geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct Deformed {
    pub positions: Vec<[f32; 3]>,
    pub normals: Vec<[f32; 3]>,
}

/// Applies the full deformation to one baked layer.
pub fn deform_vertices(
    mesh: &crate::mesh::RiggedMesh,
    template: &FlameTemplate,
    pose: &FramePose,
) -> Result<Deformed> {
    let frame = FrameRig::new(template, pose)?;
    deform_with(mesh, &frame)
}

/// Deformation with a precomputed [`FrameRig`].
pub fn deform_with(mesh: &crate::mesh::RiggedMesh, frame: &FrameRig) -> Result<Deformed> {
    let rig = &mesh.rigging;
    Error::check_len("rigging vertices", mesh.vertex_count(), rig.vertex_count())?;
    Error::check_len("expression coefficients", rig.n_expr, frame.expression.len())?;
    Error::check_len("pose features", rig.n_pose * 9, frame.pose_features.len())?;
    Error::check_len("bones", rig.n_joints, frame.bones.len())?;
    let results = par::map_range(mesh.vertex_count(), |v| {
        frame.deform_vertex(
            rig,
            v,
            Vec3::from_f32(mesh.positions[v]),
            Vec3::from_f32(mesh.normals[v]),
        )
    });
    let mut positions = Vec::with_capacity(results.len());
    let mut normals = Vec::with_capacity(results.len());
    for (vertex, r) in results.into_iter().enumerate() {
        let (p, n) = r.ok_or(Error::DegenerateWeights { vertex })?;
        positions.push(p.to_f32());
        normals.push(n.to_f32());
    }
    Ok(Deformed { positions, normals })
}

/// FLAME joint order used by the synthetic templates:
/// root, neck, jaw, left eye, right eye.
pub fn flame_parents() -> Vec<Option<usize>> {
    alloc::vec![None, Some(0), Some(1), Some(1), Some(1)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::Camera;
    use crate::mesh::RiggedMesh;
    use core::f64::consts::FRAC_PI_2;
    use rand_core::{RngCore, SeedableRng};
    use rand_pcg::Pcg64;

    fn uniform(rng: &mut Pcg64, lo: f64, hi: f64) -> f64 {
        let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }

    fn random_rotation(rng: &mut Pcg64) -> Mat3 {
        let axis = Vec3::new(
            uniform(rng, -1.0, 1.0),
            uniform(rng, -1.0, 1.0),
            uniform(rng, -1.0, 1.0),
        );
        Mat3::from_axis_angle(axis, uniform(rng, -1.0, 1.0))
    }

    fn random_rig(rng: &mut Pcg64, nv: usize, ne: usize, np: usize, nj: usize) -> VertexRigging {
        let mut rig = VertexRigging::zeros(nv, ne, np, nj);
        for x in rig.expr.iter_mut().chain(rig.pose.iter_mut()) {
            *x = uniform(rng, -0.1, 0.1) as f32;
        }
        for v in 0..nv {
            let raw: Vec<f64> = (0..nj).map(|_| uniform(rng, 0.0, 1.0)).collect();
            let s: f64 = raw.iter().sum();
            for j in 0..nj {
                rig.weights[v * nj + j] = (raw[j] / s) as f32;
            }
        }
        rig
    }

    fn chain_template(nv: usize, rng: &mut Pcg64) -> FlameTemplate {
        let nj = 5;
        let vertices: Vec<[f32; 3]> = (0..nv)
            .map(|_| {
                [
                    uniform(rng, -1.0, 1.0) as f32,
                    uniform(rng, -1.0, 1.0) as f32,
                    uniform(rng, -1.0, 1.0) as f32,
                ]
            })
            .collect();
        let mut joint_regressor = alloc::vec![0.0f32; nj * nv];
        for j in 0..nj {
            let raw: Vec<f64> = (0..nv).map(|_| uniform(rng, 0.0, 1.0)).collect();
            let s: f64 = raw.iter().sum();
            for v in 0..nv {
                joint_regressor[j * nv + v] = (raw[v] / s) as f32;
            }
        }
        FlameTemplate {
            vertices,
            expr_basis: Vec::new(),
            n_expr: 3,
            joint_regressor,
            parents: flame_parents(),
            corrective_joints: alloc::vec![1, 2, 3, 4],
            eye_joints: alloc::vec![3, 4],
            eye_correctives: true,
            appearance_joints: alloc::vec![2, 3, 4],
        }
    }

    #[test]
    fn expression_offset_zero_and_basis() {
        let mut rng = Pcg64::seed_from_u64(1);
        let rig = random_rig(&mut rng, 4, 3, 4, 5);
        let zero = expression_offset(&rig, &[0.0; 3]).unwrap();
        assert!(zero.iter().all(|o| *o == Vec3::ZERO));
        let e1 = expression_offset(&rig, &[0.0, 1.0, 0.0]).unwrap();
        for (v, o) in e1.iter().enumerate() {
            let b = &rig.expr_of(v)[3..6];
            assert_eq!(o.to_array(), [b[0] as f64, b[1] as f64, b[2] as f64]);
        }
    }

    #[test]
    fn expression_offset_rejects_wrong_length() {
        let rig = VertexRigging::zeros(2, 3, 1, 1);
        assert!(matches!(
            expression_offset(&rig, &[0.0; 2]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pose_corrective_identity_is_zero() {
        let mut rng = Pcg64::seed_from_u64(2);
        let rig = random_rig(&mut rng, 4, 3, 4, 5);
        let off = pose_corrective_offset(&rig, &[Mat3::IDENTITY; 4]).unwrap();
        assert!(off.iter().all(|o| *o == Vec3::ZERO));
    }

    #[test]
    fn pose_corrective_single_entry() {
        // Rz(90°) = [[0,-1,0],[1,0,0],[0,0,1]]; R − I entry (0,1) is −1.
        let mut rig = VertexRigging::zeros(1, 0, 1, 1);
        rig.weights[0] = 1.0;
        // feature k = 1 (row 0, col 1), axis y.
        rig.pose[1 * 3 + 1] = 0.25;
        let r = Mat3::from_axis_angle(Vec3::Z, FRAC_PI_2);
        let off = pose_corrective_offset(&rig, &[r]).unwrap();
        assert!((off[0] - Vec3::new(0.0, -0.25, 0.0)).length() < 1e-12);
    }

    #[test]
    fn pose_corrective_rejects_shear() {
        let rig = VertexRigging::zeros(1, 0, 1, 1);
        let mut m = Mat3::IDENTITY;
        m.0[0][1] = 0.1;
        assert!(matches!(
            pose_corrective_offset(&rig, &[m]),
            Err(Error::NonOrthonormal { .. })
        ));
    }

    #[test]
    fn regress_selection_and_mean() {
        let mut rng = Pcg64::seed_from_u64(3);
        let mut t = chain_template(6, &mut rng);
        let nv = 6;
        t.joint_regressor.iter_mut().for_each(|x| *x = 0.0);
        for j in 0..5 {
            t.joint_regressor[j * nv + j] = 1.0;
        }
        let shaped: Vec<Vec3> = t.vertices.iter().map(|p| Vec3::from_f32(*p)).collect();
        let joints = regress_joints(&t, &shaped).unwrap();
        for j in 0..5 {
            assert_eq!(joints[j], shaped[j]);
        }
        for v in 0..nv {
            t.joint_regressor[v] = 1.0 / nv as f32;
        }
        let joints = regress_joints(&t, &shaped).unwrap();
        let centroid = shaped.iter().fold(Vec3::ZERO, |a, p| a + *p) * (1.0 / nv as f64);
        assert!((joints[0] - centroid).length() < 1e-6);
        assert!(regress_joints(&t, &shaped[..5]).is_err());
    }

    #[test]
    fn bone_transforms_rest_is_identity() {
        let mut rng = Pcg64::seed_from_u64(4);
        let t = chain_template(6, &mut rng);
        let joints: Vec<Vec3> = (0..5).map(|j| Vec3::new(j as f64, 0.5, -0.2)).collect();
        let bones =
            bone_transforms(&t, &joints, &[Mat3::IDENTITY; 5], &Rigid::IDENTITY).unwrap();
        for b in bones {
            assert!((b.translation).length() < 1e-15);
            assert_eq!(b.rotation, Mat3::IDENTITY);
        }
    }

    #[test]
    fn two_joint_chain_child_quarter_turn() {
        let t = FlameTemplate {
            vertices: alloc::vec![[0.0; 3]],
            expr_basis: Vec::new(),
            n_expr: 0,
            joint_regressor: alloc::vec![1.0, 1.0],
            parents: alloc::vec![None, Some(0)],
            corrective_joints: alloc::vec![1],
            eye_joints: Vec::new(),
            eye_correctives: true,
            appearance_joints: Vec::new(),
        };
        let joints = [Vec3::ZERO, Vec3::new(2.0, 1.0, 0.0)];
        let rot = [Mat3::IDENTITY, Mat3::from_axis_angle(Vec3::Z, FRAC_PI_2)];
        let bones = bone_transforms(&t, &joints, &rot, &Rigid::IDENTITY).unwrap();
        let moved = bones[1].apply(joints[1] + Vec3::X);
        assert!((moved - (joints[1] + Vec3::Y)).length() < 1e-12);
    }

    #[test]
    fn deform_rest_pose_and_translation() {
        let mut rng = Pcg64::seed_from_u64(5);
        let t = chain_template(6, &mut rng);
        let nv = 8;
        let mut rig = random_rig(&mut rng, nv, 3, 4, 5);
        let mesh = RiggedMesh {
            positions: (0..nv).map(|i| [i as f32 * 0.1, 0.2, -0.3]).collect(),
            normals: alloc::vec![[0.0, 0.0, 1.0]; nv],
            uvs: alloc::vec![[0.5, 0.5]; nv],
            triangles: Vec::new(),
            rigging: rig.clone(),
            level_index: 0,
            level: 0.0,
        };
        let pose = FramePose::rest(3, 5, Camera::default());
        let d = deform_vertices(&mesh, &t, &pose).unwrap();
        for v in 0..nv {
            for a in 0..3 {
                assert!((d.positions[v][a] - mesh.positions[v][a]).abs() < 1e-6);
            }
        }
        // One-hot root weights with a translated global transform.
        for v in 0..nv {
            for j in 0..5 {
                rig.weights[v * 5 + j] = if j == 0 { 1.0 } else { 0.0 };
            }
        }
        let mesh = RiggedMesh { rigging: rig, ..mesh };
        let mut pose = pose;
        pose.global = Rigid::translation(Vec3::new(0.5, -1.0, 2.0));
        let d = deform_vertices(&mesh, &t, &pose).unwrap();
        for v in 0..nv {
            let expect = Vec3::from_f32(mesh.positions[v]) + pose.global.translation;
            assert!((Vec3::from_f32(d.positions[v]) - expect).length() < 1e-6);
        }
    }

    #[test]
    fn zero_weights_are_rejected() {
        let mut rng = Pcg64::seed_from_u64(6);
        let t = chain_template(6, &mut rng);
        let mut rig = random_rig(&mut rng, 1, 3, 4, 5);
        rig.weights.iter_mut().for_each(|w| *w = 0.0);
        let mesh = RiggedMesh {
            positions: alloc::vec![[0.0; 3]],
            normals: alloc::vec![[0.0, 0.0, 1.0]],
            uvs: alloc::vec![[0.0; 2]],
            triangles: Vec::new(),
            rigging: rig,
            level_index: 0,
            level: 0.0,
        };
        let pose = FramePose::rest(3, 5, Camera::default());
        assert_eq!(
            deform_vertices(&mesh, &t, &pose),
            Err(Error::DegenerateWeights { vertex: 0 })
        );
    }

    #[test]
    fn template_validation() {
        let mut rng = Pcg64::seed_from_u64(7);
        let mut t = chain_template(6, &mut rng);
        assert!(t.validate().is_ok());
        t.parents = alloc::vec![None, Some(0), None, Some(1), Some(1)];
        assert!(t.validate().is_err());
        t.parents = alloc::vec![Some(1), Some(0), None, Some(1), Some(1)];
        assert!(t.validate().is_err());
    }

    #[test]
    fn muted_eye_correctives() {
        let mut rng = Pcg64::seed_from_u64(8);
        let mut t = chain_template(6, &mut rng);
        let rots: Vec<Mat3> = (0..5).map(|_| random_rotation(&mut rng)).collect();
        t.eye_correctives = false;
        let c = t.corrective_rotations(&rots).unwrap();
        assert_eq!(c[0], rots[1]);
        assert_eq!(c[2], Mat3::IDENTITY);
        assert_eq!(c[3], Mat3::IDENTITY);
    }
}
