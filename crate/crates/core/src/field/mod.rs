//! Continuous fields the avatar is baked from, and a ray-traced reference
//! renderer over them.
//!
//! A [`FieldScene`] bundles three fields over canonical space: a scalar
//! manifold whose level sets are the layer surfaces, a radiance field that
//! produces `n_T` color/occupancy bases plus a position feature, and a
//! deformation field producing per-point rigging. Analytic implementations
//! live in [`library`]; [`lattice`] wraps a sampled grid.

pub mod lattice;
pub mod library;
mod oracle;
mod trace;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

pub use oracle::{accumulate_front_to_back, oracle_render, select_hits, HitSelection, OracleSettings};
pub use trace::{ray_isosurface_intersections, IsoHit, TraceSettings};

use crate::math::{Aabb, Vec3};
use crate::rig::FlameTemplate;
use crate::{Error, Result};

/// Scalar field `x_c ↦ s` whose level sets are the layer surfaces. Points
/// with `s < level` are inside the level's surface.
pub trait ManifoldField: Send + Sync {
    fn eval(&self, x: Vec3) -> f64;

    /// Gradient by central differences with step `h`.
    fn gradient(&self, x: Vec3, h: f64) -> Vec3 {
        let inv = 0.5 / h;
        Vec3::new(
            (self.eval(x + Vec3::X * h) - self.eval(x - Vec3::X * h)) * inv,
            (self.eval(x + Vec3::Y * h) - self.eval(x - Vec3::Y * h)) * inv,
            (self.eval(x + Vec3::Z * h) - self.eval(x - Vec3::Z * h)) * inv,
        )
    }
}

/// Output of one radiance query.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RadianceSample {
    pub colors: Vec<[f32; 3]>,
    pub occupancies: Vec<f32>,
    pub feature: Vec<f32>,
}

impl RadianceSample {
    pub fn new(n_bases: usize, feature_dim: usize) -> Self {
        Self {
            colors: alloc::vec![[0.0; 3]; n_bases],
            occupancies: alloc::vec![0.0; n_bases],
            feature: alloc::vec![0.0; feature_dim],
        }
    }

    pub fn clamp_unit(&mut self) {
        let c = |v: &mut f32| *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        self.colors.iter_mut().flatten().for_each(c);
        self.occupancies.iter_mut().for_each(c);
        self.feature.iter_mut().for_each(c);
    }
}

/// Radiance bases and position feature over canonical space.
pub trait RadianceField: Send + Sync {
    fn n_bases(&self) -> usize;
    fn feature_dim(&self) -> usize;
    /// Fills `out`, which is sized for this field. Values may leave `[0,1]`;
    /// [`FieldScene::radiance_eval`] clamps.
    fn eval_into(&self, x: Vec3, out: &mut RadianceSample);
}

/// Per-point rigging attributes `(ℰ, 𝒫, 𝒲)`.
pub trait DeformationField: Send + Sync {
    fn n_expr(&self) -> usize;
    fn n_pose(&self) -> usize;
    fn n_joints(&self) -> usize;
    /// `expr` holds `n_e·3`, `pose` holds `n_p·27`, `weights` holds `n_j`.
    fn eval_into(&self, x: Vec3, expr: &mut [f32], pose: &mut [f32], weights: &mut [f32]);
}

/// A complete set of fields plus the layer levels and canonical bounds.
pub struct FieldScene {
    pub name: String,
    /// Canonical description used for provenance hashing.
    pub descriptor: String,
    pub manifold: Box<dyn ManifoldField>,
    pub radiance: Box<dyn RadianceField>,
    pub deformation: Box<dyn DeformationField>,
    pub template: FlameTemplate,
    pub levels: Vec<f64>,
    pub bounds: Aabb,
}

impl core::fmt::Debug for FieldScene {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("FieldScene")
            .field("name", &self.name)
            .field("levels", &self.levels)
            .field("bounds", &self.bounds)
            .finish_non_exhaustive()
    }
}

impl FieldScene {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::invalid("levels", "no levels"));
        }
        if self.levels.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("levels", "levels must be strictly increasing"));
        }
        if self.bounds.is_degenerate() {
            return Err(Error::invalid("bounds", "degenerate bounding box"));
        }
        self.template.validate()?;
        Error::check_len("deformation joints", self.template.joint_count(), self.deformation.n_joints())?;
        Error::check_len("deformation expressions", self.template.n_expr, self.deformation.n_expr())?;
        Error::check_len("deformation pose joints", self.template.pose_count(), self.deformation.n_pose())?;
        Ok(())
    }

    pub fn n_bases(&self) -> usize {
        self.radiance.n_bases()
    }

    pub fn feature_dim(&self) -> usize {
        self.radiance.feature_dim()
    }

    #[inline]
    pub fn manifold_eval(&self, x: Vec3) -> f64 {
        self.manifold.eval(x)
    }

    /// Radiance query clamped to `[0, 1]`.
    pub fn radiance_eval(&self, x: Vec3) -> RadianceSample {
        let mut s = self.new_sample();
        self.radiance_eval_into(x, &mut s);
        s
    }

    #[inline]
    pub fn radiance_eval_into(&self, x: Vec3, out: &mut RadianceSample) {
        self.radiance.eval_into(x, out);
        out.clamp_unit();
    }

    pub fn new_sample(&self) -> RadianceSample {
        RadianceSample::new(self.n_bases(), self.feature_dim())
    }
}

/// `n` levels evenly spaced over `[lo, hi]`, both ends included.
pub fn even_levels(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => alloc::vec![hi],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_levels() {
        let l = even_levels(8, -0.2, 0.0);
        assert_eq!(l.len(), 8);
        assert_eq!(l[0], -0.2);
        assert_eq!(l[7], 0.0);
        for w in l.windows(2) {
            assert!((w[1] - w[0] - 0.2 / 7.0).abs() < 1e-12);
        }
    }
}
