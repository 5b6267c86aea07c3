//! Fields sampled on a regular grid and read back by trilinear interpolation.
//!
//! Channels are stored planar: channel `c` of grid point `(x, y, z)` lives at
//! `data[c·N + (z·ny + y)·nx + x]` with `N = nx·ny·nz`. Channel order is the
//! manifold value, then `3·n_T` colors (basis-major, RGB), `n_T`
//! occupancies, `d_p` position features.

use alloc::boxed::Box;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec::Vec;

use super::{DeformationField, FieldScene, ManifoldField, RadianceField, RadianceSample};
use crate::math::{floor, Aabb, Vec3};
use crate::rig::FlameTemplate;
use crate::{par, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    pub dims: [usize; 3],
    pub bounds: Aabb,
    pub n_bases: usize,
    pub feature_dim: usize,
    pub data: Vec<f32>,
}

impl LatticeField {
    pub fn channel_count(n_bases: usize, feature_dim: usize) -> usize {
        1 + 4 * n_bases + feature_dim
    }

    pub fn channels(&self) -> usize {
        Self::channel_count(self.n_bases, self.feature_dim)
    }

    pub fn point_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.iter().any(|&d| d < 2) {
            return Err(Error::invalid("lattice", format!("dims {:?} below 2", self.dims)));
        }
        if self.bounds.is_degenerate() {
            return Err(Error::invalid("lattice", "degenerate bounds"));
        }
        Error::check_len("lattice data", self.point_count() * self.channels(), self.data.len())?;
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("lattice", "non-finite sample"));
        }
        Ok(())
    }

    /// World position of grid point `(i, j, k)`.
    pub fn point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let s = self.bounds.size();
        let f = |idx: usize, d: usize| idx as f64 / (d - 1) as f64;
        self.bounds.min
            + Vec3::new(
                s.x * f(i, self.dims[0]),
                s.y * f(j, self.dims[1]),
                s.z * f(k, self.dims[2]),
            )
    }

    /// Samples every channel of `scene` at the grid points.
    pub fn sample_from(scene: &FieldScene, dims: [usize; 3]) -> Result<Self> {
        let mut lattice = Self {
            dims,
            bounds: scene.bounds,
            n_bases: scene.n_bases(),
            feature_dim: scene.feature_dim(),
            data: Vec::new(),
        };
        if dims.iter().any(|&d| d < 2) {
            return Err(Error::invalid("lattice", format!("dims {dims:?} below 2")));
        }
        let n = lattice.point_count();
        let nc = lattice.channels();
        let [nx, ny, _] = dims;
        let slabs = par::map_range(dims[2], |k| {
            let mut out = Vec::with_capacity(nx * ny * nc);
            let mut sample = scene.new_sample();
            for j in 0..ny {
                for i in 0..nx {
                    let x = lattice.point(i, j, k);
                    scene.radiance_eval_into(x, &mut sample);
                    out.push(scene.manifold_eval(x) as f32);
                    out.extend(sample.colors.iter().flatten());
                    out.extend_from_slice(&sample.occupancies);
                    out.extend_from_slice(&sample.feature);
                }
            }
            out
        });
        let mut data = alloc::vec![0.0f32; n * nc];
        for (k, slab) in slabs.iter().enumerate() {
            for (p, values) in slab.chunks_exact(nc).enumerate() {
                let idx = k * nx * ny + p;
                for (c, v) in values.iter().enumerate() {
                    data[c * n + idx] = *v;
                }
            }
        }
        lattice.data = data;
        Ok(lattice)
    }

    /// Trilinear cell lookup: base index and fractional offsets, clamped to
    /// the grid.
    #[inline]
    fn locate(&self, x: Vec3) -> ([usize; 3], [f64; 3]) {
        let s = self.bounds.size();
        let mut base = [0usize; 3];
        let mut frac = [0.0f64; 3];
        for a in 0..3 {
            let d = self.dims[a];
            let u = ((x[a] - self.bounds.min[a]) / s[a] * (d - 1) as f64).clamp(0.0, (d - 1) as f64);
            let i = (floor(u) as usize).min(d - 2);
            base[a] = i;
            frac[a] = u - i as f64;
        }
        (base, frac)
    }

    #[inline]
    fn interp(&self, channel: usize, base: [usize; 3], frac: [f64; 3]) -> f64 {
        let [nx, ny, _] = self.dims;
        let n = self.point_count();
        let plane = &self.data[channel * n..(channel + 1) * n];
        let at = |i: usize, j: usize, k: usize| plane[(k * ny + j) * nx + i] as f64;
        let [i, j, k] = base;
        let [fx, fy, fz] = frac;
        let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
        let c00 = lerp(at(i, j, k), at(i + 1, j, k), fx);
        let c10 = lerp(at(i, j + 1, k), at(i + 1, j + 1, k), fx);
        let c01 = lerp(at(i, j, k + 1), at(i + 1, j, k + 1), fx);
        let c11 = lerp(at(i, j + 1, k + 1), at(i + 1, j + 1, k + 1), fx);
        lerp(lerp(c00, c10, fy), lerp(c01, c11, fy), fz)
    }

    pub fn eval_channel(&self, channel: usize, x: Vec3) -> f64 {
        let (b, f) = self.locate(x);
        self.interp(channel, b, f)
    }

    /// Builds a scene from the lattice plus deformation data supplied
    /// separately (dumps carry no rigging).
    pub fn into_scene(
        self,
        name: &str,
        descriptor: &str,
        levels: Vec<f64>,
        deformation: Box<dyn DeformationField>,
        template: FlameTemplate,
    ) -> Result<FieldScene> {
        self.validate()?;
        let bounds = self.bounds;
        let shared = Arc::new(self);
        let scene = FieldScene {
            name: name.into(),
            descriptor: descriptor.into(),
            manifold: Box::new(LatticeManifold(shared.clone())),
            radiance: Box::new(LatticeRadiance(shared)),
            deformation,
            template,
            levels,
            bounds,
        };
        scene.validate()?;
        Ok(scene)
    }
}

/// Manifold channel of a shared lattice.
#[derive(Debug, Clone)]
pub struct LatticeManifold(pub Arc<LatticeField>);

impl ManifoldField for LatticeManifold {
    fn eval(&self, x: Vec3) -> f64 {
        self.0.eval_channel(0, x)
    }
}

/// Radiance channels of a shared lattice.
#[derive(Debug, Clone)]
pub struct LatticeRadiance(pub Arc<LatticeField>);

impl RadianceField for LatticeRadiance {
    fn n_bases(&self) -> usize {
        self.0.n_bases
    }
    fn feature_dim(&self) -> usize {
        self.0.feature_dim
    }
    fn eval_into(&self, x: Vec3, out: &mut RadianceSample) {
        let l = &*self.0;
        let (b, f) = l.locate(x);
        let mut c = 1;
        for col in out.colors.iter_mut() {
            for v in col.iter_mut() {
                *v = l.interp(c, b, f) as f32;
                c += 1;
            }
        }
        for a in out.occupancies.iter_mut() {
            *a = l.interp(c, b, f) as f32;
            c += 1;
        }
        for p in out.feature.iter_mut() {
            *p = l.interp(c, b, f) as f32;
            c += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::library::{self, SceneConfig, SmoothDeformation};

    #[test]
    fn reproduces_grid_values_and_linear_fields() {
        let cfg = SceneConfig {
            n_bases: 2,
            feature_dim: 4,
            ..SceneConfig::default()
        };
        let scene = library::axis_gradient(&cfg);
        let lattice = LatticeField::sample_from(&scene, [9, 7, 5]).unwrap();
        lattice.validate().unwrap();
        let p = lattice.point(3, 2, 1);
        assert!((lattice.eval_channel(0, p) - scene.manifold_eval(p)).abs() < 1e-6);
        let d = SmoothDeformation::new(cfg.n_expr, 4, 0);
        let t = library::synthetic_head_template(64, &d);
        let ls = lattice
            .into_scene("lat", "lat", cfg.levels(), Box::new(d), t)
            .unwrap();
        // The axis ramp is linear inside the box, so trilinear is exact.
        let x = Vec3::new(0.123, -0.456, 0.289);
        let a = ls.radiance_eval(x);
        let b = scene.radiance_eval(x);
        for (u, v) in a.feature.iter().zip(&b.feature) {
            assert!((u - v).abs() < 1e-5);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        let mut l = LatticeField {
            dims: [2, 2, 2],
            bounds: Aabb::cube(1.0),
            n_bases: 1,
            feature_dim: 1,
            data: alloc::vec![0.0; 8 * 6],
        };
        l.validate().unwrap();
        l.data.pop();
        assert!(l.validate().is_err());
        l.dims = [1, 2, 2];
        assert!(l.validate().is_err());
    }
}
