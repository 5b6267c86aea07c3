//! Regular sampling grids.

use alloc::format;
use alloc::vec::Vec;

use crate::field::ManifoldField;
use crate::math::{Aabb, Vec3};
use crate::{par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Sample points per axis.
    pub resolution: [usize; 3],
    pub bounds: Aabb,
}

impl GridSpec {
    pub fn cubic(resolution: usize, bounds: Aabb) -> Self {
        Self {
            resolution: [resolution; 3],
            bounds,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution.iter().any(|&r| r < 2) {
            return Err(Error::invalid(
                "grid",
                format!("resolution {:?} below 2", self.resolution),
            ));
        }
        if self.bounds.is_degenerate() {
            return Err(Error::invalid("grid", "degenerate bounds"));
        }
        Ok(())
    }

    pub fn cell_size(&self) -> Vec3 {
        let s = self.bounds.size();
        Vec3::new(
            s.x / (self.resolution[0] - 1) as f64,
            s.y / (self.resolution[1] - 1) as f64,
            s.z / (self.resolution[2] - 1) as f64,
        )
    }

    /// Largest cell extent.
    pub fn max_cell(&self) -> f64 {
        let c = self.cell_size();
        c.x.max(c.y).max(c.z)
    }

    #[inline]
    pub fn point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        let c = self.cell_size();
        self.bounds.min + Vec3::new(i as f64 * c.x, j as f64 * c.y, k as f64 * c.z)
    }

    pub fn point_count(&self) -> usize {
        self.resolution.iter().product()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.resolution[1] + j) * self.resolution[0] + i
    }
}

/// Field values at every grid point, `x` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    pub spec: GridSpec,
    pub values: Vec<f32>,
}

impl ScalarGrid {
    pub fn sample(field: &dyn ManifoldField, spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let [nx, ny, nz] = spec.resolution;
        let slabs = par::map_range(nz, |k| {
            let mut out = Vec::with_capacity(nx * ny);
            for j in 0..ny {
                for i in 0..nx {
                    out.push(field.eval(spec.point(i, j, k)) as f32);
                }
            }
            out
        });
        Ok(Self {
            spec,
            values: slabs.into_iter().flatten().collect(),
        })
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f32 {
        self.values[self.spec.index(i, j, k)]
    }

    pub fn range(&self) -> (f32, f32) {
        self.values
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}
