//! Ray / level-set intersection by uniform marching and bisection.

use alloc::vec::Vec;

use super::ManifoldField;
use crate::math::{ceil, Aabb, Vec3};

/// One ray crossing of a level surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsoHit {
    pub t: f64,
    pub position: Vec3,
    pub level_index: usize,
    /// Normalized manifold gradient at the hit.
    pub normal: Vec3,
    /// True when the ray moves from outside (`s ≥ l`) to inside (`s < l`).
    pub entering: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSettings {
    /// Marching step; `None` uses `bounds diagonal / 512`.
    pub step: Option<f64>,
    /// Bisection stops when the bracket is narrower than this.
    pub tolerance: f64,
    /// Finite-difference step for hit normals.
    pub gradient_step: f64,
}

impl Default for TraceSettings {
    fn default() -> Self {
        Self {
            step: None,
            tolerance: 1e-5,
            gradient_step: 1e-4,
        }
    }
}

impl TraceSettings {
    pub fn step_for(&self, bounds: &Aabb) -> f64 {
        self.step.unwrap_or(bounds.diagonal() / 512.0)
    }
}

/// All crossings of `levels` along `origin + t·dir` inside `bounds`, sorted
/// by `t` (ties by level index). At most one hit is reported per sign-change
/// bracket.
pub fn ray_isosurface_intersections(
    manifold: &dyn ManifoldField,
    bounds: &Aabb,
    origin: Vec3,
    dir: Vec3,
    levels: &[f64],
    settings: &TraceSettings,
) -> Vec<IsoHit> {
    let mut hits = Vec::new();
    let Some((t0, t1)) = bounds.clip_ray(origin, dir) else {
        return hits;
    };
    if t1 <= t0 {
        return hits;
    }
    let h = settings.step_for(bounds);
    let steps = ceil((t1 - t0) / h).max(1.0) as usize;
    let at = |k: usize| if k == steps { t1 } else { t0 + k as f64 * h };

    let mut t_prev = at(0);
    let mut s_prev = manifold.eval(origin + dir * t_prev);
    for k in 1..=steps {
        let t_next = at(k);
        let s_next = manifold.eval(origin + dir * t_next);
        for (level_index, &level) in levels.iter().enumerate() {
            let (a, b) = (s_prev - level, s_next - level);
            let outside_a = a >= 0.0;
            let outside_b = b >= 0.0;
            if outside_a == outside_b {
                continue;
            }
            let t = bisect(manifold, origin, dir, level, t_prev, t_next, outside_a, settings.tolerance);
            let position = origin + dir * t;
            let normal = manifold.gradient(position, settings.gradient_step).normalize();
            hits.push(IsoHit {
                t,
                position,
                level_index,
                normal,
                entering: outside_a,
            });
        }
        t_prev = t_next;
        s_prev = s_next;
    }
    hits.sort_by(|a, b| {
        a.t.partial_cmp(&b.t)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.level_index.cmp(&b.level_index))
    });
    hits
}

#[allow(clippy::too_many_arguments)]
fn bisect(
    manifold: &dyn ManifoldField,
    origin: Vec3,
    dir: Vec3,
    level: f64,
    mut lo: f64,
    mut hi: f64,
    outside_lo: bool,
    tolerance: f64,
) -> f64 {
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        let outside = manifold.eval(origin + dir * mid) - level >= 0.0;
        if outside == outside_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
