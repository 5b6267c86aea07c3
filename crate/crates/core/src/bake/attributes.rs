//! Per-vertex normals and rigging sampled from the scene fields.

use alloc::vec::Vec;

use crate::field::FieldScene;
use crate::math::Vec3;
use crate::mesh::TriMesh;
use crate::rig::VertexRigging;
use crate::{par, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct VertexAttributes {
    pub normals: Vec<Vec3>,
    pub rigging: VertexRigging,
    /// Vertices whose field gradient vanished and got the mesh normal.
    pub normal_fallbacks: usize,
}

/// Normals from the manifold gradient (central differences with step
/// `fd_step`) and rigging from the deformation field, with skinning weights
/// renormalized to sum to one.
pub fn bake_vertex_attributes(mesh: &TriMesh, scene: &FieldScene, fd_step: f64) -> Result<VertexAttributes> {
    let def = scene.deformation.as_ref();
    let (ne, np, nj) = (def.n_expr(), def.n_pose(), def.n_joints());
    let per_vertex = par::map_range(mesh.vertex_count(), |v| {
        let x = mesh.positions[v];
        let g = scene.manifold.gradient(x, fd_step);
        let mut e = alloc::vec![0.0f32; ne * 3];
        let mut p = alloc::vec![0.0f32; np * 27];
        let mut w = alloc::vec![0.0f32; nj];
        def.eval_into(x, &mut e, &mut p, &mut w);
        for x in w.iter_mut() {
            *x = x.max(0.0);
        }
        let sum: f32 = w.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            for x in w.iter_mut() {
                *x /= sum;
            }
        } else {
            w.fill(0.0);
            w[0] = 1.0;
        }
        (g.try_normalize().filter(|n| n.is_finite()), e, p, w)
    });
    let mut fallback: Option<Vec<Vec3>> = None;
    let mut normals = Vec::with_capacity(per_vertex.len());
    let mut rigging = VertexRigging::zeros(0, ne, np, nj);
    let mut normal_fallbacks = 0;
    for (v, (n, e, p, w)) in per_vertex.into_iter().enumerate() {
        let n = match n {
            Some(n) => n,
            None => {
                normal_fallbacks += 1;
                let fb = fallback.get_or_insert_with(|| mesh.vertex_normals());
                log::warn!("vertex {v}: zero manifold gradient, using mesh normal");
                fb[v]
            }
        };
        normals.push(n);
        rigging.push(&e, &p, &w);
    }
    Ok(VertexAttributes {
        normals,
        rigging,
        normal_fallbacks,
    })
}
