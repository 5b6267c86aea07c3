//! Triangle mesh containers.

use alloc::vec::Vec;

use crate::math::Vec3;
use crate::rig::VertexRigging;
use crate::{Error, Result};

/// Indexed triangle mesh used during baking.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriMesh {
    pub positions: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriMesh {
    pub fn new(positions: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Self {
        Self {
            positions,
            triangles,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn face_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.positions[a as usize],
            self.positions[b as usize],
            self.positions[c as usize],
        ]
    }

    /// Unnormalized face normal (length = 2 × area).
    pub fn face_cross(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (b - a).cross(c - a)
    }

    pub fn face_area(&self, t: usize) -> f64 {
        0.5 * self.face_cross(t).length()
    }

    pub fn face_normal(&self, t: usize) -> Vec3 {
        self.face_cross(t).normalize()
    }

    /// Area-weighted vertex normals.
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut normals = alloc::vec![Vec3::ZERO; self.positions.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let n = self.face_cross(t);
            for &v in tri {
                normals[v as usize] += n;
            }
        }
        normals.into_iter().map(Vec3::normalize).collect()
    }

    /// Drops unreferenced vertices and renumbers the rest in first-use order.
    pub fn compact(&self) -> TriMesh {
        let mut remap = alloc::vec![u32::MAX; self.positions.len()];
        let mut positions = Vec::new();
        let mut triangles = Vec::with_capacity(self.triangles.len());
        for tri in &self.triangles {
            let mut out = [0u32; 3];
            for (k, &v) in tri.iter().enumerate() {
                let slot = &mut remap[v as usize];
                if *slot == u32::MAX {
                    *slot = positions.len() as u32;
                    positions.push(self.positions[v as usize]);
                }
                out[k] = *slot;
            }
            triangles.push(out);
        }
        TriMesh {
            positions,
            triangles,
        }
    }

    /// Removes triangles with area below `min_area` or repeated indices.
    pub fn remove_degenerate(&self, min_area: f64) -> TriMesh {
        let triangles = self
            .triangles
            .iter()
            .enumerate()
            .filter(|(t, tri)| {
                tri[0] != tri[1]
                    && tri[1] != tri[2]
                    && tri[0] != tri[2]
                    && self.face_area(*t) >= min_area
            })
            .map(|(_, tri)| *tri)
            .collect();
        TriMesh {
            positions: self.positions.clone(),
            triangles,
        }
        .compact()
    }

    /// Euler characteristic `V − E + F` over referenced vertices.
    pub fn euler_characteristic(&self) -> i64 {
        let compact = self.compact();
        let mut edges = hashbrown::HashSet::new();
        for tri in &compact.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edges.insert((a.min(b), a.max(b)));
            }
        }
        compact.positions.len() as i64 - edges.len() as i64 + compact.triangles.len() as i64
    }

    /// Number of edges used by exactly one triangle.
    pub fn boundary_edge_count(&self) -> usize {
        let mut counts: hashbrown::HashMap<(u32, u32), u32> = hashbrown::HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *counts.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        counts.values().filter(|&&c| c == 1).count()
    }

    pub fn bounding_radius(&self, center: Vec3) -> f64 {
        self.positions
            .iter()
            .map(|p| (*p - center).length())
            .fold(0.0, f64::max)
    }
}

/// One baked layer: geometry, shading attributes and rigging.
#[derive(Debug, Clone, PartialEq)]
pub struct RiggedMesh {
    pub positions: Vec<[f32; 3]>,
    pub normals: Vec<[f32; 3]>,
    pub uvs: Vec<[f32; 2]>,
    pub triangles: Vec<[u32; 3]>,
    pub rigging: VertexRigging,
    pub level_index: u32,
    pub level: f64,
}

impl RiggedMesh {
    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn geometry(&self) -> TriMesh {
        TriMesh {
            positions: self.positions.iter().map(|p| Vec3::from_f32(*p)).collect(),
            triangles: self.triangles.clone(),
        }
    }

    /// Checks index ranges, array lengths, unit normals and UV bounds.
    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        Error::check_len("normals", n, self.normals.len())?;
        Error::check_len("uvs", n, self.uvs.len())?;
        Error::check_len("rigging vertices", n, self.rigging.vertex_count())?;
        self.rigging.validate()?;
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v as usize >= n) {
                return Err(Error::invalid(
                    "triangle",
                    alloc::format!("triangle {t} indexes past {n} vertices"),
                ));
            }
        }
        for (v, nrm) in self.normals.iter().enumerate() {
            let len = Vec3::from_f32(*nrm).length();
            if (len - 1.0).abs() > 1e-3 {
                return Err(Error::invalid(
                    "normal",
                    alloc::format!("vertex {v} normal has length {len}"),
                ));
            }
        }
        for (v, uv) in self.uvs.iter().enumerate() {
            if !(0.0..=1.0).contains(&uv[0]) || !(0.0..=1.0).contains(&uv[1]) {
                return Err(Error::invalid(
                    "uv",
                    alloc::format!("vertex {v} uv {uv:?} outside [0,1]²"),
                ));
            }
        }
        Ok(())
    }
}
