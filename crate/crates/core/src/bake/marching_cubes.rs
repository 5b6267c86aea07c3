//! Marching cubes with case polygons derived at runtime.
//!
//! For each cube face the sign pattern decides which edge crossings connect;
//! on ambiguous faces inside corners are kept separate. The rule only looks
//! at the face's own corners, so two cubes sharing a face always agree and
//! the surface is closed wherever the grid is. Face segments are directed so
//! that the outside (`s ≥ level`) lies in front of the resulting polygons.

use alloc::vec::Vec;

use hashbrown::HashMap;

use super::grid::{GridSpec, ScalarGrid};
use crate::field::ManifoldField;
use crate::math::{atan2, Vec3};
use crate::mesh::TriMesh;
use crate::{par, Result};

const CORNERS: [[usize; 3]; 8] = [
    [0, 0, 0],
    [1, 0, 0],
    [0, 1, 0],
    [1, 1, 0],
    [0, 0, 1],
    [1, 0, 1],
    [0, 1, 1],
    [1, 1, 1],
];

/// Cube edges as corner pairs `(low, high)`; the axis is the differing bit.
const EDGES: [(usize, usize); 12] = [
    (0, 1),
    (2, 3),
    (4, 5),
    (6, 7),
    (0, 2),
    (1, 3),
    (4, 6),
    (5, 7),
    (0, 4),
    (1, 5),
    (2, 6),
    (3, 7),
];

fn edge_between(a: usize, b: usize) -> usize {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    EDGES.iter().position(|&e| e == (lo, hi)).expect("corners share an edge")
}

fn edge_axis(e: usize) -> usize {
    let (a, b) = EDGES[e];
    (a ^ b).trailing_zeros() as usize
}

/// Face corner cycles, counter-clockwise seen from outside the cube.
fn face_cycles() -> [[usize; 4]; 6] {
    let mut out = [[0; 4]; 6];
    for axis in 0..3 {
        for side in 0..2 {
            let mut n = Vec3::ZERO;
            n[axis] = if side == 1 { 1.0 } else { -1.0 };
            // Right-handed basis (u, v) with u × v = n.
            let mut u = Vec3::ZERO;
            u[(axis + 1) % 3] = 1.0;
            let v = n.cross(u);
            let mut corners: Vec<usize> = (0..8).filter(|&c| CORNERS[c][axis] == side).collect();
            let angle = |c: usize| {
                let p = Vec3::new(
                    CORNERS[c][0] as f64 - 0.5,
                    CORNERS[c][1] as f64 - 0.5,
                    CORNERS[c][2] as f64 - 0.5,
                );
                atan2(p.dot(v), p.dot(u))
            };
            corners.sort_by(|&a, &b| angle(a).partial_cmp(&angle(b)).unwrap());
            out[axis * 2 + side].copy_from_slice(&corners);
        }
    }
    out
}

/// Triangles (as cube-edge triples) for each of the 256 inside masks.
pub struct CaseTable {
    cases: Vec<Vec<[u8; 3]>>,
}

impl CaseTable {
    pub fn build() -> Self {
        let faces = face_cycles();
        let cases = (0..256usize)
            .map(|mask| {
                let inside = |c: usize| mask >> c & 1 == 1;
                let mut next = [usize::MAX; 12];
                for cycle in &faces {
                    // (edge, entering) in walking order.
                    let mut crossings: Vec<(usize, bool)> = Vec::with_capacity(4);
                    for k in 0..4 {
                        let (a, b) = (cycle[k], cycle[(k + 1) % 4]);
                        if inside(a) != inside(b) {
                            crossings.push((edge_between(a, b), inside(b)));
                        }
                    }
                    let m = crossings.len();
                    for (idx, &(e, entering)) in crossings.iter().enumerate() {
                        if entering {
                            let exit = (1..m)
                                .map(|s| crossings[(idx + s) % m])
                                .find(|c| !c.1)
                                .expect("crossings alternate");
                            next[e] = exit.0;
                        }
                    }
                }
                let mut visited = [false; 12];
                let mut tris = Vec::new();
                for start in 0..12 {
                    if next[start] == usize::MAX || visited[start] {
                        continue;
                    }
                    let mut ring = Vec::new();
                    let mut e = start;
                    while !visited[e] {
                        visited[e] = true;
                        ring.push(e as u8);
                        e = next[e];
                    }
                    for i in 1..ring.len() - 1 {
                        tris.push([ring[0], ring[i], ring[i + 1]]);
                    }
                }
                tris
            })
            .collect();
        Self { cases }
    }

    pub fn triangles(&self, mask: usize) -> &[[u8; 3]] {
        &self.cases[mask]
    }
}

/// Extracts the `level` set of a sampled grid. Vertices lie on grid edges,
/// linearly interpolated, and are shared between neighbouring cells.
pub fn extract(grid: &ScalarGrid, table: &CaseTable, level: f64) -> TriMesh {
    let spec = grid.spec;
    let [nx, ny, nz] = spec.resolution;
    let lv = level as f32;
    let slabs = par::map_range(nz - 1, |k| {
        let mut keys: Vec<[u64; 3]> = Vec::new();
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let mut mask = 0usize;
                for (c, o) in CORNERS.iter().enumerate() {
                    if grid.at(i + o[0], j + o[1], k + o[2]) < lv {
                        mask |= 1 << c;
                    }
                }
                if mask == 0 || mask == 255 {
                    continue;
                }
                for tri in table.triangles(mask) {
                    keys.push(tri.map(|e| {
                        let o = CORNERS[EDGES[e as usize].0];
                        let p = spec.index(i + o[0], j + o[1], k + o[2]);
                        (p as u64) * 3 + edge_axis(e as usize) as u64
                    }));
                }
            }
        }
        keys
    });

    let mut index: HashMap<u64, u32> = HashMap::new();
    let mut positions = Vec::new();
    let mut triangles = Vec::with_capacity(slabs.iter().map(Vec::len).sum());
    let cell = spec.cell_size();
    for slab in &slabs {
        for tri in slab {
            let t = tri.map(|key| {
                *index.entry(key).or_insert_with(|| {
                    positions.push(edge_vertex(grid, key, level, cell));
                    (positions.len() - 1) as u32
                })
            });
            triangles.push(t);
        }
    }
    TriMesh::new(positions, triangles)
}

fn edge_vertex(grid: &ScalarGrid, key: u64, level: f64, cell: Vec3) -> Vec3 {
    let [nx, ny, _] = grid.spec.resolution;
    let axis = (key % 3) as usize;
    let p = (key / 3) as usize;
    let (i, j, k) = (p % nx, (p / nx) % ny, p / (nx * ny));
    let mut q = [i, j, k];
    q[axis] += 1;
    let a = grid.at(i, j, k) as f64;
    let b = grid.at(q[0], q[1], q[2]) as f64;
    let t = if b != a { ((level - a) / (b - a)).clamp(0.0, 1.0) } else { 0.5 };
    let mut pos = grid.spec.point(i, j, k);
    pos[axis] += t * cell[axis];
    pos
}

/// Samples `field` on `grid` and extracts one level.
pub fn marching_cubes(field: &dyn ManifoldField, grid: GridSpec, level: f64) -> Result<TriMesh> {
    let g = ScalarGrid::sample(field, grid)?;
    Ok(extract(&g, &CaseTable::build(), level))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::library::{ConstantManifold, SphereSdf};
    use crate::math::Aabb;

    #[test]
    fn every_case_uses_exactly_the_crossed_edges() {
        let table = CaseTable::build();
        for mask in 1..255usize {
            let tris = table.triangles(mask);
            assert!(!tris.is_empty(), "mask {mask}");
            for t in tris {
                assert!(t[0] != t[1] && t[1] != t[2] && t[0] != t[2]);
            }
            // Every crossed cube edge is used, and nothing else.
            let crossed: Vec<usize> = (0..12)
                .filter(|&e| (mask >> EDGES[e].0 & 1) != (mask >> EDGES[e].1 & 1))
                .collect();
            let mut used: Vec<usize> = tris.iter().flatten().map(|&e| e as usize).collect();
            used.sort_unstable();
            used.dedup();
            assert_eq!(used, crossed, "mask {mask}");
        }
    }

    #[test]
    fn single_corner_faces_outward() {
        let table = CaseTable::build();
        let tris = table.triangles(1);
        assert_eq!(tris.len(), 1);
        // Midpoints of the edges around corner 0; the outside is along +xyz.
        let mid = |e: u8| {
            let (a, b) = EDGES[e as usize];
            let pa = CORNERS[a];
            let pb = CORNERS[b];
            Vec3::new(
                (pa[0] + pb[0]) as f64 * 0.5,
                (pa[1] + pb[1]) as f64 * 0.5,
                (pa[2] + pb[2]) as f64 * 0.5,
            )
        };
        let [a, b, c] = tris[0].map(mid);
        let n = (b - a).cross(c - a);
        assert!(n.dot(Vec3::splat(1.0)) > 0.0);
    }

    #[test]
    fn sphere_radius_and_topology() {
        let spec = GridSpec::cubic(64, Aabb::cube(1.15));
        let cell = spec.max_cell();
        for level in [0.0, -0.2] {
            let mesh = marching_cubes(&SphereSdf::unit(), spec, level).unwrap();
            assert!(mesh.face_count() > 1000);
            let r = 1.0 + level;
            for p in &mesh.positions {
                assert!((p.length() - r).abs() <= 2.0 * cell);
            }
            assert_eq!(mesh.euler_characteristic(), 2);
            assert_eq!(mesh.boundary_edge_count(), 0);
            for t in 0..mesh.face_count() {
                let [a, b, c] = mesh.corners(t);
                let centroid = (a + b + c) * (1.0 / 3.0);
                if mesh.face_area(t) > 1e-12 {
                    assert!(mesh.face_normal(t).dot(centroid) > 0.0);
                }
            }
        }
    }

    #[test]
    fn constant_field_is_empty() {
        let spec = GridSpec::cubic(16, Aabb::cube(1.0));
        let mesh = marching_cubes(&ConstantManifold(0.3), spec, 0.0).unwrap();
        assert!(mesh.is_empty());
    }

    #[test]
    fn saddle_grid_is_watertight() {
        struct Saddle;
        impl ManifoldField for Saddle {
            fn eval(&self, x: Vec3) -> f64 {
                // Many ambiguous faces.
                crate::math::sin(7.0 * x.x) * crate::math::sin(7.0 * x.y) * crate::math::sin(7.0 * x.z) + 0.3 * (x.length() - 0.9)
            }
        }
        let spec = GridSpec::cubic(33, Aabb::cube(1.0));
        let mesh = marching_cubes(&Saddle, spec, 0.0).unwrap();
        assert!(!mesh.is_empty());
        // Open edges only where the surface meets the grid boundary.
        let mut open = hashbrown::HashMap::<(u32, u32), i32>::new();
        for t in &mesh.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *open.entry((a.min(b), a.max(b))).or_default() += if a < b { 1 } else { -1 };
            }
        }
        for ((a, b), c) in open {
            if c != 0 {
                let on_box = |p: Vec3| (0..3).any(|i| (p[i].abs() - 1.0).abs() < 1e-9);
                assert!(
                    on_box(mesh.positions[a as usize]) && on_box(mesh.positions[b as usize]),
                    "interior open edge"
                );
            }
        }
    }
}
