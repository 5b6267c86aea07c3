//! Chart-based UV atlas: normal-cone region growing, planar projection,
//! minimum-area rectangles and skyline packing with gutters.
//!
//! Texture space: `u` runs along image columns and `v` along rows, both
//! scaled by the resolution; texel `(x, y)` has its center at
//! `((x + 0.5)/R, (y + 0.5)/R)`. Coverage tests snap coordinates to
//! [`SUBTEXEL`] steps and use exact integer edge functions with a top-left
//! rule, so two triangles sharing an edge never both claim a sample.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::math::{ceil, cos, round, sin, Vec3, DEG};
use crate::mesh::TriMesh;
use crate::{Error, Result};

/// Fixed-point steps per texel for coverage tests.
pub const SUBTEXEL: i64 = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtlasConfig {
    pub resolution: usize,
    /// Empty texels kept on every side of a chart.
    pub gutter: usize,
    /// Faces join a chart while within this angle of the seed normal.
    pub max_chart_angle_deg: f64,
    /// Orientations tried for each chart's bounding rectangle.
    pub rotations: usize,
}

impl Default for AtlasConfig {
    fn default() -> Self {
        Self {
            resolution: 1024,
            gutter: 2,
            max_chart_angle_deg: 60.0,
            rotations: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartInfo {
    pub faces: Vec<u32>,
    /// Projection axis.
    pub axis: Vec3,
    /// Packed rectangle in texels `[x, y, w, h]`, gutters included.
    pub rect: [usize; 4],
}

/// Result of unwrapping: vertices are split along chart seams.
#[derive(Debug, Clone, PartialEq)]
pub struct UvAtlas {
    pub triangles: Vec<[u32; 3]>,
    pub uvs: Vec<[f32; 2]>,
    /// Source vertex of every atlas vertex.
    pub vertex_map: Vec<u32>,
    pub charts: Vec<ChartInfo>,
    pub face_chart: Vec<u32>,
    pub resolution: usize,
    /// Fraction of texels whose center is covered by a triangle.
    pub occupancy: f64,
    /// Texels per world unit.
    pub scale: f64,
    pub splits: usize,
}

/// Triangle in fixed-point texel space, counter-clockwise (positive area).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedTri {
    pub p: [[i64; 2]; 3],
    /// Source corner order after orientation fix-up.
    pub order: [usize; 3],
    pub area2: i64,
}

impl FixedTri {
    pub fn new(uv: [[f32; 2]; 3], resolution: usize) -> Option<Self> {
        let r = resolution as f64 * SUBTEXEL as f64;
        let mut p = uv.map(|c| [round(c[0] as f64 * r) as i64, round(c[1] as f64 * r) as i64]);
        let mut order = [0, 1, 2];
        let mut area2 = edge(p[0], p[1], p[2]);
        if area2 == 0 {
            return None;
        }
        if area2 < 0 {
            p.swap(1, 2);
            order.swap(1, 2);
            area2 = -area2;
        }
        Some(Self { p, order, area2 })
    }

    /// Barycentric weights of `q` in source corner order, when covered.
    #[inline]
    pub fn cover(&self, q: [i64; 2]) -> Option<[f64; 3]> {
        let mut w = [0i64; 3];
        for k in 0..3 {
            let a = self.p[(k + 1) % 3];
            let b = self.p[(k + 2) % 3];
            let e = edge(a, b, q);
            if e < 0 || (e == 0 && !top_left(a, b)) {
                return None;
            }
            w[k] = e;
        }
        let inv = 1.0 / self.area2 as f64;
        let mut out = [0.0; 3];
        for k in 0..3 {
            out[self.order[k]] = w[k] as f64 * inv;
        }
        Some(out)
    }

    /// Inclusive texel bounds `[x0, y0, x1, y1]` clipped to the image.
    pub fn texel_bounds(&self, resolution: usize) -> Option<[usize; 4]> {
        let r = resolution as i64;
        let lo = |a: usize| self.p.iter().map(|p| p[a]).min().unwrap();
        let hi = |a: usize| self.p.iter().map(|p| p[a]).max().unwrap();
        let x0 = lo(0).div_euclid(SUBTEXEL).max(0);
        let y0 = lo(1).div_euclid(SUBTEXEL).max(0);
        let x1 = hi(0).div_euclid(SUBTEXEL).min(r - 1);
        let y1 = hi(1).div_euclid(SUBTEXEL).min(r - 1);
        if x0 > x1 || y0 > y1 {
            return None;
        }
        Some([x0 as usize, y0 as usize, x1 as usize, y1 as usize])
    }
}

#[inline]
fn edge(a: [i64; 2], b: [i64; 2], q: [i64; 2]) -> i64 {
    (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0])
}

#[inline]
fn top_left(a: [i64; 2], b: [i64; 2]) -> bool {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    (dy == 0 && dx > 0) || dy < 0
}

/// Fixed-point position of texel `(x, y)`'s center.
#[inline]
pub fn texel_center(x: usize, y: usize) -> [i64; 2] {
    [x as i64 * SUBTEXEL + SUBTEXEL / 2, y as i64 * SUBTEXEL + SUBTEXEL / 2]
}

/// Which triangle covers each texel center (`u32::MAX` for none) and how
/// many texel centers are claimed by more than one triangle.
pub fn texel_owners(uvs: &[[f32; 2]], triangles: &[[u32; 3]], resolution: usize) -> (Vec<u32>, usize) {
    let mut owner = alloc::vec![u32::MAX; resolution * resolution];
    let mut overlaps = 0;
    for (t, tri) in triangles.iter().enumerate() {
        let Some(ft) = FixedTri::new(tri.map(|v| uvs[v as usize]), resolution) else {
            continue;
        };
        let Some([x0, y0, x1, y1]) = ft.texel_bounds(resolution) else {
            continue;
        };
        for y in y0..=y1 {
            for x in x0..=x1 {
                if ft.cover(texel_center(x, y)).is_some() {
                    let o = &mut owner[y * resolution + x];
                    if *o != u32::MAX {
                        overlaps += 1;
                    }
                    *o = t as u32;
                }
            }
        }
    }
    (owner, overlaps)
}

/// Orthonormal `(e1, e2)` with `e1 × e2 = axis`.
fn plane_basis(axis: Vec3) -> (Vec3, Vec3) {
    let helper = if axis.x.abs() < 0.9 { Vec3::X } else { Vec3::Y };
    let e1 = helper.cross(axis).normalize();
    let e2 = axis.cross(e1);
    (e1, e2)
}

fn grow_charts(mesh: &TriMesh, normals: &[Option<Vec3>], faces: &[u32], max_angle_deg: f64) -> Vec<Vec<u32>> {
    let cos_max = cos(max_angle_deg * DEG);
    let member: hashbrown::HashSet<u32> = faces.iter().copied().collect();
    let mut edge_faces: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
    for &f in faces {
        let t = mesh.triangles[f as usize];
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            edge_faces.entry((a.min(b), a.max(b))).or_default().push(f);
        }
    }
    let mut assigned: HashMap<u32, ()> = HashMap::new();
    let mut charts = Vec::new();
    for &seed in faces {
        if assigned.contains_key(&seed) {
            continue;
        }
        assigned.insert(seed, ());
        let mut chart = alloc::vec![seed];
        let Some(axis) = normals[seed as usize] else {
            charts.push(chart);
            continue;
        };
        let mut queue = VecDeque::from([seed]);
        while let Some(f) = queue.pop_front() {
            let t = mesh.triangles[f as usize];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let Some(adj) = edge_faces.get(&(a.min(b), a.max(b))) else { continue };
                if adj.len() != 2 {
                    continue;
                }
                for &g in adj {
                    if g == f || assigned.contains_key(&g) || !member.contains(&g) {
                        continue;
                    }
                    if let Some(n) = normals[g as usize] {
                        if n.dot(axis) >= cos_max {
                            assigned.insert(g, ());
                            chart.push(g);
                            queue.push_back(g);
                        }
                    }
                }
            }
        }
        charts.push(chart);
    }
    charts
}

/// Chart-local projected layout before packing.
struct Flat {
    faces: Vec<u32>,
    axis: Vec3,
    /// Source vertices and their 2D coordinates (origin at the rectangle's
    /// lower corner).
    verts: Vec<(u32, [f64; 2])>,
    local: HashMap<u32, u32>,
    size: [f64; 2],
}

fn flatten(mesh: &TriMesh, normals: &[Option<Vec3>], faces: Vec<u32>, rotations: usize) -> Flat {
    let mut axis = Vec3::ZERO;
    for &f in &faces {
        if let Some(n) = normals[faces[0] as usize] {
            axis = n;
            break;
        }
        let _ = f;
    }
    if axis == Vec3::ZERO {
        axis = Vec3::Z;
    }
    let (e1, e2) = plane_basis(axis);
    let mut local: HashMap<u32, u32> = HashMap::new();
    let mut verts: Vec<(u32, [f64; 2])> = Vec::new();
    for &f in &faces {
        for v in mesh.triangles[f as usize] {
            local.entry(v).or_insert_with(|| {
                let p = mesh.positions[v as usize];
                verts.push((v, [p.dot(e1), p.dot(e2)]));
                (verts.len() - 1) as u32
            });
        }
    }
    let mut best = (f64::INFINITY, 0.0, [0.0; 2], [0.0; 2]);
    for k in 0..rotations.max(1) {
        let a = k as f64 * 90.0 / rotations.max(1) as f64 * DEG;
        let (c, s) = (cos(a), sin(a));
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for (_, p) in &verts {
            let q = [c * p[0] - s * p[1], s * p[0] + c * p[1]];
            for i in 0..2 {
                lo[i] = lo[i].min(q[i]);
                hi[i] = hi[i].max(q[i]);
            }
        }
        let area = (hi[0] - lo[0]) * (hi[1] - lo[1]);
        if area < best.0 - 1e-15 {
            best = (area, a, lo, hi);
        }
    }
    let (_, a, lo, hi) = best;
    let (c, s) = (cos(a), sin(a));
    let mut size = [hi[0] - lo[0], hi[1] - lo[1]];
    let swap = size[1] > size[0];
    for (_, p) in verts.iter_mut() {
        let mut q = [c * p[0] - s * p[1] - lo[0], s * p[0] + c * p[1] - lo[1]];
        if swap {
            // Quarter turn keeps orientation: (x, y) → (h − y, x).
            q = [size[1] - q[1], q[0]];
        }
        *p = q;
    }
    if swap {
        size = [size[1], size[0]];
    }
    Flat {
        faces,
        axis,
        verts,
        local,
        size,
    }
}

fn rect_size(size: [f64; 2], scale: f64, gutter: usize) -> [usize; 2] {
    size.map(|s| ceil(s * scale) as usize + 1 + 2 * gutter)
}

/// Bottom-left skyline packing; returns rectangle origins or `None` when
/// something does not fit. `order` lists rectangles in placement order.
fn skyline_pack(sizes: &[[usize; 2]], order: &[usize], resolution: usize) -> Option<Vec<[usize; 2]>> {
    // Segments (x, width, height), contiguous over [0, resolution).
    let mut sky: Vec<(usize, usize, usize)> = alloc::vec![(0, resolution, 0)];
    let mut out = alloc::vec![[0usize; 2]; sizes.len()];
    for &i in order {
        let [w, h] = sizes[i];
        if w > resolution || h > resolution {
            return None;
        }
        let mut best: Option<(usize, usize, usize)> = None; // (top, x, segment)
        for s in 0..sky.len() {
            let x = sky[s].0;
            if x + w > resolution {
                break;
            }
            let mut y = 0;
            let mut covered = 0;
            let mut k = s;
            while covered < w {
                y = y.max(sky[k].2);
                covered = sky[k].0 + sky[k].1 - x;
                k += 1;
            }
            if y + h <= resolution && best.is_none_or(|b| (y + h, x) < (b.0, b.1)) {
                best = Some((y + h, x, s));
            }
        }
        let (top, x, _) = best?;
        out[i] = [x, top - h];
        // Replace the covered span with one segment at the new height.
        let mut next = Vec::with_capacity(sky.len() + 2);
        for &(sx, sw, sh) in &sky {
            let (a, b) = (sx, sx + sw);
            if b <= x || a >= x + w {
                next.push((sx, sw, sh));
                continue;
            }
            if a < x {
                next.push((a, x - a, sh));
            }
            if next.last().is_none_or(|l: &(usize, usize, usize)| l.0 + l.1 <= x) && !next.iter().any(|s| s.0 == x) {
                next.push((x, w, top));
            }
            if b > x + w {
                next.push((x + w, b - x - w, sh));
            }
        }
        // Merge equal neighbours.
        let mut merged: Vec<(usize, usize, usize)> = Vec::with_capacity(next.len());
        for s in next {
            match merged.last_mut() {
                Some(l) if l.2 == s.2 && l.0 + l.1 == s.0 => l.1 += s.1,
                _ => merged.push(s),
            }
        }
        sky = merged;
    }
    Some(out)
}

/// Largest scale at which every chart fits, with its placements.
fn pack(flats: &[Flat], cfg: &AtlasConfig) -> Result<(f64, Vec<[usize; 4]>)> {
    let mut order: Vec<usize> = (0..flats.len()).collect();
    order.sort_by(|&a, &b| {
        let (sa, sb) = (flats[a].size, flats[b].size);
        sb[1].total_cmp(&sa[1]).then(sb[0].total_cmp(&sa[0])).then(a.cmp(&b))
    });
    let total: f64 = flats.iter().map(|f| f.size[0] * f.size[1]).sum::<f64>().max(1e-12);
    let r = cfg.resolution;
    let try_scale = |s: f64| -> Option<Vec<[usize; 4]>> {
        let sizes: Vec<[usize; 2]> = flats.iter().map(|f| rect_size(f.size, s, cfg.gutter)).collect();
        let pos = skyline_pack(&sizes, &order, r)?;
        Some(pos.iter().zip(&sizes).map(|(p, z)| [p[0], p[1], z[0], z[1]]).collect())
    };
    let mut lo = 0.0;
    let mut hi = crate::math::sqrt(r as f64 * r as f64 / total);
    let mut best = try_scale(lo).ok_or_else(|| {
        Error::invalid("uv atlas", "charts do not fit even at zero scale; resolution too small")
    })?;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        match try_scale(mid) {
            Some(p) => {
                lo = mid;
                best = p;
            }
            None => hi = mid,
        }
    }
    Ok((lo, best))
}

/// Unwraps `mesh` into a packed atlas.
pub fn generate_uv_atlas(mesh: &TriMesh, cfg: &AtlasConfig) -> Result<UvAtlas> {
    if cfg.resolution < 4 {
        return Err(Error::Config("atlas resolution must be at least 4".into()));
    }
    let normals: Vec<Option<Vec3>> = (0..mesh.face_count())
        .map(|f| mesh.face_cross(f).try_normalize())
        .collect();
    let all: Vec<u32> = (0..mesh.face_count() as u32).collect();
    let mut groups: Vec<(Vec<u32>, f64)> = grow_charts(mesh, &normals, &all, cfg.max_chart_angle_deg)
        .into_iter()
        .map(|c| (c, cfg.max_chart_angle_deg))
        .collect();
    let mut splits = 0;
    loop {
        let flats: Vec<Flat> = groups
            .iter()
            .map(|(faces, _)| flatten(mesh, &normals, faces.clone(), cfg.rotations))
            .collect();
        let (scale, rects) = pack(&flats, cfg)?;
        let atlas = assemble(mesh, &flats, &rects, scale, cfg, splits);
        let (owner, _) = texel_owners(&atlas.uvs, &atlas.triangles, cfg.resolution);
        let bad = overlapping_charts(&atlas, &owner);
        if bad.is_empty() {
            return Ok(atlas);
        }
        let mut next = Vec::with_capacity(groups.len() + bad.len());
        for (c, (faces, angle)) in groups.into_iter().enumerate() {
            if bad.binary_search(&(c as u32)).is_ok() && faces.len() > 1 {
                splits += 1;
                let tighter = angle * 0.5;
                let parts = if tighter < 1.0 {
                    faces.iter().map(|&f| alloc::vec![f]).collect()
                } else {
                    grow_charts(mesh, &normals, &faces, tighter)
                };
                next.extend(parts.into_iter().map(|p| (p, tighter)));
            } else {
                next.push((faces, angle));
            }
        }
        groups = next;
    }
}

/// Charts owning a texel center claimed by another triangle.
fn overlapping_charts(atlas: &UvAtlas, owner: &[u32]) -> Vec<u32> {
    let r = atlas.resolution;
    let mut bad = Vec::new();
    for (t, tri) in atlas.triangles.iter().enumerate() {
        let Some(ft) = FixedTri::new(tri.map(|v| atlas.uvs[v as usize]), r) else { continue };
        let Some([x0, y0, x1, y1]) = ft.texel_bounds(r) else { continue };
        'tri: for y in y0..=y1 {
            for x in x0..=x1 {
                let o = owner[y * r + x];
                if o != t as u32 && o != u32::MAX && ft.cover(texel_center(x, y)).is_some() {
                    bad.push(atlas.face_chart[t]);
                    bad.push(atlas.face_chart[o as usize]);
                    break 'tri;
                }
            }
        }
    }
    bad.sort_unstable();
    bad.dedup();
    bad
}

fn assemble(mesh: &TriMesh, flats: &[Flat], rects: &[[usize; 4]], scale: f64, cfg: &AtlasConfig, splits: usize) -> UvAtlas {
    let r = cfg.resolution as f64;
    let g = cfg.gutter as f64;
    let mut uvs = Vec::new();
    let mut vertex_map = Vec::new();
    let mut triangles = alloc::vec![[0u32; 3]; mesh.face_count()];
    let mut face_chart = alloc::vec![0u32; mesh.face_count()];
    let mut charts = Vec::with_capacity(flats.len());
    for (c, (flat, rect)) in flats.iter().zip(rects).enumerate() {
        let base = uvs.len() as u32;
        for (src, p) in &flat.verts {
            let x = rect[0] as f64 + g + 0.5 + p[0] * scale;
            let y = rect[1] as f64 + g + 0.5 + p[1] * scale;
            uvs.push([(x / r) as f32, (y / r) as f32]);
            vertex_map.push(*src);
        }
        for &f in &flat.faces {
            triangles[f as usize] = mesh.triangles[f as usize].map(|v| base + flat.local[&v]);
            face_chart[f as usize] = c as u32;
        }
        charts.push(ChartInfo {
            faces: flat.faces.clone(),
            axis: flat.axis,
            rect: *rect,
        });
    }
    let (owner, _) = texel_owners(&uvs, &triangles, cfg.resolution);
    let covered = owner.iter().filter(|&&o| o != u32::MAX).count();
    UvAtlas {
        triangles,
        uvs,
        vertex_map,
        charts,
        face_chart,
        resolution: cfg.resolution,
        occupancy: covered as f64 / (r * r),
        scale,
        splits,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bake::grid::GridSpec;
    use crate::bake::marching_cubes::marching_cubes;
    use crate::bake::simplify::{simplify, SimplifyConfig};
    use crate::field::library::SphereSdf;
    use crate::math::Aabb;

    fn rects_disjoint(charts: &[ChartInfo]) -> bool {
        for (i, a) in charts.iter().enumerate() {
            for b in &charts[i + 1..] {
                let [ax, ay, aw, ah] = a.rect;
                let [bx, by, bw, bh] = b.rect;
                if ax < bx + bw && bx < ax + aw && ay < by + bh && by < ay + ah {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn single_triangle() {
        let m = TriMesh::new(
            alloc::vec![Vec3::ZERO, Vec3::X, Vec3::Y],
            alloc::vec![[0, 1, 2]],
        );
        let a = generate_uv_atlas(&m, &AtlasConfig { resolution: 64, ..AtlasConfig::default() }).unwrap();
        assert_eq!(a.charts.len(), 1);
        assert_eq!(a.uvs.len(), 3);
        assert!(a.uvs.iter().flatten().all(|c| (0.0..=1.0).contains(c)));
        let [_, _, w, h] = a.charts[0].rect;
        assert!(w <= 64 && h <= 64 && w * h > 64 * 64 / 2);
    }

    #[test]
    fn cube_has_six_disjoint_charts() {
        let m = crate::mesh::tests::cube();
        let a = generate_uv_atlas(&m, &AtlasConfig { resolution: 128, ..AtlasConfig::default() }).unwrap();
        assert_eq!(a.charts.len(), 6);
        assert!(rects_disjoint(&a.charts));
        let (_, overlaps) = texel_owners(&a.uvs, &a.triangles, 128);
        assert_eq!(overlaps, 0);
        // Triangles keep their source vertices.
        for (f, t) in a.triangles.iter().enumerate() {
            assert_eq!(t.map(|v| a.vertex_map[v as usize]), m.triangles[f]);
        }
    }

    #[test]
    fn sphere_occupancy_and_injectivity() {
        let m = marching_cubes(&SphereSdf::unit(), GridSpec::cubic(96, Aabb::cube(1.15)), 0.0).unwrap();
        let cfg = SimplifyConfig {
            target_faces: 10_000,
            back_ratio: 1.0,
            ..SimplifyConfig::default()
        };
        let (m, _) = simplify(&m, &cfg).unwrap();
        let a = generate_uv_atlas(&m, &AtlasConfig { resolution: 512, ..AtlasConfig::default() }).unwrap();
        assert!(a.occupancy >= 0.4, "occupancy {}", a.occupancy);
        let (_, overlaps) = texel_owners(&a.uvs, &a.triangles, 512);
        assert_eq!(overlaps, 0);
        assert!(rects_disjoint(&a.charts));
        // Projected area distortion stays within 4×.
        for c in &a.charts {
            for &f in &c.faces {
                let n = m.face_normal(f as usize);
                assert!(n.dot(c.axis) >= 0.25);
            }
        }
    }

    #[test]
    fn fixed_point_shared_edge_is_owned_once() {
        let uvs = [[0.1f32, 0.1], [0.9, 0.1], [0.1, 0.9], [0.9, 0.9]];
        let tris = [[0u32, 1, 2], [1, 3, 2]];
        let (owner, overlaps) = texel_owners(&uvs, &tris, 32);
        assert_eq!(overlaps, 0);
        assert!(owner.iter().filter(|&&o| o != u32::MAX).count() > 500);
    }

    #[test]
    fn skyline_places_without_overlap() {
        let sizes = [[10, 10], [20, 5], [5, 20], [8, 8], [30, 3]];
        let order = [2, 0, 3, 1, 4];
        let pos = skyline_pack(&sizes, &order, 32).unwrap();
        for i in 0..sizes.len() {
            assert!(pos[i][0] + sizes[i][0] <= 32 && pos[i][1] + sizes[i][1] <= 32);
            for j in i + 1..sizes.len() {
                let sep = pos[i][0] + sizes[i][0] <= pos[j][0]
                    || pos[j][0] + sizes[j][0] <= pos[i][0]
                    || pos[i][1] + sizes[i][1] <= pos[j][1]
                    || pos[j][1] + sizes[j][1] <= pos[i][1];
                assert!(sep, "{i} {j}");
            }
        }
        assert!(skyline_pack(&[[40, 1]], &[0], 32).is_none());
    }
}
