//! Quadric edge-collapse decimation followed by extra reduction of faces
//! that point away from the viewing axis.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::math::{ceil, cos, Vec3, DEG};
use crate::mesh::TriMesh;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplifyConfig {
    pub target_faces: usize,
    /// Faces whose normal is more than this many degrees from +Z count as
    /// back faces.
    pub theta_max_deg: f64,
    /// Fraction of back faces kept by the second phase.
    pub back_ratio: f64,
    /// Minimum cosine between a face normal before and after a collapse.
    pub min_normal_cos: f64,
}

impl Default for SimplifyConfig {
    fn default() -> Self {
        Self {
            target_faces: 10_000,
            theta_max_deg: 120.0,
            back_ratio: 0.2,
            min_normal_cos: 0.25,
        }
    }
}

impl SimplifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_faces < 4 {
            return Err(Error::Config("target faces must be at least 4".into()));
        }
        if !(self.theta_max_deg > 90.0 && self.theta_max_deg <= 180.0) {
            return Err(Error::Config("theta_max must lie in (90, 180]".into()));
        }
        if !(0.0..=1.0).contains(&self.back_ratio) {
            return Err(Error::Config("back_ratio must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimplifyStats {
    pub input_faces: usize,
    pub after_qem: usize,
    pub back_before: usize,
    pub back_after: usize,
    pub output_faces: usize,
}

/// Symmetric 4×4 quadric stored as its upper triangle.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Quadric([f64; 10]);

impl Quadric {
    fn plane(n: Vec3, d: f64, w: f64) -> Self {
        let (a, b, c) = (n.x, n.y, n.z);
        Quadric([
            w * a * a,
            w * a * b,
            w * a * c,
            w * a * d,
            w * b * b,
            w * b * c,
            w * b * d,
            w * c * c,
            w * c * d,
            w * d * d,
        ])
    }

    fn add(&mut self, o: &Quadric) {
        for (a, b) in self.0.iter_mut().zip(o.0) {
            *a += b;
        }
    }

    fn sum(a: &Quadric, b: &Quadric) -> Quadric {
        let mut q = *a;
        q.add(b);
        q
    }

    fn eval(&self, p: Vec3) -> f64 {
        let q = &self.0;
        let (x, y, z) = (p.x, p.y, p.z);
        q[0] * x * x
            + 2.0 * q[1] * x * y
            + 2.0 * q[2] * x * z
            + 2.0 * q[3] * x
            + q[4] * y * y
            + 2.0 * q[5] * y * z
            + 2.0 * q[6] * y
            + q[7] * z * z
            + 2.0 * q[8] * z
            + q[9]
    }

    /// Minimizer of the quadric, when well conditioned.
    fn optimum(&self) -> Option<Vec3> {
        let q = &self.0;
        let m = crate::math::Mat3([[q[0], q[1], q[2]], [q[1], q[4], q[5]], [q[2], q[5], q[7]]]);
        let scale = q[0].abs() + q[4].abs() + q[7].abs();
        let inv = m.inverse(1e-10 * scale * scale * scale)?;
        Some(-inv.mul_vec(Vec3::new(q[3], q[6], q[8])))
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    cost: f64,
    u: u32,
    v: u32,
    ver_u: u32,
    ver_v: u32,
    target: Vec3,
}

impl PartialEq for Candidate {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Candidate {
    /// Reversed so the max-heap pops the cheapest collapse; ties by edge.
    fn cmp(&self, o: &Self) -> Ordering {
        o.cost
            .total_cmp(&self.cost)
            .then_with(|| (o.u, o.v).cmp(&(self.u, self.v)))
    }
}

struct Decimator {
    pos: Vec<Vec3>,
    quadric: Vec<Quadric>,
    faces: Vec<[u32; 3]>,
    face_alive: Vec<bool>,
    vert_faces: Vec<Vec<u32>>,
    version: Vec<u32>,
    boundary: Vec<bool>,
    alive_faces: usize,
    min_normal_cos: f64,
}

impl Decimator {
    fn new(mesh: &TriMesh, min_normal_cos: f64) -> Self {
        let nv = mesh.vertex_count();
        let mut vert_faces = alloc::vec![Vec::new(); nv];
        let mut quadric = alloc::vec![Quadric::default(); nv];
        for (f, t) in mesh.triangles.iter().enumerate() {
            let cross = mesh.face_cross(f);
            let area2 = cross.length();
            if let Some(n) = cross.try_normalize() {
                let d = -n.dot(mesh.positions[t[0] as usize]);
                let q = Quadric::plane(n, d, 0.5 * area2);
                for &v in t {
                    quadric[v as usize].add(&q);
                }
            }
            for &v in t {
                vert_faces[v as usize].push(f as u32);
            }
        }
        let mut edge_faces: hashbrown::HashMap<(u32, u32), (u32, usize)> = hashbrown::HashMap::new();
        for (f, t) in mesh.triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let e = edge_faces.entry((a.min(b), a.max(b))).or_insert((f as u32, 0));
                e.1 += 1;
            }
        }
        let mut boundary = alloc::vec![false; nv];
        let mut open: Vec<((u32, u32), u32)> = edge_faces
            .iter()
            .filter(|(_, &(_, c))| c == 1)
            .map(|(&e, &(f, _))| (e, f))
            .collect();
        open.sort_unstable();
        for ((a, b), f) in open {
            boundary[a as usize] = true;
            boundary[b as usize] = true;
            let (pa, pb) = (mesh.positions[a as usize], mesh.positions[b as usize]);
            let n = mesh.face_normal(f as usize);
            if let Some(m) = (pb - pa).cross(n).try_normalize() {
                let w = 100.0 * (pb - pa).length_squared();
                let q = Quadric::plane(m, -m.dot(pa), w);
                quadric[a as usize].add(&q);
                quadric[b as usize].add(&q);
            }
        }
        Self {
            pos: mesh.positions.clone(),
            quadric,
            faces: mesh.triangles.clone(),
            face_alive: alloc::vec![true; mesh.face_count()],
            vert_faces,
            version: alloc::vec![0; nv],
            boundary,
            alive_faces: mesh.face_count(),
            min_normal_cos,
        }
    }

    fn face_normal_with(&self, f: u32, moved: &[u32], p: Vec3) -> Vec3 {
        let t = self.faces[f as usize];
        let c = t.map(|v| if moved.contains(&v) { p } else { self.pos[v as usize] });
        (c[1] - c[0]).cross(c[2] - c[0])
    }

    fn neighbors(&self, v: u32) -> Vec<u32> {
        let mut n: Vec<u32> = self.vert_faces[v as usize]
            .iter()
            .flat_map(|&f| self.faces[f as usize])
            .filter(|&x| x != v)
            .collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    fn candidate(&self, u: u32, v: u32) -> Candidate {
        let (u, v) = (u.min(v), u.max(v));
        let q = Quadric::sum(&self.quadric[u as usize], &self.quadric[v as usize]);
        let (pu, pv) = (self.pos[u as usize], self.pos[v as usize]);
        let mid = (pu + pv) * 0.5;
        let len = (pu - pv).length();
        let mut best = (q.eval(mid), mid);
        for p in [pu, pv] {
            let c = q.eval(p);
            if c < best.0 {
                best = (c, p);
            }
        }
        if let Some(p) = q.optimum() {
            if (p - mid).length() <= len {
                let c = q.eval(p);
                if c < best.0 {
                    best = (c, p);
                }
            }
        }
        Candidate {
            cost: best.0.max(0.0),
            u,
            v,
            ver_u: self.version[u as usize],
            ver_v: self.version[v as usize],
            target: best.1,
        }
    }

    fn is_current(&self, c: &Candidate) -> bool {
        self.version[c.u as usize] == c.ver_u
            && self.version[c.v as usize] == c.ver_v
            && !self.vert_faces[c.u as usize].is_empty()
            && !self.vert_faces[c.v as usize].is_empty()
    }

    /// Topology and geometry checks; returns the faces shared by the edge.
    fn collapse_allowed(&self, c: &Candidate) -> Option<Vec<u32>> {
        let (u, v) = (c.u, c.v);
        let shared: Vec<u32> = self.vert_faces[u as usize]
            .iter()
            .copied()
            .filter(|&f| self.faces[f as usize].contains(&v))
            .collect();
        if shared.is_empty() || shared.len() > 2 {
            return None;
        }
        if self.boundary[u as usize] && self.boundary[v as usize] && shared.len() != 1 {
            return None;
        }
        // Link condition.
        let nu = self.neighbors(u);
        let nv = self.neighbors(v);
        let common = nu.iter().filter(|x| nv.binary_search(x).is_ok()).count();
        if common != shared.len() {
            return None;
        }
        if shared.len() == 2 && nu.len() == 3 && nv.len() == 3 {
            // Collapsing a tetrahedron's edge would leave a doubled face.
            return None;
        }
        for &x in [u, v].iter() {
            for &f in &self.vert_faces[x as usize] {
                if shared.contains(&f) {
                    continue;
                }
                let before = self.face_normal_with(f, &[], Vec3::ZERO);
                let after = self.face_normal_with(f, &[u, v], c.target);
                let (lb, la) = (before.length(), after.length());
                if la <= 1e-14 * (1.0 + lb) {
                    return None;
                }
                if lb > 0.0 && before.dot(after) < self.min_normal_cos * lb * la {
                    return None;
                }
            }
        }
        Some(shared)
    }

    fn apply(&mut self, c: &Candidate, shared: &[u32]) -> u32 {
        let (u, v) = (c.u, c.v);
        for &f in shared {
            self.face_alive[f as usize] = false;
            self.alive_faces -= 1;
            for x in self.faces[f as usize] {
                self.vert_faces[x as usize].retain(|&g| g != f);
            }
        }
        let moved = core::mem::take(&mut self.vert_faces[v as usize]);
        for f in moved {
            for x in self.faces[f as usize].iter_mut() {
                if *x == v {
                    *x = u;
                }
            }
            self.vert_faces[u as usize].push(f);
        }
        self.pos[u as usize] = c.target;
        let qv = self.quadric[v as usize];
        self.quadric[u as usize].add(&qv);
        self.boundary[u as usize] |= self.boundary[v as usize];
        self.version[u as usize] += 1;
        self.version[v as usize] += 1;
        u
    }

    fn push_around(&self, heap: &mut BinaryHeap<Candidate>, u: u32) {
        for w in self.neighbors(u) {
            heap.push(self.candidate(u, w));
        }
    }

    fn all_edges(&self) -> BinaryHeap<Candidate> {
        let mut edges: Vec<(u32, u32)> = Vec::new();
        for (f, t) in self.faces.iter().enumerate() {
            if !self.face_alive[f] {
                continue;
            }
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                edges.push((a.min(b), a.max(b)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        edges.into_iter().map(|(a, b)| self.candidate(a, b)).collect()
    }

    fn is_back(&self, f: u32, cos_max: f64) -> bool {
        let n = self.face_normal_with(f, &[], Vec3::ZERO);
        match n.try_normalize() {
            Some(n) => n.z < cos_max,
            None => false,
        }
    }

    fn back_count(&self, cos_max: f64) -> usize {
        (0..self.faces.len() as u32)
            .filter(|&f| self.face_alive[f as usize] && self.is_back(f, cos_max))
            .count()
    }

    fn to_mesh(&self) -> TriMesh {
        let triangles = self
            .faces
            .iter()
            .zip(&self.face_alive)
            .filter(|(_, &a)| a)
            .map(|(t, _)| *t)
            .collect();
        TriMesh::new(self.pos.clone(), triangles)
    }
}

/// Two-phase simplification. Meshes below four faces are returned as is.
pub fn simplify(mesh: &TriMesh, cfg: &SimplifyConfig) -> Result<(TriMesh, SimplifyStats)> {
    cfg.validate()?;
    let mut stats = SimplifyStats {
        input_faces: mesh.face_count(),
        ..SimplifyStats::default()
    };
    if mesh.face_count() < 4 {
        stats.after_qem = mesh.face_count();
        stats.output_faces = mesh.face_count();
        return Ok((mesh.clone(), stats));
    }
    let mut d = Decimator::new(mesh, cfg.min_normal_cos);

    let mut heap = d.all_edges();
    while d.alive_faces > cfg.target_faces {
        let Some(c) = heap.pop() else { break };
        if !d.is_current(&c) {
            continue;
        }
        let Some(shared) = d.collapse_allowed(&c) else { continue };
        let u = d.apply(&c, &shared);
        d.push_around(&mut heap, u);
    }
    stats.after_qem = d.alive_faces;

    let cos_max = cos(cfg.theta_max_deg * DEG);
    stats.back_before = d.back_count(cos_max);
    let target_back = ceil(cfg.back_ratio * stats.back_before as f64) as usize;
    let mut back = stats.back_before;
    let mut heap = d.all_edges();
    while back > target_back {
        let Some(c) = heap.pop() else { break };
        if !d.is_current(&c) {
            continue;
        }
        let all_back = [c.u, c.v]
            .iter()
            .all(|&x| d.vert_faces[x as usize].iter().all(|&f| d.is_back(f, cos_max)));
        if !all_back {
            continue;
        }
        let Some(shared) = d.collapse_allowed(&c) else { continue };
        let before: usize = affected(&d, c.u, c.v)
            .iter()
            .filter(|&&f| d.is_back(f, cos_max))
            .count();
        let u = d.apply(&c, &shared);
        let after = d.vert_faces[u as usize]
            .iter()
            .filter(|&&f| d.is_back(f, cos_max))
            .count();
        back = back + after - before;
        d.push_around(&mut heap, u);
    }

    let out = d.to_mesh().remove_degenerate(1e-12).compact();
    stats.back_after = {
        (0..out.face_count())
            .filter(|&f| out.face_cross(f).try_normalize().is_some_and(|n| n.z < cos_max))
            .count()
    };
    stats.output_faces = out.face_count();
    Ok((out, stats))
}

fn affected(d: &Decimator, u: u32, v: u32) -> Vec<u32> {
    let mut f: Vec<u32> = d.vert_faces[u as usize]
        .iter()
        .chain(&d.vert_faces[v as usize])
        .copied()
        .collect();
    f.sort_unstable();
    f.dedup();
    f
}
