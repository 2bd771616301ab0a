//! Conforming planar triangulations and their singular-vertex analysis.
//!
//! The mesh layer provides structured generators on the unit square, the
//! Morgan-Scott / Hsieh-Clough-Tocher / fish-bone refinements, ordered vertex
//! stars, and the Θ_I/Θ_II metrics that quantify how close an interior vertex
//! is to a criss-cross (Type I) or three-line (Type II) singularity.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

pub type Point = [f64; 2];

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("triangle {tri} references vertex {vertex} out of range")]
    VertexOutOfRange { tri: usize, vertex: usize },
    #[error("triangle {tri} has non-positive signed area {area}")]
    NonPositiveArea { tri: usize, area: f64 },
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifoldEdge(usize, usize),
    #[error("vertex {vertex} hangs on edge ({0}, {1})", .edge.0, .edge.1)]
    HangingNode { vertex: usize, edge: (usize, usize) },
    #[error("mesh is not edge-connected")]
    NotEdgeConnected,
    #[error("mesh has no triangles")]
    Empty,
    #[error("vertex {0} has no incident triangle")]
    IsolatedVertex(usize),
    #[error("Θ metrics are defined only for interior vertices; vertex {0} is on the boundary")]
    BoundaryVertex(usize),
    #[error("Morgan-Scott parameter r = {0} outside (0, 1)")]
    MorganScottParameter(f64),
    #[error("fish-bone split requires a structured rectangular parent grid")]
    FishboneRequiresGrid,
    #[error("structured generator needs n >= 1")]
    BadGridSize,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("mesh file: {0}")]
    Json(#[from] serde_json::Error),
}

/// Mesh edge with its one or two incident triangles.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    /// Endpoints, stored with verts[0] < verts[1].
    pub verts: [usize; 2],
    pub tris: [Option<usize>; 2],
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.tris[1].is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GridKind {
    Diagonal,
    Crisscross,
    Fishbone,
}

/// Quadrilateral parent structure retained by the structured generators.
#[derive(Debug, Clone, Copy)]
pub struct GridInfo {
    pub kind: GridKind,
    pub n: usize,
}

/// A conforming, counterclockwise-oriented planar triangulation.
#[derive(Debug, Clone)]
pub struct Triangulation {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    edge_ids: HashMap<(usize, usize), usize>,
    /// tri_edges[t][i] is the edge between local vertices i and (i+1)%3.
    tri_edges: Vec<[usize; 3]>,
    vertex_tris: Vec<Vec<usize>>,
    boundary_vertex: Vec<bool>,
    grid: Option<GridInfo>,
}

impl Triangulation {
    /// Build and validate a triangulation. Rejects wrong orientation; use
    /// [`Triangulation::new_reorienting`] to fix orientation silently.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        Self::build(vertices, triangles, false).map(|(m, _)| m)
    }

    /// Like [`Triangulation::new`], but flips negatively oriented triangles
    /// and reports how many were flipped.
    pub fn new_reorienting(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<(Self, usize), MeshError> {
        Self::build(vertices, triangles, true)
    }

    fn build(
        vertices: Vec<Point>,
        mut triangles: Vec<[usize; 3]>,
        reorient: bool,
    ) -> Result<(Self, usize), MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        let nv = vertices.len();
        let mut flipped = 0usize;
        for (t, tri) in triangles.iter_mut().enumerate() {
            for &v in tri.iter() {
                if v >= nv {
                    return Err(MeshError::VertexOutOfRange { tri: t, vertex: v });
                }
            }
            let area = signed_area(&vertices, tri);
            if area <= 0.0 {
                if reorient && area < 0.0 {
                    tri.swap(1, 2);
                    flipped += 1;
                } else {
                    return Err(MeshError::NonPositiveArea { tri: t, area });
                }
            }
        }

        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut tri_edges = vec![[usize::MAX; 3]; triangles.len()];
        for (t, tri) in triangles.iter().enumerate() {
            for i in 0..3 {
                let (a, b) = (tri[i], tri[(i + 1) % 3]);
                let key = (a.min(b), a.max(b));
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(Edge { verts: [key.0, key.1], tris: [None, None] });
                    edges.len() - 1
                });
                let e = &mut edges[id];
                if e.tris[0].is_none() {
                    e.tris[0] = Some(t);
                } else if e.tris[1].is_none() {
                    e.tris[1] = Some(t);
                } else {
                    return Err(MeshError::NonManifoldEdge(key.0, key.1));
                }
                tri_edges[t][i] = id;
            }
        }

        let mut vertex_tris = vec![Vec::new(); nv];
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                vertex_tris[v].push(t);
            }
        }
        for (v, ts) in vertex_tris.iter().enumerate() {
            if ts.is_empty() {
                return Err(MeshError::IsolatedVertex(v));
            }
        }

        let mut boundary_vertex = vec![false; nv];
        for e in &edges {
            if e.is_boundary() {
                boundary_vertex[e.verts[0]] = true;
                boundary_vertex[e.verts[1]] = true;
            }
        }

        check_hanging_nodes(&vertices, &edges)?;
        check_edge_connected(triangles.len(), &edges)?;

        Ok((
            Triangulation {
                vertices,
                triangles,
                edges,
                edge_ids,
                tri_edges,
                vertex_tris,
                boundary_vertex,
                grid: None,
            },
            flipped,
        ))
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_ids.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn tri_edge(&self, t: usize, i: usize) -> usize {
        self.tri_edges[t][i]
    }

    pub fn incident_triangles(&self, v: usize) -> &[usize] {
        &self.vertex_tris[v]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn interior_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_vertices()).filter(|&v| !self.boundary_vertex[v])
    }

    pub fn grid(&self) -> Option<GridInfo> {
        self.grid
    }

    pub fn area(&self, t: usize) -> f64 {
        0.5 * signed_area(&self.vertices, &self.triangles[t])
    }

    pub fn affine(&self, t: usize) -> crate::elements::AffineMap {
        let [a, b, c] = self.triangles[t];
        crate::elements::AffineMap::new(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    /// Longest edge length.
    pub fn mesh_size(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| dist(self.vertices[e.verts[0]], self.vertices[e.verts[1]]))
            .fold(0.0, f64::max)
    }

    /// Apply a similarity transformation p ↦ s·R(rot)·p + shift.
    pub fn transformed(&self, scale: f64, rot: f64, shift: Point) -> Triangulation {
        let (s, c) = rot.sin_cos();
        let verts = self
            .vertices
            .iter()
            .map(|p| {
                [
                    scale * (c * p[0] - s * p[1]) + shift[0],
                    scale * (s * p[0] + c * p[1]) + shift[1],
                ]
            })
            .collect();
        let mut m =
            Triangulation::new(verts, self.triangles.clone()).expect("similarity keeps validity");
        m.grid = self.grid;
        m
    }
}

fn signed_area(verts: &[Point], tri: &[usize; 3]) -> f64 {
    let [a, b, c] = [verts[tri[0]], verts[tri[1]], verts[tri[2]]];
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Spatially-hashed scan for vertices lying in the interior of an edge.
fn check_hanging_nodes(vertices: &[Point], edges: &[Edge]) -> Result<(), MeshError> {
    let mut hmax = 0.0f64;
    for e in edges {
        hmax = hmax.max(dist(vertices[e.verts[0]], vertices[e.verts[1]]));
    }
    if hmax == 0.0 {
        return Ok(());
    }
    let cell =
        |p: Point| -> (i64, i64) { ((p[0] / hmax).floor() as i64, (p[1] / hmax).floor() as i64) };
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (v, p) in vertices.iter().enumerate() {
        buckets.entry(cell(*p)).or_default().push(v);
    }
    for e in edges {
        let (a, b) = (vertices[e.verts[0]], vertices[e.verts[1]]);
        let len2 = dist(a, b).powi(2);
        let (ca, cb) = (cell(a), cell(b));
        let (ilo, ihi) = (ca.0.min(cb.0) - 1, ca.0.max(cb.0) + 1);
        let (jlo, jhi) = (ca.1.min(cb.1) - 1, ca.1.max(cb.1) + 1);
        for i in ilo..=ihi {
            for j in jlo..=jhi {
                let Some(cands) = buckets.get(&(i, j)) else { continue };
                for &v in cands {
                    if v == e.verts[0] || v == e.verts[1] {
                        continue;
                    }
                    let p = vertices[v];
                    let t = ((p[0] - a[0]) * (b[0] - a[0]) + (p[1] - a[1]) * (b[1] - a[1])) / len2;
                    if t <= 1e-9 || t >= 1.0 - 1e-9 {
                        continue;
                    }
                    let cross = (p[0] - a[0]) * (b[1] - a[1]) - (p[1] - a[1]) * (b[0] - a[0]);
                    if cross.abs() < 1e-9 * len2 {
                        return Err(MeshError::HangingNode {
                            vertex: v,
                            edge: (e.verts[0], e.verts[1]),
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

fn check_edge_connected(n_tris: usize, edges: &[Edge]) -> Result<(), MeshError> {
    let mut adj = vec![Vec::new(); n_tris];
    for e in edges {
        if let [Some(a), Some(b)] = e.tris {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; n_tris];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(t) = stack.pop() {
        for &u in &adj[t] {
            if !seen[u] {
                seen[u] = true;
                count += 1;
                stack.push(u);
            }
        }
    }
    if count != n_tris {
        return Err(MeshError::NotEdgeConnected);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// structured generators
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructuredKind {
    Diagonal,
    Crisscross,
}

impl std::str::FromStr for StructuredKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "diagonal" => Ok(StructuredKind::Diagonal),
            "crisscross" => Ok(StructuredKind::Crisscross),
            other => Err(format!("unknown generator kind `{other}`")),
        }
    }
}

/// Structured triangulations of the unit square [0,1]².
///
/// `diagonal` splits each of the n×n cells by the same diagonal (2n²
/// triangles); `crisscross` splits each cell by both diagonals through its
/// center (4n² triangles).
pub fn generate_structured(kind: StructuredKind, n: usize) -> Result<Triangulation, MeshError> {
    if n == 0 {
        return Err(MeshError::BadGridSize);
    }
    let nf = n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices: Vec<Point> = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / nf, j as f64 / nf]);
        }
    }
    let mut triangles = Vec::new();
    match kind {
        StructuredKind::Diagonal => {
            for j in 0..n {
                for i in 0..n {
                    let (v00, v10) = (id(i, j), id(i + 1, j));
                    let (v11, v01) = (id(i + 1, j + 1), id(i, j + 1));
                    triangles.push([v00, v10, v11]);
                    triangles.push([v00, v11, v01]);
                }
            }
        }
        StructuredKind::Crisscross => {
            for j in 0..n {
                for i in 0..n {
                    let c = vertices.len();
                    vertices.push([(i as f64 + 0.5) / nf, (j as f64 + 0.5) / nf]);
                    let (v00, v10) = (id(i, j), id(i + 1, j));
                    let (v11, v01) = (id(i + 1, j + 1), id(i, j + 1));
                    triangles.push([v00, v10, c]);
                    triangles.push([v10, v11, c]);
                    triangles.push([v11, v01, c]);
                    triangles.push([v01, v00, c]);
                }
            }
        }
    }
    let mut mesh = Triangulation::new(vertices, triangles)?;
    mesh.grid = Some(GridInfo {
        kind: match kind {
            StructuredKind::Diagonal => GridKind::Diagonal,
            StructuredKind::Crisscross => GridKind::Crisscross,
        },
        n,
    });
    Ok(mesh)
}

// ---------------------------------------------------------------------------
// splits
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitKind {
    /// Seven-triangle Morgan-Scott subdivision with interior parameter r.
    MorganScott(f64),
    /// Three-triangle barycentric (Hsieh-Clough-Tocher) subdivision.
    Hct,
    /// Alternating-diagonal re-triangulation of a structured rectangular grid.
    Fishbone,
}

pub const MORGAN_SCOTT_DEFAULT_R: f64 = 0.25;

/// Refine a conforming mesh. Morgan-Scott and HCT apply per triangle; the
/// fish-bone split re-triangulates the parent quadrilateral grid and is only
/// available for meshes produced by [`generate_structured`] with the
/// `Diagonal` kind.
pub fn split(mesh: &Triangulation, kind: SplitKind) -> Result<Triangulation, MeshError> {
    match kind {
        SplitKind::MorganScott(r) => {
            if !(r > 0.0 && r < 1.0) {
                return Err(MeshError::MorganScottParameter(r));
            }
            let mut vertices = mesh.vertices.to_vec();
            let mut triangles = Vec::with_capacity(7 * mesh.n_triangles());
            for t in 0..mesh.n_triangles() {
                let [ia, ib, ic] = mesh.triangle(t);
                let (pa, pb, pc) = (vertices[ia], vertices[ib], vertices[ic]);
                let mid = |p: Point, q: Point| [(p[0] + q[0]) * 0.5, (p[1] + q[1]) * 0.5];
                let lerp =
                    |m: Point, v: Point| [(1.0 - r) * m[0] + r * v[0], (1.0 - r) * m[1] + r * v[1]];
                let a = vertices.len();
                vertices.push(lerp(mid(pb, pc), pa));
                let b = vertices.len();
                vertices.push(lerp(mid(pc, pa), pb));
                let c = vertices.len();
                vertices.push(lerp(mid(pa, pb), pc));
                triangles.push([a, b, c]);
                triangles.push([ia, c, b]);
                triangles.push([ib, a, c]);
                triangles.push([ic, b, a]);
                triangles.push([ia, ib, c]);
                triangles.push([ib, ic, a]);
                triangles.push([ic, ia, b]);
            }
            Triangulation::new(vertices, triangles)
        }
        SplitKind::Hct => {
            let mut vertices = mesh.vertices.to_vec();
            let mut triangles = Vec::with_capacity(3 * mesh.n_triangles());
            for t in 0..mesh.n_triangles() {
                let [ia, ib, ic] = mesh.triangle(t);
                let (pa, pb, pc) = (vertices[ia], vertices[ib], vertices[ic]);
                let g = vertices.len();
                vertices.push([(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]);
                triangles.push([ia, ib, g]);
                triangles.push([ib, ic, g]);
                triangles.push([ic, ia, g]);
            }
            Triangulation::new(vertices, triangles)
        }
        SplitKind::Fishbone => {
            let Some(GridInfo { kind: GridKind::Diagonal, n }) = mesh.grid else {
                return Err(MeshError::FishboneRequiresGrid);
            };
            let id = |i: usize, j: usize| j * (n + 1) + i;
            let vertices: Vec<Point> = mesh.vertices[..(n + 1) * (n + 1)].to_vec();
            let mut triangles = Vec::with_capacity(2 * n * n);
            for j in 0..n {
                for i in 0..n {
                    let (v00, v10) = (id(i, j), id(i + 1, j));
                    let (v11, v01) = (id(i + 1, j + 1), id(i, j + 1));
                    if i % 2 == 0 {
                        triangles.push([v00, v10, v11]);
                        triangles.push([v00, v11, v01]);
                    } else {
                        triangles.push([v00, v10, v01]);
                        triangles.push([v10, v11, v01]);
                    }
                }
            }
            let mut out = Triangulation::new(vertices, triangles)?;
            out.grid = Some(GridInfo { kind: GridKind::Fishbone, n });
            Ok(out)
        }
    }
}

// ---------------------------------------------------------------------------
// vertex stars and classification
// ---------------------------------------------------------------------------

/// Ordered geometric data around a vertex.
///
/// `elements[i]` spans counterclockwise from ray `i` to ray `i+1` (cyclic for
/// interior vertices, where there are exactly m rays; boundary vertices carry
/// m+1 rays). Within element i, the edge along ray i is its "minus" edge and
/// ray i+1 its "plus" edge. `angles[i]` is the angle of element i at the
/// center.
#[derive(Debug, Clone)]
pub struct VertexStar {
    pub center: usize,
    pub z: Point,
    pub elements: Vec<usize>,
    /// Neighbor vertex along each ray.
    pub neighbors: Vec<usize>,
    /// Unit tangent of each directed edge z → y.
    pub tangents: Vec<[f64; 2]>,
    /// n = t^⊥ with (a,b)^⊥ = (b,-a).
    pub normals: Vec<[f64; 2]>,
    /// |z - y| along each ray.
    pub ray_lengths: Vec<f64>,
    pub angles: Vec<f64>,
    pub is_interior: bool,
}

pub fn perp(v: [f64; 2]) -> [f64; 2] {
    [v[1], -v[0]]
}

impl VertexStar {
    pub fn m(&self) -> usize {
        self.elements.len()
    }

    fn ray(&self, i: usize) -> usize {
        if self.is_interior {
            i % self.tangents.len()
        } else {
            i
        }
    }

    pub fn tangent(&self, i: usize) -> [f64; 2] {
        self.tangents[self.ray(i)]
    }

    pub fn normal(&self, i: usize) -> [f64; 2] {
        self.normals[self.ray(i)]
    }

    pub fn ray_length(&self, i: usize) -> f64 {
        self.ray_lengths[self.ray(i)]
    }

    /// Height of the neighbor on ray `i` within element `el`:
    /// h = |z - y_i| · sin(angles[el]).
    pub fn height_in(&self, i: usize, el: usize) -> f64 {
        self.ray_length(i) * self.angles[el].sin()
    }

    /// J_{z,T} = t₊n₋ᵀ + t₋n₊ᵀ for element `el`, row-major
    /// (t₋ = ray el, t₊ = ray el+1).
    pub fn j_matrix(&self, el: usize) -> [[f64; 2]; 2] {
        let tm = self.tangent(el);
        let tp = self.tangent(el + 1);
        let nm = self.normal(el);
        let np = self.normal(el + 1);
        let mut j = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                j[a][b] = tp[a] * nm[b] + tm[a] * np[b];
            }
        }
        j
    }
}

/// Build the ordered star of vertex `v`.
///
/// Interior stars start at the ray with smallest angle to the +x axis;
/// boundary stars start at the clockwise-most boundary edge so that the fan
/// sweeps counterclockwise.
pub fn build_star(mesh: &Triangulation, v: usize) -> Result<VertexStar, MeshError> {
    let tris = mesh.incident_triangles(v);
    if tris.is_empty() {
        return Err(MeshError::IsolatedVertex(v));
    }
    let z = mesh.vertex(v);
    // Each incident triangle seen from v spans CCW from its `from` vertex to
    // its `to` vertex.
    let mut seg: HashMap<usize, (usize, usize)> = HashMap::new();
    let mut froms: Vec<usize> = Vec::new();
    let mut tos: Vec<usize> = Vec::new();
    for &t in tris {
        let tri = mesh.triangle(t);
        let loc = tri.iter().position(|&w| w == v).unwrap();
        let from = tri[(loc + 1) % 3];
        let to = tri[(loc + 2) % 3];
        seg.insert(from, (t, to));
        froms.push(from);
        tos.push(to);
    }
    let is_interior = !mesh.is_boundary_vertex(v);

    let start_from = if is_interior {
        *froms
            .iter()
            .min_by(|&&a, &&b| angle_of(mesh, z, a).total_cmp(&angle_of(mesh, z, b)))
            .unwrap()
    } else {
        *froms
            .iter()
            .find(|f| !tos.contains(f))
            .ok_or(MeshError::NotEdgeConnected)?
    };
    let mut elements = Vec::with_capacity(tris.len());
    let mut ray_verts = vec![start_from];
    let mut cur = start_from;
    for _ in 0..tris.len() {
        let &(t, to) = seg.get(&cur).ok_or(MeshError::NotEdgeConnected)?;
        elements.push(t);
        ray_verts.push(to);
        cur = to;
    }
    if is_interior {
        debug_assert_eq!(ray_verts[0], *ray_verts.last().unwrap());
        ray_verts.pop();
    }

    let mut tangents = Vec::with_capacity(ray_verts.len());
    let mut ray_lengths = Vec::with_capacity(ray_verts.len());
    for &y in &ray_verts {
        let p = mesh.vertex(y);
        let d = [p[0] - z[0], p[1] - z[1]];
        let l = (d[0] * d[0] + d[1] * d[1]).sqrt();
        tangents.push([d[0] / l, d[1] / l]);
        ray_lengths.push(l);
    }
    let normals: Vec<[f64; 2]> = tangents.iter().map(|t| perp(*t)).collect();
    let m = elements.len();
    let angles: Vec<f64> = (0..m)
        .map(|i| {
            let a = tangents[i];
            let b = tangents[(i + 1) % tangents.len()];
            let cross = a[0] * b[1] - a[1] * b[0];
            let dot = a[0] * b[0] + a[1] * b[1];
            cross.atan2(dot).rem_euclid(2.0 * std::f64::consts::PI)
        })
        .collect();
    Ok(VertexStar {
        center: v,
        z,
        elements,
        neighbors: ray_verts,
        tangents,
        normals,
        ray_lengths,
        angles,
        is_interior,
    })
}

fn angle_of(mesh: &Triangulation, z: Point, y: usize) -> f64 {
    let p = mesh.vertex(y);
    (p[1] - z[1]).atan2(p[0] - z[0]).rem_euclid(2.0 * std::f64::consts::PI)
}

/// Θ_I = max_i |sin(θ_i + θ_{i+1})| over the cyclic star. Zero iff Type I.
pub fn theta_i(star: &VertexStar) -> Result<f64, MeshError> {
    if !star.is_interior {
        return Err(MeshError::BoundaryVertex(star.center));
    }
    let m = star.m();
    Ok((0..m)
        .map(|i| (star.angles[i] + star.angles[(i + 1) % m]).sin().abs())
        .fold(0.0, f64::max))
}

/// Θ_II = max_i min(|sin(θ_i+θ_{i+1}+θ_{i+2})|, |sin(θ_i+θ_{i+1})|,
/// |sin(θ_{i+1}+θ_{i+2})|). Zero iff Type I or Type II.
pub fn theta_ii(star: &VertexStar) -> Result<f64, MeshError> {
    if !star.is_interior {
        return Err(MeshError::BoundaryVertex(star.center));
    }
    let m = star.m();
    Ok((0..m)
        .map(|i| {
            let (t0, t1, t2) =
                (star.angles[i], star.angles[(i + 1) % m], star.angles[(i + 2) % m]);
            let triple = (t0 + t1 + t2).sin().abs();
            let pair_a = (t0 + t1).sin().abs();
            let pair_b = (t1 + t2).sin().abs();
            triple.min(pair_a).min(pair_b)
        })
        .fold(0.0, f64::max))
}

pub const EPS_SING_DEFAULT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VertexKind {
    Boundary,
    Regular,
    TypeI,
    #[serde(rename = "TypeII-nondegenerate")]
    TypeIiNondegenerate,
    #[serde(rename = "TypeII-1")]
    TypeIi1,
    #[serde(rename = "TypeII-2")]
    TypeIi2,
    #[serde(rename = "TypeII-3")]
    TypeIi3,
}

impl VertexKind {
    pub fn is_type_i(&self) -> bool {
        matches!(self, VertexKind::TypeI)
    }

    pub fn is_type_ii(&self) -> bool {
        matches!(
            self,
            VertexKind::TypeIiNondegenerate
                | VertexKind::TypeIi1
                | VertexKind::TypeIi2
                | VertexKind::TypeIi3
        )
    }

    pub fn is_singular(&self) -> bool {
        self.is_type_i() || self.is_type_ii()
    }
}

impl std::fmt::Display for VertexKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            VertexKind::Boundary => "Boundary",
            VertexKind::Regular => "Regular",
            VertexKind::TypeI => "TypeI",
            VertexKind::TypeIiNondegenerate => "TypeII-nondegenerate",
            VertexKind::TypeIi1 => "TypeII-1",
            VertexKind::TypeIi2 => "TypeII-2",
            VertexKind::TypeIi3 => "TypeII-3",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VertexClass {
    pub kind: VertexKind,
    pub theta_i: Option<f64>,
    pub theta_ii: Option<f64>,
    pub m: usize,
}

/// Classify a vertex star with singularity threshold `eps_sing`.
///
/// Degenerate Type II subtypes are resolved by the element count m:
/// 6 → non-degenerate, 5 → II-1, 4 → II-2, 3 → II-3.
pub fn classify_vertex(star: &VertexStar, eps_sing: f64) -> VertexClass {
    if !star.is_interior {
        return VertexClass {
            kind: VertexKind::Boundary,
            theta_i: None,
            theta_ii: None,
            m: star.m(),
        };
    }
    let ti = theta_i(star).expect("interior");
    let tii = theta_ii(star).expect("interior");
    let kind = if ti <= eps_sing {
        VertexKind::TypeI
    } else if tii <= eps_sing {
        match star.m() {
            m if m >= 6 => VertexKind::TypeIiNondegenerate,
            5 => VertexKind::TypeIi1,
            4 => VertexKind::TypeIi2,
            _ => VertexKind::TypeIi3,
        }
    } else {
        VertexKind::Regular
    };
    VertexClass { kind, theta_i: Some(ti), theta_ii: Some(tii), m: star.m() }
}

/// Classify every vertex of a mesh.
pub fn classify_mesh(mesh: &Triangulation, eps_sing: f64) -> Vec<VertexClass> {
    (0..mesh.n_vertices())
        .map(|v| classify_vertex(&build_star(mesh, v).expect("valid mesh"), eps_sing))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierReportEntry {
    pub vertex: usize,
    pub kind: VertexKind,
    pub theta_i: Option<f64>,
    pub theta_ii: Option<f64>,
    pub m: usize,
}

pub fn classifier_report(mesh: &Triangulation, eps_sing: f64) -> Vec<ClassifierReportEntry> {
    classify_mesh(mesh, eps_sing)
        .into_iter()
        .enumerate()
        .map(|(v, c)| ClassifierReportEntry {
            vertex: v,
            kind: c.kind,
            theta_i: c.theta_i,
            theta_ii: c.theta_ii,
            m: c.m,
        })
        .collect()
}

// ---------------------------------------------------------------------------
// mesh file IO
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct MeshFile {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
}

pub fn save_mesh(mesh: &Triangulation, path: &std::path::Path) -> Result<(), MeshError> {
    let file = MeshFile { vertices: mesh.vertices.to_vec(), triangles: mesh.triangles.to_vec() };
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

/// Load a mesh file; negatively oriented triangles are flipped and reported
/// as warnings, conformity violations are hard errors naming the offender.
pub fn load_mesh(path: &std::path::Path) -> Result<(Triangulation, Vec<String>), MeshError> {
    let text = std::fs::read_to_string(path)?;
    let file: MeshFile = serde_json::from_str(&text)?;
    let (mesh, flipped) = Triangulation::new_reorienting(file.vertices, file.triangles)?;
    let mut warnings = Vec::new();
    if flipped > 0 {
        warnings.push(format!("reoriented {flipped} negatively oriented triangle(s)"));
    }
    Ok((mesh, warnings))
}
