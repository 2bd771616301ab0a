//! The constrained finite element spaces Σ_k^r and Q_{k-1}^s.
//!
//! Both families are built over a plain nodal base space — three continuous
//! Lagrange P_k scalar fields for the stress, two broken P_{k-1} fields for
//! the displacement — with vertex-jet matching conditions on top: members of
//! Σ_k^r have single-valued derivatives up to order r at every vertex,
//! members of Q_{k-1}^s single-valued derivatives up to order s.
//!
//! Reduced coordinates are produced one of two ways.
//!
//! * Jet-adapted path: when the corner jets together with the lattice node
//!   values away from the corners are unisolvent on P_k (all r = 1 spaces,
//!   r = 2 for k ≥ 5, Q spaces of high enough degree), the element
//!   coefficients are re-parameterized by shared per-vertex jets, shared
//!   interior-edge node values and private interior values. The constraints
//!   hold by construction, the reduction map N is sparse, and the dimension
//!   formulas of the discrete complex come out exactly.
//! * Generic path: raw jet-jump constraint rows are rank-reduced per vertex
//!   and a dense orthonormal nullspace basis is extracted globally. This
//!   covers the low-degree regimes where the corner jets are linearly
//!   dependent (e.g. k = 4 with r = 2) and doubles as the independent oracle
//!   for the adapted construction.

use crate::elements::LagrangeBasis;
use crate::mesh::{build_star, Triangulation};
use crate::sparse::SpMat;
use nalgebra::DMatrix;
use serde::Serialize;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("stress space needs 4 <= k <= 8 and k >= r + 2, got k = {k}, r = {r}")]
    BadStressOrder { k: usize, r: i32 },
    #[error("displacement space needs 1 <= k-1 <= 8 and k-1 >= s + 1, got k-1 = {km1}, s = {s}")]
    BadDisplacementOrder { km1: usize, s: i32 },
    #[error("generic constraint elimination supports scalar base dimension <= {limit}, got {dim}")]
    TooLargeForGeneric { dim: usize, limit: usize },
    #[error("element basis: {0}")]
    Element(#[from] crate::elements::ElementError),
    #[error("mesh: {0}")]
    Mesh(#[from] crate::mesh::MeshError),
    #[error("constraint elimination produced a rank-deficient reduction")]
    DegenerateReduction,
    #[error("projection mass matrix is singular")]
    SingularMass,
    #[error("point lies outside the element")]
    PointOutsideElement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpaceKind {
    /// Symmetric-matrix stress field, C^r at vertices.
    Stress { r: i32 },
    /// Vector displacement field, C^s at vertices (s = -1: fully broken).
    Displacement { s: i32 },
}

/// Scalar-level nodal layout of the base space.
#[derive(Debug, Clone)]
pub struct BaseNumbering {
    pub continuous: bool,
    pub n_scalar: usize,
    /// Per element, lattice node -> global scalar dof.
    pub elem_nodes: Vec<Vec<usize>>,
    pub node_kind: Vec<BaseNodeKind>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseNodeKind {
    Vertex(usize),
    /// index runs 1..k-1 counted from the lower-numbered endpoint.
    EdgeNode { edge: usize, index: usize },
    Interior { tri: usize, index: usize },
    /// Discontinuous per-element node.
    ElementNode { tri: usize, node: usize },
}

/// One raw jet-jump constraint row (scalar level).
#[derive(Debug, Clone)]
pub struct ConstraintRow {
    pub vertex: usize,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DofKind {
    /// Derivative (dx, dy) of one component at a vertex.
    VertexJet { vertex: usize, deriv: (usize, usize) },
    EdgeNode { edge: usize, index: usize },
    Interior { tri: usize, index: usize },
    ElementNode { tri: usize, node: usize },
    /// Column of a dense nullspace basis (generic path).
    GenericMode { index: usize },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DofMeta {
    pub component: usize,
    pub kind: DofKind,
}

/// A constrained finite element space with reduced coordinates.
///
/// Base coordinates are component-major: component c occupies the scalar
/// block [c·n_scalar, (c+1)·n_scalar). The reduction map N (base = N·reduced)
/// has one identical scalar block per component.
pub struct FESpace {
    pub mesh: Arc<Triangulation>,
    pub kind: SpaceKind,
    pub degree: usize,
    pub ncomp: usize,
    pub base: BaseNumbering,
    pub basis: Arc<LagrangeBasis>,
    /// Raw jet-matching rows, grouped by vertex (scalar level).
    pub constraints: Vec<ConstraintRow>,
    n_scalar_red: usize,
    reduction_scalar: Option<SpMat>, // None = identity
    reduction_full: std::sync::OnceLock<SpMat>,
    pub dof_meta: Vec<DofMeta>,
    /// True when built by the jet-adapted path.
    pub adapted: bool,
}

impl FESpace {
    pub fn dim(&self) -> usize {
        self.ncomp * self.n_scalar_red
    }

    pub fn base_dim(&self) -> usize {
        self.ncomp * self.base.n_scalar
    }

    pub fn n_scalar(&self) -> usize {
        self.base.n_scalar
    }

    pub fn n_scalar_red(&self) -> usize {
        self.n_scalar_red
    }

    /// Number of raw constraint rows at vector level.
    pub fn n_constraints(&self) -> usize {
        self.ncomp * self.constraints.len()
    }

    /// Rank of the constraint set at vector level.
    pub fn rank_constraints(&self) -> usize {
        self.base_dim() - self.dim()
    }

    pub fn is_identity_reduction(&self) -> bool {
        self.reduction_scalar.is_none()
    }

    /// Scalar-level reduction map (owned copy; identity when unconstrained).
    pub fn reduction_scalar(&self) -> SpMat {
        match &self.reduction_scalar {
            Some(n) => n.clone(),
            None => SpMat::identity(self.base.n_scalar),
        }
    }

    /// Vector-level reduction map N with base = N · reduced.
    pub fn reduction(&self) -> &SpMat {
        self.reduction_full.get_or_init(|| {
            let scalar = self.reduction_scalar();
            let mut trips = Vec::with_capacity(self.ncomp * scalar.nnz());
            for c in 0..self.ncomp {
                let ro = c * self.base.n_scalar;
                let co = c * self.n_scalar_red;
                for (r, col, v) in scalar.triplets() {
                    trips.push((ro + r, co + col, v));
                }
            }
            SpMat::from_triplets(self.base_dim(), self.dim(), &trips)
        })
    }

    /// Reduce a base-coordinate operator acting on this space: Nᵀ A N.
    pub fn reduce_operator(&self, a_base: &SpMat) -> SpMat {
        if self.is_identity_reduction() {
            return a_base.clone();
        }
        let n = self.reduction();
        n.transpose().matmul(&a_base.matmul(n))
    }

    /// Reduce a mixed operator B: rows in `row_space`, columns in `col_space`.
    pub fn reduce_mixed(row_space: &FESpace, col_space: &FESpace, b_base: &SpMat) -> SpMat {
        let tmp = if col_space.is_identity_reduction() {
            b_base.clone()
        } else {
            b_base.matmul(col_space.reduction())
        };
        if row_space.is_identity_reduction() {
            tmp
        } else {
            row_space.reduction().transpose().matmul(&tmp)
        }
    }

    /// Reduce a base functional/load vector: Nᵀ f.
    pub fn reduce_vector(&self, f_base: &[f64]) -> Vec<f64> {
        if self.is_identity_reduction() {
            return f_base.to_vec();
        }
        self.reduction().matvec_transpose(f_base)
    }

    /// Expand reduced coefficients to base coefficients.
    pub fn to_base(&self, reduced: &[f64]) -> Vec<f64> {
        if self.is_identity_reduction() {
            return reduced.to_vec();
        }
        self.reduction().matvec(reduced)
    }

    /// Base scalar dof ids of an element's lattice nodes.
    pub fn elem_scalar_ids(&self, t: usize) -> &[usize] {
        &self.base.elem_nodes[t]
    }

    /// Residual of the raw constraints applied to the reduction map,
    /// normalized by the largest constraint coefficient.
    pub fn constraint_residual(&self) -> f64 {
        let n = self.reduction_scalar();
        let mut cmax = 0.0f64;
        let mut worst = 0.0f64;
        let nt = n.transpose();
        for row in &self.constraints {
            let mut dense = vec![0.0; self.base.n_scalar];
            for (c, v) in row.cols.iter().zip(&row.vals) {
                dense[*c] += v;
                cmax = cmax.max(v.abs());
            }
            let prod = nt.matvec(&dense);
            worst = worst.max(prod.iter().fold(0.0f64, |a, v| a.max(v.abs())));
        }
        if cmax == 0.0 {
            0.0
        } else {
            worst / cmax
        }
    }

    pub fn report(&self) -> SpaceReport {
        SpaceReport {
            kind: match self.kind {
                SpaceKind::Stress { .. } => "stress".into(),
                SpaceKind::Displacement { .. } => "displacement".into(),
            },
            k: self.degree,
            r_or_s: match self.kind {
                SpaceKind::Stress { r } => r,
                SpaceKind::Displacement { s } => s,
            },
            base_dim: self.base_dim(),
            n_constraints: self.n_constraints(),
            rank_constraints: self.rank_constraints(),
            dim: self.dim(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpaceReport {
    pub kind: String,
    pub k: usize,
    pub r_or_s: i32,
    pub base_dim: usize,
    pub n_constraints: usize,
    pub rank_constraints: usize,
    pub dim: usize,
}

impl std::fmt::Debug for FESpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FESpace")
            .field("kind", &self.kind)
            .field("degree", &self.degree)
            .field("dim", &self.dim())
            .field("base_dim", &self.base_dim())
            .field("adapted", &self.adapted)
            .finish()
    }
}

// ---------------------------------------------------------------------------
// base numbering
// ---------------------------------------------------------------------------

fn cg_numbering(mesh: &Triangulation, k: usize, basis: &LagrangeBasis) -> BaseNumbering {
    let nv = mesh.n_vertices();
    let ne = mesh.n_edges();
    let per_edge = k - 1;
    let per_tri = (k - 1) * (k - 2) / 2;
    let n_scalar = nv + ne * per_edge + mesh.n_triangles() * per_tri;
    let mut elem_nodes = Vec::with_capacity(mesh.n_triangles());
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangle(t);
        let mut locals = Vec::with_capacity(basis.ndofs());
        let mut interior_seen = 0usize;
        for alpha in &basis.nodes {
            let zeros: Vec<usize> = (0..3).filter(|&c| alpha[c] == 0).collect();
            let g = match zeros.len() {
                2 => tri[(0..3).find(|&c| alpha[c] == k).unwrap()],
                1 => {
                    let zc = zeros[0];
                    let e = mesh.tri_edge(t, (zc + 1) % 3);
                    let edge = mesh.edges()[e];
                    let (la, lb) = ((zc + 1) % 3, (zc + 2) % 3);
                    let idx = if tri[la] == edge.verts[0] {
                        alpha[lb]
                    } else {
                        debug_assert_eq!(tri[lb], edge.verts[0]);
                        alpha[la]
                    };
                    nv + e * per_edge + (idx - 1)
                }
                0 => {
                    let idx = interior_seen;
                    interior_seen += 1;
                    nv + ne * per_edge + t * per_tri + idx
                }
                _ => unreachable!("lattice node with all weights zero"),
            };
            locals.push(g);
        }
        elem_nodes.push(locals);
    }
    let node_kind = (0..n_scalar)
        .map(|g| {
            if g < nv {
                BaseNodeKind::Vertex(g)
            } else if g < nv + ne * per_edge {
                BaseNodeKind::EdgeNode { edge: (g - nv) / per_edge, index: (g - nv) % per_edge + 1 }
            } else {
                let rel = g - nv - ne * per_edge;
                BaseNodeKind::Interior { tri: rel / per_tri, index: rel % per_tri }
            }
        })
        .collect();
    BaseNumbering { continuous: true, n_scalar, elem_nodes, node_kind }
}

fn dg_numbering(mesh: &Triangulation, basis: &LagrangeBasis) -> BaseNumbering {
    let nk = basis.ndofs();
    let n_scalar = mesh.n_triangles() * nk;
    let mut elem_nodes = Vec::with_capacity(mesh.n_triangles());
    let mut node_kind = Vec::with_capacity(n_scalar);
    for t in 0..mesh.n_triangles() {
        elem_nodes.push((t * nk..(t + 1) * nk).collect());
        for node in 0..nk {
            node_kind.push(BaseNodeKind::ElementNode { tri: t, node });
        }
    }
    BaseNumbering { continuous: false, n_scalar, elem_nodes, node_kind }
}

// ---------------------------------------------------------------------------
// constraint rows
// ---------------------------------------------------------------------------

/// Jump rows between consecutive elements of a star: orders 1..=r for the
/// continuous base (vertex values are already shared), 0..=s for the broken
/// base.
fn jet_rows_for_vertex(
    mesh: &Triangulation,
    basis: &LagrangeBasis,
    base: &BaseNumbering,
    v: usize,
    max_order: i32,
) -> Vec<ConstraintRow> {
    let min_order: i32 = if base.continuous { 1 } else { 0 };
    if max_order < min_order {
        return Vec::new();
    }
    let star = build_star(mesh, v).expect("valid mesh vertex");
    let m = star.m();
    let n_pairs = if star.is_interior { m } else { m - 1 };
    if n_pairs == 0 {
        return Vec::new();
    }
    let mut rows = Vec::new();
    let jets: Vec<Vec<Vec<f64>>> = star
        .elements
        .iter()
        .map(|&t| elem_jets_at_vertex(mesh, basis, t, v, max_order as usize))
        .collect();
    for p in 0..n_pairs {
        let (ta, tb) = (p, (p + 1) % m);
        for ord in min_order..=max_order {
            let ord = ord as usize;
            let off: usize = (0..ord).map(|o| o + 1).sum();
            for d in 0..(ord + 1) {
                let mut cols = Vec::new();
                let mut vals = Vec::new();
                for (t_loc, sign) in [(ta, 1.0f64), (tb, -1.0f64)] {
                    let t = star.elements[t_loc];
                    for (i, &g) in base.elem_nodes[t].iter().enumerate() {
                        let val = jets[t_loc][off + d][i];
                        if val != 0.0 {
                            cols.push(g);
                            vals.push(sign * val);
                        }
                    }
                }
                rows.push(ConstraintRow { vertex: v, cols, vals });
            }
        }
    }
    rows
}

/// Derivative rows (orders 0..=max_order) of every local basis function at
/// vertex v in physical coordinates. Ordering: value; dx, dy; dxx, dxy, dyy.
fn elem_jets_at_vertex(
    mesh: &Triangulation,
    basis: &LagrangeBasis,
    t: usize,
    v: usize,
    max_order: usize,
) -> Vec<Vec<f64>> {
    let tri = mesh.triangle(t);
    let loc = tri.iter().position(|&w| w == v).expect("vertex in element");
    let mut bary = [0.0; 3];
    bary[loc] = 1.0;
    let map = mesh.affine(t);
    let bv = basis.eval(&bary, max_order.min(2), Some(&map));
    let n = basis.ndofs();
    let mut rows = vec![bv.vals.clone()];
    if max_order >= 1 {
        rows.push((0..n).map(|i| bv.grads[i][0]).collect());
        rows.push((0..n).map(|i| bv.grads[i][1]).collect());
    }
    if max_order >= 2 {
        rows.push((0..n).map(|i| bv.hess[i][0]).collect());
        rows.push((0..n).map(|i| bv.hess[i][1]).collect());
        rows.push((0..n).map(|i| bv.hess[i][2]).collect());
    }
    rows
}

// ---------------------------------------------------------------------------
// jet-adapted reduction
// ---------------------------------------------------------------------------

const JET_DERIVS: [(usize, usize); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];

struct AdaptedLayout {
    n_scalar_red: usize,
    /// Per element: reduced scalar ids in functional order.
    elem_red: Vec<Vec<usize>>,
    dof_kinds: Vec<DofKind>,
}

/// Lattice nodes kept as plain point values: all barycentric indices
/// ≤ k - r - 1 (everything within distance r of a corner is dropped in
/// favor of the corner jet).
fn kept_nodes(basis: &LagrangeBasis, r: usize) -> Vec<usize> {
    let k = basis.degree;
    if k < r + 1 {
        return Vec::new();
    }
    (0..basis.ndofs())
        .filter(|&i| basis.nodes[i].iter().all(|&a| a <= k - 1 - r))
        .collect()
}

/// Corner jets plus kept nodes must exactly fill P_k, with each dropped node
/// attributable to a single corner.
fn adapted_counts_ok(basis: &LagrangeBasis, r: usize) -> bool {
    let d_r = (r + 1) * (r + 2) / 2;
    3 * d_r + kept_nodes(basis, r).len() == basis.ndofs()
}

fn adapted_layout(
    mesh: &Triangulation,
    basis: &LagrangeBasis,
    base: &BaseNumbering,
    r: usize,
) -> AdaptedLayout {
    let k = basis.degree;
    let d_r = (r + 1) * (r + 2) / 2;
    let nv = mesh.n_vertices();
    let kept = kept_nodes(basis, r);
    let mut dof_kinds = Vec::new();
    for v in 0..nv {
        for d in JET_DERIVS.iter().take(d_r) {
            dof_kinds.push(DofKind::VertexJet { vertex: v, deriv: *d });
        }
    }
    let mut elem_red = Vec::with_capacity(mesh.n_triangles());
    if base.continuous {
        let edge_keep = k - 1 - 2 * r;
        let edge_offset = nv * d_r;
        for e in 0..mesh.n_edges() {
            for i in 0..edge_keep {
                dof_kinds.push(DofKind::EdgeNode { edge: e, index: r + 1 + i });
            }
        }
        let tri_offset = edge_offset + mesh.n_edges() * edge_keep;
        let interior_kept: Vec<usize> =
            kept.iter().copied().filter(|&i| basis.nodes[i].iter().all(|&a| a > 0)).collect();
        let tri_keep = interior_kept.len();
        for t in 0..mesh.n_triangles() {
            for i in 0..tri_keep {
                dof_kinds.push(DofKind::Interior { tri: t, index: i });
            }
        }
        for t in 0..mesh.n_triangles() {
            let mut ids = Vec::with_capacity(basis.ndofs());
            let tri = mesh.triangle(t);
            for c in 0..3 {
                for j in 0..d_r {
                    ids.push(tri[c] * d_r + j);
                }
            }
            let mut interior_seen = 0usize;
            for &node in &kept {
                let alpha = basis.nodes[node];
                if alpha.iter().all(|&a| a > 0) {
                    ids.push(tri_offset + t * tri_keep + interior_seen);
                    interior_seen += 1;
                } else {
                    let g = base.elem_nodes[t][node];
                    let BaseNodeKind::EdgeNode { edge, index } = base.node_kind[g] else {
                        unreachable!("kept non-interior node must be an edge node");
                    };
                    ids.push(edge_offset + edge * edge_keep + (index - 1 - r));
                }
            }
            elem_red.push(ids);
        }
    } else {
        let tri_keep = kept.len();
        let tri_offset = nv * d_r;
        for t in 0..mesh.n_triangles() {
            for i in 0..tri_keep {
                dof_kinds.push(DofKind::ElementNode { tri: t, node: i });
            }
        }
        for t in 0..mesh.n_triangles() {
            let tri = mesh.triangle(t);
            let mut ids = Vec::with_capacity(basis.ndofs());
            for c in 0..3 {
                for j in 0..d_r {
                    ids.push(tri[c] * d_r + j);
                }
            }
            for i in 0..tri_keep {
                ids.push(tri_offset + t * tri_keep + i);
            }
            elem_red.push(ids);
        }
    }
    AdaptedLayout { n_scalar_red: dof_kinds.len(), elem_red, dof_kinds }
}

/// Per-element functional matrix G: adapted values = G · lagrange coeffs.
/// Rows: corner jets (physical derivatives) then kept node values.
fn adapted_g(
    mesh: &Triangulation,
    basis: &LagrangeBasis,
    t: usize,
    r: usize,
    kept: &[usize],
) -> DMatrix<f64> {
    let n = basis.ndofs();
    let d_r = (r + 1) * (r + 2) / 2;
    let mut g = DMatrix::zeros(n, n);
    let tri = mesh.triangle(t);
    for c in 0..3 {
        let rows = elem_jets_at_vertex(mesh, basis, t, tri[c], r);
        for j in 0..d_r {
            for i in 0..n {
                g[(c * d_r + j, i)] = rows[j][i];
            }
        }
    }
    for (row, &node) in kept.iter().enumerate() {
        g[(3 * d_r + row, node)] = 1.0;
    }
    g
}

/// Assemble the scalar reduction map from per-element inverse functional
/// matrices. Rows of shared base dofs are written by their first (canonical)
/// element; the shared-trace property makes all incident elements agree.
fn adapted_reduction(
    mesh: &Triangulation,
    basis: &LagrangeBasis,
    base: &BaseNumbering,
    r: usize,
) -> Option<(SpMat, AdaptedLayout)> {
    if !adapted_counts_ok(basis, r) {
        return None;
    }
    let kept = kept_nodes(basis, r);
    let layout = adapted_layout(mesh, basis, base, r);
    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    let mut owned = vec![false; base.n_scalar];
    for t in 0..mesh.n_triangles() {
        let g = adapted_g(mesh, basis, t, r, &kept);
        let ginv = g.lu().try_inverse()?;
        if !ginv.iter().all(|v| v.is_finite()) {
            return None;
        }
        let ids = &layout.elem_red[t];
        for (node, &b) in base.elem_nodes[t].iter().enumerate() {
            if owned[b] {
                continue;
            }
            owned[b] = true;
            for (col, &red) in ids.iter().enumerate() {
                let v = ginv[(node, col)];
                if v.abs() > 1e-14 {
                    trips.push((b, red, v));
                }
            }
        }
    }
    if !owned.iter().all(|&o| o) {
        return None;
    }
    Some((SpMat::from_triplets(base.n_scalar, layout.n_scalar_red, &trips), layout))
}

// ---------------------------------------------------------------------------
// generic dense nullspace reduction
// ---------------------------------------------------------------------------

const GENERIC_SCALAR_LIMIT: usize = 2500;

/// Per-vertex rank-revealed constraint ranks (threshold 1e-9 · σ_max).
pub(crate) fn per_vertex_ranks(rows: &[ConstraintRow]) -> std::collections::BTreeMap<usize, usize> {
    let mut by_vertex: std::collections::BTreeMap<usize, Vec<&ConstraintRow>> = Default::default();
    for row in rows {
        by_vertex.entry(row.vertex).or_default().push(row);
    }
    let mut out = std::collections::BTreeMap::new();
    for (v, block) in by_vertex {
        let (m, _) = block_matrix(&block);
        let svd = m.svd(false, false);
        let smax = svd.singular_values.max();
        let rank = svd.singular_values.iter().filter(|&&s| s > 1e-9 * smax).count();
        out.insert(v, rank);
    }
    out
}

fn block_matrix(block: &[&ConstraintRow]) -> (DMatrix<f64>, Vec<usize>) {
    let mut cols: Vec<usize> = block.iter().flat_map(|r| r.cols.iter().copied()).collect();
    cols.sort_unstable();
    cols.dedup();
    let pos: std::collections::HashMap<usize, usize> =
        cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut m = DMatrix::zeros(block.len(), cols.len());
    for (ri, row) in block.iter().enumerate() {
        for (c, v) in row.cols.iter().zip(&row.vals) {
            m[(ri, pos[c])] += v;
        }
    }
    (m, cols)
}

/// Rank-reduce the rows per vertex, stack, and compute an orthonormal
/// nullspace basis of the stacked constraint matrix.
fn generic_reduction(n_scalar: usize, rows: &[ConstraintRow]) -> Result<(SpMat, usize), SpaceError> {
    if n_scalar > GENERIC_SCALAR_LIMIT {
        return Err(SpaceError::TooLargeForGeneric { dim: n_scalar, limit: GENERIC_SCALAR_LIMIT });
    }
    let mut by_vertex: std::collections::BTreeMap<usize, Vec<&ConstraintRow>> = Default::default();
    for row in rows {
        by_vertex.entry(row.vertex).or_default().push(row);
    }
    let mut reduced_rows: Vec<(Vec<usize>, Vec<f64>)> = Vec::new();
    for (_, block) in by_vertex {
        let (m, cols) = block_matrix(&block);
        let svd = m.svd(false, true);
        let smax = svd.singular_values.max();
        let rank = svd.singular_values.iter().filter(|&&s| s > 1e-9 * smax).count();
        let vt = svd.v_t.as_ref().unwrap();
        for r in 0..rank {
            let vals: Vec<f64> = (0..cols.len()).map(|c| vt[(r, c)]).collect();
            reduced_rows.push((cols.clone(), vals));
        }
    }
    if reduced_rows.is_empty() {
        return Ok((SpMat::identity(n_scalar), n_scalar));
    }
    let m_rows = reduced_rows.len();
    let mut c = DMatrix::zeros(m_rows, n_scalar);
    for (ri, (cols, vals)) in reduced_rows.iter().enumerate() {
        for (col, v) in cols.iter().zip(vals) {
            c[(ri, *col)] += v;
        }
    }
    let qr = c.col_piv_qr();
    let r_full: DMatrix<f64> = qr.r();
    let rmax = r_full.diagonal().iter().fold(0.0f64, |a: f64, d: &f64| a.max(d.abs()));
    let rank = r_full.diagonal().iter().filter(|d: &&f64| d.abs() > 1e-10 * rmax).count();
    let dim = n_scalar - rank;
    if dim == 0 {
        return Err(SpaceError::DegenerateReduction);
    }
    let r1 = r_full.view((0, 0), (rank, rank)).into_owned();
    let r2 = r_full.view((0, rank), (rank, n_scalar - rank)).into_owned();
    let x = r1
        .solve_upper_triangular(&r2)
        .ok_or(SpaceError::DegenerateReduction)?;
    let mut n_permuted = DMatrix::zeros(n_scalar, dim);
    for j in 0..dim {
        n_permuted[(rank + j, j)] = 1.0;
        for i in 0..rank {
            n_permuted[(i, j)] = -x[(i, j)];
        }
    }
    // C P = Q R, R·y = 0 ⇒ C (P y) = 0: scatter the permuted rows back.
    let mut n_mat = DMatrix::zeros(n_scalar, dim);
    let perm = permutation_vector(qr.p(), n_scalar);
    for (pos, &orig) in perm.iter().enumerate() {
        for j in 0..dim {
            n_mat[(orig, j)] = n_permuted[(pos, j)];
        }
    }
    let q = n_mat.qr().q();
    Ok((SpMat::from_dense(&q.columns(0, dim).into_owned(), 0.0), dim))
}

/// Column indices of C picked by the pivoting, in pivot order: entry `pos`
/// is the original column now at position `pos`.
fn permutation_vector(p: &nalgebra::PermutationSequence<nalgebra::Dyn>, n: usize) -> Vec<usize> {
    let mut m = DMatrix::<f64>::zeros(n, 1);
    for i in 0..n {
        m[(i, 0)] = i as f64;
    }
    p.permute_rows(&mut m);
    (0..n).map(|i| m[(i, 0)] as usize).collect()
}

// ---------------------------------------------------------------------------
// builders
// ---------------------------------------------------------------------------

/// How to realize the reduced coordinates of a constrained space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReductionStrategy {
    /// Jet-adapted construction when available, generic elimination otherwise.
    #[default]
    Auto,
    /// Force the rank-revealing constraint elimination (oracle path).
    Generic,
}

/// Σ_k^r: three continuous P_k components with C^r vertex continuity.
pub fn build_sigma(mesh: &Arc<Triangulation>, k: usize, r: i32) -> Result<FESpace, SpaceError> {
    build_sigma_with(mesh, k, r, ReductionStrategy::Auto)
}

pub fn build_sigma_with(
    mesh: &Arc<Triangulation>,
    k: usize,
    r: i32,
    strategy: ReductionStrategy,
) -> Result<FESpace, SpaceError> {
    if !(4..=8).contains(&k) || !(0..=2).contains(&r) || (k as i32) < r + 2 {
        return Err(SpaceError::BadStressOrder { k, r });
    }
    let basis = LagrangeBasis::get(k)?;
    let base = cg_numbering(mesh, k, &basis);
    let mut constraints = Vec::new();
    if r >= 1 {
        for v in 0..mesh.n_vertices() {
            constraints.extend(jet_rows_for_vertex(mesh, &basis, &base, v, r));
        }
    }
    build_space(mesh.clone(), SpaceKind::Stress { r }, k, 3, base, basis, constraints, r, strategy)
}

/// Q_{k-1}^s: two broken P_{k-1} components with C^s vertex continuity
/// (s = -1: no coupling at all).
pub fn build_q(mesh: &Arc<Triangulation>, k_minus_1: usize, s: i32) -> Result<FESpace, SpaceError> {
    build_q_with(mesh, k_minus_1, s, ReductionStrategy::Auto)
}

pub fn build_q_with(
    mesh: &Arc<Triangulation>,
    k_minus_1: usize,
    s: i32,
    strategy: ReductionStrategy,
) -> Result<FESpace, SpaceError> {
    if !(1..=8).contains(&k_minus_1) || !(-1..=1).contains(&s) || (k_minus_1 as i32) < s + 1 {
        return Err(SpaceError::BadDisplacementOrder { km1: k_minus_1, s });
    }
    let basis = LagrangeBasis::get(k_minus_1)?;
    let base = dg_numbering(mesh, &basis);
    let mut constraints = Vec::new();
    if s >= 0 {
        for v in 0..mesh.n_vertices() {
            constraints.extend(jet_rows_for_vertex(mesh, &basis, &base, v, s));
        }
    }
    build_space(
        mesh.clone(),
        SpaceKind::Displacement { s },
        k_minus_1,
        2,
        base,
        basis,
        constraints,
        s,
        strategy,
    )
}

#[allow(clippy::too_many_arguments)]
fn build_space(
    mesh: Arc<Triangulation>,
    kind: SpaceKind,
    degree: usize,
    ncomp: usize,
    base: BaseNumbering,
    basis: Arc<LagrangeBasis>,
    constraints: Vec<ConstraintRow>,
    smoothness: i32,
    strategy: ReductionStrategy,
) -> Result<FESpace, SpaceError> {
    let unconstrained = match kind {
        SpaceKind::Stress { r } => r == 0,
        SpaceKind::Displacement { s } => s < 0,
    };
    let adapted_try = if strategy == ReductionStrategy::Auto && !unconstrained {
        adapted_reduction(&mesh, &basis, &base, smoothness as usize)
    } else {
        None
    };
    let (reduction_scalar, n_scalar_red, dof_meta_kinds, adapted) = if unconstrained {
        let kinds: Vec<DofKind> = base
            .node_kind
            .iter()
            .map(|nk| match *nk {
                BaseNodeKind::Vertex(v) => DofKind::VertexJet { vertex: v, deriv: (0, 0) },
                BaseNodeKind::EdgeNode { edge, index } => DofKind::EdgeNode { edge, index },
                BaseNodeKind::Interior { tri, index } => DofKind::Interior { tri, index },
                BaseNodeKind::ElementNode { tri, node } => DofKind::ElementNode { tri, node },
            })
            .collect();
        (None, base.n_scalar, kinds, false)
    } else if let Some((n, layout)) = adapted_try {
        (Some(n), layout.n_scalar_red, layout.dof_kinds, true)
    } else {
        let (n, dim) = generic_reduction(base.n_scalar, &constraints)?;
        let kinds = (0..dim).map(|index| DofKind::GenericMode { index }).collect();
        (Some(n), dim, kinds, false)
    };
    let mut dof_meta = Vec::with_capacity(ncomp * n_scalar_red);
    for component in 0..ncomp {
        for kdof in &dof_meta_kinds {
            dof_meta.push(DofMeta { component, kind: *kdof });
        }
    }
    Ok(FESpace {
        mesh,
        kind,
        degree,
        ncomp,
        base,
        basis,
        constraints,
        n_scalar_red,
        reduction_scalar,
        reduction_full: std::sync::OnceLock::new(),
        dof_meta,
        adapted,
    })
}

// ---------------------------------------------------------------------------
// discrete fields
// ---------------------------------------------------------------------------

/// A member of a space: reduced coefficients with the base expansion cached.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    pub space: Arc<FESpace>,
    pub reduced: Vec<f64>,
    pub base: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FieldValue {
    pub value: Vec<f64>,
    /// grad[c] = (∂x, ∂y) of component c
    pub grad: Vec<[f64; 2]>,
    /// hess[c] = (∂xx, ∂xy, ∂yy)
    pub hess: Vec<[f64; 3]>,
}

impl DiscreteField {
    pub fn new(space: Arc<FESpace>, reduced: Vec<f64>) -> Self {
        assert_eq!(reduced.len(), space.dim());
        let base = space.to_base(&reduced);
        DiscreteField { space, reduced, base }
    }

    pub fn zero(space: Arc<FESpace>) -> Self {
        Self::new(space.clone(), vec![0.0; space.dim()])
    }

    /// Component values (and derivatives up to `order`) at a barycentric
    /// point of element `t`.
    pub fn eval_bary(&self, t: usize, bary: &[f64; 3], order: usize) -> FieldValue {
        let space = &self.space;
        let map = space.mesh.affine(t);
        let bv = space.basis.eval(bary, order, Some(&map));
        let ids = space.elem_scalar_ids(t);
        let n_scalar = space.n_scalar();
        let mut out = FieldValue {
            value: vec![0.0; space.ncomp],
            grad: vec![[0.0; 2]; if order >= 1 { space.ncomp } else { 0 }],
            hess: vec![[0.0; 3]; if order >= 2 { space.ncomp } else { 0 }],
        };
        for c in 0..space.ncomp {
            let off = c * n_scalar;
            for (i, &g) in ids.iter().enumerate() {
                let coef = self.base[off + g];
                if coef == 0.0 {
                    continue;
                }
                out.value[c] += coef * bv.vals[i];
                if order >= 1 {
                    out.grad[c][0] += coef * bv.grads[i][0];
                    out.grad[c][1] += coef * bv.grads[i][1];
                }
                if order >= 2 {
                    out.hess[c][0] += coef * bv.hess[i][0];
                    out.hess[c][1] += coef * bv.hess[i][1];
                    out.hess[c][2] += coef * bv.hess[i][2];
                }
            }
        }
        out
    }

    /// Evaluate at a physical point that must lie inside element `t`.
    pub fn evaluate(&self, t: usize, p: [f64; 2], order: usize) -> Result<FieldValue, SpaceError> {
        let map = self.space.mesh.affine(t);
        let bary = map.to_bary(p);
        if bary.iter().any(|&b| b < -1e-10) {
            return Err(SpaceError::PointOutsideElement);
        }
        Ok(self.eval_bary(t, &bary, order))
    }
}

/// Global L² projection onto the space.
pub fn project(
    space: &Arc<FESpace>,
    f: &dyn Fn([f64; 2]) -> Vec<f64>,
) -> Result<DiscreteField, SpaceError> {
    project_with(space, &|_t, p| f(p))
}

/// L² projection of another discrete field on the same mesh.
pub fn project_field(space: &Arc<FESpace>, field: &DiscreteField) -> Result<DiscreteField, SpaceError> {
    assert!(Arc::ptr_eq(&space.mesh, &field.space.mesh), "fields must share the mesh");
    project_with(space, &|t, p| field.evaluate(t, p, 0).expect("inside element").value)
}

/// L² projection with element-aware evaluation of the target function.
pub fn project_with(
    space: &Arc<FESpace>,
    f: &dyn Fn(usize, [f64; 2]) -> Vec<f64>,
) -> Result<DiscreteField, SpaceError> {
    let quad_degree = (2 * space.degree + 4).min(20);
    let quad = crate::elements::QuadratureRule::with_degree(quad_degree)?;
    let mesh = &space.mesh;
    let basis = &space.basis;
    let nk = basis.ndofs();
    let n_scalar = space.n_scalar();
    let ref_vals: Vec<Vec<f64>> = quad.points.iter().map(|p| basis.eval(p, 0, None).vals).collect();
    let mut mass_trips = Vec::new();
    let mut rhs = vec![0.0; space.base_dim()];
    for t in 0..mesh.n_triangles() {
        let map = mesh.affine(t);
        let scale = map.det.abs();
        let ids = space.elem_scalar_ids(t);
        let mut local = DMatrix::zeros(nk, nk);
        for (q, pvals) in ref_vals.iter().enumerate() {
            let w = quad.weights[q] * scale;
            let fx = f(t, map.apply(&quad.points[q]));
            for i in 0..nk {
                for j in 0..nk {
                    local[(i, j)] += w * pvals[i] * pvals[j];
                }
                for c in 0..space.ncomp {
                    rhs[c * n_scalar + ids[i]] += w * pvals[i] * fx[c];
                }
            }
        }
        for i in 0..nk {
            for j in 0..nk {
                mass_trips.push((ids[i], ids[j], local[(i, j)]));
            }
        }
    }
    let mass_scalar = SpMat::from_triplets(n_scalar, n_scalar, &mass_trips);
    let red = space.reduction_scalar();
    let mass_red = if space.is_identity_reduction() {
        mass_scalar
    } else {
        red.transpose().matmul(&mass_scalar.matmul(&red))
    };
    let n_red = space.n_scalar_red();
    let chol = mass_red.to_dense().cholesky().ok_or(SpaceError::SingularMass)?;
    let mut reduced = vec![0.0; space.dim()];
    for c in 0..space.ncomp {
        let rhs_c: Vec<f64> = rhs[c * n_scalar..(c + 1) * n_scalar].to_vec();
        let rhs_red =
            if space.is_identity_reduction() { rhs_c } else { red.matvec_transpose(&rhs_c) };
        let sol = chol.solve(&nalgebra::DVector::from_vec(rhs_red));
        reduced[c * n_red..(c + 1) * n_red].copy_from_slice(sol.as_slice());
    }
    Ok(DiscreteField::new(space.clone(), reduced))
}

/// Per-vertex constraint ranks (scalar level), for locality audits.
pub fn per_vertex_rank_table(space: &FESpace) -> std::collections::BTreeMap<usize, usize> {
    per_vertex_ranks(&space.constraints)
}
