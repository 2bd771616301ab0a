//! Barycentric Lagrange bases on the reference triangle with derivatives.
//!
//! The nodal basis of P_k on the principal lattice is represented in the
//! Bernstein basis (well conditioned for the degrees used here). Derivatives
//! up to third order are exact: each ∂x^p ∂y^q acting on degree-k Bernstein
//! polynomials is a signed transfer onto degree-(k-p-q) Bernstein values.
//! Physical-coordinate derivatives are obtained from the affine element map.

use super::ElementError;
use nalgebra::DMatrix;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

pub const MAX_DEGREE: usize = 10;

/// Affine map from the reference triangle onto a physical element.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap {
    pub origin: [f64; 2],
    /// Columns are the edge vectors v1-v0 and v2-v0.
    pub jac: [[f64; 2]; 2],
    pub inv_jac: [[f64; 2]; 2],
    pub det: f64,
}

impl AffineMap {
    pub fn new(v0: [f64; 2], v1: [f64; 2], v2: [f64; 2]) -> Self {
        let jac = [
            [v1[0] - v0[0], v2[0] - v0[0]],
            [v1[1] - v0[1], v2[1] - v0[1]],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let inv_jac = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        AffineMap { origin: v0, jac, inv_jac, det }
    }

    pub fn apply(&self, bary: &[f64; 3]) -> [f64; 2] {
        let (x, y) = (bary[1], bary[2]);
        [
            self.origin[0] + self.jac[0][0] * x + self.jac[0][1] * y,
            self.origin[1] + self.jac[1][0] * x + self.jac[1][1] * y,
        ]
    }

    /// Barycentric coordinates of a physical point.
    pub fn to_bary(&self, p: [f64; 2]) -> [f64; 3] {
        let dx = p[0] - self.origin[0];
        let dy = p[1] - self.origin[1];
        let x = self.inv_jac[0][0] * dx + self.inv_jac[0][1] * dy;
        let y = self.inv_jac[1][0] * dx + self.inv_jac[1][1] * dy;
        [1.0 - x - y, x, y]
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det.abs()
    }
}

/// Values and derivatives of all basis functions at one point.
///
/// Hessians are packed (xx, xy, yy); third derivatives (xxx, xxy, xyy, yyy).
#[derive(Debug, Clone, Default)]
pub struct BasisValues {
    pub vals: Vec<f64>,
    pub grads: Vec<[f64; 2]>,
    pub hess: Vec<[f64; 3]>,
    pub third: Vec<[f64; 4]>,
}

/// The nodal Lagrange basis of P_k on the principal lattice.
#[derive(Debug)]
pub struct LagrangeBasis {
    pub degree: usize,
    /// Lattice multi-indices (a0, a1, a2), Σ = k; node n sits at (a1/k, a2/k).
    pub nodes: Vec<[usize; 3]>,
    /// Bernstein coefficients of the nodal basis: column i = basis fn i.
    coeffs: DMatrix<f64>,
    /// Derivative transfers: ∂x^p ∂y^q of degree-k Bernsteins expanded over
    /// degree-(k-p-q) Bernsteins; key (p, q), entry [alpha_row][beta_col].
    transfers: HashMap<(usize, usize), DMatrix<f64>>,
}

pub fn multi_indices(k: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a1 in 0..=k {
        for a2 in 0..=(k - a1) {
            out.push([k - a1 - a2, a1, a2]);
        }
    }
    out
}

fn index_of(table: &HashMap<[usize; 3], usize>, key: [usize; 3]) -> usize {
    table[&key]
}

fn index_table(list: &[[usize; 3]]) -> HashMap<[usize; 3], usize> {
    list.iter().enumerate().map(|(i, a)| (*a, i)).collect()
}

/// All Bernstein values B^d_alpha(λ) in the `multi_indices(d)` ordering.
fn bernstein_values(d: usize, lambda: &[f64; 3]) -> Vec<f64> {
    let idx = multi_indices(d);
    let mut out = Vec::with_capacity(idx.len());
    for a in idx {
        let c = multinomial(d, a);
        out.push(c * lambda[0].powi(a[0] as i32) * lambda[1].powi(a[1] as i32) * lambda[2].powi(a[2] as i32));
    }
    out
}

fn multinomial(d: usize, a: [usize; 3]) -> f64 {
    let mut v = 1.0f64;
    let mut rem = d;
    for part in a {
        for j in 1..=part {
            v *= rem as f64 / j as f64;
            rem -= 1;
        }
    }
    v
}

impl LagrangeBasis {
    fn build(k: usize) -> Result<Self, ElementError> {
        if k == 0 || k > MAX_DEGREE {
            return Err(ElementError::BasisDegree(k));
        }
        let nodes = multi_indices(k);
        let n = nodes.len();
        // Vandermonde in the Bernstein basis at the lattice nodes.
        let mut v = DMatrix::zeros(n, n);
        for (row, node) in nodes.iter().enumerate() {
            let lam = [
                node[0] as f64 / k as f64,
                node[1] as f64 / k as f64,
                node[2] as f64 / k as f64,
            ];
            for (col, b) in bernstein_values(k, &lam).into_iter().enumerate() {
                v[(row, col)] = b;
            }
        }
        let coeffs = v
            .lu()
            .try_inverse()
            .expect("Bernstein Vandermonde is invertible on the principal lattice");

        // Derivative transfer matrices for every (p, q) with p + q <= 3.
        let mut transfers = HashMap::new();
        let id = DMatrix::identity(n, n);
        transfers.insert((0usize, 0usize), id);
        for total in 1..=3usize.min(k) {
            for p in 0..=total {
                let q = total - p;
                let (pp, qp, wrt_x) = if p > 0 { (p - 1, q, true) } else { (p, q - 1, false) };
                let prev = transfers[&(pp, qp)].clone();
                let d_prev = k - (total - 1);
                let rows_from = multi_indices(d_prev);
                let to = multi_indices(d_prev - 1);
                let from_table = index_table(&rows_from);
                let mut t = DMatrix::zeros(n, to.len());
                for (bi, beta) in to.iter().enumerate() {
                    // d/dx: d*(c_{β+e1} - c_{β+e0}); d/dy: d*(c_{β+e2} - c_{β+e0})
                    let plus = if wrt_x {
                        [beta[0], beta[1] + 1, beta[2]]
                    } else {
                        [beta[0], beta[1], beta[2] + 1]
                    };
                    let minus = [beta[0] + 1, beta[1], beta[2]];
                    let ip = index_of(&from_table, plus);
                    let im = index_of(&from_table, minus);
                    for r in 0..n {
                        t[(r, bi)] = d_prev as f64 * (prev[(r, ip)] - prev[(r, im)]);
                    }
                }
                transfers.insert((p, q), t);
            }
        }
        Ok(LagrangeBasis { degree: k, nodes, coeffs, transfers })
    }

    /// Shared, cached instance for degree `k`.
    pub fn get(k: usize) -> Result<Arc<LagrangeBasis>, ElementError> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<LagrangeBasis>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap();
        if let Some(b) = guard.get(&k) {
            return Ok(b.clone());
        }
        let built = Arc::new(Self::build(k)?);
        guard.insert(k, built.clone());
        Ok(built)
    }

    pub fn ndofs(&self) -> usize {
        self.nodes.len()
    }

    /// Reference-coordinate derivative (p, q) of every basis function at λ.
    fn ref_derivative(&self, lambda: &[f64; 3], p: usize, q: usize) -> Vec<f64> {
        let n = self.ndofs();
        if p + q > self.degree {
            return vec![0.0; n];
        }
        let t = &self.transfers[&(p, q)];
        let bvals = bernstein_values(self.degree - p - q, lambda);
        let mut out = vec![0.0; n];
        for i in 0..n {
            // nodal basis i = Σ_α coeffs[α,i] B_α; derivative via transfer rows.
            let mut acc = 0.0;
            for (bi, bv) in bvals.iter().enumerate() {
                let mut ta = 0.0;
                for a in 0..n {
                    ta += self.coeffs[(a, i)] * t[(a, bi)];
                }
                acc += ta * bv;
            }
            out[i] = acc;
        }
        out
    }

    /// Evaluate values and derivatives up to `order` (0..=3) at a barycentric
    /// point. With `map` given, derivatives are in physical coordinates.
    pub fn eval(&self, lambda: &[f64; 3], order: usize, map: Option<&AffineMap>) -> BasisValues {
        assert!(order <= 3, "derivative order {order} not supported");
        let n = self.ndofs();
        let mut out = BasisValues {
            vals: self.ref_derivative(lambda, 0, 0),
            ..Default::default()
        };
        if order == 0 {
            return out;
        }
        let w = map.map(|m| m.inv_jac).unwrap_or([[1.0, 0.0], [0.0, 1.0]]);
        // grad_phys = Wᵀ grad_ref with W = J⁻¹.
        let gx = self.ref_derivative(lambda, 1, 0);
        let gy = self.ref_derivative(lambda, 0, 1);
        out.grads = (0..n)
            .map(|i| {
                [
                    w[0][0] * gx[i] + w[1][0] * gy[i],
                    w[0][1] * gx[i] + w[1][1] * gy[i],
                ]
            })
            .collect();
        if order == 1 {
            return out;
        }
        let hxx = self.ref_derivative(lambda, 2, 0);
        let hxy = self.ref_derivative(lambda, 1, 1);
        let hyy = self.ref_derivative(lambda, 0, 2);
        out.hess = (0..n)
            .map(|i| {
                let href = [[hxx[i], hxy[i]], [hxy[i], hyy[i]]];
                let mut h = [[0.0; 2]; 2];
                for a in 0..2 {
                    for b in 0..2 {
                        let mut acc = 0.0;
                        for r in 0..2 {
                            for s in 0..2 {
                                acc += w[r][a] * w[s][b] * href[r][s];
                            }
                        }
                        h[a][b] = acc;
                    }
                }
                [h[0][0], h[0][1], h[1][1]]
            })
            .collect();
        if order == 2 {
            return out;
        }
        let t30 = self.ref_derivative(lambda, 3, 0);
        let t21 = self.ref_derivative(lambda, 2, 1);
        let t12 = self.ref_derivative(lambda, 1, 2);
        let t03 = self.ref_derivative(lambda, 0, 3);
        out.third = (0..n)
            .map(|i| {
                // reference third derivative indexed by the number of y-slots
                let tref = |a: usize, b: usize, c: usize| -> f64 {
                    match a + b + c {
                        0 => t30[i],
                        1 => t21[i],
                        2 => t12[i],
                        _ => t03[i],
                    }
                };
                let mut packed = [0.0f64; 4];
                for (slot, idx) in [[0usize, 0, 0], [0, 0, 1], [0, 1, 1], [1, 1, 1]]
                    .iter()
                    .enumerate()
                {
                    let mut acc = 0.0;
                    for r in 0..2 {
                        for s in 0..2 {
                            for t in 0..2 {
                                acc += w[r][idx[0]] * w[s][idx[1]] * w[t][idx[2]] * tref(r, s, t);
                            }
                        }
                    }
                    packed[slot] = acc;
                }
                packed
            })
            .collect();
        out
    }

    /// Barycentric location of lattice node `i`.
    pub fn node_bary(&self, i: usize) -> [f64; 3] {
        let a = self.nodes[i];
        let k = self.degree as f64;
        [a[0] as f64 / k, a[1] as f64 / k, a[2] as f64 / k]
    }
}
