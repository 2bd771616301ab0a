//! Quadrature on the unit reference triangle (0,0)-(1,0)-(0,1).
//!
//! Rules are conical (Duffy) products of Gauss-Legendre lines: the square
//! [0,1]² is collapsed onto the triangle by (u, v) ↦ (u, v(1-u)) with Jacobian
//! (1-u). A polynomial of total degree d pulls back to degree ≤ d+1 in u and
//! ≤ d in v, so a (⌈(d+2)/2⌉ × ⌈(d+1)/2⌉)-point product integrates it exactly.
//! All weights are positive and sum to the reference area 1/2.

use super::ElementError;

/// A fixed-degree quadrature rule with barycentric points.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub degree: usize,
    /// Barycentric triples (λ0, λ1, λ2) with λ0 = 1 - x - y.
    pub points: Vec<[f64; 3]>,
    /// Weights on the reference triangle; they sum to 1/2.
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Rule exact for all polynomials of total degree ≤ `degree`.
    pub fn with_degree(degree: usize) -> Result<Self, ElementError> {
        if degree == 0 || degree > 20 {
            return Err(ElementError::QuadratureDegree(degree));
        }
        // u-degree of the pullback is degree+1, v-degree is degree
        let nu = (degree + 3) / 2;
        let nv = (degree + 2) / 2;
        let gu = gauss_legendre_01(nu);
        let gv = gauss_legendre_01(nv);
        let mut points = Vec::with_capacity(nu * nv);
        let mut weights = Vec::with_capacity(nu * nv);
        for &(u, wu) in &gu {
            for &(v, wv) in &gv {
                let x = u;
                let y = v * (1.0 - u);
                points.push([1.0 - x - y, x, y]);
                weights.push(wu * wv * (1.0 - u));
            }
        }
        Ok(QuadratureRule { degree, points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Integrate a function given in barycentric coordinates.
    pub fn integrate(&self, mut f: impl FnMut(&[f64; 3]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * f(p))
            .sum()
    }
}

/// Gauss-Legendre nodes/weights on [0,1] by Newton iteration on P_n.
fn gauss_legendre_01(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Initial guess on [-1,1], then polish.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_pair(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_pair(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((1.0 - x) * 0.5, 0.5 * w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// (P_n(x), P_n'(x)) via the three-term recurrence.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Exact ∫ λ0^a λ1^b λ2^c over the reference triangle: a!b!c!/(a+b+c+2)!.
///
/// Test oracle for the monomial exactness sweeps.
pub fn barycentric_monomial_integral(a: u32, b: u32, c: u32) -> f64 {
    let mut val = 1.0f64;
    // a!b!c!/(a+b+c+2)! computed as a product of ratios to stay in range.
    let mut denom_range = 1..=(a + b + c + 2);
    let mut num: Vec<u32> = (1..=a).chain(1..=b).chain(1..=c).collect();
    num.sort_unstable();
    let mut num_iter = num.into_iter();
    let mut nv = num_iter.next();
    for d in &mut denom_range {
        val /= d as f64;
        if let Some(n) = nv {
            val *= n as f64;
            nv = num_iter.next();
        }
    }
    while let Some(n) = nv {
        val *= n as f64;
        nv = num_iter.next();
    }
    val
}
