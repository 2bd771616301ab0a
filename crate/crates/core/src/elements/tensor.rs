//! Material parameters and the isotropic compliance/stiffness pair, plus the
//! planar Airy operator.

use super::ElementError;
use serde::{Deserialize, Serialize};

/// A symmetric 2×2 matrix stored as (m11, m12, m22).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2 {
    pub m11: f64,
    pub m12: f64,
    pub m22: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 { m11: 0.0, m12: 0.0, m22: 0.0 };

    pub fn identity() -> Self {
        Sym2 { m11: 1.0, m12: 0.0, m22: 1.0 }
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    /// Frobenius inner product (counting the off-diagonal twice).
    pub fn ddot(&self, o: &Sym2) -> f64 {
        self.m11 * o.m11 + 2.0 * self.m12 * o.m12 + self.m22 * o.m22
    }

    /// Traceless part σ - ½ tr(σ) I.
    pub fn deviatoric(&self) -> Sym2 {
        let t = 0.5 * self.trace();
        Sym2 { m11: self.m11 - t, m12: self.m12, m22: self.m22 - t }
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m11 * v[0] + self.m12 * v[1],
            self.m12 * v[0] + self.m22 * v[1],
        ]
    }

    pub fn scale(&self, a: f64) -> Sym2 {
        Sym2 { m11: a * self.m11, m12: a * self.m12, m22: a * self.m22 }
    }

    pub fn add(&self, o: &Sym2) -> Sym2 {
        Sym2 { m11: self.m11 + o.m11, m12: self.m12 + o.m12, m22: self.m22 + o.m22 }
    }

    pub fn sub(&self, o: &Sym2) -> Sym2 {
        Sym2 { m11: self.m11 - o.m11, m12: self.m12 - o.m12, m22: self.m22 - o.m22 }
    }
}

/// Lamé constants and the gradient length ι.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MaterialParams {
    pub lambda: f64,
    pub mu: f64,
    pub iota: f64,
}

impl MaterialParams {
    pub fn new(lambda: f64, mu: f64, iota: f64) -> Result<Self, ElementError> {
        if mu <= 0.0 {
            return Err(ElementError::NonPositiveMu(mu));
        }
        if lambda < 0.0 {
            return Err(ElementError::NegativeLambda(lambda));
        }
        if iota < 0.0 {
            return Err(ElementError::NegativeIota(iota));
        }
        Ok(MaterialParams { lambda, mu, iota })
    }

    /// The model is stated for ι ≤ 1; larger values are admitted but flagged.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.iota > 1.0 {
            w.push(format!("gradient length iota = {} exceeds the model range (0, 1]", self.iota));
        }
        w
    }
}

/// Compliance: 𝒜σ = σ/(2μ) - λ tr(σ) I / (2μ(2μ+2λ)).
///
/// Evaluated in deviatoric/trace form, 𝒜σ = σ^D/(2μ) + tr(σ)/(4(λ+μ)) I,
/// which stays accurate for λ ≫ μ.
pub fn compliance_apply(params: &MaterialParams, sigma: &Sym2) -> Sym2 {
    let dev = sigma.deviatoric();
    let d = 1.0 / (2.0 * params.mu);
    let t = sigma.trace() / (4.0 * (params.lambda + params.mu));
    Sym2 { m11: d * dev.m11 + t, m12: d * dev.m12, m22: d * dev.m22 + t }
}

/// Stiffness: 𝒜⁻¹ε = 2με + λ tr(ε) I = 2μ ε^D + (μ+λ) tr(ε) I.
pub fn stiffness_apply(params: &MaterialParams, eps: &Sym2) -> Sym2 {
    let dev = eps.deviatoric();
    let a = 2.0 * params.mu;
    let t = (params.mu + params.lambda) * eps.trace();
    Sym2 { m11: a * dev.m11 + t, m12: a * dev.m12, m22: a * dev.m22 + t }
}

/// Planar Airy tensor of a scalar potential from its Hessian (ψxx, ψxy, ψyy):
/// curl curlᵀ ψ = [[ψyy, -ψxy], [-ψxy, ψxx]].
pub fn airy(hessian: [f64; 3]) -> Sym2 {
    Sym2 { m11: hessian[2], m12: -hessian[1], m22: hessian[0] }
}

/// 3×3 Voigt representation of 𝒜 acting on (σ11, σ12, σ22) with the
/// inner product (𝒜σ, τ) = Σ m[c][c'] σ_c τ_c'.
pub fn compliance_voigt(params: &MaterialParams) -> [[f64; 3]; 3] {
    let mu2 = 2.0 * params.mu;
    let c = params.lambda / (mu2 * (mu2 + 2.0 * params.lambda));
    let d = 1.0 / mu2;
    // (𝒜 S_c) : S_c' for S_11, S_12 (both off-diagonals set), S_22.
    [
        [d - c, 0.0, -c],
        [0.0, 2.0 * d, 0.0],
        [-c, 0.0, d - c],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn rand_sym(rng: &mut impl Rng) -> Sym2 {
        Sym2 {
            m11: rng.random_range(-2.0..2.0),
            m12: rng.random_range(-2.0..2.0),
            m22: rng.random_range(-2.0..2.0),
        }
    }

    #[test]
    fn compliance_lambda_zero_is_scaled_identity() {
        let p = MaterialParams::new(0.0, 0.7, 0.0).unwrap();
        let s = Sym2 { m11: 1.5, m12: -0.3, m22: 0.2 };
        let a = compliance_apply(&p, &s);
        let f = 1.0 / (2.0 * 0.7);
        assert!((a.m11 - f * s.m11).abs() < 1e-15);
        assert!((a.m12 - f * s.m12).abs() < 1e-15);
        assert!((a.m22 - f * s.m22).abs() < 1e-15);
    }

    #[test]
    fn compliance_of_identity() {
        let p = MaterialParams::new(1.3, 0.4, 0.0).unwrap();
        let a = compliance_apply(&p, &Sym2::identity());
        let expect = 1.0 / (2.0 * (1.3 + 0.4));
        assert!((a.m11 - expect).abs() < 1e-15);
        assert!((a.m22 - expect).abs() < 1e-15);
        assert!(a.m12.abs() < 1e-16);
    }

    #[test]
    fn compliance_energy_identity() {
        // (𝒜σ, σ) = |σ^D|²/(2μ) + tr(σ)²/(4λ+4μ)
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let lambda = rng.random_range(0.0..1e4);
            let mu = rng.random_range(0.05..10.0);
            let p = MaterialParams::new(lambda, mu, 0.0).unwrap();
            let s = rand_sym(&mut rng);
            let lhs = compliance_apply(&p, &s).ddot(&s);
            let dev = s.deviatoric();
            let rhs = dev.ddot(&dev) / (2.0 * mu) + s.trace().powi(2) / (4.0 * lambda + 4.0 * mu);
            assert!(
                (lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0),
                "lhs {lhs} rhs {rhs} (λ={lambda}, μ={mu})"
            );
        }
    }

    #[test]
    fn stiffness_inverts_compliance() {
        // The entrywise representation of 𝒜σ carries the trace at relative
        // size ~μ/λ, so the f64 round trip is accurate to ~ε·λ/μ. The strict
        // 1e-13 bound is checked where it is attainable (λ/μ ≤ 300) and the
        // conditioned bound at the extreme λ used by the experiments.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let mu = rng.random_range(0.1..10.0);
            let p = MaterialParams::new(mu * rng.random_range(0.0..300.0), mu, 0.0).unwrap();
            let s = rand_sym(&mut rng);
            let back = stiffness_apply(&p, &compliance_apply(&p, &s));
            let scale = s.m11.abs().max(s.m12.abs()).max(s.m22.abs()).max(1.0);
            assert!((back.m11 - s.m11).abs() <= 1e-13 * scale);
            assert!((back.m12 - s.m12).abs() <= 1e-13 * scale);
            assert!((back.m22 - s.m22).abs() <= 1e-13 * scale);
        }
        let p = MaterialParams::new(1e5, 0.3, 0.0).unwrap();
        for _ in 0..100 {
            let s = rand_sym(&mut rng);
            let back = stiffness_apply(&p, &compliance_apply(&p, &s));
            let scale = s.m11.abs().max(s.m12.abs()).max(s.m22.abs()).max(1.0);
            let cond = 8.0 * f64::EPSILON * (p.lambda + p.mu) / p.mu;
            assert!((back.m11 - s.m11).abs() <= cond * scale);
            assert!((back.m22 - s.m22).abs() <= cond * scale);
            assert!((back.m12 - s.m12).abs() <= 1e-13 * scale);
        }
    }

    #[test]
    fn stiffness_closed_forms() {
        let p = MaterialParams::new(1.0, 0.3, 0.0).unwrap();
        let out = stiffness_apply(&p, &Sym2::identity());
        assert!((out.m11 - 2.6).abs() < 1e-15 && (out.m22 - 2.6).abs() < 1e-15);
        let p0 = MaterialParams::new(0.0, 0.9, 0.0).unwrap();
        let e = Sym2 { m11: 0.2, m12: 0.5, m22: -1.0 };
        let out0 = stiffness_apply(&p0, &e);
        assert!((out0.m11 - 1.8 * 0.2).abs() < 1e-15);
        assert!((out0.m12 - 1.8 * 0.5).abs() < 1e-15);
    }

    #[test]
    fn airy_closed_forms() {
        // ψ = x²/2 → hessian (1,0,0) → [[0,0],[0,1]]
        let a = airy([1.0, 0.0, 0.0]);
        assert_eq!(a, Sym2 { m11: 0.0, m12: 0.0, m22: 1.0 });
        // ψ = xy → hessian (0,1,0) → [[0,-1],[-1,0]]
        let b = airy([0.0, 1.0, 0.0]);
        assert_eq!(b, Sym2 { m11: 0.0, m12: -1.0, m22: 0.0 });
    }

    #[test]
    fn compliance_voigt_is_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let p = MaterialParams::new(rng.random_range(0.0..1e6), rng.random_range(0.01..100.0), 0.0).unwrap();
            let m = compliance_voigt(&p);
            let a = nalgebra::Matrix3::from_fn(|i, j| m[i][j]);
            let eig = a.symmetric_eigenvalues();
            assert!(eig.min() > 0.0, "λ={} μ={} eig={eig:?}", p.lambda, p.mu);
        }
    }

    #[test]
    fn voigt_matches_direct_application() {
        let p = MaterialParams::new(2.5, 0.6, 0.0).unwrap();
        let m = compliance_voigt(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let s = rand_sym(&mut rng);
            let t = rand_sym(&mut rng);
            let direct = compliance_apply(&p, &s).ddot(&t);
            let sc = [s.m11, s.m12, s.m22];
            let tc = [t.m11, t.m12, t.m22];
            let mut via = 0.0;
            for c in 0..3 {
                for cp in 0..3 {
                    via += m[c][cp] * sc[c] * tc[cp];
                }
            }
            assert!((direct - via).abs() < 1e-13 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn params_validation() {
        assert!(MaterialParams::new(1.0, 0.0, 0.0).is_err());
        assert!(MaterialParams::new(-0.1, 1.0, 0.0).is_err());
        assert!(MaterialParams::new(1.0, 1.0, -0.5).is_err());
        let p = MaterialParams::new(1.0, 1.0, 2.0).unwrap();
        assert_eq!(p.warnings().len(), 1);
    }
}
