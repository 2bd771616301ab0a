//! Closed-form manufactured solutions on the unit square.
//!
//! `InteriorSmooth` is the verification pair: u0 = ∇⊥(sin³πx sin³πy) plus a
//! λ⁻¹-scaled bubble term, so u0 and ∇u0 vanish on ∂Ω. For this data the
//! stress solution of the gradient model coincides with σ0 = 𝒜⁻¹symgrad(u0)
//! for every ι, which is what makes σ-errors computable without a reference
//! solve. `BoundaryFlux` is the contrasting pair with ∂_n σ̃0 ≠ 0 on ∂Ω.
//!
//! All derivatives come from third-order jets; no numerical differentiation
//! is involved outside of tests.

use super::jet::Jet3;
use super::tensor::{MaterialParams, Sym2};
use super::ElementError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseName {
    InteriorSmooth,
    BoundaryFlux,
}

impl std::str::FromStr for CaseName {
    type Err = ElementError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "interior_smooth" => Ok(CaseName::InteriorSmooth),
            "boundary_flux" => Ok(CaseName::BoundaryFlux),
            other => Err(ElementError::UnknownCase(other.to_string())),
        }
    }
}

impl std::fmt::Display for CaseName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CaseName::InteriorSmooth => write!(f, "interior_smooth"),
            CaseName::BoundaryFlux => write!(f, "boundary_flux"),
        }
    }
}

/// Reading of the paper's "+ (1/λ)·bubble" term in u0.
///
/// `Gradient` (default) adds λ⁻¹∇(x³(1-x)³y³(1-y)³), keeping u0 ∈ H²₀ and
/// div u0 = λ⁻¹Δ(bubble). `Vector` adds λ⁻¹·bubble·(1,1)ᵀ verbatim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BubbleVariant {
    #[default]
    Gradient,
    Vector,
}

/// Displacement value and derivatives through second order.
///
/// The divergence and its gradient are carried separately in closed form:
/// for the curl-dominated cases the ψ contributions cancel exactly in
/// div u, and forming that cancellation numerically before multiplying by
/// λ would contaminate σ0.
#[derive(Debug, Clone, Copy, Default)]
pub struct UJet {
    pub v: [f64; 2],
    /// d[i][j] = ∂_j u_i
    pub d: [[f64; 2]; 2],
    /// dd[i] = (∂xx, ∂xy, ∂yy) of u_i
    pub dd: [[f64; 3]; 2],
    pub div: f64,
    pub grad_div: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct ManufacturedCase {
    pub name: CaseName,
    pub params: MaterialParams,
    pub bubble: BubbleVariant,
}

impl ManufacturedCase {
    pub fn new(name: CaseName, params: MaterialParams) -> Self {
        ManufacturedCase { name, params, bubble: BubbleVariant::default() }
    }

    fn u_jet(&self, p: [f64; 2]) -> UJet {
        match self.name {
            CaseName::InteriorSmooth => self.interior_u_jet(p),
            CaseName::BoundaryFlux => self.boundary_u_jet(p),
        }
    }

    fn interior_u_jet(&self, p: [f64; 2]) -> UJet {
        let x = Jet3::var_x(p[0]);
        let y = Jet3::var_y(p[1]);
        let pi = std::f64::consts::PI;
        let psi = x.scale(pi).sin().powi(3).mul(&y.scale(pi).sin().powi(3));
        let one = Jet3::constant(1.0);
        let b = x
            .powi(3)
            .mul(&one.sub(&x).powi(3))
            .mul(&y.powi(3))
            .mul(&one.sub(&y).powi(3));
        let li = 1.0 / self.params.lambda;
        match self.bubble {
            BubbleVariant::Gradient => {
                // u = (ψ_y + λ⁻¹ b_x, -ψ_x + λ⁻¹ b_y); div u = λ⁻¹ Δb
                UJet {
                    v: [psi.dy + li * b.dx, -psi.dx + li * b.dy],
                    d: [
                        [psi.dxy + li * b.dxx, psi.dyy + li * b.dxy],
                        [-psi.dxx + li * b.dxy, -psi.dxy + li * b.dyy],
                    ],
                    dd: [
                        [psi.dxxy + li * b.dxxx, psi.dxyy + li * b.dxxy, psi.dyyy + li * b.dxyy],
                        [-psi.dxxx + li * b.dxxy, -psi.dxxy + li * b.dxyy, -psi.dxyy + li * b.dyyy],
                    ],
                    div: li * b.laplacian(),
                    grad_div: [li * (b.dxxx + b.dxyy), li * (b.dxxy + b.dyyy)],
                }
            }
            BubbleVariant::Vector => UJet {
                v: [psi.dy + li * b.v, -psi.dx + li * b.v],
                d: [
                    [psi.dxy + li * b.dx, psi.dyy + li * b.dy],
                    [-psi.dxx + li * b.dx, -psi.dxy + li * b.dy],
                ],
                dd: [
                    [psi.dxxy + li * b.dxx, psi.dxyy + li * b.dxy, psi.dyyy + li * b.dyy],
                    [-psi.dxxx + li * b.dxx, -psi.dxxy + li * b.dxy, -psi.dxyy + li * b.dyy],
                ],
                div: li * (b.dx + b.dy),
                grad_div: [li * (b.dxx + b.dxy), li * (b.dxy + b.dyy)],
            },
        }
    }

    fn boundary_u_jet(&self, p: [f64; 2]) -> UJet {
        let x = Jet3::var_x(p[0]);
        let y = Jet3::var_y(p[1]);
        let sin1 = Jet3::constant(1.0f64.sin());
        let e1 = Jet3::constant(std::f64::consts::E);
        let sxsy = x.sin().mul(&y.sin());
        let u1 = sxsy.mul(&x.sin().sub(&sin1)).mul(&y.sin().sub(&sin1));
        let u2 = sxsy.mul(&x.exp().sub(&e1)).mul(&y.exp().sub(&e1));
        UJet {
            v: [u1.v, u2.v],
            d: [[u1.dx, u1.dy], [u2.dx, u2.dy]],
            dd: [[u1.dxx, u1.dxy, u1.dyy], [u2.dxx, u2.dxy, u2.dyy]],
            div: u1.dx + u2.dy,
            grad_div: [u1.dxx + u2.dxy, u1.dxy + u2.dyy],
        }
    }

    pub fn u0(&self, p: [f64; 2]) -> [f64; 2] {
        self.u_jet(p).v
    }

    /// grad[i][j] = ∂_j (u0)_i.
    pub fn grad_u0(&self, p: [f64; 2]) -> [[f64; 2]; 2] {
        self.u_jet(p).d
    }

    pub fn sigma0(&self, p: [f64; 2]) -> Sym2 {
        let u = self.u_jet(p);
        let mu2 = 2.0 * self.params.mu;
        let t = self.params.lambda * u.div;
        Sym2 {
            m11: mu2 * u.d[0][0] + t,
            m12: self.params.mu * (u.d[0][1] + u.d[1][0]),
            m22: mu2 * u.d[1][1] + t,
        }
    }

    /// (∂x σ0, ∂y σ0).
    pub fn grad_sigma0(&self, p: [f64; 2]) -> [Sym2; 2] {
        let u = self.u_jet(p);
        let (la, mu) = (self.params.lambda, self.params.mu);
        let mut out = [Sym2::ZERO; 2];
        for (a, slot) in out.iter_mut().enumerate() {
            // ∂_a ε_ij = ½(∂_a ∂_j u_i + ∂_a ∂_i u_j); dd packs (xx, xy, yy).
            let d2 = |i: usize, b: usize, c: usize| -> f64 {
                let (lo, hi) = if b <= c { (b, c) } else { (c, b) };
                match (lo, hi) {
                    (0, 0) => u.dd[i][0],
                    (0, 1) => u.dd[i][1],
                    _ => u.dd[i][2],
                }
            };
            let e11 = d2(0, 0, a);
            let e12 = 0.5 * (d2(0, 1, a) + d2(1, 0, a));
            let e22 = d2(1, 1, a);
            let t = la * u.grad_div[a];
            *slot = Sym2 {
                m11: 2.0 * mu * e11 + t,
                m12: 2.0 * mu * e12,
                m22: 2.0 * mu * e22 + t,
            };
        }
        out
    }

    /// f = div σ0 in closed form.
    pub fn f(&self, p: [f64; 2]) -> [f64; 2] {
        let g = self.grad_sigma0(p);
        [g[0].m11 + g[1].m12, g[0].m12 + g[1].m22]
    }

    /// Normal derivative ∂_n σ0 at a point with unit normal n.
    pub fn dn_sigma0(&self, p: [f64; 2], n: [f64; 2]) -> Sym2 {
        let g = self.grad_sigma0(p);
        g[0].scale(n[0]).add(&g[1].scale(n[1]))
    }
}
