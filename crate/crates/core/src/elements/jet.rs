//! Truncated bivariate Taylor jets up to third order.
//!
//! A `Jet3` carries a value together with all partial derivatives through
//! order three at a point. Arithmetic propagates derivatives exactly, which
//! is what the manufactured solutions need: σ0 takes two derivatives of the
//! displacement potentials and f = div σ0 takes three.

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet3 {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
    pub dxxx: f64,
    pub dxxy: f64,
    pub dxyy: f64,
    pub dyyy: f64,
}

impl Jet3 {
    pub fn constant(c: f64) -> Self {
        Jet3 { v: c, ..Default::default() }
    }

    /// The coordinate x as a jet at (x0, ·).
    pub fn var_x(x0: f64) -> Self {
        Jet3 { v: x0, dx: 1.0, ..Default::default() }
    }

    /// The coordinate y as a jet at (·, y0).
    pub fn var_y(y0: f64) -> Self {
        Jet3 { v: y0, dy: 1.0, ..Default::default() }
    }

    pub fn add(&self, o: &Jet3) -> Jet3 {
        Jet3 {
            v: self.v + o.v,
            dx: self.dx + o.dx,
            dy: self.dy + o.dy,
            dxx: self.dxx + o.dxx,
            dxy: self.dxy + o.dxy,
            dyy: self.dyy + o.dyy,
            dxxx: self.dxxx + o.dxxx,
            dxxy: self.dxxy + o.dxxy,
            dxyy: self.dxyy + o.dxyy,
            dyyy: self.dyyy + o.dyyy,
        }
    }

    pub fn sub(&self, o: &Jet3) -> Jet3 {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, a: f64) -> Jet3 {
        Jet3 {
            v: a * self.v,
            dx: a * self.dx,
            dy: a * self.dy,
            dxx: a * self.dxx,
            dxy: a * self.dxy,
            dyy: a * self.dyy,
            dxxx: a * self.dxxx,
            dxxy: a * self.dxxy,
            dxyy: a * self.dxyy,
            dyyy: a * self.dyyy,
        }
    }

    /// Leibniz rule through order three.
    pub fn mul(&self, o: &Jet3) -> Jet3 {
        let (u, w) = (self, o);
        Jet3 {
            v: u.v * w.v,
            dx: u.dx * w.v + u.v * w.dx,
            dy: u.dy * w.v + u.v * w.dy,
            dxx: u.dxx * w.v + 2.0 * u.dx * w.dx + u.v * w.dxx,
            dxy: u.dxy * w.v + u.dx * w.dy + u.dy * w.dx + u.v * w.dxy,
            dyy: u.dyy * w.v + 2.0 * u.dy * w.dy + u.v * w.dyy,
            dxxx: u.dxxx * w.v + 3.0 * u.dxx * w.dx + 3.0 * u.dx * w.dxx + u.v * w.dxxx,
            dxxy: u.dxxy * w.v + u.dxx * w.dy + 2.0 * u.dxy * w.dx + 2.0 * u.dx * w.dxy
                + u.dy * w.dxx
                + u.v * w.dxxy,
            dxyy: u.dxyy * w.v + u.dyy * w.dx + 2.0 * u.dxy * w.dy + 2.0 * u.dy * w.dxy
                + u.dx * w.dyy
                + u.v * w.dxyy,
            dyyy: u.dyyy * w.v + 3.0 * u.dyy * w.dy + 3.0 * u.dy * w.dyy + u.v * w.dyyy,
        }
    }

    /// Compose a scalar function (given by its derivatives at self.v) with
    /// this jet: multivariate Faà di Bruno through order three.
    pub fn compose(&self, f0: f64, f1: f64, f2: f64, f3: f64) -> Jet3 {
        let g = self;
        let d1 = |a: f64| f1 * a;
        let d2 = |a: f64, b: f64, gab: f64| f2 * a * b + f1 * gab;
        let d3 = |a: f64, b: f64, c: f64, gab: f64, gac: f64, gbc: f64, gabc: f64| {
            f3 * a * b * c + f2 * (gab * c + gac * b + gbc * a) + f1 * gabc
        };
        Jet3 {
            v: f0,
            dx: d1(g.dx),
            dy: d1(g.dy),
            dxx: d2(g.dx, g.dx, g.dxx),
            dxy: d2(g.dx, g.dy, g.dxy),
            dyy: d2(g.dy, g.dy, g.dyy),
            dxxx: d3(g.dx, g.dx, g.dx, g.dxx, g.dxx, g.dxx, g.dxxx),
            dxxy: d3(g.dx, g.dx, g.dy, g.dxx, g.dxy, g.dxy, g.dxxy),
            dxyy: d3(g.dx, g.dy, g.dy, g.dxy, g.dxy, g.dyy, g.dxyy),
            dyyy: d3(g.dy, g.dy, g.dy, g.dyy, g.dyy, g.dyy, g.dyyy),
        }
    }

    pub fn sin(&self) -> Jet3 {
        let (s, c) = self.v.sin_cos();
        self.compose(s, c, -s, -c)
    }

    pub fn cos(&self) -> Jet3 {
        let (s, c) = self.v.sin_cos();
        self.compose(c, -s, -c, s)
    }

    pub fn exp(&self) -> Jet3 {
        let e = self.v.exp();
        self.compose(e, e, e, e)
    }

    pub fn powi(&self, n: i32) -> Jet3 {
        let v = self.v;
        let nf = n as f64;
        let f0 = v.powi(n);
        let f1 = nf * v.powi(n - 1);
        let f2 = nf * (nf - 1.0) * v.powi(n - 2);
        let f3 = nf * (nf - 1.0) * (nf - 2.0) * v.powi(n - 3);
        self.compose(f0, f1, f2, f3)
    }

    pub fn laplacian(&self) -> f64 {
        self.dxx + self.dyy
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn psi(x: &Jet3, y: &Jet3) -> Jet3 {
        // sin(2x) * exp(y) + (x*y)^3
        let a = x.scale(2.0).sin().mul(&y.exp());
        let b = x.mul(y).powi(3);
        a.add(&b)
    }

    #[test]
    fn jet_matches_finite_differences() {
        let (x0, y0) = (0.37, -0.61);
        let f = |x: f64, y: f64| psi(&Jet3::var_x(x), &Jet3::var_y(y)).v;
        let j = psi(&Jet3::var_x(x0), &Jet3::var_y(y0));
        let h = 1e-5;
        let fdx = (f(x0 + h, y0) - f(x0 - h, y0)) / (2.0 * h);
        let fdy = (f(x0, y0 + h) - f(x0, y0 - h)) / (2.0 * h);
        assert!((fdx - j.dx).abs() < 1e-9);
        assert!((fdy - j.dy).abs() < 1e-9);
        let fdxx = (f(x0 + h, y0) - 2.0 * f(x0, y0) + f(x0 - h, y0)) / (h * h);
        assert!((fdxx - j.dxx).abs() < 1e-5);
        let fdxy = (f(x0 + h, y0 + h) - f(x0 + h, y0 - h) - f(x0 - h, y0 + h)
            + f(x0 - h, y0 - h))
            / (4.0 * h * h);
        assert!((fdxy - j.dxy).abs() < 1e-5);
        // third derivative xxy via FD of dxx in y
        let jx = |y: f64| psi(&Jet3::var_x(x0), &Jet3::var_y(y)).dxx;
        let fdxxy = (jx(y0 + h) - jx(y0 - h)) / (2.0 * h);
        assert!((fdxxy - j.dxxy).abs() < 1e-7);
        let jy = |y: f64| psi(&Jet3::var_x(x0), &Jet3::var_y(y)).dyy;
        let fdyyy = (jy(y0 + h) - jy(y0 - h)) / (2.0 * h);
        assert!((fdyyy - j.dyyy).abs() < 1e-7);
    }

    #[test]
    fn polynomial_jet_is_exact() {
        // p(x,y) = x^3 y - 2 x y^2 has simple exact derivatives.
        let (x0, y0) = (1.5, -0.5);
        let x = Jet3::var_x(x0);
        let y = Jet3::var_y(y0);
        let p = x.powi(3).mul(&y).sub(&x.mul(&y.powi(2)).scale(2.0));
        assert!((p.v - (x0.powi(3) * y0 - 2.0 * x0 * y0 * y0)).abs() < 1e-14);
        assert!((p.dx - (3.0 * x0 * x0 * y0 - 2.0 * y0 * y0)).abs() < 1e-13);
        assert!((p.dxxy - 6.0 * x0).abs() < 1e-13);
        assert!((p.dxyy - (-4.0)).abs() < 1e-13);
        assert!((p.dyyy).abs() < 1e-14);
    }
}
