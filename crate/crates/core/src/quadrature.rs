//! Polar product quadrature on the plane and on Euclidean discs.
//!
//! Plane rules integrate against planar Lebesgue measure `dA` over the disc
//! `|z| < r_cut`; the truncation radius is chosen so that integrands with the
//! Gaussian decay `|z|^order e^{-scale |z|^2}` lose less than `1e-16` of their
//! mass. Radial integration is composite Gauss-Legendre, angular integration
//! is the trapezoidal rule, which is exact for trigonometric polynomials of
//! degree below the angular count.

use crate::error::{Error, Result};
use crate::linalg::gauss_legendre;
use crate::scalar::{c, pairwise_fold, pairwise_fold_c, Cplx, Real};

const MAX_PLANE_ORDER: usize = 600;
const PANEL_POINTS: usize = 16;

/// Quadrature rule for `∫_C g dA`, truncated to a disc of radius `r_cut`.
#[derive(Debug, Clone)]
pub struct PlaneRule<T: Real> {
    nodes: Vec<Cplx<T>>,
    weights: Vec<T>,
    order: usize,
    scale: T,
    r_cut: T,
    radii: Vec<T>,
    radial_weights: Vec<T>,
    angular: usize,
}

impl<T: Real> PlaneRule<T> {
    /// Builds a rule exact (to rounding and a `1e-16` truncated tail) for
    /// `∫ z^a conj(z)^b e^{-scale |z|^2} dA` whenever `a + b <= order`.
    pub fn gaussian(order: usize, scale: T) -> Result<Self> {
        Self::with_breaks(order, scale, &[])
    }

    /// As [`PlaneRule::gaussian`], additionally placing radial panel
    /// boundaries at `breaks` so that integrands with kinks on those circles
    /// keep full accuracy.
    pub fn with_breaks(order: usize, scale: T, breaks: &[T]) -> Result<Self> {
        Self::with_cut(order, scale, breaks, T::zero())
    }

    /// As [`PlaneRule::with_breaks`] with the truncation radius raised to at
    /// least `min_cut`.
    pub fn with_cut(order: usize, scale: T, breaks: &[T], min_cut: T) -> Result<Self> {
        if order < 1 {
            return Err(Error::arg("order", "must be at least 1"));
        }
        if order > MAX_PLANE_ORDER {
            return Err(Error::Capability(format!(
                "plane rule order {order} exceeds the stable limit {MAX_PLANE_ORDER}"
            )));
        }
        if !(scale > T::zero()) || !scale.is_finite() {
            return Err(Error::arg("scale", "must be positive and finite"));
        }
        if !(min_cut >= T::zero()) || !min_cut.is_finite() {
            return Err(Error::arg("r_cut", "must be finite and nonnegative"));
        }
        let r_cut = truncation_radius(order, scale).max(min_cut);
        let width = T::one() / scale.sqrt();
        let mut cuts = vec![T::zero()];
        let mut b: Vec<T> = breaks
            .iter()
            .copied()
            .filter(|&x| x > T::zero() && x < r_cut)
            .collect();
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut next_break = b.into_iter().peekable();
        let mut pos = T::zero();
        while pos < r_cut {
            let mut end = (pos + width).min(r_cut);
            if let Some(&br) = next_break.peek() {
                if br <= end {
                    end = br;
                    next_break.next();
                }
            }
            if end - pos > T::epsilon() * r_cut {
                cuts.push(end);
            }
            pos = end;
        }
        let (gx, gw) = gauss_legendre::<T>(PANEL_POINTS);
        let mut radii = Vec::new();
        let mut radial_weights = Vec::new();
        let half = T::lit(0.5);
        for pair in cuts.windows(2) {
            let (a, bnd) = (pair[0], pair[1]);
            let h = (bnd - a) * half;
            let mid = (bnd + a) * half;
            for (x, w) in gx.iter().zip(&gw) {
                let rho = mid + h * *x;
                radii.push(rho);
                // includes the polar Jacobian rho
                radial_weights.push(*w * h * rho);
            }
        }
        let angular = order + 2;
        let dtheta = T::lit(2.0) * T::PI() / T::from_count(angular);
        let mut nodes = Vec::with_capacity(radii.len() * angular);
        let mut weights = Vec::with_capacity(radii.len() * angular);
        for (rho, rw) in radii.iter().zip(&radial_weights) {
            for k in 0..angular {
                let th = dtheta * T::from_count(k);
                nodes.push(c(*rho * th.cos(), *rho * th.sin()));
                weights.push(*rw * dtheta);
            }
        }
        Ok(Self {
            nodes,
            weights,
            order,
            scale,
            r_cut,
            radii,
            radial_weights,
            angular,
        })
    }

    pub fn nodes(&self) -> &[Cplx<T>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Declared polynomial exactness degree.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn r_cut(&self) -> T {
        self.r_cut
    }

    pub fn angular_count(&self) -> usize {
        self.angular
    }

    pub fn radial_nodes(&self) -> (&[T], &[T]) {
        (&self.radii, &self.radial_weights)
    }

    /// Σ w_i g(z_i) with pairwise summation.
    pub fn integrate<F: Fn(Cplx<T>) -> T>(&self, g: F) -> T {
        pairwise_fold(self.nodes.len(), &|i| self.weights[i] * g(self.nodes[i]))
    }

    pub fn integrate_c<F: Fn(Cplx<T>) -> Cplx<T>>(&self, g: F) -> Cplx<T> {
        pairwise_fold_c(self.nodes.len(), &|i| g(self.nodes[i]) * self.weights[i])
    }
}

/// Radius beyond which `ρ^{order+1} e^{-scale ρ^2}` has dropped by `e^{-40}`
/// from its peak, and at least the radius where `e^{-scale R^2/2} < 1e-17`.
fn truncation_radius<T: Real>(order: usize, scale: T) -> T {
    let k = T::from_count(order + 1);
    let log_g = |rho: T| k * rho.ln() - scale * rho * rho;
    let peak = (k / (T::lit(2.0) * scale)).sqrt();
    let top = log_g(peak);
    let mut r = peak;
    let step = T::lit(0.05) / scale.sqrt();
    while top - log_g(r) < T::lit(40.0) {
        r += step;
    }
    let floor = (T::lit(2.0) * T::lit(1e17).ln() / scale).sqrt();
    r.max(floor)
}

/// Quadrature rule on the disc `B(center, radius)` for `∫_B g dA`.
#[derive(Debug, Clone)]
pub struct BallRule<T: Real> {
    center: Cplx<T>,
    radius: T,
    offsets: Vec<Cplx<T>>,
    nodes: Vec<Cplx<T>>,
    weights: Vec<T>,
    order: usize,
}

impl<T: Real> BallRule<T> {
    /// Polar product rule with `order` Gauss-Legendre radial nodes and
    /// `2 (2 order - 2) + 1` trapezoidal angles; exact for polynomials in
    /// `(Re w, Im w)` of total degree `<= 2 order - 2`.
    pub fn new(center: Cplx<T>, radius: T, order: usize) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::arg("r", "ball radius must be positive"));
        }
        if order < 1 {
            return Err(Error::arg("order", "must be at least 1"));
        }
        let (gx, gw) = gauss_legendre::<T>(order);
        let degree = 2 * order - 2;
        let angular = 2 * degree.max(1) + 1;
        let half = T::lit(0.5);
        let dtheta = T::lit(2.0) * T::PI() / T::from_count(angular);
        let mut offsets = Vec::with_capacity(order * angular);
        let mut weights = Vec::with_capacity(order * angular);
        for (x, w) in gx.iter().zip(&gw) {
            let rho = radius * half * (*x + T::one());
            let rw = *w * radius * half * rho;
            for k in 0..angular {
                let th = dtheta * T::from_count(k);
                offsets.push(c(rho * th.cos(), rho * th.sin()));
                weights.push(rw * dtheta);
            }
        }
        let nodes = offsets.iter().map(|o| *o + center).collect();
        Ok(Self {
            center,
            radius,
            offsets,
            nodes,
            weights,
            order,
        })
    }

    /// The same rule translated to a new center.
    pub fn recentered(&self, center: Cplx<T>) -> Self {
        Self {
            center,
            radius: self.radius,
            nodes: self.offsets.iter().map(|o| *o + center).collect(),
            offsets: self.offsets.clone(),
            weights: self.weights.clone(),
            order: self.order,
        }
    }

    pub fn center(&self) -> Cplx<T> {
        self.center
    }

    pub fn radius(&self) -> T {
        self.radius
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[Cplx<T>] {
        &self.nodes
    }

    /// Node positions relative to the center.
    pub fn offsets(&self) -> &[Cplx<T>] {
        &self.offsets
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// |B(center, radius)| = π r².
    pub fn area(&self) -> T {
        T::PI() * self.radius * self.radius
    }

    pub fn integrate<F: Fn(Cplx<T>) -> T>(&self, g: F) -> T {
        pairwise_fold(self.nodes.len(), &|i| self.weights[i] * g(self.nodes[i]))
    }

    pub fn integrate_c<F: Fn(Cplx<T>) -> Cplx<T>>(&self, g: F) -> Cplx<T> {
        pairwise_fold_c(self.nodes.len(), &|i| g(self.nodes[i]) * self.weights[i])
    }

    /// Normalized average `|B|^{-1} ∫_B g dA`.
    pub fn average<F: Fn(Cplx<T>) -> T>(&self, g: F) -> T {
        self.integrate(g) / self.area()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cl;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn raised_cut_keeps_exactness() {
        let base = PlaneRule::<f64>::gaussian(6, 1.0).unwrap();
        let wide = PlaneRule::<f64>::with_cut(6, 1.0, &[], base.r_cut() + 3.0).unwrap();
        assert!((wide.r_cut() - base.r_cut() - 3.0).abs() < 1e-12);
        let m = |r: &PlaneRule<f64>| r.integrate(|z| z.norm_sqr().powi(3) * (-z.norm_sqr()).exp());
        assert!((m(&wide) - 6.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((m(&base) - m(&wide)).abs() < 1e-12);
        assert!(PlaneRule::<f64>::with_cut(6, 1.0, &[], -1.0).is_err());
    }

    #[test]
    fn gaussian_mass() {
        let rule = PlaneRule::<f64>::gaussian(4, 1.0).unwrap();
        let got = rule.integrate(|z| (-z.norm_sqr()).exp());
        assert!((got - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn eighth_moment() {
        let rule = PlaneRule::<f64>::gaussian(8, 1.0).unwrap();
        let got = rule.integrate(|z| z.norm_sqr().powi(4) * (-z.norm_sqr()).exp());
        assert!((got - 24.0 * std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn scaled_second_moment() {
        let rule = PlaneRule::<f64>::gaussian(2, 2.0).unwrap();
        let got = rule.integrate(|z| z.norm_sqr() * (-2.0 * z.norm_sqr()).exp());
        assert!((got - std::f64::consts::PI / 4.0).abs() < 1e-10);
    }

    #[test]
    fn monomial_exactness_table() {
        let order = 12;
        let rule = PlaneRule::<f64>::gaussian(order, 1.0).unwrap();
        for a in 0..=order {
            for b in 0..=(order - a) {
                let got = rule.integrate_c(|z| {
                    z.powu(a as u32) * z.conj().powu(b as u32) * (-z.norm_sqr()).exp()
                });
                let exact = if a == b {
                    std::f64::consts::PI * factorial(a as u32)
                } else {
                    0.0
                };
                let tol = 1e-12 * exact.abs().max(1.0);
                assert!((got.re - exact).abs() < tol, "a={a} b={b}: {got}");
                assert!(got.im.abs() < tol, "a={a} b={b}: {got}");
            }
        }
    }

    #[test]
    fn rejects_excessive_order() {
        assert!(matches!(
            PlaneRule::<f64>::gaussian(MAX_PLANE_ORDER + 1, 1.0),
            Err(Error::Capability(_))
        ));
    }

    #[test]
    fn breaks_become_panel_edges() {
        let rule = PlaneRule::<f64>::with_breaks(4, 1.0, &[1.0]).unwrap();
        // ∫_{|z|<1} dA = π, exact once ρ = 1 is a panel edge
        let got = rule.integrate(|z| if z.norm() < 1.0 { 1.0 } else { 0.0 });
        assert!((got - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn truncation_radius_respects_floor() {
        let rule = PlaneRule::<f64>::gaussian(1, 1.0).unwrap();
        assert!((-rule.r_cut().powi(2) / 2.0).exp() < 1e-16);
    }

    #[test]
    fn unit_disc_area_and_second_moment() {
        let ball = BallRule::<f64>::new(cl(0.0, 0.0), 1.0, 8).unwrap();
        assert!((ball.integrate(|_| 1.0) - std::f64::consts::PI).abs() < 1e-10);
        let m2 = ball.integrate(|w| w.norm_sqr());
        assert!((m2 - std::f64::consts::PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn translated_disc_area() {
        let ball = BallRule::<f64>::new(cl(2.0, 1.0), 0.5, 8).unwrap();
        assert!((ball.integrate(|_| 1.0) - 0.25 * std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn recentering_is_translation() {
        let a = BallRule::<f64>::new(cl(0.0, 0.0), 0.7, 6).unwrap();
        let b = BallRule::<f64>::new(cl(1.5, -2.0), 0.7, 6).unwrap();
        let a2 = a.recentered(cl(1.5, -2.0));
        assert_eq!(a2.weights(), b.weights());
        for (p, q) in a2.nodes().iter().zip(b.nodes()) {
            assert!((p - q).norm() < 1e-15);
        }
    }

    #[test]
    fn ball_rule_doubling_converges() {
        let f = |w: Cplx<f64>| (-w.norm_sqr()).exp();
        let lo = BallRule::<f64>::new(cl(0.0, 0.0), 2.0, 12).unwrap().integrate(f);
        let hi = BallRule::<f64>::new(cl(0.0, 0.0), 2.0, 24).unwrap().integrate(f);
        assert!((lo - hi).abs() < 1e-9);
        let exact = std::f64::consts::PI * (1.0 - (-4.0f64).exp());
        assert!((hi - exact).abs() < 1e-12);
    }

    #[test]
    fn single_precision_plane_rule() {
        let rule = PlaneRule::<f32>::gaussian(4, 1.0).unwrap();
        let got = rule.integrate(|z| (-z.norm_sqr()).exp());
        assert!((got - std::f32::consts::PI).abs() < 1e-4);
    }
}
