//! Admissible weights φ on the plane with uniform real-Hessian bounds.
//!
//! Complex derivatives follow the holomorphic-coordinate convention
//! `∂φ = (φ_x − i φ_y) / 2`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::sym2x2_eigenvalues;
use crate::scalar::{c, Cplx, Real};

type RealFn<T> = Arc<dyn Fn(Cplx<T>) -> T + Send + Sync>;
type ComplexFn<T> = Arc<dyn Fn(Cplx<T>) -> Cplx<T> + Send + Sync>;
type HessFn<T> = Arc<dyn Fn(Cplx<T>) -> [T; 3] + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind<T: Real> {
    /// φ(z) = (α/2)|z|².
    Gaussian { alpha: T },
    /// φ(z) = (α/2)|z|² + ε sin(Re z).
    PerturbedGaussian { alpha: T, amplitude: T },
    Custom,
}

/// A weight φ together with its complex gradient, real Hessian and declared
/// ellipticity bounds `m ≤ Hess φ ≤ M`.
#[derive(Clone)]
pub struct WeightModel<T: Real> {
    dimension: usize,
    kind: WeightKind<T>,
    m: T,
    big_m: T,
    phi: RealFn<T>,
    grad: ComplexFn<T>,
    hess: HessFn<T>,
}

impl<T: Real> fmt::Debug for WeightModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightModel")
            .field("dimension", &self.dimension)
            .field("kind", &self.kind)
            .field("m", &self.m)
            .field("M", &self.big_m)
            .finish()
    }
}

impl<T: Real> WeightModel<T> {
    pub fn gaussian(alpha: T) -> Result<Self> {
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::arg("alpha", "must be positive and finite"));
        }
        let half = alpha * T::lit(0.5);
        Ok(Self {
            dimension: 1,
            kind: WeightKind::Gaussian { alpha },
            m: alpha,
            big_m: alpha,
            phi: Arc::new(move |z: Cplx<T>| half * z.norm_sqr()),
            grad: Arc::new(move |z: Cplx<T>| z.conj() * half),
            hess: Arc::new(move |_| [alpha, T::zero(), alpha]),
        })
    }

    /// φ(z) = (α/2)|z|² + ε sin(Re z) with declared bounds `m`, `M`.
    pub fn perturbed_gaussian(alpha: T, amplitude: T, m: T, big_m: T) -> Result<Self> {
        if !(alpha > T::zero()) {
            return Err(Error::arg("alpha", "must be positive"));
        }
        check_bounds(m, big_m)?;
        let half = alpha * T::lit(0.5);
        Ok(Self {
            dimension: 1,
            kind: WeightKind::PerturbedGaussian { alpha, amplitude },
            m,
            big_m,
            phi: Arc::new(move |z: Cplx<T>| half * z.norm_sqr() + amplitude * z.re.sin()),
            grad: Arc::new(move |z: Cplx<T>| {
                let phx = alpha * z.re + amplitude * z.re.cos();
                let phy = alpha * z.im;
                c(phx, -phy) * T::lit(0.5)
            }),
            hess: Arc::new(move |z: Cplx<T>| [alpha - amplitude * z.re.sin(), T::zero(), alpha]),
        })
    }

    /// User-supplied weight. The Hessian evaluator returns `[φ_xx, φ_xy, φ_yy]`.
    /// Only planar weights (`dimension == 1`) have numerical support.
    pub fn custom<P, G, H>(dimension: usize, m: T, big_m: T, phi: P, grad: G, hess: H) -> Result<Self>
    where
        P: Fn(Cplx<T>) -> T + Send + Sync + 'static,
        G: Fn(Cplx<T>) -> Cplx<T> + Send + Sync + 'static,
        H: Fn(Cplx<T>) -> [T; 3] + Send + Sync + 'static,
    {
        if dimension != 1 {
            return Err(Error::Capability(format!(
                "weights in dimension {dimension} have no numerical support; only n = 1"
            )));
        }
        check_bounds(m, big_m)?;
        Ok(Self {
            dimension,
            kind: WeightKind::Custom,
            m,
            big_m,
            phi: Arc::new(phi),
            grad: Arc::new(grad),
            hess: Arc::new(hess),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn kind(&self) -> WeightKind<T> {
        self.kind
    }

    pub fn lower_bound(&self) -> T {
        self.m
    }

    pub fn upper_bound(&self) -> T {
        self.big_m
    }

    pub fn gaussian_alpha(&self) -> Option<T> {
        match self.kind {
            WeightKind::Gaussian { alpha } => Some(alpha),
            _ => None,
        }
    }

    #[inline]
    pub fn phi(&self, z: Cplx<T>) -> T {
        (self.phi)(z)
    }

    /// Holomorphic gradient ∂φ/∂z.
    #[inline]
    pub fn grad(&self, z: Cplx<T>) -> Cplx<T> {
        (self.grad)(z)
    }

    /// Real Hessian entries `[φ_xx, φ_xy, φ_yy]`.
    #[inline]
    pub fn hessian(&self, z: Cplx<T>) -> [T; 3] {
        (self.hess)(z)
    }

    /// `e^{-2φ(z)}`, the density of the L²_φ inner product.
    #[inline]
    pub fn density(&self, z: Cplx<T>) -> T {
        (-(T::lit(2.0)) * self.phi(z)).exp()
    }

    /// True when φ is numerically rotation invariant on a probe set.
    pub fn is_radial(&self) -> bool {
        if self.gaussian_alpha().is_some() {
            return true;
        }
        let tol = T::epsilon() * T::lit(1e4);
        let radii = [0.5, 1.0, 2.0, 3.5];
        radii.iter().all(|&rho| {
            let base = self.phi(c(T::lit(rho), T::zero()));
            (1..12).all(|k| {
                let th = T::lit(std::f64::consts::TAU * k as f64 / 12.0);
                let v = self.phi(c(T::lit(rho) * th.cos(), T::lit(rho) * th.sin()));
                (v - base).abs() <= tol * (T::one() + base.abs())
            })
        })
    }
}

fn check_bounds<T: Real>(m: T, big_m: T) -> Result<()> {
    if !(m > T::zero()) {
        return Err(Error::arg("m", "lower Hessian bound must be positive"));
    }
    if !(m <= big_m) {
        return Err(Error::arg("M", "upper Hessian bound must be at least m"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeEigenvalues<T: Real> {
    pub point: Cplx<T>,
    pub min: T,
    pub max: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationReport<T: Real> {
    pub probes: Vec<ProbeEigenvalues<T>>,
    pub passed: bool,
    /// Largest amount by which a Hessian eigenvalue leaves `[m, M]` (0 if none).
    pub worst_violation: T,
    pub worst_point: Option<Cplx<T>>,
    pub eigen_min: T,
    pub eigen_max: T,
}

/// Checks `m − tol ≤ λ(Hess φ) ≤ M + tol` at every probe.
pub fn certify_weight<T: Real>(
    w: &WeightModel<T>,
    probes: &[Cplx<T>],
    tol: T,
) -> Result<CertificationReport<T>> {
    if probes.is_empty() {
        return Err(Error::arg("probes", "must be non-empty"));
    }
    if !(tol > T::zero()) {
        return Err(Error::arg("tol", "must be positive"));
    }
    let mut out = Vec::with_capacity(probes.len());
    let mut worst = T::zero();
    let mut worst_point = None;
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for &z in probes {
        let [xx, xy, yy] = w.hessian(z);
        if !(xx.is_finite() && xy.is_finite() && yy.is_finite()) || !w.phi(z).is_finite() {
            return Err(Error::eval("weight Hessian", z));
        }
        let (emin, emax) = sym2x2_eigenvalues(xx, xy, yy);
        lo = lo.min(emin);
        hi = hi.max(emax);
        let v = (w.m - emin).max(emax - w.big_m).max(T::zero());
        if v > worst {
            worst = v;
            worst_point = Some(z);
        }
        out.push(ProbeEigenvalues {
            point: z,
            min: emin,
            max: emax,
        });
    }
    Ok(CertificationReport {
        probes: out,
        passed: worst <= tol,
        worst_violation: worst,
        worst_point,
        eigen_min: lo,
        eigen_max: hi,
    })
}

/// Largest absolute deviation between the declared gradient/Hessian and
/// central finite differences of φ with step `h`.
pub fn finite_difference_check<T: Real>(w: &WeightModel<T>, z: Cplx<T>, h: T) -> Result<T> {
    if !(h > T::zero()) {
        return Err(Error::arg("h", "must be positive"));
    }
    let f = |dx: T, dy: T| w.phi(z + c(dx, dy));
    let two = T::lit(2.0);
    let f0 = f(T::zero(), T::zero());
    let fxp = f(h, T::zero());
    let fxm = f(-h, T::zero());
    let fyp = f(T::zero(), h);
    let fym = f(T::zero(), -h);
    let phx = (fxp - fxm) / (two * h);
    let phy = (fyp - fym) / (two * h);
    let pxx = (fxp - two * f0 + fxm) / (h * h);
    let pyy = (fyp - two * f0 + fym) / (h * h);
    let pxy = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (T::lit(4.0) * h * h);
    for v in [f0, fxp, fxm, fyp, fym] {
        if !v.is_finite() {
            return Err(Error::eval("weight", z));
        }
    }
    let grad_fd = c(phx, -phy) * T::lit(0.5);
    let [hxx, hxy, hyy] = w.hessian(z);
    let dev = (w.grad(z) - grad_fd)
        .norm()
        .max((hxx - pxx).abs())
        .max((hxy - pxy).abs())
        .max((hyy - pyy).abs());
    Ok(dev)
}
