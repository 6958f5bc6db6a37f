//! Truncated orthonormal basis of F²_φ, the Bergman kernel and projection.
//!
//! For a radial weight the monomials are mutually orthogonal in
//! `L²(e^{-2φ} dA)`, so `e_k(z) = z^k / c_k` with `c_k² = ∫ |z|^{2k} e^{-2φ} dA`
//! is an orthonormal basis of F²_φ. Normalizations come from the plane rule.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{accumulate_vec, fit_line};
use crate::quadrature::PlaneRule;
use crate::scalar::{c, pairwise_fold, pairwise_fold_c, Cplx, Real};
use crate::weight::WeightModel;

/// Orthonormal monomial basis `e_0, …, e_D` of F²_φ.
#[derive(Debug, Clone)]
pub struct FockBasis<T: Real> {
    weight: WeightModel<T>,
    norms: Vec<T>,
    // ratios[k] = c_{k-1} / c_k, ratios[0] = 1 / c_0
    ratios: Vec<T>,
    rule: Arc<PlaneRule<T>>,
}

impl<T: Real> FockBasis<T> {
    /// Computes `c_0, …, c_D` by quadrature.
    pub fn build(weight: &WeightModel<T>, degree: usize, rule: &PlaneRule<T>) -> Result<Self> {
        Self::build_shared(weight, degree, Arc::new(rule.clone()))
    }

    pub fn build_shared(
        weight: &WeightModel<T>,
        degree: usize,
        rule: Arc<PlaneRule<T>>,
    ) -> Result<Self> {
        if weight.dimension() != 1 {
            return Err(Error::Capability("basis building needs n = 1".into()));
        }
        if !weight.is_radial() {
            return Err(Error::Capability(
                "monomial bases need a radial weight; non-radial weights are not supported".into(),
            ));
        }
        if rule.order() < 2 * degree {
            return Err(Error::arg(
                "rule",
                format!("order {} cannot resolve |z|^{}", rule.order(), 2 * degree),
            ));
        }
        let nodes = rule.nodes();
        let wts = rule.weights();
        let dens: Vec<T> = nodes.iter().map(|&z| weight.density(z)).collect();
        let mut norms = Vec::with_capacity(degree + 1);
        for k in 0..=degree {
            let sq = pairwise_fold(nodes.len(), &|i| {
                wts[i] * nodes[i].norm_sqr().powi(k as i32) * dens[i]
            });
            if !(sq > T::zero()) || !sq.is_finite() || sq < T::min_positive_value() * T::lit(1e10)
            {
                return Err(Error::DegreeCap {
                    requested: degree,
                    stable: k.saturating_sub(1),
                });
            }
            norms.push(sq.sqrt());
        }
        let mut ratios = Vec::with_capacity(degree + 1);
        ratios.push(T::one() / norms[0]);
        for k in 1..=degree {
            ratios.push(norms[k - 1] / norms[k]);
        }
        Ok(Self {
            weight: weight.clone(),
            norms,
            ratios,
            rule,
        })
    }

    /// Same weight and rule, different degree.
    pub fn with_degree(&self, degree: usize) -> Result<Self> {
        if degree < self.norms.len() {
            let mut b = self.clone();
            b.norms.truncate(degree + 1);
            b.ratios.truncate(degree + 1);
            return Ok(b);
        }
        Self::build_shared(&self.weight, degree, self.rule.clone())
    }

    pub fn degree(&self) -> usize {
        self.norms.len() - 1
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weight(&self) -> &WeightModel<T> {
        &self.weight
    }

    pub fn rule(&self) -> &PlaneRule<T> {
        &self.rule
    }

    pub fn shared_rule(&self) -> Arc<PlaneRule<T>> {
        self.rule.clone()
    }

    /// `c_k = ‖z^k‖_{2,φ}`.
    pub fn norms(&self) -> &[T] {
        &self.norms
    }

    /// Writes `e_0(z), …, e_m(z)` into `out` (length `m + 1 ≤ D + 1`).
    pub fn eval_into(&self, z: Cplx<T>, out: &mut [Cplx<T>]) {
        let mut v = c(self.ratios[0], T::zero());
        for (k, slot) in out.iter_mut().enumerate() {
            if k > 0 {
                v = v * z * self.ratios[k];
            }
            *slot = v;
        }
    }

    pub fn eval_all(&self, z: Cplx<T>) -> Vec<Cplx<T>> {
        let mut out = vec![c(T::zero(), T::zero()); self.len()];
        self.eval_into(z, &mut out);
        out
    }

    /// Single basis function `e_k(z)`.
    pub fn eval(&self, k: usize, z: Cplx<T>) -> Cplx<T> {
        z.powu(k as u32) / self.norms[k]
    }

    /// `Σ_k coeffs[k] e_k(z)`.
    pub fn combine(&self, coeffs: &[Cplx<T>], z: Cplx<T>) -> Cplx<T> {
        let mut basis = vec![c(T::zero(), T::zero()); coeffs.len()];
        self.eval_into(z, &mut basis);
        coeffs.iter().zip(&basis).map(|(a, e)| *a * *e).sum()
    }

    /// Coefficients `⟨g, e_k⟩_{L²_φ}` for `k ≤ D`: the truncated projection.
    pub fn project<G>(&self, g: G, rule: &PlaneRule<T>) -> Vec<Cplx<T>>
    where
        G: Fn(Cplx<T>) -> Cplx<T> + Sync,
    {
        let nodes = rule.nodes();
        let wts = rule.weights();
        let dim = self.len();
        accumulate_vec(nodes.len(), dim, |i, acc| {
            let z = nodes[i];
            let scale = wts[i] * self.weight.density(z);
            let gz = g(z) * scale;
            if gz == c(T::zero(), T::zero()) {
                return;
            }
            let mut v = c(self.ratios[0], T::zero());
            for (k, slot) in acc.iter_mut().enumerate() {
                if k > 0 {
                    v = v * z * self.ratios[k];
                }
                *slot += gz * v.conj();
            }
        })
    }

    /// As [`project`](Self::project) from values already sampled at the
    /// nodes of `rule`.
    pub fn project_values(&self, values: &[Cplx<T>], rule: &PlaneRule<T>) -> Result<Vec<Cplx<T>>> {
        if values.len() != rule.len() {
            return Err(Error::arg("values", "length must match the plane rule"));
        }
        let nodes = rule.nodes();
        let wts = rule.weights();
        Ok(accumulate_vec(nodes.len(), self.len(), |i, acc| {
            let z = nodes[i];
            let gz = values[i] * (wts[i] * self.weight.density(z));
            if gz == c(T::zero(), T::zero()) {
                return;
            }
            let mut v = c(self.ratios[0], T::zero());
            for (k, slot) in acc.iter_mut().enumerate() {
                if k > 0 {
                    v = v * z * self.ratios[k];
                }
                *slot += gz * v.conj();
            }
        }))
    }

    /// Largest entry of `|⟨e_j, e_k⟩ − δ_jk|` under `rule`.
    pub fn gram_defect(&self, rule: &PlaneRule<T>) -> T {
        let dim = self.len();
        let nodes = rule.nodes();
        let wts = rule.weights();
        let gram = accumulate_vec(nodes.len(), dim * dim, |i, acc| {
            let z = nodes[i];
            let e = self.eval_all(z);
            let s = wts[i] * self.weight.density(z);
            for j in 0..dim {
                for k in 0..dim {
                    acc[j * dim + k] += e[j] * e[k].conj() * s;
                }
            }
        });
        let mut worst = T::zero();
        for j in 0..dim {
            for k in 0..dim {
                let target = if j == k { T::one() } else { T::zero() };
                worst = worst.max((gram[j * dim + k] - target).norm());
            }
        }
        worst
    }
}

/// How the Bergman kernel is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMode {
    /// `(α/π) e^{α z w̄}`, only for Gaussian weights.
    ClosedFormGaussian,
    /// `Σ_{k≤D} e_k(z) conj(e_k(w))`.
    BasisSum,
}

#[derive(Debug, Clone)]
pub struct KernelEval<T: Real> {
    basis: FockBasis<T>,
    mode: KernelMode,
}

impl<T: Real> KernelEval<T> {
    pub fn new(basis: FockBasis<T>, mode: KernelMode) -> Result<Self> {
        if mode == KernelMode::ClosedFormGaussian && basis.weight().gaussian_alpha().is_none() {
            return Err(Error::Capability(
                "closed-form kernel only exists for Gaussian weights".into(),
            ));
        }
        Ok(Self { basis, mode })
    }

    pub fn basis(&self) -> &FockBasis<T> {
        &self.basis
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    pub fn weight(&self) -> &WeightModel<T> {
        self.basis.weight()
    }

    /// K(z, w).
    pub fn kernel(&self, z: Cplx<T>, w: Cplx<T>) -> Cplx<T> {
        match self.mode {
            KernelMode::ClosedFormGaussian => {
                let alpha = self.basis.weight().gaussian_alpha().unwrap_or_else(T::one);
                (z * w.conj() * alpha).exp() * (alpha / T::PI())
            }
            KernelMode::BasisSum => {
                let n = self.basis.len();
                let mut ez = vec![c(T::zero(), T::zero()); n];
                let mut ew = vec![c(T::zero(), T::zero()); n];
                self.basis.eval_into(z, &mut ez);
                self.basis.eval_into(w, &mut ew);
                pairwise_fold_c(n, &|k| ez[k] * ew[k].conj())
            }
        }
    }

    /// The unit vector `k_z = K(·, z) / √K(z, z)`.
    pub fn normalized_kernel(&self, z: Cplx<T>) -> Result<NormalizedKernel<'_, T>> {
        let kzz = self.kernel(z, z).re;
        if !(kzz > T::zero()) || !kzz.is_finite() {
            return Err(Error::DegreeCap {
                requested: self.basis.degree(),
                stable: self.basis.degree(),
            });
        }
        Ok(NormalizedKernel {
            kernel: self,
            z,
            inv_norm: T::one() / kzz.sqrt(),
        })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NormalizedKernel<'a, T: Real> {
    kernel: &'a KernelEval<T>,
    z: Cplx<T>,
    inv_norm: T,
}

impl<T: Real> NormalizedKernel<'_, T> {
    pub fn center(&self) -> Cplx<T> {
        self.z
    }

    #[inline]
    pub fn eval(&self, w: Cplx<T>) -> Cplx<T> {
        self.kernel.kernel(w, self.z) * self.inv_norm
    }
}

/// `‖f‖_{p,φ} = (∫ |f e^{-φ}|^p dA)^{1/p}`.
pub fn lp_norm<T: Real, F: Fn(Cplx<T>) -> Cplx<T>>(
    f: F,
    p: T,
    rule: &PlaneRule<T>,
    weight: &WeightModel<T>,
) -> Result<T> {
    if !(p >= T::one()) || !p.is_finite() {
        return Err(Error::arg("p", "must lie in [1, ∞)"));
    }
    let nodes = rule.nodes();
    let mut vals = Vec::with_capacity(nodes.len());
    for &z in nodes {
        let v = (f(z) * (-weight.phi(z)).exp()).norm();
        if !v.is_finite() {
            return Err(Error::eval("function in lp_norm", z));
        }
        vals.push(v);
    }
    let wts = rule.weights();
    let s = pairwise_fold(vals.len(), &|i| wts[i] * vals[i].powf(p));
    Ok(s.powf(T::one() / p))
}

/// Fitted kernel-decay constants on a probe set.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEstimates<T: Real> {
    pub theta: T,
    pub c1: T,
    pub c2: T,
    pub r0: T,
    /// RMS residual of the linear fit of `log|K| − φ(z) − φ(w)` in `|z − w|`.
    pub fit_residual: T,
    /// `(r₀ candidate, C₂)` pairs; `C₂` is the smallest normalized kernel
    /// modulus over probes with `|z − w| ≤ r₀`.
    pub lower_bound_table: Vec<(T, T)>,
}

/// Normalized log-kernel `log|K(z,w)| − φ(z) − φ(w)`.
pub fn normalized_log_kernel<T: Real>(k: &KernelEval<T>, z: Cplx<T>, w: Cplx<T>) -> T {
    let wt = k.weight();
    k.kernel(z, w).norm().ln() - wt.phi(z) - wt.phi(w)
}

/// Fits `θ, C₁` in `|K(z,w)| ≤ C₁ e^{φ(z)+φ(w)} e^{-θ|z-w|}` and lower-bound
/// constants `C₂, r₀` on the probe pairs. `C₁` is raised so that the bound
/// holds on every probe.
pub fn fit_kernel_estimates<T: Real>(
    k: &KernelEval<T>,
    probes: &[(Cplx<T>, Cplx<T>)],
) -> Result<KernelEstimates<T>> {
    if probes.is_empty() {
        return Err(Error::arg("probes", "must be non-empty"));
    }
    let xs: Vec<T> = probes.iter().map(|(z, w)| (*z - *w).norm()).collect();
    let ys: Vec<T> = probes
        .iter()
        .map(|(z, w)| normalized_log_kernel(k, *z, *w))
        .collect();
    let spread = xs.iter().fold(T::neg_infinity(), |m, &x| m.max(x))
        - xs.iter().fold(T::infinity(), |m, &x| m.min(x));
    let (intercept, slope) = fit_line(&xs, &ys);
    let theta = if spread > T::lit(1e-12) && slope < T::zero() {
        -slope
    } else {
        // no decay visible at this probe geometry
        T::epsilon()
    };
    let c1 = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| (y + theta * x).exp())
        .fold(T::zero(), T::max);
    let n = T::from_count(xs.len());
    let fit_residual = (xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<T>()
        / n)
        .sqrt();
    let mut table = Vec::new();
    for cand in [0.25, 0.5, 1.0] {
        let r = T::lit(cand);
        let c2 = xs
            .iter()
            .zip(&ys)
            .filter(|(&x, _)| x <= r)
            .map(|(_, &y)| y.exp())
            .fold(T::infinity(), T::min);
        if c2.is_finite() {
            table.push((r, c2));
        }
    }
    let (r0, c2) = table.last().copied().unwrap_or((T::zero(), T::zero()));
    Ok(KernelEstimates {
        theta,
        c1,
        c2,
        r0,
        fit_residual,
        lower_bound_table: table,
    })
}

/// True when `|K(z,w)| ≤ C₁ e^{φ(z)+φ(w)} e^{-θ|z-w|}` at every probe.
pub fn upper_bound_holds<T: Real>(
    k: &KernelEval<T>,
    probes: &[(Cplx<T>, Cplx<T>)],
    theta: T,
    c1: T,
) -> bool {
    let slack = T::one() + T::lit(1e-12);
    probes.iter().all(|(z, w)| {
        normalized_log_kernel(k, *z, *w).exp() <= c1 * (-theta * (*z - *w).norm()).exp() * slack
    })
}

/// Raises the basis degree from `start` in steps of 10 until the basis-sum
/// kernel agrees with the closed form to relative `tol` on `|z|,|w| ≤ radius`.
/// Gaussian weights only.
pub fn certify_degree<T: Real>(
    weight: &WeightModel<T>,
    start: usize,
    radius: T,
    tol: T,
) -> Result<(FockBasis<T>, T)> {
    let alpha = weight
        .gaussian_alpha()
        .ok_or_else(|| Error::Capability("degree certificate needs a closed-form kernel".into()))?;
    let mut degree = start;
    loop {
        let rule = PlaneRule::gaussian(2 * degree + 4, alpha)?;
        let basis = FockBasis::build(weight, degree, &rule)?;
        let err = kernel_truncation_error(&basis, radius)?;
        if err < tol {
            return Ok((basis, err));
        }
        if degree >= 160 {
            return Err(Error::DegreeCap {
                requested: degree,
                stable: degree,
            });
        }
        degree += 10;
    }
}

/// Max relative disagreement between basis-sum and closed-form kernels on a
/// polar probe grid of `|z|, |w| ≤ radius`.
pub fn kernel_truncation_error<T: Real>(basis: &FockBasis<T>, radius: T) -> Result<T> {
    let closed = KernelEval::new(basis.clone(), KernelMode::ClosedFormGaussian)?;
    let summed = KernelEval::new(basis.clone(), KernelMode::BasisSum)?;
    let pts = probe_disc(radius, 4, 8);
    let mut worst = T::zero();
    for &z in &pts {
        for &w in &pts {
            let a = closed.kernel(z, w);
            let b = summed.kernel(z, w);
            worst = worst.max((a - b).norm() / a.norm());
        }
    }
    Ok(worst)
}

/// Polar probe grid: the origin plus `rings × spokes` points up to `radius`.
pub fn probe_disc<T: Real>(radius: T, rings: usize, spokes: usize) -> Vec<Cplx<T>> {
    let mut pts = vec![c(T::zero(), T::zero())];
    for i in 1..=rings {
        let rho = radius * T::from_count(i) / T::from_count(rings);
        for j in 0..spokes {
            let th = T::lit(std::f64::consts::TAU) * (T::from_count(j) + T::lit(0.5) * T::from_count(i % 2))
                / T::from_count(spokes);
            pts.push(Cplx::from_polar(rho, th));
        }
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cl;
    use std::f64::consts::{E, PI};

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    fn gaussian_basis(alpha: f64, degree: usize) -> FockBasis<f64> {
        let w = WeightModel::gaussian(alpha).unwrap();
        let rule = PlaneRule::gaussian(2 * degree + 4, alpha).unwrap();
        FockBasis::build(&w, degree, &rule).unwrap()
    }

    #[test]
    fn standard_normalizations() {
        let b = gaussian_basis(1.0, 5);
        for (k, ck) in b.norms().iter().enumerate() {
            let exact = PI * factorial(k);
            assert!((ck * ck / exact - 1.0).abs() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn scaled_normalizations() {
        let b = gaussian_basis(2.0, 3);
        for (k, ck) in b.norms().iter().enumerate() {
            let exact = PI / 2.0 * factorial(k) / 2f64.powi(k as i32);
            assert!((ck * ck / exact - 1.0).abs() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn degree_zero_basis() {
        let b = gaussian_basis(1.0, 0);
        assert_eq!(b.len(), 1);
        let norm = lp_norm(|z| b.eval(0, z), 2.0, b.rule(), b.weight()).unwrap();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gram_is_identity() {
        let b = gaussian_basis(1.0, 12);
        assert!(b.gram_defect(b.rule()) < 1e-10);
    }

    #[test]
    fn non_radial_weight_is_refused() {
        let w = WeightModel::perturbed_gaussian(1.0, 0.1, 0.9, 1.1).unwrap();
        let rule = PlaneRule::gaussian(10, 1.0).unwrap();
        assert!(matches!(FockBasis::build(&w, 3, &rule), Err(Error::Capability(_))));
    }

    #[test]
    fn closed_form_kernel_value() {
        let b = gaussian_basis(1.0, 4);
        let k = KernelEval::new(b, KernelMode::ClosedFormGaussian).unwrap();
        let v = k.kernel(cl(1.0, 0.0), cl(1.0, 0.0));
        assert!((v.re - E / PI).abs() < 1e-12 && v.im.abs() < 1e-15);
    }

    #[test]
    fn basis_sum_is_exactly_hermitian() {
        let b = gaussian_basis(1.0, 20);
        let k = KernelEval::new(b, KernelMode::BasisSum).unwrap();
        let (z, w) = (cl(0.3, -1.2), cl(-0.7, 0.4));
        assert_eq!(k.kernel(z, w), k.kernel(w, z).conj());
    }

    #[test]
    fn basis_sum_matches_closed_form() {
        let b = gaussian_basis(1.0, 40);
        assert!(kernel_truncation_error(&b, 2.0).unwrap() < 1e-8);
    }

    #[test]
    fn normalized_kernel_at_origin_is_constant() {
        let b = gaussian_basis(1.0, 10);
        let k = KernelEval::new(b, KernelMode::ClosedFormGaussian).unwrap();
        let k0 = k.normalized_kernel(cl(0.0, 0.0)).unwrap();
        for w in [cl(0.0, 0.0), cl(1.0, 2.0), cl(-3.0, 0.5)] {
            assert!((k0.eval(w) - cl(1.0 / PI.sqrt(), 0.0)).norm() < 1e-12);
        }
        let n = lp_norm(|w| k0.eval(w), 2.0, k.basis().rule(), k.weight()).unwrap();
        assert!((n - 1.0).abs() < 1e-10);
    }

    #[test]
    fn normalized_kernel_far_value() {
        let b = gaussian_basis(1.0, 10);
        let k = KernelEval::new(b, KernelMode::ClosedFormGaussian).unwrap();
        let kz = k.normalized_kernel(cl(2.0, 0.0)).unwrap();
        assert!((kz.eval(cl(0.0, 0.0)).norm() - (-2.0f64).exp() / PI.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn normalized_kernel_has_unit_norm() {
        let b = gaussian_basis(1.0, 30);
        let k = KernelEval::new(b, KernelMode::ClosedFormGaussian).unwrap();
        for z in [cl(0.5, 0.5), cl(-1.5, 2.0), cl(3.0, 0.0)] {
            let kz = k.normalized_kernel(z).unwrap();
            let n = lp_norm(|w| kz.eval(w), 2.0, k.basis().rule(), k.weight()).unwrap();
            assert!((n - 1.0).abs() < 1e-8, "z={z}: {n}");
        }
    }

    #[test]
    fn truncated_kernel_can_fail_positivity() {
        let b = gaussian_basis(1.0, 0);
        let k = KernelEval::new(b, KernelMode::BasisSum).unwrap();
        assert!(k.normalized_kernel(cl(1.0, 1.0)).is_ok());
        let zero_rule = PlaneRule::gaussian(4, 1.0).unwrap();
        let w = WeightModel::gaussian(1.0).unwrap();
        let b = FockBasis::build(&w, 1, &zero_rule).unwrap();
        let k = KernelEval::new(b, KernelMode::BasisSum).unwrap();
        assert!(k.normalized_kernel(cl(f64::INFINITY, 0.0)).is_err());
    }

    #[test]
    fn norms_of_simple_functions() {
        let b = gaussian_basis(1.0, 4);
        let w = b.weight().clone();
        let e0 = lp_norm(|z| b.eval(0, z), 2.0, b.rule(), &w).unwrap();
        assert!((e0 - 1.0).abs() < 1e-10);
        let one = lp_norm(|_| cl(1.0, 0.0), 2.0, b.rule(), &w).unwrap();
        assert!((one - PI.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn reproducing_kernel_norm() {
        let b = gaussian_basis(1.0, 10);
        let k = KernelEval::new(b, KernelMode::ClosedFormGaussian).unwrap();
        let z = cl(1.0, 0.0);
        let n = lp_norm(|w| k.kernel(w, z), 2.0, k.basis().rule(), k.weight()).unwrap();
        let exact = (0.5f64).exp() / PI.sqrt();
        assert!((n - exact).abs() < 1e-6);
    }

    #[test]
    fn lp_norm_is_homogeneous() {
        let b = gaussian_basis(1.0, 4);
        let f = |z: Cplx<f64>| z * z.conj() + cl(1.0, -2.0);
        for p in [1.0, 2.0, 3.5] {
            let a = lp_norm(f, p, b.rule(), b.weight()).unwrap();
            let two = lp_norm(|z| f(z) * 2.0, p, b.rule(), b.weight()).unwrap();
            assert!((two - 2.0 * a).abs() < 1e-10 * a);
        }
        assert!(lp_norm(f, 0.5, b.rule(), b.weight()).is_err());
    }

    #[test]
    fn projection_of_basis_element() {
        let b = gaussian_basis(1.0, 8);
        let coeffs = b.project(|z| b.eval(3, z), b.rule());
        for (k, a) in coeffs.iter().enumerate() {
            let target = if k == 3 { 1.0 } else { 0.0 };
            assert!((a - cl(target, 0.0)).norm() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn projection_kills_conjugate() {
        let b = gaussian_basis(1.0, 8);
        let coeffs = b.project(|z| z.conj(), b.rule());
        assert!(coeffs.iter().all(|a| a.norm() < 1e-10));
    }

    #[test]
    fn projection_of_modulus_squared() {
        let b = gaussian_basis(1.0, 8);
        let coeffs = b.project(|z| cl(z.norm_sqr(), 0.0), b.rule());
        assert!((coeffs[0] - cl(PI.sqrt(), 0.0)).norm() < 1e-8);
        assert!(coeffs[1..].iter().all(|a| a.norm() < 1e-10));
    }

    #[test]
    fn kernel_fit_for_standard_gaussian() {
        let b = gaussian_basis(1.0, 4);
        let k = KernelEval::new(b, KernelMode::ClosedFormGaussian).unwrap();
        let mut probes = Vec::new();
        for i in 0..9 {
            let d = 1.0 + 0.25 * i as f64;
            probes.push((cl(0.3, -0.2), cl(0.3 + d, -0.2)));
            probes.push((cl(-1.0, 1.0), cl(-1.0, 1.0 + d)));
        }
        for (z, w) in &probes {
            let y = normalized_log_kernel(&k, *z, *w);
            let exact = -(*z - *w).norm_sqr() / 2.0 - PI.ln();
            assert!((y - exact).abs() < 1e-12);
        }
        let est = fit_kernel_estimates(&k, &probes).unwrap();
        assert!(est.theta > 0.0 && est.theta.is_finite());
        assert!(upper_bound_holds(&k, &probes, est.theta, est.c1));
        // the closed form shows θ = 1/2 works with C₁ = 1/π on 1 ≤ |z−w| ≤ 3
        assert!(upper_bound_holds(&k, &probes, 0.5, 1.0 / PI));
    }

    #[test]
    fn diagonal_lower_bound() {
        let b = gaussian_basis(1.0, 4);
        let k = KernelEval::new(b, KernelMode::ClosedFormGaussian).unwrap();
        let probes: Vec<_> = [cl(0.0, 0.0), cl(1.0, 1.0), cl(-2.0, 0.5)]
            .iter()
            .map(|&z| (z, z))
            .collect();
        let est = fit_kernel_estimates(&k, &probes).unwrap();
        for (_, c2) in &est.lower_bound_table {
            assert!((c2 - 1.0 / PI).abs() < 1e-12);
        }
    }

    #[test]
    fn kernel_fit_symmetric_under_swap() {
        let b = gaussian_basis(1.0, 4);
        let k = KernelEval::new(b, KernelMode::ClosedFormGaussian).unwrap();
        let probes = vec![(cl(0.0, 1.0), cl(2.0, -1.0)), (cl(-1.0, 0.0), cl(1.5, 0.5))];
        let swapped: Vec<_> = probes.iter().map(|(z, w)| (*w, *z)).collect();
        let a = fit_kernel_estimates(&k, &probes).unwrap();
        let s = fit_kernel_estimates(&k, &swapped).unwrap();
        assert_eq!(a.fit_residual, s.fit_residual);
        assert_eq!(a.theta, s.theta);
    }

    #[test]
    fn empty_probe_set_is_rejected() {
        let b = gaussian_basis(1.0, 2);
        let k = KernelEval::new(b, KernelMode::ClosedFormGaussian).unwrap();
        assert!(fit_kernel_estimates(&k, &[]).is_err());
    }
}
