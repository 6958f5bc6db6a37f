//! The weighted ∂̄-solution operator in one complex variable,
//!
//! `A_φ(ω)(z) = c₀ ∫ e^{2∂φ(ξ)(z−ξ)} ω(ξ) / (ξ − z) dA(ξ)`,
//!
//! for forms `ω dξ̄`. The orientation constant `c₀` is not assumed; it is
//! selected by [`DbarSolver::calibrate`] from a finite candidate set by
//! checking `∂̄u = ω` with finite differences.
//!
//! Integration is in polar coordinates centred at `z`, where the Jacobian
//! cancels the `|ξ − z|^{-1}` singularity. Far from `z` only the annulus
//! and angular sector meeting the disc that carries the integrand's mass
//! are sampled.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::linalg::gauss_legendre;
use crate::quadrature::PlaneRule;
use crate::scalar::{c, pairwise_fold, pairwise_fold_c, pairwise_sum_c, Cplx, Real};
use crate::symbols::{Family, Symbol};
use crate::weight::{WeightKind, WeightModel};

type Eval<T> = Arc<dyn Fn(Cplx<T>) -> Cplx<T> + Send + Sync>;

/// Decay of a form coefficient, used to bound where the integrand lives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayTag<T: Real> {
    /// `|ω(ξ)| ≲ e^{slope |ξ| − rate |ξ − center|²}`; `rate` may be zero
    /// when the kernel factor supplies the decay.
    Gaussian { rate: T, center: Cplx<T>, slope: T },
    /// `ω = 0` for `|ξ| > R`.
    Compact(T),
    Unknown,
}

/// A (0,1)-form `ω(ξ) dξ̄` in one variable.
#[derive(Clone)]
pub struct ZeroOneForm<T: Real> {
    w: Eval<T>,
    decay: DecayTag<T>,
}

impl<T: Real> std::fmt::Debug for ZeroOneForm<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ZeroOneForm").field("decay", &self.decay).finish()
    }
}

impl<T: Real> ZeroOneForm<T> {
    pub fn new(w: impl Fn(Cplx<T>) -> Cplx<T> + Send + Sync + 'static, decay: DecayTag<T>) -> Self {
        Self { w: Arc::new(w), decay }
    }

    pub fn zero() -> Self {
        Self::new(|_| c(T::zero(), T::zero()), DecayTag::Compact(T::zero()))
    }

    #[inline]
    pub fn eval(&self, xi: Cplx<T>) -> Cplx<T> {
        (self.w)(xi)
    }

    pub fn decay(&self) -> DecayTag<T> {
        self.decay
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.decay, DecayTag::Compact(r) if r == T::zero())
    }

    pub fn scaled(&self, a: Cplx<T>) -> Self {
        let w = self.w.clone();
        Self {
            w: Arc::new(move |x| w(x) * a),
            decay: self.decay,
        }
    }

    /// `self + other`; the decay tag is the weaker of the two.
    pub fn plus(&self, other: &Self) -> Self {
        let (a, b) = (self.w.clone(), other.w.clone());
        let decay = match (self.decay, other.decay) {
            (DecayTag::Compact(r), DecayTag::Compact(s)) => DecayTag::Compact(r.max(s)),
            (DecayTag::Compact(r), DecayTag::Gaussian { rate, center, slope })
            | (DecayTag::Gaussian { rate, center, slope }, DecayTag::Compact(r)) => {
                if r == T::zero() {
                    DecayTag::Gaussian { rate, center, slope }
                } else {
                    DecayTag::Gaussian {
                        rate: T::zero(),
                        center: c(T::zero(), T::zero()),
                        slope: slope + rate * (r + center.norm()) * T::lit(2.0),
                    }
                }
            }
            (
                DecayTag::Gaussian { rate: r1, center: c1, slope: s1 },
                DecayTag::Gaussian { rate: r2, center: c2, slope: s2 },
            ) => {
                if r1 == r2 && c1 == c2 {
                    DecayTag::Gaussian { rate: r1, center: c1, slope: s1.max(s2) }
                } else {
                    let rate = r1.min(r2);
                    let shift = T::lit(2.0) * (r1 * c1.norm()).max(r2 * c2.norm());
                    DecayTag::Gaussian {
                        rate,
                        center: c(T::zero(), T::zero()),
                        slope: s1.max(s2) + shift,
                    }
                }
            }
            _ => DecayTag::Unknown,
        };
        Self {
            w: Arc::new(move |x| a(x) + b(x)),
            decay,
        }
    }
}

/// `v(ξ) = (a ξ̄ + Σ b_k ξ^k) e^{−β|ξ − c|²}`, a smooth potential whose
/// `∂̄v` serves as a test form with a known solution up to entire terms.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPotential<T: Real> {
    pub conj_coeff: Cplx<T>,
    pub holo: Vec<Cplx<T>>,
    pub beta: T,
    pub center: Cplx<T>,
}

impl<T: Real> GaussianPotential<T> {
    fn poly(&self, xi: Cplx<T>) -> Cplx<T> {
        self.conj_coeff * xi.conj()
            + self.holo.iter().rev().fold(c(T::zero(), T::zero()), |acc, b| acc * xi + *b)
    }

    pub fn eval(&self, xi: Cplx<T>) -> Cplx<T> {
        self.poly(xi) * (-self.beta * (xi - self.center).norm_sqr()).exp()
    }

    /// `∂̄v = (a − β (ξ − c) p(ξ)) e^{−β|ξ−c|²}`.
    pub fn form(&self) -> ZeroOneForm<T> {
        let me = self.clone();
        let degree = self.holo.len().max(2);
        ZeroOneForm::new(
            move |xi| {
                let g = (-me.beta * (xi - me.center).norm_sqr()).exp();
                (me.conj_coeff - (xi - me.center) * me.poly(xi) * me.beta) * g
            },
            DecayTag::Gaussian {
                rate: self.beta,
                center: self.center,
                slope: T::from_count(degree),
            },
        )
    }

    /// The three forms used by default for calibration.
    pub fn default_family() -> Vec<Self> {
        let z = |re: f64, im: f64| c(T::lit(re), T::lit(im));
        vec![
            Self {
                conj_coeff: z(1.0, 0.0),
                holo: vec![],
                beta: T::one(),
                center: z(0.0, 0.0),
            },
            Self {
                conj_coeff: z(0.0, 0.0),
                holo: vec![z(1.0, 0.0)],
                beta: T::lit(1.5),
                center: z(0.5, 0.3),
            },
            Self {
                conj_coeff: z(0.5, -0.5),
                holo: vec![z(0.0, 0.0), z(1.0, 0.0)],
                beta: T::lit(0.8),
                center: z(-0.4, 0.6),
            },
        ]
    }
}

/// Which exponential factor multiplies the Cauchy kernel.
#[derive(Debug, Clone)]
pub enum KernelFactor<T: Real> {
    /// `e^{2∂φ(ξ)(z−ξ)}` for the weight φ.
    Weighted(WeightModel<T>),
    /// No factor: the plain Cauchy transform.
    Cauchy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T: Real> {
    /// Radius of the disc around `z` integrated on full circles.
    pub rho0: T,
    /// Gauss-Legendre points per panel.
    pub panel_points: usize,
    /// Mass beyond `e^{-efolds}` of the peak is dropped.
    pub efolds: T,
    /// Divides all panel lengths; 2 halves the local steps.
    pub refine: T,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            rho0: T::lit(0.5),
            panel_points: 10,
            efolds: T::lit(40.0),
            refine: T::one(),
        }
    }
}

/// Candidate orientation constants: `{±1, ±i} × {1, 1/π, 1/(2π), 1/(4π), 2}`.
pub fn orientation_candidates<T: Real>() -> Vec<Cplx<T>> {
    let pi = T::PI();
    let mags = [T::one(), pi.recip(), (pi + pi).recip(), (T::lit(4.0) * pi).recip(), T::lit(2.0)];
    let units = [
        c(T::one(), T::zero()),
        c(-T::one(), T::zero()),
        c(T::zero(), T::one()),
        c(T::zero(), -T::one()),
    ];
    mags.iter()
        .flat_map(|m| units.iter().map(move |u| *u * *m))
        .collect()
}

/// Relative residual of one orientation candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateResidual<T: Real> {
    pub c0: Cplx<T>,
    pub residual: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport<T: Real> {
    pub c0: Cplx<T>,
    pub residual: T,
    pub candidates: Vec<CandidateResidual<T>>,
    /// Candidates below the acceptance threshold; calibration needs exactly one.
    pub passing: usize,
}

/// Acceptance threshold on the relative residual of the winning candidate.
pub const CALIBRATION_TOL: f64 = 1e-2;
/// Finite-difference step for `∂̄u`.
pub const FD_STEP: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct DbarSolver<T: Real> {
    factor: KernelFactor<T>,
    options: SolverOptions<T>,
    orientation: Option<Cplx<T>>,
}

impl<T: Real> DbarSolver<T> {
    pub fn new(weight: &WeightModel<T>) -> Result<Self> {
        if weight.dimension() != 1 {
            return Err(Error::Capability("the ∂̄ solver is implemented for n = 1 only".into()));
        }
        Ok(Self {
            factor: KernelFactor::Weighted(weight.clone()),
            options: SolverOptions::default(),
            orientation: None,
        })
    }

    /// Plain Cauchy transform, no weight factor.
    pub fn cauchy() -> Self {
        Self {
            factor: KernelFactor::Cauchy,
            options: SolverOptions::default(),
            orientation: None,
        }
    }

    pub fn with_options(mut self, options: SolverOptions<T>) -> Self {
        self.options = options;
        self
    }

    pub fn options(&self) -> SolverOptions<T> {
        self.options
    }

    pub fn factor(&self) -> &KernelFactor<T> {
        &self.factor
    }

    pub fn orientation(&self) -> Option<Cplx<T>> {
        self.orientation
    }

    /// Installs a previously calibrated constant.
    pub fn set_orientation(&mut self, c0: Cplx<T>) {
        self.orientation = Some(c0);
    }

    /// `A_φ(ω)(z)` with the calibrated constant.
    pub fn apply(&self, form: &ZeroOneForm<T>, z: Cplx<T>) -> Result<Cplx<T>> {
        let c0 = self.orientation.ok_or(Error::Uncalibrated)?;
        Ok(self.raw(form, z)? * c0)
    }

    /// `A_φ(ω)` at many points.
    pub fn apply_many(&self, form: &ZeroOneForm<T>, points: &[Cplx<T>]) -> Result<Vec<Cplx<T>>> {
        let c0 = self.orientation.ok_or(Error::Uncalibrated)?;
        points
            .par_iter()
            .map(|z| self.raw(form, *z).map(|u| u * c0))
            .collect()
    }

    /// The integral with `c₀ = 1`.
    pub fn raw(&self, form: &ZeroOneForm<T>, z: Cplx<T>) -> Result<Cplx<T>> {
        if form.is_zero() {
            return Ok(c(T::zero(), T::zero()));
        }
        let (center, reach, kappa, phase) = self.mass_disc(form, z)?;
        let opts = self.options;
        let np = opts.panel_points.max(2);
        let (gx, gw) = gauss_legendre::<T>(np);
        // panel length resolving both the Gaussian envelope and the phase
        let ell = (T::lit(2.0) / kappa.sqrt()).min(T::lit(12.0) / phase.max(T::one())) / opts.refine;
        let zero = c(T::zero(), T::zero());
        let offset = center - z;
        let d = offset.norm();
        let theta_star = offset.im.atan2(offset.re);
        let two_pi = T::PI() + T::PI();
        let integrand = |rho: T, th: T| -> Cplx<T> {
            let e = c(th.cos(), th.sin());
            let xi = z + e * rho;
            let w = form.eval(xi);
            if w == zero {
                return zero;
            }
            self.kernel_factor(xi, z) * w * e.conj()
        };
        let mut parts: Vec<Cplx<T>> = Vec::new();
        let radial = |a: T, b: T, parts: &mut Vec<Cplx<T>>| {
            if !(b > a) {
                return;
            }
            let panels = ((b - a) / ell).ceil().to_usize().unwrap_or(1).max(1);
            let h = (b - a) / T::from_count(panels);
            for p in 0..panels {
                let lo = a + h * T::from_count(p);
                for (x, wr) in gx.iter().zip(&gw) {
                    let rho = lo + h * (*x + T::one()) * T::lit(0.5);
                    let wrho = *wr * h * T::lit(0.5);
                    // half-width of the sector meeting the mass disc
                    let delta = if d <= T::epsilon() || rho + d <= reach {
                        T::PI()
                    } else {
                        let cosd = (rho * rho + d * d - reach * reach) / (T::lit(2.0) * rho * d);
                        if cosd >= T::one() {
                            continue;
                        }
                        cosd.max(-T::one()).acos()
                    };
                    let arc = T::lit(2.0) * delta * rho;
                    if delta >= T::PI() - T::epsilon() {
                        let n = ((arc / ell) * T::lit(8.0)).ceil().to_usize().unwrap_or(16).max(16);
                        let dt = two_pi / T::from_count(n);
                        let s = pairwise_fold_c(n, &|k| integrand(rho, theta_star + dt * T::from_count(k)));
                        parts.push(s * (dt * wrho));
                    } else {
                        let m = (arc / ell).ceil().to_usize().unwrap_or(1).max(1);
                        let ht = T::lit(2.0) * delta / T::from_count(m);
                        let mut acc = Vec::with_capacity(m * np);
                        for q in 0..m {
                            let t0 = theta_star - delta + ht * T::from_count(q);
                            for (y, wt) in gx.iter().zip(&gw) {
                                let th = t0 + ht * (*y + T::one()) * T::lit(0.5);
                                acc.push(integrand(rho, th) * (*wt * ht * T::lit(0.5)));
                            }
                        }
                        parts.push(pairwise_sum_c(&acc) * wrho);
                    }
                }
            }
        };
        let rho0 = opts.rho0;
        let lo = (d - reach).max(T::zero());
        let hi = d + reach;
        if lo < rho0 {
            radial(T::zero(), rho0.min(hi), &mut parts);
        }
        radial(lo.max(rho0), hi, &mut parts);
        let total = pairwise_sum_c(&parts);
        if !(total.re.is_finite() && total.im.is_finite()) {
            return Err(Error::eval("A_φ integral", z));
        }
        Ok(total)
    }

    #[inline]
    fn kernel_factor(&self, xi: Cplx<T>, z: Cplx<T>) -> Cplx<T> {
        match &self.factor {
            KernelFactor::Weighted(w) => (w.grad(xi) * (z - xi) * T::lit(2.0)).exp(),
            KernelFactor::Cauchy => c(T::one(), T::zero()),
        }
    }

    /// Disc `(center, reach)` outside which the integrand is below
    /// `e^{-efolds}` of its peak, the combined Gaussian rate, and a bound
    /// on the phase gradient.
    fn mass_disc(&self, form: &ZeroOneForm<T>, z: Cplx<T>) -> Result<(Cplx<T>, T, T, T)> {
        let two = T::lit(2.0);
        let e = self.options.efolds;
        let (k_rate, k_slack, k_phase) = match &self.factor {
            KernelFactor::Weighted(w) => match w.kind() {
                WeightKind::Gaussian { alpha } => (alpha, T::zero(), alpha),
                WeightKind::PerturbedGaussian { alpha, amplitude } => (alpha, amplitude.abs() * two, alpha),
                WeightKind::Custom => {
                    let (m, big_m) = (w.lower_bound(), w.upper_bound());
                    (m, (big_m - m) * (z.norm() + T::one()), big_m)
                }
            },
            KernelFactor::Cauchy => (T::zero(), T::zero(), T::zero()),
        };
        match form.decay() {
            DecayTag::Unknown => Err(Error::DecayNotCertified("form carries no decay tag".into())),
            DecayTag::Compact(r) => {
                let phase = k_phase * (z.norm() + two * r) + T::one();
                Ok((c(T::zero(), T::zero()), r, T::one().max(k_rate), phase))
            }
            DecayTag::Gaussian { rate, center, slope } => {
                let kappa = k_rate + rate;
                if !(kappa > T::zero()) {
                    return Err(Error::DecayNotCertified(
                        "neither the form nor the kernel factor decays".into(),
                    ));
                }
                // complete the square in −k|ξ − z/2|² − rate|ξ − c|²
                let peak = (z * (k_rate / two) + center * rate) / kappa;
                let reach = (e / kappa).sqrt() + (slope + k_slack) / kappa + kappa.sqrt().recip();
                let phase = k_phase * z.norm() + slope + k_slack + T::one();
                Ok((peak, reach, kappa, phase))
            }
        }
    }

    /// Central-difference `∂̄` of `c₀ · raw` at `z`, returned for `c₀ = 1`.
    fn raw_dbar(&self, form: &ZeroOneForm<T>, z: Cplx<T>, h: T) -> Result<Cplx<T>> {
        let dx = (self.raw(form, z + c(h, T::zero()))? - self.raw(form, z - c(h, T::zero()))?) / (h + h);
        let dy = (self.raw(form, z + c(T::zero(), h))? - self.raw(form, z - c(T::zero(), h))?) / (h + h);
        Ok((dx + c(T::zero(), T::one()) * dy) * T::lit(0.5))
    }

    /// Picks `c₀` from [`orientation_candidates`] by the finite-difference
    /// residual `max |c₀ ∂̄raw − ω| / max |ω|` over the family and probes.
    ///
    /// Fails with a convention error unless exactly one candidate passes.
    pub fn calibrate(
        &mut self,
        family: &[GaussianPotential<T>],
        probes: &[Cplx<T>],
    ) -> Result<CalibrationReport<T>> {
        if family.is_empty() || probes.is_empty() {
            return Err(Error::arg("family", "calibration needs test forms and probes"));
        }
        let h = T::lit(FD_STEP);
        let mut samples: Vec<(Cplx<T>, Cplx<T>)> = Vec::new();
        let mut scale = T::zero();
        for pot in family {
            let form = pot.form();
            let rows = probes
                .par_iter()
                .map(|z| Ok((self.raw_dbar(&form, *z, h)?, form.eval(*z))))
                .collect::<Result<Vec<_>>>()?;
            for (_, w) in &rows {
                scale = scale.max(w.norm());
            }
            samples.extend(rows);
        }
        if !(scale > T::zero()) {
            return Err(Error::arg("family", "test forms vanish on every probe"));
        }
        let candidates: Vec<CandidateResidual<T>> = orientation_candidates()
            .into_iter()
            .map(|c0| {
                let worst = samples
                    .iter()
                    .map(|(d, w)| (*d * c0 - *w).norm())
                    .fold(T::zero(), T::max);
                CandidateResidual { c0, residual: worst / scale }
            })
            .collect();
        let tol = T::lit(CALIBRATION_TOL);
        let passing = candidates.iter().filter(|cr| cr.residual < tol).count();
        let best = candidates
            .iter()
            .min_by(|a, b| a.residual.partial_cmp(&b.residual).unwrap_or(std::cmp::Ordering::Equal))
            .cloned()
            .ok_or(Error::Uncalibrated)?;
        if passing != 1 {
            return Err(Error::Convention(format!(
                "{passing} orientation candidates pass the residual threshold (best residual {:e})",
                best.residual.as_f64()
            )));
        }
        self.orientation = Some(best.c0);
        Ok(CalibrationReport {
            c0: best.c0,
            residual: best.residual,
            candidates,
            passing,
        })
    }

    /// `u = A_φ(ω)` on probes with the finite-difference residual of `∂̄u = ω`.
    pub fn solve(&self, form: &ZeroOneForm<T>, probes: &[Cplx<T>]) -> Result<DbarSolution<T>> {
        let c0 = self.orientation.ok_or(Error::Uncalibrated)?;
        let h = T::lit(FD_STEP);
        let rows = probes
            .par_iter()
            .map(|&z| -> Result<ResidualRow<T>> {
                let u = self.raw(form, z)? * c0;
                let du = self.raw_dbar(form, z, h)? * c0;
                let w = form.eval(z);
                Ok(ResidualRow {
                    z,
                    u,
                    error: (du - w).norm(),
                    w: w.norm(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(DbarSolution {
            form: form.clone(),
            c0,
            options: self.options,
            rows,
        })
    }

    /// `‖A_φ(ω)‖_{p,φ} / ‖ω‖_{p,φ}` under `rule`; zero for the zero form.
    pub fn verify_lp_bound(&self, form: &ZeroOneForm<T>, p: T, rule: &PlaneRule<T>) -> Result<LpBound<T>> {
        if !(p >= T::one()) {
            return Err(Error::arg("p", "must satisfy p >= 1"));
        }
        let weight = match &self.factor {
            KernelFactor::Weighted(w) => w.clone(),
            KernelFactor::Cauchy => {
                return Err(Error::Capability("weighted norms need a weighted solver".into()))
            }
        };
        let nodes = rule.nodes();
        let wts = rule.weights();
        let omega: Vec<Cplx<T>> = nodes.iter().map(|z| form.eval(*z)).collect();
        let den_terms = |vals: &[Cplx<T>]| {
            pairwise_fold(vals.len(), &|i| {
                wts[i] * (vals[i].norm() * (-weight.phi(nodes[i])).exp()).powf(p)
            })
            .powf(p.recip())
        };
        let den = den_terms(&omega);
        if den == T::zero() {
            return Ok(LpBound {
                p,
                solution_norm: T::zero(),
                form_norm: T::zero(),
                ratio: T::zero(),
            });
        }
        let u = self.apply_many(form, nodes)?;
        let num = den_terms(&u);
        Ok(LpBound {
            p,
            solution_norm: num,
            form_norm: den,
            ratio: num / den,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpBound<T: Real> {
    pub p: T,
    pub solution_norm: T,
    pub form_norm: T,
    pub ratio: T,
}

/// `(probe, u, |∂̄u − ω|, |ω|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRow<T: Real> {
    pub z: Cplx<T>,
    pub u: Cplx<T>,
    pub error: T,
    pub w: T,
}

/// Values of `A_φ(ω)` on probes; always carries its residual rows.
#[derive(Debug, Clone)]
pub struct DbarSolution<T: Real> {
    pub form: ZeroOneForm<T>,
    pub c0: Cplx<T>,
    pub options: SolverOptions<T>,
    pub rows: Vec<ResidualRow<T>>,
}

impl<T: Real> DbarSolution<T> {
    pub fn max_error(&self) -> T {
        self.rows.iter().map(|r| r.error).fold(T::zero(), T::max)
    }

    pub fn max_form(&self) -> T {
        self.rows.iter().map(|r| r.w).fold(T::zero(), T::max)
    }

    /// `max |∂̄u − ω| / max |ω|`.
    pub fn relative_residual(&self) -> T {
        let m = self.max_form();
        if m > T::zero() {
            self.max_error() / m
        } else {
            self.max_error()
        }
    }
}

/// Default calibration probes: a 3×3 grid on `[−1, 1]²` and four points
/// near the circle of radius 2.
pub fn calibration_probes<T: Real>() -> Vec<Cplx<T>> {
    let mut out = Vec::new();
    for s in -1..=1 {
        for m in -1..=1 {
            out.push(c(T::lit(m as f64), T::lit(s as f64)));
        }
    }
    for (re, im) in [(1.4, 1.4), (-1.4, 1.4), (-1.4, -1.4), (1.4, -1.4)] {
        out.push(c(T::lit(re), T::lit(im)));
    }
    out
}

/// Decay of `∂̄f` for the built-in families.
pub fn dbar_decay<T: Real>(f: &Symbol<T>) -> DecayTag<T> {
    let origin = c(T::zero(), T::zero());
    match f.family() {
        Family::HoloPoly(_) => DecayTag::Compact(T::zero()),
        Family::ConjLinear | Family::Mixed { .. } => DecayTag::Gaussian {
            rate: T::zero(),
            center: origin,
            slope: T::zero(),
        },
        Family::ConjGaussian { beta } => DecayTag::Gaussian {
            rate: *beta,
            center: origin,
            slope: T::lit(2.0),
        },
        Family::Bump { radius } => DecayTag::Compact(*radius),
        Family::Step { .. } | Family::Custom(_) => DecayTag::Unknown,
    }
}

/// `g = Σ_j a_j K(·, z_j)` for the Gaussian kernel `(α/π) e^{α ξ z̄_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpan<T: Real> {
    pub alpha: T,
    pub points: Vec<Cplx<T>>,
    pub coeffs: Vec<Cplx<T>>,
}

impl<T: Real> KernelSpan<T> {
    pub fn new(alpha: T, points: Vec<Cplx<T>>, coeffs: Vec<Cplx<T>>) -> Result<Self> {
        if points.len() != coeffs.len() || points.is_empty() {
            return Err(Error::arg("coeffs", "need one coefficient per kernel point"));
        }
        Ok(Self { alpha, points, coeffs })
    }

    pub fn eval(&self, xi: Cplx<T>) -> Cplx<T> {
        let k = self.alpha / T::PI();
        self.points
            .iter()
            .zip(&self.coeffs)
            .fold(c(T::zero(), T::zero()), |acc, (p, a)| acc + *a * (xi * p.conj() * self.alpha).exp() * k)
    }

    /// Bound `|g(ξ)| ≲ e^{slope |ξ|}`.
    pub fn slope(&self) -> T {
        self.alpha * self.points.iter().map(|p| p.norm()).fold(T::zero(), T::max)
    }
}

/// The form `g ∂̄f`.
pub fn product_form<T: Real>(f: &Symbol<T>, g: &KernelSpan<T>) -> Result<ZeroOneForm<T>> {
    if !f.has_dbar() {
        return Err(Error::Capability(format!("symbol `{}` has no ∂̄f", f.id())));
    }
    let decay = match dbar_decay(f) {
        DecayTag::Gaussian { rate, center, slope } => DecayTag::Gaussian {
            rate,
            center,
            slope: slope + g.slope(),
        },
        other => other,
    };
    let (f, g) = (f.clone(), g.clone());
    Ok(ZeroOneForm::new(
        move |xi| g.eval(xi) * f.dbar(xi).unwrap_or_default(),
        decay,
    ))
}

/// Both sides of `H_f g = A_φ(g∂̄f) − P A_φ(g∂̄f)` on the nodes of `rule`.
#[derive(Debug, Clone)]
pub struct HankelIdentity<T: Real> {
    /// `A_φ(g∂̄f) − P(A_φ(g∂̄f))` at the rule nodes.
    pub via_dbar: Vec<Cplx<T>>,
    /// `fg − P(fg)` at the rule nodes.
    pub direct: Vec<Cplx<T>>,
    pub difference_norm: T,
    pub direct_norm: T,
    /// `‖lhs − rhs‖_{2,φ} / ‖rhs‖_{2,φ}` (absolute when `rhs` vanishes).
    pub relative_error: T,
}

/// Evaluates `H_f g` through the ∂̄ solver and directly, with `P` the
/// projection onto the span of `basis`.
pub fn hankel_via_dbar<T: Real>(
    solver: &DbarSolver<T>,
    f: &Symbol<T>,
    g: &KernelSpan<T>,
    basis: &FockBasis<T>,
    rule: &PlaneRule<T>,
) -> Result<HankelIdentity<T>> {
    let nodes = rule.nodes();
    let form = product_form(f, g)?;
    let u = solver.apply_many(&form, nodes)?;
    let fg: Vec<Cplx<T>> = nodes.iter().map(|z| f.eval(*z) * g.eval(*z)).collect();
    let residual = |vals: &[Cplx<T>]| -> Result<Vec<Cplx<T>>> {
        let coeffs = basis.project_values(vals, rule)?;
        Ok(nodes
            .iter()
            .zip(vals)
            .map(|(z, v)| *v - basis.combine(&coeffs, *z))
            .collect())
    };
    let via_dbar = residual(&u)?;
    let direct = residual(&fg)?;
    let weight = basis.weight();
    let wts = rule.weights();
    let norm = |vals: &dyn Fn(usize) -> Cplx<T>| {
        pairwise_fold(nodes.len(), &|i| wts[i] * vals(i).norm_sqr() * weight.density(nodes[i])).sqrt()
    };
    let difference_norm = norm(&|i| via_dbar[i] - direct[i]);
    let direct_norm = norm(&|i| direct[i]);
    let relative_error = if direct_norm > T::zero() {
        difference_norm / direct_norm
    } else {
        difference_norm
    };
    Ok(HankelIdentity {
        via_dbar,
        direct,
        difference_norm,
        direct_norm,
        relative_error,
    })
}

/// Resolution of [`cauchy_on_rule`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarGrid<T: Real> {
    /// Angular samples per source circle; the transform keeps modes below half of it.
    pub angular: usize,
    /// Maximal radial panel length.
    pub panel: T,
    pub panel_points: usize,
}

impl<T: Real> Default for PolarGrid<T> {
    fn default() -> Self {
        Self {
            angular: 192,
            panel: T::lit(0.2),
            panel_points: 12,
        }
    }
}

/// Angular Fourier coefficients `ĝ_n(s)`, `n = -M/2 .. M/2`, stored at
/// index `n + M/2`.
fn circle_modes<T: Real>(g: &(dyn Fn(Cplx<T>) -> Cplx<T> + Sync), s: T, m: usize, twiddle: &[Cplx<T>]) -> Vec<Cplx<T>> {
    let samples: Vec<Cplx<T>> = (0..m).map(|l| g(twiddle[l] * s)).collect();
    let half = m / 2;
    let inv = T::one() / T::from_count(m);
    (0..m)
        .map(|idx| {
            let n = idx as i64 - half as i64;
            let mut acc = c(T::zero(), T::zero());
            for (l, v) in samples.iter().enumerate() {
                let p = (n * l as i64).rem_euclid(m as i64) as usize;
                acc += *v * twiddle[p].conj();
            }
            acc * inv
        })
        .collect()
}

fn radial_panels<T: Real>(lo: T, hi: T, breaks: &[T], panel: T) -> Vec<(T, T)> {
    let mut cuts = vec![lo];
    let mut b: Vec<T> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.extend(b);
    cuts.push(hi);
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let n = ((w[1] - w[0]) / panel).ceil().to_usize().unwrap_or(1).max(1);
        let h = (w[1] - w[0]) / T::from_count(n);
        for k in 0..n {
            out.push((w[0] + h * T::from_count(k), w[0] + h * T::from_count(k + 1)));
        }
    }
    out
}

/// Cauchy transform `C[g](z) = (1/π) ∫ g(ξ) / (z − ξ) dA(ξ)` of a function
/// vanishing outside `|ξ| ≤ support`, evaluated at every node of `rule`.
///
/// Expands `1/(ξ − z)` in angular Fourier modes on each target circle, so
/// one set of radial integrals serves all nodes of that circle. Source
/// panels containing a target radius are split there. `breaks` are radii
/// where `g` has reduced smoothness.
pub fn cauchy_on_rule<T: Real>(
    g: &(dyn Fn(Cplx<T>) -> Cplx<T> + Sync),
    support: T,
    breaks: &[T],
    rule: &PlaneRule<T>,
    grid: PolarGrid<T>,
) -> Result<Vec<Cplx<T>>> {
    if !(support > T::zero()) {
        return Ok(vec![c(T::zero(), T::zero()); rule.len()]);
    }
    if grid.angular < 8 || grid.angular % 2 != 0 || !(grid.panel > T::zero()) {
        return Err(Error::arg("grid", "needs an even angular count ≥ 8 and a positive panel"));
    }
    let m = grid.angular;
    let half = m / 2;
    let two_pi = T::PI() + T::PI();
    let twiddle: Vec<Cplx<T>> = (0..m)
        .map(|l| Cplx::from_polar(T::one(), two_pi * T::from_count(l) / T::from_count(m)))
        .collect();
    let (gx, gw) = gauss_legendre::<T>(grid.panel_points.max(2));
    let halfc = T::lit(0.5);
    // (radius, weight) nodes of a segment
    let segment = |a: T, b: T| -> Vec<(T, T)> {
        let h = (b - a) * halfc;
        gx.iter().zip(&gw).map(|(x, w)| (a + h * (*x + T::one()), *w * h)).collect()
    };
    let panels = radial_panels(T::zero(), support, breaks, grid.panel);
    let fixed: Vec<Vec<(T, T, Vec<Cplx<T>>)>> = panels
        .par_iter()
        .map(|(a, b)| {
            segment(*a, *b)
                .into_iter()
                .map(|(s, w)| (s, w, circle_modes(g, s, m, &twiddle)))
                .collect()
        })
        .collect();

    let (radii, _) = rule.radial_nodes();
    let angular = rule.angular_count();
    let dtheta = two_pi / T::from_count(angular);
    let per_radius: Vec<Vec<Cplx<T>>> = radii
        .par_iter()
        .map(|&r| {
            let zero = c(T::zero(), T::zero());
            // a_k = ∫_{s>r} (r/s)^k ĝ_{k+1} ds, b_k = ∫_{s<r} (s/r)^{k+1} ĝ_{-k} ds
            let mut a = vec![zero; half - 1];
            let mut b = vec![zero; half];
            let add = |s: T, w: T, modes: &[Cplx<T>], a: &mut [Cplx<T>], b: &mut [Cplx<T>]| {
                if s > r {
                    let q = r / s;
                    let mut p = T::one();
                    for (k, slot) in a.iter_mut().enumerate() {
                        *slot += modes[half + k + 1] * (p * w);
                        p *= q;
                        if p == T::zero() {
                            break;
                        }
                    }
                } else {
                    let q = s / r;
                    let mut p = q;
                    for (k, slot) in b.iter_mut().enumerate() {
                        *slot += modes[half - k] * (p * w);
                        p *= q;
                        if p == T::zero() {
                            break;
                        }
                    }
                }
            };
            for ((lo, hi), nodes) in panels.iter().zip(&fixed) {
                if r > *lo && r < *hi {
                    for (s, w) in segment(*lo, r).into_iter().chain(segment(r, *hi)) {
                        let modes = circle_modes(g, s, m, &twiddle);
                        add(s, w, &modes, &mut a, &mut b);
                    }
                } else {
                    for (s, w, modes) in nodes {
                        add(*s, *w, modes, &mut a, &mut b);
                    }
                }
            }
            let two = T::lit(2.0);
            (0..angular)
                .map(|j| {
                    let e = Cplx::from_polar(T::one(), dtheta * T::from_count(j));
                    let mut pos = c(T::one(), T::zero());
                    let mut acc = zero;
                    for ak in &a {
                        acc -= *ak * pos;
                        pos *= e;
                    }
                    let ec = e.conj();
                    let mut neg = ec;
                    for bk in &b {
                        acc += *bk * neg;
                        neg *= ec;
                    }
                    acc * two
                })
                .collect()
        })
        .collect();
    let out: Vec<Cplx<T>> = per_radius.into_iter().flatten().collect();
    if out.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Consistency("non-finite Cauchy transform".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(re: f64, im: f64) -> Cplx<f64> {
        Cplx::new(re, im)
    }

    fn calibrated() -> DbarSolver<f64> {
        let mut s = DbarSolver::new(&WeightModel::gaussian(1.0).unwrap()).unwrap();
        s.calibrate(&GaussianPotential::default_family(), &calibration_probes()).unwrap();
        s
    }

    #[test]
    fn uncalibrated_solver_refuses() {
        let s = DbarSolver::new(&WeightModel::gaussian(1.0).unwrap()).unwrap();
        let form = GaussianPotential::default_family()[0].form();
        assert!(matches!(s.apply(&form, z(0.0, 0.0)), Err(Error::Uncalibrated)));
    }

    #[test]
    fn zero_form_gives_zero() {
        let s = calibrated();
        assert_eq!(s.apply(&ZeroOneForm::zero(), z(0.3, 0.1)).unwrap(), z(0.0, 0.0));
    }

    #[test]
    fn calibration_selects_minus_one_over_pi() {
        let s = calibrated();
        let c0 = s.orientation().unwrap();
        assert!((c0 - z(-1.0 / std::f64::consts::PI, 0.0)).norm() < 1e-15);
        let mut again = s.clone();
        let rep = again
            .calibrate(&GaussianPotential::default_family(), &calibration_probes())
            .unwrap();
        assert_eq!(rep.c0, c0);
        assert_eq!(rep.passing, 1);
        assert!(rep.residual < 1e-3);
    }

    #[test]
    fn solution_property_on_test_forms() {
        let s = calibrated();
        let probes = crate::fock::probe_disc(2.0, 3, 6);
        for pot in GaussianPotential::default_family() {
            let sol = s.solve(&pot.form(), &probes).unwrap();
            assert!(sol.relative_residual() < 1e-3, "{}", sol.relative_residual());
        }
    }

    #[test]
    fn linearity() {
        let s = calibrated();
        let fam = GaussianPotential::<f64>::default_family();
        let (w1, w2) = (fam[0].form(), fam[1].form());
        let (a, b) = (z(0.5, -1.0), z(2.0, 0.25));
        let combo = w1.scaled(a).plus(&w2.scaled(b));
        for p in [z(0.2, 0.1), z(-1.0, 0.7)] {
            let lhs = s.apply(&combo, p).unwrap();
            let rhs = s.apply(&w1, p).unwrap() * a + s.apply(&w2, p).unwrap() * b;
            assert!((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
        }
    }

    #[test]
    fn refinement_changes_little() {
        let s = calibrated();
        let fine = s.clone().with_options(SolverOptions {
            refine: 2.0,
            ..SolverOptions::default()
        });
        let form = GaussianPotential::default_family()[2].form();
        for p in [z(0.0, 0.0), z(1.2, -0.6), z(-2.0, 1.0)] {
            let a = s.apply(&form, p).unwrap();
            let b = fine.apply(&form, p).unwrap();
            assert!((a - b).norm() <= 1e-4 * b.norm().max(1e-12));
        }
    }

    #[test]
    fn undecaying_forms_are_refused() {
        let mut s = DbarSolver::<f64>::cauchy();
        s.set_orientation(z(-1.0 / std::f64::consts::PI, 0.0));
        let flat = ZeroOneForm::new(
            |_| z(1.0, 0.0),
            DecayTag::Gaussian { rate: 0.0, center: z(0.0, 0.0), slope: 0.0 },
        );
        assert!(matches!(s.apply(&flat, z(0.0, 0.0)), Err(Error::DecayNotCertified(_))));
        let unknown = ZeroOneForm::new(|_| z(1.0, 0.0), DecayTag::Unknown);
        assert!(matches!(s.apply(&unknown, z(0.0, 0.0)), Err(Error::DecayNotCertified(_))));
    }

    #[test]
    fn cauchy_transform_inverts_dbar() {
        // for φ ≡ 0 the solution of ∂̄u = ∂̄v that decays is v itself
        let mut s = DbarSolver::<f64>::cauchy();
        s.set_orientation(z(-1.0 / std::f64::consts::PI, 0.0));
        let pot = &GaussianPotential::default_family()[0];
        for p in [z(0.0, 0.0), z(0.7, -0.3), z(-1.5, 1.0)] {
            let u = s.apply(&pot.form(), p).unwrap();
            assert!((u - pot.eval(p)).norm() < 1e-10);
        }
    }

    #[test]
    fn lp_ratio_is_homogeneous() {
        let s = calibrated();
        let rule = PlaneRule::gaussian(12, 1.0).unwrap();
        let form = GaussianPotential::default_family()[0].form();
        let a = s.verify_lp_bound(&form, 2.0, &rule).unwrap();
        let b = s.verify_lp_bound(&form.scaled(z(2.0, 0.0)), 2.0, &rule).unwrap();
        assert!(a.ratio.is_finite() && a.ratio > 0.0);
        assert!((a.ratio - b.ratio).abs() < 1e-10 * a.ratio);
        assert_eq!(s.verify_lp_bound(&ZeroOneForm::zero(), 2.0, &rule).unwrap().ratio, 0.0);
    }

    fn fock_setup(degree: usize) -> (FockBasis<f64>, PlaneRule<f64>) {
        let w = WeightModel::gaussian(1.0).unwrap();
        let rule = PlaneRule::gaussian(2 * degree + 4, 1.0).unwrap();
        (FockBasis::build(&w, degree, &rule).unwrap(), rule)
    }

    #[test]
    fn hankel_identity_vanishes_for_holomorphic_symbols() {
        let s = calibrated();
        let (basis, rule) = fock_setup(12);
        let f = Symbol::holo_poly(vec![z(1.0, 0.0), z(0.0, 1.0)]);
        let g = KernelSpan::new(1.0, vec![z(0.0, 0.0)], vec![z(1.0, 0.0)]).unwrap();
        let id = hankel_via_dbar(&s, &f, &g, &basis, &rule).unwrap();
        assert!(id.difference_norm < 1e-6 && id.direct_norm < 1e-6);
    }

    #[test]
    fn hankel_identity_for_conj_gaussian() {
        let s = calibrated();
        let (basis, rule) = fock_setup(10);
        let f = Symbol::conj_gaussian(1.0).unwrap();
        let g0 = KernelSpan::new(1.0, vec![z(0.0, 0.0)], vec![z(1.0, 0.0)]).unwrap();
        let id = hankel_via_dbar(&s, &f, &g0, &basis, &rule).unwrap();
        assert!(id.relative_error <= 5e-2, "{}", id.relative_error);

        let g1 = KernelSpan::new(1.0, vec![z(0.5, -0.5)], vec![z(0.0, 1.0)]).unwrap();
        let both = KernelSpan::new(1.0, vec![z(0.0, 0.0), z(0.5, -0.5)], vec![z(1.0, 0.0), z(0.0, 1.0)]).unwrap();
        let a = hankel_via_dbar(&s, &f, &g0, &basis, &rule).unwrap();
        let b = hankel_via_dbar(&s, &f, &g1, &basis, &rule).unwrap();
        let ab = hankel_via_dbar(&s, &f, &both, &basis, &rule).unwrap();
        let w = WeightModel::gaussian(1.0).unwrap();
        let norm = |v: &dyn Fn(usize) -> Cplx<f64>| {
            (0..rule.len())
                .map(|i| rule.weights()[i] * v(i).norm_sqr() * w.density(rule.nodes()[i]))
                .sum::<f64>()
                .sqrt()
        };
        let gap = norm(&|i| ab.via_dbar[i] - a.via_dbar[i] - b.via_dbar[i]);
        assert!(gap < 1e-8 * norm(&|i| ab.via_dbar[i]), "{gap}");
    }

    #[test]
    fn polar_cauchy_of_disc_indicator() {
        let rule = PlaneRule::with_breaks(20, 1.0, &[1.5]).unwrap();
        let g = |xi: Cplx<f64>| if xi.norm() <= 1.5 { z(1.0, 0.0) } else { z(0.0, 0.0) };
        let u = cauchy_on_rule(&g, 1.5, &[], &rule, PolarGrid::default()).unwrap();
        for (x, v) in rule.nodes().iter().zip(&u) {
            let want = if x.norm() < 1.5 { x.conj() } else { x.inv() * 2.25 };
            assert!((v - want).norm() < 1e-10, "{x} {v} {want}");
        }
    }

    #[test]
    fn polar_cauchy_matches_direct_solver() {
        let mut s = DbarSolver::<f64>::cauchy();
        s.set_orientation(z(-1.0 / std::f64::consts::PI, 0.0));
        let bump = |xi: Cplx<f64>| {
            let t = 1.0 - xi.norm_sqr() / 4.0;
            if t > 0.0 {
                (xi.conj() + z(0.3, -1.0) + xi * xi) * t * t * t
            } else {
                z(0.0, 0.0)
            }
        };
        let form = ZeroOneForm::new(bump, DecayTag::Compact(2.0));
        let rule = PlaneRule::gaussian(16, 1.0).unwrap();
        let u = cauchy_on_rule(&bump, 2.0, &[], &rule, PolarGrid::default()).unwrap();
        let opts = SolverOptions { refine: 4.0, ..s.options() };
        let s = s.with_options(opts);
        for i in (0..rule.len()).step_by(37) {
            let x = rule.nodes()[i];
            let d = s.apply(&form, x).unwrap();
            assert!((u[i] - d).norm() < 1e-6 * (1.0 + d.norm()), "{x} {} {d}", u[i]);
        }
    }
}
