//! Truncated Hankel operators `H_f g = (I − P)(f g)` on the monomial basis,
//! their singular spectra, Schatten-type gauges, the compact approximants
//! `h_t = ψ_t + σ_t f₂`, and the Berezin transform of positive measures.
//!
//! The Gram matrix `G_{jk} = ⟨H_f e_j, H_f e_k⟩` is assembled as
//! `⟨f e_j, f e_k⟩ − Σ_{m ≤ D'} ⟨f e_j, e_m⟩ conj(⟨f e_k, e_m⟩)` with the
//! projection truncated at `D' = D + margin`. Every Gram carries a stability
//! certificate comparing its top singular values against `D' + 5`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::dbar::{cauchy_on_rule, DbarSolver, DecayTag, KernelFactor, PolarGrid, ZeroOneForm};
use crate::decomposition::Decomposition;
use crate::error::{Error, Result};
use crate::fock::{FockBasis, KernelEval, KernelMode};
use crate::lattice::Lattice;
use crate::linalg::{accumulate_vec, fit_line, hermitian_eigenvalues, CMatrix};
use crate::oscillation::{ida_profile, shell_points, Functional, LocalSolver, RadialProfile};
use crate::quadrature::{BallRule, PlaneRule};
use crate::scalar::{c, pairwise_fold, pairwise_sum, Cplx, Real};
use crate::symbols::{Growth, Symbol};
use crate::weight::WeightModel;

pub const DEFAULT_MARGIN: usize = 10;
/// Extra projection degrees used by the stability certificate.
pub const CERTIFICATE_EXTRA: usize = 5;
pub const CERTIFICATE_TOL: f64 = 1e-6;
/// Number of leading singular values compared by the certificate.
pub const CERTIFICATE_TOP: usize = 10;
/// Negative eigenvalues down to `-PSD_TOL · trace` are rounding.
pub const PSD_TOL: f64 = 1e-10;
/// A partial-sum sequence converges when its last quarter adds less than
/// this fraction of the total.
pub const CONVERGENCE_TOL: f64 = 1e-3;
/// Singular values and oscillation values at or below this are treated as
/// zero in gauge sums.
pub const NOISE_FLOOR: f64 = 1e-8;

fn denoise<T: Real>(x: T) -> T {
    if x <= T::lit(NOISE_FLOOR) {
        T::zero()
    } else {
        x
    }
}

/// Plane rule able to resolve `f e_j conj(e_m)` for `j ≤ D`,
/// `m ≤ D + margin + 5`, with panel breaks at the symbol's radial kinks.
pub fn gram_rule<T: Real>(weight: &WeightModel<T>, degree: usize, margin: usize, f: &Symbol<T>) -> Result<PlaneRule<T>> {
    let extra = match f.growth() {
        Growth::Polynomial(k) => 2 * k as usize,
        _ => 0,
    };
    let order = 2 * (degree + margin + CERTIFICATE_EXTRA) + extra + 4;
    PlaneRule::with_breaks(order, weight.lower_bound(), f.radial_breaks())
}

/// `max |Δs_k|` over the top singular values when the projection margin
/// grows by [`CERTIFICATE_EXTRA`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityCertificate<T: Real> {
    pub margin: usize,
    pub bumped_margin: usize,
    pub max_shift: T,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct HankelGram<T: Real> {
    matrix: CMatrix<T>,
    eigenvalues: Vec<T>,
    degree: usize,
    margin: usize,
    rule_order: usize,
    certificate: StabilityCertificate<T>,
    // Σ ‖f e_j‖², the scale of rounding in the subtraction
    raw_trace: T,
}

impl<T: Real> HankelGram<T> {
    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn get(&self, j: usize, k: usize) -> Cplx<T> {
        self.matrix.get(j, k)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    /// `D' = D + margin`.
    pub fn projection_degree(&self) -> usize {
        self.degree + self.margin
    }

    pub fn rule_order(&self) -> usize {
        self.rule_order
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..=self.degree).map(|k| self.matrix.get(k, k).re).collect()
    }

    pub fn trace(&self) -> T {
        self.matrix.trace().re
    }

    /// Eigenvalues, descending.
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    /// `λ_min / trace` (zero for the zero matrix).
    pub fn psd_defect(&self) -> T {
        let tr = self.trace();
        let low = self.eigenvalues.last().copied().unwrap_or(T::zero());
        if tr > T::zero() {
            low / tr
        } else {
            low.min(T::zero())
        }
    }

    pub fn certificate(&self) -> StabilityCertificate<T> {
        self.certificate
    }

    /// Eigenvalues above `-tolerance` count as zero.
    pub fn psd_tolerance(&self) -> T {
        (T::lit(PSD_TOL) * self.trace()).max(T::lit(64.0) * T::epsilon() * self.raw_trace)
    }
}

/// Gram matrix of `H_f` on `e_0, …, e_D` with `D = basis.degree()`.
///
/// Refuses symbols whose Gaussian growth the rule cannot absorb.
pub fn build_hankel_gram<T: Real>(
    f: &Symbol<T>,
    basis: &FockBasis<T>,
    margin: usize,
    rule: &PlaneRule<T>,
) -> Result<HankelGram<T>> {
    if let Growth::Gaussian(gamma) = f.growth() {
        let decay = basis.weight().lower_bound() - T::lit(2.0) * gamma;
        let needed = T::lit(2.0) * T::lit(1e17).ln();
        if !(decay > T::zero()) || decay * rule.r_cut() * rule.r_cut() < needed {
            return Err(Error::Refused(format!(
                "|f|² grows like e^{{{}|z|²}}, beyond what the weighted rule integrates",
                (T::lit(2.0) * gamma).as_f64()
            )));
        }
    }
    let mut values = Vec::with_capacity(rule.len());
    for &z in rule.nodes() {
        values.push(f.eval_checked(z)?);
    }
    gram_from_values(&values, basis.weight(), basis.degree(), margin, rule)
}

/// As [`build_hankel_gram`] from symbol values sampled at the rule nodes.
pub fn gram_from_values<T: Real>(
    values: &[Cplx<T>],
    weight: &WeightModel<T>,
    degree: usize,
    margin: usize,
    rule: &PlaneRule<T>,
) -> Result<HankelGram<T>> {
    if values.len() != rule.len() {
        return Err(Error::arg("values", "length must match the plane rule"));
    }
    if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::eval("symbol", rule.nodes()[i]));
    }
    let top = degree + margin + CERTIFICATE_EXTRA;
    let basis = FockBasis::build(weight, top, rule)?;
    let n = degree + 1;
    let mdim = top + 1;
    let nodes = rule.nodes();
    let wts = rule.weights();
    let zero = c(T::zero(), T::zero());
    // pass 1: ⟨f e_j, e_m⟩ for m ≤ top, and Σ ‖f e_j‖²
    let proj = accumulate_vec(nodes.len(), mdim * n + 1, |i, acc| {
        let v = values[i];
        if v == zero {
            return;
        }
        let om = wts[i] * weight.density(nodes[i]);
        let e = basis.eval_all(nodes[i]);
        for (m, em) in e.iter().enumerate() {
            let em = em.conj() * om;
            for j in 0..n {
                acc[m * n + j] += v * e[j] * em;
            }
        }
        let sq: T = e[..n].iter().map(|x| (v * *x).norm_sqr()).sum();
        acc[mdim * n] += c(sq * om, T::zero());
    });
    let raw_trace = proj[mdim * n].re;
    // pass 2: Gram of the residuals f e_j − Σ_{m ≤ cap} ⟨f e_j, e_m⟩ e_m
    let gram_at = |cap: usize| {
        let acc = accumulate_vec(nodes.len(), n * n, |i, acc| {
            let om = wts[i] * weight.density(nodes[i]);
            let e = basis.eval_all(nodes[i]);
            let v = values[i];
            let res: Vec<Cplx<T>> = (0..n)
                .map(|j| {
                    let mut r = v * e[j];
                    for m in 0..=cap {
                        r -= proj[m * n + j] * e[m];
                    }
                    r
                })
                .collect();
            for j in 0..n {
                let a = res[j] * om;
                for k in 0..n {
                    acc[j * n + k] += a * res[k].conj();
                }
            }
        });
        let mut g = CMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                g.set(j, k, acc[j * n + k]);
            }
        }
        g
    };
    let matrix = gram_at(degree + margin);
    let bumped = gram_at(top);
    let eigenvalues = hermitian_eigenvalues(&matrix);
    let bumped_eigs = hermitian_eigenvalues(&bumped);
    let sv = |e: &[T]| -> Vec<T> { e.iter().map(|x| x.max(T::zero()).sqrt()).collect() };
    let max_shift = sv(&eigenvalues)
        .iter()
        .zip(sv(&bumped_eigs))
        .take(CERTIFICATE_TOP)
        .fold(T::zero(), |m, (a, b)| m.max((*a - b).abs()));
    Ok(HankelGram {
        matrix,
        eigenvalues,
        degree,
        margin,
        rule_order: rule.order(),
        raw_trace,
        certificate: StabilityCertificate {
            margin,
            bumped_margin: margin + CERTIFICATE_EXTRA,
            max_shift,
            passed: max_shift < T::lit(CERTIFICATE_TOL),
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularSpectrum<T: Real> {
    /// `s_1 ≥ s_2 ≥ … ≥ s_{D+1} ≥ 0`.
    pub values: Vec<T>,
    pub degree: usize,
    pub projection_degree: usize,
    pub rule_order: usize,
    pub certificate: StabilityCertificate<T>,
}

impl<T: Real> SingularSpectrum<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `s_1`, the norm of the truncated operator.
    pub fn top(&self) -> T {
        self.values.first().copied().unwrap_or(T::zero())
    }
}

pub fn singular_spectrum<T: Real>(g: &HankelGram<T>) -> Result<SingularSpectrum<T>> {
    if let Some(&low) = g.eigenvalues.last() {
        if low < -g.psd_tolerance() {
            return Err(Error::Consistency(format!(
                "Gram eigenvalue {:e} below the PSD tolerance {:e}",
                low.as_f64(),
                g.psd_tolerance().as_f64()
            )));
        }
    }
    Ok(SingularSpectrum {
        values: g.eigenvalues.iter().map(|x| x.max(T::zero()).sqrt()).collect(),
        degree: g.degree,
        projection_degree: g.projection_degree(),
        rule_order: g.rule_order,
        certificate: g.certificate,
    })
}

/// Partial sums of a nonnegative series with the last-quartile tail test.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesReport<T: Real> {
    pub partial: Vec<T>,
    pub total: T,
    /// Share of the total contributed by the last quarter of the terms.
    pub tail_ratio: T,
    pub convergent: bool,
}

pub fn series_report<T: Real>(terms: &[T]) -> SeriesReport<T> {
    let mut partial = Vec::with_capacity(terms.len());
    let mut s = T::zero();
    for t in terms {
        s += *t;
        partial.push(s);
    }
    let cut = (3 * terms.len()) / 4;
    let before = if cut == 0 { T::zero() } else { partial[cut - 1] };
    let tail_ratio = if s > T::zero() { (s - before) / s } else { T::zero() };
    SeriesReport {
        partial,
        total: s,
        tail_ratio,
        convergent: tail_ratio < T::lit(CONVERGENCE_TOL),
    }
}

/// Gauge families for `S_h`.
#[derive(Debug, Clone, PartialEq)]
pub enum GaugeFamily<T: Real> {
    /// `h(t) = t^p`.
    Power(T),
    /// `h(t) = e^{t²} − 1`.
    ExpMinusOne,
    /// Piecewise linear through the given `(t, h)` knots, linear beyond the
    /// last one.
    Grid(Vec<(T, T)>),
}

impl<T: Real> GaugeFamily<T> {
    pub fn id(&self) -> &'static str {
        match self {
            GaugeFamily::Power(_) => "power",
            GaugeFamily::ExpMinusOne => "exp-minus-one",
            GaugeFamily::Grid(_) => "custom-grid",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchattenGauge<T: Real> {
    family: GaugeFamily<T>,
    /// `h(√·)` passed the midpoint convexity test on the check grid.
    pub sqrt_convex: bool,
    pub grid_max: T,
}

impl<T: Real> SchattenGauge<T> {
    /// Checks `h(0) = 0` and monotonicity on `[0, grid_max]` (errors) and
    /// convexity of `h(√·)` (recorded in `sqrt_convex`).
    pub fn new(family: GaugeFamily<T>, grid_max: T) -> Result<Self> {
        match &family {
            GaugeFamily::Power(p) if !(*p > T::zero()) => return Err(Error::arg("gauge.p", "must be positive")),
            GaugeFamily::Grid(knots) => {
                if knots.len() < 2 || knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::arg("gauge.grid", "needs at least two knots with increasing t"));
                }
            }
            _ => {}
        }
        if !(grid_max > T::zero()) {
            return Err(Error::arg("gauge.grid_max", "must be positive"));
        }
        let mut g = Self {
            family,
            sqrt_convex: true,
            grid_max,
        };
        if g.eval(T::zero()).abs() > T::lit(1e-12) {
            return Err(Error::arg("gauge", "h(0) must vanish"));
        }
        let n = 400;
        let u: Vec<T> = (0..=n).map(|i| grid_max * grid_max * T::from_count(i) / T::from_count(n)).collect();
        let hs: Vec<T> = u.iter().map(|x| g.eval(x.sqrt())).collect();
        if hs.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::arg("gauge", "h must be increasing"));
        }
        let scale = hs[n].abs().max(T::one());
        g.sqrt_convex = (1..n).all(|i| {
            let mid = g.eval(((u[i - 1] + u[i + 1]) * T::lit(0.5)).sqrt());
            mid <= (hs[i - 1] + hs[i + 1]) * T::lit(0.5) + T::lit(1e-10) * scale
        });
        Ok(g)
    }

    pub fn power(p: T) -> Result<Self> {
        Self::new(GaugeFamily::Power(p), T::lit(4.0))
    }

    pub fn family(&self) -> &GaugeFamily<T> {
        &self.family
    }

    pub fn eval(&self, t: T) -> T {
        match &self.family {
            GaugeFamily::Power(p) => t.max(T::zero()).powf(*p),
            GaugeFamily::ExpMinusOne => (t * t).exp_m1(),
            GaugeFamily::Grid(knots) => {
                let seg = knots
                    .windows(2)
                    .find(|w| t <= w[1].0)
                    .unwrap_or(&knots[knots.len() - 2..]);
                let (t0, h0) = seg[0];
                let (t1, h1) = seg[1];
                h0 + (h1 - h0) * (t - t0) / (t1 - t0)
            }
        }
    }
}

/// `Σ_{k ≤ K} h(c s_k)` with convergence diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SchattenSum<T: Real> {
    pub c: T,
    pub series: SeriesReport<T>,
}

pub fn schatten_sum<T: Real>(s: &SingularSpectrum<T>, gauge: &SchattenGauge<T>, c: T) -> SchattenSum<T> {
    let terms: Vec<T> = s.values.iter().map(|x| gauge.eval(c * denoise(*x))).collect();
    SchattenSum {
        c,
        series: series_report(&terms),
    }
}

/// Projection basis and plane rule for `‖H_f k_z‖`.
///
/// `k_z` is the basis-sum kernel over `e_0, …, e_{D_k}`; the projection
/// uses `D_k + margin` functions, so `H_f k_z` vanishes exactly for
/// holomorphic polynomials of degree at most `margin`.
#[derive(Debug, Clone)]
pub struct KernelProbe<T: Real> {
    projection: FockBasis<T>,
    kernel: KernelEval<T>,
    rule: PlaneRule<T>,
}

impl<T: Real> KernelProbe<T> {
    pub fn new(weight: &WeightModel<T>, kernel_degree: usize, margin: usize, breaks: &[T]) -> Result<Self> {
        let top = kernel_degree + margin;
        let rule = PlaneRule::with_breaks(2 * top + 6, weight.lower_bound(), breaks)?;
        let projection = FockBasis::build(weight, top, &rule)?;
        let kernel = KernelEval::new(projection.with_degree(kernel_degree)?, KernelMode::BasisSum)?;
        Ok(Self {
            projection,
            kernel,
            rule,
        })
    }

    /// Kernel degree covering `|z| ≤ radius` for a Gaussian weight: the
    /// Poisson tail of `k_z` beyond it is below `1e-16`.
    pub fn covering(weight: &WeightModel<T>, radius: T, margin: usize, breaks: &[T]) -> Result<Self> {
        let alpha = weight.gaussian_alpha().unwrap_or_else(|| weight.lower_bound());
        let x = (alpha * radius * radius).as_f64();
        let mut d = (x + 10.0 * x.sqrt() + 20.0).ceil() as usize;
        while poisson_tail(x, d) > 1e-16 {
            d += 2;
        }
        Self::new(weight, d, margin, breaks)
    }

    pub fn kernel_degree(&self) -> usize {
        self.kernel.basis().degree()
    }

    pub fn projection(&self) -> &FockBasis<T> {
        &self.projection
    }

    pub fn rule(&self) -> &PlaneRule<T> {
        &self.rule
    }

    /// `‖k_z − P_{D_k} k_z‖²` of the exact Gaussian kernel; zero for other weights.
    pub fn truncation(&self, z: Cplx<T>) -> T {
        match self.kernel.weight().gaussian_alpha() {
            Some(alpha) => T::lit(poisson_tail((alpha * z.norm_sqr()).as_f64(), self.kernel_degree())),
            None => T::zero(),
        }
    }
}

/// `P(N > d)` for `N ~ Poisson(x)`.
fn poisson_tail(x: f64, d: usize) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let mut term = (-x).exp();
    let mut head = term;
    for k in 1..=d {
        term *= x / k as f64;
        head += term;
    }
    // sum the tail directly to avoid cancellation in 1 − head
    let mut tail = 0.0;
    let mut t = term;
    for k in d + 1..d + 2000 {
        t *= x / k as f64;
        tail += t;
        if t < 1e-300 || t < tail * 1e-17 {
            break;
        }
    }
    if head >= 1.0 {
        tail
    } else {
        tail.max(0.0)
    }
}

/// `‖H_f k_z‖_{q,φ}` with `H_f k_z = f k_z − P(f k_z)` sampled at the rule
/// nodes.
pub fn hankel_on_kernel<T: Real>(f: &Symbol<T>, z: Cplx<T>, q: T, probe: &KernelProbe<T>) -> Result<T> {
    if !(q >= T::one()) || !q.is_finite() {
        return Err(Error::arg("q", "must lie in [1, ∞)"));
    }
    if probe.truncation(z) > T::lit(1e-14) {
        return Err(Error::Capability(format!(
            "kernel degree {} does not cover |z| = {}",
            probe.kernel_degree(),
            z.norm()
        )));
    }
    let kz = probe.kernel.normalized_kernel(z)?;
    let rule = &probe.rule;
    let basis = &probe.projection;
    let weight = basis.weight();
    let nodes = rule.nodes();
    let mut g = Vec::with_capacity(nodes.len());
    for &w in nodes {
        g.push(f.eval_checked(w)? * kz.eval(w));
    }
    let coeffs = basis.project_values(&g, rule)?;
    let wts = rule.weights();
    let sum = pairwise_fold(nodes.len(), &|i| {
        let w = nodes[i];
        let r = (g[i] - basis.combine(&coeffs, w)) * (-weight.phi(w)).exp();
        wts[i] * r.norm().powf(q)
    });
    let v = sum.powf(T::one() / q);
    if !v.is_finite() {
        return Err(Error::eval("‖H_f k_z‖", z));
    }
    Ok(v)
}

/// Per-shell maxima of `‖H_f k_z‖_{q,φ}`.
pub fn kz_profile<T: Real>(
    f: &Symbol<T>,
    q: T,
    shells: &[T],
    per_shell: usize,
    probe: &KernelProbe<T>,
) -> Result<RadialProfile<T>> {
    if shells.is_empty() || shells.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::arg("shells", "must be a non-empty increasing list"));
    }
    let (points, shell_of) = shell_points(shells, per_shell.max(1));
    let values = points
        .par_iter()
        .map(|z| hankel_on_kernel(f, *z, q, probe))
        .collect::<Result<Vec<_>>>()?;
    let shell_max = shells
        .iter()
        .map(|rho| {
            shell_of
                .iter()
                .zip(&values)
                .filter(|(s, _)| *s == rho)
                .fold(T::zero(), |m, (_, v)| m.max(*v))
        })
        .collect();
    Ok(RadialProfile {
        functional: Functional::KernelHankel,
        r: T::zero(),
        q,
        d: probe.kernel_degree(),
        points,
        shell_of,
        values,
        shells: shells.to_vec(),
        shell_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EssentialTail<T: Real> {
    /// Median of `s_k` over the plateau window.
    pub estimate: T,
    /// 1-based inclusive index window.
    pub window: (usize, usize),
    /// Least-squares slope of `s_k` against `k` on the window.
    pub slope: T,
    pub reliable: bool,
}

/// Plateau estimate of `lim s_k`; the default window is `[D/2, 3D/4]`.
///
/// Flagged unreliable when the fitted line changes by more than a quarter
/// of the estimate across the window.
pub fn essential_norm_tail<T: Real>(s: &SingularSpectrum<T>, window: Option<(usize, usize)>) -> Result<EssentialTail<T>> {
    let d = s.degree;
    let (lo, hi) = window.unwrap_or(((d / 2).max(1), (3 * d / 4).max(1)));
    if lo < 1 || hi < lo || hi > s.values.len() {
        return Err(Error::arg("window", format!("[{lo}, {hi}] does not fit a spectrum of length {}", s.values.len())));
    }
    let mut w: Vec<T> = s.values[lo - 1..hi].to_vec();
    let ks: Vec<T> = (lo..=hi).map(T::from_count).collect();
    let slope = if w.len() > 1 { fit_line(&ks, &w).1 } else { T::zero() };
    w.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let mid = w.len() / 2;
    let estimate = if w.len() % 2 == 1 {
        w[mid]
    } else {
        (w[mid - 1] + w[mid]) * T::lit(0.5)
    };
    let drift = slope.abs() * T::from_count(hi - lo);
    Ok(EssentialTail {
        estimate,
        window: (lo, hi),
        slope,
        reliable: drift <= T::lit(0.25) * estimate + T::lit(1e-9),
    })
}

/// Radial cutoff `σ_t = s(|z| − t)` with `s(u) = 1 − 3u² + 2u³` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothCutoff<T: Real> {
    pub t: T,
}

pub fn smooth_cutoff<T: Real>(t: T) -> Result<SmoothCutoff<T>> {
    if !(t > T::zero()) || !t.is_finite() {
        return Err(Error::arg("t", "must be positive"));
    }
    Ok(SmoothCutoff { t })
}

impl<T: Real> SmoothCutoff<T> {
    pub fn outer(&self) -> T {
        self.t + T::one()
    }

    fn ramp(&self, rho: T) -> (T, T) {
        let u = rho - self.t;
        if u <= T::zero() {
            (T::one(), T::zero())
        } else if u >= T::one() {
            (T::zero(), T::zero())
        } else {
            let three = T::lit(3.0);
            let two = T::lit(2.0);
            (T::one() - three * u * u + two * u * u * u, (u * u - u) * T::lit(6.0))
        }
    }

    pub fn value(&self, z: Cplx<T>) -> T {
        self.ramp(z.norm()).0
    }

    /// `∂̄σ_t = s'(ρ) z / (2ρ)`.
    pub fn dbar(&self, z: Cplx<T>) -> Cplx<T> {
        let rho = z.norm();
        let (_, ds) = self.ramp(rho);
        if ds == T::zero() {
            return c(T::zero(), T::zero());
        }
        z * (ds / (T::lit(2.0) * rho))
    }

    /// `|∇σ_t| = |s'(ρ)|`.
    pub fn gradient(&self, z: Cplx<T>) -> T {
        self.ramp(z.norm()).1.abs()
    }

    /// Largest `|∇σ_t|` over `n` radii spanning the ramp.
    pub fn max_gradient_on_grid(&self, n: usize) -> T {
        (0..=n)
            .map(|i| self.gradient(c(self.t + T::from_count(i) / T::from_count(n.max(1)), T::zero())))
            .fold(T::zero(), T::max)
    }
}

/// `h_t = ψ_t + σ_t f₂` on the nodes of the Gram rule and the gap
/// `‖H_f − H_{h_t}‖`, the top singular value of `H_{f − h_t}`.
#[derive(Debug, Clone)]
pub struct CompactApproximant<T: Real> {
    pub t: T,
    /// `h_t` at the rule nodes.
    pub values: Vec<Cplx<T>>,
    /// `ψ_t` at the rule nodes.
    pub psi: Vec<Cplx<T>>,
    pub spectrum: SingularSpectrum<T>,
    pub gap: T,
    /// Largest `|ψ_t − A(σ_t ∂̄f₁)|` over a few nodes, when a solver was given.
    pub solver_check: Option<T>,
}

/// Builds `h_t` with `ψ_t` the Cauchy transform of `σ_t ∂̄f₁`.
///
/// Any two solutions of `∂̄ψ = σ_t ∂̄f₁` of at most exponential growth
/// differ by an entire function whose Hankel operator vanishes, so the
/// Cauchy representative gives the same `H_{h_t}` as the weighted solution.
/// If `solver` is given it must be a calibrated Cauchy-mode solver; it is
/// evaluated at a handful of nodes as a cross-check.
#[allow(clippy::too_many_arguments)]
pub fn compact_approximant<T: Real>(
    dec: &Decomposition<T>,
    cutoff: &SmoothCutoff<T>,
    weight: &WeightModel<T>,
    degree: usize,
    margin: usize,
    rule: &PlaneRule<T>,
    grid: PolarGrid<T>,
    solver: Option<&DbarSolver<T>>,
) -> Result<CompactApproximant<T>> {
    let outer = cutoff.outer();
    let probes = 32;
    for k in 0..probes {
        let th = T::lit(2.0) * T::PI() * T::from_count(k) / T::from_count(probes);
        let z = Cplx::from_polar(outer, th);
        if (dec.partition().total(z) - T::one()).abs() > T::lit(1e-9) {
            return Err(Error::Window { re: z.re.as_f64(), im: z.im.as_f64() });
        }
    }
    let cut = *cutoff;
    let d = dec.clone();
    let omega = move |xi: Cplx<T>| {
        let s = cut.value(xi);
        if s == T::zero() {
            c(T::zero(), T::zero())
        } else {
            d.dbar_f1(xi) * s
        }
    };
    let psi = cauchy_on_rule(&omega, outer, &[cutoff.t], rule, grid)?;
    let nodes = rule.nodes();
    let (values, diff): (Vec<Cplx<T>>, Vec<Cplx<T>>) = nodes
        .par_iter()
        .zip(&psi)
        .map(|(&z, &p)| {
            let f = dec.f(z);
            let s = cutoff.value(z);
            let h = if s > T::zero() { p + (f - dec.f1(z)) * s } else { p };
            (h, f - h)
        })
        .unzip();
    let gram = gram_from_values(&diff, weight, degree, margin, rule)?;
    let spectrum = singular_spectrum(&gram)?;
    let solver_check = match solver {
        Some(s) => {
            if !matches!(s.factor(), KernelFactor::Cauchy) {
                return Err(Error::arg("solver", "cross-check needs the Cauchy-mode solver"));
            }
            let form = ZeroOneForm::new(omega.clone(), DecayTag::Compact(outer));
            let picks: Vec<usize> = nodes
                .iter()
                .enumerate()
                .filter(|(_, z)| z.norm() <= outer + T::one())
                .map(|(i, _)| i)
                .collect();
            let stride = (picks.len() / 4).max(1);
            let mut worst = T::zero();
            for &i in picks.iter().step_by(stride).take(4) {
                worst = worst.max((s.apply(&form, nodes[i])? - psi[i]).norm());
            }
            Some(worst)
        }
        None => None,
    };
    Ok(CompactApproximant {
        t: cutoff.t,
        values,
        psi,
        gap: spectrum.top(),
        spectrum,
        solver_check,
    })
}

type DensityFn<T> = Arc<dyn Fn(Cplx<T>) -> T + Send + Sync>;

/// A positive Borel measure given by a density or by point masses.
#[derive(Clone)]
pub enum MeasureModel<T: Real> {
    Lebesgue,
    Density { name: String, g: DensityFn<T> },
    Atomic(Vec<(Cplx<T>, T)>),
}

impl<T: Real> fmt::Debug for MeasureModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureModel::Lebesgue => write!(f, "Lebesgue"),
            MeasureModel::Density { name, .. } => write!(f, "Density({name})"),
            MeasureModel::Atomic(atoms) => write!(f, "Atomic({} atoms)", atoms.len()),
        }
    }
}

impl<T: Real> MeasureModel<T> {
    pub fn density(name: &str, g: impl Fn(Cplx<T>) -> T + Send + Sync + 'static) -> Self {
        MeasureModel::Density {
            name: name.to_string(),
            g: Arc::new(g),
        }
    }

    /// `dμ = e^{-β|w|²} dA`.
    pub fn gaussian_density(beta: T) -> Result<Self> {
        if !(beta > T::zero()) {
            return Err(Error::arg("beta", "must be positive"));
        }
        Ok(Self::density("gaussian", move |w| (-beta * w.norm_sqr()).exp()))
    }

    pub fn atomic(atoms: Vec<(Cplx<T>, T)>) -> Result<Self> {
        if atoms.iter().any(|(_, m)| !(*m > T::zero()) || !m.is_finite()) {
            return Err(Error::arg("masses", "must be positive and finite"));
        }
        Ok(MeasureModel::Atomic(atoms))
    }

    pub fn zero() -> Self {
        MeasureModel::Atomic(Vec::new())
    }

    /// Confirms the density is nonnegative at `probes`.
    pub fn check_density(&self, probes: &[Cplx<T>]) -> Result<()> {
        if let MeasureModel::Density { g, .. } = self {
            for &z in probes {
                let v = g(z);
                if !(v >= T::zero()) {
                    return Err(Error::eval("negative measure density", z));
                }
            }
        }
        Ok(())
    }
}

/// `μ̃(z) = ∫ |k_z(w)|² e^{-2φ(w)} dμ(w)`.
///
/// Densities are integrated with the plane rule translated to `z`, where
/// the integrand carries its Gaussian mass.
pub fn berezin_transform<T: Real>(
    mu: &MeasureModel<T>,
    kernel: &KernelEval<T>,
    z: Cplx<T>,
    rule: &PlaneRule<T>,
) -> Result<T> {
    let kz = kernel.normalized_kernel(z)?;
    let weight = kernel.weight();
    let density = |w: Cplx<T>| kz.eval(w).norm_sqr() * weight.density(w);
    let v = match mu {
        MeasureModel::Lebesgue => rule.integrate(|x| density(z + x)),
        MeasureModel::Density { g, .. } => rule.integrate(|x| density(z + x) * g(z + x)),
        MeasureModel::Atomic(atoms) => pairwise_sum(&atoms.iter().map(|(a, m)| *m * density(*a)).collect::<Vec<_>>()),
    };
    if !(v >= T::zero()) || !v.is_finite() {
        return Err(Error::eval("Berezin transform", z));
    }
    Ok(v)
}

/// `μ̂_r(z) = μ(B(z, r)) / |B(z, r)|`.
pub fn measure_average<T: Real>(mu: &MeasureModel<T>, z: Cplx<T>, r: T, order: usize) -> Result<T> {
    if !(r > T::zero()) {
        return Err(Error::arg("r", "must be positive"));
    }
    let area = T::PI() * r * r;
    Ok(match mu {
        MeasureModel::Lebesgue => T::one(),
        MeasureModel::Density { g, .. } => BallRule::new(z, r, order)?.average(|w| g(w)),
        MeasureModel::Atomic(atoms) => {
            let inside: Vec<T> = atoms.iter().filter(|(a, _)| (*a - z).norm() < r).map(|(_, m)| *m).collect();
            pairwise_sum(&inside) / area
        }
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerezinDomination<T: Real> {
    pub probes: Vec<Cplx<T>>,
    pub average: Vec<T>,
    pub berezin: Vec<T>,
    /// `max μ̂_r / μ̃` over the probes.
    pub c_hat: T,
}

pub fn berezin_domination<T: Real>(
    mu: &MeasureModel<T>,
    kernel: &KernelEval<T>,
    probes: &[Cplx<T>],
    r: T,
    rule: &PlaneRule<T>,
    order: usize,
) -> Result<BerezinDomination<T>> {
    let rows = probes
        .par_iter()
        .map(|z| Ok((measure_average(mu, *z, r, order)?, berezin_transform(mu, kernel, *z, rule)?)))
        .collect::<Result<Vec<_>>>()?;
    let (average, berezin): (Vec<T>, Vec<T>) = rows.into_iter().unzip();
    let c_hat = average
        .iter()
        .zip(&berezin)
        .filter(|(_, b)| **b > T::zero())
        .fold(T::zero(), |m, (a, b)| m.max(*a / *b));
    Ok(BerezinDomination {
        probes: probes.to_vec(),
        average,
        berezin,
        c_hat,
    })
}

/// Verdict pair for one scale `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchattenVerdict<T: Real> {
    pub c: T,
    /// Lattice Riemann sum of `h(c G_{2,r}(f))`, ordered by `|a|`.
    pub integral: SeriesReport<T>,
    pub sum: SeriesReport<T>,
    pub agree: bool,
}

/// Compares the convergence of `∫ h(c G_{2,r}(f)) dv` and `Σ h(c s_k)`
/// for each `c` in `c_grid`.
#[allow(clippy::too_many_arguments)]
pub fn schatten_h_criterion<T: Real>(
    f: &Symbol<T>,
    gauge: &SchattenGauge<T>,
    r: T,
    d: usize,
    lattice: &Lattice<T>,
    spectrum: &SingularSpectrum<T>,
    c_grid: &[T],
    order: usize,
) -> Result<Vec<SchattenVerdict<T>>> {
    let mut pts = lattice.planar_points()?;
    pts.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap_or(std::cmp::Ordering::Equal));
    let solver = LocalSolver::new(r, d, order)?;
    let g = ida_profile(&solver, f, &pts, T::lit(2.0))?;
    let cell = lattice.cell_volume();
    Ok(c_grid
        .iter()
        .map(|&cc| {
            let terms: Vec<T> = g.iter().map(|x| gauge.eval(cc * denoise(*x)) * cell).collect();
            let integral = series_report(&terms);
            let sum = schatten_sum(spectrum, gauge, cc).series;
            let agree = integral.convergent == sum.convergent;
            SchattenVerdict { c: cc, integral, sum, agree }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomposition::{decompose, PartitionOfUnity};
    use crate::lattice::Window;

    fn z(re: f64, im: f64) -> Cplx<f64> {
        Cplx::new(re, im)
    }

    fn gaussian() -> WeightModel<f64> {
        WeightModel::gaussian(1.0).unwrap()
    }

    fn spectrum_of(f: &Symbol<f64>, degree: usize, margin: usize) -> (HankelGram<f64>, SingularSpectrum<f64>) {
        let w = gaussian();
        let rule = gram_rule(&w, degree, margin, f).unwrap();
        let basis = FockBasis::build(&w, degree, &rule).unwrap();
        let g = build_hankel_gram(f, &basis, margin, &rule).unwrap();
        let s = singular_spectrum(&g).unwrap();
        (g, s)
    }

    #[test]
    fn holomorphic_symbols_have_zero_gram() {
        let f = Symbol::holo_poly(vec![z(1.0, 0.0), z(0.0, 2.0), z(0.5, 0.0)]);
        let (g, s) = spectrum_of(&f, 20, 10);
        assert!(g.matrix().max_abs() <= 1e-10, "{}", g.matrix().max_abs());
        assert!(s.top() <= 1e-8);
    }

    #[test]
    fn conj_linear_gram_is_identity() {
        let (g, s) = spectrum_of(&Symbol::conj_linear(), 20, 5);
        for j in 0..=20 {
            for k in 0..=20 {
                let want = if j == k { 1.0 } else { 0.0 };
                assert!((g.get(j, k) - z(want, 0.0)).norm() < 1e-6, "{j} {k} {}", g.get(j, k));
            }
        }
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-4));
        assert!(g.certificate().passed);
    }

    #[test]
    fn compact_symbol_diagonal_decays() {
        let (g, _) = spectrum_of(&Symbol::bump(1.0).unwrap(), 20, 10);
        let d = g.diagonal();
        assert!(d[20] < 1e-10 * d[0]);
        assert!(d.windows(2).skip(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn super_gaussian_growth_is_refused() {
        let f = Symbol::custom(
            "wild",
            |w: Cplx<f64>| (w.norm_sqr() * 0.6).exp().into(),
            None,
            crate::symbols::SupportHint::EntirePlane,
            crate::symbols::Smoothness::C2,
            Growth::Gaussian(0.6),
        );
        let w = gaussian();
        let rule = PlaneRule::gaussian(40, 1.0).unwrap();
        let basis = FockBasis::build(&w, 10, &rule).unwrap();
        assert!(matches!(build_hankel_gram(&f, &basis, 5, &rule), Err(Error::Refused(_))));
    }

    #[test]
    fn enlarging_margin_shrinks_diagonal() {
        let f = Symbol::mixed(1.0).unwrap();
        let w = gaussian();
        let rule = gram_rule(&w, 12, 15, &f).unwrap();
        let basis = FockBasis::build(&w, 12, &rule).unwrap();
        let a = build_hankel_gram(&f, &basis, 2, &rule).unwrap().diagonal();
        let b = build_hankel_gram(&f, &basis, 15, &rule).unwrap().diagonal();
        assert!(a.iter().zip(&b).all(|(x, y)| *y <= *x + 1e-10));
    }

    #[test]
    fn spectrum_scales_linearly() {
        let f = Symbol::conj_gaussian(0.5).unwrap();
        let f = Symbol::custom(
            "g",
            move |w| f.eval(w),
            None,
            crate::symbols::SupportHint::EntirePlane,
            crate::symbols::Smoothness::C2,
            Growth::Bounded,
        );
        let g = f.clone();
        let twice = Symbol::custom(
            "2g",
            move |w| g.eval(w) * 2.0,
            None,
            crate::symbols::SupportHint::EntirePlane,
            crate::symbols::Smoothness::C2,
            Growth::Bounded,
        );
        let (_, a) = spectrum_of(&f, 15, 10);
        let (_, b) = spectrum_of(&twice, 15, 10);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((2.0 * x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_symbol_has_zero_spectrum_and_sum() {
        let f = Symbol::holo_poly(vec![z(0.0, 0.0)]);
        let (_, s) = spectrum_of(&f, 10, 5);
        assert!(s.values.iter().all(|v| *v == 0.0));
        let sum = schatten_sum(&s, &SchattenGauge::power(2.0).unwrap(), 1.0);
        assert_eq!(sum.series.total, 0.0);
        assert!(sum.series.convergent);
        assert_eq!(essential_norm_tail(&s, None).unwrap().estimate, 0.0);
    }

    #[test]
    fn schatten_sums_separate_compact_from_noncompact() {
        let h = SchattenGauge::power(2.0).unwrap();
        let (_, bump) = spectrum_of(&Symbol::bump(1.0).unwrap(), 30, 10);
        assert!(schatten_sum(&bump, &h, 1.0).series.convergent);
        let (_, conj) = spectrum_of(&Symbol::conj_linear(), 30, 10);
        let s = schatten_sum(&conj, &h, 1.0);
        assert!(!s.series.convergent);
        assert!((s.series.total - 31.0).abs() < 1e-3);
    }

    #[test]
    fn essential_tail_oracles() {
        let (_, conj) = spectrum_of(&Symbol::conj_linear(), 20, 10);
        let e = essential_norm_tail(&conj, None).unwrap();
        assert!((e.estimate - 1.0).abs() < 1e-3 && e.reliable);
        assert_eq!(e.window, (10, 15));
        let (_, bump) = spectrum_of(&Symbol::bump(1.0).unwrap(), 20, 10);
        assert!(essential_norm_tail(&bump, None).unwrap().estimate < 1e-3);
    }

    #[test]
    fn gauge_checks() {
        assert!(SchattenGauge::power(2.0).unwrap().sqrt_convex);
        assert!(!SchattenGauge::power(1.0).unwrap().sqrt_convex);
        assert!(SchattenGauge::new(GaugeFamily::ExpMinusOne, 2.0).unwrap().sqrt_convex);
        let bad = GaugeFamily::Grid(vec![(0.0, 1.0), (1.0, 2.0)]);
        assert!(SchattenGauge::new(bad, 1.0).is_err());
        let down = GaugeFamily::Grid(vec![(0.0, 0.0), (1.0, 2.0), (2.0, 1.0)]);
        assert!(SchattenGauge::new(down, 1.5).is_err());
        let grid = SchattenGauge::<f64>::new(GaugeFamily::Grid(vec![(0.0, 0.0), (1.0, 1.0), (2.0, 4.0)]), 2.0).unwrap();
        assert!((grid.eval(1.5) - 2.5).abs() < 1e-15);
        assert!((grid.eval(3.0) - 7.0).abs() < 1e-15);
    }

    #[test]
    fn kernel_hankel_oracles() {
        let w = gaussian();
        let probe = KernelProbe::covering(&w, 2.0, 10, &[1.0]).unwrap();
        let holo = Symbol::holo_poly(vec![z(0.0, 1.0), z(2.0, 0.0), z(0.0, 0.0), z(1.0, 0.0)]);
        let conj = Symbol::conj_linear();
        for p in [z(0.0, 0.0), z(1.0, -0.5), z(-1.2, 1.5), z(2.0, 0.0)] {
            assert!(hankel_on_kernel(&holo, p, 2.0, &probe).unwrap() < 1e-7);
            let v = hankel_on_kernel(&conj, p, 2.0, &probe).unwrap();
            assert!((v - 1.0).abs() < 1e-4, "{p} {v}");
        }
        let far = KernelProbe::covering(&w, 5.0, 10, &[1.0]).unwrap();
        let bump = Symbol::bump(1.0).unwrap();
        assert!(hankel_on_kernel(&bump, z(5.0, 0.0), 2.0, &far).unwrap() <= 1e-4);
        assert!(matches!(hankel_on_kernel(&conj, z(6.0, 0.0), 2.0, &probe), Err(Error::Capability(_))));
    }

    #[test]
    fn cutoff_ramp() {
        let s = smooth_cutoff(3.0).unwrap();
        assert_eq!(s.value(z(0.0, 0.0)), 1.0);
        assert_eq!(s.value(z(0.0, 4.0)), 0.0);
        let g = s.max_gradient_on_grid(1000);
        assert!(g <= 1.5 + 1e-9 && g > 1.49);
        assert!(smooth_cutoff(0.0).is_err());
        // ∂̄σ against central differences
        let p = z(2.2, 1.9);
        let h = 1e-6;
        let fd = (s.value(p + z(h, 0.0)) - s.value(p - z(h, 0.0))) / (4.0 * h)
            + z(0.0, 1.0) * (s.value(p + z(0.0, h)) - s.value(p - z(0.0, h))) / (4.0 * h);
        assert!((fd - s.dbar(p)).norm() < 1e-8);
    }

    #[test]
    fn berezin_oracles() {
        let w = gaussian();
        let rule = PlaneRule::gaussian(20, 1.0).unwrap();
        let basis = FockBasis::build(&w, 4, &rule).unwrap();
        let k = KernelEval::new(basis, KernelMode::ClosedFormGaussian).unwrap();
        for p in [z(0.0, 0.0), z(1.5, -2.0), z(-3.0, 0.5)] {
            let v = berezin_transform(&MeasureModel::Lebesgue, &k, p, &rule).unwrap();
            assert!((v - 1.0).abs() < 1e-8, "{v}");
            assert_eq!(berezin_transform(&MeasureModel::zero(), &k, p, &rule).unwrap(), 0.0);
        }
        let a = z(0.3, -0.2);
        let delta = MeasureModel::atomic(vec![(a, 1.0)]).unwrap();
        let p = z(0.5, 0.5);
        let want = k.normalized_kernel(p).unwrap().eval(a).norm_sqr() * w.density(a);
        assert!((berezin_transform(&delta, &k, p, &rule).unwrap() - want).abs() < 1e-15);
        assert_eq!(measure_average(&MeasureModel::Lebesgue, p, 0.7, 8).unwrap(), 1.0);
        let d0 = MeasureModel::atomic(vec![(z(0.0, 0.0), 1.0)]).unwrap();
        let avg = measure_average(&d0, z(0.0, 0.0), 1.0, 8).unwrap();
        assert!((avg - 1.0 / std::f64::consts::PI).abs() < 1e-15);
        assert!(MeasureModel::atomic(vec![(a, 0.0)]).is_err());
    }

    #[test]
    fn gaussian_density_domination() {
        let w = gaussian();
        let rule = PlaneRule::gaussian(20, 1.0).unwrap();
        let basis = FockBasis::build(&w, 4, &rule).unwrap();
        let k = KernelEval::new(basis, KernelMode::ClosedFormGaussian).unwrap();
        let mu = MeasureModel::gaussian_density(1.0).unwrap();
        // μ̃(z) = e^{-|z|²/2} / 2 in closed form
        let p = z(0.7, -0.4);
        let b = berezin_transform(&mu, &k, p, &rule).unwrap();
        assert!((b - 0.5 * (-p.norm_sqr() / 2.0).exp()).abs() < 1e-10);
        let probes = crate::fock::probe_disc(2.0, 3, 6);
        let rep = berezin_domination(&mu, &k, &probes, 1.0, &rule, 16).unwrap();
        // at the origin μ̂_1 = 1 − e^{-1}
        assert!((rep.average[0] - (1.0 - (-1.0f64).exp())).abs() < 1e-10);
        assert!(rep.c_hat > 1.2 && rep.c_hat < 5.0);
    }

    #[test]
    fn series_tail_flag() {
        let geo: Vec<f64> = (0..40).map(|k| 0.5f64.powi(k)).collect();
        assert!(series_report(&geo).convergent);
        let flat = vec![1.0f64; 40];
        let r = series_report(&flat);
        assert!(!r.convergent && (r.tail_ratio - 0.25).abs() < 1e-15);
    }

    #[test]
    fn schatten_criterion_verdicts() {
        let lat = Lattice::build(z(1.0, 0.0), 1.0, Window::square(6.0)).unwrap();
        let gauge = SchattenGauge::power(2.0).unwrap();
        let holo = Symbol::holo_poly(vec![z(1.0, 0.0), z(0.0, 1.0), z(0.5, 0.0)]);
        for (f, convergent) in [(Symbol::bump(1.0).unwrap(), true), (Symbol::conj_linear(), false), (holo, true)] {
            let (_, s) = spectrum_of(&f, 30, 10);
            let v = schatten_h_criterion(&f, &gauge, 1.0, 6, &lat, &s, &[0.5, 1.0, 2.0], 24).unwrap();
            for row in v {
                assert!(row.agree);
                assert_eq!(row.integral.convergent, convergent);
            }
        }
    }

    #[test]
    fn approximant_of_holomorphic_and_compact_symbols() {
        let w = gaussian();
        let window = Window::square(5.0);
        let lat = Lattice::build(z(1.0, 0.0), 0.5, window).unwrap();
        let part = PartitionOfUnity::build(lat).unwrap();
        let cutoff = smooth_cutoff(2.0).unwrap();
        let holo = Symbol::holo_poly(vec![z(1.0, 0.0), z(0.0, 1.0)]);
        let dec = decompose(&holo, part.clone(), 2.0, 4, 16).unwrap();
        let rule = gram_rule(&w, 20, 10, &holo).unwrap();
        let rule = PlaneRule::with_breaks(rule.order(), 1.0, &[2.0, 3.0]).unwrap();
        let a = compact_approximant(&dec, &cutoff, &w, 20, 10, &rule, PolarGrid::default(), None).unwrap();
        assert!(a.gap <= 1e-6, "{}", a.gap);
        let bump = Symbol::bump(1.0).unwrap();
        let dec = decompose(&bump, part, 2.0, 4, 16).unwrap();
        let mut s = DbarSolver::cauchy();
        s.set_orientation(z(-1.0 / std::f64::consts::PI, 0.0));
        let opts = crate::dbar::SolverOptions { refine: 6.0, ..s.options() };
        let s = s.with_options(opts);
        let rule = PlaneRule::with_breaks(rule.order(), 1.0, &[1.0, 2.0, 3.0]).unwrap();
        let a = compact_approximant(&dec, &cutoff, &w, 20, 10, &rule, PolarGrid::default(), Some(&s)).unwrap();
        assert!(a.gap <= 1e-3, "{}", a.gap);
        assert!(a.solver_check.unwrap() < 1e-4, "{:?}", a.solver_check);
    }
}
