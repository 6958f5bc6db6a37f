//! Mean oscillation `M_{q,r}`, the distance to holomorphic functions
//! `G_{q,r}`, and the lattice and shell gauges built from them.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::linalg::{cholesky_solve, fit_line, CMatrix};
use crate::quadrature::BallRule;
use crate::scalar::{c, pairwise_sum, Cplx, Real};
use crate::symbols::{Family, Symbol};

/// Default polynomial degree of the local holomorphic approximants.
pub const DEFAULT_DEGREE: usize = 6;
/// Default radial order of the ball rule.
pub const DEFAULT_BALL_ORDER: usize = 24;

const IRLS_ITERATIONS: usize = 25;
const IRLS_TOL: f64 = 1e-8;
const PIVOT_FLOOR: f64 = 1e-13;

/// `(|B(z,r)|^{-1} ∫_{B(z,r)} |f|^q dA)^{1/q}`.
pub fn mean_oscillation<T: Real>(f: &Symbol<T>, z: Cplx<T>, r: T, q: T, rule: &BallRule<T>) -> Result<T> {
    check_q(q)?;
    let ball = ball_at(rule, z, r)?;
    let mut vals = Vec::with_capacity(ball.len());
    for &w in ball.nodes() {
        vals.push(f.eval_checked(w)?.norm());
    }
    let avg = pairwise_sum(
        &vals
            .iter()
            .zip(ball.weights())
            .map(|(v, w)| *w * v.powf(q))
            .collect::<Vec<_>>(),
    ) / ball.area();
    Ok(avg.max(T::zero()).powf(q.recip()))
}

fn check_q<T: Real>(q: T) -> Result<()> {
    if q >= T::one() && q.is_finite() {
        Ok(())
    } else {
        Err(Error::arg("q", "must satisfy q >= 1"))
    }
}

fn ball_at<T: Real>(rule: &BallRule<T>, z: Cplx<T>, r: T) -> Result<BallRule<T>> {
    if !(r > T::zero()) {
        return Err(Error::arg("r", "must be positive"));
    }
    if (rule.radius() - r).abs() <= T::lit(1e-14) * r {
        Ok(rule.recentered(z))
    } else {
        BallRule::new(z, r, rule.order())
    }
}

/// Best holomorphic polynomial `h` of degree `d` on `B(z, r)` and the
/// resulting distance `(avg |f − h|^q)^{1/q}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalApproximation<T: Real> {
    pub center: Cplx<T>,
    pub radius: T,
    pub degree: usize,
    pub q: T,
    /// Coefficients in the scaled basis `((w − z)/r)^j`.
    pub scaled: Vec<Cplx<T>>,
    pub residual: T,
}

impl<T: Real> LocalApproximation<T> {
    /// Coefficients in the basis `(w − z)^j`.
    pub fn coefficients(&self) -> Vec<Cplx<T>> {
        let mut scale = T::one();
        self.scaled
            .iter()
            .map(|a| {
                let out = *a * scale;
                scale /= self.radius;
                out
            })
            .collect()
    }

    pub fn eval(&self, w: Cplx<T>) -> Cplx<T> {
        let u = (w - self.center) / self.radius;
        self.scaled
            .iter()
            .rev()
            .fold(c(T::zero(), T::zero()), |acc, a| acc * u + *a)
    }
}

/// Reusable least-squares solver for a fixed radius, degree and ball rule.
#[derive(Debug, Clone)]
pub struct LocalSolver<T: Real> {
    rule: BallRule<T>,
    degree: usize,
    powers: Vec<Cplx<T>>,
    gram: CMatrix<T>,
}

impl<T: Real> LocalSolver<T> {
    pub fn new(r: T, degree: usize, order: usize) -> Result<Self> {
        let rule = BallRule::new(c(T::zero(), T::zero()), r, order)?;
        Self::from_rule(rule, degree)
    }

    pub fn from_rule(rule: BallRule<T>, degree: usize) -> Result<Self> {
        // products u^j ū^k up to total degree 2d are integrated exactly
        let stable = rule.order().saturating_sub(1);
        if degree > stable {
            return Err(Error::DegreeCap {
                requested: degree,
                stable,
            });
        }
        let r = rule.radius();
        let n = rule.len();
        let k = degree + 1;
        let mut powers = Vec::with_capacity(n * k);
        for o in rule.offsets() {
            let u = *o / r;
            let mut p = c(T::one(), T::zero());
            for _ in 0..k {
                powers.push(p);
                p *= u;
            }
        }
        let mut gram = CMatrix::zeros(k, k);
        for i in 0..n {
            let w = rule.weights()[i];
            let row = &powers[i * k..(i + 1) * k];
            for a in 0..k {
                for b in 0..k {
                    gram.add_at(a, b, row[b] * row[a].conj() * w);
                }
            }
        }
        let probe = vec![c(T::zero(), T::zero()); k];
        let (_, ratio) = cholesky_solve(&gram, &probe)?;
        if ratio < T::lit(PIVOT_FLOOR) {
            return Err(Error::DegreeCap {
                requested: degree,
                stable: degree.saturating_sub(1),
            });
        }
        Ok(Self {
            rule,
            degree,
            powers,
            gram,
        })
    }

    pub fn radius(&self) -> T {
        self.rule.radius()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn rule(&self) -> &BallRule<T> {
        &self.rule
    }

    /// Ball nodes translated to `z`.
    pub fn nodes_at(&self, z: Cplx<T>) -> impl Iterator<Item = Cplx<T>> + '_ {
        self.rule.offsets().iter().map(move |o| *o + z)
    }

    /// Local approximation of `f` on `B(z, r)` in the `L^q` sense.
    pub fn approximate(&self, f: &Symbol<T>, z: Cplx<T>, q: T) -> Result<LocalApproximation<T>> {
        check_q(q)?;
        let mut values = Vec::with_capacity(self.rule.len());
        for w in self.nodes_at(z) {
            values.push(f.eval_checked(w)?);
        }
        self.approximate_values(&values, z, q)
    }

    /// As [`approximate`](Self::approximate) from precomputed values at the
    /// translated ball nodes.
    pub fn approximate_values(&self, values: &[Cplx<T>], z: Cplx<T>, q: T) -> Result<LocalApproximation<T>> {
        check_q(q)?;
        let n = self.rule.len();
        if values.len() != n {
            return Err(Error::arg("values", "length must match the ball rule"));
        }
        let mut coeffs = self.weighted_fit(values, None)?;
        let mut residual = self.residual(values, &coeffs, q);
        if (q - T::lit(2.0)).abs() > T::epsilon() {
            let scale = values.iter().fold(T::zero(), |m, v| m.max(v.norm()));
            let floor = T::lit(1e-12) * (T::one() + scale);
            let mut prev = residual;
            for _ in 0..IRLS_ITERATIONS {
                let weights: Vec<T> = values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        let e = (*v - self.eval_scaled(&coeffs, i)).norm().max(floor);
                        e.powf(q - T::lit(2.0))
                    })
                    .collect();
                let next = self.weighted_fit(values, Some(&weights))?;
                let res = self.residual(values, &next, q);
                if res < residual {
                    residual = res;
                    coeffs = next.clone();
                } else {
                    coeffs = next;
                }
                if (prev - res).abs() <= T::lit(IRLS_TOL) * prev.max(T::min_positive_value()) {
                    break;
                }
                prev = res;
            }
            residual = residual.min(self.residual(values, &coeffs, q));
        }
        Ok(LocalApproximation {
            center: z,
            radius: self.rule.radius(),
            degree: self.degree,
            q,
            scaled: coeffs,
            residual,
        })
    }

    fn eval_scaled(&self, coeffs: &[Cplx<T>], i: usize) -> Cplx<T> {
        let k = self.degree + 1;
        let row = &self.powers[i * k..(i + 1) * k];
        row.iter().zip(coeffs).fold(c(T::zero(), T::zero()), |acc, (p, a)| acc + *p * *a)
    }

    fn weighted_fit(&self, values: &[Cplx<T>], extra: Option<&[T]>) -> Result<Vec<Cplx<T>>> {
        let k = self.degree + 1;
        let n = self.rule.len();
        let mut rhs = vec![c(T::zero(), T::zero()); k];
        let gram = match extra {
            None => {
                for i in 0..n {
                    let w = self.rule.weights()[i];
                    let row = &self.powers[i * k..(i + 1) * k];
                    for a in 0..k {
                        rhs[a] += values[i] * row[a].conj() * w;
                    }
                }
                None
            }
            Some(ex) => {
                let mut g = CMatrix::zeros(k, k);
                for i in 0..n {
                    let w = self.rule.weights()[i] * ex[i];
                    let row = &self.powers[i * k..(i + 1) * k];
                    for a in 0..k {
                        rhs[a] += values[i] * row[a].conj() * w;
                        for b in 0..k {
                            g.add_at(a, b, row[b] * row[a].conj() * w);
                        }
                    }
                }
                Some(g)
            }
        };
        let (x, _) = cholesky_solve(gram.as_ref().unwrap_or(&self.gram), &rhs)?;
        Ok(x)
    }

    fn residual(&self, values: &[Cplx<T>], coeffs: &[Cplx<T>], q: T) -> T {
        let terms: Vec<T> = (0..values.len())
            .map(|i| self.rule.weights()[i] * (values[i] - self.eval_scaled(coeffs, i)).norm().powf(q))
            .collect();
        (pairwise_sum(&terms) / self.rule.area()).max(T::zero()).powf(q.recip())
    }
}

/// `G_{q,r}(f)(z)` approximated by degree-`d` holomorphic polynomials.
pub fn ida_distance<T: Real>(
    f: &Symbol<T>,
    z: Cplx<T>,
    r: T,
    q: T,
    d: usize,
    rule: &BallRule<T>,
) -> Result<LocalApproximation<T>> {
    let ball = ball_at(rule, c(T::zero(), T::zero()), r)?;
    LocalSolver::from_rule(ball, d)?.approximate(f, z, q)
}

/// `G_{q,r}(f)` at many points, evaluated in parallel.
pub fn ida_profile<T: Real>(solver: &LocalSolver<T>, f: &Symbol<T>, points: &[Cplx<T>], q: T) -> Result<Vec<T>> {
    points
        .par_iter()
        .map(|z| solver.approximate(f, *z, q).map(|a| a.residual))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdaNormReport<T: Real> {
    /// `None` encodes `s = ∞`.
    pub s: Option<T>,
    pub value: T,
    /// Share of the `s`-th power sum coming from cells on the window edge.
    pub boundary_fraction: T,
    pub window_warning: bool,
    pub samples: Vec<T>,
}

/// `‖G_{q,r}(f)‖_{L^s}` as a Riemann sum over the lattice cells, or the
/// maximum over lattice points when `s = None` (the BDA gauge).
pub fn ida_norm<T: Real>(
    f: &Symbol<T>,
    s: Option<T>,
    q: T,
    r: T,
    lattice: &Lattice<T>,
    d: usize,
    order: usize,
) -> Result<IdaNormReport<T>> {
    if let Some(s) = s {
        if !(s >= T::one()) {
            return Err(Error::arg("s", "must satisfy s >= 1"));
        }
    }
    let pts = lattice.planar_points()?;
    let solver = LocalSolver::new(r, d, order)?;
    let samples = ida_profile(&solver, f, &pts, q)?;
    let win = lattice.window();
    let edge = lattice.step();
    let on_edge = |z: &Cplx<T>| {
        z.re - win.re_lo < edge || win.re_hi - z.re < edge || z.im - win.im_lo < edge || win.im_hi - z.im < edge
    };
    let (value, boundary_fraction) = match s {
        None => {
            let v = samples.iter().fold(T::zero(), |m, g| m.max(*g));
            (v, T::zero())
        }
        Some(s) => {
            let cell = lattice.cell_volume();
            let powered: Vec<T> = samples.iter().map(|g| g.powf(s) * cell).collect();
            let total = pairwise_sum(&powered);
            let boundary = pairwise_sum(
                &powered
                    .iter()
                    .zip(&pts)
                    .filter(|(_, z)| on_edge(z))
                    .map(|(v, _)| *v)
                    .collect::<Vec<_>>(),
            );
            let frac = if total > T::zero() { boundary / total } else { T::zero() };
            (total.powf(s.recip()), frac)
        }
    };
    Ok(IdaNormReport {
        s,
        value,
        boundary_fraction,
        window_warning: boundary_fraction > T::lit(0.01),
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Functional {
    Ida,
    MeanOscillation,
    /// `‖H_f k_z‖_{q,φ}`.
    KernelHankel,
}

impl Functional {
    pub fn id(self) -> &'static str {
        match self {
            Functional::Ida => "G",
            Functional::MeanOscillation => "M",
            Functional::KernelHankel => "Hkz",
        }
    }
}

/// Samples of a functional on concentric shells.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile<T: Real> {
    pub functional: Functional,
    pub r: T,
    pub q: T,
    pub d: usize,
    pub points: Vec<Cplx<T>>,
    pub shell_of: Vec<T>,
    pub values: Vec<T>,
    pub shells: Vec<T>,
    pub shell_max: Vec<T>,
}

impl<T: Real> RadialProfile<T> {
    pub fn final_value(&self) -> T {
        self.shell_max.last().copied().unwrap_or(T::zero())
    }

    /// Least-squares slope of the shell maxima against the shell radius.
    pub fn trend_slope(&self) -> T {
        if self.shells.len() < 2 {
            return T::zero();
        }
        fit_line(&self.shells, &self.shell_max).1
    }

    pub fn is_decreasing(&self) -> bool {
        self.shell_max.windows(2).all(|w| w[1] < w[0])
    }
}

/// Evenly spaced sample points on each shell `|z| = ρ`.
pub fn shell_points<T: Real>(shells: &[T], per_shell: usize) -> (Vec<Cplx<T>>, Vec<T>) {
    let mut pts = Vec::with_capacity(shells.len() * per_shell);
    let mut which = Vec::with_capacity(pts.capacity());
    for &rho in shells {
        for k in 0..per_shell {
            let th = T::lit(2.0) * T::PI() * T::from_count(k) / T::from_count(per_shell);
            pts.push(c(rho * th.cos(), rho * th.sin()));
            which.push(rho);
        }
    }
    (pts, which)
}

fn shell_maxima<T: Real>(shells: &[T], shell_of: &[T], values: &[T]) -> Vec<T> {
    shells
        .iter()
        .map(|rho| {
            shell_of
                .iter()
                .zip(values)
                .filter(|(s, _)| *s == rho)
                .fold(T::zero(), |m, (_, v)| m.max(*v))
        })
        .collect()
}

fn check_shells<T: Real>(shells: &[T]) -> Result<()> {
    if shells.is_empty() || shells.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::arg("shells", "must be a non-empty increasing list"));
    }
    Ok(())
}

/// Per-shell maxima of `G_{q,r}(f)`.
pub fn vda_profile<T: Real>(
    f: &Symbol<T>,
    q: T,
    r: T,
    d: usize,
    shells: &[T],
    per_shell: usize,
    order: usize,
) -> Result<RadialProfile<T>> {
    check_shells(shells)?;
    let (points, shell_of) = shell_points(shells, per_shell.max(1));
    let solver = LocalSolver::new(r, d, order)?;
    let values = ida_profile(&solver, f, &points, q)?;
    let shell_max = shell_maxima(shells, &shell_of, &values);
    Ok(RadialProfile {
        functional: Functional::Ida,
        r,
        q,
        d,
        points,
        shell_of,
        values,
        shells: shells.to_vec(),
        shell_max,
    })
}

/// Per-shell maxima of `M_{q,r}(f)`.
pub fn mean_oscillation_profile<T: Real>(
    f: &Symbol<T>,
    q: T,
    r: T,
    shells: &[T],
    per_shell: usize,
    order: usize,
) -> Result<RadialProfile<T>> {
    check_shells(shells)?;
    let (points, shell_of) = shell_points(shells, per_shell.max(1));
    let rule = BallRule::new(c(T::zero(), T::zero()), r, order)?;
    let values = points
        .par_iter()
        .map(|z| mean_oscillation(f, *z, r, q, &rule))
        .collect::<Result<Vec<_>>>()?;
    let shell_max = shell_maxima(shells, &shell_of, &values);
    Ok(RadialProfile {
        functional: Functional::MeanOscillation,
        r,
        q,
        d: 0,
        points,
        shell_of,
        values,
        shells: shells.to_vec(),
        shell_max,
    })
}

/// One metadata claim of a symbol family, re-derived numerically.
#[derive(Debug, Clone, PartialEq)]
pub struct MetadataCheck {
    pub claim: String,
    pub expected: f64,
    pub measured: f64,
    pub passed: bool,
}

/// Re-derives the analytic metadata of a built-in family.
pub fn verify_family_metadata<T: Real>(f: &Symbol<T>) -> Result<Vec<MetadataCheck>> {
    let tol: f64 = if T::epsilon() > T::lit(1e-10) { 1e-3 } else { 1e-6 };
    let mut out = Vec::new();
    let mut push = |claim: &str, expected: f64, measured: f64, passed: bool| {
        out.push(MetadataCheck {
            claim: claim.to_string(),
            expected,
            measured,
            passed,
        })
    };
    let probes = [cl::<T>(0.3, -0.2), cl(-0.8, 0.5), cl(1.7, 1.1), cl(-0.1, -2.4)];
    if let Some(h) = fd_step::<T>() {
        for z in probes {
            if let Some(d) = f.dbar(z) {
                let fd = fd_dbar(f, z, h);
                let err = (d - fd).norm().as_f64();
                push("analytic dbar agrees with finite differences", 0.0, err, err < tol.max(1e-5));
            }
        }
    }
    let rule = BallRule::new(cl(0.0, 0.0), T::one(), DEFAULT_BALL_ORDER)?;
    let two = T::lit(2.0);
    match f.family() {
        Family::HoloPoly(coeffs) => {
            let d = coeffs.len().saturating_sub(1).max(1);
            let g = ida_distance(f, cl(0.4, -0.3), T::one(), two, d, &rule)?.residual.as_f64();
            push("G vanishes on holomorphic symbols", 0.0, g, g < 1e-8_f64.max(tol * 1e-2));
        }
        Family::ConjLinear => {
            let one = f.dbar(cl(2.0, -1.0)).unwrap_or_default();
            push("dbar f = 1", 1.0, one.re.as_f64(), one == cl(1.0, 0.0));
            let g = ida_distance(f, cl(1.5, 0.5), T::one(), two, DEFAULT_DEGREE, &rule)?.residual.as_f64();
            let want = 0.5f64.sqrt();
            push("G_{2,1} = 1/sqrt 2", want, g, (g - want).abs() < tol);
        }
        Family::ConjGaussian { .. } => {
            let g = ida_distance(f, cl(6.0, 0.0), T::one(), two, DEFAULT_DEGREE, &rule)?.residual.as_f64();
            push("G decays at infinity", 0.0, g, g < 1e-6);
        }
        Family::Bump { radius } | Family::Step { radius } => {
            let rad = radius.as_f64();
            let v = f.eval(c(*radius * T::lit(1.5), T::zero())).norm().as_f64();
            push("vanishes outside the support radius", 0.0, v, v == 0.0);
            if matches!(f.family(), Family::Step { .. }) {
                let half = T::lit(0.5 * rad);
                let m = mean_oscillation(f, cl(0.0, 0.0), half, two, &rule)?.as_f64();
                push("M_{2,R/2}(0) = 1", 1.0, m, (m - 1.0).abs() < 1e-10);
                let g0 = ida_distance(f, cl(0.0, 0.0), half, two, DEFAULT_DEGREE, &rule)?.residual.as_f64();
                push("G_{2,R/2}(0) vanishes", 0.0, g0, g0 < 1e-8);
                let gb = ida_distance(f, c(*radius, T::zero()), half, two, DEFAULT_DEGREE, &rule)?
                    .residual
                    .as_f64();
                push("G_{2,R/2} on the boundary exceeds 0.1", 0.1, gb, gb > 0.1);
            }
        }
        Family::Mixed { .. } => {
            let g = ida_distance(f, cl(8.0, 3.0), T::one(), two, DEFAULT_DEGREE, &rule)?.residual.as_f64();
            let want = 0.5f64.sqrt();
            push("G_{2,1} = 1/sqrt 2 far from the bump", want, g, (g - want).abs() < tol);
        }
        Family::Custom(_) => {}
    }
    Ok(out)
}

fn cl<T: Real>(re: f64, im: f64) -> Cplx<T> {
    crate::scalar::cl(re, im)
}

fn fd_step<T: Real>() -> Option<T> {
    Some(if T::epsilon() > T::lit(1e-10) { T::lit(1e-2) } else { T::lit(1e-5) })
}

/// Central difference `(∂_x + i ∂_y) f / 2`.
pub fn fd_dbar<T: Real>(f: &Symbol<T>, z: Cplx<T>, h: T) -> Cplx<T> {
    let dx = (f.eval(z + c(h, T::zero())) - f.eval(z - c(h, T::zero()))) / (h + h);
    let dy = (f.eval(z + c(T::zero(), h)) - f.eval(z - c(T::zero(), h))) / (h + h);
    (dx + c(T::zero(), T::one()) * dy) * T::lit(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Window;

    fn z(re: f64, im: f64) -> Cplx<f64> {
        Cplx::new(re, im)
    }

    fn rule(r: f64) -> BallRule<f64> {
        BallRule::new(z(0.0, 0.0), r, DEFAULT_BALL_ORDER).unwrap()
    }

    #[test]
    fn constant_mean_oscillation() {
        let f = Symbol::holo_poly(vec![z(3.0, 4.0)]);
        for q in [1.0, 2.0, 3.5] {
            let m = mean_oscillation(&f, z(1.0, -2.0), 0.7, q, &rule(0.7)).unwrap();
            assert!((m - 5.0).abs() < 1e-12);
        }
    }

    #[test]
    fn conj_mean_oscillation_at_origin() {
        let m = mean_oscillation(&Symbol::conj_linear(), z(0.0, 0.0), 1.0, 2.0, &rule(1.0)).unwrap();
        assert!((m - 0.5f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn compact_symbol_far_away() {
        let f = Symbol::bump(1.0).unwrap();
        let m = mean_oscillation(&f, z(2.6, 0.0), 1.5, 2.0, &rule(1.5)).unwrap();
        assert_eq!(m, 0.0);
    }

    #[test]
    fn q_below_one_is_rejected() {
        let f = Symbol::<f64>::conj_linear();
        assert!(mean_oscillation(&f, z(0.0, 0.0), 1.0, 0.5, &rule(1.0)).is_err());
        assert!(ida_distance(&f, z(0.0, 0.0), 1.0, 0.5, 2, &rule(1.0)).is_err());
    }

    #[test]
    fn holomorphic_polynomial_is_its_own_approximant() {
        let f = Symbol::holo_poly(vec![z(1.0, 0.0), z(0.0, -2.0), z(0.5, 0.5), z(0.1, 0.0)]);
        let a = ida_distance(&f, z(0.7, 0.2), 1.3, 2.0, 3, &rule(1.3)).unwrap();
        assert!(a.residual <= 1e-10);
        let p = a.coefficients();
        let w = z(1.1, 0.9);
        let direct: Cplx<f64> = p.iter().rev().fold(z(0.0, 0.0), |acc, k| acc * (w - a.center) + *k);
        assert!((direct - f.eval(w)).norm() < 1e-10);
        assert!((a.eval(w) - f.eval(w)).norm() < 1e-10);
    }

    #[test]
    fn conj_distance_is_r_over_sqrt2() {
        let f = Symbol::conj_linear();
        for (r, d) in [(0.5, 0), (1.0, 3), (2.0, 6)] {
            for p in [z(0.0, 0.0), z(3.0, -1.0)] {
                let a = ida_distance(&f, p, r, 2.0, d, &rule(r)).unwrap();
                assert!((a.residual - r / 2f64.sqrt()).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn modulus_squared_best_constant() {
        let f = Symbol::custom(
            "abs2",
            |w: Cplx<f64>| z(w.norm_sqr(), 0.0),
            None,
            crate::symbols::SupportHint::EntirePlane,
            crate::symbols::Smoothness::C2,
            crate::symbols::Growth::Polynomial(2),
        );
        for d in [0, 1, 4] {
            let a = ida_distance(&f, z(0.0, 0.0), 1.0, 2.0, d, &rule(1.0)).unwrap();
            assert!((a.residual - 1.0 / (2.0 * 3f64.sqrt())).abs() < 1e-6);
            assert!((a.scaled[0] - z(0.5, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn degree_cap_reports_stable_degree() {
        let err = ida_distance(&Symbol::conj_linear(), z(0.0, 0.0), 1.0, 2.0, 12, &BallRule::new(z(0.0, 0.0), 1.0, 8).unwrap());
        assert!(matches!(err, Err(Error::DegreeCap { requested: 12, stable: 7 })));
    }

    #[test]
    fn non_quadratic_exponent_bounds() {
        let f = Symbol::conj_gaussian(0.5).unwrap();
        let p = z(0.6, -0.4);
        for q in [1.0, 1.5, 3.0] {
            let g = ida_distance(&f, p, 1.0, q, 4, &rule(1.0)).unwrap().residual;
            let m = mean_oscillation(&f, p, 1.0, q, &rule(1.0)).unwrap();
            assert!(g <= m + 1e-12);
            assert!(g > 0.0);
        }
        // for w̄ the q-distance equals the q-th moment of |w − z| on the disk
        let g = ida_distance(&Symbol::conj_linear(), z(0.0, 0.0), 1.0, 1.0, 3, &rule(1.0)).unwrap().residual;
        assert!((g - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn ida_norm_gauges() {
        let lat = Lattice::build(z(0.0, 0.0), 1.0, Window::square(4.0)).unwrap();
        let holo = Symbol::holo_poly(vec![z(0.0, 0.0), z(1.0, 0.0)]);
        for s in [None, Some(1.0), Some(2.0)] {
            let rep = ida_norm(&holo, s, 2.0, 1.0, &lat, 3, DEFAULT_BALL_ORDER).unwrap();
            assert!(rep.value < 1e-8);
        }
        let rep = ida_norm(&Symbol::conj_linear(), None, 2.0, 1.0, &lat, 3, DEFAULT_BALL_ORDER).unwrap();
        assert!((rep.value - 0.5f64.sqrt()).abs() < 1e-5);
        let rep = ida_norm(&Symbol::conj_linear(), Some(2.0), 2.0, 1.0, &lat, 3, DEFAULT_BALL_ORDER).unwrap();
        assert!(rep.window_warning);

        let bump = Symbol::bump(1.0).unwrap();
        let small = Lattice::build(z(0.0, 0.0), 0.5, Window::square(3.0)).unwrap();
        let big = Lattice::build(z(0.0, 0.0), 0.5, Window::square(5.0)).unwrap();
        let a = ida_norm(&bump, None, 2.0, 0.5, &small, 4, DEFAULT_BALL_ORDER).unwrap();
        let b = ida_norm(&bump, None, 2.0, 0.5, &big, 4, DEFAULT_BALL_ORDER).unwrap();
        assert!((a.value - b.value).abs() < 1e-10);
        let s2 = ida_norm(&bump, Some(2.0), 2.0, 0.5, &small, 4, DEFAULT_BALL_ORDER).unwrap();
        assert!(!s2.window_warning);
    }

    #[test]
    fn vanishing_profiles() {
        let shells = [3.0, 4.0, 5.0, 6.0];
        let bump = vda_profile(&Symbol::bump(1.0).unwrap(), 2.0, 1.0, 4, &shells, 16, DEFAULT_BALL_ORDER).unwrap();
        assert!(bump.shell_max.iter().all(|v| *v == 0.0));
        let conj = vda_profile(&Symbol::conj_linear(), 2.0, 1.0, 4, &shells, 16, DEFAULT_BALL_ORDER).unwrap();
        for v in &conj.values {
            assert!((v - 0.5f64.sqrt()).abs() < 1e-6);
        }
        assert!(conj.trend_slope().abs() < 1e-6);
        let cg = vda_profile(&Symbol::conj_gaussian(1.0).unwrap(), 2.0, 1.0, 4, &shells, 16, DEFAULT_BALL_ORDER).unwrap();
        assert!(cg.is_decreasing());
        assert!(cg.final_value() < 1e-6);
        assert!(vda_profile(&Symbol::conj_linear(), 2.0, 1.0, 4, &[2.0, 1.0], 4, 12).is_err());
    }

    #[test]
    fn step_family_oracles() {
        let f = Symbol::step(1.0).unwrap();
        let r = rule(0.5);
        assert!((mean_oscillation(&f, z(0.0, 0.0), 0.5, 2.0, &r).unwrap() - 1.0).abs() < 1e-12);
        assert!(ida_distance(&f, z(0.0, 0.0), 0.5, 2.0, 6, &r).unwrap().residual < 1e-8);
        assert!(ida_distance(&f, z(1.0, 0.0), 0.5, 2.0, 6, &r).unwrap().residual > 0.1);
    }

    #[test]
    fn family_metadata_is_consistent() {
        let fams = [
            Symbol::holo_poly(vec![z(1.0, 0.0), z(0.0, 1.0)]),
            Symbol::conj_linear(),
            Symbol::conj_gaussian(1.0).unwrap(),
            Symbol::bump(1.0).unwrap(),
            Symbol::step(1.0).unwrap(),
            Symbol::mixed(1.0).unwrap(),
        ];
        for f in &fams {
            let checks = verify_family_metadata(f).unwrap();
            assert!(!checks.is_empty());
            for ch in checks {
                assert!(ch.passed, "{}: {} ({} vs {})", f.id(), ch.claim, ch.measured, ch.expected);
            }
        }
    }
}
