//! Symbols `f: ℂ → ℂ` and the built-in families used by the experiments.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{c, Cplx, Real};

type Eval<T> = Arc<dyn Fn(Cplx<T>) -> Cplx<T> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupportHint<T: Real> {
    EntirePlane,
    Compact(T),
    BoundedOscillation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Smoothness {
    Measurable,
    C1,
    C2,
}

/// Growth of `|f|` at infinity, used to refuse symbols whose products with
/// the basis escape the quadrature's decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Growth<T: Real> {
    Bounded,
    Polynomial(u32),
    /// `|f| ~ e^{γ|z|²}`.
    Gaussian(T),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family<T: Real> {
    HoloPoly(Vec<Cplx<T>>),
    ConjLinear,
    ConjGaussian { beta: T },
    Bump { radius: T },
    Step { radius: T },
    Mixed { radius: T },
    Custom(String),
}

impl<T: Real> Family<T> {
    pub fn id(&self) -> &str {
        match self {
            Family::HoloPoly(_) => "holo-poly",
            Family::ConjLinear => "conj-linear",
            Family::ConjGaussian { .. } => "conj-gaussian",
            Family::Bump { .. } => "bump",
            Family::Step { .. } => "step",
            Family::Mixed { .. } => "mixed",
            Family::Custom(name) => name,
        }
    }
}

#[derive(Clone)]
pub struct Symbol<T: Real> {
    family: Family<T>,
    f: Eval<T>,
    dbar: Option<Eval<T>>,
    support: SupportHint<T>,
    smoothness: Smoothness,
    growth: Growth<T>,
    breaks: Vec<T>,
    holomorphic: bool,
}

impl<T: Real> fmt::Debug for Symbol<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol")
            .field("family", &self.family)
            .field("support", &self.support)
            .field("smoothness", &self.smoothness)
            .finish()
    }
}

impl<T: Real> Symbol<T> {
    /// A user symbol. `dbar` is the analytic `∂̄f` if known.
    pub fn custom(
        name: &str,
        f: impl Fn(Cplx<T>) -> Cplx<T> + Send + Sync + 'static,
        dbar: Option<Eval<T>>,
        support: SupportHint<T>,
        smoothness: Smoothness,
        growth: Growth<T>,
    ) -> Self {
        Self {
            family: Family::Custom(name.to_string()),
            f: Arc::new(f),
            dbar,
            support,
            smoothness,
            growth,
            breaks: Vec::new(),
            holomorphic: false,
        }
    }

    /// Holomorphic polynomial `Σ a_k w^k`.
    pub fn holo_poly(coeffs: Vec<Cplx<T>>) -> Self {
        let deg = coeffs.iter().rposition(|a| *a != Cplx::new(T::zero(), T::zero())).unwrap_or(0);
        let cs = coeffs.clone();
        Self {
            family: Family::HoloPoly(coeffs),
            f: Arc::new(move |w| cs.iter().rev().fold(Cplx::new(T::zero(), T::zero()), |acc, a| acc * w + *a)),
            dbar: Some(Arc::new(|_| Cplx::new(T::zero(), T::zero()))),
            support: SupportHint::EntirePlane,
            smoothness: Smoothness::C2,
            growth: if deg == 0 { Growth::Bounded } else { Growth::Polynomial(deg as u32) },
            breaks: Vec::new(),
            holomorphic: true,
        }
    }

    /// `f(w) = w̄`.
    pub fn conj_linear() -> Self {
        Self {
            family: Family::ConjLinear,
            f: Arc::new(|w: Cplx<T>| w.conj()),
            dbar: Some(Arc::new(|_| Cplx::new(T::one(), T::zero()))),
            support: SupportHint::BoundedOscillation,
            smoothness: Smoothness::C2,
            growth: Growth::Polynomial(1),
            breaks: Vec::new(),
            holomorphic: false,
        }
    }

    /// `f(w) = w̄ e^{−β|w|²}`.
    pub fn conj_gaussian(beta: T) -> Result<Self> {
        if !(beta > T::zero()) {
            return Err(Error::arg("beta", "must be positive"));
        }
        Ok(Self {
            family: Family::ConjGaussian { beta },
            f: Arc::new(move |w: Cplx<T>| w.conj() * (-beta * w.norm_sqr()).exp()),
            dbar: Some(Arc::new(move |w: Cplx<T>| {
                let t = w.norm_sqr();
                c((T::one() - beta * t) * (-beta * t).exp(), T::zero())
            })),
            support: SupportHint::BoundedOscillation,
            smoothness: Smoothness::C2,
            growth: Growth::Bounded,
            breaks: Vec::new(),
            holomorphic: false,
        })
    }

    /// Radial bump `(1 − |w|²/R²)²` on `|w| < R`.
    pub fn bump(radius: T) -> Result<Self> {
        check_radius(radius)?;
        Ok(Self {
            family: Family::Bump { radius },
            f: Arc::new(move |w| bump_value(w, radius)),
            dbar: Some(Arc::new(move |w| bump_dbar(w, radius))),
            support: SupportHint::Compact(radius),
            smoothness: Smoothness::C1,
            growth: Growth::Bounded,
            breaks: vec![radius],
            holomorphic: false,
        })
    }

    /// Indicator of the open disk `|w| < R`.
    pub fn step(radius: T) -> Result<Self> {
        check_radius(radius)?;
        Ok(Self {
            family: Family::Step { radius },
            f: Arc::new(move |w: Cplx<T>| {
                let v = if w.norm_sqr() < radius * radius { T::one() } else { T::zero() };
                c(v, T::zero())
            }),
            dbar: None,
            support: SupportHint::Compact(radius),
            smoothness: Smoothness::Measurable,
            growth: Growth::Bounded,
            breaks: vec![radius],
            holomorphic: false,
        })
    }

    /// `w̄` plus the bump of radius `R`.
    pub fn mixed(radius: T) -> Result<Self> {
        check_radius(radius)?;
        Ok(Self {
            family: Family::Mixed { radius },
            f: Arc::new(move |w: Cplx<T>| w.conj() + bump_value(w, radius)),
            dbar: Some(Arc::new(move |w| c(T::one(), T::zero()) + bump_dbar(w, radius))),
            support: SupportHint::BoundedOscillation,
            smoothness: Smoothness::C1,
            growth: Growth::Polynomial(1),
            breaks: vec![radius],
            holomorphic: false,
        })
    }

    /// Builds a family from its id and a parameter lookup.
    pub fn make(id: &str, param: impl Fn(&str) -> Option<f64>, coeffs: &[Cplx<T>]) -> Result<Self> {
        let get = |name: &str, default: f64| T::lit(param(name).unwrap_or(default));
        match id {
            "holo-poly" => {
                if coeffs.is_empty() {
                    return Err(Error::arg("coeffs", "holo-poly needs at least one coefficient"));
                }
                Ok(Self::holo_poly(coeffs.to_vec()))
            }
            "conj-linear" => Ok(Self::conj_linear()),
            "conj-gaussian" => Self::conj_gaussian(get("beta", 1.0)),
            "bump" => Self::bump(get("radius", 1.0)),
            "step" => Self::step(get("radius", 1.0)),
            "mixed" => Self::mixed(get("radius", 1.0)),
            other => Err(Error::arg("symbol", format!("unknown family `{other}`"))),
        }
    }

    #[inline]
    pub fn eval(&self, w: Cplx<T>) -> Cplx<T> {
        (self.f)(w)
    }

    /// Evaluates and rejects non-finite values.
    pub fn eval_checked(&self, w: Cplx<T>) -> Result<Cplx<T>> {
        let v = (self.f)(w);
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::eval("symbol", w))
        }
    }

    /// Analytic `∂̄f`, if the family has one.
    pub fn dbar(&self, w: Cplx<T>) -> Option<Cplx<T>> {
        self.dbar.as_ref().map(|d| d(w))
    }

    pub fn has_dbar(&self) -> bool {
        self.dbar.is_some()
    }

    pub fn family(&self) -> &Family<T> {
        &self.family
    }

    pub fn id(&self) -> &str {
        self.family.id()
    }

    pub fn support(&self) -> SupportHint<T> {
        self.support
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn growth(&self) -> Growth<T> {
        self.growth
    }

    /// Radii where `f` or its derivatives are not smooth.
    pub fn radial_breaks(&self) -> &[T] {
        &self.breaks
    }

    pub fn is_holomorphic(&self) -> bool {
        self.holomorphic
    }

    /// Whether `∂̄f` and the oscillation of `f` decay at infinity.
    pub fn has_vanishing_oscillation(&self) -> bool {
        match self.family {
            Family::HoloPoly(_) | Family::ConjGaussian { .. } | Family::Bump { .. } | Family::Step { .. } => true,
            Family::ConjLinear | Family::Mixed { .. } => false,
            Family::Custom(_) => matches!(self.support, SupportHint::Compact(_)),
        }
    }

    /// `f + p` for a holomorphic polynomial `p`; keeps the metadata of `f`.
    pub fn plus_holomorphic(&self, coeffs: Vec<Cplx<T>>) -> Self {
        let p = Self::holo_poly(coeffs);
        let f = self.f.clone();
        let pf = p.f.clone();
        let growth = match (self.growth, p.growth) {
            (Growth::Gaussian(a), _) => Growth::Gaussian(a),
            (Growth::Polynomial(a), Growth::Polynomial(b)) => Growth::Polynomial(a.max(b)),
            (Growth::Bounded, g) | (g, Growth::Bounded) => g,
            (_, g) => g,
        };
        let support = match self.support {
            SupportHint::Compact(_) => SupportHint::EntirePlane,
            s => s,
        };
        Self {
            family: self.family.clone(),
            f: Arc::new(move |w| f(w) + pf(w)),
            dbar: self.dbar.clone(),
            support,
            smoothness: self.smoothness,
            growth,
            breaks: self.breaks.clone(),
            holomorphic: self.holomorphic,
        }
    }

    /// `f(· − a)`.
    pub fn translated(&self, a: Cplx<T>) -> Self {
        let f = self.f.clone();
        let dbar = self.dbar.clone().map(|d| {
            let e: Eval<T> = Arc::new(move |w| d(w - a));
            e
        });
        let mut out = self.clone();
        out.family = Family::Custom(format!("{}-translated", self.id()));
        out.f = Arc::new(move |w| f(w - a));
        out.dbar = dbar;
        out.breaks.clear();
        if let SupportHint::Compact(r) = self.support {
            out.support = SupportHint::Compact(r + a.norm());
        }
        out
    }
}

fn check_radius<T: Real>(r: T) -> Result<()> {
    if r > T::zero() && r.is_finite() {
        Ok(())
    } else {
        Err(Error::arg("radius", "must be positive"))
    }
}

fn bump_value<T: Real>(w: Cplx<T>, r: T) -> Cplx<T> {
    let u = w.norm_sqr() / (r * r);
    if u < T::one() {
        let v = T::one() - u;
        c(v * v, T::zero())
    } else {
        c(T::zero(), T::zero())
    }
}

// f = g(|w|²) with ∂̄|w|² = w
fn bump_dbar<T: Real>(w: Cplx<T>, r: T) -> Cplx<T> {
    let r2 = r * r;
    let u = w.norm_sqr() / r2;
    if u < T::one() {
        w * (-T::lit(2.0) * (T::one() - u) / r2)
    } else {
        c(T::zero(), T::zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cl(re: f64, im: f64) -> Cplx<f64> {
        Cplx::new(re, im)
    }

    fn fd_dbar(s: &Symbol<f64>, z: Cplx<f64>) -> Cplx<f64> {
        let h = 1e-5f64;
        let dx = (s.eval(z + cl(h, 0.0)) - s.eval(z - cl(h, 0.0))) / (2.0 * h);
        let dy = (s.eval(z + cl(0.0, h)) - s.eval(z - cl(0.0, h))) / (2.0 * h);
        (dx + cl(0.0, 1.0) * dy) * 0.5
    }

    #[test]
    fn analytic_dbar_matches_finite_differences() {
        let fams = [
            Symbol::holo_poly(vec![cl(1.0, 0.0), cl(0.0, 2.0), cl(-0.5, 0.3)]),
            Symbol::conj_linear(),
            Symbol::conj_gaussian(0.7).unwrap(),
            Symbol::bump(1.3).unwrap(),
            Symbol::mixed(1.0).unwrap(),
        ];
        let probes = [cl(0.3, -0.2), cl(-0.7, 0.4), cl(1.5, 0.9), cl(0.05, 0.6)];
        for s in &fams {
            for &z in &probes {
                let got = s.dbar(z).unwrap();
                assert!((got - fd_dbar(s, z)).norm() < 1e-7, "{} at {z}", s.id());
            }
        }
    }

    #[test]
    fn family_tags() {
        let cl_ = Symbol::<f64>::conj_linear();
        assert_eq!(cl_.dbar(cl(5.0, -3.0)), Some(cl(1.0, 0.0)));
        let step = Symbol::<f64>::step(1.0).unwrap();
        assert_eq!(step.smoothness(), Smoothness::Measurable);
        assert!(!step.has_dbar());
        let bump = Symbol::<f64>::bump(1.0).unwrap();
        assert_eq!(bump.smoothness(), Smoothness::C1);
        assert_eq!(bump.support(), SupportHint::Compact(1.0));
        for z in [cl(1.0, 0.0), cl(0.8, 0.7), cl(-3.0, 2.0)] {
            assert_eq!(bump.eval(z), cl(0.0, 0.0));
        }
    }

    #[test]
    fn make_dispatches_by_id() {
        let p = |k: &str| (k == "radius").then_some(2.0);
        let s = Symbol::<f64>::make("bump", p, &[]).unwrap();
        assert_eq!(s.support(), SupportHint::Compact(2.0));
        assert!(Symbol::<f64>::make("nope", p, &[]).is_err());
        assert!(Symbol::<f64>::make("holo-poly", p, &[]).is_err());
        let h = Symbol::<f64>::make("holo-poly", p, &[cl(0.0, 0.0), cl(1.0, 0.0)]).unwrap();
        assert_eq!(h.eval(cl(2.0, 3.0)), cl(2.0, 3.0));
        assert_eq!(h.growth(), Growth::Polynomial(1));
    }

    #[test]
    fn translation_and_holomorphic_shift() {
        let s = Symbol::<f64>::conj_gaussian(1.0).unwrap();
        let a = cl(0.4, -1.1);
        let t = s.translated(a);
        let z: Cplx<f64> = cl(0.2, 0.3);
        assert!((t.eval(z + a) - s.eval(z)).norm() < 1e-15);
        let p = s.plus_holomorphic(vec![cl(1.0, 1.0), cl(0.0, 0.0), cl(2.0, 0.0)]);
        assert!((p.eval(z) - s.eval(z) - (cl(1.0, 1.0) + z * z * 2.0f64)).norm() < 1e-15);
        assert_eq!(p.dbar(z), s.dbar(z));
    }

    #[test]
    fn single_precision_families() {
        let s = Symbol::<f32>::conj_gaussian(1.0).unwrap();
        let v = s.eval(Cplx::new(1.0f32, 0.0));
        assert!((v.re - (-1.0f32).exp()).abs() < 1e-6);
    }
}
