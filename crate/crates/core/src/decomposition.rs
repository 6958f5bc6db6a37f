//! Splitting `f = f₁ + f₂` with a lattice partition of unity and local
//! holomorphic approximants, `f₁ = Σ_j h_j ψ_j`.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::oscillation::{fd_dbar, mean_oscillation, LocalApproximation, LocalSolver};
use crate::quadrature::BallRule;
use crate::scalar::{c, Cplx, Real};
use crate::symbols::{Growth, Smoothness, SupportHint, Symbol};

/// Quartic bump `b(ρ) = (1 − (ρ/s)²)²` on `ρ < s`, with `s = factor · r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpProfile<T: Real> {
    pub support: T,
}

impl<T: Real> BumpProfile<T> {
    /// Profile supported in `B(0, factor · r)`; it must stay positive on
    /// the closed ball `B(0, r)` so the normalizing sum cannot vanish.
    pub fn new(r: T, factor: T) -> Result<Self> {
        if !(r > T::zero()) {
            return Err(Error::arg("r", "must be positive"));
        }
        if !(factor > T::one()) {
            return Err(Error::InvalidProfile("bump must be positive on B(0, r)".into()));
        }
        Ok(Self { support: factor * r })
    }

    #[inline]
    pub fn value(&self, d: Cplx<T>) -> T {
        let u = d.norm_sqr() / (self.support * self.support);
        if u < T::one() {
            let v = T::one() - u;
            v * v
        } else {
            T::zero()
        }
    }

    /// `∂̄` of `w ↦ b(|w − a|)` at offset `d = w − a`.
    #[inline]
    pub fn dbar(&self, d: Cplx<T>) -> Cplx<T> {
        let s2 = self.support * self.support;
        let u = d.norm_sqr() / s2;
        if u < T::one() {
            d * (-T::lit(2.0) * (T::one() - u) / s2)
        } else {
            c(T::zero(), T::zero())
        }
    }

    /// `sup |∂̄b| = 4 / (3√3 s)`, attained at `ρ = s/√3`.
    pub fn dbar_bound(&self) -> T {
        T::lit(4.0) / (T::lit(3.0) * T::lit(3.0).sqrt() * self.support)
    }
}

/// `ψ_j = b_j / Σ_k b_k` over a planar lattice.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity<T: Real> {
    lattice: Lattice<T>,
    centers: Vec<Cplx<T>>,
    profile: BumpProfile<T>,
}

/// `(index, ψ_j(z), ∂̄ψ_j(z))` for the members active at a point.
pub type ActiveMember<T> = (usize, T, Cplx<T>);

impl<T: Real> PartitionOfUnity<T> {
    /// Partition subordinate to `B(a_j, 2r)`.
    pub fn build(lattice: Lattice<T>) -> Result<Self> {
        Self::with_support_factor(lattice, T::lit(2.0))
    }

    pub fn with_support_factor(lattice: Lattice<T>, factor: T) -> Result<Self> {
        let profile = BumpProfile::new(lattice.r(), factor)?;
        let centers = lattice.planar_points()?;
        Ok(Self {
            lattice,
            centers,
            profile,
        })
    }

    pub fn lattice(&self) -> &Lattice<T> {
        &self.lattice
    }

    pub fn centers(&self) -> &[Cplx<T>] {
        &self.centers
    }

    pub fn profile(&self) -> BumpProfile<T> {
        self.profile
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Members with `ψ_j(z) > 0`; empty where no bump reaches `z`.
    pub fn active(&self, z: Cplx<T>) -> Vec<ActiveMember<T>> {
        let mut raw: Vec<(usize, T, Cplx<T>)> = Vec::new();
        self.lattice.for_each_neighbor(z, self.profile.support, |i, a| {
            let b = self.profile.value(z - a);
            if b > T::zero() {
                raw.push((i, b, self.profile.dbar(z - a)));
            }
        });
        let sum: T = raw.iter().map(|m| m.1).sum();
        if !(sum > T::zero()) {
            return Vec::new();
        }
        let dsum: Cplx<T> = raw.iter().fold(c(T::zero(), T::zero()), |acc, m| acc + m.2);
        raw.into_iter()
            .map(|(i, b, db)| (i, b / sum, (db * sum - dsum * b) / (sum * sum)))
            .collect()
    }

    /// `Σ_j ψ_j(z)`.
    pub fn total(&self, z: Cplx<T>) -> T {
        self.active(z).iter().map(|m| m.1).sum()
    }

    /// `Σ_j ∂̄ψ_j(z)`.
    pub fn total_dbar(&self, z: Cplx<T>) -> Cplx<T> {
        self.active(z).iter().fold(c(T::zero(), T::zero()), |acc, m| acc + m.2)
    }

    pub fn psi(&self, j: usize, z: Cplx<T>) -> T {
        self.active(z).iter().find(|m| m.0 == j).map_or(T::zero(), |m| m.1)
    }

    pub fn psi_dbar(&self, j: usize, z: Cplx<T>) -> Cplx<T> {
        self.active(z)
            .iter()
            .find(|m| m.0 == j)
            .map_or(c(T::zero(), T::zero()), |m| m.2)
    }

    /// Whether `z` is at least `margin` inside the lattice window.
    pub fn in_interior(&self, z: Cplx<T>, margin: T) -> bool {
        self.lattice.window().shrink(margin).is_some_and(|w| w.contains(z))
    }
}

struct Inner<T: Real> {
    f: Symbol<T>,
    partition: PartitionOfUnity<T>,
    approximants: Vec<LocalApproximation<T>>,
    q: T,
}

/// `f = f₁ + f₂` with `f₁ = Σ h_j ψ_j`; cheap to clone.
#[derive(Clone)]
pub struct Decomposition<T: Real> {
    inner: Arc<Inner<T>>,
}

impl<T: Real> std::fmt::Debug for Decomposition<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Decomposition")
            .field("symbol", &self.inner.f.id())
            .field("members", &self.inner.approximants.len())
            .finish()
    }
}

/// Fits `h_j` on `B(a_j, t)` with `t` the bump support radius.
pub fn decompose<T: Real>(
    f: &Symbol<T>,
    partition: PartitionOfUnity<T>,
    q: T,
    d: usize,
    order: usize,
) -> Result<Decomposition<T>> {
    let t = partition.profile().support;
    let solver = LocalSolver::new(t, d, order)?;
    let approximants = partition
        .centers()
        .par_iter()
        .map(|a| solver.approximate(f, *a, q))
        .collect::<Result<Vec<_>>>()?;
    Ok(Decomposition {
        inner: Arc::new(Inner {
            f: f.clone(),
            partition,
            approximants,
            q,
        }),
    })
}

impl<T: Real> Decomposition<T> {
    pub fn symbol(&self) -> &Symbol<T> {
        &self.inner.f
    }

    pub fn partition(&self) -> &PartitionOfUnity<T> {
        &self.inner.partition
    }

    pub fn approximants(&self) -> &[LocalApproximation<T>] {
        &self.inner.approximants
    }

    pub fn q(&self) -> T {
        self.inner.q
    }

    pub fn f(&self, z: Cplx<T>) -> Cplx<T> {
        self.inner.f.eval(z)
    }

    pub fn f1(&self, z: Cplx<T>) -> Cplx<T> {
        self.f1_and_dbar(z).0
    }

    pub fn f2(&self, z: Cplx<T>) -> Cplx<T> {
        self.inner.f.eval(z) - self.f1(z)
    }

    /// `∂̄f₁ = Σ h_j ∂̄ψ_j`.
    pub fn dbar_f1(&self, z: Cplx<T>) -> Cplx<T> {
        self.f1_and_dbar(z).1
    }

    pub fn f1_and_dbar(&self, z: Cplx<T>) -> (Cplx<T>, Cplx<T>) {
        let zero = c(T::zero(), T::zero());
        self.inner
            .partition
            .active(z)
            .iter()
            .fold((zero, zero), |(v, dv), (j, psi, dpsi)| {
                let h = self.inner.approximants[*j].eval(z);
                (v + h * *psi, dv + h * *dpsi)
            })
    }

    /// `f₁` as a symbol with its analytic `∂̄`.
    pub fn f1_symbol(&self) -> Symbol<T> {
        let a = self.clone();
        let b = self.clone();
        Symbol::custom(
            "f1",
            move |z| a.f1(z),
            Some(Arc::new(move |z| b.dbar_f1(z))),
            SupportHint::EntirePlane,
            Smoothness::C1,
            self.inner.f.growth(),
        )
    }

    /// `f₂ = f − f₁` as a symbol.
    pub fn f2_symbol(&self) -> Symbol<T> {
        let a = self.clone();
        let support = match self.inner.f.support() {
            SupportHint::Compact(r) => SupportHint::Compact(r + T::lit(2.0) * self.inner.partition.profile().support),
            s => s,
        };
        let growth = match self.inner.f.growth() {
            Growth::Gaussian(g) => Growth::Gaussian(g),
            _ => Growth::Bounded,
        };
        Symbol::custom("f2", move |z| a.f2(z), None, support, Smoothness::Measurable, growth)
    }
}

/// One probe row of a control report.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlRow<T: Real> {
    pub z: Cplx<T>,
    pub f: Cplx<T>,
    pub f1: Cplx<T>,
    pub f2: Cplx<T>,
    pub dbar_f1: Cplx<T>,
    pub m_f2: T,
    pub g: T,
    /// `|∂̄f₁|/G`, `None` where `G` is below the ratio floor.
    pub ratio_dbar: Option<T>,
    pub ratio_m: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlReport<T: Real> {
    pub rows: Vec<ControlRow<T>>,
    pub sup_dbar_f1: T,
    pub sup_m_f2: T,
    pub max_ratio_dbar: T,
    pub max_ratio_m: T,
    /// Ratios on the outer half of the probes exceed twice the inner ones.
    pub growth_flag: bool,
}

/// Ratios are only formed where `G` exceeds this floor.
pub const RATIO_FLOOR: f64 = 1e-10;

/// Measures `|∂̄f₁|`, `M_{q,r}(f₂)` and their ratios against `G_{q,r}(f)`.
pub fn verify_controls<T: Real>(
    dec: &Decomposition<T>,
    probes: &[Cplx<T>],
    r: T,
    d: usize,
    order: usize,
) -> Result<ControlReport<T>> {
    let q = dec.q();
    let solver = LocalSolver::new(r, d, order)?;
    let rule = BallRule::new(c(T::zero(), T::zero()), r, order)?;
    let f2 = dec.f2_symbol();
    let floor = T::lit(RATIO_FLOOR);
    let rows = probes
        .par_iter()
        .map(|&z| -> Result<ControlRow<T>> {
            let (f1, dbar_f1) = dec.f1_and_dbar(z);
            let f = dec.f(z);
            let g = solver.approximate(dec.symbol(), z, q)?.residual;
            let m_f2 = mean_oscillation(&f2, z, r, q, &rule)?;
            let ratio = |num: T| (g > floor).then(|| num / g);
            Ok(ControlRow {
                z,
                f,
                f1,
                f2: f - f1,
                dbar_f1,
                m_f2,
                g,
                ratio_dbar: ratio(dbar_f1.norm()),
                ratio_m: ratio(m_f2),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_of = |it: &mut dyn Iterator<Item = T>| it.fold(T::zero(), |m, v| m.max(v));
    let sup_dbar_f1 = max_of(&mut rows.iter().map(|r| r.dbar_f1.norm()));
    let sup_m_f2 = max_of(&mut rows.iter().map(|r| r.m_f2));
    let max_ratio_dbar = max_of(&mut rows.iter().filter_map(|r| r.ratio_dbar));
    let max_ratio_m = max_of(&mut rows.iter().filter_map(|r| r.ratio_m));
    let mut by_radius: Vec<&ControlRow<T>> = rows.iter().collect();
    by_radius.sort_by(|a, b| a.z.norm().partial_cmp(&b.z.norm()).unwrap_or(std::cmp::Ordering::Equal));
    let half = by_radius.len() / 2;
    let ratio_max = |rs: &[&ControlRow<T>]| {
        rs.iter()
            .flat_map(|r| [r.ratio_dbar, r.ratio_m])
            .flatten()
            .fold(T::zero(), T::max)
    };
    let inner = ratio_max(&by_radius[..half]);
    let outer = ratio_max(&by_radius[half..]);
    let growth_flag = half > 0 && outer > T::lit(2.0) * inner && outer > floor;
    Ok(ControlReport {
        rows,
        sup_dbar_f1,
        sup_m_f2,
        max_ratio_dbar,
        max_ratio_m,
        growth_flag,
    })
}

/// Largest discrepancy between the analytic `∂̄f₁` and central differences.
pub fn dbar_consistency<T: Real>(dec: &Decomposition<T>, probes: &[Cplx<T>], h: T) -> T {
    let f1 = dec.f1_symbol();
    probes
        .iter()
        .map(|z| (dec.dbar_f1(*z) - fd_dbar(&f1, *z, h)).norm())
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Window;
    use crate::oscillation::DEFAULT_BALL_ORDER;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn z(re: f64, im: f64) -> Cplx<f64> {
        Cplx::new(re, im)
    }

    fn unit_partition(half: f64, r: f64) -> PartitionOfUnity<f64> {
        PartitionOfUnity::build(Lattice::build(z(0.0, 0.0), r, Window::square(half)).unwrap()).unwrap()
    }

    fn probes(n: usize, half: f64, seed: u64) -> Vec<Cplx<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| z(rng.gen_range(-half..half), rng.gen_range(-half..half)))
            .collect()
    }

    #[test]
    fn profile_must_cover_the_unit_ball() {
        assert!(matches!(BumpProfile::<f64>::new(1.0, 1.0), Err(Error::InvalidProfile(_))));
        let p = BumpProfile::new(0.5, 2.0).unwrap();
        let peak = p.dbar(z(1.0 / 3f64.sqrt(), 0.0)).norm();
        assert!((peak - p.dbar_bound()).abs() < 1e-12);
    }

    #[test]
    fn single_member_is_identically_one() {
        let lat = Lattice::build(z(0.0, 0.0), 1.0, Window::new(0.0, 0.0, 0.0, 0.0).unwrap()).unwrap();
        let p = PartitionOfUnity::build(lat).unwrap();
        for w in [z(0.0, 0.0), z(1.2, -0.4), z(-1.9, 0.0)] {
            assert!((p.psi(0, w) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn partition_sums_to_one() {
        let p = unit_partition(5.0, 1.0);
        assert!((p.total(z(0.5, 0.5)) - 1.0).abs() < 1e-10);
        for w in probes(100, 3.0, 7) {
            assert!((p.total(w) - 1.0).abs() < 1e-10);
            assert!(p.total_dbar(w).norm() < 1e-8);
            for (_, psi, _) in p.active(w) {
                assert!(psi >= 0.0);
            }
        }
    }

    #[test]
    fn members_are_supported_in_twice_r() {
        let p = unit_partition(4.0, 0.5);
        let c0 = p.centers()[10];
        assert_eq!(p.psi(10, c0 + z(1.0, 0.0)), 0.0);
        assert!(p.psi(10, c0 + z(0.99, 0.0)) > 0.0);
    }

    #[test]
    fn analytic_psi_dbar_matches_finite_differences() {
        let p = unit_partition(4.0, 0.7);
        let h = 1e-6;
        for w in probes(30, 2.0, 11) {
            for (j, _, d) in p.active(w) {
                let dx = (p.psi(j, w + z(h, 0.0)) - p.psi(j, w - z(h, 0.0))) / (2.0 * h);
                let dy = (p.psi(j, w + z(0.0, h)) - p.psi(j, w - z(0.0, h))) / (2.0 * h);
                assert!((d - z(dx, dy) * 0.5).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn holomorphic_symbols_split_trivially() {
        let f = Symbol::holo_poly(vec![z(1.0, 0.0), z(0.0, 1.0), z(0.3, -0.2)]);
        let dec = decompose(&f, unit_partition(4.0, 0.5), 2.0, 4, DEFAULT_BALL_ORDER).unwrap();
        for w in probes(40, 2.0, 3) {
            assert!(dec.f2(w).norm() < 1e-8);
            assert!(dec.dbar_f1(w).norm() < 1e-8);
            assert!((dec.f1(w) + dec.f2(w) - f.eval(w)).norm() <= 1e-14 * (1.0 + f.eval(w).norm()));
        }
        let rep = verify_controls(&dec, &probes(20, 2.0, 4), 0.5, 4, DEFAULT_BALL_ORDER).unwrap();
        assert!(rep.sup_dbar_f1 <= 1e-8 && rep.sup_m_f2 <= 1e-8);
    }

    #[test]
    fn conj_controls_are_bounded() {
        let r = 0.5;
        let f = Symbol::conj_linear();
        let dec = decompose(&f, unit_partition(4.0, r), 2.0, 4, DEFAULT_BALL_ORDER).unwrap();
        let pts = probes(40, 2.0, 5);
        let rep = verify_controls(&dec, &pts, r, 4, DEFAULT_BALL_ORDER).unwrap();
        for row in &rep.rows {
            assert!((row.g - r / 2f64.sqrt()).abs() < 1e-6);
        }
        assert!(rep.max_ratio_dbar.is_finite() && rep.max_ratio_dbar > 0.0);
        assert!(rep.max_ratio_m.is_finite());
        assert!(!rep.growth_flag);
        assert!(dbar_consistency(&dec, &pts, 1e-5) < 1e-5);

        let shifted = f.plus_holomorphic(vec![z(0.5, 1.0), z(2.0, 0.0), z(0.0, -1.0)]);
        let dec2 = decompose(&shifted, unit_partition(4.0, r), 2.0, 4, DEFAULT_BALL_ORDER).unwrap();
        let rep2 = verify_controls(&dec2, &pts, r, 4, DEFAULT_BALL_ORDER).unwrap();
        assert!((rep.sup_dbar_f1 - rep2.sup_dbar_f1).abs() < 1e-8);
        assert!((rep.sup_m_f2 - rep2.sup_m_f2).abs() < 1e-8);
        assert!((rep.max_ratio_dbar - rep2.max_ratio_dbar).abs() < 1e-7);
    }

    #[test]
    fn compact_symbols_leave_no_trace_far_away() {
        let r = 0.25;
        let f = Symbol::bump(1.0).unwrap();
        let dec = decompose(&f, unit_partition(4.0, r), 2.0, 4, DEFAULT_BALL_ORDER).unwrap();
        let far: Vec<_> = (0..16)
            .map(|k| {
                let th = k as f64 * std::f64::consts::PI / 8.0;
                z(th.cos(), th.sin()) * (1.0 + 5.0 * r + 0.01)
            })
            .collect();
        let rep = verify_controls(&dec, &far, r, 4, DEFAULT_BALL_ORDER).unwrap();
        assert!(rep.sup_dbar_f1 <= 1e-8 && rep.sup_m_f2 <= 1e-8);
        for w in &far {
            let w4 = *w * ((1.0 + 4.0 * r) / (1.0 + 5.0 * r + 0.01));
            assert!(dec.dbar_f1(w4).norm() <= 1e-8);
        }
    }

    #[test]
    fn step_symbol_uses_only_the_mean_channel() {
        let r = 0.5;
        let f = Symbol::step(1.0).unwrap();
        let dec = decompose(&f, unit_partition(4.0, r), 2.0, 4, DEFAULT_BALL_ORDER).unwrap();
        let rep = verify_controls(&dec, &[z(0.0, 0.0), z(1.0, 0.0), z(2.5, 0.0)], r, 4, DEFAULT_BALL_ORDER).unwrap();
        assert!(rep.sup_m_f2.is_finite());
        for row in &rep.rows {
            assert!((row.f1 + row.f2 - row.f).norm() <= 1e-15);
        }
    }
}
