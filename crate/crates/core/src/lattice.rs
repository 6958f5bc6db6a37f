//! Square r-lattices `{w₁ + (r/√n)(m + i s)}` materialized over finite
//! windows, and their residue sublattices modulo `K`.
//!
//! Points are ordered lexicographically in `(s, m)`.

use crate::error::{Error, Result};
use crate::scalar::{c, Cplx, Real};

pub const DEFAULT_POINT_CAP: usize = 2_000_000;

/// Closed box `[re_lo, re_hi] × [im_lo, im_hi]`, applied to every coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window<T: Real> {
    pub re_lo: T,
    pub re_hi: T,
    pub im_lo: T,
    pub im_hi: T,
}

impl<T: Real> Window<T> {
    pub fn new(re_lo: T, re_hi: T, im_lo: T, im_hi: T) -> Result<Self> {
        if !(re_lo <= re_hi && im_lo <= im_hi) {
            return Err(Error::arg("window", "lower bounds must not exceed upper bounds"));
        }
        Ok(Self {
            re_lo,
            re_hi,
            im_lo,
            im_hi,
        })
    }

    /// Square window `[-half, half]²`.
    pub fn square(half: T) -> Self {
        Self {
            re_lo: -half,
            re_hi: half,
            im_lo: -half,
            im_hi: half,
        }
    }

    pub fn contains(&self, z: Cplx<T>) -> bool {
        z.re >= self.re_lo && z.re <= self.re_hi && z.im >= self.im_lo && z.im <= self.im_hi
    }

    /// The window shrunk by `margin` on every side (possibly empty).
    pub fn shrink(&self, margin: T) -> Option<Self> {
        let w = Self {
            re_lo: self.re_lo + margin,
            re_hi: self.re_hi - margin,
            im_lo: self.im_lo + margin,
            im_hi: self.im_hi - margin,
        };
        (w.re_lo <= w.re_hi && w.im_lo <= w.im_hi).then_some(w)
    }

    pub fn area(&self) -> T {
        (self.re_hi - self.re_lo) * (self.im_hi - self.im_lo)
    }
}

/// Integer label `(m, s)` of one coordinate of a lattice point.
pub type Label = (i64, i64);

#[derive(Debug, Clone, PartialEq)]
pub struct LatticePoint<T: Real> {
    pub labels: Vec<Label>,
    pub coords: Vec<Cplx<T>>,
}

#[derive(Debug, Clone)]
pub struct Lattice<T: Real> {
    base: Vec<Cplx<T>>,
    r: T,
    step: T,
    window: Window<T>,
    points: Vec<LatticePoint<T>>,
    m_range: (i64, i64),
    s_range: (i64, i64),
}

impl<T: Real> Lattice<T> {
    /// Planar lattice `{w₁ + r (m + i s)}` restricted to `window`.
    pub fn build(base: Cplx<T>, r: T, window: Window<T>) -> Result<Self> {
        Self::build_in(vec![base], r, window, DEFAULT_POINT_CAP)
    }

    /// Lattice in `ℂⁿ` (`n = base.len()`) with a point-count cap.
    pub fn build_in(base: Vec<Cplx<T>>, r: T, window: Window<T>, cap: usize) -> Result<Self> {
        if base.is_empty() {
            return Err(Error::arg("base", "dimension must be at least 1"));
        }
        if !(r > T::zero()) || !r.is_finite() {
            return Err(Error::arg("r", "must be positive"));
        }
        if !(window.re_hi > window.re_lo || window.im_hi > window.im_lo)
            && !(window.re_hi == window.re_lo && window.im_hi == window.im_lo)
        {
            return Err(Error::arg("window", "degenerate window"));
        }
        let n = base.len();
        let step = r / T::from_count(n).sqrt();
        let slack = T::lit(1e-12) * (T::one() + step);
        let range = |lo: T, hi: T, origin: T| -> (i64, i64) {
            let a = ((lo - origin) / step - slack).ceil().to_i64().unwrap_or(0);
            let b = ((hi - origin) / step + slack).floor().to_i64().unwrap_or(-1);
            (a, b)
        };
        // per-coordinate label ranges
        let mut axes: Vec<((i64, i64), (i64, i64))> = Vec::with_capacity(n);
        let mut total: usize = 1;
        for b in &base {
            let mr = range(window.re_lo, window.re_hi, b.re);
            let sr = range(window.im_lo, window.im_hi, b.im);
            let cm = (mr.1 - mr.0 + 1).max(0) as usize;
            let cs = (sr.1 - sr.0 + 1).max(0) as usize;
            total = total.saturating_mul(cm).saturating_mul(cs);
            axes.push((mr, sr));
        }
        if total > cap {
            return Err(Error::Capacity { count: total, cap });
        }
        let mut points = Vec::with_capacity(total);
        if total > 0 {
            // odometer over (s_1..s_n, m_1..m_n), s most significant
            let mut s_idx: Vec<i64> = axes.iter().map(|a| a.1 .0).collect();
            let mut m_idx: Vec<i64> = axes.iter().map(|a| a.0 .0).collect();
            'outer: loop {
                let labels: Vec<Label> = m_idx.iter().copied().zip(s_idx.iter().copied()).collect();
                let coords = labels
                    .iter()
                    .zip(&base)
                    .map(|(&(m, s), b)| *b + c(T::from_i64(m).unwrap(), T::from_i64(s).unwrap()) * step)
                    .collect();
                points.push(LatticePoint { labels, coords });
                // advance m (least significant) then s
                for k in (0..n).rev() {
                    if m_idx[k] < axes[k].0 .1 {
                        m_idx[k] += 1;
                        continue 'outer;
                    }
                    m_idx[k] = axes[k].0 .0;
                }
                for k in (0..n).rev() {
                    if s_idx[k] < axes[k].1 .1 {
                        s_idx[k] += 1;
                        continue 'outer;
                    }
                    s_idx[k] = axes[k].1 .0;
                }
                break;
            }
        }
        let (m_range, s_range) = axes[0];
        Ok(Self {
            base,
            r,
            step,
            window,
            points,
            m_range,
            s_range,
        })
    }

    pub fn dimension(&self) -> usize {
        self.base.len()
    }

    pub fn r(&self) -> T {
        self.r
    }

    /// Grid step `r/√n`.
    pub fn step(&self) -> T {
        self.step
    }

    pub fn base(&self) -> &[Cplx<T>] {
        &self.base
    }

    pub fn window(&self) -> Window<T> {
        self.window
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[LatticePoint<T>] {
        &self.points
    }

    /// Area of one lattice cell, `step^{2n}`.
    pub fn cell_volume(&self) -> T {
        self.step.powi(2 * self.dimension() as i32)
    }

    /// Planar coordinates; `n = 1` only.
    pub fn planar_points(&self) -> Result<Vec<Cplx<T>>> {
        self.require_planar()?;
        Ok(self.points.iter().map(|p| p.coords[0]).collect())
    }

    fn require_planar(&self) -> Result<()> {
        if self.dimension() != 1 {
            return Err(Error::Capability("operation needs a planar lattice (n = 1)".into()));
        }
        Ok(())
    }

    /// Index of the planar point with label `(m, s)`, if inside the window.
    pub fn index_of(&self, m: i64, s: i64) -> Option<usize> {
        if self.dimension() != 1 {
            return None;
        }
        let (m0, m1) = self.m_range;
        let (s0, s1) = self.s_range;
        if m < m0 || m > m1 || s < s0 || s > s1 {
            return None;
        }
        let width = (m1 - m0 + 1) as usize;
        Some((s - s0) as usize * width + (m - m0) as usize)
    }

    /// Indices of planar points `a` with `|z − a| < radius`, in lattice order.
    pub fn neighbors(&self, z: Cplx<T>, radius: T) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_neighbor(z, radius, |i, _| out.push(i));
        out
    }

    /// Calls `f(index, point)` for every planar point within `radius` of `z`.
    pub fn for_each_neighbor<F: FnMut(usize, Cplx<T>)>(&self, z: Cplx<T>, radius: T, mut f: F) {
        if self.dimension() != 1 || self.points.is_empty() {
            return;
        }
        let b = self.base[0];
        let lo = |x: T| (x / self.step).floor().to_i64().unwrap_or(i64::MIN / 4);
        let hi = |x: T| (x / self.step).ceil().to_i64().unwrap_or(i64::MAX / 4);
        let m_lo = lo(z.re - b.re - radius).max(self.m_range.0);
        let m_hi = hi(z.re - b.re + radius).min(self.m_range.1);
        let s_lo = lo(z.im - b.im - radius).max(self.s_range.0);
        let s_hi = hi(z.im - b.im + radius).min(self.s_range.1);
        let r2 = radius * radius;
        for s in s_lo..=s_hi {
            for m in m_lo..=m_hi {
                if let Some(i) = self.index_of(m, s) {
                    let a = self.points[i].coords[0];
                    if (z - a).norm_sqr() < r2 {
                        f(i, a);
                    }
                }
            }
        }
    }

    /// Number of lattice points with `|z − a| < factor · r`.
    ///
    /// `z` must lie in the window shrunk by `factor · r`, so that no point
    /// outside the materialized window could have been counted.
    pub fn covering_multiplicity(&self, z: &[Cplx<T>], factor: T) -> Result<usize> {
        if z.len() != self.dimension() {
            return Err(Error::arg("z", "dimension mismatch"));
        }
        let radius = factor * self.r;
        let safe = self.window.shrink(radius);
        let inside = safe.is_some_and(|w| z.iter().all(|zi| w.contains(*zi)));
        if !inside {
            return Err(Error::Window {
                re: z[0].re.as_f64(),
                im: z[0].im.as_f64(),
            });
        }
        if self.dimension() == 1 {
            return Ok(self.neighbors(z[0], radius).len());
        }
        let r2 = radius * radius;
        Ok(self
            .points
            .iter()
            .filter(|p| {
                p.coords
                    .iter()
                    .zip(z)
                    .map(|(a, b)| (*a - *b).norm_sqr())
                    .sum::<T>()
                    < r2
            })
            .count())
    }

    /// Smallest Euclidean distance between distinct points (brute force).
    pub fn min_separation(&self) -> T {
        let mut best = T::infinity();
        for (i, p) in self.points.iter().enumerate() {
            for q in &self.points[i + 1..] {
                let d2: T = p
                    .coords
                    .iter()
                    .zip(&q.coords)
                    .map(|(a, b)| (*a - *b).norm_sqr())
                    .sum();
                best = best.min(d2.sqrt());
            }
        }
        best
    }

    /// Distance from `z` to the nearest planar lattice point.
    pub fn nearest_distance(&self, z: Cplx<T>) -> T {
        let mut best = T::infinity();
        self.for_each_neighbor(z, self.step * T::lit(1.5), |_, a| {
            best = best.min((z - a).norm());
        });
        if best.is_finite() {
            return best;
        }
        self.points
            .iter()
            .map(|p| (p.coords[0] - z).norm())
            .fold(T::infinity(), T::min)
    }

    /// Partition into the `K^{2n}` residue classes of the labels modulo `K`.
    pub fn split_sublattices(&self, k: usize) -> Result<Vec<Sublattice<T>>> {
        if k < 1 {
            return Err(Error::arg("K", "must be at least 1"));
        }
        let n = self.dimension();
        let count = k.pow(2 * n as u32);
        let kk = k as i64;
        let step = self.step;
        let mut subs: Vec<Sublattice<T>> = (0..count)
            .map(|idx| {
                // residues ordered lexicographically in (s, m)
                let mut rem = idx;
                let mut m_res = vec![0i64; n];
                let mut s_res = vec![0i64; n];
                for slot in m_res.iter_mut().rev() {
                    *slot = (rem % k) as i64;
                    rem /= k;
                }
                for slot in s_res.iter_mut().rev() {
                    *slot = (rem % k) as i64;
                    rem /= k;
                }
                let representative = self
                    .base
                    .iter()
                    .zip(m_res.iter().zip(&s_res))
                    .map(|(b, (&m, &s))| {
                        *b + c(T::from_i64(m).unwrap(), T::from_i64(s).unwrap()) * step
                    })
                    .collect();
                Sublattice {
                    modulus: k,
                    residue: idx + 1,
                    representative,
                    residues: m_res.into_iter().zip(s_res).collect(),
                    indices: Vec::new(),
                }
            })
            .collect();
        for (i, p) in self.points.iter().enumerate() {
            subs[self.residue_slot(&p.labels, kk)].indices.push(i);
        }
        Ok(subs)
    }

    /// 1-based residue class of point `i` modulo `K`.
    pub fn sublattice_id(&self, i: usize, k: usize) -> usize {
        self.residue_slot(&self.points[i].labels, k as i64) + 1
    }

    fn residue_slot(&self, labels: &[Label], k: i64) -> usize {
        let mut idx = 0usize;
        for &(_, s) in labels {
            idx = idx * k as usize + s.rem_euclid(k) as usize;
        }
        for &(m, _) in labels {
            idx = idx * k as usize + m.rem_euclid(k) as usize;
        }
        idx
    }
}

/// One residue class `{w_k + K (r/√n)(m + i s)}` of a parent lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Sublattice<T: Real> {
    pub modulus: usize,
    /// 1-based residue index in `1..=K^{2n}`.
    pub residue: usize,
    pub representative: Vec<Cplx<T>>,
    /// `(m mod K, s mod K)` per coordinate.
    pub residues: Vec<Label>,
    /// Indices into the parent's point list.
    pub indices: Vec<usize>,
}
