//! Small dense kernels: Gauss-Legendre nodes, Hermitian Cholesky solves and
//! a cyclic Jacobi eigensolver. Everything is generic over [`Real`].

use crate::error::{Error, Result};
use crate::scalar::{Cplx, Real};

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = T::from_count(n);
    let half = T::lit(0.5);
    let eps = T::epsilon() * T::lit(4.0);
    for i in 0..(n + 1) / 2 {
        let mut x = (T::PI() * (T::from_count(i) + T::lit(0.75)) / (nf + half)).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= eps {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d.is_finite() { d } else { dp };
        let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = T::zero();
    }
    (nodes, weights)
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::from_count(k);
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (T::one(), T::zero());
    }
    let nf = T::from_count(n);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T: Real> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Cplx<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Cplx::new(T::zero(), T::zero()); rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Cplx<T> {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Cplx<T>) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn add_at(&mut self, i: usize, j: usize, v: Cplx<T>) {
        self.data[i * self.cols + j] += v;
    }

    pub fn trace(&self) -> Cplx<T> {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    /// Largest deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }
}

/// Solves `A x = b` for Hermitian positive definite `A` by Cholesky.
///
/// Returns the solution and the ratio of smallest to largest pivot, which
/// callers use as a conditioning proxy.
pub fn cholesky_solve<T: Real>(a: &CMatrix<T>, b: &[Cplx<T>]) -> Result<(Vec<Cplx<T>>, T)> {
    let n = a.rows;
    if a.cols != n || b.len() != n {
        return Err(Error::arg("matrix", "dimension mismatch in Cholesky solve"));
    }
    let zero = Cplx::new(T::zero(), T::zero());
    let mut l = vec![zero; n * n];
    let mut min_pivot = T::infinity();
    let mut max_pivot = T::zero();
    for j in 0..n {
        let mut d = a.get(j, j).re;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(Error::Consistency(format!(
                "matrix not positive definite at pivot {j}"
            )));
        }
        let djj = d.sqrt();
        min_pivot = min_pivot.min(d);
        max_pivot = max_pivot.max(d);
        l[j * n + j] = Cplx::new(djj, T::zero());
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / djj;
        }
    }
    let mut y = vec![zero; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![zero; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i].conj() * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Ok((x, min_pivot / max_pivot))
}

/// Eigenvalues of a real symmetric matrix (row-major, `n x n`) by cyclic
/// Jacobi rotations, sorted in descending order.
pub fn symmetric_eigenvalues<T: Real>(mut a: Vec<T>, n: usize) -> Vec<T> {
    assert_eq!(a.len(), n * n);
    let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return vec![T::zero(); n];
    }
    let tol = T::epsilon() * scale;
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off.max(a[p * n + q].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq.abs() <= tol * T::lit(1e-3) {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = cs * akp - sn * akq;
                    a[k * n + q] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = cs * apk - sn * aqk;
                    a[q * n + k] = sn * apk + cs * aqk;
                }
                a[p * n + q] = T::zero();
                a[q * n + p] = T::zero();
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

/// Eigenvalues of a Hermitian matrix, descending.
///
/// Works on the real symmetric embedding `[[A, -B], [B, A]]` of `A + iB`,
/// whose spectrum is that of the input with every eigenvalue doubled.
pub fn hermitian_eigenvalues<T: Real>(h: &CMatrix<T>) -> Vec<T> {
    let n = h.rows;
    let m = 2 * n;
    let mut a = vec![T::zero(); m * m];
    for i in 0..n {
        for j in 0..n {
            // symmetrize to suppress rounding-level asymmetry
            let v = (h.get(i, j) + h.get(j, i).conj()) * T::lit(0.5);
            a[i * m + j] = v.re;
            a[(i + n) * m + (j + n)] = v.re;
            a[i * m + (j + n)] = -v.im;
            a[(i + n) * m + j] = v.im;
        }
    }
    let ev = symmetric_eigenvalues(a, m);
    ev.into_iter().step_by(2).collect()
}

/// Closed-form eigenvalues `(min, max)` of a real symmetric 2x2 matrix.
pub fn sym2x2_eigenvalues<T: Real>(a: T, b: T, d: T) -> (T, T) {
    let mean = (a + d) * T::lit(0.5);
    let half_diff = (a - d) * T::lit(0.5);
    let rad = (half_diff * half_diff + b * b).sqrt();
    (mean - rad, mean + rad)
}

/// Ordinary least-squares line `y = intercept + slope * x`.
pub fn fit_line<T: Real>(xs: &[T], ys: &[T]) -> (T, T) {
    let n = T::from_count(xs.len());
    if xs.len() < 2 {
        let y0 = ys.first().copied().unwrap_or_else(T::zero);
        return (y0, T::zero());
    }
    let mx = xs.iter().copied().sum::<T>() / n;
    let my = ys.iter().copied().sum::<T>() / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == T::zero() {
        return (my, T::zero());
    }
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre::<f64>(8);
        for deg in 0..16 {
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg)).sum();
            assert!((got - exact).abs() < 1e-14, "degree {deg}: {got} vs {exact}");
        }
    }

    #[test]
    fn legendre_rule_single_precision() {
        let (x, w) = gauss_legendre::<f32>(6);
        let s: f32 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-5);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn jacobi_matches_2x2_closed_form() {
        let ev = symmetric_eigenvalues(vec![2.0f64, 1.0, 1.0, 3.0], 2);
        let (lo, hi) = sym2x2_eigenvalues(2.0, 1.0, 3.0);
        assert!((ev[0] - hi).abs() < 1e-14 && (ev[1] - lo).abs() < 1e-14);
    }

    #[test]
    fn hermitian_spectrum_of_pauli_y() {
        let mut h = CMatrix::<f64>::zeros(2, 2);
        h.set(0, 1, Cplx::new(0.0, -1.0));
        h.set(1, 0, Cplx::new(0.0, 1.0));
        let ev = hermitian_eigenvalues(&h);
        assert!((ev[0] - 1.0).abs() < 1e-14);
        assert!((ev[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn cholesky_solves_hermitian_system() {
        let mut a = CMatrix::<f64>::zeros(2, 2);
        a.set(0, 0, Cplx::new(4.0, 0.0));
        a.set(0, 1, Cplx::new(1.0, -1.0));
        a.set(1, 0, Cplx::new(1.0, 1.0));
        a.set(1, 1, Cplx::new(3.0, 0.0));
        let x_true = [Cplx::new(1.0, 2.0), Cplx::new(-0.5, 0.25)];
        let b: Vec<_> = (0..2)
            .map(|i| (0..2).map(|j| a.get(i, j) * x_true[j]).sum())
            .collect();
        let (x, ratio) = cholesky_solve(&a, &b).unwrap();
        assert!(ratio > 0.0);
        for (u, v) in x.iter().zip(&x_true) {
            assert!((u - v).norm() < 1e-13);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = CMatrix::<f64>::zeros(2, 2);
        a.set(0, 0, Cplx::new(1.0, 0.0));
        a.set(1, 1, Cplx::new(-1.0, 0.0));
        assert!(cholesky_solve(&a, &[Cplx::new(1.0, 0.0); 2]).is_err());
    }

    #[test]
    fn line_fit_recovers_slope() {
        let xs = [0.0f64, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 - 2.0 * x).collect();
        let (b, m) = fit_line(&xs, &ys);
        assert!((b - 1.5).abs() < 1e-14 && (m + 2.0).abs() < 1e-14);
    }
}

/// Accumulates a vector-valued sum `Σ_i contrib(i)` of length `dim` over
/// `n` items. Items are summed sequentially inside fixed-size chunks and the
/// chunk partials are combined pairwise, so the result is independent of
/// the thread count.
pub fn accumulate_vec<T, F>(n: usize, dim: usize, contrib: F) -> Vec<Cplx<T>>
where
    T: Real,
    F: Fn(usize, &mut [Cplx<T>]) + Sync,
{
    use rayon::prelude::*;
    const CHUNK: usize = 256;
    let zero = Cplx::new(T::zero(), T::zero());
    let chunks = n.div_ceil(CHUNK);
    let partials: Vec<Vec<Cplx<T>>> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let mut acc = vec![zero; dim];
            for i in ci * CHUNK..((ci + 1) * CHUNK).min(n) {
                contrib(i, &mut acc);
            }
            acc
        })
        .collect();
    combine_pairwise(&partials, dim)
}

fn combine_pairwise<T: Real>(parts: &[Vec<Cplx<T>>], dim: usize) -> Vec<Cplx<T>> {
    match parts.len() {
        0 => vec![Cplx::new(T::zero(), T::zero()); dim],
        1 => parts[0].clone(),
        len => {
            let mid = len / 2;
            let mut a = combine_pairwise(&parts[..mid], dim);
            let b = combine_pairwise(&parts[mid..], dim);
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
            a
        }
    }
}
