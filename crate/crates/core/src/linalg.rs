//! Dense and banded linear algebra used by the solvers: condition numbers,
//! a banded LU with partial pivoting, a small sparse row format and the
//! complex Schur decomposition.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is singular (zero pivot at {0})")]
    Singular(usize),
    #[error("Schur iteration did not converge after {iterations} sweeps (subdiagonal residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

pub fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// κ₁(A) = ‖A‖₁‖A⁻¹‖₁ through an explicit LU inverse.
pub fn kappa1(a: &DMatrix<f64>) -> Result<f64, LinalgError> {
    let inv = a.clone().lu().try_inverse().ok_or(LinalgError::Singular(0))?;
    let k = norm1(a) * norm1(&inv);
    if !k.is_finite() {
        return Err(LinalgError::Singular(0));
    }
    Ok(k)
}

pub fn inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>, LinalgError> {
    a.clone().lu().try_inverse().ok_or(LinalgError::Singular(0))
}

/// Solve A X = B for dense real A.
pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>, LinalgError> {
    let lu = a.clone().lu();
    lu.solve(b).ok_or(LinalgError::Singular(0))
}

/// Square matrix in LAPACK-style band storage, factored in place.
#[derive(Debug, Clone)]
pub struct BandLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
    piv: Vec<usize>,
}

impl<T: ComplexField<RealField = f64> + Copy> BandLu<T> {
    /// Empty band matrix with `kl` sub- and `ku` superdiagonals.
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandLu { n, kl, ku, width, data: vec![T::zero(); n * width], piv: Vec::new() }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    /// Add `v` to entry (i, j); must lie inside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        debug_assert!(j + self.kl >= i && j <= i + self.ku);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    pub fn factor(mut self) -> Result<Self, LinalgError> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        self.piv = vec![0; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].modulus();
            for i in k + 1..=last {
                let v = self.data[self.idx(i, k)].modulus();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                return Err(LinalgError::Singular(k));
            }
            self.piv[k] = p;
            let jmax = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for i in k + 1..=last {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                if l == T::zero() {
                    continue;
                }
                for j in k + 1..=jmax {
                    let (ij, kj) = (self.idx(i, j), self.idx(k, j));
                    let v = self.data[kj];
                    self.data[ij] -= l * v;
                }
            }
        }
        Ok(self)
    }

    /// Solve in place with the factored matrix.
    pub fn solve_in_place(&self, b: &mut [T]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= self.data[self.idx(i, k)] * bk;
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for j in k + 1..=(k + kl + ku).min(n - 1) {
                s -= self.data[self.idx(k, j)] * b[j];
            }
            b[k] = s / self.data[self.idx(k, k)];
        }
    }
}

/// Row-compressed sparse real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Sparse {
    pub n: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl Sparse {
    pub fn zeros(n: usize) -> Self {
        Sparse { n, rows: vec![Vec::new(); n] }
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        match self.rows[i].iter_mut().find(|e| e.0 == j) {
            Some(e) => e.1 += v,
            None => self.rows[i].push((j, v)),
        }
    }

    pub fn finalize(&mut self) {
        for r in &mut self.rows {
            r.sort_by_key(|e| e.0);
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// (lower, upper) bandwidth.
    pub fn bandwidth(&self) -> (usize, usize) {
        let mut lo = 0;
        let mut hi = 0;
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, _) in r {
                if j < i {
                    lo = lo.max(i - j);
                } else {
                    hi = hi.max(j - i);
                }
            }
        }
        (lo, hi)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                d[(i, j)] += v;
            }
        }
        d
    }

    pub fn mul_vec<T: ComplexField<RealField = f64> + Copy>(&self, x: &[T], out: &mut [T]) {
        for (i, r) in self.rows.iter().enumerate() {
            let mut s = T::zero();
            for &(j, v) in r {
                s += x[j].scale(v);
            }
            out[i] = s;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|e| e.1 == 0.0))
    }
}

/// Factorization of a linear combination of sparse real matrices, banded
/// when the profile allows it and dense otherwise.
pub enum SparseLu<T: ComplexField<RealField = f64> + Copy> {
    Band(BandLu<T>),
    Dense(nalgebra::LU<T, nalgebra::Dyn, nalgebra::Dyn>),
}

pub type ComplexSolver = SparseLu<Complex64>;

impl<T: ComplexField<RealField = f64> + Copy> SparseLu<T> {
    /// Factor Σ coef_i * mats_i.
    pub fn factor(terms: &[(T, &Sparse)]) -> Result<Self, LinalgError> {
        let n = terms[0].1.n;
        let (mut kl, mut ku) = (0, 0);
        for (_, m) in terms {
            let (a, b) = m.bandwidth();
            kl = kl.max(a);
            ku = ku.max(b);
        }
        if 2 * (kl + ku) + 1 < n {
            let mut band = BandLu::zeros(n, kl, ku);
            for (c, m) in terms {
                for (i, r) in m.rows.iter().enumerate() {
                    for &(j, v) in r {
                        band.add(i, j, c.scale(v));
                    }
                }
            }
            Ok(SparseLu::Band(band.factor()?))
        } else {
            let mut d = DMatrix::<T>::zeros(n, n);
            for (c, m) in terms {
                for (i, r) in m.rows.iter().enumerate() {
                    for &(j, v) in r {
                        d[(i, j)] += c.scale(v);
                    }
                }
            }
            let lu = d.lu();
            if lu.u().diagonal().iter().any(|x| x.modulus() == 0.0) {
                return Err(LinalgError::Singular(0));
            }
            Ok(SparseLu::Dense(lu))
        }
    }

    pub fn solve_in_place(&self, b: &mut [T]) {
        match self {
            SparseLu::Band(lu) => lu.solve_in_place(b),
            SparseLu::Dense(lu) => {
                let x = lu.solve(&DVector::from_column_slice(b)).expect("factored matrix");
                b.copy_from_slice(x.as_slice());
            }
        }
    }
}

/// A = Q R Qᴴ with Q unitary and R upper triangular.
#[derive(Debug, Clone)]
pub struct SchurDecomposition {
    pub q: DMatrix<Complex64>,
    pub r: DMatrix<Complex64>,
    pub sweeps: usize,
}

impl SchurDecomposition {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.r.diagonal().iter().copied().collect()
    }

    /// (‖QᴴQ − I‖, ‖Qᴴ A Q − R‖ / ‖A‖, max |R[i,j]| below the diagonal), Frobenius norms.
    pub fn residuals(&self, a: &DMatrix<Complex64>) -> (f64, f64, f64) {
        let n = a.nrows();
        let qh = self.q.adjoint();
        let orth = (&qh * &self.q - DMatrix::<Complex64>::identity(n, n)).norm();
        let rec = (&qh * a * &self.q - &self.r).norm() / a.norm().max(f64::MIN_POSITIVE);
        let mut low: f64 = 0.0;
        for j in 0..n {
            for i in j + 1..n {
                low = low.max(self.r[(i, j)].norm());
            }
        }
        (orth, rec, low)
    }
}

fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    // U = [[c, s], [-conj(s), c]] maps (a, b) to (r, 0)
    let (na, nb) = (a.norm(), b.norm());
    if nb == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if na == 0.0 {
        return (0.0, b.conj() / nb);
    }
    let r = na.hypot(nb);
    (na / r, (a / na) * b.conj() / r)
}

/// Complex Schur form by Householder reduction to Hessenberg form and
/// shifted QR sweeps with Givens rotations and deflation.
pub fn complex_schur(a: &DMatrix<Complex64>) -> Result<SchurDecomposition, LinalgError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(LinalgError::Shape(format!("{}x{} is not square", n, a.ncols())));
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut h = a.clone();
    let mut q = DMatrix::<Complex64>::identity(n, n);
    // Hessenberg reduction
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = (k + 1..n).map(|i| h[(i, k)]).collect();
        let alpha = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let phase = if x[0].norm() == 0.0 { Complex64::new(1.0, 0.0) } else { x[0] / x[0].norm() };
        let mut v = x.clone();
        v[0] += phase * alpha;
        let vn = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for c in &mut v {
            *c /= vn;
        }
        // H = I - 2 v vᴴ on rows/cols k+1..n
        for j in 0..n {
            let mut s = zero;
            for (t, vi) in v.iter().enumerate() {
                s += vi.conj() * h[(k + 1 + t, j)];
            }
            for (t, vi) in v.iter().enumerate() {
                h[(k + 1 + t, j)] -= 2.0 * vi * s;
            }
        }
        for i in 0..n {
            let mut s = zero;
            for (t, vi) in v.iter().enumerate() {
                s += h[(i, k + 1 + t)] * vi;
            }
            for (t, vi) in v.iter().enumerate() {
                h[(i, k + 1 + t)] -= 2.0 * s * vi.conj();
            }
            let mut s = zero;
            for (t, vi) in v.iter().enumerate() {
                s += q[(i, k + 1 + t)] * vi;
            }
            for (t, vi) in v.iter().enumerate() {
                q[(i, k + 1 + t)] -= 2.0 * s * vi.conj();
            }
        }
        for i in k + 2..n {
            h[(i, k)] = zero;
        }
    }

    let eps = f64::EPSILON;
    let mut hi = n;
    let mut sweeps = 0;
    let mut since_deflation = 0;
    let max_sweeps = 100 * n.max(1);
    while hi > 1 {
        // deflate
        let mut lo = hi - 1;
        while lo > 0 {
            let s = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            let s = if s == 0.0 { h.norm() } else { s };
            if h[(lo, lo - 1)].norm() <= eps * s {
                h[(lo, lo - 1)] = zero;
                break;
            }
            lo -= 1;
        }
        if lo == hi - 1 {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        sweeps += 1;
        since_deflation += 1;
        if sweeps > max_sweeps {
            let residual = (1..n).map(|i| h[(i, i - 1)].norm()).fold(0.0, f64::max);
            return Err(LinalgError::NoConvergence { iterations: sweeps, residual });
        }
        // Wilkinson shift from the trailing 2x2 block, exceptional shift now and then
        let m = hi - 1;
        let (a11, a12, a21, a22) = (h[(m - 1, m - 1)], h[(m - 1, m)], h[(m, m - 1)], h[(m, m)]);
        let mut shift = {
            let tr = a11 + a22;
            let det = a11 * a22 - a12 * a21;
            let disc = (tr * tr - 4.0 * det).sqrt();
            let l1 = (tr + disc) / 2.0;
            let l2 = (tr - disc) / 2.0;
            if (l1 - a22).norm() < (l2 - a22).norm() {
                l1
            } else {
                l2
            }
        };
        if since_deflation % 11 == 10 {
            shift = a22 + Complex64::new(0.75 * h[(m, m - 1)].norm(), 0.3 * h[(m, m - 1)].norm());
        }
        for i in lo..hi {
            h[(i, i)] -= shift;
        }
        let mut rots = Vec::with_capacity(hi - lo - 1);
        for k in lo..hi - 1 {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            for j in k..n {
                let (x, y) = (h[(k, j)], h[(k + 1, j)]);
                h[(k, j)] = c * x + s * y;
                h[(k + 1, j)] = -s.conj() * x + c * y;
            }
            h[(k + 1, k)] = zero;
            rots.push((c, s));
        }
        for (t, &(c, s)) in rots.iter().enumerate() {
            let k = lo + t;
            for i in 0..(k + 2).min(hi) {
                let (x, y) = (h[(i, k)], h[(i, k + 1)]);
                h[(i, k)] = c * x + s.conj() * y;
                h[(i, k + 1)] = -s * x + c * y;
            }
            for i in 0..n {
                let (x, y) = (q[(i, k)], q[(i, k + 1)]);
                q[(i, k)] = c * x + s.conj() * y;
                q[(i, k + 1)] = -s * x + c * y;
            }
        }
        for i in lo..hi {
            h[(i, i)] += shift;
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            h[(i, j)] = zero;
        }
    }
    Ok(SchurDecomposition { q, r: h, sweeps })
}

/// Inverse of an upper-triangular complex matrix.
pub fn upper_triangular_inverse(r: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>, LinalgError> {
    let n = r.nrows();
    let mut inv = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        if r[(j, j)].norm() == 0.0 {
            return Err(LinalgError::Singular(j));
        }
        inv[(j, j)] = Complex64::new(1.0, 0.0) / r[(j, j)];
        for i in (0..j).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for k in i + 1..=j {
                s += r[(i, k)] * inv[(k, j)];
            }
            inv[(i, j)] = -s / r[(i, i)];
        }
    }
    Ok(inv)
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
