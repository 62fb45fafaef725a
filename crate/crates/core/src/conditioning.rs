//! Conditioning of the nearly-Toeplitz temporal families: associated
//! polynomials and their roots, the Schur-complement families, empirical
//! condition growth, the corner structure of the commutator hB·C - C·hB,
//! and the high-precision Casorati test.

use crate::exact::Rational;
use crate::linalg::{complex_schur, inverse, kappa1, loglog_slope, LinalgError};
use crate::temporal::{assemble_any, exact_matrix, MatrixKind, TemporalError};
use dashu_float::FBig;
use dashu_int::IBig;
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::Zero;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub const DEFAULT_ON_CIRCLE_TOL: f64 = 1e-8;
pub const CLUSTER_RADIUS: f64 = 1e-6;
pub const DEFAULT_PRECISION_BITS: usize = 512;
pub const PRECISION_ENV: &str = "CHRONOSPLINE_PRECISION_BITS";

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ConditioningError {
    #[error("invalid request: {0}")]
    Config(String),
    #[error(transparent)]
    Temporal(#[from] TemporalError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Matrix families. G and W are the Toeplitz-product forms ρC² + B² and
/// ρM² + C²; the Schur variants are ρC B⁻¹C + B and ρM C⁻¹M + C.
/// All members are h-free (hB, C, M/h) and ρ = μh².
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum Family {
    B,
    C,
    M,
    G,
    W,
    Gschur,
    Wschur,
}

impl Family {
    pub const ALL: [Family; 7] = [Family::B, Family::C, Family::M, Family::G, Family::W, Family::Gschur, Family::Wschur];

    pub fn uses_rho(self) -> bool {
        !matches!(self, Family::B | Family::C | Family::M)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::B => "B",
            Family::C => "C",
            Family::M => "M",
            Family::G => "G",
            Family::W => "W",
            Family::Gschur => "Gschur",
            Family::Wschur => "Wschur",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Family::ALL
            .into_iter()
            .find(|f| f.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown family '{s}' (expected B, C, M, G, W, Gschur or Wschur)"))
    }
}

/// q(z) = Σ_{i=-m}^{l} a_i z^{m+i}, stored with ascending powers of z.
#[derive(Debug, Clone, PartialEq)]
pub struct AssociatedPolynomial {
    pub m: usize,
    pub l: usize,
    pub coeffs: Vec<Rational>,
}

fn rat(x: f64) -> Rational {
    Rational::from_float(x).expect("finite coefficient")
}

impl AssociatedPolynomial {
    pub fn from_stencil(m: usize, stencil: Vec<Rational>) -> Result<Self, ConditioningError> {
        if stencil.len() <= m {
            return Err(ConditioningError::Config(format!("stencil of length {} with m = {m}", stencil.len())));
        }
        if stencil[0].is_zero() || stencil.last().unwrap().is_zero() {
            return Err(ConditioningError::Config("outer stencil coefficients must be nonzero".into()));
        }
        let l = stencil.len() - 1 - m;
        Ok(AssociatedPolynomial { m, l, coeffs: stencil })
    }

    pub fn from_f64_stencil(m: usize, stencil: &[f64]) -> Result<Self, ConditioningError> {
        if stencil.iter().any(|x| !x.is_finite()) {
            return Err(ConditioningError::Config("non-finite stencil coefficient".into()));
        }
        Self::from_stencil(m, stencil.iter().map(|&x| rat(x)).collect())
    }

    /// Exact polynomial of the h-free family hB, C or M/h of degree p.
    pub fn of_matrix(kind: MatrixKind, p: usize) -> Result<Self, ConditioningError> {
        let n = 4 * p + 4;
        let a = exact_matrix(kind, p, n)?;
        let r = n / 2;
        let stencil = (-(p as isize + 1)..=(p as isize - 1)).map(|i| a[r][(r as isize + i) as usize].clone()).collect();
        Self::from_stencil(p + 1, stencil)
    }

    /// Polynomial of a family; G/W (and their Schur variants) use ρq₁² + q₂².
    pub fn of_family(f: Family, p: usize, rho: f64) -> Result<Self, ConditioningError> {
        let q = |k| Self::of_matrix(k, p);
        Ok(match f {
            Family::B => q(MatrixKind::B)?,
            Family::C => q(MatrixKind::C)?,
            Family::M => q(MatrixKind::M)?,
            Family::G | Family::Gschur => {
                let (b, c) = (q(MatrixKind::B)?, q(MatrixKind::C)?);
                c.product(&c).scaled(&rat(rho)).sum(&b.product(&b))?
            }
            Family::W | Family::Wschur => {
                let (c, m) = (q(MatrixKind::C)?, q(MatrixKind::M)?);
                m.product(&m).scaled(&rat(rho)).sum(&c.product(&c))?
            }
        })
    }

    pub fn degree(&self) -> usize {
        self.m + self.l
    }

    /// Coefficient convolution; the polynomial of a product of banded Toeplitz matrices.
    pub fn product(&self, o: &Self) -> Self {
        let mut c = vec![Rational::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        AssociatedPolynomial { m: self.m + o.m, l: self.l + o.l, coeffs: c }
    }

    pub fn scaled(&self, s: &Rational) -> Self {
        AssociatedPolynomial { m: self.m, l: self.l, coeffs: self.coeffs.iter().map(|a| a * s).collect() }
    }

    pub fn sum(&self, o: &Self) -> Result<Self, ConditioningError> {
        if (self.m, self.l) != (o.m, o.l) {
            return Err(ConditioningError::Config("band widths differ".into()));
        }
        let coeffs = self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + b).collect();
        Ok(AssociatedPolynomial { m: self.m, l: self.l, coeffs })
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coeffs.iter().map(crate::exact::to_f64).collect()
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        horner(&self.to_f64(), z)
    }

    /// e^{-i·deg·θ/2} q(e^{iθ}); real for the symmetric and skew families
    /// (up to a factor i), and equal to the symbol up to sign.
    pub fn centered(&self, theta: f64) -> Complex64 {
        let z = Complex64::from_polar(1.0, theta);
        self.eval(z) * Complex64::from_polar(1.0, -0.5 * self.degree() as f64 * theta)
    }
}

fn horner(c: &[f64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

fn derivative_coeffs(c: &[f64], k: usize) -> Vec<f64> {
    let mut d = c.to_vec();
    for _ in 0..k {
        d = d.iter().enumerate().skip(1).map(|(i, a)| a * i as f64).collect();
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum Location {
    Inside,
    On,
    Outside,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RootEntry {
    pub re: f64,
    pub im: f64,
    pub multiplicity: usize,
    /// Relative residual of q^{(multiplicity-1)} after polishing.
    pub residual: f64,
    /// Found by exact deflation (z = ±1).
    pub exact: bool,
    pub ill_conditioned: bool,
    pub location: Location,
}

impl RootEntry {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct RootCensus {
    pub m: usize,
    pub l: usize,
    pub inside: usize,
    pub on: usize,
    pub outside: usize,
    pub tol: f64,
    pub roots: Vec<RootEntry>,
}

impl RootCensus {
    pub fn on_circle(&self) -> impl Iterator<Item = &RootEntry> {
        self.roots.iter().filter(|r| r.location == Location::On)
    }

    /// Exactly m roots strictly inside or exactly l strictly outside.
    pub fn root_property(&self) -> bool {
        self.inside == self.m || self.outside == self.l
    }

    /// Largest distance between 1/ξ and the nearest root, over all roots ξ.
    pub fn reciprocal_residual(&self) -> f64 {
        let zs: Vec<Complex64> = self.roots.iter().map(RootEntry::z).collect();
        zs.iter()
            .map(|z| {
                let w = z.inv();
                zs.iter().map(|y| (w - y).norm() / y.norm().max(1.0)).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }

    pub fn ill_conditioned(&self) -> Vec<&RootEntry> {
        self.roots.iter().filter(|r| r.ill_conditioned).collect()
    }
}

/// Root census. Roots at ±1 are removed first by exact synthetic division
/// (so their multiplicity is exact); the rest come from the companion
/// eigenvalues, merged within [`CLUSTER_RADIUS`] and Newton-polished.
pub fn root_census(q: &AssociatedPolynomial, tol: f64) -> Result<RootCensus, ConditioningError> {
    if !(tol > 0.0) {
        return Err(ConditioningError::Config(format!("on-circle tolerance must be positive, got {tol}")));
    }
    let mut c = q.coeffs.clone();
    let mut roots = Vec::new();
    for s in [1i64, -1] {
        let sr = Rational::from_integer(s.into());
        let mut k = 0;
        while c.len() > 1 && eval_exact(&c, &sr).is_zero() {
            c = synthetic_division(&c, &sr);
            k += 1;
        }
        if k > 0 {
            roots.push(RootEntry {
                re: s as f64,
                im: 0.0,
                multiplicity: k,
                residual: 0.0,
                exact: true,
                ill_conditioned: false,
                location: Location::On,
            });
        }
    }
    let cf: Vec<f64> = c.iter().map(crate::exact::to_f64).collect();
    let d = cf.len() - 1;
    if d > 0 {
        let lead = cf[d];
        let comp = DMatrix::<Complex64>::from_fn(d, d, |i, j| {
            if i == 0 {
                Complex64::new(-cf[d - 1 - j] / lead, 0.0)
            } else if i == j + 1 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let eig = complex_schur(&comp)?.eigenvalues();
        for (z, mult) in cluster(&eig, CLUSTER_RADIUS) {
            let dc = derivative_coeffs(&cf, mult - 1);
            let (z, residual) = polish(&dc, z);
            roots.push(RootEntry {
                re: z.re,
                im: z.im,
                multiplicity: mult,
                residual,
                exact: false,
                ill_conditioned: residual > 1e-6,
                location: Location::Inside,
            });
        }
    }
    let (mut inside, mut on, mut outside) = (0, 0, 0);
    for r in roots.iter_mut() {
        let gap = r.z().norm() - 1.0;
        r.location = if r.exact || gap.abs() <= tol {
            on += r.multiplicity;
            Location::On
        } else if gap < 0.0 {
            inside += r.multiplicity;
            Location::Inside
        } else {
            outside += r.multiplicity;
            Location::Outside
        };
    }
    roots.sort_by(|a, b| a.z().norm().total_cmp(&b.z().norm()).then(a.im.total_cmp(&b.im)));
    Ok(RootCensus { m: q.m, l: q.l, inside, on, outside, tol, roots })
}

fn eval_exact(c: &[Rational], z: &Rational) -> Rational {
    c.iter().rev().fold(Rational::zero(), |acc, a| acc * z + a)
}

/// Quotient of q(z) by (z - s) when q(s) = 0.
fn synthetic_division(c: &[Rational], s: &Rational) -> Vec<Rational> {
    let d = c.len() - 1;
    let mut out = vec![Rational::zero(); d];
    let mut carry = Rational::zero();
    for i in (1..=d).rev() {
        carry = &c[i] + carry * s;
        out[i - 1] = carry.clone();
    }
    out
}

fn cluster(z: &[Complex64], radius: f64) -> Vec<(Complex64, usize)> {
    let mut group: Vec<usize> = (0..z.len()).collect();
    fn find(g: &mut Vec<usize>, i: usize) -> usize {
        let mut r = i;
        while g[r] != r {
            r = g[r];
        }
        g[i] = r;
        r
    }
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            if (z[i] - z[j]).norm() < radius {
                let (a, b) = (find(&mut group, i), find(&mut group, j));
                group[a] = b;
            }
        }
    }
    let mut out: Vec<(usize, Complex64, usize)> = Vec::new();
    for i in 0..z.len() {
        let r = find(&mut group, i);
        match out.iter_mut().find(|e| e.0 == r) {
            Some(e) => {
                e.1 += z[i];
                e.2 += 1;
            }
            None => out.push((r, z[i], 1)),
        }
    }
    out.into_iter().map(|(_, s, k)| (s / k as f64, k)).collect()
}

fn relative_residual(c: &[f64], z: Complex64) -> f64 {
    let scale: f64 = c.iter().enumerate().map(|(i, a)| a.abs() * z.norm().powi(i as i32)).sum();
    horner(c, z).norm() / scale.max(f64::MIN_POSITIVE)
}

fn polish(c: &[f64], mut z: Complex64) -> (Complex64, f64) {
    let dc = derivative_coeffs(c, 1);
    let mut res = relative_residual(c, z);
    for _ in 0..50 {
        let d = horner(&dc, z);
        if d.norm() == 0.0 {
            break;
        }
        let cand = z - horner(c, z) / d;
        let r = relative_residual(c, cand);
        if !(r < res) {
            break;
        }
        z = cand;
        res = r;
    }
    (z, res)
}

/// h-free n x n member of a family.
pub fn family_matrix(f: Family, p: usize, n: usize, rho: f64) -> Result<DMatrix<f64>, ConditioningError> {
    FamilyPencil::new(f, p, n)?.at(rho)
}

/// Every family is affine in ρ: A(ρ) = A₀ + ρA₁. Building both parts once
/// makes a ρ sweep cost one factorization per point.
#[derive(Debug, Clone)]
pub struct FamilyPencil {
    pub family: Family,
    pub p: usize,
    pub n: usize,
    a0: DMatrix<f64>,
    a1: Option<DMatrix<f64>>,
}

impl FamilyPencil {
    pub fn new(f: Family, p: usize, n: usize) -> Result<Self, ConditioningError> {
        if p == 0 || n < 3 * p + 1 {
            return Err(ConditioningError::Config(format!("need p >= 1 and n >= 3p+1, got p={p}, n={n}")));
        }
        let intervals = n + 1 - p;
        let set = assemble_any(p, intervals, intervals as f64)?;
        let (b, c, m) = (set.scaled(MatrixKind::B), set.scaled(MatrixKind::C), set.scaled(MatrixKind::M));
        let (a0, a1) = match f {
            Family::B => (b, None),
            Family::C => (c, None),
            Family::M => (m, None),
            Family::G => (&b * &b, Some(&c * &c)),
            Family::W => (&c * &c, Some(&m * &m)),
            Family::Gschur => (b.clone(), Some(&c * crate::linalg::solve(&b, &c)?)),
            Family::Wschur => (c.clone(), Some(&m * crate::linalg::solve(&c, &m)?)),
        };
        Ok(FamilyPencil { family: f, p, n, a0, a1 })
    }

    pub fn at(&self, rho: f64) -> Result<DMatrix<f64>, ConditioningError> {
        match &self.a1 {
            None => Ok(self.a0.clone()),
            Some(a1) if rho > 0.0 && rho.is_finite() => Ok(a1 * rho + &self.a0),
            Some(_) => Err(ConditioningError::Config(format!("family {} needs rho > 0, got {rho}", self.family))),
        }
    }

    /// κ₁ at ρ, None when numerically singular.
    pub fn kappa(&self, rho: f64) -> Result<Option<f64>, ConditioningError> {
        Ok(kappa_or_none(&self.at(rho)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GrowthPoint {
    pub n: usize,
    /// None when the member is numerically singular.
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GrowthFit {
    pub family: Family,
    pub p: usize,
    pub rho: f64,
    pub points: Vec<GrowthPoint>,
    /// Least-squares slope of log κ₁ against log n over the nonsingular points.
    pub slope: f64,
}

impl GrowthFit {
    pub fn singular_at(&self) -> Option<usize> {
        self.points.iter().find(|p| p.kappa.is_none()).map(|p| p.n)
    }
}

fn kappa_or_none(a: &DMatrix<f64>) -> Option<f64> {
    kappa1(a).ok().filter(|k| k.is_finite())
}

pub fn condition_sweep(f: Family, p: usize, sizes: &[usize], rho: f64) -> Result<GrowthFit, ConditioningError> {
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ConditioningError::Config("sizes must be strictly ascending".into()));
    }
    let mut points = Vec::with_capacity(sizes.len());
    for &n in sizes {
        points.push(GrowthPoint { n, kappa: kappa_or_none(&family_matrix(f, p, n, rho)?) });
    }
    let (x, y): (Vec<f64>, Vec<f64>) = points.iter().filter_map(|q| q.kappa.map(|k| (q.n as f64, k))).unzip();
    let slope = if x.len() >= 2 { loglog_slope(&x, &y) } else { f64::NAN };
    Ok(GrowthFit { family: f, p, rho, points, slope })
}

/// κ₁ of a family at fixed n over a list of ρ values (sorted output).
pub fn rho_sweep(f: Family, p: usize, n: usize, rhos: &[f64]) -> Result<Vec<(f64, Option<f64>)>, ConditioningError> {
    let pencil = FamilyPencil::new(f, p, n)?;
    let mut out = Vec::with_capacity(rhos.len());
    for &r in rhos {
        out.push((r, pencil.kappa(r)?));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Uniform grid lo..=hi with `steps` points.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![lo],
        _ => (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect(),
    }
}

/// The blow-up rule: κ₁(ρ) above ten times κ₁(ρ/2), a singular member
/// counting as infinite κ.
pub fn is_blow_up(kappa: Option<f64>, kappa_half: Option<f64>) -> bool {
    kappa.unwrap_or(f64::INFINITY) > 10.0 * kappa_half.unwrap_or(f64::INFINITY)
}

/// Smallest ρ on the grid satisfying [`is_blow_up`].
pub fn blow_up_onset(f: Family, p: usize, n: usize, rhos: &[f64]) -> Result<Option<f64>, ConditioningError> {
    let pencil = FamilyPencil::new(f, p, n)?;
    for &r in rhos {
        if is_blow_up(pencil.kappa(r)?, pencil.kappa(0.5 * r)?) {
            return Ok(Some(r));
        }
    }
    Ok(None)
}

/// Corner blocks of D = hB·C - C·hB.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerReport {
    pub p: usize,
    pub n: usize,
    /// max |D| outside the two corner blocks.
    pub interior_max: f64,
    /// (2p+1) x (2p-2) top-left block.
    pub top_left: DMatrix<f64>,
    /// (2p-2) x (2p+1) bottom-right block.
    pub bottom_right: DMatrix<f64>,
    /// ‖bottom_right + J·top_leftᵀ·J‖ with J the flip.
    pub flip_transpose_residual: f64,
    /// ‖bottom_right + top_leftᵀ‖.
    pub transpose_residual: f64,
}

impl CornerReport {
    pub fn structured(&self, tol: f64) -> bool {
        self.interior_max <= tol && self.flip_transpose_residual.min(self.transpose_residual) <= tol
    }
}

pub fn commutator(b: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    b * c - c * b
}

fn flip(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = a.shape();
    DMatrix::from_fn(r, c, |i, j| a[(r - 1 - i, c - 1 - j)])
}

/// Split D into the two corner blocks and the remainder.
pub fn corner_report(d: &DMatrix<f64>, p: usize) -> CornerReport {
    let n = d.nrows();
    let (r1, c1) = (2 * p + 1, 2 * p - 2);
    let top_left = d.view((0, 0), (r1, c1)).into_owned();
    let bottom_right = d.view((n - c1, n - r1), (c1, r1)).into_owned();
    let mut interior_max = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let in_tl = i < r1 && j < c1;
            let in_br = i >= n - c1 && j >= n - r1;
            if !in_tl && !in_br {
                interior_max = interior_max.max(d[(i, j)].abs());
            }
        }
    }
    let tlt = top_left.transpose();
    let flip_transpose_residual = (&bottom_right + flip(&tlt)).norm();
    let transpose_residual = (&bottom_right + &tlt).norm();
    CornerReport { p, n, interior_max, top_left, bottom_right, flip_transpose_residual, transpose_residual }
}

pub fn commutator_census(p: usize, n: usize) -> Result<CornerReport, ConditioningError> {
    let b = family_matrix(Family::B, p, n, 1.0)?;
    let c = family_matrix(Family::C, p, n, 1.0)?;
    Ok(corner_report(&commutator(&b, &c), p))
}

/// Largest difference of the corner blocks between two sizes.
pub fn commutator_blocks_difference(a: &CornerReport, b: &CornerReport) -> f64 {
    (&a.top_left - &b.top_left).norm().max((&a.bottom_right - &b.bottom_right).norm())
}

/// D·(hB)⁻¹·C.
pub fn perturbation_matrix(p: usize, n: usize) -> Result<DMatrix<f64>, ConditioningError> {
    let b = family_matrix(Family::B, p, n, 1.0)?;
    let c = family_matrix(Family::C, p, n, 1.0)?;
    let d = commutator(&b, &c);
    Ok(d * crate::linalg::solve(&b, &c)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationWidth {
    pub p: usize,
    pub n: usize,
    pub eps: f64,
    pub n1: usize,
    pub n2: usize,
    /// First 2p+1 rows, first n1 columns.
    pub top: DMatrix<f64>,
    /// Last 2p-2 rows, last n2 columns.
    pub bottom: DMatrix<f64>,
    /// max |entry| outside the two blocks.
    pub outside_max: f64,
}

pub fn perturbation_width(p: usize, n: usize, eps: f64) -> Result<PerturbationWidth, ConditioningError> {
    if !(eps > 0.0) {
        return Err(ConditioningError::Config(format!("eps must be positive, got {eps}")));
    }
    let a = perturbation_matrix(p, n)?;
    let (rt, rb) = (2 * p + 1, 2 * p - 2);
    let n1 = (0..n).rev().find(|&j| (0..rt).any(|i| a[(i, j)].abs() > eps)).map_or(0, |j| j + 1);
    let n2 = (0..n).find(|&j| (n - rb..n).any(|i| a[(i, j)].abs() > eps)).map_or(0, |j| n - j);
    let mut outside_max = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let in_top = i < rt && j < n1;
            let in_bottom = i >= n - rb && j >= n - n2;
            if !in_top && !in_bottom {
                outside_max = outside_max.max(a[(i, j)].abs());
            }
        }
    }
    Ok(PerturbationWidth {
        p,
        n,
        eps,
        n1,
        n2,
        top: a.view((0, 0), (rt, n1)).into_owned(),
        bottom: a.view((n - rb, n - n2), (rb, n2)).into_owned(),
        outside_max,
    })
}

/// Block difference between two widths with equal (n1, n2); None otherwise.
pub fn perturbation_blocks_difference(a: &PerturbationWidth, b: &PerturbationWidth) -> Option<f64> {
    ((a.n1, a.n2) == (b.n1, b.n2)).then(|| (&a.top - &b.top).norm().max((&a.bottom - &b.bottom).norm()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum BlockStatus {
    Nonsingular,
    Singular,
    /// κ₁ above 1e12: too close to call.
    Indeterminate,
}

/// Status of the four corner blocks [1:m, l+1:m+l], [m+1:m+l, 1:l],
/// [n-(l+m-1):n-l, n-(m-1):n], [n-(l-1):n, n-(m+l-1):n-m] (1-based).
pub fn corner_blocks(a: &DMatrix<f64>, m: usize, l: usize) -> [(BlockStatus, f64); 4] {
    let n = a.nrows();
    let status = |r0: usize, c0: usize, k: usize| {
        if k == 0 {
            return (BlockStatus::Nonsingular, 1.0);
        }
        match kappa1(&a.view((r0, c0), (k, k)).into_owned()) {
            Ok(kap) if kap <= 1e12 => (BlockStatus::Nonsingular, kap),
            Ok(kap) => (BlockStatus::Indeterminate, kap),
            Err(_) => (BlockStatus::Singular, f64::INFINITY),
        }
    };
    [
        status(0, l, m),
        status(m, 0, l),
        status(n - (l + m), n - m, m),
        status(n - l, n - (m + l), l),
    ]
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct DecayReport {
    pub p: usize,
    pub n: usize,
    pub c: f64,
    pub gamma: f64,
    /// Superdiagonal offsets used in the fit.
    pub fitted_offsets: usize,
    /// Entries below this level are treated as roundoff.
    pub floor: f64,
    pub violations: usize,
}

impl DecayReport {
    pub fn holds(&self) -> bool {
        self.gamma < 1.0 && self.violations == 0
    }
}

/// Fit |(hB)⁻¹[ℓ,j]| ≤ c (I + F + Δᵀ(γ))[ℓ,j] on the top-right
/// (n-p-1) x (n-p-1) block and count entries breaking the fitted bound.
pub fn inverse_decay_check(p: usize, n: usize) -> Result<DecayReport, ConditioningError> {
    let binv = inverse(&family_matrix(Family::B, p, n, 1.0)?)?;
    let k = n - p - 1;
    let c0 = p + 1; // first column of the block (0-based)
    let maxabs = binv.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let floor = 1e-12 * maxabs;
    // entries with ℓ >= j and per-offset maxima above the diagonal
    let mut lower = 0.0_f64;
    let mut upper = vec![0.0_f64; n];
    for i in 0..k {
        for j in c0..n {
            let v = binv[(i, j)].abs();
            if i >= j {
                lower = lower.max(v);
            } else {
                let d = j - i;
                upper[d] = upper[d].max(v / d as f64);
            }
        }
    }
    let fit: Vec<(f64, f64)> = (1..n).filter(|&d| upper[d] * d as f64 > floor).map(|d| (d as f64, upper[d].ln())).collect();
    let gamma = if fit.len() >= 2 {
        let nn = fit.len() as f64;
        let mx = fit.iter().map(|e| e.0).sum::<f64>() / nn;
        let my = fit.iter().map(|e| e.1).sum::<f64>() / nn;
        let sxy: f64 = fit.iter().map(|e| (e.0 - mx) * (e.1 - my)).sum();
        let sxx: f64 = fit.iter().map(|e| (e.0 - mx).powi(2)).sum();
        (sxy / sxx).exp()
    } else {
        0.0
    };
    let mut c = lower;
    for &(d, la) in &fit {
        c = c.max((la - d * gamma.ln()).exp());
    }
    let mut violations = 0;
    for i in 0..k {
        for j in c0..n {
            let bound = if i >= j {
                c
            } else {
                let d = (j - i) as f64;
                c * d * gamma.powf(d)
            };
            if binv[(i, j)].abs() > bound * (1.0 + 1e-12) + floor {
                violations += 1;
            }
        }
    }
    Ok(DecayReport { p, n, c, gamma, fitted_offsets: fit.len(), floor, violations })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum CasoratiOutcome {
    Invertible,
    Singular,
    Indeterminate(String),
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CasoratiReport {
    pub p: usize,
    pub bits: usize,
    pub outcome: CasoratiOutcome,
    /// log₂ κ₁(W) of the Casorati matrix.
    pub w_condition_log2: f64,
    /// log₂ of |det X| / Π‖row‖ for the l x l test matrix X.
    pub normalized_det_log2: f64,
}

/// Working precision from the environment (default 512, at least 256).
pub fn precision_bits_from_env() -> usize {
    std::env::var(PRECISION_ENV).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_PRECISION_BITS).max(256)
}

#[derive(Clone, Debug)]
struct Hc {
    re: FBig,
    im: FBig,
}

fn hp_f64(x: f64, bits: usize) -> FBig {
    FBig::try_from(x).expect("finite").with_precision(bits).value()
}

fn hp_rational(x: &Rational, bits: usize) -> FBig {
    let n: IBig = x.numer().to_string().parse().expect("integer");
    let d: IBig = x.denom().to_string().parse().expect("integer");
    FBig::from(n).with_precision(bits).value() / FBig::from(d).with_precision(bits).value()
}

fn to_f64(x: &FBig) -> f64 {
    x.to_f64().value()
}

impl Hc {
    fn zero(bits: usize) -> Self {
        Hc { re: hp_f64(0.0, bits), im: hp_f64(0.0, bits) }
    }
    fn real(re: FBig, bits: usize) -> Self {
        Hc { re, im: hp_f64(0.0, bits) }
    }
    fn from_c64(z: Complex64, bits: usize) -> Self {
        Hc { re: hp_f64(z.re, bits), im: hp_f64(z.im, bits) }
    }
    fn add(&self, o: &Hc) -> Hc {
        Hc { re: &self.re + &o.re, im: &self.im + &o.im }
    }
    fn sub(&self, o: &Hc) -> Hc {
        Hc { re: &self.re - &o.re, im: &self.im - &o.im }
    }
    fn mul(&self, o: &Hc) -> Hc {
        Hc { re: &self.re * &o.re - &self.im * &o.im, im: &self.re * &o.im + &self.im * &o.re }
    }
    fn norm_sqr(&self) -> FBig {
        &self.re * &self.re + &self.im * &self.im
    }
    fn div(&self, o: &Hc) -> Hc {
        let d = o.norm_sqr();
        Hc {
            re: (&self.re * &o.re + &self.im * &o.im) / &d,
            im: (&self.im * &o.re - &self.re * &o.im) / &d,
        }
    }
    fn abs_f64(&self) -> f64 {
        to_f64(&self.norm_sqr()).sqrt()
    }
}

fn hp_horner(c: &[FBig], z: &Hc, bits: usize) -> Hc {
    c.iter().rev().fold(Hc::zero(bits), |acc, a| acc.mul(z).add(&Hc::real(a.clone(), bits)))
}

fn hp_newton(c: &[FBig], mut z: Hc, bits: usize) -> Hc {
    let dc: Vec<FBig> = c.iter().enumerate().skip(1).map(|(i, a)| a * hp_f64(i as f64, bits)).collect();
    let stop = 2f64.powi(-(bits as i32 - 16));
    for _ in 0..200 {
        let step = hp_horner(c, &z, bits).div(&hp_horner(&dc, &z, bits));
        z = z.sub(&step);
        if step.abs_f64() <= stop * z.abs_f64().max(1.0) {
            break;
        }
    }
    z
}

/// Gauss–Jordan inverse with partial pivoting; None if a pivot vanishes.
fn hp_inverse(a: &[Vec<Hc>], bits: usize) -> Option<Vec<Vec<Hc>>> {
    let n = a.len();
    let mut m: Vec<Vec<Hc>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| Hc::real(hp_f64(if i == j { 1.0 } else { 0.0 }, bits), bits)));
            r
        })
        .collect();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| m[i][k].abs_f64().total_cmp(&m[j][k].abs_f64()))?;
        if m[piv][k].norm_sqr().repr().significand() == &IBig::ZERO {
            return None;
        }
        m.swap(k, piv);
        let pr = m[k][k].clone();
        for j in 0..2 * n {
            m[k][j] = m[k][j].div(&pr);
        }
        for i in 0..n {
            if i != k {
                let f = m[i][k].clone();
                for j in 0..2 * n {
                    let t = f.mul(&m[k][j]);
                    m[i][j] = m[i][j].sub(&t);
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

fn hp_det(a: &[Vec<Hc>], bits: usize) -> Hc {
    let n = a.len();
    let mut m = a.to_vec();
    let mut det = Hc::real(hp_f64(1.0, bits), bits);
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| m[i][k].abs_f64().total_cmp(&m[j][k].abs_f64())).unwrap();
        if m[piv][k].norm_sqr().repr().significand() == &IBig::ZERO {
            return Hc::zero(bits);
        }
        if piv != k {
            m.swap(k, piv);
            det = Hc::zero(bits).sub(&det);
        }
        det = det.mul(&m[k][k]);
        for i in k + 1..n {
            let f = m[i][k].div(&m[k][k]);
            for j in k..n {
                let t = f.mul(&m[k][j]);
                m[i][j] = m[i][j].sub(&t);
            }
        }
    }
    det
}

fn norm1_hp(a: &[Vec<Hc>]) -> f64 {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j].abs_f64()).sum::<f64>()).fold(0.0, f64::max)
}

/// Exact solve Y₂ X = Y₁; None if Y₂ is singular.
fn rational_solve(a: &[Vec<Rational>], b: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let n = a.len();
    let w = b[0].len();
    let mut m: Vec<Vec<Rational>> = a.iter().zip(b).map(|(r, s)| r.iter().chain(s).cloned().collect()).collect();
    for k in 0..n {
        let piv = (k..n).find(|&i| !m[i][k].is_zero())?;
        m.swap(k, piv);
        let pr = m[k][k].clone();
        for j in 0..n + w {
            m[k][j] = &m[k][j] / &pr;
        }
        for i in 0..n {
            if i != k && !m[i][k].is_zero() {
                let f = m[i][k].clone();
                for j in 0..n + w {
                    let t = &f * &m[k][j];
                    m[i][j] -= t;
                }
            }
        }
    }
    Some(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Nonsingularity of (W⁻¹)[m+1:m+l, 1:m+l]·Y₂⁻¹·Y₁ for the family C of
/// degree p, where W is the Casorati (Vandermonde) matrix of the roots of
/// q^C ordered by modulus, and Y₁, Y₂ are the first l and next m+l columns
/// of the top (m+l) rows of C. Arithmetic in `bits`-bit floats; outcomes
/// too close to call at that precision are reported as indeterminate.
pub fn casorati_invertibility(p: usize, bits: usize) -> Result<CasoratiReport, ConditioningError> {
    if p == 0 {
        return Err(ConditioningError::Config("p must be positive".into()));
    }
    if bits < 64 {
        return Err(ConditioningError::Config(format!("precision of {bits} bits is too low")));
    }
    let (m, l) = (p + 1, p - 1);
    if l == 0 {
        // lower-triangular case: nothing outside the circle
        return Ok(CasoratiReport {
            p,
            bits,
            outcome: CasoratiOutcome::Invertible,
            w_condition_log2: 0.0,
            normalized_det_log2: 0.0,
        });
    }
    let indeterminate = |why: String| CasoratiReport {
        p,
        bits,
        outcome: CasoratiOutcome::Indeterminate(why),
        w_condition_log2: f64::NAN,
        normalized_det_log2: f64::NAN,
    };
    let q = AssociatedPolynomial::of_matrix(MatrixKind::C, p)?;
    let census = root_census(&q, DEFAULT_ON_CIRCLE_TOL)?;
    if census.outside != l || census.roots.iter().any(|r| r.multiplicity != 1) {
        return Ok(indeterminate(format!("root census {}/{}/{} does not fit the criterion", census.inside, census.on, census.outside)));
    }
    let hc: Vec<FBig> = q.coeffs.iter().map(|a| hp_rational(a, bits)).collect();
    let mut roots: Vec<(f64, Hc)> = census
        .roots
        .iter()
        .map(|r| {
            let z0 = Hc::from_c64(r.z(), bits);
            let z = if r.exact { z0 } else { hp_newton(&hc, z0, bits) };
            (r.z().norm(), z)
        })
        .collect();
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    let k = m + l;
    // W[i][j] = z_j^i
    let mut w = vec![vec![Hc::zero(bits); k]; k];
    for (j, (_, z)) in roots.iter().enumerate() {
        let mut pw = Hc::real(hp_f64(1.0, bits), bits);
        for row in w.iter_mut() {
            row[j] = pw.clone();
            pw = pw.mul(z);
        }
    }
    let Some(winv) = hp_inverse(&w, bits) else {
        return Ok(indeterminate("Casorati matrix is numerically singular".into()));
    };
    let w_condition_log2 = (norm1_hp(&w) * norm1_hp(&winv)).log2();
    let c = exact_matrix(MatrixKind::C, p, 4 * p + 4)?;
    let y1: Vec<Vec<Rational>> = (0..k).map(|i| c[i][..l].to_vec()).collect();
    let y2: Vec<Vec<Rational>> = (0..k).map(|i| c[i][l..l + k].to_vec()).collect();
    let Some(y) = rational_solve(&y2, &y1) else {
        return Ok(indeterminate("corner block Y2 is singular".into()));
    };
    let yh: Vec<Vec<Hc>> = y.iter().map(|r| r.iter().map(|a| Hc::real(hp_rational(a, bits), bits)).collect()).collect();
    let x: Vec<Vec<Hc>> = (m..m + l)
        .map(|i| {
            (0..l)
                .map(|j| (0..k).fold(Hc::zero(bits), |acc, t| acc.add(&winv[i][t].mul(&yh[t][j]))))
                .collect()
        })
        .collect();
    let det = hp_det(&x, bits).abs_f64();
    let rows: f64 = x.iter().map(|r| r.iter().map(|e| e.abs_f64().powi(2)).sum::<f64>().sqrt()).product();
    let normalized_det_log2 = if det == 0.0 || rows == 0.0 { f64::NEG_INFINITY } else { (det / rows).log2() };
    let b = bits as f64;
    let outcome = if !(w_condition_log2 <= b / 2.0) {
        CasoratiOutcome::Indeterminate(format!("κ(W) ≈ 2^{w_condition_log2:.0} exceeds 2^{}", bits / 2))
    } else if normalized_det_log2 > -b / 4.0 {
        CasoratiOutcome::Invertible
    } else if normalized_det_log2 < -0.75 * b {
        CasoratiOutcome::Singular
    } else {
        CasoratiOutcome::Indeterminate(format!("normalized determinant ≈ 2^{normalized_det_log2:.0}"))
    };
    Ok(CasoratiReport { p, bits, outcome, w_condition_log2, normalized_det_log2 })
}

/// κ-based classification: algebraic growth between the two largest
/// sizes (slope ≤ `max_slope`), with singular members counting as blow-up.
pub fn algebraic_growth(fit: &GrowthFit, max_slope: f64) -> bool {
    let pts: Vec<&GrowthPoint> = fit.points.iter().collect();
    if pts.iter().any(|p| p.kappa.is_none()) {
        return false;
    }
    pts.windows(2).all(|w| {
        let s = (w[1].kappa.unwrap() / w[0].kappa.unwrap()).ln() / (w[1].n as f64 / w[0].n as f64).ln();
        s <= max_slope
    })
}

/// Convenience: does the stencil's rational value match a float family?
pub fn stencil_f64(p: usize, kind: MatrixKind) -> Result<Vec<f64>, ConditioningError> {
    Ok(AssociatedPolynomial::of_matrix(kind, p)?.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{cfl_constants, g_symbol, w_symbol, SymbolTable};

    #[test]
    fn census_of_basic_families() {
        for p in 1..=4 {
            let b = root_census(&AssociatedPolynomial::of_matrix(MatrixKind::B, p).unwrap(), 1e-8).unwrap();
            assert_eq!((b.inside, b.on, b.outside), (p - 1, 2, p - 1), "B p={p}");
            let at_one: Vec<_> = b.on_circle().collect();
            assert_eq!(at_one.len(), 1);
            assert_eq!((at_one[0].re, at_one[0].multiplicity), (1.0, 2));

            let c = root_census(&AssociatedPolynomial::of_matrix(MatrixKind::C, p).unwrap(), 1e-8).unwrap();
            assert_eq!((c.inside, c.on, c.outside), (p - 1, 2, p - 1), "C p={p}");
            let mut on: Vec<f64> = c.on_circle().map(|r| r.re).collect();
            on.sort_by(f64::total_cmp);
            assert_eq!(on, vec![-1.0, 1.0]);

            let m = root_census(&AssociatedPolynomial::of_matrix(MatrixKind::M, p).unwrap(), 1e-8).unwrap();
            assert_eq!(m.on, 0, "M p={p}");
            for cen in [&b, &c, &m] {
                assert!(cen.reciprocal_residual() < 1e-8);
            }
        }
    }

    #[test]
    fn product_polynomials_match_symbols() {
        for p in 1..=3 {
            let t = SymbolTable::new(p);
            for &rho in &[0.5, 2.0] {
                let g = AssociatedPolynomial::of_family(Family::G, p, rho).unwrap();
                let w = AssociatedPolynomial::of_family(Family::W, p, rho).unwrap();
                for &th in &[0.3, 1.1, 2.0, 3.0] {
                    assert!((g.centered(th) - g_symbol(&t, th, rho)).norm() < 1e-12);
                    assert!((w.centered(th) - w_symbol(&t, th, rho)).norm() < 1e-12);
                }
            }
        }
        let one = AssociatedPolynomial::from_f64_stencil(0, &[1.0]).unwrap();
        assert_eq!(one.product(&one), one);
    }

    #[test]
    fn g_and_w_censuses() {
        for p in 1..=3 {
            for &rho in &[0.1, 1.0, 10.0, 100.0] {
                let g = root_census(&AssociatedPolynomial::of_family(Family::G, p, rho).unwrap(), 1e-8).unwrap();
                assert_eq!(g.on, 4, "G p={p} rho={rho}: {:?}", g.roots);
            }
            let k = cfl_constants(p).unwrap();
            let below = root_census(&AssociatedPolynomial::of_family(Family::W, p, 0.5 * k.rho_p).unwrap(), 1e-8).unwrap();
            assert_eq!(below.on, 4, "W p={p}");
            let above = root_census(&AssociatedPolynomial::of_family(Family::W, p, 2.0 * k.rho_tilde).unwrap(), 1e-8).unwrap();
            assert_eq!(above.on, 0, "W p={p}");
        }
    }

    #[test]
    fn commutator_structure() {
        let a = commutator_census(2, 129).unwrap();
        let b = commutator_census(2, 257).unwrap();
        assert!(a.interior_max < 1e-13);
        assert!(a.flip_transpose_residual.min(a.transpose_residual) < 1e-13);
        assert!(commutator_blocks_difference(&a, &b) < 1e-13);
        let one = commutator_census(1, 33).unwrap();
        assert_eq!(one.top_left.ncols(), 0);
        assert!(one.interior_max < 1e-13);
    }

    #[test]
    fn commutator_fault_is_localized() {
        let b = family_matrix(Family::B, 2, 40, 1.0).unwrap();
        let mut c = family_matrix(Family::C, 2, 40, 1.0).unwrap();
        c[(20, 21)] += 1e-3;
        assert!(corner_report(&commutator(&b, &c), 2).interior_max > 1e-6);
    }

    #[test]
    fn casorati_small_degrees() {
        assert_eq!(casorati_invertibility(1, 256).unwrap().outcome, CasoratiOutcome::Invertible);
        let r = casorati_invertibility(2, 512).unwrap();
        assert_eq!(r.outcome, CasoratiOutcome::Invertible, "{r:?}");
    }

    #[test]
    fn schur_w_past_rho_p_is_numerically_singular() {
        // ρ = 5 > ρ_1 = 3: growth is exponential, so κ₁ is past 1/eps already
        // at n = 128 and a ratio between sizes carries no information.
        for n in [128, 256, 512] {
            let k = FamilyPencil::new(Family::Wschur, 1, n).unwrap().kappa(5.0).unwrap();
            assert!(k.map_or(true, |k| k >= 1e15), "n={n}: {k:?}");
        }
    }

    #[test]
    fn decay_of_b_inverse() {
        let r = inverse_decay_check(1, 64).unwrap();
        assert!(r.holds());
        let r = inverse_decay_check(2, 128).unwrap();
        assert!(r.holds(), "{r:?}");
        assert!(r.gamma < 1.0);
    }

    #[test]
    fn exact_deflation_helpers() {
        // (z-1)^2 (z+2) = z^3 - 3z + 2
        let q = AssociatedPolynomial::from_f64_stencil(1, &[2.0, -3.0, 0.0, 1.0]).unwrap();
        let c = root_census(&q, 1e-8).unwrap();
        assert_eq!((c.inside, c.on, c.outside), (0, 2, 1));
    }
}
