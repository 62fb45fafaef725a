//! Matrix symbols B_p, C_p, M_p and the CFL constants of the equal-space
//! variant.
//!
//! With w(θ) = (2 - 2cos θ)^{p+1} and S_k(θ) = Σ_j (θ + 2jπ)^{-k}:
//!
//! * `B_p = -w S_{2p}`, `C_p = -w S_{2p+1}`, `M_p = w S_{2p+2}`
//! * the hatted symbols drop the factor w.
//!
//! Two evaluation modes are provided. The closed form writes S_k through
//! the (k-1)-th derivative of cot(θ/2)/2, which is a polynomial in
//! cot(θ/2); multiplied by w = (2 sin(θ/2))^{2p+2} every term becomes a
//! monomial cos^i(θ/2) sin^j(θ/2) with j >= 0, so the removable limits at
//! θ = 0 come out without cancellation. The series mode sums |j| <= K
//! directly and is kept as an independent oracle.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::temporal::{stencil_from_cardinal, MatrixKind};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SymbolError {
    #[error("hatted symbol has a pole at theta = 0")]
    Pole,
    #[error("series mode only provides derivatives up to order 1")]
    SeriesDerivative,
    #[error("no sign change of {what} on ({lo}, {hi}): samples {samples:?}")]
    Bracket { what: &'static str, lo: f64, hi: f64, samples: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SymbolKind {
    B,
    C,
    M,
    BHat,
    CHat,
    MHat,
}

impl std::str::FromStr for SymbolKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "B" => SymbolKind::B,
            "C" => SymbolKind::C,
            "M" => SymbolKind::M,
            "Bhat" => SymbolKind::BHat,
            "Chat" => SymbolKind::CHat,
            "Mhat" => SymbolKind::MHat,
            _ => return Err(format!("unknown symbol '{s}'")),
        })
    }
}

impl From<MatrixKind> for SymbolKind {
    fn from(k: MatrixKind) -> Self {
        match k {
            MatrixKind::B => SymbolKind::B,
            MatrixKind::C => SymbolKind::C,
            MatrixKind::M => SymbolKind::M,
        }
    }
}

/// Polynomial in c = cos(θ/2), s = sin(θ/2): terms (coef, power of c, power of s).
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    pub terms: Vec<(f64, u32, u32)>,
}

impl TrigPoly {
    pub fn eval(&self, theta: f64) -> f64 {
        let (s, c) = (0.5 * theta).sin_cos();
        self.terms.iter().map(|&(a, i, j)| a * c.powi(i as i32) * s.powi(j as i32)).sum()
    }

    pub fn derivative(&self) -> TrigPoly {
        // dc/dθ = -s/2, ds/dθ = c/2
        let mut terms = Vec::new();
        for &(a, i, j) in &self.terms {
            if i > 0 {
                terms.push((-0.5 * a * i as f64, i - 1, j + 1));
            }
            if j > 0 {
                terms.push((0.5 * a * j as f64, i + 1, j - 1));
            }
        }
        let mut out = TrigPoly { terms };
        out.compact();
        out
    }

    fn scale(mut self, f: f64) -> TrigPoly {
        for t in &mut self.terms {
            t.0 *= f;
        }
        self
    }

    fn compact(&mut self) {
        self.terms.sort_by_key(|&(_, i, j)| (i, j));
        let mut merged: Vec<(f64, u32, u32)> = Vec::with_capacity(self.terms.len());
        for &(a, i, j) in &self.terms {
            match merged.last_mut() {
                Some(last) if last.1 == i && last.2 == j => last.0 += a,
                _ => merged.push((a, i, j)),
            }
        }
        merged.retain(|t| t.0 != 0.0);
        self.terms = merged;
    }
}

/// Coefficients (low to high) of P_n with d^n/dx^n cot x = P_n(cot x).
fn cot_derivative_poly(n: usize) -> Vec<i128> {
    let mut p: Vec<i128> = vec![0, 1];
    for _ in 0..n {
        // P' then multiply by -(1 + x^2)
        let dp: Vec<i128> = p.iter().enumerate().skip(1).map(|(i, &c)| c * i as i128).collect();
        let mut next = vec![0i128; dp.len() + 2];
        for (i, &c) in dp.iter().enumerate() {
            next[i] -= c;
            next[i + 2] -= c;
        }
        p = next;
    }
    p
}

/// (2 sin(θ/2))^a S_k(θ) as a trigonometric polynomial; needs a >= k.
pub fn weighted_series(a: u32, k: u32) -> TrigPoly {
    assert!(k >= 1 && a >= k);
    let pk = cot_derivative_poly(k as usize - 1);
    let mut fact = 1.0f64;
    for i in 1..k {
        fact *= i as f64;
    }
    let sign = if (k - 1) % 2 == 0 { 1.0 } else { -1.0 };
    let pre = sign / fact * 2f64.powi(a as i32 - k as i32);
    let mut tp = TrigPoly {
        terms: pk
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| (pre * c as f64, i as u32, a - i as u32))
            .collect(),
    };
    tp.compact();
    tp
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum SymbolMode {
    ClosedForm,
    Series { terms: usize },
}

/// Symbol evaluator for one degree.
#[derive(Debug, Clone)]
pub struct SymbolTable {
    pub p: usize,
    pub mode: SymbolMode,
    b: Vec<TrigPoly>,
    c: Vec<TrigPoly>,
    m: Vec<TrigPoly>,
}

const CLOSED_FORM_ORDERS: usize = 4;

impl SymbolTable {
    pub fn new(p: usize) -> Self {
        assert!(p >= 1);
        let a = 2 * p as u32 + 2;
        let chain = |base: TrigPoly| {
            let mut v = vec![base];
            for _ in 0..CLOSED_FORM_ORDERS {
                let d = v.last().unwrap().derivative();
                v.push(d);
            }
            v
        };
        SymbolTable {
            p,
            mode: SymbolMode::ClosedForm,
            b: chain(weighted_series(a, 2 * p as u32).scale(-1.0)),
            c: chain(weighted_series(a, 2 * p as u32 + 1).scale(-1.0)),
            m: chain(weighted_series(a, 2 * p as u32 + 2)),
        }
    }

    /// Series mode summing |j| <= terms.
    pub fn series(p: usize, terms: usize) -> Self {
        let mut t = Self::new(p);
        t.mode = SymbolMode::Series { terms };
        t
    }

    /// Series mode with the smallest K whose tail bound is below `tol`,
    /// capped at `max_terms`. Returns the table and the achieved bound.
    pub fn series_for_tolerance(p: usize, tol: f64, max_terms: usize) -> (Self, f64) {
        let k = 2 * p as u32;
        let mut terms = 16usize;
        while terms < max_terms && series_tail_bound(p, k, terms) > tol {
            terms *= 2;
        }
        let terms = terms.min(max_terms);
        (Self::series(p, terms), series_tail_bound(p, k, terms))
    }

    pub fn eval(&self, which: SymbolKind, theta: f64) -> Result<f64, SymbolError> {
        self.eval_derivative(which, theta, 0)
    }

    /// `order`-th derivative of a symbol (closed form: order <= 4).
    pub fn eval_derivative(&self, which: SymbolKind, theta: f64, order: usize) -> Result<f64, SymbolError> {
        let p = self.p as u32;
        let (k, sign) = match which {
            SymbolKind::B | SymbolKind::BHat => (2 * p, -1.0),
            SymbolKind::C | SymbolKind::CHat => (2 * p + 1, -1.0),
            SymbolKind::M | SymbolKind::MHat => (2 * p + 2, 1.0),
        };
        let hatted = matches!(which, SymbolKind::BHat | SymbolKind::CHat | SymbolKind::MHat);
        if hatted && theta == 0.0 {
            return Err(SymbolError::Pole);
        }
        match self.mode {
            SymbolMode::ClosedForm => {
                if hatted {
                    // S_k^{(r)} = (-1)^r k(k+1)..(k+r-1) S_{k+r}
                    let mut f = sign;
                    for i in 0..order {
                        f *= -((k + i as u32) as f64);
                    }
                    let kk = k + order as u32;
                    let w = (2.0 * (0.5 * theta).sin()).powi(kk as i32);
                    return Ok(f * weighted_series(kk, kk).eval(theta) / w);
                }
                let chain = match which {
                    SymbolKind::B => &self.b,
                    SymbolKind::C => &self.c,
                    _ => &self.m,
                };
                if order < chain.len() {
                    Ok(chain[order].eval(theta))
                } else {
                    let mut t = chain.last().unwrap().clone();
                    for _ in chain.len() - 1..order {
                        t = t.derivative();
                    }
                    Ok(t.eval(theta))
                }
            }
            SymbolMode::Series { terms } => {
                if order > 1 {
                    return Err(SymbolError::SeriesDerivative);
                }
                let s0 = series_sum(theta, k as i32, terms);
                if hatted {
                    return Ok(if order == 0 {
                        sign * s0
                    } else {
                        -sign * k as f64 * series_sum(theta, k as i32 + 1, terms)
                    });
                }
                let base = 2.0 - 2.0 * theta.cos();
                let w = base.powi(p as i32 + 1);
                if theta == 0.0 {
                    let lim = if which == SymbolKind::M { 1.0 } else { 0.0 };
                    return Ok(if order == 0 { lim } else if which == SymbolKind::C { -1.0 } else { 0.0 });
                }
                if order == 0 {
                    Ok(sign * w * s0)
                } else {
                    let dw = (p + 1) as f64 * base.powi(p as i32) * 2.0 * theta.sin();
                    let s1 = series_sum(theta, k as i32 + 1, terms);
                    Ok(sign * (dw * s0 - k as f64 * w * s1))
                }
            }
        }
    }

    pub fn b(&self, theta: f64) -> f64 {
        self.eval(SymbolKind::B, theta).unwrap()
    }

    pub fn c(&self, theta: f64) -> f64 {
        self.eval(SymbolKind::C, theta).unwrap()
    }

    pub fn m(&self, theta: f64) -> f64 {
        self.eval(SymbolKind::M, theta).unwrap()
    }

    fn d(&self, which: SymbolKind, theta: f64, order: usize) -> f64 {
        self.eval_derivative(which, theta, order).unwrap()
    }
}

/// Σ_{|j| <= terms} (θ + 2jπ)^{-k}, summed from the far tail inwards.
pub fn series_sum(theta: f64, k: i32, terms: usize) -> f64 {
    let mut acc = 0.0;
    for j in (1..=terms).rev() {
        let a = 2.0 * PI * j as f64;
        acc += (theta + a).powi(-k) + (theta - a).powi(-k);
    }
    acc + theta.powi(-k)
}

/// Bound on (2-2cosθ)^{p+1} Σ_{|j|>K} |θ+2jπ|^{-k} for |θ| <= π.
pub fn series_tail_bound(p: usize, k: u32, terms: usize) -> f64 {
    let k = k as f64;
    let x = 2.0 * PI * terms as f64 - PI;
    4f64.powi(p as i32 + 1) * 2.0 / (2.0 * PI * (k - 1.0) * x.powf(k - 1.0))
}

/// e^{-ipθ} q(e^{iθ}) for the cardinal stencil of `which`.
pub fn stencil_symbol(p: usize, which: MatrixKind, theta: f64) -> Complex64 {
    // q(z) = Σ_{i=-m}^{l} a_i z^{m+i}
    let q: Complex64 = stencil_from_cardinal(p, which)
        .iter()
        .enumerate()
        .map(|(k, &a)| a * Complex64::from_polar(1.0, k as f64 * theta))
        .sum();
    q * Complex64::from_polar(1.0, -(p as f64) * theta)
}

/// max over the grid of |e^{-ipθ} q(e^{iθ}) - target(θ)|.
pub fn symbol_residual<F: Fn(&SymbolTable, f64) -> Complex64>(p: usize, which: MatrixKind, grid: &[f64], target: F) -> f64 {
    let table = SymbolTable::new(p);
    grid.iter().map(|&th| (stencil_symbol(p, which, th) - target(&table, th)).norm()).fold(0.0, f64::max)
}

/// Residual against the stated targets -B_p, i C_p and M_p.
///
/// With C_p defined by its series (C_p ≈ -θ near 0) the C stencil actually
/// reproduces -i C_p, so the C residual here equals 2 max|C_p|; see
/// [`symbol_vs_stencil_conjugate_c`].
pub fn symbol_vs_stencil(p: usize, which: MatrixKind, grid: &[f64]) -> f64 {
    symbol_residual(p, which, grid, |t, th| match which {
        MatrixKind::B => Complex64::new(-t.b(th), 0.0),
        MatrixKind::C => Complex64::new(0.0, t.c(th)),
        MatrixKind::M => Complex64::new(t.m(th), 0.0),
    })
}

/// Same as [`symbol_vs_stencil`] with the C target taken as -i C_p.
pub fn symbol_vs_stencil_conjugate_c(p: usize, which: MatrixKind, grid: &[f64]) -> f64 {
    symbol_residual(p, which, grid, |t, th| match which {
        MatrixKind::B => Complex64::new(-t.b(th), 0.0),
        MatrixKind::C => Complex64::new(0.0, -t.c(th)),
        MatrixKind::M => Complex64::new(t.m(th), 0.0),
    })
}

/// Uniform grid of `n` points on [-π, π].
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| -PI + 2.0 * PI * i as f64 / (n - 1) as f64).collect()
}

/// Outcome of a safeguarded Newton solve.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RootInfo {
    pub root: f64,
    pub iterations: usize,
    pub residual: f64,
    pub bisections: usize,
}

/// Newton with bisection fallback on a bracket where f changes sign.
pub fn safeguarded_newton<F, D>(f: F, df: D, mut lo: f64, mut hi: f64, x0: f64, tol: f64) -> Option<RootInfo>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Some(RootInfo { root: lo, iterations: 0, residual: 0.0, bisections: 0 });
    }
    if fhi == 0.0 {
        return Some(RootInfo { root: hi, iterations: 0, residual: 0.0, bisections: 0 });
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    let neg_at_lo = flo < 0.0;
    let mut x = x0.clamp(lo, hi);
    let mut bisections = 0;
    for it in 1..=200 {
        let fx = f(x);
        if fx.abs() <= tol {
            return Some(RootInfo { root: x, iterations: it, residual: fx.abs(), bisections });
        }
        if (fx < 0.0) == neg_at_lo {
            lo = x;
        } else {
            hi = x;
        }
        let step = fx / df(x);
        let mut next = x - step;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
            bisections += 1;
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) || hi - lo <= 4.0 * f64::EPSILON {
            let fx = f(next);
            return Some(RootInfo { root: next, iterations: it, residual: fx.abs(), bisections });
        }
        x = next;
    }
    let fx = f(x);
    Some(RootInfo { root: x, iterations: 200, residual: fx.abs(), bisections })
}

fn sample_signs<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    (0..=8).map(|i| lo + (hi - lo) * i as f64 / 8.0).map(|x| (x, f(x))).collect()
}

const NEWTON_TOL: f64 = 1e-13;

/// Zero of C_p' in (0, π).
pub fn theta_max(p: usize) -> Result<RootInfo, SymbolError> {
    let t = SymbolTable::new(p);
    let f = |x: f64| t.d(SymbolKind::C, x, 1);
    let df = |x: f64| t.d(SymbolKind::C, x, 2);
    let (lo, hi) = (1e-3, PI);
    safeguarded_newton(f, df, lo, hi, PI / 2.0, NEWTON_TOL).ok_or_else(|| SymbolError::Bracket {
        what: "C_p'",
        lo,
        hi,
        samples: sample_signs(f, lo, hi),
    })
}

/// C_p(θ_max)^2 / M_p(π)^2.
pub fn rho_tilde(p: usize) -> Result<f64, SymbolError> {
    let t = SymbolTable::new(p);
    let th = theta_max(p)?.root;
    Ok((t.c(th) / t.m(PI)).powi(2))
}

/// F_p = C_p M_p' - C_p' M_p.
pub fn f_p(t: &SymbolTable, x: f64) -> f64 {
    t.c(x) * t.d(SymbolKind::M, x, 1) - t.d(SymbolKind::C, x, 1) * t.m(x)
}

fn f_p_prime(t: &SymbolTable, x: f64) -> f64 {
    t.c(x) * t.d(SymbolKind::M, x, 2) - t.d(SymbolKind::C, x, 2) * t.m(x)
}

/// W_p(θ, ρ) = ρ M_p^2 - C_p^2 (symbol of ρM^2 + C^2 up to e^{2ipθ}).
pub fn w_symbol(t: &SymbolTable, theta: f64, rho: f64) -> f64 {
    rho * t.m(theta).powi(2) - t.c(theta).powi(2)
}

/// G_p(θ, ρ) = B_p^2 - ρ C_p^2 (symbol of ρC^2 + B^2 up to e^{2ipθ}).
pub fn g_symbol(t: &SymbolTable, theta: f64, rho: f64) -> f64 {
    t.b(theta).powi(2) - rho * t.c(theta).powi(2)
}

/// L_p(θ, ρ) = G_p / (M_p B_p) as a function of θ in (0, π].
pub fn l_symbol(t: &SymbolTable, theta: f64, rho: f64) -> f64 {
    g_symbol(t, theta, rho) / (t.m(theta) * t.b(theta))
}

/// Per-degree CFL record.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct CflConstants {
    pub p: usize,
    pub theta_max: f64,
    pub rho_tilde: f64,
    pub theta_p: f64,
    pub rho_p: f64,
    pub e_p: f64,
    pub theta_max_newton: RootInfo,
    pub theta_p_newton: RootInfo,
}

/// The constant E_p built from M_p(π) and M_{p+1}(π).
pub fn e_p(p: usize) -> f64 {
    let mp = SymbolTable::new(p).m(PI);
    let mq = SymbolTable::new(p + 1).m(PI);
    let k = (2 * p + 1) as f64;
    2.0 * k * k / (p + 1) as f64 * mp / ((2 * p + 3) as f64 * mq - mp)
}

pub fn cfl_constants(p: usize) -> Result<CflConstants, SymbolError> {
    let t = SymbolTable::new(p);
    let tm = theta_max(p)?;
    let rho_tilde = (t.c(tm.root) / t.m(PI)).powi(2);
    let (lo, hi) = (1e-3, PI);
    let f = |x: f64| f_p(&t, x);
    let df = |x: f64| f_p_prime(&t, x);
    let tp = safeguarded_newton(f, df, lo, hi, 2.0, NEWTON_TOL).ok_or_else(|| SymbolError::Bracket {
        what: "F_p",
        lo,
        hi,
        samples: sample_signs(f, lo, hi),
    })?;
    let rho_p = (t.c(tp.root) / t.m(tp.root)).powi(2);
    Ok(CflConstants {
        p,
        theta_max: tm.root,
        rho_tilde,
        theta_p: tp.root,
        rho_p,
        e_p: e_p(p),
        theta_max_newton: tm,
        theta_p_newton: tp,
    })
}

/// Riemann zeta at s >= 2 by Euler-Maclaurin.
pub fn zeta(s: f64) -> f64 {
    let n = 64usize;
    let mut acc: f64 = (1..n).rev().map(|k| (k as f64).powf(-s)).sum();
    let nf = n as f64;
    acc += nf.powf(1.0 - s) / (s - 1.0) + 0.5 * nf.powf(-s);
    // Bernoulli corrections B2, B4, B6, B8
    let b = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0];
    let mut rising = s;
    let mut fact = 2.0;
    let mut pw = nf.powf(-s - 1.0);
    for (i, bk) in b.iter().enumerate() {
        acc += bk / fact * rising * pw;
        let k = 2 * i as i32 + 2;
        rising *= (s + k as f64 - 1.0) * (s + k as f64);
        fact *= ((k + 1) * (k + 2)) as f64;
        pw /= nf * nf;
    }
    acc
}

/// B_p(π)/M_p(π) together with the zeta-function expression for it.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ZetaRatio {
    pub ratio: f64,
    pub zeta_form: f64,
}

impl ZetaRatio {
    pub fn agrees(&self, tol: f64) -> bool {
        (self.ratio - self.zeta_form).abs() <= tol * self.ratio.abs()
    }
}

pub fn zeta_ratio_check(p: usize) -> ZetaRatio {
    let t = SymbolTable::new(p);
    let ratio = t.b(PI) / t.m(PI);
    let a = 4f64.powi(p as i32) - 1.0;
    let b = 4f64.powi(p as i32 + 1) - 1.0;
    let zeta_form = -4.0 * PI * PI * a / b * zeta(2.0 * p as f64) / zeta(2.0 * p as f64 + 2.0);
    ZetaRatio { ratio, zeta_form }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cot_polynomials() {
        assert_eq!(cot_derivative_poly(0), vec![0, 1]);
        assert_eq!(cot_derivative_poly(1), vec![-1, 0, -1]);
        assert_eq!(cot_derivative_poly(2), vec![0, 2, 0, 2]);
    }

    #[test]
    fn s2_closed_form() {
        // S_2 = 1/(4 sin^2(θ/2))
        let tp = weighted_series(2, 2);
        for &th in &[0.3, 1.0, 2.5, -1.7] {
            let direct = series_sum(th, 2, 200_000);
            let closed = tp.eval(th) / (2.0 * (0.5f64 * th).sin()).powi(2);
            assert_abs_diff_eq!(closed, 1.0 / (4.0 * (0.5f64 * th).sin().powi(2)), epsilon = 1e-13);
            assert_abs_diff_eq!(closed, direct, epsilon = 1e-5);
        }
    }

    #[test]
    fn examples() {
        for p in 1..7 {
            assert_abs_diff_eq!(SymbolTable::new(p).c(PI), 0.0, epsilon = 1e-15);
        }
        let t = SymbolTable::new(1);
        assert_abs_diff_eq!(t.c(PI / 2.0), -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(t.b(PI), -4.0, epsilon = 1e-14);
        assert_abs_diff_eq!(t.m(PI), 1.0 / 3.0, epsilon = 1e-15);
        let s = SymbolTable::series(1, 1_000_000);
        assert_abs_diff_eq!(s.c(PI / 2.0), -1.0, epsilon = 1e-6);
    }

    #[test]
    fn limits_at_zero() {
        for p in 1..6 {
            let t = SymbolTable::new(p);
            assert_eq!(t.b(0.0), 0.0);
            assert_eq!(t.c(0.0), 0.0);
            assert_abs_diff_eq!(t.m(0.0), 1.0, epsilon = 1e-14);
            assert!(matches!(t.eval(SymbolKind::CHat, 0.0), Err(SymbolError::Pole)));
        }
    }

    #[test]
    fn p1_closed_forms() {
        let t = SymbolTable::new(1);
        for k in 0..50 {
            let th = -PI + k as f64 * 0.127;
            assert_abs_diff_eq!(t.c(th), -th.sin(), epsilon = 1e-14);
            assert_abs_diff_eq!(t.m(th), (2.0 + th.cos()) / 3.0, epsilon = 1e-14);
            assert_abs_diff_eq!(t.d(SymbolKind::C, th, 1), -th.cos(), epsilon = 1e-14);
        }
    }

    #[test]
    fn closed_form_vs_series() {
        for p in 2..5 {
            let t = SymbolTable::new(p);
            let s = SymbolTable::series(p, 100_000);
            for k in 1..20 {
                let th = k as f64 * PI / 20.0;
                for w in [SymbolKind::B, SymbolKind::C, SymbolKind::M, SymbolKind::CHat] {
                    let a = t.eval(w, th).unwrap();
                    let b = s.eval(w, th).unwrap();
                    assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()), "{p} {w:?} {th}: {a} {b}");
                    let da = t.eval_derivative(w, th, 1).unwrap();
                    let db = s.eval_derivative(w, th, 1).unwrap();
                    assert!((da - db).abs() < 1e-11 * (1.0 + da.abs()), "{p} {w:?}' {th}: {da} {db}");
                }
            }
        }
    }

    #[test]
    fn table_values_p1() {
        let c = cfl_constants(1).unwrap();
        assert_abs_diff_eq!(c.theta_max, PI / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.rho_tilde, 9.0, epsilon = 1e-11);
        assert_abs_diff_eq!(c.theta_p, 2.0 * PI / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.rho_p, 3.0, epsilon = 1e-11);
        assert_abs_diff_eq!(c.e_p, 9.0, epsilon = 1e-11);
    }

    #[test]
    fn zeta_values() {
        assert_abs_diff_eq!(zeta(2.0), PI * PI / 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(zeta(4.0), PI.powi(4) / 90.0, epsilon = 1e-14);
        let z = zeta_ratio_check(1);
        assert_abs_diff_eq!(z.ratio, -12.0, epsilon = 1e-12);
        assert!(z.agrees(1e-10));
    }

    #[test]
    fn newton_fallback() {
        let r = safeguarded_newton(|x| x.powi(3) - 2.0, |x| 3.0 * x * x, 0.0, 3.0, 0.0, 1e-14).unwrap();
        assert_abs_diff_eq!(r.root, 2f64.cbrt(), epsilon = 1e-14);
        assert!(safeguarded_newton(|x| x * x + 1.0, |x| 2.0 * x, -1.0, 1.0, 0.0, 1e-14).is_none());
    }
}
