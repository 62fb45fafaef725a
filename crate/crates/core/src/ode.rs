//! The scalar model problem u' = v, v' + μu = f with zero initial data,
//! discretized with trial degree p and test degree p-1 in time, plus the
//! conditionally stable equal-degree variant.

use crate::linalg::{kappa1, LinalgError};
use crate::spline::{gauss_rule, SplineSpace};
use crate::temporal::{assemble_any, TemporalError, TemporalMatrixSet};
use nalgebra::{DMatrix, DVector};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum OdeError {
    #[error("singular system: {0}")]
    Singular(String),
    #[error("mu must be positive or zero, got {0}")]
    BadMu(f64),
    #[error("right-hand side has length {found}, expected {expected}")]
    RhsLength { expected: usize, found: usize },
    #[error(transparent)]
    Temporal(#[from] TemporalError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum OdeRoute {
    /// Eliminate u, solve (B + μ C B⁻¹ C) v = f.
    ViaB,
    /// Eliminate v, solve (μC + B C⁻¹ B) u = -f.
    ViaC,
    /// Dense solve of the full 2x2 block system.
    Monolithic,
}

impl std::str::FromStr for OdeRoute {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "b" | "via_b" | "viab" => Ok(OdeRoute::ViaB),
            "c" | "via_c" | "viac" => Ok(OdeRoute::ViaC),
            "mono" | "monolithic" => Ok(OdeRoute::Monolithic),
            _ => Err(format!("unknown route '{s}' (expected b, c or mono)")),
        }
    }
}

/// Load vector and parameters of one scalar ODE.
#[derive(Debug, Clone)]
pub struct OdeProblem {
    pub set: TemporalMatrixSet,
    pub mu: f64,
    /// f_j = (f, φ'_{j-1}), j = 1..n.
    pub f: Vec<f64>,
}

impl OdeProblem {
    pub fn new(p: usize, intervals: usize, horizon: f64, mu: f64, f: Vec<f64>) -> Result<Self, OdeError> {
        if !(mu >= 0.0) {
            return Err(OdeError::BadMu(mu));
        }
        let set = assemble_any(p, intervals, horizon)?;
        if f.len() != set.n() {
            return Err(OdeError::RhsLength { expected: set.n(), found: f.len() });
        }
        Ok(OdeProblem { set, mu, f })
    }

    pub fn with_source<F: Fn(f64) -> f64>(
        p: usize,
        intervals: usize,
        horizon: f64,
        mu: f64,
        source: F,
    ) -> Result<Self, OdeError> {
        let set = assemble_any(p, intervals, horizon)?;
        let f = load_vector(&set, &source, 1);
        Self::new(p, intervals, horizon, mu, f)
    }
}

/// (f, φ_r^{(r_der)}) for the test functions φ_0 .. φ_{n-1}.
pub fn load_vector<F: Fn(f64) -> f64>(set: &TemporalMatrixSet, source: &F, r_der: usize) -> Vec<f64> {
    let space = SplineSpace::new(set.p, set.intervals, 0.0, set.horizon).unwrap();
    let n = set.n();
    let rule = gauss_rule(set.p + 6);
    let mut out = vec![0.0; n];
    for &(span, a, b) in space.elements() {
        for (t, w) in rule.mapped(a, b) {
            let (first, d) = space.local_basis(span, t, r_der);
            let ft = source(t);
            for (i, val) in d[r_der].iter().enumerate() {
                if first + i < n {
                    out[first + i] += w * ft * val;
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeSolution {
    pub route: OdeRoute,
    /// Coefficients of φ_1 .. φ_n.
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl OdeSolution {
    /// Value (r = 0) or derivative at t of u and v.
    pub fn eval(&self, set: &TemporalMatrixSet, t: f64, r: usize) -> (f64, f64) {
        let space = set.trial_space();
        (
            space.eval_function(&self.u, t, r).unwrap_or(f64::NAN),
            space.eval_function(&self.v, t, r).unwrap_or(f64::NAN),
        )
    }
}

fn lu_solve(a: &DMatrix<f64>, b: &DVector<f64>, what: &str) -> Result<DVector<f64>, OdeError> {
    let lu = a.clone().lu();
    let diag = lu.u().diagonal();
    let max = diag.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let min = diag.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
    if !(min > a.nrows() as f64 * f64::EPSILON * max) {
        return Err(OdeError::Singular(format!("{what}: pivot ratio {:.3e}", min / max)));
    }
    lu.solve(b).ok_or_else(|| OdeError::Singular(what.to_string()))
}

fn solve_mat(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>, OdeError> {
    let lu = a.clone().lu();
    lu.solve(b).ok_or_else(|| OdeError::Singular(what.to_string()))
}

/// The Schur complement used by `route` (B + μCB⁻¹C or μC + BC⁻¹B); the
/// monolithic route returns the full block matrix.
pub fn schur_complement(set: &TemporalMatrixSet, mu: f64, route: OdeRoute) -> Result<DMatrix<f64>, OdeError> {
    let (b, c) = (&set.b_mat, &set.c_mat);
    match route {
        OdeRoute::ViaB => Ok(b + c * solve_mat(b, c, "B")? * mu),
        OdeRoute::ViaC => Ok(c * mu + b * solve_mat(c, b, "C")?),
        OdeRoute::Monolithic => {
            let n = set.n();
            let mut a = DMatrix::zeros(2 * n, 2 * n);
            a.view_mut((0, 0), (n, n)).copy_from(b);
            a.view_mut((0, n), (n, n)).copy_from(c);
            a.view_mut((n, 0), (n, n)).copy_from(&(c * -mu));
            a.view_mut((n, n), (n, n)).copy_from(b);
            Ok(a)
        }
    }
}

pub fn solve_ode(problem: &OdeProblem, route: OdeRoute) -> Result<OdeSolution, OdeError> {
    let set = &problem.set;
    let n = set.n();
    let mu = problem.mu;
    let f = DVector::from_column_slice(&problem.f);
    let (b, c) = (&set.b_mat, &set.c_mat);
    let (u, v) = match route {
        OdeRoute::ViaB => {
            let s = schur_complement(set, mu, route)?;
            let v = lu_solve(&s, &f, "B + mu C B^-1 C")?;
            let u = -lu_solve(b, &(c * &v), "B")?;
            (u, v)
        }
        OdeRoute::ViaC => {
            let s = schur_complement(set, mu, route)?;
            let u = lu_solve(&s, &(-&f), "mu C + B C^-1 B")?;
            let v = -lu_solve(c, &(b * &u), "C")?;
            (u, v)
        }
        OdeRoute::Monolithic => {
            let a = schur_complement(set, mu, route)?;
            let mut rhs = DVector::zeros(2 * n);
            rhs.rows_mut(n, n).copy_from(&f);
            let x = lu_solve(&a, &rhs, "block system")?;
            (x.rows(0, n).into_owned(), x.rows(n, n).into_owned())
        }
    };
    Ok(OdeSolution { route, u: u.as_slice().to_vec(), v: v.as_slice().to_vec() })
}

/// Diagnostics of the equal-degree scheme.
#[derive(Debug, Clone, serde::Serialize)]
pub struct UnstableReport {
    pub rho: f64,
    /// κ₁ of C + ρ (M/h) C⁻¹ (M/h).
    pub kappa1: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// h-free Schur complement C + ρ M̃ C⁻¹ M̃ (M̃ = M/h) of the equal-degree scheme.
pub fn unstable_schur(set: &TemporalMatrixSet, rho: f64) -> Result<DMatrix<f64>, OdeError> {
    let c = &set.c_mat;
    let m = &set.m_mat / set.h;
    Ok(c + &m * solve_mat(c, &m, "C")? * rho)
}

/// Solve [C -M; μM C][u; v] = [0; f] with f_j = (f, φ_{j-1}), through
/// (C + μ M C⁻¹ M) v = f and u = C⁻¹ M v.
pub fn unstable_variant_solve(set: &TemporalMatrixSet, mu: f64, f_l2: &[f64]) -> Result<UnstableReport, OdeError> {
    let (c, m) = (&set.c_mat, &set.m_mat);
    let rho = mu * set.h * set.h;
    let s = c + m * solve_mat(c, m, "C")? * mu;
    let v = lu_solve(&s, &DVector::from_column_slice(f_l2), "C + mu M C^-1 M")?;
    let u = lu_solve(c, &(m * &v), "C")?;
    let kappa = kappa1(&unstable_schur(set, rho)?)?;
    Ok(UnstableReport { rho, kappa1: kappa, u: u.as_slice().to_vec(), v: v.as_slice().to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Blossom of t and t^2/2 at knots t_{j+1}..t_{j+p}.
    fn blossom_coeffs(space: &SplineSpace) -> (Vec<f64>, Vec<f64>) {
        let k = space.knots();
        let p = space.degree();
        let mut lin = Vec::new();
        let mut quad = Vec::new();
        for dof in 0..space.dimension() {
            let j = space.full_of(dof);
            let ts = &k[j + 1..=j + p];
            lin.push(ts.iter().sum::<f64>() / p as f64);
            let mut s = 0.0;
            for a in 0..p {
                for b in a + 1..p {
                    s += ts[a] * ts[b];
                }
            }
            quad.push(s / (p * (p - 1)) as f64);
        }
        (lin, quad)
    }

    #[test]
    fn reproduces_quadratic() {
        let prob = OdeProblem::with_source(2, 9, 1.0, 0.0, |_| 1.0).unwrap();
        let (lin, quad) = blossom_coeffs(&prob.set.trial_space());
        for route in [OdeRoute::ViaB, OdeRoute::Monolithic] {
            let sol = solve_ode(&prob, route).unwrap();
            for i in 0..lin.len() {
                assert!((sol.v[i] - lin[i]).abs() < 1e-12, "{route:?} v[{i}]");
                assert!((sol.u[i] - quad[i]).abs() < 1e-12, "{route:?} u[{i}]");
            }
        }
    }

    #[test]
    fn p1_schur_diagonal() {
        for &(n, mu) in &[(8usize, 4.0), (12, 4.0), (10, 0.7), (16, 30.0)] {
            let set = assemble_any(1, n, 2.0).unwrap();
            let h = set.h;
            let s = schur_complement(&set, mu, OdeRoute::ViaB).unwrap();
            for i in 0..set.n() {
                assert_relative_eq!(s[(i, i)], -(1.0 / h + mu * h / 4.0), max_relative = 1e-12);
                for j in i + 1..set.n() {
                    assert!(s[(i, j)].abs() < 1e-12);
                }
            }
            if mu == 4.0 {
                assert_relative_eq!(s[(0, 0)], -(h + mu / (4.0 * h)), max_relative = 1e-12);
            }
            let su = c_schur_p1(&set, mu);
            for i in 0..set.n() {
                assert_relative_eq!(su[(i, i)], 0.5 + mu * h * h / 18.0, max_relative = 1e-12);
            }
        }
    }

    fn c_schur_p1(set: &TemporalMatrixSet, mu: f64) -> DMatrix<f64> {
        let (c, m) = (&set.c_mat, &set.m_mat);
        c + m * c.clone().lu().solve(m).unwrap() * mu
    }

    #[test]
    fn routes_agree() {
        for p in 1..=3 {
            for &mu in &[0.1, 1.0, 100.0] {
                let prob = OdeProblem::with_source(p, 20, 3.0, mu, |t| (2.0 * t).sin() + t * t).unwrap();
                let a = solve_ode(&prob, OdeRoute::ViaB).unwrap();
                let b = solve_ode(&prob, OdeRoute::ViaC).unwrap();
                let c = solve_ode(&prob, OdeRoute::Monolithic).unwrap();
                let scale = c.u.iter().chain(&c.v).fold(0.0_f64, |m, x| m.max(x.abs()));
                for (x, y) in a.u.iter().chain(&a.v).zip(c.u.iter().chain(&c.v)) {
                    assert!((x - y).abs() < 1e-9 * scale);
                }
                for (x, y) in b.u.iter().chain(&b.v).zip(c.u.iter().chain(&c.v)) {
                    assert!((x - y).abs() < 1e-9 * scale);
                }
            }
        }
    }

    #[test]
    fn zero_source_gives_zero() {
        let prob = OdeProblem::with_source(3, 15, 1.0, 5.0, |_| 0.0).unwrap();
        let s = solve_ode(&prob, OdeRoute::ViaC).unwrap();
        assert!(s.u.iter().chain(&s.v).all(|x| *x == 0.0));
    }

    #[test]
    fn converges_to_harmonic_oscillator() {
        // u'' + μu = 1, u(0)=u'(0)=0 -> u = (1 - cos(ωt))/μ
        let mu: f64 = 4.0;
        let w = mu.sqrt();
        let mut errs = Vec::new();
        for n in [20, 40] {
            let prob = OdeProblem::with_source(2, n, 2.0, mu, |_| 1.0).unwrap();
            let s = solve_ode(&prob, OdeRoute::ViaB).unwrap();
            let (u, _) = s.eval(&prob.set, 1.3, 0);
            errs.push((u - (1.0 - (w * 1.3).cos()) / mu).abs());
        }
        assert!(errs[1] < errs[0] / 4.0, "{errs:?}");
    }
}
