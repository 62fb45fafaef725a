//! Space–time wave solver: load assembly, the Kronecker/Schur direct
//! solver, a dense monolithic oracle, and post-processing (error norms,
//! energy, Fourier phase).

use crate::linalg::{complex_schur, upper_triangular_inverse, LinalgError, SparseLu};
use crate::spatial::{Axis, SpatialDiscretization, SpatialError, WaveSpeed};
use crate::spline::{gauss_rule, SplineSpace};
use crate::temporal::{assemble_any, TemporalError, TemporalMatrixSet};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

pub type SpaceFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type SpaceTimeFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
/// Boundary datum g(x, t, (axis, upper face)) for Neumann and Robin faces.
pub type BoundaryFn = Arc<dyn Fn(&[f64], f64, (usize, bool)) -> f64 + Send + Sync>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum WaveError {
    #[error("singular diagonal block {block} in the block back-substitution (rho_effective = {rho_effective:.3e})")]
    SingularBlock { block: usize, rho_effective: f64 },
    #[error("singular temporal matrix {0}")]
    SingularTemporal(&'static str),
    #[error("monolithic system is singular")]
    SingularMonolithic,
    #[error("invalid problem: {0}")]
    Config(String),
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Temporal(#[from] TemporalError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone)]
pub struct SpaceTimeProblem {
    pub axes: Vec<Axis>,
    pub speed: WaveSpeed,
    pub time_degree: usize,
    pub time_intervals: usize,
    pub horizon: f64,
    pub source: Option<SpaceTimeFn>,
    pub boundary_data: Option<BoundaryFn>,
    pub u0: Option<SpaceFn>,
    pub v0: Option<SpaceFn>,
}

impl SpaceTimeProblem {
    /// Zero data on the given box; fill in the optional fields afterwards.
    pub fn new(axes: Vec<Axis>, speed: WaveSpeed, time_degree: usize, time_intervals: usize, horizon: f64) -> Self {
        SpaceTimeProblem {
            axes,
            speed,
            time_degree,
            time_intervals,
            horizon,
            source: None,
            boundary_data: None,
            u0: None,
            v0: None,
        }
    }
}

/// Assembled matrices and right-hand sides. Space–time arrays are stored
/// time-major: entry (r, m) at r * N_x + m.
pub struct SpaceTimeSystem {
    pub spatial: SpatialDiscretization,
    pub temporal: TemporalMatrixSet,
    /// Second-equation load after moving the initial-data terms to the right.
    pub f: Vec<f64>,
    /// First-equation load divided by the spatial mass (zero without initial data).
    pub g: Vec<f64>,
    pub u0: Vec<f64>,
    pub v0: Vec<f64>,
}

impl SpaceTimeSystem {
    pub fn assemble(problem: &SpaceTimeProblem) -> Result<Self, WaveError> {
        if !(problem.horizon > 0.0) {
            return Err(WaveError::Config(format!("horizon must be positive, got {}", problem.horizon)));
        }
        let spatial = SpatialDiscretization::new(problem.axes.clone(), problem.speed.clone())?;
        let temporal = assemble_any(problem.time_degree, problem.time_intervals, problem.horizon)?;
        let nx = spatial.ndofs();
        let nt = temporal.n();
        let tspace = SplineSpace::new(temporal.p, temporal.intervals, 0.0, temporal.horizon).unwrap();
        let trule = gauss_rule(temporal.p + 3);
        let mut f = vec![0.0; nt * nx];

        if let Some(src) = &problem.source {
            for &(span, a, b) in tspace.elements() {
                for (t, wt) in trule.mapped(a, b) {
                    let (first, d) = tspace.local_basis(span, t, 1);
                    let mut slice = vec![0.0; nx];
                    for qp in &spatial.points {
                        let val = qp.w * src(&qp.x[..spatial.dim()], t);
                        if val == 0.0 {
                            continue;
                        }
                        for &(m, psi, _) in &qp.basis {
                            slice[m] += val * psi;
                        }
                    }
                    for (i, dphi) in d[1].iter().enumerate() {
                        let r = first + i;
                        if r < nt {
                            for m in 0..nx {
                                f[r * nx + m] += wt * dphi * slice[m];
                            }
                        }
                    }
                }
            }
        }

        if let Some(g) = &problem.boundary_data {
            let q = spatial.axes.iter().map(|a| a.degree).max().unwrap() + 3;
            for face in spatial.natural_faces() {
                let pts = spatial.face_points(face, q);
                for &(span, a, b) in tspace.elements() {
                    for (t, wt) in trule.mapped(a, b) {
                        let (first, d) = tspace.local_basis(span, t, 1);
                        for (x, wx, basis) in &pts {
                            let val = wx * g(x, t, face);
                            for (i, dphi) in d[1].iter().enumerate() {
                                let r = first + i;
                                if r < nt {
                                    for &(m, psi) in basis {
                                        f[r * nx + m] += wt * dphi * val * psi;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }

        let u0 = match &problem.u0 {
            Some(u) => spatial.project(|x| u(x))?,
            None => vec![0.0; nx],
        };
        let v0 = match &problem.v0 {
            Some(v) => spatial.project(|x| v(x))?,
            None => vec![0.0; nx],
        };
        let mut g = vec![0.0; nt * nx];
        if u0.iter().chain(&v0).any(|&x| x != 0.0) {
            let mut ku0 = vec![0.0; nx];
            let mut mv0 = vec![0.0; nx];
            let mut ru0 = vec![0.0; nx];
            spatial.stiffness.mul_vec(&u0, &mut ku0);
            spatial.mass.mul_vec(&v0, &mut mv0);
            spatial.robin.mul_vec(&u0, &mut ru0);
            let (bl, cl) = (&temporal.b_lift, &temporal.c_lift);
            for r in 0..nt {
                for m in 0..nx {
                    g[r * nx + m] = -(bl[r] * u0[m] + cl[r] * v0[m]);
                    f[r * nx + m] -= -cl[r] * ku0[m] + bl[r] * mv0[m] + bl[r] * ru0[m];
                }
            }
        }
        Ok(SpaceTimeSystem { spatial, temporal, f, g, u0, v0 })
    }

    pub fn nx(&self) -> usize {
        self.spatial.ndofs()
    }

    pub fn nt(&self) -> usize {
        self.temporal.n()
    }

    fn has_lifting(&self) -> bool {
        self.g.iter().any(|&x| x != 0.0)
    }

    fn time_major(&self, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.nt(), self.nx(), v)
    }

    /// Right-hand side of the reduced equation -A U = F'.
    fn reduced_rhs(&self) -> Result<DMatrix<f64>, WaveError> {
        let mut fm = self.time_major(&self.f);
        if self.has_lifting() {
            // F' = F - (B C⁻¹ ⊗ M) G
            let gm = self.time_major(&self.g);
            let mut mg = DMatrix::zeros(self.nt(), self.nx());
            let mut row = vec![0.0; self.nx()];
            for r in 0..self.nt() {
                let src: Vec<f64> = gm.row(r).iter().copied().collect();
                self.spatial.mass.mul_vec(&src, &mut row);
                for m in 0..self.nx() {
                    mg[(r, m)] = row[m];
                }
            }
            let cinv = self.temporal.c_mat.clone().lu().solve(&mg).ok_or(WaveError::SingularTemporal("C"))?;
            fm -= &self.temporal.b_mat * cinv;
        }
        Ok(fm)
    }

    fn finish(&self, u: DMatrix<f64>, max_imag: f64) -> Result<SpaceTimeSolution, WaveError> {
        // C V = -B U + G
        let rhs = -(&self.temporal.b_mat * &u) + self.time_major(&self.g);
        let v = self.temporal.c_mat.clone().lu().solve(&rhs).ok_or(WaveError::SingularTemporal("C"))?;
        Ok(SpaceTimeSolution::from_parts(self, &u, &v, max_imag))
    }

    /// The Kronecker/Schur direct solver.
    pub fn solve(&self) -> Result<SpaceTimeSolution, WaveError> {
        let (nt, nx) = (self.nt(), self.nx());
        let b = &self.temporal.b_mat;
        let b_lu = b.clone().lu();
        let binv_c = b_lu.solve(&self.temporal.c_mat).ok_or(WaveError::SingularTemporal("B"))?;
        let schur = complex_schur(&binv_c.map(|x| Complex64::new(x, 0.0)))?;
        let (q, r) = (&schur.q, &schur.r);
        let rinv = upper_triangular_inverse(r)?;

        let y = b_lu.solve(&self.reduced_rhs()?).ok_or(WaveError::SingularTemporal("B"))?;
        let y = q.adjoint() * y.map(|x| Complex64::new(x, 0.0));

        let (k, m, mr) = (&self.spatial.stiffness, &self.spatial.mass, &self.spatial.robin);
        let rho_effective = || {
            let mu = self.spatial.mu_max_estimate().unwrap_or(f64::NAN);
            mu * self.temporal.h * self.temporal.h
        };
        let mut z = DMatrix::<Complex64>::zeros(nt, nx);
        let mut wk = vec![Complex64::new(0.0, 0.0); nx];
        let mut wm = wk.clone();
        let mut tmp = wk.clone();
        let one = Complex64::new(1.0, 0.0);
        for blk in (0..nt).rev() {
            wk.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
            wm.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
            for j in blk + 1..nt {
                let (rk, ri) = (r[(blk, j)], rinv[(blk, j)]);
                for i in 0..nx {
                    let zj = z[(j, i)];
                    wk[i] += rk * zj;
                    wm[i] += ri * zj;
                }
            }
            let mut rhs: Vec<Complex64> = (0..nx).map(|i| y[(blk, i)]).collect();
            k.mul_vec(&wk, &mut tmp);
            for i in 0..nx {
                rhs[i] -= tmp[i];
            }
            m.mul_vec(&wm, &mut tmp);
            for i in 0..nx {
                rhs[i] -= tmp[i];
            }
            let lu = SparseLu::<Complex64>::factor(&[(r[(blk, blk)], k), (rinv[(blk, blk)], m), (-one, mr)])
                .map_err(|_| WaveError::SingularBlock { block: blk, rho_effective: rho_effective() })?;
            lu.solve_in_place(&mut rhs);
            if rhs.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
                return Err(WaveError::SingularBlock { block: blk, rho_effective: rho_effective() });
            }
            for i in 0..nx {
                z[(blk, i)] = rhs[i];
            }
        }
        let uc = -(q * z);
        let max_imag = uc.iter().fold(0.0_f64, |a, x| a.max(x.im.abs()));
        self.finish(uc.map(|x| x.re), max_imag)
    }

    /// Dense solve of the full coupled system, for small sizes.
    pub fn solve_monolithic(&self) -> Result<SpaceTimeSolution, WaveError> {
        let (nt, nx) = (self.nt(), self.nx());
        let n = nt * nx;
        let (b, c) = (&self.temporal.b_mat, &self.temporal.c_mat);
        let (m, k, mr) = (self.spatial.mass.to_dense(), self.spatial.stiffness.to_dense(), self.spatial.robin.to_dense());
        let mut a = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for r in 0..nt {
            for s in 0..nt {
                let (brs, crs) = (b[(r, s)], c[(r, s)]);
                if brs == 0.0 && crs == 0.0 {
                    continue;
                }
                for i in 0..nx {
                    for j in 0..nx {
                        let (row, col) = (r * nx + i, s * nx + j);
                        a[(row, col)] = brs * m[(i, j)];
                        a[(row, n + col)] = crs * m[(i, j)];
                        a[(n + row, col)] = -crs * k[(i, j)] + brs * mr[(i, j)];
                        a[(n + row, n + col)] = brs * m[(i, j)];
                    }
                }
            }
        }
        let mut rhs = DVector::zeros(2 * n);
        let mut row = vec![0.0; nx];
        for r in 0..nt {
            self.spatial.mass.mul_vec(&self.g[r * nx..(r + 1) * nx], &mut row);
            for i in 0..nx {
                rhs[r * nx + i] = row[i];
                rhs[n + r * nx + i] = self.f[r * nx + i];
            }
        }
        let x = a.lu().solve(&rhs).ok_or(WaveError::SingularMonolithic)?;
        let u = DMatrix::from_row_slice(nt, nx, &x.as_slice()[..n]);
        let v = DMatrix::from_row_slice(nt, nx, &x.as_slice()[n..]);
        Ok(SpaceTimeSolution::from_parts(self, &u, &v, 0.0))
    }
}

/// Convenience wrapper: assemble and run the direct solver.
pub fn solve_space_time(problem: &SpaceTimeProblem) -> Result<(SpaceTimeSystem, SpaceTimeSolution), WaveError> {
    let sys = SpaceTimeSystem::assemble(problem)?;
    let sol = sys.solve()?;
    Ok((sys, sol))
}

/// Discrete solution in the full temporal basis: row 0 carries the
/// initial data, rows 1..=n the computed coefficients.
#[derive(Debug, Clone)]
pub struct SpaceTimeSolution {
    pub nx: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub time_space: SplineSpace,
    /// Largest imaginary part discarded after the complex back-transformation.
    pub max_imag: f64,
}

/// U, V and their derivatives at one space–time point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointValue {
    pub u: f64,
    pub u_t: f64,
    pub u_grad: [f64; 2],
    pub v: f64,
    pub v_t: f64,
    pub v_grad: [f64; 2],
}

impl SpaceTimeSolution {
    fn from_parts(sys: &SpaceTimeSystem, u: &DMatrix<f64>, v: &DMatrix<f64>, max_imag: f64) -> Self {
        let (nt, nx) = (sys.nt(), sys.nx());
        let mut uf = Vec::with_capacity((nt + 1) * nx);
        let mut vf = Vec::with_capacity((nt + 1) * nx);
        uf.extend_from_slice(&sys.u0);
        vf.extend_from_slice(&sys.v0);
        for r in 0..nt {
            uf.extend(u.row(r).iter());
            vf.extend(v.row(r).iter());
        }
        let ts = SplineSpace::new(sys.temporal.p, sys.temporal.intervals, 0.0, sys.temporal.horizon).unwrap();
        SpaceTimeSolution { nx, u: uf, v: vf, time_space: ts, max_imag }
    }

    /// Coefficients (trimmed order, without the initial layer).
    pub fn unknowns(&self) -> (&[f64], &[f64]) {
        (&self.u[self.nx..], &self.v[self.nx..])
    }

    /// Spatial coefficient vectors of U, ∂_tU, V, ∂_tV at time t.
    pub fn slice(&self, t: f64) -> [Vec<f64>; 4] {
        let nx = self.nx;
        let mut out = [vec![0.0; nx], vec![0.0; nx], vec![0.0; nx], vec![0.0; nx]];
        let p = self.time_space.degree();
        let (i0, i1) = (self.time_space.interval().0, self.time_space.interval().1);
        let t = t.clamp(i0, i1);
        let span = self.time_space.span(t, false);
        let (first, d) = self.time_space.local_basis(span, t, 1.min(p));
        for (a, (&phi, &dphi)) in d[0].iter().zip(&d[1]).enumerate() {
            let row = first + a;
            for m in 0..nx {
                let (uu, vv) = (self.u[row * nx + m], self.v[row * nx + m]);
                out[0][m] += phi * uu;
                out[1][m] += dphi * uu;
                out[2][m] += phi * vv;
                out[3][m] += dphi * vv;
            }
        }
        out
    }

    pub fn eval(&self, spatial: &SpatialDiscretization, x: &[f64], t: f64) -> PointValue {
        let [u, ut, v, vt] = self.slice(t);
        slice_value(spatial.basis_at(x).as_slice(), &u, &ut, &v, &vt)
    }
}

fn slice_value(basis: &[(usize, f64, [f64; 2])], u: &[f64], ut: &[f64], v: &[f64], vt: &[f64]) -> PointValue {
    let mut pv = PointValue::default();
    for &(m, psi, g) in basis {
        pv.u += u[m] * psi;
        pv.u_t += ut[m] * psi;
        pv.v += v[m] * psi;
        pv.v_t += vt[m] * psi;
        for k in 0..2 {
            pv.u_grad[k] += u[m] * g[k];
            pv.v_grad[k] += v[m] * g[k];
        }
    }
    pv
}

/// Closed-form reference solution.
pub trait ExactSolution: Sync {
    fn eval(&self, x: &[f64], t: f64) -> PointValue;
}

/// Relative errors over the space–time cylinder.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ErrorNorms {
    pub u_l2: f64,
    pub u_h1: f64,
    /// Weighted seminorm (|∂_t|² + c²|∇|²).
    pub u_ch1: f64,
    pub v_l2: f64,
    pub v_h1: f64,
}

pub fn error_norms(
    sys: &SpaceTimeSystem,
    sol: &SpaceTimeSolution,
    exact: &dyn ExactSolution,
) -> ErrorNorms {
    let spatial = &sys.spatial;
    let p = sys.temporal.p.max(spatial.axes.iter().map(|a| a.degree).max().unwrap());
    let pts = spatial.volume_points(p + 2);
    let rule = gauss_rule(p + 2);
    let dim = spatial.dim();
    // [err, ref] accumulators
    let mut acc = [[0.0_f64; 2]; 5];
    for &(_, a, b) in sol.time_space.elements() {
        for (t, wt) in rule.mapped(a, b) {
            let [u, ut, v, vt] = sol.slice(t);
            for qp in &pts {
                let h = slice_value(&qp.basis, &u, &ut, &v, &vt);
                let e = exact.eval(&qp.x[..dim], t);
                let w = wt * qp.w;
                let c2 = qp.c * qp.c;
                let sq = |x: f64| x * x;
                let g2 = |a: [f64; 2], b: [f64; 2]| sq(a[0] - b[0]) + sq(a[1] - b[1]);
                let n2 = |a: [f64; 2]| sq(a[0]) + sq(a[1]);
                acc[0][0] += w * sq(h.u - e.u);
                acc[0][1] += w * sq(e.u);
                acc[1][0] += w * (sq(h.u_t - e.u_t) + g2(h.u_grad, e.u_grad));
                acc[1][1] += w * (sq(e.u_t) + n2(e.u_grad));
                acc[2][0] += w * (sq(h.u_t - e.u_t) + c2 * g2(h.u_grad, e.u_grad));
                acc[2][1] += w * (sq(e.u_t) + c2 * n2(e.u_grad));
                acc[3][0] += w * sq(h.v - e.v);
                acc[3][1] += w * sq(e.v);
                acc[4][0] += w * (sq(h.v_t - e.v_t) + g2(h.v_grad, e.v_grad));
                acc[4][1] += w * (sq(e.v_t) + n2(e.v_grad));
            }
        }
    }
    let rel = |a: [f64; 2]| if a[1] > 0.0 { (a[0] / a[1]).sqrt() } else { a[0].sqrt() };
    ErrorNorms { u_l2: rel(acc[0]), u_h1: rel(acc[1]), u_ch1: rel(acc[2]), v_l2: rel(acc[3]), v_h1: rel(acc[4]) }
}

/// E_h(t) = ½‖V_h(t)‖² + ½‖∇U_h(t)‖² at the requested times.
pub fn energy_series(sys: &SpaceTimeSystem, sol: &SpaceTimeSolution, times: &[f64]) -> Vec<f64> {
    times
        .iter()
        .map(|&t| {
            let [u, ut, v, vt] = sol.slice(t);
            sys.spatial
                .points
                .iter()
                .map(|qp| {
                    let pv = slice_value(&qp.basis, &u, &ut, &v, &vt);
                    0.5 * qp.w * (pv.v * pv.v + pv.u_grad[0] * pv.u_grad[0] + pv.u_grad[1] * pv.u_grad[1])
                })
                .sum()
        })
        .collect()
}

/// n-th complex Fourier coefficient (1/L)∫ f(x) e^{-2πin(x-a)/L} dx on a 1D
/// periodic axis, by composite Gauss quadrature on the mesh.
pub fn fourier_coefficient<F: Fn(f64) -> f64>(axis: &Axis, f: F, n: i64, points_per_element: usize) -> Complex64 {
    let rule = gauss_rule(points_per_element);
    let len = axis.hi - axis.lo;
    let h = axis.h();
    let mut s = Complex64::new(0.0, 0.0);
    for e in 0..axis.intervals {
        let a = axis.lo + e as f64 * h;
        for (x, w) in rule.mapped(a, a + h) {
            let ph = -2.0 * std::f64::consts::PI * n as f64 * (x - axis.lo) / len;
            s += Complex64::from_polar(w * f(x), ph);
        }
    }
    s / len
}

/// Phase error |arg(c_n · conj(c_{h,n}))| of mode n; `None` where the exact
/// coefficient is too small for the phase to be defined.
pub fn fourier_phase_error<E: Fn(f64) -> Complex64>(
    sys: &SpaceTimeSystem,
    sol: &SpaceTimeSolution,
    exact_coeff: E,
    n: i64,
    times: &[f64],
) -> Vec<Option<f64>> {
    let axis = &sys.spatial.axes[0];
    times
        .iter()
        .map(|&t| {
            let c = exact_coeff(t);
            if c.norm() < 1e-14 {
                return None;
            }
            let [u, ..] = sol.slice(t);
            let ch = fourier_coefficient(axis, |x| sys.spatial.eval(&u, &[x]).0, n, sys.temporal.p + 8);
            Some((c * ch.conj()).arg().abs())
        })
        .collect()
}
