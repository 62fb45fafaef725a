//! Tensor-product spline spaces in one and two space dimensions and the
//! spatial mass, stiffness and Robin boundary mass matrices.

use crate::linalg::{LinalgError, Sparse, SparseLu};
use crate::spline::{gauss_rule, SplineError, SplineSpace};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SpatialError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("wave-speed interface at {value} on axis {axis} is not a mesh node")]
    InterfaceOffMesh { axis: usize, value: f64 },
    #[error(transparent)]
    Spline(#[from] SplineError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum Bc {
    Dirichlet,
    Neumann,
    /// Impedance condition with parameter ϑ > 0.
    Robin(f64),
    Periodic,
}

impl std::str::FromStr for Bc {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim().to_ascii_lowercase();
        match s.as_str() {
            "dirichlet" | "dirichlet0" => Ok(Bc::Dirichlet),
            "neumann" => Ok(Bc::Neumann),
            "periodic" => Ok(Bc::Periodic),
            _ => {
                if let Some(rest) = s.strip_prefix("robin") {
                    let t = rest.trim_start_matches([':', '(']).trim_end_matches(')');
                    let theta: f64 = if t.is_empty() { 1.0 } else { t.parse().map_err(|_| format!("bad Robin parameter '{t}'"))? };
                    return Ok(Bc::Robin(theta));
                }
                Err(format!("unknown boundary condition '{s}'"))
            }
        }
    }
}

/// One coordinate direction of the box.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub degree: usize,
    pub intervals: usize,
    pub lo: f64,
    pub hi: f64,
    pub lower: Bc,
    pub upper: Bc,
    /// Interior mesh nodes (1..intervals-1) where only C^0 continuity is kept.
    pub c0_nodes: Vec<usize>,
}

impl Axis {
    pub fn new(degree: usize, intervals: usize, lo: f64, hi: f64, lower: Bc, upper: Bc) -> Self {
        Axis { degree, intervals, lo, hi, lower, upper, c0_nodes: Vec::new() }
    }

    pub fn h(&self) -> f64 {
        (self.hi - self.lo) / self.intervals as f64
    }

    pub fn space(&self) -> Result<SplineSpace, SpatialError> {
        let periodic = (self.lower == Bc::Periodic, self.upper == Bc::Periodic);
        match periodic {
            (true, true) => {
                if !self.c0_nodes.is_empty() {
                    return Err(SpatialError::Config("C0 nodes on a periodic axis".into()));
                }
                Ok(SplineSpace::periodic(self.degree, self.intervals, self.lo, self.hi)?)
            }
            (false, false) => {
                for bc in [self.lower, self.upper] {
                    if let Bc::Robin(t) = bc {
                        if !(t > 0.0) {
                            return Err(SpatialError::Config(format!("Robin parameter must be positive, got {t}")));
                        }
                    }
                }
                let mut s = SplineSpace::new(self.degree, self.intervals, self.lo, self.hi)?;
                if !self.c0_nodes.is_empty() {
                    s = s.with_c0_nodes(&self.c0_nodes)?;
                }
                Ok(s.trimmed(self.lower == Bc::Dirichlet, self.upper == Bc::Dirichlet))
            }
            _ => Err(SpatialError::Config("periodic faces must come in opposite pairs".into())),
        }
    }
}

/// Axis-aligned box with its own wave speed; later regions win.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveSpeed {
    pub default: f64,
    pub regions: Vec<SpeedRegion>,
}

impl WaveSpeed {
    pub fn constant(c: f64) -> Self {
        WaveSpeed { default: c, regions: Vec::new() }
    }

    /// Speed `left` for x_axis < at, `right` beyond.
    pub fn split(dim: usize, axis: usize, at: f64, left: f64, right: f64) -> Self {
        let mut lo = vec![f64::NEG_INFINITY; dim];
        let hi = vec![f64::INFINITY; dim];
        lo[axis] = at;
        WaveSpeed { default: left, regions: vec![SpeedRegion { lo, hi, c: right }] }
    }

    pub fn at(&self, x: &[f64]) -> f64 {
        let mut c = self.default;
        for r in &self.regions {
            if x.iter().enumerate().all(|(k, &v)| v >= r.lo[k] && v <= r.hi[k]) {
                c = r.c;
            }
        }
        c
    }
}

/// Basis functions nonzero at one point: dof, value and gradient.
pub type PointBasis = Vec<(usize, f64, [f64; 2])>;

/// Volume quadrature point with the precomputed basis.
#[derive(Debug, Clone)]
pub struct QuadPoint {
    pub x: [f64; 2],
    pub w: f64,
    pub c: f64,
    pub basis: PointBasis,
}

/// Assembled spatial discretization.
#[derive(Debug, Clone)]
pub struct SpatialDiscretization {
    pub axes: Vec<Axis>,
    pub spaces: Vec<SplineSpace>,
    pub speed: WaveSpeed,
    pub mass: Sparse,
    pub stiffness: Sparse,
    pub robin: Sparse,
    pub points: Vec<QuadPoint>,
}

struct AxisPoint {
    x: f64,
    w: f64,
    elem: usize,
    first: usize,
    d: Vec<Vec<f64>>,
}

fn axis_points(space: &SplineSpace, q: usize) -> Vec<AxisPoint> {
    let rule = gauss_rule(q);
    let mut out = Vec::new();
    for (e, &(span, a, b)) in space.elements().iter().enumerate() {
        for (x, w) in rule.mapped(a, b) {
            let (first, d) = space.local_basis(span, x, 1);
            out.push(AxisPoint { x, w, elem: e, first, d });
        }
    }
    out
}

impl SpatialDiscretization {
    pub fn new(axes: Vec<Axis>, speed: WaveSpeed) -> Result<Self, SpatialError> {
        let dim = axes.len();
        if !(1..=2).contains(&dim) {
            return Err(SpatialError::Config(format!("dimension must be 1 or 2, got {dim}")));
        }
        if !(speed.default > 0.0) || speed.regions.iter().any(|r| !(r.c > 0.0)) {
            return Err(SpatialError::Config("wave speed must be positive".into()));
        }
        for r in &speed.regions {
            if r.lo.len() != dim || r.hi.len() != dim {
                return Err(SpatialError::Config("speed region dimension mismatch".into()));
            }
            for (k, ax) in axes.iter().enumerate() {
                for v in [r.lo[k], r.hi[k]] {
                    if v.is_finite() && v > ax.lo && v < ax.hi {
                        let s = (v - ax.lo) / ax.h();
                        if (s - s.round()).abs() > 1e-9 {
                            return Err(SpatialError::InterfaceOffMesh { axis: k, value: v });
                        }
                    }
                }
            }
        }
        let spaces = axes.iter().map(Axis::space).collect::<Result<Vec<_>, _>>()?;
        let mut disc = SpatialDiscretization {
            axes,
            spaces,
            speed,
            mass: Sparse::zeros(0),
            stiffness: Sparse::zeros(0),
            robin: Sparse::zeros(0),
            points: Vec::new(),
        };
        disc.assemble();
        Ok(disc)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn ndofs(&self) -> usize {
        self.spaces.iter().map(SplineSpace::dimension).product()
    }

    fn axis_dims(&self) -> (usize, usize) {
        (self.spaces[0].dimension(), self.spaces.get(1).map_or(1, SplineSpace::dimension))
    }

    fn assemble(&mut self) {
        let p = self.axes.iter().map(|a| a.degree).max().unwrap();
        self.points = self.volume_points(p + 2);
        let n = self.ndofs();
        let (mut m, mut k) = (Sparse::zeros(n), Sparse::zeros(n));
        for qp in &self.points {
            for &(i, vi, gi) in &qp.basis {
                for &(j, vj, gj) in &qp.basis {
                    m.add(i, j, qp.w * vi * vj);
                    k.add(i, j, qp.w * qp.c * qp.c * (gi[0] * gj[0] + gi[1] * gj[1]));
                }
            }
        }
        m.finalize();
        k.finalize();
        let mut r = Sparse::zeros(n);
        for (face, theta) in self.robin_faces() {
            for (x, w, basis) in self.face_points(face, p + 2) {
                let c = self.speed_inside(face, &x);
                for &(i, vi) in &basis {
                    for &(j, vj) in &basis {
                        r.add(i, j, theta * c * w * vi * vj);
                    }
                }
            }
        }
        r.finalize();
        self.mass = m;
        self.stiffness = k;
        self.robin = r;
    }

    /// Tensor Gauss points (q per direction) with basis values and gradients.
    pub fn volume_points(&self, q: usize) -> Vec<QuadPoint> {
        let pts: Vec<Vec<AxisPoint>> = self.spaces.iter().map(|s| axis_points(s, q)).collect();
        let mids: Vec<Vec<f64>> =
            self.spaces.iter().map(|s| s.elements().iter().map(|&(_, a, b)| 0.5 * (a + b)).collect()).collect();
        let n1 = self.spaces[0].dimension();
        let mut out = Vec::new();
        if self.dim() == 1 {
            for a in &pts[0] {
                let c = self.speed.at(&[mids[0][a.elem]]);
                let basis = (0..a.d[0].len())
                    .filter_map(|i| self.spaces[0].dof_of(a.first + i).map(|d| (d, a.d[0][i], [a.d[1][i], 0.0])))
                    .collect();
                out.push(QuadPoint { x: [a.x, 0.0], w: a.w, c, basis });
            }
        } else {
            for b in &pts[1] {
                for a in &pts[0] {
                    let c = self.speed.at(&[mids[0][a.elem], mids[1][b.elem]]);
                    let mut basis = Vec::with_capacity(a.d[0].len() * b.d[0].len());
                    for j in 0..b.d[0].len() {
                        let Some(dj) = self.spaces[1].dof_of(b.first + j) else { continue };
                        for i in 0..a.d[0].len() {
                            let Some(di) = self.spaces[0].dof_of(a.first + i) else { continue };
                            basis.push((
                                di + n1 * dj,
                                a.d[0][i] * b.d[0][j],
                                [a.d[1][i] * b.d[0][j], a.d[0][i] * b.d[1][j]],
                            ));
                        }
                    }
                    out.push(QuadPoint { x: [a.x, b.x], w: a.w * b.w, c, basis });
                }
            }
        }
        out
    }

    /// Faces carrying a Robin condition as ((axis, upper), ϑ).
    pub fn robin_faces(&self) -> Vec<((usize, bool), f64)> {
        let mut out = Vec::new();
        for (k, ax) in self.axes.iter().enumerate() {
            if let Bc::Robin(t) = ax.lower {
                out.push(((k, false), t));
            }
            if let Bc::Robin(t) = ax.upper {
                out.push(((k, true), t));
            }
        }
        out
    }

    /// Faces with a natural (Neumann or Robin) condition.
    pub fn natural_faces(&self) -> Vec<(usize, bool)> {
        let mut out = Vec::new();
        for (k, ax) in self.axes.iter().enumerate() {
            for (upper, bc) in [(false, ax.lower), (true, ax.upper)] {
                if matches!(bc, Bc::Neumann | Bc::Robin(_)) {
                    out.push((k, upper));
                }
            }
        }
        out
    }

    fn speed_inside(&self, face: (usize, bool), x: &[f64]) -> f64 {
        let mut y = x.to_vec();
        let ax = &self.axes[face.0];
        y[face.0] += if face.1 { -0.5 * ax.h() } else { 0.5 * ax.h() };
        self.speed.at(&y)
    }

    /// Quadrature on a face: (point, weight, nonzero (dof, value)).
    pub fn face_points(&self, face: (usize, bool), q: usize) -> Vec<(Vec<f64>, f64, Vec<(usize, f64)>)> {
        let (k, upper) = face;
        let ax = &self.axes[k];
        let xf = if upper { ax.hi } else { ax.lo };
        let mut trace = self.spaces[k].eval_all(xf, 0).unwrap_or_default();
        trace.retain(|e| e.1 != 0.0);
        if self.dim() == 1 {
            let mut x = vec![0.0];
            x[0] = xf;
            return vec![(x, 1.0, trace)];
        }
        let other = 1 - k;
        let n1 = self.spaces[0].dimension();
        let mut out = Vec::new();
        for a in axis_points(&self.spaces[other], q) {
            let mut basis = Vec::new();
            for i in 0..a.d[0].len() {
                let Some(d_other) = self.spaces[other].dof_of(a.first + i) else { continue };
                for &(d_face, v) in &trace {
                    let (i1, i2) = if k == 0 { (d_face, d_other) } else { (d_other, d_face) };
                    basis.push((i1 + n1 * i2, v * a.d[0][i]));
                }
            }
            let mut x = vec![0.0; 2];
            x[k] = xf;
            x[other] = a.x;
            out.push((x, a.w, basis));
        }
        out
    }

    /// Nonzero basis functions at a point (value and gradient).
    pub fn basis_at(&self, x: &[f64]) -> PointBasis {
        let per_axis: Vec<Vec<(usize, f64, f64)>> = self
            .spaces
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let v = s.eval_all(x[k], 0).unwrap_or_default();
                let d = s.eval_all(x[k], 1).unwrap_or_default();
                let mut out: Vec<(usize, f64, f64)> = v.iter().map(|&(i, val)| (i, val, 0.0)).collect();
                for (i, dv) in d {
                    match out.iter_mut().find(|e| e.0 == i) {
                        Some(e) => e.2 += dv,
                        None => out.push((i, 0.0, dv)),
                    }
                }
                out
            })
            .collect();
        if self.dim() == 1 {
            return per_axis[0].iter().map(|&(i, v, d)| (i, v, [d, 0.0])).collect();
        }
        let n1 = self.spaces[0].dimension();
        let mut out = Vec::new();
        for &(j, vb, db) in &per_axis[1] {
            for &(i, va, da) in &per_axis[0] {
                out.push((i + n1 * j, va * vb, [da * vb, va * db]));
            }
        }
        out
    }

    /// Value and gradient of the spatial function with coefficients `coef`.
    pub fn eval(&self, coef: &[f64], x: &[f64]) -> (f64, [f64; 2]) {
        let mut v = 0.0;
        let mut g = [0.0; 2];
        for (i, b, gb) in self.basis_at(x) {
            v += coef[i] * b;
            g[0] += coef[i] * gb[0];
            g[1] += coef[i] * gb[1];
        }
        (v, g)
    }

    /// L² projection of `f` onto the discrete space.
    pub fn project<F: Fn(&[f64]) -> f64>(&self, f: F) -> Result<Vec<f64>, SpatialError> {
        let p = self.axes.iter().map(|a| a.degree).max().unwrap();
        let mut rhs = vec![0.0; self.ndofs()];
        for qp in self.volume_points(p + 6) {
            let fx = f(&qp.x[..self.dim()]);
            for &(i, v, _) in &qp.basis {
                rhs[i] += qp.w * fx * v;
            }
        }
        let lu = SparseLu::<f64>::factor(&[(1.0, &self.mass)])?;
        lu.solve_in_place(&mut rhs);
        Ok(rhs)
    }

    /// Kronecker form K₂⊗M₁ + M₂⊗K₁ (c ≡ 1) from the 1D factors, for checks.
    pub fn kron_matrices(&self) -> Result<(Sparse, Sparse), SpatialError> {
        let one = |k: usize| {
            let ax = Axis { lower: self.axes[k].lower, upper: self.axes[k].upper, ..self.axes[k].clone() };
            SpatialDiscretization::new(vec![ax], WaveSpeed::constant(1.0))
        };
        let a = one(0)?;
        if self.dim() == 1 {
            return Ok((a.mass, a.stiffness));
        }
        let b = one(1)?;
        let (n1, _) = self.axis_dims();
        let n = self.ndofs();
        let (mut m, mut k) = (Sparse::zeros(n), Sparse::zeros(n));
        for (i2, row2) in b.mass.rows.iter().enumerate() {
            for &(j2, m2) in row2 {
                let k2 = b.stiffness.get(i2, j2);
                for (i1, row1) in a.mass.rows.iter().enumerate() {
                    for &(j1, m1) in row1 {
                        let k1 = a.stiffness.get(i1, j1);
                        let (r, c) = (i1 + n1 * i2, j1 + n1 * j2);
                        m.add(r, c, m1 * m2);
                        k.add(r, c, k2 * m1 + m2 * k1);
                    }
                }
            }
        }
        m.finalize();
        k.finalize();
        Ok((m, k))
    }

    /// Largest eigenvalue of M⁻¹K by 20 power iterations.
    pub fn mu_max_estimate(&self) -> Result<f64, SpatialError> {
        let n = self.ndofs();
        let lu = SparseLu::<f64>::factor(&[(1.0, &self.mass)])?;
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 13) as f64 / 13.0).collect();
        let mut y = vec![0.0; n];
        let mut lambda = 0.0;
        for _ in 0..20 {
            self.stiffness.mul_vec(&x, &mut y);
            lu.solve_in_place(&mut y);
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Ok(0.0);
            }
            let xn = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            lambda = norm / xn;
            for (a, b) in x.iter_mut().zip(&y) {
                *a = b / norm;
            }
        }
        Ok(lambda)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit(p: usize, n: usize, lower: Bc, upper: Bc) -> Axis {
        Axis::new(p, n, 0.0, 1.0, lower, upper)
    }

    #[test]
    fn hat_function_rows() {
        let d = SpatialDiscretization::new(vec![unit(1, 10, Bc::Dirichlet, Bc::Dirichlet)], WaveSpeed::constant(1.0)).unwrap();
        let h = 0.1;
        let i = 4;
        assert_relative_eq!(d.stiffness.get(i, i - 1), -1.0 / h, max_relative = 1e-13);
        assert_relative_eq!(d.stiffness.get(i, i), 2.0 / h, max_relative = 1e-13);
        assert_relative_eq!(d.mass.get(i, i + 1), h / 6.0, max_relative = 1e-13);
        assert_relative_eq!(d.mass.get(i, i), 4.0 * h / 6.0, max_relative = 1e-13);
        assert_eq!(d.ndofs(), 9);
        assert!(d.robin.is_zero());
    }

    #[test]
    fn piecewise_speed_scales_elements() {
        let ax = unit(1, 10, Bc::Neumann, Bc::Neumann);
        let d = SpatialDiscretization::new(vec![ax.clone()], WaveSpeed::split(1, 0, 0.5, 1.0, 2.0)).unwrap();
        let d1 = SpatialDiscretization::new(vec![ax], WaveSpeed::constant(1.0)).unwrap();
        // element [0.2,0.3] left of the interface, [0.7,0.8] right of it
        assert_relative_eq!(d.stiffness.get(2, 3), d1.stiffness.get(2, 3), max_relative = 1e-13);
        assert_relative_eq!(d.stiffness.get(7, 8), 4.0 * d1.stiffness.get(7, 8), max_relative = 1e-13);
        let bad = SpatialDiscretization::new(vec![unit(1, 10, Bc::Neumann, Bc::Neumann)], WaveSpeed::split(1, 0, 0.55, 1.0, 2.0));
        assert!(matches!(bad, Err(SpatialError::InterfaceOffMesh { .. })));
    }

    #[test]
    fn tensor_identity_2d() {
        for p in 1..=3 {
            let axes = vec![unit(p, 5, Bc::Dirichlet, Bc::Neumann), Axis::new(p, 4, 0.0, 2.0, Bc::Dirichlet, Bc::Dirichlet)];
            let d = SpatialDiscretization::new(axes, WaveSpeed::constant(1.0)).unwrap();
            let (m, k) = d.kron_matrices().unwrap();
            let n = d.ndofs();
            for i in 0..n {
                for j in 0..n {
                    assert!((m.get(i, j) - d.mass.get(i, j)).abs() < 1e-14);
                    assert!((k.get(i, j) - d.stiffness.get(i, j)).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn robin_mass_is_boundary_trace() {
        let d = SpatialDiscretization::new(vec![unit(2, 6, Bc::Dirichlet, Bc::Robin(2.0))], WaveSpeed::constant(3.0)).unwrap();
        let n = d.ndofs();
        assert_eq!(d.robin.nnz(), 1);
        assert_relative_eq!(d.robin.get(n - 1, n - 1), 6.0, max_relative = 1e-14);
        // 2D face: integral of the trace along the face
        let axes = vec![unit(2, 4, Bc::Robin(1.0), Bc::Dirichlet), unit(2, 4, Bc::Neumann, Bc::Neumann)];
        let d = SpatialDiscretization::new(axes, WaveSpeed::constant(1.0)).unwrap();
        let total: f64 = d.robin.rows.iter().flatten().map(|e| e.1).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-13);
    }

    #[test]
    fn periodic_mass_partition_of_unity() {
        let d = SpatialDiscretization::new(vec![unit(3, 8, Bc::Periodic, Bc::Periodic)], WaveSpeed::constant(1.0)).unwrap();
        assert_eq!(d.ndofs(), 8);
        let total: f64 = d.mass.rows.iter().flatten().map(|e| e.1).sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-13);
        let ksum: f64 = d.stiffness.rows.iter().flatten().map(|e| e.1).sum();
        assert!(ksum.abs() < 1e-12);
        assert!(Axis::new(2, 8, 0.0, 1.0, Bc::Periodic, Bc::Dirichlet).space().is_err());
    }

    #[test]
    fn projection_reproduces_splines() {
        let d = SpatialDiscretization::new(
            vec![unit(2, 6, Bc::Neumann, Bc::Neumann), unit(2, 5, Bc::Neumann, Bc::Neumann)],
            WaveSpeed::constant(1.0),
        )
        .unwrap();
        let c = d.project(|x| x[0] * x[0] - 2.0 * x[0] * x[1] + 0.5).unwrap();
        let (v, g) = d.eval(&c, &[0.3, 0.7]);
        assert!((v - (0.09 - 0.42 + 0.5)).abs() < 1e-12);
        assert!((g[0] - (0.6 - 1.4)).abs() < 1e-11);
        assert!((g[1] + 0.6).abs() < 1e-11);
    }

    #[test]
    fn c0_nodes_raise_dimension() {
        let mut ax = unit(3, 8, Bc::Neumann, Bc::Neumann);
        let plain = ax.space().unwrap().dimension();
        ax.c0_nodes = vec![4];
        assert_eq!(ax.space().unwrap().dimension(), plain + 2);
    }

    #[test]
    fn mu_max_close_to_generalized_eigenvalue() {
        let d = SpatialDiscretization::new(vec![unit(1, 20, Bc::Dirichlet, Bc::Dirichlet)], WaveSpeed::constant(1.0)).unwrap();
        let mu = d.mu_max_estimate().unwrap();
        // largest eigenvalue of the P1 pencil: (12/h²) sin²(kπh/2)/(2+cos(kπh)), k = N-1
        let h: f64 = 0.05;
        let th = 19.0 * std::f64::consts::PI * h;
        let exact = 6.0 / (h * h) * (1.0 - th.cos()) / (2.0 + th.cos());
        assert!(mu <= exact * (1.0 + 1e-12) && mu > 0.8 * exact, "{mu} vs {exact}");
    }
}
