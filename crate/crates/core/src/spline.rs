//! Open-knot B-spline spaces, cardinal splines and Gauss quadrature.
//!
//! Knot-interval convention: values and derivatives of order `r < p` are
//! continuous, so the half-open convention only matters for `r = p`, where
//! the piecewise-constant derivative is taken from the left (from the right
//! at the left end of the interval).

use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SplineError {
    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("derivative order {order} exceeds degree {degree}")]
    DerivativeTooHigh { order: usize, degree: usize },
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("point {t} outside [{t0}, {t1}]")]
    OutOfDomain { t: f64, t0: f64, t1: f64 },
}

/// Univariate spline space of degree `p` on a uniform mesh of `n` intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineSpace {
    degree: usize,
    regularity: i32,
    intervals: usize,
    t0: f64,
    t1: f64,
    trim_start: bool,
    trim_end: bool,
    periodic: bool,
    c0_nodes: Vec<usize>,
    knots: Vec<f64>,
    elems: Vec<(usize, f64, f64)>,
}

impl SplineSpace {
    /// Maximal-regularity space with open (clamped) knots, untrimmed.
    pub fn new(degree: usize, intervals: usize, t0: f64, t1: f64) -> Result<Self, SplineError> {
        Self::build(degree, degree as i32 - 1, intervals, t0, t1, false, Vec::new())
    }

    /// Uniform periodic space of dimension `intervals` (wrap-around basis).
    pub fn periodic(degree: usize, intervals: usize, t0: f64, t1: f64) -> Result<Self, SplineError> {
        if intervals < degree + 1 {
            return Err(SplineError::InvalidSpace(format!(
                "periodic space needs at least {} intervals",
                degree + 1
            )));
        }
        Self::build(degree, degree as i32 - 1, intervals, t0, t1, true, Vec::new())
    }

    /// Same mesh with regularity `k` at every interior node.
    pub fn with_regularity(self, k: i32) -> Result<Self, SplineError> {
        if self.periodic {
            return Err(SplineError::InvalidSpace("periodic spaces have maximal regularity".into()));
        }
        Self::build(self.degree, k, self.intervals, self.t0, self.t1, false, self.c0_nodes)
            .map(|s| s.trimmed(self.trim_start, self.trim_end))
    }

    /// Lower continuity to C^0 at the given interior mesh nodes (index 1..n-1).
    pub fn with_c0_nodes(self, nodes: &[usize]) -> Result<Self, SplineError> {
        if self.periodic {
            return Err(SplineError::InvalidSpace("C0 nodes unsupported for periodic spaces".into()));
        }
        if let Some(&bad) = nodes.iter().find(|&&i| i == 0 || i >= self.intervals) {
            return Err(SplineError::InvalidSpace(format!("node {bad} is not an interior mesh node")));
        }
        let mut c0 = nodes.to_vec();
        c0.sort_unstable();
        c0.dedup();
        Self::build(self.degree, self.regularity, self.intervals, self.t0, self.t1, false, c0)
            .map(|s| s.trimmed(self.trim_start, self.trim_end))
    }

    /// Drop the first and/or last basis function (zero initial / final value).
    pub fn trimmed(mut self, start: bool, end: bool) -> Self {
        if !self.periodic {
            self.trim_start = start;
            self.trim_end = end;
        }
        self
    }

    fn build(
        degree: usize,
        regularity: i32,
        intervals: usize,
        t0: f64,
        t1: f64,
        periodic: bool,
        c0_nodes: Vec<usize>,
    ) -> Result<Self, SplineError> {
        if intervals == 0 || !(t1 > t0) {
            return Err(SplineError::InvalidSpace(format!(
                "need at least one interval and t1 > t0 (got n={intervals}, [{t0}, {t1}])"
            )));
        }
        if regularity > degree as i32 - 1 || regularity < -1 {
            return Err(SplineError::InvalidSpace(format!(
                "regularity {regularity} not in [-1, {}]",
                degree as i32 - 1
            )));
        }
        let h = (t1 - t0) / intervals as f64;
        let node = |i: i64| if i == intervals as i64 { t1 } else { t0 + i as f64 * h };
        let mut knots = Vec::new();
        if periodic {
            for i in -(degree as i64)..=(intervals + degree) as i64 {
                knots.push(node(i));
            }
        } else {
            knots.extend(std::iter::repeat(t0).take(degree + 1));
            let base = (degree as i32 - regularity) as usize;
            for i in 1..intervals {
                let mult = if c0_nodes.contains(&i) { degree.max(base) } else { base };
                knots.extend(std::iter::repeat(node(i as i64)).take(mult));
            }
            knots.extend(std::iter::repeat(t1).take(degree + 1));
        }
        let last = knots.len() - degree - 1;
        let elems = (degree..last)
            .filter(|&s| knots[s + 1] > knots[s])
            .map(|s| (s, knots[s], knots[s + 1]))
            .filter(|&(_, a, b)| a >= t0 - 1e-14 * h && b <= t1 + 1e-14 * h)
            .collect();
        Ok(Self {
            degree,
            regularity,
            intervals,
            t0,
            t1,
            trim_start: false,
            trim_end: false,
            periodic,
            c0_nodes,
            knots,
            elems,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn regularity(&self) -> i32 {
        self.regularity
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    pub fn h(&self) -> f64 {
        (self.t1 - self.t0) / self.intervals as f64
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn trim_start(&self) -> bool {
        self.trim_start
    }

    pub fn trim_end(&self) -> bool {
        self.trim_end
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions before trimming (for periodic spaces, the
    /// number of functions on the extended knot vector).
    pub fn full_dimension(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn dimension(&self) -> usize {
        if self.periodic {
            return self.intervals;
        }
        self.full_dimension() - self.trim_start as usize - self.trim_end as usize
    }

    /// Map an untrimmed (or extended periodic) basis index to a dof index.
    pub fn dof_of(&self, full: usize) -> Option<usize> {
        if self.periodic {
            return Some(full % self.intervals);
        }
        if self.trim_start && full == 0 {
            return None;
        }
        if self.trim_end && full + 1 == self.full_dimension() {
            return None;
        }
        Some(full - self.trim_start as usize)
    }

    pub fn full_of(&self, dof: usize) -> usize {
        dof + self.trim_start as usize
    }

    /// Knot spans `(span, a, b)` of positive length inside [t0, t1].
    pub fn elements(&self) -> &[(usize, f64, f64)] {
        &self.elems
    }

    /// Span index containing `t`; right-half-open unless `from_left`.
    pub fn span(&self, t: f64, from_left: bool) -> usize {
        let els = self.elements();
        let idx = if from_left {
            els.partition_point(|&(_, a, _)| a < t)
        } else {
            els.partition_point(|&(_, a, _)| a <= t)
        };
        let i = idx.saturating_sub(1).min(els.len() - 1);
        els[i].0
    }

    /// Derivatives 0..=nd of the p+1 basis functions nonzero on span `span`
    /// at `t`. Returns the untrimmed index of the first one and `ders[r][i]`.
    pub fn local_basis(&self, span: usize, t: f64, nd: usize) -> (usize, Vec<Vec<f64>>) {
        (span - self.degree, ders_basis(&self.knots, span, t, self.degree, nd))
    }

    fn check_point(&self, t: f64) -> Result<(), SplineError> {
        let tol = 1e-12 * (self.t1 - self.t0);
        if t < self.t0 - tol || t > self.t1 + tol {
            return Err(SplineError::OutOfDomain { t, t0: self.t0, t1: self.t1 });
        }
        Ok(())
    }

    /// Value of the r-th derivative of every dof at `t`, as (dof, value) pairs.
    pub fn eval_all(&self, t: f64, r: usize) -> Result<Vec<(usize, f64)>, SplineError> {
        if r > self.degree {
            return Err(SplineError::DerivativeTooHigh { order: r, degree: self.degree });
        }
        self.check_point(t)?;
        let span = self.span(t, r == self.degree && r > 0);
        let (first, ders) = self.local_basis(span, t, r);
        Ok(ders[r]
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| self.dof_of(first + i).map(|d| (d, v)))
            .collect())
    }

    /// Evaluate a spline with dof coefficients `coef` (r-th derivative).
    pub fn eval_function(&self, coef: &[f64], t: f64, r: usize) -> Result<f64, SplineError> {
        Ok(self.eval_all(t, r)?.into_iter().map(|(d, v)| coef[d] * v).sum())
    }
}

/// r-th derivative of the j-th basis function (dof index) of `space` at `t`.
pub fn eval_bspline(space: &SplineSpace, j: usize, t: f64, r: usize) -> Result<f64, SplineError> {
    let dim = space.dimension();
    if j >= dim {
        return Err(SplineError::IndexOutOfRange { index: j, dim });
    }
    Ok(space.eval_all(t, r)?.into_iter().filter(|&(d, _)| d == j).map(|(_, v)| v).sum())
}

/// Nonzero basis functions and derivatives on a knot span (Piegl-Tiller).
pub fn ders_basis(knots: &[f64], span: usize, u: f64, p: usize, nd: usize) -> Vec<Vec<f64>> {
    let mut ndu = vec![vec![0.0; p + 1]; p + 1];
    let mut left = vec![0.0; p + 1];
    let mut right = vec![0.0; p + 1];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    let mut ders = vec![vec![0.0; p + 1]; nd + 1];
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let pi = p as isize;
    let mut a = [vec![0.0; p + 1], vec![0.0; p + 1]];
    for r in 0..=pi {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=(nd.min(p) as isize) {
            let mut d = 0.0;
            let rk = r - k;
            let pk = pi - k;
            if r >= k {
                a[s2][0] = a[s1][0] / ndu[(pk + 1) as usize][rk as usize];
                d = a[s2][0] * ndu[rk as usize][pk as usize];
            }
            let j1 = if rk >= -1 { 1 } else { -rk };
            let j2 = if r - 1 <= pk { k - 1 } else { pi - r };
            for j in j1..=j2 {
                let (ju, rkj) = (j as usize, (rk + j) as usize);
                a[s2][ju] = (a[s1][ju] - a[s1][ju - 1]) / ndu[(pk + 1) as usize][rkj];
                d += a[s2][ju] * ndu[rkj][pk as usize];
            }
            if r <= pk {
                a[s2][k as usize] = -a[s1][(k - 1) as usize] / ndu[(pk + 1) as usize][r as usize];
                d += a[s2][k as usize] * ndu[r as usize][pk as usize];
            }
            ders[k as usize][r as usize] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut fac = p as f64;
    for k in 1..=nd.min(p) {
        for v in ders[k].iter_mut() {
            *v *= fac;
        }
        fac *= (p - k) as f64;
    }
    ders
}

/// Cardinal B-spline of degree `j` on knots 0, 1, ..., j+1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CardinalSpline {
    pub degree: usize,
}

impl CardinalSpline {
    pub fn eval(&self, t: f64, r: usize) -> f64 {
        eval_cardinal(self.degree, t, r)
    }

    pub fn support(&self) -> (f64, f64) {
        (0.0, self.degree as f64 + 1.0)
    }
}

fn cardinal_value(m: usize, t: f64, from_left: bool) -> f64 {
    let top = (m + 1) as f64;
    let inside = if from_left { t > 0.0 && t <= top } else { t >= 0.0 && t < top };
    if !inside {
        return 0.0;
    }
    if m == 0 {
        return 1.0;
    }
    let mut i = t.floor() as usize;
    if from_left && t == t.floor() {
        i -= 1;
    }
    let i = i.min(m);
    // local Cox-de Boor triangle on integer knots, span [i, i+1)
    let mut n = vec![0.0; m + 1];
    n[0] = 1.0;
    for d in 1..=m {
        let mut saved = 0.0;
        for r in 0..d {
            let right = (i + r + 1) as f64 - t;
            let left = t - (i + r + 1) as f64 + d as f64;
            let temp = n[r] / d as f64;
            n[r] = saved + right * temp;
            saved = left * temp;
        }
        n[d] = saved;
    }
    n[m - i]
}

/// r-th derivative of the cardinal spline of degree `j` at `t`.
pub fn eval_cardinal(j: usize, t: f64, r: usize) -> f64 {
    assert!(r <= j, "derivative order {r} exceeds degree {j}");
    let mut acc = 0.0;
    let mut binom = 1.0;
    for k in 0..=r {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * cardinal_value(j - r, t - k as f64, r == j && r > 0);
        binom = binom * (r - k) as f64 / (k + 1) as f64;
    }
    acc
}

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Highest polynomial degree integrated exactly.
    pub order: usize,
}

impl QuadratureRule {
    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// q-point Gauss-Legendre rule, exact up to degree 2q-1.
pub fn gauss_rule(q: usize) -> QuadratureRule {
    assert!(q >= 1);
    if q == 1 {
        return QuadratureRule { nodes: vec![0.0], weights: vec![2.0], order: 1 };
    }
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..(q + 1) / 2 {
        let mut x: f64 = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp: f64 = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=q {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = q as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    QuadratureRule { nodes, weights, order: 2 * q - 1 }
}

/// Integral of Φ_p^{(r1)}(t + j) Φ_p^{(r2)}(t) over the real line.
pub fn cardinal_inner(p: usize, r1: usize, r2: usize, j: i64) -> f64 {
    let lo = 0.max(-j);
    let hi = (p as i64 + 1).min(p as i64 + 1 - j);
    let rule = gauss_rule(p + 1);
    (lo..hi)
        .map(|k| {
            rule.integrate(
                |t| eval_cardinal(p, t + j as f64, r1) * eval_cardinal(p, t, r2),
                k as f64,
                (k + 1) as f64,
            )
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // literal recursion, exponential but fine for small degrees
    fn cardinal_recursive(j: usize, t: f64) -> f64 {
        if j == 0 {
            return if (0.0..1.0).contains(&t) { 1.0 } else { 0.0 };
        }
        (t * cardinal_recursive(j - 1, t) + (j as f64 + 1.0 - t) * cardinal_recursive(j - 1, t - 1.0))
            / j as f64
    }

    // truncated-power closed form
    fn cardinal_power(j: usize, t: f64) -> f64 {
        let mut s = 0.0;
        let mut binom = 1.0;
        let mut fact = 1.0;
        for k in 1..=j {
            fact *= k as f64;
        }
        for k in 0..=j + 1 {
            let x = t - k as f64;
            if x > 0.0 {
                s += if k % 2 == 0 { 1.0 } else { -1.0 } * binom * x.powi(j as i32);
            }
            binom = binom * (j + 1 - k) as f64 / (k + 1) as f64;
        }
        s / fact
    }

    #[test]
    fn hat_peak() {
        let s = SplineSpace::new(1, 4, 0.0, 1.0).unwrap();
        assert_abs_diff_eq!(eval_bspline(&s, 2, 0.5, 0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn quadratic_mid_support() {
        // interior quadratic on unit knots: support [1,4] for index 3 of N=6
        let s = SplineSpace::new(2, 6, 0.0, 6.0).unwrap();
        assert_abs_diff_eq!(eval_bspline(&s, 3, 2.5, 0).unwrap(), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_cardinal(2, 1.5, 0), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn cardinal_examples() {
        assert_abs_diff_eq!(eval_cardinal(1, 1.0, 0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_cardinal(3, 2.0, 0), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(eval_cardinal(3, 2.0, 1), 0.0, epsilon = 1e-15);
        assert_eq!(eval_cardinal(3, -0.5, 0), 0.0);
        assert_eq!(eval_cardinal(3, 4.5, 2), 0.0);
    }

    #[test]
    fn cardinal_against_recursion_and_power_form() {
        for j in 0..=6 {
            for k in 0..40 {
                let t = -0.3 + k as f64 * (j as f64 + 1.6) / 40.0 + 1e-3;
                let v = eval_cardinal(j, t, 0);
                assert_abs_diff_eq!(v, cardinal_recursive(j, t), epsilon = 1e-12);
                assert_abs_diff_eq!(v, cardinal_power(j, t), epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn top_derivative_is_left_limit() {
        // Φ_1' is +1 on (0,1], -1 on (1,2]
        assert_eq!(eval_cardinal(1, 1.0, 1), 1.0);
        assert_eq!(eval_cardinal(1, 1.5, 1), -1.0);
        assert_eq!(eval_cardinal(1, 2.0, 1), -1.0);
        let s = SplineSpace::new(1, 2, 0.0, 2.0).unwrap();
        // hat at node 1: slope +1 on the left element
        assert_eq!(eval_bspline(&s, 1, 1.0, 1).unwrap(), 1.0);
        assert_eq!(eval_bspline(&s, 1, 0.0, 1).unwrap(), 1.0);
    }

    #[test]
    fn errors() {
        let s = SplineSpace::new(2, 4, 0.0, 1.0).unwrap();
        assert!(matches!(eval_bspline(&s, 6, 0.1, 0), Err(SplineError::IndexOutOfRange { .. })));
        assert!(matches!(eval_bspline(&s, 0, 0.1, 3), Err(SplineError::DerivativeTooHigh { .. })));
        assert!(SplineSpace::new(2, 4, 0.0, 1.0).unwrap().with_regularity(2).is_err());
    }

    #[test]
    fn dimensions_and_trimming() {
        let s = SplineSpace::new(3, 10, 0.0, 2.0).unwrap();
        assert_eq!(s.dimension(), 13);
        assert_eq!(s.clone().trimmed(true, false).dimension(), 12);
        assert_eq!(s.clone().trimmed(true, true).dimension(), 11);
        let c0 = s.with_c0_nodes(&[5]).unwrap();
        assert_eq!(c0.dimension(), 15);
        assert_eq!(SplineSpace::periodic(2, 8, 0.0, 1.0).unwrap().dimension(), 8);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let s = SplineSpace::new(3, 5, 0.0, 1.0).unwrap();
        let t = 0.37;
        for j in 0..s.dimension() {
            let d = eval_bspline(&s, j, t, 1).unwrap();
            let fd = (eval_bspline(&s, j, t + 1e-6, 0).unwrap() - eval_bspline(&s, j, t - 1e-6, 0).unwrap())
                / 2e-6;
            assert_abs_diff_eq!(d, fd, epsilon = 1e-7);
        }
    }

    #[test]
    fn periodic_partition_and_wrap() {
        let s = SplineSpace::periodic(2, 5, 0.0, 1.0).unwrap();
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            let sum: f64 = s.eval_all(t, 0).unwrap().iter().map(|x| x.1).sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-14);
        }
        let a = eval_bspline(&s, 0, 0.0, 0).unwrap();
        let b = eval_bspline(&s, 0, 1.0, 0).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-14);
    }

    #[test]
    fn gauss_rules() {
        let r1 = gauss_rule(1);
        assert_eq!(r1.nodes, vec![0.0]);
        assert_abs_diff_eq!(r1.integrate(|_| 1.0, 2.0, 5.0), 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(gauss_rule(2).integrate(|t| t.powi(3), 0.0, 1.0), 0.25, epsilon = 1e-15);
        for q in 1..12 {
            let r = gauss_rule(q);
            let deg = 2 * q - 1;
            let exact = 1.0 / (deg as f64 + 1.0);
            assert_abs_diff_eq!(r.integrate(|t| t.powi(deg as i32), 0.0, 1.0), exact, epsilon = 1e-14);
        }
    }

    #[test]
    fn piecewise_quadrature_of_shifted_quadratic() {
        // ∫_0^1 Φ_2(2t + 1/2) dt = (1/2)∫_{1/2}^{5/2} Φ_2 = (1/2)(1 - 2∫_0^{1/2} s²/2 ds) = 23/48
        let rule = gauss_rule(3);
        let pieces = [0.0, 0.25, 0.75, 1.0];
        let v: f64 = pieces
            .windows(2)
            .map(|w| rule.integrate(|t| eval_cardinal(2, 2.0 * t + 0.5, 0), w[0], w[1]))
            .sum();
        assert_abs_diff_eq!(v, 23.0 / 48.0, epsilon = 1e-15);
    }

    #[test]
    fn cardinal_inner_examples() {
        assert_abs_diff_eq!(cardinal_inner(1, 0, 0, 0), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cardinal_inner(2, 1, 1, 0), 1.0, epsilon = 1e-14);
        for p in 1..5 {
            assert_eq!(cardinal_inner(p, 1, 0, p as i64 + 1), 0.0);
            assert_eq!(cardinal_inner(p, 0, 0, -(p as i64) - 3), 0.0);
        }
    }

    #[test]
    fn cardinal_inner_reduction() {
        // ∫ Φ^{(r1)}(t+j) Φ^{(r2)}(t) dt = (-1)^{r2} Φ_{2p+1}^{(r1+r2)}(p+1+j)
        for p in 1..=5 {
            for j in -(p as i64)..=(p as i64) {
                for (r1, r2) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    let lhs = cardinal_inner(p, r1, r2, j);
                    let sign = if r2 % 2 == 0 { 1.0 } else { -1.0 };
                    let rhs = sign * eval_cardinal(2 * p + 1, (p as i64 + 1 + j) as f64, r1 + r2);
                    assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-13);
                }
            }
        }
    }
}
