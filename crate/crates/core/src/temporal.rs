//! Temporal Galerkin matrices B, C, M and their nearly-Toeplitz structure.
//!
//! Indexing: row r (0-based) is tested with φ_r from the final-condition
//! trimmed space, column c is the trial function φ_{c+1} from the
//! initial-condition trimmed space. With n = N + p - 1:
//!
//! * `B[r][c] = (∂φ_{c+1}, ∂φ_r)`
//! * `C[r][c] = (∂φ_{c+1}, φ_r)`
//! * `M[r][c] = (φ_{c+1}, φ_r)`
//!
//! hB, C and M/h do not depend on h. Their band has `p+1` subdiagonals and
//! `p-1` superdiagonals and is Toeplitz away from two 2p x 2p corners.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use thiserror::Error;

use crate::exact::{self, Rational};
use crate::spline::{eval_cardinal, gauss_rule, SplineSpace};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum TemporalError {
    #[error("need N >= 3p+1 intervals (p={p}, N={n})")]
    TooFewIntervals { p: usize, n: usize },
    #[error("degree must be at least 1")]
    ZeroDegree,
    #[error("horizon must be positive, got {0}")]
    BadHorizon(f64),
    #[error(transparent)]
    Exact(#[from] exact::ExactError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum MatrixKind {
    B,
    C,
    M,
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MatrixKind::B => "B",
            MatrixKind::C => "C",
            MatrixKind::M => "M",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for MatrixKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "B" | "b" => Ok(MatrixKind::B),
            "C" | "c" => Ok(MatrixKind::C),
            "M" | "m" => Ok(MatrixKind::M),
            _ => Err(format!("unknown matrix '{s}' (expected B, C or M)")),
        }
    }
}

/// Banded Toeplitz stencil a_{-m}..a_l plus fixed corner blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BandFamily {
    pub kind: MatrixKind,
    pub p: usize,
    pub m: usize,
    pub l: usize,
    /// a_{-m}, ..., a_l
    pub stencil: Vec<f64>,
    /// Top-left (m+l) x (m+l) block of the h-free matrix.
    pub corner_top_left: DMatrix<f64>,
    pub corner_bottom_right: DMatrix<f64>,
    /// Assembled matrix = h^h_power * family.
    pub h_power: i32,
}

impl BandFamily {
    /// Stencil coefficient on diagonal `col - row = i`.
    pub fn coeff(&self, i: isize) -> f64 {
        let k = i + self.m as isize;
        if k < 0 || k as usize >= self.stencil.len() {
            0.0
        } else {
            self.stencil[k as usize]
        }
    }

    pub fn corner_size(&self) -> usize {
        self.m + self.l
    }

    /// Banded Toeplitz matrix from the stencil alone.
    pub fn toeplitz(&self, n: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, n, |r, c| self.coeff(c as isize - r as isize))
    }

    /// h-free n x n member of the family (n >= 2(m+l)).
    pub fn materialize(&self, n: usize) -> DMatrix<f64> {
        let k = self.corner_size();
        assert!(n >= 2 * k, "n={n} too small for corner blocks of size {k}");
        let mut a = self.toeplitz(n);
        a.view_mut((0, 0), (k, k)).copy_from(&self.corner_top_left);
        a.view_mut((n - k, n - k), (k, k)).copy_from(&self.corner_bottom_right);
        a
    }

    fn from_matrix(kind: MatrixKind, p: usize, a: &DMatrix<f64>, h_power: i32) -> Self {
        let n = a.nrows();
        let (m, l) = (p + 1, p - 1);
        let mid = n / 2;
        let stencil = (-(m as isize)..=(l as isize))
            .map(|i| a[(mid, (mid as isize + i) as usize)])
            .collect();
        let k = m + l;
        BandFamily {
            kind,
            p,
            m,
            l,
            stencil,
            corner_top_left: a.view((0, 0), (k, k)).into_owned(),
            corner_bottom_right: a.view((n - k, n - k), (k, k)).into_owned(),
            h_power,
        }
    }
}

/// Stencil a_{-(p+1)}..a_{p-1} from cardinal-spline values.
pub fn stencil_from_cardinal(p: usize, which: MatrixKind) -> Vec<f64> {
    let q = 2 * p + 1;
    let mut out = vec![0.0; 2 * p + 1];
    // centre of the stencil is diagonal -1, i.e. index p
    for j in 0..=p {
        let x = (p + 1 - j) as f64;
        let (lo, hi) = match which {
            MatrixKind::B => {
                let v = -eval_cardinal(q, x, 2);
                (v, v)
            }
            MatrixKind::C => {
                let v = eval_cardinal(q, x, 1);
                (-v, v)
            }
            MatrixKind::M => {
                let v = eval_cardinal(q, x, 0);
                (v, v)
            }
        };
        out[p - j] = lo;
        out[p + j] = hi;
    }
    if which == MatrixKind::C {
        out[p] = 0.0;
    }
    out
}

/// Assembled temporal matrices for degree p, N intervals and horizon T.
#[derive(Debug, Clone)]
pub struct TemporalMatrixSet {
    pub p: usize,
    pub intervals: usize,
    pub horizon: f64,
    pub h: f64,
    pub b: BandFamily,
    pub c: BandFamily,
    pub m: BandFamily,
    pub b_mat: DMatrix<f64>,
    pub c_mat: DMatrix<f64>,
    pub m_mat: DMatrix<f64>,
    /// Columns for the trial function φ_0 (nonzero initial data):
    /// (∂φ_0, ∂φ_r), -(φ_0, ∂φ_r) and (φ_0, φ_r).
    pub b_lift: Vec<f64>,
    pub c_lift: Vec<f64>,
    pub m_lift: Vec<f64>,
}

impl TemporalMatrixSet {
    pub fn n(&self) -> usize {
        self.intervals + self.p - 1
    }

    pub fn family(&self, kind: MatrixKind) -> &BandFamily {
        match kind {
            MatrixKind::B => &self.b,
            MatrixKind::C => &self.c,
            MatrixKind::M => &self.m,
        }
    }

    pub fn matrix(&self, kind: MatrixKind) -> &DMatrix<f64> {
        match kind {
            MatrixKind::B => &self.b_mat,
            MatrixKind::C => &self.c_mat,
            MatrixKind::M => &self.m_mat,
        }
    }

    /// h-free matrix (hB, C or M/h).
    pub fn scaled(&self, kind: MatrixKind) -> DMatrix<f64> {
        match kind {
            MatrixKind::B => &self.b_mat * self.h,
            MatrixKind::C => self.c_mat.clone(),
            MatrixKind::M => &self.m_mat / self.h,
        }
    }

    /// Trial (initial-trimmed) space.
    pub fn trial_space(&self) -> SplineSpace {
        SplineSpace::new(self.p, self.intervals, 0.0, self.horizon).unwrap().trimmed(true, false)
    }
}

struct RawTemporal {
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    m: DMatrix<f64>,
    b_lift: Vec<f64>,
    c_lift: Vec<f64>,
    m_lift: Vec<f64>,
}

fn assemble_raw(p: usize, intervals: usize, horizon: f64) -> RawTemporal {
    let space = SplineSpace::new(p, intervals, 0.0, horizon).unwrap();
    let n = intervals + p - 1;
    let rule = gauss_rule(p + 1);
    let mut b = DMatrix::zeros(n, n);
    let mut c = DMatrix::zeros(n, n);
    let mut m = DMatrix::zeros(n, n);
    let mut b_lift = vec![0.0; n];
    let mut c_lift = vec![0.0; n];
    let mut m_lift = vec![0.0; n];
    for &(span, a, bnd) in space.elements() {
        for (t, w) in rule.mapped(a, bnd) {
            let (first, d) = space.local_basis(span, t, 1);
            for i in 0..=p {
                let test = first + i;
                if test >= n {
                    continue;
                }
                for k in 0..=p {
                    let trial = first + k;
                    let (v_te, dv_te) = (d[0][i], d[1][i]);
                    let (v_tr, dv_tr) = (d[0][k], d[1][k]);
                    if trial == 0 {
                        b_lift[test] += w * dv_tr * dv_te;
                        c_lift[test] -= w * v_tr * dv_te;
                        m_lift[test] += w * v_tr * v_te;
                        continue;
                    }
                    let col = trial - 1;
                    b[(test, col)] += w * dv_tr * dv_te;
                    c[(test, col)] += w * dv_tr * v_te;
                    m[(test, col)] += w * v_tr * v_te;
                }
            }
        }
    }
    RawTemporal { b, c, m, b_lift, c_lift, m_lift }
}

/// Assemble B, C, M for degree p on [0, T] with N uniform intervals.
pub fn assemble_temporal(p: usize, intervals: usize, horizon: f64) -> Result<TemporalMatrixSet, TemporalError> {
    if p == 0 {
        return Err(TemporalError::ZeroDegree);
    }
    if intervals < 3 * p + 1 {
        return Err(TemporalError::TooFewIntervals { p, n: intervals });
    }
    assemble_any(p, intervals, horizon)
}

/// Same as [`assemble_temporal`] without the N >= 3p+1 restriction; the
/// band families are only meaningful when the restriction holds.
pub fn assemble_any(p: usize, intervals: usize, horizon: f64) -> Result<TemporalMatrixSet, TemporalError> {
    if p == 0 {
        return Err(TemporalError::ZeroDegree);
    }
    if !(horizon > 0.0) {
        return Err(TemporalError::BadHorizon(horizon));
    }
    let raw = assemble_raw(p, intervals, horizon);
    let h = horizon / intervals as f64;
    let hb = &raw.b * h;
    let mh = &raw.m / h;
    let enough = intervals + p - 1 >= 4 * p;
    let fam = |kind, a: &DMatrix<f64>, pw| {
        if enough {
            BandFamily::from_matrix(kind, p, a, pw)
        } else {
            BandFamily {
                kind,
                p,
                m: p + 1,
                l: p - 1,
                stencil: stencil_from_cardinal(p, kind),
                corner_top_left: DMatrix::zeros(0, 0),
                corner_bottom_right: DMatrix::zeros(0, 0),
                h_power: pw,
            }
        }
    };
    Ok(TemporalMatrixSet {
        p,
        intervals,
        horizon,
        h,
        b: fam(MatrixKind::B, &hb, -1),
        c: fam(MatrixKind::C, &raw.c, 0),
        m: fam(MatrixKind::M, &mh, 1),
        b_mat: raw.b,
        c_mat: raw.c,
        m_mat: raw.m,
        b_lift: raw.b_lift,
        c_lift: raw.c_lift,
        m_lift: raw.m_lift,
    })
}

/// One structural assertion and its outcome.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckResult {
    pub matrix: MatrixKind,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// A violated entry (0-based indices into the n x n matrix).
#[derive(Debug, Clone, serde::Serialize)]
pub struct Fault {
    pub matrix: MatrixKind,
    pub check: &'static str,
    pub row: usize,
    pub col: usize,
    pub expected: f64,
    pub found: f64,
}

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct StructureReport {
    pub checks: Vec<CheckResult>,
    pub faults: Vec<Fault>,
}

impl StructureReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Entries blamed by the value checks. Persymmetry faults only point
    /// at a pair, so they are used when nothing else localizes the fault.
    pub fn suspects(&self) -> BTreeSet<(MatrixKind, usize, usize)> {
        let direct: BTreeSet<_> = self
            .faults
            .iter()
            .filter(|f| f.check != "persymmetric")
            .map(|f| (f.matrix, f.row, f.col))
            .collect();
        if !direct.is_empty() {
            return direct;
        }
        self.faults.iter().map(|f| (f.matrix, f.row, f.col)).collect()
    }
}

/// Positions (0-based) allowed to deviate from the Toeplitz band in the
/// top-left corner: nonzero band entries of the first p rows and the
/// first p-1 columns, except (p, 2p-1) and (2p, p-1) in 1-based indexing.
pub fn corner_pattern(p: usize) -> BTreeSet<(usize, usize)> {
    let mut s = BTreeSet::new();
    let in_band = |r: usize, c: usize| {
        let d = c as isize - r as isize;
        d >= -(p as isize + 1) && d <= p as isize - 1
    };
    for r in 0..2 * p {
        for c in 0..2 * p {
            if in_band(r, c) && (r < p || c + 1 < p) {
                s.insert((r, c));
            }
        }
    }
    s.remove(&(p - 1, 2 * p - 2));
    if p >= 2 {
        s.remove(&(2 * p - 1, p - 2));
    }
    s
}

const STRUCT_TOL: f64 = 1e-13;

/// Check band, Toeplitz interior, corners, persymmetry and sign patterns.
/// Exact matrices on 4p+1 intervals, cached per degree.
fn corner_reference(p: usize) -> Arc<exact::ExactTemporal> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<exact::ExactTemporal>>>> = OnceLock::new();
    let mut map = CACHE.get_or_init(Default::default).lock().unwrap_or_else(|e| e.into_inner());
    map.entry(p).or_insert_with(|| Arc::new(exact::exact_temporal(p, 4 * p + 1))).clone()
}

pub fn verify_structure(set: &TemporalMatrixSet) -> StructureReport {
    let mut rep = StructureReport::default();
    let p = set.p;
    let n = set.n();
    let reference = corner_reference(p);
    for kind in [MatrixKind::B, MatrixKind::C, MatrixKind::M] {
        let a = set.scaled(kind);
        let stencil = stencil_from_cardinal(p, kind);
        let coeff = |i: isize| -> f64 {
            let k = i + p as isize + 1;
            if k < 0 || k as usize >= stencil.len() {
                0.0
            } else {
                stencil[k as usize]
            }
        };
        let push = |rep: &mut StructureReport, name: &'static str, faults: Vec<Fault>, detail: String| {
            rep.checks.push(CheckResult { matrix: kind, name, passed: faults.is_empty(), detail });
            rep.faults.extend(faults);
        };
        let fault = |check, r, c, expected: f64, found: f64| Fault { matrix: kind, check, row: r, col: c, expected, found };

        // band
        let mut f = Vec::new();
        for r in 0..n {
            for c in 0..n {
                let d = c as isize - r as isize;
                if (d < -(p as isize + 1) || d > p as isize - 1) && a[(r, c)] != 0.0 {
                    f.push(fault("band", r, c, 0.0, a[(r, c)]));
                }
            }
        }
        push(&mut rep, "band", f, format!("{} sub / {} super diagonals", p + 1, p - 1));

        // Toeplitz interior: 1-based rows 2p+1..=N-p
        let mut f = Vec::new();
        for r in (2 * p)..(set.intervals.saturating_sub(p)) {
            for c in 0..n {
                let e = coeff(c as isize - r as isize);
                if (a[(r, c)] - e).abs() > STRUCT_TOL {
                    f.push(fault("toeplitz_interior", r, c, e, a[(r, c)]));
                }
            }
        }
        push(&mut rep, "toeplitz_interior", f, "rows 2p+1..N-p match the cardinal stencil".into());

        // corners against the exact rational assembly
        let ex = match kind {
            MatrixKind::B => &reference.hb,
            MatrixKind::C => &reference.c,
            MatrixKind::M => &reference.m_over_h,
        };
        let ne = ex.len();
        let k = (2 * p).min(n);
        let mut f = Vec::new();
        for r in 0..k {
            for c in 0..k {
                let e = exact::to_f64(&ex[r][c]);
                if (a[(r, c)] - e).abs() > STRUCT_TOL {
                    f.push(fault("corners", r, c, e, a[(r, c)]));
                }
                let (rb, cb) = (n - k + r, n - k + c);
                let e = exact::to_f64(&ex[ne - k + r][ne - k + c]);
                if (a[(rb, cb)] - e).abs() > STRUCT_TOL {
                    f.push(fault("corners", rb, cb, e, a[(rb, cb)]));
                }
            }
        }
        push(&mut rep, "corners", f, format!("{k}x{k} corner blocks match exact values"));

        // persymmetry
        let mut f = Vec::new();
        for r in 0..n {
            for c in 0..n {
                let (r2, c2) = (n - 1 - c, n - 1 - r);
                if (r, c) < (r2, c2) && (a[(r, c)] - a[(r2, c2)]).abs() > STRUCT_TOL {
                    f.push(fault("persymmetric", r, c, a[(r2, c2)], a[(r, c)]));
                    f.push(fault("persymmetric", r2, c2, a[(r, c)], a[(r2, c2)]));
                }
            }
        }
        push(&mut rep, "persymmetric", f, "A[i,j] = A[n-1-j, n-1-i]".into());

        // stencil symmetry about the first lower co-diagonal
        let mut f = Vec::new();
        for j in 1..=p {
            let (lo, hi) = (coeff(-1 - j as isize), coeff(-1 + j as isize));
            let ok = match kind {
                MatrixKind::C => (lo + hi).abs() <= STRUCT_TOL,
                _ => (lo - hi).abs() <= STRUCT_TOL,
            };
            if !ok {
                f.push(fault("stencil_parity", 0, j, lo, hi));
            }
        }
        let mid = n / 2;
        for i in -(p as isize + 1)..=(p as isize - 1) {
            let c = (mid as isize + i) as usize;
            if (a[(mid, c)] - coeff(i)).abs() > STRUCT_TOL {
                f.push(fault("stencil_parity", mid, c, coeff(i), a[(mid, c)]));
            }
        }
        let parity = if kind == MatrixKind::C { "skew" } else { "symmetric" };
        push(&mut rep, "stencil_parity", f, format!("{parity} about the first lower co-diagonal"));

        // corner perturbation confined to the predicted pattern
        if kind != MatrixKind::M {
            let pattern = corner_pattern(p);
            let mut f = Vec::new();
            let mut count = 0;
            for r in 0..k {
                for c in 0..k {
                    let dev = a[(r, c)] - coeff(c as isize - r as isize);
                    if dev.abs() > STRUCT_TOL {
                        count += 1;
                        if !pattern.contains(&(r, c)) {
                            f.push(fault("corner_pattern", r, c, coeff(c as isize - r as isize), a[(r, c)]));
                        }
                    }
                }
            }
            let exceptions = if p >= 2 {
                let e1 = (p - 1, 2 * p - 2);
                let e2 = (2 * p - 1, p - 2);
                [e1, e2]
                    .iter()
                    .all(|&(r, c)| (a[(r, c)] - coeff(c as isize - r as isize)).abs() <= STRUCT_TOL)
            } else {
                true
            };
            if kind == MatrixKind::B && p >= 2 && count != pattern.len() {
                f.push(fault("corner_pattern", 0, 0, pattern.len() as f64, count as f64));
            }
            if !exceptions {
                f.push(fault("corner_pattern", p - 1, 2 * p - 2, 0.0, 1.0));
            }
            push(
                &mut rep,
                "corner_pattern",
                f,
                format!("{count} perturbed entries, pattern size {}", pattern.len()),
            );

            // outer co-diagonal sign: B < 0, C > 0 on diagonal p-1
            let mut f = Vec::new();
            for r in 0..n + 1 - p {
                let c = r + p - 1;
                let v = a[(r, c)];
                let ok = if kind == MatrixKind::B { v < 0.0 } else { v > 0.0 };
                if !ok {
                    f.push(fault("outer_sign", r, c, if kind == MatrixKind::B { -1.0 } else { 1.0 }, v));
                }
            }
            push(&mut rep, "outer_sign", f, "sign on the (p-1)-th superdiagonal".into());
        }
    }
    rep
}

/// Exact rational h-free matrix of the family `which`, size n x n.
pub fn exact_matrix(which: MatrixKind, p: usize, n: usize) -> Result<Vec<Vec<Rational>>, TemporalError> {
    if p == 0 {
        return Err(TemporalError::ZeroDegree);
    }
    if n < p + 1 {
        return Err(exact::ExactError::Invalid(format!("n={n} too small for p={p}")).into());
    }
    let e = exact::exact_temporal(p, n + 1 - p);
    Ok(match which {
        MatrixKind::B => e.hb,
        MatrixKind::C => e.c,
        MatrixKind::M => e.m_over_h,
    })
}

/// Exact nonsingularity of the n x n member of B or C (or M).
pub fn rational_determinant_nonzero(which: MatrixKind, p: usize, n: usize) -> Result<bool, TemporalError> {
    rational_determinant_nonzero_capped(which, p, n, exact::DEFAULT_CAP)
}

pub fn rational_determinant_nonzero_capped(
    which: MatrixKind,
    p: usize,
    n: usize,
    cap: usize,
) -> Result<bool, TemporalError> {
    if n > cap {
        return Err(exact::ExactError::TooLarge { n, cap }.into());
    }
    Ok(exact::bareiss_nonsingular(&exact_matrix(which, p, n)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational;
    use approx::assert_abs_diff_eq;

    #[test]
    fn displayed_p2_interiors() {
        let s = assemble_temporal(2, 10, 3.0).unwrap();
        let hb: Vec<f64> = s.b.stencil.iter().map(|x| x * 6.0).collect();
        let c: Vec<f64> = s.c.stencil.iter().map(|x| x * 24.0).collect();
        for (x, y) in hb.iter().zip([-1.0, -2.0, 6.0, -2.0, -1.0]) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
        }
        for (x, y) in c.iter().zip([-1.0, -10.0, 0.0, 10.0, 1.0]) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn p1_first_entries() {
        let s = assemble_temporal(1, 8, 2.0).unwrap();
        assert_abs_diff_eq!(s.c_mat[(0, 0)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.h * s.b_mat[(0, 0)], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn cardinal_stencils() {
        let b = stencil_from_cardinal(2, MatrixKind::B);
        for (x, y) in b.iter().zip([-1.0, -2.0, 6.0, -2.0, -1.0]) {
            assert_abs_diff_eq!(*x, y / 6.0, epsilon = 1e-15);
        }
        for p in 1..6 {
            assert_eq!(stencil_from_cardinal(p, MatrixKind::C)[p], 0.0);
        }
        let m = stencil_from_cardinal(1, MatrixKind::M);
        for (x, y) in m.iter().zip([1.0, 4.0, 1.0]) {
            assert_abs_diff_eq!(*x, y / 6.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn rejects_short_meshes() {
        assert!(matches!(assemble_temporal(2, 6, 1.0), Err(TemporalError::TooFewIntervals { .. })));
        assert!(assemble_temporal(2, 7, 1.0).is_ok());
    }

    #[test]
    fn structure_p2_and_p1() {
        let rep = verify_structure(&assemble_temporal(2, 16, 1.0).unwrap());
        assert!(rep.passed(), "{:?}", rep.faults);
        let s1 = assemble_temporal(1, 8, 1.0).unwrap();
        assert!(verify_structure(&s1).passed());
        for r in 0..s1.n() {
            for c in r + 1..s1.n() {
                assert_eq!(s1.b_mat[(r, c)], 0.0);
                assert_eq!(s1.c_mat[(r, c)], 0.0);
            }
        }
    }

    #[test]
    fn fault_injection_is_localized() {
        let mut s = assemble_temporal(2, 16, 1.0).unwrap();
        s.c_mat[(9, 7)] += 1e-3;
        let rep = verify_structure(&s);
        assert!(!rep.passed());
        let sus = rep.suspects();
        assert_eq!(sus.len(), 1);
        assert!(sus.contains(&(MatrixKind::C, 9, 7)));
        let mut s = assemble_temporal(3, 16, 1.0).unwrap();
        s.b_mat[(1, 0)] *= 1.5;
        let sus = verify_structure(&s).suspects();
        assert_eq!(sus.into_iter().collect::<Vec<_>>(), vec![(MatrixKind::B, 1, 0)]);
    }

    #[test]
    fn corner_pattern_sizes() {
        for p in 1..6 {
            let want = if p == 1 { 0 } else { 2 * p * p - 3 };
            let got = corner_pattern(p).len();
            if p > 1 {
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn exact_p2_first_rows() {
        let e = exact_matrix(MatrixKind::B, 2, 9).unwrap();
        assert_eq!(e[0][0], rational(-1, 1));
        assert_eq!(e[0][1], rational(-1, 3));
        assert_eq!(e[1][0], rational(4, 3));
    }

    #[test]
    fn determinants() {
        assert!(rational_determinant_nonzero(MatrixKind::C, 2, 16).unwrap());
        assert!(rational_determinant_nonzero(MatrixKind::B, 1, 20).unwrap());
        assert!(rational_determinant_nonzero(MatrixKind::C, 3, 32).unwrap());
        assert!(matches!(
            rational_determinant_nonzero(MatrixKind::C, 2, 200),
            Err(TemporalError::Exact(exact::ExactError::TooLarge { n: 200, cap: 128 }))
        ));
    }

    #[test]
    fn lifting_columns() {
        // (∂φ_0, ∂φ_0) = 1/h for hats
        let s = assemble_temporal(1, 8, 1.0).unwrap();
        assert_abs_diff_eq!(s.b_lift[0] * s.h, 1.0, epsilon = 1e-14);
        // -(φ_0, ∂φ_0) = 1/2 for hats
        assert_abs_diff_eq!(s.c_lift[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(s.c_lift[1], -0.5, epsilon = 1e-14);
    }
}
