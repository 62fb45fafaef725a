//! Reference wave problems with closed-form solutions, and the
//! measurements used on the heterogeneous 2D test case.

use crate::spacetime::{ExactSolution, PointValue, SpaceTimeProblem, SpaceTimeSolution, SpaceTimeSystem};
use crate::spatial::{Axis, Bc, WaveSpeed};
use crate::spline::gauss_rule;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

/// Smooth bump exp(1 + 1/(s²-1)) on (-1, 1) and its first two derivatives.
pub fn bump(s: f64) -> [f64; 3] {
    if s.abs() >= 1.0 {
        return [0.0; 3];
    }
    let d = s * s - 1.0;
    let psi = (1.0 + 1.0 / d).exp();
    let g1 = -2.0 * s / (d * d);
    let g2 = (6.0 * s * s + 2.0) / (d * d * d);
    [psi, psi * g1, psi * (g1 * g1 + g2)]
}

/// U = sin(πx) sin²(5πt/4) on (0,1) x (0,T), c = 1.
pub struct Smooth1d;

impl Smooth1d {
    fn s(t: f64) -> [f64; 3] {
        let w = 2.5 * PI;
        [0.5 * (1.0 - (w * t).cos()), 0.5 * w * (w * t).sin(), 0.5 * w * w * (w * t).cos()]
    }

    pub fn problem(p: usize, nx: usize, nt: usize, horizon: f64) -> SpaceTimeProblem {
        let ax = Axis::new(p, nx, 0.0, 1.0, Bc::Dirichlet, Bc::Dirichlet);
        let mut pr = SpaceTimeProblem::new(vec![ax], WaveSpeed::constant(1.0), p, nt, horizon);
        pr.source = Some(Arc::new(|x: &[f64], t: f64| {
            let s = Smooth1d::s(t);
            (PI * x[0]).sin() * (s[2] + PI * PI * s[0])
        }));
        pr
    }
}

impl ExactSolution for Smooth1d {
    fn eval(&self, x: &[f64], t: f64) -> PointValue {
        let (sx, cx) = ((PI * x[0]).sin(), (PI * x[0]).cos());
        let s = Smooth1d::s(t);
        PointValue {
            u: sx * s[0],
            u_t: sx * s[1],
            u_grad: [PI * cx * s[0], 0.0],
            v: sx * s[1],
            v_t: sx * s[2],
            v_grad: [PI * cx * s[1], 0.0],
        }
    }
}

/// U = a(t) sin(kπx) with a(t) = α cos(kπt) + β sin(kπt), c = 1, no source.
pub struct StandingWave {
    pub k: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl StandingWave {
    /// sin(kπx) sin(kπt), the oscillatory family on (0,1) x (0,2).
    pub fn oscillatory(k: u32) -> Self {
        StandingWave { k: k as f64, alpha: 0.0, beta: 1.0 }
    }

    /// (cos πt + sin πt) sin πx, whose energy is π²/2.
    pub fn energy() -> Self {
        StandingWave { k: 1.0, alpha: 1.0, beta: 1.0 }
    }

    pub fn energy_value(&self) -> f64 {
        let w = self.k * PI;
        0.25 * w * w * (self.alpha * self.alpha + self.beta * self.beta)
    }

    pub fn problem(&self, p: usize, nx: usize, nt: usize, horizon: f64) -> SpaceTimeProblem {
        let ax = Axis::new(p, nx, 0.0, 1.0, Bc::Dirichlet, Bc::Dirichlet);
        let mut pr = SpaceTimeProblem::new(vec![ax], WaveSpeed::constant(1.0), p, nt, horizon);
        let (k, a, b) = (self.k, self.alpha, self.beta);
        if a != 0.0 {
            pr.u0 = Some(Arc::new(move |x: &[f64]| a * (k * PI * x[0]).sin()));
        }
        if b != 0.0 {
            pr.v0 = Some(Arc::new(move |x: &[f64]| b * k * PI * (k * PI * x[0]).sin()));
        }
        pr
    }
}

impl ExactSolution for StandingWave {
    fn eval(&self, x: &[f64], t: f64) -> PointValue {
        let w = self.k * PI;
        let (sx, cx) = ((w * x[0]).sin(), (w * x[0]).cos());
        let (st, ct) = ((w * t).sin(), (w * t).cos());
        let a = self.alpha * ct + self.beta * st;
        let da = w * (-self.alpha * st + self.beta * ct);
        let dda = -w * w * a;
        PointValue {
            u: a * sx,
            u_t: da * sx,
            u_grad: [w * a * cx, 0.0],
            v: da * sx,
            v_t: dda * sx,
            v_grad: [w * da * cx, 0.0],
        }
    }
}

/// One traveling piece amp * w(a x + b t + e) confined to a layer.
#[derive(Debug, Clone, Copy)]
struct Piece {
    layer: usize,
    amp: f64,
    a: f64,
    b: f64,
    e: f64,
}

/// Exact solution of a 1D layered medium by tracing reflections and
/// transmissions of a right-going pulse w(x - c₀t) started in layer 0.
/// Valid as long as the pulse starts inside layer 0.
pub struct LayeredPulse {
    /// Layer boundaries x_0 < x_1 < ... < x_L and speeds per layer.
    pub nodes: Vec<f64>,
    pub speeds: Vec<f64>,
    /// Reflection coefficient at the left and right ends (+1 Neumann, -1 Dirichlet).
    pub end_reflection: [f64; 2],
    /// Profile value and two derivatives, supported in `support`.
    pub profile: fn(f64) -> [f64; 3],
    pub support: (f64, f64),
    pieces: Vec<Piece>,
}

impl LayeredPulse {
    pub fn new(
        nodes: Vec<f64>,
        speeds: Vec<f64>,
        end_reflection: [f64; 2],
        profile: fn(f64) -> [f64; 3],
        support: (f64, f64),
        horizon: f64,
    ) -> Self {
        let mut lp = LayeredPulse { nodes, speeds, end_reflection, profile, support, pieces: Vec::new() };
        let c0 = lp.speeds[0];
        let mut todo = vec![Piece { layer: 0, amp: 1.0, a: 1.0, b: -c0, e: 0.0 }];
        while let Some(pc) = todo.pop() {
            lp.pieces.push(pc);
            if pc.amp.abs() < 1e-17 || lp.pieces.len() > 10_000 {
                continue;
            }
            let right = -pc.b / pc.a > 0.0;
            let k = pc.layer;
            let xe = if right { lp.nodes[k + 1] } else { lp.nodes[k] };
            // earliest time any part of the support reaches xe
            let ts = [lp.support.0, lp.support.1].map(|xi| (xi - pc.a * xe - pc.e) / pc.b);
            let t_hit = ts[0].min(ts[1]);
            if t_hit >= horizon {
                continue;
            }
            let reflected = |amp: f64| Piece { layer: k, amp, a: -pc.a, b: pc.b, e: pc.e + 2.0 * pc.a * xe };
            let neighbour = if right { (k + 1 < lp.speeds.len()).then_some(k + 1) } else { k.checked_sub(1) };
            match neighbour {
                None => {
                    let r = lp.end_reflection[right as usize];
                    todo.push(reflected(pc.amp * r));
                }
                Some(j) => {
                    let (c1, c2) = (lp.speeds[k], lp.speeds[j]);
                    let r = (c1 - c2) / (c1 + c2);
                    todo.push(reflected(pc.amp * r));
                    let a2 = pc.a * c1 / c2;
                    todo.push(Piece { layer: j, amp: pc.amp * (1.0 + r), a: a2, b: pc.b, e: pc.e + (pc.a - a2) * xe });
                }
            }
        }
        lp
    }

    fn layer_of(&self, x: f64) -> usize {
        let l = self.speeds.len();
        (1..l).find(|&k| x < self.nodes[k]).map_or(l - 1, |k| k - 1)
    }

    pub fn pieces(&self) -> usize {
        self.pieces.len()
    }
}

impl ExactSolution for LayeredPulse {
    fn eval(&self, x: &[f64], t: f64) -> PointValue {
        let layer = self.layer_of(x[0]);
        let mut pv = PointValue::default();
        for pc in self.pieces.iter().filter(|p| p.layer == layer) {
            let xi = pc.a * x[0] + pc.b * t + pc.e;
            if xi <= self.support.0 || xi >= self.support.1 {
                continue;
            }
            let [w, w1, w2] = (self.profile)(xi);
            pv.u += pc.amp * w;
            pv.u_t += pc.amp * pc.b * w1;
            pv.u_grad[0] += pc.amp * pc.a * w1;
            pv.v_t += pc.amp * pc.b * pc.b * w2;
            pv.v_grad[0] += pc.amp * pc.a * pc.b * w2;
        }
        pv.v = pv.u_t;
        pv
    }
}

fn scaled_bump5(xi: f64) -> [f64; 3] {
    let [a, b, c] = bump(5.0 * xi - 1.0);
    [a, 5.0 * b, 25.0 * c]
}

/// Pulse Ψ(5x-1) moving right through c = 1 | 2 (interface at ½), Neumann ends.
pub fn interface_pulse(horizon: f64) -> LayeredPulse {
    LayeredPulse::new(vec![0.0, 0.5, 1.0], vec![1.0, 2.0], [1.0, 1.0], scaled_bump5, (0.0, 0.4), horizon)
}

/// Space–time problem matching [`interface_pulse`] with C⁰ continuity at x = ½.
pub fn interface_problem(p: usize, n: usize, horizon: f64) -> SpaceTimeProblem {
    let mut ax = Axis::new(p, n, 0.0, 1.0, Bc::Neumann, Bc::Neumann);
    ax.c0_nodes = vec![n / 2];
    let mut pr = SpaceTimeProblem::new(vec![ax], WaveSpeed::split(1, 0, 0.5, 1.0, 2.0), p, n, horizon);
    pr.u0 = Some(Arc::new(|x: &[f64]| scaled_bump5(x[0])[0]));
    pr.v0 = Some(Arc::new(|x: &[f64]| -scaled_bump5(x[0])[1]));
    pr
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum PeriodicDatum {
    Tent,
    Bump,
}

impl PeriodicDatum {
    /// Initial profile U₀ on [0, 1); the exact solution is U₀(x - t) periodically.
    pub fn profile(self, x: f64) -> [f64; 2] {
        let x = x.rem_euclid(1.0);
        if x > 0.5 {
            return [0.0, 0.0];
        }
        match self {
            PeriodicDatum::Tent => {
                let s = 4.0 * x - 1.0;
                [1.0 - s.abs(), if s < 0.0 { 4.0 } else { -4.0 }]
            }
            PeriodicDatum::Bump => {
                let [a, b, _] = bump(4.0 * x - 1.0);
                [a, 4.0 * b]
            }
        }
    }

    pub fn problem(self, p: usize, nx: usize, nt: usize, horizon: f64) -> SpaceTimeProblem {
        let ax = Axis::new(p, nx, 0.0, 1.0, Bc::Periodic, Bc::Periodic);
        let mut pr = SpaceTimeProblem::new(vec![ax], WaveSpeed::constant(1.0), p, nt, horizon);
        pr.u0 = Some(Arc::new(move |x: &[f64]| self.profile(x[0])[0]));
        pr.v0 = Some(Arc::new(move |x: &[f64]| -self.profile(x[0])[1]));
        pr
    }

    /// Fourier coefficient of U₀ (kinks of the tent sit on quarter points).
    pub fn coefficient(self, n: i64) -> Complex64 {
        let ax = Axis::new(1, 512, 0.0, 1.0, Bc::Periodic, Bc::Periodic);
        crate::spacetime::fourier_coefficient(&ax, |x| self.profile(x)[0], n, 12)
    }

    /// Modes 1..=max_mode ordered by decreasing |c_n|.
    pub fn largest_modes(self, count: usize, max_mode: i64) -> Vec<i64> {
        let mut m: Vec<(f64, i64)> = (1..=max_mode).map(|n| (self.coefficient(n).norm(), n)).collect();
        m.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut out: Vec<i64> = m.into_iter().take(count).map(|e| e.1).collect();
        out.sort_unstable();
        out
    }
}

impl ExactSolution for PeriodicDatum {
    fn eval(&self, x: &[f64], t: f64) -> PointValue {
        let [u, du] = self.profile(x[0] - t);
        PointValue { u, u_t: -du, u_grad: [du, 0.0], v: -du, v_t: 0.0, v_grad: [0.0, 0.0] }
    }
}

/// Heterogeneous 2D case: (0,2)², c = 1 for x₁ ≤ 1.2 and 3 beyond,
/// Gaussian initial displacement at (1,1), zero velocity, Dirichlet walls.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TwoLayer2d {
    pub p: usize,
    /// Intervals per direction; 1.2 must be a mesh node (multiples of 5).
    pub n: usize,
    pub nt: usize,
    pub horizon: f64,
    pub delta: f64,
}

impl TwoLayer2d {
    pub const INTERFACE: f64 = 1.2;
    pub const PROBE: [f64; 2] = [1.0, 0.25];
    pub const PROBE_HALF_WIDTH: f64 = 1.0 / 128.0;

    pub fn problem(&self) -> SpaceTimeProblem {
        let axes = vec![
            Axis::new(self.p, self.n, 0.0, 2.0, Bc::Dirichlet, Bc::Dirichlet),
            Axis::new(self.p, self.n, 0.0, 2.0, Bc::Dirichlet, Bc::Dirichlet),
        ];
        let speed = WaveSpeed::split(2, 0, Self::INTERFACE, 1.0, 3.0);
        let mut pr = SpaceTimeProblem::new(axes, speed, self.p, self.nt, self.horizon);
        let d2 = self.delta * self.delta;
        pr.u0 = Some(Arc::new(move |x: &[f64]| (-((x[0] - 1.0).powi(2) + (x[1] - 1.0).powi(2)) / d2).exp()));
        pr
    }

    /// Same data with c ≡ 1, the reference for isolating reflections.
    pub fn homogeneous_problem(&self) -> SpaceTimeProblem {
        let mut pr = self.problem();
        pr.speed = WaveSpeed::constant(1.0);
        pr
    }
}

/// Transmitted and reflected front distances from the interface along the
/// line x₂ = 1 at time t. The reflected wave is isolated as the difference
/// to the same problem in a homogeneous medium (c ≡ 1); each front is the
/// outermost point where its field exceeds `frac` times its own maximum.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FrontMeasure {
    pub transmitted: f64,
    pub reflected: f64,
}

impl FrontMeasure {
    pub fn ratio(&self) -> f64 {
        self.transmitted / self.reflected
    }
}

pub fn front_positions(
    layered: (&SpaceTimeSystem, &SpaceTimeSolution),
    homogeneous: (&SpaceTimeSystem, &SpaceTimeSolution),
    t: f64,
    frac: f64,
    samples: usize,
) -> FrontMeasure {
    let [u, ..] = layered.1.slice(t);
    let [u0, ..] = homogeneous.1.slice(t);
    let x_if = TwoLayer2d::INTERFACE;
    let xs: Vec<f64> = (0..=samples).map(|i| 2.0 * i as f64 / samples as f64).collect();
    let line = |sys: &SpaceTimeSystem, c: &[f64], x: f64| sys.spatial.eval(c, &[x, 1.0]).0;
    let refl: Vec<(f64, f64)> = xs
        .iter()
        .filter(|&&x| x <= x_if)
        .map(|&x| (x, (line(layered.0, &u, x) - line(homogeneous.0, &u0, x)).abs()))
        .collect();
    let trans: Vec<(f64, f64)> = xs.iter().filter(|&&x| x >= x_if).map(|&x| (x, line(layered.0, &u, x).abs())).collect();
    let outer = |f: &[(f64, f64)], pick: fn(f64, f64) -> f64| {
        let thr = frac * f.iter().fold(0.0_f64, |a, e| a.max(e.1));
        f.iter().filter(|e| e.1 > thr).map(|e| e.0).fold(x_if, pick)
    };
    FrontMeasure { transmitted: outer(&trans, f64::max) - x_if, reflected: x_if - outer(&refl, f64::min) }
}

/// U_C(t) = ‖U_h(·, t)‖_{L¹} over the probe square.
pub fn probe_l1(sys: &SpaceTimeSystem, sol: &SpaceTimeSolution, t: f64) -> f64 {
    let [u, ..] = sol.slice(t);
    let rule = gauss_rule(6);
    let e = TwoLayer2d::PROBE_HALF_WIDTH;
    let [cx, cy] = TwoLayer2d::PROBE;
    let mut s = 0.0;
    for (y, wy) in rule.mapped(cy - e, cy + e) {
        for (x, wx) in rule.mapped(cx - e, cx + e) {
            s += wx * wy * sys.spatial.eval(&u, &[x, y]).0.abs();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_derivatives_match_differences() {
        let h = 1e-5;
        for &s in &[-0.7, -0.2, 0.0, 0.3, 0.8] {
            let [_, d1, d2] = bump(s);
            let fd1 = (bump(s + h)[0] - bump(s - h)[0]) / (2.0 * h);
            let fd2 = (bump(s + h)[1] - bump(s - h)[1]) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-7 * (1.0 + d1.abs()));
            assert!((d2 - fd2).abs() < 1e-6 * (1.0 + d2.abs()));
        }
        assert_eq!(bump(1.0), [0.0; 3]);
    }

    #[test]
    fn layered_pulse_conservation_and_continuity() {
        let lp = interface_pulse(1.0);
        assert!(lp.pieces() > 3);
        // continuity of u and c² u_x across the interface
        for &t in &[0.15, 0.3, 0.7] {
            let l = lp.eval(&[0.5 - 1e-9], t);
            let r = lp.eval(&[0.5 + 1e-9], t);
            assert!((l.u - r.u).abs() < 1e-6, "t={t}: {} vs {}", l.u, r.u);
            assert!((l.u_grad[0] - 4.0 * r.u_grad[0]).abs() < 1e-5, "t={t}");
        }
        // pure translation before the interface is reached
        let v = lp.eval(&[0.25], 0.05);
        assert!((v.u - bump(5.0 * 0.2 - 1.0)[0]).abs() < 1e-14);
        // Neumann ends
        for &t in &[0.4, 0.65, 0.9] {
            assert!(lp.eval(&[1.0 - 1e-12], t).u_grad[0].abs() < 1e-6);
        }
    }

    #[test]
    fn periodic_data_agree_with_exact() {
        for d in [PeriodicDatum::Tent, PeriodicDatum::Bump] {
            let e = d.eval(&[0.3], 0.0);
            assert_eq!(e.u, d.profile(0.3)[0]);
            assert_eq!(e.v, -d.profile(0.3)[1]);
        }
        assert_eq!(PeriodicDatum::Tent.largest_modes(4, 12), vec![1, 2, 3, 6]);
        assert_eq!(PeriodicDatum::Bump.largest_modes(4, 12), vec![1, 2, 4, 5]);
        let c1 = PeriodicDatum::Tent.coefficient(1).norm();
        assert!((c1 - 2.0 / (PI * PI)).abs() < 1e-12);
    }

    #[test]
    fn energy_constant_of_reference() {
        let s = StandingWave::energy();
        assert!((s.energy_value() - PI * PI / 2.0).abs() < 1e-14);
    }
}
