//! Quick invariant suites, one per module, for `chronospline selfcheck`.

use crate::conditioning::{condition_sweep, perturbation_width, root_census, AssociatedPolynomial, Family};
use crate::exact::to_f64;
use crate::experiments::{run_experiment, targets, ExperimentSpec, RunStatus};
use crate::ode::{solve_ode, OdeProblem, OdeRoute};
use crate::spacetime::{SpaceTimeProblem, SpaceTimeSystem};
use crate::spatial::{Axis, Bc, WaveSpeed};
use crate::spline::{eval_cardinal, gauss_rule, SplineSpace};
use crate::symbol::{
    cfl_constants, symbol_vs_stencil_conjugate_c, theta_grid, w_symbol, zeta_ratio_check, SymbolKind, SymbolTable,
};
use crate::temporal::{assemble_temporal, exact_matrix, verify_structure, MatrixKind, TemporalMatrixSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

pub const MODULES: [&str; 6] =
    ["spline_core", "temporal_matrices", "symbol_cfl", "conditioning_lab", "wave_solver", "cli_experiments"];

/// Deliberate faults for testing the suites themselves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Injection {
    /// Negate the first subdiagonal of the interior Toeplitz band of B.
    StencilSignFlip,
}

#[derive(Debug, Clone, Default)]
pub struct SelfcheckOptions {
    pub only: Option<String>,
    pub inject: Option<Injection>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub module: String,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfcheckReport {
    pub seed: u64,
    pub injection: Option<Injection>,
    pub suites: Vec<SuiteResult>,
    pub first_failure: Option<String>,
}

impl SelfcheckReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }

    pub fn suite(&self, module: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.module == module)
    }
}

#[derive(Default)]
struct Suite(Vec<CheckOutcome>);

impl Suite {
    fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.0.push(CheckOutcome { name: name.into(), passed, detail: detail.into() });
    }
}

/// Full module name for `name`, which may also be a unique prefix such as
/// "symbols" or "temporal" (a trailing 's' is ignored).
pub fn resolve_module(name: &str) -> Option<&'static str> {
    if let Some(m) = MODULES.iter().find(|m| **m == name) {
        return Some(m);
    }
    let stem = name.strip_suffix('s').unwrap_or(name);
    let hits: Vec<_> = MODULES.iter().filter(|m| !stem.is_empty() && (m.starts_with(name) || m.starts_with(stem))).collect();
    match hits[..] {
        [m] => Some(m),
        _ => None,
    }
}

pub fn selfcheck(opts: &SelfcheckOptions) -> Result<SelfcheckReport, String> {
    let only = match &opts.only {
        Some(m) => {
            Some(resolve_module(m).ok_or_else(|| format!("unknown module '{m}' (known: {})", MODULES.join(", ")))?)
        }
        None => None,
    };
    let mut suites = Vec::new();
    for m in MODULES {
        if only.is_some_and(|o| o != m) {
            continue;
        }
        let mut s = Suite::default();
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        match m {
            "spline_core" => spline_core(&mut s, &mut rng),
            "temporal_matrices" => temporal_matrices(&mut s, opts.inject),
            "symbol_cfl" => symbol_cfl(&mut s, &mut rng),
            "conditioning_lab" => conditioning_lab(&mut s),
            "wave_solver" => wave_solver(&mut s, &mut rng),
            _ => cli_experiments(&mut s),
        }
        suites.push(SuiteResult { module: m.into(), passed: s.0.iter().all(|c| c.passed), checks: s.0 });
    }
    let first_failure = suites.iter().find(|s| !s.passed).map(|s| s.module.clone());
    Ok(SelfcheckReport { seed: opts.seed, injection: opts.inject, suites, first_failure })
}

fn spline_core(s: &mut Suite, rng: &mut ChaCha8Rng) {
    let mut worst = 0.0_f64;
    for p in 0..=4 {
        let sp = SplineSpace::new(p, 7, 0.0, 1.0).unwrap();
        for _ in 0..50 {
            let t: f64 = rng.gen_range(0.0..=1.0);
            let sum: f64 = sp.eval_all(t, 0).unwrap().iter().map(|e| e.1).sum();
            worst = worst.max((sum - 1.0).abs());
        }
    }
    s.check("partition_of_unity", worst < 1e-13, format!("max deviation {worst:.2e}"));
    let v = [eval_cardinal(1, 1.0, 0), eval_cardinal(2, 1.5, 0), eval_cardinal(3, 2.0, 0), eval_cardinal(3, 2.0, 1)];
    let want = [1.0, 0.75, 2.0 / 3.0, 0.0];
    let dev = v.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    s.check("cardinal_values", dev < 1e-14, format!("{v:?}"));
    let mut sym = 0.0_f64;
    for j in 1..=5 {
        for _ in 0..20 {
            let t: f64 = rng.gen_range(0.0..(j + 1) as f64);
            sym = sym.max((eval_cardinal(j, t, 0) - eval_cardinal(j, (j + 1) as f64 - t, 0)).abs());
        }
    }
    s.check("cardinal_symmetry", sym < 1e-13, format!("max asymmetry {sym:.2e}"));
    let mut q = 0.0_f64;
    for n in 1..=8 {
        let k = 2 * n - 1;
        let got = gauss_rule(n).integrate(|t| t.powi(k as i32), 0.0, 1.0);
        q = q.max((got - 1.0 / (k + 1) as f64).abs());
    }
    s.check("gauss_exactness", q < 1e-14, format!("max error {q:.2e}"));
}

fn inject(set: &mut TemporalMatrixSet) {
    let n = set.n();
    let p = set.p;
    for r in 2 * p..n.saturating_sub(2 * p) {
        set.b_mat[(r, r - 1)] = -set.b_mat[(r, r - 1)];
    }
}

fn temporal_matrices(s: &mut Suite, fault: Option<Injection>) {
    for p in 1..=4 {
        for intervals in [3 * p + 2, 24] {
            let mut set = assemble_temporal(p, intervals, 1.5).unwrap();
            if fault == Some(Injection::StencilSignFlip) {
                inject(&mut set);
            }
            let rep = verify_structure(&set);
            let bad: Vec<String> =
                rep.checks.iter().filter(|c| !c.passed).map(|c| format!("{}:{}", c.matrix, c.name)).collect();
            s.check(&format!("structure[p={p},N={intervals}]"), rep.passed(), bad.join(" "));
            let mut dev = 0.0_f64;
            for kind in [MatrixKind::B, MatrixKind::C, MatrixKind::M] {
                let ex = exact_matrix(kind, p, set.n()).unwrap();
                let a = set.scaled(kind);
                for (i, row) in ex.iter().enumerate() {
                    for (j, x) in row.iter().enumerate() {
                        dev = dev.max((a[(i, j)] - to_f64(x)).abs());
                    }
                }
            }
            s.check(&format!("exact_agreement[p={p},N={intervals}]"), dev < 1e-12, format!("max deviation {dev:.2e}"));
        }
    }
}

fn symbol_cfl(s: &mut Suite, rng: &mut ChaCha8Rng) {
    let grid = theta_grid(256);
    for p in 1..=4 {
        let d = [MatrixKind::B, MatrixKind::C, MatrixKind::M].map(|k| symbol_vs_stencil_conjugate_c(p, k, &grid));
        s.check(&format!("symbol_identity[p={p}]"), d.iter().all(|&x| x < 1e-12), format!("B {:.2e} C {:.2e} M {:.2e}", d[0], d[1], d[2]));
        let (series, bound) = SymbolTable::series_for_tolerance(p, 1e-10, 1 << 20);
        let closed = SymbolTable::new(p);
        let mut dev = 0.0_f64;
        for _ in 0..10 {
            let th: f64 = rng.gen_range(0.05..PI);
            for k in [SymbolKind::B, SymbolKind::C, SymbolKind::M] {
                dev = dev.max((series.eval(k, th).unwrap() - closed.eval(k, th).unwrap()).abs());
            }
        }
        s.check(&format!("series_vs_closed[p={p}]"), dev <= 2.0 * bound + 1e-12, format!("{dev:.2e} (tail bound {bound:.2e})"));
        let z = zeta_ratio_check(p);
        s.check(&format!("zeta_ratio[p={p}]"), z.agrees(1e-10), format!("{} vs {}", z.ratio, z.zeta_form));
    }
    for p in 1..=5 {
        symbol_properties(s, p);
    }
    match cfl_constants(1) {
        Ok(k) => {
            let dev = [(k.theta_p, 2.0 * PI / 3.0), (k.rho_p, 3.0), (k.e_p, 9.0), (k.theta_max, PI / 2.0), (k.rho_tilde, 9.0)]
                .iter()
                .map(|(a, b)| (a - b).abs() / b)
                .fold(0.0, f64::max);
            s.check("cfl_p1_closed_form", dev < 1e-10, format!("max relative deviation {dev:.2e}"));
        }
        Err(e) => s.check("cfl_p1_closed_form", false, e.to_string()),
    }
}

/// Fourth-order central difference.
fn central_diff<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (8.0 * (f(x + h) - f(x - h)) - (f(x + 2.0 * h) - f(x - 2.0 * h))) / (12.0 * h)
}

fn symbol_properties(s: &mut Suite, p: usize) {
    let t = SymbolTable::new(p);
    let d = |k: SymbolKind, th: f64, r: usize| t.eval_derivative(k, th, r).unwrap_or(f64::NAN);
    let (k1, k2) = ( (p + 1) as f64, (2 * p + 1) as f64);
    let interior: Vec<f64> = (1..400).map(|k| k as f64 * PI / 400.0).collect();
    let worst = |f: &dyn Fn(f64) -> f64| interior.iter().map(|&th| f(th)).fold(f64::INFINITY, f64::min);

    // C' = (p+1) sinθ/(1-cosθ) C + (2p+1) M
    let rhs = |th: f64| k1 * th.sin() / (1.0 - th.cos()) * t.c(th) + k2 * t.m(th);
    let an = interior.iter().map(|&th| (d(SymbolKind::C, th, 1) - rhs(th)).abs()).fold(0.0, f64::max);
    let fd = interior.iter().map(|&th| (central_diff(|x| t.c(x), th, 2e-3) - rhs(th)).abs()).fold(0.0, f64::max);
    s.check(&format!("c_derivative_identity[p={p}]"), an < 1e-10 && fd < 1e-10, format!("analytic {an:.2e}, differenced {fd:.2e}"));

    let th0 = 1e-4;
    let lim = [
        t.b(th0).abs(),
        d(SymbolKind::B, th0, 1).abs() - 2.0 * th0,
        (d(SymbolKind::B, th0, 2) + 2.0).abs(),
        (t.c(th0) / th0 + 1.0).abs(),
        (d(SymbolKind::C, th0, 1) + 1.0).abs(),
        ((t.c(th0 + 1e-6) - t.c(th0 - 1e-6)) / 2e-6 + 1.0).abs(),
        (t.m(th0) - 1.0).abs(),
    ];
    let c_pi = t.c(PI).abs();
    let cp_pi = d(SymbolKind::C, PI, 1) - k2 * t.m(PI);
    s.check(
        &format!("limits[p={p}]"),
        lim.iter().all(|&x| x < 1e-6) && c_pi < 1e-14 && cp_pi.abs() < 1e-12 && t.m(PI) > 0.0,
        format!("near 0: {}; C(π)", lim.map(|x| format!("{x:.1e}")).join(" ")) + &format!("  {c_pi:.1e}, C'(π)-(2p+1)M(π) {cp_pi:.1e}"),
    );

    let signs = worst(&|th| -t.c(th)).min(-t.b(PI)).min(worst(&|th| -t.b(th)));
    let m_min = theta_grid(801).iter().map(|&th| t.m(th)).fold(f64::INFINITY, f64::min);
    let parity = interior
        .iter()
        .map(|&th| (t.b(th) - t.b(-th)).abs().max((t.c(th) + t.c(-th)).abs()).max((t.m(th) - t.m(-th)).abs()))
        .fold(0.0, f64::max);
    s.check(
        &format!("signs_and_parity[p={p}]"),
        signs > 0.0 && m_min > 0.0 && parity < 1e-14,
        format!("min -B,-C {signs:.2e}, min M {m_min:.2e}, parity {parity:.1e}"),
    );

    // Σ(θ+2jπ)^{-(2p+1)} < θ Σ(θ+2jπ)^{-(2p+2)}
    // The j = 0 terms cancel exactly, so only |j| >= 1 is summed.
    let kc = 2 * p as i32 + 1;
    let a = worst(&|th| {
        (1..=20_000)
            .rev()
            .map(|j| {
                let (lo, hi) = (th - 2.0 * PI * j as f64, th + 2.0 * PI * j as f64);
                th * (lo.powi(-kc - 1) + hi.powi(-kc - 1)) - (lo.powi(-kc) + hi.powi(-kc))
            })
            .sum()
    });
    s.check(&format!("hat_c_bound[p={p}]"), a > 0.0, format!("min of Ĉ + θM̂ {a:.3e}"));
    // Σ(θ+2jπ)^{-(2p+1)} > θ sinθ Σ(θ+2jπ)^{-(2p+3)}
    let next = SymbolTable::new(p + 1);
    let b = worst(&|th| {
        let rhs = th * th.sin() * -next.eval(SymbolKind::CHat, th).unwrap_or(f64::NAN);
        -d(SymbolKind::CHat, th, 0) / rhs - 1.0
    });
    s.check(&format!("sin_weighted_bound[p={p}]"), b > 0.0, format!("min relative margin {b:.3e}"));
    let m48 = worst(&|th| t.m(th) + th / (2.0 * k1) * d(SymbolKind::M, th, 1));
    s.check(&format!("mass_symbol_growth[p={p}]"), m48 > 0.0, format!("min of M + θM'/(2p+2) {m48:.3e}"));
    let ratio = worst(&|th| {
        let (c1, c2, m0, m1) = (d(SymbolKind::C, th, 1), d(SymbolKind::C, th, 2), t.m(th), d(SymbolKind::M, th, 1));
        (c2 * m0 - c1 * m1) / (m0 * m0)
    });
    s.check(&format!("c_prime_over_m_increasing[p={p}]"), ratio > 0.0, format!("min of (C'/M)' {ratio:.3e}"));

    let mut w = 0.0_f64;
    for rho in [0.5, 3.0, 40.0] {
        w = w.max((w_symbol(&t, 1e-7, rho) - rho).abs() / rho);
        w = w.max((w_symbol(&t, PI, rho) - rho * t.m(PI).powi(2)).abs() / rho);
    }
    s.check(&format!("w_endpoints[p={p}]"), w < 1e-10, format!("max relative deviation {w:.2e}"));
}

fn conditioning_lab(s: &mut Suite) {
    for p in 1..=3 {
        let counts = |k: MatrixKind| {
            AssociatedPolynomial::of_matrix(k, p)
                .and_then(|q| root_census(&q, 1e-8))
                .map(|c| (c.inside, c.on, c.outside))
                .map_err(|e| e.to_string())
        };
        let (b, c, m) = (counts(MatrixKind::B), counts(MatrixKind::C), counts(MatrixKind::M));
        let ok = b == Ok((p - 1, 2, p - 1)) && c == Ok((p - 1, 2, p - 1)) && m.as_ref().is_ok_and(|x| x.1 == 0);
        s.check(&format!("root_census[p={p}]"), ok, format!("B {b:?} C {c:?} M {m:?}"));
    }
    match perturbation_width(2, 129, 1e-13) {
        Ok(w) => s.check("perturbation_width[p=2]", (w.n1, w.n2) == (20, 23), format!("N1 {} N2 {}", w.n1, w.n2)),
        Err(e) => s.check("perturbation_width[p=2]", false, e.to_string()),
    }
    match (condition_sweep(Family::B, 2, &[32, 64, 128], 1.0), condition_sweep(Family::C, 2, &[32, 64, 128], 1.0)) {
        (Ok(b), Ok(c)) => s.check(
            "growth_slopes[p=2]",
            (b.slope - 2.0).abs() < 0.3 && (c.slope - 1.0).abs() < 0.3,
            format!("B {:.3} C {:.3}", b.slope, c.slope),
        ),
        (b, c) => s.check("growth_slopes[p=2]", false, format!("{:?} {:?}", b.err(), c.err())),
    }
}

fn wave_solver(s: &mut Suite, rng: &mut ChaCha8Rng) {
    for p in 1..=3 {
        for mu in [0.1, 1.0, 100.0] {
            let n = 6 * p + 5;
            let f: Vec<f64> = (0..n + p - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let sols: Result<Vec<_>, _> = OdeProblem::new(p, n, 2.0, mu, f).and_then(|pr| {
                [OdeRoute::ViaB, OdeRoute::ViaC, OdeRoute::Monolithic].iter().map(|&r| solve_ode(&pr, r)).collect()
            });
            let name = format!("route_equivalence[p={p},mu={mu}]");
            match sols {
                Ok(v) => {
                    let scale = v[2].u.iter().chain(&v[2].v).fold(0.0_f64, |a, x| a.max(x.abs()));
                    let dev = v[..2]
                        .iter()
                        .flat_map(|a| a.u.iter().zip(&v[2].u).chain(a.v.iter().zip(&v[2].v)))
                        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
                    s.check(&name, dev <= 1e-9 * scale.max(1e-300), format!("relative deviation {:.2e}", dev / scale));
                }
                Err(e) => s.check(&name, false, e.to_string()),
            }
        }
    }
    let ax = Axis::new(2, 5, 0.0, 1.0, Bc::Dirichlet, Bc::Robin(1.5));
    let mut pr = SpaceTimeProblem::new(vec![ax], WaveSpeed::constant(1.3), 2, 7, 1.0);
    pr.source = Some(Arc::new(|x: &[f64], t: f64| (3.0 * x[0]).sin() * (1.0 + t * t)));
    let res = SpaceTimeSystem::assemble(&pr).and_then(|sys| Ok((sys.solve()?, sys.solve_monolithic()?)));
    match res {
        Ok((a, b)) => {
            let num: f64 = a.u.iter().zip(&b.u).chain(a.v.iter().zip(&b.v)).map(|(x, y)| (x - y).powi(2)).sum();
            let den: f64 = b.u.iter().chain(&b.v).map(|x| x * x).sum();
            let rel = (num / den).sqrt();
            s.check("direct_vs_monolithic_1d", rel < 1e-8, format!("relative difference {rel:.2e}"));
        }
        Err(e) => s.check("direct_vs_monolithic_1d", false, e.to_string()),
    }
}

fn cli_experiments(s: &mut Suite) {
    match targets() {
        Ok(t) => s.check("targets_parse", !t.targets.is_empty(), format!("version {}, {} targets", t.version, t.targets.len())),
        Err(e) => s.check("targets_parse", false, e.to_string()),
    }
    match run_experiment(&ExperimentSpec::new("table3").set("p-max", "2")) {
        Ok(b) => s.check(
            "table3_small",
            b.status == RunStatus::Complete && b.failures().is_empty(),
            format!("{} targets evaluated", b.targets.len()),
        ),
        Err(e) => s.check("table3_small", false, e.to_string()),
    }
    let a = run_experiment(&ExperimentSpec::new("roots").set("p-max", "1"));
    let b = run_experiment(&ExperimentSpec::new("roots").set("p-max", "1"));
    match (a, b) {
        (Ok(a), Ok(b)) => s.check("deterministic_csv", a.tables == b.tables, "two identical runs"),
        _ => s.check("deterministic_csv", false, "run failed"),
    }
}
