//! Randomized invariants across the modules.

use chronospline::conditioning::{root_census, AssociatedPolynomial, Family};
use chronospline::experiments::{run_experiment, ExperimentSpec};
use chronospline::ode::{solve_ode, OdeProblem, OdeRoute};
use chronospline::spline::{eval_cardinal, SplineSpace};
use chronospline::symbol::{w_symbol, SymbolKind, SymbolTable};
use chronospline::temporal::{assemble_temporal, MatrixKind};
use proptest::prelude::*;
use std::f64::consts::PI;

fn light() -> ProptestConfig {
    ProptestConfig::with_cases(64)
}

proptest! {
    #[test]
    fn partition_of_unity(p in 0usize..=5, n in 1usize..20, t in 0.0f64..=1.0) {
        let sp = SplineSpace::new(p, n, 0.0, 1.0).unwrap();
        let sum: f64 = sp.eval_all(t, 0).unwrap().iter().map(|e| e.1).sum();
        prop_assert!((sum - 1.0).abs() < 1e-13);
        if p > 0 {
            let d: f64 = sp.eval_all(t, 1).unwrap().iter().map(|e| e.1).sum();
            prop_assert!(d.abs() < 1e-9 * n as f64);
        }
    }

    #[test]
    fn cardinal_symmetry(j in 1usize..=7, s in 0.0f64..1.0) {
        let t = s * (j + 1) as f64;
        let mirror = (j + 1) as f64 - t;
        prop_assert!((eval_cardinal(j, t, 0) - eval_cardinal(j, mirror, 0)).abs() < 1e-13);
        prop_assert!((eval_cardinal(j, t, 1) + eval_cardinal(j, mirror, 1)).abs() < 1e-11);
    }

    #[test]
    fn symbol_parity_and_signs(p in 1usize..=6, th in 1e-3f64..PI) {
        let t = SymbolTable::new(p);
        prop_assert!((t.b(th) - t.b(-th)).abs() < 1e-14);
        prop_assert!((t.c(th) + t.c(-th)).abs() < 1e-14);
        prop_assert!((t.m(th) - t.m(-th)).abs() < 1e-14);
        prop_assert!(t.b(th) < 0.0 && t.m(th) > 0.0);
        if th < PI - 1e-3 {
            prop_assert!(t.c(th) < 0.0);
        }
    }

    #[test]
    fn c_derivative_identity(p in 1usize..=6, th in 1e-2f64..PI - 1e-2) {
        let t = SymbolTable::new(p);
        let lhs = t.eval_derivative(SymbolKind::C, th, 1).unwrap();
        let rhs = (p + 1) as f64 * th.sin() / (1.0 - th.cos()) * t.c(th) + (2 * p + 1) as f64 * t.m(th);
        prop_assert!((lhs - rhs).abs() < 1e-10, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn hat_c_below_theta_hat_m(p in 1usize..=6, th in 1e-3f64..PI - 1e-3) {
        // The j = 0 terms cancel; each pair j, -j contributes positively.
        let k = 2 * p as i32 + 1;
        let s: f64 = (1..=20_000)
            .rev()
            .map(|j| {
                let (lo, hi) = (th - 2.0 * PI * j as f64, th + 2.0 * PI * j as f64);
                th * (lo.powi(-k - 1) + hi.powi(-k - 1)) - (lo.powi(-k) + hi.powi(-k))
            })
            .sum();
        prop_assert!(s > 0.0);
    }

    #[test]
    fn sin_weighted_bound(p in 1usize..=6, th in 1e-3f64..PI - 1e-3) {
        let lhs = -SymbolTable::new(p).eval(SymbolKind::CHat, th).unwrap();
        let rhs = th * th.sin() * -SymbolTable::new(p + 1).eval(SymbolKind::CHat, th).unwrap();
        prop_assert!(lhs > rhs);
    }

    #[test]
    fn mass_symbol_growth(p in 1usize..=6, th in 1e-3f64..PI) {
        let t = SymbolTable::new(p);
        let v = t.m(th) + th / (2 * p + 2) as f64 * t.eval_derivative(SymbolKind::M, th, 1).unwrap();
        prop_assert!(v > 0.0);
    }

    #[test]
    fn w_symbol_endpoint(p in 1usize..=6, rho in 0.01f64..100.0) {
        let t = SymbolTable::new(p);
        prop_assert!((w_symbol(&t, PI, rho) - rho * t.m(PI).powi(2)).abs() < 1e-10 * rho);
        prop_assert!((w_symbol(&t, 1e-7, rho) - rho).abs() < 1e-10 * rho.max(1.0));
    }
}

proptest! {
    #![proptest_config(light())]

    #[test]
    fn persymmetry(p in 1usize..=4, extra in 1usize..30) {
        let set = assemble_temporal(p, 3 * p + 1 + extra, 1.0).unwrap();
        let n = set.n();
        for kind in [MatrixKind::B, MatrixKind::C, MatrixKind::M] {
            let a = set.scaled(kind);
            for i in 0..n {
                for j in 0..n {
                    prop_assert!((a[(i, j)] - a[(n - 1 - j, n - 1 - i)]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn route_equivalence(
        p in 1usize..=3,
        mu_idx in 0usize..3,
        n in 4usize..14,
        h in 0.01f64..1.0,
        f in prop::collection::vec(-1.0f64..1.0, 16),
    ) {
        let mu = [0.1, 1.0, 100.0][mu_idx];
        // μh² ranges up to 100; the horizon follows from h and n.
        let horizon = h * n as f64;
        let f = f[..n + p - 1].to_vec();
        let pr = OdeProblem::new(p, n, horizon, mu, f).unwrap();
        let sols: Vec<_> = [OdeRoute::ViaB, OdeRoute::ViaC, OdeRoute::Monolithic]
            .iter()
            .map(|&r| solve_ode(&pr, r).unwrap())
            .collect();
        let scale = sols[2].u.iter().chain(&sols[2].v).fold(0.0_f64, |a, x| a.max(x.abs())).max(1e-300);
        for s in &sols[..2] {
            for (x, y) in s.u.iter().zip(&sols[2].u).chain(s.v.iter().zip(&sols[2].v)) {
                prop_assert!((x - y).abs() <= 1e-9 * scale, "{:?}: {} vs {}", s.route, x, y);
            }
        }
    }

    #[test]
    fn reciprocal_roots(p in 1usize..=4, rho in 0.05f64..50.0, which in 0usize..4) {
        let q = match which {
            0 => AssociatedPolynomial::of_matrix(MatrixKind::B, p),
            1 => AssociatedPolynomial::of_matrix(MatrixKind::C, p),
            2 => AssociatedPolynomial::of_family(Family::G, p, rho),
            _ => AssociatedPolynomial::of_family(Family::W, p, rho),
        }
        .unwrap();
        let c = root_census(&q, 1e-8).unwrap();
        prop_assert!(c.reciprocal_residual() < 1e-8, "{}", c.reciprocal_residual());
        prop_assert_eq!(c.inside, c.outside);
    }
}

#[test]
fn experiment_csv_is_deterministic() {
    let dir = std::env::temp_dir().join(format!("chronospline-det-{}", std::process::id()));
    let csv = |sub: &str| {
        let out = dir.join(sub);
        run_experiment(&ExperimentSpec::new("table3").set("p-max", "3").out(&out)).unwrap();
        std::fs::read(out.join("table3.csv")).unwrap()
    };
    let (a, b) = (csv("a"), csv("b"));
    std::fs::remove_dir_all(&dir).ok();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with('#'));
    assert!(text.contains("Table 3"));
}
