//! Fast sweep over the library's invariants; each check reports pass/fail and a detail line.

use num_complex::Complex64;
use serde::Serialize;

use crate::characters::CharacterGroup;
use crate::coeffs::{gen_coeff, l_coeff, l_coeff_oracle, CoeffCase};
use crate::density::{invert_to_density, integrate_against, mtilde_grid, mtilde_local_quad, GridParams, TestFunction};
use crate::error::Result;
use crate::forms::build_builtin;
use crate::harness::{avg_twists, avg_twists_direct, AverageParams};
use crate::lfun::{g_dirichlet, g_eval, EvalParams};
use crate::mtilde::{mtilde_euler, mtilde_harmonic, mtilde_local, mtilde_series, MtildeParams};

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn outcome(name: &'static str, worst: f64, tol: f64) -> CheckOutcome {
    CheckOutcome { name, passed: worst <= tol, detail: format!("worst {worst:.3e} (tol {tol:.0e})") }
}

fn run(name: &'static str, f: impl FnOnce() -> Result<CheckOutcome>) -> CheckOutcome {
    f().unwrap_or_else(|e| CheckOutcome { name, passed: false, detail: format!("error: {e}") })
}

pub fn run_all() -> Vec<CheckOutcome> {
    vec![
        run("h_n(1) sums", || {
            let worst = (1..=50)
                .map(|n| (gen_coeff(CoeffCase::Log, n, c(1.0, 0.0)) - 1.0).norm())
                .fold(0.0, f64::max);
            Ok(outcome("h_n(1) sums", worst, 1e-12))
        }),
        run("eigenvalue Hecke relations", || {
            let f = build_builtin("delta", 1000)?;
            let mut worst = 0.0f64;
            for (m, n) in [(2u64, 3u64), (4, 9), (5, 49), (7, 11)] {
                worst = worst.max((f.eta(m * n)? - f.eta(m)? * f.eta(n)?).abs());
            }
            Ok(outcome("eigenvalue Hecke relations", worst, 1e-12))
        }),
        run("l coefficients vs oracle", || {
            let mut worst = 0.0f64;
            for id in ["delta", "11a"] {
                let f = build_builtin(id, 200)?;
                for case in CoeffCase::ALL {
                    for n in 1..=200u64 {
                        let a = l_coeff(case, c(-2.0, 1.0), &f, n)?;
                        let b = l_coeff_oracle(case, c(-2.0, 1.0), &f, n)?;
                        worst = worst.max((a - b).norm() / b.norm().max(1.0));
                    }
                }
            }
            Ok(outcome("l coefficients vs oracle", worst, 1e-9))
        }),
        run("Euler vs Dirichlet", || {
            let f = build_builtin("delta", 10_000)?;
            let p = EvalParams::default();
            let mut worst = 0.0f64;
            for case in CoeffCase::ALL {
                let s = c(3.0, 0.3);
                let a = g_eval(case, &f, None, s, c(1.0, 0.0), &p)?;
                let b = g_dirichlet(case, &f, None, s, c(1.0, 0.0), 10_000)?;
                worst = worst.max((a.value - b.value).norm());
            }
            Ok(outcome("Euler vs Dirichlet", worst, 1e-6))
        }),
        run("local series vs quadrature", || {
            let f = build_builtin("delta", 100)?;
            let mut worst = 0.0f64;
            for case in CoeffCase::ALL {
                for p in [2u64, 3, 5, 7] {
                    let z = c(2.0, -1.5);
                    let q = mtilde_local_quad(case, &f, 0.8, p, z, 256)?;
                    let s = mtilde_local(case, &f, c(0.8, 0.0), z, z.conj(), p, 64)?;
                    worst = worst.max((q - s).norm()).max((q.norm() - 1.0).max(0.0));
                }
            }
            Ok(outcome("local series vs quadrature", worst, 1e-10))
        }),
        run("global series vs Euler", || {
            let f = build_builtin("11a", 100)?;
            let p = MtildeParams { n_max: 1 << 30, p_max: 29, ..MtildeParams::default() };
            let mut worst = 0.0f64;
            for case in CoeffCase::ALL {
                let (s, z1, z2) = (c(1.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
                let a = mtilde_series(case, &f, s, z1, z2, &p)?;
                let b = mtilde_euler(case, &f, s, z1, z2, &p)?;
                worst = worst.max((a.value - b.value).norm());
            }
            Ok(outcome("global series vs Euler", worst, 1e-7))
        }),
        run("harmonic normalization", || {
            let v = mtilde_harmonic(CoeffCase::Log, c(0.9, 0.0), c(0.0, 0.0), c(0.0, 0.0), 200)?;
            Ok(outcome("harmonic normalization", (v.value - 1.0).norm(), 1e-14))
        }),
        run("character orthogonality", || {
            let g = CharacterGroup::new(31)?;
            let mut worst = 0.0f64;
            for j in g.indices().skip(1) {
                let s: Complex64 = (1..31).map(|n| g.chi(j, n)).sum();
                worst = worst.max(s.norm());
            }
            Ok(outcome("character orthogonality", worst, 1e-10))
        }),
        run("twist average vs direct loop", || {
            let f = build_builtin("delta", 500)?;
            let params = AverageParams { eval: EvalParams { p_max: 500, n_max: 500, ..EvalParams::default() }, ..AverageParams::default() };
            let s = c(1.25, 0.0);
            let r = avg_twists(CoeffCase::Log, &f, 13, s, c(1.0, 0.0), c(1.0, 0.0), &params)?;
            let d = avg_twists_direct(CoeffCase::Log, &f, 13, s, c(1.0, 0.0), c(1.0, 0.0), 500, true)?;
            Ok(outcome("twist average vs direct loop", (r.empirical - d).norm(), 1e-12))
        }),
        run("density mass", || {
            let f = build_builtin("delta", 100)?;
            let g = mtilde_grid(CoeffCase::Log, &f, 1.25, 50, &GridParams { cross_check: false, ..GridParams::default() })?;
            let d = invert_to_density(&g)?;
            let m = integrate_against(&d, &TestFunction::Constant { value: 1.0 })?;
            Ok(outcome("density mass", (m - 1.0).norm(), 1e-3))
        }),
    ]
}
