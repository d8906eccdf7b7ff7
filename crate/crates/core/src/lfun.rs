//! `log L(f x chi, s)` and `L'/L(f x chi, s)` by Euler products, the
//! quasi-character values `g = exp((iz/2) L)`, and smoothed Dirichlet sums.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::characters::{CharacterGroup, CharacterIndex};
use crate::coeffs::{l_table, CoeffCase};
use crate::error::{Error, Result};
use crate::forms::ModularForm;
use crate::sum::ComplexSum;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Comparison constant for prime sums: `pi(x) <= 1.26 x / log x`, times the
/// factor 4 covering both Satake roots and `1/(1 - p^{-sigma}) <= 2`.
const TAIL_CONST: f64 = 4.0 * 1.26;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalParams {
    /// Prime cutoff for Euler products.
    pub p_max: u64,
    /// Term cutoff for Dirichlet sums.
    pub n_max: u64,
    /// Smoothing length `X` of `g_plus`.
    pub x: f64,
    /// Target tail tolerance.
    pub tol: f64,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams { p_max: 10_000, n_max: 100_000, x: 1.0e4, tol: 1e-8 }
    }
}

impl EvalParams {
    pub fn validate(&self) -> Result<()> {
        if self.p_max < 2 || self.n_max == 0 || !(self.x > 0.0) || !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!("evaluation parameters must be positive: {self:?}")));
        }
        if self.n_max < self.p_max {
            return Err(Error::InvalidParameter(format!("n_max = {} is below p_max = {}", self.n_max, self.p_max)));
        }
        Ok(())
    }
}

/// A value together with an estimate of its truncation error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: Complex64,
    pub tail_bound: f64,
}

/// A character of a prime-modulus group.
#[derive(Clone, Copy, Debug)]
pub struct Twist<'a> {
    pub group: &'a CharacterGroup,
    pub j: CharacterIndex,
}

impl Twist<'_> {
    fn chi(&self, n: u64) -> Complex64 {
        self.group.chi(self.j, n)
    }
}

fn chi_of(twist: Option<Twist<'_>>, n: u64) -> Complex64 {
    twist.map(|t| t.chi(n)).unwrap_or(Complex64::new(1.0, 0.0))
}

fn require_rigorous(op: &'static str, s: Complex64) -> Result<()> {
    if s.re > 1.0 {
        Ok(())
    } else {
        Err(Error::Regime { op, re: s.re, bound: 1.0, hint: "use g_plus for 1/2 < Re(s) <= 1" })
    }
}

#[derive(Clone, Copy, Debug)]
struct LocalRoots {
    p: u64,
    log_p: f64,
    alpha_u: Complex64,
    beta_u: Complex64,
}

/// Per-prime data `alpha(p) p^{-s}`, `beta(p) p^{-s}` for a fixed `(form, s)`,
/// so that many twists can be evaluated without recomputing powers.
#[derive(Clone, Debug)]
pub struct EulerData {
    s: Complex64,
    p_max: u64,
    roots: Vec<LocalRoots>,
}

impl EulerData {
    pub fn new(form: &ModularForm, s: Complex64, p_max: u64) -> Result<EulerData> {
        if p_max > form.p_max() {
            return Err(Error::EigenvalueRange { p: p_max, p_max: form.p_max() });
        }
        let roots = form
            .primes()
            .iter()
            .take_while(|&&p| p <= p_max)
            .map(|&p| {
                let sp = form.satake(p).expect("stored prime");
                let log_p = (p as f64).ln();
                let u = (-s * log_p).exp();
                LocalRoots { p, log_p, alpha_u: sp.alpha * u, beta_u: sp.beta * u }
            })
            .collect();
        Ok(EulerData { s, p_max, roots })
    }

    pub fn s(&self) -> Complex64 {
        self.s
    }

    fn local(case: CoeffCase, r: &LocalRoots, chi: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for g in [r.alpha_u * chi, r.beta_u * chi] {
            if g.re == 0.0 && g.im == 0.0 {
                continue;
            }
            acc += match case {
                CoeffCase::Log => -(Complex64::new(1.0, 0.0) - g).ln(),
                CoeffCase::LogDeriv => -r.log_p * g / (Complex64::new(1.0, 0.0) - g),
            };
        }
        acc
    }

    /// The truncated Euler-product value of `L(f x chi, s)` (log or log-derivative).
    pub fn eval(&self, case: CoeffCase, twist: Option<Twist<'_>>) -> Complex64 {
        let mut acc = ComplexSum::new();
        for r in &self.roots {
            let chi = chi_of(twist, r.p);
            if chi.re == 0.0 && chi.im == 0.0 {
                continue;
            }
            acc.add(Self::local(case, r, chi));
        }
        acc.value()
    }

    /// Local term at a single stored prime.
    pub fn local_term(&self, case: CoeffCase, p: u64, chi: Complex64) -> Option<Complex64> {
        self.roots.iter().find(|r| r.p == p).map(|r| Self::local(case, r, chi))
    }

    pub fn tail_bound(&self, case: CoeffCase) -> f64 {
        euler_tail(case, self.s.re, self.p_max)
    }
}

fn euler_tail(case: CoeffCase, sigma: f64, p_max: u64) -> f64 {
    let p = p_max as f64;
    let base = TAIL_CONST * p.powf(1.0 - sigma) / (sigma - 1.0);
    match case {
        CoeffCase::Log => base / p.ln(),
        CoeffCase::LogDeriv => base,
    }
}

/// `log L(f x chi, s)` or `L'/L(f x chi, s)` over primes `<= p_max`, with tail estimate.
pub fn frak_l(
    case: CoeffCase,
    form: &ModularForm,
    twist: Option<Twist<'_>>,
    s: Complex64,
    params: &EvalParams,
) -> Result<Evaluation> {
    require_rigorous("frak_l", s)?;
    let data = EulerData::new(form, s, params.p_max)?;
    Ok(Evaluation { value: data.eval(case, twist), tail_bound: data.tail_bound(case) })
}

/// `exp((iz/2) frak_l)`.
pub fn g_eval(
    case: CoeffCase,
    form: &ModularForm,
    twist: Option<Twist<'_>>,
    s: Complex64,
    z: Complex64,
    params: &EvalParams,
) -> Result<Evaluation> {
    let l = frak_l(case, form, twist, s, params)?;
    let value = (I * z / 2.0 * l.value).exp();
    let tail_bound = value.norm() * ((z.norm() / 2.0 * l.tail_bound).exp() - 1.0);
    Ok(Evaluation { value, tail_bound })
}

fn weighted_sum(table: &[Complex64], twist: Option<Twist<'_>>, s: Complex64, x: Option<f64>, n_max: u64) -> Complex64 {
    let mut acc = ComplexSum::new();
    for n in 1..=n_max {
        let l = table[n as usize];
        if l.re == 0.0 && l.im == 0.0 {
            continue;
        }
        let chi = chi_of(twist, n);
        if chi.re == 0.0 && chi.im == 0.0 {
            continue;
        }
        let mut w = (-s * (n as f64).ln()).exp();
        if let Some(x) = x {
            w *= (-(n as f64) / x).exp();
        }
        acc.add(l * chi * w);
    }
    acc.value()
}

/// Partial Dirichlet series `sum_{n <= n_max} l_z(n) chi(n) n^{-s}` (requires `Re(s) > 1`).
pub fn g_dirichlet(
    case: CoeffCase,
    form: &ModularForm,
    twist: Option<Twist<'_>>,
    s: Complex64,
    z: Complex64,
    n_max: u64,
) -> Result<Evaluation> {
    require_rigorous("g_dirichlet", s)?;
    let table = l_table(case, z, form, n_max)?;
    let value = weighted_sum(&table, twist, s, None, n_max);
    Ok(Evaluation { value, tail_bound: dirichlet_tail(&table, s.re) })
}

/// `C sum_{n > N} n^{theta - sigma}` with `C` fitted as `max |l(n)| n^{-theta}`.
fn dirichlet_tail(table: &[Complex64], sigma: f64) -> f64 {
    let n_max = (table.len() - 1) as f64;
    let theta = (0.25f64).min((sigma - 1.0) / 2.0);
    let c = table
        .iter()
        .enumerate()
        .skip(1)
        .map(|(n, l)| l.norm() * (n as f64).powf(-theta))
        .fold(0.0, f64::max);
    c * n_max.powf(1.0 + theta - sigma) / (sigma - 1.0 - theta)
}

/// Smallest `n` with `e^{-n/X} n^{-sigma} < tol`.
pub fn suggested_n_max(x: f64, sigma: f64, tol: f64) -> u64 {
    let ok = |n: u64| (-(n as f64) / x).exp() * (n as f64).powf(-sigma) < tol;
    let mut hi = 1u64;
    while !ok(hi) {
        hi *= 2;
        if hi > 1 << 50 {
            return hi;
        }
    }
    let mut lo = hi / 2;
    while lo + 1 < hi {
        let mid = (lo + hi) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Smoothed sum `sum_{n <= n_max} l_z(n) chi(n) e^{-n/X} n^{-s}` for `Re(s) > 1/2`.
pub fn g_plus(
    case: CoeffCase,
    form: &ModularForm,
    twist: Option<Twist<'_>>,
    s: Complex64,
    z: Complex64,
    params: &EvalParams,
) -> Result<Evaluation> {
    let table = g_plus_table(case, form, s, z, params)?;
    g_plus_with_table(&table, twist, s, params)
}

/// Coefficient table for repeated `g_plus` calls at one `(case, form, z)`.
pub fn g_plus_table(case: CoeffCase, form: &ModularForm, s: Complex64, z: Complex64, params: &EvalParams) -> Result<Vec<Complex64>> {
    check_smoothing(s, params)?;
    l_table(case, z, form, params.n_max)
}

fn check_smoothing(s: Complex64, params: &EvalParams) -> Result<f64> {
    if s.re <= 0.5 {
        return Err(Error::Regime { op: "g_plus", re: s.re, bound: 0.5, hint: "no evaluator is provided at or left of the critical line" });
    }
    if !(params.x > 0.0) || params.n_max == 0 {
        return Err(Error::InvalidParameter("g_plus needs X > 0 and n_max >= 1".into()));
    }
    let n = params.n_max as f64;
    let tail = (-n / params.x).exp() * n.powf(-s.re);
    if tail >= params.tol {
        return Err(Error::CutoffInsufficient {
            what: "smoothed Dirichlet sum",
            tail,
            tol: params.tol,
            suggested: Some(suggested_n_max(params.x, s.re, params.tol)),
        });
    }
    Ok(tail)
}

pub fn g_plus_with_table(table: &[Complex64], twist: Option<Twist<'_>>, s: Complex64, params: &EvalParams) -> Result<Evaluation> {
    let tail = check_smoothing(s, params)?;
    if table.len() <= params.n_max as usize {
        return Err(Error::InvalidParameter("coefficient table shorter than n_max".into()));
    }
    Ok(Evaluation { value: weighted_sum(table, twist, s, Some(params.x), params.n_max), tail_bound: tail })
}

/// Upper bound `N m^2 (|s| + k + 3)^2` for the analytic conductor of `f x chi`.
pub fn conductor_bound(form: &ModularForm, m: u64, s: Complex64) -> f64 {
    conductor_bound_raw(form.level(), form.weight(), m, s)
}

pub fn conductor_bound_raw(level: u64, weight: u32, m: u64, s: Complex64) -> f64 {
    let t = s.norm() + weight as f64 + 3.0;
    level as f64 * (m as f64).powi(2) * t * t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::build_builtin;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn log_matches_partial_product() {
        let f = build_builtin("delta", 10_000).unwrap();
        let p = EvalParams::default();
        let s = c(3.0, 0.0);
        let l = frak_l(CoeffCase::Log, &f, None, s, &p).unwrap();
        let mut prod = c(1.0, 0.0);
        for &q in f.primes() {
            let sp = f.satake(q).unwrap();
            let u = (q as f64).powf(-3.0);
            prod /= (c(1.0, 0.0) - sp.alpha * u) * (c(1.0, 0.0) - sp.beta * u);
        }
        assert!((l.value.exp() - prod).norm() < 1e-12);
    }

    #[test]
    fn euler_product_matches_dirichlet_series_at_ten() {
        let f = build_builtin("delta", 100_000).unwrap();
        let p = EvalParams { p_max: 100_000, ..EvalParams::default() };
        let l = frak_l(CoeffCase::Log, &f, None, c(10.0, 0.0), &p).unwrap();
        let eta = f.eta_table(100_000).unwrap();
        let direct: crate::sum::NeumaierSum = (1..=100_000usize).map(|n| eta[n] * (n as f64).powf(-10.0)).collect();
        assert!((l.value.exp() - c(direct.value(), 0.0)).norm() < 1e-10);
    }

    #[test]
    fn principal_twist_drops_one_factor() {
        let f = build_builtin("delta", 2000).unwrap();
        let g = CharacterGroup::new(7).unwrap();
        let p = EvalParams { p_max: 2000, n_max: 2000, ..EvalParams::default() };
        let s = c(1.5, 0.4);
        for case in CoeffCase::ALL {
            let full = frak_l(case, &f, None, s, &p).unwrap().value;
            let tw = frak_l(case, &f, Some(Twist { group: &g, j: CharacterIndex(0) }), s, &p).unwrap().value;
            let local = EulerData::new(&f, s, 2000).unwrap().local_term(case, 7, c(1.0, 0.0)).unwrap();
            assert!((full - local - tw).norm() < 1e-13);
        }
    }

    #[test]
    fn regime_and_g_identities() {
        let f = build_builtin("11a", 1000).unwrap();
        let p = EvalParams { p_max: 1000, n_max: 1000, ..EvalParams::default() };
        assert!(matches!(frak_l(CoeffCase::Log, &f, None, c(1.0, 0.0), &p), Err(Error::Regime { .. })));
        let s = c(1.7, 2.0);
        for case in CoeffCase::ALL {
            assert_eq!(g_eval(case, &f, None, s, c(0.0, 0.0), &p).unwrap().value, c(1.0, 0.0));
            let z = c(0.6, -1.1);
            let a = g_eval(case, &f, None, s, z, &p).unwrap().value;
            let b = g_eval(case, &f, None, s, -z, &p).unwrap().value;
            assert!((a * b - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn g_plus_trivial_cutoff_and_suggestion() {
        let f = build_builtin("delta", 100).unwrap();
        let p = EvalParams { p_max: 2, n_max: 2, x: 3.0, tol: 1.0 };
        let one = EvalParams { n_max: 1, ..p };
        let v = g_plus_with_table(&l_table(CoeffCase::Log, c(1.0, 0.0), &f, 1).unwrap(), None, c(2.0, 0.0), &one).unwrap();
        assert!((v.value - c((-1.0f64 / 3.0).exp(), 0.0)).norm() < 1e-15);
        let tight = EvalParams { p_max: 2, n_max: 2, x: 10.0, tol: 1e-6 };
        match g_plus(CoeffCase::Log, &f, None, c(2.0, 0.0), c(1.0, 0.0), &tight) {
            Err(Error::CutoffInsufficient { suggested: Some(n), .. }) => {
                assert!((-(n as f64) / 10.0).exp() * (n as f64).powi(-2) < 1e-6);
                let m = (n - 1) as f64;
                assert!((-m / 10.0).exp() * m.powi(-2) >= 1e-6);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn g_plus_conjugation() {
        let f = build_builtin("11a", 20_000).unwrap();
        let p = EvalParams { p_max: 20_000, n_max: 20_000, x: 1000.0, tol: 1e-8 };
        let (s, z) = (c(0.8, 0.3), c(0.7, 0.4));
        for case in CoeffCase::ALL {
            let a = g_plus(case, &f, None, s, z, &p).unwrap().value;
            let b = g_plus(case, &f, None, s.conj(), -z.conj(), &p).unwrap().value;
            assert!((a.conj() - b).norm() < 1e-10);
        }
    }

    #[test]
    fn conductor_examples() {
        assert_eq!(conductor_bound_raw(11, 2, 5, c(1.0, 0.0)), 9900.0);
        assert_eq!(conductor_bound_raw(1, 12, 3, c(0.0, 0.0)), 2025.0);
        assert!(conductor_bound_raw(1, 12, 3, c(0.0, 2.0)) > conductor_bound_raw(1, 12, 3, c(1.0, 0.0)));
    }
}
