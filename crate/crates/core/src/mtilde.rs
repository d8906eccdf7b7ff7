//! Global characteristic functions: the Dirichlet series
//! `sum l_{z1}(n) l_{z2}(n) n^{-2s}`, its Euler product, and the harmonic
//! double series over pairs `(n, m)` with `nm` a square.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coeffs::{j_set, l_local_values, square_parts, CoeffCase, CoeffContext};
use crate::error::{Error, Result};
use crate::forms::ModularForm;
use crate::lfun::Evaluation;
use crate::primes::primes_up_to;
use crate::sum::ComplexSum;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative size below which local-series terms stop being summed.
const LOCAL_EXIT: f64 = 1e-18;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MtildeParams {
    /// Series cutoff on `n`.
    pub n_max: u64,
    /// Euler cutoff on `p`; the series only uses `n` whose prime factors are `<= p_max`.
    pub p_max: u64,
    /// Local power cutoff.
    pub r_max: u32,
    /// Prime excluded from the index set.
    pub avoid_prime: Option<u64>,
    /// Optional tail tolerance; exceeding it is an error.
    pub tol: Option<f64>,
}

impl Default for MtildeParams {
    fn default() -> Self {
        MtildeParams { n_max: 100_000, p_max: 100_000, r_max: 64, avoid_prime: None, tol: None }
    }
}

impl MtildeParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_max == 0 || self.p_max < 2 || self.r_max < 2 {
            return Err(Error::InvalidParameter(format!("mtilde parameters out of range: {self:?}")));
        }
        Ok(())
    }
}

fn require_half_plane(op: &'static str, s: Complex64) -> Result<()> {
    if s.re > 0.5 {
        Ok(())
    } else {
        Err(Error::Regime { op, re: s.re, bound: 0.5, hint: "the series diverges there" })
    }
}

fn check_tol(what: &'static str, tail: f64, tol: Option<f64>) -> Result<()> {
    match tol {
        Some(tol) if !(tail <= tol) => Err(Error::CutoffInsufficient { what, tail, tol, suggested: None }),
        _ => Ok(()),
    }
}

/// `sum_{r <= r_max} l_{z1}(p^r) l_{z2}(p^r) p^{-2rs}` with early exit on negligible terms.
pub fn mtilde_local(
    case: CoeffCase,
    form: &ModularForm,
    s: Complex64,
    z1: Complex64,
    z2: Complex64,
    p: u64,
    r_max: u32,
) -> Result<Complex64> {
    let a = l_local_values(case, z1, form, p, r_max)?;
    let b = l_local_values(case, z2, form, p, r_max)?;
    let u = (-2.0 * s * (p as f64).ln()).exp();
    let mut acc = ComplexSum::new();
    let mut w = ONE;
    let mut small = 0;
    for r in 0..=r_max as usize {
        let t = a[r] * b[r] * w;
        acc.add(t);
        if r >= 2 && t.norm() < LOCAL_EXIT * acc.value().norm().max(1e-300) {
            small += 1;
            if small == 2 {
                break;
            }
        } else {
            small = 0;
        }
        w *= u;
    }
    Ok(acc.value())
}

/// The series over `n <= n_max` with every prime factor `<= p_max` (and not
/// equal to `avoid_prime`). With `p_max >= n_max` this is the plain truncation.
pub fn mtilde_series(
    case: CoeffCase,
    form: &ModularForm,
    s: Complex64,
    z1: Complex64,
    z2: Complex64,
    params: &MtildeParams,
) -> Result<Evaluation> {
    params.validate()?;
    require_half_plane("mtilde_series", s)?;
    let bound = params.p_max.min(params.n_max);
    if bound > form.p_max() {
        return Err(Error::EigenvalueRange { p: bound, p_max: form.p_max() });
    }
    // Local term lists t_p(r) = l_{z1}(p^r) l_{z2}(p^r) p^{-2rs} for p^r <= n_max.
    let mut locals: Vec<(u64, Vec<Complex64>)> = Vec::new();
    for p in primes_up_to(bound) {
        if Some(p) == params.avoid_prime {
            continue;
        }
        let mut r_max = 1u32;
        while (p as u128).pow(r_max + 1) <= params.n_max as u128 {
            r_max += 1;
        }
        let a = l_local_values(case, z1, form, p, r_max)?;
        let b = l_local_values(case, z2, form, p, r_max)?;
        let u = (-2.0 * s * (p as f64).ln()).exp();
        let mut w = ONE;
        let mut t = Vec::with_capacity(r_max as usize + 1);
        for r in 0..=r_max as usize {
            t.push(a[r] * b[r] * w);
            w *= u;
        }
        locals.push((p, t));
    }
    let mut terms: Vec<(u64, Complex64)> = vec![(1, ONE)];
    enumerate_smooth(&locals, 0, 1, ONE, params.n_max, &mut terms);
    terms.sort_unstable_by_key(|t| t.0);
    let value = terms.iter().map(|t| t.1).collect::<ComplexSum>().value();

    // C fitted on |l l| n^{-theta}, tail ~ C N^{1 + theta - 2 sigma} / (2 sigma - 1 - theta)
    let sigma = s.re;
    let theta = 0.5f64.min(sigma - 0.5);
    let two_s = 2.0 * sigma;
    let c = terms.iter().map(|&(n, t)| t.norm() * (n as f64).powf(two_s - theta)).fold(0.0, f64::max);
    let nf = params.n_max as f64;
    let tail = c * nf.powf(1.0 + theta - two_s) / (two_s - 1.0 - theta);
    check_tol("M-tilde series", tail, params.tol)?;
    Ok(Evaluation { value, tail_bound: tail })
}

fn enumerate_smooth(
    locals: &[(u64, Vec<Complex64>)],
    start: usize,
    n: u64,
    val: Complex64,
    n_max: u64,
    out: &mut Vec<(u64, Complex64)>,
) {
    for i in start..locals.len() {
        let (p, ref t) = locals[i];
        if n as u128 * p as u128 > n_max as u128 {
            break;
        }
        let mut m = n;
        for tr in t.iter().skip(1) {
            m *= p;
            let v = val * tr;
            out.push((m, v));
            enumerate_smooth(locals, i + 1, m, v, n_max, out);
            if m as u128 * p as u128 > n_max as u128 {
                break;
            }
        }
    }
}

/// The `t`-free diagonal `sum l_{z1}(n) l_{z2}(n) n^{-2 sigma}`.
pub fn mtilde_sigma(
    case: CoeffCase,
    form: &ModularForm,
    sigma: f64,
    z1: Complex64,
    z2: Complex64,
    params: &MtildeParams,
) -> Result<Evaluation> {
    mtilde_series(case, form, Complex64::new(sigma, 0.0), z1, z2, params)
}

/// Product of local factors over `p <= p_max`, skipping `avoid_prime`.
pub fn mtilde_euler(
    case: CoeffCase,
    form: &ModularForm,
    s: Complex64,
    z1: Complex64,
    z2: Complex64,
    params: &MtildeParams,
) -> Result<Evaluation> {
    params.validate()?;
    require_half_plane("mtilde_euler", s)?;
    if params.p_max > form.p_max() {
        return Err(Error::EigenvalueRange { p: params.p_max, p_max: form.p_max() });
    }
    let primes = primes_up_to(params.p_max);
    let mut value = ONE;
    let mut fit = 0.0f64;
    let two_s = 2.0 * s.re;
    for &p in &primes {
        if Some(p) == params.avoid_prime {
            continue;
        }
        let f = mtilde_local(case, form, s, z1, z2, p, params.r_max)?;
        value *= f;
        if 2 * p > params.p_max {
            fit = fit.max((f - ONE).norm() * (p as f64).powf(two_s));
        }
    }
    let pf = params.p_max as f64;
    let tail_sum = fit * 1.26 * pf.powf(1.0 - two_s) / ((two_s - 1.0) * pf.ln());
    let tail = value.norm() * (tail_sum.exp() - 1.0);
    check_tol("M-tilde Euler product", tail, params.tol)?;
    Ok(Evaluation { value, tail_bound: tail })
}

/// Harmonic double series over `n, m <= cutoff` with `m` in `I(n)`, in the
/// reparametrization `m = kernel(n) r^2`, at level 1.
pub fn mtilde_harmonic(case: CoeffCase, s: Complex64, z1: Complex64, z2: Complex64, cutoff: u64) -> Result<Evaluation> {
    require_half_plane("mtilde_harmonic", s)?;
    if cutoff == 0 {
        return Err(Error::InvalidParameter("cutoff must be positive".into()));
    }
    let mut ctx = CoeffContext::new();
    let (sigma, t) = (s.re, s.im);
    let mut terms: Vec<(u64, u64, Complex64)> = Vec::new();
    for n in 1..=cutoff {
        let sq = square_parts(n);
        let weight_n = (sq.r_plus as f64).powf(-2.0 * sigma) * Complex64::new(0.0, 2.0 * t * (sq.r_minus as f64).ln()).exp();
        let jn = j_set(1, n);
        let c1: Vec<Complex64> = jn.iter().map(|&x| ctx.c_coeff_n(case, z1, 1, n, x)).collect();
        let mut r = 1u64;
        while sq.kernel * r * r <= cutoff {
            let m = sq.kernel * r * r;
            let mut inner = ComplexSum::new();
            for (k, &x) in jn.iter().enumerate() {
                if m % x == 0 && c1[k] != Complex64::new(0.0, 0.0) {
                    inner.add(c1[k] * ctx.c_coeff_n(case, z2, 1, m, x));
                }
            }
            let w = weight_n * (-2.0 * s * (r as f64).ln()).exp();
            terms.push((n.max(m), n, inner.value() * w));
            r += 1;
        }
    }
    terms.sort_unstable_by_key(|t| (t.0, t.1));
    let value = terms.iter().map(|t| t.2).collect::<ComplexSum>().value();
    let tail = terms.iter().filter(|t| 2 * t.0 > cutoff).map(|t| t.2.norm()).sum::<f64>();
    Ok(Evaluation { value, tail_bound: tail })
}
