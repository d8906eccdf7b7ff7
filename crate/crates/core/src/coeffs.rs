//! Generating coefficients `h_n`, `H_n`, the local values `frak_h_z(p^r)`,
//! the expansion coefficients `c_{z,x}(n)` and the Dirichlet coefficients
//! `l_z(n)` of `exp((iz/2) L(s))`, where `L` is `L'/L` or `log L`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::forms::ModularForm;
use crate::primes::{factorize, spf_table};

/// Largest generating-coefficient index served.
pub const MAX_COEFF_INDEX: u32 = 512;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoeffCase {
    /// `L'/L`; coefficients `h_n(-(iz/2) log p)`.
    LogDeriv,
    /// `log L`; coefficients `H_n(iz/2)`.
    Log,
}

impl CoeffCase {
    pub const ALL: [CoeffCase; 2] = [CoeffCase::LogDeriv, CoeffCase::Log];

    pub fn tag(self) -> u8 {
        match self {
            CoeffCase::LogDeriv => 0,
            CoeffCase::Log => 1,
        }
    }

    pub fn from_tag(t: u8) -> Option<CoeffCase> {
        match t {
            0 => Some(CoeffCase::LogDeriv),
            1 => Some(CoeffCase::Log),
            _ => None,
        }
    }
}

impl fmt::Display for CoeffCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoeffCase::LogDeriv => "log_deriv",
            CoeffCase::Log => "log",
        })
    }
}

impl FromStr for CoeffCase {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "log" => Ok(CoeffCase::Log),
            "log_deriv" | "logderiv" => Ok(CoeffCase::LogDeriv),
            _ => Err(format!("unknown case `{s}` (expected `log` or `log_deriv`)")),
        }
    }
}

/// `h_n(x)` (log-derivative case) or `H_n(x)` (log case).
pub fn gen_coeff(case: CoeffCase, n: u32, x: Complex64) -> Complex64 {
    match case {
        CoeffCase::Log => {
            let mut acc = ONE;
            for j in 0..n {
                acc *= (x + j as f64) / (j as f64 + 1.0);
            }
            acc
        }
        CoeffCase::LogDeriv => {
            if n == 0 {
                return ONE;
            }
            // term_r = C(n-1, r-1) x^r / r!, built by ratios
            let mut term = x;
            let mut acc = x;
            for r in 1..n {
                term *= x * ((n - r) as f64 / (r as f64 * (r as f64 + 1.0)));
                acc += term;
            }
            acc
        }
    }
}

/// Argument fed to the generating coefficient at prime `p`.
pub fn frak_h_arg(case: CoeffCase, z: Complex64, p: u64) -> Complex64 {
    match case {
        CoeffCase::Log => I * z / 2.0,
        CoeffCase::LogDeriv => -(I * z / 2.0) * (p as f64).ln(),
    }
}

pub fn frak_h(case: CoeffCase, z: Complex64, p: u64, r: u32) -> Complex64 {
    gen_coeff(case, r, frak_h_arg(case, z, p))
}

/// Prime-power pieces of `n` with square part split off.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SquareDecomposition {
    /// Largest `r` with `r^2 | n`.
    pub r_minus: u64,
    /// Least `r` with `n | r^2`.
    pub r_plus: u64,
    /// Squarefree kernel `r_plus / r_minus`.
    pub kernel: u64,
}

pub fn square_parts(n: u64) -> SquareDecomposition {
    let (mut r_minus, mut kernel) = (1u64, 1u64);
    for (p, e) in factorize(n) {
        r_minus *= p.pow(e / 2);
        if e % 2 == 1 {
            kernel *= p;
        }
    }
    SquareDecomposition { r_minus, r_plus: r_minus * kernel, kernel }
}

/// `J_N(n)` in increasing order.
pub fn j_set(level: u64, n: u64) -> Vec<u64> {
    let mut out = vec![1u64];
    for (p, e) in factorize(n) {
        let exps: Vec<u32> = if level % p == 0 { vec![e] } else { (0..=e).rev().step_by(2).collect() };
        out = out.iter().flat_map(|&m| exps.iter().map(move |&k| m * p.pow(k))).collect();
    }
    out.sort_unstable();
    out
}

/// `m` lies in `I_N(n)`: same exponent parity at every prime, equal exponents at `p | N`.
pub fn in_i_set(level: u64, n: u64, m: u64) -> bool {
    let fm = factorize(m);
    let fnn = factorize(n);
    let v = |f: &[(u64, u32)], p: u64| f.iter().find(|t| t.0 == p).map(|t| t.1).unwrap_or(0);
    fm.iter().chain(fnn.iter()).all(|&(p, _)| {
        let (a, b) = (v(&fnn, p), v(&fm, p));
        if level % p == 0 {
            a == b
        } else {
            a % 2 == b % 2
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct HKey {
    case: CoeffCase,
    re: u64,
    im: u64,
    p: u64,
}

/// Per-computation memo for `frak_h`, keyed on the exact bits of `z`.
///
/// Not shared across threads; create one per worker.
#[derive(Debug, Default)]
pub struct CoeffContext {
    h: HashMap<HKey, Vec<Complex64>>,
}

impl CoeffContext {
    pub fn new() -> Self {
        Self::default()
    }

    /// `frak_h_z(p^r)` for `r = 0..=r_max`.
    pub fn h_values(&mut self, case: CoeffCase, z: Complex64, p: u64, r_max: u32) -> &[Complex64] {
        let key = HKey { case, re: z.re.to_bits(), im: z.im.to_bits(), p };
        let v = self.h.entry(key).or_default();
        if v.len() <= r_max as usize {
            let x = frak_h_arg(case, z, p);
            for r in v.len() as u32..=r_max {
                v.push(gen_coeff(case, r, x));
            }
        }
        &v[..=r_max as usize]
    }

    pub fn frak_h(&mut self, case: CoeffCase, z: Complex64, p: u64, r: u32) -> Complex64 {
        self.h_values(case, z, p, r)[r as usize]
    }

    /// `c^N_{z, p^a}(p^r)`.
    pub fn c_coeff(&mut self, case: CoeffCase, z: Complex64, level: u64, p: u64, r: u32, a: u32) -> Complex64 {
        if level % p == 0 {
            return if r == a { self.frak_h(case, z, p, r) } else { ZERO };
        }
        if a > r || (r - a) % 2 == 1 {
            return ZERO;
        }
        let h = self.h_values(case, z, p, r + 1);
        c_from_h(h, r, a)
    }

    /// `c^N_{z,x}(n)`; zero unless `x` is in `J_N(n)`.
    pub fn c_coeff_n(&mut self, case: CoeffCase, z: Complex64, level: u64, n: u64, x: u64) -> Complex64 {
        if n % x != 0 {
            return ZERO;
        }
        let mut acc = ONE;
        for (p, e) in factorize(n) {
            let a = crate::primes::valuation(x, p);
            acc *= self.c_coeff(case, z, level, p, e, a);
            if acc == ZERO {
                break;
            }
        }
        acc
    }

    /// `l_z(p^r)`.
    pub fn l_local(&mut self, case: CoeffCase, z: Complex64, form: &ModularForm, p: u64, r: u32) -> Result<Complex64> {
        let eta = form.eta_p(p)?;
        let bad = form.is_bad(p);
        let h = self.h_values(case, z, p, r + 1);
        Ok(l_local_from_h(h, eta, bad, r))
    }

    pub fn l_coeff(&mut self, case: CoeffCase, z: Complex64, form: &ModularForm, n: u64) -> Result<Complex64> {
        let mut acc = ONE;
        for (p, e) in factorize(n) {
            acc *= self.l_local(case, z, form, p, e)?;
        }
        Ok(acc)
    }
}

fn c_from_h(h: &[Complex64], r: u32, a: u32) -> Complex64 {
    let i = ((r - a) / 2) as usize;
    let j = ((r + a) / 2) as usize;
    let lead = h[i] * h[j];
    if i == 0 {
        lead
    } else {
        lead - h[i - 1] * h[j + 1]
    }
}

/// `l_z(p^r) = sum_a c(p^r, p^a) eta(p^a)`; `h` must hold indices `0..=r+1`.
fn l_local_from_h(h: &[Complex64], eta: f64, bad: bool, r: u32) -> Complex64 {
    if bad {
        return h[r as usize] * eta.powi(r as i32);
    }
    // eta(p^a) for a = 0..=r
    let mut etas = Vec::with_capacity(r as usize + 1);
    let (mut prev, mut cur) = (0.0, 1.0);
    for _ in 0..=r {
        etas.push(cur);
        let next = eta * cur - prev;
        prev = cur;
        cur = next;
    }
    let mut acc = ZERO;
    let mut a = r as i64;
    while a >= 0 {
        acc += c_from_h(h, r, a as u32) * etas[a as usize];
        a -= 2;
    }
    acc
}

/// `l_z(p^r)` for `r = 0..=r_max` at one prime.
pub fn l_local_values(case: CoeffCase, z: Complex64, form: &ModularForm, p: u64, r_max: u32) -> Result<Vec<Complex64>> {
    let eta = form.eta_p(p)?;
    let bad = form.is_bad(p);
    let x = frak_h_arg(case, z, p);
    let h: Vec<Complex64> = (0..=r_max + 1).map(|r| gen_coeff(case, r, x)).collect();
    Ok((0..=r_max).map(|r| l_local_from_h(&h, eta, bad, r)).collect())
}

pub fn c_coeff(case: CoeffCase, z: Complex64, level: u64, p: u64, r: u32, a: u32) -> Complex64 {
    CoeffContext::new().c_coeff(case, z, level, p, r, a)
}

pub fn c_coeff_n(case: CoeffCase, z: Complex64, level: u64, n: u64, x: u64) -> Complex64 {
    CoeffContext::new().c_coeff_n(case, z, level, n, x)
}

pub fn l_coeff(case: CoeffCase, z: Complex64, form: &ModularForm, n: u64) -> Result<Complex64> {
    CoeffContext::new().l_coeff(case, z, form, n)
}

/// `l_z(n)` for `0 <= n <= n_max` (index 0 holds 0), by a multiplicative sieve.
pub fn l_table(case: CoeffCase, z: Complex64, form: &ModularForm, n_max: u64) -> Result<Vec<Complex64>> {
    let n = n_max as usize;
    let spf = spf_table(n);
    let mut t = vec![ZERO; n + 1];
    if n == 0 {
        return Ok(t);
    }
    t[1] = ONE;
    let mut local: HashMap<u64, Vec<Complex64>> = HashMap::new();
    for m in 2..=n {
        let p = spf[m] as usize;
        let (mut q, mut e) = (m, 0u32);
        while q % p == 0 {
            q /= p;
            e += 1;
        }
        if q == 1 {
            // m = p^e is reached in increasing e, so the local list grows one step at a time.
            let vals: &Vec<Complex64> = if e == 1 {
                let mut r_max = 1;
                while (p as u64).pow(r_max + 1) <= n_max {
                    r_max += 1;
                }
                &*local.entry(p as u64).or_insert(l_local_values(case, z, form, p as u64, r_max)?)
            } else {
                &local[&(p as u64)]
            };
            t[m] = vals[e as usize];
        } else {
            t[m] = t[q] * t[m / q];
        }
    }
    Ok(t)
}

/// Independent path for `l_z(n)`: per prime, exponentiate `(iz/2)` times the
/// local power series of `L` formally and read off the coefficient.
pub fn l_coeff_oracle(case: CoeffCase, z: Complex64, form: &ModularForm, n: u64) -> Result<Complex64> {
    let w = I * z / 2.0;
    let mut acc = ONE;
    for (p, v) in factorize(n) {
        let eta = form.eta_p(p)?;
        let v = v as usize;
        // power sums s_k = alpha^k + beta^k
        let mut s = vec![0.0; v + 1];
        if form.is_bad(p) {
            for (k, sk) in s.iter_mut().enumerate() {
                *sk = eta.powi(k as i32);
            }
        } else {
            s[0] = 2.0;
            if v >= 1 {
                s[1] = eta;
            }
            for k in 2..=v {
                s[k] = eta * s[k - 1] - s[k - 2];
            }
        }
        let logp = (p as f64).ln();
        let a: Vec<Complex64> = (0..=v)
            .map(|k| {
                if k == 0 {
                    return ZERO;
                }
                let ak = match case {
                    CoeffCase::Log => s[k] / k as f64,
                    CoeffCase::LogDeriv => -logp * s[k],
                };
                w * ak
            })
            .collect();
        let mut b = vec![ZERO; v + 1];
        b[0] = ONE;
        for m in 1..=v {
            let mut t = ZERO;
            for k in 1..=m {
                t += a[k] * (k as f64) * b[m - k];
            }
            b[m] = t / m as f64;
        }
        acc *= b[v];
    }
    Ok(acc)
}
