//! Normalized Hecke eigenvalues and Satake parameters of primitive forms.

pub mod curve;
pub mod qexp;

use std::fmt;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::primes::{factorize, is_squarefree, primes_up_to, spf_table};

/// Largest `p_max` accepted by the built-in constructors.
pub const MAX_P: u64 = 100_000;

const DELIGNE_SLACK: f64 = 1e-12;

/// A raw Fourier coefficient as stored or ingested.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RawCoeff {
    Int(i128),
    Real(f64),
}

impl RawCoeff {
    pub fn to_f64(self) -> f64 {
        match self {
            RawCoeff::Int(v) => v as f64,
            RawCoeff::Real(v) => v,
        }
    }
}

impl fmt::Display for RawCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RawCoeff::Int(v) => write!(f, "{v}"),
            RawCoeff::Real(v) => write!(f, "{v:?}"),
        }
    }
}

impl std::str::FromStr for RawCoeff {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let s = s.trim();
        if let Ok(v) = s.parse::<i128>() {
            return Ok(RawCoeff::Int(v));
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(RawCoeff::Real(v)),
            _ => Err(format!("cannot parse coefficient `{s}`")),
        }
    }
}

/// Roots of the local Euler factor at `p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SatakePair {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl SatakePair {
    /// Roots of `x^2 - eta x + 1` (good prime) or `(eta, 0)` (bad prime).
    ///
    /// Root with nonnegative imaginary part first; a real double root is
    /// returned twice.
    pub fn from_eta(eta: f64, bad: bool) -> SatakePair {
        if bad {
            return SatakePair { alpha: Complex64::new(eta, 0.0), beta: Complex64::new(0.0, 0.0) };
        }
        let disc = (4.0 - eta * eta).max(0.0);
        let im = disc.sqrt() / 2.0;
        let re = eta / 2.0;
        SatakePair { alpha: Complex64::new(re, im), beta: Complex64::new(re, -im) }
    }
}

/// A primitive form with normalized eigenvalues `eta(p) = a_p / p^{(k-1)/2}`
/// for every prime `p <= p_max`.
#[derive(Clone, Debug)]
pub struct ModularForm {
    level: u64,
    weight: u32,
    label: String,
    p_max: u64,
    primes: Vec<u64>,
    raw: Vec<RawCoeff>,
    eta_at: Vec<f64>,
}

impl ModularForm {
    /// Builds a form from raw coefficients at every prime up to the last one given.
    pub fn from_raw(level: u64, weight: u32, label: &str, rows: Vec<(u64, RawCoeff)>) -> Result<ModularForm> {
        if level == 0 || !is_squarefree(level) {
            return Err(Error::LevelNotSquarefree(level));
        }
        if weight == 0 || weight % 2 == 1 {
            return Err(Error::InvalidParameter(format!("weight {weight} must be even and positive")));
        }
        let p_max = rows.last().map(|r| r.0).unwrap_or(0);
        if p_max < 2 {
            return Err(Error::InvalidParameter("no eigenvalues supplied".into()));
        }
        let primes = primes_up_to(p_max);
        if primes.len() != rows.len() || primes.iter().zip(&rows).any(|(p, r)| *p != r.0) {
            let missing = primes.iter().find(|p| !rows.iter().any(|r| r.0 == **p));
            return Err(Error::Parse {
                line: 0,
                msg: match missing {
                    Some(p) => format!("eigenvalue for prime {p} missing"),
                    None => "rows must be exactly the primes up to p_max, increasing".into(),
                },
            });
        }
        let mut eta_at = vec![f64::NAN; p_max as usize + 1];
        let half = (weight as f64 - 1.0) / 2.0;
        for &(p, a) in &rows {
            let eta = a.to_f64() / (p as f64).powf(half);
            let ok = if level % p == 0 {
                (eta.abs() - (p as f64).powf(-0.5)).abs() <= DELIGNE_SLACK
            } else {
                eta.abs() <= 2.0 + DELIGNE_SLACK
            };
            if !ok || !eta.is_finite() {
                return Err(Error::DeligneViolation { label: label.to_string(), p, a_p: a.to_f64() });
            }
            eta_at[p as usize] = eta;
        }
        Ok(ModularForm {
            level,
            weight,
            label: label.to_string(),
            p_max,
            primes,
            raw: rows.into_iter().map(|r| r.1).collect(),
            eta_at,
        })
    }

    pub fn level(&self) -> u64 {
        self.level
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Eigenvalues are stored for every prime `<= p_max`.
    pub fn p_max(&self) -> u64 {
        self.p_max
    }

    /// Extends the declared coverage to `bound` when no prime lies in between.
    pub(crate) fn with_bound(mut self, bound: u64) -> ModularForm {
        if bound > self.p_max && primes_up_to(bound).len() == self.primes.len() {
            self.p_max = bound;
        }
        self
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    /// `(p, raw a_p)` for every stored prime.
    pub fn raw_coefficients(&self) -> impl Iterator<Item = (u64, RawCoeff)> + '_ {
        self.primes.iter().copied().zip(self.raw.iter().copied())
    }

    pub fn is_bad(&self, p: u64) -> bool {
        self.level % p == 0
    }

    /// `eta(p)` at a stored prime.
    pub fn eta_p(&self, p: u64) -> Result<f64> {
        match self.eta_at.get(p as usize) {
            Some(v) if !v.is_nan() => Ok(*v),
            _ if p > self.p_max() => Err(Error::EigenvalueRange { p, p_max: self.p_max() }),
            _ => Err(Error::NotPrime(p)),
        }
    }

    /// `eta(p^r)` by the Hecke recursion (good `p`) or powering (bad `p`).
    pub fn eta_prime_power(&self, p: u64, r: u32) -> Result<f64> {
        let e = self.eta_p(p)?;
        if self.is_bad(p) {
            return Ok(e.powi(r as i32));
        }
        let (mut prev, mut cur) = (0.0, 1.0);
        for _ in 0..r {
            let next = e * cur - prev;
            prev = cur;
            cur = next;
        }
        Ok(cur)
    }

    pub fn eta(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidParameter("eta(0) is undefined".into()));
        }
        factorize(n).into_iter().try_fold(1.0, |acc, (p, e)| Ok(acc * self.eta_prime_power(p, e)?))
    }

    /// `eta(n)` for `0 <= n <= n_max` (index 0 is 0) by a multiplicative sieve.
    pub fn eta_table(&self, n_max: u64) -> Result<Vec<f64>> {
        let n = n_max as usize;
        let spf = spf_table(n);
        let mut t = vec![0.0; n + 1];
        if n >= 1 {
            t[1] = 1.0;
        }
        for m in 2..=n {
            let p = spf[m] as usize;
            let (mut q, mut e) = (m, 0u32);
            while q % p == 0 {
                q /= p;
                e += 1;
            }
            t[m] = t[q] * self.eta_prime_power(p as u64, e)?;
        }
        Ok(t)
    }

    pub fn satake(&self, p: u64) -> Result<SatakePair> {
        Ok(SatakePair::from_eta(self.eta_p(p)?, self.is_bad(p)))
    }

    /// Writes the eigenvalue CSV understood by [`load_form`].
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "#level={},weight={},label={}", self.level, self.weight, self.label)?;
        for (p, a) in self.raw_coefficients() {
            writeln!(w, "{p},{a}")?;
        }
        Ok(())
    }
}

/// Built-in forms: `delta` (level 1, weight 12) and `11a` (level 11, weight 2).
pub fn build_builtin(id: &str, p_max: u64) -> Result<ModularForm> {
    if p_max < 2 {
        return Err(Error::InvalidParameter(format!("p_max = {p_max} must be at least 2")));
    }
    if p_max > MAX_P {
        return Err(Error::PrimeCapExceeded { requested: p_max, cap: MAX_P });
    }
    let primes = primes_up_to(p_max);
    match id {
        "delta" => {
            let tau = qexp::delta_qexp(p_max as usize)?;
            let rows = primes.iter().map(|&p| (p, RawCoeff::Int(tau[p as usize]))).collect();
            Ok(ModularForm::from_raw(1, 12, "delta", rows)?.with_bound(p_max))
        }
        "11a" => {
            let rows = primes.iter().map(|&p| (p, RawCoeff::Int(curve::CURVE_11A.ap(p) as i128))).collect();
            Ok(ModularForm::from_raw(11, 2, "11a", rows)?.with_bound(p_max))
        }
        other => Err(Error::UnknownForm(other.to_string())),
    }
}

pub fn parse_form_csv(text: &str) -> Result<ModularForm> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
    let header = header
        .strip_prefix('#')
        .ok_or(Error::Parse { line: 1, msg: "header must start with `#level=`".into() })?;
    let (mut level, mut weight, mut label) = (None, None, None);
    let mut rest = header;
    while !rest.is_empty() {
        let (key, tail) = rest.split_once('=').ok_or(Error::Parse { line: 1, msg: format!("bad header field `{rest}`") })?;
        let bad = |m: &str| Error::Parse { line: 1, msg: m.to_string() };
        match key.trim() {
            "label" => {
                label = Some(tail.trim().to_string());
                rest = "";
            }
            k => {
                let (val, tail) = tail.split_once(',').unwrap_or((tail, ""));
                match k {
                    "level" => level = Some(val.trim().parse::<u64>().map_err(|_| bad("bad level"))?),
                    "weight" => weight = Some(val.trim().parse::<u32>().map_err(|_| bad("bad weight"))?),
                    other => return Err(bad(&format!("unknown header key `{other}`"))),
                }
                rest = tail;
            }
        }
    }
    let missing = |k: &str| Error::Parse { line: 1, msg: format!("header lacks `{k}`") };
    let level = level.ok_or_else(|| missing("level"))?;
    let weight = weight.ok_or_else(|| missing("weight"))?;
    let label = label.unwrap_or_else(|| "unnamed".into());
    if level == 0 || !is_squarefree(level) {
        return Err(Error::LevelNotSquarefree(level));
    }

    let mut rows: Vec<(u64, RawCoeff)> = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |m: String| Error::Parse { line: i + 1, msg: m };
        let (p, a) = line.split_once(',').ok_or_else(|| err(format!("expected `p,a_p`, got `{line}`")))?;
        let p: u64 = p.trim().parse().map_err(|_| err(format!("bad prime `{p}`")))?;
        let a: RawCoeff = a.parse().map_err(err)?;
        if let Some(&(last, _)) = rows.last() {
            if p <= last {
                return Err(err(format!("primes must be strictly increasing ({p} after {last})")));
            }
        }
        rows.push((p, a));
    }
    ModularForm::from_raw(level, weight, &label, rows)
}

pub fn load_form(path: impl AsRef<Path>) -> Result<ModularForm> {
    parse_form_csv(&std::fs::read_to_string(path)?)
}
