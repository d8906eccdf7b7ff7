//! Empirical experiments: averages over character twists and over form
//! families, compared against the characteristic functions and densities.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::characters::CharacterGroup;
use crate::coeffs::CoeffCase;
use crate::density::{integrate_against, psi, ComplexGrid, GridMeaning, TestFunction};
use crate::error::{Error, Result};
use crate::forms::{ModularForm, RawCoeff};
use crate::lfun::{g_plus_table, g_plus_with_table, EulerData, EvalParams, Twist};
use crate::mtilde::{mtilde_harmonic, mtilde_series, MtildeParams};
use crate::primes::{gcd, is_prime, phi, primes_up_to, tau, tau3};
use crate::sum::ComplexSum;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Deviation of `sum omega` from `phi(N)/N` beyond which a family is flagged.
pub const OMEGA_SUM_TOLERANCE: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// `Re(s) > 1`: Euler products, unconditional limit theorems.
    Rigorous,
    /// `1/2 < Re(s) <= 1`: smoothed Dirichlet sums; output is illustrative only.
    Exploratory,
}

impl Mode {
    pub fn for_sigma(sigma: f64) -> Result<Mode> {
        if sigma > 1.0 {
            Ok(Mode::Rigorous)
        } else if sigma > 0.5 {
            Ok(Mode::Exploratory)
        } else {
            Err(Error::Regime { op: "averaging", re: sigma, bound: 0.5, hint: "no evaluator at or left of the critical line" })
        }
    }
}

/// One empirical-versus-theoretical comparison, emitted as a JSON line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub experiment: String,
    pub mode: Mode,
    pub empirical: Complex64,
    pub theoretical: Complex64,
    pub abs_error: f64,
    pub modulus_or_level: u64,
    pub parameters: Value,
    /// Experiment-specific extra quantities.
    #[serde(default)]
    pub details: Value,
}

impl ComparisonRecord {
    fn new(experiment: &str, mode: Mode, empirical: Complex64, theoretical: Complex64, modulus_or_level: u64, parameters: Value) -> Self {
        ComparisonRecord {
            experiment: experiment.to_string(),
            mode,
            empirical,
            theoretical,
            abs_error: (empirical - theoretical).norm(),
            modulus_or_level,
            parameters,
            details: Value::Null,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AverageParams {
    /// Cutoffs for the per-twist values (`p_max` for Euler products; `n_max`, `x` for smoothed sums).
    pub eval: EvalParams,
    /// Cutoffs for the theoretical side; `None` matches `eval.p_max`.
    pub mtilde: Option<MtildeParams>,
    pub include_principal: bool,
    /// Cutoff of the harmonic double series.
    pub harmonic_cutoff: u64,
}

impl Default for AverageParams {
    fn default() -> Self {
        AverageParams { eval: EvalParams::default(), mtilde: None, include_principal: true, harmonic_cutoff: 2000 }
    }
}

impl AverageParams {
    fn mtilde_for(&self, p_cap: u64, avoid: Option<u64>) -> MtildeParams {
        let mut mp = self.mtilde.unwrap_or(MtildeParams {
            n_max: self.eval.p_max.min(p_cap),
            p_max: self.eval.p_max.min(p_cap),
            ..MtildeParams::default()
        });
        mp.avoid_prime = avoid;
        mp
    }
}

fn check_twist_modulus(form: &ModularForm, m: u64) -> Result<()> {
    if gcd(m, form.level()) != 1 {
        return Err(Error::Gcd(format!("modulus {m} shares a factor with level {}", form.level())));
    }
    Ok(())
}

/// `frak_L(f x chi, sigma)` for every character of `group`, in index order
/// (principal character first, optionally dropped). Rigorous regime only.
pub fn twist_values(case: CoeffCase, form: &ModularForm, group: &CharacterGroup, s: Complex64, p_max: u64, include_principal: bool) -> Result<Vec<Complex64>> {
    if Mode::for_sigma(s.re)? != Mode::Rigorous {
        return Err(Error::Regime { op: "twist_values", re: s.re, bound: 1.0, hint: "Euler products need Re(s) > 1" });
    }
    let data = EulerData::new(form, s, p_max)?;
    let skip = usize::from(!include_principal);
    let idx: Vec<_> = group.indices().skip(skip).collect();
    Ok(idx.par_iter().map(|&j| data.eval(case, Some(Twist { group, j }))).collect())
}

/// `psi_{z1,z2}(frak_L)` for every twist; exploratory mode builds it from smoothed sums of
/// `g(-conj z1)` and `g(z2)` via `psi = conj(g(-conj z1)) g(z2)`.
fn twist_psi(case: CoeffCase, form: &ModularForm, group: &CharacterGroup, s: Complex64, z1: Complex64, z2: Complex64, params: &AverageParams) -> Result<Vec<Complex64>> {
    match Mode::for_sigma(s.re)? {
        Mode::Rigorous => Ok(twist_values(case, form, group, s, params.eval.p_max, params.include_principal)?
            .into_iter()
            .map(|w| psi(z1, z2, w))
            .collect()),
        Mode::Exploratory => {
            let t1 = g_plus_table(case, form, s, -z1.conj(), &params.eval)?;
            let t2 = g_plus_table(case, form, s, z2, &params.eval)?;
            let skip = usize::from(!params.include_principal);
            let idx: Vec<_> = group.indices().skip(skip).collect();
            idx.par_iter()
                .map(|&j| {
                    let tw = Some(Twist { group, j });
                    let a = g_plus_with_table(&t1, tw, s, &params.eval)?;
                    let b = g_plus_with_table(&t2, tw, s, &params.eval)?;
                    Ok(a.value.conj() * b.value)
                })
                .collect()
        }
    }
}

fn mean(values: &[Complex64]) -> Complex64 {
    let acc: ComplexSum = values.iter().copied().collect();
    acc.value() / values.len() as f64
}

/// `Avg_{chi in Gamma_m} psi_{z1,z2}(frak_L(f x chi, s))` against `M~(s, z1, z2)` with `m` removed.
pub fn avg_twists(case: CoeffCase, form: &ModularForm, m: u64, s: Complex64, z1: Complex64, z2: Complex64, params: &AverageParams) -> Result<ComparisonRecord> {
    check_twist_modulus(form, m)?;
    let mode = Mode::for_sigma(s.re)?;
    let group = CharacterGroup::new(m)?;
    let vals = twist_psi(case, form, &group, s, z1, z2, params)?;
    let empirical = mean(&vals);
    let mp = params.mtilde_for(form.p_max(), Some(m));
    let theory = mtilde_series(case, form, s, z1, z2, &mp)?;
    let mut rec = ComparisonRecord::new(
        "avg_twists",
        mode,
        empirical,
        theory.value,
        m,
        json!({
            "case": case, "form": form.label(), "s": s, "z1": z1, "z2": z2,
            "include_principal": params.include_principal, "eval": params.eval, "mtilde": mp,
        }),
    );
    rec.details = json!({ "characters": vals.len(), "theoretical_tail_bound": theory.tail_bound });
    Ok(rec)
}

/// Direct-loop oracle for `avg_twists` in the rigorous regime: characters are
/// rebuilt from scratch by repeated multiplication and `frak_L` is summed prime by prime.
pub fn avg_twists_direct(case: CoeffCase, form: &ModularForm, m: u64, s: Complex64, z1: Complex64, z2: Complex64, p_max: u64, include_principal: bool) -> Result<Complex64> {
    check_twist_modulus(form, m)?;
    if !is_prime(m) || s.re <= 1.0 {
        return Err(Error::InvalidParameter("direct oracle needs prime m and Re(s) > 1".into()));
    }
    let order = m - 1;
    let g = (2..m)
        .find(|&g| {
            let mut x = 1;
            (1..order).all(|_| {
                x = x * g % m;
                x != 1
            })
        })
        .expect("prime modulus has a primitive root");
    // discrete logs by walking powers of g
    let mut dlog = vec![0u64; m as usize];
    let mut x = 1u64;
    for e in 0..order {
        dlog[x as usize] = e;
        x = x * g % m;
    }
    let mut acc = ComplexSum::new();
    let mut count = 0usize;
    for j in 0..order {
        if j == 0 && !include_principal {
            continue;
        }
        let mut l = Complex64::new(0.0, 0.0);
        for p in primes_up_to(p_max) {
            if p % m == 0 {
                continue;
            }
            let chi = Complex64::from_polar(1.0, 2.0 * PI * ((j * dlog[(p % m) as usize]) % order) as f64 / order as f64);
            let sp = form.satake(p)?;
            let u = chi * (-s * (p as f64).ln()).exp();
            for r in [sp.alpha, sp.beta] {
                let gu = r * u;
                if gu == Complex64::new(0.0, 0.0) {
                    continue;
                }
                l += match case {
                    CoeffCase::Log => -(ONE - gu).ln(),
                    CoeffCase::LogDeriv => -(p as f64).ln() * gu / (ONE - gu),
                };
            }
        }
        acc.add(psi(z1, z2, l));
        count += 1;
    }
    Ok(acc.value() / count as f64)
}

/// For each test function: the average of `Phi(frak_L(f x chi, sigma))` over `Gamma_m`
/// against the integral of `Phi` against `density` (which should omit `m`).
pub fn equidist_test(case: CoeffCase, form: &ModularForm, m: u64, sigma: f64, density: &ComplexGrid, phis: &[TestFunction], params: &AverageParams) -> Result<Vec<ComparisonRecord>> {
    check_twist_modulus(form, m)?;
    if sigma <= 1.0 {
        return Err(Error::Regime { op: "equidist_test", re: sigma, bound: 1.0, hint: "equidistribution is only tested in the unconditional regime" });
    }
    if density.meaning != GridMeaning::Density || density.case != case || (density.sigma - sigma).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "density grid is ({:?}, {}, sigma {}) but the test asks for ({case}, sigma {sigma})",
            density.meaning, density.case, density.sigma
        )));
    }
    let group = CharacterGroup::new(m)?;
    let vals = twist_values(case, form, &group, Complex64::new(sigma, 0.0), params.eval.p_max, params.include_principal)?;
    phis.iter()
        .map(|phi| {
            let emp: Vec<Complex64> = vals.iter().map(|&w| phi.eval(w)).collect();
            let theory = integrate_against(density, phi)?;
            Ok(ComparisonRecord::new(
                "equidist",
                Mode::Rigorous,
                mean(&emp),
                theory,
                m,
                json!({ "case": case, "form": form.label(), "sigma": sigma, "phi": phi, "eval": params.eval,
                        "grid_extent": density.extent, "grid_size": density.size }),
            ))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaSource {
    Supplied,
    /// Truncated symmetric-square Euler product at `s = 1`; no convergence guarantee.
    SymSquareEstimate,
}

#[derive(Clone, Debug)]
pub struct FamilyMember {
    pub form: ModularForm,
    pub omega: f64,
    pub omega_source: OmegaSource,
}

/// Newforms of one prime level and weight with harmonic weights.
#[derive(Clone, Debug)]
pub struct FormFamily {
    pub level: u64,
    pub weight: u32,
    pub p_max: u64,
    pub forms: Vec<FamilyMember>,
    pub warnings: Vec<String>,
}

impl FormFamily {
    pub fn omega_sum(&self) -> f64 {
        self.forms.iter().map(|f| f.omega).sum()
    }

    /// `phi(N) / N`.
    pub fn expected_omega_sum(&self) -> f64 {
        phi(self.level) as f64 / self.level as f64
    }

    pub fn all_supplied(&self) -> bool {
        self.forms.iter().all(|f| f.omega_source == OmegaSource::Supplied)
    }

    pub fn is_degenerate(&self) -> bool {
        self.warnings.iter().any(|w| w.starts_with("degenerate weights"))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFamily {
    level: u64,
    weight: u32,
    p_max: u64,
    forms: Vec<RawMember>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMember {
    label: String,
    ap: Vec<Value>,
    #[serde(default)]
    omega: Option<f64>,
    #[serde(default)]
    level: Option<u64>,
    #[serde(default)]
    weight: Option<u32>,
}

fn member_rows(m: &RawMember) -> Result<Vec<(u64, RawCoeff)>> {
    m.ap.iter()
        .enumerate()
        .map(|(i, row)| {
            let bad = || Error::Family(format!("form {}: malformed ap row {i}: {row}", m.label));
            let pair = row.as_array().filter(|a| a.len() == 2).ok_or_else(bad)?;
            let p = pair[0].as_u64().ok_or_else(bad)?;
            let a = if let Some(v) = pair[1].as_i64() {
                RawCoeff::Int(v as i128)
            } else {
                RawCoeff::Real(pair[1].as_f64().ok_or_else(bad)?)
            };
            Ok((p, a))
        })
        .collect()
}

/// `2 pi^2 / ((k - 1) N L(Sym^2 f, 1))` with the Euler product truncated at `p_max`.
pub fn omega_sym_square(form: &ModularForm, p_max: u64) -> Result<f64> {
    let mut log_l = 0.0;
    for &p in form.primes().iter().take_while(|&&p| p <= p_max) {
        let eta = form.eta_p(p)?;
        let x = 1.0 / p as f64;
        log_l -= if form.is_bad(p) {
            (1.0 - eta * eta * x).ln()
        } else {
            // (1 - a^2 x)(1 - x)(1 - b^2 x) with a b = 1, a^2 + b^2 = eta^2 - 2
            ((1.0 - (eta * eta - 2.0) * x + x * x) * (1.0 - x)).ln()
        };
    }
    Ok(2.0 * PI * PI / ((form.weight() as f64 - 1.0) * form.level() as f64 * log_l.exp()))
}

pub fn parse_family(text: &str) -> Result<FormFamily> {
    let raw: RawFamily = serde_json::from_str(text).map_err(|e| Error::Family(format!("family JSON: {e}")))?;
    if !is_prime(raw.level) {
        return Err(Error::Family(format!("level {} is not prime", raw.level)));
    }
    if raw.forms.is_empty() {
        return Err(Error::Family("family has no forms".into()));
    }
    let mut warnings = Vec::new();
    let mut forms = Vec::with_capacity(raw.forms.len());
    for m in &raw.forms {
        if m.level.is_some_and(|l| l != raw.level) || m.weight.is_some_and(|k| k != raw.weight) {
            return Err(Error::Family(format!("form {}: level/weight differ from the family's ({}, {})", m.label, raw.level, raw.weight)));
        }
        let form = ModularForm::from_raw(raw.level, raw.weight, &m.label, member_rows(m)?)
            .map_err(|e| Error::Family(format!("form {}: {e}", m.label)))?
            .with_bound(raw.p_max);
        if form.p_max() < raw.p_max {
            return Err(Error::Family(format!("form {}: eigenvalues stop at {} < p_max {}", m.label, form.p_max(), raw.p_max)));
        }
        let (omega, omega_source) = match m.omega {
            Some(w) if w > 0.0 && w.is_finite() => (w, OmegaSource::Supplied),
            Some(w) => return Err(Error::Family(format!("form {}: omega {w} must be positive", m.label))),
            None => (omega_sym_square(&form, raw.p_max)?, OmegaSource::SymSquareEstimate),
        };
        forms.push(FamilyMember { form, omega, omega_source });
    }
    if forms.iter().any(|f| f.omega_source == OmegaSource::SymSquareEstimate) {
        warnings.push(format!(
            "TRUNCATION CAVEAT: some weights come from the symmetric-square Euler product truncated at p <= {}, which need not converge at s = 1",
            raw.p_max
        ));
    }
    if forms.len() == 1 || forms.iter().all(|f| f.omega == 1.0) {
        warnings.push("degenerate weights: single form or all omega = 1; averages reduce to plain evaluations".into());
    }
    let mut fam = FormFamily { level: raw.level, weight: raw.weight, p_max: raw.p_max, forms, warnings };
    let dev = fam.omega_sum() - fam.expected_omega_sum();
    if dev.abs() > OMEGA_SUM_TOLERANCE {
        fam.warnings.push(format!(
            "omega sum {:.6} deviates from phi(N)/N = {:.6} by {:.3e}",
            fam.omega_sum(),
            fam.expected_omega_sum(),
            dev
        ));
    }
    Ok(fam)
}

pub fn load_family(path: impl AsRef<Path>) -> Result<FormFamily> {
    parse_family(&std::fs::read_to_string(path)?)
}

/// `sum_f omega(f) psi_{z1,z2}(frak_L(f, s))` against the harmonic `M~^h(s, z1, z2)`.
pub fn avg_forms(case: CoeffCase, family: &FormFamily, s: Complex64, z1: Complex64, z2: Complex64, params: &AverageParams) -> Result<ComparisonRecord> {
    if family.forms.is_empty() {
        return Err(Error::Family("family has no forms".into()));
    }
    let mode = Mode::for_sigma(s.re)?;
    let mut eval = params.eval;
    eval.p_max = eval.p_max.min(family.p_max);
    eval.n_max = eval.n_max.max(eval.p_max);
    let vals: Vec<Complex64> = family
        .forms
        .iter()
        .map(|m| {
            let v = match mode {
                Mode::Rigorous => psi(z1, z2, EulerData::new(&m.form, s, eval.p_max)?.eval(case, None)),
                Mode::Exploratory => {
                    let a = g_plus_with_table(&g_plus_table(case, &m.form, s, -z1.conj(), &eval)?, None, s, &eval)?;
                    let b = g_plus_with_table(&g_plus_table(case, &m.form, s, z2, &eval)?, None, s, &eval)?;
                    a.value.conj() * b.value
                }
            };
            Ok(v * m.omega)
        })
        .collect::<Result<_>>()?;
    let acc: ComplexSum = vals.into_iter().collect();
    let theory = mtilde_harmonic(case, s, z1, z2, params.harmonic_cutoff)?;
    let mut rec = ComparisonRecord::new(
        "avg_forms",
        mode,
        acc.value(),
        theory.value,
        family.level,
        json!({ "case": case, "s": s, "z1": z1, "z2": z2, "eval": eval, "harmonic_cutoff": params.harmonic_cutoff }),
    );
    rec.details = json!({
        "omega_sum": family.omega_sum(),
        "omega_sum_deviation": family.omega_sum() - family.expected_omega_sum(),
        "theoretical_tail_bound": theory.tail_bound,
        "forms": family.forms.len(),
        "warnings": family.warnings,
    });
    Ok(rec)
}

/// `k^{-5/6} (xy)^{1/4} N^{-1} tau(N)^2 tau_3(gcd(x, y)) log(2xyN)`, constant 1.
pub fn petersson_bound_shape(weight: u32, level: u64, x: u64, y: u64) -> f64 {
    let (xf, yf, nf) = (x as f64, y as f64, level as f64);
    (weight as f64).powf(-5.0 / 6.0) * (xf * yf).powf(0.25) / nf
        * (tau(level) as f64).powi(2)
        * tau3(gcd(x, y)) as f64
        * (2.0 * xf * yf * nf).ln()
}

/// `S(x, y) = sum_f omega(f) eta_f(x) eta_f(y)` against `phi(N)/N delta(x, y)`.
pub fn petersson_check(family: &FormFamily, x: u64, y: u64) -> Result<ComparisonRecord> {
    if x == 0 || y == 0 || gcd(x.saturating_mul(y), family.level) != 1 {
        return Err(Error::Gcd(format!("x = {x}, y = {y} must be positive and coprime to N = {}", family.level)));
    }
    let mut s = 0.0;
    for m in &family.forms {
        s += m.omega * m.form.eta(x)? * m.form.eta(y)?;
    }
    let theory = if x == y { family.expected_omega_sum() } else { 0.0 };
    let mut rec = ComparisonRecord::new(
        "petersson",
        Mode::Rigorous,
        Complex64::new(s, 0.0),
        Complex64::new(theory, 0.0),
        family.level,
        json!({ "x": x, "y": y, "weight": family.weight, "p_max": family.p_max }),
    );
    let shape = petersson_bound_shape(family.weight, family.level, x, y);
    rec.details = json!({
        "bound_shape": shape,
        "error_over_bound": rec.abs_error / shape,
        "omegas_supplied": family.all_supplied(),
        "warnings": family.warnings,
    });
    Ok(rec)
}
