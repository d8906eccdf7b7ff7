//! Local characteristic functions by trapezoidal quadrature, finite-product
//! grids of the global characteristic function, Fourier inversion to the
//! density, integration against test functions, and decay diagnostics.

pub mod io;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::coeffs::CoeffCase;
use crate::error::{Error, Result};
use crate::forms::ModularForm;
use crate::sum::ComplexSum;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Boundary magnitude of a characteristic grid accepted by the auto-extent scan.
pub const BOUNDARY_THRESHOLD: f64 = 1e-10;
/// Density boundary magnitude, relative to the peak, tolerated by the aliasing guard.
pub const ALIAS_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_NODES: usize = 256;
pub const DEFAULT_EXTENT: f64 = 16.0;
pub const DEFAULT_SIZE: usize = 512;
const MAX_EXTENT: f64 = 4096.0;
const MAX_SIZE: usize = 2048;
/// Products below this magnitude are not refined further.
const NEGLIGIBLE: f64 = 1e-60;
/// Local series whose absolute term mass exceeds this fall back to quadrature.
const SERIES_MASS_LIMIT: f64 = 1e4;
const SERIES_R_MAX: usize = 64;
/// Every `CROSS_CHECK_STRIDE`-th grid point is recomputed by pure quadrature.
const CROSS_CHECK_STRIDE: usize = 97;
const CROSS_CHECK_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMeaning {
    /// Samples of the characteristic function in `z`-space.
    Characteristic,
    /// Samples of the density in `w`-space, with `|dw| = dx dy / (2 pi)`.
    Density,
}

impl GridMeaning {
    pub fn tag(self) -> u8 {
        match self {
            GridMeaning::Characteristic => 0,
            GridMeaning::Density => 1,
        }
    }

    pub fn from_tag(t: u8) -> Option<GridMeaning> {
        match t {
            0 => Some(GridMeaning::Characteristic),
            1 => Some(GridMeaning::Density),
            _ => None,
        }
    }
}

/// Square grid on `[-extent, extent)^2`; sample `(j, k)` sits at
/// `((j - n/2) h, (k - n/2) h)` with `h = 2 extent / n`, stored at `k n + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexGrid {
    pub meaning: GridMeaning,
    pub case: CoeffCase,
    pub sigma: f64,
    pub extent: f64,
    pub size: usize,
    pub label: String,
    pub samples: Vec<Complex64>,
    /// Precision warnings raised while filling (not persisted).
    pub warnings: Vec<String>,
}

impl ComplexGrid {
    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.size as f64
    }

    pub fn coord(&self, j: usize) -> f64 {
        (j as f64 - (self.size / 2) as f64) * self.spacing()
    }

    pub fn point(&self, j: usize, k: usize) -> Complex64 {
        Complex64::new(self.coord(j), self.coord(k))
    }

    pub fn at(&self, j: usize, k: usize) -> Complex64 {
        self.samples[k * self.size + j]
    }

    /// Index of the sample at the origin.
    pub fn center(&self) -> (usize, usize) {
        (self.size / 2, self.size / 2)
    }

    /// Largest magnitude on the outermost ring of samples.
    pub fn boundary_max(&self) -> f64 {
        let n = self.size;
        let mut m = 0.0f64;
        for i in 0..n {
            for (j, k) in [(i, 0), (i, n - 1), (0, i), (n - 1, i)] {
                m = m.max(self.at(j, k).norm());
            }
        }
        m
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `h^2 / (2 pi)`: the `|dw|` weight of one cell.
    pub fn cell_measure(&self) -> f64 {
        let h = self.spacing();
        h * h / TAU
    }

    fn validate_shape(&self) -> Result<()> {
        if self.size < 64 || !self.size.is_power_of_two() || self.samples.len() != self.size * self.size {
            return Err(Error::InvalidParameter(format!("grid size {} must be a power of two >= 64", self.size)));
        }
        if !(self.extent > 0.0) {
            return Err(Error::InvalidParameter("grid extent must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    /// Half-width `L`; `None` selects it by doubling from 16.
    pub extent: Option<f64>,
    /// Samples per side; `None` starts at 512 and refines for resolution.
    pub size: Option<usize>,
    /// Prime excluded from the product.
    pub avoid_prime: Option<u64>,
    /// Recompute a deterministic ~1% of points by pure quadrature.
    pub cross_check: bool,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams { extent: None, size: None, avoid_prime: None, cross_check: true }
    }
}

/// Precomputed data for one local factor at fixed `sigma`.
#[derive(Clone, Debug)]
struct LocalFactor {
    /// `b_k = a_k rho^k` where `a_k` are the coefficients of the local `L` in `u`.
    kb: Vec<f64>,
    /// Local `L` on the circle of radius `rho`, at `nodes.len()` equispaced points.
    nodes: Vec<Complex64>,
    max_abs: f64,
}

fn local_values_on_circle(case: CoeffCase, alpha: Complex64, beta: Complex64, p: u64, rho: f64, k: usize) -> Result<Vec<Complex64>> {
    let log_p = (p as f64).ln();
    (0..k)
        .map(|i| {
            let (s, c) = (TAU * i as f64 / k as f64).sin_cos();
            let u = Complex64::new(c, s) * rho;
            let mut acc = ZERO;
            for g in [alpha, beta] {
                if g == ZERO {
                    continue;
                }
                let d = ONE - g * u;
                if d.norm() < 1e-14 {
                    return Err(Error::Singularity(p));
                }
                acc += match case {
                    CoeffCase::Log => -d.ln(),
                    CoeffCase::LogDeriv => -log_p * g * u / d,
                };
            }
            Ok(acc)
        })
        .collect()
}

/// Node count adequate for `exp(i Re(conj(z) F))` with `|z| max|F| = a`.
fn nodes_for(a: f64) -> usize {
    let need = 2.0 * (a + 10.0 * a.cbrt() + 40.0);
    (need.ceil() as usize).next_power_of_two().max(DEFAULT_NODES)
}

impl LocalFactor {
    fn new(case: CoeffCase, form: &ModularForm, sigma: f64, p: u64, z_max: f64) -> Result<LocalFactor> {
        let eta = form.eta_p(p)?;
        let sp = form.satake(p)?;
        let rho = (p as f64).powf(-sigma);
        let log_p = (p as f64).ln();
        let mut s = vec![0.0; SERIES_R_MAX + 1];
        if form.is_bad(p) {
            for (k, v) in s.iter_mut().enumerate() {
                *v = eta.powi(k as i32);
            }
        } else {
            s[0] = 2.0;
            s[1] = eta;
            for k in 2..=SERIES_R_MAX {
                s[k] = eta * s[k - 1] - s[k - 2];
            }
        }
        let mut kb = vec![0.0; SERIES_R_MAX + 1];
        let mut rk = 1.0;
        for k in 1..=SERIES_R_MAX {
            rk *= rho;
            let a = match case {
                CoeffCase::Log => s[k] / k as f64,
                CoeffCase::LogDeriv => -log_p * s[k],
            };
            kb[k] = k as f64 * a * rk;
        }
        let probe = local_values_on_circle(case, sp.alpha, sp.beta, p, rho, 64)?;
        let max_probe = probe.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let k = nodes_for(z_max * max_probe * 1.1);
        let nodes = local_values_on_circle(case, sp.alpha, sp.beta, p, rho, k)?;
        let max_abs = nodes.iter().map(|v| v.norm()).fold(0.0, f64::max);
        Ok(LocalFactor { kb, nodes, max_abs })
    }

    /// Series path; `None` when the absolute term mass makes it unreliable.
    fn series(&self, z: Complex64) -> Option<Complex64> {
        let w1 = Complex64::new(0.0, 0.5) * z;
        let w2 = Complex64::new(0.0, 0.5) * z.conj();
        let mut b1 = [ZERO; SERIES_R_MAX + 1];
        let mut b2 = [ZERO; SERIES_R_MAX + 1];
        b1[0] = ONE;
        b2[0] = ONE;
        let mut acc = ComplexSum::new();
        acc.add(ONE);
        let mut mass = 1.0;
        let mut small = 0;
        for r in 1..=SERIES_R_MAX {
            let (mut t1, mut t2) = (ZERO, ZERO);
            for k in 1..=r {
                t1 += b1[r - k] * self.kb[k];
                t2 += b2[r - k] * self.kb[k];
            }
            b1[r] = t1 * w1 / r as f64;
            b2[r] = t2 * w2 / r as f64;
            let t = b1[r] * b2[r];
            acc.add(t);
            mass += b1[r].norm() * b2[r].norm();
            if mass > SERIES_MASS_LIMIT {
                return None;
            }
            if t.norm() < 1e-18 * acc.value().norm().max(1e-300) {
                small += 1;
                if small == 2 {
                    return Some(acc.value());
                }
            } else {
                small = 0;
            }
        }
        None
    }

    /// Trapezoid path with the node count scaled to `|z|`; `doubled` uses twice as many.
    fn quad(&self, z: Complex64, doubled: bool) -> Complex64 {
        let total = self.nodes.len();
        let mut k = nodes_for(z.norm() * self.max_abs).min(total);
        if doubled {
            k = (2 * k).min(total);
        }
        let stride = total / k;
        let mut acc = ComplexSum::new();
        for v in self.nodes.iter().step_by(stride) {
            let phase = z.re * v.re + z.im * v.im;
            let (s, c) = phase.sin_cos();
            acc.add(Complex64::new(c, s));
        }
        acc.value() / k as f64
    }

    fn eval(&self, z: Complex64) -> Complex64 {
        self.series(z).unwrap_or_else(|| self.quad(z, false))
    }
}

fn product(factors: &[LocalFactor], z: Complex64, pure_quad: bool) -> Complex64 {
    let mut acc = ONE;
    for f in factors {
        acc *= if pure_quad { f.quad(z, true) } else { f.eval(z) };
        if acc.norm() < NEGLIGIBLE {
            break;
        }
    }
    acc
}

/// `(1/K) sum_k exp(i Re(conj(z) G(t_k)))` with `G(t) = F_p(p^{-sigma} t)`.
pub fn mtilde_local_quad(case: CoeffCase, form: &ModularForm, sigma: f64, p: u64, z: Complex64, nodes: usize) -> Result<Complex64> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma = {sigma} must be positive")));
    }
    if nodes < 32 {
        return Err(Error::InvalidParameter(format!("nodes = {nodes} must be at least 32")));
    }
    let sp = form.satake(p)?;
    let vals = local_values_on_circle(case, sp.alpha, sp.beta, p, (p as f64).powf(-sigma), nodes)?;
    let mut acc = ComplexSum::new();
    for v in &vals {
        let (s, c) = (z.re * v.re + z.im * v.im).sin_cos();
        acc.add(Complex64::new(c, s));
    }
    Ok(acc.value() / nodes as f64)
}

/// Quadrature value together with the change under node doubling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadEstimate {
    pub value: Complex64,
    pub doubled_delta: f64,
}

impl QuadEstimate {
    pub fn is_precise(&self) -> bool {
        self.doubled_delta < 1e-12
    }
}

pub fn mtilde_local_quad_checked(case: CoeffCase, form: &ModularForm, sigma: f64, p: u64, z: Complex64, nodes: usize) -> Result<QuadEstimate> {
    let value = mtilde_local_quad(case, form, sigma, p, z, nodes)?;
    let fine = mtilde_local_quad(case, form, sigma, p, z, 2 * nodes)?;
    Ok(QuadEstimate { value, doubled_delta: (value - fine).norm() })
}

/// Scale of the value distribution: per-coordinate standard deviation of the truncated sum.
fn spread(case: CoeffCase, form: &ModularForm, sigma: f64, primes: &[u64]) -> Result<f64> {
    let mut var = 0.0;
    for &p in primes {
        let f = LocalFactor::new(case, form, sigma, p, 0.0)?;
        var += f.kb.iter().enumerate().skip(1).map(|(k, kb)| (kb / k as f64).powi(2)).sum::<f64>();
    }
    Ok((var / 2.0).sqrt())
}

/// Fills the grid from the quadrant `x, y >= 0` (plus the `-L` edges), using
/// `M(conj z) = M(z)` and `M(-z) = conj M(z)` for real local coefficients.
fn fill(factors: &[LocalFactor], extent: f64, n: usize) -> Vec<Complex64> {
    let h = 2.0 * extent / n as f64;
    let half = n / 2;
    // canonical indices: 0 and half..n
    let canon: Vec<usize> = std::iter::once(0).chain(half..n).collect();
    let rows: Vec<Vec<Complex64>> = canon
        .par_iter()
        .map(|&k| {
            let y = (k as f64 - half as f64) * h;
            canon.iter().map(|&j| product(factors, Complex64::new((j as f64 - half as f64) * h, y), false)).collect()
        })
        .collect();
    let slot = |i: usize| if i == 0 { 0 } else { i - half + 1 };
    let mut out = vec![ZERO; n * n];
    for k in 0..n {
        let kc = if k > 0 && k < half { n - k } else { k };
        let row = &rows[slot(kc)];
        for j in 0..n {
            let (jc, flip) = if j > 0 && j < half { (n - j, true) } else { (j, false) };
            let v = row[slot(jc)];
            out[k * n + j] = if flip { v.conj() } else { v };
        }
    }
    out
}

fn boundary_scan(factors: &[LocalFactor], extent: f64, n: usize) -> f64 {
    let h = 2.0 * extent / n as f64;
    let c = |i: usize| (i as f64 - (n / 2) as f64) * h;
    let pts: Vec<Complex64> = (0..n)
        .flat_map(|i| {
            [(i, 0), (i, n - 1), (0, i), (n - 1, i)].into_iter().map(move |(j, k)| Complex64::new(c(j), c(k)))
        })
        .collect();
    pts.par_iter().map(|&z| product(factors, z, false).norm()).reduce(|| 0.0, f64::max)
}

/// Samples of `prod_{p <= p_max} M_{sigma,p}(z)` on an auto-sized square.
pub fn mtilde_grid(case: CoeffCase, form: &ModularForm, sigma: f64, p_max: u64, params: &GridParams) -> Result<ComplexGrid> {
    if !(sigma > 0.5) {
        return Err(Error::Regime { op: "mtilde_grid", re: sigma, bound: 0.5, hint: "the product diverges there" });
    }
    if p_max > form.p_max() {
        return Err(Error::EigenvalueRange { p: p_max, p_max: form.p_max() });
    }
    if let Some(n) = params.size {
        if n < 64 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("grid size {n} must be a power of two >= 64")));
        }
    }
    let primes: Vec<u64> =
        form.primes().iter().copied().filter(|&p| p <= p_max && Some(p) != params.avoid_prime).collect();
    let sd = spread(case, form, sigma, &primes)?;
    let build = |extent: f64| -> Result<Vec<LocalFactor>> {
        primes.iter().map(|&p| LocalFactor::new(case, form, sigma, p, extent * std::f64::consts::SQRT_2)).collect()
    };

    let mut n = params.size.unwrap_or(DEFAULT_SIZE);
    let (extent, factors) = match params.extent {
        Some(l) => {
            if !(l > 0.0) {
                return Err(Error::InvalidParameter("extent must be positive".into()));
            }
            (l, build(l)?)
        }
        None => {
            let mut l = DEFAULT_EXTENT;
            loop {
                let f = build(l)?;
                let b = boundary_scan(&f, l, n);
                if b < BOUNDARY_THRESHOLD {
                    break (l, f);
                }
                if l >= MAX_EXTENT {
                    return Err(Error::Aliasing { magnitude: b, threshold: BOUNDARY_THRESHOLD });
                }
                l *= 2.0;
            }
        }
    };
    if params.size.is_none() {
        // resolve the density out to 8 standard deviations
        while PI * n as f64 / (2.0 * extent) < 8.0 * sd && n < MAX_SIZE {
            n *= 2;
        }
    }
    let samples = fill(&factors, extent, n);
    let mut grid = ComplexGrid {
        meaning: GridMeaning::Characteristic,
        case,
        sigma,
        extent,
        size: n,
        label: form.label().to_string(),
        samples,
        warnings: Vec::new(),
    };
    let b = grid.boundary_max();
    if b >= BOUNDARY_THRESHOLD {
        return Err(Error::Aliasing { magnitude: b, threshold: BOUNDARY_THRESHOLD });
    }
    if params.cross_check {
        let idx: Vec<usize> = (0..n * n).step_by(CROSS_CHECK_STRIDE).collect();
        let worst = idx
            .par_iter()
            .map(|&i| {
                let z = grid.point(i % n, i / n);
                (product(&factors, z, true) - grid.samples[i]).norm()
            })
            .reduce(|| 0.0, f64::max);
        if worst > CROSS_CHECK_TOL {
            grid.warnings.push(format!("quadrature cross-check deviation {worst:e} exceeds {CROSS_CHECK_TOL:e}"));
        }
    }
    Ok(grid)
}

/// `prod_{p <= p_max, p != avoid} M_{sigma,p}(z)` at a single point, by the same
/// per-factor paths as the grid fill.
pub fn mtilde_product(case: CoeffCase, form: &ModularForm, sigma: f64, p_max: u64, z: Complex64, avoid_prime: Option<u64>) -> Result<Complex64> {
    if !(sigma > 0.5) {
        return Err(Error::Regime { op: "mtilde_product", re: sigma, bound: 0.5, hint: "the product diverges there" });
    }
    if p_max > form.p_max() {
        return Err(Error::EigenvalueRange { p: p_max, p_max: form.p_max() });
    }
    let factors: Vec<LocalFactor> = form
        .primes()
        .iter()
        .filter(|&&p| p <= p_max && Some(p) != avoid_prime)
        .map(|&p| LocalFactor::new(case, form, sigma, p, z.norm()))
        .collect::<Result<_>>()?;
    Ok(product(&factors, z, false))
}

/// `M_ab = (h^2 / 2 pi) (-1)^{a+b} FFT2[(-1)^{j+k} M~_jk]`, the discretization of
/// `M(w) = (1/2pi) int M~(z) e^{-i Re(conj(z) w)} dx dy` on the reciprocal grid.
pub fn invert_to_density(grid: &ComplexGrid) -> Result<ComplexGrid> {
    let density = invert_unchecked(grid)?;
    let peak = density.peak();
    let b = density.boundary_max();
    if b > ALIAS_TOLERANCE * peak {
        return Err(Error::Aliasing { magnitude: b / peak, threshold: ALIAS_TOLERANCE });
    }
    Ok(density)
}

fn invert_unchecked(grid: &ComplexGrid) -> Result<ComplexGrid> {
    grid.validate_shape()?;
    if grid.meaning != GridMeaning::Characteristic {
        return Err(Error::InvalidParameter("inversion needs a characteristic-function grid".into()));
    }
    let n = grid.size;
    let sign = |i: usize| if i % 2 == 0 { 1.0 } else { -1.0 };
    let mut data: Vec<Complex64> =
        grid.samples.iter().enumerate().map(|(i, v)| v * (sign(i % n) * sign(i / n))).collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    for row in data.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![ZERO; n];
    for j in 0..n {
        for k in 0..n {
            col[k] = data[k * n + j];
        }
        fft.process(&mut col);
        for k in 0..n {
            data[k * n + j] = col[k];
        }
    }
    let scale = grid.cell_measure();
    for (i, v) in data.iter_mut().enumerate() {
        *v *= scale * sign(i % n) * sign(i / n);
    }
    Ok(ComplexGrid {
        meaning: GridMeaning::Density,
        case: grid.case,
        sigma: grid.sigma,
        extent: PI * n as f64 / (2.0 * grid.extent),
        size: n,
        label: grid.label.clone(),
        samples: data,
        warnings: grid.warnings.clone(),
    })
}

/// Test functions integrated against the density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    Constant { value: f64 },
    Disk { center: Complex64, radius: f64 },
    /// `exp(-|w - center|^2 / (2 width^2))`.
    Gaussian { center: Complex64, width: f64 },
    /// `exp((i/2)(z1 conj(w) + z2 w))`.
    QuasiCharacter { z1: Complex64, z2: Complex64 },
}

impl TestFunction {
    pub fn eval(&self, w: Complex64) -> Complex64 {
        match *self {
            TestFunction::Constant { value } => Complex64::new(value, 0.0),
            TestFunction::Disk { center, radius } => {
                if (w - center).norm() <= radius {
                    ONE
                } else {
                    ZERO
                }
            }
            TestFunction::Gaussian { center, width } => {
                Complex64::new((-(w - center).norm_sqr() / (2.0 * width * width)).exp(), 0.0)
            }
            TestFunction::QuasiCharacter { z1, z2 } => psi(z1, z2, w),
        }
    }

    /// Radius (about the origin) outside of which the function is negligible; `None` if unbounded.
    fn support_radius(&self) -> Option<f64> {
        match *self {
            TestFunction::Constant { value } if value == 0.0 => Some(0.0),
            TestFunction::Constant { .. } | TestFunction::QuasiCharacter { .. } => None,
            TestFunction::Disk { center, radius } => Some(center.norm() + radius),
            TestFunction::Gaussian { center, width } => Some(center.norm() + 9.0 * width),
        }
    }

    /// Parses `const:v`, `disk:re,im,r`, `gauss:re,im,width`, `psi:z1,z2`.
    pub fn parse(text: &str) -> std::result::Result<TestFunction, String> {
        let (kind, args) = text.split_once(':').ok_or_else(|| format!("test function `{text}` lacks `kind:`"))?;
        let nums = |k: usize| -> std::result::Result<Vec<f64>, String> {
            let v: std::result::Result<Vec<f64>, _> = args.split(',').map(|a| a.trim().parse::<f64>()).collect();
            match v {
                Ok(v) if v.len() == k => Ok(v),
                _ => Err(format!("`{text}`: expected {k} numbers")),
            }
        };
        match kind {
            "const" => Ok(TestFunction::Constant { value: nums(1)?[0] }),
            "disk" => {
                let v = nums(3)?;
                Ok(TestFunction::Disk { center: Complex64::new(v[0], v[1]), radius: v[2] })
            }
            "gauss" | "gaussian" => {
                let v = nums(3)?;
                Ok(TestFunction::Gaussian { center: Complex64::new(v[0], v[1]), width: v[2] })
            }
            "psi" => {
                let (a, b) = args.split_once(',').ok_or_else(|| format!("`{text}`: expected z1,z2"))?;
                Ok(TestFunction::QuasiCharacter {
                    z1: crate::cplx::parse_complex(a)?,
                    z2: crate::cplx::parse_complex(b)?,
                })
            }
            other => Err(format!("unknown test function kind `{other}`")),
        }
    }
}

/// `psi_{z1,z2}(w) = exp((i/2)(z1 conj(w) + z2 w))`.
pub fn psi(z1: Complex64, z2: Complex64, w: Complex64) -> Complex64 {
    (Complex64::new(0.0, 0.5) * (z1 * w.conj() + z2 * w)).exp()
}

/// Riemann sum `sum M(w) phi(w) h^2 / (2 pi)` over the density grid.
pub fn integrate_against(density: &ComplexGrid, phi: &TestFunction) -> Result<Complex64> {
    density.validate_shape()?;
    if density.meaning != GridMeaning::Density {
        return Err(Error::InvalidParameter("integration needs a density grid".into()));
    }
    let escapes = match phi.support_radius() {
        None => true,
        Some(r) => r > density.extent - density.spacing(),
    };
    if escapes {
        let b = density.boundary_max();
        if b > ALIAS_TOLERANCE * density.peak() {
            return Err(Error::SupportEscapes(b));
        }
    }
    let n = density.size;
    let mut acc = ComplexSum::new();
    for k in 0..n {
        for j in 0..n {
            acc.add(density.at(j, k) * phi.eval(density.point(j, k)));
        }
    }
    Ok(acc.value() * density.cell_measure())
}

/// Decay diagnostic for one local factor.
#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub p: u64,
    pub sigma: f64,
    pub eta: f64,
    pub eligible: bool,
    pub note: String,
    pub radii: Vec<f64>,
    /// `sup_{|z| = r} |M_{sigma,p}(z)|` over sampled angles.
    pub sup: Vec<f64>,
    /// `sup * (1 + r)^{1/2}`.
    pub weighted: Vec<f64>,
    pub fitted_constant: f64,
    /// Index of the largest weighted value.
    pub knee: usize,
    pub monotone_beyond_knee: bool,
    pub trivial_bound_holds: bool,
}

/// `1 / (204 sqrt 2)`.
pub fn eligibility_threshold() -> f64 {
    1.0 / (204.0 * std::f64::consts::SQRT_2)
}

const DECAY_ANGLES: usize = 64;

pub fn decay_report(case: CoeffCase, form: &ModularForm, sigma: f64, p: u64, radii: &[f64]) -> Result<DecayReport> {
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii.iter().any(|r| !(*r >= 0.0)) {
        return Err(Error::InvalidParameter("radii must be nonnegative and increasing".into()));
    }
    let eta = form.eta_p(p)?;
    let rho = (p as f64).powf(-sigma);
    let threshold = eligibility_threshold();
    let eligible = !form.is_bad(p) && eta.abs() > 1.0 && rho < threshold;
    let note = if eligible {
        "eligible".to_string()
    } else {
        format!("ineligible: |eta(p)| = {:.6}, p^-sigma = {:.6} (needs > 1 and < {:.6})", eta.abs(), rho, threshold)
    };
    let r_top = radii.last().copied().unwrap_or(0.0);
    let factor = LocalFactor::new(case, form, sigma, p, r_top)?;
    let sup: Vec<f64> = radii
        .iter()
        .map(|&r| {
            (0..DECAY_ANGLES)
                .map(|a| factor.quad(Complex64::from_polar(r, TAU * a as f64 / DECAY_ANGLES as f64), true).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    let weighted: Vec<f64> = radii.iter().zip(&sup).map(|(r, s)| s * (1.0 + r).sqrt()).collect();
    let (knee, fitted_constant) =
        weighted.iter().copied().enumerate().fold((0, 0.0), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let monotone_beyond_knee = weighted[knee..].windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let trivial_bound_holds = sup.iter().all(|&s| s <= 1.0 + 1e-12);
    Ok(DecayReport {
        p,
        sigma,
        eta,
        eligible,
        note,
        radii: radii.to_vec(),
        sup,
        weighted,
        fitted_constant,
        knee,
        monotone_beyond_knee,
        trivial_bound_holds,
    })
}

/// `(r, Re M(r), Re M(r) e^{lambda r^2})` along the positive real axis of a density grid.
pub fn density_axis_profile(density: &ComplexGrid, lambda: f64) -> Vec<(f64, f64, f64)> {
    let (c, k) = density.center();
    (c..density.size)
        .map(|j| {
            let r = density.coord(j);
            let m = density.at(j, k).re;
            (r, m, m * (lambda * r * r).exp())
        })
        .collect()
}
