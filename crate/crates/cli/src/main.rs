mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use mfunc_core::coeffs::{c_coeff_n, l_table, CoeffCase};
use mfunc_core::cplx::parse_complex;
use mfunc_core::density::{self, io as grid_io, ComplexGrid, GridParams, TestFunction};
use mfunc_core::forms::{build_builtin, load_form, ModularForm};
use mfunc_core::harness::{self, AverageParams};
use mfunc_core::lfun::EvalParams;
use mfunc_core::mtilde::{mtilde_euler, mtilde_harmonic, mtilde_series, MtildeParams};
use mfunc_core::{selfcheck, Error};
use num_complex::Complex64;
use serde_json::json;

/// Environment variable naming the directory for relative `--out` paths.
const OUT_DIR_VAR: &str = "MFUNC_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "mfunc", version, about = "Value distribution of modular L-functions: coefficients, characteristic functions, densities and averages")]
struct Cli {
    /// Worker threads (default: all cores); results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Treat precision warnings as failures.
    #[arg(long, global = true)]
    strict: bool,
    /// key=value file; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (relative paths resolve against $MFUNC_OUT_DIR); stdout if absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Grid,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Dump raw and normalized eigenvalues.
    Form(FormCmd),
    /// Tables of l_z(n) or c_{z,x}(n).
    Coeffs(CoeffsCmd),
    /// M-tilde values (series, Euler, harmonic) or a characteristic grid.
    Mtilde(MtildeCmd),
    /// Density grids, and local decay reports.
    Density(DensityCmd),
    /// Average of psi over character twists against M-tilde.
    AvgTwists(AvgTwistsCmd),
    /// Test-function averages over twists against the density.
    Equidist(EquidistCmd),
    /// Harmonic average over a form family against the harmonic M-tilde.
    AvgForms(AvgFormsCmd),
    /// Petersson sums S(x, y) over a form family.
    Petersson(PeterssonCmd),
    /// Run the invariant suite.
    Selfcheck,
}

#[derive(Args, Debug, Clone)]
struct FormArgs {
    /// Built-in form (`delta`, `11a`) or a path to a form CSV.
    #[arg(long, default_value = "delta")]
    form: String,
}

#[derive(Args, Debug)]
struct FormCmd {
    #[command(flatten)]
    form: FormArgs,
    #[arg(long, default_value_t = 1000)]
    p_max: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CoeffKind {
    L,
    C,
}

#[derive(Args, Debug)]
struct CoeffsCmd {
    #[command(flatten)]
    form: FormArgs,
    #[arg(long, default_value = "log")]
    case: CoeffCase,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    z: Complex64,
    #[arg(long, default_value_t = 100)]
    n_max: u64,
    #[arg(long, value_enum, default_value = "l")]
    kind: CoeffKind,
    /// Second index of c_{z,x}(n).
    #[arg(long, default_value_t = 1)]
    x: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Series,
    Euler,
    Harmonic,
    Grid,
}

#[derive(Args, Debug)]
struct MtildeCmd {
    #[command(flatten)]
    form: FormArgs,
    #[arg(long, default_value = "log")]
    case: CoeffCase,
    #[arg(long, allow_hyphen_values = true)]
    sigma: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    t: f64,
    #[arg(long, value_parser = parse_complex, default_value = "0", allow_hyphen_values = true)]
    z1: Complex64,
    #[arg(long, value_parser = parse_complex, default_value = "0", allow_hyphen_values = true)]
    z2: Complex64,
    #[arg(long, value_enum, default_value = "series")]
    method: Method,
    #[arg(long)]
    n_max: Option<u64>,
    #[arg(long)]
    p_max: Option<u64>,
    #[arg(long)]
    avoid_prime: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Harmonic series cutoff.
    #[arg(long, default_value_t = 2000)]
    cutoff: u64,
    #[command(flatten)]
    grid: GridArgs,
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    /// Half-width L of the z-grid (auto if absent).
    #[arg(long)]
    extent: Option<f64>,
    /// Samples per side (auto if absent).
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    no_cross_check: bool,
}

#[derive(Args, Debug)]
struct DensityCmd {
    #[command(flatten)]
    form: FormArgs,
    #[arg(long, default_value = "log")]
    case: CoeffCase,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 1000)]
    p_max: u64,
    #[arg(long)]
    avoid_prime: Option<u64>,
    #[command(flatten)]
    grid: GridArgs,
    /// Emit a decay report for this prime instead of a grid.
    #[arg(long)]
    decay_prime: Option<u64>,
    /// Radii for the decay report.
    #[arg(long, value_delimiter = ',', default_value = "0,5,10,20,40,60,80,100")]
    radii: Vec<f64>,
    /// Integrate the density against these test functions (`const:1`, `disk:x,y,r`, `gauss:x,y,w`, `psi:z1,z2`).
    #[arg(long = "phi")]
    phis: Vec<String>,
}

#[derive(Args, Debug, Clone)]
struct EvalArgs {
    #[arg(long, default_value_t = 10_000)]
    p_max: u64,
    #[arg(long, default_value_t = 100_000)]
    n_max: u64,
    /// Smoothing length for the exploratory regime.
    #[arg(long, default_value_t = 1.0e4)]
    x: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    exclude_principal: bool,
}

impl EvalArgs {
    fn params(&self) -> AverageParams {
        AverageParams {
            eval: EvalParams { p_max: self.p_max, n_max: self.n_max.max(self.p_max), x: self.x, tol: self.tol },
            include_principal: !self.exclude_principal,
            ..AverageParams::default()
        }
    }
}

#[derive(Args, Debug)]
struct AvgTwistsCmd {
    #[command(flatten)]
    form: FormArgs,
    #[arg(long, default_value = "log")]
    case: CoeffCase,
    #[arg(long)]
    m: u64,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    t: f64,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    z1: Complex64,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    z2: Complex64,
    #[command(flatten)]
    eval: EvalArgs,
}

#[derive(Args, Debug)]
struct EquidistCmd {
    #[command(flatten)]
    form: FormArgs,
    #[arg(long, default_value = "log")]
    case: CoeffCase,
    #[arg(long)]
    m: u64,
    #[arg(long)]
    sigma: f64,
    #[arg(long = "phi", required = true)]
    phis: Vec<String>,
    /// Density grid file; built with `m` removed if absent.
    #[arg(long)]
    density: Option<PathBuf>,
    /// Prime cutoff of a freshly built density grid.
    #[arg(long, default_value_t = 1000)]
    grid_p_max: u64,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    eval: EvalArgs,
}

#[derive(Args, Debug)]
struct AvgFormsCmd {
    #[arg(long)]
    family: PathBuf,
    #[arg(long, default_value = "log")]
    case: CoeffCase,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    t: f64,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    z1: Complex64,
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    z2: Complex64,
    #[arg(long, default_value_t = 2000)]
    cutoff: u64,
    #[command(flatten)]
    eval: EvalArgs,
}

#[derive(Args, Debug)]
struct PeterssonCmd {
    #[arg(long)]
    family: PathBuf,
    #[arg(long, default_value_t = 1)]
    x: u64,
    #[arg(long, default_value_t = 1)]
    y: u64,
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical_guard() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

struct Sink {
    path: Option<PathBuf>,
    format: Option<Format>,
    strict: bool,
}

impl Sink {
    fn format(&self, default: Format, allowed: &[Format]) -> Result<Format, Failure> {
        let f = self.format.unwrap_or(default);
        if allowed.contains(&f) {
            Ok(f)
        } else {
            Err(Failure::Usage(format!("format {f:?} is not available here (choose from {allowed:?})")))
        }
    }

    fn write(&self, bytes: &[u8]) -> Outcome {
        match &self.path {
            Some(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)?;
                }
                std::fs::write(p, bytes)?;
            }
            None => std::io::stdout().lock().write_all(bytes)?,
        }
        Ok(())
    }

    fn warnings(&self, warnings: &[String]) -> Outcome {
        for w in warnings {
            eprintln!("warning: {w}");
        }
        if self.strict && !warnings.is_empty() {
            return Err(Failure::Numerical(format!("{} precision warning(s) under --strict", warnings.len())));
        }
        Ok(())
    }

    fn json_lines<T: serde::Serialize>(&self, items: &[T]) -> Outcome {
        let mut buf = String::new();
        for it in items {
            buf.push_str(&serde_json::to_string(it).expect("serializable"));
            buf.push('\n');
        }
        self.write(buf.as_bytes())
    }
}

fn resolve_out(out: Option<PathBuf>) -> Option<PathBuf> {
    out.map(|p| match std::env::var_os(OUT_DIR_VAR) {
        Some(dir) if p.is_relative() => Path::new(&dir).join(p),
        _ => p,
    })
}

fn load(form: &FormArgs, p_max: u64) -> Result<ModularForm, Failure> {
    let path = Path::new(&form.form);
    if path.exists() {
        let f = load_form(path)?;
        if f.p_max() < p_max {
            return Err(Error::EigenvalueRange { p: p_max, p_max: f.p_max() }.into());
        }
        Ok(f)
    } else {
        Ok(build_builtin(&form.form, p_max)?)
    }
}

fn parse_phis(specs: &[String]) -> Result<Vec<TestFunction>, Failure> {
    specs.iter().map(|s| TestFunction::parse(s).map_err(Failure::Usage)).collect()
}

fn grid_params(g: &GridArgs, avoid_prime: Option<u64>) -> GridParams {
    GridParams { extent: g.extent, size: g.size, avoid_prime, cross_check: !g.no_cross_check }
}

fn write_grid(sink: &Sink, grid: &ComplexGrid) -> Outcome {
    sink.warnings(&grid.warnings)?;
    let mut buf = Vec::new();
    match sink.format(Format::Grid, &[Format::Grid, Format::Csv])? {
        Format::Grid => {
            if sink.path.is_none() {
                return Err(Failure::Usage("binary grids need --out".into()));
            }
            grid_io::write_grid(grid, &mut buf)?
        }
        _ => grid_io::write_grid_csv(grid, &mut buf)?,
    }
    sink.write(&buf)
}

fn run_form(c: FormCmd, sink: &Sink) -> Outcome {
    let f = load(&c.form, c.p_max)?;
    match sink.format(Format::Csv, &[Format::Csv, Format::Json])? {
        Format::Csv => {
            let mut buf = Vec::new();
            f.write_csv(&mut buf)?;
            sink.write(&buf)
        }
        _ => {
            let rows: Vec<_> = f
                .raw_coefficients()
                .map(|(p, a)| Ok(json!({ "p": p, "a_p": a.to_string(), "eta": f.eta_p(p)? })))
                .collect::<Result<_, Error>>()?;
            let doc = json!({ "label": f.label(), "level": f.level(), "weight": f.weight(), "p_max": f.p_max(), "eigenvalues": rows });
            sink.write(format!("{doc}\n").as_bytes())
        }
    }
}

fn run_coeffs(c: CoeffsCmd, sink: &Sink) -> Outcome {
    let values: Vec<Complex64> = match c.kind {
        CoeffKind::L => {
            let f = load(&c.form, c.n_max.max(2))?;
            l_table(c.case, c.z, &f, c.n_max)?.into_iter().skip(1).collect()
        }
        CoeffKind::C => {
            let level = load(&c.form, 2)?.level();
            (1..=c.n_max).map(|n| c_coeff_n(c.case, c.z, level, n, c.x)).collect()
        }
    };
    match sink.format(Format::Csv, &[Format::Csv, Format::Json])? {
        Format::Csv => {
            let mut s = String::from("n,re,im\n");
            for (i, v) in values.iter().enumerate() {
                s.push_str(&format!("{},{},{}\n", i + 1, v.re, v.im));
            }
            sink.write(s.as_bytes())
        }
        _ => {
            let rows: Vec<_> = values.iter().enumerate().map(|(i, v)| json!({ "n": i + 1, "value": v })).collect();
            sink.write(format!("{}\n", json!({ "case": c.case, "z": c.z, "kind": format!("{:?}", c.kind), "x": c.x, "rows": rows })).as_bytes())
        }
    }
}

fn run_mtilde(c: MtildeCmd, sink: &Sink) -> Outcome {
    let s = Complex64::new(c.sigma, c.t);
    if c.method == Method::Grid {
        let p_max = c.p_max.unwrap_or(1000);
        let f = load(&c.form, p_max)?;
        let grid = density::mtilde_grid(c.case, &f, c.sigma, p_max, &grid_params(&c.grid, c.avoid_prime))?;
        return write_grid(sink, &grid);
    }
    sink.format(Format::Json, &[Format::Json])?;
    let d = MtildeParams::default();
    let params = MtildeParams {
        n_max: c.n_max.unwrap_or(d.n_max),
        p_max: c.p_max.unwrap_or(d.p_max),
        avoid_prime: c.avoid_prime,
        tol: c.tol,
        ..d
    };
    let eval = match c.method {
        Method::Harmonic => mtilde_harmonic(c.case, s, c.z1, c.z2, c.cutoff)?,
        m => {
            let need = if m == Method::Series { params.p_max.min(params.n_max) } else { params.p_max };
            let f = load(&c.form, need)?;
            if m == Method::Series {
                mtilde_series(c.case, &f, s, c.z1, c.z2, &params)?
            } else {
                mtilde_euler(c.case, &f, s, c.z1, c.z2, &params)?
            }
        }
    };
    let doc = json!({
        "case": c.case, "form": c.form.form, "s": s, "z1": c.z1, "z2": c.z2,
        "method": format!("{:?}", c.method).to_lowercase(),
        "value": eval.value, "tail_bound": eval.tail_bound,
    });
    sink.write(format!("{doc}\n").as_bytes())
}

fn run_density(c: DensityCmd, sink: &Sink) -> Outcome {
    let f = load(&c.form, c.p_max)?;
    if let Some(p) = c.decay_prime {
        sink.format(Format::Json, &[Format::Json])?;
        let r = density::decay_report(c.case, &f, c.sigma, p, &c.radii)?;
        return sink.json_lines(&[r]);
    }
    let grid = density::mtilde_grid(c.case, &f, c.sigma, c.p_max, &grid_params(&c.grid, c.avoid_prime))?;
    let dens = density::invert_to_density(&grid)?;
    if c.phis.is_empty() {
        return write_grid(sink, &dens);
    }
    sink.format(Format::Json, &[Format::Json])?;
    sink.warnings(&dens.warnings)?;
    let rows: Vec<_> = parse_phis(&c.phis)?
        .iter()
        .map(|phi| Ok(json!({ "phi": phi, "integral": density::integrate_against(&dens, phi)? })))
        .collect::<Result<_, Error>>()?;
    sink.json_lines(&rows)
}

fn run_avg_twists(c: AvgTwistsCmd, sink: &Sink) -> Outcome {
    sink.format(Format::Json, &[Format::Json])?;
    let params = c.eval.params();
    let f = load(&c.form, params.eval.p_max)?;
    let rec = harness::avg_twists(c.case, &f, c.m, Complex64::new(c.sigma, c.t), c.z1, c.z2, &params)?;
    sink.json_lines(&[rec])
}

fn run_equidist(c: EquidistCmd, sink: &Sink) -> Outcome {
    sink.format(Format::Json, &[Format::Json])?;
    let params = c.eval.params();
    let f = load(&c.form, params.eval.p_max.max(c.grid_p_max))?;
    let dens = match &c.density {
        Some(path) => grid_io::read_grid(std::io::BufReader::new(std::fs::File::open(path)?))?,
        None => {
            let g = density::mtilde_grid(c.case, &f, c.sigma, c.grid_p_max, &grid_params(&c.grid, Some(c.m)))?;
            density::invert_to_density(&g)?
        }
    };
    sink.warnings(&dens.warnings)?;
    let recs = harness::equidist_test(c.case, &f, c.m, c.sigma, &dens, &parse_phis(&c.phis)?, &params)?;
    sink.json_lines(&recs)
}

fn run_avg_forms(c: AvgFormsCmd, sink: &Sink) -> Outcome {
    sink.format(Format::Json, &[Format::Json])?;
    let fam = harness::load_family(&c.family)?;
    for w in &fam.warnings {
        eprintln!("family: {w}");
    }
    let mut params = c.eval.params();
    params.harmonic_cutoff = c.cutoff;
    let rec = harness::avg_forms(c.case, &fam, Complex64::new(c.sigma, c.t), c.z1, c.z2, &params)?;
    sink.json_lines(&[rec])
}

fn run_petersson(c: PeterssonCmd, sink: &Sink) -> Outcome {
    sink.format(Format::Json, &[Format::Json])?;
    let fam = harness::load_family(&c.family)?;
    for w in &fam.warnings {
        eprintln!("family: {w}");
    }
    sink.json_lines(&[harness::petersson_check(&fam, c.x, c.y)?])
}

fn run_selfcheck(sink: &Sink) -> Outcome {
    let results = selfcheck::run_all();
    let mut text = String::new();
    for r in &results {
        text.push_str(&format!("{} {}: {}\n", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail));
    }
    sink.write(text.as_bytes())?;
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(Failure::Numerical(format!("{failed} self-check(s) failed")));
    }
    Ok(())
}

fn dispatch(args: Vec<OsString>) -> Outcome {
    let args = config::merge(&Cli::command(), args).map_err(Failure::Usage)?;
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            print!("{e}");
            std::process::exit(0)
        }
        _ => Failure::Usage(e.to_string()),
    })?;
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(k).build_global().map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let sink = Sink { path: resolve_out(cli.out), format: cli.format, strict: cli.strict };
    match cli.cmd {
        Cmd::Form(c) => run_form(c, &sink),
        Cmd::Coeffs(c) => run_coeffs(c, &sink),
        Cmd::Mtilde(c) => run_mtilde(c, &sink),
        Cmd::Density(c) => run_density(c, &sink),
        Cmd::AvgTwists(c) => run_avg_twists(c, &sink),
        Cmd::Equidist(c) => run_equidist(c, &sink),
        Cmd::AvgForms(c) => run_avg_forms(c, &sink),
        Cmd::Petersson(c) => run_petersson(c, &sink),
        Cmd::Selfcheck => run_selfcheck(&sink),
    }
}

fn main() -> ExitCode {
    match dispatch(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("{}", msg.trim_end());
            if !msg.contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical guard: {msg}");
            ExitCode::from(2)
        }
    }
}
