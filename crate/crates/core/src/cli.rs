//! Command-line parsing, spec files and dispatch to the numerical modules.
//!
//! Every subcommand reads the same flat set of options. A TOML file given
//! with `--spec` supplies defaults using the flag names (with `_` for `-`);
//! flags on the command line override it.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cutoff::{
    dyadic_level, neighbourhood_cutoff, verify_derivative_bound, verify_flest, verify_identically_one_near,
    verify_partition, write_cover_csv,
};
use crate::error::{Error, Result};
use crate::exponents::exponent_inequality_report;
use crate::numeric::{random_unit_vector, substream2};
use crate::poly::SparsePolynomial;
use crate::quadrature::{
    critical_exponent, integrate_abs_log, integrate_grad_log, radial_blowup_check, Budget, RadialVerdict,
    VerdictKind,
};
use crate::region::Region;
use crate::report::{input_hash, write_csv_summary, write_json_lines, ReportRow};
use crate::suite::run_suite;
use crate::zero_geometry::{
    box_dimension, max_monotonicity_changes, neighborhood_volume_exponent, sample_zero_set, DEFAULT_LEVELS,
    DEFAULT_RESIDUAL_TOL,
};

/// Seed used when none is given, so that default runs are reproducible.
pub const DEFAULT_SEED: u64 = 20_240_917;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_DIVERGENT: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

const DEFAULT_ZERO_SAMPLE: usize = 2_000;
const DEFAULT_DIMENSION_SAMPLE: usize = 20_000;
const DEFAULT_CUTOFF_EPS: f64 = 0.125;
const DEFAULT_RAYS: usize = 20;
const DEFAULT_CRITICAL_TOL: f64 = 0.05;
const CUTOFF_CHECK_SAMPLES: usize = 10_000;
const FLEST_LEVELS: [u32; 6] = [2, 3, 4, 5, 6, 7];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Decide finiteness of ∫_U |∇f/f|^p.
    Integrate,
    /// Decide finiteness of ∫_U |log|f||^p.
    LogLp,
    /// Bisect for the critical exponent of |∇f/f|.
    CriticalExponent,
    /// Integrability of |φ'/φ| near 0 along random rays φ(ρ) = f(ρω).
    Radial,
    /// Łojasiewicz and singularity exponents and the margin α₀ + β₀ − 1.
    Exponents,
    /// Sample the zero set and count monotonicity changes on slices.
    Zeroset,
    /// Box-counting and tube-volume dimension of the zero set.
    Dimension,
    /// Build the cutoff around the zero set and check its identities.
    Cutoff,
    /// Run the reference checks.
    Suite,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    /// Polynomial in x1, x2, ... (see the README for the grammar).
    #[arg(long, global = true)]
    pub f: Option<String>,
    /// Number of variables, when larger than the highest index in --f.
    #[arg(long, global = true)]
    pub vars: Option<usize>,
    /// Integrand exponent.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Box as lo1,hi1,lo2,hi2,... (default [-1,1]^n).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub region: Option<String>,
    /// Search bracket lo,hi for critical-exponent.
    #[arg(long, global = true)]
    pub bracket: Option<String>,
    /// Bisection tolerance, or residual tolerance for zero-set sampling.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Samples per shell, or sample size for zeroset, dimension and cutoff.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Deepest level shell.
    #[arg(long = "j-max", global = true)]
    pub j_max: Option<i32>,
    /// Master seed for every random stream (default 20240917)
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (falls back to the THREADS environment variable).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Number of rays for radial.
    #[arg(long, global = true)]
    pub rays: Option<usize>,
    /// Dyadic scale ε for cutoff.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Smoothness l for the cutoff norm scaling check.
    #[arg(long, global = true)]
    pub l: Option<f64>,
    /// Dual exponent p′ for the cutoff norm scaling check.
    #[arg(long = "p-prime", global = true)]
    pub p_prime: Option<f64>,
    /// Hausdorff measure Λ of the set, for the cutoff norm scaling check.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    /// JSON-lines report path (default stdout).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// CSV path: the sample for zeroset, the cover for cutoff, else a summary.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// TOML file with defaults for any of these options.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub spec: Option<PathBuf>,
    #[arg(skip)]
    #[serde(default)]
    pub command: Option<Command>,
}

#[derive(Debug, Parser)]
#[command(name = "logsing", version, about = "Numerical checks for logarithmic singularities of real polynomials")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

impl Options {
    /// `self`, with unset fields taken from `file`.
    fn or(self, file: Options) -> Options {
        macro_rules! merge {
            ($($f:ident),*) => { Options { $($f: self.$f.or(file.$f),)* spec: self.spec } };
        }
        merge!(f, vars, p, region, bracket, tol, samples, j_max, seed, threads, rays, eps, l, p_prime, lambda, out, csv, command)
    }
}

/// Validated inputs of one run. Serialized (without output paths and
/// thread count) to form the input hash.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSpec {
    pub command: Command,
    pub polynomial: Option<String>,
    pub num_vars: Option<usize>,
    pub region: Option<Region>,
    pub p: Option<f64>,
    pub bracket: Option<(f64, f64)>,
    pub tol: Option<f64>,
    pub budget: Budget,
    pub samples: Option<usize>,
    pub seed: u64,
    pub rays: Option<usize>,
    pub eps: Option<f64>,
    pub l: Option<f64>,
    pub p_prime: Option<f64>,
    pub lambda: Option<f64>,
    #[serde(skip)]
    pub f: Option<SparsePolynomial>,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub csv: Option<PathBuf>,
}

fn pair(text: &str, what: &str) -> Result<(f64, f64)> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Usage(format!("{what} must be two comma-separated numbers, got {text:?}")))?;
    match v.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(Error::Usage(format!("{what} must be two comma-separated numbers, got {text:?}"))),
    }
}

fn positive(v: Option<f64>, what: &str) -> Result<Option<f64>> {
    match v {
        Some(x) if !(x > 0.0 && x.is_finite()) => Err(Error::Usage(format!("--{what} must be positive, got {x}"))),
        _ => Ok(v),
    }
}

/// Parses command-line arguments (program name first) and an optional
/// spec file into a validated [`ExperimentSpec`].
pub fn parse_spec<I, T>(args: I) -> Result<ExperimentSpec>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Usage(e.to_string()))?;
    let file = match &cli.options.spec {
        Some(path) => read_spec_file(path)?,
        None => Options::default(),
    };
    if let Some(c) = file.command {
        if c != cli.command {
            return Err(Error::Usage(format!("spec file is for {c:?}, command line runs {:?}", cli.command)));
        }
    }
    let threads = cli.options.threads.or_else(|| std::env::var("THREADS").ok().and_then(|t| t.parse().ok()));
    let mut spec = resolve(cli.command, cli.options.or(file))?;
    spec.threads = threads;
    Ok(spec)
}

pub fn read_spec_file(path: &Path) -> Result<Options> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Usage(format!("{}: {e}", path.display())))
}

fn resolve(command: Command, o: Options) -> Result<ExperimentSpec> {
    let f = match (&o.f, command) {
        (None, Command::Suite) => None,
        (None, _) => return Err(Error::Usage("--f is required".into())),
        (Some(text), _) => Some(match o.vars {
            Some(n) => SparsePolynomial::parse_with_vars(text, n)?,
            None => SparsePolynomial::parse(text)?,
        }),
    };
    let n = f.as_ref().map(SparsePolynomial::num_vars);
    let region = match (&o.region, n) {
        (Some(text), Some(n)) => {
            let r = Region::parse(text)?;
            r.check_dim(n)?;
            Some(r)
        }
        (None, Some(n)) => Some(Region::unit_cube(n)),
        _ => None,
    };
    let mut budget = Budget::default();
    if matches!(command, Command::Integrate | Command::LogLp | Command::CriticalExponent | Command::Exponents) {
        if let Some(s) = o.samples {
            budget.samples_per_shell = s;
        }
    }
    if let Some(j) = o.j_max {
        if j < 4 {
            return Err(Error::Usage(format!("--j-max must be at least 4, got {j}")));
        }
        budget.j_max = j;
    }
    if o.samples == Some(0) {
        return Err(Error::Usage("--samples must be positive".into()));
    }
    let p = positive(o.p, "p")?;
    let tol = positive(o.tol, "tol")?;
    let eps = positive(o.eps, "eps")?;
    if let Some(e) = eps {
        dyadic_level(e).map_err(|_| Error::Usage(format!("--eps must be a power of two in (0, 1], got {e}")))?;
    }
    let bracket = o.bracket.as_deref().map(|b| pair(b, "--bracket")).transpose()?;
    let mut spec = ExperimentSpec {
        command,
        polynomial: o.f.clone(),
        num_vars: n,
        region,
        p,
        bracket,
        tol,
        budget,
        samples: o.samples,
        seed: o.seed.unwrap_or(DEFAULT_SEED),
        rays: o.rays,
        eps,
        l: o.l,
        p_prime: o.p_prime,
        lambda: o.lambda,
        f,
        threads: o.threads,
        out: o.out,
        csv: o.csv,
    };
    match command {
        Command::Integrate | Command::LogLp => {
            spec.p.get_or_insert(1.0);
        }
        Command::CriticalExponent => {
            spec.bracket.get_or_insert((0.5, n.unwrap_or(1) as f64 + 1.0));
            spec.tol.get_or_insert(DEFAULT_CRITICAL_TOL);
        }
        Command::Radial => {
            spec.rays.get_or_insert(DEFAULT_RAYS);
            spec.eps.get_or_insert(1.0);
        }
        Command::Zeroset => {
            spec.samples.get_or_insert(DEFAULT_ZERO_SAMPLE);
            spec.tol.get_or_insert(DEFAULT_RESIDUAL_TOL);
        }
        Command::Dimension => {
            spec.samples.get_or_insert(DEFAULT_DIMENSION_SAMPLE);
        }
        Command::Cutoff => {
            spec.samples.get_or_insert(DEFAULT_ZERO_SAMPLE);
            spec.eps.get_or_insert(DEFAULT_CUTOFF_EPS);
            if spec.l.is_some() != spec.p_prime.is_some() {
                return Err(Error::Usage("--l and --p-prime go together".into()));
            }
        }
        Command::Exponents | Command::Suite => {}
    }
    Ok(spec)
}

/// Rows of one run and the process exit code they imply.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<ReportRow>,
    pub exit_code: i32,
}

fn verdict_exit(kind: &VerdictKind) -> i32 {
    match kind {
        VerdictKind::Convergent { .. } => EXIT_OK,
        VerdictKind::Divergent { .. } => EXIT_DIVERGENT,
        VerdictKind::Inconclusive { .. } => EXIT_INCONCLUSIVE,
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report payloads serialize")
}

impl ExperimentSpec {
    fn poly(&self) -> &SparsePolynomial {
        self.f.as_ref().expect("validated spec has a polynomial")
    }

    fn region(&self) -> &Region {
        self.region.as_ref().expect("validated spec has a region")
    }

    pub fn input_hash(&self) -> String {
        input_hash(self)
    }
}

/// Dispatches a validated spec. Mathematical outcomes map to exit codes;
/// tool failures are returned as errors.
pub fn run(spec: &ExperimentSpec) -> Result<RunOutput> {
    let start = Instant::now();
    let hash = spec.input_hash();
    let name = to_value(&spec.command).as_str().expect("command names are strings").to_string();
    let id = format!("{name}-{}", &hash[..12]);
    let single = |payload: Value, bars: Value, exit_code: i32| RunOutput {
        rows: vec![ReportRow::new(id.clone(), &name, &hash, payload, bars)],
        exit_code,
    };
    let seed = spec.seed;
    let mut out = match spec.command {
        Command::Integrate | Command::LogLp => {
            let p = spec.p.expect("defaulted");
            let v = if spec.command == Command::Integrate {
                integrate_grad_log(spec.poly(), p, spec.region(), &spec.budget, seed)?
            } else {
                integrate_abs_log(spec.poly(), p, spec.region(), &spec.budget, seed)?
            };
            let bars = json!({
                "value": match &v.kind { VerdictKind::Convergent { error_bar, .. } => Some(*error_bar), _ => None },
                "decay_slope": v.fit.as_ref().map(|f| f.slope_stderr),
            });
            let code = verdict_exit(&v.kind);
            single(json!({ "p": p, "verdict": v.kind.label(), "result": v }), bars, code)
        }
        Command::CriticalExponent => {
            let tol = spec.tol.expect("defaulted");
            let c = critical_exponent(spec.poly(), spec.region(), spec.bracket.expect("defaulted"), tol, &spec.budget, seed)?;
            let code = if c.widened { EXIT_INCONCLUSIVE } else { EXIT_OK };
            let verdict = if c.widened { "INCONCLUSIVE" } else { "CONVERGED" };
            single(json!({ "verdict": verdict, "result": c }), json!({ "bracket_width": c.bracket_width }), code)
        }
        Command::Radial => {
            let n = spec.poly().num_vars();
            let mut rays = Vec::new();
            let (mut divergent, mut convergent) = (0, 0);
            for k in 0..spec.rays.expect("defaulted") {
                let omega = random_unit_vector(&mut substream2(seed, 6, k as u64), n);
                match radial_blowup_check(spec.poly(), &omega, spec.eps.expect("defaulted")) {
                    Ok(c) => {
                        match c.verdict {
                            RadialVerdict::Divergent => divergent += 1,
                            RadialVerdict::Convergent => convergent += 1,
                        }
                        rays.push(json!({ "omega": omega, "check": c }));
                    }
                    Err(Error::DegenerateRay) => rays.push(json!({ "omega": omega, "degenerate": true })),
                    Err(e) => return Err(e),
                }
            }
            let (verdict, code) = match (divergent, convergent) {
                (0, 0) => ("INCONCLUSIVE", EXIT_INCONCLUSIVE),
                (_, 0) => ("DIVERGENT", EXIT_DIVERGENT),
                (0, _) => ("CONVERGENT", EXIT_OK),
                _ => ("INCONCLUSIVE", EXIT_INCONCLUSIVE),
            };
            single(
                json!({ "verdict": verdict, "divergent": divergent, "convergent": convergent, "rays": rays }),
                Value::Null,
                code,
            )
        }
        Command::Exponents => {
            let r = exponent_inequality_report(spec.poly(), spec.region(), &spec.budget, seed)?;
            let bars = json!({
                "inequality_margin": r.margin_stderr,
                "alpha0": r.alpha0.fit.slope_stderr,
                "beta0": r.beta0.fit.slope_stderr,
                "alpha_dist": r.alpha_dist.fit.slope_stderr,
            });
            single(
                json!({
                    "inequality_margin": r.inequality_margin,
                    "alpha0": r.alpha0.value(),
                    "beta0": r.beta0.value(),
                    "alpha_dist": r.alpha_dist.value(),
                    "report": r,
                }),
                bars,
                EXIT_OK,
            )
        }
        Command::Zeroset => {
            let z = sample_zero_set(spec.poly(), spec.region(), spec.samples.expect("defaulted"), spec.tol.expect("defaulted"), seed)?;
            if let Some(path) = &spec.csv {
                z.write_csv(BufWriter::new(File::create(path)?))?;
            }
            let mono = max_monotonicity_changes(spec.poly(), spec.region(), 200, seed)?;
            let max_residual = z.residuals.iter().copied().fold(0.0, f64::max);
            let mean_steps = z.trace_lengths.iter().sum::<usize>() as f64 / z.len() as f64;
            single(
                json!({
                    "accepted": z.len(),
                    "attempts": z.attempts,
                    "max_residual": max_residual,
                    "mean_steps": mean_steps,
                    "monotonicity": mono,
                }),
                Value::Null,
                EXIT_OK,
            )
        }
        Command::Dimension => {
            let z = sample_zero_set(spec.poly(), spec.region(), spec.samples.expect("defaulted"), DEFAULT_RESIDUAL_TOL, seed)?;
            let bx = box_dimension(&z, &DEFAULT_LEVELS)?;
            let tube = neighborhood_volume_exponent(spec.poly(), spec.region(), &z, &DEFAULT_LEVELS, 20_000, seed)?;
            let proj = if z.num_vars > 1 { Some(box_dimension(&z.project_tail()?, &DEFAULT_LEVELS)?.dim_value) } else { None };
            single(
                json!({
                    "box_dimension": bx.dim_value,
                    "tube_dimension": tube.dim_value,
                    "projection_box_dimension": proj,
                    "box_fit": bx.fit,
                    "tube_fit": tube.fit,
                }),
                json!({ "box_dimension": bx.fit.slope_stderr, "tube_dimension": tube.fit.slope_stderr }),
                EXIT_OK,
            )
        }
        Command::Cutoff => {
            let z = sample_zero_set(spec.poly(), spec.region(), spec.samples.expect("defaulted"), DEFAULT_RESIDUAL_TOL, seed)?;
            let eps = spec.eps.expect("defaulted");
            let p = neighbourhood_cutoff(&z.points, eps)?;
            if let Some(path) = &spec.csv {
                write_cover_csv(p.cubes(), BufWriter::new(File::create(path)?))?;
            }
            let checks = verify_partition(&p, CUTOFF_CHECK_SAMPLES, seed)?;
            let near = verify_identically_one_near(&z.points, eps, CUTOFF_CHECK_SAMPLES, seed)?;
            let mut alpha = vec![0; p.num_vars()];
            alpha[0] = 1;
            let deriv = verify_derivative_bound(&p, &alpha, 1_000, seed)?;
            let flest = match (spec.l, spec.p_prime) {
                (Some(l), Some(pp)) => Some(verify_flest(
                    &z.points,
                    &FLEST_LEVELS,
                    l,
                    pp,
                    spec.lambda.unwrap_or(0.0),
                    1,
                    20_000,
                    seed,
                )?),
                _ => None,
            };
            single(
                json!({
                    "cubes": p.len(),
                    "partition": checks,
                    "near_set_failures": near,
                    "derivative_sup": deriv.max,
                    "uniformity_ratio": deriv.uniformity_ratio,
                    "flest": flest,
                }),
                json!({ "flest_slope": flest.as_ref().map(|r| r.direct.slope_stderr) }),
                EXIT_OK,
            )
        }
        Command::Suite => {
            let checks = run_suite(&spec.budget, seed);
            let passed = checks.iter().filter(|c| c.passed).count();
            let mut rows: Vec<ReportRow> = checks
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let mut row = ReportRow::new(
                        format!("suite-{:02}-{}-{}", i + 1, c.group, c.name),
                        &name,
                        &hash,
                        json!({ "group": c.group, "check": c.name, "polynomial": c.polynomial, "passed": c.passed, "result": c.payload }),
                        c.error_bars.clone(),
                    );
                    row.wall_time_ms = c.wall_time_ms;
                    row
                })
                .collect();
            rows.push(ReportRow::new(
                "suite-summary".into(),
                &name,
                &hash,
                json!({ "passed": passed, "failed": checks.len() - passed, "total": checks.len() }),
                Value::Null,
            ));
            let code = if passed == checks.len() { EXIT_OK } else { EXIT_INCONCLUSIVE };
            RunOutput { rows, exit_code: code }
        }
    };
    if spec.command != Command::Suite {
        out.rows[0].wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    } else if let Some(last) = out.rows.last_mut() {
        last.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    }
    Ok(out)
}

/// Writes the report lines to `--out` (or stdout) and the CSV summary to
/// `--csv` where that flag does not name a command-specific export.
pub fn emit(spec: &ExperimentSpec, out: &RunOutput) -> Result<()> {
    match &spec.out {
        Some(path) => write_json_lines(&out.rows, BufWriter::new(File::create(path)?))?,
        None => write_json_lines(&out.rows, std::io::stdout().lock())?,
    }
    if let (Some(path), false) = (&spec.csv, matches!(spec.command, Command::Zeroset | Command::Cutoff)) {
        write_csv_summary(&out.rows, BufWriter::new(File::create(path)?))?;
    }
    Ok(())
}
