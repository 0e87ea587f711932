//! Command-line front end. Every command writes its products under
//! `--out-dir` and prints JSON reports to stdout.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 invalid input, 3 a
//! degenerate verdict (multiple eigenvalue, singular slowness scheme, or a
//! qP branch that is not separate).

mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use config::{OutputConfig, RunConfig, SamplingConfig, StepConfig, ToleranceConfig};

use crate::christoffel::{gap_csv, gap_sweep, qp_gap_margin, slowness_polynomial, SphereSampling};
use crate::classifier2d::classify_any;
use crate::error::{Error, Result};
use crate::finsler::{invariant_battery, BatteryOptions, FinslerOptions, QpFinsler};
use crate::geodesics::{
    herglotz_check, integrate_geodesic, lowest_point_expansion_check, travel_time_data, ExpansionFit, ExpansionOptions, GeodesicOptions,
    HerglotzReport, ShootingOptions,
};
use crate::singularity::{variety_smoothness, SingularPoint, SingularSearch};
use crate::stiffness::{parse_field, parse_tensor, AnyTensor, Domain, StiffnessField};
use crate::xray::{desk_injectivity_experiment, xray_dataset, Fan, ScalarField};

#[derive(Debug, Parser)]
#[command(name = "elastic-finsler", version, about = "Finsler geometry of anisotropic elastic stiffness tensors")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Directory for CSV and JSON products.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; all logical cores when unset.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long = "tol-gap", global = true)]
    pub tol_gap: Option<f64>,
    #[arg(long = "tol-gradient", global = true)]
    pub tol_gradient: Option<f64>,
    #[arg(long = "tol-qp-gap", global = true)]
    pub tol_qp_gap: Option<f64>,
    #[arg(long = "tol-newton", global = true)]
    pub tol_newton: Option<f64>,
    #[arg(long = "tol-exit", global = true)]
    pub tol_exit: Option<f64>,
    #[arg(long = "tol-shooting", global = true)]
    pub tol_shooting: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact separateness verdict for a 2D tensor.
    Classify2d {
        #[arg(long)]
        tensor: PathBuf,
    },
    /// Slowness radii of every branch over sampled directions.
    Slowness {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// qP gap sweep and separateness margin.
    Gap {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Scheme and variety smoothness of the slowness polynomial.
    Singularity {
        #[arg(long)]
        tensor: PathBuf,
    },
    /// Invariant battery of the qP Finsler function.
    FinslerCheck {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Integrates one geodesic until it leaves the domain.
    Geodesic {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x0: Vec<f64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y0: Vec<f64>,
        /// Rescale `y0` to unit Finsler length.
        #[arg(long)]
        unit_speed: bool,
        #[arg(long)]
        max_time: Option<f64>,
    },
    /// Travel times from interior sources to equally spaced boundary points.
    Traveltime {
        #[arg(long)]
        field: PathBuf,
        /// Source point `x1,x2[,x3]`; repeatable.
        #[arg(long = "source", allow_hyphen_values = true)]
        sources: Vec<String>,
        #[arg(long)]
        receivers: Option<usize>,
    },
    /// X-ray dataset over a boundary fan and the radial recovery experiment.
    Xray {
        #[arg(long)]
        field: PathBuf,
        /// Scalar field TOML integrated for the CSV; `f ≡ 1` when unset.
        #[arg(long)]
        scalar: Option<PathBuf>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        angles: Option<usize>,
    },
    /// Herglotz check and lowest-point expansion orders.
    Appendixb {
        #[arg(long)]
        field: PathBuf,
    },
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// 2 for errors caused by the input, 1 for numerical failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::DimensionMismatch { .. }
        | Error::UnsupportedDimension(_)
        | Error::InvalidInput(_)
        | Error::SymmetryViolation { .. }
        | Error::ExactScalarsRequired
        | Error::ZeroPolynomial
        | Error::UnknownVariable(_)
        | Error::PolyParse(_)
        | Error::OutsideDomain(_)
        | Error::ParameterOutOfRange { .. }
        | Error::NonRadialField
        | Error::ZeroVector
        | Error::ZeroCovector
        | Error::Format(_) => 2,
        _ => 1,
    }
}

struct Context {
    cfg: RunConfig,
    out_dir: PathBuf,
    seed: u64,
}

impl Context {
    fn finsler_options(&self) -> FinslerOptions {
        FinslerOptions {
            gap_threshold: self.cfg.tolerances.qp_gap,
            newton_tolerance: self.cfg.tolerances.newton,
            fiber_step: self.cfg.steps.fiber,
            base_step: self.cfg.steps.base,
            ..Default::default()
        }
    }

    fn geodesic_options(&self) -> GeodesicOptions {
        GeodesicOptions {
            step: self.cfg.steps.rk4,
            exit_tolerance: self.cfg.tolerances.exit,
            ..Default::default()
        }
    }

    fn sampling(&self, dim: usize, flag: Option<usize>) -> SphereSampling {
        match flag.or(self.cfg.sampling.directions) {
            Some(n) => SphereSampling::new(n),
            None => SphereSampling::default_for(dim),
        }
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        std::fs::create_dir_all(&self.out_dir).map_err(io_err)?;
        std::fs::write(self.out_dir.join(name), contents).map_err(io_err)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
        text.push('\n');
        print!("{text}");
        self.write(name, &text)
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::InvalidInput(e.to_string())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

fn load_tensor(path: &Path) -> Result<AnyTensor> {
    parse_tensor(&read(path)?)
}

fn load_finsler(path: &Path, ctx: &Context) -> Result<QpFinsler> {
    let field = parse_field(&read(path)?)?;
    Ok(QpFinsler::with_options(field, ctx.finsler_options()))
}

fn warn_regularity(field: &StiffnessField) {
    if field.regularity() < 2 {
        eprintln!("warning: geodesics need a C^2 field, this one is declared C^{}", field.regularity());
    }
}

fn context(cli: &Cli) -> Result<Context> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(p) => RunConfig::parse(&read(p)?)?,
        None => RunConfig::default(),
    };
    let t = &mut cfg.tolerances;
    for (slot, flag) in [
        (&mut t.gap, g.tol_gap),
        (&mut t.gradient, g.tol_gradient),
        (&mut t.qp_gap, g.tol_qp_gap),
        (&mut t.newton, g.tol_newton),
        (&mut t.exit, g.tol_exit),
        (&mut t.shooting, g.tol_shooting),
    ] {
        if let Some(v) = flag {
            *slot = v;
        }
    }
    cfg.validate()?;
    let out_dir = g.out_dir.clone().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    Ok(Context { cfg, out_dir, seed: g.seed })
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let ctx = context(cli)?;
    let body = || run_command(&cli.command, &ctx);
    match cli.global.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidInput(e.to_string()))?
            .install(body),
        None => body(),
    }
}

fn parse_point(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::InvalidInput(format!("bad coordinate `{s}`"))))
        .collect()
}

fn run_command(cmd: &Command, ctx: &Context) -> Result<i32> {
    match cmd {
        Command::Classify2d { tensor } => {
            let report = classify_any(&load_tensor(tensor)?)?;
            ctx.write_json("classify2d.json", &report)?;
            Ok(if report.has_multiple_eigenvalue { 3 } else { 0 })
        }
        Command::Slowness { tensor, samples } => {
            let c = load_tensor(tensor)?.to_f64();
            let sweep = gap_sweep(&c, ctx.sampling(c.dim(), *samples))?;
            ctx.write("slowness.csv", &slowness_csv(c.dim(), &sweep))?;
            Ok(0)
        }
        Command::Gap { tensor, samples } => {
            let c = load_tensor(tensor)?.to_f64();
            let sampling = ctx.sampling(c.dim(), *samples);
            ctx.write("gap.csv", &gap_csv(&gap_sweep(&c, sampling)?))?;
            let report = qp_gap_margin(&c, sampling)?;
            ctx.write_json("gap.json", &report)?;
            Ok(if report.separate { 0 } else { 3 })
        }
        Command::Singularity { tensor } => {
            let c = load_tensor(tensor)?;
            let rational = match &c {
                AnyTensor::Rational(r) => r.clone(),
                AnyTensor::Float(_) => return Err(Error::ExactScalarsRequired),
            };
            let p = slowness_polynomial(&rational)?;
            let search = if c.dim() == 2 { SingularSearch::exact_2d() } else { SingularSearch::shell(c.dim()) };
            let report = variety_smoothness(&p, search)?;
            let mut csv = String::from("kind");
            for i in 1..=c.dim() {
                let _ = write!(csv, ",p{i}");
            }
            csv.push_str(",value,gradient_norm\n");
            let mut rows = |kind: &str, pts: &[SingularPoint]| {
                for s in pts {
                    let _ = write!(csv, "{kind}");
                    for v in &s.point {
                        let _ = write!(csv, ",{v}");
                    }
                    let _ = writeln!(csv, ",{},{}", s.value, s.gradient_norm);
                }
            };
            rows("scheme", &report.singular_points);
            rows("radical", &report.radical_singular_points);
            ctx.write("singular_points.csv", &csv)?;
            #[derive(Serialize)]
            struct Out<'a> {
                polynomial: String,
                #[serde(flatten)]
                report: &'a crate::singularity::SmoothnessReport,
            }
            ctx.write_json("singularity.json", &Out { polynomial: p.to_string(), report: &report })?;
            Ok(if report.scheme_smooth { 0 } else { 3 })
        }
        Command::FinslerCheck { field, samples } => {
            let f = load_finsler(field, ctx)?;
            let opts = BatteryOptions {
                samples: samples.unwrap_or(ctx.cfg.sampling.battery_samples),
                seed: ctx.seed,
                ..Default::default()
            };
            let report = invariant_battery(&f, &opts)?;
            ctx.write_json("finsler_check.json", &report)?;
            Ok(if report.pass { 0 } else { 1 })
        }
        Command::Geodesic { field, x0, y0, unit_speed, max_time } => {
            let f = load_finsler(field, ctx)?;
            warn_regularity(f.field());
            let mut y = y0.clone();
            if *unit_speed {
                let s = f.finsler(x0, y0)?;
                y.iter_mut().for_each(|v| *v /= s);
            }
            let opts = GeodesicOptions { max_time: *max_time, ..ctx.geodesic_options() };
            let path = integrate_geodesic(&f, x0, &y, &opts)?;
            ctx.write("geodesic.csv", &path.to_csv())?;
            Ok(0)
        }
        Command::Traveltime { field, sources, receivers } => {
            let f = load_finsler(field, ctx)?;
            warn_regularity(f.field());
            let sources = sources.iter().map(|s| parse_point(s)).collect::<Result<Vec<_>>>()?;
            let count = receivers.unwrap_or(ctx.cfg.sampling.receivers);
            let receivers = boundary_sample(f.field().domain(), count)?;
            let opts = ShootingOptions {
                tolerance: ctx.cfg.tolerances.shooting,
                ..Default::default()
            };
            let table = travel_time_data(&f, &sources, &receivers, &opts);
            ctx.write("traveltime.csv", &table.to_csv())?;
            Ok(0)
        }
        Command::Xray { field, scalar, points, angles } => {
            let f = load_finsler(field, ctx)?;
            warn_regularity(f.field());
            let scalar = match scalar {
                Some(p) => toml::from_str::<ScalarField>(&read(p)?).map_err(|e| Error::Format(e.message().to_string()))?,
                None => ScalarField::Constant { value: 1.0 },
            };
            let fan = Fan {
                points: points.unwrap_or(ctx.cfg.sampling.fan_points),
                angles: angles.unwrap_or(ctx.cfg.sampling.fan_angles),
            };
            let opts = ctx.geodesic_options();
            let data = xray_dataset(&f, &fan, &[scalar], &opts)?;
            ctx.write("xray.csv", &data.to_csv(0))?;
            let basis: Vec<ScalarField> = (0..3)
                .map(|k| {
                    let mut a = vec![0.0; k + 1];
                    a[k] = 1.0;
                    ScalarField::RadialPolynomial { coefficients: a }
                })
                .collect();
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            let weights: Vec<f64> = (0..basis.len()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let report = desk_injectivity_experiment(&f, &basis, &weights, &fan, &opts)?;
            ctx.write_json("xray_experiment.json", &report)?;
            Ok(0)
        }
        Command::Appendixb { field } => {
            let f = load_finsler(field, ctx)?;
            warn_regularity(f.field());
            let inner = match f.field().domain() {
                Domain::Annulus { inner_radius, .. } => *inner_radius,
                Domain::Box { .. } => return Err(Error::InvalidInput("the expansion check needs an annulus".into())),
            };
            let s = &ctx.cfg.sampling;
            let m = s.herglotz_radii - 1;
            let grid: Vec<f64> = (0..=m).map(|i| inner + (1.0 - inner) * i as f64 / m as f64).collect();
            let herglotz = herglotz_check(&f, &grid, s.herglotz_angles)?;
            let opts = ExpansionOptions {
                step: ctx.cfg.steps.expansion,
                ..Default::default()
            };
            let fits = s.expansion_radii.iter().map(|&r0| lowest_point_expansion_check(&f, r0, &opts)).collect::<Result<Vec<_>>>()?;
            let pass = herglotz.pass && fits.iter().all(expansion_within_bands);
            #[derive(Serialize)]
            struct Out {
                herglotz: HerglotzReport,
                fits: Vec<ExpansionFit>,
                pass: bool,
            }
            ctx.write_json("appendixb.json", &Out { herglotz, fits, pass })?;
            Ok(if pass { 0 } else { 1 })
        }
    }
}

/// Orders within ±0.2 of (2, 3, 4) and reversibility residuals below 1e-6.
pub fn expansion_within_bands(fit: &ExpansionFit) -> bool {
    fit.slopes.iter().zip([2.0, 3.0, 4.0]).all(|(s, w)| (s - w).abs() <= 0.2) && fit.r_jerk.abs() < 1e-6 && fit.theta_accel.abs() < 1e-6
}

/// Rows `theta[,phi],s1..sn` with `s_k = λ_k^{-1/2}` the slowness radius of
/// branch `k` (descending eigenvalues, so `s1` is qP); empty where `λ_k ≤ 0`.
fn slowness_csv(dim: usize, sweep: &[crate::christoffel::GapSample]) -> String {
    let mut out = String::from("theta");
    if dim == 3 {
        out.push_str(",phi");
    }
    for k in 1..=dim {
        let _ = write!(out, ",s{k}");
    }
    out.push('\n');
    for s in sweep {
        let _ = write!(out, "{}", s.theta);
        if let Some(phi) = s.phi {
            let _ = write!(out, ",{phi}");
        }
        for &l in &s.eigenvalues {
            if l > 0.0 {
                let _ = write!(out, ",{}", 1.0 / l.sqrt());
            } else {
                out.push(',');
            }
        }
        out.push('\n');
    }
    out
}

/// Equally spaced points of the outer boundary of an annulus.
fn boundary_sample(domain: &Domain, count: usize) -> Result<Vec<Vec<f64>>> {
    if !matches!(domain, Domain::Annulus { .. }) {
        return Err(Error::InvalidInput("receivers are sampled on the outer sphere of an annulus".into()));
    }
    let dim = domain.dim();
    if dim == 2 {
        return Ok((0..count)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect());
    }
    Ok(SphereSampling::new(count).directions(dim)?.into_iter().map(|d| d.unit).collect())
}
