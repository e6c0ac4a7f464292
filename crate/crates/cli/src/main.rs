//! `randflight`: CSV front end for the telegraph-process densities.
//!
//! Every command writes a `#` header (column names and a parameter echo)
//! followed by comma-separated rows. Numbers carry 17 significant digits.
//!
//! Exit codes: 0 on success, 2 for usage errors, 3 for numerical failures.
//! `RANDFLIGHT_THREADS` sets the worker count for `mc`.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use randflight::fourier::{identity_residual, required_moments, REQUIRED_MOMENTS_CAP};
use randflight::montecarlo::{dkw_bound, ks_distance, ks_two_sample, ks_two_sample_critical, run_ensemble, DEFAULT_BINS};
use randflight::{
    Density, Direction, Error, EvalTolerance, Extended, ExtendedParams, Grid, InitialCondition, Method, MethodSettings,
    Model, Params, TruncationPolicy,
};

const THREADS_ENV: &str = "RANDFLIGHT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "randflight", version, about = "Position law of the one-dimensional random flight")]
struct Cli {
    /// Write CSV here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one method's density on a grid.
    Eval {
        #[arg(long, value_parser = parse_method)]
        method: Method,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// Evaluate two methods side by side and report the worst relative gap.
    Compare {
        #[arg(long, value_parser = parse_method)]
        method_a: Method,
        #[arg(long, value_parser = parse_method)]
        method_b: Method,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// Residuals of the moment identity over harmonics, times and moment counts.
    Identity {
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        speed: f64,
        #[arg(long, default_value_t = 0)]
        h_min: u32,
        #[arg(long, default_value_t = 15)]
        h_max: u32,
        /// Comma-separated observation times.
        #[arg(long = "time", value_delimiter = ',', default_value = "0.5,1,2,5.21,15.21")]
        times: Vec<f64>,
        /// Comma-separated moment counts.
        #[arg(long, value_delimiter = ',', default_value = "69")]
        moments: Vec<usize>,
        /// Also print the smallest moment count reaching `--eps` for each harmonic.
        #[arg(long)]
        scan: bool,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = REQUIRED_MOMENTS_CAP)]
        cap: usize,
        #[arg(long, value_enum, default_value_t = Precision::Extended)]
        precision: Precision,
    },
    /// Monte Carlo histogram with a Kolmogorov-Smirnov summary.
    Mc {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "model", value_enum, default_value_t = ModelChoice::Reversal)]
        dynamics: ModelChoice,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        /// Analytic law used for the one-sample distance.
        #[arg(long, value_parser = parse_method, default_value = "goldstein")]
        compare_to: Method,
        /// Also run the other microscopic model and report the two-sample distance.
        #[arg(long)]
        two_sample: bool,
        #[arg(long, default_value_t = 1e-3)]
        alpha: f64,
        #[command(flatten)]
        series: SeriesArgs,
    },
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    #[arg(long)]
    time: f64,
    #[arg(long, value_enum, default_value_t = IcChoice::Isotropic)]
    ic: IcChoice,
}

#[derive(Debug, Args)]
struct GridArgs {
    /// Left end of the grid; defaults to `-vt`.
    #[arg(long, allow_negative_numbers = true)]
    x_min: Option<f64>,
    /// Right end of the grid; defaults to `vt`.
    #[arg(long, allow_negative_numbers = true)]
    x_max: Option<f64>,
    #[arg(long, default_value_t = 101)]
    points: usize,
}

#[derive(Debug, Args)]
struct SeriesArgs {
    /// Fixed harmonic count; adaptive when omitted.
    #[arg(long)]
    harmonics: Option<u32>,
    #[arg(long, default_value_t = randflight::method::DEFAULT_MOMENTS)]
    moments: usize,
    /// Fixed term count for the reversal-count expansion.
    #[arg(long, conflicts_with_all = ["rel_tol", "max_terms"])]
    terms: Option<usize>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    max_terms: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IcChoice {
    Isotropic,
    BulletRight,
    BulletLeft,
}

impl From<IcChoice> for InitialCondition {
    fn from(ic: IcChoice) -> Self {
        match ic {
            IcChoice::Isotropic => InitialCondition::Isotropic,
            IcChoice::BulletRight => Direction::Right.into(),
            IcChoice::BulletLeft => Direction::Left.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelChoice {
    Reversal,
    Scattering,
}

impl From<ModelChoice> for Model {
    fn from(m: ModelChoice) -> Self {
        match m {
            ModelChoice::Reversal => Model::Reversal,
            ModelChoice::Scattering => Model::Scattering,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Precision {
    F64,
    Extended,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|_| {
        let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
    Io(io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParams(_) | Error::Domain(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl ModelArgs {
    fn params(&self) -> Result<Params, Failure> {
        Ok(Params::new(self.lambda, self.speed)?)
    }

    fn echo(&self) -> String {
        format!(
            "lambda={} speed={} time={} ic={}",
            self.lambda,
            self.speed,
            self.time,
            ic_name(self.ic.into())
        )
    }
}

impl GridArgs {
    fn build(&self, t: f64, params: &Params) -> Result<Grid<f64>, Failure> {
        let reach = params.reach(t);
        let grid = Grid::uniform(
            t,
            params,
            self.x_min.unwrap_or(-reach),
            self.x_max.unwrap_or(reach),
            self.points,
        )?;
        Ok(grid)
    }
}

impl SeriesArgs {
    fn settings(&self) -> Result<MethodSettings, Failure> {
        let truncation = match (self.terms, self.rel_tol, self.max_terms) {
            (Some(n), _, _) => TruncationPolicy::fixed(n)?,
            (None, None, None) => TruncationPolicy::default(),
            (None, rel, max) => {
                let base = EvalTolerance::default();
                TruncationPolicy::Adaptive(EvalTolerance::new(
                    rel.unwrap_or(base.rel()),
                    base.abs(),
                    max.unwrap_or(base.max_terms()),
                )?)
            }
        };
        Ok(MethodSettings {
            harmonics: self.harmonics,
            moments: self.moments,
            truncation,
        })
    }

    fn echo(&self) -> String {
        let harmonics = self.harmonics.map_or("adaptive".to_string(), |h| h.to_string());
        format!("harmonics={harmonics} moments={}", self.moments)
    }
}

fn ic_name(ic: InitialCondition) -> &'static str {
    match ic {
        InitialCondition::Isotropic => "isotropic",
        InitialCondition::BulletRight => "bullet-right",
        InitialCondition::BulletLeft => "bullet-left",
    }
}

fn model_name(m: Model) -> &'static str {
    match m {
        Model::Reversal => "reversal",
        Model::Scattering => "scattering",
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn atoms_line(d: &Density) -> String {
    let pairs: Vec<_> = d
        .atoms()
        .iter()
        .map(|a| format!("{},{}", num(a.position), num(a.weight)))
        .collect();
    format!("# atoms: {}\n", pairs.join(";"))
}

fn eval(method: Method, model: &ModelArgs, grid: &GridArgs, series: &SeriesArgs) -> Result<String, Failure> {
    let params = model.params()?;
    let grid = grid.build(model.time, &params)?;
    let density = method.density(model.ic.into(), model.time, &params, &series.settings()?)?;
    let mut out = format!("# x,density method={method} {} {}\n", model.echo(), series.echo());
    out.push_str(&atoms_line(&density));
    for &x in grid.points() {
        writeln!(out, "{},{}", num(x), num(density.continuous(x))).unwrap();
    }
    Ok(out)
}

fn compare(a: Method, b: Method, model: &ModelArgs, grid: &GridArgs, series: &SeriesArgs) -> Result<String, Failure> {
    let params = model.params()?;
    let grid = grid.build(model.time, &params)?;
    let settings = series.settings()?;
    let ic = model.ic.into();
    let (da, db) = (a.density(ic, model.time, &params, &settings)?, b.density(ic, model.time, &params, &settings)?);
    let mut out = format!(
        "# x,value_a,value_b,abs_diff,rel_diff method_a={a} method_b={b} {} {}\n",
        model.echo(),
        series.echo()
    );
    let mut worst = (0.0f64, 0.0f64);
    for &x in grid.points() {
        let (va, vb) = (da.continuous(x), db.continuous(x));
        let abs = (va - vb).abs();
        let rel = if vb != 0.0 { abs / vb.abs() } else if abs == 0.0 { 0.0 } else { f64::INFINITY };
        worst = (worst.0.max(abs), worst.1.max(rel));
        writeln!(out, "{},{},{},{},{}", num(x), num(va), num(vb), num(abs), num(rel)).unwrap();
    }
    writeln!(out, "# summary max_abs_diff={} max_rel_diff={}", num(worst.0), num(worst.1)).unwrap();
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn identity(
    lambda: f64,
    speed: f64,
    harmonics: std::ops::RangeInclusive<u32>,
    times: &[f64],
    moments: &[usize],
    scan: Option<(f64, usize)>,
    precision: Precision,
) -> Result<String, Failure> {
    if harmonics.is_empty() {
        return Err(Failure::Usage("empty harmonic range".into()));
    }
    let params = Params::new(lambda, speed)?;
    let wide: ExtendedParams = params.cast();
    let mut out = format!(
        "# h,t,moments,residual lambda={lambda} speed={speed} precision={}\n",
        match precision {
            Precision::F64 => "f64",
            Precision::Extended => "extended",
        }
    );
    for h in harmonics.clone() {
        for &t in times {
            for &m in moments {
                let r = match precision {
                    Precision::F64 => identity_residual(h, t, &params, m)?,
                    Precision::Extended => identity_residual(h, Extended::from(t), &wide, m)?.hi(),
                };
                writeln!(out, "{h},{t},{m},{}", num(r)).unwrap();
            }
        }
    }
    if let Some((eps, cap)) = scan {
        writeln!(out, "# h,required_moments eps={eps} cap={cap}").unwrap();
        for h in harmonics {
            let m = match precision {
                Precision::F64 => required_moments(h, eps, times, &params, cap)?,
                Precision::Extended => {
                    let wide_times: Vec<Extended> = times.iter().map(|&t| Extended::from(t)).collect();
                    required_moments(h, eps, &wide_times, &wide, cap)?
                }
            };
            writeln!(out, "{h},{m}").unwrap();
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn monte_carlo(
    model: &ModelArgs,
    trials: u64,
    seed: u64,
    dynamics: Model,
    bins: usize,
    compare_to: Method,
    two_sample: bool,
    alpha: f64,
    series: &SeriesArgs,
) -> Result<String, Failure> {
    let params = model.params()?;
    let ic = model.ic.into();
    let result = run_ensemble(trials, model.time, &params, ic, dynamics, bins, seed)?;
    let analytic = compare_to.density(ic, model.time, &params, &series.settings()?)?;
    let ks = ks_distance(&result, &analytic)?;
    let mut out = format!(
        "# bin_left,bin_right,count,density trials={trials} seed={seed} model={} bins={bins} {}\n",
        model_name(dynamics),
        model.echo()
    );
    let (reach, n) = (params.reach(model.time), trials as f64);
    writeln!(
        out,
        "# atoms: {},{};{},{}",
        num(-reach),
        num(result.atom_counts.1 as f64 / n),
        num(reach),
        num(result.atom_counts.0 as f64 / n)
    )
    .unwrap();
    for ((w, &c), (_, density)) in result.bin_edges.windows(2).zip(&result.counts).zip(result.histogram_density()) {
        writeln!(out, "{},{},{c},{}", num(w[0]), num(w[1]), num(density)).unwrap();
    }
    writeln!(
        out,
        "# summary ks={} reference={compare_to} dkw_bound={} alpha={alpha}",
        num(ks),
        num(dkw_bound(trials, alpha))
    )
    .unwrap();
    if two_sample {
        let other = match dynamics {
            Model::Reversal => Model::Scattering,
            Model::Scattering => Model::Reversal,
        };
        let partner = run_ensemble(trials, model.time, &params, ic, other, bins, seed.wrapping_add(1))?;
        writeln!(
            out,
            "# summary ks_two_sample={} other_model={} critical={}",
            num(ks_two_sample(&result, &partner)?),
            model_name(other),
            num(ks_two_sample_critical(trials, trials, alpha))
        )
        .unwrap();
    }
    Ok(out)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let csv = match cli.command {
        Command::Eval { method, model, grid, series } => eval(method, &model, &grid, &series)?,
        Command::Compare { method_a, method_b, model, grid, series } => {
            compare(method_a, method_b, &model, &grid, &series)?
        }
        Command::Identity { lambda, speed, h_min, h_max, times, moments, scan, eps, cap, precision } => identity(
            lambda,
            speed,
            h_min..=h_max,
            &times,
            &moments,
            scan.then_some((eps, cap)),
            precision,
        )?,
        Command::Mc { model, trials, seed, dynamics, bins, compare_to, two_sample, alpha, series } => {
            monte_carlo(&model, trials, seed, dynamics.into(), bins, compare_to, two_sample, alpha, &series)?
        }
    };
    match cli.output {
        Some(path) => fs::write(path, csv)?,
        None => io::stdout().lock().write_all(csv.as_bytes())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
