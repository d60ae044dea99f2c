//! `lensint` command-line front end.
//!
//! Series go to CSV (header row, 17 significant digits), scalar results and
//! run manifests to JSON. Exit codes: 0 success, 1 check failure, 2 usage
//! error, 3 domain or validity error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::array_model::{LensArrayConfig, SincConvention};
use crate::error::Error;
use crate::exec::{map_indexed, Parallelism};
use crate::harness::{run_scenario_with, ScenarioConfig};
use crate::interference::sweep_pattern_with;
use crate::selfcheck::{run_selfcheck, SelfCheckOptions};
use crate::stochastic::{effective_prob_closed, SectorModel};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "LENSINT_OUT_DIR";

pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DOMAIN: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "lensint",
    version,
    about = "Lens-array uplink interference simulator"
)]
struct Cli {
    /// Cap on worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Interference pattern versus angular separation.
    Pattern(PatternArgs),
    /// Probability that an interferer falls inside the mainlobe.
    Prob(ProbArgs),
    /// Density table of the normalized angular separation.
    Density(DensityArgs),
    /// Multiuser drop ensemble.
    Scenario(ScenarioArgs),
    /// Runs the oracle-equivalence and invariant checks.
    Selfcheck(SelfcheckArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Convention {
    Normalized,
    Unnormalized,
}

impl From<Convention> for SincConvention {
    fn from(c: Convention) -> Self {
        match c {
            Convention::Normalized => SincConvention::Normalized,
            Convention::Unnormalized => SincConvention::Unnormalized,
        }
    }
}

#[derive(Debug, Args)]
struct ArrayArgs {
    /// Normalized azimuth lens dimension D_y / lambda.
    #[arg(long)]
    d_tilde: f64,
    /// Normalized vertical lens dimension D_z / lambda.
    #[arg(long, default_value_t = 1.0)]
    a_z: f64,
    /// Element count override (odd); derived from d-tilde by default.
    #[arg(long)]
    elements: Option<usize>,
    /// Common phase shift in radians.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    phi0: f64,
    #[arg(long, value_enum, default_value_t = Convention::Normalized)]
    convention: Convention,
}

impl ArrayArgs {
    fn build(&self) -> Result<LensArrayConfig, Error> {
        let mut config = LensArrayConfig::new(self.d_tilde, self.a_z)?
            .with_phi0(self.phi0)?
            .with_convention(self.convention.into());
        if let Some(m) = self.elements {
            config = config.with_element_count(m)?;
        }
        Ok(config)
    }

    fn params(&self) -> Value {
        json!({
            "d_tilde": self.d_tilde,
            "a_z": self.a_z,
            "elements": self.elements,
            "phi0": self.phi0,
            "convention": format!("{:?}", self.convention).to_lowercase(),
        })
    }
}

#[derive(Debug, Args)]
struct PatternArgs {
    #[command(flatten)]
    array: ArrayArgs,
    /// Desired user's DOA in degrees.
    #[arg(long, conflicts_with = "phi_l_tilde", allow_negative_numbers = true)]
    phi_l_deg: Option<f64>,
    /// Desired user's spatial frequency sin(phi).
    #[arg(long, allow_negative_numbers = true)]
    phi_l_tilde: Option<f64>,
    #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
    delta_min: f64,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    delta_max: f64,
    #[arg(long, default_value_t = 2001, value_parser = clap::value_parser!(u64).range(2..))]
    steps: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Closed,
    Quadrature,
    Mc,
}

#[derive(Debug, Args)]
struct ProbArgs {
    #[arg(long)]
    d_tilde: f64,
    #[arg(long, value_enum)]
    method: Method,
    #[arg(long, required_if_eq("method", "mc"))]
    samples: Option<usize>,
    #[arg(long, required_if_eq("method", "mc"))]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DensityArgs {
    #[arg(long)]
    d_tilde: f64,
    /// Defaults to the lower edge of the support, -sqrt(3) d_tilde.
    #[arg(long, allow_negative_numbers = true)]
    z_min: Option<f64>,
    /// Defaults to the upper edge of the support, sqrt(3) d_tilde.
    #[arg(long, allow_negative_numbers = true)]
    z_max: Option<f64>,
    #[arg(long, default_value_t = 1001, value_parser = clap::value_parser!(u64).range(2..))]
    steps: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[command(flatten)]
    array: ArrayArgs,
    #[arg(long, default_value_t = 10)]
    users: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Summary JSON path; the CDF goes to `<stem>_cdf.csv` beside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SelfcheckArgs {
    #[arg(long, hide = true)]
    corrupt_closed_form: bool,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Domain(Error),
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

#[derive(Debug, Serialize)]
struct Runtime {
    threads: Option<usize>,
    wall_clock_seconds: f64,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    command: &'static str,
    tool_version: &'static str,
    seed: Option<u64>,
    params: Value,
    outputs: Vec<String>,
    metrics: Value,
    runtime: Runtime,
}

struct Context {
    threads: Option<usize>,
    par: Parallelism,
    start: Instant,
}

impl Context {
    fn write_manifest(
        &self,
        primary: &Path,
        command: &'static str,
        seed: Option<u64>,
        params: Value,
        outputs: &[&Path],
        metrics: Value,
    ) -> Result<PathBuf, Failure> {
        let manifest = RunManifest {
            command,
            tool_version: env!("CARGO_PKG_VERSION"),
            seed,
            params,
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            metrics,
            runtime: Runtime {
                threads: self.threads,
                wall_clock_seconds: self.start.elapsed().as_secs_f64(),
            },
        };
        let path = sibling(primary, "manifest.json");
        write_json(&path, &manifest)?;
        Ok(path)
    }
}

fn sibling(primary: &Path, suffix: &str) -> PathBuf {
    let stem = primary
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    primary.with_file_name(format!("{stem}.{suffix}"))
}

fn resolve_out(out: Option<PathBuf>, default_name: &str) -> PathBuf {
    out.unwrap_or_else(|| match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) => PathBuf::from(dir).join(default_name),
        None => PathBuf::from(default_name),
    })
}

fn io_failure(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Usage(format!("cannot write {}: {e}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_failure(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_failure(path, e))?;
    w.write_record(header).map_err(|e| io_failure(path, e))?;
    for row in rows {
        w.write_record(row).map_err(|e| io_failure(path, e))?;
    }
    w.flush().map_err(|e| io_failure(path, e))
}

/// 17 significant digits, enough to round-trip any `f64`.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|i| lo + (hi - lo) * (i as f64 / (steps - 1) as f64))
        .collect()
}

fn cmd_pattern(ctx: &Context, args: PatternArgs) -> Result<(), Failure> {
    let config = args.array.build()?;
    let phi_l = match (args.phi_l_deg, args.phi_l_tilde) {
        (Some(deg), _) => deg.to_radians().sin(),
        (None, Some(t)) => t,
        (None, None) => 0.0,
    };
    if args.delta_max.partial_cmp(&args.delta_min) != Some(std::cmp::Ordering::Greater) {
        return Err(Failure::Usage("--delta-max must exceed --delta-min".into()));
    }
    let grid = linspace(args.delta_min, args.delta_max, args.steps as usize);
    let series = sweep_pattern_with(&config, phi_l, &grid, ctx.par)?;

    let rows: Vec<Vec<String>> = series
        .points
        .iter()
        .map(|p| {
            vec![
                num(p.delta),
                num(p.sample.pair.theta_norm),
                num(p.sample.power_linear),
                num(p.sample.power_db),
                p.sample.effective.to_string(),
            ]
        })
        .collect();
    let out = resolve_out(args.out, "pattern.csv");
    write_csv(
        &out,
        &[
            "delta",
            "theta_norm",
            "power_linear",
            "power_db",
            "effective",
        ],
        &rows,
    )?;

    let mut params = args.array.params();
    params["phi_l_deg"] = json!(args.phi_l_deg);
    params["phi_l_tilde"] = json!(phi_l);
    params["delta_min"] = json!(args.delta_min);
    params["delta_max"] = json!(args.delta_max);
    params["steps"] = json!(args.steps);
    let peak = series.argmax().map(|p| p.delta);
    let manifest = ctx.write_manifest(
        &out,
        "pattern",
        None,
        params,
        &[&out],
        json!({ "rows": rows.len(), "skipped": series.skipped, "argmax_delta": peak }),
    )?;
    println!(
        "wrote {} ({} rows, {} skipped) and {}",
        out.display(),
        rows.len(),
        series.skipped,
        manifest.display()
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct ProbRecord {
    d_tilde: f64,
    method: &'static str,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sample_count: Option<usize>,
}

fn cmd_prob(ctx: &Context, args: ProbArgs) -> Result<(), Failure> {
    let sector = SectorModel::default();
    let record = match args.method {
        Method::Closed => ProbRecord {
            d_tilde: args.d_tilde,
            method: "closed",
            value: effective_prob_closed(args.d_tilde)?,
            std_error: None,
            sample_count: None,
        },
        Method::Quadrature => ProbRecord {
            d_tilde: args.d_tilde,
            method: "quadrature",
            value: sector.effective_prob_quadrature(args.d_tilde)?,
            std_error: None,
            sample_count: None,
        },
        Method::Mc => {
            let samples = args
                .samples
                .ok_or_else(|| Failure::Usage("--samples is required for mc".into()))?;
            let seed = args
                .seed
                .ok_or_else(|| Failure::Usage("--seed is required for mc".into()))?;
            let est = sector.effective_prob_mc(args.d_tilde, samples, seed, ctx.par)?;
            ProbRecord {
                d_tilde: args.d_tilde,
                method: "mc",
                value: est.value,
                std_error: Some(est.std_error),
                sample_count: Some(est.sample_count),
            }
        }
    };
    let out = resolve_out(args.out, "prob.json");
    write_json(&out, &record)?;
    let params = json!({
        "d_tilde": args.d_tilde,
        "method": record.method,
        "samples": args.samples,
    });
    ctx.write_manifest(&out, "prob", args.seed, params, &[&out], json!({}))?;
    println!(
        "{}",
        serde_json::to_string(&record).map_err(|e| io_failure(&out, e))?
    );
    Ok(())
}

fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

fn cmd_density(ctx: &Context, args: DensityArgs) -> Result<(), Failure> {
    let sector = SectorModel::default();
    let edge = 2.0 * sector.support() * args.d_tilde;
    let z_min = args.z_min.unwrap_or(-edge);
    let z_max = args.z_max.unwrap_or(edge);
    if z_max.partial_cmp(&z_min) != Some(std::cmp::Ordering::Greater) {
        return Err(Failure::Usage("--z-max must exceed --z-min".into()));
    }
    let zs = linspace(z_min, z_max, args.steps as usize);
    let fs = map_indexed(zs.len(), ctx.par, |i| sector.theta_pdf(zs[i], args.d_tilde))?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let rows: Vec<Vec<String>> = zs
        .iter()
        .zip(&fs)
        .map(|(z, f)| vec![num(*z), num(*f)])
        .collect();
    let out = resolve_out(args.out, "density.csv");
    write_csv(&out, &["z", "f_theta"], &rows)?;
    let integral = trapezoid(&zs, &fs);
    let params = json!({
        "d_tilde": args.d_tilde,
        "z_min": z_min,
        "z_max": z_max,
        "steps": args.steps,
    });
    ctx.write_manifest(
        &out,
        "density",
        None,
        params,
        &[&out],
        json!({ "trapezoid_integral": integral }),
    )?;
    println!(
        "wrote {} ({} rows), trapezoidal integral {integral:.9}",
        out.display(),
        rows.len()
    );
    Ok(())
}

fn cmd_scenario(ctx: &Context, args: ScenarioArgs) -> Result<(), Failure> {
    let config = ScenarioConfig::new(args.array.build()?, args.users, args.trials, args.seed)?;
    let result = run_scenario_with(&config, ctx.par)?;

    let out = resolve_out(args.out, "scenario.json");
    write_json(&out, &result.summary)?;
    let cdf_path = sibling(&out, "cdf.csv");
    let cdf_path = cdf_path.with_file_name(
        cdf_path
            .file_name()
            .map(|n| n.to_string_lossy().replacen(".cdf.csv", "_cdf.csv", 1))
            .unwrap_or_else(|| "scenario_cdf.csv".into()),
    );
    let rows: Vec<Vec<String>> = result
        .cdf
        .iter()
        .map(|p| vec![num(p.power_linear), num(p.probability)])
        .collect();
    write_csv(&cdf_path, &["power_linear", "cdf"], &rows)?;

    let mut params = args.array.params();
    params["users"] = json!(args.users);
    params["trials"] = json!(args.trials);
    let s = &result.summary;
    ctx.write_manifest(
        &out,
        "scenario",
        Some(args.seed),
        params,
        &[&out, &cdf_path],
        json!({
            "captured_fraction": s.captured_fraction,
            "mean_effective_count": s.mean_effective_count,
        }),
    )?;
    println!(
        "mean exact {:.6e}, mean effective {:.6e}, captured fraction {:.4}, \
         mean effective interferers {:.4} +/- {:.4}",
        s.exact.mean,
        s.effective.mean,
        s.captured_fraction,
        s.mean_effective_count,
        s.effective_count_std_error
    );
    Ok(())
}

fn cmd_selfcheck(ctx: &Context, args: SelfcheckArgs) -> Result<(), Failure> {
    let opts = SelfCheckOptions {
        corrupt_closed_form: args.corrupt_closed_form,
        parallelism: ctx.par,
    };
    let outcomes = run_selfcheck(&opts);
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
    for o in &outcomes {
        println!(
            "{} {:<width$}  {:>7.2}s  {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.seconds,
            o.detail
        );
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!(
        "{}/{} checks passed in {:.1}s",
        outcomes.len() - failed,
        outcomes.len(),
        ctx.start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        Err(Failure::Checks)
    } else {
        Ok(())
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let ctx = Context {
        threads: cli.threads,
        par: Parallelism::from_threads(cli.threads),
        start: Instant::now(),
    };
    let result = match cli.command {
        Command::Pattern(a) => cmd_pattern(&ctx, a),
        Command::Prob(a) => cmd_prob(&ctx, a),
        Command::Density(a) => cmd_density(&ctx, a),
        Command::Scenario(a) => cmd_scenario(&ctx, a),
        Command::Selfcheck(a) => cmd_selfcheck(&ctx, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_DOMAIN)
        }
        Err(Failure::Checks) => ExitCode::from(EXIT_CHECK_FAILED),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 476.190_476_190_476_2, 0.0] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn sibling_paths() {
        assert_eq!(
            sibling(Path::new("/tmp/a/pattern.csv"), "manifest.json"),
            PathBuf::from("/tmp/a/pattern.manifest.json")
        );
    }

    #[test]
    fn linspace_hits_zero() {
        let g = linspace(-0.5, 0.5, 2001);
        assert_eq!(g[1000], 0.0);
        assert_eq!(g[0], -0.5);
        assert_eq!(g[2000], 0.5);
    }

    #[test]
    fn trapezoid_of_line() {
        let xs = linspace(0.0, 2.0, 11);
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x).collect();
        assert!((trapezoid(&xs, &ys) - 6.0).abs() < 1e-12);
    }
}
