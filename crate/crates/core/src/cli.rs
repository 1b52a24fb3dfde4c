//! `polydoa` command-line interface.
//!
//! Results go to stdout as JSON (CSV for `bench`). Failures print a single
//! JSON line `{"error": kind, "detail": message}` to stderr and exit with 2
//! for usage and validation errors, 1 for runtime errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::agcd::{uvgcd_with, DEFAULT_GN_MAX_ITER, DEFAULT_GN_TOL};
use crate::bench::{self, CertifyInputs, Method, MethodOptions, RootSource, SweepConfig};
use crate::cluster::{collect_roots, default_delta_theta_deg, default_min_members, delta_from_uncertainty, detect_and_localize_with};
use crate::error::DoaError;
use crate::io::{parse_complex, read_snapshots, write_snapshots, SnapshotFormat};
use crate::model::{generate_snapshots, sample_covariance, Scenario};
use crate::poly::ComplexPolynomial;
use crate::subspace::{criterion_values, hermitian_eig, noise_subspace, InformationCriterion, SubspaceDecomposition};

/// Budget used by `--method uvgcd` when `--zeta` is absent.
pub const DEFAULT_UVGCD_ZETA: f64 = 0.02;

#[derive(Debug, Parser)]
#[command(name = "polydoa", version, about = "Source detection and direction finding on uniform linear arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a snapshot matrix and write it to a file
    Simulate(SimulateArgs),
    /// Estimate the number of sources in a snapshot file
    Detect(EstimateArgs),
    /// Estimate the number of sources and their directions
    Locate(EstimateArgs),
    /// Approximate GCD of two polynomials
    Gcd(GcdArgs),
    /// Monte Carlo sweep over SNR, written as CSV
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scenario JSON file (n_sensors, doas_deg, snapshots, snr_db, seed); overrides the inline flags
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Number of sensors
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Source directions in degrees, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    doas: Vec<f64>,
    /// Number of snapshots
    #[arg(long, default_value_t = 100)]
    t: usize,
    /// Signal-to-noise ratio in dB
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    snr: f64,
    /// Random seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output format
    #[arg(long, value_enum, default_value_t = FileFormat::Csv)]
    format: FileFormat,
    /// Output file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FileFormat {
    Csv,
    Bin,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RootsArg {
    All,
    Noise,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CertifyArg {
    LastTwo,
    Noise,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    /// Snapshot file (CSV or SNAP binary)
    #[arg(long = "in")]
    input: PathBuf,
    /// aic, mdl, cluster, cluster+certify, rootmusic, rootmusic_mdl or uvgcd
    #[arg(long)]
    method: String,
    /// Perturbation budget for uvgcd
    #[arg(long, default_value_t = DEFAULT_UVGCD_ZETA)]
    zeta: f64,
    /// Number of sources for rootmusic
    #[arg(long)]
    l: Option<usize>,
    /// SNR in dB used to pick the clustering radius (the 0-15 dB row when absent)
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<f64>,
    /// Angular uncertainty in degrees setting the clustering radius; overrides --snr
    #[arg(long)]
    delta_theta: Option<f64>,
    /// Smallest root cluster counted as a source (default: half the array)
    #[arg(long)]
    min_cluster: Option<usize>,
    /// Eigenvectors whose roots are clustered
    #[arg(long, value_enum, default_value_t = RootsArg::All)]
    roots: RootsArg,
    /// Eigenvectors used by the certificate refinement
    #[arg(long, value_enum, default_value_t = CertifyArg::Noise)]
    certify_with: CertifyArg,
    /// Gauss-Newton step tolerance
    #[arg(long, default_value_t = DEFAULT_GN_TOL)]
    tol: f64,
}

#[derive(Debug, Args)]
struct GcdArgs {
    /// Coefficients of f, constant term first; entries like 1, -2, 1+2j
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    f: Vec<String>,
    /// Coefficients of g, constant term first
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    g: Vec<String>,
    /// Coefficient perturbation budget
    #[arg(long, default_value_t = 1e-8)]
    zeta: f64,
    /// Gauss-Newton iteration cap
    #[arg(long, default_value_t = DEFAULT_GN_MAX_ITER)]
    max_iter: usize,
    /// Gauss-Newton step tolerance
    #[arg(long, default_value_t = DEFAULT_GN_TOL)]
    tol: f64,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Sweep configuration JSON; overrides the inline flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of sensors
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Source directions in degrees, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-10.0, 20.0])]
    doas: Vec<f64>,
    /// Snapshots per trial
    #[arg(long, default_value_t = 100)]
    t: usize,
    /// First SNR in dB
    #[arg(long, default_value_t = -15.0, allow_hyphen_values = true)]
    snr_start: f64,
    /// Last SNR in dB (inclusive)
    #[arg(long, default_value_t = 30.0, allow_hyphen_values = true)]
    snr_stop: f64,
    /// SNR increment in dB
    #[arg(long, default_value_t = 3.0)]
    snr_step: f64,
    /// Trials per SNR
    #[arg(long, default_value_t = 500)]
    trials: usize,
    /// Methods, comma separated
    #[arg(long, value_delimiter = ',', default_value = "mdl,cluster,rootmusic")]
    methods: Vec<String>,
    /// Master seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Clustering angular uncertainty in degrees (SNR table when absent)
    #[arg(long)]
    delta_theta: Option<f64>,
    /// Smallest root cluster counted as a source
    #[arg(long)]
    min_cluster: Option<usize>,
    /// CSV output; a JSON sidecar with the configuration is written next to it
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let detail = e.to_string().split_whitespace().collect::<Vec<_>>().join(" ");
            report("usage_error", &detail);
            return 2;
        }
    };
    let mut stdout = std::io::stdout().lock();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Detect(a) => estimate(a, false, &mut stdout),
        Command::Locate(a) => estimate(a, true, &mut stdout),
        Command::Gcd(a) => gcd(a, &mut stdout),
        Command::Bench(a) => run_bench(a, &mut stdout),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            report(e.kind(), &e.to_string());
            exit_code(&e)
        }
    }
}

fn exit_code(e: &DoaError) -> i32 {
    match e {
        DoaError::Domain(_) | DoaError::Config(_) => 2,
        _ => 1,
    }
}

fn report(kind: &str, detail: &str) {
    eprintln!("{}", json!({ "error": kind, "detail": detail }));
}

/// Rounds to 12 significant digits.
fn sig12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(sig12(x))
    } else {
        Value::Null
    }
}

fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

fn complex_json(z: Complex64) -> Value {
    json!([num(z.re), num(z.im)])
}

fn emit<W: Write>(out: &mut W, v: &Value) -> crate::Result<()> {
    let s = serde_json::to_string_pretty(v).map_err(|e| DoaError::Io(e.to_string()))?;
    writeln!(out, "{s}")?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> crate::Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| DoaError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| DoaError::Config(format!("{}: {e}", path.display())))
}

fn simulate(a: SimulateArgs) -> crate::Result<()> {
    let sc = match &a.scenario {
        Some(p) => {
            let s: Scenario = read_json(p)?;
            s.validate()?;
            s
        }
        None => Scenario::new(a.n, a.doas.clone(), a.t, a.snr, a.seed)?,
    };
    let x = generate_snapshots(&sc)?;
    let format = match a.format {
        FileFormat::Csv => SnapshotFormat::Csv,
        FileFormat::Bin => SnapshotFormat::Binary,
    };
    write_snapshots(&a.out, &x.data, format)
}

fn method_options(a: &EstimateArgs) -> MethodOptions {
    MethodOptions {
        delta_theta_deg: a.delta_theta,
        min_cluster: a.min_cluster,
        roots: match a.roots {
            RootsArg::All => RootSource::All,
            RootsArg::Noise => RootSource::Noise,
        },
        gn_tol: a.tol,
        certify_inputs: match a.certify_with {
            CertifyArg::LastTwo => CertifyInputs::LastTwo,
            CertifyArg::Noise => CertifyInputs::NoiseSubspace,
        },
    }
}

fn estimate<W: Write>(a: EstimateArgs, locate: bool, out: &mut W) -> crate::Result<()> {
    if a.method == "uvgcd" {
        return estimate_uvgcd(a, locate, out);
    }
    let method: Method = a.method.parse()?;
    if !locate && matches!(method, Method::RootMusic) {
        return Err(DoaError::Config("rootmusic needs a known order; use locate".into()));
    }
    if let Some(dt) = a.delta_theta {
        if !(dt > 0.0) {
            return Err(DoaError::Config("--delta-theta must be positive".into()));
        }
    }
    if !(a.tol > 0.0) {
        return Err(DoaError::Config("--tol must be positive".into()));
    }
    let true_l = match (method, a.l) {
        (Method::RootMusic, None) => return Err(DoaError::Config("rootmusic requires --l".into())),
        (Method::RootMusic, Some(0)) => return Err(DoaError::Domain("rootmusic requires --l >= 1".into())),
        (_, l) => l.unwrap_or(0),
    };

    let x = read_snapshots(&a.input)?;
    let n = x.nrows();
    if n < 2 {
        return Err(DoaError::Domain("snapshot file needs at least two sensors".into()));
    }
    if method == Method::RootMusic && true_l >= n {
        return Err(DoaError::Domain(format!("--l must be below the sensor count {n}")));
    }
    let d = hermitian_eig(&sample_covariance(&x)?)?;
    let t = x.ncols();
    let opts = method_options(&a);
    let snr = a.snr.unwrap_or(10.0);
    let est = bench::run_method(method, &d, t, snr, true_l, &opts)?;

    let mut v = json!({ "method": method.name(), "l_hat": est.l_hat });
    if locate {
        v["doas_deg"] = nums(&est.doas_deg);
        if method == Method::ClusterCertify {
            v["certificate_residual"] = est.certificate_residual.map(num).unwrap_or(Value::Null);
            v["epsilon"] = est.epsilon.map(num).unwrap_or(Value::Null);
            v["iterations"] = est.iterations.map(|i| json!(i)).unwrap_or(Value::Null);
        }
    }
    v["details"] = details(method, &d, t, snr, &opts)?;
    emit(out, &v)
}

/// Approximate GCD of the two smallest-eigenvalue eigenvectors; its degree
/// is the source count and its roots the directions.
fn estimate_uvgcd<W: Write>(a: EstimateArgs, locate: bool, out: &mut W) -> crate::Result<()> {
    if !(a.zeta > 0.0) || !(a.tol > 0.0) {
        return Err(DoaError::Config("--zeta and --tol must be positive".into()));
    }
    let x = read_snapshots(&a.input)?;
    let n = x.nrows();
    if n < 3 {
        return Err(DoaError::Domain("uvgcd needs at least three sensors".into()));
    }
    let d = hermitian_eig(&sample_covariance(&x)?)?;
    let sol = uvgcd_with(&d.eigenvector_polynomial(n - 2), &d.eigenvector_polynomial(n - 1), a.zeta, a.tol, DEFAULT_GN_MAX_ITER)?;
    let mut v = json!({ "method": "uvgcd", "l_hat": sol.degree() });
    if locate {
        let roots = if sol.degree() > 0 { sol.u.roots()? } else { Vec::new() };
        let mut doas: Vec<f64> = roots.iter().map(|&z| crate::subspace::phase_to_doa(z)).collect();
        doas.sort_by(f64::total_cmp);
        v["doas_deg"] = nums(&doas);
        v["certificate_residual"] = num(sol.certificate_residual);
    }
    v["details"] = json!({
        "n_sensors": n,
        "snapshots": x.ncols(),
        "eigenvalues": nums(&d.eigenvalues),
        "zeta": num(a.zeta),
        "epsilon": num(sol.epsilon),
        "iterations": sol.iterations,
    });
    emit(out, &v)
}

fn details(method: Method, d: &SubspaceDecomposition, t: usize, snr: f64, opts: &MethodOptions) -> crate::Result<Value> {
    let mut v = json!({ "n_sensors": d.dim(), "snapshots": t, "eigenvalues": nums(&d.eigenvalues) });
    match method {
        Method::Aic | Method::Mdl | Method::RootMusicMdl => {
            let ic = if method == Method::Aic { InformationCriterion::Aic } else { InformationCriterion::Mdl };
            v["criterion"] = nums(&criterion_values(&d.eigenvalues, t, ic)?);
        }
        Method::Cluster | Method::ClusterCertify => {
            let n = d.dim();
            let q = match opts.roots {
                RootSource::All => d.eigenvectors.clone(),
                RootSource::Noise => noise_subspace(d, crate::subspace::mdl_order(&d.eigenvalues, t)?)?,
            };
            let dtheta = opts.delta_theta_deg.unwrap_or_else(|| default_delta_theta_deg(snr));
            let delta = delta_from_uncertainty(dtheta);
            let min = opts.min_cluster.unwrap_or_else(|| default_min_members(n));
            let det = detect_and_localize_with(&collect_roots(&q)?, delta, n, min)?;
            v["delta_theta_deg"] = num(dtheta);
            v["delta"] = num(delta);
            v["min_cluster"] = json!(min.max(crate::cluster::MIN_SOURCE_CLUSTER));
            v["cluster_sizes"] = json!(det.cluster_sizes);
            v["consensus_roots"] = Value::Array(det.consensus_roots.iter().map(|&z| complex_json(z)).collect());
            v["forced_split"] = json!(det.forced_split);
        }
        Method::RootMusic => {}
    }
    Ok(v)
}

fn parse_poly(entries: &[String], name: &str) -> crate::Result<ComplexPolynomial> {
    let coeffs = entries
        .iter()
        .map(|s| parse_complex(s).map_err(|e| DoaError::Config(format!("--{name}: {e}"))))
        .collect::<crate::Result<Vec<_>>>()?;
    let p = ComplexPolynomial::new(coeffs);
    if p.degree().unwrap_or(0) == 0 {
        return Err(DoaError::Domain(format!("--{name} must have degree at least 1")));
    }
    Ok(p)
}

fn gcd<W: Write>(a: GcdArgs, out: &mut W) -> crate::Result<()> {
    let f = parse_poly(&a.f, "f")?;
    let g = parse_poly(&a.g, "g")?;
    if !(a.tol > 0.0) || a.max_iter == 0 {
        return Err(DoaError::Config("--tol must be positive and --max-iter nonzero".into()));
    }
    let sol = uvgcd_with(&f, &g, a.zeta, a.tol, a.max_iter)?;
    let mut roots = if sol.degree() > 0 { sol.u.roots()? } else { Vec::new() };
    roots.sort_by(|x, y| x.arg().total_cmp(&y.arg()).then(x.norm().total_cmp(&y.norm())));
    let v = json!({
        "degree": sol.degree(),
        "u": sol.u.coeffs().iter().map(|&z| complex_json(z)).collect::<Vec<_>>(),
        "roots": roots.iter().map(|&z| complex_json(z)).collect::<Vec<_>>(),
        "epsilon": num(sol.epsilon),
        "certificate_residual": num(sol.certificate_residual),
        "iterations": sol.iterations,
        "converged": sol.converged,
    });
    emit(out, &v)
}

fn run_bench<W: Write>(a: BenchArgs, out: &mut W) -> crate::Result<()> {
    let cfg = match &a.config {
        Some(p) => read_json::<SweepConfig>(p)?,
        None => SweepConfig {
            n_sensors: a.n,
            doas_deg: a.doas.clone(),
            snapshots: a.t,
            snr_start_db: a.snr_start,
            snr_stop_db: a.snr_stop,
            snr_step_db: a.snr_step,
            trials: a.trials,
            methods: a.methods.iter().map(|m| m.parse()).collect::<crate::Result<_>>()?,
            master_seed: a.seed,
            options: MethodOptions { delta_theta_deg: a.delta_theta, min_cluster: a.min_cluster, ..Default::default() },
        },
    };
    cfg.validate()?;
    let rows = bench::run_sweep(&cfg)?;
    match &a.out {
        Some(path) => {
            let mut csv = Vec::new();
            bench::write_csv(&rows, cfg.n_sensors, &mut csv)?;
            std::fs::write(path, csv)?;
            let mut side = Vec::new();
            bench::write_sidecar(&cfg, &mut side)?;
            std::fs::write(path.with_extension("json"), side)?;
            Ok(())
        }
        None => bench::write_csv(&rows, cfg.n_sensors, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_rounds() {
        assert_eq!(sig12(1.0 / 3.0), 0.333333333333);
        assert_eq!(sig12(0.0), 0.0);
        assert!(sig12(f64::NAN).is_nan());
        assert_eq!(num(f64::INFINITY), Value::Null);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with_args(["polydoa", "bogus"]), 2);
        assert_eq!(main_with_args(["polydoa", "--help"]), 0);
        assert_eq!(exit_code(&DoaError::Io("x".into())), 1);
        assert_eq!(exit_code(&DoaError::Domain("x".into())), 2);
    }
}
