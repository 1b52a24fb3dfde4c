//! Seeded Monte Carlo sweeps over SNR.
//!
//! Every trial draws one snapshot matrix from a seed derived from
//! `(master_seed, snr_index, trial)`, so all methods at a grid point see the
//! same data and the output is independent of scheduling.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agcd::{certify_many, DEFAULT_GN_MAX_ITER, DEFAULT_GN_TOL};
use crate::cluster::{
    collect_roots, default_delta_theta_deg, default_min_members, delta_from_uncertainty, detect_and_localize_with,
};
use crate::error::{DoaError, Result};
use crate::model::{derive_seed, generate_snapshots, sample_covariance, Scenario};
use crate::poly::ComplexPolynomial;
use crate::subspace::{hermitian_eig, mdl_order, aic_order, noise_subspace, phase_to_doa, root_music, SubspaceDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Aic,
    Mdl,
    Cluster,
    #[serde(rename = "rootmusic")]
    RootMusic,
    #[serde(rename = "rootmusic_mdl")]
    RootMusicMdl,
    ClusterCertify,
}

impl Method {
    pub const ALL: [Method; 6] =
        [Method::Aic, Method::Mdl, Method::Cluster, Method::RootMusic, Method::RootMusicMdl, Method::ClusterCertify];

    pub fn name(self) -> &'static str {
        match self {
            Method::Aic => "aic",
            Method::Mdl => "mdl",
            Method::Cluster => "cluster",
            Method::RootMusic => "rootmusic",
            Method::RootMusicMdl => "rootmusic_mdl",
            Method::ClusterCertify => "cluster_certify",
        }
    }

    /// Whether the method reports directions as well as a source count.
    pub fn localizes(self) -> bool {
        !matches!(self, Method::Aic | Method::Mdl)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = DoaError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s || (s == "cluster+certify" && *m == Method::ClusterCertify))
            .ok_or_else(|| DoaError::Config(format!("unknown method {s:?}")))
    }
}

/// Roots fed to the clustering detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootSource {
    /// Every eigenvector.
    #[default]
    All,
    /// The eigenvectors outside the MDL signal subspace.
    Noise,
}

/// Knobs shared by the estimation methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOptions {
    /// Clustering uncertainty in degrees; the SNR table when absent.
    pub delta_theta_deg: Option<f64>,
    /// Smallest source cluster; half the array when absent.
    pub min_cluster: Option<usize>,
    pub roots: RootSource,
    pub gn_tol: f64,
    pub certify_inputs: CertifyInputs,
}

/// Eigenvectors the certificate refinement is run against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertifyInputs {
    /// The two smallest-eigenvalue eigenvectors.
    LastTwo,
    /// The `N - l_hat` smallest-eigenvalue eigenvectors.
    #[default]
    NoiseSubspace,
}

impl Default for MethodOptions {
    fn default() -> Self {
        Self { delta_theta_deg: None, min_cluster: None, roots: RootSource::All, gn_tol: DEFAULT_GN_TOL, certify_inputs: CertifyInputs::default() }
    }
}

/// Output of one method on one covariance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Estimate {
    pub l_hat: usize,
    pub doas_deg: Vec<f64>,
    /// Gauss-Newton certificate when a refinement was accepted.
    pub certificate_residual: Option<f64>,
    pub epsilon: Option<f64>,
    pub iterations: Option<usize>,
}

/// Runs `method` on an eigendecomposition. `true_l` is only consulted by
/// root-MUSIC with known order; `snr_db` selects the clustering radius when
/// none is configured.
pub fn run_method(
    method: Method,
    d: &SubspaceDecomposition,
    snapshots: usize,
    snr_db: f64,
    true_l: usize,
    opts: &MethodOptions,
) -> Result<Estimate> {
    let n = d.dim();
    let order_only = |l_hat| Estimate { l_hat, ..Default::default() };
    match method {
        Method::Aic => Ok(order_only(aic_order(&d.eigenvalues, snapshots)?)),
        Method::Mdl => Ok(order_only(mdl_order(&d.eigenvalues, snapshots)?)),
        Method::RootMusic => {
            let doas = root_music(&noise_subspace(d, true_l)?, true_l)?;
            Ok(Estimate { l_hat: doas.len(), doas_deg: doas, ..Default::default() })
        }
        Method::RootMusicMdl => {
            let l = mdl_order(&d.eigenvalues, snapshots)?;
            if l == 0 {
                return Ok(order_only(0));
            }
            let doas = root_music(&noise_subspace(d, l)?, l)?;
            Ok(Estimate { l_hat: doas.len(), doas_deg: doas, ..Default::default() })
        }
        Method::Cluster | Method::ClusterCertify => {
            let q = match opts.roots {
                RootSource::All => d.eigenvectors.clone(),
                RootSource::Noise => noise_subspace(d, mdl_order(&d.eigenvalues, snapshots)?)?,
            };
            let dtheta = opts.delta_theta_deg.unwrap_or_else(|| default_delta_theta_deg(snr_db));
            let min = opts.min_cluster.unwrap_or_else(|| default_min_members(n));
            let det = detect_and_localize_with(&collect_roots(&q)?, delta_from_uncertainty(dtheta), n, min)?;
            let mut est = Estimate { l_hat: det.l_hat, doas_deg: det.doas_deg, ..Default::default() };
            if method == Method::ClusterCertify && det.l_hat >= 1 {
                refine_with_certificate(d, &det.consensus_roots, opts, &mut est);
            }
            Ok(est)
        }
    }
}

/// Refines cluster estimates against the trailing eigenvectors. A
/// refinement that fails to converge leaves `est` alone.
fn refine_with_certificate(
    d: &SubspaceDecomposition,
    consensus: &[num_complex::Complex64],
    opts: &MethodOptions,
    est: &mut Estimate,
) {
    let n = d.dim();
    let first = match opts.certify_inputs {
        CertifyInputs::LastTwo => n.saturating_sub(2),
        CertifyInputs::NoiseSubspace => consensus.len().min(n.saturating_sub(2)),
    };
    let inputs: Vec<ComplexPolynomial> = (first..n).map(|i| d.eigenvector_polynomial(i)).collect();
    let u0 = ComplexPolynomial::from_roots(consensus);
    let sol = match certify_many(&inputs, &u0, opts.gn_tol, DEFAULT_GN_MAX_ITER) {
        Ok(s) if s.converged => s,
        Ok(_) => return,
        Err(e) => {
            log::debug!("certificate refinement rejected: {e}");
            return;
        }
    };
    let Ok(roots) = sol.u.roots() else { return };
    let mut doas: Vec<f64> = roots.iter().map(|&z| phase_to_doa(z)).collect();
    doas.sort_by(f64::total_cmp);
    est.doas_deg = doas;
    est.certificate_residual = Some(sol.certificate_residual);
    est.epsilon = Some(sol.epsilon);
    est.iterations = Some(sol.iterations);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_sensors: usize,
    pub doas_deg: Vec<f64>,
    pub snapshots: usize,
    pub snr_start_db: f64,
    pub snr_stop_db: f64,
    pub snr_step_db: f64,
    pub trials: usize,
    pub methods: Vec<Method>,
    pub master_seed: u64,
    #[serde(default)]
    pub options: MethodOptions,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.snr_step_db > 0.0) {
            return Err(DoaError::Config("snr_step_db must be positive".into()));
        }
        if self.snr_stop_db < self.snr_start_db {
            return Err(DoaError::Config("snr_stop_db below snr_start_db".into()));
        }
        if self.trials == 0 {
            return Err(DoaError::Config("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(DoaError::Config("no methods selected".into()));
        }
        Scenario::new(self.n_sensors, self.doas_deg.clone(), self.snapshots, self.snr_start_db, 0).map(|_| ())
    }

    /// `start, start + step, ...` up to and including `stop`.
    pub fn snr_grid(&self) -> Vec<f64> {
        let count = ((self.snr_stop_db - self.snr_start_db) / self.snr_step_db + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.snr_start_db + i as f64 * self.snr_step_db).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub snr_db: f64,
    pub method: Method,
    pub trial_index: usize,
    pub l_hat: usize,
    pub doas_deg: Vec<f64>,
    pub certificate_residual: Option<f64>,
    pub iterations: Option<usize>,
    /// Seconds spent in the method, excluded from every written output.
    pub wall_time: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub snr_db: f64,
    pub method: Method,
    pub trials: usize,
    pub p_correct_detection: f64,
    /// Over trials with `l_hat = L`; `None` for detectors or when no trial
    /// qualifies.
    pub rmse_deg: Option<f64>,
    pub rmse_trials_used: usize,
    pub mean_l_hat: f64,
    pub histogram: Vec<usize>,
}

/// Every trial of every method, ordered by SNR, trial, then method.
pub fn run_trials(cfg: &SweepConfig) -> Result<Vec<TrialRecord>> {
    cfg.validate()?;
    let grid = cfg.snr_grid();
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|s| (0..cfg.trials).map(move |t| (s, t))).collect();
    let per_job: Vec<Result<Vec<TrialRecord>>> = jobs
        .par_iter()
        .map(|&(si, trial)| {
            let snr = grid[si];
            let seed = derive_seed(cfg.master_seed, &[si as u64, trial as u64]);
            let sc = Scenario::new(cfg.n_sensors, cfg.doas_deg.clone(), cfg.snapshots, snr, seed)?;
            let x = generate_snapshots(&sc)?;
            let d = hermitian_eig(&sample_covariance(&x.data)?)?;
            Ok(cfg
                .methods
                .iter()
                .map(|&m| {
                    let start = Instant::now();
                    let out = run_method(m, &d, cfg.snapshots, snr, cfg.doas_deg.len(), &cfg.options);
                    let wall_time = start.elapsed().as_secs_f64();
                    let (est, error) = match out {
                        Ok(e) => (e, None),
                        Err(e) => (Estimate::default(), Some(e.to_string())),
                    };
                    TrialRecord {
                        snr_db: snr,
                        method: m,
                        trial_index: trial,
                        l_hat: est.l_hat,
                        doas_deg: est.doas_deg,
                        certificate_residual: est.certificate_residual,
                        iterations: est.iterations,
                        wall_time,
                        error,
                    }
                })
                .collect())
        })
        .collect();
    let mut out = Vec::with_capacity(jobs.len() * cfg.methods.len());
    for r in per_job {
        out.extend(r?);
    }
    Ok(out)
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<MetricRow>> {
    let records = run_trials(cfg)?;
    Ok(aggregate(cfg, &records))
}

/// One row per `(snr, method)` in grid then configuration order.
pub fn aggregate(cfg: &SweepConfig, records: &[TrialRecord]) -> Vec<MetricRow> {
    let l = cfg.doas_deg.len();
    let mut rows = Vec::new();
    for snr in cfg.snr_grid() {
        for &m in &cfg.methods {
            let recs: Vec<&TrialRecord> = records.iter().filter(|r| r.method == m && r.snr_db == snr).collect();
            let trials = recs.len();
            let correct: Vec<Vec<f64>> =
                recs.iter().filter(|r| r.l_hat == l).map(|r| r.doas_deg.clone()).collect();
            let summary = rmse(&correct, &cfg.doas_deg);
            let histogram = detection_histogram(recs.iter().copied(), cfg.n_sensors);
            rows.push(MetricRow {
                snr_db: snr,
                method: m,
                trials,
                p_correct_detection: correct.len() as f64 / trials.max(1) as f64,
                rmse_deg: if m.localizes() { summary.rmse_deg } else { None },
                rmse_trials_used: if m.localizes() { summary.trials_used } else { 0 },
                mean_l_hat: recs.iter().map(|r| r.l_hat as f64).sum::<f64>() / trials.max(1) as f64,
                histogram,
            });
        }
    }
    rows
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmseSummary {
    pub rmse_deg: Option<f64>,
    pub trials_used: usize,
    /// Trials dropped for reporting a different number of directions.
    pub trials_excluded: usize,
}

/// Root mean squared error over trials and sources after matching each
/// sorted estimate list to the sorted truth.
pub fn rmse(estimates: &[Vec<f64>], truth: &[f64]) -> RmseSummary {
    let mut t = truth.to_vec();
    t.sort_by(f64::total_cmp);
    let (mut sum, mut used, mut excluded) = (0.0, 0usize, 0usize);
    for e in estimates {
        match trial_squared_error(e, &t) {
            Some(s) => {
                sum += s;
                used += 1;
            }
            None => excluded += 1,
        }
    }
    let terms = used * t.len();
    RmseSummary {
        rmse_deg: (terms > 0).then(|| (sum / terms as f64).sqrt()),
        trials_used: used,
        trials_excluded: excluded,
    }
}

/// Per-trial RMSE in degrees, `None` on a length mismatch or empty truth.
pub fn trial_rmse(estimate: &[f64], truth: &[f64]) -> Option<f64> {
    let mut t = truth.to_vec();
    t.sort_by(f64::total_cmp);
    if t.is_empty() {
        return None;
    }
    trial_squared_error(estimate, &t).map(|s| (s / t.len() as f64).sqrt())
}

fn trial_squared_error(estimate: &[f64], sorted_truth: &[f64]) -> Option<f64> {
    if estimate.len() != sorted_truth.len() {
        return None;
    }
    let mut e = estimate.to_vec();
    e.sort_by(f64::total_cmp);
    Some(e.iter().zip(sorted_truth).map(|(a, b)| (a - b).powi(2)).sum())
}

/// Counts of `l_hat` over `0..n_sensors`; larger values land in the last bin.
pub fn detection_histogram<'a, I>(records: I, n_sensors: usize) -> Vec<usize>
where
    I: IntoIterator<Item = &'a TrialRecord>,
{
    let mut h = vec![0; n_sensors.max(1)];
    let last = h.len() - 1;
    for r in records {
        h[r.l_hat.min(last)] += 1;
    }
    h
}

/// Twelve significant digits, `nan` for missing values.
pub fn fmt_num(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => {
            if v == 0.0 {
                return "0".into();
            }
            let s = format!("{:.11e}", v);
            let (mant, exp) = s.split_once('e').unwrap();
            let exp: i32 = exp.parse().unwrap();
            if (-5..12).contains(&exp) {
                let digits = (11 - exp).max(0) as usize;
                let f = format!("{:.*}", digits, v);
                if f.contains('.') {
                    f.trim_end_matches('0').trim_end_matches('.').to_string()
                } else {
                    f
                }
            } else {
                let m = mant.trim_end_matches('0').trim_end_matches('.');
                format!("{m}e{exp}")
            }
        }
        Some(v) => format!("{v}"),
        None => "nan".into(),
    }
}

pub fn write_csv<W: Write>(rows: &[MetricRow], n_sensors: usize, mut out: W) -> Result<()> {
    let mut header = String::from("snr_db,method,trials,p_correct,rmse_deg,rmse_trials_used,mean_l_hat");
    for k in 0..n_sensors {
        header.push_str(&format!(",hist_{k}"));
    }
    writeln!(out, "{header}")?;
    for r in rows {
        let hist: Vec<String> = r.histogram.iter().map(|c| c.to_string()).collect();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            fmt_num(Some(r.snr_db)),
            r.method,
            r.trials,
            fmt_num(Some(r.p_correct_detection)),
            fmt_num(r.rmse_deg),
            r.rmse_trials_used,
            fmt_num(Some(r.mean_l_hat)),
            hist.join(",")
        )?;
    }
    Ok(())
}

pub fn write_sidecar<W: Write>(cfg: &SweepConfig, mut out: W) -> Result<()> {
    let s = serde_json::to_string_pretty(cfg).map_err(|e| DoaError::Io(e.to_string()))?;
    writeln!(out, "{s}")?;
    Ok(())
}
