//! Seeded, replicated simulation experiments.
//!
//! Every replicate draws from its own ChaCha stream and results are gathered
//! by replicate index, so outputs are bit-identical for a fixed config
//! regardless of the worker-thread count.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    assumption_report, restricted_eigenvalue_estimate, taylor_residual_check, theory_constants,
    AssumptionReport, FormDomain, TaylorResidual, TheoryCertificate,
};
use crate::error::{Error, Result};
use crate::estimator::{fit, FitConfig, FitResult, InitUsed};
use crate::geometry::{
    self, horizontal_basis, horizontal_basis_spectral, log_map, quotient_distance, skew_basis,
    BasisConstruction, HorizontalBasis,
};
use crate::inference::{
    asymptotic_covariance, invariance_audit, population_restricted_hessian, represent,
    wald_intervals, InvarianceReport,
};
use crate::linalg::{self, random_orthogonal, Mat, Vector};
use crate::model::{
    simulate, simulate_stream, stream_rng, DataGeneratingProcess, Dataset, Design, FactorPoint,
    Loss, LossModel, NoiseModel, PopulationMethod, ProblemConstants,
};
use crate::stats;

/// Version tag stamped on every report.
pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

/// Replicate-failure fraction above which an experiment is aborted.
pub const MAX_DIVERGENCE_RATE: f64 = 0.2;

/// Median distance below which a rate sweep is reported as floor-limited.
pub const DISTANCE_FLOOR: f64 = 1e-6;

/// Rotations drawn by the invariance audit.
pub const AUDIT_ROTATIONS: usize = 50;

const TRUTH_STREAM: u64 = u64::MAX - 2;
const ASSUMPTION_STREAM: u64 = u64::MAX - 3;
const AUDIT_STREAM: u64 = u64::MAX - 4;
const DEFAULT_ASSUMPTION_DRAWS: usize = 64 * 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TruthSpec {
    Explicit { theta: FactorPoint },
    /// Haar-random frames with singular values evenly spaced over
    /// `[sigma_min, sigma_max]`.
    Random { sigma_min: f64, sigma_max: f64 },
}

/// Resolved experiment configuration. `threads` and `out_dir` are execution
/// details and are not echoed into reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    pub k: usize,
    pub loss: LossModel,
    pub design: Design,
    pub noise: NoiseModel,
    pub truth: TruthSpec,
    pub n: usize,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    pub alpha: f64,
    pub delta: f64,
    pub seed: u64,
    pub fit: FitConfig,
    pub basis: BasisConstruction,
    /// Monte Carlo budget for population quantities without a closed form;
    /// defaults to 50× the largest sample size.
    pub mc_budget: Option<usize>,
    /// Certificate constants; derived from the model when absent and possible.
    pub constants: Option<ProblemConstants>,
    /// Compute the per-replicate Taylor residual.
    pub taylor: bool,
    /// Replace one basis element by a vertical direction (degeneracy control).
    pub debug_vertical_direction: bool,
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 6,
            k: 2,
            loss: LossModel::gaussian(0.1),
            design: Design::IidNormal,
            noise: NoiseModel::Gaussian { sigma: 0.1 },
            truth: TruthSpec::Random { sigma_min: 1.0, sigma_max: 1.5 },
            n: 8000,
            n_grid: vec![512, 1024, 2048, 4096, 8192, 16384],
            replications: 1000,
            alpha: 0.05,
            delta: 0.05,
            seed: 20261015,
            fit: FitConfig::default(),
            basis: BasisConstruction::Lexicographic,
            mc_budget: None,
            constants: None,
            taylor: true,
            debug_vertical_direction: false,
            threads: None,
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self =
            serde_json::from_str(s).map_err(|e| Error::Configuration(format!("config JSON: {e}")))?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Configuration(m));
        if self.k == 0 || self.k > self.d {
            return bad(format!("need d >= k >= 1, got d={}, k={}", self.d, self.k));
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) || self.n_grid.first() == Some(&0) {
            return bad(format!("n_grid must be positive and strictly increasing, got {:?}", self.n_grid));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        if self.debug_vertical_direction && self.k < 2 {
            return bad("a vertical direction needs k >= 2".into());
        }
        match &self.truth {
            TruthSpec::Explicit { theta } => {
                if theta.shape() != (self.d, self.k) {
                    return bad(format!("truth is {:?}, expected {}x{}", theta.shape(), self.d, self.k));
                }
            }
            TruthSpec::Random { sigma_min, sigma_max } => {
                if !(*sigma_min > 0.0 && sigma_min <= sigma_max && sigma_max.is_finite()) {
                    return bad(format!("need 0 < sigma_min <= sigma_max, got [{sigma_min}, {sigma_max}]"));
                }
            }
        }
        if let Some(c) = &self.constants {
            c.validate()?;
        }
        self.loss.validate()?;
        self.fit.validate()?;
        self.design.validate()?;
        self.noise.validate()
    }

    pub fn truth(&self) -> Result<FactorPoint> {
        match &self.truth {
            TruthSpec::Explicit { theta } => Ok(theta.clone()),
            TruthSpec::Random { sigma_min, sigma_max } => {
                let mut rng = stream_rng(self.seed, TRUTH_STREAM);
                let q = random_orthogonal(self.d, &mut rng);
                let v = random_orthogonal(self.k, &mut rng);
                let step = if self.k > 1 { (sigma_max - sigma_min) / (self.k - 1) as f64 } else { 0.0 };
                let s = Vector::from_fn(self.k, |i, _| sigma_max - step * i as f64);
                FactorPoint::new(q.columns(0, self.k) * Mat::from_diagonal(&s) * v.transpose())
            }
        }
    }

    pub fn dgp(&self) -> Result<DataGeneratingProcess> {
        Ok(DataGeneratingProcess {
            design: self.design,
            noise: self.noise,
            truth: self.truth()?,
            seed: self.seed,
        })
    }

    /// Certificate constants at sample size `n`, explicit or derived.
    ///
    /// Derivation needs a Gaussian likelihood with Gaussian noise. For normal
    /// designs `X_max = max(1, √(2 log(2d²n)))`, the typical size of the
    /// largest of the `nd²` absolute entries.
    pub fn problem_constants(&self, n: usize) -> Result<Option<ProblemConstants>> {
        if let Some(c) = self.constants {
            return Ok(Some(c));
        }
        let (LossModel::GaussianNll { sigma: s_loss }, NoiseModel::Gaussian { sigma: s_noise }) =
            (self.loss, self.noise)
        else {
            return Ok(None);
        };
        let lambda0 = restricted_eigenvalue_estimate(&self.design, self.d, 0, 0, FormDomain::Symmetric)?;
        if !(lambda0 > 0.0) {
            return Ok(None);
        }
        let sv = self.truth()?.singular_values();
        let curvature = 1.0 / (s_loss * s_loss);
        let x_max = self.design.x_max().unwrap_or_else(|| {
            (2.0 * (2.0 * (self.d * self.d) as f64 * n as f64).ln()).sqrt()
        });
        Ok(Some(ProblemConstants {
            x_max: x_max.max(1.0),
            sigma_min: sv[self.k - 1],
            sigma_max: sv[0].max(1.0),
            sigma_eps: (s_noise * curvature).max(1.0),
            mu_max: curvature.max(1.0),
            k_loss: curvature.max(1.0),
            mu0: curvature.min(1.0),
            lambda0: lambda0.min(1.0),
            d: self.d,
            k: self.k,
        }))
    }

    fn certificate(&self, n: usize) -> Result<Option<TheoryCertificate>> {
        self.problem_constants(n)?.map(|c| theory_constants(&c, self.delta)).transpose()
    }

    /// Seed for random (fallback) starts of one replicate.
    fn fit_config(&self, stream: u64) -> FitConfig {
        FitConfig {
            seed: self.fit.seed ^ self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(stream),
            ..self.fit.clone()
        }
    }

    fn horizontal_basis(&self, truth: &FactorPoint) -> Result<HorizontalBasis> {
        let mut basis = match self.basis {
            BasisConstruction::Lexicographic => horizontal_basis(truth)?,
            BasisConstruction::Spectral => horizontal_basis_spectral(truth)?,
        };
        if self.debug_vertical_direction {
            let v = truth.as_mat() * &skew_basis(self.k)?.elements[0];
            let last = basis.elements.len() - 1;
            basis.elements[last] = &v / v.norm();
        }
        Ok(basis)
    }

    fn run_in_pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.threads {
            None => Ok(f()),
            Some(t) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build()
                    .map_err(|e| Error::Configuration(format!("thread pool: {e}")))?;
                Ok(pool.install(f))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Replications

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub replicate: usize,
    pub n: usize,
    pub stream: u64,
    /// Quotient distance of the minimizer to the truth (the realized radius).
    pub distance: f64,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
    pub init_used: InitUsed,
    pub phi0: Vec<f64>,
    /// `√n·(H*)^{1/2}(φ⁰ − φ*)`.
    pub z: Vec<f64>,
    pub covered: Vec<bool>,
    pub taylor: Option<TaylorResidual>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Divergence {
    pub replicate: usize,
    pub n: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationSet {
    pub records: Vec<ReplicationRecord>,
    pub divergences: Vec<Divergence>,
    pub h_star_method: Option<PopulationMethod>,
}

/// Shared, immutable inputs of a batch of replicates.
struct Context {
    dgp: DataGeneratingProcess,
    basis: HorizontalBasis,
    phi_star: Vector,
    h_star: Option<Mat>,
    k_certificate: Option<f64>,
}

impl Context {
    fn new(cfg: &ExperimentConfig, n_max: usize, inference: bool) -> Result<(Self, Option<PopulationMethod>)> {
        let dgp = cfg.dgp()?;
        let basis = cfg.horizontal_basis(&dgp.truth)?;
        let phi_star = represent(dgp.truth.as_mat(), &basis)?;
        let (h_star, method) = if inference {
            let budget = cfg.mc_budget.unwrap_or(50 * n_max);
            let h = population_restricted_hessian(&dgp, &basis, &cfg.loss, Some(budget))?;
            // Fails with a pointer at the basis when H* is singular.
            asymptotic_covariance(&h.matrix)?;
            (Some(h.matrix), Some(h.method))
        } else {
            (None, None)
        };
        let k_certificate = cfg.certificate(n_max)?.map(|c| c.k_lipschitz);
        Ok((Self { dgp, basis, phi_star, h_star, k_certificate }, method))
    }

    /// `Ok(Err(_))` is a recorded divergence; `Err(_)` aborts the experiment.
    fn replicate(
        &self,
        cfg: &ExperimentConfig,
        replicate: usize,
        n: usize,
        stream: u64,
    ) -> Result<std::result::Result<ReplicationRecord, Divergence>> {
        let diverged = |e: Error| Divergence { replicate, n, message: e.to_string() };
        let data = simulate_stream(&self.dgp, n, stream)?;
        let res = match fit(&data, &cfg.loss, &cfg.fit_config(stream)) {
            Ok(r) => r,
            Err(e) if e.is_numerical() => return Ok(Err(diverged(e))),
            Err(e) => return Err(e),
        };
        let truth = self.dgp.truth.as_mat();
        let distance = quotient_distance(&res.theta0, truth)?;
        let mut rec = ReplicationRecord {
            replicate,
            n,
            stream,
            distance,
            iterations: res.iterations,
            converged: res.converged,
            grad_norm: res.grad_norm,
            init_used: res.init_used,
            phi0: Vec::new(),
            z: Vec::new(),
            covered: Vec::new(),
            taylor: None,
        };
        let Some(h_star) = &self.h_star else {
            return Ok(Ok(rec));
        };
        let v = match log_map(truth, &res.theta0) {
            Ok(v) => v,
            Err(e @ Error::OutOfInjectivity { .. }) => return Ok(Err(diverged(e))),
            Err(e) => return Err(e),
        };
        let phi0 = represent(&v, &self.basis)? + &self.phi_star;
        let ci = wald_intervals(&phi0, h_star, n, cfg.alpha, Some(&self.phi_star))?;
        if cfg.taylor {
            rec.taylor = Some(taylor_residual_check(&data, &res.theta0, &self.basis, &cfg.loss, self.k_certificate)?);
        }
        rec.phi0 = phi0.iter().copied().collect();
        rec.z = ci.z.unwrap_or_default();
        rec.covered = ci.covered.unwrap_or_default();
        Ok(Ok(rec))
    }
}

fn split(
    results: Vec<Result<std::result::Result<ReplicationRecord, Divergence>>>,
    h_star_method: Option<PopulationMethod>,
) -> Result<ReplicationSet> {
    let total = results.len();
    let mut records = Vec::with_capacity(total);
    let mut divergences = Vec::new();
    for r in results {
        match r? {
            Ok(rec) => records.push(rec),
            Err(div) => divergences.push(div),
        }
    }
    if divergences.len() as f64 > MAX_DIVERGENCE_RATE * total as f64 {
        let first = divergences.first().map(|d| d.message.as_str()).unwrap_or("");
        return Err(Error::Aborted(format!(
            "{} of {total} replicates failed (limit {:.0}%); first failure: {first}",
            divergences.len(),
            100.0 * MAX_DIVERGENCE_RATE
        )));
    }
    Ok(ReplicationSet { records, divergences, h_star_method })
}

/// Simulates, fits and standardizes `R` replicates at sample size `config.n`.
pub fn run_replications(config: &ExperimentConfig) -> Result<ReplicationSet> {
    config.validate()?;
    let (ctx, method) = Context::new(config, config.n, true)?;
    let results = config.run_in_pool(|| {
        (0..config.replications)
            .into_par_iter()
            .map(|r| ctx.replicate(config, r, config.n, r as u64))
            .collect::<Vec<_>>()
    })?;
    split(results, method)
}

// ---------------------------------------------------------------------------
// Normality

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalityReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub n: usize,
    pub dim: usize,
    pub replications: usize,
    pub successful: usize,
    pub exclusion_rate: f64,
    pub divergences: Vec<Divergence>,
    pub non_converged: usize,
    pub h_star_method: PopulationMethod,
    /// Per-coordinate mean and variance of the standardized residuals.
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    #[serde(with = "linalg::rows")]
    pub covariance: Mat,
    /// `‖Cov(z) − I‖_F / ‖I‖_F`.
    pub covariance_rel_error: f64,
    pub coverage: f64,
    pub coverage_per_coordinate: Vec<f64>,
    pub ks_per_coordinate: Vec<f64>,
    pub max_ks: f64,
    pub distance_median: f64,
    pub distance_max: f64,
    /// Largest `lhs / d²` over replicates, and whether every replicate satisfied
    /// `lhs ≤ (K/2)d²` for the certificate `K`.
    pub taylor_ratio_max: Option<f64>,
    pub taylor_within_certificate: Option<bool>,
}

/// Report plus the raw `R×d′` matrix of standardized residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalityOutcome {
    pub report: NormalityReport,
    pub z: Vec<Vec<f64>>,
}

pub fn normality_experiment(config: &ExperimentConfig) -> Result<NormalityOutcome> {
    let set = run_replications(config)?;
    if set.records.is_empty() {
        return Err(Error::Aborted("no successful replicates".into()));
    }
    let dim = geometry::horizontal_dim(config.d, config.k);
    let z: Vec<Vec<f64>> = set.records.iter().map(|r| r.z.clone()).collect();
    let zs: Vec<Vector> = z.iter().map(|r| Vector::from_column_slice(r)).collect();
    let column = |j: usize| z.iter().map(|r| r[j]).collect::<Vec<f64>>();
    let covariance = stats::sample_covariance(&zs);
    let covariance_rel_error = (&covariance - Mat::identity(dim, dim)).norm() / (dim as f64).sqrt();
    let r = set.records.len() as f64;
    let coverage_per_coordinate: Vec<f64> = (0..dim)
        .map(|j| set.records.iter().filter(|rec| rec.covered[j]).count() as f64 / r)
        .collect();
    let ks_per_coordinate: Vec<f64> = (0..dim).map(|j| stats::ks_distance_normal(&column(j))).collect();
    let distances: Vec<f64> = set.records.iter().map(|r| r.distance).collect();
    let taylor: Vec<&TaylorResidual> = set.records.iter().filter_map(|r| r.taylor.as_ref()).collect();
    let taylor_ratio_max = (!taylor.is_empty()).then(|| taylor.iter().map(|t| t.ratio).fold(0.0, f64::max));
    let taylor_within_certificate = (!taylor.is_empty() && taylor.iter().all(|t| t.rhs.is_some()))
        .then(|| taylor.iter().all(|t| t.lhs <= t.rhs.unwrap_or(f64::INFINITY)));
    let report = NormalityReport {
        version: VERSION.into(),
        config: config.clone(),
        n: config.n,
        dim,
        replications: config.replications,
        successful: set.records.len(),
        exclusion_rate: set.divergences.len() as f64 / config.replications as f64,
        non_converged: set.records.iter().filter(|r| !r.converged).count(),
        h_star_method: set.h_star_method.expect("inference context computes H*"),
        mean: (0..dim).map(|j| stats::mean(&column(j))).collect(),
        variance: (0..dim).map(|j| stats::variance(&column(j))).collect(),
        covariance,
        covariance_rel_error,
        coverage: coverage_per_coordinate.iter().sum::<f64>() / dim as f64,
        max_ks: ks_per_coordinate.iter().copied().fold(0.0, f64::max),
        coverage_per_coordinate,
        ks_per_coordinate,
        distance_median: stats::median(&distances),
        distance_max: distances.iter().copied().fold(0.0, f64::max),
        taylor_ratio_max,
        taylor_within_certificate,
        divergences: set.divergences,
    };
    Ok(NormalityOutcome { report, z })
}

// ---------------------------------------------------------------------------
// Rate

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePoint {
    pub n: usize,
    pub successful: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub iqr: f64,
    /// Certificate rate bound at confidence `1 − δ`, when constants are known.
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub n_grid: Vec<usize>,
    pub points: Vec<RatePoint>,
    /// Least-squares fit of log median distance on log n.
    pub slope: f64,
    pub intercept: f64,
    /// All medians sit at the solver floor; the slope carries no information.
    pub floor_limited: bool,
    pub all_below_bound: Option<bool>,
    pub divergences: Vec<Divergence>,
}

pub const MIN_GRID_POINTS: usize = 4;
pub const MIN_GRID_SPAN: usize = 16;

pub fn rate_experiment(config: &ExperimentConfig) -> Result<RateReport> {
    config.validate()?;
    let grid = &config.n_grid;
    if grid.len() < MIN_GRID_POINTS || grid[grid.len() - 1] < MIN_GRID_SPAN * grid[0] {
        return Err(Error::Argument(format!(
            "rate sweep needs at least {MIN_GRID_POINTS} sample sizes spanning {MIN_GRID_SPAN}x, got {grid:?}"
        )));
    }
    let (ctx, _) = Context::new(config, grid[grid.len() - 1], false)?;
    let reps = config.replications;
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|i| (0..reps).map(move |r| (i, r))).collect();
    let results = config.run_in_pool(|| {
        jobs.par_iter()
            .map(|&(i, r)| ctx.replicate(config, r, grid[i], ((i as u64) << 32) | r as u64))
            .collect::<Vec<_>>()
    })?;
    let set = split(results, None)?;
    let mut points = Vec::with_capacity(grid.len());
    for &n in grid {
        let d: Vec<f64> = set.records.iter().filter(|r| r.n == n).map(|r| r.distance).collect();
        if d.is_empty() {
            return Err(Error::Aborted(format!("no successful replicates at n = {n}")));
        }
        let (q25, q75) = (stats::quantile(&d, 0.25), stats::quantile(&d, 0.75));
        points.push(RatePoint {
            n,
            successful: d.len(),
            median: stats::median(&d),
            q25,
            q75,
            iqr: q75 - q25,
            bound: config.certificate(n)?.map(|c| c.rate_bound(n)),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.median.max(f64::MIN_POSITIVE).ln()).collect();
    let (slope, intercept) = stats::ols(&xs, &ys);
    let all_below_bound = points
        .iter()
        .map(|p| p.bound.map(|b| p.median < b))
        .collect::<Option<Vec<bool>>>()
        .map(|v| v.into_iter().all(|x| x));
    Ok(RateReport {
        version: VERSION.into(),
        config: config.clone(),
        n_grid: grid.clone(),
        floor_limited: points.iter().all(|p| p.median <= DISTANCE_FLOOR),
        points,
        slope,
        intercept,
        all_below_bound,
        divergences: set.divergences,
    })
}

// ---------------------------------------------------------------------------
// Single-run commands

pub fn simulate_dataset(config: &ExperimentConfig) -> Result<Dataset> {
    config.validate()?;
    simulate(&config.dgp()?, config.n)
}

pub fn fit_dataset(config: &ExperimentConfig, data: &Dataset) -> Result<FitResult> {
    config.loss.validate()?;
    fit(data, &config.loss, &config.fit)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionSummary {
    pub version: String,
    pub config: ExperimentConfig,
    pub draws: usize,
    pub report: AssumptionReport,
}

pub fn assumption_experiment(config: &ExperimentConfig) -> Result<AssumptionSummary> {
    config.validate()?;
    let draws = config.mc_budget.unwrap_or(DEFAULT_ASSUMPTION_DRAWS);
    let report = assumption_report(&config.dgp()?, &config.loss, draws, ASSUMPTION_STREAM)?;
    Ok(AssumptionSummary { version: VERSION.into(), config: config.clone(), draws, report })
}

/// Input of the `certificate` command: the constants, `δ`, and sample sizes
/// at which to evaluate the sample-size-dependent bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateConfig {
    #[serde(flatten)]
    pub constants: ProblemConstants,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub n_grid: Vec<usize>,
}

fn default_delta() -> f64 {
    0.05
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertificateAtN {
    pub n: usize,
    pub rate_bound: f64,
    pub lambda_min_finite_sample: f64,
    pub xbar_bound: f64,
    pub eta_bound: f64,
    pub mbar_bound: f64,
    pub sample_condition_met: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateReport {
    pub version: String,
    pub config: CertificateConfig,
    pub certificate: TheoryCertificate,
    pub at_n: Vec<CertificateAtN>,
}

pub fn certificate_report(config: &CertificateConfig) -> Result<CertificateReport> {
    let certificate = theory_constants(&config.constants, config.delta)?;
    if config.n_grid.contains(&0) {
        return Err(Error::Configuration("n_grid entries must be positive".into()));
    }
    let at_n = config
        .n_grid
        .iter()
        .map(|&n| CertificateAtN {
            n,
            rate_bound: certificate.rate_bound(n),
            lambda_min_finite_sample: certificate.lambda_min_finite_sample(n),
            xbar_bound: certificate.xbar_bound(n),
            eta_bound: certificate.eta_bound(n),
            mbar_bound: certificate.mbar_bound(n),
            sample_condition_met: n as f64 >= certificate.n_required,
        })
        .collect();
    Ok(CertificateReport { version: VERSION.into(), config: config.clone(), certificate, at_n })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceSummary {
    pub version: String,
    pub config: ExperimentConfig,
    pub rotations: usize,
    /// Per-object maxima over all rotations.
    pub max: InvarianceReport,
}

/// Fits one dataset and compares the inference objects in `{e_i}` at `θ*`
/// with those in `{e_iU}` at `θ*U` for [`AUDIT_ROTATIONS`] Haar rotations.
pub fn invariance_experiment(config: &ExperimentConfig) -> Result<InvarianceSummary> {
    config.validate()?;
    let dgp = config.dgp()?;
    let data = simulate(&dgp, config.n)?;
    let theta0 = fit(&data, &config.loss, &config.fit)?.theta0;
    let basis = config.horizontal_basis(&dgp.truth)?;
    let mut rng = stream_rng(config.seed, AUDIT_STREAM);
    let mut acc = InvarianceReport { phi0: 0.0, phi_star: 0.0, g0: 0.0, h0: 0.0, h_star: 0.0, max: 0.0 };
    for j in 0..AUDIT_ROTATIONS {
        let u = random_orthogonal(config.k, &mut rng);
        let r = invariance_audit(&basis, &theta0, &u, &data.samples[j % data.n()], &config.loss as &dyn Loss)?;
        acc.phi0 = acc.phi0.max(r.phi0);
        acc.phi_star = acc.phi_star.max(r.phi_star);
        acc.g0 = acc.g0.max(r.g0);
        acc.h0 = acc.h0.max(r.h0);
        acc.h_star = acc.h_star.max(r.h_star);
        acc.max = acc.max.max(r.max);
    }
    Ok(InvarianceSummary { version: VERSION.into(), config: config.clone(), rotations: AUDIT_ROTATIONS, max: acc })
}
