//! Minimization of the empirical loss by Euclidean gradient descent on `θ`.
//!
//! The loss is invariant under `θ ↦ θU`, so moving along vertical directions is
//! harmless; descent stays in the total space and the quotient structure is
//! only used afterwards for inference. Steps start from a Barzilai–Borwein
//! guess and backtrack until the Armijo condition holds. Loss differences are
//! accumulated per sample through [`Loss::increment`], which keeps the
//! sufficient-decrease test meaningful down to gradient norms near 1e-10.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{quotient_distance, HorizontalBasis};
use crate::inference::restricted_hessian;
use crate::linalg::{self, sym_eigen, CompensatedSum, Mat, Vector};
use crate::model::{stream_rng, Dataset, FactorPoint, Loss, LossModel};

/// Starting point of the descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Init {
    Spectral,
    Warm { theta: FactorPoint },
    /// Gaussian entries scaled by `1/√d`, from the config seed.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub init: Init,
    /// Trial step when no curvature information is available yet.
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Extra runs from random starts; the lowest final loss wins.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            init: Init::Spectral,
            initial_step: 1e-2,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            grad_tol: 1e-9,
            max_iters: 100_000,
            restarts: 0,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Configuration(m));
        if !(self.initial_step > 0.0 && self.initial_step.is_finite()) {
            return bad(format!("initial_step must be positive, got {}", self.initial_step));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad(format!("shrink must lie in (0, 1), got {}", self.shrink));
        }
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 1.0) {
            return bad(format!(
                "sufficient_decrease must lie in (0, 1), got {}",
                self.sufficient_decrease
            ));
        }
        if !(self.grad_tol > 0.0) {
            return bad(format!("grad_tol must be positive, got {}", self.grad_tol));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        Ok(())
    }
}

/// Which start produced a [`FitResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitUsed {
    Spectral,
    Warm,
    Random,
    /// Spectral initialization failed and a random start was used instead.
    RandomFallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub theta0: FactorPoint,
    pub loss: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub loss_trace: Vec<f64>,
    pub converged: bool,
    /// Quotient distance to the truth, when one was supplied.
    pub neighborhood_radius: Option<f64>,
    pub restart: usize,
    pub init_used: InitUsed,
}

impl FitResult {
    pub fn record_radius(&mut self, truth: &Mat) -> Result<f64> {
        let r = quotient_distance(&self.theta0, truth)?;
        self.neighborhood_radius = Some(r);
        Ok(r)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("fit result serialization cannot fail")
    }
}

/// Measurements flattened to an `n×d²` matrix so that `⟨X_i, M⟩` for all `i`
/// is a single matrix–vector product.
pub(crate) struct FlatDesign {
    pub rows: Mat,
    pub y: Vec<f64>,
    pub d: usize,
}

impl FlatDesign {
    pub fn new(data: &Dataset) -> Self {
        let d = data.d;
        let n = data.n();
        let mut rows = Mat::zeros(n, d * d);
        for (i, s) in data.samples.iter().enumerate() {
            for (c, v) in s.x.as_slice().iter().enumerate() {
                rows[(i, c)] = *v;
            }
        }
        Self {
            rows,
            y: data.samples.iter().map(|s| s.y).collect(),
            d,
        }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// `(⟨X_i, M⟩)_i`.
    pub fn contract(&self, m: &Mat) -> Vector {
        &self.rows * Vector::from_column_slice(m.as_slice())
    }

    /// `Σ_i w_i X_i`.
    pub fn combine(&self, w: &Vector) -> Mat {
        let v = self.rows.tr_mul(w);
        Mat::from_column_slice(self.d, self.d, v.as_slice())
    }
}

struct State {
    theta: Mat,
    z: Vector,
    loss: f64,
    grad: Mat,
}

fn evaluate<L: Loss + ?Sized>(flat: &FlatDesign, theta: Mat, loss: &L) -> State {
    let n = flat.n() as f64;
    let z = flat.contract(&(&theta * theta.transpose()));
    let mut sum = CompensatedSum::default();
    let mut w = Vector::zeros(flat.n());
    for i in 0..flat.n() {
        sum.add(loss.value(z[i], flat.y[i]));
        w[i] = loss.d1(z[i], flat.y[i]);
    }
    let s = flat.combine(&w);
    let grad = (&s + s.transpose()) * &theta / n;
    State { theta, z, loss: sum.value() / n, grad }
}

const MAX_BACKTRACKS: usize = 80;

struct RunOutcome {
    theta: Mat,
    loss: f64,
    grad_norm: f64,
    iterations: usize,
    trace: Vec<f64>,
    converged: bool,
}

fn descend<L: Loss + ?Sized>(
    flat: &FlatDesign,
    theta: Mat,
    loss: &L,
    cfg: &FitConfig,
) -> Result<RunOutcome> {
    let n = flat.n() as f64;
    let mut st = evaluate(flat, theta, loss);
    if !st.loss.is_finite() {
        return Err(Error::Divergence { iterations: 0, last_loss: f64::NAN, trace: vec![] });
    }
    let mut trace = vec![st.loss];
    let mut prev: Option<(Mat, Mat)> = None;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        let gnorm = st.grad.norm();
        if gnorm <= cfg.grad_tol {
            break;
        }
        let g = &st.grad;
        let mut t = match &prev {
            Some((s, yv)) => {
                let sy = s.dot(yv);
                if sy > 0.0 {
                    s.norm_squared() / sy
                } else {
                    cfg.initial_step
                }
            }
            None => cfg.initial_step,
        };
        // M(θ − tG) = θθᵀ − t(Gθᵀ + θGᵀ) + t²GGᵀ
        let b = flat.contract(&(g * st.theta.transpose() + &st.theta * g.transpose()));
        let c = flat.contract(&(g * g.transpose()));
        let g2 = gnorm * gnorm;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut delta = CompensatedSum::default();
            for i in 0..flat.n() {
                let dz = -t * b[i] + t * t * c[i];
                delta.add(loss.increment(st.z[i], dz, flat.y[i]));
            }
            let df = delta.value() / n;
            if df.is_finite() && df <= -cfg.sufficient_decrease * t * g2 {
                accepted = Some(df);
                break;
            }
            t *= cfg.shrink;
        }
        // No decrease representable at any step: the iterate is numerically stationary.
        let Some(df) = accepted else { break };
        let theta_new = &st.theta - g * t;
        if theta_new.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                iterations,
                last_loss: st.loss,
                trace,
            });
        }
        let next = evaluate(flat, theta_new, loss);
        if !next.loss.is_finite() {
            return Err(Error::Divergence { iterations, last_loss: st.loss, trace });
        }
        let f_new = (st.loss + df).min(*trace.last().expect("trace is non-empty"));
        trace.push(f_new);
        prev = Some((&next.theta - &st.theta, &next.grad - &st.grad));
        st = State { loss: f_new, ..next };
        iterations += 1;
    }
    let grad_norm = st.grad.norm();
    Ok(RunOutcome {
        loss: evaluate(flat, st.theta.clone(), loss).loss,
        converged: grad_norm <= cfg.grad_tol,
        theta: st.theta,
        grad_norm,
        iterations,
        trace,
    })
}

/// Floor applied to the eigenvalues kept by [`spectral_init`].
pub const SPECTRAL_FLOOR: f64 = 1e-12;

/// `S = (1/n) Σ c·y_i (X_i + X_iᵀ)/2`, then `V_k diag(√λ_k)` from its top `k`
/// eigenpairs. The calibration makes `E[S] = θ*θ*ᵀ` for standard normal
/// designs: `c·y = y` for the Gaussian loss; for the logistic loss `4(y − ½)`,
/// which matches to first order in `z*` since `E[(y − ½)X] = E[σ′(z*)]M*`.
pub fn spectral_init(data: &Dataset, k: usize, loss: &LossModel) -> Result<FactorPoint> {
    if k == 0 || k > data.d {
        return Err(Error::Argument(format!("need 1 <= k <= d = {}, got k = {k}", data.d)));
    }
    let mut s = Mat::zeros(data.d, data.d);
    for smp in &data.samples {
        loss.check_response(smp.y)?;
        let w = match loss {
            LossModel::GaussianNll { .. } => smp.y,
            LossModel::Logistic => 4.0 * (smp.y - 0.5),
        };
        linalg::add_scaled(&mut s, w, &smp.x);
    }
    let s = (&s + s.transpose()) / (2.0 * data.n() as f64);
    let (values, vectors) = sym_eigen(&s);
    let d = data.d;
    if values[d - 1] < SPECTRAL_FLOOR {
        return Err(Error::Initialization(format!(
            "largest eigenvalue {:e} of the moment matrix is below the floor",
            values[d - 1]
        )));
    }
    let mut theta = Mat::zeros(d, k);
    for j in 0..k {
        let idx = d - 1 - j;
        let scale = values[idx].max(SPECTRAL_FLOOR).sqrt();
        theta.set_column(j, &(vectors.column(idx) * scale));
    }
    FactorPoint::new(theta).map_err(|e| Error::Initialization(e.to_string()))
}

fn random_start(d: usize, k: usize, seed: u64, restart: usize) -> Mat {
    let mut rng = stream_rng(seed, 0x5eed_0000_0000 + restart as u64);
    linalg::random_gaussian(d, k, &mut rng) / (d as f64).sqrt()
}

/// Minimizes the empirical loss. Run 0 starts from `config.init`; each extra
/// restart starts from an independent random point. The run with the lowest
/// final loss is returned.
pub fn fit(data: &Dataset, loss: &LossModel, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    loss.validate()?;
    for s in &data.samples {
        loss.check_response(s.y)?;
    }
    let (d, k) = (data.d, data.k);
    let flat = FlatDesign::new(data);

    let (start, init_used) = match &config.init {
        Init::Warm { theta } => {
            if theta.shape() != (d, k) {
                return Err(Error::Dimension(format!(
                    "warm start is {:?}, expected {d}x{k}",
                    theta.shape()
                )));
            }
            (theta.as_mat().clone(), InitUsed::Warm)
        }
        Init::Spectral => match spectral_init(data, k, loss) {
            Ok(t) => (t.into_mat(), InitUsed::Spectral),
            Err(Error::Initialization(_)) => (random_start(d, k, config.seed, 0), InitUsed::RandomFallback),
            Err(e) => return Err(e),
        },
        Init::Random => (random_start(d, k, config.seed, 0), InitUsed::Random),
    };

    let mut best: Option<(RunOutcome, usize, InitUsed)> = None;
    for restart in 0..=config.restarts {
        let (theta, used) = if restart == 0 {
            (start.clone(), init_used)
        } else {
            (random_start(d, k, config.seed, restart), InitUsed::Random)
        };
        let run = descend(&flat, theta, loss, config)?;
        if best.as_ref().is_none_or(|(b, _, _)| run.loss < b.loss) {
            best = Some((run, restart, used));
        }
    }
    let (run, restart, init_used) = best.expect("at least one run");
    Ok(FitResult {
        theta0: FactorPoint::new(run.theta)?,
        loss: run.loss,
        grad_norm: run.grad_norm,
        iterations: run.iterations,
        loss_trace: run.trace,
        converged: run.converged,
        neighborhood_radius: None,
        restart,
        init_used,
    })
}

/// First- and second-order evidence that `θ0` is a local minimizer.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizerCertificate {
    pub grad_norm: f64,
    /// Smallest eigenvalue of the empirical Hessian restricted to the basis.
    pub restricted_min_eigenvalue: f64,
    pub distance_to_truth: Option<f64>,
}

pub fn minimizer_certificate(
    data: &Dataset,
    theta0: &FactorPoint,
    loss: &LossModel,
    basis: &HorizontalBasis,
    truth: Option<&Mat>,
) -> Result<MinimizerCertificate> {
    let grad = crate::model::euclidean_gradient(data, theta0, loss)?;
    let h = restricted_hessian(data, theta0, basis, loss)?;
    Ok(MinimizerCertificate {
        grad_norm: grad.norm(),
        restricted_min_eigenvalue: linalg::min_eigenvalue(&h),
        distance_to_truth: truth.map(|t| quotient_distance(theta0, t)).transpose()?,
    })
}
