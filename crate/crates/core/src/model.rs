//! Measurement model `y ~ ℓ(⟨X, θθᵀ⟩, y)`: loss family, data-generating
//! processes and analytic derivatives of the empirical and population losses.
//!
//! All derivative routines act on the ambient factor `θ ∈ R^{d×k}` and use the
//! Frobenius inner product. Writing `X̃ = X + Xᵀ`, the directional pieces are
//! `⟨X, θZᵀ + Zθᵀ⟩ = ⟨X̃θ, Z⟩` and `⟨X, WZᵀ + ZWᵀ⟩ = ⟨X̃Z, W⟩`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, add_scaled, frob, CompensatedSum, Mat};
use crate::stats;

/// A `d×k` factor of rank `k`; a point of the total space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct FactorPoint(Mat);

impl FactorPoint {
    /// Relative rank threshold `σ_k ≤ tol·σ_1` used across the crate.
    pub const RANK_TOL: f64 = 1e-10;

    pub fn new(theta: Mat) -> Result<Self> {
        if theta.nrows() == 0 || theta.ncols() == 0 {
            return Err(Error::Argument("factor must be non-empty".into()));
        }
        if theta.ncols() > theta.nrows() {
            return Err(Error::Dimension(format!(
                "factor is {}x{}; need k <= d",
                theta.nrows(),
                theta.ncols()
            )));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("factor has non-finite entries".into()));
        }
        let s = linalg::singular_values(&theta);
        if s[s.len() - 1] <= Self::RANK_TOL * s[0] || s[0] == 0.0 {
            return Err(Error::Degenerate(format!(
                "factor is rank deficient (singular values {:?})",
                s.as_slice()
            )));
        }
        Ok(Self(theta))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(linalg::from_rows(rows).map_err(Error::Argument)?)
    }

    pub fn d(&self) -> usize {
        self.0.nrows()
    }

    pub fn k(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_mat(self) -> Mat {
        self.0
    }

    /// `θθᵀ`.
    pub fn gram_outer(&self) -> Mat {
        &self.0 * self.0.transpose()
    }

    pub fn singular_values(&self) -> Vec<f64> {
        linalg::singular_values(&self.0).iter().copied().collect()
    }

    /// `θU` for orthogonal `U`.
    pub fn rotate(&self, u: &Mat) -> Result<Self> {
        Self::new(&self.0 * u)
    }
}

impl std::ops::Deref for FactorPoint {
    type Target = Mat;
    fn deref(&self) -> &Mat {
        &self.0
    }
}

impl TryFrom<Vec<Vec<f64>>> for FactorPoint {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<FactorPoint> for Vec<Vec<f64>> {
    fn from(p: FactorPoint) -> Self {
        linalg::to_rows(&p.0)
    }
}

/// One observation `(X, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    #[serde(rename = "X", with = "linalg::rows")]
    pub x: Mat,
    pub y: f64,
}

/// `n ≥ 1` observations with `d×d` measurement matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DatasetFile")]
pub struct Dataset {
    pub d: usize,
    pub k: usize,
    pub samples: Vec<Sample>,
}

#[derive(Deserialize)]
struct DatasetFile {
    d: usize,
    k: usize,
    samples: Vec<Sample>,
}

impl TryFrom<DatasetFile> for Dataset {
    type Error = Error;
    fn try_from(f: DatasetFile) -> Result<Self> {
        Dataset::new(f.d, f.k, f.samples)
    }
}

impl Dataset {
    pub fn new(d: usize, k: usize, samples: Vec<Sample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Argument("dataset must contain at least one sample".into()));
        }
        if k == 0 || k > d {
            return Err(Error::Argument(format!("need 1 <= k <= d, got d={d}, k={k}")));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.x.nrows() != d || s.x.ncols() != d {
                return Err(Error::Dimension(format!(
                    "sample {i}: X is {}x{}, expected {d}x{d}",
                    s.x.nrows(),
                    s.x.ncols()
                )));
            }
            if !s.y.is_finite() || s.x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Argument(format!("sample {i} has non-finite values")));
            }
        }
        Ok(Self { d, k, samples })
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("dataset serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Argument(format!("dataset JSON: {e}")))
    }
}

// ---------------------------------------------------------------------------
// Losses

/// Scalar loss `ℓ(z, y)` with analytic derivatives in `z`.
pub trait Loss: Send + Sync {
    fn name(&self) -> &'static str;

    fn check_response(&self, y: f64) -> Result<()>;

    fn value(&self, z: f64, y: f64) -> f64;
    fn d1(&self, z: f64, y: f64) -> f64;
    fn d2(&self, z: f64, y: f64) -> f64;
    fn d3(&self, z: f64, y: f64) -> f64;

    /// `ℓ(z + dz, y) − ℓ(z, y)`, evaluated without cancellation when `dz` is small.
    fn increment(&self, z: f64, dz: f64, y: f64) -> f64 {
        self.value(z + dz, y) - self.value(z, y)
    }

    /// `K_ℓ`: common Lipschitz constant of `ℓ′` and `ℓ″`, when known.
    fn lipschitz(&self) -> Option<f64>;

    /// `μ₀`: global lower bound on `ℓ″`, when one exists.
    fn curvature_floor(&self) -> Option<f64>;

    /// `ℓ″` when it is a constant.
    fn constant_curvature(&self) -> Option<f64> {
        None
    }

    /// Whether `ℓ″(z, y)` depends on `y`.
    fn curvature_depends_on_response(&self) -> bool {
        true
    }
}

/// The built-in losses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LossModel {
    /// `(z − y)² / (2σ²)`.
    GaussianNll { sigma: f64 },
    /// `log(1 + eᶻ) − yz` for `y ∈ {0, 1}`.
    Logistic,
}

impl LossModel {
    pub fn gaussian(sigma: f64) -> Self {
        LossModel::GaussianNll { sigma }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LossModel::GaussianNll { sigma } if !(sigma > 0.0 && sigma.is_finite()) => Err(
                Error::Configuration(format!("gaussian_nll needs sigma > 0, got {sigma}")),
            ),
            _ => Ok(()),
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl Loss for LossModel {
    fn name(&self) -> &'static str {
        match self {
            LossModel::GaussianNll { .. } => "gaussian_nll",
            LossModel::Logistic => "logistic",
        }
    }

    fn check_response(&self, y: f64) -> Result<()> {
        match self {
            LossModel::GaussianNll { .. } if y.is_finite() => Ok(()),
            LossModel::Logistic if y == 0.0 || y == 1.0 => Ok(()),
            _ => Err(Error::Domain { loss: self.name(), y }),
        }
    }

    fn value(&self, z: f64, y: f64) -> f64 {
        match *self {
            LossModel::GaussianNll { sigma } => (z - y).powi(2) / (2.0 * sigma * sigma),
            LossModel::Logistic => softplus(z) - y * z,
        }
    }

    fn d1(&self, z: f64, y: f64) -> f64 {
        match *self {
            LossModel::GaussianNll { sigma } => (z - y) / (sigma * sigma),
            LossModel::Logistic => sigmoid(z) - y,
        }
    }

    fn d2(&self, z: f64, _y: f64) -> f64 {
        match *self {
            LossModel::GaussianNll { sigma } => 1.0 / (sigma * sigma),
            LossModel::Logistic => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
        }
    }

    fn d3(&self, z: f64, _y: f64) -> f64 {
        match *self {
            LossModel::GaussianNll { .. } => 0.0,
            LossModel::Logistic => {
                let s = sigmoid(z);
                s * (1.0 - s) * (1.0 - 2.0 * s)
            }
        }
    }

    fn increment(&self, z: f64, dz: f64, y: f64) -> f64 {
        match *self {
            LossModel::GaussianNll { sigma } => dz * (2.0 * (z - y) + dz) / (2.0 * sigma * sigma),
            // softplus(z + dz) − softplus(z) = log1p(σ(z)·expm1(dz))
            LossModel::Logistic => (sigmoid(z) * dz.exp_m1()).ln_1p() - y * dz,
        }
    }

    fn lipschitz(&self) -> Option<f64> {
        match *self {
            LossModel::GaussianNll { sigma } => Some(1.0 / (sigma * sigma)),
            LossModel::Logistic => Some(0.25),
        }
    }

    fn curvature_floor(&self) -> Option<f64> {
        match *self {
            LossModel::GaussianNll { sigma } => Some(1.0 / (sigma * sigma)),
            LossModel::Logistic => None,
        }
    }

    fn constant_curvature(&self) -> Option<f64> {
        match *self {
            LossModel::GaussianNll { sigma } => Some(1.0 / (sigma * sigma)),
            LossModel::Logistic => None,
        }
    }

    fn curvature_depends_on_response(&self) -> bool {
        false
    }
}

/// `(ℓ, ℓ′, ℓ″, ℓ‴)` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossEval {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

pub fn evaluate_loss(loss: &dyn Loss, z: f64, y: f64) -> Result<LossEval> {
    if !z.is_finite() || !y.is_finite() {
        return Err(Error::Argument(format!("non-finite loss input z={z}, y={y}")));
    }
    loss.check_response(y)?;
    Ok(LossEval {
        value: loss.value(z, y),
        d1: loss.d1(z, y),
        d2: loss.d2(z, y),
        d3: loss.d3(z, y),
    })
}

// ---------------------------------------------------------------------------
// Data-generating processes

/// Sampler for the measurement matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Design {
    /// Entries iid `N(0, 1)`.
    IidNormal,
    /// `(G + Gᵀ)/2` with `G` iid `N(0, 1)`.
    SymmetricNormal,
    /// Entries iid uniform on `[−h, h]`; `h = √3` gives unit variance.
    BoundedUniform { half_width: f64 },
}

impl Design {
    pub fn sample<R: Rng + ?Sized>(&self, d: usize, rng: &mut R) -> Mat {
        match *self {
            Design::IidNormal => linalg::random_gaussian(d, d, rng),
            Design::SymmetricNormal => {
                let g = linalg::random_gaussian(d, d, rng);
                (&g + g.transpose()) * 0.5
            }
            Design::BoundedUniform { half_width } => {
                let u = Uniform::new_inclusive(-half_width, half_width)
                    .expect("half-width validated positive");
                Mat::from_fn(d, d, |_, _| u.sample(rng))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Design::BoundedUniform { half_width } if !(half_width > 0.0 && half_width.is_finite()) => {
                Err(Error::Configuration(format!("bounded_uniform needs half_width > 0, got {half_width}")))
            }
            _ => Ok(()),
        }
    }

    /// Entry bound `X_max` when the design is bounded.
    pub fn x_max(&self) -> Option<f64> {
        match *self {
            Design::BoundedUniform { half_width } => Some(half_width),
            _ => None,
        }
    }

    /// `c` such that `E[⟨X, A⟩⟨X, B⟩] = c·⟨A, B⟩` for all symmetric `A, B`.
    pub fn symmetric_second_moment(&self) -> f64 {
        match *self {
            Design::IidNormal | Design::SymmetricNormal => 1.0,
            Design::BoundedUniform { half_width } => half_width * half_width / 3.0,
        }
    }

    /// Whether `⟨X, S⟩` is jointly Gaussian over symmetric `S`.
    pub fn is_gaussian(&self) -> bool {
        matches!(self, Design::IidNormal | Design::SymmetricNormal)
    }

    /// Second-moment form `M, N ↦ E[⟨X, M⟩⟨X, N⟩]` over all `d×d` matrices, as a
    /// `d²×d²` matrix in column-major `vec` coordinates.
    pub fn second_moment_matrix(&self, d: usize) -> Mat {
        let dd = d * d;
        match *self {
            Design::IidNormal => Mat::identity(dd, dd),
            Design::BoundedUniform { half_width } => {
                Mat::identity(dd, dd) * (half_width * half_width / 3.0)
            }
            Design::SymmetricNormal => {
                // Var X_ii = 1, Var X_ij = 1/2 and X_ij = X_ji.
                let mut m = Mat::zeros(dd, dd);
                for j in 0..d {
                    for i in 0..d {
                        let a = i + j * d;
                        if i == j {
                            m[(a, a)] = 1.0;
                        } else {
                            let b = j + i * d;
                            m[(a, a)] = 0.5;
                            m[(a, b)] = 0.5;
                        }
                    }
                }
                m
            }
        }
    }
}

/// Conditional law of `y` given `z* = ⟨X, θ*θ*ᵀ⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `y = z* + e`, `e ~ N(0, σ²)`.
    Gaussian { sigma: f64 },
    /// `y ~ Bernoulli(sigmoid(z*))`.
    Bernoulli,
}

impl NoiseModel {
    pub fn sample<R: Rng + ?Sized>(&self, z_star: f64, rng: &mut R) -> f64 {
        match *self {
            NoiseModel::Gaussian { sigma } if sigma == 0.0 => z_star,
            NoiseModel::Gaussian { sigma } => {
                z_star + Normal::new(0.0, sigma).expect("sigma validated").sample(rng)
            }
            NoiseModel::Bernoulli => {
                let p = sigmoid(z_star);
                if Bernoulli::new(p).expect("p in [0,1]").sample(rng) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::Gaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => Err(
                Error::Configuration(format!("gaussian noise needs sigma >= 0, got {sigma}")),
            ),
            _ => Ok(()),
        }
    }
}

/// Design, noise law and ground truth, with the seed of the random stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataGeneratingProcess {
    pub design: Design,
    pub noise: NoiseModel,
    pub truth: FactorPoint,
    pub seed: u64,
}

impl DataGeneratingProcess {
    pub fn d(&self) -> usize {
        self.truth.d()
    }

    pub fn k(&self) -> usize {
        self.truth.k()
    }

    /// Independent generator for stream `stream` of this process's seed.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        stream_rng(self.seed, stream)
    }

    /// One `(X, y)` draw.
    pub fn draw<R: Rng + ?Sized>(&self, m_star: &Mat, rng: &mut R) -> Sample {
        let x = self.design.sample(self.d(), rng);
        let z = frob(&x, m_star);
        let y = self.noise.sample(z, rng);
        Sample { x, y }
    }
}

/// ChaCha8 keyed by `seed`, positioned on an independent stream.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `n` iid samples from stream 0 of the process.
pub fn simulate(dgp: &DataGeneratingProcess, n: usize) -> Result<Dataset> {
    simulate_stream(dgp, n, 0)
}

/// `n` iid samples from an explicit stream; bit-identical for equal inputs.
pub fn simulate_stream(dgp: &DataGeneratingProcess, n: usize, stream: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Argument("simulate needs n >= 1".into()));
    }
    dgp.design.validate()?;
    dgp.noise.validate()?;
    let mut rng = dgp.rng(stream);
    let m_star = dgp.truth.gram_outer();
    let samples = (0..n).map(|_| dgp.draw(&m_star, &mut rng)).collect();
    Dataset::new(dgp.d(), dgp.k(), samples)
}

// ---------------------------------------------------------------------------
// Problem constants

/// Constants of the standing assumptions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    pub x_max: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub sigma_eps: f64,
    pub mu_max: f64,
    pub k_loss: f64,
    pub mu0: f64,
    pub lambda0: f64,
    pub d: usize,
    pub k: usize,
}

impl ProblemConstants {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (name, v) in [
            ("x_max", self.x_max),
            ("sigma_eps", self.sigma_eps),
            ("sigma_max", self.sigma_max),
            ("mu_max", self.mu_max),
            ("k_loss", self.k_loss),
        ] {
            if !(v >= 1.0 && v.is_finite()) {
                problems.push(format!("{name} = {v} must be >= 1"));
            }
        }
        for (name, v) in [("mu0", self.mu0), ("lambda0", self.lambda0)] {
            if !(v > 0.0 && v <= 1.0) {
                problems.push(format!("{name} = {v} must lie in (0, 1]"));
            }
        }
        if !(self.sigma_min > 0.0 && self.sigma_min <= self.sigma_max) {
            problems.push(format!(
                "need 0 < sigma_min <= sigma_max, got {} and {}",
                self.sigma_min, self.sigma_max
            ));
        }
        if self.k == 0 || self.k > self.d {
            problems.push(format!("need 1 <= k <= d, got d={}, k={}", self.d, self.k));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems.join("; ")))
        }
    }
}

// ---------------------------------------------------------------------------
// Derivatives

fn check_square(x: &Mat, d: usize) -> Result<()> {
    if x.nrows() != d || x.ncols() != d {
        return Err(Error::Dimension(format!(
            "measurement is {}x{}, factor has d={d}",
            x.nrows(),
            x.ncols()
        )));
    }
    Ok(())
}

fn check_direction(z: &Mat, theta: &Mat) -> Result<()> {
    if z.shape() != theta.shape() {
        return Err(Error::Dimension(format!(
            "direction is {:?}, factor is {:?}",
            z.shape(),
            theta.shape()
        )));
    }
    Ok(())
}

fn check_dataset(data: &Dataset, theta: &Mat) -> Result<()> {
    if data.d != theta.nrows() {
        return Err(Error::Dimension(format!(
            "dataset has d={}, factor is {}x{}",
            data.d,
            theta.nrows(),
            theta.ncols()
        )));
    }
    Ok(())
}

/// `⟨X, θθᵀ⟩`.
pub fn predict(x: &Mat, theta: &Mat) -> Result<f64> {
    check_square(x, theta.nrows())?;
    Ok(frob(x, &(theta * theta.transpose())))
}

/// `(1/n) Σ ℓ(⟨X_i, θθᵀ⟩, y_i)`.
pub fn empirical_loss(data: &Dataset, theta: &Mat, loss: &dyn Loss) -> Result<f64> {
    check_dataset(data, theta)?;
    let m = theta * theta.transpose();
    let total: CompensatedSum = data
        .samples
        .iter()
        .map(|s| loss.value(frob(&s.x, &m), s.y))
        .collect();
    Ok(total.value() / data.n() as f64)
}

/// `(1/n) Σ ℓ′(z_i, y_i)(X_i + X_iᵀ)θ`.
pub fn euclidean_gradient(data: &Dataset, theta: &Mat, loss: &dyn Loss) -> Result<Mat> {
    check_dataset(data, theta)?;
    let m = theta * theta.transpose();
    let mut s = Mat::zeros(data.d, data.d);
    for smp in &data.samples {
        let w = loss.d1(frob(&smp.x, &m), smp.y);
        add_scaled(&mut s, w, &smp.x);
    }
    Ok((&s + s.transpose()) * theta / data.n() as f64)
}

/// `D²L̄(θ)[Z, W]`.
pub fn hessian_bilinear(
    data: &Dataset,
    theta: &Mat,
    z: &Mat,
    w: &Mat,
    loss: &dyn Loss,
) -> Result<f64> {
    check_dataset(data, theta)?;
    check_direction(z, theta)?;
    check_direction(w, theta)?;
    let m = theta * theta.transpose();
    let a_z = theta * z.transpose() + z * theta.transpose();
    let a_w = theta * w.transpose() + w * theta.transpose();
    let b_zw = w * z.transpose() + z * w.transpose();
    let total: CompensatedSum = data
        .samples
        .iter()
        .map(|s| {
            let zi = frob(&s.x, &m);
            loss.d2(zi, s.y) * frob(&s.x, &a_z) * frob(&s.x, &a_w)
                + loss.d1(zi, s.y) * frob(&s.x, &b_zw)
        })
        .collect();
    Ok(total.value() / data.n() as f64)
}

/// Riesz representative of `W ↦ D²L̄(θ)[Z, W]`.
pub fn hessian_operator(data: &Dataset, theta: &Mat, z: &Mat, loss: &dyn Loss) -> Result<Mat> {
    check_dataset(data, theta)?;
    check_direction(z, theta)?;
    let m = theta * theta.transpose();
    let mut s = Mat::zeros(data.d, data.d);
    let mut out = Mat::zeros(theta.nrows(), theta.ncols());
    for smp in &data.samples {
        let zi = frob(&smp.x, &m);
        let xt_theta = &smp.x * theta + smp.x.transpose() * theta;
        let a = xt_theta.dot(z);
        add_scaled(&mut out, loss.d2(zi, smp.y) * a, &xt_theta);
        add_scaled(&mut s, loss.d1(zi, smp.y), &smp.x);
    }
    out += (&s + s.transpose()) * z;
    Ok(out / data.n() as f64)
}

/// Full Euclidean Hessian as a `dk×dk` matrix in column-major `vec(θ)` coordinates.
pub fn hessian_matrix(data: &Dataset, theta: &Mat, loss: &dyn Loss) -> Result<Mat> {
    check_dataset(data, theta)?;
    let (d, k) = theta.shape();
    let dk = d * k;
    let m = theta * theta.transpose();
    let mut s = Mat::zeros(d, d);
    let mut h = Mat::zeros(dk, dk);
    for smp in &data.samples {
        let zi = frob(&smp.x, &m);
        let a = &smp.x * theta + smp.x.transpose() * theta;
        let av = nalgebra::DVector::from_column_slice(a.as_slice());
        h.ger(loss.d2(zi, smp.y), &av, &av, 1.0);
        add_scaled(&mut s, loss.d1(zi, smp.y), &smp.x);
    }
    // ℓ′ term: ⟨(S + Sᵀ)Z, W⟩ = Σ_h ⟨(S+Sᵀ) z_h, w_h⟩ couples only equal columns.
    let st = &s + s.transpose();
    for c in 0..k {
        let mut block = h.view_mut((c * d, c * d), (d, d));
        block += &st;
    }
    Ok(h / data.n() as f64)
}

/// `D³L̄(θ)[Z, W, V]`.
pub fn third_derivative(
    data: &Dataset,
    theta: &Mat,
    z: &Mat,
    w: &Mat,
    v: &Mat,
    loss: &dyn Loss,
) -> Result<f64> {
    check_dataset(data, theta)?;
    for dir in [z, w, v] {
        check_direction(dir, theta)?;
    }
    let m = theta * theta.transpose();
    let sym = |p: &Mat, q: &Mat| p * q.transpose() + q * p.transpose();
    let (a_z, a_w, a_v) = (sym(theta, z), sym(theta, w), sym(theta, v));
    let (b_wz, b_vz, b_vw) = (sym(w, z), sym(v, z), sym(v, w));
    let total: CompensatedSum = data
        .samples
        .iter()
        .map(|s| {
            let zi = frob(&s.x, &m);
            let (pz, pw, pv) = (frob(&s.x, &a_z), frob(&s.x, &a_w), frob(&s.x, &a_v));
            loss.d3(zi, s.y) * pz * pw * pv
                + loss.d2(zi, s.y)
                    * (frob(&s.x, &b_wz) * pv + frob(&s.x, &b_vz) * pw + frob(&s.x, &b_vw) * pz)
        })
        .collect();
    Ok(total.value() / data.n() as f64)
}

/// Riesz representative of `V ↦ D³L̄(θ)[Z, W, V]`.
pub fn third_derivative_operator(
    data: &Dataset,
    theta: &Mat,
    z: &Mat,
    w: &Mat,
    loss: &dyn Loss,
) -> Result<Mat> {
    check_dataset(data, theta)?;
    check_direction(z, theta)?;
    check_direction(w, theta)?;
    let m = theta * theta.transpose();
    let mut out = Mat::zeros(theta.nrows(), theta.ncols());
    for s in &data.samples {
        let zi = frob(&s.x, &m);
        let xt = &s.x + s.x.transpose();
        let xt_theta = &xt * theta;
        let xt_z = &xt * z;
        let xt_w = &xt * w;
        let (pz, pw) = (xt_theta.dot(z), xt_theta.dot(w));
        let b_wz = xt_z.dot(w);
        let (l2, l3) = (loss.d2(zi, s.y), loss.d3(zi, s.y));
        add_scaled(&mut out, l3 * pz * pw + l2 * b_wz, &xt_theta);
        add_scaled(&mut out, l2 * pw, &xt_z);
        add_scaled(&mut out, l2 * pz, &xt_w);
    }
    Ok(out / data.n() as f64)
}

// ---------------------------------------------------------------------------
// Population Hessian

/// How a population quantity was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PopulationMethod {
    /// Exact second-moment identity for constant-curvature losses.
    ClosedForm,
    /// One-dimensional Gauss–Hermite reduction for Gaussian designs.
    Quadrature,
    MonteCarlo,
}

/// Population bilinear-form matrix over a list of directions.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationHessian {
    pub matrix: Mat,
    /// Standard errors (zero for deterministic methods).
    pub std_error: Mat,
    pub method: PopulationMethod,
}

/// Scalar population Hessian value with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PopulationValue {
    pub value: f64,
    pub std_error: f64,
    pub method: PopulationMethod,
}

const QUADRATURE_ORDER: usize = 96;

/// `E[∇²L̄*(θ*)][Z, W] = E[μ′(z*)·⟨X, θZᵀ+Zθᵀ⟩·⟨X, θWᵀ+Wθᵀ⟩]`.
///
/// Closed form when the loss has constant curvature (any design with isotropic
/// symmetric second moments), Gauss–Hermite reduction when the design is
/// Gaussian and `ℓ″` does not depend on `y`, Monte Carlo otherwise (requires
/// `mc_budget`).
pub fn population_hessian_bilinear(
    dgp: &DataGeneratingProcess,
    z: &Mat,
    w: &Mat,
    loss: &dyn Loss,
    mc_budget: Option<usize>,
) -> Result<PopulationValue> {
    let h = population_hessian(dgp, &[z.clone(), w.clone()], loss, mc_budget)?;
    Ok(PopulationValue {
        value: h.matrix[(0, 1)],
        std_error: h.std_error[(0, 1)],
        method: h.method,
    })
}

/// Matrix of population Hessian values `H_ij = E[∇²L̄*(θ*)][Z_i, Z_j]`.
pub fn population_hessian(
    dgp: &DataGeneratingProcess,
    dirs: &[Mat],
    loss: &dyn Loss,
    mc_budget: Option<usize>,
) -> Result<PopulationHessian> {
    let theta = dgp.truth.as_mat();
    for dir in dirs {
        check_direction(dir, theta)?;
    }
    let sym: Vec<Mat> = dirs
        .iter()
        .map(|z| theta * z.transpose() + z * theta.transpose())
        .collect();
    let p = dirs.len();
    let gram = Mat::from_fn(p, p, |i, j| frob(&sym[i], &sym[j]));

    if let Some(c) = loss.constant_curvature() {
        let scale = c * dgp.design.symmetric_second_moment();
        return Ok(PopulationHessian {
            matrix: gram * scale,
            std_error: Mat::zeros(p, p),
            method: PopulationMethod::ClosedForm,
        });
    }
    if dgp.design.is_gaussian() && !loss.curvature_depends_on_response() {
        return Ok(PopulationHessian {
            matrix: gaussian_design_quadrature(&dgp.truth.gram_outer(), &sym, &gram, loss),
            std_error: Mat::zeros(p, p),
            method: PopulationMethod::Quadrature,
        });
    }
    match mc_budget {
        Some(budget) if budget >= 2 => Ok(population_hessian_mc(dgp, dirs, loss, budget, u64::MAX - 1)),
        _ => Err(Error::Configuration(
            "population Hessian has no closed form for this design/loss; supply a Monte Carlo budget"
                .into(),
        )),
    }
}

/// For `x = vec(X)` standard normal on symmetric arguments, write
/// `⟨X, A⟩ = α t + ξ_A` with `t = ⟨X, M*⟩/‖M*‖`. Then
/// `E[w(z*)⟨X,A⟩⟨X,B⟩] = αβ·E[w t²] + (⟨A,B⟩ − αβ)·E[w]`.
fn gaussian_design_quadrature(m_star: &Mat, sym: &[Mat], gram: &Mat, loss: &dyn Loss) -> Mat {
    let scale = m_star.norm();
    let p = sym.len();
    let curvature = |z: f64| loss.d2(z, 0.0);
    if scale == 0.0 {
        return gram * curvature(0.0);
    }
    let u = m_star / scale;
    let (nodes, weights) = stats::gauss_hermite(QUADRATURE_ORDER);
    let (mut e_w, mut e_wt2) = (0.0, 0.0);
    for (t, wt) in nodes.iter().zip(&weights) {
        let c = curvature(scale * t);
        e_w += wt * c;
        e_wt2 += wt * c * t * t;
    }
    let proj: Vec<f64> = sym.iter().map(|a| frob(a, &u)).collect();
    Mat::from_fn(p, p, |i, j| {
        let ab = proj[i] * proj[j];
        ab * e_wt2 + (gram[(i, j)] - ab) * e_w
    })
}

/// Monte Carlo estimate of the population Hessian over `dirs` from `budget`
/// fresh draws of stream `stream`.
pub fn population_hessian_mc(
    dgp: &DataGeneratingProcess,
    dirs: &[Mat],
    loss: &dyn Loss,
    budget: usize,
    stream: u64,
) -> PopulationHessian {
    let theta = dgp.truth.as_mat();
    let m_star = dgp.truth.gram_outer();
    let p = dirs.len();
    let mut rng = dgp.rng(stream);
    let mut sum = Mat::zeros(p, p);
    let mut sum_sq = Mat::zeros(p, p);
    let mut a = nalgebra::DVector::zeros(p);
    for _ in 0..budget {
        let s = dgp.draw(&m_star, &mut rng);
        let z = frob(&s.x, &m_star);
        let xt_theta = &s.x * theta + s.x.transpose() * theta;
        for (i, dir) in dirs.iter().enumerate() {
            a[i] = xt_theta.dot(dir);
        }
        let c = loss.d2(z, s.y);
        for j in 0..p {
            for i in 0..p {
                let v = c * a[i] * a[j];
                sum[(i, j)] += v;
                sum_sq[(i, j)] += v * v;
            }
        }
    }
    let nb = budget as f64;
    let mean = &sum / nb;
    let std_error = Mat::from_fn(p, p, |i, j| {
        let var = (sum_sq[(i, j)] / nb - mean[(i, j)].powi(2)).max(0.0) * nb / (nb - 1.0);
        (var / nb).sqrt()
    });
    PopulationHessian {
        matrix: mean,
        std_error,
        method: PopulationMethod::MonteCarlo,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_gaussian;
    use rand_distr::StandardNormal;

    fn dataset(d: usize, k: usize, n: usize, seed: u64, loss: LossModel) -> (Dataset, Mat) {
        let mut rng = stream_rng(seed, 0);
        let theta = random_gaussian(d, k, &mut rng) * 0.5;
        let samples = (0..n)
            .map(|_| {
                let x = random_gaussian(d, d, &mut rng);
                let y = match loss {
                    LossModel::Logistic => f64::from(rng.random::<bool>()),
                    _ => rng.sample::<f64, _>(StandardNormal),
                };
                Sample { x, y }
            })
            .collect();
        (Dataset::new(d, k, samples).unwrap(), theta)
    }

    #[test]
    fn predict_examples() {
        let x = Mat::identity(2, 2);
        let theta = Mat::from_column_slice(2, 1, &[1.0, 0.0]);
        assert_eq!(predict(&x, &theta).unwrap(), 1.0);
        assert_eq!(predict(&x, &Mat::zeros(2, 1)).unwrap(), 0.0);
        assert!(matches!(predict(&Mat::zeros(3, 3), &theta), Err(Error::Dimension(_))));
    }

    #[test]
    fn predict_matches_double_sum() {
        let mut rng = stream_rng(11, 0);
        let x = random_gaussian(4, 4, &mut rng);
        let theta = random_gaussian(4, 2, &mut rng);
        let m = &theta * theta.transpose();
        let mut expect = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                expect += x[(i, j)] * m[(i, j)];
            }
        }
        assert!((predict(&x, &theta).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn loss_examples() {
        let g = LossModel::gaussian(1.0);
        let e = evaluate_loss(&g, 0.7, 0.7).unwrap();
        assert_eq!((e.value, e.d1, e.d2, e.d3), (0.0, 0.0, 1.0, 0.0));

        let l = LossModel::Logistic;
        let e = evaluate_loss(&l, 0.0, 1.0).unwrap();
        assert!((e.value - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!((e.d1, e.d2, e.d3), (-0.5, 0.25, 0.0));

        assert!(matches!(evaluate_loss(&l, 0.0, 0.5), Err(Error::Domain { .. })));
        assert!(evaluate_loss(&g, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn logistic_derivatives_match_finite_differences() {
        let l = LossModel::Logistic;
        let (z, y, h) = (1.5, 0.0, 1e-5);
        let e = evaluate_loss(&l, z, y).unwrap();
        let fd1 = (l.value(z + h, y) - l.value(z - h, y)) / (2.0 * h);
        let fd2 = (l.d1(z + h, y) - l.d1(z - h, y)) / (2.0 * h);
        let fd3 = (l.d2(z + h, y) - l.d2(z - h, y)) / (2.0 * h);
        assert!((e.d1 - fd1).abs() < 1e-8);
        assert!((e.d2 - fd2).abs() < 1e-8);
        assert!((e.d3 - fd3).abs() < 1e-8);
    }

    #[test]
    fn increments_match_differences() {
        for loss in [LossModel::gaussian(0.3), LossModel::Logistic] {
            for &(z, dz, y) in &[(0.3, 0.2, 1.0), (-4.0, 1e-3, 0.0), (12.0, -2.0, 1.0)] {
                let direct = loss.value(z + dz, y) - loss.value(z, y);
                assert!((loss.increment(z, dz, y) - direct).abs() < 1e-12 * (1.0 + direct.abs()));
            }
        }
        // Tiny steps keep their relative accuracy.
        let l = LossModel::Logistic;
        let inc = l.increment(0.4, 1e-13, 1.0);
        assert!((inc / 1e-13 - l.d1(0.4, 1.0)).abs() < 1e-6);
    }

    #[test]
    fn empirical_loss_examples() {
        let g = LossModel::gaussian(1.0);
        let (data, theta) = dataset(3, 2, 5, 1, g);
        let exact: Vec<Sample> = data
            .samples
            .iter()
            .map(|s| Sample { x: s.x.clone(), y: predict(&s.x, &theta).unwrap() })
            .collect();
        let exact = Dataset::new(3, 2, exact).unwrap();
        assert_eq!(empirical_loss(&exact, &theta, &g).unwrap(), 0.0);
        assert_eq!(euclidean_gradient(&exact, &theta, &g).unwrap().amax(), 0.0);

        let one = Dataset::new(
            2,
            1,
            vec![Sample { x: Mat::zeros(2, 2), y: 1.0 }],
        )
        .unwrap();
        let l = LossModel::Logistic;
        let v = empirical_loss(&one, &Mat::zeros(2, 1), &l).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);

        let (mixed, theta) = dataset(3, 1, 3, 4, l);
        let expect: f64 = mixed
            .samples
            .iter()
            .map(|s| evaluate_loss(&l, predict(&s.x, &theta).unwrap(), s.y).unwrap().value)
            .sum::<f64>()
            / 3.0;
        assert!((empirical_loss(&mixed, &theta, &l).unwrap() - expect).abs() < 1e-14);
        assert!(Dataset::new(2, 1, vec![]).is_err());
    }

    #[test]
    fn gradient_single_sample_example() {
        let data = Dataset::new(2, 1, vec![Sample { x: Mat::identity(2, 2), y: 0.0 }]).unwrap();
        let theta = Mat::from_column_slice(2, 1, &[1.0, 0.0]);
        let g = euclidean_gradient(&data, &theta, &LossModel::gaussian(1.0)).unwrap();
        assert_eq!(g, Mat::from_column_slice(2, 1, &[2.0, 0.0]));
    }

    #[test]
    fn hessian_operator_contracts_to_bilinear() {
        for loss in [LossModel::gaussian(0.7), LossModel::Logistic] {
            let (data, theta) = dataset(4, 2, 7, 9, loss);
            let mut rng = stream_rng(5, 1);
            let z = random_gaussian(4, 2, &mut rng);
            let w = random_gaussian(4, 2, &mut rng);
            let op = hessian_operator(&data, &theta, &z, &loss).unwrap();
            let bil = hessian_bilinear(&data, &theta, &z, &w, &loss).unwrap();
            assert!((op.dot(&w) - bil).abs() < 1e-12 * (1.0 + bil.abs()));
            assert!(hessian_operator(&data, &theta, &Mat::zeros(4, 2), &loss).unwrap().amax() == 0.0);

            let h = hessian_matrix(&data, &theta, &loss).unwrap();
            let zv = nalgebra::DVector::from_column_slice(z.as_slice());
            let wv = nalgebra::DVector::from_column_slice(w.as_slice());
            assert!(((zv.transpose() * &h * wv)[0] - bil).abs() < 1e-11 * (1.0 + bil.abs()));

            let t = third_derivative(&data, &theta, &z, &w, &theta, &loss).unwrap();
            let top = third_derivative_operator(&data, &theta, &z, &w, &loss).unwrap();
            assert!((top.dot(&theta) - t).abs() < 1e-11 * (1.0 + t.abs()));
        }
    }

    #[test]
    fn hessian_hand_example() {
        // n=1, X=I₂, θ=e₁, y=1 (zero residual), Z=W=e₂: ℓ″·⟨2θ, e₂⟩² = 0 and
        // ℓ′ = 0, so the value is 0. With Z = W = e₁: ⟨2e₁, e₁⟩² = 4.
        let data = Dataset::new(2, 1, vec![Sample { x: Mat::identity(2, 2), y: 1.0 }]).unwrap();
        let theta = Mat::from_column_slice(2, 1, &[1.0, 0.0]);
        let e2 = Mat::from_column_slice(2, 1, &[0.0, 1.0]);
        let g = LossModel::gaussian(1.0);
        let op = hessian_operator(&data, &theta, &e2, &g).unwrap();
        assert_eq!(op, Mat::zeros(2, 1));
        assert_eq!(hessian_bilinear(&data, &theta, &theta, &theta, &g).unwrap(), 4.0);
        // Residual −1 (y = 2) adds ℓ′·⟨X̃e₂, e₂⟩ = −1·2.
        let data = Dataset::new(2, 1, vec![Sample { x: Mat::identity(2, 2), y: 2.0 }]).unwrap();
        let op = hessian_operator(&data, &theta, &e2, &g).unwrap();
        assert_eq!(op, Mat::from_column_slice(2, 1, &[0.0, -2.0]));
        assert_eq!(op.dot(&e2), hessian_bilinear(&data, &theta, &e2, &e2, &g).unwrap());
    }

    #[test]
    fn gaussian_third_derivative_has_no_cubic_term() {
        let g = LossModel::gaussian(1.0);
        let (data, theta) = dataset(3, 1, 4, 2, g);
        let z = Mat::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        // Only ℓ″ terms: each is linear in a pair product of directions.
        let t = third_derivative(&data, &theta, &z, &z, &z, &g).unwrap();
        let mut expect = 0.0;
        let b = &z * z.transpose() * 2.0;
        let a = &theta * z.transpose() + &z * theta.transpose();
        for s in &data.samples {
            expect += 3.0 * frob(&s.x, &b) * frob(&s.x, &a);
        }
        assert!((t - expect / 4.0).abs() < 1e-12);
        let zero = Mat::zeros(3, 1);
        assert_eq!(third_derivative(&data, &theta, &zero, &z, &z, &g).unwrap(), 0.0);
    }

    #[test]
    fn population_hessian_examples() {
        let truth = FactorPoint::new(Mat::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let dgp = DataGeneratingProcess {
            design: Design::IidNormal,
            noise: NoiseModel::Gaussian { sigma: 1.0 },
            truth,
            seed: 1,
        };
        let e2 = Mat::from_column_slice(2, 1, &[0.0, 1.0]);
        let g = LossModel::gaussian(1.0);
        let v = population_hessian_bilinear(&dgp, &e2, &e2, &g, None).unwrap();
        assert_eq!(v.method, PopulationMethod::ClosedForm);
        assert!((v.value - 2.0).abs() < 1e-15);

        // Vertical direction θ*A, A skew, for k = 2.
        let mut rng = stream_rng(2, 0);
        let t = random_gaussian(4, 2, &mut rng);
        let dgp2 = DataGeneratingProcess { truth: FactorPoint::new(t.clone()).unwrap(), ..dgp.clone() };
        let a = Mat::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let vert = &t * a;
        let v = population_hessian_bilinear(&dgp2, &vert, &vert, &g, None).unwrap();
        assert!(v.value.abs() < 1e-12);
    }

    #[test]
    fn population_monte_carlo_matches_closed_form() {
        let mut rng = stream_rng(8, 0);
        let truth = FactorPoint::new(random_gaussian(3, 2, &mut rng)).unwrap();
        let dgp = DataGeneratingProcess {
            design: Design::IidNormal,
            noise: NoiseModel::Gaussian { sigma: 0.5 },
            truth,
            seed: 3,
        };
        let g = LossModel::gaussian(0.5);
        let z = random_gaussian(3, 2, &mut rng);
        let w = random_gaussian(3, 2, &mut rng);
        let exact = population_hessian_bilinear(&dgp, &z, &w, &g, None).unwrap().value;
        let mc = population_hessian_mc(&dgp, &[z, w], &g, 20_000, 7);
        assert!((mc.matrix[(0, 1)] - exact).abs() < 3.0 * mc.std_error[(0, 1)]);
    }

    #[test]
    fn quadrature_matches_monte_carlo_for_logistic() {
        let mut rng = stream_rng(21, 0);
        let truth = FactorPoint::new(random_gaussian(3, 2, &mut rng) * 0.6).unwrap();
        let dgp = DataGeneratingProcess {
            design: Design::IidNormal,
            noise: NoiseModel::Bernoulli,
            truth,
            seed: 5,
        };
        let l = LossModel::Logistic;
        let dirs = vec![random_gaussian(3, 2, &mut rng), random_gaussian(3, 2, &mut rng)];
        let quad = population_hessian(&dgp, &dirs, &l, None).unwrap();
        assert_eq!(quad.method, PopulationMethod::Quadrature);
        let mc = population_hessian_mc(&dgp, &dirs, &l, 40_000, 9);
        for i in 0..2 {
            for j in 0..2 {
                assert!((quad.matrix[(i, j)] - mc.matrix[(i, j)]).abs() < 4.0 * mc.std_error[(i, j)]);
            }
        }
    }

    #[test]
    fn unsupported_population_requires_budget() {
        let truth = FactorPoint::new(Mat::from_column_slice(2, 1, &[1.0, 0.5])).unwrap();
        let dgp = DataGeneratingProcess {
            design: Design::BoundedUniform { half_width: 3f64.sqrt() },
            noise: NoiseModel::Bernoulli,
            truth,
            seed: 1,
        };
        let z = Mat::from_column_slice(2, 1, &[1.0, 0.0]);
        let err = population_hessian_bilinear(&dgp, &z, &z, &LossModel::Logistic, None);
        assert!(matches!(err, Err(Error::Configuration(_))));
        assert!(population_hessian_bilinear(&dgp, &z, &z, &LossModel::Logistic, Some(100)).is_ok());
    }

    #[test]
    fn simulation_is_deterministic_and_noiseless_when_sigma_zero() {
        let truth = FactorPoint::new(Mat::from_column_slice(3, 1, &[1.0, -0.5, 0.2])).unwrap();
        let dgp = DataGeneratingProcess {
            design: Design::SymmetricNormal,
            noise: NoiseModel::Gaussian { sigma: 0.0 },
            truth: truth.clone(),
            seed: 42,
        };
        let a = simulate(&dgp, 20).unwrap();
        let b = simulate(&dgp, 20).unwrap();
        assert_eq!(a, b);
        for s in &a.samples {
            assert_eq!(s.y, predict(&s.x, &truth).unwrap());
            assert_eq!(s.x, s.x.transpose());
        }
        assert!(simulate(&dgp, 0).is_err());
        let other = simulate_stream(&dgp, 20, 1).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn score_has_zero_mean_under_matched_noise() {
        let truth = FactorPoint::new(Mat::from_column_slice(2, 1, &[1.0, 0.3])).unwrap();
        let dgp = DataGeneratingProcess {
            design: Design::IidNormal,
            noise: NoiseModel::Gaussian { sigma: 1.0 },
            truth: truth.clone(),
            seed: 17,
        };
        let loss = LossModel::gaussian(1.0);
        let n = 100_000;
        let data = simulate(&dgp, n).unwrap();
        let m = truth.gram_outer();
        let mean = data.samples.iter().map(|s| loss.d1(frob(&s.x, &m), s.y)).sum::<f64>() / n as f64;
        // ε = −e/σ² has σ_ε = 1 here.
        assert!(mean.abs() <= 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn dataset_json_is_row_major() {
        let x = Mat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let data = Dataset::new(2, 1, vec![Sample { x, y: 0.5 }]).unwrap();
        let json = data.to_json();
        assert_eq!(json, r#"{"d":2,"k":1,"samples":[{"X":[[1.0,2.0],[3.0,4.0]],"y":0.5}]}"#);
        assert_eq!(Dataset::from_json(&json).unwrap(), data);
        assert!(Dataset::from_json(r#"{"d":3,"k":1,"samples":[{"X":[[1.0,2.0],[3.0,4.0]],"y":0.5}]}"#).is_err());
    }

    #[test]
    fn constants_validation() {
        let ok = ProblemConstants {
            x_max: 1.0,
            sigma_min: 1.0,
            sigma_max: 1.0,
            sigma_eps: 1.0,
            mu_max: 1.0,
            k_loss: 1.0,
            mu0: 1.0,
            lambda0: 1.0,
            d: 1,
            k: 1,
        };
        assert!(ok.validate().is_ok());
        assert!(ProblemConstants { mu0: 1.5, ..ok }.validate().is_err());
        assert!(ProblemConstants { x_max: 0.5, ..ok }.validate().is_err());
        assert!(ProblemConstants { k: 2, ..ok }.validate().is_err());
    }

    #[test]
    fn design_second_moments() {
        let mut rng = stream_rng(3, 0);
        let n = 20_000;
        for design in [Design::IidNormal, Design::SymmetricNormal, Design::BoundedUniform { half_width: 3f64.sqrt() }] {
            let a = {
                let g = random_gaussian(3, 3, &mut rng);
                &g + g.transpose()
            };
            let exact = design.symmetric_second_moment() * a.norm_squared();
            let mc = (0..n).map(|_| frob(&design.sample(3, &mut rng), &a).powi(2)).sum::<f64>() / n as f64;
            assert!((mc - exact).abs() < 0.05 * exact, "{design:?}");
        }
    }
}
