//! Theory certificates and runtime checks of the standing assumptions.
//!
//! The certificate constants are evaluated verbatim; they are loose by orders
//! of magnitude and are meant as one-sided sanity checks. The empirical
//! counterparts (noise aggregates, restricted eigenvalues, a Lipschitz probe,
//! Taylor residuals) are what the experiments actually compare against.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{self, horizontal_project, log_map, HorizontalBasis};
use crate::inference::{per_sample_scores, represent, restricted_hessian, restricted_score};
use crate::linalg::{self, frob, random_gaussian, sym_eigen, CompensatedSum, Mat, Vector};
use crate::model::{
    euclidean_gradient, hessian_matrix, hessian_operator, stream_rng, third_derivative_operator,
    DataGeneratingProcess, Dataset, Design, Loss, ProblemConstants,
};
use crate::stats;

// ---------------------------------------------------------------------------
// Certificates

/// Closed-form constants of the finite-sample guarantee at confidence `1 − δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryCertificate {
    pub constants: ProblemConstants,
    pub delta: f64,
    /// Lipschitz constant of the quotient Hessian.
    #[serde(rename = "K")]
    pub k_lipschitz: f64,
    pub n_required: f64,
    pub radius_required: f64,
    /// `μ₀λ₀σ_min²`, the population level of the eigenvalue lower bound.
    pub lambda_min_lower_bound: f64,
    /// `2μ₀λ₀σ_min²`: the sharper population inequality that follows from
    /// `‖θZᵀ + Zθᵀ‖_F² ≥ 2σ_k(θ)²‖Z‖_F²` for horizontal `Z`.
    pub lambda_min_lower_bound_sharp: f64,
    /// Empirical restricted minimum eigenvalue, when data were supplied.
    pub lambda_min_restricted: Option<f64>,
}

pub fn theory_constants(c: &ProblemConstants, delta: f64) -> Result<TheoryCertificate> {
    c.validate()?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Validation(format!("delta must lie in (0, 1), got {delta}")));
    }
    let (d, k) = (c.d as f64, c.k as f64);
    let lip_core = c.x_max.powi(4) * c.sigma_max.powi(5) * d.powi(4) * k.powf(2.5)
        * (c.k_loss + c.mu_max + 15.0 * c.sigma_eps);
    let mu_lambda = c.mu0 * c.lambda0;
    Ok(TheoryCertificate {
        constants: *c,
        delta,
        k_lipschitz: 160.0 * lip_core,
        n_required: 640.0
            * d.powi(2)
            * k.powi(6)
            * c.x_max.powi(4)
            * c.sigma_max.powi(4)
            * c.sigma_eps.powi(2)
            * (12.0 * d * d * k * k / delta).ln()
            / (mu_lambda * c.sigma_min.powi(2)),
        radius_required: c.sigma_min.min(mu_lambda * c.sigma_min.powi(3) / (320.0 * lip_core)),
        lambda_min_lower_bound: mu_lambda * c.sigma_min.powi(2),
        lambda_min_lower_bound_sharp: 2.0 * mu_lambda * c.sigma_min.powi(2),
        lambda_min_restricted: None,
    })
}

impl TheoryCertificate {
    fn dk(&self) -> (f64, f64) {
        (self.constants.d as f64, self.constants.k as f64)
    }

    /// High-probability bound on the quotient distance of the minimizer.
    pub fn rate_bound(&self, n: usize) -> f64 {
        let c = &self.constants;
        let (d, k) = self.dk();
        (512.0 * d * k * k * c.sigma_max.powi(2) * c.sigma_eps.powi(2) * c.x_max.powi(2)
            * (8.0 * d * k / self.delta).ln()
            / (n as f64 * (c.mu0 * c.lambda0).powi(2) * c.sigma_min.powi(4)))
        .sqrt()
    }

    /// Event bound on `‖X̄‖_F`, `X̄ = n⁻¹ Σ ε_i X_i`.
    pub fn xbar_bound(&self, n: usize) -> f64 {
        let c = &self.constants;
        let (d, k) = self.dk();
        (8.0 * d * k * c.sigma_eps.powi(2) * c.x_max.powi(2) * (8.0 * d * k / self.delta).ln() / n as f64).sqrt()
    }

    /// Event bound on each of the mean absolute noise derivatives.
    pub fn eta_bound(&self, n: usize) -> f64 {
        let c = &self.constants;
        c.mu_max + (3.0 + (72.0 * (12.0 / self.delta).ln() / n as f64).sqrt()) * c.sigma_eps
    }

    /// Event bound on the operator norm of `Z ↦ M̄[Z]`.
    pub fn mbar_bound(&self, n: usize) -> f64 {
        let c = &self.constants;
        let (d, k) = self.dk();
        (128.0 * d * k.powi(3) * c.x_max.powi(4) * c.sigma_max.powi(4) * c.sigma_eps.powi(2)
            * (8.0 * d * d * k * k / self.delta).ln()
            / n as f64)
            .sqrt()
    }

    /// Finite-sample lower bound on the restricted minimum eigenvalue.
    pub fn lambda_min_finite_sample(&self, n: usize) -> f64 {
        let c = &self.constants;
        let (d, k) = self.dk();
        self.lambda_min_lower_bound
            - (160.0 * d * d * k.powi(6) * c.x_max.powi(4) * c.sigma_max.powi(4) * c.sigma_eps.powi(2)
                * (6.0 * d * d * k * k / self.delta).ln()
                / n as f64)
                .sqrt()
    }
}

// ---------------------------------------------------------------------------
// Noise aggregates

/// Empirical noise aggregates at the truth and their event bounds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalAggregates {
    /// `X̄ = n⁻¹ Σ ε_i X_i` with `ε_i = ℓ′(z*_i, y_i)`.
    #[serde(with = "linalg::rows")]
    pub xbar: Mat,
    pub xbar_norm: f64,
    /// `n⁻¹ Σ |ε_i|`, `n⁻¹ Σ |ε′_i|`, `n⁻¹ Σ |ε″_i|` for `ℓ′, ℓ″, ℓ‴`.
    pub eps_bar: f64,
    pub eps1_bar: f64,
    pub eps2_bar: f64,
    /// Operator norm of `Z ↦ n⁻¹ Σ (ε′_i − E[ε′_i|X_i])⟨X̃_iθ*, Z⟩X̃_iθ*`; only
    /// available when `ℓ″` does not depend on the response (then it is zero).
    pub mbar_opnorm_estimate: Option<f64>,
    pub bounds: Option<EventBounds>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EventBounds {
    pub delta: f64,
    pub xbar: f64,
    pub eta: f64,
    pub mbar: f64,
    pub xbar_holds: bool,
    pub eta_holds: bool,
}

pub fn noise_aggregates(
    data: &Dataset,
    theta_star: &Mat,
    loss: &dyn Loss,
    certificate: Option<&TheoryCertificate>,
) -> Result<EmpiricalAggregates> {
    if data.d != theta_star.nrows() {
        return Err(Error::Dimension(format!("dataset has d={}, truth has d={}", data.d, theta_star.nrows())));
    }
    let n = data.n();
    let m = theta_star * theta_star.transpose();
    let mut xbar = Mat::zeros(data.d, data.d);
    let (mut e0, mut e1, mut e2) = (CompensatedSum::default(), CompensatedSum::default(), CompensatedSum::default());
    for s in &data.samples {
        let z = frob(&s.x, &m);
        let eps = loss.d1(z, s.y);
        linalg::add_scaled(&mut xbar, eps, &s.x);
        e0.add(eps.abs());
        e1.add(loss.d2(z, s.y).abs());
        e2.add(loss.d3(z, s.y).abs());
    }
    xbar /= n as f64;
    let xbar_norm = xbar.norm();
    let eps_bar = e0.value() / n as f64;
    let eps1_bar = e1.value() / n as f64;
    let eps2_bar = e2.value() / n as f64;
    let bounds = certificate.map(|c| {
        let eta = c.eta_bound(n);
        EventBounds {
            delta: c.delta,
            xbar: c.xbar_bound(n),
            eta,
            mbar: c.mbar_bound(n),
            xbar_holds: xbar_norm <= c.xbar_bound(n),
            eta_holds: eps_bar <= eta && eps1_bar <= eta && eps2_bar <= eta,
        }
    });
    Ok(EmpiricalAggregates {
        xbar,
        xbar_norm,
        eps_bar,
        eps1_bar,
        eps2_bar,
        // ε′_i = E[ε′_i | X_i] exactly when the curvature ignores y.
        mbar_opnorm_estimate: (!loss.curvature_depends_on_response()).then_some(0.0),
        bounds,
    })
}

// ---------------------------------------------------------------------------
// Restricted eigenvalues

/// Domain of the quadratic form `M ↦ E⟨X, M⟩²` used for the estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormDomain {
    /// All `d×d` matrices (`d²×d²` form).
    Full,
    /// Symmetric matrices only, which contain every `θZᵀ + Zθᵀ`.
    Symmetric,
}

/// Largest `d` for which the form matrix is materialized.
pub const MAX_FORM_DIM: usize = 12;

fn form_basis(d: usize, domain: FormDomain) -> Mat {
    match domain {
        FormDomain::Full => Mat::identity(d * d, d * d),
        FormDomain::Symmetric => {
            let cols = d * (d + 1) / 2;
            let mut b = Mat::zeros(d * d, cols);
            let mut c = 0;
            let r = std::f64::consts::FRAC_1_SQRT_2;
            for j in 0..d {
                for i in j..d {
                    if i == j {
                        b[(i + j * d, c)] = 1.0;
                    } else {
                        b[(i + j * d, c)] = r;
                        b[(j + i * d, c)] = r;
                    }
                    c += 1;
                }
            }
            b
        }
    }
}

/// Minimum eigenvalue of `M, N ↦ n⁻¹ Σ ⟨X_i, M⟩⟨X_i, N⟩` on `domain`, with `X_i`
/// drawn from `design` (`n_mc = 0` uses the exact population form). The
/// minimum over a linear domain lower-bounds the minimum over its rank-≤2k
/// members.
pub fn restricted_eigenvalue_estimate(
    design: &Design,
    d: usize,
    n_mc: usize,
    seed: u64,
    domain: FormDomain,
) -> Result<f64> {
    if d > MAX_FORM_DIM {
        return Err(Error::Capability(format!(
            "restricted eigenvalue form needs d <= {MAX_FORM_DIM}, got d = {d}"
        )));
    }
    if d == 0 {
        return Err(Error::Argument("d must be positive".into()));
    }
    design.validate()?;
    let b = form_basis(d, domain);
    let form = if n_mc == 0 {
        b.transpose() * design.second_moment_matrix(d) * &b
    } else {
        let mut rng = stream_rng(seed, 0);
        let xs: Vec<Mat> = (0..n_mc).map(|_| design.sample(d, &mut rng)).collect();
        empirical_form(&xs, &b)
    };
    Ok(linalg::min_eigenvalue(&form))
}

/// Empirical form from explicit measurement matrices.
pub fn restricted_eigenvalue_of(xs: &[Mat], domain: FormDomain) -> Result<f64> {
    let d = xs.first().map(|x| x.nrows()).ok_or_else(|| Error::Argument("no measurements".into()))?;
    if d > MAX_FORM_DIM {
        return Err(Error::Capability(format!("form needs d <= {MAX_FORM_DIM}, got {d}")));
    }
    Ok(linalg::min_eigenvalue(&empirical_form(xs, &form_basis(d, domain))))
}

fn empirical_form(xs: &[Mat], b: &Mat) -> Mat {
    let p = b.ncols();
    let mut form = Mat::zeros(p, p);
    for x in xs {
        let v = b.tr_mul(&Vector::from_column_slice(x.as_slice()));
        form.ger(1.0, &v, &v, 1.0);
    }
    form / xs.len() as f64
}

/// Minimum eigenvalue of the restricted empirical Hessian at `θ*`; equals the
/// minimum eigenvalue of the quotient Hessian.
pub fn lambda_min_restricted(
    data: &Dataset,
    basis: &HorizontalBasis,
    loss: &dyn Loss,
) -> Result<f64> {
    Ok(linalg::min_eigenvalue(&restricted_hessian(data, &basis.anchor, basis, loss)?))
}

/// Minimum eigenvalue of the full Euclidean Hessian (≈ 0: vertical directions).
pub fn lambda_min_unrestricted(data: &Dataset, theta: &Mat, loss: &dyn Loss) -> Result<f64> {
    Ok(linalg::min_eigenvalue(&hessian_matrix(data, theta, loss)?))
}

// ---------------------------------------------------------------------------
// Taylor residual

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaylorResidual {
    pub distance: f64,
    /// `‖G⁰ + H⁰(φ⁰ − φ*)‖₂`.
    pub lhs: f64,
    /// `‖represent(∇L̄(θ⁰U)) − G⁰ − H⁰(φ⁰ − φ*)‖₂`, the second-order remainder,
    /// which equals `lhs` when `θ⁰` is a critical point.
    pub remainder: f64,
    /// `(K/2)·d²` when a certificate constant is supplied.
    pub rhs: Option<f64>,
    pub ratio: f64,
    pub remainder_ratio: f64,
}

/// First-order expansion of the restricted gradient around `θ* = basis.anchor`.
pub fn taylor_residual_check(
    data: &Dataset,
    theta0: &Mat,
    basis: &HorizontalBasis,
    loss: &dyn Loss,
    k_certificate: Option<f64>,
) -> Result<TaylorResidual> {
    let theta_star = basis.anchor.as_mat();
    let v = log_map(theta_star, theta0)?;
    let dist = v.norm();
    let g0 = restricted_score(data, theta_star, basis, loss)?;
    let h0 = restricted_hessian(data, theta_star, basis, loss)?;
    let linear = &g0 + &h0 * represent(&v, basis)?;
    let aligned = theta_star + &v;
    let at_theta0 = represent(&euclidean_gradient(data, &aligned, loss)?, basis)?;
    let lhs = linear.norm();
    let remainder = (at_theta0 - &linear).norm();
    let d2 = dist * dist;
    Ok(TaylorResidual {
        distance: dist,
        lhs,
        remainder,
        rhs: k_certificate.map(|k| 0.5 * k * d2),
        ratio: if d2 > 0.0 { lhs / d2 } else { f64::INFINITY },
        remainder_ratio: if d2 > 0.0 { remainder / d2 } else { f64::NAN },
    })
}

/// Remainders along `θ* + r·2^{−j}·w` for a horizontal unit `w`, with the
/// least-squares slope of log remainder against log distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaylorSweep {
    pub points: Vec<TaylorResidual>,
    pub slope: f64,
    pub intercept: f64,
}

pub fn taylor_sweep(
    data: &Dataset,
    basis: &HorizontalBasis,
    loss: &dyn Loss,
    r0: f64,
    levels: usize,
    seed: u64,
    k_certificate: Option<f64>,
) -> Result<TaylorSweep> {
    if levels < 2 || !(r0 > 0.0) {
        return Err(Error::Argument("sweep needs r0 > 0 and at least two levels".into()));
    }
    let theta_star = basis.anchor.as_mat();
    let mut rng = stream_rng(seed, 0);
    let raw = random_gaussian(theta_star.nrows(), theta_star.ncols(), &mut rng);
    let w = horizontal_project(theta_star, &raw)?;
    let w = &w / w.norm();
    let mut points = Vec::with_capacity(levels);
    for j in 0..levels {
        let r = r0 * 0.5f64.powi(j as i32);
        points.push(taylor_residual_check(data, &(theta_star + &w * r), basis, loss, k_certificate)?);
    }
    let xs: Vec<f64> = points.iter().map(|p| p.distance.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.remainder.ln()).collect();
    let (slope, intercept) = stats::ols(&xs, &ys);
    Ok(TaylorSweep { points, slope, intercept })
}

// ---------------------------------------------------------------------------
// Lipschitz probe

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LipschitzProbe {
    /// `max ‖P^H H_w v‖` over the probed unit pairs.
    pub value: f64,
    /// Largest of `‖(DP^H[w])H⁰v‖` and `‖H⁰(DP^H[w])v‖`.
    pub projection_term: f64,
    /// `(3/σ_k(θ))·‖H⁰‖_op`.
    pub projection_term_bound: f64,
    pub directions: usize,
    /// The loss does not declare a Lipschitz constant for its derivatives.
    pub loss_lipschitz_unknown: bool,
}

/// Central-difference step for `D_θ P^H`.
pub const PROJECTION_FD_STEP: f64 = 1e-5;

/// Random-direction lower estimate of the Lipschitz constant of the quotient
/// Hessian, `H_w = (DP^H[w])H⁰ + DH⁰[w] + H⁰(DP^H[w])`, lifted to `θ`.
pub fn hessian_lipschitz_probe(
    data: &Dataset,
    theta: &Mat,
    n_dirs: usize,
    loss: &dyn Loss,
    seed: u64,
) -> Result<LipschitzProbe> {
    let (d, k) = theta.shape();
    let h = PROJECTION_FD_STEP;
    let hess = hessian_matrix(data, theta, loss)?;
    let h_op = sym_eigen(&hess).0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let sigma_k = geometry::injectivity_radius(theta);
    let mut rng = stream_rng(seed, 0);
    let unit = |rng: &mut rand_chacha::ChaCha8Rng| {
        let z = random_gaussian(d, k, rng);
        &z / z.norm()
    };
    let (mut value, mut proj_term) = (0.0f64, 0.0f64);
    for _ in 0..n_dirs {
        let w = unit(&mut rng);
        let v = unit(&mut rng);
        let plus = theta + &w * h;
        let minus = theta - &w * h;
        let dp = |x: &Mat| -> Result<Mat> {
            Ok((horizontal_project(&plus, x)? - horizontal_project(&minus, x)?) / (2.0 * h))
        };
        let hv = hessian_operator(data, theta, &v, loss)?;
        let t1 = dp(&hv)?;
        let t3 = hessian_operator(data, theta, &dp(&v)?, loss)?;
        let t2 = third_derivative_operator(data, theta, &w, &v, loss)?;
        let total = horizontal_project(theta, &(&t1 + &t2 + &t3))?;
        value = value.max(total.norm());
        proj_term = proj_term.max(t1.norm()).max(t3.norm());
    }
    Ok(LipschitzProbe {
        value,
        projection_term: proj_term,
        projection_term_bound: 3.0 / sigma_k * h_op,
        directions: n_dirs,
        loss_lipschitz_unknown: loss.lipschitz().is_none(),
    })
}

// ---------------------------------------------------------------------------
// Assumption report

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub design_points: usize,
    pub responses_per_point: usize,
    /// `max_j |mean_j ℓ′| / se_j` against a Bonferroni normal quantile.
    pub score_mean_zero: CheckOutcome,
    /// Points whose responses were all identical (no variance information).
    pub score_points_skipped: usize,
    /// `min_j mean_j ℓ″` against zero, or the declared curvature floor.
    pub curvature_positive: CheckOutcome,
    /// `‖Cov(g) − E[h]‖_F / ‖E[h]‖_F` against 0.1.
    pub bartlett_second: CheckOutcome,
    /// `tr Cov(g) / tr E[h]`; 1 when the identity holds.
    pub bartlett_factor: f64,
    pub all_pass: bool,
}

/// Family-wise level of the score-mean test.
pub const SCORE_TEST_LEVEL: f64 = 1e-3;
pub const BARTLETT_TOLERANCE: f64 = 0.1;
pub const DESIGN_POINTS: usize = 64;

/// Monte Carlo check of the score-mean, curvature and score-covariance
/// assumptions at the truth of `dgp`, with `n_mc` draws split across
/// [`DESIGN_POINTS`] design points.
pub fn assumption_report(
    dgp: &DataGeneratingProcess,
    loss: &dyn Loss,
    n_mc: usize,
    stream: u64,
) -> Result<AssumptionReport> {
    let r = n_mc / DESIGN_POINTS;
    if r < 2 {
        return Err(Error::Argument(format!(
            "assumption report needs at least {} draws",
            2 * DESIGN_POINTS
        )));
    }
    dgp.design.validate()?;
    dgp.noise.validate()?;
    let theta = dgp.truth.as_mat();
    let basis = geometry::horizontal_basis(&dgp.truth)?;
    let m_star = dgp.truth.gram_outer();
    let d = dgp.d();
    let mut rng = dgp.rng(stream);

    let mut stats_max = 0.0f64;
    let mut skipped = 0;
    let mut min_curv = f64::INFINITY;
    let mut samples = Vec::with_capacity(DESIGN_POINTS * r);
    for _ in 0..DESIGN_POINTS {
        let x = dgp.design.sample(d, &mut rng);
        let z = frob(&x, &m_star);
        let ys: Vec<f64> = (0..r).map(|_| dgp.noise.sample(z, &mut rng)).collect();
        for &y in &ys {
            loss.check_response(y)?;
        }
        let scores: Vec<f64> = ys.iter().map(|&y| loss.d1(z, y)).collect();
        let sd = stats::variance(&scores).sqrt();
        if sd > 0.0 {
            stats_max = stats_max.max(stats::mean(&scores).abs() / (sd / (r as f64).sqrt()));
        } else {
            skipped += 1;
        }
        min_curv = min_curv.min(ys.iter().map(|&y| loss.d2(z, y)).sum::<f64>() / r as f64);
        samples.extend(ys.into_iter().map(|y| crate::model::Sample { x: x.clone(), y }));
    }
    let tested = DESIGN_POINTS - skipped;
    let q = stats::normal_quantile(1.0 - SCORE_TEST_LEVEL / (2.0 * tested.max(1) as f64));
    let score_mean_zero = CheckOutcome { statistic: stats_max, threshold: q, pass: stats_max <= q };

    let floor = loss.curvature_floor().unwrap_or(0.0);
    let curvature_positive = CheckOutcome {
        statistic: min_curv,
        threshold: floor,
        pass: min_curv > 0.0 && min_curv >= floor * (1.0 - 1e-12),
    };

    let data = Dataset::new(d, dgp.k(), samples)?;
    let g = per_sample_scores(&data, theta, &basis, loss)?;
    let cov = stats::sample_covariance(&g);
    // ℓ″·a aᵀ only: the ℓ′ term has mean zero at the truth.
    let e = expected_hessian_at_truth(&data, theta, &basis, loss);
    let gap = (&cov - &e).norm() / e.norm();
    let factor = cov.trace() / e.trace();
    let bartlett_second = CheckOutcome { statistic: gap, threshold: BARTLETT_TOLERANCE, pass: gap <= BARTLETT_TOLERANCE };
    Ok(AssumptionReport {
        design_points: DESIGN_POINTS,
        responses_per_point: r,
        all_pass: score_mean_zero.pass && curvature_positive.pass && bartlett_second.pass,
        score_mean_zero,
        score_points_skipped: skipped,
        curvature_positive,
        bartlett_second,
        bartlett_factor: factor,
    })
}

/// `n⁻¹ Σ ℓ″(z*_i, y_i)·a_i a_iᵀ` with `a_i = represent((X_i + X_iᵀ)θ*)`.
fn expected_hessian_at_truth(
    data: &Dataset,
    theta: &Mat,
    basis: &HorizontalBasis,
    loss: &dyn Loss,
) -> Mat {
    let p = basis.dim();
    let m = theta * theta.transpose();
    let mut h = Mat::zeros(p, p);
    for s in &data.samples {
        let z = frob(&s.x, &m);
        let xt = &s.x * theta + s.x.transpose() * theta;
        let a = Vector::from_iterator(p, basis.elements.iter().map(|e| e.dot(&xt)));
        h.ger(loss.d2(z, s.y), &a, &a, 1.0);
    }
    h / data.n() as f64
}

/// Uniform unit direction in `R^{d×k}`.
pub fn random_unit<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Mat {
    let z = random_gaussian(d, k, rng);
    &z / z.norm()
}
