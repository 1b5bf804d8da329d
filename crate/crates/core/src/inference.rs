//! Coordinates in a horizontal basis, restricted scores and Hessians, and the
//! Gaussian limit `√n(φ⁰ − φ*) → N(0, H*⁻¹)` turned into Wald intervals.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::{self, log_map, rotate_basis, HorizontalBasis};
use crate::linalg::{self, sym_eigen, Mat, Vector};
use crate::model::{
    population_hessian, DataGeneratingProcess, Dataset, Loss, PopulationHessian, Sample,
};
use crate::stats;

fn check_element_shape(m: &Mat, basis: &HorizontalBasis) -> Result<()> {
    if m.shape() != basis.anchor.shape() {
        return Err(Error::Dimension(format!(
            "matrix is {:?}, basis elements are {:?}",
            m.shape(),
            basis.anchor.shape()
        )));
    }
    Ok(())
}

/// `(⟨M, e_i⟩)_i`.
pub fn represent(m: &Mat, basis: &HorizontalBasis) -> Result<Vector> {
    check_element_shape(m, basis)?;
    Ok(Vector::from_iterator(basis.dim(), basis.elements.iter().map(|e| e.dot(m))))
}

/// `Σ_i c_i e_i`.
pub fn reconstruct(coords: &Vector, basis: &HorizontalBasis) -> Result<Mat> {
    if coords.len() != basis.dim() {
        return Err(Error::Dimension(format!(
            "{} coordinates for a basis of size {}",
            coords.len(),
            basis.dim()
        )));
    }
    let mut out = Mat::zeros(basis.anchor.nrows(), basis.anchor.ncols());
    for (c, e) in coords.iter().zip(&basis.elements) {
        linalg::add_scaled(&mut out, *c, e);
    }
    Ok(out)
}

/// Basis elements stacked as the columns of a `dk×d′` matrix.
fn basis_matrix(basis: &HorizontalBasis) -> Mat {
    let (d, k) = basis.anchor.shape();
    let mut e = Mat::zeros(d * k, basis.dim());
    for (j, el) in basis.elements.iter().enumerate() {
        e.column_mut(j).copy_from_slice(el.as_slice());
    }
    e
}

/// `G = represent(∇L̄(θ))`.
pub fn restricted_score(
    data: &Dataset,
    theta: &Mat,
    basis: &HorizontalBasis,
    loss: &dyn Loss,
) -> Result<Vector> {
    represent(&crate::model::euclidean_gradient(data, theta, loss)?, basis)
}

/// Per-sample restricted scores `g_i = ℓ′(z_i, y_i)·represent((X_i + X_iᵀ)θ)`.
pub fn per_sample_scores(
    data: &Dataset,
    theta: &Mat,
    basis: &HorizontalBasis,
    loss: &dyn Loss,
) -> Result<Vec<Vector>> {
    check_element_shape(theta, basis)?;
    let e = basis_matrix(basis);
    let m = theta * theta.transpose();
    Ok(data
        .samples
        .iter()
        .map(|s| {
            let grad = (&s.x * theta + s.x.transpose() * theta) * loss.d1(s.x.dot(&m), s.y);
            e.tr_mul(&Vector::from_column_slice(grad.as_slice()))
        })
        .collect())
}

/// `H_ij = D²L̄(θ)[e_i, e_j]`.
pub fn restricted_hessian(
    data: &Dataset,
    theta: &Mat,
    basis: &HorizontalBasis,
    loss: &dyn Loss,
) -> Result<Mat> {
    check_element_shape(theta, basis)?;
    if data.d != theta.nrows() {
        return Err(Error::Dimension(format!("dataset has d={}, factor has d={}", data.d, theta.nrows())));
    }
    let e = basis_matrix(basis);
    let p = basis.dim();
    let m = theta * theta.transpose();
    let mut h = Mat::zeros(p, p);
    let mut s = Mat::zeros(data.d, data.d);
    for smp in &data.samples {
        let z = smp.x.dot(&m);
        let xt = &smp.x * theta + smp.x.transpose() * theta;
        let a = e.tr_mul(&Vector::from_column_slice(xt.as_slice()));
        h.ger(loss.d2(z, smp.y), &a, &a, 1.0);
        linalg::add_scaled(&mut s, loss.d1(z, smp.y), &smp.x);
    }
    let st = &s + s.transpose();
    for j in 0..p {
        let se = &st * &basis.elements[j];
        for i in 0..p {
            h[(i, j)] += se.dot(&basis.elements[i]);
        }
    }
    h /= data.n() as f64;
    Ok((&h + h.transpose()) * 0.5)
}

/// Population restricted Hessian `H*` at the truth of `dgp` in `basis`.
pub fn population_restricted_hessian(
    dgp: &DataGeneratingProcess,
    basis: &HorizontalBasis,
    loss: &dyn Loss,
    mc_budget: Option<usize>,
) -> Result<PopulationHessian> {
    let mut h = population_hessian(dgp, &basis.elements, loss, mc_budget)?;
    h.matrix = (&h.matrix + h.matrix.transpose()) * 0.5;
    Ok(h)
}

/// `H⁻¹` and companions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceEstimate {
    #[serde(with = "linalg::rows")]
    pub inverse_hessian: Mat,
    /// `H⁻¹·Cov(g)·H⁻¹`, robust to a failed second Bartlett identity.
    #[serde(with = "linalg::rows_opt")]
    pub sandwich: Option<Mat>,
    pub condition_number: f64,
    pub min_eigenvalue: f64,
}

/// Eigenvalue below which a restricted Hessian is treated as singular.
pub const SINGULAR_FLOOR: f64 = 1e-10;

fn check_spd(h: &Mat) -> Result<(Vector, Mat)> {
    if !h.is_square() {
        return Err(Error::Dimension(format!("Hessian is {:?}", h.shape())));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("Hessian has non-finite entries".into()));
    }
    let asym = (h - h.transpose()).amax();
    if asym > 1e-10 * (1.0 + h.amax()) {
        return Err(Error::Argument(format!("Hessian is not symmetric (defect {asym:e})")));
    }
    let (values, vectors) = sym_eigen(h);
    if values.is_empty() || values[0] <= SINGULAR_FLOOR {
        return Err(Error::Degenerate(format!(
            "restricted Hessian is singular (min eigenvalue {:e}); \
             a vertical direction in the basis makes the Hessian non-invertible",
            values.get(0).copied().unwrap_or(f64::NAN)
        )));
    }
    Ok((values, vectors))
}

pub fn asymptotic_covariance(h: &Mat) -> Result<CovarianceEstimate> {
    let (values, vectors) = check_spd(h)?;
    let inv = &vectors * Mat::from_diagonal(&values.map(|v| 1.0 / v)) * vectors.transpose();
    let inv = (&inv + inv.transpose()) * 0.5;
    let p = h.nrows();
    let residual = (h * &inv - Mat::identity(p, p)).norm();
    if residual > 1e-8 {
        return Err(Error::Degenerate(format!("inverse residual {residual:e} exceeds 1e-8")));
    }
    Ok(CovarianceEstimate {
        inverse_hessian: inv,
        sandwich: None,
        condition_number: values[p - 1] / values[0],
        min_eigenvalue: values[0],
    })
}

/// Adds the sandwich `H⁻¹·Cov(g)·H⁻¹` from per-sample scores.
pub fn with_sandwich(mut cov: CovarianceEstimate, scores: &[Vector]) -> CovarianceEstimate {
    let c = stats::sample_covariance(scores);
    let s = &cov.inverse_hessian * c * &cov.inverse_hessian;
    cov.sandwich = Some((&s + s.transpose()) * 0.5);
    cov
}

/// `z = √n·H^{1/2}(φ⁰ − φ*)`.
pub fn standardize(phi0: &Vector, phi_star: &Vector, h: &Mat, n: usize) -> Result<Vector> {
    if phi0.len() != h.nrows() || phi_star.len() != h.nrows() {
        return Err(Error::Dimension("coordinate and Hessian sizes differ".into()));
    }
    let (values, vectors) = check_spd(h)?;
    let root = &vectors * Mat::from_diagonal(&values.map(f64::sqrt)) * vectors.transpose();
    Ok(root * (phi0 - phi_star) * (n as f64).sqrt())
}

/// Per-coordinate Wald intervals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceReport {
    pub alpha: f64,
    pub n: usize,
    #[serde(with = "linalg::vector")]
    pub estimate: Vector,
    #[serde(with = "linalg::vector")]
    pub half_width: Vector,
    #[serde(with = "linalg::vector")]
    pub lower: Vector,
    #[serde(with = "linalg::vector")]
    pub upper: Vector,
    /// Standardized residual, when the target is known.
    pub z: Option<Vec<f64>>,
    /// Whether each interval contains the target, when it is known.
    pub covered: Option<Vec<bool>>,
}

/// `φ⁰_i ± z_{1−α/2}·√((H⁻¹)_ii / n)`.
pub fn wald_intervals(
    phi0: &Vector,
    h: &Mat,
    n: usize,
    alpha: f64,
    phi_star: Option<&Vector>,
) -> Result<ConfidenceReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Argument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if n == 0 {
        return Err(Error::Argument("n must be positive".into()));
    }
    let cov = asymptotic_covariance(h)?;
    let q = stats::normal_quantile(1.0 - alpha / 2.0);
    let half = Vector::from_fn(phi0.len(), |i, _| q * (cov.inverse_hessian[(i, i)] / n as f64).sqrt());
    let lower = phi0 - &half;
    let upper = phi0 + &half;
    let (z, covered) = match phi_star {
        Some(target) => {
            let z = standardize(phi0, target, h, n)?;
            let hits = (0..phi0.len())
                .map(|i| lower[i] <= target[i] && target[i] <= upper[i])
                .collect();
            (Some(z.iter().copied().collect()), Some(hits))
        }
        None => (None, None),
    };
    Ok(ConfidenceReport {
        alpha,
        n,
        estimate: phi0.clone(),
        half_width: half,
        lower,
        upper,
        z,
        covered,
    })
}

fn serialize_basis_ref<S: Serializer>(b: &HorizontalBasis, s: S) -> Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct BasisRef<'a> {
        anchor_hash: String,
        construction: &'a geometry::BasisConstruction,
        dim: usize,
    }
    BasisRef { anchor_hash: b.anchor_hash(), construction: &b.construction, dim: b.dim() }.serialize(s)
}

/// Everything expressed in one horizontal basis at the truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestrictedRepresentation {
    #[serde(serialize_with = "serialize_basis_ref")]
    pub basis: HorizontalBasis,
    #[serde(with = "linalg::vector")]
    pub phi_star: Vector,
    #[serde(with = "linalg::vector")]
    pub phi0: Vector,
    #[serde(with = "linalg::vector")]
    pub g0: Vector,
    #[serde(with = "linalg::rows")]
    pub h0: Mat,
    #[serde(with = "linalg::rows")]
    pub h_star: Mat,
}

/// Builds φ*, φ⁰ (aligned first: `represent(log_map(θ*, θ⁰)) + φ*`), G⁰ and H⁰
/// at `θ* = basis.anchor`.
pub fn build_representation(
    data: &Dataset,
    theta0: &Mat,
    basis: &HorizontalBasis,
    loss: &dyn Loss,
    h_star: Mat,
) -> Result<RestrictedRepresentation> {
    let theta_star = basis.anchor.as_mat();
    let phi_star = represent(theta_star, basis)?;
    let phi0 = represent(&log_map(theta_star, theta0)?, basis)? + &phi_star;
    Ok(RestrictedRepresentation {
        g0: restricted_score(data, theta_star, basis, loss)?,
        h0: restricted_hessian(data, theta_star, basis, loss)?,
        basis: basis.clone(),
        phi_star,
        phi0,
        h_star,
    })
}

/// Largest discrepancies between objects computed in `{e_i}` at `θ*` and in
/// `{e_iU}` at `θ*U`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub phi0: f64,
    pub phi_star: f64,
    pub g0: f64,
    pub h0: f64,
    pub h_star: f64,
    pub max: f64,
}

struct SampleObjects {
    phi0: Vector,
    phi_star: Vector,
    g0: Vector,
    h0: Mat,
    h_star: Mat,
}

fn sample_objects(
    basis: &HorizontalBasis,
    theta0: &Mat,
    sample: &Sample,
    loss: &dyn Loss,
) -> Result<SampleObjects> {
    let theta = basis.anchor.as_mat();
    let one = Dataset::new(theta.nrows(), theta.ncols(), vec![sample.clone()])?;
    let e = basis_matrix(basis);
    let z = sample.x.dot(&(theta * theta.transpose()));
    let xt = &sample.x * theta + sample.x.transpose() * theta;
    let a = e.tr_mul(&Vector::from_column_slice(xt.as_slice()));
    Ok(SampleObjects {
        phi0: represent(theta0, basis)?,
        phi_star: represent(theta, basis)?,
        g0: restricted_score(&one, theta, basis, loss)?,
        h0: restricted_hessian(&one, theta, basis, loss)?,
        // Expected-Hessian contribution: the ℓ′ term averages out at the truth.
        h_star: &a * a.transpose() * loss.d2(z, sample.y),
    })
}

/// Compares φ⁰, φ*, g⁰, h⁰, h* in `{e_i}` at `θ*` (applied to `θ⁰`) against
/// the same objects in `{e_iU}` at `θ*U` (applied to `θ⁰U`).
pub fn invariance_audit(
    basis: &HorizontalBasis,
    theta0: &Mat,
    u: &Mat,
    sample: &Sample,
    loss: &dyn Loss,
) -> Result<InvarianceReport> {
    let rotated = rotate_basis(basis, u)?;
    let a = sample_objects(basis, theta0, sample, loss)?;
    let b = sample_objects(&rotated, &(theta0 * u), sample, loss)?;
    let phi0 = (&a.phi0 - &b.phi0).amax();
    let phi_star = (&a.phi_star - &b.phi_star).amax();
    let g0 = (&a.g0 - &b.g0).amax();
    let h0 = (&a.h0 - &b.h0).amax();
    let h_star = (&a.h_star - &b.h_star).amax();
    Ok(InvarianceReport {
        phi0,
        phi_star,
        g0,
        h0,
        h_star,
        max: phi0.max(phi_star).max(g0).max(h0).max(h_star),
    })
}
