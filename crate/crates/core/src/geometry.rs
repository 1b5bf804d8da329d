//! Geometry of the quotient `R^{d×k}_* / O(k)`.
//!
//! The vertical space at `θ` is `{θA : A skew}`; the horizontal space is its
//! Frobenius-orthogonal complement. Vertical projection solves the Sylvester
//! equation `MA + AM = θᵀZ − Zᵀθ` with `M = θᵀθ` in the eigenbasis of `M`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::linalg::{self, frob, sym_eigen, Mat};
use crate::model::FactorPoint;

/// Orthonormal basis of the `k×k` skew-symmetric matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewBasis {
    pub k: usize,
    pub elements: Vec<Mat>,
}

/// `(E_ij − E_ji)/√2` for `i < j`, lexicographic.
pub fn skew_basis(k: usize) -> Result<SkewBasis> {
    if k == 0 {
        return Err(Error::Argument("skew basis needs k >= 1".into()));
    }
    let mut elements = Vec::with_capacity(k * (k - 1) / 2);
    let c = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..k {
        for j in i + 1..k {
            let mut a = Mat::zeros(k, k);
            a[(i, j)] = c;
            a[(j, i)] = -c;
            elements.push(a);
        }
    }
    Ok(SkewBasis { k, elements })
}

/// `dk − k(k−1)/2`.
pub fn horizontal_dim(d: usize, k: usize) -> usize {
    d * k - k * (k - 1) / 2
}

fn check_rank(theta: &Mat) -> Result<()> {
    let s = linalg::singular_values(theta);
    let (first, last) = (s[0], s[s.len() - 1]);
    if first == 0.0 || last <= FactorPoint::RANK_TOL * first {
        return Err(Error::Degenerate(format!(
            "rank-deficient factor: sigma_k = {last:e}, sigma_1 = {first:e}"
        )));
    }
    Ok(())
}

fn check_shape(theta: &Mat, z: &Mat) -> Result<()> {
    if theta.shape() != z.shape() {
        return Err(Error::Dimension(format!(
            "direction is {:?}, factor is {:?}",
            z.shape(),
            theta.shape()
        )));
    }
    Ok(())
}

/// Skew `A` with `θA` the orthogonal projection of `Z` onto the vertical space.
pub fn vertical_generator(theta: &Mat, z: &Mat) -> Result<Mat> {
    check_shape(theta, z)?;
    check_rank(theta)?;
    let k = theta.ncols();
    let tz = theta.transpose() * z;
    let s = &tz - tz.transpose();
    let (lambda, q) = sym_eigen(&(theta.transpose() * theta));
    let s_tilde = q.transpose() * s * &q;
    let a_tilde = Mat::from_fn(k, k, |i, j| s_tilde[(i, j)] / (lambda[i] + lambda[j]));
    let a = &q * a_tilde * q.transpose();
    // Exact skew-symmetry regardless of rounding in the back-transform.
    Ok((&a - a.transpose()) * 0.5)
}

pub fn vertical_project(theta: &Mat, z: &Mat) -> Result<Mat> {
    Ok(theta * vertical_generator(theta, z)?)
}

pub fn horizontal_project(theta: &Mat, z: &Mat) -> Result<Mat> {
    Ok(z - vertical_project(theta, z)?)
}

/// How the elements of a [`HorizontalBasis`] were produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisConstruction {
    /// Horizontally projected unit matrices, Gram–Schmidt in row-major order.
    Lexicographic,
    /// Eigenvectors of the horizontal projector, sign-normalized.
    Spectral,
}

/// Orthonormal basis `e_1..e_{d′}` of the horizontal space at `anchor`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizontalBasis {
    pub anchor: FactorPoint,
    #[serde(with = "linalg::rows_vec")]
    pub elements: Vec<Mat>,
    pub construction: BasisConstruction,
}

impl HorizontalBasis {
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// SHA-256 of the anchor entries (row-major, little-endian f64).
    pub fn anchor_hash(&self) -> String {
        anchor_hash(self.anchor.as_mat())
    }

    /// Largest deviation of the element Gram matrix from the identity.
    pub fn orthonormality_defect(&self) -> f64 {
        let p = self.dim();
        let mut worst = 0.0f64;
        for i in 0..p {
            for j in 0..=i {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((frob(&self.elements[i], &self.elements[j]) - target).abs());
            }
        }
        worst
    }

    /// Largest `|⟨e_i, θA⟩|` over elements and skew basis directions.
    pub fn verticality_defect(&self) -> Result<f64> {
        let skew = skew_basis(self.anchor.k())?;
        let mut worst = 0.0f64;
        for a in &skew.elements {
            let v = self.anchor.as_mat() * a;
            for e in &self.elements {
                worst = worst.max(frob(e, &v).abs());
            }
        }
        Ok(worst)
    }
}

pub fn anchor_hash(theta: &Mat) -> String {
    let mut h = Sha256::new();
    h.update((theta.nrows() as u64).to_le_bytes());
    h.update((theta.ncols() as u64).to_le_bytes());
    for i in 0..theta.nrows() {
        for j in 0..theta.ncols() {
            h.update(theta[(i, j)].to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

const GRAM_SCHMIDT_DROP: f64 = 1e-8;

/// Deterministic horizontal basis: project `E_jh` (row `j`, column `h`, in
/// lexicographic order) and orthonormalize, dropping residuals below 1e-8.
pub fn horizontal_basis(theta: &FactorPoint) -> Result<HorizontalBasis> {
    let (d, k) = theta.shape();
    let target = horizontal_dim(d, k);
    let mut elements: Vec<Mat> = Vec::with_capacity(target);
    for j in 0..d {
        for h in 0..k {
            if elements.len() == target {
                break;
            }
            let mut unit = Mat::zeros(d, k);
            unit[(j, h)] = 1.0;
            let mut v = horizontal_project(theta, &unit)?;
            // Two passes of classical Gram–Schmidt keep the Gram matrix at
            // machine precision.
            for _ in 0..2 {
                for e in &elements {
                    let c = frob(e, &v);
                    linalg::add_scaled(&mut v, -c, e);
                }
            }
            let norm = v.norm();
            if norm > GRAM_SCHMIDT_DROP {
                elements.push(v / norm);
            }
        }
    }
    if elements.len() < target {
        return Err(Error::Degenerate(format!(
            "horizontal basis has {} elements, expected {target}",
            elements.len()
        )));
    }
    Ok(HorizontalBasis {
        anchor: theta.clone(),
        elements,
        construction: BasisConstruction::Lexicographic,
    })
}

/// Matrix of the horizontal projector in column-major `vec` coordinates.
pub fn horizontal_projector_matrix(theta: &Mat) -> Result<Mat> {
    let (d, k) = theta.shape();
    let dk = d * k;
    let mut p = Mat::zeros(dk, dk);
    for c in 0..dk {
        let mut unit = Mat::zeros(d, k);
        unit.as_mut_slice()[c] = 1.0;
        let col = horizontal_project(theta, &unit)?;
        p.column_mut(c).copy_from_slice(col.as_slice());
    }
    Ok(p)
}

/// Alternative basis: unit eigenvectors of the horizontal projector, ordered
/// by eigenvalue and signed so the largest-magnitude entry is positive.
pub fn horizontal_basis_spectral(theta: &FactorPoint) -> Result<HorizontalBasis> {
    let (d, k) = theta.shape();
    let target = horizontal_dim(d, k);
    let (values, vectors) = sym_eigen(&horizontal_projector_matrix(theta)?);
    let dk = d * k;
    let mut elements = Vec::with_capacity(target);
    for c in (dk - target)..dk {
        if values[c] < 0.5 {
            return Err(Error::Degenerate(format!(
                "horizontal projector has eigenvalue {} where 1 was expected",
                values[c]
            )));
        }
        let mut col: Vec<f64> = vectors.column(c).iter().copied().collect();
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if pivot < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
        elements.push(Mat::from_column_slice(d, k, &col));
    }
    Ok(HorizontalBasis {
        anchor: theta.clone(),
        elements,
        construction: BasisConstruction::Spectral,
    })
}

/// `{e_iU}` anchored at `θU`.
pub fn rotate_basis(basis: &HorizontalBasis, u: &Mat) -> Result<HorizontalBasis> {
    let k = basis.anchor.k();
    if u.shape() != (k, k) {
        return Err(Error::Dimension(format!("rotation is {:?}, need {k}x{k}", u.shape())));
    }
    let defect = linalg::orthogonality_defect(u);
    if defect > 1e-10 {
        return Err(Error::Argument(format!("U is not orthogonal (defect {defect:e})")));
    }
    Ok(HorizontalBasis {
        anchor: basis.anchor.rotate(u)?,
        elements: basis.elements.iter().map(|e| e * u).collect(),
        construction: basis.construction,
    })
}

/// Orthogonal Procrustes solution `argmin_{U ∈ O(k)} ‖θ_a U − θ_b‖_F`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentResult {
    #[serde(with = "linalg::rows")]
    pub u: Mat,
    pub distance: f64,
    /// `θ_a U`.
    #[serde(with = "linalg::rows")]
    pub aligned: Mat,
    /// `θ_aᵀθ_b` is rank deficient, so `U` is not unique.
    pub degenerate: bool,
}

pub fn align(theta_a: &Mat, theta_b: &Mat) -> Result<AlignmentResult> {
    if theta_a.shape() != theta_b.shape() {
        return Err(Error::Dimension(format!(
            "cannot align {:?} with {:?}",
            theta_a.shape(),
            theta_b.shape()
        )));
    }
    let cross = theta_a.transpose() * theta_b;
    let svd = cross.svd(true, true);
    let p = svd.u.expect("requested U");
    let qt = svd.v_t.expect("requested Vᵀ");
    let s = &svd.singular_values;
    let s_max = s.iter().copied().fold(0.0, f64::max);
    let s_min = s.iter().copied().fold(f64::INFINITY, f64::min);
    let u = p * qt;
    let aligned = theta_a * &u;
    Ok(AlignmentResult {
        distance: (&aligned - theta_b).norm(),
        aligned,
        u,
        degenerate: s_max == 0.0 || s_min <= FactorPoint::RANK_TOL * s_max,
    })
}

pub fn quotient_distance(theta_a: &Mat, theta_b: &Mat) -> Result<f64> {
    Ok(align(theta_a, theta_b)?.distance)
}

/// `σ_k(θ)`.
pub fn injectivity_radius(theta: &Mat) -> f64 {
    linalg::smallest_singular_value(theta)
}

/// Aligned chord `θ0·U − θ*`, `U = align(θ0, θ*).u`.
pub fn log_map(theta_star: &Mat, theta0: &Mat) -> Result<Mat> {
    let al = align(theta0, theta_star)?;
    let radius = injectivity_radius(theta_star);
    if !(al.distance < radius) {
        return Err(Error::OutOfInjectivity { distance: al.distance, radius });
    }
    Ok(al.aligned - theta_star)
}

/// Horizontal part of [`log_map`] at `θ*`.
pub fn log_map_projected(theta_star: &Mat, theta0: &Mat) -> Result<Mat> {
    horizontal_project(theta_star, &log_map(theta_star, theta0)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_gaussian, random_orthogonal, Vector};
    use crate::model::stream_rng;
    use proptest::prelude::*;

    fn point(d: usize, k: usize, seed: u64) -> FactorPoint {
        let mut rng = stream_rng(seed, 0);
        FactorPoint::new(random_gaussian(d, k, &mut rng)).unwrap()
    }

    #[test]
    fn skew_basis_examples() {
        assert!(skew_basis(1).unwrap().elements.is_empty());
        let b2 = skew_basis(2).unwrap();
        let c = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(b2.elements, vec![Mat::from_row_slice(2, 2, &[0.0, c, -c, 0.0])]);
        let b4 = skew_basis(4).unwrap();
        assert_eq!(b4.elements.len(), 6);
        for (i, a) in b4.elements.iter().enumerate() {
            assert!((a + a.transpose()).amax() < 1e-14);
            for (j, b) in b4.elements.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((frob(a, b) - target).abs() < 1e-12);
            }
        }
        assert!(skew_basis(0).is_err());
    }

    #[test]
    fn vertical_projection_examples() {
        let t1 = point(4, 1, 1);
        let z = random_gaussian(4, 1, &mut stream_rng(2, 0));
        assert_eq!(vertical_project(&t1, &z).unwrap().amax(), 0.0);
        assert_eq!(horizontal_project(&t1, &z).unwrap(), z);

        let t = point(5, 3, 3);
        let a0 = {
            let g = random_gaussian(3, 3, &mut stream_rng(4, 0));
            &g - g.transpose()
        };
        let z = &*t * &a0;
        assert!((vertical_project(&t, &z).unwrap() - &z).amax() < 1e-10);
        assert!(horizontal_project(&t, &z).unwrap().amax() < 1e-10);

        let degenerate = Mat::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        assert!(matches!(
            vertical_project(&degenerate, &Mat::zeros(3, 2)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn vertical_projection_matches_least_squares() {
        let t = point(5, 3, 7);
        let z = random_gaussian(5, 3, &mut stream_rng(8, 0));
        let skew = skew_basis(3).unwrap();
        let cols: Vec<Mat> = skew.elements.iter().map(|a| &*t * a).collect();
        let m = cols.len();
        let gram = Mat::from_fn(m, m, |i, j| frob(&cols[i], &cols[j]));
        let rhs = Vector::from_iterator(m, cols.iter().map(|c| frob(c, &z)));
        let coef = gram.cholesky().unwrap().solve(&rhs);
        let mut fit = Mat::zeros(5, 3);
        for (c, col) in coef.iter().zip(&cols) {
            fit += col * *c;
        }
        assert!((vertical_project(&t, &z).unwrap() - fit).amax() < 1e-8);
    }

    #[test]
    fn horizontal_basis_examples() {
        let t = FactorPoint::new(Mat::from_column_slice(2, 1, &[0.3, -1.2])).unwrap();
        let b = horizontal_basis(&t).unwrap();
        assert_eq!(
            b.elements,
            vec![Mat::from_column_slice(2, 1, &[1.0, 0.0]), Mat::from_column_slice(2, 1, &[0.0, 1.0])]
        );
        assert_eq!(horizontal_basis(&point(3, 2, 1)).unwrap().dim(), 5);

        let b = horizontal_basis(&point(6, 3, 2)).unwrap();
        assert_eq!(b.dim(), 15);
        assert!(b.orthonormality_defect() < 1e-10);
        assert!(b.verticality_defect().unwrap() < 1e-10);
        assert_eq!(b, horizontal_basis(&b.anchor).unwrap());
    }

    #[test]
    fn spectral_basis_spans_the_same_space() {
        let t = point(5, 3, 9);
        let a = horizontal_basis(&t).unwrap();
        let b = horizontal_basis_spectral(&t).unwrap();
        assert_eq!(b.dim(), a.dim());
        assert!(b.orthonormality_defect() < 1e-10);
        assert!(b.verticality_defect().unwrap() < 1e-10);
        // Change of basis between the two is orthogonal.
        let c = Mat::from_fn(a.dim(), b.dim(), |i, j| frob(&a.elements[i], &b.elements[j]));
        assert!(linalg::orthogonality_defect(&c) < 1e-10);
    }

    #[test]
    fn rotate_basis_examples() {
        let b = horizontal_basis(&point(4, 2, 5)).unwrap();
        assert_eq!(rotate_basis(&b, &Mat::identity(2, 2)).unwrap(), b);

        let b1 = horizontal_basis(&point(3, 1, 5)).unwrap();
        let neg = rotate_basis(&b1, &Mat::from_element(1, 1, -1.0)).unwrap();
        assert_eq!(*neg.anchor, -&*b1.anchor);
        for (e, f) in b1.elements.iter().zip(&neg.elements) {
            assert_eq!(f, &-e);
        }

        let u = random_orthogonal(2, &mut stream_rng(6, 0));
        let r = rotate_basis(&b, &u).unwrap();
        for e in &r.elements {
            assert!((horizontal_project(&r.anchor, e).unwrap() - e).amax() < 1e-10);
        }
        assert!(rotate_basis(&b, &(Mat::identity(2, 2) * 1.1)).is_err());
    }

    #[test]
    fn alignment_examples() {
        let t = point(4, 2, 11);
        let same = align(&t, &t).unwrap();
        assert!((&same.u - Mat::identity(2, 2)).amax() < 1e-12);
        assert!(same.distance < 1e-12);

        let u0 = random_orthogonal(2, &mut stream_rng(12, 0));
        let rotated = &*t * &u0;
        let al = align(&t, &rotated).unwrap();
        assert!(al.distance < 1e-10);
        assert!(!al.degenerate);
        assert!(linalg::orthogonality_defect(&al.u) < 1e-12);
    }

    #[test]
    fn alignment_matches_angle_grid() {
        let a = point(4, 2, 21);
        let b = point(4, 2, 22);
        let al = align(&a, &b).unwrap();
        let mut best = f64::INFINITY;
        let steps = (2.0 * std::f64::consts::PI / 1e-3).ceil() as usize;
        for i in 0..steps {
            let phi = i as f64 * 1e-3;
            let (s, c) = phi.sin_cos();
            for u in [
                Mat::from_row_slice(2, 2, &[c, -s, s, c]),
                Mat::from_row_slice(2, 2, &[c, s, s, -c]),
            ] {
                best = best.min((&*a * u - &*b).norm());
            }
        }
        // Grid spacing 1e-3 leaves an O(1e-6) gap above the true minimum.
        assert!(al.distance <= best + 1e-12);
        assert!(best - al.distance < 1e-5);
    }

    #[test]
    fn procrustes_beats_random_rotations() {
        let a = point(5, 3, 31);
        let b = point(5, 3, 32);
        let al = align(&a, &b).unwrap();
        let mut rng = stream_rng(33, 0);
        for _ in 0..200 {
            let u = random_orthogonal(3, &mut rng);
            assert!((&*a * u - &*b).norm() >= al.distance - 1e-10);
        }
    }

    #[test]
    fn degenerate_cross_product_is_flagged() {
        let a = Mat::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let b = Mat::from_column_slice(3, 1, &[0.0, 1.0, 0.0]);
        let al = align(&a, &b).unwrap();
        assert!(al.degenerate);
        assert!((al.distance - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn log_map_examples() {
        let t = point(4, 2, 41);
        let u0 = random_orthogonal(2, &mut stream_rng(42, 0));
        assert!(log_map(&t, &(&*t * &u0)).unwrap().amax() < 1e-12);

        // k = 1: the chord is taken against the sign that matches θ*.
        let ts = Mat::from_column_slice(3, 1, &[1.0, 2.0, -1.0]);
        let delta = Mat::from_column_slice(3, 1, &[0.05, -0.02, 0.01]);
        let t0 = -&ts + &delta;
        let sign = (t0.transpose() * &ts)[0].signum();
        let expect = &t0 * sign - &ts;
        assert!((log_map(&ts, &t0).unwrap() - expect).amax() < 1e-14);

        let other = point(4, 2, 43);
        let far = &*other * 10.0;
        assert!(matches!(log_map(&t, &far), Err(Error::OutOfInjectivity { .. })));

        let near = &*t + random_gaussian(4, 2, &mut stream_rng(44, 0)) * 0.01;
        let v = log_map(&t, &near).unwrap();
        assert!((v.norm() - quotient_distance(&t, &near).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn injectivity_radius_examples() {
        let t = Mat::from_column_slice(3, 2, &[2.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert!((injectivity_radius(&t) - 1.0).abs() < 1e-14);
        let v = Mat::from_column_slice(3, 1, &[3.0, 4.0, 0.0]);
        assert!((injectivity_radius(&v) - 5.0).abs() < 1e-14);
        assert!((injectivity_radius(&(&t * 3.0)) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn anchor_hash_is_stable_and_sensitive() {
        let t = point(3, 2, 1);
        let b = horizontal_basis(&t).unwrap();
        assert_eq!(b.anchor_hash().len(), 64);
        assert_eq!(b.anchor_hash(), anchor_hash(&t));
        let mut moved = t.as_mat().clone();
        moved[(0, 0)] += 1e-15;
        assert_ne!(anchor_hash(&moved), b.anchor_hash());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn projections_are_complementary_idempotent_and_self_adjoint(
            (d, k) in (1usize..7).prop_flat_map(|d| (Just(d), 1..=d)),
            seed in any::<u64>(),
        ) {
            let mut rng = stream_rng(seed, 0);
            let t = random_gaussian(d, k, &mut rng);
            let z = random_gaussian(d, k, &mut rng);
            let w = random_gaussian(d, k, &mut rng);
            let v = vertical_project(&t, &z).unwrap();
            let h = horizontal_project(&t, &z).unwrap();
            prop_assert!((&v + &h - &z).amax() < 1e-10);
            prop_assert!((horizontal_project(&t, &h).unwrap() - &h).amax() < 1e-10);
            prop_assert!((vertical_project(&t, &v).unwrap() - &v).amax() < 1e-10);
            prop_assert!(vertical_project(&t, &h).unwrap().amax() < 1e-10);
            prop_assert!(horizontal_project(&t, &v).unwrap().amax() < 1e-10);
            let hw = horizontal_project(&t, &w).unwrap();
            prop_assert!((frob(&h, &w) - frob(&z, &hw)).abs() < 1e-10 * (1.0 + z.norm() * w.norm()));
        }

        #[test]
        fn horizontal_projection_is_equivariant(seed in any::<u64>()) {
            let mut rng = stream_rng(seed, 0);
            let t = random_gaussian(5, 3, &mut rng);
            let z = random_gaussian(5, 3, &mut rng);
            let u = random_orthogonal(3, &mut rng);
            let lhs = horizontal_project(&(&t * &u), &(&z * &u)).unwrap();
            let rhs = horizontal_project(&t, &z).unwrap() * &u;
            prop_assert!((lhs - rhs).amax() < 1e-10);
        }

        #[test]
        fn quotient_distance_is_a_metric(seed in any::<u64>()) {
            let mut rng = stream_rng(seed, 0);
            let a = random_gaussian(4, 2, &mut rng);
            let b = random_gaussian(4, 2, &mut rng);
            let c = random_gaussian(4, 2, &mut rng);
            let ab = quotient_distance(&a, &b).unwrap();
            prop_assert!((ab - quotient_distance(&b, &a).unwrap()).abs() < 1e-10);
            let bc = quotient_distance(&b, &c).unwrap();
            let ac = quotient_distance(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-10);
        }

        #[test]
        fn vertical_dimension_and_svd_inequality(seed in any::<u64>(), d in 2usize..7) {
            let mut rng = stream_rng(seed, 0);
            let k = 1 + (seed as usize) % d;
            let t = random_gaussian(d, k, &mut rng);
            let skew = skew_basis(k).unwrap();
            let m = skew.elements.len();
            let mut span = Mat::zeros(d * k, m.max(1));
            for (j, a) in skew.elements.iter().enumerate() {
                span.column_mut(j).copy_from_slice((&t * a).as_slice());
            }
            let rank = if m == 0 { 0 } else { span.rank(1e-9) };
            prop_assert_eq!(rank, m);
            prop_assert_eq!(horizontal_dim(d, k) + m, d * k);

            let z = horizontal_project(&t, &random_gaussian(d, k, &mut rng)).unwrap();
            let z = &z / z.norm();
            let sym = &t * z.transpose() + &z * t.transpose();
            let sk = injectivity_radius(&t);
            prop_assert!(sym.norm_squared() - 2.0 * sk * sk >= -1e-10);
        }
    }
}
