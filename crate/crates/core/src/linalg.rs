//! Dense linear-algebra helpers shared by the modules: sorted symmetric
//! eigendecompositions, spectral functions of SPD matrices, and row-major
//! (de)serialization of matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Frobenius inner product.
#[inline]
pub fn frob(a: &Mat, b: &Mat) -> f64 {
    a.dot(b)
}

/// `dst += a·x`, elementwise.
#[inline]
pub fn add_scaled(dst: &mut Mat, a: f64, x: &Mat) {
    debug_assert_eq!(dst.shape(), x.shape());
    for (d, v) in dst.as_mut_slice().iter_mut().zip(x.as_slice()) {
        *d += a * v;
    }
}

/// Symmetric eigendecomposition with eigenvalues in ascending order.
pub fn sym_eigen(m: &Mat) -> (Vector, Mat) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = Vector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

pub fn min_eigenvalue(m: &Mat) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    sym_eigen(m).0[0]
}

/// Applies `f` to the spectrum of a symmetric matrix.
pub fn sym_apply(m: &Mat, f: impl Fn(f64) -> f64) -> Mat {
    let (values, vectors) = sym_eigen(m);
    let mapped = Mat::from_diagonal(&values.map(f));
    &vectors * mapped * vectors.transpose()
}

/// Singular values in descending order.
pub fn singular_values(m: &Mat) -> Vector {
    let mut s = m.clone().svd(false, false).singular_values;
    s.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn smallest_singular_value(m: &Mat) -> f64 {
    let s = singular_values(m);
    s.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Largest absolute deviation of `UᵀU` from the identity.
pub fn orthogonality_defect(u: &Mat) -> f64 {
    let k = u.ncols();
    let gram = u.transpose() * u;
    (gram - Mat::identity(k, k)).amax()
}

/// Haar-distributed orthogonal matrix (QR of a Gaussian matrix with sign fix).
pub fn random_orthogonal<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Mat {
    let g = Mat::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn from_rows(rows: &[Vec<f64>]) -> Result<Mat, String> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err("ragged matrix rows".into());
    }
    Ok(Mat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Serde adapter writing a matrix as row-major nested arrays.
pub mod rows {
    use super::Mat;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Mat, s: S) -> Result<S::Ok, S::Error> {
        super::to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        super::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter writing a vector as a flat array.
pub mod vector {
    use super::Vector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        Ok(Vector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}

/// Serde adapter for an optional matrix.
pub mod rows_opt {
    use super::Mat;
    use serde::{Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Option<Mat>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(super::to_rows).serialize(s)
    }
}

/// Serde adapter for a vector of matrices.
pub mod rows_vec {
    use super::Mat;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(ms: &[Mat], s: S) -> Result<S::Ok, S::Error> {
        ms.iter().map(super::to_rows).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Mat>, D::Error> {
        let all = Vec::<Vec<Vec<f64>>>::deserialize(d)?;
        all.iter()
            .map(|r| super::from_rows(r).map_err(serde::de::Error::custom))
            .collect()
    }
}
