//! Dense complex linear algebra helpers shared by every module.
//!
//! Everything is built on `nalgebra::DMatrix<Complex64>`. Matrices are
//! column-major, which is also the column-stacking convention used for
//! superoperators (see [`crate::superop`]).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type Mat = DMatrix<C64>;
pub type Vector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(d: usize) -> Mat {
    Mat::identity(d, d)
}

pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}

pub fn trace(m: &Mat) -> C64 {
    m.diagonal().iter().sum()
}

/// Largest entrywise modulus.
pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn hermiticity_defect(m: &Mat) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

pub fn hermitize(m: &Mat) -> Mat {
    (m + m.adjoint()).scale(0.5)
}

pub fn is_power_of_two(d: usize) -> bool {
    d != 0 && d & (d - 1) == 0
}

pub fn unitarity_defect(u: &Mat) -> f64 {
    max_abs_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

/// Eigendecomposition of a Hermitian matrix with eigenvalues ascending.
///
/// Ties keep the order produced by the solver (stable sort).
pub fn hermitian_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let d = m.nrows();
    let eig = hermitize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = Mat::zeros(d, d);
    for (col, &k) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(k));
    }
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &Mat) -> Vec<f64> {
    let mut v: Vec<f64> = hermitize(m).symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_fn(m: &Mat, f: impl Fn(f64) -> f64) -> Mat {
    let (vals, vecs) = hermitian_eigen(m);
    let diag = Vector::from_iterator(vals.len(), vals.iter().map(|&x| c(f(x))));
    &vecs * Mat::from_diagonal(&diag) * vecs.adjoint()
}

/// Sum of singular values.
pub fn trace_norm(m: &Mat) -> f64 {
    m.clone().svd(false, false).singular_values.iter().sum()
}

/// Trace norm of a Hermitian matrix via its spectrum.
pub fn trace_norm_hermitian(m: &Mat) -> f64 {
    hermitian_eigenvalues(m).iter().map(|x| x.abs()).sum()
}

pub fn min_eigenvalue_hermitian(m: &Mat) -> f64 {
    hermitian_eigenvalues(m)[0]
}

pub fn outer(u: &Vector, v: &Vector) -> Mat {
    u * v.adjoint()
}

pub fn projector(v: &Vector) -> Mat {
    outer(v, v)
}

/// Haar-random pure state in dimension `d`.
pub fn random_pure_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vector {
    let v = Vector::from_fn(d, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let n = v.norm();
    v.unscale(n)
}

/// Random full-rank density matrix from the Ginibre ensemble.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Mat {
    let g = Mat::from_fn(d, d, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let rho = &g * g.adjoint();
    let t = trace(&rho);
    rho.unscale(t.re)
}

/// Random Hermitian matrix with Gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Mat {
    let g = Mat::from_fn(d, d, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    hermitize(&g)
}

pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Mat {
    let g = Mat::from_fn(d, d, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    // fix the phase freedom so the distribution is Haar
    let phases = Vector::from_fn(d, |i, _| {
        let z = r[(i, i)];
        if z.norm() > 0.0 {
            z / z.norm()
        } else {
            ONE
        }
    });
    q * Mat::from_diagonal(&phases)
}

/// Eigendecomposition of a general complex matrix.
///
/// Eigenvalues come from the complex Schur form; eigenvectors are obtained
/// by back substitution on the triangular factor. Returns `None` for the
/// vectors when the eigenvector matrix is numerically singular
/// (condition estimate above `max_cond`).
pub struct GeneralEigen {
    pub values: Vec<C64>,
    pub vectors: Option<Mat>,
    pub inverse: Option<Mat>,
    pub condition: f64,
}

pub fn general_eigen(m: &Mat, max_cond: f64) -> GeneralEigen {
    let n = m.nrows();
    let (q, t) = nalgebra::linalg::Schur::new(m.clone()).unpack();
    let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let scale = max_abs(m).max(1e-300);
    let mut x = Mat::zeros(n, n);
    for i in 0..n {
        let lambda = values[i];
        x[(i, i)] = ONE;
        for k in (0..i).rev() {
            let mut s = ZERO;
            for l in (k + 1)..=i {
                s += t[(k, l)] * x[(l, i)];
            }
            let mut denom = t[(k, k)] - lambda;
            if denom.norm() < 1e-14 * scale {
                denom = C64::new(1e-14 * scale, 0.0);
            }
            x[(k, i)] = -s / denom;
        }
        let col_norm = x.column(i).norm();
        x.column_mut(i).unscale_mut(col_norm);
    }
    let vectors = q * x;
    let sv = vectors.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition <= max_cond {
        let inverse = vectors.clone().try_inverse();
        GeneralEigen {
            values,
            vectors: inverse.as_ref().map(|_| vectors.clone()),
            inverse,
            condition,
        }
    } else {
        GeneralEigen { values, vectors: None, inverse: None, condition }
    }
}

/// `exp(t M)` by scaling and squaring with a Padé approximant.
pub fn expm_pade(m: &Mat, t: f64) -> Mat {
    m.scale(t).exp()
}
