//! Linear maps on `d × d` operators stored as `d² × d²` matrices.
//!
//! Convention (used everywhere in the crate): column stacking,
//! `vec(X)[i + d·j] = X[i, j]`, which coincides with nalgebra's
//! column-major storage. Under this convention `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::linalg::{self, Mat, C64, ONE, ZERO};

#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: Mat,
}

impl Superoperator {
    pub fn from_matrix(dim: usize, matrix: Mat) -> Self {
        assert_eq!(matrix.shape(), (dim * dim, dim * dim), "superoperator shape");
        Superoperator { dim, matrix }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_matrix(dim, linalg::identity(dim * dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_matrix(dim, Mat::zeros(dim * dim, dim * dim))
    }

    /// Builds the matrix column by column from the action on matrix units.
    pub fn from_map(dim: usize, map: impl Fn(&Mat) -> Mat) -> Self {
        let mut matrix = Mat::zeros(dim * dim, dim * dim);
        let mut unit = Mat::zeros(dim, dim);
        for j in 0..dim {
            for i in 0..dim {
                unit[(i, j)] = ONE;
                let image = map(&unit);
                matrix.set_column(i + dim * j, &vec_of(&image));
                unit[(i, j)] = ZERO;
            }
        }
        Self::from_matrix(dim, matrix)
    }

    /// `X ↦ A X B`.
    pub fn sandwich(a: &Mat, b: &Mat) -> Self {
        Self::from_matrix(a.nrows(), b.transpose().kronecker(a))
    }

    pub fn from_kraus(ops: &[Mat]) -> Self {
        let dim = ops[0].nrows();
        let mut s = Self::zeros(dim);
        for k in ops {
            s.matrix += k.conjugate().kronecker(k);
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &Mat {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat {
        self.matrix
    }

    pub fn apply(&self, x: &Mat) -> Mat {
        let v = &self.matrix * vec_of(x);
        unvec(&v, self.dim)
    }

    /// `self ∘ other`: `other` acts first.
    pub fn compose(&self, other: &Superoperator) -> Superoperator {
        Self::from_matrix(self.dim, &self.matrix * &other.matrix)
    }

    pub fn scale(&self, s: f64) -> Superoperator {
        Self::from_matrix(self.dim, self.matrix.scale(s))
    }

    pub fn power(&self, mut k: u64) -> Superoperator {
        let mut result = Self::identity(self.dim);
        let mut base = self.clone();
        while k > 0 {
            if k & 1 == 1 {
                result = result.compose(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.compose(&base);
            }
        }
        result
    }

    /// Adjoint with respect to the Hilbert–Schmidt inner product.
    pub fn hs_adjoint(&self) -> Superoperator {
        Self::from_matrix(self.dim, self.matrix.adjoint())
    }

    /// Re-expresses a map given in the basis of the columns of `basis`
    /// in the standard basis: `X ↦ B · S(B† X B) · B†`.
    pub fn from_basis(&self, basis: &Mat) -> Superoperator {
        let left = basis.conjugate().kronecker(basis);
        let right = basis.transpose().kronecker(&basis.adjoint());
        Self::from_matrix(self.dim, left * &self.matrix * right)
    }

    /// Inverse of [`Superoperator::from_basis`].
    pub fn to_basis(&self, basis: &Mat) -> Superoperator {
        self.from_basis(&basis.adjoint())
    }

    /// Choi matrix `Σ_ij |i⟩⟨j| ⊗ S(|i⟩⟨j|)`.
    pub fn choi(&self) -> Mat {
        let d = self.dim;
        let mut choi = Mat::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                let col = self.matrix.column(i + d * j);
                for l in 0..d {
                    for k in 0..d {
                        choi[(i * d + k, j * d + l)] = col[k + d * l];
                    }
                }
            }
        }
        choi
    }

    pub fn choi_min_eigenvalue(&self) -> f64 {
        linalg::min_eigenvalue_hermitian(&self.choi())
    }

    /// Largest deviation of `tr S(|i⟩⟨j|)` from `δ_ij`.
    pub fn trace_preservation_defect(&self) -> f64 {
        self.trace_annihilation_defect_against(true)
    }

    /// Largest `|tr S(|i⟩⟨j|)|`; zero for generators of trace-preserving semigroups.
    pub fn trace_annihilation_defect(&self) -> f64 {
        self.trace_annihilation_defect_against(false)
    }

    fn trace_annihilation_defect_against(&self, identity: bool) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for j in 0..d {
            for i in 0..d {
                let col = self.matrix.column(i + d * j);
                let tr: C64 = (0..d).map(|k| col[k + d * k]).sum();
                let target = if identity && i == j { ONE } else { ZERO };
                worst = worst.max((tr - target).norm());
            }
        }
        worst
    }

    /// Largest deviation from `S(X†) = S(X)†` over matrix units.
    pub fn hermiticity_preservation_defect(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let a = unvec(&self.matrix.column(i + d * j).into_owned(), d);
                let b = unvec(&self.matrix.column(j + d * i).into_owned(), d);
                worst = worst.max(linalg::max_abs_diff(&a, &b.adjoint()));
            }
        }
        worst
    }

    /// Kraus operators from the spectral decomposition of the Choi matrix.
    /// Eigenvalues below `cutoff` are dropped; the map must be completely positive.
    pub fn kraus(&self, cutoff: f64) -> Vec<Mat> {
        let d = self.dim;
        let (vals, vecs) = linalg::hermitian_eigen(&self.choi());
        let mut ops = Vec::new();
        for (idx, &lambda) in vals.iter().enumerate() {
            if lambda <= cutoff {
                continue;
            }
            let s = lambda.sqrt();
            let k = Mat::from_fn(d, d, |row, col| vecs[(col * d + row, idx)] * s);
            ops.push(k);
        }
        ops
    }

    pub fn max_abs_diff(&self, other: &Superoperator) -> f64 {
        linalg::max_abs_diff(&self.matrix, &other.matrix)
    }
}

impl Add for &Superoperator {
    type Output = Superoperator;
    fn add(self, rhs: &Superoperator) -> Superoperator {
        Superoperator::from_matrix(self.dim, &self.matrix + &rhs.matrix)
    }
}

impl Sub for &Superoperator {
    type Output = Superoperator;
    fn sub(self, rhs: &Superoperator) -> Superoperator {
        Superoperator::from_matrix(self.dim, &self.matrix - &rhs.matrix)
    }
}

impl Mul<f64> for &Superoperator {
    type Output = Superoperator;
    fn mul(self, rhs: f64) -> Superoperator {
        self.scale(rhs)
    }
}

pub fn vec_of(x: &Mat) -> linalg::Vector {
    linalg::Vector::from_column_slice(x.as_slice())
}

pub fn unvec(v: &linalg::Vector, d: usize) -> Mat {
    Mat::from_column_slice(d, d, v.as_slice())
}

/// Flat real/imaginary representation with an explicit shape header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDump {
    pub rows: usize,
    pub cols: usize,
    /// Column-major real parts.
    pub re: Vec<f64>,
    /// Column-major imaginary parts.
    pub im: Vec<f64>,
}

impl MatrixDump {
    pub fn of(m: &Mat) -> Self {
        MatrixDump {
            rows: m.nrows(),
            cols: m.ncols(),
            re: m.iter().map(|z| z.re).collect(),
            im: m.iter().map(|z| z.im).collect(),
        }
    }

    pub fn to_matrix(&self) -> Mat {
        Mat::from_iterator(
            self.rows,
            self.cols,
            self.re.iter().zip(&self.im).map(|(&r, &i)| C64::new(r, i)),
        )
    }
}

/// Entrywise real scaling helper used in assembly loops.
#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_density, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sandwich_matches_direct_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_unitary(3, &mut rng);
        let b = random_unitary(3, &mut rng);
        let x = random_density(3, &mut rng);
        let s = Superoperator::sandwich(&a, &b);
        assert!(linalg::max_abs_diff(&s.apply(&x), &(&a * &x * &b)) < 1e-13);
    }

    #[test]
    fn kraus_round_trip_through_choi() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_unitary(3, &mut rng);
        let v = random_unitary(3, &mut rng);
        let ops = vec![u.scale(0.6f64.sqrt()), v.scale(0.4f64.sqrt())];
        let s = Superoperator::from_kraus(&ops);
        assert!(s.trace_preservation_defect() < 1e-13);
        assert!(s.choi_min_eigenvalue() > -1e-12);
        let back = Superoperator::from_kraus(&s.kraus(1e-14));
        assert!(back.max_abs_diff(&s) < 1e-12);
    }

    #[test]
    fn basis_change_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_unitary(2, &mut rng);
        let s = Superoperator::sandwich(&random_unitary(2, &mut rng), &random_unitary(2, &mut rng));
        assert!(s.from_basis(&u).to_basis(&u).max_abs_diff(&s) < 1e-13);
        let x = random_density(2, &mut rng);
        let direct = &u * s.apply(&(u.adjoint() * &x * &u)) * u.adjoint();
        assert!(linalg::max_abs_diff(&s.from_basis(&u).apply(&x), &direct) < 1e-13);
    }

    #[test]
    fn power_matches_repeated_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = random_unitary(2, &mut rng);
        let s = Superoperator::sandwich(&u, &u.adjoint());
        let mut acc = Superoperator::identity(2);
        for _ in 0..7 {
            acc = acc.compose(&s);
        }
        assert!(s.power(7).max_abs_diff(&acc) < 1e-12);
    }
}
