use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{single_site, Pauli};
use crate::linalg::{self, Mat, C64};

const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct JumpEnsemble {
    pub operators: Vec<Mat>,
    pub weights: Vec<f64>,
    pub labels: Vec<String>,
}

/// Named jump sets understood by the configuration layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum JumpSet {
    /// Uniform over all single-qubit `X, Y, Z`.
    Pauli,
    /// Uniform over single-qubit `Z` only; generates a commutative algebra.
    ZOnly,
}

impl JumpEnsemble {
    pub fn new(operators: Vec<Mat>, weights: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if operators.is_empty() || operators.len() != weights.len() || labels.len() != weights.len() {
            return Err(Error::Validation("jump operators, weights and labels must align".into()));
        }
        let d = operators[0].nrows();
        for (c, label) in operators.iter().zip(&labels) {
            if c.shape() != (d, d) {
                return Err(Error::Validation(format!("jump {label} has the wrong shape")));
            }
            let defect = linalg::unitarity_defect(c);
            if defect > UNITARY_TOL {
                return Err(Error::Validation(format!("jump {label} is not unitary ({defect:e})")));
            }
        }
        if weights.iter().any(|&w| !(w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Validation("jump weights must form a probability vector".into()));
        }
        for (i, c) in operators.iter().enumerate() {
            let adj = c.adjoint();
            let partner = operators.iter().enumerate().any(|(k, other)| {
                linalg::max_abs_diff(other, &adj) <= UNITARY_TOL && (weights[k] - weights[i]).abs() <= 1e-12
            });
            if !partner {
                return Err(Error::Validation(format!(
                    "jump set is not closed under adjoint with matching weights ({})",
                    labels[i]
                )));
            }
        }
        Ok(JumpEnsemble { operators, weights, labels })
    }

    pub fn named(set: JumpSet, n: usize) -> Result<Self> {
        match set {
            JumpSet::Pauli => pauli_jump_ensemble(n),
            JumpSet::ZOnly => single_qubit_ensemble(n, &[Pauli::Z]),
        }
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.operators[0].nrows()
    }

    /// Dimension of the algebra generated by the operators, found by growing
    /// the span of products one factor at a time until it stops changing.
    pub fn generated_algebra_dimension(&self) -> usize {
        let d = self.dim();
        let full = d * d;
        let mut basis: Vec<Vec<C64>> = Vec::new();
        let mut frontier: Vec<Mat> = Vec::new();
        for c in &self.operators {
            if let Some(v) = orthogonalize(&basis, c.as_slice()) {
                basis.push(v);
                frontier.push(c.clone());
            }
        }
        while !frontier.is_empty() && basis.len() < full {
            let mut next = Vec::new();
            for f in &frontier {
                for c in &self.operators {
                    let p = c * f;
                    if let Some(v) = orthogonalize(&basis, p.as_slice()) {
                        basis.push(v);
                        next.push(p);
                    }
                }
            }
            frontier = next;
        }
        basis.len()
    }

    pub fn generates_full_algebra(&self) -> bool {
        let d = self.dim();
        self.generated_algebra_dimension() == d * d
    }

    /// Same ensemble with the operators in a different order.
    pub fn permuted(&self, order: &[usize]) -> Self {
        JumpEnsemble {
            operators: order.iter().map(|&i| self.operators[i].clone()).collect(),
            weights: order.iter().map(|&i| self.weights[i]).collect(),
            labels: order.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }
}

/// Gram-Schmidt step; returns the normalised residual when it is not
/// numerically in the span of `basis`.
fn orthogonalize(basis: &[Vec<C64>], v: &[C64]) -> Option<Vec<C64>> {
    let mut r = v.to_vec();
    for _ in 0..2 {
        for b in basis {
            let overlap: C64 = b.iter().zip(&r).map(|(x, y)| x.conj() * y).sum();
            for (ri, bi) in r.iter_mut().zip(b) {
                *ri -= overlap * bi;
            }
        }
    }
    let scale: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let norm: f64 = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm <= 1e-9 * scale.max(1.0) {
        return None;
    }
    Some(r.into_iter().map(|z| z / norm).collect())
}

fn single_qubit_ensemble(n: usize, kinds: &[Pauli]) -> Result<JumpEnsemble> {
    if n == 0 {
        return Err(Error::Size("need at least one qubit".into()));
    }
    let mut ops = Vec::new();
    let mut labels = Vec::new();
    for q in 0..n {
        for &p in kinds {
            ops.push(single_site(p, q, n));
            labels.push(format!("{}{}", p.label(), q));
        }
    }
    let w = 1.0 / ops.len() as f64;
    let weights = vec![w; ops.len()];
    JumpEnsemble::new(ops, weights, labels)
}

/// Uniform distribution over `X_i, Y_i, Z_i` for every qubit.
pub fn pauli_jump_ensemble(n: usize) -> Result<JumpEnsemble> {
    single_qubit_ensemble(n, &[Pauli::X, Pauli::Y, Pauli::Z])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;

    #[test]
    fn pauli_ensembles() {
        let e = pauli_jump_ensemble(1).unwrap();
        assert_eq!(e.len(), 3);
        assert!(e.weights.iter().all(|&w| (w - 1.0 / 3.0).abs() < 1e-15));
        let e = pauli_jump_ensemble(2).unwrap();
        assert_eq!(e.len(), 6);
        assert_eq!(e.generated_algebra_dimension(), 16);
        for c in &e.operators {
            assert!(linalg::unitarity_defect(c) <= 1e-15);
        }
        assert_eq!(pauli_jump_ensemble(3).unwrap().generated_algebra_dimension(), 64);
    }

    #[test]
    fn z_only_is_not_full() {
        let e = JumpEnsemble::named(JumpSet::ZOnly, 2).unwrap();
        assert_eq!(e.generated_algebra_dimension(), 4);
        assert!(!e.generates_full_algebra());
    }

    #[test]
    fn adjoint_closure_is_enforced() {
        let s = Mat::from_row_slice(2, 2, &[linalg::ONE, ZERO, ZERO, linalg::I]);
        let err = JumpEnsemble::new(vec![s.clone()], vec![1.0], vec!["S".into()]);
        assert!(matches!(err, Err(Error::Validation(_))));
        let ok = JumpEnsemble::new(vec![s.clone(), s.adjoint()], vec![0.5, 0.5], vec!["S".into(), "Sdg".into()]);
        assert!(ok.is_ok());
        let bad_weights = JumpEnsemble::new(vec![s.clone(), s.adjoint()], vec![0.3, 0.7], vec!["S".into(), "Sdg".into()]);
        assert!(bad_weights.is_err());
    }
}
