//! Accept and right-reject operators restricted to median classes.
//!
//! For an eigenstate `j` with grid floor `b_j`, a median at grid index `a`
//! is in class `Floor` if `a = b_j`, `Ceil` if `a = b_j + 1` (no wrap-around)
//! and `Else` otherwise. Restricting the amplitudes `β_{jE}` to a class set
//! restricts each Gram matrix entrywise:
//! `G⁽ᵃ; P,Q⁾_{jk} = [class_j(a) ∈ P] [class_k(a) ∈ Q] G⁽ᵃ⁾_{jk}`.
//!
//! With slots `(A, B, X, Y)` as in the operator definitions,
//!
//! * `M^a(ρ) = Σ f(a,b) G⁽ᵇ; A,X⁾ ∘ (C̃ (G⁽ᵃ; B,Y⁾ ∘ ρ) C̃†)`
//! * `M^rr(ρ) = D ρ`, `D = Σ f(a,b) conj(G⁽ᵃ; A,X⁾) ∘ (C̃† diag(conj G⁽ᵇ; B,Y⁾_{ll}) C̃)`
//!
//! averaged over jumps and both QPE variants. Everything here is in the
//! energy eigenbasis.

use crate::channel::{JumpEnsemble, SamplerModel, Variant};
use crate::linalg::{c, Mat, ZERO};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MedianClass {
    Floor,
    Ceil,
    Else,
}

impl MedianClass {
    pub fn of(floor: usize, a: usize, size: usize) -> Self {
        if a == floor {
            MedianClass::Floor
        } else if floor + 1 < size && a == floor + 1 {
            MedianClass::Ceil
        } else {
            MedianClass::Else
        }
    }

    /// `v ∈ {0, 1}` as a class.
    pub fn offset(v: usize) -> Self {
        if v == 0 {
            MedianClass::Floor
        } else {
            MedianClass::Ceil
        }
    }

    fn bit(self) -> u8 {
        match self {
            MedianClass::Floor => 1,
            MedianClass::Ceil => 2,
            MedianClass::Else => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassSet(u8);

impl ClassSet {
    pub const ALL: ClassSet = ClassSet(7);

    pub fn only(c: MedianClass) -> Self {
        ClassSet(c.bit())
    }

    pub fn contains(self, c: MedianClass) -> bool {
        self.0 & c.bit() != 0
    }

    pub fn singletons() -> [ClassSet; 3] {
        [MedianClass::Floor, MedianClass::Ceil, MedianClass::Else].map(ClassSet::only)
    }
}

/// Class slots `(A, B, X, Y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slots {
    pub a: ClassSet,
    pub b: ClassSet,
    pub x: ClassSet,
    pub y: ClassSet,
}

impl Slots {
    pub const FULL: Slots = Slots { a: ClassSet::ALL, b: ClassSet::ALL, x: ClassSet::ALL, y: ClassSet::ALL };

    /// `(A, v, s, Y)` with `A` and `Y` unrestricted.
    pub fn uniform(v: usize, s: usize) -> Self {
        Slots {
            b: ClassSet::only(MedianClass::offset(v)),
            x: ClassSet::only(MedianClass::offset(s)),
            ..Slots::FULL
        }
    }
}

pub struct ProjectedOperators<'a> {
    model: &'a SamplerModel,
    jumps: Vec<Mat>,
    weights: Vec<f64>,
}

impl<'a> ProjectedOperators<'a> {
    pub fn new(model: &'a SamplerModel, ensemble: &JumpEnsemble) -> Self {
        let jumps = ensemble.operators.iter().map(|op| model.in_eigenbasis(op)).collect();
        ProjectedOperators { model, jumps, weights: ensemble.weights.clone() }
    }

    fn masked(&self, v: &Variant, a: usize, p: ClassSet, q: ClassSet) -> Mat {
        let floors = &self.model.table.floor_index;
        let size = self.model.grid_size();
        let g = &v.gram.by_median[a];
        Mat::from_fn(g.nrows(), g.ncols(), |j, k| {
            let keep = p.contains(MedianClass::of(floors[j], a, size))
                && q.contains(MedianClass::of(floors[k], a, size));
            if keep {
                g[(j, k)]
            } else {
                ZERO
            }
        })
    }

    pub fn accept(&self, slots: Slots, rho: &Mat) -> Mat {
        let d = self.model.dim();
        let size = self.model.grid_size();
        let f = &self.model.accept;
        let mut out = Mat::zeros(d, d);
        for v in &self.model.variants {
            let inner: Vec<Mat> = (0..size).map(|a| self.masked(v, a, slots.b, slots.y)).collect();
            let outer: Vec<Mat> = (0..size).map(|b| self.masked(v, b, slots.a, slots.x)).collect();
            for (cj, &mu) in self.jumps.iter().zip(&self.weights) {
                let moved: Vec<Mat> =
                    inner.iter().map(|ga| cj * ga.component_mul(rho) * cj.adjoint()).collect();
                for (b, gb) in outer.iter().enumerate() {
                    let mut acc = Mat::zeros(d, d);
                    for (a, t) in moved.iter().enumerate() {
                        if f[(a, b)] != 0.0 {
                            acc += t * c(f[(a, b)]);
                        }
                    }
                    out += gb.component_mul(&acc) * c(0.5 * mu);
                }
            }
        }
        out
    }

    /// The operator `D` with `M^rr(ρ) = D ρ`.
    pub fn reject_right_factor(&self, slots: Slots) -> Mat {
        let d = self.model.dim();
        let size = self.model.grid_size();
        let f = &self.model.accept;
        let mut out = Mat::zeros(d, d);
        for v in &self.model.variants {
            let left: Vec<Mat> = (0..size).map(|a| self.masked(v, a, slots.a, slots.x).conjugate()).collect();
            let diag: Vec<Mat> = (0..size)
                .map(|b| {
                    let m = self.masked(v, b, slots.b, slots.y);
                    Mat::from_diagonal(&m.diagonal().conjugate())
                })
                .collect();
            for (cj, &mu) in self.jumps.iter().zip(&self.weights) {
                let sand: Vec<Mat> = diag.iter().map(|db| cj.adjoint() * db * cj).collect();
                for (a, ga) in left.iter().enumerate() {
                    let mut acc = Mat::zeros(d, d);
                    for (b, s) in sand.iter().enumerate() {
                        if f[(a, b)] != 0.0 {
                            acc += s * c(f[(a, b)]);
                        }
                    }
                    out += ga.component_mul(&acc) * c(0.5 * mu);
                }
            }
        }
        out
    }

    pub fn reject_right(&self, slots: Slots, rho: &Mat) -> Mat {
        self.reject_right_factor(slots) * rho
    }
}
