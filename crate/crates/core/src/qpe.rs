//! Closed-form amplitude model for boosted (median-of-`g`) phase estimation.
//!
//! A single round with `r` bits maps eigenstate `j` to grid index `y` with
//! amplitude `β_{jy} = γ_{j, y - b_j}` where `b_j` is the floor grid index of
//! `E_j` and the offset wraps modulo `2^r`. `g` independent rounds give
//! product amplitudes and the reported energy is the median.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonians::EigenSystem;
use crate::linalg::{self, Mat, C64, ONE, ZERO};

/// Residues this close to a grid point are snapped onto it.
const SNAP_TOL: f64 = 1e-9;
/// Largest `2^(r g)` accepted by the enumeration path.
pub const ENUMERATION_LIMIT: usize = 1 << 22;
pub const MAX_BITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyGrid {
    pub r: usize,
    pub kappa: f64,
    pub spacing: f64,
    pub points: Vec<f64>,
}

pub fn energy_grid(r: usize, kappa: f64) -> Result<EnergyGrid> {
    if r == 0 || r > MAX_BITS {
        return Err(Error::Size(format!("bits per round r={r} outside 1..={MAX_BITS}")));
    }
    if !(kappa > 0.0) || kappa.log2().fract() != 0.0 {
        return Err(Error::Configuration(format!("kappa={kappa} is not a power of two")));
    }
    let size = 1usize << r;
    let spacing = kappa / size as f64;
    let points = (0..size).map(|m| m as f64 * spacing).collect();
    Ok(EnergyGrid { r, kappa, spacing, points })
}

impl EnergyGrid {
    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn energy(&self, index: usize) -> f64 {
        self.points[index]
    }

    /// Grid index of the largest grid point not above `e` (with snapping).
    pub fn floor_index(&self, e: f64) -> usize {
        let x = e / self.spacing;
        let k = x.round();
        let idx = if (x - k).abs() <= SNAP_TOL { k } else { x.floor() };
        (idx.max(0.0) as usize).min(self.size() - 1)
    }

    pub fn floor_value(&self, e: f64) -> f64 {
        self.energy(self.floor_index(e))
    }

    /// Index of a grid point, or `None` if `e` is not on the grid.
    pub fn index_of(&self, e: f64) -> Option<usize> {
        let x = e / self.spacing;
        let k = x.round();
        if (x - k).abs() <= SNAP_TOL && k >= 0.0 && (k as usize) < self.size() {
            Some(k as usize)
        } else {
            None
        }
    }

    /// Energy encoded by a bit string, most significant bit first.
    pub fn energy_from_bits(&self, bits: &[u8]) -> Result<f64> {
        if bits.len() != self.r || bits.iter().any(|&b| b > 1) {
            return Err(Error::Validation(format!("expected {} bits", self.r)));
        }
        let idx = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        Ok(self.energy(idx))
    }

    /// Smallest `r` for which `2 beta w <= 1` at this `kappa`.
    pub fn min_bits_for(&self, beta: f64) -> usize {
        let mut r = 1;
        while 2.0 * beta * self.kappa / (1u64 << r) as f64 > 1.0 {
            r += 1;
        }
        r
    }
}

/// Single-round amplitude for fractional offset `theta = 2^r ε ∈ [0, 1)` and
/// integer offset `l`, with `size = 2^r`.
pub fn gamma(theta: f64, l: i64, size: usize) -> C64 {
    let n = size as f64;
    let x = theta - l as f64;
    if x == 0.0 {
        return ONE;
    }
    if theta == 0.0 {
        return ZERO;
    }
    let phase = C64::from_polar(1.0, PI * x * (1.0 - 1.0 / n));
    phase * ((PI * x).sin() / ((PI * x / n).sin() * n))
}

/// Wrapped offset of grid index `y` relative to `base`, in `(-N/2, N/2]`.
pub fn wrapped_offset(y: usize, base: usize, size: usize) -> i64 {
    let half = (size / 2) as i64;
    let mut l = (y as i64 - base as i64).rem_euclid(size as i64);
    if l > half {
        l -= size as i64;
    }
    l
}

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeTable {
    pub grid: EnergyGrid,
    /// Row `j`, column `c` holds `γ_{j l}` with `l = c - N/2 + 1`.
    pub gamma: Mat,
    pub floor_index: Vec<usize>,
    /// Residue `ε_j ∈ [0, 2^{-r})` in units of `kappa`.
    pub epsilon: Vec<f64>,
    /// Row `j`, column `y` holds `β_{jy}` for grid index `y`.
    pub beta: Mat,
}

pub fn single_round_amplitudes(es: &EigenSystem, grid: &EnergyGrid) -> Result<AmplitudeTable> {
    if es.kappa != grid.kappa {
        return Err(Error::Configuration(format!(
            "eigensystem kappa {} differs from grid kappa {}",
            es.kappa, grid.kappa
        )));
    }
    let size = grid.size();
    let d = es.dim();
    let mut floor_index = Vec::with_capacity(d);
    let mut epsilon = Vec::with_capacity(d);
    let mut gamma_tab = Mat::zeros(d, size);
    let mut beta = Mat::zeros(d, size);
    for (j, &e) in es.eigenvalues.iter().enumerate() {
        let b = grid.floor_index(e);
        let mut theta = e / grid.spacing - b as f64;
        if theta.abs() <= SNAP_TOL {
            theta = 0.0;
        }
        let theta = theta.clamp(0.0, 1.0 - f64::EPSILON);
        floor_index.push(b);
        epsilon.push(theta / size as f64);
        for col in 0..size {
            let l = col as i64 - (size / 2) as i64 + 1;
            gamma_tab[(j, col)] = gamma(theta, l, size);
        }
        for y in 0..size {
            beta[(j, y)] = gamma(theta, wrapped_offset(y, b, size), size);
        }
    }
    Ok(AmplitudeTable { grid: grid.clone(), gamma: gamma_tab, floor_index, epsilon, beta })
}

impl AmplitudeTable {
    pub fn dim(&self) -> usize {
        self.beta.nrows()
    }

    pub fn size(&self) -> usize {
        self.beta.ncols()
    }

    pub fn gamma_at(&self, j: usize, l: i64) -> C64 {
        let size = self.size() as i64;
        let col = l + size / 2 - 1;
        self.gamma[(j, col as usize)]
    }

    pub fn beta_at(&self, j: usize, y: usize, flipped: bool) -> C64 {
        let b = self.beta[(j, y)];
        if flipped {
            b.conj()
        } else {
            b
        }
    }

    /// `β` table for one QPE variant (conjugated when flipped).
    pub fn beta_table(&self, flipped: bool) -> Mat {
        if flipped {
            self.beta.conjugate()
        } else {
            self.beta.clone()
        }
    }

    /// `θ = 2^r ε_j` as used by [`gamma`].
    pub fn theta(&self, j: usize) -> f64 {
        self.epsilon[j] * self.size() as f64
    }
}

/// `|γ_0|² + |γ_1|²` as a function of `θ`.
pub fn two_point_mass(theta: f64, size: usize) -> f64 {
    gamma(theta, 0, size).norm_sqr() + gamma(theta, 1, size).norm_sqr()
}

/// Single-copy phase-estimation unitary for an eigenstate with phase
/// `mu = E / kappa`: `F† · diag(e^{2πi mu x}) · H^{⊗r}`. The flipped variant
/// uses the forward transform and conjugate phases. The first column
/// reproduces the `β` row of the table.
pub fn qpe_unitary(mu: f64, size: usize, flipped: bool) -> Mat {
    let n = size as f64;
    let sign = if flipped { -1.0 } else { 1.0 };
    // (F† Φ H)[y, x'] = Σ_x F†[y,x] e^{2πi μ x} H[x, x']
    let mut fphi = Mat::zeros(size, size);
    for y in 0..size {
        for x in 0..size {
            let ang = sign * 2.0 * PI * (mu * x as f64 - (x * y) as f64 / n);
            fphi[(y, x)] = C64::from_polar(1.0 / n.sqrt(), ang);
        }
    }
    fphi * hadamard_power(size)
}

pub fn hadamard_power(size: usize) -> Mat {
    let s = 1.0 / (size as f64).sqrt();
    Mat::from_fn(size, size, |a, b| {
        if (a & b).count_ones() % 2 == 0 {
            linalg::c(s)
        } else {
            linalg::c(-s)
        }
    })
}

/// Per-eigenstate single-copy unitaries for one variant.
pub fn qpe_unitaries(es: &EigenSystem, grid: &EnergyGrid, flipped: bool) -> Vec<Mat> {
    let size = grid.size();
    es.eigenvalues
        .iter()
        .map(|&e| {
            let mut mu = e / es.kappa;
            let snapped = (mu * size as f64).round() / size as f64;
            if ((mu - snapped) * size as f64).abs() <= SNAP_TOL {
                mu = snapped;
            }
            qpe_unitary(mu, size, flipped)
        })
        .collect()
}

/// Product amplitude `β_{jE}` for a tuple of grid energies.
pub fn boosted_amplitude(table: &AmplitudeTable, j: usize, energies: &[f64], flipped: bool) -> Result<C64> {
    let mut acc = ONE;
    for &e in energies {
        let y = table
            .grid
            .index_of(e)
            .ok_or_else(|| Error::Domain(format!("energy {e} is not a grid point")))?;
        acc *= table.beta_at(j, y, flipped);
    }
    Ok(acc)
}

/// Middle order statistic of an odd-length tuple.
pub fn median<T: PartialOrd + Copy>(values: &[T]) -> Result<T> {
    check_odd(values.len())?;
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("median of unordered values"));
    Ok(v[v.len() / 2])
}

pub fn check_odd(g: usize) -> Result<()> {
    if g % 2 == 0 {
        return Err(Error::Configuration(format!(
            "number of rounds g must be odd so the median is a single estimate, got {g}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramFamily {
    pub g: usize,
    pub flipped: bool,
    /// Indexed by grid index of the median.
    pub by_median: Vec<Mat>,
}

impl GramFamily {
    pub fn dim(&self) -> usize {
        self.by_median[0].nrows()
    }

    pub fn total(&self) -> Mat {
        let d = self.dim();
        self.by_median.iter().fold(Mat::zeros(d, d), |acc, m| acc + m)
    }

    /// Column `a` is `vec(G^{(a)})`.
    pub fn stacked(&self) -> Mat {
        let d = self.dim();
        let mut out = Mat::zeros(d * d, self.by_median.len());
        for (a, m) in self.by_median.iter().enumerate() {
            out.set_column(a, &crate::superop::vec_of(m));
        }
        out
    }
}

/// `n! / (a! b! c!)` for small arguments.
fn multinomial3(a: usize, b: usize, c: usize) -> f64 {
    let f = |k: usize| (1..=k).fold(1.0, |acc, x| acc * x as f64);
    f(a + b + c) / (f(a) * f(b) * f(c))
}

fn powers(x: C64, g: usize) -> Vec<C64> {
    let mut p = vec![ONE; g + 1];
    for k in 1..=g {
        p[k] = p[k - 1] * x;
    }
    p
}

/// Sum over `g` independent copies of the product of per-copy class weights,
/// restricted to tuples whose median lies in the `at` class.
pub fn median_class_sum(below: C64, at: C64, above: C64, g: usize) -> C64 {
    let h = g.div_ceil(2);
    let (pb, pa, pc) = (powers(below, g), powers(at, g), powers(above, g));
    let mut s = ZERO;
    for nb in 0..h {
        for nc in 0..h {
            let na = g - nb - nc;
            s += pb[nb] * pa[na] * pc[nc] * multinomial3(nb, na, nc);
        }
    }
    s
}

/// Gram family by the count-partition reduction (default path).
pub fn gram_family(table: &AmplitudeTable, g: usize, flipped: bool) -> Result<GramFamily> {
    check_odd(g)?;
    let d = table.dim();
    let size = table.size();
    let beta = table.beta_table(flipped);
    let mut by_median = vec![Mat::zeros(d, d); size];
    for j in 0..d {
        for k in 0..d {
            let per: Vec<C64> = (0..size).map(|y| beta[(j, y)] * beta[(k, y)].conj()).collect();
            let total: C64 = per.iter().sum();
            let mut below = ZERO;
            for (a, &at) in per.iter().enumerate() {
                let above = total - below - at;
                by_median[a][(j, k)] = median_class_sum(below, at, above, g);
                below += at;
            }
        }
    }
    Ok(GramFamily { g, flipped, by_median })
}

/// Iterates over all `size^g` index tuples, last copy fastest.
pub(crate) fn for_each_tuple(size: usize, g: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; g];
    loop {
        f(&idx);
        let mut pos = g;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < size {
                break;
            }
            idx[pos] = 0;
        }
    }
}

pub(crate) fn median_index(tuple: &[usize], scratch: &mut Vec<usize>) -> usize {
    scratch.clear();
    scratch.extend_from_slice(tuple);
    scratch.sort_unstable();
    scratch[scratch.len() / 2]
}

/// Gram family by brute-force enumeration of `S(r)^g`.
pub fn gram_family_enumerated(table: &AmplitudeTable, g: usize, flipped: bool) -> Result<GramFamily> {
    check_odd(g)?;
    let d = table.dim();
    let size = table.size();
    let count = (size as f64).powi(g as i32);
    if count > ENUMERATION_LIMIT as f64 {
        return Err(Error::Size(format!("2^(rg) = {count} tuples exceeds the enumeration limit")));
    }
    let beta = table.beta_table(flipped);
    let mut by_median = vec![Mat::zeros(d, d); size];
    let mut scratch = Vec::with_capacity(g);
    let mut amp = vec![ONE; d];
    for_each_tuple(size, g, |t| {
        for (j, a) in amp.iter_mut().enumerate() {
            *a = t.iter().fold(ONE, |acc, &y| acc * beta[(j, y)]);
        }
        let m = median_index(t, &mut scratch);
        let target = &mut by_median[m];
        for k in 0..d {
            let ck = amp[k].conj();
            for j in 0..d {
                target[(j, k)] += amp[j] * ck;
            }
        }
    });
    Ok(GramFamily { g, flipped, by_median })
}

/// Joint median sum over pairs of tuples `(E, F)` with per-copy weight
/// `w[(e, f)]`: returns `Q[(a, b)] = Σ_{med E = a, med F = b} Π_i w[(e_i, f_i)]`.
///
/// Uses cumulative 2×2 class sums (`e ≤ a`, `f ≤ b`) and inclusion-exclusion.
pub fn median_pair_sum(w: &Mat, g: usize) -> Mat {
    let size = w.nrows();
    let h = g.div_ceil(2);
    // prefix[(a, b)] = Σ_{e ≤ a, f ≤ b} w
    let mut prefix = Mat::zeros(size, size);
    for a in 0..size {
        let mut row = ZERO;
        for b in 0..size {
            row += w[(a, b)];
            prefix[(a, b)] = row + if a > 0 { prefix[(a - 1, b)] } else { ZERO };
        }
    }
    let total = prefix[(size - 1, size - 1)];
    let mut cumulative = Mat::zeros(size, size);
    let mut coeffs = Vec::new();
    for n11 in 0..=g {
        for n12 in 0..=(g - n11) {
            for n21 in 0..=(g - n11 - n12) {
                if n11 + n12 >= h && n11 + n21 >= h {
                    let n22 = g - n11 - n12 - n21;
                    let coef = multinomial3(n11, n12, n21 + n22) * multinomial3(n21, n22, 0);
                    coeffs.push((n11, n12, n21, n22, coef));
                }
            }
        }
    }
    for a in 0..size {
        for b in 0..size {
            let s11 = prefix[(a, b)];
            let s12 = prefix[(a, size - 1)] - s11;
            let s21 = prefix[(size - 1, b)] - s11;
            let s22 = total - s11 - s12 - s21;
            let (p11, p12, p21, p22) = (powers(s11, g), powers(s12, g), powers(s21, g), powers(s22, g));
            let mut acc = ZERO;
            for &(n11, n12, n21, n22, coef) in &coeffs {
                acc += p11[n11] * p12[n12] * p21[n21] * p22[n22] * coef;
            }
            cumulative[(a, b)] = acc;
        }
    }
    let mut q = Mat::zeros(size, size);
    for a in 0..size {
        for b in 0..size {
            let mut v = cumulative[(a, b)];
            if a > 0 {
                v -= cumulative[(a - 1, b)];
            }
            if b > 0 {
                v -= cumulative[(a, b - 1)];
            }
            if a > 0 && b > 0 {
                v += cumulative[(a - 1, b - 1)];
            }
            q[(a, b)] = v;
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{build_tfim, eigensystem, HermitianOperator};
    use crate::linalg::{c, Vector};

    fn diag_es(values: &[f64]) -> EigenSystem {
        let v = Vector::from_iterator(values.len(), values.iter().map(|&x| c(x)));
        eigensystem(&HermitianOperator::new(Mat::from_diagonal(&v)).unwrap()).unwrap()
    }

    #[test]
    fn grid_examples() {
        let g = energy_grid(3, 8.0).unwrap();
        assert_eq!(g.energy_from_bits(&[1, 0, 1]).unwrap(), 5.0);
        let g = energy_grid(1, 2.0).unwrap();
        assert_eq!(g.points, vec![0.0, 1.0]);
        assert_eq!(g.spacing, 1.0);
        let g = energy_grid(2, 4.0).unwrap();
        assert_eq!(g.points, vec![0.0, 1.0, 2.0, 3.0]);
        assert!(energy_grid(2, 3.0).is_err());
        assert!(energy_grid(0, 4.0).is_err());
    }

    #[test]
    fn on_grid_eigenvalue_is_a_delta() {
        let es = diag_es(&[0.0, 1.0, 2.0, 3.0]);
        let grid = energy_grid(2, es.kappa).unwrap();
        let t = single_round_amplitudes(&es, &grid).unwrap();
        for j in 0..4 {
            assert!((t.gamma_at(j, 0).norm_sqr() - 1.0).abs() < 1e-15);
            for l in [-1i64, 1, 2] {
                assert_eq!(t.gamma_at(j, l), ZERO);
            }
        }
    }

    #[test]
    fn worst_case_two_point_mass() {
        for r in 1..8 {
            let size = 1 << r;
            let m = two_point_mass(0.5, size);
            // exact value 2/(N² sin²(π/2N)), tending to 8/π²
            let exact = 2.0 / ((size * size) as f64 * (PI / (2.0 * size as f64)).sin().powi(2));
            assert!((m - exact).abs() < 1e-12, "r={r}");
            assert!(m >= 8.0 / (PI * PI) - 1e-12);
        }
    }

    #[test]
    fn gamma_rows_are_normalised_and_sum_to_one() {
        let es = eigensystem(&build_tfim(2, 1.0, 0.5).unwrap()).unwrap();
        for r in 1..6 {
            let grid = energy_grid(r, es.kappa).unwrap();
            let t = single_round_amplitudes(&es, &grid).unwrap();
            for j in 0..4 {
                let norm: f64 = t.gamma.row(j).iter().map(|z| z.norm_sqr()).sum();
                let sum: C64 = t.gamma.row(j).iter().sum();
                assert!((norm - 1.0).abs() < 1e-12);
                assert!((sum - ONE).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn kappa_mismatch_is_rejected() {
        let es = diag_es(&[0.0, 1.0]);
        let grid = energy_grid(2, 4.0).unwrap();
        assert!(matches!(single_round_amplitudes(&es, &grid), Err(Error::Configuration(_))));
    }

    #[test]
    fn unitary_first_column_matches_table() {
        let es = eigensystem(&build_tfim(2, 1.0, 0.5).unwrap()).unwrap();
        let grid = energy_grid(3, es.kappa).unwrap();
        let t = single_round_amplitudes(&es, &grid).unwrap();
        for flipped in [false, true] {
            let us = qpe_unitaries(&es, &grid, flipped);
            for (j, u) in us.iter().enumerate() {
                assert!(linalg::unitarity_defect(u) < 1e-12);
                for y in 0..grid.size() {
                    assert!((u[(y, 0)] - t.beta_at(j, y, flipped)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn boosted_amplitude_examples() {
        let es = eigensystem(&build_tfim(2, 1.0, 0.5).unwrap()).unwrap();
        let grid = energy_grid(2, es.kappa).unwrap();
        let t = single_round_amplitudes(&es, &grid).unwrap();
        let e = grid.energy(3);
        assert_eq!(boosted_amplitude(&t, 1, &[e], false).unwrap(), t.beta_at(1, 3, false));
        assert!(matches!(
            boosted_amplitude(&t, 1, &[0.3 * grid.spacing], false),
            Err(Error::Domain(_))
        ));
        let es = diag_es(&[0.0, 1.0]);
        let grid = energy_grid(2, es.kappa).unwrap();
        let t = single_round_amplitudes(&es, &grid).unwrap();
        let e = grid.floor_value(1.0);
        assert_eq!(boosted_amplitude(&t, 1, &[e, e, e], false).unwrap(), ONE);
    }

    #[test]
    fn median_examples() {
        assert_eq!(median(&[2, 0, 2]).unwrap(), 2);
        assert_eq!(median(&[1, 1, 1]).unwrap(), 1);
        assert!(matches!(median(&[1, 2]), Err(Error::Configuration(_))));
    }

    #[test]
    fn dp_matches_enumeration() {
        let es = eigensystem(&build_tfim(2, 1.0, 0.5).unwrap()).unwrap();
        let grid = energy_grid(2, es.kappa).unwrap();
        let t = single_round_amplitudes(&es, &grid).unwrap();
        for g in [1, 3, 5] {
            for flipped in [false, true] {
                let a = gram_family(&t, g, flipped).unwrap();
                let b = gram_family_enumerated(&t, g, flipped).unwrap();
                for (x, y) in a.by_median.iter().zip(&b.by_median) {
                    assert!(linalg::max_abs_diff(x, y) < 1e-12);
                }
            }
        }
    }

    #[test]
    fn pair_sum_matches_enumeration() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for (size, g) in [(2, 1), (2, 3), (4, 3), (3, 5)] {
            let w = linalg::random_unitary(size, &mut rng);
            let q = median_pair_sum(&w, g);
            let mut oracle = Mat::zeros(size, size);
            let mut s = Vec::new();
            for_each_tuple(size, g, |e| {
                for_each_tuple(size, g, |f| {
                    let p = e.iter().zip(f).fold(ONE, |acc, (&a, &b)| acc * w[(a, b)]);
                    let (me, mf) = (median_index(e, &mut s), median_index(f, &mut s));
                    oracle[(me, mf)] += p;
                });
            });
            let err = linalg::max_abs_diff(&q, &oracle);
            assert!(err < 1e-12 * linalg::max_abs(&oracle).max(1.0), "size={size} g={g} err={err}");
        }
    }
}
