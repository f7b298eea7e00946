//! Dense complex linear algebra and the operator zoo used by every model:
//! Pauli matrices, truncated bosonic ladder operators, Kronecker products,
//! density matrices and Haar-random pure states.
//!
//! Basis convention for a qubit: index 0 is `|0⟩`, the `+1` eigenstate of
//! `σ_z`, and `σ_-` maps index 0 to index 1. With this choice the decay
//! channel `σ_-` drains `p₀` into `p₁`.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Seedable random source. One instance per owner; never shared across threads.
pub type RandomSource = rand_chacha::ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> RandomSource {
    RandomSource::seed_from_u64(seed)
}

/// Hermiticity tolerance enforced on density matrices at construction.
pub const STATE_HERMITIAN_TOL: f64 = 1e-12;
/// Trace tolerance enforced on density matrices at construction.
pub const STATE_TRACE_TOL: f64 = 1e-12;
/// Hermiticity tolerance for observables.
pub const OBSERVABLE_HERMITIAN_TOL: f64 = 1e-10;

/// Dense complex matrix in row-major order.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// Outer product `|ψ⟩⟨φ|`.
    pub fn outer(ket: &[C64], bra: &[C64]) -> Self {
        let mut m = Self::zeros(ket.len(), bra.len());
        for (i, k) in ket.iter().enumerate() {
            for (j, b) in bra.iter().enumerate() {
                m[(i, j)] = k * b.conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// Largest absolute entry-wise difference, `‖a − b‖_max`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `‖A − A†‖_max`.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let row = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `AB − BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        Ok(&self.matmul(other)? - &other.matmul(self)?)
    }

    /// `AB + BA`.
    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        Ok(&self.matmul(other)? + &other.matmul(self)?)
    }

    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    /// `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let mut out = self.clone();
        let n = self.rows;
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
            }
        }
        out
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = self.hermitian_part();
        let n = h.rows;
        let m = nalgebra::DMatrix::<C64>::from_fn(n, n, |i, j| h[(i, j)]);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub(crate) fn to_nalgebra(&self) -> nalgebra::DMatrix<C64> {
        nalgebra::DMatrix::<C64>::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

    pub(crate) fn from_nalgebra(m: &nalgebra::DMatrix<C64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] = m[(i, j)];
            }
        }
        out
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

/// Panics on shape mismatch; use [`ComplexMatrix::matmul`] for a fallible product.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
    /// `σ_+ = (σ_x + iσ_y)/2`, maps index 1 to index 0.
    Plus,
    /// `σ_- = (σ_x − iσ_y)/2`, maps index 0 to index 1.
    Minus,
}

pub fn pauli(which: Pauli) -> ComplexMatrix {
    let o = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let data = match which {
        Pauli::X => vec![o, one, one, o],
        Pauli::Y => vec![o, -i, i, o],
        Pauli::Z => vec![one, o, o, -one],
        Pauli::Plus => vec![o, one, o, o],
        Pauli::Minus => vec![o, o, one, o],
    };
    ComplexMatrix {
        rows: 2,
        cols: 2,
        data,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    /// Annihilation `a`.
    Lower,
    /// Creation `a†`.
    Raise,
    /// Number operator `a†a`.
    Number,
}

/// Truncated bosonic operators on the Fock states `|0⟩ … |n_max − 1⟩`.
pub fn ladder(n_max: usize, which: Ladder) -> Result<ComplexMatrix> {
    if n_max < 2 {
        return Err(Error::InvalidDimension(format!(
            "Fock truncation must be at least 2, got {n_max}"
        )));
    }
    let mut lower = ComplexMatrix::zeros(n_max, n_max);
    for n in 1..n_max {
        lower[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(match which {
        Ladder::Lower => lower,
        Ladder::Raise => lower.adjoint(),
        Ladder::Number => {
            ComplexMatrix::from_real_diag(&(0..n_max).map(|n| n as f64).collect::<Vec<_>>())
        }
    })
}

/// Kronecker product; entry `(i·d_b + k, j·d_b + l)` is `a[i,j]·b[k,l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// `Tr(A·B)` without forming the product.
pub(crate) fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let n = a.rows;
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a.data[i * n + j] * b.data[j * n + i];
        }
    }
    acc
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    /// Normalizes `amplitudes`; fails on a zero vector.
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|z| z / norm).collect(),
        })
    }

    /// Computational basis state `|index⟩` in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::OutOfRange(format!(
                "basis index {index} in dimension {dim}"
            )));
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { amplitudes: amps })
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &PureState) -> PureState {
        let amps = self
            .amplitudes
            .iter()
            .flat_map(|a| other.amplitudes.iter().map(move |b| a * b))
            .collect();
        PureState { amplitudes: amps }
    }
}

/// Draws a Haar-distributed pure state by normalizing an i.i.d. complex
/// Gaussian vector.
pub fn haar_random_pure(dim: usize, rng: &mut RandomSource) -> Result<PureState> {
    if dim < 2 {
        return Err(Error::InvalidDimension(format!(
            "Haar state needs dim >= 2, got {dim}"
        )));
    }
    let amps: Vec<C64> = (0..dim)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im)
        })
        .collect();
    PureState::new(amps)
}

/// Hermitian, unit-trace state `ρ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace. Positivity is not checked here;
    /// see [`DensityMatrix::min_eigenvalue`].
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::InvalidState(format!(
                "density matrix must be square, got {}x{}",
                mat.rows, mat.cols
            )));
        }
        if !mat.is_finite() {
            return Err(Error::InvalidState("non-finite entries".into()));
        }
        let defect = mat.hermiticity_defect();
        if defect > STATE_HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: defect });
        }
        let tr = mat.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > STATE_TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        Ok(Self { mat })
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self {
            mat: ComplexMatrix::outer(psi.amplitudes(), psi.amplitudes()),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.rows
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        trace_of_product(&self.mat, &self.mat).re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.mat.hermitian_eigenvalues()[0]
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            mat: kron(&self.mat, &other.mat),
        }
    }
}

/// `Re Tr(O·ρ)` for a Hermitian observable `O`.
pub fn expectation(rho: &DensityMatrix, obs: &ComplexMatrix) -> Result<f64> {
    if obs.rows != rho.dim() || obs.cols != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: obs.rows,
        });
    }
    let defect = obs.hermiticity_defect();
    if defect > OBSERVABLE_HERMITIAN_TOL {
        return Err(Error::NotHermitian { deviation: defect });
    }
    let v = trace_of_product(obs, &rho.mat);
    debug_assert!(v.im.abs() <= 1e-9, "expectation has imaginary part {}", v.im);
    Ok(v.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn pauli_z_is_diagonal() {
        let z = pauli(Pauli::Z);
        assert_eq!(z, ComplexMatrix::from_real_diag(&[1.0, -1.0]));
    }

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (pauli(Pauli::X), pauli(Pauli::Y), pauli(Pauli::Z));
        let (p, m) = (pauli(Pauli::Plus), pauli(Pauli::Minus));
        let id = ComplexMatrix::identity(2);

        assert!(m.anticommutator(&p).unwrap().max_abs_diff(&id) < 1e-14);
        let xy = x.commutator(&y).unwrap();
        assert!(xy.max_abs_diff(&z.scale(c(0.0, 2.0))) < 1e-14);
        let yz = y.commutator(&z).unwrap();
        assert!(yz.max_abs_diff(&x.scale(c(0.0, 2.0))) < 1e-14);
        for s in [&x, &y, &z] {
            assert!((s * s).max_abs_diff(&id) < 1e-14);
        }
        // σ_± = (σ_x ± iσ_y)/2
        let plus = (&x + &y.scale(c(0.0, 1.0))).scale_real(0.5);
        assert!(plus.max_abs_diff(&p) < 1e-14);
        assert!(p.commutator(&m).unwrap().max_abs_diff(&z) < 1e-14);
    }

    #[test]
    fn sigma_minus_moves_index_zero_to_one() {
        let m = pauli(Pauli::Minus);
        let out = m.apply(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(out, vec![c(0.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn ladder_number_and_lowering() {
        let n = ladder(3, Ladder::Number).unwrap();
        assert_eq!(n, ComplexMatrix::from_real_diag(&[0.0, 1.0, 2.0]));

        let a = ladder(4, Ladder::Lower).unwrap();
        let ket2 = PureState::basis(4, 2).unwrap();
        let out = a.apply(ket2.amplitudes()).unwrap();
        assert_abs_diff_eq!(out[1].re, 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(out.iter().filter(|z| z.norm() > 0.0).count(), 1);

        let ad = ladder(4, Ladder::Raise).unwrap();
        assert_eq!(ad, a.adjoint());
        assert!((&ad * &a).max_abs_diff(&ladder(4, Ladder::Number).unwrap()) < 1e-14);
    }

    #[test]
    fn ladder_truncation_defect() {
        let n_max = 6;
        let a = ladder(n_max, Ladder::Lower).unwrap();
        let ad = ladder(n_max, Ladder::Raise).unwrap();
        let comm = a.commutator(&ad).unwrap();
        for i in 0..n_max {
            for j in 0..n_max {
                let expected = match (i == j, i == n_max - 1) {
                    (true, false) => 1.0,
                    // [a, a†] = 1 − n_max·|n_max−1⟩⟨n_max−1| on the truncated space
                    (true, true) => 1.0 - n_max as f64,
                    _ => 0.0,
                };
                assert_abs_diff_eq!(comm[(i, j)].re, expected, epsilon = 1e-13);
                assert_abs_diff_eq!(comm[(i, j)].im, 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn ladder_rejects_small_truncation() {
        assert!(matches!(
            ladder(1, Ladder::Lower),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn kron_examples() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        let zi = kron(&pauli(Pauli::Z), &i2);
        assert_eq!(zi[(0, 0)], c(1.0, 0.0));
        assert_eq!(zi[(3, 3)], c(-1.0, 0.0));
    }

    #[test]
    fn kron_matches_index_formula() {
        let mut rng = seeded_rng(7);
        let a = random_matrix(3, 2, &mut rng);
        let b = random_matrix(2, 4, &mut rng);
        let k = kron(&a, &b);
        assert_eq!((k.rows(), k.cols()), (6, 8));
        for i in 0..3 {
            for j in 0..2 {
                for p in 0..2 {
                    for q in 0..4 {
                        assert_eq!(k[(i * 2 + p, j * 4 + q)], a[(i, j)] * b[(p, q)]);
                    }
                }
            }
        }
    }

    fn random_matrix(r: usize, c: usize, rng: &mut RandomSource) -> ComplexMatrix {
        let data = (0..r * c)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        ComplexMatrix::from_vec(r, c, data).unwrap()
    }

    fn random_hermitian(d: usize, rng: &mut RandomSource) -> ComplexMatrix {
        random_matrix(d, d, rng).hermitian_part()
    }

    #[test]
    fn expectation_examples() {
        let ground = DensityMatrix::from_pure(&PureState::basis(2, 0).unwrap());
        assert_abs_diff_eq!(
            expectation(&ground, &pauli(Pauli::Z)).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        let mixed = DensityMatrix::maximally_mixed(2);
        assert_abs_diff_eq!(
            expectation(&mixed, &pauli(Pauli::X)).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        let plus = PureState::new(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let rho = DensityMatrix::from_pure(&plus);
        assert_abs_diff_eq!(
            expectation(&rho, &pauli(Pauli::X)).unwrap(),
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn expectation_errors() {
        let rho = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            expectation(&rho, &ComplexMatrix::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            expectation(&rho, &pauli(Pauli::Plus)),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn expectation_is_linear_in_observable() {
        let mut rng = seeded_rng(11);
        for _ in 0..20 {
            let psi = haar_random_pure(4, &mut rng).unwrap();
            let rho = DensityMatrix::from_pure(&psi);
            let a = random_hermitian(4, &mut rng);
            let b = random_hermitian(4, &mut rng);
            let (alpha, beta) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
            let combo = &a.scale_real(alpha) + &b.scale_real(beta);
            let lhs = expectation(&rho, &combo).unwrap();
            let rhs =
                alpha * expectation(&rho, &a).unwrap() + beta * expectation(&rho, &b).unwrap();
            assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12);
        }
    }

    #[test]
    fn haar_states_are_normalized_and_pure() {
        let mut rng = seeded_rng(3);
        for _ in 0..100 {
            let psi = haar_random_pure(2, &mut rng).unwrap();
            assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-12);
            let rho = DensityMatrix::from_pure(&psi);
            assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);
            assert!(DensityMatrix::new(rho.matrix().clone()).is_ok());
        }
    }

    #[test]
    fn haar_sz_mean_vanishes() {
        let mut rng = seeded_rng(2024);
        let z = pauli(Pauli::Z);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| {
                let rho = DensityMatrix::from_pure(&haar_random_pure(2, &mut rng).unwrap());
                expectation(&rho, &z).unwrap()
            })
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 0.01, "mean ⟨σ_z⟩ = {mean}");
    }

    #[test]
    fn haar_is_reproducible() {
        let a = haar_random_pure(5, &mut seeded_rng(99)).unwrap();
        let b = haar_random_pure(5, &mut seeded_rng(99)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(ComplexMatrix::identity(2)).is_err());
        assert!(DensityMatrix::new(pauli(Pauli::Plus)).is_err());
        let rho = DensityMatrix::maximally_mixed(3);
        assert_abs_diff_eq!(rho.min_eigenvalue(), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn eigenvalues_of_pauli_x() {
        let ev = pauli(Pauli::X).hermitian_eigenvalues();
        assert_abs_diff_eq!(ev[0], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 1.0, epsilon = 1e-12);
    }
}
