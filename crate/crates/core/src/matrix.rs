//! Dense complex matrices for operators on the sublattice/valley/spin space.
//!
//! Everything here is tiny (2x2 up to 8x8), immutable and exact up to f64
//! rounding: operations return fresh matrices, equality checks are
//! tolerance-based. The Hermitian eigensolver is a cyclic complex Jacobi
//! iteration; at these sizes it converges in a handful of sweeps.

use num_complex::Complex64;
use std::fmt;
use std::ops::{Add, Index, Mul, Neg, Sub};
use thiserror::Error;

/// Default absolute tolerance for entrywise comparisons.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Off-diagonal norm threshold at which the Jacobi iteration stops.
const JACOBI_THRESHOLD: f64 = 1e-13;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("dimension mismatch: {left}x{left} vs {right}x{right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("valley (tau) operators exist only for the z axis")]
    InvalidTauAxis,
}

/// Commutator `AB - BA` or anticommutator `AB + BA`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketKind {
    Commutator,
    Anticommutator,
}

/// Immutable dense complex square matrix, row-major storage.
#[derive(Clone, PartialEq)]
pub struct OperatorMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl OperatorMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Self {
            dim,
            entries: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from a row-major list of entries.
    pub fn from_entries(dim: usize, entries: Vec<Complex64>) -> Self {
        assert_eq!(entries.len(), dim * dim, "need dim*dim entries");
        Self { dim, entries }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Self { dim, entries }
    }

    /// Diagonal matrix from real entries.
    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.entries[i * values.len() + i] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.entries[row * self.dim + col] = value;
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e * factor).collect(),
        }
    }

    pub fn scale_re(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise difference to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim == other.dim && self.max_abs_diff(other) <= tol
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (self * &self.adjoint()).max_abs_diff(&Self::identity(self.dim)) <= tol
    }

    /// Kronecker product, `self` outermost.
    pub fn kron(&self, other: &Self) -> Self {
        let n = self.dim * other.dim;
        Self::from_fn(n, |i, j| {
            self.get(i / other.dim, j / other.dim) * other.get(i % other.dim, j % other.dim)
        })
    }

    /// Extracts the 2x2 diagonal block with index `block` (rows 2b..2b+2).
    pub fn diag_block2(&self, block: usize) -> Self {
        assert!(2 * block + 1 < self.dim);
        Self::from_fn(2, |i, j| self.get(2 * block + i, 2 * block + j))
    }

    /// Eigenvalues of a Hermitian matrix, ascending. Cyclic complex Jacobi;
    /// the input is assumed Hermitian (only the Hermitian part is seen).
    pub fn eigvalsh(&self) -> Vec<f64> {
        let n = self.dim;
        if n == 1 {
            return vec![self.get(0, 0).re];
        }
        if n == 2 {
            return eigvalsh2(self).to_vec();
        }
        let mut a = self.clone();
        let scale = a.max_abs().max(1.0);
        for _sweep in 0..60 {
            let mut off = 0.0_f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a.get(p, q).norm_sqr();
                }
            }
            if off.sqrt() <= JACOBI_THRESHOLD * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    jacobi_rotate(&mut a, p, q);
                }
            }
        }
        let mut vals: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
        vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
        vals
    }
}

/// Closed-form eigenvalues of a Hermitian 2x2 matrix, ascending.
pub fn eigvalsh2(m: &OperatorMatrix) -> [f64; 2] {
    assert_eq!(m.dim(), 2);
    let a = m.get(0, 0).re;
    let d = m.get(1, 1).re;
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + m.get(0, 1).norm_sqr()).sqrt();
    [mean - radius, mean + radius]
}

/// One complex Jacobi rotation annihilating the (p,q) entry: A <- V^H A V
/// with V = diag-phase times a real rotation in the (p,q) plane.
fn jacobi_rotate(a: &mut OperatorMatrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    let g = apq.norm();
    if g < f64::EPSILON * a.max_abs().max(1.0) {
        return;
    }
    let phase = apq / g;
    let tau = (a.get(q, q).re - a.get(p, p).re) / (2.0 * g);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let n = a.dim();
    // column update: col_p <- c col_p - s phase^* col_q ; col_q <- s col_p + c phase^* col_q
    for i in 0..n {
        let aip = a.get(i, p);
        let aiq = a.get(i, q);
        a.set(i, p, aip * c - aiq * s * phase.conj());
        a.set(i, q, aip * s + aiq * c * phase.conj());
    }
    // row update with the conjugate transpose of the same V
    for j in 0..n {
        let apj = a.get(p, j);
        let aqj = a.get(q, j);
        a.set(p, j, apj * c - aqj * s * phase);
        a.set(q, j, apj * s + aqj * c * phase);
    }
}

/// `AB - BA` (commutator) or `AB + BA` (anticommutator).
pub fn bracket(
    kind: BracketKind,
    a: &OperatorMatrix,
    b: &OperatorMatrix,
) -> Result<OperatorMatrix, AlgebraError> {
    if a.dim() != b.dim() {
        return Err(AlgebraError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let ab = a * b;
    let ba = b * a;
    Ok(match kind {
        BracketKind::Commutator => &ab - &ba,
        BracketKind::Anticommutator => &ab + &ba,
    })
}

pub fn commutator(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorMatrix {
    bracket(BracketKind::Commutator, a, b).expect("dimension mismatch")
}

impl Index<(usize, usize)> for OperatorMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.entries[i * self.dim + j]
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in add");
        OperatorMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in sub");
        OperatorMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in mul");
        let n = self.dim;
        let mut out = OperatorMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + aik * rhs.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        self.scale_re(-1.0)
    }
}

impl fmt::Debug for OperatorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "OperatorMatrix {}x{} [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let e = self.get(i, j);
                write!(f, "{:+.3}{:+.3}i ", e.re, e.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}
