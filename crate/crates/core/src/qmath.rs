//! Dense complex linear algebra for small operators.
//!
//! Everything here is sized for dimensions up to a few dozen: products are
//! naive triple loops and the Hermitian eigensolver is cyclic Jacobi.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default tolerance for matrix predicates, in max-entry norm.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default gap below which eigenvalues are merged into one spectral branch.
pub const DEFAULT_GROUP_TOL: f64 = 1e-8;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_OFF_NORM_TOL: f64 = 1e-12;
const IMAG_RESIDUAL_TOL: f64 = 1e-9;

pub const fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("matrix dimension must be positive".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Ok(Self { dim, data: entries })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Self {
            dim,
            data: vec![C64::default(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from real row-major entries.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::new(dim, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// `|ket⟩⟨bra|`
    pub fn outer(ket: &[C64], bra: &[C64]) -> Self {
        assert_eq!(ket.len(), bra.len(), "outer product of unequal lengths");
        let dim = ket.len();
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m.data[r * dim + c] = ket[r] * bra[c].conj();
            }
        }
        m
    }

    /// `|v⟩⟨v|` for a (not necessarily normalized) vector.
    pub fn projector(v: &[C64]) -> Self {
        Self::outer(v, v)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out.data[c * n + r] = self.data[r * n + c].conj();
            }
        }
        out
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// `Tr(self · other)` without forming the product.
    pub fn trace_of_product(&self, other: &Self) -> C64 {
        assert_eq!(self.dim, other.dim, "trace of product of unequal dimensions");
        let n = self.dim;
        let mut acc = C64::default();
        for r in 0..n {
            for c in 0..n {
                acc += self.data[r * n + c] * other.data[c * n + r];
            }
        }
        acc
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.dim, v.len(), "vector length does not match matrix");
        let n = self.dim;
        (0..n)
            .map(|r| (0..n).map(|c| self.data[r * n + c] * v[c]).sum())
            .collect()
    }

    /// `self · other · self†`
    pub fn conjugate(&self, other: &Self) -> Self {
        &(self * other) * &self.adjoint()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn kron(&self, other: &Self) -> Self {
        tensor(self, other)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim, "comparison of unequal dimensions");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim == other.dim && self.max_abs_diff(other) <= tol
    }

    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                let d = (self.data[r * n + c] - self.data[c * n + r].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (&self.adjoint() * self).approx_eq(&Self::identity(self.dim), tol)
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && (self * self).approx_eq(self, tol)
    }

    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        if !self.is_hermitian(tol) {
            return false;
        }
        match eigenvalues_hermitian(self) {
            Ok(vals) => vals.first().is_none_or(|&v| v >= -tol),
            Err(_) => false,
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for r in 0..self.dim {
            write!(f, "  ")?;
            for c in 0..self.dim {
                let z = self.data[r * self.dim + c];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "product of unequal dimensions");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.data[r * n + k];
                if a == C64::default() {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[r * n..(r + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "sum of unequal dimensions");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "difference of unequal dimensions");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Kronecker product; `a` indexes the major block, `b` the minor one.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (na, nb) = (a.dim, b.dim);
    let n = na * nb;
    let mut out = ComplexMatrix::zeros(n);
    for ar in 0..na {
        for ac in 0..na {
            let x = a.data[ar * na + ac];
            if x == C64::default() {
                continue;
            }
            for br in 0..nb {
                for bc in 0..nb {
                    out.data[(ar * nb + br) * n + ac * nb + bc] = x * b.data[br * nb + bc];
                }
            }
        }
    }
    out
}

/// `Re Tr(op · rho)`, failing if the discarded imaginary part is not noise.
pub fn expectation(op: &ComplexMatrix, rho: &ComplexMatrix) -> Result<f64> {
    if op.dim != rho.dim {
        return Err(Error::DimensionMismatch {
            expected: op.dim,
            found: rho.dim,
        });
    }
    let t = op.trace_of_product(rho);
    if t.im.abs() > IMAG_RESIDUAL_TOL {
        return Err(Error::ImaginaryResidual(t.im));
    }
    Ok(t.re)
}

/// One eigenspace of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct SpectralBranch {
    pub value: f64,
    pub projector: ComplexMatrix,
}

/// Eigenvalue → projector table, eigenvalues strictly increasing.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    branches: Vec<SpectralBranch>,
    source_dim: usize,
}

impl SpectralDecomposition {
    pub fn branches(&self) -> &[SpectralBranch] {
        &self.branches
    }

    pub fn source_dim(&self) -> usize {
        self.source_dim
    }

    pub fn values(&self) -> Vec<f64> {
        self.branches.iter().map(|b| b.value).collect()
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// `Σ f(value) Π`
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.source_dim);
        for b in &self.branches {
            out = &out + &b.projector.scale_real(f(b.value));
        }
        out
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_values(|v| v)
    }

    /// True when both spectra have the same eigenvalue set within `tol`.
    pub fn same_values(&self, other: &Self, tol: f64) -> bool {
        self.branches.len() == other.branches.len()
            && self
                .branches
                .iter()
                .zip(&other.branches)
                .all(|(a, b)| (a.value - b.value).abs() < tol)
    }
}

/// Eigenvalues (ascending) and eigenvectors (columns of the returned matrix)
/// of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn jacobi_hermitian(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let defect = h.hermitian_defect();
    if defect > DEFAULT_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let n = h.dim;
    let mut a = h.clone();
    let mut v = ComplexMatrix::identity(n);

    let off_norm = |a: &ComplexMatrix| -> f64 {
        let mut s = 0.0;
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    s += a.data[r * n + c].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = off_norm(&a) < JACOBI_OFF_NORM_TOL;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
        converged = off_norm(&a) < JACOBI_OFF_NORM_TOL;
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps,
            off_norm: off_norm(&a),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.data[i * n + i].re).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&i| diag[i]).collect();
    let mut vecs = ComplexMatrix::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vecs.data[r * n + dst] = v.data[r * n + src];
        }
    }
    Ok((values, vecs))
}

// Annihilates a[p][q] with G = D·P, where D rephases column q so that the
// pivot is real and P is the real Jacobi rotation. Applies A ← G†AG, V ← VG.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let n = a.dim;
    let apq = a.data[p * n + q];
    let r = apq.norm();
    let app = a.data[p * n + p].re;
    let aqq = a.data[q * n + q].re;
    if r == 0.0 || r < 1e-18 * (app.abs() + aqq.abs()) {
        a.data[p * n + q] = C64::default();
        a.data[q * n + p] = C64::default();
        return;
    }
    let phase = apq / r;
    let theta = (aqq - app) / (2.0 * r);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let g_pp = C64::new(c, 0.0);
    let g_pq = C64::new(s, 0.0);
    let g_qp = phase.conj() * -s;
    let g_qq = phase.conj() * c;

    for k in 0..n {
        let akp = a.data[k * n + p];
        let akq = a.data[k * n + q];
        a.data[k * n + p] = akp * g_pp + akq * g_qp;
        a.data[k * n + q] = akp * g_pq + akq * g_qq;
        let vkp = v.data[k * n + p];
        let vkq = v.data[k * n + q];
        v.data[k * n + p] = vkp * g_pp + vkq * g_qp;
        v.data[k * n + q] = vkp * g_pq + vkq * g_qq;
    }
    for k in 0..n {
        let apk = a.data[p * n + k];
        let aqk = a.data[q * n + k];
        a.data[p * n + k] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a.data[q * n + k] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a.data[p * n + q] = C64::default();
    a.data[q * n + p] = C64::default();
    a.data[p * n + p].im = 0.0;
    a.data[q * n + q].im = 0.0;
}

pub fn eigenvalues_hermitian(h: &ComplexMatrix) -> Result<Vec<f64>> {
    jacobi_hermitian(h).map(|(vals, _)| vals)
}

/// Spectral decomposition of a Hermitian matrix. Eigenvalues closer than
/// `group_tol` (chained through consecutive gaps) share one branch whose
/// value is their mean.
pub fn eig_hermitian(h: &ComplexMatrix, group_tol: f64) -> Result<SpectralDecomposition> {
    let (values, vecs) = jacobi_hermitian(h)?;
    let n = h.dim;
    let column = |j: usize| -> Vec<C64> { (0..n).map(|r| vecs.data[r * n + j]).collect() };

    let mut branches: Vec<SpectralBranch> = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] < group_tol {
            end += 1;
        }
        let mut projector = ComplexMatrix::zeros(n);
        for j in start..end {
            projector = &projector + &ComplexMatrix::projector(&column(j));
        }
        let value = values[start..end].iter().sum::<f64>() / (end - start) as f64;
        branches.push(SpectralBranch { value, projector });
        start = end;
    }
    Ok(SpectralDecomposition {
        branches,
        source_dim: n,
    })
}
