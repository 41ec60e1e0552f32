//! States, observables, gates and mixed-unitary channels.
//!
//! Qubit conventions: `|0⟩` is the Z = +1 eigenstate, `|1⟩` the Z = −1
//! eigenstate, and the first tensor factor is the most significant index.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::qmath::{
    c64, eig_hermitian, eigenvalues_hermitian, expectation, tensor, ComplexMatrix,
    SpectralDecomposition, C64, DEFAULT_GROUP_TOL, DEFAULT_TOL,
};

const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const VARIANCE_CLAMP: f64 = 1e-12;

/// A density matrix together with its subsystem dimensions.
#[derive(Clone, Debug)]
pub struct DensityState {
    matrix: ComplexMatrix,
    dims: Vec<usize>,
}

impl DensityState {
    pub fn new(matrix: ComplexMatrix, dims: Vec<usize>) -> Result<Self> {
        let total: usize = dims.iter().product();
        if dims.is_empty() || total != matrix.dim() {
            return Err(Error::DimensionMismatch {
                expected: matrix.dim(),
                found: total,
            });
        }
        let defect = matrix.hermitian_defect();
        if defect > DEFAULT_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (defect {defect:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min_eig = eigenvalues_hermitian(&matrix)?[0];
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Self { matrix, dims })
    }

    /// Single-system state with `dims = [matrix.dim()]`.
    pub fn single(matrix: ComplexMatrix) -> Result<Self> {
        let d = matrix.dim();
        Self::new(matrix, vec![d])
    }

    /// `|ψ⟩⟨ψ|` for a ket, normalized here.
    pub fn pure(ket: &[C64]) -> Result<Self> {
        let norm = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let normalized: Vec<C64> = ket.iter().map(|z| z / norm).collect();
        Self::single(ComplexMatrix::projector(&normalized))
    }

    /// The Y = +1 eigenstate `(|0⟩ + i|1⟩)/√2`.
    pub fn plus_i() -> Self {
        Self::pure(&ket_plus_i()).expect("valid pure state")
    }

    pub(crate) fn from_trusted(matrix: ComplexMatrix, dims: Vec<usize>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), matrix.dim());
        Self { matrix, dims }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `self ⊗ other`; subsystem lists are concatenated.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Self::from_trusted(tensor(&self.matrix, &other.matrix), dims)
    }
}

/// A Hermitian operator with its spectral decomposition attached.
#[derive(Clone, Debug)]
pub struct Observable {
    matrix: ComplexMatrix,
    spectrum: SpectralDecomposition,
}

impl Observable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_group_tol(matrix, DEFAULT_GROUP_TOL)
    }

    pub fn with_group_tol(matrix: ComplexMatrix, group_tol: f64) -> Result<Self> {
        let spectrum = eig_hermitian(&matrix, group_tol)?;
        Ok(Self { matrix, spectrum })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn spectrum(&self) -> &SpectralDecomposition {
        &self.spectrum
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

#[derive(Clone, Debug)]
pub struct ChannelBranch {
    pub prob: f64,
    pub unitary: ComplexMatrix,
}

/// `ρ ↦ Σ_k p_k U_k ρ U_k†`
#[derive(Clone, Debug)]
pub struct MixedUnitaryChannel {
    branches: Vec<ChannelBranch>,
}

impl MixedUnitaryChannel {
    pub fn new(branches: Vec<(f64, ComplexMatrix)>) -> Result<Self> {
        let Some((_, first)) = branches.first() else {
            return Err(Error::InvalidChannel("no branches".into()));
        };
        let dim = first.dim();
        let mut total = 0.0;
        for (prob, u) in &branches {
            if !(0.0..=1.0).contains(prob) {
                return Err(Error::InvalidChannel(format!("probability {prob} outside [0, 1]")));
            }
            if u.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: u.dim(),
                });
            }
            if !u.is_unitary(DEFAULT_TOL) {
                return Err(Error::InvalidChannel("branch operator is not unitary".into()));
            }
            total += prob;
        }
        if (total - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidChannel(format!("probabilities sum to {total}")));
        }
        Ok(Self {
            branches: branches
                .into_iter()
                .map(|(prob, unitary)| ChannelBranch { prob, unitary })
                .collect(),
        })
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::new(vec![(1.0, u)])
    }

    /// Ideal gate with probability `1 − p`, identity with `p/2`, and `swap`
    /// with `p/2`.
    pub fn noisy(ideal: ComplexMatrix, swap: ComplexMatrix, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("error rate {p} outside [0, 1]")));
        }
        let id = ComplexMatrix::identity(ideal.dim());
        Self::new(vec![(1.0 - p, ideal), (0.5 * p, id), (0.5 * p, swap)])
    }

    /// Two-qubit non-ideal CNOT (control first).
    pub fn noisy_cnot(p: f64) -> Result<Self> {
        let g = standard_gates();
        Self::noisy(g.cnot, g.swap, p)
    }

    pub fn branches(&self) -> &[ChannelBranch] {
        &self.branches
    }

    pub fn dim(&self) -> usize {
        self.branches[0].unitary.dim()
    }

    pub fn apply(&self, rho: &DensityState) -> Result<DensityState> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rho.dim(),
            });
        }
        let mut out = ComplexMatrix::zeros(rho.dim());
        for b in self.branches.iter().filter(|b| b.prob > 0.0) {
            out = &out + &b.unitary.conjugate(rho.matrix()).scale_real(b.prob);
        }
        Ok(DensityState::from_trusted(out, rho.dims().to_vec()))
    }
}

pub fn apply_channel(ch: &MixedUnitaryChannel, rho: &DensityState) -> Result<DensityState> {
    ch.apply(rho)
}

#[derive(Clone, Debug)]
pub struct StandardGates {
    pub i2: ComplexMatrix,
    pub x: ComplexMatrix,
    pub y: ComplexMatrix,
    pub z: ComplexMatrix,
    pub h: ComplexMatrix,
    pub cnot: ComplexMatrix,
    pub swap: ComplexMatrix,
}

pub fn standard_gates() -> StandardGates {
    let r = FRAC_1_SQRT_2;
    StandardGates {
        i2: ComplexMatrix::identity(2),
        x: ComplexMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap(),
        y: ComplexMatrix::new(
            2,
            vec![c64(0.0, 0.0), c64(0.0, -1.0), c64(0.0, 1.0), c64(0.0, 0.0)],
        )
        .unwrap(),
        z: ComplexMatrix::from_diagonal(&[1.0, -1.0]),
        h: ComplexMatrix::from_real(2, &[r, r, r, -r]).unwrap(),
        cnot: cnot_on(2, 0, 1),
        swap: swap_on(2, 0, 1),
    }
}

fn bit(index: usize, qubit: usize, n_qubits: usize) -> usize {
    (index >> (n_qubits - 1 - qubit)) & 1
}

fn permutation(n_qubits: usize, f: impl Fn(usize) -> usize) -> ComplexMatrix {
    let dim = 1 << n_qubits;
    let mut m = ComplexMatrix::zeros(dim);
    for col in 0..dim {
        m[(f(col), col)] = c64(1.0, 0.0);
    }
    m
}

/// CNOT on an `n_qubits` register; qubit 0 is the first tensor factor.
pub fn cnot_on(n_qubits: usize, control: usize, target: usize) -> ComplexMatrix {
    assert!(control < n_qubits && target < n_qubits && control != target);
    permutation(n_qubits, |i| {
        if bit(i, control, n_qubits) == 1 {
            i ^ (1 << (n_qubits - 1 - target))
        } else {
            i
        }
    })
}

pub fn swap_on(n_qubits: usize, a: usize, b: usize) -> ComplexMatrix {
    assert!(a < n_qubits && b < n_qubits && a != b);
    permutation(n_qubits, |i| {
        if bit(i, a, n_qubits) != bit(i, b, n_qubits) {
            i ^ (1 << (n_qubits - 1 - a)) ^ (1 << (n_qubits - 1 - b))
        } else {
            i
        }
    })
}

/// Single-qubit `gate` on qubit `k`, identity elsewhere.
pub fn on_qubit(n_qubits: usize, k: usize, gate: &ComplexMatrix) -> ComplexMatrix {
    assert!(k < n_qubits && gate.dim() == 2);
    let i2 = ComplexMatrix::identity(2);
    (0..n_qubits)
        .map(|q| if q == k { gate } else { &i2 })
        .fold(ComplexMatrix::identity(1), |acc, m| tensor(&acc, m))
}

pub fn ket_zero() -> Vec<C64> {
    vec![c64(1.0, 0.0), c64(0.0, 0.0)]
}

pub fn ket_one() -> Vec<C64> {
    vec![c64(0.0, 0.0), c64(1.0, 0.0)]
}

pub fn ket_plus_i() -> Vec<C64> {
    vec![c64(FRAC_1_SQRT_2, 0.0), c64(0.0, FRAC_1_SQRT_2)]
}

/// `cos θ |0⟩ + sin θ |1⟩`
pub fn ket_theta(theta: f64) -> Vec<C64> {
    vec![c64(theta.cos(), 0.0), c64(theta.sin(), 0.0)]
}

fn check_dims(op: &ComplexMatrix, rho: &DensityState) -> Result<()> {
    if op.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            found: rho.dim(),
        });
    }
    Ok(())
}

/// `√(⟨A²⟩ − ⟨A⟩²)`
pub fn std_dev(a: &Observable, rho: &DensityState) -> Result<f64> {
    check_dims(a.matrix(), rho)?;
    let mean = expectation(a.matrix(), rho.matrix())?;
    let sq = a.matrix() * a.matrix();
    let var = expectation(&sq, rho.matrix())? - mean * mean;
    if var < -VARIANCE_CLAMP {
        return Err(Error::NegativeVariance(var));
    }
    Ok(var.max(0.0).sqrt())
}

/// `½ |Tr(ρ[A, B])|`
pub fn commutator_bound(a: &Observable, b: &Observable, rho: &DensityState) -> Result<f64> {
    check_dims(a.matrix(), rho)?;
    check_dims(b.matrix(), rho)?;
    let comm = a.matrix().commutator(b.matrix());
    Ok(0.5 * rho.matrix().trace_of_product(&comm).norm())
}
