//! Seeded random states, unitaries and measurement models.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::mdr_theory::{Interaction, MeasurementModel};
use crate::qmath::{c64, ComplexMatrix, C64};
use crate::qmodel::{DensityState, Observable};

/// Complex Ginibre matrix: i.i.d. standard normal real and imaginary parts.
pub fn gaussian_matrix<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let entries = (0..dim * dim)
        .map(|_| c64(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    ComplexMatrix::new(dim, entries).expect("dim² entries")
}

/// Haar-distributed unitary: Gram–Schmidt on the columns of a Ginibre
/// matrix (the implied R factor has a positive diagonal).
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = gaussian_matrix(dim, rng);
    let mut cols: Vec<Vec<C64>> = (0..dim).map(|c| (0..dim).map(|r| g[(r, c)]).collect()).collect();
    for j in 0..dim {
        for k in 0..j {
            let (done, rest) = cols.split_at_mut(j);
            let q = &done[k];
            let v = &mut rest[0];
            let overlap: C64 = q.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= overlap * qi;
            }
        }
        let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in cols[j].iter_mut() {
            *z /= norm;
        }
    }
    let mut u = ComplexMatrix::zeros(dim);
    for (c, col) in cols.iter().enumerate() {
        for (r, &z) in col.iter().enumerate() {
            u[(r, c)] = z;
        }
    }
    u
}

/// Full-rank mixed state `GG† / Tr(GG†)`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityState {
    let g = gaussian_matrix(dim, rng);
    let w = &g * &g.adjoint();
    let tr = w.trace().re;
    let mut rho = w.scale_real(1.0 / tr);
    // exact Hermitian symmetry for validation
    rho = (&rho + &rho.adjoint()).scale_real(0.5);
    DensityState::single(rho).expect("Wishart matrix is a valid state")
}

pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = gaussian_matrix(dim, rng);
    (&g + &g.adjoint()).scale_real(0.5)
}

/// `V diag(values) V†` with Haar `V`.
pub fn hermitian_with_spectrum<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> ComplexMatrix {
    let v = haar_unitary(values.len(), rng);
    let h = v.conjugate(&ComplexMatrix::from_diagonal(values));
    (&h + &h.adjoint()).scale_real(0.5)
}

/// A random signal ⊗ meter model with `signal_dim, meter_dim ∈ {2, 3, 4}`,
/// Haar interaction, random meter state and random B. A and M share the
/// same set of distinct eigenvalues (the larger one is degenerate), so the
/// precision table is defined.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R) -> Result<(MeasurementModel, DensityState)> {
    let signal_dim = rng.random_range(2..=4);
    let meter_dim = rng.random_range(2..=4);
    let k = signal_dim.min(meter_dim);
    let distinct: Vec<f64> = (0..k)
        .map(|i| 1.5 * i as f64 - 2.0 + rng.random_range(-0.4..0.4))
        .collect();
    let spread = |d: usize| -> Vec<f64> { (0..d).map(|i| distinct[i % k]).collect() };

    let a = hermitian_with_spectrum(&spread(signal_dim), rng);
    let m = hermitian_with_spectrum(&spread(meter_dim), rng);
    let b = random_hermitian(signal_dim, rng);
    let u = haar_unitary(signal_dim * meter_dim, rng);
    let mu = random_density(meter_dim, rng);
    let rho = random_density(signal_dim, rng);

    let model = MeasurementModel::new(
        Interaction::Unitary(u),
        mu,
        Observable::new(m)?,
        Observable::new(a)?,
        Observable::new(b)?,
    )?;
    Ok((model, rho))
}
