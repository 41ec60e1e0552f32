//! Measurement precision ε(A) and disturbance η(B) for a signal ⊗ meter
//! measurement model, computed two ways:
//!
//! * directly, as RMS values of Heisenberg-picture operator differences;
//! * operationally, as the RMS change of a weak-valued joint distribution
//!   over initial and final eigenvalues.
//!
//! The two routes agree identically, which the property tests check on
//! random models. Mixed-unitary interactions are handled by averaging the
//! per-branch squared quantities (and table entries) with the branch
//! probabilities.

use crate::error::{Error, Result};
use crate::qmath::{jacobi_hermitian, tensor, ComplexMatrix, C64, DEFAULT_GROUP_TOL};
use crate::qmodel::{commutator_bound, std_dev, DensityState, MixedUnitaryChannel, Observable};

/// Slack applied to both inequality verdicts.
pub const VERDICT_SLACK: f64 = 1e-9;
/// Gap below which difference values are merged.
pub const DEFAULT_BIN_TOL: f64 = 1e-8;
const RADICAND_CLAMP: f64 = 1e-12;

/// Which pair of observables a weak-valued table correlates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// initial B on the signal, final B on the signal
    Disturbance,
    /// initial A on the signal, final M on the meter
    Precision,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Disturbance => "disturbance",
            Mode::Precision => "precision",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disturbance" => Ok(Mode::Disturbance),
            "precision" => Ok(Mode::Precision),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Interaction {
    Unitary(ComplexMatrix),
    Channel(MixedUnitaryChannel),
}

impl Interaction {
    pub fn dim(&self) -> usize {
        match self {
            Interaction::Unitary(u) => u.dim(),
            Interaction::Channel(ch) => ch.dim(),
        }
    }

    fn branches(&self) -> Vec<(f64, &ComplexMatrix)> {
        match self {
            Interaction::Unitary(u) => vec![(1.0, u)],
            Interaction::Channel(ch) => ch
                .branches()
                .iter()
                .filter(|b| b.prob > 0.0)
                .map(|b| (b.prob, &b.unitary))
                .collect(),
        }
    }
}

/// Meter preparation μ, interaction U, readout M, plus the measured (A) and
/// disturbed (B) signal observables.
#[derive(Clone, Debug)]
pub struct MeasurementModel {
    signal_dim: usize,
    meter_dim: usize,
    interaction: Interaction,
    meter_state: DensityState,
    meter_readout: Observable,
    measured_obs: Observable,
    disturbed_obs: Observable,
}

fn expect_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

impl MeasurementModel {
    pub fn new(
        interaction: Interaction,
        meter_state: DensityState,
        meter_readout: Observable,
        measured_obs: Observable,
        disturbed_obs: Observable,
    ) -> Result<Self> {
        let signal_dim = measured_obs.dim();
        let meter_dim = meter_state.dim();
        expect_dim(signal_dim, disturbed_obs.dim())?;
        expect_dim(meter_dim, meter_readout.dim())?;
        expect_dim(signal_dim * meter_dim, interaction.dim())?;
        if let Interaction::Unitary(u) = &interaction {
            if !u.is_unitary(crate::qmath::DEFAULT_TOL) {
                return Err(Error::InvalidParameter("interaction is not unitary".into()));
            }
        }
        Ok(Self {
            signal_dim,
            meter_dim,
            interaction,
            meter_state,
            meter_readout,
            measured_obs,
            disturbed_obs,
        })
    }

    pub fn signal_dim(&self) -> usize {
        self.signal_dim
    }

    pub fn meter_dim(&self) -> usize {
        self.meter_dim
    }

    pub fn interaction(&self) -> &Interaction {
        &self.interaction
    }

    pub fn meter_state(&self) -> &DensityState {
        &self.meter_state
    }

    pub fn meter_readout(&self) -> &Observable {
        &self.meter_readout
    }

    pub fn measured_obs(&self) -> &Observable {
        &self.measured_obs
    }

    pub fn disturbed_obs(&self) -> &Observable {
        &self.disturbed_obs
    }

    /// Whether M and A have the same eigenvalue set.
    pub fn spectra_compatible(&self) -> bool {
        self.meter_readout
            .spectrum()
            .same_values(self.measured_obs.spectrum(), DEFAULT_GROUP_TOL)
    }

    fn on_signal(&self, op: &ComplexMatrix) -> ComplexMatrix {
        tensor(op, &ComplexMatrix::identity(self.meter_dim))
    }

    fn on_meter(&self, op: &ComplexMatrix) -> ComplexMatrix {
        tensor(&ComplexMatrix::identity(self.signal_dim), op)
    }

    fn joint_state(&self, rho: &DensityState) -> Result<ComplexMatrix> {
        expect_dim(self.signal_dim, rho.dim())?;
        Ok(tensor(rho.matrix(), self.meter_state.matrix()))
    }

    /// Eigen-ensemble `{(λ, ψ)}` of ρ⊗μ built from product eigenvectors.
    fn joint_ensemble(&self, rho: &DensityState) -> Result<Vec<(f64, Vec<C64>)>> {
        expect_dim(self.signal_dim, rho.dim())?;
        let (rv, rvec) = jacobi_hermitian(rho.matrix())?;
        let (mv, mvec) = jacobi_hermitian(self.meter_state.matrix())?;
        let column = |m: &ComplexMatrix, j: usize| -> Vec<C64> {
            (0..m.dim()).map(|r| m[(r, j)]).collect()
        };
        let mut out = Vec::with_capacity(rv.len() * mv.len());
        for (i, &lr) in rv.iter().enumerate() {
            let a = column(&rvec, i);
            for (j, &lm) in mv.iter().enumerate() {
                let b = column(&mvec, j);
                let ket = a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect();
                out.push((lr * lm, ket));
            }
        }
        Ok(out)
    }

    // Σ_k p_k ⟨(U_k† F U_k − I)²⟩ over ρ⊗μ, evaluated as Σ λ ‖D ψ‖² over the
    // eigen-ensemble so that small results carry no cancellation error.
    fn mean_square_change(
        &self,
        final_op: &ComplexMatrix,
        initial_op: &ComplexMatrix,
        rho: &DensityState,
    ) -> Result<f64> {
        let ensemble = self.joint_ensemble(rho)?;
        let mut acc = 0.0;
        for (prob, u) in self.interaction.branches() {
            let evolved = &(&u.adjoint() * final_op) * u;
            let diff = &evolved - initial_op;
            for (weight, ket) in &ensemble {
                let norm_sq: f64 = diff.apply(ket).iter().map(|z| z.norm_sqr()).sum();
                acc += prob * weight * norm_sq;
            }
        }
        Ok(acc)
    }
}

fn clamped_sqrt(x: f64) -> f64 {
    if x < 0.0 && x >= -RADICAND_CLAMP {
        0.0
    } else {
        x.sqrt()
    }
}

/// ε(A) = ⟨(U†(I⊗M)U − A⊗I)²⟩^½
pub fn epsilon_direct(m: &MeasurementModel, rho: &DensityState) -> Result<f64> {
    let ms = m.mean_square_change(
        &m.on_meter(m.meter_readout.matrix()),
        &m.on_signal(m.measured_obs.matrix()),
        rho,
    )?;
    Ok(clamped_sqrt(ms))
}

/// η(B) = ⟨(U†(B⊗I)U − B⊗I)²⟩^½
pub fn eta_direct(m: &MeasurementModel, rho: &DensityState) -> Result<f64> {
    let b = m.on_signal(m.disturbed_obs.matrix());
    Ok(clamped_sqrt(m.mean_square_change(&b, &b, rho)?))
}

/// Weak-valued joint quasi-distribution over (initial, final) eigenvalues.
/// Entries may be negative.
#[derive(Clone, Debug)]
pub struct WeakJointTable {
    pub initial_values: Vec<f64>,
    pub final_values: Vec<f64>,
    /// `entries[i][f]`
    pub entries: Vec<Vec<f64>>,
}

impl WeakJointTable {
    pub fn total(&self) -> f64 {
        self.entries.iter().flatten().sum()
    }

    /// Sum over initial values, i.e. the strong distribution of the final
    /// readout.
    pub fn final_marginal(&self) -> Vec<f64> {
        (0..self.final_values.len())
            .map(|f| self.entries.iter().map(|row| row[f]).sum())
            .collect()
    }

    pub fn get(&self, initial: f64, fin: f64, tol: f64) -> Option<f64> {
        let i = self.initial_values.iter().position(|v| (v - initial).abs() < tol)?;
        let f = self.final_values.iter().position(|v| (v - fin).abs() < tol)?;
        Some(self.entries[i][f])
    }
}

/// `Re Tr[Π_f U Π_i (ρ⊗μ) U†]`, with projectors chosen by `mode`.
pub fn weak_joint(m: &MeasurementModel, rho: &DensityState, mode: Mode) -> Result<WeakJointTable> {
    let joint = m.joint_state(rho)?;
    let (initial, fin): (Vec<(f64, ComplexMatrix)>, Vec<(f64, ComplexMatrix)>) = match mode {
        Mode::Disturbance => {
            let lifted: Vec<_> = m
                .disturbed_obs
                .spectrum()
                .branches()
                .iter()
                .map(|b| (b.value, m.on_signal(&b.projector)))
                .collect();
            (lifted.clone(), lifted)
        }
        Mode::Precision => {
            if !m.spectra_compatible() {
                return Err(Error::SpectrumMismatch);
            }
            let initial = m
                .measured_obs
                .spectrum()
                .branches()
                .iter()
                .map(|b| (b.value, m.on_signal(&b.projector)))
                .collect();
            let fin = m
                .meter_readout
                .spectrum()
                .branches()
                .iter()
                .map(|b| (b.value, m.on_meter(&b.projector)))
                .collect();
            (initial, fin)
        }
    };

    let mut entries = vec![vec![0.0; fin.len()]; initial.len()];
    for (prob, u) in m.interaction.branches() {
        for (i, (_, pi_i)) in initial.iter().enumerate() {
            let evolved = u.conjugate(&(pi_i * &joint));
            for (f, (_, pi_f)) in fin.iter().enumerate() {
                entries[i][f] += prob * pi_f.trace_of_product(&evolved).re;
            }
        }
    }
    Ok(WeakJointTable {
        initial_values: initial.iter().map(|(v, _)| *v).collect(),
        final_values: fin.iter().map(|(v, _)| *v).collect(),
        entries,
    })
}

/// Quasi-distribution over changes δ = final − initial.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakDeltaDistribution {
    pub deltas: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeakDeltaDistribution {
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn weight_at(&self, delta: f64, tol: f64) -> f64 {
        self.deltas
            .iter()
            .zip(&self.weights)
            .filter(|(d, _)| (*d - delta).abs() < tol)
            .map(|(_, w)| w)
            .sum()
    }

    pub fn mean_square(&self) -> f64 {
        self.deltas.iter().zip(&self.weights).map(|(d, w)| d * d * w).sum()
    }
}

pub fn delta_distribution(t: &WeakJointTable, bin_tol: f64) -> WeakDeltaDistribution {
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(t.initial_values.len() * t.final_values.len());
    for (i, bi) in t.initial_values.iter().enumerate() {
        for (f, bf) in t.final_values.iter().enumerate() {
            pairs.push((bf - bi, t.entries[i][f]));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut deltas: Vec<f64> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for (d, w) in pairs.into_iter().filter(|&(_, w)| w != 0.0) {
        if d - last < bin_tol {
            *weights.last_mut().unwrap() += w;
        } else {
            deltas.push(d);
            weights.push(w);
        }
        last = d;
    }
    WeakDeltaDistribution { deltas, weights }
}

/// `√(Σ δ² w(δ))`
pub fn rms_of_delta(d: &WeakDeltaDistribution) -> Result<f64> {
    let ms = d.mean_square();
    if ms < -RADICAND_CLAMP {
        return Err(Error::NegativeMoment(ms));
    }
    Ok(ms.max(0.0).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MdrReport {
    pub epsilon: f64,
    pub eta: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
    pub c: f64,
    pub h: f64,
    pub o: f64,
    pub heisenberg_holds: bool,
    pub ozawa_holds: bool,
}

impl MdrReport {
    /// Forms H = εη and O = εη + εσ(B) + σ(A)η and both verdicts.
    pub fn from_components(epsilon: f64, eta: f64, sigma_a: f64, sigma_b: f64, c: f64) -> Self {
        let h = epsilon * eta;
        let o = h + epsilon * sigma_b + sigma_a * eta;
        Self {
            epsilon,
            eta,
            sigma_a,
            sigma_b,
            c,
            h,
            o,
            heisenberg_holds: h >= c - VERDICT_SLACK,
            ozawa_holds: o >= c - VERDICT_SLACK,
        }
    }
}

pub fn mdr_report(m: &MeasurementModel, rho: &DensityState) -> Result<MdrReport> {
    let epsilon = epsilon_direct(m, rho)?;
    let eta = eta_direct(m, rho)?;
    let sigma_a = std_dev(&m.measured_obs, rho)?;
    let sigma_b = std_dev(&m.disturbed_obs, rho)?;
    let c = commutator_bound(&m.measured_obs, &m.disturbed_obs, rho)?;
    Ok(MdrReport::from_components(epsilon, eta, sigma_a, sigma_b, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmodel::{ket_theta, standard_gates};
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6, FRAC_PI_8, SQRT_2};

    fn qubit_model(theta: f64, u: ComplexMatrix) -> MeasurementModel {
        let g = standard_gates();
        MeasurementModel::new(
            Interaction::Unitary(u),
            DensityState::pure(&ket_theta(theta)).unwrap(),
            Observable::new(g.z.clone()).unwrap(),
            Observable::new(g.z.clone()).unwrap(),
            Observable::new(g.x.clone()).unwrap(),
        )
        .unwrap()
    }

    fn cnot_model(theta: f64) -> MeasurementModel {
        qubit_model(theta, standard_gates().cnot)
    }

    #[test]
    fn epsilon_examples() {
        let rho = DensityState::plus_i();
        assert!((epsilon_direct(&cnot_model(FRAC_PI_6), &rho).unwrap() - 1.0).abs() < 1e-12);
        assert!(epsilon_direct(&cnot_model(0.0), &rho).unwrap().abs() < 1e-12);
        assert!((epsilon_direct(&cnot_model(FRAC_PI_4), &rho).unwrap() - SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn eta_examples() {
        let rho = DensityState::plus_i();
        assert!((eta_direct(&cnot_model(0.0), &rho).unwrap() - SQRT_2).abs() < 1e-12);
        assert!(eta_direct(&cnot_model(FRAC_PI_4), &rho).unwrap().abs() < 1e-7);
        // √2 (cos π/8 − sin π/8)
        assert!((eta_direct(&cnot_model(FRAC_PI_8), &rho).unwrap() - 0.765_366_864_730_179_8).abs() < 1e-12);
    }

    #[test]
    fn weak_joint_full_strength_disturbance() {
        let t = weak_joint(&cnot_model(0.0), &DensityState::plus_i(), Mode::Disturbance).unwrap();
        for row in &t.entries {
            for &e in row {
                assert!((e - 0.25).abs() < 1e-12);
            }
        }
        let d = delta_distribution(&t, DEFAULT_BIN_TOL);
        assert_eq!(d.deltas.len(), 3);
        for ((delta, w), (want_d, want_w)) in d.deltas.iter().zip(&d.weights).zip([(-2.0, 0.25), (0.0, 0.5), (2.0, 0.25)]) {
            assert!((delta - want_d).abs() < 1e-12);
            assert!((w - want_w).abs() < 1e-12);
        }
        assert!((rms_of_delta(&d).unwrap() - SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn weak_joint_without_interaction_is_diagonal() {
        let rho = DensityState::single(ComplexMatrix::from_diagonal(&[0.3, 0.7])).unwrap();
        let m = qubit_model(0.3, ComplexMatrix::identity(4));
        let t = weak_joint(&m, &rho, Mode::Disturbance).unwrap();
        // B = X, both eigenprojectors have weight ½ on a Z-diagonal state
        assert!(t.entries[0][1].abs() < 1e-14 && t.entries[1][0].abs() < 1e-14);
        assert!((t.entries[0][0] - 0.5).abs() < 1e-14);
        let d = delta_distribution(&t, DEFAULT_BIN_TOL);
        assert!((d.weight_at(0.0, 1e-8) - 1.0).abs() < 1e-14);
        assert!(d.weight_at(2.0, 1e-8).abs() < 1e-14 && d.weight_at(-2.0, 1e-8).abs() < 1e-14);
        assert!(rms_of_delta(&d).unwrap() < 1e-7);
    }

    #[test]
    fn delta_of_exact_diagonal_table() {
        let t = WeakJointTable {
            initial_values: vec![-1.0, 1.0],
            final_values: vec![-1.0, 1.0],
            entries: vec![vec![0.4, 0.0], vec![0.0, 0.6]],
        };
        let d = delta_distribution(&t, DEFAULT_BIN_TOL);
        assert_eq!(d, WeakDeltaDistribution { deltas: vec![0.0], weights: vec![1.0] });
        assert_eq!(rms_of_delta(&d).unwrap(), 0.0);
    }

    #[test]
    fn precision_table_at_no_measurement_point() {
        let t = weak_joint(&cnot_model(FRAC_PI_4), &DensityState::plus_i(), Mode::Precision).unwrap();
        let d = delta_distribution(&t, DEFAULT_BIN_TOL);
        let far = d.weight_at(2.0, 1e-8) + d.weight_at(-2.0, 1e-8);
        assert!((far - 0.5).abs() < 1e-12);
        assert!((t.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rms_depends_only_on_magnitudes() {
        let d = WeakDeltaDistribution {
            deltas: vec![-2.0, 0.0, 2.0],
            weights: vec![0.3, 0.5, 0.2],
        };
        assert!((rms_of_delta(&d).unwrap() - SQRT_2).abs() < 1e-15);
        let bad = WeakDeltaDistribution {
            deltas: vec![-2.0, 0.0],
            weights: vec![-0.5, 1.5],
        };
        assert!(matches!(rms_of_delta(&bad), Err(Error::NegativeMoment(_))));
    }

    #[test]
    fn spectrum_mismatch() {
        let g = standard_gates();
        let m = MeasurementModel::new(
            Interaction::Unitary(g.cnot.clone()),
            DensityState::pure(&ket_theta(0.0)).unwrap(),
            Observable::new(g.z.scale_real(2.0)).unwrap(),
            Observable::new(g.z.clone()).unwrap(),
            Observable::new(g.x.clone()).unwrap(),
        )
        .unwrap();
        assert!(!m.spectra_compatible());
        assert!(matches!(
            weak_joint(&m, &DensityState::plus_i(), Mode::Precision),
            Err(Error::SpectrumMismatch)
        ));
    }

    #[test]
    fn model_dimension_checks() {
        let g = standard_gates();
        let r = MeasurementModel::new(
            Interaction::Unitary(ComplexMatrix::identity(8)),
            DensityState::pure(&ket_theta(0.0)).unwrap(),
            Observable::new(g.z.clone()).unwrap(),
            Observable::new(g.z.clone()).unwrap(),
            Observable::new(g.x.clone()).unwrap(),
        );
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
        let rho4 = DensityState::single(ComplexMatrix::identity(4).scale_real(0.25)).unwrap();
        assert!(matches!(epsilon_direct(&cnot_model(0.1), &rho4), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn report_examples() {
        let rho = DensityState::plus_i();
        let r = mdr_report(&cnot_model(FRAC_PI_8), &rho).unwrap();
        assert!((r.h - (2.0 - SQRT_2)).abs() < 1e-12);
        assert!((r.o - 2.116_520_167_1).abs() < 1e-9);
        assert!((r.c - 1.0).abs() < 1e-12);
        assert!(!r.heisenberg_holds && r.ozawa_holds);
        assert_eq!(r.h, r.epsilon * r.eta);
        assert_eq!(r.o, r.h + r.epsilon * r.sigma_b + r.sigma_a * r.eta);

        for theta in [0.0, FRAC_PI_4] {
            let r = mdr_report(&cnot_model(theta), &rho).unwrap();
            assert!(r.h.abs() < 1e-7);
            assert!((r.o - SQRT_2).abs() < 1e-7);
            assert!((r.c - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noisy_channel_averages_branches() {
        // identity branch: ε² = 2, η² = 0; swap branch: ε² = 0, η² = 2
        let p = 0.2;
        let theta: f64 = 0.4;
        let g = standard_gates();
        let m = MeasurementModel::new(
            Interaction::Channel(MixedUnitaryChannel::noisy_cnot(p).unwrap()),
            DensityState::pure(&ket_theta(theta)).unwrap(),
            Observable::new(g.z.clone()).unwrap(),
            Observable::new(g.z.clone()).unwrap(),
            Observable::new(g.x.clone()).unwrap(),
        )
        .unwrap();
        let rho = DensityState::plus_i();
        let eps2 = (1.0 - p) * 4.0 * theta.sin().powi(2) + p;
        let eta2 = (1.0 - p) * 2.0 * (theta.cos() - theta.sin()).powi(2) + p;
        assert!((epsilon_direct(&m, &rho).unwrap() - eps2.sqrt()).abs() < 1e-12);
        assert!((eta_direct(&m, &rho).unwrap() - eta2.sqrt()).abs() < 1e-12);
        let d = delta_distribution(&weak_joint(&m, &rho, Mode::Disturbance).unwrap(), DEFAULT_BIN_TOL);
        assert!((rms_of_delta(&d).unwrap() - eta2.sqrt()).abs() < 1e-12);
    }
}
