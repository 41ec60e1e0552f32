//! Three-qubit weak-measurement protocol: probe ⊗ signal ⊗ meter.
//!
//! A probe qubit prepared in `γ|0⟩ + γ̄|1⟩` is coupled to the signal by a
//! CNOT (signal controls), which realizes the two-outcome POVM
//! `E± = ½[1 ± (2γ² − 1) O]` with `O = Z`, or `O = X` when the coupling is
//! conjugated by Hadamards on the signal. The apparatus then copies Z from
//! the signal onto a meter prepared in `cos θ|0⟩ + sin θ|1⟩`. Joint
//! statistics of the probe readout and a final readout (signal X for
//! disturbance, meter Z for precision) are enough to rebuild the weak-valued
//! difference distribution and hence η(X) or ε(Z).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::ddouble::{Dd, DdMatrix};
use crate::error::{Error, Result};
use crate::mdr_theory::{mdr_report, Interaction, MdrReport, MeasurementModel, Mode};
use crate::qmath::{c64, ComplexMatrix, C64};
use crate::qmodel::{
    cnot_on, commutator_bound, ket_theta, on_qubit, standard_gates, std_dev, swap_on,
    DensityState, MixedUnitaryChannel, Observable,
};

pub const STRENGTH_MIN: f64 = 1e-3;
pub const DEFAULT_GAMMA_SQ: f64 = 0.75;

const PROBE: usize = 0;
const SIGNAL: usize = 1;
const METER: usize = 2;
const N_QUBITS: usize = 3;

/// Shots drawn per independently seeded stream.
pub const SHARD_SHOTS: u64 = 1 << 16;

/// Signal observable the probe couples to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeBasis {
    Z,
    X,
}

impl From<Mode> for ProbeBasis {
    fn from(mode: Mode) -> Self {
        match mode {
            Mode::Disturbance => ProbeBasis::X,
            Mode::Precision => ProbeBasis::Z,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeSpec {
    gamma_sq: f64,
    basis: ProbeBasis,
}

impl ProbeSpec {
    pub fn new(gamma_sq: f64, basis: ProbeBasis) -> Result<Self> {
        if !(gamma_sq <= 1.0) {
            return Err(Error::InvalidParameter(format!("gamma_sq {gamma_sq} must lie in (0.5, 1]")));
        }
        let strength = 2.0 * gamma_sq - 1.0;
        if strength < STRENGTH_MIN {
            return Err(Error::StrengthTooSmall {
                strength,
                min: STRENGTH_MIN,
            });
        }
        Ok(Self { gamma_sq, basis })
    }

    pub fn for_mode(gamma_sq: f64, mode: Mode) -> Result<Self> {
        Self::new(gamma_sq, mode.into())
    }

    pub fn gamma_sq(&self) -> f64 {
        self.gamma_sq
    }

    pub fn gamma(&self) -> f64 {
        self.gamma_sq.sqrt()
    }

    pub fn gamma_bar(&self) -> f64 {
        (1.0 - self.gamma_sq).max(0.0).sqrt()
    }

    /// `2γ² − 1`
    pub fn strength(&self) -> f64 {
        2.0 * self.gamma_sq - 1.0
    }

    pub fn basis(&self) -> ProbeBasis {
        self.basis
    }
}

fn probe_ket(gamma_sq: f64) -> Vec<C64> {
    vec![c64(gamma_sq.sqrt(), 0.0), c64((1.0 - gamma_sq).max(0.0).sqrt(), 0.0)]
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    theta: f64,
    probe: ProbeSpec,
    mode: Mode,
    noise_p: f64,
    shots: u64,
    seed: u64,
    signal_state: DensityState,
}

impl ExperimentConfig {
    /// Exact-statistics configuration on the default `|+i⟩` signal.
    pub fn new(theta: f64, gamma_sq: f64, mode: Mode, noise_p: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::InvalidParameter(format!("theta {theta} is not finite")));
        }
        if !(0.0..=1.0).contains(&noise_p) {
            return Err(Error::InvalidParameter(format!("error rate {noise_p} outside [0, 1]")));
        }
        Ok(Self {
            theta,
            probe: ProbeSpec::for_mode(gamma_sq, mode)?,
            mode,
            noise_p,
            shots: 0,
            seed: 0,
            signal_state: DensityState::plus_i(),
        })
    }

    pub fn with_shots(mut self, shots: u64, seed: u64) -> Self {
        self.shots = shots;
        self.seed = seed;
        self
    }

    pub fn with_signal_state(mut self, state: DensityState) -> Result<Self> {
        if state.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: state.dim(),
            });
        }
        self.signal_state = state;
        Ok(self)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn probe(&self) -> &ProbeSpec {
        &self.probe
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn noise_p(&self) -> f64 {
        self.noise_p
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn signal_state(&self) -> &DensityState {
        &self.signal_state
    }

    /// Hash of every physical parameter (not seed or shot count).
    pub fn digest(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(b"mdr-experiment-v1");
        h.update(self.theta.to_bits().to_le_bytes());
        h.update(self.probe.gamma_sq.to_bits().to_le_bytes());
        h.update([match self.mode {
            Mode::Disturbance => 0u8,
            Mode::Precision => 1u8,
        }]);
        h.update(self.noise_p.to_bits().to_le_bytes());
        for z in self.signal_state.matrix().entries() {
            h.update(z.re.to_bits().to_le_bytes());
            h.update(z.im.to_bits().to_le_bytes());
        }
        h.finalize().into()
    }
}

/// Initial product state and the ordered channels acting on it.
#[derive(Clone, Debug)]
pub struct Circuit {
    pub initial: DensityState,
    pub steps: Vec<MixedUnitaryChannel>,
    gamma_sq: f64,
    theta: f64,
    signal: DensityState,
}

impl Circuit {
    pub fn run(&self) -> Result<DensityState> {
        self.steps
            .iter()
            .try_fold(self.initial.clone(), |rho, ch| ch.apply(&rho))
    }

    /// Same evolution in double-double precision. The probe and meter
    /// densities are formed from `γ²` and `cos θ, sin θ` directly so the
    /// probe strength is exactly `2γ² − 1`.
    fn run_extended(&self) -> DdMatrix {
        let g2 = Dd::from(self.gamma_sq);
        let gb2 = Dd::from(1.0) - g2;
        let probe = DdMatrix::real_2x2(g2, (g2 * gb2).sqrt(), gb2);
        let (c, s) = (Dd::from(self.theta.cos()), Dd::from(self.theta.sin()));
        let meter = DdMatrix::real_2x2(c * c, c * s, s * s);
        let mut rho = probe.kron(&DdMatrix::from_c64(self.signal.matrix())).kron(&meter);
        for ch in &self.steps {
            let mut next = DdMatrix::zeros(rho.dim());
            for b in ch.branches().iter().filter(|b| b.prob > 0.0) {
                next.add_scaled(&rho.conjugate_by(&b.unitary), Dd::from(b.prob));
            }
            rho = next;
        }
        rho
    }
}

pub fn build_circuit(cfg: &ExperimentConfig) -> Result<Circuit> {
    circuit_for(cfg.probe.gamma_sq, cfg.theta, cfg.mode, cfg.noise_p, &cfg.signal_state)
}

fn circuit_for(
    gamma_sq: f64,
    theta: f64,
    mode: Mode,
    noise_p: f64,
    signal: &DensityState,
) -> Result<Circuit> {
    let probe = DensityState::pure(&probe_ket(gamma_sq))?;
    let meter = DensityState::pure(&ket_theta(theta))?;
    let initial = probe.tensor(signal).tensor(&meter);

    let g = standard_gates();
    let probe_coupling = MixedUnitaryChannel::noisy(
        cnot_on(N_QUBITS, SIGNAL, PROBE),
        swap_on(N_QUBITS, SIGNAL, PROBE),
        noise_p,
    )?;
    let apparatus = MixedUnitaryChannel::noisy(
        cnot_on(N_QUBITS, SIGNAL, METER),
        swap_on(N_QUBITS, SIGNAL, METER),
        noise_p,
    )?;

    let mut steps = Vec::with_capacity(4);
    match mode {
        Mode::Disturbance => {
            let hadamard = MixedUnitaryChannel::unitary(on_qubit(N_QUBITS, SIGNAL, &g.h))?;
            steps.push(hadamard.clone());
            steps.push(probe_coupling);
            steps.push(hadamard);
        }
        Mode::Precision => steps.push(probe_coupling),
    }
    steps.push(apparatus);
    Ok(Circuit {
        initial,
        steps,
        gamma_sq,
        theta,
        signal: signal.clone(),
    })
}

/// Joint outcome probabilities, `probs[probe][final]` with index 0 ↔ +1 and
/// index 1 ↔ −1. `residual` holds the low-order words of exact tables
/// (`probs + residual` is the double-double value); it is zero for sampled
/// frequencies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomeTable {
    pub mode: Mode,
    pub probs: [[f64; 2]; 2],
    pub residual: [[f64; 2]; 2],
}

impl OutcomeTable {
    pub fn from_probs(mode: Mode, probs: [[f64; 2]; 2]) -> Self {
        Self {
            mode,
            probs,
            residual: [[0.0; 2]; 2],
        }
    }

    fn extended(&self, a: usize, b: usize) -> Dd {
        Dd::new(self.probs[a][b], self.residual[a][b])
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().flatten().sum()
    }

    pub fn probe_marginal(&self, idx: usize) -> f64 {
        self.probs[idx][0] + self.probs[idx][1]
    }

    pub fn final_marginal(&self, idx: usize) -> f64 {
        self.probs[0][idx] + self.probs[1][idx]
    }
}

/// Sampled joint outcome counts, same indexing as [`OutcomeTable`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OutcomeCounts {
    pub mode: Mode,
    pub counts: [[u64; 2]; 2],
}

impl OutcomeCounts {
    pub fn shots(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn frequencies(&self) -> OutcomeTable {
        let n = self.shots().max(1) as f64;
        let mut probs = [[0.0; 2]; 2];
        for (row, counts) in probs.iter_mut().zip(&self.counts) {
            for (p, &c) in row.iter_mut().zip(counts) {
                *p = c as f64 / n;
            }
        }
        OutcomeTable::from_probs(self.mode, probs)
    }
}

fn outcome_projectors(mode: Mode) -> ([ComplexMatrix; 2], [ComplexMatrix; 2]) {
    let g = standard_gates();
    let i2 = ComplexMatrix::identity(2);
    let plus_minus = |op: &ComplexMatrix| {
        [
            (&i2 + op).scale_real(0.5),
            (&i2 - op).scale_real(0.5),
        ]
    };
    let [zp, zm] = plus_minus(&g.z);
    let probe = [on_qubit(N_QUBITS, PROBE, &zp), on_qubit(N_QUBITS, PROBE, &zm)];
    let fin = match mode {
        Mode::Disturbance => {
            let [xp, xm] = plus_minus(&g.x);
            [on_qubit(N_QUBITS, SIGNAL, &xp), on_qubit(N_QUBITS, SIGNAL, &xm)]
        }
        Mode::Precision => [on_qubit(N_QUBITS, METER, &zp), on_qubit(N_QUBITS, METER, &zm)],
    };
    (probe, fin)
}

fn outcomes_of(circuit: &Circuit, mode: Mode) -> Result<OutcomeTable> {
    let rho = circuit.run_extended();
    let (probe, fin) = outcome_projectors(mode);
    let mut joint = [[Dd::ZERO; 2]; 2];
    let mut total = Dd::ZERO;
    for (a, pa) in probe.iter().enumerate() {
        for (b, pb) in fin.iter().enumerate() {
            let p = rho.re_trace_with(&(pa * pb));
            joint[a][b] = if p.hi < 0.0 { Dd::ZERO } else { p };
            total = total + joint[a][b];
        }
    }
    let mut table = OutcomeTable::from_probs(mode, [[0.0; 2]; 2]);
    for a in 0..2 {
        for b in 0..2 {
            let p = joint[a][b] / total;
            table.probs[a][b] = p.hi;
            table.residual[a][b] = p.lo;
        }
    }
    Ok(table)
}

pub fn exact_outcomes(cfg: &ExperimentConfig) -> Result<OutcomeTable> {
    outcomes_of(&build_circuit(cfg)?, cfg.mode)
}

/// ChaCha key for a configuration and seed; shards select the stream.
fn sampling_key(cfg: &ExperimentConfig) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"mdr-shots-v1");
    h.update(cfg.seed.to_le_bytes());
    h.update(cfg.digest());
    h.finalize().into()
}

fn draw_shard(cumulative: &[f64; 4], key: [u8; 32], shard: u64, shots: u64) -> [u64; 4] {
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(shard);
    let mut counts = [0u64; 4];
    for _ in 0..shots {
        let u: f64 = rng.random();
        let k = cumulative.iter().position(|&c| u < c).unwrap_or(3);
        counts[k] += 1;
    }
    counts
}

fn shard_plan(shots: u64) -> impl IndexedParallelIterator<Item = (u64, u64)> + Clone {
    let n_shards = shots.div_ceil(SHARD_SHOTS) as usize;
    (0..n_shards).into_par_iter().map(move |s| {
        let s = s as u64;
        let start = s * SHARD_SHOTS;
        (s, SHARD_SHOTS.min(shots - start))
    })
}

fn cumulative(table: &OutcomeTable) -> [f64; 4] {
    let flat = [table.probs[0][0], table.probs[0][1], table.probs[1][0], table.probs[1][1]];
    let mut acc = 0.0;
    flat.map(|p| {
        acc += p;
        acc
    })
}

fn into_counts(mode: Mode, c: [u64; 4]) -> OutcomeCounts {
    OutcomeCounts {
        mode,
        counts: [[c[0], c[1]], [c[2], c[3]]],
    }
}

fn add4(a: [u64; 4], b: [u64; 4]) -> [u64; 4] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

/// Draws `cfg.shots()` i.i.d. outcomes from the exact distribution. Shards
/// of [`SHARD_SHOTS`] run in parallel, each on its own ChaCha stream, so the
/// result depends only on the configuration and seed.
pub fn sample_shots(cfg: &ExperimentConfig) -> Result<OutcomeCounts> {
    let table = exact_outcomes(cfg)?;
    sample_from(cfg, &table)
}

/// As [`sample_shots`], reusing an already computed exact table.
pub fn sample_from(cfg: &ExperimentConfig, table: &OutcomeTable) -> Result<OutcomeCounts> {
    if cfg.shots == 0 {
        return Err(Error::InvalidParameter("shot count must be at least 1".into()));
    }
    let cum = cumulative(table);
    let key = sampling_key(cfg);
    let counts = shard_plan(cfg.shots)
        .map(|(shard, n)| draw_shard(&cum, key, shard, n))
        .reduce(|| [0; 4], add4);
    Ok(into_counts(cfg.mode, counts))
}

/// Single-threaded run over the same shard plan as [`sample_shots`].
pub fn sample_shots_sequential(cfg: &ExperimentConfig) -> Result<OutcomeCounts> {
    if cfg.shots == 0 {
        return Err(Error::InvalidParameter("shot count must be at least 1".into()));
    }
    let cum = cumulative(&exact_outcomes(cfg)?);
    let key = sampling_key(cfg);
    let n_shards = cfg.shots.div_ceil(SHARD_SHOTS);
    let counts = (0..n_shards)
        .map(|s| draw_shard(&cum, key, s, SHARD_SHOTS.min(cfg.shots - s * SHARD_SHOTS)))
        .fold([0; 4], add4);
    Ok(into_counts(cfg.mode, counts))
}

/// ε(Z) or η(X) rebuilt from joint outcome statistics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reconstruction {
    /// `√max(0, squared_raw)`
    pub value: f64,
    /// `4 P_wv(δ = +2) + 4 P_wv(δ = −2)` before clamping.
    pub squared_raw: f64,
    /// Weak-valued joint `[initial][final]`, index 0 ↔ +1. Not clamped.
    pub weak_joint: [[f64; 2]; 2],
}

/// Rebuilds the weak-valued joint distribution from probe/final statistics.
///
/// For each final outcome f the conditional probe mean `⟨Z_p | f⟩` gives the
/// weak-valued conditional `P_wv(i = ±1 | f) = ½[1 ± ⟨Z_p | f⟩ / (2γ² − 1)]`,
/// which is scaled by the measured `P(f)`. A final outcome that never occurs
/// contributes zero joint weight.
pub fn reconstruct(cfg: &ExperimentConfig, t: &OutcomeTable) -> Result<Reconstruction> {
    let strength = cfg.probe.strength();
    if strength < STRENGTH_MIN {
        return Err(Error::StrengthTooSmall {
            strength,
            min: STRENGTH_MIN,
        });
    }
    if !(t.total() > 0.0) {
        return Err(Error::ZeroMarginal);
    }
    let one = Dd::from(1.0);
    let half = Dd::from(0.5);
    let strength = Dd::from(cfg.probe.gamma_sq) * 2.0 - one;
    let total = (0..2)
        .flat_map(|a| (0..2).map(move |b| (a, b)))
        .fold(Dd::ZERO, |acc, (a, b)| acc + t.extended(a, b));

    let mut weak_joint = [[Dd::ZERO; 2]; 2];
    for f in 0..2 {
        let plus = t.extended(0, f) / total;
        let minus = t.extended(1, f) / total;
        let pf = plus + minus;
        if pf.hi == 0.0 {
            continue;
        }
        let probe_mean = (plus - minus) / pf;
        let cond_plus = half * (one + probe_mean / strength);
        let cond_minus = half * (one - probe_mean / strength);
        weak_joint[0][f] = cond_plus * pf;
        weak_joint[1][f] = cond_minus * pf;
    }
    // δ = +2: initial −1 → final +1; δ = −2: initial +1 → final −1
    let squared = (weak_joint[1][0] + weak_joint[0][1]) * 4.0;
    let squared_raw = squared.to_f64();
    Ok(Reconstruction {
        value: squared_raw.max(0.0).sqrt(),
        squared_raw,
        weak_joint: weak_joint.map(|row| row.map(Dd::to_f64)),
    })
}

pub fn reconstruct_counts(cfg: &ExperimentConfig, counts: &OutcomeCounts) -> Result<Reconstruction> {
    reconstruct(cfg, &counts.frequencies())
}

/// Closed-form values for the CNOT apparatus on a Y eigenstate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosedForm {
    pub epsilon: f64,
    pub eta: f64,
    pub h: f64,
    pub o: f64,
    pub c: f64,
}

pub fn closed_form_reference(theta: f64) -> ClosedForm {
    let epsilon = 2.0 * theta.sin().abs();
    let eta = std::f64::consts::SQRT_2 * (theta.cos() - theta.sin()).abs();
    let (sigma_x, sigma_z, c) = (1.0, 1.0, 1.0);
    let h = epsilon * eta;
    ClosedForm {
        epsilon,
        eta,
        h,
        o: h + epsilon * sigma_x + sigma_z * eta,
        c,
    }
}

/// Signal ⊗ meter model of the apparatus alone: A = M = Z, B = X, meter in
/// `|θ⟩`, CNOT interaction (non-ideal when `noise_p > 0`).
pub fn apparatus_model(theta: f64, noise_p: f64) -> Result<MeasurementModel> {
    let g = standard_gates();
    let interaction = if noise_p == 0.0 {
        Interaction::Unitary(g.cnot.clone())
    } else {
        Interaction::Channel(MixedUnitaryChannel::noisy_cnot(noise_p)?)
    };
    MeasurementModel::new(
        interaction,
        DensityState::pure(&ket_theta(theta))?,
        Observable::new(g.z.clone())?,
        Observable::new(g.z.clone())?,
        Observable::new(g.x)?,
    )
}

/// Exact report for the apparatus on the given signal state.
pub fn exact_report(theta: f64, noise_p: f64, signal: &DensityState) -> Result<MdrReport> {
    mdr_report(&apparatus_model(theta, noise_p)?, signal)
}

/// Reconstructed ε̂(Z) and η̂(X), from exact statistics when `shots == 0`
/// and from sampled counts otherwise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconstructedPair {
    pub epsilon: Reconstruction,
    pub eta: Reconstruction,
}

pub fn reconstruct_pair(
    theta: f64,
    gamma_sq: f64,
    noise_p: f64,
    shots: u64,
    seed: u64,
    signal: &DensityState,
) -> Result<ReconstructedPair> {
    let run = |mode: Mode| -> Result<Reconstruction> {
        let cfg = ExperimentConfig::new(theta, gamma_sq, mode, noise_p)?
            .with_shots(shots, seed)
            .with_signal_state(signal.clone())?;
        if shots == 0 {
            reconstruct(&cfg, &exact_outcomes(&cfg)?)
        } else {
            reconstruct_counts(&cfg, &sample_shots(&cfg)?)
        }
    };
    Ok(ReconstructedPair {
        epsilon: run(Mode::Precision)?,
        eta: run(Mode::Disturbance)?,
    })
}

/// Report built from reconstructed ε̂ and η̂, with σ(Z), σ(X) and C taken
/// from the signal state.
pub fn reconstructed_report(pair: &ReconstructedPair, signal: &DensityState) -> Result<MdrReport> {
    let g = standard_gates();
    let z = Observable::new(g.z)?;
    let x = Observable::new(g.x)?;
    Ok(MdrReport::from_components(
        pair.epsilon.value,
        pair.eta.value,
        std_dev(&z, signal)?,
        std_dev(&x, signal)?,
        commutator_bound(&z, &x, signal)?,
    ))
}

/// POVM element `½[1 ± (2γ² − 1) O]` on the signal, for tests and checks.
pub fn povm_element(probe: &ProbeSpec, outcome_plus: bool) -> ComplexMatrix {
    let g = standard_gates();
    let o = match probe.basis {
        ProbeBasis::Z => g.z,
        ProbeBasis::X => g.x,
    };
    let sign = if outcome_plus { 1.0 } else { -1.0 };
    (&ComplexMatrix::identity(2) + &o.scale_real(sign * probe.strength())).scale_real(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::expectation;
    use crate::qmodel::{ket_one, ket_zero};
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_6, FRAC_PI_8, SQRT_2};

    fn cfg(theta: f64, gamma_sq: f64, mode: Mode, p: f64) -> ExperimentConfig {
        ExperimentConfig::new(theta, gamma_sq, mode, p).unwrap()
    }

    #[test]
    fn probe_validation() {
        assert!(matches!(ProbeSpec::new(0.5, ProbeBasis::Z), Err(Error::StrengthTooSmall { .. })));
        assert!(matches!(ProbeSpec::new(0.5004, ProbeBasis::Z), Err(Error::StrengthTooSmall { .. })));
        assert!(ProbeSpec::new(0.5006, ProbeBasis::Z).is_ok());
        assert!(matches!(ProbeSpec::new(1.2, ProbeBasis::Z), Err(Error::InvalidParameter(_))));
        assert!(ProbeSpec::new(f64::NAN, ProbeBasis::Z).is_err());
        let p = ProbeSpec::new(0.75, ProbeBasis::X).unwrap();
        assert!((p.gamma().powi(2) + p.gamma_bar().powi(2) - 1.0).abs() < 1e-15);
        assert_eq!(p.strength(), 0.5);
    }

    #[test]
    fn full_strength_copies_z_eigenstates() {
        for (ket, idx) in [(ket_zero(), 0), (ket_one(), 1)] {
            let c = cfg(0.0, 1.0, Mode::Precision, 0.0)
                .with_signal_state(DensityState::pure(&ket).unwrap())
                .unwrap();
            let t = exact_outcomes(&c).unwrap();
            assert!((t.probs[idx][idx] - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_strength_limit_decouples_probe() {
        let circuit = circuit_for(0.5, 0.3, Mode::Disturbance, 0.0, &DensityState::plus_i()).unwrap();
        let t = outcomes_of(&circuit, Mode::Disturbance).unwrap();
        for f in 0..2 {
            assert!((t.probs[0][f] - t.probs[1][f]).abs() < 1e-14);
        }
        assert!((t.final_marginal(0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn disturbance_final_marginal_is_half() {
        for theta in [0.0, 0.2, FRAC_PI_8, 1.0] {
            let t = exact_outcomes(&cfg(theta, 0.6, Mode::Disturbance, 0.0)).unwrap();
            assert!((t.final_marginal(0) - 0.5).abs() < 1e-14);
            assert!((t.total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn probe_marginal_matches_povm() {
        let c = cfg(0.4, 0.6, Mode::Precision, 0.0);
        let t = exact_outcomes(&c).unwrap();
        assert!((t.probe_marginal(0) - 0.5).abs() < 1e-14);

        let state = DensityState::single(ComplexMatrix::from_diagonal(&[0.8, 0.2])).unwrap();
        for mode in [Mode::Precision, Mode::Disturbance] {
            let c = cfg(0.4, 0.7, mode, 0.0).with_signal_state(state.clone()).unwrap();
            let t = exact_outcomes(&c).unwrap();
            let e_plus = povm_element(c.probe(), true);
            let want = expectation(&e_plus, state.matrix()).unwrap();
            assert!((t.probe_marginal(0) - want).abs() < 1e-14, "{mode:?}");
        }
    }

    #[test]
    fn reconstruct_examples() {
        for g2 in [0.51, 0.75, 1.0] {
            let c = cfg(0.0, g2, Mode::Disturbance, 0.0);
            let r = reconstruct(&c, &exact_outcomes(&c).unwrap()).unwrap();
            assert!((r.value - SQRT_2).abs() < 1e-12, "gamma_sq {g2}");
        }
        let c = cfg(FRAC_PI_6, 0.75, Mode::Precision, 0.0);
        assert!((reconstruct(&c, &exact_outcomes(&c).unwrap()).unwrap().value - 1.0).abs() < 1e-12);
        let c = cfg(FRAC_PI_4, 0.75, Mode::Disturbance, 0.0);
        assert!(reconstruct(&c, &exact_outcomes(&c).unwrap()).unwrap().value < 1e-7);
    }

    #[test]
    fn weak_conditionals_are_not_clamped() {
        // at θ = 0 every weak joint entry is ¼, but a finite table built by
        // hand can push a conditional past 1
        let c = cfg(0.0, 0.6, Mode::Disturbance, 0.0);
        let t = OutcomeTable::from_probs(Mode::Disturbance, [[0.5, 0.0], [0.0, 0.5]]);
        let r = reconstruct(&c, &t).unwrap();
        // ⟨Z_p | +⟩ = 1, strength 0.2 ⇒ P_wv(+|+) = 3, P_wv(−|+) = −2
        assert!((r.weak_joint[0][0] - 1.5).abs() < 1e-12);
        assert!((r.weak_joint[1][0] + 1.0).abs() < 1e-12);
        assert!(r.squared_raw < 0.0);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn reconstruct_zero_marginal() {
        let c = cfg(0.0, 0.6, Mode::Precision, 0.0);
        let empty = OutcomeTable::from_probs(Mode::Precision, [[0.0; 2]; 2]);
        assert!(matches!(reconstruct(&c, &empty), Err(Error::ZeroMarginal)));
        // one final outcome never seen: its joint weight is zero
        let one_sided = OutcomeTable::from_probs(Mode::Precision, [[0.7, 0.0], [0.3, 0.0]]);
        let r = reconstruct(&c, &one_sided).unwrap();
        assert_eq!(r.weak_joint[0][1], 0.0);
        assert_eq!(r.weak_joint[1][1], 0.0);
    }

    #[test]
    fn sampling_deterministic_distribution() {
        let c = cfg(0.0, 1.0, Mode::Precision, 0.0)
            .with_signal_state(DensityState::pure(&ket_zero()).unwrap())
            .unwrap()
            .with_shots(4, 9);
        let counts = sample_shots(&c).unwrap();
        assert_eq!(counts.counts, [[4, 0], [0, 0]]);
    }

    #[test]
    fn sampling_is_reproducible_and_shard_invariant() {
        let c = cfg(0.3, 0.75, Mode::Disturbance, 0.1).with_shots(3 * SHARD_SHOTS + 17, 42);
        let a = sample_shots(&c).unwrap();
        let b = sample_shots(&c).unwrap();
        let s = sample_shots_sequential(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, s);
        assert_eq!(a.shots(), 3 * SHARD_SHOTS + 17);
        let other = sample_shots(&c.clone().with_shots(3 * SHARD_SHOTS + 17, 43)).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn sampling_rejects_zero_shots() {
        assert!(sample_shots(&cfg(0.3, 0.75, Mode::Disturbance, 0.0)).is_err());
    }

    #[test]
    fn closed_form_examples() {
        let r = closed_form_reference(FRAC_PI_8);
        assert!((r.epsilon - 0.765_366_864_730_179_6).abs() < 1e-12);
        assert!((r.eta - 0.765_366_864_730_179_6).abs() < 1e-12);
        assert!((r.h - 0.585_786_437_626_905).abs() < 1e-12);
        assert!((r.o - 2.116_520_167_087_263).abs() < 1e-12);
        assert_eq!(r.c, 1.0);
        let r = closed_form_reference(0.0);
        assert_eq!((r.epsilon, r.h, r.c), (0.0, 0.0, 1.0));
        assert!((r.eta - SQRT_2).abs() < 1e-15 && (r.o - SQRT_2).abs() < 1e-15);
        let r = closed_form_reference(FRAC_PI_4);
        assert!((r.epsilon - SQRT_2).abs() < 1e-15 && r.eta < 1e-15);
        assert!(r.h < 1e-15 && (r.o - SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn digest_separates_configurations() {
        let a = cfg(0.3, 0.75, Mode::Disturbance, 0.0);
        assert_eq!(a.digest(), a.clone().with_shots(10, 5).digest());
        assert_ne!(a.digest(), cfg(0.3, 0.75, Mode::Precision, 0.0).digest());
        assert_ne!(a.digest(), cfg(0.3, 0.76, Mode::Disturbance, 0.0).digest());
        assert_ne!(a.digest(), cfg(0.3, 0.75, Mode::Disturbance, 0.05).digest());
    }
}
