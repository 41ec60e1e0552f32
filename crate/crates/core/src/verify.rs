//! Randomized identity suites and the operational round trip.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::experiment::{exact_outcomes, reconstruct, ExperimentConfig};
use crate::mdr_theory::{
    delta_distribution, epsilon_direct, eta_direct, mdr_report, rms_of_delta, weak_joint, Mode,
    DEFAULT_BIN_TOL,
};
use crate::qmodel::Observable;
use crate::random::random_model;

pub const IDENTITY_TOL: f64 = 1e-9;
pub const NORMALIZATION_TOL: f64 = 1e-10;
pub const ROUND_TRIP_TOL: f64 = 1e-9;
pub const ROUND_TRIP_GAMMA_SQ: [f64; 5] = [0.51, 0.6, 0.75, 0.9, 1.0];

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub instances: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct InstanceDeviations {
    disturbance: f64,
    precision: f64,
    normalization: f64,
    // C − O; non-positive when the inequality holds
    ozawa_shortfall: f64,
}

/// Per-instance RNG: one ChaCha stream per instance index.
pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn check_instance(seed: u64, index: u64, inject_fault: bool) -> Result<InstanceDeviations> {
    let mut rng = instance_rng(seed, index);
    let (model, rho) = random_model(&mut rng)?;

    let dist_table = weak_joint(&model, &rho, Mode::Disturbance)?;
    let prec_table = weak_joint(&model, &rho, Mode::Precision)?;
    let eta_weak = rms_of_delta(&delta_distribution(&dist_table, DEFAULT_BIN_TOL))?;
    let eps_weak = rms_of_delta(&delta_distribution(&prec_table, DEFAULT_BIN_TOL))?;

    let eta = if inject_fault {
        // direct side evaluated with a rescaled B
        let scaled = Observable::new(model.disturbed_obs().matrix().scale_real(1.1))?;
        let corrupted = crate::mdr_theory::MeasurementModel::new(
            model.interaction().clone(),
            model.meter_state().clone(),
            model.meter_readout().clone(),
            model.measured_obs().clone(),
            scaled,
        )?;
        eta_direct(&corrupted, &rho)?
    } else {
        eta_direct(&model, &rho)?
    };
    let eps = epsilon_direct(&model, &rho)?;
    let report = mdr_report(&model, &rho)?;

    Ok(InstanceDeviations {
        disturbance: (eta_weak - eta).abs(),
        precision: (eps_weak - eps).abs(),
        normalization: (dist_table.total() - 1.0)
            .abs()
            .max((prec_table.total() - 1.0).abs()),
        ozawa_shortfall: report.c - report.o,
    })
}

/// Runs `count` random models and reports the worst deviation per identity.
pub fn random_identity_suites(seed: u64, count: usize, inject_fault: bool) -> Result<Vec<SuiteResult>> {
    let devs: Vec<InstanceDeviations> = (0..count as u64)
        .into_par_iter()
        .map(|i| check_instance(seed, i, inject_fault))
        .collect::<Result<_>>()?;
    let worst = |f: fn(&InstanceDeviations) -> f64, floor: f64| {
        devs.iter().map(f).fold(floor, f64::max)
    };
    Ok(vec![
        SuiteResult {
            name: "disturbance-identity",
            instances: count,
            max_deviation: worst(|d| d.disturbance, 0.0),
            tolerance: IDENTITY_TOL,
        },
        SuiteResult {
            name: "precision-identity",
            instances: count,
            max_deviation: worst(|d| d.precision, 0.0),
            tolerance: IDENTITY_TOL,
        },
        SuiteResult {
            name: "weak-table-normalization",
            instances: count,
            max_deviation: worst(|d| d.normalization, 0.0),
            tolerance: NORMALIZATION_TOL,
        },
        SuiteResult {
            name: "ozawa-inequality",
            instances: count,
            // largest C − O, floored at zero
            max_deviation: worst(|d| d.ozawa_shortfall, f64::NEG_INFINITY).max(0.0),
            tolerance: crate::mdr_theory::VERDICT_SLACK,
        },
    ])
}

/// `points` angles evenly spaced over [0, π/2], endpoints included.
pub fn quarter_turn_grid(points: usize) -> Vec<f64> {
    grid(0.0, std::f64::consts::FRAC_PI_2, points)
}

pub fn grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![lo],
        n => (0..n)
            .map(|k| if k == n - 1 { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Reconstruction from exact three-qubit statistics against the direct
/// values, and the spread across probe strengths, at `p = 0`.
pub fn round_trip_suites(thetas: &[f64]) -> Result<Vec<SuiteResult>> {
    let points = thetas.len();
    let per_theta: Vec<(f64, f64)> = thetas
        .par_iter()
        .map(|&theta| -> Result<(f64, f64)> {
            let model = crate::experiment::apparatus_model(theta, 0.0)?;
            let mut dev = 0.0f64;
            let mut spread = 0.0f64;
            for mode in [Mode::Disturbance, Mode::Precision] {
                let mut values = Vec::with_capacity(ROUND_TRIP_GAMMA_SQ.len());
                for &g2 in &ROUND_TRIP_GAMMA_SQ {
                    let cfg = ExperimentConfig::new(theta, g2, mode, 0.0)?;
                    let direct = match mode {
                        Mode::Disturbance => eta_direct(&model, cfg.signal_state())?,
                        Mode::Precision => epsilon_direct(&model, cfg.signal_state())?,
                    };
                    let r = reconstruct(&cfg, &exact_outcomes(&cfg)?)?;
                    dev = dev.max((r.value - direct).abs());
                    values.push(r.value);
                }
                let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
                spread = spread.max(hi - lo);
            }
            Ok((dev, spread))
        })
        .collect::<Result<_>>()?;
    Ok(vec![
        SuiteResult {
            name: "round-trip",
            instances: points,
            max_deviation: per_theta.iter().map(|d| d.0).fold(0.0, f64::max),
            tolerance: ROUND_TRIP_TOL,
        },
        SuiteResult {
            name: "strength-invariance",
            instances: points,
            max_deviation: per_theta.iter().map(|d| d.1).fold(0.0, f64::max),
            tolerance: ROUND_TRIP_TOL,
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoints() {
        assert!(grid(0.0, 1.0, 0).is_empty());
        assert_eq!(grid(0.5, 1.0, 1), vec![0.5]);
        let g = quarter_turn_grid(101);
        assert_eq!(g.len(), 101);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[100], std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn small_suites_pass() {
        for s in random_identity_suites(5, 8, false).unwrap() {
            assert!(s.passed(), "{s:?}");
        }
        for s in round_trip_suites(&quarter_turn_grid(7)).unwrap() {
            assert!(s.passed(), "{s:?}");
        }
    }

    #[test]
    fn injected_fault_is_detected() {
        let suites = random_identity_suites(5, 4, true).unwrap();
        assert!(!suites.iter().find(|s| s.name == "disturbance-identity").unwrap().passed());
    }

    #[test]
    fn zero_instances_pass_vacuously() {
        let suites = random_identity_suites(1, 0, false).unwrap();
        assert!(suites.iter().all(|s| s.passed() && s.instances == 0));
        assert!(round_trip_suites(&[]).unwrap().iter().all(SuiteResult::passed));
    }
}
