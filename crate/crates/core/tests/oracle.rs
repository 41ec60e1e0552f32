//! Cross-checks against an independent linear-algebra implementation.

use mdr_core::mdr_theory::{
    delta_distribution, epsilon_direct, eta_direct, rms_of_delta, weak_joint, Interaction, Mode,
    DEFAULT_BIN_TOL,
};
use mdr_core::qmath::{eigenvalues_hermitian, ComplexMatrix};
use mdr_core::random::{random_hermitian, random_model};
use mdr_core::verify::instance_rng;
use nalgebra::{Complex, DMatrix};

type M = DMatrix<Complex<f64>>;

fn to_na(m: &ComplexMatrix) -> M {
    let d = m.dim();
    M::from_fn(d, d, |r, c| m[(r, c)])
}

fn eye(d: usize) -> M {
    M::identity(d, d)
}

fn re_trace(m: &M) -> f64 {
    m.trace().re
}

/// Eigenprojectors from nalgebra's Hermitian eigensolver, grouped by value.
fn projectors(h: &M) -> Vec<(f64, M)> {
    let eig = h.clone().symmetric_eigen();
    let mut groups: Vec<(f64, M)> = Vec::new();
    for (k, &val) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let p = &v * v.adjoint();
        match groups.iter_mut().find(|(g, _)| (g - val).abs() < 1e-8) {
            Some((_, acc)) => *acc += p,
            None => groups.push((val, p)),
        }
    }
    groups
}

#[test]
fn eigenvalues_agree_with_nalgebra() {
    let mut rng = instance_rng(7, 0);
    for d in 1..=8 {
        for _ in 0..10 {
            let h = random_hermitian(d, &mut rng);
            let ours = eigenvalues_hermitian(&h).unwrap();
            let mut theirs: Vec<f64> = to_na(&h).symmetric_eigen().eigenvalues.iter().copied().collect();
            theirs.sort_by(f64::total_cmp);
            for (a, b) in ours.iter().zip(&theirs) {
                assert!((a - b).abs() < 1e-10, "{ours:?} vs {theirs:?}");
            }
        }
    }
}

#[test]
fn random_models_match_brute_force_traces() {
    for index in 0..40 {
        let mut rng = instance_rng(2024, index);
        let (model, rho) = random_model(&mut rng).unwrap();
        let Interaction::Unitary(u) = model.interaction() else {
            panic!("random models are unitary");
        };
        let (ds, dm) = (model.signal_dim(), model.meter_dim());
        let u = to_na(u);
        let ud = u.adjoint();
        let a = to_na(model.measured_obs().matrix());
        let b = to_na(model.disturbed_obs().matrix());
        let m = to_na(model.meter_readout().matrix());
        let joint = to_na(rho.matrix()).kronecker(&to_na(model.meter_state().matrix()));

        let n_err = &ud * eye(ds).kronecker(&m) * &u - a.kronecker(&eye(dm));
        let d_err = &ud * b.kronecker(&eye(dm)) * &u - b.kronecker(&eye(dm));
        let eps = re_trace(&(&n_err * &n_err * &joint)).max(0.0).sqrt();
        let eta = re_trace(&(&d_err * &d_err * &joint)).max(0.0).sqrt();
        assert!((eps - epsilon_direct(&model, &rho).unwrap()).abs() < 1e-9, "ε instance {index}");
        assert!((eta - eta_direct(&model, &rho).unwrap()).abs() < 1e-9, "η instance {index}");

        // weak-valued joint table, entry by entry
        let lift = |p: &M| p.kronecker(&eye(dm));
        let table = weak_joint(&model, &rho, Mode::Disturbance).unwrap();
        let pb = projectors(&b);
        let mut brute_sq = 0.0;
        for (bi, pi) in &pb {
            for (bf, pf) in &pb {
                let w = re_trace(&(&ud * lift(pf) * &u * lift(pi) * &joint));
                let ours = table.get(*bi, *bf, 1e-7).expect("entry present");
                assert!((w - ours).abs() < 1e-10);
                brute_sq += (bf - bi).powi(2) * w;
            }
        }
        assert!((brute_sq.max(0.0).sqrt() - eta).abs() < 1e-9);

        let pa = projectors(&a);
        let pm = projectors(&m);
        let prec = weak_joint(&model, &rho, Mode::Precision).unwrap();
        let mut brute_eps_sq = 0.0;
        for (ai, pi) in &pa {
            for (mf, pf) in &pm {
                let w = re_trace(&(&ud * eye(ds).kronecker(pf) * &u * lift(pi) * &joint));
                let ours = prec.get(*ai, *mf, 1e-7).expect("entry present");
                assert!((w - ours).abs() < 1e-10);
                brute_eps_sq += (mf - ai).powi(2) * w;
            }
        }
        let rms = rms_of_delta(&delta_distribution(&prec, DEFAULT_BIN_TOL)).unwrap();
        assert!((brute_eps_sq.max(0.0).sqrt() - rms).abs() < 1e-9);
    }
}
