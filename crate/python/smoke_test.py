"""Smoke test for the mdr_sim extension module.

Build and install first, e.g. `pip install ./crates/py --no-build-isolation`
or `maturin develop -m crates/py/Cargo.toml`, then run `python python/smoke_test.py`.
"""

import math

import mdr_sim


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    eps, eta, h, o, c = mdr_sim.closed_form_reference(math.pi / 8)
    assert close(h, 2 - math.sqrt(2)) and close(c, 1.0)

    r = mdr_sim.exact_report(math.pi / 8)
    assert close(r.epsilon, eps) and close(r.eta, eta) and close(r.o, o)
    assert not r.heisenberg_holds and r.ozawa_holds

    noisy = mdr_sim.reconstructed_report(0.2, p=0.1)
    assert noisy.h < 1 and noisy.o >= 1

    cfg = mdr_sim.ExperimentConfig(0.0, gamma_sq=0.75, mode="disturbance")
    probs = cfg.exact_outcomes()
    assert close(sum(map(sum, probs)), 1.0, 1e-12)
    assert close(cfg.reconstruct(), math.sqrt(2))
    assert close(cfg.reconstruct(probs), math.sqrt(2))

    sampled = mdr_sim.ExperimentConfig(math.pi / 8, shots=200_000, seed=7)
    counts = sampled.sample_shots()
    assert counts == sampled.sample_shots()
    assert sum(map(sum, counts)) == 200_000
    assert abs(sampled.reconstruct_counts(counts) - 0.765367) < 0.02

    branches = mdr_sim.eig_hermitian([[0, 1], [1, 0]])
    assert [round(v, 12) for v, _ in branches] == [-1.0, 1.0]

    dist = dict(mdr_sim.delta_distribution(0.0))
    assert close(dist[0.0], 0.5, 1e-12)

    suites = mdr_sim.run_verification(instances=10, round_trip_points=11)
    assert all(passed for *_, passed in suites), suites

    lines = mdr_sim.sweep(theta_steps=3, p_list=[0.0])
    assert lines[0].startswith("theta,p,gamma_sq") and len(lines) == 4

    try:
        mdr_sim.ExperimentConfig(0.1, gamma_sq=0.5)
    except mdr_sim.MdrError as e:
        assert "strength" in str(e)
    else:
        raise AssertionError("weak probe accepted")

    print("mdr_sim smoke test passed:", r)


if __name__ == "__main__":
    main()
