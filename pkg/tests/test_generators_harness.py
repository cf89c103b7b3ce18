import math

import numpy as np
import pytest
from pydantic import ValidationError

from dynsbm import core
from dynsbm.clusters import ClusterFamily, PenaltySpec, penalty
from dynsbm.generators import a0_coefficients, a0_weighted_norms, constant_truth, generate_dsbm
from dynsbm.harness import (
    ExperimentConfig, coverage_allowance, oracle_inequality_check, rate_sweep, records_to_csv,
    run_experiment,
)
from dynsbm.transform import dct_basis


def test_a0_condition_and_range(rng):
    for nu0 in (0.5, 1.0, 2.0):
        for L in (4, 8, 16):
            D = a0_coefficients(2, L, dct_basis(L), nu0=nu0, K0=0.05, rng=rng)
            assert np.all(a0_weighted_norms(D, nu0) <= 0.05 + 1e-12)
            Q = D @ dct_basis(L).matrix
            assert Q.min() >= 0.1 - 1e-12 and Q.max() <= 0.9 + 1e-12


def test_truth_with_switching():
    t = generate_dsbm(12, 5, 2, n0=2, seed=4)
    fam = ClusterFamily(12, 5, 2, "balanced")
    assert fam.membership_allowed(t.membership)
    assert np.allclose(core.vectorize(t.lam), t.theta)


def test_bound_noiseless_at_truth():
    t = generate_dsbm(10, 4, 2, seed=1)
    spec = PenaltySpec(ClusterFamily(10, 4, 0))
    b = oracle_inequality_check(0.0, t, 3.0, spec)
    assert b.bias_at_truth < 1e-20
    expect = (4 * penalty(spec, 12, 2) + 38 * 3) / (100 * 4)
    assert abs(b.bound_at_truth - expect) < 1e-12
    assert b.bound <= b.bound_at_truth and b.satisfied
    b0 = oracle_inequality_check(0.0, t, 0.0, spec)
    assert b0.bound > 0 and coverage_allowance(0.0, 10) >= 1


def test_constant_truth_zero():
    cfg = ExperimentConfig(generator={"type": "constant", "n": 8, "L": 3, "value": 0.0},
                           replicates=3, seed=2)
    recs, summary = run_experiment(cfg)
    assert all(r.status == "ok" for r in recs)
    assert all(r.mse < 1e-20 for r in recs)


def test_noiseless_mode_records_bias():
    cfg = ExperimentConfig(generator={"type": "dsbm", "n": 12, "L": 4, "time_constant": True},
                           estimator={"penalty_scale": 0.01}, replicates=1, noiseless=True)
    recs, _ = run_experiment(cfg)
    # the true model is feasible and selected: no bias remains
    assert recs[0].m_hat == 2 and recs[0].mse < 1e-20


def test_errors_are_recorded():
    cfg = ExperimentConfig(generator={"type": "dsbm", "n": 6, "L": 2},
                           estimator={"family": "balanced", "m_min": 3, "m_max": 3,
                                      "n0": 0}, replicates=2)
    cfg.estimator.m_min = 7  # infeasible on purpose, bypasses validation
    cfg.estimator.m_max = 7
    recs, summary = run_experiment(cfg)
    assert all(r.status.startswith("error") for r in recs) and summary["failed"] == 2


def test_config_validation(tmp_path):
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate({"generator": {"type": "dsbm"}, "bogus": 1})
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate({"schema_version": 2, "generator": {"type": "dsbm"}})
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate({"generator": {"type": "graphon",
                                                       "spec": {"kind": "smooth", "name": "x"}}})


def test_csv_deterministic():
    cfg = ExperimentConfig(generator={"type": "dsbm", "n": 10, "L": 4}, replicates=3, seed=9)
    a = records_to_csv(run_experiment(cfg)[0], cfg.t_values)
    b = records_to_csv(run_experiment(cfg)[0], cfg.t_values)
    strip = lambda s: [line.rsplit(",", 1)[0] for line in s.splitlines()]
    assert strip(a) == strip(b)
    assert a.splitlines()[1].endswith("wall_time")


def test_parallel_matches_serial():
    base = {"generator": {"type": "dsbm", "n": 10, "L": 4}, "replicates": 3, "seed": 4}
    a = run_experiment(ExperimentConfig(**base))[0]
    b = run_experiment(ExperimentConfig(**base, workers=2))[0]
    assert [r.mse for r in a] == [r.mse for r in b]


def test_graphon_experiment():
    cfg = ExperimentConfig(generator={"type": "graphon", "n": 10, "L": 4,
                                      "spec": {"kind": "smooth", "name": "product"}},
                           replicates=2)
    recs, _ = run_experiment(cfg)
    assert all(r.status == "ok" and r.bounds == [] for r in recs)


def test_rate_sweep_degenerate():
    cfg = ExperimentConfig(generator={"type": "constant"}, replicates=2)
    with pytest.raises(ValueError):
        rate_sweep(cfg, "n", [8, 16])
    with pytest.raises(ValueError):
        rate_sweep(cfg, "m", [8, 16, 32])


def test_rate_sweep_in_l():
    cfg = ExperimentConfig(generator={"type": "dsbm", "n": 16, "m": 2, "time_constant": True},
                           estimator={"penalty_scale": 0.1}, replicates=5, seed=3)
    rep = rate_sweep(cfg, "L", [4, 16, 64], n_boot=50)
    assert rep["nonincreasing"]
