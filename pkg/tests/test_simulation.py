import math

import numpy as np
import pytest

from drrd.core import RdConfig
from drrd.estimator import estimate_dr
from drrd.errors import UnsupportedMoment
from drrd.kernels import Fixed
from drrd.outcome_models import PolynomialSieve
from drrd.simulation import (
    CATALOG,
    DgpSpec,
    McRow,
    Normal,
    Term,
    Uniform,
    assess_convergence,
    covariate_shift,
    curved_jump,
    generate,
    linear_jump,
    run_scenario,
    true_tau,
)


def indicator_spec(noise_sd=0.0):
    return DgpSpec("Indicator", {1: (Term(1.0),), 0: ()}, noise_sd=noise_sd)


def test_generate_indicator_zero_noise():
    s = generate(indicator_spec(), 200, seed=1)
    y, w = s.dataset.y, s.dataset.w
    assert np.all(y[w >= 0] == 1.0) and np.all(y[w < 0] == 0.0)
    assert s.tau0 == 1.0


def test_generate_reveals_assigned_arm():
    s = generate(curved_jump(), 300, seed=2)
    np.testing.assert_array_equal(s.dataset.y, np.where(s.d == 1, s.y1, s.y0))


def test_generate_seeded():
    a = generate(covariate_shift(), 100, seed=5).dataset
    b = generate(covariate_shift(), 100, seed=5).dataset
    assert a.y.tobytes() == b.y.tobytes() and a.z.tobytes() == b.z.tobytes()
    with pytest.raises(ValueError):
        generate(linear_jump(), 3, seed=0)


@pytest.mark.parametrize("dist", [Uniform(-1.0, 3.0), Normal(2.0, 0.5)])
def test_w_moment(dist):
    spec = DgpSpec("M", {1: (Term(0.0),), 0: (Term(0.0),)}, w_dist=dist, cutoff=1.0)
    w = generate(spec, 100_000, seed=3).dataset.w
    mean = 1.0 if isinstance(dist, Uniform) else 2.0
    sd = 4 / math.sqrt(12) if isinstance(dist, Uniform) else 0.5
    assert abs(w.mean() - mean) < 4 * sd / math.sqrt(w.shape[0])


def test_true_tau_intercepts():
    spec = DgpSpec("L", {1: (Term(2.0), Term(3.0, 1)), 0: (Term(1.0), Term(1.0, 1))})
    assert true_tau(spec) == 1.0
    zspec = DgpSpec(
        "Z",
        {1: (Term(2.0), Term(5.0, 0, (1,))), 0: (Term(1.0), Term(-1.0, 0, (1,)))},
        z_dim=1,
        z_dist=Normal(0.0, 2.0),
    )
    assert true_tau(zspec) == 1.0


def test_true_tau_quadratic_z_against_monte_carlo():
    spec = DgpSpec(
        "Q",
        {1: (Term(1.0), Term(2.0, 0, (2,)), Term(0.5, 1, (1,))), 0: (Term(0.3, 0, (1,)),)},
        z_dim=1,
        z_dist=Uniform(0.0, 1.0),
    )
    assert true_tau(spec) == pytest.approx(1 + 2 / 3 - 0.15, abs=1e-15)
    z = np.random.default_rng(0).uniform(0, 1, (1_000_000, 1))
    c = np.zeros(z.shape[0])
    mc = np.mean(spec.mean_outcome(1, c, z) - spec.mean_outcome(0, c, z))
    assert abs(mc - true_tau(spec)) < 4 * 0.6 / math.sqrt(z.shape[0])


def test_normal_moments():
    d = Normal(0.7, 1.3)
    x = np.random.default_rng(1).normal(0.7, 1.3, 2_000_000)
    for q in range(1, 5):
        assert d.moment(q) == pytest.approx(np.mean(x**q), rel=2e-2)
    assert Normal(0.0, 1.0).moment(4) == 3.0


def test_unsupported_moment():
    spec = DgpSpec("U", {1: (Term(1.0, 0, (9,)),), 0: ()}, z_dim=1)
    with pytest.raises(UnsupportedMoment):
        true_tau(spec)


def test_covariate_shift_tau():
    assert true_tau(covariate_shift()) == pytest.approx(0.8 + 0.25 - 0.4 + 0.5 / 3)
    assert true_tau(curved_jump()) == 0.5
    assert set(CATALOG) == {"LinearJump", "CurvedJump", "CovariateShift"}


def test_dgp_roundtrip():
    for make in CATALOG.values():
        spec = make()
        assert DgpSpec.from_dict(spec.to_dict()) == spec


def test_dgp_validation():
    with pytest.raises(ValueError):
        DgpSpec("bad", {1: ()})
    with pytest.raises(ValueError):
        DgpSpec("bad", {1: (Term(1.0, 0, (1,)),), 0: ()}, z_dim=0)
    with pytest.raises(ValueError):
        DgpSpec("bad", {1: (), 0: ()}, cutoff=5.0)


def test_exact_recovery_scenario():
    cfg = RdConfig(bandwidth=Fixed(0.4), first_stage=PolynomialSieve(1))
    rep = run_scenario(linear_jump(noise_sd=0.0), cfg, [100, 400], reps=50, seed=3)
    for row in rep.rows:
        assert abs(row.bias) < 1e-8 and row.rmse < 1e-8
        assert row.reps == 50
    assert rep.converged


def test_covariate_scenario_recovers():
    spec = covariate_shift(noise_sd=0.0)
    cfg = RdConfig(first_stage=PolynomialSieve(1, z_degree=2))
    sample = generate(spec, 200, seed=4)
    z = sample.dataset.z
    c = np.zeros(200)
    in_sample = np.mean(spec.mean_outcome(1, c, z) - spec.mean_outcome(0, c, z))
    assert abs(estimate_dr(sample.dataset, cfg).tau_hat - in_sample) < 1e-8
    # across samples only the z-moment sampling error remains
    rep = run_scenario(spec, cfg, [200], reps=50, seed=3)
    assert abs(rep.rows[0].bias) < 3 * rep.rows[0].mc_se


def test_report_invariants_and_determinism():
    cfg = RdConfig()
    a = run_scenario(linear_jump(), cfg, [300], reps=60, seed=11, baseline=True)
    b = run_scenario(linear_jump(), cfg, [300], reps=60, seed=11, baseline=True)
    assert a == b
    row = a.rows[0]
    assert row.rmse**2 >= row.bias**2 - 1e-12
    assert row.baseline_mean is not None and row.baseline_mc_se > 0
    assert row.redraws / row.reps < 0.01
    with pytest.raises(ValueError):
        run_scenario(linear_jump(), cfg, [300], reps=10)


def test_redraws_counted():
    # narrow support beside the cutoff: small samples often leave < 2 control units
    spec = DgpSpec("Skewed", {1: (Term(1.0),), 0: ()}, w_dist=Uniform(-0.05, 1.0), noise_sd=0.1)
    cfg = RdConfig(first_stage=PolynomialSieve(0))
    rep = run_scenario(spec, cfg, [20], reps=50, seed=0)
    assert rep.rows[0].redraws > 0
    assert rep.rows[0].reps == 50


def _row(n, bias, se):
    return McRow("s", n, 100, 0.0, bias, bias, abs(bias), se, se * 10, None, 0.1, 0, abs(bias) > 3 * se)


def test_convergence_assessment():
    assert assess_convergence([_row(1, 0.001, 0.01), _row(2, -0.002, 0.005)])
    assert assess_convergence([_row(1, 0.05, 0.003), _row(2, 0.03, 0.0015), _row(3, 0.02, 0.001)])
    assert not assess_convergence([_row(1, -0.23, 0.003), _row(2, -0.23, 0.0015), _row(3, -0.23, 0.0007)])
    assert not assess_convergence([_row(1, 0.01, 0.001), _row(2, 0.05, 0.001)])
