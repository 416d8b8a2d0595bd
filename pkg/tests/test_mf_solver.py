import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfchaos import rng
from mfchaos.curve import MeasureCurve
from mfchaos.errors import CurveCoverageError, NonContractionError, ParamError
from mfchaos.levy_model import (LipschitzParams, MeanFieldModel, confinement,
                                constant_sigma, linear_attraction)
from mfchaos.mf_solver import (SolverConfig, contraction_window, coupled_residual,
                               pca_refinement_study, solve_linearized, solve_mean_field,
                               stability_check, zeta)
from mfchaos.ot_core import PointCloud
from mfchaos.simulator import simulate_frozen

from oracles import ou_variance


def _cloud(M, d=1, seed=0, scale=1.0):
    return PointCloud(scale * rng.normals(seed, 0, np.arange(M), 0, rng.INITIAL, d))


def _attraction(s=0.0, kappa=1.0):
    lip = LipschitzParams(alpha=0.5 / kappa, beta=0.0, M=2 * kappa ** 2, M_prime=0.0)
    return MeanFieldModel.average_form(1, linear_attraction(1, kappa),
                                       constant_sigma(1, s) if s else None, lipschitz=lip)


# --- zeta --------------------------------------------------------------------

def test_zeta_examples():
    assert zeta(0.0, 5.0) == 5.0
    assert zeta(3.0, 0.0) == 0.0
    assert zeta(math.log(2), 1.0) == pytest.approx(1 / math.log(2), abs=1e-12)
    with pytest.raises(ParamError):
        zeta(-1.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 5), st.floats(0, 5), st.floats(0, 1), st.floats(0, 1))
def test_zeta_monotone_and_above_t(beta, t, db, dt):
    z = zeta(beta, t)
    assert z >= t * (1 - 1e-12)
    assert zeta(beta + db, t) >= z * (1 - 1e-12)
    assert zeta(beta, t + dt) >= z * (1 - 1e-12)


def test_zeta_continuity_at_zero():
    t = np.linspace(0, 10, 101)
    assert np.max(np.abs(zeta(1e-8, t) - t)) < 1e-6


def test_contraction_window():
    assert contraction_window(LipschitzParams(alpha=0.5, beta=0.0), 4.0, 0.125) == 1.0
    lip = LipschitzParams(alpha=1.0, beta=2.0)
    H = contraction_window(lip, 10.0, 1e-3)
    assert lip.alpha * zeta(lip.beta, H) <= 0.5 + 1e-9
    with pytest.warns(RuntimeWarning):
        assert contraction_window(None, 8.0, 0.5) == 1.0


# --- curves ------------------------------------------------------------------

def test_measure_curve_basics():
    c = MeasureCurve.from_clouds([0.0, 0.5, 1.0], [np.full((2, 1), v) for v in (0, 1, 2)])
    assert c.at(0.75).points[0, 0] == 1.0
    assert c.at(1.0).points[0, 0] == 2.0
    with pytest.raises(CurveCoverageError):
        c.at(1.5)
    tail = MeasureCurve.from_clouds([1.0, 2.0], [np.full((2, 1), v) for v in (2, 3)])
    assert len(c.append(tail)) == 4
    assert c.restrict(0.5, 1.0).times.tolist() == [0.5, 1.0]
    with pytest.raises(ParamError):
        MeasureCurve([1.0, 0.0], np.zeros((2, 2, 1)))


# --- linearized problem -------------------------------------------------------

def test_zero_model_keeps_cloud():
    rho = _cloud(50)
    curve = MeasureCurve.constant(rho, [0.0, 0.5, 1.0])
    out = solve_linearized(MeanFieldModel.average_form(1), curve, rho,
                           SolverConfig(50, 0.5, 0.1))
    assert all(np.array_equal(out.points[k], rho.points) for k in range(3))


def test_linear_decay_factor():
    rho = _cloud(20)
    curve = MeasureCurve.constant(rho, [0.0, 1.0])
    out = solve_linearized(MeanFieldModel.average_form(1, confinement(1)), curve, rho,
                           SolverConfig(20, 1.0, 1e-3))
    ratio = out.points[1] / rho.points
    assert np.allclose(ratio, math.exp(-1), rtol=0.01)


def test_mean_relaxes_to_frozen_atom():
    rho = _cloud(400, scale=0.5)
    m = 2.0
    curve = MeasureCurve.constant(PointCloud([[m]]), np.linspace(0, 1, 5))
    out = solve_linearized(_attraction(s=0.3), curve, rho, SolverConfig(400, 0.25, 1e-3))
    target = m + (rho.mean()[0] - m) * math.exp(-1)
    assert out.points[4].mean() == pytest.approx(target, abs=4 * 0.3 / math.sqrt(400) + 0.01)


def test_constant_curve_equals_frozen_simulation():
    rho = _cloud(30)
    mu = _cloud(10, seed=5)
    model = _attraction(s=0.4)
    cfg = SolverConfig(30, 0.25, 0.05, seed=2)
    out = solve_linearized(model, MeasureCurve.constant(mu, np.linspace(0, 1, 5)), rho, cfg)
    direct = simulate_frozen(model, mu, rho, 1.0, 0.05, 2)
    assert np.array_equal(out.points[4], direct)


def test_gluing_is_bitwise():
    rho = _cloud(40)
    model = _attraction(s=0.5)
    cfg = SolverConfig(40, 0.125, 0.0625 / 4, seed=1)
    times = np.linspace(0, 1, 9)
    mu = MeasureCurve(times, np.stack([_cloud(40, seed=k).points for k in range(9)]))
    whole = solve_linearized(model, mu, rho, cfg)
    first = solve_linearized(model, mu.restrict(0.0, 0.5), rho, cfg)
    second = solve_linearized(model, mu.restrict(0.5, 1.0), first.cloud(4), cfg)
    assert np.array_equal(whole.points, first.append(second).points)


def test_coverage_and_size_errors():
    rho = _cloud(10)
    curve = MeasureCurve.constant(rho, [0.0, 1.0])
    with pytest.raises(Exception):
        solve_linearized(_attraction(), curve, _cloud(11), SolverConfig(10, 1.0, 0.1))
    with pytest.raises(ParamError):
        SolverConfig(10, 0.3, 0.2)


# --- nonlinear problem -------------------------------------------------------

def test_noninteracting_model_converges_in_one_update():
    m = MeanFieldModel.average_form(1, confinement(1), constant_sigma(1, 0.5),
                                    lipschitz=LipschitzParams(0.0, 2.0))
    sol = solve_mean_field(m, _cloud(100), 1.0, SolverConfig(100, 0.25, 0.01))
    assert sol.iterations == [1]
    assert sol.residuals[0][-1] == 0.0


def test_mean_constant_without_noise():
    rho = _cloud(300)
    curve, _ = solve_mean_field(_attraction(), rho, 1.0, SolverConfig(300, 0.125, 1e-3))
    for k in range(len(curve)):
        assert curve.points[k].mean() == pytest.approx(rho.mean()[0], abs=1e-10)


def test_picard_residuals_decay_geometrically():
    model = _attraction(s=0.5)
    sol = solve_mean_field(model, _cloud(500), 2.0, SolverConfig(500, 0.125, 1 / 256))
    assert len(sol.windows) == 2
    factor = model.lipschitz.alpha * zeta(0.0, 1.0) + 0.1
    for res in sol.residuals:
        for a, b in zip(res[1:], res[2:]):
            assert b <= factor * a + 1e-15


def test_non_contraction_raises():
    with pytest.raises(NonContractionError) as info:
        solve_mean_field(_attraction(s=0.5), _cloud(50), 1.0,
                         SolverConfig(50, 0.25, 0.05, max_picard_iters=1))
    assert len(info.value.residuals) == 1


def test_window_warning_for_large_h_contract():
    cfg = SolverConfig(20, 0.5, 0.1, h_contract=4.0)
    with pytest.warns(RuntimeWarning):
        solve_mean_field(_attraction(s=0.1, kappa=2.0), _cloud(20), 4.0, cfg)


def test_ou_variance_small():
    s, M = 0.6, 4000
    rho = _cloud(M)
    curve, _ = solve_mean_field(_attraction(s=s), rho, 1.0, SolverConfig(M, 0.125, 1 / 128))
    v0 = rho.points.var()
    assert curve.points[-1].var() == pytest.approx(ou_variance(v0, s, 1.0),
                                                              rel=0.05)


def test_coupled_residual_bounds_exact_cost():
    a = MeasureCurve.constant(_cloud(6), [0.0, 1.0])
    b = MeasureCurve.constant(_cloud(6, seed=3), [0.0, 1.0])
    from mfchaos.ot_core import w2_cost
    assert coupled_residual(a, b) >= w2_cost(a.cloud(0), b.cloud(0))[0]


# --- PCA study ----------------------------------------------------------------

def test_pca_constant_curve_is_mesh_independent():
    rho = _cloud(50)
    mu = MeasureCurve.constant(rho, [0.0, 1.0])
    study = pca_refinement_study(_attraction(s=0.3), mu, rho, [0.5, 0.25, 0.125],
                                 SolverConfig(50, 0.5, 1 / 64))
    assert study.to_finest == [0.0, 0.0, 0.0]
    assert study.successive == [0.0, 0.0]


def _time_drift():
    # b(x, mu) = -(1 + mean(mu)) x; along mu_t = delta_t this is b_t(x) = -(1 + t) x
    return MeanFieldModel.general(1, b=lambda x, p: -(1.0 + p.mean(axis=0)) * x,
                                  sigma=lambda x, p: np.full(x.shape + (1,), 0.5))


def test_pca_time_varying_drift_and_triangle_chain():
    T, dt = 1.0, 2 ** -8
    grid = np.arange(0, 257) * dt
    mu = MeasureCurve(grid, grid[:, None, None].copy())
    study = pca_refinement_study(_time_drift(), mu, _cloud(400), [T / 4, T / 8, T / 16],
                                 SolverConfig(400, T / 4, dt))
    assert study.successive[1] < study.successive[0]
    assert all(r <= 0.75 for r in study.ratios)
    root = [math.sqrt(v) for v in study.successive]
    for i, d in enumerate(study.to_finest):
        assert math.sqrt(d) <= sum(root[i:]) + 1e-12
    assert study.to_finest[0] <= 2 * (study.successive[0] + study.to_finest[1]) + 1e-12


def test_pca_mesh_validation():
    rho = _cloud(5)
    mu = MeasureCurve.constant(rho, [0.0, 1.0])
    cfg = SolverConfig(5, 0.5, 0.125)
    with pytest.raises(ParamError):
        pca_refinement_study(_attraction(), mu, rho, [0.25, 0.5], cfg)
    with pytest.raises(ParamError):
        pca_refinement_study(_attraction(), mu, rho, [0.5, 0.375], cfg)


# --- stability ---------------------------------------------------------------

def test_stability_identical_problems():
    rho = _cloud(40)
    mu = MeasureCurve.constant(_cloud(10, seed=2), np.linspace(0, 1, 5))
    rep = stability_check((mu, mu), rho, rho, 1.0, 0.0, SolverConfig(40, 0.25, 0.05),
                          _attraction(s=0.5), replicates=3)
    assert np.all(rep.lhs == 0.0) and rep.passed


def test_stability_translation_flow():
    v = 0.8
    rho = _cloud(40)
    mu = MeasureCurve.constant(rho, np.linspace(0, 1, 5))
    model = MeanFieldModel.average_form(1, confinement(1), constant_sigma(1, 0.5))
    rep = stability_check((mu, mu), rho, PointCloud(rho.points + v), 0.0, 0.0,
                          SolverConfig(40, 0.25, 1e-3), model, replicates=2)
    assert rep.passed
    assert rep.lhs[-1] == pytest.approx(0.5 * v * v * math.exp(-2), rel=0.01)


def test_stability_distinct_curves():
    kappa = 1.3
    model = _attraction(s=0.4, kappa=kappa)
    times = np.linspace(0, 1, 9)
    mu = MeasureCurve(times, np.stack([_cloud(20, seed=k).points + k / 8 for k in range(9)]))
    nu = MeasureCurve(times, np.stack([_cloud(20, seed=50 + k).points for k in range(9)]))
    rep = stability_check((mu, nu), _cloud(60, seed=7), _cloud(60, seed=8, scale=1.5),
                          kappa, 0.0, SolverConfig(60, 0.125, 1 / 64), model, replicates=4)
    assert rep.passed
    assert np.all(rep.margin >= 0)
