"""Particle solvers for the linearized and the nonlinear mean-field equations.

The linearized problem evolves a cloud under the generators A(mu_t) of a
given measure curve.  It is solved with the piecewise constant approximation:
on each partition cell [t_k, t_{k+1}) the generator is frozen at mu_{t_k} and
M independent particles are simulated, then the cell solutions are chained.

The nonlinear problem is the fixed point mu = Phi(mu) of the linearized
solution map.  It is found by Picard iteration on short windows, chained
window after window.  All iterates reuse the same noise (common random
numbers), so Phi is a deterministic map on clouds and successive iterates
can be compared particle by particle.
"""

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import rng
from .curve import TIME_TOL, MeasureCurve
from .errors import NonContractionError, ParamError, SizeError
from .ot_core import PointCloud, exact_w2_assignment, w2_cost
from .simulator import NoiseSource, advance_frozen

__all__ = ["MeasureCurve", "SolverConfig", "zeta", "solve_linearized",
           "solve_mean_field", "pca_refinement_study", "stability_check"]


@dataclass(frozen=True)
class SolverConfig:
    """Discretization of the particle solvers.

    Attributes
    ----------
    M : int
        Cloud size.
    h : float
        Partition mesh of the piecewise constant approximation.
    dt : float
        Time step of the frozen-generator simulations; ``h`` must be a
        multiple of it.
    picard_tol : float
        Stop Picard iteration once the residual drops below this value.
    max_picard_iters : int
    h_contract : float, optional
        Picard window length; derived from the declared constants if absent.
    seed : int
    """

    M: int
    h: float
    dt: float
    picard_tol: float = 1e-8
    max_picard_iters: int = 50
    h_contract: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.M < 1:
            raise SizeError("cloud size must be positive")
        if not (0 < self.dt <= self.h):
            raise ParamError("need 0 < dt <= h")
        if not _is_multiple(self.h, self.dt):
            raise ParamError("h must be an integer multiple of dt")
        if not (self.picard_tol > 0):
            raise ParamError("picard_tol must be positive")
        if self.max_picard_iters < 1:
            raise ParamError("max_picard_iters must be at least 1")
        if self.h_contract is not None and self.h_contract < self.h:
            raise ParamError("h_contract must be at least h")


def _is_multiple(a, b):
    r = a / b
    return abs(r - round(r)) <= 1e-6 * max(1.0, r)


def _nsteps(a, b):
    return int(round(a / b))


def zeta(beta, t):
    """(exp(beta t) - 1) / beta, continued by t at beta = 0.

    Parameters
    ----------
    beta, t : float or array_like, nonnegative
    """
    beta = np.asarray(beta, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    if np.any(beta < 0) or np.any(t < 0):
        raise ParamError("zeta needs nonnegative beta and t")
    x = beta * t
    small = x < 1e-6
    safe_beta = np.where(small, 1.0, beta)
    out = np.where(small, t * (1.0 + x / 2.0 + x * x / 6.0), np.expm1(x) / safe_beta)
    return float(out) if out.ndim == 0 else out


def contraction_window(lipschitz, T, h):
    """Picard window with alpha zeta_beta(window) = 1/2, rounded down to the mesh."""
    if lipschitz is None or lipschitz.alpha is None or lipschitz.beta is None:
        warnings.warn("no declared (alpha, beta); using the window T/8", RuntimeWarning)
        H = T / 8.0
    elif lipschitz.alpha == 0:
        H = T
    elif lipschitz.beta == 0:
        H = 0.5 / lipschitz.alpha
    else:
        H = math.log1p(lipschitz.beta / (2.0 * lipschitz.alpha)) / lipschitz.beta
    H = max(h, math.floor(H / h + 1e-9) * h)
    return min(H, T)


def _grid(t0, t1, h):
    n = _nsteps(t1 - t0, h)
    if n < 1 or abs(n * h - (t1 - t0)) > TIME_TOL * max(1.0, abs(t1)):
        raise ParamError(f"interval [{t0:g}, {t1:g}] is not a multiple of the mesh {h:g}")
    return t0 + h * np.arange(n + 1)


def solve_linearized(model, mu_curve, rho0, config, noise=None, job=rng.MEAN_FIELD_JOB):
    """Solve the linearized equation along ``mu_curve`` from ``rho0``.

    Parameters
    ----------
    model : MeanFieldModel
    mu_curve : MeasureCurve
        Its partition is the partition of the scheme; the generator on
        [t_k, t_{k+1}) is A(mu_{t_k}).
    rho0 : PointCloud
        Initial cloud at ``mu_curve.start`` with ``config.M`` points.
    config : SolverConfig
    noise : NoiseSource, optional
        Shared noise; by default the solver stream of ``config.seed``.
    job : int
        Job index of the default noise stream.

    Returns
    -------
    MeasureCurve
        Clouds at the partition times of ``mu_curve``.

    Notes
    -----
    Noise is indexed by the global step ``round(t / dt)``, so solving on two
    adjacent intervals reproduces the solution on their union exactly.
    """
    rho0 = rho0 if isinstance(rho0, PointCloud) else PointCloud(rho0)
    if rho0.M != config.M:
        raise SizeError(f"initial cloud has {rho0.M} points, expected M={config.M}")
    if rho0.dim != model.dim or mu_curve.dim != model.dim:
        raise ParamError("model, curve and cloud dimensions differ")
    times = mu_curve.times
    src = noise if noise is not None else NoiseSource(
        config.seed, config.dt, model.dim, np.arange(config.M), job, model.base_jump)
    X = rho0.points.copy()
    out = [X]
    for k in range(len(times) - 1):
        span = times[k + 1] - times[k]
        if not _is_multiple(span, config.dt) or not _is_multiple(times[k], config.dt):
            raise ParamError("partition times must lie on the dt grid")
        X = advance_frozen(X, model, mu_curve.points[k], _nsteps(times[k], config.dt),
                           _nsteps(span, config.dt), config.dt, src)
        out.append(X)
    return MeasureCurve(times, np.stack(out))


def coupled_residual(a, b):
    """sup over partition times of the index-coupled cost between two curves.

    An upper bound for the sup of the exact transport costs.
    """
    diff = a.points - b.points
    return float(np.max(0.5 * np.mean(np.sum(diff * diff, axis=-1), axis=-1)))


class MeanFieldSolution(tuple):
    """``(curve, iterations)`` with extra attributes.

    Attributes
    ----------
    curve : MeasureCurve
    iterations : list of int
        Picard updates per window; the evaluation that confirms the fixed
        point is not counted.
    residuals : list of list of float
        Residual sequence of each window.
    windows : list of (float, float)
    """

    def __new__(cls, curve, iterations, residuals, windows):
        obj = super().__new__(cls, (curve, iterations))
        obj.residuals = residuals
        obj.windows = windows
        return obj

    @property
    def curve(self):
        return self[0]

    @property
    def iterations(self):
        return self[1]


def solve_mean_field(model, rho0, T, config, t0=0.0):
    """Self-consistent mean-field curve on [t0, T] by windowed Picard iteration.

    Each window starts from the constant curve at the current cloud and
    iterates ``mu <- solve_linearized(model, mu, rho_window_start)`` until
    the residual sup_t C(mu_new, mu_old) is below ``config.picard_tol``.

    Returns
    -------
    MeanFieldSolution
        Unpacks as ``(curve, iterations_per_window)``.

    Raises
    ------
    NonContractionError
        When a window needs more than ``config.max_picard_iters`` updates.
    """
    rho0 = rho0 if isinstance(rho0, PointCloud) else PointCloud(rho0)
    h = config.h
    if not (h <= T - t0 + TIME_TOL):
        raise ParamError("mesh h exceeds the horizon")
    if config.h_contract is not None:
        H = min(math.floor(config.h_contract / h + 1e-9) * h, T - t0)
        lip = model.lipschitz
        if lip is not None and lip.alpha is not None and lip.beta is not None \
                and lip.alpha * zeta(lip.beta, H) >= 1:
            warnings.warn("declared constants give alpha*zeta_beta(h) >= 1 on the "
                          "chosen window; Picard iteration may not contract", RuntimeWarning)
    else:
        H = contraction_window(model.lipschitz, T - t0, h)
    grid = _grid(t0, T, h)
    per_window = max(1, _nsteps(H, h))
    cuts = list(range(0, len(grid) - 1, per_window)) + [len(grid) - 1]
    curve = None
    iterations, residuals, windows = [], [], []
    rho = rho0
    for w, (i0, i1) in enumerate(zip(cuts[:-1], cuts[1:])):
        times = grid[i0:i1 + 1]
        src = NoiseSource(config.seed, config.dt, model.dim, np.arange(config.M),
                          rng.MEAN_FIELD_JOB, model.base_jump, cache=True)
        mu = MeasureCurve.constant(rho, times)
        res = []
        for k in range(1, config.max_picard_iters + 1):
            new = solve_linearized(model, mu, rho, config, noise=src)
            res.append(coupled_residual(new, mu))
            mu = new
            if res[-1] < config.picard_tol:
                break
        else:
            raise NonContractionError(res, window=w)
        iterations.append(k - 1)
        residuals.append(res)
        windows.append((float(times[0]), float(times[-1])))
        curve = mu if curve is None else curve.append(mu)
        rho = mu.cloud(len(mu) - 1)
    return MeanFieldSolution(curve, iterations, residuals, windows)


def _resample_curve(curve, times):
    return MeasureCurve(times, np.stack([curve.points[curve.index_at(t)] for t in times]))


@dataclass
class PcaStudy:
    """Mesh refinement table.

    Attributes
    ----------
    meshes : list of float
    times : ndarray
        Coarsest partition times at which clouds are compared.
    to_finest : list of float
        sup_t C(rho^(h), rho^(finest)) for each mesh.
    successive : list of float
        sup_t C(rho^(h_i), rho^(h_{i+1})) for consecutive meshes.
    methods : set of str
        Transport routes used (``"sinkhorn"`` marks approximate entries).
    """

    meshes: list
    times: np.ndarray
    to_finest: list
    successive: list
    methods: set = field(default_factory=set)

    @property
    def ratios(self):
        s = self.successive
        return [s[i + 1] / s[i] if s[i] > 0 else float("nan") for i in range(len(s) - 1)]

    def table(self):
        return list(zip(self.meshes, self.to_finest))


def pca_refinement_study(model, mu, rho0, meshes, config, T=None):
    """Compare piecewise constant solutions over a sequence of nested meshes.

    Parameters
    ----------
    model : MeanFieldModel
    mu : MeasureCurve or None
        Generator curve of the linearized problem, sampled on each mesh.  With
        None the self-consistent problem is solved on [0, T] for each mesh.
    rho0 : PointCloud
    meshes : sequence of float
        Strictly decreasing, each dividing the previous one.
    config : SolverConfig
        ``config.h`` is replaced by each mesh in turn.
    T : float, optional
        Horizon; required when ``mu`` is None.

    Returns
    -------
    PcaStudy
    """
    meshes = [float(m) for m in meshes]
    if len(meshes) < 2 or any(b >= a for a, b in zip(meshes, meshes[1:])):
        raise ParamError("meshes must be strictly decreasing (at least two)")
    if any(not _is_multiple(a, b) for a, b in zip(meshes, meshes[1:])):
        raise ParamError("meshes must be nested")
    if mu is None:
        if T is None:
            raise ParamError("the self-consistent study needs a horizon T")
        t0, t1 = 0.0, float(T)
    else:
        t0, t1 = mu.start, mu.end if T is None else float(T)
    coarse = _grid(t0, t1, meshes[0])
    sols = []
    for h in meshes:
        cfg = replace(config, h=h, h_contract=None if mu is not None else config.h_contract)
        if mu is None:
            curve = solve_mean_field(model, rho0, t1, cfg, t0=t0)[0]
        else:
            curve = solve_linearized(model, _resample_curve(mu, _grid(t0, t1, h)), rho0, cfg)
        sols.append(_resample_curve(curve, coarse))
    methods = set()

    def sup_cost(a, b):
        vals = []
        for k in range(len(coarse)):
            c, m = w2_cost(a.cloud(k), b.cloud(k))
            methods.add(m)
            vals.append(c)
        return float(max(vals))

    to_finest = [sup_cost(s, sols[-1]) for s in sols]
    successive = [sup_cost(a, b) for a, b in zip(sols[:-1], sols[1:])]
    return PcaStudy(meshes, coarse, to_finest, successive, methods)


@dataclass
class StabilityReport:
    """Both sides of the linearized stability estimate at partition times."""

    times: np.ndarray
    lhs: np.ndarray
    lhs_stderr: np.ndarray
    rhs: np.ndarray
    alpha: float
    beta: float

    @property
    def margin(self):
        return self.rhs + 3.0 * self.lhs_stderr - self.lhs

    @property
    def passed(self):
        return bool(np.all(self.margin >= -1e-12 * np.maximum(1.0, self.rhs)))


def stability_check(curves, rho0, sigma0, alpha, beta, config, model, replicates=8):
    """Check C(rho_t, sigma_t) <= C(rho0, sigma0) e^{beta t} + alpha zeta_beta(t) sup C(mu, nu).

    ``rho_t`` and ``sigma_t`` solve the linearized problems along the two
    curves of ``curves = (mu_curve, nu_curve)``, which must share their
    partition.  Both problems use the same noise, and ``sigma0`` is first
    reordered along an optimal assignment to ``rho0`` so that the coupling
    of the particle systems starts optimal.  The left side is the exact
    transport cost between the clouds, averaged over ``replicates``
    independent noise realizations.

    Returns
    -------
    StabilityReport
    """
    mu_curve, nu_curve = curves
    if mu_curve.times.shape != nu_curve.times.shape or \
            np.max(np.abs(mu_curve.times - nu_curve.times)) > TIME_TOL:
        raise ParamError("the two curves must share their partition")
    rho0 = rho0 if isinstance(rho0, PointCloud) else PointCloud(rho0)
    sigma0 = sigma0 if isinstance(sigma0, PointCloud) else PointCloud(sigma0)
    c0, plan = exact_w2_assignment(rho0, sigma0)
    sigma0 = PointCloud(sigma0.points[plan.perm])
    times = mu_curve.times
    drive = np.array([w2_cost(mu_curve.cloud(k), nu_curve.cloud(k))[0]
                      for k in range(len(times))])
    running = np.maximum.accumulate(drive)
    rel = times - times[0]
    rhs = c0 * np.exp(beta * rel) + alpha * zeta(beta, rel) * running
    lhs = np.empty((replicates, len(times)))
    for r in range(replicates):
        a = solve_linearized(model, mu_curve, rho0, config, job=r)
        b = solve_linearized(model, nu_curve, sigma0, config, job=r)
        lhs[r] = [w2_cost(a.cloud(k), b.cloud(k))[0] for k in range(len(times))]
    se = lhs.std(axis=0, ddof=1) / np.sqrt(replicates) if replicates > 1 else np.zeros(len(times))
    return StabilityReport(times, lhs.mean(axis=0), se, rhs, float(alpha), float(beta))
