"""Euler-Maruyama simulation of interacting and mean-field particle systems.

Particle ``i`` of the interacting system follows

    dX^i = b(X^i, mu_i) dt + sigma(X^i, mu_i) dB^i + eta(X^i, mu_i) d(Z^i - m1 t)

where ``mu_i`` is the empirical measure of the other N - 1 particles, ``B^i``
are independent Brownian motions and ``Z^i`` independent compound Poisson
processes with Levy measure ``Omega`` and first moment ``m1``.  Coefficients
are frozen at the start of each step; the jumps within a step are simulated
exactly and applied at its end.

Noise for (job, particle, step) comes from a counter-based stream, so a
particle's driver is the same no matter how runs are batched.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import rng
from .curve import TIME_TOL
from .errors import DimError, DivergenceError, ParamError, SizeError
from .ot_core import PointCloud


@dataclass(frozen=True)
class SimConfig:
    """Run parameters of an N-particle simulation.

    Attributes
    ----------
    N : int
        Number of particles (at least 2).
    d : int
    T : float
        Horizon; must be an integer multiple of ``dt``.
    dt : float
    seed : int
    checkpoints : tuple of float, optional
        Report times, snapped to the step grid; defaults to ``(0, T)``.
    jump_scheme : bool
        True simulates the compound Poisson jumps of a step exactly; False
        allows at most one jump per particle and step.
    """

    N: int
    d: int
    T: float
    dt: float
    seed: int = 0
    checkpoints: Optional[tuple] = None
    jump_scheme: bool = True

    def __post_init__(self):
        if self.N < 2:
            raise SizeError("the interacting system needs N >= 2")
        if self.d < 1:
            raise DimError("dimension must be positive")
        if not (self.T >= 0) or not np.isfinite(self.T):
            raise ParamError("T must be finite and nonnegative")
        if self.T > 0 and not (0 < self.dt <= self.T):
            raise ParamError("need 0 < dt <= T")
        if self.T > 0 and abs(self.T / self.dt - round(self.T / self.dt)) > 1e-6:
            raise ParamError("T must be an integer multiple of dt")
        ck = (0.0, float(self.T)) if self.checkpoints is None else tuple(
            float(t) for t in self.checkpoints)
        for t in ck:
            if t < -TIME_TOL or t > self.T * (1 + TIME_TOL) + TIME_TOL:
                raise ParamError(f"checkpoint {t} outside [0, T]")
        object.__setattr__(self, "checkpoints", ck)

    @property
    def n_steps(self):
        return int(round(self.T / self.dt)) if self.T > 0 else 0

    def checkpoint_steps(self):
        """Sorted distinct step indices at which states are reported."""
        if self.n_steps == 0:
            return [0]
        return sorted({int(round(t / self.dt)) for t in self.checkpoints})


@dataclass(frozen=True, eq=False)
class ParticleState:
    """Positions of the system at time ``t`` and optionally of its partner."""

    t: float
    positions: np.ndarray
    coupled_positions: Optional[np.ndarray] = None

    def __post_init__(self):
        x = np.asarray(self.positions, dtype=np.float64)
        if not np.all(np.isfinite(x)):
            raise ValueError("positions must be finite")
        object.__setattr__(self, "positions", x)
        if self.coupled_positions is not None:
            y = np.asarray(self.coupled_positions, dtype=np.float64)
            if y.shape != x.shape:
                raise SizeError("coupled positions must match positions in shape")
            object.__setattr__(self, "coupled_positions", y)

    @property
    def N(self):
        return self.positions.shape[-2]


@dataclass(frozen=True, eq=False)
class DriverNoise:
    """Driving noise of one step.

    Attributes
    ----------
    dB : ndarray, shape (..., N, d)
        Brownian increments with covariance dt I.
    jump_sum : ndarray, shape (..., N, d) or None
        Sum of the base jump vectors that occurred during the step.
    jump_count : ndarray, shape (..., N) or None
        Number of jumps during the step.
    """

    dB: np.ndarray
    jump_sum: Optional[np.ndarray] = None
    jump_count: Optional[np.ndarray] = None


class NoiseSource:
    """Per-step driver noise for a set of (job, particle) streams.

    Parameters
    ----------
    seed : int
    dt : float
    d : int
    ids : array_like of int, shape (N,)
        Particle stream indices.
    jobs : int or array_like of int, shape (B,)
        Job indices; an array adds a leading batch axis.
    base_jump : DiscreteLevyMeasure, optional
    exact_jumps : bool
    cache : bool
        Keep generated steps in memory (used when the same steps are
        replayed, as in Picard iteration).
    """

    def __init__(self, seed, dt, d, ids, jobs=0, base_jump=None, exact_jumps=True,
                 cache=False):
        self.seed = int(seed)
        self.dt = float(dt)
        self.d = int(d)
        ids = np.asarray(ids, dtype=np.uint64)
        jobs = np.asarray(jobs, dtype=np.uint64)
        self.jobs_b, self.ids_b = np.broadcast_arrays(jobs[..., None], ids)
        self.base = base_jump if base_jump is not None and base_jump.size > 0 else None
        self.exact = bool(exact_jumps)
        self._cache = {} if cache else None
        if self.base is not None:
            rate = self.base.total_intensity * self.dt
            self._table = (rng.poisson_table(rate) if self.exact
                           else np.array([np.exp(-rate), 1.0]))

    def at(self, step):
        if self._cache is not None and step in self._cache:
            return self._cache[step]
        noise = self._draw(step)
        if self._cache is not None:
            self._cache[step] = noise
        return noise

    def _draw(self, step):
        dB = np.sqrt(self.dt) * rng.normals(self.seed, self.jobs_b, self.ids_b, step,
                                            rng.BROWNIAN, self.d)
        if self.base is None:
            return DriverNoise(dB)
        u = rng.uniforms(self.seed, self.jobs_b, self.ids_b, step, rng.JUMP_COUNT, 1)[..., 0]
        count = rng.poisson_from_uniform(u, self._table)
        jump_sum = np.zeros(dB.shape)
        hit = count > 0
        if np.any(hit):
            cmax = int(count.max())
            ua = rng.uniforms(self.seed, self.jobs_b[hit], self.ids_b[hit], step,
                              rng.JUMP_ATOM, cmax)
            if self.base.size == 1:
                idx = np.zeros(ua.shape, dtype=np.intp)
            else:
                idx = rng.categorical_from_uniform(ua, self.base.intensities)
            z = self.base.atoms[idx]
            z[np.arange(cmax)[None, :] >= count[hit][:, None]] = 0.0
            jump_sum[hit] = z.sum(axis=1)
        return DriverNoise(dB, jump_sum, count)


def advance(X, tau, dt, noise, base_jump=None):
    """One explicit step X + b dt + sigma dB + eta (jumps - m1 dt)."""
    out = X + tau.b * dt + np.einsum("...ij,...j->...i", tau.sigma, noise.dB)
    if tau.eta is not None and base_jump is not None and base_jump.size > 0:
        comp = noise.jump_sum - base_jump.m1 * dt
        out = out + np.einsum("...ij,...j->...i", tau.eta, comp)
    return out


def _check_finite(X, step, t):
    if not np.all(np.isfinite(X)):
        raise DivergenceError(step, t)


def step(state, model, dt, noise, mf_cloud=None, step_index=0):
    """Advance an N-particle state by one explicit step.

    The interacting system uses truncated empirical measures.  When the
    state carries ``coupled_positions`` these advance with the same noise
    but with coefficients evaluated at ``mf_cloud``.
    """
    X = state.positions
    if noise.dB.shape != X.shape:
        raise SizeError("noise slice does not match the state")
    Xn = advance(X, model.truncated_coefficients(X), dt, noise, model.base_jump)
    _check_finite(Xn, step_index, state.t)
    Yn = None
    if state.coupled_positions is not None:
        if mf_cloud is None:
            raise ParamError("advancing the coupled system needs the mean-field cloud")
        Y = state.coupled_positions
        Yn = advance(Y, model.coefficients(Y, mf_cloud), dt, noise, model.base_jump)
        _check_finite(Yn, step_index, state.t)
    return ParticleState(state.t + dt, Xn, Yn)


def truncated_empirical(state, k):
    """Empirical measure of all particles except particle ``k``."""
    X = state.positions if isinstance(state, ParticleState) else np.asarray(state)
    N = X.shape[0]
    if N < 2:
        raise SizeError("truncated empirical measure needs N >= 2")
    if not 0 <= k < N:
        raise SizeError(f"particle index {k} out of range")
    return PointCloud(np.delete(X, k, axis=0))


def _initial_array(config, initial):
    pts = initial.points if isinstance(initial, PointCloud) else np.asarray(initial, float)
    if pts.shape[-2] != config.N:
        raise SizeError(f"initial cloud has {pts.shape[-2]} points, expected N={config.N}")
    if pts.shape[-1] != config.d:
        raise DimError("initial cloud has the wrong dimension")
    return pts


def simulate(config, model, initial, stream_ids=None, job=0):
    """Simulate the interacting N-particle system.

    Parameters
    ----------
    config : SimConfig
    model : MeanFieldModel
    initial : PointCloud
        Initial positions, ``initial.M == config.N``.
    stream_ids : array_like of int, optional
        Noise stream of each particle (default ``0..N-1``).
    job : int
        Job index of the run in the stream derivation.

    Returns
    -------
    list of (float, ParticleState)
        States at the configured checkpoints, in time order.
    """
    X = _initial_array(config, initial).copy()
    ids = np.arange(config.N) if stream_ids is None else np.asarray(stream_ids)
    src = NoiseSource(config.seed, config.dt, config.d, ids, job, model.base_jump,
                      config.jump_scheme)
    ck = config.checkpoint_steps()
    out = []
    if ck[0] == 0:
        out.append((0.0, ParticleState(0.0, X.copy())))
    for k in range(config.n_steps):
        X = advance(X, model.truncated_coefficients(X), config.dt, src.at(k), model.base_jump)
        _check_finite(X, k, k * config.dt)
        if k + 1 in ck:
            out.append(((k + 1) * config.dt, ParticleState((k + 1) * config.dt, X.copy())))
    return out


def synchronous_pair_batch(config, model, mf_curve, X0, jobs, keep_states=False):
    """Batched synchronous coupling of the interacting system and its partner.

    Parameters
    ----------
    X0 : ndarray, shape (B, N, d)
        Common initial data of both systems for each of the B trials.
    jobs : array_like of int, shape (B,)
        Job index of each trial.

    Returns
    -------
    times : list of float
    costs : ndarray, shape (B, len(times))
        Tensorized cost between the two systems at each checkpoint.
    states : list of (X, Y) pairs, only when ``keep_states``.
    """
    X0 = np.asarray(X0, dtype=np.float64)
    if X0.ndim == 2:
        X0 = X0[None]
    _initial_array(config, X0)
    if mf_curve.dim != config.d:
        raise DimError("mean-field curve has the wrong dimension")
    mf_curve.require(0.0, config.T)
    jobs = np.asarray(jobs).reshape(-1)
    if jobs.size != X0.shape[0]:
        raise SizeError("need one job index per trial")
    src = NoiseSource(config.seed, config.dt, config.d, np.arange(config.N), jobs,
                      model.base_jump, config.jump_scheme)
    X, Y = X0.copy(), X0.copy()
    ck = config.checkpoint_steps()
    times, costs, states = [], [], []

    def record(t):
        times.append(t)
        diff = X - Y
        costs.append(0.5 * np.mean(np.sum(diff * diff, axis=-1), axis=-1))
        if keep_states:
            states.append((X.copy(), Y.copy()))

    if ck[0] == 0:
        record(0.0)
    for k in range(config.n_steps):
        t = k * config.dt
        noise = src.at(k)
        cloud = mf_curve.points[mf_curve.index_at(t)]
        Xn = advance(X, model.truncated_coefficients(X), config.dt, noise, model.base_jump)
        Yn = advance(Y, model.coefficients(Y, cloud), config.dt, noise, model.base_jump)
        _check_finite(Xn, k, t)
        _check_finite(Yn, k, t)
        X, Y = Xn, Yn
        if k + 1 in ck:
            record((k + 1) * config.dt)
    costs = np.stack(costs, axis=1)
    return (times, costs, states) if keep_states else (times, costs)


def simulate_synchronous_pair(config, model, mf_curve, initial=None, job=0):
    """Interacting system and mean-field partner driven by identical noise.

    The partner particle i uses the same Brownian and jump drivers as
    particle i but its coefficients are evaluated at the mean-field cloud
    ``mf_curve(t)`` (constant from the left between partition times).
    Both systems start from ``initial``; when omitted, N points are drawn
    from the cloud at time 0.

    Returns
    -------
    list of (float, ParticleState, float)
        Time, both systems, and their tensorized cost at each checkpoint.
    """
    if initial is None:
        initial = sample_from_cloud(mf_curve.points[mf_curve.index_at(0.0)], config.N,
                                    config.seed, job)
    X0 = _initial_array(config, initial)
    times, costs, states = synchronous_pair_batch(config, model, mf_curve, X0[None], [job],
                                                  keep_states=True)
    return [(t, ParticleState(t, x[0], y[0]), float(c))
            for t, (x, y), c in zip(times, states, costs[0])]


def sample_from_cloud(points, n, seed, jobs, tag=rng.INITIAL):
    """Draw ``n`` i.i.d. atoms of a uniform cloud per job (with replacement)."""
    pts = points.points if isinstance(points, PointCloud) else np.asarray(points)
    jobs = np.asarray(jobs)
    u = rng.uniforms(seed, jobs[..., None], np.arange(n), 0, tag, 1)[..., 0]
    idx = np.minimum((u * pts.shape[0]).astype(np.intp), pts.shape[0] - 1)
    return pts[idx]


def simulate_frozen(model, mu, initial, T, dt, seed, job=rng.MEAN_FIELD_JOB):
    """Independent particles under the generator frozen at the measure ``mu``.

    Returns the final positions after ``round(T / dt)`` steps.
    """
    X = np.array(initial.points if isinstance(initial, PointCloud) else initial, float)
    src = NoiseSource(seed, dt, model.dim, np.arange(X.shape[0]), job, model.base_jump)
    mu_pts = mu.points if isinstance(mu, PointCloud) else np.asarray(mu)
    return advance_frozen(X, model, mu_pts, 0, int(round(T / dt)), dt, src)


def advance_frozen(X, model, mu_points, step0, n_steps, dt, src):
    """Advance independent particles ``n_steps`` under A(mu), steps from ``step0``."""
    for k in range(step0, step0 + n_steps):
        X = advance(X, model.coefficients(X, mu_points), dt, src.at(k), model.base_jump)
        _check_finite(X, k, k * dt)
    return X
