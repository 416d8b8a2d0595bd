"""Numerical checks of propagation-of-chaos estimates.

The quantities involved:

* ``aleph_N(rho; Xi)``: expected discrepancy ``Xi(y_1, mu_{N-1}, rho)`` between
  the empirical measure of N - 1 samples of ``rho`` and ``rho`` itself;
* the Fournier-Guillin rate eps_{d,q}(N) bounding the expected transport
  cost between an N-sample empirical measure and its law;
* the right Dini derivative omega of the transport cost between two Levy
  flows, against its closed forms;
* the exponential envelope of the cost between the interacting system and
  its mean-field limit, and the fitted convergence rate in N.

Interacting systems are compared with independent mean-field particles
through the synchronous coupling; the resulting tensorized cost is an upper
bound of the transport cost between the two N-particle laws.
"""

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import stats

from . import rng
from .errors import ModelKindError, ParamError
from .levy_model import sigma_squared
from .mf_solver import SolverConfig, solve_mean_field, zeta
from .ot_core import (MatrixError, PointCloud, as_spd, bures_wasserstein,
                      exact_w2_1d, gaussian_optimal_map, levy_cost_bound, sqrtm_psd,
                      w2_cost)
from .parallel import map_jobs
from .simulator import SimConfig, sample_from_cloud, synchronous_pair_batch


class Estimate(tuple):
    """``(mean, stderr)`` pair carrying extra attributes."""

    def __new__(cls, mean, stderr, **info):
        obj = super().__new__(cls, (float(mean), float(stderr)))
        obj.__dict__.update(info)
        return obj

    @property
    def mean(self):
        return self[0]

    @property
    def stderr(self):
        return self[1]


# ---------------------------------------------------------------------------
# aleph_N
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class W2Squared:
    """Xi(x, mu, nu) = C(mu, nu), the transport cost."""

    sinkhorn_epsilon: Optional[float] = None
    name = "w2_squared"


@dataclass(frozen=True)
class FirstMomentSq:
    """Xi(x, mu, nu) = |mean(mu) - mean(nu)|^2."""

    name = "first_moment_sq"


@dataclass(frozen=True, eq=False)
class SigmaSq:
    """Xi(x, mu, nu) = Sigma(x, mu, nu)^2 of an average-form model."""

    model: object
    name = "sigma_sq"

    def __post_init__(self):
        if self.model.kind != "average_form":
            raise ModelKindError("SigmaSq needs an average-form model")


def xi_from_name(name, model=None):
    if name in ("sigma", "sigma_sq"):
        return SigmaSq(model)
    if name in ("w2", "w2_squared"):
        return W2Squared()
    if name in ("first_moment", "first_moment_sq"):
        return FirstMomentSq()
    raise ParamError(f"unknown Xi kind {name!r}")


def estimate_aleph(rho, xi, N, trials, seed, job=rng.REFERENCE_JOB):
    """Monte Carlo estimate of aleph_N(rho; Xi).

    Each trial draws N i.i.d. atoms y_1..y_N of ``rho`` and evaluates
    Xi(y_1, empirical measure of y_2..y_N, rho).  Trial ``t`` reads the
    resampling stream at step index ``t``.

    Parameters
    ----------
    rho : PointCloud
        Reference measure (taken as the truth).
    xi : W2Squared, FirstMomentSq or SigmaSq
    N : int
        At least 2.
    trials : int
        At least 2.
    seed : int
    job : int
        Job index of the resampling stream.

    Returns
    -------
    Estimate
        ``(mean, stderr)``; the attribute ``methods`` lists the transport
        routes used for W2Squared (``"sinkhorn"`` flags an approximation).
    """
    if N < 2:
        raise ParamError("aleph_N needs N >= 2")
    if trials < 2:
        raise ParamError("need at least two trials")
    rho = rho if isinstance(rho, PointCloud) else PointCloud(rho)
    pts = rho.points
    samples = np.empty((trials, N, rho.dim))
    chunk = max(1, 2_000_000 // N)
    for s in range(0, trials, chunk):
        jobs = np.arange(s, min(trials, s + chunk), dtype=np.uint64)
        u = rng.uniforms(seed, job, np.arange(N), jobs[:, None], rng.RESAMPLE, 1)[..., 0]
        idx = np.minimum((u * rho.M).astype(np.intp), rho.M - 1)
        samples[s:s + len(jobs)] = pts[idx]
    y1, rest = samples[:, :1, :], samples[:, 1:, :]
    methods = set()
    if isinstance(xi, FirstMomentSq):
        vals = np.sum((rest.mean(axis=1) - pts.mean(axis=0)) ** 2, axis=-1)
    elif isinstance(xi, SigmaSq):
        vals = np.empty(trials)
        for s in range(0, trials, chunk):
            sl = slice(s, s + chunk)
            vals[sl] = sigma_squared(xi.model, y1[sl], rest[sl], pts)[:, 0]
    elif isinstance(xi, W2Squared):
        vals = np.empty(trials)
        ref = rho.to_weighted()
        for t in range(trials):
            if rho.dim == 1:
                vals[t] = exact_w2_1d(PointCloud(rest[t]).to_weighted(), ref)
                methods.add("1d")
            else:
                vals[t], m = w2_cost(PointCloud(rest[t]), rho, xi.sinkhorn_epsilon)
                methods.add(m)
        if "sinkhorn" in methods:
            warnings.warn("aleph_N with W2Squared fell back to Sinkhorn", RuntimeWarning)
    else:
        raise ParamError(f"unsupported Xi kind {xi!r}")
    return Estimate(vals.mean(), vals.std(ddof=1) / math.sqrt(trials), methods=methods,
                    values=vals)


# ---------------------------------------------------------------------------
# Fournier-Guillin
# ---------------------------------------------------------------------------

def fournier_guillin_rate(d, q, N, Mq, L):
    """Rate eps_{d,q}(N) for the expected cost between an N-sample empirical measure and its law.

    eps = L Mq^{2/q} (r_d(N) + N^{-(q-2)/q}) with r_d(N) = N^{-1/2} for d < 4,
    N^{-1/2} log(1 + N) for d = 4 and N^{-2/d} for d > 4.

    Raises
    ------
    ParamError
        For q <= 2 and for the excluded pairs q = 4 (d <= 4) and
        q = d / (d - 2) (d > 4).
    """
    d, q = int(d), float(q)
    if d < 1:
        raise ParamError("dimension must be positive")
    if not q > 2:
        raise ParamError("the moment order q must exceed 2")
    if d <= 4 and q == 4:
        raise ParamError(f"excluded case d={d}, q=4")
    if d > 4 and math.isclose(q, d / (d - 2)):
        raise ParamError(f"excluded case d={d}, q=d/(d-2)")
    if Mq < 0 or L < 0:
        raise ParamError("Mq and L must be nonnegative")
    N = np.asarray(N, dtype=np.float64)
    if np.any(N < 1):
        raise ParamError("N must be at least 1")
    if d < 4:
        lead = N ** -0.5
    elif d == 4:
        lead = N ** -0.5 * np.log1p(N)
    else:
        lead = N ** (-2.0 / d)
    out = L * Mq ** (2.0 / q) * (lead + N ** (-(q - 2.0) / q))
    return float(out) if out.ndim == 0 else out


@dataclass
class FGReport:
    N: list
    aleph: list
    aleph_stderr: list
    bound: list
    L: float
    ratios: list
    passed: list

    @property
    def all_passed(self):
        return all(self.passed)

    @property
    def monotone(self):
        """Calibrated ratio never grows by more than 10% when N doubles."""
        return all(b <= a * 1.1 + 1e-15 for a, b in zip(self.ratios, self.ratios[1:]))


def fg_bound_check(rho_family, d, q, N_list, trials, L_calibration=None, seed=0,
                   reference_size=20000):
    """Compare MC aleph_N(rho; W2Squared) with eps_{d,q}(N - 1).

    Parameters
    ----------
    rho_family : dict
        ``{"distribution": name, ...}`` as accepted by
        :func:`mfchaos.io.initial_cloud`; a ``uniform`` family uses the
        exact quantile grid as reference cloud.
    d, q : int, float
    N_list : sequence of int
    trials : int
    L_calibration : float, optional
        Fixed L; by default L is chosen so that the bound is attained at the
        smallest N.
    seed : int
    reference_size : int

    Returns
    -------
    FGReport
    """
    N_list = sorted(int(n) for n in N_list)
    ref = _reference_cloud(rho_family, d, reference_size, seed)
    Mq = float(np.mean(np.sum(ref.points ** 2, axis=1) ** (q / 2.0)))
    alephs = [estimate_aleph(ref, W2Squared(), n, trials, seed, job=i)
              for i, n in enumerate(N_list)]
    base = [fournier_guillin_rate(d, q, n - 1, Mq, 1.0) if Mq > 0 else 0.0 for n in N_list]
    if L_calibration is None:
        L = alephs[0].mean / base[0] if base[0] > 0 else 0.0
    else:
        L = float(L_calibration)
    bound = [L * b for b in base]
    ratios = [a.mean / b if b > 0 else 0.0 for a, b in zip(alephs, bound)]
    passed = [a.mean <= b * (1 + 1e-12) + 1e-15 for a, b in zip(alephs, bound)]
    return FGReport(N_list, [a.mean for a in alephs], [a.stderr for a in alephs], bound, L,
                    ratios, passed)


def _reference_cloud(family, d, size, seed):
    from .io import initial_cloud

    family = dict(family)
    if family.get("distribution") == "uniform" and d == 1:
        lo, hi = float(family.get("low", 0.0)), float(family.get("high", 1.0))
        return PointCloud(lo + (hi - lo) * (np.arange(size) + 0.5) / size)
    if family.get("distribution") == "point":
        size = 1
    return initial_cloud(family, size, d, seed)


# ---------------------------------------------------------------------------
# Dini derivative probes for constant Levy generators
# ---------------------------------------------------------------------------

def _diffusion_factors(a, b):
    """Factors S_a, S_b with S S^T = a, b, aligned along the optimal Gaussian coupling."""
    ra, rb = sqrtm_psd(as_spd(a)), sqrtm_psd(as_spd(b))
    try:
        return ra, gaussian_optimal_map(a, b) @ ra
    except MatrixError:
        pass
    try:
        return gaussian_optimal_map(b, a) @ rb, rb
    except MatrixError:
        return ra, rb


def _flow_samples(gen, x, t, G, ujump, S):
    X = x + gen.b * t + math.sqrt(t) * G @ S.T
    if gen.has_jumps and t > 0:
        table = rng.poisson_table(gen.base.total_intensity * t)
        count = rng.poisson_from_uniform(ujump[:, 0], table)
        zsum = np.zeros_like(X)
        hit = count > 0
        if np.any(hit):
            cmax = int(count.max())
            if ujump.shape[1] - 1 < cmax:
                raise RuntimeError("too many jumps for the pre-drawn uniforms")
            ua = ujump[hit, 1:cmax + 1]
            idx = rng.categorical_from_uniform(ua, gen.base.intensities)
            z = gen.base.atoms[idx]
            z[np.arange(cmax)[None, :] >= count[hit][:, None]] = 0.0
            zsum[hit] = z.sum(axis=1)
        X = X + (zsum - gen.base.m1 * t) @ gen.eta.T
    return X


def coupled_flow_costs(genA, genB, x, y, times, mc_size, seed, replicates,
                       estimator="coupled"):
    """Transport cost estimates between delta_x e^{tA} and delta_y e^{tB}.

    Both flows are sampled exactly (constant coefficients) under a
    synchronous coupling: shared antithetic Gaussian draws with diffusion
    factors aligned along the optimal Gaussian map, and shared jump
    processes when the jump parts have the same base measure.

    Parameters
    ----------
    estimator : {"coupled", "assignment"}
        ``coupled`` averages |X - Y|^2 / 2 over the coupled pairs, an
        unbiased estimate of the coupling cost (exact for drift and
        diffusion); ``assignment`` solves the transport problem between the
        two sample clouds.

    Returns
    -------
    ndarray, shape (replicates, len(times))
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    d = genA.dim
    if genB.dim != d or x.size != d or y.size != d:
        raise ParamError("generators and points must share one dimension")
    n = int(mc_size)
    half = (n + 1) // 2
    SA, SB = _diffusion_factors(genA.a, genB.a)
    shared = (genA.has_jumps and genB.has_jumps and genA.base.same_base(genB.base))
    tmax = float(np.max(times))
    out = np.empty((replicates, len(times)))
    for r in range(replicates):
        g = rng.normals(seed, r, np.arange(half), 0, rng.PROBE, d)
        G = np.concatenate([g, -g])[:n]
        uA = uB = None
        if genA.has_jumps or genB.has_jumps:
            lam = max(genA.base.total_intensity if genA.has_jumps else 0.0,
                      genB.base.total_intensity if genB.has_jumps else 0.0)
            kmax = len(rng.poisson_table(lam * tmax)) + 1
            uA = rng.uniforms(seed, r, np.arange(n), 0, rng.PROBE_JUMP, kmax)
            uB = uA if shared else rng.uniforms(seed, r, np.arange(n), 1, rng.PROBE_JUMP, kmax)
        for k, t in enumerate(times):
            XA = _flow_samples(genA, x, float(t), G, uA, SA)
            XB = _flow_samples(genB, y, float(t), G, uB, SB)
            if estimator == "coupled":
                out[r, k] = 0.5 * np.mean(np.sum((XA - XB) ** 2, axis=1))
            elif estimator == "assignment":
                out[r, k] = w2_cost(PointCloud(XA), PointCloud(XB))[0]
            else:
                raise ParamError(f"unknown estimator {estimator!r}")
    return out


def omega_closed_form(genA, genB, x, y):
    """Closed-form value or bound of the Dini derivative omega.

    Returns ``(value, exact)``: drift part (b - b~).(x - y) plus W_S(a, a~)^2,
    plus the jump coupling bound.  ``exact`` is False when jumps are present.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    value = float((genA.b - genB.b) @ (x - y)) + bures_wasserstein(genA.a, genB.a) ** 2
    jumps = genA.has_jumps or genB.has_jumps
    if jumps:
        value += levy_cost_bound(genA, genB)
    return value, not jumps


@dataclass
class OmegaProbe:
    """Closed form of omega against finite-difference estimates.

    Attributes
    ----------
    closed_form : float
    exact : bool
        Whether ``closed_form`` is the exact value (False: upper bound).
    wg_bound : float
        W_G^2 + |x - y|^2 / 2.
    finite_diff : list of (dt, estimate, stderr)
    extrapolated, extrapolated_stderr : float
        Intercept of a linear fit of the difference quotients in dt.
    """

    closed_form: float
    exact: bool
    wg_bound: float
    finite_diff: list
    extrapolated: float
    extrapolated_stderr: float

    def __iter__(self):
        yield self.closed_form
        yield self.finite_diff

    def consistent(self, n_se=3.0, dt_slack=0.0):
        """Extrapolation within n_se standard errors plus ``dt_slack`` of the closed form.

        For jump generators the closed form is a bound, so only the
        one-sided inequality is checked.
        """
        tol = n_se * self.extrapolated_stderr + dt_slack + 1e-12
        if self.exact:
            return abs(self.extrapolated - self.closed_form) <= tol
        return self.extrapolated <= self.closed_form + tol

    def within_wg_bound(self, n_se=3.0):
        return self.extrapolated <= self.wg_bound + n_se * self.extrapolated_stderr + 1e-12


def omega_probe(genA, genB, x, y, dt_grid, mc_size, seed, replicates=8,
                estimator="coupled"):
    """Finite-difference probe of the Dini derivative at t = 0.

    Difference quotients (C(t) - C(0)) / t are estimated on ``dt_grid`` for
    each replicate, a line in dt is fitted to them and its intercept is the
    extrapolated derivative.  The standard error is taken across replicates.

    Returns
    -------
    OmegaProbe
    """
    from .ot_core import generator_metric_wg

    dts = np.asarray(sorted(float(t) for t in dt_grid))
    if dts.size < 1 or np.any(dts <= 0):
        raise ParamError("dt_grid must hold positive steps")
    if replicates < 2:
        raise ParamError("need at least two replicates")
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    c0 = 0.5 * float(np.sum((x - y) ** 2))
    costs = coupled_flow_costs(genA, genB, x, y, dts, mc_size, seed, replicates, estimator)
    quot = (costs - c0) / dts[None, :]
    if dts.size >= 2:
        slopes_icpt = np.polynomial.polynomial.polyfit(dts, quot.T, 1)
        icpt = slopes_icpt[0]
    else:
        icpt = quot[:, 0]
    se_fd = quot.std(axis=0, ddof=1) / math.sqrt(replicates)
    closed, exact = omega_closed_form(genA, genB, x, y)
    wg = generator_metric_wg(genA, genB) ** 2 + c0
    fd = [(float(t), float(m), float(s)) for t, m, s in zip(dts, quot.mean(axis=0), se_fd)]
    return OmegaProbe(closed, exact, wg, fd, float(icpt.mean()),
                      float(icpt.std(ddof=1) / math.sqrt(replicates)))


@dataclass
class ExpStabilityReport:
    times: np.ndarray
    lhs: np.ndarray
    lhs_stderr: np.ndarray
    rhs: np.ndarray
    alpha: float
    beta: float

    @property
    def passed(self):
        return bool(np.all(self.lhs <= self.rhs + 3.0 * self.lhs_stderr + 1e-12))

    def slope(self):
        """Least-squares slope of the left side in t."""
        return float(np.polyfit(self.times, self.lhs, 1)[0])


def exp_stability_check(genA, genB, x, y, alpha=None, beta=None, t_grid=(0.1, 0.2, 0.5, 1.0),
                        mc_size=2000, seed=0, replicates=8):
    """Check C(delta_x e^{tA}, delta_y e^{tB}) <= e^{beta t} |x-y|^2/2 + alpha zeta_beta(t).

    Defaults: alpha = W_G(A, B)^2 and beta = 1.  The left side is the
    synchronous coupling estimate of :func:`coupled_flow_costs`.
    """
    from .ot_core import generator_metric_wg

    if alpha is None:
        alpha = generator_metric_wg(genA, genB) ** 2
    if beta is None:
        beta = 1.0
    times = np.asarray(t_grid, dtype=np.float64)
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    costs = coupled_flow_costs(genA, genB, x, y, times, mc_size, seed, replicates)
    c0 = 0.5 * float(np.sum((x - y) ** 2))
    rhs = np.exp(beta * times) * c0 + alpha * zeta(beta, times)
    return ExpStabilityReport(times, costs.mean(axis=0),
                              costs.std(axis=0, ddof=1) / math.sqrt(replicates), rhs,
                              float(alpha), float(beta))


# ---------------------------------------------------------------------------
# propagation-of-chaos rate experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChaosConfig:
    """Knobs of :func:`poc_rate_experiment`.

    Attributes
    ----------
    dt : float
        Time step of all simulations.
    M : int
        Size of the mean-field cloud.
    h : float, optional
        Mesh of the mean-field solver (default: about T / 32 on the dt grid).
    seed : int
    n_checkpoints : int
        Number of equally spaced report times after t = 0.
    aleph_trials : int
    xi : str
        ``"sigma"`` (average-form models), ``"w2"`` or ``"first_moment"``.
    slope_band : (float, float)
    picard_tol : float
    threads : int, optional
    trial_chunk : int
        Bound on trials x N per simulation batch.
    """

    dt: float = 1e-3
    M: int = 4000
    h: Optional[float] = None
    seed: int = 0
    n_checkpoints: int = 10
    aleph_trials: int = 4000
    xi: str = "sigma"
    slope_band: tuple = (-1.3, -0.7)
    picard_tol: float = 1e-8
    threads: Optional[int] = None
    trial_chunk: int = 20000


@dataclass
class ChaosReport:
    """Results of a propagation-of-chaos experiment.

    ``distance[i][k]`` is the trial mean of the tensorized cost between the
    interacting system with ``N[i]`` particles and its synchronous
    mean-field partner at ``times[k]``; it bounds the transport cost
    between the two N-particle laws from above.
    """

    model: str
    N: list
    trials: int
    times: list
    distance: list
    distance_stderr: list
    aleph: list
    aleph_stderr: list
    sup_distance: list
    sup_distance_stderr: list
    sup_aleph: list
    alpha: float
    beta: float
    B: float
    K: float
    zeta_K_T: float
    C: float
    bound: list
    envelope_ok: list
    eps_dq: Optional[list]
    slope: Optional[float]
    slope_ci: Optional[tuple]
    slope_band: tuple
    slope_checked: bool
    trivial: bool
    xi: str
    notes: list = field(default_factory=list)

    @property
    def envelope_holds(self):
        return all(self.envelope_ok)

    @property
    def slope_in_band(self):
        if not self.slope_checked:
            return True
        lo, hi = self.slope_band
        return self.slope is not None and lo <= self.slope <= hi

    @property
    def passed(self):
        return self.envelope_holds and self.slope_in_band

    def to_dict(self):
        out = asdict(self)
        out.update(envelope_holds=self.envelope_holds, slope_in_band=self.slope_in_band,
                   passed=self.passed)
        return _jsonable(out)

    def csv_rows(self):
        """Rows (N, t, distance, stderr, aleph, aleph_stderr, bound, verdict)."""
        rows = []
        for i, n in enumerate(self.N):
            verdict = "pass" if self.envelope_ok[i] else "fail"
            for k, t in enumerate(self.times):
                rows.append((n, t, self.distance[i][k], self.distance_stderr[i][k],
                             self.aleph[i][k], self.aleph_stderr[i][k], self.bound[i], verdict))
        return rows


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def envelope_constants(lip, xi):
    """(alpha, beta, B, K) of the exponential envelope for the chosen Xi."""
    if lip is None or lip.alpha is None or lip.beta is None:
        raise ParamError("the experiment needs declared alpha and beta")
    if lip.B is not None:
        B = lip.B
    elif isinstance(xi, SigmaSq):
        if lip.M is None or lip.M_prime is None:
            raise ParamError("SigmaSq envelope needs declared M and M_prime (or B)")
        B = 3.0 * max(1.0, 2.0 * lip.M_prime ** 2, lip.M ** 2)
    else:
        B = 2.0
    return lip.alpha, lip.beta, B, lip.beta + 2.0 * lip.alpha * B


def fit_loglog(N, values, level=0.95):
    """OLS slope of log(values) against log(N) with a t-based confidence interval."""
    x = np.log(np.asarray(N, dtype=np.float64))
    yv = np.asarray(values, dtype=np.float64)
    if np.any(yv <= 0) or x.size < 3:
        return None, None
    y = np.log(yv)
    res = stats.linregress(x, y)
    half = stats.t.ppf(0.5 + level / 2, x.size - 2) * res.stderr
    return float(res.slope), (float(res.slope - half), float(res.slope + half))


def default_mesh(T, dt, cells=32):
    """Mesh on the dt grid dividing [0, T] into about ``cells`` cells."""
    n = int(round(T / dt))
    best = min((c for c in range(1, n + 1) if n % c == 0), key=lambda c: (abs(c - cells), -c))
    return (n // best) * dt


def _pair_job(n_index, trial):
    return (n_index << 20) | trial


def poc_rate_experiment(model, rho0, T, N_list, trials, config=ChaosConfig()):
    """Propagation-of-chaos experiment.

    Steps: solve the mean-field curve from ``rho0``; for each N run
    ``trials`` synchronous couplings started from common i.i.d. draws of
    ``rho0``; record the mean tensorized cost at checkpoints; estimate
    aleph_N of the mean-field cloud at the same checkpoints; calibrate the
    envelope constant C at the smallest N (from the sup distance plus three
    standard errors) and test
    ``distance(N) <= C zeta_K(T) sup_t aleph_N`` (within three standard
    errors) at the larger N; fit the log-log slope of the sup-in-time
    distance against N.

    Parameters
    ----------
    model : MeanFieldModel
        With declared Lipschitz constants.
    rho0 : PointCloud
        Initial law, ``config.M`` points.
    T : float
    N_list : sequence of int
        At least three values with max / min >= 8.
    trials : int
    config : ChaosConfig

    Returns
    -------
    ChaosReport
    """
    N_list = sorted(int(n) for n in N_list)
    if len(N_list) < 3 or N_list[0] < 2 or N_list[-1] < 8 * N_list[0]:
        raise ParamError("N_list needs at least three values spanning a factor of 8")
    if trials < 2:
        raise ParamError("need at least two trials per N")
    xi = xi_from_name(config.xi, model)
    alpha, beta, B, K = envelope_constants(model.lipschitz, xi)
    rho0 = rho0 if isinstance(rho0, PointCloud) else PointCloud(rho0)
    dt = config.dt
    h = config.h if config.h is not None else default_mesh(T, dt)
    scfg = SolverConfig(M=rho0.M, h=h, dt=dt, picard_tol=config.picard_tol, seed=config.seed)
    notes = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        curve = solve_mean_field(model, rho0, T, scfg)[0]
    notes.extend(str(w.message) for w in caught)
    nck = max(1, int(config.n_checkpoints))
    n_steps = int(round(T / dt))
    ck_steps = sorted({int(round(i * n_steps / nck)) for i in range(nck + 1)})
    times = [s * dt for s in ck_steps]

    def run_n(item):
        i, n = item
        sim = SimConfig(N=n, d=model.dim, T=T, dt=dt, seed=config.seed, checkpoints=times)
        chunk = max(1, config.trial_chunk // n)
        parts = []
        for s in range(0, trials, chunk):
            jobs = np.array([_pair_job(i, t) for t in range(s, min(trials, s + chunk))],
                            dtype=np.uint64)
            X0 = sample_from_cloud(curve.points[0], n, config.seed, jobs)
            parts.append(synchronous_pair_batch(sim, model, curve, X0, jobs)[1])
        costs = np.concatenate(parts, axis=0)
        al = [estimate_aleph(curve.at(t), xi, n, config.aleph_trials, config.seed,
                             job=_pair_job(i, k)) for k, t in enumerate(times)]
        return costs, al

    results = map_jobs(run_n, list(enumerate(N_list)), config.threads)
    dist, dist_se, aleph, aleph_se = [], [], [], []
    sup_d, sup_d_se, sup_a = [], [], []
    for costs, al in results:
        m = costs.mean(axis=0)
        se = costs.std(axis=0, ddof=1) / math.sqrt(trials)
        dist.append(m.tolist())
        dist_se.append(se.tolist())
        aleph.append([a.mean for a in al])
        aleph_se.append([a.stderr for a in al])
        k = int(np.argmax(m))
        sup_d.append(float(m[k]))
        sup_d_se.append(float(se[k]))
        sup_a.append(float(max(a.mean for a in al)))
    zK = zeta(K, T)
    trivial = (not model.interacting) or max(sup_d) == 0.0
    if trivial or sup_a[0] == 0.0:
        C = 0.0
    else:
        # upper confidence value at the calibration point
        C = (sup_d[0] + 3.0 * sup_d_se[0]) / (zK * sup_a[0])
    bound = [C * zK * a for a in sup_a]
    ok = [True] + [sup_d[i] <= bound[i] + 3.0 * sup_d_se[i] + 1e-15
                   for i in range(1, len(N_list))]
    slope, ci = (None, None) if trivial else fit_loglog(N_list, sup_d)
    if trivial:
        notes.append("trivial case: the model has no mean-field interaction")
    slope_checked = (not trivial) and model.kind == "average_form" and isinstance(xi, SigmaSq)
    return ChaosReport(model.name, N_list, int(trials), times, dist, dist_se, aleph, aleph_se,
                       sup_d, sup_d_se, sup_a, alpha, beta, B, K, float(zK), float(C), bound,
                       ok, None, slope, ci, tuple(config.slope_band), slope_checked, trivial,
                       xi.name, notes)
