"""Optimal transport costs for the quadratic cost c(x, y) = |x - y|^2 / 2.

All costs returned here are transport *costs* C(mu, nu) under the halved
quadratic cost.  The corresponding Wasserstein-2 metric is
``sqrt(2 * C)``; see :func:`w2_metric`.
"""

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import logsumexp

from .errors import (DimError, EmptyMeasureError, MatrixError, ParamError,
                     ScaleError, SizeError)

WEIGHT_TOL = 1e-12
MARGINAL_TOL = 1e-9
SPD_TOL = 1e-10
BRUTEFORCE_MAX = 64
REPLICATION_MAX = 4000


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PointCloud:
    """Uniform empirical measure on ``M`` points of R^d.

    Parameters
    ----------
    points : array_like, shape (M, d) or (M,)
        Atom locations; a 1-D array is read as ``M`` points in R^1.
    """

    points: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim == 1:
            p = p[:, None]
        if p.ndim != 2:
            raise DimError("points must be an (M, d) array")
        if p.shape[0] < 1:
            raise EmptyMeasureError("a point cloud needs at least one point")
        if p.shape[1] < 1:
            raise DimError("dimension must be positive")
        if not np.all(np.isfinite(p)):
            raise ValueError("point coordinates must be finite")
        object.__setattr__(self, "points", _frozen(p))

    @property
    def M(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    def mean(self):
        return self.points.mean(axis=0)

    def second_moment(self):
        """Mean of |x|^2 over the cloud."""
        return float(np.mean(np.sum(self.points ** 2, axis=1)))

    def shifted(self, v):
        return PointCloud(self.points + np.asarray(v, dtype=np.float64))

    def to_weighted(self):
        return WeightedCloud(self.points, np.full(self.M, 1.0 / self.M))

    def __len__(self):
        return self.M

    def __eq__(self, other):
        return isinstance(other, PointCloud) and np.array_equal(self.points, other.points)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class WeightedCloud:
    """Discrete probability measure with arbitrary positive weights."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim == 1:
            p = p[:, None]
        w = np.asarray(self.weights, dtype=np.float64).ravel()
        if p.ndim != 2 or p.shape[0] != w.shape[0]:
            raise SizeError("need one weight per atom")
        if p.shape[0] < 1:
            raise EmptyMeasureError("a weighted cloud needs at least one atom")
        if np.any(w <= 0):
            raise ParamError("weights must be positive")
        if abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ParamError(f"weights sum to {w.sum():.17g}, not 1")
        if not np.all(np.isfinite(p)):
            raise ValueError("atom coordinates must be finite")
        object.__setattr__(self, "points", _frozen(p))
        object.__setattr__(self, "weights", _frozen(w))

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def size(self):
        return self.points.shape[0]


def as_weighted(mu):
    if isinstance(mu, WeightedCloud):
        return mu
    if isinstance(mu, PointCloud):
        return mu.to_weighted()
    return PointCloud(mu).to_weighted()


def as_cloud(mu):
    return mu if isinstance(mu, PointCloud) else PointCloud(mu)


@dataclass(frozen=True)
class Assignment:
    """Optimal coupling between equal-size uniform clouds: i -> perm[i]."""

    perm: np.ndarray

    def __post_init__(self):
        perm = np.asarray(self.perm, dtype=np.intp)
        if sorted(perm.tolist()) != list(range(perm.size)):
            raise ValueError("assignment must be a permutation")
        object.__setattr__(self, "perm", perm)


@dataclass(frozen=True)
class DensePlan:
    """Coupling matrix with ``plan[i, j]`` mass sent from atom i to atom j."""

    plan: np.ndarray

    def marginals(self):
        return self.plan.sum(axis=1), self.plan.sum(axis=0)


TransportPlan = Union[Assignment, DensePlan]


@dataclass(frozen=True, eq=False)
class DiscreteLevyMeasure:
    """Finite Levy measure sum_k lambda_k delta_{z_k} with z_k != 0.

    Parameters
    ----------
    atoms : array_like, shape (K, d)
        Jump vectors; ``K`` may be zero.
    intensities : array_like, shape (K,)
        Positive jump rates.
    dim : int, optional
        Needed only when ``K == 0``.
    """

    atoms: np.ndarray
    intensities: np.ndarray
    dim: int = None

    def __post_init__(self):
        z = np.asarray(self.atoms, dtype=np.float64)
        lam = np.asarray(self.intensities, dtype=np.float64).ravel()
        if z.size == 0:
            d = self.dim
            if d is None:
                d = z.shape[1] if z.ndim == 2 else None
            if d is None:
                raise DimError("empty Levy measure needs an explicit dim")
            z = np.zeros((0, int(d)))
        if z.ndim == 1:
            z = z[:, None]
        if z.shape[0] != lam.shape[0]:
            raise SizeError("need one intensity per atom")
        if self.dim is not None and z.shape[1] != self.dim:
            raise DimError("atoms do not match declared dim")
        if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
            raise ParamError("intensities must be positive and finite")
        if not np.all(np.isfinite(z)):
            raise ValueError("jump vectors must be finite")
        if np.any(np.all(z == 0.0, axis=1)):
            raise ParamError("a Levy measure has no atom at the origin")
        object.__setattr__(self, "atoms", _frozen(z))
        object.__setattr__(self, "intensities", _frozen(lam))
        object.__setattr__(self, "dim", int(z.shape[1]))

    @classmethod
    def empty(cls, dim):
        return cls(np.zeros((0, dim)), np.zeros(0), dim=dim)

    @property
    def size(self):
        return self.atoms.shape[0]

    @property
    def total_intensity(self):
        return float(self.intensities.sum())

    @property
    def m1(self):
        """First moment sum_k lambda_k z_k (the jump compensator rate)."""
        return self.intensities @ self.atoms if self.size else np.zeros(self.dim)

    @property
    def m2(self):
        """Second moment sum_k lambda_k |z_k|^2."""
        return float(self.intensities @ np.sum(self.atoms ** 2, axis=1))

    def pushforward(self, eta):
        """Image measure under z -> eta z; atoms mapped to 0 are dropped."""
        eta = np.asarray(eta, dtype=np.float64)
        if eta.shape != (self.dim, self.dim):
            raise DimError("pushforward matrix must be d x d")
        z = self.atoms @ eta.T
        keep = np.any(z != 0.0, axis=1)
        return DiscreteLevyMeasure(z[keep], self.intensities[keep], dim=self.dim)

    def same_base(self, other):
        return (isinstance(other, DiscreteLevyMeasure) and self.dim == other.dim
                and np.array_equal(self.atoms, other.atoms)
                and np.array_equal(self.intensities, other.intensities))

    def __eq__(self, other):
        return self.same_base(other)

    __hash__ = None


# ---------------------------------------------------------------------------
# matrices
# ---------------------------------------------------------------------------

def as_spd(a, tol=SPD_TOL):
    """Validate a symmetric positive semidefinite matrix and clamp its spectrum.

    Returns the symmetrized matrix.  Raises :class:`MatrixError` when the
    asymmetry or the most negative eigenvalue exceeds ``tol``.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise MatrixError("matrix must be square")
    if not np.all(np.isfinite(a)):
        raise MatrixError("matrix entries must be finite")
    if np.max(np.abs(a - a.T)) > tol:
        raise MatrixError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    if np.linalg.eigvalsh(a)[0] < -tol:
        raise MatrixError("matrix is not positive semidefinite")
    return a


def sqrtm_psd(a):
    """Symmetric square root of a PSD matrix, negative eigenvalues clamped."""
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def bures_wasserstein(a, b):
    """Bures-Wasserstein distance between covariance matrices.

    W_S(a, b)^2 = (tr a + tr b - 2 tr (b^{1/2} a b^{1/2})^{1/2}) / 2.

    Parameters
    ----------
    a, b : array_like, shape (d, d)
        Symmetric positive semidefinite matrices.

    Returns
    -------
    float

    Notes
    -----
    The trace term equals the nuclear norm of ``b^{1/2} a^{1/2}``.  With the
    polar factor ``U`` of that product the squared distance is
    ``||a^{1/2} - b^{1/2} U||_F^2 / 2``, a sum of squares that avoids the
    cancellation of the trace formula for nearly equal arguments.
    """
    a, b = as_spd(a), as_spd(b)
    if a.shape != b.shape:
        raise DimError("covariance matrices differ in size")
    if np.array_equal(a, b):
        return 0.0
    ra, rb = sqrtm_psd(a), sqrtm_psd(b)
    p, _, qt = np.linalg.svd(rb.T @ ra)
    diff = ra - rb @ (p @ qt)
    return float(np.sqrt(0.5 * np.sum(diff * diff)))


def gaussian_w2(x0, a, y0, b):
    """Transport cost C between N(x0, a) and N(y0, b): |x0-y0|^2/2 + W_S^2."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    y0 = np.atleast_1d(np.asarray(y0, dtype=np.float64))
    a, b = np.atleast_2d(a), np.atleast_2d(b)
    if not (x0.shape == y0.shape and a.shape == b.shape == (x0.size, x0.size)):
        raise DimError("means and covariances must share one dimension")
    return float(0.5 * np.sum((x0 - y0) ** 2) + bures_wasserstein(a, b) ** 2)


def gaussian_optimal_map(a, b):
    """Symmetric matrix T with T a T = b (the optimal linear map N(0,a)->N(0,b)).

    Requires ``a`` to be nonsingular.
    """
    a, b = as_spd(a), as_spd(b)
    ra = sqrtm_psd(a)
    w, v = np.linalg.eigh(a)
    if w[0] <= SPD_TOL:
        raise MatrixError("source covariance must be nonsingular")
    ra_inv = (v / np.sqrt(w)) @ v.T
    return ra_inv @ sqrtm_psd(ra @ b @ ra) @ ra_inv


# ---------------------------------------------------------------------------
# point-cloud transport
# ---------------------------------------------------------------------------

def cost_matrix(x, y):
    """Matrix of halved squared distances between rows of x and y."""
    diff = x[:, None, :] - y[None, :, :]
    return 0.5 * np.einsum("ijk,ijk->ij", diff, diff)


def _check_pair(mu, nu):
    if mu.dim != nu.dim:
        raise DimError(f"dimensions differ ({mu.dim} vs {nu.dim})")


def exact_w2_assignment(mu, nu):
    """Exact transport cost between equal-size uniform clouds.

    Parameters
    ----------
    mu, nu : PointCloud
        Clouds with the same number of points and dimension.

    Returns
    -------
    cost : float
        min over permutations pi of (1/M) sum_i |x_i - y_pi(i)|^2 / 2.
    plan : Assignment
        An optimal permutation.
    """
    mu, nu = as_cloud(mu), as_cloud(nu)
    _check_pair(mu, nu)
    if mu.M != nu.M:
        raise SizeError(f"cloud sizes differ ({mu.M} vs {nu.M})")
    c = cost_matrix(mu.points, nu.points)
    rows, cols = linear_sum_assignment(c)
    perm = np.empty(mu.M, dtype=np.intp)
    perm[rows] = cols
    return float(c[rows, cols].sum() / mu.M), Assignment(perm)


def exact_w2_1d(mu, nu):
    """Exact transport cost between discrete measures on the real line.

    The monotone (quantile) coupling is optimal for convex costs; it is built
    by a north-west corner sweep over the sorted atoms.
    """
    mu, nu = as_weighted(mu), as_weighted(nu)
    _check_pair(mu, nu)
    if mu.dim != 1:
        raise DimError("exact_w2_1d needs one-dimensional measures")
    x, y = mu.points[:, 0], nu.points[:, 0]
    ix, iy = np.argsort(x, kind="stable"), np.argsort(y, kind="stable")
    x, wx, y, wy = x[ix], mu.weights[ix], y[iy], nu.weights[iy]
    cx, cy = np.cumsum(wx), np.cumsum(wy)
    cx[-1] = cy[-1] = 1.0
    knots = np.union1d(cx, cy)
    masses = np.diff(np.concatenate([[0.0], knots]))
    i = np.minimum(np.searchsorted(cx, knots, side="left"), len(x) - 1)
    j = np.minimum(np.searchsorted(cy, knots, side="left"), len(y) - 1)
    return float(np.sum(masses * 0.5 * (x[i] - y[j]) ** 2))


def _uniform_sorted_1d(x, y):
    return float(0.5 * np.mean((np.sort(x[:, 0]) - np.sort(y[:, 0])) ** 2))


def bruteforce_ot(mu, nu):
    """Exact Kantorovich problem by the transportation simplex method.

    A small exact solver used as the correctness oracle for the other
    routines.  The initial basis comes from the north-west corner rule;
    entering and leaving cells follow Bland's smallest-index rule, which
    rules out cycling on the highly degenerate problems produced by uniform
    marginals.

    Parameters
    ----------
    mu, nu : WeightedCloud or PointCloud
        Source and target measures, with ``mu.size * nu.size <= 64``.

    Returns
    -------
    cost : float
    plan : DensePlan
    """
    mu, nu = as_weighted(mu), as_weighted(nu)
    _check_pair(mu, nu)
    m, n = mu.size, nu.size
    if m * n > BRUTEFORCE_MAX:
        raise ScaleError(f"{m} x {n} atoms exceed the oracle limit of {BRUTEFORCE_MAX}")
    c = cost_matrix(mu.points, nu.points)
    plan, _ = _transport_simplex(c, mu.weights, nu.weights)
    return float(np.sum(plan * c)), DensePlan(plan)


def _transport_simplex(c, a, b, max_iter=10000):
    m, n = c.shape
    zero = 1e-14
    x = np.zeros((m, n))
    basis = []
    s, d = a.astype(float).copy(), b.astype(float).copy()
    i = j = 0
    while True:
        q = min(s[i], d[j])
        x[i, j] = q
        basis.append((i, j))
        s[i] -= q
        d[j] -= q
        if i == m - 1 and j == n - 1:
            break
        if (s[i] <= zero and i < m - 1) or j == n - 1:
            i += 1
        else:
            j += 1
    scale = max(float(np.abs(c).max()), 1.0)
    for _ in range(max_iter):
        u, v = _potentials(c, basis, m, n)
        red = c - u[:, None] - v[None, :]
        entering = None
        in_basis = set(basis)
        for cell in itertools.product(range(m), range(n)):
            if cell not in in_basis and red[cell] < -1e-12 * scale:
                entering = cell
                break
        if entering is None:
            return x, basis
        cycle = _cycle(basis, entering, m)
        minus = cycle[1::2]
        theta = min(x[cell] for cell in minus)
        leaving = min(cell for cell in minus if x[cell] <= theta + zero)
        for k, cell in enumerate(cycle):
            x[cell] += theta if k % 2 == 0 else -theta
        x[leaving] = 0.0
        basis.remove(leaving)
        basis.append(entering)
    raise RuntimeError("transportation simplex did not terminate")


def _potentials(c, basis, m, n):
    u = np.full(m, np.nan)
    v = np.full(n, np.nan)
    u[0] = 0.0
    pending = list(basis)
    while pending:
        rest = []
        for (i, j) in pending:
            if not np.isnan(u[i]):
                v[j] = c[i, j] - u[i]
            elif not np.isnan(v[j]):
                u[i] = c[i, j] - v[j]
            else:
                rest.append((i, j))
        if len(rest) == len(pending):
            raise RuntimeError("basis is not a spanning tree")
        pending = rest
    return u, v


def _cycle(basis, entering, m):
    # rows are nodes 0..m-1, columns m..m+n-1; find the tree path col -> row
    adj = {}
    for (i, j) in basis:
        adj.setdefault(i, []).append(m + j)
        adj.setdefault(m + j, []).append(i)
    start, goal = m + entering[1], entering[0]
    parent = {start: None}
    stack = [start]
    while stack:
        node = stack.pop()
        if node == goal:
            break
        for nxt in adj.get(node, []):
            if nxt not in parent:
                parent[nxt] = node
                stack.append(nxt)
    path = [goal]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    # path runs row_e -> ... -> col_e; consecutive nodes are basic cells
    cells = [entering]
    for a_, b_ in zip(path[:-1], path[1:]):
        cells.append((a_, b_ - m) if a_ < m else (b_, a_ - m))
    return cells


def sinkhorn_w2(mu, nu, epsilon, max_iters=10000, tol=1e-9):
    """Entropic transport in the log domain.

    Parameters
    ----------
    mu, nu : WeightedCloud or PointCloud
    epsilon : float
        Entropic regularization strength (positive).
    max_iters : int, optional
    tol : float, optional
        Stop once the L1 violation of the source marginal drops below ``tol``.

    Returns
    -------
    cost : float
        Transport part <P, C> of the regularized optimum (entropy excluded).
    iterations : int
    converged : bool
    """
    if not (epsilon > 0):
        raise ParamError("epsilon must be positive")
    mu, nu = as_weighted(mu), as_weighted(nu)
    _check_pair(mu, nu)
    c = cost_matrix(mu.points, nu.points)
    la, lb = np.log(mu.weights), np.log(nu.weights)
    f = np.zeros(mu.size)
    g = np.zeros(nu.size)
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        f = -epsilon * logsumexp((g[None, :] - c) / epsilon + lb[None, :], axis=1)
        g = -epsilon * logsumexp((f[:, None] - c) / epsilon + la[:, None], axis=0)
        logp = (f[:, None] + g[None, :] - c) / epsilon + la[:, None] + lb[None, :]
        err = np.abs(np.exp(logsumexp(logp, axis=1)) - mu.weights).sum()
        if err < tol:
            converged = True
            break
    plan = np.exp(logp)
    return float(np.sum(plan * c)), it, converged


def w2_cost(mu, nu, sinkhorn_epsilon=None):
    """Exact transport cost between clouds by the cheapest exact route.

    Routes, in order of preference: sorted quantiles in one dimension,
    linear assignment for equal sizes, the simplex oracle for tiny
    instances, assignment on replicated clouds when the least common
    multiple of the sizes is moderate.  Only if all fail is Sinkhorn used.

    Returns
    -------
    cost : float
    method : str
        One of ``"1d"``, ``"assignment"``, ``"bruteforce"``,
        ``"replicated"``, ``"sinkhorn"``; the last marks an approximation.
    """
    if isinstance(mu, WeightedCloud) or isinstance(nu, WeightedCloud):
        mu, nu = as_weighted(mu), as_weighted(nu)
        _check_pair(mu, nu)
        if mu.dim == 1:
            return exact_w2_1d(mu, nu), "1d"
        if mu.size * nu.size <= BRUTEFORCE_MAX:
            return bruteforce_ot(mu, nu)[0], "bruteforce"
        return _sinkhorn_fallback(mu, nu, sinkhorn_epsilon)
    mu, nu = as_cloud(mu), as_cloud(nu)
    _check_pair(mu, nu)
    if mu.dim == 1:
        if mu.M == nu.M:
            return _uniform_sorted_1d(mu.points, nu.points), "1d"
        return exact_w2_1d(mu, nu), "1d"
    if mu.M == nu.M:
        return exact_w2_assignment(mu, nu)[0], "assignment"
    if mu.M * nu.M <= BRUTEFORCE_MAX:
        return bruteforce_ot(mu, nu)[0], "bruteforce"
    lcm = mu.M * nu.M // math.gcd(mu.M, nu.M)
    if lcm <= REPLICATION_MAX:
        x = np.repeat(mu.points, lcm // mu.M, axis=0)
        y = np.repeat(nu.points, lcm // nu.M, axis=0)
        return exact_w2_assignment(PointCloud(x), PointCloud(y))[0], "replicated"
    return _sinkhorn_fallback(mu.to_weighted(), nu.to_weighted(), sinkhorn_epsilon)


def _sinkhorn_fallback(mu, nu, epsilon):
    if epsilon is None:
        epsilon = 1e-3 * max(float(np.mean(cost_matrix(mu.points, nu.points))), 1e-12)
    cost, _, converged = sinkhorn_w2(mu, nu, epsilon)
    if not converged:
        warnings.warn("Sinkhorn fallback did not converge", RuntimeWarning)
    return cost, "sinkhorn"


def w2_metric(cost):
    """Wasserstein-2 metric value sqrt(2 C) for a halved-quadratic cost C."""
    return math.sqrt(2.0 * max(float(cost), 0.0))


def tensorized_cost(x, y):
    """Tensorized cost (1/N) sum_k |x_k - y_k|^2 / 2 of two particle tuples.

    Accepts arrays of shape (N, d), (N,) or batched (..., N, d); batch
    dimensions are preserved in the result.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if y.ndim == 1:
        y = y[:, None]
    if x.shape[-2] != y.shape[-2]:
        raise SizeError(f"tuple lengths differ ({x.shape[-2]} vs {y.shape[-2]})")
    if x.shape[-1] != y.shape[-1]:
        raise DimError("tuples differ in dimension")
    diff = x - y
    out = 0.5 * np.mean(np.sum(diff * diff, axis=-1), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def tensor_product_upper_bound(pairs):
    """Average of exact assignment costs over pairs (mu_k, nu_k).

    Upper bound for the tensorized transport cost between the product
    measures of the mu_k and of the nu_k.
    """
    pairs = list(pairs)
    if not pairs:
        raise SizeError("need at least one pair")
    dims = {as_cloud(p).dim for pair in pairs for p in pair}
    if len(dims) != 1:
        raise DimError("all pairs must share one dimension")
    return float(np.mean([exact_w2_assignment(m, n)[0] for m, n in pairs]))


# ---------------------------------------------------------------------------
# Levy measures and generators
# ---------------------------------------------------------------------------

def levy_pushforward_cost(sigma, sigma_tilde, omega):
    """Cost of the coupling of sigma#omega and sigma_tilde#omega along shared atoms.

    Returns (1/2) sum_k lambda_k |sigma z_k - sigma_tilde z_k|^2, an upper
    bound for the Levy transport cost of the two pushforward measures.
    """
    s = np.atleast_2d(np.asarray(sigma, dtype=np.float64))
    st = np.atleast_2d(np.asarray(sigma_tilde, dtype=np.float64))
    d = omega.dim
    if s.shape != (d, d) or st.shape != (d, d):
        raise DimError("matrices must be d x d with d the measure dimension")
    if omega.size == 0:
        return 0.0
    diff = omega.atoms @ (s - st).T
    cost = 0.5 * float(omega.intensities @ np.sum(diff * diff, axis=1))
    bound = 0.5 * float(np.sum((s - st) ** 2)) * omega.m2
    assert cost <= bound * (1 + 1e-12) + 1e-300, "Frobenius bound violated"
    return cost


def trivial_coupling_cost(theta, theta_tilde):
    """Cost (m2(theta) + m2(theta_tilde)) / 2 of the coupling through the origin."""
    if theta.dim != theta_tilde.dim:
        raise DimError("Levy measures differ in dimension")
    return 0.5 * (theta.m2 + theta_tilde.m2)


def levy_cost_bound(A, B):
    """Best constructive upper bound on the Levy transport cost of two triplets."""
    ja, jb = A.jump_measure(), B.jump_measure()
    if ja is None and jb is None:
        return 0.0
    d = A.dim
    ja = ja if ja is not None else DiscreteLevyMeasure.empty(d)
    jb = jb if jb is not None else DiscreteLevyMeasure.empty(d)
    trivial = trivial_coupling_cost(ja, jb)
    if A.base is not None and B.base is not None and A.base.same_base(B.base):
        return min(levy_pushforward_cost(A.eta, B.eta, A.base), trivial)
    return trivial


def generator_metric_wg(A, B):
    """Generator discrepancy W_G between two Levy triplets.

    W_G^2 = |b - b~|^2 / 2 + W_S(a, a~)^2 + W_L^2, where the jump term W_L^2 is
    replaced by its best constructive coupling bound (see
    :func:`levy_cost_bound`).  The result is therefore an upper bound.
    """
    if A.dim != B.dim:
        raise DimError("triplets differ in dimension")
    sq = (0.5 * float(np.sum((A.b - B.b) ** 2)) + bures_wasserstein(A.a, B.a) ** 2
          + levy_cost_bound(A, B))
    return math.sqrt(sq)
