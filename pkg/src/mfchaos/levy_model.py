"""Levy-type mean-field coefficient fields.

A mean-field model assigns to a point ``x`` and a measure ``mu`` a coefficient
tuple ``(b, sigma, eta)``: drift vector, diffusion factor and jump matrix.  The
jump part of the generator is the pushforward ``eta # Omega`` of a fixed
finite base measure ``Omega``, compensated linearly (global form).

Two kinds of models exist:

* ``average_form``: each coefficient is the mu-average of a kernel
  ``k(x, z)``; kernels live in :class:`Kernel` and the named library.
* ``general``: coefficients are arbitrary callables ``f(x, points)`` taking
  an (n, d) array of evaluation points and the (M, d) atoms of mu.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import DimError, EmptyMeasureError, ModelKindError, ParamError
from .ot_core import (DiscreteLevyMeasure, PointCloud, as_spd, sqrtm_psd,
                      w2_cost)

_CHUNK = 1 << 22


# ---------------------------------------------------------------------------
# triplets and coefficient tuples
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class LevyTriplet:
    """Constant Levy generator (b, a = sigma sigma^T, eta # base).

    Parameters
    ----------
    b : array_like, shape (d,)
    sigma : array_like, shape (d, d)
    eta : array_like, shape (d, d), optional
    base : DiscreteLevyMeasure, optional
        Base jump measure; the jump measure is ``eta # base``.
    """

    b: np.ndarray
    sigma: np.ndarray
    eta: Optional[np.ndarray] = None
    base: Optional[DiscreteLevyMeasure] = None

    def __post_init__(self):
        b = np.atleast_1d(np.asarray(self.b, dtype=np.float64))
        d = b.shape[0]
        s = np.asarray(self.sigma, dtype=np.float64).reshape(d, d)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "sigma", s)
        if (self.eta is None) != (self.base is None):
            raise ParamError("eta and base must be given together")
        if self.eta is not None:
            e = np.asarray(self.eta, dtype=np.float64).reshape(d, d)
            if self.base.dim != d:
                raise DimError("base jump measure has the wrong dimension")
            object.__setattr__(self, "eta", e)

    @classmethod
    def from_covariance(cls, b, a, eta=None, base=None):
        """Build a triplet from a diffusion matrix, using its symmetric root."""
        return cls(b, sqrtm_psd(as_spd(a)), eta, base)

    @property
    def dim(self):
        return self.b.shape[0]

    @property
    def a(self):
        return self.sigma @ self.sigma.T

    @property
    def has_jumps(self):
        return self.base is not None and self.base.size > 0

    def jump_measure(self):
        """The Levy measure eta # base, or None without a jump part."""
        return self.base.pushforward(self.eta) if self.base is not None else None


class CoefficientTuple(NamedTuple):
    """Coefficients (b, sigma, eta); arrays may carry leading batch axes."""

    b: np.ndarray
    sigma: np.ndarray
    eta: Optional[np.ndarray]

    def __sub__(self, other):
        eta = _sub_opt(self.eta, other.eta)
        return CoefficientTuple(self.b - other.b, self.sigma - other.sigma, eta)

    def scale(self, c):
        return CoefficientTuple(c * self.b, c * self.sigma,
                                None if self.eta is None else c * self.eta)


def _sub_opt(a, b):
    if a is None and b is None:
        return None
    if a is None:
        return -b
    if b is None:
        return a
    return a - b


def vnorm(t):
    """Norm sqrt(|b|^2/2 + ||sigma||_F^2/2 + ||eta||_F^2/2) of a coefficient tuple."""
    b = np.asarray(t.b, dtype=np.float64)
    s = np.asarray(t.sigma, dtype=np.float64)
    sq = 0.5 * np.sum(b * b, axis=-1) + 0.5 * np.sum(s * s, axis=(-2, -1))
    if t.eta is not None:
        e = np.asarray(t.eta, dtype=np.float64)
        sq = sq + 0.5 * np.sum(e * e, axis=(-2, -1))
    out = np.sqrt(sq)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------

class Kernel:
    """Average-form kernel k(x, z) with vector or matrix values.

    Parameters
    ----------
    fn : callable
        ``fn(x, z)`` broadcasting over leading axes; ``x`` and ``z`` end in an
        axis of length d and the output ends in ``(d,)`` or ``(d, d)``.
    matrix : bool
        True for matrix-valued kernels (diffusion and jump coefficients).
    name : str
    params : dict
    depends_on_z : bool
        False when the kernel ignores its second argument, i.e. the averaged
        coefficient does not depend on the measure.
    """

    def __init__(self, fn, matrix=False, name="custom", params=None, depends_on_z=True):
        self.fn = fn
        self.matrix = bool(matrix)
        self.name = name
        self.params = dict(params or {})
        self.depends_on_z = bool(depends_on_z)

    def __call__(self, x, z):
        return self.fn(np.asarray(x, dtype=np.float64), np.asarray(z, dtype=np.float64))

    @property
    def _m_axis(self):
        return -3 if self.matrix else -2

    def average(self, x, points):
        """Average of k(x_i, z) over the atoms z of ``points``.

        ``x`` has shape (..., n, d), ``points`` shape (..., M, d); the result
        has shape (..., n, d) or (..., n, d, d).
        """
        x = np.asarray(x, dtype=np.float64)
        p = np.asarray(points, dtype=np.float64)
        if p.shape[-2] == 0:
            raise EmptyMeasureError("cannot average over an empty measure")
        if p.ndim == 2 and x.ndim > 2:
            out = self.average(x.reshape(-1, x.shape[-1]), p)
            return out.reshape(x.shape[:-1] + out.shape[1:])
        n, m = x.shape[-2], p.shape[-2]
        step = max(1, _CHUNK // max(m * x.shape[-1] ** (2 if self.matrix else 1), 1))
        if n <= step:
            return self(x[..., :, None, :], p[..., None, :, :]).mean(axis=self._m_axis)
        parts = [self(x[..., i:i + step, None, :], p[..., None, :, :]).mean(axis=self._m_axis)
                 for i in range(0, n, step)]
        return np.concatenate(parts, axis=self._m_axis + 1)

    def truncated_average(self, X):
        """For each particle i, the average of k(X_i, X_j) over j != i."""
        X = np.asarray(X, dtype=np.float64)
        N = X.shape[-2]
        total = self(X[..., :, None, :], X[..., None, :, :]).sum(axis=self._m_axis)
        return (total - self(X, X)) / (N - 1)

    def __add__(self, other):
        if not isinstance(other, Kernel) or other.matrix != self.matrix:
            return NotImplemented
        return SumKernel(self, other)


class SumKernel(Kernel):
    """Pointwise sum of kernels."""

    def __init__(self, *parts):
        flat = []
        for p in parts:
            flat.extend(p.parts if isinstance(p, SumKernel) else [p])
        self.parts = flat
        super().__init__(lambda x, z: sum(k(x, z) for k in flat), flat[0].matrix,
                         "+".join(k.name for k in flat), {},
                         any(k.depends_on_z for k in flat))

    def average(self, x, points):
        return sum(k.average(x, points) for k in self.parts)

    def truncated_average(self, X):
        return sum(k.truncated_average(X) for k in self.parts)


def _truncated_mean(X):
    N = X.shape[-2]
    return (X.sum(axis=-2, keepdims=True) - X) / (N - 1)


class AffineKernel(Kernel):
    """Vector kernel k(x, z) = A_x x + A_z z + c."""

    def __init__(self, Ax, Az, c, name="affine", params=None):
        self.Ax = np.asarray(Ax, dtype=np.float64)
        self.Az = np.asarray(Az, dtype=np.float64)
        self.c = np.asarray(c, dtype=np.float64)
        super().__init__(self._eval, False, name, params, bool(np.any(self.Az != 0)))

    def _eval(self, x, z):
        return x @ self.Ax.T + z @ self.Az.T + self.c

    def average(self, x, points):
        p = np.asarray(points, dtype=np.float64)
        if p.shape[-2] == 0:
            raise EmptyMeasureError("cannot average over an empty measure")
        return self._eval(np.asarray(x, dtype=np.float64), p.mean(axis=-2, keepdims=True))

    def truncated_average(self, X):
        X = np.asarray(X, dtype=np.float64)
        return self._eval(X, _truncated_mean(X))

    def __add__(self, other):
        if isinstance(other, AffineKernel):
            return AffineKernel(self.Ax + other.Ax, self.Az + other.Az, self.c + other.c,
                                f"{self.name}+{other.name}")
        return super().__add__(other)


class DiagAffineKernel(Kernel):
    """Matrix kernel k(x, z) = C + diag(p_x * x + p_z * z)."""

    def __init__(self, C, px, pz, name="diag_affine", params=None):
        self.C = np.asarray(C, dtype=np.float64)
        d = self.C.shape[0]
        self.px = np.broadcast_to(np.asarray(px, dtype=np.float64), (d,)).copy()
        self.pz = np.broadcast_to(np.asarray(pz, dtype=np.float64), (d,)).copy()
        super().__init__(self._eval, True, name, params, bool(np.any(self.pz != 0)))

    def _eval(self, x, z):
        v = self.px * x + self.pz * z
        shape = np.broadcast_shapes(x.shape, z.shape)
        out = np.broadcast_to(self.C, shape[:-1] + self.C.shape).copy()
        if np.any(self.px != 0) or np.any(self.pz != 0):
            idx = np.arange(self.C.shape[0])
            out[..., idx, idx] += np.broadcast_to(v, shape)
        return out

    def average(self, x, points):
        p = np.asarray(points, dtype=np.float64)
        if p.shape[-2] == 0:
            raise EmptyMeasureError("cannot average over an empty measure")
        return self._eval(np.asarray(x, dtype=np.float64), p.mean(axis=-2, keepdims=True))

    def truncated_average(self, X):
        X = np.asarray(X, dtype=np.float64)
        return self._eval(X, _truncated_mean(X))

    def __add__(self, other):
        if isinstance(other, DiagAffineKernel):
            return DiagAffineKernel(self.C + other.C, self.px + other.px, self.pz + other.pz,
                                    f"{self.name}+{other.name}")
        return super().__add__(other)


def _as_matrix(value, d):
    v = np.asarray(value, dtype=np.float64)
    if v.ndim == 0:
        return float(v) * np.eye(d)
    if v.ndim == 1:
        return np.diag(v)
    return v.reshape(d, d)


def zero_kernel(d, matrix=False):
    if matrix:
        return DiagAffineKernel(np.zeros((d, d)), 0.0, 0.0, "zero")
    return AffineKernel(np.zeros((d, d)), np.zeros((d, d)), np.zeros(d), "zero")


def linear_attraction(d, kappa=1.0):
    """k(x, z) = kappa (z - x): attraction towards the other particles."""
    I = np.eye(d)
    return AffineKernel(-kappa * I, kappa * I, np.zeros(d), "linear_attraction",
                        {"kappa": kappa})


def confinement(d, kappa=1.0):
    """k(x, z) = -kappa x: linear restoring force towards the origin."""
    return AffineKernel(-kappa * np.eye(d), np.zeros((d, d)), np.zeros(d), "confinement",
                        {"kappa": kappa})


def constant_drift(d, b):
    b = np.broadcast_to(np.asarray(b, dtype=np.float64), (d,)).copy()
    return AffineKernel(np.zeros((d, d)), np.zeros((d, d)), b, "constant_drift",
                        {"b": b.tolist()})


def affine_drift(d, Ax, Az, c=0.0):
    return AffineKernel(_as_matrix(Ax, d), _as_matrix(Az, d),
                        np.broadcast_to(np.asarray(c, dtype=np.float64), (d,)).copy(),
                        "affine", {})


def constant_sigma(d, s=1.0):
    """Constant diffusion factor (scalar, diagonal or full matrix)."""
    return DiagAffineKernel(_as_matrix(s, d), 0.0, 0.0, "constant_sigma", {"s": s})


def constant_eta(d, c=1.0):
    """Constant jump matrix (scalar, diagonal or full matrix)."""
    return DiagAffineKernel(_as_matrix(c, d), 0.0, 0.0, "constant_eta", {"c": c})


def linear_eta(d, c0=1.0, c1=0.1):
    """k(x, z) = c0 I + c1 diag(z - x): jump sizes modulated by the distance."""
    return DiagAffineKernel(c0 * np.eye(d), -c1, c1, "linear_eta", {"c0": c0, "c1": c1})


KERNELS = {
    "zero": lambda d, matrix=False: zero_kernel(d, matrix),
    "linear_attraction": linear_attraction,
    "confinement": confinement,
    "constant_drift": constant_drift,
    "affine": affine_drift,
    "constant_sigma": constant_sigma,
    "constant_eta": constant_eta,
    "linear_eta": linear_eta,
}
MATRIX_KERNELS = {"constant_sigma", "constant_eta", "linear_eta"}


def kernel_from_spec(spec, d, matrix):
    """Build a kernel from ``{"kernel": name, **params}`` or a list of them."""
    if spec is None:
        return zero_kernel(d, matrix)
    if isinstance(spec, (list, tuple)):
        if not spec:
            return zero_kernel(d, matrix)
        ks = [kernel_from_spec(s, d, matrix) for s in spec]
        out = ks[0]
        for k in ks[1:]:
            out = out + k
        return out
    spec = dict(spec)
    name = spec.pop("kernel", None)
    if name not in KERNELS:
        raise ParamError(f"unknown kernel {name!r}; choose from {sorted(KERNELS)}")
    if name == "zero":
        return zero_kernel(d, matrix)
    if (name in MATRIX_KERNELS) != matrix:
        raise ParamError(f"kernel {name!r} has the wrong value type for this slot")
    try:
        return KERNELS[name](d, **spec)
    except TypeError as exc:
        raise ParamError(f"bad parameters for kernel {name!r}: {exc}") from None


# ---------------------------------------------------------------------------
# models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LipschitzParams:
    """User-declared constants.

    alpha, beta : constants of the mean-field Lipschitz/stability condition.
    M : bound Sigma(x, mu, nu) <= sqrt(M) W(mu, nu) with W^2 the transport cost.
    M_prime : Lipschitz constant of x -> Sigma(x, mu, nu).
    B : relaxed triangle constant; derived from M, M_prime when omitted.
    """

    alpha: Optional[float] = None
    beta: Optional[float] = None
    M: Optional[float] = None
    M_prime: Optional[float] = None
    B: Optional[float] = None

    def __post_init__(self):
        for name in ("alpha", "beta", "M", "M_prime", "B"):
            v = getattr(self, name)
            if v is not None and (not math.isfinite(v) or v < 0):
                raise ParamError(f"lipschitz parameter {name} must be finite and >= 0")

    def to_dict(self):
        return {k: getattr(self, k) for k in ("alpha", "beta", "M", "M_prime", "B")
                if getattr(self, k) is not None}


@dataclass(frozen=True, eq=False)
class TestFunction:
    """Twice differentiable function with analytic derivatives."""

    __test__ = False  # not a pytest class

    value: Callable
    grad: Callable
    hess: Callable


@dataclass(frozen=True, eq=False)
class MeanFieldModel:
    """Measure-dependent Levy coefficients (b, sigma, eta)(x, mu).

    Use :meth:`average_form` or :meth:`general` to construct.

    Attributes
    ----------
    dim : int
    kind : {"average_form", "general"}
    b, sigma, eta : Kernel or callable
        ``eta`` is None for models without jumps.
    base_jump : DiscreteLevyMeasure or None
    lipschitz : LipschitzParams or None
    interacting : bool
        Whether the coefficients depend on the measure at all.
    """

    dim: int
    kind: str
    b: object
    sigma: object
    eta: object = None
    base_jump: Optional[DiscreteLevyMeasure] = None
    lipschitz: Optional[LipschitzParams] = None
    name: str = "model"
    interacting: bool = True
    spec: dict = field(default_factory=dict)

    @classmethod
    def average_form(cls, dim, b=None, sigma=None, eta=None, base_jump=None,
                     lipschitz=None, name="model", spec=None):
        """Model whose coefficients are mu-averages of kernels."""
        b = b if b is not None else zero_kernel(dim)
        sigma = sigma if sigma is not None else zero_kernel(dim, matrix=True)
        for k, matrix in ((b, False), (sigma, True), (eta, True)):
            if k is not None and (not isinstance(k, Kernel) or k.matrix != matrix):
                raise ModelKindError("average-form coefficients must be Kernels of the "
                                     "right value type")
        _check_jump(dim, eta, base_jump)
        inter = any(k is not None and k.depends_on_z for k in (b, sigma, eta))
        return cls(dim, "average_form", b, sigma, eta, base_jump, lipschitz, name, inter,
                   dict(spec or {}))

    @classmethod
    def general(cls, dim, b=None, sigma=None, eta=None, base_jump=None, lipschitz=None,
                name="model", interacting=True, spec=None):
        """Model with callable coefficients ``f(x, points)``.

        ``x`` is an (n, d) array, ``points`` the (M, d) atoms of the measure;
        ``b`` returns (n, d), ``sigma`` and ``eta`` return (n, d, d).
        """
        d = dim
        b = b if b is not None else (lambda x, p: np.zeros(x.shape))
        sigma = sigma if sigma is not None else (lambda x, p: np.zeros(x.shape + (d,)))
        _check_jump(dim, eta, base_jump)
        return cls(dim, "general", b, sigma, eta, base_jump, lipschitz, name,
                   bool(interacting), dict(spec or {}))

    @property
    def has_jumps(self):
        return self.eta is not None and self.base_jump is not None and self.base_jump.size > 0

    def with_lipschitz(self, lipschitz):
        return replace(self, lipschitz=lipschitz)

    def as_general(self):
        """Equivalent general-kind model delegating to the kernel averages."""
        if self.kind == "general":
            return self
        eta = self.eta.average if self.eta is not None else None
        return MeanFieldModel(self.dim, "general", self.b.average, self.sigma.average, eta,
                              self.base_jump, self.lipschitz, self.name, self.interacting,
                              dict(self.spec))

    def coefficients(self, x, points):
        """Coefficients at every row of ``x`` for one measure per batch entry.

        Parameters
        ----------
        x : ndarray, shape (..., n, d)
        points : PointCloud or ndarray, shape (..., M, d)

        Returns
        -------
        CoefficientTuple
            Arrays of shape (..., n, d), (..., n, d, d), (..., n, d, d).
        """
        if isinstance(points, PointCloud):
            points = points.points
        x = np.asarray(x, dtype=np.float64)
        points = np.asarray(points, dtype=np.float64)
        if x.shape[-1] != self.dim or points.shape[-1] != self.dim:
            raise DimError(f"model dimension is {self.dim}")
        if points.shape[-2] == 0:
            raise EmptyMeasureError("measure has no atoms")
        if self.kind == "average_form":
            eta = self.eta.average(x, points) if self.eta is not None else None
            return CoefficientTuple(self.b.average(x, points),
                                    self.sigma.average(x, points), eta)
        return self._general_batched(x, points)

    def _general_call(self, x, points):
        b = np.asarray(self.b(x, points), dtype=np.float64).reshape(x.shape)
        s = np.asarray(self.sigma(x, points), dtype=np.float64).reshape(x.shape + (self.dim,))
        e = None
        if self.eta is not None:
            e = np.asarray(self.eta(x, points), dtype=np.float64).reshape(x.shape + (self.dim,))
        return b, s, e

    def _general_batched(self, x, points):
        if x.ndim == 2 and points.ndim == 2:
            return CoefficientTuple(*self._general_call(x, points))
        batch = np.broadcast_shapes(x.shape[:-2], points.shape[:-2])
        xb = np.broadcast_to(x, batch + x.shape[-2:])
        pb = np.broadcast_to(points, batch + points.shape[-2:])
        out = [self._general_call(xb[i], pb[i]) for i in np.ndindex(*batch)]
        b = np.stack([o[0] for o in out]).reshape(batch + x.shape[-2:])
        s = np.stack([o[1] for o in out]).reshape(batch + x.shape[-2:] + (self.dim,))
        e = None
        if self.eta is not None:
            e = np.stack([o[2] for o in out]).reshape(batch + x.shape[-2:] + (self.dim,))
        return CoefficientTuple(b, s, e)

    def truncated_coefficients(self, X):
        """Coefficients of each particle against the empirical measure of the others.

        Parameters
        ----------
        X : ndarray, shape (..., N, d), N >= 2
        """
        X = np.asarray(X, dtype=np.float64)
        N = X.shape[-2]
        if N < 2:
            raise EmptyMeasureError("truncated empirical measure needs N >= 2")
        if self.kind == "average_form":
            eta = self.eta.truncated_average(X) if self.eta is not None else None
            return CoefficientTuple(self.b.truncated_average(X),
                                    self.sigma.truncated_average(X), eta)
        batch = X.shape[:-2]
        d = self.dim
        b = np.empty(X.shape)
        s = np.empty(X.shape + (d,))
        e = np.empty(X.shape + (d,)) if self.eta is not None else None
        idx = np.arange(N)
        for bi in np.ndindex(*batch):
            Xb = X[bi]
            for k in range(N):
                bk, sk, ek = self._general_call(Xb[k:k + 1], Xb[idx != k])
                b[bi + (k,)] = bk[0]
                s[bi + (k,)] = sk[0]
                if e is not None:
                    e[bi + (k,)] = ek[0]
        return CoefficientTuple(b, s, e)


def _check_jump(dim, eta, base_jump):
    if base_jump is not None and base_jump.dim != dim:
        raise DimError("base jump measure has the wrong dimension")
    if eta is not None and base_jump is None:
        raise ParamError("a jump coefficient needs a base jump measure")


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def _points(mu, d):
    if isinstance(mu, PointCloud):
        p = mu.points
    else:
        p = np.asarray(mu, dtype=np.float64)
        if p.ndim == 1:
            p = p.reshape(-1, d)
    if p.shape[0] == 0:
        raise EmptyMeasureError("measure has no atoms")
    if p.shape[1] != d:
        raise DimError(f"measure dimension {p.shape[1]} differs from model dimension {d}")
    return p


def evaluate_coefficients(model, x, mu):
    """Coefficient tuple (b, sigma, eta) of ``model`` at point ``x`` and measure ``mu``.

    For models without jumps ``eta`` is returned as the zero matrix.
    """
    d = model.dim
    x = np.asarray(x, dtype=np.float64).reshape(1, d)
    t = model.coefficients(x, _points(mu, d))
    eta = t.eta[0] if t.eta is not None else np.zeros((d, d))
    return CoefficientTuple(t.b[0], t.sigma[0], eta)


def generator_apply(model, phi, x, mu):
    """Action of the frozen generator A(mu) on a test function at ``x``.

    b . grad phi + tr(a D^2 phi) / 2
        + sum_k lambda_k [phi(x + eta z_k) - phi(x) - (eta z_k) . grad phi(x)]
    """
    d = model.dim
    x = np.asarray(x, dtype=np.float64).reshape(d)
    t = evaluate_coefficients(model, x, mu)
    g = np.asarray(phi.grad(x), dtype=np.float64).reshape(d)
    h = np.asarray(phi.hess(x), dtype=np.float64).reshape(d, d)
    a = t.sigma @ t.sigma.T
    out = float(t.b @ g + 0.5 * np.sum(a * h))
    if model.has_jumps:
        fx = float(phi.value(x))
        for z, lam in zip(model.base_jump.atoms, model.base_jump.intensities):
            j = t.eta @ z
            out += lam * (float(phi.value(x + j)) - fx - float(j @ g))
    return out


def sigma_functional(model, x, mu, nu):
    """Discrepancy Sigma(x, mu, nu) of averaged coefficients for average-form models.

    Sigma^2 = |b(x,mu) - b(x,nu)|^2 + ||sigma(x,mu) - sigma(x,nu)||_F^2
              + ||eta(x,mu) - eta(x,nu)||_F^2
    """
    if model.kind != "average_form":
        raise ModelKindError("the Sigma functional is defined for average-form models")
    d = model.dim
    x = np.asarray(x, dtype=np.float64).reshape(-1, d)
    out = np.sqrt(sigma_squared(model, x, _points(mu, d), _points(nu, d)))
    return float(out[0]) if out.shape == (1,) else out


def sigma_squared(model, x, points_mu, points_nu):
    """Vectorized Sigma^2 at rows of ``x``; point arrays may carry batch axes."""
    ta = model.coefficients(x, points_mu)
    tb = model.coefficients(x, points_nu)
    diff = ta - tb
    sq = np.sum(diff.b ** 2, axis=-1) + np.sum(diff.sigma ** 2, axis=(-2, -1))
    if diff.eta is not None:
        sq = sq + np.sum(diff.eta ** 2, axis=(-2, -1))
    return sq


class LipschitzProbe(NamedTuple):
    alpha_hat: float
    beta_hat: float
    violated: bool


def lipschitz_probe(model, sample_count=200, rng_seed=0, cloud_size=8, scale=1.0,
                    slack=0.05):
    """Empirical lower estimates of the Lipschitz constants (alpha, beta).

    The condition probed is

        ||tau(x, mu) - tau(y, nu)||_V^2 <= alpha C(mu, nu) + (beta / 2) |x - y|^2

    with C the exact transport cost.  ``alpha_hat`` is the largest ratio seen
    with ``x == y`` and ``beta_hat`` the largest with ``mu == nu``; any valid
    pair must dominate both.  ``violated`` is set when declared constants are
    exceeded by more than ``slack`` on any sample.
    """
    rng = np.random.default_rng(rng_seed)
    d = model.dim
    declared = model.lipschitz
    alpha_hat = beta_hat = 0.0
    violated = False
    for _ in range(int(sample_count)):
        x = scale * rng.normal(size=d)
        y = x + scale * rng.normal(size=d) * rng.uniform(0.05, 2.0)
        mu = scale * (rng.normal(size=(cloud_size, d)) * rng.uniform(0.2, 2.0)
                      + rng.normal(size=d))
        nu = scale * (rng.normal(size=(cloud_size, d)) * rng.uniform(0.2, 2.0)
                      + rng.normal(size=d))
        t_xm = evaluate_coefficients(model, x, mu)
        t_xn = evaluate_coefficients(model, x, nu)
        t_ym = evaluate_coefficients(model, y, mu)
        t_yn = evaluate_coefficients(model, y, nu)
        c = w2_cost(PointCloud(mu), PointCloud(nu))[0]
        dx2 = float(np.sum((x - y) ** 2))
        if c > 1e-14:
            alpha_hat = max(alpha_hat, vnorm(t_xm - t_xn) ** 2 / c)
        if dx2 > 1e-14:
            beta_hat = max(beta_hat, 2.0 * vnorm(t_xm - t_ym) ** 2 / dx2)
        if declared is not None and declared.alpha is not None and declared.beta is not None:
            rhs = declared.alpha * c + 0.5 * declared.beta * dx2
            if vnorm(t_xm - t_yn) ** 2 > (1 + slack) * rhs + 1e-12:
                violated = True
    if declared is not None:
        if declared.alpha is not None and alpha_hat > (1 + slack) * declared.alpha + 1e-12:
            violated = True
        if declared.beta is not None and beta_hat > (1 + slack) * declared.beta + 1e-12:
            violated = True
    return LipschitzProbe(float(alpha_hat), float(beta_hat), violated)


# ---------------------------------------------------------------------------
# model files
# ---------------------------------------------------------------------------

MODEL_KEYS = {"kind", "dim", "name", "drift", "diffusion", "jump", "base_jump",
              "lipschitz", "initial"}


def model_from_dict(spec):
    """Build a model from a parsed model file.

    Keys: ``kind`` ("average_form" or "general"), ``dim``, ``name``,
    ``drift``/``diffusion``/``jump`` (kernel specs ``{"kernel": name, ...}``
    or lists of them), ``base_jump`` (``{"atoms": [{"z": [...], "lambda": r}]}``),
    ``lipschitz`` (alpha, beta, M, M_prime, B) and ``initial`` (see
    :func:`mfchaos.io.initial_cloud`).  A "general" model evaluates the same
    kernels through the general code path.
    """
    from .io import levy_from_json

    unknown = set(spec) - MODEL_KEYS
    if unknown:
        raise ParamError(f"unknown model keys: {sorted(unknown)}")
    kind = spec.get("kind", "average_form")
    if kind not in ("average_form", "general"):
        raise ModelKindError(f"unknown model kind {kind!r}")
    d = int(spec.get("dim", 1))
    if d < 1:
        raise ParamError("dim must be positive")
    b = kernel_from_spec(spec.get("drift"), d, False)
    s = kernel_from_spec(spec.get("diffusion"), d, True)
    base = levy_from_json(spec["base_jump"], d) if spec.get("base_jump") else None
    eta = None
    if base is not None:
        eta = kernel_from_spec(spec.get("jump", {"kernel": "constant_eta", "c": 1.0}), d, True)
    lip = LipschitzParams(**spec["lipschitz"]) if spec.get("lipschitz") else None
    model = MeanFieldModel.average_form(d, b, s, eta, base, lip, spec.get("name", "model"),
                                        spec=spec)
    return model.as_general() if kind == "general" else model
