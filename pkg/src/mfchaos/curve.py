"""Time-indexed sequences of equal-size point clouds."""

from dataclasses import dataclass

import numpy as np

from .errors import CurveCoverageError, DimError, ParamError, SizeError
from .ot_core import PointCloud

TIME_TOL = 1e-9


def _tol(t):
    return TIME_TOL * max(1.0, abs(float(t)))


@dataclass(frozen=True, eq=False)
class MeasureCurve:
    """Clouds ``points[k]`` at strictly increasing ``times[k]``.

    Between partition times the curve is constant, continued from the left
    end of each cell: the value on [t_k, t_{k+1}) is the cloud at t_k.

    Parameters
    ----------
    times : array_like, shape (K + 1,)
    points : array_like, shape (K + 1, M, d)
    """

    times: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64).ravel()
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim == 2:
            p = p[:, :, None]
        if p.ndim != 3 or p.shape[0] != t.shape[0]:
            raise SizeError("need one (M, d) cloud per partition time")
        if t.size == 0:
            raise SizeError("a curve needs at least one time")
        if np.any(np.diff(t) <= 0):
            raise ParamError("partition times must be strictly increasing")
        if not np.all(np.isfinite(p)):
            raise ValueError("curve clouds must be finite")
        t.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "points", p)

    @classmethod
    def from_clouds(cls, times, clouds):
        arrs = [c.points if isinstance(c, PointCloud) else np.asarray(c) for c in clouds]
        shapes = {a.shape for a in arrs}
        if len(shapes) != 1:
            raise DimError("all clouds of a curve must share (M, d)")
        return cls(times, np.stack(arrs))

    @classmethod
    def constant(cls, cloud, times):
        pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud)
        times = np.asarray(times, dtype=np.float64)
        return cls(times, np.broadcast_to(pts, (times.size,) + pts.shape).copy())

    @property
    def start(self):
        return float(self.times[0])

    @property
    def end(self):
        return float(self.times[-1])

    @property
    def M(self):
        return self.points.shape[1]

    @property
    def dim(self):
        return self.points.shape[2]

    def __len__(self):
        return self.times.size

    def covers(self, t0, t1):
        return self.start <= t0 + _tol(t0) and self.end >= t1 - _tol(t1)

    def require(self, t0, t1):
        if not self.covers(t0, t1):
            raise CurveCoverageError(
                f"curve spans [{self.start:g}, {self.end:g}], needed [{t0:g}, {t1:g}]")

    def index_at(self, t):
        """Index of the cloud in force at time ``t``."""
        t = float(t)
        if t < self.start - _tol(t) or t > self.end + _tol(t):
            raise CurveCoverageError(
                f"time {t:g} outside the curve span [{self.start:g}, {self.end:g}]")
        return int(np.searchsorted(self.times, t + _tol(t), side="right") - 1)

    def at(self, t):
        return PointCloud(self.points[self.index_at(t)])

    def cloud(self, k):
        return PointCloud(self.points[k])

    def append(self, other):
        """Concatenate a curve starting where this one ends."""
        if abs(other.start - self.end) > _tol(self.end):
            raise CurveCoverageError("curves do not meet")
        if other.points.shape[1:] != self.points.shape[1:]:
            raise DimError("curves differ in cloud shape")
        return MeasureCurve(np.concatenate([self.times, other.times[1:]]),
                            np.concatenate([self.points, other.points[1:]]))

    def restrict(self, t0, t1):
        """Sub-curve on the partition times within [t0, t1]."""
        keep = (self.times >= t0 - _tol(t0)) & (self.times <= t1 + _tol(t1))
        return MeasureCurve(self.times[keep], self.points[keep])
