"""Readers and writers for clouds, matrices, Levy measures and model files."""

import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import rng
from .errors import DimError, ParamError
from .ot_core import DiscreteLevyMeasure, PointCloud

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def write_cloud_csv(path, cloud):
    """Write one point per row under the header ``x0,...,x{d-1}``."""
    pts = cloud.points if isinstance(cloud, PointCloud) else np.atleast_2d(cloud)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i}" for i in range(pts.shape[1])])
        for row in pts:
            w.writerow([repr(float(v)) for v in row])


def read_cloud_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParamError(f"{path}: empty CSV file")
    header = rows[0]
    if header != [f"x{i}" for i in range(len(header))]:
        raise ParamError(f"{path}: header must be x0..x{{d-1}}")
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=np.float64)
    return PointCloud(data.reshape(-1, len(header)))


def cloud_to_json(cloud):
    return [[float(v) for v in row] for row in cloud.points]


def cloud_from_json(data):
    return PointCloud(np.asarray(data, dtype=np.float64))


def matrix_to_json(a):
    return [[float(v) for v in row] for row in np.atleast_2d(a)]


def matrix_from_json(data, d=None):
    a = np.asarray(data, dtype=np.float64)
    if a.ndim == 0 and d is not None:
        return float(a) * np.eye(d)
    a = np.atleast_2d(a)
    if d is not None and a.shape != (d, d):
        raise DimError(f"expected a {d} x {d} matrix")
    return a


def levy_to_json(measure):
    return {"atoms": [{"z": [float(v) for v in z], "lambda": float(lam)}
                      for z, lam in zip(measure.atoms, measure.intensities)]}


def levy_from_json(data, d=None):
    atoms = data.get("atoms", [])
    if not atoms:
        if d is None:
            raise DimError("empty Levy measure needs a dimension")
        return DiscreteLevyMeasure.empty(d)
    z = np.array([np.atleast_1d(np.asarray(a["z"], dtype=np.float64)) for a in atoms])
    lam = np.array([float(a["lambda"]) for a in atoms])
    return DiscreteLevyMeasure(z, lam, dim=d if d is not None else z.shape[1])


def load_mapping(path):
    """Parse a JSON or TOML file (by extension) into a dict."""
    path = Path(path)
    if path.suffix.lower() == ".toml":
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path) as fh:
        return json.load(fh)


def dump_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def initial_cloud(spec, M, d, seed, job=rng.REFERENCE_JOB):
    """Draw an initial cloud of ``M`` points described by ``spec``.

    Supported ``distribution`` values: ``normal`` (``mean``, ``std``),
    ``uniform`` (``low``, ``high``), ``rademacher``, ``point`` (``at``).
    A ``csv`` key loads a fixed cloud instead.  Points are drawn from the
    counter-based streams, so the cloud depends only on (seed, job).
    """
    spec = dict(spec or {"distribution": "normal"})
    if "csv" in spec:
        cloud = read_cloud_csv(spec["csv"])
        if cloud.dim != d:
            raise DimError("initial CSV cloud has the wrong dimension")
        return cloud
    kind = spec.get("distribution", "normal")
    idx = np.arange(M)
    if kind == "normal":
        mean = np.broadcast_to(np.asarray(spec.get("mean", 0.0), dtype=float), (d,))
        std = np.broadcast_to(np.asarray(spec.get("std", 1.0), dtype=float), (d,))
        pts = mean + std * rng.normals(seed, job, idx, 0, rng.INITIAL, d)
    elif kind == "uniform":
        lo = np.broadcast_to(np.asarray(spec.get("low", 0.0), dtype=float), (d,))
        hi = np.broadcast_to(np.asarray(spec.get("high", 1.0), dtype=float), (d,))
        pts = lo + (hi - lo) * rng.uniforms(seed, job, idx, 0, rng.INITIAL, d)
    elif kind == "rademacher":
        pts = np.where(rng.uniforms(seed, job, idx, 0, rng.INITIAL, d) < 0.5, -1.0, 1.0)
    elif kind == "point":
        at = np.broadcast_to(np.asarray(spec.get("at", 0.0), dtype=float), (d,))
        pts = np.tile(at, (M, 1))
    else:
        raise ParamError(f"unknown initial distribution {kind!r}")
    return PointCloud(pts)
