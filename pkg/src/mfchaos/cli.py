"""Command line interface: ``mfchaos {ot,simulate,meanfield,chaos,omega}``.

Parameters come from three layers, later ones winning: built-in defaults,
a JSON or TOML file given with ``--config``, and command line flags.  Every
run writes its outputs and a ``manifest.json`` (configuration echo, tool
version and SHA-256 of each output) to the output directory.  The wall time
goes to a separate ``timing.json`` so that the manifest of a rerun with the
same seed and configuration is byte-identical.

Exit codes: 0 success or passing verdict, 1 error, 2 failing verdict.
"""

import argparse
import csv
import hashlib
import json
import sys
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import MfchaosError, MissingField, RangeError, UnknownKey

SCHEMA_VERSION = "1"
EXIT_OK, EXIT_ERROR, EXIT_FAIL = 0, 1, 2


# ---------------------------------------------------------------------------
# configuration schema
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Field:
    kind: str                      # int, float, str, path, floats, ints, bool
    default: object = None
    required: bool = False
    check: object = None           # callable(value) -> bool
    rule: str = ""
    help: str = ""


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


COMMON = {
    "seed": Field("int", 0, check=lambda v: 0 <= v < 2 ** 64, rule="0 <= seed < 2**64",
                  help="64-bit master seed"),
    "out": Field("path", required=True, help="output directory"),
}

SCHEMAS = {
    "ot": {
        "mu": Field("path", required=True, help="source cloud (CSV)"),
        "nu": Field("path", required=True, help="target cloud (CSV)"),
        "method": Field("str", "auto",
                        check=lambda v: v in ("auto", "assignment", "bruteforce", "sinkhorn"),
                        rule="auto|assignment|bruteforce|sinkhorn", help="solver"),
        "epsilon": Field("float", 0.01, check=_pos, rule="> 0",
                         help="Sinkhorn regularization"),
        "max_iters": Field("int", 10000, check=_pos, rule="> 0", help="Sinkhorn iterations"),
        "tol": Field("float", 1e-9, check=_pos, rule="> 0", help="Sinkhorn marginal tolerance"),
    },
    "simulate": {
        "model": Field("path", required=True, help="model file (JSON/TOML)"),
        "n": Field("int", 100, check=lambda v: v >= 2, rule=">= 2", help="particles"),
        "dt": Field("float", 0.01, check=_pos, rule="> 0", help="time step"),
        "t": Field("float", 1.0, check=_nonneg, rule=">= 0", help="horizon"),
        "checkpoints": Field("floats", None, help="report times (default 0,T)"),
        "initial": Field("path", None, help="initial cloud CSV (overrides the model file)"),
    },
    "meanfield": {
        "model": Field("path", required=True, help="model file (JSON/TOML)"),
        "m": Field("int", 1000, check=_pos, rule="> 0", help="cloud size"),
        "dt": Field("float", 0.001, check=_pos, rule="> 0", help="time step"),
        "mesh": Field("float", None, check=_pos, rule="> 0", help="partition mesh h"),
        "t": Field("float", 1.0, check=_pos, rule="> 0", help="horizon"),
        "picard_tol": Field("float", 1e-8, check=_pos, rule="> 0", help="Picard tolerance"),
        "max_picard_iters": Field("int", 50, check=_pos, rule="> 0", help="Picard cap"),
        "meshes": Field("floats", None, help="optional refinement study meshes"),
    },
    "chaos": {
        "model": Field("path", required=True, help="model file (JSON/TOML)"),
        "n_list": Field("ints", [8, 16, 32, 64, 128, 256], help="particle numbers"),
        "trials": Field("int", 50, check=lambda v: v >= 2, rule=">= 2", help="trials per N"),
        "t": Field("float", 1.0, check=_pos, rule="> 0", help="horizon"),
        "dt": Field("float", 0.001, check=_pos, rule="> 0", help="time step"),
        "m": Field("int", 4000, check=_pos, rule="> 0", help="mean-field cloud size"),
        "aleph_trials": Field("int", 4000, check=lambda v: v >= 2, rule=">= 2",
                              help="trials of the aleph_N estimate"),
        "xi": Field("str", "sigma", check=lambda v: v in ("sigma", "w2", "first_moment"),
                    rule="sigma|w2|first_moment", help="discrepancy functional"),
        "slope_band": Field("floats", [-1.3, -0.7],
                            check=lambda v: len(v) == 2 and v[0] <= v[1],
                            rule="two values lo <= hi", help="accepted slope range"),
        "checkpoints": Field("int", 10, check=_pos, rule="> 0", help="report times"),
        "threads": Field("int", None, check=_pos, rule="> 0", help="worker threads"),
    },
    "omega": {
        "triplets": Field("path", required=True, help="JSON with A, B, x, y"),
        "dt_grid": Field("floats", [0.005, 0.01, 0.02],
                         check=lambda v: len(v) >= 1 and min(v) > 0, rule="positive",
                         help="difference-quotient steps"),
        "t_grid": Field("floats", [0.25, 0.5, 0.75, 1.0],
                        check=lambda v: len(v) >= 1 and min(v) > 0, rule="positive",
                        help="stability check times"),
        "mc_size": Field("int", 2000, check=lambda v: v >= 1000, rule=">= 1000",
                         help="samples per flow"),
        "replicates": Field("int", 32, check=lambda v: v >= 2, rule=">= 2",
                            help="independent replicates"),
        "alpha": Field("float", None, check=_nonneg, rule=">= 0",
                       help="stability alpha (default W_G^2)"),
        "beta": Field("float", None, check=_nonneg, rule=">= 0", help="stability beta (default 1)"),
    },
}


@dataclass
class ExperimentConfig:
    """Validated parameters of one subcommand run."""

    command: str
    params: dict
    schema_version: str = SCHEMA_VERSION

    def to_dict(self):
        return {"command": self.command, "schema_version": self.schema_version,
                "params": dict(sorted(self.params.items()))}

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, data):
        return parse_config(data["command"], file_values=data.get("params", {}))


def _schema(command):
    if command not in SCHEMAS:
        raise UnknownKey(command, "unknown subcommand")
    return {**SCHEMAS[command], **COMMON}


def _coerce(name, f, value):
    if value is None:
        return None
    try:
        if f.kind == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
        if f.kind == "float":
            return float(value)
        if f.kind in ("str", "path"):
            return str(value)
        if f.kind == "bool":
            return bool(value)
        if f.kind in ("floats", "ints"):
            if isinstance(value, str):
                value = [v for v in value.replace(" ", "").split(",") if v]
            conv = int if f.kind == "ints" else float
            return [conv(v) for v in value]
    except (TypeError, ValueError):
        raise RangeError(name, f"cannot read {value!r} as {f.kind}") from None
    raise RangeError(name, f"unsupported type {f.kind}")


def parse_config(command, path=None, flags=None, file_values=None):
    """Merge defaults, a config file and flags into a validated config.

    Parameters
    ----------
    command : str
    path : str, optional
        JSON or TOML file holding parameter values (flat, or nested under
        ``params`` as written by :meth:`ExperimentConfig.to_dict`).
    flags : dict, optional
        Values given on the command line; None entries are ignored.
    file_values : dict, optional
        Parameter values already loaded from a file.

    Raises
    ------
    UnknownKey, MissingField, RangeError
    """
    from .io import load_mapping

    schema = _schema(command)
    values = {k: f.default for k, f in schema.items()}
    layer = dict(file_values or {})
    if path is not None:
        layer.update(_file_layer(load_mapping(path), command))
    for k in layer:
        if k not in schema:
            raise UnknownKey(k, f"not a parameter of '{command}'")
    values.update(layer)
    for k, v in (flags or {}).items():
        if v is None:
            continue
        if k not in schema:
            raise UnknownKey(k, f"not a parameter of '{command}'")
        values[k] = v
    out = {}
    for k, f in schema.items():
        v = _coerce(k, f, values.get(k))
        if v is None and f.required:
            raise MissingField(k, "required")
        if v is not None and f.check is not None and not f.check(v):
            raise RangeError(k, f"must satisfy {f.rule}, got {v!r}")
        out[k] = v
    _cross_checks(command, out)
    return ExperimentConfig(command, out)


def _file_layer(data, command):
    if "params" in data and isinstance(data["params"], dict):
        if data.get("command", command) != command:
            raise RangeError("command", f"file is for '{data.get('command')}'")
        return data["params"]
    return {k: v for k, v in data.items() if k not in ("command", "schema_version")}


def _cross_checks(command, p):
    if "dt" in p and "t" in p and p["t"] > 0 and p["dt"] > p["t"]:
        raise RangeError("dt", f"dt={p['dt']} exceeds t={p['t']}")
    if command == "simulate" and p["checkpoints"] is not None:
        if any(c < 0 or c > p["t"] for c in p["checkpoints"]):
            raise RangeError("checkpoints", "must lie in [0, t]")
    if command == "meanfield" and p["mesh"] is not None:
        if p["mesh"] < p["dt"] or p["mesh"] > p["t"]:
            raise RangeError("mesh", "need dt <= mesh <= t")
    if command == "chaos":
        ns = sorted(p["n_list"])
        if len(ns) < 3 or ns[0] < 2 or ns[-1] < 8 * ns[0]:
            raise RangeError("n_list", "need >= 3 values >= 2 spanning a factor of 8")


# ---------------------------------------------------------------------------
# runs
# ---------------------------------------------------------------------------

@dataclass
class RunManifest:
    """Record of one run; ``wall_time`` is kept out of the hashed manifest file."""

    command: str
    config: dict
    tool_version: str
    schema_version: str
    outputs: dict
    verdict: str
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {"command": self.command, "config": self.config,
                "tool_version": self.tool_version, "schema_version": self.schema_version,
                "outputs": self.outputs, "verdict": self.verdict}


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _load_model(path):
    from .io import load_mapping
    from .levy_model import model_from_dict

    spec = load_mapping(path)
    return model_from_dict(spec), spec


def _run_ot(p, out):
    from .io import dump_json, read_cloud_csv
    from .ot_core import bruteforce_ot, exact_w2_assignment, sinkhorn_w2, w2_cost, w2_metric

    mu, nu = read_cloud_csv(p["mu"]), read_cloud_csv(p["nu"])
    result = {"method": p["method"]}
    if p["method"] == "assignment":
        cost, plan = exact_w2_assignment(mu, nu)
        result["permutation"] = plan.perm.tolist()
    elif p["method"] == "bruteforce":
        cost, plan = bruteforce_ot(mu, nu)
        result["plan"] = plan.plan.tolist()
    elif p["method"] == "sinkhorn":
        cost, iters, conv = sinkhorn_w2(mu, nu, p["epsilon"], p["max_iters"], p["tol"])
        result.update(iterations=iters, converged=conv)
    else:
        cost, route = w2_cost(mu, nu)
        result["route"] = route
    result.update(cost=cost, w2=w2_metric(cost))
    dump_json(out / "ot.json", result)
    return "none"


def _run_simulate(p, out):
    from . import rng
    from .io import initial_cloud, read_cloud_csv, write_cloud_csv
    from .simulator import SimConfig, simulate

    model, spec = _load_model(p["model"])
    if p["initial"] is not None:
        init = read_cloud_csv(p["initial"])
    else:
        init = initial_cloud(spec.get("initial"), p["n"], model.dim, p["seed"], rng.INITIAL)
    cfg = SimConfig(N=p["n"], d=model.dim, T=p["t"], dt=p["dt"], seed=p["seed"],
                    checkpoints=tuple(p["checkpoints"]) if p["checkpoints"] else None)
    states = simulate(cfg, model, init)
    for k, (t, st) in enumerate(states):
        write_cloud_csv(out / f"checkpoint_{k:03d}.csv", st.positions)
    _write_times(out / "checkpoints.csv", [t for t, _ in states])
    return "none"


def _write_times(path, times):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "t"])
        for k, t in enumerate(times):
            w.writerow([k, repr(float(t))])


def _run_meanfield(p, out):
    from .chaos_harness import default_mesh
    from .io import dump_json, initial_cloud, write_cloud_csv
    from .mf_solver import SolverConfig, pca_refinement_study, solve_mean_field

    model, spec = _load_model(p["model"])
    rho0 = initial_cloud(spec.get("initial"), p["m"], model.dim, p["seed"])
    h = p["mesh"] if p["mesh"] is not None else default_mesh(p["t"], p["dt"])
    cfg = SolverConfig(M=p["m"], h=h, dt=p["dt"], picard_tol=p["picard_tol"],
                       max_picard_iters=p["max_picard_iters"], seed=p["seed"])
    sol = solve_mean_field(model, rho0, p["t"], cfg)
    curve = sol.curve
    for k in range(len(curve)):
        write_cloud_csv(out / f"cloud_{k:03d}.csv", curve.cloud(k))
    _write_times(out / "times.csv", curve.times)
    log = {"mesh": h, "windows": sol.windows, "picard_iterations": sol.iterations,
           "picard_residuals": sol.residuals}
    if p["meshes"]:
        study = pca_refinement_study(model, None, rho0, p["meshes"], cfg, T=p["t"])
        log["mesh_table"] = [{"mesh": m, "sup_cost_to_finest": c} for m, c in study.table()]
        log["successive"] = study.successive
    dump_json(out / "convergence.json", log)
    return "none"


def _run_chaos(p, out):
    from .chaos_harness import ChaosConfig, poc_rate_experiment
    from .io import dump_json, initial_cloud

    model, spec = _load_model(p["model"])
    rho0 = initial_cloud(spec.get("initial"), p["m"], model.dim, p["seed"])
    cfg = ChaosConfig(dt=p["dt"], M=p["m"], seed=p["seed"], n_checkpoints=p["checkpoints"],
                      aleph_trials=p["aleph_trials"], xi=p["xi"],
                      slope_band=tuple(p["slope_band"]), threads=p["threads"])
    report = poc_rate_experiment(model, rho0, p["t"], p["n_list"], p["trials"], cfg)
    dump_json(out / "report.json", report.to_dict())
    with open(out / "report.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "t", "distance", "stderr", "aleph", "aleph_stderr", "bound",
                    "verdict"])
        for row in report.csv_rows():
            w.writerow([row[0]] + [repr(float(v)) for v in row[1:7]] + [row[7]])
    return "pass" if report.passed else "fail"


def triplet_from_json(data, d=None):
    """Levy triplet from ``{"b", "sigma" | "a", "eta", "base"}``."""
    from .io import levy_from_json, matrix_from_json
    from .levy_model import LevyTriplet

    b = np.atleast_1d(np.asarray(data.get("b", 0.0), dtype=float))
    d = d or b.size
    b = np.broadcast_to(b, (d,)).copy()
    base = levy_from_json(data["base"], d) if data.get("base") else None
    eta = matrix_from_json(data.get("eta", 1.0), d) if base is not None else None
    if "a" in data:
        return LevyTriplet.from_covariance(b, matrix_from_json(data["a"], d), eta, base)
    return LevyTriplet(b, matrix_from_json(data.get("sigma", 0.0), d), eta, base)


def _run_omega(p, out):
    from .chaos_harness import exp_stability_check, omega_probe
    from .io import dump_json, load_mapping

    spec = load_mapping(p["triplets"])
    for key in ("A", "B", "x", "y"):
        if key not in spec:
            raise MissingField(key, f"missing from {p['triplets']}")
    x = np.atleast_1d(np.asarray(spec["x"], dtype=float))
    y = np.atleast_1d(np.asarray(spec["y"], dtype=float))
    A = triplet_from_json(spec["A"], x.size)
    B = triplet_from_json(spec["B"], x.size)
    probe = omega_probe(A, B, x, y, p["dt_grid"], p["mc_size"], p["seed"], p["replicates"])
    stab = exp_stability_check(A, B, x, y, p["alpha"], p["beta"], p["t_grid"], p["mc_size"],
                               p["seed"], p["replicates"])
    passed = probe.consistent() and probe.within_wg_bound() and stab.passed
    dump_json(out / "omega.json", {
        "closed_form": probe.closed_form, "closed_form_exact": probe.exact,
        "wg_bound": probe.wg_bound,
        "finite_diff": [{"dt": a, "estimate": b, "stderr": c} for a, b, c in probe.finite_diff],
        "extrapolated": probe.extrapolated, "extrapolated_stderr": probe.extrapolated_stderr,
        "stability": {"t": stab.times.tolist(), "lhs": stab.lhs.tolist(),
                      "lhs_stderr": stab.lhs_stderr.tolist(), "rhs": stab.rhs.tolist(),
                      "alpha": stab.alpha, "beta": stab.beta, "passed": stab.passed},
        "passed": passed})
    return "pass" if passed else "fail"


RUNNERS = {"ot": _run_ot, "simulate": _run_simulate, "meanfield": _run_meanfield,
           "chaos": _run_chaos, "omega": _run_omega}


def run(config):
    """Execute a validated configuration.

    Returns
    -------
    exit_code : int
        0 on success or passing verdict, 2 on failing verdict.
    manifest : RunManifest
    """
    from .io import dump_json

    out = Path(config.params["out"])
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    verdict = RUNNERS[config.command](config.params, out)
    wall = time.perf_counter() - start
    skip = {"manifest.json", "timing.json"}
    outputs = {f.name: _sha256(f) for f in sorted(out.iterdir())
               if f.is_file() and f.name not in skip}
    manifest = RunManifest(config.command, config.to_dict(), __version__, SCHEMA_VERSION,
                           outputs, verdict, wall)
    dump_json(out / "manifest.json", manifest.to_dict())
    dump_json(out / "timing.json", {"wall_time_seconds": wall})
    return (EXIT_FAIL if verdict == "fail" else EXIT_OK), manifest


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgError(message)


def build_parser():
    parser = _Parser(prog="mfchaos", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version",
                        version=f"mfchaos {__version__} (schema {SCHEMA_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, schema in SCHEMAS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None, help="JSON or TOML parameter file")
        for key, f in {**schema, **COMMON}.items():
            flag = "--" + key.replace("_", "-")
            hint = f.help + (f" (default {f.default})" if f.default is not None else "")
            sp.add_argument(flag, dest=key, default=None, help=hint)
    return parser


def _tag(exc):
    tb = exc.__traceback__
    name = "cli"
    while tb is not None:
        mod = tb.tb_frame.f_globals.get("__name__", "")
        if mod.startswith("mfchaos."):
            name = mod.split(".", 1)[1]
        tb = tb.tb_next
    return name


def main(argv=None):
    """Entry point; returns the process exit code (0, 1 or 2)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _ArgError as exc:
        print(f"mfchaos: error: [cli] {exc}", file=sys.stderr)
        return EXIT_ERROR
    except SystemExit as exc:  # --help and --version
        return EXIT_OK if not exc.code else EXIT_ERROR
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    try:
        config = parse_config(args.command, args.config, flags)
        code, _ = run(config)
        return code
    except (MfchaosError, OSError, ValueError, KeyError, TypeError) as exc:
        print(f"mfchaos: error: [{_tag(exc)}] {exc}", file=sys.stderr)
        if "MFCHAOS_DEBUG" in __import__("os").environ:
            traceback.print_exc()
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
