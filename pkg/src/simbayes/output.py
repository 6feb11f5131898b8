"""Artifact writing: CSV/JSON outputs, atomic writes, metadata sidecars.

Floats are rendered with shortest round-trip repr, so identical arrays
always produce identical bytes; writes go through a temp-file rename so
partially written artifacts never appear under their final name.
"""

import hashlib
import json
import os
import tempfile

import numpy as np

from . import __version__
from .errors import InvalidArgumentError
from .models import TimeSeriesMatrix
from .rng import RNG_DESCRIPTION


def fmt(value):
    """Round-trip text for one CSV cell (strings pass through)."""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def atomic_write_text(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(fmt(cell) for cell in row) for row in rows)
    atomic_write_text(path, "\n".join(lines) + "\n")


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def config_hash(config):
    digest = hashlib.sha256(
        json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    )
    return digest.hexdigest()


def write_json(path, payload):
    atomic_write_text(path, canonical_json(payload))


def write_metadata(artifact_path, config, seeds, extra=None):
    """Sidecar '<artifact>.meta.json' recording everything needed to
    reproduce the artifact bit-exactly (no wall-clock fields)."""
    from .backends import backend_name

    payload = {
        "artifact": os.path.basename(artifact_path),
        "config_sha256": config_hash(config),
        "config": config,
        "seeds": seeds,
        "rng": RNG_DESCRIPTION,
        "backend": backend_name(),
        "version": __version__,
    }
    if extra:
        payload.update(extra)
    write_json(artifact_path + ".meta.json", payload)


def write_series_csv(path, series):
    header = ["t"] + [f"x_{j + 1}" for j in range(series.dim)]
    rows = ([t + 1] + list(series.data[t]) for t in range(series.length))
    write_csv(path, header, rows)


def read_series_csv(path, seed=-1):
    with open(path) as handle:
        header = handle.readline().strip().split(",")
        if not header or header[0] != "t":
            raise InvalidArgumentError(f"{path}: expected header starting with 't'")
        data = np.loadtxt(handle, delimiter=",", ndmin=2)
    if data.shape[1] != len(header):
        raise InvalidArgumentError(f"{path}: column count does not match header")
    return TimeSeriesMatrix(data[:, 1:], seed)


def write_dataset_csv(path, ds):
    """One row per training example: x_1..x_{L*n},y_1..y_n."""
    d_in = ds.inputs.shape[1]
    d_out = ds.targets.shape[1]
    header = [f"x_{j + 1}" for j in range(d_in)] + \
        [f"y_{j + 1}" for j in range(d_out)]
    rows = ([*ds.inputs[m], *ds.targets[m]] for m in range(ds.size))
    write_csv(path, header, rows)


def write_density_curve_csv(path, curve):
    """Diagnostic density curve rows of (x, density)."""
    write_csv(path, ["x", "density"], curve)


def write_eval_log_csv(path, dim, rows):
    header = [f"theta_{i + 1}" for i in range(dim)] + [
        "log_likelihood", "wall_ms", "status"]
    out = []
    for values, loglik, wall_ms, status in rows:
        out.append([*values, loglik, wall_ms, status])
    lines = [",".join(header)]
    for row in out:
        cells = [fmt(c) if not isinstance(c, str) else c for c in row]
        lines.append(",".join(cells))
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_chain_trace_csv(path, sample):
    d = len(sample.names)
    header = ["restart", "s", "accepted", "n"] + list(sample.names) + ["log_post"]
    rows = []
    for r, trace in enumerate(sample.traces):
        for row in trace:
            rows.append([r, int(row[0]), int(row[1]), int(row[2]),
                         *row[3:3 + d], row[3 + d]])
    write_csv(path, header, rows)


def write_posterior_sample_csv(path, sample):
    header = ["restart"] + list(sample.names)
    rows = []
    for r, draws in enumerate(sample.restart_draws):
        for row in draws:
            rows.append([r, *row])
    write_csv(path, header, rows)


def write_lag_curves_csv(path, result):
    header = ["L", "y", "density"]
    rows = []
    for lag in sorted(result.curves):
        dens = result.curves[lag]
        for y, f in zip(result.grid, dens):
            rows.append([lag, y, f])
    write_csv(path, header, rows)


def write_lag_tv_csv(path, result):
    header = ["L_a", "L_b", "tv"]
    rows = [[a, b, v] for (a, b), v in sorted(result.tv.items())]
    write_csv(path, header, rows)


def summary_payload(summary, acceptance_rate=None):
    """JSON-ready posterior summary with the documented key names."""
    payload = {
        "names": list(summary.names),
        "mu_posterior": [float(v) for v in summary.mu_posterior],
        "sigma_posterior": [float(v) for v in summary.sigma_posterior],
        "sigma_sampling": (
            None if summary.sigma_sampling is None
            else [float(v) for v in summary.sigma_sampling]
        ),
        "LS": None if summary.ls is None else float(summary.ls),
        "theta_true": (
            None if summary.theta_true is None
            else [float(v) for v in summary.theta_true]
        ),
        "bounds": [[float(a), float(b)] for a, b in summary.bounds],
    }
    if acceptance_rate is not None:
        payload["acceptance_rate"] = float(acceptance_rate)
    return payload
