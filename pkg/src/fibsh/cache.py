"""On-disk cache for solved quadrature weights.

The analytic solve at b=32 is the most expensive operation in the package,
so solved weights persist to disk keyed by (grid kind, params, bandwidth,
method, solver version).  Entries are JSON with an embedded checksum;
writes go through a temporary file and ``os.replace`` so concurrent CLI
invocations never observe a torn entry, and corrupt entries trigger a
re-solve instead of an error.
"""

import hashlib
import json
import os
import tempfile
from pathlib import Path

from .quadrature import QuadratureWeights, solve_analytic_weights

#: bump when the solver or serialization changes incompatibly
SOLVER_VERSION = 1

CACHE_DIR_ENV = "FIBSH_CACHE_DIR"


def cache_dir():
    env = os.environ.get(CACHE_DIR_ENV)
    if env:
        return Path(env)
    return Path.home() / ".cache" / "fibsh"


def cache_key(grid, b, method="analytic"):
    params = ",".join(f"{k}={grid.params[k]}" for k in sorted(grid.params))
    raw = f"{grid.kind}|{params}|b={b}|{method}|v{SOLVER_VERSION}"
    return hashlib.sha256(raw.encode()).hexdigest()[:24]


def entry_path(grid, b, method="analytic", directory=None):
    directory = cache_dir() if directory is None else Path(directory)
    return directory / f"weights-{cache_key(grid, b, method)}.json"


def _checksum(payload):
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True).encode()).hexdigest()


def store(weights, path):
    payload = weights.to_json()
    doc = {"checksum": _checksum(payload), "payload": payload}
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(doc, fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def load(path):
    """Return cached weights, or None when absent or corrupt."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
        if doc.get("checksum") != _checksum(doc["payload"]):
            return None
        return QuadratureWeights.from_json(doc["payload"])
    except (OSError, ValueError, KeyError, TypeError):
        return None


def cached_analytic_weights(grid, b, directory=None, enabled=True):
    """Solve analytic weights, reusing a cache hit when one exists."""
    if not enabled:
        return solve_analytic_weights(grid, b)
    path = entry_path(grid, b, directory=directory)
    hit = load(path)
    if hit is not None and hit.grid.key == grid.key and hit.bandwidth == b:
        return hit
    weights = solve_analytic_weights(grid, b)
    store(weights, path)
    return weights


def list_entries(directory=None):
    directory = cache_dir() if directory is None else Path(directory)
    if not directory.is_dir():
        return []
    out = []
    for path in sorted(directory.glob("weights-*.json")):
        w = load(path)
        if w is None:
            out.append((path, "corrupt"))
        else:
            out.append((path, f"{w.grid.key} b={w.bandwidth} method={w.method}"))
    return out


def clear(directory=None):
    directory = cache_dir() if directory is None else Path(directory)
    removed = 0
    if directory.is_dir():
        for path in directory.glob("weights-*.json"):
            path.unlink()
            removed += 1
    return removed
