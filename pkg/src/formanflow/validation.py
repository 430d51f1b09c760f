"""Input validation helpers used by the estimators and the command line."""

import numbers
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .exceptions import ConfigError
from .graph import Graph, WeightScheme


def check_graph(g):
    if not isinstance(g, Graph):
        raise TypeError(f"expected a Graph, got {type(g).__name__}")
    return g


def check_weights(g, weights, epsilon_floor=None):
    check_graph(g)
    if not isinstance(weights, WeightScheme):
        raise TypeError(f"expected a WeightScheme, got {type(weights).__name__}")
    return weights.check_against(g, epsilon_floor)


def check_int(value, name, minimum=None):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def check_positive(value, name):
    if isinstance(value, bool) or not isinstance(value, numbers.Real) or not np.isfinite(value):
        raise ConfigError(f"{name} must be a finite real number, got {value!r}")
    if value <= 0:
        raise ConfigError(f"{name} must be > 0, got {value}")
    return float(value)


def check_option(value, name, options):
    if value not in options:
        raise ConfigError(f"{name} must be one of {sorted(options)}, got {value!r}")
    return value


def check_threshold(t):
    if isinstance(t, bool) or not isinstance(t, numbers.Real) or not -1.0 <= t <= 1.0:
        raise ConfigError(f"threshold must lie in [-1, 1], got {t!r}")
    return float(t)


def chunked_map(fn, n_items, n_jobs=1, min_chunk=256):
    """Apply ``fn(start, stop)`` over ``range(n_items)`` in contiguous chunks.

    Returns the list of chunk results in order. Chunks are computed
    independently, so the concatenated output does not depend on
    ``n_jobs``.
    """
    n_jobs = 1 if n_jobs is None else int(n_jobs)
    if n_jobs < 1:
        raise ConfigError(f"n_jobs must be >= 1, got {n_jobs}")
    if n_jobs == 1 or n_items <= min_chunk:
        return [fn(0, n_items)]
    n_chunks = min(n_jobs * 4, max(1, n_items // min_chunk))
    bounds = np.linspace(0, n_items, n_chunks + 1).astype(int)
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        futures = [pool.submit(fn, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
        return [f.result() for f in futures]
