"""Discrete Ricci flow on edge weights.

One step of the Ricci flow replaces every edge weight by
``gamma - dt * Ric(e) * gamma`` using the curvature of the pre-step
weights (simultaneous update). The scalar variant drives each canonical
edge ``(u, w)``, ``u < w``, by ``0.5 * (scal(u) - scal(w))`` instead.
Weights that would drop below ``epsilon_floor`` are clamped to it.

Curvature is homogeneous of degree one in the weights, so the update is
quadratic in the weights and strongly negatively curved edges grow
doubly exponentially under large steps. ``normalize="max"`` divides the
weights by their maximum after every step, which keeps them in
``[epsilon_floor, 1]``.
"""

import csv
import io
import json
import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .curvature import CurvatureField, forman_ricci_all
from .graph import DEFAULT_EPSILON_FLOOR, WeightScheme
from .validation import (
    check_graph,
    check_int,
    check_option,
    check_positive,
    check_weights,
)
from .weighting import node_weights

logger = logging.getLogger(__name__)

FLOW_VARIANTS = ("ricci", "scalar")
NORMALIZATIONS = ("none", "max")
# beyond this, products of two weights leave the float range
SAFE_MAX = float(np.sqrt(np.finfo(np.float64).max))


@dataclass(frozen=True)
class FlowConfig:
    steps: int = 10
    dt: float = 0.8
    epsilon_floor: float = DEFAULT_EPSILON_FLOOR
    recompute_node_weights: bool = True
    variant: str = "ricci"
    normalize: str = "none"

    def __post_init__(self):
        check_int(self.steps, "steps", 1)
        check_positive(self.dt, "dt")
        check_positive(self.epsilon_floor, "epsilon_floor")
        check_option(self.variant, "variant", FLOW_VARIANTS)
        check_option(self.normalize, "normalize", NORMALIZATIONS)

    def to_dict(self):
        return {
            "steps": self.steps,
            "dt": self.dt,
            "epsilon_floor": self.epsilon_floor,
            "recompute_node_weights": self.recompute_node_weights,
            "variant": self.variant,
            "normalize": self.normalize,
        }


@dataclass
class FlowTrace:
    """Edge weights after every step, including the initial state (row 0)."""

    edge_weights: np.ndarray
    stats: list
    floor_events: list
    final: WeightScheme
    config: FlowConfig = field(default_factory=FlowConfig)

    def __len__(self):
        return len(self.edge_weights)

    @property
    def finite(self):
        return bool(np.all(np.isfinite(self.edge_weights)))

    @property
    def total_floor_events(self):
        return int(sum(self.floor_events))

    def to_csv(self):
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["step", "edge_id", "weight"])
        for step, row in enumerate(self.edge_weights.tolist()):
            for k, x in enumerate(row):
                out.writerow([step, k, repr(x)])
        return buf.getvalue()

    def summary(self):
        return {
            "config": self.config.to_dict(),
            "steps": self.stats,
            "floor_events": self.floor_events,
            "total_floor_events": self.total_floor_events,
        }

    def to_json(self):
        return json.dumps(self.summary(), indent=2)


def ricci_update(gamma, ric, dt):
    """Unfloored Ricci-flow update of edge weights."""
    return gamma - dt * ric * gamma


def scalar_update(g, gamma, node_scal, dt):
    """Unfloored scalar-curvature-flow update for canonical edges ``u < w``."""
    drive = 0.5 * (node_scal[g.edges[:, 0]] - node_scal[g.edges[:, 1]])
    return gamma - dt * drive * gamma


def _apply_floor(raw, before, floor, normalize="none"):
    """Clamp to ``floor`` (after optional max-normalization); count new clamps.

    A floor event is an edge above the floor before the step whose updated
    value falls below it.
    """
    new = np.maximum(raw, floor)
    hit = raw < floor
    if normalize == "max" and new.size:
        new = new / new.max()
        hit |= new < floor
        new = np.maximum(new, floor)
    events = int(np.count_nonzero(hit & (before > floor)))
    return new, events


def _overflowed(weights):
    w = weights.edge_weight
    return w.size > 0 and not (np.all(np.isfinite(w)) and w.max() <= SAFE_MAX)


def _step(g, weights, dt, epsilon_floor, recompute_node_weights, variant, n_jobs, field_=None,
          normalize="none"):
    if _overflowed(weights):
        inf = np.full_like(weights.edge_weight, np.inf)
        return WeightScheme(inf, np.full_like(weights.node_weight, np.inf), mode=weights.mode,
                            is_virtual=weights.is_virtual), 0
    if field_ is None:
        field_ = forman_ricci_all(g, weights, n_jobs)
    gamma = weights.edge_weight
    with np.errstate(over="ignore", invalid="ignore"):
        if variant == "ricci":
            raw = ricci_update(gamma, field_.edge_ric, dt)
        else:
            raw = scalar_update(g, gamma, field_.node_scal, dt)
    new, events = _apply_floor(raw, gamma, epsilon_floor, normalize)
    omega = node_weights(g, new) if recompute_node_weights else weights.node_weight
    return WeightScheme(new, omega, mode=weights.mode, is_virtual=weights.is_virtual), events


def ricci_flow_step(g, weights, dt, epsilon_floor=DEFAULT_EPSILON_FLOOR,
                    recompute_node_weights=True, n_jobs=1, normalize="none"):
    """One simultaneous Ricci-flow update of all edge weights."""
    check_weights(g, weights)
    check_positive(dt, "dt")
    return _step(g, weights, dt, epsilon_floor, recompute_node_weights, "ricci", n_jobs,
                 normalize=normalize)[0]


def scalar_flow_step(g, weights, dt, epsilon_floor=DEFAULT_EPSILON_FLOOR,
                     recompute_node_weights=True, n_jobs=1, normalize="none"):
    check_weights(g, weights)
    check_positive(dt, "dt")
    return _step(g, weights, dt, epsilon_floor, recompute_node_weights, "scalar", n_jobs,
                 normalize=normalize)[0]


def _stats(step, weights, field_):
    gamma = weights.edge_weight
    if gamma.size == 0:
        return {"step": step}
    with np.errstate(over="ignore", invalid="ignore"):
        mean_ric = float(field_.edge_ric.mean())
    return {
        "step": step,
        "min_weight": float(gamma.min()),
        "max_weight": float(gamma.max()),
        "mean_weight": float(gamma.mean()),
        "mean_curvature": mean_ric,
    }


def ricci_flow(g, weights, config=None, n_jobs=1):
    """Run ``config.steps`` flow steps and record the trace."""
    config = config or FlowConfig()
    check_weights(g, weights)
    rows = [weights.edge_weight.copy()]
    field_ = forman_ricci_all(g, weights, n_jobs)
    stats = [_stats(0, weights, field_)]
    events = []
    current = weights
    for k in range(1, config.steps + 1):
        current, ev = _step(g, current, config.dt, config.epsilon_floor,
                            config.recompute_node_weights, config.variant, n_jobs, field_,
                            config.normalize)
        if _overflowed(current):
            field_ = CurvatureField(np.full(g.edge_count, np.nan), np.full(g.node_count, np.nan),
                                    current.fingerprint)
        else:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                field_ = forman_ricci_all(g, current, n_jobs)
        rows.append(current.edge_weight.copy())
        stats.append(_stats(k, current, field_))
        events.append(ev)
    trace = FlowTrace(np.vstack(rows), stats, events, current, config)
    if not trace.finite:
        logger.warning("flow weights overflowed after %d steps (dt=%g); consider normalize='max'",
                       config.steps, config.dt)
    return trace


class RicciFlow(TransformerMixin, BaseEstimator):
    """Evolve edge weights by the discrete Forman-Ricci flow.

    Parameters
    ----------
    steps : int
        Number of iterations.
    dt : float
        Step size.
    epsilon_floor : float
        Lower clamp for edge weights.
    recompute_node_weights : bool
        Refresh node weights as mean incident edge weight after each step.
    variant : {"ricci", "scalar"}
    normalize : {"none", "max"}
        Divide edge weights by their maximum after each step.
    n_jobs : int

    Attributes
    ----------
    trace_ : FlowTrace
    weights_ : WeightScheme
        Final weights.
    floor_events_ : int
    """

    def __init__(self, steps=10, dt=0.8, epsilon_floor=DEFAULT_EPSILON_FLOOR,
                 recompute_node_weights=True, variant="ricci", normalize="none", n_jobs=1):
        self.steps = steps
        self.dt = dt
        self.epsilon_floor = epsilon_floor
        self.recompute_node_weights = recompute_node_weights
        self.variant = variant
        self.normalize = normalize
        self.n_jobs = n_jobs

    def _config(self):
        check_int(self.n_jobs, "n_jobs", 1)
        return FlowConfig(self.steps, self.dt, self.epsilon_floor,
                          self.recompute_node_weights, self.variant, self.normalize)

    def fit(self, g, weights):
        self.trace_ = ricci_flow(check_graph(g), weights, self._config(), self.n_jobs)
        self.weights_ = self.trace_.final
        self.floor_events_ = self.trace_.total_floor_events
        return self

    def transform(self, g, weights):
        return ricci_flow(check_graph(g), weights, self._config(), self.n_jobs).final

    def fit_transform(self, g, weights):
        return self.fit(g, weights).weights_

    def summary(self):
        check_is_fitted(self, "trace_")
        return self.trace_.summary()
