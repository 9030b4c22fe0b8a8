"""Iterate a model to its limit and classify the outcome.

A run repeatedly applies one of the step rules until the sup-norm
movement between consecutive opinion vectors drops to `conv_tol` or the
iteration budget is exhausted. Stationary vectors are classified as
consensus (spread within `class_tol`), polarization (every |y_i| within
`class_tol` of 1 with both signs present), or persistent disagreement
(stationary but neither); hitting the budget yields not_converged.
Everything here is deterministic; independent runs can execute
concurrently with no shared state.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import models
from .graph import DisconnectedGraphError, Graph
from .models import FixedEnvironment

CONSENSUS = "consensus"
POLARIZED = "polarized"
PERSISTENT_DISAGREEMENT = "persistent_disagreement"
NOT_CONVERGED = "not_converged"

OUTCOME_KINDS = (CONSENSUS, POLARIZED, PERSISTENT_DISAGREEMENT, NOT_CONVERGED)

MODELS = ("degroot", "bof", "beba", "fixed_env")


@dataclass(frozen=True)
class RunConfig:
    """Numerical run controls.

    max_iters: iteration budget.
    conv_tol: per-step sup-norm movement below which the run stops.
    class_tol: tolerance used to classify the stationary vector.
    record_every: trajectory thinning stride (t=0 and the final step are
        always recorded).
    """

    max_iters: int = 10_000
    conv_tol: float = 1e-9
    class_tol: float = 1e-6
    record_every: int = 1

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.conv_tol > 0:
            raise ValueError("conv_tol must be > 0")
        if self.class_tol < self.conv_tol:
            raise ValueError("class_tol must be >= conv_tol")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass(frozen=True)
class Outcome:
    """Classified end state of a run.

    `opinions` is the final vector; `consensus_value` is its mean when
    kind == consensus, `pattern` the sign vector when kind == polarized,
    and `mean_opinion` is always the final mean (the mean polarized
    opinion for polarized runs).
    """

    kind: str
    opinions: np.ndarray
    iters: int
    variance: float
    mean_opinion: float
    consensus_value: float | None = None
    pattern: np.ndarray | None = None


@dataclass
class Trajectory:
    """Recorded time series of a run.

    snapshots[k] is the opinion vector at times[k]; times[0] == 0.
    guard_events lists (t, node) pairs where the sign guard fired.
    """

    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    variances: list = field(default_factory=list)
    guard_events: list = field(default_factory=list)

    def record(self, t, values):
        self.times.append(int(t))
        self.snapshots.append(np.array(values, dtype=float))
        self.variances.append(opinion_variance(values))

    def to_dict(self):
        return {
            "snapshots": [
                {"t": t, "opinions": snap.tolist()}
                for t, snap in zip(self.times, self.snapshots)
            ],
            "variances": list(self.variances),
            "guard_events": [{"t": t, "node": node} for t, node in self.guard_events],
        }

    def write_csv(self, path):
        """One (t, node, opinion) row per node per recorded snapshot."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,node,opinion\n")
            for t, snap in zip(self.times, self.snapshots):
                for node, value in enumerate(snap):
                    fh.write(f"{t},{node},{float(value)!r}\n")


def opinion_variance(values) -> float:
    """Population variance (divide by n) of an opinion vector."""
    return float(np.var(np.asarray(values, dtype=float)))


def classify(values, moved, class_tol=1e-6) -> Outcome:
    """Classify a final opinion vector; `moved` means movement <= conv_tol.

    The caller fills in `iters` (dataclasses.replace); classification
    itself only inspects the vector.
    """
    y = np.asarray(values, dtype=float)
    variance = opinion_variance(y)
    mean = float(np.mean(y))
    if not moved:
        return Outcome(NOT_CONVERGED, y, 0, variance, mean)
    spread = float(np.max(y) - np.min(y))
    if spread <= class_tol:
        return Outcome(CONSENSUS, y, 0, variance, mean, consensus_value=mean)
    extreme = np.all(np.abs(y) >= 1.0 - class_tol)
    if extreme and np.any(y > 0) and np.any(y < 0):
        return Outcome(POLARIZED, y, 0, variance, mean, pattern=np.sign(y))
    return Outcome(PERSISTENT_DISAGREEMENT, y, 0, variance, mean)


def _make_step(model, target, beta, bias):
    """Resolve (step callable, validated initial-state preparer)."""
    if model == "degroot":
        if beta is not None or bias is not None:
            raise ValueError("degroot takes neither beta nor bias")
        return lambda y: (models.degroot_step(target, y), None)
    if model == "bof":
        if bias is None:
            raise ValueError("bof requires bias")
        if beta is not None:
            raise ValueError("bof takes bias, not beta")
        b = models.as_node_values(bias, target.n, "bias")
        return lambda y: (models.bof_step(target, y, b), None)
    if model == "beba":
        if beta is None:
            raise ValueError("beba requires beta")
        if bias is not None:
            raise ValueError("beba takes beta, not bias")
        b = models.as_node_values(beta, target.n, "beta")
        return lambda y: models.beba_update(target, y, b)
    raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")


def run(model, target, y0, *, beta=None, bias=None, config=None):
    """Iterate `model` from `y0` until stationary; return (Outcome, Trajectory).

    `target` is a connected Graph for degroot/bof/beba, or a
    FixedEnvironment for fixed_env (y0 then is a scalar). Opinions must
    lie in [0, 1] for degroot/bof and in [-1, 1] for beba/fixed_env.
    """
    cfg = config if config is not None else RunConfig()

    if model == "fixed_env":
        if not isinstance(target, FixedEnvironment):
            raise ValueError("fixed_env requires a FixedEnvironment target")
        if beta is not None or bias is not None:
            raise ValueError("fixed_env parameters live on the environment")
        y = np.asarray(y0, dtype=float).reshape(-1)
        if y.shape != (1,):
            raise ValueError("fixed_env takes a single opinion")
        if not np.isfinite(y[0]) or abs(y[0]) > 1.0:
            raise ValueError("opinion must lie in [-1, 1]")
        step = lambda v: _fixed_env_vector_step(v, target)
    else:
        if not isinstance(target, Graph):
            raise ValueError(f"{model} requires a Graph target")
        if not target.connected:
            raise DisconnectedGraphError("run requires a connected graph")
        lo, hi = (0.0, 1.0) if model in ("degroot", "bof") else (-1.0, 1.0)
        y = models._check_opinions(y0, target, lo, hi, "initial opinions").copy()
        step = _make_step(model, target, beta, bias)

    trajectory = Trajectory()
    trajectory.record(0, y)
    moved = False
    t = 0
    for t in range(1, cfg.max_iters + 1):
        y_next, guard = step(y)
        if guard is not None and np.any(guard):
            trajectory.guard_events.extend((t, int(i)) for i in np.flatnonzero(guard))
        movement = float(np.max(np.abs(y_next - y)))
        y = y_next
        converged = movement <= cfg.conv_tol
        if t % cfg.record_every == 0 or converged or t == cfg.max_iters:
            trajectory.record(t, y)
        if converged:
            moved = True
            break

    outcome = replace(classify(y, moved, cfg.class_tol), iters=t)
    return outcome, trajectory


def _fixed_env_vector_step(y, env):
    val, guard = models.fixed_env_update(float(y[0]), env)
    return np.array([val]), (np.array([True]) if guard else None)
