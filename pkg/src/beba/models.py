"""Single-step opinion update rules.

DeGroot and the biased (BOF) rule act on opinions in [0, 1]; the
entrenchment (BEBA) rule and the single-agent fixed-environment rule
act on opinions in [-1, 1]. All updates are synchronous: the next
vector is computed from a frozen snapshot of the current one, and
neighbor sums accumulate in ascending node order so repeated runs are
bit-identical.

Every step function is pure. The *_update variants additionally report
where the sign guard fired (denominator <= 0, opinion snapped to
sgn(y_i)); the *_step wrappers return the new opinions only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph


class BalancedEnvironmentError(ValueError):
    """Fixed points have no closed form when the environment opinions sum to zero."""


def as_node_values(value, n, name, minimum=0.0):
    """Broadcast a scalar or per-node sequence to a validated float array."""
    arr = np.broadcast_to(np.asarray(value, dtype=float), (n,))
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    if np.any(arr < minimum):
        raise ValueError(f"{name} must be >= {minimum}")
    return arr


def _check_opinions(values, g: Graph, lo, hi, name):
    y = np.asarray(values, dtype=float)
    if y.shape != (g.n,):
        raise ValueError(f"{name} must have length {g.n}, got shape {y.shape}")
    if not np.all(np.isfinite(y)) or np.any(y < lo) or np.any(y > hi):
        raise ValueError(f"{name} must lie in [{lo}, {hi}]")
    return y


def degroot_step(g: Graph, x):
    """Weighted-average update: x_i <- (w_ii x_i + sum_j w_ij x_j) / (w_ii + sum_j w_ij).

    Averaging is scale-agnostic, so the same routine serves both [0, 1]
    opinions and [-1, 1] opinions (the beta=0 entrenchment case).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (g.n,):
        raise ValueError(f"opinions must have length {g.n}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("opinions must be finite")
    src, dst, w = g.incidence()
    num = g.self_weights * x + np.bincount(src, weights=w * x[dst], minlength=g.n)
    den = g.self_weights + g.weighted_degrees
    if np.any(den <= 0):
        raise ValueError("isolated node with zero self-weight has no defined update")
    return num / den


def bof_step(g: Graph, x, bias):
    """Biased-assimilation update on [0, 1] opinions.

    Support for opinion 1 (s_i = sum_j w_ij x_j) is weighted by
    x_i^b_i and support for opinion 0 by (1 - x_i)^b_i, with the
    convention 0^0 = 1 so b_i = 0 reduces to degroot_step.
    """
    x = _check_opinions(x, g, 0.0, 1.0, "opinions")
    b = as_node_values(bias, g.n, "bias")
    src, dst, w = g.incidence()
    s = np.bincount(src, weights=w * x[dst], minlength=g.n)
    d = g.weighted_degrees
    up = np.power(x, b) * s
    down = np.power(1.0 - x, b) * (d - s)
    num = g.self_weights * x + up
    den = g.self_weights + up + down
    # w_ii = 0 with no assimilation mass on either side is 0/0; keep the
    # opinion unchanged, which preserves every all-equal fixed point.
    stuck = den == 0.0
    out = np.where(stuck, x, num / np.where(stuck, 1.0, den))
    return out


def beba_weight(beta_i, y_i, y_j) -> float:
    """Dynamic edge weight beta_i * y_i * y_j + 1 (negative in the backfire regime)."""
    return float(beta_i) * float(y_i) * float(y_j) + 1.0


def beba_update(g: Graph, y, beta):
    """One entrenchment step; returns (next opinions, guard mask).

    Per node i, with dynamic weights w_ij(t) = w_ij * (beta_i y_i y_j + 1)
    and D_i = w_ii + sum_j w_ij(t): if D_i <= 0 the opinion snaps to
    sgn(y_i) (guard mask True, sgn(0) = 0); otherwise it becomes the
    weighted average, clipped to [-1, 1]. On weighted graphs the static
    weight scales the whole dynamic factor - an extension of the
    unweighted rule chosen so beta = 0 recovers weighted DeGroot
    averaging exactly.
    """
    y = _check_opinions(y, g, -1.0, 1.0, "opinions")
    b = as_node_values(beta, g.n, "beta")
    src, dst, w = g.incidence()
    wdyn = w * (b[src] * y[src] * y[dst]) + w
    num = g.self_weights * y + np.bincount(src, weights=wdyn * y[dst], minlength=g.n)
    den = g.self_weights + np.bincount(src, weights=wdyn, minlength=g.n)
    guard = den <= 0.0
    out = np.empty_like(y)
    np.divide(num, den, out=out, where=~guard)
    np.clip(out, -1.0, 1.0, out=out)
    out[guard] = np.sign(y[guard])
    return out, guard


def beba_step(g: Graph, y, beta):
    """One entrenchment step; see beba_update."""
    out, _ = beba_update(g, y, beta)
    return out


@dataclass(frozen=True)
class FixedEnvironment:
    """A single agent's static neighborhood.

    The environment holds m >= 1 neighbors with fixed opinions in
    [-1, 1]; the agent has self-weight `self_weight` and entrenchment
    `beta`. The sums s = sum(p), q = sum(p^2) drive the update and
    always satisfy m*q - s^2 >= 0.
    """

    opinions: tuple
    self_weight: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        ops = tuple(float(p) for p in self.opinions)
        if len(ops) < 1:
            raise ValueError("environment needs at least one neighbor")
        if any(not np.isfinite(p) or abs(p) > 1.0 for p in ops):
            raise ValueError("environment opinions must lie in [-1, 1]")
        if not np.isfinite(self.self_weight) or self.self_weight < 0:
            raise ValueError("self_weight must be finite and >= 0")
        if not np.isfinite(self.beta) or self.beta < 0:
            raise ValueError("beta must be finite and >= 0")
        object.__setattr__(self, "opinions", ops)
        object.__setattr__(self, "self_weight", float(self.self_weight))
        object.__setattr__(self, "beta", float(self.beta))

    @property
    def m(self) -> int:
        return len(self.opinions)

    @property
    def s(self) -> float:
        return float(sum(self.opinions))

    @property
    def q(self) -> float:
        return float(sum(p * p for p in self.opinions))


def fixed_env_update(y, env: FixedEnvironment):
    """One step of the agent against its fixed environment; returns (y', guard)."""
    y = float(y)
    if not np.isfinite(y) or abs(y) > 1.0:
        raise ValueError("opinion must lie in [-1, 1]")
    den = env.self_weight + env.beta * env.s * y + env.m
    if den <= 0.0:
        return float(np.sign(y)), True
    val = (env.self_weight * y + env.beta * env.q * y + env.s) / den
    return float(min(1.0, max(-1.0, val))), False


def fixed_env_step(y, env: FixedEnvironment) -> float:
    """One step of the agent against its fixed environment."""
    val, _ = fixed_env_update(y, env)
    return val


def fixed_env_fixed_points(env: FixedEnvironment):
    """Fixed points (attracting, repelling) of the guard-free environment map.

    With s = sum(p), q = sum(p^2), m neighbors and discriminant
    D = (beta*q - m)^2 + 4*beta*s^2 the points are
    (beta*q - m +/- sqrt(D)) / (2*beta*s). For a single neighbor p != 0
    this reduces to (p, -1/(beta*p)).

    A balanced environment (s == 0) has no closed-form pair: when q == 0
    as well, all neighbors are neutral and the unique attracting point 0
    is returned as (0.0, None); otherwise BalancedEnvironmentError is
    raised and behavior is determined only by iteration.
    """
    s, q, m = env.s, env.q, env.m
    if s == 0.0:
        if q == 0.0:
            return 0.0, None
        raise BalancedEnvironmentError(
            "environment opinions sum to zero; no closed-form fixed points"
        )
    if env.beta == 0.0:
        # plain averaging: unique attracting point s/m, no repelling partner
        return s / m, None
    delta = (env.beta * q - m) ** 2 + 4.0 * env.beta * s * s
    root = float(np.sqrt(delta))
    y_attracting = (env.beta * q - m + root) / (2.0 * env.beta * s)
    y_repelling = (env.beta * q - m - root) / (2.0 * env.beta * s)
    return float(y_attracting), float(y_repelling)
