"""Experiment instruments: limit oracles, threshold search, sweeps,
Monte Carlo campaigns, star-graph model comparison, and edge
interventions.

All randomness flows from explicit seeds. Campaign vectors come from
counter-keyed substreams of one master seed, so results are independent
of execution order and worker count; batched drivers sort their output
before emitting it.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import dynamics, models
from ._parallel import parallel_map
from .dynamics import CONSENSUS, POLARIZED, RunConfig
from .graph import Graph, remove_edge as _remove_edge, add_edge as _add_edge


class BaselineMismatchError(ValueError):
    """The unedited run does not reach the outcome the objective reads."""


def predict_single_agent_limit(p, beta, y0, self_weight=1.0) -> float:
    """Closed-form limit of the fixed-environment agent with one neighbor.

    For p <= 0: the limit is p whenever p == 0 or beta < -1/p; for
    beta >= -1/p it is p below the unstable point -1/(beta*p), sgn(y0)
    above it, and y0 exactly at it. p > 0 is handled by flipping the
    sign of both p and y0. The limit does not depend on the self-weight
    (it only sets the convergence rate), which is validated but unused.
    """
    p, beta, y0 = float(p), float(beta), float(y0)
    w = float(self_weight)
    if abs(p) > 1.0 or abs(y0) > 1.0:
        raise ValueError("opinions must lie in [-1, 1]")
    if not beta > 0:
        raise ValueError("beta must be > 0")
    if w < 0:
        raise ValueError("self_weight must be >= 0")
    if p > 0:
        return -predict_single_agent_limit(-p, beta, -y0, w)
    if p == 0.0:
        return 0.0
    if beta < -1.0 / p:
        return p
    unstable = -1.0 / (beta * p)
    if y0 < unstable:
        return p
    if y0 > unstable:
        return float(np.sign(y0))
    return y0


@dataclass(frozen=True)
class ThresholdPair:
    """Sufficient entrenchment bounds computed from the initial opinions.

    Consensus is guaranteed below `consensus_bound` = 1/max(|y0|)^2 and
    polarization above `polarization_bound` = 1/min(|y0|)^2; the two
    coincide when all |y0_i| are equal.
    """

    consensus_bound: float
    polarization_bound: float


def entrenchment_bounds(y0) -> ThresholdPair:
    """Sufficient consensus/polarization bounds; every y0_i must be in (-1,0)u(0,1)."""
    magnitudes = np.abs(np.asarray(y0, dtype=float))
    if magnitudes.size == 0:
        raise ValueError("empty opinion vector")
    if np.any(magnitudes == 0.0) or np.any(magnitudes >= 1.0):
        raise ValueError("initial opinions must lie in (-1, 0) or (0, 1)")
    return ThresholdPair(
        consensus_bound=float(1.0 / np.max(magnitudes) ** 2),
        polarization_bound=float(1.0 / np.min(magnitudes) ** 2),
    )


def _final_outcome(g, y0, beta, cfg) -> dynamics.Outcome:
    """Run the entrenchment model without accumulating a trajectory."""
    thin = replace(cfg, record_every=cfg.max_iters)
    outcome, _ = dynamics.run("beba", g, y0, beta=beta, config=thin)
    return outcome


@dataclass(frozen=True)
class BetaPResult:
    """Outcome of a polarization-threshold search over a beta grid.

    `beta_p` is the largest tested beta that does NOT polarize, with the
    next grid point verified to polarize by direct simulation; it
    estimates the infimum of the polarizing betas at the grid
    resolution. None means even the top of the range stays unpolarized.
    `scanned` flags the linear-scan fallback taken when the range
    endpoints do not bracket a transition. `per_beta` maps every
    simulated beta to its outcome kind.
    """

    beta_p: float | None
    resolution: float
    beta_range: tuple
    scanned: bool
    per_beta: dict

    @property
    def no_polarization(self) -> bool:
        return self.beta_p is None


def estimate_beta_p(g, y0, beta_range=(0.0, 20.0), resolution=0.1, config=None) -> BetaPResult:
    """Locate the consensus-to-polarization threshold on a beta grid.

    Bisects the grid {lo, lo+res, ...} assuming the empirically monotone
    transition, simulating each probe; the returned bracket has both
    endpoints verified. Falls back to an ascending linear scan (scanned
    = True) when the bottom of the range already polarizes.
    """
    lo, hi = (float(beta_range[0]), float(beta_range[1]))
    resolution = float(resolution)
    if lo < 0:
        raise ValueError("beta range must start at >= 0")
    if not hi > lo:
        raise ValueError("beta range must be increasing")
    if not resolution > 0:
        raise ValueError("resolution must be > 0")
    cfg = config if config is not None else RunConfig()
    steps = int(np.floor((hi - lo) / resolution + 1e-9))
    if steps < 1:
        raise ValueError("beta range shorter than one resolution step")
    betas = [lo + k * resolution for k in range(steps + 1)]

    kinds: dict[int, str] = {}

    def kind_at(idx):
        if idx not in kinds:
            kinds[idx] = _final_outcome(g, y0, betas[idx], cfg).kind
        return kinds[idx]

    scanned = False
    if kind_at(len(betas) - 1) != POLARIZED:
        beta_p = None
    elif kind_at(0) == POLARIZED:
        # no bracket inside the range; scan to certify there is no
        # transition to report above lo
        scanned = True
        first = next(i for i in range(len(betas)) if kind_at(i) == POLARIZED)
        beta_p = betas[max(first - 1, 0)]
    else:
        low, high = 0, len(betas) - 1
        while high - low > 1:
            mid = (low + high) // 2
            if kind_at(mid) == POLARIZED:
                high = mid
            else:
                low = mid
        beta_p = betas[low]

    per_beta = {betas[i]: kinds[i] for i in sorted(kinds)}
    return BetaPResult(beta_p, resolution, (lo, hi), scanned, per_beta)


@dataclass(frozen=True)
class SweepPoint:
    """Classified run at one beta of a sweep."""

    beta: float
    kind: str
    variance: float
    mean_opinion: float
    consensus_value: float | None
    iters: int


def _sweep_task(args):
    g, y0, beta, cfg = args
    out = _final_outcome(g, y0, beta, cfg)
    return SweepPoint(beta, out.kind, out.variance, out.mean_opinion, out.consensus_value, out.iters)


def beta_sweep(g, y0, betas, config=None, threads=None):
    """Independent entrenchment runs from the same y0, one per beta."""
    cfg = config if config is not None else RunConfig()
    y0 = np.asarray(y0, dtype=float)
    tasks = [(g, y0, float(b), cfg) for b in betas]
    if not tasks:
        raise ValueError("betas must be non-empty")
    return parallel_map(_sweep_task, tasks, threads)


def sample_opinions(n, seed, exclude_zero_band=None):
    """I.i.d. uniform opinions on [-1, 1]; optionally resample |y| < eta.

    The zero-exclusion band keeps the sufficient-threshold bounds finite
    (eta = 0.01 is the conventional choice).
    """
    n = int(n)
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng(seed)
    y = rng.uniform(-1.0, 1.0, n)
    if exclude_zero_band is not None:
        eta = float(exclude_zero_band)
        if not 0.0 < eta < 1.0:
            raise ValueError("exclude_zero_band must be in (0, 1)")
        while True:
            mask = np.abs(y) < eta
            if not mask.any():
                break
            y[mask] = rng.uniform(-1.0, 1.0, int(mask.sum()))
    return y


def sample_opinion_batch(n, count, seed, exclude_zero_band=None):
    """`count` opinion vectors from counter-keyed substreams of one seed.

    Vector k depends only on (seed, k), never on evaluation order, so
    parallel consumers reproduce serial results exactly.
    """
    count = int(count)
    if count < 1:
        raise ValueError("need count >= 1")
    return [
        sample_opinions(n, np.random.SeedSequence(entropy=seed, spawn_key=(k,)), exclude_zero_band)
        for k in range(count)
    ]


@dataclass(frozen=True)
class StarTable:
    """Next center opinion on the 5-node star under both models.

    Parallel columns over a grid of (center, identical-neighbor) opinion
    pairs in [0, 1]; the entrenchment column is evaluated on the
    y = 2x - 1 scale and mapped back.
    """

    x_center: np.ndarray
    x_neighbors: np.ndarray
    bof: np.ndarray
    beba: np.ndarray


def star_comparison(beta_center, bias_center, x_center=None, grid=101) -> StarTable:
    """Compare biased-assimilation and entrenchment updates on a star.

    One center (self-weight 1) with four leaves holding one shared
    opinion. `x_center=None` tabulates the full grid x grid surface;
    a scalar tabulates that single slice.
    """
    grid = int(grid)
    if grid < 2:
        raise ValueError("grid must be >= 2")
    xs = np.linspace(0.0, 1.0, grid)
    centers = xs if x_center is None else np.array([float(x_center)])
    if np.any(centers < 0) or np.any(centers > 1):
        raise ValueError("x_center must lie in [0, 1]")
    star = Graph(5, [(0, leaf) for leaf in (1, 2, 3, 4)])
    cols_center, cols_nb, cols_bof, cols_beba = [], [], [], []
    for xc in centers:
        for xnb in xs:
            x = np.array([xc, xnb, xnb, xnb, xnb])
            next_bof = models.bof_step(star, x, bias_center)[0]
            next_beba_y = models.beba_step(star, 2.0 * x - 1.0, beta_center)[0]
            cols_center.append(xc)
            cols_nb.append(xnb)
            cols_bof.append(next_bof)
            cols_beba.append((next_beba_y + 1.0) / 2.0)
    return StarTable(
        np.array(cols_center), np.array(cols_nb), np.array(cols_bof), np.array(cols_beba)
    )


OBJECTIVES = ("consensus", "polarized-mean")


def _objective_kind(objective) -> str:
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    return CONSENSUS if objective == "consensus" else POLARIZED


def _objective_value(outcome, objective) -> float:
    return outcome.consensus_value if objective == "consensus" else outcome.mean_opinion


@dataclass(frozen=True)
class InterventionReport:
    """Exhaustive single-edge what-if ranking.

    `candidates` holds ((i, j), delta) sorted by delta descending (ties
    by edge), where delta is the edited objective value minus the
    baseline. Deletions that would disconnect the graph are `excluded`;
    edits whose run no longer reaches the objective's outcome kind are
    listed under `kind_changed` with their kind instead of a delta.
    """

    mode: str
    objective: str
    baseline_kind: str
    baseline_value: float
    candidates: tuple
    excluded: tuple
    kind_changed: tuple


def _intervention_task(args):
    g, y0, beta, cfg = args
    return _final_outcome(g, y0, beta, cfg)


def edge_intervention(
    g, y0, beta, mode, objective, config=None, budget=100_000, threads=None
) -> InterventionReport:
    """Rank every single-edge edit by its effect on the objective.

    Re-runs the entrenchment model from the same y0 on each edited
    graph (add: every absent pair; delete: every present edge whose
    removal keeps the graph connected). The baseline run must already
    classify to the outcome the objective reads, else
    BaselineMismatchError.
    """
    if mode not in ("add", "delete"):
        raise ValueError(f"mode must be 'add' or 'delete', got {mode!r}")
    want = _objective_kind(objective)
    cfg = config if config is not None else RunConfig()
    y0 = np.asarray(y0, dtype=float)

    baseline = _final_outcome(g, y0, beta, cfg)
    if baseline.kind != want:
        raise BaselineMismatchError(
            f"baseline classifies {baseline.kind}, objective {objective!r} needs {want}"
        )
    baseline_value = _objective_value(baseline, objective)

    excluded = []
    edits = []
    if mode == "add":
        for i in range(g.n):
            for j in range(i + 1, g.n):
                if not g.has_edge(i, j):
                    edits.append(((i, j), _add_edge(g, i, j)))
    else:
        for i, j, _ in g.sorted_edges():
            edited = _remove_edge(g, i, j)
            if edited.connected:
                edits.append(((i, j), edited))
            else:
                excluded.append((i, j))

    if len(edits) > budget:
        raise ValueError(f"{len(edits)} candidate runs exceed the budget of {budget}")

    outcomes = parallel_map(
        _intervention_task, [(edited, y0, beta, cfg) for _, edited in edits], threads
    )
    candidates = []
    kind_changed = []
    for (edge, _), outcome in zip(edits, outcomes):
        if outcome.kind == want:
            candidates.append((edge, _objective_value(outcome, objective) - baseline_value))
        else:
            kind_changed.append((edge, outcome.kind))
    candidates.sort(key=lambda item: (-item[1], item[0]))
    return InterventionReport(
        mode=mode,
        objective=objective,
        baseline_kind=baseline.kind,
        baseline_value=baseline_value,
        candidates=tuple(candidates),
        excluded=tuple(excluded),
        kind_changed=tuple(kind_changed),
    )


@dataclass(frozen=True)
class CampaignRecord:
    """One (vector, beta) run inside a campaign."""

    vector: int
    mean_y0: float
    beta: float
    kind: str
    variance: float
    mean_opinion: float
    consensus_value: float | None
    iters: int


@dataclass(frozen=True)
class BetaPRecord:
    """Per-vector polarization threshold inside a campaign."""

    vector: int
    mean_y0: float
    beta_p: float | None
    scanned: bool


@dataclass(frozen=True)
class CampaignResult:
    records: tuple
    betap: tuple

    def to_dict(self):
        return {
            "records": [
                {
                    "vector": r.vector,
                    "mean_y0": r.mean_y0,
                    "beta": r.beta,
                    "kind": r.kind,
                    "variance": r.variance,
                    "mean_opinion": r.mean_opinion,
                    "consensus_value": r.consensus_value,
                    "iters": r.iters,
                }
                for r in self.records
            ],
            "betap": [
                {
                    "vector": b.vector,
                    "mean_y0": b.mean_y0,
                    "beta_p": b.beta_p,
                    "scanned": b.scanned,
                }
                for b in self.betap
            ],
        }


def _campaign_task(args):
    index, g, y0, betas, betap_range, resolution, cfg = args
    mean_y0 = float(np.mean(y0))
    records = []
    for beta in betas:
        out = _final_outcome(g, y0, beta, cfg)
        records.append(
            CampaignRecord(
                index, mean_y0, beta, out.kind, out.variance,
                out.mean_opinion, out.consensus_value, out.iters,
            )
        )
    betap = None
    if betap_range is not None:
        result = estimate_beta_p(g, y0, betap_range, resolution, cfg)
        betap = BetaPRecord(index, mean_y0, result.beta_p, result.scanned)
    return records, betap


def campaign(
    g,
    num_vectors,
    seed,
    *,
    betas=None,
    betap_range=None,
    resolution=0.1,
    exclude_zero_band=None,
    config=None,
    threads=None,
) -> CampaignResult:
    """Monte Carlo campaign over seeded random opinion vectors.

    Runs each vector at every beta in `betas` (fixed-beta records) and,
    when `betap_range` is given, searches each vector's polarization
    threshold. Identical (seed, arguments) produce identical results at
    any worker count.
    """
    if betas is None and betap_range is None:
        raise ValueError("provide betas, betap_range, or both")
    if betas is None:
        beta_list: tuple = ()
    elif np.isscalar(betas):
        beta_list = (float(betas),)
    else:
        beta_list = tuple(float(b) for b in betas)
    cfg = config if config is not None else RunConfig()
    vectors = sample_opinion_batch(g.n, num_vectors, seed, exclude_zero_band)
    tasks = [
        (k, g, vectors[k], beta_list, betap_range, resolution, cfg)
        for k in range(len(vectors))
    ]
    results = parallel_map(_campaign_task, tasks, threads)
    records = tuple(rec for recs, _ in results for rec in recs)
    betap = tuple(bp for _, bp in results if bp is not None)
    return CampaignResult(records=records, betap=betap)
