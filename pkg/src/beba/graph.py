"""Undirected networks that the opinion dynamics run on.

Graphs are simple (no self-loop edges, no duplicates), undirected, with
strictly positive edge weights and per-node self-weights w_ii >= 0.
Node ids are dense integers 0..n-1. Instances are immutable after
construction and safe to share across workers; edits return new graphs.

Random generators (ER, WS with full rewiring, BA) resample until the
graph is connected, up to RETRY_BUDGET attempts, and are deterministic
for a fixed seed. `remove_edge` may return a graph whose `connected`
flag is False so callers can exclude the edit; every simulation entry
point rejects disconnected graphs.
"""

from __future__ import annotations

from collections import deque

import numpy as np

RETRY_BUDGET = 1000  # resampling attempts before a generator gives up


class GraphError(ValueError):
    """Invalid graph structure or generator parameters."""


class EdgeListError(GraphError):
    """Malformed edge-list file."""


class DisconnectedGraphError(GraphError):
    """A connected graph is required."""


class GenerationError(GraphError):
    """A random-graph generator exhausted its retry budget."""


class Graph:
    """Immutable simple undirected graph with weights and self-weights.

    Parameters
    ----------
    n : node count; nodes are 0..n-1.
    edges : iterable of (i, j) or (i, j, w) with i != j and w > 0.
        Unordered: (i, j) and (j, i) denote the same edge.
    self_weights : scalar or length-n array of w_ii >= 0 (default 1.0).
    """

    def __init__(self, n, edges, self_weights=None):
        n = int(n)
        if n < 1:
            raise GraphError(f"need at least one node, got n={n}")
        weights: dict[tuple[int, int], float] = {}
        for edge in edges:
            if len(edge) == 2:
                i, j = edge
                w = 1.0
            elif len(edge) == 3:
                i, j, w = edge
            else:
                raise GraphError(f"edge must be (i, j) or (i, j, w), got {edge!r}")
            i, j, w = int(i), int(j), float(w)
            if not (0 <= i < n and 0 <= j < n):
                raise GraphError(f"edge ({i}, {j}) out of range for n={n}")
            if i == j:
                raise GraphError(f"self-loop edge ({i}, {j}) not allowed")
            if w <= 0 or not np.isfinite(w):
                raise GraphError(f"edge ({i}, {j}) must have positive finite weight, got {w}")
            key = (i, j) if i < j else (j, i)
            if key in weights:
                raise GraphError(f"duplicate edge {key}")
            weights[key] = w

        if self_weights is None:
            sw = np.ones(n)
        else:
            sw = np.broadcast_to(np.asarray(self_weights, dtype=float), (n,)).copy()
        if np.any(sw < 0) or not np.all(np.isfinite(sw)):
            raise GraphError("self-weights must be finite and >= 0")
        sw.flags.writeable = False

        self.n = n
        self.edge_weights = weights
        self.self_weights = sw

        # Directed incidence arrays sorted by (src, dst): accumulation in
        # models.* then runs in ascending neighbor order, which pins the
        # floating-point summation order across runs.
        pairs = sorted(weights)
        src = np.empty(2 * len(pairs), dtype=np.intp)
        dst = np.empty(2 * len(pairs), dtype=np.intp)
        wts = np.empty(2 * len(pairs), dtype=float)
        k = 0
        for (i, j), w in ((p, weights[p]) for p in pairs):
            src[k], dst[k], wts[k] = i, j, w
            src[k + 1], dst[k + 1], wts[k + 1] = j, i, w
            k += 2
        order = np.lexsort((dst, src))
        self._src = src[order]
        self._dst = dst[order]
        self._w = wts[order]
        for arr in (self._src, self._dst, self._w):
            arr.flags.writeable = False
        self.weighted_degrees = np.bincount(self._src, weights=self._w, minlength=n)
        self.weighted_degrees.flags.writeable = False
        self.connected = self._compute_connected()

    @property
    def m(self) -> int:
        """Number of undirected edges."""
        return len(self.edge_weights)

    def incidence(self):
        """Directed (src, dst, weight) arrays, both orientations, sorted by (src, dst)."""
        return self._src, self._dst, self._w

    def neighbors(self, i):
        """Neighbor ids of node i in ascending order."""
        lo = np.searchsorted(self._src, i, side="left")
        hi = np.searchsorted(self._src, i, side="right")
        return self._dst[lo:hi]

    def degree(self, i) -> int:
        return len(self.neighbors(i))

    def has_edge(self, i, j) -> bool:
        return (min(i, j), max(i, j)) in self.edge_weights

    def edge_weight(self, i, j) -> float:
        return self.edge_weights[(min(i, j), max(i, j))]

    def sorted_edges(self):
        """Edges as (i, j, w) tuples with i < j, sorted by (i, j)."""
        return [(i, j, self.edge_weights[(i, j)]) for i, j in sorted(self.edge_weights)]

    def with_self_weights(self, self_weights) -> "Graph":
        """Copy of this graph with replaced self-weights."""
        return Graph(self.n, self.sorted_edges(), self_weights=self_weights)

    def _compute_connected(self) -> bool:
        if self.n == 1:
            return True
        seen = np.zeros(self.n, dtype=bool)
        seen[0] = True
        queue = deque([0])
        count = 1
        while queue:
            i = queue.popleft()
            for j in self.neighbors(i):
                if not seen[j]:
                    seen[j] = True
                    count += 1
                    queue.append(j)
        return count == self.n

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and self.edge_weights == other.edge_weights
            and np.array_equal(self.self_weights, other.self_weights)
        )

    def __hash__(self):
        return hash((self.n, tuple(sorted(self.edge_weights.items()))))

    def __repr__(self):
        flag = "" if self.connected else ", disconnected"
        return f"Graph(n={self.n}, m={self.m}{flag})"


def _pair_index(n):
    """Row/column ids of the C(n,2) node pairs, in lexicographic order."""
    return np.triu_indices(n, k=1)


def generate_er(n, rho, seed) -> Graph:
    """Erdos-Renyi G(n, rho): every pair is an edge independently.

    Resamples from the same seeded stream until the sample is connected
    (at most RETRY_BUDGET attempts).
    """
    n = int(n)
    rho = float(rho)
    if n < 2:
        raise GraphError(f"ER generator needs n >= 2, got {n}")
    if not 0.0 <= rho <= 1.0:
        raise GraphError(f"edge probability must be in [0, 1], got {rho}")
    rng = np.random.default_rng(seed)
    rows, cols = _pair_index(n)
    for _ in range(RETRY_BUDGET):
        mask = rng.random(len(rows)) < rho
        g = Graph(n, zip(rows[mask].tolist(), cols[mask].tolist()))
        if g.connected:
            return g
    raise GenerationError(
        f"no connected ER sample with n={n}, rho={rho} in {RETRY_BUDGET} attempts"
    )


def generate_ws(n, k, seed) -> Graph:
    """Watts-Strogatz ring with K neighbors per node and full rewiring.

    Every lattice edge's far endpoint is rewired to a uniformly chosen
    non-loop, non-duplicate target (rewiring probability fixed at 1),
    preserving m = n*K/2. K must be even; resamples until connected.
    """
    n, k = int(n), int(k)
    if n < 3:
        raise GraphError(f"WS generator needs n >= 3, got {n}")
    if k % 2 != 0:
        raise GraphError(f"K must be even, got {k}")
    if not 2 <= k < n:
        raise GraphError(f"K must satisfy 2 <= K < n, got K={k}, n={n}")
    rng = np.random.default_rng(seed)
    for _ in range(RETRY_BUDGET):
        adjacency = [set() for _ in range(n)]
        for offset in range(1, k // 2 + 1):
            for i in range(n):
                j = (i + offset) % n
                adjacency[i].add(j)
                adjacency[j].add(i)
        for offset in range(1, k // 2 + 1):
            for i in range(n):
                j = (i + offset) % n
                if j not in adjacency[i]:
                    continue  # already rewired away by an earlier pass
                if len(adjacency[i]) >= n - 1:
                    continue  # no valid target left; keep the lattice edge
                target = int(rng.integers(n))
                while target == i or target in adjacency[i]:
                    target = int(rng.integers(n))
                adjacency[i].discard(j)
                adjacency[j].discard(i)
                adjacency[i].add(target)
                adjacency[target].add(i)
        edges = [(i, j) for i in range(n) for j in adjacency[i] if i < j]
        g = Graph(n, edges)
        if g.connected:
            return g
    raise GenerationError(
        f"no connected WS sample with n={n}, K={k} in {RETRY_BUDGET} attempts"
    )


def generate_ba(n, m0, m, seed) -> Graph:
    """Barabasi-Albert preferential attachment from a complete seed.

    Starts from the complete graph on m0 nodes; each arriving node
    attaches m distinct edges with probability proportional to current
    degree. Edge count is C(m0, 2) + (n - m0) * m.
    """
    n, m0, m = int(n), int(m0), int(m)
    if not (1 <= m <= m0 < n):
        raise GraphError(f"BA generator needs 1 <= M <= M0 < n, got M={m}, M0={m0}, n={n}")
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(m0) for j in range(i + 1, m0)]
    # One entry per degree unit; sampling an entry uniformly is
    # degree-proportional sampling of its node.
    repeated = [node for i, j in edges for node in (i, j)]
    for new in range(m0, n):
        if repeated:
            targets: set[int] = set()
            while len(targets) < m:
                targets.add(repeated[int(rng.integers(len(repeated)))])
        else:
            # m0 == 1: the seed has no edges yet, attach uniformly
            targets = set(rng.choice(new, size=m, replace=False).tolist())
        for t in sorted(targets):
            edges.append((t, new))
            repeated.extend((t, new))
    g = Graph(n, edges)
    if not g.connected:  # cannot happen: every arrival joins the seed component
        raise GenerationError("BA sample unexpectedly disconnected")
    return g


# Zachary's karate club, 0-indexed (34 nodes, 78 edges).
KARATE_EDGES = (
    (0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6), (0, 7), (0, 8),
    (0, 10), (0, 11), (0, 12), (0, 13), (0, 17), (0, 19), (0, 21), (0, 31),
    (1, 2), (1, 3), (1, 7), (1, 13), (1, 17), (1, 19), (1, 21), (1, 30),
    (2, 3), (2, 7), (2, 8), (2, 9), (2, 13), (2, 27), (2, 28), (2, 32),
    (3, 7), (3, 12), (3, 13), (4, 6), (4, 10), (5, 6), (5, 10), (5, 16),
    (6, 16), (8, 30), (8, 32), (8, 33), (9, 33), (13, 33), (14, 32), (14, 33),
    (15, 32), (15, 33), (18, 32), (18, 33), (19, 33), (20, 32), (20, 33), (22, 32),
    (22, 33), (23, 25), (23, 27), (23, 29), (23, 32), (23, 33), (24, 25), (24, 27),
    (24, 31), (25, 31), (26, 29), (26, 33), (27, 33), (28, 31), (28, 33), (29, 32),
    (29, 33), (30, 32), (30, 33), (31, 32), (31, 33), (32, 33),
)


def karate() -> Graph:
    """Zachary's karate club network (n=34, m=78, unweighted)."""
    return Graph(34, KARATE_EDGES)


def generate(model, n, seed, rho=None, k=None, m0=None, m=None) -> Graph:
    """Dispatch to a named generator; used by the CLI and campaign drivers."""
    if model == "er":
        if rho is None:
            raise GraphError("ER generator requires rho")
        return generate_er(n, rho, seed)
    if model == "ws":
        if k is None:
            raise GraphError("WS generator requires K")
        return generate_ws(n, k, seed)
    if model == "ba":
        if m0 is None or m is None:
            raise GraphError("BA generator requires M0 and M")
        return generate_ba(n, m0, m, seed)
    raise GraphError(f"unknown graph model {model!r}")


def load_edge_list(path) -> Graph:
    """Read a graph from an edge-list text file.

    Lines are "u v" or "u v w" with 0-based integer ids and an optional
    positive weight; lines starting with '#' are comments. Node count is
    max id + 1, so sparse ids leave isolated nodes and fail the
    connectivity check. Self-loops, duplicate edges, non-positive
    weights, and disconnected graphs are rejected.
    """
    edges = []
    max_id = -1
    seen: set[tuple[int, int]] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise EdgeListError(f"{path}:{lineno}: expected 'u v' or 'u v w', got {line!r}")
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise EdgeListError(f"{path}:{lineno}: node ids must be integers") from None
            if i < 0 or j < 0:
                raise EdgeListError(f"{path}:{lineno}: node ids must be >= 0")
            if i == j:
                raise EdgeListError(f"{path}:{lineno}: self-loop edge ({i}, {j})")
            w = 1.0
            if len(parts) == 3:
                try:
                    w = float(parts[2])
                except ValueError:
                    raise EdgeListError(f"{path}:{lineno}: weight must be a number") from None
                if w <= 0 or not np.isfinite(w):
                    raise EdgeListError(f"{path}:{lineno}: weight must be positive, got {w}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise EdgeListError(f"{path}:{lineno}: duplicate edge {key}")
            seen.add(key)
            edges.append((i, j, w))
            max_id = max(max_id, i, j)
    if max_id < 0:
        raise EdgeListError(f"{path}: no edges found")
    g = Graph(max_id + 1, edges)
    if not g.connected:
        raise DisconnectedGraphError(f"{path}: graph is not connected")
    return g


def write_edge_list(g: Graph, path, header_lines=()) -> None:
    """Write `g` in the edge-list format read by load_edge_list.

    One "u v w" line per edge sorted by (u, v); the weight column is
    omitted when it is exactly 1. Weights use repr so a round trip
    through load_edge_list reproduces the graph bit-for-bit.
    """
    with open(path, "w", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        for i, j, w in g.sorted_edges():
            if w == 1.0:
                fh.write(f"{i} {j}\n")
            else:
                fh.write(f"{i} {j} {w!r}\n")


def add_edge(g: Graph, i, j, w=1.0) -> Graph:
    """Copy of `g` with edge (i, j) added; the edge must be absent."""
    i, j = int(i), int(j)
    if not (0 <= i < g.n and 0 <= j < g.n):
        raise GraphError(f"edge ({i}, {j}) out of range for n={g.n}")
    if i == j:
        raise GraphError("cannot add a self-loop")
    if g.has_edge(i, j):
        raise GraphError(f"edge ({i}, {j}) already present")
    return Graph(g.n, g.sorted_edges() + [(i, j, float(w))], self_weights=g.self_weights)


def remove_edge(g: Graph, i, j) -> Graph:
    """Copy of `g` with edge (i, j) removed; the edge must be present.

    The result may be disconnected (bridge removal); it is returned with
    `connected == False` rather than raising, so callers can exclude it.
    """
    i, j = int(i), int(j)
    if not g.has_edge(i, j):
        raise GraphError(f"edge ({i}, {j}) not present")
    key = (min(i, j), max(i, j))
    edges = [(a, b, w) for a, b, w in g.sorted_edges() if (a, b) != key]
    return Graph(g.n, edges, self_weights=g.self_weights)
