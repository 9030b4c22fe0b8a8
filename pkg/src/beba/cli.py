"""Command-line entry point.

Subcommands map one-to-one onto the toolkit's operations: `generate`
(random graphs to edge-list files), `simulate` (one run to a JSON
report), `betap` (polarization-threshold search), `sweep` (per-beta
table), `intervene` (single-edge what-if ranking), `compare`
(star-graph model comparison), and `single-agent` (fixed-environment
limit). Every command is deterministic given its flags: all randomness
flows from explicit seeds, outputs carry no timestamps, and identical
invocations produce byte-identical files.

Exit codes: 0 success, 2 bad flags or unmet input preconditions,
3 intervention baseline mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__, analysis, dynamics, graph
from .analysis import BaselineMismatchError
from .graph import GraphError
from .models import FixedEnvironment, fixed_env_fixed_points, BalancedEnvironmentError


def _fmt(value) -> str:
    """Full-precision text for a float (repr round-trips exactly)."""
    return repr(float(value))


def _write_json(payload, path):
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _load_graph(spec: str, self_weight=None) -> graph.Graph:
    g = graph.karate() if spec == "karate" else graph.load_edge_list(spec)
    if self_weight is not None:
        g = g.with_self_weights(float(self_weight))
    return g


def _read_opinion_file(path, n):
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'node,opinion'")
            if lineno == 1 and not parts[0].lstrip("-").isdigit():
                continue  # header row
            node = int(parts[0])
            if node in values:
                raise ValueError(f"{path}:{lineno}: duplicate node {node}")
            values[node] = float(parts[1])
    if sorted(values) != list(range(n)):
        raise ValueError(f"{path}: need exactly one opinion for every node 0..{n - 1}")
    return np.array([values[i] for i in range(n)])


def _parse_uniform(spec: str):
    """Parse 'uniform:SEED' or 'uniform:batch:COUNT:SEED'; None if not uniform."""
    parts = spec.split(":")
    if parts[0] != "uniform":
        return None
    if len(parts) == 2:
        return {"count": None, "seed": int(parts[1])}
    if len(parts) == 4 and parts[1] == "batch":
        return {"count": int(parts[2]), "seed": int(parts[3])}
    raise ValueError(f"bad opinions spec {spec!r}; use uniform:SEED or uniform:batch:COUNT:SEED")


def _load_opinions(spec: str, n: int, scale: str):
    """Resolve an --opinions flag to one vector on the model's scale."""
    uniform = _parse_uniform(spec)
    if uniform is None:
        return _read_opinion_file(spec, n)
    if uniform["count"] is not None:
        raise ValueError("batch opinions are only supported by the betap command")
    y = analysis.sample_opinions(n, uniform["seed"])
    return (y + 1.0) / 2.0 if scale == "x01" else y


def _node_values_arg(raw, n, name):
    """A --beta/--bias style flag: a number, or a 'node,value' CSV path."""
    if raw is None:
        return None
    try:
        return float(raw)
    except ValueError:
        pass
    return _read_opinion_file(raw, n)


def _jsonable(values):
    if values is None:
        return None
    if isinstance(values, float):
        return values
    return np.asarray(values, dtype=float).tolist()


def _self_weight_summary(g):
    sw = g.self_weights
    return float(sw[0]) if np.all(sw == sw[0]) else sw.tolist()


def cmd_generate(args) -> int:
    params = {"er": ("rho",), "ws": ("k",), "ba": ("m0", "m")}[args.model]
    for name in params:
        if getattr(args, name) is None:
            raise ValueError(f"--{name} is required for --model {args.model}")
    if args.model == "er":
        g = graph.generate_er(args.n, args.rho, args.seed)
        header = f"er n={args.n} rho={args.rho} seed={args.seed}"
    elif args.model == "ws":
        g = graph.generate_ws(args.n, args.k, args.seed)
        header = f"ws n={args.n} k={args.k} seed={args.seed}"
    else:
        g = graph.generate_ba(args.n, args.m0, args.m, args.seed)
        header = f"ba n={args.n} m0={args.m0} m={args.m} seed={args.seed}"
    graph.write_edge_list(g, args.out, header_lines=[header])
    print(f"{args.model}: n={g.n} m={g.m} seed={args.seed} -> {args.out}")
    return 0


def _run_config(args) -> dynamics.RunConfig:
    return dynamics.RunConfig(
        max_iters=args.max_iters,
        conv_tol=args.tol,
        class_tol=args.class_tol,
        record_every=args.record_every,
    )


def cmd_simulate(args) -> int:
    g = _load_graph(args.graph, args.self_weight)
    scale = "x01" if args.model in ("degroot", "bof") else "y11"
    y0 = _load_opinions(args.opinions, g.n, scale)
    beta = _node_values_arg(args.beta, g.n, "beta")
    bias = _node_values_arg(args.bias, g.n, "bias")
    cfg = _run_config(args)
    outcome, trajectory = dynamics.run(args.model, g, y0, beta=beta, bias=bias, config=cfg)

    if args.trajectory:
        if args.trajectory.endswith(".json"):
            _write_json(trajectory.to_dict(), args.trajectory)
        else:
            trajectory.write_csv(args.trajectory)

    report = {
        "tool": "beba",
        "version": __version__,
        "model": args.model,
        "graph": {"n": g.n, "m": g.m, "source": args.graph},
        "params": {
            "beta": _jsonable(beta),
            "bias": _jsonable(bias),
            "self_weight": _self_weight_summary(g),
            "max_iters": cfg.max_iters,
            "conv_tol": cfg.conv_tol,
            "class_tol": cfg.class_tol,
            "record_every": cfg.record_every,
        },
        "opinions": {"source": args.opinions},
        "outcome": {
            "kind": outcome.kind,
            "iters": outcome.iters,
            "variance": outcome.variance,
            "consensus_value": outcome.consensus_value,
            "mean_opinion": outcome.mean_opinion,
            "pattern": None if outcome.pattern is None else outcome.pattern.tolist(),
            "opinions": outcome.opinions.tolist(),
        },
        "trajectory_path": args.trajectory,
    }
    _write_json(report, args.out)
    if args.out:
        print(f"{args.model}: {outcome.kind} after {outcome.iters} iterations -> {args.out}")
    return 0


def _parse_range(raw):
    parts = raw.split(":")
    if len(parts) != 2:
        raise ValueError(f"bad range {raw!r}; use lo:hi")
    return float(parts[0]), float(parts[1])


def cmd_betap(args) -> int:
    g = _load_graph(args.graph)
    lo, hi = _parse_range(args.range)
    uniform = _parse_uniform(args.opinions) if args.opinions.startswith("uniform") else None

    if uniform is not None and uniform["count"] is not None:
        result = analysis.campaign(
            g,
            uniform["count"],
            uniform["seed"],
            betap_range=(lo, hi),
            resolution=args.resolution,
        )
        rows = [
            [
                str(r.vector),
                _fmt(r.mean_y0),
                "" if r.beta_p is None else _fmt(r.beta_p),
                str(r.beta_p is None).lower(),
                str(r.scanned).lower(),
            ]
            for r in result.betap
        ]
        _write_csv(args.out, ["vector", "mean_y0", "beta_p", "no_polarization", "scanned"], rows)
        print(f"betap: {len(rows)} vectors -> {args.out}")
        return 0

    y0 = _load_opinions(args.opinions, g.n, "y11")
    result = analysis.estimate_beta_p(g, y0, (lo, hi), args.resolution)
    report = {
        "tool": "beba",
        "version": __version__,
        "graph": {"n": g.n, "m": g.m, "source": args.graph},
        "opinions": {"source": args.opinions},
        "beta_range": [lo, hi],
        "resolution": args.resolution,
        "beta_p": result.beta_p,
        "no_polarization": result.no_polarization,
        "scanned": result.scanned,
        "per_beta": [[beta, kind] for beta, kind in sorted(result.per_beta.items())],
    }
    _write_json(report, args.out)
    if args.out:
        label = "none" if result.beta_p is None else _fmt(result.beta_p)
        print(f"betap: {label} -> {args.out}")
    return 0


def cmd_sweep(args) -> int:
    g = _load_graph(args.graph)
    y0 = _load_opinions(args.opinions, g.n, "y11")
    parts = args.betas.split(":")
    if len(parts) != 3:
        raise ValueError(f"bad betas spec {args.betas!r}; use lo:hi:step")
    lo, hi, step = (float(p) for p in parts)
    if not step > 0 or not hi >= lo:
        raise ValueError("betas spec must satisfy hi >= lo and step > 0")
    count = int(np.floor((hi - lo) / step + 1e-9))
    betas = [lo + k * step for k in range(count + 1)]
    points = analysis.beta_sweep(g, y0, betas)
    rows = [
        [
            _fmt(p.beta),
            p.kind,
            _fmt(p.variance),
            "" if p.consensus_value is None else _fmt(p.consensus_value),
            _fmt(p.mean_opinion),
            str(p.iters),
        ]
        for p in points
    ]
    _write_csv(
        args.out,
        ["beta", "outcome", "variance", "consensus_value", "mean_opinion", "iters"],
        rows,
    )
    print(f"sweep: {len(rows)} betas -> {args.out}")
    return 0


def cmd_intervene(args) -> int:
    g = _load_graph(args.graph)
    y0 = _load_opinions(args.opinions, g.n, "y11")
    report = analysis.edge_intervention(g, y0, args.beta, args.mode, args.objective)
    rows = [
        ["baseline", "", "", "", _fmt(report.baseline_value), report.baseline_kind]
    ]
    for (i, j), delta in report.candidates:
        rows.append(
            ["candidate", str(i), str(j), _fmt(delta), _fmt(report.baseline_value + delta),
             report.baseline_kind]
        )
    for (i, j), kind in report.kind_changed:
        rows.append(["kind_changed", str(i), str(j), "", "", kind])
    for i, j in report.excluded:
        rows.append(["excluded", str(i), str(j), "", "", ""])
    _write_csv(args.out, ["status", "i", "j", "delta", "value", "outcome"], rows)
    print(
        f"intervene: {len(report.candidates)} candidates, "
        f"{len(report.excluded)} excluded -> {args.out}"
    )
    return 0


def cmd_compare(args) -> int:
    table = analysis.star_comparison(args.beta1, args.bias1, args.x1, args.grid)
    rows = [
        [_fmt(xc), _fmt(xn), _fmt(b), _fmt(e)]
        for xc, xn, b, e in zip(table.x_center, table.x_neighbors, table.bof, table.beba)
    ]
    _write_csv(args.out, ["x_center", "x_neighbor", "bof_next", "beba_next"], rows)
    print(f"compare: {len(rows)} grid points -> {args.out}")
    return 0


def cmd_single_agent(args) -> int:
    opinions = tuple(float(p) for p in args.p.split(","))
    env = FixedEnvironment(opinions=opinions, self_weight=args.w, beta=args.beta)
    cfg = _run_config(args)
    outcome, _ = dynamics.run("fixed_env", env, args.y0, config=cfg)
    try:
        attracting, repelling = fixed_env_fixed_points(env)
    except BalancedEnvironmentError:
        attracting, repelling = None, None
    row = [
        _fmt(args.y0),
        _fmt(args.beta),
        _fmt(args.w),
        str(env.m),
        _fmt(env.s),
        _fmt(env.q),
        outcome.kind,
        _fmt(outcome.opinions[0]),
        str(outcome.iters),
        "" if attracting is None else _fmt(attracting),
        "" if repelling is None else _fmt(repelling),
    ]
    _write_csv(
        args.out,
        ["y0", "beta", "self_weight", "m", "s", "q", "outcome", "limit", "iters",
         "attracting", "repelling"],
        [row],
    )
    print(f"single-agent: limit {_fmt(outcome.opinions[0])} -> {args.out}")
    return 0


def _add_run_flags(sub):
    sub.add_argument("--max-iters", type=int, default=10_000, help="iteration budget")
    sub.add_argument("--tol", type=float, default=1e-9,
                     help="sup-norm movement threshold for convergence")
    sub.add_argument("--class-tol", type=float, default=1e-6,
                     help="tolerance for classifying the stationary vector")
    sub.add_argument("--record-every", type=int, default=1, help="trajectory stride")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beba",
        description="Deterministic opinion-dynamics simulation and analysis toolkit.",
    )
    parser.add_argument("--version", action="version", version=f"beba {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("generate", help="write a random graph to an edge-list file")
    p.add_argument("--model", required=True, choices=("er", "ws", "ba"))
    p.add_argument("--n", type=int, required=True, help="node count")
    p.add_argument("--rho", type=float, help="ER edge probability")
    p.add_argument("--k", type=int, help="WS mean degree (even)")
    p.add_argument("--m0", type=int, help="BA seed-node count")
    p.add_argument("--m", type=int, help="BA attachment count")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="edge-list output path")
    p.set_defaults(func=cmd_generate)

    p = subs.add_parser("simulate", help="run one model to its limit and write a JSON report")
    p.add_argument("--graph", required=True, help="edge-list path or 'karate'")
    p.add_argument("--opinions", required=True,
                   help="opinion CSV path or uniform:SEED (sampled on the model's scale)")
    p.add_argument("--model", required=True, choices=("degroot", "bof", "beba"))
    p.add_argument("--beta", help="entrenchment: number or node,value CSV (beba)")
    p.add_argument("--bias", help="assimilation bias: number or node,value CSV (bof)")
    p.add_argument("--self-weight", type=float, default=None,
                   help="uniform w_ii override (default: keep the graph's)")
    _add_run_flags(p)
    p.add_argument("--out", help="report JSON path (default: stdout)")
    p.add_argument("--trajectory", help="trajectory output path (.csv or .json)")
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("betap", help="search the consensus-to-polarization threshold")
    p.add_argument("--graph", required=True, help="edge-list path or 'karate'")
    p.add_argument("--opinions", required=True,
                   help="opinion CSV, uniform:SEED, or uniform:batch:COUNT:SEED")
    p.add_argument("--range", required=True, help="beta search range lo:hi")
    p.add_argument("--resolution", type=float, default=0.1, help="beta grid step")
    p.add_argument("--out", help="JSON (single vector) or CSV (batch) output path")
    p.set_defaults(func=cmd_betap)

    p = subs.add_parser("sweep", help="classify one run per beta on a grid")
    p.add_argument("--betas", required=True, help="beta grid lo:hi:step")
    p.add_argument("--graph", required=True, help="edge-list path or 'karate'")
    p.add_argument("--opinions", required=True, help="opinion CSV path or uniform:SEED")
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_sweep)

    p = subs.add_parser("intervene", help="rank single-edge edits by objective change")
    p.add_argument("--mode", required=True, choices=("add", "delete"))
    p.add_argument("--objective", required=True, choices=("consensus", "polarized-mean"))
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--graph", required=True, help="edge-list path or 'karate'")
    p.add_argument("--opinions", required=True, help="opinion CSV path or uniform:SEED")
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_intervene)

    p = subs.add_parser("compare", help="star-graph comparison of the two biased models")
    p.add_argument("--beta1", type=float, required=True, help="center entrenchment")
    p.add_argument("--bias1", type=float, required=True, help="center assimilation bias")
    p.add_argument("--x1", type=float, default=None,
                   help="center opinion in [0,1]; omit for the full surface")
    p.add_argument("--grid", type=int, default=101, help="grid resolution per axis")
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_compare)

    p = subs.add_parser("single-agent", help="fixed-environment agent limit")
    p.add_argument("--p", required=True, help="fixed neighbor opinions, comma separated")
    p.add_argument("--beta", type=float, required=True, help="agent entrenchment")
    p.add_argument("--w", type=float, default=1.0, help="agent self-weight")
    p.add_argument("--y0", type=float, required=True, help="initial opinion in [-1,1]")
    _add_run_flags(p)
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_single_agent)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BaselineMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (GraphError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
