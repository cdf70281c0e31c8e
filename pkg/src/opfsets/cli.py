"""Command-line orchestration for grids, conflict graphs, search, filtering,
scaling, and convexification.

Exit codes: 0 success, 2 usage error, 3 infeasibility, 4 resource cap
exceeded, 5 certification violation.  Primary artifacts are deterministic
(seeds fixed, keys sorted, no timestamps); run metadata goes to a
"<artifact>.meta.json" sidecar.  OPFSETS_CACHE_DIR sets the default graph
cache directory.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import conflicts, convexify, density, scaling, search
from .grid import CellSet, all_cells, cell_area, cell_count
from .sphere import SPHERE_AREA

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_RESOURCE = 4
EXIT_CERTIFICATION = 5

CACHE_ENV = "OPFSETS_CACHE_DIR"


def _write_artifact(path: str, doc: dict) -> None:
    with open(path, "w") as f:
        json.dump(doc, f, sort_keys=True, separators=(",", ":"))
        f.write("\n")
    with open(path + ".meta.json", "w") as f:
        json.dump({"written_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                   "artifact": os.path.basename(path)}, f)
        f.write("\n")


def _both(sr: float) -> str:
    return f"{sr:.9f} sr (fraction {sr / SPHERE_AREA:.9f})"


def cmd_grid(args) -> int:
    m = cell_count(args.level)
    area = cell_area(args.level)
    print(f"level {args.level}: {m} cells, each {area:.12g} sr "
          f"(fraction {area / SPHERE_AREA:.12g})")
    print(f"total {_both(m * area)}")
    if args.out:
        CellSet.from_cells(args.level, all_cells(args.level)).save(args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


def _graph_cache_path(args) -> Path | None:
    if args.cache:
        return Path(args.cache)
    root = args.cache_dir or os.environ.get(CACHE_ENV)
    if not root:
        return None
    return Path(root) / f"level{args.level}_margin{args.margin:g}.opfg"


def cmd_conflicts(args) -> int:
    path = _graph_cache_path(args)
    graph = None
    if path is not None and path.exists():
        try:
            graph = conflicts.load_graph(path)
            if graph.level != args.level or graph.margin != args.margin:
                graph = None
        except conflicts.CorruptCacheError as exc:
            print(f"warning: rebuilding cache ({exc})", file=sys.stderr)
    if graph is None:
        try:
            graph = conflicts.build_conflict_graph(args.level, args.margin,
                                                   max_level=args.max_level)
        except conflicts.ResourceCapError as exc:
            print(f"error: {exc}; raise --max-level to override", file=sys.stderr)
            return EXIT_RESOURCE
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            conflicts.save_graph(graph, path)
            print(f"cached graph at {path}")
    degrees = np.zeros(graph.n_cells(), dtype=int)
    for a, b in graph.edges:
        degrees[a] += 1
        degrees[b] += 1
    print(f"level {graph.level} margin {graph.margin:g}: "
          f"{len(graph.edges)} edges, {len(graph.self_conflicts)} self-conflicts")
    hist = np.bincount(degrees)
    print("degree histogram (degree: cells):")
    for d, c in enumerate(hist):
        if c:
            print(f"  {d}: {c}")
    return EXIT_OK


def _load_graph_for(args, level: int) -> conflicts.ConflictGraph:
    return conflicts.build_conflict_graph(level, max_level=args.max_level)


def cmd_search(args) -> int:
    try:
        graph = _load_graph_for(args, args.level)
    except conflicts.ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    try:
        if args.method == "baseline":
            result = search.evaluate(search.double_cap_cellset(args.level), graph,
                                     method="baseline")
        elif args.method in ("greedy-min-degree", "greedy-random"):
            result = search.greedy_mis(graph, args.method.removeprefix("greedy-"),
                                       seed=args.seed)
        elif args.method == "local":
            init = (search.double_cap_cellset(args.level) if args.init == "double-cap"
                    else CellSet.from_cells(args.level, []))
            result = search.local_search(graph, init, iters=args.iters, seed=args.seed)
        elif args.method == "exact":
            result = search.exact_mis(graph, node_budget=args.node_budget)
        else:
            print(f"error: unknown method {args.method!r}", file=sys.stderr)
            return EXIT_USAGE
    except search.InfeasibleSelectionError as exc:
        print(f"error: infeasible initial selection: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    print(f"method {result.method}: {len(result.selection)} cells, "
          f"{_both(result.measure_sr)}")
    for name, gap in sorted(result.bound_gaps().items()):
        print(f"  gap to {name}: {gap:+.6f}")
    if result.optimal is not None:
        print(f"  optimal: {result.optimal} (nodes {result.nodes})")
    if args.out:
        _write_artifact(args.out, result.to_json())
    if args.csv:
        search.write_leaderboard([result], args.csv)
    if result.exceeds_best_bound:
        print("FINDING: feasible fraction exceeds the best published upper bound "
              f"0.297742 ({result.fraction:.6f}); this contradicts the literature "
              "and most likely indicates a predicate bug. Aborting.", file=sys.stderr)
        return EXIT_CERTIFICATION
    return EXIT_OK


def _build_oracle(args) -> density.MembershipOracle:
    if args.oracle == "double-cap":
        return density.double_cap_oracle(args.radius)
    if args.oracle == "cap":
        center = np.array([float(x) for x in args.center.split(",")])
        return density.cap_oracle(center / np.linalg.norm(center), args.radius)
    if args.oracle == "cell-set":
        return density.cell_set_oracle(CellSet.load(args.cells))
    if args.oracle == "sieve":
        return density.sieve_fractal_oracle(args.depth)
    raise ValueError(f"unknown oracle {args.oracle!r}")


def cmd_filter(args) -> int:
    if not 0.0 < args.epsilon < 0.25:
        print(f"error: epsilon {args.epsilon} outside the supported range (0, 0.25); "
              f"the density guarantee needs epsilon < 1/64", file=sys.stderr)
        return EXIT_USAGE
    if args.epsilon >= density.THEOREM_BETA:
        print(f"warning: epsilon {args.epsilon} >= 1/64; the captured-measure "
              "guarantee no longer applies", file=sys.stderr)
    try:
        oracle = _build_oracle(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    report = density.select_dense_cells(oracle, args.level, args.epsilon,
                                        samples=args.samples, seed=args.seed)
    mu_m = oracle.measure()
    print(f"selected {len(report.selected)} cells at level {args.level}, "
          f"captured {_both(report.captured_measure)}")
    if mu_m is not None:
        target = (1.0 - args.epsilon) * mu_m
        print(f"target (1-eps)*mu(M) = {_both(target)}: "
              f"{'met' if report.captured_measure >= target else 'NOT met'}")
    if args.out:
        _write_artifact(args.out, report.to_json())
    if args.csv:
        report.save_csv(args.csv)
    return EXIT_OK


def cmd_scale(args) -> int:
    try:
        selection = CellSet.load(args.selection)
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: cannot load selection: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        constants = scaling.choose_constants(args.epsilon, selection.measure())
    except scaling.InfeasibleEpsilonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    summary = scaling.scale_set(selection, constants)
    lhs1, rhs1 = constants.inequality1
    lhs2, rhs2 = constants.inequality2
    print(f"feasibility: ineq1 {lhs1:.9f} >= {rhs1:.9f}; ineq2 {lhs2:.3e} > {rhs2:.3e}")
    print(f"removed {summary.removed_cells} polar cells "
          f"({_both(summary.removed_measure)})")
    print(f"scaled measure {_both(summary.total_region_measure)} vs "
          f"target {_both(summary.target_measure)}: "
          f"{'met' if summary.meets_target else 'NOT met'}")
    cert = scaling.verify_scaled_opf(summary.regions)
    print(f"orthogonal-pair certification: {len(cert.violations)} violations")
    if args.out:
        doc = summary.to_json()
        doc["certification"] = {"violations": [list(v) for v in cert.violations]}
        _write_artifact(args.out, doc)
    if not cert.ok:
        return EXIT_CERTIFICATION
    return EXIT_OK


def cmd_convexify(args) -> int:
    try:
        selection = CellSet.load(args.selection)
    except (OSError, KeyError, ValueError) as exc:
        print(f"error: cannot load selection: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        result = convexify.conv(selection, arc_samples=args.arc_samples,
                                merge_tol=args.merge_tol)
    except convexify.HullInfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    print(f"{len(result.decomposition)} polygons after {result.merge_count} merges")
    print(f"measure before {_both(result.input_measure)}, "
          f"after {_both(result.output_measure)}")
    print(f"orthogonal-pair certification: {len(result.opf_violations)} violations")
    if args.out:
        _write_artifact(args.out, result.to_json())
    if result.opf_violations:
        return EXIT_CERTIFICATION
    return EXIT_OK


def cmd_report(args) -> int:
    if not args.inputs and not args.sweep:
        print("error: nothing to report (give --inputs and/or --sweep)", file=sys.stderr)
        return EXIT_USAGE
    rows = []
    for path in args.inputs:
        try:
            with open(path) as f:
                doc = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: cannot read {path}: {exc}", file=sys.stderr)
            return EXIT_USAGE
        rows.append((doc["fraction"], doc["method"], doc["selection"]["level"],
                     len(doc["selection"]["cells"])))
    for fraction, method, level, cells in sorted(rows, reverse=True):
        print(f"level {level} {method}: {cells} cells, fraction {fraction:.9f}")
    series = []
    if args.sweep:
        lo, hi = args.sweep
        for level in range(lo, hi + 1):
            series.append((level, search.double_cap_cellset(level).fraction()))
        print("double-cap baseline sweep (level, fraction):")
        for level, fraction in series:
            print(f"  {level}, {fraction:.9f}")
        print(f"limit 1 - 1/sqrt(2) = {1.0 - math.sqrt(0.5):.9f}")
    if args.csv:
        with open(args.csv, "w") as f:
            f.write("level,method,cells,fraction\n")
            for fraction, method, level, cells in sorted(rows, reverse=True):
                f.write(f"{level},{method},{cells},{fraction:.10f}\n")
            for level, fraction in series:
                f.write(f"{level},baseline-sweep,,{fraction:.10f}\n")
    return EXIT_OK


def _read_config(path: str) -> dict:
    out = {}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line (want key=value): {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opfsets",
        description="Construct, search, certify, and convexify orthogonal-pair-free "
                    "cell selections on the sphere.")
    parser.add_argument("--config", help="plain key=value config file; flags win")
    parser.add_argument("--workers", type=int, default=1,
                        help="worker count hint for library parallelism")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("grid", help="grid summary at a level")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--out", help="write the all-cells selection as JSON")
    p.set_defaults(func=cmd_grid)

    p = sub.add_parser("conflicts", help="build or load a conflict graph")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--margin", type=float, default=0.0)
    p.add_argument("--cache", help="explicit graph cache path")
    p.add_argument("--cache-dir", help=f"cache directory (default ${CACHE_ENV})")
    p.add_argument("--max-level", type=int, default=7)
    p.set_defaults(func=cmd_conflicts)

    p = sub.add_parser("search", help="search for conflict-free selections")
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--method", required=True,
                   choices=["baseline", "greedy-min-degree", "greedy-random",
                            "local", "exact"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--iters", type=int, default=1000)
    p.add_argument("--init", choices=["double-cap", "empty"], default="double-cap")
    p.add_argument("--node-budget", type=int, default=1_000_000)
    p.add_argument("--max-level", type=int, default=7)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("filter", help="select cells dense in a target set")
    p.add_argument("--oracle", required=True,
                   choices=["double-cap", "cap", "cell-set", "sieve"])
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--radius", type=float, default=math.pi / 4.0)
    p.add_argument("--center", default="0,0,1", help="cap center x,y,z")
    p.add_argument("--cells", help="CellSet JSON for the cell-set oracle")
    p.add_argument("--depth", type=int, default=3, help="sieve fractal depth")
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("scale", help="shrink a selection away from cell boundaries")
    p.add_argument("--selection", required=True, help="CellSet JSON path")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_scale)

    p = sub.add_parser("convexify", help="components -> convex polygons pipeline")
    p.add_argument("--selection", required=True, help="CellSet JSON path")
    p.add_argument("--arc-samples", type=int, default=32)
    p.add_argument("--merge-tol", type=float, default=convexify.MERGE_TOL)
    p.add_argument("--out")
    p.set_defaults(func=cmd_convexify)

    p = sub.add_parser("report", help="consolidate artifacts and emit plot data")
    p.add_argument("--inputs", nargs="*", default=[],
                   help="search result JSON files")
    p.add_argument("--sweep", nargs=2, type=int, metavar=("LO", "HI"),
                   help="double-cap baseline sweep over a level range")
    p.add_argument("--csv")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    if args.config:
        try:
            overrides = _read_config(args.config)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        known = vars(args)
        int_keys = {"level", "seed", "iters", "samples", "depth", "max_level",
                    "node_budget", "workers"}
        float_keys = {"margin", "epsilon", "radius", "merge_tol"}
        given = argv if argv is not None else sys.argv[1:]
        for key, value in overrides.items():
            if key not in known:
                print(f"error: unknown config key {key!r}", file=sys.stderr)
                return EXIT_USAGE
            # config supplies defaults; explicit flags win
            if f"--{key.replace('_', '-')}" in given:
                continue
            if key in int_keys:
                value = int(value)
            elif key in float_keys:
                value = float(value)
            setattr(args, key, value)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
