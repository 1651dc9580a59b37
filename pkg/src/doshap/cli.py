"""Command-line front end: ``doshap {classes,exact,estimate,identify,interactions,report}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from .estimators import BASE_ESTIMATORS, do_estimator
from .exact import exact_values, n_shapley, shapley_interactions
from .games import OracleError, TableGame, load_game
from .graph import Admg, GraphError, latent_projection
from .identify import do_shapley_identifiable
from .lattice import all_classes
from .weights import WeightScheme

EXIT_PARSE, EXIT_VALIDATION, EXIT_NOT_IDENTIFIABLE, EXIT_ORACLE = 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, kind: str, message: str, code: int, **extra):
        super().__init__(message)
        self.kind, self.code, self.extra = kind, code, extra


def _read_json(path: str, what: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError("parse", f"cannot read {what} {path!r}: {exc}", EXIT_PARSE) from None


def load_graph(path: str) -> Admg:
    """Read the graph JSON, projecting out ``latent`` nodes if any are listed."""
    spec = _read_json(path, "graph")
    try:
        nodes, target = list(spec["nodes"]), spec["target"]
        edges = [tuple(e) for e in spec.get("edges", [])]
        bidirected = [tuple(e) for e in spec.get("bidirected", [])]
        latent = list(spec.get("latent", []))
    except (KeyError, TypeError) as exc:
        raise CliError("parse", f"malformed graph file: {exc}", EXIT_PARSE) from None
    try:
        if latent:
            projected = latent_projection([n for n in nodes if n not in latent], target, edges, latent)
            if not bidirected:
                return projected
            names = list(projected.graph.names)
            extra = [(projected.node_name(a), projected.node_name(b))
                     for a, b in (tuple(p) for p in projected.bidirected)]
            return Admg.from_edges(names, target,
                                   [(projected.node_name(p), projected.node_name(v))
                                    for p, v in projected.graph.edges()],
                                   extra + bidirected)
        return Admg.from_edges(nodes, target, edges, bidirected)
    except GraphError as exc:
        raise CliError("validation", str(exc), EXIT_VALIDATION) from None


def _load_game(path: str, graph):
    spec = _read_json(path, "game")
    try:
        return load_game(spec, graph)
    except (KeyError, TypeError) as exc:
        raise CliError("parse", f"malformed game file: {exc}", EXIT_PARSE) from None
    except (ValueError, GraphError) as exc:
        raise CliError("validation", str(exc), EXIT_VALIDATION) from None


def _scheme(spec: str, d: int) -> WeightScheme:
    try:
        return WeightScheme.parse(spec, d)
    except ValueError as exc:
        raise CliError("validation", str(exc), EXIT_VALIDATION) from None


def _validate_table(game, inventory, graph) -> None:
    if isinstance(game, TableGame):
        missing = game.missing_bases(inventory)
        if missing:
            raise CliError("validation", "table game lacks values for some irreducible sets",
                           EXIT_VALIDATION,
                           missing=sorted(",".join(sorted(graph.names_of(b))) for b in missing))


def _workers() -> int | None:
    raw = os.environ.get("DOSHAP_THREADS")
    if not raw:
        return None
    try:
        return max(1, int(raw))
    except ValueError:
        raise CliError("validation", f"DOSHAP_THREADS must be an integer, got {raw!r}",
                       EXIT_VALIDATION) from None


def _values_by_name(graph, phi) -> dict[str, float]:
    out = {name: float(v) for name, v in zip(graph.names, phi)}
    out.update({name: 0.0 for name in graph.pruned})
    return out


def _key(graph, mask: int) -> str:
    return ",".join(sorted(graph.names_of(mask)))


def cmd_classes(args, admg):
    graph = admg.graph
    inv = all_classes(graph)
    return {
        "classes": [{"basis": graph.names_of(c.basis), "closure": graph.names_of(c.closure),
                     "simple": c.simple} for c in inv],
        "r": inv.r,
        "queries": 0,
    }


def _run_oracle(fn):
    try:
        return fn()
    except OracleError as exc:
        raise CliError("oracle", str(exc), EXIT_ORACLE) from None


def cmd_exact(args, admg):
    graph = admg.graph
    game = _load_game(args.game, graph)
    inv = all_classes(graph)
    _validate_table(game, inv, graph)
    scheme = _scheme(args.scheme, graph.d)
    att = _run_oracle(lambda: exact_values(inv, game, scheme, workers=_workers()))
    gap = float(att.values.sum() - (game.evaluate(graph.full) - game.evaluate(0)))
    return {"values": _values_by_name(graph, att.values), "efficiency_gap": gap,
            "queries": att.queries, "r": inv.r, "scheme": scheme.name}


def _require_identifiable(args, admg):
    if getattr(args, "require_identifiable", False):
        ok, failing = do_shapley_identifiable(admg)
        if not ok:
            raise CliError("not-identifiable", "some singleton interventions are not identifiable",
                           EXIT_NOT_IDENTIFIABLE,
                           failing_singletons=sorted(admg.graph.names[j] for j in failing))


def cmd_estimate(args, admg):
    graph = admg.graph
    if args.budget is None or args.budget < 1:
        raise CliError("validation", "--budget must be at least 1", EXIT_VALIDATION)
    if args.seed is None:
        raise CliError("validation", "--seed is required for estimate", EXIT_VALIDATION)
    _require_identifiable(args, admg)
    game = _load_game(args.game, graph)
    scheme = _scheme(args.scheme, graph.d)
    try:
        att = _run_oracle(lambda: do_estimator(args.budget, game, graph, base=args.base,
                                               k=args.multiplier, scheme=scheme, seed=args.seed))
    except ValueError as exc:
        raise CliError("validation", str(exc), EXIT_VALIDATION) from None
    return {"values": _values_by_name(graph, att.values), "all_sampled": att.meta["all_sampled"],
            "queries": att.queries, "budget": args.budget, "base": args.base,
            "multiplier": args.multiplier, "scheme": scheme.name, "exact": att.exact}


def cmd_identify(args, admg):
    ok, failing = do_shapley_identifiable(admg)
    return {"identifiable": ok, "failing_singletons": sorted(admg.graph.names[j] for j in failing),
            "queries": 0}


def cmd_interactions(args, admg):
    graph = admg.graph
    if args.order is None or not 1 <= args.order <= graph.d:
        raise CliError("validation", f"--order must lie in 1..{graph.d}", EXIT_VALIDATION)
    game = _load_game(args.game, graph)
    inv = all_classes(graph)
    _validate_table(game, inv, graph)
    before = game.queries
    sii = _run_oracle(lambda: shapley_interactions(inv, game, args.order))
    out = {"interactions": {_key(graph, U): v for U, v in sii.items()}, "order": args.order,
           "r": inv.r}
    if args.n_shapley:
        ns = n_shapley(sii, args.order, graph.d, empty_value=game.evaluate(0))
        out["n_shapley"] = {_key(graph, U): v for U, v in ns.values.items()}
    out["queries"] = game.queries - before
    return out


def cmd_report(args, admg):
    graph = admg.graph
    game = _load_game(args.game, graph)
    inv = all_classes(graph)
    _validate_table(game, inv, graph)
    truth = _run_oracle(lambda: exact_values(inv, game)).values
    norm = float(truth @ truth) or 1.0
    seed = 0 if args.seed is None else args.seed
    rows = []
    for ratio in args.ratios:
        m = max(1, int(math.floor(ratio * inv.r + 0.5)))
        errs = []
        for rep in range(args.repeats):
            est = do_estimator(m, game, graph, base=args.base, k=args.multiplier,
                               seed=[seed, rep])
            errs.append(float((est.values - truth) @ (est.values - truth)) / norm)
        rows.append({"ratio": ratio, "budget": m, "median_rel_mse": float(np.median(errs)),
                     "mean_rel_mse": float(np.mean(errs))})
    return {"plot_data": rows, "r": inv.r, "queries": game.queries, "repeats": args.repeats,
            "base": args.base}


COMMANDS = {
    "classes": cmd_classes,
    "exact": cmd_exact,
    "estimate": cmd_estimate,
    "identify": cmd_identify,
    "interactions": cmd_interactions,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", required=True, help="graph JSON file")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--seed", type=int)

    game = argparse.ArgumentParser(add_help=False)
    game.add_argument("--game", required=True, help="game JSON file")
    game.add_argument("--scheme", default="shapley",
                      help="shapley | banzhaf | beta:ALPHA,BETA | weighted-banzhaf:W")

    est = argparse.ArgumentParser(add_help=False)
    est.add_argument("--base", choices=BASE_ESTIMATORS, default="regression")
    est.add_argument("--multiplier", type=int, default=8)

    parser = argparse.ArgumentParser(prog="doshap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("classes", parents=[common], help="list equivalence classes")
    sub.add_parser("exact", parents=[common, game], help="exact attributions")
    p = sub.add_parser("estimate", parents=[common, game, est], help="budgeted estimate")
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--require-identifiable", action="store_true")
    sub.add_parser("identify", parents=[common], help="singleton identifiability check")
    p = sub.add_parser("interactions", parents=[common, game], help="Shapley interaction indices")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--n-shapley", action="store_true", help="also emit n-Shapley values")
    p = sub.add_parser("report", parents=[common, game, est], help="error-vs-budget table")
    p.add_argument("--plot-data", action="store_true", required=True)
    p.add_argument("--ratios", type=lambda s: [float(x) for x in s.split(",")],
                   default=[0.25, 0.5, 0.75, 1.0, 1.5, 2.0])
    p.add_argument("--repeats", type=int, default=20)
    return parser


def _csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["field", "key", "value"])
    for field in sorted(report):
        value = report[field]
        if isinstance(value, dict):
            for key in sorted(value):
                writer.writerow([field, key, repr(value[key]) if isinstance(value[key], float) else value[key]])
        elif isinstance(value, list):
            for i, item in enumerate(value):
                writer.writerow([field, i, json.dumps(item, sort_keys=True)])
        else:
            writer.writerow([field, "", repr(value) if isinstance(value, float) else value])
    return buf.getvalue()


def render(report: dict, fmt: str = "json") -> str:
    if fmt == "csv":
        return _csv(report)
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def run(args) -> tuple[int, str]:
    try:
        admg = load_graph(args.graph)
        report = COMMANDS[args.command](args, admg)
        report.update({"command": args.command, "d": admg.graph.d, "seed": args.seed,
                       "pruned": list(admg.graph.pruned)})
        return 0, render(report, args.format)
    except CliError as exc:
        body = {"error": exc.kind, "message": str(exc), **exc.extra}
        return exc.code, json.dumps(body, sort_keys=True) + "\n"


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    code, text = run(args)
    if code == 0 and args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
