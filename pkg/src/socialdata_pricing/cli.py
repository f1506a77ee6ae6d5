"""Command-line entry point.

Exit codes: 0 success, 1 model or validation error (a JSON error record is
written to stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import experiments as ex
from .errors import AssumptionViolated, PricingError
from .graph import GraphSource, SocialGraph, graph_stats, load_edge_list, sample_edges_path
from .model import MarketParams, build_matrices, check_assumption1, validate_model
from .sequential import (
    Fixed, PriceConvention, RoundRobinFair, contraction_rate, limit_demand,
    revenue_closed_form, run_sequential, truncation_tail_bound, welfare_dynamic,
)
from .simultaneous import revenue_is_concave, run_greedy, solve_simultaneous
from .static import solve_static

SUBCOMMANDS = ("validate", "static", "seqdp", "simudp", "greedy", "sweep", "trace", "graph-stats")
SINGLE_INSTANCE = ("validate", "static", "seqdp", "simudp", "greedy")

# dest -> ExperimentConfig field for flags that feed the harness config
CONFIG_FIELDS = {
    "n": "n", "pe": "p_e", "mu_a": "mu_a", "mu_b": "mu_b", "mu_g": "mu_g", "c": "c",
    "periods": "periods", "horizon": "horizon", "runs": "runs", "seed": "base_seed",
    "graph": "graph_path", "convention": "convention", "workers": "workers",
    "zero_ties": "zero_ties", "normalization": "normalization",
}


class UsageError(Exception):
    pass


@dataclass
class CliInvocation:
    subcommand: str
    flags: dict
    config: ex.ExperimentConfig


def _reals(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated reals, got {text!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int)
    p.add_argument("--pe", type=float)
    p.add_argument("--mu-a", type=float)
    p.add_argument("--mu-b", type=float)
    p.add_argument("--mu-g", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--periods", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--graph", help="edge-list file to sample users from")
    p.add_argument("--manual-graph", help="CSV file holding an explicit symmetric tie matrix")
    p.add_argument("--a", type=_reals, help="intrinsic values a_i: one real or one per user")
    p.add_argument("--b", type=_reals, help="satiation coefficients b_i: one real or one per user")
    p.add_argument("--order", choices=("fixed", "fair"))
    p.add_argument("--convention", choices=("anticipatory", "step4"))
    p.add_argument("--param", choices=("pe", "c", "n", "mu-g"))
    p.add_argument("--grid", type=_reals)
    p.add_argument("--zero-ties", action="store_true", default=None)
    p.add_argument("--normalization", choices=("none", "by_static"))
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--out")
    p.add_argument("--workers", type=int)
    p.add_argument("--config", help="JSON file of flag values (flags given on the command line win)")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="socialdata-pricing", description="Dynamic pricing of social data under network and congestion effects.")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        _add_common(sub.add_parser(name))
    return parser


def _load_config_file(path: str, known: set[str]) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"--config: cannot read {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("--config: file must hold a JSON object")
    unknown = sorted(set(data) - known)
    if unknown:
        raise UsageError(f"--config: unknown keys {', '.join(unknown)}")
    if "grid" in data:
        data["grid"] = _reals(data["grid"])
    for key in ("a", "b"):
        if key in data and not isinstance(data[key], list):
            data[key] = _reals(data[key])
    return data


def parse_args(argv) -> CliInvocation:
    parser = build_parser()
    args = parser.parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("subcommand",)}
    if args.config:
        file_values = _load_config_file(args.config, set(flags) - {"config"})
        for key, value in file_values.items():
            if flags.get(key) is None:
                flags[key] = value
    if args.subcommand == "sweep":
        if flags.get("param") is None:
            raise UsageError("sweep: --param is required")
        if flags["param"] not in ("pe", "c", "n", "mu-g", "p_e", "mu_g"):
            raise UsageError(f"sweep: invalid --param {flags['param']!r}")
        if not flags.get("grid"):
            raise UsageError("sweep: --grid is required")
    values = {field: flags[dest] for dest, field in CONFIG_FIELDS.items() if flags.get(dest) is not None}
    try:
        config = ex.ExperimentConfig(**values)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    return CliInvocation(args.subcommand, flags, config)


def _load_matrix(path: str) -> np.ndarray:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = [[float(v) for v in row] for row in csv.reader(fh) if row and not row[0].startswith("#")]
    except OSError as exc:
        raise UsageError(f"--manual-graph: cannot read {path}: {exc}") from None
    except ValueError as exc:
        raise UsageError(f"--manual-graph: {exc}") from None
    return np.array(rows, dtype=float)


def _expand(values, n: int, flag: str) -> np.ndarray:
    if len(values) == 1:
        return np.full(n, values[0])
    if len(values) != n:
        raise UsageError(f"{flag}: expected 1 or {n} values, got {len(values)}")
    return np.array(values, dtype=float)


def resolve_instance(inv: CliInvocation):
    """(params, graph, provenance) for the single-instance subcommands; no resampling."""
    cfg = inv.config
    seeds = ex.run_seeds(cfg.base_seed, 0)
    if inv.flags.get("manual_graph"):
        try:
            graph = SocialGraph(_load_matrix(inv.flags["manual_graph"]), GraphSource.MANUAL)
        except ValueError as exc:
            raise UsageError(f"--manual-graph: {exc}") from None
        cfg = inv.config = replace(cfg, n=graph.n)
    else:
        graph = ex.sample_graph(cfg, seeds)
    params = ex.sample_params(cfg, seeds["params"])
    a = params.a if inv.flags.get("a") is None else _expand(inv.flags["a"], cfg.n, "--a")
    b = params.b if inv.flags.get("b") is None else _expand(inv.flags["b"], cfg.n, "--b")
    try:
        params = MarketParams(a, b, cfg.c)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return params, graph, {"seeds": seeds, "graph": graph.metadata()}


def _metadata(inv: CliInvocation, extra: dict | None = None) -> dict:
    # the output destination is not part of the computation, so it is not echoed
    flags = {k: v for k, v in inv.flags.items() if v is not None and k != "out"}
    meta = {"subcommand": inv.subcommand, "config": inv.config.to_dict(), "flags": flags}
    if extra:
        meta.update(extra)
    return meta


def _require_assumption(params, graph) -> None:
    report = check_assumption1(params, graph)
    if not report.assumption1_ok:
        raise AssumptionViolated("; ".join(report.warnings))


def _order_policy(inv: CliInvocation):
    return RoundRobinFair() if inv.flags.get("order") == "fair" else Fixed()


def _single(inv: CliInvocation) -> tuple[dict, dict, bool]:
    params, graph, provenance = resolve_instance(inv)
    cfg = inv.config
    if inv.subcommand == "validate":
        mats = build_matrices(params, graph, factorize=False)
        report = validate_model(mats)
        return {"report": report.to_dict()}, provenance, report.assumption1_ok
    _require_assumption(params, graph)
    mats = build_matrices(params, graph)
    if inv.subcommand == "static":
        return {"static": solve_static(mats).to_dict()}, provenance, True
    if inv.subcommand == "seqdp":
        traj = run_sequential(mats, cfg.periods, PriceConvention(cfg.convention), _order_policy(inv))
        rho = contraction_rate(mats)
        result = {"trajectory": traj.to_dict(), "contraction_rate": rho, "limit_demand": limit_demand(mats).tolist()}
        if rho < 1.0:
            result.update(
                revenue_limit=revenue_closed_form(mats),
                utility_limit=welfare_dynamic(mats),
                tail_bound=truncation_tail_bound(mats, cfg.periods),
            )
        return result, provenance, True
    if inv.subcommand == "simudp":
        plan = solve_simultaneous(mats, cfg.horizon, strict=False)
        return {"plan": plan.to_dict(), "revenue_concave": revenue_is_concave(mats, cfg.horizon)}, provenance, True
    traj = run_greedy(mats, cfg.horizon)
    return {"trajectory": traj.to_dict()}, provenance, True


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def dispatch(inv: CliInvocation) -> int:
    caught: list[str] = []
    with warnings.catch_warnings(record=True) as record:
        warnings.simplefilter("always")
        buf = io.StringIO()
        status = 0
        if inv.subcommand in SINGLE_INSTANCE:
            result, provenance, ok = _single(inv)
            status = 0 if ok else 1
            doc = {"metadata": _metadata(inv, provenance), "result": result}
        elif inv.subcommand == "graph-stats":
            path = inv.flags.get("graph")
            try:
                if path:
                    with open(path, encoding="utf-8") as fh:
                        skeleton = load_edge_list(fh)
                else:
                    with sample_edges_path().open(encoding="utf-8") as fh:
                        skeleton = load_edge_list(fh)
            except OSError as exc:
                raise UsageError(f"--graph: {exc}") from None
            stats = graph_stats(skeleton).to_dict()
            stats["self_loops_ignored"] = skeleton.self_loops_ignored
            doc = {"metadata": _metadata(inv), "result": stats}
        else:
            fmt = inv.flags.get("format") or "csv"
            if inv.subcommand == "sweep":
                param = ex.canonical_parameter(inv.flags["param"])
                rows = ex.sweep(inv.config, param, inv.flags["grid"])
                meta = _metadata(inv, ex.sweep_metadata(inv.config, param, inv.flags["grid"]))
            else:
                rows = ex.convergence_trace(inv.config).rows()
                meta = _metadata(inv, {"run_seeds": [ex.run_seeds(inv.config.base_seed, 0)]})
            caught = sorted({str(w.message) for w in record})
            if caught:
                meta["warnings"] = caught
            ex.emit(rows, fmt, buf, meta)
            _write(buf.getvalue(), inv.flags.get("out"))
            return 0
        caught = sorted({str(w.message) for w in record})
    if caught:
        doc["metadata"]["warnings"] = caught
    if inv.subcommand == "simudp" and doc["result"]["plan"]["negative_price_periods"]:
        doc["metadata"].setdefault("warnings", []).append("negative prices (subsidies) in some periods")
    _write(json.dumps(doc, indent=2) + "\n", inv.flags.get("out"))
    if status:
        report = doc["result"]["report"]
        _error_record("AssumptionViolated", "; ".join(report["warnings"]))
    return status


def _error_record(category: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": category, "message": message}) + "\n")


def main(argv=None) -> int:
    try:
        inv = parse_args(sys.argv[1:] if argv is None else argv)
        return dispatch(inv)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return 2
    except PricingError as exc:
        _error_record(exc.category, str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
