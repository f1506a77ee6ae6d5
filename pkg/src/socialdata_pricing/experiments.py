"""Seeded Monte-Carlo harness: sampled instances, parameter sweeps, traces, CSV/JSON output."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from typing import Iterable, Sequence, TextIO

import numpy as np

from . import rng as rngmod
from .errors import AssumptionUnsatisfiable, DominanceViolation, SingularMatrix
from .graph import SocialGraph, GraphSource, assign_ties, generate_er, load_edge_list, sample_subgraph
from .model import MarketParams, build_matrices, check_assumption1, cumulative_utilities, gross_utility, validate_model
from .sequential import Fixed, PriceConvention, RoundRobinFair, revenue_closed_form, run_sequential, welfare_dynamic
from .simultaneous import run_greedy, solve_simultaneous
from .static import solve_static

METRICS = ("Pi_s", "Pi_d", "U_s", "U_d", "Pi_simu", "Pi_greedy")
SWEEP_PARAMETERS = ("p_e", "c", "n", "mu_g")
PARAM_ALIASES = {"pe": "p_e", "mu-g": "mu_g", "mug": "mu_g"}
CSV_COLUMNS = ("parameter", "value", "metric", "mean", "stderr", "runs", "warnings")
SIGNIFICANT = 12
DOMINANCE_RTOL = 1e-9


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 50
    p_e: float = 0.8
    mu_a: float = 1.0
    mu_b: float = 20.0
    mu_g: float = 8.0
    c: float = 10.0
    periods: int = 50
    horizon: int = 50
    runs: int = 50
    base_seed: int = 0
    graph_path: str | None = None
    zero_ties: bool = False
    convention: str = PriceConvention.ANTICIPATORY.value
    normalization: str = "by_static"
    param_floor: float = 0.01
    max_rejections: int = 100
    workers: int = 1

    def __post_init__(self):
        if self.runs < 1 or self.periods < 1 or self.horizon < 1 or self.n < 1:
            raise ValueError("n, runs, periods and horizon must all be at least 1")
        if self.normalization not in ("none", "by_static"):
            raise ValueError(f"unknown normalization {self.normalization!r}")
        PriceConvention(self.convention)

    def to_dict(self) -> dict:
        return asdict(self)


def canonical_parameter(name: str) -> str:
    name = PARAM_ALIASES.get(name, name)
    if name not in SWEEP_PARAMETERS:
        raise ValueError(f"cannot sweep {name!r}; choose one of {', '.join(SWEEP_PARAMETERS)}")
    return name


def run_seeds(base_seed: int, run_index: int, attempt: int = 0) -> dict[str, int]:
    """Seeds of one sampled instance.

    Each stream seed hashes (base_seed, run_index, attempt, stream). The grid
    position is deliberately not part of the key, so every grid value of a
    sweep sees the same random numbers for a given run (common random numbers).
    """
    return {
        "graph": rngmod.derive_seed(base_seed, run_index, attempt, rngmod.STREAM_GRAPH),
        "weights": rngmod.derive_seed(base_seed, run_index, attempt, rngmod.STREAM_WEIGHTS),
        "params": rngmod.derive_seed(base_seed, run_index, attempt, rngmod.STREAM_PARAMS),
    }


@lru_cache(maxsize=8)
def _skeleton(path: str):
    with open(path, encoding="utf-8") as fh:
        return load_edge_list(fh)


def sample_graph(config: ExperimentConfig, seeds: dict[str, int]) -> SocialGraph:
    if config.zero_ties:
        return SocialGraph(np.zeros((config.n, config.n)), GraphSource.ER, p_e=config.p_e)
    if config.graph_path:
        sub = sample_subgraph(_skeleton(config.graph_path), config.n, seeds["graph"])
        return assign_ties(sub, config.mu_g, seeds["weights"])
    return generate_er(config.n, config.p_e, config.mu_g, seeds["graph"])


def sample_params(config: ExperimentConfig, seed: int) -> MarketParams:
    gen = rngmod.make_rng(seed)
    a = np.maximum(rngmod.normals(gen, config.n, config.mu_a), config.param_floor)
    b = np.maximum(rngmod.normals(gen, config.n, config.mu_b), config.param_floor)
    return MarketParams(a, b, config.c)


def sample_instance(config: ExperimentConfig, run_index: int):
    """(params, graph, seeds, rejections) with the bounded-demand condition satisfied."""
    for attempt in range(config.max_rejections + 1):
        seeds = run_seeds(config.base_seed, run_index, attempt)
        graph = sample_graph(config, seeds)
        params = sample_params(config, seeds["params"])
        if check_assumption1(params, graph).assumption1_ok:
            return params, graph, seeds, attempt
    raise AssumptionUnsatisfiable(
        f"run {run_index}: bounded-demand condition failed {config.max_rejections + 1} times"
    )


@dataclass
class RunRecord:
    run_index: int
    seeds: dict
    rejections: int
    metrics: dict
    fairness_spread: dict
    rho_T: float | None
    warnings: list = field(default_factory=list)

    @property
    def retained(self) -> bool:
        return not self.warnings

    def to_dict(self) -> dict:
        return asdict(self)


def _spread(matrices, periods: int, policy) -> float:
    traj = run_sequential(matrices, periods, PriceConvention.STEP4, policy)
    u = cumulative_utilities(traj.y[-1], traj.payments(), matrices)
    return float(u.max() - u.min())


def run_instance(config: ExperimentConfig, run_index: int) -> RunRecord:
    params, graph, seeds, rejections = sample_instance(config, run_index)
    warnings: list[str] = []
    metrics = dict.fromkeys(METRICS)
    spreads = {"fixed": None, "fair": None}
    try:
        mats = build_matrices(params, graph)
    except SingularMatrix:
        return RunRecord(run_index, seeds, rejections, metrics, spreads, None, ["singular"])

    report = validate_model(mats)
    rho_T = math.sqrt(report.rho_T_squared)
    static = solve_static(mats, strict=False)
    metrics["Pi_s"], metrics["U_s"] = static.revenue, static.welfare
    if static.negative_demand:
        warnings.append("negative_static_demand")
    if report.rho_T_squared < 1.0:
        metrics["Pi_d"] = revenue_closed_form(mats)
        metrics["U_d"] = welfare_dynamic(mats)
        traj = run_sequential(mats, config.periods, PriceConvention(config.convention))
        if traj.negative_demand_periods:
            warnings.append("negative_sequential_demand")
        spreads["fixed"] = _spread(mats, config.periods, Fixed())
        spreads["fair"] = _spread(mats, config.periods, RoundRobinFair())
    else:
        warnings.append("non_contractive")
    plan = solve_simultaneous(mats, config.horizon, strict=False)
    metrics["Pi_simu"] = plan.revenue
    if np.any(plan.x_star < -1e-12):
        warnings.append("negative_simultaneous_demand")
    metrics["Pi_greedy"] = run_greedy(mats, config.horizon).total_revenue
    return RunRecord(run_index, seeds, rejections, metrics, spreads, rho_T, warnings)


def _run_instance_args(args):
    return run_instance(*args)


def run_all(config: ExperimentConfig) -> list[RunRecord]:
    """All runs of ``config`` in run-index order, optionally on worker processes."""
    jobs = [(config, r) for r in range(config.runs)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(_run_instance_args, jobs, chunksize=max(1, len(jobs) // (4 * config.workers))))
    return [run_instance(*job) for job in jobs]


@dataclass(frozen=True)
class SweepRow:
    parameter: str
    value: float
    metric: str
    mean: float | None
    stderr: float | None
    runs: int
    warnings: int


@dataclass
class SweepResult:
    parameter: str
    values: list
    rows: list = field(default_factory=list)
    run_counts: dict = field(default_factory=dict)
    warning_counts: dict = field(default_factory=dict)

    def means(self, metric: str) -> list:
        return [r.mean for r in self.rows if r.metric == metric]


def _mean_stderr(samples: Sequence[float]) -> tuple[float | None, float | None]:
    if not samples:
        return None, None
    arr = np.asarray(samples, dtype=float)
    mean = float(arr.mean())
    stderr = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else None
    return mean, stderr


def _check_dominance(record: RunRecord) -> None:
    m = record.metrics
    for dyn, sta in (("Pi_d", "Pi_s"), ("U_d", "U_s")):
        if m[dyn] < m[sta] - DOMINANCE_RTOL * abs(m[sta]):
            raise DominanceViolation(
                f"run {record.run_index}: {dyn}={m[dyn]!r} below {sta}={m[sta]!r}"
            )


def aggregate(records: Iterable[RunRecord], parameter: str, value: float, normalization: str) -> list[SweepRow]:
    records = list(records)
    kept = [r for r in records if r.retained]
    excluded = len(records) - len(kept)
    for r in kept:
        _check_dominance(r)
    names = list(METRICS)
    series = {name: [r.metrics[name] for r in kept] for name in METRICS}
    if normalization == "by_static":
        for name in METRICS:
            base = "U_s" if name.startswith("U") else "Pi_s"
            series[name + "_norm"] = [r.metrics[name] / r.metrics[base] for r in kept]
            names.append(name + "_norm")
    rows = []
    for name in names:
        mean, stderr = _mean_stderr(series[name])
        rows.append(SweepRow(parameter, float(value), name, mean, stderr, len(kept), excluded))
    return rows


def _with_value(config: ExperimentConfig, parameter: str, value: float) -> ExperimentConfig:
    if parameter == "n":
        return replace(config, n=int(round(value)))
    return replace(config, **{parameter: float(value)})


def monte_carlo(config: ExperimentConfig, parameter: str = "n", value: float | None = None) -> list[SweepRow]:
    value = getattr(config, parameter) if value is None else value
    return aggregate(run_all(config), parameter, value, config.normalization)


def sweep(config: ExperimentConfig, parameter: str, grid: Sequence[float]) -> SweepResult:
    parameter = canonical_parameter(parameter)
    if not grid:
        raise ValueError("sweep grid is empty")
    result = SweepResult(parameter, [float(v) for v in grid])
    for value in grid:
        cfg = _with_value(config, parameter, value)
        records = run_all(cfg)
        rows = aggregate(records, parameter, value, config.normalization)
        result.rows.extend(rows)
        result.run_counts[float(value)] = rows[0].runs
        result.warning_counts[float(value)] = rows[0].warnings
    return result


@dataclass(frozen=True)
class ConvergenceTrace:
    cumulative_revenue: np.ndarray
    cumulative_utility: np.ndarray
    revenue_limit: float
    utility_limit: float
    negative_demand_periods: tuple = ()

    def rows(self) -> list[SweepRow]:
        warn = len(self.negative_demand_periods)
        out = []
        for k, (rev, util) in enumerate(zip(self.cumulative_revenue, self.cumulative_utility), start=1):
            out.append(SweepRow("period", float(k), "cumulative_revenue", float(rev), None, 1, warn))
            out.append(SweepRow("period", float(k), "cumulative_utility", float(util), None, 1, warn))
        out.append(SweepRow("limit", math.inf, "Pi_d", self.revenue_limit, None, 1, warn))
        out.append(SweepRow("limit", math.inf, "U_d", self.utility_limit, None, 1, warn))
        return out


def convergence_trace(config: ExperimentConfig, run_index: int = 0) -> ConvergenceTrace:
    """Cumulative revenue and user utility of one sampled instance, period by period."""
    params, graph, _, _ = sample_instance(config, run_index)
    mats = build_matrices(params, graph)
    traj = run_sequential(mats, config.periods, PriceConvention(config.convention))
    revenue = np.cumsum(traj.per_period_revenue)
    utility = np.array([
        gross_utility(traj.y[k], mats) - traj.per_period_revenue[: k + 1].sum()
        for k in range(traj.periods)
    ])
    return ConvergenceTrace(
        revenue, utility, revenue_closed_form(mats), welfare_dynamic(mats),
        traj.negative_demand_periods,
    )


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), f".{SIGNIFICANT}g")


def _json_number(x):
    if x is None:
        return None
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if not math.isfinite(x):
        return _fmt(x)
    return float(_fmt(x))


def emit(rows: Iterable[SweepRow] | SweepResult, fmt: str, sink: TextIO, metadata: dict | None = None) -> None:
    """Write rows as CSV (fixed header) or JSON; numbers carry 12 significant digits."""
    if isinstance(rows, SweepResult):
        rows = rows.rows
    rows = list(rows)
    fmt = fmt.lower()
    if fmt == "csv":
        if metadata is not None:
            sink.write("# " + json.dumps(metadata, sort_keys=True) + "\n")
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in rows:
            writer.writerow([r.parameter, _fmt(r.value), r.metric, _fmt(r.mean), _fmt(r.stderr), r.runs, r.warnings])
    elif fmt == "json":
        doc = {
            "columns": list(CSV_COLUMNS),
            "rows": [
                {
                    "parameter": r.parameter,
                    "value": _json_number(r.value),
                    "metric": r.metric,
                    "mean": _json_number(r.mean),
                    "stderr": _json_number(r.stderr),
                    "runs": int(r.runs),
                    "warnings": int(r.warnings),
                }
                for r in rows
            ],
        }
        if metadata is not None:
            doc["metadata"] = metadata
        json.dump(doc, sink, indent=2)
        sink.write("\n")
    else:
        raise ValueError(f"unknown output format {fmt!r}")


def _parse_number(text):
    if text is None or text == "":
        return None
    return float(text)


def parse_rows(text: str, fmt: str) -> list[SweepRow]:
    """Inverse of ``emit`` (metadata is discarded)."""
    if fmt == "json":
        doc = json.loads(text)
        return [
            SweepRow(r["parameter"], _parse_number(r["value"]), r["metric"], _parse_number(r["mean"]),
                     _parse_number(r["stderr"]), int(r["runs"]), int(r["warnings"]))
            for r in doc["rows"]
        ]
    lines = [ln for ln in io.StringIO(text) if not ln.startswith("#")]
    reader = csv.DictReader(lines)
    return [
        SweepRow(r["parameter"], float(r["value"]), r["metric"], _parse_number(r["mean"]),
                 _parse_number(r["stderr"]), int(r["runs"]), int(r["warnings"]))
        for r in reader
    ]


def sweep_metadata(config: ExperimentConfig, parameter: str | None = None, grid=None) -> dict:
    return {
        "config": config.to_dict(),
        "parameter": parameter,
        "grid": list(grid) if grid is not None else None,
        "seed_derivation": "SeedSequence(entropy=base_seed, spawn_key=(run_index, attempt, stream))",
        "resampling": "graph and parameter vectors are redrawn for every run",
        "run_seeds": [run_seeds(config.base_seed, r) for r in range(config.runs)],
    }
