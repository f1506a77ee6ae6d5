"""Social-tie matrices: Erdos-Renyi generation, edge-list ingestion, sampling."""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

from . import rng as rngmod
from .errors import InvalidProbability, ParseError, TooFewVertices


class GraphSource(str, enum.Enum):
    ER = "ER"
    EDGE_LIST = "EdgeList"
    MANUAL = "Manual"


@dataclass(frozen=True)
class SocialGraph:
    """Symmetric, zero-diagonal, nonnegative tie weights ``g_ij``."""

    ties: np.ndarray
    source: GraphSource = GraphSource.MANUAL
    p_e: float | None = None
    seed: int | None = None
    clamped_draws: int = 0

    def __post_init__(self):
        ties = np.array(self.ties, dtype=float)
        if ties.ndim != 2 or ties.shape[0] != ties.shape[1] or ties.shape[0] < 1:
            raise ValueError(f"tie matrix must be square and non-empty, got {ties.shape}")
        if not np.all(np.isfinite(ties)):
            raise ValueError("tie matrix has non-finite entries")
        if np.any(ties < 0):
            raise ValueError("tie weights must be nonnegative")
        if np.any(np.diag(ties) != 0):
            raise ValueError("tie matrix must have a zero diagonal")
        if not np.array_equal(ties, ties.T):
            raise ValueError("tie matrix must be symmetric")
        ties.setflags(write=False)
        object.__setattr__(self, "ties", ties)

    @property
    def n(self) -> int:
        return self.ties.shape[0]

    def metadata(self) -> dict:
        return {
            "source": self.source.value,
            "n": self.n,
            "p_e": self.p_e,
            "seed": self.seed,
            "negative_draws_clamped": self.clamped_draws,
        }


@dataclass(frozen=True)
class GraphSkeleton:
    """Unweighted undirected graph; edges are stored as ``(i, j)`` with ``i < j``."""

    n: int
    edges: frozenset
    vertex_labels: tuple = ()
    self_loops_ignored: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("skeleton needs at least one vertex")
        for i, j in self.edges:
            if not (0 <= i < j < self.n):
                raise ValueError(f"edge {(i, j)} is not a normalized pair within [0, {self.n})")
        if not self.vertex_labels:
            object.__setattr__(self, "vertex_labels", tuple(range(self.n)))

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)


def _pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(n, k=1)


def _clamped_weights(rng: np.random.Generator, count: int, mu_g: float) -> tuple[np.ndarray, int]:
    w = rngmod.normals(rng, count, mean=mu_g, sd=1.0)
    negative = int(np.count_nonzero(w < 0))
    return np.maximum(w, 0.0), negative


def generate_er(n: int, p_e: float, mu_g: float, seed: int) -> SocialGraph:
    """Erdos-Renyi ties with Normal(mu_g, 1) weights clamped at zero.

    One uniform and one normal are drawn for every unordered pair (row-major
    over the upper triangle) whatever ``p_e`` is, so graphs sharing a seed are
    nested in ``p_e`` and share the weights of common edges.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not (0.0 <= p_e <= 1.0):
        raise InvalidProbability(f"edge probability {p_e} outside [0, 1]")
    iu, ju = _pair_indices(n)
    gen = rngmod.make_rng(seed)
    present = rngmod.uniforms(gen, iu.size) < p_e
    weights, _ = _clamped_weights(gen, iu.size, mu_g)
    clamped = int(np.count_nonzero(present & (weights == 0.0)))
    ties = np.zeros((n, n))
    ties[iu, ju] = np.where(present, weights, 0.0)
    ties += ties.T
    return SocialGraph(ties, GraphSource.ER, p_e=p_e, seed=seed, clamped_draws=clamped)


def load_edge_list(stream: TextIO | Iterable[str]) -> GraphSkeleton:
    """Parse a whitespace-separated edge list ("u v" per line, '#' comments).

    Vertices are relabeled densely in order of first appearance, duplicate
    and reversed edges collapse, and self-loops are counted and skipped.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    labels: dict[int, int] = {}
    edges: set[tuple[int, int]] = set()
    self_loops = 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise ParseError(lineno, raw.rstrip("\n"), "expected two vertex ids")
        try:
            u, v = (int(t) for t in tokens)
        except ValueError:
            raise ParseError(lineno, raw.rstrip("\n"), "non-integer vertex id") from None
        if u < 0 or v < 0:
            raise ParseError(lineno, raw.rstrip("\n"), "negative vertex id")
        for vertex in (u, v):
            if vertex not in labels:
                labels[vertex] = len(labels)
        if u == v:
            self_loops += 1
            continue
        i, j = labels[u], labels[v]
        edges.add((min(i, j), max(i, j)))
    if not labels:
        raise ParseError(0, "", "edge list contains no edges")
    return GraphSkeleton(
        n=len(labels),
        edges=frozenset(edges),
        vertex_labels=tuple(labels),
        self_loops_ignored=self_loops,
    )


def dump_edge_list(skeleton: GraphSkeleton) -> str:
    """Serialize using the original vertex labels; inverse of ``load_edge_list``."""
    labels = skeleton.vertex_labels
    return "".join(f"{labels[i]} {labels[j]}\n" for i, j in skeleton.sorted_edges())


def sample_subgraph(skeleton: GraphSkeleton, n: int, seed: int) -> GraphSkeleton:
    """Induced subgraph on ``n`` vertices drawn uniformly without replacement."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if n > skeleton.n:
        raise TooFewVertices(f"cannot sample {n} vertices from a graph with {skeleton.n}")
    gen = rngmod.make_rng(seed)
    u = rngmod.uniforms(gen, n)
    pool = list(range(skeleton.n))
    # partial Fisher-Yates
    for t in range(n):
        j = t + min(int(u[t] * (skeleton.n - t)), skeleton.n - t - 1)
        pool[t], pool[j] = pool[j], pool[t]
    chosen = sorted(pool[:n])
    relabel = {old: new for new, old in enumerate(chosen)}
    edges = frozenset(
        (relabel[i], relabel[j]) for i, j in skeleton.edges if i in relabel and j in relabel
    )
    labels = tuple(skeleton.vertex_labels[v] for v in chosen)
    return GraphSkeleton(n=n, edges=edges, vertex_labels=labels)


def assign_ties(skeleton: GraphSkeleton, mu_g: float, seed: int) -> SocialGraph:
    """Weight each skeleton edge with a Normal(mu_g, 1) draw clamped at zero."""
    edges = skeleton.sorted_edges()
    gen = rngmod.make_rng(seed)
    weights, clamped = _clamped_weights(gen, len(edges), mu_g)
    ties = np.zeros((skeleton.n, skeleton.n))
    if edges:
        idx = np.array(edges)
        ties[idx[:, 0], idx[:, 1]] = weights
        ties[idx[:, 1], idx[:, 0]] = weights
    return SocialGraph(ties, GraphSource.EDGE_LIST, seed=seed, clamped_draws=clamped)


@dataclass(frozen=True)
class GraphStats:
    tie_count: int
    edge_probability: float
    n: int = field(default=0, compare=False)

    def to_dict(self) -> dict:
        return {"n": self.n, "tie_count": self.tie_count, "edge_probability": self.edge_probability}


def graph_stats(graph: SocialGraph | GraphSkeleton) -> GraphStats:
    if isinstance(graph, GraphSkeleton):
        n, count = graph.n, len(graph.edges)
    else:
        n = graph.n
        iu, ju = _pair_indices(n)
        count = int(np.count_nonzero(graph.ties[iu, ju] > 0))
    pairs = n * (n - 1) // 2
    return GraphStats(count, count / pairs if pairs else 0.0, n)


def sample_edges_path():
    """Path of the bundled 20-vertex, 31-edge synthetic edge list."""
    from importlib.resources import files

    return files(__package__).joinpath("data/sample_edges.txt")
