"""Finite k-skeletons: k colored directed multigraphs on a shared vertex set.

Conventions: an edge ``e`` points from ``e.source`` to ``e.range``, and a
path ``ef`` is composable when ``s(e) == r(f)``.  Paths are written outer
edge first, so ``r(path) = r(path[0])`` and ``s(path) = s(path[-1])``.

The order of vertices and edges in the input determines every basis used
downstream.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

EdgePath = tuple["Edge", ...]


class SkeletonFormatError(ValueError):
    """Malformed skeleton data (dangling reference, duplicate id, bad color)."""


@dataclass(frozen=True)
class Edge:
    id: str
    color: int
    range: str
    source: str


@dataclass
class ValidationReport:
    ok: bool = True
    violations: list[dict[str, Any]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)

    def add(self, kind: str, **details: Any) -> None:
        self.ok = False
        self.violations.append({"kind": kind, **details})

    def to_dict(self) -> dict[str, Any]:
        return {"ok": self.ok, "violations": self.violations, "notes": self.notes}


@dataclass(frozen=True, eq=False)
class Skeleton:
    k: int
    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        if not isinstance(self.k, int) or self.k < 1:
            raise SkeletonFormatError(f"k must be a positive integer, got {self.k!r}")
        if len(set(self.vertices)) != len(self.vertices):
            dup = [v for v in self.vertices if self.vertices.count(v) > 1]
            raise SkeletonFormatError(f"duplicate vertex id {dup[0]!r}")
        known = set(self.vertices)
        seen: set[tuple[int, str]] = set()
        for e in self.edges:
            if not isinstance(e.color, int) or not 1 <= e.color <= self.k:
                raise SkeletonFormatError(f"edge {e.id!r}: color {e.color!r} outside 1..{self.k}")
            for end in (e.range, e.source):
                if end not in known:
                    raise SkeletonFormatError(f"edge {e.id!r}: unknown vertex {end!r}")
            if (e.color, e.id) in seen:
                raise SkeletonFormatError(f"duplicate edge id {e.id!r} in color {e.color}")
            seen.add((e.color, e.id))
        object.__setattr__(self, "_path_cache", {})

    @property
    def colors(self) -> range:
        return range(1, self.k + 1)

    @cached_property
    def vertex_index(self) -> dict[str, int]:
        return {v: n for n, v in enumerate(self.vertices)}

    @cached_property
    def _by_color(self) -> dict[int, tuple[Edge, ...]]:
        return {i: tuple(e for e in self.edges if e.color == i) for i in self.colors}

    def edges_of_color(self, i: int) -> tuple[Edge, ...]:
        self._check_color(i)
        return self._by_color[i]

    @cached_property
    def _edge_position(self) -> dict[Edge, int]:
        return {e: n for i in self.colors for n, e in enumerate(self._by_color[i])}

    def edge_position(self, e: Edge) -> int:
        """Index of ``e`` within the edge list of its color."""
        return self._edge_position[e]

    def edges_between(self, i: int, v: str, w: str) -> tuple[Edge, ...]:
        """Color-i edges with range v and source w, in color order (basis of C^{v E_i w})."""
        return tuple(p[0] for p in self.paths((i,), v, w))

    def paths(self, colors: Sequence[int], v: str, w: str) -> tuple[EdgePath, ...]:
        """Composable paths with the given color word from ``w`` to ``v``.

        Ordered lexicographically by the per-color positions of the edges,
        outer edge most significant.
        """
        key = (tuple(colors), v, w)
        cache = self._path_cache  # type: ignore[attr-defined]
        if key not in cache:
            for c in colors:
                self._check_color(c)
            for x in (v, w):
                if x not in self.vertex_index:
                    raise KeyError(f"unknown vertex {x!r}")
            cache[key] = tuple(self._walk(tuple(colors), v, w))
        return cache[key]

    def _walk(self, colors: tuple[int, ...], v: str, w: str) -> Iterable[EdgePath]:
        if not colors:
            return
        first, rest = colors[0], colors[1:]
        for e in self._by_color[first]:
            if e.range != v:
                continue
            if not rest:
                if e.source == w:
                    yield (e,)
                continue
            for tail in self._walk(rest, e.source, w):
                yield (e,) + tail

    def path_index(self, colors: Sequence[int], v: str, w: str) -> dict[EdgePath, int]:
        key = ("index", tuple(colors), v, w)
        cache = self._path_cache  # type: ignore[attr-defined]
        if key not in cache:
            cache[key] = {p: n for n, p in enumerate(self.paths(colors, v, w))}
        return cache[key]

    def memo(self, key: Any, factory: Any) -> Any:
        """Per-skeleton cache for derived index structures."""
        cache = self._path_cache  # type: ignore[attr-defined]
        if key not in cache:
            cache[key] = factory()
        return cache[key]

    def vertex_pairs(self) -> Iterable[tuple[str, str]]:
        return itertools.product(self.vertices, self.vertices)

    def _check_color(self, i: int) -> None:
        if not 1 <= i <= self.k:
            raise ValueError(f"color {i} outside 1..{self.k}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "vertices": list(self.vertices),
            "edges": [
                {"id": e.id, "color": e.color, "range": e.range, "source": e.source}
                for e in self.edges
            ],
        }

    @classmethod
    def from_dict(cls, data: Any) -> "Skeleton":
        try:
            k = data["k"]
            vertices = tuple(str(v) for v in data["vertices"])
            edges = tuple(
                Edge(id=str(e["id"]), color=e["color"], range=str(e["range"]), source=str(e["source"]))
                for e in data["edges"]
            )
        except (KeyError, TypeError) as exc:
            raise SkeletonFormatError(f"malformed skeleton document: {exc!r}") from exc
        return cls(k=k, vertices=vertices, edges=edges)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Skeleton):
            return NotImplemented
        return (self.k, self.vertices, self.edges) == (other.k, other.vertices, other.edges)

    def __hash__(self) -> int:
        return hash((self.k, self.vertices, self.edges))


def load_skeleton(path: str | Path) -> Skeleton:
    with open(path, encoding="utf-8") as fh:
        return Skeleton.from_dict(json.load(fh))


def single_vertex(counts: Sequence[int], vertex: str = "v") -> Skeleton:
    """Single-vertex skeleton with ``counts[i-1]`` loops of color i.

    Loop ids are ``a1, a2, ...`` for color 1, ``b1, ...`` for color 2 and so on.
    """
    letters = "abcdefghijklmnopqrstuvwxyz"
    edges = tuple(
        Edge(id=f"{letters[c]}{n + 1}", color=c + 1, range=vertex, source=vertex)
        for c, count in enumerate(counts)
        for n in range(count)
    )
    return Skeleton(k=len(counts), vertices=(vertex,), edges=edges)


def from_adjacency(matrices: Sequence[Any], vertices: Sequence[str] | None = None) -> Skeleton:
    """Skeleton whose color-i graph has ``matrices[i-1][v, w]`` edges from w to v.

    Edges are listed color by color, then row-major over (range, source).
    """
    mats = [np.asarray(m, dtype=int) for m in matrices]
    n = mats[0].shape[0]
    if vertices is None:
        vertices = [f"v{r}" for r in range(n)]
    letters = "abcdefghijklmnopqrstuvwxyz"
    edges = []
    for c, m in enumerate(mats):
        if m.shape != (n, n) or (m < 0).any():
            raise SkeletonFormatError("adjacency matrices must be square, nonnegative and of equal size")
        count = 0
        for r, w in itertools.product(range(n), range(n)):
            for _ in range(int(m[r, w])):
                count += 1
                edges.append(Edge(f"{letters[c]}{count}", c + 1, vertices[r], vertices[w]))
    return Skeleton(k=len(mats), vertices=tuple(vertices), edges=tuple(edges))


def adjacency_matrix(s: Skeleton, i: int) -> np.ndarray:
    """M_i(v, w) = number of color-i edges with range v and source w."""
    edges = s.edges_of_color(i)
    n = len(s.vertices)
    m = np.zeros((n, n), dtype=np.int64)
    for e in edges:
        m[s.vertex_index[e.range], s.vertex_index[e.source]] += 1
    return m


def two_color_paths(s: Skeleton, i: int, j: int, v: str, w: str) -> list[tuple[Edge, Edge]]:
    """Paths ef in v E_i E_j w, ordered by (position of e, position of f)."""
    if i == j:
        raise ValueError("two_color_paths needs distinct colors")
    return [p for p in s.paths((i, j), v, w)]  # type: ignore[misc]


def validate_skeleton(s: Skeleton) -> ValidationReport:
    report = ValidationReport()
    for i in s.colors:
        receiving = {e.range for e in s.edges_of_color(i)}
        for v in s.vertices:
            if v not in receiving:
                report.add("source", vertex=v, color=i)
    for i, j in itertools.combinations(s.colors, 2):
        for v, w in s.vertex_pairs():
            ij = len(s.paths((i, j), v, w))
            ji = len(s.paths((j, i), v, w))
            if ij != ji:
                report.add("path_count", v=v, w=w, i=i, j=j, count_ij=ij, count_ji=ji)
    return report
