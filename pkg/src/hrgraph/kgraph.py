"""Factorisation rules and cubical 2-cocycles over a skeleton.

A factorisation rule stores, for each pair of colors ``i < j`` and each
vertex pair ``(v, w)``, a bijection from ``v E_j E_i w`` onto ``v E_i E_j w``:
``map[r]`` is the index (in the ``(i, j)`` basis) of the image of the r-th
``(j, i)`` path.  The inverse serves for the other direction.

Cube convention.  For a composable triple ``efg`` with colors ``i < j < l``
the two walks that re-order it into ``g'' f'' e''`` are

* ``ef g -> f1 e1 g -> f1 g1 e2 -> g2 f2 e2`` (swap front pair first), and
* ``e fg -> e g1' f1' -> g2' e1' f1' -> g2' f2' e2'`` (swap back pair first).

The walks are associative when they end on the same triple.  A cubical
cocycle must give equal products ``phi(ef) phi(e1 g) phi(f1 g1)`` and
``phi(fg) phi(e g1') phi(e1' f1')``.  The first product collects the faces
through the range vertex missing color i, through the source vertex missing
color j and through the range vertex missing color l; the second the
complementary three faces.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any, Iterator, Mapping

import numpy as np

from .skeleton import Edge, EdgePath, Skeleton, ValidationReport

BlockKey = tuple[int, int, str, str]

PHASE_TOL = 1e-10
MODULUS_TOL = 1e-12
DEFAULT_BUDGET = 10_000_000


class FactorisationFormatError(ValueError):
    pass


class SearchTruncated(RuntimeError):
    """The enumeration budget ran out before the search space was exhausted."""

    def __init__(self, found: int, nodes: int):
        super().__init__(f"search truncated after {nodes} nodes ({found} rules emitted)")
        self.found = found
        self.nodes = nodes


def block_keys(s: Skeleton) -> list[BlockKey]:
    """All (i, j, v, w) with i < j, in enumeration order."""
    return [
        (i, j, v, w)
        for i, j in itertools.combinations(s.colors, 2)
        for v, w in s.vertex_pairs()
    ]


@dataclass(frozen=True, eq=False)
class FactorisationRule:
    skeleton: Skeleton
    maps: Mapping[BlockKey, tuple[int, ...]]

    def __post_init__(self) -> None:
        s = self.skeleton
        full = {}
        for key in block_keys(s):
            i, j, v, w = key
            n = len(s.paths((i, j), v, w))
            if n != len(s.paths((j, i), v, w)):
                raise FactorisationFormatError(f"block {key}: path counts differ, not a skeleton")
            m = tuple(self.maps.get(key, ()))
            if len(m) != n:
                raise FactorisationFormatError(f"block {key}: expected {n} entries, got {len(m)}")
            if sorted(m) != list(range(n)):
                raise FactorisationFormatError(f"block {key}: map is not a bijection")
            full[key] = m
        extra = set(self.maps) - set(full)
        if extra:
            raise FactorisationFormatError(f"unknown blocks {sorted(extra)}")
        object.__setattr__(self, "maps", full)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FactorisationRule):
            return NotImplemented
        return self.skeleton == other.skeleton and dict(self.maps) == dict(other.maps)

    def encoding(self) -> tuple[int, ...]:
        return tuple(itertools.chain.from_iterable(self.maps[key] for key in block_keys(self.skeleton)))

    def swap(self, x: Edge, y: Edge) -> tuple[Edge, Edge]:
        """Refactor the composable pair ``xy`` as ``y'x'`` with colors exchanged."""
        return _swap(self.skeleton, self.maps, self.inverse_maps, x, y)  # type: ignore[return-value]

    @cached_property
    def inverse_maps(self) -> dict[BlockKey, dict[int, int]]:
        return _inverses(self.maps)

    def to_dict(self) -> dict[str, Any]:
        return {
            "blocks": [
                {"i": i, "j": j, "v": v, "w": w, "map": list(m)}
                for (i, j, v, w), m in self.maps.items()
                if m
            ]
        }

    @classmethod
    def from_dict(cls, s: Skeleton, data: Any) -> "FactorisationRule":
        maps: dict[BlockKey, tuple[int, ...]] = {}
        try:
            for b in data["blocks"]:
                key = (int(b["i"]), int(b["j"]), str(b["v"]), str(b["w"]))
                if key in maps:
                    raise FactorisationFormatError(f"duplicate block {key}")
                maps[key] = tuple(int(x) for x in b["map"])
        except (KeyError, TypeError) as exc:
            raise FactorisationFormatError(f"malformed factorisation document: {exc!r}") from exc
        return cls(s, maps)


def load_factorisation(s: Skeleton, path: str | Path) -> FactorisationRule:
    with open(path, encoding="utf-8") as fh:
        return FactorisationRule.from_dict(s, json.load(fh))


def flip_factorisation(s: Skeleton) -> FactorisationRule:
    """The coordinate flip ``fe -> ef`` of a single-vertex skeleton."""
    if len(s.vertices) != 1:
        raise ValueError("the flip factorisation needs a single-vertex skeleton")
    maps = {}
    for i, j, v, w in block_keys(s):
        codomain = s.path_index((i, j), v, w)
        maps[(i, j, v, w)] = tuple(codomain[(e, f)] for f, e in s.paths((j, i), v, w))
    return FactorisationRule(s, maps)


def _inverses(maps: Mapping[BlockKey, Any]) -> dict[BlockKey, dict[int, int]]:
    return {key: {c: r for r, c in enumerate(m) if c is not None and c >= 0} for key, m in maps.items()}


def _swap(s: Skeleton, maps, inverses, x: Edge, y: Edge) -> tuple[Edge, Edge] | None:
    # partial maps use -1 for unassigned entries; the result is then None
    a, b = x.color, y.color
    v, w = x.range, y.source
    pair = (x, y)
    if a < b:
        c = s.path_index((a, b), v, w)[pair]
        r = inverses[(a, b, v, w)].get(c)
        if r is None:
            return None
        return s.paths((b, a), v, w)[r]  # type: ignore[return-value]
    r = s.path_index((a, b), v, w)[pair]
    c = maps[(b, a, v, w)][r]
    if c < 0:
        return None
    return s.paths((b, a), v, w)[c]  # type: ignore[return-value]


def _cubes(s: Skeleton, colors: tuple[int, int, int]) -> list[EdgePath]:
    return s.memo(
        ("cubes", colors),
        lambda: [p for v, w in s.vertex_pairs() for p in s.paths(colors, v, w)],
    )


def _walks(s: Skeleton, maps, inverses, cube: EdgePath):
    """Both re-orderings of ``cube``; ``None`` entries where a partial map is unassigned.

    Returns ``(end_a, squares_a, end_b, squares_b)`` where the squares are
    the (lower color first) pairs visited by each walk.
    """
    e, f, g = cube
    squares_a = [(e, f)]
    step = _swap(s, maps, inverses, e, f)
    end_a = None
    if step is not None:
        f1, e1 = step
        squares_a.append((e1, g))
        step = _swap(s, maps, inverses, e1, g)
        if step is not None:
            g1, e2 = step
            squares_a.append((f1, g1))
            step = _swap(s, maps, inverses, f1, g1)
            if step is not None:
                g2, f2 = step
                end_a = (g2, f2, e2)
    squares_b = [(f, g)]
    step = _swap(s, maps, inverses, f, g)
    end_b = None
    if step is not None:
        g1b, f1b = step
        squares_b.append((e, g1b))
        step = _swap(s, maps, inverses, e, g1b)
        if step is not None:
            g2b, e1b = step
            squares_b.append((e1b, f1b))
            step = _swap(s, maps, inverses, e1b, f1b)
            if step is not None:
                f2b, e2b = step
                end_b = (g2b, f2b, e2b)
    return end_a, squares_a, end_b, squares_b


def validate_factorisation(s: Skeleton, F: FactorisationRule) -> ValidationReport:
    if F.skeleton != s:
        raise FactorisationFormatError("factorisation rule belongs to a different skeleton")
    report = ValidationReport()
    if s.k < 3:
        report.notes.append("k < 3: no 3-cubes, associativity is vacuous")
        return report
    inverses = F.inverse_maps
    for colors in itertools.combinations(s.colors, 3):
        for cube in _cubes(s, colors):
            end_a, _, end_b, _ = _walks(s, F.maps, inverses, cube)
            if end_a != end_b:
                report.add(
                    "associativity",
                    colors=list(colors),
                    path=[x.id for x in cube],
                    front_first=[x.id for x in end_a],  # type: ignore[union-attr]
                    back_first=[x.id for x in end_b],  # type: ignore[union-attr]
                )
    return report


@dataclass(frozen=True, eq=False)
class CubicalCocycle:
    """Unit complex numbers on commuting squares, indexed by the (i, j) basis, i < j."""

    skeleton: Skeleton
    phases: Mapping[BlockKey, np.ndarray]

    def value(self, e: Edge, f: Edge) -> complex:
        s = self.skeleton
        key = (e.color, f.color, e.range, f.source)
        if key not in self.phases:
            raise KeyError(f"missing phases for block {key}")
        values = self.phases[key]
        idx = s.path_index((e.color, f.color), e.range, f.source)[(e, f)]
        if idx >= len(values):
            raise KeyError(f"missing phase for square {e.id}{f.id}")
        return complex(values[idx])

    @classmethod
    def constant(cls, s: Skeleton, z: complex = 1.0) -> "CubicalCocycle":
        return cls(s, {
            (i, j, v, w): np.full(len(s.paths((i, j), v, w)), complex(z))
            for i, j, v, w in block_keys(s)
        })

    @classmethod
    def from_pair_constants(cls, s: Skeleton, values: Mapping[tuple[int, int], complex]) -> "CubicalCocycle":
        """One constant per color pair (missing pairs get 1)."""
        return cls(s, {
            (i, j, v, w): np.full(len(s.paths((i, j), v, w)), complex(values.get((i, j), 1.0)))
            for i, j, v, w in block_keys(s)
        })

    def to_list(self) -> list[dict[str, Any]]:
        return [
            {"i": i, "j": j, "v": v, "w": w, "index": n, "phase": [z.real, z.imag]}
            for (i, j, v, w), vals in self.phases.items()
            for n, z in enumerate(complex(x) for x in vals)
        ]

    @classmethod
    def from_list(cls, s: Skeleton, data: Any) -> "CubicalCocycle":
        phases = {key: np.full(len(s.paths(key[:2], *key[2:])), np.nan + 0j) for key in block_keys(s)}
        try:
            for item in data:
                key = (int(item["i"]), int(item["j"]), str(item["v"]), str(item["w"]))
                if key not in phases:
                    raise FactorisationFormatError(f"unknown square block {key}")
                re, im = item["phase"]
                phases[key][int(item["index"])] = complex(float(re), float(im))
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            if isinstance(exc, FactorisationFormatError):
                raise
            raise FactorisationFormatError(f"malformed cocycle document: {exc!r}") from exc
        for key, vals in phases.items():
            if np.isnan(vals).any():
                raise FactorisationFormatError(f"missing square value in block {key}")
        return cls(s, phases)


def load_cubical_cocycle(s: Skeleton, path: str | Path) -> CubicalCocycle:
    with open(path, encoding="utf-8") as fh:
        return CubicalCocycle.from_list(s, json.load(fh))


def validate_cubical_cocycle(s: Skeleton, F: FactorisationRule, phi: CubicalCocycle) -> ValidationReport:
    report = ValidationReport()
    for i, j, v, w in block_keys(s):
        n = len(s.paths((i, j), v, w))
        vals = phi.phases.get((i, j, v, w))
        if n and (vals is None or len(vals) < n):
            raise KeyError(f"missing square values in block {(i, j, v, w)}")
        for idx in range(n):
            z = complex(vals[idx])  # type: ignore[index]
            if abs(abs(z) - 1.0) > MODULUS_TOL:
                report.add("modulus", i=i, j=j, v=v, w=w, index=idx, value=[z.real, z.imag])
    if s.k < 3:
        report.notes.append("k < 3: no 3-cubes, cocycle identity is vacuous")
        return report
    inverses = F.inverse_maps
    for colors in itertools.combinations(s.colors, 3):
        for cube in _cubes(s, colors):
            _, squares_a, _, squares_b = _walks(s, F.maps, inverses, cube)
            lhs = math.prod(phi.value(*sq) for sq in squares_a)
            rhs = math.prod(phi.value(*sq) for sq in squares_b)
            if abs(lhs - rhs) > PHASE_TOL:
                report.add("cocycle", colors=list(colors), path=[x.id for x in cube], gap=abs(lhs - rhs))
    return report


def enumerate_factorisations(
    s: Skeleton, limit: int | None = None, budget: int = DEFAULT_BUDGET
) -> Iterator[FactorisationRule]:
    """Yield every valid factorisation rule on ``s`` in lexicographic encoding order.

    Entries are assigned one at a time by depth-first search; after each
    assignment every 3-cube whose walks are fully determined is checked.
    ``budget`` bounds the number of search nodes; running out raises
    :class:`SearchTruncated` after the rules found so far have been yielded.
    """
    sizes = {key: len(s.paths(key[:2], *key[2:])) for key in block_keys(s)}
    keys = [key for key in block_keys(s) if sizes[key]]
    slots = [(key, r) for key in keys for r in range(sizes[key])]
    maps: dict[BlockKey, list[int]] = {key: [-1] * sizes[key] for key in block_keys(s)}
    inverses: dict[BlockKey, dict[int, int]] = {key: {} for key in block_keys(s)}
    relevant = {
        (i, j): [
            cube
            for colors in itertools.combinations(s.colors, 3)
            if i in colors and j in colors
            for cube in _cubes(s, colors)
        ]
        for i, j in itertools.combinations(s.colors, 2)
    }

    def consistent(key: BlockKey) -> bool:
        for cube in relevant[key[:2]]:
            end_a, _, end_b, _ = _walks(s, maps, inverses, cube)
            if end_a is not None and end_b is not None and end_a != end_b:
                return False
        return True

    emitted = 0
    nodes = 0

    def search(depth: int) -> Iterator[FactorisationRule]:
        nonlocal emitted, nodes
        if depth == len(slots):
            emitted += 1
            yield FactorisationRule(s, {key: tuple(m) for key, m in maps.items()})
            return
        key, r = slots[depth]
        used = inverses[key]
        for c in range(sizes[key]):
            if c in used:
                continue
            nodes += 1
            if nodes > budget:
                raise SearchTruncated(emitted, nodes - 1)
            maps[key][r] = c
            used[c] = r
            if consistent(key):
                yield from search(depth + 1)
                if limit is not None and emitted >= limit:
                    return
            del used[c]
            maps[key][r] = -1

    if limit is not None and limit <= 0:
        return
    yield from search(0)


def count_factorisations(s: Skeleton, budget: int = DEFAULT_BUDGET) -> int:
    return sum(1 for _ in enumerate_factorisations(s, budget=budget))
