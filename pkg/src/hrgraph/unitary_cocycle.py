"""Block-unitary cocycles and the Yang-Baxter-type cocycle identity.

A unitary cocycle assigns to each ``i < j`` and vertex pair ``(v, w)`` a
unitary ``U_{i,j}(v, w)`` whose rows are indexed by the ``v E_i E_j w``
basis and whose columns are indexed by ``v E_j E_i w``.

For colors ``i < j < l`` both sides of the identity map the
``v E_l E_j E_i w`` path space to ``v E_i E_j E_l w``::

    left  = (U_ij x 1)(1 x U_il)(U_jl x 1)
    right = (1 x U_jl)(U_il x 1)(1 x U_ij)

where a factor acting on an adjacent pair of a three-edge path uses the
block selected by the range and source of that pair.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator, Mapping

import numpy as np

from .kgraph import (
    BlockKey,
    CubicalCocycle,
    FactorisationRule,
    block_keys,
    validate_cubical_cocycle,
    validate_factorisation,
)
from .skeleton import Skeleton

UNITARY_TOL = 1e-10

GaugeKey = tuple[int, str, str]


class CocycleFormatError(ValueError):
    pass


def block_shape(s: Skeleton, key: BlockKey) -> int:
    i, j, v, w = key
    return len(s.paths((i, j), v, w))


@dataclass(frozen=True, eq=False)
class UnitaryCocycle:
    skeleton: Skeleton
    blocks: Mapping[BlockKey, np.ndarray]

    def __post_init__(self) -> None:
        s = self.skeleton
        full = {}
        for key in block_keys(s):
            n = block_shape(s, key)
            if key in self.blocks:
                b = np.asarray(self.blocks[key], dtype=complex)
            elif n == 0:
                b = np.zeros((0, 0), dtype=complex)
            else:
                raise CocycleFormatError(f"missing block {key}")
            if b.shape != (n, n):
                raise CocycleFormatError(f"block {key}: shape {b.shape}, expected {(n, n)}")
            full[key] = b
        extra = set(self.blocks) - set(full)
        if extra:
            raise CocycleFormatError(f"unknown blocks {sorted(extra)}")
        object.__setattr__(self, "blocks", full)

    def __getitem__(self, key: BlockKey) -> np.ndarray:
        return self.blocks[key]

    def keys(self) -> list[BlockKey]:
        return list(self.blocks)

    def replace(self, blocks: Mapping[BlockKey, np.ndarray]) -> "UnitaryCocycle":
        return UnitaryCocycle(self.skeleton, {**self.blocks, **blocks})

    def unitarity_defect(self) -> float:
        worst = 0.0
        for b in self.blocks.values():
            if b.size:
                worst = max(worst, float(np.linalg.norm(b.conj().T @ b - np.eye(len(b)))))
        return worst

    def distance(self, other: "UnitaryCocycle") -> float:
        """Largest operator-norm distance between corresponding blocks."""
        return max(
            (float(np.linalg.norm(self.blocks[k] - other.blocks[k], 2)) for k in self.blocks if self.blocks[k].size),
            default=0.0,
        )

    def to_dict(self) -> dict[str, Any]:
        out = []
        for (i, j, v, w), b in self.blocks.items():
            if not b.size:
                continue
            out.append({
                "i": i, "j": j, "v": v, "w": w,
                "rows": b.shape[0], "cols": b.shape[1],
                "data": [[float(z.real), float(z.imag)] for z in b.ravel()],
            })
        return {"blocks": out}

    @classmethod
    def from_dict(cls, s: Skeleton, data: Any) -> "UnitaryCocycle":
        blocks: dict[BlockKey, np.ndarray] = {}
        try:
            for item in data["blocks"]:
                key = (int(item["i"]), int(item["j"]), str(item["v"]), str(item["w"]))
                rows, cols = int(item["rows"]), int(item["cols"])
                flat = np.array([complex(float(re), float(im)) for re, im in item["data"]], dtype=complex)
                if flat.size != rows * cols:
                    raise CocycleFormatError(f"block {key}: {flat.size} entries for {rows}x{cols}")
                blocks[key] = flat.reshape(rows, cols)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, CocycleFormatError):
                raise
            raise CocycleFormatError(f"malformed unitary cocycle document: {exc!r}") from exc
        return cls(s, blocks)


def load_unitary_cocycle(s: Skeleton, path: str | Path) -> UnitaryCocycle:
    with open(path, encoding="utf-8") as fh:
        return UnitaryCocycle.from_dict(s, json.load(fh))


def assemble_block(s: Skeleton, i: int, j: int, blocks: Mapping[tuple[str, str], np.ndarray]) -> np.ndarray:
    """Assemble per-(v, w) blocks into one operator on all color-(j, i) paths.

    The full path spaces are ordered as the concatenation of the (v, w)
    subspaces in vertex-pair order, so the result is block diagonal.
    """
    sizes = []
    for v, w in s.vertex_pairs():
        n = len(s.paths((i, j), v, w))
        if n != len(s.paths((j, i), v, w)):
            raise ValueError(f"path counts differ at {(v, w)}")
        b = np.asarray(blocks.get((v, w), np.zeros((0, 0))), dtype=complex)
        if b.shape != (n, n):
            raise ValueError(f"block {(v, w)}: shape {b.shape}, expected {(n, n)}")
        sizes.append(b)
    total = sum(len(b) for b in sizes)
    out = np.zeros((total, total), dtype=complex)
    at = 0
    for b in sizes:
        n = len(b)
        out[at:at + n, at:at + n] = b
        at += n
    return out


def from_kgraph(s: Skeleton, F: FactorisationRule, phi: CubicalCocycle | None = None) -> UnitaryCocycle:
    """``U_{i,j}(v, w) = diag(phi) @ P`` with ``P`` the permutation matrix of ``F_{ij}(v, w)``."""
    if phi is None:
        phi = CubicalCocycle.constant(s)
    report = validate_factorisation(s, F)
    if not report.ok:
        raise ValueError(f"invalid factorisation rule: {report.violations[:3]}")
    report = validate_cubical_cocycle(s, F, phi)
    if not report.ok:
        raise ValueError(f"invalid cubical cocycle: {report.violations[:3]}")
    blocks = {}
    for key in block_keys(s):
        m = F.maps[key]
        b = np.zeros((len(m), len(m)), dtype=complex)
        phases = np.asarray(phi.phases.get(key, ()), dtype=complex)
        for r, c in enumerate(m):
            b[c, r] = phases[c]
        blocks[key] = b
    return UnitaryCocycle(s, blocks)


def flip_cocycle(s: Skeleton, F: FactorisationRule) -> UnitaryCocycle:
    return from_kgraph(s, F, None)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def random_cocycle(s: Skeleton, rng: np.random.Generator) -> UnitaryCocycle:
    """Independent random unitary blocks; generically not a cocycle when k >= 3."""
    return UnitaryCocycle(s, {key: random_unitary(block_shape(s, key), rng) for key in block_keys(s)})


# -- triple operators ---------------------------------------------------------

@dataclass(frozen=True)
class _Pattern:
    """Where each block entry lands in a pair operator on three-edge paths."""

    shape: tuple[int, int]
    parts: tuple[tuple[BlockKey, np.ndarray, np.ndarray, np.ndarray, np.ndarray], ...]

    def build(self, blocks: Mapping[BlockKey, np.ndarray]) -> np.ndarray:
        out = np.zeros(self.shape, dtype=complex)
        for key, rows, cols, brow, bcol in self.parts:
            b = blocks.get(key)
            if b is not None:
                out[rows, cols] = b[brow, bcol]
        return out

    def pullback(self, grad: np.ndarray, into: dict[BlockKey, np.ndarray]) -> None:
        """Accumulate the block-entry gradient from a gradient on the built operator."""
        for key, rows, cols, brow, bcol in self.parts:
            np.add.at(into[key], (brow, bcol), grad[rows, cols])


def _pattern(s: Skeleton, domain: tuple[int, int, int], pos: int, v: str, w: str) -> _Pattern:
    def make() -> _Pattern:
        codomain = list(domain)
        codomain[pos], codomain[pos + 1] = codomain[pos + 1], codomain[pos]
        lo, hi = domain[pos + 1], domain[pos]
        if lo >= hi:
            raise ValueError("pair operators only map (higher, lower) color pairs")
        dom_paths = s.paths(domain, v, w)
        cod_index = s.path_index(tuple(codomain), v, w)
        acc: dict[BlockKey, list[list[int]]] = {}
        for col, path in enumerate(dom_paths):
            x, y = path[pos], path[pos + 1]
            a, b = x.range, y.source
            key = (lo, hi, a, b)
            bcol = s.path_index((hi, lo), a, b)[(x, y)]
            for brow, (x2, y2) in enumerate(s.paths((lo, hi), a, b)):
                new = list(path)
                new[pos], new[pos + 1] = x2, y2
                row = cod_index[tuple(new)]
                acc.setdefault(key, [[], [], [], []])
                for lst, val in zip(acc[key], (row, col, brow, bcol)):
                    lst.append(val)
        parts = tuple(
            (key, *(np.array(lst, dtype=np.intp) for lst in lists))
            for key, lists in acc.items()
        )
        return _Pattern((len(cod_index), len(dom_paths)), parts)  # type: ignore[arg-type]

    return s.memo(("pattern", domain, pos, v, w), make)


def triple_keys(s: Skeleton) -> list[tuple[int, int, int, str, str]]:
    """(i, j, l, v, w) with i < j < l and a nonempty three-edge path space."""
    return [
        (i, j, l, v, w)
        for i, j, l in itertools.combinations(s.colors, 3)
        for v, w in s.vertex_pairs()
        if s.paths((i, j, l), v, w)
    ]


def _factor_patterns(s: Skeleton, i: int, j: int, l: int, v: str, w: str):
    """Patterns for the three left factors then the three right factors, outermost first."""
    left = (
        _pattern(s, (j, i, l), 0, v, w),   # U_ij x 1
        _pattern(s, (j, l, i), 1, v, w),   # 1 x U_il
        _pattern(s, (l, j, i), 0, v, w),   # U_jl x 1
    )
    right = (
        _pattern(s, (i, l, j), 1, v, w),   # 1 x U_jl
        _pattern(s, (l, i, j), 0, v, w),   # U_il x 1
        _pattern(s, (l, j, i), 1, v, w),   # 1 x U_ij
    )
    return left, right


@dataclass(frozen=True)
class TripleOperator:
    i: int
    j: int
    l: int
    v: str
    w: str
    side: str
    matrix: np.ndarray


def triple_operators(U: UnitaryCocycle, i: int, j: int, l: int, v: str, w: str) -> tuple[TripleOperator, TripleOperator]:
    left, right = _factor_patterns(U.skeleton, i, j, l, v, w)
    lm = left[0].build(U.blocks) @ left[1].build(U.blocks) @ left[2].build(U.blocks)
    rm = right[0].build(U.blocks) @ right[1].build(U.blocks) @ right[2].build(U.blocks)
    return (
        TripleOperator(i, j, l, v, w, "left", lm),
        TripleOperator(i, j, l, v, w, "right", rm),
    )


def _differences(U: UnitaryCocycle) -> Iterator[tuple[tuple[int, int, int, str, str], np.ndarray]]:
    for key in triple_keys(U.skeleton):
        lhs, rhs = triple_operators(U, *key)
        yield key, lhs.matrix - rhs.matrix


def residual_report(U: UnitaryCocycle) -> dict[str, Any]:
    per = []
    total = 0.0
    for (i, j, l, v, w), diff in _differences(U):
        r = float(np.linalg.norm(diff))
        total += r * r
        per.append({"i": i, "j": j, "l": l, "v": v, "w": w, "residual": r})
    return {"residual": float(np.sqrt(total)), "per_triple": per}


def cocycle_residual(U: UnitaryCocycle) -> float:
    """Root-sum-of-squares of the Frobenius gaps between both sides, over all triples."""
    return residual_report(U)["residual"]


def is_cocycle(U: UnitaryCocycle, tol: float = 1e-9) -> bool:
    return cocycle_residual(U) <= tol


def residual_euclidean_gradient(U: UnitaryCocycle) -> tuple[float, dict[BlockKey, np.ndarray]]:
    """Squared residual and its Euclidean gradient ``G`` per block.

    ``G`` is normalised so that the first-order change of the squared
    residual under ``dU`` is ``Re tr(G^H dU)``.
    """
    s = U.skeleton
    grads = {key: np.zeros_like(b) for key, b in U.blocks.items()}
    total = 0.0
    for i, j, l, v, w in triple_keys(s):
        left, right = _factor_patterns(s, i, j, l, v, w)
        a, b, c = (p.build(U.blocks) for p in left)
        a2, b2, c2 = (p.build(U.blocks) for p in right)
        diff = a @ b @ c - a2 @ b2 @ c2
        total += float(np.vdot(diff, diff).real)
        d2 = 2 * diff
        for sign, (pa, pb, pc), (x, y, z) in ((1, left, (a, b, c)), (-1, right, (a2, b2, c2))):
            pa.pullback(sign * d2 @ (y @ z).conj().T, grads)
            pb.pullback(sign * x.conj().T @ d2 @ z.conj().T, grads)
            pc.pullback(sign * (x @ y).conj().T @ d2, grads)
    return total, grads


def residual_directional(U: UnitaryCocycle, direction: Mapping[BlockKey, np.ndarray]) -> np.ndarray:
    """Derivative of the stacked (left - right) differences along ``direction``."""
    s = U.skeleton
    out = []
    for i, j, l, v, w in triple_keys(s):
        left, right = _factor_patterns(s, i, j, l, v, w)
        d = np.zeros(left[0].shape, dtype=complex)
        for sign, pats in ((1, left), (-1, right)):
            mats = [p.build(U.blocks) for p in pats]
            dmats = [p.build(direction) for p in pats]
            d += sign * (dmats[0] @ mats[1] @ mats[2] + mats[0] @ dmats[1] @ mats[2] + mats[0] @ mats[1] @ dmats[2])
        out.append(d.ravel())
    return np.concatenate(out) if out else np.zeros(0, dtype=complex)


def residual_vector(U: UnitaryCocycle) -> np.ndarray:
    parts = [diff.ravel() for _, diff in _differences(U)]
    return np.concatenate(parts) if parts else np.zeros(0, dtype=complex)


# -- gauge transformations ----------------------------------------------------

def _induced(s: Skeleton, Q: Mapping[GaugeKey, np.ndarray], a: int, b: int, v: str, w: str) -> np.ndarray:
    """Basis change on ``v E_a E_b w`` induced by per-color edge-basis unitaries."""
    paths = s.paths((a, b), v, w)
    index = s.path_index((a, b), v, w)
    t = np.zeros((len(paths), len(paths)), dtype=complex)
    for col, (x, y) in enumerate(paths):
        mid = x.source
        qa = Q.get((a, v, mid))
        qb = Q.get((b, mid, w))
        xs = s.edges_between(a, v, mid)
        ys = s.edges_between(b, mid, w)
        px, py = xs.index(x), ys.index(y)
        for nx, x2 in enumerate(xs):
            ca = qa[nx, px] if qa is not None else float(nx == px)
            if ca == 0:
                continue
            for ny, y2 in enumerate(ys):
                cb = qb[ny, py] if qb is not None else float(ny == py)
                if cb != 0:
                    t[index[(x2, y2)], col] += ca * cb
    return t


def check_gauge(s: Skeleton, Q: Mapping[GaugeKey, np.ndarray]) -> None:
    for (c, v, w), q in Q.items():
        n = len(s.edges_between(c, v, w))
        if np.shape(q) != (n, n):
            raise ValueError(f"gauge block {(c, v, w)}: shape {np.shape(q)}, expected {(n, n)}")


def gauge_transform(U: UnitaryCocycle, Q: Mapping[GaugeKey, np.ndarray]) -> UnitaryCocycle:
    """Change the edge basis of each ``C^{v E_i w}`` by ``Q[(i, v, w)]`` (identity when absent)."""
    s = U.skeleton
    check_gauge(s, Q)
    blocks = {}
    for key, b in U.blocks.items():
        i, j, v, w = key
        if not b.size:
            blocks[key] = b
            continue
        blocks[key] = _induced(s, Q, i, j, v, w) @ b @ _induced(s, Q, j, i, v, w).conj().T
    return UnitaryCocycle(s, blocks)


def domain_gauge(s: Skeleton, Q: Mapping[GaugeKey, np.ndarray], key: BlockKey) -> np.ndarray:
    """The basis change a gauge induces on the domain (``(j, i)`` side) of a block."""
    i, j, v, w = key
    return _induced(s, Q, j, i, v, w)


def random_gauge(s: Skeleton, rng: np.random.Generator) -> dict[GaugeKey, np.ndarray]:
    return {
        (c, v, w): random_unitary(len(s.edges_between(c, v, w)), rng)
        for c in s.colors
        for v, w in s.vertex_pairs()
        if s.edges_between(c, v, w)
    }
