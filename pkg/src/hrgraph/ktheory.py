"""Exact integer linear algebra and K-groups of 2-graph C*-algebras.

Everything here works on Python integers, so there is no overflow.
Smith normal form uses the smallest nonzero absolute value as pivot, with
ties broken by row-major position.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class IntMatrix:
    rows: int
    cols: int
    entries: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if len(self.entries) != self.rows or any(len(r) != self.cols for r in self.entries):
            raise ValueError("entry count does not match dimensions")

    @classmethod
    def of(cls, data, rows: int | None = None, cols: int | None = None) -> "IntMatrix":
        if isinstance(data, IntMatrix):
            return data
        if isinstance(data, np.ndarray):
            if data.ndim != 2:
                raise ValueError("expected a 2-d array")
            return cls(data.shape[0], data.shape[1], tuple(tuple(int(x) for x in r) for r in data.tolist()))
        entries = tuple(tuple(int(x) for x in r) for r in data)
        if rows is None:
            rows = len(entries)
        if cols is None:
            cols = len(entries[0]) if entries else 0
        return cls(rows, cols, entries)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "IntMatrix":
        return cls(rows, cols, tuple((0,) * cols for _ in range(rows)))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(n, n, tuple(tuple(int(r == c) for c in range(n)) for r in range(n)))

    def __getitem__(self, rc: tuple[int, int]) -> int:
        return self.entries[rc[0]][rc[1]]

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        cols = list(zip(*other.entries)) if other.rows else [()] * other.cols
        return IntMatrix(self.rows, other.cols, tuple(
            tuple(sum(a * b for a, b in zip(row, col)) for col in cols) for row in self.entries
        ))

    def __add__(self, other: "IntMatrix") -> "IntMatrix":
        return IntMatrix(self.rows, self.cols, tuple(
            tuple(a + b for a, b in zip(r1, r2)) for r1, r2 in zip(self.entries, other.entries)
        ))

    def __neg__(self) -> "IntMatrix":
        return IntMatrix(self.rows, self.cols, tuple(tuple(-a for a in r) for r in self.entries))

    def __sub__(self, other: "IntMatrix") -> "IntMatrix":
        return self + (-other)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def T(self) -> "IntMatrix":
        return IntMatrix(self.cols, self.rows, tuple(zip(*self.entries)) if self.rows else tuple(() for _ in range(self.cols)))

    def column(self, c: int) -> tuple[int, ...]:
        return tuple(r[c] for r in self.entries)

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self.entries]

    def is_zero(self) -> bool:
        return all(x == 0 for r in self.entries for x in r)


def hstack(*ms: IntMatrix) -> IntMatrix:
    rows = ms[0].rows
    return IntMatrix(rows, sum(m.cols for m in ms), tuple(
        sum((m.entries[r] for m in ms), ()) for r in range(rows)
    ))


def vstack(*ms: IntMatrix) -> IntMatrix:
    return IntMatrix(sum(m.rows for m in ms), ms[0].cols, sum((m.entries for m in ms), ()))


@dataclass(frozen=True)
class SmithDecomposition:
    """``L @ A @ R == D`` with ``L``, ``R`` unimodular and ``D`` in Smith form."""

    D: IntMatrix
    L: IntMatrix
    R: IntMatrix

    @property
    def diagonal(self) -> list[int]:
        return [self.D[t, t] for t in range(min(self.D.shape))]

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal if d != 0)


def smith_normal_form(A) -> SmithDecomposition:
    A = IntMatrix.of(A)
    m, n = A.shape
    a = [list(r) for r in A.entries]
    left = [[int(i == j) for j in range(m)] for i in range(m)]
    right = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(i: int, j: int) -> None:
        a[i], a[j] = a[j], a[i]
        left[i], left[j] = left[j], left[i]

    def swap_cols(i: int, j: int) -> None:
        for row in a:
            row[i], row[j] = row[j], row[i]
        for row in right:
            row[i], row[j] = row[j], row[i]

    def add_row(dst: int, src: int, q: int) -> None:
        # row dst += q * row src
        a[dst] = [x + q * y for x, y in zip(a[dst], a[src])]
        left[dst] = [x + q * y for x, y in zip(left[dst], left[src])]

    def add_col(dst: int, src: int, q: int) -> None:
        for row in a:
            row[dst] += q * row[src]
        for row in right:
            row[dst] += q * row[src]

    for t in range(min(m, n)):
        best = None
        for i in range(t, m):
            for j in range(t, n):
                x = abs(a[i][j])
                if x and (best is None or x < best[0]):
                    best = (x, i, j)
        if best is None:
            break
        _, i, j = best
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            p = a[t][t]
            for i in range(t + 1, m):
                if a[i][t]:
                    add_row(i, t, -(a[i][t] // p))
            for j in range(t + 1, n):
                if a[t][j]:
                    add_col(j, t, -(a[t][j] // p))
            rest = [(abs(a[i][t]), i, t) for i in range(t + 1, m) if a[i][t]]
            rest += [(abs(a[t][j]), t, j) for j in range(t + 1, n) if a[t][j]]
            if rest:
                # a remainder smaller than the pivot becomes the new pivot
                _, i, j = min(rest, key=lambda r: (r[0], r[1], r[2]))
                if i != t:
                    swap_rows(t, i)
                else:
                    swap_cols(t, j)
                continue
            bad = next(
                ((i, j) for i in range(t + 1, m) for j in range(t + 1, n) if a[i][j] % p),
                None,
            )
            if bad is None:
                break
            add_row(t, bad[0], 1)
        if a[t][t] < 0:
            a[t] = [-x for x in a[t]]
            left[t] = [-x for x in left[t]]
    return SmithDecomposition(IntMatrix.of(a, m, n), IntMatrix.of(left, m, m), IntMatrix.of(right, n, n))


def invariant_factors(A) -> list[int]:
    """Nonzero diagonal of the Smith form (units included)."""
    return [d for d in smith_normal_form(A).diagonal if d]


@dataclass(frozen=True)
class AbelianGroup:
    """``Z^free_rank + Z_{d1} + ... `` with ``d1 | d2 | ...`` and every ``d >= 2``."""

    free_rank: int = 0
    torsion: tuple[int, ...] = ()

    @classmethod
    def canonical(cls, free_rank: int, factors: Iterable[int] = ()) -> "AbelianGroup":
        """Group ``Z^free_rank + sum Z_d`` for arbitrary orders ``d``; ``d = 0`` adds a free summand."""
        factors = [abs(int(d)) for d in factors]
        free_rank += sum(1 for d in factors if d == 0)
        finite = [d for d in factors if d > 1]
        if not finite:
            return cls(free_rank, ())
        diag = [[d if r == c else 0 for c in range(len(finite))] for r, d in enumerate(finite)]
        merged = [d for d in smith_normal_form(diag).diagonal if d > 1]
        return cls(free_rank, tuple(merged))

    def __add__(self, other: "AbelianGroup") -> "AbelianGroup":
        return AbelianGroup.canonical(self.free_rank + other.free_rank, self.torsion + other.torsion)

    def is_trivial(self) -> bool:
        return self.free_rank == 0 and not self.torsion

    def to_dict(self) -> dict:
        return {"free_rank": self.free_rank, "torsion": list(self.torsion)}

    @classmethod
    def from_dict(cls, data) -> "AbelianGroup":
        return cls.canonical(int(data["free_rank"]), data["torsion"])

    def __str__(self) -> str:
        parts = []
        if self.free_rank:
            parts.append("Z" if self.free_rank == 1 else f"Z^{self.free_rank}")
        parts += [f"Z_{d}" for d in self.torsion]
        return " + ".join(parts) if parts else "0"


def cokernel(A) -> AbelianGroup:
    """``Z^rows / image(A)``."""
    A = IntMatrix.of(A)
    snf = smith_normal_form(A)
    return AbelianGroup.canonical(A.rows - snf.rank, [d for d in snf.diagonal if d])


def kernel_basis(A) -> list[tuple[int, ...]]:
    """Basis of the integer kernel: columns of ``R`` beyond the rank."""
    A = IntMatrix.of(A)
    snf = smith_normal_form(A)
    return [snf.R.column(c) for c in range(snf.rank, A.cols)]


def _columns_to_matrix(vectors: Sequence[Sequence[int]], rows: int) -> IntMatrix:
    return IntMatrix(rows, len(vectors), tuple(tuple(v[r] for v in vectors) for r in range(rows)))


def solve_in_lattice(K: IntMatrix, b: Sequence[int]) -> tuple[int, ...] | None:
    """Integer ``c`` with ``K @ c == b``, or ``None`` when ``b`` is outside the column lattice."""
    snf = smith_normal_form(K)
    y = snf.L @ IntMatrix(len(b), 1, tuple((int(x),) for x in b))
    z = []
    for t in range(K.cols):
        d = snf.D[t, t] if t < K.rows else 0
        yt = y[t, 0] if t < K.rows else 0
        if d == 0:
            if yt != 0:
                return None
            z.append(0)
        elif yt % d:
            return None
        else:
            z.append(yt // d)
    if any(y[t, 0] for t in range(K.cols, K.rows)):
        return None
    c = snf.R @ IntMatrix(K.cols, 1, tuple((x,) for x in z))
    if (K @ c).column(0) != tuple(int(x) for x in b):
        return None
    return c.column(0)


def subquotient(A, B) -> AbelianGroup:
    """``ker(A) / image(B)``; requires ``A @ B == 0``."""
    A, B = IntMatrix.of(A), IntMatrix.of(B)
    if A.cols != B.rows:
        raise ValueError(f"cannot compose {A.shape} with {B.shape}")
    if not (A @ B).is_zero():
        raise ValueError("image(B) is not contained in ker(A)")
    basis = kernel_basis(A)
    if not basis:
        return AbelianGroup()
    K = _columns_to_matrix(basis, A.cols)
    coords = []
    for c in range(B.cols):
        x = solve_in_lattice(K, B.column(c))
        if x is None:
            raise ValueError("image(B) is not contained in ker(A)")
        coords.append(x)
    C = _columns_to_matrix(coords, len(basis)) if coords else IntMatrix.zeros(len(basis), 0)
    return cokernel(C)


def evans_maps(M1, M2) -> tuple[IntMatrix, IntMatrix]:
    """``(1 - M1^t, 1 - M2^t)`` and the column map ``(M2^t - 1 ; 1 - M1^t)``."""
    M1, M2 = IntMatrix.of(M1), IntMatrix.of(M2)
    if M1.rows != M1.cols or M2.shape != M1.shape:
        raise ValueError(f"need two square matrices of equal size, got {M1.shape} and {M2.shape}")
    one = IntMatrix.identity(M1.rows)
    row = hstack(one - M1.T, one - M2.T)
    col = vstack(M2.T - one, one - M1.T)
    return row, col


def ktheory_2graph(M1, M2) -> tuple[AbelianGroup, AbelianGroup]:
    """``(K0, K1)`` of a row-finite 2-graph C*-algebra from its adjacency matrices."""
    M1, M2 = IntMatrix.of(M1), IntMatrix.of(M2)
    row, col = evans_maps(M1, M2)
    if any(x < 0 for m in (M1, M2) for r in m.entries for x in r):
        raise ValueError("adjacency matrices must be nonnegative")
    if M1 @ M2 != M2 @ M1:
        raise ValueError("adjacency matrices of a 2-skeleton must commute")
    k0 = cokernel(row) + AbelianGroup(len(kernel_basis(col)))
    k1 = subquotient(row, col)
    return k0, k1
