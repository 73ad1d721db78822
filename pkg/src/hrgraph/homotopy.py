"""Continuous paths of unitary cocycles.

Geodesics interpolate each block independently on the unitary group.  For
k >= 3 the cocycle identity is a real constraint, and :func:`path_search`
pushes interior samples back onto the solution set with a damped
Gauss-Newton iteration on the unitary manifold (polar retraction).  A
failed search says nothing about whether a path exists.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import scipy.linalg

from .kgraph import BlockKey
from .skeleton import Skeleton, ValidationReport
from .unitary_cocycle import (
    GaugeKey,
    UNITARY_TOL,
    UnitaryCocycle,
    _factor_patterns,
    check_gauge,
    cocycle_residual,
    gauge_transform,
    residual_euclidean_gradient,
    residual_vector,
    triple_keys,
)

log = logging.getLogger(__name__)

ENDPOINT_TOL = 1e-12


# -- unitary logarithms -------------------------------------------------------

def branch_cut(angles: np.ndarray) -> float:
    """Angle in [0, 2pi) at the midpoint of the widest gap between eigenvalue angles.

    Ties go to the smallest midpoint angle.
    """
    if len(angles) == 0:
        return float(np.pi)
    a = np.sort(np.mod(angles, 2 * np.pi))
    nxt = np.append(a[1:], a[0] + 2 * np.pi)
    gaps = nxt - a
    mids = np.mod(a + gaps / 2, 2 * np.pi)
    widest = gaps.max()
    candidates = mids[gaps >= widest - 1e-12]
    return float(candidates.min())


def unitary_eig(W: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(Z, theta)`` with ``W = Z diag(exp(i theta)) Z^H`` and theta on the rotated branch.

    The branch cut sits at :func:`branch_cut` of the spectrum, and every
    angle lies in ``(cut - 2pi, cut)``.  With the cut at pi this is the
    principal logarithm.
    """
    if W.size == 0:
        return np.zeros((0, 0), dtype=complex), np.zeros(0)
    T, Z = scipy.linalg.schur(W, output="complex")
    phases = np.angle(np.diagonal(T))
    cut = branch_cut(phases)
    theta = cut - 2 * np.pi + np.mod(phases - cut, 2 * np.pi)
    return Z, theta


def unitary_log(W: np.ndarray) -> np.ndarray:
    Z, theta = unitary_eig(W)
    return (Z * (1j * theta)) @ Z.conj().T


def unitary_power(W: np.ndarray, t: float) -> np.ndarray:
    Z, theta = unitary_eig(W)
    return (Z * np.exp(1j * t * theta)) @ Z.conj().T


def polar(M: np.ndarray) -> np.ndarray:
    """Unitary polar factor of ``M``."""
    if M.size == 0:
        return M
    u, _, vh = np.linalg.svd(M)
    return u @ vh


# -- paths ---------------------------------------------------------------------

@dataclass
class CocyclePath:
    skeleton: Skeleton
    ts: list[float]
    cocycles: list[UnitaryCocycle]
    residuals: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        if len(self.ts) != len(self.cocycles):
            raise ValueError("one cocycle per sample parameter")
        if not self.residuals:
            self.residuals = [cocycle_residual(U) for U in self.cocycles]

    def __len__(self) -> int:
        return len(self.ts)

    def adjacent_distances(self) -> list[float]:
        return [a.distance(b) for a, b in zip(self.cocycles, self.cocycles[1:])]

    @property
    def max_adjacent_distance(self) -> float:
        return max(self.adjacent_distances(), default=0.0)

    def to_dict(self) -> dict[str, Any]:
        return {
            "samples": [
                {"t": t, "cocycle": U.to_dict(), "residual": r}
                for t, U, r in zip(self.ts, self.cocycles, self.residuals)
            ],
            "max_adjacent_distance": self.max_adjacent_distance,
        }

    @classmethod
    def from_dict(cls, s: Skeleton, data: Any) -> "CocyclePath":
        samples = data["samples"]
        return cls(
            s,
            [float(x["t"]) for x in samples],
            [UnitaryCocycle.from_dict(s, x["cocycle"]) for x in samples],
            [float(x["residual"]) for x in samples],
        )


def load_path(s: Skeleton, path: str | Path) -> CocyclePath:
    with open(path, encoding="utf-8") as fh:
        return CocyclePath.from_dict(s, json.load(fh))


def validate_path(
    path: CocyclePath,
    start: UnitaryCocycle | None = None,
    end: UnitaryCocycle | None = None,
    tol: float | None = None,
    continuity: float | None = None,
) -> ValidationReport:
    """Re-check a path from scratch: endpoints, unitarity, residuals, spacing."""
    report = ValidationReport()
    ts = path.ts
    if not ts or ts[0] != 0.0 or ts[-1] != 1.0 or any(b <= a for a, b in zip(ts, ts[1:])):
        report.add("parameters", detail="sample parameters must increase from 0 to 1")
    for n, U in enumerate(path.cocycles):
        defect = U.unitarity_defect()
        if defect > UNITARY_TOL:
            report.add("unitarity", sample=n, defect=defect)
        if tol is not None:
            r = cocycle_residual(U)
            if r > tol:
                report.add("residual", sample=n, residual=r)
    for name, U, ref in (("start", path.cocycles[0], start), ("end", path.cocycles[-1], end)):
        if ref is not None:
            gap = max((float(np.abs(U[k] - ref[k]).max()) for k in ref.keys() if ref[k].size), default=0.0)
            if gap > ENDPOINT_TOL:
                report.add("endpoint", which=name, gap=gap)
    if continuity is not None and path.max_adjacent_distance > continuity:
        report.add("continuity", max_adjacent_distance=path.max_adjacent_distance, bound=continuity)
    return report


def _check_same(U0: UnitaryCocycle, U1: UnitaryCocycle) -> None:
    if U0.skeleton != U1.skeleton:
        raise ValueError("endpoints live on different skeletons")


def _interpolate(U0: UnitaryCocycle, U1: UnitaryCocycle, ts) -> list[UnitaryCocycle]:
    eig = {k: unitary_eig(U0[k].conj().T @ U1[k]) for k in U0.keys()}
    out = []
    for t in ts:
        blocks = {}
        for k, (Z, theta) in eig.items():
            blocks[k] = U0[k] @ ((Z * np.exp(1j * t * theta)) @ Z.conj().T) if Z.size else U0[k]
        out.append(UnitaryCocycle(U0.skeleton, blocks))
    return out


def geodesic_path(U0: UnitaryCocycle, U1: UnitaryCocycle, samples: int = 64) -> CocyclePath:
    """Blockwise ``U0 exp(t log(U0^H U1))`` at ``t = 0, 1/samples, ..., 1``."""
    _check_same(U0, U1)
    if samples < 1:
        raise ValueError("need at least one interval")
    ts = [n / samples for n in range(samples + 1)]
    cocycles = _interpolate(U0, U1, ts)
    cocycles[0], cocycles[-1] = U0, U1
    return CocyclePath(U0.skeleton, ts, cocycles)


def gauge_power(Q: Mapping[GaugeKey, np.ndarray], t: float) -> dict[GaugeKey, np.ndarray]:
    return {k: unitary_power(np.asarray(q, dtype=complex), t) for k, q in Q.items()}


def conjugation_path(
    U: UnitaryCocycle, Q: Mapping[GaugeKey, np.ndarray], samples: int = 64, tol: float = 1e-9
) -> CocyclePath:
    """Gauge-transform ``U`` along the geodesic from the identity gauge to ``Q``."""
    if cocycle_residual(U) > tol:
        raise ValueError("conjugation_path needs a cocycle")
    check_gauge(U.skeleton, Q)
    ts = [n / samples for n in range(samples + 1)]
    cocycles = [U] + [gauge_transform(U, gauge_power(Q, t)) for t in ts[1:-1]] + [gauge_transform(U, Q)]
    return CocyclePath(U.skeleton, ts, cocycles)


# -- optimisation on the unitary manifold ------------------------------------

def _skew(X: np.ndarray) -> np.ndarray:
    return (X - X.conj().T) / 2


def residual_gradient(U: UnitaryCocycle) -> dict[BlockKey, np.ndarray]:
    """Riemannian gradient of the squared residual, as a skew-Hermitian ``Omega`` per block.

    The tangent vector at ``U_b`` is ``U_b @ Omega_b``; along ``U_b exp(sX)``
    the squared residual changes at rate ``Re tr(Omega_b^H X)``.
    """
    _, grads = residual_euclidean_gradient(U)
    return {k: _skew(U[k].conj().T @ g) if g.size else g for k, g in grads.items()}


def gradient_norm(grad: Mapping[BlockKey, np.ndarray]) -> float:
    return float(np.sqrt(sum(np.vdot(g, g).real for g in grad.values())))


def skew_basis(n: int) -> list[np.ndarray]:
    """Real orthonormal basis of the n x n skew-Hermitian matrices (Frobenius inner product)."""
    out = []
    for a in range(n):
        m = np.zeros((n, n), dtype=complex)
        m[a, a] = 1j
        out.append(m)
    for a in range(n):
        for b in range(a + 1, n):
            m = np.zeros((n, n), dtype=complex)
            m[a, b], m[b, a] = 1, -1
            out.append(m / np.sqrt(2))
            m = np.zeros((n, n), dtype=complex)
            m[a, b] = m[b, a] = 1j
            out.append(m / np.sqrt(2))
    return out


def _tangent_jacobian(U: UnitaryCocycle) -> tuple[np.ndarray, list[tuple[BlockKey, np.ndarray]]]:
    """Real Jacobian of the stacked residual along ``U_b exp(s X)`` for each basis ``X``."""
    s = U.skeleton
    directions = [(k, X) for k in U.keys() if U[k].size for X in skew_basis(len(U[k]))]
    items = []
    for key in triple_keys(s):
        left, right = _factor_patterns(s, *key)
        items.append([(sign, pats, [p.build(U.blocks) for p in pats]) for sign, pats in ((1, left), (-1, right))])
    cols = []
    for k, X in directions:
        delta = {k: U[k] @ X}
        parts = []
        for sides in items:
            d = None
            for sign, pats, (a, b, c) in sides:
                for n, p in enumerate(pats):
                    if not any(part[0] == k for part in p.parts):
                        continue
                    dm = p.build(delta)
                    term = (dm @ b @ c, a @ dm @ c, a @ b @ dm)[n]
                    d = sign * term if d is None else d + sign * term
            if d is None:
                d = np.zeros(sides[0][2][0].shape, dtype=complex)
            parts.append(d.ravel())
        vec = np.concatenate(parts) if parts else np.zeros(0, dtype=complex)
        cols.append(np.concatenate([vec.real, vec.imag]))
    J = np.stack(cols, axis=1) if cols else np.zeros((0, 0))
    return J, directions


def _retract(U: UnitaryCocycle, directions, x: np.ndarray) -> UnitaryCocycle:
    steps: dict[BlockKey, np.ndarray] = {}
    for (k, X), c in zip(directions, x):
        steps[k] = steps.get(k, 0) + c * X
    return U.replace({k: polar(U[k] @ (np.eye(len(U[k])) + om)) for k, om in steps.items()})


def project_to_cocycles(
    U: UnitaryCocycle,
    tol: float = 1e-8,
    max_iters: int = 5000,
    rng: np.random.Generator | None = None,
) -> tuple[UnitaryCocycle, float, int]:
    """Move ``U`` onto the cocycle set by damped Gauss-Newton steps.

    Returns the final cocycle, its residual and the number of iterations.
    A stalled iteration is kicked by a small random tangent perturbation
    drawn from ``rng``.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    r = residual_vector(U)
    res = float(np.linalg.norm(r))
    mu = 1e-3
    stall = 0
    it = 0
    while res > tol and it < max_iters:
        it += 1
        J, directions = _tangent_jacobian(U)
        rr = np.concatenate([r.real, r.imag])
        while True:
            A = np.vstack([J, np.sqrt(mu) * np.eye(J.shape[1])])
            b = np.concatenate([-rr, np.zeros(J.shape[1])])
            x = np.linalg.lstsq(A, b, rcond=None)[0]
            cand = _retract(U, directions, x)
            r_new = residual_vector(cand)
            res_new = float(np.linalg.norm(r_new))
            if res_new < res:
                mu = max(mu / 3, 1e-12)
                break
            mu *= 4
            if mu > 1e8:
                break
        if res_new < res:
            stall = 0 if res_new < 0.9 * res else stall + 1
            U, r, res = cand, r_new, res_new
        else:
            stall += 1
        if stall >= 20 or mu > 1e8:
            kick = rng.standard_normal(len(directions)) * 1e-2
            U = _retract(U, directions, kick)
            r = residual_vector(U)
            res = float(np.linalg.norm(r))
            mu, stall = 1e-3, 0
    return U, res, it


@dataclass
class FailureReport:
    reason: str
    ts: list[float]
    residuals: list[float]
    iterations: list[int]
    max_adjacent_distance: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "status": "failure",
            "reason": self.reason,
            "residual_profile": [{"t": t, "residual": r} for t, r in zip(self.ts, self.residuals)],
            "iterations": self.iterations,
            "total_iterations": int(sum(self.iterations)),
            "best_residual": min(self.residuals, default=0.0),
            "worst_residual": max(self.residuals, default=0.0),
            "max_adjacent_distance": self.max_adjacent_distance,
        }


class PathSearchFailed(RuntimeError):
    """No path was found within budget.  Not evidence that none exists."""

    def __init__(self, report: FailureReport):
        super().__init__(report.reason)
        self.report = report


@dataclass
class SearchConfig:
    samples: int = 64
    tol: float = 1e-8
    max_iters: int = 5000
    seed: int = 0
    continuity: float = 0.2
    max_samples: int = 1024


def path_search(U0: UnitaryCocycle, U1: UnitaryCocycle, cfg: SearchConfig | None = None) -> CocyclePath:
    """Look for a path of cocycles from ``U0`` to ``U1``.

    Starts from the blockwise geodesic, projects every interior sample onto
    the cocycle set and bisects intervals whose endpoints are further apart
    than ``cfg.continuity``.  Raises :class:`PathSearchFailed` otherwise.
    """
    cfg = cfg or SearchConfig()
    _check_same(U0, U1)
    for name, U in (("start", U0), ("end", U1)):
        r = cocycle_residual(U)
        if r > cfg.tol:
            raise ValueError(f"{name} point is not a cocycle (residual {r:.3g})")
    rng = np.random.default_rng(cfg.seed)
    ts = [n / cfg.samples for n in range(cfg.samples + 1)]
    points = _interpolate(U0, U1, ts)
    points[0], points[-1] = U0, U1
    residuals = [0.0] * len(ts)
    iters = [0] * len(ts)
    residuals[0], residuals[-1] = cocycle_residual(U0), cocycle_residual(U1)

    def failure(reason: str) -> PathSearchFailed:
        dist = max((a.distance(b) for a, b in zip(points, points[1:])), default=0.0)
        return PathSearchFailed(FailureReport(reason, list(ts), list(residuals), list(iters), dist))

    def settle(n: int) -> None:
        points[n], residuals[n], iters[n] = project_to_cocycles(points[n], cfg.tol, cfg.max_iters, rng)

    for n in range(1, len(ts) - 1):
        settle(n)
        if residuals[n] > cfg.tol:
            raise failure(f"sample t={ts[n]:.6g} stuck at residual {residuals[n]:.3g}")
    while True:
        far = [n for n, (a, b) in enumerate(zip(points, points[1:])) if a.distance(b) > cfg.continuity]
        if not far:
            break
        if len(ts) + len(far) > cfg.max_samples + 1:
            raise failure("continuity bound not met within the sample budget")
        log.debug("refining %d intervals", len(far))
        for n in reversed(far):
            mid = _interpolate(points[n], points[n + 1], [0.5])[0]
            ts.insert(n + 1, (ts[n] + ts[n + 1]) / 2)
            points.insert(n + 1, mid)
            residuals.insert(n + 1, 0.0)
            iters.insert(n + 1, 0)
            settle(n + 1)
            if residuals[n + 1] > cfg.tol:
                raise failure(f"sample t={ts[n + 1]:.6g} stuck at residual {residuals[n + 1]:.3g}")
    return CocyclePath(U0.skeleton, ts, points, residuals)
