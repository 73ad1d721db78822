"""Reference computations that share no code with the package."""
import itertools
from math import gcd

import numpy as np


def single_vertex_rule_count(n):
    """Brute-force count of associative factorisation rules for a single vertex, k = 3.

    Edges are integers; the (j, i) path f e has index f * n_i + e and the
    (i, j) path e f has index e * n_j + f.  Every triple of block bijections
    is tried.
    """
    perms = {
        pair: list(itertools.permutations(range(n[pair[0]] * n[pair[1]])))
        for pair in ((0, 1), (0, 2), (1, 2))
    }
    count = 0
    for p01, p02, p12 in itertools.product(perms[(0, 1)], perms[(0, 2)], perms[(1, 2)]):
        F = {(0, 1): p01, (0, 2): p02, (1, 2): p12}

        def fwd(i, j, fj, ei):
            return divmod(F[(i, j)][fj * n[i] + ei], n[j])

        ok = True
        for g, f, e in itertools.product(range(n[2]), range(n[1]), range(n[0])):
            f1, g1 = fwd(1, 2, g, f)
            e1, g2 = fwd(0, 2, g1, e)
            e2, f2 = fwd(0, 1, f1, e1)
            a = (e2, f2, g2)
            e1, f1 = fwd(0, 1, f, e)
            e2, g1 = fwd(0, 2, g, e1)
            f2, g2 = fwd(1, 2, g1, f1)
            if a != (e2, f2, g2):
                ok = False
                break
        count += ok
    return count


def kron_residual(blocks, n):
    """Cocycle residual of a single-vertex cocycle via Kronecker products.

    ``blocks[(i, j)]`` maps C^{n_j} (x) C^{n_i} to C^{n_i} (x) C^{n_j}.
    """
    total = 0.0
    for i, j, l in itertools.combinations(range(len(n)), 3):
        I = lambda m: np.eye(n[m])
        lhs = np.kron(blocks[(i, j)], I(l)) @ np.kron(I(j), blocks[(i, l)]) @ np.kron(blocks[(j, l)], I(i))
        rhs = np.kron(I(i), blocks[(j, l)]) @ np.kron(blocks[(i, l)], I(j)) @ np.kron(I(l), blocks[(i, j)])
        total += np.linalg.norm(lhs - rhs) ** 2
    return np.sqrt(total)


def _ext_gcd(a, b):
    if b == 0:
        return (abs(a), 1 if a >= 0 else -1, 0)
    g, x, y = _ext_gcd(b, a % b)
    return g, y, x - (a // b) * y


def smith_diagonal(A):
    """Invariant factors by extended-gcd elimination followed by gcd/lcm sorting."""
    a = [list(map(int, r)) for r in A]
    m = len(a)
    n = len(a[0]) if m else 0
    diag = []
    for t in range(min(m, n)):
        nz = [(i, j) for i in range(t, m) for j in range(t, n) if a[i][j]]
        if not nz:
            break
        i, j = nz[0]
        a[t], a[i] = a[i], a[t]
        for r in a:
            r[t], r[j] = r[j], r[t]
        dirty = True
        while dirty:
            dirty = False
            for i in range(t + 1, m):
                if a[i][t]:
                    x, y = a[t][t], a[i][t]
                    if y % x == 0:
                        a[i] = [q - (y // x) * p for p, q in zip(a[t], a[i])]
                        continue
                    g, s, u = _ext_gcd(x, y)
                    row_t = [s * p + u * q for p, q in zip(a[t], a[i])]
                    row_i = [(-y // g) * p + (x // g) * q for p, q in zip(a[t], a[i])]
                    a[t], a[i] = row_t, row_i
            for j in range(t + 1, n):
                if a[t][j]:
                    x, y = a[t][t], a[t][j]
                    if y % x == 0:
                        for r in a:
                            r[j] -= (y // x) * r[t]
                        continue
                    dirty = True
                    g, s, u = _ext_gcd(x, y)
                    for r in a:
                        p, q = r[t], r[j]
                        r[t], r[j] = s * p + u * q, (-y // g) * p + (x // g) * q
        diag.append(abs(a[t][t]))
    changed = True
    while changed:
        changed = False
        for p in range(len(diag)):
            for q in range(p + 1, len(diag)):
                x, y = diag[p], diag[q]
                g = gcd(x, y)
                l = x * y // g if g else 0
                if (x, y) != (g, l):
                    diag[p], diag[q] = g, l
                    changed = True
    return diag


def _det(m):
    # fraction-free Bareiss
    a = [list(r) for r in m]
    n = len(a)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k]:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[-1][-1]


def determinantal_divisors(A):
    """Invariant factors as quotients of gcds of k x k minors."""
    m = len(A)
    n = len(A[0]) if m else 0
    out, prev = [], 1
    for k in range(1, min(m, n) + 1):
        g = 0
        for rows in itertools.combinations(range(m), k):
            for cols in itertools.combinations(range(n), k):
                g = gcd(g, _det([[A[r][c] for c in cols] for r in rows]))
        if g == 0:
            break
        out.append(g // prev)
        prev = g
    return out


def commuting_pair(rng, n):
    """Nonnegative commuting integer matrices: a random matrix and a polynomial in it."""
    kind = rng.integers(3)
    if kind == 0:
        a = rng.integers(0, 3, size=(n, n))
        c = rng.integers(0, 3, size=3)
        b = c[0] * np.eye(n, dtype=int) + c[1] * a + c[2] * (a @ a)
    elif kind == 1:
        a = np.diag(rng.integers(0, 5, size=n))
        b = np.diag(rng.integers(0, 5, size=n))
    else:
        perm = np.eye(n, dtype=int)[rng.permutation(n)]
        a = perm * int(rng.integers(1, 4)) + np.eye(n, dtype=int) * int(rng.integers(0, 3))
        b = perm @ perm + np.eye(n, dtype=int) * int(rng.integers(1, 3))
    return a.astype(int), b.astype(int)
